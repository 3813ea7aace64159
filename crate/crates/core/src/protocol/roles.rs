//! The scientist and database-owner roles.

use std::collections::BTreeSet;
use std::ops::Range;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rayon::prelude::*;

use super::context::{bootstrap_params, Contexts};
use super::data::{Database, SelectionMatrix};
use super::profile::Profile;
use super::wire::{self, Kind, Reader, Writer};
use crate::bootstrap::{circuit_galois_exponents, Bootstrapper};
use crate::ckks::{rotation_key_exponent, Encoder, Evaluator};
use crate::error::{Error, Result, StageExt};
use crate::pfe::{apply_plan, build_test_vector, lookup_plan, FunctionSpec, TestVector};
use crate::repack::{repack_batches, RepackKeySet};
use crate::ring::sample::{prng, Prng};
use crate::ring::{Form, RingParams};
use crate::rlwe::{
    decrypt, encrypt_sk, relin_key_gen, Ciphertext, Domain, Gadget, GaloisKeys, MergeTree, SecretKey, SwitchingKey,
};
use crate::threshold::{eval_chain, eval_private_threshold, MinimaxChain, Operand, ThresholdParams};

/// Gadget of the small-ring keys: one prime per digit, refined in base `2^base2`.
pub(crate) fn small_gadget(p: &Profile) -> Gadget {
    Gadget::with_base2(p.repack_base2)
}

/// Big-ring keys use one RNS digit per `special count` primes.
pub(crate) fn big_gadget(p: &Profile) -> Gadget {
    Gadget::rns(p.special.count.max(1))
}

/// Exponents of every Galois key the database owner uses in the big ring.
pub fn required_exponents(ctx: &Contexts) -> Vec<usize> {
    profile_exponents(&ctx.profile)
}

pub(crate) fn profile_exponents(p: &Profile) -> Vec<usize> {
    if !p.has_big_ring() {
        return Vec::new();
    }
    let slots = p.big_degree / 2;
    let mut set: BTreeSet<usize> = circuit_galois_exponents(p.big_degree, &bootstrap_params(p))
        .into_iter()
        .collect();
    set.extend(
        Evaluator::inner_sum_rotations(slots)
            .into_iter()
            .map(|r| rotation_key_exponent(r, slots, p.big_degree)),
    );
    set.into_iter().collect()
}

/// The scientist's secrets: one per small ring, plus the bootstrapping secret.
#[derive(Clone, Debug, PartialEq)]
pub struct ScientistSecrets {
    pub small: Vec<SecretKey>,
    pub big: Option<SecretKey>,
}

/// Evaluation keys sent to the database owner.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalKeySet {
    /// Identifies the scientist's key hierarchy.
    pub key_id: u64,
    pub repack: RepackKeySet,
    /// `merge[i]` merges ring `i` into ring `i + 1`.
    pub merge: Vec<SwitchingKey>,
    pub relin: Option<SwitchingKey>,
    pub galois: Option<GaloisKeys>,
}

/// Byte counts per key component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeySizes {
    pub repack: usize,
    pub merge: usize,
    pub bootstrap: usize,
}

impl KeySizes {
    pub fn total(&self) -> usize {
        self.repack + self.merge + self.bootstrap
    }
}

impl EvalKeySet {
    /// Serialized size of each component.
    pub fn sizes(&self, ctx: &Contexts) -> Result<KeySizes> {
        let small = ctx.pfe_ring();
        let repack = repack_keys_len(&self.repack, small);
        let rings = if ctx.big.is_some() {
            ctx.merge_rings()?
        } else {
            Vec::new()
        };
        let merge = self
            .merge
            .iter()
            .zip(rings.iter().skip(1))
            .map(|(k, r)| switching_key_bytes(k, r))
            .sum();
        let bootstrap = match (&self.relin, &self.galois, &ctx.big) {
            (Some(rlk), Some(gk), Some(big)) => {
                let key = switching_key_bytes(rlk, big);
                key + wire::galois_keys_len(big.moduli().len(), key, gk.len())
            }
            _ => 0,
        };
        Ok(KeySizes {
            repack,
            merge,
            bootstrap,
        })
    }
}

fn switching_key_bytes(key: &SwitchingKey, params: &RingParams) -> usize {
    wire::switching_key_len(
        params.moduli().len(),
        params.degree(),
        key.level,
        params.special_count(),
        key.digits.len(),
    )
}

fn repack_keys_len(keys: &RepackKeySet, params: &RingParams) -> usize {
    let key = keys
        .keys
        .iter()
        .next()
        .map_or(0, |(_, k)| switching_key_bytes(k, params));
    wire::ring_header_len(params) + 8 + wire::galois_keys_len(params.moduli().len(), key, keys.len())
}

/// Everything the database owner needs to run one exploration.
#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub key_id: u64,
    pub functions: Vec<TestVector>,
    pub local: MinimaxChain,
    /// Absent in profiles without a bootstrapping ring.
    pub global: Option<MinimaxChain>,
    pub threshold_rows: Option<Ciphertext>,
    pub threshold_score: Option<Ciphertext>,
    pub normalizer: Option<Ciphertext>,
    /// Galois exponents the evaluation needs.
    pub manifest: Vec<usize>,
}

impl Query {
    pub fn function_count(&self) -> usize {
        self.functions.len()
    }
}

/// Decrypted exploration output.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplorationResult {
    pub bit: bool,
    /// Mean of the slot values.
    pub value: f64,
    /// Largest distance of a slot from the mean.
    pub spread: f64,
}

pub struct Scientist {
    ctx: Arc<Contexts>,
    secrets: ScientistSecrets,
    rng: Prng,
}

impl Scientist {
    /// Generates secrets and evaluation keys.
    pub fn setup(ctx: Arc<Contexts>, seed: u64) -> Result<(Self, EvalKeySet)> {
        let mut rng = prng(seed);
        let small = ctx
            .small
            .iter()
            .map(|r| SecretKey::generate(r, &ctx.small_noise(r.degree())?, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let big = match &ctx.big {
            Some(r) => Some(SecretKey::generate(r, &ctx.big_noise()?, &mut rng)?),
            None => None,
        };
        let mut scientist = Self {
            ctx,
            secrets: ScientistSecrets { small, big },
            rng,
        };
        let keys = scientist.eval_keys().stage("scientist generation")?;
        Ok((scientist, keys))
    }

    /// Restores a scientist from stored secrets.
    pub fn from_secrets(ctx: Arc<Contexts>, secrets: ScientistSecrets, seed: u64) -> Result<Self> {
        if secrets.small.len() != ctx.small.len() || secrets.big.is_some() != ctx.big.is_some() {
            return Err(Error::InvalidInput("secrets do not match the profile".into()));
        }
        Ok(Self {
            ctx,
            secrets,
            rng: prng(seed),
        })
    }

    pub fn secrets(&self) -> &ScientistSecrets {
        &self.secrets
    }

    pub fn key_id(&self) -> u64 {
        self.secrets.big.as_ref().unwrap_or(&self.secrets.small[0]).id()
    }

    fn eval_keys(&mut self) -> Result<EvalKeySet> {
        let ctx = self.ctx.clone();
        let small = ctx.pfe_ring();
        let repack = RepackKeySet::generate(
            &self.secrets.small[0],
            small,
            small_gadget(&ctx.profile),
            &ctx.small_noise(small.degree())?,
            &mut self.rng,
        )?;
        let (merge, relin, galois) = match (&ctx.big, &self.secrets.big) {
            (Some(big), Some(big_sk)) => {
                let mut secrets = self.secrets.small.clone();
                secrets.push(big_sk.clone());
                let tree = MergeTree::generate(
                    ctx.merge_rings()?,
                    &secrets,
                    small_gadget(&ctx.profile),
                    0,
                    &ctx.small_noise(small.degree())?,
                    &mut self.rng,
                )?;
                let noise = ctx.big_noise()?;
                let gadget = big_gadget(&ctx.profile);
                let top = big.max_level();
                let rlk = relin_key_gen(big_sk, gadget, top, big, &noise, &mut self.rng)?;
                let gk = GaloisKeys::generate(
                    big_sk,
                    required_exponents(&ctx),
                    gadget,
                    top,
                    big,
                    &noise,
                    &mut self.rng,
                )?;
                (tree.keys, Some(rlk), Some(gk))
            }
            _ => (Vec::new(), None, None),
        };
        Ok(EvalKeySet {
            key_id: self.key_id(),
            repack,
            merge,
            relin,
            galois,
        })
    }

    /// Local threshold chain and the normalizer `1/max|s - t0 + ε/2|` over reachable scores.
    fn local_chain(&self, specs: &[FunctionSpec], t0: f64) -> Result<(MinimaxChain, f64)> {
        let p = &self.ctx.profile;
        let eps = p.score_spacing;
        let on_grid = |v: f64| ((v / eps).round() * eps - v).abs() <= 1e-9 * eps.max(v.abs());
        if !on_grid(t0) {
            return Err(Error::InvalidInput(format!("threshold {t0} is not on the score grid")));
        }
        if let Some(v) = specs.iter().flat_map(|s| &s.table).find(|v| !on_grid(**v)) {
            return Err(Error::InvalidInput(format!("table value {v} is not on the score grid")));
        }
        let high: f64 = specs.iter().map(FunctionSpec::max_value).sum::<f64>().max(0.0);
        let low: f64 = specs
            .iter()
            .map(|s| s.table.iter().copied().fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            .min(0.0);
        let half = 0.5 * eps;
        let span = (high - t0 + half).abs().max((low - t0 + half).abs());
        let norm = 1.0 / span;
        let params = ThresholdParams::new(p.local.alpha, p.local.beta, p.local.degrees.clone(), eps)?;
        if half * norm < params.gap() {
            return Err(Error::InvalidInput(format!(
                "score range {low}..{high} around threshold {t0} needs more than α = {} bits",
                p.local.alpha
            )));
        }
        Ok((MinimaxChain::generate(&params)?, norm))
    }

    fn encrypt_constant(&mut self, value: f64, scale: f64, level: usize) -> Result<Ciphertext> {
        let big = self.ctx.big_ring()?.clone();
        let sk = self.secrets.big.as_ref().expect("big secret exists with the big ring");
        let pt = Encoder::encode_constant(value, scale, level, &big)?;
        encrypt_sk(
            sk,
            &pt.poly,
            scale,
            Domain::Slots,
            &big,
            &self.ctx.big_noise()?,
            &mut self.rng,
        )
    }

    /// Builds a query: rows qualify when their score is at least `t0`; the bit is
    /// set when at least `t1` rows qualify.
    pub fn query(&mut self, specs: &[FunctionSpec], t0: f64, t1: u64) -> Result<Query> {
        let ctx = self.ctx.clone();
        let small = ctx.pfe_ring();
        let n = small.degree();
        if specs.is_empty() {
            return Err(Error::InvalidInput("query needs at least one function".into()));
        }
        if let Some(s) = specs.iter().find(|s| s.len() != n) {
            return Err(Error::InvalidInput(format!(
                "function table has {} entries, the profile's ring degree is {n}",
                s.len()
            )));
        }
        let noise = ctx.small_noise(n)?;
        let scale = ctx.profile.scale();
        let functions = specs
            .iter()
            .map(|s| build_test_vector(s, &self.secrets.small[0], scale, small, &noise, &mut self.rng))
            .collect::<Result<Vec<_>>>()?;
        let (local, norm) = self.local_chain(specs, t0)?;
        let mut query = Query {
            key_id: self.key_id(),
            functions,
            local,
            global: None,
            threshold_rows: None,
            threshold_score: None,
            normalizer: None,
            manifest: required_exponents(&ctx),
        };
        if ctx.big.is_none() {
            return Ok(query);
        }
        let p = &ctx.profile;
        if t1 as usize > p.max_rows {
            return Err(Error::InvalidInput(format!(
                "t1 = {t1} exceeds max_rows {}",
                p.max_rows
            )));
        }
        let global_params = ThresholdParams::new(p.global_alpha(), p.global_beta, p.global_degrees.clone(), 1.0)?;
        let global = MinimaxChain::generate(&global_params)?;
        let level = ctx.big_ring()?.max_level() - ctx.bootstrap_params().depth();
        let q_level = ctx.big_ring()?.q(level).value() as f64;
        query.threshold_score = Some(self.encrypt_constant(t0, scale, level)?);
        query.threshold_rows = Some(self.encrypt_constant(t1 as f64, scale, level)?);
        query.normalizer = Some(self.encrypt_constant(norm, q_level, level)?);
        query.global = Some(global);
        Ok(query)
    }

    /// Reads the broadcast bit from the result ciphertext.
    pub fn decrypt_result(&self, ct: &Ciphertext) -> Result<ExplorationResult> {
        let big = self.ctx.big_ring()?;
        let sk = self.secrets.big.as_ref().expect("big secret exists with the big ring");
        let slots = big.degree() / 2;
        let m = decrypt(sk, ct, big)?;
        let values: Vec<f64> = Encoder::new(big.degree(), slots)?
            .decode_slots(&m, ct.scale, big)?
            .iter()
            .map(|z| z.re)
            .collect();
        let value = values.iter().sum::<f64>() / values.len() as f64;
        let spread = values.iter().map(|v| (v - value).abs()).fold(0.0, f64::max);
        Ok(ExplorationResult {
            bit: value > 0.5,
            value,
            spread,
        })
    }

    /// Decrypts every slot of a big-ring ciphertext (diagnostics).
    pub fn decrypt_slots(&self, ct: &Ciphertext) -> Result<Vec<f64>> {
        let big = self.ctx.big_ring()?;
        let sk = self.secrets.big.as_ref().expect("big secret exists with the big ring");
        let m = decrypt(sk, ct, big)?;
        Ok(Encoder::new(big.degree(), big.degree() / 2)?
            .decode_slots(&m, ct.scale, big)?
            .iter()
            .map(|z| z.re)
            .collect())
    }

    /// Decrypts the constant coefficients of small-ring score ciphertexts (diagnostics).
    pub fn decrypt_packed(&self, packed: &PackedScores) -> Result<Vec<f64>> {
        let small = self.ctx.pfe_ring();
        let mut out = Vec::new();
        for (ct, &fill) in packed.cts.iter().zip(&packed.fills) {
            let m = decrypt(&self.secrets.small[0], ct, small)?;
            let coeffs = m.into_form(small, Form::Coeff).to_centered_f64(small)?;
            out.extend(coeffs[..fill].iter().map(|c| c / ct.scale));
        }
        Ok(out)
    }
}

/// Repacked score ciphertexts and how many rows each holds.
#[derive(Clone, Debug, PartialEq)]
pub struct PackedScores {
    pub cts: Vec<Ciphertext>,
    pub fills: Vec<usize>,
}

impl PackedScores {
    pub fn rows(&self) -> usize {
        self.fills.iter().sum()
    }
}

/// Stage names in report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    ScientistGeneration,
    OwnerGeneration,
    FunctionAndPacking,
    HalfBts,
    Threshold1,
    Threshold2,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::ScientistGeneration,
        Stage::OwnerGeneration,
        Stage::FunctionAndPacking,
        Stage::HalfBts,
        Stage::Threshold1,
        Stage::Threshold2,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Stage::ScientistGeneration => "Scientist Generation",
            Stage::OwnerGeneration => "Database Owner Generation",
            Stage::FunctionAndPacking => "Private Function & Packing",
            Stage::HalfBts => "Half-BTS",
            Stage::Threshold1 => "Private Threshold 1",
            Stage::Threshold2 => "Private Threshold 2",
        }
    }

    /// Whether the stage's cost grows with the number of rows.
    pub fn scales_with_rows(self) -> bool {
        matches!(self, Stage::FunctionAndPacking | Stage::HalfBts | Stage::Threshold1)
    }
}

/// Timings and counts of one exploration.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StageReport {
    pub timings: Vec<(Stage, Duration)>,
    pub rows: usize,
    pub packed_ciphertexts: usize,
    pub half_bts_calls: usize,
}

impl StageReport {
    pub fn record(&mut self, stage: Stage, elapsed: Duration) {
        match self.timings.iter_mut().find(|(s, _)| *s == stage) {
            Some((_, d)) => *d += elapsed,
            None => self.timings.push((stage, elapsed)),
        }
    }

    pub fn get(&self, stage: Stage) -> Option<Duration> {
        self.timings.iter().find(|(s, _)| *s == stage).map(|(_, d)| *d)
    }
}

#[derive(Clone, Debug)]
pub struct Exploration {
    pub result: Ciphertext,
    pub report: StageReport,
}

struct BigRingState {
    eval: Evaluator,
    bootstrapper: Bootstrapper,
    merge: MergeTree,
}

/// Evaluates queries over plaintext data; never sees a secret.
pub struct DatabaseOwner {
    ctx: Arc<Contexts>,
    key_id: u64,
    repack: RepackKeySet,
    big: Option<BigRingState>,
}

impl DatabaseOwner {
    /// Instantiates the evaluators; with bootstrapping keys present this encodes
    /// the bootstrapping plan.
    pub fn new(ctx: Arc<Contexts>, keys: EvalKeySet) -> Result<Self> {
        let big = match (&ctx.big, keys.relin, keys.galois) {
            (Some(big), Some(rlk), Some(gk)) => {
                let exponents: BTreeSet<usize> = gk.exponents().collect();
                if let Some(g) = required_exponents(&ctx).into_iter().find(|g| !exponents.contains(g)) {
                    return Err(Error::MissingKey(format!("galois exponent {g}")));
                }
                let eval = Evaluator::new(big.clone(), big.degree() / 2, Some(Arc::new(rlk)), Arc::new(gk))?;
                let bootstrapper =
                    Bootstrapper::new(big.clone(), ctx.bootstrap_params()).stage("database owner generation")?;
                let merge = MergeTree {
                    rings: ctx.merge_rings()?,
                    keys: keys.merge,
                };
                if merge.keys.len() + 1 != merge.rings.len() {
                    return Err(Error::MissingKey("ring merging".into()));
                }
                Some(BigRingState {
                    eval,
                    bootstrapper,
                    merge,
                })
            }
            _ => None,
        };
        Ok(Self {
            ctx,
            key_id: keys.key_id,
            repack: keys.repack,
            big,
        })
    }

    /// An owner that only scores and packs its rows for another owner.
    pub fn packing_only(ctx: Arc<Contexts>, keys: &EvalKeySet) -> Self {
        Self {
            ctx,
            key_id: keys.key_id,
            repack: keys.repack.clone(),
            big: None,
        }
    }

    fn check_query(&self, query: &Query) -> Result<()> {
        if query.key_id != self.key_id {
            return Err(Error::InvalidInput(
                "query and evaluation keys belong to different key sets".into(),
            ));
        }
        Ok(())
    }

    /// Scores every row with all query functions and packs the scores.
    pub fn score_and_pack(&self, db: &Database, selection: &SelectionMatrix, query: &Query) -> Result<PackedScores> {
        self.score_and_pack_columns(db, selection, query, 0..query.function_count())
    }

    /// Scores with the query functions `functions`, one per selection column.
    pub fn score_and_pack_columns(
        &self,
        db: &Database,
        selection: &SelectionMatrix,
        query: &Query,
        functions: Range<usize>,
    ) -> Result<PackedScores> {
        self.check_query(query)?;
        let tvs = query
            .functions
            .get(functions.clone())
            .ok_or_else(|| Error::InvalidInput(format!("function range {functions:?} out of bounds")))?;
        if selection.cols() != tvs.len() {
            return Err(Error::InvalidInput(format!(
                "selection has {} columns for {} functions",
                selection.cols(),
                tvs.len()
            )));
        }
        let small = self.ctx.pfe_ring();
        let selected = db.select(selection)?;
        let domains: Vec<(f64, f64)> = tvs.iter().map(|tv| (tv.low, tv.high)).collect();
        let plan = lookup_plan(&selected, &domains, small.degree()).stage("private function")?;
        let scores = apply_plan(&plan, tvs, small).stage("private function")?;
        let cts = repack_batches(&scores, &self.repack, small).stage("repack")?;
        let n = small.degree();
        let fills = (0..cts.len()).map(|i| (selected.len() - i * n).min(n)).collect();
        Ok(PackedScores { cts, fills })
    }

    /// Concatenates row streams from several owners.
    pub fn merge_horizontal(parts: &[PackedScores]) -> Result<PackedScores> {
        let mut out = PackedScores {
            cts: Vec::new(),
            fills: Vec::new(),
        };
        let mut template: Option<&Ciphertext> = None;
        for part in parts {
            for ct in &part.cts {
                if let Some(t) = template {
                    if t.level() != ct.level() {
                        return Err(Error::LevelMismatch {
                            left: t.level(),
                            right: ct.level(),
                        });
                    }
                    if t.scale != ct.scale {
                        return Err(Error::ScaleMismatch {
                            left: t.scale,
                            right: ct.scale,
                        });
                    }
                }
                template = Some(ct);
            }
            out.cts.extend(part.cts.iter().cloned());
            out.fills.extend(&part.fills);
        }
        if out.cts.is_empty() {
            return Err(Error::InvalidInput("nothing to merge".into()));
        }
        Ok(out)
    }

    /// Adds partial scores of the same rows from several owners.
    pub fn merge_vertical(&self, parts: &[PackedScores]) -> Result<PackedScores> {
        let (first, rest) = parts
            .split_first()
            .ok_or_else(|| Error::InvalidInput("nothing to merge".into()))?;
        let small = self.ctx.pfe_ring();
        let mut out = first.clone();
        for part in rest {
            if part.fills != first.fills {
                return Err(Error::InvalidInput(format!(
                    "row counts differ: {} vs {}",
                    part.rows(),
                    first.rows()
                )));
            }
            for (acc, ct) in out.cts.iter_mut().zip(&part.cts) {
                acc.add_assign(ct, small)?;
            }
        }
        Ok(out)
    }

    /// Full exploration on local data.
    pub fn explore(&self, db: &Database, selection: &SelectionMatrix, query: &Query) -> Result<Exploration> {
        let start = Instant::now();
        let packed = self.score_and_pack(db, selection, query)?;
        let packing = start.elapsed();
        let mut out = self.finish(&packed, query)?;
        out.report.record(Stage::FunctionAndPacking, packing);
        Ok(out)
    }

    /// Merging, Half-BTS, both thresholds and the inner sum on packed scores.
    pub fn finish(&self, packed: &PackedScores, query: &Query) -> Result<Exploration> {
        self.check_query(query)?;
        let state = self
            .big
            .as_ref()
            .ok_or_else(|| Error::MissingKey("bootstrapping keys".into()))?;
        let missing = || Error::InvalidInput("query lacks the encrypted thresholds".into());
        let global = query.global.as_ref().ok_or_else(missing)?;
        let t0 = query.threshold_score.as_ref().ok_or_else(missing)?;
        let t1 = query.threshold_rows.as_ref().ok_or_else(missing)?;
        let norm = query.normalizer.as_ref().ok_or_else(missing)?;
        let rows = packed.rows();
        if rows == 0 || packed.fills.len() != packed.cts.len() {
            return Err(Error::InvalidInput("no packed rows".into()));
        }
        if rows > self.ctx.profile.max_rows {
            return Err(Error::InvalidInput(format!(
                "{rows} rows exceed the profile's max_rows {}",
                self.ctx.profile.max_rows
            )));
        }
        let mut report = StageReport {
            rows,
            packed_ciphertexts: packed.cts.len(),
            ..Default::default()
        };
        let eval = &state.eval;
        let arity = self.ctx.profile.merge_arity();

        let start = Instant::now();
        let merged = packed
            .cts
            .par_chunks(arity)
            .map(|group| state.merge.merge_many(group))
            .collect::<Result<Vec<_>>>()
            .stage("ring merge")?;
        report.record(Stage::FunctionAndPacking, start.elapsed());

        let start = Instant::now();
        let halves = merged
            .par_iter()
            .map(|ct| state.bootstrapper.half_bts(eval, ct))
            .collect::<Result<Vec<_>>>()
            .stage("half-bts")?;
        report.half_bts_calls = merged.len();
        report.record(Stage::HalfBts, start.elapsed());

        let start = Instant::now();
        let scale = t0.scale;
        let count_scale = 1.0 / (rows as f64 + 0.5);
        let encoder = Encoder::new(eval.params().degree(), eval.slots())?;
        let jobs: Vec<(usize, usize, &Ciphertext)> = halves
            .iter()
            .enumerate()
            .flat_map(|(b, (left, right))| [(b, 0, left), (b, 1, right)])
            .collect();
        let masked = jobs
            .par_iter()
            .map(|&(b, half, ct)| {
                let bits = eval_private_threshold(
                    eval,
                    ct,
                    &Operand::Encrypted(t0.clone()),
                    &Operand::Encrypted(norm.clone()),
                    &query.local,
                )?;
                let mask = self.slot_mask(&state.bootstrapper, packed, b, half, count_scale);
                let level = bits.level();
                let q = eval.params().q(level).value() as f64;
                let pt = encoder.encode_slots(&mask, q, level, eval.params())?;
                let mut out = eval.rescale(&eval.mul_plain(&bits, &pt)?)?;
                out.scale = bits.scale;
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()
            .stage("private threshold 1")?;
        let mut acc = masked[0].clone();
        for ct in &masked[1..] {
            acc = eval.add(&acc, ct)?;
        }
        report.record(Stage::Threshold1, start.elapsed());

        let start = Instant::now();
        let result = (|| {
            let count = eval.inner_sum(&acc, eval.slots())?;
            let offset = eval.mul_const_to(t1, Complex64::new(count_scale, 0.0), count.scale, count.level())?;
            let shifted = eval.add_real(&eval.sub(&count, &offset)?, 0.5 * count_scale)?;
            eval_chain(eval, &shifted, global)
        })()
        .stage("private threshold 2")?;
        debug_assert!((result.scale - scale).abs() <= scale * 1e-9);
        report.record(Stage::Threshold2, start.elapsed());
        Ok(Exploration { result, report })
    }

    /// Slot weights for half `half` of merged ciphertext `b`: `c` on slots holding a row, 0 elsewhere.
    fn slot_mask(&self, bts: &Bootstrapper, packed: &PackedScores, b: usize, half: usize, c: f64) -> Vec<Complex64> {
        let arity = self.ctx.profile.merge_arity();
        let slots = bts.config().slots;
        (0..slots)
            .map(|s| {
                let coeff = bts.coefficient_of_slot(half, s);
                let (row, input) = (coeff / arity, coeff % arity);
                let filled = packed.fills.get(b * arity + input).is_some_and(|&f| row < f);
                Complex64::new(if filled { c } else { 0.0 }, 0.0)
            })
            .collect()
    }
}

fn write_secret(w: &mut Writer, sk: &SecretKey, ctx: &Contexts) {
    let ring = ctx
        .small
        .iter()
        .chain(&ctx.big)
        .find(|r| r.degree() == sk.coeffs().len())
        .expect("secret belongs to a profile ring");
    wire::write_secret_key(w, sk, ring);
}

impl ScientistSecrets {
    pub fn to_bytes(&self, ctx: &Contexts) -> Vec<u8> {
        let mut w = Writer::new();
        w.header(Kind::SecretKeys, None);
        w.u32(self.small.len());
        w.u8(self.big.is_some() as u8);
        for sk in self.small.iter().chain(&self.big) {
            write_secret(&mut w, sk, ctx);
        }
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8], ctx: &Contexts) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.header(Kind::SecretKeys, ctx)?;
        let count = r.u32()?;
        let has_big = r.u8()? != 0;
        let small = (0..count)
            .map(|_| wire::read_secret_key(&mut r, ctx).map(|(sk, _)| sk))
            .collect::<Result<Vec<_>>>()?;
        let big = if has_big {
            Some(wire::read_secret_key(&mut r, ctx)?.0)
        } else {
            None
        };
        r.finish()?;
        Ok(Self { small, big })
    }
}

fn write_repack(w: &mut Writer, keys: &RepackKeySet, params: &RingParams) {
    w.header(Kind::RepackKeys, Some(params));
    w.u32(keys.gadget.primes_per_digit);
    w.u32(keys.gadget.base2.unwrap_or(0) as usize);
    wire::write_galois_keys(w, &keys.keys, params);
}

fn read_repack(r: &mut Reader<'_>, ctx: &Contexts) -> Result<RepackKeySet> {
    let params = r.ring_header(Kind::RepackKeys, ctx)?;
    let primes_per_digit = r.u32()?;
    let base2 = match r.u32()? {
        0 => None,
        b => Some(b as u32),
    };
    let (keys, ring) = wire::read_galois_keys(r, ctx)?;
    if !Arc::ptr_eq(ring, params) {
        return Err(Error::Serialization("repack keys from a different ring".into()));
    }
    Ok(RepackKeySet {
        degree: params.degree(),
        gadget: Gadget {
            primes_per_digit,
            base2,
        },
        keys,
    })
}

fn ring_of<'c>(ctx: &'c Contexts, ct: &Ciphertext) -> &'c RingParams {
    ctx.small
        .iter()
        .chain(&ctx.big)
        .find(|r| r.degree() == ct.ring_degree())
        .expect("ciphertext belongs to a profile ring")
}

impl EvalKeySet {
    pub fn to_bytes(&self, ctx: &Contexts) -> Result<Vec<u8>> {
        let mut w = Writer::new();
        w.header(Kind::EvalKeys, None);
        w.u64(self.key_id);
        write_repack(&mut w, &self.repack, ctx.pfe_ring());
        w.u32(self.merge.len());
        if !self.merge.is_empty() {
            for (key, ring) in self.merge.iter().zip(ctx.merge_rings()?.iter().skip(1)) {
                wire::write_switching_key(&mut w, key, ring);
            }
        }
        match (&self.relin, &self.galois) {
            (Some(rlk), Some(gk)) => {
                let big = ctx.big_ring()?;
                w.u8(1);
                wire::write_switching_key(&mut w, rlk, big);
                wire::write_galois_keys(&mut w, gk, big);
            }
            _ => w.u8(0),
        }
        Ok(w.into_bytes())
    }

    pub fn from_bytes(bytes: &[u8], ctx: &Contexts) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.header(Kind::EvalKeys, ctx)?;
        let key_id = r.u64()?;
        let repack = read_repack(&mut r, ctx)?;
        let count = r.u32()?;
        let rings = if count > 0 { ctx.merge_rings()? } else { Vec::new() };
        if count > 0 && count + 1 != rings.len() {
            return Err(Error::Serialization(format!(
                "{count} merge keys for {} rings",
                rings.len()
            )));
        }
        let merge = (0..count)
            .map(|i| {
                let (key, ring) = wire::read_switching_key(&mut r, ctx)?;
                if !Arc::ptr_eq(ring, &rings[i + 1]) {
                    return Err(Error::Serialization(format!("merge key {i} in the wrong ring")));
                }
                Ok(key)
            })
            .collect::<Result<Vec<_>>>()?;
        let (relin, galois) = if r.u8()? != 0 {
            let big = ctx.big_ring()?;
            let (rlk, ring) = wire::read_switching_key(&mut r, ctx)?;
            let (gk, gring) = wire::read_galois_keys(&mut r, ctx)?;
            if !Arc::ptr_eq(ring, big) || !Arc::ptr_eq(gring, big) {
                return Err(Error::Serialization("bootstrapping keys outside the big ring".into()));
            }
            (Some(rlk), Some(gk))
        } else {
            (None, None)
        };
        r.finish()?;
        Ok(Self {
            key_id,
            repack,
            merge,
            relin,
            galois,
        })
    }
}

impl Query {
    pub fn to_bytes(&self, ctx: &Contexts) -> Vec<u8> {
        let mut w = Writer::new();
        w.header(Kind::Query, None);
        w.u64(self.key_id);
        w.u32(self.functions.len());
        for tv in &self.functions {
            w.f64(tv.low);
            w.f64(tv.high);
            wire::write_ciphertext(&mut w, &tv.ciphertext, ctx.pfe_ring());
        }
        wire::write_chain(&mut w, &self.local);
        let encrypted = [&self.threshold_score, &self.threshold_rows, &self.normalizer];
        match (&self.global, encrypted) {
            (Some(global), [Some(t0), Some(t1), Some(norm)]) => {
                w.u8(1);
                wire::write_chain(&mut w, global);
                for ct in [t0, t1, norm] {
                    wire::write_ciphertext(&mut w, ct, ring_of(ctx, ct));
                }
            }
            _ => w.u8(0),
        }
        w.u32(self.manifest.len());
        for &g in &self.manifest {
            w.u32(g);
        }
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8], ctx: &Contexts) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.header(Kind::Query, ctx)?;
        let key_id = r.u64()?;
        let count = r.u32()?;
        let functions = (0..count)
            .map(|_| {
                let low = r.f64()?;
                let high = r.f64()?;
                let ciphertext = wire::read_ciphertext(&mut r, ctx)?;
                if ciphertext.ring_degree() != ctx.pfe_ring().degree() {
                    return Err(Error::Serialization("test vector outside the function ring".into()));
                }
                Ok(TestVector { ciphertext, low, high })
            })
            .collect::<Result<Vec<_>>>()?;
        let local = wire::read_chain(&mut r, ctx)?;
        let (global, t0, t1, norm) = if r.u8()? != 0 {
            let global = wire::read_chain(&mut r, ctx)?;
            let t0 = wire::read_ciphertext(&mut r, ctx)?;
            let t1 = wire::read_ciphertext(&mut r, ctx)?;
            let norm = wire::read_ciphertext(&mut r, ctx)?;
            (Some(global), Some(t0), Some(t1), Some(norm))
        } else {
            (None, None, None, None)
        };
        let manifest_len = r.u32()?;
        let manifest = (0..manifest_len).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        r.finish()?;
        Ok(Self {
            key_id,
            functions,
            local,
            global,
            threshold_score: t0,
            threshold_rows: t1,
            normalizer: norm,
            manifest,
        })
    }
}

impl PackedScores {
    pub fn to_bytes(&self, ctx: &Contexts) -> Vec<u8> {
        let mut w = Writer::new();
        w.header(Kind::PackedScores, None);
        w.u32(self.cts.len());
        for (ct, &fill) in self.cts.iter().zip(&self.fills) {
            w.u32(fill);
            wire::write_ciphertext(&mut w, ct, ctx.pfe_ring());
        }
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8], ctx: &Contexts) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.header(Kind::PackedScores, ctx)?;
        let count = r.u32()?;
        let n = ctx.pfe_ring().degree();
        let mut out = Self {
            cts: Vec::with_capacity(count),
            fills: Vec::with_capacity(count),
        };
        for _ in 0..count {
            let fill = r.u32()?;
            let ct = wire::read_ciphertext(&mut r, ctx)?;
            if fill == 0 || fill > n || ct.ring_degree() != n {
                return Err(Error::Serialization(format!("bad packed block of {fill} rows")));
            }
            out.fills.push(fill);
            out.cts.push(ct);
        }
        r.finish()?;
        Ok(out)
    }
}
