//! Parameter profiles and the `key = value` sidecar format.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProfileKind {
    /// Desk-scale chain that runs every stage.
    Toy,
    /// Function evaluation and repacking at full small-ring parameters; no big ring.
    Set1Only,
    /// Full parameters, used for size accounting only.
    FullAnalytic,
}

impl ProfileKind {
    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::Toy => "toy",
            ProfileKind::Set1Only => "set1-only",
            ProfileKind::FullAnalytic => "full-analytic",
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toy" => Ok(ProfileKind::Toy),
            "set1-only" => Ok(ProfileKind::Set1Only),
            "full-analytic" => Ok(ProfileKind::FullAnalytic),
            other => Err(Error::Config(format!("unknown profile '{other}'"))),
        }
    }
}

/// A run of primes of one bit size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeRun {
    pub bits: u32,
    pub count: usize,
}

impl PrimeRun {
    pub const fn new(bits: u32, count: usize) -> Self {
        Self { bits, count }
    }
}

/// Threshold configuration before the Remez stages are generated.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig {
    pub alpha: u32,
    pub beta: u32,
    pub degrees: Vec<usize>,
}

/// Every public parameter both roles agree on.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub kind: ProfileKind,
    /// Degree `n` of the function-evaluation ring.
    pub small_degree: usize,
    /// Degree `N` of the bootstrapping ring.
    pub big_degree: usize,
    pub q0_bits: u32,
    /// Special prime of the small rings.
    pub small_special_bits: u32,
    pub repack_base2: u32,
    /// Secret weight in the small rings is `2n/3`; this is the big-ring weight.
    pub big_hamming: usize,
    pub sigma: f64,
    pub scale_bits: u32,
    /// Arithmetic primes between `q_0` and the bootstrapping circuit.
    pub arith: Vec<PrimeRun>,
    /// Primes consumed by SlotsToCoeffs (kept for size accounting), EvalMod and CoeffsToSlots.
    pub stc: PrimeRun,
    pub eval_mod: PrimeRun,
    pub cts: PrimeRun,
    pub special: PrimeRun,
    pub k_bound: f64,
    pub sine_degree: usize,
    pub double_angle: usize,
    pub local: ChainConfig,
    pub global_beta: u32,
    pub global_degrees: Vec<usize>,
    /// Largest database the global threshold is sized for.
    pub max_rows: usize,
    pub score_spacing: f64,
}

impl Profile {
    pub fn toy() -> Self {
        Self {
            kind: ProfileKind::Toy,
            small_degree: 256,
            big_degree: 1024,
            q0_bits: 55,
            small_special_bits: 54,
            repack_base2: 30,
            big_hamming: 32,
            sigma: 3.2,
            scale_bits: 40,
            arith: vec![PrimeRun::new(40, 46)],
            stc: PrimeRun::new(40, 0),
            eval_mod: PrimeRun::new(55, 11),
            cts: PrimeRun::new(55, 3),
            special: PrimeRun::new(61, 8),
            k_bound: 16.0,
            sine_degree: 30,
            double_angle: 3,
            local: ChainConfig {
                alpha: 9,
                beta: 14,
                degrees: vec![15, 15, 15, 7],
            },
            global_beta: 10,
            global_degrees: vec![15; 5],
            max_rows: 1 << 14,
            score_spacing: 1.0,
        }
    }

    pub fn set1_only() -> Self {
        Self {
            kind: ProfileKind::Set1Only,
            small_degree: 4096,
            big_degree: 0,
            arith: Vec::new(),
            eval_mod: PrimeRun::new(55, 0),
            cts: PrimeRun::new(55, 0),
            special: PrimeRun::new(61, 0),
            ..Self::toy()
        }
    }

    pub fn full_analytic() -> Self {
        Self {
            kind: ProfileKind::FullAnalytic,
            small_degree: 4096,
            big_degree: 1 << 16,
            big_hamming: 192,
            scale_bits: 45,
            arith: vec![PrimeRun::new(45, 8)],
            stc: PrimeRun::new(39, 3),
            eval_mod: PrimeRun::new(60, 8),
            cts: PrimeRun::new(56, 4),
            special: PrimeRun::new(61, 5),
            local: ChainConfig {
                alpha: 8,
                beta: 12,
                degrees: vec![15, 15, 15],
            },
            global_beta: 20,
            max_rows: 1 << 19,
            ..Self::toy()
        }
    }

    pub fn by_kind(kind: ProfileKind) -> Self {
        match kind {
            ProfileKind::Toy => Self::toy(),
            ProfileKind::Set1Only => Self::set1_only(),
            ProfileKind::FullAnalytic => Self::full_analytic(),
        }
    }

    pub fn has_big_ring(&self) -> bool {
        self.big_degree > 0
    }

    /// Whether keys and ciphertexts can be materialized on a desk machine.
    pub fn is_materializable(&self) -> bool {
        self.kind != ProfileKind::FullAnalytic
    }

    pub fn small_hamming(&self) -> usize {
        2 * self.small_degree / 3
    }

    pub fn scale(&self) -> f64 {
        2f64.powi(self.scale_bits as i32)
    }

    pub fn arith_count(&self) -> usize {
        self.arith.iter().map(|r| r.count).sum()
    }

    /// Sensitivity of the global threshold: `2^-α < 1/(2 max_rows + 1)`.
    pub fn global_alpha(&self) -> u32 {
        usize::BITS - (2 * self.max_rows).leading_zeros()
    }

    /// Arity of the merge tree, `N/n`.
    pub fn merge_arity(&self) -> usize {
        if self.has_big_ring() {
            self.big_degree / self.small_degree
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pow2 = |v: usize| v.is_power_of_two() && v >= 16;
        if !pow2(self.small_degree) {
            return Err(Error::Config(format!(
                "n = {} must be a power of two >= 16",
                self.small_degree
            )));
        }
        if self.has_big_ring() && (!pow2(self.big_degree) || self.big_degree < self.small_degree) {
            return Err(Error::Config(format!(
                "N = {} must be a power of two >= n = {}",
                self.big_degree, self.small_degree
            )));
        }
        if self.max_rows == 0 {
            return Err(Error::Config("max_rows must be positive".into()));
        }
        if !(self.sigma > 0.0) || !(self.score_spacing > 0.0) {
            return Err(Error::Config("sigma and score spacing must be positive".into()));
        }
        for d in self.local.degrees.iter().chain(&self.global_degrees) {
            if d % 2 == 0 {
                return Err(Error::Config(format!("threshold degree {d} is not odd")));
            }
        }
        Ok(())
    }

    /// Reads a sidecar: `profile = <name>` selects the base, other keys override it.
    /// Returns the profile and the keys it did not consume.
    pub fn from_sidecar(text: &str) -> Result<(Self, BTreeMap<String, String>)> {
        let mut entries = parse_sidecar(text)?;
        let kind = match entries.remove("profile") {
            Some(v) => v.parse()?,
            None => ProfileKind::Toy,
        };
        let mut p = Self::by_kind(kind);
        let mut take = |key: &str| entries.remove(key);
        if let Some(v) = take("n") {
            p.small_degree = parse_num(&v, "n")?;
        }
        if let Some(v) = take("N") {
            p.big_degree = parse_num(&v, "N")?;
        }
        if let Some(v) = take("q0_bits") {
            p.q0_bits = parse_num(&v, "q0_bits")?;
        }
        if let Some(v) = take("scale_bits") {
            p.scale_bits = parse_num(&v, "scale_bits")?;
        }
        if let Some(v) = take("arith") {
            p.arith = parse_runs(&v)?;
        }
        if let Some(v) = take("max_rows") {
            p.max_rows = parse_num(&v, "max_rows")?;
        }
        if let Some(v) = take("local_alpha") {
            p.local.alpha = parse_num(&v, "local_alpha")?;
        }
        if let Some(v) = take("local_beta") {
            p.local.beta = parse_num(&v, "local_beta")?;
        }
        if let Some(v) = take("local_degrees") {
            p.local.degrees = parse_list(&v, "local_degrees")?;
        }
        if let Some(v) = take("global_beta") {
            p.global_beta = parse_num(&v, "global_beta")?;
        }
        if let Some(v) = take("global_degrees") {
            p.global_degrees = parse_list(&v, "global_degrees")?;
        }
        if let Some(v) = take("sigma") {
            p.sigma = parse_num(&v, "sigma")?;
        }
        p.validate()?;
        Ok((p, entries))
    }

    pub fn to_sidecar(&self) -> String {
        let runs = |rs: &[PrimeRun]| {
            rs.iter()
                .map(|r| format!("{}x{}", r.count, r.bits))
                .collect::<Vec<_>>()
                .join(",")
        };
        let list = |ds: &[usize]| ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",");
        format!(
            "profile = {}\nn = {}\nN = {}\nq0_bits = {}\nscale_bits = {}\narith = {}\nmax_rows = {}\n\
             local_alpha = {}\nlocal_beta = {}\nlocal_degrees = {}\nglobal_beta = {}\nglobal_degrees = {}\nsigma = {}\n",
            self.kind,
            self.small_degree,
            self.big_degree,
            self.q0_bits,
            self.scale_bits,
            runs(&self.arith),
            self.max_rows,
            self.local.alpha,
            self.local.beta,
            list(&self.local.degrees),
            self.global_beta,
            list(&self.global_degrees),
            self.sigma,
        )
    }
}

/// `key = value` lines; `#` starts a comment.
pub fn parse_sidecar(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

fn parse_num<T: FromStr>(v: &str, key: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

fn parse_list(v: &str, key: &str) -> Result<Vec<usize>> {
    v.split(',').map(|s| parse_num(s.trim(), key)).collect()
}

/// `COUNTxBITS` runs, comma separated.
fn parse_runs(v: &str) -> Result<Vec<PrimeRun>> {
    v.split(',')
        .map(|s| {
            let (count, bits) = s
                .trim()
                .split_once('x')
                .ok_or_else(|| Error::Config(format!("prime run '{s}' is not COUNTxBITS")))?;
            Ok(PrimeRun::new(parse_num(bits, "arith")?, parse_num(count, "arith")?))
        })
        .collect()
}

/// Parses `low:high` attribute bounds.
pub fn parse_bounds(v: &str) -> Result<(f64, f64)> {
    let (a, b) = v
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("bounds '{v}' are not low:high")))?;
    let (a, b): (f64, f64) = (parse_num(a.trim(), "bounds")?, parse_num(b.trim(), "bounds")?);
    if !(a < b) {
        return Err(Error::Config(format!("empty bounds {a}:{b}")));
    }
    Ok((a, b))
}
