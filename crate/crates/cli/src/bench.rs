//! End-to-end benchmark with per-stage timings.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use dbx::protocol::wire;
use dbx::protocol::{
    Contexts, DatabaseOwner, EvalKeySet, Profile, Query, Scientist, ScientistSecrets, Stage, StageReport,
};
use dbx::Result;

use crate::dataset::Instance;

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub profile: Profile,
    pub rows: usize,
    pub attributes: usize,
    /// Largest table entry; keeps summed scores inside the local sensitivity.
    pub max_value: u32,
    pub seed: u64,
    pub t1_offset: i64,
}

impl BenchConfig {
    pub fn new(profile: Profile, rows: usize, attributes: usize, seed: u64) -> Self {
        Self {
            profile,
            rows,
            attributes,
            max_value: 15,
            seed,
            t1_offset: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub profile: String,
    pub rows: usize,
    pub attributes: usize,
    pub functions: usize,
    pub stages: Vec<(Stage, Duration)>,
    pub key_bytes: usize,
    pub query_bytes: usize,
    pub result_bytes: usize,
    pub packed_ciphertexts: usize,
    pub half_bts_calls: usize,
    /// Decrypted bit; absent when the profile has no bootstrapping ring.
    pub bit: Option<bool>,
    pub expected: bool,
}

impl BenchReport {
    pub fn stage(&self, stage: Stage) -> Duration {
        self.stages
            .iter()
            .find(|(s, _)| *s == stage)
            .map_or(Duration::ZERO, |(_, d)| *d)
    }

    /// Milliseconds per entry over the stages whose cost grows with the rows.
    pub fn amortized_ms(&self) -> f64 {
        let total: f64 = self
            .stages
            .iter()
            .filter(|(s, _)| s.scales_with_rows())
            .map(|(_, d)| d.as_secs_f64() * 1e3)
            .sum();
        total / self.rows as f64
    }

    pub fn matches_oracle(&self) -> bool {
        self.bit == Some(self.expected)
    }

    /// `key=value` lines for scripts.
    pub fn key_values(&self) -> String {
        let mut out = vec![
            format!("profile={}", self.profile),
            format!("rows={}", self.rows),
            format!("attributes={}", self.attributes),
            format!("functions={}", self.functions),
        ];
        for (stage, d) in &self.stages {
            out.push(format!("stage.{}_ms={:.3}", stage_key(*stage), d.as_secs_f64() * 1e3));
        }
        out.push(format!("amortized_ms_per_entry={:.6}", self.amortized_ms()));
        out.push(format!("key_bytes={}", self.key_bytes));
        out.push(format!("query_bytes={}", self.query_bytes));
        out.push(format!("result_bytes={}", self.result_bytes));
        out.push(format!("packed_ciphertexts={}", self.packed_ciphertexts));
        out.push(format!("half_bts_calls={}", self.half_bts_calls));
        if let Some(bit) = self.bit {
            out.push(format!("result_bit={}", bit as u8));
        }
        out.push(format!("expected_bit={}", self.expected as u8));
        out.join("\n")
    }
}

fn stage_key(stage: Stage) -> String {
    stage
        .label()
        .to_ascii_lowercase()
        .replace(" & ", "_")
        .replace(['-', ' '], "_")
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} profile, {} entries, {} attributes, {} functions",
            self.profile, self.rows, self.attributes, self.functions
        )?;
        writeln!(f, "{:<30} {:>12}", "Stage", "Time (s)")?;
        for (stage, d) in &self.stages {
            writeln!(f, "{:<30} {:>12.3}", stage.label(), d.as_secs_f64())?;
        }
        writeln!(f, "{:<30} {:>12.4}", "Amortized (ms/entry)", self.amortized_ms())?;
        writeln!(f)?;
        write!(f, "{}", self.key_values())
    }
}

/// Runs both roles in one process; they exchange serialized bytes only.
pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    let ctx = Arc::new(Contexts::new(config.profile.clone())?);
    let n = ctx.pfe_ring().degree();
    let instance = Instance::random(
        config.rows,
        config.attributes,
        n,
        config.max_value,
        config.seed,
        config.t1_offset,
    )?;
    let mut report = StageReport::default();

    let start = Instant::now();
    let (scientist, keys) = Scientist::setup(ctx.clone(), config.seed)?;
    let key_bytes = keys.to_bytes(&ctx)?;
    let secret_bytes = scientist.secrets().to_bytes(&ctx);
    report.record(Stage::ScientistGeneration, start.elapsed());
    drop((scientist, keys));

    let start = Instant::now();
    let owner = DatabaseOwner::new(ctx.clone(), EvalKeySet::from_bytes(&key_bytes, &ctx)?)?;
    report.record(Stage::OwnerGeneration, start.elapsed());

    let secrets = ScientistSecrets::from_bytes(&secret_bytes, &ctx)?;
    let mut scientist = Scientist::from_secrets(ctx.clone(), secrets, config.seed.wrapping_add(1))?;
    let query_bytes = scientist
        .query(&instance.functions, instance.t0, instance.t1)?
        .to_bytes(&ctx);
    let query = Query::from_bytes(&query_bytes, &ctx)?;

    let (bit, result_bytes, packed_ciphertexts, half_bts_calls) = if ctx.big.is_some() {
        let out = owner.explore(&instance.db, &instance.selection, &query)?;
        for (stage, d) in &out.report.timings {
            report.record(*stage, *d);
        }
        let big = ctx.big_ring()?;
        let bytes = wire::ciphertext_bytes(&out.result, big);
        let result = scientist.decrypt_result(&wire::ciphertext_from_bytes(&bytes, &ctx)?)?;
        (
            Some(result.bit),
            bytes.len(),
            out.report.packed_ciphertexts,
            out.report.half_bts_calls,
        )
    } else {
        let start = Instant::now();
        let packed = owner.score_and_pack(&instance.db, &instance.selection, &query)?;
        report.record(Stage::FunctionAndPacking, start.elapsed());
        (None, packed.to_bytes(&ctx).len(), packed.cts.len(), 0)
    };

    let mut stages = report.timings;
    stages.sort_by_key(|(s, _)| *s);
    Ok(BenchReport {
        profile: config.profile.kind.to_string(),
        rows: config.rows,
        attributes: config.attributes,
        functions: instance.functions.len(),
        stages,
        key_bytes: key_bytes.len(),
        query_bytes: query_bytes.len(),
        result_bytes,
        packed_ciphertexts,
        half_bts_calls,
        bit,
        expected: instance.expected_bit(),
    })
}
