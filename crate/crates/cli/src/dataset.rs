//! Synthetic databases and scoring functions.

use std::io::Write;

use dbx::pfe::FunctionSpec;
use dbx::protocol::{plaintext_scores, Bounds, Database, SelectionMatrix};
use dbx::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

/// Largest double below 2, the top of the attribute range.
const BELOW_TWO: f64 = 1.9999999999999998;

/// `p x h` values from N(1, 1) clamped to `[0, 2)`, columns `a0..`.
pub fn gen_dataset(p: usize, h: usize, seed: u64) -> Result<Database> {
    if p == 0 || h == 0 {
        return Err(Error::InvalidInput(format!("dataset needs p, h >= 1 (got {p}, {h})")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let normal = Normal::<f64>::new(1.0, 1.0).expect("unit variance is valid");
    let rows = (0..p)
        .map(|_| (0..h).map(|_| normal.sample(&mut rng).clamp(0.0, BELOW_TWO)).collect())
        .collect();
    Database::new(column_names(h), rows, &Bounds::default())
}

pub fn column_names(h: usize) -> Vec<String> {
    (0..h).map(|j| format!("a{j}")).collect()
}

pub fn write_dataset(p: usize, h: usize, seed: u64, out: impl Write) -> Result<()> {
    gen_dataset(p, h, seed)?.write_csv(out)
}

/// `m` integer-valued tables over `[0, 2)` with entries in `0..=max`.
pub fn random_functions(m: usize, n: usize, max: u32, seed: u64) -> Result<Vec<FunctionSpec>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| FunctionSpec::new(0.0, 2.0, (0..n).map(|_| rng.random_range(0..=max) as f64).collect()))
        .collect()
}

/// A database, the scientist's functions and both thresholds.
#[derive(Clone, Debug)]
pub struct Instance {
    pub db: Database,
    pub selection: SelectionMatrix,
    pub functions: Vec<FunctionSpec>,
    pub t0: f64,
    pub t1: u64,
    /// Rows scoring at least `t0`.
    pub qualifying: u64,
    /// Rows scoring exactly `t0`.
    pub ties: u64,
}

impl Instance {
    /// Random instance with `t0` at the median score and `t1` at the qualifying
    /// count plus `t1_offset` (so offsets 0 and 1 sit on both sides of the boundary).
    pub fn random(p: usize, h: usize, n: usize, max: u32, seed: u64, t1_offset: i64) -> Result<Self> {
        let db = gen_dataset(p, h, seed)?;
        let functions = random_functions(h, n, max, seed ^ 0x9e37_79b9_7f4a_7c15)?;
        let selection = SelectionMatrix::identity(h);
        let mut scores = plaintext_scores(&db, &selection, &functions)?;
        scores.sort_by(f64::total_cmp);
        let t0 = scores[p / 2];
        let qualifying = scores.iter().filter(|&&s| s >= t0).count() as u64;
        let ties = scores.iter().filter(|&&s| s == t0).count() as u64;
        let t1 = (qualifying as i64 + t1_offset).max(0) as u64;
        Ok(Self {
            db,
            selection,
            functions,
            t0,
            t1,
            qualifying,
            ties,
        })
    }

    pub fn expected_bit(&self) -> bool {
        self.qualifying >= self.t1
    }
}
