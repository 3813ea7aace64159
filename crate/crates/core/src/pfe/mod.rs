//! Private function evaluation through encrypted lookup tables.
//!
//! A table `f` over `n` grid points of `[a, b)` is encrypted as the test vector
//! `u_f = f_0 - sum_{i>=1} f_{n-i} X^i`; multiplying by the public monomial
//! `X^i` moves `f_i` into the constant coefficient.

use rayon::prelude::*;

use crate::ckks::encode_coeffs;
use crate::error::{Error, Result};
use crate::ring::sample::Prng;
use crate::ring::{NoiseParams, RingParams};
use crate::rlwe::{encrypt_sk, Ciphertext, Domain, SecretKey};

/// A scoring function tabulated on the grid `a + k (b - a) / n`.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionSpec {
    pub low: f64,
    pub high: f64,
    pub table: Vec<f64>,
}

impl FunctionSpec {
    pub fn new(low: f64, high: f64, table: Vec<f64>) -> Result<Self> {
        if !(low.is_finite() && high.is_finite() && low < high) {
            return Err(Error::InvalidInput(format!("bad function domain [{low}, {high})")));
        }
        if table.is_empty() || table.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("function table must be nonempty and finite".into()));
        }
        Ok(Self { low, high, table })
    }

    /// Tabulates `f` at the `n` grid points.
    pub fn from_fn(low: f64, high: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let step = (high - low) / n as f64;
        Self::new(low, high, (0..n).map(|k| f(low + k as f64 * step)).collect())
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn grid_point(&self, k: usize) -> f64 {
        self.low + k as f64 * (self.high - self.low) / self.len() as f64
    }

    pub fn max_value(&self) -> f64 {
        self.table.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Plaintext lookup, the value the encrypted path reproduces.
    pub fn eval_plain(&self, x: f64) -> Result<f64> {
        Ok(self.table[encode_input(x, self.low, self.high, self.len())?])
    }
}

/// Monomial exponent `round(n (x - a) / (b - a))`, clamped below `n`.
pub fn encode_input(x: f64, low: f64, high: f64, n: usize) -> Result<usize> {
    if !(x >= low && x < high) {
        return Err(Error::OutOfDomain { value: x, low, high });
    }
    // f64::round rounds halves away from zero
    let i = (n as f64 * (x - low) / (high - low)).round() as usize;
    Ok(i.min(n - 1))
}

/// Coefficients of `u_f`.
pub fn test_vector_coeffs(table: &[f64]) -> Vec<f64> {
    let n = table.len();
    let mut out = vec![0.0; n];
    out[0] = table[0];
    for i in 1..n {
        out[i] = -table[n - i];
    }
    out
}

/// An encrypted table; the bounds are public, the values are not.
#[derive(Clone, Debug, PartialEq)]
pub struct TestVector {
    pub ciphertext: Ciphertext,
    pub low: f64,
    pub high: f64,
}

impl TestVector {
    pub fn degree(&self) -> usize {
        self.ciphertext.ring_degree()
    }
}

/// Encrypts `u_f` at scale `scale` on the lowest level of `params`.
pub fn build_test_vector(
    spec: &FunctionSpec,
    sk: &SecretKey,
    scale: f64,
    params: &RingParams,
    noise: &NoiseParams,
    rng: &mut Prng,
) -> Result<TestVector> {
    if spec.len() != params.degree() {
        return Err(Error::InvalidInput(format!(
            "table has {} entries, ring degree is {}",
            spec.len(),
            params.degree()
        )));
    }
    let pt = encode_coeffs(&test_vector_coeffs(&spec.table), scale, 0, params)?;
    let ciphertext = encrypt_sk(sk, &pt.poly, scale, Domain::Coeffs, params, noise, rng)?;
    Ok(TestVector {
        ciphertext,
        low: spec.low,
        high: spec.high,
    })
}

/// Ciphertext whose constant coefficient holds table entry `i` (negated for `n <= i < 2n`).
pub fn lookup(tv: &TestVector, i: usize, params: &RingParams) -> Ciphertext {
    tv.ciphertext.mul_monomial(i, params)
}

/// Monomial exponents for every cell, computed from the data and the public
/// domains alone. This is the full plaintext-side control flow of [`eval_scores`].
pub fn lookup_plan(rows: &[Vec<f64>], domains: &[(f64, f64)], n: usize) -> Result<Vec<Vec<usize>>> {
    rows.iter()
        .enumerate()
        .map(|(r, row)| {
            if row.len() != domains.len() {
                return Err(Error::Database {
                    row: r,
                    column: row.len(),
                    message: format!("expected {} values", domains.len()),
                });
            }
            row.iter()
                .zip(domains)
                .enumerate()
                .map(|(c, (&x, &(low, high)))| {
                    encode_input(x, low, high, n).map_err(|e| Error::Database {
                        row: r,
                        column: c,
                        message: e.to_string(),
                    })
                })
                .collect()
        })
        .collect()
}

/// Sums the looked-up ciphertexts of each planned row.
pub fn apply_plan(plan: &[Vec<usize>], tvs: &[TestVector], params: &RingParams) -> Result<Vec<Ciphertext>> {
    let n = params.degree();
    let first = tvs
        .first()
        .ok_or_else(|| Error::InvalidInput("no test vectors".into()))?;
    for tv in tvs {
        if tv.degree() != n {
            return Err(Error::DegreeMismatch {
                left: tv.degree(),
                right: n,
            });
        }
    }
    plan.par_iter()
        .map(|exponents| {
            if exponents.len() != tvs.len() {
                return Err(Error::InvalidInput(format!(
                    "plan row has {} entries for {} test vectors",
                    exponents.len(),
                    tvs.len()
                )));
            }
            let mut acc = Ciphertext::zero(
                params,
                first.ciphertext.level(),
                first.ciphertext.scale,
                Domain::Coeffs,
                first.ciphertext.form(),
            );
            for (&i, tv) in exponents.iter().zip(tvs) {
                acc.add_assign(&lookup(tv, i, params), params)?;
            }
            Ok(acc)
        })
        .collect()
}

/// Scores `sum_j f_j(rows[r][j])` for each row, one ciphertext per row.
pub fn eval_scores(rows: &[Vec<f64>], tvs: &[TestVector], params: &RingParams) -> Result<Vec<Ciphertext>> {
    let domains: Vec<(f64, f64)> = tvs.iter().map(|tv| (tv.low, tv.high)).collect();
    let plan = lookup_plan(rows, &domains, params.degree())?;
    apply_plan(&plan, tvs, params)
}
