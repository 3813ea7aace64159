//! Plaintext matrix times encrypted slot vector, diagonal method with baby-step giant-step.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use super::encoder::{Encoder, Plaintext};
use super::evaluator::Evaluator;
use crate::error::{Error, Result};
use crate::ring::RingParams;
use crate::rlwe::Ciphertext;

/// Generalized diagonals `diag_d[i] = M[i][(i + d) mod n]`, omitting all-zero ones.
pub fn diagonals_of(matrix: &[Vec<Complex64>]) -> BTreeMap<usize, Vec<Complex64>> {
    let n = matrix.len();
    let mut out = BTreeMap::new();
    for d in 0..n {
        let diag: Vec<Complex64> = (0..n).map(|i| matrix[i][(i + d) % n]).collect();
        if diag.iter().any(|v| v.norm() > 0.0) {
            out.insert(d, diag);
        }
    }
    out
}

/// Dense matrix-vector product, used as a reference.
pub fn apply_plain(matrix: &[Vec<Complex64>], z: &[Complex64]) -> Vec<Complex64> {
    matrix
        .iter()
        .map(|row| row.iter().zip(z).map(|(a, b)| a * b).sum())
        .collect()
}

/// Picks the power-of-two baby step minimizing the number of distinct rotations.
fn best_baby_step(indices: &BTreeSet<usize>, slots: usize) -> usize {
    let mut best = (usize::MAX, 1);
    let mut b = 1;
    while b <= slots {
        let babies: BTreeSet<usize> = indices.iter().map(|d| d % b).collect();
        let giants: BTreeSet<usize> = indices.iter().map(|d| d - d % b).collect();
        let cost = babies.len() + giants.len();
        if cost < best.0 {
            best = (cost, b);
        }
        b *= 2;
    }
    best.1
}

/// Rotations a BSGS evaluation of the given nonzero diagonals needs, without encoding anything.
pub fn bsgs_rotations(indices: &BTreeSet<usize>, slots: usize) -> Vec<i64> {
    let baby = best_baby_step(indices, slots);
    let mut set = BTreeSet::new();
    for &d in indices {
        let (giant, b) = (d - d % baby, d % baby);
        set.extend([giant, b].into_iter().filter(|&r| r != 0).map(|r| r as i64));
    }
    set.into_iter().collect()
}

/// A pre-encoded linear transform over `slots` slots, applied at a fixed level.
#[derive(Clone, Debug)]
pub struct LinearTransform {
    slots: usize,
    baby: usize,
    level: usize,
    plaintext_scale: f64,
    // giant offset -> (baby offset -> rotated diagonal)
    blocks: BTreeMap<usize, BTreeMap<usize, Plaintext>>,
}

impl LinearTransform {
    /// Encodes the diagonals at scale `q_level` so that rescaling restores the
    /// input scale, or at `plaintext_scale` when given.
    pub fn new(
        diagonals: &BTreeMap<usize, Vec<Complex64>>,
        encoder: &Encoder,
        params: &RingParams,
        level: usize,
        plaintext_scale: Option<f64>,
    ) -> Result<Self> {
        let slots = encoder.slots();
        if level == 0 || level > params.max_level() {
            return Err(Error::InsufficientLevels {
                needed: 1,
                available: level,
            });
        }
        let indices: BTreeSet<usize> = diagonals.keys().map(|&d| d % slots).collect();
        let baby = best_baby_step(&indices, slots);
        let scale = plaintext_scale.unwrap_or(params.q(level).value() as f64);
        let mut blocks: BTreeMap<usize, BTreeMap<usize, Plaintext>> = BTreeMap::new();
        for (&d, diag) in diagonals {
            if diag.len() != slots {
                return Err(Error::InvalidInput(format!(
                    "diagonal {d} has {} entries, expected {slots}",
                    diag.len()
                )));
            }
            let d = d % slots;
            let giant = d - d % baby;
            // rot_{-giant}(diag)
            let rotated: Vec<Complex64> = (0..slots).map(|i| diag[(i + slots - giant) % slots]).collect();
            let pt = encoder.encode_slots(&rotated, scale, level, params)?;
            blocks.entry(giant).or_default().insert(d % baby, pt);
        }
        Ok(Self {
            slots,
            baby,
            level,
            plaintext_scale: scale,
            blocks,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn baby_step(&self) -> usize {
        self.baby
    }

    /// Rotation amounts this transform needs keys for.
    pub fn rotations(&self) -> Vec<i64> {
        let mut set = BTreeSet::new();
        for (&giant, inner) in &self.blocks {
            if giant != 0 {
                set.insert(giant as i64);
            }
            for &b in inner.keys() {
                if b != 0 {
                    set.insert(b as i64);
                }
            }
        }
        set.into_iter().collect()
    }

    /// Applies the transform and rescales (one level).
    pub fn apply(&self, eval: &Evaluator, ct: &Ciphertext) -> Result<Ciphertext> {
        if eval.slots() != self.slots {
            return Err(Error::InvalidInput(format!(
                "transform over {} slots used with {}-slot evaluator",
                self.slots,
                eval.slots()
            )));
        }
        if ct.level() < self.level {
            return Err(Error::LevelMismatch {
                left: ct.level(),
                right: self.level,
            });
        }
        let ct = eval.drop_to_level(ct, self.level)?;
        let needed: BTreeSet<usize> = self.blocks.values().flat_map(|m| m.keys().copied()).collect();
        let mut babies: BTreeMap<usize, Ciphertext> = BTreeMap::new();
        for b in needed {
            let r = if b == 0 {
                eval.to_ntt(&ct)
            } else {
                eval.rotate(&ct, b as i64)?
            };
            babies.insert(b, r);
        }
        let mut total: Option<Ciphertext> = None;
        for (&giant, inner) in &self.blocks {
            let mut acc: Option<Ciphertext> = None;
            for (b, pt) in inner {
                let term = eval.mul_plain(&babies[b], pt)?;
                acc = Some(match acc {
                    None => term,
                    Some(a) => eval.add(&a, &term)?,
                });
            }
            let acc = acc.expect("nonempty block");
            let acc = if giant == 0 {
                acc
            } else {
                eval.rotate(&acc, giant as i64)?
            };
            total = Some(match total {
                None => acc,
                Some(t) => eval.add(&t, &acc)?,
            });
        }
        let mut out = match total {
            Some(t) => t,
            None => {
                return Err(Error::InvalidInput("empty linear transform".into()));
            }
        };
        let expected = ct.scale * self.plaintext_scale / eval.params().q(self.level).value() as f64;
        out.rescale(eval.params())?;
        out.scale = expected;
        Ok(out)
    }
}
