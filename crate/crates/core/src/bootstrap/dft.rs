//! Radix-2 factorization of the special FFT into sparse diagonal matrices.
//!
//! Both directions skip the bit-reversal permutation: `CoeffsToSlots` leaves its
//! output in bit-reversed order and `SlotsToCoeffs` expects that order back.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

/// Diagonal representation: offset `d` maps to `diag[i] = M[i][(i + d) mod n]`.
pub type Diagonals = BTreeMap<usize, Vec<Complex64>>;

struct Roots {
    m: usize,
    rot_group: Vec<usize>,
}

impl Roots {
    fn new(slots: usize) -> Self {
        let m = 4 * slots;
        let mut rot_group = Vec::with_capacity(slots);
        let mut g = 1usize;
        for _ in 0..slots {
            rot_group.push(g);
            g = g * 5 % m;
        }
        Self { m, rot_group }
    }

    fn root(&self, idx: usize) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * (idx % self.m) as f64 / self.m as f64)
    }
}

fn add_entry(diags: &mut Diagonals, n: usize, offset: usize, row: usize, v: Complex64) {
    diags
        .entry(offset % n)
        .or_insert_with(|| vec![Complex64::new(0.0, 0.0); n])[row] += v;
}

/// Butterfly stage of the inverse transform for block length `len`.
fn inverse_stage(roots: &Roots, n: usize, len: usize) -> Diagonals {
    let lenh = len / 2;
    let lenq = 4 * len;
    let stride = roots.m / lenq;
    let one = Complex64::new(1.0, 0.0);
    let mut d = Diagonals::new();
    for i in (0..n).step_by(len) {
        for j in 0..lenh {
            let w = roots.root((lenq - roots.rot_group[j] % lenq) * stride);
            // out[i+j] = in[i+j] + in[i+j+lenh]
            add_entry(&mut d, n, 0, i + j, one);
            add_entry(&mut d, n, lenh, i + j, one);
            // out[i+j+lenh] = (in[i+j] - in[i+j+lenh]) * w
            add_entry(&mut d, n, n - lenh, i + j + lenh, w);
            add_entry(&mut d, n, 0, i + j + lenh, -w);
        }
    }
    d
}

/// Butterfly stage of the forward transform for block length `len`.
fn forward_stage(roots: &Roots, n: usize, len: usize) -> Diagonals {
    let lenh = len / 2;
    let lenq = 4 * len;
    let stride = roots.m / lenq;
    let one = Complex64::new(1.0, 0.0);
    let mut d = Diagonals::new();
    for i in (0..n).step_by(len) {
        for j in 0..lenh {
            let w = roots.root((roots.rot_group[j] % lenq) * stride);
            // out[i+j] = in[i+j] + w in[i+j+lenh]
            add_entry(&mut d, n, 0, i + j, one);
            add_entry(&mut d, n, lenh, i + j, w);
            // out[i+j+lenh] = in[i+j] - w in[i+j+lenh]
            add_entry(&mut d, n, n - lenh, i + j + lenh, one);
            add_entry(&mut d, n, 0, i + j + lenh, -w);
        }
    }
    d
}

/// `outer * inner` (apply `inner` first).
pub fn compose(outer: &Diagonals, inner: &Diagonals, n: usize) -> Diagonals {
    let mut out = Diagonals::new();
    for (&a, da) in outer {
        for (&b, db) in inner {
            let entry = out
                .entry((a + b) % n)
                .or_insert_with(|| vec![Complex64::new(0.0, 0.0); n]);
            for i in 0..n {
                entry[i] += da[i] * db[(i + a) % n];
            }
        }
    }
    out.retain(|_, d| d.iter().any(|v| v.norm() > 1e-300));
    out
}

pub fn apply_diagonals(diags: &Diagonals, z: &[Complex64]) -> Vec<Complex64> {
    let n = z.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (&d, diag) in diags {
        for i in 0..n {
            out[i] += diag[i] * z[(i + d) % n];
        }
    }
    out
}

/// Splits `stages` (in application order) into `parts` nearly even groups and
/// multiplies each group out.
fn group(stages: Vec<Diagonals>, parts: usize, n: usize) -> Vec<Diagonals> {
    let parts = parts.clamp(1, stages.len().max(1));
    let total = stages.len();
    let mut out = Vec::with_capacity(parts);
    let mut iter = stages.into_iter();
    for p in 0..parts {
        let size = total / parts + usize::from(p < total % parts);
        let mut acc: Option<Diagonals> = None;
        for stage in iter.by_ref().take(size) {
            acc = Some(match acc {
                None => stage,
                Some(a) => compose(&stage, &a, n),
            });
        }
        out.push(acc.unwrap_or_else(|| identity(n)));
    }
    out
}

fn identity(n: usize) -> Diagonals {
    let mut d = Diagonals::new();
    d.insert(0, vec![Complex64::new(1.0, 0.0); n]);
    d
}

fn scaled(mut d: Diagonals, factor: f64) -> Diagonals {
    for diag in d.values_mut() {
        diag.iter_mut().for_each(|v| *v *= factor);
    }
    d
}

/// Factors of `factor * SF_n^{-1}` without the final bit reversal, in application order.
pub fn coeffs_to_slots_factors(slots: usize, depth: usize, factor: f64) -> Vec<Diagonals> {
    if slots == 1 {
        return vec![scaled(identity(1), factor)];
    }
    let roots = Roots::new(slots);
    let mut stages = Vec::new();
    let mut len = slots;
    while len >= 2 {
        stages.push(inverse_stage(&roots, slots, len));
        len /= 2;
    }
    let mut factors = group(stages, depth, slots);
    let first = factors.remove(0);
    factors.insert(0, scaled(first, factor / slots as f64));
    factors
}

/// Factors of `SF_n` acting on bit-reversed input, in application order.
pub fn slots_to_coeffs_factors(slots: usize, depth: usize) -> Vec<Diagonals> {
    if slots == 1 {
        return vec![identity(1)];
    }
    let roots = Roots::new(slots);
    let mut stages = Vec::new();
    let mut len = 2;
    while len <= slots {
        stages.push(forward_stage(&roots, slots, len));
        len *= 2;
    }
    group(stages, depth, slots)
}
