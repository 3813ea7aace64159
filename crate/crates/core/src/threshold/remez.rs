//! Remez exchange for odd minimax approximations of `sign` on `[-1,-γ] ∪ [γ,1]`.
//!
//! By symmetry the problem reduces to approximating 1 on `[γ, 1]` with
//! `sum_k c_k T_{2k+1}(x)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const GRID_UNIFORM: usize = 8192;
const GRID_GEOMETRIC: usize = 2048;
const CONVERGENCE: f64 = 1e-9;
// evaluation roundoff bounds how far the levelled error can approach the maximum
const ROUNDOFF_FLOOR: f64 = 4e-15;

/// Best odd approximation of `sign` with its certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct OddMinimax {
    pub gap: f64,
    /// Chebyshev coefficients over `[-1, 1]`; even entries are zero.
    pub coeffs: Vec<f64>,
    /// Sup-norm error on `[γ, 1]` measured at the refined extrema.
    pub error: f64,
    /// Alternation points in `[γ, 1]`.
    pub reference: Vec<f64>,
    pub iterations: usize,
}

impl OddMinimax {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        odd_eval(&odd_part(&self.coeffs), x)
    }

    /// Residual `p(x) - 1` at the alternation points.
    pub fn residuals(&self) -> Vec<f64> {
        self.reference.iter().map(|&x| self.eval(x) - 1.0).collect()
    }
}

/// `sum_k c_k T_{2k+1}(x)` via the three-term recurrence.
fn odd_eval(odd: &[f64], x: f64) -> f64 {
    let (mut t_prev, mut t) = (1.0, x);
    let mut acc = 0.0;
    for (k, &c) in odd.iter().enumerate() {
        if k > 0 {
            for _ in 0..2 {
                let next = 2.0 * x * t - t_prev;
                t_prev = t;
                t = next;
            }
        }
        acc += c * t;
    }
    acc
}

fn odd_basis(terms: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(terms);
    let (mut t_prev, mut t) = (1.0, x);
    for k in 0..terms {
        if k > 0 {
            for _ in 0..2 {
                let next = 2.0 * x * t - t_prev;
                t_prev = t;
                t = next;
            }
        }
        out.push(t);
    }
    out
}

fn odd_part(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().skip(1).step_by(2).copied().collect()
}

fn full_coeffs(odd: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; 2 * odd.len()];
    for (k, &c) in odd.iter().enumerate() {
        out[2 * k + 1] = c;
    }
    out
}

fn search_grid(gap: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=GRID_UNIFORM)
        .map(|i| gap + (1.0 - gap) * i as f64 / GRID_UNIFORM as f64)
        .collect();
    let ratio = (1.0 / gap).ln();
    grid.extend((0..=GRID_GEOMETRIC).map(|i| gap * (ratio * i as f64 / GRID_GEOMETRIC as f64).exp()));
    // Chebyshev-spaced points resolve the oscillations near both ends
    grid.extend((0..=GRID_UNIFORM).map(|i| {
        let y = (std::f64::consts::PI * i as f64 / GRID_UNIFORM as f64).cos();
        gap + (1.0 - gap) * 0.5 * (1.0 - y)
    }));
    grid.retain(|x| (gap..=1.0).contains(x));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Maximizes `sign * err` on `[lo, hi]` by golden-section search.
fn refine(err: &dyn Fn(f64) -> f64, sign: f64, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (sign * err(a), sign * err(b));
    for _ in 0..80 {
        if fa > fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = sign * err(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = sign * err(b);
        }
    }
    0.5 * (lo + hi)
}

/// Local extrema of `err` on the grid, refined, as `(x, err(x))` in order.
fn extrema(err: &dyn Fn(f64) -> f64, grid: &[f64]) -> Vec<(f64, f64)> {
    let values: Vec<f64> = grid.iter().map(|&x| err(x)).collect();
    let last = grid.len() - 1;
    let mut out = Vec::new();
    for i in 0..=last {
        let v = values[i].abs();
        let left = if i > 0 { values[i - 1].abs() } else { f64::NEG_INFINITY };
        let right = if i < last {
            values[i + 1].abs()
        } else {
            f64::NEG_INFINITY
        };
        let same_left = i == 0 || values[i - 1].signum() == values[i].signum();
        let same_right = i == last || values[i + 1].signum() == values[i].signum();
        let is_peak = (v >= left || !same_left) && (v >= right || !same_right) && (v > left || v > right);
        if !is_peak {
            continue;
        }
        let x = if i == 0 || i == last {
            grid[i]
        } else {
            let sign = values[i].signum();
            let x = refine(err, sign, grid[i - 1], grid[i + 1]);
            if sign * err(x) >= sign * values[i] {
                x
            } else {
                grid[i]
            }
        };
        out.push((x, err(x)));
    }
    out
}

/// Keeps an alternating subsequence of exactly `count` points containing the global maximum.
fn select_reference(mut points: Vec<(f64, f64)>, count: usize) -> Option<Vec<f64>> {
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for p in points.drain(..) {
        match merged.last_mut() {
            Some(last) if last.1.signum() == p.1.signum() => {
                if p.1.abs() > last.1.abs() {
                    *last = p;
                }
            }
            _ => merged.push(p),
        }
    }
    while merged.len() > count {
        if merged[0].1.abs() < merged[merged.len() - 1].1.abs() {
            merged.remove(0);
        } else {
            merged.pop();
        }
    }
    (merged.len() == count).then(|| merged.into_iter().map(|p| p.0).collect())
}

/// Solves `p(r_i) + (-1)^i E = 1` for the odd coefficients and the levelled error `E`.
fn solve_reference(reference: &[f64], terms: usize) -> Option<(Vec<f64>, f64)> {
    let n = terms + 1;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (i, &x) in reference.iter().enumerate() {
        for (k, t) in odd_basis(terms, x).into_iter().enumerate() {
            m[(i, k)] = t;
        }
        m[(i, terms)] = if i % 2 == 0 { 1.0 } else { -1.0 };
    }
    let sol = m.lu().solve(&DVector::from_element(n, 1.0))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((sol.as_slice()[..terms].to_vec(), sol[terms]))
}

/// Minimax odd approximation of `sign` of odd `degree` on `[-1,-gap] ∪ [gap,1]`.
pub fn remez_minimax(gap: f64, degree: usize) -> Result<OddMinimax> {
    if !(gap > 0.0 && gap <= 1.0) {
        return Err(Error::InvalidParams(format!("sign gap {gap} outside (0, 1]")));
    }
    if degree.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!("degree {degree} is not odd")));
    }
    let terms = degree.div_ceil(2);
    // the domain is (nearly) one point: c x with c = 2/(1+γ) levels both ends
    let linear_error = (1.0 - gap) / (1.0 + gap);
    if linear_error <= 1e-15 {
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[1] = 2.0 / (1.0 + gap);
        return Ok(OddMinimax {
            gap,
            coeffs,
            error: linear_error,
            reference: vec![gap, 1.0],
            iterations: 0,
        });
    }

    let count = terms + 1;
    let mut reference: Vec<f64> = (0..count)
        .map(|i| {
            let y = (std::f64::consts::PI * i as f64 / (count - 1) as f64).cos();
            gap + (1.0 - gap) * 0.5 * (1.0 - y)
        })
        .collect();
    let grid = search_grid(gap);
    let mut residual = f64::INFINITY;
    for iteration in 1..=MAX_ITERATIONS {
        let (odd, levelled) = solve_reference(&reference, terms).ok_or(Error::NoConvergence {
            iterations: iteration,
            residual,
        })?;
        let err = |x: f64| odd_eval(&odd, x) - 1.0;
        let found = extrema(&err, &grid);
        let max = found.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
        residual = (max - levelled.abs()) / max.max(f64::MIN_POSITIVE);
        let next = select_reference(found, count);
        let done = max - levelled.abs() <= CONVERGENCE * max + ROUNDOFF_FLOOR;
        if done {
            let reference = match next {
                Some(r) if r.len() == count => r,
                _ => reference,
            };
            return Ok(OddMinimax {
                gap,
                coeffs: full_coeffs(&odd),
                error: max,
                reference,
                iterations: iteration,
            });
        }
        reference = next.ok_or(Error::NoConvergence {
            iterations: iteration,
            residual,
        })?;
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}
