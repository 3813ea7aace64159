//! Chebyshev-basis polynomial evaluation with baby-step giant-step splitting.

use num_complex::Complex64;

use super::evaluator::Evaluator;
use crate::error::{Error, Result};
use crate::rlwe::Ciphertext;

/// `sum_j coeffs[j] * T_j(y)` with `y = (2x - low - high) / (high - low)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChebyshevPoly {
    pub coeffs: Vec<f64>,
    pub low: f64,
    pub high: f64,
}

impl ChebyshevPoly {
    pub fn new(coeffs: Vec<f64>, low: f64, high: f64) -> Self {
        Self { coeffs, low, high }
    }

    /// Interpolates `f` at the `degree + 1` Chebyshev nodes of `[low, high]`.
    pub fn interpolate(f: impl Fn(f64) -> f64, degree: usize, low: f64, high: f64) -> Self {
        let m = degree + 1;
        let nodes: Vec<f64> = (0..m)
            .map(|k| (std::f64::consts::PI * (k as f64 + 0.5) / m as f64).cos())
            .collect();
        let values: Vec<f64> = nodes
            .iter()
            .map(|&y| f(0.5 * (y * (high - low) + high + low)))
            .collect();
        let coeffs = (0..m)
            .map(|j| {
                let s: f64 = (0..m)
                    .map(|k| values[k] * (std::f64::consts::PI * j as f64 * (k as f64 + 0.5) / m as f64).cos())
                    .sum();
                s * if j == 0 { 1.0 } else { 2.0 } / m as f64
            })
            .collect();
        Self { coeffs, low, high }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    fn maps_domain(&self) -> bool {
        self.low != -1.0 || self.high != 1.0
    }

    fn to_unit(&self, x: f64) -> f64 {
        (2.0 * x - self.low - self.high) / (self.high - self.low)
    }

    /// Clenshaw evaluation in plain arithmetic.
    pub fn eval(&self, x: f64) -> f64 {
        let y = self.to_unit(x);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = c + 2.0 * y * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs.first().copied().unwrap_or(0.0) + y * b1 - b2
    }

    /// Levels consumed by [`eval_chebyshev`].
    pub fn depth(&self) -> usize {
        let coeffs = trimmed(&self.coeffs);
        let plan = Plan::new(degree_of(&coeffs).max(1));
        let top = 64usize;
        let levels = plan.structural_levels(top);
        let natural = plan.natural_level(&coeffs, plan.giants.len(), &levels);
        let map = usize::from(self.maps_domain());
        map + top.saturating_sub(natural.min(top))
    }
}

fn trimmed(coeffs: &[f64]) -> Vec<f64> {
    let max = coeffs.iter().fold(0f64, |m, c| m.max(c.abs()));
    coeffs
        .iter()
        .map(|&c| if c.abs() <= 1e-14 * max { 0.0 } else { c })
        .collect()
}

fn degree_of(coeffs: &[f64]) -> usize {
    coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0)
}

/// `p = q * T_k + r` for `deg p < 2k`.
fn divide(coeffs: &[f64], k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut r: Vec<f64> = coeffs.iter().take(k).copied().collect();
    r.resize(k, 0.0);
    let mut q = vec![0.0; coeffs.len().saturating_sub(k).max(1)];
    if let Some(&ck) = coeffs.get(k) {
        q[0] = ck;
    }
    for (j, &c) in coeffs.iter().enumerate().skip(k + 1) {
        q[j - k] += 2.0 * c;
        r[2 * k - j] -= c;
    }
    (q, r)
}

/// Structure of the evaluation: babies `T_1..=T_baby`, giants `T_{baby * 2^i}`.
struct Plan {
    degree: usize,
    baby: usize,
    giants: Vec<usize>,
}

// a constant leaf places no level constraint
const FREE: usize = usize::MAX / 2;

impl Plan {
    fn new(degree: usize) -> Self {
        let m = usize::BITS - degree.leading_zeros();
        let l = m.div_ceil(2);
        let baby = 1usize << l;
        let giants = (l..m).map(|i| 1usize << i).collect();
        Self { degree, baby, giants }
    }

    /// Level of `T_j` for `j in 0..=max(baby, last giant)` when `T_1` sits at `top`.
    fn structural_levels(&self, top: usize) -> Vec<usize> {
        let max = self.giants.last().copied().unwrap_or(0).max(self.baby);
        (0..=max)
            .map(|j| {
                if j <= 1 {
                    top
                } else {
                    top.saturating_sub((usize::BITS - (j - 1).leading_zeros()) as usize)
                }
            })
            .collect()
    }

    /// Highest level at which `coeffs` can be produced with the given giant budget.
    fn natural_level(&self, coeffs: &[f64], giants: usize, levels: &[usize]) -> usize {
        let deg = degree_of(coeffs);
        if giants > 0 && deg < self.giants[giants - 1] {
            return self.natural_level(coeffs, giants - 1, levels);
        }
        if giants == 0 {
            let lowest = (1..=deg).filter(|&j| coeffs[j] != 0.0).map(|j| levels[j]).min();
            return match lowest {
                None => FREE,
                Some(l) => l.saturating_sub(1),
            };
        }
        let k = self.giants[giants - 1];
        let (q, r) = divide(&coeffs[..=deg], k);
        let lq = self.natural_level(&q, giants - 1, levels);
        let prod = lq.min(levels[k]).saturating_sub(1);
        prod.min(self.natural_level(&r, giants - 1, levels))
    }
}

struct Basis<'a> {
    eval: &'a Evaluator,
    powers: Vec<Option<Ciphertext>>,
}

impl<'a> Basis<'a> {
    fn get(&self, j: usize) -> &Ciphertext {
        self.powers[j].as_ref().expect("power computed")
    }

    /// Brings `ct` to `level` with exactly `scale`, spending one level if needed.
    fn match_scale(&self, ct: &Ciphertext, scale: f64, level: usize) -> Result<Ciphertext> {
        if ct.level() <= level {
            return self.eval.drop_to_level(ct, level);
        }
        self.eval.mul_const_to(ct, Complex64::new(1.0, 0.0), scale, level)
    }

    /// `T_{a+b} = 2 T_a T_b - T_{a-b}`.
    fn product(&self, a: usize, b: usize) -> Result<Ciphertext> {
        let eval = self.eval;
        let prod = eval.mul(self.get(a), self.get(b))?;
        let two = eval.add(&prod, &prod)?;
        if a == b {
            return eval.add_real(&two, -1.0);
        }
        let diff = self.match_scale(self.get(a - b), two.scale, two.level())?;
        eval.sub(&two, &diff)
    }

    fn build(eval: &'a Evaluator, x: Ciphertext, plan: &Plan) -> Result<Self> {
        let max = plan.giants.last().copied().unwrap_or(0).max(plan.baby);
        let mut basis = Basis {
            eval,
            powers: vec![None; max + 1],
        };
        basis.powers[1] = Some(x);
        for j in 2..plan.baby.min(plan.degree + 1) {
            let a = j.div_ceil(2);
            basis.powers[j] = Some(basis.product(a, j / 2)?);
        }
        for &g in &plan.giants {
            if basis.powers[g].is_none() {
                basis.powers[g] = Some(basis.product(g / 2, g / 2)?);
            }
        }
        Ok(basis)
    }

    fn levels(&self) -> Vec<usize> {
        self.powers
            .iter()
            .map(|p| p.as_ref().map_or(FREE, |c| c.level()))
            .collect()
    }
}

fn eval_rec(basis: &Basis, plan: &Plan, coeffs: &[f64], giants: usize, scale: f64, level: usize) -> Result<Ciphertext> {
    let eval = basis.eval;
    let params = eval.params();
    let deg = degree_of(coeffs);
    if giants > 0 && deg < plan.giants[giants - 1] {
        return eval_rec(basis, plan, coeffs, giants - 1, scale, level);
    }
    if giants == 0 {
        let terms: Vec<usize> = (1..=deg).filter(|&j| coeffs[j] != 0.0).collect();
        if terms.is_empty() {
            let template = basis.get(1);
            let zero = Ciphertext::zero(params, level, scale, template.domain, template.form());
            return eval.add_real(&zero, coeffs.first().copied().unwrap_or(0.0));
        }
        let q = params.q(level + 1).value() as f64;
        let mut acc: Option<Ciphertext> = None;
        for j in terms {
            let t = eval.drop_to_level(basis.get(j), level + 1)?;
            let c = Complex64::new(coeffs[j], 0.0);
            let mut term = eval.mul_const_at_scale(&t, c, scale * q / t.scale)?;
            term.scale = scale * q;
            acc = Some(match acc {
                None => term,
                Some(a) => eval.add(&a, &term)?,
            });
        }
        let acc = acc.expect("nonempty");
        let mut acc = eval.add_real(&acc, coeffs[0])?;
        acc.rescale(params)?;
        acc.scale = scale;
        return Ok(acc);
    }
    let k = plan.giants[giants - 1];
    let (q_coeffs, r_coeffs) = divide(&coeffs[..=deg], k);
    let t = eval.drop_to_level(basis.get(k), level + 1)?;
    let q_prime = params.q(level + 1).value() as f64;
    let q_scale = scale * q_prime / t.scale;
    let q_ct = eval_rec(basis, plan, &q_coeffs, giants - 1, q_scale, level + 1)?;
    let mut prod = eval.mul(&q_ct, &t)?;
    prod.scale = scale;
    let r_ct = eval_rec(basis, plan, &r_coeffs, giants - 1, scale, level)?;
    eval.add(&prod, &r_ct)
}

/// Evaluates `poly` on every slot (or coefficient) of `ct`.
///
/// The result carries `target_scale` exactly (default: the input scale).
pub fn eval_chebyshev(
    eval: &Evaluator,
    ct: &Ciphertext,
    poly: &ChebyshevPoly,
    target_scale: Option<f64>,
) -> Result<Ciphertext> {
    let needed = poly.depth();
    if ct.level() < needed {
        return Err(Error::InsufficientLevels {
            needed,
            available: ct.level(),
        });
    }
    let target = target_scale.unwrap_or(ct.scale);
    let x = if poly.maps_domain() {
        let alpha = 2.0 / (poly.high - poly.low);
        let beta = -(poly.low + poly.high) / (poly.high - poly.low);
        let y = eval.mul_real(ct, alpha)?;
        eval.add_real(&y, beta)?
    } else {
        ct.clone()
    };
    let coeffs = trimmed(&poly.coeffs);
    let plan = Plan::new(degree_of(&coeffs).max(1));
    let basis = Basis::build(eval, x, &plan)?;
    let levels = basis.levels();
    let natural = plan.natural_level(&coeffs, plan.giants.len(), &levels);
    if natural == FREE {
        let zero = Ciphertext::zero(eval.params(), ct.level(), target, ct.domain, ct.form());
        return eval.add_real(&zero, coeffs.first().copied().unwrap_or(0.0));
    }
    eval_rec(&basis, &plan, &coeffs, plan.giants.len(), target, natural)
}
