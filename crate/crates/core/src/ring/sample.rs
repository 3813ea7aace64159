//! Seeded sampling of ring elements.

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution as _, Normal};

use super::params::{Basis, NoiseParams, RingParams};
use super::poly::{Form, Poly};
use crate::error::{Error, Result};

/// The generator used for every sampling call.
pub type Prng = ChaCha20Rng;

pub fn prng(seed: u64) -> Prng {
    Prng::seed_from_u64(seed)
}

/// Derives an independent child generator.
pub fn fork(rng: &mut Prng) -> Prng {
    let mut seed = [0u8; 32];
    rng.fill_bytes(&mut seed);
    Prng::from_seed(seed)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Distribution {
    Uniform,
    Gaussian { sigma: f64 },
    TernaryHw { weight: usize },
}

pub fn sample(kind: Distribution, params: &RingParams, basis: Basis, rng: &mut Prng) -> Result<Poly> {
    Ok(match kind {
        Distribution::Uniform => uniform(params, basis, Form::Coeff, rng),
        Distribution::Gaussian { sigma } => {
            if !(sigma > 0.0) {
                return Err(Error::InvalidParams(format!("sigma {sigma}")));
            }
            Poly::from_signed(params, &gaussian(params.degree(), sigma, rng), basis)
        }
        Distribution::TernaryHw { weight } => {
            Poly::from_signed(params, &ternary_hw(params.degree(), weight, rng)?, basis)
        }
    })
}

/// Uniform residues in every row; the result is uniform mod the basis product.
pub fn uniform(params: &RingParams, basis: Basis, form: Form, rng: &mut Prng) -> Poly {
    let rows = params
        .basis_moduli(basis)
        .map(|q| (0..params.degree()).map(|_| rng.random_range(0..q.value())).collect())
        .collect();
    Poly::from_rows(params, basis, form, rows).expect("shape is correct")
}

/// Rounded continuous Gaussian, rejecting samples beyond the 6-sigma tail.
pub fn gaussian(n: usize, sigma: f64, rng: &mut Prng) -> Vec<i64> {
    let normal = Normal::new(0.0, sigma).expect("sigma validated by caller");
    let bound = NoiseParams::TAIL_FACTOR * sigma;
    (0..n)
        .map(|_| loop {
            let x: f64 = normal.sample(rng);
            if x.abs() <= bound {
                break x.round() as i64;
            }
        })
        .collect()
}

/// Ternary vector with exactly `weight` nonzero entries in {-1, +1}.
pub fn ternary_hw(n: usize, weight: usize, rng: &mut Prng) -> Result<Vec<i64>> {
    if weight > n {
        return Err(Error::InvalidParams(format!(
            "hamming weight {weight} exceeds degree {n}"
        )));
    }
    let mut out = vec![0i64; n];
    for i in index::sample(rng, n, weight) {
        out[i] = if rng.random::<bool>() { 1 } else { -1 };
    }
    Ok(out)
}

/// Ternary vector with independent uniform entries in {-1, 0, 1}.
pub fn ternary_uniform(n: usize, rng: &mut Prng) -> Vec<i64> {
    (0..n).map(|_| rng.random_range(-1..=1)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_respects_tail() {
        let mut rng = prng(5);
        let v = gaussian(10_000, 3.2, &mut rng);
        assert!(v.iter().all(|x| x.abs() as f64 <= 6.0 * 3.2));
        let var = v.iter().map(|&x| (x * x) as f64).sum::<f64>() / v.len() as f64;
        assert!((var.sqrt() - 3.2).abs() < 0.2);
    }

    #[test]
    fn forks_are_independent_and_deterministic() {
        let mut a = prng(9);
        let mut b = prng(9);
        let (mut fa, mut fb) = (fork(&mut a), fork(&mut b));
        assert_eq!(fa.next_u64(), fb.next_u64());
        assert_ne!(fork(&mut a).next_u64(), fa.next_u64());
    }
}
