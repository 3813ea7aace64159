//! Ring repacking: the constant coefficients of up to `n` ciphertexts become
//! the coefficients of one ciphertext.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ring::sample::Prng;
use crate::ring::{NoiseParams, RingParams};
use crate::rlwe::{apply_galois, Ciphertext, Gadget, GaloisKeys, SecretKey};

/// Exponent used in round `round` of a repack in a ring of `degree`.
pub fn round_exponent(round: usize, degree: usize) -> usize {
    let two_n = 2 * degree;
    if round == 0 {
        return two_n - 1;
    }
    let mut g = 5usize % two_n;
    for _ in 1..round {
        g = g * g % two_n;
    }
    g
}

/// The `log n` exponents `{2n - 1} ∪ {5^(2^(i-1)) : 1 <= i < log n}`.
pub fn repack_exponents(degree: usize) -> Vec<usize> {
    (0..degree.trailing_zeros() as usize)
        .map(|r| round_exponent(r, degree))
        .collect()
}

/// Switching keys for every automorphism a repack uses.
#[derive(Clone, Debug, PartialEq)]
pub struct RepackKeySet {
    pub degree: usize,
    pub gadget: Gadget,
    pub keys: GaloisKeys,
}

impl RepackKeySet {
    pub fn generate(
        sk: &SecretKey,
        params: &RingParams,
        gadget: Gadget,
        noise: &NoiseParams,
        rng: &mut Prng,
    ) -> Result<Self> {
        let degree = params.degree();
        let keys = GaloisKeys::generate(
            sk,
            repack_exponents(degree),
            gadget,
            params.max_level(),
            params,
            noise,
            rng,
        )?;
        Ok(Self { degree, gadget, keys })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// Repack result with the number of automorphisms spent.
#[derive(Clone, Debug)]
pub struct Repacked {
    pub ciphertext: Ciphertext,
    pub automorphisms: usize,
}

/// Packs `m_i[0]` of input `i` into coefficient `i`. Missing inputs are zero.
pub fn repack(cts: &[Ciphertext], keys: &RepackKeySet, params: &RingParams) -> Result<Repacked> {
    let n = params.degree();
    if keys.degree != n {
        return Err(Error::DegreeMismatch {
            left: keys.degree,
            right: n,
        });
    }
    let first = cts
        .first()
        .ok_or_else(|| Error::InvalidInput("repack needs at least one ciphertext".into()))?;
    if cts.len() > n {
        return Err(Error::InvalidInput(format!(
            "{} ciphertexts exceed the ring degree {n}",
            cts.len()
        )));
    }
    let level = first.level();
    for ct in cts {
        if ct.level() != level {
            return Err(Error::LevelMismatch {
                left: level,
                right: ct.level(),
            });
        }
        if ct.scale != first.scale || ct.domain != first.domain {
            return Err(Error::InvalidInput("repack inputs must share scale and domain".into()));
        }
    }

    // pre-multiplication by n^{-1} mod each prime
    let inv: Vec<u64> = (0..=level)
        .map(|i| {
            let q = params.q(i);
            q.inv(n as u64 % q.value()).expect("degree invertible mod an NTT prime")
        })
        .collect();
    let mut slots: Vec<Option<Ciphertext>> = cts
        .iter()
        .map(|ct| {
            let mut c = ct.clone();
            for p in c.parts.iter_mut() {
                p.mul_scalar_rows(&inv, params);
            }
            Some(c)
        })
        .collect();
    slots.resize(n, None);

    let mut automorphisms = 0;
    for round in 0..n.trailing_zeros() as usize {
        let t = n >> (round + 1);
        let g = round_exponent(round, n);
        let key = keys.keys.get(g)?;
        for j in 0..t {
            let lo = slots[j].take();
            let hi = slots[j + t].take();
            let shifted = hi.map(|c| c.mul_monomial(t, params));
            let (sum, diff) = match (lo, shifted) {
                (None, None) => continue,
                (Some(a), None) => (a.clone(), a),
                (None, Some(b)) => {
                    let mut neg = b.clone();
                    neg.neg_assign(params);
                    (b, neg)
                }
                (Some(a), Some(b)) => {
                    let mut sum = a.clone();
                    sum.add_assign(&b, params)?;
                    let mut diff = a;
                    diff.sub_assign(&b, params)?;
                    (sum, diff)
                }
            };
            let rotated = apply_galois(&diff, g, key, params)?;
            automorphisms += 1;
            let mut out = sum;
            out.add_assign(&rotated, params)?;
            slots[j] = Some(out);
        }
    }
    let ciphertext = match slots.swap_remove(0) {
        Some(c) => c,
        None => unreachable!("first input is always present"),
    };
    Ok(Repacked {
        ciphertext,
        automorphisms,
    })
}

/// Splits `cts` into batches of `n` and repacks each, in parallel.
pub fn repack_batches(cts: &[Ciphertext], keys: &RepackKeySet, params: &RingParams) -> Result<Vec<Ciphertext>> {
    cts.par_chunks(params.degree())
        .map(|chunk| repack(chunk, keys, params).map(|r| r.ciphertext))
        .collect()
}
