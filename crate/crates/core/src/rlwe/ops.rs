//! Key-switched operations: relinearization, automorphisms, ring split/merge.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::ciphertext::Ciphertext;
use super::gadget::Gadget;
use super::keys::SecretKey;
use super::keyswitch::{switch_key, switch_key_gen, SwitchingKey};
use crate::error::{Error, Result};
use crate::ring::sample::Prng;
use crate::ring::{Basis, Form, NoiseParams, Poly, RingParams};

/// Identifier of the derived secret `phi_g(s)` or `s^2`, used as a key source tag.
fn derived_id(base: u64, tag: u64) -> u64 {
    base.rotate_left(17) ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Relinearization key `s^2 -> s`.
pub fn relin_key_gen(
    sk: &SecretKey,
    gadget: Gadget,
    level: usize,
    params: &RingParams,
    noise: &NoiseParams,
    rng: &mut Prng,
) -> Result<SwitchingKey> {
    let mut s2 = sk.ntt().clone();
    s2.mul_assign(sk.ntt(), params)?;
    switch_key_gen(&s2, derived_id(sk.id(), 2), sk, gadget, level, params, noise, rng)
}

/// Galois key `phi_g(s) -> s`.
pub fn galois_key_gen(
    sk: &SecretKey,
    exponent: usize,
    gadget: Gadget,
    level: usize,
    params: &RingParams,
    noise: &NoiseParams,
    rng: &mut Prng,
) -> Result<SwitchingKey> {
    let from = sk.ntt().automorphism(exponent, params)?;
    let tag = derived_id(sk.id(), exponent as u64 | 1 << 40);
    switch_key_gen(&from, tag, sk, gadget, level, params, noise, rng)
}

/// Galois keys indexed by automorphism exponent.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GaloisKeys {
    keys: BTreeMap<usize, SwitchingKey>,
}

impl GaloisKeys {
    #[allow(clippy::too_many_arguments)]
    pub fn generate(
        sk: &SecretKey,
        exponents: impl IntoIterator<Item = usize>,
        gadget: Gadget,
        level: usize,
        params: &RingParams,
        noise: &NoiseParams,
        rng: &mut Prng,
    ) -> Result<Self> {
        let mut keys = BTreeMap::new();
        for g in exponents {
            let g = g % (2 * params.degree());
            if g == 1 || keys.contains_key(&g) {
                continue;
            }
            keys.insert(g, galois_key_gen(sk, g, gadget, level, params, noise, rng)?);
        }
        Ok(Self { keys })
    }

    pub fn get(&self, exponent: usize) -> Result<&SwitchingKey> {
        self.keys
            .get(&exponent)
            .ok_or_else(|| Error::MissingKey(format!("galois exponent {exponent}")))
    }

    pub fn insert(&mut self, exponent: usize, key: SwitchingKey) {
        self.keys.insert(exponent, key);
    }

    pub fn exponents(&self) -> impl Iterator<Item = usize> + '_ {
        self.keys.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&usize, &SwitchingKey)> {
        self.keys.iter()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn extend(&mut self, other: GaloisKeys) {
        self.keys.extend(other.keys);
    }
}

/// Degree-2 to degree-1 via the `s^2 -> s` key.
pub fn relinearize(ct: &Ciphertext, rlk: &SwitchingKey, params: &RingParams) -> Result<Ciphertext> {
    match ct.degree() {
        1 => Ok(ct.clone()),
        2 => {
            let (k0, k1) = switch_key(&ct.parts[2], rlk, params)?;
            let mut c0 = ct.parts[0].clone().into_form(params, Form::Ntt);
            let mut c1 = ct.parts[1].clone().into_form(params, Form::Ntt);
            c0.add_assign(&k0, params)?;
            c1.add_assign(&k1, params)?;
            Ciphertext::new(vec![c0, c1], ct.scale, ct.domain)
        }
        k => Err(Error::UnsupportedDegree(k)),
    }
}

/// Applies `X -> X^g` and switches back to the original secret.
pub fn apply_galois(ct: &Ciphertext, exponent: usize, key: &SwitchingKey, params: &RingParams) -> Result<Ciphertext> {
    if ct.degree() != 1 {
        return Err(Error::UnsupportedDegree(ct.degree()));
    }
    let g = exponent % (2 * params.degree());
    if g == 1 {
        return Ok(ct.clone());
    }
    let c0 = ct.parts[0].automorphism(g, params)?;
    let c1 = ct.parts[1].automorphism(g, params)?;
    let (k0, k1) = switch_key(&c1, key, params)?;
    let mut c0 = c0.into_form(params, Form::Ntt);
    c0.add_assign(&k0, params)?;
    Ciphertext::new(vec![c0, k1], ct.scale, ct.domain)
}

/// Embeds `a(Y)` from the half ring as `a(X^2)` in the full ring (coefficient form).
fn embed_even(a: &Poly, small: &RingParams, large: &RingParams) -> Result<Poly> {
    let a = a.clone().into_form(small, Form::Coeff);
    let basis = a.basis();
    let mut out = Poly::zero(large, basis, Form::Coeff);
    for (r, row) in a.rows().iter().enumerate() {
        let dst = &mut out.rows_mut()[r];
        for (j, &c) in row.iter().enumerate() {
            dst[2 * j] = c;
        }
    }
    Ok(out)
}

fn check_ring_pair(small: &RingParams, large: &RingParams, level: usize) -> Result<()> {
    if 2 * small.degree() != large.degree() {
        return Err(Error::DegreeMismatch {
            left: small.degree(),
            right: large.degree(),
        });
    }
    if level > small.max_level().min(large.max_level()) || (0..=level).any(|i| small.q(i).value() != large.q(i).value())
    {
        return Err(Error::InvalidParams(
            "split/merge rings must share the arithmetic primes in use".into(),
        ));
    }
    Ok(())
}

/// The half-ring secret viewed in the full ring, `s'(X^2)`.
pub fn embedded_secret(small_sk: &SecretKey, large: &RingParams) -> SecretKey {
    let mut coeffs = vec![0i64; large.degree()];
    for (j, &c) in small_sk.coeffs().iter().enumerate() {
        coeffs[2 * j] = c;
    }
    SecretKey::from_coeffs(large, coeffs, derived_id(small_sk.id(), 0x5eed))
}

/// Key for merging: `s'(X^2) -> s`.
pub fn merge_key_gen(
    small_sk: &SecretKey,
    large_sk: &SecretKey,
    gadget: Gadget,
    level: usize,
    large: &RingParams,
    noise: &NoiseParams,
    rng: &mut Prng,
) -> Result<SwitchingKey> {
    let from = embedded_secret(small_sk, large);
    switch_key_gen(from.ntt(), small_sk.id(), large_sk, gadget, level, large, noise, rng)
}

/// Key for splitting: `s -> s'(X^2)`.
pub fn split_key_gen(
    large_sk: &SecretKey,
    small_sk: &SecretKey,
    gadget: Gadget,
    level: usize,
    large: &RingParams,
    noise: &NoiseParams,
    rng: &mut Prng,
) -> Result<SwitchingKey> {
    let to = embedded_secret(small_sk, large);
    switch_key_gen(large_sk.ntt(), large_sk.id(), &to, gadget, level, large, noise, rng)
}

/// Merges two half-ring ciphertexts into `m_0(X^2) + X * m_1(X^2)` in the full ring.
pub fn ring_merge(
    ct0: &Ciphertext,
    ct1: &Ciphertext,
    key: &SwitchingKey,
    small: &RingParams,
    large: &RingParams,
) -> Result<Ciphertext> {
    if ct0.level() != ct1.level() {
        return Err(Error::LevelMismatch {
            left: ct0.level(),
            right: ct1.level(),
        });
    }
    if ct0.domain != ct1.domain {
        return Err(Error::DomainMismatch);
    }
    if ct0.degree() != 1 || ct1.degree() != 1 {
        return Err(Error::UnsupportedDegree(ct0.degree().max(ct1.degree())));
    }
    check_ring_pair(small, large, ct0.level())?;
    let mut parts = Vec::with_capacity(2);
    for i in 0..2 {
        let mut p = embed_even(&ct0.parts[i], small, large)?;
        let odd = embed_even(&ct1.parts[i], small, large)?.mul_monomial(1, large);
        p.add_assign(&odd, large)?;
        parts.push(p);
    }
    let (k0, k1) = switch_key(&parts[1], key, large)?;
    let mut c0 = parts.swap_remove(0).into_form(large, Form::Ntt);
    c0.add_assign(&k0, large)?;
    Ciphertext::new(vec![c0, k1], ct0.scale, ct0.domain)
}

/// Splits a full-ring ciphertext of `m(X) = m_0(Y) + X * m_1(Y)` into `(m_0, m_1)`.
pub fn ring_split(
    ct: &Ciphertext,
    key: &SwitchingKey,
    large: &RingParams,
    small: &RingParams,
) -> Result<(Ciphertext, Ciphertext)> {
    if ct.degree() != 1 {
        return Err(Error::UnsupportedDegree(ct.degree()));
    }
    check_ring_pair(small, large, ct.level())?;
    let (k0, k1) = switch_key(&ct.parts[1], key, large)?;
    let mut c0 = ct.parts[0].clone().into_form(large, Form::Ntt);
    c0.add_assign(&k0, large)?;
    let mut outs: [Vec<Poly>; 2] = [Vec::new(), Vec::new()];
    for p in [c0, k1] {
        let p = p.into_form(large, Form::Coeff);
        let basis = Basis::q(p.level());
        let mut even = Poly::zero(small, basis, Form::Coeff);
        let mut odd = Poly::zero(small, basis, Form::Coeff);
        for (r, row) in p.rows().iter().enumerate() {
            for (j, pair) in row.chunks_exact(2).enumerate() {
                even.rows_mut()[r][j] = pair[0];
                odd.rows_mut()[r][j] = pair[1];
            }
        }
        outs[0].push(even);
        outs[1].push(odd);
    }
    let [e, o] = outs;
    Ok((
        Ciphertext::new(e, ct.scale, ct.domain)?,
        Ciphertext::new(o, ct.scale, ct.domain)?,
    ))
}

/// Rings of degree `n, 2n, ..., N` sharing one prime chain, with a merge key per step.
#[derive(Clone, Debug)]
pub struct MergeTree {
    pub rings: Vec<Arc<RingParams>>,
    /// `keys[i]` merges `rings[i]` into `rings[i + 1]`.
    pub keys: Vec<SwitchingKey>,
}

impl MergeTree {
    /// `secrets[i]` lives in `rings[i]`; the last one is the target secret.
    #[allow(clippy::too_many_arguments)]
    pub fn generate(
        rings: Vec<Arc<RingParams>>,
        secrets: &[SecretKey],
        gadget: Gadget,
        level: usize,
        noise: &NoiseParams,
        rng: &mut Prng,
    ) -> Result<Self> {
        if rings.len() != secrets.len() || rings.is_empty() {
            return Err(Error::InvalidParams("one secret per merge ring required".into()));
        }
        let keys = (0..rings.len() - 1)
            .map(|i| {
                check_ring_pair(&rings[i], &rings[i + 1], level)?;
                merge_key_gen(&secrets[i], &secrets[i + 1], gadget, level, &rings[i + 1], noise, rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rings, keys })
    }

    pub fn input_degree(&self) -> usize {
        self.rings[0].degree()
    }

    pub fn output_degree(&self) -> usize {
        self.rings.last().expect("nonempty").degree()
    }

    /// Merges up to `N/n` ciphertexts; input `i` coefficient `j` lands at `j*(N/n) + i`.
    /// Missing inputs are noiseless zeros.
    pub fn merge_many(&self, cts: &[Ciphertext]) -> Result<Ciphertext> {
        let arity = self.output_degree() / self.input_degree();
        if cts.is_empty() || cts.len() > arity {
            return Err(Error::InvalidInput(format!(
                "merge takes 1..={arity} ciphertexts, got {}",
                cts.len()
            )));
        }
        let refs: Vec<Option<&Ciphertext>> = (0..arity).map(|i| cts.get(i)).collect();
        self.merge_rec(&refs, &cts[0])
    }

    fn merge_rec(&self, inputs: &[Option<&Ciphertext>], template: &Ciphertext) -> Result<Ciphertext> {
        if inputs.len() == 1 {
            return Ok(match inputs[0] {
                Some(ct) => ct.clone(),
                None => Ciphertext::zero(
                    &self.rings[0],
                    template.level(),
                    template.scale,
                    template.domain,
                    Form::Ntt,
                ),
            });
        }
        let even: Vec<_> = inputs.iter().step_by(2).copied().collect();
        let odd: Vec<_> = inputs.iter().skip(1).step_by(2).copied().collect();
        let a = self.merge_rec(&even, template)?;
        let b = self.merge_rec(&odd, template)?;
        // each half lives in the ring `log2(len / 2)` steps above the inputs
        let step = (inputs.len() / 2).trailing_zeros() as usize;
        ring_merge(&a, &b, &self.keys[step], &self.rings[step], &self.rings[step + 1])
    }
}
