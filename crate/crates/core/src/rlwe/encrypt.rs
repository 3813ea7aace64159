use super::ciphertext::{Ciphertext, Domain};
use super::keys::{PublicKey, SecretKey};
use crate::error::{Error, Result};
use crate::ring::sample::{self, Prng};
use crate::ring::{Basis, Form, NoiseParams, Poly, RingParams};

fn check_plaintext(m: &Poly, params: &RingParams) -> Result<()> {
    if m.basis().special || m.level() > params.max_level() {
        return Err(Error::LevelMismatch {
            left: m.level(),
            right: params.max_level(),
        });
    }
    Ok(())
}

/// Symmetric encryption `(-a*s + e + m, a)`; output in NTT form.
pub fn encrypt_sk(
    sk: &SecretKey,
    m: &Poly,
    scale: f64,
    domain: Domain,
    params: &RingParams,
    noise: &NoiseParams,
    rng: &mut Prng,
) -> Result<Ciphertext> {
    check_plaintext(m, params)?;
    let basis = Basis::q(m.level());
    let a = sample::uniform(params, basis, Form::Ntt, rng);
    let mut e = Poly::from_signed(
        params,
        &sample::gaussian(params.degree(), noise.gaussian_sigma, rng),
        basis,
    );
    e.to_ntt(params);
    let mut b = a.clone();
    b.mul_assign(&sk.ntt_at(params, basis), params)?;
    b.neg_assign(params);
    b.add_assign(&e, params)?;
    b.add_assign(&m.clone().into_form(params, Form::Ntt), params)?;
    Ciphertext::new(vec![b, a], scale, domain)
}

/// Public-key encryption `(b*u + e0 + m, a*u + e1)` with uniform ternary `u`.
pub fn encrypt_pk(
    pk: &PublicKey,
    m: &Poly,
    scale: f64,
    domain: Domain,
    params: &RingParams,
    noise: &NoiseParams,
    rng: &mut Prng,
) -> Result<Ciphertext> {
    check_plaintext(m, params)?;
    let basis = Basis::q(m.level());
    let n = params.degree();
    let mut u = Poly::from_signed(params, &sample::ternary_uniform(n, rng), basis);
    u.to_ntt(params);
    let mut parts = Vec::with_capacity(2);
    for key_part in [&pk.b, &pk.a] {
        let mut c = key_part.restrict(params, basis)?;
        c.mul_assign(&u, params)?;
        let mut e = Poly::from_signed(params, &sample::gaussian(n, noise.gaussian_sigma, rng), basis);
        e.to_ntt(params);
        c.add_assign(&e, params)?;
        parts.push(c);
    }
    parts[0].add_assign(&m.clone().into_form(params, Form::Ntt), params)?;
    Ciphertext::new(parts, scale, domain)
}

/// Evaluates `sum_i parts[i] * s^i`; the result is in coefficient form.
pub fn decrypt(sk: &SecretKey, ct: &Ciphertext, params: &RingParams) -> Result<Poly> {
    let basis = Basis::q(ct.level());
    let s = sk.ntt_at(params, basis);
    // Horner from the highest part
    let mut acc = ct.parts[ct.degree()].clone().into_form(params, Form::Ntt);
    for part in ct.parts[..ct.degree()].iter().rev() {
        acc.mul_assign(&s, params)?;
        acc.add_assign(&part.clone().into_form(params, Form::Ntt), params)?;
    }
    acc.to_coeff(params);
    Ok(acc)
}
