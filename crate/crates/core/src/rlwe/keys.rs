use rand::Rng;

use super::ciphertext::{Ciphertext, Domain};
use crate::error::{Error, Result};
use crate::ring::sample::{self, Prng};
use crate::ring::{Basis, Form, NoiseParams, Poly, RingParams};

/// Ternary secret with a fixed Hamming weight.
#[derive(Clone, Debug, PartialEq)]
pub struct SecretKey {
    id: u64,
    coeffs: Vec<i64>,
    // evaluation form over every prime (full QP basis)
    ntt: Poly,
}

impl SecretKey {
    pub fn generate(params: &RingParams, noise: &NoiseParams, rng: &mut Prng) -> Result<Self> {
        if noise.secret_hamming_weight > params.degree() {
            return Err(Error::InvalidParams(format!(
                "hamming weight {} exceeds ring degree {}",
                noise.secret_hamming_weight,
                params.degree()
            )));
        }
        let coeffs = sample::ternary_hw(params.degree(), noise.secret_hamming_weight, rng)?;
        Ok(Self::from_coeffs(params, coeffs, rng.random()))
    }

    pub fn from_coeffs(params: &RingParams, coeffs: Vec<i64>, id: u64) -> Self {
        let mut ntt = Poly::from_signed(params, &coeffs, Basis::qp(params.max_level()));
        ntt.to_ntt(params);
        Self { id, coeffs, ntt }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn hamming_weight(&self) -> usize {
        self.coeffs.iter().filter(|&&c| c != 0).count()
    }

    /// The secret in NTT form over the full QP basis.
    pub fn ntt(&self) -> &Poly {
        &self.ntt
    }

    /// The secret in NTT form restricted to `basis`.
    pub fn ntt_at(&self, params: &RingParams, basis: Basis) -> Poly {
        self.ntt.restrict(params, basis).expect("secret covers every basis")
    }
}

/// Public key: an encryption of zero at the top level.
#[derive(Clone, Debug, PartialEq)]
pub struct PublicKey {
    pub b: Poly,
    pub a: Poly,
}

/// Generates a secret and its public key.
pub fn keygen(params: &RingParams, noise: &NoiseParams, rng: &mut Prng) -> Result<(SecretKey, PublicKey)> {
    let sk = SecretKey::generate(params, noise, rng)?;
    let zero = Poly::zero(params, Basis::q(params.max_level()), Form::Ntt);
    let ct = super::encrypt::encrypt_sk(&sk, &zero, 1.0, Domain::Coeffs, params, noise, rng)?;
    let [b, a]: [Poly; 2] = ct.parts.try_into().expect("fresh ciphertexts have two parts");
    Ok((sk, PublicKey { b, a }))
}

impl PublicKey {
    pub fn as_ciphertext(&self) -> Ciphertext {
        Ciphertext {
            parts: vec![self.b.clone(), self.a.clone()],
            scale: 1.0,
            domain: Domain::Coeffs,
        }
    }
}
