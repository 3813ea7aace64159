use crate::error::{Error, Result};
use crate::ring::{Basis, Form, Poly, RingParams};

/// How the plaintext inside a ciphertext is interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    /// Raw polynomial coefficients (convolution arithmetic).
    Coeffs,
    /// Canonical-embedding slots (SIMD arithmetic).
    Slots,
}

/// Degree-k RLWE ciphertext: decrypts to `sum_i parts[i] * s^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ciphertext {
    pub parts: Vec<Poly>,
    pub scale: f64,
    pub domain: Domain,
}

impl Ciphertext {
    pub fn new(parts: Vec<Poly>, scale: f64, domain: Domain) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidInput("ciphertext needs parts".into()))?;
        if parts.len() > 3 {
            return Err(Error::UnsupportedDegree(parts.len() - 1));
        }
        for p in &parts[1..] {
            if p.basis() != first.basis() {
                return Err(Error::LevelMismatch {
                    left: first.level(),
                    right: p.level(),
                });
            }
            if p.form() != first.form() {
                return Err(Error::FormMismatch);
            }
        }
        if !(scale > 0.0) {
            return Err(Error::InvalidInput(format!("scale {scale} must be positive")));
        }
        Ok(Self { parts, scale, domain })
    }

    /// A noiseless encryption of zero.
    pub fn zero(params: &RingParams, level: usize, scale: f64, domain: Domain, form: Form) -> Self {
        let z = Poly::zero(params, Basis::q(level), form);
        Self {
            parts: vec![z.clone(), z],
            scale,
            domain,
        }
    }

    /// A noiseless "encryption" `(m, 0)` of a plaintext.
    pub fn trivial(m: Poly, scale: f64, domain: Domain) -> Self {
        let mut zero = m.clone();
        zero.rows_mut().iter_mut().for_each(|r| r.fill(0));
        Self {
            parts: vec![m, zero],
            scale,
            domain,
        }
    }

    pub fn level(&self) -> usize {
        self.parts[0].level()
    }

    pub fn form(&self) -> Form {
        self.parts[0].form()
    }

    pub fn is_ntt(&self) -> bool {
        self.parts[0].is_ntt()
    }

    /// Ciphertext degree k (number of parts minus one).
    pub fn degree(&self) -> usize {
        self.parts.len() - 1
    }

    pub fn ring_degree(&self) -> usize {
        self.parts[0].degree()
    }

    pub fn to_ntt(&mut self, params: &RingParams) {
        self.parts.iter_mut().for_each(|p| p.to_ntt(params));
    }

    pub fn to_coeff(&mut self, params: &RingParams) {
        self.parts.iter_mut().for_each(|p| p.to_coeff(params));
    }

    fn align_with(&mut self, other: &Self, params: &RingParams) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::DomainMismatch);
        }
        if self.level() != other.level() {
            return Err(Error::LevelMismatch {
                left: self.level(),
                right: other.level(),
            });
        }
        if self.form() != other.form() {
            match other.form() {
                Form::Ntt => self.to_ntt(params),
                Form::Coeff => self.to_coeff(params),
            }
        }
        while self.parts.len() < other.parts.len() {
            let z = Poly::zero(params, self.parts[0].basis(), self.form());
            self.parts.push(z);
        }
        Ok(())
    }

    /// Adds parts; scales are not checked here (see the ckks evaluator).
    pub fn add_assign(&mut self, other: &Self, params: &RingParams) -> Result<()> {
        self.align_with(other, params)?;
        for (a, b) in self.parts.iter_mut().zip(&other.parts) {
            if a.form() == b.form() {
                a.add_assign(b, params)?;
            } else {
                a.add_assign(&b.clone().into_form(params, a.form()), params)?;
            }
        }
        Ok(())
    }

    pub fn sub_assign(&mut self, other: &Self, params: &RingParams) -> Result<()> {
        self.align_with(other, params)?;
        for (a, b) in self.parts.iter_mut().zip(&other.parts) {
            if a.form() == b.form() {
                a.sub_assign(b, params)?;
            } else {
                a.sub_assign(&b.clone().into_form(params, a.form()), params)?;
            }
        }
        Ok(())
    }

    pub fn neg_assign(&mut self, params: &RingParams) {
        self.parts.iter_mut().for_each(|p| p.neg_assign(params));
    }

    /// Multiplies every part by the signed monomial `X^k`.
    pub fn mul_monomial(&self, k: usize, params: &RingParams) -> Self {
        Self {
            parts: self.parts.iter().map(|p| p.mul_monomial(k, params)).collect(),
            scale: self.scale,
            domain: self.domain,
        }
    }

    /// Multiplies every part by a plaintext polynomial (any form; result in NTT form).
    pub fn mul_plain_poly(&mut self, pt: &Poly, params: &RingParams) -> Result<()> {
        let pt_ntt = if pt.is_ntt() {
            std::borrow::Cow::Borrowed(pt)
        } else {
            std::borrow::Cow::Owned(pt.clone().into_form(params, Form::Ntt))
        };
        for p in self.parts.iter_mut() {
            p.to_ntt(params);
            p.mul_assign(&pt_ntt, params)?;
        }
        Ok(())
    }

    pub fn mul_scalar_i128(&mut self, c: i128, params: &RingParams) {
        self.parts.iter_mut().for_each(|p| p.mul_scalar_i128(c, params));
    }

    /// Divides by the top prime with rounding; the scale drops by that prime.
    pub fn rescale(&mut self, params: &RingParams) -> Result<()> {
        let level = self.level();
        if level == 0 {
            return Err(Error::CannotRescale);
        }
        for p in self.parts.iter_mut() {
            p.rescale_round(params)?;
        }
        self.scale /= params.q(level).value() as f64;
        Ok(())
    }

    pub fn drop_to_level(&mut self, level: usize) -> Result<()> {
        for p in self.parts.iter_mut() {
            p.drop_to_level(level)?;
        }
        Ok(())
    }

    /// Tensor product of two degree-1 ciphertexts (NTT form).
    pub fn tensor(&self, other: &Self, params: &RingParams) -> Result<Self> {
        if self.degree() != 1 || other.degree() != 1 {
            return Err(Error::UnsupportedDegree(self.degree() + other.degree()));
        }
        if self.domain != other.domain {
            return Err(Error::DomainMismatch);
        }
        if self.level() != other.level() {
            return Err(Error::LevelMismatch {
                left: self.level(),
                right: other.level(),
            });
        }
        let ntt = |p: &Poly| p.clone().into_form(params, Form::Ntt);
        let (a0, a1) = (ntt(&self.parts[0]), ntt(&self.parts[1]));
        let (b0, b1) = (ntt(&other.parts[0]), ntt(&other.parts[1]));
        let mut d0 = a0.clone();
        d0.mul_assign(&b0, params)?;
        let mut d1 = a0;
        d1.mul_assign(&b1, params)?;
        d1.mul_add_assign(&a1, &b0, params)?;
        let mut d2 = a1;
        d2.mul_assign(&b1, params)?;
        Ok(Self {
            parts: vec![d0, d1, d2],
            scale: self.scale * other.scale,
            domain: self.domain,
        })
    }
}
