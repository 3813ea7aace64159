use std::sync::Arc;

use num_complex::Complex64;

use super::encoder::Plaintext;
use crate::error::{Error, Result};
use crate::ring::{rotation_exponent, Basis, Form, Poly, RingParams};
use crate::rlwe::{apply_galois, relinearize, Ciphertext, Domain, GaloisKeys, SwitchingKey};

/// Largest relative scale difference tolerated when adding ciphertexts.
pub const SCALE_TOLERANCE: f64 = 1e-5;

/// Homomorphic arithmetic over one ring with a fixed slot count.
#[derive(Clone, Debug)]
pub struct Evaluator {
    params: Arc<RingParams>,
    slots: usize,
    relin: Option<Arc<SwitchingKey>>,
    galois: Arc<GaloisKeys>,
}

/// Galois exponent used for a rotation by `k` slots out of `slots`.
pub fn rotation_key_exponent(k: i64, slots: usize, degree: usize) -> usize {
    rotation_exponent(k.rem_euclid(slots as i64), degree)
}

/// Galois exponent of complex conjugation.
pub fn conjugation_exponent(degree: usize) -> usize {
    2 * degree - 1
}

impl Evaluator {
    pub fn new(
        params: Arc<RingParams>,
        slots: usize,
        relin: Option<Arc<SwitchingKey>>,
        galois: Arc<GaloisKeys>,
    ) -> Result<Self> {
        if !slots.is_power_of_two() || 2 * slots > params.degree() {
            return Err(Error::InvalidParams(format!("bad slot count {slots}")));
        }
        Ok(Self {
            params,
            slots,
            relin,
            galois,
        })
    }

    pub fn params(&self) -> &Arc<RingParams> {
        &self.params
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn galois_keys(&self) -> &GaloisKeys {
        &self.galois
    }

    fn check_scales(a: f64, b: f64) -> Result<()> {
        if ((a - b) / a).abs() > SCALE_TOLERANCE {
            return Err(Error::ScaleMismatch { left: a, right: b });
        }
        Ok(())
    }

    /// Drops the higher-level operand so both sit at the same level.
    fn aligned<'a>(
        a: &'a Ciphertext,
        b: &'a Ciphertext,
    ) -> Result<(std::borrow::Cow<'a, Ciphertext>, std::borrow::Cow<'a, Ciphertext>)> {
        use std::borrow::Cow;
        let level = a.level().min(b.level());
        let lower = |ct: &'a Ciphertext| -> Result<Cow<'a, Ciphertext>> {
            if ct.level() == level {
                Ok(Cow::Borrowed(ct))
            } else {
                let mut c = ct.clone();
                c.drop_to_level(level)?;
                Ok(Cow::Owned(c))
            }
        };
        Ok((lower(a)?, lower(b)?))
    }

    pub fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        Self::check_scales(a.scale, b.scale)?;
        let (a, b) = Self::aligned(a, b)?;
        let mut out = a.into_owned();
        out.add_assign(&b, &self.params)?;
        Ok(out)
    }

    pub fn sub(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        Self::check_scales(a.scale, b.scale)?;
        let (a, b) = Self::aligned(a, b)?;
        let mut out = a.into_owned();
        out.sub_assign(&b, &self.params)?;
        Ok(out)
    }

    pub fn neg(&self, a: &Ciphertext) -> Ciphertext {
        let mut out = a.clone();
        out.neg_assign(&self.params);
        out
    }

    pub fn add_plain(&self, a: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext> {
        Self::check_scales(a.scale, pt.scale)?;
        if a.domain != pt.domain {
            return Err(Error::DomainMismatch);
        }
        let mut m = pt.poly.clone();
        if m.level() > a.level() {
            m.drop_to_level(a.level())?;
        } else if m.level() < a.level() {
            return Err(Error::LevelMismatch {
                left: a.level(),
                right: m.level(),
            });
        }
        let mut out = a.clone();
        let m = m.into_form(&self.params, out.form());
        out.parts[0].add_assign(&m, &self.params)?;
        Ok(out)
    }

    /// Constant polynomial for `c` at `scale`: the real part on `X^0`, the
    /// imaginary part on `X^(N/2)` (which evaluates to `i` in every slot).
    fn constant_poly(&self, c: Complex64, scale: f64, level: usize, domain: Domain) -> Result<Poly> {
        let n = self.params.degree();
        let mut coeffs = vec![0i128; n];
        let re = c.re * scale;
        let im = c.im * scale;
        let limit = self.params.log_q(level) - 1.0;
        for v in [re, im] {
            if !v.is_finite() || (v != 0.0 && v.abs().log2() >= limit.min(126.0)) {
                return Err(Error::PlaintextOverflow {
                    needed_bits: v.abs().log2(),
                    available_bits: limit,
                });
            }
        }
        coeffs[0] = re.round() as i128;
        if im != 0.0 {
            if domain == Domain::Coeffs {
                return Err(Error::InvalidInput(
                    "complex constants need a slots-domain ciphertext".into(),
                ));
            }
            coeffs[n / 2] = im.round() as i128;
        }
        Ok(Poly::from_i128(&self.params, &coeffs, Basis::q(level)))
    }

    pub fn add_const(&self, a: &Ciphertext, c: Complex64) -> Result<Ciphertext> {
        let m = self.constant_poly(c, a.scale, a.level(), a.domain)?;
        let mut out = a.clone();
        let m = m.into_form(&self.params, out.form());
        out.parts[0].add_assign(&m, &self.params)?;
        Ok(out)
    }

    pub fn add_real(&self, a: &Ciphertext, c: f64) -> Result<Ciphertext> {
        self.add_const(a, Complex64::new(c, 0.0))
    }

    /// Multiplies by `c` encoded at `const_scale` without rescaling.
    pub fn mul_const_at_scale(&self, a: &Ciphertext, c: Complex64, const_scale: f64) -> Result<Ciphertext> {
        let mut out = a.clone();
        if c.im == 0.0 {
            let v = c.re * const_scale;
            if !v.is_finite() || v.abs() >= 2f64.powi(120) {
                return Err(Error::PlaintextOverflow {
                    needed_bits: v.abs().log2(),
                    available_bits: 120.0,
                });
            }
            out.mul_scalar_i128(v.round() as i128, &self.params);
        } else {
            let m = self.constant_poly(c, const_scale, a.level(), a.domain)?;
            out.mul_plain_poly(&m, &self.params)?;
        }
        out.scale *= const_scale;
        Ok(out)
    }

    /// `a * c`, consuming one level; the scale is preserved exactly.
    pub fn mul_const(&self, a: &Ciphertext, c: Complex64) -> Result<Ciphertext> {
        let level = a.level();
        if level == 0 {
            return Err(Error::Exhausted { level });
        }
        let q = self.params.q(level).value() as f64;
        let mut out = self.mul_const_at_scale(a, c, q)?;
        out.rescale(&self.params)?;
        out.scale = a.scale;
        Ok(out)
    }

    /// `a * c` delivered at `level` with exactly `scale`; spends the level above `level`.
    pub fn mul_const_to(&self, a: &Ciphertext, c: Complex64, scale: f64, level: usize) -> Result<Ciphertext> {
        if a.level() <= level {
            return Err(Error::InsufficientLevels {
                needed: level + 1,
                available: a.level(),
            });
        }
        let a = self.drop_to_level(a, level + 1)?;
        let q = self.params.q(level + 1).value() as f64;
        let mut out = self.mul_const_at_scale(&a, c, scale * q / a.scale)?;
        out.rescale(&self.params)?;
        out.scale = scale;
        Ok(out)
    }

    pub fn mul_real(&self, a: &Ciphertext, c: f64) -> Result<Ciphertext> {
        self.mul_const(a, Complex64::new(c, 0.0))
    }

    /// Multiplication by a small integer; no level is consumed.
    pub fn mul_int(&self, a: &Ciphertext, k: i64) -> Ciphertext {
        let mut out = a.clone();
        out.mul_scalar_i128(k as i128, &self.params);
        out
    }

    /// Multiplies every slot by `i` (the monomial `X^(N/2)`); no level is consumed.
    pub fn mul_i(&self, a: &Ciphertext) -> Ciphertext {
        a.mul_monomial(self.params.degree() / 2, &self.params)
    }

    /// Plaintext product without rescaling.
    pub fn mul_plain(&self, a: &Ciphertext, pt: &Plaintext) -> Result<Ciphertext> {
        if a.domain != pt.domain {
            return Err(Error::DomainMismatch);
        }
        let mut m = pt.poly.clone();
        if m.level() > a.level() {
            m.drop_to_level(a.level())?;
        }
        let mut out = a.clone();
        out.mul_plain_poly(&m, &self.params)?;
        out.scale *= pt.scale;
        Ok(out)
    }

    /// Tensor and relinearize without rescaling.
    pub fn mul_no_rescale(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        let rlk = self
            .relin
            .as_ref()
            .ok_or_else(|| Error::MissingKey("relinearization".into()))?;
        let (a, b) = Self::aligned(a, b)?;
        let t = a.tensor(&b, &self.params)?;
        relinearize(&t, rlk, &self.params)
    }

    /// Ciphertext product with relinearization and rescaling.
    pub fn mul(&self, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
        let level = a.level().min(b.level());
        if level == 0 {
            return Err(Error::Exhausted { level });
        }
        let mut out = self.mul_no_rescale(a, b)?;
        out.rescale(&self.params)?;
        Ok(out)
    }

    pub fn square(&self, a: &Ciphertext) -> Result<Ciphertext> {
        self.mul(a, a)
    }

    pub fn rescale(&self, a: &Ciphertext) -> Result<Ciphertext> {
        let mut out = a.clone();
        out.rescale(&self.params)?;
        Ok(out)
    }

    pub fn drop_to_level(&self, a: &Ciphertext, level: usize) -> Result<Ciphertext> {
        let mut out = a.clone();
        out.drop_to_level(level)?;
        Ok(out)
    }

    pub fn apply_galois(&self, a: &Ciphertext, exponent: usize) -> Result<Ciphertext> {
        let g = exponent % (2 * self.params.degree());
        if g == 1 {
            return Ok(a.clone());
        }
        apply_galois(a, g, self.galois.get(g)?, &self.params)
    }

    /// Rotates slots left by `k`: slot `i` receives slot `i + k`.
    pub fn rotate(&self, a: &Ciphertext, k: i64) -> Result<Ciphertext> {
        self.apply_galois(a, rotation_key_exponent(k, self.slots, self.params.degree()))
    }

    pub fn conjugate(&self, a: &Ciphertext) -> Result<Ciphertext> {
        self.apply_galois(a, conjugation_exponent(self.params.degree()))
    }

    /// Slot `i` receives `sum_{j < width} slot(i + j)`; `width` is a power of two.
    pub fn inner_sum(&self, a: &Ciphertext, width: usize) -> Result<Ciphertext> {
        if !width.is_power_of_two() || width > self.slots {
            return Err(Error::InvalidInput(format!("inner sum width {width}")));
        }
        let mut acc = a.clone();
        let mut k = 1;
        while k < width {
            let r = self.rotate(&acc, k as i64)?;
            acc = self.add(&acc, &r)?;
            k *= 2;
        }
        Ok(acc)
    }

    /// Rotation steps needed by [`inner_sum`](Self::inner_sum).
    pub fn inner_sum_rotations(width: usize) -> Vec<i64> {
        (0..width.trailing_zeros()).map(|i| 1i64 << i).collect()
    }

    /// Re-expresses `a` in coefficient form at the same level.
    pub fn to_coeff(&self, a: &Ciphertext) -> Ciphertext {
        let mut out = a.clone();
        out.to_coeff(&self.params);
        out
    }

    /// `a` in NTT form (no-op if already).
    pub fn to_ntt(&self, a: &Ciphertext) -> Ciphertext {
        let mut out = a.clone();
        if out.form() == Form::Coeff {
            out.to_ntt(&self.params);
        }
        out
    }
}
