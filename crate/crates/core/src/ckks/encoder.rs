//! Coefficient and canonical-embedding (slots) encodings.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ring::{bit_reverse, Basis, Poly, RingParams};
use crate::rlwe::Domain;

/// A plaintext polynomial with its scale and encoding domain.
#[derive(Clone, Debug, PartialEq)]
pub struct Plaintext {
    pub poly: Poly,
    pub scale: f64,
    pub domain: Domain,
}

/// Tables for `n`-slot encodings inside a degree-N ring (`n <= N/2`).
///
/// Slot `k` holds `m_Y(zeta^(5^k))` where `Y = X^(N/2n)` and `zeta = exp(i*pi/2n)`.
#[derive(Clone, Debug)]
pub struct Encoder {
    slots: usize,
    degree: usize,
    // 5^j mod 4n
    rot_group: Vec<usize>,
    // exp(2*pi*i*j / 4n) for j in 0..=4n
    roots: Vec<Complex64>,
}

impl Encoder {
    pub fn new(degree: usize, slots: usize) -> Result<Self> {
        if !slots.is_power_of_two() || !degree.is_power_of_two() || 2 * slots > degree {
            return Err(Error::InvalidParams(format!(
                "slot count {slots} must be a power of two at most {}",
                degree / 2
            )));
        }
        let m = 4 * slots;
        let mut rot_group = Vec::with_capacity(slots);
        let mut g = 1usize;
        for _ in 0..slots {
            rot_group.push(g);
            g = g * 5 % m;
        }
        let roots = (0..=m)
            .map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / m as f64))
            .collect();
        Ok(Self {
            slots,
            degree,
            rot_group,
            roots,
        })
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficient stride of the slot subring, `N / 2n`.
    pub fn gap(&self) -> usize {
        self.degree / (2 * self.slots)
    }

    fn bit_reverse_in_place(vals: &mut [Complex64]) {
        let bits = vals.len().trailing_zeros();
        for i in 0..vals.len() {
            let j = bit_reverse(i, bits);
            if i < j {
                vals.swap(i, j);
            }
        }
    }

    /// `z = SF * w` with `SF[k][j] = zeta^(j * 5^k)`, in place.
    pub fn fft_special(&self, vals: &mut [Complex64]) {
        let n = vals.len();
        assert_eq!(n, self.slots);
        let m = 4 * self.slots;
        Self::bit_reverse_in_place(vals);
        let mut len = 2;
        while len <= n {
            let lenh = len / 2;
            let lenq = len * 4;
            let stride = m / lenq;
            for i in (0..n).step_by(len) {
                for j in 0..lenh {
                    let idx = (self.rot_group[j] % lenq) * stride;
                    let u = vals[i + j];
                    let v = vals[i + j + lenh] * self.roots[idx];
                    vals[i + j] = u + v;
                    vals[i + j + lenh] = u - v;
                }
            }
            len *= 2;
        }
    }

    /// Inverse of [`fft_special`](Self::fft_special), in place.
    pub fn fft_special_inv(&self, vals: &mut [Complex64]) {
        let n = vals.len();
        assert_eq!(n, self.slots);
        let m = 4 * self.slots;
        let mut len = n;
        while len >= 2 {
            let lenh = len / 2;
            let lenq = len * 4;
            let stride = m / lenq;
            for i in (0..n).step_by(len) {
                for j in 0..lenh {
                    let idx = (lenq - self.rot_group[j] % lenq) * stride;
                    let u = vals[i + j] + vals[i + j + lenh];
                    let v = (vals[i + j] - vals[i + j + lenh]) * self.roots[idx];
                    vals[i + j] = u;
                    vals[i + j + lenh] = v;
                }
            }
            len /= 2;
        }
        Self::bit_reverse_in_place(vals);
        let inv = 1.0 / n as f64;
        vals.iter_mut().for_each(|v| *v *= inv);
    }

    /// Dense `SF_n`; row `k`, column `j`.
    pub fn special_fourier_matrix(&self) -> Vec<Vec<Complex64>> {
        let m = 4 * self.slots;
        (0..self.slots)
            .map(|k| {
                (0..self.slots)
                    .map(|j| self.roots[(j * self.rot_group[k]) % m])
                    .collect()
            })
            .collect()
    }

    pub fn encode_slots(
        &self,
        values: &[Complex64],
        scale: f64,
        level: usize,
        params: &RingParams,
    ) -> Result<Plaintext> {
        if values.len() > self.slots {
            return Err(Error::InvalidInput(format!(
                "{} values exceed {} slots",
                values.len(),
                self.slots
            )));
        }
        check_degree(params, self.degree)?;
        let mut w = values.to_vec();
        w.resize(self.slots, Complex64::new(0.0, 0.0));
        self.fft_special_inv(&mut w);
        let gap = self.gap();
        let half = self.degree / 2;
        let mut coeffs = vec![0f64; self.degree];
        for (j, v) in w.iter().enumerate() {
            coeffs[j * gap] = v.re * scale;
            coeffs[j * gap + half] = v.im * scale;
        }
        let poly = round_to_poly(&coeffs, level, params)?;
        Ok(Plaintext {
            poly,
            scale,
            domain: Domain::Slots,
        })
    }

    /// Decodes a coefficient-form plaintext polynomial into slot values.
    pub fn decode_slots(&self, poly: &Poly, scale: f64, params: &RingParams) -> Result<Vec<Complex64>> {
        check_degree(params, self.degree)?;
        let coeffs = poly
            .clone()
            .into_form(params, crate::ring::Form::Coeff)
            .to_centered_f64(params)?;
        let gap = self.gap();
        let half = self.degree / 2;
        let mut w: Vec<Complex64> = (0..self.slots)
            .map(|j| Complex64::new(coeffs[j * gap] / scale, coeffs[j * gap + half] / scale))
            .collect();
        self.fft_special(&mut w);
        Ok(w)
    }

    /// Encodes the same real constant into every slot.
    pub fn encode_constant(value: f64, scale: f64, level: usize, params: &RingParams) -> Result<Plaintext> {
        let mut coeffs = vec![0f64; params.degree()];
        coeffs[0] = value * scale;
        Ok(Plaintext {
            poly: round_to_poly(&coeffs, level, params)?,
            scale,
            domain: Domain::Slots,
        })
    }
}

fn check_degree(params: &RingParams, degree: usize) -> Result<()> {
    if params.degree() != degree {
        return Err(Error::DegreeMismatch {
            left: params.degree(),
            right: degree,
        });
    }
    Ok(())
}

/// Rounds scaled coefficients (half away from zero) into a Q-basis polynomial.
pub fn round_to_poly(coeffs: &[f64], level: usize, params: &RingParams) -> Result<Poly> {
    let max = coeffs.iter().fold(0f64, |m, c| m.max(c.abs()));
    let available = params.log_q(level) - 1.0;
    let needed = if max > 0.0 { max.log2() } else { 0.0 };
    if !max.is_finite() || needed >= available.min(126.0) {
        return Err(Error::PlaintextOverflow {
            needed_bits: needed,
            available_bits: available,
        });
    }
    let ints: Vec<i128> = coeffs.iter().map(|c| c.round() as i128).collect();
    Ok(Poly::from_i128(params, &ints, Basis::q(level)))
}

/// Encodes a real vector of length `n <= N` into coefficients `j * (N/n)`.
pub fn encode_coeffs(values: &[f64], scale: f64, level: usize, params: &RingParams) -> Result<Plaintext> {
    let n = values.len();
    if n == 0 || !n.is_power_of_two() || n > params.degree() {
        return Err(Error::InvalidInput(format!(
            "coefficient vector length {n} must be a power of two at most {}",
            params.degree()
        )));
    }
    let stride = params.degree() / n;
    let mut coeffs = vec![0f64; params.degree()];
    for (j, v) in values.iter().enumerate() {
        coeffs[j * stride] = v * scale;
    }
    Ok(Plaintext {
        poly: round_to_poly(&coeffs, level, params)?,
        scale,
        domain: Domain::Coeffs,
    })
}

/// Reads coefficients `j * (N/n)` of a plaintext polynomial, divided by the scale.
pub fn decode_coeffs(poly: &Poly, scale: f64, n: usize, params: &RingParams) -> Result<Vec<f64>> {
    let coeffs = poly
        .clone()
        .into_form(params, crate::ring::Form::Coeff)
        .to_centered_f64(params)?;
    let stride = params.degree() / n;
    Ok((0..n).map(|j| coeffs[j * stride] / scale).collect())
}
