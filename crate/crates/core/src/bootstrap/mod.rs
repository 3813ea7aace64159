//! CKKS bootstrapping and the half variant that stops in the slots domain.

mod dft;
mod eval_mod;

use std::sync::Arc;

use num_complex::Complex64;

pub use dft::{apply_diagonals, coeffs_to_slots_factors, compose, slots_to_coeffs_factors, Diagonals};
pub use eval_mod::EvalMod;

use std::collections::BTreeSet;

use crate::ckks::{bsgs_rotations, conjugation_exponent, rotation_key_exponent, Encoder, Evaluator, LinearTransform};
use crate::error::{Error, Result};
use crate::ring::{bit_reverse, Basis, Poly, RingParams};
use crate::rlwe::{Ciphertext, Domain};

/// Circuit configuration. The input modulus is `q_0` of the ring; the
/// circuit occupies the top `depth()` levels of the chain.
#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapParams {
    /// Slots per output ciphertext (`N/2` for full packing).
    pub slots: usize,
    /// Bound on the coefficients of the overflow polynomial `I`.
    pub k_bound: f64,
    pub sine_degree: usize,
    pub double_angle: usize,
    /// Levels spent in CoeffsToSlots.
    pub cts_depth: usize,
    /// Levels spent in SlotsToCoeffs (full bootstrapping only).
    pub stc_depth: usize,
    /// Scale of the coefficient-encoded input message.
    pub message_scale: f64,
    /// Scale of the refreshed output.
    pub output_scale: f64,
}

impl BootstrapParams {
    /// Desk-scale defaults for full packing in a ring of `degree`.
    pub fn toy(degree: usize, message_scale: f64, output_scale: f64) -> Self {
        Self {
            slots: degree / 2,
            k_bound: 16.0,
            sine_degree: 30,
            double_angle: 3,
            cts_depth: 3,
            stc_depth: 3,
            message_scale,
            output_scale,
        }
    }

    /// Levels consumed from ModRaise to the half-bootstrap output.
    pub fn depth(&self) -> usize {
        self.cts_depth + self.eval_mod_depth()
    }

    fn eval_mod_depth(&self) -> usize {
        EvalMod::new(self.k_bound, self.sine_degree, self.double_angle, 1.0).depth()
    }
}

/// Immutable bootstrapping plan: encoded DFT factors and the EvalMod polynomial.
#[derive(Clone, Debug)]
pub struct Bootstrapper {
    params: Arc<RingParams>,
    config: BootstrapParams,
    cts: Vec<LinearTransform>,
    stc: Vec<LinearTransform>,
    eval_mod: EvalMod,
}

impl Bootstrapper {
    pub fn new(params: Arc<RingParams>, config: BootstrapParams) -> Result<Self> {
        let degree = params.degree();
        let slots = config.slots;
        if !slots.is_power_of_two() || 2 * slots > degree || slots < 2 {
            return Err(Error::InvalidParams(format!("bad bootstrap slot count {slots}")));
        }
        if config.cts_depth == 0 || config.k_bound < 1.0 {
            return Err(Error::InvalidParams("empty bootstrap circuit".into()));
        }
        let top = params.max_level();
        let depth = config.depth();
        if top < depth + 1 {
            return Err(Error::InsufficientLevels {
                needed: depth + 1,
                available: top,
            });
        }
        let q0 = params.q(0).value() as f64;
        let eval_mod = EvalMod::new(
            config.k_bound,
            config.sine_degree,
            config.double_angle,
            q0 / config.message_scale,
        );
        let encoder = Encoder::new(degree, slots)?;
        let gap = degree / (2 * slots);
        // the 1/2 prepares the real/imaginary split; 1/gap undoes the trace
        let factor = 0.5 / gap as f64;
        let cts = coeffs_to_slots_factors(slots, config.cts_depth, factor)
            .iter()
            .enumerate()
            .map(|(i, d)| LinearTransform::new(d, &encoder, &params, top - i, None))
            .collect::<Result<Vec<_>>>()?;
        let out = top - depth;
        let stc = if out >= config.stc_depth && config.stc_depth > 0 {
            slots_to_coeffs_factors(slots, config.stc_depth)
                .iter()
                .enumerate()
                .map(|(i, d)| LinearTransform::new(d, &encoder, &params, out - i, None))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok(Self {
            params,
            config,
            cts,
            stc,
            eval_mod,
        })
    }

    pub fn config(&self) -> &BootstrapParams {
        &self.config
    }

    pub fn eval_mod(&self) -> &EvalMod {
        &self.eval_mod
    }

    pub fn depth(&self) -> usize {
        self.cts.len() + self.eval_mod.depth()
    }

    /// Level of the half-bootstrap output.
    pub fn output_level(&self) -> usize {
        self.params.max_level() - self.depth()
    }

    fn gap(&self) -> usize {
        self.params.degree() / (2 * self.config.slots)
    }

    /// Automorphism exponents of every key the circuit uses.
    pub fn galois_exponents(&self) -> Vec<usize> {
        let n = self.params.degree();
        let mut out: Vec<usize> = self
            .cts
            .iter()
            .chain(&self.stc)
            .flat_map(|t| t.rotations())
            .map(|r| rotation_key_exponent(r, self.config.slots, n))
            .collect();
        out.push(conjugation_exponent(n));
        out.extend(self.trace_exponents());
        out.sort_unstable();
        out.dedup();
        out
    }

    fn trace_exponents(&self) -> Vec<usize> {
        let n = self.params.degree();
        (0..self.gap().trailing_zeros()).map(|k| (n >> k) + 1).collect()
    }

    /// Lifts a level-0 ciphertext to the top of the chain. The result decrypts
    /// to `m + q_0 I` and is tagged with scale `q_0` in the slots domain, so its
    /// slot reading is `SF (m/q_0 + I)`.
    pub fn mod_raise(&self, ct: &Ciphertext) -> Result<Ciphertext> {
        let params = &self.params;
        let mut low = ct.clone();
        low.drop_to_level(0)?;
        low.to_coeff(params);
        let top = params.max_level();
        let parts = low
            .parts
            .iter()
            .map(|p| Poly::from_signed(params, &p.centered_row0(params), Basis::q(top)))
            .collect();
        Ciphertext::new(parts, params.q(0).value() as f64, Domain::Slots)
    }

    /// Projects onto the subring of `X^gap`, multiplying kept coefficients by `gap`.
    pub fn trace(&self, eval: &Evaluator, ct: &Ciphertext) -> Result<Ciphertext> {
        let mut acc = ct.clone();
        for g in self.trace_exponents() {
            let rotated = eval.apply_galois(&acc, g)?;
            acc = eval.add(&acc, &rotated)?;
        }
        Ok(acc)
    }

    /// Slots of the result hold `(c_j + i c_{j + N/2}) / (2 scale)` for the
    /// coefficients `c` of the input polynomial, in bit-reversed slot order.
    pub fn coeffs_to_slots_half(&self, eval: &Evaluator, ct: &Ciphertext) -> Result<Ciphertext> {
        let mut acc = ct.clone();
        acc.domain = Domain::Slots;
        for t in &self.cts {
            acc = t.apply(eval, &acc)?;
        }
        Ok(acc)
    }

    /// CoeffsToSlots as one complex ciphertext: `c_j + i c_{j + N/2}` in slot `bitrev(j)`.
    pub fn coeffs_to_slots_complex(&self, eval: &Evaluator, ct: &Ciphertext) -> Result<Ciphertext> {
        let mut out = self.coeffs_to_slots_half(eval, ct)?;
        out.scale /= 2.0;
        Ok(out)
    }

    /// CoeffsToSlots split into real ciphertexts for the lower and upper coefficient halves.
    pub fn coeffs_to_slots(&self, eval: &Evaluator, ct: &Ciphertext) -> Result<(Ciphertext, Ciphertext)> {
        let half = self.coeffs_to_slots_half(eval, ct)?;
        let conj = eval.conjugate(&half)?;
        let re = eval.add(&half, &conj)?;
        let diff = eval.sub(&half, &conj)?;
        let im = eval.neg(&eval.mul_i(&diff));
        Ok((re, im))
    }

    /// Inverse of [`coeffs_to_slots_complex`](Self::coeffs_to_slots_complex).
    pub fn slots_to_coeffs(&self, eval: &Evaluator, ct: &Ciphertext) -> Result<Ciphertext> {
        if self.stc.is_empty() {
            return Err(Error::InsufficientLevels {
                needed: self.config.stc_depth,
                available: self.output_level(),
            });
        }
        let mut acc = ct.clone();
        for t in &self.stc {
            acc = t.apply(eval, &acc)?;
        }
        acc.domain = Domain::Coeffs;
        Ok(acc)
    }

    /// `re + i im` followed by SlotsToCoeffs.
    pub fn slots_to_coeffs_pair(&self, eval: &Evaluator, re: &Ciphertext, im: &Ciphertext) -> Result<Ciphertext> {
        let joined = eval.add(re, &eval.mul_i(im))?;
        self.slots_to_coeffs(eval, &joined)
    }

    /// ModRaise, CoeffsToSlots, EvalMod. Returns the refreshed lower and upper
    /// coefficient halves as real slot vectors at [`output_level`](Self::output_level).
    pub fn half_bts(&self, eval: &Evaluator, ct: &Ciphertext) -> Result<(Ciphertext, Ciphertext)> {
        if ct.ring_degree() != self.params.degree() {
            return Err(Error::DegreeMismatch {
                left: ct.ring_degree(),
                right: self.params.degree(),
            });
        }
        let raised = self.mod_raise(ct)?;
        let raised = if self.gap() > 1 {
            self.trace(eval, &raised)?
        } else {
            raised
        };
        let (re, im) = self.coeffs_to_slots(eval, &raised)?;
        let scale = self.config.output_scale;
        let left = self.eval_mod.apply(eval, &re, scale)?;
        let right = self.eval_mod.apply(eval, &im, scale)?;
        Ok((left, right))
    }

    /// Full bootstrapping back to the coefficient domain.
    pub fn bootstrap(&self, eval: &Evaluator, ct: &Ciphertext) -> Result<Ciphertext> {
        let (re, im) = self.half_bts(eval, ct)?;
        self.slots_to_coeffs_pair(eval, &re, &im)
    }

    /// Where coefficient `c` of the input lands after [`half_bts`](Self::half_bts):
    /// `(half, slot)` with half 0 for the left output. `None` for coefficients
    /// dropped by the trace.
    pub fn slot_of_coefficient(&self, c: usize) -> Option<(usize, usize)> {
        let gap = self.gap();
        let n = self.config.slots;
        if !c.is_multiple_of(gap) || c >= self.params.degree() {
            return None;
        }
        let j = c / gap;
        let bits = n.trailing_zeros();
        Some(if j < n {
            (0, bit_reverse(j, bits))
        } else {
            (1, bit_reverse(j - n, bits))
        })
    }

    /// Inverse of [`slot_of_coefficient`](Self::slot_of_coefficient).
    pub fn coefficient_of_slot(&self, half: usize, slot: usize) -> usize {
        let n = self.config.slots;
        let j = bit_reverse(slot, n.trailing_zeros()) + half * n;
        j * self.gap()
    }
}

/// Galois exponents a circuit with `config` needs in a ring of `degree`, computed
/// from the plaintext DFT factors without encoding them.
pub fn circuit_galois_exponents(degree: usize, config: &BootstrapParams) -> Vec<usize> {
    let slots = config.slots;
    let mut factors = coeffs_to_slots_factors(slots, config.cts_depth, 1.0);
    if config.stc_depth > 0 {
        factors.extend(slots_to_coeffs_factors(slots, config.stc_depth));
    }
    let mut out: Vec<usize> = factors
        .iter()
        .flat_map(|f| {
            let indices: BTreeSet<usize> = f.keys().map(|&d| d % slots).collect();
            bsgs_rotations(&indices, slots)
        })
        .map(|r| rotation_key_exponent(r, slots, degree))
        .collect();
    out.push(conjugation_exponent(degree));
    let gap = degree / (2 * slots);
    out.extend((0..gap.trailing_zeros()).map(|k| (degree >> k) + 1));
    out.sort_unstable();
    out.dedup();
    out
}

/// Reference for [`Bootstrapper::coeffs_to_slots_complex`] on plain values.
pub fn coeffs_to_slots_plain(coeffs: &[f64], slots: usize, scale: f64) -> Vec<Complex64> {
    let gap = coeffs.len() / (2 * slots);
    let bits = slots.trailing_zeros();
    let mut out = vec![Complex64::new(0.0, 0.0); slots];
    for j in 0..slots {
        out[bit_reverse(j, bits)] = Complex64::new(coeffs[j * gap] / scale, coeffs[(j + slots) * gap] / scale);
    }
    out
}
