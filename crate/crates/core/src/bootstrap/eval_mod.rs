//! Homomorphic reduction modulo 1 of slot values `x = m/q + I`.
//!
//! `sin(2 pi x) / (2 pi)` stands in for `x mod 1` near the lattice points. It is
//! reached as `cos(2 pi (x - 1/4) / 2^r)` interpolated on `[-(K + 1/2), K + 1/2]`,
//! followed by `r` double-angle steps `c -> 2c^2 - 1`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::ckks::{eval_chebyshev, ChebyshevPoly, Evaluator};
use crate::error::Result;
use crate::rlwe::Ciphertext;

#[derive(Clone, Debug)]
pub struct EvalMod {
    poly: ChebyshevPoly,
    double_angle: usize,
    // sin(2 pi x) -> message units
    output_factor: f64,
}

impl EvalMod {
    /// `output_factor` multiplies the reduced value `m/q` (use `q / delta` to
    /// recover messages encoded at scale `delta`).
    pub fn new(k_bound: f64, degree: usize, double_angle: usize, output_factor: f64) -> Self {
        let r = (1u64 << double_angle) as f64;
        let bound = k_bound + 0.5;
        let poly = ChebyshevPoly::interpolate(|x| (2.0 * PI * (x - 0.25) / r).cos(), degree, -bound, bound);
        Self {
            poly,
            double_angle,
            output_factor,
        }
    }

    pub fn poly(&self) -> &ChebyshevPoly {
        &self.poly
    }

    pub fn double_angle(&self) -> usize {
        self.double_angle
    }

    /// Levels consumed: interpolant, double angles, final scaling.
    pub fn depth(&self) -> usize {
        self.poly.depth() + self.double_angle + 1
    }

    /// Same approximation in plain arithmetic.
    pub fn eval_plain(&self, x: f64) -> f64 {
        let mut c = self.poly.eval(x);
        for _ in 0..self.double_angle {
            c = 2.0 * c * c - 1.0;
        }
        c * self.output_factor / (2.0 * PI)
    }

    /// The exact proxy the approximation targets.
    pub fn sine_proxy(&self, x: f64) -> f64 {
        (2.0 * PI * x).sin() * self.output_factor / (2.0 * PI)
    }

    /// Reduces `ct` (slot values `x`) and lands at `output_scale` exactly.
    pub fn apply(&self, eval: &Evaluator, ct: &Ciphertext, output_scale: f64) -> Result<Ciphertext> {
        let mut c = eval_chebyshev(eval, ct, &self.poly, None)?;
        for _ in 0..self.double_angle {
            let sq = eval.square(&c)?;
            let two = eval.add(&sq, &sq)?;
            c = eval.add_real(&two, -1.0)?;
        }
        let factor = Complex64::new(self.output_factor / (2.0 * PI), 0.0);
        eval.mul_const_to(&c, factor, output_scale, c.level().saturating_sub(1))
    }
}
