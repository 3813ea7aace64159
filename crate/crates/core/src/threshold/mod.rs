//! Private thresholds: composed odd minimax polynomials approximating
//! `step(x)` on `[-1, -2^-α] ∪ [2^-α, 1]`.

mod remez;

use num_complex::Complex64;

pub use remez::{remez_minimax, OddMinimax};

use crate::ckks::{eval_chebyshev, ChebyshevPoly, Evaluator};
use crate::error::{Error, Result, StageExt};
use crate::rlwe::Ciphertext;

/// Sensitivity `α`, output precision `β`, stage degrees and score spacing `ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdParams {
    pub alpha: u32,
    pub beta: u32,
    pub degrees: Vec<usize>,
    pub epsilon: f64,
}

impl ThresholdParams {
    pub fn new(alpha: u32, beta: u32, degrees: Vec<usize>, epsilon: f64) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::InvalidParams("threshold needs at least one stage".into()));
        }
        if let Some(d) = degrees.iter().find(|d| *d % 2 == 0) {
            return Err(Error::InvalidParams(format!("stage degree {d} is not odd")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "score spacing {epsilon} must be positive"
            )));
        }
        if alpha > 60 || beta > 52 {
            return Err(Error::InvalidParams(format!(
                "α={alpha}, β={beta} beyond double precision"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            degrees,
            epsilon,
        })
    }

    pub fn gap(&self) -> f64 {
        2f64.powi(-(self.alpha as i32))
    }
}

/// One stage: `x -> scale * p(x)`, with `p` the minimax sign approximation on `[γ, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainStage {
    pub minimax: OddMinimax,
    /// `1/(1+e)` for inner stages so the next input stays inside `[-1, 1]`.
    pub scale: f64,
}

impl ChainStage {
    pub fn gap(&self) -> f64 {
        self.minimax.gap
    }

    pub fn error(&self) -> f64 {
        self.minimax.error
    }

    fn eval(&self, x: f64) -> f64 {
        self.scale * self.minimax.eval(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimaxChain {
    pub params: ThresholdParams,
    pub stages: Vec<ChainStage>,
}

impl MinimaxChain {
    /// Builds every stage regardless of whether the target `β` is reached.
    pub fn generate(params: &ThresholdParams) -> Result<Self> {
        let mut gap = params.gap();
        let mut stages = Vec::with_capacity(params.degrees.len());
        for (i, &degree) in params.degrees.iter().enumerate() {
            let minimax = remez_minimax(gap, degree).stage("minimax stage")?;
            let e = minimax.error;
            let last = i + 1 == params.degrees.len();
            let scale = if last { 1.0 } else { 1.0 / (1.0 + e) };
            stages.push(ChainStage { minimax, scale });
            gap = ((1.0 - e) / (1.0 + e)).min(1.0);
        }
        Ok(Self {
            params: params.clone(),
            stages,
        })
    }

    /// Certified bound on `|step - chain|` over the valid domain.
    pub fn achieved_error(&self) -> f64 {
        self.stages.last().map_or(1.0, |s| s.error() / 2.0)
    }

    pub fn achieved_bits(&self) -> f64 {
        -self.achieved_error().log2()
    }

    pub fn meets_target(&self) -> bool {
        self.achieved_error() <= 2f64.powi(-(self.params.beta as i32))
    }

    /// Composed sign approximation in plain arithmetic.
    pub fn sign(&self, x: f64) -> f64 {
        self.stages.iter().fold(x, |acc, s| s.eval(acc))
    }

    pub fn step(&self, x: f64) -> f64 {
        0.5 * (self.sign(x) + 1.0)
    }

    /// Stage polynomials for encrypted evaluation, with the inner scales and
    /// the final `(p + 1)/2` folded in.
    pub fn polys(&self) -> Vec<ChebyshevPoly> {
        let k = self.stages.len();
        self.stages
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let factor = if i + 1 == k { 0.5 } else { s.scale };
                let mut coeffs: Vec<f64> = s.minimax.coeffs.iter().map(|c| c * factor).collect();
                if i + 1 == k {
                    coeffs[0] += 0.5;
                }
                ChebyshevPoly::new(coeffs, -1.0, 1.0)
            })
            .collect()
    }

    /// Levels consumed by [`eval_chain`].
    pub fn depth(&self) -> usize {
        self.polys().iter().map(ChebyshevPoly::depth).sum()
    }
}

/// [`MinimaxChain::generate`], failing when the target precision is missed.
pub fn build_chain(params: &ThresholdParams) -> Result<MinimaxChain> {
    let chain = MinimaxChain::generate(params)?;
    if !chain.meets_target() {
        return Err(Error::Infeasible {
            achieved_bits: chain.achieved_bits(),
            target_bits: params.beta,
        });
    }
    Ok(chain)
}

/// `step` on every slot of `ct`, whose values lie in `[-1, 1]`. The scale is preserved.
pub fn eval_chain(eval: &Evaluator, ct: &Ciphertext, chain: &MinimaxChain) -> Result<Ciphertext> {
    let needed = chain.depth();
    if ct.level() < needed {
        return Err(Error::InsufficientLevels {
            needed,
            available: ct.level(),
        });
    }
    let mut acc = ct.clone();
    for poly in chain.polys() {
        acc = eval_chebyshev(eval, &acc, &poly, None)?;
    }
    Ok(acc)
}

/// A protocol value held either in clear or encrypted in every slot.
#[derive(Clone, Debug)]
pub enum Operand {
    Plain(f64),
    Encrypted(Ciphertext),
}

/// Slots become `step((x - t + ε/2) * norm)` for scores `x`.
pub fn eval_private_threshold(
    eval: &Evaluator,
    scores: &Ciphertext,
    threshold: &Operand,
    normalizer: &Operand,
    chain: &MinimaxChain,
) -> Result<Ciphertext> {
    let needed = chain.depth() + 1;
    let available = match threshold {
        Operand::Encrypted(t) => scores.level().min(t.level()),
        Operand::Plain(_) => scores.level(),
    };
    if available < needed {
        return Err(Error::InsufficientLevels { needed, available });
    }
    let half_step = 0.5 * chain.params.epsilon;
    let shifted = match threshold {
        Operand::Plain(t) => eval.add_real(scores, half_step - t)?,
        Operand::Encrypted(t) => eval.add_real(&eval.sub(scores, t)?, half_step)?,
    };
    let normalized = match normalizer {
        Operand::Plain(c) => {
            eval.mul_const_to(&shifted, Complex64::new(*c, 0.0), shifted.scale, shifted.level() - 1)?
        }
        Operand::Encrypted(c) => eval.mul(&shifted, c)?,
    };
    eval_chain(eval, &normalized, chain)
}

/// Plaintext comparator `x >= t` matching [`eval_private_threshold`] on discrete scores.
pub fn threshold_plain(x: f64, t: f64) -> bool {
    x >= t
}
