//! Gadget decomposition: RNS digits with an optional power-of-two refinement.

use crate::error::{Error, Result};
use crate::ring::{Modulus, RingParams};

/// Decomposition strategy for keyswitching.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Gadget {
    /// Consecutive primes merged into one RNS digit.
    pub primes_per_digit: usize,
    /// Balanced base-2^k sub-digits inside each single-prime digit.
    pub base2: Option<u32>,
}

/// One gadget digit: primes `first..end` of the chain, optionally refined
/// into a balanced base-2 sub-digit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Digit {
    pub first: usize,
    pub end: usize,
    pub sub: Option<SubDigit>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubDigit {
    pub bits: u32,
    pub index: u32,
    pub count: u32,
}

impl Digit {
    /// log2 of the power-of-two factor in this digit's gadget element.
    pub fn shift(&self) -> u32 {
        self.sub.map_or(0, |s| s.bits * s.index)
    }
}

impl Gadget {
    pub fn rns(primes_per_digit: usize) -> Self {
        Self {
            primes_per_digit,
            base2: None,
        }
    }

    pub fn with_base2(bits: u32) -> Self {
        Self {
            primes_per_digit: 1,
            base2: Some(bits),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.primes_per_digit == 0 {
            return Err(Error::InvalidParams("primes_per_digit must be positive".into()));
        }
        if let Some(b) = self.base2 {
            if self.primes_per_digit != 1 || !(1..=62).contains(&b) {
                return Err(Error::InvalidParams(
                    "base2 refinement requires one prime per digit and 1..=62 bits".into(),
                ));
            }
        }
        Ok(())
    }

    /// Digits covering primes `0..=level`.
    pub fn digits(&self, params: &RingParams, level: usize) -> Vec<Digit> {
        let mut out = Vec::new();
        let mut first = 0;
        while first <= level {
            let end = (first + self.primes_per_digit).min(level + 1);
            match self.base2 {
                None => out.push(Digit { first, end, sub: None }),
                Some(bits) => {
                    let count = params.q(first).bits().div_ceil(bits);
                    for index in 0..count {
                        out.push(Digit {
                            first,
                            end,
                            sub: Some(SubDigit { bits, index, count }),
                        });
                    }
                }
            }
            first = end;
        }
        out
    }

    /// Digit count beta at a level.
    pub fn digit_count(&self, params: &RingParams, level: usize) -> usize {
        self.digits(params, level).len()
    }
}

/// Balanced base-2^bits digits of a centered value; the top digit absorbs the carry.
pub fn balanced_digits(mut x: i64, bits: u32, count: usize) -> impl Iterator<Item = i64> {
    let half = 1i64 << (bits - 1);
    (0..count).map(move |k| {
        if k + 1 == count {
            return x;
        }
        // round half away from zero of x / 2^bits
        let q = if x >= 0 {
            (x + half) >> bits
        } else {
            -((-x + half) >> bits)
        };
        let d = x - (q << bits);
        x = q;
        d
    })
}

/// Exact centered conversion of residues from a source prime set to targets:
/// returns `[x]_M mod t` where `[x]_M` is the centered representative mod `M = prod(source)`.
pub(crate) struct BaseConverter {
    source: Vec<Modulus>,
    target: Vec<Modulus>,
    inv_hat: Vec<u64>,
    inv_hat_shoup: Vec<u64>,
    // hat_mod[k][t] = (M / p_k) mod t
    hat_mod: Vec<Vec<u64>>,
    m_mod: Vec<u64>,
    source_f64: Vec<f64>,
}

impl BaseConverter {
    pub fn new(source: Vec<Modulus>, target: Vec<Modulus>) -> Self {
        let hat = |k: usize, m: &Modulus| {
            source
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != k)
                .fold(1 % m.value(), |acc, (_, p)| m.mul(acc, m.reduce(p.value())))
        };
        let inv_hat: Vec<u64> = source
            .iter()
            .enumerate()
            .map(|(k, p)| p.inv(hat(k, p)).expect("distinct primes"))
            .collect();
        let inv_hat_shoup = source.iter().zip(&inv_hat).map(|(p, &w)| p.shoup(w)).collect();
        let hat_mod = (0..source.len())
            .map(|k| target.iter().map(|t| hat(k, t)).collect())
            .collect();
        let m_mod = target
            .iter()
            .map(|t| {
                source
                    .iter()
                    .fold(1 % t.value(), |acc, p| t.mul(acc, t.reduce(p.value())))
            })
            .collect();
        let source_f64 = source.iter().map(|p| p.value() as f64).collect();
        Self {
            source,
            target,
            inv_hat,
            inv_hat_shoup,
            hat_mod,
            m_mod,
            source_f64,
        }
    }

    /// `input[k]` are coefficient rows mod `source[k]`; `output[t]` receives rows mod `target[t]`.
    pub fn convert(&self, input: &[&[u64]], output: &mut [Vec<u64>]) {
        let n = input[0].len();
        let s = self.source.len();
        let mut y = vec![0u64; s];
        if s == 1 {
            let p = &self.source[0];
            for j in 0..n {
                let c = p.center(input[0][j]);
                for (t, out) in self.target.iter().zip(output.iter_mut()) {
                    out[j] = t.reduce_i64(c);
                }
            }
            return;
        }
        for j in 0..n {
            let mut v = 0.0f64;
            for k in 0..s {
                y[k] = self.source[k].mul_shoup(input[k][j], self.inv_hat[k], self.inv_hat_shoup[k]);
                v += y[k] as f64 / self.source_f64[k];
            }
            let u = v.round() as u64;
            for (ti, (t, out)) in self.target.iter().zip(output.iter_mut()).enumerate() {
                let mut acc: u128 = 0;
                for k in 0..s {
                    acc += y[k] as u128 * self.hat_mod[k][ti] as u128;
                    // each term is below 2^122
                    if k % 32 == 31 {
                        acc = t.reduce_u128(acc) as u128;
                    }
                }
                let sum = t.reduce_u128(acc);
                out[j] = t.sub(sum, t.mul(t.reduce(u), self.m_mod[ti]));
            }
        }
    }
}
