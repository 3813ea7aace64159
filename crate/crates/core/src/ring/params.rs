//! Ring parameters: degree, RNS prime chain, special primes and NTT tables.

use super::modulus::Modulus;
use super::ntt::NttTable;
use crate::error::{Error, Result};

/// Which residue rows a polynomial carries: the arithmetic primes `q_0..=q_level`,
/// optionally followed by every special prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Basis {
    pub level: usize,
    pub special: bool,
}

impl Basis {
    pub fn q(level: usize) -> Self {
        Self { level, special: false }
    }

    pub fn qp(level: usize) -> Self {
        Self { level, special: true }
    }
}

/// Noise distribution parameters of fresh encryptions and secrets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseParams {
    pub gaussian_sigma: f64,
    pub secret_hamming_weight: usize,
}

impl NoiseParams {
    pub const DEFAULT_SIGMA: f64 = 3.2;
    pub const TAIL_FACTOR: f64 = 6.0;

    pub fn new(gaussian_sigma: f64, secret_hamming_weight: usize) -> Result<Self> {
        if !(gaussian_sigma > 0.0) || secret_hamming_weight == 0 {
            return Err(Error::InvalidParams(format!(
                "noise parameters sigma={gaussian_sigma}, h={secret_hamming_weight}"
            )));
        }
        Ok(Self {
            gaussian_sigma,
            secret_hamming_weight,
        })
    }

    pub fn tail_bound(&self) -> f64 {
        Self::TAIL_FACTOR * self.gaussian_sigma
    }
}

/// Immutable description of Z_Q[X]/(X^N + 1) in RNS form.
#[derive(Debug)]
pub struct RingParams {
    degree: usize,
    moduli: Vec<Modulus>,
    special_count: usize,
    tables: Vec<NttTable>,
    // Garner tables over the arithmetic primes: prefix[i][j] = (q_0..q_{i-1}) mod q_j
    garner_prefix: Vec<Vec<u64>>,
    garner_inv: Vec<u64>,
    garner_prefix_f64: Vec<f64>,
}

impl RingParams {
    /// `moduli` lists the arithmetic chain first, then `special_count` special primes.
    pub fn new(degree: usize, moduli: &[u64], special_count: usize) -> Result<Self> {
        if degree < 16 || !degree.is_power_of_two() {
            return Err(Error::InvalidParams(format!(
                "ring degree {degree} must be a power of two >= 16"
            )));
        }
        if moduli.len() <= special_count {
            return Err(Error::InvalidParams("at least one arithmetic prime is required".into()));
        }
        for (i, q) in moduli.iter().enumerate() {
            if moduli[..i].contains(q) {
                return Err(Error::InvalidParams(format!("duplicate modulus {q}")));
            }
            if *q < 3 || 64 - q.leading_zeros() > super::modulus::MAX_MODULUS_BITS {
                return Err(Error::InvalidParams(format!("modulus {q} out of range")));
            }
            if !super::primes::is_prime(*q) {
                return Err(Error::InvalidParams(format!("modulus {q} is not prime")));
            }
        }
        let moduli: Vec<Modulus> = moduli.iter().map(|&q| Modulus::new(q)).collect();
        let tables = moduli
            .iter()
            .map(|&q| {
                NttTable::new(q, degree).ok_or_else(|| {
                    Error::InvalidParams(format!(
                        "modulus {} has no primitive {}-th root of unity",
                        q.value(),
                        2 * degree
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let chain = moduli.len() - special_count;
        let mut garner_prefix = vec![vec![0u64; chain]; chain];
        let mut garner_inv = vec![0u64; chain];
        let mut garner_prefix_f64 = vec![1.0f64; chain];
        for i in 0..chain {
            for j in 0..chain {
                let qj = &moduli[j];
                garner_prefix[i][j] = moduli[..i]
                    .iter()
                    .fold(1 % qj.value(), |acc, m| qj.mul(acc, qj.reduce(m.value())));
            }
            garner_inv[i] = moduli[i].inv(garner_prefix[i][i]).expect("distinct primes are coprime");
            if i > 0 {
                garner_prefix_f64[i] = garner_prefix_f64[i - 1] * moduli[i - 1].value() as f64;
            }
        }

        Ok(Self {
            degree,
            moduli,
            special_count,
            tables,
            garner_prefix,
            garner_inv,
            garner_prefix_f64,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn log_degree(&self) -> u32 {
        self.degree.trailing_zeros()
    }

    /// Number of arithmetic (non-special) primes; the top level is this minus one.
    pub fn chain_len(&self) -> usize {
        self.moduli.len() - self.special_count
    }

    pub fn max_level(&self) -> usize {
        self.chain_len() - 1
    }

    pub fn special_count(&self) -> usize {
        self.special_count
    }

    pub fn moduli(&self) -> &[Modulus] {
        &self.moduli
    }

    pub fn modulus(&self, index: usize) -> &Modulus {
        &self.moduli[index]
    }

    pub fn q(&self, level: usize) -> &Modulus {
        &self.moduli[level]
    }

    pub fn special_moduli(&self) -> &[Modulus] {
        &self.moduli[self.chain_len()..]
    }

    pub fn table(&self, index: usize) -> &NttTable {
        &self.tables[index]
    }

    /// Number of residue rows for a basis.
    pub fn row_count(&self, basis: Basis) -> usize {
        basis.level + 1 + if basis.special { self.special_count } else { 0 }
    }

    /// Index into `moduli()` of a given row under a basis.
    pub fn modulus_index(&self, basis: Basis, row: usize) -> usize {
        if row <= basis.level {
            row
        } else {
            self.chain_len() + row - basis.level - 1
        }
    }

    pub fn basis_moduli(&self, basis: Basis) -> impl Iterator<Item = &Modulus> + '_ {
        (0..self.row_count(basis)).map(move |r| &self.moduli[self.modulus_index(basis, r)])
    }

    /// log2 of Q_level.
    pub fn log_q(&self, level: usize) -> f64 {
        self.moduli[..=level].iter().map(|m| (m.value() as f64).log2()).sum()
    }

    /// log2 of P.
    pub fn log_p(&self) -> f64 {
        self.special_moduli().iter().map(|m| (m.value() as f64).log2()).sum()
    }

    /// Reconstructs the centered integer with residues `residues[i] mod q_i`
    /// (arithmetic primes `0..residues.len()`) as a float, via mixed-radix digits.
    pub fn centered_to_f64(&self, residues: &[u64], scratch: &mut Vec<u64>) -> f64 {
        let k = residues.len();
        scratch.clear();
        scratch.resize(k, 0);
        let mut value = 0.0;
        for i in 0..k {
            let qi = &self.moduli[i];
            let digit = qi.mul(qi.sub(residues[i], scratch[i]), self.garner_inv[i]);
            let centered = qi.center(digit);
            if centered == 0 {
                continue;
            }
            value += centered as f64 * self.garner_prefix_f64[i];
            for j in i + 1..k {
                let qj = &self.moduli[j];
                let d = qj.reduce_i64(centered);
                scratch[j] = qj.add(scratch[j], qj.mul(d, self.garner_prefix[i][j]));
            }
        }
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::primes::ntt_primes_below;

    #[test]
    fn rejects_bad_parameters() {
        assert!(RingParams::new(12, &[97], 0).is_err());
        assert!(RingParams::new(16, &[103], 0).is_err()); // 103 != 1 mod 32
        assert!(RingParams::new(16, &[], 0).is_err());
        let p = ntt_primes_below(30, 2, 32);
        assert!(RingParams::new(16, &[p[0], p[0]], 0).is_err());
        assert!(RingParams::new(16, &p, 1).is_ok());
    }

    #[test]
    fn centered_reconstruction_small_values() {
        let p = ntt_primes_below(40, 3, 32);
        let params = RingParams::new(16, &p, 0).unwrap();
        let mut scratch = Vec::new();
        for v in [-5i64, 0, 7, -(1 << 50), (1 << 60) + 3] {
            let res: Vec<u64> = params.moduli().iter().map(|m| m.reduce_i64(v)).collect();
            assert_eq!(params.centered_to_f64(&res, &mut scratch), v as f64);
        }
    }
}
