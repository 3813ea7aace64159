//! Negacyclic number-theoretic transform over a single prime.
//!
//! Forward output is in bit-reversed order: slot `i` holds the evaluation at
//! `psi^(2*rev(i)+1)`, where `psi` is a primitive 2N-th root of unity.

use super::modulus::Modulus;
use super::primes::primitive_root_2n;

#[derive(Clone, Debug)]
pub struct NttTable {
    degree: usize,
    modulus: Modulus,
    psi: u64,
    // psi^rev(k) and its Shoup companions, forward direction
    roots: Vec<u64>,
    roots_shoup: Vec<u64>,
    inv_roots: Vec<u64>,
    inv_roots_shoup: Vec<u64>,
    degree_inv: u64,
    degree_inv_shoup: u64,
}

pub(crate) fn bit_reverse(x: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        x.reverse_bits() >> (usize::BITS - bits)
    }
}

impl NttTable {
    /// Builds tables; `None` when the modulus has no primitive 2N-th root.
    pub fn new(modulus: Modulus, degree: usize) -> Option<Self> {
        let psi = primitive_root_2n(modulus, degree)?;
        let log_n = degree.trailing_zeros();
        let psi_inv = modulus.inv(psi)?;
        let mut roots = vec![0u64; degree];
        let mut inv_roots = vec![0u64; degree];
        let (mut pw, mut pw_inv) = (1u64, 1u64);
        for k in 0..degree {
            let r = bit_reverse(k, log_n);
            roots[r] = pw;
            inv_roots[r] = pw_inv;
            pw = modulus.mul(pw, psi);
            pw_inv = modulus.mul(pw_inv, psi_inv);
        }
        let roots_shoup = roots.iter().map(|&w| modulus.shoup(w)).collect();
        let inv_roots_shoup = inv_roots.iter().map(|&w| modulus.shoup(w)).collect();
        let degree_inv = modulus.inv(degree as u64)?;
        Some(Self {
            degree,
            modulus,
            psi,
            roots,
            roots_shoup,
            inv_roots,
            inv_roots_shoup,
            degree_inv,
            degree_inv_shoup: modulus.shoup(degree_inv),
        })
    }

    pub fn psi(&self) -> u64 {
        self.psi
    }

    pub fn forward(&self, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.degree);
        let q = &self.modulus;
        let n = self.degree;
        let mut t = n;
        let mut m = 1;
        while m < n {
            t >>= 1;
            for i in 0..m {
                let w = self.roots[m + i];
                let ws = self.roots_shoup[m + i];
                let j1 = 2 * i * t;
                let (lo, hi) = a[j1..j1 + 2 * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let u = *x;
                    let v = q.mul_shoup(*y, w, ws);
                    *x = q.add(u, v);
                    *y = q.sub(u, v);
                }
            }
            m <<= 1;
        }
    }

    pub fn inverse(&self, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.degree);
        let q = &self.modulus;
        let n = self.degree;
        let mut t = 1;
        let mut m = n;
        while m > 1 {
            let h = m >> 1;
            for i in 0..h {
                let w = self.inv_roots[h + i];
                let ws = self.inv_roots_shoup[h + i];
                let j1 = 2 * i * t;
                let (lo, hi) = a[j1..j1 + 2 * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let u = *x;
                    let v = *y;
                    *x = q.add(u, v);
                    *y = q.mul_shoup(q.sub(u, v), w, ws);
                }
            }
            t <<= 1;
            m = h;
        }
        for x in a.iter_mut() {
            *x = q.mul_shoup(*x, self.degree_inv, self.degree_inv_shoup);
        }
    }
}
