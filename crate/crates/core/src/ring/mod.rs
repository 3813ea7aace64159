//! Negacyclic ring arithmetic over an RNS prime chain.

mod modulus;
mod ntt;
mod params;
mod poly;
pub mod primes;
pub mod sample;

pub use modulus::{Modulus, MAX_MODULUS_BITS};
pub use ntt::NttTable;
pub use params::{Basis, NoiseParams, RingParams};
pub use poly::{Form, Poly};
pub use sample::{Distribution, Prng};

pub(crate) use ntt::bit_reverse;

/// Multiplicative inverse of an odd exponent modulo `two_n`.
pub fn galois_inverse(g: usize, two_n: usize) -> usize {
    // the unit group mod 2N has exponent dividing N/2, so g^(N/2 - 1) inverts g
    let mut acc = 1usize;
    let mut base = g % two_n;
    let mut e = two_n / 4 - 1;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % two_n;
        }
        base = base * base % two_n;
        e >>= 1;
    }
    acc
}

/// `5^k mod 2N`, the Galois exponent that rotates slots by `k`.
pub fn rotation_exponent(k: i64, degree: usize) -> usize {
    let two_n = 2 * degree;
    let order = degree / 2;
    let k = k.rem_euclid(order as i64) as usize;
    let mut acc = 1usize;
    for _ in 0..k {
        acc = acc * 5 % two_n;
    }
    acc
}
