//! NTT-friendly prime search and primitive roots.

use super::modulus::Modulus;

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// The `count` largest primes `q < 2^bits` with `q ≡ 1 mod two_n`.
pub fn ntt_primes_below(bits: u32, count: usize, two_n: u64) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut candidate = ((1u64 << bits) / two_n) * two_n + 1;
    if candidate >= 1u64 << bits {
        candidate -= two_n;
    }
    while out.len() < count && candidate > two_n {
        if is_prime(candidate) {
            out.push(candidate);
        }
        candidate -= two_n;
    }
    out
}

/// Primes `≡ 1 mod two_n` closest to `2^bits`, alternating below and above so
/// that running products of consecutive primes stay close to powers of 2^bits.
/// Primes listed in `exclude` are skipped.
pub fn ntt_primes_near(bits: u32, count: usize, two_n: u64, exclude: &[u64]) -> Vec<u64> {
    let center = 1u64 << bits;
    let mut below = (center / two_n) * two_n + 1;
    if below >= center {
        below -= two_n;
    }
    let mut above = below + two_n;
    let mut out = Vec::with_capacity(count);
    let mut take_below = true;
    while out.len() < count {
        let slot = if take_below { &mut below } else { &mut above };
        loop {
            let c = *slot;
            if take_below {
                *slot -= two_n;
            } else {
                *slot += two_n;
            }
            if is_prime(c) && !exclude.contains(&c) && !out.contains(&c) {
                out.push(c);
                break;
            }
        }
        take_below = !take_below;
    }
    out
}

/// Smallest-search primitive 2N-th root of unity modulo `q`, if one exists.
pub fn primitive_root_2n(q: Modulus, degree: usize) -> Option<u64> {
    let two_n = 2 * degree as u64;
    let qv = q.value();
    if !(qv - 1).is_multiple_of(two_n) {
        return None;
    }
    let cofactor = (qv - 1) / two_n;
    (2..qv.min(1 << 20)).find_map(|x| {
        let g = q.pow(x, cofactor);
        // g has order dividing 2N; it is primitive iff g^N = -1
        (q.pow(g, degree as u64) == qv - 1).then_some(g)
    })
}
