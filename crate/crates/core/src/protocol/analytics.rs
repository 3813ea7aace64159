//! Closed-form object sizes for any profile, including ones too large to build.

use std::fmt;

use super::context::{bootstrap_params, ModuliPlan};
use super::profile::Profile;
use super::roles::{big_gadget, profile_exponents, small_gadget};
use super::wire;
use crate::rlwe::Gadget;

const MB: f64 = 1e6;

fn bits(q: u64) -> u32 {
    u64::BITS - q.leading_zeros()
}

/// Digits of `gadget` over the first `level + 1` primes of `chain`.
pub fn digit_count(gadget: Gadget, chain: &[u64], level: usize) -> usize {
    let groups = (level + 1).div_ceil(gadget.primes_per_digit);
    match gadget.base2 {
        None => groups,
        Some(b) => (0..groups)
            .map(|g| bits(chain[g * gadget.primes_per_digit]).div_ceil(b) as usize)
            .sum(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InventoryRow {
    pub name: &'static str,
    pub count: usize,
    pub bytes: usize,
}

/// Sizes of the keys and query objects a profile produces.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyInventory {
    pub profile: String,
    pub rows: Vec<InventoryRow>,
}

impl KeyInventory {
    /// `functions` test vectors plus the encrypted thresholds.
    pub fn new(profile: &Profile, functions: usize) -> Self {
        let moduli = ModuliPlan::new(profile);
        let n = profile.small_degree;
        let small_chain = [moduli.q0, moduli.small_special];
        let small_digits = digit_count(small_gadget(profile), &small_chain, 0);
        let small_key = wire::switching_key_len(2, n, 0, 1, small_digits);
        let repack_count = n.trailing_zeros() as usize;
        let repack = wire::header_len(2) + 8 + wire::galois_keys_len(2, small_key, repack_count);
        let mut rows = vec![InventoryRow {
            name: "Ring Packing",
            count: repack_count,
            bytes: repack,
        }];
        let tv = wire::ciphertext_len(2, n, 0, 2);
        rows.push(InventoryRow {
            name: "RLWE(f_i)",
            count: functions,
            bytes: functions * (16 + tv),
        });
        if profile.has_big_ring() {
            let big_primes = moduli.big_chain.len() + moduli.big_special.len();
            let specials = moduli.big_special.len();
            let big_n = profile.big_degree;
            let mut merge = 0;
            let mut count = 0;
            let mut degree = 2 * n;
            while degree <= big_n {
                merge += if degree == big_n {
                    let digits = digit_count(small_gadget(profile), &moduli.big_chain, 0);
                    wire::switching_key_len(big_primes, big_n, 0, specials, digits)
                } else {
                    wire::switching_key_len(2, degree, 0, 1, small_digits)
                };
                count += 1;
                degree *= 2;
            }
            rows.push(InventoryRow {
                name: "Merging",
                count,
                bytes: merge,
            });
            let top = moduli.big_chain.len() - 1;
            let digits = digit_count(big_gadget(profile), &moduli.big_chain, top);
            let key = wire::switching_key_len(big_primes, big_n, top, specials, digits);
            let exponents = profile_exponents(profile).len();
            rows.push(InventoryRow {
                name: "Bootstrapping",
                count: exponents + 1,
                bytes: key + wire::galois_keys_len(big_primes, key, exponents),
            });
            let level = top.saturating_sub(bootstrap_params(profile).depth());
            rows.push(InventoryRow {
                name: "RLWE(t_i)",
                count: 3,
                bytes: 3 * wire::ciphertext_len(big_primes, big_n, level, 2),
            });
        }
        Self {
            profile: profile.kind.to_string(),
            rows,
        }
    }

    pub fn get(&self, name: &str) -> Option<&InventoryRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Bytes the scientist sends once: every row but the query objects.
    pub fn key_bytes(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| !r.name.starts_with("RLWE"))
            .map(|r| r.bytes)
            .sum()
    }

    pub fn total(&self) -> usize {
        self.rows.iter().map(|r| r.bytes).sum()
    }
}

impl fmt::Display for KeyInventory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16} {:>7} {:>14} {:>11}", "object", "count", "bytes", "MB")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<16} {:>7} {:>14} {:>11.2}",
                r.name,
                r.count,
                r.bytes,
                r.bytes as f64 / MB
            )?;
        }
        write!(
            f,
            "{:<16} {:>7} {:>14} {:>11.2}",
            "Total",
            "",
            self.total(),
            self.total() as f64 / MB
        )
    }
}
