//! Switching keys and the hybrid keyswitch (ModUp, inner product, ModDown).

use super::gadget::{balanced_digits, BaseConverter, Digit, Gadget};
use super::keys::SecretKey;
use crate::error::{Error, Result};
use crate::ring::sample::{self, Prng};
use crate::ring::{Basis, Form, Modulus, NoiseParams, Poly, RingParams};

/// Encryptions of `P * w_i * s_from` under `s_to`, one pair `(b, a)` per digit.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchingKey {
    pub level: usize,
    pub gadget: Gadget,
    pub source_id: u64,
    pub target_id: u64,
    /// `(b, a)` in NTT form over the QP basis at `level`.
    pub digits: Vec<(Poly, Poly)>,
}

/// Generates a key switching `from` (NTT form, QP basis covering `level`) to `to`.
#[allow(clippy::too_many_arguments)]
pub fn switch_key_gen(
    from: &Poly,
    source_id: u64,
    to: &SecretKey,
    gadget: Gadget,
    level: usize,
    params: &RingParams,
    noise: &NoiseParams,
    rng: &mut Prng,
) -> Result<SwitchingKey> {
    gadget.validate()?;
    if level > params.max_level() || params.special_count() == 0 {
        return Err(Error::InvalidParams(
            "switching keys need special primes and a valid level".into(),
        ));
    }
    if from.degree() != params.degree() {
        return Err(Error::DegreeMismatch {
            left: from.degree(),
            right: params.degree(),
        });
    }
    let basis = Basis::qp(level);
    let from = from.restrict(params, basis)?.into_form(params, Form::Ntt);
    let s_to = to.ntt_at(params, basis);
    let digits = gadget
        .digits(params, level)
        .into_iter()
        .map(|digit| {
            let a = sample::uniform(params, basis, Form::Ntt, rng);
            let mut e = Poly::from_signed(
                params,
                &sample::gaussian(params.degree(), noise.gaussian_sigma, rng),
                basis,
            );
            e.to_ntt(params);
            let mut b = a.clone();
            b.mul_assign(&s_to, params)?;
            b.neg_assign(params);
            b.add_assign(&e, params)?;
            // P * w_digit is P * 2^shift on the digit's primes and 0 elsewhere
            let factors: Vec<u64> = (0..params.row_count(basis))
                .map(|r| {
                    if r < digit.first || r >= digit.end {
                        return 0;
                    }
                    let q = params.q(r);
                    let p_mod = params
                        .special_moduli()
                        .iter()
                        .fold(1u64, |acc, p| q.mul(acc, q.reduce(p.value())));
                    q.mul(p_mod, q.pow(2, digit.shift() as u64))
                })
                .collect();
            let mut term = from.clone();
            term.mul_scalar_rows(&factors, params);
            b.add_assign(&term, params)?;
            Ok((b, a))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SwitchingKey {
        level,
        gadget,
        source_id,
        target_id: to.id(),
        digits,
    })
}

/// Lifts one digit of `d` (coefficient form, Q basis at `level`) into the
/// QP basis at `level`, NTT form.
fn mod_up(d: &Poly, digit: Digit, params: &RingParams, level: usize) -> Poly {
    let n = params.degree();
    let basis = Basis::qp(level);
    let rows = params.row_count(basis);
    let mut out = vec![vec![0u64; n]; rows];
    match digit.sub {
        Some(sub) => {
            let q = params.q(digit.first);
            let values: Vec<i64> = d
                .row(digit.first)
                .iter()
                .map(|&x| {
                    balanced_digits(q.center(x), sub.bits, sub.count as usize)
                        .nth(sub.index as usize)
                        .expect("index < count")
                })
                .collect();
            for (r, row) in out.iter_mut().enumerate() {
                let m = params.modulus(params.modulus_index(basis, r));
                for (o, &v) in row.iter_mut().zip(&values) {
                    *o = m.reduce_i64(v);
                }
            }
        }
        None => {
            let source: Vec<Modulus> = (digit.first..digit.end).map(|i| *params.q(i)).collect();
            let target_rows: Vec<usize> = (0..rows).filter(|&r| r < digit.first || r >= digit.end).collect();
            let target: Vec<Modulus> = target_rows
                .iter()
                .map(|&r| *params.modulus(params.modulus_index(basis, r)))
                .collect();
            let conv = BaseConverter::new(source, target);
            let input: Vec<&[u64]> = (digit.first..digit.end).map(|i| d.row(i)).collect();
            let mut converted = vec![vec![0u64; n]; target_rows.len()];
            conv.convert(&input, &mut converted);
            for (r, row) in target_rows.iter().zip(converted) {
                out[*r] = row;
            }
            for i in digit.first..digit.end {
                out[i].copy_from_slice(d.row(i));
            }
        }
    }
    let mut p = Poly::from_rows(params, basis, Form::Coeff, out).expect("shape");
    p.to_ntt(params);
    p
}

/// Divides a QP-basis NTT polynomial by P with rounding, returning the Q basis.
fn mod_down(acc: Poly, params: &RingParams) -> Poly {
    let level = acc.level();
    let n = params.degree();
    let specials = params.special_count();
    let mut rows: Vec<Vec<u64>> = acc.rows().to_vec();
    let mut special_rows: Vec<Vec<u64>> = rows.split_off(level + 1);
    for (k, row) in special_rows.iter_mut().enumerate() {
        params.table(params.chain_len() + k).inverse(row);
    }
    let target: Vec<Modulus> = (0..=level).map(|i| *params.q(i)).collect();
    let conv = BaseConverter::new(params.special_moduli().to_vec(), target);
    let input: Vec<&[u64]> = special_rows.iter().map(|r| r.as_slice()).collect();
    let mut converted = vec![vec![0u64; n]; level + 1];
    conv.convert(&input, &mut converted);
    debug_assert_eq!(input.len(), specials);
    for (i, (row, mut c)) in rows.iter_mut().zip(converted).enumerate() {
        let q = params.q(i);
        params.table(i).forward(&mut c);
        let p_inv = q
            .inv(
                params
                    .special_moduli()
                    .iter()
                    .fold(1u64, |acc, p| q.mul(acc, q.reduce(p.value()))),
            )
            .expect("coprime");
        let p_inv_s = q.shoup(p_inv);
        for (x, &y) in row.iter_mut().zip(&c) {
            *x = q.mul_shoup(q.sub(*x, y), p_inv, p_inv_s);
        }
    }
    Poly::from_rows(params, Basis::q(level), Form::Ntt, rows).expect("shape")
}

/// Keyswitches `d` (Q basis): returns `(k0, k1)` with `k0 + k1*s_to ≈ d*s_from`.
pub fn switch_key(d: &Poly, swk: &SwitchingKey, params: &RingParams) -> Result<(Poly, Poly)> {
    let level = d.level();
    if d.basis().special || level > swk.level {
        return Err(Error::LevelMismatch {
            left: level,
            right: swk.level,
        });
    }
    let d_coeff = d.clone().into_form(params, Form::Coeff);
    let basis = Basis::qp(level);
    let mut acc0 = Poly::zero(params, basis, Form::Ntt);
    let mut acc1 = Poly::zero(params, basis, Form::Ntt);
    let key_row = |r: usize| {
        if r <= level {
            r
        } else {
            swk.level + 1 + (r - level - 1)
        }
    };
    for (idx, digit) in swk.gadget.digits(params, level).into_iter().enumerate() {
        let ext = mod_up(&d_coeff, digit, params, level);
        let (kb, ka) = &swk.digits[idx];
        for (acc, key) in [(&mut acc0, kb), (&mut acc1, ka)] {
            for r in 0..params.row_count(basis) {
                let q = params.modulus(params.modulus_index(basis, r));
                let key_r = key.row(key_row(r));
                let ext_r = ext.row(r);
                let acc_r = &mut acc.rows_mut()[r];
                for j in 0..acc_r.len() {
                    acc_r[j] = q.add(acc_r[j], q.mul(ext_r[j], key_r[j]));
                }
            }
        }
    }
    Ok((mod_down(acc0, params), mod_down(acc1, params)))
}
