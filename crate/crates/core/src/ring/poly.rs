//! RNS polynomials in coefficient or NTT form.

use super::ntt::bit_reverse;
use super::params::{Basis, RingParams};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Form {
    Coeff,
    Ntt,
}

/// A polynomial stored as one residue row per active prime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    basis: Basis,
    form: Form,
    rows: Vec<Vec<u64>>,
}

impl Poly {
    pub fn zero(params: &RingParams, basis: Basis, form: Form) -> Self {
        Self {
            basis,
            form,
            rows: vec![vec![0; params.degree()]; params.row_count(basis)],
        }
    }

    /// Assembles a polynomial from raw residue rows; rows must already be reduced.
    pub fn from_rows(params: &RingParams, basis: Basis, form: Form, rows: Vec<Vec<u64>>) -> Result<Self> {
        if rows.len() != params.row_count(basis) || rows.iter().any(|r| r.len() != params.degree()) {
            return Err(Error::InvalidInput("residue row shape mismatch".into()));
        }
        for (r, row) in rows.iter().enumerate() {
            let q = params.modulus(params.modulus_index(basis, r)).value();
            if row.iter().any(|&x| x >= q) {
                return Err(Error::InvalidInput("residue not reduced".into()));
            }
        }
        Ok(Self { basis, form, rows })
    }

    /// Embeds signed integer coefficients (coefficient form).
    pub fn from_signed(params: &RingParams, coeffs: &[i64], basis: Basis) -> Self {
        assert_eq!(coeffs.len(), params.degree());
        let rows = params
            .basis_moduli(basis)
            .map(|q| coeffs.iter().map(|&c| q.reduce_i64(c)).collect())
            .collect();
        Self {
            basis,
            form: Form::Coeff,
            rows,
        }
    }

    /// Embeds wide signed coefficients (coefficient form).
    pub fn from_i128(params: &RingParams, coeffs: &[i128], basis: Basis) -> Self {
        assert_eq!(coeffs.len(), params.degree());
        let rows = params
            .basis_moduli(basis)
            .map(|q| coeffs.iter().map(|&c| q.reduce_i128(c)).collect())
            .collect();
        Self {
            basis,
            form: Form::Coeff,
            rows,
        }
    }

    /// A signed monomial `sign * X^k` for `0 <= k < 2N` (coefficient form).
    pub fn monomial(params: &RingParams, k: usize, basis: Basis) -> Self {
        let n = params.degree();
        let mut c = vec![0i64; n];
        let k = k % (2 * n);
        if k < n {
            c[k] = 1;
        } else {
            c[k - n] = -1;
        }
        Self::from_signed(params, &c, basis)
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn level(&self) -> usize {
        self.basis.level
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn is_ntt(&self) -> bool {
        self.form == Form::Ntt
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.rows
    }

    pub fn rows_mut(&mut self) -> &mut [Vec<u64>] {
        &mut self.rows
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.rows[r]
    }

    pub fn degree(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|&x| x == 0))
    }

    pub fn ntt_transform(&mut self, params: &RingParams, forward: bool) -> Result<()> {
        let expected = if forward { Form::Coeff } else { Form::Ntt };
        if self.form != expected {
            return Err(Error::FormMismatch);
        }
        let basis = self.basis;
        for (r, row) in self.rows.iter_mut().enumerate() {
            let t = params.table(params.modulus_index(basis, r));
            if forward {
                t.forward(row);
            } else {
                t.inverse(row);
            }
        }
        self.form = if forward { Form::Ntt } else { Form::Coeff };
        Ok(())
    }

    /// Converts to NTT form if needed.
    pub fn to_ntt(&mut self, params: &RingParams) {
        if self.form == Form::Coeff {
            self.ntt_transform(params, true).expect("form checked");
        }
    }

    /// Converts to coefficient form if needed.
    pub fn to_coeff(&mut self, params: &RingParams) {
        if self.form == Form::Ntt {
            self.ntt_transform(params, false).expect("form checked");
        }
    }

    pub fn into_form(mut self, params: &RingParams, form: Form) -> Self {
        match form {
            Form::Ntt => self.to_ntt(params),
            Form::Coeff => self.to_coeff(params),
        }
        self
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::LevelMismatch {
                left: self.basis.level,
                right: other.basis.level,
            });
        }
        if self.form != other.form {
            return Err(Error::FormMismatch);
        }
        Ok(())
    }

    fn zip_rows(
        &mut self,
        other: &Self,
        params: &RingParams,
        f: impl Fn(&super::Modulus, u64, u64) -> u64,
    ) -> Result<()> {
        self.check_compatible(other)?;
        let basis = self.basis;
        for (r, (a, b)) in self.rows.iter_mut().zip(&other.rows).enumerate() {
            let q = params.modulus(params.modulus_index(basis, r));
            for (x, &y) in a.iter_mut().zip(b) {
                *x = f(q, *x, y);
            }
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &Self, params: &RingParams) -> Result<()> {
        self.zip_rows(other, params, |q, a, b| q.add(a, b))
    }

    pub fn sub_assign(&mut self, other: &Self, params: &RingParams) -> Result<()> {
        self.zip_rows(other, params, |q, a, b| q.sub(a, b))
    }

    /// Pointwise product; both operands must be in NTT form.
    pub fn mul_assign(&mut self, other: &Self, params: &RingParams) -> Result<()> {
        if self.form != Form::Ntt {
            return Err(Error::FormMismatch);
        }
        self.zip_rows(other, params, |q, a, b| q.mul(a, b))
    }

    /// `self += a * b` pointwise (NTT form).
    pub fn mul_add_assign(&mut self, a: &Self, b: &Self, params: &RingParams) -> Result<()> {
        if self.form != Form::Ntt {
            return Err(Error::FormMismatch);
        }
        self.check_compatible(a)?;
        a.check_compatible(b)?;
        let basis = self.basis;
        for (r, acc) in self.rows.iter_mut().enumerate() {
            let q = params.modulus(params.modulus_index(basis, r));
            for ((x, &y), &z) in acc.iter_mut().zip(&a.rows[r]).zip(&b.rows[r]) {
                *x = q.add(*x, q.mul(y, z));
            }
        }
        Ok(())
    }

    pub fn neg_assign(&mut self, params: &RingParams) {
        let basis = self.basis;
        for (r, row) in self.rows.iter_mut().enumerate() {
            let q = params.modulus(params.modulus_index(basis, r));
            row.iter_mut().for_each(|x| *x = q.neg(*x));
        }
    }

    /// Multiplies by a signed integer constant.
    pub fn mul_scalar_i128(&mut self, c: i128, params: &RingParams) {
        let basis = self.basis;
        for (r, row) in self.rows.iter_mut().enumerate() {
            let q = params.modulus(params.modulus_index(basis, r));
            let w = q.reduce_i128(c);
            let ws = q.shoup(w);
            row.iter_mut().for_each(|x| *x = q.mul_shoup(*x, w, ws));
        }
    }

    /// Multiplies row `r` by `scalars[r]`.
    pub fn mul_scalar_rows(&mut self, scalars: &[u64], params: &RingParams) {
        let basis = self.basis;
        for (r, row) in self.rows.iter_mut().enumerate() {
            let q = params.modulus(params.modulus_index(basis, r));
            let w = scalars[r];
            let ws = q.shoup(w);
            row.iter_mut().for_each(|x| *x = q.mul_shoup(*x, w, ws));
        }
    }

    /// Multiplies by the signed monomial `X^k` (k taken mod 2N); works in either form.
    pub fn mul_monomial(&self, k: usize, params: &RingParams) -> Self {
        let n = params.degree();
        let k = k % (2 * n);
        match self.form {
            Form::Coeff => {
                let basis = self.basis;
                let rows = self
                    .rows
                    .iter()
                    .enumerate()
                    .map(|(r, row)| {
                        let q = params.modulus(params.modulus_index(basis, r));
                        let mut out = vec![0u64; n];
                        for (i, &c) in row.iter().enumerate() {
                            let e = i + k;
                            let (pos, negate) = if e < n {
                                (e, false)
                            } else if e < 2 * n {
                                (e - n, true)
                            } else {
                                (e - 2 * n, false)
                            };
                            out[pos] = if negate { q.neg(c) } else { c };
                        }
                        out
                    })
                    .collect();
                Self {
                    basis,
                    form: Form::Coeff,
                    rows,
                }
            }
            Form::Ntt => {
                let mut m = Self::monomial(params, k, self.basis);
                m.to_ntt(params);
                m.mul_assign(self, params).expect("same basis");
                m
            }
        }
    }

    /// Applies `X -> X^exponent`, in either form.
    pub fn automorphism(&self, exponent: usize, params: &RingParams) -> Result<Self> {
        let n = params.degree();
        let two_n = 2 * n;
        let g = exponent % two_n;
        if g.is_multiple_of(2) {
            return Err(Error::InvalidAutomorphism(exponent as u64));
        }
        let basis = self.basis;
        let rows = match self.form {
            Form::Coeff => self
                .rows
                .iter()
                .enumerate()
                .map(|(r, row)| {
                    let q = params.modulus(params.modulus_index(basis, r));
                    let mut out = vec![0u64; n];
                    for (i, &c) in row.iter().enumerate() {
                        let e = (i * g) % two_n;
                        if e < n {
                            out[e] = c;
                        } else {
                            out[e - n] = q.neg(c);
                        }
                    }
                    out
                })
                .collect(),
            Form::Ntt => {
                let perm = ntt_automorphism_index(n, g);
                self.rows
                    .iter()
                    .map(|row| perm.iter().map(|&j| row[j]).collect())
                    .collect()
            }
        };
        Ok(Self {
            basis,
            form: self.form,
            rows,
        })
    }

    /// Drops arithmetic rows above `level` (Q basis only).
    pub fn drop_to_level(&mut self, level: usize) -> Result<()> {
        if self.basis.special {
            return Err(Error::InvalidInput("cannot drop levels of a QP polynomial".into()));
        }
        if level > self.basis.level {
            return Err(Error::LevelMismatch {
                left: self.basis.level,
                right: level,
            });
        }
        self.rows.truncate(level + 1);
        self.basis.level = level;
        Ok(())
    }

    /// Restricts a QP polynomial to its Q rows at `level` (drops special rows).
    pub fn restrict(&self, params: &RingParams, basis: Basis) -> Result<Self> {
        if basis.level > self.basis.level || (basis.special && !self.basis.special) {
            return Err(Error::LevelMismatch {
                left: self.basis.level,
                right: basis.level,
            });
        }
        let mut rows = Vec::with_capacity(params.row_count(basis));
        rows.extend(self.rows[..=basis.level].iter().cloned());
        if basis.special {
            rows.extend(self.rows[self.basis.level + 1..].iter().cloned());
        }
        Ok(Self {
            basis,
            form: self.form,
            rows,
        })
    }

    /// Divides by the top prime with rounding to nearest, dropping one level.
    pub fn rescale_round(&mut self, params: &RingParams) -> Result<()> {
        if self.basis.special {
            return Err(Error::InvalidInput("rescale applies to Q-basis polynomials".into()));
        }
        let level = self.basis.level;
        if level == 0 {
            return Err(Error::CannotRescale);
        }
        let was_ntt = self.form == Form::Ntt;
        let ql = *params.q(level);
        let mut top = self.rows.pop().expect("level >= 1");
        if was_ntt {
            params.table(level).inverse(&mut top);
        }
        for (i, row) in self.rows.iter_mut().enumerate() {
            let qi = params.q(i);
            let inv = qi.inv(qi.reduce(ql.value())).expect("coprime");
            let inv_s = qi.shoup(inv);
            let mut t: Vec<u64> = top.iter().map(|&c| qi.reduce_i64(ql.center(c))).collect();
            if was_ntt {
                params.table(i).forward(&mut t);
            }
            for (x, &c) in row.iter_mut().zip(&t) {
                *x = qi.mul_shoup(qi.sub(*x, c), inv, inv_s);
            }
        }
        self.basis.level = level - 1;
        Ok(())
    }

    /// Centered coefficients as floats (coefficient form, Q basis).
    pub fn to_centered_f64(&self, params: &RingParams) -> Result<Vec<f64>> {
        if self.form != Form::Coeff || self.basis.special {
            return Err(Error::FormMismatch);
        }
        let n = self.degree();
        let mut scratch = Vec::new();
        let mut residues = vec![0u64; self.rows.len()];
        Ok((0..n)
            .map(|j| {
                for (r, row) in self.rows.iter().enumerate() {
                    residues[r] = row[j];
                }
                params.centered_to_f64(&residues, &mut scratch)
            })
            .collect())
    }

    /// Centered coefficients of the first row (exact when |coeff| < q_0/2).
    pub fn centered_row0(&self, params: &RingParams) -> Vec<i64> {
        let q = params.modulus(params.modulus_index(self.basis, 0));
        self.rows[0].iter().map(|&x| q.center(x)).collect()
    }
}

/// `perm[i] = j` such that NTT(phi_g(a))[i] = NTT(a)[j].
pub(crate) fn ntt_automorphism_index(n: usize, g: usize) -> Vec<usize> {
    let log_n = n.trailing_zeros();
    let two_n = 2 * n;
    (0..n)
        .map(|i| {
            let e = 2 * bit_reverse(i, log_n) + 1;
            let ge = (e * g) % two_n;
            bit_reverse((ge - 1) / 2, log_n)
        })
        .collect()
}
