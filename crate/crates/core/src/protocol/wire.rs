//! Self-describing little-endian binary format.
//!
//! Every object starts with a header: magic, version, kind, ring degree,
//! prime count, special count and the full moduli list (empty for objects
//! that are not bound to one ring). Residues are 64-bit words.

use std::sync::Arc;

use super::context::Contexts;
use crate::error::{Error, Result};
use crate::ring::{Basis, Form, Poly, RingParams};
use crate::rlwe::{Ciphertext, Domain, Gadget, GaloisKeys, SecretKey, SwitchingKey};
use crate::threshold::{ChainStage, MinimaxChain, OddMinimax, ThresholdParams};

pub const MAGIC: [u8; 4] = *b"DBXW";
pub const VERSION: u16 = 1;

/// Fixed part of the header; the moduli follow at 8 bytes each.
pub const HEADER_FIXED: usize = 16;
pub const CIPHERTEXT_DESCRIPTOR: usize = 16;
pub const SWITCHING_KEY_DESCRIPTOR: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Kind {
    Ciphertext = 1,
    SwitchingKey = 2,
    GaloisKeys = 3,
    RepackKeys = 4,
    MergeKeys = 5,
    EvalKeys = 6,
    Query = 7,
    Chain = 8,
    SecretKey = 9,
    SecretKeys = 10,
    PackedScores = 11,
}

impl Kind {
    fn from_u8(v: u8) -> Result<Self> {
        use Kind::*;
        Ok(match v {
            1 => Ciphertext,
            2 => SwitchingKey,
            3 => GaloisKeys,
            4 => RepackKeys,
            5 => MergeKeys,
            6 => EvalKeys,
            7 => Query,
            8 => Chain,
            9 => SecretKey,
            10 => SecretKeys,
            11 => PackedScores,
            other => return Err(Error::Serialization(format!("unknown object kind {other}"))),
        })
    }
}

/// Header length for a ring with `primes` moduli in total.
pub fn header_len(primes: usize) -> usize {
    HEADER_FIXED + 8 * primes
}

pub fn ring_header_len(params: &RingParams) -> usize {
    header_len(params.moduli().len())
}

/// Bytes of a ciphertext with `parts` polynomials of `level + 1` rows in a ring of `degree`
/// whose moduli list has `primes` entries.
pub fn ciphertext_len(primes: usize, degree: usize, level: usize, parts: usize) -> usize {
    header_len(primes) + CIPHERTEXT_DESCRIPTOR + parts * (level + 1) * degree * 8
}

/// Bytes of a switching key with `digits` digits at `level` over `level + 1 + specials` rows.
pub fn switching_key_len(primes: usize, degree: usize, level: usize, specials: usize, digits: usize) -> usize {
    header_len(primes) + SWITCHING_KEY_DESCRIPTOR + digits * 2 * (level + 1 + specials) * degree * 8
}

pub fn galois_keys_len(primes: usize, key_len: usize, count: usize) -> usize {
    header_len(primes) + 4 + count * (4 + key_len)
}

pub fn secret_key_len(primes: usize, degree: usize) -> usize {
    header_len(primes) + 8 + degree
}

#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self { buf: Vec::new() }
    }

    pub(crate) fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub(crate) fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("length fits in 32 bits");
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }

    pub(crate) fn f64s(&mut self, vs: &[f64]) {
        self.u32(vs.len());
        vs.iter().for_each(|&v| self.f64(v));
    }

    pub(crate) fn header(&mut self, kind: Kind, ring: Option<&RingParams>) {
        self.buf.extend_from_slice(&MAGIC);
        self.u16(VERSION);
        self.u8(kind as u8);
        self.u8(0);
        match ring {
            Some(p) => {
                self.u32(p.degree());
                self.u16(p.moduli().len() as u16);
                self.u16(p.special_count() as u16);
                p.moduli().iter().for_each(|m| self.u64(m.value()));
            }
            None => {
                self.u32(0);
                self.u16(0);
                self.u16(0);
            }
        }
    }

    pub(crate) fn rows(&mut self, poly: &Poly) {
        self.buf.reserve(poly.rows().len() * poly.degree() * 8);
        for row in poly.rows() {
            for &x in row {
                self.buf.extend_from_slice(&x.to_le_bytes());
            }
        }
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Serialization(format!("truncated: need {n} bytes at offset {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    pub(crate) fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    pub(crate) fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u32()?;
        if n > self.buf.len() / 8 {
            return Err(Error::Serialization(format!("implausible length {n}")));
        }
        (0..n).map(|_| self.f64()).collect()
    }

    /// Checks magic, version and kind; returns the ring the header names, if any.
    pub(crate) fn header<'c>(&mut self, kind: Kind, ctx: &'c Contexts) -> Result<Option<&'c Arc<RingParams>>> {
        if self.take(4)? != MAGIC {
            return Err(Error::Serialization("bad magic".into()));
        }
        let version = self.u16()?;
        if version != VERSION {
            return Err(Error::Serialization(format!("unsupported version {version}")));
        }
        let found = Kind::from_u8(self.u8()?)?;
        if found != kind {
            return Err(Error::Serialization(format!("expected {kind:?}, found {found:?}")));
        }
        self.u8()?;
        let degree = self.u32()?;
        let count = self.u16()? as usize;
        let special = self.u16()? as usize;
        let moduli = (0..count).map(|_| self.u64()).collect::<Result<Vec<_>>>()?;
        if degree == 0 && count == 0 {
            return Ok(None);
        }
        let ring = ctx.ring_for(degree, &moduli)?;
        if ring.special_count() != special {
            return Err(Error::Serialization("special prime count mismatch".into()));
        }
        Ok(Some(ring))
    }

    pub(crate) fn ring_header<'c>(&mut self, kind: Kind, ctx: &'c Contexts) -> Result<&'c Arc<RingParams>> {
        self.header(kind, ctx)?
            .ok_or_else(|| Error::Serialization(format!("{kind:?} without a ring")))
    }

    pub(crate) fn poly(&mut self, params: &RingParams, basis: Basis, form: Form) -> Result<Poly> {
        let n = params.degree();
        let bytes = self.take(params.row_count(basis) * n * 8)?;
        let rows = bytes
            .chunks_exact(n * 8)
            .map(|row| {
                row.chunks_exact(8)
                    .map(|w| u64::from_le_bytes(w.try_into().expect("8 bytes")))
                    .collect()
            })
            .collect();
        Poly::from_rows(params, basis, form, rows).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Serialization(format!(
                "{} trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

/// Objects with a binary encoding.
pub trait Wire: Sized {
    const KIND: Kind;

    fn write(&self, w: &mut Writer);

    fn read(r: &mut Reader<'_>, ctx: &Contexts) -> Result<Self>;

    fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.write(&mut w);
        w.into_bytes()
    }

    fn from_bytes(bytes: &[u8], ctx: &Contexts) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let out = Self::read(&mut r, ctx)?;
        r.finish()?;
        Ok(out)
    }
}

fn form_code(form: Form) -> u8 {
    match form {
        Form::Coeff => 0,
        Form::Ntt => 1,
    }
}

fn form_of(code: u8) -> Result<Form> {
    match code {
        0 => Ok(Form::Coeff),
        1 => Ok(Form::Ntt),
        c => Err(Error::Serialization(format!("bad form code {c}"))),
    }
}

pub fn write_ciphertext(w: &mut Writer, ct: &Ciphertext, params: &RingParams) {
    w.header(Kind::Ciphertext, Some(params));
    w.u32(ct.level());
    w.u8(ct.parts.len() as u8);
    w.u8(match ct.domain {
        Domain::Coeffs => 0,
        Domain::Slots => 1,
    });
    w.u8(form_code(ct.form()));
    w.u8(0);
    w.f64(ct.scale);
    ct.parts.iter().for_each(|p| w.rows(p));
}

pub fn read_ciphertext(r: &mut Reader<'_>, ctx: &Contexts) -> Result<Ciphertext> {
    let params = r.ring_header(Kind::Ciphertext, ctx)?;
    let level = r.u32()?;
    let parts = r.u8()? as usize;
    let domain = match r.u8()? {
        0 => Domain::Coeffs,
        1 => Domain::Slots,
        d => return Err(Error::Serialization(format!("bad domain code {d}"))),
    };
    let form = form_of(r.u8()?)?;
    r.u8()?;
    let scale = r.f64()?;
    if level > params.max_level() || !(1..=3).contains(&parts) {
        return Err(Error::Serialization("ciphertext shape out of range".into()));
    }
    let polys = (0..parts)
        .map(|_| r.poly(params, Basis::q(level), form))
        .collect::<Result<Vec<_>>>()?;
    Ciphertext::new(polys, scale, domain).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn ciphertext_bytes(ct: &Ciphertext, params: &RingParams) -> Vec<u8> {
    let mut w = Writer::new();
    write_ciphertext(&mut w, ct, params);
    w.into_bytes()
}

pub fn ciphertext_from_bytes(bytes: &[u8], ctx: &Contexts) -> Result<Ciphertext> {
    let mut r = Reader::new(bytes);
    let ct = read_ciphertext(&mut r, ctx)?;
    r.finish()?;
    Ok(ct)
}

pub fn write_switching_key(w: &mut Writer, key: &SwitchingKey, params: &RingParams) {
    w.header(Kind::SwitchingKey, Some(params));
    w.u32(key.level);
    w.u32(key.gadget.primes_per_digit);
    w.u32(key.gadget.base2.unwrap_or(0) as usize);
    w.u32(key.digits.len());
    w.u64(key.source_id);
    w.u64(key.target_id);
    for (b, a) in &key.digits {
        w.rows(b);
        w.rows(a);
    }
}

/// Returns the key and the ring it was generated in.
pub fn read_switching_key<'c>(r: &mut Reader<'_>, ctx: &'c Contexts) -> Result<(SwitchingKey, &'c Arc<RingParams>)> {
    let params = r.ring_header(Kind::SwitchingKey, ctx)?;
    let level = r.u32()?;
    let primes_per_digit = r.u32()?;
    let base2 = match r.u32()? {
        0 => None,
        b => Some(b as u32),
    };
    let gadget = Gadget {
        primes_per_digit,
        base2,
    };
    gadget.validate().map_err(|e| Error::Serialization(e.to_string()))?;
    let count = r.u32()?;
    let source_id = r.u64()?;
    let target_id = r.u64()?;
    if level > params.max_level() || count != gadget.digit_count(params, level) {
        return Err(Error::Serialization("switching key shape mismatch".into()));
    }
    let basis = Basis::qp(level);
    let digits = (0..count)
        .map(|_| Ok((r.poly(params, basis, Form::Ntt)?, r.poly(params, basis, Form::Ntt)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        SwitchingKey {
            level,
            gadget,
            source_id,
            target_id,
            digits,
        },
        params,
    ))
}

pub fn write_galois_keys(w: &mut Writer, keys: &GaloisKeys, params: &RingParams) {
    w.header(Kind::GaloisKeys, Some(params));
    w.u32(keys.len());
    for (&g, key) in keys.iter() {
        w.u32(g);
        write_switching_key(w, key, params);
    }
}

pub fn read_galois_keys<'c>(r: &mut Reader<'_>, ctx: &'c Contexts) -> Result<(GaloisKeys, &'c Arc<RingParams>)> {
    let params = r.ring_header(Kind::GaloisKeys, ctx)?;
    let count = r.u32()?;
    let mut keys = GaloisKeys::default();
    for _ in 0..count {
        let g = r.u32()?;
        let (key, ring) = read_switching_key(r, ctx)?;
        if !Arc::ptr_eq(ring, params) {
            return Err(Error::Serialization("galois key from a different ring".into()));
        }
        keys.insert(g, key);
    }
    Ok((keys, params))
}

pub fn write_secret_key(w: &mut Writer, sk: &SecretKey, params: &RingParams) {
    w.header(Kind::SecretKey, Some(params));
    w.u64(sk.id());
    w.buf.extend(sk.coeffs().iter().map(|&c| c as i8 as u8));
}

pub fn read_secret_key(r: &mut Reader<'_>, ctx: &Contexts) -> Result<(SecretKey, Arc<RingParams>)> {
    let params = r.ring_header(Kind::SecretKey, ctx)?;
    let id = r.u64()?;
    let coeffs: Vec<i64> = r.take(params.degree())?.iter().map(|&b| b as i8 as i64).collect();
    if coeffs.iter().any(|c| c.abs() > 1) {
        return Err(Error::Serialization("secret coefficients must be ternary".into()));
    }
    Ok((SecretKey::from_coeffs(params, coeffs, id), params.clone()))
}

pub(crate) fn write_chain(w: &mut Writer, chain: &MinimaxChain) {
    w.header(Kind::Chain, None);
    w.u32(chain.params.alpha as usize);
    w.u32(chain.params.beta as usize);
    w.f64(chain.params.epsilon);
    w.u32(chain.stages.len());
    for s in &chain.stages {
        w.f64(s.scale);
        w.f64(s.minimax.gap);
        w.f64(s.minimax.error);
        w.u32(s.minimax.iterations);
        w.f64s(&s.minimax.coeffs);
        w.f64s(&s.minimax.reference);
    }
}

pub(crate) fn read_chain(r: &mut Reader<'_>, ctx: &Contexts) -> Result<MinimaxChain> {
    r.header(Kind::Chain, ctx)?;
    let alpha = r.u32()? as u32;
    let beta = r.u32()? as u32;
    let epsilon = r.f64()?;
    let count = r.u32()?;
    let mut stages = Vec::new();
    for _ in 0..count.min(1024) {
        let scale = r.f64()?;
        let gap = r.f64()?;
        let error = r.f64()?;
        let iterations = r.u32()?;
        let coeffs = r.f64s()?;
        let reference = r.f64s()?;
        if coeffs.len() < 2 || coeffs.len() % 2 != 0 {
            return Err(Error::Serialization("chain stage must have odd degree".into()));
        }
        stages.push(ChainStage {
            minimax: OddMinimax {
                gap,
                coeffs,
                error,
                reference,
                iterations,
            },
            scale,
        });
    }
    if stages.len() != count {
        return Err(Error::Serialization("too many chain stages".into()));
    }
    let degrees = stages.iter().map(|s| s.minimax.degree()).collect();
    let params =
        ThresholdParams::new(alpha, beta, degrees, epsilon).map_err(|e| Error::Serialization(e.to_string()))?;
    Ok(MinimaxChain { params, stages })
}

/// Bytes of a chain with the given stage degrees; reference sizes vary, so they are passed in.
pub fn chain_len(stages: &[(usize, usize)]) -> usize {
    header_len(0)
        + 4
        + 4
        + 8
        + 4
        + stages
            .iter()
            .map(|&(deg, refs)| 8 * 3 + 4 + 4 + 8 * (deg + 1) + 4 + 8 * refs)
            .sum::<usize>()
}

impl Wire for MinimaxChain {
    const KIND: Kind = Kind::Chain;

    fn write(&self, w: &mut Writer) {
        write_chain(w, self);
    }

    fn read(r: &mut Reader<'_>, ctx: &Contexts) -> Result<Self> {
        read_chain(r, ctx)
    }
}
