use std::sync::Arc;

use dbx::bootstrap::{
    apply_diagonals, coeffs_to_slots_factors, coeffs_to_slots_plain, slots_to_coeffs_factors, BootstrapParams,
    Bootstrapper, EvalMod,
};
use dbx::ckks::{decode_coeffs, encode_coeffs, Encoder, Evaluator};
use dbx::ring::primes::{ntt_primes_below, ntt_primes_near};
use dbx::ring::sample::{prng, uniform, Prng};
use dbx::ring::{Basis, Form, NoiseParams, RingParams};
use dbx::rlwe::{decrypt, encrypt_sk, relin_key_gen, Ciphertext, Domain, Gadget, GaloisKeys, SecretKey};
use num_complex::Complex64;
use rand::Rng;

const DEGREE: usize = 1024;
const OUT_SCALE: f64 = (1u64 << 40) as f64;

struct Fixture {
    params: Arc<RingParams>,
    sk: SecretKey,
    noise: NoiseParams,
    rng: Prng,
}

/// `q_0`, `arith` 40-bit primes, then 55-bit primes for the circuit, then specials.
fn fixture(arith: usize, circuit: usize, weight: usize) -> Fixture {
    let two_n = 2 * DEGREE as u64;
    let mut moduli = ntt_primes_near(55, 1, two_n, &[]);
    moduli.extend(ntt_primes_near(40, arith, two_n, &moduli.clone()));
    moduli.extend(ntt_primes_near(55, circuit, two_n, &moduli.clone()));
    moduli.extend(ntt_primes_below(61, 4, two_n));
    let params = Arc::new(RingParams::new(DEGREE, &moduli, 4).unwrap());
    let noise = NoiseParams::new(3.2, weight).unwrap();
    let mut rng = prng(11);
    let sk = SecretKey::generate(&params, &noise, &mut rng).unwrap();
    Fixture { params, sk, noise, rng }
}

impl Fixture {
    fn evaluator(&mut self, slots: usize, exponents: Vec<usize>) -> Evaluator {
        let p = &self.params;
        let gadget = Gadget::rns(4);
        let level = p.max_level();
        let rlk = relin_key_gen(&self.sk, gadget, level, p, &self.noise, &mut self.rng).unwrap();
        let gk = GaloisKeys::generate(&self.sk, exponents, gadget, level, p, &self.noise, &mut self.rng).unwrap();
        Evaluator::new(p.clone(), slots, Some(Arc::new(rlk)), Arc::new(gk)).unwrap()
    }

    fn encrypt_coeffs(&mut self, values: &[f64], scale: f64, level: usize) -> Ciphertext {
        let pt = encode_coeffs(values, scale, level, &self.params).unwrap();
        encrypt_sk(
            &self.sk,
            &pt.poly,
            scale,
            Domain::Coeffs,
            &self.params,
            &self.noise,
            &mut self.rng,
        )
        .unwrap()
    }

    fn decrypt_coeffs(&self, ct: &Ciphertext) -> Vec<f64> {
        let m = decrypt(&self.sk, ct, &self.params).unwrap();
        decode_coeffs(&m, ct.scale, DEGREE, &self.params).unwrap()
    }

    fn decrypt_slots(&self, ct: &Ciphertext, slots: usize) -> Vec<Complex64> {
        let enc = Encoder::new(DEGREE, slots).unwrap();
        let m = decrypt(&self.sk, ct, &self.params).unwrap();
        enc.decode_slots(&m, ct.scale, &self.params).unwrap()
    }
}

fn bit_reversed(v: &[Complex64]) -> Vec<Complex64> {
    let bits = v.len().trailing_zeros();
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for (j, x) in v.iter().enumerate() {
        out[j.reverse_bits() >> (usize::BITS - bits)] = *x;
    }
    out
}

fn random_complex(n: usize, rng: &mut Prng) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn dft_factors_match_special_fft() {
    let mut rng = prng(3);
    for slots in [2usize, 16, 64, 512] {
        let enc = Encoder::new(DEGREE, slots).unwrap();
        let z = random_complex(slots, &mut rng);
        let mut inv = z.clone();
        enc.fft_special_inv(&mut inv);
        let mut fwd = z.clone();
        enc.fft_special(&mut fwd);
        let log = slots.trailing_zeros() as usize;
        for depth in 1..=log {
            let factors = coeffs_to_slots_factors(slots, depth, 1.0);
            assert_eq!(factors.len(), depth);
            let got = factors.iter().fold(z.clone(), |v, f| apply_diagonals(f, &v));
            assert!(
                max_err(&got, &bit_reversed(&inv)) < 1e-12,
                "cts n={slots} depth={depth}"
            );

            let factors = slots_to_coeffs_factors(slots, depth);
            let got = factors.iter().fold(bit_reversed(&z), |v, f| apply_diagonals(f, &v));
            assert!(max_err(&got, &fwd) < 1e-9, "stc n={slots} depth={depth}");
        }
    }
}

#[test]
fn eval_mod_matches_scalar_oracles() {
    let em = EvalMod::new(16.0, 30, 3, 1.0);
    let proxy_err = |x: f64| em.eval_plain(x) - em.sine_proxy(x);
    // lattice points
    for j in -16..=16 {
        assert!(em.eval_plain(j as f64).abs() < 2f64.powi(-20), "j={j}");
    }
    // q j + 0.1 q against the sine proxy
    for j in -16..=16 {
        let x = j as f64 + 0.1;
        assert!(proxy_err(x).abs() < 2f64.powi(-10));
    }
    // 1024-point sweep against the mod oracle for small messages
    let mut worst_mod = 0f64;
    let mut worst_proxy = 0f64;
    for k in 0..1024 {
        let j = (k % 33) as f64 - 16.0;
        let frac = ((k as f64 * 0.618_033_988_7) % 1.0 - 0.5) * 2f64.powi(-7);
        let x = j + frac;
        worst_mod = worst_mod.max((em.eval_plain(x) - frac).abs());
        worst_proxy = worst_proxy.max(proxy_err(x).abs());
    }
    assert!(worst_proxy < 2f64.powi(-20), "proxy error {worst_proxy:e}");
    assert!(worst_mod < 2f64.powi(-18), "mod error {worst_mod:e}");
    // symmetric about lattice points
    for j in -16..=16 {
        for k in 1..50 {
            let d = k as f64 * 3e-3;
            let a = proxy_err(j as f64 + d).abs();
            let b = proxy_err(j as f64 - d).abs();
            assert!((a - b).abs() < 2f64.powi(-20), "j={j} d={d}");
        }
    }
}

#[test]
fn mod_raise_overflow_is_bounded() {
    let mut f = fixture(1, 14, 32);
    let config = BootstrapParams::toy(DEGREE, OUT_SCALE, OUT_SCALE);
    let bts = Bootstrapper::new(f.params.clone(), config).unwrap();
    let q0 = f.params.q(0).value() as f64;

    // noiseless encryption of zero
    let basis = Basis::q(0);
    let a = uniform(&f.params, basis, Form::Ntt, &mut f.rng);
    let mut b = a.clone();
    b.mul_assign(&f.sk.ntt_at(&f.params, basis), &f.params).unwrap();
    b.neg_assign(&f.params);
    let ct = Ciphertext::new(vec![b, a], 1.0, Domain::Coeffs).unwrap();
    let raised = bts.mod_raise(&ct).unwrap();
    assert_eq!(raised.level(), f.params.max_level());
    let t = decrypt(&f.sk, &raised, &f.params)
        .unwrap()
        .to_centered_f64(&f.params)
        .unwrap();
    assert!(t.iter().any(|&v| v != 0.0));
    for v in &t {
        let i = v / q0;
        assert!((i - i.round()).abs() < 1e-9);
        assert!(i.abs() <= 16.0);
    }

    // random messages
    let mut worst = 0f64;
    for _ in 0..100 {
        let values: Vec<f64> = (0..DEGREE).map(|_| f.rng.random_range(-100.0..100.0)).collect();
        let ct = f.encrypt_coeffs(&values, OUT_SCALE, 0);
        let raised = bts.mod_raise(&ct).unwrap();
        let t = decrypt(&f.sk, &raised, &f.params)
            .unwrap()
            .to_centered_f64(&f.params)
            .unwrap();
        for v in t {
            worst = worst.max((v / q0).round().abs());
        }
    }
    assert!(worst <= 16.0, "max |I| = {worst}");
}

#[test]
fn trace_keeps_subring_coefficients() {
    let mut f = fixture(1, 14, 32);
    let slots = DEGREE / 4;
    let mut config = BootstrapParams::toy(DEGREE, OUT_SCALE, OUT_SCALE);
    config.slots = slots;
    let bts = Bootstrapper::new(f.params.clone(), config).unwrap();
    let exps = bts.galois_exponents();
    assert!(exps.contains(&(DEGREE + 1)));
    let eval = f.evaluator(slots, vec![DEGREE + 1]);
    let values: Vec<f64> = (0..DEGREE).map(|_| f.rng.random_range(-1.0..1.0)).collect();
    let ct = f.encrypt_coeffs(&values, OUT_SCALE, 3);
    let traced = bts.trace(&eval, &ct).unwrap();
    let got = f.decrypt_coeffs(&traced);
    for (j, (g, v)) in got.iter().zip(&values).enumerate() {
        let expected = if j % 2 == 0 { 2.0 * v } else { 0.0 };
        assert!((g - expected).abs() < 1e-6, "coefficient {j}: {g} vs {expected}");
    }
}

#[test]
fn coeffs_to_slots_round_trip() {
    let mut f = fixture(3, 14, 32);
    let slots = DEGREE / 2;
    let bts = Bootstrapper::new(f.params.clone(), BootstrapParams::toy(DEGREE, OUT_SCALE, OUT_SCALE)).unwrap();
    let eval = f.evaluator(slots, bts.galois_exponents());
    let top = f.params.max_level();
    let scale = (1u64 << 45) as f64;

    let values: Vec<f64> = (0..DEGREE).map(|_| f.rng.random_range(-1.0..1.0)).collect();
    let ct = f.encrypt_coeffs(&values, scale, top);
    let w = bts.coeffs_to_slots_complex(&eval, &ct).unwrap();
    assert_eq!(w.level(), top - 3);
    let expected = coeffs_to_slots_plain(&values, slots, 1.0);
    let got = f.decrypt_slots(&w, slots);
    assert!(max_err(&got, &expected) < 2f64.powi(-20));

    let (re, im) = bts.coeffs_to_slots(&eval, &ct).unwrap();
    let re = f.decrypt_slots(&re, slots);
    let im = f.decrypt_slots(&im, slots);
    for k in 0..slots {
        assert!((re[k] - expected[k].re).norm() < 2f64.powi(-20));
        assert!((im[k] - expected[k].im).norm() < 2f64.powi(-20));
    }

    let back = bts.slots_to_coeffs(&eval, &w).unwrap();
    assert_eq!(back.level(), bts.output_level() - 3);
    let got = f.decrypt_coeffs(&back);
    let err = got.iter().zip(&values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 2f64.powi(-12), "round trip error {err:e}");

    let zero = f.encrypt_coeffs(&vec![0.0; DEGREE], scale, top);
    let w = bts.coeffs_to_slots_complex(&eval, &zero).unwrap();
    assert!(f.decrypt_slots(&w, slots).iter().all(|z| z.norm() < 2f64.powi(-20)));
}

#[test]
fn half_bts_recovers_grid_messages() {
    let mut f = fixture(1, 14, 32);
    let slots = DEGREE / 2;
    let q0 = f.params.q(0).value() as f64;
    let message_scale = q0 / 256.0;
    let config = BootstrapParams::toy(DEGREE, message_scale, OUT_SCALE);
    let bts = Bootstrapper::new(f.params.clone(), config.clone()).unwrap();
    assert_eq!(bts.depth(), config.depth());
    assert_eq!(bts.output_level(), f.params.max_level() - bts.depth());
    let eval = f.evaluator(slots, bts.galois_exponents());

    let mut worst = 0f64;
    let mut failures = 0;
    for _ in 0..2 {
        let values: Vec<f64> = (0..DEGREE)
            .map(|_| f.rng.random_range(-64i32..=64) as f64 / 64.0)
            .collect();
        let ct = f.encrypt_coeffs(&values, message_scale, 0);
        let (left, right) = bts.half_bts(&eval, &ct).unwrap();
        assert_eq!(left.level(), bts.output_level());
        assert_eq!(left.scale, OUT_SCALE);
        let l = f.decrypt_slots(&left, slots);
        let r = f.decrypt_slots(&right, slots);
        for (c, v) in values.iter().enumerate() {
            let (half, slot) = bts.slot_of_coefficient(c).unwrap();
            assert_eq!(bts.coefficient_of_slot(half, slot), c);
            let got = if half == 0 { l[slot] } else { r[slot] };
            worst = worst.max((got.re - v).abs()).max(got.im.abs());
            if (got.re * 64.0).round() != v * 64.0 {
                failures += 1;
            }
        }
    }
    let bits = -worst.log2();
    eprintln!("half_bts precision {bits:.2} bits");
    assert!(bits >= 10.0, "precision {bits:.2} bits");
    assert_eq!(failures, 0);

    let zero = f.encrypt_coeffs(&vec![0.0; DEGREE], message_scale, 0);
    let (left, _) = bts.half_bts(&eval, &zero).unwrap();
    assert!(f.decrypt_slots(&left, slots).iter().all(|z| z.norm() < 2f64.powi(-10)));
}
