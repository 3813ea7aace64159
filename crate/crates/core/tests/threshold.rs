use std::sync::Arc;

use dbx::ckks::{Encoder, Evaluator};
use dbx::ring::primes::{ntt_primes_below, ntt_primes_near};
use dbx::ring::sample::{prng, Prng};
use dbx::ring::{NoiseParams, RingParams};
use dbx::rlwe::{decrypt, encrypt_sk, relin_key_gen, Ciphertext, Domain, Gadget, GaloisKeys, SecretKey};
use dbx::threshold::{
    build_chain, eval_chain, eval_private_threshold, remez_minimax, threshold_plain, MinimaxChain, Operand,
    ThresholdParams,
};
use dbx::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn config(alpha: u32, beta: u32, degrees: Vec<usize>) -> ThresholdParams {
    ThresholdParams::new(alpha, beta, degrees, 1.0).unwrap()
}

/// Max of `|step - chain|` over `points` samples of `[-1, -γ] ∪ [γ, 1]`, endpoints included.
fn grid_error(chain: &MinimaxChain, points: usize) -> f64 {
    let gap = chain.params.gap();
    let half = points / 2;
    (0..half)
        .flat_map(|i| {
            let x = gap + (1.0 - gap) * i as f64 / (half - 1) as f64;
            [x, -x]
        })
        .map(|x| {
            let step = if x > 0.0 { 1.0 } else { 0.0 };
            (chain.step(x) - step).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn linear_minimax_closed_form() {
    let m = remez_minimax(0.5, 1).unwrap();
    assert!((m.coeffs[1] - 4.0 / 3.0).abs() < 1e-14);
    assert!((m.error - 1.0 / 3.0).abs() < 1e-14);

    let m = remez_minimax(1.0, 1).unwrap();
    assert!((m.coeffs[1] - 1.0).abs() < 1e-15);
    assert_eq!(m.error, 0.0);
}

#[test]
fn remez_rejects_bad_inputs() {
    assert!(matches!(remez_minimax(0.0, 15), Err(Error::InvalidParams(_))));
    assert!(matches!(remez_minimax(1.5, 15), Err(Error::InvalidParams(_))));
    assert!(matches!(remez_minimax(0.5, 14), Err(Error::InvalidParams(_))));
    assert!(ThresholdParams::new(8, 12, vec![], 1.0).is_err());
    assert!(ThresholdParams::new(8, 12, vec![15, 4], 1.0).is_err());
}

#[test]
fn certified_error_matches_dense_oracle() {
    let gap = 2f64.powi(-8);
    let m = remez_minimax(gap, 15).unwrap();
    let samples = 1_000_000;
    let dense = (0..samples)
        .map(|i| gap + (1.0 - gap) * i as f64 / (samples - 1) as f64)
        .map(|x| (m.eval(x) - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(
        ((m.error - dense) / dense).abs() < 0.01,
        "certified {} dense {}",
        m.error,
        dense
    );
    assert!(dense <= m.error * (1.0 + 1e-9));
}

#[test]
fn residual_equioscillates() {
    for gap in [2f64.powi(-16), 2f64.powi(-9), 0.01, 0.1, 0.3, 0.5, 0.7] {
        for degree in [3usize, 7, 15, 31] {
            let m = remez_minimax(gap, degree).unwrap();
            let residuals = m.residuals();
            assert_eq!(residuals.len(), degree / 2 + 2, "gap {gap} degree {degree}");
            for (i, r) in residuals.iter().enumerate() {
                assert!((r.abs() - m.error).abs() <= 1e-10, "gap {gap} degree {degree} node {i}");
                if i > 0 {
                    assert!(
                        r.signum() != residuals[i - 1].signum(),
                        "gap {gap} degree {degree} node {i}"
                    );
                }
            }
        }
    }
}

#[test]
fn stages_are_odd() {
    let chain = MinimaxChain::generate(&config(8, 12, vec![15, 15, 15])).unwrap();
    for s in &chain.stages {
        assert!(s.minimax.coeffs.iter().step_by(2).all(|&c| c == 0.0));
    }
    let mut rng = prng(1);
    for _ in 0..1000 {
        let x: f64 = rng.random_range(-1.0..1.0);
        assert_eq!(chain.sign(-x), -chain.sign(x));
    }
}

#[test]
fn low_sensitivity_chain_meets_target() {
    let chain = build_chain(&config(8, 12, vec![15, 15, 15])).unwrap();
    let measured = grid_error(&chain, 100_000);
    eprintln!(
        "α=8 [15,15,15]: certified {:.3e} ({:.2} bits), grid {:.3e}",
        chain.achieved_error(),
        chain.achieved_bits(),
        measured
    );
    assert!(measured <= 2f64.powi(-12));
    assert!(measured <= chain.achieved_error() * (1.0 + 1e-6));
    assert_eq!(chain.depth(), 15);
}

#[test]
fn high_sensitivity_chain_reports_achieved_precision() {
    let params = config(16, 20, vec![15; 5]);
    let chain = MinimaxChain::generate(&params).unwrap();
    let measured = grid_error(&chain, 100_000);
    eprintln!(
        "α=16 [15x5]: certified {:.3e} ({:.2} bits), grid {:.3e}",
        chain.achieved_error(),
        chain.achieved_bits(),
        measured
    );
    assert!(measured <= chain.achieved_error() * (1.0 + 1e-6));
    match build_chain(&params) {
        Ok(_) => assert!(measured <= 2f64.powi(-20)),
        Err(Error::Infeasible {
            achieved_bits,
            target_bits,
        }) => {
            assert_eq!(target_bits, 20);
            assert!((achieved_bits - chain.achieved_bits()).abs() < 1e-12);
        }
        Err(e) => panic!("unexpected {e}"),
    }
}

#[test]
fn single_stage_chain_is_the_minimax_step() {
    let chain = MinimaxChain::generate(&config(1, 12, vec![15])).unwrap();
    let m = remez_minimax(0.5, 15).unwrap();
    let poly = &chain.polys()[0];
    for i in 0..=200 {
        let x = -1.0 + i as f64 / 100.0;
        assert!((chain.step(x) - 0.5 * (m.eval(x) + 1.0)).abs() < 1e-15);
        assert!((poly.eval(x) - chain.step(x)).abs() < 1e-12);
    }
}

#[test]
fn folded_polys_match_composition() {
    let chain = MinimaxChain::generate(&config(9, 14, vec![15, 15, 15, 7])).unwrap();
    let polys = chain.polys();
    let mut rng = prng(2);
    for _ in 0..10_000 {
        let x: f64 = rng.random_range(-1.0..1.0);
        let folded = polys.iter().fold(x, |acc, p| p.eval(acc));
        assert!((folded - chain.step(x)).abs() < 1e-12);
    }
}

struct Fixture {
    params: Arc<RingParams>,
    sk: SecretKey,
    noise: NoiseParams,
    rng: Prng,
    eval: Evaluator,
    encoder: Encoder,
}

const DEGREE: usize = 32;
const SLOTS: usize = 16;
const DELTA: f64 = (1u64 << 40) as f64;

fn fixture(levels: usize) -> Fixture {
    let two_n = 2 * DEGREE as u64;
    let mut moduli = ntt_primes_near(55, 1, two_n, &[]);
    moduli.extend(ntt_primes_near(40, levels, two_n, &moduli.clone()));
    moduli.extend(ntt_primes_below(61, 2, two_n));
    let params = Arc::new(RingParams::new(DEGREE, &moduli, 2).unwrap());
    let noise = NoiseParams::new(3.2, 16).unwrap();
    let mut rng = prng(5);
    let sk = SecretKey::generate(&params, &noise, &mut rng).unwrap();
    let top = params.max_level();
    let rlk = relin_key_gen(&sk, Gadget::rns(2), top, &params, &noise, &mut rng).unwrap();
    let gk = GaloisKeys::generate(&sk, vec![], Gadget::rns(2), top, &params, &noise, &mut rng).unwrap();
    let eval = Evaluator::new(params.clone(), SLOTS, Some(Arc::new(rlk)), Arc::new(gk)).unwrap();
    Fixture {
        params,
        sk,
        noise,
        rng,
        eval,
        encoder: Encoder::new(DEGREE, SLOTS).unwrap(),
    }
}

impl Fixture {
    fn encrypt(&mut self, values: &[f64], scale: f64, level: usize) -> Ciphertext {
        let v: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let pt = self.encoder.encode_slots(&v, scale, level, &self.params).unwrap();
        encrypt_sk(
            &self.sk,
            &pt.poly,
            scale,
            Domain::Slots,
            &self.params,
            &self.noise,
            &mut self.rng,
        )
        .unwrap()
    }

    fn decrypt(&self, ct: &Ciphertext) -> Vec<f64> {
        let m = decrypt(&self.sk, ct, &self.params).unwrap();
        self.encoder
            .decode_slots(&m, ct.scale, &self.params)
            .unwrap()
            .iter()
            .map(|c| c.re)
            .collect()
    }
}

fn local_chain() -> MinimaxChain {
    build_chain(&config(9, 14, vec![15, 15, 15, 7])).unwrap()
}

#[test]
fn encrypted_threshold_matches_comparator() {
    let chain = local_chain();
    let mut f = fixture(chain.depth() + 1);
    let top = f.params.max_level();
    let max_score = 144.0;
    let t = 80.0;
    let normalizer = 1.0 / (max_score + 0.5);
    let mut mismatches = 0;
    let mut worst = 0f64;
    for round in 0..10 {
        let scores: Vec<f64> = (0..SLOTS)
            .map(|i| {
                if round == 0 {
                    72.0 + i as f64
                } else {
                    f.rng.random_range(0..=144) as f64
                }
            })
            .collect();
        let ct = f.encrypt(&scores, DELTA, top);
        let out =
            eval_private_threshold(&f.eval, &ct, &Operand::Plain(t), &Operand::Plain(normalizer), &chain).unwrap();
        assert_eq!(out.level(), top - chain.depth() - 1);
        for (got, &x) in f.decrypt(&out).iter().zip(&scores) {
            let expected = if threshold_plain(x, t) { 1.0 } else { 0.0 };
            worst = worst.max((got - expected).abs());
            if got.round() != expected {
                mismatches += 1;
            }
        }
    }
    eprintln!("encrypted threshold worst error {worst:.3e}");
    assert_eq!(mismatches, 0);
    assert!(worst < 1e-3);
}

#[test]
fn encrypted_operands() {
    let chain = local_chain();
    let mut f = fixture(chain.depth() + 1);
    let top = f.params.max_level();
    let scores: Vec<f64> = (0..SLOTS).map(|i| (i * 9) as f64).collect();
    let t = 60.0;
    let ct = f.encrypt(&scores, DELTA, top);
    let ct_t = f.encrypt(&[t; SLOTS], DELTA, top);
    let q_top = f.params.q(top).value() as f64;
    let ct_norm = f.encrypt(&[1.0 / 144.5; SLOTS], q_top, top);
    let out = eval_private_threshold(
        &f.eval,
        &ct,
        &Operand::Encrypted(ct_t),
        &Operand::Encrypted(ct_norm),
        &chain,
    )
    .unwrap();
    for (got, &x) in f.decrypt(&out).iter().zip(&scores) {
        assert_eq!(got.round(), if x >= t { 1.0 } else { 0.0 }, "score {x}: {got}");
    }
}

#[test]
fn offset_resolves_ties_upward() {
    let chain = local_chain();
    let mut f = fixture(chain.depth() + 1);
    let top = f.params.max_level();
    let ct = f.encrypt(&[80.0; SLOTS], DELTA, top);
    let out = eval_private_threshold(
        &f.eval,
        &ct,
        &Operand::Plain(80.0),
        &Operand::Plain(1.0 / 144.5),
        &chain,
    )
    .unwrap();
    assert!(f.decrypt(&out).iter().all(|v| (v - 1.0).abs() < 1e-3));

    // far above the threshold
    let ct = f.encrypt(&[144.0; SLOTS], DELTA, top);
    let out = eval_private_threshold(&f.eval, &ct, &Operand::Plain(0.0), &Operand::Plain(1.0 / 144.5), &chain).unwrap();
    assert!(f.decrypt(&out).iter().all(|v| (v - 1.0).abs() < 1e-3));
}

#[test]
fn threshold_checks_levels_first() {
    let chain = local_chain();
    let mut f = fixture(chain.depth() + 1);
    let ct = f.encrypt(&[1.0; SLOTS], DELTA, chain.depth());
    assert!(matches!(
        eval_private_threshold(&f.eval, &ct, &Operand::Plain(0.0), &Operand::Plain(0.1), &chain),
        Err(Error::InsufficientLevels { .. })
    ));
    let ct = f.encrypt(&[0.5; SLOTS], DELTA, chain.depth() - 1);
    assert!(matches!(
        eval_chain(&f.eval, &ct, &chain),
        Err(Error::InsufficientLevels { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]
    #[test]
    fn minimax_is_odd_and_bounded(log_gap in 1.0f64..12.0, half_degree in 1usize..12) {
        let gap = 2f64.powf(-log_gap);
        let m = remez_minimax(gap, 2 * half_degree + 1).unwrap();
        prop_assert!(m.error < 1.0);
        for i in 0..=100 {
            let x = gap + (1.0 - gap) * i as f64 / 100.0;
            prop_assert!((m.eval(x) - 1.0).abs() <= m.error * (1.0 + 1e-9) + 1e-15);
            prop_assert_eq!(m.eval(-x), -m.eval(x));
        }
    }
}
