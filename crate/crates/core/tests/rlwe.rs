use std::sync::Arc;

use dbx::ring::primes::{ntt_primes_below, ntt_primes_near};
use dbx::ring::sample::{self, prng};
use dbx::ring::{galois_inverse, Basis, Form, NoiseParams, Poly, RingParams};
use dbx::rlwe::*;
use rand::Rng;

const SIGMA: f64 = 3.2;

struct Setup {
    params: RingParams,
    noise: NoiseParams,
    sk: SecretKey,
    pk: PublicKey,
}

/// Three 45-bit primes plus two 50-bit specials.
fn setup(n: usize, seed: u64) -> Setup {
    let two_n = 2 * n as u64;
    let mut primes = ntt_primes_below(45, 3, two_n);
    primes.extend(ntt_primes_below(50, 2, two_n));
    let params = RingParams::new(n, &primes, 2).unwrap();
    let noise = NoiseParams::new(SIGMA, n / 2).unwrap();
    let (sk, pk) = keygen(&params, &noise, &mut prng(seed)).unwrap();
    Setup { params, noise, sk, pk }
}

fn random_small(n: usize, bound: i64, rng: &mut impl Rng) -> Vec<i64> {
    (0..n).map(|_| rng.random_range(-bound..=bound)).collect()
}

fn negacyclic(a: &[i64], b: &[i64]) -> Vec<i128> {
    let n = a.len();
    let mut out = vec![0i128; n];
    for i in 0..n {
        for j in 0..n {
            let p = a[i] as i128 * b[j] as i128;
            if i + j < n {
                out[i + j] += p;
            } else {
                out[i + j - n] -= p;
            }
        }
    }
    out
}

/// max |decrypted - expected| over coefficients.
fn error(dec: &Poly, expected: &[i128], params: &RingParams) -> f64 {
    dec.to_centered_f64(params)
        .unwrap()
        .iter()
        .zip(expected)
        .map(|(x, &e)| (x - e as f64).abs())
        .fold(0.0, f64::max)
}

fn plain(params: &RingParams, coeffs: &[i64], level: usize) -> Poly {
    Poly::from_signed(params, coeffs, Basis::q(level))
}

#[test]
fn public_key_is_encryption_of_small_error() {
    let s = setup(64, 1);
    let dec = decrypt(&s.sk, &s.pk.as_ciphertext(), &s.params).unwrap();
    assert!(error(&dec, &[0; 64], &s.params) <= 6.0 * SIGMA);
    let other = setup(64, 2);
    assert_ne!(s.sk.coeffs(), other.sk.coeffs());
}

#[test]
fn secret_weight_matches_set_one_shape() {
    // Set I shape: N = 2^12, h = 2N/3, one 55-bit prime and one 54-bit special prime
    let n = 4096;
    let q0 = ntt_primes_below(55, 1, 2 * n as u64)[0];
    let p = ntt_primes_below(54, 1, 2 * n as u64)[0];
    let params = RingParams::new(n, &[q0, p], 1).unwrap();
    let noise = NoiseParams::new(SIGMA, 2 * n / 3).unwrap();
    let sk = SecretKey::generate(&params, &noise, &mut prng(3)).unwrap();
    assert_eq!(sk.hamming_weight(), 2730);
    assert_eq!(Gadget::with_base2(30).digit_count(&params, 0), 2);
}

#[test]
fn encrypt_decrypt_zero_and_sum() {
    let s = setup(64, 4);
    let mut rng = prng(5);
    let zero = plain(&s.params, &[0; 64], 2);
    let ct = encrypt_pk(&s.pk, &zero, 1.0, Domain::Coeffs, &s.params, &s.noise, &mut rng).unwrap();
    let bound = 6.0 * SIGMA * (64.0 + s.noise.secret_hamming_weight as f64 + 1.0);
    assert!(error(&decrypt(&s.sk, &ct, &s.params).unwrap(), &[0; 64], &s.params) <= bound);

    let m1 = random_small(64, 1 << 30, &mut rng);
    let m2 = random_small(64, 1 << 30, &mut rng);
    let mut c1 = encrypt_pk(
        &s.pk,
        &plain(&s.params, &m1, 2),
        1.0,
        Domain::Coeffs,
        &s.params,
        &s.noise,
        &mut rng,
    )
    .unwrap();
    let c2 = encrypt_sk(
        &s.sk,
        &plain(&s.params, &m2, 2),
        1.0,
        Domain::Coeffs,
        &s.params,
        &s.noise,
        &mut rng,
    )
    .unwrap();
    c1.add_assign(&c2, &s.params).unwrap();
    let expected: Vec<i128> = m1.iter().zip(&m2).map(|(a, b)| (a + b) as i128).collect();
    assert!(error(&decrypt(&s.sk, &c1, &s.params).unwrap(), &expected, &s.params) <= 2.0 * bound);
}

#[test]
fn degree_two_ciphertext_decrypts_to_product() {
    let s = setup(64, 6);
    let mut rng = prng(7);
    let delta = 1i64 << 20;
    let a = random_small(64, 100, &mut rng);
    let b = random_small(64, 100, &mut rng);
    let scaled = |v: &[i64]| v.iter().map(|x| x * delta).collect::<Vec<_>>();
    let ca = encrypt_sk(
        &s.sk,
        &plain(&s.params, &scaled(&a), 2),
        1.0,
        Domain::Coeffs,
        &s.params,
        &s.noise,
        &mut rng,
    )
    .unwrap();
    let cb = encrypt_sk(
        &s.sk,
        &plain(&s.params, &scaled(&b), 2),
        1.0,
        Domain::Coeffs,
        &s.params,
        &s.noise,
        &mut rng,
    )
    .unwrap();
    let prod = ca.tensor(&cb, &s.params).unwrap();
    assert_eq!(prod.degree(), 2);
    let expected: Vec<i128> = negacyclic(&a, &b)
        .iter()
        .map(|x| x * (delta as i128) * (delta as i128))
        .collect();
    let err = error(&decrypt(&s.sk, &prod, &s.params).unwrap(), &expected, &s.params);
    // cross terms m*e are below N * 100 * 2^20 * 6 sigma
    assert!(err < 64.0 * 100.0 * delta as f64 * 6.0 * SIGMA * 2.0, "err {err}");

    let rlk = relin_key_gen(&s.sk, Gadget::rns(1), 2, &s.params, &s.noise, &mut rng).unwrap();
    let relin = relinearize(&prod, &rlk, &s.params).unwrap();
    assert_eq!(relin.degree(), 1);
    let err2 = error(&decrypt(&s.sk, &relin, &s.params).unwrap(), &expected, &s.params);
    assert!((err2 - err).abs() < 1e6, "relin adds {}", err2 - err);
}

#[test]
fn switching_key_components_decrypt_to_gadget_multiples() {
    let s = setup(32, 8);
    let mut rng = prng(9);
    let target = SecretKey::generate(&s.params, &s.noise, &mut rng).unwrap();
    for gadget in [Gadget::rns(1), Gadget::rns(2)] {
        let swk = switch_key_gen(s.sk.ntt(), s.sk.id(), &target, gadget, 2, &s.params, &s.noise, &mut rng).unwrap();
        assert_eq!(swk.digits.len(), gadget.digit_count(&s.params, 2));
        let basis = Basis::qp(2);
        let s_to = target.ntt_at(&s.params, basis);
        for (digit, (b, a)) in gadget.digits(&s.params, 2).iter().zip(&swk.digits) {
            let mut phase = a.clone();
            phase.mul_assign(&s_to, &s.params).unwrap();
            phase.add_assign(b, &s.params).unwrap();
            phase.to_coeff(&s.params);
            // on each row: P * [row in digit] * s_from + e
            let mut s_from = Poly::from_signed(&s.params, s.sk.coeffs(), basis);
            let factors: Vec<u64> = (0..s.params.row_count(basis))
                .map(|r| {
                    if r < digit.first || r >= digit.end {
                        return 0;
                    }
                    let q = s.params.q(r);
                    s.params
                        .special_moduli()
                        .iter()
                        .fold(1, |acc, p| q.mul(acc, q.reduce(p.value())))
                })
                .collect();
            s_from.mul_scalar_rows(&factors, &s.params);
            phase.sub_assign(&s_from, &s.params).unwrap();
            for (r, row) in phase.rows().iter().enumerate() {
                let q = s.params.modulus(s.params.modulus_index(basis, r));
                assert!(row.iter().all(|&x| q.center(x).abs() as f64 <= 6.0 * SIGMA), "row {r}");
            }
        }
    }
}

fn keyswitch_error(s: &Setup, swk: &SwitchingKey, from: &SecretKey, to: &SecretKey, d: &[i64]) -> f64 {
    let dp = plain(&s.params, d, 2);
    let (k0, k1) = switch_key(&dp, swk, &s.params).unwrap();
    let ct = Ciphertext::new(vec![k0, k1], 1.0, Domain::Coeffs).unwrap();
    let dec = decrypt(to, &ct, &s.params).unwrap();
    let expected = negacyclic(d, from.coeffs());
    error(&dec, &expected, &s.params)
}

#[test]
fn keyswitch_noise_is_independent_of_operand_norm() {
    let s = setup(64, 10);
    let mut rng = prng(11);
    let target = SecretKey::generate(&s.params, &s.noise, &mut rng).unwrap();
    let swk = switch_key_gen(
        s.sk.ntt(),
        s.sk.id(),
        &target,
        Gadget::rns(1),
        2,
        &s.params,
        &s.noise,
        &mut rng,
    )
    .unwrap();
    let identity = switch_key_gen(
        s.sk.ntt(),
        s.sk.id(),
        &s.sk,
        Gadget::rns(1),
        2,
        &s.params,
        &s.noise,
        &mut rng,
    )
    .unwrap();

    assert!(keyswitch_error(&s, &swk, &s.sk, &target, &[0; 64]) <= 2.0);
    let (mut small, mut large) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let d = random_small(64, 1 << 10, &mut rng);
        let d_big: Vec<i64> = d.iter().map(|x| x << 20).collect();
        small = small.max(keyswitch_error(&s, &swk, &s.sk, &target, &d));
        large = large.max(keyswitch_error(&s, &swk, &s.sk, &target, &d_big));
        assert!(keyswitch_error(&s, &identity, &s.sk, &s.sk, &d) < 100.0);
    }
    assert!(
        large < 2.0 * small.max(1.0) && small < 100.0,
        "small {small} large {large}"
    );
}

#[test]
fn galois_automorphism_and_noise_invariance() {
    let s = setup(64, 12);
    let mut rng = prng(13);
    let g = 5;
    let key = galois_key_gen(&s.sk, g, Gadget::rns(2), 2, &s.params, &s.noise, &mut rng).unwrap();
    let m = random_small(64, 1 << 30, &mut rng);
    let ct = encrypt_sk(
        &s.sk,
        &plain(&s.params, &m, 2),
        1.0,
        Domain::Coeffs,
        &s.params,
        &s.noise,
        &mut rng,
    )
    .unwrap();
    assert_eq!(apply_galois(&ct, 1, &key, &s.params).unwrap(), ct);

    let measure = |ct: &Ciphertext| {
        let before = decrypt(&s.sk, ct, &s.params).unwrap();
        let expected: Vec<i128> = before
            .automorphism(g, &s.params)
            .unwrap()
            .to_centered_f64(&s.params)
            .unwrap()
            .iter()
            .map(|&x| x as i128)
            .collect();
        let out = apply_galois(ct, g, &key, &s.params).unwrap();
        error(&decrypt(&s.sk, &out, &s.params).unwrap(), &expected, &s.params)
    };
    let base = measure(&ct);
    // inflate the input noise by 2^10 using a noisier trivial ciphertext
    let e: Vec<i64> = sample::gaussian(64, SIGMA * 1024.0, &mut rng);
    let mut noisy = ct.clone();
    let mut ep = plain(&s.params, &e, 2);
    ep.to_ntt(&s.params);
    noisy.parts[0].add_assign(&ep, &s.params).unwrap();
    let inflated = measure(&noisy);
    assert!(inflated <= 2.0 * base.max(4.0) && base < 100.0, "{base} vs {inflated}");

    let inv = galois_inverse(g, 128);
    let key_inv = galois_key_gen(&s.sk, inv, Gadget::rns(2), 2, &s.params, &s.noise, &mut rng).unwrap();
    let back = apply_galois(
        &apply_galois(&ct, g, &key, &s.params).unwrap(),
        inv,
        &key_inv,
        &s.params,
    )
    .unwrap();
    let mi: Vec<i128> = m.iter().map(|&x| x as i128).collect();
    assert!(error(&decrypt(&s.sk, &back, &s.params).unwrap(), &mi, &s.params) < 200.0);

    let keys = GaloisKeys::generate(&s.sk, [3usize], Gadget::rns(1), 2, &s.params, &s.noise, &mut rng).unwrap();
    assert!(matches!(keys.get(5), Err(dbx::Error::MissingKey(_))));
}

struct RingPair {
    small: RingParams,
    large: RingParams,
    noise: NoiseParams,
    small_sk: SecretKey,
    large_sk: SecretKey,
}

fn ring_pair(n: usize, seed: u64) -> RingPair {
    let two_n = 4 * n as u64;
    let mut primes = ntt_primes_near(45, 2, two_n, &[]);
    primes.extend(ntt_primes_below(55, 1, two_n));
    let small = RingParams::new(n, &primes, 1).unwrap();
    let large = RingParams::new(2 * n, &primes, 1).unwrap();
    let noise = NoiseParams::new(SIGMA, n / 4).unwrap();
    let mut rng = prng(seed);
    let small_sk = SecretKey::generate(&small, &noise, &mut rng).unwrap();
    let large_sk = SecretKey::generate(&large, &noise, &mut rng).unwrap();
    RingPair {
        small,
        large,
        noise,
        small_sk,
        large_sk,
    }
}

#[test]
fn split_merge_round_trip() {
    let r = ring_pair(16, 14);
    let mut rng = prng(15);
    let merge_key = merge_key_gen(
        &r.small_sk,
        &r.large_sk,
        Gadget::rns(1),
        1,
        &r.large,
        &r.noise,
        &mut rng,
    )
    .unwrap();
    let split_key = split_key_gen(
        &r.large_sk,
        &r.small_sk,
        Gadget::rns(1),
        1,
        &r.large,
        &r.noise,
        &mut rng,
    )
    .unwrap();

    let m0 = random_small(16, 1 << 30, &mut rng);
    let m1 = random_small(16, 1 << 30, &mut rng);
    let enc = |m: &[i64], rng: &mut _| {
        encrypt_sk(
            &r.small_sk,
            &plain(&r.small, m, 1),
            1.0,
            Domain::Coeffs,
            &r.small,
            &r.noise,
            rng,
        )
        .unwrap()
    };
    let (c0, c1) = (enc(&m0, &mut rng), enc(&m1, &mut rng));
    let merged = ring_merge(&c0, &c1, &merge_key, &r.small, &r.large).unwrap();
    let mut interleaved = vec![0i128; 32];
    for j in 0..16 {
        interleaved[2 * j] = m0[j] as i128;
        interleaved[2 * j + 1] = m1[j] as i128;
    }
    assert!(
        error(
            &decrypt(&r.large_sk, &merged, &r.large).unwrap(),
            &interleaved,
            &r.large
        ) < 200.0
    );

    let (s0, s1) = ring_split(&merged, &split_key, &r.large, &r.small).unwrap();
    let as_i128 = |v: &[i64]| v.iter().map(|&x| x as i128).collect::<Vec<_>>();
    assert!(error(&decrypt(&r.small_sk, &s0, &r.small).unwrap(), &as_i128(&m0), &r.small) < 400.0);
    assert!(error(&decrypt(&r.small_sk, &s1, &r.small).unwrap(), &as_i128(&m1), &r.small) < 400.0);

    // constant message splits into (constant, 0)
    let mut constant = vec![0i64; 32];
    constant[0] = 1 << 35;
    let ct = encrypt_sk(
        &r.large_sk,
        &plain(&r.large, &constant, 1),
        1.0,
        Domain::Coeffs,
        &r.large,
        &r.noise,
        &mut rng,
    )
    .unwrap();
    let (e, o) = ring_split(&ct, &split_key, &r.large, &r.small).unwrap();
    let mut expect_even = vec![0i128; 16];
    expect_even[0] = 1 << 35;
    assert!(error(&decrypt(&r.small_sk, &e, &r.small).unwrap(), &expect_even, &r.small) < 400.0);
    assert!(error(&decrypt(&r.small_sk, &o, &r.small).unwrap(), &[0; 16], &r.small) < 400.0);

    // merging with a noiseless zero gives the even embedding
    let zero = Ciphertext::zero(&r.small, 1, 1.0, Domain::Coeffs, Form::Ntt);
    let even = ring_merge(&c0, &zero, &merge_key, &r.small, &r.large).unwrap();
    let mut expect = vec![0i128; 32];
    for j in 0..16 {
        expect[2 * j] = m0[j] as i128;
    }
    assert!(error(&decrypt(&r.large_sk, &even, &r.large).unwrap(), &expect, &r.large) < 200.0);
}

#[test]
fn merge_tree_interleaves_inputs() {
    let n = 16;
    let big = 64;
    let two_n = 2 * big as u64;
    let mut primes = ntt_primes_near(45, 1, two_n, &[]);
    primes.extend(ntt_primes_below(55, 1, two_n));
    let rings: Vec<Arc<RingParams>> = [16usize, 32, 64]
        .iter()
        .map(|&d| Arc::new(RingParams::new(d, &primes, 1).unwrap()))
        .collect();
    let noise = NoiseParams::new(SIGMA, 8).unwrap();
    let mut rng = prng(16);
    let secrets: Vec<SecretKey> = rings
        .iter()
        .map(|r| SecretKey::generate(r, &noise, &mut rng).unwrap())
        .collect();
    let tree = MergeTree::generate(rings.clone(), &secrets, Gadget::rns(1), 0, &noise, &mut rng).unwrap();
    let msgs: Vec<Vec<i64>> = (0..4).map(|_| random_small(n, 1 << 30, &mut rng)).collect();
    let cts: Vec<Ciphertext> = msgs
        .iter()
        .map(|m| {
            encrypt_sk(
                &secrets[0],
                &plain(&rings[0], m, 0),
                1.0,
                Domain::Coeffs,
                &rings[0],
                &noise,
                &mut rng,
            )
            .unwrap()
        })
        .collect();
    let merged = tree.merge_many(&cts).unwrap();
    let dec = decrypt(&secrets[2], &merged, &rings[2]).unwrap();
    let mut expected = vec![0i128; big];
    for (i, m) in msgs.iter().enumerate() {
        for (j, &c) in m.iter().enumerate() {
            expected[j * 4 + i] = c as i128;
        }
    }
    assert!(error(&dec, &expected, &rings[2]) < 1000.0);

    // padded: two inputs only, the rest are noiseless zeros
    let merged = tree.merge_many(&cts[..2]).unwrap();
    let dec = decrypt(&secrets[2], &merged, &rings[2]).unwrap();
    for j in 0..n {
        expected[j * 4 + 2] = 0;
        expected[j * 4 + 3] = 0;
    }
    assert!(error(&dec, &expected, &rings[2]) < 1000.0);
    assert!(tree.merge_many(&[]).is_err());
}
