use std::collections::BTreeMap;

use chensieve::arith::{gcd, mobius, phi, FactorTable};
use chensieve::models::{
    b_r, big_h_r, bump_g, h_xi, hb_upper_check, lambda_rr, lambda_rr_divisor_form, ModelParams, SquarefullMode,
};
use chensieve::numeric::EULER_GAMMA;
use chensieve::sieves::{
    beta_weights, combine, convolve_weights, cramer, cramer_interval, divisor_sum_identity_check,
    divisor_sum_identity_sides, factorable_split, fundlem_gap, integrate_checked, linear_f_big_f, linear_sieve_weights,
    main_sieves, presieve_eval, presieve_eval_ungated, DivisorWeight, MainCuts, Presieve, SieveSpec, WeightKind,
};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn squarefree_products(primes: &[u64]) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    for mask in 0u32..1 << primes.len() {
        let mut ps: Vec<u64> = (0..primes.len()).filter(|&i| mask >> i & 1 == 1).map(|i| primes[i]).collect();
        ps.sort_unstable_by(|a, b| b.cmp(a));
        out.push(ps);
    }
    out
}

#[test]
fn cramer_examples() {
    let t = FactorTable::new(1000).unwrap();
    assert!((1..100).all(|n| cramer(n, 2, &t).unwrap() == 1.0));
    assert!((cramer(7, 5, &t).unwrap() - 3.0).abs() < 1e-12);
    assert_eq!(cramer(6, 5, &t).unwrap(), 0.0);
    assert!((1..100).all(|n| cramer_interval(n, 7, 7, &t).unwrap() == 1.0));
    assert_eq!(cramer_interval(11, 5, 12, &t).unwrap(), 0.0);
}

#[test]
fn beta_membership_exhaustive() {
    let primes = [5u64, 7, 11, 13];
    let (lower, upper) = beta_weights(2.0, 5, 14, 5000.0).unwrap();
    for ps in squarefree_products(&primes) {
        let d: u64 = ps.iter().product();
        // p_1⋯p_m · p_m² < D for odd m (upper) / even m (lower)
        let ok = |parity: usize| {
            let mut prod = 1u64;
            ps.iter().enumerate().all(|(k, &p)| {
                prod *= p;
                (k + 1) % 2 != parity || prod * p * p < 5000
            })
        };
        let mu = if ps.len() % 2 == 0 { 1.0 } else { -1.0 };
        assert_eq!(upper.get(d), if ok(1) { mu } else { 0.0 }, "upper d = {d}");
        assert_eq!(lower.get(d), if ok(0) { mu } else { 0.0 }, "lower d = {d}");
    }
}

#[test]
fn beta_extremes() {
    let (lower, upper) = beta_weights(2.0, 5, 14, 1e30).unwrap();
    for ps in squarefree_products(&[5, 7, 11, 13]) {
        let d: u64 = ps.iter().product();
        let mu = if ps.len() % 2 == 0 { 1.0 } else { -1.0 };
        assert_eq!(lower.get(d), mu);
        assert_eq!(upper.get(d), mu);
    }
    let (_, upper) = beta_weights(2.0, 5, 14, 100.0).unwrap();
    assert_eq!(upper.entries.keys().copied().collect::<Vec<_>>(), vec![1]);
}

fn sandwich_holds(lower: &DivisorWeight, upper: &DivisorWeight, primes: &[u64], t: &FactorTable, n_max: u64) {
    for n in 1..=n_max {
        let ind = if primes.iter().all(|&p| n % p != 0) { 1.0 } else { 0.0 };
        let lo = lower.divisor_sum(n, t);
        let hi = upper.divisor_sum(n, t);
        assert!(lo <= ind + 1e-12 && ind <= hi + 1e-12, "n = {n}: {lo} {ind} {hi}");
    }
}

#[test]
fn beta_sieve_pointwise() {
    let t = FactorTable::new(20_000).unwrap();
    for (beta, level) in [(2.0, 1000.0), (2.0, 5000.0), (3.0, 20_000.0)] {
        let (lower, upper) = beta_weights(beta, 5, 30, level).unwrap();
        let primes: Vec<u64> = [5, 7, 11, 13, 17, 19, 23, 29].to_vec();
        sandwich_holds(&lower, &upper, &primes, &t, 20_000);
    }
}

#[test]
fn linear_sieve_chain_small() {
    let t = FactorTable::new(10_000).unwrap();
    let (lo, up) = linear_sieve_weights(5, 10, 100.0).unwrap();
    let lower = combine(&lo, WeightKind::LinearLower);
    let upper = combine(&up, WeightKind::LinearUpper);
    sandwich_holds(&lower, &upper, &[5, 7], &t, 10_000);
}

#[test]
fn linear_sieve_trivial_range() {
    let (lo, up) = linear_sieve_weights(5, 5, 100.0).unwrap();
    assert_eq!(lo.len(), 1);
    assert_eq!(lo[0].entries, BTreeMap::from([(1, 1.0)]));
    assert_eq!(up[0].entries, BTreeMap::from([(1, 1.0)]));
}

#[test]
fn linear_densities_bracket_sifted_density() {
    let (lo, up) = linear_sieve_weights(5, 50, 2500.0).unwrap();
    let upper = combine(&up, WeightKind::LinearUpper);
    let lower = combine(&lo, WeightKind::LinearLower);
    let (f2, big_f2) = linear_f_big_f(2.0).unwrap();
    // normalised density of the full sieve: ∏ p(p−2)/(p−1)²
    let sifted: f64 = [5u64, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]
        .iter()
        .map(|&p| (p * (p - 2)) as f64 / ((p - 1) * (p - 1)) as f64)
        .product();
    let (dl, du) = (lower.density(), upper.density());
    assert!(dl <= sifted && sifted <= du, "{dl} {sifted} {du}");
    assert!(du <= big_f2 * 1.15 && dl >= f2 - 0.15, "{dl} {du}");
}

#[test]
fn factorable_split_round_trip() {
    let (lo, up) = linear_sieve_weights(5, 50, 2500.0).unwrap();
    for piece in lo.iter().chain(&up) {
        let (g1, g2) = factorable_split(piece, 50.0, 50.0).unwrap();
        assert!(g1.entries.keys().all(|&d| d <= 50));
        assert!(g2.entries.keys().all(|&d| d <= 50));
        assert_eq!(convolve_weights(&g1.entries, &g2.entries), piece.entries);
    }
    let triv = DivisorWeight::trivial(WeightKind::LinearUpper, 100.0, 5, 10);
    let (g1, g2) = factorable_split(&triv, 10.0, 10.0).unwrap();
    assert_eq!(g1.entries, BTreeMap::from([(1, 1.0)]));
    assert_eq!(g2.entries, BTreeMap::from([(1, 1.0)]));
}

#[test]
fn divisor_identity_random() {
    let primes = [5u64, 7, 11];
    let divisors: Vec<u64> = (1..=385).filter(|d| 385 % d == 0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let mut lambda = BTreeMap::new();
        for &d in &divisors {
            if rng.gen_bool(0.7) {
                lambda.insert(d, rng.gen_range(-2.0..2.0));
            }
        }
        let g: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..0.9)).collect();
        let e = divisors[rng.gen_range(0..divisors.len())];
        assert!(divisor_sum_identity_check(&lambda, &primes, &g, e).unwrap());
    }
    let lam = BTreeMap::from([(1u64, 1.0)]);
    let (l, r) = divisor_sum_identity_sides(&lam, &[], &[], 1).unwrap();
    assert!((l - 1.0).abs() < 1e-15 && (r - 1.0).abs() < 1e-15);
    let (l, r) = divisor_sum_identity_sides(&lam, &[5], &[0.2], 1).unwrap();
    assert!((l - r).abs() < 1e-15);
}

#[test]
fn linear_functions_properties() {
    let mut prev = linear_f_big_f(1.0).unwrap();
    let mut s = 1.0f64;
    while s < 7.0 {
        s += 0.01;
        let cur = linear_f_big_f(s.min(7.0)).unwrap();
        assert!(cur.1 >= 1.0 && cur.0 <= 1.0 && cur.0 >= 0.0);
        assert!(cur.1 <= prev.1 + 1e-12 && cur.0 >= prev.0 - 1e-12);
        prev = cur;
    }
    let (_, f3) = linear_f_big_f(3.0).unwrap();
    assert!((f3 - 2.0 * EULER_GAMMA.exp() / 3.0).abs() < 1e-12);
}

#[test]
fn f5_dual_integrator() {
    let two_eg = 2.0 * EULER_GAMMA.exp();
    let small_f = |v: f64| two_eg * (v - 1.0).ln() / v;
    // uF(u) = 3F(3) + ∫_3^u f(v−1) dv on [3, 4]
    let big_f = |u: f64| {
        if u <= 3.0 {
            two_eg / u
        } else {
            (two_eg + integrate_checked(|v| small_f(v - 1.0), 3.0, u).unwrap()) / u
        }
    };
    let f5 = (4.0 * small_f(4.0) + integrate_checked(|x| big_f(x - 1.0), 4.0, 5.0).unwrap()) / 5.0;
    let (tab, _) = linear_f_big_f(5.0).unwrap();
    assert!((tab - f5).abs() < 1e-6, "tabulated {tab} vs {f5}");
}

#[test]
fn presieve_examples() {
    let t = FactorTable::new(1000).unwrap();
    let ps = Presieve::new(&SieveSpec::desk()).unwrap();
    for n in [2u64, 3, 4, 6, 9, 12] {
        assert_eq!(presieve_eval(n, &ps.lower, &t), 0.0);
        assert_eq!(presieve_eval(n, &ps.upper, &t), 0.0);
    }
    let expect = 2.0 * 1.5 * 1.25 * (7.0 / 6.0);
    assert!((presieve_eval_ungated(1, &ps.upper, &t) - expect).abs() < 1e-12);
    assert!((ps.normalization() - expect).abs() < 1e-12);
}

#[test]
fn fundlem_gap_nonnegative_and_tail_only() {
    let t = FactorTable::new(100_000).unwrap();
    let spec = SieveSpec::desk();
    for n in 1..2000u64 {
        assert!(fundlem_gap(n, &spec, &t).unwrap() >= 0.0);
    }
    // 35 shares a factor with every non-empty 𝒫_r, so only the empty-range tail survives
    let a = fundlem_gap(35, &spec, &t).unwrap();
    let b = fundlem_gap(35 * 35, &spec, &t).unwrap();
    assert!(a > 0.0);
    assert!((b / a - 81.0 / 16.0).abs() < 1e-12);
}

#[test]
fn weight_save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (_, up) = beta_weights(2.0, 5, 30, 5000.0).unwrap();
    let (c, j) = (dir.path().join("w.csv"), dir.path().join("w.json"));
    up.save(&c, &j).unwrap();
    let back = DivisorWeight::load(&c, &j).unwrap();
    assert_eq!(back, up);
    let text = std::fs::read_to_string(&c).unwrap();
    assert!(text.starts_with("d,lambda\n") && !text.contains('\r'));
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&j).unwrap()).unwrap();
    assert_eq!(side["kind"], "beta_upper");
}

#[test]
fn desk_main_sieves() {
    let spec = SieveSpec::desk();
    assert!(spec.check_hierarchy().is_err());
    let (m, d) = main_sieves(&spec, &MainCuts::desk()).unwrap();
    for v in [d.omega_m, d.big_omega_m, d.big_omega_m_prime, d.interval_lower, d.interval_upper] {
        assert!(v.is_finite());
    }
    assert!(d.interval_lower <= d.interval_upper);
    assert!((d.interval_upper - 1.0).abs() <= 0.2, "{d:?}");
    assert!(d.omega_m <= d.big_omega_m_prime);
    assert_eq!(m.big_omega_m.kind, WeightKind::MainBigOmega);
}

fn b_r_direct(n: i64, big_n: u64, r: u64) -> f64 {
    let ln_r = (r as f64).ln();
    let mut s = 0.0;
    for q in 1..=r * r {
        let g = bump_g((q as f64).ln() / ln_r);
        for b in 1..=q {
            if gcd(b, q) == 1 {
                s += g * (2.0 * std::f64::consts::PI * b as f64 * n as f64 / q as f64).cos();
            }
        }
    }
    (r as f64).powi(4) / (2.0 * big_n as f64) * s
}

#[test]
fn b_r_examples() {
    let (n, r) = (1_000_000u64, 3u64);
    let lim = (n as f64 / 81.0) as i64;
    assert_eq!(b_r(lim + 1, n, r).unwrap(), 0.0);
    let ln_r = 3f64.ln();
    let at0: f64 = (1..=9u64).map(|q| phi(q) as f64 * bump_g((q as f64).ln() / ln_r)).sum::<f64>() * 81.0 / 2e6;
    assert!((b_r(0, n, r).unwrap() - at0).abs() < 1e-15);
    assert!((b_r(5, n, r).unwrap() - b_r_direct(5, n, r)).abs() < 1e-12);
    for k in [1i64, 7, 100, 12_000] {
        assert_eq!(b_r(k, n, r).unwrap(), b_r(-k, n, r).unwrap());
    }
}

#[test]
fn lambda_examples() {
    assert_eq!(lambda_rr(5, 3, 10).unwrap(), 0.0);
    let ln_r = 20f64.ln();
    let direct: f64 =
        (1..=400u64).map(|q| (mobius(q) as f64).powi(2) / phi(q) as f64 * bump_g((q as f64).ln() / ln_r)).sum();
    assert!((lambda_rr(1, 20, 1).unwrap() - direct).abs() < 1e-12);
}

#[test]
fn h_bounds_and_modes() {
    let t = FactorTable::new(10_000).unwrap();
    let params = ModelParams::new(20).unwrap();
    let ln_r = 20f64.ln();
    for n in 1..=2000u64 {
        let h = big_h_r(n, &params, &t).unwrap().value;
        assert!(h >= 0.0);
        assert!(h <= t.tau(n) as f64 * ln_r * 2.0 / 9.0 * (1.0 + 1e-9));
    }
    for p in [101u64, 997] {
        let h = big_h_r(p, &params, &t).unwrap().value;
        assert!((h - 2.0 * ln_r * 2.0 / 9.0).abs() < 1e-9);
    }
    assert_eq!(h_xi(12, 0.0, 20.0, &t).unwrap(), 0.0);
    let rad = big_h_r(12, &params, &t).unwrap();
    assert!(rad.used_radical && rad.value > 0.0);
    let zero = ModelParams { squarefull: SquarefullMode::Zero, ..params.clone() };
    assert_eq!(big_h_r(12, &zero, &t).unwrap().value, 0.0);
    assert!(hb_upper_check(10, 5, &params, &t).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dual_lambda_forms(n in 1u64..10_000, r in 1u64..=20, big_r in 2u64..=30) {
        let a = lambda_rr(n as i64, big_r, r).unwrap();
        let b = lambda_rr_divisor_form(n, big_r, r).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-12));
    }

    #[test]
    fn b_r_even(k in 0i64..20_000) {
        prop_assert_eq!(b_r(k, 1_000_000, 3).unwrap(), b_r(-k, 1_000_000, 3).unwrap());
    }

    #[test]
    fn bump_in_unit_interval(x in -3.0f64..3.0) {
        let g = bump_g(x);
        prop_assert!((0.0..=1.0).contains(&g));
    }
}
