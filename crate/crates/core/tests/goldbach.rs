use std::sync::atomic::AtomicBool;

use chensieve::arith::{gcd, primes_in, FactorTable};
use chensieve::characters::real_primitive_characters_mod;
use chensieve::goldbach::{
    correlation_upper_check, exceptional_additive_check, exceptional_scan, exceptional_scan_with,
    presieve_additive_check, presieve_additive_sum, rep_count, rep_count_unordered, rep_window, residue_sums,
    singular_series, write_scan_detail, Checkpoint, ExceptionalCase, HSlot, PresieveTables, ScanControl, ScanOutcome,
    SingularSeries,
};
use chensieve::models::ModelParams;
use chensieve::sieves::{Presieve, SieveSpec};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Product of local densities `(1 − k_p/p)(1 − 1/p)^{-4}`, `k_p = #{0, −2, m, m+2} mod p`.
fn local_density_product(m: u64, cutoff: u64) -> f64 {
    primes_in(2, cutoff + 1)
        .into_iter()
        .map(|p| {
            let mut res = vec![0, (p - 2 % p) % p, m % p, (m + 2) % p];
            res.sort_unstable();
            res.dedup();
            let pf = p as f64;
            (1.0 - res.len() as f64 / pf) * (1.0 - 1.0 / pf).powi(-4)
        })
        .product()
}

fn brute_odd_chen(p: u64, t: &FactorTable) -> bool {
    p > 2 && t.is_prime(p) && t.big_omega(p + 2) <= 2
}

#[test]
fn singular_series_against_local_densities() {
    let t = FactorTable::new(200_000).unwrap();
    assert_eq!(singular_series(11, 100_000, &t).unwrap().value, 0.0);
    let ss = SingularSeries::new(100_000).unwrap();
    let c0 = ss.generic_product();
    let v10 = ss.eval(10, &t).unwrap().value;
    assert!((v10 - 13.5 * c0 * 2.0 * (4.0 / 3.0)).abs() < 1e-12 * v10);
    let v22 = ss.eval(22, &t).unwrap().value;
    assert!((v22 - 13.5 * c0 * (1.0 + 1.0 / 7.0) * (1.0 + 1.0 / 9.0)).abs() < 1e-12 * v22);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..40 {
        let m = 6 * rng.gen_range(0..1500u64) + 4;
        let got = ss.eval(m, &t).unwrap().value;
        let want = local_density_product(m, 100_000);
        assert!((got - want).abs() < 1e-9 * want, "m = {m}: {got} vs {want}");
    }
}

#[test]
fn singular_series_invariants() {
    let t = FactorTable::new(10_000).unwrap();
    let ss = SingularSeries::new(1000).unwrap();
    for m in 1..5000u64 {
        let v = ss.eval(m, &t).unwrap().value;
        assert_eq!(v == 0.0, m % 6 != 4, "m = {m}");
        assert!(v >= 0.0);
    }
    let a = SingularSeries::new(1000).unwrap().eval(10, &t).unwrap().tail_bound;
    let b = SingularSeries::new(10_000).unwrap().eval(10, &t).unwrap().tail_bound;
    assert!(b < a);
    // 28·32 brings in 7, and 30 brings in 5
    let v28 = ss.eval(28, &t).unwrap().value;
    let base = 13.5 * ss.generic_product() * (1.0 + 1.0 / 3.0);
    assert!((v28 / base - (1.0 + 2.0 / 1.0)).abs() < 1e-12);
}

#[test]
fn rep_examples() {
    let t = FactorTable::new(1000).unwrap();
    assert_eq!(rep_count(10, &t).unwrap(), 3);
    assert_eq!(rep_count_unordered(10, &t).unwrap(), 2);
    assert_eq!(rep_count(16, &t).unwrap(), 4);
    assert_eq!(rep_count_unordered(16, &t).unwrap(), 2);
    for m in (5..500).step_by(2) {
        assert_eq!(rep_count(m, &t).unwrap(), 0);
    }
}

#[test]
fn rep_window_matches_direct_count() {
    let n = 10_000u64;
    let t = FactorTable::new(2 * n + 10).unwrap();
    let w = rep_window(n, &t).unwrap();
    for (i, &c) in w.iter().enumerate() {
        let m = n + 1 + i as u64;
        assert_eq!(c, rep_count(m, &t).unwrap(), "m = {m}");
    }
}

#[test]
fn small_scan_brute_force() {
    let t = FactorTable::new(200).unwrap();
    let rep = exceptional_scan(100, &t).unwrap();
    let brute: Vec<u64> = (4..=100u64)
        .filter(|m| m % 6 == 4)
        .filter(|&m| !(3..m).any(|p| brute_odd_chen(p, &t) && m > p && brute_odd_chen(m - p, &t)))
        .collect();
    assert_eq!(rep.exceptions, brute);
    assert!(rep.exceptions.iter().all(|&m| m <= 40));
    assert!(rep.reverified);
}

#[test]
fn checkpoint_resume_matches_full_run() {
    let n = 50_000u64;
    let t = FactorTable::new(n + 10).unwrap();
    let full = exceptional_scan(n, &t).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.ckpt");
    let stop = AtomicBool::new(false);
    let first = ScanControl { checkpoint: Some(&path), chunk: 6000, stop: Some(&stop), max_chunks: Some(3) };
    match exceptional_scan_with(n, &t, &first).unwrap() {
        ScanOutcome::Interrupted(c) => {
            assert_eq!(Checkpoint::load(&path).unwrap(), c);
            assert!(c.last_m > 0 && c.last_m < n);
        }
        ScanOutcome::Complete(_) => panic!("expected an interrupted scan"),
    }
    let second = ScanControl { checkpoint: Some(&path), chunk: 6000, stop: None, max_chunks: None };
    match exceptional_scan_with(n, &t, &second).unwrap() {
        ScanOutcome::Complete(r) => assert_eq!(r, full),
        ScanOutcome::Interrupted(_) => panic!("resume did not finish"),
    }
    let other = ScanControl { checkpoint: Some(&path), ..Default::default() };
    assert!(exceptional_scan_with(n + 6, &FactorTable::new(n + 20).unwrap(), &other).is_err());
}

#[test]
fn scan_detail_csv() {
    let t = FactorTable::new(2000).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("detail.csv");
    write_scan_detail(&path, 1000, &t, 1000).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,rep_count,singular_series,ratio"));
    let row: Vec<&str> = lines.nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "10");
    assert_eq!(row[1], "3");
}

fn desk_tables(len: u64, t: &FactorTable) -> PresieveTables {
    PresieveTables::new(&Presieve::new(&SieveSpec::desk()).unwrap(), len, t).unwrap()
}

#[test]
fn presieve_sum_structure() {
    let t = FactorTable::new(20_100).unwrap();
    let tabs = desk_tables(20_010, &t);
    for m in [1001u64, 1003, 2000, 9998] {
        assert_ne!(m % 6, 4);
        assert_eq!(presieve_additive_sum(m, m, [false; 4], &tabs).unwrap(), 0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..20 {
        let m = 6 * rng.gen_range(10..1660u64) + 4;
        let lo = presieve_additive_sum(m, m, [false; 4], &tabs).unwrap();
        let hi = presieve_additive_sum(m, m, [true; 4], &tabs).unwrap();
        assert!(hi >= lo - 1e-9);
        for kinds in [[true, false, false, true], [false, true, true, false], [true, true, false, false]] {
            let a = presieve_additive_sum(m, m, kinds, &tabs).unwrap();
            let b = presieve_additive_sum(m, m, [kinds[2], kinds[3], kinds[0], kinds[1]], &tabs).unwrap();
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }
}

#[test]
fn presieve_check_reports_ratio() {
    let t = FactorTable::new(20_100).unwrap();
    let tabs = desk_tables(20_010, &t);
    let ss = SingularSeries::new(1000).unwrap();
    let c = presieve_additive_check(10_000, 5000, [false; 4], &tabs, &ss, &t).unwrap();
    assert!(c.ratio.unwrap() > 0.0);
    let off = presieve_additive_check(10_001, 5000, [false; 4], &tabs, &ss, &t).unwrap();
    assert_eq!(off.ratio, None);
}

#[test]
fn residue_sum_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for r in 3..=120u64 {
        for chi in real_primitive_characters_mod(r).unwrap() {
            for _ in 0..5 {
                let m = 6 * rng.gen_range(0..100_000u64) + 4;
                let s = residue_sums(m, &chi).unwrap();
                let [s1, s2, s3, s4, s5, s6] = s.s;
                assert!((4.0 * s.a1_total - (s1 - 2.0 * s2 + s3)).abs() < 1e-9, "r={r} m={m}");
                assert!((8.0 * s.a2_total - (s1 - s3 - s4 + s5 - s6 + s.s7)).abs() < 1e-9, "r={r} m={m}");
            }
        }
    }
    let chi5 = real_primitive_characters_mod(5).unwrap().remove(0);
    let s = residue_sums(4, &chi5).unwrap();
    assert_eq!(s.s[2] / s.s[0], 1.0);
}

#[test]
fn exceptional_sum_counts_filtered_terms() {
    let t = FactorTable::new(20_100).unwrap();
    let tabs = desk_tables(20_010, &t);
    let ss = SingularSeries::new(1000).unwrap();
    let chi = real_primitive_characters_mod(11).unwrap().remove(0);
    let m = 10_000u64;
    let c = exceptional_additive_check(m, m - 1, &chi, ExceptionalCase::A1, [false; 4], &tabs, &ss, &t).unwrap();
    let direct: f64 = (1..m)
        .filter(|&n| {
            chi.real_value(n % 11) == -1
                && chi.real_value((m - n) % 11) == -1
                && gcd(n + 2, 11) == 1
                && gcd(m - n + 2, 11) == 1
        })
        .map(|n| {
            let f = tabs.get(false);
            f[n as usize] * f[(n + 2) as usize] * f[(m - n) as usize] * f[(m - n + 2) as usize]
        })
        .sum();
    assert!((c.lhs - direct).abs() < 1e-9 * (1.0 + direct));
    assert!(c.sigma1.unwrap().abs() <= 1.0);
}

#[test]
fn correlation_sweep_bounded() {
    let n_big = 100_000u64;
    let t = FactorTable::new(2 * n_big).unwrap();
    let tabs = desk_tables(2 * n_big - 10, &t);
    let ss = SingularSeries::new(1000).unwrap();
    let params = ModelParams::new(20).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let mut ratios: Vec<f64> = (0..30)
        .map(|_| {
            let m = 6 * rng.gen_range(125_000 / 6..175_000 / 6u64) + 4;
            correlation_upper_check(m, n_big, &params, [false; 3], HSlot::N, &tabs, &ss, &t).unwrap().ratio
        })
        .collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!(ratios[29] <= 100.0 * ratios[15]);
    let empty = correlation_upper_check(10, 1000, &params, [false; 3], HSlot::N, &tabs, &ss, &t).unwrap();
    assert_eq!(empty.lhs, 0.0);
    let m = 150_004;
    let a = correlation_upper_check(m, n_big, &params, [false; 3], HSlot::N, &tabs, &ss, &t).unwrap();
    let b = correlation_upper_check(m, n_big, &params, [false; 3], HSlot::NPlus2, &tabs, &ss, &t).unwrap();
    assert!(a.ratio.is_finite() && b.ratio.is_finite() && a.lhs != b.lhs);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unordered_is_half_ordered(m in 4u64..5000) {
        let t = FactorTable::new(5010).unwrap();
        let o = rep_count(m, &t).unwrap();
        let u = rep_count_unordered(m, &t).unwrap();
        prop_assert!(u * 2 >= o && u * 2 <= o + 1);
    }

    #[test]
    fn product_beyond_cutoff(k in 1u64..3000) {
        let t = FactorTable::new(20_000).unwrap();
        let ss = SingularSeries::new(1000).unwrap();
        let m = 6 * k + 4;
        let v = ss.eval(m, &t).unwrap().value;
        prop_assert!((v - local_density_product(m, 1000) * tail_free_correction(m, &t)).abs() < 1e-9 * v);
    }
}

/// Local factors of primes above the product cutoff that divide `m(m+2)(m+4)`.
fn tail_free_correction(m: u64, t: &FactorTable) -> f64 {
    let mut c = 1.0;
    let mut seen = Vec::new();
    for x in [m, m + 4] {
        for p in t.prime_divisors(x).unwrap() {
            if p > 1000 && !seen.contains(&p) {
                seen.push(p);
                c *= 1.0 + 1.0 / (p as f64 - 4.0);
            }
        }
    }
    for p in t.prime_divisors(m + 2).unwrap() {
        if p > 1000 {
            c *= 1.0 + 2.0 / (p as f64 - 4.0);
        }
    }
    c
}
