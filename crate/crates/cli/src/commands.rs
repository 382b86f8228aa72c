use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;

use chensieve::arith::gcd;
use chensieve::characters::{
    bv_discrepancy, exceptional_zero_search, gallagher_discrepancy, gallagher_discrepancy_exact,
    real_primitive_characters_mod, BvKind, GallagherKind,
};
use chensieve::chen::{chen_constant, minorant_audit, write_audit_csv, ChenSieve};
use chensieve::fourier::{br_transform_check, fourier_norm, major_arcs, restricted_norm, Side, Window};
use chensieve::goldbach::{
    chen_indicator, exceptional_additive_check, exceptional_scan_with, presieve_additive_check, rep_count,
    rep_count_unordered, write_scan_detail, ExceptionalCase, PresieveTables, ScanControl, ScanOutcome, SingularSeries,
    DEFAULT_CUTOFF,
};
use chensieve::models::{hb_upper_check, ModelParams};
use chensieve::sieves::{fundlem_gap, CramerModel, Presieve, SieveSpec};
use chensieve::{Error, FactorTable};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::Flags;

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Format(_) | Error::Quadrature(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CmdResult = Result<Outcome, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Interrupted,
}

pub struct Outcome {
    pub report: Value,
    pub status: Status,
}

fn outcome(report: Value, pass: bool) -> CmdResult {
    Ok(Outcome { report, status: if pass { Status::Pass } else { Status::Fail } })
}

fn out_file(f: &Flags, name: &str) -> Result<Option<PathBuf>, CliError> {
    match &f.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Ok(Some(dir.join(name)))
        }
        None => Ok(None),
    }
}

pub fn scan(f: &Flags, stop: &AtomicBool) -> CmdResult {
    let n = f.n.unwrap_or(1_000_000);
    let cutoff = f.cutoff.unwrap_or(DEFAULT_CUTOFF);
    let t = FactorTable::new(n + 10)?;
    let ckpt = f
        .checkpoint
        .clone()
        .unwrap_or_else(|| f.out.clone().unwrap_or_else(|| PathBuf::from(".")).join("scan.checkpoint.json"));
    if let Some(dir) = ckpt.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let ctl = ScanControl { checkpoint: Some(&ckpt), stop: Some(stop), max_chunks: f.stop_after, ..Default::default() };
    match exceptional_scan_with(n, &t, &ctl)? {
        ScanOutcome::Interrupted(c) => {
            eprintln!("scan interrupted at m = {}; checkpoint kept at {}", c.last_m, ckpt.display());
            Ok(Outcome {
                report: serde_json::to_value(&c).map_err(|e| CliError::Runtime(e.to_string()))?,
                status: Status::Interrupted,
            })
        }
        ScanOutcome::Complete(rep) => {
            let _ = fs::remove_file(&ckpt);
            if let Some(p) = out_file(f, "scan_detail.csv")? {
                write_scan_detail(&p, n, &t, cutoff)?;
            }
            let pass = rep.reverified && rep.exceptions.iter().all(|&m| m <= 1000);
            outcome(serde_json::to_value(&rep).map_err(|e| CliError::Runtime(e.to_string()))?, pass)
        }
    }
}

pub fn sieve_audit(f: &Flags) -> CmdResult {
    let n = f.n.unwrap_or(100_000);
    let beta = f.beta.unwrap_or(2.0);
    let delta1 = f.delta1.unwrap_or(0.05);
    let t = FactorTable::new(n + 10)?;
    let mut pass = true;

    let mut sandwich = Vec::new();
    let mut betas = vec![beta];
    if beta != 200.0 {
        betas.push(200.0);
    }
    for b in betas {
        let ps = Presieve::new(&SieveSpec::desk().with_beta(b))?;
        let r = CramerModel::new(ps.sift_bound().max(4));
        let bad = (1..=n)
            .into_par_iter()
            .filter(|&k| {
                let (lo, mid, hi) = (ps.omega(k, &t), r.eval(k, &t), ps.big_omega(k, &t));
                lo > mid + 1e-9 || mid > hi + 1e-9
            })
            .count();
        pass &= bad == 0;
        sandwich.push(json!({ "beta": b, "violations": bad }));
    }

    let spec = SieveSpec::desk().with_beta(beta);
    let ps = Presieve::new(&spec)?;
    let r = CramerModel::new(ps.sift_bound().max(4));
    let gaps = (1..=n)
        .into_par_iter()
        .map(|k| -> Result<(usize, f64), Error> {
            let gap = fundlem_gap(k, &spec, &t)?;
            let rv = r.eval(k, &t);
            let mut bad = 0;
            let mut worst = 0.0f64;
            for v in [ps.omega(k, &t), ps.big_omega(k, &t)] {
                let d = (v - rv).abs();
                if d > gap * (1.0 + 1e-12) + 1e-12 {
                    bad += 1;
                }
                if gap > 0.0 {
                    worst = worst.max(d / gap);
                }
            }
            Ok((bad, worst))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let gap_bad: usize = gaps.iter().map(|g| g.0).sum();
    let gap_worst = gaps.iter().map(|g| g.1).fold(0.0, f64::max);
    pass &= gap_bad == 0;

    let s = ChenSieve::audit_setup(n, delta1)?;
    let rows = minorant_audit(&s, &t)?;
    if let Some(p) = out_file(f, "minorant_audit.csv")? {
        write_audit_csv(&rows, &p)?;
    }
    let failed: Vec<_> = rows.iter().filter(|r| !r.pass).collect();
    pass &= failed.is_empty();

    let report = json!({
        "N": n,
        "beta": beta,
        "sandwich": sandwich,
        "fundlem": { "violations": gap_bad, "max_ratio": gap_worst },
        "minorant": {
            "delta1": delta1,
            "primes": rows.len(),
            "violations": failed.len(),
            "first_violation": failed.first().map(|r| r.n),
        },
        "pass": pass,
    });
    outcome(report, pass)
}

pub fn singular_series(f: &Flags) -> CmdResult {
    let m = f.m.unwrap_or(10);
    let cutoff = f.cutoff.unwrap_or(DEFAULT_CUTOFF);
    let t = FactorTable::new(m + 10)?;
    let v = SingularSeries::new(cutoff)?.eval(m, &t)?;
    let report = json!({
        "m": m,
        "value": v.value,
        "cutoff": cutoff,
        "tail_bound": v.tail_bound,
        "rep_count": rep_count(m, &t)?,
        "rep_count_unordered": rep_count_unordered(m, &t)?,
    });
    outcome(report, true)
}

pub fn fourier(f: &Flags) -> CmdResult {
    let n = f.n.unwrap_or(1_000_000);
    let big_r = f.big_r.unwrap_or(3);
    let os = f.oversample.unwrap_or(8);
    let t = FactorTable::new(n + 10)?;
    let chen = chen_indicator(n, &t)?;
    let w = Window::from_fn(n, |k| if chen[k as usize] { (k as f64).ln() } else { 0.0 });
    let arcs = major_arcs(big_r, n)?;
    let full = fourier_norm(&w, os)?;
    let major = restricted_norm(&w, &arcs, Side::Major, os)?;
    let minor = restricted_norm(&w, &arcs, Side::Minor, os)?;
    let kernel = br_transform_check(n, big_r, 100)?;
    let pass = kernel.max_major_deviation <= 10.0 / big_r as f64 && kernel.max_minor_value <= 10.0;
    let report = json!({
        "N": n,
        "R": big_r,
        "oversample": os,
        "chen_window": { "l1": w.l1(), "norm": full, "major": major, "minor": minor },
        "kernel": kernel,
        "pass": pass,
    });
    outcome(report, pass)
}

pub fn gallagher(f: &Flags) -> CmdResult {
    let n = f.n.unwrap_or(100_000);
    let big_r = f.big_r.unwrap_or(10);
    let t = FactorTable::new(n + 10)?;
    let lambda = gallagher_discrepancy(GallagherKind::Lambda, n, big_r, None, &t)?;
    let primes = gallagher_discrepancy(GallagherKind::PrimeIndicator, n, big_r, None, &t)?;
    let mut pass = true;
    let exact = if n <= 20_000 {
        let e = gallagher_discrepancy_exact(GallagherKind::Lambda, n, big_r, None, &t)?;
        pass = (e - lambda.value).abs() <= lambda.defect + 1e-9;
        Some(e)
    } else {
        None
    };
    let report =
        json!({ "N": n, "R": big_r, "lambda": lambda, "prime_indicator": primes, "lambda_exact": exact, "pass": pass });
    outcome(report, pass)
}

pub fn bv(f: &Flags) -> CmdResult {
    let n = f.n.unwrap_or(100_000);
    let q = f.q.unwrap_or((n as f64).sqrt() as u64);
    let p = f.p.unwrap_or(1);
    let delta1 = f.delta1.unwrap_or(0.05);
    let t = FactorTable::new(n + 10)?;
    let lambda = bv_discrepancy(BvKind::Lambda, n, q, p, &t)?;
    let e3 = bv_discrepancy(BvKind::E3 { delta1 }, n, q, p, &t)?;
    let report = json!({ "N": n, "Q": q, "P": p, "delta1": delta1, "lambda": lambda, "e3": e3 });
    outcome(report, true)
}

pub fn chen_constant_cmd(f: &Flags) -> CmdResult {
    let delta1 = f.delta1.unwrap_or(0.001);
    let c = chen_constant(delta1)?;
    let pass = c.value > 0.0;
    let report = json!({ "delta1": delta1, "constant": c, "pass": pass });
    outcome(report, pass)
}

pub fn additive_check(f: &Flags) -> CmdResult {
    use rand::{Rng, SeedableRng};

    let n = f.n.unwrap_or(100_000);
    let cutoff = f.cutoff.unwrap_or(DEFAULT_CUTOFF);
    let seed = f.seed.unwrap_or(DEFAULT_SEED);
    let r_max = f.p.unwrap_or(30);
    if n < 64 {
        return Err(CliError::Usage("additive-check needs N >= 64".into()));
    }
    let len = 7 * n / 4 + 4;
    let t = FactorTable::new(len + 10)?;
    let ps = Presieve::new(&SieveSpec::desk())?;
    let tabs = PresieveTables::new(&ps, len, &t)?;
    let ss = SingularSeries::new(cutoff)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = ((5 * n / 4).div_ceil(6), (7 * n / 4 - 4) / 6);
    let ms: Vec<u64> = (0..50).map(|_| 6 * rng.gen_range(lo..=hi) + 4).collect();

    let mut rows = Vec::new();
    let mut inside = [0usize; 2];
    for &m in &ms {
        let mut pair = [0.0; 2];
        for (i, kinds) in [[false; 4], [true; 4]].into_iter().enumerate() {
            let c = presieve_additive_check(m, n, kinds, &tabs, &ss, &t)?;
            pair[i] = c.ratio.unwrap_or(f64::NAN);
            if (0.9..=1.1).contains(&pair[i]) {
                inside[i] += 1;
            }
        }
        rows.push((m, pair));
    }
    if let Some(p) = out_file(f, "additive_check.csv")? {
        let mut text = String::from("m,ratio_lower,ratio_upper\n");
        for (m, [a, b]) in &rows {
            text.push_str(&format!("{m},{a:?},{b:?}\n"));
        }
        fs::write(p, text)?;
    }
    let plain_pass = inside.iter().all(|&k| k * 10 >= 9 * ms.len());

    let m0 = ms[0];
    let mut exceptional = Vec::new();
    let mut sigma_ok = true;
    for r in 3..=r_max {
        for chi in real_primitive_characters_mod(r)? {
            for case in [ExceptionalCase::A1, ExceptionalCase::A2] {
                let c = exceptional_additive_check(m0, n, &chi, case, [false; 4], &tabs, &ss, &t)?;
                let s1 = c.sigma1.unwrap_or(0.0);
                let s2 = c.sigma2.unwrap_or(0.0);
                sigma_ok &= s1.abs() <= 1.0 + 1e-12 && s2.abs() <= 1.0 + 1e-12;
                exceptional.push(json!({
                    "modulus": r,
                    "character": chi.id(),
                    "case": case,
                    "lhs": c.lhs,
                    "predicted": c.predicted,
                    "sigma1": c.sigma1,
                    "sigma2": c.sigma2,
                }));
            }
        }
    }
    let pass = plain_pass && sigma_ok;
    let report = json!({
        "N": n,
        "seed": seed,
        "samples": ms.len(),
        "in_band_lower": inside[0],
        "in_band_upper": inside[1],
        "exceptional_m": m0,
        "exceptional": exceptional,
        "pass": pass,
    });
    outcome(report, pass)
}

pub fn models_check(f: &Flags) -> CmdResult {
    let n = f.n.unwrap_or(10_000);
    let big_rs: Vec<u64> = f.big_r.map(|r| vec![r]).unwrap_or_else(|| vec![20, 50]);
    let t = FactorTable::new(n + 10)?;
    let mut sweeps = Vec::new();
    let mut pass = true;
    for &big_r in &big_rs {
        let params = ModelParams::new(big_r)?;
        for r in [1u64, 3, 5, 7, 15] {
            let checks = (1..=n)
                .into_par_iter()
                .filter(|&k| t.is_squarefree(k) && gcd(k, r) == 1)
                .map(|k| hb_upper_check(k, r, &params, &t).map(|c| (k, c)))
                .collect::<Result<Vec<_>, _>>()?;
            let bad = checks.iter().filter(|(_, c)| !c.holds).count();
            let (worst_n, worst) = checks
                .iter()
                .filter(|(_, c)| c.h > 0.0)
                .map(|(k, c)| (*k, c.lhs / c.h))
                .fold((0, 0.0f64), |acc, x| if x.1 > acc.1 { x } else { acc });
            pass &= bad == 0;
            sweeps.push(json!({
                "R": big_r,
                "r": r,
                "cases": checks.len(),
                "violations": bad,
                "max_ratio": worst,
                "max_ratio_at": worst_n,
            }));
        }
    }
    outcome(json!({ "N": n, "sweeps": sweeps, "pass": pass }), pass)
}

pub fn exceptional_zero(f: &Flags) -> CmdResult {
    let p = f.p.unwrap_or(100);
    let kappa = f.kappa.unwrap_or(0.5);
    let rep = exceptional_zero_search(p, kappa)?;
    let pass = rep.clear;
    outcome(serde_json::to_value(&rep).map_err(|e| CliError::Runtime(e.to_string()))?, pass)
}

/// Pretty JSON with a trailing newline, to stdout and to `<out>/<name>.json`.
pub fn emit(f: &Flags, name: &str, report: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    print!("{text}");
    if let Some(p) = out_file(f, &format!("{name}.json"))? {
        write_atomic(&p, text.as_bytes())?;
    }
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}
