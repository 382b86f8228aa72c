//! Chen primes, the weights `Λ₂` and `Λ_{E₃*}`, the assembled minorant and
//! the positivity constant.

use std::cmp::Ordering;
use std::fs::File;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::FactorTable;
use crate::error::{invalid, Error, Result};
use crate::numeric::{integrate, integrate_fixed, pairwise_sum};
use crate::sieves::{below, linear_f_big_f, CramerModel, MainCuts, MainSieves, Presieve, SieveSpec};

/// Parameters of the switching sieve.
#[derive(Clone, Debug, PartialEq)]
pub struct ChenParams {
    pub n: u64,
    pub delta1: f64,
    /// `N^{1/10}`.
    pub lo: f64,
    /// `N^{1/3 − δ₁}`.
    pub mid: f64,
    /// `N^{1/6}`.
    pub hi: f64,
    pub tol: f64,
    pub max_panels: usize,
}

impl ChenParams {
    pub fn new(n: u64, delta1: f64) -> Result<Self> {
        if !(delta1 > 0.0 && delta1 < 0.1) {
            return invalid(format!("δ1 = {delta1} must lie in (0, 1/10)"));
        }
        if n < 16 {
            return invalid("N must be at least 16");
        }
        let nf = n as f64;
        Ok(ChenParams {
            n,
            delta1,
            lo: nf.powf(0.1),
            mid: nf.powf(1.0 / 3.0 - delta1),
            hi: nf.powf(1.0 / 6.0),
            tol: 1e-12,
            max_panels: 4000,
        })
    }

    fn ln_n(&self) -> f64 {
        (self.n as f64).ln()
    }
}

/// Whether `p ≥ N^{1/10}`, decided in integers.
fn at_least_tenth_root(p: u64, n: u64) -> bool {
    match (p as u128).checked_pow(10) {
        Some(v) => v >= n as u128,
        None => true,
    }
}

pub fn is_chen_prime(p: u64, t: &FactorTable) -> Result<bool> {
    if p + 2 > t.limit() {
        return Err(Error::OutOfRange { value: p + 2, limit: t.limit() });
    }
    Ok(t.is_prime(p) && t.big_omega(p + 2) <= 2)
}

/// `Λ₂(n) = 1_{Ω(n) ≤ 2} r_{N^{1/10}}(n)`.
pub fn lambda2(n: u64, params: &ChenParams, t: &FactorTable) -> Result<f64> {
    if n == 0 || n > t.limit() {
        return Err(Error::OutOfRange { value: n, limit: t.limit() });
    }
    if t.big_omega(n) > 2 {
        return Ok(0.0);
    }
    Ok(CramerModel::new(below(params.lo)).eval(n, t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Region {
    B1,
    B2,
}

/// Range of `t₁` and the bounds of `t₂` for the region at `L = log n / log N`.
fn region_bounds(region: Region, delta1: f64, l: f64) -> (f64, f64) {
    let c = 1.0 / 3.0 - delta1;
    match region {
        Region::B1 => (0.1, c.min(1.0 - 2.0 * c).min(l - 0.1 - c)),
        Region::B2 => (c, (1.0 / 3.0f64).min((l - 0.1) / 2.0)),
    }
}

fn t2_range(region: Region, delta1: f64, l: f64, t1: f64) -> (f64, f64) {
    let c = 1.0 / 3.0 - delta1;
    let lower = match region {
        Region::B1 => c,
        Region::B2 => t1,
    };
    (lower, ((1.0 - t1) / 2.0).min(l - t1 - 0.1))
}

fn breakpoints(a: f64, b: f64, l: f64) -> Vec<f64> {
    let mut pts = vec![a];
    let s = 2.0 * l - 1.2;
    if s > a && s < b {
        pts.push(s);
    }
    pts.push(b);
    pts
}

/// `c_{B_i}` at `L = log n / log N` by nested adaptive quadrature of
/// `1/(t₁ t₂ log(n / N^{t₁+t₂}))`.
pub fn c_b_at(region: Region, l: f64, delta1: f64, ln_n_big: f64, tol: f64, max_panels: usize) -> Result<f64> {
    let (a, b) = region_bounds(region, delta1, l);
    if b.partial_cmp(&a) != Some(Ordering::Greater) {
        return Ok(0.0);
    }
    let mut failure: Option<Error> = None;
    let mut parts = Vec::new();
    for w in breakpoints(a, b, l).windows(2) {
        let inner = |t1: f64| -> f64 {
            let (lo, hi) = t2_range(region, delta1, l, t1);
            if hi <= lo {
                return 0.0;
            }
            match integrate(|t2| 1.0 / (t1 * t2 * ln_n_big * (l - t1 - t2)), lo, hi, tol * 1e-2, max_panels) {
                Ok((v, _)) => v,
                Err(_) => f64::NAN,
            }
        };
        match integrate(inner, w[0], w[1], tol, max_panels) {
            Ok((v, _)) if v.is_finite() => parts.push(v),
            Ok(_) => failure = Some(Error::Quadrature("inner integral did not converge".into())),
            Err(e) => failure = Some(e),
        }
    }
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(pairwise_sum(&parts))
}

/// Same density with the inner integral in closed form:
/// `∫ dt₂ / (t₂ (K − t₂)) = (1/K) log(t₂ / (K − t₂))`, `K = L − t₁`.
pub fn c_b_closed_inner(
    region: Region,
    l: f64,
    delta1: f64,
    ln_n_big: f64,
    tol: f64,
    max_panels: usize,
) -> Result<f64> {
    let (a, b) = region_bounds(region, delta1, l);
    if b.partial_cmp(&a) != Some(Ordering::Greater) {
        return Ok(0.0);
    }
    let mut parts = Vec::new();
    for w in breakpoints(a, b, l).windows(2) {
        let inner = |t1: f64| -> f64 {
            let (lo, hi) = t2_range(region, delta1, l, t1);
            if hi <= lo {
                return 0.0;
            }
            let k = l - t1;
            let anti = |x: f64| (x / (k - x)).ln() / k;
            (anti(hi) - anti(lo)) / (t1 * ln_n_big)
        };
        parts.push(integrate(inner, w[0], w[1], tol, max_panels)?.0);
    }
    Ok(pairwise_sum(&parts))
}

/// `c_{B_i}(n)` for the parameters' `N`.
pub fn c_b(region: Region, n: f64, params: &ChenParams) -> Result<f64> {
    let ln_big = params.ln_n();
    c_b_at(region, n.ln() / ln_big, params.delta1, ln_big, params.tol, params.max_panels)
}

/// `c_{E₃*}(n) = c_{B₁}(n)/2 + c_{B₂}(n)`.
pub fn c_e3(n: f64, params: &ChenParams) -> Result<f64> {
    Ok(c_b(Region::B1, n, params)? / 2.0 + c_b(Region::B2, n, params)?)
}

/// The constant `c_{E₃*} = c_{E₃*}(N) log N`.
pub fn c_e3_constant(params: &ChenParams) -> Result<f64> {
    Ok(c_e3(params.n as f64, params)? * params.ln_n())
}

fn in_b1(p: [u64; 3], params: &ChenParams) -> bool {
    let [p1, p2, p3] = p;
    let n = params.n;
    at_least_tenth_root(p1, n)
        && (p1 as f64) < params.mid
        && (p2 as f64) >= params.mid
        && (p2 as u128) * (p2 as u128) * (p1 as u128) <= n as u128
        && at_least_tenth_root(p3, n)
}

fn in_b2(p: [u64; 3], params: &ChenParams) -> bool {
    let [p1, p2, p3] = p;
    let n = params.n;
    (p1 as f64) >= params.mid
        && p1 <= p2
        && (p2 as u128) * (p2 as u128) * (p1 as u128) <= n as u128
        && at_least_tenth_root(p3, n)
}

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// `(1_{n ∈ B₁}, 1_{n ∈ B₂})`; `n` belongs to a set if some ordering of its
/// three prime factors satisfies the defining inequalities.
pub fn b_membership(n: u64, params: &ChenParams, t: &FactorTable) -> Result<(bool, bool)> {
    let fac = t.factorize(n)?;
    let mut ps = Vec::with_capacity(3);
    for &(p, e) in &fac {
        for _ in 0..e {
            ps.push(p);
        }
    }
    if ps.len() != 3 {
        return Ok((false, false));
    }
    let mut b1 = false;
    let mut b2 = false;
    for perm in PERMS {
        let q = [ps[perm[0]], ps[perm[1]], ps[perm[2]]];
        b1 |= in_b1(q, params);
        b2 |= in_b2(q, params);
    }
    Ok((b1, b2))
}

/// Evaluator for `Λ_{E₃*}`; `c_{E₃*}(n)` is recomputed per `n`.
#[derive(Clone, Debug)]
pub struct E3Weights {
    params: ChenParams,
}

impl E3Weights {
    pub fn new(params: &ChenParams) -> Result<Self> {
        Ok(E3Weights { params: params.clone() })
    }

    pub fn params(&self) -> &ChenParams {
        &self.params
    }

    /// Density `c_{E₃*}(n)` (closed inner integral, adaptive outer).
    pub fn density(&self, n: u64) -> f64 {
        let p = &self.params;
        let ln_big = p.ln_n();
        let l = (n as f64).ln() / ln_big;
        let b1 = c_b_closed_inner(Region::B1, l, p.delta1, ln_big, p.tol, p.max_panels).unwrap_or(f64::NAN);
        let b2 = c_b_closed_inner(Region::B2, l, p.delta1, ln_big, p.tol, p.max_panels).unwrap_or(f64::NAN);
        b1 / 2.0 + b2
    }

    /// `Λ_{E₃*}(n) = (1_{B₁}(n)/2 + 1_{B₂}(n)) / c_{E₃*}(n)`.
    pub fn lambda_e3(&self, n: u64, t: &FactorTable) -> f64 {
        if n < 8 || t.big_omega(n) != 3 {
            return 0.0;
        }
        let (b1, b2) = b_membership(n, &self.params, t).unwrap_or((false, false));
        let w = if b1 { 0.5 } else { 0.0 } + if b2 { 1.0 } else { 0.0 };
        if w == 0.0 {
            return 0.0;
        }
        let c = self.density(n);
        if c > 0.0 {
            w / c
        } else {
            0.0
        }
    }
}

pub fn lambda_e3(n: u64, params: &ChenParams, t: &FactorTable) -> Result<f64> {
    if n == 0 || n > t.limit() {
        return Err(Error::OutOfRange { value: n, limit: t.limit() });
    }
    Ok(E3Weights::new(params)?.lambda_e3(n, t))
}

/// Sieves and constants needed to evaluate the minorant.
pub struct ChenSieve {
    pub spec: SieveSpec,
    pub params: ChenParams,
    pub presieve: Presieve,
    pub main: MainSieves,
    pub e3: E3Weights,
    /// `c_{E₃*}(N) log N`.
    pub c_e3: f64,
}

impl ChenSieve {
    pub fn new(spec: &SieveSpec, params: &ChenParams, cuts: &MainCuts) -> Result<Self> {
        Ok(ChenSieve {
            spec: spec.clone(),
            params: params.clone(),
            presieve: Presieve::new(spec)?,
            main: MainSieves::new(spec, cuts)?,
            e3: E3Weights::new(params)?,
            c_e3: c_e3_constant(params)?,
        })
    }

    /// Parameters for the pointwise audit at `N`: `P₁ = N^{1/10}`, so the
    /// pre-sieves only remove the primes 2 and 3 below the main range.
    pub fn audit_setup(n: u64, delta1: f64) -> Result<Self> {
        let params = ChenParams::new(n, delta1)?;
        let nf = n as f64;
        let mut spec = SieveSpec::from_exponents(n, delta1, 2.0);
        spec.p1 = nf.powf(0.1);
        spec.p0 = nf.powf(1.0 / 6.0);
        spec.d1 = spec.d1.max(spec.p1);
        let cuts = MainCuts::from_spec(&spec);
        ChenSieve::new(&spec, &params, &cuts)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Minorant {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
}

fn lambda_prime(n: u64, t: &FactorTable) -> f64 {
    if t.is_prime(n) {
        (n as f64).ln()
    } else {
        0.0
    }
}

/// `g₁ = Λ(n)Ω(n+2)ω_M(n+2)`, `g₂ = (3/5+δ₁)c_{E₃*}Ω(n)Ω_M(n)Λ_{E₃*}(n+2)`,
/// `g₃ = Λ(n)(ω−Ω)(n+2)Ω′_M(n+2)`.
pub fn chen_minorant(n: u64, s: &ChenSieve, t: &FactorTable) -> Result<Minorant> {
    if n + 2 > t.limit() {
        return Err(Error::OutOfRange { value: n + 2, limit: t.limit() });
    }
    let lam = lambda_prime(n, t);
    let m = n + 2;
    let (g1, g3) = if lam == 0.0 {
        (0.0, 0.0)
    } else {
        let om = s.presieve.omega(m, t);
        let big_om = s.presieve.big_omega(m, t);
        (lam * big_om * s.main.omega_m.eval(m, t), lam * (om - big_om) * s.main.big_omega_m_prime.eval(m, t))
    };
    let le3 = s.e3.lambda_e3(m, t);
    let g2 = if le3 == 0.0 {
        0.0
    } else {
        (0.6 + s.params.delta1) * s.c_e3 * s.presieve.big_omega(n, t) * s.main.big_omega_m.eval(n, t) * le3
    };
    Ok(Minorant { g1, g2, g3 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AuditRow {
    pub n: u64,
    pub lhs: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Check `Λ(n)Λ₂(n+2) ≥ g₁ − g₂ + g₃ − slack(n)` for every prime
/// `n ∈ (N/2, N]`, where `slack(n) = Λ(n) r_{N^{1/10}}(n+2) #{p : p² | n+2, p ≥ N^{1/10}}`.
pub fn minorant_audit(s: &ChenSieve, t: &FactorTable) -> Result<Vec<AuditRow>> {
    let n_big = s.params.n;
    if n_big + 2 > t.limit() {
        return Err(Error::OutOfRange { value: n_big + 2, limit: t.limit() });
    }
    let rough = CramerModel::new(below(s.params.lo));
    let primes: Vec<u64> = (n_big / 2 + 1..=n_big).filter(|&n| t.is_prime(n)).collect();
    primes
        .par_iter()
        .map(|&n| {
            let m = n + 2;
            let lam = lambda_prime(n, t);
            let lhs = lam * lambda2(m, &s.params, t)?;
            let g = chen_minorant(n, s, t)?;
            let squares =
                t.factorize_unchecked(m).iter().filter(|&&(p, e)| e >= 2 && at_least_tenth_root(p, n_big)).count()
                    as f64;
            let slack = lam * rough.eval(m, t) * squares;
            let rhs = g.g1 - g.g2 + g.g3 - slack;
            let pass = lhs >= rhs - 1e-9 * (1.0 + rhs.abs());
            Ok(AuditRow { n, lhs, g1: g.g1, g2: g.g2, g3: g.g3, slack, pass })
        })
        .collect()
}

pub fn write_audit_csv(rows: &[AuditRow], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(File::create(path)?);
    w.write_record(["n", "lhs", "g1", "g2", "g3", "slack", "pass"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            format!("{:?}", r.lhs),
            format!("{:?}", r.g1),
            format!("{:?}", r.g2),
            format!("{:?}", r.g3),
            format!("{:?}", r.slack),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Pieces of the positivity constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChenConstant {
    pub f5: f64,
    /// `∫_{1/10}^{1/3} F(5 − 10t) dt/t`.
    pub switch_integral: f64,
    /// `∬ dt₁dt₂ / (t₁t₂(1−t₁−t₂))` over the `B₁` corner.
    pub e3_integral: f64,
    pub coefficient: f64,
    pub value: f64,
}

fn big_f_at(s: f64) -> f64 {
    linear_f_big_f(s).map(|v| v.1).unwrap_or(f64::NAN)
}

fn switch_integrand(t: f64) -> f64 {
    big_f_at(5.0 - 10.0 * t) / t
}

fn e3_region_inner(t1: f64) -> (f64, f64) {
    (1.0 / 3.0, ((1.0 - t1) / 2.0).min(0.9 - t1))
}

/// `f(5) − ½∫F(5−10t)dt/t − (coefficient/2)·F(3)·∬`, with the integrals
/// taken by composite Gauss–Kronrod on `panels` panels per smooth piece.
pub fn chen_constant_with(coefficient: f64, panels: usize) -> Result<ChenConstant> {
    let (f5, _) = linear_f_big_f(5.0)?;
    let (_, f3) = linear_f_big_f(3.0)?;
    // F(5 − 10t) switches from the tabulated range to 2e^γ/s at t = 1/5
    let switch_integral =
        integrate_fixed(switch_integrand, 0.1, 0.2, panels) + integrate_fixed(switch_integrand, 0.2, 1.0 / 3.0, panels);
    let e3_integral = integrate_fixed(
        |t1| {
            let (lo, hi) = e3_region_inner(t1);
            integrate_fixed(|t2| 1.0 / (t1 * t2 * (1.0 - t1 - t2)), lo, hi, panels)
        },
        0.1,
        1.0 / 3.0,
        panels,
    );
    let value = f5 - 0.5 * switch_integral - coefficient / 2.0 * f3 * e3_integral;
    Ok(ChenConstant { f5, switch_integral, e3_integral, coefficient, value })
}

/// The positivity constant for `0 < δ₁ ≤ 0.01`, evaluated with the
/// coefficient `3/5` (terms of order `δ₁` dropped) by adaptive quadrature.
pub fn chen_constant(delta1: f64) -> Result<ChenConstant> {
    if !(delta1 > 0.0 && delta1 <= 0.01) {
        return invalid(format!("δ1 = {delta1} must lie in (0, 0.01]"));
    }
    let (f5, _) = linear_f_big_f(5.0)?;
    let (_, f3) = linear_f_big_f(3.0)?;
    let switch_integral = integrate(switch_integrand, 0.1, 0.2, 1e-11, 2000)?.0
        + integrate(switch_integrand, 0.2, 1.0 / 3.0, 1e-11, 2000)?.0;
    let mut failed = None;
    let e3_integral = integrate(
        |t1| {
            let (lo, hi) = e3_region_inner(t1);
            match integrate(|t2| 1.0 / (t1 * t2 * (1.0 - t1 - t2)), lo, hi, 1e-13, 2000) {
                Ok((v, _)) => v,
                Err(e) => {
                    failed = Some(e);
                    0.0
                }
            }
        },
        0.1,
        1.0 / 3.0,
        1e-11,
        2000,
    )?
    .0;
    if let Some(e) = failed {
        return Err(e);
    }
    let coefficient = 0.6;
    let value = f5 - 0.5 * switch_integral - coefficient / 2.0 * f3 * e3_integral;
    Ok(ChenConstant { f5, switch_integral, e3_integral, coefficient, value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chen_prime_examples() {
        let t = FactorTable::new(100).unwrap();
        assert!(is_chen_prime(5, &t).unwrap());
        assert!(is_chen_prime(7, &t).unwrap());
        assert!(!is_chen_prime(43, &t).unwrap());
        assert!(is_chen_prime(99, &t).is_err());
    }

    #[test]
    fn b1_empty_for_large_delta() {
        let v = c_b_at(Region::B1, 1.0, 0.25, 10.0, 1e-12, 1000).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn lambda2_examples() {
        let t = FactorTable::new(2_000_000).unwrap();
        let p = ChenParams::new(1_000_000, 0.01).unwrap();
        // primes below N^{1/10} ≈ 3.98 are 2 and 3
        assert!((lambda2(101, &p, &t).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(lambda2(2 * 101, &p, &t).unwrap(), 0.0);
        assert_eq!(lambda2(5 * 7 * 11, &p, &t).unwrap(), 0.0);
    }
}
