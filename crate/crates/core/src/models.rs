//! The bump `G`, the major-arc kernel `b_R`, the twisted model `Λ_{R,r}` and
//! the multiplicative majorant `H_R`.

use crate::arith::{divisors_of, gcd, mobius, phi, trial_factor, FactorTable};
use crate::characters::ramanujan_sum;
use crate::error::{invalid, Error, Result};
use crate::numeric::{integrate, pairwise_sum};

fn sigma(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

/// Smooth step on `[0, 1]`: 0 at 0, 1 at 1, flat to all orders at both ends.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = sigma(u);
        a / (a + sigma(1.0 - u))
    }
}

/// `G`: 1 on `[0, 1]`, 0 outside `(−2, 2)`, smooth-step ramps on `(−2, 0)` and `(1, 2)`.
pub fn bump_g(t: f64) -> f64 {
    if (0.0..=1.0).contains(&t) {
        1.0
    } else if t <= -2.0 || t >= 2.0 {
        0.0
    } else if t < 0.0 {
        smooth_step((t + 2.0) / 2.0)
    } else {
        smooth_step(2.0 - t)
    }
}

/// `b_R(n) = 1_{|n| ≤ N/R⁴} (R⁴/2N) Σ_{r ≤ R²} c_r(n) G(log r / log R)`.
pub fn b_r(n: i64, big_n: u64, r: u64) -> Result<f64> {
    if r < 2 {
        return invalid("R must be at least 2");
    }
    let r4 = (r as f64).powi(4);
    if (n.unsigned_abs() as f64) > big_n as f64 / r4 {
        return Ok(0.0);
    }
    let ln_r = (r as f64).ln();
    let terms: Vec<f64> = (1..=r * r).map(|q| ramanujan_sum(q, n) as f64 * bump_g((q as f64).ln() / ln_r)).collect();
    Ok(r4 / (2.0 * big_n as f64) * pairwise_sum(&terms))
}

/// `Λ_{R,r}(n) = Σ_{(q,r)=1} μ(q) c_q(n)/φ(q) · G(log(rq)/log R)`.
pub fn lambda_rr(n: i64, big_r: u64, r: u64) -> Result<f64> {
    if r == 0 || big_r < 2 {
        return invalid("need r >= 1 and R >= 2");
    }
    let ln_r = (big_r as f64).ln();
    let q_max = (big_r * big_r) / r;
    let mut terms = Vec::new();
    for q in 1..=q_max {
        if gcd(q, r) != 1 {
            continue;
        }
        let mu = mobius(q);
        if mu == 0 {
            continue;
        }
        let g = bump_g(((r * q) as f64).ln() / ln_r);
        if g == 0.0 {
            continue;
        }
        terms.push(mu as f64 * ramanujan_sum(q, n) as f64 / phi(q) as f64 * g);
    }
    Ok(pairwise_sum(&terms))
}

/// Divisor form
/// `Σ_{d|n, (d,r)=1} dμ(d)/φ(d) Σ_{(ℓ, dr)=1} μ(ℓ)²/φ(ℓ) G(log(ℓdr)/log R)`.
pub fn lambda_rr_divisor_form(n: u64, big_r: u64, r: u64) -> Result<f64> {
    if n == 0 || r == 0 || big_r < 2 {
        return invalid("need n, r >= 1 and R >= 2");
    }
    let ln_r = (big_r as f64).ln();
    let cap = big_r * big_r;
    let mut outer = Vec::new();
    for d in divisors_of(&trial_factor(n)) {
        let mu_d = mobius(d);
        if mu_d == 0 || gcd(d, r) != 1 || d * r > cap {
            continue;
        }
        let mut inner = Vec::new();
        for l in 1..=cap / (d * r) {
            if gcd(l, d * r) != 1 || mobius(l) == 0 {
                continue;
            }
            inner.push(bump_g(((l * d * r) as f64).ln() / ln_r) / phi(l) as f64);
        }
        outer.push(d as f64 * mu_d as f64 / phi(d) as f64 * pairwise_sum(&inner));
    }
    Ok(pairwise_sum(&outer))
}

/// `h_ξ(n) = ∏_{p|n} min{1, 10(1+|ξ|) log p / log R}` on squarefree `n`, else 0.
pub fn h_xi(n: u64, xi: f64, big_r: f64, t: &FactorTable) -> Result<f64> {
    let fac = t.factorize(n)?;
    if fac.iter().any(|&(_, e)| e > 1) {
        return Ok(0.0);
    }
    let ps: Vec<u64> = fac.iter().map(|&(p, _)| p).collect();
    Ok(h_xi_primes(&ps, xi, big_r))
}

fn h_xi_primes(ps: &[u64], xi: f64, big_r: f64) -> f64 {
    let ln_r = big_r.ln();
    ps.iter().map(|&p| (10.0 * (1.0 + xi.abs()) * (p as f64).ln() / ln_r).min(1.0)).product()
}

/// How `H_R` treats non-squarefree `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SquarefullMode {
    /// Evaluate `h_ξ` at the radical of `n`.
    #[default]
    Radical,
    /// `h_ξ` vanishes off the squarefree integers, so `H_R(n) = 0`.
    Zero,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub big_r: u64,
    /// Cutoff `Ξ` of the `ξ`-integration.
    pub xi_cutoff: f64,
    pub tol: f64,
    pub max_panels: usize,
    pub squarefull: SquarefullMode,
}

impl ModelParams {
    pub fn new(big_r: u64) -> Result<Self> {
        if big_r < 2 {
            return invalid("R must be at least 2");
        }
        Ok(ModelParams { big_r, xi_cutoff: 50.0, tol: 1e-13, max_panels: 2000, squarefull: SquarefullMode::Radical })
    }
}

/// `H_R(n)` with a flag telling whether the radical reading was used.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HValue {
    pub value: f64,
    pub used_radical: bool,
}

/// `H_R(n) = τ(n) log R ∫ h_ξ(n)(1+|ξ|)^{-10} dξ`; the integral over `|ξ| > Ξ`
/// is replaced by its upper bound `2(1+Ξ)^{-9}/9`.
pub fn big_h_r(n: u64, params: &ModelParams, t: &FactorTable) -> Result<HValue> {
    if params.xi_cutoff < 10.0 {
        return invalid("Ξ must be at least 10");
    }
    let fac = t.factorize(n)?;
    let squarefull = fac.iter().any(|&(_, e)| e > 1);
    if squarefull && params.squarefull == SquarefullMode::Zero {
        return Ok(HValue { value: 0.0, used_radical: false });
    }
    let tau: f64 = fac.iter().map(|&(_, e)| e as f64 + 1.0).product();
    let ps: Vec<u64> = fac.iter().map(|&(p, _)| p).collect();
    let big_r = params.big_r as f64;
    let ln_r = big_r.ln();
    let xi_max = params.xi_cutoff;
    // kinks where a factor reaches the clamp at 1
    let mut cuts: Vec<f64> =
        ps.iter().map(|&p| ln_r / (10.0 * (p as f64).ln()) - 1.0).filter(|&x| x > 0.0 && x < xi_max).collect();
    cuts.push(0.0);
    cuts.push(xi_max);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut parts = Vec::new();
    for w in cuts.windows(2) {
        let (v, _) = integrate(
            |xi| h_xi_primes(&ps, xi, big_r) * (1.0 + xi).powi(-10),
            w[0],
            w[1],
            params.tol,
            params.max_panels,
        )?;
        parts.push(v);
    }
    let body = 2.0 * pairwise_sum(&parts);
    let tail = 2.0 * (1.0 + xi_max).powi(-9) / 9.0;
    Ok(HValue { value: tau * ln_r * (body + tail), used_radical: squarefull })
}

/// Outcome of comparing `(r/φ(r))|Λ_{R,r}(n)|` with `H_R(n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HbCheck {
    pub lhs: f64,
    pub h: f64,
    pub holds: bool,
}

pub fn hb_upper_check(n: u64, r: u64, params: &ModelParams, t: &FactorTable) -> Result<HbCheck> {
    if r == 0 || gcd(n, r) != 1 {
        return Err(Error::InvalidParameter(format!("gcd({n}, {r}) != 1")));
    }
    let lam = lambda_rr(n as i64, params.big_r, r)?;
    let lhs = r as f64 / phi(r) as f64 * lam.abs();
    let h = big_h_r(n, params, t)?.value;
    Ok(HbCheck { lhs, h, holds: lhs <= h * (1.0 + 1e-9) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_values() {
        assert_eq!(bump_g(0.5), 1.0);
        assert_eq!(bump_g(-2.0), 0.0);
        assert_eq!(bump_g(2.0), 0.0);
        assert!((bump_g(-1.0) - 0.5).abs() < 1e-15);
        assert!((bump_g(1.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn h_examples() {
        let t = FactorTable::new(100).unwrap();
        let r = 2f64.powi(100);
        assert_eq!(h_xi(1, 0.0, r, &t).unwrap(), 1.0);
        assert!((h_xi(2, 0.0, r, &t).unwrap() - 0.1).abs() < 1e-15);
        assert!((h_xi(6, 0.0, r, &t).unwrap() - 0.015_849_625).abs() < 1e-8);
        let p = ModelParams::new(1000).unwrap();
        let h1 = big_h_r(1, &p, &t).unwrap().value;
        assert!((h1 - 2.0 / 9.0 * 1000f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn lambda_support() {
        assert_eq!(lambda_rr(7, 4, 17).unwrap(), 0.0);
        assert!(hb_upper_check(6, 3, &ModelParams::new(20).unwrap(), &FactorTable::new(100).unwrap()).is_err());
    }
}
