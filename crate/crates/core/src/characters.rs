//! Dirichlet characters, Ramanujan and Gauss sums, real L-values, the
//! exceptional-zero search, and the Gallagher / Bombieri–Vinogradov
//! discrepancy sums.
//!
//! A character mod `q` is stored as a vector of exponents over the cyclic
//! factors of `(Z/q)*`; its values are roots of unity `e(k/L)` with `L` the
//! exponent of the group, so real characters evaluate to exactly `±1`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{gcd, inv_mod, phi, pow_mod, trial_factor, FactorTable};
use crate::error::{invalid, Result};
use crate::numeric::{pairwise_sum, pairwise_sum_complex};

#[derive(Clone, Debug)]
struct CyclicFactor {
    p: u64,
    /// Modulus of the prime-power component this factor lives in.
    pe: u64,
    order: u64,
    kind: FactorKind,
    /// Discrete log of each residue mod `pe` (`u32::MAX` for non-units).
    dlog: Arc<Vec<u32>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FactorKind {
    /// Odd prime power, cyclic with a primitive root.
    Odd,
    /// The `±1` factor of `(Z/2^e)*`, `e >= 2`.
    TwoSign,
    /// The factor generated by 5 in `(Z/2^e)*`, `e >= 3`.
    TwoFive,
}

impl CyclicFactor {
    #[inline]
    fn log(&self, n: u64) -> Option<u64> {
        let r = (n % self.pe) as usize;
        match self.kind {
            FactorKind::Odd => {
                let v = self.dlog[r];
                (v != u32::MAX).then_some(v as u64)
            }
            FactorKind::TwoSign => {
                if r % 2 == 0 {
                    None
                } else {
                    Some(if r % 4 == 1 { 0 } else { 1 })
                }
            }
            FactorKind::TwoFive => {
                if r % 2 == 0 {
                    return None;
                }
                let r = if r % 4 == 1 { r } else { self.pe as usize - r };
                Some(self.dlog[r] as u64)
            }
        }
    }
}

/// The group of characters mod `q`, shared by all its characters.
#[derive(Clone, Debug)]
pub struct CharacterGroup {
    q: u64,
    factors: Vec<CyclicFactor>,
    exponent: u64,
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

fn primitive_root(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let fac = trial_factor(p - 1);
    (2..p)
        .find(|&g| fac.iter().all(|&(r, _)| pow_mod(g, (p - 1) / r, p) != 1))
        .expect("every prime has a primitive root")
}

impl CharacterGroup {
    pub fn new(q: u64) -> Result<Arc<Self>> {
        if q == 0 {
            return invalid("modulus must be positive");
        }
        if q > 1_000_000 {
            return invalid(format!("modulus {q} exceeds 10^6"));
        }
        let mut factors = Vec::new();
        for (p, e) in trial_factor(q) {
            let pe = p.pow(e);
            if p == 2 {
                if e >= 2 {
                    factors.push(CyclicFactor {
                        p,
                        pe,
                        order: 2,
                        kind: FactorKind::TwoSign,
                        dlog: Arc::new(Vec::new()),
                    });
                }
                if e >= 3 {
                    let order = pe / 4;
                    let mut dlog = vec![u32::MAX; pe as usize];
                    let mut x = 1u64;
                    for k in 0..order {
                        dlog[x as usize] = k as u32;
                        x = x * 5 % pe;
                    }
                    factors.push(CyclicFactor { p, pe, order, kind: FactorKind::TwoFive, dlog: Arc::new(dlog) });
                }
            } else {
                let mut g = primitive_root(p);
                if e >= 2 && pow_mod(g, p - 1, p * p) == 1 {
                    g += p;
                }
                let order = pe / p * (p - 1);
                let mut dlog = vec![u32::MAX; pe as usize];
                let mut x = 1u64;
                for k in 0..order {
                    dlog[x as usize] = k as u32;
                    x = x * g % pe;
                }
                factors.push(CyclicFactor { p, pe, order, kind: FactorKind::Odd, dlog: Arc::new(dlog) });
            }
        }
        let exponent = factors.iter().fold(1, |acc, f| lcm(acc, f.order));
        Ok(Arc::new(CharacterGroup { q, factors, exponent }))
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    /// Exponent `L` of the group; character values are `e(k/L)`.
    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn order(&self) -> u64 {
        self.factors.iter().map(|f| f.order).product()
    }

    fn character(self: &Arc<Self>, exps: Vec<u64>) -> DirichletCharacter {
        let conductor = self.conductor_of(&exps);
        let is_real = exps.iter().zip(&self.factors).all(|(&a, f)| (2 * a) % f.order == 0);
        DirichletCharacter { group: Arc::clone(self), exps, conductor, is_real }
    }

    fn conductor_of(&self, exps: &[u64]) -> u64 {
        let mut cond = 1u64;
        let mut i = 0;
        while i < self.factors.len() {
            let f = &self.factors[i];
            match f.kind {
                FactorKind::Odd => {
                    let a = exps[i];
                    if a != 0 {
                        let e = self.factors[i].pe.ilog(f.p);
                        let mut fe = 1;
                        while a % f.p.pow(e - fe) != 0 {
                            fe += 1;
                        }
                        cond *= f.p.pow(fe);
                    }
                    i += 1;
                }
                FactorKind::TwoSign => {
                    let a0 = exps[i];
                    let has_five = i + 1 < self.factors.len() && self.factors[i + 1].kind == FactorKind::TwoFive;
                    let a1 = if has_five { exps[i + 1] } else { 0 };
                    if a1 != 0 {
                        let e = f.pe.ilog2();
                        let mut fe = 3;
                        while a1 % (1u64 << (e - fe)) != 0 {
                            fe += 1;
                        }
                        cond *= 1 << fe;
                    } else if a0 != 0 {
                        cond *= 4;
                    }
                    i += if has_five { 2 } else { 1 };
                }
                FactorKind::TwoFive => unreachable!("the 5-factor always follows the sign factor"),
            }
        }
        cond
    }
}

/// A Dirichlet character modulo `q`.
#[derive(Clone, Debug)]
pub struct DirichletCharacter {
    group: Arc<CharacterGroup>,
    exps: Vec<u64>,
    conductor: u64,
    is_real: bool,
}

impl PartialEq for DirichletCharacter {
    fn eq(&self, other: &Self) -> bool {
        self.group.q == other.group.q && self.exps == other.exps
    }
}

impl DirichletCharacter {
    pub fn modulus(&self) -> u64 {
        self.group.q
    }
    pub fn conductor(&self) -> u64 {
        self.conductor
    }
    pub fn is_primitive(&self) -> bool {
        self.conductor == self.group.q
    }
    pub fn is_real(&self) -> bool {
        self.is_real
    }
    pub fn is_principal(&self) -> bool {
        self.exps.iter().all(|&a| a == 0)
    }
    pub fn exponents(&self) -> &[u64] {
        &self.exps
    }

    /// Mixed-radix index of this character in `characters_mod` order.
    pub fn id(&self) -> u64 {
        self.exps.iter().zip(&self.group.factors).fold(0, |acc, (&a, f)| acc * f.order + a)
    }

    /// `k` with `χ(n) = e(k/L)`, or `None` when `gcd(n, q) > 1`.
    pub fn exponent_at(&self, n: u64) -> Option<u64> {
        if self.group.q % 2 == 0 && n % 2 == 0 {
            return None;
        }
        let l = self.group.exponent;
        let mut k = 0u64;
        for (f, &a) in self.group.factors.iter().zip(&self.exps) {
            let lg = f.log(n)?;
            k = (k + (a * lg % f.order) * (l / f.order)) % l;
        }
        Some(k)
    }

    pub fn value(&self, n: u64) -> Complex64 {
        match self.exponent_at(n) {
            None => Complex64::new(0.0, 0.0),
            Some(k) => root_of_unity(k, self.group.exponent),
        }
    }

    /// Value at a possibly negative integer.
    pub fn value_i64(&self, n: i64) -> Complex64 {
        self.value(n.rem_euclid(self.group.q as i64) as u64)
    }

    /// Value of a real character as an integer in {-1, 0, 1}.
    pub fn real_value(&self, n: u64) -> i32 {
        debug_assert!(self.is_real);
        match self.exponent_at(n) {
            None => 0,
            Some(0) => 1,
            Some(_) => -1,
        }
    }

    pub fn conj(&self) -> DirichletCharacter {
        let exps = self.exps.iter().zip(&self.group.factors).map(|(&a, f)| (f.order - a) % f.order).collect();
        self.group.character(exps)
    }
}

fn root_of_unity(k: u64, l: u64) -> Complex64 {
    if k == 0 {
        Complex64::new(1.0, 0.0)
    } else if 2 * k == l {
        Complex64::new(-1.0, 0.0)
    } else if 4 * k == l {
        Complex64::new(0.0, 1.0)
    } else if 4 * k == 3 * l {
        Complex64::new(0.0, -1.0)
    } else {
        Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / l as f64)
    }
}

/// All `φ(q)` characters modulo `q`; index 0 is the principal character.
pub fn characters_mod(q: u64) -> Result<Vec<DirichletCharacter>> {
    let g = CharacterGroup::new(q)?;
    let orders: Vec<u64> = g.factors.iter().map(|f| f.order).collect();
    let total: u64 = orders.iter().product();
    let mut out = Vec::with_capacity(total as usize);
    for idx in 0..total {
        let mut rem = idx;
        let mut exps = vec![0u64; orders.len()];
        for i in (0..orders.len()).rev() {
            exps[i] = rem % orders[i];
            rem /= orders[i];
        }
        out.push(g.character(exps));
    }
    Ok(out)
}

/// Real characters modulo `q` (exponents restricted to 0 or half the order).
pub fn real_characters_mod(q: u64) -> Result<Vec<DirichletCharacter>> {
    let g = CharacterGroup::new(q)?;
    let choices: Vec<Vec<u64>> =
        g.factors.iter().map(|f| if f.order % 2 == 0 { vec![0, f.order / 2] } else { vec![0] }).collect();
    let mut combos: Vec<Vec<u64>> = vec![Vec::new()];
    for c in &choices {
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                c.iter().map(move |&a| {
                    let mut v = prefix.clone();
                    v.push(a);
                    v
                })
            })
            .collect();
    }
    Ok(combos.into_iter().map(|exps| g.character(exps)).collect())
}

pub fn primitive_characters_mod(q: u64) -> Result<Vec<DirichletCharacter>> {
    Ok(characters_mod(q)?.into_iter().filter(|c| c.is_primitive()).collect())
}

pub fn real_primitive_characters_mod(q: u64) -> Result<Vec<DirichletCharacter>> {
    Ok(real_characters_mod(q)?.into_iter().filter(|c| c.is_primitive()).collect())
}

/// `c_q(n) = Σ_{d | (q, n)} d μ(q/d)`.
pub fn ramanujan_sum(q: u64, n: i64) -> i64 {
    assert!(q >= 1, "modulus must be positive");
    let g = gcd(q, n.unsigned_abs());
    let g = if g == 0 { q } else { g };
    crate::arith::divisors_of(&trial_factor(g)).into_iter().map(|d| d as i64 * crate::arith::mobius(q / d)).sum()
}

/// `τ(χ) = Σ_{a mod q} χ(a) e(a/q)`.
pub fn gauss_sum(chi: &DirichletCharacter) -> Complex64 {
    let q = chi.modulus();
    let terms: Vec<Complex64> = (1..=q).map(|a| chi.value(a) * root_of_unity(a % q, q)).collect();
    pairwise_sum_complex(&terms)
}

/// `𝔲_P(n·ā; q) = 1_{n ≡ a (q)} − φ(q)^{-1} Σ_{ψ mod q, cond ψ ≤ P} ψ(n ā)`.
pub fn u_p(n: i64, a: u64, q: u64, p_level: u64) -> Result<Complex64> {
    if gcd(a, q) != 1 {
        return invalid(format!("gcd({a}, {q}) != 1"));
    }
    if p_level == 0 {
        return invalid("level P must be at least 1");
    }
    let abar = inv_mod(a % q, q).unwrap_or(0);
    let nn = n.rem_euclid(q as i64) as u64;
    let x = (nn as u128 * abar as u128 % q as u128) as u64;
    let x = if q == 1 { 1 } else { x };
    let chars = characters_mod(q)?;
    let terms: Vec<Complex64> = chars.iter().filter(|c| c.conductor() <= p_level).map(|c| c.value(x)).collect();
    let ind = if q == 1 || nn == a % q { 1.0 } else { 0.0 };
    Ok(Complex64::new(ind, 0.0) - pairwise_sum_complex(&terms) / phi(q) as f64)
}

/// Default number of terms in the `L(σ, χ)` partial sums.
pub const L_TERMS: u64 = 1 << 20;

fn check_real_nonprincipal(chi: &DirichletCharacter) -> Result<()> {
    if !chi.is_real() || chi.is_principal() {
        return invalid("L-value requires a real non-principal character");
    }
    Ok(())
}

/// Spread `max S − min S` of the prefix sums of a real character over one period.
fn prefix_spread(chi: &DirichletCharacter) -> f64 {
    let (mut s, mut lo, mut hi) = (0i64, 0i64, 0i64);
    for n in 1..=chi.modulus() {
        s += chi.real_value(n) as i64;
        lo = lo.min(s);
        hi = hi.max(s);
    }
    (hi - lo) as f64
}

/// `L(σ, χ)` for real non-principal primitive `χ`: the partial sum to `L_TERMS`
/// and a rigorous bound on the remainder.
pub fn l_real(sigma: f64, chi: &DirichletCharacter) -> Result<(f64, f64)> {
    l_real_terms(sigma, chi, L_TERMS)
}

pub fn l_real_terms(sigma: f64, chi: &DirichletCharacter, terms: u64) -> Result<(f64, f64)> {
    check_real_nonprincipal(chi)?;
    if !chi.is_primitive() {
        return invalid("L-value requires a primitive character");
    }
    if !(sigma > 0.5 && sigma <= 1.5) {
        return invalid(format!("σ = {sigma} outside (0.5, 1.5]"));
    }
    Ok(l_partial(sigma, chi, terms))
}

/// Partial sum and remainder bound; the bound holds for every `σ > 0`.
fn l_partial(sigma: f64, chi: &DirichletCharacter, terms: u64) -> (f64, f64) {
    let signs: Vec<i32> = (0..chi.modulus()).map(|r| chi.real_value(r)).collect();
    let q = chi.modulus();
    let vals: Vec<f64> =
        (1..=terms).map(|n| signs[(n % q) as usize] as f64 * (-(sigma) * (n as f64).ln()).exp()).collect();
    let value = pairwise_sum(&vals);
    let tail = prefix_spread(chi) * ((terms + 1) as f64).powf(-sigma);
    let rounding = 4.0 * f64::EPSILON * terms as f64;
    (value, tail + rounding)
}

/// An uncertified stretch of `[1 − κ/log P, 1]` for one character.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroCandidate {
    pub modulus: u64,
    pub character_id: u64,
    pub interval: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalZeroReport {
    pub level: u64,
    pub quality: f64,
    pub clear: bool,
    pub candidates: Vec<ZeroCandidate>,
}

/// Settings for the zero-exclusion grid.
#[derive(Clone, Copy, Debug)]
pub struct ZeroSearchBudget {
    /// Terms in each `L(σ, χ)` partial sum.
    pub terms: u64,
    /// Initial number of grid cells per character.
    pub initial_cells: usize,
    /// Maximum number of cells per character after refinement.
    pub max_cells: usize,
}

impl Default for ZeroSearchBudget {
    fn default() -> Self {
        ZeroSearchBudget { terms: 20_000, initial_cells: 16, max_cells: 4096 }
    }
}

pub fn exceptional_zero_search(p_level: u64, kappa: f64) -> Result<ExceptionalZeroReport> {
    exceptional_zero_search_with(p_level, kappa, ZeroSearchBudget::default())
}

/// Certify `L(σ, χ) > 0` on `[1 − κ/log P, 1]` for every real primitive `χ`
/// of modulus `≤ P`. On each grid cell `[a, b]` the lower bounds `ℓ_a, ℓ_b` of
/// the endpoint values and the derivative bound `D` at `a` give
/// `min L ≥ (ℓ_a + ℓ_b − D(b − a))/2`; cells where that is not positive are
/// bisected until the budget runs out and are then reported.
pub fn exceptional_zero_search_with(
    p_level: u64,
    kappa: f64,
    budget: ZeroSearchBudget,
) -> Result<ExceptionalZeroReport> {
    if !(3..=10_000).contains(&p_level) {
        return invalid(format!("level P = {p_level} outside [3, 10^4]"));
    }
    if !(kappa > 0.0 && kappa < 1.0) {
        return invalid(format!("quality κ = {kappa} outside (0, 1)"));
    }
    let lo = 1.0 - kappa / (p_level as f64).ln();
    let mut chars = Vec::new();
    for q in 3..=p_level {
        chars.extend(real_primitive_characters_mod(q)?);
    }
    let per_char: Vec<Vec<ZeroCandidate>> =
        chars.par_iter().map(|chi| certify_character(chi, lo, budget)).collect::<Result<_>>()?;
    let candidates: Vec<ZeroCandidate> = per_char.into_iter().flatten().collect();
    Ok(ExceptionalZeroReport { level: p_level, quality: kappa, clear: candidates.is_empty(), candidates })
}

fn certify_character(chi: &DirichletCharacter, lo: f64, budget: ZeroSearchBudget) -> Result<Vec<ZeroCandidate>> {
    let spread = prefix_spread(chi);
    let m = budget.terms;
    // the window [1 − κ/log P, 1] reaches below σ = 1/2 for small P
    let lower = |s: f64| -> Result<f64> {
        let (v, err) = l_partial(s, chi, m);
        Ok(v - err)
    };
    let deriv_bound = |s: f64| -> f64 {
        let body: Vec<f64> = (2..=m).map(|n| (n as f64).ln() * (n as f64).powf(-s)).collect();
        let m1 = (m + 1) as f64;
        pairwise_sum(&body) + spread * m1.ln() * m1.powf(-s)
    };
    let cells0 = budget.initial_cells.max(1);
    let h = (1.0 - lo) / cells0 as f64;
    let mut stack: Vec<(f64, f64, f64, f64)> = Vec::new();
    let mut prev = lower(lo)?;
    for i in 0..cells0 {
        let a = lo + i as f64 * h;
        let b = if i + 1 == cells0 { 1.0 } else { lo + (i + 1) as f64 * h };
        let lb = lower(b)?;
        stack.push((a, b, prev, lb));
        prev = lb;
    }
    let mut cells = cells0;
    let mut failed: Vec<(f64, f64)> = Vec::new();
    while let Some((a, b, la, lb)) = stack.pop() {
        if la > 0.0 && lb > 0.0 && la + lb - deriv_bound(a) * (b - a) > 0.0 {
            continue;
        }
        if cells >= budget.max_cells {
            failed.push((a, b));
            continue;
        }
        let mid = 0.5 * (a + b);
        let lm = lower(mid)?;
        cells += 1;
        stack.push((mid, b, lm, lb));
        stack.push((a, mid, la, lm));
    }
    failed.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in failed {
        match merged.last_mut() {
            Some(last) if last.1 >= a => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    Ok(merged
        .into_iter()
        .map(|(a, b)| ZeroCandidate { modulus: chi.modulus(), character_id: chi.id(), interval: [a, b] })
        .collect())
}

/// Which arithmetic weight the Gallagher sum is taken over.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GallagherKind {
    /// Prime-supported von Mangoldt, main term 1.
    Lambda,
    /// Prime indicator, main term `1/log n`.
    PrimeIndicator,
    /// `Λ_{E3*}` with the given `δ₁`, main term 1.
    E3 { delta1: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GallagherResult {
    /// Maximum over the grid interval family, summed over characters; a lower
    /// bound for the true quantity.
    pub value: f64,
    /// The true quantity is at most `value + defect`.
    pub defect: f64,
    /// Grid spacing used (a power of two).
    pub spacing: u64,
    pub characters: usize,
}

/// Largest power of two not exceeding `⌈N/R²⌉`. Dyadic spacings make the grids
/// for increasing `R` nested.
pub fn gallagher_spacing(n: u64, r: u64) -> u64 {
    let g = n.div_ceil(r * r).max(1);
    1u64 << g.ilog2()
}

fn arithmetic_weights(kind: GallagherKind, n: u64, t: &FactorTable) -> Result<(Vec<f64>, Vec<f64>)> {
    // index i holds the value at n = i + 1
    let (w, main): (Vec<f64>, Vec<f64>) = match kind {
        GallagherKind::Lambda => (1..=n).map(|k| (t.von_mangoldt(k), 1.0)).unzip(),
        GallagherKind::PrimeIndicator => (1..=n)
            .map(|k| {
                let ind = if t.is_prime(k) { 1.0 } else { 0.0 };
                let main = if k >= 2 { 1.0 / (k as f64).ln() } else { 0.0 };
                (ind, main)
            })
            .unzip(),
        GallagherKind::E3 { delta1 } => {
            let params = crate::chen::ChenParams::new(n, delta1)?;
            let e3 = crate::chen::E3Weights::new(&params)?;
            (1..=n).map(|k| (e3.lambda_e3(k, t), 1.0)).unzip()
        }
    };
    Ok((w, main))
}

fn gallagher_sequence(
    w: &[f64],
    main: &[f64],
    chi: &DirichletCharacter,
    exceptional: Option<&(DirichletCharacter, f64)>,
    kind: GallagherKind,
) -> Vec<Complex64> {
    let r1 = chi.modulus() == 1;
    let exc = exceptional.filter(|(c, _)| c == chi).map(|(_, b)| *b);
    (0..w.len())
        .map(|i| {
            let n = (i + 1) as u64;
            let mut v = chi.value(n) * w[i];
            if r1 {
                v -= main[i];
            }
            if let Some(beta) = exc {
                let nf = n as f64;
                let extra = nf.powf(beta - 1.0);
                v += match kind {
                    GallagherKind::PrimeIndicator => {
                        if n >= 2 {
                            extra / nf.ln()
                        } else {
                            0.0
                        }
                    }
                    _ => extra,
                };
            }
            v
        })
        .collect()
}

fn prefix_sums(a: &[Complex64]) -> Vec<Complex64> {
    let mut s = Vec::with_capacity(a.len() + 1);
    let mut acc = Complex64::new(0.0, 0.0);
    s.push(acc);
    for &x in a {
        acc += x;
        s.push(acc);
    }
    s
}

fn gallagher_characters(r: u64) -> Result<Vec<DirichletCharacter>> {
    let mut chars = Vec::new();
    for q in 1..=r {
        chars.extend(primitive_characters_mod(q)?);
    }
    Ok(chars)
}

/// `Σ_{r ≤ R} Σ*_{χ mod r} max_I |Σ_{n ∈ I} a_χ(n)| / (|I| + N/R)` over intervals
/// `I ⊆ [1, N]` with endpoints on a dyadic grid plus all prefix intervals.
pub fn gallagher_discrepancy(
    kind: GallagherKind,
    n: u64,
    r: u64,
    exceptional: Option<(DirichletCharacter, f64)>,
    t: &FactorTable,
) -> Result<GallagherResult> {
    check_gallagher(n, r, t)?;
    let (w, main) = arithmetic_weights(kind, n, t)?;
    let chars = gallagher_characters(r)?;
    let g = gallagher_spacing(n, r);
    let shift = n as f64 / r as f64;
    let mut grid: Vec<usize> = (0..=n).step_by(g as usize).map(|x| x as usize).collect();
    if *grid.last().unwrap() != n as usize {
        grid.push(n as usize);
    }
    let per: Vec<(f64, f64)> = chars
        .par_iter()
        .map(|chi| {
            let a = gallagher_sequence(&w, &main, chi, exceptional.as_ref(), kind);
            let s = prefix_sums(&a);
            let mut best = 0.0f64;
            for (i, &x) in grid.iter().enumerate() {
                for &y in &grid[i + 1..] {
                    let v = (s[y] - s[x]).norm() / ((y - x) as f64 + shift);
                    best = best.max(v);
                }
            }
            for (y, z) in s.iter().enumerate().skip(1) {
                best = best.max(z.norm() / (y as f64 + shift));
            }
            let mut cell_max = 0.0f64;
            for win in grid.windows(2) {
                let mass: f64 = a[win[0]..win[1]].iter().map(|z| z.norm()).sum();
                cell_max = cell_max.max(mass);
            }
            (best, 2.0 * cell_max / shift)
        })
        .collect();
    let values: Vec<f64> = per.iter().map(|p| p.0).collect();
    let defects: Vec<f64> = per.iter().map(|p| p.1).collect();
    Ok(GallagherResult {
        value: pairwise_sum(&values),
        defect: pairwise_sum(&defects),
        spacing: g,
        characters: chars.len(),
    })
}

/// Same sum with the maximum taken over every interval (`O(N²)` per character).
pub fn gallagher_discrepancy_exact(
    kind: GallagherKind,
    n: u64,
    r: u64,
    exceptional: Option<(DirichletCharacter, f64)>,
    t: &FactorTable,
) -> Result<f64> {
    check_gallagher(n, r, t)?;
    if n > 20_000 {
        return invalid("exact interval sweep is limited to N <= 2·10^4");
    }
    let (w, main) = arithmetic_weights(kind, n, t)?;
    let chars = gallagher_characters(r)?;
    let shift = n as f64 / r as f64;
    let per: Vec<f64> = chars
        .par_iter()
        .map(|chi| {
            let s = prefix_sums(&gallagher_sequence(&w, &main, chi, exceptional.as_ref(), kind));
            let mut best = 0.0f64;
            for x in 0..s.len() {
                for y in x + 1..s.len() {
                    best = best.max((s[y] - s[x]).norm() / ((y - x) as f64 + shift));
                }
            }
            best
        })
        .collect();
    Ok(pairwise_sum(&per))
}

fn check_gallagher(n: u64, r: u64, t: &FactorTable) -> Result<()> {
    if r == 0 || r * r > n {
        return invalid(format!("need 1 <= R and R² <= N (R = {r}, N = {n})"));
    }
    if n > t.limit() {
        return invalid(format!("N = {n} exceeds the factor table"));
    }
    Ok(())
}

/// Arithmetic weight for the Bombieri–Vinogradov sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BvKind {
    Lambda,
    E3 {
        delta1: f64,
    },
    /// Cramér model `r_P` with the given sifting bound.
    Rough {
        sift: u64,
    },
}

fn bv_weights(kind: BvKind, n: u64, t: &FactorTable) -> Result<Vec<(u64, f64)>> {
    let lo = n / 2 + 1;
    Ok(match kind {
        BvKind::Lambda => (lo..=n).map(|k| (k, t.von_mangoldt(k))).collect(),
        BvKind::E3 { delta1 } => {
            let params = crate::chen::ChenParams::new(n, delta1)?;
            let e3 = crate::chen::E3Weights::new(&params)?;
            (lo..=n).map(|k| (k, e3.lambda_e3(k, t))).collect()
        }
        BvKind::Rough { sift } => {
            let model = crate::sieves::CramerModel::new(sift);
            (lo..=n).map(|k| (k, model.eval(k, t))).collect()
        }
    })
}

/// `Σ_{q ≤ Q} max_{(a,q)=1} |Σ_{N/2<n≤N} w(n) 𝔲_P(n ā; q)|` via residue tallies.
pub fn bv_discrepancy(kind: BvKind, n: u64, q_max: u64, p_level: u64, t: &FactorTable) -> Result<f64> {
    if q_max == 0 || q_max * q_max > n {
        return invalid(format!("need 1 <= Q <= N^(1/2) (Q = {q_max}, N = {n})"));
    }
    if p_level == 0 || p_level > q_max {
        return invalid(format!("need 1 <= P <= Q (P = {p_level}, Q = {q_max})"));
    }
    if n > t.limit() {
        return invalid(format!("N = {n} exceeds the factor table"));
    }
    let w = bv_weights(kind, n, t)?;
    let per_q: Vec<f64> = (1..=q_max)
        .into_par_iter()
        .map(|q| -> Result<f64> {
            let mut tally = vec![Vec::<f64>::new(); q as usize];
            for &(k, v) in &w {
                tally[(k % q) as usize].push(v);
            }
            let tally: Vec<f64> = tally.iter().map(|xs| pairwise_sum(xs)).collect();
            let low: Vec<DirichletCharacter> =
                characters_mod(q)?.into_iter().filter(|c| c.conductor() <= p_level).collect();
            let sums: Vec<Complex64> = low
                .iter()
                .map(|c| {
                    let terms: Vec<Complex64> = (0..q).map(|r| c.value(r) * tally[r as usize]).collect();
                    pairwise_sum_complex(&terms)
                })
                .collect();
            let ph = phi(q) as f64;
            let mut best = 0.0f64;
            for a in 0..q {
                if gcd(a, q) != 1 && q > 1 {
                    continue;
                }
                let corr: Vec<Complex64> = low.iter().zip(&sums).map(|(c, s)| c.value(a).conj() * s).collect();
                let v = Complex64::new(tally[a as usize], 0.0) - pairwise_sum_complex(&corr) / ph;
                best = best.max(v.norm());
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&per_q))
}
