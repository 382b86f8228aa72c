//! Cramér models, beta and linear sieve weights, the Chen main-sieves, and
//! exact identities for divisor weights.
//!
//! Sifting ranges are half-open integer ranges `[lo, hi)` of primes. Real cut
//! points `y` enter as `p < y  ⇔  p < ⌈y⌉` and `p ≤ y  ⇔  p < ⌊y⌋ + 1`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{phi, primes_in, FactorTable};
use crate::error::{invalid, Error, Result};
use crate::numeric::{integrate, pairwise_sum, EULER_GAMMA};

/// Integer bound for `p < y`.
pub fn below(y: f64) -> u64 {
    y.ceil().max(0.0) as u64
}

/// Integer bound for `p ≤ y`.
pub fn at_most(y: f64) -> u64 {
    y.floor().max(0.0) as u64 + 1
}

/// `∏_{lo ≤ p < hi} (1 − 1/p)^{-1}`.
pub fn mertens_product(lo: u64, hi: u64) -> f64 {
    primes_in(lo, hi).iter().map(|&p| p as f64 / (p as f64 - 1.0)).product()
}

/// The Cramér model `r_P`: `∏_{p<P}(1−1/p)^{-1}` on `P`-rough integers, else 0.
#[derive(Clone, Debug)]
pub struct CramerModel {
    sift: u64,
    norm: f64,
}

impl CramerModel {
    pub fn new(sift: u64) -> Self {
        CramerModel { sift, norm: mertens_product(0, sift) }
    }

    pub fn normalization(&self) -> f64 {
        self.norm
    }

    #[inline]
    pub fn is_rough(&self, n: u64, t: &FactorTable) -> bool {
        n == 1 || t.spf(n) as u64 >= self.sift
    }

    #[inline]
    pub fn eval(&self, n: u64, t: &FactorTable) -> f64 {
        if self.is_rough(n, t) {
            self.norm
        } else {
            0.0
        }
    }
}

fn check_table(n: u64, t: &FactorTable) -> Result<()> {
    if n == 0 || n > t.limit() {
        Err(Error::OutOfRange { value: n, limit: t.limit() })
    } else {
        Ok(())
    }
}

pub fn cramer(n: u64, p: u64, t: &FactorTable) -> Result<f64> {
    check_table(n, t)?;
    if p < 2 {
        return invalid("sifting bound must be at least 2");
    }
    Ok(CramerModel::new(p).eval(n, t))
}

/// `r_{[Q,P)}(n)`: normalised indicator of having no prime factor in `[Q, P)`.
pub fn cramer_interval(n: u64, q: u64, p: u64, t: &FactorTable) -> Result<f64> {
    check_table(n, t)?;
    if q > p {
        return invalid(format!("Q = {q} exceeds P = {p}"));
    }
    let hit = t.factorize_unchecked(n).iter().any(|&(r, _)| r >= q && r < p);
    Ok(if hit { 0.0 } else { mertens_product(q, p) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    BetaLower,
    BetaUpper,
    LinearLower,
    LinearUpper,
    MainOmega,
    #[serde(rename = "main_Omega")]
    MainBigOmega,
    #[serde(rename = "main_OmegaPrime")]
    MainBigOmegaPrime,
    IntervalLower,
    IntervalUpper,
}

/// Block layout of a linear-sieve piece: primes in `[p_lo, z)` are grouped
/// into blocks `[p_lo^{(1+η)^j}, p_lo^{(1+η)^{j+1}})`; `signature` lists
/// `(block index, number of primes from that block)` for every support point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub p_lo: u64,
    pub z: u64,
    pub eta: f64,
    pub signature: Vec<(u32, u32)>,
}

/// A sparse divisor weight `d ↦ λ(d)` on squarefree `d` with prime factors in
/// `[sift_lo, sift_hi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DivisorWeight {
    pub kind: WeightKind,
    pub level: f64,
    pub sift_lo: u64,
    pub sift_hi: u64,
    pub entries: BTreeMap<u64, f64>,
    /// `∏(1 − 1/p)^{-1}` over the sifting range of the sieve.
    pub normalization: f64,
    pub blocks: Option<BlockInfo>,
}

#[derive(Serialize, Deserialize)]
struct WeightSidecar {
    kind: WeightKind,
    level: f64,
    sift_lo: u64,
    sift_hi: u64,
    normalization: f64,
}

/// Support size up to which densities are summed in exact rationals.
pub const EXACT_DENSITY_LIMIT: usize = 100_000;

impl DivisorWeight {
    pub fn trivial(kind: WeightKind, level: f64, sift_lo: u64, sift_hi: u64) -> Self {
        DivisorWeight {
            kind,
            level,
            sift_lo,
            sift_hi,
            entries: BTreeMap::from([(1, 1.0)]),
            normalization: mertens_product(sift_lo, sift_hi),
            blocks: None,
        }
    }

    pub fn get(&self, d: u64) -> f64 {
        self.entries.get(&d).copied().unwrap_or(0.0)
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    /// `Σ_{d | n} λ(d)`.
    pub fn divisor_sum(&self, n: u64, t: &FactorTable) -> f64 {
        let ps: Vec<u64> = t
            .factorize_unchecked(n)
            .into_iter()
            .map(|(p, _)| p)
            .filter(|&p| p >= self.sift_lo && p < self.sift_hi)
            .collect();
        let mut acc = 0.0;
        for mask in 0u32..(1 << ps.len()) {
            let mut d = 1u64;
            for (i, &p) in ps.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    d *= p;
                }
            }
            acc += self.get(d);
        }
        acc
    }

    /// `normalization · Σ_{d | n} λ(d)`.
    pub fn eval(&self, n: u64, t: &FactorTable) -> f64 {
        self.normalization * self.divisor_sum(n, t)
    }

    /// `Σ_d λ(d)/φ(d)` (unnormalised), exact for supports up to
    /// [`EXACT_DENSITY_LIMIT`] and pairwise floating point beyond.
    pub fn density_sum(&self) -> f64 {
        if self.entries.len() <= EXACT_DENSITY_LIMIT && self.entries.values().all(|v| (2.0 * v).fract() == 0.0) {
            let mut acc = BigRational::zero();
            for (&d, &v) in &self.entries {
                let num = BigInt::from((2.0 * v) as i64);
                acc += BigRational::new(num, BigInt::from(2 * phi(d)));
            }
            acc.to_f64().unwrap_or(f64::NAN)
        } else {
            let terms: Vec<f64> = self.entries.iter().map(|(&d, &v)| v / phi(d) as f64).collect();
            pairwise_sum(&terms)
        }
    }

    /// `𝒱(λ) = normalization · Σ λ(d)/φ(d)`.
    pub fn density(&self) -> f64 {
        self.normalization * self.density_sum()
    }

    /// Write `(d, lambda)` rows to `csv_path` and the metadata to `json_path`.
    pub fn save(&self, csv_path: &Path, json_path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(csv_path)?;
        w.write_record(["d", "lambda"])?;
        for (d, v) in &self.entries {
            w.write_record([d.to_string(), format_float(*v)])?;
        }
        w.flush()?;
        let side = WeightSidecar {
            kind: self.kind,
            level: self.level,
            sift_lo: self.sift_lo,
            sift_hi: self.sift_hi,
            normalization: self.normalization,
        };
        let mut f = File::create(json_path)?;
        serde_json::to_writer_pretty(&mut f, &side)?;
        f.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(csv_path: &Path, json_path: &Path) -> Result<Self> {
        let side: WeightSidecar = serde_json::from_reader(File::open(json_path)?)?;
        let mut entries = BTreeMap::new();
        let mut r = csv::Reader::from_path(csv_path)?;
        for rec in r.records() {
            let rec = rec?;
            let d: u64 = rec[0].parse().map_err(|e| Error::Format(format!("bad d: {e}")))?;
            let v: f64 = rec[1].parse().map_err(|e| Error::Format(format!("bad lambda: {e}")))?;
            entries.insert(d, v);
        }
        Ok(DivisorWeight {
            kind: side.kind,
            level: side.level,
            sift_lo: side.sift_lo,
            sift_hi: side.sift_hi,
            entries,
            normalization: side.normalization,
            blocks: None,
        })
    }
}

/// Shortest round-trip decimal form.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

/// Cap on generated support sizes.
pub const MAX_SUPPORT: usize = 5_000_000;

/// Depth-first enumeration of `d = p_1 ⋯ p_n` (`p_1 > ⋯ > p_n`, primes given in
/// decreasing order) such that `accept(prefix blocks, m)` holds for every
/// constrained position `m`.
fn enumerate_sets<F>(primes_desc: &[u64], accept: &F) -> Result<Vec<Vec<usize>>>
where
    F: Fn(&[usize]) -> bool,
{
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    while let Some(prefix) = stack.pop() {
        let start = prefix.last().map_or(0, |&i| i + 1);
        for i in start..primes_desc.len() {
            let mut next = prefix.clone();
            next.push(i);
            if accept(&next) {
                out.push(next.clone());
                if out.len() > MAX_SUPPORT {
                    return Err(Error::Capacity { requested: out.len() as u64, cap: MAX_SUPPORT as u64 });
                }
                stack.push(next);
            }
        }
    }
    Ok(out)
}

fn weight_from_sets(
    sets: &[Vec<usize>],
    primes_desc: &[u64],
    kind: WeightKind,
    level: f64,
    lo: u64,
    hi: u64,
) -> DivisorWeight {
    let mut entries = BTreeMap::new();
    for s in sets {
        let d: u64 = s.iter().map(|&i| primes_desc[i]).product();
        entries.insert(d, if s.len() % 2 == 0 { 1.0 } else { -1.0 });
    }
    DivisorWeight {
        kind,
        level,
        sift_lo: lo,
        sift_hi: hi,
        entries,
        normalization: mertens_product(lo, hi),
        blocks: None,
    }
}

/// Membership test for the beta-sieve sets: `d = p_1 ⋯ p_n` belongs to `𝒟⁺`
/// (`upper`) iff `p_1⋯p_m · p_m^β < D` for all odd `m`, and to `𝒟⁻` iff the
/// same holds for all even `m`.
pub fn beta_member(primes_desc: &[u64], beta: f64, level: f64, upper: bool) -> bool {
    let mut log_prod = 0.0;
    let ln_d = level.ln();
    for (k, &p) in primes_desc.iter().enumerate() {
        let m = k + 1;
        let lp = (p as f64).ln();
        log_prod += lp;
        let constrained = if upper { m % 2 == 1 } else { m % 2 == 0 };
        if constrained && log_prod + beta * lp >= ln_d {
            return false;
        }
    }
    true
}

/// Lower and upper beta-sieve weights over primes in `[p_lo, p_hi)` at level `D`.
pub fn beta_weights(beta: f64, p_lo: u64, p_hi: u64, level: f64) -> Result<(DivisorWeight, DivisorWeight)> {
    if p_lo < 2 || p_lo >= p_hi {
        return invalid(format!("need 2 <= P_lo < P_hi (got [{p_lo}, {p_hi}))"));
    }
    if level < 1.0 || beta < 1.0 {
        return invalid(format!("need D >= 1 and β >= 1 (D = {level}, β = {beta})"));
    }
    let mut primes = primes_in(p_lo, p_hi);
    if primes.is_empty() {
        return invalid(format!("no primes in [{p_lo}, {p_hi})"));
    }
    primes.reverse();
    let mut weights = Vec::new();
    for upper in [false, true] {
        let accept = |s: &[usize]| {
            let ps: Vec<u64> = s.iter().map(|&i| primes[i]).collect();
            beta_member(&ps, beta, level, upper)
        };
        let sets = enumerate_sets(&primes, &accept)?;
        let kind = if upper { WeightKind::BetaUpper } else { WeightKind::BetaLower };
        weights.push(weight_from_sets(&sets, &primes, kind, level, p_lo, p_hi));
    }
    let upper = weights.pop().unwrap();
    let lower = weights.pop().unwrap();
    Ok((lower, upper))
}

/// Parameters of Definition-style sieve hierarchy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SieveSpec {
    pub n: u64,
    pub delta1: f64,
    pub beta: f64,
    pub p0: f64,
    pub p1: f64,
    pub d1: f64,
    pub dm1: f64,
    pub dm2: f64,
    pub r0: f64,
    pub r1: f64,
    pub r_tilde: f64,
}

impl SieveSpec {
    /// All parameters as powers of `N` with the exponents built from `δ₁`.
    pub fn from_exponents(n: u64, delta1: f64, beta: f64) -> Self {
        let nf = n as f64;
        let d = delta1;
        SieveSpec {
            n,
            delta1,
            beta,
            p0: nf.powf(d),
            p1: nf.powf(d.powi(4)),
            d1: nf.powf(d.powi(3) / 100.0),
            dm1: nf.powf(1.0 / 3.0 - d),
            dm2: nf.powf(1.0 / 6.0 - d),
            r0: nf.powf(d.powi(3)),
            r1: nf.powf(d.powi(4) / 100.0),
            r_tilde: nf.powf(2.0 * d.powi(5)),
        }
    }

    /// Hand-tuned parameters for desk-scale runs at `N = 10^6`.
    pub fn desk() -> Self {
        SieveSpec {
            n: 1_000_000,
            delta1: 0.05,
            beta: 2.0,
            p0: 100.0,
            p1: 10.0,
            d1: 1000.0,
            dm1: 1000.0,
            dm2: 300.0,
            r0: 50.0,
            r1: 5.0,
            r_tilde: 3.0,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    /// Relations of the chain `D_{M,1} > D_{M,2} > P₀ > R₀ > D₁ > P₁ > R₁ > R̃`
    /// that fail, as readable strings.
    pub fn hierarchy_violations(&self) -> Vec<String> {
        let chain = [
            ("D_M1", self.dm1),
            ("D_M2", self.dm2),
            ("P0", self.p0),
            ("R0", self.r0),
            ("D1", self.d1),
            ("P1", self.p1),
            ("R1", self.r1),
            ("R_tilde", self.r_tilde),
        ];
        chain
            .windows(2)
            .filter(|w| w[0].1 <= w[1].1)
            .map(|w| format!("{} = {} is not greater than {} = {}", w[0].0, w[0].1, w[1].0, w[1].1))
            .collect()
    }

    pub fn check_hierarchy(&self) -> Result<()> {
        let v = self.hierarchy_violations();
        if v.is_empty() {
            Ok(())
        } else {
            invalid(format!("parameter hierarchy violated: {}", v.join("; ")))
        }
    }

    /// `s = log D₁ / log P₁`.
    pub fn sieve_ratio(&self) -> f64 {
        self.d1.ln() / self.p1.ln()
    }
}

/// Lower and upper pre-sieves: beta sieves over `5 ≤ p < P₁` at level `D₁`,
/// gated by `(n, 6) = 1` and normalised by `∏_{p<P₁}(1−1/p)^{-1}`.
#[derive(Clone, Debug)]
pub struct Presieve {
    pub lower: DivisorWeight,
    pub upper: DivisorWeight,
    sift: u64,
    norm: f64,
}

impl Presieve {
    pub fn new(spec: &SieveSpec) -> Result<Self> {
        let sift = below(spec.p1);
        let (lower, upper) = if sift > 5 && !primes_in(5, sift).is_empty() {
            beta_weights(spec.beta, 5, sift, spec.d1)?
        } else {
            (
                DivisorWeight::trivial(WeightKind::BetaLower, spec.d1, 5, sift.max(5)),
                DivisorWeight::trivial(WeightKind::BetaUpper, spec.d1, 5, sift.max(5)),
            )
        };
        Ok(Presieve { lower, upper, sift, norm: mertens_product(0, sift.max(4)) })
    }

    /// `∏_{p<P₁}(1−1/p)^{-1}` (always including 2 and 3).
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    pub fn sift_bound(&self) -> u64 {
        self.sift
    }

    /// Lower pre-sieve `ω(n)`.
    pub fn omega(&self, n: u64, t: &FactorTable) -> f64 {
        presieve_eval(n, &self.lower, t)
    }

    /// Upper pre-sieve `Ω(n)`.
    pub fn big_omega(&self, n: u64, t: &FactorTable) -> f64 {
        presieve_eval(n, &self.upper, t)
    }

    pub fn eval(&self, upper: bool, n: u64, t: &FactorTable) -> f64 {
        if upper {
            self.big_omega(n, t)
        } else {
            self.omega(n, t)
        }
    }

    /// Values on `1..=len` (index `n − 1`).
    pub fn table(&self, upper: bool, len: u64, t: &FactorTable) -> Vec<f64> {
        (1..=len).map(|n| self.eval(upper, n, t)).collect()
    }
}

/// `1_{(n,6)=1} ∏_{p<P₁}(1−1/p)^{-1} Σ_{d|n} λ(d)` for a weight over `[5, P₁)`.
pub fn presieve_eval(n: u64, w: &DivisorWeight, t: &FactorTable) -> f64 {
    if n % 2 == 0 || n % 3 == 0 {
        return 0.0;
    }
    presieve_eval_ungated(n, w, t)
}

/// [`presieve_eval`] without the `(n, 6) = 1` gate.
pub fn presieve_eval_ungated(n: u64, w: &DivisorWeight, t: &FactorTable) -> f64 {
    mertens_product(0, w.sift_hi.max(4)) * w.divisor_sum(n, t)
}

/// Right side of the fundamental-lemma bound for the pre-sieves:
/// `∏_{p<P₁}(1−1/p)^{-1} τ(n)² Σ_{r > (s−β−1)/2} 4^{-r} 1_{(n,𝒫_r)=1}`, where
/// `𝒫_r` is the product of primes in `[5, P₁^{((β−1)/(β+1))^r}]`.
pub fn fundlem_gap(n: u64, spec: &SieveSpec, t: &FactorTable) -> Result<f64> {
    check_table(n, t)?;
    let s = spec.sieve_ratio();
    let beta = spec.beta;
    let a = (beta - 1.0) / (beta + 1.0);
    let threshold = (s - beta - 1.0) / 2.0;
    let mut r = if threshold < 1.0 { 1 } else { threshold.floor() as i32 + 1 };
    let fac = t.factorize_unchecked(n);
    let tau: f64 = fac.iter().map(|&(_, e)| e as f64 + 1.0).product();
    let ln_p1 = spec.p1.ln();
    let mut series = 0.0;
    loop {
        let y = (ln_p1 * a.powi(r)).exp();
        if y < 5.0 {
            // every later 𝒫_r is empty too: Σ_{k≥r} 4^{-k} = 4^{-r}·4/3
            series += 4f64.powi(-r) * 4.0 / 3.0;
            break;
        }
        let coprime = fac.iter().all(|&(p, _)| !(p >= 5 && (p as f64) <= y));
        if coprime {
            series += 4f64.powi(-r);
        }
        r += 1;
    }
    Ok(mertens_product(0, below(spec.p1).max(4)) * tau * tau * series)
}

/// Tabulated linear-sieve functions `f` and `F` on `[1, 7]`.
pub struct LinearSieveFunctions {
    h: f64,
    f: Vec<f64>,
    big_f: Vec<f64>,
}

/// Grid step for the delay-differential tabulation.
pub const FF_STEP: f64 = 1e-4;

impl LinearSieveFunctions {
    fn build() -> Self {
        let per_unit = (1.0 / FF_STEP).round() as usize;
        let h = 1.0 / per_unit as f64;
        let len = 6 * per_unit + 1;
        let two_eg = 2.0 * EULER_GAMMA.exp();
        let s_at = |i: usize| 1.0 + i as f64 * h;
        let mut f = vec![0.0; len];
        let mut big_f = vec![0.0; len];
        for i in 0..len {
            let s = s_at(i);
            if s <= 3.0 + 1e-12 {
                big_f[i] = two_eg / s;
            }
            if (2.0..=4.0 + 1e-12).contains(&s) {
                f[i] = two_eg * (s - 1.0).ln() / s;
            }
        }
        // sF(s) = 3F(3) + ∫_3^s f(t−1) dt,  sf(s) = 4f(4) + ∫_4^s F(t−1) dt
        let i3 = 2 * per_unit;
        let i4 = 3 * per_unit;
        let mut acc_big = 3.0 * big_f[i3];
        let mut acc_small = 4.0 * f[i4];
        for i in i3 + 1..len {
            acc_big += 0.5 * h * (f[i - per_unit] + f[i - 1 - per_unit]);
            big_f[i] = acc_big / s_at(i);
            if i > i4 {
                acc_small += 0.5 * h * (big_f[i - per_unit] + big_f[i - 1 - per_unit]);
                f[i] = acc_small / s_at(i);
            }
        }
        LinearSieveFunctions { h, f, big_f }
    }

    pub fn get() -> &'static LinearSieveFunctions {
        static TABLE: OnceLock<LinearSieveFunctions> = OnceLock::new();
        TABLE.get_or_init(Self::build)
    }

    /// `(f(s), F(s))` for `1 ≤ s ≤ 7`; closed forms where available, linear
    /// interpolation of the tabulated solution elsewhere.
    pub fn eval(&self, s: f64) -> Result<(f64, f64)> {
        if !(1.0..=7.0).contains(&s) {
            return invalid(format!("s = {s} outside [1, 7]"));
        }
        let two_eg = 2.0 * EULER_GAMMA.exp();
        let interp = |tab: &[f64]| {
            let x = (s - 1.0) / self.h;
            let i = (x.floor() as usize).min(tab.len() - 2);
            let w = x - i as f64;
            tab[i] * (1.0 - w) + tab[i + 1] * w
        };
        let f = if s <= 2.0 {
            0.0
        } else if s <= 4.0 {
            two_eg * (s - 1.0).ln() / s
        } else {
            interp(&self.f)
        };
        let big_f = if s <= 3.0 { two_eg / s } else { interp(&self.big_f) };
        Ok((f, big_f))
    }
}

pub fn linear_f_big_f(s: f64) -> Result<(f64, f64)> {
    LinearSieveFunctions::get().eval(s)
}

/// Default block width exponent for the well-factorable construction.
pub const DEFAULT_ETA: f64 = 0.25;

fn block_index(p: u64, p_lo: u64, eta: f64) -> u32 {
    if p_lo < 2 {
        return 0;
    }
    let ratio = (p as f64).ln() / (p_lo as f64).ln();
    let j = (ratio.ln() / (1.0 + eta).ln() + 1e-12).floor();
    j.max(0.0) as u32
}

fn block_floor(j: u32, p_lo: u64, eta: f64) -> f64 {
    ((p_lo as f64).ln() * (1.0 + eta).powi(j as i32)).exp()
}

/// Linear-sieve weights over `[P, z)` at level `D`, split into well-factorable
/// blocks. Membership is decided at block level: with `B(p)` the lower end of
/// the block containing `p` and `D₀ = D^{1/(1+η)}`, `d = p_1⋯p_n` is kept in
/// the lower (upper) sieve iff `B(p_1)⋯B(p_m)·B(p_m)² < D₀` for every even
/// (odd) `m`. Each returned piece collects the support points of one block
/// signature and equals `μ(d)` there.
pub fn linear_sieve_weights(p_lo: u64, z: u64, level: f64) -> Result<(Vec<DivisorWeight>, Vec<DivisorWeight>)> {
    if (z as f64) > level.sqrt() * (1.0 + 1e-12) && z > p_lo {
        return invalid(format!("z = {z} exceeds √D = {}", level.sqrt()));
    }
    linear_sieve_weights_eta(p_lo, z, level, DEFAULT_ETA)
}

pub fn linear_sieve_weights_eta(
    p_lo: u64,
    z: u64,
    level: f64,
    eta: f64,
) -> Result<(Vec<DivisorWeight>, Vec<DivisorWeight>)> {
    if eta <= 0.0 {
        return invalid("η must be positive");
    }
    let p_lo = p_lo.max(2);
    let mut primes = if z > p_lo { primes_in(p_lo, z) } else { Vec::new() };
    if primes.is_empty() {
        let mut lo = DivisorWeight::trivial(WeightKind::LinearLower, level, p_lo, z.max(p_lo));
        let mut up = DivisorWeight::trivial(WeightKind::LinearUpper, level, p_lo, z.max(p_lo));
        let info = BlockInfo { p_lo, z: z.max(p_lo), eta, signature: Vec::new() };
        lo.blocks = Some(info.clone());
        up.blocks = Some(info);
        return Ok((vec![lo], vec![up]));
    }
    primes.reverse();
    let blocks: Vec<u32> = primes.iter().map(|&p| block_index(p, p_lo, eta)).collect();
    let floors: Vec<f64> = blocks.iter().map(|&j| block_floor(j, p_lo, eta).ln()).collect();
    let ln_d0 = level.ln() / (1.0 + eta);
    let mut out = Vec::new();
    for upper in [false, true] {
        let accept = |s: &[usize]| {
            let mut acc = 0.0;
            for (k, &i) in s.iter().enumerate() {
                acc += floors[i];
                let m = k + 1;
                let constrained = if upper { m % 2 == 1 } else { m % 2 == 0 };
                if constrained && acc + 2.0 * floors[i] >= ln_d0 {
                    return false;
                }
            }
            true
        };
        let sets = enumerate_sets(&primes, &accept)?;
        let mut groups: BTreeMap<Vec<(u32, u32)>, BTreeMap<u64, f64>> = BTreeMap::new();
        for s in &sets {
            let mut sig: BTreeMap<u32, u32> = BTreeMap::new();
            for &i in s {
                *sig.entry(blocks[i]).or_default() += 1;
            }
            let sig: Vec<(u32, u32)> = sig.into_iter().rev().collect();
            let d: u64 = s.iter().map(|&i| primes[i]).product();
            groups.entry(sig).or_default().insert(d, if s.len() % 2 == 0 { 1.0 } else { -1.0 });
        }
        let kind = if upper { WeightKind::LinearUpper } else { WeightKind::LinearLower };
        let norm = mertens_product(p_lo, z);
        let pieces: Vec<DivisorWeight> = groups
            .into_iter()
            .map(|(signature, entries)| DivisorWeight {
                kind,
                level,
                sift_lo: p_lo,
                sift_hi: z,
                entries,
                normalization: norm,
                blocks: Some(BlockInfo { p_lo, z, eta, signature }),
            })
            .collect();
        out.push(pieces);
    }
    let upper = out.pop().unwrap();
    let lower = out.pop().unwrap();
    Ok((lower, upper))
}

/// Sum of weights with matching sifting data.
pub fn combine(pieces: &[DivisorWeight], kind: WeightKind) -> DivisorWeight {
    let first = &pieces[0];
    let mut entries: BTreeMap<u64, f64> = BTreeMap::new();
    for w in pieces {
        for (&d, &v) in &w.entries {
            *entries.entry(d).or_default() += v;
        }
    }
    entries.retain(|_, v| *v != 0.0);
    DivisorWeight {
        kind,
        level: first.level,
        sift_lo: first.sift_lo,
        sift_hi: first.sift_hi,
        entries,
        normalization: first.normalization,
        blocks: None,
    }
}

/// Split one block piece `w` as `γ₁ ⋆ γ₂` with `γ₁` supported on `[1, R]` and
/// `γ₂` on `[1, S]` by assigning whole blocks to either side. Coefficients of
/// both factors are `±1`, so they are bounded by `τ(d)^0`.
pub fn factorable_split(w: &DivisorWeight, r: f64, s: f64) -> Result<(DivisorWeight, DivisorWeight)> {
    let mk = |entries: BTreeMap<u64, f64>, level: f64| DivisorWeight {
        kind: w.kind,
        level,
        sift_lo: w.sift_lo,
        sift_hi: w.sift_hi,
        entries,
        normalization: w.normalization,
        blocks: None,
    };
    if w.entries.len() == 1 && w.get(1) == 1.0 {
        return Ok((mk(BTreeMap::from([(1, 1.0)]), r), mk(BTreeMap::from([(1, 1.0)]), s)));
    }
    let info = w.blocks.as_ref().ok_or_else(|| Error::SplitInfeasible("weight carries no block structure".into()))?;
    if r * s < w.level * (1.0 - 1e-12) {
        return invalid(format!("R·S = {} is below the level {}", r * s, w.level));
    }
    let primes = primes_in(info.p_lo, info.z);
    let block_primes =
        |j: u32| -> Vec<u64> { primes.iter().copied().filter(|&p| block_index(p, info.p_lo, info.eta) == j).collect() };
    let groups: Vec<(Vec<u64>, u32)> = info.signature.iter().map(|&(j, k)| (block_primes(j), k)).collect();
    let max_logs: Vec<f64> =
        groups.iter().map(|(ps, k)| ps.iter().rev().take(*k as usize).map(|&p| (p as f64).ln()).sum()).collect();
    let g = groups.len();
    let (ln_r, ln_s) = (r.ln() + 1e-12, s.ln() + 1e-12);
    let mask = (0u64..1 << g).find(|&mask| {
        let (mut a, mut b) = (0.0, 0.0);
        for (i, &l) in max_logs.iter().enumerate() {
            if mask >> i & 1 == 0 {
                a += l;
            } else {
                b += l;
            }
        }
        a <= ln_r && b <= ln_s
    });
    let mask = mask.ok_or_else(|| {
        Error::SplitInfeasible(format!("no assignment of blocks {:?} fits R = {r}, S = {s}", info.signature))
    })?;
    let side = |want: u64| -> BTreeMap<u64, f64> {
        let mut acc: BTreeMap<u64, f64> = BTreeMap::from([(1, 1.0)]);
        for (i, (ps, k)) in groups.iter().enumerate() {
            if mask >> i & 1 != want {
                continue;
            }
            let subsets = k_subsets(ps, *k as usize);
            let mut next = BTreeMap::new();
            for (&d, &v) in &acc {
                for &(prod, sign) in &subsets {
                    next.insert(d * prod, v * sign);
                }
            }
            acc = next;
        }
        acc
    };
    Ok((mk(side(0), r), mk(side(1), s)))
}

fn k_subsets(ps: &[u64], k: usize) -> Vec<(u64, f64)> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > ps.len() {
        return out;
    }
    loop {
        let prod: u64 = idx.iter().map(|&i| ps[i]).product();
        out.push((prod, if k % 2 == 0 { 1.0 } else { -1.0 }));
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + ps.len() - k {
                break;
            }
            if i == 0 && idx[0] == ps.len() - k {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Dirichlet convolution of two sparse weights.
pub fn convolve_weights(a: &BTreeMap<u64, f64>, b: &BTreeMap<u64, f64>) -> BTreeMap<u64, f64> {
    let mut out: BTreeMap<u64, f64> = BTreeMap::new();
    for (&x, &u) in a {
        for (&y, &v) in b {
            *out.entry(x * y).or_default() += u * v;
        }
    }
    out.retain(|_, v| *v != 0.0);
    out
}

/// Cut points and levels of the Chen main-sieves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainCuts {
    /// `N^{1/10}`.
    pub lo: f64,
    /// `N^{1/3 − δ₁}`.
    pub mid: f64,
    /// `N^{1/6}`.
    pub hi: f64,
    /// `N^{1/2 − 2δ₁}`.
    pub level: f64,
    /// `N^{1/4}`, level of the interval sieves.
    pub interval_level: f64,
}

impl MainCuts {
    pub fn from_spec(spec: &SieveSpec) -> Self {
        let nf = spec.n as f64;
        MainCuts {
            lo: nf.powf(0.1),
            mid: nf.powf(1.0 / 3.0 - spec.delta1),
            hi: nf.powf(1.0 / 6.0),
            level: nf.powf(0.5 - 2.0 * spec.delta1),
            interval_level: nf.powf(0.25),
        }
    }

    /// Desk cut points for `SieveSpec::desk()`: the main range sits above `P₁ = 10`.
    pub fn desk() -> Self {
        MainCuts { lo: 40.0, mid: 150.0, hi: 80.0, level: 1e5, interval_level: 1e8 }
    }
}

#[derive(Clone, Debug)]
pub struct MainSieves {
    pub omega_m: DivisorWeight,
    pub big_omega_m: DivisorWeight,
    pub big_omega_m_prime: DivisorWeight,
    pub interval_lower: DivisorWeight,
    pub interval_upper: DivisorWeight,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MainDensities {
    pub omega_m: f64,
    pub big_omega_m: f64,
    pub big_omega_m_prime: f64,
    pub interval_lower: f64,
    pub interval_upper: f64,
}

fn linear_combined(lo: u64, hi: u64, level: f64, upper: bool, kind: WeightKind) -> Result<DivisorWeight> {
    let (l, u) = linear_sieve_weights_eta(lo, hi, level.max(1.0), DEFAULT_ETA)?;
    let mut w = combine(if upper { &u } else { &l }, kind);
    w.sift_lo = lo;
    w.sift_hi = hi.max(lo);
    w.normalization = mertens_product(lo, hi);
    Ok(w)
}

impl MainSieves {
    /// Assemble `ω_M`, `Ω_M`, `Ω′_M` and the interval sieves on `[P₁, P₀)`.
    pub fn new(spec: &SieveSpec, cuts: &MainCuts) -> Result<Self> {
        let p1 = spec.p1;
        if !(p1 <= cuts.lo && cuts.lo < cuts.hi && cuts.hi < cuts.mid) {
            return invalid(format!(
                "main-sieve cut points must satisfy P1 <= N^(1/10) < N^(1/6) < N^(1/3-δ1) (got {p1}, {}, {}, {})",
                cuts.lo, cuts.hi, cuts.mid
            ));
        }
        if spec.p0 <= p1 || cuts.level < 1.0 || cuts.interval_level < 1.0 {
            return invalid("main-sieve levels must be at least 1 and P0 > P1");
        }
        let a = below(p1);
        let b = below(cuts.lo);
        let lower = linear_combined(a, b, cuts.level, false, WeightKind::MainOmega)?;
        let mut entries = lower.entries.clone();
        for p in primes_in(below(cuts.lo).min(b).max(b), below(cuts.mid)) {
            if (p as f64) < cuts.lo {
                continue;
            }
            let up = linear_combined(a, b, cuts.level / p as f64, true, WeightKind::MainOmega)?;
            for (&d, &v) in &up.entries {
                *entries.entry(d * p).or_default() -= 0.5 * v;
            }
        }
        entries.retain(|_, v| *v != 0.0);
        let omega_m = DivisorWeight {
            kind: WeightKind::MainOmega,
            level: cuts.level,
            sift_lo: a,
            sift_hi: below(cuts.mid),
            entries,
            normalization: mertens_product(a, b),
            blocks: None,
        };
        let hi_lo = at_most(p1);
        let big_omega_m = linear_combined(hi_lo, at_most(cuts.hi), cuts.level, true, WeightKind::MainBigOmega)?;
        let big_omega_m_prime = linear_combined(a, b, cuts.level, true, WeightKind::MainBigOmegaPrime)?;
        let c = below(spec.p0);
        let interval_lower = linear_combined(a, c, cuts.interval_level, false, WeightKind::IntervalLower)?;
        let interval_upper = linear_combined(a, c, cuts.interval_level, true, WeightKind::IntervalUpper)?;
        Ok(MainSieves { omega_m, big_omega_m, big_omega_m_prime, interval_lower, interval_upper })
    }

    pub fn densities(&self) -> MainDensities {
        MainDensities {
            omega_m: self.omega_m.density(),
            big_omega_m: self.big_omega_m.density(),
            big_omega_m_prime: self.big_omega_m_prime.density(),
            interval_lower: self.interval_lower.density(),
            interval_upper: self.interval_upper.density(),
        }
    }
}

pub fn main_sieves(spec: &SieveSpec, cuts: &MainCuts) -> Result<(MainSieves, MainDensities)> {
    let m = MainSieves::new(spec, cuts)?;
    let d = m.densities();
    Ok((m, d))
}

/// Both sides of the divisor-sum identity
/// `g(e) Σ_{d|𝒫/e} λ(de) g(d) = ∏_{p|𝒫}(1−g(p)) μ(e) h(e) Σ_{b|𝒫} θ(b) h(b) μ((b,e))/h((b,e))`
/// with `h = g/(1−g)` and `θ = 1 ⋆ λ`. `g` is given by its values at the
/// primes of `𝒫` (listed in `primes`).
pub fn divisor_sum_identity_sides(
    lambda: &BTreeMap<u64, f64>,
    primes: &[u64],
    g: &[f64],
    e: u64,
) -> Result<(f64, f64)> {
    let k = primes.len();
    if g.len() != k {
        return invalid("one value of g per prime is required");
    }
    if g.iter().any(|&x| !(0.0..1.0).contains(&x)) {
        return invalid("g(p) must lie in [0, 1)");
    }
    let mut sorted = primes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != k {
        return invalid("𝒫 must be squarefree");
    }
    let full: u64 = primes.iter().product();
    if e == 0 || full % e != 0 {
        return invalid(format!("e = {e} does not divide 𝒫 = {full}"));
    }
    if lambda.keys().any(|&d| full % d != 0) {
        return invalid("λ must be supported on divisors of 𝒫");
    }
    let mask_of = |x: u64| -> u32 { (0..k).filter(|&i| x % primes[i] == 0).fold(0, |m, i| m | 1 << i) };
    let val = |mask: u32| -> u64 { (0..k).filter(|&i| mask >> i & 1 == 1).map(|i| primes[i]).product() };
    let gm = |mask: u32| -> f64 { (0..k).filter(|&i| mask >> i & 1 == 1).map(|i| g[i]).product() };
    let hm = |mask: u32| -> f64 { (0..k).filter(|&i| mask >> i & 1 == 1).map(|i| g[i] / (1.0 - g[i])).product() };
    let mu = |mask: u32| -> f64 {
        if mask.count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    let lam = |mask: u32| -> f64 { lambda.get(&val(mask)).copied().unwrap_or(0.0) };
    let em = mask_of(e);
    let all = (1u32 << k) - 1;
    let rest = all & !em;
    let mut lhs_terms = Vec::new();
    for d in 0..=all {
        if d & !rest == 0 {
            lhs_terms.push(lam(d | em) * gm(d));
        }
    }
    let lhs = gm(em) * pairwise_sum(&lhs_terms);
    let theta = |b: u32| -> f64 { (0..=b).filter(|c| c & !b == 0).map(lam).sum() };
    let mut rhs_terms = Vec::new();
    for b in 0..=all {
        let common = b & em;
        // h(e)/h((b,e)) = h(e/(b,e)) avoids 0/0 when some g(p) vanish
        rhs_terms.push(theta(b) * hm(b) * mu(common) * hm(em & !common));
    }
    let pre: f64 = g.iter().map(|x| 1.0 - x).product();
    let rhs = pre * mu(em) * pairwise_sum(&rhs_terms);
    Ok((lhs, rhs))
}

pub fn divisor_sum_identity_check(lambda: &BTreeMap<u64, f64>, primes: &[u64], g: &[f64], e: u64) -> Result<bool> {
    let (l, r) = divisor_sum_identity_sides(lambda, primes, g, e)?;
    let scale = 1.0 + l.abs().max(r.abs());
    Ok((l - r).abs() <= 1e-12 * scale)
}

/// `∫` helper kept here so the sieve functions can be checked against an
/// independent integrator in tests.
pub fn integrate_checked<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    Ok(integrate(f, a, b, 1e-12, 10_000)?.0)
}
