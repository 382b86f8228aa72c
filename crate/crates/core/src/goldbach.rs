//! Singular series, Chen-prime representation counts, the exceptional-set
//! scan, and the sifted additive sums.

use std::fs::{self, File};
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{gcd, primes_in, FactorTable};
use crate::characters::DirichletCharacter;
use crate::error::{invalid, Error, Result};
use crate::fourier::convolve_exact;
use crate::models::{big_h_r, ModelParams};
use crate::numeric::pairwise_sum;
use crate::sieves::{fundlem_gap, Presieve, SieveSpec};

/// Bound `|log((1−4/p)(1−1/p)^{-4})| ≤ C/p²` valid for `p ≥ 1000`.
pub const TAIL_CONSTANT: f64 = 7.0;

pub const DEFAULT_CUTOFF: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SingularSeriesValue {
    pub m: u64,
    pub value: f64,
    pub cutoff: u64,
    pub tail_bound: f64,
}

/// `𝔖(m)` with the generic Euler product truncated at a fixed cutoff.
#[derive(Clone, Debug)]
pub struct SingularSeries {
    cutoff: u64,
    generic: f64,
    tail_bound: f64,
}

impl SingularSeries {
    pub fn new(cutoff: u64) -> Result<Self> {
        if cutoff < 1000 {
            return invalid("cutoff must be at least 1000");
        }
        let logs: Vec<f64> = primes_in(5, cutoff + 1)
            .into_iter()
            .map(|p| {
                let p = p as f64;
                (1.0 - 4.0 / p).ln() - 4.0 * (1.0 - 1.0 / p).ln()
            })
            .collect();
        // Σ_{p > y} p^{-2} ≤ Σ_{odd n > y} n^{-2} ≤ 1/(2(y − 1))
        let tail_sum = 1.0 / (2.0 * (cutoff as f64 - 1.0));
        Ok(SingularSeries {
            cutoff,
            generic: pairwise_sum(&logs).exp(),
            tail_bound: (TAIL_CONSTANT * tail_sum).exp_m1(),
        })
    }

    /// `∏_{5 ≤ p ≤ cutoff} (1 − 4/p)(1 − 1/p)^{-4}`.
    pub fn generic_product(&self) -> f64 {
        self.generic
    }

    pub fn eval(&self, m: u64, t: &FactorTable) -> Result<SingularSeriesValue> {
        if m + 4 > t.limit() {
            return Err(Error::OutOfRange { value: m + 4, limit: t.limit() });
        }
        let value = if m % 6 != 4 {
            0.0
        } else {
            let mut v = 13.5 * self.generic;
            let mut outer: Vec<u64> = t.prime_divisors(m)?;
            outer.extend(t.prime_divisors(m + 4)?);
            outer.sort_unstable();
            outer.dedup();
            for p in outer.into_iter().filter(|&p| p >= 5) {
                v *= 1.0 + 1.0 / (p as f64 - 4.0);
            }
            for p in t.prime_divisors(m + 2)?.into_iter().filter(|&p| p >= 5) {
                v *= 1.0 + 2.0 / (p as f64 - 4.0);
            }
            v
        };
        Ok(SingularSeriesValue { m, value, cutoff: self.cutoff, tail_bound: self.tail_bound })
    }
}

pub fn singular_series(m: u64, cutoff: u64, t: &FactorTable) -> Result<SingularSeriesValue> {
    SingularSeries::new(cutoff)?.eval(m, t)
}

/// Indicator of odd Chen primes `p ≤ limit`.
pub fn chen_indicator(limit: u64, t: &FactorTable) -> Result<Vec<bool>> {
    if limit + 2 > t.limit() {
        return Err(Error::OutOfRange { value: limit + 2, limit: t.limit() });
    }
    Ok((0..=limit).map(|p| p >= 3 && t.is_prime(p) && t.big_omega(p + 2) <= 2).collect())
}

fn odd_chen(p: u64, t: &FactorTable) -> bool {
    p % 2 == 1 && t.is_prime(p) && t.big_omega(p + 2) <= 2
}

/// Ordered pairs `(p₁, p₂)` of odd Chen primes with `p₁ + p₂ = m`.
pub fn rep_count(m: u64, t: &FactorTable) -> Result<u64> {
    if m + 2 > t.limit() {
        return Err(Error::OutOfRange { value: m + 2, limit: t.limit() });
    }
    let chen = |p: u64| odd_chen(p, t);
    Ok((3..m.saturating_sub(2)).filter(|&p| chen(p) && chen(m - p)).count() as u64)
}

/// Unordered pairs `{p₁, p₂}`.
pub fn rep_count_unordered(m: u64, t: &FactorTable) -> Result<u64> {
    let ordered = rep_count(m, t)?;
    let diagonal = u64::from(m % 2 == 0 && odd_chen(m / 2, t));
    Ok((ordered + diagonal) / 2)
}

/// Representation counts for all `m ∈ (N, 2N]` (index `m − N − 1`) via exact
/// convolution of the Chen-prime indicator.
pub fn rep_window(n: u64, t: &FactorTable) -> Result<Vec<u64>> {
    let all = rep_counts_upto(2 * n, t)?;
    Ok(all[(n + 1) as usize..=(2 * n) as usize].to_vec())
}

/// Counts for all `m ≤ limit` (index `m`).
pub fn rep_counts_upto(limit: u64, t: &FactorTable) -> Result<Vec<u64>> {
    let ind: Vec<i64> = chen_indicator(limit, t)?.into_iter().map(i64::from).collect();
    let conv = convolve_exact(&ind, &ind)?;
    Ok(conv.into_iter().take(limit as usize + 1).map(|v| v as u64).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    #[serde(rename = "N")]
    pub n: u64,
    pub filter: String,
    pub last_m: u64,
    pub partial_exceptions: Vec<u64>,
}

impl Checkpoint {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(File::open(path)?)?)
    }

    /// Write to a sibling temporary file, then rename over `path`.
    pub fn store(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        {
            let mut f = File::create(&tmp)?;
            serde_json::to_writer_pretty(&mut f, self)?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

pub const SCAN_FILTER: &str = "m = 4 mod 6";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecadeStats {
    pub lo: u64,
    pub hi: u64,
    pub count: u64,
    pub exceptions: u64,
    pub min_rep: u64,
    pub avg_rep: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub filter: String,
    pub exceptions: Vec<u64>,
    pub stats: Vec<DecadeStats>,
    pub last_m: u64,
    pub reverified: bool,
}

/// Result of a possibly interrupted scan.
#[derive(Clone, Debug, PartialEq)]
pub enum ScanOutcome {
    Complete(ScanReport),
    Interrupted(Checkpoint),
}

/// Scan controls: checkpoint file, chunk size in values of `m`, stop flag and
/// an optional limit on the number of chunks processed in this call.
pub struct ScanControl<'a> {
    pub checkpoint: Option<&'a Path>,
    pub chunk: u64,
    pub stop: Option<&'a AtomicBool>,
    pub max_chunks: Option<u64>,
}

impl Default for ScanControl<'_> {
    fn default() -> Self {
        ScanControl { checkpoint: None, chunk: 60_000, stop: None, max_chunks: None }
    }
}

fn first_m() -> u64 {
    4
}

/// Whether `m` has at least one representation, stopping at the first pair.
fn has_rep(m: u64, chen: &[bool], chen_list: &[u64]) -> bool {
    for &p in chen_list {
        if p > m / 2 {
            break;
        }
        if chen[(m - p) as usize] {
            return true;
        }
    }
    false
}

/// All `m ≡ 4 (mod 6)`, `m ≤ N`, without a Chen-prime representation.
pub fn exceptional_scan(n: u64, t: &FactorTable) -> Result<ScanReport> {
    match exceptional_scan_with(n, t, &ScanControl::default())? {
        ScanOutcome::Complete(r) => Ok(r),
        ScanOutcome::Interrupted(_) => Err(Error::InvalidParameter("scan interrupted".into())),
    }
}

pub fn exceptional_scan_with(n: u64, t: &FactorTable, ctl: &ScanControl) -> Result<ScanOutcome> {
    if n < 4 {
        return invalid("N must be at least 4");
    }
    let chen = chen_indicator(n, t)?;
    let chen_list: Vec<u64> = (0..=n).filter(|&p| chen[p as usize]).collect();
    let mut state = match ctl.checkpoint.filter(|p| p.exists()) {
        Some(p) => {
            let c = Checkpoint::load(p)?;
            if c.n != n || c.filter != SCAN_FILTER {
                return invalid(format!("checkpoint is for N = {} / filter `{}`", c.n, c.filter));
            }
            c
        }
        None => Checkpoint { n, filter: SCAN_FILTER.into(), last_m: 0, partial_exceptions: Vec::new() },
    };
    let mut chunks_done = 0u64;
    let mut start = if state.last_m == 0 { first_m() } else { state.last_m + 6 };
    while start <= n {
        if ctl.stop.is_some_and(|s| s.load(Ordering::SeqCst)) || ctl.max_chunks.is_some_and(|k| chunks_done >= k) {
            if let Some(p) = ctl.checkpoint {
                state.store(p)?;
            }
            return Ok(ScanOutcome::Interrupted(state));
        }
        let end = (start + ctl.chunk.max(6)).min(n + 1);
        let ms: Vec<u64> = (start..end).step_by(6).collect();
        let mut found: Vec<u64> = ms.par_iter().copied().filter(|&m| !has_rep(m, &chen, &chen_list)).collect();
        found.sort_unstable();
        state.partial_exceptions.extend(found);
        state.last_m = *ms.last().unwrap_or(&state.last_m);
        start = state.last_m + 6;
        chunks_done += 1;
        if let Some(p) = ctl.checkpoint {
            state.store(p)?;
        }
    }
    // independent second pass: full counts by exact convolution, and a direct
    // loop for every listed exception
    let counts = rep_counts_upto(n, t)?;
    let from_counts: Vec<u64> = (first_m()..=n).step_by(6).filter(|&m| counts[m as usize] == 0).collect();
    let direct_ok = state.partial_exceptions.iter().all(|&m| rep_count(m, t).map(|c| c == 0).unwrap_or(false));
    let reverified = direct_ok && from_counts == state.partial_exceptions;
    if !reverified {
        return Err(Error::InvalidParameter(format!(
            "re-verification failed: scan {:?} vs convolution {:?}",
            state.partial_exceptions, from_counts
        )));
    }
    let mut stats = Vec::new();
    let mut lo = 1u64;
    while lo <= n {
        let hi = (lo * 10 - 1).min(n);
        let ms: Vec<u64> = (lo..=hi).filter(|m| m % 6 == 4).collect();
        if !ms.is_empty() {
            let reps: Vec<u64> = ms.iter().map(|&m| counts[m as usize]).collect();
            stats.push(DecadeStats {
                lo,
                hi,
                count: ms.len() as u64,
                exceptions: reps.iter().filter(|&&c| c == 0).count() as u64,
                min_rep: *reps.iter().min().unwrap(),
                avg_rep: reps.iter().sum::<u64>() as f64 / reps.len() as f64,
            });
        }
        lo *= 10;
    }
    Ok(ScanOutcome::Complete(ScanReport {
        n,
        filter: SCAN_FILTER.into(),
        exceptions: state.partial_exceptions,
        stats,
        last_m: state.last_m,
        reverified,
    }))
}

/// Rows `(m, rep_count, singular_series, ratio)` with
/// `ratio = rep_count · (log m)² / (m 𝔖(m))`.
pub fn write_scan_detail(path: &Path, n: u64, t: &FactorTable, cutoff: u64) -> Result<()> {
    let counts = rep_counts_upto(n, t)?;
    let ss = SingularSeries::new(cutoff)?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(["m", "rep_count", "singular_series", "ratio"])?;
    for m in (first_m()..=n).step_by(6) {
        let s = if m + 4 <= t.limit() { ss.eval(m, t)?.value } else { f64::NAN };
        let lm = (m as f64).ln();
        let ratio = counts[m as usize] as f64 * lm * lm / (m as f64 * s);
        w.write_record([m.to_string(), counts[m as usize].to_string(), format!("{s:?}"), format!("{ratio:?}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Pre-sieve values on `1..=len` (index `n`; index 0 unused).
#[derive(Clone, Debug)]
pub struct PresieveTables {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl PresieveTables {
    pub fn new(ps: &Presieve, len: u64, t: &FactorTable) -> Result<Self> {
        if len > t.limit() {
            return Err(Error::OutOfRange { value: len, limit: t.limit() });
        }
        let build = |upper: bool| -> Vec<f64> {
            (0..=len).into_par_iter().map(|n| if n == 0 { 0.0 } else { ps.eval(upper, n, t) }).collect()
        };
        Ok(PresieveTables { lower: build(false), upper: build(true) })
    }

    pub fn get(&self, upper: bool) -> &[f64] {
        if upper {
            &self.upper
        } else {
            &self.lower
        }
    }

    pub fn len(&self) -> u64 {
        self.lower.len() as u64 - 1
    }

    pub fn is_empty(&self) -> bool {
        self.lower.len() <= 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdditiveCheck {
    pub m: u64,
    pub x: u64,
    pub lhs: f64,
    pub main: f64,
    /// `lhs / main`, absent when `𝔖(m) = 0`.
    pub ratio: Option<f64>,
}

/// `Σ_{n ≤ X} f₁(n) f₂(n+2) f₃(m−n) f₄(m−n+2)` by direct summation;
/// `kinds[i]` selects the upper (`true`) or lower pre-sieve for `f_{i+1}`.
pub fn presieve_additive_sum(m: u64, x: u64, kinds: [bool; 4], tabs: &PresieveTables) -> Result<f64> {
    if x > m || x == 0 {
        return invalid(format!("need 1 <= X <= m (X = {x}, m = {m})"));
    }
    if m + 2 > tabs.len() {
        return Err(Error::OutOfRange { value: m + 2, limit: tabs.len() });
    }
    let f = kinds.map(|k| tabs.get(k));
    let terms: Vec<f64> = (1..=x.min(m - 1))
        .map(|n| {
            let (a, b, c, d) = (n as usize, (n + 2) as usize, (m - n) as usize, (m - n + 2) as usize);
            f[0][a] * f[1][b] * f[2][c] * f[3][d]
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

pub fn presieve_additive_check(
    m: u64,
    x: u64,
    kinds: [bool; 4],
    tabs: &PresieveTables,
    ss: &SingularSeries,
    t: &FactorTable,
) -> Result<AdditiveCheck> {
    let lhs = presieve_additive_sum(m, x, kinds, tabs)?;
    let s = ss.eval(m, t)?.value;
    let main = x as f64 * s;
    Ok(AdditiveCheck { m, x, lhs, main, ratio: if s > 0.0 { Some(lhs / main) } else { None } })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExceptionalCase {
    /// `χ(n) = χ(m−n) = −1`, `(n+2, r) = (m−n+2, r) = 1`.
    A1,
    /// `χ(n) = χ(n+2) = 1`, `χ(m−n) = −1`, `(m−n+2, r) = 1`.
    A2,
}

/// Residue-class sums over `b mod r`: `s[0..6]` are `S₁ … S₆`, `s7` is
/// `Σ_b χ(b)χ(b+2) 1_{(m−b,r)=(m−b+2,r)=1}`, which also enters `8Σ𝔞₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidueSums {
    pub s: [f64; 6],
    pub s7: f64,
    pub a1_total: f64,
    pub a2_total: f64,
}

pub fn residue_sums(m: u64, chi: &DirichletCharacter) -> Result<ResidueSums> {
    if !chi.is_real() || !chi.is_primitive() {
        return invalid("χ must be real and primitive");
    }
    let r = chi.modulus();
    if r < 3 {
        return invalid("modulus must be at least 3");
    }
    let x = |v: u64| chi.real_value(v % r) as f64;
    let cop = |v: u64| gcd(v % r, r) == 1;
    let mut s = [0.0f64; 6];
    let mut s7 = 0.0;
    let (mut a1, mut a2) = (0.0, 0.0);
    let mr = m % r;
    for b in 0..r {
        let (p0, p2) = (b, b + 2);
        let mb = (mr + r - b) % r;
        let mb2 = (mb + 2) % r;
        s[0] += f64::from(u8::from(cop(p0) && cop(p2) && cop(mb) && cop(mb2)));
        if cop(p2) && cop(mb) && cop(mb2) {
            s[1] += x(p0);
        }
        if cop(p2) && cop(mb2) {
            s[2] += x(p0) * x(mb);
        }
        if cop(p0) && cop(mb2) {
            s[3] += x(p2) * x(mb);
        }
        if cop(p0) && cop(mb) && cop(mb2) {
            s[4] += x(p2);
        }
        if cop(mb2) {
            s[5] += x(p0) * x(p2) * x(mb);
        }
        if cop(mb) && cop(mb2) {
            s7 += x(p0) * x(p2);
        }
        if x(p0) == -1.0 && x(mb) == -1.0 && cop(p2) && cop(mb2) {
            a1 += 1.0;
        }
        if x(p0) == 1.0 && x(p2) == 1.0 && x(mb) == -1.0 && cop(mb2) {
            a2 += 1.0;
        }
    }
    Ok(ResidueSums { s, s7, a1_total: a1, a2_total: a2 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExceptionalCheck {
    pub lhs: f64,
    /// `S₃/S₁`; `None` when `S₁ = 0`.
    pub sigma1: Option<f64>,
    /// `S₄/S₁`.
    pub sigma2: Option<f64>,
    pub sums: ResidueSums,
    pub predicted: f64,
}

/// The pre-sieved additive sum restricted by a real primitive character.
#[allow(clippy::too_many_arguments)]
pub fn exceptional_additive_check(
    m: u64,
    x: u64,
    chi: &DirichletCharacter,
    case: ExceptionalCase,
    kinds: [bool; 4],
    tabs: &PresieveTables,
    ss: &SingularSeries,
    t: &FactorTable,
) -> Result<ExceptionalCheck> {
    let sums = residue_sums(m, chi)?;
    if x > m || x == 0 {
        return invalid(format!("need 1 <= X <= m (X = {x}, m = {m})"));
    }
    if m + 2 > tabs.len() {
        return Err(Error::OutOfRange { value: m + 2, limit: tabs.len() });
    }
    let r = chi.modulus();
    let xv = |v: u64| chi.real_value(v % r);
    let cop = |v: u64| gcd(v % r, r) == 1;
    let f = kinds.map(|k| tabs.get(k));
    let terms: Vec<f64> = (1..=x.min(m - 1))
        .filter(|&n| match case {
            ExceptionalCase::A1 => xv(n) == -1 && xv(m - n) == -1 && cop(n + 2) && cop(m - n + 2),
            ExceptionalCase::A2 => xv(n) == 1 && xv(n + 2) == 1 && xv(m - n) == -1 && cop(m - n + 2),
        })
        .map(|n| {
            let (a, b, c, d) = (n as usize, (n + 2) as usize, (m - n) as usize, (m - n + 2) as usize);
            f[0][a] * f[1][b] * f[2][c] * f[3][d]
        })
        .collect();
    let lhs = pairwise_sum(&terms);
    let s1 = sums.s[0];
    let sigma1 = (s1 != 0.0).then(|| sums.s[2] / s1);
    let sigma2 = (s1 != 0.0).then(|| sums.s[3] / s1);
    let main = x as f64 * ss.eval(m, t)?.value;
    let predicted = match case {
        ExceptionalCase::A1 => main * (1.0 + sigma1.unwrap_or(0.0)) / 4.0,
        ExceptionalCase::A2 => main * (1.0 - sigma1.unwrap_or(0.0) - sigma2.unwrap_or(0.0)) / 8.0,
    };
    Ok(ExceptionalCheck { lhs, sigma1, sigma2, sums, predicted })
}

/// Position of `H_R` among the four shifted arguments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HSlot {
    N,
    NPlus2,
    MMinusN,
    MMinusNPlus2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorrelationCheck {
    pub m: u64,
    pub lhs: f64,
    pub envelope: f64,
    pub ratio: f64,
}

/// `Σ_{N/2<n≤N} H_R(n)|f₁(n+2)||f₂(m−n)||f₃(m−n+2)|` (with `H_R` moved to
/// `slot`), against `N 𝔖(m)`.
#[allow(clippy::too_many_arguments)]
pub fn correlation_upper_check(
    m: u64,
    n_big: u64,
    params: &ModelParams,
    kinds: [bool; 3],
    slot: HSlot,
    tabs: &PresieveTables,
    ss: &SingularSeries,
    t: &FactorTable,
) -> Result<CorrelationCheck> {
    let args = |n: u64| -> [u64; 4] { [n, n + 2, m.saturating_sub(n), (m + 2).saturating_sub(n)] };
    let slot_idx = match slot {
        HSlot::N => 0,
        HSlot::NPlus2 => 1,
        HSlot::MMinusN => 2,
        HSlot::MMinusNPlus2 => 3,
    };
    let terms: Vec<f64> = (n_big / 2 + 1..=n_big)
        .into_par_iter()
        .map(|n| -> Result<f64> {
            let a = args(n);
            let mut prod = 1.0;
            let mut k = 0;
            for (i, &v) in a.iter().enumerate() {
                if i == slot_idx {
                    continue;
                }
                let val = if v == 0 || v > tabs.len() { 0.0 } else { tabs.get(kinds[k])[v as usize].abs() };
                k += 1;
                prod *= val;
                if prod == 0.0 {
                    return Ok(0.0);
                }
            }
            let h_arg = a[slot_idx];
            if h_arg == 0 || h_arg > t.limit() {
                return Ok(0.0);
            }
            Ok(prod * big_h_r(h_arg, params, t)?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let lhs = pairwise_sum(&terms);
    let envelope = n_big as f64 * ss.eval(m, t)?.value;
    Ok(CorrelationCheck { m, lhs, envelope, ratio: if envelope > 0.0 { lhs / envelope } else { f64::NAN } })
}

/// `(|ω(n) − r_{P₁}(n)|, |Ω(n) − r_{P₁}(n)|, gap(n))` for one `n`.
pub fn fundlem_margins(n: u64, spec: &SieveSpec, ps: &Presieve, t: &FactorTable) -> Result<(f64, f64, f64)> {
    let r = crate::sieves::CramerModel::new(ps.sift_bound().max(4)).eval(n, t);
    let gap = fundlem_gap(n, spec, t)?;
    Ok(((ps.omega(n, t) - r).abs(), (ps.big_omega(n, t) - r).abs(), gap))
}
