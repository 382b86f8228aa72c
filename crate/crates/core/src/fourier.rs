//! Windows on `(N/2, N]`, grid-based Fourier norms, major arcs, and additive
//! convolution (floating point FFT and exact number-theoretic transform).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::arith::gcd;
use crate::error::{invalid, Error, Result};
use crate::models::b_r;
use crate::numeric::{e, pairwise_sum, pairwise_sum_complex};

/// Real-valued sequence on `N/2 < n ≤ N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    n: u64,
    values: Vec<f64>,
}

impl Window {
    /// First index `⌊N/2⌋ + 1`.
    pub fn start_of(n: u64) -> u64 {
        n / 2 + 1
    }

    pub fn len_of(n: u64) -> usize {
        (n - n / 2) as usize
    }

    pub fn new(n: u64, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return invalid("N must be positive");
        }
        if values.len() != Self::len_of(n) {
            return invalid(format!(
                "window over (N/2, N] with N = {n} needs {} values, got {}",
                Self::len_of(n),
                values.len()
            ));
        }
        Ok(Window { n, values })
    }

    pub fn from_fn<F: FnMut(u64) -> f64>(n: u64, mut f: F) -> Self {
        let start = Self::start_of(n);
        Window { n, values: (start..=n).map(&mut f).collect() }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn start(&self) -> u64 {
        Self::start_of(self.n)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `f(n)`, zero outside the window.
    pub fn get(&self, n: u64) -> f64 {
        let s = self.start();
        if n < s || n > self.n {
            0.0
        } else {
            self.values[(n - s) as usize]
        }
    }

    pub fn map<F: Fn(u64, f64) -> f64>(&self, f: F) -> Window {
        let s = self.start();
        Window { n: self.n, values: self.values.iter().enumerate().map(|(i, &v)| f(s + i as u64, v)).collect() }
    }

    /// `f⁺(n) = f(n + 2)`, zero-filled at the top.
    pub fn shift_plus(&self) -> Window {
        Window::from_fn(self.n, |n| self.get(n + 2))
    }

    /// `f⁻(n) = f(n − 2)`, zero-filled at the bottom.
    pub fn shift_minus(&self) -> Window {
        Window::from_fn(self.n, |n| if n >= 2 { self.get(n - 2) } else { 0.0 })
    }

    pub fn l1(&self) -> f64 {
        pairwise_sum(&self.values.iter().map(|v| v.abs()).collect::<Vec<_>>())
    }

    pub fn l2_squared(&self) -> f64 {
        pairwise_sum(&self.values.iter().map(|v| v * v).collect::<Vec<_>>())
    }

    /// `‖n f‖₁`.
    pub fn weighted_l1(&self) -> f64 {
        let s = self.start();
        pairwise_sum(&self.values.iter().enumerate().map(|(i, v)| (s + i as u64) as f64 * v.abs()).collect::<Vec<_>>())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
        w.write_record(["n", "value"])?;
        let s = self.start();
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([(s + i as u64).to_string(), format!("{v:?}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_csv(n: u64, path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut values = Vec::new();
        let s = Self::start_of(n);
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let idx: u64 = rec[0].parse().map_err(|e| Error::Format(format!("bad n: {e}")))?;
            if idx != s + i as u64 {
                return Err(Error::Format(format!("row {i} has n = {idx}, expected {}", s + i as u64)));
            }
            values.push(rec[1].parse().map_err(|e| Error::Format(format!("bad value: {e}")))?);
        }
        Window::new(n, values)
    }

    /// Binary layout: magic `WIN1`, `N` as u64 LE, mode byte (0 = f64, 1 = i64),
    /// then one 8-byte LE value per index.
    pub fn save_binary(&self, path: &Path, mode: BinaryMode) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(b"WIN1")?;
        w.write_all(&self.n.to_le_bytes())?;
        match mode {
            BinaryMode::Float => {
                w.write_all(&[0])?;
                for v in &self.values {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
            BinaryMode::Integer => {
                w.write_all(&[1])?;
                for v in &self.values {
                    if v.fract() != 0.0 || v.abs() >= 9.2e18 {
                        return invalid(format!("value {v} is not a 64-bit integer"));
                    }
                    w.write_all(&(*v as i64).to_le_bytes())?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_binary(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut buf)?;
        if buf.len() < 13 || &buf[..4] != b"WIN1" {
            return Err(Error::Format("not a window file".into()));
        }
        let n = u64::from_le_bytes(buf[4..12].try_into().unwrap());
        let mode = buf[12];
        let body = &buf[13..];
        if body.len() != 8 * Self::len_of(n) {
            return Err(Error::Format("truncated window file".into()));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| {
                let b: [u8; 8] = c.try_into().unwrap();
                if mode == 0 {
                    f64::from_le_bytes(b)
                } else {
                    i64::from_le_bytes(b) as f64
                }
            })
            .collect();
        Window::new(n, values)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryMode {
    Float,
    Integer,
}

/// `Σ_{N/2<n≤N} f(n) e(αn)`.
pub fn exp_sum(f: &Window, alpha: f64) -> Complex64 {
    let s = f.start();
    let terms: Vec<Complex64> = f
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let n = s + i as u64;
            v * e((alpha * n as f64).rem_euclid(1.0))
        })
        .collect();
    pairwise_sum_complex(&terms)
}

/// Largest FFT grid accepted.
pub const MAX_GRID: usize = 1 << 28;

/// `|f̂(k/M)|` for `k = 0..M`, `M = oversample · N`.
pub fn grid_values(f: &Window, oversample: u64) -> Result<Vec<f64>> {
    if oversample < 4 {
        return invalid("oversample must be at least 4");
    }
    let m = oversample
        .checked_mul(f.n)
        .filter(|&m| m as usize <= MAX_GRID)
        .ok_or(Error::Capacity { requested: oversample.saturating_mul(f.n), cap: MAX_GRID as u64 })?
        as usize;
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); m];
    for (i, &v) in f.values.iter().enumerate() {
        buf[i] = Complex64::new(v, 0.0);
    }
    let fft = FftPlanner::new().plan_fft_inverse(m);
    fft.process(&mut buf);
    Ok(buf.into_iter().map(|z| z.norm()).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormValue {
    pub value: f64,
    /// Bound on the gap between the grid maximum and the true supremum.
    pub defect: f64,
    pub argmax: f64,
}

fn defect_of(f: &Window, oversample: u64) -> f64 {
    std::f64::consts::PI * f.weighted_l1() / (oversample as f64 * f.n as f64)
}

fn max_of(vals: impl Iterator<Item = (usize, f64)>) -> (usize, f64) {
    vals.fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc })
}

/// `‖f‖^∧_∞` on the grid `k/(oversample·N)` with its certified defect.
pub fn fourier_norm(f: &Window, oversample: u64) -> Result<NormValue> {
    let g = grid_values(f, oversample)?;
    let m = g.len();
    let (k, v) = max_of(g.into_iter().enumerate());
    Ok(NormValue { value: v, defect: defect_of(f, oversample), argmax: k as f64 / m as f64 })
}

/// Major arcs `|α − b/q| ≤ R/N`, `q ≤ R`, `(b, q) = 1`, as exact fractions.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcSet {
    pub big_r: u64,
    pub n: u64,
    /// Centres `(b, q)` in increasing order of `b/q ∈ [0, 1)`.
    pub arcs: Vec<(u64, u64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Major,
    Minor,
}

pub fn major_arcs(big_r: u64, n: u64) -> Result<ArcSet> {
    if big_r == 0 || n == 0 {
        return invalid("need R >= 1 and N >= 1");
    }
    let mut arcs = Vec::new();
    for q in 1..=big_r {
        for b in 0..q {
            if gcd(b, q) == 1 {
                arcs.push((b, q));
            }
        }
    }
    arcs.sort_by(|x, y| (x.0 * y.1).cmp(&(y.0 * x.1)));
    Ok(ArcSet { big_r, n, arcs })
}

impl ArcSet {
    /// Whether `p/m` (reduced or not, `0 ≤ p < m`) lies on a major arc:
    /// `|p/m − b/q| ≤ R/N ⇔ |pq − bm|·N ≤ R·m·q` for some `q ≤ R`, `b ∈ [0, q]`.
    pub fn classify_fraction(&self, p: u64, m: u64) -> Side {
        let (p, m) = (p as i128, m as i128);
        let (big_r, n) = (self.big_r as i128, self.n as i128);
        for q in 1..=big_r {
            let b = (p * q + m / 2) / m;
            for bb in [b - 1, b, b + 1] {
                if bb < 0 || bb > q {
                    continue;
                }
                if (p * q - bb * m).abs() * n <= big_r * m * q {
                    return Side::Major;
                }
            }
        }
        Side::Minor
    }

    /// Exact classification of the binary fraction `α mod 1`.
    pub fn classify(&self, alpha: f64) -> Side {
        let a = alpha.rem_euclid(1.0);
        let r = BigRational::from_float(a).expect("finite α");
        let big = |x: u64| BigInt::from(x);
        let (num, den) = (r.numer().clone(), r.denom().clone());
        for q in 1..=self.big_r {
            for b in 0..=q {
                let lhs = (&num * big(q) - big(b) * &den) * big(self.n);
                let lhs = if lhs < BigInt::from(0) { -lhs } else { lhs };
                if lhs <= big(self.big_r) * &den * big(q) {
                    return Side::Major;
                }
            }
        }
        Side::Minor
    }
}

/// Grid maximum restricted to the grid points on the requested side.
pub fn restricted_norm(f: &Window, arcs: &ArcSet, side: Side, oversample: u64) -> Result<NormValue> {
    let g = grid_values(f, oversample)?;
    let m = g.len() as u64;
    let (k, v) = g
        .par_iter()
        .enumerate()
        .filter(|(k, _)| arcs.classify_fraction(*k as u64, m) == side)
        .map(|(k, &v)| (k, v))
        .reduce(
            || (usize::MAX, f64::NEG_INFINITY),
            |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    let value = if k == usize::MAX { 0.0 } else { v };
    Ok(NormValue {
        value,
        defect: defect_of(f, oversample),
        argmax: if k == usize::MAX { 0.0 } else { k as f64 / m as f64 },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvMode {
    Float,
    ExactInteger,
}

/// `(f ⋆ g)(m)` for `m ∈ (N, 2N]`; index `i` holds `m = N + 1 + i`.
pub fn convolve(f: &Window, g: &Window, mode: ConvMode) -> Result<Vec<f64>> {
    if f.n != g.n {
        return invalid(format!("window sizes differ ({} vs {})", f.n, g.n));
    }
    let n = f.n;
    let full: Vec<f64> = match mode {
        ConvMode::Float => convolve_fft(&f.values, &g.values),
        ConvMode::ExactInteger => {
            let a = to_int(&f.values)?;
            let b = to_int(&g.values)?;
            convolve_exact(&a, &b)?.into_iter().map(|v| v as f64).collect()
        }
    };
    // full[k] corresponds to m = 2·start + k
    let base = 2 * f.start();
    Ok((n + 1..=2 * n)
        .map(|m| if m >= base && ((m - base) as usize) < full.len() { full[(m - base) as usize] } else { 0.0 })
        .collect())
}

fn to_int(v: &[f64]) -> Result<Vec<i64>> {
    v.iter()
        .map(|&x| {
            if x.fract() != 0.0 || x.abs() >= 2f64.powi(31) {
                Err(Error::InvalidParameter(format!("value {x} is not an integer below 2^31 in absolute value")))
            } else {
                Ok(x as i64)
            }
        })
        .collect()
}

/// Linear convolution by complex FFT.
pub fn convolve_fft(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    let size = out_len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut x: Vec<Complex64> = (0..size).map(|i| Complex64::new(a.get(i).copied().unwrap_or(0.0), 0.0)).collect();
    let mut y: Vec<Complex64> = (0..size).map(|i| Complex64::new(b.get(i).copied().unwrap_or(0.0), 0.0)).collect();
    fwd.process(&mut x);
    fwd.process(&mut y);
    for (u, v) in x.iter_mut().zip(&y) {
        *u *= v;
    }
    inv.process(&mut x);
    let scale = size as f64;
    x.truncate(out_len);
    x.into_iter().map(|z| z.re / scale).collect()
}

/// Linear convolution in 128-bit integers, `O(len²)`.
pub fn convolve_schoolbook(a: &[i64], b: &[i64]) -> Vec<i128> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0i128; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x as i128 * y as i128;
        }
    }
    out
}

const NTT_PRIMES: [u64; 3] = [998_244_353, 167_772_161, 469_762_049];
const NTT_ROOT: u64 = 3;

fn pow_mod_u64(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

fn ntt(a: &mut [u64], p: u64, invert: bool) {
    let n = a.len();
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j ^= bit;
        if i < j {
            a.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let mut w = pow_mod_u64(NTT_ROOT, (p - 1) / len as u64, p);
        if invert {
            w = pow_mod_u64(w, p - 2, p);
        }
        for chunk in a.chunks_mut(len) {
            let mut wn = 1u64;
            let half = len / 2;
            for k in 0..half {
                let u = chunk[k];
                let v = chunk[k + half] * wn % p;
                chunk[k] = if u + v >= p { u + v - p } else { u + v };
                chunk[k + half] = if u >= v { u - v } else { u + p - v };
                wn = wn * w % p;
            }
        }
        len <<= 1;
    }
    if invert {
        let inv_n = pow_mod_u64(n as u64, p - 2, p);
        for x in a.iter_mut() {
            *x = *x * inv_n % p;
        }
    }
}

/// Exact linear convolution via NTT modulo three primes and CRT.
/// Inputs must satisfy `|x| < 2^31`; lengths up to `2^23`.
pub fn convolve_exact(a: &[i64], b: &[i64]) -> Result<Vec<i64>> {
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    let lim = 1i64 << 31;
    if a.iter().chain(b).any(|&x| x <= -lim || x >= lim) {
        return Err(Error::Overflow("inputs must lie strictly within ±2^31".into()));
    }
    let out_len = a.len() + b.len() - 1;
    let size = out_len.next_power_of_two();
    if size > 1 << 23 {
        return Err(Error::Overflow(format!("transform length {size} exceeds 2^23")));
    }
    let residues: Vec<Vec<u64>> = NTT_PRIMES
        .par_iter()
        .map(|&p| {
            let lift = |x: i64| -> u64 { (x.rem_euclid(p as i64)) as u64 };
            let mut x: Vec<u64> = (0..size).map(|i| a.get(i).map_or(0, |&v| lift(v))).collect();
            let mut y: Vec<u64> = (0..size).map(|i| b.get(i).map_or(0, |&v| lift(v))).collect();
            ntt(&mut x, p, false);
            ntt(&mut y, p, false);
            for (u, v) in x.iter_mut().zip(&y) {
                *u = *u * v % p;
            }
            ntt(&mut x, p, true);
            x.truncate(out_len);
            x
        })
        .collect();
    let (p0, p1, p2) = (NTT_PRIMES[0] as i128, NTT_PRIMES[1] as i128, NTT_PRIMES[2] as i128);
    let inv = |a: i128, m: i128| pow_mod_u64((a % m) as u64, (m - 2) as u64, m as u64) as i128;
    let inv_p0_mod_p1 = inv(p0, p1);
    let inv_p01_mod_p2 = inv(p0 * p1 % p2, p2);
    let modulus = p0 * p1 * p2;
    let mut out = Vec::with_capacity(out_len);
    for ((&r0, &r1), &r2) in residues[0].iter().zip(&residues[1]).zip(&residues[2]).take(out_len) {
        let (r0, r1, r2) = (r0 as i128, r1 as i128, r2 as i128);
        let t1 = ((r1 - r0).rem_euclid(p1)) * inv_p0_mod_p1 % p1;
        let x01 = r0 + p0 * t1;
        let t2 = ((r2 - x01.rem_euclid(p2)).rem_euclid(p2)) * inv_p01_mod_p2 % p2;
        let mut x = x01 + p0 * p1 * t2;
        if x > modulus / 2 {
            x -= modulus;
        }
        let v = i64::try_from(x).map_err(|_| Error::Overflow(format!("convolution value {x} exceeds 64 bits")))?;
        out.push(v);
    }
    Ok(out)
}

/// Report of [`br_transform_check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BrTransformReport {
    pub n: u64,
    pub big_r: u64,
    pub at_zero: f64,
    pub max_major_deviation: f64,
    pub max_minor_value: f64,
    pub major_samples: usize,
    pub minor_samples: usize,
}

/// `b̂_R(α) = Σ_n b_R(n) e(αn)` with the kernel values precomputed.
pub struct BrTransform {
    values: Vec<f64>,
    k: i64,
}

impl BrTransform {
    pub fn new(n: u64, big_r: u64) -> Result<Self> {
        let k = (n as f64 / (big_r as f64).powi(4)).floor() as i64;
        let values = (0..=k).map(|x| b_r(x, n, big_r)).collect::<Result<Vec<f64>>>()?;
        Ok(BrTransform { values, k })
    }

    pub fn eval(&self, alpha: f64) -> Complex64 {
        // b_R is even, so b̂_R(α) = b_R(0) + 2 Σ_{n≥1} b_R(n) cos(2πnα)
        let terms: Vec<f64> = (1..=self.k)
            .map(|x| 2.0 * self.values[x as usize] * (std::f64::consts::TAU * (alpha * x as f64).rem_euclid(1.0)).cos())
            .collect();
        Complex64::new(self.values[0] + pairwise_sum(&terms), 0.0)
    }

    /// Direct two-sided sum, used as a cross-check of [`BrTransform::eval`].
    pub fn eval_direct(&self, alpha: f64) -> Complex64 {
        let terms: Vec<Complex64> = (-self.k..=self.k)
            .map(|x| self.values[x.unsigned_abs() as usize] * e((alpha * x as f64).rem_euclid(1.0)))
            .collect();
        pairwise_sum_complex(&terms)
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Evaluate `b̂_R` at `samples` deterministic points on the major arcs (centres
/// cycled, offsets spread over the radius) and `samples` minor-arc points
/// (golden-ratio sequence filtered by exact classification).
pub fn br_transform_check(n: u64, big_r: u64, samples: usize) -> Result<BrTransformReport> {
    if big_r < 2 || (big_r as f64).powi(11) > n as f64 {
        return invalid(format!("need R >= 2 and R^11 <= N (R = {big_r}, N = {n})"));
    }
    let arcs = major_arcs(big_r, n)?;
    let tr = BrTransform::new(n, big_r)?;
    let radius = big_r as f64 / n as f64;
    let major: Vec<f64> = (0..samples)
        .map(|i| {
            let (b, q) = arcs.arcs[i % arcs.arcs.len()];
            let off = (2.0 * ((i as f64 + 1.0) * GOLDEN).fract() - 1.0) * radius * 0.999;
            (b as f64 / q as f64 + off).rem_euclid(1.0)
        })
        .collect();
    let mut minor = Vec::with_capacity(samples);
    let mut i = 1u64;
    while minor.len() < samples {
        let a = (i as f64 * GOLDEN).fract();
        if arcs.classify(a) == Side::Minor {
            minor.push(a);
        }
        i += 1;
    }
    let dev: Vec<f64> = major.par_iter().map(|&a| (tr.eval(a) - 1.0).norm()).collect();
    let mv: Vec<f64> = minor.par_iter().map(|&a| tr.eval(a).norm()).collect();
    Ok(BrTransformReport {
        n,
        big_r,
        at_zero: tr.eval(0.0).re,
        max_major_deviation: dev.iter().cloned().fold(0.0, f64::max),
        max_minor_value: mv.iter().cloned().fold(0.0, f64::max),
        major_samples: major.len(),
        minor_samples: minor.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_sum_examples() {
        let f = Window::from_fn(8, |_| 1.0);
        assert!((exp_sum(&f, 0.0).re - 4.0).abs() < 1e-12);
        assert!(exp_sum(&f, 0.5).norm() < 1e-12);
        let d = Window::from_fn(10, |n| if n == 7 { 1.0 } else { 0.0 });
        assert!((exp_sum(&d, 0.1234).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn arcs_examples() {
        let a = major_arcs(1, 100).unwrap();
        assert_eq!(a.arcs, vec![(0, 1)]);
        assert_eq!(a.classify(0.999), Side::Major);
        let a = major_arcs(2, 1000).unwrap();
        assert_eq!(a.classify(0.5), Side::Major);
        let a = major_arcs(3, 10_000).unwrap();
        assert_eq!(a.classify(1.0 / 3.0 + 6.0 / 10_000.0), Side::Minor);
    }

    #[test]
    fn exact_matches_schoolbook_signed() {
        let a = vec![3, -5, 0, (1 << 31) - 1, -(1 << 31) + 1];
        let b = vec![-7, 11, (1 << 31) - 1];
        let x = convolve_exact(&a, &b).unwrap();
        let y = convolve_schoolbook(&a, &b);
        assert_eq!(x.iter().map(|&v| v as i128).collect::<Vec<_>>(), y);
        assert!(convolve_exact(&[1 << 31], &[1]).is_err());
    }
}
