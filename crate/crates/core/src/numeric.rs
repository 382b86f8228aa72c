//! Summation and quadrature helpers shared by the analytic modules.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Pairwise (cascade) summation; the reduction order depends only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
}

/// `e(x) = exp(2πix)`.
#[inline]
pub fn e(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * x)
}

// 7-point Gauss / 15-point Kronrod nodes on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// One Gauss–Kronrod panel: (Kronrod estimate, |Kronrod − Gauss|).
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod quadrature by global bisection of the worst panel.
/// Returns (value, error estimate). Fails if `max_panels` is exhausted before
/// the estimate drops below `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, max_panels: usize) -> Result<(f64, f64)> {
    if b <= a {
        return Ok((0.0, 0.0));
    }
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, err) = gk15(&mut f, a, b);
    panels.push((a, b, v, err));
    loop {
        let total_err: f64 = panels.iter().map(|p| p.3).sum();
        if total_err <= tol {
            break;
        }
        if panels.len() >= max_panels {
            let total: f64 = panels.iter().map(|p| p.2).sum();
            return Err(Error::Quadrature(format!(
                "budget of {max_panels} panels exhausted on [{a}, {b}] (value {total}, error {total_err:e})"
            )));
        }
        let (worst, _) =
            panels.iter().enumerate().fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
    panels.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let vals: Vec<f64> = panels.iter().map(|p| p.2).collect();
    let errs: f64 = panels.iter().map(|p| p.3).sum();
    Ok((pairwise_sum(&vals), errs))
}

/// Composite Gauss–Kronrod on `panels` equal sub-intervals (non-adaptive).
pub fn integrate_fixed<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    let vals: Vec<f64> = (0..panels).map(|i| gk15(&mut f, a + i as f64 * h, a + (i + 1) as f64 * h).0).collect();
    pairwise_sum(&vals)
}
