//! One-dimensional quadrature: adaptive Gauss–Kronrod (7/15), half-line and
//! log-domain wrappers, and Gauss–Legendre rules for tensor grids.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerances for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-11,
            abs_tol: 0.0,
            max_intervals: 2000,
        }
    }
}

impl QuadratureSpec {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    /// Same spec with the relative tolerance scaled by `factor`.
    pub fn refined(self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol * factor,
            max_intervals: self.max_intervals * 4,
            ..self
        }
    }
}

/// Integral estimate with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).abs();
    Estimate { value, error }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, spec: QuadratureSpec) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("integration bounds must be finite"));
    }
    let first = kronrod15(&mut f, a, b);
    let mut pieces: Vec<(f64, f64, Estimate)> = vec![(a, b, first)];
    loop {
        let value: f64 = pieces.iter().map(|p| p.2.value).sum();
        let error: f64 = pieces.iter().map(|p| p.2.error).sum();
        if !value.is_finite() {
            return Err(Error::numerical("non-finite integrand", error));
        }
        if error <= spec.abs_tol.max(spec.rel_tol * value.abs()) || error == 0.0 {
            return Ok(Estimate { value, error });
        }
        if pieces.len() >= spec.max_intervals {
            return Err(Error::numerical(
                format!("quadrature did not converge in {} intervals", pieces.len()),
                error / value.abs().max(f64::MIN_POSITIVE),
            ));
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.error.total_cmp(&y.1 .2.error))
            .expect("non-empty");
        let (lo, hi, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval exhausted at machine precision; accept what we have
            let value: f64 = pieces.iter().map(|p| p.2.value).sum();
            return Ok(Estimate { value, error });
        }
        let left = kronrod15(&mut f, lo, mid);
        let right = kronrod15(&mut f, mid, hi);
        pieces.push((lo, mid, left));
        pieces.push((mid, hi, right));
    }
}

/// Integrates a non-negative `f` over `[0, inf)` by doubling panels
/// `[0, w], [w, 2w], [2w, 4w], ...` until the last panel is negligible.
pub fn integrate_half_line<F: FnMut(f64) -> f64>(mut f: F, width: f64, spec: QuadratureSpec) -> Result<Estimate> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::domain("half-line panel width must be positive"));
    }
    let mut total = integrate(&mut f, 0.0, width, spec)?;
    let mut lo = width;
    let mut quiet = 0;
    for _ in 0..80 {
        let hi = lo * 2.0;
        let piece = integrate(&mut f, lo, hi, spec)?;
        total.value += piece.value;
        total.error += piece.error;
        if piece.value.abs() <= 0.1 * spec.rel_tol * total.value.abs() {
            quiet += 1;
            if quiet >= 2 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
        lo = hi;
    }
    Err(Error::numerical("half-line tail did not decay", total.error))
}

/// Computes `ln ∫ exp(g(s)) ds` over `(-inf, upper]` for a unimodal-ish
/// log-integrand `g`. The mass is located by a scan, the support trimmed where
/// `g` falls 45 nats below its maximum, and the remainder integrated adaptively.
///
/// Returns `-inf` when `g` is `-inf` on the whole scan.
pub fn log_integral_line<G: FnMut(f64) -> f64>(mut g: G, upper: Option<f64>, spec: QuadratureSpec) -> Result<f64> {
    const DROP: f64 = 45.0;
    const STEP: f64 = 0.1;
    let hi_scan = upper.unwrap_or(60.0).min(60.0);
    let lo_scan = (-60.0_f64).min(hi_scan - 1.0);
    let steps = ((hi_scan - lo_scan) / STEP).ceil() as usize;
    let mut best = (f64::NEG_INFINITY, lo_scan);
    for k in 0..=steps {
        let s = (lo_scan + k as f64 * STEP).min(hi_scan);
        let v = g(s);
        if v > best.0 {
            best = (v, s);
        }
    }
    if best.0 == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    if !best.0.is_finite() {
        return Err(Error::numerical("log-integrand is not finite", f64::NAN));
    }
    // golden-section polish of the mode inside the bracketing cells
    let (mut a, mut b) = ((best.1 - STEP).max(lo_scan), (best.1 + STEP).min(hi_scan));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..40 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if g(c) > g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let mid = 0.5 * (a + b);
    let peak = g(mid).max(best.0);
    let mode = if g(mid) >= best.0 { mid } else { best.1 };

    let mut left = mode;
    let mut width = STEP;
    while g(left) > peak - DROP {
        left -= width;
        width *= 1.5;
        if left < -700.0 {
            break;
        }
    }
    let mut right = mode;
    let mut width = STEP;
    let cap = upper.unwrap_or(f64::INFINITY);
    loop {
        if right >= cap {
            right = cap;
            break;
        }
        if g(right) <= peak - DROP {
            break;
        }
        right += width;
        width *= 1.5;
        if right > 700.0 {
            return Err(Error::numerical("log-integrand does not decay", f64::NAN));
        }
    }
    let right = right.min(cap);
    let est = integrate(|s| (g(s) - peak).exp(), left, right, spec)?;
    if est.value <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(peak + est.value.ln())
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule on `[a, b]`: `panels` panels of `order` nodes.
pub fn composite_rule(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (z, w) = gauss_legendre(order);
    let step = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * step;
        for (zi, wi) in z.iter().zip(&w) {
            xs.push(lo + 0.5 * step * (zi + 1.0));
            ws.push(0.5 * step * wi);
        }
    }
    (xs, ws)
}
