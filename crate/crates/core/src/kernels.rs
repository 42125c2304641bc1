//! Univariate associated kernels and their diagonal product.
//!
//! Each family is a pdmf `K_{x,h}` indexed by a target `x` and a bandwidth
//! `h`. The continuous families are parameterized so that their mean shift
//! `A(x,h) = E[Z] - x` and dispersion `B(x,h) = Var[Z]` take the closed forms
//! returned by [`KernelFamily::moments`]:
//!
//! | family | law of `Z` |
//! |---|---|
//! | `Gamma` | Gamma(shape `1 + x/h`, scale `h`) |
//! | `LogNormal2` | LogNormal(`ln x + h²`, `h`) |
//! | `Weibull` | Weibull(shape `1/h`, scale `x / Γ(1+h)`) |
//! | `BirnbaumSaunders` | BS(shape `√h`, scale `x`) |
//! | `InverseGamma` | InvGamma(shape `1/(xh) - 1`, scale `1/h`) |
//! | `ReciprocalInverseGaussian` | density `exp(-(u-ξ)²/(2hu)) / √(2πhu)`, `ξ = x - h` |
//! | `InverseGaussian` | IG(mean `x`, shape `1/h`) |
//! | `LogNormal1` | LogNormal(`ln x`, `2√ln(1+h)`) |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::SupportKind;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_half_line, QuadratureSpec};
use crate::special::{gamma, ln_gamma};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelFamily {
    /// Dirac discrete uniform on `{0, ..., c-1}`.
    DirDU { c: u32 },
    /// Symmetric count triangular with arm `m`, restricted to ℕ.
    SymCountTriangular { m: u32 },
    Binomial,
    Poisson,
    Gamma,
    LogNormal2,
    Weibull,
    BirnbaumSaunders,
    InverseGamma,
    ReciprocalInverseGaussian,
    InverseGaussian,
    LogNormal1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsistencyOrder {
    First,
    Second,
}

/// Mean shift `a = E[Z] - x` and dispersion `b = Var[Z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelMoments {
    pub a: f64,
    pub b: f64,
}

/// Mass together with the moments, from quadrature or summation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericSummary {
    pub mass: f64,
    pub moments: KernelMoments,
}

impl KernelFamily {
    pub const CONTINUOUS: [KernelFamily; 8] = [
        KernelFamily::LogNormal2,
        KernelFamily::Weibull,
        KernelFamily::Gamma,
        KernelFamily::BirnbaumSaunders,
        KernelFamily::InverseGamma,
        KernelFamily::ReciprocalInverseGaussian,
        KernelFamily::InverseGaussian,
        KernelFamily::LogNormal1,
    ];

    pub fn support(&self) -> SupportKind {
        use KernelFamily::*;
        match self {
            DirDU { .. } | SymCountTriangular { .. } | Binomial | Poisson => SupportKind::Count,
            _ => SupportKind::Continuous,
        }
    }

    pub fn consistency_order(&self) -> ConsistencyOrder {
        match self {
            KernelFamily::Binomial | KernelFamily::Poisson => ConsistencyOrder::First,
            _ => ConsistencyOrder::Second,
        }
    }

    /// Exponent `r` in `‖K_{x,h}‖² ≤ c(x) h^{-r}`. Count kernels have squared
    /// norm at most one, so they satisfy the bound for every `r` and `None`
    /// is returned.
    pub fn squared_norm_rate(&self) -> Option<f64> {
        match self.support() {
            SupportKind::Continuous => Some(0.5),
            SupportKind::Count => None,
        }
    }

    /// Largest admissible bandwidth at target `x`, if the family has one.
    /// The bound is inclusive for `Binomial` and `DirDU` and exclusive for
    /// `ReciprocalInverseGaussian` and `InverseGamma`.
    pub fn max_bandwidth(&self, x: f64) -> Option<f64> {
        match self {
            KernelFamily::Binomial | KernelFamily::DirDU { .. } => Some(1.0),
            KernelFamily::ReciprocalInverseGaussian => Some(x),
            KernelFamily::InverseGamma => Some(1.0 / x),
            _ => None,
        }
    }

    /// Validates a target without reference to a bandwidth.
    pub fn check_target(&self, x: f64) -> Result<()> {
        use KernelFamily::*;
        if !x.is_finite() || x < 0.0 {
            return Err(Error::domain(format!("target {x} is not a finite nonnegative number")));
        }
        if self.support() == SupportKind::Count && x.fract() != 0.0 {
            return Err(Error::domain(format!("count kernel target {x} is not an integer")));
        }
        match *self {
            DirDU { c } if x >= f64::from(c) => Err(Error::domain(format!("DirDU target {x} outside 0..{c}"))),
            Gamma | DirDU { .. } | SymCountTriangular { .. } | Binomial | Poisson => Ok(()),
            _ if x == 0.0 => Err(Error::domain(format!("{self} kernel needs a positive target"))),
            _ => Ok(()),
        }
    }

    /// Validates the pair `(x, h)`.
    pub fn check(&self, x: f64, h: f64) -> Result<()> {
        use KernelFamily::*;
        if !x.is_finite() || x < 0.0 {
            return Err(Error::domain(format!("target {x} is not a finite nonnegative number")));
        }
        if !h.is_finite() {
            return Err(Error::domain(format!("bandwidth {h} is not finite")));
        }
        if self.support() == SupportKind::Count && x.fract() != 0.0 {
            return Err(Error::domain(format!("count kernel target {x} is not an integer")));
        }
        match *self {
            DirDU { c } => {
                if c < 2 {
                    return Err(Error::domain("DirDU needs at least two categories"));
                }
                if x >= f64::from(c) {
                    return Err(Error::domain(format!("DirDU target {x} outside 0..{c}")));
                }
                if !(0.0..=1.0).contains(&h) {
                    return Err(Error::domain(format!("DirDU bandwidth {h} outside [0, 1]")));
                }
            }
            Binomial => {
                if !(h > 0.0 && h <= 1.0) {
                    return Err(Error::domain(format!("binomial bandwidth {h} outside (0, 1]")));
                }
            }
            _ => {
                if h <= 0.0 {
                    return Err(Error::domain(format!("bandwidth {h} is not positive")));
                }
            }
        }
        match *self {
            Gamma | DirDU { .. } | SymCountTriangular { .. } | Binomial | Poisson => {}
            _ if x == 0.0 => {
                return Err(Error::domain(format!("{self} kernel needs a positive target")));
            }
            ReciprocalInverseGaussian if h >= x => {
                return Err(Error::domain(format!("RIG kernel needs h < x, got x={x}, h={h}")));
            }
            InverseGamma if x * h >= 1.0 => {
                return Err(Error::domain(format!("inverse gamma kernel needs xh < 1, got {}", x * h)));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn density(&self, x: f64, h: f64, u: f64) -> Result<f64> {
        Ok(self.log_density(x, h, u)?.exp())
    }

    /// Log of the kernel pdmf at `u`; `-inf` outside the support.
    pub fn log_density(&self, x: f64, h: f64, u: f64) -> Result<f64> {
        self.check(x, h)?;
        Ok(self.log_density_unchecked(x, h, u))
    }

    pub(crate) fn log_density_unchecked(&self, x: f64, h: f64, u: f64) -> f64 {
        use KernelFamily::*;
        if !(u >= 0.0) || !u.is_finite() {
            return f64::NEG_INFINITY;
        }
        match *self {
            DirDU { c } => {
                if u.fract() != 0.0 || u >= f64::from(c) {
                    f64::NEG_INFINITY
                } else if u == x {
                    (1.0 - h).ln()
                } else {
                    (h / f64::from(c - 1)).ln()
                }
            }
            SymCountTriangular { m } => {
                let k = (u - x).abs();
                if u.fract() != 0.0 || k > f64::from(m) {
                    return f64::NEG_INFINITY;
                }
                let top = f64::from(m + 1).powf(h);
                (top - k.powf(h)).ln() - sct_normalizer(m, x, h).ln()
            }
            Binomial => {
                let n = x + 1.0;
                if u.fract() != 0.0 || u > n {
                    return f64::NEG_INFINITY;
                }
                let p = (x + h) / n;
                let q = (1.0 - h) / n;
                ln_choose(n, u) + xlogy(u, p) + xlogy(n - u, q)
            }
            Poisson => {
                if u.fract() != 0.0 {
                    return f64::NEG_INFINITY;
                }
                let lam = x + h;
                xlogy(u, lam) - lam - ln_gamma(u + 1.0)
            }
            Gamma => {
                let shape = 1.0 + x / h;
                xlogy(shape - 1.0, u) - u / h - shape * h.ln() - ln_gamma(shape)
            }
            LogNormal2 => log_lognormal(u, x.ln() + h * h, h),
            LogNormal1 => log_lognormal(u, x.ln(), 2.0 * (h.ln_1p()).sqrt()),
            Weibull => {
                let k = 1.0 / h;
                let lam = x / gamma(1.0 + h);
                let z = u / lam;
                k.ln() - lam.ln() + xlogy(k - 1.0, z) - z.powf(k)
            }
            BirnbaumSaunders => {
                if u == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let a = h.sqrt();
                let r = x / u;
                ((r.sqrt() + r * r.sqrt()).ln() - (2.0 * a * x).ln() - 0.5 * LN_2PI)
                    - (u / x + r - 2.0) / (2.0 * h)
            }
            InverseGamma => {
                if u == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let shape = 1.0 / (x * h) - 1.0;
                let scale = 1.0 / h;
                shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * u.ln() - scale / u
            }
            ReciprocalInverseGaussian => {
                if u == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let xi = x - h;
                -0.5 * (LN_2PI + (h * u).ln()) - (u - xi).powi(2) / (2.0 * h * u)
            }
            InverseGaussian => {
                if u == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let lam = 1.0 / h;
                0.5 * (lam.ln() - LN_2PI - 3.0 * u.ln()) - lam * (u - x).powi(2) / (2.0 * x * x * u)
            }
        }
    }

    /// Closed-form mean shift and dispersion.
    pub fn moments(&self, x: f64, h: f64) -> Result<KernelMoments> {
        use KernelFamily::*;
        self.check(x, h)?;
        let (a, b) = match *self {
            DirDU { c } => {
                let c = f64::from(c);
                let shift = c / 2.0 - x - x / (c - 1.0);
                let a = h * shift;
                let b = h * (c * (2.0 * c - 1.0) / 6.0 + x * x - x * c + x * x / (c - 1.0)) - a * a;
                (a, b)
            }
            SymCountTriangular { m } => {
                if x >= f64::from(m) {
                    let p = sct_normalizer(m, x, h);
                    let mf = f64::from(m);
                    let tail: f64 = (1..=m).map(|l| f64::from(l).powf(h + 2.0)).sum();
                    let b = (mf * (2.0 * mf + 1.0) * (mf + 1.0).powf(h + 1.0) / 3.0 - 2.0 * tail) / p;
                    (0.0, b)
                } else {
                    let s = self.sum_count(x, h, |u, w| w * (u - x));
                    let mean = x + s;
                    (s, self.sum_count(x, h, |u, w| w * (u - mean).powi(2)))
                }
            }
            Binomial => (h, (x + h) * (1.0 - h) / (x + 1.0)),
            Poisson => (h, x + h),
            Gamma => (h, (x + h) * h),
            LogNormal2 => (x * (1.5 * h * h).exp_m1(), x * x * (3.0 * h * h).exp() * (h * h).exp_m1()),
            Weibull => {
                let g1 = gamma(1.0 + h);
                (0.0, x * x * (gamma(1.0 + 2.0 * h) / (g1 * g1) - 1.0))
            }
            BirnbaumSaunders => (x * h / 2.0, x * x * h * (2.0 + 2.5 * h) / 2.0),
            InverseGamma => {
                let t = x * h;
                if 1.0 - 3.0 * t <= 0.0 {
                    return Err(Error::domain(format!(
                        "inverse gamma kernel moments need 1 - 3xh > 0, got xh = {t}"
                    )));
                }
                (2.0 * x * t / (1.0 - 2.0 * t), x * x * t / ((1.0 - 3.0 * t) * (1.0 - 2.0 * t).powi(2)))
            }
            ReciprocalInverseGaussian => (0.0, (x + h) * h),
            InverseGaussian => (0.0, x.powi(3) * h),
            LogNormal1 => {
                let q = (1.0 + h).powi(4);
                (x * h * (h + 2.0), x * x * q * (q - 1.0))
            }
        };
        Ok(KernelMoments { a, b })
    }

    /// Mass, mean shift and dispersion computed by quadrature (continuous)
    /// or summation (count).
    pub fn numeric_summary(&self, x: f64, h: f64, quad: QuadratureSpec) -> Result<NumericSummary> {
        self.check(x, h)?;
        if *self == KernelFamily::InverseGamma && 1.0 - 3.0 * x * h <= 0.0 {
            return Err(Error::domain("inverse gamma kernel moments need 1 - 3xh > 0"));
        }
        match self.support() {
            SupportKind::Count => {
                let mass = self.sum_count(x, h, |_, w| w);
                let a = self.sum_count(x, h, |u, w| w * (u - x));
                let mean = x + a;
                let b = self.sum_count(x, h, |u, w| w * (u - mean).powi(2));
                if !(mass.is_finite() && (mass - 1.0).abs() < 1e-6) {
                    return Err(Error::numerical("count kernel summation lost mass", (mass - 1.0).abs()));
                }
                Ok(NumericSummary {
                    mass,
                    moments: KernelMoments { a, b },
                })
            }
            SupportKind::Continuous => {
                let mass = self.integrate_against(x, h, |_| 1.0, quad)?;
                let a = self.integrate_against(x, h, |u| u - x, quad)?;
                let mean = x + a;
                let b = self.integrate_against(x, h, |u| (u - mean).powi(2), quad)?;
                Ok(NumericSummary {
                    mass,
                    moments: KernelMoments { a, b },
                })
            }
        }
    }

    pub fn numeric_moments(&self, x: f64, h: f64, quad: QuadratureSpec) -> Result<KernelMoments> {
        Ok(self.numeric_summary(x, h, quad)?.moments)
    }

    /// Sum of `f(u, K(u))` over the count support, truncated once the
    /// remaining Poisson tail is below `1e-18`.
    fn sum_count<F: Fn(f64, f64) -> f64>(&self, x: f64, h: f64, f: F) -> f64 {
        use KernelFamily::*;
        let (lo, hi) = match *self {
            DirDU { c } => (0.0, f64::from(c - 1)),
            SymCountTriangular { m } => ((x - f64::from(m)).max(0.0), x + f64::from(m)),
            Binomial => (0.0, x + 1.0),
            _ => {
                let lam = x + h;
                (0.0, (lam + 40.0 * lam.sqrt() + 60.0).ceil())
            }
        };
        let mut terms = Vec::new();
        let mut u = lo;
        while u <= hi {
            let w = self.log_density_unchecked(x, h, u).exp();
            if w > 0.0 {
                terms.push(f(u, w));
            }
            u += 1.0;
        }
        crate::special::pairwise_sum(&terms)
    }

    fn integrate_against<F: Fn(f64) -> f64>(&self, x: f64, h: f64, phi: F, quad: QuadratureSpec) -> Result<f64> {
        let closed = self.moments(x, h).ok();
        let center = closed.map_or(x, |m| x + m.a).max(f64::MIN_POSITIVE);
        let spread = closed.map_or(x, |m| m.b.sqrt()).max(1e-3 * center);
        let f = |u: f64| {
            let ld = self.log_density_unchecked(x, h, u);
            if ld == f64::NEG_INFINITY {
                0.0
            } else {
                phi(u) * ld.exp()
            }
        };
        if *self == KernelFamily::InverseGamma {
            // v = 1/u turns the heavy right tail into a light gamma tail
            let g = |v: f64| if v > 0.0 { f(1.0 / v) / (v * v) } else { 0.0 };
            let vc = 1.0 / center;
            let left = integrate(g, 0.0, vc, quad)?;
            let right = integrate_half_line(|t| g(vc + t), vc.max(spread / (center * center)), quad)?;
            return Ok(left.value + right.value);
        }
        let left = integrate(f, 0.0, center, quad)?;
        let right = integrate_half_line(|t| f(center + t), spread, quad)?;
        Ok(left.value + right.value)
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use KernelFamily::*;
        match self {
            DirDU { c } => write!(f, "dirdu:{c}"),
            SymCountTriangular { m } => write!(f, "triangular:{m}"),
            Binomial => f.write_str("binomial"),
            Poisson => f.write_str("poisson"),
            Gamma => f.write_str("gamma"),
            LogNormal2 => f.write_str("lognormal2"),
            Weibull => f.write_str("weibull"),
            BirnbaumSaunders => f.write_str("birnbaum-saunders"),
            InverseGamma => f.write_str("inverse-gamma"),
            ReciprocalInverseGaussian => f.write_str("rig"),
            InverseGaussian => f.write_str("inverse-gaussian"),
            LogNormal1 => f.write_str("lognormal1"),
        }
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    /// Accepts the names printed by `Display`; parameterized families take
    /// the form `dirdu:C` and `triangular:M`.
    fn from_str(s: &str) -> Result<Self> {
        use KernelFamily::*;
        let lower = s.trim().to_ascii_lowercase();
        let (name, arg) = match lower.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (lower.as_str(), None),
        };
        let int_arg = |what: &str| -> Result<u32> {
            arg.ok_or_else(|| Error::domain(format!("{what} kernel needs a parameter, e.g. {what}:3")))?
                .parse::<u32>()
                .map_err(|e| Error::domain(format!("bad {what} parameter: {e}")))
        };
        let fam = match name {
            "dirdu" => DirDU { c: int_arg("dirdu")? },
            "triangular" | "sct" => SymCountTriangular { m: int_arg("triangular")? },
            "binomial" => Binomial,
            "poisson" => Poisson,
            "gamma" | "g" => Gamma,
            "lognormal2" | "ln2" => LogNormal2,
            "weibull" | "w" => Weibull,
            "birnbaum-saunders" | "bs" => BirnbaumSaunders,
            "inverse-gamma" | "invgamma" => InverseGamma,
            "rig" => ReciprocalInverseGaussian,
            "inverse-gaussian" | "invgauss" => InverseGaussian,
            "lognormal1" | "ln1" => LogNormal1,
            _ => return Err(Error::domain(format!("unknown kernel family '{s}'"))),
        };
        if arg.is_some() && !matches!(fam, DirDU { .. } | SymCountTriangular { .. }) {
            return Err(Error::domain(format!("kernel family '{name}' takes no parameter")));
        }
        Ok(fam)
    }
}

/// A kernel family bound to a target and a bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub x: f64,
    pub h: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, x: f64, h: f64) -> Result<Self> {
        family.check(x, h)?;
        Ok(Self { family, x, h })
    }

    pub fn density(&self, u: f64) -> f64 {
        self.family.log_density_unchecked(self.x, self.h, u).exp()
    }

    pub fn moments(&self) -> Result<KernelMoments> {
        self.family.moments(self.x, self.h)
    }
}

/// `Π_j K_{x_j, h_j}(u_j)`.
pub fn product_density(x: &[f64], h: &[f64], families: &[KernelFamily], u: &[f64]) -> Result<f64> {
    Ok(log_product_density(x, h, families, u)?.exp())
}

/// Sum of the univariate log densities.
pub fn log_product_density(x: &[f64], h: &[f64], families: &[KernelFamily], u: &[f64]) -> Result<f64> {
    let d = x.len();
    if h.len() != d || families.len() != d || u.len() != d {
        return Err(Error::domain(format!(
            "dimension mismatch: x {d}, h {}, families {}, u {}",
            h.len(),
            families.len(),
            u.len()
        )));
    }
    let mut total = 0.0;
    for j in 0..d {
        total += families[j].log_density(x[j], h[j], u[j])?;
    }
    Ok(total)
}

fn sct_normalizer(m: u32, x: f64, h: f64) -> f64 {
    let top = f64::from(m + 1).powf(h);
    if x >= f64::from(m) {
        let s: f64 = (1..=m).map(|l| f64::from(l).powf(h)).sum();
        f64::from(2 * m + 1) * top - 2.0 * s
    } else {
        let lo = -(x as i64);
        (lo..=i64::from(m)).map(|k| top - (k.unsigned_abs() as f64).powf(h)).sum()
    }
}

fn log_lognormal(u: f64, mu: f64, sigma: f64) -> f64 {
    if u == 0.0 {
        return f64::NEG_INFINITY;
    }
    let z = (u.ln() - mu) / sigma;
    -u.ln() - sigma.ln() - 0.5 * LN_2PI - 0.5 * z * z
}

/// `a ln b` with `0 ln 0 = 0`.
fn xlogy(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * b.ln()
    }
}

fn ln_choose(n: f64, k: f64) -> f64 {
    if k == 0.0 || k == n {
        return 0.0;
    }
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use KernelFamily::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn gamma_boundary_value() {
        assert!(close(Gamma.density(0.0, 0.5, 0.0).unwrap(), 2.0, 1e-15));
    }

    #[test]
    fn dirdu_example() {
        let k = DirDU { c: 2 };
        assert!(close(k.density(0.0, 0.3, 0.0).unwrap(), 0.7, 1e-15));
        assert!(close(k.density(0.0, 0.3, 1.0).unwrap(), 0.3, 1e-15));
        assert!(k.density(2.0, 0.3, 0.0).is_err());
    }

    #[test]
    fn binomial_point_mass() {
        assert_eq!(Binomial.density(0.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(Binomial.density(0.0, 1.0, 0.0).unwrap(), 0.0);
        assert!(Binomial.density(0.0, 1.5, 0.0).is_err());
    }

    #[test]
    fn triangular_example() {
        let k = SymCountTriangular { m: 1 };
        assert!(close(k.density(5.0, 1.0, 5.0).unwrap(), 0.5, 1e-15));
        assert!(close(k.density(5.0, 1.0, 4.0).unwrap(), 0.25, 1e-15));
        assert!(close(k.density(5.0, 1.0, 6.0).unwrap(), 0.25, 1e-15));
        assert_eq!(k.density(5.0, 1.0, 7.0).unwrap(), 0.0);
    }

    #[test]
    fn triangular_truncated_at_zero_renormalizes() {
        let k = SymCountTriangular { m: 2 };
        let total: f64 = (0..5).map(|u| k.density(0.0, 0.7, f64::from(u)).unwrap()).sum();
        assert!(close(total, 1.0, 1e-14));
    }

    #[test]
    fn closed_moments_examples() {
        let m = Gamma.moments(2.0, 0.3).unwrap();
        assert!(close(m.a, 0.3, 1e-15) && close(m.b, 0.69, 1e-15));
        assert_eq!(Weibull.moments(1.7, 0.2).unwrap().a, 0.0);
        let m = Binomial.moments(3.0, 0.1).unwrap();
        assert!(close(m.a, 0.1, 1e-15) && close(m.b, 0.6975, 1e-15));
        assert!(InverseGamma.moments(1.0, 0.4).is_err());
        assert!(InverseGamma.density(1.0, 0.4, 1.0).is_ok());
    }

    #[test]
    fn numeric_moment_examples() {
        let q = QuadratureSpec::default();
        let m = Gamma.numeric_moments(2.0, 0.3, q).unwrap();
        assert!((m.a - 0.3).abs() < 1e-8 && (m.b - 0.69).abs() < 1e-8);
        let m = Poisson.numeric_moments(4.0, 0.2, q).unwrap();
        assert!((m.a - 0.2).abs() < 1e-10 && (m.b - 4.2).abs() < 1e-10);
        let m = DirDU { c: 3 }.numeric_moments(1.0, 0.0, q).unwrap();
        assert_eq!((m.a, m.b), (0.0, 0.0));
    }

    #[test]
    fn binomial_dispersion_limit() {
        for x in 0..6 {
            let x = f64::from(x);
            let b = Binomial.moments(x, 1e-9).unwrap().b;
            assert!((b - x / (x + 1.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn dirdu_depends_on_indicator_only() {
        let k = DirDU { c: 5 };
        let off: Vec<f64> = [0.0, 1.0, 3.0, 4.0].iter().map(|&u| k.density(2.0, 0.4, u).unwrap()).collect();
        assert!(off.iter().all(|&v| v == off[0]));
    }

    #[test]
    fn product_matches_factors() {
        let fam = [Gamma, Gamma];
        let p = product_density(&[1.0, 2.0], &[0.3, 0.2], &fam, &[1.4, 2.2]).unwrap();
        let q = Gamma.density(1.0, 0.3, 1.4).unwrap() * Gamma.density(2.0, 0.2, 2.2).unwrap();
        assert!(close(p, q, 1e-15));
        let z = product_density(&[1.0, 2.0], &[0.3, 0.2], &[Binomial, Gamma], &[5.0, 2.2]);
        assert!(z.is_err() || z.unwrap() == 0.0);
        assert!(product_density(&[1.0], &[0.3, 0.2], &fam, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn parse_round_trip() {
        let all = [
            DirDU { c: 4 },
            SymCountTriangular { m: 2 },
            Binomial,
            Poisson,
            Gamma,
            LogNormal2,
            Weibull,
            BirnbaumSaunders,
            InverseGamma,
            ReciprocalInverseGaussian,
            InverseGaussian,
            LogNormal1,
        ];
        for k in all {
            assert_eq!(k.to_string().parse::<KernelFamily>().unwrap(), k);
        }
        assert!("gamma:2".parse::<KernelFamily>().is_err());
        assert!("dirdu".parse::<KernelFamily>().is_err());
    }
}
