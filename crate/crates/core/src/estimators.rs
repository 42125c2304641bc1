//! Associated-kernel density estimators on the orthant: the plain kernel
//! estimator, the semiparametric estimator with a parametric start, its
//! weight function, leave-one-out values and the normalizing constant.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SupportKind};
use crate::error::{Error, Result};
use crate::kernels::KernelFamily;
use crate::parametric::StartModel;
use crate::par;
use crate::quadrature::{composite_rule, integrate, integrate_half_line, QuadratureSpec};
use crate::special::{log_sum_exp, pairwise_sum};

/// Diagonal bandwidths, shared by all rows or one vector per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthAssignment {
    Global(Vec<f64>),
    PerObservation(Vec<Vec<f64>>),
}

impl BandwidthAssignment {
    /// Bandwidth vector attached to row `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        match self {
            BandwidthAssignment::Global(h) => h,
            BandwidthAssignment::PerObservation(rows) => &rows[i],
        }
    }

    fn validate(&self, n: usize, d: usize) -> Result<()> {
        let rows: Vec<&[f64]> = match self {
            BandwidthAssignment::Global(h) => vec![h.as_slice()],
            BandwidthAssignment::PerObservation(rows) => {
                if rows.len() != n {
                    return Err(Error::domain(format!("{} bandwidth rows for {n} observations", rows.len())));
                }
                rows.iter().map(|r| r.as_slice()).collect()
            }
        };
        for r in rows {
            if r.len() != d {
                return Err(Error::domain(format!("bandwidth vector of length {} for dimension {d}", r.len())));
            }
            if let Some(h) = r.iter().find(|h| !(**h >= 0.0 && h.is_finite())) {
                return Err(Error::domain(format!("bandwidth {h} is not a finite nonnegative number")));
            }
        }
        Ok(())
    }
}

/// `log K_{x,h}(u)`, with pairs `(x, h)` that break a bandwidth constraint
/// contributing zero mass.
#[inline]
pub(crate) fn log_kernel_or_zero(family: &KernelFamily, x: f64, h: f64, u: f64) -> f64 {
    if family.check(x, h).is_ok() {
        family.log_density_unchecked(x, h, u)
    } else {
        f64::NEG_INFINITY
    }
}

/// Semiparametric density estimate `f̂_n = p_d(·; θ̂) w̃_n`.
///
/// With `StartModel::ConstantOne` this is the plain associated-kernel
/// estimator. Row `i` contributes with its own bandwidth vector.
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    data: Dataset,
    families: Vec<KernelFamily>,
    bandwidths: BandwidthAssignment,
    start: StartModel,
    log_start: Vec<f64>,
    scale: Option<f64>,
}

impl DensityEstimate {
    pub fn new(data: Dataset, families: Vec<KernelFamily>, bandwidths: BandwidthAssignment, start: StartModel) -> Result<Self> {
        let (n, d) = (data.nrows(), data.ncols());
        if families.len() != d {
            return Err(Error::domain(format!("{} kernel families for {d} columns", families.len())));
        }
        bandwidths.validate(n, d)?;
        start.validate()?;
        let mut log_start = Vec::with_capacity(n);
        for (i, row) in data.rows().enumerate() {
            let lp = start.log_pdf(row)?;
            if !lp.is_finite() {
                return Err(Error::StartSupport { row: i });
            }
            log_start.push(lp);
        }
        Ok(Self {
            data,
            families,
            bandwidths,
            start,
            log_start,
            scale: None,
        })
    }

    /// Plain kernel estimator.
    pub fn nonparametric(data: Dataset, families: Vec<KernelFamily>, bandwidths: BandwidthAssignment) -> Result<Self> {
        Self::new(data, families, bandwidths, StartModel::ConstantOne)
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn families(&self) -> &[KernelFamily] {
        &self.families
    }

    pub fn bandwidths(&self) -> &BandwidthAssignment {
        &self.bandwidths
    }

    pub fn start(&self) -> &StartModel {
        &self.start
    }

    /// Cached `log p_d(X_i; θ̂)`.
    pub fn log_start(&self) -> &[f64] {
        &self.log_start
    }

    /// Divisor applied to every value, `None` for raw estimates.
    pub fn renormalization(&self) -> Option<f64> {
        self.scale
    }

    /// Same estimate divided by its normalizing constant.
    pub fn renormalized(mut self, quad: QuadratureSpec) -> Result<Self> {
        self.scale = None;
        let c = self.normalizing_constant(quad)?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::numerical("normalizing constant is not positive", c));
        }
        self.scale = Some(c);
        Ok(self)
    }

    fn log_scale(&self) -> f64 {
        self.scale.map_or(0.0, f64::ln)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.families.len() {
            return Err(Error::domain(format!(
                "point has dimension {}, estimate has {}",
                x.len(),
                self.families.len()
            )));
        }
        for (f, v) in self.families.iter().zip(x) {
            f.check_target(*v)?;
        }
        Ok(())
    }

    fn log_kernel_term(&self, x: &[f64], h: &[f64], i: usize) -> f64 {
        let row = self.data.row(i);
        let mut total = 0.0;
        for j in 0..x.len() {
            total += log_kernel_or_zero(&self.families[j], x[j], h[j], row[j]);
            if total == f64::NEG_INFINITY {
                break;
            }
        }
        total
    }

    /// `log((1/n) Σ_i Π_j K(X_ij) / p_d(X_i))`, optionally ignoring the start.
    fn log_mean(&self, x: &[f64], use_start: bool) -> f64 {
        let n = self.data.nrows();
        let terms: Vec<f64> = (0..n)
            .map(|i| {
                let k = self.log_kernel_term(x, self.bandwidths.row(i), i);
                if use_start {
                    k - self.log_start[i]
                } else {
                    k
                }
            })
            .collect();
        log_sum_exp(&terms) - (n as f64).ln()
    }

    /// Plain kernel estimate at `x`, ignoring the start model.
    pub fn nonparametric_at(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok((self.log_mean(x, false) - self.log_scale()).exp())
    }

    /// `log w̃_n(x)`.
    pub fn log_weight_at(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.log_mean(x, true) - self.log_scale())
    }

    pub fn weight_at(&self, x: &[f64]) -> Result<f64> {
        let lp = self.start.log_pdf(x)?;
        if lp < (1e-300f64).ln() {
            return Err(Error::EvaluationUnderflow(format!("start density {:e} at {x:?}", lp.exp())));
        }
        Ok(self.log_weight_at(x)?.exp())
    }

    pub fn log_semiparametric_at(&self, x: &[f64]) -> Result<f64> {
        let lp = self.start.log_pdf(x)?;
        Ok(lp + self.log_weight_at(x)?)
    }

    pub fn semiparametric_at(&self, x: &[f64]) -> Result<f64> {
        Ok(self.log_semiparametric_at(x)?.exp())
    }

    /// Leave-one-out value at `X_i`, using row `i`'s bandwidths for every term.
    pub fn loo_at(&self, i: usize) -> Result<f64> {
        Ok(self.log_loo_at(i)?.exp())
    }

    pub fn log_loo_at(&self, i: usize) -> Result<f64> {
        let n = self.data.nrows();
        if n < 2 {
            return Err(Error::InsufficientData { needed: 2, got: n });
        }
        if i >= n {
            return Err(Error::domain(format!("row {i} out of range for {n} rows")));
        }
        let x = self.data.row(i);
        let h = self.bandwidths.row(i);
        let terms: Vec<f64> = (0..n)
            .filter(|&l| l != i)
            .map(|l| self.log_kernel_term(x, h, l) - self.log_start[l])
            .collect();
        Ok(self.log_start[i] + log_sum_exp(&terms) - ((n - 1) as f64).ln() - self.log_scale())
    }

    /// Semiparametric estimate at every point, in input order.
    pub fn evaluate(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        par::try_map_range(points.len(), |k| self.semiparametric_at(&points[k]))
    }

    /// Integral (continuous) or sum (counts) of the estimate over the orthant.
    ///
    /// Start models that factor over coordinates give an exact product of
    /// one-dimensional integrals per row; otherwise a tensor Gauss–Legendre
    /// grid is used.
    pub fn normalizing_constant(&self, quad: QuadratureSpec) -> Result<f64> {
        let d = self.families.len();
        let separable = match &self.start {
            StartModel::MarshallOlkin { mu0, .. } => d == 1 || *mu0 == 0.0,
            _ => true,
        };
        let c = if separable {
            self.separable_constant(quad)?
        } else {
            self.tensor_constant()?
        };
        Ok(c / self.scale.unwrap_or(1.0))
    }

    fn start_marginal(&self, j: usize) -> StartModel {
        match &self.start {
            StartModel::ExponentialProduct { mu } | StartModel::MarshallOlkin { mu, .. } => {
                StartModel::ExponentialProduct { mu: vec![mu[j]] }
            }
            other => other.clone(),
        }
    }

    fn separable_constant(&self, quad: QuadratureSpec) -> Result<f64> {
        let n = self.data.nrows();
        let d = self.families.len();
        let marginals: Vec<StartModel> = (0..d).map(|j| self.start_marginal(j)).collect();
        let per_row = par::try_map_range(n, |i| -> Result<f64> {
            let h = self.bandwidths.row(i);
            let row = self.data.row(i);
            let mut log_total = -self.log_start[i];
            for j in 0..d {
                let v = target_integral(&self.families[j], h[j], row[j], &marginals[j], quad)?;
                if v <= 0.0 {
                    return Ok(0.0);
                }
                log_total += v.ln();
            }
            Ok(log_total.exp())
        })?;
        Ok(pairwise_sum(&per_row) / n as f64)
    }

    fn tensor_constant(&self) -> Result<f64> {
        let d = self.families.len();
        let (panels, order) = if d <= 2 { (16, 16) } else { (8, 8) };
        let mut axes = Vec::with_capacity(d);
        for j in 0..d {
            let col = self.data.column(j);
            let max_x = col.iter().copied().fold(0.0, f64::max);
            let max_h = (0..self.data.nrows()).map(|i| self.bandwidths.row(i)[j]).fold(0.0, f64::max);
            let top = max_x * 1.5 + 10.0 * max_h;
            axes.push(match self.families[j].support() {
                SupportKind::Continuous => composite_rule(0.0, top, panels, order),
                SupportKind::Count => {
                    let m = top.ceil() as usize + 10;
                    ((0..=m).map(|k| k as f64).collect(), vec![1.0; m + 1])
                }
            });
        }
        let total: usize = axes.iter().map(|a| a.0.len()).product();
        let values = par::map_range(total, |mut k| {
            let mut x = Vec::with_capacity(d);
            let mut w = 1.0;
            for axis in &axes {
                let len = axis.0.len();
                x.push(axis.0[k % len]);
                w *= axis.1[k % len];
                k /= len;
            }
            if self.check_point(&x).is_err() {
                return 0.0;
            }
            match self.start.log_pdf(&x) {
                Ok(lp) => w * (lp + self.log_mean(&x, true)).exp(),
                Err(_) => 0.0,
            }
        });
        Ok(pairwise_sum(&values))
    }
}

/// `∫ K_{x,h}(u) p(x) dx` over the admissible targets `x` (a sum for counts).
fn target_integral(family: &KernelFamily, h: f64, u: f64, start: &StartModel, quad: QuadratureSpec) -> Result<f64> {
    let f = |x: f64| -> f64 {
        let lk = log_kernel_or_zero(family, x, h, u);
        if lk == f64::NEG_INFINITY {
            return 0.0;
        }
        match start.log_pdf(&[x]) {
            Ok(lp) => (lk + lp).exp(),
            Err(_) => 0.0,
        }
    };
    match family.support() {
        SupportKind::Count => {
            let upper = match family {
                KernelFamily::DirDU { c } => Some(f64::from(*c) - 1.0),
                KernelFamily::SymCountTriangular { m } => Some(u + f64::from(*m)),
                _ => None,
            };
            let mut terms = Vec::new();
            let mut x = 0.0;
            loop {
                let v = f(x);
                terms.push(v);
                if let Some(top) = upper {
                    if x >= top {
                        break;
                    }
                } else if x > u + 1.0 && v <= 1e-17 * pairwise_sum(&terms) {
                    break;
                }
                x += 1.0;
                if x > 1e7 {
                    return Err(Error::numerical("count summation tail did not decay", v));
                }
            }
            Ok(pairwise_sum(&terms))
        }
        SupportKind::Continuous => {
            let lower = match family {
                KernelFamily::ReciprocalInverseGaussian => h,
                _ => 0.0,
            };
            match family {
                KernelFamily::InverseGamma => {
                    if !(h > 0.0) {
                        return Ok(0.0);
                    }
                    let top = 1.0 / h;
                    let mid = u.clamp(0.0, top);
                    Ok(integrate(f, 0.0, mid, quad)?.value + integrate(f, mid, top, quad)?.value)
                }
                _ => {
                    let width = u.max(h).max(1e-6);
                    let head = if u > lower {
                        integrate(f, lower, u, quad)?.value
                    } else {
                        0.0
                    };
                    let start_at = u.max(lower);
                    Ok(head + integrate_half_line(|t| f(start_at + t), width, quad)?.value)
                }
            }
        }
    }
}
