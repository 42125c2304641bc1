//! Bandwidth selectors: Bayesian adaptive (closed form for gamma kernels and
//! a quadrature version for any continuous kernel), local and global Bayes,
//! and least-squares cross-validation.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SupportKind};
use crate::error::{Error, Result};
use crate::estimators::{log_kernel_or_zero, BandwidthAssignment};
use crate::kernels::KernelFamily;
use crate::par;
use crate::parametric::StartModel;
use crate::quadrature::{composite_rule, log_integral_line, QuadratureSpec};
use crate::special::{ln_gamma, log_sum_exp, pairwise_sum};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Independent inverse-gamma priors `Ig(α, β_ℓ)` on the diagonal bandwidths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub alpha: f64,
    pub beta: Vec<f64>,
}

impl PriorSpec {
    pub fn new(alpha: f64, beta: Vec<f64>) -> Result<Self> {
        if !(alpha > 0.5 && alpha.is_finite()) {
            return Err(Error::domain(format!("prior shape {alpha} must exceed 1/2")));
        }
        if beta.is_empty() || beta.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(Error::domain("prior scales must be positive"));
        }
        Ok(Self { alpha, beta })
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if self.beta.len() != d {
            return Err(Error::domain(format!("prior has {} scales for dimension {d}", self.beta.len())));
        }
        Ok(())
    }

    /// `log Ig(h; α, β_ℓ)`.
    pub fn log_density(&self, axis: usize, h: f64) -> f64 {
        let (a, b) = (self.alpha, self.beta[axis]);
        if !(h > 0.0) {
            return f64::NEG_INFINITY;
        }
        a * b.ln() - ln_gamma(a) - (a + 1.0) * h.ln() - b / h
    }
}

/// `α = n^{2/5}`, `β = (1, …, 1)`.
pub fn default_prior(n: usize, d: usize) -> Result<PriorSpec> {
    if n < 7 {
        return Err(Error::domain(format!(
            "default prior needs n >= 7 so that n^(2/5) > 2 (got n = {n}); pass an explicit prior"
        )));
    }
    PriorSpec::new((0.4 * (n as f64).log2()).exp2(), vec![1.0; d])
}

/// Per-observation Bayesian bandwidths with the posterior mixture weights
/// over leave-one-out terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveBayes {
    /// `n × d` bandwidths.
    pub bandwidths: Vec<Vec<f64>>,
    /// Row `i` holds the weight of every `j`; entry `i` itself is 0.
    pub mixture_weights: Vec<Vec<f64>>,
    /// Pairs `(i, j)` dropped because `X_jℓ = 0 < X_iℓ` on some axis.
    pub excluded_terms: Vec<(usize, usize)>,
}

impl AdaptiveBayes {
    pub fn assignment(&self) -> BandwidthAssignment {
        BandwidthAssignment::PerObservation(self.bandwidths.clone())
    }
}

fn start_logs(data: &Dataset, start: &StartModel) -> Result<Vec<f64>> {
    start.validate()?;
    data.rows()
        .enumerate()
        .map(|(i, row)| {
            let lp = start.log_pdf(row)?;
            if lp.is_finite() {
                Ok(lp)
            } else {
                Err(Error::StartSupport { row: i })
            }
        })
        .collect()
}

fn check_bayes_input(data: &Dataset, prior: &PriorSpec) -> Result<()> {
    if data.nrows() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: data.nrows() });
    }
    prior.check_dim(data.ncols())
}

/// Closed-form adaptive Bayesian bandwidths for product gamma kernels.
pub fn adaptive_bayes_gamma_closed(data: &Dataset, start: &StartModel, prior: &PriorSpec) -> Result<AdaptiveBayes> {
    check_bayes_input(data, prior)?;
    if data.support() != SupportKind::Continuous {
        return Err(Error::domain("gamma-kernel Bayesian bandwidths need continuous data"));
    }
    if prior.alpha <= 0.5 {
        return Err(Error::domain("posterior mean needs alpha > 1/2"));
    }
    let log_start = start_logs(data, start)?;
    let (n, d) = (data.nrows(), data.ncols());
    let a = prior.alpha;
    let ln_beta: Vec<f64> = prior.beta.iter().map(|b| b.ln()).collect();
    let lg_half = ln_gamma(a + 0.5);
    let lg_one = ln_gamma(a + 1.0);

    type Row = (Vec<f64>, Vec<f64>, Vec<(usize, usize)>);
    let rows: Vec<Row> = par::try_map_range(n, |i| -> Result<Row> {
        let xi = data.row(i);
        let mut log_w = vec![f64::NEG_INFINITY; n];
        let mut means = vec![vec![0.0; d]; n];
        let mut excluded = Vec::new();
        for j in (0..n).filter(|&j| j != i) {
            let xj = data.row(j);
            let mut lw = -log_start[j];
            for l in 0..d {
                let beta = prior.beta[l];
                if xi[l] == 0.0 {
                    lw += lg_one + a * ln_beta[l] - (a + 1.0) * (xj[l] + beta).ln();
                    means[j][l] = (xj[l] + beta) / a;
                } else if xj[l] == 0.0 {
                    lw = f64::NEG_INFINITY;
                    excluded.push((i, j));
                    break;
                } else {
                    let b = xi[l] * (xi[l] / xj[l]).ln() + xj[l] - xi[l] + beta;
                    assert!(b > 0.0, "posterior scale must be positive");
                    lw += lg_half + a * ln_beta[l] - 0.5 * xi[l].ln() - 0.5 * LN_2PI - (a + 0.5) * b.ln();
                    means[j][l] = b / (a - 0.5);
                }
            }
            log_w[j] = lw;
        }
        // sum in a canonical order so that permuting rows permutes results exactly
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&p, &q| {
            log_w[p]
                .total_cmp(&log_w[q])
                .then_with(|| means[p].iter().zip(&means[q]).fold(std::cmp::Ordering::Equal, |o, (a, b)| o.then(a.total_cmp(b))))
        });
        let sorted: Vec<f64> = order.iter().map(|&j| log_w[j]).collect();
        let norm = log_sum_exp(&sorted);
        if norm == f64::NEG_INFINITY {
            return Err(Error::DegenerateRow { row: i });
        }
        let weights: Vec<f64> = log_w.iter().map(|v| (v - norm).exp()).collect();
        let h = (0..d)
            .map(|l| pairwise_sum(&order.iter().map(|&j| weights[j] * means[j][l]).collect::<Vec<_>>()))
            .collect();
        Ok((h, weights, excluded))
    })?;
    let mut out = AdaptiveBayes {
        bandwidths: Vec::with_capacity(n),
        mixture_weights: Vec::with_capacity(n),
        excluded_terms: Vec::new(),
    };
    for (h, w, e) in rows {
        out.bandwidths.push(h);
        out.mixture_weights.push(w);
        out.excluded_terms.extend(e);
    }
    Ok(out)
}

/// Kernel used inside the leave-one-out likelihood of the quadrature
/// selectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LooKernel {
    /// The family's own density.
    #[default]
    Exact,
    /// Gamma kernels with `Γ(1 + x/h)` replaced by its Stirling
    /// approximation, the form under which the closed-form selector is exact.
    StirlingGamma,
}

fn log_kernel_for(loo: LooKernel, family: &KernelFamily, x: f64, h: f64, u: f64) -> f64 {
    match (loo, family) {
        (LooKernel::StirlingGamma, KernelFamily::Gamma) => {
            if !(h > 0.0) || u < 0.0 {
                f64::NEG_INFINITY
            } else if x == 0.0 {
                -u / h - h.ln()
            } else if u == 0.0 {
                f64::NEG_INFINITY
            } else {
                -(x * (x / u).ln() + u - x) / h - 0.5 * (LN_2PI + x.ln()) - 0.5 * h.ln()
            }
        }
        _ => log_kernel_or_zero(family, x, h, u),
    }
}

/// `(ln ∫ π K dh, ln ∫ h π K dh)` along one axis, integrating over `ln h`.
fn axis_log_moments(
    family: &KernelFamily,
    loo: LooKernel,
    prior: &PriorSpec,
    axis: usize,
    x: f64,
    u: f64,
    quad: QuadratureSpec,
) -> Result<(f64, f64)> {
    let upper = family.max_bandwidth(x).map(f64::ln);
    let g = |s: f64| {
        let h = s.exp();
        let lk = log_kernel_for(loo, family, x, h, u);
        if lk == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        prior.log_density(axis, h) + lk + s
    };
    let z = log_integral_line(g, upper, quad)?;
    if z == f64::NEG_INFINITY {
        return Ok((z, z));
    }
    let m = log_integral_line(|s| g(s) + s, upper, quad)?;
    Ok((z, m))
}

/// Posterior mean of the diagonal bandwidth at `target` for the mixture
/// `Σ_j exp(log_w_j) Π_ℓ K_{target_ℓ, h_ℓ}(X_jℓ)`.
fn mixture_posterior_mean(
    data: &Dataset,
    families: &[KernelFamily],
    prior: &PriorSpec,
    loo: LooKernel,
    target: &[f64],
    terms: &[(usize, f64)],
    quad: QuadratureSpec,
) -> Result<Option<Vec<f64>>> {
    let d = families.len();
    let mut log_w = Vec::with_capacity(terms.len());
    let mut log_ratio = Vec::with_capacity(terms.len());
    for &(j, w0) in terms {
        let xj = data.row(j);
        let mut lw = w0;
        let mut ratio = vec![f64::NEG_INFINITY; d];
        for l in 0..d {
            let (z, m) = axis_log_moments(&families[l], loo, prior, l, target[l], xj[l], quad)?;
            lw += z;
            if lw == f64::NEG_INFINITY {
                break;
            }
            ratio[l] = m - z;
        }
        log_w.push(lw);
        log_ratio.push(ratio);
    }
    let norm = log_sum_exp(&log_w);
    if norm == f64::NEG_INFINITY {
        return Ok(None);
    }
    let h = (0..d)
        .map(|l| {
            let parts: Vec<f64> = log_w
                .iter()
                .zip(&log_ratio)
                .filter(|(w, _)| **w > f64::NEG_INFINITY)
                .map(|(w, r)| (w - norm + r[l]).exp())
                .collect();
            pairwise_sum(&parts)
        })
        .collect();
    Ok(Some(h))
}

fn check_families(data: &Dataset, families: &[KernelFamily]) -> Result<()> {
    if families.len() != data.ncols() {
        return Err(Error::domain(format!("{} kernel families for {} columns", families.len(), data.ncols())));
    }
    for row in data.rows() {
        for (f, x) in families.iter().zip(row) {
            f.check_target(*x)?;
        }
    }
    Ok(())
}

/// Adaptive Bayesian bandwidths by numerical integration of the posterior
/// over each diagonal entry.
pub fn adaptive_bayes_quadrature(
    data: &Dataset,
    start: &StartModel,
    prior: &PriorSpec,
    families: &[KernelFamily],
    loo: LooKernel,
    quad: QuadratureSpec,
) -> Result<Vec<Vec<f64>>> {
    check_bayes_input(data, prior)?;
    check_families(data, families)?;
    let log_start = start_logs(data, start)?;
    let n = data.nrows();
    par::try_map_range(n, |i| {
        let terms: Vec<(usize, f64)> = (0..n).filter(|&j| j != i).map(|j| (j, -log_start[j])).collect();
        mixture_posterior_mean(data, families, prior, loo, data.row(i), &terms, quad)?.ok_or(Error::DegenerateRow { row: i })
    })
}

/// Local Bayesian bandwidth at target `x` for the plain kernel estimator.
pub fn local_bayes(
    data: &Dataset,
    families: &[KernelFamily],
    prior: &PriorSpec,
    x: &[f64],
    quad: QuadratureSpec,
) -> Result<Vec<f64>> {
    prior.check_dim(data.ncols())?;
    check_families(data, families)?;
    if x.len() != families.len() {
        return Err(Error::domain("target dimension mismatch"));
    }
    for (f, v) in families.iter().zip(x) {
        f.check_target(*v)?;
    }
    let terms: Vec<(usize, f64)> = (0..data.nrows()).map(|j| (j, 0.0)).collect();
    mixture_posterior_mean(data, families, prior, LooKernel::Exact, x, &terms, quad)?
        .ok_or_else(|| Error::numerical("estimate vanishes at the target for every bandwidth", 0.0))
}

/// Global Bayesian bandwidth for univariate data.
pub fn global_bayes_1d(data: &Dataset, family: KernelFamily, prior: &PriorSpec, quad: QuadratureSpec) -> Result<f64> {
    if data.ncols() != 1 {
        return Err(Error::domain("global Bayes selector is univariate"));
    }
    check_bayes_input(data, prior)?;
    check_families(data, &[family])?;
    let x = data.column(0);
    let n = x.len();
    let upper = x
        .iter()
        .filter_map(|&v| family.max_bandwidth(v))
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
        .map(f64::ln);
    let ln_n1 = ((n - 1) as f64).ln();
    let loglik = |h: f64| -> f64 {
        let mut total = 0.0;
        for i in 0..n {
            let terms: Vec<f64> = (0..n)
                .filter(|&k| k != i)
                .map(|k| log_kernel_or_zero(&family, x[i], h, x[k]))
                .collect();
            total += log_sum_exp(&terms) - ln_n1;
            if total == f64::NEG_INFINITY {
                break;
            }
        }
        total
    };
    let g = |s: f64| {
        let h = s.exp();
        let l = loglik(h);
        if l == f64::NEG_INFINITY {
            return l;
        }
        prior.log_density(0, h) + l + s
    };
    let z = log_integral_line(g, upper, quad)?;
    if z == f64::NEG_INFINITY {
        return Err(Error::numerical("leave-one-out likelihood vanishes for every bandwidth", 0.0));
    }
    let m = log_integral_line(|s| g(s) + s, upper, quad)?;
    Ok((m - z).exp())
}

/// Search settings for cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvSearch {
    /// Log-spaced nodes per axis.
    pub grid_points: usize,
    pub sweeps: usize,
    /// Axis `j` is searched on `[lower_factor·s_j, upper_factor·s_j]`.
    pub lower_factor: f64,
    pub upper_factor: f64,
    pub golden_iterations: usize,
}

impl Default for CvSearch {
    fn default() -> Self {
        Self {
            grid_points: 24,
            sweeps: 2,
            lower_factor: 1e-3,
            upper_factor: 10.0,
            golden_iterations: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub h: Vec<f64>,
    pub objective: f64,
    /// Grid nodes used for each axis.
    pub grid: Vec<Vec<f64>>,
}

/// Integration nodes per axis for `∫ f̃²`.
fn axis_nodes(family: &KernelFamily, column: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let max_x = column.iter().copied().fold(0.0, f64::max);
    let top = max_x * 1.5 + 10.0 * h;
    match (family.support(), family) {
        (SupportKind::Count, KernelFamily::DirDU { c }) => ((0..*c).map(f64::from).collect(), vec![1.0; *c as usize]),
        (SupportKind::Count, _) => {
            let m = (top + 10.0 * (top + 1.0).sqrt() + 10.0).ceil() as usize;
            ((0..=m).map(|k| k as f64).collect(), vec![1.0; m + 1])
        }
        (SupportKind::Continuous, _) => {
            // uniform in t = √x, where gamma-like kernels have near-constant width
            let (t, w) = composite_rule(0.0, top.sqrt(), 128, 8);
            let x = t.iter().map(|v| v * v).collect();
            let w = t.iter().zip(&w).map(|(v, wt)| 2.0 * v * wt).collect();
            (x, w)
        }
    }
}

/// Least-squares cross-validation criterion `∫ f̃² − (2/n) Σ_i f̃_{−i}(X_i)`
/// for a global diagonal bandwidth.
pub fn cv_objective(data: &Dataset, families: &[KernelFamily], h: &[f64]) -> Result<f64> {
    check_families(data, families)?;
    let (n, d) = (data.nrows(), data.ncols());
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if h.len() != d {
        return Err(Error::domain("bandwidth dimension mismatch"));
    }
    let mut gram = vec![1.0; n * n];
    for j in 0..d {
        let col = data.column(j);
        let (nodes, weights) = axis_nodes(&families[j], &col, h[j]);
        let k: Vec<Vec<f64>> = par::map_range(nodes.len(), |q| {
            col.iter()
                .map(|&u| log_kernel_or_zero(&families[j], nodes[q], h[j], u).exp())
                .collect()
        });
        let g = par::map_range(n, |i| {
            (0..n)
                .map(|l| {
                    let parts: Vec<f64> = (0..nodes.len()).map(|q| weights[q] * k[q][i] * k[q][l]).collect();
                    pairwise_sum(&parts)
                })
                .collect::<Vec<f64>>()
        });
        for i in 0..n {
            for l in 0..n {
                gram[i * n + l] *= g[i][l];
            }
        }
    }
    let square = pairwise_sum(&gram) / (n * n) as f64;
    let loo: Vec<f64> = par::map_range(n, |i| {
        let xi = data.row(i);
        let parts: Vec<f64> = (0..n)
            .filter(|&l| l != i)
            .map(|l| {
                let xl = data.row(l);
                (0..d)
                    .map(|j| log_kernel_or_zero(&families[j], xi[j], h[j], xl[j]))
                    .sum::<f64>()
                    .exp()
            })
            .collect();
        pairwise_sum(&parts) / (n - 1) as f64
    });
    Ok(square - 2.0 * pairwise_sum(&loo) / n as f64)
}

/// Cross-validation bandwidth: per-axis log grid, then golden-section
/// refinement, cycling over axes.
pub fn cv_bandwidth(data: &Dataset, families: &[KernelFamily], search: &CvSearch) -> Result<CvResult> {
    check_families(data, families)?;
    let (n, d) = (data.nrows(), data.ncols());
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if search.grid_points < 3 {
        return Err(Error::domain("cross-validation grid needs at least 3 nodes"));
    }
    let mut grid = Vec::with_capacity(d);
    for j in 0..d {
        let col = data.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        if !(sd > 0.0) {
            return Err(Error::DegenerateSample(format!("column {} is constant", data.labels()[j])));
        }
        let mut hi = search.upper_factor * sd;
        for &x in &col {
            if let Some(cap) = families[j].max_bandwidth(x) {
                hi = hi.min(match families[j] {
                    KernelFamily::Binomial | KernelFamily::DirDU { .. } => cap,
                    _ => 0.999 * cap,
                });
            }
        }
        let lo = (search.lower_factor * sd).min(0.5 * hi);
        let k = search.grid_points;
        grid.push(
            (0..k)
                .map(|t| (lo.ln() + (hi / lo).ln() * t as f64 / (k - 1) as f64).exp())
                .collect::<Vec<f64>>(),
        );
    }
    let mut h: Vec<f64> = grid.iter().map(|g| g[g.len() / 2]).collect();
    let mut best = cv_objective(data, families, &h)?;
    let (mut lowest, mut highest) = (best, best);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..search.sweeps {
        for j in 0..d {
            let mut values = Vec::with_capacity(grid[j].len());
            for &node in &grid[j] {
                let mut trial = h.clone();
                trial[j] = node;
                let v = cv_objective(data, families, &trial)?;
                lowest = lowest.min(v);
                highest = highest.max(v);
                values.push(v);
            }
            let k = (0..values.len()).fold(0, |b, t| if values[t] < values[b] { t } else { b });
            if values[k] <= best {
                best = values[k];
                h[j] = grid[j][k];
            }
            let (mut a, mut b) = (grid[j][k.saturating_sub(1)].ln(), grid[j][(k + 1).min(grid[j].len() - 1)].ln());
            let eval = |s: f64, h: &[f64]| -> Result<f64> {
                let mut trial = h.to_vec();
                trial[j] = s.exp();
                cv_objective(data, families, &trial)
            };
            for _ in 0..search.golden_iterations {
                let c = b - phi * (b - a);
                let e = a + phi * (b - a);
                let (fc, fe) = (eval(c, &h)?, eval(e, &h)?);
                for (s, v) in [(c, fc), (e, fe)] {
                    lowest = lowest.min(v);
                    highest = highest.max(v);
                    if v < best {
                        best = v;
                        h[j] = s.exp();
                    }
                }
                if fc < fe {
                    b = e;
                } else {
                    a = c;
                }
            }
        }
    }
    if highest - lowest < 1e-12 {
        return Err(Error::AmbiguousMinimum {
            h: grid.iter().map(|g| g[0]).collect(),
        });
    }
    Ok(CvResult { h, objective: best, grid })
}
