//! Parametric start models for the semiparametric estimator, the
//! Marshall–Olkin multivariate exponential, and correlation bounds of a
//! variation matrix.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SupportKind};
use crate::error::{Error, Result};
use crate::special::{digamma, ln_gamma, trigamma};

/// Parametric start density `p_d(·; θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "parameters", rename_all = "snake_case")]
pub enum StartModel {
    /// Independent exponentials with rates `mu`.
    ExponentialProduct { mu: Vec<f64> },
    /// Univariate gamma with shape and scale.
    GammaUniv { shape: f64, scale: f64 },
    MarshallOlkin { mu: Vec<f64>, mu0: f64 },
    /// Evaluates to 1 everywhere; turns the semiparametric estimator into
    /// the plain kernel estimator.
    ConstantOne,
}

impl StartModel {
    /// Dimension the model expects, or `None` for `ConstantOne`.
    pub fn dim(&self) -> Option<usize> {
        match self {
            StartModel::ExponentialProduct { mu } | StartModel::MarshallOlkin { mu, .. } => Some(mu.len()),
            StartModel::GammaUniv { .. } => Some(1),
            StartModel::ConstantOne => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: &[f64], what: &str| -> Result<()> {
            if v.is_empty() {
                return Err(Error::domain(format!("{what} is empty")));
            }
            match v.iter().find(|&&m| !(m > 0.0 && m.is_finite())) {
                Some(bad) => Err(Error::domain(format!("{what} entry {bad} is not a positive finite number"))),
                None => Ok(()),
            }
        };
        match self {
            StartModel::ExponentialProduct { mu } => positive(mu, "rate vector"),
            StartModel::GammaUniv { shape, scale } => positive(&[*shape, *scale], "gamma parameter"),
            StartModel::MarshallOlkin { mu, mu0 } => {
                positive(mu, "rate vector")?;
                if !(*mu0 >= 0.0 && mu0.is_finite()) {
                    return Err(Error::domain(format!("common shock rate {mu0} is not a nonnegative number")));
                }
                Ok(())
            }
            StartModel::ConstantOne => Ok(()),
        }
    }

    pub fn pdf(&self, x: &[f64]) -> Result<f64> {
        Ok(self.log_pdf(x)?.exp())
    }

    pub fn log_pdf(&self, x: &[f64]) -> Result<f64> {
        if let Some(d) = self.dim() {
            if x.len() != d {
                return Err(Error::domain(format!("start model has dimension {d}, point has {}", x.len())));
            }
        }
        if x.iter().any(|v| !(*v >= 0.0)) {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(match self {
            StartModel::ExponentialProduct { mu } => mu.iter().zip(x).map(|(m, v)| m.ln() - m * v).sum(),
            StartModel::GammaUniv { shape, scale } => {
                let u = x[0];
                let log_u_term = if *shape == 1.0 {
                    0.0
                } else if u == 0.0 {
                    if *shape > 1.0 {
                        f64::NEG_INFINITY
                    } else {
                        f64::INFINITY
                    }
                } else {
                    (shape - 1.0) * u.ln()
                };
                log_u_term - u / scale - shape * scale.ln() - ln_gamma(*shape)
            }
            StartModel::MarshallOlkin { mu, mu0 } => mo_log_pdf(mu, *mu0, x),
            StartModel::ConstantOne => 0.0,
        })
    }
}

/// Rates `1 / mean` per column.
pub fn fit_exponential_product(data: &Dataset) -> Result<StartModel> {
    let n = data.nrows() as f64;
    let mut mu = Vec::with_capacity(data.ncols());
    for j in 0..data.ncols() {
        let mean = data.column(j).iter().sum::<f64>() / n;
        if !(mean > 0.0) {
            return Err(Error::domain(format!("column {} has zero mean", data.labels()[j])));
        }
        mu.push(1.0 / mean);
    }
    Ok(StartModel::ExponentialProduct { mu })
}

/// Maximum-likelihood gamma fit by safeguarded Newton iteration on
/// `ln a - ψ(a) = ln(mean) - mean(ln x)`.
pub fn fit_gamma_mle(sample: &[f64]) -> Result<StartModel> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if let Some(bad) = sample.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::domain(format!("gamma fit needs positive values, found {bad}")));
    }
    if sample.iter().all(|&v| v == sample[0]) {
        return Err(Error::DegenerateSample("constant sample".into()));
    }
    let nf = n as f64;
    let mean = sample.iter().sum::<f64>() / nf;
    let mean_log = sample.iter().map(|v| v.ln()).sum::<f64>() / nf;
    let s = mean.ln() - mean_log;
    if !(s > 0.0) {
        return Err(Error::DegenerateSample("sample has no spread on the log scale".into()));
    }
    let g = |a: f64| a.ln() - digamma(a) - s;
    let mut a = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    for _ in 0..100 {
        let ga = g(a);
        if ga > 0.0 {
            lo = lo.max(a);
        } else {
            hi = hi.min(a);
        }
        let slope = 1.0 / a - trigamma(a);
        let mut next = a - ga / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * a };
        }
        let step = (next - a).abs() / a;
        a = next;
        if step < 1e-10 {
            return Ok(StartModel::GammaUniv { shape: a, scale: mean / a });
        }
    }
    Err(Error::numerical("gamma shape iteration did not converge", g(a).abs()))
}

fn mo_log_pdf(mu: &[f64], mu0: f64, x: &[f64]) -> f64 {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_s = -mu0 * max - mu.iter().zip(x).map(|(m, v)| m * v).sum::<f64>();
    let at_max: Vec<usize> = (0..x.len()).filter(|&j| x[j] == max).collect();
    let below: f64 = (0..x.len()).filter(|&j| x[j] != max).map(|j| mu[j].ln()).sum();
    let factor = if at_max.len() == 1 {
        (mu0 + mu[at_max[0]]).ln() + below
    } else {
        // k-fold tie among the largest coordinates, including the all-equal case
        if mu0 == 0.0 {
            return f64::NEG_INFINITY;
        }
        mu0.ln() + below
    };
    log_s + factor
}

/// `S(x) = exp(-μ0 max_j x_j - Σ μ_j x_j)`.
pub fn mo_survival(mu: &[f64], mu0: f64, x: &[f64]) -> Result<f64> {
    if mu.len() != x.len() {
        return Err(Error::domain("dimension mismatch"));
    }
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((-mu0 * max - mu.iter().zip(x).map(|(m, v)| m * v).sum::<f64>()).exp())
}

fn check_mo(mu: &[f64], mu0: f64) -> Result<()> {
    StartModel::MarshallOlkin { mu: mu.to_vec(), mu0 }.validate()
}

/// `n` draws of `X_j = min(Y_j, Z)`, `Y_j ~ Exp(μ_j)`, `Z ~ Exp(μ0)`, using
/// inverse-CDF sampling from a ChaCha20 stream seeded with `seed`.
pub fn mo_sample(mu: &[f64], mu0: f64, n: usize, seed: u64) -> Result<Dataset> {
    check_mo(mu, mu0)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut exp = |rate: f64| -> f64 {
        let u: f64 = rng.random();
        -(-u).ln_1p() / rate
    };
    let d = mu.len();
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let z = if mu0 > 0.0 { exp(mu0) } else { f64::INFINITY };
        rows.push(mu.iter().map(|&m| exp(m).min(z)).collect::<Vec<f64>>());
    }
    let labels = (1..=d).map(|j| format!("X{j}")).collect();
    Dataset::from_rows(&rows, labels, SupportKind::Continuous)
}

/// Mean vector and covariance matrix of the Marshall–Olkin exponential.
pub fn mo_moments(mu: &[f64], mu0: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_mo(mu, mu0)?;
    let d = mu.len();
    let m = DVector::from_iterator(d, mu.iter().map(|v| 1.0 / (v + mu0)));
    let cov = DMatrix::from_fn(d, d, |j, l| {
        if j == l {
            m[j] * m[j]
        } else {
            mu0 * m[j] * m[l] / (mu[j] + mu[l] + mu0)
        }
    });
    Ok((m, cov))
}

/// Published closed form of the Marshall–Olkin GVI,
/// `1 + μ0 Σ_j a_j Σ_{ℓ≠j} a_ℓ/(μ_j+μ_ℓ+μ0) / (Σ_j a_j²)²` with
/// `a_j = 1/(μ_j+μ0)`.
pub fn mo_gvi(mu: &[f64], mu0: f64) -> Result<f64> {
    check_mo(mu, mu0)?;
    let a: Vec<f64> = mu.iter().map(|v| 1.0 / (v + mu0)).collect();
    let mut cross = 0.0;
    for j in 0..a.len() {
        let inner: f64 = (0..a.len())
            .filter(|&l| l != j)
            .map(|l| a[l] / (mu[j] + mu[l] + mu0))
            .sum();
        cross += a[j] * inner;
    }
    let s2: f64 = a.iter().map(|v| v * v).sum();
    Ok(1.0 + mu0 * cross / (s2 * s2))
}

/// `Σ a_j⁴ / (Σ a_j⁴ + 2 Σ_{j<ℓ} a_j² a_ℓ²)` with `a_j = 1/(μ_j+μ0)`.
pub fn mo_mvi(mu: &[f64], mu0: f64) -> Result<f64> {
    check_mo(mu, mu0)?;
    let a2: Vec<f64> = mu.iter().map(|v| (v + mu0).powi(-2)).collect();
    let s4: f64 = a2.iter().map(|v| v * v).sum();
    let mut pairs = 0.0;
    for j in 0..a2.len() {
        for l in (j + 1)..a2.len() {
            pairs += a2[j] * a2[l];
        }
    }
    Ok(s4 / (s4 + 2.0 * pairs))
}

/// Symmetric nonnegative matrix with strictly positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationMatrix {
    lambda: DMatrix<f64>,
}

impl VariationMatrix {
    pub fn new(lambda: DMatrix<f64>) -> Result<Self> {
        if !lambda.is_square() {
            return Err(Error::domain("variation matrix is not square"));
        }
        let d = lambda.nrows();
        for i in 0..d {
            if !(lambda[(i, i)] > 0.0) {
                return Err(Error::domain(format!("diagonal entry {i} is not positive")));
            }
            for j in 0..d {
                let v = lambda[(i, j)];
                if !(v >= 0.0) || v != lambda[(j, i)] {
                    return Err(Error::domain(format!("entry ({i}, {j}) breaks symmetry or sign")));
                }
            }
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    /// `0 ≤ ρ < bound`.
    Valid,
    /// `ρ` lies outside `[0, bound)`.
    Violation,
    /// `R(i,j) ≤ 0` or `R(j,i) ≤ 0`.
    Infeasible,
}

/// Correlation of one pair and its admissible interval `[0, upper)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairBound {
    pub i: usize,
    pub j: usize,
    pub rho: f64,
    pub r_ij: f64,
    pub r_ji: f64,
    pub upper: f64,
    pub status: BoundStatus,
}

/// `R(i,j) = √(λ_ii/λ_jj) (1 - Σ_{ℓ≠i,j} λ_iℓ / λ_ii)`.
pub fn budget_ratio(lambda: &VariationMatrix, i: usize, j: usize) -> f64 {
    let l = &lambda.lambda;
    let others: f64 = (0..l.nrows()).filter(|&k| k != i && k != j).map(|k| l[(i, k)]).sum();
    (l[(i, i)] / l[(j, j)]).sqrt() * (1.0 - others / l[(i, i)])
}

/// Correlations and bounds for every pair `i < j`.
pub fn correlation_bounds(lambda: &VariationMatrix) -> Vec<PairBound> {
    let l = &lambda.lambda;
    let d = l.nrows();
    let mut out = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let rho = l[(i, j)] / (l[(i, i)] * l[(j, j)]).sqrt();
            let r_ij = budget_ratio(lambda, i, j);
            let r_ji = budget_ratio(lambda, j, i);
            let upper = r_ij.min(r_ji);
            let status = if upper <= 0.0 {
                BoundStatus::Infeasible
            } else if (0.0..upper).contains(&rho) {
                BoundStatus::Valid
            } else {
                BoundStatus::Violation
            };
            out.push(PairBound {
                i,
                j,
                rho,
                r_ij,
                r_ji,
                upper,
                status,
            });
        }
    }
    out
}
