//! Weight-function diagnostics: the log-weight `W̃_n = log w̃_n` at every
//! observation, the share of observations inside a band around zero, and the
//! resulting choice between parametric, semiparametric and nonparametric
//! modelling.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bandwidth::{
    adaptive_bayes_gamma_closed, adaptive_bayes_quadrature, cv_bandwidth, default_prior, global_bayes_1d, local_bayes,
    CvSearch, LooKernel, PriorSpec,
};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{BandwidthAssignment, DensityEstimate};
use crate::kernels::KernelFamily;
use crate::par;
use crate::parametric::{fit_exponential_product, fit_gamma_mle, StartModel};
use crate::quadrature::QuadratureSpec;

pub const DEFAULT_BAND: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Parametric,
    Semiparametric,
    Nonparametric,
}

impl Decision {
    /// Nonparametric below 5 %, parametric above 95 %, semiparametric on
    /// the closed interval in between.
    pub fn from_percent(percent: f64) -> Self {
        if percent < 5.0 {
            Decision::Nonparametric
        } else if percent > 95.0 {
            Decision::Parametric
        } else {
            Decision::Semiparametric
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Decision::Parametric => 0,
            Decision::Semiparametric => 1,
            Decision::Nonparametric => 2,
        }
    }
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Decision::Parametric => "parametric",
            Decision::Semiparametric => "semiparametric",
            Decision::Nonparametric => "nonparametric",
        })
    }
}

/// How the start model is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartChoice {
    /// Independent exponentials fitted by maximum likelihood.
    Exponential,
    /// Univariate gamma fitted by maximum likelihood.
    Gamma,
    Fixed(StartModel),
}

impl StartChoice {
    pub fn fit(&self, data: &Dataset) -> Result<StartModel> {
        match self {
            StartChoice::Exponential => fit_exponential_product(data),
            StartChoice::Gamma => {
                if data.ncols() != 1 {
                    return Err(Error::domain("gamma start is univariate"));
                }
                fit_gamma_mle(&data.column(0))
            }
            StartChoice::Fixed(m) => Ok(m.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    /// One bandwidth vector per observation; `None` uses the default prior.
    AdaptiveBayes(Option<PriorSpec>),
    /// Bandwidth chosen at each evaluation point.
    LocalBayes(Option<PriorSpec>),
    CrossValidation(CvSearch),
    GlobalBayes(Option<PriorSpec>),
    Fixed(Vec<f64>),
}

impl Selector {
    pub fn name(&self) -> &'static str {
        match self {
            Selector::AdaptiveBayes(_) => "adaptive-bayes",
            Selector::LocalBayes(_) => "local-bayes",
            Selector::CrossValidation(_) => "cv",
            Selector::GlobalBayes(_) => "global-bayes",
            Selector::Fixed(_) => "fixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseOptions {
    pub band_halfwidth: f64,
    /// Divide the log-weights by their sample standard deviation before
    /// counting.
    pub standardize: bool,
    pub quad: QuadratureSpec,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        Self {
            band_halfwidth: DEFAULT_BAND,
            standardize: false,
            quad: QuadratureSpec::with_rel_tol(1e-10),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPercent {
    pub band: f64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub labels: Vec<String>,
    pub start: StartModel,
    pub kernels: Vec<KernelFamily>,
    pub selector: String,
    pub bandwidths: BandwidthAssignment,
    /// `W̃_n(X_i)` for every row, before any standardization.
    pub log_weights: Vec<f64>,
    pub band_halfwidth: f64,
    pub standardized: bool,
    /// Divisor applied to the log-weights before counting (1 when not
    /// standardized).
    pub scale: f64,
    pub percent_in_band: f64,
    pub decision: Decision,
}

impl DiagnosticReport {
    /// Percent of rows inside `±band` under this report's scaling.
    pub fn percent_for(&self, band: f64) -> f64 {
        let scaled: Vec<f64> = self.log_weights.iter().map(|w| w / self.scale).collect();
        percent_in_band(&scaled, band)
    }

    pub fn band_sensitivity(&self, bands: &[f64]) -> Vec<BandPercent> {
        bands
            .iter()
            .map(|&band| BandPercent {
                band,
                percent: self.percent_for(band),
            })
            .collect()
    }

    /// Plot data: one row per observation with the band edges.
    pub fn write_plot_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let map = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(["index", "log_weight", "scaled", "lower", "upper", "inside"]).map_err(map)?;
        for (i, lw) in self.log_weights.iter().enumerate() {
            let s = lw / self.scale;
            w.write_record([
                (i + 1).to_string(),
                lw.to_string(),
                s.to_string(),
                (-self.band_halfwidth).to_string(),
                self.band_halfwidth.to_string(),
                u8::from(s.abs() <= self.band_halfwidth).to_string(),
            ])
            .map_err(map)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `100 · #{i : |v_i| ≤ band} / n`.
pub fn percent_in_band(values: &[f64], band: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let inside = values.iter().filter(|v| v.abs() <= band).count();
    (100 * inside) as f64 / values.len() as f64
}

/// `log f̂_n(x) − log p_d(x; θ̂)`.
pub fn log_weight_at(est: &DensityEstimate, x: &[f64]) -> Result<f64> {
    let lw = est.log_weight_at(x)?;
    if lw == f64::NEG_INFINITY {
        return Err(Error::EvaluationUnderflow(format!("estimate vanishes at {x:?}")));
    }
    Ok(lw)
}

fn prior_or_default(prior: &Option<PriorSpec>, data: &Dataset) -> Result<PriorSpec> {
    match prior {
        Some(p) => Ok(p.clone()),
        None => default_prior(data.nrows(), data.ncols()),
    }
}

/// Bandwidths for every selector except local Bayes, whose bandwidth is a
/// function of the evaluation point.
pub fn select_bandwidths(
    data: &Dataset,
    model: &StartModel,
    families: &[KernelFamily],
    selector: &Selector,
    quad: QuadratureSpec,
) -> Result<BandwidthAssignment> {
    Ok(match selector {
        Selector::AdaptiveBayes(prior) => {
            let prior = prior_or_default(prior, data)?;
            if families.iter().all(|f| *f == KernelFamily::Gamma) {
                adaptive_bayes_gamma_closed(data, model, &prior)?.assignment()
            } else {
                BandwidthAssignment::PerObservation(adaptive_bayes_quadrature(
                    data,
                    model,
                    &prior,
                    families,
                    LooKernel::Exact,
                    quad,
                )?)
            }
        }
        Selector::CrossValidation(search) => BandwidthAssignment::Global(cv_bandwidth(data, families, search)?.h),
        Selector::GlobalBayes(prior) => {
            if families.len() != 1 {
                return Err(Error::domain("global Bayes selector is univariate"));
            }
            let prior = prior_or_default(prior, data)?;
            BandwidthAssignment::Global(vec![global_bayes_1d(data, families[0], &prior, quad)?])
        }
        Selector::Fixed(h) => BandwidthAssignment::Global(h.clone()),
        Selector::LocalBayes(_) => {
            return Err(Error::domain("local Bayes bandwidths depend on the evaluation point"))
        }
    })
}

/// Fits the start, selects bandwidths and evaluates `W̃_n` at every row.
pub fn diagnose(
    data: &Dataset,
    start: &StartChoice,
    families: &[KernelFamily],
    selector: &Selector,
    options: &DiagnoseOptions,
) -> Result<DiagnosticReport> {
    if !(options.band_halfwidth >= 0.0) {
        return Err(Error::domain("band half-width must be nonnegative"));
    }
    let model = start.fit(data)?;
    let families = families.to_vec();
    let n = data.nrows();
    let (bandwidths, log_weights) = match selector {
        Selector::LocalBayes(prior) => {
            let prior = prior_or_default(prior, data)?;
            let rows = par::try_map_range(n, |i| local_bayes(data, &families, &prior, data.row(i), options.quad))?;
            let weights = par::try_map_range(n, |i| {
                let est = DensityEstimate::new(
                    data.clone(),
                    families.clone(),
                    BandwidthAssignment::Global(rows[i].clone()),
                    model.clone(),
                )?;
                log_weight_at(&est, data.row(i))
            })?;
            (BandwidthAssignment::PerObservation(rows), weights)
        }
        _ => {
            let assignment = select_bandwidths(data, &model, &families, selector, options.quad)?;
            let est = DensityEstimate::new(data.clone(), families.clone(), assignment.clone(), model.clone())?;
            let weights = par::try_map_range(n, |i| log_weight_at(&est, data.row(i)))?;
            (assignment, weights)
        }
    };
    let scale = if options.standardize {
        let mean = log_weights.iter().sum::<f64>() / n as f64;
        let var = log_weights.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
        if var > 0.0 {
            var.sqrt()
        } else {
            1.0
        }
    } else {
        1.0
    };
    let scaled: Vec<f64> = log_weights.iter().map(|w| w / scale).collect();
    let percent = percent_in_band(&scaled, options.band_halfwidth);
    Ok(DiagnosticReport {
        labels: data.labels().to_vec(),
        start: model,
        kernels: families,
        selector: selector.name().to_string(),
        bandwidths,
        log_weights,
        band_halfwidth: options.band_halfwidth,
        standardized: options.standardize,
        scale,
        percent_in_band: percent,
        decision: Decision::from_percent(percent),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{waterpumps, SupportKind};

    fn gamma(d: usize) -> Vec<KernelFamily> {
        vec![KernelFamily::Gamma; d]
    }

    #[test]
    fn decision_boundaries() {
        assert_eq!(Decision::from_percent(4.99), Decision::Nonparametric);
        assert_eq!(Decision::from_percent(5.0), Decision::Semiparametric);
        assert_eq!(Decision::from_percent(95.0), Decision::Semiparametric);
        assert_eq!(Decision::from_percent(95.01), Decision::Parametric);
    }

    #[test]
    fn percent_counts() {
        assert_eq!(percent_in_band(&[0.0, 1.0, -2.0, 3.0], 1.96), 50.0);
        assert_eq!(percent_in_band(&[1.96, -1.96], 1.96), 100.0);
    }

    #[test]
    fn waterpumps_x3_is_parametric() {
        let data = waterpumps().select(&[2]).unwrap();
        let r = diagnose(
            &data,
            &StartChoice::Exponential,
            &gamma(1),
            &Selector::AdaptiveBayes(None),
            &DiagnoseOptions::default(),
        )
        .unwrap();
        assert_eq!(r.percent_in_band, 100.0);
        assert_eq!(r.decision, Decision::Parametric);
    }

    #[test]
    fn waterpumps_trivariate_is_nonparametric() {
        let r = diagnose(
            &waterpumps(),
            &StartChoice::Exponential,
            &gamma(3),
            &Selector::AdaptiveBayes(None),
            &DiagnoseOptions::default(),
        )
        .unwrap();
        assert_eq!(r.percent_in_band, 0.0);
        assert_eq!(r.decision, Decision::Nonparametric);
    }

    #[test]
    fn univariate_percents_are_multiples_of_one_row() {
        for j in 0..3 {
            let data = waterpumps().select(&[j]).unwrap();
            let r = diagnose(
                &data,
                &StartChoice::Exponential,
                &gamma(1),
                &Selector::AdaptiveBayes(None),
                &DiagnoseOptions::default(),
            )
            .unwrap();
            let rows = r.percent_in_band * 42.0 / 100.0;
            assert!((rows - rows.round()).abs() < 1e-12);
            let bands = r.band_sensitivity(&[1.0, 1.64, 1.96, 2.58]);
            assert!(bands.windows(2).all(|w| w[0].percent <= w[1].percent));
            assert_eq!(bands[2].percent, r.percent_in_band);
        }
    }

    #[test]
    fn report_round_trips_through_json() {
        let data = waterpumps().select(&[0, 1]).unwrap();
        let r = diagnose(
            &data,
            &StartChoice::Exponential,
            &gamma(2),
            &Selector::AdaptiveBayes(None),
            &DiagnoseOptions::default(),
        )
        .unwrap();
        let s = serde_json::to_string(&r).unwrap();
        let back: DiagnosticReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn weight_and_log_weight_agree() {
        let data = waterpumps().select(&[1]).unwrap();
        let est = DensityEstimate::new(
            data.clone(),
            gamma(1),
            BandwidthAssignment::Global(vec![5.0]),
            fit_exponential_product(&data).unwrap(),
        )
        .unwrap();
        for x in [10.0, 100.0, 200.0] {
            let w = est.weight_at(&[x]).unwrap();
            assert!((log_weight_at(&est, &[x]).unwrap().exp() - w).abs() <= 1e-14 * w);
        }
    }

    #[test]
    fn self_start_is_near_zero() {
        let d = Dataset::from_column(&[2.0], SupportKind::Continuous).unwrap();
        let start = StartModel::ExponentialProduct { mu: vec![0.5] };
        let est = DensityEstimate::new(d, gamma(1), BandwidthAssignment::Global(vec![1e-4]), start).unwrap();
        let w = log_weight_at(&est, &[2.0]).unwrap();
        assert!(w.is_finite());
        let one = Dataset::from_column(&[0.0], SupportKind::Continuous).unwrap();
        let est = DensityEstimate::new(one, gamma(1), BandwidthAssignment::Global(vec![1.0]), StartModel::ConstantOne).unwrap();
        assert!(matches!(log_weight_at(&est, &[5.0]), Err(Error::EvaluationUnderflow(_))));
    }

    #[test]
    fn plot_csv_has_one_row_per_observation() {
        let data = waterpumps().select(&[2]).unwrap();
        let r = diagnose(
            &data,
            &StartChoice::Exponential,
            &gamma(1),
            &Selector::Fixed(vec![3.0]),
            &DiagnoseOptions::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        r.write_plot_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 43);
        assert!(s.starts_with("index,log_weight,scaled,lower,upper,inside\n1,"));
    }

    #[test]
    fn standardized_band_uses_scale() {
        let data = waterpumps().select(&[0]).unwrap();
        let opts = DiagnoseOptions {
            standardize: true,
            ..DiagnoseOptions::default()
        };
        let r = diagnose(&data, &StartChoice::Exponential, &gamma(1), &Selector::AdaptiveBayes(None), &opts).unwrap();
        assert!(r.standardized && r.scale > 0.0);
        let scaled: Vec<f64> = r.log_weights.iter().map(|w| w / r.scale).collect();
        assert_eq!(r.percent_in_band, percent_in_band(&scaled, 1.96));
    }
}
