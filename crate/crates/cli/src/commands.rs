use std::path::Path;

use orthant::bandwidth::{default_prior, local_bayes, CvSearch, PriorSpec};
use orthant::data::{empirical_moments, load_csv, waterpumps, Dataset, Divisor, SupportKind};
use orthant::diagnostics::{diagnose, select_bandwidths, BandPercent, DiagnoseOptions, DiagnosticReport, Selector, StartChoice};
use orthant::estimators::{BandwidthAssignment, DensityEstimate};
use orthant::indexes::{gvi, index_table_with, mvi, IndexReport};
use orthant::kernels::KernelFamily;
use orthant::parametric::{fit_exponential_product, fit_gamma_mle, mo_gvi, mo_moments, mo_mvi, mo_sample, StartModel};
use orthant::quadrature::QuadratureSpec;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::args::*;
use crate::error::{usage, CliError};
use crate::output::{table, to_json, write_atomic};

type Result<T> = std::result::Result<T, CliError>;

pub struct Sink<'a> {
    pub dir: &'a Path,
    pub json: bool,
    pub csv: bool,
}

impl Sink<'_> {
    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        if self.json {
            let path = write_atomic(self.dir, &format!("{name}.json"), &to_json(value))?;
            eprintln!("wrote {}", path.display());
        }
        Ok(())
    }

    fn csv(&self, name: &str, bytes: &[u8]) -> Result<()> {
        if self.csv {
            let path = write_atomic(self.dir, &format!("{name}.csv"), bytes)?;
            eprintln!("wrote {}", path.display());
        }
        Ok(())
    }
}

fn quad() -> QuadratureSpec {
    DiagnoseOptions::default().quad
}

fn load(input: &InputArgs) -> Result<Dataset> {
    let support = if input.counts { SupportKind::Count } else { SupportKind::Continuous };
    let data = match (&input.fixture, &input.data) {
        (Some(FixtureName::Waterpumps), _) => {
            let w = waterpumps();
            let rows: Vec<Vec<f64>> = w.rows().map(<[f64]>::to_vec).collect();
            Dataset::from_rows(&rows, w.labels().to_vec(), support)?
        }
        (None, Some(path)) => load_csv(path, !input.no_header, support)?,
        (None, None) => return Err(usage("one of --fixture or --data is required")),
    };
    if input.columns.is_empty() {
        return Ok(data);
    }
    if let Some(bad) = input.columns.iter().find(|c| !data.labels().contains(c)) {
        return Err(usage(format!("unknown column {bad:?}; available: {}", data.labels().join(","))));
    }
    Ok(data.select_labels(&input.columns)?)
}

fn divisor(d: DivisorArg) -> Divisor {
    match d {
        DivisorArg::NMinus1 => Divisor::NMinus1,
        DivisorArg::N => Divisor::N,
    }
}

fn broadcast<T: Clone>(values: &[T], d: usize, what: &str) -> Result<Vec<T>> {
    match values.len() {
        1 => Ok(vec![values[0].clone(); d]),
        k if k == d => Ok(values.to_vec()),
        k => Err(usage(format!("{k} values for --{what}; expected 1 or {d}"))),
    }
}

fn prior(model: &ModelArgs, data: &Dataset) -> Result<Option<PriorSpec>> {
    if model.alpha.is_none() && model.beta.is_empty() {
        return Ok(None);
    }
    let d = data.ncols();
    let alpha = match model.alpha {
        Some(a) => a,
        None => default_prior(data.nrows(), d)?.alpha,
    };
    let beta = if model.beta.is_empty() { vec![1.0; d] } else { broadcast(&model.beta, d, "beta")? };
    PriorSpec::new(alpha, beta).map(Some).map_err(|e| usage(e.to_string()))
}

fn selector(model: &ModelArgs, data: &Dataset) -> Result<Selector> {
    if !model.h.is_empty() && model.selector != SelectorArg::Fixed {
        return Err(usage("--h is only used with --selector fixed"));
    }
    Ok(match model.selector {
        SelectorArg::AdaptiveBayes => Selector::AdaptiveBayes(prior(model, data)?),
        SelectorArg::LocalBayes => Selector::LocalBayes(prior(model, data)?),
        SelectorArg::GlobalBayes => Selector::GlobalBayes(prior(model, data)?),
        SelectorArg::Cv => Selector::CrossValidation(CvSearch::default()),
        SelectorArg::Fixed => {
            if model.h.is_empty() {
                return Err(usage("--selector fixed needs --h"));
            }
            Selector::Fixed(broadcast(&model.h, data.ncols(), "h")?)
        }
    })
}

fn start(choice: StartArg, model: &ModelArgs, d: usize) -> Result<StartChoice> {
    if choice != StartArg::Mo && (!model.mu.is_empty() || model.mu0.is_some()) {
        return Err(usage("--mu and --mu0 are only used with --start mo"));
    }
    Ok(match choice {
        StartArg::Exp => StartChoice::Exponential,
        StartArg::Gamma => StartChoice::Gamma,
        StartArg::None => StartChoice::Fixed(StartModel::ConstantOne),
        StartArg::Mo => {
            let mu0 = model.mu0.ok_or_else(|| usage("--start mo needs --mu0"))?;
            if model.mu.len() != d {
                return Err(usage(format!("--start mo needs {d} values for --mu")));
            }
            StartChoice::Fixed(StartModel::MarshallOlkin { mu: model.mu.clone(), mu0 })
        }
    })
}

fn families(model: &ModelArgs, d: usize) -> Result<Vec<KernelFamily>> {
    broadcast(&model.kernel, d, "kernel")
}

pub fn indexes(args: &IndexesArgs, sink: &Sink) -> Result<i32> {
    let data = load(&args.input)?;
    let report = index_table_with(&data, divisor(args.divisor), args.eps)?;
    print_index_tables(&report);
    sink.json("indexes", &report)?;
    let mut csv = Vec::new();
    report.write_table_csv(&mut csv)?;
    sink.csv("indexes", &csv)?;
    Ok(0)
}

fn print_index_tables(report: &IndexReport) {
    for (name, dispersion, joint) in [("GVI", false, report.joint.gvi), ("GDI", true, report.joint.gdi)] {
        let m = report.matrix(dispersion);
        let mut header = vec![format!("{name}={joint:.4}")];
        header.extend(report.labels.iter().cloned());
        let rows: Vec<(String, Vec<f64>)> = report
            .labels
            .iter()
            .enumerate()
            .map(|(a, l)| (l.clone(), m.row(a).iter().copied().collect()))
            .collect();
        print!("{}", table(&header, &rows));
    }
}

#[derive(Serialize)]
struct MviEntry {
    labels: Vec<String>,
    mvi: f64,
}

#[derive(Serialize)]
struct FitReport {
    labels: Vec<String>,
    n: usize,
    exponential: StartModel,
    /// Gamma maximum-likelihood fit per column; `null` when it does not exist.
    gamma: Vec<Option<StartModel>>,
    gamma_errors: Vec<Option<String>>,
    mean: Vec<f64>,
    correlation: Vec<Vec<f64>>,
    correlation_det: f64,
    mvi: Vec<MviEntry>,
}

pub fn fit(args: &FitArgs, sink: &Sink) -> Result<i32> {
    let data = load(&args.input)?;
    let d = data.ncols();
    let exponential = fit_exponential_product(&data)?;
    let gamma_fits: Vec<_> = (0..d).map(|j| fit_gamma_mle(&data.column(j))).collect();
    let moments = empirical_moments(&data, divisor(args.divisor))?;
    let indexes = index_table_with(&data, divisor(args.divisor), orthant::indexes::EMPIRICAL_EPS)?;
    let mvi: Vec<MviEntry> = indexes
        .pairs
        .iter()
        .chain(std::iter::once(&indexes.joint).filter(|_| d > 2))
        .map(|s| MviEntry { labels: s.labels.clone(), mvi: s.mvi })
        .collect();
    let report = FitReport {
        labels: data.labels().to_vec(),
        n: data.nrows(),
        exponential: exponential.clone(),
        gamma: gamma_fits.iter().map(|r| r.as_ref().ok().cloned()).collect(),
        gamma_errors: gamma_fits.iter().map(|r| r.as_ref().err().map(ToString::to_string)).collect(),
        mean: moments.mean.iter().copied().collect(),
        correlation: (0..d).map(|a| moments.corr.row(a).iter().copied().collect()).collect(),
        correlation_det: moments.corr.determinant(),
        mvi,
    };

    let StartModel::ExponentialProduct { mu } = &exponential else { unreachable!() };
    let gamma_pair = |j: usize| match &report.gamma[j] {
        Some(StartModel::GammaUniv { shape, scale }) => (*shape, *scale),
        _ => (f64::NAN, f64::NAN),
    };
    let header: Vec<String> = ["column", "exp_rate", "gamma_shape", "gamma_scale"].map(String::from).to_vec();
    let rows: Vec<(String, Vec<f64>)> = (0..d)
        .map(|j| {
            let (k, s) = gamma_pair(j);
            (report.labels[j].clone(), vec![mu[j], k, s])
        })
        .collect();
    print!("{}", table(&header, &rows));
    let mut header = vec!["correlation".to_string()];
    header.extend(report.labels.iter().cloned());
    let rows: Vec<(String, Vec<f64>)> =
        report.labels.iter().cloned().zip(report.correlation.iter().cloned()).collect();
    print!("{}", table(&header, &rows));
    println!("det(correlation) = {:.4}", report.correlation_det);
    for e in &report.mvi {
        println!("MVI({}) = {:.4}", e.labels.join(","), e.mvi);
    }

    sink.json("fit", &report)?;
    let mut csv = String::from("column,exp_rate,gamma_shape,gamma_scale\n");
    for j in 0..d {
        let (k, s) = gamma_pair(j);
        let cell = |v: f64| if v.is_nan() { String::new() } else { format!("{v}") };
        csv.push_str(&format!("{},{},{},{}\n", report.labels[j], mu[j], cell(k), cell(s)));
    }
    sink.csv("fit", csv.as_bytes())?;
    Ok(0)
}

#[derive(Serialize)]
#[serde(untagged)]
enum SmoothBandwidths {
    Assignment(BandwidthAssignment),
    PerPoint(Vec<Vec<f64>>),
}

#[derive(Serialize)]
struct SmoothReport {
    labels: Vec<String>,
    kernels: Vec<KernelFamily>,
    selector: String,
    start: StartModel,
    bandwidths: SmoothBandwidths,
    renormalization: Option<f64>,
    points: Vec<Vec<f64>>,
    density: Vec<f64>,
}

fn grid_points(data: &Dataset, count: usize) -> Result<Vec<Vec<f64>>> {
    if data.ncols() != 1 {
        return Err(usage("--grid needs univariate data; select one column with --columns"));
    }
    if count < 2 {
        return Err(usage("--grid needs at least 2 points"));
    }
    if data.support() == SupportKind::Count {
        return Ok((0..count).map(|k| vec![k as f64]).collect());
    }
    let top = 1.1 * data.column(0).into_iter().fold(0.0, f64::max);
    Ok((0..count).map(|k| vec![top * k as f64 / (count - 1) as f64]).collect())
}

pub fn smooth(args: &SmoothArgs, sink: &Sink) -> Result<i32> {
    let data = load(&args.input)?;
    let d = data.ncols();
    let families = families(&args.model, d)?;
    let selector = selector(&args.model, &data)?;
    let model = start(args.start, &args.model, d)?.fit(&data)?;
    let points = match args.grid {
        Some(g) => grid_points(&data, g)?,
        None => data.rows().map(<[f64]>::to_vec).collect(),
    };
    let q = quad();
    let (bandwidths, renormalization, density) = match &selector {
        Selector::LocalBayes(p) => {
            if args.renormalize {
                return Err(usage("--renormalize is not available with --selector local-bayes"));
            }
            let p = match p {
                Some(p) => p.clone(),
                None => default_prior(data.nrows(), d)?,
            };
            let mut hs = Vec::with_capacity(points.len());
            let mut values = Vec::with_capacity(points.len());
            for x in &points {
                let h = local_bayes(&data, &families, &p, x, q)?;
                let est =
                    DensityEstimate::new(data.clone(), families.clone(), BandwidthAssignment::Global(h.clone()), model.clone())?;
                values.push(est.semiparametric_at(x)?);
                hs.push(h);
            }
            (SmoothBandwidths::PerPoint(hs), None, values)
        }
        _ => {
            let assignment = select_bandwidths(&data, &model, &families, &selector, q)?;
            let mut est = DensityEstimate::new(data.clone(), families.clone(), assignment.clone(), model.clone())?;
            if args.renormalize {
                est = est.renormalized(q)?;
            }
            let values = est.evaluate(&points)?;
            (SmoothBandwidths::Assignment(assignment), est.renormalization(), values)
        }
    };
    let report = SmoothReport {
        labels: data.labels().to_vec(),
        kernels: families,
        selector: selector.name().to_string(),
        start: model,
        bandwidths,
        renormalization,
        points,
        density,
    };
    if let Some(c) = report.renormalization {
        println!("total mass before renormalization = {c:.4}");
    }
    let mut header = report.labels.clone();
    header.push("density".into());
    let rows: Vec<(String, Vec<f64>)> = report
        .points
        .iter()
        .zip(&report.density)
        .enumerate()
        .map(|(i, (p, f))| {
            let mut v = p.clone();
            v.push(*f);
            ((i + 1).to_string(), v)
        })
        .collect();
    let mut header_with_index = vec!["point".to_string()];
    header_with_index.extend(header.iter().cloned());
    print!("{}", table(&header_with_index, &rows));

    sink.json("smooth", &report)?;
    let mut csv = header.join(",") + "\n";
    for (p, f) in report.points.iter().zip(&report.density) {
        let cells: Vec<String> = p.iter().chain(std::iter::once(f)).map(|v| format!("{v}")).collect();
        csv.push_str(&(cells.join(",") + "\n"));
    }
    sink.csv("smooth", csv.as_bytes())?;
    Ok(0)
}

#[derive(Serialize)]
struct DiagnoseOutput<'a> {
    #[serde(flatten)]
    report: &'a DiagnosticReport,
    sensitivity: Vec<BandPercent>,
}

pub fn diagnose_cmd(args: &DiagnoseArgs, sink: &Sink) -> Result<i32> {
    let data = load(&args.input)?;
    let d = data.ncols();
    let families = families(&args.model, d)?;
    let selector = selector(&args.model, &data)?;
    let choice = start(args.start, &args.model, d)?;
    let options = DiagnoseOptions {
        band_halfwidth: args.band,
        standardize: args.standardize,
        ..DiagnoseOptions::default()
    };
    let report = diagnose(&data, &choice, &families, &selector, &options)?;
    let sensitivity = report.band_sensitivity(&args.sensitivity);

    println!(
        "columns {}: {:.4}% of log-weights inside ±{} => {}",
        report.labels.join(","),
        report.percent_in_band,
        report.band_halfwidth,
        report.decision
    );
    let header = vec!["band".to_string(), "percent".to_string()];
    let rows: Vec<(String, Vec<f64>)> = sensitivity.iter().map(|b| (format!("{:.2}", b.band), vec![b.percent])).collect();
    print!("{}", table(&header, &rows));

    sink.json("diagnose", &DiagnoseOutput { report: &report, sensitivity })?;
    let mut csv = Vec::new();
    report.write_plot_csv(&mut csv)?;
    sink.csv("diagnose_plot", &csv)?;
    Ok(report.decision.exit_code())
}

#[derive(Serialize)]
struct Moments {
    mean: Vec<f64>,
    covariance: Vec<Vec<f64>>,
    gvi: f64,
    mvi: f64,
}

#[derive(Serialize)]
struct MoSimReport {
    mu: Vec<f64>,
    mu0: f64,
    n: usize,
    seed: u64,
    theory: Moments,
    /// GVI and MVI from the closed-form expressions in the rates.
    closed_form_gvi: f64,
    closed_form_mvi: f64,
    empirical: Moments,
}

fn moments_of(mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<Moments> {
    Ok(Moments {
        mean: mean.iter().copied().collect(),
        covariance: (0..cov.nrows()).map(|a| cov.row(a).iter().copied().collect()).collect(),
        gvi: gvi(mean, cov)?,
        mvi: mvi(mean, cov)?,
    })
}

pub fn mo_sim(args: &MoSimArgs, sink: &Sink) -> Result<i32> {
    let data = mo_sample(&args.mu, args.mu0, args.n, args.seed)?;
    let (mean, cov) = mo_moments(&args.mu, args.mu0)?;
    let theory = moments_of(&mean, &cov)?;
    let emp = empirical_moments(&data, Divisor::NMinus1)?;
    let report = MoSimReport {
        mu: args.mu.clone(),
        mu0: args.mu0,
        n: args.n,
        seed: args.seed,
        theory,
        closed_form_gvi: mo_gvi(&args.mu, args.mu0)?,
        closed_form_mvi: mo_mvi(&args.mu, args.mu0)?,
        empirical: moments_of(&emp.mean, &emp.cov)?,
    };
    let header = ["", "GVI", "MVI"].map(String::from).to_vec();
    print!(
        "{}",
        table(
            &header,
            &[
                ("closed form".into(), vec![report.closed_form_gvi, report.closed_form_mvi]),
                ("moments".into(), vec![report.theory.gvi, report.theory.mvi]),
                ("empirical".into(), vec![report.empirical.gvi, report.empirical.mvi]),
            ]
        )
    );
    sink.json("mo_sim", &report)?;
    let mut csv = Vec::new();
    data.write_csv(&mut csv)?;
    sink.csv("mo_sim", &csv)?;
    Ok(0)
}

#[derive(Serialize)]
struct Numeric {
    mass: f64,
    a: f64,
    b: f64,
}

#[derive(Serialize)]
struct ProbeReport {
    kernel: KernelFamily,
    name: String,
    x: f64,
    h: f64,
    a: f64,
    b: f64,
    numeric: Option<Numeric>,
    numeric_error: Option<String>,
}

pub fn probe(args: &ProbeArgs, sink: &Sink) -> Result<i32> {
    let f = args.kernel;
    let m = f.moments(args.x, args.h)?;
    let numeric = f.numeric_summary(args.x, args.h, QuadratureSpec::default());
    let report = ProbeReport {
        kernel: f,
        name: f.to_string(),
        x: args.x,
        h: args.h,
        a: m.a,
        b: m.b,
        numeric: numeric.as_ref().ok().map(|s| Numeric {
            mass: s.mass,
            a: s.moments.a,
            b: s.moments.b,
        }),
        numeric_error: numeric.as_ref().err().map(ToString::to_string),
    };
    let header = ["", "mass", "A", "B"].map(String::from).to_vec();
    let mut rows = vec![("closed form".to_string(), vec![1.0, m.a, m.b])];
    if let Some(n) = &report.numeric {
        rows.push(("numeric".into(), vec![n.mass, n.a, n.b]));
    }
    print!("{}", table(&header, &rows));
    sink.json("kernels_probe", &report)?;
    let cell = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v}"));
    let csv = format!(
        "kernel,x,h,a,b,numeric_mass,numeric_a,numeric_b\n{},{},{},{},{},{},{},{}\n",
        report.name,
        report.x,
        report.h,
        report.a,
        report.b,
        cell(report.numeric.as_ref().map(|n| n.mass)),
        cell(report.numeric.as_ref().map(|n| n.a)),
        cell(report.numeric.as_ref().map(|n| n.b)),
    );
    sink.csv("kernels_probe", csv.as_bytes())?;
    Ok(0)
}

pub fn fixture(args: &FixtureArgs, dir: &Path) -> Result<i32> {
    let FixtureName::Waterpumps = args.name;
    let mut csv = Vec::new();
    waterpumps().write_csv(&mut csv)?;
    let path = write_atomic(dir, "waterpumps.csv", &csv)?;
    eprintln!("wrote {}", path.display());
    Ok(0)
}
