use orthant::bandwidth::{adaptive_bayes_gamma_closed, default_prior};
use orthant::data::waterpumps;
use orthant::diagnostics::{diagnose, DiagnoseOptions, Selector, StartChoice};
use orthant::estimators::DensityEstimate;
use orthant::kernels::KernelFamily;
use orthant::parametric::fit_exponential_product;

fn run() -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let data = waterpumps();
    let start = fit_exponential_product(&data).unwrap();
    let fit = adaptive_bayes_gamma_closed(&data, &start, &default_prior(42, 3).unwrap()).unwrap();
    let est = DensityEstimate::new(data.clone(), vec![KernelFamily::Gamma; 3], fit.assignment(), start).unwrap();
    let points: Vec<Vec<f64>> = (0..64).map(|k| vec![k as f64 * 4.0, 60.0 + k as f64, 5.0 + k as f64 * 0.5]).collect();
    let values = est.evaluate(&points).unwrap();
    let report = diagnose(
        &data,
        &StartChoice::Exponential,
        &[KernelFamily::Gamma; 3],
        &Selector::AdaptiveBayes(None),
        &DiagnoseOptions::default(),
    )
    .unwrap();
    (fit.bandwidths, values, report.log_weights)
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(run);
    assert_eq!(one, many);
}
