use mwarray::array::{exact_difference_density, ArraySpec};
use mwarray::montecarlo::{fit_fringe, residual_moments, run_experiment, ExperimentOptions};
use mwarray::noisefield::{NoiseModel, Process};
use mwarray::wavepacket::{averaged_pdf, InterferometerSpec};

fn array(n: usize) -> ArraySpec {
    let d = InterferometerSpec::for_pattern(0.5, 1.0, 1.0, 10.0).unwrap();
    ArraySpec::new(vec![d; n], 1.0).unwrap()
}

/// 99% one-sample KS critical value.
fn ks_floor(n: u64) -> f64 {
    1.63 / (n as f64).sqrt()
}

#[test]
fn bit_identical_across_thread_counts() {
    let spec = array(3);
    let tk = spec.overlap_time().unwrap();
    let model = NoiseModel::common_mode_displacement(3.0, tk);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let opts = ExperimentOptions { chunk_size: 997, ..ExperimentOptions::default() };
        pool.install(|| run_experiment(&spec, &model, 20_000, 2, 42, &opts).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.difference, b.difference);
    assert_eq!(a.devices, b.devices);
    assert_ne!(run_experiment(&spec, &model, 20_000, 2, 43, &ExperimentOptions::default()).unwrap().difference, a.difference);
}

#[test]
fn pair_recovers_half_visibility_under_common_noise() {
    let spec = array(2);
    let tk = spec.overlap_time().unwrap();
    // σγ = 8 leaves each single device a fringe amplitude of e^{-19.5}
    let model = NoiseModel::common_mode_displacement(8.0, tk);
    let shots = 400_000;
    let r = run_experiment(&spec, &model, shots, 1, 7, &ExperimentOptions::default()).unwrap();
    let fit = fit_fringe(&r.difference, 2.0).unwrap();
    assert!((fit.visibility - 0.5).abs() <= 0.02, "{fit:?}");
    let exact = exact_difference_density(&spec, 1, residual_moments(&spec, &model, 1).unwrap()).unwrap();
    let ks = r.difference.ks_to_density(&exact);
    assert!(ks <= ks_floor(shots), "ks={ks}");

    let single = &r.devices[0];
    let washed = averaged_pdf(&spec.patterns().unwrap()[0], 8.0).unwrap();
    assert!(washed.visibility() < 1e-5);
    assert!(single.ks_to_density(&washed) <= ks_floor(shots));
}

#[test]
fn second_order_follows_exact_density_not_recursion() {
    let spec = array(3);
    let tk = spec.overlap_time().unwrap();
    let model = NoiseModel::new(vec![
        Process::ShotConstant { mean: 0.0, std: 2.0 * 5.0 / (tk * tk) },
        Process::ShotConstant { mean: 0.0, std: 2.0 * 5.0 / (tk * tk) },
    ]);
    let shots = 200_000;
    let r = run_experiment(&spec, &model, shots, 2, 11, &ExperimentOptions::default()).unwrap();
    let exact = exact_difference_density(&spec, 2, residual_moments(&spec, &model, 2).unwrap()).unwrap();
    let ks_exact = r.difference.ks_to_density(&exact);
    assert!(ks_exact <= ks_floor(shots), "ks={ks_exact}");
    // the recursion treats x_{0,1} and x_{1,2} as independent although both use device 1
    let recursion = r.recursion.pattern().profile();
    let ks_rec = r.difference.ks_to_density(&recursion);
    assert!(ks_rec > 5.0 * ks_floor(shots), "ks={ks_rec}");
}

#[test]
fn polynomial_fields_leave_difference_unchanged() {
    let spec = array(4);
    let tk = spec.overlap_time().unwrap();
    let shots = 50_000;
    let quiet = NoiseModel::new(vec![Process::Zero]);
    let base = run_experiment(&spec, &quiet, shots, 3, 5, &ExperimentOptions::default()).unwrap();
    let loud = NoiseModel::new(
        (0..3).map(|_| Process::ShotConstant { mean: 1.0, std: 2.0 * 50.0 / (tk * tk) }).collect(),
    );
    let layout = Some(mwarray::montecarlo::HistogramLayout { bins: base.difference.counts.len(), lo: base.difference.edges[0], hi: *base.difference.edges.last().unwrap() });
    let opts = ExperimentOptions { layout, ..ExperimentOptions::default() };
    let noisy = run_experiment(&spec, &loud, shots, 3, 5, &opts).unwrap();
    assert_eq!(noisy.difference.total, base.difference.total);
    let cdf = |h: &mwarray::montecarlo::Histogram| {
        let mut acc = 0u64;
        h.counts.iter().map(|c| { acc += c; acc as f64 / h.total as f64 }).collect::<Vec<_>>()
    };
    let ks = cdf(&base.difference).iter().zip(cdf(&noisy.difference)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(ks <= 1.36 * (2.0 / shots as f64).sqrt(), "ks={ks}");
}
