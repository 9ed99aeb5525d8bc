//! Cross-module pipeline checks: full two-stage fits on simulated
//! dependence structures, threshold monotonicity in tau, PIT calibration of
//! the fitted radial model, and determinism end to end.

use geomx::copulas::{sample_path, CopulaFamily, CopulaSpec};
use geomx::diagnostics::qq_exponential;
use geomx::gauge_fit::{fit_gauge, trunc_gamma_pit, GaugeFitConfig};
use geomx::geometry::NormKind;
use geomx::quantile_fit::{
    exceedances, fit_radial_quantile, polar_series, predict_quantile, QuantileFitConfig,
};
use geomx::RngStream;

fn fit_both(
    series: &geomx::BivariateSeries,
    t_len: usize,
    qcfg: &QuantileFitConfig,
    gcfg: &GaugeFitConfig,
) -> (
    geomx::quantile_fit::QuantileGamFit,
    geomx::gauge_fit::GaugeGamFit,
    Vec<geomx::quantile_fit::Exceedance>,
) {
    let polar = polar_series(series, NormKind::L2).unwrap();
    let qfit = fit_radial_quantile(&polar, t_len, NormKind::L2, qcfg).unwrap();
    let exc = exceedances(&qfit.fit, &polar).unwrap();
    let gfit = fit_gauge(&exc, t_len, qcfg.tau, gcfg).unwrap();
    (qfit.fit, gfit.fit, exc)
}

#[test]
fn tau_monotonicity_of_fitted_thresholds() {
    let t_len = 4000;
    let spec = CopulaSpec::new(CopulaFamily::standard("gaussian_linear").unwrap(), t_len).unwrap();
    let mut rng = RngStream::new(101, 0);
    let series = sample_path(&spec, &mut rng);
    let polar = polar_series(&series, NormKind::L2).unwrap();
    let grid = vec![1e-2, 1.0, 1e2];
    let lo = fit_radial_quantile(
        &polar,
        t_len,
        NormKind::L2,
        &QuantileFitConfig {
            tau: 0.8,
            lambda_grid: grid.clone(),
            ..QuantileFitConfig::default()
        },
    )
    .unwrap();
    let hi = fit_radial_quantile(
        &polar,
        t_len,
        NormKind::L2,
        &QuantileFitConfig {
            tau: 0.9,
            lambda_grid: grid,
            ..QuantileFitConfig::default()
        },
    )
    .unwrap();
    let mut above = 0usize;
    let mut total = 0usize;
    for i in 0..100 {
        for j in 0..100 {
            let t = 1.0 + (t_len as f64 - 1.0) * i as f64 / 99.0;
            let phi = geomx::splines::TWO_PI * j as f64 / 100.0;
            let q_lo = predict_quantile(&lo.fit, phi, t).unwrap();
            let q_hi = predict_quantile(&hi.fit, phi, t).unwrap();
            total += 1;
            if q_hi >= q_lo {
                above += 1;
            }
        }
    }
    let frac = above as f64 / total as f64;
    assert!(frac >= 0.99, "tau-monotone fraction {frac}");
}

#[test]
fn copula_path_margins_pass_rolling_check() {
    // sampled paths carry exact standard Laplace margins
    let t_len = 25_000;
    let spec = CopulaSpec::new(CopulaFamily::standard("gaussian_linear").unwrap(), t_len).unwrap();
    let mut rng = RngStream::new(102, 1);
    let series = sample_path(&spec, &mut rng);
    for xs in [&series.x1, &series.x2] {
        let windows = geomx::margins::rolling_laplace_check(xs, 5000).unwrap();
        assert_eq!(windows.len(), 5);
        for (loc, scale) in windows {
            assert!(loc.abs() <= 0.05, "location {loc}");
            assert!((scale - 1.0).abs() <= 0.05, "scale {scale}");
        }
    }
}

#[test]
fn fitted_pit_is_exponential_across_copulas() {
    // scaled-down version of the calibration contract: every dependence
    // family, a few replicates each, fixed smoothing; the exponential-scale
    // PIT of exceedances must pass a 1% Kolmogorov-Smirnov test against
    // Exp(1) in at least 90% of the runs
    let t_len = 4000;
    let qcfg = QuantileFitConfig {
        fixed_lambda: Some((1.0, 1.0)),
        ..QuantileFitConfig::default()
    };
    let gcfg = GaugeFitConfig {
        fixed_lambda: Some((1.0, 1.0)),
        ..GaugeFitConfig::default()
    };
    let mut passes = 0;
    let mut runs = 0;
    for (f_idx, name) in CopulaFamily::standard_names().iter().enumerate() {
        let spec = CopulaSpec::new(CopulaFamily::standard(name).unwrap(), t_len).unwrap();
        for rep in 0..4 {
            let mut rng = RngStream::new(7000 + rep, f_idx as u64);
            let series = sample_path(&spec, &mut rng);
            let (qfit, gfit, exc) = fit_both(&series, t_len, &qcfg, &gcfg);
            let _ = qfit;
            let ge = gfit.model.evaluator().unwrap();
            let mut pit: Vec<f64> = exc
                .iter()
                .map(|e| {
                    let rate = ge.predict(e.point.phi, e.point.t).unwrap().exp();
                    trunc_gamma_pit(e.point.r, rate, e.threshold, gfit.shape).unwrap()
                })
                .collect();
            pit.sort_by(|a, b| a.partial_cmp(b).unwrap());
            // Kolmogorov-Smirnov distance to Exp(1)
            let n = pit.len();
            let mut d: f64 = 0.0;
            for (i, e) in pit.iter().enumerate() {
                let f = 1.0 - (-e).exp();
                d = d.max((f - i as f64 / n as f64).abs());
                d = d.max(((i + 1) as f64 / n as f64 - f).abs());
            }
            let crit = 1.628 / (n as f64).sqrt(); // 1% asymptotic critical value
            runs += 1;
            if d <= crit {
                passes += 1;
            }
        }
    }
    assert!(
        passes as f64 >= 0.9 * runs as f64,
        "KS passes {passes}/{runs}"
    );
}

#[test]
fn qq_diagnostic_on_fitted_model() {
    let t_len = 5000;
    let spec = CopulaSpec::new(CopulaFamily::standard("gaussian_harmonic").unwrap(), t_len).unwrap();
    let mut rng = RngStream::new(103, 2);
    let series = sample_path(&spec, &mut rng);
    let qcfg = QuantileFitConfig {
        fixed_lambda: Some((1.0, 1.0)),
        ..QuantileFitConfig::default()
    };
    let gcfg = GaugeFitConfig {
        fixed_lambda: Some((1.0, 1.0)),
        ..GaugeFitConfig::default()
    };
    let (_, gfit, exc) = fit_both(&series, t_len, &qcfg, &gcfg);
    let qq = qq_exponential(&gfit, &exc).unwrap();
    assert!(
        qq.fraction_inside() >= 0.80,
        "fitted-model QQ inside fraction {}",
        qq.fraction_inside()
    );
}

#[test]
fn end_to_end_determinism_of_fits() {
    let t_len = 2000;
    let spec = CopulaSpec::new(CopulaFamily::standard("student_t").unwrap(), t_len).unwrap();
    let run = || {
        let mut rng = RngStream::new(104, 3);
        let series = sample_path(&spec, &mut rng);
        let qcfg = QuantileFitConfig {
            fixed_lambda: Some((1.0, 1.0)),
            ..QuantileFitConfig::default()
        };
        let gcfg = GaugeFitConfig {
            fixed_lambda: Some((1.0, 1.0)),
            ..GaugeFitConfig::default()
        };
        let (qfit, gfit, _) = fit_both(&series, t_len, &qcfg, &gcfg);
        (qfit.model.coefs, gfit.model.coefs)
    };
    let (a1, a2) = run();
    let (b1, b2) = run();
    assert_eq!(a1, b1, "quantile coefficients differ between identical runs");
    assert_eq!(a2, b2, "gauge coefficients differ between identical runs");
}
