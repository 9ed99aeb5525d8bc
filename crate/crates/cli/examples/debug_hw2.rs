use geomx::copulas::{sample_path, CopulaFamily, CopulaSpec};
use geomx::gauge_fit::{fit_gauge, GaugeFitConfig};
use geomx::geometry::{boundary_curve, default_phi_grid, eta_from_boundary, NormKind};
use geomx::quantile_fit::{exceedances, fit_radial_quantile, polar_series, QuantileFitConfig};
use geomx::RngStream;

fn main() {
    let t_len = 25_000;
    let spec = CopulaSpec::new(CopulaFamily::standard("huser_wadsworth").unwrap(), t_len).unwrap();
    let t_grid: Vec<f64> = (0..5).map(|i| 1.0 + (t_len as f64 - 1.0) * i as f64 / 4.0).collect();
    for rep in 0..4u64 {
        let mut rng = RngStream::new(20260808, 200 + rep);
        let series = sample_path(&spec, &mut rng);
        let polar = polar_series(&series, NormKind::L2).unwrap();
        let qout = fit_radial_quantile(&polar, t_len, NormKind::L2, &QuantileFitConfig::default()).unwrap();
        let exc = exceedances(&qout.fit, &polar).unwrap();
        let gout = fit_gauge(&exc, t_len, 0.8, &GaugeFitConfig::default()).unwrap();
        let ge = gout.fit.model.evaluator().unwrap();
        let grid = default_phi_grid(720);
        let etas: Vec<f64> = t_grid.iter().map(|&t| {
            let curve = boundary_curve(|phi| Ok(ge.predict(phi, t)?.exp()), t, &grid, NormKind::L2).unwrap();
            eta_from_boundary(&curve, (1, 1)).unwrap().value
        }).collect();
        println!("rep {rep}: lambda_g ({}, {}), etas {:?}",
            gout.report.lambda_t, gout.report.lambda_phi,
            etas.iter().map(|e| (e * 1000.0).round() / 1000.0).collect::<Vec<_>>());
    }
}
