use geomx::copulas::{gauge_oracle, sample_path, CopulaFamily, CopulaSpec};
use geomx::gauge_fit::{fit_gauge, GaugeFitConfig};
use geomx::geometry::NormKind;
use geomx::quantile_fit::{exceedances, fit_radial_quantile, polar_series, QuantileFitConfig};
use geomx::RngStream;

fn main() {
    let t_len = 5_000;
    let spec = CopulaSpec::new(CopulaFamily::standard("huser_wadsworth").unwrap(), t_len).unwrap();
    let mut rng = RngStream::new(20260808, 200);
    let series = sample_path(&spec, &mut rng);
    let polar = polar_series(&series, NormKind::L2).unwrap();
    let qout = fit_radial_quantile(&polar, t_len, NormKind::L2, &QuantileFitConfig::default()).unwrap();
    println!("stage1 lambda ({}, {})", qout.report.lambda_t, qout.report.lambda_phi);
    let exc = exceedances(&qout.fit, &polar).unwrap();
    let gout = fit_gauge(&exc, t_len, 0.8, &GaugeFitConfig::default()).unwrap();
    println!("stage2 lambda ({}, {})", gout.report.lambda_t, gout.report.lambda_phi);
    let ge = gout.fit.model.evaluator().unwrap();
    let diag = std::f64::consts::FRAC_PI_4;
    for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let t = 1.0 + (t_len as f64 - 1.0) * frac;
        let fitted = ge.predict(diag, t).unwrap().exp();
        let oracle = gauge_oracle(&spec, t, diag, NormKind::L2).unwrap().value;
        println!("t={t:.0}: m_hat(diag) {fitted:.4}, oracle {oracle:.4}");
    }
    // sample correlation over time blocks as a dependence sanity check
    let block = t_len / 5;
    for b in 0..5 {
        let lo = b * block;
        let xs = &series.x1[lo..lo + block];
        let ys = &series.x2[lo..lo + block];
        let mx = xs.iter().sum::<f64>() / block as f64;
        let my = ys.iter().sum::<f64>() / block as f64;
        let mut sxy = 0.0; let mut sxx = 0.0; let mut syy = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
            syy += (y - my) * (y - my);
        }
        println!("block {b}: sample corr {:.3}", sxy / (sxx * syy).sqrt());
    }
}
