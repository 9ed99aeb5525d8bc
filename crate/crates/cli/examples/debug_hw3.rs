use geomx::copulas::{sample_path, CopulaFamily, CopulaSpec};
use geomx::geometry::NormKind;
use geomx::quantile_fit::{exceedances, fit_radial_quantile, polar_series, QuantileFitConfig};
use geomx::RngStream;

fn main() {
    let t_len = 5_000;
    let spec = CopulaSpec::new(CopulaFamily::standard("huser_wadsworth").unwrap(), t_len).unwrap();
    for rep in [0u64, 1, 2] {
        let mut rng = RngStream::new(20260808, 200 + rep);
        let series = sample_path(&spec, &mut rng);
        // empirical joint tail dependence per block: chi(0.95)
        print!("rep {rep}: chi(0.95) per block:");
        let block = t_len / 5;
        for b in 0..5 {
            let lo = b * block;
            let xs = &series.x1[lo..lo + block];
            let ys = &series.x2[lo..lo + block];
            let mut xs_s = xs.to_vec();
            xs_s.sort_by(|a, c| a.partial_cmp(c).unwrap());
            let q = xs_s[(0.95 * block as f64) as usize];
            let n_x = xs.iter().filter(|v| **v > q).count();
            let n_joint = xs.iter().zip(ys).filter(|(x, y)| **x > q && **y > q).count();
            print!(" {:.3}", n_joint as f64 / n_x.max(1) as f64);
        }
        println!();
        // where the big-radius diagonal points sit in time
        let polar = polar_series(&series, NormKind::L2).unwrap();
        let qout = fit_radial_quantile(&polar, t_len, NormKind::L2, &QuantileFitConfig::default()).unwrap();
        println!("  stage1 lambda ({}, {})", qout.report.lambda_t, qout.report.lambda_phi);
        let qe = qout.fit.model.evaluator().unwrap();
        let diag = std::f64::consts::FRAC_PI_4;
        print!("  r_tau(diag, t):");
        for frac in [0.0, 0.5, 1.0] {
            let t = 1.0 + (t_len as f64 - 1.0) * frac;
            print!(" {:.3}", qe.predict(diag, t).unwrap().exp());
        }
        // empirical per-block diagonal-sector tau-quantile of radius
        print!("  empirical:");
        for b in 0..5 {
            let lo_t = 1.0 + (b * block) as f64;
            let hi_t = lo_t + block as f64;
            let mut rs: Vec<f64> = polar
                .iter()
                .filter(|p| p.t >= lo_t && p.t < hi_t && (p.phi - diag).abs() < 0.3)
                .map(|p| p.r)
                .collect();
            rs.sort_by(|a, c| a.partial_cmp(c).unwrap());
            if rs.is_empty() { print!(" -"); } else {
                print!(" {:.3}", rs[(0.8 * rs.len() as f64) as usize]);
            }
        }
        println!();
        let exc = exceedances(&qout.fit, &polar).unwrap();
        // mean exceedance radius near the diagonal, early vs late half
        let sel: Vec<&geomx::quantile_fit::Exceedance> = exc.iter().filter(|e| (e.point.phi - diag).abs() < 0.3).collect();
        let early: Vec<f64> = sel.iter().filter(|e| e.point.t < 2500.0).map(|e| e.point.r - e.threshold).collect();
        let late: Vec<f64> = sel.iter().filter(|e| e.point.t >= 2500.0).map(|e| e.point.r - e.threshold).collect();
        println!(
            "  diag excess means: early {:.3} (n {}), late {:.3} (n {})",
            early.iter().sum::<f64>() / early.len().max(1) as f64, early.len(),
            late.iter().sum::<f64>() / late.len().max(1) as f64, late.len()
        );
    }
}
