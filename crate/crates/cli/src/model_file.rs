//! Model persistence: a flat, versioned key=value text format. Floats are
//! written in shortest round-trip form, so save -> load -> save is
//! byte-identical and loaded models predict exactly like the fitted ones.

use geomx::gauge_fit::GaugeGamFit;
use geomx::geometry::NormKind;
use geomx::margins::{GarchFit, MarginalModel, MarginalPipeline};
use geomx::quantile_fit::QuantileGamFit;
use geomx::splines::{KnotGrid, KnotKind};
use geomx::tail::{AngularDensity, TailModel};
use geomx::tensor_gam::TensorSplineModel;
use geomx::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// A fitted model bundle plus provenance.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub config_hash: String,
    pub seed: u64,
    pub build: String,
    pub norm: NormKind,
    pub tau: f64,
    pub quantile: TensorSplineModel,
    pub gauge_shape: f64,
    pub gauge: TensorSplineModel,
    pub angular: AngularDensity,
    pub margins: Option<Box<[MarginalPipeline; 2]>>,
}

impl ModelFile {
    pub fn quantile_fit(&self) -> QuantileGamFit {
        QuantileGamFit {
            tau: self.tau,
            norm: self.norm,
            model: self.quantile.clone(),
        }
    }

    pub fn gauge_fit(&self) -> GaugeGamFit {
        GaugeGamFit {
            shape: self.gauge_shape,
            tau: self.tau,
            model: self.gauge.clone(),
        }
    }

    pub fn tail_model(&self) -> Result<TailModel> {
        TailModel::new(
            self.quantile_fit(),
            self.gauge_fit(),
            self.angular.clone(),
            self.norm,
            self.margins.clone(),
        )
    }
}

fn push_kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key}={value}");
}

fn push_list(out: &mut String, key: &str, values: &[f64]) {
    let joined = values
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(",");
    let _ = writeln!(out, "{key}={joined}");
}

fn push_tensor(out: &mut String, prefix: &str, m: &TensorSplineModel) {
    push_kv(out, &format!("{prefix}.intercept"), m.intercept);
    push_list(out, &format!("{prefix}.coefs"), &m.coefs);
    push_kv(
        out,
        &format!("{prefix}.knots_t.kind"),
        match m.knots_t.kind {
            KnotKind::Time => "time",
            KnotKind::Angle => "angle",
        },
    );
    push_list(out, &format!("{prefix}.knots_t.values"), &m.knots_t.values);
    push_list(out, &format!("{prefix}.knots_phi.values"), &m.knots_phi.values);
    push_list(out, &format!("{prefix}.col_means"), &m.col_means);
    push_kv(out, &format!("{prefix}.lambda_t"), m.lambda_t);
    push_kv(out, &format!("{prefix}.lambda_phi"), m.lambda_phi);
    push_kv(out, &format!("{prefix}.t_min"), m.t_min);
    push_kv(out, &format!("{prefix}.t_max"), m.t_max);
}

fn push_margin_pipeline(out: &mut String, prefix: &str, p: &MarginalPipeline) {
    push_kv(out, &format!("{prefix}.garch.mu"), p.garch.mu);
    push_kv(out, &format!("{prefix}.garch.c"), p.garch.c);
    push_kv(out, &format!("{prefix}.garch.a"), p.garch.a);
    push_kv(out, &format!("{prefix}.garch.b"), p.garch.b);
    push_list(out, &format!("{prefix}.garch.sigma2"), &p.garch.sigma2_path);
    push_kv(out, &format!("{prefix}.margin.alpha_upper"), p.margin.alpha_upper);
    push_kv(out, &format!("{prefix}.margin.alpha_lower"), p.margin.alpha_lower);
    push_kv(out, &format!("{prefix}.margin.l"), p.margin.l);
    push_kv(out, &format!("{prefix}.margin.h"), p.margin.h);
    push_kv(out, &format!("{prefix}.margin.gpd_upper.sigma"), p.margin.gpd_upper.0);
    push_kv(out, &format!("{prefix}.margin.gpd_upper.xi"), p.margin.gpd_upper.1);
    push_kv(out, &format!("{prefix}.margin.gpd_lower.sigma"), p.margin.gpd_lower.0);
    push_kv(out, &format!("{prefix}.margin.gpd_lower.xi"), p.margin.gpd_lower.1);
    push_list(out, &format!("{prefix}.margin.body"), &p.margin.body);
}

pub fn save_model(path: &Path, m: &ModelFile) -> Result<()> {
    let mut out = String::new();
    push_kv(&mut out, "schema_version", SCHEMA_VERSION);
    push_kv(&mut out, "kind", "model");
    push_kv(&mut out, "config_hash", &m.config_hash);
    push_kv(&mut out, "seed", m.seed);
    push_kv(&mut out, "build", &m.build);
    push_kv(&mut out, "norm", m.norm.name());
    push_kv(&mut out, "tau", m.tau);
    push_tensor(&mut out, "quantile", &m.quantile);
    push_kv(&mut out, "gauge.shape", m.gauge_shape);
    push_tensor(&mut out, "gauge", &m.gauge);
    push_list(&mut out, "angular.angles", &m.angular.angles);
    push_list(&mut out, "angular.times", &m.angular.times);
    push_kv(&mut out, "angular.h1", m.angular.h1);
    push_kv(&mut out, "angular.h2", m.angular.h2);
    push_kv(&mut out, "margins.present", if m.margins.is_some() { 1 } else { 0 });
    if let Some(pipes) = &m.margins {
        push_margin_pipeline(&mut out, "margins.0", &pipes[0]);
        push_margin_pipeline(&mut out, "margins.1", &pipes[1]);
    }
    std::fs::write(path, out)
        .map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))
}

/// Save a standalone margins file (the `standardize` output).
pub fn save_margins(path: &Path, config_hash: &str, pipe: &MarginalPipeline) -> Result<()> {
    let mut out = String::new();
    push_kv(&mut out, "schema_version", SCHEMA_VERSION);
    push_kv(&mut out, "kind", "margins");
    push_kv(&mut out, "config_hash", config_hash);
    push_margin_pipeline(&mut out, "margins", pipe);
    std::fs::write(path, out)
        .map_err(|e| Error::data(format!("cannot write {}: {e}", path.display())))
}

struct KvFile {
    map: BTreeMap<String, String>,
    path: String,
}

impl KvFile {
    fn read(path: &Path) -> Result<KvFile> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
        let mut map = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((k, v)) = line.split_once('=') {
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(KvFile {
            map,
            path: path.display().to_string(),
        })
    }

    fn get(&self, key: &str) -> Result<&str> {
        self.map
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::data(format!("{}: missing key '{key}'", self.path)))
    }

    fn f64(&self, key: &str) -> Result<f64> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::data(format!("{}: bad number for '{key}'", self.path)))
    }

    fn u64(&self, key: &str) -> Result<u64> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::data(format!("{}: bad integer for '{key}'", self.path)))
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.get(key)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::data(format!("{}: bad list entry in '{key}'", self.path)))
            })
            .collect()
    }

    fn tensor(&self, prefix: &str) -> Result<TensorSplineModel> {
        Ok(TensorSplineModel {
            intercept: self.f64(&format!("{prefix}.intercept"))?,
            coefs: self.list(&format!("{prefix}.coefs"))?,
            knots_t: KnotGrid {
                kind: KnotKind::Time,
                values: self.list(&format!("{prefix}.knots_t.values"))?,
            },
            knots_phi: KnotGrid {
                kind: KnotKind::Angle,
                values: self.list(&format!("{prefix}.knots_phi.values"))?,
            },
            col_means: self.list(&format!("{prefix}.col_means"))?,
            lambda_t: self.f64(&format!("{prefix}.lambda_t"))?,
            lambda_phi: self.f64(&format!("{prefix}.lambda_phi"))?,
            t_min: self.f64(&format!("{prefix}.t_min"))?,
            t_max: self.f64(&format!("{prefix}.t_max"))?,
        })
    }

    fn margin_pipeline(&self, prefix: &str) -> Result<MarginalPipeline> {
        Ok(MarginalPipeline {
            garch: GarchFit {
                mu: self.f64(&format!("{prefix}.garch.mu"))?,
                c: self.f64(&format!("{prefix}.garch.c"))?,
                a: self.f64(&format!("{prefix}.garch.a"))?,
                b: self.f64(&format!("{prefix}.garch.b"))?,
                sigma2_path: self.list(&format!("{prefix}.garch.sigma2"))?,
            },
            margin: MarginalModel {
                alpha_upper: self.f64(&format!("{prefix}.margin.alpha_upper"))?,
                alpha_lower: self.f64(&format!("{prefix}.margin.alpha_lower"))?,
                l: self.f64(&format!("{prefix}.margin.l"))?,
                h: self.f64(&format!("{prefix}.margin.h"))?,
                gpd_upper: (
                    self.f64(&format!("{prefix}.margin.gpd_upper.sigma"))?,
                    self.f64(&format!("{prefix}.margin.gpd_upper.xi"))?,
                ),
                gpd_lower: (
                    self.f64(&format!("{prefix}.margin.gpd_lower.sigma"))?,
                    self.f64(&format!("{prefix}.margin.gpd_lower.xi"))?,
                ),
                body: self.list(&format!("{prefix}.margin.body"))?,
            },
        })
    }
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let kv = KvFile::read(path)?;
    let version = kv.u64("schema_version")?;
    if version != SCHEMA_VERSION as u64 {
        return Err(Error::data(format!(
            "unsupported model schema version {version}"
        )));
    }
    if kv.get("kind")? != "model" {
        return Err(Error::data(format!(
            "{} is not a model file (kind = {})",
            path.display(),
            kv.get("kind")?
        )));
    }
    let margins = if kv.u64("margins.present")? == 1 {
        Some(Box::new([
            kv.margin_pipeline("margins.0")?,
            kv.margin_pipeline("margins.1")?,
        ]))
    } else {
        None
    };
    Ok(ModelFile {
        config_hash: kv.get("config_hash")?.to_string(),
        seed: kv.u64("seed")?,
        build: kv.get("build")?.to_string(),
        norm: NormKind::parse(kv.get("norm")?)?,
        tau: kv.f64("tau")?,
        quantile: kv.tensor("quantile")?,
        gauge_shape: kv.f64("gauge.shape")?,
        gauge: kv.tensor("gauge")?,
        angular: AngularDensity {
            angles: kv.list("angular.angles")?,
            times: kv.list("angular.times")?,
            h1: kv.f64("angular.h1")?,
            h2: kv.f64("angular.h2")?,
        },
        margins,
    })
}

pub fn load_margins(path: &Path) -> Result<MarginalPipeline> {
    let kv = KvFile::read(path)?;
    if kv.get("kind")? != "margins" {
        return Err(Error::data(format!(
            "{} is not a margins file",
            path.display()
        )));
    }
    kv.margin_pipeline("margins")
}

pub fn build_id() -> String {
    format!("geomx {}", env!("CARGO_PKG_VERSION"))
}
