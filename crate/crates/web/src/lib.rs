//! Browser bindings: von Mises truss path tracing, uniaxial tension curves
//! and the two-patch C¹ spline basis. Every export returns a JSON string.

use pathfinder_core::continuation::{run, ContinuationConfig, SingularKind, Stepper};
use pathfinder_core::mappedbasis::two_patch_example;
use pathfinder_core::materials::{uniaxial_solve, MaterialParams};
use pathfinder_core::models::VonMisesTruss;
use serde::Serialize;
use thiserror::Error;
use wasm_bindgen::prelude::*;

/// Point budget for any single request.
pub const MAX_POINTS: u32 = 5_000;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> DemoError {
    DemoError::Invalid(msg.into())
}

fn check_count(name: &str, n: u32, min: u32) -> Result<(), DemoError> {
    if n < min || n > MAX_POINTS {
        return Err(invalid(format!("{name} must be between {min} and {MAX_POINTS}, got {n}")));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct TrussPath {
    /// Apex drop `v` per point.
    pub v: Vec<f64>,
    pub lambda: Vec<f64>,
    pub stability: Vec<usize>,
    pub limits: Vec<(f64, f64)>,
    pub abort: Option<String>,
}

pub fn truss_path(stepper: &str, dl: f64, steps: u32, ea: f64, h: f64) -> Result<TrussPath, DemoError> {
    let stepper: Stepper = stepper.parse().map_err(|e: String| invalid(e))?;
    check_count("steps", steps, 1)?;
    let ops = VonMisesTruss::new(1.0, h, ea, 1.0, false).map_err(|e| invalid(e.to_string()))?;
    let cfg = ContinuationConfig::new(stepper, dl, steps as usize).with_singular_detection(true);
    cfg.validate().map_err(invalid)?;
    let path = run(&ops, &cfg);
    let pts: Vec<_> = path.all_points().collect();
    Ok(TrussPath {
        v: pts.iter().map(|p| p.u[1]).collect(),
        lambda: pts.iter().map(|p| p.lambda).collect(),
        stability: pts.iter().map(|p| p.stability).collect(),
        limits: path
            .singular_points
            .iter()
            .filter(|s| s.kind == SingularKind::Limit)
            .map(|s| (s.u[1], s.lambda))
            .collect(),
        abort: path.abort,
    })
}

#[derive(Debug, Serialize)]
pub struct UniaxialCurve {
    pub lambda: Vec<f64>,
    pub lambda3: Vec<f64>,
    pub sigma: Vec<f64>,
}

pub fn uniaxial_curve(model: &str, e: f64, nu: f64, lambda_max: f64, samples: u32) -> Result<UniaxialCurve, DemoError> {
    check_count("samples", samples, 2)?;
    if !(lambda_max >= 1.0 && lambda_max.is_finite()) {
        return Err(invalid("maximum stretch must be at least 1"));
    }
    let p = MaterialParams::parse_kv(&format!("model={model}\nE={e}\nnu={nu}")).map_err(|e| invalid(e.to_string()))?;
    let mut out = UniaxialCurve {
        lambda: Vec::new(),
        lambda3: Vec::new(),
        sigma: Vec::new(),
    };
    let n = samples as usize;
    for i in 0..n {
        let lam = 1.0 + (lambda_max - 1.0) * i as f64 / (n - 1) as f64;
        let s = uniaxial_solve(&p, lam).map_err(|e| invalid(e.to_string()))?;
        out.lambda.push(lam);
        out.lambda3.push(s.lambda3());
        out.sigma.push(s.axial_stress());
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct BasisSamples {
    pub xi: Vec<f64>,
    /// One row per global function.
    pub phi: Vec<Vec<f64>>,
    pub n_local: usize,
}

pub fn basis_samples(degree: u32, spans: u32, samples: u32, derivative: u32) -> Result<BasisSamples, DemoError> {
    check_count("samples", samples, 2)?;
    if !(1..=5).contains(&degree) || !(1..=64).contains(&spans) {
        return Err(invalid("degree must be 1..=5 and spans 1..=64"));
    }
    let mb = two_patch_example(degree as usize, spans as usize).map_err(|e| invalid(e.to_string()))?;
    let (a, b) = mb.domain();
    let n = samples as usize;
    let mut out = BasisSamples {
        xi: Vec::with_capacity(n),
        phi: vec![Vec::with_capacity(n); mb.n_global()],
        n_local: mb.n_local(),
    };
    for i in 0..n {
        let xi = a + (b - a) * i as f64 / (n - 1) as f64;
        let vals = mb.eval(xi, derivative as usize).map_err(|e| invalid(e.to_string()))?;
        out.xi.push(xi);
        for (row, v) in out.phi.iter_mut().zip(vals) {
            row.push(v);
        }
    }
    Ok(out)
}

fn to_js<T: Serialize>(r: Result<T, DemoError>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = tracePath)]
pub fn trace_path_js(stepper: &str, dl: f64, steps: u32, ea: f64, h: f64) -> Result<String, JsError> {
    to_js(truss_path(stepper, dl, steps, ea, h))
}

#[wasm_bindgen(js_name = uniaxialCurve)]
pub fn uniaxial_curve_js(model: &str, e: f64, nu: f64, lambda_max: f64, samples: u32) -> Result<String, JsError> {
    to_js(uniaxial_curve(model, e, nu, lambda_max, samples))
}

#[wasm_bindgen(js_name = basisSamples)]
pub fn basis_samples_js(degree: u32, spans: u32, samples: u32, derivative: u32) -> Result<String, JsError> {
    to_js(basis_samples(degree, spans, samples, derivative))
}
