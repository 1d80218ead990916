//! Benchmark systems with exact residuals and analytic tangents.

mod membrane;
mod simple;
mod truss;
mod vonmises;

pub use membrane::UniaxialMembraneElement;
pub use simple::{LinearSpring, SpringMassChain};
pub use truss::{green_bar, Member, TrussLattice};
pub use vonmises::{vmtruss_analytic_path, vmtruss_analytic_slope, vmtruss_limit_points, VonMisesTruss};

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::materials::MaterialParams;
use crate::numerics::Matrix;
use crate::operators::{OpResult, Operators};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model config `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },
}

impl ModelError {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        ModelError::InvalidConfig {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

/// Declarative description of a shipped model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelConfig {
    Spring { k: f64, f: f64, m: f64 },
    Chain { n: usize, k: f64, m: f64, f: f64 },
    VonMises { a: f64, h: f64, ea: f64, p_ref: f64, m: f64, symmetric: bool },
    Column { ea: f64, ks: f64, l: f64, p_ref: f64, m: f64 },
    Membrane { length: f64, width: f64, edge_load: f64, material: MaterialParams, lumped: bool },
}

/// Shear modulus of the default membrane material (Pa).
pub const MEMBRANE_MU: f64 = 1.5e6;

impl ModelConfig {
    /// Default configuration for a model name: `spring`, `chain`, `vmtruss`
    /// (two DoFs), `vmtruss1` (symmetric), `column` or `membrane`.
    pub fn named(name: &str) -> Result<Self, ModelError> {
        Ok(match name {
            "spring" => ModelConfig::Spring { k: 1.0, f: 1.0, m: 1.0 },
            "chain" => ModelConfig::Chain { n: 5, k: 1.0, m: 1.0, f: 1.0 },
            "vmtruss" | "vmtruss1" => ModelConfig::VonMises {
                a: 1.0,
                h: 0.5,
                ea: 30.0,
                p_ref: 1.0,
                m: 1.0,
                symmetric: name == "vmtruss1",
            },
            "column" => ModelConfig::Column {
                ea: 1.0e7,
                ks: 1.0,
                l: 1.0,
                p_ref: 1.0,
                m: 1.0,
            },
            "membrane" => {
                let nu = 0.45;
                let material = MaterialParams::neo_hookean(2.0 * MEMBRANE_MU * (1.0 + nu), nu)
                    .with_thickness(1.0e-3)
                    .with_density(1.0e3);
                ModelConfig::Membrane {
                    length: 1.0,
                    width: 1.0,
                    edge_load: MEMBRANE_MU * 1.0e-3,
                    material,
                    lumped: false,
                }
            }
            other => {
                return Err(ModelError::invalid(
                    "model",
                    format!("unknown model `{other}`; expected spring, chain, vmtruss, vmtruss1, column or membrane"),
                ))
            }
        })
    }

    /// Applies `key=value` overrides (one per line, `#` comments).
    pub fn with_overrides(mut self, text: &str) -> Result<Self, ModelError> {
        let mut kv = BTreeMap::new();
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ModelError::invalid(line, "expected key=value"))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        for (key, value) in &kv {
            let num = || f64::from_str(value).map_err(|_| ModelError::invalid(key, format!("not a number: {value}")));
            match (&mut self, key.as_str()) {
                (_, "model") => {}
                (ModelConfig::Spring { k, .. }, "k") => *k = num()?,
                (ModelConfig::Spring { f, .. }, "f") => *f = num()?,
                (ModelConfig::Spring { m, .. }, "m") => *m = num()?,
                (ModelConfig::Chain { n, .. }, "n") => {
                    *n = usize::from_str(value).map_err(|_| ModelError::invalid("n", "not an integer"))?
                }
                (ModelConfig::Chain { k, .. }, "k") => *k = num()?,
                (ModelConfig::Chain { m, .. }, "m") => *m = num()?,
                (ModelConfig::Chain { f, .. }, "f") => *f = num()?,
                (ModelConfig::VonMises { a, .. }, "a") => *a = num()?,
                (ModelConfig::VonMises { h, .. }, "h") => *h = num()?,
                (ModelConfig::VonMises { ea, .. }, "ea" | "EA") => *ea = num()?,
                (ModelConfig::VonMises { p_ref, .. }, "p_ref") => *p_ref = num()?,
                (ModelConfig::VonMises { m, .. }, "m") => *m = num()?,
                (ModelConfig::VonMises { symmetric, .. }, "symmetric") => {
                    *symmetric = bool::from_str(value).map_err(|_| ModelError::invalid("symmetric", "expected true or false"))?
                }
                (ModelConfig::Column { ea, .. }, "ea" | "EA") => *ea = num()?,
                (ModelConfig::Column { ks, .. }, "ks") => *ks = num()?,
                (ModelConfig::Column { l, .. }, "l" | "L") => *l = num()?,
                (ModelConfig::Column { p_ref, .. }, "p_ref") => *p_ref = num()?,
                (ModelConfig::Column { m, .. }, "m") => *m = num()?,
                (ModelConfig::Membrane { length, .. }, "length" | "L") => *length = num()?,
                (ModelConfig::Membrane { width, .. }, "width" | "W") => *width = num()?,
                (ModelConfig::Membrane { edge_load, .. }, "edge_load") => *edge_load = num()?,
                (ModelConfig::Membrane { lumped, .. }, "lumped") => {
                    *lumped = bool::from_str(value).map_err(|_| ModelError::invalid("lumped", "expected true or false"))?
                }
                _ => return Err(ModelError::invalid(key, "unknown key for this model")),
            }
        }
        Ok(self)
    }

    pub fn with_material(mut self, mat: MaterialParams) -> Result<Self, ModelError> {
        match &mut self {
            ModelConfig::Membrane { material, .. } => {
                *material = mat;
                Ok(self)
            }
            _ => Err(ModelError::invalid("material", "only the membrane model takes a material")),
        }
    }
}

/// Any shipped model behind one cloneable type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Spring(LinearSpring),
    Chain(SpringMassChain),
    VonMises(VonMisesTruss),
    Lattice(TrussLattice),
    Membrane(UniaxialMembraneElement),
}

/// Builds the operator set for a configuration.
pub fn make_operator_set(cfg: &ModelConfig) -> Result<Model, ModelError> {
    Ok(match cfg {
        ModelConfig::Spring { k, f, m } => Model::Spring(LinearSpring::new(*k, *f)?.with_mass(*m)?),
        ModelConfig::Chain { n, k, m, f } => Model::Chain(SpringMassChain::new(*n, *k, *m)?.with_load(*f)),
        ModelConfig::VonMises { a, h, ea, p_ref, m, symmetric } => {
            if !(*m > 0.0) {
                return Err(ModelError::invalid("m", "must be positive"));
            }
            let mut t = VonMisesTruss::new(*a, *h, *ea, *p_ref, *symmetric)?;
            t.mass = *m;
            Model::VonMises(t)
        }
        ModelConfig::Column { ea, ks, l, p_ref, m } => {
            Model::Lattice(TrussLattice::column(*ea, *ks, *l, *p_ref)?.with_node_mass(*m)?)
        }
        ModelConfig::Membrane { length, width, edge_load, material, lumped } => Model::Membrane(
            UniaxialMembraneElement::new(*length, *width, *edge_load, material.clone())?.lumped(*lumped),
        ),
    })
}

impl Model {
    /// The same model with its prescribed-displacement driver switched on.
    pub fn driven(self) -> Result<Self, ModelError> {
        Ok(match self {
            Model::Spring(s) => Model::Spring(s.driven()),
            Model::VonMises(t) => Model::VonMises(t.driven()),
            Model::Membrane(m) => Model::Membrane(m.driven()),
            Model::Lattice(l) => {
                // Drive the loaded top of the column (last free DoF).
                let dof = *l
                    .free_dofs()
                    .last()
                    .ok_or_else(|| ModelError::invalid("model", "no free dof to drive"))?;
                Model::Lattice(l.driven(dof)?)
            }
            Model::Chain(_) => return Err(ModelError::invalid("model", "chain has no displacement driver")),
        })
    }
}

macro_rules! delegate {
    ($self:ident, $m:ident => $e:expr) => {
        match $self {
            Model::Spring($m) => $e,
            Model::Chain($m) => $e,
            Model::VonMises($m) => $e,
            Model::Lattice($m) => $e,
            Model::Membrane($m) => $e,
        }
    };
}

impl Operators for Model {
    fn n_dof(&self) -> usize {
        delegate!(self, m => m.n_dof())
    }
    fn force(&self) -> OpResult<Vec<f64>> {
        delegate!(self, m => m.force())
    }
    fn internal_force(&self, u: &[f64]) -> OpResult<Vec<f64>> {
        delegate!(self, m => m.internal_force(u))
    }
    fn jacobian(&self, u: &[f64]) -> OpResult<Matrix> {
        delegate!(self, m => m.jacobian(u))
    }
    fn mass(&self) -> OpResult<Matrix> {
        delegate!(self, m => m.mass())
    }
    fn has_control(&self) -> bool {
        delegate!(self, m => m.has_control())
    }
    fn set_control(&mut self, gamma: f64) -> OpResult<()> {
        delegate!(self, m => m.set_control(gamma))
    }
    fn reaction(&self, u: &[f64]) -> OpResult<f64> {
        delegate!(self, m => m.reaction(u))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_models_build() {
        for name in ["spring", "chain", "vmtruss", "vmtruss1", "column", "membrane"] {
            let m = make_operator_set(&ModelConfig::named(name).unwrap()).unwrap();
            let p = m.force().unwrap();
            let r = m.residual(&vec![0.0; m.n_dof()]).unwrap();
            for (a, b) in p.iter().zip(&r) {
                assert!((a + b).abs() <= 1e-12 * p.iter().fold(0.0_f64, |s, v| s.max(v.abs())));
            }
        }
        assert!(ModelConfig::named("nope").is_err());
    }

    #[test]
    fn overrides() {
        let c = ModelConfig::named("chain").unwrap().with_overrides("n=3\nk=2 # stiff").unwrap();
        assert_eq!(c, ModelConfig::Chain { n: 3, k: 2.0, m: 1.0, f: 1.0 });
        assert!(ModelConfig::named("chain").unwrap().with_overrides("h=1").is_err());
        let bad = ModelConfig::named("spring").unwrap().with_overrides("k=-1").unwrap();
        assert!(make_operator_set(&bad).is_err());
    }
}
