use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MaterialError;

/// Default Mooney–Rivlin split `μ₁/μ₂`.
pub const DEFAULT_MR_RATIO: f64 = 7.0;

/// Default three-term Ogden set as `(relative μ_p, α_p)`; rescaled so that
/// `Σ μ_p α_p / 2 = μ`.
pub const DEFAULT_OGDEN: [(f64, f64); 3] = [(6.3, 1.3), (0.012, 5.0), (-0.1, -2.0)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MaterialModel {
    NeoHookean,
    /// `ratio = μ₁/μ₂`
    MooneyRivlin { ratio: f64 },
    /// Absolute `(μ_p, α_p)` pairs.
    Ogden { terms: Vec<(f64, f64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub model: MaterialModel,
    /// Young's modulus (Pa).
    pub e: f64,
    pub nu: f64,
    /// Density (kg/m³).
    pub rho: f64,
    /// Membrane thickness (m).
    pub thickness: f64,
}

fn invalid(field: &str, reason: impl Into<String>) -> MaterialError {
    MaterialError::InvalidParameter {
        field: field.to_string(),
        reason: reason.into(),
    }
}

impl MaterialParams {
    pub fn neo_hookean(e: f64, nu: f64) -> Self {
        Self {
            model: MaterialModel::NeoHookean,
            e,
            nu,
            rho: 1.0,
            thickness: 1.0,
        }
    }

    pub fn mooney_rivlin(e: f64, nu: f64, ratio: f64) -> Self {
        Self {
            model: MaterialModel::MooneyRivlin { ratio },
            ..Self::neo_hookean(e, nu)
        }
    }

    /// Ogden law with explicit pairs; fails unless `Σ μ_p α_p / 2 = μ`.
    pub fn ogden(e: f64, nu: f64, terms: Vec<(f64, f64)>) -> Result<Self, MaterialError> {
        let p = Self {
            model: MaterialModel::Ogden { terms },
            ..Self::neo_hookean(e, nu)
        };
        p.validate()?;
        Ok(p)
    }

    /// Ogden law with [`DEFAULT_OGDEN`] scaled to the shear modulus.
    pub fn ogden_default(e: f64, nu: f64) -> Self {
        let mu = e / (2.0 * (1.0 + nu));
        let raw: f64 = DEFAULT_OGDEN.iter().map(|(m, a)| m * a).sum::<f64>() / 2.0;
        let terms = DEFAULT_OGDEN.iter().map(|&(m, a)| (m * mu / raw, a)).collect();
        Self {
            model: MaterialModel::Ogden { terms },
            ..Self::neo_hookean(e, nu)
        }
    }

    pub fn with_density(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_thickness(mut self, t: f64) -> Self {
        self.thickness = t;
        self
    }

    pub fn mu(&self) -> f64 {
        self.e / (2.0 * (1.0 + self.nu))
    }

    pub fn is_compressible(&self) -> bool {
        self.nu < 0.5
    }

    /// `K = E / (3(1 − 2ν))`; infinite for the incompressible case.
    pub fn bulk_modulus(&self) -> f64 {
        if self.is_compressible() {
            self.e / (3.0 * (1.0 - 2.0 * self.nu))
        } else {
            f64::INFINITY
        }
    }

    /// `(c, β)` pairs of the isochoric energy.
    pub fn isochoric_terms(&self) -> Vec<(f64, f64)> {
        let mu = self.mu();
        match &self.model {
            MaterialModel::NeoHookean => vec![(mu / 2.0, 2.0)],
            MaterialModel::MooneyRivlin { ratio } => {
                let mu1 = mu * ratio / (1.0 + ratio);
                let mu2 = mu / (1.0 + ratio);
                vec![(mu1 / 2.0, 2.0), (mu2 / 2.0, -2.0)]
            }
            MaterialModel::Ogden { terms } => terms.iter().map(|&(m, a)| (m / a, a)).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        if !(self.e.is_finite() && self.e > 0.0) {
            return Err(invalid("E", "must be positive"));
        }
        if !(self.nu > -1.0 && self.nu <= 0.5) {
            return Err(invalid("nu", "must lie in (-1, 0.5]"));
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(invalid("rho", "must be positive"));
        }
        if !(self.thickness.is_finite() && self.thickness > 0.0) {
            return Err(invalid("thickness", "must be positive"));
        }
        match &self.model {
            MaterialModel::NeoHookean => {}
            MaterialModel::MooneyRivlin { ratio } => {
                if !(ratio.is_finite() && *ratio > 0.0) {
                    return Err(invalid("ratio", "must be positive"));
                }
            }
            MaterialModel::Ogden { terms } => {
                if terms.is_empty() {
                    return Err(invalid("ogden", "needs at least one (mu, alpha) pair"));
                }
                if terms.iter().any(|&(m, a)| !m.is_finite() || !a.is_finite() || a == 0.0) {
                    return Err(invalid("ogden", "alpha must be nonzero and values finite"));
                }
                let s: f64 = terms.iter().map(|(m, a)| m * a).sum::<f64>() / 2.0;
                if (s - self.mu()).abs() > 1e-10 * self.mu() {
                    return Err(invalid(
                        "ogden",
                        format!("sum mu_p alpha_p / 2 = {s} differs from mu = {}", self.mu()),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Parses flat `key=value` text. Keys: `model` (NH|MR|OG), `E`, `nu`,
    /// `ratio`, `thickness`, `rho`, and for Ogden `mu` and `alpha` as
    /// comma-separated lists (omit both for the default set). `#` starts a
    /// comment.
    pub fn parse_kv(text: &str) -> Result<Self, MaterialError> {
        let mut model = None;
        let (mut e, mut nu) = (None, None);
        let (mut ratio, mut rho, mut thickness) = (DEFAULT_MR_RATIO, 1.0, 1.0);
        let (mut mus, mut alphas): (Option<Vec<f64>>, Option<Vec<f64>>) = (None, None);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| invalid(&format!("line {}", lineno + 1), "expected key=value"))?;
            let (key, value) = (key.trim(), value.trim().trim_matches('"'));
            let num = |field: &str| -> Result<f64, MaterialError> {
                f64::from_str(value).map_err(|_| invalid(field, format!("not a number: {value}")))
            };
            let list = |field: &str| -> Result<Vec<f64>, MaterialError> {
                value
                    .split(',')
                    .map(|s| f64::from_str(s.trim()).map_err(|_| invalid(field, format!("not a number: {s}"))))
                    .collect()
            };
            match key {
                "model" => model = Some(value.to_ascii_uppercase()),
                "E" | "e" => e = Some(num("E")?),
                "nu" => nu = Some(num("nu")?),
                "ratio" => ratio = num("ratio")?,
                "rho" => rho = num("rho")?,
                "thickness" | "t" => thickness = num("thickness")?,
                "mu" => mus = Some(list("mu")?),
                "alpha" => alphas = Some(list("alpha")?),
                other => return Err(invalid(other, "unknown key")),
            }
        }
        let e = e.ok_or_else(|| invalid("E", "missing"))?;
        let nu = nu.ok_or_else(|| invalid("nu", "missing"))?;
        let base = match model.as_deref() {
            Some("NH") | None => Self::neo_hookean(e, nu),
            Some("MR") => Self::mooney_rivlin(e, nu, ratio),
            Some("OG") => match (mus, alphas) {
                (None, None) => Self::ogden_default(e, nu),
                (Some(m), Some(a)) if m.len() == a.len() => Self {
                    model: MaterialModel::Ogden {
                        terms: m.into_iter().zip(a).collect(),
                    },
                    ..Self::neo_hookean(e, nu)
                },
                _ => return Err(invalid("ogden", "mu and alpha lists must both be given with equal length")),
            },
            Some(other) => return Err(invalid("model", format!("unknown model {other}; expected NH, MR or OG"))),
        };
        let p = base.with_density(rho).with_thickness(thickness);
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mooney_rivlin_split() {
        let p = MaterialParams::mooney_rivlin(3.0, 0.5, 7.0);
        let t = p.isochoric_terms();
        let (mu1, mu2) = (2.0 * t[0].0, 2.0 * t[1].0);
        assert!((mu1 + mu2 - p.mu()).abs() < 1e-15);
        assert!((mu1 / mu2 - 7.0).abs() < 1e-12);
    }

    #[test]
    fn default_ogden_is_consistent() {
        let p = MaterialParams::ogden_default(2.0e6, 0.45);
        p.validate().unwrap();
    }

    #[test]
    fn parse_round_trip() {
        let p = MaterialParams::parse_kv("# sheet\nmodel=MR\nE=1e6\nnu=0.5\nratio=7\nthickness=1e-3\nrho=1000\n").unwrap();
        assert_eq!(p, MaterialParams::mooney_rivlin(1e6, 0.5, 7.0).with_thickness(1e-3).with_density(1000.0));
        let og = MaterialParams::parse_kv("model=OG\nE=3\nnu=0.5\nmu=1\nalpha=2").unwrap();
        og.validate().unwrap();
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(MaterialParams::parse_kv("model=XX\nE=1\nnu=0.3").is_err());
        assert!(MaterialParams::parse_kv("E=1").is_err());
        assert!(MaterialParams::parse_kv("E=1\nnu=0.7").is_err());
        assert!(MaterialParams::parse_kv("E=1\nnu=0.3\nfoo=2").is_err());
        assert!(MaterialParams::parse_kv("model=OG\nE=3\nnu=0.5\nmu=5\nalpha=2").is_err());
    }
}
