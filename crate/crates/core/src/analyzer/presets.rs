use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::Scenario;
use crate::lattice::Subspace;

/// The named boundary conditions. All use `D = I` and `γ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Preset {
    /// `Y = {0}` at both ends.
    Dirichlet,
    /// `Y = W`, `S = 0`.
    Neumann,
    /// `Y = W`, `S = ρ·I`.
    Robin { rho: f64 },
    /// `Y = span{1}`, `S = 0`: continuity plus Kirchhoff flux balance.
    Kirchhoff,
    /// `Y = span{1}⊥`, `S = 0`.
    AntiKirchhoff,
    /// `Y_left = {0}`, `Y_right = W`.
    MixedDn,
    /// `Y = W`, `S = 0`; meant to be overridden field by field.
    Custom,
}

impl Preset {
    pub const NAMES: [&'static str; 7] = [
        "dirichlet",
        "neumann",
        "robin",
        "kirchhoff",
        "anti_kirchhoff",
        "mixed_dn",
        "custom",
    ];

    /// Parses a name; `rho` is only used (and defaults to 1) for Robin.
    pub fn parse(name: &str, rho: Option<f64>) -> Result<Self> {
        Ok(match name.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "dirichlet" => Preset::Dirichlet,
            "neumann" => Preset::Neumann,
            "robin" => Preset::Robin {
                rho: rho.unwrap_or(1.0),
            },
            "kirchhoff" => Preset::Kirchhoff,
            "anti_kirchhoff" | "antikirchhoff" => Preset::AntiKirchhoff,
            "mixed_dn" | "mixed" => Preset::MixedDn,
            "custom" => Preset::Custom,
            other => return Err(Error::UnknownPreset(other.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Dirichlet => "dirichlet",
            Preset::Neumann => "neumann",
            Preset::Robin { .. } => "robin",
            Preset::Kirchhoff => "kirchhoff",
            Preset::AntiKirchhoff => "anti_kirchhoff",
            Preset::MixedDn => "mixed_dn",
            Preset::Custom => "custom",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Preset::Dirichlet => "Y = {0} at both ends",
            Preset::Neumann => "Y = W, S = 0 (decoupled Neumann)",
            Preset::Robin { .. } => "Y = W, S = rho*I (decoupled Robin)",
            Preset::Kirchhoff => "Y = span{1}, S = 0 (continuity + Kirchhoff)",
            Preset::AntiKirchhoff => "Y = span{1}^perp, S = 0",
            Preset::MixedDn => "Y_left = {0}, Y_right = W",
            Preset::Custom => "Y = W, S = 0; override any field",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Robin { rho } => write!(f, "robin(rho={rho})"),
            p => f.write_str(p.name()),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    /// Accepts `name` or `robin:<rho>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some((name, rho)) => {
                let rho = rho
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::UnknownPreset(s.to_string()))?;
                Preset::parse(name, Some(rho))
            }
            None => Preset::parse(s, None),
        }
    }
}

pub fn preset(p: &Preset, m: usize) -> Result<Scenario> {
    if m == 0 {
        return Err(Error::InvalidScenario("m must be at least 1".into()));
    }
    let full = Subspace::full(m);
    let zero = Subspace::zero(m);
    let sc = match *p {
        Preset::Dirichlet => Scenario::new("dirichlet", m, zero.clone(), zero),
        Preset::Neumann => Scenario::new("neumann", m, full.clone(), full),
        Preset::Robin { rho } => {
            if !rho.is_finite() {
                return Err(Error::InvalidScenario("rho must be finite".into()));
            }
            Scenario::new(format!("robin({rho})"), m, full.clone(), full)
                .with_boundary_operator(DMatrix::identity(m, m) * rho)
        }
        Preset::Kirchhoff => {
            let y = Subspace::constants(m);
            Scenario::new("kirchhoff", m, y.clone(), y)
        }
        Preset::AntiKirchhoff => {
            let y = Subspace::constants(m).orthogonal_complement();
            Scenario::new("anti_kirchhoff", m, y.clone(), y)
        }
        Preset::MixedDn => Scenario::new("mixed_dn", m, zero, full),
        Preset::Custom => Scenario::new("custom", m, full.clone(), full),
    };
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kirchhoff_projection_is_averaging() {
        let sc = preset(&Preset::Kirchhoff, 2).unwrap();
        let p = sc.y_left.projection();
        assert!(p.iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn dirichlet_projection_vanishes() {
        let sc = preset(&Preset::Dirichlet, 3).unwrap();
        assert_eq!(sc.y_left.projection().amax(), 0.0);
        assert!(sc.y_right.is_zero());
    }

    #[test]
    fn robin_scalar_boundary_term() {
        let sc = preset(&Preset::Robin { rho: 1.0 }, 1).unwrap();
        assert_eq!(sc.s_left[(0, 0)], 1.0);
        assert!(sc.y_left.is_full());
    }

    #[test]
    fn anti_kirchhoff_is_complement() {
        let sc = preset(&Preset::AntiKirchhoff, 3).unwrap();
        assert_eq!(sc.y_left.dim(), 2);
        let p = sc.y_left.projection();
        assert!((p[(0, 0)] - 2.0 / 3.0).abs() < 1e-14);
        assert!((p[(0, 1)] + 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn parses_names() {
        assert_eq!("robin:2.5".parse::<Preset>().unwrap(), Preset::Robin { rho: 2.5 });
        assert_eq!("Anti-Kirchhoff".parse::<Preset>().unwrap(), Preset::AntiKirchhoff);
        assert!(matches!("dihedral".parse::<Preset>(), Err(Error::UnknownPreset(_))));
        assert!(preset(&Preset::Neumann, 0).is_err());
    }
}
