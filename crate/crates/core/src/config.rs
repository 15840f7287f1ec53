//! Structured key–value simulation config (TOML).
//!
//! ```toml
//! model = "D3Q95"
//! omega = 1.5
//! dims = [2, 2, 800]
//! # steps = 123            # default: fastest wave stays 50 cells from the ends
//!
//! [boundary]
//! x = "periodic"
//! y = "periodic"
//! z = "fixed"              # faces held at init.left / init.right
//!
//! [init]
//! kind = "shock-tube"      # or "uniform" (uses init.left everywhere)
//! left = { rho = 4.0, theta = 1.0 }
//! right = { rho = 1.0, theta = 1.0 }
//!
//! [output]
//! dir = "shock_tube_out"
//! every = 0                # snapshot interval in steps, 0 = final only
//! nodes = "axis"           # or "all"
//! tolerance = 0.015
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::equilibrium::MacroState;
use crate::error::{Error, Result};
use crate::lbm::{Boundary, Grid};
use crate::stencil::VelocityModel;

pub const AXIS_NAMES: [&str; 4] = ["x", "y", "z", "w"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub rho: f64,
    #[serde(default = "one")]
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

impl StateSpec {
    pub fn at_rest(rho: f64) -> Self {
        StateSpec {
            rho,
            theta: 1.0,
            u: None,
        }
    }

    pub fn resolve(&self, dim: usize) -> Result<MacroState> {
        let u = self.u.clone().unwrap_or_else(|| vec![0.0; dim]);
        if u.len() != dim {
            return Err(Error::Config(format!("state velocity has {} components, grid has {dim}", u.len())));
        }
        MacroState::new(self.rho, u, self.theta).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    Periodic,
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundarySpec {
    Kind(BoundaryKind),
    Detailed {
        kind: BoundaryKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        low: Option<StateSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        high: Option<StateSpec>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    ShockTube,
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    #[serde(default = "default_init_kind")]
    pub kind: InitKind,
    #[serde(default = "default_left")]
    pub left: StateSpec,
    #[serde(default = "default_right")]
    pub right: StateSpec,
    /// Number of axial cells in the left state; default half the axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diaphragm: Option<usize>,
}

fn default_init_kind() -> InitKind {
    InitKind::ShockTube
}
fn default_left() -> StateSpec {
    StateSpec::at_rest(4.0)
}
fn default_right() -> StateSpec {
    StateSpec::at_rest(1.0)
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec {
            kind: default_init_kind(),
            left: default_left(),
            right: default_right(),
            diaphragm: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeSelection {
    Axis,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default)]
    pub every: usize,
    #[serde(default = "default_nodes")]
    pub nodes: NodeSelection,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_dir() -> String {
    "shock_tube_out".into()
}
fn default_nodes() -> NodeSelection {
    NodeSelection::Axis
}
fn default_tolerance() -> f64 {
    0.015
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_dir(),
            every: 0,
            nodes: default_nodes(),
            tolerance: default_tolerance(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    #[serde(default)]
    pub boundary: BTreeMap<String, BoundarySpec>,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_model() -> String {
    "D3Q95".into()
}
fn default_omega() -> f64 {
    1.5
}
fn default_dims() -> Vec<usize> {
    vec![2, 2, 800]
}

impl Default for SimulationConfig {
    /// The 4:1 shock tube with its cross-section reduced to 2×2.
    fn default() -> Self {
        SimulationConfig {
            model: default_model(),
            omega: default_omega(),
            steps: None,
            dims: default_dims(),
            boundary: BTreeMap::new(),
            init: InitSpec::default(),
            output: OutputSpec::default(),
        }
    }
}

impl SimulationConfig {
    /// The full 11×11×800 tube.
    pub fn full_cross_section() -> Self {
        SimulationConfig {
            dims: vec![11, 11, 800],
            ..Self::default()
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load_model(&self) -> Result<VelocityModel> {
        if let Some(m) = VelocityModel::builtin(&self.model) {
            return Ok(m);
        }
        let text = std::fs::read_to_string(&self.model)
            .map_err(|e| Error::Config(format!("model `{}`: {e}", self.model)))?;
        text.parse()
    }

    pub fn axial_len(&self) -> usize {
        self.dims.last().copied().unwrap_or(0)
    }

    pub fn diaphragm(&self) -> usize {
        self.init.diaphragm.unwrap_or(self.axial_len() / 2)
    }

    /// Boundary for each axis; by default every axis is periodic except
    /// the axial one of a shock tube, which is held at the end states.
    pub fn boundaries(&self) -> Result<Vec<Boundary>> {
        let dim = self.dims.len();
        for key in self.boundary.keys() {
            if !AXIS_NAMES[..dim.min(AXIS_NAMES.len())].contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown boundary axis `{key}`")));
            }
        }
        (0..dim)
            .map(|a| {
                let axial_default = a + 1 == dim && self.init.kind == InitKind::ShockTube;
                let spec = self.boundary.get(AXIS_NAMES[a]);
                let (kind, low, high) = match spec {
                    None if axial_default => (BoundaryKind::Fixed, None, None),
                    None => (BoundaryKind::Periodic, None, None),
                    Some(BoundarySpec::Kind(k)) => (*k, None, None),
                    Some(BoundarySpec::Detailed { kind, low, high }) => (*kind, low.as_ref(), high.as_ref()),
                };
                Ok(match kind {
                    BoundaryKind::Periodic => Boundary::Periodic,
                    BoundaryKind::Fixed => Boundary::FixedEquilibrium {
                        low: low.unwrap_or(&self.init.left).resolve(dim)?,
                        high: high.unwrap_or(&self.init.right).resolve(dim)?,
                    },
                })
            })
            .collect()
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dims.clone(), self.boundaries()?).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(Error::Config(format!("omega = {} outside (0, 2)", self.omega)));
        }
        if self.dims.is_empty() || self.dims.len() > 3 || self.dims.contains(&0) {
            return Err(Error::Config(format!("dims must be 1 to 3 positive counts, got {:?}", self.dims)));
        }
        if self.steps == Some(0) {
            return Err(Error::Config("steps must be positive".into()));
        }
        if self.init.kind == InitKind::ShockTube {
            let d = self.diaphragm();
            if d == 0 || d >= self.axial_len() {
                return Err(Error::Config(format!("diaphragm {d} outside the axial range")));
            }
        }
        if !(self.output.tolerance > 0.0) {
            return Err(Error::Config("output.tolerance must be positive".into()));
        }
        self.boundaries()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_example_parses() {
        let text = r#"
model = "D3Q95"
omega = 1.5
dims = [2, 2, 800]

[boundary]
x = "periodic"
y = "periodic"
z = "fixed"

[init]
kind = "shock-tube"
left = { rho = 4.0, theta = 1.0 }
right = { rho = 1.0, theta = 1.0 }

[output]
dir = "out"
every = 10
nodes = "all"
"#;
        let cfg = SimulationConfig::from_toml_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.output.every, 10);
        assert_eq!(cfg.output.nodes, NodeSelection::All);
        let b = cfg.boundaries().unwrap();
        assert_eq!(b[0], Boundary::Periodic);
        match &b[2] {
            Boundary::FixedEquilibrium { low, high } => {
                assert_eq!(low.rho, 4.0);
                assert_eq!(high.rho, 1.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn defaults_are_the_reduced_tube() {
        let cfg = SimulationConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, SimulationConfig::default());
        assert_eq!(cfg.diaphragm(), 400);
        assert!(matches!(cfg.boundaries().unwrap()[2], Boundary::FixedEquilibrium { .. }));
        assert_eq!(SimulationConfig::full_cross_section().dims, vec![11, 11, 800]);
    }

    #[test]
    fn detailed_boundary_overrides_states() {
        let cfg = SimulationConfig::from_toml_str(
            "dims = [4, 10]\n[boundary.y]\nkind = \"fixed\"\nlow = { rho = 2.0 }\nhigh = { rho = 0.5, theta = 1.2 }\n",
        )
        .unwrap();
        match &cfg.boundaries().unwrap()[1] {
            Boundary::FixedEquilibrium { low, high } => {
                assert_eq!((low.rho, high.rho, high.theta), (2.0, 0.5, 1.2));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(SimulationConfig::from_toml_str("omga = 1.0").is_err());
        let bad = SimulationConfig { omega: 2.5, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SimulationConfig::from_toml_str("[boundary]\nq = \"periodic\"").unwrap();
        assert!(bad.validate().is_err());
        let bad = SimulationConfig::from_toml_str("[init]\ndiaphragm = 800").unwrap();
        assert!(bad.validate().is_err());
        let bad = SimulationConfig::from_toml_str("[init]\nleft = { rho = 1.0, u = [0.0] }").unwrap();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = SimulationConfig::full_cross_section();
        cfg.steps = Some(7);
        cfg.boundary.insert("x".into(), BoundarySpec::Kind(BoundaryKind::Periodic));
        cfg.init.left.u = Some(vec![0.0, 0.0, 0.1]);
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(SimulationConfig::from_toml_str(&text).unwrap(), cfg);
    }
}
