//! Shock-tube driver: builds the simulation from a config, runs it, and
//! compares the axial profile against the exact Riemann solution on the
//! star-region plateaus.

use std::fmt;

use crate::config::{InitKind, NodeSelection, SimulationConfig};
use crate::equilibrium::MacroState;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lbm::Simulation;
use crate::riemann::{gamma_for_dimension, solve, PrimitiveState, RiemannSolution};
use crate::snapshot::SnapshotRow;
use crate::stencil::VelocityModel;

/// Minimum distance, in cells, kept between any wave front and either end.
pub const END_MARGIN_CELLS: usize = 50;
/// Fraction of each plateau's width averaged in the comparison.
pub const PLATEAU_CORE: f64 = 0.6;
pub const UNIFORM_DEFAULT_STEPS: usize = 100;

/// Axial primitive state under `p = ρθ/2`.
pub fn axial_primitive(state: &MacroState) -> Result<PrimitiveState> {
    let u = *state.u.last().ok_or(Error::UnsupportedDimension(0))?;
    PrimitiveState::new(state.rho, u, 0.5 * state.rho * state.theta)
}

fn primitive_to_state(p: &PrimitiveState, dim: usize) -> MacroState {
    let mut u = vec![0.0; dim];
    u[dim - 1] = p.velocity;
    MacroState {
        rho: p.rho,
        u,
        theta: p.theta(),
    }
}

/// Exact solution between the configured left and right states.
pub fn reference_solution(config: &SimulationConfig) -> Result<RiemannSolution> {
    let dim = config.dims.len();
    let left = axial_primitive(&config.init.left.resolve(dim)?)?;
    let right = match config.init.kind {
        InitKind::ShockTube => axial_primitive(&config.init.right.resolve(dim)?)?,
        InitKind::Uniform => left,
    };
    solve(left, right, gamma_for_dimension(dim))
}

/// Largest step count keeping every wave front `END_MARGIN_CELLS` cells
/// away from both ends.
pub fn default_steps(config: &SimulationConfig, spacing: f64) -> Result<usize> {
    if config.init.kind == InitKind::Uniform {
        return Ok(UNIFORM_DEFAULT_STEPS);
    }
    let sol = reference_solution(config)?;
    let d = config.diaphragm();
    let room = d.min(config.axial_len() - d);
    let margin = room.saturating_sub(END_MARGIN_CELLS + 1) as f64;
    let speed = sol.max_signal_speed();
    if speed == 0.0 {
        return Ok(UNIFORM_DEFAULT_STEPS);
    }
    let steps = (margin * spacing / speed).floor() as usize;
    if steps == 0 {
        return Err(Error::Config(format!(
            "axis of {} cells leaves no room for the {END_MARGIN_CELLS}-cell margin",
            config.axial_len()
        )));
    }
    Ok(steps)
}

pub struct ShockTube {
    config: SimulationConfig,
    model: VelocityModel,
    sim: Simulation,
    steps: usize,
}

impl ShockTube {
    pub fn new(config: SimulationConfig, execution: Execution) -> Result<Self> {
        config.validate()?;
        let model = config.load_model()?;
        if model.dim != config.dims.len() {
            return Err(Error::Config(format!(
                "model {} is {}-dimensional but dims has {} axes",
                model.name,
                model.dim,
                config.dims.len()
            )));
        }
        let mut sim = Simulation::new(&model, config.grid()?, config.omega, execution)?;
        let dim = model.dim;
        let left = config.init.left.resolve(dim)?;
        let right = config.init.right.resolve(dim)?;
        let diaphragm = config.diaphragm();
        match config.init.kind {
            InitKind::ShockTube => sim.initialize(|x| {
                if x[dim - 1] < diaphragm {
                    left.clone()
                } else {
                    right.clone()
                }
            })?,
            InitKind::Uniform => sim.initialize(|_| left.clone())?,
        }
        let steps = match config.steps {
            Some(s) => s,
            None => default_steps(&config, model.c)?,
        };
        Ok(ShockTube {
            config,
            model,
            sim,
            steps,
        })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    /// Config with `steps` resolved.
    pub fn resolved_config(&self) -> SimulationConfig {
        SimulationConfig {
            steps: Some(self.steps),
            ..self.config.clone()
        }
    }

    pub fn model(&self) -> &VelocityModel {
        &self.model
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn simulation_mut(&mut self) -> &mut Simulation {
        &mut self.sim
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Runs the configured number of steps, passing a snapshot to
    /// `on_snapshot` every `output.every` steps (and always after the last).
    pub fn run(&mut self, mut on_snapshot: impl FnMut(&[SnapshotRow]) -> Result<()>) -> Result<()> {
        let every = self.config.output.every;
        let remaining = self.steps.saturating_sub(self.sim.steps_taken());
        for _ in 0..remaining {
            self.sim.step()?;
            let n = self.sim.steps_taken();
            if n == self.steps || (every > 0 && n % every == 0) {
                on_snapshot(&self.snapshot()?)?;
            }
        }
        Ok(())
    }

    /// Node indices along the central longitudinal line.
    pub fn axis_nodes(&self) -> Vec<usize> {
        let grid = self.sim.grid();
        let dim = grid.dim();
        let mut coords: Vec<usize> = grid.dims.iter().map(|n| n / 2).collect();
        (0..grid.dims[dim - 1])
            .map(|z| {
                coords[dim - 1] = z;
                grid.index(&coords)
            })
            .collect()
    }

    pub fn snapshot(&self) -> Result<Vec<SnapshotRow>> {
        let nodes: Vec<usize> = match self.config.output.nodes {
            NodeSelection::Axis => self.axis_nodes(),
            NodeSelection::All => (0..self.sim.grid().node_count()).collect(),
        };
        let step = self.sim.steps_taken();
        nodes
            .into_iter()
            .map(|n| {
                let coords = self.sim.grid().coords(n);
                Ok(SnapshotRow::new(step, &coords, self.model.c, &self.sim.node_state(n)?))
            })
            .collect()
    }

    pub fn axial_profile(&self) -> Result<Vec<MacroState>> {
        self.axis_nodes().into_iter().map(|n| self.sim.node_state(n)).collect()
    }

    /// `ξ = (x − x₀)/t` of axial cell `z` at the current time.
    fn similarity(&self, z: usize) -> f64 {
        let x0 = self.config.diaphragm() as f64 - 0.5;
        (z as f64 - x0) * self.model.c / self.sim.steps_taken() as f64
    }

    /// Exact solution sampled on the central axis at the current time.
    pub fn reference_rows(&self) -> Result<Vec<SnapshotRow>> {
        let t = self.sim.steps_taken();
        if t == 0 {
            return Err(Error::InvalidInput("reference profile needs t > 0".into()));
        }
        let sol = reference_solution(&self.config)?;
        let dim = self.model.dim;
        Ok(self
            .axis_nodes()
            .into_iter()
            .map(|n| {
                let coords = self.sim.grid().coords(n);
                let state = primitive_to_state(&sol.sample(self.similarity(coords[dim - 1])), dim);
                SnapshotRow::new(t, &coords, self.model.c, &state)
            })
            .collect())
    }

    /// Plateau comparison of density and temperature against the exact
    /// solution. Equal end states reduce to a whole-axis deviation check.
    pub fn compare(&self, tolerance: f64) -> Result<ComparisonReport> {
        let t = self.sim.steps_taken();
        if t == 0 {
            return Err(Error::InvalidInput("comparison needs t > 0".into()));
        }
        let sol = reference_solution(&self.config)?;
        let profile = self.axial_profile()?;
        let n = profile.len();
        let mut entries = Vec::new();
        let uniform = sol.left == sol.right;
        if uniform {
            for (field, exact, get) in [
                ("rho", sol.left.rho, (|s: &MacroState| s.rho) as fn(&MacroState) -> f64),
                ("theta", sol.left.theta(), |s: &MacroState| s.theta),
            ] {
                let worst = profile
                    .iter()
                    .map(get)
                    .max_by(|a, b| (a - exact).abs().total_cmp(&(b - exact).abs()))
                    .unwrap_or(exact);
                entries.push(PlateauEntry::new("whole-axis", field, n, worst, exact, tolerance));
            }
        } else {
            let regions = [
                ("left-star", sol.left_star_plateau(), sol.rho_star_left),
                ("right-star", sol.right_star_plateau(), sol.rho_star_right),
            ];
            for (name, (lo, hi), rho_exact) in regions {
                let w = hi - lo;
                let (a, b) = (lo + 0.5 * (1.0 - PLATEAU_CORE) * w, hi - 0.5 * (1.0 - PLATEAU_CORE) * w);
                let cells: Vec<&MacroState> = (0..n)
                    .filter(|&z| {
                        let xi = self.similarity(z);
                        xi >= a && xi <= b
                    })
                    .map(|z| &profile[z])
                    .collect();
                let count = cells.len();
                let mean = |f: fn(&MacroState) -> f64| {
                    if count == 0 {
                        f64::NAN
                    } else {
                        cells.iter().map(|s| f(s)).sum::<f64>() / count as f64
                    }
                };
                let theta_exact = 2.0 * sol.p_star / rho_exact;
                entries.push(PlateauEntry::new(name, "rho", count, mean(|s| s.rho), rho_exact, tolerance));
                entries.push(PlateauEntry::new(name, "theta", count, mean(|s| s.theta), theta_exact, tolerance));
            }
        }
        let c = self.model.c;
        let d = self.config.diaphragm() as f64 - 0.5;
        let front = sol.max_signal_speed() * t as f64 / c;
        let end_distance = (d - front).min(n as f64 - 1.0 - d - front);
        Ok(ComparisonReport {
            time: t as f64,
            gamma: sol.gamma,
            p_star: sol.p_star,
            u_star: sol.u_star,
            tolerance,
            end_distance_cells: end_distance,
            entries,
        })
    }
}

#[derive(Clone, Debug)]
pub struct PlateauEntry {
    pub region: String,
    pub field: String,
    pub cells: usize,
    pub simulated: f64,
    pub exact: f64,
    pub rel_error: f64,
    pub pass: bool,
}

impl PlateauEntry {
    fn new(region: &str, field: &str, cells: usize, simulated: f64, exact: f64, tolerance: f64) -> Self {
        let rel_error = (simulated - exact) / exact;
        PlateauEntry {
            region: region.into(),
            field: field.into(),
            cells,
            simulated,
            exact,
            rel_error,
            pass: cells > 0 && rel_error.abs() <= tolerance,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub time: f64,
    pub gamma: f64,
    pub p_star: f64,
    pub u_star: f64,
    pub tolerance: f64,
    /// Distance from the fastest wave front to the nearer end, in cells.
    pub end_distance_cells: f64,
    pub entries: Vec<PlateauEntry>,
}

impl ComparisonReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.entries.iter().map(|e| e.rel_error.abs()).fold(0.0, f64::max)
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "t = {} gamma = {:.6} p* = {:.12} u* = {:.12} tolerance {:e}",
            self.time, self.gamma, self.p_star, self.u_star, self.tolerance
        )?;
        writeln!(f, "fastest front is {:.1} cells from the nearer end", self.end_distance_cells)?;
        for e in &self.entries {
            writeln!(
                f,
                "{:<10} {:<5} cells {:>4} sim {:.8} exact {:.8} rel {:+.3e} {}",
                e.region,
                e.field,
                e.cells,
                e.simulated,
                e.exact,
                e.rel_error,
                if e.pass { "ok" } else { "FAIL" }
            )?;
        }
        writeln!(f, "{}", if self.pass() { "PASS" } else { "FAIL" })
    }
}
