//! BGK collide-and-stream kernel on a D-dimensional grid of spacing `c`.
//!
//! Populations are stored node-major (`node * q + i`) in two buffers.
//! Collision relaxes every node toward the Hermite equilibrium of its own
//! pre-collision moments; streaming pulls each population from the node
//! `x − e_i`. On fixed-equilibrium axes any source outside the grid reads
//! the prescribed equilibrium of that face, so the face behaves like a
//! ghost region held at the boundary state.

use crate::equilibrium::{EquilibriumKernel, MacroState};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::stencil::{Lattice, VelocityModel};

#[derive(Clone, Debug, PartialEq)]
pub enum Boundary {
    Periodic,
    FixedEquilibrium { low: MacroState, high: MacroState },
}

#[derive(Clone, Debug)]
pub struct Grid {
    pub dims: Vec<usize>,
    pub boundaries: Vec<Boundary>,
}

impl Grid {
    pub fn new(dims: Vec<usize>, boundaries: Vec<Boundary>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidInput(format!("grid dims must be positive: {dims:?}")));
        }
        if boundaries.len() != dims.len() {
            return Err(Error::DimensionMismatch {
                expected: dims.len(),
                found: boundaries.len(),
            });
        }
        Ok(Grid { dims, boundaries })
    }

    pub fn periodic(dims: Vec<usize>) -> Result<Self> {
        let b = vec![Boundary::Periodic; dims.len()];
        Self::new(dims, b)
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn node_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Row-major: the last axis varies fastest.
    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.dims).fold(0, |acc, (&x, &n)| acc * n + x)
    }

    pub fn coords(&self, mut node: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &n) in out.iter_mut().zip(&self.dims).rev() {
            *slot = node % n;
            node /= n;
        }
        out
    }
}

/// Σf, Σ v f and Σ |v|² f over a set of nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Totals {
    pub mass: f64,
    pub momentum: Vec<f64>,
    pub energy: f64,
}

/// Density, velocity and temperature of one node's populations.
pub fn macro_fields(f: &[f64], lattice: &Lattice) -> Result<MacroState> {
    let d = lattice.dim;
    let mut rho = 0.0;
    let mut mom = vec![0.0; d];
    let mut e2 = 0.0;
    for (i, &fi) in f.iter().enumerate() {
        let v = lattice.velocity(i);
        rho += fi;
        let mut sq = 0.0;
        for a in 0..d {
            mom[a] += v[a] * fi;
            sq += v[a] * v[a];
        }
        e2 += sq * fi;
    }
    if !rho.is_finite() || !e2.is_finite() {
        return Err(Error::InvalidInput("non-finite populations".into()));
    }
    if rho <= 0.0 {
        return Err(Error::InvalidInput(format!("non-positive density {rho}")));
    }
    let u: Vec<f64> = mom.iter().map(|m| m / rho).collect();
    let u2: f64 = u.iter().map(|x| x * x).sum();
    let theta = 2.0 / d as f64 * (e2 / rho - u2);
    MacroState::new(rho, u, theta)
}

/// `(1 − ω) f + ω f^eq(state)`.
pub fn collide(f: &[f64], state: &MacroState, omega: f64, kernel: &EquilibriumKernel) -> Vec<f64> {
    let mut feq = kernel.equilibrium(state);
    for (e, &fi) in feq.iter_mut().zip(f) {
        *e = (1.0 - omega) * fi + omega * *e;
    }
    feq
}

#[derive(Clone, Debug)]
pub struct PopulationField {
    q: usize,
    current: Vec<f64>,
    next: Vec<f64>,
}

impl PopulationField {
    pub fn new(nodes: usize, q: usize) -> Self {
        PopulationField {
            q,
            current: vec![0.0; nodes * q],
            next: vec![0.0; nodes * q],
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.current
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.current
    }

    pub fn node(&self, node: usize) -> &[f64] {
        &self.current[node * self.q..(node + 1) * self.q]
    }
}

/// Where population `i` at coordinate `x` along one axis streams from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Source {
    Cell(usize),
    LowGhost,
    HighGhost,
}

pub struct Simulation {
    lattice: Lattice,
    kernel: EquilibriumKernel,
    grid: Grid,
    omega: f64,
    field: PopulationField,
    /// `sources[axis][i * n_axis + x]`
    sources: Vec<Vec<Source>>,
    strides: Vec<usize>,
    /// Equilibria of the low/high faces on fixed axes.
    ghosts: Vec<Option<(Vec<f64>, Vec<f64>)>>,
    step: usize,
    execution: Execution,
}

impl Simulation {
    pub fn new(model: &VelocityModel, grid: Grid, omega: f64, execution: Execution) -> Result<Self> {
        if !(omega > 0.0 && omega < 2.0) {
            return Err(Error::InvalidInput(format!("omega = {omega} outside (0, 2)")));
        }
        if grid.dim() != model.dim {
            return Err(Error::DimensionMismatch {
                expected: model.dim,
                found: grid.dim(),
            });
        }
        let lattice = model.lattice();
        let kernel = EquilibriumKernel::new(&lattice);
        let q = lattice.q();
        let mut sources = Vec::with_capacity(grid.dim());
        let mut ghosts = Vec::with_capacity(grid.dim());
        for (a, (&n, b)) in grid.dims.iter().zip(&grid.boundaries).enumerate() {
            let mut table = Vec::with_capacity(q * n);
            for i in 0..q {
                let e = lattice.direction(i)[a] as i64;
                for x in 0..n as i64 {
                    let s = x - e;
                    table.push(match b {
                        Boundary::Periodic => Source::Cell(s.rem_euclid(n as i64) as usize),
                        Boundary::FixedEquilibrium { .. } if s < 0 => Source::LowGhost,
                        Boundary::FixedEquilibrium { .. } if s >= n as i64 => Source::HighGhost,
                        Boundary::FixedEquilibrium { .. } => Source::Cell(s as usize),
                    });
                }
            }
            sources.push(table);
            ghosts.push(match b {
                Boundary::Periodic => None,
                Boundary::FixedEquilibrium { low, high } => {
                    if low.dim() != model.dim || high.dim() != model.dim {
                        return Err(Error::DimensionMismatch {
                            expected: model.dim,
                            found: low.dim().min(high.dim()),
                        });
                    }
                    Some((kernel.equilibrium(low), kernel.equilibrium(high)))
                }
            });
        }
        let mut strides = vec![1; grid.dim()];
        for a in (0..grid.dim().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * grid.dims[a + 1];
        }
        let field = PopulationField::new(grid.node_count(), q);
        Ok(Simulation {
            lattice,
            kernel,
            grid,
            omega,
            field,
            sources,
            strides,
            ghosts,
            step: 0,
            execution,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn kernel(&self) -> &EquilibriumKernel {
        &self.kernel
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn field(&self) -> &PopulationField {
        &self.field
    }

    pub fn field_mut(&mut self) -> &mut PopulationField {
        &mut self.field
    }

    /// Sets every node to the equilibrium of `init(coords)`.
    pub fn initialize(&mut self, init: impl Fn(&[usize]) -> MacroState) -> Result<()> {
        let q = self.lattice.q();
        for node in 0..self.grid.node_count() {
            let coords = self.grid.coords(node);
            let s = init(&coords);
            if s.dim() != self.grid.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.grid.dim(),
                    found: s.dim(),
                });
            }
            self.kernel
                .fill(s.rho, &s.u, s.theta, &mut self.field.current[node * q..(node + 1) * q]);
        }
        self.step = 0;
        Ok(())
    }

    pub fn node_state(&self, node: usize) -> Result<MacroState> {
        macro_fields(self.field.node(node), &self.lattice)
    }

    /// BGK relaxation at every node, in place.
    pub fn collide_all(&mut self) -> Result<()> {
        let q = self.lattice.q();
        let (lattice, kernel, omega, grid, step) = (&self.lattice, &self.kernel, self.omega, &self.grid, self.step);
        self.execution.try_chunks_mut(&mut self.field.current, q, |node, f| {
            let state = macro_fields(f, lattice).map_err(|e| Error::Diverged {
                step,
                coords: grid.coords(node),
                reason: e.to_string(),
            })?;
            let mut feq = [0.0; 128];
            let feq = &mut feq[..q];
            kernel.fill(state.rho, &state.u, state.theta, feq);
            for (fi, &e) in f.iter_mut().zip(feq.iter()) {
                *fi = (1.0 - omega) * *fi + omega * e;
            }
            Ok(())
        })
    }

    /// Pull streaming from the post-collision buffer into the next one,
    /// then swaps buffers.
    pub fn stream(&mut self) {
        let q = self.lattice.q();
        let d = self.grid.dim();
        let (grid, sources, strides, ghosts, current) =
            (&self.grid, &self.sources, &self.strides, &self.ghosts, &self.field.current);
        self.execution.chunks_mut(&mut self.field.next, q, |node, out| {
            let coords = grid.coords(node);
            for (i, slot) in out.iter_mut().enumerate() {
                let mut src = 0;
                let mut ghost = None;
                for a in 0..d {
                    let n = grid.dims[a];
                    match sources[a][i * n + coords[a]] {
                        Source::Cell(s) => src += s * strides[a],
                        Source::LowGhost => {
                            ghost = Some(&ghosts[a].as_ref().expect("fixed axis").0);
                            break;
                        }
                        Source::HighGhost => {
                            ghost = Some(&ghosts[a].as_ref().expect("fixed axis").1);
                            break;
                        }
                    }
                }
                *slot = match ghost {
                    Some(g) => g[i],
                    None => current[src * q + i],
                };
            }
        });
        std::mem::swap(&mut self.field.current, &mut self.field.next);
    }

    /// Collide, then stream.
    pub fn step(&mut self) -> Result<()> {
        self.collide_all()?;
        self.stream();
        self.step += 1;
        Ok(())
    }

    pub fn run(&mut self, steps: usize, mut observe: impl FnMut(&Simulation) -> Result<()>) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
            observe(self)?;
        }
        Ok(())
    }

    /// Totals in fixed node and velocity order.
    pub fn totals(&self) -> Totals {
        let d = self.lattice.dim;
        let q = self.lattice.q();
        let mut t = Totals {
            mass: 0.0,
            momentum: vec![0.0; d],
            energy: 0.0,
        };
        for f in self.field.current.chunks(q) {
            for (i, &fi) in f.iter().enumerate() {
                let v = self.lattice.velocity(i);
                t.mass += fi;
                let mut sq = 0.0;
                for a in 0..d {
                    t.momentum[a] += v[a] * fi;
                    sq += v[a] * v[a];
                }
                t.energy += sq * fi;
            }
        }
        t
    }
}
