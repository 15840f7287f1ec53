//! Discrete velocity models built from hypercubic symmetry orbits.
//!
//! A model is a lattice scale `c` and a list of groups; each group is an
//! integer representative direction, its orbit under all sign flips and
//! coordinate permutations, and one weight shared by the whole orbit.
//! Every discrete velocity is `c` times an integer vector, so a grid with
//! spacing `c` streams by whole cells.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::moment_conditions::{generate_conditions, ConditionSet, MomentCondition, MultiIndex};

/// Published two-dimensional 33-velocity model (six significant digits).
pub const D2Q33_TABLE: &str = "\
D 2 c 0.819381
0 0 0.161987
1 0 0.143204
1 1 0.0338840
2 0 0.00556112
2 2 8.44799e-5
3 0 0.00113254
2 1 0.0128169
4 4 3.45552e-6
";

/// Published three-dimensional 95-velocity model (six significant digits).
pub const D3Q95_TABLE: &str = "\
D 3 c 0.421803
0 0 0 0.206847
2 0 0 0.00442257
2 2 0 0.0333341
2 2 2 0.0128902
3 0 0 0.0287920
3 3 0 0.00264319
3 3 3 0.000927908
2 2 5 0.00106078
4 4 0 0.000804376
5 0 0 0.00274697
";

/// Absolute per-condition tolerance for the published tables.
pub const PUBLISHED_TOLERANCE: f64 = 5e-5;

/// Distinct permutations of `v`, in lexicographic order.
fn distinct_permutations(v: &[i32]) -> Vec<Vec<i32>> {
    let mut cur: Vec<i32> = v.to_vec();
    cur.sort_unstable();
    let mut out = vec![cur.clone()];
    // next_permutation
    loop {
        let n = cur.len();
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
        out.push(cur.clone());
    }
}

/// All distinct images of `representative` under sign flips and coordinate
/// permutations, sorted.
pub fn expand_orbit(representative: &[i32]) -> Vec<Vec<i32>> {
    let mut set = BTreeSet::new();
    let d = representative.len();
    for p in distinct_permutations(representative) {
        for mask in 0u32..(1 << d) {
            let e: Vec<i32> = p
                .iter()
                .enumerate()
                .map(|(k, &x)| if mask >> k & 1 == 1 { -x } else { x })
                .collect();
            set.insert(e);
        }
    }
    set.into_iter().collect()
}

/// `Σ_{e ∈ orbit} (c e)^a`, summed per axis over sign pairs so that odd
/// exponents cancel exactly.
pub fn orbit_moment(representative: &[i32], c: f64, a: &MultiIndex) -> f64 {
    distinct_permutations(representative)
        .iter()
        .map(|p| {
            p.iter()
                .zip(a.exponents())
                .map(|(&x, &n)| {
                    let v = c * x as f64;
                    if x == 0 {
                        v.powi(n as i32)
                    } else {
                        v.powi(n as i32) + (-v).powi(n as i32)
                    }
                })
                .product::<f64>()
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct VelocityGroup {
    pub representative: Vec<i32>,
    pub weight: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VelocityModel {
    pub name: String,
    pub dim: usize,
    pub c: f64,
    pub groups: Vec<VelocityGroup>,
}

fn validate_directions(dim: usize, directions: &[Vec<i32>]) -> Result<()> {
    if dim == 0 || dim > crate::moment_conditions::MAX_DIMENSION {
        return Err(Error::UnsupportedDimension(dim));
    }
    let mut seen = BTreeSet::new();
    for r in directions {
        if r.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.len(),
            });
        }
        if r.iter().any(|&x| x < 0) {
            return Err(Error::InvalidInput(format!(
                "representative {r:?} has negative components"
            )));
        }
        let mut canon = r.clone();
        canon.sort_unstable();
        if !seen.insert(canon) {
            return Err(Error::InvalidInput(format!(
                "representative {r:?} repeats an earlier orbit"
            )));
        }
    }
    Ok(())
}

impl VelocityModel {
    pub fn new(dim: usize, c: f64, groups: Vec<(Vec<i32>, f64)>) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidInput(format!("lattice scale c = {c} must be positive")));
        }
        let dirs: Vec<Vec<i32>> = groups.iter().map(|(r, _)| r.clone()).collect();
        validate_directions(dim, &dirs)?;
        let groups: Vec<VelocityGroup> = groups
            .into_iter()
            .map(|(representative, weight)| VelocityGroup {
                multiplicity: expand_orbit(&representative).len(),
                representative,
                weight,
            })
            .collect();
        let q: usize = groups.iter().map(|g| g.multiplicity).sum();
        Ok(VelocityModel {
            name: format!("D{dim}Q{q}"),
            dim,
            c,
            groups,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn velocity_count(&self) -> usize {
        self.groups.iter().map(|g| g.multiplicity).sum()
    }

    pub fn directions(&self) -> Vec<Vec<i32>> {
        self.groups.iter().map(|g| g.representative.clone()).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.weight).collect()
    }

    /// Groups whose weight is negative.
    pub fn negative_weight_groups(&self) -> Vec<usize> {
        self.groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.weight < 0.0)
            .map(|(k, _)| k)
            .collect()
    }

    /// Expands every group into its individual velocities.
    pub fn lattice(&self) -> Lattice {
        let mut lat = Lattice {
            dim: self.dim,
            c: self.c,
            directions: Vec::new(),
            velocities: Vec::new(),
            weights: Vec::new(),
            group_of: Vec::new(),
        };
        for (k, g) in self.groups.iter().enumerate() {
            for e in expand_orbit(&g.representative) {
                lat.velocities.extend(e.iter().map(|&x| self.c * x as f64));
                lat.directions.extend(e);
                lat.weights.push(g.weight);
                lat.group_of.push(k);
            }
        }
        lat
    }

    /// Published table for `D2Q33`.
    pub fn d2q33_table() -> Self {
        D2Q33_TABLE.parse::<Self>().expect("built-in table parses").with_name("D2Q33-table")
    }

    /// Published table for `D3Q95`.
    pub fn d3q95_table() -> Self {
        D3Q95_TABLE.parse::<Self>().expect("built-in table parses").with_name("D3Q95-table")
    }

    /// `D2Q33` with `c` and weights re-solved to machine precision from the
    /// published directions.
    pub fn d2q33() -> Self {
        static CELL: OnceLock<VelocityModel> = OnceLock::new();
        CELL.get_or_init(|| {
            Self::d2q33_table()
                .refine(4)
                .expect("published D2Q33 directions are solvable")
                .with_name("D2Q33")
        })
        .clone()
    }

    /// `D3Q95` with `c` and weights re-solved to machine precision.
    pub fn d3q95() -> Self {
        static CELL: OnceLock<VelocityModel> = OnceLock::new();
        CELL.get_or_init(|| {
            Self::d3q95_table()
                .refine(4)
                .expect("published D3Q95 directions are solvable")
                .with_name("D3Q95")
        })
        .clone()
    }

    /// Looks up a built-in model by name (case-insensitive).
    pub fn builtin(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "D2Q33" => Some(Self::d2q33()),
            "D3Q95" => Some(Self::d3q95()),
            "D2Q33-TABLE" => Some(Self::d2q33_table()),
            "D3Q95-TABLE" => Some(Self::d3q95_table()),
            _ => None,
        }
    }

    pub const BUILTIN_NAMES: [&'static str; 4] = ["D2Q33", "D3Q95", "D2Q33-table", "D3Q95-table"];

    /// Re-solves `c` and the weights for this model's directions, searching a
    /// narrow bracket around the current `c`.
    pub fn refine(&self, max_order: u32) -> Result<Self> {
        let conds = generate_conditions(self.dim, max_order)?;
        let width = 1e-3 * self.c.max(1e-3);
        let opts = SolveOptions {
            grid_points: 41,
            ..SolveOptions::default()
        };
        let sol = solve_model(&self.directions(), &conds, (self.c - width, self.c + width), &opts)?;
        Ok(sol.model)
    }

    /// Model file text: `D <dim> c <value>` then `rep_1 … rep_D weight`.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for VelocityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "D {} c {:.16e}", self.dim, self.c)?;
        for g in &self.groups {
            for x in &g.representative {
                write!(f, "{x} ")?;
            }
            writeln!(f, "{:.16e}", g.weight)?;
        }
        Ok(())
    }
}

impl FromStr for VelocityModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            message: "empty model file".into(),
        })?;
        let perr = |line: usize, message: String| Error::Parse { line, message };
        let toks: Vec<&str> = header.split_whitespace().collect();
        let (dim, c) = match toks.as_slice() {
            ["D", d, "c", c] => (
                d.parse::<usize>().map_err(|e| perr(hl, e.to_string()))?,
                c.parse::<f64>().map_err(|e| perr(hl, e.to_string()))?,
            ),
            _ => return Err(perr(hl, "expected header `D <dim> c <value>`".into())),
        };
        let mut groups = Vec::new();
        for (ln, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != dim + 1 {
                return Err(perr(ln, format!("expected {} fields, found {}", dim + 1, toks.len())));
            }
            let rep = toks[..dim]
                .iter()
                .map(|t| t.parse::<i32>().map_err(|e| perr(ln, e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            let w = toks[dim].parse::<f64>().map_err(|e| perr(ln, e.to_string()))?;
            groups.push((rep, w));
        }
        VelocityModel::new(dim, c, groups)
    }
}

/// Parses a directions file: one integer vector per line, `#` comments.
pub fn parse_directions(s: &str) -> Result<Vec<Vec<i32>>> {
    let mut out = Vec::new();
    for (k, line) in s.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v = line
            .split_whitespace()
            .map(|t| {
                t.parse::<i32>().map_err(|e| Error::Parse {
                    line: k + 1,
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(v);
    }
    Ok(out)
}

/// Fully expanded velocity set, flattened row-major (`q × dim`).
#[derive(Clone, Debug)]
pub struct Lattice {
    pub dim: usize,
    pub c: f64,
    directions: Vec<i32>,
    velocities: Vec<f64>,
    weights: Vec<f64>,
    group_of: Vec<usize>,
}

impl Lattice {
    pub fn q(&self) -> usize {
        self.weights.len()
    }

    pub fn direction(&self, i: usize) -> &[i32] {
        &self.directions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.velocities[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn group_of(&self, i: usize) -> usize {
        self.group_of[i]
    }

    /// Largest absolute integer displacement along any axis.
    pub fn max_offset(&self) -> i32 {
        self.directions.iter().map(|x| x.abs()).max().unwrap_or(0)
    }

    /// `Σ_i g_i v_i^a` for arbitrary per-velocity values `g`.
    pub fn moment(&self, g: &[f64], a: &MultiIndex) -> f64 {
        (0..self.q()).map(|i| g[i] * a.monomial(self.velocity(i))).sum()
    }
}

/// `Σ_i w_i (c e_i)^a − rhs` over the expanded model.
pub fn condition_residual(model: &VelocityModel, cond: &MomentCondition) -> Result<f64> {
    let a = &cond.representative;
    if a.dim() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            found: a.dim(),
        });
    }
    let sum: f64 = model
        .groups
        .iter()
        .map(|g| g.weight * orbit_moment(&g.representative, model.c, a))
        .sum();
    Ok(sum - cond.rhs)
}

#[derive(Clone, Debug)]
pub struct ResidualEntry {
    pub representative: MultiIndex,
    pub rhs: f64,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub model: String,
    pub max_order: u32,
    pub tolerance: f64,
    pub entries: Vec<ResidualEntry>,
    pub max_abs_residual: f64,
    pub negative_weight_groups: Vec<usize>,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "model {} order {} tolerance {:e}",
            self.model, self.max_order, self.tolerance
        )?;
        for e in &self.entries {
            writeln!(
                f,
                "{} : rhs {:.16e} residual {:+.6e} {}",
                e.representative,
                e.rhs,
                e.residual,
                if e.pass { "ok" } else { "FAIL" }
            )?;
        }
        if !self.negative_weight_groups.is_empty() {
            writeln!(f, "negative weights in groups {:?}", self.negative_weight_groups)?;
        }
        writeln!(f, "max |residual| {:.6e}", self.max_abs_residual)?;
        writeln!(f, "{}", if self.pass() { "PASS" } else { "FAIL" })
    }
}

pub fn verify_model(model: &VelocityModel, max_order: u32, tolerance: f64) -> Result<VerificationReport> {
    let conds = generate_conditions(model.dim, max_order)?;
    let mut entries = Vec::with_capacity(conds.len());
    let mut max_abs: f64 = 0.0;
    for cond in conds.iter() {
        let residual = condition_residual(model, cond)?;
        max_abs = max_abs.max(residual.abs());
        entries.push(ResidualEntry {
            representative: cond.representative.clone(),
            rhs: cond.rhs,
            residual,
            pass: residual.abs() <= tolerance,
        });
    }
    Ok(VerificationReport {
        model: model.name.clone(),
        max_order,
        tolerance,
        entries,
        max_abs_residual: max_abs,
        negative_weight_groups: model.negative_weight_groups(),
    })
}

#[derive(Clone, Debug)]
pub struct WeightSolution {
    pub weights: Vec<f64>,
    pub residual_norm: f64,
    pub negative_weights: Vec<usize>,
}

/// Relative singular-value cutoff for declaring the weight system rank deficient.
const RANK_TOLERANCE: f64 = 1e-13;

fn moment_matrix(directions: &[Vec<i32>], c: f64, conditions: &ConditionSet) -> DMatrix<f64> {
    DMatrix::from_fn(conditions.len(), directions.len(), |r, k| {
        orbit_moment(&directions[k], c, &conditions.conditions[r].representative)
    })
}

/// Least-squares weights for fixed `c`.
pub fn solve_weights(directions: &[Vec<i32>], c: f64, conditions: &ConditionSet) -> Result<WeightSolution> {
    if !(c > 0.0) {
        return Err(Error::InvalidInput(format!("c = {c} must be positive")));
    }
    validate_directions(conditions.dim, directions)?;
    if directions.is_empty() {
        return Err(Error::InvalidInput("no directions".into()));
    }
    let a = moment_matrix(directions, c, conditions);
    let b = DVector::from_iterator(conditions.len(), conditions.iter().map(|cd| cd.rhs));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_TOLERANCE * smax)
        .count();
    if rank < directions.len() || smax == 0.0 {
        return Err(Error::RankDeficient {
            rank,
            unknowns: directions.len(),
            smallest: smin,
        });
    }
    let w = svd
        .solve(&b, RANK_TOLERANCE * smax)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let residual_norm = (&a * &w - &b).norm();
    let weights: Vec<f64> = w.iter().copied().collect();
    let negative_weights = weights
        .iter()
        .enumerate()
        .filter(|(_, &x)| x < 0.0)
        .map(|(k, _)| k)
        .collect();
    Ok(WeightSolution {
        weights,
        residual_norm,
        negative_weights,
    })
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub grid_points: usize,
    pub residual_tolerance: f64,
    pub bracket_width: f64,
    pub execution: Execution,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            grid_points: 2000,
            residual_tolerance: 1e-10,
            bracket_width: 1e-12,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModelSolution {
    pub model: VelocityModel,
    pub residual_norm: f64,
    pub negative_weights: Vec<usize>,
}

fn residual_at(directions: &[Vec<i32>], conditions: &ConditionSet, c: f64) -> f64 {
    solve_weights(directions, c, conditions)
        .map(|s| s.residual_norm)
        .unwrap_or(f64::INFINITY)
}

/// Golden-section minimisation of `f` on `[lo, hi]`.
fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= width {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Newton iterations on the square system `A(c) w = b` in `(w, c)`,
/// started from the least-squares weights at `c`. Returns the iterate
/// `(c, w, |A(c) w − b|)` with the smallest residual seen.
fn newton_polish(directions: &[Vec<i32>], conditions: &ConditionSet, c0: f64) -> Result<(f64, Vec<f64>, f64)> {
    let b = DVector::from_iterator(conditions.len(), conditions.iter().map(|cd| cd.rhs));
    let sol = solve_weights(directions, c0, conditions)?;
    let mut c = c0;
    let mut w = DVector::from_vec(sol.weights);
    let mut best = (c, w.clone(), sol.residual_norm);
    let k = directions.len();
    for _ in 0..8 {
        let a = moment_matrix(directions, c, conditions);
        let resid = &a * &w - &b;
        let norm = resid.norm();
        if norm < best.2 {
            best = (c, w.clone(), norm);
        }
        // every entry of row r is homogeneous of degree |a_r| in c
        let dc = DVector::from_fn(conditions.len(), |r, _| {
            conditions.conditions[r].representative.order() as f64 / c * a.row(r).dot(&w.transpose())
        });
        let mut jac = DMatrix::zeros(conditions.len(), k + 1);
        jac.view_mut((0, 0), (conditions.len(), k)).copy_from(&a);
        jac.set_column(k, &dc);
        let Some(step) = jac.lu().solve(&resid) else {
            break;
        };
        w -= step.rows(0, k);
        c -= step[k];
        if !(c > 0.0) || step.norm() == 0.0 {
            break;
        }
    }
    Ok((best.0, best.1.iter().copied().collect(), best.2))
}

/// Solves for `c` and the weights of a square system (one unknown weight
/// per group plus `c`).
///
/// The least-squares residual of the linear weight problem is scanned over
/// a uniform grid in `c`; local minima are refined by golden section in
/// ascending order of their grid residual and the first one that reaches
/// `residual_tolerance`, then polished by Newton iteration on `(w, c)`,
/// is returned.
pub fn solve_model(
    directions: &[Vec<i32>],
    conditions: &ConditionSet,
    c_interval: (f64, f64),
    opts: &SolveOptions,
) -> Result<ModelSolution> {
    validate_directions(conditions.dim, directions)?;
    if directions.len() + 1 != conditions.len() {
        return Err(Error::NotSquare {
            unknowns: directions.len() + 1,
            equations: conditions.len(),
        });
    }
    let (lo, hi) = c_interval;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidInput(format!("invalid c interval [{lo}, {hi}]")));
    }
    let n = opts.grid_points.max(3);
    let grid: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    let res = opts.execution.map(&grid, |&c| residual_at(directions, conditions, c));

    let mut minima: Vec<usize> = (0..n)
        .filter(|&k| {
            let left = if k == 0 { f64::INFINITY } else { res[k - 1] };
            let right = if k + 1 == n { f64::INFINITY } else { res[k + 1] };
            res[k].is_finite() && res[k] <= left && res[k] <= right
        })
        .collect();
    minima.sort_by(|&a, &b| res[a].total_cmp(&res[b]).then(a.cmp(&b)));

    let mut best = (f64::NAN, f64::INFINITY);
    for k in minima {
        let a = grid[k.saturating_sub(1)];
        let b = grid[(k + 1).min(n - 1)];
        let (c, r) = golden_section(|c| residual_at(directions, conditions, c), a, b, opts.bracket_width);
        let (c, r) = if res[k] < r { (grid[k], res[k]) } else { (c, r) };
        if r < best.1 {
            best = (c, r);
        }
        if r <= opts.residual_tolerance {
            let (c, weights, residual_norm) = newton_polish(directions, conditions, c)?;
            let model = VelocityModel::new(
                conditions.dim,
                c,
                directions.iter().cloned().zip(weights.iter().copied()).collect(),
            )?;
            let negative_weights = model.negative_weight_groups();
            return Ok(ModelSolution {
                model,
                residual_norm,
                negative_weights,
            });
        }
    }
    Err(Error::NoSolution {
        lo,
        hi,
        tolerance: opts.residual_tolerance,
        best_c: best.0,
        best_residual: best.1,
    })
}
