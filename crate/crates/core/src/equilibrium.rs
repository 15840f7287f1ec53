//! Degree-4 Hermite equilibrium on a fixed discrete velocity set.
//!
//! The Maxwell–Boltzmann distribution `ρ (πθ)^{-D/2} exp(-|v-u|²/θ)` is
//! projected onto Hermite polynomials (orthogonal under `exp(-v²)`) up to
//! total degree 4, giving `f^eq(v) ≈ ω(v) P(v)` with `ω` the unit-mass
//! Gaussian. On a velocity set whose weights integrate `ω` exactly up to
//! degree 8, `f_i^eq = w_i P(v_i)` reproduces every moment of order ≤ 4.
//! Temperature enters only through the coefficients of `P`; the abscissae
//! stay at the reference scaling.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::moment_conditions::{normalized_gaussian_moment, MultiIndex};
use crate::stencil::{Lattice, VelocityModel};

pub const EXPANSION_DEGREE: u32 = 4;

/// Density, velocity and dimensionless temperature at a node.
#[derive(Clone, Debug, PartialEq)]
pub struct MacroState {
    pub rho: f64,
    pub u: Vec<f64>,
    pub theta: f64,
}

impl MacroState {
    pub fn new(rho: f64, u: Vec<f64>, theta: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidInput(format!("density must be positive, got {rho}")));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidInput(format!("temperature must be positive, got {theta}")));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite velocity {u:?}")));
        }
        Ok(MacroState { rho, u, theta })
    }

    /// `(ρ, 0, 1)`.
    pub fn at_rest(rho: f64, dim: usize) -> Result<Self> {
        Self::new(rho, vec![0.0; dim], 1.0)
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `E[X^n]` for `X ~ N(mean, var)`.
fn normal_raw_moment(n: u32, mean: f64, var: f64) -> f64 {
    (0..=n / 2)
        .map(|k| {
            let binom = factorial(n) / (factorial(2 * k) * factorial(n - 2 * k));
            let dfact: f64 = (1..=k).map(|j| (2 * j - 1) as f64).product();
            binom * mean.powi((n - 2 * k) as i32) * var.powi(k as i32) * dfact
        })
        .sum()
}

/// Maxwell–Boltzmann moment `∫ v^a f^eq dv` for `|a| ≤ 4`.
///
/// Per axis the distribution is normal with mean `u_α` and variance `θ/2`,
/// so at `(1, 0, 1)` the result equals the normalized Gaussian moment.
pub fn target_moment(a: &MultiIndex, state: &MacroState) -> Result<f64> {
    if a.order() > EXPANSION_DEGREE {
        return Err(Error::OrderTooHigh {
            order: a.order(),
            max: EXPANSION_DEGREE,
        });
    }
    if a.dim() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            found: a.dim(),
        });
    }
    let var = 0.5 * state.theta;
    Ok(state.rho
        * a.exponents()
            .iter()
            .zip(&state.u)
            .map(|(&n, &m)| normal_raw_moment(n, m, var))
            .product::<f64>())
}

/// Monomial coefficients of the physicists' Hermite polynomial `H_n`,
/// lowest power first.
pub fn hermite_monomials(n: u32) -> Vec<f64> {
    let mut prev = vec![1.0];
    if n == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 2.0];
    for k in 1..n {
        // H_{k+1} = 2x H_k − 2k H_{k−1}
        let mut next = vec![0.0; k as usize + 2];
        for (p, &c) in cur.iter().enumerate() {
            next[p + 1] += 2.0 * c;
        }
        for (p, &c) in prev.iter().enumerate() {
            next[p] -= 2.0 * k as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

fn hermite_value(n: u32, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `E[H_k(X)] / (2^k k!)` for `X ~ N(u, θ/2)`, for `k = 0..=4`.
///
/// From the generating function, `E[exp(2Xt − t²)] = exp(2ut + (θ−1)t²)`.
fn axis_factors(u: f64, theta: f64) -> [f64; 5] {
    let mut out = [0.0; 5];
    let dt = theta - 1.0;
    for (k, slot) in out.iter_mut().enumerate() {
        let k = k as u32;
        let s: f64 = (0..=k / 2)
            .map(|j| (2.0 * u).powi((k - 2 * j) as i32) * dt.powi(j as i32) / (factorial(j) * factorial(k - 2 * j)))
            .sum();
        *slot = s / 2f64.powi(k as i32);
    }
    out
}

/// `P(v) = Σ_n b_n H_n(v)` over multi-indices of order ≤ 4.
#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumExpansion {
    pub dim: usize,
    pub degree: u32,
    terms: Vec<(MultiIndex, f64)>,
}

impl EquilibriumExpansion {
    pub fn hermite_coefficients(&self) -> &[(MultiIndex, f64)] {
        &self.terms
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(n, b)| b * n.exponents().iter().zip(v).map(|(&k, &x)| hermite_value(k, x)).product::<f64>())
            .sum()
    }

    /// Coefficients of `P` in the monomial basis, ordered like
    /// [`MultiIndex::all_up_to`].
    pub fn monomial_coefficients(&self) -> Vec<(MultiIndex, f64)> {
        let basis = MultiIndex::all_up_to(self.dim, self.degree);
        let tables: Vec<Vec<f64>> = (0..=self.degree).map(hermite_monomials).collect();
        basis
            .iter()
            .map(|p| {
                let c: f64 = self
                    .terms
                    .iter()
                    .map(|(n, b)| {
                        b * n
                            .exponents()
                            .iter()
                            .zip(p.exponents())
                            .map(|(&nk, &pk)| tables[nk as usize].get(pk as usize).copied().unwrap_or(0.0))
                            .product::<f64>()
                    })
                    .sum();
                (p.clone(), c)
            })
            .collect()
    }
}

impl fmt::Display for EquilibriumExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, c) in self.monomial_coefficients() {
            writeln!(f, "{a} : {c:.16e}")?;
        }
        Ok(())
    }
}

fn check_dim(state: &MacroState, dim: usize) -> Result<()> {
    if state.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: state.dim(),
        });
    }
    Ok(())
}

/// Closed-form Hermite projection of the Maxwell–Boltzmann distribution.
pub fn build_expansion(state: &MacroState, dim: usize) -> Result<EquilibriumExpansion> {
    check_dim(state, dim)?;
    let factors: Vec<[f64; 5]> = state.u.iter().map(|&u| axis_factors(u, state.theta)).collect();
    let terms = MultiIndex::all_up_to(dim, EXPANSION_DEGREE)
        .into_iter()
        .map(|n| {
            let b = state.rho
                * n.exponents()
                    .iter()
                    .zip(&factors)
                    .map(|(&k, fa)| fa[k as usize])
                    .product::<f64>();
            (n, b)
        })
        .collect();
    Ok(EquilibriumExpansion {
        dim,
        degree: EXPANSION_DEGREE,
        terms,
    })
}

/// Monomial coefficients of `P` obtained by solving the moment equations
/// `∫ v^a ω(v) P(v) dv = target_moment(a)` for all `|a| ≤ 4` directly.
pub fn expansion_by_moment_matching(state: &MacroState, dim: usize) -> Result<Vec<(MultiIndex, f64)>> {
    check_dim(state, dim)?;
    let basis = MultiIndex::all_up_to(dim, EXPANSION_DEGREE);
    let k = basis.len();
    let gram = DMatrix::from_fn(k, k, |r, s| {
        let sum: Vec<u32> = basis[r]
            .exponents()
            .iter()
            .zip(basis[s].exponents())
            .map(|(a, b)| a + b)
            .collect();
        normalized_gaussian_moment(&MultiIndex::new(sum).expect("dimension already checked"))
    });
    let rhs = basis
        .iter()
        .map(|a| target_moment(a, state))
        .collect::<Result<Vec<_>>>()?;
    let x = gram
        .lu()
        .solve(&DVector::from_vec(rhs))
        .ok_or_else(|| Error::InvalidInput("singular Gaussian Gram matrix".into()))?;
    Ok(basis.into_iter().zip(x.iter().copied()).collect())
}

/// Precomputed `w_i H_n(v_i)` table for fast per-node equilibria.
#[derive(Clone, Debug)]
pub struct EquilibriumKernel {
    dim: usize,
    q: usize,
    basis: Vec<MultiIndex>,
    table: Vec<f64>,
}

impl EquilibriumKernel {
    pub fn new(lattice: &Lattice) -> Self {
        let basis = MultiIndex::all_up_to(lattice.dim, EXPANSION_DEGREE);
        let k = basis.len();
        let mut table = vec![0.0; lattice.q() * k];
        for i in 0..lattice.q() {
            let v = lattice.velocity(i);
            for (j, n) in basis.iter().enumerate() {
                let h: f64 = n.exponents().iter().zip(v).map(|(&p, &x)| hermite_value(p, x)).product();
                table[i * k + j] = lattice.weight(i) * h;
            }
        }
        EquilibriumKernel {
            dim: lattice.dim,
            q: lattice.q(),
            basis,
            table,
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Writes `f_i^eq` for `(rho, u, theta)` into `out` (length `q`).
    pub fn fill(&self, rho: f64, u: &[f64], theta: f64, out: &mut [f64]) {
        debug_assert_eq!(u.len(), self.dim);
        let mut factors = [[0.0; 5]; crate::moment_conditions::MAX_DIMENSION];
        for (a, &ua) in u.iter().enumerate() {
            factors[a] = axis_factors(ua, theta);
        }
        let k = self.basis.len();
        let mut coef = [0.0; 70];
        for (j, n) in self.basis.iter().enumerate() {
            coef[j] = rho
                * n.exponents()
                    .iter()
                    .enumerate()
                    .map(|(a, &p)| factors[a][p as usize])
                    .product::<f64>();
        }
        for (i, slot) in out.iter_mut().enumerate().take(self.q) {
            let row = &self.table[i * k..(i + 1) * k];
            *slot = row.iter().zip(&coef[..k]).map(|(t, c)| t * c).sum();
        }
    }

    pub fn equilibrium(&self, state: &MacroState) -> Vec<f64> {
        let mut out = vec![0.0; self.q];
        self.fill(state.rho, &state.u, state.theta, &mut out);
        out
    }
}

/// `f_i^eq = w_i P(v_i)` over every expanded velocity of `model`.
pub fn discrete_equilibrium(model: &VelocityModel, state: &MacroState) -> Result<Vec<f64>> {
    check_dim(state, model.dim)?;
    Ok(EquilibriumKernel::new(&model.lattice()).equilibrium(state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    fn st(rho: f64, u: &[f64], theta: f64) -> MacroState {
        MacroState::new(rho, u.to_vec(), theta).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1.0)
    }

    /// Tensor form of the order-4 moment, written out independently of
    /// the per-axis normal moments.
    fn tensor_moment4(idx: [usize; 4], s: &MacroState) -> f64 {
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let [a, b, c, e] = idx;
        let u = &s.u;
        let h = s.theta / 2.0;
        s.rho
            * (u[a] * u[b] * u[c] * u[e]
                + h * (u[a] * u[b] * d(c, e)
                    + u[a] * u[c] * d(b, e)
                    + u[a] * u[e] * d(b, c)
                    + u[b] * u[c] * d(a, e)
                    + u[b] * u[e] * d(a, c)
                    + u[c] * u[e] * d(a, b))
                + h * h * (d(a, b) * d(c, e) + d(a, c) * d(b, e) + d(a, e) * d(b, c)))
    }

    #[test]
    fn target_moment_examples() {
        let s = st(2.5, &[0.3, -0.1], 1.2);
        assert_eq!(target_moment(&mi(&[0, 0]), &s).unwrap(), 2.5);
        assert_eq!(target_moment(&mi(&[2, 0]), &st(1.0, &[0.0, 0.0], 1.0)).unwrap(), 0.5);
        assert!((target_moment(&mi(&[1, 0]), &st(2.0, &[0.1, 0.0], 1.0)).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(
            target_moment(&mi(&[3, 2]), &s),
            Err(Error::OrderTooHigh { order: 5, max: 4 })
        ));
    }

    #[test]
    fn target_moment_matches_tensor_form() {
        let s = st(1.3, &[0.2, -0.3, 0.1], 0.8);
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for e in 0..3 {
                        let mut exps = [0u32; 3];
                        for k in [a, b, c, e] {
                            exps[k] += 1;
                        }
                        let m = target_moment(&mi(&exps), &s).unwrap();
                        assert!((m - tensor_moment4([a, b, c, e], &s)).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn shifted_gaussian_first_moment_by_quadrature() {
        // ∫ v ρ (πθ)^{-1/2} exp(-(v-u)²/θ) dv by Simpson
        let (rho, u, theta) = (2.0, 0.1, 1.0);
        let (l, n) = (12.0, 20_000);
        let h = 2.0 * l / n as f64;
        let g = |v: f64| v * rho * (std::f64::consts::PI * theta).powf(-0.5) * (-(v - u) * (v - u) / theta).exp();
        let mut s = g(-l) + g(l);
        for k in 1..n {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(-l + k as f64 * h);
        }
        assert!((s * h / 3.0 - 0.2).abs() < 1e-12);
    }

    #[test]
    fn hermite_polynomials() {
        assert_eq!(hermite_monomials(4), vec![12.0, 0.0, -48.0, 0.0, 16.0]);
        assert_eq!(hermite_monomials(3), vec![0.0, -12.0, 0.0, 8.0]);
        for n in 0..=4 {
            let x: f64 = 0.37;
            let poly: f64 = hermite_monomials(n).iter().enumerate().map(|(p, c)| c * x.powi(p as i32)).sum();
            assert!((poly - hermite_value(n, x)).abs() < 1e-14);
        }
    }

    #[test]
    fn reference_state_is_constant() {
        for rho in [1.0, 3.0] {
            let e = build_expansion(&MacroState::at_rest(rho, 3).unwrap(), 3).unwrap();
            for (n, b) in e.hermite_coefficients() {
                let expected = if n.order() == 0 { rho } else { 0.0 };
                assert_eq!(*b, expected);
            }
            assert_eq!(e.eval(&[0.3, -1.2, 2.0]), rho);
        }
    }

    #[test]
    fn closed_form_and_moment_matching_agree() {
        for (u, theta) in [(vec![0.1, 0.0], 1.1), (vec![0.2, 0.1], 0.9), (vec![-0.3, 0.2, 0.1], 1.25)] {
            let d = u.len();
            let s = st(1.4, &u, theta);
            let closed = build_expansion(&s, d).unwrap().monomial_coefficients();
            let solved = expansion_by_moment_matching(&s, d).unwrap();
            for ((a, x), (b, y)) in closed.iter().zip(&solved) {
                assert_eq!(a, b);
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{a}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn d2q33_moments_match_targets() {
        let model = VelocityModel::d2q33();
        let lat = model.lattice();
        for s in [st(1.0, &[0.1, 0.0], 1.1), st(1.0, &[0.2, 0.1], 0.9)] {
            let f = discrete_equilibrium(&model, &s).unwrap();
            for a in MultiIndex::all_up_to(2, 4) {
                let m = lat.moment(&f, &a);
                let t = target_moment(&a, &s).unwrap();
                assert!(rel(m, t) <= 1e-12, "{a}: {m} vs {t}");
            }
        }
    }

    #[test]
    fn reference_equilibria_are_weights() {
        let model = VelocityModel::d2q33();
        let f = discrete_equilibrium(&model, &MacroState::at_rest(1.0, 2).unwrap()).unwrap();
        assert_eq!(f, model.lattice().weights());
        let model = VelocityModel::d3q95();
        let f = discrete_equilibrium(&model, &MacroState::at_rest(4.0, 3).unwrap()).unwrap();
        for (fi, wi) in f.iter().zip(model.lattice().weights()) {
            assert_eq!(*fi, 4.0 * wi);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = st(1.0, &[0.0, 0.0], 1.0);
        assert!(build_expansion(&s, 3).is_err());
        assert!(discrete_equilibrium(&VelocityModel::d3q95_table(), &s).is_err());
        assert!(MacroState::new(-1.0, vec![0.0], 1.0).is_err());
        assert!(MacroState::new(1.0, vec![0.0], 0.0).is_err());
    }

    #[test]
    fn expansion_prints_monomials() {
        let text = build_expansion(&MacroState::at_rest(2.0, 2).unwrap(), 2).unwrap().to_string();
        assert_eq!(text.lines().count(), 15);
        assert_eq!(text.lines().next().unwrap(), "0 0 : 2.0000000000000000e0");
    }

    proptest! {
        #[test]
        fn linear_in_density(rho in 0.1f64..5.0, ux in -0.4f64..0.4, uy in -0.2f64..0.2, theta in 0.7f64..1.3) {
            let kernel = EquilibriumKernel::new(&VelocityModel::d2q33().lattice());
            let one = kernel.equilibrium(&st(1.0, &[ux, uy], theta));
            let scaled = kernel.equilibrium(&st(rho, &[ux, uy], theta));
            let scale = scaled.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            for (a, b) in one.iter().zip(&scaled) {
                prop_assert!((a * rho - b).abs() <= 1e-14 * scale);
            }
        }

        #[test]
        fn galilean_parity(ux in -0.4f64..0.4, uy in -0.2f64..0.2, theta in 0.7f64..1.3) {
            let model = VelocityModel::d2q33();
            let lat = model.lattice();
            let plus = discrete_equilibrium(&model, &st(1.2, &[ux, uy], theta)).unwrap();
            let minus = discrete_equilibrium(&model, &st(1.2, &[-ux, -uy], theta)).unwrap();
            for a in MultiIndex::all_up_to(2, 4) {
                let (p, m) = (lat.moment(&plus, &a), lat.moment(&minus, &a));
                let sign = if a.order() % 2 == 0 { 1.0 } else { -1.0 };
                prop_assert!((p - sign * m).abs() <= 1e-13 * p.abs().max(1.0), "{} {} {}", a, p, m);
            }
        }
    }
}
