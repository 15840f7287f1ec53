//! Independent even-moment conditions on a hypercubic velocity set.
//!
//! A discrete velocity set with weights reproduces the Gaussian integral of
//! the monomial `v^a` when `Σ_i w_i v_i^a = ∫ v^a ω(v) dv`. Under the full
//! sign-flip × permutation symmetry only all-even exponent vectors give
//! non-trivial equations, and exponent vectors that are permutations of each
//! other give the same equation. One condition per sorted even exponent
//! vector therefore remains, i.e. one per integer partition.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const MAX_DIMENSION: usize = 4;

/// Exponent vector `(a_1, …, a_D)` of the monomial `v_1^{a_1} ⋯ v_D^{a_D}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        if exponents.is_empty() || exponents.len() > MAX_DIMENSION {
            return Err(Error::UnsupportedDimension(exponents.len()));
        }
        Ok(MultiIndex(exponents))
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn is_all_even(&self) -> bool {
        self.0.iter().all(|a| a % 2 == 0)
    }

    /// Evaluates `v^a` at a point of the same dimension.
    pub fn monomial(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.0.len());
        self.0
            .iter()
            .zip(v)
            .map(|(&a, &x)| x.powi(a as i32))
            .product()
    }

    /// All multi-indices of dimension `dim` with order at most `max_order`,
    /// ascending in order and lexicographically descending within an order.
    pub fn all_up_to(dim: usize, max_order: u32) -> Vec<MultiIndex> {
        fn fill(prefix: &mut Vec<u32>, left: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
            if left == 1 {
                prefix.push(remaining);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for a in (0..=remaining).rev() {
                prefix.push(a);
                fill(prefix, left - 1, remaining - a, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        for n in 0..=max_order {
            fill(&mut Vec::with_capacity(dim), dim, n, &mut out);
        }
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, a) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// Number of partitions of `q` into at most `d` positive parts, with
/// `partition_count(0, d) = 1`.
pub fn partition_count(q: u32, d: u32) -> u64 {
    // p[n] after processing k = partitions of n into parts of size ≤ k,
    // which by conjugation equals partitions into at most k parts.
    let q = q as usize;
    let mut p = vec![0u64; q + 1];
    p[0] = 1;
    for k in 1..=(d as usize).min(q) {
        for n in k..=q {
            p[n] += p[n - k];
        }
    }
    p[q]
}

/// `(n-1)!!` with the convention `(-1)!! = 1`.
fn double_factorial_below(n: u32) -> f64 {
    let mut acc = 1.0;
    let mut k = n as i64 - 1;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// `Γ((n+1)/2) = √π (n-1)!! / 2^{n/2}` for even `n`.
fn half_gamma_even(n: u32) -> f64 {
    std::f64::consts::PI.sqrt() * double_factorial_below(n) / 2f64.powi(n as i32 / 2)
}

/// `∫ v^a exp(-v²) dv` over `R^D`.
pub fn raw_gaussian_moment(a: &MultiIndex) -> f64 {
    if !a.is_all_even() {
        return 0.0;
    }
    a.exponents().iter().map(|&n| half_gamma_even(n)).product()
}

/// Moment of the unit-mass weight `π^{-D/2} exp(-v²)`.
pub fn normalized_gaussian_moment(a: &MultiIndex) -> f64 {
    if !a.is_all_even() {
        return 0.0;
    }
    a.exponents()
        .iter()
        .map(|&n| double_factorial_below(n) / 2f64.powi(n as i32 / 2))
        .product()
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentCondition {
    pub representative: MultiIndex,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionSet {
    pub dim: usize,
    pub max_order: u32,
    pub conditions: Vec<MomentCondition>,
}

/// Partitions of `q` into at most `parts` parts, largest part first,
/// in descending lexicographic order.
fn partitions(q: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(q: u32, parts: usize, max_part: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if q == 0 {
            out.push(prefix.clone());
            return;
        }
        if parts == 0 {
            return;
        }
        for p in (1..=q.min(max_part)).rev() {
            prefix.push(p);
            rec(q - p, parts - 1, p, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(q, parts, q, &mut Vec::new(), &mut out);
    out
}

/// Conditions for moment order `max_order` (Hermite degree equal to the
/// order), i.e. all even monomials up to total degree `2 * max_order`.
pub fn generate_conditions(dim: usize, max_order: u32) -> Result<ConditionSet> {
    if dim == 0 || dim > MAX_DIMENSION {
        return Err(Error::UnsupportedDimension(dim));
    }
    let mut conditions = Vec::new();
    for q in 0..=max_order {
        for parts in partitions(q, dim) {
            let mut exps: Vec<u32> = parts.iter().map(|p| 2 * p).collect();
            exps.resize(dim, 0);
            let representative = MultiIndex(exps);
            let rhs = normalized_gaussian_moment(&representative);
            conditions.push(MomentCondition {
                representative,
                rhs,
            });
        }
    }
    Ok(ConditionSet {
        dim,
        max_order,
        conditions,
    })
}

impl ConditionSet {
    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &MomentCondition> {
        self.conditions.iter()
    }

    /// Line-oriented text: `a_1 … a_D : rhs`, rhs to 17 significant digits.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ConditionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.conditions {
            writeln!(f, "{} : {:.16e}", c.representative, c.rhs)?;
        }
        Ok(())
    }
}

impl FromStr for ConditionSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut conditions = Vec::new();
        let mut dim = None;
        for (ln, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: ln + 1,
                message,
            };
            let (lhs, rhs) = line
                .split_once(':')
                .ok_or_else(|| parse_err("missing ':'".into()))?;
            let exps = lhs
                .split_whitespace()
                .map(|t| t.parse::<u32>().map_err(|e| parse_err(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            let rhs: f64 = rhs.trim().parse().map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?;
            let d = *dim.get_or_insert(exps.len());
            if d != exps.len() {
                return Err(parse_err(format!("expected {d} exponents, found {}", exps.len())));
            }
            conditions.push(MomentCondition {
                representative: MultiIndex::new(exps)?,
                rhs,
            });
        }
        let dim = dim.ok_or_else(|| Error::Parse {
            line: 0,
            message: "empty condition set".into(),
        })?;
        let max_order = conditions
            .iter()
            .map(|c| c.representative.order() / 2)
            .max()
            .unwrap_or(0);
        Ok(ConditionSet {
            dim,
            max_order,
            conditions,
        })
    }
}
