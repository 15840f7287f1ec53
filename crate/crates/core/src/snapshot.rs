//! CSV snapshot rows: `step,ix,iy,iz,z_phys,rho,ux,uy,uz,theta`.
//!
//! The axial (last) grid axis is always reported as `iz`/`uz`; the
//! remaining axes fill `x` then `y`, and unused slots are zero.

use std::fmt::Write as _;

use crate::equilibrium::MacroState;

pub const SNAPSHOT_HEADER: &str = "step,ix,iy,iz,z_phys,rho,ux,uy,uz,theta";
pub const REFERENCE_HEADER: &str = "t,ix,iy,iz,z_phys,rho,ux,uy,uz,theta";

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotRow {
    pub step: usize,
    pub index: [usize; 3],
    pub z_phys: f64,
    pub rho: f64,
    pub u: [f64; 3],
    pub theta: f64,
}

/// Maps grid-ordered values (last axis axial) onto `(x, y, z)` slots.
pub fn to_xyz<T: Copy + Default>(values: &[T]) -> [T; 3] {
    let mut out = [T::default(); 3];
    if let Some((axial, rest)) = values.split_last() {
        out[2] = *axial;
        for (slot, v) in out.iter_mut().zip(rest) {
            *slot = *v;
        }
    }
    out
}

impl SnapshotRow {
    pub fn new(step: usize, coords: &[usize], spacing: f64, state: &MacroState) -> Self {
        let index = to_xyz(coords);
        SnapshotRow {
            step,
            index,
            z_phys: index[2] as f64 * spacing,
            rho: state.rho,
            u: to_xyz(&state.u),
            theta: state.theta,
        }
    }
}

pub fn write_rows(out: &mut String, rows: &[SnapshotRow]) {
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.step, r.index[0], r.index[1], r.index[2], r.z_phys, r.rho, r.u[0], r.u[1], r.u[2], r.theta
        );
    }
}

pub fn to_csv(header: &str, rows: &[SnapshotRow]) -> String {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(header);
    s.push('\n');
    write_rows(&mut s, rows);
    s
}
