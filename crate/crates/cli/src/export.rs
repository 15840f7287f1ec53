//! Snapshot CSV to two-column plot data.
//!
//! Only the last step in the file is used. Rows sharing an axial index are
//! averaged over the cross-section, so axis and whole-grid snapshots give
//! the same profile for a homogeneous cross-section.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

pub const FIELDS: [&str; 5] = ["rho", "ux", "uy", "uz", "theta"];

#[derive(Debug, Deserialize)]
struct Row {
    #[serde(alias = "t")]
    step: u64,
    iz: usize,
    z_phys: f64,
    rho: f64,
    ux: f64,
    uy: f64,
    uz: f64,
    theta: f64,
}

impl Row {
    fn fields(&self) -> [f64; 5] {
        [self.rho, self.ux, self.uy, self.uz, self.theta]
    }
}

/// Axial profile: `iz -> (z_phys, field values)`.
pub type Profile = BTreeMap<usize, (f64, [f64; 5])>;

pub fn read_profile(path: &Path) -> Result<Profile> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let rows = reader
        .deserialize::<Row>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .with_context(|| format!("reading {}", path.display()))?;
    let Some(last) = rows.iter().map(|r| r.step).max() else {
        bail!("{} has no rows", path.display());
    };
    let mut sums: BTreeMap<usize, (f64, [f64; 5], usize)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.step == last) {
        let e = sums.entry(r.iz).or_insert((r.z_phys, [0.0; 5], 0));
        for (acc, v) in e.1.iter_mut().zip(r.fields()) {
            *acc += v;
        }
        e.2 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(iz, (z, s, n))| (iz, (z, s.map(|v| v / n as f64))))
        .collect())
}

/// Writes `<field>.dat` for every field and, with an oracle,
/// `<field>_vs_exact.dat` (`z sim exact`). Returns the file names written.
pub fn export(snapshot: &Path, oracle: Option<&Path>, out: &Path) -> Result<Vec<String>> {
    let sim = read_profile(snapshot)?;
    let exact = oracle.map(read_profile).transpose()?;
    if let Some(ex) = &exact {
        if let Some(iz) = sim.keys().find(|iz| !ex.contains_key(iz)) {
            bail!("oracle has no row for iz = {iz}");
        }
    }
    let mut written = Vec::new();
    for (k, field) in FIELDS.iter().enumerate() {
        let mut text = format!("# z_phys {field}\n");
        for (z, v) in sim.values() {
            let _ = writeln!(text, "{z} {}", v[k]);
        }
        let name = format!("{field}.dat");
        fs::write(out.join(&name), text)?;
        written.push(name);

        if let Some(ex) = &exact {
            let mut text = format!("# z_phys {field} {field}_exact\n");
            for (iz, (z, v)) in &sim {
                let _ = writeln!(text, "{z} {} {}", v[k], ex[iz].1[k]);
            }
            let name = format!("{field}_vs_exact.dat");
            fs::write(out.join(&name), text)?;
            written.push(name);
        }
    }
    Ok(written)
}
