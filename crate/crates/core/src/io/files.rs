//! Output files of the pipelines.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::effective::EffectiveCoefficients;
use crate::error::Result;
use crate::fem::Grid;
use crate::io::vtk::StructuredPoints;
use crate::macro_solver::MacroState;
use crate::micro_dns::{MicroDofs, MicroState};

pub const COEFFICIENTS_JSON: &str = "coefficients.json";
pub const COEFFICIENTS_CSV: &str = "coefficients.csv";

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_coefficients(path: &Path) -> Result<EffectiveCoefficients> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// One `name,row,col,value` line per entry; scalars leave row and col empty.
pub fn coefficients_csv(c: &EffectiveCoefficients) -> String {
    let mut s = String::from("name,row,col,value\n");
    for i in 0..6 {
        for j in 0..6 {
            let _ = writeln!(s, "A_hom,{},{},{:e}", i + 1, j + 1, c.a_hom[i][j]);
        }
    }
    let mats = [
        ("B1", &c.b1),
        ("B2", &c.b2),
        ("D1", &c.d1),
        ("D2", &c.d2),
        ("C1", &c.c1),
        ("C2", &c.c2),
        ("K1", &c.k1),
        ("K2", &c.k2),
        ("L1", &c.l1),
        ("L2", &c.l2),
    ];
    for (name, m) in mats {
        for i in 0..3 {
            for j in 0..3 {
                let _ = writeln!(s, "{name},{},{},{:e}", i + 1, j + 1, m[i][j]);
            }
        }
    }
    let scalars = [
        ("phi1_star", c.phi1_star),
        ("phi2_star", c.phi2_star),
        ("alpha1_star", c.alpha1_star),
        ("alpha2_star", c.alpha2_star),
        ("c1_star", c.c1_star),
        ("c2_star", c.c2_star),
        ("zeta_star", c.zeta_star),
        ("omega_star", c.omega_star),
        ("volume_fraction1", c.volume_fractions[0]),
        ("volume_fraction2", c.volume_fractions[1]),
        ("interface_area", c.interface_area),
    ];
    for (name, v) in scalars {
        let _ = writeln!(s, "{name},,,{v:e}");
    }
    s
}

/// Writes `coefficients.json` and `coefficients.csv` into `dir`.
pub fn write_coefficients(dir: &Path, c: &EffectiveCoefficients) -> Result<[PathBuf; 2]> {
    ensure_dir(dir)?;
    let json = dir.join(COEFFICIENTS_JSON);
    let csv = dir.join(COEFFICIENTS_CSV);
    write_json(&json, c)?;
    std::fs::write(&csv, coefficients_csv(c))?;
    Ok([json, csv])
}

/// One VTK file per macro state, `macro_0000.vtk` onward.
pub fn write_macro_series(dir: &Path, grid: &Grid, states: &[MacroState]) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut out = Vec::new();
    for (k, st) in states.iter().enumerate() {
        let path = dir.join(format!("macro_{k:04}.vtk"));
        StructuredPoints::on_grid(grid, format!("macro fields t={:e}", st.time))
            .vector("u", &st.u)
            .scalar("p1", &st.p[0])
            .scalar("p2", &st.p[1])
            .scalar("theta1", &st.theta[0])
            .scalar("theta2", &st.theta[1])
            .write(&path)?;
        out.push(path);
    }
    Ok(out)
}

/// One VTK file per micro state, `dns_0000.vtk` onward. Phase-wise scalars
/// are zero off their phase.
pub fn write_micro_series(dir: &Path, dofs: &MicroDofs, states: &[MicroState]) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let labels: Vec<f64> = dofs.labels.iter().map(|&l| l as f64).collect();
    let mut out = Vec::new();
    for (k, st) in states.iter().enumerate() {
        let path = dir.join(format!("dns_{k:04}.vtk"));
        StructuredPoints::on_grid(&dofs.grid, format!("micro fields t={:e}", st.time))
            .vector("u", &st.u)
            .scalar("p1", &st.p[0])
            .scalar("p2", &st.p[1])
            .scalar("theta1", &st.theta[0])
            .scalar("theta2", &st.theta[1])
            .cell_scalar("phase", labels.clone())
            .write(&path)?;
        out.push(path);
    }
    Ok(out)
}
