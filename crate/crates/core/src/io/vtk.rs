//! Legacy ASCII VTK writer for structured-points data on `(0,1)³` grids.

use std::fmt::Write as _;
use std::path::Path;

use crate::cell_problems::CellCorrectors;
use crate::error::{Error, Result};
use crate::fem::{Grid, NO_DOF};
use crate::material::VOIGT;
use crate::unit_cell::UnitCellMesh;

pub enum PointField<'a> {
    Scalar(&'a [f64]),
    Vector(&'a [[f64; 3]]),
}

/// A structured-points data set with `points_per_axis³` points on the unit cube.
pub struct StructuredPoints<'a> {
    pub title: String,
    pub points_per_axis: usize,
    pub point_data: Vec<(String, PointField<'a>)>,
    pub cell_data: Vec<(String, Vec<f64>)>,
}

impl<'a> StructuredPoints<'a> {
    pub fn on_grid(grid: &Grid, title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            points_per_axis: grid.cells_per_axis() + 1,
            point_data: Vec::new(),
            cell_data: Vec::new(),
        }
    }

    pub fn scalar(mut self, name: &str, v: &'a [f64]) -> Self {
        self.point_data.push((name.into(), PointField::Scalar(v)));
        self
    }

    pub fn vector(mut self, name: &str, v: &'a [[f64; 3]]) -> Self {
        self.point_data.push((name.into(), PointField::Vector(v)));
        self
    }

    pub fn cell_scalar(mut self, name: &str, v: Vec<f64>) -> Self {
        self.cell_data.push((name.into(), v));
        self
    }

    pub fn render(&self) -> Result<String> {
        let n = self.points_per_axis;
        if n < 2 {
            return Err(Error::Config("VTK grid needs at least two points per axis".into()));
        }
        let np = n * n * n;
        let nc = (n - 1).pow(3);
        let mut s = String::new();
        // writing into a String cannot fail
        let _ = writeln!(s, "# vtk DataFile Version 3.0");
        let _ = writeln!(s, "{}", self.title.replace('\n', " "));
        let _ = writeln!(s, "ASCII");
        let _ = writeln!(s, "DATASET STRUCTURED_POINTS");
        let _ = writeln!(s, "DIMENSIONS {n} {n} {n}");
        let _ = writeln!(s, "ORIGIN 0 0 0");
        let h = 1.0 / (n - 1) as f64;
        let _ = writeln!(s, "SPACING {h:e} {h:e} {h:e}");
        if !self.point_data.is_empty() {
            let _ = writeln!(s, "POINT_DATA {np}");
            for (name, f) in &self.point_data {
                match f {
                    PointField::Scalar(v) => {
                        check_len(name, v.len(), np)?;
                        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                        for x in v.iter() {
                            let _ = writeln!(s, "{x:e}");
                        }
                    }
                    PointField::Vector(v) => {
                        check_len(name, v.len(), np)?;
                        let _ = writeln!(s, "VECTORS {name} double");
                        for x in v.iter() {
                            let _ = writeln!(s, "{:e} {:e} {:e}", x[0], x[1], x[2]);
                        }
                    }
                }
            }
        }
        if !self.cell_data.is_empty() {
            let _ = writeln!(s, "CELL_DATA {nc}");
            for (name, v) in &self.cell_data {
                check_len(name, v.len(), nc)?;
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for x in v {
                    let _ = writeln!(s, "{x:e}");
                }
            }
        }
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()?)?;
        Ok(())
    }
}

fn check_len(name: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Config(format!(
            "VTK field {name} has {got} values, expected {want}"
        )));
    }
    Ok(())
}

/// Writes the cell labels and every corrector on the closed `(n+1)³` lattice.
pub fn write_correctors(path: &Path, cell: &UnitCellMesh, corr: &CellCorrectors) -> Result<()> {
    let n = cell.resolution;
    let m = n + 1;
    let periodic: Vec<usize> = (0..m * m * m)
        .map(|i| cell.grid.node_index([i % m, (i / m) % m, i / (m * m)]))
        .collect();
    let elastic: Vec<Vec<[f64; 3]>> = corr
        .elastic
        .iter()
        .map(|w| {
            periodic
                .iter()
                .map(|&v| [w[3 * v], w[3 * v + 1], w[3 * v + 2]])
                .collect()
        })
        .collect();
    let mut scalars: Vec<(String, Vec<f64>)> = Vec::new();
    for (tag, set) in [("pi", &corr.pressure), ("vartheta", &corr.temperature)] {
        for (ph, pc) in set.iter().enumerate() {
            if pc.map.num_dofs == 0 {
                continue;
            }
            for i in 0..3 {
                let v = periodic
                    .iter()
                    .map(|&v| {
                        let d = pc.map.node_dof[v];
                        if d == NO_DOF {
                            0.0
                        } else {
                            pc.fields[i][d]
                        }
                    })
                    .collect();
                scalars.push((format!("{tag}{}_{}", ph + 1, i + 1), v));
            }
        }
    }
    let mut sp = StructuredPoints {
        title: format!("cell correctors, resolution {n}"),
        points_per_axis: m,
        point_data: Vec::new(),
        cell_data: vec![("phase".into(), cell.labels.iter().map(|&l| l as f64).collect())],
    };
    for (a, &(k, l)) in VOIGT.iter().enumerate() {
        sp.point_data
            .push((format!("w{}{}", k + 1, l + 1), PointField::Vector(&elastic[a])));
    }
    for (name, v) in &scalars {
        sp.point_data.push((name.clone(), PointField::Scalar(v)));
    }
    sp.write(path)
}
