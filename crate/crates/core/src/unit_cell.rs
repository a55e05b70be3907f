//! Voxelized periodic cell and its tiling into the ε-periodic domain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{Grid, NO_DOF};

/// Matrix label.
pub const MATRIX: u8 = 1;
/// Inclusion label.
pub const INCLUSION: u8 = 2;

/// Where phase 2 sits inside the cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Inclusion {
    /// Axis-aligned box `[lo, hi]` whose faces lie on grid lines.
    Box { lo: [f64; 3], hi: [f64; 3] },
    /// Explicit labels (1 or 2) for all `n³` cells, x fastest.
    Mask { labels: Vec<u8> },
    /// Lattice indices of the inclusion voxels.
    Voxels { cells: Vec<[usize; 3]> },
}

impl Inclusion {
    /// Layer `lo ≤ y_axis ≤ hi` spanning the cell in the other directions.
    pub fn laminate(axis: usize, lo: f64, hi: f64) -> Self {
        let mut a = [0.0; 3];
        let mut b = [1.0; 3];
        a[axis] = lo;
        b[axis] = hi;
        Inclusion::Box { lo: a, hi: b }
    }

    pub fn centered_cube(half_width: f64) -> Self {
        Inclusion::Box {
            lo: [0.5 - half_width; 3],
            hi: [0.5 + half_width; 3],
        }
    }
}

/// Face between `cell` and its upper neighbour `other` along `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Face {
    pub cell: usize,
    pub other: usize,
    pub axis: usize,
}

impl Face {
    /// The cell on the matrix side.
    pub fn matrix_cell(&self, labels: &[u8]) -> usize {
        if labels[self.cell] == MATRIX {
            self.cell
        } else {
            self.other
        }
    }
}

#[derive(Clone, Debug)]
pub struct UnitCellMesh {
    pub resolution: usize,
    pub grid: Grid,
    pub labels: Vec<u8>,
    pub interface_faces: Vec<Face>,
    /// `|Y₁|, |Y₂|` as cell-volume sums.
    pub phase_volumes: [f64; 2],
    pub interface_area: f64,
    /// No inclusion cell touches the cell boundary.
    pub strictly_interior: bool,
}

/// Builds the voxelized cell. An empty phase is rejected; use
/// [`build_unit_cell_allow_empty`] for the single-phase limit.
pub fn build_unit_cell(resolution: usize, inclusion: &Inclusion) -> Result<UnitCellMesh> {
    build(resolution, inclusion, false)
}

/// As [`build_unit_cell`] but permits an empty inclusion.
pub fn build_unit_cell_allow_empty(resolution: usize, inclusion: &Inclusion) -> Result<UnitCellMesh> {
    build(resolution, inclusion, true)
}

fn on_grid(v: f64, n: usize) -> Option<usize> {
    let t = v * n as f64;
    let r = t.round();
    ((t - r).abs() < 1e-9 && r >= 0.0 && r <= n as f64).then_some(r as usize)
}

fn build(n: usize, inclusion: &Inclusion, allow_empty: bool) -> Result<UnitCellMesh> {
    if n < 2 {
        return Err(Error::Config(format!("cell resolution must be at least 2, got {n}")));
    }
    let grid = Grid::periodic(n);
    let mut labels = vec![MATRIX; grid.num_cells()];
    match inclusion {
        Inclusion::Box { lo, hi } => {
            let mut a = [0; 3];
            let mut b = [0; 3];
            for d in 0..3 {
                a[d] = on_grid(lo[d], n).ok_or_else(|| Error::Alignment {
                    resolution: n,
                    detail: format!("lower bound {} along axis {d}", lo[d]),
                })?;
                b[d] = on_grid(hi[d], n).ok_or_else(|| Error::Alignment {
                    resolution: n,
                    detail: format!("upper bound {} along axis {d}", hi[d]),
                })?;
                if b[d] < a[d] {
                    return Err(Error::DegenerateGeometry(format!("box bounds inverted along axis {d}")));
                }
            }
            for k in a[2]..b[2] {
                for j in a[1]..b[1] {
                    for i in a[0]..b[0] {
                        labels[grid.cell_index([i, j, k])] = INCLUSION;
                    }
                }
            }
        }
        Inclusion::Mask { labels: mask } => {
            if mask.len() != grid.num_cells() {
                return Err(Error::Config(format!(
                    "voxel mask has {} entries, expected {}",
                    mask.len(),
                    grid.num_cells()
                )));
            }
            if let Some(bad) = mask.iter().find(|&&l| l != MATRIX && l != INCLUSION) {
                return Err(Error::Config(format!("voxel label {bad} is not 1 or 2")));
            }
            labels.copy_from_slice(mask);
        }
        Inclusion::Voxels { cells } => {
            for c in cells {
                if c.iter().any(|&v| v >= n) {
                    return Err(Error::Config(format!("voxel {c:?} outside the {n}³ grid")));
                }
                labels[grid.cell_index(*c)] = INCLUSION;
            }
        }
    }

    let count2 = labels.iter().filter(|&&l| l == INCLUSION).count();
    let count1 = labels.len() - count2;
    if count1 == 0 {
        return Err(Error::DegenerateGeometry("matrix phase is empty".into()));
    }
    if count2 == 0 && !allow_empty {
        return Err(Error::DegenerateGeometry("inclusion phase is empty".into()));
    }
    let interface_faces = interface_faces(&grid, &labels);
    let h = grid.spacing();
    let cell_volume = h * h * h;
    let strictly_interior = (0..labels.len())
        .filter(|&c| labels[c] == INCLUSION)
        .all(|c| grid.cell_coords(c).iter().all(|&v| v > 0 && v + 1 < n));
    Ok(UnitCellMesh {
        resolution: n,
        grid,
        interface_area: interface_faces.len() as f64 * h * h,
        interface_faces,
        phase_volumes: [count1 as f64 * cell_volume, count2 as f64 * cell_volume],
        labels,
        strictly_interior,
    })
}

fn interface_faces(grid: &Grid, labels: &[u8]) -> Vec<Face> {
    let mut faces = Vec::new();
    for cell in 0..grid.num_cells() {
        for axis in 0..3 {
            if let Some(other) = grid.upper_neighbour(cell, axis) {
                if labels[cell] != labels[other] {
                    faces.push(Face { cell, other, axis });
                }
            }
        }
    }
    faces
}

impl UnitCellMesh {
    pub fn label(&self, cell: usize) -> u8 {
        self.labels[cell]
    }

    /// Lattice points `(n+1)³` of the closed cell.
    pub fn lattice_points(&self) -> usize {
        (self.resolution + 1).pow(3)
    }

    /// Pairs of closed-lattice indices identified by periodicity: each point
    /// on `x_axis = 0` with its translate on `x_axis = 1`.
    pub fn periodic_map(&self) -> Vec<(usize, usize)> {
        let n = self.resolution;
        let m = n + 1;
        let idx = |p: [usize; 3]| p[0] + m * (p[1] + m * p[2]);
        let mut pairs = Vec::new();
        for axis in 0..3 {
            for a in 0..m {
                for b in 0..m {
                    let mut p = [0; 3];
                    let (t1, t2) = crate::fem::element::tangents(axis);
                    p[t1] = a;
                    p[t2] = b;
                    let lo = idx(p);
                    p[axis] = n;
                    pairs.push((lo, idx(p)));
                }
            }
        }
        pairs
    }

    /// Label at a point of the cell (wrapped into `[0,1)³`).
    pub fn label_at(&self, y: [f64; 3]) -> u8 {
        self.labels[self.grid.locate(y).0]
    }
}

/// The unit cell repeated `1/ε` times per axis over `Ω = (0,1)³`.
#[derive(Clone, Debug)]
pub struct MicroMesh {
    pub epsilon: f64,
    /// Cell copies per axis, `1/ε`.
    pub copies: usize,
    pub cell_resolution: usize,
    pub grid: Grid,
    pub labels: Vec<u8>,
    pub interface_faces: Vec<Face>,
    /// For every node, its phase-1 and phase-2 scalar index, or [`NO_DOF`]
    /// when the node does not touch that phase. Interface nodes carry both.
    pub scalar_index: Vec<[usize; 2]>,
    pub num_scalar: usize,
    pub boundary_nodes: Vec<usize>,
}

/// Number of copies per axis when `epsilon` is the reciprocal of an integer.
pub fn reciprocal_integer(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0) || !epsilon.is_finite() || epsilon > 1.0 {
        return Err(Error::Scale(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    let k = (1.0 / epsilon).round();
    if (k * epsilon - 1.0).abs() > 1e-9 {
        return Err(Error::Scale(format!(
            "epsilon = {epsilon} is not the reciprocal of an integer"
        )));
    }
    Ok(k as usize)
}

/// Tiles the cell over Ω. The inclusion must be strictly interior unless
/// `allow_boundary` is set.
pub fn tile_micro_domain(cell: &UnitCellMesh, epsilon: f64, allow_boundary: bool) -> Result<MicroMesh> {
    let k = reciprocal_integer(epsilon)?;
    if !cell.strictly_interior && !allow_boundary {
        return Err(Error::MeshContract(
            "inclusion touches the cell boundary; the micro domain needs it strictly inside".into(),
        ));
    }
    let n = cell.resolution;
    let grid = Grid::bounded(k * n);
    let mut labels = vec![MATRIX; grid.num_cells()];
    for (c, l) in labels.iter_mut().enumerate() {
        let p = grid.cell_coords(c);
        *l = cell.labels[cell.grid.cell_index([p[0] % n, p[1] % n, p[2] % n])];
    }
    let interface_faces = interface_faces(&grid, &labels);
    let mut touches = vec![[false; 2]; grid.num_nodes()];
    for c in 0..grid.num_cells() {
        let m = (labels[c] - 1) as usize;
        for node in grid.cell_nodes(c) {
            touches[node][m] = true;
        }
    }
    let mut next = 0;
    let scalar_index = touches
        .iter()
        .map(|t| {
            let mut s = [NO_DOF; 2];
            for m in 0..2 {
                if t[m] {
                    s[m] = next;
                    next += 1;
                }
            }
            s
        })
        .collect();
    let boundary_nodes = (0..grid.num_nodes()).filter(|&i| grid.is_boundary_node(i)).collect();
    Ok(MicroMesh {
        epsilon: 1.0 / k as f64,
        copies: k,
        cell_resolution: n,
        grid,
        labels,
        interface_faces,
        scalar_index,
        num_scalar: next,
        boundary_nodes,
    })
}

impl MicroMesh {
    pub fn interface_area(&self) -> f64 {
        let h = self.grid.spacing();
        self.interface_faces.len() as f64 * h * h
    }

    pub fn num_inclusions(&self) -> usize {
        self.copies.pow(3)
    }

    /// Nodes carrying two scalar unknowns.
    pub fn interface_nodes(&self) -> Vec<usize> {
        (0..self.scalar_index.len())
            .filter(|&i| self.scalar_index[i].iter().all(|&d| d != NO_DOF))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_inclusion_measures() {
        let c = build_unit_cell(4, &Inclusion::centered_cube(0.25)).unwrap();
        assert_eq!(c.phase_volumes[1], 0.125);
        assert_eq!(c.phase_volumes[0] + c.phase_volumes[1], 1.0);
        assert_eq!(c.interface_area, 1.5);
        assert!(c.strictly_interior);
        for f in &c.interface_faces {
            assert_ne!(c.labels[f.cell], c.labels[f.other]);
        }
    }

    #[test]
    fn full_box_is_degenerate() {
        let r = build_unit_cell(
            4,
            &Inclusion::Box {
                lo: [0.0; 3],
                hi: [1.0; 3],
            },
        );
        assert!(matches!(r, Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn misaligned_box() {
        let r = build_unit_cell(4, &Inclusion::centered_cube(0.2));
        assert!(matches!(r, Err(Error::Alignment { .. })));
    }

    #[test]
    fn single_voxel() {
        let c = build_unit_cell(8, &Inclusion::Voxels { cells: vec![[4, 4, 4]] }).unwrap();
        assert_eq!(c.phase_volumes[1], 1.0 / 512.0);
        assert_eq!(c.interface_area, 6.0 / 64.0);
    }

    #[test]
    fn laminate_faces_wrap() {
        let c = build_unit_cell(4, &Inclusion::laminate(0, 0.5, 1.0)).unwrap();
        assert!(!c.strictly_interior);
        // two planes of 1x1, one of them across the periodic boundary
        assert_eq!(c.interface_area, 2.0);
    }

    #[test]
    fn periodic_map_is_an_involution_on_faces() {
        let c = build_unit_cell(3, &Inclusion::Voxels { cells: vec![[1, 1, 1]] }).unwrap();
        let map = c.periodic_map();
        assert_eq!(map.len(), 3 * 16);
        let m = 4;
        for &(a, b) in &map {
            let pa = [a % m, (a / m) % m, a / (m * m)];
            let pb = [b % m, (b / m) % m, b / (m * m)];
            let diff: Vec<_> = (0..3).filter(|&d| pa[d] != pb[d]).collect();
            assert_eq!(diff.len(), 1);
            assert_eq!(pa[diff[0]], 0);
            assert_eq!(pb[diff[0]], 3);
        }
    }

    #[test]
    fn tiling_counts() {
        let c = build_unit_cell(4, &Inclusion::centered_cube(0.25)).unwrap();
        let m = tile_micro_domain(&c, 0.5, false).unwrap();
        assert_eq!(m.grid.num_cells(), 512);
        assert_eq!(m.num_inclusions(), 8);
        let m = tile_micro_domain(&c, 0.25, false).unwrap();
        assert_eq!(m.grid.cells_per_axis(), 16);
        assert!((m.interface_area() - 6.0).abs() < 1e-12);
        assert!(matches!(tile_micro_domain(&c, 0.3, false), Err(Error::Scale(_))));
    }

    #[test]
    fn tiling_with_unit_scale_reproduces_labels() {
        let c = build_unit_cell(4, &Inclusion::centered_cube(0.25)).unwrap();
        let m = tile_micro_domain(&c, 1.0, false).unwrap();
        assert_eq!(m.labels, c.labels);
    }

    #[test]
    fn duplicated_indices_only_on_interface() {
        let c = build_unit_cell(4, &Inclusion::centered_cube(0.25)).unwrap();
        let m = tile_micro_domain(&c, 0.5, false).unwrap();
        // each inclusion is a 2x2x2 voxel block with 3³ nodes, all of them
        // on its surface except the centre
        assert_eq!(m.interface_nodes().len(), 8 * 26);
        let dup = m
            .scalar_index
            .iter()
            .filter(|s| s[0] != NO_DOF && s[1] != NO_DOF)
            .count();
        assert_eq!(dup, 8 * 26);
    }
}
