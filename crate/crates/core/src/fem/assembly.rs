//! Element loops shared by the cell, macro and micro problems.
//!
//! All grids are uniform, so element matrices depend on the material label
//! only and are computed once per label.

use super::element::{self, face_mass, face_nodes};
use super::grid::Grid;
use super::sparse::{assemble, CsrMatrix, Sink, NO_DOF};
use crate::error::{Error, Result};
use crate::material::{ElasticTensor, Mat3};
use crate::unit_cell::Face;

/// Flattens an `r × c` array of rows into row-major storage.
pub fn flat<const C: usize>(rows: &[[f64; C]]) -> Vec<f64> {
    rows.iter().flat_map(|r| r.iter().copied()).collect()
}

/// Scalar diffusion matrix `∫ k ∇p·∇q` over the cells selected by `element`,
/// which returns the label (index into `coefficients`) and the element dofs.
pub fn assemble_scalar_stiffness(
    grid: &Grid,
    ndofs: usize,
    coefficients: &[Mat3],
    element: impl Fn(usize) -> Option<(usize, [usize; 8])>,
) -> Result<CsrMatrix> {
    let h = grid.spacing();
    for k in coefficients {
        if !(k[0][0] >= 0.0 && k[1][1] >= 0.0 && k[2][2] >= 0.0) {
            return Err(Error::Material(format!("negative diffusion coefficient {k:?}")));
        }
    }
    let locals: Vec<Vec<f64>> = coefficients
        .iter()
        .map(|k| flat(&element::scalar_stiffness(h, k)))
        .collect();
    let any = (0..grid.num_cells()).any(|c| element(c).is_some());
    if !any {
        return Err(Error::DegenerateGeometry("empty support for scalar stiffness".into()));
    }
    Ok(assemble(ndofs, ndofs, |s: &mut dyn Sink| {
        for c in 0..grid.num_cells() {
            if let Some((label, dofs)) = element(c) {
                s.add(&dofs, &dofs, &locals[label]);
            }
        }
    }))
}

/// Elasticity matrix `∫ C e(u):e(v)` with element dofs `3 a + i`.
pub fn assemble_elastic_stiffness(
    grid: &Grid,
    ndofs: usize,
    tensors: &[ElasticTensor],
    element: impl Fn(usize) -> Option<(usize, [usize; 24])>,
) -> Result<CsrMatrix> {
    for t in tensors {
        let v = t.to_voigt();
        if !(v[5][5] > 0.0) {
            return Err(Error::Material(format!(
                "shear modulus must be positive, got {}",
                v[5][5]
            )));
        }
    }
    let h = grid.spacing();
    let locals: Vec<Vec<f64>> = tensors
        .iter()
        .map(|t| flat(&element::elastic_stiffness(h, t)))
        .collect();
    Ok(assemble(ndofs, ndofs, |s: &mut dyn Sink| {
        for c in 0..grid.num_cells() {
            if let Some((label, dofs)) = element(c) {
                s.add(&dofs, &dofs, &locals[label]);
            }
        }
    }))
}

/// Scalar dofs of the four nodes of `face` on the side of `cell`.
pub fn face_dofs(grid: &Grid, face: &Face, cell: usize, node_dof: impl Fn(usize) -> usize) -> [usize; 4] {
    let nodes = grid.cell_nodes(cell);
    let side = usize::from(cell == face.cell);
    face_nodes(face.axis, side).map(|a| node_dof(nodes[a]))
}

/// Physical position of a face-local point `s ∈ [0,1]²` on `face`.
pub fn face_point(grid: &Grid, face: &Face, s: [f64; 2]) -> [f64; 3] {
    let h = grid.spacing();
    let o = grid.cell_origin(face.cell);
    let (t1, t2) = element::tangents(face.axis);
    let mut x = o;
    x[face.axis] += h;
    x[t1] += s[0] * h;
    x[t2] += s[1] * h;
    x
}

/// Face quadrature order used for interface integrals.
pub const FACE_ORDER: usize = 3;

/// Jump coupling `∫_Σ w (p₁ − p₂)(q₁ − q₂)` over the listed faces, with
/// `weight` evaluated at physical face points. `dofs(face)` returns the side-1
/// and side-2 dofs of the face nodes, each ordered consistently.
pub fn assemble_interface_coupling(
    grid: &Grid,
    ndofs: usize,
    faces: &[Face],
    weight: impl Fn([f64; 3]) -> f64,
    dofs: impl Fn(&Face) -> Result<([usize; 4], [usize; 4])>,
) -> Result<CsrMatrix> {
    let h = grid.spacing();
    let mut blocks = Vec::with_capacity(faces.len());
    for f in faces {
        let (d1, d2) = dofs(f)?;
        if d1.iter().chain(&d2).any(|&d| d == NO_DOF) {
            return Err(Error::MeshContract(format!(
                "interface face {f:?} lacks duplicated unknowns"
            )));
        }
        let m = face_mass(h, FACE_ORDER, |s| weight(face_point(grid, f, s)));
        let mut rows = [0usize; 8];
        rows[..4].copy_from_slice(&d1);
        rows[4..].copy_from_slice(&d2);
        let mut local = vec![0.0; 64];
        for a in 0..8 {
            for b in 0..8 {
                let sign = if (a < 4) == (b < 4) { 1.0 } else { -1.0 };
                local[a * 8 + b] = sign * m[a % 4][b % 4];
            }
        }
        blocks.push((rows, local));
    }
    Ok(assemble(ndofs, ndofs, |s: &mut dyn Sink| {
        for (rows, local) in &blocks {
            s.add(rows, rows, local);
        }
    }))
}

/// Consistent load `∫ f N_a` of a scalar source over selected cells, by
/// `order`-point Gauss quadrature.
pub fn scalar_load(
    grid: &Grid,
    ndofs: usize,
    order: usize,
    element: impl Fn(usize) -> Option<[usize; 8]>,
    f: impl Fn(usize, [f64; 3]) -> f64,
) -> Vec<f64> {
    let h = grid.spacing();
    let vol = h * h * h;
    let pts = element::gauss_points(order);
    let mut out = vec![0.0; ndofs];
    for c in 0..grid.num_cells() {
        let Some(dofs) = element(c) else { continue };
        let o = grid.cell_origin(c);
        let mut local = [0.0; 8];
        for (xi, w) in &pts {
            let x = [o[0] + h * xi[0], o[1] + h * xi[1], o[2] + h * xi[2]];
            let v = f(c, x) * w * vol;
            if v == 0.0 {
                continue;
            }
            let n = element::shape(*xi);
            for a in 0..8 {
                local[a] += v * n[a];
            }
        }
        for a in 0..8 {
            if dofs[a] != NO_DOF {
                out[dofs[a]] += local[a];
            }
        }
    }
    out
}

/// Consistent load `∫ f·v` of a vector source.
pub fn vector_load(
    grid: &Grid,
    ndofs: usize,
    order: usize,
    element: impl Fn(usize) -> Option<[usize; 24]>,
    f: impl Fn(usize, [f64; 3]) -> [f64; 3],
) -> Vec<f64> {
    let h = grid.spacing();
    let vol = h * h * h;
    let pts = element::gauss_points(order);
    let mut out = vec![0.0; ndofs];
    for c in 0..grid.num_cells() {
        let Some(dofs) = element(c) else { continue };
        let o = grid.cell_origin(c);
        let mut local = [0.0; 24];
        for (xi, w) in &pts {
            let x = [o[0] + h * xi[0], o[1] + h * xi[1], o[2] + h * xi[2]];
            let v = f(c, x);
            if v == [0.0; 3] {
                continue;
            }
            let n = element::shape(*xi);
            for a in 0..8 {
                for i in 0..3 {
                    local[3 * a + i] += v[i] * w * vol * n[a];
                }
            }
        }
        for k in 0..24 {
            if dofs[k] != NO_DOF {
                out[dofs[k]] += local[k];
            }
        }
    }
    out
}

/// Expands node dofs to the 24 vector dofs `3 a + i` of an element.
pub fn vector_dofs(nodes: &[usize; 8], node_base: impl Fn(usize) -> usize) -> [usize; 24] {
    let mut d = [NO_DOF; 24];
    for a in 0..8 {
        let b = node_base(nodes[a]);
        if b != NO_DOF {
            for i in 0..3 {
                d[3 * a + i] = b + i;
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{identity3, scale3};
    use crate::unit_cell::{build_unit_cell, Inclusion, MATRIX};

    fn periodic_field(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
        (0..grid.num_nodes()).map(|i| f(grid.node_position(i))).collect()
    }

    /// Energy of the unwrapped affine field `y_axis` assembled element by element.
    fn affine_energy(grid: &Grid, local: impl Fn(usize) -> Option<Vec<f64>>, axis: usize) -> f64 {
        let h = grid.spacing();
        let mut e = 0.0;
        for c in 0..grid.num_cells() {
            let Some(k) = local(c) else { continue };
            let o = grid.cell_origin(c);
            let v: Vec<f64> = crate::fem::grid::CORNERS
                .iter()
                .map(|p| o[axis] + h * p[axis] as f64)
                .collect();
            for a in 0..8 {
                for b in 0..8 {
                    e += v[a] * k[a * 8 + b] * v[b];
                }
            }
        }
        e
    }

    #[test]
    fn constants_in_kernel() {
        let g = Grid::periodic(4);
        let k = assemble_scalar_stiffness(&g, g.num_nodes(), &[identity3()], |c| Some((0, g.cell_nodes(c)))).unwrap();
        let one = vec![1.0; g.num_nodes()];
        assert!(k.apply(&one).iter().all(|v| v.abs() < 1e-14));
        assert!(k.asymmetry() == 0.0);
    }

    #[test]
    fn linear_field_energies() {
        let g = Grid::bounded(4);
        let k = assemble_scalar_stiffness(&g, g.num_nodes(), &[identity3()], |c| Some((0, g.cell_nodes(c)))).unwrap();
        let v = periodic_field(&g, |x| x[0]);
        assert!((k.bilinear(&v, &v) - 1.0).abs() < 1e-12);

        let cell = build_unit_cell(4, &Inclusion::centered_cube(0.25)).unwrap();
        let h = cell.grid.spacing();
        let local = flat(&element::scalar_stiffness(h, &scale3(&identity3(), 2.0)));
        let e = affine_energy(&cell.grid, |c| (cell.labels[c] == MATRIX).then(|| local.clone()), 0);
        assert!((e - 2.0 * cell.phase_volumes[0]).abs() < 1e-12);
    }

    #[test]
    fn elastic_kernel_and_affine_energy() {
        let g = Grid::periodic(3);
        let t = ElasticTensor::isotropic(2.0, 1.5);
        let n = g.num_nodes();
        let k = assemble_elastic_stiffness(&g, 3 * n, std::slice::from_ref(&t), |c| {
            Some((0, vector_dofs(&g.cell_nodes(c), |v| 3 * v)))
        })
        .unwrap();
        for d in 0..3 {
            let mut u = vec![0.0; 3 * n];
            for i in 0..n {
                u[3 * i + d] = 1.0;
            }
            assert!(k.apply(&u).iter().all(|v| v.abs() < 1e-13));
        }
        // affine u = y₁ e₁ on a bounded grid
        let b = Grid::bounded(3);
        let nb = b.num_nodes();
        let kb = assemble_elastic_stiffness(&b, 3 * nb, &[t], |c| {
            Some((0, vector_dofs(&b.cell_nodes(c), |v| 3 * v)))
        })
        .unwrap();
        let mut u = vec![0.0; 3 * nb];
        for i in 0..nb {
            u[3 * i] = b.node_position(i)[0];
        }
        assert!((kb.bilinear(&u, &u) - 5.0).abs() < 1e-12);
        assert!(kb.asymmetry() <= 1e-12 * kb.max_abs());
    }

    #[test]
    fn nonpositive_shear_rejected() {
        let g = Grid::periodic(2);
        let r = assemble_elastic_stiffness(&g, 24, &[ElasticTensor::isotropic(1.0, 0.0)], |_| None);
        assert!(matches!(r, Err(Error::Material(_))));
    }

    #[test]
    fn interior_residual_of_affine_field_vanishes() {
        let g = Grid::bounded(4);
        let k = assemble_scalar_stiffness(&g, g.num_nodes(), &[identity3()], |c| Some((0, g.cell_nodes(c)))).unwrap();
        let v = periodic_field(&g, |x| 0.3 + x[0] - 2.0 * x[1] + 0.5 * x[2]);
        let r = k.apply(&v);
        for i in 0..g.num_nodes() {
            if !g.is_boundary_node(i) {
                assert!(r[i].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn missing_duplicates_is_contract_error() {
        let g = Grid::bounded(2);
        let faces = [Face {
            cell: 0,
            other: 1,
            axis: 0,
        }];
        let r = assemble_interface_coupling(&g, 10, &faces, |_| 1.0, |_| Ok(([0, 1, 2, 3], [4, 5, 6, NO_DOF])));
        assert!(matches!(r, Err(Error::MeshContract(_))));
    }
}
