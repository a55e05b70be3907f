//! Periodic corrector problems on the unit cell.
//!
//! Elastic correctors live on all of `Y`; pressure and temperature
//! correctors live on the closure of one phase and satisfy a zero normal
//! flux condition on the interface from that side alone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_elastic_stiffness, assemble_scalar_stiffness, flat, vector_dofs};
use crate::fem::element::{self, gauss_1d};
use crate::fem::grid::CORNERS;
use crate::fem::solver::{pcg, ComponentProjector};
use crate::fem::{CsrMatrix, NO_DOF};
use crate::material::{identity3, scale3, ElasticTensor, Mat3, PhaseParameters, VOIGT};
use crate::unit_cell::UnitCellMesh;

/// Relative residual of every corrector solve.
pub const CORRECTOR_TOL: f64 = 1e-12;

/// How the interface condition of the scalar cell problems is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceReading {
    /// Zero normal flux on the interface from each phase separately.
    #[default]
    PerPhaseZeroFlux,
}

/// Scalar unknowns on the closure of one phase of the cell.
#[derive(Clone, Debug)]
pub struct PhaseNodeMap {
    pub phase: usize,
    /// Periodic node to local dof, or [`NO_DOF`].
    pub node_dof: Vec<usize>,
    pub num_dofs: usize,
    pub projector: ComponentProjector,
}

impl PhaseNodeMap {
    pub fn new(cell: &UnitCellMesh, phase: usize) -> Self {
        let g = &cell.grid;
        let label = phase as u8 + 1;
        let mut node_dof = vec![NO_DOF; g.num_nodes()];
        let mut num_dofs = 0;
        let mut weights = Vec::new();
        let w = g.spacing().powi(3) / 8.0;
        for c in 0..g.num_cells() {
            if cell.labels[c] != label {
                continue;
            }
            for v in g.cell_nodes(c) {
                if node_dof[v] == NO_DOF {
                    node_dof[v] = num_dofs;
                    num_dofs += 1;
                    weights.push(0.0);
                }
                weights[node_dof[v]] += w;
            }
        }
        // union-find over element connectivity
        let mut parent: Vec<usize> = (0..num_dofs).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for c in 0..g.num_cells() {
            if cell.labels[c] != label {
                continue;
            }
            let nodes = g.cell_nodes(c);
            let r0 = find(&mut parent, node_dof[nodes[0]]);
            for v in &nodes[1..] {
                let r = find(&mut parent, node_dof[*v]);
                if r != r0 {
                    parent[r] = r0;
                }
            }
        }
        let mut root_id = vec![u32::MAX; num_dofs];
        let mut next = 0u32;
        let mut comp = vec![0u32; num_dofs];
        for i in 0..num_dofs {
            let r = find(&mut parent, i);
            if root_id[r] == u32::MAX {
                root_id[r] = next;
                next += 1;
            }
            comp[i] = root_id[r];
        }
        Self {
            phase,
            node_dof,
            num_dofs,
            projector: ComponentProjector::new(comp).with_weights(weights),
        }
    }

    pub fn element_dofs(&self, cell: &UnitCellMesh, c: usize) -> Option<[usize; 8]> {
        (cell.labels[c] == self.phase as u8 + 1).then(|| cell.grid.cell_nodes(c).map(|v| self.node_dof[v]))
    }
}

/// Correctors of one phase for the unit gradients `e¹, e², e³`.
#[derive(Clone, Debug)]
pub struct PhaseCorrector {
    pub map: PhaseNodeMap,
    pub fields: [Vec<f64>; 3],
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl PhaseCorrector {
    /// `∇_y` of corrector `i` in element `c` at local point `xi`, or `None`
    /// if `c` is not in this phase.
    pub fn gradient(&self, cell: &UnitCellMesh, i: usize, c: usize, xi: [f64; 3]) -> Option<[f64; 3]> {
        let dofs = self.map.element_dofs(cell, c)?;
        let v = dofs.map(|d| self.fields[i][d]);
        Some(element::interpolate_grad(cell.grid.spacing(), &v, xi))
    }

    /// `∫_{Y_m} ∂_j π^i`, indexed `[i][j]`.
    pub fn gradient_integrals(&self, cell: &UnitCellMesh) -> Mat3 {
        let mut g = [[0.0; 3]; 3];
        let h = cell.grid.spacing();
        let gi = grad_integrals();
        for c in 0..cell.grid.num_cells() {
            let Some(dofs) = self.map.element_dofs(cell, c) else {
                continue;
            };
            for i in 0..3 {
                for a in 0..8 {
                    let v = self.fields[i][dofs[a]];
                    for j in 0..3 {
                        g[i][j] += h * h * v * gi[a][j];
                    }
                }
            }
        }
        g
    }
}

/// `∫_ref ∂_j N_a` on the reference cube.
fn grad_integrals() -> [[f64; 3]; 8] {
    CORNERS.map(|o| o.map(|b| if b == 1 { 0.25 } else { -0.25 }))
}

#[derive(Clone, Debug)]
pub struct CellCorrectors {
    pub resolution: usize,
    /// `w^ij` in Voigt order, three values per periodic node.
    pub elastic: [Vec<f64>; 6],
    pub pressure: [PhaseCorrector; 2],
    pub temperature: [PhaseCorrector; 2],
    pub reading: InterfaceReading,
}

impl CellCorrectors {
    /// Symmetric strain `e_y(w^a)` in element `c` at local point `xi`.
    pub fn elastic_strain(&self, cell: &UnitCellMesh, a: usize, c: usize, xi: [f64; 3]) -> Mat3 {
        strain_of(cell, &self.elastic[a], c, xi)
    }
}

fn strain_of(cell: &UnitCellMesh, field: &[f64], c: usize, xi: [f64; 3]) -> Mat3 {
    let nodes = cell.grid.cell_nodes(c);
    let h = cell.grid.spacing();
    let mut grad = [[0.0; 3]; 3];
    for i in 0..3 {
        let v = nodes.map(|n| field[3 * n + i]);
        grad[i] = element::interpolate_grad(h, &v, xi);
    }
    let mut e = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            e[i][j] = 0.5 * (grad[i][j] + grad[j][i]);
        }
    }
    e
}

/// Nodal values on one element of the affine field `d^{kl}` (symmetrized),
/// unwrapped across the periodic boundary.
pub fn affine_strain_values(cell: &UnitCellMesh, c: usize, k: usize, l: usize) -> [f64; 24] {
    let h = cell.grid.spacing();
    let o = cell.grid.cell_origin(c);
    let mut d = [0.0; 24];
    for (a, p) in CORNERS.iter().enumerate() {
        let y = [o[0] + h * p[0] as f64, o[1] + h * p[1] as f64, o[2] + h * p[2] as f64];
        d[3 * a + l] += 0.5 * y[k];
        d[3 * a + k] += 0.5 * y[l];
    }
    d
}

/// Unwrapped nodal values of `y_i` on an element.
pub fn affine_scalar_values(cell: &UnitCellMesh, c: usize, i: usize) -> [f64; 8] {
    let h = cell.grid.spacing();
    let o = cell.grid.cell_origin(c);
    CORNERS.map(|p| o[i] + h * p[i] as f64)
}

pub fn phase_tensors(params: &PhaseParameters) -> [ElasticTensor; 2] {
    [params.phases[0].elastic_tensor(), params.phases[1].elastic_tensor()]
}

pub(crate) fn elastic_matrix(cell: &UnitCellMesh, tensors: &[ElasticTensor; 2]) -> Result<CsrMatrix> {
    let g = &cell.grid;
    assemble_elastic_stiffness(g, 3 * g.num_nodes(), tensors, |c| {
        Some(((cell.labels[c] - 1) as usize, vector_dofs(&g.cell_nodes(c), |v| 3 * v)))
    })
}

/// Solves the six elastic cell problems.
pub fn solve_elastic_correctors(cell: &UnitCellMesh, params: &PhaseParameters) -> Result<[Vec<f64>; 6]> {
    let tensors = phase_tensors(params);
    let k = elastic_matrix(cell, &tensors)?;
    let g = &cell.grid;
    let n = 3 * g.num_nodes();
    let h = g.spacing();
    let locals: Vec<Vec<f64>> = tensors
        .iter()
        .map(|t| flat(&element::elastic_stiffness(h, t)))
        .collect();
    let proj = ComponentProjector::new((0..n).map(|d| (d % 3) as u32).collect());
    let solve = |a: usize| -> Result<Vec<f64>> {
        let (kk, ll) = VOIGT[a];
        let mut b = vec![0.0; n];
        for c in 0..g.num_cells() {
            let local = &locals[(cell.labels[c] - 1) as usize];
            let d = affine_strain_values(cell, c, kk, ll);
            let dofs = vector_dofs(&g.cell_nodes(c), |v| 3 * v);
            for r in 0..24 {
                let s: f64 = (0..24).map(|q| local[r * 24 + q] * d[q]).sum();
                b[dofs[r]] -= s;
            }
        }
        let mut x = vec![0.0; n];
        pcg(&k, &b, &mut x, CORRECTOR_TOL, 20 * n, Some(&proj))
            .map_err(|e| e.tagged(&format!("elastic corrector {}{}", kk + 1, ll + 1)))?;
        proj.normalize(&mut x);
        Ok(x)
    };
    let fields: Vec<Result<Vec<f64>>> = (0..6).into_par_iter().map(solve).collect();
    let mut out: [Vec<f64>; 6] = Default::default();
    for (a, f) in fields.into_iter().enumerate() {
        out[a] = f?;
    }
    Ok(out)
}

/// Solves `∫_{Y_m} k (eⁱ + ∇π)·∇q = 0` for the three unit directions.
pub fn solve_phase_correctors(
    cell: &UnitCellMesh,
    phase: usize,
    conductivity: f64,
    tag: &str,
) -> Result<PhaseCorrector> {
    if !(conductivity > 0.0) {
        return Err(Error::Material(format!("{tag}: conductivity must be positive")));
    }
    let map = PhaseNodeMap::new(cell, phase);
    let mut warnings = Vec::new();
    if map.num_dofs == 0 {
        return Ok(PhaseCorrector {
            fields: [Vec::new(), Vec::new(), Vec::new()],
            map,
            iterations: 0,
            warnings,
        });
    }
    if map.projector.num_components() > 1 {
        let msg = format!(
            "{tag}: phase {} support has {} connected components; solved per component",
            phase + 1,
            map.projector.num_components()
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let g = &cell.grid;
    let kmat = scale3(&identity3(), conductivity);
    let k = assemble_scalar_stiffness(g, map.num_dofs, &[kmat], |c| map.element_dofs(cell, c).map(|d| (0, d)))?;
    let local = element::scalar_stiffness(g.spacing(), &kmat);
    let mut iterations = 0;
    let mut fields: [Vec<f64>; 3] = Default::default();
    for i in 0..3 {
        let mut b = vec![0.0; map.num_dofs];
        for c in 0..g.num_cells() {
            let Some(dofs) = map.element_dofs(cell, c) else {
                continue;
            };
            let y = affine_scalar_values(cell, c, i);
            for r in 0..8 {
                let s: f64 = (0..8).map(|q| local[r][q] * y[q]).sum();
                b[dofs[r]] -= s;
            }
        }
        let mut x = vec![0.0; map.num_dofs];
        let st = pcg(
            &k,
            &b,
            &mut x,
            CORRECTOR_TOL,
            20 * map.num_dofs + 100,
            Some(&map.projector),
        )
        .map_err(|e| e.tagged(&format!("{tag} corrector {}", i + 1)))?;
        iterations += st.iterations;
        map.projector.normalize(&mut x);
        fields[i] = x;
    }
    Ok(PhaseCorrector {
        map,
        fields,
        iterations,
        warnings,
    })
}

pub fn solve_pressure_correctors(
    cell: &UnitCellMesh,
    params: &PhaseParameters,
    phase: usize,
) -> Result<PhaseCorrector> {
    solve_phase_correctors(cell, phase, params.phases[phase].kappa, "pressure")
}

pub fn solve_temperature_correctors(
    cell: &UnitCellMesh,
    params: &PhaseParameters,
    phase: usize,
) -> Result<PhaseCorrector> {
    solve_phase_correctors(cell, phase, params.phases[phase].conductivity, "temperature")
}

/// Solves every cell problem.
pub fn solve_all(cell: &UnitCellMesh, params: &PhaseParameters) -> Result<CellCorrectors> {
    let elastic = solve_elastic_correctors(cell, params)?;
    let jobs: Vec<(bool, usize)> = vec![(true, 0), (true, 1), (false, 0), (false, 1)];
    let mut scalar: Vec<PhaseCorrector> = jobs
        .into_par_iter()
        .map(|(pressure, m)| {
            if pressure {
                solve_pressure_correctors(cell, params, m)
            } else {
                solve_temperature_correctors(cell, params, m)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let t1 = scalar.pop().unwrap();
    let t0 = scalar.pop().unwrap();
    let p1 = scalar.pop().unwrap();
    let p0 = scalar.pop().unwrap();
    Ok(CellCorrectors {
        resolution: cell.resolution,
        elastic,
        pressure: [p0, p1],
        temperature: [t0, t1],
        reading: InterfaceReading::PerPhaseZeroFlux,
    })
}

/// `∫_Σ k (eⁱ + ∇π^i)·ν` with `ν` pointing out of the corrector's phase.
pub fn interface_flux(cell: &UnitCellMesh, corr: &PhaseCorrector, conductivity: f64, i: usize) -> f64 {
    let label = corr.map.phase as u8 + 1;
    let h = cell.grid.spacing();
    let (x, w) = gauss_1d(2);
    let mut total = 0.0;
    for f in &cell.interface_faces {
        let (c, side) = if cell.labels[f.cell] == label {
            (f.cell, 1)
        } else {
            (f.other, 0)
        };
        let normal = if side == 1 { 1.0 } else { -1.0 };
        let (t1, t2) = element::tangents(f.axis);
        for a in 0..2 {
            for b in 0..2 {
                let mut xi = [0.0; 3];
                xi[f.axis] = side as f64;
                xi[t1] = x[a];
                xi[t2] = x[b];
                let g = corr.gradient(cell, i, c, xi).unwrap();
                let flux = conductivity * ((if f.axis == i { 1.0 } else { 0.0 }) + g[f.axis]);
                total += w[a] * w[b] * h * h * normal * flux;
            }
        }
    }
    total
}

/// `∫_Y A e(w^a + d^a) : e(w^b)` for every pair, which vanishes when the
/// correctors solve their cell problems.
pub fn orthogonality_defect(cell: &UnitCellMesh, params: &PhaseParameters, w: &[Vec<f64>; 6]) -> Result<f64> {
    let tensors = phase_tensors(params);
    let g = &cell.grid;
    let h = g.spacing();
    let locals: Vec<Vec<f64>> = tensors
        .iter()
        .map(|t| flat(&element::elastic_stiffness(h, t)))
        .collect();
    let mut worst: f64 = 0.0;
    let scale = tensors.iter().map(|t| t.to_voigt()[0][0]).fold(0.0, f64::max);
    for a in 0..6 {
        for b in 0..6 {
            let mut s = 0.0;
            for c in 0..g.num_cells() {
                let local = &locals[(cell.labels[c] - 1) as usize];
                let dofs = vector_dofs(&g.cell_nodes(c), |v| 3 * v);
                let (k, l) = VOIGT[a];
                let d = affine_strain_values(cell, c, k, l);
                let chi: Vec<f64> = (0..24).map(|r| w[a][dofs[r]] + d[r]).collect();
                let wb: Vec<f64> = (0..24).map(|r| w[b][dofs[r]]).collect();
                for r in 0..24 {
                    for q in 0..24 {
                        s += chi[r] * local[r * 24 + q] * wb[q];
                    }
                }
            }
            worst = worst.max(s.abs() / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::sample_phase;
    use crate::unit_cell::{build_unit_cell, Inclusion};

    fn contrast_params(factor: f64) -> PhaseParameters {
        let mut p = PhaseParameters::homogeneous(sample_phase(), 1.0, 1.0);
        p.phases[1].lambda *= factor;
        p.phases[1].mu *= factor;
        p
    }

    #[test]
    fn homogeneous_correctors_vanish() {
        let cell = build_unit_cell(4, &Inclusion::centered_cube(0.25)).unwrap();
        let w = solve_elastic_correctors(&cell, &contrast_params(1.0)).unwrap();
        for f in &w {
            assert!(f.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn interior_inclusion_pressure_corrector_is_minus_y() {
        let cell = build_unit_cell(4, &Inclusion::centered_cube(0.25)).unwrap();
        let pc = solve_pressure_correctors(&cell, &contrast_params(2.0), 1).unwrap();
        for c in 0..cell.grid.num_cells() {
            for i in 0..3 {
                if let Some(g) = pc.gradient(&cell, i, c, [0.3, 0.6, 0.2]) {
                    for j in 0..3 {
                        let expect = if i == j { -1.0 } else { 0.0 };
                        assert!((g[j] - expect).abs() < 1e-10);
                    }
                }
            }
        }
        assert!(interface_flux(&cell, &pc, 1.0, 0).abs() < 1e-8);
    }

    #[test]
    fn correctors_have_zero_mean_and_are_orthogonal() {
        let cell = build_unit_cell(4, &Inclusion::centered_cube(0.25)).unwrap();
        let params = contrast_params(5.0);
        let all = solve_all(&cell, &params).unwrap();
        for f in &all.elastic {
            for i in 0..3 {
                let s: f64 = f.iter().skip(i).step_by(3).sum();
                assert!(s.abs() < 1e-10);
            }
        }
        assert!(orthogonality_defect(&cell, &params, &all.elastic).unwrap() < 1e-9);
    }

    #[test]
    fn disconnected_support_is_reported() {
        // two separate inclusion voxels
        let cell = build_unit_cell(
            6,
            &Inclusion::Voxels {
                cells: vec![[1, 1, 1], [4, 4, 4]],
            },
        )
        .unwrap();
        let pc = solve_pressure_correctors(&cell, &contrast_params(1.0), 1).unwrap();
        assert_eq!(pc.map.projector.num_components(), 2);
        assert_eq!(pc.warnings.len(), 1);
    }
}
