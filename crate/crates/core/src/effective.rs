//! Effective coefficients of the homogenized model.

use nalgebra::{Matrix3, Matrix6};
use serde::{Deserialize, Serialize};

use crate::cell_problems::{
    affine_strain_values, phase_tensors, solve_all, CellCorrectors, InterfaceReading, PhaseCorrector,
};
use crate::error::{Error, Result};
use crate::fem::assembly::{face_point, vector_dofs, FACE_ORDER};
use crate::fem::element::gauss_1d;
use crate::fem::grid::CORNERS;
use crate::material::{identity3, scale3, transpose3, Mat3, PhaseParameters, VOIGT};
use crate::source::{MacroSources, PhaseSources};
use crate::unit_cell::UnitCellMesh;

/// Relative tolerance of the internal consistency gates.
pub const GATE_TOL: f64 = 1e-8;

/// Every coefficient of the homogenized model, named as in the exported
/// coefficients document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCoefficients {
    /// Homogenized stiffness, raw tensor entries in Voigt order.
    #[serde(rename = "A_hom")]
    pub a_hom: [[f64; 6]; 6],
    #[serde(rename = "B1")]
    pub b1: Mat3,
    #[serde(rename = "B2")]
    pub b2: Mat3,
    #[serde(rename = "D1")]
    pub d1: Mat3,
    #[serde(rename = "D2")]
    pub d2: Mat3,
    #[serde(rename = "C1")]
    pub c1: Mat3,
    #[serde(rename = "C2")]
    pub c2: Mat3,
    #[serde(rename = "K1")]
    pub k1: Mat3,
    #[serde(rename = "K2")]
    pub k2: Mat3,
    #[serde(rename = "L1")]
    pub l1: Mat3,
    #[serde(rename = "L2")]
    pub l2: Mat3,
    pub beta1: f64,
    pub beta2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub phi1_star: f64,
    pub phi2_star: f64,
    pub alpha1_star: f64,
    pub alpha2_star: f64,
    pub c1_star: f64,
    pub c2_star: f64,
    pub gamma1_star: f64,
    pub gamma2_star: f64,
    pub zeta_star: f64,
    pub omega_star: f64,
    pub f_star: crate::source::VectorSource,
    pub g1_star: crate::source::ScalarSource,
    pub g2_star: crate::source::ScalarSource,
    pub h1_star: crate::source::ScalarSource,
    pub h2_star: crate::source::ScalarSource,
    pub volume_fractions: [f64; 2],
    pub interface_area: f64,
    pub cell_resolution: usize,
    pub interface_reading: InterfaceReading,
}

/// Per-phase view of the coefficients used by the macro assembly.
#[derive(Clone, Debug)]
pub struct PhaseBlock {
    pub biot: Mat3,
    pub dilation: Mat3,
    pub coupling: Mat3,
    pub permeability: Mat3,
    pub conductivity: Mat3,
    pub beta: f64,
    pub gamma: f64,
    pub phi_star: f64,
    pub alpha_star: f64,
    pub c_star: f64,
}

impl EffectiveCoefficients {
    pub fn phase(&self, m: usize) -> PhaseBlock {
        if m == 0 {
            PhaseBlock {
                biot: self.b1,
                dilation: self.d1,
                coupling: self.c1,
                permeability: self.k1,
                conductivity: self.l1,
                beta: self.beta1,
                gamma: self.gamma1,
                phi_star: self.phi1_star,
                alpha_star: self.alpha1_star,
                c_star: self.c1_star,
            }
        } else {
            PhaseBlock {
                biot: self.b2,
                dilation: self.d2,
                coupling: self.c2,
                permeability: self.k2,
                conductivity: self.l2,
                beta: self.beta2,
                gamma: self.gamma2,
                phi_star: self.phi2_star,
                alpha_star: self.alpha2_star,
                c_star: self.c2_star,
            }
        }
    }

    pub fn sources(&self) -> MacroSources {
        MacroSources {
            force: self.f_star.clone(),
            fluid: [self.g1_star.clone(), self.g2_star.clone()],
            heat: [self.h1_star.clone(), self.h2_star.clone()],
        }
    }

    pub fn set_sources(&mut self, s: &MacroSources) {
        self.f_star = s.force.clone();
        self.g1_star = s.fluid[0].clone();
        self.g2_star = s.fluid[1].clone();
        self.h1_star = s.heat[0].clone();
        self.h2_star = s.heat[1].clone();
    }

    /// Phase 2 carries unknowns only when it occupies volume.
    pub fn inclusion_active(&self) -> bool {
        self.volume_fractions[1] > 0.0
    }

    /// Storage positivity `φ* c* > (α*)²` for every active phase.
    pub fn validate(&self) -> Result<()> {
        for m in 0..(1 + usize::from(self.inclusion_active())) {
            let p = self.phase(m);
            if p.phi_star * p.c_star <= p.alpha_star * p.alpha_star {
                return Err(Error::WellPosedness(format!(
                    "phase {}: phi* c* = {} does not exceed (alpha*)^2 = {}",
                    m + 1,
                    p.phi_star * p.c_star,
                    p.alpha_star * p.alpha_star
                )));
            }
        }
        if mandel_min_eigenvalue(&self.a_hom) <= 0.0 {
            return Err(Error::WellPosedness(
                "homogenized stiffness is not positive definite".into(),
            ));
        }
        Ok(())
    }
}

/// Smallest eigenvalue of the Voigt matrix in Mandel scaling (shear rows and
/// columns weighted by √2).
pub fn mandel_min_eigenvalue(a: &[[f64; 6]; 6]) -> f64 {
    let s = [1.0, 1.0, 1.0, 2f64.sqrt(), 2f64.sqrt(), 2f64.sqrt()];
    let m = Matrix6::from_fn(|i, j| s[i] * a[i][j] * s[j]);
    let m = 0.5 * (m + m.transpose());
    m.symmetric_eigenvalues().min()
}

pub fn min_eigenvalue3(a: &Mat3) -> f64 {
    let m = Matrix3::from_fn(|i, j| 0.5 * (a[i][j] + a[j][i]));
    m.symmetric_eigenvalues().min()
}

pub fn max_eigenvalue3(a: &Mat3) -> f64 {
    let m = Matrix3::from_fn(|i, j| 0.5 * (a[i][j] + a[j][i]));
    m.symmetric_eigenvalues().max()
}

fn grad_integrals() -> [[f64; 3]; 8] {
    CORNERS.map(|o| o.map(|b| if b == 1 { 0.25 } else { -0.25 }))
}

/// Integral over element `c` of the displacement gradient `∂_j u_i` of the
/// element values `v` (local dof `3 a + i`).
fn element_grad_integral(h: f64, v: &[f64; 24]) -> Mat3 {
    let gi = grad_integrals();
    let mut g = [[0.0; 3]; 3];
    for a in 0..8 {
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] += h * h * v[3 * a + i] * gi[a][j];
            }
        }
    }
    g
}

fn element_values(cell: &UnitCellMesh, w: &[f64], c: usize, a: usize) -> [f64; 24] {
    let dofs = vector_dofs(&cell.grid.cell_nodes(c), |v| 3 * v);
    let (k, l) = VOIGT[a];
    let d = affine_strain_values(cell, c, k, l);
    let mut out = [0.0; 24];
    for r in 0..24 {
        out[r] = w[dofs[r]] + d[r];
    }
    out
}

fn rel_diff6(a: &[[f64; 6]; 6], b: &[[f64; 6]; 6]) -> f64 {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut d: f64 = 0.0;
    for i in 0..6 {
        for j in 0..6 {
            d = d.max((a[i][j] - b[i][j]).abs());
        }
    }
    d / scale
}

/// Homogenized stiffness from the stress average of the corrected strain
/// (first) and from the energy form (second), after checking that both are
/// symmetric and agree.
pub fn homogenized_elasticity(
    cell: &UnitCellMesh,
    params: &PhaseParameters,
    w: &[Vec<f64>; 6],
) -> Result<([[f64; 6]; 6], [[f64; 6]; 6])> {
    let tensors = phase_tensors(params);
    let g = &cell.grid;
    let h = g.spacing();
    let locals: Vec<Vec<[f64; 24]>> = tensors
        .iter()
        .map(|t| crate::fem::element::elastic_stiffness(h, t))
        .collect();
    let mut stress = [[0.0; 6]; 6];
    let mut energy = [[0.0; 6]; 6];
    for c in 0..g.num_cells() {
        let lab = (cell.labels[c] - 1) as usize;
        let t = &tensors[lab];
        let chis: Vec<[f64; 24]> = (0..6).map(|a| element_values(cell, &w[a], c, a)).collect();
        for b in 0..6 {
            let gint = element_grad_integral(h, &chis[b]);
            for (a, &(i, j)) in VOIGT.iter().enumerate() {
                let mut s = 0.0;
                for r in 0..3 {
                    for q in 0..3 {
                        s += t.c[i][j][r][q] * 0.5 * (gint[r][q] + gint[q][r]);
                    }
                }
                stress[a][b] += s;
            }
            let kchi: Vec<f64> = (0..24)
                .map(|r| (0..24).map(|q| locals[lab][r][q] * chis[b][q]).sum())
                .collect();
            for a in 0..6 {
                energy[a][b] += (0..24).map(|r| chis[a][r] * kchi[r]).sum::<f64>();
            }
        }
    }
    let mut st = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            st[i][j] = stress[j][i];
        }
    }
    let asym = rel_diff6(&stress, &st);
    if asym > GATE_TOL {
        return Err(Error::Assembly(format!(
            "homogenized stiffness asymmetric: relative defect {asym:.2e}"
        )));
    }
    let agree = rel_diff6(&stress, &energy);
    if agree > GATE_TOL {
        return Err(Error::Assembly(format!(
            "stress-average and energy forms of the stiffness differ by {agree:.2e}"
        )));
    }
    let mut sym = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            sym[i][j] = 0.5 * (stress[i][j] + stress[j][i]);
        }
    }
    Ok((sym, energy))
}

/// `∫_{Y_m} (δ_ij + div w^ij)` per phase.
pub fn coupling_matrices(cell: &UnitCellMesh, w: &[Vec<f64>; 6]) -> [Mat3; 2] {
    let g = &cell.grid;
    let h = g.spacing();
    let mut div = [[0.0; 6]; 2];
    for c in 0..g.num_cells() {
        let lab = (cell.labels[c] - 1) as usize;
        let dofs = vector_dofs(&g.cell_nodes(c), |v| 3 * v);
        for a in 0..6 {
            let mut v = [0.0; 24];
            for r in 0..24 {
                v[r] = w[a][dofs[r]];
            }
            let gi = element_grad_integral(h, &v);
            div[lab][a] += gi[0][0] + gi[1][1] + gi[2][2];
        }
    }
    let mut out = [[[0.0; 3]; 3]; 2];
    for m in 0..2 {
        for (a, &(i, j)) in VOIGT.iter().enumerate() {
            out[m][i][j] = div[m][a];
            out[m][j][i] = div[m][a];
        }
        for i in 0..3 {
            out[m][i][i] += cell.phase_volumes[m];
        }
    }
    out
}

/// Returns `scale (|Y_m| I + G)` with `G_ij = ∫_{Y_m} ∂_j π^i`.
fn corrected_average(cell: &UnitCellMesh, corr: &PhaseCorrector, m: usize, scale: f64) -> Mat3 {
    let g = if corr.map.num_dofs == 0 {
        [[0.0; 3]; 3]
    } else {
        corr.gradient_integrals(cell)
    };
    let mut out = scale3(&g, scale);
    for i in 0..3 {
        out[i][i] += scale * cell.phase_volumes[m];
    }
    out
}

/// Symmetric part of `m` after checking the defect against `reference`, the
/// size of the uncorrected tensor. Round-off below `1e-13 reference` is
/// flushed to zero so that a vanishing tensor is exactly zero.
fn symmetrized(m: &Mat3, reference: f64, what: &str) -> Result<Mat3> {
    let scale = m
        .iter()
        .flatten()
        .fold(reference.abs(), |a, v| a.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let mut out = *m;
    for i in 0..3 {
        for j in 0..3 {
            let d = (m[i][j] - m[j][i]).abs();
            if d > GATE_TOL * scale {
                return Err(Error::Assembly(format!(
                    "{what} asymmetric: relative defect {:.2e}",
                    d / scale
                )));
            }
            let v = 0.5 * (m[i][j] + m[j][i]);
            out[i][j] = if v.abs() < 1e-13 * scale { 0.0 } else { v };
        }
    }
    Ok(out)
}

/// Biot matrices `B_m = β_m (|Y_m| I + G)` and thermal dilation matrices
/// `D_m = γ_m (|Y_m| I + G)` from the pressure and temperature correctors.
pub fn biot_and_dilation_matrices(
    cell: &UnitCellMesh,
    params: &PhaseParameters,
    pressure: &[PhaseCorrector; 2],
    temperature: &[PhaseCorrector; 2],
) -> ([Mat3; 2], [Mat3; 2]) {
    let b = [0, 1].map(|m| corrected_average(cell, &pressure[m], m, params.phases[m].beta));
    let d = [0, 1].map(|m| corrected_average(cell, &temperature[m], m, params.phases[m].gamma));
    (b, d)
}

/// Permeabilities `𝒦_m = κ_m (|Y_m| I + Gᵀ)` and conductivities `ℒ_m`,
/// symmetrized after an asymmetry gate.
pub fn transport_tensors(
    cell: &UnitCellMesh,
    params: &PhaseParameters,
    pressure: &[PhaseCorrector; 2],
    temperature: &[PhaseCorrector; 2],
) -> Result<([Mat3; 2], [Mat3; 2])> {
    let mut k = [[[0.0; 3]; 3]; 2];
    let mut l = [[[0.0; 3]; 3]; 2];
    for m in 0..2 {
        let ph = &params.phases[m];
        let vol = cell.phase_volumes[m];
        k[m] = symmetrized(
            &transpose3(&corrected_average(cell, &pressure[m], m, ph.kappa)),
            ph.kappa * vol,
            "permeability",
        )?;
        l[m] = symmetrized(
            &transpose3(&corrected_average(cell, &temperature[m], m, ph.conductivity)),
            ph.conductivity * vol,
            "conductivity",
        )?;
    }
    Ok((k, l))
}

/// `∫_Σ f ds` by face quadrature.
pub fn interface_integral(cell: &UnitCellMesh, f: impl Fn([f64; 3]) -> f64) -> f64 {
    let h = cell.grid.spacing();
    let (x, w) = gauss_1d(FACE_ORDER);
    let mut s = 0.0;
    for face in &cell.interface_faces {
        for a in 0..FACE_ORDER {
            for b in 0..FACE_ORDER {
                s += w[a] * w[b] * h * h * f(face_point(&cell.grid, face, [x[a], x[b]]));
            }
        }
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct StarredScalars {
    pub phi: [f64; 2],
    pub alpha: [f64; 2],
    pub capacity: [f64; 2],
    pub gamma: [f64; 2],
    pub zeta: f64,
    pub omega: f64,
    pub sources: MacroSources,
}

pub fn starred_scalars(cell: &UnitCellMesh, params: &PhaseParameters, sources: &PhaseSources) -> StarredScalars {
    let v = cell.phase_volumes;
    let ph = &params.phases;
    StarredScalars {
        phi: [v[0] * ph[0].phi, v[1] * ph[1].phi],
        alpha: [v[0] * ph[0].alpha, v[1] * ph[1].alpha],
        capacity: [v[0] * ph[0].capacity, v[1] * ph[1].capacity],
        gamma: [v[0] * ph[0].gamma, v[1] * ph[1].gamma],
        zeta: interface_integral(cell, |y| params.zeta.eval(y)),
        omega: interface_integral(cell, |y| params.omega.eval(y)),
        sources: sources.starred(v),
    }
}

/// Assembles every coefficient from solved correctors.
pub fn compute(
    cell: &UnitCellMesh,
    params: &PhaseParameters,
    corr: &CellCorrectors,
    sources: &PhaseSources,
) -> Result<EffectiveCoefficients> {
    let (a_hom, _) = homogenized_elasticity(cell, params, &corr.elastic)?;
    let (b, d) = biot_and_dilation_matrices(cell, params, &corr.pressure, &corr.temperature);
    let c = coupling_matrices(cell, &corr.elastic);
    let (k, l) = transport_tensors(cell, params, &corr.pressure, &corr.temperature)?;
    let s = starred_scalars(cell, params, sources);
    let ph = &params.phases;
    let mut out = EffectiveCoefficients {
        a_hom,
        b1: b[0],
        b2: b[1],
        d1: d[0],
        d2: d[1],
        c1: c[0],
        c2: c[1],
        k1: k[0],
        k2: k[1],
        l1: l[0],
        l2: l[1],
        beta1: ph[0].beta,
        beta2: ph[1].beta,
        gamma1: ph[0].gamma,
        gamma2: ph[1].gamma,
        phi1_star: s.phi[0],
        phi2_star: s.phi[1],
        alpha1_star: s.alpha[0],
        alpha2_star: s.alpha[1],
        c1_star: s.capacity[0],
        c2_star: s.capacity[1],
        gamma1_star: s.gamma[0],
        gamma2_star: s.gamma[1],
        zeta_star: s.zeta,
        omega_star: s.omega,
        f_star: Default::default(),
        g1_star: Default::default(),
        g2_star: Default::default(),
        h1_star: Default::default(),
        h2_star: Default::default(),
        volume_fractions: cell.phase_volumes,
        interface_area: cell.interface_area,
        cell_resolution: cell.resolution,
        interface_reading: corr.reading,
    };
    out.set_sources(&s.sources);
    Ok(out)
}

/// Solves the cell problems and assembles the coefficients.
pub fn upscale(
    cell: &UnitCellMesh,
    params: &PhaseParameters,
    sources: &PhaseSources,
) -> Result<(CellCorrectors, EffectiveCoefficients)> {
    let corr = solve_all(cell, params)?;
    let coeffs = compute(cell, params, &corr, sources)?;
    Ok((corr, coeffs))
}

/// Arithmetic (Voigt) and harmonic (Reuss) volume averages of the phase
/// stiffness, in the raw Voigt storage.
pub fn voigt_reuss_bounds(cell: &UnitCellMesh, params: &PhaseParameters) -> ([[f64; 6]; 6], [[f64; 6]; 6]) {
    let s = [1.0, 1.0, 1.0, 2f64.sqrt(), 2f64.sqrt(), 2f64.sqrt()];
    let mut upper = Matrix6::zeros();
    let mut compliance = Matrix6::zeros();
    for m in 0..2 {
        let v = params.phases[m].elastic_tensor().to_voigt();
        let mm = Matrix6::from_fn(|i, j| s[i] * v[i][j] * s[j]);
        upper += cell.phase_volumes[m] * mm;
        if cell.phase_volumes[m] > 0.0 {
            compliance += cell.phase_volumes[m] * mm.try_inverse().expect("phase stiffness invertible");
        }
    }
    let lower = compliance.try_inverse().expect("average compliance invertible");
    let back = |m: Matrix6<f64>| {
        let mut out = [[0.0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                out[i][j] = m[(i, j)] / (s[i] * s[j]);
            }
        }
        out
    };
    (back(upper), back(lower))
}

/// `κ_1 |Y_1|` style upper bound used for the transport tensors.
pub fn transport_upper_bound(cell: &UnitCellMesh, value: f64, m: usize) -> Mat3 {
    scale3(&identity3(), value * cell.phase_volumes[m])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{sample_phase, InterfaceProfile, ShapedProfile};
    use crate::unit_cell::{build_unit_cell, Inclusion};

    #[test]
    fn starred_examples() {
        let cell = build_unit_cell(4, &Inclusion::centered_cube(0.25)).unwrap();
        let mut p = PhaseParameters::homogeneous(sample_phase(), 2.0, 1.0);
        p.phases[1].phi = 0.2;
        let s = starred_scalars(&cell, &p, &PhaseSources::default());
        assert!((s.phi[1] - 0.025).abs() < 1e-15);
        assert!((s.zeta - 3.0).abs() < 1e-12);
        p.zeta = InterfaceProfile::Shaped(ShapedProfile::Affine {
            offset: 1.0,
            gradient: [0.0, 0.0, 1.0],
        });
        let s = starred_scalars(&cell, &p, &PhaseSources::default());
        assert!((s.zeta - 2.25).abs() < 1e-12);
    }

    #[test]
    fn mandel_eigenvalue_of_isotropic() {
        let v = crate::material::ElasticTensor::isotropic(1.0, 2.0).to_voigt();
        // eigenvalues 3λ+2μ and 2μ
        assert!((mandel_min_eigenvalue(&v) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn bounds_collapse_for_homogeneous() {
        let cell = build_unit_cell(4, &Inclusion::centered_cube(0.25)).unwrap();
        let p = PhaseParameters::homogeneous(sample_phase(), 1.0, 1.0);
        let (u, l) = voigt_reuss_bounds(&cell, &p);
        for i in 0..6 {
            for j in 0..6 {
                assert!((u[i][j] - l[i][j]).abs() < 1e-12);
            }
        }
    }
}
