//! Comparison of the ε-scale simulation with the homogenized solution.
//!
//! The oscillatory parts are rebuilt from the cell correctors: the
//! displacement corrector `Σ w^{kl} e_kl(u)`, the pressure corrector
//! `Σ π_m^i ∂_i p_m` and the temperature corrector `Σ ϑ_m^i ∂_i θ_m`, each
//! sampled at `y = frac(x/ε)`. Errors are integrated on the DNS mesh with the
//! macro fields interpolated at DNS quadrature points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cell_problems::CellCorrectors;
use crate::coupled::EnergyLedger;
use crate::effective::{upscale, EffectiveCoefficients};
use crate::error::{Error, Result};
use crate::fem::assembly::face_dofs;
use crate::fem::element::{self, face_mass};
use crate::fem::{Grid, SolverOptions};
use crate::macro_solver::{self, MacroSample, MacroState, ScalarBoundary, TimeGrid};
use crate::material::{Mat3, PhaseParameters, VOIGT};
use crate::micro_dns::{setup_micro, InterfaceMode, MicroSimulation, MicroState, MicroSystem};
use crate::source::PhaseSources;
use crate::unit_cell::{tile_micro_domain, UnitCellMesh};

/// Gauss order of the error quadrature on DNS cells.
pub const ERROR_ORDER: usize = 2;

/// Checks that the corrector mesh and the DNS cell mesh are nested; warns
/// when their resolutions differ by more than a factor two.
pub fn check_sampling(corrector_resolution: usize, dns_cell_resolution: usize) -> Result<Option<String>> {
    let (a, b) = (corrector_resolution, dns_cell_resolution);
    if a == 0 || b == 0 || (a % b != 0 && b % a != 0) {
        return Err(Error::Sampling(format!(
            "corrector resolution {a} and DNS cell resolution {b} are not integer multiples"
        )));
    }
    let ratio = a.max(b) / a.min(b);
    Ok((ratio > 2).then(|| {
        let msg = format!("corrector resolution {a} differs from DNS cell resolution {b} by a factor {ratio}");
        log::warn!("{msg}");
        msg
    }))
}

/// Cell correctors evaluated at fast variables.
pub struct Reconstruction<'a> {
    pub cell: &'a UnitCellMesh,
    pub correctors: &'a CellCorrectors,
    pub epsilon: f64,
}

impl Reconstruction<'_> {
    fn locate(&self, x: [f64; 3]) -> (usize, [f64; 3]) {
        let y = x.map(|v| v / self.epsilon);
        self.cell.grid.locate(y)
    }

    /// `e_y(û)` for the macro strain `e`.
    pub fn strain(&self, x: [f64; 3], e: &Mat3) -> Mat3 {
        let (c, xi) = self.locate(x);
        let mut out = [[0.0; 3]; 3];
        for (a, &(k, l)) in VOIGT.iter().enumerate() {
            let w = if k == l { e[k][k] } else { e[k][l] + e[l][k] };
            if w == 0.0 {
                continue;
            }
            let s = self.correctors.elastic_strain(self.cell, a, c, xi);
            for i in 0..3 {
                for j in 0..3 {
                    out[i][j] += w * s[i][j];
                }
            }
        }
        out
    }

    /// `∇_y` of the pressure (`kind` 0) or temperature (`kind` 1) corrector
    /// of phase `m` for the macro gradient `g`. Zero where the cell mesh
    /// places a different phase.
    pub fn scalar_gradient(&self, x: [f64; 3], kind: usize, m: usize, g: [f64; 3]) -> [f64; 3] {
        let (c, xi) = self.locate(x);
        let corr = if kind == 0 {
            &self.correctors.pressure[m]
        } else {
            &self.correctors.temperature[m]
        };
        if corr.map.num_dofs == 0 {
            return [0.0; 3];
        }
        let mut out = [0.0; 3];
        for (i, gi) in g.iter().enumerate() {
            if let Some(d) = corr.gradient(self.cell, i, c, xi) {
                for j in 0..3 {
                    out[j] += gi * d[j];
                }
            }
        }
        out
    }
}

/// L² errors between a DNS state and a macro solution, plain and corrected.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldErrors {
    pub u_l2: f64,
    pub p_l2: [f64; 2],
    pub theta_l2: [f64; 2],
    /// `‖e(u^ε) − e(u)‖`
    pub u_plain: f64,
    pub p_plain: [f64; 2],
    pub theta_plain: [f64; 2],
    /// `‖e(u^ε) − e(u) − e_y(û)‖`
    pub u_corrected: f64,
    pub p_corrected: [f64; 2],
    pub theta_corrected: [f64; 2],
    /// `‖e_y(û)‖`
    pub u_corrector: f64,
    pub p_corrector: [f64; 2],
    pub theta_corrector: [f64; 2],
}

impl FieldErrors {
    /// Corrected errors never exceed plain error plus corrector norm.
    pub fn triangle_defect(&self) -> f64 {
        let mut worst = self.u_corrected - self.u_plain - self.u_corrector;
        for m in 0..2 {
            worst = worst.max(self.p_corrected[m] - self.p_plain[m] - self.p_corrector[m]);
            worst = worst.max(self.theta_corrected[m] - self.theta_plain[m] - self.theta_corrector[m]);
        }
        worst
    }
}

fn sq(v: &[f64; 3]) -> f64 {
    v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
}

fn sq3(m: &Mat3) -> f64 {
    m.iter().map(sq).sum()
}

/// Integrates the errors of `state` against `macro_at` over the DNS mesh.
pub fn field_errors(
    system: &MicroSystem,
    state: &MicroState,
    macro_at: &(dyn Fn([f64; 3]) -> MacroSample + Sync),
    recon: Option<&Reconstruction>,
) -> FieldErrors {
    let d = &system.dofs;
    let g = &d.grid;
    let h = g.spacing();
    let vol = h * h * h;
    let pts = element::gauss_points(ERROR_ORDER);
    // accumulators: u_l2, u_plain, u_corr, u_cn, then per (kind, m) the same four
    let per_cell = |c: usize| -> [f64; 20] {
        let mut acc = [0.0; 20];
        let m = d.phase_of(c);
        let o = g.cell_origin(c);
        let uv = [0, 1, 2].map(|i| state.cell_displacement(d, c, i));
        let sv = [0, 1].map(|k| state.cell_scalar(d, k, c));
        for (xi, w) in &pts {
            let x = [o[0] + h * xi[0], o[1] + h * xi[1], o[2] + h * xi[2]];
            let wt = w * vol;
            let ms = macro_at(x);
            let mut gu = [[0.0; 3]; 3];
            let mut du = [0.0; 3];
            for i in 0..3 {
                du[i] = element::interpolate(&uv[i], *xi) - ms.u[i];
                gu[i] = element::interpolate_grad(h, &uv[i], *xi);
            }
            let e_micro = sym(&gu);
            let e_macro = sym(&ms.grad_u);
            let mut plain = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    plain[i][j] = e_micro[i][j] - e_macro[i][j];
                }
            }
            let cu = recon.map(|r| r.strain(x, &e_macro)).unwrap_or([[0.0; 3]; 3]);
            let mut corr = plain;
            for i in 0..3 {
                for j in 0..3 {
                    corr[i][j] -= cu[i][j];
                }
            }
            acc[0] += wt * sq(&du);
            acc[1] += wt * sq3(&plain);
            acc[2] += wt * sq3(&corr);
            acc[3] += wt * sq3(&cu);
            for kind in 0..2 {
                let (val, grad) = if kind == 0 {
                    (ms.p[m], ms.grad_p[m])
                } else {
                    (ms.theta[m], ms.grad_theta[m])
                };
                let dv = element::interpolate(&sv[kind], *xi) - val;
                let gm = element::interpolate_grad(h, &sv[kind], *xi);
                let plain = [gm[0] - grad[0], gm[1] - grad[1], gm[2] - grad[2]];
                let cg = recon.map(|r| r.scalar_gradient(x, kind, m, grad)).unwrap_or([0.0; 3]);
                let corr = [plain[0] - cg[0], plain[1] - cg[1], plain[2] - cg[2]];
                let b = 4 + 8 * kind + 4 * m;
                acc[b] += wt * dv * dv;
                acc[b + 1] += wt * sq(&plain);
                acc[b + 2] += wt * sq(&corr);
                acc[b + 3] += wt * sq(&cg);
            }
        }
        acc
    };
    let acc = (0..g.num_cells())
        .into_par_iter()
        .map(per_cell)
        .collect::<Vec<_>>()
        .into_iter()
        .fold([0.0; 20], |mut a, c| {
            for (x, y) in a.iter_mut().zip(c) {
                *x += y;
            }
            a
        });
    let r = acc.map(f64::sqrt);
    let pick = |kind: usize, k: usize| [r[4 + 8 * kind + k], r[4 + 8 * kind + 4 + k]];
    FieldErrors {
        u_l2: r[0],
        u_plain: r[1],
        u_corrected: r[2],
        u_corrector: r[3],
        p_l2: pick(0, 0),
        p_plain: pick(0, 1),
        p_corrected: pick(0, 2),
        p_corrector: pick(0, 3),
        theta_l2: pick(1, 0),
        theta_plain: pick(1, 1),
        theta_corrected: pick(1, 2),
        theta_corrector: pick(1, 3),
    }
}

fn sym(g: &Mat3) -> Mat3 {
    let mut e = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            e[i][j] = 0.5 * (g[i][j] + g[j][i]);
        }
    }
    e
}

/// `ε ‖q‖²_Σ / (ε² ‖∇q‖² + ‖q‖²)` over the matrix phase for nodal values `q`.
pub fn trace_ratio(system: &MicroSystem, q: &[f64]) -> f64 {
    let d = &system.dofs;
    let g = &d.grid;
    let h = g.spacing();
    let eps = system.mesh.epsilon;
    let k = element::scalar_stiffness(h, &crate::material::identity3());
    let m = element::mass(h);
    let quad8 = |a: &[[f64; 8]; 8], v: &[f64; 8]| -> f64 {
        (0..8).map(|i| v[i] * (0..8).map(|j| a[i][j] * v[j]).sum::<f64>()).sum()
    };
    let (mut grad, mut l2) = (0.0, 0.0);
    for c in 0..g.num_cells() {
        if d.phase_of(c) != 0 {
            continue;
        }
        let v = g.cell_nodes(c).map(|n| q[n]);
        grad += quad8(&k, &v);
        l2 += quad8(&m, &v);
    }
    let fm = face_mass(h, 2, |_| 1.0);
    let mut trace = 0.0;
    for f in &system.mesh.interface_faces {
        let mc = f.matrix_cell(&system.mesh.labels);
        let n = face_dofs(g, f, mc, |v| v);
        let v = n.map(|i| q[i]);
        trace += (0..4)
            .map(|a| v[a] * (0..4).map(|b| fm[a][b] * v[b]).sum::<f64>())
            .sum::<f64>();
    }
    eps * trace / (eps * eps * grad + l2)
}

/// Largest trace ratio over a fixed family of smooth test functions plus
/// the given extra fields.
pub fn trace_constant(system: &MicroSystem, extra: &[&[f64]]) -> f64 {
    use std::f64::consts::PI;
    let g = &system.dofs.grid;
    let fields: Vec<Box<dyn Fn([f64; 3]) -> f64>> = vec![
        Box::new(|_| 1.0),
        Box::new(|x| x[0]),
        Box::new(|x| (PI * x[0]).sin() * (PI * x[1]).sin() * (PI * x[2]).sin()),
        Box::new(|x| (2.0 * PI * x[1]).cos() + x[2] * x[2]),
    ];
    let mut best = 0.0f64;
    for f in &fields {
        let q: Vec<f64> = (0..g.num_nodes()).map(|v| f(g.node_position(v))).collect();
        best = best.max(trace_ratio(system, &q));
    }
    for q in extra {
        if q.iter().any(|&v| v != 0.0) {
            best = best.max(trace_ratio(system, q));
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub dns_grid: usize,
    pub scalar_unknowns: usize,
    pub errors: FieldErrors,
    pub trace_constant: f64,
    /// Previous row's corrected error over this row's, for u, p₁, θ₁.
    pub ratios: Option<[f64; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub macro_resolution: usize,
    pub cell_resolution: usize,
    pub final_time: f64,
    /// Corrected errors of u, p₁, θ₁ decrease along the rows.
    pub monotone: [bool; 3],
    pub warnings: Vec<String>,
}

impl ConvergenceReport {
    pub const CSV_HEADER: &'static str = "epsilon,dns_grid,scalar_unknowns,u_l2,p1_l2,p2_l2,theta1_l2,theta2_l2,\
u_plain,p1_plain,theta1_plain,u_corrected,p1_corrected,p2_corrected,theta1_corrected,theta2_corrected,\
u_corrector,p1_corrector,theta1_corrector,trace_constant,ratio_u,ratio_p1,ratio_theta1";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let e = &r.errors;
            let vals = [
                e.u_l2,
                e.p_l2[0],
                e.p_l2[1],
                e.theta_l2[0],
                e.theta_l2[1],
                e.u_plain,
                e.p_plain[0],
                e.theta_plain[0],
                e.u_corrected,
                e.p_corrected[0],
                e.p_corrected[1],
                e.theta_corrected[0],
                e.theta_corrected[1],
                e.u_corrector,
                e.p_corrector[0],
                e.theta_corrector[0],
                r.trace_constant,
            ];
            s.push_str(&format!("{:e},{},{}", r.epsilon, r.dns_grid, r.scalar_unknowns));
            for v in vals {
                s.push_str(&format!(",{v:e}"));
            }
            match r.ratios {
                Some(q) => s.push_str(&format!(",{:e},{:e},{:e}", q[0], q[1], q[2])),
                None => s.push_str(",,,"),
            }
            s.push('\n');
        }
        s
    }
}

/// Physical setup shared by the macro run and every DNS run.
#[derive(Clone, Debug)]
pub struct StudySetup {
    pub cell: UnitCellMesh,
    pub params: PhaseParameters,
    pub sources: PhaseSources,
    pub time: TimeGrid,
    pub macro_resolution: usize,
    pub eps_list: Vec<f64>,
    pub mode: InterfaceMode,
    pub desk_cap: usize,
    pub solver: SolverOptions,
    /// Run the ε-sweep on the thread pool.
    pub parallel: bool,
}

/// Everything produced by a convergence study.
pub struct StudyOutput {
    pub report: ConvergenceReport,
    pub coefficients: EffectiveCoefficients,
    pub macro_final: MacroState,
    pub macro_ledger: EnergyLedger,
}

/// Upscales, runs the macro model once and one DNS per ε, and compares at
/// the final time.
pub fn convergence_study(setup: &StudySetup) -> Result<StudyOutput> {
    if setup.eps_list.is_empty() {
        return Err(Error::Config("eps_list is empty".into()));
    }
    let mut eps: Vec<f64> = setup.eps_list.clone();
    for &e in &eps {
        crate::unit_cell::reciprocal_integer(e)?;
    }
    eps.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    eps.dedup();
    let mut warnings = Vec::new();
    if let Some(w) = check_sampling(setup.cell.resolution, setup.cell.resolution)? {
        warnings.push(w);
    }
    let (correctors, coeffs) = upscale(&setup.cell, &setup.params, &setup.sources)?;
    let (msys, mrun) = macro_solver::run(
        &coeffs,
        setup.macro_resolution,
        ScalarBoundary::Mixed,
        &setup.time,
        &setup.solver,
    )?;
    let macro_grid: Grid = msys.dofs.grid;
    let macro_final = mrun.final_state.clone();
    let one = |e: f64| -> Result<ConvergenceRow> {
        let mesh = tile_micro_domain(&setup.cell, e, false)?;
        let sys = setup_micro(&mesh, &setup.params, setup.mode, setup.desk_cap)?;
        let sim = MicroSimulation::new(&sys, setup.time.dt, &setup.sources, &setup.solver)?;
        let run = sim.run(&setup.time)?;
        let recon = Reconstruction {
            cell: &setup.cell,
            correctors: &correctors,
            epsilon: mesh.epsilon,
        };
        let at = |x: [f64; 3]| macro_final.sample(&macro_grid, x);
        let errors = field_errors(&sys, &run.final_state, &at, Some(&recon));
        if errors.triangle_defect() > 1e-10 * (1.0 + errors.u_plain) {
            return Err(Error::Assembly(format!(
                "error norms violate the triangle inequality at epsilon = {e}"
            )));
        }
        let trace = trace_constant(&sys, &[&run.final_state.p[0]]);
        Ok(ConvergenceRow {
            epsilon: mesh.epsilon,
            dns_grid: sys.dofs.grid.cells_per_axis(),
            scalar_unknowns: sys.dofs.num_scalar,
            errors,
            trace_constant: trace,
            ratios: None,
        })
    };
    let results: Vec<Result<ConvergenceRow>> = if setup.parallel {
        eps.par_iter().map(|&e| one(e)).collect()
    } else {
        eps.iter().map(|&e| one(e)).collect()
    };
    let mut rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    let key = |r: &ConvergenceRow| {
        [
            r.errors.u_corrected,
            r.errors.p_corrected[0],
            r.errors.theta_corrected[0],
        ]
    };
    let mut monotone = [true; 3];
    for i in 1..rows.len() {
        let (a, b) = (key(&rows[i - 1]), key(&rows[i]));
        rows[i].ratios = Some([0, 1, 2].map(|k| if b[k] > 0.0 { a[k] / b[k] } else { f64::INFINITY }));
        for k in 0..3 {
            if b[k] >= a[k] {
                monotone[k] = false;
            }
        }
    }
    for (k, name) in ["u", "p1", "theta1"].iter().enumerate() {
        if !monotone[k] {
            let msg = format!("corrected {name} error does not decrease monotonically in epsilon");
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    Ok(StudyOutput {
        report: ConvergenceReport {
            rows,
            macro_resolution: setup.macro_resolution,
            cell_resolution: setup.cell.resolution,
            final_time: macro_final.time,
            monotone,
            warnings,
        },
        coefficients: coeffs,
        macro_final,
        macro_ledger: mrun.ledger,
    })
}

/// Residuals of the pressure and thermal energy identities of a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    pub pressure: f64,
    pub thermal: f64,
    pub pressure_relative: f64,
    pub thermal_relative: f64,
}

pub fn energy_identity_residual(ledger: &EnergyLedger) -> IdentityResiduals {
    IdentityResiduals {
        pressure: ledger.pressure.residual(),
        thermal: ledger.thermal.residual(),
        pressure_relative: ledger.pressure.relative_residual(),
        thermal_relative: ledger.thermal.relative_residual(),
    }
}

/// Outcome of one analytic self check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, value: f64, limit: f64) -> SelfCheck {
    SelfCheck {
        name: name.into(),
        passed: value <= limit,
        detail: format!("{value:.3e} (limit {limit:.0e})"),
    }
}

fn max_entry_diff(a: &[&[f64]], b: &[&[f64]]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

/// Quick closed-form checks of the whole pipeline on small meshes.
pub fn selftest() -> Result<Vec<SelfCheck>> {
    use crate::material::{identity3, Phase};
    use crate::micro_dns::{unit_jump_energy, DESK_CAP};
    use crate::unit_cell::{build_unit_cell, Inclusion};

    let base = Phase {
        lambda: 2.0,
        mu: 1.0,
        beta: 0.8,
        gamma: 0.3,
        alpha: 0.1,
        phi: 0.5,
        kappa: 1.0,
        conductivity: 1.5,
        capacity: 1.2,
    };
    let mut stiff = base.clone();
    stiff.lambda = 4.0;
    stiff.mu = 2.0;
    stiff.kappa = 2.0;
    stiff.conductivity = 3.0;
    let none = PhaseSources::default();
    let cube = build_unit_cell(4, &Inclusion::centered_cube(0.25))?;
    let mut out = Vec::new();

    let same = PhaseParameters::homogeneous(base.clone(), 1.0, 1.0);
    let (corr, c) = upscale(&cube, &same, &none)?;
    let a1 = base.elastic_tensor().to_voigt();
    let scale = a1.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let rows: Vec<&[f64]> = c.a_hom.iter().map(|r| &r[..]).collect();
    let refs: Vec<&[f64]> = a1.iter().map(|r| &r[..]).collect();
    out.push(check(
        "homogeneous stiffness",
        max_entry_diff(&rows, &refs) / scale,
        1e-8,
    ));
    let w = corr.elastic.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    out.push(check("homogeneous displacement correctors", w, 1e-8));
    let v2 = cube.phase_volumes[1];
    let c2 = identity3().map(|r| r.map(|x| x * v2));
    let d: f64 = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| (c.c2[i][j] - c2[i][j]).abs())
        .fold(0.0, f64::max);
    out.push(check("homogeneous coupling matrix", d / v2, 1e-8));

    let mut contrast = PhaseParameters::homogeneous(base.clone(), 1.0, 1.0);
    contrast.phases[1] = stiff.clone();
    let (_, c) = upscale(&cube, &contrast, &none)?;
    let inner = [&c.k2, &c.l2, &c.b2, &c.d2]
        .iter()
        .flat_map(|m| m.iter().flatten())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    out.push(check("interior inclusion transport", inner, 1e-8));
    let mut cross = 0.0f64;
    let mut sum = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            cross = cross.max((base.beta * c.k1[i][j] - base.kappa * c.b1[j][i]).abs());
            cross = cross.max((base.gamma * c.l1[i][j] - base.conductivity * c.d1[j][i]).abs());
            let id = if i == j { 1.0 } else { 0.0 };
            sum = sum.max((c.c1[i][j] + c.c2[i][j] - id).abs());
        }
    }
    out.push(check("permeability-Biot cross identity", cross, 1e-8));
    out.push(check("coupling matrices sum to identity", sum, 1e-8));

    let layer = build_unit_cell(8, &Inclusion::laminate(0, 0.25, 0.75))?;
    let (_, c) = upscale(&layer, &contrast, &none)?;
    let v1 = layer.phase_volumes[0];
    out.push(check("laminate blocked permeability", c.k1[0][0].abs(), 1e-6));
    out.push(check(
        "laminate in-plane permeability",
        (c.k1[1][1] - base.kappa * v1).abs() / (base.kappa * v1),
        1e-6,
    ));

    let energies: Vec<f64> = [0.5, 0.25]
        .iter()
        .map(|&e| -> Result<f64> {
            let mesh = tile_micro_domain(&cube, e, false)?;
            Ok(unit_jump_energy(&setup_micro(
                &mesh,
                &contrast,
                InterfaceMode::Duplicated,
                DESK_CAP,
            )?))
        })
        .collect::<Result<_>>()?;
    out.push(check(
        "interface energy independent of epsilon",
        (energies[0] - energies[1]).abs() / energies[0],
        1e-12,
    ));

    let mut diffusion = contrast.clone();
    for ph in &mut diffusion.phases {
        ph.beta = 0.0;
        ph.gamma = 0.0;
        ph.alpha = 0.0;
    }
    let mut src = PhaseSources::default();
    src.fluid[0] =
        crate::source::ScalarSource::single(1.0, crate::source::Shape::SineBump, crate::source::Profile::Constant);
    src.heat[1] = crate::source::ScalarSource::constant(0.5);
    let (_, c) = upscale(&cube, &diffusion, &src)?;
    let tg = TimeGrid {
        dt: 0.05,
        t_end: 0.2,
        output_every: 4,
    };
    let (_, run) = macro_solver::run(&c, 4, ScalarBoundary::Mixed, &tg, &SolverOptions::default())?;
    let r = energy_identity_residual(&run.ledger);
    out.push(check(
        "energy identity, pure diffusion",
        r.pressure_relative.max(r.thermal_relative),
        1e-8,
    ));
    Ok(out)
}
