//! Direct simulation of the ε-periodic micro model on the tiled mesh.
//!
//! Displacement is continuous. Pressure and temperature carry one unknown
//! per (node, phase) so that interface nodes hold a value on each side; the
//! barrier terms couple the two sides through a weighted face mass on the
//! jump.

use serde::{Deserialize, Serialize};

use crate::coupled::{assemble_shared, CoupledOperator, EnergyLedger, FieldKind, Stepper};
use crate::error::{Error, Result};
use crate::fem::assembly::{face_dofs, flat, scalar_load, vector_dofs, vector_load};
use crate::fem::element::{face_mass, gradient_coupling, mass, scalar_stiffness, strain_coupling};
use crate::fem::sparse::{dot, Sink};
use crate::fem::{assemble_elastic_stiffness, assemble_interface_coupling, CsrMatrix, Grid, SolverOptions, NO_DOF};
use crate::macro_solver::{TimeGrid, LOAD_ORDER};
use crate::material::{identity3, scale3, ElasticTensor, InterfaceProfile, PhaseParameters};
use crate::source::PhaseSources;
use crate::unit_cell::{MicroMesh, MATRIX};

/// Default ceiling on scalar unknowns.
pub const DESK_CAP: usize = 1_000_000;

/// How the scalar fields are represented at interface nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceMode {
    /// One unknown per side, coupled by the barrier terms.
    #[default]
    Duplicated,
    /// One unknown per node; the interface is invisible to the scalars.
    Merged,
}

#[derive(Clone, Debug)]
pub struct MicroDofs {
    pub grid: Grid,
    pub labels: Vec<u8>,
    pub u_base: Vec<usize>,
    pub num_u: usize,
    /// `scalar[kind][phase][node]`, kind 0 pressure and 1 temperature.
    pub scalar: [[Vec<usize>; 2]; 2],
    pub num_scalar: usize,
    pub kinds: Vec<FieldKind>,
    pub mode: InterfaceMode,
}

impl MicroDofs {
    pub fn new(mesh: &MicroMesh, mode: InterfaceMode) -> Self {
        let grid = mesh.grid;
        let nn = grid.num_nodes();
        let mut u_base = vec![NO_DOF; nn];
        let mut num_u = 0;
        for (v, b) in u_base.iter_mut().enumerate() {
            if !grid.is_boundary_node(v) {
                *b = num_u;
                num_u += 3;
            }
        }
        let mut scalar: [[Vec<usize>; 2]; 2] = Default::default();
        let mut kinds = Vec::new();
        let mut next = 0;
        for (kind, maps) in scalar.iter_mut().enumerate() {
            let tag = if kind == 0 {
                FieldKind::Pressure
            } else {
                FieldKind::Temperature
            };
            *maps = [vec![NO_DOF; nn], vec![NO_DOF; nn]];
            for v in 0..nn {
                let boundary = grid.is_boundary_node(v);
                match mode {
                    InterfaceMode::Merged => {
                        if !boundary {
                            maps[0][v] = next;
                            maps[1][v] = next;
                            next += 1;
                            kinds.push(tag);
                        }
                    }
                    InterfaceMode::Duplicated => {
                        for m in 0..2 {
                            if mesh.scalar_index[v][m] != NO_DOF && !(m == 0 && boundary) {
                                maps[m][v] = next;
                                next += 1;
                                kinds.push(tag);
                            }
                        }
                    }
                }
            }
        }
        Self {
            grid,
            labels: mesh.labels.clone(),
            u_base,
            num_u,
            scalar,
            num_scalar: next,
            kinds,
            mode,
        }
    }

    /// Phase index (0 matrix, 1 inclusion) of cell `c`.
    pub fn phase_of(&self, c: usize) -> usize {
        usize::from(self.labels[c] != MATRIX)
    }

    pub fn element_u(&self, c: usize) -> [usize; 24] {
        vector_dofs(&self.grid.cell_nodes(c), |v| self.u_base[v])
    }

    /// Scalar dofs of cell `c` on its own phase.
    pub fn element_scalar(&self, kind: usize, c: usize) -> [usize; 8] {
        let m = self.phase_of(c);
        self.grid.cell_nodes(c).map(|v| self.scalar[kind][m][v])
    }

    pub fn total(&self) -> usize {
        self.num_u + self.num_scalar
    }
}

/// `ε w(x/ε)` with the profile read periodically.
fn scaled_barrier(profile: &InterfaceProfile, epsilon: f64) -> impl Fn([f64; 3]) -> f64 + '_ {
    move |x| {
        let y = x.map(|v| {
            let s = v / epsilon;
            s - s.floor()
        });
        epsilon * profile.eval(y)
    }
}

/// Barrier coupling of one scalar kind over the interface faces.
pub fn interface_block(
    mesh: &MicroMesh,
    dofs: &MicroDofs,
    kind: usize,
    profile: &InterfaceProfile,
) -> Result<CsrMatrix> {
    let g = &dofs.grid;
    assemble_interface_coupling(
        g,
        dofs.num_scalar,
        &mesh.interface_faces,
        scaled_barrier(profile, mesh.epsilon),
        |f| {
            let mc = f.matrix_cell(&mesh.labels);
            let ic = if mc == f.cell { f.other } else { f.cell };
            Ok((
                face_dofs(g, f, mc, |v| dofs.scalar[kind][0][v]),
                face_dofs(g, f, ic, |v| dofs.scalar[kind][1][v]),
            ))
        },
    )
}

#[derive(Clone, Debug)]
pub struct MicroSystem {
    pub mesh: MicroMesh,
    pub dofs: MicroDofs,
    pub op: CoupledOperator,
    pub params: PhaseParameters,
}

/// Assembles the micro blocks. `cap` bounds the scalar unknowns.
pub fn setup_micro(mesh: &MicroMesh, params: &PhaseParameters, mode: InterfaceMode, cap: usize) -> Result<MicroSystem> {
    for (m, p) in params.phases.iter().enumerate() {
        p.validate(&format!("phase{}", m + 1))?;
    }
    let dofs = MicroDofs::new(mesh, mode);
    if dofs.num_scalar > cap {
        return Err(Error::DeskCap {
            unknowns: dofs.num_scalar,
            cap,
        });
    }
    let g = dofs.grid;
    let h = g.spacing();
    let ncell = g.num_cells();
    let ph = &params.phases;
    let tensors = [0, 1].map(|m| ElasticTensor::isotropic(ph[m].lambda, ph[m].mu));
    let elastic = assemble_elastic_stiffness(&g, dofs.num_u, &tensors, |c| {
        Some((dofs.phase_of(c), dofs.element_u(c)))
    })?;

    let id = identity3();
    let grad = [0, 1].map(|m| {
        [
            flat(&gradient_coupling(h, &scale3(&id, ph[m].beta))),
            flat(&gradient_coupling(h, &scale3(&id, ph[m].gamma))),
        ]
    });
    let strain_l = [0, 1].map(|m| {
        [
            flat(&strain_coupling(h, &scale3(&id, ph[m].beta))),
            flat(&strain_coupling(h, &scale3(&id, ph[m].gamma))),
        ]
    });
    let gradient = crate::fem::sparse::assemble(dofs.num_u, dofs.num_scalar, |s: &mut dyn Sink| {
        for c in 0..ncell {
            let m = dofs.phase_of(c);
            let du = dofs.element_u(c);
            for kind in 0..2 {
                s.add(&du, &dofs.element_scalar(kind, c), &grad[m][kind]);
            }
        }
    });
    let strain = crate::fem::sparse::assemble(dofs.num_scalar, dofs.num_u, |s: &mut dyn Sink| {
        for c in 0..ncell {
            let m = dofs.phase_of(c);
            let du = dofs.element_u(c);
            for kind in 0..2 {
                s.add(&dofs.element_scalar(kind, c), &du, &strain_l[m][kind]);
            }
        }
    });

    let mref = flat(&mass(h));
    let scaled = |k: f64| mref.iter().map(|v| v * k).collect::<Vec<f64>>();
    let store = [0, 1].map(|m| [scaled(ph[m].phi), scaled(ph[m].capacity)]);
    let cross = [0, 1].map(|m| scaled(ph[m].alpha));
    let diff = [0, 1].map(|m| {
        [
            flat(&scalar_stiffness(h, &scale3(&id, ph[m].kappa))),
            flat(&scalar_stiffness(h, &scale3(&id, ph[m].conductivity))),
        ]
    });
    let storage_v = |s: &mut dyn Sink| {
        for c in 0..ncell {
            let m = dofs.phase_of(c);
            for kind in 0..2 {
                let d = dofs.element_scalar(kind, c);
                s.add(&d, &d, &store[m][kind]);
            }
        }
    };
    let cross_v = |s: &mut dyn Sink| {
        for c in 0..ncell {
            let m = dofs.phase_of(c);
            let dp = dofs.element_scalar(0, c);
            let dt = dofs.element_scalar(1, c);
            s.add(&dp, &dt, &cross[m]);
            s.add(&dt, &dp, &cross[m]);
        }
    };
    let diffusion_v = |s: &mut dyn Sink| {
        for c in 0..ncell {
            let m = dofs.phase_of(c);
            for kind in 0..2 {
                let d = dofs.element_scalar(kind, c);
                s.add(&d, &d, &diff[m][kind]);
            }
        }
    };
    let barriers = match mode {
        InterfaceMode::Duplicated => vec![
            interface_block(mesh, &dofs, 0, &params.zeta)?,
            interface_block(mesh, &dofs, 1, &params.omega)?,
        ],
        InterfaceMode::Merged => Vec::new(),
    };
    let exchange_v = |s: &mut dyn Sink| {
        for b in &barriers {
            for r in 0..b.nrows() {
                let (cols, vals) = b.row(r);
                let cols: Vec<usize> = cols.iter().map(|&c| c as usize).collect();
                s.add(&[r], &cols, vals);
            }
        }
    };
    let [storage, storage_cross, diffusion, exchange] =
        assemble_shared(dofs.num_scalar, [&storage_v, &cross_v, &diffusion_v, &exchange_v]);
    let op = CoupledOperator {
        elastic,
        gradient,
        strain,
        storage,
        storage_cross,
        diffusion,
        exchange,
        kinds: dofs.kinds.clone(),
    };
    op.check()?;
    Ok(MicroSystem {
        mesh: mesh.clone(),
        dofs,
        op,
        params: params.clone(),
    })
}

/// Nodal micro fields; `p[m]` and `theta[m]` are zero where phase `m` is
/// absent.
#[derive(Clone, Debug, PartialEq)]
pub struct MicroState {
    pub time: f64,
    pub u: Vec<[f64; 3]>,
    pub p: [Vec<f64>; 2],
    pub theta: [Vec<f64>; 2],
}

impl MicroState {
    pub fn zero(grid: &Grid, time: f64) -> Self {
        let n = grid.num_nodes();
        Self {
            time,
            u: vec![[0.0; 3]; n],
            p: [vec![0.0; n], vec![0.0; n]],
            theta: [vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn from_vectors(dofs: &MicroDofs, time: f64, u: &[f64], x: &[f64]) -> Self {
        let mut s = Self::zero(&dofs.grid, time);
        for (v, &b) in dofs.u_base.iter().enumerate() {
            if b != NO_DOF {
                s.u[v] = [u[b], u[b + 1], u[b + 2]];
            }
        }
        for m in 0..2 {
            for v in 0..dofs.grid.num_nodes() {
                let d = dofs.scalar[0][m][v];
                if d != NO_DOF {
                    s.p[m][v] = x[d];
                }
                let d = dofs.scalar[1][m][v];
                if d != NO_DOF {
                    s.theta[m][v] = x[d];
                }
            }
        }
        s
    }

    pub fn to_vectors(&self, dofs: &MicroDofs) -> (Vec<f64>, Vec<f64>) {
        let mut u = vec![0.0; dofs.num_u];
        let mut x = vec![0.0; dofs.num_scalar];
        for (v, &b) in dofs.u_base.iter().enumerate() {
            if b != NO_DOF {
                u[b..b + 3].copy_from_slice(&self.u[v]);
            }
        }
        for m in 0..2 {
            for v in 0..dofs.grid.num_nodes() {
                let d = dofs.scalar[0][m][v];
                if d != NO_DOF {
                    x[d] = self.p[m][v];
                }
                let d = dofs.scalar[1][m][v];
                if d != NO_DOF {
                    x[d] = self.theta[m][v];
                }
            }
        }
        (u, x)
    }

    /// Nodal values of the scalar `kind` on the phase of cell `c`.
    pub fn cell_scalar(&self, dofs: &MicroDofs, kind: usize, c: usize) -> [f64; 8] {
        let m = dofs.phase_of(c);
        let f = if kind == 0 { &self.p[m] } else { &self.theta[m] };
        dofs.grid.cell_nodes(c).map(|v| f[v])
    }

    pub fn cell_displacement(&self, dofs: &MicroDofs, c: usize, i: usize) -> [f64; 8] {
        dofs.grid.cell_nodes(c).map(|v| self.u[v][i])
    }
}

/// Discrete norms of a micro state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MicroNorms {
    pub time: f64,
    /// `‖∇u‖` over Ω.
    pub u_h1: f64,
    pub u_l2: f64,
    /// `(Σ_m ‖∇p_m‖² + ε ‖p₁ − p₂‖²_Σ)^{1/2}`
    pub p_v: f64,
    pub p_l2: f64,
    pub theta_v: f64,
    pub theta_l2: f64,
}

impl MicroSystem {
    pub fn loads(&self, sources: &PhaseSources, t: f64) -> (Vec<f64>, Vec<f64>) {
        let d = &self.dofs;
        let fu = if sources.force.iter().all(|s| s.is_zero()) {
            vec![0.0; d.num_u]
        } else {
            vector_load(
                &d.grid,
                d.num_u,
                LOAD_ORDER,
                |c| Some(d.element_u(c)),
                |c, x| sources.force[d.phase_of(c)].eval(x, t),
            )
        };
        let mut fs = vec![0.0; d.num_scalar];
        for (kind, src) in [(0, &sources.fluid), (1, &sources.heat)] {
            if src.iter().all(|s| s.is_zero()) {
                continue;
            }
            let part = scalar_load(
                &d.grid,
                d.num_scalar,
                LOAD_ORDER,
                |c| Some(d.element_scalar(kind, c)),
                |c, x| src[d.phase_of(c)].eval(x, t),
            );
            for (o, p) in fs.iter_mut().zip(part) {
                *o += p;
            }
        }
        (fu, fs)
    }

    pub fn norms(&self, s: &MicroState) -> MicroNorms {
        let d = &self.dofs;
        let g = &d.grid;
        let h = g.spacing();
        let k = scalar_stiffness(h, &identity3());
        let m = mass(h);
        let quad = |a: &[[f64; 8]; 8], v: &[f64; 8]| -> f64 {
            (0..8).map(|i| v[i] * (0..8).map(|j| a[i][j] * v[j]).sum::<f64>()).sum()
        };
        let mut acc = [0.0; 6];
        for c in 0..g.num_cells() {
            for i in 0..3 {
                let v = s.cell_displacement(d, c, i);
                acc[0] += quad(&k, &v);
                acc[1] += quad(&m, &v);
            }
            for kind in 0..2 {
                let v = s.cell_scalar(d, kind, c);
                acc[2 + 2 * kind] += quad(&k, &v);
                acc[3 + 2 * kind] += quad(&m, &v);
            }
        }
        if d.mode == InterfaceMode::Duplicated {
            let fm = face_mass(h, 2, |_| 1.0);
            for f in &self.mesh.interface_faces {
                let mc = f.matrix_cell(&self.mesh.labels);
                let ic = if mc == f.cell { f.other } else { f.cell };
                let n1 = face_dofs(g, f, mc, |v| v);
                let n2 = face_dofs(g, f, ic, |v| v);
                for kind in 0..2 {
                    let fl = if kind == 0 { &s.p } else { &s.theta };
                    let j: [f64; 4] = std::array::from_fn(|a| fl[0][n1[a]] - fl[1][n2[a]]);
                    let e: f64 = (0..4)
                        .map(|a| j[a] * (0..4).map(|b| fm[a][b] * j[b]).sum::<f64>())
                        .sum();
                    acc[2 + 2 * kind] += self.mesh.epsilon * e;
                }
            }
        }
        MicroNorms {
            time: s.time,
            u_h1: acc[0].sqrt(),
            u_l2: acc[1].sqrt(),
            p_v: acc[2].sqrt(),
            p_l2: acc[3].sqrt(),
            theta_v: acc[4].sqrt(),
            theta_l2: acc[5].sqrt(),
        }
    }

    /// Scalar unknowns that sit on an interface face (both sides).
    pub fn interface_dofs(&self) -> Vec<usize> {
        let d = &self.dofs;
        let mut mark = vec![false; d.num_scalar];
        for f in &self.mesh.interface_faces {
            for c in [f.cell, f.other] {
                for kind in 0..2 {
                    let m = d.phase_of(c);
                    for x in face_dofs(&d.grid, f, c, |v| d.scalar[kind][m][v]) {
                        if x != NO_DOF {
                            mark[x] = true;
                        }
                    }
                }
            }
        }
        (0..d.num_scalar).filter(|&i| mark[i]).collect()
    }
}

/// Relative mismatch at interface unknowns between the one-sided flux
/// implied by the bulk terms and the barrier term, for the step
/// `(u_prev, x_prev) → (u, x)` with scalar load `load_s` at the new level.
#[allow(clippy::too_many_arguments)]
pub fn flux_jump_defect(
    op: &CoupledOperator,
    interface: &[usize],
    dt: f64,
    u_prev: &[f64],
    x_prev: &[f64],
    u: &[f64],
    x: &[f64],
    load_s: &[f64],
) -> f64 {
    if interface.is_empty() {
        return 0.0;
    }
    let du: Vec<f64> = u.iter().zip(u_prev).map(|(a, b)| a - b).collect();
    let dx: Vec<f64> = x.iter().zip(x_prev).map(|(a, b)| a - b).collect();
    let mut bulk = op.strain.apply(&du);
    op.storage.mul_vec_add(1.0, &dx, &mut bulk);
    op.storage_cross.mul_vec_add(1.0, &dx, &mut bulk);
    op.diffusion.mul_vec_add(dt, x, &mut bulk);
    for (b, l) in bulk.iter_mut().zip(load_s) {
        *b -= dt * l;
    }
    let barrier: Vec<f64> = op.exchange.apply(x).iter().map(|v| dt * v).collect();
    let scale = interface
        .iter()
        .map(|&i| bulk[i].abs().max(barrier[i].abs()))
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    // bulk flux must balance the barrier flux
    interface
        .iter()
        .map(|&i| (bulk[i] + barrier[i]).abs())
        .fold(0.0f64, f64::max)
        / scale
}

#[derive(Clone, Debug, Serialize)]
pub struct MicroSummary {
    pub epsilon: f64,
    pub copies: usize,
    pub cell_resolution: usize,
    pub displacement_unknowns: usize,
    pub scalar_unknowns: usize,
    pub steps: usize,
    pub iterations: usize,
    pub interface_area: f64,
    pub max_flux_jump_defect: f64,
    pub norms: Vec<MicroNorms>,
}

#[derive(Clone, Debug)]
pub struct MicroRun {
    pub outputs: Vec<MicroState>,
    pub final_state: MicroState,
    pub ledger: EnergyLedger,
    pub summary: MicroSummary,
}

pub struct MicroSimulation<'a> {
    pub system: &'a MicroSystem,
    pub stepper: Stepper,
    pub sources: &'a PhaseSources,
}

impl<'a> MicroSimulation<'a> {
    pub fn new(system: &'a MicroSystem, dt: f64, sources: &'a PhaseSources, opts: &SolverOptions) -> Result<Self> {
        Ok(Self {
            stepper: Stepper::new(system.op.clone(), dt, opts.clone())?,
            system,
            sources,
        })
    }

    /// Zero scalars and the displacement in equilibrium with the force at `t0`.
    pub fn initial(&self, t0: f64) -> Result<MicroState> {
        let d = &self.system.dofs;
        let (fu, _) = self.system.loads(self.sources, t0);
        let x = vec![0.0; d.num_scalar];
        let u = if fu.iter().all(|&v| v == 0.0) {
            vec![0.0; d.num_u]
        } else {
            self.stepper.equilibrium(&x, &fu)?
        };
        Ok(MicroState::from_vectors(d, t0, &u, &x))
    }

    pub fn step(&self, state: &MicroState) -> Result<MicroState> {
        let d = &self.system.dofs;
        let (u0, x0) = state.to_vectors(d);
        let t = state.time + self.stepper.dt;
        let (fu, fs) = self.system.loads(self.sources, t);
        let r = self.stepper.step(&u0, &x0, &fu, &fs)?;
        Ok(MicroState::from_vectors(d, t, &r.u, &r.x))
    }

    pub fn run(&self, time: &TimeGrid) -> Result<MicroRun> {
        let steps = time.steps()?;
        let sys = self.system;
        let d = &sys.dofs;
        let interface = sys.interface_dofs();
        let mut state = self.initial(0.0)?;
        let (mut u, mut x) = state.to_vectors(d);
        let mut ledger = EnergyLedger::default();
        ledger.start(&sys.op, 0.0, &u, &x);
        let mut outputs = vec![state.clone()];
        let mut norms = vec![sys.norms(&state)];
        let mut iterations = 0;
        let mut defect = 0.0f64;
        let every = time.output_every.max(1);
        for n in 1..=steps {
            let t = state.time + self.stepper.dt;
            let (fu, fs) = sys.loads(self.sources, t);
            let r = self.stepper.step(&u, &x, &fu, &fs)?;
            for w in &r.stats.warnings {
                log::warn!("t = {t}: {w}");
            }
            iterations += r.stats.iterations;
            defect = defect.max(flux_jump_defect(
                &sys.op,
                &interface,
                self.stepper.dt,
                &u,
                &x,
                &r.u,
                &r.x,
                &fs,
            ));
            ledger.record(&sys.op, self.stepper.dt, t, &u, &x, &r.u, &r.x, &fs);
            state = MicroState::from_vectors(d, t, &r.u, &r.x);
            u = r.u;
            x = r.x;
            norms.push(sys.norms(&state));
            if n % every == 0 || n == steps {
                outputs.push(state.clone());
            }
        }
        let summary = MicroSummary {
            epsilon: sys.mesh.epsilon,
            copies: sys.mesh.copies,
            cell_resolution: sys.mesh.cell_resolution,
            displacement_unknowns: d.num_u,
            scalar_unknowns: d.num_scalar,
            steps,
            iterations,
            interface_area: sys.mesh.interface_area(),
            max_flux_jump_defect: defect,
            norms,
        };
        Ok(MicroRun {
            outputs,
            final_state: state,
            ledger,
            summary,
        })
    }
}

/// Unit-jump barrier energy `Σ_faces ∫ ε ζ(x/ε) ds`, i.e. `1ᵀ P₁₁ 1` of the
/// hydraulic coupling block restricted to the matrix side.
pub fn unit_jump_energy(system: &MicroSystem) -> f64 {
    let d = &system.dofs;
    let mut jump = vec![0.0; d.num_scalar];
    for v in 0..d.grid.num_nodes() {
        let i = d.scalar[0][0][v];
        if i != NO_DOF {
            jump[i] = 1.0;
        }
    }
    let mut pressure = vec![0.0; d.num_scalar];
    for (i, k) in d.kinds.iter().enumerate() {
        if *k == FieldKind::Pressure {
            pressure[i] = jump[i];
        }
    }
    dot(&pressure, &system.op.exchange.apply(&pressure))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupled::monolithic;
    use crate::fem::solver::{DenseLu, SolverMethod};
    use crate::material::sample_phase;
    use crate::source::{ScalarSource, VectorSource};
    use crate::unit_cell::{build_unit_cell, tile_micro_domain, Inclusion};

    fn mesh(n: usize, eps: f64) -> MicroMesh {
        let cell = build_unit_cell(n, &Inclusion::centered_cube(0.25)).unwrap();
        tile_micro_domain(&cell, eps, false).unwrap()
    }

    fn params() -> PhaseParameters {
        let mut p = PhaseParameters::homogeneous(sample_phase(), 1.5, 0.7);
        p.phases[1].mu = 2.0;
        p.phases[1].kappa = 0.5;
        p
    }

    #[test]
    fn interface_blocks_vanish_without_barriers() {
        let m = mesh(4, 0.5);
        let mut p = params();
        p.zeta = InterfaceProfile::Constant(0.0);
        p.omega = InterfaceProfile::Constant(0.0);
        let s = setup_micro(&m, &p, InterfaceMode::Duplicated, DESK_CAP).unwrap();
        assert_eq!(s.op.exchange.max_abs(), 0.0);
    }

    #[test]
    fn equal_sides_carry_no_jump() {
        let m = mesh(4, 0.5);
        let s = setup_micro(&m, &params(), InterfaceMode::Duplicated, DESK_CAP).unwrap();
        let g = &s.dofs.grid;
        let mut x = vec![0.0; s.dofs.num_scalar];
        for v in 0..g.num_nodes() {
            let p = g.node_position(v);
            let f = 1.0 + p[0] + 2.0 * p[1] * p[2];
            for kind in 0..2 {
                for m in 0..2 {
                    let i = s.dofs.scalar[kind][m][v];
                    if i != NO_DOF {
                        x[i] = f;
                    }
                }
            }
        }
        assert!(s.op.exchange.apply(&x).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn unit_jump_energy_is_scale_free() {
        let e: Vec<f64> = [0.5, 0.25]
            .iter()
            .map(|&eps| {
                unit_jump_energy(&setup_micro(&mesh(4, eps), &params(), InterfaceMode::Duplicated, DESK_CAP).unwrap())
            })
            .collect();
        // six faces of area 1/4, zeta 1.5
        assert!((e[0] - 1.5 * 1.5).abs() < 1e-12, "{e:?}");
        assert!((e[0] - e[1]).abs() < 1e-12);
    }

    #[test]
    fn desk_cap_is_enforced() {
        let m = mesh(4, 0.5);
        assert!(matches!(
            setup_micro(&m, &params(), InterfaceMode::Duplicated, 100),
            Err(Error::DeskCap { cap: 100, .. })
        ));
    }

    #[test]
    fn zero_data_stays_zero() {
        let s = setup_micro(&mesh(4, 0.5), &params(), InterfaceMode::Duplicated, DESK_CAP).unwrap();
        let src = PhaseSources::default();
        let sim = MicroSimulation::new(&s, 0.1, &src, &SolverOptions::default()).unwrap();
        let r = sim
            .run(&TimeGrid {
                dt: 0.1,
                t_end: 0.2,
                output_every: 1,
            })
            .unwrap();
        assert!(r.final_state.p.iter().flatten().all(|&v| v == 0.0));
        assert!(r.final_state.u.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn iterative_step_matches_dense_elimination() {
        let s = setup_micro(&mesh(4, 0.5), &params(), InterfaceMode::Duplicated, DESK_CAP).unwrap();
        let mut src = PhaseSources::default();
        src.fluid[0] = ScalarSource::constant(1.0);
        src.heat[1] = ScalarSource::constant(0.5);
        src.force[0] = VectorSource::constant([0.0, 0.0, 1.0]);
        let opts = SolverOptions {
            method: SolverMethod::Iterative,
            tol: 1e-12,
            ..Default::default()
        };
        let dt = 0.1;
        let sim = MicroSimulation::new(&s, dt, &src, &opts).unwrap();
        let zero = MicroState::zero(&s.dofs.grid, 0.0);
        let next = sim.step(&zero).unwrap();
        let (fu, fs) = s.loads(&src, dt);
        let a = monolithic(&s.op.elastic, &s.op.gradient, &s.op.strain, &s.op.step_matrix(dt));
        let mut rhs = fu;
        rhs.extend(fs.iter().map(|v| dt * v));
        let sol = DenseLu::new(&a).unwrap().solve(&rhs).unwrap();
        let (u, x) = next.to_vectors(&s.dofs);
        let got: Vec<f64> = u.into_iter().chain(x).collect();
        let scale = sol.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (g, e) in got.iter().zip(&sol) {
            assert!((g - e).abs() < 1e-8 * scale, "{g} vs {e}");
        }
    }

    #[test]
    fn flux_jump_balances_at_the_interface() {
        let s = setup_micro(&mesh(4, 0.5), &params(), InterfaceMode::Duplicated, DESK_CAP).unwrap();
        let mut src = PhaseSources::default();
        src.fluid[0] = ScalarSource::constant(1.0);
        let sim = MicroSimulation::new(&s, 0.05, &src, &SolverOptions::default()).unwrap();
        let r = sim
            .run(&TimeGrid {
                dt: 0.05,
                t_end: 0.1,
                output_every: 1,
            })
            .unwrap();
        assert!(
            r.summary.max_flux_jump_defect < 1e-6,
            "{}",
            r.summary.max_flux_jump_defect
        );
        // fluid leaks into the inclusion
        let centre = s.dofs.grid.node_index([2, 2, 2]);
        assert!(r.final_state.p[1][centre] > 0.0);
    }
}
