//! Backward-Euler solver for the homogenized double-porosity,
//! double-temperature model on `Ω = (0,1)³`.

pub mod reduced;

use serde::{Deserialize, Serialize};

use crate::coupled::{assemble_shared, CoupledOperator, EnergyLedger, FieldKind, Stepper};
use crate::effective::EffectiveCoefficients;
use crate::error::{Error, Result};
use crate::fem::assembly::{flat, scalar_load, vector_dofs, vector_load};
use crate::fem::element::{self, gradient_coupling, mass, scalar_stiffness, strain_coupling};
use crate::fem::sparse::{assemble, Sink};
use crate::fem::{Grid, SolverOptions, NO_DOF};
use crate::material::{scale3, ElasticTensor, Mat3};
use crate::source::MacroSources;

/// Quadrature order of load integrals.
pub const LOAD_ORDER: usize = 3;

/// Boundary conditions of the scalar fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScalarBoundary {
    /// Matrix pressure and temperature vanish on `∂Ω`; inclusion fields are
    /// insulated.
    #[default]
    Mixed,
    /// Every scalar field is insulated.
    AllNatural,
}

/// Node-to-unknown maps of the macro mesh.
#[derive(Clone, Debug)]
pub struct MacroDofs {
    pub grid: Grid,
    /// First displacement unknown of each node, or [`NO_DOF`] on `∂Ω`.
    pub u_base: Vec<usize>,
    pub num_u: usize,
    /// `scalar[kind][phase][node]`, kind 0 pressure and 1 temperature.
    pub scalar: [[Vec<usize>; 2]; 2],
    pub num_scalar: usize,
    pub kinds: Vec<FieldKind>,
    pub active: [bool; 2],
}

impl MacroDofs {
    pub fn new(resolution: usize, active: [bool; 2], bc: ScalarBoundary) -> Self {
        let grid = Grid::bounded(resolution);
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
        let mut next = 0;
        let mut kinds = Vec::new();
        for kind in 0..2 {
            for m in 0..2 {
                let mut map = vec![NO_DOF; nn];
                if active[m] {
                    let dirichlet = m == 0 && bc == ScalarBoundary::Mixed;
                    for (v, d) in map.iter_mut().enumerate() {
                        if !(dirichlet && grid.is_boundary_node(v)) {
                            *d = next;
                            next += 1;
                            kinds.push(if kind == 0 {
                                FieldKind::Pressure
                            } else {
                                FieldKind::Temperature
                            });
                        }
                    }
                }
                scalar[kind][m] = map;
            }
        }
        Self {
            grid,
            u_base,
            num_u,
            scalar,
            num_scalar: next,
            kinds,
            active,
        }
    }

    pub fn element_u(&self, c: usize) -> [usize; 24] {
        vector_dofs(&self.grid.cell_nodes(c), |v| self.u_base[v])
    }

    pub fn element_scalar(&self, kind: usize, m: usize, c: usize) -> [usize; 8] {
        self.grid.cell_nodes(c).map(|v| self.scalar[kind][m][v])
    }
}

/// Assembled macro blocks with their dof maps.
#[derive(Clone, Debug)]
pub struct MacroSystem {
    pub dofs: MacroDofs,
    pub op: CoupledOperator,
}

/// Assembles every block of the homogenized model.
pub fn setup(coeffs: &EffectiveCoefficients, resolution: usize, bc: ScalarBoundary) -> Result<MacroSystem> {
    if resolution < 2 {
        return Err(Error::Config(format!(
            "macro resolution must be at least 2, got {resolution}"
        )));
    }
    coeffs.validate()?;
    let active = [true, coeffs.inclusion_active()];
    let dofs = MacroDofs::new(resolution, active, bc);
    let g = dofs.grid;
    let h = g.spacing();
    let ncell = g.num_cells();
    let phases = [coeffs.phase(0), coeffs.phase(1)];
    let ms: Vec<usize> = (0..2).filter(|&m| active[m]).collect();

    let elastic_local = flat(&element::elastic_stiffness(
        h,
        &ElasticTensor::from_voigt(&coeffs.a_hom),
    ));
    let elastic = assemble(dofs.num_u, dofs.num_u, |s: &mut dyn Sink| {
        for c in 0..ncell {
            let d = dofs.element_u(c);
            s.add(&d, &d, &elastic_local);
        }
    });

    // gradient and strain couplings per (kind, phase)
    let mut grad_locals = Vec::new();
    let mut strain_locals = Vec::new();
    for kind in 0..2 {
        for &m in &ms {
            let p = &phases[m];
            let (b, s): (Mat3, f64) = if kind == 0 {
                (p.biot, p.beta)
            } else {
                (p.dilation, p.gamma)
            };
            grad_locals.push((kind, m, flat(&gradient_coupling(h, &b))));
            strain_locals.push((kind, m, flat(&strain_coupling(h, &scale3(&p.coupling, s)))));
        }
    }
    let gradient = assemble(dofs.num_u, dofs.num_scalar, |s: &mut dyn Sink| {
        for c in 0..ncell {
            let du = dofs.element_u(c);
            for (kind, m, local) in &grad_locals {
                s.add(&du, &dofs.element_scalar(*kind, *m, c), local);
            }
        }
    });
    let strain = assemble(dofs.num_scalar, dofs.num_u, |s: &mut dyn Sink| {
        for c in 0..ncell {
            let du = dofs.element_u(c);
            for (kind, m, local) in &strain_locals {
                s.add(&dofs.element_scalar(*kind, *m, c), &du, local);
            }
        }
    });

    let mref = flat(&mass(h));
    let scaled = |s: f64| mref.iter().map(|v| v * s).collect::<Vec<f64>>();
    let storage_v = |s: &mut dyn Sink| {
        for c in 0..ncell {
            for &m in &ms {
                let p = &phases[m];
                let dp = dofs.element_scalar(0, m, c);
                let dt = dofs.element_scalar(1, m, c);
                s.add(&dp, &dp, &scaled(p.phi_star));
                s.add(&dt, &dt, &scaled(p.c_star));
            }
        }
    };
    let cross_v = |s: &mut dyn Sink| {
        for c in 0..ncell {
            for &m in &ms {
                let a = scaled(phases[m].alpha_star);
                let dp = dofs.element_scalar(0, m, c);
                let dt = dofs.element_scalar(1, m, c);
                s.add(&dp, &dt, &a);
                s.add(&dt, &dp, &a);
            }
        }
    };
    let diff_locals: Vec<[Vec<f64>; 2]> = (0..2)
        .map(|m| {
            [
                flat(&scalar_stiffness(h, &phases[m].permeability)),
                flat(&scalar_stiffness(h, &phases[m].conductivity)),
            ]
        })
        .collect();
    let diffusion_v = |s: &mut dyn Sink| {
        for c in 0..ncell {
            for &m in &ms {
                for kind in 0..2 {
                    let d = dofs.element_scalar(kind, m, c);
                    s.add(&d, &d, &diff_locals[m][kind]);
                }
            }
        }
    };
    let exchange_v = |s: &mut dyn Sink| {
        if !(active[0] && active[1]) {
            return;
        }
        for c in 0..ncell {
            for (kind, w) in [(0, coeffs.zeta_star), (1, coeffs.omega_star)] {
                let mut rows = [0usize; 16];
                rows[..8].copy_from_slice(&dofs.element_scalar(kind, 0, c));
                rows[8..].copy_from_slice(&dofs.element_scalar(kind, 1, c));
                let mut local = vec![0.0; 256];
                for a in 0..16 {
                    for b in 0..16 {
                        let sign = if (a < 8) == (b < 8) { 1.0 } else { -1.0 };
                        local[a * 16 + b] = sign * w * mref[(a % 8) * 8 + b % 8];
                    }
                }
                s.add(&rows, &rows, &local);
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
    Ok(MacroSystem { dofs, op })
}

/// Nodal fields on the full macro grid, boundary values included.
#[derive(Clone, Debug, PartialEq)]
pub struct MacroState {
    pub time: f64,
    pub u: Vec<[f64; 3]>,
    pub p: [Vec<f64>; 2],
    pub theta: [Vec<f64>; 2],
}

/// Values and gradients of every macro field at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MacroSample {
    pub u: [f64; 3],
    pub grad_u: Mat3,
    pub p: [f64; 2],
    pub grad_p: [[f64; 3]; 2],
    pub theta: [f64; 2],
    pub grad_theta: [[f64; 3]; 2],
}

impl MacroState {
    pub fn zero(grid: &Grid, time: f64) -> Self {
        let n = grid.num_nodes();
        Self {
            time,
            u: vec![[0.0; 3]; n],
            p: [vec![0.0; n], vec![0.0; n]],
            theta: [vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn from_vectors(dofs: &MacroDofs, time: f64, u: &[f64], x: &[f64]) -> Self {
        let mut s = Self::zero(&dofs.grid, time);
        for (v, &b) in dofs.u_base.iter().enumerate() {
            if b != NO_DOF {
                s.u[v] = [u[b], u[b + 1], u[b + 2]];
            }
        }
        for m in 0..2 {
            for v in 0..dofs.grid.num_nodes() {
                let dp = dofs.scalar[0][m][v];
                if dp != NO_DOF {
                    s.p[m][v] = x[dp];
                }
                let dt = dofs.scalar[1][m][v];
                if dt != NO_DOF {
                    s.theta[m][v] = x[dt];
                }
            }
        }
        s
    }

    pub fn to_vectors(&self, dofs: &MacroDofs) -> (Vec<f64>, Vec<f64>) {
        let mut u = vec![0.0; dofs.num_u];
        let mut x = vec![0.0; dofs.num_scalar];
        for (v, &b) in dofs.u_base.iter().enumerate() {
            if b != NO_DOF {
                u[b..b + 3].copy_from_slice(&self.u[v]);
            }
        }
        for m in 0..2 {
            for v in 0..dofs.grid.num_nodes() {
                let dp = dofs.scalar[0][m][v];
                if dp != NO_DOF {
                    x[dp] = self.p[m][v];
                }
                let dt = dofs.scalar[1][m][v];
                if dt != NO_DOF {
                    x[dt] = self.theta[m][v];
                }
            }
        }
        (u, x)
    }

    /// Trilinear interpolation of every field at `x ∈ Ω̄`.
    pub fn sample(&self, grid: &Grid, x: [f64; 3]) -> MacroSample {
        let (c, xi) = grid.locate(x);
        self.sample_in(grid, c, xi)
    }

    pub fn sample_in(&self, grid: &Grid, c: usize, xi: [f64; 3]) -> MacroSample {
        let nodes = grid.cell_nodes(c);
        let h = grid.spacing();
        let mut out = MacroSample::default();
        for i in 0..3 {
            let v = nodes.map(|n| self.u[n][i]);
            out.u[i] = element::interpolate(&v, xi);
            out.grad_u[i] = element::interpolate_grad(h, &v, xi);
        }
        for m in 0..2 {
            let v = nodes.map(|n| self.p[m][n]);
            out.p[m] = element::interpolate(&v, xi);
            out.grad_p[m] = element::interpolate_grad(h, &v, xi);
            let v = nodes.map(|n| self.theta[m][n]);
            out.theta[m] = element::interpolate(&v, xi);
            out.grad_theta[m] = element::interpolate_grad(h, &v, xi);
        }
        out
    }
}

/// Right-hand sides of the macro system at a given time.
pub trait MacroLoads {
    fn displacement_load(&self, sys: &MacroSystem, t: f64) -> Vec<f64>;
    fn scalar_load(&self, sys: &MacroSystem, t: f64) -> Vec<f64>;
}

impl MacroLoads for MacroSources {
    fn displacement_load(&self, sys: &MacroSystem, t: f64) -> Vec<f64> {
        let d = &sys.dofs;
        if self.force.is_zero() {
            return vec![0.0; d.num_u];
        }
        vector_load(
            &d.grid,
            d.num_u,
            LOAD_ORDER,
            |c| Some(d.element_u(c)),
            |_, x| self.force.eval(x, t),
        )
    }

    fn scalar_load(&self, sys: &MacroSystem, t: f64) -> Vec<f64> {
        let d = &sys.dofs;
        let mut out = vec![0.0; d.num_scalar];
        for m in 0..2 {
            if !d.active[m] {
                continue;
            }
            for (kind, src) in [(0, &self.fluid[m]), (1, &self.heat[m])] {
                if src.is_zero() {
                    continue;
                }
                let part = scalar_load(
                    &d.grid,
                    d.num_scalar,
                    LOAD_ORDER,
                    |c| Some(d.element_scalar(kind, m, c)),
                    |_, x| src.eval(x, t),
                );
                for (o, p) in out.iter_mut().zip(part) {
                    *o += p;
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub t_end: f64,
    /// Emit a state every this many steps (the final state is always kept).
    #[serde(default = "one")]
    pub output_every: usize,
}

fn one() -> usize {
    1
}

impl TimeGrid {
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) {
            return Err(Error::Config(format!(
                "invalid time grid: dt = {}, t_end = {}",
                self.dt, self.t_end
            )));
        }
        let n = (self.t_end / self.dt).round();
        if (n * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(1.0) {
            return Err(Error::Config(format!(
                "t_end = {} is not a multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(n as usize)
    }
}

/// Time series of a run.
#[derive(Clone, Debug)]
pub struct MacroRun {
    pub outputs: Vec<MacroState>,
    pub ledger: EnergyLedger,
    pub final_state: MacroState,
    pub iterations: usize,
}

/// A macro system bound to a time step and loads.
pub struct MacroSimulation<'a> {
    pub system: &'a MacroSystem,
    pub stepper: Stepper,
    pub loads: &'a dyn MacroLoads,
}

impl<'a> MacroSimulation<'a> {
    pub fn new(system: &'a MacroSystem, dt: f64, loads: &'a dyn MacroLoads, opts: &SolverOptions) -> Result<Self> {
        Ok(Self {
            stepper: Stepper::new(system.op.clone(), dt, opts.clone())?,
            system,
            loads,
        })
    }

    /// State at `t0` with the displacement equilibrated against the given
    /// scalar fields and the force at `t0`.
    pub fn initial(&self, t0: f64, scalar: Option<&MacroState>) -> Result<MacroState> {
        let d = &self.system.dofs;
        let x = match scalar {
            Some(s) => s.to_vectors(d).1,
            None => vec![0.0; d.num_scalar],
        };
        let f = self.loads.displacement_load(self.system, t0);
        let u = if f.iter().all(|&v| v == 0.0) && x.iter().all(|&v| v == 0.0) {
            vec![0.0; d.num_u]
        } else {
            self.stepper.equilibrium(&x, &f)?
        };
        Ok(MacroState::from_vectors(d, t0, &u, &x))
    }

    /// One backward-Euler step.
    pub fn step(&self, state: &MacroState) -> Result<MacroState> {
        Ok(self.step_full(state)?.0)
    }

    fn step_full(&self, state: &MacroState) -> Result<(MacroState, Vec<f64>, Vec<f64>, Vec<f64>, usize)> {
        let d = &self.system.dofs;
        let t = state.time + self.stepper.dt;
        let (u0, x0) = state.to_vectors(d);
        let fu = self.loads.displacement_load(self.system, t);
        let fs = self.loads.scalar_load(self.system, t);
        let r = self.stepper.step(&u0, &x0, &fu, &fs)?;
        for w in &r.stats.warnings {
            log::warn!("t = {t}: {w}");
        }
        Ok((
            MacroState::from_vectors(d, t, &r.u, &r.x),
            r.u,
            r.x,
            fs,
            r.stats.iterations,
        ))
    }

    pub fn run(&self, time: &TimeGrid, initial: Option<MacroState>) -> Result<MacroRun> {
        let steps = time.steps()?;
        let d = &self.system.dofs;
        let mut state = match initial {
            Some(s) => s,
            None => self.initial(0.0, None)?,
        };
        let mut ledger = EnergyLedger::default();
        let (mut u, mut x) = state.to_vectors(d);
        ledger.start(&self.system.op, state.time, &u, &x);
        let mut outputs = vec![state.clone()];
        let mut iterations = 0;
        let every = time.output_every.max(1);
        for n in 1..=steps {
            let (next, un, xn, fs, its) = self.step_full(&state)?;
            iterations += its;
            ledger.record(&self.system.op, self.stepper.dt, next.time, &u, &x, &un, &xn, &fs);
            state = next;
            u = un;
            x = xn;
            if n % every == 0 || n == steps {
                outputs.push(state.clone());
            }
        }
        Ok(MacroRun {
            outputs,
            ledger,
            final_state: state,
            iterations,
        })
    }
}

/// Assembles and runs the macro model with the coefficients' own sources.
pub fn run(
    coeffs: &EffectiveCoefficients,
    resolution: usize,
    bc: ScalarBoundary,
    time: &TimeGrid,
    opts: &SolverOptions,
) -> Result<(MacroSystem, MacroRun)> {
    let system = setup(coeffs, resolution, bc)?;
    let sources = coeffs.sources();
    let run = {
        let sim = MacroSimulation::new(&system, time.dt, &sources, opts)?;
        sim.run(time, None)?
    };
    Ok((system, run))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective::upscale;
    use crate::material::{sample_phase, PhaseParameters};
    use crate::source::{PhaseSources, ScalarSource};
    use crate::unit_cell::{build_unit_cell, Inclusion};

    fn coefficients(sources: PhaseSources) -> EffectiveCoefficients {
        let cell = build_unit_cell(4, &Inclusion::centered_cube(0.25)).unwrap();
        let mut p = PhaseParameters::homogeneous(sample_phase(), 1.0, 1.0);
        p.phases[1].mu = 2.0;
        upscale(&cell, &p, &sources).unwrap().1
    }

    #[test]
    fn zero_sources_keep_zero_state() {
        let c = coefficients(PhaseSources::default());
        let tg = TimeGrid {
            dt: 0.1,
            t_end: 0.2,
            output_every: 1,
        };
        let (_, run) = run(&c, 3, ScalarBoundary::Mixed, &tg, &SolverOptions::default()).unwrap();
        assert_eq!(run.outputs.len(), 3);
        let s = &run.final_state;
        assert!(s.u.iter().flatten().chain(s.p.iter().flatten()).all(|&v| v == 0.0));
    }

    #[test]
    fn boundary_values_and_single_step() {
        let mut src = PhaseSources::default();
        src.fluid[0] = ScalarSource::constant(1.0);
        let c = coefficients(src);
        let sys = setup(&c, 3, ScalarBoundary::Mixed).unwrap();
        let sources = c.sources();
        let sim = MacroSimulation::new(&sys, 0.1, &sources, &SolverOptions::default()).unwrap();
        let tg = TimeGrid {
            dt: 0.1,
            t_end: 0.1,
            output_every: 1,
        };
        let r = sim.run(&tg, None).unwrap();
        let one = sim.step(&MacroState::zero(&sys.dofs.grid, 0.0)).unwrap();
        assert_eq!(r.final_state, one);
        let g = sys.dofs.grid;
        for v in 0..g.num_nodes() {
            if g.is_boundary_node(v) {
                assert_eq!(one.p[0][v], 0.0);
                assert_eq!(one.theta[0][v], 0.0);
                assert_eq!(one.u[v], [0.0; 3]);
            }
        }
        assert!(one.p[0][g.node_index([1, 1, 1])] > 0.0);
    }

    #[test]
    fn decoupled_blocks_are_triangular() {
        let cell = build_unit_cell(4, &Inclusion::centered_cube(0.25)).unwrap();
        let mut p = PhaseParameters::homogeneous(sample_phase(), 1.0, 1.0);
        for ph in &mut p.phases {
            ph.alpha = 0.0;
            ph.gamma = 0.0;
        }
        let c = upscale(&cell, &p, &PhaseSources::default()).unwrap().1;
        let sys = setup(&c, 2, ScalarBoundary::Mixed).unwrap();
        for (i, k) in sys.dofs.kinds.iter().enumerate() {
            if *k == FieldKind::Temperature {
                let (cols, vals) = sys.op.strain.row(i);
                assert!(cols.is_empty() || vals.iter().all(|&v| v == 0.0));
                let (cols, vals) = sys.op.storage_cross.row(i);
                assert!(cols.is_empty() || vals.iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn well_posedness_guard() {
        let mut c = coefficients(PhaseSources::default());
        c.alpha1_star = 10.0;
        assert!(matches!(
            setup(&c, 2, ScalarBoundary::Mixed),
            Err(Error::WellPosedness(_))
        ));
    }
}
