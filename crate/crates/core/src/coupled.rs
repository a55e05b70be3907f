//! Monolithic backward-Euler stepping of the displacement/scalar block
//! system shared by the macro and micro solvers, and the energy ledger.
//!
//! Unknowns are split into displacement `u` and scalar fields `x` (pressures
//! and temperatures of both phases). One step solves
//!
//! ```text
//! [ K   G          ] [u]   [ F_u                                  ]
//! [ C   S + dt T   ] [x] = [ dt F_s + C u_prev + S x_prev         ]
//! ```
//!
//! where `S` collects storage terms and `T` diffusion plus exchange.

use crate::error::{Error, Result};
use crate::fem::solver::{fgmres, pcg_with, DenseLu, SolveStats, SolverMethod, SolverOptions, DENSE_LIMIT};
use crate::fem::sparse::{dot, CsrMatrix, PatternBuilder, Sink};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Pressure,
    Temperature,
}

/// Assembled blocks of a coupled problem.
#[derive(Clone, Debug)]
pub struct CoupledOperator {
    pub elastic: CsrMatrix,
    /// Momentum coupling to the scalar gradients, `u` rows by `x` columns.
    pub gradient: CsrMatrix,
    /// Rate coupling of the scalar rows to the strain, `x` rows by `u` columns.
    pub strain: CsrMatrix,
    /// Field-diagonal storage (`φ` for pressures, `c` for temperatures).
    pub storage: CsrMatrix,
    /// Pressure-temperature storage coupling `α`.
    pub storage_cross: CsrMatrix,
    pub diffusion: CsrMatrix,
    pub exchange: CsrMatrix,
    pub kinds: Vec<FieldKind>,
}

/// Runs several assembly visits into matrices sharing one pattern.
pub fn assemble_shared<const N: usize>(n: usize, visits: [&dyn Fn(&mut dyn Sink); N]) -> [CsrMatrix; N] {
    let mut pb = PatternBuilder::new(n, n);
    for v in &visits {
        v(&mut pb);
    }
    let zero = pb.finish();
    visits.map(|v| {
        let mut m = zero.clone();
        v(&mut m);
        m
    })
}

impl CoupledOperator {
    pub fn num_displacement(&self) -> usize {
        self.elastic.nrows()
    }

    pub fn num_scalar(&self) -> usize {
        self.storage.nrows()
    }

    pub fn check(&self) -> Result<()> {
        let (nu, ns) = (self.num_displacement(), self.num_scalar());
        let shapes = [
            ("gradient", &self.gradient, nu, ns),
            ("strain", &self.strain, ns, nu),
            ("storage_cross", &self.storage_cross, ns, ns),
            ("diffusion", &self.diffusion, ns, ns),
            ("exchange", &self.exchange, ns, ns),
        ];
        for (name, m, r, c) in shapes {
            if m.nrows() != r || m.ncols() != c {
                return Err(Error::Assembly(format!(
                    "{name} block is {}x{}, expected {r}x{c}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if self.kinds.len() != ns {
            return Err(Error::Assembly("field kinds do not cover the scalar unknowns".into()));
        }
        Ok(())
    }

    /// `S + cross + dt (diffusion + exchange)` on the shared pattern.
    pub fn step_matrix(&self, dt: f64) -> CsrMatrix {
        let mut m = self.storage.clone();
        m.axpy(1.0, &self.storage_cross);
        m.axpy(dt, &self.diffusion);
        m.axpy(dt, &self.exchange);
        m
    }

    /// Quadratic energy `½ uᵀK u + ½ xᵀ(S + cross) x`, split into parts.
    pub fn energies(&self, u: &[f64], x: &[f64]) -> (f64, f64) {
        let e = 0.5 * self.elastic.bilinear(u, u);
        let s = 0.5 * (self.storage.bilinear(x, x) + self.storage_cross.bilinear(x, x));
        (e, s)
    }
}

/// Symmetric diagonal scaling `D^{-1/2}` of a block.
fn scaling(diag: &[f64]) -> Vec<f64> {
    diag.iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 1.0 })
        .collect()
}

fn scaled(m: &CsrMatrix, rows: &[f64], cols: &[f64]) -> CsrMatrix {
    let mut out = m.zeroed();
    for r in 0..m.nrows() {
        let (cs, vs) = m.row(r);
        for (&c, &v) in cs.iter().zip(vs) {
            out.add_entry(r, c as usize, v * rows[r] * cols[c as usize]);
        }
    }
    out
}

/// Backward-Euler stepper for a fixed operator and time step.
pub struct Stepper {
    pub op: CoupledOperator,
    pub dt: f64,
    pub opts: SolverOptions,
    step: CsrMatrix,
    su: Vec<f64>,
    ss: Vec<f64>,
    k_hat: CsrMatrix,
    g_hat: CsrMatrix,
    c_hat: CsrMatrix,
    s_hat: CsrMatrix,
    ones_u: Vec<f64>,
    ones_s: Vec<f64>,
    dense: Option<DenseLu>,
    elastic_diag_inv: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct StepResult {
    pub u: Vec<f64>,
    pub x: Vec<f64>,
    pub stats: SolveStats,
}

impl Stepper {
    pub fn new(op: CoupledOperator, dt: f64, opts: SolverOptions) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        op.check()?;
        let step = op.step_matrix(dt);
        let su = scaling(&op.elastic.diagonal());
        let ss = scaling(&step.diagonal());
        let k_hat = scaled(&op.elastic, &su, &su);
        let g_hat = scaled(&op.gradient, &su, &ss);
        let c_hat = scaled(&op.strain, &ss, &su);
        let s_hat = scaled(&step, &ss, &ss);
        let n = op.num_displacement() + op.num_scalar();
        let dense = if opts.method == SolverMethod::Dense {
            if n > DENSE_LIMIT {
                return Err(Error::Config(format!(
                    "dense solver requested for {n} unknowns (limit {DENSE_LIMIT})"
                )));
            }
            Some(DenseLu::new(&monolithic(&k_hat, &g_hat, &c_hat, &s_hat))?)
        } else {
            None
        };
        let elastic_diag_inv = op
            .elastic
            .diagonal()
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect();
        Ok(Self {
            ones_u: vec![1.0; k_hat.nrows()],
            ones_s: vec![1.0; s_hat.nrows()],
            op,
            dt,
            opts,
            step,
            su,
            ss,
            k_hat,
            g_hat,
            c_hat,
            s_hat,
            dense,
            elastic_diag_inv,
        })
    }

    pub fn step_matrix(&self) -> &CsrMatrix {
        &self.step
    }

    fn apply_hat(&self, x: &[f64], y: &mut [f64]) {
        let nu = self.k_hat.nrows();
        let (xu, xs) = x.split_at(nu);
        let (yu, ys) = y.split_at_mut(nu);
        self.k_hat.mul_vec(xu, yu);
        if !xs.is_empty() {
            self.g_hat.mul_vec_add(1.0, xs, yu);
            self.s_hat.mul_vec(xs, ys);
            self.c_hat.mul_vec_add(1.0, xu, ys);
        }
    }

    /// Block lower-triangular preconditioner with inexact inner solves.
    fn precondition(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        let nu = self.k_hat.nrows();
        let (ru, rs) = r.split_at(nu);
        let (zu, zs) = z.split_at_mut(nu);
        zu.iter_mut().for_each(|v| *v = 0.0);
        let _ = pcg_with(&self.k_hat, &self.ones_u, ru, zu, self.opts.inner_tol, 400, None);
        if !rs.is_empty() {
            let mut t = rs.to_vec();
            self.c_hat.mul_vec_add(-1.0, zu, &mut t);
            zs.iter_mut().for_each(|v| *v = 0.0);
            let _ = pcg_with(&self.s_hat, &self.ones_s, &t, zs, self.opts.inner_tol, 400, None);
        }
        Ok(())
    }

    /// Solves the monolithic system for given right-hand sides, warm-started
    /// from `guess`.
    pub fn solve(&self, rhs_u: &[f64], rhs_s: &[f64], guess: Option<(&[f64], &[f64])>) -> Result<StepResult> {
        let nu = self.k_hat.nrows();
        let ns = self.s_hat.nrows();
        let mut b = Vec::with_capacity(nu + ns);
        b.extend(rhs_u.iter().zip(&self.su).map(|(v, s)| v * s));
        b.extend(rhs_s.iter().zip(&self.ss).map(|(v, s)| v * s));
        let mut y = vec![0.0; nu + ns];
        if let Some((gu, gs)) = guess {
            for i in 0..nu {
                y[i] = gu[i] / self.su[i];
            }
            for i in 0..ns {
                y[nu + i] = gs[i] / self.ss[i];
            }
        }
        let stats = if let Some(lu) = &self.dense {
            y = lu.solve(&b)?;
            SolveStats {
                iterations: 1,
                residual: self.residual(&y, &b),
                warnings: Vec::new(),
            }
        } else {
            let r = fgmres(
                &|v, o| self.apply_hat(v, o),
                &mut |r, z| self.precondition(r, z),
                &b,
                &mut y,
                self.opts.tol,
                self.opts.restart,
                self.opts.max_iter,
            );
            match r {
                Ok(s) => s,
                Err(e) if self.opts.dense_fallback && nu + ns <= DENSE_LIMIT => {
                    let msg = format!("{e}; fell back to dense LU");
                    log::warn!("{msg}");
                    let lu = DenseLu::new(&monolithic(&self.k_hat, &self.g_hat, &self.c_hat, &self.s_hat))?;
                    y = lu.solve(&b)?;
                    SolveStats {
                        iterations: 1,
                        residual: self.residual(&y, &b),
                        warnings: vec![msg],
                    }
                }
                Err(e) => return Err(e.tagged("coupled step")),
            }
        };
        let u = (0..nu).map(|i| y[i] * self.su[i]).collect();
        let x = (0..ns).map(|i| y[nu + i] * self.ss[i]).collect();
        Ok(StepResult { u, x, stats })
    }

    fn residual(&self, y: &[f64], b: &[f64]) -> f64 {
        let mut r = vec![0.0; y.len()];
        self.apply_hat(y, &mut r);
        let num: f64 = r.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let den = dot(b, b).sqrt();
        if den > 0.0 {
            num / den
        } else {
            num
        }
    }

    /// One backward-Euler step from `(u_prev, x_prev)` with loads evaluated
    /// at the new time level.
    pub fn step(&self, u_prev: &[f64], x_prev: &[f64], load_u: &[f64], load_s: &[f64]) -> Result<StepResult> {
        let mut rhs_s: Vec<f64> = load_s.iter().map(|v| v * self.dt).collect();
        if !rhs_s.is_empty() {
            self.op.strain.mul_vec_add(1.0, u_prev, &mut rhs_s);
            self.op.storage.mul_vec_add(1.0, x_prev, &mut rhs_s);
            self.op.storage_cross.mul_vec_add(1.0, x_prev, &mut rhs_s);
        }
        self.solve(load_u, &rhs_s, Some((u_prev, x_prev)))
    }

    /// Displacement in equilibrium with scalar fields `x` and force `load_u`.
    pub fn equilibrium(&self, x: &[f64], load_u: &[f64]) -> Result<Vec<f64>> {
        let mut rhs = load_u.to_vec();
        if !x.is_empty() {
            self.op.gradient.mul_vec_add(-1.0, x, &mut rhs);
        }
        let mut u = vec![0.0; rhs.len()];
        let max_iter = 20 * rhs.len() + 100;
        pcg_with(
            &self.op.elastic,
            &self.elastic_diag_inv,
            &rhs,
            &mut u,
            self.opts.tol * 1e-2,
            max_iter,
            None,
        )
        .map_err(|e| e.tagged("initial equilibrium"))?;
        Ok(u)
    }
}

/// Dense-capable single matrix of the whole block system.
pub fn monolithic(k: &CsrMatrix, g: &CsrMatrix, c: &CsrMatrix, s: &CsrMatrix) -> CsrMatrix {
    let nu = k.nrows();
    let n = nu + s.nrows();
    let mut rows = vec![vec![0.0; n]; n];
    let mut put = |m: &CsrMatrix, ro: usize, co: usize| {
        for r in 0..m.nrows() {
            let (cs, vs) = m.row(r);
            for (&cc, &v) in cs.iter().zip(vs) {
                rows[ro + r][co + cc as usize] += v;
            }
        }
    };
    put(k, 0, 0);
    put(g, 0, nu);
    put(c, nu, 0);
    put(s, nu, nu);
    CsrMatrix::from_dense(&rows)
}

/// Accumulated terms of the discrete pressure or thermal identity.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IdentityTerms {
    /// `Σ_n (S δx)·x_n` over the fields of this kind.
    pub storage: f64,
    /// `Σ_n δX·(x_n + x_{n-1})/2` with `X = C u + cross x`.
    pub coupling: f64,
    pub diffusion: f64,
    pub exchange: f64,
    pub source: f64,
}

impl IdentityTerms {
    pub fn residual(&self) -> f64 {
        self.storage + self.coupling + self.diffusion + self.exchange - self.source
    }

    /// Residual relative to the accumulated dissipation.
    pub fn relative_residual(&self) -> f64 {
        let scale = self.diffusion.abs() + self.exchange.abs();
        let r = self.residual();
        if scale > 0.0 {
            r.abs() / scale
        } else {
            r.abs()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LedgerRow {
    pub time: f64,
    pub elastic_energy: f64,
    pub storage_energy: f64,
    /// Cumulative `dt Σ xᵀ T_diff x`.
    pub diffusion_dissipation: f64,
    /// Cumulative `dt Σ xᵀ T_exch x`.
    pub exchange_dissipation: f64,
    /// Cumulative `dt Σ F_s·x`.
    pub source_work: f64,
    pub pressure_residual: f64,
    pub thermal_residual: f64,
}

impl LedgerRow {
    pub const HEADER: &'static str = "time,elastic_energy,storage_energy,diffusion_dissipation,exchange_dissipation,source_work,pressure_identity_residual,thermal_identity_residual";

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.time,
            self.elastic_energy,
            self.storage_energy,
            self.diffusion_dissipation,
            self.exchange_dissipation,
            self.source_work,
            self.pressure_residual,
            self.thermal_residual
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct EnergyLedger {
    pub rows: Vec<LedgerRow>,
    pub pressure: IdentityTerms,
    pub thermal: IdentityTerms,
}

impl EnergyLedger {
    pub fn start(&mut self, op: &CoupledOperator, t: f64, u: &[f64], x: &[f64]) {
        let (e, s) = op.energies(u, x);
        self.rows.push(LedgerRow {
            time: t,
            elastic_energy: e,
            storage_energy: s,
            diffusion_dissipation: 0.0,
            exchange_dissipation: 0.0,
            source_work: 0.0,
            pressure_residual: 0.0,
            thermal_residual: 0.0,
        });
    }

    /// Records step `n-1 → n` with scalar load `load_s` at the new level.
    #[allow(clippy::too_many_arguments)]
    pub fn record(
        &mut self,
        op: &CoupledOperator,
        dt: f64,
        t: f64,
        u_prev: &[f64],
        x_prev: &[f64],
        u: &[f64],
        x: &[f64],
        load_s: &[f64],
    ) {
        let ns = x.len();
        let dx: Vec<f64> = (0..ns).map(|i| x[i] - x_prev[i]).collect();
        let du: Vec<f64> = (0..u.len()).map(|i| u[i] - u_prev[i]).collect();
        let sdx = op.storage.apply(&dx);
        let mut dxx = op.strain.apply(&du);
        op.storage_cross.mul_vec_add(1.0, &dx, &mut dxx);
        let tdx = op.diffusion.apply(x);
        let edx = op.exchange.apply(x);
        let mut step = [IdentityTerms::default(); 2];
        for i in 0..ns {
            let k = usize::from(op.kinds[i] == FieldKind::Temperature);
            let s = &mut step[k];
            s.storage += sdx[i] * x[i];
            s.coupling += dxx[i] * 0.5 * (x[i] + x_prev[i]);
            s.diffusion += dt * tdx[i] * x[i];
            s.exchange += dt * edx[i] * x[i];
            s.source += dt * load_s[i] * x[i];
        }
        for (acc, s) in [(&mut self.pressure, step[0]), (&mut self.thermal, step[1])] {
            acc.storage += s.storage;
            acc.coupling += s.coupling;
            acc.diffusion += s.diffusion;
            acc.exchange += s.exchange;
            acc.source += s.source;
        }
        let (e, s) = op.energies(u, x);
        self.rows.push(LedgerRow {
            time: t,
            elastic_energy: e,
            storage_energy: s,
            diffusion_dissipation: self.pressure.diffusion + self.thermal.diffusion,
            exchange_dissipation: self.pressure.exchange + self.thermal.exchange,
            source_work: self.pressure.source + self.thermal.source,
            pressure_residual: self.pressure.residual(),
            thermal_residual: self.thermal.residual(),
        });
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(LedgerRow::HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.csv());
            s.push('\n');
        }
        s
    }
}
