//! Two-field diffusion with linear exchange, without any mechanics.
//!
//! Used as a reference for the scalar subsystem of the macro model when the
//! mechanical coupling is switched off.

use crate::error::Result;
use crate::fem::assembly::{flat, scalar_load};
use crate::fem::element::{mass, scalar_stiffness};
use crate::fem::solver::pcg;
use crate::fem::sparse::{assemble, Sink};
use crate::fem::{CsrMatrix, Grid, NO_DOF};
use crate::material::Mat3;
use crate::source::ScalarSource;

/// `s_m ∂_t x_m − div(K_m ∇x_m) ± w (x_1 − x_2) = g_m`, `x_1 = 0` on `∂Ω`,
/// `x_2` insulated.
#[derive(Clone, Debug)]
pub struct ExchangeDiffusion {
    pub storage: [f64; 2],
    pub diffusion: [Mat3; 2],
    pub exchange: f64,
    pub sources: [ScalarSource; 2],
}

pub struct ReducedSolver {
    pub grid: Grid,
    /// `index[m][node]`
    pub index: [Vec<usize>; 2],
    lhs: CsrMatrix,
    storage: CsrMatrix,
    dt: f64,
    model: ExchangeDiffusion,
    n: usize,
}

impl ReducedSolver {
    pub fn new(model: ExchangeDiffusion, resolution: usize, dt: f64) -> Self {
        let grid = Grid::bounded(resolution);
        let nn = grid.num_nodes();
        let mut index = [vec![NO_DOF; nn], vec![NO_DOF; nn]];
        let mut n = 0;
        for v in 0..nn {
            if !grid.is_boundary_node(v) {
                index[0][v] = n;
                n += 1;
            }
        }
        for v in 0..nn {
            index[1][v] = n;
            n += 1;
        }
        let h = grid.spacing();
        let m = flat(&mass(h));
        let k = [
            flat(&scalar_stiffness(h, &model.diffusion[0])),
            flat(&scalar_stiffness(h, &model.diffusion[1])),
        ];
        let dofs = |m: usize, c: usize| grid.cell_nodes(c).map(|v| index[m][v]);
        let storage = assemble(n, n, |s: &mut dyn Sink| {
            for c in 0..grid.num_cells() {
                for f in 0..2 {
                    let d = dofs(f, c);
                    let local: Vec<f64> = m.iter().map(|v| v * model.storage[f]).collect();
                    s.add(&d, &d, &local);
                }
            }
        });
        let lhs = assemble(n, n, |s: &mut dyn Sink| {
            for c in 0..grid.num_cells() {
                let d = [dofs(0, c), dofs(1, c)];
                for f in 0..2 {
                    let local: Vec<f64> = m
                        .iter()
                        .zip(&k[f])
                        .map(|(mv, kv)| mv * (model.storage[f] + dt * model.exchange) + dt * kv)
                        .collect();
                    s.add(&d[f], &d[f], &local);
                }
                let off: Vec<f64> = m.iter().map(|v| -dt * model.exchange * v).collect();
                s.add(&d[0], &d[1], &off);
                s.add(&d[1], &d[0], &off);
            }
        });
        Self {
            grid,
            index,
            lhs,
            storage,
            dt,
            model,
            n,
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.n
    }

    /// Advances `x` from `t` to `t + dt`.
    pub fn step(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        let t1 = t + self.dt;
        let mut rhs = self.storage.apply(x);
        for f in 0..2 {
            let src = &self.model.sources[f];
            if src.is_zero() {
                continue;
            }
            let g = scalar_load(
                &self.grid,
                self.n,
                3,
                |c| Some(self.grid.cell_nodes(c).map(|v| self.index[f][v])),
                |_, p| src.eval(p, t1),
            );
            for (r, gv) in rhs.iter_mut().zip(g) {
                *r += self.dt * gv;
            }
        }
        let mut out = x.to_vec();
        pcg(&self.lhs, &rhs, &mut out, 1e-12, 10 * self.n + 100, None)?;
        Ok(out)
    }

    /// Nodal values of field `m` on the full grid.
    pub fn nodal(&self, x: &[f64], m: usize) -> Vec<f64> {
        self.index[m]
            .iter()
            .map(|&d| if d == NO_DOF { 0.0 } else { x[d] })
            .collect()
    }
}
