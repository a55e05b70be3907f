//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use thermoporo::effective::{upscale, EffectiveCoefficients};
use thermoporo::fem::assembly::{scalar_load, vector_load};
use thermoporo::fem::element::gauss_points;
use thermoporo::fem::Grid;
use thermoporo::macro_solver::{MacroLoads, MacroState, MacroSystem};
use thermoporo::material::{ElasticTensor, Mat3, Phase, PhaseParameters, VOIGT};
use thermoporo::source::{PhaseSources, Profile, ScalarSource, Shape};
use thermoporo::unit_cell::{build_unit_cell, Inclusion};

pub fn matrix_phase() -> Phase {
    Phase {
        lambda: 2.0,
        mu: 1.0,
        beta: 0.8,
        gamma: 0.3,
        alpha: 0.1,
        phi: 0.5,
        kappa: 1.0,
        conductivity: 1.5,
        capacity: 1.2,
    }
}

/// Stiffness and transport doubled.
pub fn stiff_phase() -> Phase {
    let mut p = matrix_phase();
    p.lambda *= 2.0;
    p.mu *= 2.0;
    p.kappa *= 2.0;
    p.conductivity *= 2.0;
    p
}

pub fn contrast_params() -> PhaseParameters {
    let mut p = PhaseParameters::homogeneous(matrix_phase(), 1.0, 1.0);
    p.phases[1] = stiff_phase();
    p
}

pub fn bump(a: f64) -> ScalarSource {
    ScalarSource::single(a, Shape::SineBump, Profile::Constant)
}

/// Smooth fluid and heat sources in both phases.
pub fn smooth_sources() -> PhaseSources {
    PhaseSources {
        force: Default::default(),
        fluid: [bump(1.0), bump(1.0)],
        heat: [bump(1.0), bump(1.0)],
    }
}

/// Cube coefficients with the inclusion-side transport and gradient
/// couplings switched on, so every block of the macro operator is active.
pub fn full_coefficients() -> EffectiveCoefficients {
    let cell = build_unit_cell(4, &Inclusion::centered_cube(0.25)).unwrap();
    let (_, mut c) = upscale(&cell, &contrast_params(), &Default::default()).unwrap();
    c.k2 = [[0.3, 0.0, 0.0], [0.0, 0.4, 0.0], [0.0, 0.0, 0.5]];
    c.l2 = [[0.6, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 0.4]];
    c.b2 = [[0.05, 0.01, 0.0], [0.01, 0.04, 0.0], [0.0, 0.0, 0.03]];
    c.d2 = [[0.02, 0.0, 0.005], [0.0, 0.02, 0.0], [0.005, 0.0, 0.01]];
    c
}

/// Plain Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

/// Layered-medium average for layers normal to `axis`, with volume
/// fractions and raw Voigt stiffnesses. Engineering shear strains.
pub fn backus(axis: usize, layers: &[(f64, [[f64; 6]; 6])]) -> [[f64; 6]; 6] {
    // Voigt slots whose stress component is continuous across the layers
    let normal: Vec<usize> = (0..6)
        .filter(|&a| {
            let (i, j) = VOIGT[a];
            i == axis || j == axis
        })
        .collect();
    let tangential: Vec<usize> = (0..6).filter(|a| !normal.contains(a)).collect();
    let sub = |c: &[[f64; 6]; 6], r: &[usize], s: &[usize]| DMatrix::from_fn(r.len(), s.len(), |i, j| c[r[i]][s[j]]);
    let mut inv_nn = DMatrix::zeros(3, 3);
    let mut inv_nt = DMatrix::zeros(3, 3);
    let mut tn_inv = DMatrix::zeros(3, 3);
    let mut schur = DMatrix::zeros(3, 3);
    for (f, c) in layers {
        let nn_inv = sub(c, &normal, &normal).try_inverse().unwrap();
        let nt = sub(c, &normal, &tangential);
        let tn = sub(c, &tangential, &normal);
        let tt = sub(c, &tangential, &tangential);
        inv_nn += *f * &nn_inv;
        inv_nt += *f * (&nn_inv * &nt);
        tn_inv += *f * (&tn * &nn_inv);
        schur += *f * (&tt - &tn * &nn_inv * &nt);
    }
    let c_nn = inv_nn.try_inverse().unwrap();
    let c_nt = &c_nn * &inv_nt;
    let c_tn = &tn_inv * &c_nn;
    let c_tt = &schur + &tn_inv * &c_nn * &inv_nt;
    let mut out = [[0.0; 6]; 6];
    for (i, &a) in normal.iter().enumerate() {
        for (j, &b) in normal.iter().enumerate() {
            out[a][b] = c_nn[(i, j)];
        }
        for (j, &b) in tangential.iter().enumerate() {
            out[a][b] = c_nt[(i, j)];
        }
    }
    for (i, &a) in tangential.iter().enumerate() {
        for (j, &b) in normal.iter().enumerate() {
            out[a][b] = c_tn[(i, j)];
        }
        for (j, &b) in tangential.iter().enumerate() {
            out[a][b] = c_tt[(i, j)];
        }
    }
    out
}

pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    m.lu()
        .solve(&DVector::from_column_slice(b))
        .unwrap()
        .iter()
        .copied()
        .collect()
}

/// `amp · Π_d f_d(k_d π x_d)` with `f_d` sine or cosine.
#[derive(Clone, Copy, Debug)]
pub struct Separable {
    pub amp: f64,
    pub k: [f64; 3],
    pub cosine: [bool; 3],
}

impl Separable {
    pub const fn sine(amp: f64, k: [f64; 3]) -> Self {
        Self {
            amp,
            k,
            cosine: [false; 3],
        }
    }

    pub const fn cosine(amp: f64, k: [f64; 3]) -> Self {
        Self {
            amp,
            k,
            cosine: [true; 3],
        }
    }

    /// Value, first and second derivative of each factor.
    fn factors(&self, x: [f64; 3]) -> [[f64; 3]; 3] {
        std::array::from_fn(|d| {
            let w = self.k[d] * PI;
            let (s, c) = (w * x[d]).sin_cos();
            if self.cosine[d] {
                [c, -w * s, -w * w * c]
            } else {
                [s, w * c, -w * w * s]
            }
        })
    }

    pub fn value(&self, x: [f64; 3]) -> f64 {
        let f = self.factors(x);
        self.amp * f[0][0] * f[1][0] * f[2][0]
    }

    pub fn grad(&self, x: [f64; 3]) -> [f64; 3] {
        let f = self.factors(x);
        std::array::from_fn(|i| self.amp * (0..3).map(|d| if d == i { f[d][1] } else { f[d][0] }).product::<f64>())
    }

    pub fn hessian(&self, x: [f64; 3]) -> Mat3 {
        let f = self.factors(x);
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                self.amp
                    * (0..3)
                        .map(|d| match (d == i, d == j) {
                            (true, true) => f[d][2],
                            (true, false) | (false, true) => f[d][1],
                            _ => f[d][0],
                        })
                        .product::<f64>()
            })
        })
    }
}

/// Manufactured macro solution `time(t) · S(x)` for every field, with the
/// matching sources of the homogenized model.
pub struct Manufactured {
    pub coeffs: EffectiveCoefficients,
    pub u: [Separable; 3],
    pub p: [Separable; 2],
    pub theta: [Separable; 2],
    /// `(T(t), T'(t))`
    pub time: fn(f64) -> (f64, f64),
}

impl Manufactured {
    pub fn standard(coeffs: EffectiveCoefficients, time: fn(f64) -> (f64, f64)) -> Self {
        Self {
            coeffs,
            u: [
                Separable::sine(1.0, [1.0, 1.0, 1.0]),
                Separable::sine(0.5, [1.0, 2.0, 1.0]),
                Separable::sine(-0.7, [2.0, 1.0, 1.0]),
            ],
            p: [
                Separable::sine(1.0, [1.0, 1.0, 2.0]),
                Separable::cosine(0.8, [1.0, 1.0, 1.0]),
            ],
            theta: [
                Separable::sine(0.6, [2.0, 1.0, 1.0]),
                Separable::cosine(-0.5, [1.0, 2.0, 1.0]),
            ],
            time,
        }
    }

    pub fn force(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let (tt, _) = (self.time)(t);
        let c = ElasticTensor::from_voigt(&self.coeffs.a_hom).c;
        let hu: [Mat3; 3] = std::array::from_fn(|k| self.u[k].hessian(x));
        let mut f = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        f[i] -= c[i][j][k][l] * hu[k][j][l];
                    }
                }
            }
        }
        for m in 0..2 {
            let ph = self.coeffs.phase(m);
            let gp = self.p[m].grad(x);
            let gt = self.theta[m].grad(x);
            for k in 0..3 {
                for i in 0..3 {
                    f[k] += ph.biot[i][k] * gp[i] + ph.dilation[i][k] * gt[i];
                }
            }
        }
        f.map(|v| v * tt)
    }

    fn strain_rate_contraction(&self, x: [f64; 3], m: &Mat3) -> f64 {
        let g: [[f64; 3]; 3] = std::array::from_fn(|k| self.u[k].grad(x));
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += m[i][j] * 0.5 * (g[i][j] + g[j][i]);
            }
        }
        s
    }

    /// Source of the pressure (`kind` 0) or temperature (`kind` 1) equation
    /// of phase `m`.
    pub fn scalar_source(&self, kind: usize, m: usize, x: [f64; 3], t: f64) -> f64 {
        let (tt, dt) = (self.time)(t);
        let ph = self.coeffs.phase(m);
        let (own, other_field, own_store, strain_coef, tensor, exchange) = if kind == 0 {
            (
                &self.p,
                &self.theta,
                ph.phi_star,
                ph.beta,
                &ph.permeability,
                self.coeffs.zeta_star,
            )
        } else {
            (
                &self.theta,
                &self.p,
                ph.c_star,
                ph.gamma,
                &ph.conductivity,
                self.coeffs.omega_star,
            )
        };
        let h = own[m].hessian(x);
        let mut div = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                div += tensor[i][j] * h[i][j];
            }
        }
        let coupling = ph.coupling.map(|r| r.map(|v| v * strain_coef));
        let jump = own[m].value(x) - own[1 - m].value(x);
        dt * (own_store * own[m].value(x)
            + self.strain_rate_contraction(x, &coupling)
            + ph.alpha_star * other_field[m].value(x))
            + tt * (-div + exchange * jump)
    }

    pub fn exact(&self, x: [f64; 3], t: f64) -> ([f64; 3], [f64; 2], [f64; 2]) {
        let (tt, _) = (self.time)(t);
        (
            self.u.map(|s| tt * s.value(x)),
            [0, 1].map(|m| tt * self.p[m].value(x)),
            [0, 1].map(|m| tt * self.theta[m].value(x)),
        )
    }

    /// L² errors of (u, p₁, p₂, θ₁, θ₂) against the exact solution.
    pub fn errors(&self, grid: &Grid, s: &MacroState) -> [f64; 5] {
        let h = grid.spacing();
        let pts = gauss_points(3);
        let mut acc = [0.0; 5];
        for c in 0..grid.num_cells() {
            let o = grid.cell_origin(c);
            for (xi, w) in &pts {
                let x = [o[0] + h * xi[0], o[1] + h * xi[1], o[2] + h * xi[2]];
                let got = s.sample_in(grid, c, *xi);
                let (u, p, th) = self.exact(x, s.time);
                let wt = w * h * h * h;
                acc[0] += wt * (0..3).map(|i| (got.u[i] - u[i]).powi(2)).sum::<f64>();
                acc[1] += wt * (got.p[0] - p[0]).powi(2);
                acc[2] += wt * (got.p[1] - p[1]).powi(2);
                acc[3] += wt * (got.theta[0] - th[0]).powi(2);
                acc[4] += wt * (got.theta[1] - th[1]).powi(2);
            }
        }
        acc.map(f64::sqrt)
    }
}

impl MacroLoads for Manufactured {
    fn displacement_load(&self, sys: &MacroSystem, t: f64) -> Vec<f64> {
        let d = &sys.dofs;
        vector_load(&d.grid, d.num_u, 4, |c| Some(d.element_u(c)), |_, x| self.force(x, t))
    }

    fn scalar_load(&self, sys: &MacroSystem, t: f64) -> Vec<f64> {
        let d = &sys.dofs;
        let mut out = vec![0.0; d.num_scalar];
        for kind in 0..2 {
            for m in 0..2 {
                let part = scalar_load(
                    &d.grid,
                    d.num_scalar,
                    4,
                    |c| Some(d.element_scalar(kind, m, c)),
                    |_, x| self.scalar_source(kind, m, x, t),
                );
                for (o, v) in out.iter_mut().zip(part) {
                    *o += v;
                }
            }
        }
        out
    }
}

/// L² distance between two macro states on the same grid.
pub fn state_distance(grid: &Grid, a: &MacroState, b: &MacroState) -> [f64; 5] {
    let h = grid.spacing();
    let pts = gauss_points(3);
    let mut acc = [0.0; 5];
    for c in 0..grid.num_cells() {
        for (xi, w) in &pts {
            let (x, y) = (a.sample_in(grid, c, *xi), b.sample_in(grid, c, *xi));
            let wt = w * h * h * h;
            acc[0] += wt * (0..3).map(|i| (x.u[i] - y.u[i]).powi(2)).sum::<f64>();
            acc[1] += wt * (x.p[0] - y.p[0]).powi(2);
            acc[2] += wt * (x.p[1] - y.p[1]).powi(2);
            acc[3] += wt * (x.theta[0] - y.theta[0]).powi(2);
            acc[4] += wt * (x.theta[1] - y.theta[1]).powi(2);
        }
    }
    acc.map(f64::sqrt)
}
