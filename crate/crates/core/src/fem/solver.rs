//! Krylov solvers, the quotient-space projector and a dense fallback.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::sparse::{dot, norm, CsrMatrix};
use crate::error::{Error, Result};

/// Problems smaller than this may be routed through dense LU.
pub const DENSE_LIMIT: usize = 5000;

/// Relative kernel component of a right-hand side below which projecting it
/// out is treated as round-off and not reported.
const ROUNDOFF_KERNEL: f64 = 1e-13;
/// Largest relative kernel component accepted (and projected out).
pub const KERNEL_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    #[default]
    Iterative,
    /// Dense LU; only allowed below [`DENSE_LIMIT`] unknowns.
    Dense,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub method: SolverMethod,
    /// Relative residual of the outer solve.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative residual of the inner block solves inside the preconditioner.
    pub inner_tol: f64,
    pub restart: usize,
    /// Retry with dense LU when the iterative solve fails on a small system.
    pub dense_fallback: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: SolverMethod::Iterative,
            tol: 1e-10,
            max_iter: 5000,
            inner_tol: 1e-3,
            restart: 60,
            dense_fallback: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
    pub warnings: Vec<String>,
}

/// Removes the per-component mean of a vector, realizing the quotient by
/// constants on each connected component of a support.
#[derive(Clone, Debug)]
pub struct ComponentProjector {
    component: Vec<u32>,
    sizes: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl ComponentProjector {
    pub fn new(component: Vec<u32>) -> Self {
        let n = component.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
        let mut sizes = vec![0.0; n];
        for &c in &component {
            sizes[c as usize] += 1.0;
        }
        Self {
            component,
            sizes,
            weights: None,
        }
    }

    /// Single component covering every entry.
    pub fn constants(n: usize) -> Self {
        Self::new(vec![0; n])
    }

    /// Weights used by [`normalize`](Self::normalize), e.g. lumped masses.
    pub fn with_weights(mut self, w: Vec<f64>) -> Self {
        assert_eq!(w.len(), self.component.len());
        self.weights = Some(w);
        self
    }

    pub fn num_components(&self) -> usize {
        self.sizes.len()
    }

    pub fn component_of(&self, i: usize) -> usize {
        self.component[i] as usize
    }

    fn means(&self, v: &[f64], w: Option<&[f64]>) -> Vec<f64> {
        let n = self.sizes.len();
        let mut s = vec![0.0; n];
        let mut t = vec![0.0; n];
        for (i, &c) in self.component.iter().enumerate() {
            let wi = w.map_or(1.0, |w| w[i]);
            s[c as usize] += wi * v[i];
            t[c as usize] += wi;
        }
        s.iter()
            .zip(&t)
            .map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 })
            .collect()
    }

    /// Euclidean projection onto the complement of the per-component constants.
    pub fn project(&self, v: &mut [f64]) {
        let m = self.means(v, None);
        for (x, &c) in v.iter_mut().zip(&self.component) {
            *x -= m[c as usize];
        }
    }

    /// Euclidean norm of the kernel part of `v`.
    pub fn kernel_norm(&self, v: &[f64]) -> f64 {
        let m = self.means(v, None);
        m.iter().zip(&self.sizes).map(|(a, n)| a * a * n).sum::<f64>().sqrt()
    }

    /// Shifts `v` to zero weighted mean on every component.
    pub fn normalize(&self, v: &mut [f64]) {
        let m = self.means(v, self.weights.as_deref());
        for (x, &c) in v.iter_mut().zip(&self.component) {
            *x -= m[c as usize];
        }
    }
}

/// Jacobi-preconditioned conjugate gradients. With a projector the iteration
/// runs in the complement of the kernel and every iterate stays there when
/// started from zero.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    proj: Option<&ComponentProjector>,
) -> Result<SolveStats> {
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    pcg_with(a, &inv_diag, b, x, tol, max_iter, proj)
}

pub fn pcg_with(
    a: &CsrMatrix,
    inv_diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    proj: Option<&ComponentProjector>,
) -> Result<SolveStats> {
    let n = b.len();
    let mut rhs = b.to_vec();
    if let Some(p) = proj {
        p.project(&mut rhs);
    }
    let bnorm = norm(&rhs);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats::default());
    }
    let mut r = vec![0.0; n];
    a.mul_vec(x, &mut r);
    for i in 0..n {
        r[i] = rhs[i] - r[i];
    }
    if let Some(p) = proj {
        p.project(&mut r);
    }
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(r, d)| r * d).collect();
    if let Some(p) = proj {
        p.project(&mut z);
    }
    let mut d = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut res = norm(&r) / bnorm;
    let mut it = 0;
    while res > tol {
        if it >= max_iter {
            return Err(Error::Solver {
                context: "conjugate gradient".into(),
                iterations: it,
                residual: res,
            });
        }
        a.mul_vec(&d, &mut q);
        let dq = dot(&d, &q);
        if dq <= 0.0 {
            return Err(Error::Solver {
                context: "conjugate gradient hit a non-positive curvature".into(),
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / dq;
        for i in 0..n {
            x[i] += alpha * d[i];
            r[i] -= alpha * q[i];
        }
        if let Some(p) = proj {
            p.project(&mut r);
        }
        res = norm(&r) / bnorm;
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        if let Some(p) = proj {
            p.project(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            d[i] = z[i] + beta * d[i];
        }
        it += 1;
    }
    Ok(SolveStats {
        iterations: it,
        residual: res,
        warnings: Vec::new(),
    })
}

/// Restarted flexible GMRES with right preconditioning; the preconditioner
/// may change between iterations (inner Krylov solves).
pub fn fgmres(
    apply: &dyn Fn(&[f64], &mut [f64]),
    precond: &mut dyn FnMut(&[f64], &mut [f64]) -> Result<()>,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<SolveStats> {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats::default());
    }
    let m = restart.max(1);
    let mut total = 0;
    let mut r = vec![0.0; n];
    loop {
        apply(x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm(&r);
        let res = beta / bnorm;
        if res <= tol {
            return Ok(SolveStats {
                iterations: total,
                residual: res,
                warnings: Vec::new(),
            });
        }
        if total >= max_iter {
            return Err(Error::Solver {
                context: "flexible GMRES".into(),
                iterations: total,
                residual: res,
            });
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|t| t / beta).collect()];
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        for j in 0..m {
            let mut z = vec![0.0; n];
            precond(&v[j], &mut z)?;
            let mut w = vec![0.0; n];
            apply(&z, &mut w);
            zs.push(z);
            for i in 0..=j {
                let hij = dot(&w, &v[i]);
                h[i][j] = hij;
                for t in 0..n {
                    w[t] -= hij * v[i][t];
                }
            }
            let hn = norm(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let den = (h[j][j] * h[j][j] + hn * hn).sqrt();
            if den == 0.0 {
                break;
            }
            cs[j] = h[j][j] / den;
            sn[j] = hn / den;
            h[j][j] = den;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            k = j + 1;
            total += 1;
            if hn > 0.0 {
                v.push(w.iter().map(|t| t / hn).collect());
            }
            if (g[j + 1].abs() / bnorm) <= tol || total >= max_iter || hn == 0.0 {
                break;
            }
        }
        if k == 0 {
            return Err(Error::Solver {
                context: "flexible GMRES breakdown".into(),
                iterations: total,
                residual: res,
            });
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for l in (i + 1)..k {
                s -= h[i][l] * y[l];
            }
            y[i] = s / h[i][i];
        }
        for (yi, z) in y.iter().zip(&zs) {
            for t in 0..n {
                x[t] += yi * z[t];
            }
        }
    }
}

/// LU factorization of a dense copy of a small sparse matrix.
pub struct DenseLu {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl DenseLu {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if n > DENSE_LIMIT {
            return Err(Error::Solver {
                context: format!("dense path limited to {DENSE_LIMIT} unknowns, got {n}"),
                iterations: 0,
                residual: f64::NAN,
            });
        }
        let mut m = DMatrix::<f64>::zeros(n, n);
        for r in 0..n {
            let (cols, vals) = a.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                m[(r, c as usize)] += v;
            }
        }
        let lu = m.lu();
        if !lu.is_invertible() {
            return Err(Error::Solver {
                context: "dense LU: singular matrix".into(),
                iterations: 0,
                residual: f64::NAN,
            });
        }
        Ok(Self { lu, n })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let rhs = DVector::from_column_slice(b);
        self.lu
            .solve(&rhs)
            .map(|x| x.as_slice().to_vec())
            .ok_or_else(|| Error::Solver {
                context: "dense LU solve".into(),
                iterations: 0,
                residual: f64::NAN,
            })
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

#[derive(Clone, Debug)]
pub enum Constraint {
    None,
    /// Homogeneous Dirichlet values on the listed unknowns.
    Dirichlet(Vec<usize>),
    /// Quotient by constants per connected component.
    MeanZero(ComponentProjector),
}

/// Function space a vector of unknowns belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    ScalarOnCell,
    ScalarOnPhase(usize),
    VectorOnCell,
    Macro,
    Micro,
    Generic,
}

#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub constraint: Constraint,
    pub symmetric: bool,
    pub space: Space,
}

#[derive(Clone, Debug)]
pub struct FieldVector {
    pub values: Vec<f64>,
    pub space: Space,
    pub stats: SolveStats,
}

impl SparseSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>) -> Self {
        let symmetric = matrix.asymmetry() <= 1e-12 * matrix.max_abs();
        Self {
            matrix,
            rhs,
            constraint: Constraint::None,
            symmetric,
            space: Space::Generic,
        }
    }

    pub fn with_constraint(mut self, c: Constraint) -> Self {
        self.constraint = c;
        self
    }

    pub fn with_space(mut self, s: Space) -> Self {
        self.space = s;
        self
    }
}

/// Solves a system under its constraint to relative residual `tol`.
pub fn solve_constrained(system: &SparseSystem, tol: f64, opts: &SolverOptions) -> Result<FieldVector> {
    let n = system.rhs.len();
    if system.matrix.nrows() != n || system.matrix.ncols() != n {
        return Err(Error::Assembly(format!(
            "matrix {}x{} does not match rhs length {n}",
            system.matrix.nrows(),
            system.matrix.ncols()
        )));
    }
    let mut warnings = Vec::new();
    let mut rhs = system.rhs.clone();
    let mut matrix;
    let a = match &system.constraint {
        Constraint::Dirichlet(fixed) => {
            matrix = system.matrix.clone();
            let mut mask = vec![false; n];
            for &i in fixed {
                mask[i] = true;
                rhs[i] = 0.0;
            }
            eliminate(&mut matrix, &mask);
            &matrix
        }
        _ => &system.matrix,
    };
    let proj = match &system.constraint {
        Constraint::MeanZero(p) => {
            let bn = norm(&rhs);
            if bn > 0.0 {
                let k = p.kernel_norm(&rhs) / bn;
                if k > KERNEL_TOLERANCE {
                    return Err(Error::Consistency(k));
                }
                if k > ROUNDOFF_KERNEL {
                    let msg = format!("projected out a kernel component of relative size {k:.2e}");
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
                p.project(&mut rhs);
            }
            Some(p)
        }
        _ => None,
    };
    let mut x = vec![0.0; n];
    let dense = |warnings: Vec<String>| -> Result<FieldVector> {
        let mut aug = a.clone();
        if let Some(p) = proj {
            aug = add_kernel_penalty(&aug, p);
        }
        let lu = DenseLu::new(&aug)?;
        let mut x = lu.solve(&rhs)?;
        if let Some(p) = proj {
            p.normalize(&mut x);
        }
        let r = residual(a, &x, &rhs, proj);
        Ok(FieldVector {
            values: x,
            space: system.space,
            stats: SolveStats {
                iterations: 1,
                residual: r,
                warnings,
            },
        })
    };
    if opts.method == SolverMethod::Dense {
        return dense(warnings);
    }
    let result = if system.symmetric {
        pcg(a, &rhs, &mut x, tol, opts.max_iter.max(10 * n.min(1000)), proj)
    } else {
        let inv: Vec<f64> = a
            .diagonal()
            .iter()
            .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
            .collect();
        fgmres(
            &|v, out| a.mul_vec(v, out),
            &mut |r, z| {
                for i in 0..r.len() {
                    z[i] = r[i] * inv[i];
                }
                if let Some(p) = proj {
                    p.project(z);
                }
                Ok(())
            },
            &rhs,
            &mut x,
            tol,
            opts.restart,
            opts.max_iter,
        )
    };
    match result {
        Ok(mut stats) => {
            if let Some(p) = proj {
                p.normalize(&mut x);
            }
            stats.warnings.extend(warnings);
            Ok(FieldVector {
                values: x,
                space: system.space,
                stats,
            })
        }
        Err(e) if opts.dense_fallback && n <= DENSE_LIMIT => {
            let mut w = warnings;
            w.push(format!("iterative solve failed ({e}); used dense LU"));
            log::warn!("{}", w.last().unwrap());
            dense(w)
        }
        Err(e) => Err(e),
    }
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64], proj: Option<&ComponentProjector>) -> f64 {
    let mut r = a.apply(x);
    for i in 0..r.len() {
        r[i] = b[i] - r[i];
    }
    if let Some(p) = proj {
        p.project(&mut r);
    }
    let bn = norm(b);
    if bn == 0.0 {
        norm(&r)
    } else {
        norm(&r) / bn
    }
}

/// Zeroes rows and columns of masked unknowns and puts 1 on their diagonal.
pub fn eliminate(a: &mut CsrMatrix, mask: &[bool]) {
    let n = a.nrows();
    let mut dense_rows = Vec::new();
    for r in 0..n {
        let (cols, vals) = a.row(r);
        let mut row = Vec::with_capacity(cols.len());
        for (&c, &v) in cols.iter().zip(vals) {
            let c = c as usize;
            let v = if mask[r] || mask[c] {
                if r == c {
                    1.0
                } else {
                    0.0
                }
            } else {
                v
            };
            row.push((c, v));
        }
        dense_rows.push(row);
    }
    let mut out = a.zeroed();
    for (r, row) in dense_rows.into_iter().enumerate() {
        for (c, v) in row {
            if v != 0.0 {
                out.add_entry(r, c, v);
            }
        }
    }
    *a = out;
}

/// `A + s Σ_c 1_c 1_cᵀ / |c|`, which is nonsingular for a semidefinite `A`
/// whose kernel is the per-component constants.
fn add_kernel_penalty(a: &CsrMatrix, p: &ComponentProjector) -> CsrMatrix {
    let n = a.nrows();
    let s = a.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut d = a.to_dense();
    for i in 0..n {
        for j in 0..n {
            let (ci, cj) = (p.component_of(i), p.component_of(j));
            if ci == cj {
                d[i][j] += s / p.sizes[ci];
            }
        }
    }
    CsrMatrix::from_dense(&d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize, periodic: bool) -> CsrMatrix {
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            d[i][i] = 2.0;
            if i + 1 < n {
                d[i][i + 1] = -1.0;
                d[i + 1][i] = -1.0;
            }
        }
        if periodic {
            d[0][n - 1] = -1.0;
            d[n - 1][0] = -1.0;
        } else {
            d[0][0] = 3.0;
        }
        CsrMatrix::from_dense(&d)
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let sys = SparseSystem::new(laplacian_1d(5, false), vec![0.0; 5]);
        let x = solve_constrained(&sys, 1e-10, &SolverOptions::default()).unwrap();
        assert!(x.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn diagonal_system_recovers_rhs() {
        let sys = SparseSystem::new(CsrMatrix::identity(4), vec![1.0, -2.0, 3.0, 0.5]);
        let x = solve_constrained(&sys, 1e-12, &SolverOptions::default()).unwrap();
        assert_eq!(x.values, vec![1.0, -2.0, 3.0, 0.5]);
    }

    #[test]
    fn mean_zero_periodic_solve() {
        let n = 16;
        let a = laplacian_1d(n, true);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut b2 = b.clone();
        ComponentProjector::constants(n).project(&mut b2);
        let sys = SparseSystem::new(a.clone(), b2.clone())
            .with_constraint(Constraint::MeanZero(ComponentProjector::constants(n)));
        let x = solve_constrained(&sys, 1e-12, &SolverOptions::default()).unwrap();
        assert!(x.values.iter().sum::<f64>().abs() < 1e-12);
        let r = a.apply(&x.values);
        for i in 0..n {
            assert!((r[i] - b2[i]).abs() < 1e-10);
        }
        let inconsistent =
            SparseSystem::new(a, vec![1.0; n]).with_constraint(Constraint::MeanZero(ComponentProjector::constants(n)));
        assert!(matches!(
            solve_constrained(&inconsistent, 1e-12, &SolverOptions::default()),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn dense_path_handles_kernel() {
        let n = 12;
        let a = laplacian_1d(n, true);
        let mut b: Vec<f64> = (0..n).map(|i| i as f64).collect();
        ComponentProjector::constants(n).project(&mut b);
        let opts = SolverOptions {
            method: SolverMethod::Dense,
            ..Default::default()
        };
        let sys = SparseSystem::new(a.clone(), b.clone())
            .with_constraint(Constraint::MeanZero(ComponentProjector::constants(n)));
        let xd = solve_constrained(&sys, 1e-12, &opts).unwrap();
        let xi = solve_constrained(&sys, 1e-13, &SolverOptions::default()).unwrap();
        for i in 0..n {
            assert!((xd.values[i] - xi.values[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn dirichlet_constraint() {
        let a = laplacian_1d(6, false);
        let sys = SparseSystem::new(a, vec![1.0; 6]).with_constraint(Constraint::Dirichlet(vec![0, 5]));
        let x = solve_constrained(&sys, 1e-12, &SolverOptions::default()).unwrap();
        assert_eq!(x.values[0], 0.0);
        assert_eq!(x.values[5], 0.0);
        assert!(x.values[2] > 0.0);
    }

    #[test]
    fn fgmres_nonsymmetric() {
        let n = 30;
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            d[i][i] = 4.0;
            if i + 1 < n {
                d[i][i + 1] = -1.5;
                d[i + 1][i] = -0.5;
            }
        }
        let a = CsrMatrix::from_dense(&d);
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let mut x = vec![0.0; n];
        let st = fgmres(
            &|v, o| a.mul_vec(v, o),
            &mut |r, z| {
                z.copy_from_slice(r);
                Ok(())
            },
            &b,
            &mut x,
            1e-12,
            7,
            500,
        )
        .unwrap();
        assert!(st.residual <= 1e-12);
        let r = a.apply(&x);
        for i in 0..n {
            assert!((r[i] - b[i]).abs() < 1e-9);
        }
    }
}
