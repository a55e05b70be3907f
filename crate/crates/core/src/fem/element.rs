//! Trilinear hexahedron on the reference cube `[0,1]³`.
//!
//! Element matrices of a cube with edge `h` are the reference integrals
//! scaled by the matching power of `h`; the 2-point Gauss rule used to build
//! them is exact for every product of Q1 functions and their derivatives.

use std::sync::OnceLock;

use super::grid::CORNERS;
use crate::material::{ElasticTensor, Mat3};

/// Gauss-Legendre rule on `[0, 1]` with `n` points (1..=5).
pub fn gauss_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w): (Vec<f64>, Vec<f64>) = match n {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (0.6f64).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let s = (6.0f64 / 5.0).sqrt() * 2.0 / 7.0;
            let a = (3.0 / 7.0 - s).sqrt();
            let b = (3.0 / 7.0 + s).sqrt();
            let wa = (18.0 + 30f64.sqrt()) / 36.0;
            let wb = (18.0 - 30f64.sqrt()) / 36.0;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        5 => {
            let s = 2.0 * (10.0f64 / 7.0).sqrt();
            let a = (5.0 - s).sqrt() / 3.0;
            let b = (5.0 + s).sqrt() / 3.0;
            let w0 = 128.0 / 225.0;
            let wa = (322.0 + 13.0 * 70f64.sqrt()) / 900.0;
            let wb = (322.0 - 13.0 * 70f64.sqrt()) / 900.0;
            (vec![-b, -a, 0.0, a, b], vec![wb, wa, w0, wa, wb])
        }
        _ => panic!("unsupported Gauss order {n}"),
    };
    (
        x.iter().map(|v| 0.5 * (v + 1.0)).collect(),
        w.iter().map(|v| 0.5 * v).collect(),
    )
}

/// Tensor-product Gauss points on the reference cube with weights summing to 1.
pub fn gauss_points(n: usize) -> Vec<([f64; 3], f64)> {
    let (x, w) = gauss_1d(n);
    let mut pts = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                pts.push(([x[i], x[j], x[k]], w[i] * w[j] * w[k]));
            }
        }
    }
    pts
}

pub fn shape(xi: [f64; 3]) -> [f64; 8] {
    CORNERS.map(|o| (0..3).map(|d| if o[d] == 1 { xi[d] } else { 1.0 - xi[d] }).product())
}

/// Gradients of the shape functions with respect to reference coordinates.
pub fn shape_grad(xi: [f64; 3]) -> [[f64; 3]; 8] {
    CORNERS.map(|o| {
        let f = |d: usize| if o[d] == 1 { xi[d] } else { 1.0 - xi[d] };
        let df = |d: usize| if o[d] == 1 { 1.0 } else { -1.0 };
        [df(0) * f(1) * f(2), f(0) * df(1) * f(2), f(0) * f(1) * df(2)]
    })
}

pub struct Reference {
    /// `∫ ∂_a N_I ∂_b N_J`, indexed `[a][b][I][J]`.
    pub grad_grad: [[[[f64; 8]; 8]; 3]; 3],
    /// `∫ N_I N_J`.
    pub mass: [[f64; 8]; 8],
    /// `∫ N_I ∂_b N_J`, indexed `[b][I][J]`.
    pub value_grad: [[[f64; 8]; 8]; 3],
}

pub fn reference() -> &'static Reference {
    static REF: OnceLock<Reference> = OnceLock::new();
    REF.get_or_init(|| {
        let mut r = Reference {
            grad_grad: [[[[0.0; 8]; 8]; 3]; 3],
            mass: [[0.0; 8]; 8],
            value_grad: [[[0.0; 8]; 8]; 3],
        };
        for (xi, w) in gauss_points(2) {
            let n = shape(xi);
            let g = shape_grad(xi);
            for i in 0..8 {
                for j in 0..8 {
                    r.mass[i][j] += w * n[i] * n[j];
                    for a in 0..3 {
                        r.value_grad[a][i][j] += w * n[i] * g[j][a];
                        for b in 0..3 {
                            r.grad_grad[a][b][i][j] += w * g[i][a] * g[j][b];
                        }
                    }
                }
            }
        }
        r
    })
}

/// `∫ (k ∇N_J)·∇N_I` over a cube of edge `h`.
pub fn scalar_stiffness(h: f64, k: &Mat3) -> [[f64; 8]; 8] {
    let r = reference();
    let mut out = [[0.0; 8]; 8];
    for a in 0..3 {
        for b in 0..3 {
            let c = k[a][b] * h;
            if c == 0.0 {
                continue;
            }
            for i in 0..8 {
                for j in 0..8 {
                    out[i][j] += c * r.grad_grad[a][b][i][j];
                }
            }
        }
    }
    out
}

pub fn mass(h: f64) -> [[f64; 8]; 8] {
    let h3 = h * h * h;
    reference().mass.map(|row| row.map(|v| v * h3))
}

/// Elastic stiffness with local dof `3 I + i` for component `i` at node `I`.
pub fn elastic_stiffness(h: f64, c: &ElasticTensor) -> Vec<[f64; 24]> {
    let r = reference();
    let mut out = vec![[0.0; 24]; 24];
    for i in 0..3 {
        for k in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    let v = c.c[i][j][k][l] * h;
                    if v == 0.0 {
                        continue;
                    }
                    let gg = &r.grad_grad[j][l];
                    for a in 0..8 {
                        for b in 0..8 {
                            out[3 * a + i][3 * b + k] += v * gg[a][b];
                        }
                    }
                }
            }
        }
    }
    out
}

/// `∫ q_I (M : e(u))` with `u = N_J e_k`; rows scalar nodes, columns `3 J + k`.
pub fn strain_coupling(h: f64, m: &Mat3) -> [[f64; 24]; 8] {
    let r = reference();
    let h2 = h * h;
    let mut out = [[0.0; 24]; 8];
    for k in 0..3 {
        for l in 0..3 {
            let s = 0.5 * (m[k][l] + m[l][k]) * h2;
            if s == 0.0 {
                continue;
            }
            for a in 0..8 {
                for b in 0..8 {
                    out[a][3 * b + k] += s * r.value_grad[l][a][b];
                }
            }
        }
    }
    out
}

/// `∫ (Σ_i B_ik ∂_i p) v_k` with `p = N_J`, `v = N_I e_k`; rows `3 I + k`.
pub fn gradient_coupling(h: f64, b: &Mat3) -> [[f64; 8]; 24] {
    let r = reference();
    let h2 = h * h;
    let mut out = [[0.0; 8]; 24];
    for i in 0..3 {
        for k in 0..3 {
            let s = b[i][k] * h2;
            if s == 0.0 {
                continue;
            }
            for a in 0..8 {
                for j in 0..8 {
                    out[3 * a + k][j] += s * r.value_grad[i][a][j];
                }
            }
        }
    }
    out
}

/// Local element nodes on the face of the reference cube normal to `axis`
/// at `side` (0 or 1), ordered by the two tangential axes.
pub fn face_nodes(axis: usize, side: usize) -> [usize; 4] {
    let (t1, t2) = tangents(axis);
    let mut out = [0; 4];
    for (b, slot) in out.iter_mut().enumerate() {
        *slot = (side << axis) | ((b & 1) << t1) | (((b >> 1) & 1) << t2);
    }
    out
}

pub fn tangents(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Bilinear face mass `∫ w(s) N_a N_b ds` over a square face of edge `h`,
/// with `w` evaluated at face-local coordinates in `[0,1]²`.
pub fn face_mass(h: f64, order: usize, weight: impl Fn([f64; 2]) -> f64) -> [[f64; 4]; 4] {
    let (x, w) = gauss_1d(order);
    let mut out = [[0.0; 4]; 4];
    for j in 0..order {
        for i in 0..order {
            let s = [x[i], x[j]];
            let n = [
                (1.0 - s[0]) * (1.0 - s[1]),
                s[0] * (1.0 - s[1]),
                (1.0 - s[0]) * s[1],
                s[0] * s[1],
            ];
            let c = w[i] * w[j] * weight(s) * h * h;
            for a in 0..4 {
                for b in 0..4 {
                    out[a][b] += c * n[a] * n[b];
                }
            }
        }
    }
    out
}

/// Gradient in physical units of the Q1 interpolant with nodal values `v`.
pub fn interpolate_grad(h: f64, v: &[f64; 8], xi: [f64; 3]) -> [f64; 3] {
    let g = shape_grad(xi);
    let mut out = [0.0; 3];
    for a in 0..8 {
        for d in 0..3 {
            out[d] += v[a] * g[a][d];
        }
    }
    out.map(|x| x / h)
}

pub fn interpolate(v: &[f64; 8], xi: [f64; 3]) -> f64 {
    let n = shape(xi);
    (0..8).map(|a| v[a] * n[a]).sum()
}
