// SPDX-License-Identifier: Apache-2.0

//! Lagrangian submanifolds: induced metric, the `P = A + JB` split, type
//! classification, normal frames, second fundamental form and the structure
//! equations.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use thiserror::Error;

use crate::catalog::{frame_vectors, CatalogError, Delta, Immersion};
use crate::nk_core::{apply_j, apply_p, koszul_connection, metric_g, AlgebraVec, Point, TangentVec};
use crate::tol::Tolerances;

pub mod classify;
pub mod constraints;
pub mod frame;
pub mod sff;

pub use classify::{classify_matrices, classify_type, lag_type_of, TypeClass};

pub use constraints::{
    congruence_check, constraints_of, grid_spread, verify_type_constraints, CongruenceReport, ConstraintReport, GridSpread,
};
pub use frame::{normal_frame, NormalFrame};
pub use sff::{second_fundamental_form, LocalAnalysis, SffTable};

pub type Tensor3 = [[[f64; 3]; 3]; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LagError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("tangent/normal basis is singular (determinant {0:e})")]
    DegenerateGram(f64),
    #[error("frame is not Lagrangian (residual {0:e})")]
    NotLagrangian(f64),
    #[error("type is unresolved: {detail} (gap {gap:e})")]
    UnresolvedType { gap: f64, detail: String },
    #[error("gauge fixing failed: {0}")]
    GaugeFailure(String),
    #[error("plane is degenerate (Gram determinant {0:e})")]
    DegeneratePlane(f64),
}

/// Three tangent vectors at a common point, in left-invariant coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameTriple {
    pub base: Point,
    pub vecs: [AlgebraVec; 3],
    pub gram: Matrix3<f64>,
    pub signature: Option<Delta>,
}

pub(crate) fn delta_matrix(d: Delta) -> Matrix3<f64> {
    let m = d.matrix();
    Matrix3::from_fn(|i, j| m[i][j])
}

impl FrameTriple {
    pub fn new(base: Point, vecs: [AlgebraVec; 3]) -> Result<Self, LagError> {
        let gram = Matrix3::from_fn(|i, j| metric_g(&vecs[i], &vecs[j]));
        let det = gram.determinant();
        if !(det.abs() > 1e-10) {
            return Err(LagError::DegenerateGram(det));
        }
        Ok(FrameTriple { base, vecs, gram, signature: None })
    }

    pub fn tangent(&self, i: usize) -> TangentVec {
        TangentVec { base: self.base, v: self.vecs[i] }
    }

    /// The frame whose `a`-th vector is `sum_i t[(a, i)] vecs[i]`.
    pub fn combine(&self, t: &Matrix3<f64>) -> Result<FrameTriple, LagError> {
        let vecs = std::array::from_fn(|a| (0..3).map(|i| self.vecs[i] * t[(a, i)]).sum());
        FrameTriple::new(self.base, vecs)
    }

    pub fn delta_residual(&self, d: Delta) -> f64 {
        (self.gram - delta_matrix(d)).abs().max()
    }

    /// Tags the frame with `d` after checking its Gram matrix.
    pub fn with_signature(mut self, d: Delta, tol: f64) -> Result<FrameTriple, LagError> {
        let r = self.delta_residual(d);
        if r > tol {
            return Err(LagError::GaugeFailure(format!("Gram differs from {d:?} by {r:e}")));
        }
        self.signature = Some(d);
        Ok(self)
    }

    /// Coordinates of `v = sum c_i vecs[i]` from the inner products `g(v, vecs[j])`.
    pub fn raise(&self, lowered: Vector3<f64>) -> Vector3<f64> {
        self.gram.lu().solve(&lowered).unwrap_or_else(Vector3::zeros)
    }
}

/// Largest `|g(J E_i, E_j)|`.
pub fn check_lagrangian(frame: &FrameTriple) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..3 {
        let je = apply_j(&frame.vecs[i]);
        for j in 0..3 {
            worst = worst.max(metric_g(&je, &frame.vecs[j]).abs());
        }
    }
    worst
}

/// Floor for the determinant of the column-normalized split basis. Bianchi
/// coordinate frames reach 1e-16 near the chart corners.
const SPLIT_DET_FLOOR: f64 = 1e-30;

/// LU-factored basis `{E_1, E_2, E_3, J E_1, J E_2, J E_3}` of the ambient algebra.
pub struct SplitBasis {
    lu: nalgebra::LU<f64, nalgebra::U6, nalgebra::U6>,
}

impl SplitBasis {
    pub fn new(frame: &FrameTriple) -> Result<Self, LagError> {
        let mut m = Matrix6::zeros();
        for j in 0..3 {
            m.set_column(j, &frame.vecs[j].to_vector());
            m.set_column(j + 3, &apply_j(&frame.vecs[j]).to_vector());
        }
        let mut unit = m;
        for mut c in unit.column_iter_mut() {
            let n = c.norm();
            c /= n;
        }
        let det = unit.determinant();
        if !(det.abs() > SPLIT_DET_FLOOR) {
            return Err(LagError::DegenerateGram(det));
        }
        let lu = m.lu();
        Ok(SplitBasis { lu })
    }

    /// Tangent and normal coefficients of `v`.
    pub fn split(&self, v: &AlgebraVec) -> (Vector3<f64>, Vector3<f64>) {
        let c: Vector6<f64> = self.lu.solve(&v.to_vector()).unwrap_or_else(Vector6::zeros);
        (c.fixed_rows::<3>(0).into(), c.fixed_rows::<3>(3).into())
    }
}

/// `P|_M = A + JB` in the coordinates of a frame; columns hold the images of `E_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct AbPair {
    pub a: Matrix3<f64>,
    pub b: Matrix3<f64>,
    pub reconstruction: f64,
}

impl AbPair {
    /// Largest violation of g-symmetry, commutation and `A^2 + B^2 = Id`.
    pub fn invariant_residual(&self, gram: &Matrix3<f64>) -> f64 {
        let sym = |m: &Matrix3<f64>| {
            let gm = gram * m;
            (gm - gm.transpose()).abs().max()
        };
        let comm = (self.a * self.b - self.b * self.a).abs().max();
        let pyth = (self.a * self.a + self.b * self.b - Matrix3::identity()).abs().max();
        sym(&self.a).max(sym(&self.b)).max(comm).max(pyth)
    }
}

pub fn extract_ab(frame: &FrameTriple) -> Result<AbPair, LagError> {
    let basis = SplitBasis::new(frame)?;
    let mut a = Matrix3::zeros();
    let mut b = Matrix3::zeros();
    let mut worst = 0.0f64;
    for j in 0..3 {
        let pe = apply_p(&frame.vecs[j]);
        let (t, n) = basis.split(&pe);
        a.set_column(j, &t);
        b.set_column(j, &n);
        let back: AlgebraVec = (0..3).map(|i| frame.vecs[i] * t[i] + apply_j(&frame.vecs[i]) * n[i]).sum();
        worst = worst.max((back - pe).max_abs());
    }
    Ok(AbPair { a, b, reconstruction: worst })
}

/// Coordinate data of an immersion at one parameter point.
#[derive(Clone, Debug)]
pub struct CoordGeometry {
    pub params: [f64; 3],
    pub frame: FrameTriple,
    pub ab: AbPair,
    /// `nabla_{d_i} d_j = sum_k gamma[i][j][k] d_k`.
    pub gamma: Tensor3,
    /// `h(d_i, d_j) = sum_k h[i][j][k] J d_k`.
    pub h: Tensor3,
    pub lagrangian_residual: f64,
}

pub(crate) fn shifted(x: [f64; 3], i: usize, t: f64) -> [f64; 3] {
    let mut y = x;
    y[i] += t;
    y
}

/// Pushforward frame of the coordinate fields.
pub fn coordinate_frame(imm: &dyn Immersion, x: [f64; 3], tol: &Tolerances) -> Result<FrameTriple, LagError> {
    let tv = frame_vectors(imm, x, tol)?;
    FrameTriple::new(tv[0].base, [tv[0].v, tv[1].v, tv[2].v])
}

impl CoordGeometry {
    pub fn new(imm: &dyn Immersion, x: [f64; 3], tol: &Tolerances) -> Result<Self, LagError> {
        let frame = coordinate_frame(imm, x, tol)?;
        let lag = check_lagrangian(&frame);
        if lag > tol.lagrangian_fd {
            return Err(LagError::NotLagrangian(lag));
        }
        let ab = extract_ab(&frame)?;
        let basis = SplitBasis::new(&frame)?;
        let xi = |y: [f64; 3]| -> Result<[AlgebraVec; 3], LagError> {
            let tv = frame_vectors(imm, y, tol)?;
            Ok([tv[0].v, tv[1].v, tv[2].v])
        };
        let mut gamma = [[[0.0; 3]; 3]; 3];
        let mut h = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            let vals = [-2.0, -1.0, 1.0, 2.0].map(|s| xi(shifted(x, i, s * tol.fd_step_frame)));
            let [m2, m1, p1, p2] = vals;
            let (m2, m1, p1, p2) = (m2?, m1?, p1?, p2?);
            for j in 0..3 {
                let d = (m2[j] - m1[j] * 8.0 + p1[j] * 8.0 - p2[j]) * (1.0 / (12.0 * tol.fd_step_frame));
                let nab = d + koszul_connection(&frame.vecs[i], &frame.vecs[j]);
                let (t, n) = basis.split(&nab);
                for k in 0..3 {
                    gamma[i][j][k] = t[k];
                    h[i][j][k] = n[k];
                }
            }
        }
        Ok(CoordGeometry { params: x, frame, ab, gamma, h, lagrangian_residual: lag })
    }

    /// `h(X, Y)` as normal coefficients on `J d_k`.
    pub fn h_of(&self, x: &Vector3<f64>, y: &Vector3<f64>) -> Vector3<f64> {
        let mut out = Vector3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let w = x[i] * y[j];
                for k in 0..3 {
                    out[k] += w * self.h[i][j][k];
                }
            }
        }
        out
    }

    /// Normal vector field `h(d_j, d_k)` in ambient coordinates.
    pub fn normal_field(&self, j: usize, k: usize) -> AlgebraVec {
        (0..3).map(|l| apply_j(&self.frame.vecs[l]) * self.h[j][k][l]).sum()
    }
}

/// Rewrites a coordinate tensor `t[i][j][k]` (two lower, one upper) in the frame
/// `E_a = sum_i m[(a, i)] d_i`.
pub fn transform_tensor(t: &Tensor3, m: &Matrix3<f64>) -> Tensor3 {
    let inv = m.try_inverse().unwrap_or_else(Matrix3::zeros);
    let mut out = [[[0.0; 3]; 3]; 3];
    for (a, oa) in out.iter_mut().enumerate() {
        for (b, ob) in oa.iter_mut().enumerate() {
            for (c, v) in ob.iter_mut().enumerate() {
                let mut s = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        let w = m[(a, i)] * m[(b, j)];
                        if w == 0.0 {
                            continue;
                        }
                        for k in 0..3 {
                            s += w * t[i][j][k] * inv[(k, c)];
                        }
                    }
                }
                *v = s;
            }
        }
    }
    out
}

pub(crate) fn wrap_pi(x: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let r = x.rem_euclid(pi);
    if r > pi - 1e-9 {
        0.0
    } else {
        r + 0.0
    }
}

/// Signed distance of `x` to the nearest multiple of `pi`.
pub fn dist_mod_pi(x: f64) -> f64 {
    let pi = std::f64::consts::PI;
    x - pi * (x / pi).round()
}

/// Sign of the permutation `(i, j, k)`.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::ImmersionId;

    #[test]
    fn torus_ab_matches_closed_form() {
        let tol = Tolerances::default();
        let f = coordinate_frame(&ImmersionId::FlatTorus, [0.2, -0.4, 0.1], &tol).unwrap();
        let ab = extract_ab(&f).unwrap();
        let s = 3f64.sqrt() / 2.0;
        let a = Matrix3::from_diagonal(&Vector3::new(1.0, -0.5, -0.5));
        let b = Matrix3::from_diagonal(&Vector3::new(0.0, s, -s));
        assert!((ab.a - a).abs().max() < 1e-8, "{}", ab.a);
        assert!((ab.b - b).abs().max() < 1e-8, "{}", ab.b);
        assert!(ab.invariant_residual(&f.gram) < 1e-8);
    }

    #[test]
    fn mixing_with_j_breaks_lagrangian() {
        let tol = Tolerances::default();
        let f = coordinate_frame(&ImmersionId::DiagTotGeo, [0.1, 0.2, 0.3], &tol).unwrap();
        assert!(check_lagrangian(&f) < 1e-8);
        let mixed = [f.vecs[0] + apply_j(&f.vecs[1]), f.vecs[1], f.vecs[2]];
        let g = FrameTriple::new(f.base, mixed).unwrap();
        assert!(check_lagrangian(&g) > 0.1);
    }

    #[test]
    fn wrap_snaps_near_pi() {
        assert_eq!(wrap_pi(std::f64::consts::PI - 1e-12), 0.0);
        assert!((wrap_pi(-0.5) - (std::f64::consts::PI - 0.5)).abs() < 1e-15);
    }
}
