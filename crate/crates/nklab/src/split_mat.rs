// SPDX-License-Identifier: Apache-2.0

//! 2x2 real matrices and the split quaternions `i`, `j`, `k` spanning sl(2,R).

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::SMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tol::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplitError {
    #[error("matrix entry is not finite: {0:?}")]
    NonFinite([f64; 4]),
    #[error("matrix is not traceless (trace {0:e})")]
    NotTraceless(f64),
    #[error("gram matrices differ by {0:e}")]
    GramMismatch(f64),
    #[error("conjugation system has no nondegenerate solution (residual {0:e})")]
    NoSolution(f64),
    #[error("matrix is singular")]
    Singular,
}

/// Real 2x2 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2([f64; 4]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([1.0, 0.0, 0.0, 1.0]);
    pub const ZERO: Mat2 = Mat2([0.0; 4]);

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, SplitError> {
        Self::from_array([a, b, c, d])
    }

    pub fn from_array(e: [f64; 4]) -> Result<Self, SplitError> {
        if e.iter().all(|x| x.is_finite()) {
            Ok(Mat2(e))
        } else {
            Err(SplitError::NonFinite(e))
        }
    }

    pub(crate) const fn raw(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([a, b, c, d])
    }

    pub fn entries(&self) -> [f64; 4] {
        self.0
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.0[2 * r + c]
    }

    pub fn det(&self) -> f64 {
        let [a, b, c, d] = self.0;
        a * d - b * c
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[3]
    }

    /// Classical adjugate, so that `a * adj(a) = det(a) Id`.
    pub fn adj(&self) -> Mat2 {
        let [a, b, c, d] = self.0;
        Mat2([d, -b, -c, a])
    }

    pub fn transpose(&self) -> Mat2 {
        let [a, b, c, d] = self.0;
        Mat2([a, c, b, d])
    }

    pub fn inverse(&self) -> Result<Mat2, SplitError> {
        let det = self.det();
        if det.abs() < 1e-300 || !det.is_finite() {
            return Err(SplitError::Singular);
        }
        Ok(self.adj() * (1.0 / det))
    }

    /// Inverse of a matrix known to have determinant one.
    pub fn inverse_unimodular(&self) -> Mat2 {
        self.adj()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, o: Mat2) {
        *self = *self + o;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self * -1.0
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = o.0;
        Mat2([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        Mat2(self.0.map(|x| x * s))
    }
}

/// `-1/2 tr(adj(a) b)`; equals `-det(a)` on the diagonal.
pub fn minkowski_inner(a: &Mat2, b: &Mat2) -> f64 {
    let [a0, a1, a2, a3] = a.0;
    let [b0, b1, b2, b3] = b.0;
    -0.5 * (a3 * b0 - a1 * b2 - a2 * b1 + a0 * b3)
}

/// Traceless 2x2 matrix `x i + y j + z k = [[x, y+z], [y-z, -x]]`,
/// stored by its coordinates so tracelessness is exact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sl2Vec(pub [f64; 3]);

impl Sl2Vec {
    pub const ZERO: Sl2Vec = Sl2Vec([0.0; 3]);
    pub const I: Sl2Vec = Sl2Vec([1.0, 0.0, 0.0]);
    pub const J: Sl2Vec = Sl2Vec([0.0, 1.0, 0.0]);
    pub const K: Sl2Vec = Sl2Vec([0.0, 0.0, 1.0]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Sl2Vec([x, y, z])
    }

    /// Accepts matrices whose trace is within `tol.trace_snap` of zero and
    /// removes that residual trace.
    pub fn from_mat(m: &Mat2, tol: &Tolerances) -> Result<Self, SplitError> {
        if !m.is_finite() {
            return Err(SplitError::NonFinite(m.0));
        }
        let tr = m.trace();
        if tr.abs() >= tol.trace_snap {
            return Err(SplitError::NotTraceless(tr));
        }
        Ok(Self::from_mat_unchecked(m))
    }

    /// Projects onto the traceless part without checking.
    pub fn from_mat_unchecked(m: &Mat2) -> Self {
        let [a, b, c, d] = m.0;
        Sl2Vec([0.5 * (a - d), 0.5 * (b + c), 0.5 * (b - c)])
    }

    pub fn to_mat(&self) -> Mat2 {
        let [x, y, z] = self.0;
        Mat2([x, y + z, y - z, -x])
    }

    pub fn coords(&self) -> [f64; 3] {
        self.0
    }

    pub fn inner(&self, o: &Sl2Vec) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] - self.0[2] * o.0[2]
    }

    pub fn cross(&self, o: &Sl2Vec) -> Sl2Vec {
        cross(self, o)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `c a c^-1`.
    pub fn conjugate_by(&self, c: &Mat2) -> Result<Sl2Vec, SplitError> {
        let ci = c.inverse()?;
        Ok(Sl2Vec::from_mat_unchecked(&(*c * self.to_mat() * ci)))
    }
}

impl Add for Sl2Vec {
    type Output = Sl2Vec;
    fn add(self, o: Sl2Vec) -> Sl2Vec {
        Sl2Vec(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for Sl2Vec {
    type Output = Sl2Vec;
    fn sub(self, o: Sl2Vec) -> Sl2Vec {
        Sl2Vec(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Neg for Sl2Vec {
    type Output = Sl2Vec;
    fn neg(self) -> Sl2Vec {
        Sl2Vec(self.0.map(|x| -x))
    }
}

impl Mul<f64> for Sl2Vec {
    type Output = Sl2Vec;
    fn mul(self, s: f64) -> Sl2Vec {
        Sl2Vec(self.0.map(|x| x * s))
    }
}

/// `(ab - ba)/2`, written out in coordinates: `i x j = k`, `j x k = -i`, `k x i = -j`.
pub fn cross(a: &Sl2Vec, b: &Sl2Vec) -> Sl2Vec {
    let [ax, ay, az] = a.0;
    let [bx, by, bz] = b.0;
    Sl2Vec([-(ay * bz - az * by), -(az * bx - ax * bz), ax * by - ay * bx])
}

const TAYLOR_NULL_CONE: f64 = 1e-14;

/// Closed-form exponential using `a^2 = <a,a> Id`.
pub fn exp_sl2(a: &Sl2Vec) -> Mat2 {
    let m = a.inner(a);
    let (c0, c1) = if m > TAYLOR_NULL_CONE {
        let s = m.sqrt();
        (s.cosh(), s.sinh() / s)
    } else if m < -TAYLOR_NULL_CONE {
        let s = (-m).sqrt();
        (s.cos(), s.sin() / s)
    } else {
        (1.0 + 0.5 * m, 1.0 + m / 6.0)
    };
    Mat2::IDENTITY * c0 + a.to_mat() * c1
}

/// Three elements of sl(2,R) together with their Gram matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisTriple {
    pub vecs: [Sl2Vec; 3],
    pub gram: [[f64; 3]; 3],
}

impl BasisTriple {
    pub fn new(vecs: [Sl2Vec; 3]) -> Self {
        let gram = std::array::from_fn(|i| std::array::from_fn(|j| vecs[i].inner(&vecs[j])));
        BasisTriple { vecs, gram }
    }

    pub fn det_gram(&self) -> f64 {
        nalgebra::Matrix3::from_fn(|i, j| self.gram[i][j]).determinant()
    }
}

/// A conjugating matrix normalized to `|det| = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conjugation {
    pub c: Mat2,
    pub det_sign: i8,
}

/// Finds `c` with `c src_i c^-1 = dst_i` from the kernel of `c src_i = dst_i c`.
pub fn solve_conjugation(src: &BasisTriple, dst: &BasisTriple, tol: &Tolerances) -> Result<Conjugation, SplitError> {
    let mismatch = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| (src.gram[i][j] - dst.gram[i][j]).abs())
        .fold(0.0, f64::max);
    if mismatch > tol.conjugation {
        return Err(SplitError::GramMismatch(mismatch));
    }
    let mut sys = SMatrix::<f64, 12, 4>::zeros();
    for t in 0..3 {
        let s = src.vecs[t].to_mat();
        let d = dst.vecs[t].to_mat();
        for i in 0..2 {
            for j in 0..2 {
                let row = 4 * t + 2 * i + j;
                for k in 0..2 {
                    sys[(row, 2 * i + k)] += s.at(k, j);
                    sys[(row, 2 * k + j)] -= d.at(i, k);
                }
            }
        }
    }
    let scale = sys.abs().max().max(1.0);
    let svd = sys.try_svd(false, true, f64::EPSILON, 10_000).ok_or(SplitError::NoSolution(f64::NAN))?;
    let v_t = svd.v_t.ok_or(SplitError::NoSolution(f64::NAN))?;
    let (imin, smin) =
        svd.singular_values.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    if smin > tol.conjugation * scale {
        return Err(SplitError::NoSolution(smin));
    }
    let k = v_t.row(imin);
    let c = Mat2([k[0], k[1], k[2], k[3]]);
    let det = c.det();
    if det.abs() < 1e-12 * c.max_abs().powi(2).max(1e-300) {
        return Err(SplitError::NoSolution(det.abs()));
    }
    let mut c = c * (1.0 / det.abs().sqrt());
    if let Some(first) = c.0.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            c = -c;
        }
    }
    Ok(Conjugation { c, det_sign: if det > 0.0 { 1 } else { -1 } })
}

/// `exp` of a traceless matrix with entries uniform in `[-1, 1]`.
pub fn random_sl2<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    exp_sl2(&random_sl2_vec(rng))
}

/// Traceless `[[x, y], [z, -x]]` with `x, y, z` uniform in `[-1, 1]`.
pub fn random_sl2_vec<R: Rng + ?Sized>(rng: &mut R) -> Sl2Vec {
    let x: f64 = rng.gen_range(-1.0..=1.0);
    let y: f64 = rng.gen_range(-1.0..=1.0);
    let z: f64 = rng.gen_range(-1.0..=1.0);
    Sl2Vec::from_mat_unchecked(&Mat2([x, y, z, -x]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_quaternion_squares() {
        let id = Mat2::IDENTITY;
        assert_eq!(Sl2Vec::I.to_mat() * Sl2Vec::I.to_mat(), id);
        assert_eq!(Sl2Vec::J.to_mat() * Sl2Vec::J.to_mat(), id);
        assert_eq!(Sl2Vec::K.to_mat() * Sl2Vec::K.to_mat(), -id);
    }

    #[test]
    fn coordinates_round_trip() {
        let a = Sl2Vec::new(0.3, -1.2, 2.5);
        let back = Sl2Vec::from_mat_unchecked(&a.to_mat());
        assert!((back - a).max_abs() < 1e-15);
    }

    #[test]
    fn trace_is_snapped_or_rejected() {
        let tol = Tolerances::default();
        let m = Mat2::new(1.0 + 1e-12, 2.0, 3.0, -1.0).unwrap();
        let v = Sl2Vec::from_mat(&m, &tol).unwrap();
        assert!(v.to_mat().trace().abs() < 1e-15);
        let bad = Mat2::new(1.0, 0.0, 0.0, 0.0).unwrap();
        assert!(matches!(Sl2Vec::from_mat(&bad, &tol), Err(SplitError::NotTraceless(_))));
    }

    #[test]
    fn non_finite_entries_rejected() {
        assert!(Mat2::new(f64::NAN, 0.0, 0.0, 1.0).is_err());
        assert!(Mat2::new(0.0, f64::INFINITY, 0.0, 1.0).is_err());
    }

    #[test]
    fn inner_matches_coordinate_form() {
        let a = Sl2Vec::new(0.7, 0.1, -0.4);
        let b = Sl2Vec::new(-0.2, 0.9, 0.5);
        assert!((minkowski_inner(&a.to_mat(), &b.to_mat()) - a.inner(&b)).abs() < 1e-15);
    }

    #[test]
    fn null_cone_branch_is_continuous() {
        let a = Sl2Vec::new(1.0, 0.0, 1.0 + 1e-9);
        let b = Sl2Vec::new(1.0, 0.0, 1.0);
        assert!((exp_sl2(&a) - exp_sl2(&b)).max_abs() < 1e-8);
    }
}
