// SPDX-License-Identifier: Apache-2.0

//! The pseudo-nearly-Kähler structure on SL(2,R)xSL(2,R) in left-invariant coordinates.
//!
//! A tangent vector `(a alpha, b beta)` at `(a, b)` is stored as the pair `(alpha, beta)`.
//! In these coordinates `g`, `J`, `P`, `Q` are constant and the Levi-Civita connection of
//! left-invariant fields is a fixed bilinear map.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use nalgebra::{Matrix6, Vector6};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::split_mat::{cross, exp_sl2, random_sl2, Mat2, Sl2Vec};
use crate::tol::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NkError {
    #[error("gram matrix is numerically singular")]
    SingularGram,
    #[error("plane is degenerate (gram determinant {0:e})")]
    DegeneratePlane(f64),
    #[error("point factor has determinant {0}, expected 1")]
    NotUnimodular(f64),
}

/// A point `(a, b)` of SL(2,R)xSL(2,R).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub a: Mat2,
    pub b: Mat2,
}

impl Point {
    pub const IDENTITY: Point = Point { a: Mat2::IDENTITY, b: Mat2::IDENTITY };

    pub fn new(a: Mat2, b: Mat2) -> Result<Self, NkError> {
        for m in [&a, &b] {
            let d = m.det();
            if !((d - 1.0).abs() <= 1e-9) {
                return Err(NkError::NotUnimodular(d));
            }
        }
        Ok(Point { a, b })
    }

    pub fn max_det_defect(&self) -> f64 {
        (self.a.det() - 1.0).abs().max((self.b.det() - 1.0).abs())
    }

    /// Moves along the left-invariant field `v` for time `t`.
    pub fn flow(&self, v: &AlgebraVec, t: f64) -> Point {
        Point { a: self.a * exp_sl2(&(v.alpha * t)), b: self.b * exp_sl2(&(v.beta * t)) }
    }

    pub fn max_abs_diff(&self, o: &Point) -> f64 {
        (self.a - o.a).max_abs().max((self.b - o.b).max_abs())
    }
}

/// An element `(alpha, beta)` of sl(2,R)+sl(2,R).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AlgebraVec {
    pub alpha: Sl2Vec,
    pub beta: Sl2Vec,
}

impl AlgebraVec {
    pub const ZERO: AlgebraVec = AlgebraVec { alpha: Sl2Vec::ZERO, beta: Sl2Vec::ZERO };

    pub fn new(alpha: Sl2Vec, beta: Sl2Vec) -> Self {
        AlgebraVec { alpha, beta }
    }

    /// Coordinates on `(i,0), (j,0), (k,0), (0,i), (0,j), (0,k)`.
    pub fn to_array(&self) -> [f64; 6] {
        let [a, b, c] = self.alpha.0;
        let [d, e, f] = self.beta.0;
        [a, b, c, d, e, f]
    }

    pub fn from_array(c: [f64; 6]) -> Self {
        AlgebraVec { alpha: Sl2Vec([c[0], c[1], c[2]]), beta: Sl2Vec([c[3], c[4], c[5]]) }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::from(self.to_array())
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self::from_array(std::array::from_fn(|i| v[i]))
    }

    pub fn basis(i: usize) -> Self {
        let mut c = [0.0; 6];
        c[i] = 1.0;
        Self::from_array(c)
    }

    pub fn max_abs(&self) -> f64 {
        self.alpha.max_abs().max(self.beta.max_abs())
    }

    pub fn dot(&self, o: &AlgebraVec) -> f64 {
        self.to_array().iter().zip(o.to_array()).map(|(x, y)| x * y).sum()
    }
}

impl Add for AlgebraVec {
    type Output = AlgebraVec;
    fn add(self, o: AlgebraVec) -> AlgebraVec {
        AlgebraVec::new(self.alpha + o.alpha, self.beta + o.beta)
    }
}

impl Sub for AlgebraVec {
    type Output = AlgebraVec;
    fn sub(self, o: AlgebraVec) -> AlgebraVec {
        AlgebraVec::new(self.alpha - o.alpha, self.beta - o.beta)
    }
}

impl Neg for AlgebraVec {
    type Output = AlgebraVec;
    fn neg(self) -> AlgebraVec {
        AlgebraVec::new(-self.alpha, -self.beta)
    }
}

impl Mul<f64> for AlgebraVec {
    type Output = AlgebraVec;
    fn mul(self, s: f64) -> AlgebraVec {
        AlgebraVec::new(self.alpha * s, self.beta * s)
    }
}

impl std::iter::Sum for AlgebraVec {
    fn sum<I: Iterator<Item = AlgebraVec>>(iter: I) -> AlgebraVec {
        iter.fold(AlgebraVec::ZERO, |a, b| a + b)
    }
}

/// A tangent vector `(a alpha, b beta)` at `base = (a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVec {
    pub base: Point,
    pub v: AlgebraVec,
}

impl TangentVec {
    /// The vector in the ambient `R^8 = M(2,R) x M(2,R)`.
    pub fn embedded(&self) -> (Mat2, Mat2) {
        (self.base.a * self.v.alpha.to_mat(), self.base.b * self.v.beta.to_mat())
    }
}

/// `g`, `<,>`, `J`, `P`, `Q` and the Levi-Civita map as 6x6 data.
#[derive(Clone, Debug)]
pub struct StructureConstants {
    pub gram_g: Matrix6<f64>,
    pub gram_prod: Matrix6<f64>,
    pub j_mat: Matrix6<f64>,
    pub p_mat: Matrix6<f64>,
    pub q_mat: Matrix6<f64>,
    /// `koszul[a][b]` is `L(e_a, e_b)`.
    pub koszul: [[AlgebraVec; 6]; 6],
}

fn matrix_of(f: impl Fn(&AlgebraVec) -> AlgebraVec) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    for j in 0..6 {
        m.set_column(j, &f(&AlgebraVec::basis(j)).to_vector());
    }
    m
}

fn gram_of(f: impl Fn(&AlgebraVec, &AlgebraVec) -> f64) -> Matrix6<f64> {
    Matrix6::from_fn(|i, j| f(&AlgebraVec::basis(i), &AlgebraVec::basis(j)))
}

/// Solves the Koszul system `2 h(L(A,B), C) = h([A,B],C) - h([A,C],B) - h([B,C],A)`
/// for every pair of basis vectors.
pub fn koszul_table(gram: &Matrix6<f64>) -> Result<[[AlgebraVec; 6]; 6], NkError> {
    let lu = gram.lu();
    if lu.determinant().abs() < 1e-12 {
        return Err(NkError::SingularGram);
    }
    let h = |x: &AlgebraVec, y: &AlgebraVec| (x.to_vector().transpose() * gram * y.to_vector())[0];
    let e: [AlgebraVec; 6] = std::array::from_fn(AlgebraVec::basis);
    let mut table = [[AlgebraVec::ZERO; 6]; 6];
    for a in 0..6 {
        for b in 0..6 {
            let rhs = Vector6::from_fn(|c, _| {
                0.5 * (h(&bracket(&e[a], &e[b]), &e[c]) - h(&bracket(&e[a], &e[c]), &e[b]) - h(&bracket(&e[b], &e[c]), &e[a]))
            });
            let sol = lu.solve(&rhs).ok_or(NkError::SingularGram)?;
            table[a][b] = AlgebraVec::from_vector(&sol);
        }
    }
    Ok(table)
}

impl StructureConstants {
    pub fn new() -> Result<Self, NkError> {
        let gram_g = gram_of(metric_g);
        Ok(StructureConstants {
            gram_g,
            gram_prod: gram_of(metric_product),
            j_mat: matrix_of(apply_j),
            p_mat: matrix_of(apply_p),
            q_mat: matrix_of(apply_q),
            koszul: koszul_table(&gram_g)?,
        })
    }

    /// Process-wide instance, built on first use.
    pub fn get() -> &'static StructureConstants {
        static SC: OnceLock<StructureConstants> = OnceLock::new();
        SC.get_or_init(|| StructureConstants::new().expect("metric g is nondegenerate"))
    }

    /// Number of positive and negative eigenvalues of `gram_g`.
    pub fn signature(&self) -> (usize, usize) {
        let ev = self.gram_g.symmetric_eigenvalues();
        let pos = ev.iter().filter(|&&x| x > 1e-12).count();
        let neg = ev.iter().filter(|&&x| x < -1e-12).count();
        (pos, neg)
    }

    pub fn connection(&self, x: &AlgebraVec, y: &AlgebraVec) -> AlgebraVec {
        let xc = x.to_array();
        let yc = y.to_array();
        let mut out = [0.0; 6];
        for (a, xa) in xc.iter().enumerate() {
            if *xa == 0.0 {
                continue;
            }
            for (b, yb) in yc.iter().enumerate() {
                let w = xa * yb;
                if w == 0.0 {
                    continue;
                }
                let l = self.koszul[a][b].to_array();
                for k in 0..6 {
                    out[k] += w * l[k];
                }
            }
        }
        AlgebraVec::from_array(out)
    }
}

/// `2/3(<alpha,gamma> + <beta,delta>) - 1/3(<beta,gamma> + <alpha,delta>)`.
pub fn metric_g(x: &AlgebraVec, y: &AlgebraVec) -> f64 {
    2.0 / 3.0 * (x.alpha.inner(&y.alpha) + x.beta.inner(&y.beta)) - 1.0 / 3.0 * (x.beta.inner(&y.alpha) + x.alpha.inner(&y.beta))
}

/// The product metric `<alpha,gamma> + <beta,delta>`.
pub fn metric_product(x: &AlgebraVec, y: &AlgebraVec) -> f64 {
    x.alpha.inner(&y.alpha) + x.beta.inner(&y.beta)
}

pub fn apply_j(x: &AlgebraVec) -> AlgebraVec {
    let s = 1.0 / 3f64.sqrt();
    AlgebraVec::new((x.alpha - x.beta * 2.0) * s, (x.alpha * 2.0 - x.beta) * s)
}

pub fn apply_p(x: &AlgebraVec) -> AlgebraVec {
    AlgebraVec::new(x.beta, x.alpha)
}

pub fn apply_q(x: &AlgebraVec) -> AlgebraVec {
    AlgebraVec::new(-x.alpha, x.beta)
}

/// `cos(eta) P + sin(eta) J P`.
pub fn apply_p_rotated(eta: f64, x: &AlgebraVec) -> AlgebraVec {
    let px = apply_p(x);
    px * eta.cos() + apply_j(&px) * eta.sin()
}

/// Lie bracket of left-invariant fields, `(2 alpha x alpha', 2 beta x beta')`.
pub fn bracket(x: &AlgebraVec, y: &AlgebraVec) -> AlgebraVec {
    AlgebraVec::new(cross(&x.alpha, &y.alpha) * 2.0, cross(&x.beta, &y.beta) * 2.0)
}

/// Levi-Civita connection of `g` on left-invariant fields.
pub fn koszul_connection(x: &AlgebraVec, y: &AlgebraVec) -> AlgebraVec {
    StructureConstants::get().connection(x, y)
}

/// `G(X,Y) = (nabla_X J) Y`.
pub fn tensor_g(x: &AlgebraVec, y: &AlgebraVec) -> AlgebraVec {
    koszul_connection(x, &apply_j(y)) - apply_j(&koszul_connection(x, y))
}

pub fn curvature(x: &AlgebraVec, y: &AlgebraVec, z: &AlgebraVec) -> AlgebraVec {
    let l = koszul_connection;
    l(x, &l(y, z)) - l(y, &l(x, z)) - l(&bracket(x, y), z)
}

/// Closed-form curvature of the nearly Kähler metric in terms of `g`, `J`, `P`.
pub fn curvature_closed_form(u: &AlgebraVec, v: &AlgebraVec, w: &AlgebraVec) -> AlgebraVec {
    let g = metric_g;
    let (j, p) = (apply_j, apply_p);
    let (ju, jv, jw) = (j(u), j(v), j(w));
    let (pu, pv) = (p(u), p(v));
    let (jpu, jpv) = (j(&pu), j(&pv));
    (*u * g(v, w) - *v * g(u, w)) * (-5.0 / 6.0)
        + (ju * g(&jv, w) - jv * g(&ju, w) - jw * (2.0 * g(&ju, v))) * (-1.0 / 6.0)
        + (pu * g(&pv, w) - pv * g(&pu, w) + jpu * g(&jpv, w) - jpv * g(&jpu, w)) * (-2.0 / 3.0)
}

/// Right side of the type identity with constant `c`:
/// `c (g(X,Z)g(Y,W) - g(X,W)g(Y,Z) + g(JX,Z)g(Y,JW) - g(JX,W)g(Y,JZ))`.
pub fn constant_type_rhs(c: f64, x: &AlgebraVec, y: &AlgebraVec, z: &AlgebraVec, w: &AlgebraVec) -> f64 {
    let g = metric_g;
    let (jx, jz, jw) = (apply_j(x), apply_j(z), apply_j(w));
    c * (g(x, z) * g(y, w) - g(x, w) * g(y, z) + g(&jx, z) * g(y, &jw) - g(&jx, w) * g(y, &jz))
}

pub fn sectional_curvature(u: &AlgebraVec, v: &AlgebraVec, tol: &Tolerances) -> Result<f64, NkError> {
    let g = metric_g;
    let den = g(u, u) * g(v, v) - g(u, v).powi(2);
    if den.abs() < tol.degenerate_plane {
        return Err(NkError::DegeneratePlane(den));
    }
    Ok(g(&curvature(u, v, v), u) / den)
}

/// Norm of `(nabla_X P~)Y - 1/2 (J G(X, P~Y) + J P~ G(X,Y))` for `P~ = cos(eta) P + sin(eta) JP`.
pub fn nabla_p_residual(eta: f64, x: &AlgebraVec, y: &AlgebraVec) -> f64 {
    let pt = |v: &AlgebraVec| apply_p_rotated(eta, v);
    let lhs = koszul_connection(x, &pt(y)) - pt(&koszul_connection(x, y));
    let rhs = (apply_j(&tensor_g(x, &pt(y))) + apply_j(&pt(&tensor_g(x, y)))) * 0.5;
    (lhs - rhs).max_abs()
}

pub fn verify_nabla_p(x: &AlgebraVec, y: &AlgebraVec) -> f64 {
    nabla_p_residual(0.0, x, y)
}

pub fn random_algebra_vec<R: Rng + ?Sized>(rng: &mut R) -> AlgebraVec {
    AlgebraVec::from_array(std::array::from_fn(|_| rng.gen_range(-1.0..=1.0)))
}

pub fn random_point<R: Rng + ?Sized>(rng: &mut R) -> Point {
    Point { a: random_sl2(rng), b: random_sl2(rng) }
}

/// Levi-Civita connection of the product metric on left-invariant fields.
pub fn product_connection(x: &AlgebraVec, y: &AlgebraVec) -> AlgebraVec {
    static TABLE: OnceLock<[[AlgebraVec; 6]; 6]> = OnceLock::new();
    let t = TABLE.get_or_init(|| koszul_table(&gram_of(metric_product)).expect("product metric is nondegenerate"));
    let xc = x.to_array();
    let yc = y.to_array();
    let mut out = AlgebraVec::ZERO;
    for a in 0..6 {
        for b in 0..6 {
            out = out + t[a][b] * (xc[a] * yc[b]);
        }
    }
    out
}

/// Maximum residuals of the flat-space decomposition of left-invariant derivatives.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub samples: usize,
    pub fd_step: f64,
    /// `D_X Y` against the product connection plus the normal terms.
    pub connection_residual: f64,
    /// `D_X Y` against `nabla~ + 1/2(JG(X,PY) + JG(Y,PX))` plus the normal terms.
    pub relation_residual: f64,
}

impl EmbeddingReport {
    pub fn max_residual(&self) -> f64 {
        self.connection_residual.max(self.relation_residual)
    }
}

/// Flat derivative `D_X Y` of the left-invariant extension of `y` at `p`, by a
/// central difference along the curve `t -> p exp(t x)`.
pub fn flat_derivative_fd(p: &Point, x: &AlgebraVec, y: &AlgebraVec, h: f64) -> (Mat2, Mat2) {
    let field = |t: f64| {
        let q = p.flow(x, t);
        (q.a * y.alpha.to_mat(), q.b * y.beta.to_mat())
    };
    let (pa, pb) = field(h);
    let (ma, mb) = field(-h);
    ((pa - ma) * (0.5 / h), (pb - mb) * (0.5 / h))
}

fn normal_terms(p: &Point, x: &AlgebraVec, y: &AlgebraVec) -> (Mat2, Mat2) {
    let c1 = 0.5 * metric_product(x, y);
    let c2 = 0.5 * metric_product(y, &apply_q(x));
    (p.a * (c1 - c2), p.b * (c1 + c2))
}

fn embedding_residuals(p: &Point, x: &AlgebraVec, y: &AlgebraVec, h: f64) -> (f64, f64) {
    let (da, db) = flat_derivative_fd(p, x, y, h);
    let (na, nb) = normal_terms(p, x, y);
    let lift = |v: AlgebraVec| (p.a * v.alpha.to_mat() + na, p.b * v.beta.to_mat() + nb);
    let diff = |(a, b): (Mat2, Mat2)| (da - a).max_abs().max((db - b).max_abs());
    let prod = product_connection(x, y);
    let nk = koszul_connection(x, y) + (apply_j(&tensor_g(x, &apply_p(y))) + apply_j(&tensor_g(y, &apply_p(x)))) * 0.5;
    (diff(lift(prod)), diff(lift(nk)))
}

/// Checks the flat-space decomposition at random points along random directions.
pub fn verify_euclidean_embedding<R: Rng + ?Sized>(rng: &mut R, samples: usize, fd_step: f64) -> EmbeddingReport {
    let mut rep = EmbeddingReport { samples, fd_step, connection_residual: 0.0, relation_residual: 0.0 };
    for _ in 0..samples {
        let p = random_point(rng);
        let x = random_algebra_vec(rng);
        let y = random_algebra_vec(rng);
        let (c, r) = embedding_residuals(&p, &x, &y, fd_step);
        rep.connection_residual = rep.connection_residual.max(c);
        rep.relation_residual = rep.relation_residual.max(r);
    }
    rep
}

/// The same check at a single prescribed point and pair of fields.
pub fn embedding_residual_at(p: &Point, x: &AlgebraVec, y: &AlgebraVec, fd_step: f64) -> f64 {
    let (c, r) = embedding_residuals(p, x, y, fd_step);
    c.max(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signature_is_four_two() {
        assert_eq!(StructureConstants::get().signature(), (4, 2));
    }

    #[test]
    fn explicit_metric_values() {
        let i0 = AlgebraVec::new(Sl2Vec::I, Sl2Vec::ZERO);
        let i1 = AlgebraVec::new(Sl2Vec::ZERO, Sl2Vec::I);
        assert!((metric_g(&i0, &i0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((metric_g(&i0, &i1) + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn j_on_basis() {
        let s = 1.0 / 3f64.sqrt();
        let j = apply_j(&AlgebraVec::new(Sl2Vec::ZERO, Sl2Vec::I));
        assert!((j.alpha.0[0] + 2.0 * s).abs() < 1e-15);
        assert!((j.beta.0[0] + s).abs() < 1e-15);
    }

    #[test]
    fn diagonal_plane_curvature() {
        let u = AlgebraVec::new(Sl2Vec::I, Sl2Vec::I);
        let v = AlgebraVec::new(Sl2Vec::J, Sl2Vec::J);
        let k = sectional_curvature(&u, &v, &Tolerances::default()).unwrap();
        assert!((k + 1.5).abs() < 1e-12);
    }

    #[test]
    fn null_plane_is_rejected() {
        let u = AlgebraVec::new(Sl2Vec::I + Sl2Vec::K, Sl2Vec::ZERO);
        let v = AlgebraVec::new(Sl2Vec::ZERO, Sl2Vec::I + Sl2Vec::K);
        assert!(matches!(sectional_curvature(&u, &v, &Tolerances::default()), Err(NkError::DegeneratePlane(_))));
    }
}
