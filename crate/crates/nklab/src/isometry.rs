// SPDX-License-Identifier: Apache-2.0

//! Isometries `(a, b, c, k, Psi)` of the nearly Kähler SL(2,R)xSL(2,R).
//!
//! A point `(p, q)` is the class of the triple `(p, q, Id)` modulo right multiplication
//! by the diagonal, read back as `(x1 x3^-1, x2 x3^-1)`. In this model `phi_(a,b,c)`
//! multiplies the slots on the left and every `Psi` permutes them, which makes
//! composition explicit.

use std::fmt;

use nalgebra::Matrix6;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nk_core::{apply_j, apply_p_rotated, metric_g, AlgebraVec, Point, TangentVec};
use crate::split_mat::{random_sl2, Mat2, Sl2Vec};
use crate::tol::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsometryError {
    #[error("composed element disagrees with sequential action by {0:e}")]
    Composition(f64),
    #[error("factor has determinant {0}, expected 1")]
    NotUnimodular(f64),
}

/// `tau` in `{0, 2pi/3, 4pi/3}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tau {
    Zero,
    TwoThirds,
    FourThirds,
}

impl Tau {
    pub const ALL: [Tau; 3] = [Tau::Zero, Tau::TwoThirds, Tau::FourThirds];

    pub fn angle(self) -> f64 {
        match self {
            Tau::Zero => 0.0,
            Tau::TwoThirds => 2.0 * std::f64::consts::PI / 3.0,
            Tau::FourThirds => 4.0 * std::f64::consts::PI / 3.0,
        }
    }
}

/// One of the six `Psi_(kappa, tau)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Psi {
    pub kappa: u8,
    pub tau: Tau,
}

impl Psi {
    pub const IDENTITY: Psi = Psi { kappa: 0, tau: Tau::Zero };

    pub fn all() -> [Psi; 6] {
        let mut out = [Psi::IDENTITY; 6];
        for (n, tau) in Tau::ALL.into_iter().enumerate() {
            for kappa in 0..2u8 {
                out[2 * n + kappa as usize] = Psi { kappa, tau };
            }
        }
        out
    }

    /// Slot permutation: new slot `i` takes old slot `s[i]`.
    ///
    /// | element | map |
    /// |---|---|
    /// | `(0, 0)` | `(p, q)` |
    /// | `(1, 0)` | `(q, p)` |
    /// | `(0, 2pi/3)` | `(q^-1, p q^-1)` |
    /// | `(1, 2pi/3)` | `(p q^-1, q^-1)` |
    /// | `(0, 4pi/3)` | `(q p^-1, p^-1)` |
    /// | `(1, 4pi/3)` | `(p^-1, q p^-1)` |
    pub fn slots(self) -> [usize; 3] {
        match (self.kappa, self.tau) {
            (0, Tau::Zero) => [0, 1, 2],
            (1, Tau::Zero) => [1, 0, 2],
            (0, Tau::TwoThirds) => [2, 0, 1],
            (1, Tau::TwoThirds) => [0, 2, 1],
            (0, Tau::FourThirds) => [1, 2, 0],
            _ => [2, 1, 0],
        }
    }

    pub fn from_slots(s: [usize; 3]) -> Psi {
        Psi::all().into_iter().find(|p| p.slots() == s).expect("every permutation of three slots is some Psi")
    }

    pub fn compose(self, other: Psi) -> Psi {
        let (f, g) = (self.slots(), other.slots());
        Psi::from_slots(std::array::from_fn(|i| g[f[i]]))
    }

    pub fn act(self, p: &Point) -> Point {
        apply_slots(self.slots(), [p.a, p.b, Mat2::IDENTITY])
    }
}

impl fmt::Display for Psi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = match self.tau {
            Tau::Zero => "0",
            Tau::TwoThirds => "2pi/3",
            Tau::FourThirds => "4pi/3",
        };
        write!(f, "Psi[{},{}]", self.kappa, t)
    }
}

fn apply_slots(s: [usize; 3], x: [Mat2; 3]) -> Point {
    let y: [Mat2; 3] = std::array::from_fn(|i| x[s[i]]);
    let inv = y[2].inverse().expect("slots stay invertible");
    Point { a: y[0] * inv, b: y[1] * inv }
}

fn i_mat() -> Mat2 {
    Sl2Vec::I.to_mat()
}

/// `(a, b, c, k, Psi)` acting as `Psi o phi_(i^k a, i^k b, i^k c)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub a: Mat2,
    pub b: Mat2,
    pub c: Mat2,
    pub k: bool,
    pub psi: Psi,
}

impl Isometry {
    pub const IDENTITY: Isometry =
        Isometry { a: Mat2::IDENTITY, b: Mat2::IDENTITY, c: Mat2::IDENTITY, k: false, psi: Psi::IDENTITY };

    pub fn new(a: Mat2, b: Mat2, c: Mat2, k: bool, psi: Psi) -> Result<Self, IsometryError> {
        for m in [&a, &b, &c] {
            let d = m.det();
            if !((d - 1.0).abs() <= 1e-9) {
                return Err(IsometryError::NotUnimodular(d));
            }
        }
        Ok(Isometry { a, b, c, k, psi })
    }

    pub fn phi(a: Mat2, b: Mat2, c: Mat2) -> Result<Self, IsometryError> {
        Self::new(a, b, c, false, Psi::IDENTITY)
    }

    pub fn psi(psi: Psi) -> Self {
        Isometry { psi, ..Self::IDENTITY }
    }

    /// Conjugation by `i`, the determinant `-1` factor.
    pub fn flip() -> Self {
        Isometry { k: true, ..Self::IDENTITY }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let a = random_sl2(rng);
        let b = random_sl2(rng);
        let c = random_sl2(rng);
        let k = rng.gen_bool(0.5);
        let psi = Psi::all()[rng.gen_range(0..6)];
        Isometry { a, b, c, k, psi }
    }

    fn left_factors(&self) -> [Mat2; 3] {
        let t = if self.k { i_mat() } else { Mat2::IDENTITY };
        [t * self.a, t * self.b, t * self.c]
    }

    pub fn act(&self, p: &Point) -> Point {
        let d = self.left_factors();
        let t = if self.k { i_mat() } else { Mat2::IDENTITY };
        // right multiplication by i^k keeps the triple in SL(2,R) and does not change the class
        let x = [d[0] * p.a * t, d[1] * p.b * t, d[2] * t];
        apply_slots(self.psi.slots(), x)
    }

    /// The element acting as `self o other`, checked against sequential action.
    pub fn compose(&self, other: &Isometry, tol: &Tolerances) -> Result<Isometry, IsometryError> {
        let out = self.compose_unchecked(other);
        let mut worst = 0.0f64;
        for p in probe_points() {
            let direct = out.act(&p);
            let seq = self.act(&other.act(&p));
            worst = worst.max(direct.max_abs_diff(&seq) / (1.0 + seq.a.max_abs().max(seq.b.max_abs())));
        }
        if worst > tol.composition {
            return Err(IsometryError::Composition(worst));
        }
        Ok(out)
    }

    fn compose_unchecked(&self, other: &Isometry) -> Isometry {
        let f = [self.a, self.b, self.c];
        let g = [other.a, other.b, other.c];
        let sg = other.psi.slots();
        let mut sg_inv = [0usize; 3];
        for (i, &s) in sg.iter().enumerate() {
            sg_inv[s] = i;
        }
        let conj = |m: Mat2| if other.k { i_mat() * m * i_mat() } else { m };
        let e: [Mat2; 3] = std::array::from_fn(|j| conj(f[sg_inv[j]]) * g[j]);
        Isometry { a: e[0], b: e[1], c: e[2], k: self.k ^ other.k, psi: self.psi.compose(other.psi) }
    }

    pub fn inverse(&self) -> Isometry {
        // phi_d^-1 o Psi^-1 rewritten in (a, b, c, k, Psi) form
        let s = self.psi.slots();
        let mut s_inv = [0usize; 3];
        for (i, &v) in s.iter().enumerate() {
            s_inv[v] = i;
        }
        let psi_inv = Psi::from_slots(s_inv);
        let f = [self.a, self.b, self.c];
        let conj = |m: Mat2| if self.k { i_mat() * m * i_mat() } else { m };
        let d_inv: [Mat2; 3] = std::array::from_fn(|j| conj(f[j].inverse_unimodular()));
        let phi_inv = Isometry { a: d_inv[0], b: d_inv[1], c: d_inv[2], k: self.k, psi: Psi::IDENTITY };
        phi_inv.compose_unchecked(&Isometry::psi(psi_inv))
    }

    /// Differential with the closed form `(c alpha c^-1, c beta c^-1)` for `phi`
    /// and finite differences for the `Psi` part.
    pub fn differential(&self, x: &TangentVec, h: f64) -> TangentVec {
        let t = if self.k { i_mat() } else { Mat2::IDENTITY };
        let c = t * self.c;
        let ci = c.inverse().expect("invertible");
        let conj = |s: &Sl2Vec| Sl2Vec::from_mat_unchecked(&(c * s.to_mat() * ci));
        let phi_only = Isometry { psi: Psi::IDENTITY, ..*self };
        let base = phi_only.act(&x.base);
        let v = AlgebraVec::new(conj(&x.v.alpha), conj(&x.v.beta));
        let mid = TangentVec { base, v };
        if self.psi == Psi::IDENTITY {
            return mid;
        }
        let psi = Isometry::psi(self.psi);
        differential_fd(&|p: &Point| psi.act(p), &mid, h)
    }

    /// Differential in closed form. With `x = (d0 p t, d1 q t, d2 t)` and `y` the
    /// permuted triple, `alpha' = Ad(y2)(X_s0 - X_s2)` for the left logarithmic
    /// derivatives `X = (t^-1 alpha t, t^-1 beta t, 0)`.
    pub fn differential_exact(&self, x: &TangentVec) -> TangentVec {
        let d = self.left_factors();
        let t = if self.k { i_mat() } else { Mat2::IDENTITY };
        let ti = t.inverse().expect("i^k is invertible");
        let triple = [d[0] * x.base.a * t, d[1] * x.base.b * t, d[2] * t];
        let logs = [ti * x.v.alpha.to_mat() * t, ti * x.v.beta.to_mat() * t, Mat2::ZERO];
        let s = self.psi.slots();
        let y2 = triple[s[2]];
        let y2i = y2.inverse().expect("slots stay invertible");
        let leg = |n: usize| Sl2Vec::from_mat_unchecked(&(y2 * (logs[s[n]] - logs[s[2]]) * y2i));
        TangentVec { base: apply_slots(s, triple), v: AlgebraVec::new(leg(0), leg(1)) }
    }

    /// Differential of the whole map by finite differences.
    pub fn differential_fd(&self, x: &TangentVec, h: f64) -> TangentVec {
        differential_fd(&|p: &Point| self.act(p), x, h)
    }
}

impl fmt::Display for Isometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, k={})", self.psi, self.k as u8)
    }
}

fn probe_points() -> [Point; 8] {
    let v = |x: f64, y: f64, z: f64| Sl2Vec::new(x, y, z);
    let e = crate::split_mat::exp_sl2;
    std::array::from_fn(|n| {
        let t = n as f64 + 1.0;
        Point {
            a: e(&v(0.3 * t.sin(), 0.2 * t, -0.4 * t.cos())),
            b: e(&v(-0.5 * (0.7 * t).cos(), 0.1 * t.sin(), 0.25 * t / 3.0)),
        }
    })
}

/// Five-point central difference of a point map along `t -> p exp(t v)`,
/// returned in left-invariant coordinates at the image.
pub fn differential_fd(f: &dyn Fn(&Point) -> Point, x: &TangentVec, h: f64) -> TangentVec {
    let at = |t: f64| f(&x.base.flow(&x.v, t));
    let img = f(&x.base);
    let (m2, m1, p1, p2) = (at(-2.0 * h), at(-h), at(h), at(2.0 * h));
    let d = |s: fn(&Point) -> Mat2| (s(&m2) - s(&m1) * 8.0 + s(&p1) * 8.0 - s(&p2)) * (1.0 / (12.0 * h));
    let da = d(|p| p.a);
    let db = d(|p| p.b);
    let ia = img.a.inverse().expect("invertible");
    let ib = img.b.inverse().expect("invertible");
    TangentVec { base: img, v: AlgebraVec::new(Sl2Vec::from_mat_unchecked(&(ia * da)), Sl2Vec::from_mat_unchecked(&(ib * db))) }
}

/// Outcome of checking one isometry on random points and tangent vectors.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IsometryReport {
    pub samples: usize,
    pub metric_residual: f64,
    pub j_sign: i8,
    pub j_residual: f64,
    pub p_tau: f64,
    pub p_residual: f64,
    /// Declared `(-1)^kappa` and `tau` agree with the detected ones.
    pub matches_declared: bool,
}

/// Matrix of `dF` at `p` in left-invariant coordinates (columns are images of basis vectors).
pub fn differential_matrix(f: &Isometry, p: &Point, h: f64) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    for j in 0..6 {
        let x = TangentVec { base: *p, v: AlgebraVec::basis(j) };
        m.set_column(j, &f.differential(&x, h).v.to_vector());
    }
    m
}

/// Checks `g(dF X, dF Y) = g(X, Y)` and finds the sign in `J dF = +-dF J`
/// and the angle in `P dF = dF (cos tau P + sin tau JP)`.
pub fn verify_isometry<R: Rng + ?Sized>(f: &Isometry, samples: usize, rng: &mut R, tol: &Tolerances) -> IsometryReport {
    let sc = crate::nk_core::StructureConstants::get();
    let mut metric = 0.0f64;
    let mut j_res = [0.0f64; 2];
    let mut p_res = [0.0f64; 3];
    let jm = sc.j_mat;
    let ptil: [Matrix6<f64>; 3] = Tau::ALL.map(|t| {
        let mut m = Matrix6::zeros();
        for j in 0..6 {
            m.set_column(j, &apply_p_rotated(t.angle(), &AlgebraVec::basis(j)).to_vector());
        }
        m
    });
    for _ in 0..samples.max(1) {
        let p = crate::nk_core::random_point(rng);
        let d = differential_matrix(f, &p, tol.fd_step);
        metric = metric.max((d.transpose() * sc.gram_g * d - sc.gram_g).abs().max());
        for (n, s) in [1.0, -1.0].iter().enumerate() {
            j_res[n] = j_res[n].max((jm * d - d * jm * *s).abs().max());
        }
        for (n, pt) in ptil.iter().enumerate() {
            p_res[n] = p_res[n].max((sc.p_mat * d - d * pt).abs().max());
        }
    }
    let (jn, &j_residual) = j_res.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("two candidates");
    let (pn, &p_residual) = p_res.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("three candidates");
    let j_sign = if jn == 0 { 1 } else { -1 };
    let expected_sign = if f.psi.kappa == 0 { 1 } else { -1 };
    IsometryReport {
        samples: samples.max(1),
        metric_residual: metric,
        j_sign,
        j_residual,
        p_tau: Tau::ALL[pn].angle(),
        p_residual,
        matches_declared: j_sign == expected_sign && Tau::ALL[pn] == f.psi.tau,
    }
}

/// `g(dF X, dF Y) - g(X, Y)` for a single pair, used by property tests.
pub fn metric_defect(f: &Isometry, x: &TangentVec, y: &AlgebraVec, h: f64) -> f64 {
    let dx = f.differential(x, h);
    let dy = f.differential(&TangentVec { base: x.base, v: *y }, h);
    (metric_g(&dx.v, &dy.v) - metric_g(&x.v, y)).abs()
}

/// `J dF X - (-1)^kappa dF J X` for a single vector.
pub fn j_defect(f: &Isometry, x: &TangentVec, h: f64) -> f64 {
    let s = if f.psi.kappa == 0 { 1.0 } else { -1.0 };
    let lhs = apply_j(&f.differential(x, h).v);
    let rhs = f.differential(&TangentVec { base: x.base, v: apply_j(&x.v) }, h).v * s;
    (lhs - rhs).max_abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_table_matches_maps() {
        let p = probe_points()[0];
        let (a, b) = (p.a, p.b);
        let ai = a.inverse().unwrap();
        let bi = b.inverse().unwrap();
        let cases = [
            (Psi { kappa: 0, tau: Tau::Zero }, (a, b)),
            (Psi { kappa: 1, tau: Tau::Zero }, (b, a)),
            (Psi { kappa: 0, tau: Tau::TwoThirds }, (bi, a * bi)),
            (Psi { kappa: 1, tau: Tau::TwoThirds }, (a * bi, bi)),
            (Psi { kappa: 0, tau: Tau::FourThirds }, (b * ai, ai)),
            (Psi { kappa: 1, tau: Tau::FourThirds }, (ai, b * ai)),
        ];
        for (psi, (x, y)) in cases {
            let q = psi.act(&p);
            assert!((q.a - x).max_abs() < 1e-12 && (q.b - y).max_abs() < 1e-12, "{psi}");
        }
    }

    #[test]
    fn exact_differential_matches_differences() {
        let mut rng = crate::rng::stream(7, "isometry", "differential");
        for n in 0..12 {
            let f = Isometry::random(&mut rng);
            let p = probe_points()[n % 8];
            let x = TangentVec { base: p, v: AlgebraVec::new(Sl2Vec::new(0.2, -0.5, 0.3), Sl2Vec::new(-0.1, 0.4, 0.6)) };
            let (e, d) = (f.differential_exact(&x), f.differential_fd(&x, 1e-4));
            assert!((e.base.a - d.base.a).max_abs() < 1e-9 && (e.base.b - d.base.b).max_abs() < 1e-9, "{f}");
            assert!((e.v - d.v).max_abs() < 1e-6 * e.v.max_abs().max(1.0), "{f}");
        }
    }

    #[test]
    fn rotation_squares_to_its_inverse() {
        let r = Psi { kappa: 0, tau: Tau::TwoThirds };
        assert_eq!(r.compose(r), Psi { kappa: 0, tau: Tau::FourThirds });
        assert_eq!(r.compose(r).compose(r), Psi::IDENTITY);
    }

    #[test]
    fn inverse_undoes_action() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        use rand::SeedableRng;
        for _ in 0..20 {
            let f = Isometry::random(&mut rng);
            let p = crate::nk_core::random_point(&mut rng);
            let back = f.inverse().act(&f.act(&p));
            assert!(back.max_abs_diff(&p) < 1e-9);
        }
    }
}
