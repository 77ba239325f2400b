// SPDX-License-Identifier: Apache-2.0

//! The eight extrinsically homogeneous Lagrangian immersions and their invariants.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::isometry::Isometry;
use crate::nk_core::{metric_g, AlgebraVec, Point, TangentVec};
use crate::split_mat::{exp_sl2, Mat2, Sl2Vec};
use crate::tol::Tolerances;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("parameters {0:?} are outside the immersion domain")]
    Domain([f64; 3]),
    #[error("pushforward at {params:?} is degenerate (gram determinant {det:e})")]
    Degenerate { params: [f64; 3], det: f64 },
    #[error("pushforward at {params:?} is not tangent to SL(2,R) (trace {trace:e})")]
    NotTangent { params: [f64; 3], trace: f64 },
    #[error("{0} has no generating subalgebra in this catalog")]
    NotApplicable(String),
    #[error("unknown immersion `{0}`")]
    UnknownImmersion(String),
}

/// Anything that maps a parameter box into SL(2,R)xSL(2,R).
pub trait Immersion: Sync {
    fn eval(&self, params: [f64; 3]) -> Result<Point, CatalogError>;
    fn label(&self) -> String;
    /// Closed-form pushforwards in Lie-algebra coordinates, when known.
    fn exact_pushforward(&self, _params: [f64; 3]) -> Option<[AlgebraVec; 3]> {
        None
    }
}

/// The rows of the classification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", content = "lambda")]
pub enum ImmersionId {
    DiagTotGeo,
    BergerSpacelike,
    BergerTimelike,
    PslConjugation,
    FlatTorus,
    BianchiVIota,
    BianchiIIIFLambda(f64),
    BianchiVIJmath,
}

pub const DEFAULT_LAMBDA_GRID: [f64; 4] = [-1.0, 0.5, 2.0, 3.0];

/// Type of `(A, B)` in the normal-form classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LagType {
    I,
    II,
    III,
    IV,
}

impl fmt::Display for LagType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LagType::I => "I",
            LagType::II => "II",
            LagType::III => "III",
            LagType::IV => "IV",
        };
        f.write_str(s)
    }
}

/// Gram pattern of a normalized frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Delta {
    D1,
    D2,
    D3,
}

impl Delta {
    pub fn matrix(self) -> [[f64; 3]; 3] {
        match self {
            Delta::D1 => [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            Delta::D2 => [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
            Delta::D3 => [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }
}

/// A named expected value such as `h22^3` or `w31^1` (`w` is the connection form).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedConstant {
    pub name: String,
    pub value: f64,
}

fn nc(name: &str, value: f64) -> NamedConstant {
    NamedConstant { name: name.to_string(), value }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedProfile {
    pub lag_type: LagType,
    pub angles: Option<Vec<f64>>,
    pub sectional_curvature: Option<f64>,
    pub tot_geodesic: bool,
    pub h_constants: Vec<NamedConstant>,
    pub delta_signature: Delta,
    pub notes: Vec<String>,
}

/// Basis of a three-dimensional subalgebra of sl(2,R)^3 and its brackets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubalgebraSpec {
    pub basis: [[Sl2Vec; 3]; 3],
    /// Coefficients of `[e1,e2]`, `[e1,e3]`, `[e2,e3]` on `(e1, e2, e3)`.
    pub brackets: [[f64; 3]; 3],
}

impl SubalgebraSpec {
    /// Largest entry of `[e_a, e_b] - sum c e_c` over the three brackets.
    pub fn bracket_residual(&self) -> f64 {
        let pairs = [(0, 1), (0, 2), (1, 2)];
        let mut worst = 0.0f64;
        for (n, (a, b)) in pairs.into_iter().enumerate() {
            for s in 0..3 {
                let x = self.basis[a][s].to_mat();
                let y = self.basis[b][s].to_mat();
                let comm = x * y - y * x;
                let mut want = Mat2::ZERO;
                for c in 0..3 {
                    want += self.basis[c][s].to_mat() * self.brackets[n][c];
                }
                worst = worst.max((comm - want).max_abs());
            }
        }
        worst
    }

    /// `exp(sum c_n e_n)` applied to `(Id, Id)`.
    pub fn orbit_point(&self, c: [f64; 3]) -> Point {
        let slot = |s: usize| {
            let v = (0..3).fold(Sl2Vec::ZERO, |acc, n| acc + self.basis[n][s] * c[n]);
            exp_sl2(&v)
        };
        let inv = slot(2).inverse_unimodular();
        Point { a: slot(0) * inv, b: slot(1) * inv }
    }
}

/// Catalog record exported to reports.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub key: String,
    pub immersion: ImmersionId,
    pub domain: [[f64; 2]; 3],
    pub lambda: Option<f64>,
    pub profile: ExpectedProfile,
}

fn chart(x: f64, y: f64, z: f64) -> Mat2 {
    exp_sl2(&(Sl2Vec::I * x)) * exp_sl2(&(Sl2Vec::J * y)) * exp_sl2(&(Sl2Vec::K * z))
}

/// `s csch s`, extended by 1 at 0.
fn x_csch_x(s: f64) -> f64 {
    if s.abs() < 1e-6 {
        1.0 - s * s / 6.0
    } else {
        s / s.sinh()
    }
}

/// `s / (e^s - 1)`, extended by 1 at 0.
fn x_over_expm1(s: f64) -> f64 {
    if s.abs() < 1e-6 {
        1.0 - s / 2.0 + s * s / 12.0
    } else {
        s / s.exp_m1()
    }
}

/// Derivative of [`x_over_expm1`].
fn x_over_expm1_prime(s: f64) -> f64 {
    if s.abs() < 0.05 {
        let s2 = s * s;
        -0.5 + s / 6.0 - s * s2 / 180.0 + s * s2 * s2 / 5040.0 - s * s2 * s2 * s2 / 172_800.0
    } else {
        let e = s.exp_m1();
        (e - s * (e + 1.0)) / (e * e)
    }
}

/// `sum_k m^k / (2k + n)!` for `n` in {2, 3}: the even and odd remainders of `cosh`/`sinh` at `sqrt(m)`.
fn remainder_series(m: f64, n: u32) -> f64 {
    if m.abs() < 1.0 {
        let mut term = 1.0 / (1..=n).map(f64::from).product::<f64>();
        let mut sum = term;
        for k in 1..12 {
            let a = f64::from(2 * k + n - 1);
            term *= m / (a * (a + 1.0));
            sum += term;
        }
        sum
    } else if m > 0.0 {
        let r = m.sqrt();
        if n == 2 {
            (r.cosh() - 1.0) / m
        } else {
            (r.sinh() / r - 1.0) / m
        }
    } else {
        let r = (-m).sqrt();
        if n == 2 {
            (r.cos() - 1.0) / m
        } else {
            (r.sin() / r - 1.0) / m
        }
    }
}

/// `exp(-Y) d exp(Y)` applied to `z`, i.e. `(1 - e^{-ad Y}) / ad Y` on sl(2,R).
fn dexp_left(y: &Sl2Vec, z: &Sl2Vec) -> Sl2Vec {
    let (ym, zm) = (y.to_mat(), z.to_mat());
    let br = |a: Mat2, b: Mat2| a * b - b * a;
    // Y^2 = mu^2 Id and (ad Y)^3 = 4 mu^2 ad Y
    let m = -4.0 * ym.det();
    let yz = br(ym, zm);
    let yyz = br(ym, yz);
    let out = zm - yz * remainder_series(m, 2) + yyz * remainder_series(m, 3);
    Sl2Vec::from_mat_unchecked(&out)
}

fn sv(x: f64, y: f64, z: f64) -> Sl2Vec {
    Sl2Vec::new(x, y, z)
}

impl ImmersionId {
    pub fn all(lambda_grid: &[f64]) -> Vec<ImmersionId> {
        let mut v = vec![
            ImmersionId::DiagTotGeo,
            ImmersionId::BergerSpacelike,
            ImmersionId::BergerTimelike,
            ImmersionId::PslConjugation,
            ImmersionId::FlatTorus,
            ImmersionId::BianchiVIota,
        ];
        v.extend(lambda_grid.iter().map(|&l| ImmersionId::BianchiIIIFLambda(l)));
        v.push(ImmersionId::BianchiVIJmath);
        v
    }

    pub fn key(&self) -> &'static str {
        match self {
            ImmersionId::DiagTotGeo => "diag",
            ImmersionId::BergerSpacelike => "berger_spacelike",
            ImmersionId::BergerTimelike => "berger_timelike",
            ImmersionId::PslConjugation => "psl",
            ImmersionId::FlatTorus => "torus",
            ImmersionId::BianchiVIota => "iota",
            ImmersionId::BianchiIIIFLambda(_) => "f_lambda",
            ImmersionId::BianchiVIJmath => "jmath",
        }
    }

    /// Row number in the classification table.
    pub fn row(&self) -> usize {
        match self {
            ImmersionId::DiagTotGeo => 1,
            ImmersionId::BergerSpacelike => 2,
            ImmersionId::BergerTimelike => 3,
            ImmersionId::PslConjugation => 4,
            ImmersionId::FlatTorus => 5,
            ImmersionId::BianchiVIota => 6,
            ImmersionId::BianchiIIIFLambda(_) => 7,
            ImmersionId::BianchiVIJmath => 8,
        }
    }

    /// Selects rows by key; `f_lambda` expands over `lambda_grid`.
    pub fn parse(key: &str, lambda_grid: &[f64]) -> Result<Vec<ImmersionId>, CatalogError> {
        let all = ImmersionId::all(lambda_grid);
        if key == "all" {
            return Ok(all);
        }
        let hit: Vec<_> = all.into_iter().filter(|id| id.key() == key).collect();
        if hit.is_empty() {
            Err(CatalogError::UnknownImmersion(key.to_string()))
        } else {
            Ok(hit)
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            ImmersionId::BianchiIIIFLambda(l) => Some(*l),
            _ => None,
        }
    }

    /// Box sampled by the verification suites.
    pub fn domain(&self) -> [[f64; 2]; 3] {
        [[-1.0, 1.0]; 3]
    }

    pub fn subalgebra(&self) -> Result<SubalgebraSpec, CatalogError> {
        match *self {
            ImmersionId::BianchiVIota => Ok(SubalgebraSpec {
                basis: [
                    [Sl2Vec::I, -Sl2Vec::I, -Sl2Vec::I],
                    [(Sl2Vec::J - Sl2Vec::K) * 2.25, (Sl2Vec::J + Sl2Vec::K) * 0.5, Sl2Vec::ZERO],
                    [(Sl2Vec::K - Sl2Vec::J) * 2.25, Sl2Vec::ZERO, (Sl2Vec::J + Sl2Vec::K) * 0.5],
                ],
                brackets: [[0.0, -2.0, 0.0], [0.0, 0.0, -2.0], [0.0; 3]],
            }),
            ImmersionId::BianchiIIIFLambda(l) => Ok(SubalgebraSpec {
                basis: [
                    [Sl2Vec::I, Sl2Vec::ZERO, Sl2Vec::ZERO],
                    [(Sl2Vec::J + Sl2Vec::K) * 0.5, Sl2Vec::ZERO, Sl2Vec::ZERO],
                    [Sl2Vec::ZERO, sv(0.0, -(l + 7.0) / 6.0, (11.0 - l) / 6.0), sv(0.0, -(l + 9.0) / 6.0, (9.0 - l) / 6.0)],
                ],
                brackets: [[0.0, 2.0, 0.0], [0.0; 3], [0.0; 3]],
            }),
            ImmersionId::BianchiVIJmath => {
                let s6 = 6f64.sqrt();
                let r23 = (2.0f64 / 3.0).sqrt();
                let e1 = [
                    sv((27.0 + 2.0 * s6) / 18.0, -(2.0 * r23 + 0.75), 8.0 / 3.0 * r23 + 0.75),
                    sv(-(1.0 + 17.0 / (12.0 * s6)), (48.0 - 17.0 * s6) / 96.0, -(0.5 + 85.0 / (48.0 * s6))),
                    sv(-0.5, (1.0 - 3.0 * s6) / 4.0, (3.0 * s6 - 1.0) / 4.0),
                ];
                let e2 = [Sl2Vec::ZERO, sv(r23, 0.5 * 1.5f64.sqrt(), 5.0 / (2.0 * s6)), Sl2Vec::ZERO];
                let e3 = [
                    sv(8.0 / 9.0 * (2.0 + 3.0 * s6), -2.0 / 3.0 * (7.0 + 2.0 * s6), 2.0 / 9.0 * (37.0 + 6.0 * s6)),
                    Sl2Vec::ZERO,
                    sv(0.0, -6.0, 6.0),
                ];
                Ok(SubalgebraSpec { basis: [e1, e2, e3], brackets: [[0.0, -2.0, 0.0], [0.0, 0.0, 1.0], [0.0; 3]] })
            }
            _ => Err(CatalogError::NotApplicable(self.key().to_string())),
        }
    }

    /// Coefficients on `(e1, e2, e3)` for the Bianchi rows, with the removable
    /// singularities filled in.
    pub fn group_coefficients(&self, params: [f64; 3]) -> Option<[f64; 3]> {
        let [a, b, c] = params;
        match self {
            ImmersionId::BianchiVIota => {
                let (w, u, v) = (a, b, c);
                let s = w.exp() * x_csch_x(w);
                Some([w, u * s, v * s])
            }
            ImmersionId::BianchiIIIFLambda(_) => {
                let (u, v, w) = (a, b, c);
                Some([w, u * (-w).exp() * x_csch_x(w), v])
            }
            ImmersionId::BianchiVIJmath => {
                let (u, v, w) = (a, b, c);
                // 2v e^{2v}/(e^{2v}-1) = e^{2v} x/(e^x-1) at x = 2v
                let c2 = u * (2.0 * v).exp() * x_over_expm1(2.0 * v);
                let c3 = w * x_over_expm1(v);
                Some([v, c2, c3])
            }
            _ => None,
        }
    }

    /// `d c_n / d x_j` for [`Self::group_coefficients`].
    pub fn group_jacobian(&self, params: [f64; 3]) -> Option<[[f64; 3]; 3]> {
        let [a, b, c] = params;
        let g = x_over_expm1;
        let dg = x_over_expm1_prime;
        match self {
            // e^w w csch w = g(-2w)
            ImmersionId::BianchiVIota => {
                let (s, ds) = (g(-2.0 * a), -2.0 * dg(-2.0 * a));
                Some([[1.0, 0.0, 0.0], [b * ds, s, 0.0], [c * ds, 0.0, s]])
            }
            // e^{-w} w csch w = g(2w)
            ImmersionId::BianchiIIIFLambda(_) => {
                Some([[0.0, 0.0, 1.0], [g(2.0 * c), 0.0, 2.0 * a * dg(2.0 * c)], [0.0, 1.0, 0.0]])
            }
            // e^{2v} g(2v) = g(-2v)
            ImmersionId::BianchiVIJmath => {
                Some([[0.0, 1.0, 0.0], [g(-2.0 * b), -2.0 * a * dg(-2.0 * b), 0.0], [0.0, c * dg(b), g(b)]])
            }
            _ => None,
        }
    }

    /// Pushforwards of a Bianchi row from the derivative of the exponential.
    fn orbit_pushforward(&self, params: [f64; 3]) -> Option<[AlgebraVec; 3]> {
        let sub = self.subalgebra().ok()?;
        let c = self.group_coefficients(params)?;
        let jac = self.group_jacobian(params)?;
        let slot = |s: usize, w: [f64; 3]| (0..3).fold(Sl2Vec::ZERO, |acc, n| acc + sub.basis[n][s] * w[n]);
        let y = [slot(0, c), slot(1, c), slot(2, c)];
        let h3 = exp_sl2(&y[2]);
        let h3i = h3.inverse_unimodular();
        let ad = |v: Sl2Vec| Sl2Vec::from_mat_unchecked(&(h3 * v.to_mat() * h3i));
        Some(std::array::from_fn(|j| {
            let dc = [jac[0][j], jac[1][j], jac[2][j]];
            let l: [Sl2Vec; 3] = std::array::from_fn(|s| dexp_left(&y[s], &slot(s, dc)));
            AlgebraVec::new(ad(l[0] - l[2]), ad(l[1] - l[2]))
        }))
    }

    pub fn expected_profile(&self) -> ExpectedProfile {
        let s2 = 2f64.sqrt();
        let r32 = 1.5f64.sqrt();
        let r23 = (2.0f64 / 3.0).sqrt();
        let type_i_angles = Some(vec![0.0, PI / 3.0, 2.0 * PI / 3.0]);
        let tg = |notes: Vec<String>| ExpectedProfile {
            lag_type: LagType::I,
            angles: None,
            sectional_curvature: None,
            tot_geodesic: true,
            h_constants: vec![],
            delta_signature: Delta::D1,
            notes,
        };
        match *self {
            ImmersionId::DiagTotGeo => {
                ExpectedProfile { sectional_curvature: Some(-1.5), ..tg(vec!["induced metric 2/3 <,>".into()]) }
            }
            ImmersionId::BergerSpacelike => tg(vec!["Berger-like metric stretched in a spacelike direction".into()]),
            ImmersionId::BergerTimelike => tg(vec!["Berger-like metric stretched in a timelike direction".into()]),
            ImmersionId::PslConjugation => ExpectedProfile {
                lag_type: LagType::I,
                angles: type_i_angles,
                sectional_curvature: Some(-3.0 / 8.0),
                tot_geodesic: false,
                h_constants: vec![nc("h12^3", 1.0 / (2.0 * s2))],
                delta_signature: Delta::D1,
                notes: vec!["SL(2,R) acts with isotropy Z2".into()],
            },
            ImmersionId::FlatTorus => ExpectedProfile {
                lag_type: LagType::I,
                angles: type_i_angles,
                sectional_curvature: Some(0.0),
                tot_geodesic: false,
                h_constants: vec![nc("h12^3", -1.0 / s2)],
                delta_signature: Delta::D1,
                notes: vec![],
            },
            ImmersionId::BianchiVIota => ExpectedProfile {
                lag_type: LagType::II,
                angles: Some(vec![PI / 3.0, PI / 3.0]),
                sectional_curvature: Some(-1.5),
                tot_geodesic: false,
                h_constants: vec![
                    nc("h22^3", -s2 / 3.0),
                    nc("w12^3", -r32),
                    nc("w21^3", -r32),
                    nc("w31^1", 0.0),
                    nc("w33^2", 0.0),
                ],
                delta_signature: Delta::D2,
                notes: vec!["Bianchi group of type V".into()],
            },
            ImmersionId::BianchiIIIFLambda(l) => ExpectedProfile {
                lag_type: LagType::II,
                angles: Some(vec![PI / 3.0, PI / 3.0]),
                sectional_curvature: Some(-1.5),
                tot_geodesic: false,
                h_constants: vec![
                    nc("h22^3", 2.0 * s2 / 3.0),
                    nc("w12^3", r32),
                    nc("w21^3", r32),
                    nc("w31^1", r32),
                    nc("w33^2", r23 * (1.0 - l)),
                ],
                delta_signature: Delta::D2,
                notes: vec![
                    "Bianchi group of type III".into(),
                    "compact quotient kernel when lambda = 2n^2/(n^2-m^2), m>n>0".into(),
                ],
            },
            ImmersionId::BianchiVIJmath => ExpectedProfile {
                lag_type: LagType::III,
                angles: None,
                sectional_curvature: None,
                tot_geodesic: false,
                h_constants: vec![
                    nc("h22^2", 2.0 * s2 / 3.0),
                    nc("h22^1", -13.0 / (18.0 * s2)),
                    nc("h22^3", 5.0 * s2 / 9.0),
                    nc("h11^1", 0.0),
                    nc("h11^2", 0.0),
                    nc("h11^3", 0.0),
                    nc("h12^3", 0.0),
                ],
                delta_signature: Delta::D2,
                notes: vec!["Bianchi group of type VI".into()],
            },
        }
    }

    pub fn entry(&self) -> CatalogEntry {
        CatalogEntry {
            key: self.key().to_string(),
            immersion: *self,
            domain: self.domain(),
            lambda: self.lambda(),
            profile: self.expected_profile(),
        }
    }

    /// Closed-form pushforwards in left-invariant coordinates, where available.
    pub fn analytic_pushforward(&self, params: [f64; 3]) -> Option<[AlgebraVec; 3]> {
        match self {
            ImmersionId::FlatTorus => {
                let u = params[0];
                let ek = exp_sl2(&(Sl2Vec::K * u));
                let eki = exp_sl2(&(Sl2Vec::K * -u));
                let c = |s: Sl2Vec| Sl2Vec::from_mat_unchecked(&(ek * s.to_mat() * eki));
                Some([
                    AlgebraVec::new(-Sl2Vec::K, -Sl2Vec::K),
                    AlgebraVec::new(c(Sl2Vec::I), Sl2Vec::ZERO),
                    AlgebraVec::new(Sl2Vec::ZERO, c(Sl2Vec::J)),
                ])
            }
            ImmersionId::PslConjugation => {
                let [x, y, z] = params;
                let u = chart(x, y, z);
                let ui = u.inverse_unimodular();
                let ad = |m: Mat2, s: Sl2Vec| m * s.to_mat() * m.inverse_unimodular();
                let ezi = exp_sl2(&(Sl2Vec::K * -z));
                let eyi = exp_sl2(&(Sl2Vec::J * -y));
                let dirs = [ad(ezi * eyi, Sl2Vec::I), ad(ezi, Sl2Vec::J), Sl2Vec::K.to_mat()];
                let (i, j) = (Sl2Vec::I.to_mat(), Sl2Vec::J.to_mat());
                Some(dirs.map(|x| {
                    let a = u * (i * x * i - x) * ui;
                    let b = u * (j * x * j - x) * ui;
                    AlgebraVec::new(Sl2Vec::from_mat_unchecked(&a), Sl2Vec::from_mat_unchecked(&b))
                }))
            }
            ImmersionId::BianchiVIota | ImmersionId::BianchiIIIFLambda(_) | ImmersionId::BianchiVIJmath => {
                self.orbit_pushforward(params)
            }
            _ => None,
        }
    }
}

impl fmt::Display for ImmersionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lambda() {
            Some(l) => write!(f, "{}(lambda={})", self.key(), l),
            None => f.write_str(self.key()),
        }
    }
}

fn check_params(p: [f64; 3]) -> Result<(), CatalogError> {
    if p.iter().all(|x| x.is_finite() && x.abs() <= 30.0) {
        Ok(())
    } else {
        Err(CatalogError::Domain(p))
    }
}

impl Immersion for ImmersionId {
    fn eval(&self, params: [f64; 3]) -> Result<Point, CatalogError> {
        check_params(params)?;
        let [x, y, z] = params;
        let (i, j, k) = (Sl2Vec::I.to_mat(), Sl2Vec::J.to_mat(), Sl2Vec::K.to_mat());
        Ok(match self {
            ImmersionId::DiagTotGeo => {
                let u = chart(x, y, z);
                Point { a: u, b: u }
            }
            ImmersionId::BergerSpacelike => {
                let u = chart(x, y, z);
                Point { a: u, b: i * u * i }
            }
            ImmersionId::BergerTimelike => {
                let u = chart(x, y, z);
                Point { a: u, b: -(k * u * k) }
            }
            ImmersionId::PslConjugation => {
                let u = chart(x, y, z);
                let ui = u.inverse_unimodular();
                Point { a: i * u * i * ui, b: j * u * j * ui }
            }
            ImmersionId::FlatTorus => {
                let (u, v, w) = (x, y, z);
                let r = exp_sl2(&(Sl2Vec::K * -u));
                Point { a: exp_sl2(&(Sl2Vec::I * v)) * r, b: exp_sl2(&(Sl2Vec::J * w)) * r }
            }
            _ => {
                let sub = self.subalgebra().expect("Bianchi row");
                let c = self.group_coefficients(params).expect("Bianchi row");
                sub.orbit_point(c)
            }
        })
    }

    fn label(&self) -> String {
        self.to_string()
    }

    fn exact_pushforward(&self, params: [f64; 3]) -> Option<[AlgebraVec; 3]> {
        check_params(params).ok()?;
        self.analytic_pushforward(params)
    }
}

/// `F o f` for an isometry `F`.
#[derive(Clone, Copy)]
pub struct IsometricImage<'a> {
    pub iso: Isometry,
    pub inner: &'a dyn Immersion,
}

impl Immersion for IsometricImage<'_> {
    fn eval(&self, params: [f64; 3]) -> Result<Point, CatalogError> {
        Ok(self.iso.act(&self.inner.eval(params)?))
    }

    fn label(&self) -> String {
        format!("{} o {}", self.iso, self.inner.label())
    }

    fn exact_pushforward(&self, params: [f64; 3]) -> Option<[AlgebraVec; 3]> {
        let vecs = self.inner.exact_pushforward(params)?;
        let base = self.inner.eval(params).ok()?;
        Some(vecs.map(|v| self.iso.differential_exact(&TangentVec { base, v }).v))
    }
}

/// Explicit matrix solution congruent to the type V orbit, used as a cross-check.
#[derive(Clone, Copy, Debug, Default)]
pub struct IotaMatrixForm;

impl Immersion for IotaMatrixForm {
    fn eval(&self, params: [f64; 3]) -> Result<Point, CatalogError> {
        check_params(params)?;
        let [u, v, w] = params;
        let s = 1.5f64.sqrt() * w;
        let (ep, em) = (s.exp(), (-s).exp());
        let a = Mat2::raw(ep, ep * (u + v / 3.0), 3.0 * ep * v, ep * (v * v + 3.0 * u * v) + em);
        let b = Mat2::raw(1.0, 2.0 * v / 3.0, 0.0, 1.0);
        Ok(Point { a, b })
    }

    fn label(&self) -> String {
        "iota_matrix_form".into()
    }
}

/// Coordinate pushforwards `p^-1 dp`, `q^-1 dq` by five-point differences on the
/// matrix entries. A step whose result is not traceless is halved once.
pub fn pushforward(imm: &dyn Immersion, params: [f64; 3], tol: &Tolerances) -> Result<[TangentVec; 3], CatalogError> {
    let base = imm.eval(params)?;
    let attempt = |h: f64| -> Result<([AlgebraVec; 3], f64), CatalogError> {
        let mut out = [AlgebraVec::ZERO; 3];
        let mut worst = 0.0f64;
        let (ia, ib) = (base.a.inverse_unimodular(), base.b.inverse_unimodular());
        for (d, slot) in out.iter_mut().enumerate() {
            let at = |t: f64| {
                let mut q = params;
                q[d] += t;
                imm.eval(q)
            };
            let (m2, m1, p1, p2) = (at(-2.0 * h)?, at(-h)?, at(h)?, at(2.0 * h)?);
            let s = 1.0 / (12.0 * h);
            let da = (m2.a - m1.a * 8.0 + p1.a * 8.0 - p2.a) * s;
            let db = (m2.b - m1.b * 8.0 + p1.b * 8.0 - p2.b) * s;
            let (la, lb) = (ia * da, ib * db);
            worst = worst.max(la.trace().abs()).max(lb.trace().abs());
            *slot = AlgebraVec::new(Sl2Vec::from_mat_unchecked(&la), Sl2Vec::from_mat_unchecked(&lb));
        }
        Ok((out, worst))
    };
    let (mut vecs, mut tr) = attempt(tol.fd_step)?;
    if tr >= 1e-8 {
        (vecs, tr) = attempt(0.5 * tol.fd_step)?;
        if tr >= 1e-8 {
            return Err(CatalogError::NotTangent { params, trace: tr });
        }
    }
    let gram = nalgebra::Matrix3::from_fn(|i, j| metric_g(&vecs[i], &vecs[j]));
    let det = gram.determinant();
    if det.abs() < 1e-10 {
        return Err(CatalogError::Degenerate { params, det });
    }
    Ok(vecs.map(|v| TangentVec { base, v }))
}

/// Coordinate pushforwards, in closed form when the immersion provides them and by
/// [`pushforward`] otherwise.
pub fn frame_vectors(imm: &dyn Immersion, params: [f64; 3], tol: &Tolerances) -> Result<[TangentVec; 3], CatalogError> {
    let Some(vecs) = imm.exact_pushforward(params) else {
        return pushforward(imm, params, tol);
    };
    let base = imm.eval(params)?;
    let gram = nalgebra::Matrix3::from_fn(|i, j| metric_g(&vecs[i], &vecs[j]));
    let det = gram.determinant();
    if det.abs() < 1e-10 {
        return Err(CatalogError::Degenerate { params, det });
    }
    Ok(vecs.map(|v| TangentVec { base, v }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_round_trip() {
        for id in ImmersionId::all(&DEFAULT_LAMBDA_GRID) {
            let parsed = ImmersionId::parse(id.key(), &DEFAULT_LAMBDA_GRID).unwrap();
            assert!(parsed.contains(&id));
        }
        assert!(matches!(ImmersionId::parse("nope", &DEFAULT_LAMBDA_GRID), Err(CatalogError::UnknownImmersion(_))));
    }

    #[test]
    fn removable_coefficients_are_smooth() {
        for s in [-1e-6, 1e-6] {
            assert!((x_csch_x(s) - 1.0).abs() < 1e-9);
            assert!((x_over_expm1(s) - 1.0).abs() < 1e-6);
        }
        assert!((x_csch_x(1e-6 + 1e-9) - (1e-6f64 + 1e-9) / (1e-6f64 + 1e-9).sinh()).abs() < 1e-12);
    }

    #[test]
    fn matrix_form_is_unimodular() {
        let p = IotaMatrixForm.eval([0.4, -0.3, 0.7]).unwrap();
        assert!(p.max_det_defect() < 1e-12);
    }

    #[test]
    fn domain_rejects_non_finite() {
        assert!(ImmersionId::FlatTorus.eval([f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn bianchi_brackets_close() {
        for id in [ImmersionId::BianchiVIota, ImmersionId::BianchiIIIFLambda(2.0), ImmersionId::BianchiVIJmath] {
            let r = id.subalgebra().unwrap().bracket_residual();
            assert!(r < 1e-12, "{id}: {r:e}");
        }
    }

    #[test]
    fn jacobians_match_differences_across_singular_loci() {
        let h = 1e-5;
        for id in [ImmersionId::BianchiVIota, ImmersionId::BianchiIIIFLambda(2.0), ImmersionId::BianchiVIJmath] {
            for x in [[0.3, -0.2, 0.4], [0.0, 0.0, 0.0], [0.2, 1e-7, -1e-7], [-1e-7, 0.04, 0.03], [1.5, -2.0, 2.5]] {
                let jac = id.group_jacobian(x).unwrap();
                for j in 0..3 {
                    let (mut p, mut m) = (x, x);
                    p[j] += h;
                    m[j] -= h;
                    let (cp, cm) = (id.group_coefficients(p).unwrap(), id.group_coefficients(m).unwrap());
                    for n in 0..3 {
                        let fd = (cp[n] - cm[n]) / (2.0 * h);
                        assert!((fd - jac[n][j]).abs() < 1e-8, "{id} {x:?} {n} {j}: {fd} vs {}", jac[n][j]);
                    }
                }
            }
        }
    }

    #[test]
    fn dexp_matches_differences() {
        let z = Sl2Vec::new(0.3, -0.7, 0.2);
        for y in [
            Sl2Vec::new(0.4, 0.1, -0.3),
            Sl2Vec::new(0.1, 1.3, 0.2),
            Sl2Vec::new(0.5, 0.5, 0.0),
            Sl2Vec::new(2.0, 0.1, 0.3),
            Sl2Vec::new(0.1, 0.2, 2.5),
        ] {
            let h = 1e-5;
            let d = (exp_sl2(&(y + z * h)) - exp_sl2(&(y - z * h))) * (0.5 / h);
            let fd = Sl2Vec::from_mat_unchecked(&(exp_sl2(&y).inverse_unimodular() * d));
            assert!((fd - dexp_left(&y, &z)).max_abs() < 1e-8, "{y:?}");
        }
    }

    #[test]
    fn analytic_pushforwards_match_differences() {
        let tol = Tolerances::default();
        for id in [
            ImmersionId::PslConjugation,
            ImmersionId::FlatTorus,
            ImmersionId::BianchiVIota,
            ImmersionId::BianchiIIIFLambda(-1.0),
            ImmersionId::BianchiVIJmath,
        ] {
            let x = [0.3, -0.2, 0.4];
            let fd = pushforward(&id, x, &tol).unwrap();
            let an = id.analytic_pushforward(x).unwrap();
            for d in 0..3 {
                assert!((fd[d].v - an[d]).max_abs() < 1e-9, "{id} {d}");
            }
        }
        let at_id = ImmersionId::PslConjugation.analytic_pushforward([0.0; 3]).unwrap();
        assert!((at_id[0] - AlgebraVec::new(Sl2Vec::ZERO, Sl2Vec::I * -2.0)).max_abs() < 1e-15);
    }
}
