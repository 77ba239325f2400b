// SPDX-License-Identifier: Apache-2.0

//! Seeded verification suites and their JSON/CSV reports.
//!
//! Every check draws from its own random stream (see [`crate::rng`]) and is
//! reduced with a maximum, so records do not depend on thread scheduling.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{CatalogError, ImmersionId, LagType, DEFAULT_LAMBDA_GRID};
use crate::isometry::{verify_isometry, Isometry, IsometryReport, Psi};
use crate::lag::constraints::grid;
use crate::lag::{congruence_check, constraints_of, dist_mod_pi, grid_spread, LagError, LocalAnalysis};
use crate::nk_core::{
    apply_j, apply_p_rotated, apply_q, bracket, constant_type_rhs, curvature, curvature_closed_form, embedding_residual_at,
    koszul_connection, metric_g, metric_product, nabla_p_residual, random_algebra_vec, random_point, sectional_curvature,
    tensor_g, AlgebraVec, StructureConstants,
};
use crate::rng::{sample_stream, stream, CheckRng};
use crate::split_mat::{random_sl2, Sl2Vec};
use crate::{par, Tolerances};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("no records to report")]
    Empty,
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot serialize report: {0}")]
    Serialize(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(ReportError::Config(format!("unknown format {other:?}"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

fn default_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// Settings shared by all suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub samples: usize,
    pub tol_exact: f64,
    pub tol_fd: f64,
    pub fd_step: f64,
    pub lambda_grid: Vec<f64>,
    pub out_path: Option<PathBuf>,
    pub format: Format,
    /// Scheduling only; records are identical either way.
    #[serde(skip, default = "default_parallel")]
    pub parallel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            samples: 1000,
            tol_exact: 1e-10,
            tol_fd: 1e-5,
            fd_step: 1e-4,
            lambda_grid: DEFAULT_LAMBDA_GRID.to_vec(),
            out_path: None,
            format: Format::Json,
            parallel: default_parallel(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ReportError> {
        if self.samples < 1 {
            return Err(ReportError::Config("samples must be at least 1".into()));
        }
        for (name, v) in [("tol_exact", self.tol_exact), ("tol_fd", self.tol_fd), ("fd_step", self.fd_step)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ReportError::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !l.is_finite()) {
            return Err(ReportError::Config("lambda grid must be a nonempty list of finite values".into()));
        }
        Ok(())
    }

    /// Engine tolerances with the configured thresholds and step.
    pub fn tolerances(&self) -> Tolerances {
        Tolerances { exact: self.tol_exact, fd: self.tol_fd, fd_step: self.fd_step, ..Tolerances::default() }
    }

    /// Derived thresholds, all scaled from `tol_exact` and `tol_fd`.
    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            exact: self.tol_exact,
            bracket: 1e-2 * self.tol_exact,
            lagrangian: 1e2 * self.tol_exact,
            fd: self.tol_fd,
            fd_tight: 0.1 * self.tol_fd,
            structure_eq: 10.0 * self.tol_fd,
        }
    }
}

/// Per-record tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    /// Closed-form identities.
    pub exact: f64,
    /// Structure constants of the Bianchi subalgebras.
    pub bracket: f64,
    /// Lagrangian condition on analytic and differenced frames.
    pub lagrangian: f64,
    /// Constants extracted through finite differences.
    pub fd: f64,
    /// Isometry metrics, minimality, total geodesy, angles and grid spreads.
    pub fd_tight: f64,
    /// Gauss and Codazzi equations, which take one more derivative.
    pub structure_eq: f64,
}

/// One verified invariant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub suite: String,
    pub check: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub expected: Option<f64>,
    pub observed: Option<f64>,
    pub pass: bool,
    /// Why the check could not be evaluated, when it could not.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRecord {
    pub fn residual(suite: &str, check: impl Into<String>, samples: usize, max_residual: f64, tolerance: f64) -> Self {
        CheckRecord {
            suite: suite.into(),
            check: check.into(),
            samples,
            max_residual,
            tolerance,
            expected: None,
            observed: None,
            pass: max_residual <= tolerance,
            detail: None,
        }
    }

    pub fn value(
        suite: &str,
        check: impl Into<String>,
        samples: usize,
        max_residual: f64,
        tolerance: f64,
        expected: f64,
        observed: f64,
    ) -> Self {
        CheckRecord {
            expected: Some(expected),
            observed: Some(observed),
            pass: max_residual <= tolerance && (observed - expected).abs() <= tolerance,
            ..Self::residual(suite, check, samples, max_residual, tolerance)
        }
    }

    pub fn failed(suite: &str, check: impl Into<String>, samples: usize, tolerance: f64, detail: impl Into<String>) -> Self {
        CheckRecord {
            pass: false,
            detail: Some(detail.into()),
            ..Self::residual(suite, check, samples, f64::INFINITY, tolerance)
        }
    }

    /// Whether `pass` agrees with the residual, tolerance and expected value.
    pub fn is_consistent(&self) -> bool {
        let value_ok = match (self.expected, self.observed) {
            (Some(e), Some(o)) => (o - e).abs() <= self.tolerance,
            (None, None) => true,
            _ => false,
        };
        self.pass == (self.max_residual <= self.tolerance && value_ok && self.detail.is_none())
    }
}

/// Maximum that keeps NaN.
fn worst<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

struct Suite<'a> {
    cfg: &'a RunConfig,
    name: &'static str,
    records: Vec<CheckRecord>,
}

impl<'a> Suite<'a> {
    fn new(cfg: &'a RunConfig, name: &'static str) -> Self {
        Suite { cfg, name, records: Vec::new() }
    }

    fn push(&mut self, r: CheckRecord) {
        self.records.push(r);
    }

    fn per_sample<T, F>(&self, check: &str, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut CheckRng) -> T + Sync + Send,
    {
        let (seed, suite) = (self.cfg.seed, self.name);
        par::map_with(self.cfg.parallel, n, |i| f(&mut sample_stream(seed, suite, check, i)))
    }

    /// Maximum of `f` over `samples` independent draws.
    fn sampled<F>(&mut self, check: &str, tolerance: f64, f: F)
    where
        F: Fn(&mut CheckRng) -> f64 + Sync + Send,
    {
        let n = self.cfg.samples;
        let r = worst(self.per_sample(check, n, f));
        let rec = CheckRecord::residual(self.name, check, n, r, tolerance);
        self.push(rec);
    }
}

fn pair(r: &mut CheckRng) -> (AlgebraVec, AlgebraVec) {
    (random_algebra_vec(r), random_algebra_vec(r))
}

/// Identities of `g`, `J`, `P`, `Q`, the connection, `G` and the curvature.
pub fn verify_structure(cfg: &RunConfig) -> Result<Vec<CheckRecord>, ReportError> {
    cfg.validate()?;
    let th = cfg.thresholds();
    let e = th.exact;
    let mut s = Suite::new(cfg, "structure");

    let (pos, neg) = StructureConstants::get().signature();
    let sig = (pos as f64 - 4.0).abs() + (neg as f64 - 2.0).abs();
    s.push(CheckRecord::residual(s.name, "signature (4,2)", 1, sig, e));

    s.sampled("J^2 = -Id", e, |r| {
        let x = random_algebra_vec(r);
        (apply_j(&apply_j(&x)) + x).max_abs()
    });
    s.sampled("g(JX,JY) = g(X,Y)", e, |r| {
        let (x, y) = pair(r);
        (metric_g(&apply_j(&x), &apply_j(&y)) - metric_g(&x, &y)).abs()
    });
    s.sampled("<X,Y> = 2g(X,Y) + g(X,PY)", e, |r| {
        let (x, y) = pair(r);
        (metric_product(&x, &y) - 2.0 * metric_g(&x, &y) - metric_g(&x, &apply_p_rotated(0.0, &y))).abs()
    });
    s.sampled("QX = -(2PJX - JX)/sqrt(3)", e, |r| {
        let x = random_algebra_vec(r);
        let jx = apply_j(&x);
        (apply_q(&x) + (apply_p_rotated(0.0, &jx) * 2.0 - jx) * (1.0 / 3f64.sqrt())).max_abs()
    });

    for (label, eta) in [("P", 0.0), ("P(2pi/3)", 2.0 * PI / 3.0), ("P(4pi/3)", 4.0 * PI / 3.0)] {
        let p = move |v: &AlgebraVec| apply_p_rotated(eta, v);
        s.sampled(&format!("{label}^2 = Id"), e, move |r| {
            let x = random_algebra_vec(r);
            (p(&p(&x)) - x).max_abs()
        });
        s.sampled(&format!("g({label}X,{label}Y) = g(X,Y)"), e, move |r| {
            let (x, y) = pair(r);
            (metric_g(&p(&x), &p(&y)) - metric_g(&x, &y)).abs()
        });
        s.sampled(&format!("{label}J = -J{label}"), e, move |r| {
            let x = random_algebra_vec(r);
            (p(&apply_j(&x)) + apply_j(&p(&x))).max_abs()
        });
        s.sampled(&format!("g({label}X,Y) = g(X,{label}Y)"), e, move |r| {
            let (x, y) = pair(r);
            (metric_g(&p(&x), &y) - metric_g(&x, &p(&y))).abs()
        });
        s.sampled(&format!("{label}G(X,Y) + G({label}X,{label}Y) = 0"), e, move |r| {
            let (x, y) = pair(r);
            (p(&tensor_g(&x, &y)) + tensor_g(&p(&x), &p(&y))).max_abs()
        });
        s.sampled(&format!("nabla {label}"), e, move |r| {
            let (x, y) = pair(r);
            nabla_p_residual(eta, &x, &y)
        });
    }

    s.sampled("torsion free", e, |r| {
        let (x, y) = pair(r);
        (koszul_connection(&x, &y) - koszul_connection(&y, &x) - bracket(&x, &y)).max_abs()
    });
    s.sampled("metric compatible", e, |r| {
        let (x, y) = pair(r);
        let z = random_algebra_vec(r);
        (metric_g(&koszul_connection(&x, &y), &z) + metric_g(&y, &koszul_connection(&x, &z))).abs()
    });
    s.sampled("G(X,X) = 0", e, |r| {
        let x = random_algebra_vec(r);
        tensor_g(&x, &x).max_abs()
    });
    s.sampled("G(X,JY) + JG(X,Y) = 0", e, |r| {
        let (x, y) = pair(r);
        (tensor_g(&x, &apply_j(&y)) + apply_j(&tensor_g(&x, &y))).max_abs()
    });
    s.sampled("g(G(X,Y),JZ) + g(G(X,Z),JY) = 0", e, |r| {
        let (x, y) = pair(r);
        let z = random_algebra_vec(r);
        (metric_g(&tensor_g(&x, &y), &apply_j(&z)) + metric_g(&tensor_g(&x, &z), &apply_j(&y))).abs()
    });
    s.sampled("constant type -2/3", e, |r| {
        let (x, y) = pair(r);
        let (z, w) = pair(r);
        (metric_g(&tensor_g(&x, &y), &tensor_g(&z, &w)) - constant_type_rhs(-2.0 / 3.0, &x, &y, &z, &w)).abs()
    });
    s.sampled("curvature closed form", e, |r| {
        let (x, y) = pair(r);
        let z = random_algebra_vec(r);
        (curvature(&x, &y, &z) - curvature_closed_form(&x, &y, &z)).max_abs()
    });
    s.sampled("first Bianchi identity", e, |r| {
        let (x, y) = pair(r);
        let z = random_algebra_vec(r);
        (curvature(&x, &y, &z) + curvature(&y, &z, &x) + curvature(&z, &x, &y)).max_abs()
    });

    let d1 = AlgebraVec::new(Sl2Vec::I, Sl2Vec::I);
    let d2 = AlgebraVec::new(Sl2Vec::J, Sl2Vec::J);
    match sectional_curvature(&d1, &d2, &cfg.tolerances()) {
        Ok(k) => s.push(CheckRecord::value(s.name, "diagonal plane curvature", 1, (k + 1.5).abs(), e, -1.5, k)),
        Err(err) => s.push(CheckRecord::failed(s.name, "diagonal plane curvature", 1, e, err.to_string())),
    }

    let h = cfg.fd_step;
    let pairs: Vec<(f64, f64)> = s.per_sample("Euclidean embedding", cfg.samples, |r| {
        let p = random_point(r);
        let (x, y) = pair(r);
        (embedding_residual_at(&p, &x, &y, h), embedding_residual_at(&p, &x, &y, 0.5 * h))
    });
    let full = worst(pairs.iter().map(|p| p.0));
    let half = worst(pairs.iter().map(|p| p.1));
    s.push(CheckRecord::residual(s.name, "Euclidean embedding", cfg.samples, full, th.fd));
    let ratio = full / half;
    s.push(CheckRecord::value(s.name, "embedding step-halving ratio", cfg.samples, (ratio - 4.0).abs(), 0.5, 4.0, ratio));

    Ok(s.records)
}

fn isometry_records(s: &mut Suite, label: &str, reports: &[Result<IsometryReport, String>], sign: f64, tau: f64) {
    let tight = s.cfg.thresholds().fd_tight;
    let samples: usize = reports.iter().map(|r| r.as_ref().map_or(0, |r| r.samples)).sum();
    if let Some(Err(e)) = reports.iter().find(|r| r.is_err()) {
        s.push(CheckRecord::failed(s.name, format!("{label} metric"), samples, tight, e.clone()));
        return;
    }
    let ok: Vec<&IsometryReport> = reports.iter().filter_map(|r| r.as_ref().ok()).collect();
    let metric = worst(ok.iter().map(|r| r.metric_residual));
    s.push(CheckRecord::residual(s.name, format!("{label} metric"), samples, metric, tight));
    let j_res = worst(ok.iter().map(|r| r.j_residual));
    let j_obs = ok.iter().map(|r| f64::from(r.j_sign)).find(|&v| v != sign).unwrap_or(sign);
    s.push(CheckRecord::value(s.name, format!("{label} J sign"), samples, j_res, tight, sign, j_obs));
    let p_res = worst(ok.iter().map(|r| r.p_residual));
    let p_obs = ok.iter().map(|r| r.p_tau).max_by(|a, b| (a - tau).abs().total_cmp(&(b - tau).abs())).unwrap_or(tau);
    s.push(CheckRecord::value(s.name, format!("{label} P angle"), samples, p_res, tight, tau, p_obs));
}

/// Random elements drawn per check; each is probed on `samples` points.
const RANDOM_ELEMENTS: usize = 8;

/// Metric, `J` and `P` behaviour of the isometry generators and group laws.
pub fn verify_isometries(cfg: &RunConfig) -> Result<Vec<CheckRecord>, ReportError> {
    cfg.validate()?;
    let tol = cfg.tolerances();
    let th = cfg.thresholds();
    let mut s = Suite::new(cfg, "isometries");
    let n = cfg.samples;

    for psi in Psi::all() {
        let name = psi.to_string();
        let r = verify_isometry(&Isometry::psi(psi), n, &mut stream(cfg.seed, s.name, &name), &tol);
        let sign = if psi.kappa == 0 { 1.0 } else { -1.0 };
        isometry_records(&mut s, &name, &[Ok(r)], sign, psi.tau.angle());
    }

    let phis = s.per_sample("random phi", RANDOM_ELEMENTS, |r| {
        let f = Isometry::phi(random_sl2(r), random_sl2(r), random_sl2(r)).map_err(|e| e.to_string())?;
        Ok(verify_isometry(&f, n, r, &tol))
    });
    isometry_records(&mut s, "random phi", &phis, 1.0, 0.0);

    let flips = s.per_sample("det -1", RANDOM_ELEMENTS, |r| {
        let f = if r.gen_bool(0.25) { Isometry::flip() } else { Isometry { k: true, ..Isometry::random(r) } };
        let rep = verify_isometry(&f, n, r, &tol);
        Ok::<_, String>((rep, rep.matches_declared))
    });
    let metric = worst(flips.iter().map(|r| r.as_ref().map_or(f64::INFINITY, |r| r.0.metric_residual)));
    let undeclared = flips.iter().filter(|r| !matches!(r, Ok((_, true)))).count() as f64;
    s.push(CheckRecord::residual(s.name, "det -1 metric", n * RANDOM_ELEMENTS, metric, th.fd_tight));
    s.push(CheckRecord::residual(s.name, "det -1 declared signs", RANDOM_ELEMENTS, undeclared, 0.0));

    let all = Psi::all();
    s.sampled("S3 closure", th.exact, |r| {
        let p = random_point(r);
        let mut w = 0.0f64;
        for a in all {
            for b in all {
                let direct = a.compose(b).act(&p);
                let seq = a.act(&b.act(&p));
                w = w.max(direct.max_abs_diff(&seq) / (1.0 + seq.a.max_abs().max(seq.b.max_abs())));
            }
        }
        w
    });
    s.sampled("composition", tol.composition, |r| {
        let (f, g) = (Isometry::random(r), Isometry::random(r));
        let p = random_point(r);
        match f.compose(&g, &tol) {
            Ok(h) => {
                let seq = f.act(&g.act(&p));
                h.act(&p).max_abs_diff(&seq) / (1.0 + seq.a.max_abs().max(seq.b.max_abs()))
            }
            Err(_) => f64::INFINITY,
        }
    });
    s.sampled("inverse", tol.composition, |r| {
        let f = Isometry::random(r);
        let p = random_point(r);
        f.inverse().act(&f.act(&p)).max_abs_diff(&p) / (1.0 + p.a.max_abs().max(p.b.max_abs()))
    });

    Ok(s.records)
}

fn type_number(t: LagType) -> f64 {
    match t {
        LagType::I => 1.0,
        LagType::II => 2.0,
        LagType::III => 3.0,
        LagType::IV => 4.0,
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Deviations `observed - expected` modulo `pi`, under the best matching of the two sets.
pub fn match_angles(observed: &[f64], expected: &[f64]) -> Option<Vec<f64>> {
    if observed.len() != expected.len() {
        return None;
    }
    permutations(expected.len())
        .into_iter()
        .map(|p| p.iter().zip(expected).map(|(&i, e)| dist_mod_pi(observed[i] - e)).collect::<Vec<_>>())
        .min_by(|a, b| worst(a.iter().map(|d| d.abs())).total_cmp(&worst(b.iter().map(|d| d.abs()))))
}

struct PointData {
    lagrangian: f64,
    mean_curvature: f64,
    lag_type: LagType,
    angles: Vec<f64>,
    h: [[[f64; 3]; 3]; 3],
    named: Vec<Option<f64>>,
    gauss: f64,
    codazzi: f64,
    relations: f64,
    curvature: Option<(f64, f64)>,
}

/// A coordinate plane whose Gram determinant is bounded away from zero.
fn random_plane(r: &mut CheckRng, gram: &nalgebra::Matrix3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let scale = gram.abs().max().powi(2);
    let g = |a: &Vector3<f64>, b: &Vector3<f64>| (a.transpose() * gram * b)[0];
    loop {
        let u = Vector3::from_fn(|_, _| r.gen_range(-1.0..1.0)).normalize();
        let v = Vector3::from_fn(|_, _| r.gen_range(-1.0..1.0)).normalize();
        let den = g(&u, &u) * g(&v, &v) - g(&u, &v).powi(2);
        if den.abs() >= 1e-2 * scale {
            return (u, v);
        }
    }
}

fn analyze_point(id: &ImmersionId, x: [f64; 3], r: &mut CheckRng, tol: &Tolerances) -> Result<PointData, LagError> {
    let profile = id.expected_profile();
    let la = LocalAnalysis::new(id, x, tol)?;
    let table = la.sff(tol)?;
    let relations = constraints_of(id, &la, &table, tol)?.max_residual();
    let curvature = match profile.sectional_curvature {
        Some(_) => {
            let (u, v) = random_plane(r, &la.center.frame.gram);
            Some(la.sectional_curvature_of(&u, &v, tol)?)
        }
        None => None,
    };
    Ok(PointData {
        lagrangian: la.center.lagrangian_residual,
        mean_curvature: table.mean_curvature_norm,
        lag_type: la.normal.class.lag_type,
        angles: la.normal.class.angles.clone(),
        h: table.h,
        named: profile.h_constants.iter().map(|c| table.component(&c.name)).collect(),
        gauss: la.gauss_residual(),
        codazzi: la.codazzi_residual()?,
        relations,
        curvature,
    })
}

/// Parameter points per catalog row, capped by `samples`.
pub const CATALOG_POINTS: usize = 50;
/// Grid resolution per axis for the constancy checks.
pub const SPREAD_GRID: usize = 5;

fn value_over(s: &mut Suite, check: String, tol: f64, expected: f64, values: &[f64]) {
    let dev = |v: &f64| (v - expected).abs();
    let res = worst(values.iter().map(dev));
    let obs = values.iter().copied().max_by(|a, b| dev(a).total_cmp(&dev(b))).unwrap_or(f64::NAN);
    s.push(CheckRecord::value(s.name, check, values.len(), res, tol, expected, obs));
}

fn catalog_row(s: &mut Suite, id: ImmersionId) {
    let cfg = s.cfg;
    let th = cfg.thresholds();
    let tol = cfg.tolerances();
    let profile = id.expected_profile();
    let domain = id.domain();
    let n = cfg.samples.min(CATALOG_POINTS);
    let label = id.to_string();

    let results = s.per_sample(&format!("{label} points"), n, |r| {
        let x: [f64; 3] = std::array::from_fn(|d| r.gen_range(domain[d][0]..=domain[d][1]));
        analyze_point(&id, x, r, &tol)
    });
    let failures = results.iter().filter(|r| r.is_err()).count();
    let mut rec = CheckRecord::residual(s.name, format!("{label} pipeline"), n, failures as f64, 0.0);
    if let Some(Err(e)) = results.iter().find(|r| r.is_err()) {
        rec.detail = Some(e.to_string());
        rec.pass = false;
    }
    s.push(rec);
    let pts: Vec<&PointData> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let m = pts.len();

    s.push(CheckRecord::residual(
        s.name,
        format!("{label} lagrangian"),
        m,
        worst(pts.iter().map(|p| p.lagrangian)),
        th.lagrangian,
    ));
    s.push(CheckRecord::residual(
        s.name,
        format!("{label} minimal"),
        m,
        worst(pts.iter().map(|p| p.mean_curvature)),
        th.fd_tight,
    ));

    let want = type_number(profile.lag_type);
    let types: Vec<f64> = pts.iter().map(|p| type_number(p.lag_type)).collect();
    value_over(s, format!("{label} type"), 0.0, want, &types);
    let type_iv = types.iter().filter(|&&t| t == 4.0).count() as f64;
    s.push(CheckRecord::residual(s.name, format!("{label} never type IV"), m, type_iv, 0.0));

    if let Some(expected) = &profile.angles {
        let matched: Vec<Option<Vec<f64>>> = pts.iter().map(|p| match_angles(&p.angles, expected)).collect();
        for (k, e) in expected.iter().enumerate() {
            let obs: Vec<f64> = matched.iter().map(|d| d.as_ref().map_or(f64::NAN, |d| e + d[k])).collect();
            value_over(s, format!("{label} theta{}", k + 1), th.fd_tight, *e, &obs);
        }
    }
    if profile.tot_geodesic {
        let h = worst(pts.iter().flat_map(|p| p.h.iter().flatten().flatten().map(|v| v.abs())));
        s.push(CheckRecord::residual(s.name, format!("{label} totally geodesic"), m, h, th.fd_tight));
    }
    for (c, constant) in profile.h_constants.iter().enumerate() {
        let obs: Vec<f64> = pts.iter().map(|p| p.named[c].unwrap_or(f64::NAN)).collect();
        value_over(s, format!("{label} {}", constant.name), th.fd, constant.value, &obs);
    }
    if let Some(k) = profile.sectional_curvature {
        let obs: Vec<f64> =
            pts.iter().filter_map(|p| p.curvature).map(|(a, b)| if (a - k).abs() > (b - k).abs() { a } else { b }).collect();
        value_over(s, format!("{label} sectional curvature"), th.fd, k, &obs);
    }
    s.push(CheckRecord::residual(
        s.name,
        format!("{label} Gauss equation"),
        m,
        worst(pts.iter().map(|p| p.gauss)),
        th.structure_eq,
    ));
    s.push(CheckRecord::residual(
        s.name,
        format!("{label} Codazzi equation"),
        m,
        worst(pts.iter().map(|p| p.codazzi)),
        th.structure_eq,
    ));
    s.push(CheckRecord::residual(s.name, format!("{label} type relations"), m, worst(pts.iter().map(|p| p.relations)), th.fd));

    if let Ok(sub) = id.subalgebra() {
        s.push(CheckRecord::residual(s.name, format!("{label} brackets"), 1, sub.bracket_residual(), th.bracket));
    }

    let g = grid(domain, SPREAD_GRID);
    match grid_spread(&id, &g, &tol, cfg.parallel) {
        Ok(sp) => {
            s.push(CheckRecord::residual(s.name, format!("{label} angle spread"), sp.points, sp.angles, th.fd_tight));
            s.push(CheckRecord::residual(s.name, format!("{label} h spread"), sp.points, sp.h, th.fd_tight));
            if !profile.tot_geodesic {
                s.push(CheckRecord::residual(s.name, format!("{label} omega spread"), sp.points, sp.omega, th.fd_tight));
            }
        }
        Err(e) => s.push(CheckRecord::failed(s.name, format!("{label} spread"), g.len(), th.fd_tight, e.to_string())),
    }

    let x0: [f64; 3] = std::array::from_fn(|d| 0.5 * (domain[d][0] + domain[d][1]) + 0.1 * (d as f64 + 1.0));
    let mut isos: Vec<Isometry> = Psi::all().into_iter().map(Isometry::psi).collect();
    isos.push(Isometry::flip());
    let reports = par::map_with(cfg.parallel, isos.len(), |k| congruence_check(&id, x0, &isos[k], &tol));
    match reports.iter().find_map(|r| r.as_ref().err()) {
        Some(e) => s.push(CheckRecord::failed(s.name, format!("{label} congruence"), isos.len(), th.fd_tight, e.to_string())),
        None => {
            let ok: Vec<_> = reports.iter().filter_map(|r| r.as_ref().ok()).collect();
            let ab = worst(ok.iter().map(|r| r.ab_residual));
            s.push(CheckRecord::residual(s.name, format!("{label} congruence (A,B)"), ok.len(), ab, th.fd_tight));
            let changed = ok.iter().filter(|r| r.before != r.after).count() as f64;
            s.push(CheckRecord::residual(s.name, format!("{label} congruence type"), ok.len(), changed, 0.0));
            if profile.lag_type == LagType::I {
                let ang = worst(ok.iter().map(|r| r.angle_residual.unwrap_or(f64::NAN)));
                s.push(CheckRecord::residual(s.name, format!("{label} congruence angles"), ok.len(), ang, th.fd_tight));
            }
        }
    }
}

/// Invariants of each selected catalog row. `filter` is a row key such as `"psl"`.
pub fn verify_catalog(cfg: &RunConfig, filter: Option<&str>) -> Result<Vec<CheckRecord>, ReportError> {
    cfg.validate()?;
    let ids = match filter {
        Some(key) => ImmersionId::parse(key, &cfg.lambda_grid)?,
        None => ImmersionId::all(&cfg.lambda_grid),
    };
    let mut s = Suite::new(cfg, "catalog");
    for id in ids {
        catalog_row(&mut s, id);
    }
    Ok(s.records)
}

/// All three suites in order.
pub fn verify_all(cfg: &RunConfig) -> Result<Vec<CheckRecord>, ReportError> {
    let mut out = verify_structure(cfg)?;
    out.extend(verify_isometries(cfg)?);
    out.extend(verify_catalog(cfg, None)?);
    Ok(out)
}

pub fn all_pass(records: &[CheckRecord]) -> bool {
    records.iter().all(|r| r.pass)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

impl Summary {
    pub fn of(records: &[CheckRecord]) -> Self {
        let passed = records.iter().filter(|r| r.pass).count();
        Summary { total: records.len(), passed, failed: records.len() - passed }
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    config: &'a RunConfig,
    records: &'a [CheckRecord],
    summary: Summary,
}

pub const CSV_HEADER: [&str; 8] = ["suite", "check", "samples", "max_residual", "tolerance", "expected", "observed", "pass"];

/// Seventeen significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// The report as bytes in the configured format.
pub fn render(records: &[CheckRecord], cfg: &RunConfig) -> Result<Vec<u8>, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    match cfg.format {
        Format::Json => {
            let report = JsonReport { config: cfg, records, summary: Summary::of(records) };
            let mut out = serde_json::to_vec_pretty(&report).map_err(|e| ReportError::Serialize(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let ser = |e: csv::Error| ReportError::Serialize(e.to_string());
            w.write_record(CSV_HEADER).map_err(ser)?;
            for r in records {
                let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
                w.write_record([
                    r.suite.clone(),
                    r.check.clone(),
                    r.samples.to_string(),
                    num(r.max_residual),
                    num(r.tolerance),
                    opt(r.expected),
                    opt(r.observed),
                    r.pass.to_string(),
                ])
                .map_err(ser)?;
            }
            w.into_inner().map_err(|e| ReportError::Serialize(e.to_string()))
        }
    }
}

/// Writes the report to `cfg.out_path`, or to standard output when unset.
pub fn write_report(records: &[CheckRecord], cfg: &RunConfig) -> Result<(), ReportError> {
    let bytes = render(records, cfg)?;
    match &cfg.out_path {
        Some(p) => std::fs::write(p, bytes).map_err(|source| ReportError::Io { path: p.display().to_string(), source }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes).and_then(|_| out.flush()).map_err(|source| ReportError::Io { path: "<stdout>".into(), source })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_matching_wraps_and_permutes() {
        let d = match_angles(&[2.0 * PI / 3.0, PI - 1e-9, PI / 3.0], &[0.0, PI / 3.0, 2.0 * PI / 3.0]).unwrap();
        assert!(worst(d.iter().map(|x| x.abs())) < 1e-8);
        assert!(match_angles(&[0.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn records_agree_with_their_tolerance() {
        let r = CheckRecord::value("s", "c", 1, 0.0, 1e-6, 1.0, 1.0 + 2e-6);
        assert!(!r.pass && r.is_consistent());
        let r = CheckRecord::residual("s", "c", 1, f64::NAN, 1.0);
        assert!(!r.pass && r.is_consistent());
    }

    #[test]
    fn csv_numbers_keep_seventeen_digits() {
        let x = 0.1f64 + 0.2;
        assert_eq!(num(x).parse::<f64>().unwrap(), x);
        assert_eq!(num(x), "3.0000000000000004e-1");
    }
}
