// SPDX-License-Identifier: Apache-2.0

//! Relations between angle functions, `h` and `omega` for each type, and the
//! behaviour of `(A, B)` under isometries.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::classify::{classify_matrices, lag_type_of, TypeClass};
use super::sff::{LocalAnalysis, SffTable};
use super::{coordinate_frame, dist_mod_pi, extract_ab, levi_civita, shifted, wrap_pi, LagError};
use crate::catalog::{Immersion, LagType};
use crate::isometry::{verify_isometry, Isometry};
use crate::tol::Tolerances;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedResidual {
    pub name: String,
    pub residual: f64,
}

fn nr(name: String, residual: f64) -> NamedResidual {
    NamedResidual { name, residual: residual.abs() }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub lag_type: LagType,
    pub checks: Vec<NamedResidual>,
}

impl ConstraintReport {
    pub fn max_residual(&self) -> f64 {
        self.checks.iter().fold(0.0f64, |a, c| a.max(c.residual))
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.residual)
    }
}

/// Classification from `(A, B)` alone, without orientation or gauge.
pub fn angles_at(imm: &dyn Immersion, x: [f64; 3], tol: &Tolerances) -> Result<TypeClass, LagError> {
    let f = coordinate_frame(imm, x, tol)?;
    let ab = extract_ab(&f)?;
    Ok(classify_matrices(&ab.a, &ab.b, &f.gram, tol)?.class)
}

/// `d[j][i] = E_i(theta_j)`, with `psi` appended as the last angle for type IV.
fn angle_derivatives(
    imm: &dyn Immersion,
    x: [f64; 3],
    rows: &Matrix3<f64>,
    center: &TypeClass,
    tol: &Tolerances,
) -> Result<Vec<[f64; 3]>, LagError> {
    let mut vals = center.angles.clone();
    if let Some(p) = center.psi {
        vals.push(p);
    }
    let n = vals.len();
    let h = tol.fd_step_angle;
    let mut partial = vec![[0.0; 3]; n];
    for m in 0..3 {
        let mut samples = Vec::with_capacity(4);
        for s in [-2.0, -1.0, 1.0, 2.0] {
            let c = angles_at(imm, shifted(x, m, s * h), tol)?;
            let mut v = c.angles.clone();
            if let Some(p) = c.psi {
                v.push(p);
            }
            if v.len() != n {
                return Err(LagError::UnresolvedType { gap: 0.0, detail: "angle count changes near the point".into() });
            }
            samples.push(v);
        }
        for j in 0..n {
            let is_psi = center.psi.is_some() && j == n - 1;
            let rel = |k: usize| {
                let d = samples[k][j] - vals[j];
                if is_psi {
                    d
                } else {
                    dist_mod_pi(d)
                }
            };
            partial[j][m] = (rel(0) - 8.0 * rel(1) + 8.0 * rel(2) - rel(3)) / (12.0 * h);
        }
    }
    Ok(partial.iter().map(|p| std::array::from_fn(|i| (0..3).map(|m| rows[(i, m)] * p[m]).sum())).collect())
}

/// Residuals of the relations between angle derivatives, `h` and `omega` for the
/// detected type. `dtheta[j][i] = E_i(theta_j)`; for type IV the last row is `E_i(psi)`.
pub fn type_relations(class: &TypeClass, t: &SffTable, dtheta: &[[f64; 3]]) -> Vec<NamedResidual> {
    let h = &t.h;
    let w = &t.omega;
    let r6 = 6f64.sqrt();
    let r3 = 3f64.sqrt();
    let r2 = 2f64.sqrt();
    let mut out = Vec::new();
    match class.lag_type {
        LagType::I => {
            let d = [-1.0, 1.0, 1.0];
            let th = &class.angles;
            for i in 0..3 {
                for j in 0..3 {
                    out.push(nr(format!("E{}(theta{})", i + 1, j + 1), dtheta[j][i] + d[i] * d[j] * h[j][j][i]));
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        if j == k {
                            continue;
                        }
                        let dt = th[j] - th[k];
                        let lhs = h[i][j][k] * dt.cos();
                        let rhs = (d[k] * levi_civita(i, j, k) / r6 - w[i][j][k]) * dt.sin();
                        out.push(nr(format!("sffc {}{}^{}", i + 1, j + 1, k + 1), lhs - rhs));
                    }
                }
            }
        }
        LagType::II => {
            for k in 0..3 {
                out.push(nr(format!("h11^{}", k + 1), h[0][0][k]));
            }
            let pairs = [
                ("E1(theta1)", dtheta[0][0], -h[0][0][0]),
                ("E2(theta1)", dtheta[0][1], -h[1][1][1]),
                ("E3(theta1)", dtheta[0][2], -h[0][1][2]),
                ("E1(theta2)", dtheta[1][0], -h[2][2][1]),
                ("E2(theta2)", dtheta[1][1], -h[2][2][0]),
                ("E3(theta2)", dtheta[1][2], -h[2][2][2]),
                ("h33^1 = -2h22^2", h[2][2][0], -2.0 * h[1][1][1]),
                ("h33^2 = 0", h[2][2][1], 0.0),
                ("h33^3 = -2h12^3", h[2][2][2], -2.0 * h[0][1][2]),
            ];
            for (n, a, b) in pairs {
                out.push(nr(n.to_string(), a - b));
            }
        }
        LagType::III => {
            let s = f64::from(class.b_sign.unwrap_or(1));
            let (h1, h2, h3) = (h[1][1][0], h[1][1][1], h[1][1][2]);
            for k in 0..3 {
                out.push(nr(format!("h11^{}", k + 1), h[0][0][k]));
            }
            let pairs = [
                ("h12^3", h[0][1][2], 0.0),
                ("w11^1", w[0][0][0], 0.0),
                ("w11^3", w[0][0][2], 0.0),
                ("w33^2", w[2][2][1], 0.0),
                ("w12^3", w[0][1][2], (r2 - s * 3.0 * h2) / (2.0 * r3)),
                ("w31^1", w[2][0][0], (r2 - s * 12.0 * h2) / (2.0 * r3)),
                ("w21^3", w[1][0][2], -(r2 + s * 6.0 * h2) / (2.0 * r3)),
                ("w22^2", w[1][1][1], s * (h2 - 3.0 * h3) / r3),
                ("w33^1", w[2][2][0], -s * (4.0 * h2 - 3.0 * h3) / (2.0 * r3)),
                ("w22^3", w[1][1][2], -s * (9.0 * h1 - 8.0 * h2 + 6.0 * h3) / (6.0 * r3)),
            ];
            for (n, a, b) in pairs {
                out.push(nr(n.to_string(), a - b));
            }
        }
        LagType::IV => {
            let s = if class.branch.unwrap_or(0) == 0 { 1.0 } else { -1.0 };
            let th1 = class.angles[0];
            let psi = class.psi.unwrap_or(0.0);
            let (sh, coth) = (psi.sinh(), 1.0 / psi.tanh());
            let (s6, den) = ((6.0 * th1).sin(), (6.0 * th1).cos() - psi.cosh());
            let hh = |i: usize, j: usize, k: usize| h[i - 1][j - 1][k - 1];
            let ww = |i: usize, j: usize, k: usize| w[i - 1][j - 1][k - 1];
            for i in 1..=3 {
                out.push(nr(format!("h33^{i} = h22^{i} - h11^{i}"), hh(3, 3, i) - hh(2, 2, i) + hh(1, 1, i)));
            }
            let pairs = [
                ("E1(theta1)", dtheta[0][0], (hh(2, 2, 1) - hh(1, 1, 1)) / 2.0),
                ("E2(theta1)", dtheta[0][1], (hh(1, 1, 2) - hh(2, 2, 2)) / 2.0),
                ("E3(theta1)", dtheta[0][2], (hh(2, 2, 3) - hh(1, 1, 3)) / 2.0),
                ("E1(psi)", dtheta[2][0], s * 2.0 * hh(1, 1, 2)),
                ("E2(psi)", dtheta[2][1], -s * 2.0 * hh(2, 2, 1)),
                ("E3(psi)", dtheta[2][2], -s * 2.0 * hh(1, 2, 3)),
                ("w11^2", ww(1, 1, 2), s / 2.0 * (hh(1, 1, 1) + hh(2, 2, 1)) * coth),
                ("w22^1", ww(2, 2, 1), -s / 2.0 * (hh(1, 1, 2) + hh(2, 2, 2)) * coth),
                ("w32^1", ww(3, 2, 1), s / 2.0 * (hh(1, 1, 3) + hh(2, 2, 3)) * coth - 1.0 / r6),
                ("w11^3", ww(1, 1, 3), (hh(1, 1, 3) * s6 + s * hh(1, 2, 3) * sh) / den),
                ("w12^3", ww(1, 2, 3), (hh(1, 2, 3) * s6 - s * hh(1, 1, 3) * sh) / den + 1.0 / r6),
                ("w22^3", ww(2, 2, 3), (hh(2, 2, 3) * s6 - s * hh(1, 2, 3) * sh) / den),
                ("w21^3", ww(2, 1, 3), (hh(1, 2, 3) * s6 + s * hh(2, 2, 3) * sh) / den - 1.0 / r6),
                ("w33^1", ww(3, 3, 1), ((hh(1, 1, 1) - hh(2, 2, 1)) * s6 + s * (hh(2, 2, 2) - hh(1, 1, 1)) * sh) / den),
                ("w33^2", ww(3, 3, 2), ((hh(1, 1, 2) - hh(2, 2, 2)) * s6 - s * (hh(2, 2, 1) - hh(1, 1, 1)) * sh) / den),
            ];
            for (n, a, b) in pairs {
                out.push(nr(n.to_string(), a - b));
            }
        }
    }
    out
}

/// Every relation of the detected type at `x`, plus the type-independent identities.
pub fn verify_type_constraints(imm: &dyn Immersion, x: [f64; 3], tol: &Tolerances) -> Result<ConstraintReport, LagError> {
    let la = LocalAnalysis::new(imm, x, tol)?;
    let table = la.sff(tol)?;
    constraints_of(imm, &la, &table, tol)
}

/// As [`verify_type_constraints`], reusing an analysis already built at `la.center.params`.
pub fn constraints_of(
    imm: &dyn Immersion,
    la: &LocalAnalysis,
    table: &SffTable,
    tol: &Tolerances,
) -> Result<ConstraintReport, LagError> {
    let x = la.center.params;
    let class = &la.normal.class;
    let dtheta = angle_derivatives(imm, x, &la.normal.rows, class, tol)?;
    let mut checks = type_relations(class, table, &dtheta);
    checks.push(nr("angle relation".into(), class.invariant_residual()));
    checks.push(nr("h symmetry".into(), table.symmetry_residual()));
    checks.push(nr("JG table".into(), la.normal.jg_table_residual()));
    checks.push(nr("normal form".into(), la.normal.normal_form_residual));
    checks.push(nr("lagrangian identities".into(), la.lagrangian_identity_residual(table)));
    Ok(ConstraintReport { lag_type: class.lag_type, checks })
}

/// Largest spread of the angle functions, `h` and `omega` over a grid.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct GridSpread {
    pub points: usize,
    pub angles: f64,
    pub h: f64,
    pub omega: f64,
}

/// Points of an `n^3` grid filling `domain`.
pub fn grid(domain: [[f64; 2]; 3], n: usize) -> Vec<[f64; 3]> {
    let coord = |d: usize, i: usize| {
        let [lo, hi] = domain[d];
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out.push([coord(0, i), coord(1, j), coord(2, k)]);
            }
        }
    }
    out
}

/// Runs the full pipeline on every grid point and measures how much the invariants move.
pub fn grid_spread(imm: &dyn Immersion, points: &[[f64; 3]], tol: &Tolerances, parallel: bool) -> Result<GridSpread, LagError> {
    let results = crate::par::map_with(parallel, points.len(), |n| -> Result<(TypeClass, SffTable), LagError> {
        let la = LocalAnalysis::new(imm, points[n], tol)?;
        let t = la.sff(tol)?;
        Ok((la.normal.class.clone(), t))
    });
    let results: Vec<(TypeClass, SffTable)> = results.into_iter().collect::<Result<_, _>>()?;
    let (c0, t0) = &results[0];
    let mut s = GridSpread { points: results.len(), ..Default::default() };
    for (c, t) in &results {
        if c.lag_type != c0.lag_type || c.angles.len() != c0.angles.len() {
            return Err(LagError::UnresolvedType { gap: 0.0, detail: "type changes across the grid".into() });
        }
        for (a, b) in c.angles.iter().zip(&c0.angles) {
            s.angles = s.angles.max(dist_mod_pi(a - b).abs());
        }
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    s.h = s.h.max((t.h[i][j][k] - t0.h[i][j][k]).abs());
                    s.omega = s.omega.max((t.omega[i][j][k] - t0.omega[i][j][k]).abs());
                }
            }
        }
    }
    Ok(s)
}

/// Comparison of `(A, B)` on `M` and on `F(M)` against the transformation law.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CongruenceReport {
    pub kappa: u8,
    /// Angle in `F_* P F_*^-1 = cos(tau) P + sin(tau) JP`.
    pub tau: f64,
    pub ab_residual: f64,
    pub before: LagType,
    pub after: LagType,
    /// Type I only: angles of `F(M)` against `(-1)^kappa theta - tau/2`, compared as sets.
    pub angle_residual: Option<f64>,
}

/// Applies `f` to `imm` and checks the transformation law for `(A, B)`.
pub fn congruence_check(imm: &dyn Immersion, x: [f64; 3], f: &Isometry, tol: &Tolerances) -> Result<CongruenceReport, LagError> {
    let image = crate::catalog::IsometricImage { iso: *f, inner: imm };
    let f0 = coordinate_frame(imm, x, tol)?;
    let f1 = coordinate_frame(&image, x, tol)?;
    let (ab0, ab1) = (extract_ab(&f0)?, extract_ab(&f1)?);
    let mut rng = crate::rng::stream(0, "congruence", "detect");
    let rep = verify_isometry(f, 4, &mut rng, tol);
    let eps = f64::from(rep.j_sign);
    // the detected angle satisfies P dF = dF (cos t P + sin t JP)
    let tau = wrap_2pi(-eps * rep.p_tau);
    let (c, s) = (tau.cos(), tau.sin());
    let a_pred = ab0.a * c + ab0.b * (eps * s);
    let b_pred = ab0.a * (-s) + ab0.b * (eps * c);
    let ab_residual = (ab1.a - a_pred).abs().max().max((ab1.b - b_pred).abs().max());
    let before = lag_type_of(&ab0.a, &ab0.b, tol)?;
    let after = lag_type_of(&ab1.a, &ab1.b, tol)?;
    let angle_residual = if before == LagType::I && after == LagType::I {
        let t0 = classify_matrices(&ab0.a, &ab0.b, &f0.gram, tol)?.class;
        let t1 = classify_matrices(&ab1.a, &ab1.b, &f1.gram, tol)?.class;
        let mut pred: Vec<f64> = t0.angles.iter().map(|&t| wrap_pi(eps * t - tau / 2.0)).collect();
        let mut got = t1.angles;
        pred.sort_by(f64::total_cmp);
        got.sort_by(f64::total_cmp);
        // compare as multisets on the circle R/pi
        let mut best = f64::INFINITY;
        for shift in 0..pred.len() {
            let mut worst = 0.0f64;
            for i in 0..pred.len() {
                worst = worst.max(dist_mod_pi(pred[(i + shift) % pred.len()] - got[i]).abs());
            }
            best = best.min(worst);
        }
        Some(best)
    } else {
        None
    };
    Ok(CongruenceReport { kappa: if eps > 0.0 { 0 } else { 1 }, tau, ab_residual, before, after, angle_residual })
}

fn wrap_2pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > 2.0 * PI - 1e-9 {
        0.0
    } else {
        r
    }
}
