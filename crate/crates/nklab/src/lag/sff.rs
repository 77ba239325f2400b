// SPDX-License-Identifier: Apache-2.0

//! Second fundamental form, connection forms and the Gauss and Codazzi equations.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::frame::{normal_frame, NormalFrame};
use super::{dist_mod_pi, shifted, transform_tensor, CoordGeometry, LagError, SplitBasis, Tensor3};
use crate::catalog::{Delta, Immersion, LagType};
use crate::nk_core::{apply_j, koszul_connection, metric_g, AlgebraVec, TangentVec};
use crate::tol::Tolerances;

/// Replaces the rows of `r` in `group` by the g-projections of the centre rows onto
/// their span, g-orthonormalized in order.
fn follow_centre(r: &mut Matrix3<f64>, centre: &Matrix3<f64>, gram: &Matrix3<f64>, group: &[usize]) -> Result<(), LagError> {
    let g = |u: &Vector3<f64>, v: &Vector3<f64>| (u.transpose() * gram * v)[0];
    let span: Vec<Vector3<f64>> = group.iter().map(|&a| r.row(a).transpose()).collect();
    let m = nalgebra::DMatrix::from_fn(span.len(), span.len(), |p, q| g(&span[p], &span[q]));
    let det = m.determinant();
    let lu = m.lu();
    let mut done: Vec<(Vector3<f64>, f64)> = Vec::new();
    for &a in group {
        let ca = centre.row(a).transpose();
        let rhs = nalgebra::DVector::from_fn(span.len(), |p, _| g(&span[p], &ca));
        let y = lu.solve(&rhs).ok_or(LagError::DegeneratePlane(det))?;
        let mut v = span.iter().zip(y.iter()).fold(Vector3::zeros(), |acc, (s, c)| acc + s * *c);
        for (u, nu) in &done {
            v -= u * (g(&v, u) / nu);
        }
        let n = g(&v, &v);
        if n.abs() < 1e-12 {
            return Err(LagError::DegeneratePlane(n));
        }
        let v = v / n.abs().sqrt();
        r.set_row(a, &v.transpose());
        done.push((v, n.signum()));
    }
    Ok(())
}

/// `h_ij^k` and `omega_ij^k` in a normal frame.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SffTable {
    pub h: Tensor3,
    pub omega: Tensor3,
    pub mean_curvature: TangentVec,
    /// `sqrt|g(H, H)|`.
    pub mean_curvature_norm: f64,
    pub delta: Delta,
}

fn hat(i: usize) -> usize {
    match i {
        0 => 1,
        1 => 0,
        _ => 2,
    }
}

impl SffTable {
    /// Largest violation of the index symmetries of `h` for the frame's Gram pattern.
    pub fn symmetry_residual(&self) -> f64 {
        let h = &self.h;
        let d = super::delta_matrix(self.delta);
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    worst = worst.max((h[i][j][k] - h[j][i][k]).abs());
                    let other = match self.delta {
                        Delta::D2 => h[i][hat(k)][hat(j)],
                        _ => d[(j, j)] * d[(k, k)] * h[i][k][j],
                    };
                    worst = worst.max((h[i][j][k] - other).abs());
                }
            }
        }
        worst
    }

    /// `h_ij^k` by one-based name such as `"h22^3"`, or `omega` for names starting with `w`.
    pub fn component(&self, name: &str) -> Option<f64> {
        let b = name.as_bytes();
        if b.len() != 5 || b[3] != b'^' {
            return None;
        }
        let idx = |c: u8| (c as char).to_digit(10).filter(|d| (1..=3).contains(d)).map(|d| d as usize - 1);
        let (i, j, k) = (idx(b[1])?, idx(b[2])?, idx(b[4])?);
        match b[0] {
            b'h' => Some(self.h[i][j][k]),
            b'w' => Some(self.omega[i][j][k]),
            _ => None,
        }
    }
}

/// Coordinate geometry at a point and at its neighbours on a five-point stencil.
#[derive(Clone, Debug)]
pub struct LocalAnalysis {
    pub center: CoordGeometry,
    pub normal: NormalFrame,
    neighbors: Vec<[CoordGeometry; 4]>,
    step: f64,
}

const OFFSETS: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];

fn stencil<T>(v: [T; 4], h: f64) -> T
where
    T: std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let [m2, m1, p1, p2] = v;
    (m2 - m1 * 8.0 + p1 * 8.0 - p2) * (1.0 / (12.0 * h))
}

fn vec_of(m: &Matrix3<f64>, a: usize) -> Vector3<f64> {
    m.row(a).transpose()
}

impl LocalAnalysis {
    pub fn new(imm: &dyn Immersion, x: [f64; 3], tol: &Tolerances) -> Result<Self, LagError> {
        let center = CoordGeometry::new(imm, x, tol)?;
        let normal = normal_frame(&center, tol)?;
        let step = tol.fd_step_outer;
        let mut neighbors = Vec::with_capacity(3);
        for i in 0..3 {
            let mut n = Vec::with_capacity(4);
            for s in OFFSETS {
                n.push(CoordGeometry::new(imm, shifted(x, i, s * step), tol)?);
            }
            let arr: [CoordGeometry; 4] = n.try_into().expect("four offsets");
            neighbors.push(arr);
        }
        Ok(LocalAnalysis { center, normal, neighbors, step })
    }

    fn g(&self, u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
        (u.transpose() * self.center.frame.gram * v)[0]
    }

    /// Frame rows at the neighbours, sign-aligned with the centre frame.
    fn neighbor_rows(&self, tol: &Tolerances) -> Result<Vec<[Matrix3<f64>; 4]>, LagError> {
        let c = &self.normal.rows;
        let mut out = Vec::with_capacity(3);
        for n in &self.neighbors {
            let mut arr = [Matrix3::zeros(); 4];
            for (slot, cg) in arr.iter_mut().zip(n.iter()) {
                let mut r = normal_frame(cg, tol)?.rows;
                for a in 0..3 {
                    if r.row(a).dot(&c.row(a)) < 0.0 {
                        r.row_mut(a).neg_mut();
                    }
                }
                for group in self.repeated_angles() {
                    follow_centre(&mut r, c, &cg.frame.gram, &group)?;
                }
                *slot = r;
            }
            out.push(arr);
        }
        Ok(out)
    }

    /// Type I frame indices sharing an angle. Inside such a group the frame is not
    /// determined by `(A, B)` and has to be chosen continuously.
    fn repeated_angles(&self) -> Vec<Vec<usize>> {
        let class = &self.normal.class;
        if class.lag_type != LagType::I {
            return Vec::new();
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for a in 0..3 {
            match groups.iter_mut().find(|g| dist_mod_pi(class.angles[g[0]] - class.angles[a]).abs() < 1e-6) {
                Some(g) => g.push(a),
                None => groups.push(vec![a]),
            }
        }
        groups.retain(|g| g.len() > 1);
        groups
    }

    pub fn sff(&self, tol: &Tolerances) -> Result<SffTable, LagError> {
        let t = self.normal.rows;
        let tinv = t.try_inverse().ok_or(LagError::DegenerateGram(t.determinant()))?;
        let h = transform_tensor(&self.center.h, &t);
        let mut omega = transform_tensor(&self.center.gamma, &t);
        let nb = self.neighbor_rows(tol)?;
        let dt: [Matrix3<f64>; 3] = std::array::from_fn(|i| stencil(nb[i], self.step));
        for a in 0..3 {
            for i in 0..3 {
                let dm = dt[i] * tinv;
                for b in 0..3 {
                    for c in 0..3 {
                        omega[a][b][c] += t[(a, i)] * dm[(b, c)];
                    }
                }
            }
        }
        let frame = &self.normal.frame;
        let ginv = frame.gram.try_inverse().ok_or(LagError::DegenerateGram(frame.gram.determinant()))?;
        let mut hv = AlgebraVec::ZERO;
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    hv = hv + apply_j(&frame.vecs[c]) * (ginv[(a, b)] * h[a][b][c] / 3.0);
                }
            }
        }
        Ok(SffTable {
            h,
            omega,
            mean_curvature: TangentVec { base: frame.base, v: hv },
            mean_curvature_norm: metric_g(&hv, &hv).abs().sqrt(),
            delta: self.normal.delta,
        })
    }

    /// `R(d_i, d_j) d_k = sum_l r[i][j][k][l] d_l` from the Christoffel symbols.
    pub fn intrinsic_curvature(&self) -> [[[[f64; 3]; 3]; 3]; 3] {
        let gam = &self.center.gamma;
        let dgam: [Tensor3; 3] = std::array::from_fn(|i| {
            let mut out = [[[0.0; 3]; 3]; 3];
            for (j, oj) in out.iter_mut().enumerate() {
                for (k, ok) in oj.iter_mut().enumerate() {
                    for (l, v) in ok.iter_mut().enumerate() {
                        *v = stencil(self.neighbors[i].each_ref().map(|n| n.gamma[j][k][l]), self.step);
                    }
                }
            }
            out
        });
        let mut r = [[[[0.0; 3]; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let mut s = dgam[i][j][k][l] - dgam[j][i][k][l];
                        for m in 0..3 {
                            s += gam[j][k][m] * gam[i][m][l] - gam[i][k][m] * gam[j][m][l];
                        }
                        r[i][j][k][l] = s;
                    }
                }
            }
        }
        r
    }

    /// `S_eta Y` for a normal vector with coefficients `eta` on `J d_k`.
    fn shape(&self, eta: &Vector3<f64>, y: &Vector3<f64>) -> Vector3<f64> {
        let geta = self.center.frame.gram * eta;
        let low = Vector3::from_fn(|w, _| {
            let e_w = Vector3::ith(w, 1.0);
            self.center.h_of(y, &e_w).dot(&geta)
        });
        self.center.frame.raise(low)
    }

    /// Right side of the Gauss equation for coordinate vectors.
    pub fn gauss_rhs(&self, x: &Vector3<f64>, y: &Vector3<f64>, z: &Vector3<f64>) -> Vector3<f64> {
        let (a, b) = (&self.center.ab.a, &self.center.ab.b);
        let (ax, ay, bx, by) = (a * x, a * y, b * x, b * y);
        let g = |u: &Vector3<f64>, v: &Vector3<f64>| self.g(u, v);
        (x * g(y, z) - y * g(x, z)) * (-5.0 / 6.0)
            + (ax * g(&ay, z) - ay * g(&ax, z) + bx * g(&by, z) - by * g(&bx, z)) * (-2.0 / 3.0)
            - self.shape(&self.center.h_of(x, z), y)
            + self.shape(&self.center.h_of(y, z), x)
    }

    pub fn gauss_residual(&self) -> f64 {
        let r = self.intrinsic_curvature();
        let e = |i: usize| Vector3::ith(i, 1.0);
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let rhs = self.gauss_rhs(&e(i), &e(j), &e(k));
                    for l in 0..3 {
                        worst = worst.max((r[i][j][k][l] - rhs[l]).abs());
                    }
                }
            }
        }
        worst
    }

    /// Normal coefficients of `(nabla_{d_i} h)(d_j, d_k)`.
    fn cov_h(&self, basis: &SplitBasis, i: usize, j: usize, k: usize) -> Vector3<f64> {
        let c = &self.center;
        let dn = stencil(self.neighbors[i].each_ref().map(|n| n.normal_field(j, k)), self.step);
        let v = dn + koszul_connection(&c.frame.vecs[i], &c.normal_field(j, k));
        let (_, mut n) = basis.split(&v);
        for m in 0..3 {
            for l in 0..3 {
                n[l] -= c.gamma[i][j][m] * c.h[m][k][l] + c.gamma[i][k][m] * c.h[j][m][l];
            }
        }
        n
    }

    pub fn codazzi_residual(&self) -> Result<f64, LagError> {
        let c = &self.center;
        let basis = SplitBasis::new(&c.frame)?;
        let (a, b) = (&c.ab.a, &c.ab.b);
        let e = |i: usize| Vector3::ith(i, 1.0);
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                for k in 0..3 {
                    let lhs = self.cov_h(&basis, i, j, k) - self.cov_h(&basis, j, i, k);
                    let (x, y, z) = (e(i), e(j), e(k));
                    let rhs = ((b * x) * self.g(&(a * y), &z) - (b * y) * self.g(&(a * x), &z) - (a * x) * self.g(&(b * y), &z)
                        + (a * y) * self.g(&(b * x), &z))
                        * (-2.0 / 3.0);
                    worst = worst.max((lhs - rhs).abs().max());
                }
            }
        }
        Ok(worst)
    }

    /// Sectional curvature of the plane spanned by coordinate vectors, from the Gauss
    /// equation and from the Christoffel symbols.
    pub fn sectional_curvature_of(&self, x: &Vector3<f64>, y: &Vector3<f64>, tol: &Tolerances) -> Result<(f64, f64), LagError> {
        let den = self.g(x, x) * self.g(y, y) - self.g(x, y).powi(2);
        if den.abs() < tol.degenerate_plane {
            return Err(LagError::DegeneratePlane(den));
        }
        let gauss = self.g(&self.gauss_rhs(x, y, y), x) / den;
        let r = self.intrinsic_curvature();
        let mut ryy = Vector3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let w = x[i] * y[j] * y[k];
                    for l in 0..3 {
                        ryy[l] += w * r[i][j][k][l];
                    }
                }
            }
        }
        Ok((gauss, self.g(&ryy, x) / den))
    }

    /// Sectional curvature of the plane `(E_a, E_b)` of the normal frame.
    pub fn sectional_curvature(&self, a: usize, b: usize, tol: &Tolerances) -> Result<(f64, f64), LagError> {
        let t = &self.normal.rows;
        self.sectional_curvature_of(&vec_of(t, a), &vec_of(t, b), tol)
    }

    /// `g(G(E_i, E_j), E_k)` and the failure of total symmetry of `g(h(X, Y), J Z)`.
    pub fn lagrangian_identity_residual(&self, table: &SffTable) -> f64 {
        let f = &self.normal.frame;
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let gij = crate::nk_core::tensor_g(&f.vecs[i], &f.vecs[j]);
                for k in 0..3 {
                    worst = worst.max(metric_g(&gij, &f.vecs[k]).abs());
                }
            }
        }
        let c = |i: usize, j: usize, k: usize| (0..3).map(|e| table.h[i][j][e] * f.gram[(e, k)]).sum::<f64>();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let v = c(i, j, k);
                    worst = worst.max((v - c(j, k, i)).abs()).max((v - c(k, i, j)).abs()).max((v - c(j, i, k)).abs());
                }
            }
        }
        worst
    }
}

/// Second fundamental form and connection forms of `imm` at `x`.
pub fn second_fundamental_form(imm: &dyn Immersion, x: [f64; 3], tol: &Tolerances) -> Result<SffTable, LagError> {
    LocalAnalysis::new(imm, x, tol)?.sff(tol)
}
