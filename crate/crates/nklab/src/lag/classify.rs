// SPDX-License-Identifier: Apache-2.0

//! Type I-IV classification of `(A, B)` and the matching normal-form basis.

use nalgebra::{Complex, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{dist_mod_pi, wrap_pi, AbPair, FrameTriple, LagError};
use crate::catalog::{Delta, LagType};
use crate::tol::Tolerances;

const PHI_CANDIDATES: [f64; 4] = [0.37, 1.21, 2.05, 2.71];

/// Type with its angle functions. `angles` holds `(theta_1, theta_2, theta_3)` for
/// type I and `(theta_1, theta_2)` otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeClass {
    pub lag_type: LagType,
    pub angles: Vec<f64>,
    pub psi: Option<f64>,
    pub b_sign: Option<i8>,
    /// Branch bit in `theta_2 = k pi - 2 theta_1`.
    pub branch: Option<u8>,
}

impl TypeClass {
    /// Distance of the angle relation of the type to `0 mod pi`.
    pub fn invariant_residual(&self) -> f64 {
        match self.lag_type {
            LagType::I => dist_mod_pi(self.angles.iter().sum()).abs(),
            LagType::II | LagType::IV => dist_mod_pi(2.0 * self.angles[0] + self.angles[1]).abs(),
            LagType::III => 0.0,
        }
    }
}

/// Classification together with a basis (rows, in the input coordinates) that puts
/// `(A, B)` in normal form before orientation and gauge are fixed.
#[derive(Clone, Debug)]
pub struct PreFrame {
    pub class: TypeClass,
    pub rows: Matrix3<f64>,
    pub delta: Delta,
}

struct Cluster {
    mean: Complex<f64>,
    size: usize,
}

const PARTITIONS: [&[&[usize]]; 5] = [&[&[0, 1, 2]], &[&[0, 1], &[2]], &[&[0, 2], &[1]], &[&[1, 2], &[0]], &[&[0], &[1], &[2]]];

/// Groups the eigenvalues of `c`. A group is accepted when its spread is below `band`
/// and `prod (c - mean)^size` over the groups vanishes to `residual` relative to the
/// scale of `c`. A defective eigenvalue of multiplicity m splits like the m-th root of
/// the noise while this product only grows linearly in it.
fn cluster(c: &Matrix3<f64>, ev: &[Complex<f64>; 3], band: f64, residual: f64) -> Vec<Cluster> {
    let cc = c.map(|x| Complex::new(x, 0.0));
    let scale = c.amax().max(1.0);
    let mut best: Option<(usize, f64, Vec<Cluster>)> = None;
    for part in PARTITIONS {
        let groups: Vec<Cluster> = part
            .iter()
            .map(|g| Cluster { mean: g.iter().map(|&i| ev[i]).sum::<Complex<f64>>() / g.len() as f64, size: g.len() })
            .collect();
        let spread_ok = part.iter().zip(&groups).all(|(g, k)| g.iter().all(|&i| (ev[i] - k.mean).norm() < band));
        if !spread_ok {
            continue;
        }
        let mut prod = Matrix3::<Complex<f64>>::identity();
        for k in &groups {
            let shifted = cc - Matrix3::identity() * k.mean;
            for _ in 0..k.size {
                prod *= shifted;
            }
        }
        let r = prod.iter().fold(0.0f64, |a, z| a.max(z.norm())) / scale.powi(3);
        if part.len() < 3 && r > residual {
            continue;
        }
        let better = match &best {
            None => true,
            Some((n, br, _)) => part.len() < *n || (part.len() == *n && r < *br),
        };
        if better {
            best = Some((part.len(), r, groups));
        }
    }
    let mut cl = best.expect("singletons are always accepted").2;
    cl.sort_by(|a, b| a.mean.re.total_cmp(&b.mean.re).then(a.mean.im.total_cmp(&b.mean.im)));
    cl
}

fn min_gap(cl: &[Cluster]) -> f64 {
    let mut g = f64::INFINITY;
    for i in 0..cl.len() {
        for j in (i + 1)..cl.len() {
            g = g.min((cl[i].mean - cl[j].mean).norm());
        }
    }
    g
}

const MAX_SWEEPS: usize = 10_000;

/// Zeroes entries far below the largest one. Subnormal noise can stall the QR sweeps.
fn chop(c: &Matrix3<f64>) -> Matrix3<f64> {
    let s = c.amax();
    c.map(|x| if x.abs() <= 1e-15 * s { 0.0 } else { x })
}

fn eigenvalues(c: &Matrix3<f64>) -> Result<[Complex<f64>; 3], LagError> {
    // QR shifts stall on nearly scalar input, so only the traceless part is decomposed
    let mean = c.trace() / 3.0;
    let dev = c - Matrix3::identity() * mean;
    let s = dev.amax();
    if s <= 1e-14 * c.amax() {
        return Ok([Complex::new(mean, 0.0); 3]);
    }
    let m = chop(&(dev / s));
    // the shifted QR can also stall on nearly diagonal input with a repeated eigenvalue,
    // so retry in a rotated basis
    let schur = std::iter::once(m)
        .chain([0.7, 1.9].map(|t| {
            let q = *nalgebra::Rotation3::from_scaled_axis(Vector3::new(1.0, 2.0, 3.0).normalize() * t).matrix();
            q.transpose() * m * q
        }))
        .find_map(|m| m.try_schur(f64::EPSILON, MAX_SWEEPS))
        .ok_or_else(|| LagError::GaugeFailure("Schur iteration did not converge".into()))?;
    let ev = schur.complex_eigenvalues().map(|z| z * s + mean);
    Ok([ev[0], ev[1], ev[2]])
}

/// Orthonormal (Euclidean) basis of the range of `m`, as columns.
fn range_basis(m: &Matrix3<f64>) -> Result<Vec<Vector3<f64>>, LagError> {
    let svd = chop(m)
        .try_svd(true, false, f64::EPSILON, MAX_SWEEPS)
        .ok_or_else(|| LagError::GaugeFailure("SVD did not converge".into()))?;
    let u = svd.u.expect("u requested");
    let smax = svd.singular_values.max();
    Ok((0..3).filter(|&i| svd.singular_values[i] > 1e-6 * smax.max(1e-300)).map(|i| u.column(i).into()).collect())
}

fn g_inner(gram: &Matrix3<f64>, u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
    (u.transpose() * gram * v)[0]
}

fn restrict(m: &Matrix3<f64>, basis: &[Vector3<f64>]) -> nalgebra::DMatrix<f64> {
    let v = nalgebra::DMatrix::from_fn(3, basis.len(), |i, j| basis[j][i]);
    let pinv = v.clone().pseudo_inverse(1e-12).expect("non-empty basis");
    let full = nalgebra::DMatrix::from_fn(3, 3, |i, j| m[(i, j)]);
    pinv * full * v
}

fn nilpotent(m: &nalgebra::DMatrix<f64>) -> nalgebra::DMatrix<f64> {
    let n = m.nrows();
    let tr = m.trace() / n as f64;
    m - nalgebra::DMatrix::identity(n, n) * tr
}

fn max_abs(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

struct RealCluster {
    mean: f64,
    basis: Vec<Vector3<f64>>,
    nil: f64,
    nil2: f64,
    a_mean: f64,
    b_mean: f64,
}

fn angle(a: f64, b: f64) -> f64 {
    wrap_pi(0.5 * b.atan2(a))
}

/// g-orthonormal basis of a nondegenerate subspace.
fn g_orthonormalize(gram: &Matrix3<f64>, basis: &[Vector3<f64>], tol: &Tolerances) -> Result<Vec<(Vector3<f64>, f64)>, LagError> {
    let m = basis.len();
    let gc = nalgebra::DMatrix::from_fn(m, m, |i, j| g_inner(gram, &basis[i], &basis[j]));
    let eig = nalgebra::SymmetricEigen::try_new(gc, f64::EPSILON, MAX_SWEEPS)
        .ok_or_else(|| LagError::GaugeFailure("symmetric eigensolver did not converge".into()))?;
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let lam = eig.eigenvalues[k];
        if lam.abs() < tol.degenerate_plane {
            return Err(LagError::DegeneratePlane(lam));
        }
        let mut v = Vector3::zeros();
        for i in 0..m {
            v += basis[i] * eig.eigenvectors[(i, k)];
        }
        out.push((v / lam.abs().sqrt(), lam.signum()));
    }
    Ok(out)
}

/// Picks the index-`i` unit vector that maximizes `|m e_i|`, breaking ties by index.
fn best_seed(m: &Matrix3<f64>, extra: &[Vector3<f64>]) -> Vector3<f64> {
    let mut cands: Vec<Vector3<f64>> = (0..3).map(|i| Vector3::ith(i, 1.0)).collect();
    cands.extend_from_slice(extra);
    cands.into_iter().max_by(|a, b| (m * a).norm().total_cmp(&(m * b).norm())).expect("candidates")
}

fn rows_of(v: [Vector3<f64>; 3]) -> Matrix3<f64> {
    Matrix3::from_rows(&[v[0].transpose(), v[1].transpose(), v[2].transpose()])
}

enum Spectrum {
    Complex { c: Matrix3<f64>, mean: Complex<f64> },
    Real { clusters: Vec<Cluster>, real: Vec<RealCluster> },
}

fn spectrum(a: &Matrix3<f64>, b: &Matrix3<f64>, tol: &Tolerances) -> Result<Spectrum, LagError> {
    let mut best: Option<(f64, Matrix3<f64>, Vec<Cluster>)> = None;
    for phi in PHI_CANDIDATES {
        let c = a * phi.cos() + b * phi.sin();
        let cl = cluster(&c, &eigenvalues(&c)?, tol.cluster_band, tol.cluster_residual);
        let better = match &best {
            None => true,
            Some((_, _, bc)) => cl.len() > bc.len() || (cl.len() == bc.len() && min_gap(&cl) > min_gap(bc)),
        };
        if better {
            best = Some((phi, c, cl));
        }
    }
    let (_, c, clusters) = best.expect("candidate angles");

    if let Some(cx) = clusters.iter().find(|k| k.mean.im.abs() > tol.cluster_band) {
        return Ok(Spectrum::Complex { c, mean: cx.mean });
    }

    let mut real = Vec::new();
    for (n, k) in clusters.iter().enumerate() {
        let mut proj = Matrix3::identity();
        for (m, d) in clusters.iter().enumerate() {
            if m == n {
                continue;
            }
            let f = (c - Matrix3::identity() * d.mean.re) / (k.mean.re - d.mean.re);
            for _ in 0..d.size {
                proj = f * proj;
            }
        }
        let basis = range_basis(&proj)?;
        if basis.len() != k.size {
            return Err(LagError::UnresolvedType {
                gap: min_gap(&clusters),
                detail: format!("generalized eigenspace has dimension {} for multiplicity {}", basis.len(), k.size),
            });
        }
        let ar = restrict(a, &basis);
        let br = restrict(b, &basis);
        let (na, nb) = (nilpotent(&ar), nilpotent(&br));
        let nil = max_abs(&na).max(max_abs(&nb));
        let nil2 = max_abs(&(&na * &na)).max(max_abs(&(&nb * &nb)));
        let m = basis.len() as f64;
        real.push(RealCluster { mean: k.mean.re, basis, nil, nil2, a_mean: ar.trace() / m, b_mean: br.trace() / m });
    }

    for k in &real {
        if k.nil >= tol.diag_threshold && k.nil <= tol.jordan_threshold {
            return Err(LagError::UnresolvedType {
                gap: k.nil,
                detail: format!("nilpotent part of the cluster at {:.6} falls between the thresholds", k.mean),
            });
        }
    }
    Ok(Spectrum::Real { clusters, real })
}

/// Index of the Jordan cluster, if any, and the type it implies.
fn real_type(clusters: &[Cluster], real: &[RealCluster], tol: &Tolerances) -> Result<(LagType, Option<usize>), LagError> {
    let jordan: Vec<usize> = (0..real.len()).filter(|&i| real[i].nil > tol.jordan_threshold).collect();
    match jordan.as_slice() {
        [] => Ok((LagType::I, None)),
        [i] if real[*i].basis.len() == 3 && real[*i].nil2 > tol.jordan_threshold => Ok((LagType::III, Some(*i))),
        [i] => Ok((LagType::II, Some(*i))),
        _ => Err(LagError::UnresolvedType { gap: min_gap(clusters), detail: "more than one Jordan block".into() }),
    }
}

/// Type of `(A, B)` from the Jordan structure alone. Unlike [`classify_matrices`] this
/// does not require the normal form to be reachable by a change of frame.
pub fn lag_type_of(a: &Matrix3<f64>, b: &Matrix3<f64>, tol: &Tolerances) -> Result<LagType, LagError> {
    match spectrum(a, b, tol)? {
        Spectrum::Complex { .. } => Ok(LagType::IV),
        Spectrum::Real { clusters, real } => Ok(real_type(&clusters, &real, tol)?.0),
    }
}

/// Classifies `(A, B)` acting on a space with Gram matrix `gram` and builds a basis
/// realizing the normal form.
pub fn classify_matrices(
    a: &Matrix3<f64>,
    b: &Matrix3<f64>,
    gram: &Matrix3<f64>,
    tol: &Tolerances,
) -> Result<PreFrame, LagError> {
    match spectrum(a, b, tol)? {
        Spectrum::Complex { c, mean } => type_iv(a, b, gram, &c, mean, tol),
        Spectrum::Real { clusters, real } => match real_type(&clusters, &real, tol)? {
            (LagType::I, _) => type_i(a, b, gram, &real, tol),
            (LagType::III, Some(i)) => type_iii(a, gram, &real[i]),
            (_, Some(i)) => type_ii(a, b, gram, &real[i], tol),
            (_, None) => unreachable!("Jordan types carry a cluster"),
        },
    }
}

fn type_i(
    a: &Matrix3<f64>,
    b: &Matrix3<f64>,
    gram: &Matrix3<f64>,
    real: &[RealCluster],
    tol: &Tolerances,
) -> Result<PreFrame, LagError> {
    let mut legs: Vec<(Vector3<f64>, f64, f64)> = Vec::new();
    for k in real {
        for (v, sign) in g_orthonormalize(gram, &k.basis, tol)? {
            let n = g_inner(gram, &v, &v);
            let th = angle(g_inner(gram, &v, &(a * v)) / n, g_inner(gram, &v, &(b * v)) / n);
            legs.push((v, sign, th));
        }
    }
    let timelike: Vec<usize> = (0..3).filter(|&i| legs[i].1 < 0.0).collect();
    if timelike.len() != 1 {
        return Err(LagError::UnresolvedType {
            gap: 0.0,
            detail: format!("induced metric has {} timelike directions", timelike.len()),
        });
    }
    let t = timelike[0];
    let mut rest: Vec<usize> = (0..3).filter(|&i| i != t).collect();
    rest.sort_by(|&i, &j| legs[i].2.total_cmp(&legs[j].2));
    let order = [t, rest[0], rest[1]];
    Ok(PreFrame {
        class: TypeClass {
            lag_type: LagType::I,
            angles: order.iter().map(|&i| legs[i].2).collect(),
            psi: None,
            b_sign: None,
            branch: None,
        },
        rows: rows_of(order.map(|i| legs[i].0)),
        delta: Delta::D1,
    })
}

fn type_ii(
    a: &Matrix3<f64>,
    b: &Matrix3<f64>,
    gram: &Matrix3<f64>,
    k: &RealCluster,
    tol: &Tolerances,
) -> Result<PreFrame, LagError> {
    let n = a - Matrix3::identity() * k.a_mean;
    let extra: Vec<Vector3<f64>> = k.basis.clone();
    // restrict the search to the Jordan cluster when there is a second eigenvalue
    let v = if k.basis.len() == 3 {
        best_seed(&n, &extra)
    } else {
        extra
            .iter()
            .chain([extra[0] + extra[1], extra[0] - extra[1]].iter())
            .copied()
            .max_by(|x, y| (n * x).norm().total_cmp(&(n * y).norm()))
            .expect("two basis vectors")
    };
    let kk = g_inner(gram, &(n * v), &v);
    if !(kk > tol.diag_threshold) {
        return Err(LagError::GaugeFailure(format!("g(Nv, v) = {kk:e} is not positive")));
    }
    let mut e2 = v / kk.sqrt();
    let e1 = n * e2;
    e2 -= e1 * (g_inner(gram, &e2, &e2) / 2.0);
    let (l1, l2) = (gram * e1, gram * e2);
    let mut e3 = gram.lu().solve(&l1.cross(&l2)).ok_or(LagError::DegenerateGram(0.0))?;
    let n3 = g_inner(gram, &e3, &e3);
    if !(n3 > tol.degenerate_plane) {
        return Err(LagError::GaugeFailure(format!("complement has g-norm {n3:e}")));
    }
    e3 /= n3.sqrt();
    let th1 = angle(k.a_mean, k.b_mean);
    let th2 =
        angle(g_inner(gram, &e3, &(a * e3)) / g_inner(gram, &e3, &e3), g_inner(gram, &e3, &(b * e3)) / g_inner(gram, &e3, &e3));
    Ok(PreFrame {
        class: TypeClass { lag_type: LagType::II, angles: vec![th1, th2], psi: None, b_sign: None, branch: None },
        rows: rows_of([e1, e2, e3]),
        delta: Delta::D2,
    })
}

fn type_iii(a: &Matrix3<f64>, gram: &Matrix3<f64>, k: &RealCluster) -> Result<PreFrame, LagError> {
    let n = a - Matrix3::identity() * k.a_mean;
    let v = best_seed(&(n * n), &k.basis);
    let kk = g_inner(gram, &(n * n * v), &v);
    if !(kk > 0.0) {
        return Err(LagError::GaugeFailure(format!("g(N^2 v, v) = {kk:e} is not positive")));
    }
    let mut e2 = v / kk.sqrt();
    let mut e3 = n * e2;
    let a1 = -g_inner(gram, &e2, &e3) / 2.0;
    e2 += e3 * a1;
    e3 = n * e2;
    let mut e1 = n * e3;
    let b1 = -g_inner(gram, &e2, &e2) / 2.0;
    e2 += e1 * b1;
    e3 = n * e2;
    e1 = n * e3;
    let th = angle(k.a_mean, k.b_mean);
    Ok(PreFrame {
        class: TypeClass { lag_type: LagType::III, angles: vec![th], psi: None, b_sign: None, branch: None },
        rows: rows_of([e1, e2, e3]),
        delta: Delta::D2,
    })
}

fn type_iv(
    a: &Matrix3<f64>,
    b: &Matrix3<f64>,
    gram: &Matrix3<f64>,
    c: &Matrix3<f64>,
    mu: Complex<f64>,
    tol: &Tolerances,
) -> Result<PreFrame, LagError> {
    let mu = if mu.im < 0.0 { mu.conj() } else { mu };
    let m = c.map(|x| Complex::new(x, 0.0)) - nalgebra::Matrix3::<Complex<f64>>::identity() * mu;
    let rows: [nalgebra::Vector3<Complex<f64>>; 3] = std::array::from_fn(|i| m.row(i).transpose());
    let w = [(0, 1), (0, 2), (1, 2)]
        .into_iter()
        .map(|(i, j)| rows[i].cross(&rows[j]))
        .max_by(|x, y| x.norm().total_cmp(&y.norm()))
        .expect("three pairs");
    let x: Vector3<f64> = w.map(|z| z.re);
    let y: Vector3<f64> = w.map(|z| z.im);
    let (gxx, gyy, gxy) = (g_inner(gram, &x, &x), g_inner(gram, &y, &y), g_inner(gram, &x, &y));
    let phi = 0.5 * (-2.0 * gxy).atan2(gxx - gyy);
    let (cp, sp) = (phi.cos(), phi.sin());
    let xr = x * cp - y * sp;
    let yr = x * sp + y * cp;
    let (space, time) = if g_inner(gram, &xr, &xr) > 0.0 { (xr, yr) } else { (yr, xr) };
    let ns = g_inner(gram, &space, &space);
    let nt = g_inner(gram, &time, &time);
    if !(ns > tol.degenerate_plane && nt < -tol.degenerate_plane) {
        return Err(LagError::UnresolvedType { gap: mu.im, detail: format!("complex eigenplane has norms {ns:e}, {nt:e}") });
    }
    let e1 = space / ns.sqrt();
    let mut e2 = time / (-nt).sqrt();
    // real eigenvector: g-orthogonal complement of the complex plane
    let mut e3 = gram.lu().solve(&(gram * e1).cross(&(gram * e2))).ok_or(LagError::DegenerateGram(0.0))?;
    let n3 = g_inner(gram, &e3, &e3);
    if !(n3 > tol.degenerate_plane) {
        return Err(LagError::GaugeFailure(format!("real eigenvector has g-norm {n3:e}")));
    }
    e3 /= n3.sqrt();
    let fr = rows_of([e1, e2, e3]).transpose();
    let inv = fr.try_inverse().ok_or(LagError::DegenerateGram(0.0))?;
    let (af, bf) = (inv * a * fr, inv * b * fr);
    let th2 = angle(af[(2, 2)], bf[(2, 2)]);
    let mut sh = af[(0, 1)] * th2.sin() + bf[(0, 1)] * th2.cos();
    if sh < 0.0 {
        e2 = -e2;
        sh = -sh;
    }
    let th1 = angle(af[(0, 0)], bf[(0, 0)]);
    let k = ((2.0 * th1 + th2) / std::f64::consts::PI).round().rem_euclid(2.0) as u8;
    Ok(PreFrame {
        class: TypeClass { lag_type: LagType::IV, angles: vec![th1, th2], psi: Some(sh.asinh()), b_sign: None, branch: Some(k) },
        rows: rows_of([e1, e2, e3]),
        delta: Delta::D3,
    })
}

/// Classification of a frame from its `(A, B)`.
pub fn classify_type(ab: &AbPair, frame: &FrameTriple, tol: &Tolerances) -> Result<TypeClass, LagError> {
    Ok(classify_matrices(&ab.a, &ab.b, &frame.gram, tol)?.class)
}

/// `(A, B)` of the normal form for a classified type.
pub fn normal_form(class: &TypeClass) -> (Matrix3<f64>, Matrix3<f64>) {
    let cs = |t: f64| ((2.0 * t).cos(), (2.0 * t).sin());
    match class.lag_type {
        LagType::I => {
            let v: Vec<(f64, f64)> = class.angles.iter().map(|&t| cs(t)).collect();
            (
                Matrix3::from_diagonal(&Vector3::new(v[0].0, v[1].0, v[2].0)),
                Matrix3::from_diagonal(&Vector3::new(v[0].1, v[1].1, v[2].1)),
            )
        }
        LagType::II => {
            let (c1, s1) = cs(class.angles[0]);
            let (c2, s2) = cs(class.angles[1]);
            (Matrix3::new(c1, 1.0, 0.0, 0.0, c1, 0.0, 0.0, 0.0, c2), Matrix3::new(s1, -c1 / s1, 0.0, 0.0, s1, 0.0, 0.0, 0.0, s2))
        }
        LagType::III => {
            let r3 = 3f64.sqrt();
            let sg = f64::from(class.b_sign.unwrap_or(1));
            (
                Matrix3::new(-0.5, 0.0, 1.0, 0.0, -0.5, 0.0, 0.0, 1.0, -0.5),
                Matrix3::new(r3 / 2.0, -4.0 / (3.0 * r3), 1.0 / r3, 0.0, r3 / 2.0, 0.0, 0.0, 1.0 / r3, r3 / 2.0) * sg,
            )
        }
        LagType::IV => {
            let (t1, t2) = (class.angles[0], class.angles[1]);
            let psi = class.psi.unwrap_or(0.0);
            let (ch, sh) = (psi.cosh(), psi.sinh());
            let (c1, s1) = cs(t1);
            (
                Matrix3::new(ch * c1, sh * t2.sin(), 0.0, -sh * t2.sin(), ch * c1, 0.0, 0.0, 0.0, (2.0 * t2).cos()),
                Matrix3::new(ch * s1, sh * t2.cos(), 0.0, -sh * t2.cos(), ch * s1, 0.0, 0.0, 0.0, (2.0 * t2).sin()),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conj(m: &Matrix3<f64>, basis: &Matrix3<f64>) -> Matrix3<f64> {
        basis.try_inverse().unwrap() * m * basis
    }

    #[test]
    fn synthetic_type_iv_is_recovered() {
        let tol = Tolerances::default();
        let th1 = 0.4;
        let class = TypeClass {
            lag_type: LagType::IV,
            angles: vec![th1, wrap_pi(-2.0 * th1)],
            psi: Some(0.7),
            b_sign: None,
            branch: Some(0),
        };
        let (a, b) = normal_form(&class);
        let d3 = super::super::delta_matrix(Delta::D3);
        let m = Matrix3::new(1.0, 0.3, -0.2, 0.1, 1.2, 0.4, -0.3, 0.2, 0.9);
        let gram = m.transpose() * d3 * m;
        let pre = classify_matrices(&conj(&a, &m), &conj(&b, &m), &gram, &tol).unwrap();
        assert_eq!(pre.class.lag_type, LagType::IV);
        assert!((pre.class.psi.unwrap() - 0.7).abs() < 1e-9);
        assert!((pre.class.angles[0] - th1).abs() < 1e-9);
        assert!(pre.class.invariant_residual() < 1e-9);
    }

    #[test]
    fn gray_zone_is_reported() {
        let tol = Tolerances::default();
        let c = (2.0 * std::f64::consts::PI / 3.0).cos();
        let s = (2.0 * std::f64::consts::PI / 3.0).sin();
        let eps = 1e-5;
        let a = Matrix3::new(c, eps, 0.0, 0.0, c, 0.0, 0.0, 0.0, c);
        let b = Matrix3::new(s, 0.0, 0.0, 0.0, s, 0.0, 0.0, 0.0, s);
        let gram = super::super::delta_matrix(Delta::D2);
        assert!(matches!(classify_matrices(&a, &b, &gram, &tol), Err(LagError::UnresolvedType { .. })));
    }
}
