// SPDX-License-Identifier: Apache-2.0

//! Oriented, gauge-fixed normal frames.

use nalgebra::{Matrix3, Vector3};

use super::classify::{classify_matrices, normal_form, TypeClass};
use super::{extract_ab, transform_tensor, AbPair, CoordGeometry, FrameTriple, LagError};
use crate::catalog::{Delta, LagType};
use crate::nk_core::{apply_j, metric_g, tensor_g};
use crate::tol::Tolerances;

/// A frame putting `(A, B)` in normal form.
#[derive(Clone, Debug)]
pub struct NormalFrame {
    pub class: TypeClass,
    pub delta: Delta,
    /// `E_a = sum_i rows[(a, i)] d_i` in terms of the coordinate fields.
    pub rows: Matrix3<f64>,
    pub frame: FrameTriple,
    pub ab: AbPair,
    /// Largest entry of `(A, B)` minus the printed normal form.
    pub normal_form_residual: f64,
}

/// Coefficients of `J G(E_i, E_j)` on the frame.
pub fn jg_coefficients(frame: &FrameTriple, i: usize, j: usize) -> Vector3<f64> {
    let v = apply_j(&tensor_g(&frame.vecs[i], &frame.vecs[j]));
    let lowered = Vector3::from_fn(|k, _| metric_g(&v, &frame.vecs[k]));
    frame.raise(lowered)
}

const MAX_GAUGE_STEPS: usize = 6;

/// Normal frame at a coordinate point. Type I, II and IV frames are oriented by
/// flipping `E_3` and type III by flipping all three so that `J G(E_1, E_2)` has a
/// positive `E_3` component. Type II with equal angles is gauged to `h_22^1 = 0`.
pub fn normal_frame(cg: &CoordGeometry, tol: &Tolerances) -> Result<NormalFrame, LagError> {
    let pre = classify_matrices(&cg.ab.a, &cg.ab.b, &cg.frame.gram, tol)?;
    let mut rows = pre.rows;
    let mut class = pre.class;
    let mut frame = cg.frame.combine(&rows)?;
    if jg_coefficients(&frame, 0, 1)[2] < 0.0 {
        match class.lag_type {
            LagType::III => rows = -rows,
            _ => rows.row_mut(2).neg_mut(),
        }
        frame = cg.frame.combine(&rows)?;
    }

    if class.lag_type == LagType::II {
        let gap = (class.angles[0] - class.angles[1]).abs();
        if gap > 1e-6 {
            return Err(LagError::UnresolvedType { gap, detail: "type II with distinct angles".into() });
        }
        for _ in 0..MAX_GAUGE_STEPS {
            let h = transform_tensor(&cg.h, &rows);
            let (h1, h3) = (h[1][1][0], h[1][1][2]);
            if h1.abs() < 1e-13 {
                break;
            }
            if h3.abs() < 1e-8 {
                return Err(LagError::GaugeFailure(format!("h_22^3 = {h3:e} vanishes")));
            }
            let t = h1 / (2.0 * h3);
            let g = Matrix3::new(1.0, 0.0, 0.0, -t * t / 2.0, 1.0, -t, t, 0.0, 1.0);
            rows = g * rows;
        }
        frame = cg.frame.combine(&rows)?;
    }

    let frame = frame.with_signature(pre.delta, 1e-6)?;
    let ab = extract_ab(&frame)?;
    if class.lag_type == LagType::III {
        class.b_sign = Some(if ab.b[(0, 0)] < 0.0 { -1 } else { 1 });
    }
    let (a0, b0) = normal_form(&class);
    let normal_form_residual = (ab.a - a0).abs().max().max((ab.b - b0).abs().max());
    Ok(NormalFrame { class, delta: pre.delta, rows, frame, ab, normal_form_residual })
}

impl NormalFrame {
    /// Largest deviation of `J G(E_i, E_j)` from `sqrt(2/3) sum_k eps_ijk Delta^{-1} E_k`.
    pub fn jg_table_residual(&self) -> f64 {
        let c = (2.0f64 / 3.0).sqrt();
        let dinv = super::delta_matrix(self.delta);
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let got = jg_coefficients(&self.frame, i, j);
                let eps = Vector3::from_fn(|k, _| super::levi_civita(i, j, k) * c);
                worst = worst.max((got - dinv * eps).abs().max());
            }
        }
        worst
    }
}
