// SPDX-License-Identifier: Apache-2.0

//! Numerical tolerances and finite-difference steps used across the crate.

use serde::{Deserialize, Serialize};

/// Every threshold the engine compares against, in one place.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Algebraic identities evaluated in closed form.
    pub exact: f64,
    /// Quantities that pass through finite differences.
    pub fd: f64,
    /// Traces below this are symmetrized away; above it a matrix is not traceless.
    pub trace_snap: f64,
    /// Below this `|<a,a>|` the exponential switches to its Taylor branch.
    pub exp_null_cone: f64,
    /// Gram matrices of conjugation problems must agree to this.
    pub conjugation: f64,
    /// Frames must be Lagrangian to this when built from analytic data.
    pub lagrangian_exact: f64,
    /// Frames must be Lagrangian to this when built by finite differences.
    pub lagrangian_fd: f64,
    /// Planes with smaller Gram determinant are degenerate.
    pub degenerate_plane: f64,
    /// Eigenvalues of the joint `(A, B)` spectrum further apart than this are never clustered.
    pub cluster_band: f64,
    /// Relative Cayley-Hamilton residual below which a cluster is accepted as one eigenvalue.
    pub cluster_residual: f64,
    /// Nilpotent parts below this make a cluster diagonalizable.
    pub diag_threshold: f64,
    /// Nilpotent parts above this make a cluster a Jordan block.
    pub jordan_threshold: f64,
    /// Pointwise agreement required when composing isometries.
    pub composition: f64,
    /// Step for pushforwards of immersions and isometries.
    pub fd_step: f64,
    /// Step for derivatives of frame fields (connection, second fundamental form).
    pub fd_step_frame: f64,
    /// Step for derivatives of connection-level fields (curvature, Codazzi, frame gauge).
    pub fd_step_outer: f64,
    /// Step for derivatives of extracted angle functions.
    pub fd_step_angle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            exact: 1e-10,
            fd: 1e-5,
            trace_snap: 1e-9,
            exp_null_cone: 1e-14,
            conjugation: 1e-8,
            lagrangian_exact: 1e-8,
            lagrangian_fd: 1e-6,
            degenerate_plane: 1e-9,
            cluster_band: 1e-2,
            cluster_residual: 1e-7,
            diag_threshold: 1e-6,
            jordan_threshold: 1e-4,
            composition: 1e-7,
            fd_step: 1e-4,
            fd_step_frame: 2e-3,
            fd_step_outer: 2.5e-3,
            fd_step_angle: 1e-3,
        }
    }
}
