// SPDX-License-Identifier: Apache-2.0

//! Numerical engine for the homogeneous nearly Kähler manifold SL(2,R)xSL(2,R)
//! and its extrinsically homogeneous Lagrangian submanifolds.

// Index loops mirror the tensor formulas; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod isometry;
pub mod lag;
pub mod nk_core;
pub mod par;
pub mod report;
pub mod rng;
pub mod split_mat;
pub mod tol;

pub use catalog::{CatalogError, Immersion, ImmersionId};
pub use isometry::{Isometry, IsometryError, Psi};
pub use nk_core::{AlgebraVec, NkError, Point, TangentVec};
pub use split_mat::{Mat2, Sl2Vec, SplitError};
pub use tol::Tolerances;
