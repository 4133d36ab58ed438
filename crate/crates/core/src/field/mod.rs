//! Unsigned distance field representations.
//!
//! The trait [`DistanceField`] is implemented by the trainable coordinate MLP
//! ([`NeuralField`]) and by closed-form test oracles ([`AnalyticField`]).
//! Both expose forward evaluation and exact input-space gradients; only the
//! neural field has parameters and a reverse pass over them.

mod analytic;
mod arch;
mod encoding;
mod neural;

pub use analytic::AnalyticField;
pub use arch::FieldArch;
pub use encoding::{encode, encode_into, encoded_dim};
pub use neural::{BatchBuffers, NeuralField, ParamGrad};

use crate::math::Vec3;
use alloc::vec::Vec;

/// Field value together with its input-space gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldGradient {
    /// Unsigned distance at the query point (scene units).
    pub value: f64,
    /// Gradient of the field with respect to the query point.
    pub grad: Vec3,
}

/// A differentiable scalar field `R^3 -> R>=0`.
///
/// Evaluation and gradient queries are pure reads of an immutable snapshot
/// and are safe to call concurrently.
pub trait DistanceField {
    /// Unsigned distance at `p`. Panics on non-finite input.
    fn eval(&self, p: Vec3) -> f64;

    /// Distance and input gradient at `p`.
    ///
    /// At activation kinks the one-sided subgradient is used: the rectifier
    /// derivative at 0 is 0 and the absolute-value derivative at 0 is +1.
    fn eval_with_grad(&self, p: Vec3) -> FieldGradient;

    /// Batch evaluation; the default loops over [`DistanceField::eval`].
    fn eval_batch(&self, points: &[Vec3], out: &mut Vec<f64>) {
        out.clear();
        out.extend(points.iter().map(|&p| self.eval(p)));
    }

    /// Batch evaluation with gradients.
    fn eval_with_grad_batch(&self, points: &[Vec3], out: &mut Vec<FieldGradient>) {
        out.clear();
        out.extend(points.iter().map(|&p| self.eval_with_grad(p)));
    }

    /// Distance from `p` to the nearest gradient discontinuity (activation
    /// kink or medial axis). Used to exclude non-generic points from
    /// finite-difference checks. `f64::INFINITY` when unknown.
    fn kink_gap(&self, _p: Vec3) -> f64 {
        f64::INFINITY
    }

    /// Whether a central-difference stencil of step `h` at `p` stays clear
    /// of gradient discontinuities, so the finite-difference estimate is
    /// trustworthy there.
    fn fd_stencil_generic(&self, p: Vec3, h: f64) -> bool {
        self.kink_gap(p) > 10.0 * h
    }
}

#[inline]
pub(crate) fn assert_finite(p: Vec3) {
    assert!(
        crate::math::is_finite3(p),
        "non-finite query point {:?} rejected",
        p
    );
}
