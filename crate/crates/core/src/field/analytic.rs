//! Closed-form unsigned distance fields used as test oracles.

use super::{assert_finite, DistanceField, FieldGradient};
use crate::math::{self, Vec3};

/// Exact unsigned distance to a simple shape, with exact gradients wherever
/// they are defined.
///
/// At points where the gradient is undefined (the zero set or a medial
/// point), the returned gradient follows the same one-sided conventions as
/// the network activations: the derivative of `|x|` at 0 is +1. At the
/// sphere's center, where no direction is preferable, the zero vector is
/// returned so callers can flag the sample as degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum AnalyticField {
    /// The plane `z = 0`: `d = |z|`.
    Plane,
    /// A sphere of the given radius centered at the origin: `d = | |p| - R |`.
    Sphere { radius: f64 },
    /// A closed disk of the given radius in the plane `z = 0` — an open
    /// surface with a rim.
    Disk { radius: f64 },
    /// Two parallel planes `z = +offset` and `z = -offset`.
    ParallelPlanes { offset: f64 },
}

#[inline]
fn sign_pos(x: f64) -> f64 {
    // abs-activation convention: derivative at 0 is +1.
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

impl DistanceField for AnalyticField {
    fn eval(&self, p: Vec3) -> f64 {
        assert_finite(p);
        match *self {
            AnalyticField::Plane => math::abs(p[2]),
            AnalyticField::Sphere { radius } => math::abs(math::norm(p) - radius),
            AnalyticField::Disk { radius } => {
                let rho = math::hypot(p[0], p[1]);
                if rho <= radius {
                    math::abs(p[2])
                } else {
                    math::hypot(rho - radius, p[2])
                }
            }
            AnalyticField::ParallelPlanes { offset } => {
                let upper = math::abs(p[2] - offset);
                let lower = math::abs(p[2] + offset);
                upper.min(lower)
            }
        }
    }

    fn eval_with_grad(&self, p: Vec3) -> FieldGradient {
        assert_finite(p);
        match *self {
            AnalyticField::Plane => FieldGradient {
                value: math::abs(p[2]),
                grad: [0.0, 0.0, sign_pos(p[2])],
            },
            AnalyticField::Sphere { radius } => {
                let r = math::norm(p);
                if r == 0.0 {
                    // Medial point: no direction is meaningful.
                    return FieldGradient {
                        value: radius,
                        grad: [0.0, 0.0, 0.0],
                    };
                }
                let s = sign_pos(r - radius);
                FieldGradient {
                    value: math::abs(r - radius),
                    grad: math::scale(p, s / r),
                }
            }
            AnalyticField::Disk { radius } => {
                let rho = math::hypot(p[0], p[1]);
                if rho <= radius {
                    FieldGradient {
                        value: math::abs(p[2]),
                        grad: [0.0, 0.0, sign_pos(p[2])],
                    }
                } else {
                    let u = rho - radius;
                    let d = math::hypot(u, p[2]);
                    if d == 0.0 {
                        // Exactly on the rim.
                        return FieldGradient {
                            value: 0.0,
                            grad: [0.0, 0.0, 1.0],
                        };
                    }
                    let radial = u / (rho * d);
                    FieldGradient {
                        value: d,
                        grad: [p[0] * radial, p[1] * radial, p[2] / d],
                    }
                }
            }
            AnalyticField::ParallelPlanes { offset } => {
                let upper = math::abs(p[2] - offset);
                let lower = math::abs(p[2] + offset);
                if upper <= lower {
                    FieldGradient {
                        value: upper,
                        grad: [0.0, 0.0, sign_pos(p[2] - offset)],
                    }
                } else {
                    FieldGradient {
                        value: lower,
                        grad: [0.0, 0.0, sign_pos(p[2] + offset)],
                    }
                }
            }
        }
    }

    fn kink_gap(&self, p: Vec3) -> f64 {
        match *self {
            AnalyticField::Plane => self.eval(p),
            AnalyticField::Sphere { .. } => self.eval(p).min(math::norm(p)),
            AnalyticField::Disk { radius } => {
                // The rim cylinder rho = R is only C^1; keep finite-difference
                // stencils away from it as well as from the surface.
                let rho = math::hypot(p[0], p[1]);
                self.eval(p).min(math::abs(rho - radius))
            }
            AnalyticField::ParallelPlanes { .. } => self.eval(p).min(math::abs(p[2])),
        }
    }
}

impl AnalyticField {
    /// Uniform samples of the shape's surface; used for ground-truth point
    /// sets. `extent` bounds open shapes that are infinite in principle
    /// (plane and parallel planes are sampled on `[-extent, extent]^2`).
    pub fn surface_area_hint(&self, extent: f64) -> f64 {
        match *self {
            AnalyticField::Plane => 4.0 * extent * extent,
            AnalyticField::Sphere { radius } => 4.0 * core::f64::consts::PI * radius * radius,
            AnalyticField::Disk { radius } => core::f64::consts::PI * radius * radius,
            AnalyticField::ParallelPlanes { .. } => 8.0 * extent * extent,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::norm;

    #[test]
    fn sphere_closed_forms() {
        let f = AnalyticField::Sphere { radius: 1.0 };
        assert_eq!(f.eval([2.0, 0.0, 0.0]), 1.0);
        let g = f.eval_with_grad([2.0, 0.0, 0.0]);
        assert_eq!(g.value, 1.0);
        assert_eq!(g.grad, [1.0, 0.0, 0.0]);

        // Inside the sphere the distance decreases moving outward.
        let g = f.eval_with_grad([0.5, 0.0, 0.0]);
        assert_eq!(g.value, 0.5);
        assert_eq!(g.grad, [-1.0, 0.0, 0.0]);
    }

    #[test]
    fn plane_on_surface() {
        let f = AnalyticField::Plane;
        assert_eq!(f.eval([5.0, -3.0, 0.0]), 0.0);
        assert_eq!(f.eval([1.0, 1.0, -0.25]), 0.25);
    }

    #[test]
    fn disk_branches() {
        let f = AnalyticField::Disk { radius: 1.0 };
        // Above the interior: plain |z|.
        assert!((f.eval([0.3, 0.4, 0.2]) - 0.2).abs() < 1e-15);
        // Beyond the rim in-plane: distance to the rim circle.
        assert!((f.eval([2.0, 0.0, 0.0]) - 1.0).abs() < 1e-15);
        // Beyond the rim and above: hypotenuse to the rim.
        let d = f.eval([2.0, 0.0, 1.0]);
        assert!((d - (2.0f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn parallel_planes_nearest_sheet() {
        let f = AnalyticField::ParallelPlanes { offset: 0.5 };
        assert_eq!(f.eval([0.0, 0.0, 0.5]), 0.0);
        assert_eq!(f.eval([0.0, 0.0, -0.5]), 0.0);
        assert_eq!(f.eval([0.0, 0.0, 0.0]), 0.5);
        assert_eq!(f.eval([0.0, 0.0, 0.8]), 0.3f64.min(1.3));
        let g = f.eval_with_grad([0.0, 0.0, 0.3]);
        assert_eq!(g.grad, [0.0, 0.0, -1.0]);
    }

    #[test]
    fn gradients_match_finite_differences_at_generic_points() {
        let fields = [
            AnalyticField::Plane,
            AnalyticField::Sphere { radius: 0.8 },
            AnalyticField::Disk { radius: 0.8 },
            AnalyticField::ParallelPlanes { offset: 0.3 },
        ];
        let pts = [
            [0.31, -0.22, 0.41],
            [-0.73, 0.11, -0.35],
            [1.21, 0.52, 0.63],
            [0.05, -0.95, 0.27],
        ];
        let h = 1e-6;
        for f in fields {
            for p in pts {
                if f.kink_gap(p) < 10.0 * h {
                    continue;
                }
                let g = f.eval_with_grad(p);
                assert!((g.value - f.eval(p)).abs() < 1e-15);
                for axis in 0..3 {
                    let mut pp = p;
                    pp[axis] += h;
                    let mut pm = p;
                    pm[axis] -= h;
                    let fd = (f.eval(pp) - f.eval(pm)) / (2.0 * h);
                    assert!(
                        (fd - g.grad[axis]).abs() < 1e-9,
                        "{f:?} at {p:?} axis {axis}: fd {fd} vs {g:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn gradient_is_unit_off_the_surface() {
        let f = AnalyticField::Disk { radius: 0.8 };
        for p in [[1.2, 0.3, 0.4], [0.1, 0.2, 0.5], [-0.9, -0.9, -0.1]] {
            let g = f.eval_with_grad(p);
            assert!((norm(g.grad) - 1.0).abs() < 1e-12);
        }
    }
}
