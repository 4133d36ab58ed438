//! Scalar math shims and small fixed-size vector/matrix helpers.
//!
//! All computation is 64-bit. The shims route through `std` intrinsics when
//! available and through `libm` in `no_std` builds.

/// 3-vector in scene units.
pub type Vec3 = [f64; 3];

/// Row-major 3x3 matrix.
pub type Mat3 = [[f64; 3]; 3];

#[cfg(feature = "std")]
mod scalar {
    #[inline(always)]
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    #[inline(always)]
    pub fn sin(x: f64) -> f64 {
        x.sin()
    }
    #[inline(always)]
    pub fn cos(x: f64) -> f64 {
        x.cos()
    }
    #[inline(always)]
    pub fn abs(x: f64) -> f64 {
        x.abs()
    }
    #[inline(always)]
    pub fn hypot(x: f64, y: f64) -> f64 {
        x.hypot(y)
    }
    #[inline(always)]
    pub fn ln(x: f64) -> f64 {
        x.ln()
    }
    #[inline(always)]
    pub fn exp(x: f64) -> f64 {
        x.exp()
    }
    #[inline(always)]
    pub fn powi(x: f64, n: i32) -> f64 {
        x.powi(n)
    }
}

#[cfg(not(feature = "std"))]
mod scalar {
    #[inline(always)]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
    #[inline(always)]
    pub fn sin(x: f64) -> f64 {
        libm::sin(x)
    }
    #[inline(always)]
    pub fn cos(x: f64) -> f64 {
        libm::cos(x)
    }
    #[inline(always)]
    pub fn abs(x: f64) -> f64 {
        libm::fabs(x)
    }
    #[inline(always)]
    pub fn hypot(x: f64, y: f64) -> f64 {
        libm::hypot(x, y)
    }
    #[inline(always)]
    pub fn ln(x: f64) -> f64 {
        libm::log(x)
    }
    #[inline(always)]
    pub fn exp(x: f64) -> f64 {
        libm::exp(x)
    }
    #[inline(always)]
    pub fn powi(x: f64, n: i32) -> f64 {
        let mut r = 1.0;
        let mut base = if n < 0 { 1.0 / x } else { x };
        let mut e = n.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                r *= base;
            }
            base *= base;
            e >>= 1;
        }
        r
    }
}

pub use scalar::{abs, cos, exp, hypot, ln, powi, sin, sqrt};

#[inline(always)]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline(always)]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline(always)]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline(always)]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline(always)]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline(always)]
pub fn norm_sq(a: Vec3) -> f64 {
    dot(a, a)
}

#[inline(always)]
pub fn norm(a: Vec3) -> f64 {
    sqrt(norm_sq(a))
}

#[inline(always)]
pub fn dist_sq(a: Vec3, b: Vec3) -> f64 {
    norm_sq(sub(a, b))
}

#[inline(always)]
pub fn dist(a: Vec3, b: Vec3) -> f64 {
    sqrt(dist_sq(a, b))
}

/// Returns `a / |a|`, or `None` when `|a| < eps`.
#[inline]
pub fn normalize(a: Vec3, eps: f64) -> Option<Vec3> {
    let n = norm(a);
    if n < eps {
        None
    } else {
        Some(scale(a, 1.0 / n))
    }
}

#[inline(always)]
pub fn is_finite3(a: Vec3) -> bool {
    a[0].is_finite() && a[1].is_finite() && a[2].is_finite()
}

/// `m * v` for a row-major matrix.
#[inline]
pub fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

/// Column `j` of a row-major matrix.
#[inline]
pub fn mat_col(m: &Mat3, j: usize) -> Vec3 {
    [m[0][j], m[1][j], m[2][j]]
}

#[inline]
pub fn mat_transpose(m: &Mat3) -> Mat3 {
    [
        [m[0][0], m[1][0], m[2][0]],
        [m[0][1], m[1][1], m[2][1]],
        [m[0][2], m[1][2], m[2][2]],
    ]
}

#[inline]
pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in a.iter().enumerate() {
        for j in 0..3 {
            out[i][j] = row[0] * b[0][j] + row[1] * b[1][j] + row[2] * b[2][j];
        }
    }
    out
}

#[inline]
pub fn mat_det(m: &Mat3) -> f64 {
    dot(m[0], cross(m[1], m[2]))
}

/// Max-abs entry of `m^T m - I`; zero for an orthonormal matrix.
pub fn orthonormality_defect(m: &Mat3) -> f64 {
    let t = mat_transpose(m);
    let p = mat_mul(&t, m);
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { 1.0 } else { 0.0 };
            let d = abs(p[i][j] - target);
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Deterministic orthonormal basis completion: returns two unit vectors
/// spanning the plane orthogonal to the unit vector `n`.
pub fn orthonormal_tangents(n: Vec3) -> (Vec3, Vec3) {
    // Duff et al. branchless construction; stable for any unit n.
    let sign = if n[2] >= 0.0 { 1.0 } else { -1.0 };
    let a = -1.0 / (sign + n[2]);
    let b = n[0] * n[1] * a;
    let t1 = [1.0 + sign * n[0] * n[0] * a, sign * b, -sign * n[0]];
    let t2 = [b, sign + n[1] * n[1] * a, -n[1]];
    (t1, t2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_is_orthogonal() {
        let a = [1.0, 2.0, 3.0];
        let b = [-0.5, 0.25, 2.0];
        let c = cross(a, b);
        assert!(abs(dot(a, c)) < 1e-15);
        assert!(abs(dot(b, c)) < 1e-15);
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        for n in [
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
            [1.0, 0.0, 0.0],
            [0.577350269189626, 0.577350269189626, 0.577350269189626],
            [-0.267261241912424, 0.534522483824849, -0.801783725737273],
        ] {
            let (t1, t2) = orthonormal_tangents(n);
            assert!(abs(norm(t1) - 1.0) < 1e-12);
            assert!(abs(norm(t2) - 1.0) < 1e-12);
            assert!(abs(dot(t1, t2)) < 1e-12);
            assert!(abs(dot(t1, n)) < 1e-12);
            assert!(abs(dot(t2, n)) < 1e-12);
            let m = [
                [t1[0], t2[0], n[0]],
                [t1[1], t2[1], n[1]],
                [t1[2], t2[2], n[2]],
            ];
            assert!(orthonormality_defect(&m) < 1e-12);
            assert!(abs(mat_det(&m) - 1.0) < 1e-12);
        }
    }

    #[test]
    fn powi_matches_repeated_multiplication() {
        let x = 1.7f64;
        assert!(abs(powi(x, 5) - x * x * x * x * x) < 1e-12);
        assert!(abs(powi(x, 0) - 1.0) < 1e-15);
    }
}
