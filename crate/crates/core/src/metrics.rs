//! Quantitative evaluation: Chamfer distance, band-restricted field error
//! against analytic oracles, and finite-difference gradient checks.

use crate::field::DistanceField;
use crate::geometry::{lattice_point, Aabb};
use crate::math::{self, Vec3};
use crate::spatial::KdTree;
use alloc::vec::Vec;
use rand::Rng;

/// Step used by gradient checks.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ChamferMode {
    /// Mean squared nearest-neighbor distances (the far-loss convention).
    Squared,
    /// Mean nearest-neighbor distances (the reporting convention).
    Euclidean,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    EmptySet,
    EmptyBand,
    AllPointsSkipped,
    BadBand(f64),
}

impl core::fmt::Display for MetricsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MetricsError::EmptySet => write!(f, "chamfer distance needs two nonempty sets"),
            MetricsError::EmptyBand => write!(f, "no lattice point falls inside the band"),
            MetricsError::AllPointsSkipped => {
                write!(f, "every sampled point was too close to a gradient kink")
            }
            MetricsError::BadBand(b) => write!(f, "band must be positive, got {b}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MetricsError {}

/// Symmetric two-term Chamfer distance:
/// `mean_a min_b d(a,b) + mean_b min_a d(b,a)`, with `d` squared or plain
/// Euclidean depending on the mode. Exact nearest neighbors.
pub fn chamfer(a: &[Vec3], b: &[Vec3], mode: ChamferMode) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let tree_a = KdTree::build(a);
    let tree_b = KdTree::build(b);
    let term = |points: &[Vec3], tree: &KdTree| -> f64 {
        let sum: f64 = points
            .iter()
            .map(|&p| {
                let d2 = tree.nearest(p).expect("nonempty").dist_sq;
                match mode {
                    ChamferMode::Squared => d2,
                    ChamferMode::Euclidean => math::sqrt(d2),
                }
            })
            .sum();
        sum / points.len() as f64
    };
    Ok(term(a, &tree_b) + term(b, &tree_a))
}

/// Brute-force Chamfer oracle, `O(n * m)`.
pub fn chamfer_brute(a: &[Vec3], b: &[Vec3], mode: ChamferMode) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let term = |from: &[Vec3], to: &[Vec3]| -> f64 {
        let sum: f64 = from
            .iter()
            .map(|&p| {
                let d2 = to
                    .iter()
                    .map(|&q| math::dist_sq(p, q))
                    .fold(f64::INFINITY, f64::min);
                match mode {
                    ChamferMode::Squared => d2,
                    ChamferMode::Euclidean => math::sqrt(d2),
                }
            })
            .sum();
        sum / from.len() as f64
    };
    Ok(term(a, b) + term(b, a))
}

/// Mean and max absolute error of `field` against `oracle` over the lattice
/// points whose oracle distance is below `band`.
pub fn udf_error(
    field: &dyn DistanceField,
    oracle: &dyn DistanceField,
    bbox: &Aabb,
    resolution: [usize; 3],
    band: f64,
) -> Result<(f64, f64), MetricsError> {
    if !(band > 0.0) {
        return Err(MetricsError::BadBand(band));
    }
    let [nx, ny, nz] = resolution;
    let mut sum = 0.0;
    let mut worst = 0.0f64;
    let mut count = 0usize;
    let mut slab = Vec::with_capacity(ny * nz);
    let mut oracle_vals = Vec::with_capacity(ny * nz);
    let mut field_vals = Vec::new();
    for i in 0..nx {
        slab.clear();
        oracle_vals.clear();
        for j in 0..ny {
            for k in 0..nz {
                let p = lattice_point(bbox, resolution, [i, j, k]);
                slab.push(p);
                oracle_vals.push(oracle.eval(p));
            }
        }
        field.eval_batch(&slab, &mut field_vals);
        for (f, o) in field_vals.iter().zip(oracle_vals.iter()) {
            if *o < band {
                let e = math::abs(f - o);
                sum += e;
                worst = worst.max(e);
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(MetricsError::EmptyBand);
    }
    Ok((sum / count as f64, worst))
}

/// Compares analytic gradients against central finite differences at up to
/// `n` generic points sampled uniformly in the working cube, returning the
/// max relative error. Points whose stencil straddles a gradient kink are
/// resampled; gives up after `50 * n` attempts.
pub fn grad_check<R: Rng>(
    field: &dyn DistanceField,
    n: usize,
    rng: &mut R,
) -> Result<f64, MetricsError> {
    assert!(n >= 1);
    let h = FD_STEP;
    let mut worst = 0.0f64;
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    while accepted < n && attempts < 50 * n {
        attempts += 1;
        let p: Vec3 = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        if !field.fd_stencil_generic(p, h) {
            continue;
        }
        let g = field.eval_with_grad(p);
        let mut fd = [0.0; 3];
        for axis in 0..3 {
            let mut pp = p;
            pp[axis] += h;
            let mut pm = p;
            pm[axis] -= h;
            fd[axis] = (field.eval(pp) - field.eval(pm)) / (2.0 * h);
        }
        let rel = math::dist(fd, g.grad) / math::norm(g.grad).max(1e-12);
        worst = worst.max(rel);
        accepted += 1;
    }
    if accepted == 0 {
        return Err(MetricsError::AllPointsSkipped);
    }
    Ok(worst)
}

/// Quantitative evaluation of a trained field.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    /// Euclidean Chamfer between extracted surface points and the reference
    /// surface samples.
    pub chamfer: f64,
    /// Mean absolute field error against the oracle inside the band.
    pub udf_mae_band: f64,
    /// Max absolute field error inside the band.
    pub udf_max_band: f64,
    pub grad_check_max_rel_err: f64,
    pub boundary_loop_count: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{AnalyticField, FieldArch, FieldGradient, NeuralField};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<Vec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ]
            })
            .collect()
    }

    #[test]
    fn chamfer_identical_sets_is_zero() {
        let a = random_points(50, 1);
        assert_eq!(chamfer(&a, &a, ChamferMode::Squared).unwrap(), 0.0);
        assert_eq!(chamfer(&a, &a, ChamferMode::Euclidean).unwrap(), 0.0);
    }

    #[test]
    fn chamfer_hand_example() {
        // Unit-separated singletons: both modes give 1 + 1 = 2.
        let a = [[0.0, 0.0, 0.0]];
        let b = [[1.0, 0.0, 0.0]];
        assert_eq!(chamfer(&a, &b, ChamferMode::Squared).unwrap(), 2.0);
        assert_eq!(chamfer(&a, &b, ChamferMode::Euclidean).unwrap(), 2.0);
    }

    #[test]
    fn chamfer_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..20 {
            let n = rng.gen_range(1..=150);
            let m = rng.gen_range(1..=100);
            let a = random_points(n, 100 + trial);
            let b = random_points(m, 200 + trial);
            for mode in [ChamferMode::Squared, ChamferMode::Euclidean] {
                let fast = chamfer(&a, &b, mode).unwrap();
                let brute = chamfer_brute(&a, &b, mode).unwrap();
                assert_eq!(fast, brute, "trial {trial} {mode:?}");
            }
        }
    }

    #[test]
    fn chamfer_is_symmetric() {
        let a = random_points(40, 4);
        let b = random_points(70, 5);
        for mode in [ChamferMode::Squared, ChamferMode::Euclidean] {
            assert_eq!(
                chamfer(&a, &b, mode).unwrap(),
                chamfer(&b, &a, mode).unwrap()
            );
        }
    }

    #[test]
    fn chamfer_translation_shift_is_bounded() {
        // Translating one set by v changes each Euclidean term by at most
        // |v|, so the total moves by at most 2 |v|.
        let a = random_points(30, 6);
        let b = random_points(45, 7);
        let base = chamfer(&a, &b, ChamferMode::Euclidean).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let v: Vec3 = [
                rng.gen_range(-0.2..0.2),
                rng.gen_range(-0.2..0.2),
                rng.gen_range(-0.2..0.2),
            ];
            let shifted: Vec<Vec3> = b.iter().map(|&p| math::add(p, v)).collect();
            let moved = chamfer(&a, &shifted, ChamferMode::Euclidean).unwrap();
            assert!((moved - base).abs() <= 2.0 * math::norm(v) + 1e-12);
        }
    }

    #[test]
    fn chamfer_rejects_empty_sets() {
        let a = random_points(3, 9);
        assert!(matches!(
            chamfer(&a, &[], ChamferMode::Squared),
            Err(MetricsError::EmptySet)
        ));
    }

    #[test]
    fn udf_error_zero_for_matching_fields() {
        let f = AnalyticField::Sphere { radius: 0.8 };
        let (mae, max) = udf_error(&f, &f, &Aabb::unit_cube(), [16; 3], 0.3).unwrap();
        assert_eq!(mae, 0.0);
        assert_eq!(max, 0.0);
    }

    /// A field shifted by a constant must show exactly that error.
    struct Shifted(AnalyticField, f64);
    impl DistanceField for Shifted {
        fn eval(&self, p: Vec3) -> f64 {
            self.0.eval(p) + self.1
        }
        fn eval_with_grad(&self, p: Vec3) -> FieldGradient {
            let mut g = self.0.eval_with_grad(p);
            g.value += self.1;
            g
        }
    }

    #[test]
    fn udf_error_uniform_shift() {
        let oracle = AnalyticField::Disk { radius: 0.8 };
        let field = Shifted(oracle, 0.01);
        let (mae, max) = udf_error(&field, &oracle, &Aabb::unit_cube(), [24; 3], 0.3).unwrap();
        assert!((mae - 0.01).abs() < 1e-12);
        assert!((max - 0.01).abs() < 1e-12);
    }

    #[test]
    fn udf_error_empty_band_is_reported() {
        let f = AnalyticField::Sphere { radius: 50.0 };
        assert!(matches!(
            udf_error(&f, &f, &Aabb::unit_cube(), [8; 3], 0.01),
            Err(MetricsError::EmptyBand)
        ));
        assert!(matches!(
            udf_error(&f, &f, &Aabb::unit_cube(), [8; 3], -1.0),
            Err(MetricsError::BadBand(_))
        ));
    }

    #[test]
    fn grad_check_analytic_sphere_is_tight() {
        let f = AnalyticField::Sphere { radius: 0.8 };
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let err = grad_check(&f, 100, &mut rng).unwrap();
        assert!(err < 1e-9, "max rel err {err}");
    }

    #[test]
    fn grad_check_fresh_neural_field() {
        let field = NeuralField::init(FieldArch::default(), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let err = grad_check(&field, 100, &mut rng).unwrap();
        assert!(err < 1e-3, "max rel err {err}");
    }
}
