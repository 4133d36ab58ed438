//! Consumers of a trained field: dense grid evaluation, point-cloud
//! deformation, surface-point extraction, and open-surface meshing.

mod mc;
mod mc_tables;
mod mesh;

pub use mc::{extract_mesh, ExtractStats};
pub use mesh::{compute_boundary_edges, mesh_boundary_loops, BoundaryLoop, Mesh};

use crate::field::DistanceField;
use crate::math::{self, Vec3};
use crate::training::pull_steps;
use alloc::vec::Vec;
use rand::Rng;

/// Axis-aligned box in scene units.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    /// The working cube `[-1, 1]^3`.
    pub fn unit_cube() -> Self {
        Self {
            min: [-1.0, -1.0, -1.0],
            max: [1.0, 1.0, 1.0],
        }
    }

    pub fn extent(&self) -> Vec3 {
        math::sub(self.max, self.min)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        for a in 0..3 {
            if !(self.max[a] - self.min[a] > 0.0) {
                return Err(GeometryError::EmptyExtent { axis: a });
            }
        }
        Ok(())
    }
}

/// Dense field samples on a lattice that includes both box corners.
/// Values are stored x-major: index `(i, j, k) -> (i * ny + j) * nz + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub bbox: Aabb,
    pub resolution: [usize; 3],
    pub values: Vec<f64>,
}

impl Grid {
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.resolution[1] + j) * self.resolution[2] + k
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    /// Lattice point coordinates; endpoints coincide with the box corners.
    pub fn lattice_point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        lattice_point(&self.bbox, self.resolution, [i, j, k])
    }
}

#[inline]
pub(crate) fn lattice_point(bbox: &Aabb, resolution: [usize; 3], idx: [usize; 3]) -> Vec3 {
    let mut p = [0.0; 3];
    for a in 0..3 {
        let t = idx[a] as f64 / (resolution[a] - 1) as f64;
        p[a] = bbox.min[a] + t * (bbox.max[a] - bbox.min[a]);
    }
    p
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryError {
    EmptyExtent { axis: usize },
    ResolutionTooLow { min: usize, got: [usize; 3] },
    BadStepParams,
}

impl core::fmt::Display for GeometryError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GeometryError::EmptyExtent { axis } => {
                write!(f, "bounding box has non-positive extent on axis {axis}")
            }
            GeometryError::ResolutionTooLow { min, got } => {
                write!(f, "resolution {got:?} below the minimum of {min} per axis")
            }
            GeometryError::BadStepParams => {
                write!(f, "steps must be >= 1 and step fraction in (0, 1]")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GeometryError {}

/// Evaluates the field on a dense lattice, slab by slab so memory stays
/// bounded at high resolutions.
pub fn eval_grid(
    field: &dyn DistanceField,
    bbox: &Aabb,
    resolution: [usize; 3],
) -> Result<Grid, GeometryError> {
    bbox.validate()?;
    if resolution.iter().any(|&r| r < 2) {
        return Err(GeometryError::ResolutionTooLow {
            min: 2,
            got: resolution,
        });
    }
    let [nx, ny, nz] = resolution;
    let mut values = Vec::with_capacity(nx * ny * nz);
    let mut slab = Vec::with_capacity(ny * nz);
    let mut slab_values = Vec::new();
    for i in 0..nx {
        slab.clear();
        for j in 0..ny {
            for k in 0..nz {
                slab.push(lattice_point(bbox, resolution, [i, j, k]));
            }
        }
        field.eval_batch(&slab, &mut slab_values);
        values.extend_from_slice(&slab_values);
    }
    Ok(Grid {
        bbox: *bbox,
        resolution,
        values,
    })
}

/// Point sets and mean residuals recorded while pulling a cloud onto the
/// zero level set; the input snapshot is step 0.
#[derive(Debug, Clone)]
pub struct DeformationTrace {
    pub steps: Vec<Vec<Vec3>>,
    pub mean_residuals: Vec<f64>,
}

impl DeformationTrace {
    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    pub fn final_points(&self) -> &[Vec3] {
        self.steps.last().expect("at least the input snapshot")
    }

    pub fn final_residual(&self) -> f64 {
        *self.mean_residuals.last().expect("nonempty")
    }
}

/// Iterated partial pulling: each step moves every point by
/// `step_fraction * f(p)` along the negative normalized gradient.
/// Degenerate-gradient points stay frozen for that step.
pub fn deform_cloud(
    field: &dyn DistanceField,
    points: &[Vec3],
    steps: usize,
    step_fraction: f64,
    eps_grad: f64,
) -> Result<DeformationTrace, GeometryError> {
    if steps == 0 || !(step_fraction > 0.0 && step_fraction <= 1.0) {
        return Err(GeometryError::BadStepParams);
    }
    let mut current = points.to_vec();
    let mut trace = DeformationTrace {
        steps: Vec::with_capacity(steps + 1),
        mean_residuals: Vec::with_capacity(steps + 1),
    };
    let mut grads = Vec::new();
    for _ in 0..steps {
        field.eval_with_grad_batch(&current, &mut grads);
        let residual = grads.iter().map(|g| g.value).sum::<f64>() / current.len().max(1) as f64;
        trace.steps.push(current.clone());
        trace.mean_residuals.push(residual);
        for (p, g) in current.iter_mut().zip(grads.iter()) {
            if let Some(n) = math::normalize(g.grad, eps_grad) {
                *p = math::sub(*p, math::scale(n, step_fraction * g.value));
            }
        }
    }
    let mut final_values = Vec::new();
    field.eval_batch(&current, &mut final_values);
    let residual = final_values.iter().sum::<f64>() / current.len().max(1) as f64;
    trace.steps.push(current);
    trace.mean_residuals.push(residual);
    Ok(trace)
}

/// Points filtered onto the zero level set by pull-and-filter sampling.
#[derive(Debug, Clone)]
pub struct SurfaceExtraction {
    pub points: Vec<Vec3>,
    pub kept_fraction: f64,
}

/// Pulls `n` random points from the working cube toward the zero set
/// (10 iterations at half steps) and keeps those with final field value
/// below `residual_threshold`.
pub fn extract_surface_points<R: Rng>(
    field: &dyn DistanceField,
    n: usize,
    residual_threshold: f64,
    rng: &mut R,
) -> SurfaceExtraction {
    assert!(n >= 1, "need at least one sample");
    let cube = Aabb::unit_cube();
    let start: Vec<Vec3> = (0..n)
        .map(|_| {
            [
                rng.gen_range(cube.min[0]..cube.max[0]),
                rng.gen_range(cube.min[1]..cube.max[1]),
                rng.gen_range(cube.min[2]..cube.max[2]),
            ]
        })
        .collect();
    let (points, values) = pull_steps(field, &start, 10, 0.5, crate::training::DEFAULT_EPS_GRAD);
    let mut kept = Vec::new();
    for (p, v) in points.into_iter().zip(values.into_iter()) {
        if v < residual_threshold {
            kept.push(p);
        }
    }
    let kept_fraction = kept.len() as f64 / n as f64;
    SurfaceExtraction {
        points: kept,
        kept_fraction,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AnalyticField;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_matches_direct_eval_bit_exactly() {
        let f = AnalyticField::Sphere { radius: 0.8 };
        let grid = eval_grid(&f, &Aabb::unit_cube(), [5, 4, 3]).unwrap();
        for i in 0..5 {
            for j in 0..4 {
                for k in 0..3 {
                    let p = grid.lattice_point(i, j, k);
                    assert_eq!(grid.value(i, j, k), f.eval(p));
                }
            }
        }
    }

    #[test]
    fn grid_plane_slices() {
        // |z| on a res-3 lattice of [-1,1]^3: z slices are 1, 0, 1.
        let grid = eval_grid(&AnalyticField::Plane, &Aabb::unit_cube(), [3, 3, 3]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(grid.value(i, j, 0), 1.0);
                assert_eq!(grid.value(i, j, 1), 0.0);
                assert_eq!(grid.value(i, j, 2), 1.0);
            }
        }
    }

    #[test]
    fn grid_res2_hits_corners() {
        let grid = eval_grid(&AnalyticField::Plane, &Aabb::unit_cube(), [2, 2, 2]).unwrap();
        assert_eq!(grid.values.len(), 8);
        assert_eq!(grid.lattice_point(0, 0, 0), [-1.0, -1.0, -1.0]);
        assert_eq!(grid.lattice_point(1, 1, 1), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn grid_min_bounded_by_lattice_spacing() {
        // Some lattice point must lie within half a cell diagonal of the
        // sphere surface.
        let f = AnalyticField::Sphere { radius: 0.8 };
        let res = 33usize;
        let grid = eval_grid(&f, &Aabb::unit_cube(), [res; 3]).unwrap();
        let cell = 2.0 / (res - 1) as f64;
        let half_diag = 0.5 * cell * math::sqrt(3.0);
        let min = grid.values.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min <= half_diag, "min {min} vs half diagonal {half_diag}");
    }

    #[test]
    fn rejects_degenerate_grid_requests() {
        let f = AnalyticField::Plane;
        assert!(matches!(
            eval_grid(&f, &Aabb::unit_cube(), [1, 4, 4]),
            Err(GeometryError::ResolutionTooLow { .. })
        ));
        let flat = Aabb {
            min: [0.0, 0.0, 0.0],
            max: [1.0, 0.0, 1.0],
        };
        assert!(matches!(
            eval_grid(&f, &flat, [4, 4, 4]),
            Err(GeometryError::EmptyExtent { axis: 1 })
        ));
    }

    #[test]
    fn deform_full_step_lands_on_sphere() {
        let f = AnalyticField::Sphere { radius: 1.0 };
        let trace = deform_cloud(&f, &[[2.0, 0.0, 0.0]], 1, 1.0, 1e-8).unwrap();
        assert_eq!(trace.step_count(), 2);
        assert!(math::dist(trace.final_points()[0], [1.0, 0.0, 0.0]) < 1e-12);
        assert!(trace.final_residual() < 1e-12);
    }

    #[test]
    fn deform_half_step_formula() {
        let f = AnalyticField::Sphere { radius: 1.0 };
        let trace = deform_cloud(&f, &[[2.0, 0.0, 0.0]], 1, 0.5, 1e-8).unwrap();
        assert!(math::dist(trace.final_points()[0], [1.5, 0.0, 0.0]) < 1e-12);
    }

    #[test]
    fn deform_is_idempotent_after_convergence() {
        let f = AnalyticField::Disk { radius: 0.8 };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<math::Vec3> = (0..200)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ]
            })
            .collect();
        let first = deform_cloud(&f, &pts, 5, 1.0, 1e-8).unwrap();
        let second = deform_cloud(&f, first.final_points(), 1, 1.0, 1e-8).unwrap();
        let moved: f64 = first
            .final_points()
            .iter()
            .zip(second.final_points().iter())
            .map(|(&a, &b)| math::dist(a, b))
            .fold(0.0, f64::max);
        assert!(moved < 1e-10, "second pass moved points by {moved}");
    }

    #[test]
    fn extract_surface_points_on_sphere() {
        let f = AnalyticField::Sphere { radius: 0.8 };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let threshold = 1e-6;
        let out = extract_surface_points(&f, 2000, threshold, &mut rng);
        assert!(out.kept_fraction > 0.9);
        for p in &out.points {
            assert!((math::norm(*p) - 0.8).abs() < threshold);
        }
        // Infinite threshold keeps every non-degenerate point.
        let out = extract_surface_points(&f, 500, f64::INFINITY, &mut rng);
        assert!(out.kept_fraction >= 0.99);
    }
}
