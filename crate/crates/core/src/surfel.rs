//! Surfel (2D Gaussian plane) data model, synthetic scenes with analytic
//! oracles, and nearest-neighbor utilities.

use crate::field::{AnalyticField, DistanceField};
use crate::math::{self, Mat3, Vec3};
use crate::spatial::KdTree;
use alloc::string::String;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const ROTATION_TOLERANCE: f64 = 1e-6;

/// A thin 2D Gaussian primitive: center, orientation, and in-plane scales.
/// The plane normal is the third rotation column. Opacity and color are
/// carried for interoperability with real splat exports but are not used by
/// training.
#[derive(Debug, Clone, PartialEq)]
pub struct Surfel {
    pub center: Vec3,
    /// Row-major orthonormal rotation; columns are the two in-plane axes and
    /// the normal.
    pub rotation: Mat3,
    /// Standard deviations along the two in-plane axes (scene units).
    pub scales: [f64; 2],
    pub alpha: Option<f64>,
    pub color: Option<Vec3>,
}

impl Surfel {
    pub fn new(center: Vec3, rotation: Mat3, scales: [f64; 2]) -> Self {
        Self {
            center,
            rotation,
            scales,
            alpha: None,
            color: None,
        }
    }

    /// Unit normal of the surfel plane (third rotation column).
    pub fn normal(&self) -> Vec3 {
        math::mat_col(&self.rotation, 2)
    }

    /// First and second in-plane axes.
    pub fn tangents(&self) -> (Vec3, Vec3) {
        (math::mat_col(&self.rotation, 0), math::mat_col(&self.rotation, 1))
    }

    pub fn opacity(&self) -> f64 {
        self.alpha.unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<(), SurfelDefect> {
        if !math::is_finite3(self.center) {
            return Err(SurfelDefect::NonFiniteCenter);
        }
        let defect = math::orthonormality_defect(&self.rotation);
        if defect >= ROTATION_TOLERANCE {
            return Err(SurfelDefect::NotOrthonormal(defect));
        }
        let det = math::mat_det(&self.rotation);
        if math::abs(det - 1.0) >= ROTATION_TOLERANCE {
            return Err(SurfelDefect::Reflection(det));
        }
        if !(self.scales[0] > 0.0 && self.scales[1] > 0.0)
            || !self.scales[0].is_finite()
            || !self.scales[1].is_finite()
        {
            return Err(SurfelDefect::NonPositiveScale(self.scales));
        }
        if let Some(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(SurfelDefect::OpacityOutOfRange(a));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SurfelDefect {
    NonFiniteCenter,
    NotOrthonormal(f64),
    Reflection(f64),
    NonPositiveScale([f64; 2]),
    OpacityOutOfRange(f64),
}

impl core::fmt::Display for SurfelDefect {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SurfelDefect::NonFiniteCenter => write!(f, "non-finite center"),
            SurfelDefect::NotOrthonormal(d) => {
                write!(f, "rotation not orthonormal (defect {d:.3e})")
            }
            SurfelDefect::Reflection(det) => {
                write!(f, "rotation has determinant {det:.6} (expected +1)")
            }
            SurfelDefect::NonPositiveScale(s) => {
                write!(f, "scales must be positive, got [{}, {}]", s[0], s[1])
            }
            SurfelDefect::OpacityOutOfRange(a) => write!(f, "opacity {a} outside [0, 1]"),
        }
    }
}

/// Similarity transform mapping raw input coordinates into the working cube
/// `[-1, 1]^3`: `working = scale * raw + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SceneTransform {
    pub scale: f64,
    pub translation: Vec3,
}

impl Default for SceneTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl SceneTransform {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            translation: [0.0, 0.0, 0.0],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.scale == 1.0 && self.translation == [0.0, 0.0, 0.0]
    }

    /// Transform fitting the given points into `[-margin, margin]^3`,
    /// centered on their bounding box.
    pub fn fit(points: &[Vec3], margin: f64) -> Self {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for &p in points {
            for a in 0..3 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        let center = [
            0.5 * (min[0] + max[0]),
            0.5 * (min[1] + max[1]),
            0.5 * (min[2] + max[2]),
        ];
        let half = (0..3).map(|a| max[a] - min[a]).fold(0.0f64, f64::max) * 0.5;
        let scale = if half > 0.0 { margin / half } else { 1.0 };
        Self {
            scale,
            translation: math::scale(center, -scale),
        }
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        math::add(math::scale(p, self.scale), self.translation)
    }

    pub fn invert(&self, p: Vec3) -> Vec3 {
        math::scale(math::sub(p, self.translation), 1.0 / self.scale)
    }
}

/// An ordered surfel list plus the transform that carried it into the
/// working cube.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SurfelCloud {
    pub surfels: Vec<Surfel>,
    pub transform: SceneTransform,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CloudError {
    Empty,
    BadSurfel { index: usize, defect: SurfelDefect },
    CenterOutsideCube { index: usize, center: Vec3 },
    KnnOutOfRange { k: usize, len: usize },
    UnknownKind(String),
    InvalidCount(usize),
    NegativeNoise(f64),
}

impl core::fmt::Display for CloudError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CloudError::Empty => write!(f, "surfel cloud is empty"),
            CloudError::BadSurfel { index, defect } => {
                write!(f, "surfel {index}: {defect}")
            }
            CloudError::CenterOutsideCube { index, center } => write!(
                f,
                "surfel {index} center {center:?} outside the working cube [-1,1]^3"
            ),
            CloudError::KnnOutOfRange { k, len } => {
                write!(f, "k = {k} out of range for cloud of {len} surfels")
            }
            CloudError::UnknownKind(s) => write!(f, "unknown scene kind '{s}'"),
            CloudError::InvalidCount(n) => write!(f, "surfel count must be >= 1, got {n}"),
            CloudError::NegativeNoise(s) => write!(f, "noise sigma must be >= 0, got {s}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CloudError {}

impl SurfelCloud {
    pub fn new(surfels: Vec<Surfel>) -> Self {
        Self {
            surfels,
            transform: SceneTransform::identity(),
        }
    }

    pub fn len(&self) -> usize {
        self.surfels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfels.is_empty()
    }

    pub fn center_points(&self) -> Vec<Vec3> {
        self.surfels.iter().map(|s| s.center).collect()
    }

    /// Validates every surfel; `for_training` additionally requires a
    /// nonempty cloud with all centers inside the working cube.
    pub fn validate(&self, for_training: bool) -> Result<(), CloudError> {
        if for_training && self.surfels.is_empty() {
            return Err(CloudError::Empty);
        }
        for (index, s) in self.surfels.iter().enumerate() {
            s.validate()
                .map_err(|defect| CloudError::BadSurfel { index, defect })?;
            if for_training
                && s.center.iter().any(|c| c.abs() > 1.0)
            {
                return Err(CloudError::CenterOutsideCube {
                    index,
                    center: s.center,
                });
            }
        }
        Ok(())
    }

    /// Rescales centers and scales so all centers land in
    /// `[-margin, margin]^3`, composing with any existing transform.
    pub fn normalize(&mut self, margin: f64) {
        let centers = self.center_points();
        let t = SceneTransform::fit(&centers, margin);
        for s in &mut self.surfels {
            s.center = t.apply(s.center);
            s.scales = [s.scales[0] * t.scale, s.scales[1] * t.scale];
        }
        self.transform = SceneTransform {
            scale: t.scale * self.transform.scale,
            translation: math::add(math::scale(self.transform.translation, t.scale), t.translation),
        };
    }
}

/// Per-surfel distance to the k-th nearest distinct center.
pub fn knn_distance(cloud: &SurfelCloud, k: usize) -> Result<Vec<f64>, CloudError> {
    let len = cloud.len();
    if k == 0 || k >= len {
        return Err(CloudError::KnnOutOfRange { k, len });
    }
    let centers = cloud.center_points();
    let tree = KdTree::build(&centers);
    Ok(centers
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let nn = tree.k_nearest(c, k, Some(i));
            math::sqrt(nn[k - 1].dist_sq)
        })
        .collect())
}

/// Synthetic scene kinds with closed-form oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SceneKind {
    /// Surfels on a planar disk patch; oracle is the open disk.
    PlaneDisk,
    /// Surfels on a sphere; oracle is the sphere.
    Sphere,
    /// Surfels on two bounded parallel square sheets; oracle is the pair of
    /// infinite parallel planes (exact on and between the sheets).
    ParallelSheets,
    /// Surfels on a spherical cap; the oracle is the carrier sphere, which
    /// matches the true distance only near the cap itself.
    CurvedSheet,
}

impl core::str::FromStr for SceneKind {
    type Err = CloudError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "disk" | "plane_disk" | "plane-disk" => Ok(SceneKind::PlaneDisk),
            "sphere" => Ok(SceneKind::Sphere),
            "sheets" | "parallel_sheets" | "parallel-sheets" => Ok(SceneKind::ParallelSheets),
            "curved" | "curved_sheet" | "curved-sheet" => Ok(SceneKind::CurvedSheet),
            other => Err(CloudError::UnknownKind(String::from(other))),
        }
    }
}

/// Shape and sampling parameters for the synthetic scene generator. All
/// lengths are in normalized units (the generator emits scenes directly in
/// the working cube, with an identity transform).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GenParams {
    pub disk_radius: f64,
    pub sphere_radius: f64,
    pub sheet_half_side: f64,
    pub sheet_offset: f64,
    pub cap_radius: f64,
    pub cap_half_angle_deg: f64,
    /// Surfel scale range, uniform per axis.
    pub scale_range: [f64; 2],
    /// Number of ground-truth surface samples.
    pub gt_count: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            disk_radius: 0.8,
            sphere_radius: 0.8,
            sheet_half_side: 0.6,
            sheet_offset: 0.2,
            cap_radius: 0.8,
            cap_half_angle_deg: 60.0,
            scale_range: [0.01, 0.05],
            gt_count: 20_000,
        }
    }
}

/// A generated cloud, its oracle, and dense ground-truth surface samples.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub cloud: SurfelCloud,
    pub oracle: AnalyticField,
    pub gt_samples: Vec<Vec3>,
}

/// Samples `n` surfels on the chosen surface. Centers are perturbed by
/// isotropic Gaussian noise of std `noise_sigma` (resampled in the rare case
/// the perturbed center ends up farther than `4 * noise_sigma` from the
/// surface); normals align with the surface normal at the pre-noise point,
/// and in-plane axes get a random spin.
pub fn gen_scene(
    kind: SceneKind,
    n: usize,
    noise_sigma: f64,
    seed: u64,
    params: &GenParams,
) -> Result<SyntheticScene, CloudError> {
    if n == 0 {
        return Err(CloudError::InvalidCount(n));
    }
    if !(noise_sigma >= 0.0) {
        return Err(CloudError::NegativeNoise(noise_sigma));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let oracle = match kind {
        SceneKind::PlaneDisk => AnalyticField::Disk {
            radius: params.disk_radius,
        },
        SceneKind::Sphere => AnalyticField::Sphere {
            radius: params.sphere_radius,
        },
        SceneKind::ParallelSheets => AnalyticField::ParallelPlanes {
            offset: params.sheet_offset,
        },
        SceneKind::CurvedSheet => AnalyticField::Sphere {
            radius: params.cap_radius,
        },
    };
    let mut surfels = Vec::with_capacity(n);
    for _ in 0..n {
        let (pos, normal) = surface_sample(kind, params, &mut rng);
        let center = loop {
            let c = if noise_sigma > 0.0 {
                let eps = [
                    noise_sigma * normal_f64(&mut rng),
                    noise_sigma * normal_f64(&mut rng),
                    noise_sigma * normal_f64(&mut rng),
                ];
                math::add(pos, eps)
            } else {
                pos
            };
            if oracle.eval(c) <= 4.0 * noise_sigma {
                break c;
            }
        };
        let spin = rng.gen_range(0.0..core::f64::consts::TAU);
        let rotation = spun_frame(normal, spin);
        let scales = [
            rng.gen_range(params.scale_range[0]..=params.scale_range[1]),
            rng.gen_range(params.scale_range[0]..=params.scale_range[1]),
        ];
        surfels.push(Surfel::new(center, rotation, scales));
    }
    let gt_samples = (0..params.gt_count)
        .map(|_| surface_sample(kind, params, &mut rng).0)
        .collect();
    Ok(SyntheticScene {
        cloud: SurfelCloud::new(surfels),
        oracle,
        gt_samples,
    })
}

/// Rotation whose third column is `normal` and whose in-plane axes are spun
/// by `angle`.
fn spun_frame(normal: Vec3, angle: f64) -> Mat3 {
    let (t1, t2) = math::orthonormal_tangents(normal);
    let (c, s) = (math::cos(angle), math::sin(angle));
    let u = math::add(math::scale(t1, c), math::scale(t2, s));
    let v = math::add(math::scale(t1, -s), math::scale(t2, c));
    [
        [u[0], v[0], normal[0]],
        [u[1], v[1], normal[1]],
        [u[2], v[2], normal[2]],
    ]
}

fn surface_sample(kind: SceneKind, params: &GenParams, rng: &mut ChaCha8Rng) -> (Vec3, Vec3) {
    match kind {
        SceneKind::PlaneDisk => {
            let r = params.disk_radius * math::sqrt(rng.gen_range(0.0..1.0f64));
            let theta = rng.gen_range(0.0..core::f64::consts::TAU);
            (
                [r * math::cos(theta), r * math::sin(theta), 0.0],
                [0.0, 0.0, 1.0],
            )
        }
        SceneKind::Sphere => {
            let d = random_unit(rng);
            (math::scale(d, params.sphere_radius), d)
        }
        SceneKind::ParallelSheets => {
            let h = params.sheet_half_side;
            let top = rng.gen_range(0.0..1.0f64) < 0.5;
            let (z, nz) = if top {
                (params.sheet_offset, 1.0)
            } else {
                (-params.sheet_offset, -1.0)
            };
            (
                [rng.gen_range(-h..h), rng.gen_range(-h..h), z],
                [0.0, 0.0, nz],
            )
        }
        SceneKind::CurvedSheet => {
            let cos_max = math::cos(params.cap_half_angle_deg.to_radians());
            let cos_t = rng.gen_range(cos_max..1.0f64);
            let sin_t = math::sqrt(1.0 - cos_t * cos_t);
            let phi = rng.gen_range(0.0..core::f64::consts::TAU);
            let d = [sin_t * math::cos(phi), sin_t * math::sin(phi), cos_t];
            (math::scale(d, params.cap_radius), d)
        }
    }
}

#[inline]
fn normal_f64<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = [normal_f64(rng), normal_f64(rng), normal_f64(rng)];
        if let Some(u) = math::normalize(v, 1e-9) {
            return u;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_disk_centers_on_surface() {
        let scene = gen_scene(SceneKind::PlaneDisk, 500, 0.0, 1, &GenParams::default()).unwrap();
        for s in &scene.cloud.surfels {
            assert!(scene.oracle.eval(s.center) <= 1e-12);
            let n = s.normal();
            assert!((math::abs(n[2]) - 1.0).abs() < 1e-12);
            s.validate().unwrap();
        }
        scene.cloud.validate(true).unwrap();
    }

    #[test]
    fn zero_noise_sphere_centers_and_normals_radial() {
        let params = GenParams {
            sphere_radius: 1.0,
            ..GenParams::default()
        };
        let scene = gen_scene(SceneKind::Sphere, 300, 0.0, 2, &params).unwrap();
        for s in &scene.cloud.surfels {
            assert!((math::norm(s.center) - 1.0).abs() < 1e-12);
            let radial = math::normalize(s.center, 1e-12).unwrap();
            assert!(math::dist(radial, s.normal()) < 1e-9);
        }
    }

    #[test]
    fn noise_statistics_match_half_normal() {
        // Oracle distance of a perturbed center is |eps . n| to first order;
        // its mean is sigma * sqrt(2/pi) with standard error
        // sigma * sqrt(1 - 2/pi) / sqrt(n).
        let sigma = 0.02;
        let n = 2000;
        for kind in [SceneKind::PlaneDisk, SceneKind::Sphere] {
            let scene = gen_scene(kind, n, sigma, 7, &GenParams::default()).unwrap();
            let dists: Vec<f64> = scene
                .cloud
                .surfels
                .iter()
                .map(|s| scene.oracle.eval(s.center))
                .collect();
            let mean = dists.iter().sum::<f64>() / n as f64;
            let expected = sigma * math::sqrt(2.0 / core::f64::consts::PI);
            let se = sigma * math::sqrt(1.0 - 2.0 / core::f64::consts::PI) / math::sqrt(n as f64);
            assert!(
                (mean - expected).abs() < 3.0 * se + 0.1 * sigma,
                "{kind:?}: mean {mean} vs {expected} (se {se})"
            );
            assert!(dists.iter().all(|&d| d <= 4.0 * sigma + 1e-12));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_scene(SceneKind::CurvedSheet, 100, 0.01, 3, &GenParams::default()).unwrap();
        let b = gen_scene(SceneKind::CurvedSheet, 100, 0.01, 3, &GenParams::default()).unwrap();
        assert_eq!(a.cloud, b.cloud);
        assert_eq!(a.gt_samples, b.gt_samples);
        let c = gen_scene(SceneKind::CurvedSheet, 100, 0.01, 4, &GenParams::default()).unwrap();
        assert_ne!(a.cloud, c.cloud);
    }

    #[test]
    fn knn_line_example() {
        // Five unit-spaced points on a line, k = 2: ends see their second
        // neighbor two steps away, interior points one step.
        let surfels: Vec<Surfel> = (0..5)
            .map(|i| {
                Surfel::new(
                    [i as f64, 0.0, 0.0],
                    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                    [0.1, 0.1],
                )
            })
            .collect();
        let cloud = SurfelCloud::new(surfels);
        let d = knn_distance(&cloud, 2).unwrap();
        assert_eq!(d, alloc::vec![2.0, 1.0, 1.0, 1.0, 2.0]);

        let two = SurfelCloud::new(cloud.surfels[..2].to_vec());
        let d = knn_distance(&two, 1).unwrap();
        assert_eq!(d, alloc::vec![1.0, 1.0]);
    }

    #[test]
    fn knn_matches_brute_force() {
        let scene = gen_scene(SceneKind::Sphere, 200, 0.05, 9, &GenParams::default()).unwrap();
        let k = 50;
        let fast = knn_distance(&scene.cloud, k).unwrap();
        let centers = scene.cloud.center_points();
        for (i, &c) in centers.iter().enumerate() {
            let mut d: Vec<f64> = centers
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &p)| math::dist(c, p))
                .collect();
            d.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(fast[i], d[k - 1], "surfel {i}");
        }
    }

    #[test]
    fn knn_rejects_out_of_range_k() {
        let scene = gen_scene(SceneKind::PlaneDisk, 10, 0.0, 1, &GenParams::default()).unwrap();
        assert!(matches!(
            knn_distance(&scene.cloud, 10),
            Err(CloudError::KnnOutOfRange { .. })
        ));
    }

    #[test]
    fn normalize_moves_centers_into_cube() {
        let mut surfels = Vec::new();
        for i in 0..10 {
            surfels.push(Surfel::new(
                [10.0 + i as f64, -5.0, 3.0 * i as f64],
                [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                [1.0, 2.0],
            ));
        }
        let mut cloud = SurfelCloud::new(surfels);
        let raw0 = cloud.surfels[0].center;
        cloud.normalize(0.9);
        cloud.validate(true).unwrap();
        assert!(cloud
            .surfels
            .iter()
            .all(|s| s.center.iter().all(|c| c.abs() <= 0.9 + 1e-12)));
        // The stored transform reproduces the normalized coordinates.
        assert!(math::dist(cloud.transform.apply(raw0), cloud.surfels[0].center) < 1e-12);
    }

    #[test]
    fn unknown_kind_is_rejected() {
        assert!(matches!(
            "donut".parse::<SceneKind>(),
            Err(CloudError::UnknownKind(_))
        ));
        assert_eq!("disk".parse::<SceneKind>().unwrap(), SceneKind::PlaneDisk);
    }
}
