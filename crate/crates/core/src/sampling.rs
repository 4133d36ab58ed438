//! Training-sample generation.
//!
//! Two sample families feed the losses: far-field queries scattered around
//! surfel centers with per-center noise scaled by the k-NN distance, and
//! near-field plane samples built from roots on the Gaussian plane offset
//! along the normal, with the offset magnitude as the regression target.

use crate::math::{self, Vec3};
use crate::surfel::{CloudError, Surfel, SurfelCloud};
use alloc::vec::Vec;
use rand::seq::index::sample as index_sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// A far-field query point tied to the surfel it was sampled around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuerySample {
    pub q: Vec3,
    pub source_index: usize,
}

/// A near-field self-supervision sample: a root on the surfel plane, the
/// offset point `e = root + o * n`, and the unsigned target `t = |o|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneSample {
    pub root: Vec3,
    pub point: Vec3,
    pub target: f64,
    pub surfel_index: usize,
}

/// Sampler configuration. Lengths are in normalized scene units.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SamplerConfig {
    /// Surfels drawn (without replacement) per batch.
    pub planes_per_batch: usize,
    /// Base number of root points per selected plane.
    pub roots_per_plane: usize,
    /// Offset samples per root.
    pub offsets_per_root: usize,
    /// Offset bound: offsets are uniform on `[-T, T]`.
    pub t_max: f64,
    /// Neighbor rank defining the per-center query noise scale.
    pub knn_k: usize,
    /// Far-field queries per selected center.
    pub queries_per_center: usize,
    /// Planes whose max scale exceeds this factor times the cloud mean of
    /// max scales get extra roots.
    pub large_scale_threshold_factor: f64,
    /// Root multiplier for such large planes.
    pub large_scale_root_multiplier: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            planes_per_batch: 500,
            roots_per_plane: 10,
            offsets_per_root: 1,
            t_max: 0.02,
            knn_k: 50,
            queries_per_center: 1,
            large_scale_threshold_factor: 3.0,
            large_scale_root_multiplier: 2,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), CloudError> {
        if self.planes_per_batch == 0
            || self.roots_per_plane == 0
            || self.offsets_per_root == 0
            || self.queries_per_center == 0
            || self.knn_k == 0
            || self.large_scale_root_multiplier == 0
        {
            return Err(CloudError::InvalidCount(0));
        }
        if !(self.t_max > 0.0) {
            return Err(CloudError::NegativeNoise(self.t_max));
        }
        Ok(())
    }
}

/// A batch of far-field queries together with the selected center indices.
#[derive(Debug, Clone)]
pub struct QueryBatch {
    pub queries: Vec<QuerySample>,
    /// Indices of the surfels selected for this batch, in draw order.
    pub center_indices: Vec<usize>,
}

/// Draws `planes_per_batch` centers without replacement (clamped to the cloud
/// size) and scatters `queries_per_center` Gaussian queries around each, with
/// per-center std taken from `sigmas`.
pub fn sample_queries<R: Rng>(
    cloud: &SurfelCloud,
    sigmas: &[f64],
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<QueryBatch, CloudError> {
    if cloud.is_empty() {
        return Err(CloudError::Empty);
    }
    assert_eq!(sigmas.len(), cloud.len(), "one sigma per surfel");
    let batch = config.planes_per_batch.min(cloud.len());
    let center_indices: Vec<usize> = index_sample(rng, cloud.len(), batch).into_iter().collect();
    let mut queries = Vec::with_capacity(batch * config.queries_per_center);
    for &i in &center_indices {
        let mu = cloud.surfels[i].center;
        let sigma = sigmas[i];
        for _ in 0..config.queries_per_center {
            let eps = [
                sigma * normal_f64(rng),
                sigma * normal_f64(rng),
                sigma * normal_f64(rng),
            ];
            queries.push(QuerySample {
                q: math::add(mu, eps),
                source_index: i,
            });
        }
    }
    Ok(QueryBatch {
        queries,
        center_indices,
    })
}

#[inline]
fn normal_f64<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Samples `h` root points on the surfel plane: standard normal coordinates
/// scaled by the surfel's in-plane deviations and rotated into place.
pub fn sample_plane_roots<R: Rng>(surfel: &Surfel, h: usize, rng: &mut R) -> Vec<Vec3> {
    let (t1, t2) = surfel.tangents();
    let (s0, s1) = (surfel.scales[0], surfel.scales[1]);
    (0..h)
        .map(|_| {
            let u = normal_f64(rng);
            let v = normal_f64(rng);
            math::add(
                surfel.center,
                math::add(math::scale(t1, s0 * u), math::scale(t2, s1 * v)),
            )
        })
        .collect()
}

/// Per-surfel root counts: the base count, multiplied for surfels whose max
/// scale exceeds `large_scale_threshold_factor` times the cloud mean of max
/// scales.
pub fn allocate_roots(cloud: &SurfelCloud, config: &SamplerConfig) -> Vec<usize> {
    assert!(!cloud.is_empty(), "allocate_roots needs a nonempty cloud");
    let max_scales: Vec<f64> = cloud
        .surfels
        .iter()
        .map(|s| s.scales[0].max(s.scales[1]))
        .collect();
    let mean = max_scales.iter().sum::<f64>() / max_scales.len() as f64;
    let threshold = config.large_scale_threshold_factor * mean;
    max_scales
        .iter()
        .map(|&m| {
            if m > threshold {
                config.roots_per_plane * config.large_scale_root_multiplier
            } else {
                config.roots_per_plane
            }
        })
        .collect()
}

/// Offsets each root along the surfel normal by a signed uniform draw from
/// `[-T, T]`, storing the magnitude as the unsigned regression target.
pub fn sample_offsets<R: Rng>(
    surfel: &Surfel,
    surfel_index: usize,
    roots: &[Vec3],
    config: &SamplerConfig,
    rng: &mut R,
) -> Vec<PlaneSample> {
    let n = surfel.normal();
    let t = config.t_max;
    let mut out = Vec::with_capacity(roots.len() * config.offsets_per_root);
    for &root in roots {
        for _ in 0..config.offsets_per_root {
            let o = rng.gen_range(-t..=t);
            out.push(PlaneSample {
                root,
                point: math::add(root, math::scale(n, o)),
                target: math::abs(o),
                surfel_index,
            });
        }
    }
    out
}
