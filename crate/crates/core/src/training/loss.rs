//! Gradient pulling and the three geometric losses.

use crate::field::{BatchBuffers, DistanceField, NeuralField, ParamGrad};
use crate::math::{self, Vec3};
use crate::sampling::PlaneSample;
use crate::spatial::KdTree;
use crate::surfel::SurfelCloud;
use alloc::vec;
use alloc::vec::Vec;

/// Gradient norms below this are treated as degenerate; the sample is left
/// in place and excluded from losses.
pub const DEFAULT_EPS_GRAD: f64 = 1e-8;

/// Result of pulling a point toward the zero level set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulled {
    pub point: Vec3,
    pub value: f64,
    pub degenerate: bool,
}

/// Projects `q` along the normalized negative gradient by the field value:
/// `q' = q - f(q) * grad f(q) / |grad f(q)|`.
///
/// Degenerate gradients (norm below `eps_grad`) return `q` unchanged with the
/// flag set.
pub fn pull(field: &dyn DistanceField, q: Vec3, eps_grad: f64) -> Pulled {
    let g = field.eval_with_grad(q);
    pull_from_grad(q, g.value, g.grad, eps_grad)
}

#[inline]
pub(crate) fn pull_from_grad(q: Vec3, value: f64, grad: Vec3, eps_grad: f64) -> Pulled {
    match math::normalize(grad, eps_grad) {
        Some(n) => Pulled {
            point: math::sub(q, math::scale(n, value)),
            value,
            degenerate: false,
        },
        None => Pulled {
            point: q,
            value,
            degenerate: true,
        },
    }
}

/// Iterated batched pulling with partial steps; returns the final points and
/// their field values. Degenerate-gradient points freeze for that step.
pub fn pull_steps(
    field: &dyn DistanceField,
    points: &[Vec3],
    steps: usize,
    fraction: f64,
    eps_grad: f64,
) -> (Vec<Vec3>, Vec<f64>) {
    let mut current = points.to_vec();
    let mut grads = Vec::new();
    for _ in 0..steps {
        field.eval_with_grad_batch(&current, &mut grads);
        for (p, g) in current.iter_mut().zip(grads.iter()) {
            if let Some(n) = math::normalize(g.grad, eps_grad) {
                *p = math::sub(*p, math::scale(n, fraction * g.value));
            }
        }
    }
    let mut values = Vec::new();
    field.eval_batch(&current, &mut values);
    (current, values)
}

/// Two-term squared Chamfer between point sets, the geometric core of the
/// far-field loss. Exact nearest neighbors; ties broken by index.
pub fn far_chamfer_value(projections: &[Vec3], centers: &[Vec3]) -> f64 {
    assert!(!projections.is_empty() && !centers.is_empty());
    let center_tree = KdTree::build(centers);
    let proj_tree = KdTree::build(projections);
    let to_centers: f64 = projections
        .iter()
        .map(|&p| center_tree.nearest(p).expect("nonempty").dist_sq)
        .sum::<f64>()
        / projections.len() as f64;
    let to_projections: f64 = centers
        .iter()
        .map(|&c| proj_tree.nearest(c).expect("nonempty").dist_sq)
        .sum::<f64>()
        / centers.len() as f64;
    to_centers + to_projections
}

/// Far-field loss output: the Chamfer value, the parameter gradient, and the
/// pulled projections that produced it.
#[derive(Debug)]
pub struct FarLoss {
    pub value: f64,
    pub grad: ParamGrad,
    /// Projections of the non-degenerate queries, in query order.
    pub projections: Vec<Vec3>,
    pub degenerate: usize,
    pub total: usize,
}

impl FarLoss {
    pub fn degenerate_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.degenerate as f64 / self.total as f64
        }
    }
}

/// Pulls every query onto the zero level set and evaluates the two-sided
/// squared Chamfer against `centers`, with parameter gradients.
///
/// `second_order` selects whether gradients also flow through the normalized
/// field gradient inside the pull (forward-over-reverse); otherwise the
/// direction is treated as a stopped constant per sample and gradients flow
/// through the field value only.
///
/// Returns `None` when every query has a degenerate gradient.
pub fn loss_far(
    field: &NeuralField,
    queries: &[Vec3],
    centers: &[Vec3],
    eps_grad: f64,
    second_order: bool,
    buf: &mut BatchBuffers,
) -> Option<FarLoss> {
    assert!(!queries.is_empty() && !centers.is_empty());
    let n = queries.len();
    field.forward_retained(queries, buf);
    let mut grads = Vec::new();
    field.input_grads(buf, &mut grads);
    let values: Vec<f64> = buf.values().to_vec();

    // Pull; degenerate samples keep a placeholder and zero upstream.
    let mut projections = Vec::with_capacity(n);
    let mut included = Vec::with_capacity(n);
    let mut dirs = vec![[0.0, 0.0, 0.0]; n];
    for i in 0..n {
        let p = pull_from_grad(queries[i], values[i], grads[i], eps_grad);
        if !p.degenerate {
            dirs[i] = math::normalize(grads[i], eps_grad).expect("non-degenerate");
            included.push(i);
            projections.push(p.point);
        }
    }
    let degenerate = n - included.len();
    if included.is_empty() {
        return None;
    }

    let jn = projections.len() as f64;
    let in_ = centers.len() as f64;
    let center_tree = KdTree::build(centers);
    let proj_tree = KdTree::build(&projections);

    // dL/dq' per included projection, and the loss value.
    let mut value = 0.0;
    let mut u = vec![[0.0, 0.0, 0.0]; projections.len()];
    for (j, &p) in projections.iter().enumerate() {
        let nn = center_tree.nearest(p).expect("nonempty");
        value += nn.dist_sq / jn;
        let diff = math::sub(p, centers[nn.index]);
        let c = 2.0 / jn;
        u[j] = math::add(u[j], math::scale(diff, c));
    }
    for &c in centers {
        let nn = proj_tree.nearest(c).expect("nonempty");
        value += nn.dist_sq / in_;
        let diff = math::sub(projections[nn.index], c);
        u[nn.index] = math::add(u[nn.index], math::scale(diff, 2.0 / in_));
    }

    // Chain through q' = q - f(q) n, n stopped: upstream on f is -u . n.
    let mut alphas = vec![0.0; n];
    for (j, &i) in included.iter().enumerate() {
        alphas[i] = -math::dot(u[j], dirs[i]);
    }
    let mut grad = ParamGrad::zeros(field.arch());
    if second_order {
        // Additional flow through n = g/|g|:
        // u . dq'/dtheta = -(u.n) df/dtheta - (f/|g|) (u - (u.n) n) . dg/dtheta
        let mut tangents = vec![[0.0, 0.0, 0.0]; n];
        for (j, &i) in included.iter().enumerate() {
            let gnorm = math::norm(grads[i]);
            let un = math::dot(u[j], dirs[i]);
            let perp = math::sub(u[j], math::scale(dirs[i], un));
            tangents[i] = math::scale(perp, -values[i] / gnorm);
        }
        field.param_backward_with_tangent(buf, &alphas, &tangents, &mut grad);
    } else {
        field.param_backward(buf, &alphas, &mut grad);
    }

    Some(FarLoss {
        value,
        grad,
        projections,
        degenerate,
        total: n,
    })
}

/// Near-field loss output.
#[derive(Debug)]
pub struct NearLoss {
    pub value: f64,
    pub grad: ParamGrad,
}

/// Mean L1 regression of the field against the unsigned plane-sample targets.
pub fn loss_near(field: &NeuralField, samples: &[PlaneSample], buf: &mut BatchBuffers) -> NearLoss {
    assert!(!samples.is_empty(), "near loss needs a nonempty batch");
    let points: Vec<Vec3> = samples.iter().map(|s| s.point).collect();
    field.forward_retained(&points, buf);
    let n = samples.len() as f64;
    let mut value = 0.0;
    let mut upstream = Vec::with_capacity(samples.len());
    for (f, s) in buf.values().iter().zip(samples.iter()) {
        let diff = f - s.target;
        value += math::abs(diff) / n;
        upstream.push(if diff > 0.0 {
            1.0 / n
        } else if diff < 0.0 {
            -1.0 / n
        } else {
            0.0
        });
    }
    let mut grad = ParamGrad::zeros(field.arch());
    field.param_backward(buf, &upstream, &mut grad);
    NearLoss { value, grad }
}

/// Report from a projection pass over surfel centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionReport {
    /// Mean distance between centers and their projections, over
    /// non-degenerate surfels; `None` when all were degenerate.
    pub l_proj: Option<f64>,
    pub moved: usize,
    pub degenerate: usize,
}

/// Pulls each selected center onto the zero level set with the field treated
/// as constant, then steps centers toward the target: `mu += eta (mu' - mu)`.
/// Rotations and scales are untouched; degenerate-gradient surfels stay put.
pub fn project_surfel_indices(
    field: &dyn DistanceField,
    cloud: &mut SurfelCloud,
    indices: &[usize],
    eta: f64,
    eps_grad: f64,
) -> ProjectionReport {
    let eta = eta.clamp(0.0, 1.0);
    let points: Vec<Vec3> = indices.iter().map(|&i| cloud.surfels[i].center).collect();
    let mut grads = Vec::new();
    field.eval_with_grad_batch(&points, &mut grads);
    let mut sum = 0.0;
    let mut moved = 0;
    let mut degenerate = 0;
    for (slot, &i) in indices.iter().enumerate() {
        let g = grads[slot];
        let p = pull_from_grad(points[slot], g.value, g.grad, eps_grad);
        if p.degenerate {
            degenerate += 1;
            continue;
        }
        let delta = math::sub(p.point, points[slot]);
        sum += math::norm(delta);
        cloud.surfels[i].center = math::add(points[slot], math::scale(delta, eta));
        moved += 1;
    }
    ProjectionReport {
        l_proj: (moved > 0).then(|| sum / moved as f64),
        moved,
        degenerate,
    }
}

/// [`project_surfel_indices`] over the whole cloud.
pub fn project_surfels(
    field: &dyn DistanceField,
    cloud: &mut SurfelCloud,
    eta: f64,
    eps_grad: f64,
) -> ProjectionReport {
    let indices: Vec<usize> = (0..cloud.len()).collect();
    project_surfel_indices(field, cloud, &indices, eta, eps_grad)
}
