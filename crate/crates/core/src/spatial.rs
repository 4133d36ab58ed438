//! Exact nearest-neighbor queries over 3D point sets.
//!
//! A kd-tree with strictly-greater pruning, so equal-distance candidates are
//! always visited and ties can be broken by point index. Every query result
//! is therefore identical to a brute-force scan with `(distance^2, index)`
//! ordering.

use crate::math::{dist_sq, Vec3};
use alloc::vec::Vec;

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
pub struct KdTree {
    pts: Vec<Vec3>,
    perm: Vec<u32>,
    axis: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub dist_sq: f64,
}

#[inline]
fn better(d: f64, i: usize, than_d: f64, than_i: usize) -> bool {
    d < than_d || (d == than_d && i < than_i)
}

impl KdTree {
    pub fn build(points: &[Vec3]) -> Self {
        let mut tree = Self {
            pts: points.to_vec(),
            perm: (0..points.len() as u32).collect(),
            axis: alloc::vec![0; points.len()],
        };
        if !points.is_empty() {
            let n = points.len();
            tree.build_range(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    fn build_range(&mut self, lo: usize, hi: usize) {
        if hi - lo <= LEAF_SIZE {
            return;
        }
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for &i in &self.perm[lo..hi] {
            let p = self.pts[i as usize];
            for a in 0..3 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        let mut axis = 0;
        let mut widest = max[0] - min[0];
        for a in 1..3 {
            let w = max[a] - min[a];
            if w > widest {
                widest = w;
                axis = a;
            }
        }
        let mid = (lo + hi) / 2;
        let pts = &self.pts;
        self.perm[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
            let ka = (pts[a as usize][axis], a);
            let kb = (pts[b as usize][axis], b);
            ka.partial_cmp(&kb).expect("finite coordinates")
        });
        self.axis[mid] = axis as u8;
        self.build_range(lo, mid);
        self.build_range(mid + 1, hi);
    }

    /// Nearest point to `q`; ties broken toward the smaller index.
    pub fn nearest(&self, q: Vec3) -> Option<Neighbor> {
        if self.pts.is_empty() {
            return None;
        }
        let mut best = Neighbor {
            index: usize::MAX,
            dist_sq: f64::INFINITY,
        };
        self.nearest_range(q, 0, self.pts.len(), &mut best);
        Some(best)
    }

    fn nearest_range(&self, q: Vec3, lo: usize, hi: usize, best: &mut Neighbor) {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.perm[lo..hi] {
                let d = dist_sq(q, self.pts[i as usize]);
                if better(d, i as usize, best.dist_sq, best.index) {
                    *best = Neighbor {
                        index: i as usize,
                        dist_sq: d,
                    };
                }
            }
            return;
        }
        let mid = (lo + hi) / 2;
        let i = self.perm[mid] as usize;
        let d = dist_sq(q, self.pts[i]);
        if better(d, i, best.dist_sq, best.index) {
            *best = Neighbor {
                index: i,
                dist_sq: d,
            };
        }
        let axis = self.axis[mid] as usize;
        let delta = q[axis] - self.pts[i][axis];
        let (near_lo, near_hi, far_lo, far_hi) = if delta < 0.0 {
            (lo, mid, mid + 1, hi)
        } else {
            (mid + 1, hi, lo, mid)
        };
        self.nearest_range(q, near_lo, near_hi, best);
        // Visit the far side unless it is strictly beyond the current best,
        // so equal-distance ties are still found.
        if delta * delta <= best.dist_sq {
            self.nearest_range(q, far_lo, far_hi, best);
        }
    }

    /// The `k` nearest points to `q`, optionally excluding one index (for
    /// self-queries). Returns neighbors sorted by `(distance^2, index)`.
    /// Panics if fewer than `k` candidates exist.
    pub fn k_nearest(&self, q: Vec3, k: usize, exclude: Option<usize>) -> Vec<Neighbor> {
        let available = self.pts.len() - usize::from(exclude.is_some());
        assert!(k >= 1 && k <= available, "k out of range");
        let mut heap = BoundedHeap::new(k);
        self.k_nearest_range(q, 0, self.pts.len(), exclude, &mut heap);
        heap.into_sorted()
    }

    fn k_nearest_range(
        &self,
        q: Vec3,
        lo: usize,
        hi: usize,
        exclude: Option<usize>,
        heap: &mut BoundedHeap,
    ) {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.perm[lo..hi] {
                if Some(i as usize) == exclude {
                    continue;
                }
                heap.offer(dist_sq(q, self.pts[i as usize]), i as usize);
            }
            return;
        }
        let mid = (lo + hi) / 2;
        let i = self.perm[mid] as usize;
        if Some(i) != exclude {
            heap.offer(dist_sq(q, self.pts[i]), i);
        }
        let axis = self.axis[mid] as usize;
        let delta = q[axis] - self.pts[i][axis];
        let (near_lo, near_hi, far_lo, far_hi) = if delta < 0.0 {
            (lo, mid, mid + 1, hi)
        } else {
            (mid + 1, hi, lo, mid)
        };
        self.k_nearest_range(q, near_lo, near_hi, exclude, heap);
        if !heap.is_full() || delta * delta <= heap.worst().dist_sq {
            self.k_nearest_range(q, far_lo, far_hi, exclude, heap);
        }
    }
}

/// Max-heap over `(dist_sq, index)` keeping the `k` smallest entries.
struct BoundedHeap {
    k: usize,
    items: Vec<Neighbor>,
}

#[inline]
fn heap_less(a: &Neighbor, b: &Neighbor) -> bool {
    better(a.dist_sq, a.index, b.dist_sq, b.index)
}

impl BoundedHeap {
    fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k),
        }
    }

    fn is_full(&self) -> bool {
        self.items.len() == self.k
    }

    fn worst(&self) -> Neighbor {
        self.items[0]
    }

    fn offer(&mut self, dist_sq: f64, index: usize) {
        let cand = Neighbor { index, dist_sq };
        if self.items.len() < self.k {
            self.items.push(cand);
            let mut i = self.items.len() - 1;
            while i > 0 {
                let parent = (i - 1) / 2;
                if heap_less(&self.items[parent], &self.items[i]) {
                    self.items.swap(parent, i);
                    i = parent;
                } else {
                    break;
                }
            }
        } else if heap_less(&cand, &self.items[0]) {
            self.items[0] = cand;
            let mut i = 0;
            loop {
                let (l, r) = (2 * i + 1, 2 * i + 2);
                let mut largest = i;
                if l < self.items.len() && heap_less(&self.items[largest], &self.items[l]) {
                    largest = l;
                }
                if r < self.items.len() && heap_less(&self.items[largest], &self.items[r]) {
                    largest = r;
                }
                if largest == i {
                    break;
                }
                self.items.swap(i, largest);
                i = largest;
            }
        }
    }

    fn into_sorted(self) -> Vec<Neighbor> {
        let mut v = self.items;
        v.sort_unstable_by(|a, b| {
            (a.dist_sq, a.index)
                .partial_cmp(&(b.dist_sq, b.index))
                .expect("finite distances")
        });
        v
    }
}

/// Brute-force nearest neighbor with the same tie-breaking; `O(n)`.
pub fn nearest_brute(points: &[Vec3], q: Vec3) -> Option<Neighbor> {
    let mut best: Option<Neighbor> = None;
    for (i, &p) in points.iter().enumerate() {
        let d = dist_sq(q, p);
        if best.is_none_or(|b| better(d, i, b.dist_sq, b.index)) {
            best = Some(Neighbor {
                index: i,
                dist_sq: d,
            });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
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
    fn nearest_matches_brute_force() {
        let pts = random_points(500, 1);
        let queries = random_points(200, 2);
        let tree = KdTree::build(&pts);
        for q in queries {
            let a = tree.nearest(q).unwrap();
            let b = nearest_brute(&pts, q).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn nearest_breaks_ties_by_index() {
        // Duplicate positions: index order must win.
        let pts = alloc::vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]];
        let tree = KdTree::build(&pts);
        let n = tree.nearest([1.0, 0.0, 0.0]).unwrap();
        assert_eq!(n.index, 0);
        // Symmetric pair equidistant from the origin.
        let pts = alloc::vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]];
        let tree = KdTree::build(&pts);
        assert_eq!(tree.nearest([0.0, 0.0, 0.0]).unwrap().index, 0);
    }

    #[test]
    fn k_nearest_matches_brute_force() {
        let pts = random_points(200, 3);
        let tree = KdTree::build(&pts);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let q = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let k = rng.gen_range(1..=50);
            let got = tree.k_nearest(q, k, None);
            let mut pairs: Vec<Neighbor> = pts
                .iter()
                .enumerate()
                .map(|(i, &p)| Neighbor {
                    index: i,
                    dist_sq: dist_sq(q, p),
                })
                .collect();
            pairs.sort_unstable_by(|a, b| {
                (a.dist_sq, a.index)
                    .partial_cmp(&(b.dist_sq, b.index))
                    .unwrap()
            });
            pairs.truncate(k);
            assert_eq!(got, pairs);
        }
    }

    #[test]
    fn k_nearest_respects_exclusion() {
        let pts = random_points(64, 5);
        let tree = KdTree::build(&pts);
        for (i, &p) in pts.iter().enumerate() {
            let nn = tree.k_nearest(p, 1, Some(i));
            assert_ne!(nn[0].index, i);
            assert!(nn[0].dist_sq > 0.0);
        }
    }
}
