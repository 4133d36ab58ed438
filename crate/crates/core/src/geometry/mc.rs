//! Open-surface mesh extraction from an unsigned field.
//!
//! Unsigned fields have no inside/outside, so corner signs for marching
//! cubes are synthesized: a lattice edge is a *crossing* when the field
//! gradient flips direction across it (`grad(a) . grad(b) < 0`) while the
//! field stays within `iso_band` of zero. A two-coloring of the lattice is
//! then propagated so that crossing edges separate colors and quiet edges
//! do not; cubes touching edges whose constraint could not be satisfied are
//! skipped and counted. The coloring runs over the whole lattice rather than
//! per cube so neighboring cubes share consistent pseudo-signs and closed
//! surfaces come out watertight.
//!
//! Vertices sit where the interpolated field reaches its minimum along a
//! crossing edge, at `t = f_a / (f_a + f_b)` clamped away from the corners;
//! an unsigned field has a minimum on the edge, not a sign change.

use super::mc_tables::{EDGE_CORNERS, TRIANGLE_TABLE};
use super::{lattice_point, Aabb, GeometryError, Mesh};
use crate::field::DistanceField;
use crate::math::{self, Vec3};
use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

/// Extraction diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExtractStats {
    /// Lattice edges with a gradient direction flip inside the band.
    pub crossing_edges: usize,
    /// Edges whose coloring constraint could not be satisfied.
    pub violated_edges: usize,
    /// Cubes skipped because they touch a violated edge.
    pub skipped_cubes: usize,
}

/// Minimum lattice parameter placement along an edge, keeping vertices off
/// the corners.
const T_CLAMP: (f64, f64) = (0.05, 0.95);

struct Lattice {
    res: [usize; 3],
}

impl Lattice {
    #[inline]
    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.res[1] + j) * self.res[2] + k
    }

    #[inline]
    fn coords(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.res[2];
        let j = (idx / self.res[2]) % self.res[1];
        let i = idx / (self.res[1] * self.res[2]);
        [i, j, k]
    }

    /// Flat edge index for the edge starting at `(i,j,k)` along `axis`.
    #[inline]
    fn edge_index(&self, axis: usize, i: usize, j: usize, k: usize) -> usize {
        match axis {
            0 => (i * self.res[1] + j) * self.res[2] + k,
            1 => (i * (self.res[1] - 1) + j) * self.res[2] + k,
            _ => (i * self.res[1] + j) * (self.res[2] - 1) + k,
        }
    }

    fn edge_array_len(&self, axis: usize) -> usize {
        match axis {
            0 => (self.res[0] - 1) * self.res[1] * self.res[2],
            1 => self.res[0] * (self.res[1] - 1) * self.res[2],
            _ => self.res[0] * self.res[1] * (self.res[2] - 1),
        }
    }
}

/// Extracts an open-surface triangle mesh from the field's zero level set.
///
/// Returns an empty mesh (with diagnostics) when no crossing edges exist,
/// e.g. when the field exceeds `iso_band` everywhere in the box.
pub fn extract_mesh(
    field: &dyn DistanceField,
    bbox: &Aabb,
    resolution: [usize; 3],
    iso_band: f64,
) -> Result<(Mesh, ExtractStats), GeometryError> {
    bbox.validate()?;
    if resolution.iter().any(|&r| r < 8) {
        return Err(GeometryError::ResolutionTooLow {
            min: 8,
            got: resolution,
        });
    }
    let lat = Lattice { res: resolution };
    let [nx, ny, nz] = resolution;
    let total = nx * ny * nz;

    // Field values and gradients on the lattice, slab by slab.
    let mut values = Vec::with_capacity(total);
    let mut grads: Vec<Vec3> = Vec::with_capacity(total);
    {
        let mut slab = Vec::with_capacity(ny * nz);
        let mut slab_out = Vec::new();
        for i in 0..nx {
            slab.clear();
            for j in 0..ny {
                for k in 0..nz {
                    slab.push(lattice_point(bbox, resolution, [i, j, k]));
                }
            }
            field.eval_with_grad_batch(&slab, &mut slab_out);
            for g in &slab_out {
                values.push(g.value);
                grads.push(g.grad);
            }
        }
    }

    // Crossing classification per lattice edge.
    let mut crossing: [Vec<bool>; 3] = [
        vec![false; lat.edge_array_len(0)],
        vec![false; lat.edge_array_len(1)],
        vec![false; lat.edge_array_len(2)],
    ];
    let mut stats = ExtractStats::default();
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let a = lat.index(i, j, k);
                for (axis, &(di, dj, dk)) in [(1, 0, 0), (0, 1, 0), (0, 0, 1)].iter().enumerate() {
                    if i + di >= nx || j + dj >= ny || k + dk >= nz {
                        continue;
                    }
                    let b = lat.index(i + di, j + dj, k + dk);
                    let flips = math::dot(grads[a], grads[b]) < 0.0;
                    if flips && values[a].min(values[b]) < iso_band {
                        crossing[axis][lat.edge_index(axis, i, j, k)] = true;
                        stats.crossing_edges += 1;
                    }
                }
            }
        }
    }
    if stats.crossing_edges == 0 {
        return Ok((Mesh::default(), stats));
    }

    // Parity two-coloring over the whole lattice: crossing edges separate
    // colors, quiet edges join them.
    let mut color: Vec<u8> = vec![u8::MAX; total];
    let mut queue = VecDeque::new();
    for seed in 0..total {
        if color[seed] != u8::MAX {
            continue;
        }
        color[seed] = 0;
        queue.push_back(seed);
        while let Some(cur) = queue.pop_front() {
            let [i, j, k] = lat.coords(cur);
            let mut visit = |axis: usize, ei: usize, ej: usize, ek: usize, other: usize| {
                let parity = u8::from(crossing[axis][lat.edge_index(axis, ei, ej, ek)]);
                let want = color[cur] ^ parity;
                if color[other] == u8::MAX {
                    color[other] = want;
                    queue.push_back(other);
                }
            };
            if i + 1 < nx {
                visit(0, i, j, k, lat.index(i + 1, j, k));
            }
            if i > 0 {
                visit(0, i - 1, j, k, lat.index(i - 1, j, k));
            }
            if j + 1 < ny {
                visit(1, i, j, k, lat.index(i, j + 1, k));
            }
            if j > 0 {
                visit(1, i, j - 1, k, lat.index(i, j - 1, k));
            }
            if k + 1 < nz {
                visit(2, i, j, k, lat.index(i, j, k + 1));
            }
            if k > 0 {
                visit(2, i, j, k - 1, lat.index(i, j, k - 1));
            }
        }
    }

    // Constraint check over every edge; violations poison incident cubes.
    let mut violated: [Vec<bool>; 3] = [
        vec![false; lat.edge_array_len(0)],
        vec![false; lat.edge_array_len(1)],
        vec![false; lat.edge_array_len(2)],
    ];
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let a = lat.index(i, j, k);
                for (axis, &(di, dj, dk)) in [(1, 0, 0), (0, 1, 0), (0, 0, 1)].iter().enumerate() {
                    if i + di >= nx || j + dj >= ny || k + dk >= nz {
                        continue;
                    }
                    let b = lat.index(i + di, j + dj, k + dk);
                    let e = lat.edge_index(axis, i, j, k);
                    if (color[a] ^ color[b]) != u8::from(crossing[axis][e]) {
                        violated[axis][e] = true;
                        stats.violated_edges += 1;
                    }
                }
            }
        }
    }

    // March the cubes on pseudo-signs.
    let corner_offsets: [[usize; 3]; 8] = [
        [0, 0, 0],
        [1, 0, 0],
        [1, 1, 0],
        [0, 1, 0],
        [0, 0, 1],
        [1, 0, 1],
        [1, 1, 1],
        [0, 1, 1],
    ];
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut edge_vertex: [Vec<u32>; 3] = [
        vec![u32::MAX; lat.edge_array_len(0)],
        vec![u32::MAX; lat.edge_array_len(1)],
        vec![u32::MAX; lat.edge_array_len(2)],
    ];
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            for k in 0..nz - 1 {
                let corner_idx: [usize; 8] = core::array::from_fn(|c| {
                    let o = corner_offsets[c];
                    lat.index(i + o[0], j + o[1], k + o[2])
                });
                let mut cube_index = 0usize;
                for (c, &ci) in corner_idx.iter().enumerate() {
                    if color[ci] == 1 {
                        cube_index |= 1 << c;
                    }
                }
                if cube_index == 0 || cube_index == 255 {
                    continue;
                }
                // Locate the 12 cube edges on the lattice and bail out if any
                // is violated.
                let mut cube_edges = [(0usize, 0usize); 12];
                let mut poisoned = false;
                for (e, corners) in EDGE_CORNERS.iter().enumerate() {
                    let oa = corner_offsets[corners[0]];
                    let ob = corner_offsets[corners[1]];
                    let axis = (0..3).find(|&a| oa[a] != ob[a]).expect("cube edge");
                    let lo = [
                        i + oa[0].min(ob[0]),
                        j + oa[1].min(ob[1]),
                        k + oa[2].min(ob[2]),
                    ];
                    let eidx = lat.edge_index(axis, lo[0], lo[1], lo[2]);
                    if violated[axis][eidx] {
                        poisoned = true;
                        break;
                    }
                    cube_edges[e] = (axis, eidx);
                }
                if poisoned {
                    stats.skipped_cubes += 1;
                    continue;
                }
                let tri_row = &TRIANGLE_TABLE[cube_index];
                let mut t = 0;
                while tri_row[t] >= 0 {
                    let mut tri = [0usize; 3];
                    let mut ok = true;
                    for (slot, &te) in tri_row[t..t + 3].iter().enumerate() {
                        let e = te as usize;
                        let (axis, eidx) = cube_edges[e];
                        let vid = &mut edge_vertex[axis][eidx];
                        if *vid == u32::MAX {
                            let (a, b) = (
                                corner_idx[EDGE_CORNERS[e][0]],
                                corner_idx[EDGE_CORNERS[e][1]],
                            );
                            let (fa, fb) = (values[a], values[b]);
                            let tt = if fa + fb > 0.0 {
                                (fa / (fa + fb)).clamp(T_CLAMP.0, T_CLAMP.1)
                            } else {
                                0.5
                            };
                            let pa = lat.coords(a);
                            let pb = lat.coords(b);
                            let pa = lattice_point(bbox, resolution, pa);
                            let pb = lattice_point(bbox, resolution, pb);
                            let pos = math::add(math::scale(pa, 1.0 - tt), math::scale(pb, tt));
                            *vid = vertices.len() as u32;
                            vertices.push(pos);
                        }
                        tri[slot] = *vid as usize;
                        if slot > 0 && tri[..slot].contains(&tri[slot]) {
                            ok = false;
                        }
                    }
                    if ok {
                        let ab = math::sub(vertices[tri[1]], vertices[tri[0]]);
                        let ac = math::sub(vertices[tri[2]], vertices[tri[0]]);
                        let area = 0.5 * math::norm(math::cross(ab, ac));
                        if area > 1e-14 {
                            triangles.push(tri);
                        }
                    }
                    t += 3;
                }
            }
        }
    }
    Ok((Mesh::new(vertices, triangles), stats))
}
