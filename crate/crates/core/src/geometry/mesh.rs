//! Triangle mesh with boundary-edge bookkeeping.

use crate::math::Vec3;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

/// Triangle mesh. `boundary_edges` lists the undirected edges used by
/// exactly one triangle, sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<[usize; 2]>,
}

impl Mesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Self {
        for t in &triangles {
            assert!(
                t.iter().all(|&v| v < vertices.len()),
                "triangle index out of range"
            );
        }
        let boundary_edges = compute_boundary_edges(&triangles);
        Self {
            vertices,
            triangles,
            boundary_edges,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn recompute_boundary_edges(&mut self) {
        self.boundary_edges = compute_boundary_edges(&self.triangles);
    }
}

/// Undirected edges with triangle incidence exactly 1.
pub fn compute_boundary_edges(triangles: &[[usize; 3]]) -> Vec<[usize; 2]> {
    let mut counts: BTreeMap<[usize; 2], u32> = BTreeMap::new();
    for t in triangles {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            let key = if a < b { [a, b] } else { [b, a] };
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts
        .into_iter()
        .filter_map(|(e, c)| (c == 1).then_some(e))
        .collect()
}

/// A maximal chain of boundary edges: a closed loop or an open path.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLoop {
    /// Vertex sequence along the chain. For a closed loop the first vertex
    /// is not repeated at the end.
    pub vertices: Vec<usize>,
    pub closed: bool,
}

impl BoundaryLoop {
    pub fn edge_count(&self) -> usize {
        if self.closed {
            self.vertices.len()
        } else {
            self.vertices.len().saturating_sub(1)
        }
    }
}

/// Partitions the mesh's boundary edges into maximal connected chains,
/// walking lowest-index edges first so the result is deterministic. At
/// non-manifold boundary vertices chains are split greedily.
pub fn mesh_boundary_loops(mesh: &Mesh) -> Vec<BoundaryLoop> {
    let edges = &mesh.boundary_edges;
    let mut incident: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (ei, e) in edges.iter().enumerate() {
        incident.entry(e[0]).or_default().push(ei);
        incident.entry(e[1]).or_default().push(ei);
    }
    let mut used = alloc::vec![false; edges.len()];
    let mut loops = Vec::new();
    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut chain: Vec<usize> = alloc::vec![edges[start][0], edges[start][1]];
        let mut closed = false;
        // Extend forward from the tail, then backward from the head.
        for forward in [true, false] {
            loop {
                let anchor = if forward {
                    *chain.last().expect("nonempty")
                } else {
                    chain[0]
                };
                let next = incident
                    .get(&anchor)
                    .and_then(|list| list.iter().copied().find(|&ei| !used[ei]));
                let Some(ei) = next else { break };
                used[ei] = true;
                let e = edges[ei];
                let other = if e[0] == anchor { e[1] } else { e[0] };
                let head = chain[0];
                let tail = *chain.last().expect("nonempty");
                if (forward && other == head) || (!forward && other == tail) {
                    closed = true;
                    break;
                }
                if forward {
                    chain.push(other);
                } else {
                    chain.insert(0, other);
                }
            }
            if closed {
                break;
            }
        }
        loops.push(BoundaryLoop {
            vertices: chain,
            closed,
        });
    }
    loops
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_tetrahedron_has_no_boundary() {
        let vertices = alloc::vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        let triangles = alloc::vec![[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
        let mesh = Mesh::new(vertices, triangles);
        assert!(mesh.boundary_edges.is_empty());
        assert!(mesh_boundary_loops(&mesh).is_empty());
    }

    #[test]
    fn single_triangle_is_one_loop_of_three_edges() {
        let mesh = Mesh::new(
            alloc::vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            alloc::vec![[0, 1, 2]],
        );
        assert_eq!(mesh.boundary_edges.len(), 3);
        let loops = mesh_boundary_loops(&mesh);
        assert_eq!(loops.len(), 1);
        assert!(loops[0].closed);
        assert_eq!(loops[0].edge_count(), 3);
    }

    #[test]
    fn strip_has_one_rim_loop() {
        // Two triangles sharing an edge: the rim is a single closed loop of
        // four edges.
        let mesh = Mesh::new(
            alloc::vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.0, 1.0, 0.0],
            ],
            alloc::vec![[0, 1, 2], [0, 2, 3]],
        );
        assert_eq!(mesh.boundary_edges.len(), 4);
        let loops = mesh_boundary_loops(&mesh);
        assert_eq!(loops.len(), 1);
        assert!(loops[0].closed);
        assert_eq!(loops[0].edge_count(), 4);
    }

    #[test]
    fn boundary_edges_are_recomputable() {
        let mut mesh = Mesh::new(
            alloc::vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]],
            alloc::vec![[0, 1, 2], [1, 3, 2]],
        );
        let original = mesh.boundary_edges.clone();
        mesh.boundary_edges.clear();
        mesh.recompute_boundary_edges();
        assert_eq!(mesh.boundary_edges, original);
        // Every boundary edge appears in exactly one triangle.
        for e in &mesh.boundary_edges {
            let count = mesh
                .triangles
                .iter()
                .filter(|t| {
                    let mut hits = 0;
                    for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                        let key = if a < b { [a, b] } else { [b, a] };
                        if key == *e {
                            hits += 1;
                        }
                    }
                    hits > 0
                })
                .count();
            assert_eq!(count, 1);
        }
    }

    #[test]
    fn disjoint_triangles_give_two_loops() {
        let mesh = Mesh::new(
            alloc::vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [5.0, 0.0, 0.0],
                [6.0, 0.0, 0.0],
                [5.0, 1.0, 0.0],
            ],
            alloc::vec![[0, 1, 2], [3, 4, 5]],
        );
        let loops = mesh_boundary_loops(&mesh);
        assert_eq!(loops.len(), 2);
        assert!(loops.iter().all(|l| l.closed && l.edge_count() == 3));
    }
}
