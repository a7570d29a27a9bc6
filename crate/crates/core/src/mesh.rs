//! Triangle surface meshes with disk topology.
//!
//! A [`TriMesh`] is an immutable, validated triangle mesh: manifold,
//! consistently wound, with exactly one boundary loop and Euler
//! characteristic 1. Everything downstream (Laplacian assembly, folding
//! classification) relies on those invariants, so they are checked once at
//! construction and never again.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::util::{cross3, dist3, sub3, P3};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("face {face} references vertex {vertex}, but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        face: usize,
        vertex: usize,
        vertex_count: usize,
    },
    #[error("face {face} repeats vertex {vertex}")]
    RepeatedVertex { face: usize, vertex: usize },
    #[error("edge ({a}, {b}) is shared by more than two faces")]
    NonManifoldEdge { a: usize, b: usize },
    #[error("edge ({a}, {b}) is traversed in the same direction by faces {first} and {second}; face windings are inconsistent")]
    InconsistentWinding {
        a: usize,
        b: usize,
        first: usize,
        second: usize,
    },
    #[error("vertex {0} is not referenced by any face")]
    IsolatedVertex(usize),
    #[error("mesh has no boundary edges (closed surface)")]
    NoBoundary,
    #[error("mesh has {0} boundary loops; exactly one is required")]
    MultipleBoundaryLoops(usize),
    #[error("boundary pinches at vertex {0} (more than one outgoing boundary edge)")]
    PinchedBoundary(usize),
    #[error("mesh is not connected (vertex {0} unreachable from face 0)")]
    Disconnected(usize),
    #[error("Euler characteristic is {0}, expected 1 for a disk")]
    BadEulerCharacteristic(i64),
    #[error("mesh has no faces")]
    Empty,
}

/// Kinds of defects reported by [`MeshDiagnostics`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectKind {
    IndexOutOfRange,
    RepeatedVertex,
    NonManifoldEdge,
    InconsistentWinding,
    IsolatedVertex,
    PinchedBoundary,
    Disconnected,
}

/// Summary of a face/vertex index list, produced without failing.
#[derive(Debug, Clone, Serialize)]
pub struct MeshDiagnostics {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub face_count: usize,
    pub boundary_loop_count: usize,
    pub euler_characteristic: i64,
    pub is_disk: bool,
    /// (kind, index of the offending element: face or vertex).
    pub defects: Vec<(DefectKind, usize)>,
    /// Pairs of distinct vertices closer than 1e-12 of the bounding-box
    /// diagonal. Not defects: duplicates are never merged, only reported.
    pub near_duplicate_vertices: Vec<(usize, usize)>,
}

/// An immutable triangle mesh with validated disk topology.
///
/// Faces are counter-clockwise with respect to the outward orientation; the
/// boundary loop is stored in the direction induced by that orientation and
/// starts at its smallest vertex index.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<P3>,
    faces: Vec<[usize; 3]>,
    boundary_loop: Vec<usize>,
    /// For each vertex, its position in `boundary_loop`, or `None` if interior.
    loop_position: Vec<Option<usize>>,
    /// One-ring vertex adjacency, each list sorted ascending.
    adjacency: Vec<Vec<usize>>,
}

impl TriMesh {
    /// Validates the given soup and builds the mesh. Vertex order is
    /// preserved; faces are taken as-is (no winding repair, no duplicate
    /// merging).
    pub fn new(vertices: Vec<P3>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if faces.is_empty() {
            return Err(MeshError::Empty);
        }
        let nv = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= nv {
                    return Err(MeshError::IndexOutOfRange {
                        face: fi,
                        vertex: v,
                        vertex_count: nv,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                let v = if f[0] == f[1] { f[0] } else { f[2] };
                return Err(MeshError::RepeatedVertex {
                    face: fi,
                    vertex: v,
                });
            }
        }

        // Directed edge -> owning face. A directed edge may appear at most
        // once; its reverse at most once more (manifold, consistent winding).
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (fi, f) in faces.iter().enumerate() {
            for e in 0..3 {
                let a = f[e];
                let b = f[(e + 1) % 3];
                if let Some(&first) = directed.get(&(a, b)) {
                    if directed.contains_key(&(b, a)) {
                        return Err(MeshError::NonManifoldEdge { a, b });
                    }
                    return Err(MeshError::InconsistentWinding {
                        a,
                        b,
                        first,
                        second: fi,
                    });
                }
                directed.insert((a, b), fi);
            }
        }

        let mut referenced = vec![false; nv];
        for f in &faces {
            for &v in f {
                referenced[v] = true;
            }
        }
        if let Some(v) = referenced.iter().position(|&r| !r) {
            return Err(MeshError::IsolatedVertex(v));
        }

        // Boundary edges are directed edges without a reverse partner.
        let mut next_boundary: HashMap<usize, usize> = HashMap::new();
        let mut boundary_edge_count = 0usize;
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) {
                boundary_edge_count += 1;
                if next_boundary.insert(a, b).is_some() {
                    return Err(MeshError::PinchedBoundary(a));
                }
            }
        }
        if boundary_edge_count == 0 {
            return Err(MeshError::NoBoundary);
        }

        // Walk boundary cycles; exactly one must exist.
        let mut visited: HashMap<usize, bool> = next_boundary.keys().map(|&k| (k, false)).collect();
        let mut loops = 0usize;
        let mut boundary_loop = Vec::new();
        let starts: Vec<usize> = {
            let mut s: Vec<usize> = next_boundary.keys().copied().collect();
            s.sort_unstable();
            s
        };
        for start in starts {
            if visited[&start] {
                continue;
            }
            loops += 1;
            let mut cycle = Vec::new();
            let mut v = start;
            loop {
                cycle.push(v);
                *visited.get_mut(&v).unwrap() = true;
                v = next_boundary[&v];
                if v == start {
                    break;
                }
            }
            if loops == 1 {
                boundary_loop = cycle;
            }
        }
        if loops > 1 {
            return Err(MeshError::MultipleBoundaryLoops(loops));
        }

        // Undirected edge count and Euler characteristic.
        let edge_count = (directed.len() - boundary_edge_count) / 2 + boundary_edge_count;
        let chi = nv as i64 - edge_count as i64 + faces.len() as i64;
        if chi != 1 {
            return Err(MeshError::BadEulerCharacteristic(chi));
        }

        // Connectivity over vertices.
        let mut adjacency = vec![Vec::new(); nv];
        for &(a, b) in directed.keys() {
            adjacency[a].push(b);
            if !directed.contains_key(&(b, a)) {
                adjacency[b].push(a);
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        let mut seen = vec![false; nv];
        let mut stack = vec![faces[0][0]];
        seen[faces[0][0]] = true;
        while let Some(v) = stack.pop() {
            for &w in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if let Some(v) = seen.iter().position(|&s| !s) {
            return Err(MeshError::Disconnected(v));
        }

        canonicalize_loop(&mut boundary_loop);
        let mut loop_position = vec![None; nv];
        for (i, &v) in boundary_loop.iter().enumerate() {
            loop_position[v] = Some(i);
        }

        Ok(Self {
            vertices,
            faces,
            boundary_loop,
            loop_position,
            adjacency,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self) -> &[P3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Boundary vertices, cyclically ordered in the direction induced by the
    /// face orientation, starting at the smallest boundary index.
    pub fn boundary_loop(&self) -> &[usize] {
        &self.boundary_loop
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.loop_position[v].is_some()
    }

    /// Position of `v` in the boundary loop, if it is a boundary vertex.
    pub fn loop_position(&self, v: usize) -> Option<usize> {
        self.loop_position[v]
    }

    /// Sorted one-ring neighbors of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn interior_count(&self) -> usize {
        self.vertex_count() - self.boundary_loop.len()
    }

    /// Unoriented bounding-box diagonal of the vertex set.
    pub fn bbox_diagonal(&self) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        dist3(lo, hi)
    }

    /// Total surface area of the 3D triangulation.
    pub fn surface_area(&self) -> f64 {
        self.faces
            .iter()
            .map(|&[i, j, k]| {
                let c = cross3(
                    sub3(self.vertices[j], self.vertices[i]),
                    sub3(self.vertices[k], self.vertices[i]),
                );
                0.5 * crate::util::norm3(c)
            })
            .sum()
    }

    pub fn diagnostics(&self) -> MeshDiagnostics {
        diagnose(&self.vertices, &self.faces)
    }
}

/// Rotates a cyclic index list so the smallest element comes first. The
/// traversal direction is preserved.
fn canonicalize_loop(cycle: &mut [usize]) {
    if cycle.is_empty() {
        return;
    }
    let min_pos = cycle
        .iter()
        .enumerate()
        .min_by_key(|&(_, &v)| v)
        .map(|(i, _)| i)
        .unwrap();
    cycle.rotate_left(min_pos);
}

/// Extracts the ordered boundary loop of a consistently oriented manifold
/// face list. The loop follows the direction induced by the face
/// orientation and starts at the smallest boundary vertex index.
pub fn extract_boundary(faces: &[[usize; 3]]) -> Result<Vec<usize>, MeshError> {
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for (fi, f) in faces.iter().enumerate() {
        for e in 0..3 {
            let a = f[e];
            let b = f[(e + 1) % 3];
            if let Some(&first) = directed.get(&(a, b)) {
                if directed.contains_key(&(b, a)) {
                    return Err(MeshError::NonManifoldEdge { a, b });
                }
                return Err(MeshError::InconsistentWinding {
                    a,
                    b,
                    first,
                    second: fi,
                });
            }
            directed.insert((a, b), fi);
        }
    }
    let mut next: HashMap<usize, usize> = HashMap::new();
    for &(a, b) in directed.keys() {
        if !directed.contains_key(&(b, a)) && next.insert(a, b).is_some() {
            return Err(MeshError::PinchedBoundary(a));
        }
    }
    if next.is_empty() {
        return Err(MeshError::NoBoundary);
    }
    let start = *next.keys().min().unwrap();
    let mut cycle = vec![start];
    let mut v = next[&start];
    while v != start {
        cycle.push(v);
        v = next[&v];
    }
    if cycle.len() != next.len() {
        // Unvisited boundary edges remain: more than one loop.
        let mut loops = 1;
        let mut seen: Vec<usize> = cycle.clone();
        seen.sort_unstable();
        for &k in next.keys() {
            if seen.binary_search(&k).is_err() {
                loops += 1;
                let mut w = next[&k];
                let mut extra = vec![k];
                while w != k {
                    extra.push(w);
                    w = next[&w];
                }
                seen.extend(extra);
                seen.sort_unstable();
            }
        }
        return Err(MeshError::MultipleBoundaryLoops(loops));
    }
    Ok(cycle)
}

/// Runs every topology check without failing, collecting all defects.
pub fn diagnose(vertices: &[P3], faces: &[[usize; 3]]) -> MeshDiagnostics {
    let nv = vertices.len();
    let mut defects = Vec::new();

    let mut usable_faces = Vec::new();
    for (fi, f) in faces.iter().enumerate() {
        if f.iter().any(|&v| v >= nv) {
            defects.push((DefectKind::IndexOutOfRange, fi));
        } else if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            defects.push((DefectKind::RepeatedVertex, fi));
        } else {
            usable_faces.push(*f);
        }
    }

    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for (fi, f) in usable_faces.iter().enumerate() {
        for e in 0..3 {
            let a = f[e];
            let b = f[(e + 1) % 3];
            if directed.insert((a, b), fi).is_some() {
                let kind = if directed.contains_key(&(b, a)) {
                    DefectKind::NonManifoldEdge
                } else {
                    DefectKind::InconsistentWinding
                };
                defects.push((kind, fi));
            }
        }
    }

    let mut referenced = vec![false; nv];
    for f in &usable_faces {
        for &v in f {
            referenced[v] = true;
        }
    }
    for (v, &r) in referenced.iter().enumerate() {
        if !r {
            defects.push((DefectKind::IsolatedVertex, v));
        }
    }

    let mut next_boundary: HashMap<usize, usize> = HashMap::new();
    let mut boundary_edge_count = 0usize;
    for &(a, b) in directed.keys() {
        if !directed.contains_key(&(b, a)) {
            boundary_edge_count += 1;
            if next_boundary.insert(a, b).is_some() {
                defects.push((DefectKind::PinchedBoundary, a));
            }
        }
    }

    let mut loop_count = 0usize;
    {
        let mut visited: HashMap<usize, bool> = next_boundary.keys().map(|&k| (k, false)).collect();
        let mut starts: Vec<usize> = next_boundary.keys().copied().collect();
        starts.sort_unstable();
        for start in starts {
            if visited[&start] {
                continue;
            }
            loop_count += 1;
            let mut v = start;
            let mut steps = 0usize;
            loop {
                *visited.get_mut(&v).unwrap() = true;
                v = next_boundary[&v];
                steps += 1;
                if v == start || steps > next_boundary.len() {
                    break;
                }
            }
        }
    }

    let interior_directed = directed.len() - boundary_edge_count;
    let edge_count = interior_directed / 2 + boundary_edge_count;
    let chi = nv as i64 - edge_count as i64 + usable_faces.len() as i64;

    // Connectivity.
    if !usable_faces.is_empty() {
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for &(a, b) in directed.keys() {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        let mut seen = vec![false; nv];
        let mut stack = vec![usable_faces[0][0]];
        seen[usable_faces[0][0]] = true;
        while let Some(v) = stack.pop() {
            for &w in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        for (v, (&s, &r)) in seen.iter().zip(referenced.iter()).enumerate() {
            if r && !s {
                defects.push((DefectKind::Disconnected, v));
            }
        }
    }

    // Near-duplicate vertex scan, threshold relative to the bbox diagonal.
    let mut near_duplicate_vertices = Vec::new();
    if nv >= 2 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let tol = 1e-12 * dist3(lo, hi);
        let mut order: Vec<usize> = (0..nv).collect();
        order.sort_by(|&a, &b| vertices[a][0].total_cmp(&vertices[b][0]));
        for (oi, &i) in order.iter().enumerate() {
            for &j in order[oi + 1..].iter() {
                if vertices[j][0] - vertices[i][0] > tol {
                    break;
                }
                if dist3(vertices[i], vertices[j]) <= tol {
                    near_duplicate_vertices.push((i.min(j), i.max(j)));
                }
            }
        }
        near_duplicate_vertices.sort_unstable();
    }

    let is_disk = loop_count == 1 && chi == 1 && defects.is_empty() && !usable_faces.is_empty();
    MeshDiagnostics {
        vertex_count: nv,
        edge_count,
        face_count: faces.len(),
        boundary_loop_count: loop_count,
        euler_characteristic: chi,
        is_disk,
        defects,
        near_duplicate_vertices,
    }
}
