//! Folding detection and repair.
//!
//! Folding of a parameterization means some triangle contains the image of
//! a foreign vertex. Four categories are tracked:
//!
//! * boundary vertex folding: an adjacent boundary pair out of cyclic order
//!   (negative sector term);
//! * interior triangle folding: a face without boundary edges whose image is
//!   clockwise (negative algebraic area);
//! * boundary triangle folding, three kinds, classified by two booleans of
//!   the face's boundary edge: does the off-edge vertex fold over the chord
//!   (land on the side away from the disk center), and is the boundary pair
//!   itself folded. Kind 1 folds over an unfolded edge, kind 2 sits on a
//!   folded edge without folding over it, kind 3 folds over a folded edge.
//!   Kind 3 is the one an area-sign count misses: its algebraic area is
//!   positive.
//!
//! Repair runs the three stages in order: boundary vertices first (adaptive
//! hinge penalties and re-solves), then boundary triangles (pull the
//! off-edge vertex to the convex combination of its neighbors, with weights
//! estimated from the original 3D geometry), then interior triangles (the
//! coupled three-vertex update).

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::energy::{sector_terms, PenaltyState, SdmceObjective};
use crate::laplacian::BlockSystem;
use crate::mesh::TriMesh;
use crate::optimizer::{minimize_on_circles, NcgConfig};
use crate::util::{cross2, dist3, norm3, solve_dense, sub2, sub3, P2, P3};

#[derive(Debug, Error)]
pub enum RepairError {
    #[error("{stage} repair stalled after {rounds} rounds with {remaining} foldings left")]
    RepairStall {
        stage: &'static str,
        rounds: usize,
        remaining: usize,
        report: Box<FoldingReport>,
    },
    #[error("optimizer rejected the warm start: {0}")]
    Optimizer(#[from] crate::optimizer::OptimError),
}

/// Per-category folding counts and element lists.
#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct FoldingReport {
    /// Folded boundary pairs, as positions `i` in the boundary loop: pair
    /// `(loop[i-1], loop[i])` has a negative sector term.
    pub folded_boundary_vertices: Vec<usize>,
    /// Interior faces (no boundary edge) with negative algebraic area.
    pub folded_interior_triangles: Vec<usize>,
    pub folded_boundary_triangles_kind1: Vec<usize>,
    pub folded_boundary_triangles_kind2: Vec<usize>,
    pub folded_boundary_triangles_kind3: Vec<usize>,
}

impl FoldingReport {
    pub fn triangle_total(&self) -> usize {
        self.folded_interior_triangles.len()
            + self.folded_boundary_triangles_kind1.len()
            + self.folded_boundary_triangles_kind2.len()
            + self.folded_boundary_triangles_kind3.len()
    }

    pub fn total(&self) -> usize {
        self.folded_boundary_vertices.len() + self.triangle_total()
    }

    pub fn is_clean(&self) -> bool {
        self.total() == 0
    }
}

/// Twice the algebraic area of the image of face `(i, j, k)`.
fn doubled_area(points: &[P2], f: [usize; 3]) -> f64 {
    cross2(
        sub2(points[f[1]], points[f[0]]),
        sub2(points[f[2]], points[f[0]]),
    )
}

/// Map from directed boundary edge `(loop[i-1], loop[i])` to pair index `i`.
fn boundary_pair_index(mesh: &TriMesh) -> HashMap<(usize, usize), usize> {
    let bl = mesh.boundary_loop();
    let n = bl.len();
    (0..n).map(|i| ((bl[(i + n - 1) % n], bl[i]), i)).collect()
}

/// Classifies every folding category of the embedding `points`.
pub fn classify_folding(mesh: &TriMesh, points: &[P2]) -> FoldingReport {
    let bl = mesh.boundary_loop();
    let f_b: Vec<P2> = bl.iter().map(|&v| points[v]).collect();
    let sigmas = sector_terms(&f_b);
    let pair_of_edge = boundary_pair_index(mesh);

    let mut report = FoldingReport {
        folded_boundary_vertices: sigmas
            .iter()
            .enumerate()
            .filter(|(_, s)| **s < 0.0)
            .map(|(i, _)| i)
            .collect(),
        ..Default::default()
    };

    for (fi, &face) in mesh.faces().iter().enumerate() {
        let area2 = doubled_area(points, face);
        // Boundary edges of this face, in face order.
        let mut boundary_edges = Vec::new();
        for e in 0..3 {
            let a = face[e];
            let b = face[(e + 1) % 3];
            if let Some(&pair) = pair_of_edge.get(&(a, b)) {
                boundary_edges.push((e, pair));
            }
        }
        if boundary_edges.is_empty() {
            if area2 < 0.0 {
                report.folded_interior_triangles.push(fi);
            }
            continue;
        }
        // First fold found in face order decides the kind.
        let mut kind = 0u8;
        for &(e, pair) in &boundary_edges {
            let sigma = sigmas[pair];
            let pair_folded = sigma < 0.0;
            // The off-edge vertex folds over the chord when it lands on the
            // side of the chord line away from the disk center. For a chord
            // between boundary images f_a, f_b the center side carries the
            // sign of cross(f_a, f_b) = 2 sigma.
            let m = face[(e + 2) % 3];
            let a = face[e];
            let b = face[(e + 1) % 3];
            let side_m = cross2(sub2(points[b], points[a]), sub2(points[m], points[a]));
            let folds_over = if sigma != 0.0 {
                side_m != 0.0 && (side_m > 0.0) != (sigma > 0.0)
            } else {
                side_m < 0.0
            };
            kind = match (folds_over, pair_folded) {
                (false, false) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (true, true) => 3,
            };
            if kind != 0 {
                break;
            }
        }
        match kind {
            1 => report.folded_boundary_triangles_kind1.push(fi),
            2 => report.folded_boundary_triangles_kind2.push(fi),
            3 => report.folded_boundary_triangles_kind3.push(fi),
            _ => {}
        }
    }
    report
}

/// Approximate convex combination of `v` in terms of `neighbors`.
#[derive(Debug, Clone)]
pub struct ConvexWeights {
    pub weights: Vec<f64>,
    /// `|| v - sum w_l n_l ||_2` at the optimum.
    pub residual: f64,
}

/// Minimizes `|| v - sum_l w_l n_l ||` over the probability simplex with a
/// primal active-set method; falls back to projected gradient if a reduced
/// KKT system degenerates. The simplex is compact, so a minimizer always
/// exists.
pub fn convex_weights(v: P3, neighbors: &[P3]) -> ConvexWeights {
    let k = neighbors.len();
    assert!(k >= 1, "convex weights need at least one neighbor");
    if k == 1 {
        return ConvexWeights {
            weights: vec![1.0],
            residual: dist3(v, neighbors[0]),
        };
    }
    // Gram matrix and linear term of (1/2)||v - N w||^2.
    let gram: Vec<f64> = (0..k * k)
        .map(|idx| {
            let (i, j) = (idx / k, idx % k);
            crate::util::dot3(neighbors[i], neighbors[j])
        })
        .collect();
    let lin: Vec<f64> = neighbors.iter().map(|n| crate::util::dot3(v, *n)).collect();

    let weights = active_set_simplex(&gram, &lin, k)
        .unwrap_or_else(|| projected_gradient_simplex(&gram, &lin, k));

    let mut rec = [0.0; 3];
    for (w, n) in weights.iter().zip(neighbors) {
        rec[0] += w * n[0];
        rec[1] += w * n[1];
        rec[2] += w * n[2];
    }
    ConvexWeights {
        residual: norm3(sub3(v, rec)),
        weights,
    }
}

/// Primal active-set method for `min (1/2) w'Gw - g'w` on the simplex.
/// Returns `None` if a reduced KKT solve degenerates.
fn active_set_simplex(gram: &[f64], lin: &[f64], k: usize) -> Option<Vec<f64>> {
    let tol = 1e-12;
    // Start from the single best vertex of the simplex.
    let start = (0..k)
        .min_by(|&a, &b| {
            let fa = 0.5 * gram[a * k + a] - lin[a];
            let fb = 0.5 * gram[b * k + b] - lin[b];
            fa.total_cmp(&fb)
        })
        .unwrap();
    let mut w = vec![0.0; k];
    w[start] = 1.0;
    let mut support: Vec<usize> = vec![start];

    // Equality-constrained minimizer on the support.
    let solve_support = |support: &[usize]| -> Option<(Vec<f64>, f64)> {
        let m = support.len();
        let mut a = vec![0.0; (m + 1) * (m + 1)];
        let mut b = vec![0.0; m + 1];
        for (r, &i) in support.iter().enumerate() {
            for (c, &j) in support.iter().enumerate() {
                a[r * (m + 1) + c] = gram[i * k + j];
            }
            a[r * (m + 1) + m] = 1.0;
            a[m * (m + 1) + r] = 1.0;
            b[r] = lin[i];
        }
        b[m] = 1.0;
        let sol = solve_dense(a, b)?;
        Some((sol[..m].to_vec(), sol[m]))
    };

    for _ in 0..4 * k * k + 16 {
        let (w_sub, gamma) = solve_support(&support)?;
        if w_sub.iter().all(|&x| x >= -tol) {
            let mut w_new = vec![0.0; k];
            for (&i, &x) in support.iter().zip(&w_sub) {
                w_new[i] = x.max(0.0);
            }
            // Renormalize away the clamping dust.
            let s: f64 = w_new.iter().sum();
            for x in &mut w_new {
                *x /= s;
            }
            w = w_new;
            // Dual feasibility of the inactive coordinates.
            let mut worst = (0usize, 0.0f64);
            for j in 0..k {
                if support.contains(&j) {
                    continue;
                }
                let grad_j: f64 =
                    (0..k).map(|i| gram[j * k + i] * w[i]).sum::<f64>() - lin[j] + gamma;
                if grad_j < worst.1 {
                    worst = (j, grad_j);
                }
            }
            if worst.1 >= -1e-11 {
                return Some(w);
            }
            support.push(worst.0);
            support.sort_unstable();
        } else {
            // Step toward the subproblem minimizer until a weight hits zero.
            let mut theta = 1.0f64;
            for (&i, &x) in support.iter().zip(&w_sub) {
                if x < w[i] {
                    theta = theta.min(w[i] / (w[i] - x));
                }
            }
            let mut removed = false;
            let mut w_new = w.clone();
            for (&i, &x) in support.iter().zip(&w_sub) {
                w_new[i] = w[i] + theta * (x - w[i]);
            }
            support.retain(|&i| {
                let keep = w_new[i] > tol;
                if !keep {
                    w_new[i] = 0.0;
                    removed = true;
                }
                keep
            });
            w = w_new;
            if !removed {
                // No blocking constraint found; numerical dead end.
                return None;
            }
        }
    }
    None
}

/// Projected-gradient fallback with the exact simplex projection.
fn projected_gradient_simplex(gram: &[f64], lin: &[f64], k: usize) -> Vec<f64> {
    let lipschitz: f64 = (0..k)
        .map(|i| (0..k).map(|j| gram[i * k + j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-12);
    let step = 1.0 / lipschitz;
    let mut w = vec![1.0 / k as f64; k];
    let mut grad = vec![0.0; k];
    for _ in 0..20_000 {
        for j in 0..k {
            grad[j] = (0..k).map(|i| gram[j * k + i] * w[i]).sum::<f64>() - lin[j];
        }
        let mut next: Vec<f64> = w.iter().zip(&grad).map(|(x, g)| x - step * g).collect();
        project_simplex(&mut next);
        let delta: f64 = next
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        w = next;
        if delta < 1e-14 {
            break;
        }
    }
    w
}

/// Euclidean projection onto the probability simplex (sort-based).
fn project_simplex(w: &mut [f64]) {
    let mut sorted = w.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        acc += x;
        let t = (acc - 1.0) / (i + 1) as f64;
        if i + 1 == sorted.len() || sorted[i + 1] <= t {
            theta = t;
            break;
        }
    }
    for x in w.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Caches per-vertex convex weights over the full 3D neighbor ring. The
/// weights depend only on the original geometry, never on the embedding.
#[derive(Default)]
pub struct WeightsCache {
    cache: HashMap<usize, ConvexWeights>,
}

impl WeightsCache {
    pub fn get(&mut self, mesh: &TriMesh, vertex: usize) -> &ConvexWeights {
        self.cache.entry(vertex).or_insert_with(|| {
            let vs = mesh.vertices();
            let neighbors: Vec<P3> = mesh.neighbors(vertex).iter().map(|&n| vs[n]).collect();
            convex_weights(vs[vertex], &neighbors)
        })
    }
}

/// Raises hinge penalties on currently folded boundary pairs and re-solves,
/// warm-started, until no boundary vertex folding remains. Returns the
/// number of re-solve rounds.
pub fn repair_boundary_vertices(
    system: &BlockSystem,
    penalty: &mut PenaltyState,
    f_b: &mut Vec<P2>,
    ncg: &NcgConfig,
    delta: f64,
    max_rounds: usize,
) -> Result<usize, RepairError> {
    for round in 0..max_rounds {
        let folded: Vec<usize> = sector_terms(f_b)
            .iter()
            .enumerate()
            .filter(|(_, s)| **s < 0.0)
            .map(|(i, _)| i)
            .collect();
        if folded.is_empty() {
            return Ok(round);
        }
        for &i in &folded {
            penalty.alpha[i] += delta;
        }
        let mut objective = SdmceObjective { system, penalty };
        let (solution, _trace) = minimize_on_circles(&mut objective, f_b, ncg)?;
        *f_b = solution;
    }
    let remaining = sector_terms(f_b).iter().filter(|&&s| s < 0.0).count();
    Err(RepairError::RepairStall {
        stage: "boundary vertex",
        rounds: max_rounds,
        remaining,
        report: Box::default(),
    })
}

/// Moves the off-edge vertex of a folded boundary triangle to the convex
/// combination of its mapped neighbors (weights from the 3D geometry).
/// Returns `false` when the off-edge vertex is itself a boundary vertex and
/// must not move.
pub fn repair_boundary_triangle(
    mesh: &TriMesh,
    points: &mut [P2],
    face: usize,
    cache: &mut WeightsCache,
) -> bool {
    let f = mesh.faces()[face];
    let pair_of_edge = boundary_pair_index(mesh);
    let mut off_edge = None;
    for e in 0..3 {
        if pair_of_edge.contains_key(&(f[e], f[(e + 1) % 3])) {
            off_edge = Some(f[(e + 2) % 3]);
            break;
        }
    }
    let Some(m) = off_edge else {
        return false;
    };
    if mesh.is_boundary_vertex(m) {
        return false;
    }
    let weights = cache.get(mesh, m).weights.clone();
    let mut new_point = [0.0, 0.0];
    for (&n, w) in mesh.neighbors(m).iter().zip(&weights) {
        new_point[0] += w * points[n][0];
        new_point[1] += w * points[n][1];
    }
    points[m] = new_point;
    true
}

/// The coupled three-vertex update for a folded interior triangle. Boundary
/// vertices among the three are pinned. Falls back to sequential
/// single-vertex updates when the 3x3 system is near singular.
pub fn repair_interior_triangle(
    mesh: &TriMesh,
    points: &mut [P2],
    face: usize,
    cache: &mut WeightsCache,
) {
    let f = mesh.faces()[face];
    let movable: Vec<usize> = (0..3).filter(|&c| !mesh.is_boundary_vertex(f[c])).collect();
    if movable.is_empty() {
        return;
    }

    // Per corner: weight on each of the other two corners, and the external
    // combination over the rest of the neighbor ring.
    let mut mutual = [[0.0f64; 3]; 3];
    let mut external = [[0.0f64; 2]; 3];
    for c in 0..3 {
        let v = f[c];
        let weights = cache.get(mesh, v).weights.clone();
        for (&n, w) in mesh.neighbors(v).iter().zip(&weights) {
            if n == f[(c + 1) % 3] {
                mutual[c][(c + 1) % 3] = *w;
            } else if n == f[(c + 2) % 3] {
                mutual[c][(c + 2) % 3] = *w;
            } else {
                external[c][0] += w * points[n][0];
                external[c][1] += w * points[n][1];
            }
        }
    }

    let m = movable.len();
    let mut a = vec![0.0; m * m];
    let mut bx = vec![0.0; m];
    let mut by = vec![0.0; m];
    for (r, &c) in movable.iter().enumerate() {
        a[r * m + r] = 1.0;
        bx[r] = external[c][0];
        by[r] = external[c][1];
        for other in 0..3 {
            if other == c {
                continue;
            }
            let w = mutual[c][other];
            if let Some(pos) = movable.iter().position(|&mc| mc == other) {
                a[r * m + pos] = -w;
            } else {
                // Pinned corner contributes as a constant.
                bx[r] += w * points[f[other]][0];
                by[r] += w * points[f[other]][1];
            }
        }
    }

    match (solve_dense(a.clone(), bx), solve_dense(a, by)) {
        (Some(xs), Some(ys)) => {
            for (r, &c) in movable.iter().enumerate() {
                points[f[c]] = [xs[r], ys[r]];
            }
        }
        _ => {
            // Near-singular coupling: update each movable corner in turn
            // with the boundary-style single-vertex rule.
            for &c in &movable {
                let v = f[c];
                let weights = cache.get(mesh, v).weights.clone();
                let mut p = [0.0, 0.0];
                for (&n, w) in mesh.neighbors(v).iter().zip(&weights) {
                    p[0] += w * points[n][0];
                    p[1] += w * points[n][1];
                }
                points[v] = p;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RepairOptions {
    /// Hinge increment per folded pair and round.
    pub delta: f64,
    pub boundary_vertex_rounds: usize,
    pub triangle_passes: usize,
}

impl RepairOptions {
    /// Default increment `|boundary| / |interior|`.
    pub fn for_mesh(mesh: &TriMesh) -> Self {
        let nb = mesh.boundary_loop().len() as f64;
        let ni = mesh.interior_count().max(1) as f64;
        Self {
            delta: nb / ni,
            boundary_vertex_rounds: 100,
            triangle_passes: 20,
        }
    }

    /// Alternative increment `|boundary| / |faces|`.
    pub fn for_mesh_face_ratio(mesh: &TriMesh) -> Self {
        let nb = mesh.boundary_loop().len() as f64;
        let nf = mesh.face_count().max(1) as f64;
        Self {
            delta: nb / nf,
            ..Self::for_mesh(mesh)
        }
    }
}

#[derive(Debug, Clone)]
pub struct RepairHistory {
    /// Folding state before repair, after each stage, and final.
    pub snapshots: Vec<FoldingReport>,
    pub boundary_vertex_rounds: usize,
    pub boundary_triangle_passes: usize,
    pub interior_triangle_passes: usize,
}

/// Runs the full three-stage repair on a converged solution: boundary
/// vertices, then boundary triangles, then interior triangles, each stage
/// re-classifying between passes. `points` holds one image per vertex and
/// is updated in place; boundary repair re-solves and re-extends the
/// interior harmonically.
pub fn repair_all(
    mesh: &TriMesh,
    system: &BlockSystem,
    points: &mut Vec<P2>,
    penalty: &mut PenaltyState,
    ncg: &NcgConfig,
    options: &RepairOptions,
) -> Result<RepairHistory, RepairError> {
    let mut snapshots = vec![classify_folding(mesh, points)];
    let mut history = RepairHistory {
        snapshots: Vec::new(),
        boundary_vertex_rounds: 0,
        boundary_triangle_passes: 0,
        interior_triangle_passes: 0,
    };

    // Stage 1: boundary vertices.
    if !snapshots[0].folded_boundary_vertices.is_empty() {
        let mut f_b: Vec<P2> = system.boundary().iter().map(|&v| points[v]).collect();
        history.boundary_vertex_rounds = repair_boundary_vertices(
            system,
            penalty,
            &mut f_b,
            ncg,
            options.delta,
            options.boundary_vertex_rounds,
        )?;
        *points = system.extend_harmonic(&f_b, mesh.vertex_count());
    }
    snapshots.push(classify_folding(mesh, points));

    // Stage 2: boundary triangles.
    let mut cache = WeightsCache::default();
    for pass in 0..options.triangle_passes {
        let report = classify_folding(mesh, points);
        let folded: Vec<usize> = report
            .folded_boundary_triangles_kind1
            .iter()
            .chain(&report.folded_boundary_triangles_kind2)
            .chain(&report.folded_boundary_triangles_kind3)
            .copied()
            .collect();
        if folded.is_empty() {
            break;
        }
        let mut moved_any = false;
        for face in folded {
            moved_any |= repair_boundary_triangle(mesh, points, face, &mut cache);
        }
        history.boundary_triangle_passes = pass + 1;
        if !moved_any {
            break;
        }
    }
    snapshots.push(classify_folding(mesh, points));

    // Stage 3: interior triangles.
    for pass in 0..options.triangle_passes {
        let report = classify_folding(mesh, points);
        if report.folded_interior_triangles.is_empty() {
            break;
        }
        for face in report.folded_interior_triangles {
            repair_interior_triangle(mesh, points, face, &mut cache);
        }
        history.interior_triangle_passes = pass + 1;
    }

    let final_report = classify_folding(mesh, points);
    snapshots.push(final_report.clone());
    history.snapshots = snapshots;
    if !final_report.is_clean() {
        return Err(RepairError::RepairStall {
            stage: "final",
            rounds: options.triangle_passes,
            remaining: final_report.total(),
            report: Box::new(final_report),
        });
    }
    Ok(history)
}

/// Point-in-triangle sweep: lists `(face, vertex)` pairs where a foreign
/// vertex lies strictly inside a face's image, the defining symptom of
/// folding. Orientation signs use an epsilon of 1e-14 at the configuration
/// scale.
pub fn foreign_vertex_violations(points: &[P2], faces: &[[usize; 3]]) -> Vec<(usize, usize)> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    // Uniform grid over the points for candidate pruning.
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        lo[0] = lo[0].min(p[0]);
        lo[1] = lo[1].min(p[1]);
        hi[0] = hi[0].max(p[0]);
        hi[1] = hi[1].max(p[1]);
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-30);
    let cells = (n as f64).sqrt().ceil() as usize + 1;
    let cell = span / cells as f64;
    let index = |x: f64, y: f64| -> (usize, usize) {
        let cx = (((x - lo[0]) / cell) as usize).min(cells);
        let cy = (((y - lo[1]) / cell) as usize).min(cells);
        (cx, cy)
    };
    let mut grid: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(index(p[0], p[1])).or_default().push(i);
    }

    let eps = 1e-14 * span * span;
    let mut violations = Vec::new();
    for (fi, &[a, b, c]) in faces.iter().enumerate() {
        let (pa, pb, pc) = (points[a], points[b], points[c]);
        let fx0 = pa[0].min(pb[0]).min(pc[0]);
        let fx1 = pa[0].max(pb[0]).max(pc[0]);
        let fy0 = pa[1].min(pb[1]).min(pc[1]);
        let fy1 = pa[1].max(pb[1]).max(pc[1]);
        let (cx0, cy0) = index(fx0, fy0);
        let (cx1, cy1) = index(fx1, fy1);
        for cx in cx0..=cx1 {
            for cy in cy0..=cy1 {
                let Some(bucket) = grid.get(&(cx, cy)) else {
                    continue;
                };
                for &v in bucket {
                    if v == a || v == b || v == c {
                        continue;
                    }
                    let p = points[v];
                    let o1 = cross2(sub2(pb, pa), sub2(p, pa));
                    let o2 = cross2(sub2(pc, pb), sub2(p, pb));
                    let o3 = cross2(sub2(pa, pc), sub2(p, pc));
                    let strictly_inside =
                        (o1 > eps && o2 > eps && o3 > eps) || (o1 < -eps && o2 < -eps && o3 < -eps);
                    if strictly_inside {
                        violations.push((fi, v));
                    }
                }
            }
        }
    }
    violations.sort_unstable();
    violations.dedup();
    violations
}
