//! Quality diagnostics of a parameterization: relative angle errors, signed
//! area deviation, per-face Beltrami moduli, the one-to-one distance
//! distribution, and the aggregate report.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::energy::polygon_area;
use crate::laplacian::CotanLaplacian;
use crate::mesh::TriMesh;
use crate::unfolding::{classify_folding, FoldingReport};
use crate::util::{
    cross2, cross3, dist3, dot2, dot3, mean, norm2, norm3, std_dev, sub2, sub3, P2, P3,
};

/// Relative angle change of every face corner.
#[derive(Debug, Clone, Serialize)]
pub struct AngleErrorStats {
    /// One entry per corner, `3 * F` in face order; `None` marks corners of
    /// degenerate image faces, which are excluded from the statistics.
    pub per_corner: Vec<Option<f64>>,
    pub mean: f64,
    pub std: f64,
    /// Faces whose image is degenerate (a zero-length edge).
    pub degenerate_image_faces: Vec<usize>,
}

/// Per-corner relative angle errors `|theta_v - theta_f| / theta_v`, with
/// source angles unsigned and image angles measured counter-clockwise (a
/// flipped face therefore scores its reflex angle).
pub fn angle_errors(mesh: &TriMesh, points: &[P2]) -> AngleErrorStats {
    let vs = mesh.vertices();
    let mut per_corner = Vec::with_capacity(3 * mesh.face_count());
    let mut degenerate = Vec::new();
    for (fi, &f) in mesh.faces().iter().enumerate() {
        let image_degenerate = (0..3).any(|c| {
            let q = sub2(points[f[(c + 1) % 3]], points[f[c]]);
            norm2(q) < 1e-300
        });
        if image_degenerate {
            degenerate.push(fi);
            per_corner.extend([None, None, None]);
            continue;
        }
        for c in 0..3 {
            let a = f[c];
            let b = f[(c + 1) % 3];
            let d = f[(c + 2) % 3];
            let theta_v = angle3(vs[a], vs[b], vs[d]);
            let theta_f = angle2_ccw(points[a], points[b], points[d]);
            per_corner.push(Some((theta_v - theta_f).abs() / theta_v));
        }
    }
    let valid: Vec<f64> = per_corner.iter().flatten().copied().collect();
    AngleErrorStats {
        mean: mean(&valid),
        std: std_dev(&valid),
        per_corner,
        degenerate_image_faces: degenerate,
    }
}

/// Unsigned 3D corner angle at `a` spanned by `b` and `d`.
fn angle3(a: P3, b: P3, d: P3) -> f64 {
    let u = sub3(b, a);
    let v = sub3(d, a);
    norm3(cross3(u, v)).atan2(dot3(u, v))
}

/// 2D corner angle at `a`, measured counter-clockwise from `b` to `d`;
/// interior angle for a CCW face, reflex for a flipped one.
fn angle2_ccw(a: P2, b: P2, d: P2) -> f64 {
    let u = sub2(b, a);
    let v = sub2(d, a);
    let theta = cross2(u, v).atan2(dot2(u, v));
    if theta < 0.0 {
        theta + std::f64::consts::TAU
    } else {
        theta
    }
}

/// Per-face Beltrami moduli of the piecewise-affine map.
#[derive(Debug, Clone)]
pub struct BeltramiResult {
    /// `|mu|` per face; `f64::INFINITY` marks a conformal pole
    /// (`|f_z| < 1e-14`, e.g. a reflected face).
    pub moduli: Vec<f64>,
    /// Mean over the finite entries.
    pub mean: f64,
    pub pole_faces: Vec<usize>,
}

/// Computes `|mu| = |f_zbar| / |f_z|` per face: the source triangle is
/// flattened isometrically (edge lengths preserved, orientation kept), the
/// affine map to the image triangle is formed, and the Wirtinger derivatives
/// are read off. The result does not depend on the local frame rotation.
pub fn beltrami_coefficients(mesh: &TriMesh, points: &[P2]) -> BeltramiResult {
    let vs = mesh.vertices();
    let mut moduli = Vec::with_capacity(mesh.face_count());
    let mut poles = Vec::new();
    for (fi, &[i, j, k]) in mesh.faces().iter().enumerate() {
        let e_ij = sub3(vs[j], vs[i]);
        let e_ik = sub3(vs[k], vs[i]);
        let l_ij = norm3(e_ij);
        // Local isometric frame: p_i at the origin, p_j on the x-axis.
        let x_k = dot3(e_ik, e_ij) / l_ij;
        let y_k = norm3(cross3(e_ij, e_ik)) / l_ij;
        // Affine map A with A (p_j - p_i) = q_j - q_i, A (p_k - p_i) = q_k - q_i.
        let q_j = sub2(points[j], points[i]);
        let q_k = sub2(points[k], points[i]);
        // Inverse of [[l_ij, x_k], [0, y_k]] applied on the right.
        let det = l_ij * y_k;
        let a11 = q_j[0] / l_ij;
        let a21 = q_j[1] / l_ij;
        let a12 = (q_k[0] * l_ij - q_j[0] * x_k) / det;
        let a22 = (q_k[1] * l_ij - q_j[1] * x_k) / det;
        // f_z = ((u_x + v_y) + i (v_x - u_y)) / 2, f_zbar likewise.
        let fz = [0.5 * (a11 + a22), 0.5 * (a21 - a12)];
        let fzbar = [0.5 * (a11 - a22), 0.5 * (a21 + a12)];
        let fz_norm = norm2(fz);
        if fz_norm < 1e-14 {
            moduli.push(f64::INFINITY);
            poles.push(fi);
        } else {
            moduli.push(norm2(fzbar) / fz_norm);
        }
    }
    let finite: Vec<f64> = moduli.iter().copied().filter(|m| m.is_finite()).collect();
    BeltramiResult {
        mean: mean(&finite),
        moduli,
        pole_faces: poles,
    }
}

/// For each vertex, the 3D distance to the original position of its nearest
/// neighbor in the image plane. Distant originals mapping close together
/// (large values) flag an overlapping, non-injective parameterization.
pub fn bijectivity_distances(vertices: &[P3], points: &[P2]) -> Vec<f64> {
    let n = points.len();
    assert!(n >= 2, "one-to-one distances need at least two vertices");
    // Uniform grid; ring-by-ring scan gives the exact nearest neighbor.
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        lo[0] = lo[0].min(p[0]);
        lo[1] = lo[1].min(p[1]);
        hi[0] = hi[0].max(p[0]);
        hi[1] = hi[1].max(p[1]);
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-30);
    let cells = ((n as f64).sqrt().ceil() as usize + 1).max(1);
    let cell = span / cells as f64;
    let cell_of = |p: P2| -> (isize, isize) {
        (
            (((p[0] - lo[0]) / cell) as isize).clamp(0, cells as isize),
            (((p[1] - lo[1]) / cell) as isize).clamp(0, cells as isize),
        )
    };
    let mut grid: std::collections::HashMap<(isize, isize), Vec<usize>> =
        std::collections::HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(cell_of(*p)).or_default().push(i);
    }

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (cx, cy) = cell_of(points[i]);
        let mut best = f64::INFINITY;
        let mut best_idx = usize::MAX;
        let mut radius: isize = 0;
        loop {
            // Once a candidate is found, rings past best/cell cannot win.
            if best_idx != usize::MAX && (radius - 1).max(0) as f64 * cell > best {
                break;
            }
            let mut any_cell = false;
            for dx in -radius..=radius {
                for dy in -radius..=radius {
                    if dx.abs().max(dy.abs()) != radius {
                        continue;
                    }
                    let key = (cx + dx, cy + dy);
                    if let Some(bucket) = grid.get(&key) {
                        any_cell = true;
                        for &j in bucket {
                            if j == i {
                                continue;
                            }
                            let d = norm2(sub2(points[j], points[i]));
                            if d < best || (d == best && j < best_idx) {
                                best = d;
                                best_idx = j;
                            }
                        }
                    }
                }
            }
            radius += 1;
            if radius as usize > 2 * cells + 2 && (best_idx != usize::MAX || !any_cell) {
                break;
            }
        }
        out.push(dist3(vertices[i], vertices[best_idx]));
    }
    out
}

/// Everything the solver and auditors report about one parameterization.
#[derive(Debug, Clone, Serialize)]
pub struct QualityReport {
    /// Discrete conformal energy `(1/2) <L f, f> - pi` of the full embedding.
    pub e_cd: f64,
    /// Signed area deviation `pi - A(f)`.
    pub eps_a_signed: f64,
    pub angle_error_mean: f64,
    pub angle_error_std: f64,
    pub degenerate_image_faces: Vec<usize>,
    /// `|mu|` per face; `None` marks a conformal pole (infinite modulus).
    pub beltrami: Vec<Option<f64>>,
    pub beltrami_mean: f64,
    /// One-to-one distances `d_i`, one per vertex.
    pub d_list: Vec<f64>,
    pub d_max: f64,
    pub folding: FoldingReport,
    pub foreign_vertex_overlaps: usize,
    pub wall_seconds: f64,
}

/// Aggregates every diagnostic for the embedding. `wall_seconds` is the
/// caller-measured solve time.
pub fn build_report(
    mesh: &TriMesh,
    lap: &CotanLaplacian,
    points: &[P2],
    wall_seconds: f64,
) -> QualityReport {
    let e_cd = 0.5 * lap.quad_form(points) - PI;
    let f_b: Vec<P2> = mesh.boundary_loop().iter().map(|&v| points[v]).collect();
    let eps_a_signed = PI - polygon_area(&f_b);
    let angles = angle_errors(mesh, points);
    let beltrami = beltrami_coefficients(mesh, points);
    let d_list = bijectivity_distances(mesh.vertices(), points);
    let d_max = d_list.iter().copied().fold(0.0, f64::max);
    let folding = classify_folding(mesh, points);
    let overlaps = crate::unfolding::foreign_vertex_violations(points, mesh.faces()).len();
    QualityReport {
        e_cd,
        eps_a_signed,
        angle_error_mean: angles.mean,
        angle_error_std: angles.std,
        degenerate_image_faces: angles.degenerate_image_faces,
        beltrami: beltrami
            .moduli
            .iter()
            .map(|&m| if m.is_finite() { Some(m) } else { None })
            .collect(),
        beltrami_mean: beltrami.mean,
        d_list,
        d_max,
        folding,
        foreign_vertex_overlaps: overlaps,
        wall_seconds,
    }
}

/// Writes the per-corner angle errors as CSV (`face,corner,error`; empty
/// error for excluded corners).
pub fn write_angle_errors_csv<W: Write>(stats: &AngleErrorStats, mut w: W) -> std::io::Result<()> {
    writeln!(w, "face,corner,error")?;
    for (idx, e) in stats.per_corner.iter().enumerate() {
        match e {
            Some(e) => writeln!(w, "{},{},{}", idx / 3, idx % 3, crate::util::fmt_g17(*e))?,
            None => writeln!(w, "{},{},", idx / 3, idx % 3)?,
        }
    }
    Ok(())
}

/// Writes per-face Beltrami moduli as CSV (`face,modulus`, `inf` at poles).
pub fn write_beltrami_csv<W: Write>(result: &BeltramiResult, mut w: W) -> std::io::Result<()> {
    writeln!(w, "face,modulus")?;
    for (fi, m) in result.moduli.iter().enumerate() {
        if m.is_finite() {
            writeln!(w, "{},{}", fi, crate::util::fmt_g17(*m))?;
        } else {
            writeln!(w, "{fi},inf")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn planar_points(mesh: &TriMesh) -> Vec<P2> {
        mesh.vertices().iter().map(|v| [v[0], v[1]]).collect()
    }

    #[test]
    fn identity_map_has_zero_angle_error() {
        let mesh = fixtures::flat_disk(3);
        let stats = angle_errors(&mesh, &planar_points(&mesh));
        assert!(stats.mean < 1e-12, "{}", stats.mean);
        assert_eq!(stats.per_corner.len(), 3 * mesh.face_count());
        assert!(stats.degenerate_image_faces.is_empty());
    }

    #[test]
    fn equilateral_corner_to_right_angle_scores_half() {
        // Equilateral source triangle mapped so one corner becomes 90
        // degrees: error |pi/3 - pi/2| / (pi/3) = 1/2 at that corner.
        let h = 3f64.sqrt() / 2.0;
        let mesh = TriMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, h, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let image: Vec<P2> = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let stats = angle_errors(&mesh, &image);
        let err0 = stats.per_corner[0].unwrap();
        assert!((err0 - 0.5).abs() < 1e-12, "{err0}");
    }

    #[test]
    fn degenerate_image_face_is_flagged_not_fatal() {
        let mesh = fixtures::flat_fan(3);
        let mut image = planar_points(&mesh);
        image[1] = image[2]; // zero-length image edge
        let stats = angle_errors(&mesh, &image);
        assert!(!stats.degenerate_image_faces.is_empty());
        assert!(stats.per_corner.iter().any(Option::is_none));
    }

    #[test]
    fn similarity_map_is_conformal() {
        let mesh = fixtures::flat_disk(2);
        // Rotation by 0.7 plus scale 2.3.
        let (s, c) = (0.7f64.sin(), 0.7f64.cos());
        let image: Vec<P2> = mesh
            .vertices()
            .iter()
            .map(|v| [2.3 * (c * v[0] - s * v[1]), 2.3 * (s * v[0] + c * v[1])])
            .collect();
        let b = beltrami_coefficients(&mesh, &image);
        for m in &b.moduli {
            assert!(*m < 1e-12, "{m}");
        }
        let stats = angle_errors(&mesh, &image);
        assert!(stats.mean < 1e-12);
    }

    #[test]
    fn anisotropic_stretch_has_known_modulus() {
        // (x, y) -> (2x, y): f_z = 3/2, f_zbar = 1/2, |mu| = 1/3.
        let mesh = fixtures::flat_disk(2);
        let image: Vec<P2> = mesh.vertices().iter().map(|v| [2.0 * v[0], v[1]]).collect();
        let b = beltrami_coefficients(&mesh, &image);
        for m in &b.moduli {
            assert!((m - 1.0 / 3.0).abs() < 1e-12, "{m}");
        }
    }

    #[test]
    fn reflection_hits_the_conformal_pole() {
        let mesh = fixtures::flat_disk(2);
        let image: Vec<P2> = mesh.vertices().iter().map(|v| [v[0], -v[1]]).collect();
        let b = beltrami_coefficients(&mesh, &image);
        assert_eq!(b.pole_faces.len(), mesh.face_count());
        assert!(b.moduli.iter().all(|m| m.is_infinite()));
    }

    #[test]
    fn beltrami_invariant_under_image_rotation_and_cyclic_relabel() {
        let mesh = fixtures::flat_disk(2);
        let image: Vec<P2> = mesh
            .vertices()
            .iter()
            .map(|v| [2.0 * v[0] + 0.3 * v[1], v[1]])
            .collect();
        let base = beltrami_coefficients(&mesh, &image);
        // Global rotation of the image plane.
        let (s, c) = (1.1f64.sin(), 1.1f64.cos());
        let rotated: Vec<P2> = image
            .iter()
            .map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]])
            .collect();
        let rot = beltrami_coefficients(&mesh, &rotated);
        for (a, b) in base.moduli.iter().zip(&rot.moduli) {
            assert!((a - b).abs() < 1e-12);
        }
        // Cyclic relabeling of a face.
        let faces: Vec<[usize; 3]> = mesh.faces().iter().map(|&[i, j, k]| [j, k, i]).collect();
        let relabeled = TriMesh::new(mesh.vertices().to_vec(), faces).unwrap();
        let rel = beltrami_coefficients(&relabeled, &image);
        for (a, b) in base.moduli.iter().zip(&rel.moduli) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn conformal_iff_zero_angle_error_on_fixtures() {
        let mesh = fixtures::flat_disk(2);
        let conformal: Vec<P2> = mesh
            .vertices()
            .iter()
            .map(|v| [3.0 * v[1], -3.0 * v[0]])
            .collect();
        let nonconformal: Vec<P2> = mesh.vertices().iter().map(|v| [2.0 * v[0], v[1]]).collect();
        let (bc, ac) = (
            beltrami_coefficients(&mesh, &conformal),
            angle_errors(&mesh, &conformal),
        );
        assert!(bc.moduli.iter().all(|m| *m < 1e-12) && ac.mean < 1e-12);
        let (bn, an) = (
            beltrami_coefficients(&mesh, &nonconformal),
            angle_errors(&mesh, &nonconformal),
        );
        assert!(bn.moduli.iter().all(|m| *m > 1e-3) && an.mean > 1e-3);
    }

    #[test]
    fn planar_identity_distances_are_local() {
        let mesh = fixtures::flat_disk(3);
        let d = bijectivity_distances(mesh.vertices(), &planar_points(&mesh));
        // Nearest image neighbor is a mesh neighbor: all distances small.
        let dmax = d.iter().copied().fold(0.0, f64::max);
        assert!(dmax < 0.5, "{dmax}");
    }

    #[test]
    fn two_vertices_give_edge_length() {
        let d = bijectivity_distances(
            &[[0.0, 0.0, 0.0], [3.0, 4.0, 0.0]],
            &[[0.0, 0.0], [1.0, 0.0]],
        );
        assert_eq!(d, vec![5.0, 5.0]);
    }

    #[test]
    fn folded_strip_produces_large_distances() {
        // Strip [0, 2] x [0, 1]; image folds at x = 1 so the two halves
        // overlap. Points near x = 0 and x = 2 map together while their
        // originals are ~2 apart.
        let mesh = fixtures::grid_strip(8, 2, 2.0, 1.0);
        let folded: Vec<P2> = mesh
            .vertices()
            .iter()
            .map(|v| {
                let x = if v[0] <= 1.0 { v[0] } else { 2.0 - v[0] };
                [x, v[1]]
            })
            .collect();
        let d = bijectivity_distances(mesh.vertices(), &folded);
        let dmax = d.iter().copied().fold(0.0, f64::max);
        assert!(dmax > 1.0, "expected overlap flag, max {dmax}");

        let identity = planar_points(&mesh);
        let d_id = bijectivity_distances(mesh.vertices(), &identity);
        let dmax_id = d_id.iter().copied().fold(0.0, f64::max);
        assert!(dmax > 3.0 * dmax_id);
    }

    #[test]
    fn bijectivity_is_invariant_under_relabeling() {
        let mesh = fixtures::flat_disk(2);
        let points = planar_points(&mesh);
        let d = bijectivity_distances(mesh.vertices(), &points);
        // Reverse the labels.
        let vertices_rev: Vec<P3> = mesh.vertices().iter().rev().copied().collect();
        let points_rev: Vec<P2> = points.iter().rev().copied().collect();
        let d_rev = bijectivity_distances(&vertices_rev, &points_rev);
        for (a, b) in d.iter().zip(d_rev.iter().rev()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn report_round_trips_through_json() {
        let mesh = fixtures::flat_fan(6);
        let lap = crate::laplacian::build_laplacian(&mesh).unwrap();
        let points = planar_points(&mesh);
        let report = build_report(&mesh, &lap, &points, 0.25);
        let json = serde_json::to_string_pretty(&report).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["e_cd"].as_f64().unwrap(), report.e_cd);
        assert_eq!(parsed["d_list"].as_array().unwrap().len(), 7);
        assert_eq!(parsed["wall_seconds"].as_f64().unwrap(), 0.25);
        // Serialization order is the struct order, so two dumps agree.
        assert_eq!(json, serde_json::to_string_pretty(&report).unwrap());
    }

    #[test]
    fn fan_report_matches_analytic_values() {
        let n = 12;
        let mesh = fixtures::flat_fan(n);
        let lap = crate::laplacian::build_laplacian(&mesh).unwrap();
        let report = build_report(&mesh, &lap, &planar_points(&mesh), 0.0);
        let poly = (n as f64 / 2.0) * (std::f64::consts::TAU / n as f64).sin();
        assert!((report.e_cd - (poly - PI)).abs() < 1e-8);
        assert!((report.eps_a_signed - (PI - poly)).abs() < 1e-8);
        assert_eq!(report.folding.total(), 0);
    }

    #[test]
    fn collapsed_embedding_reports_minus_pi() {
        let mesh = fixtures::flat_fan(6);
        let lap = crate::laplacian::build_laplacian(&mesh).unwrap();
        let collapsed: Vec<P2> = vec![[1.0, 0.0]; mesh.vertex_count()];
        let report = build_report(&mesh, &lap, &collapsed, 0.0);
        assert!((report.e_cd + PI).abs() < 1e-12);
        assert!((report.eps_a_signed - PI).abs() < 1e-12);
    }

    #[test]
    fn csv_exports_have_headers() {
        let mesh = fixtures::flat_fan(4);
        let points = planar_points(&mesh);
        let stats = angle_errors(&mesh, &points);
        let mut buf = Vec::new();
        write_angle_errors_csv(&stats, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("face,corner,error"));

        let b = beltrami_coefficients(&mesh, &points);
        let mut buf = Vec::new();
        write_beltrami_csv(&b, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("face,modulus"));
    }
}
