//! Procedural test meshes: flat fans and disks, hemispheres, grid strips.
//!
//! These generators produce valid disk-topology meshes with
//! counter-clockwise faces, used by the test suites and handy for
//! experiments. Construction goes through [`TriMesh::new`], so the generated
//! connectivity is re-validated on every call.

use std::f64::consts::TAU;

use crate::mesh::TriMesh;
use crate::util::P3;

/// Center vertex plus `n` rim vertices on the unit circle, one triangle per
/// rim edge. The flat disk polygon itself: its identity flattening is the
/// exact minimizer of the disk conformal energy.
pub fn flat_fan(n: usize) -> TriMesh {
    assert!(n >= 3);
    let mut vertices: Vec<P3> = vec![[0.0, 0.0, 0.0]];
    for k in 0..n {
        let t = TAU * k as f64 / n as f64;
        vertices.push([t.cos(), t.sin(), 0.0]);
    }
    let faces: Vec<[usize; 3]> = (0..n).map(|k| [0, 1 + k, 1 + (k + 1) % n]).collect();
    TriMesh::new(vertices, faces).expect("fan construction is valid")
}

/// Ring/angle layout of the hexagonal disk triangulation: ring `r` of `R`
/// holds `6r` vertices. Returns (vertex rings, radius fractions).
fn hex_rings(rings: usize) -> (Vec<Vec<usize>>, Vec<Vec<f64>>) {
    let mut idx = 0usize;
    let mut ring_indices = Vec::with_capacity(rings + 1);
    let mut ring_angles = Vec::with_capacity(rings + 1);
    for r in 0..=rings {
        let count = if r == 0 { 1 } else { 6 * r };
        let mut ids = Vec::with_capacity(count);
        let mut angles = Vec::with_capacity(count);
        for k in 0..count {
            ids.push(idx);
            idx += 1;
            angles.push(TAU * k as f64 / count as f64);
        }
        ring_indices.push(ids);
        ring_angles.push(angles);
    }
    (ring_indices, ring_angles)
}

/// Stitches two concentric vertex rings into a CCW triangle strip by
/// advancing whichever ring has the smaller next angle.
fn zip_rings(
    faces: &mut Vec<[usize; 3]>,
    inner: &[usize],
    inner_angles: &[f64],
    outer: &[usize],
    outer_angles: &[f64],
) {
    let na = inner.len();
    let nb = outer.len();
    if na == 1 {
        for j in 0..nb {
            faces.push([inner[0], outer[j], outer[(j + 1) % nb]]);
        }
        return;
    }
    let (mut i, mut j) = (0usize, 0usize);
    while i < na || j < nb {
        let next_a = if i < na {
            if i + 1 < na {
                inner_angles[i + 1]
            } else {
                TAU
            }
        } else {
            f64::INFINITY
        };
        let next_b = if j < nb {
            if j + 1 < nb {
                outer_angles[j + 1]
            } else {
                TAU
            }
        } else {
            f64::INFINITY
        };
        if next_a <= next_b {
            faces.push([inner[i % na], outer[j % nb], inner[(i + 1) % na]]);
            i += 1;
        } else {
            faces.push([inner[i % na], outer[j % nb], outer[(j + 1) % nb]]);
            j += 1;
        }
    }
}

/// Hexagonal flat disk triangulation with `rings` concentric rings
/// (`1 + 3 rings (rings+1)` vertices), radius 1.
pub fn flat_disk(rings: usize) -> TriMesh {
    disk_like(rings, |rho, theta| {
        [rho * theta.cos(), rho * theta.sin(), 0.0]
    })
}

/// Unit hemisphere (z >= 0) with the hexagonal disk connectivity lifted by
/// polar angle `phi = rho * pi/2`; the boundary is the equator.
pub fn hemisphere(rings: usize) -> TriMesh {
    disk_like(rings, |rho, theta| {
        let phi = rho * std::f64::consts::FRAC_PI_2;
        [phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos()]
    })
}

fn disk_like(rings: usize, position: impl Fn(f64, f64) -> P3) -> TriMesh {
    assert!(rings >= 1);
    let (ring_indices, ring_angles) = hex_rings(rings);
    let mut vertices = Vec::new();
    for (r, (ids, angles)) in ring_indices.iter().zip(&ring_angles).enumerate() {
        let rho = r as f64 / rings as f64;
        for (_, &theta) in ids.iter().zip(angles) {
            vertices.push(position(rho, theta));
        }
    }
    let mut faces = Vec::new();
    for r in 0..rings {
        zip_rings(
            &mut faces,
            &ring_indices[r],
            &ring_angles[r],
            &ring_indices[r + 1],
            &ring_angles[r + 1],
        );
    }
    TriMesh::new(vertices, faces).expect("disk construction is valid")
}

/// Wavy open surface over the unit disk: hex connectivity with height
/// `z = amplitude sin(waves theta + 1.7 rho) 4 rho^2 (1 - rho^2)`. At low
/// ring counts the curvature is under-resolved, which makes the converged
/// parameterization carry a sizable discretization angle error.
pub fn bumpy_disk(rings: usize, amplitude: f64, waves: usize) -> TriMesh {
    disk_like(rings, |rho, theta| {
        [
            rho * theta.cos(),
            rho * theta.sin(),
            amplitude
                * (waves as f64 * theta + 1.7 * rho).sin()
                * 4.0
                * rho
                * rho
                * (1.0 - rho * rho),
        ]
    })
}

/// Flat rectangular strip `[0, length] x [0, width]` on a `(nx+1) x (ny+1)`
/// grid, two CCW triangles per cell.
pub fn grid_strip(nx: usize, ny: usize, length: f64, width: f64) -> TriMesh {
    assert!(nx >= 1 && ny >= 1);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([
                length * i as f64 / nx as f64,
                width * j as f64 / ny as f64,
                0.0,
            ]);
        }
    }
    let at = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push([at(i, j), at(i + 1, j), at(i + 1, j + 1)]);
            faces.push([at(i, j), at(i + 1, j + 1), at(i, j + 1)]);
        }
    }
    TriMesh::new(vertices, faces).expect("grid construction is valid")
}

/// Number of vertices of `flat_disk(rings)` / `hemisphere(rings)`.
pub fn disk_vertex_count(rings: usize) -> usize {
    1 + 3 * rings * (rings + 1)
}
