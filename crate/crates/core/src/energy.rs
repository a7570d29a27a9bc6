//! Energies, areas and gradients of the boundary-reduced disk objective.
//!
//! With boundary points `f_i = (cos t_i, sin t_i)` on the unit circle, the
//! covered area reduces to the boundary polygon area
//! `A(f) = (1/2) sum_i sin(t_i - t_{i-1})`, and the objective is
//!
//! ```text
//! (1/2) <S f_B, f_B> - pi + (mu/2) (pi - A(f))^2 + sum_i alpha_i max(-sigma_i, 0)
//! ```
//!
//! where `sigma_i = (1/2) sin(t_i - t_{i-1})` is the signed sector term of
//! the adjacent boundary pair `(i-1, i)` and a negative value means the pair
//! is folded. The `SubtractPolygonArea` variant replaces `- pi` with
//! `- A(f)`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::laplacian::BlockSystem;
use crate::optimizer::CircleObjective;
use crate::util::{cross2, dot2, norm2, perp2, wrap_angle, P2};

/// Which constant is subtracted from the Dirichlet term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveVariant {
    /// `(1/2)<Sf,f> - pi + penalty`: the true disk area is known.
    #[default]
    SubtractTrueArea,
    /// `(1/2)<Sf,f> - A(f) + penalty`: the polygon-area estimate replaces pi.
    SubtractPolygonArea,
}

/// Area-penalty weight and per-boundary-pair folding penalties.
#[derive(Debug, Clone)]
pub struct PenaltyState {
    pub mu: f64,
    /// One nonnegative weight per boundary pair `(i-1, i)`.
    pub alpha: Vec<f64>,
    pub variant: ObjectiveVariant,
}

impl PenaltyState {
    pub fn new(mu: f64, n_boundary: usize, variant: ObjectiveVariant) -> Self {
        assert!(mu >= 0.0);
        Self {
            mu,
            alpha: vec![0.0; n_boundary],
            variant,
        }
    }

    pub fn any_alpha_active(&self) -> bool {
        self.alpha.iter().any(|&a| a > 0.0)
    }
}

/// Per-vertex 2D images with the boundary points on the unit circle.
#[derive(Debug, Clone)]
pub struct DiskEmbedding {
    /// One 2D point per mesh vertex.
    pub points: Vec<P2>,
    /// Central angles of the boundary points, in boundary-loop order,
    /// wrapped to `[0, 2pi)`. Row `i` of the boundary equals
    /// `(cos t_i, sin t_i)`.
    pub angles: Vec<f64>,
}

impl DiskEmbedding {
    /// Builds the embedding from boundary central angles: boundary rows on
    /// the unit circle, interior rows harmonically extended.
    pub fn from_boundary_angles(system: &BlockSystem, angles: &[f64], vertex_count: usize) -> Self {
        let f_b: Vec<P2> = angles.iter().map(|&t| [t.cos(), t.sin()]).collect();
        let points = system.extend_harmonic(&f_b, vertex_count);
        Self {
            points,
            angles: angles.iter().map(|&t| wrap_angle(t)).collect(),
        }
    }

    /// Builds the embedding from unit boundary points.
    pub fn from_boundary_points(system: &BlockSystem, f_b: &[P2], vertex_count: usize) -> Self {
        let points = system.extend_harmonic(f_b, vertex_count);
        Self {
            points,
            angles: f_b.iter().map(|p| wrap_angle(p[1].atan2(p[0]))).collect(),
        }
    }

    /// Boundary rows in loop order.
    pub fn boundary_points(&self, system: &BlockSystem) -> Vec<P2> {
        system.boundary().iter().map(|&v| self.points[v]).collect()
    }

    /// Largest deviation of a boundary row from the unit circle.
    pub fn max_unit_violation(&self, system: &BlockSystem) -> f64 {
        system
            .boundary()
            .iter()
            .map(|&v| (norm2(self.points[v]) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Signed polygon area of the boundary points:
/// `A(f) = (1/2) sum_i cross(f_{i-1}, f_i)`, the shoelace area, which on the
/// unit circle equals `(1/2) sum_i sin(t_i - t_{i-1})`.
pub fn polygon_area(f_b: &[P2]) -> f64 {
    let n = f_b.len();
    assert!(n >= 3, "polygon area needs at least 3 boundary points");
    let mut acc = 0.0;
    for i in 0..n {
        let prev = f_b[(i + n - 1) % n];
        acc += cross2(prev, f_b[i]);
    }
    0.5 * acc
}

/// Sector terms `sigma_i = (1/2) cross(f_{i-1}, f_i)`; on the unit circle
/// `sigma_i = (1/2) sin(t_i - t_{i-1})`. Negative means pair `(i-1, i)` is
/// folded.
pub fn sector_terms(f_b: &[P2]) -> Vec<f64> {
    let n = f_b.len();
    (0..n)
        .map(|i| 0.5 * cross2(f_b[(i + n - 1) % n], f_b[i]))
        .collect()
}

/// Cyclic second-order difference `(D2 f)_i = f_{i+1} - f_{i-1}`.
pub fn d2_apply(f_b: &[P2]) -> Vec<P2> {
    let n = f_b.len();
    (0..n)
        .map(|i| {
            let next = f_b[(i + 1) % n];
            let prev = f_b[(i + n - 1) % n];
            [next[0] - prev[0], next[1] - prev[1]]
        })
        .collect()
}

/// Total unsigned area of the 2D image triangulation,
/// `(1/2) sum |cross(f_i - f_k, f_j - f_k)|`.
pub fn triangulation_area(points: &[P2], faces: &[[usize; 3]]) -> f64 {
    faces
        .iter()
        .map(|&[i, j, k]| {
            0.5 * cross2(
                [points[i][0] - points[k][0], points[i][1] - points[k][1]],
                [points[j][0] - points[k][0], points[j][1] - points[k][1]],
            )
            .abs()
        })
        .sum()
}

/// Signed companion of [`triangulation_area`]; equals the boundary polygon
/// area whenever no face is folded.
pub fn triangulation_area_signed(points: &[P2], faces: &[[usize; 3]]) -> f64 {
    faces
        .iter()
        .map(|&[i, j, k]| {
            0.5 * cross2(
                [points[j][0] - points[i][0], points[j][1] - points[i][1]],
                [points[k][0] - points[i][0], points[k][1] - points[i][1]],
            )
        })
        .sum()
}

/// Discrete conformal energy `(1/2) <S f_B, f_B> - pi` of a harmonically
/// extended embedding. Negative values diagnose a degenerating solution.
pub fn conformal_energy(system: &BlockSystem, f_b: &[P2]) -> f64 {
    0.5 * system.schur_quad_form(f_b) - PI
}

/// The penalized boundary objective. See the module docs for the formula.
pub fn penalized_objective(f_b: &[P2], system: &BlockSystem, penalty: &PenaltyState) -> f64 {
    let dirichlet = 0.5 * system.schur_quad_form(f_b);
    let area = polygon_area(f_b);
    let base = match penalty.variant {
        ObjectiveVariant::SubtractTrueArea => dirichlet - PI,
        ObjectiveVariant::SubtractPolygonArea => dirichlet - area,
    };
    let mut value = base + 0.5 * penalty.mu * (PI - area) * (PI - area);
    if penalty.any_alpha_active() {
        for (sigma, &alpha) in sector_terms(f_b).iter().zip(&penalty.alpha) {
            if *sigma < 0.0 {
                value += alpha * (-sigma);
            }
        }
    }
    value
}

/// Euclidean gradient of [`penalized_objective`] with respect to the
/// boundary points (no tangent projection).
pub fn euclidean_gradient(f_b: &[P2], system: &BlockSystem, penalty: &PenaltyState) -> Vec<P2> {
    let n = f_b.len();
    let mut grad = system.schur_apply(f_b);
    let area = polygon_area(f_b);
    // grad A = (1/2) (D2 f) Theta, row-wise; row Theta maps (x, y) -> (y, -x).
    let area_coeff = match penalty.variant {
        ObjectiveVariant::SubtractTrueArea => -penalty.mu * (PI - area),
        ObjectiveVariant::SubtractPolygonArea => -1.0 - penalty.mu * (PI - area),
    };
    if area_coeff != 0.0 {
        for (g, d) in grad.iter_mut().zip(d2_apply(f_b)) {
            g[0] += area_coeff * 0.5 * d[1];
            g[1] += area_coeff * 0.5 * (-d[0]);
        }
    }
    if penalty.any_alpha_active() {
        // Hinge term alpha_i max(-sigma_i, 0); the subgradient at the kink
        // sigma_i = 0 is taken one-sided as 0.
        let sigmas = sector_terms(f_b);
        for i in 0..n {
            let alpha = penalty.alpha[i];
            if alpha > 0.0 && sigmas[i] < 0.0 {
                let prev = (i + n - 1) % n;
                // d sigma_i / d f_i = (1/2) perp(f_{i-1}),
                // d sigma_i / d f_{i-1} = -(1/2) perp(f_i).
                let gp = perp2(f_b[prev]);
                let gq = perp2(f_b[i]);
                grad[i][0] -= alpha * 0.5 * gp[0];
                grad[i][1] -= alpha * 0.5 * gp[1];
                grad[prev][0] += alpha * 0.5 * gq[0];
                grad[prev][1] += alpha * 0.5 * gq[1];
            }
        }
    }
    grad
}

/// Projects a gradient row-wise onto the tangents of the unit circles:
/// `g_i <- g_i - (g_i . f_i) f_i`.
pub fn project_tangent(f_b: &[P2], grad: &mut [P2]) {
    for (g, f) in grad.iter_mut().zip(f_b) {
        let r = dot2(*g, *f);
        g[0] -= r * f[0];
        g[1] -= r * f[1];
    }
}

/// Tangent-projected gradient of the penalized objective.
pub fn objective_gradient(f_b: &[P2], system: &BlockSystem, penalty: &PenaltyState) -> Vec<P2> {
    let mut grad = euclidean_gradient(f_b, system, penalty);
    project_tangent(f_b, &mut grad);
    grad
}

/// First-order stationarity residual: estimates the multipliers
/// `lambda_i = g_i . f_i` from the Euclidean gradient `g` and returns
/// `max_i || g_i - lambda_i f_i ||` together with the estimates.
pub fn kkt_residual(f_b: &[P2], system: &BlockSystem, penalty: &PenaltyState) -> (f64, Vec<f64>) {
    let grad = euclidean_gradient(f_b, system, penalty);
    let mut residual = 0.0f64;
    let mut lambdas = Vec::with_capacity(f_b.len());
    for (g, f) in grad.iter().zip(f_b) {
        let lambda = dot2(*g, *f);
        lambdas.push(lambda);
        residual = residual.max(norm2([g[0] - lambda * f[0], g[1] - lambda * f[1]]));
    }
    (residual, lambdas)
}

/// The penalized objective packaged for the constrained minimizer.
pub struct SdmceObjective<'a> {
    pub system: &'a BlockSystem,
    pub penalty: &'a PenaltyState,
}

impl CircleObjective for SdmceObjective<'_> {
    fn value(&mut self, f_b: &[P2]) -> f64 {
        penalized_objective(f_b, self.system, self.penalty)
    }

    fn value_and_gradient(&mut self, f_b: &[P2], grad: &mut Vec<P2>) -> f64 {
        *grad = objective_gradient(f_b, self.system, self.penalty);
        penalized_objective(f_b, self.system, self.penalty)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::laplacian::{build_laplacian, partition_blocks, SchurMode};
    use crate::util::SplitMix64;

    fn fan_system(n: usize) -> (crate::mesh::TriMesh, BlockSystem) {
        let mesh = fixtures::flat_fan(n);
        let lap = build_laplacian(&mesh).unwrap();
        let sys = partition_blocks(&lap, mesh.boundary_loop(), SchurMode::Explicit).unwrap();
        (mesh, sys)
    }

    fn circle_points(angles: &[f64]) -> Vec<P2> {
        angles.iter().map(|&t| [t.cos(), t.sin()]).collect()
    }

    fn equal_angles(n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| std::f64::consts::TAU * i as f64 / n as f64)
            .collect()
    }

    /// Independent shoelace oracle, written directly from the textbook sum.
    fn shoelace(f: &[P2]) -> f64 {
        let n = f.len();
        let mut s = 0.0;
        for i in 0..n {
            let p = f[(i + n - 1) % n];
            let q = f[i];
            s += p[0] * q[1] - q[0] * p[1];
        }
        0.5 * s
    }

    #[test]
    fn inscribed_square_area_is_two() {
        let f = circle_points(&equal_angles(4));
        assert!((polygon_area(&f) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn collapsed_polygon_has_zero_area() {
        let f = vec![[1.0, 0.0]; 5];
        assert_eq!(polygon_area(&f), 0.0);
    }

    #[test]
    fn many_sided_polygon_matches_shoelace_and_sine_formula() {
        let n = 360;
        let f = circle_points(&equal_angles(n));
        let area = polygon_area(&f);
        let analytic = (n as f64 / 2.0) * (std::f64::consts::TAU / n as f64).sin();
        assert!((area - analytic).abs() < 1e-12);
        assert!((area - shoelace(&f)).abs() < 1e-12);
    }

    #[test]
    fn polygon_area_equals_shoelace_on_random_configurations() {
        let mut rng = SplitMix64::new(99);
        for _ in 0..1000 {
            let n = 3 + rng.next_below(20);
            let f: Vec<P2> = (0..n)
                .map(|_| [rng.next_f64() * 2.0 - 1.0, rng.next_f64() * 2.0 - 1.0])
                .collect();
            let a = polygon_area(&f);
            let b = shoelace(&f);
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn skew_identity_of_d2() {
        // <x, D2 y> = -<D2 x, y> and A = (1/2)<x, D2 y> = -(1/2)<y, D2 x>.
        let mut rng = SplitMix64::new(5);
        for _ in 0..50 {
            let n = 3 + rng.next_below(12);
            let f: Vec<P2> = (0..n)
                .map(|_| [rng.next_f64() - 0.5, rng.next_f64() - 0.5])
                .collect();
            let d2f = d2_apply(&f);
            let xs: Vec<f64> = f.iter().map(|p| p[0]).collect();
            let ys: Vec<f64> = f.iter().map(|p| p[1]).collect();
            let d2y: Vec<f64> = d2f.iter().map(|p| p[1]).collect();
            let d2x: Vec<f64> = d2f.iter().map(|p| p[0]).collect();
            let x_d2y: f64 = xs.iter().zip(&d2y).map(|(a, b)| a * b).sum();
            let y_d2x: f64 = ys.iter().zip(&d2x).map(|(a, b)| a * b).sum();
            assert!((x_d2y + y_d2x).abs() < 1e-12);
            let area = polygon_area(&f);
            assert!((area - 0.5 * x_d2y).abs() < 1e-12);
            assert!((area + 0.5 * y_d2x).abs() < 1e-12);
        }
    }

    #[test]
    fn triangulation_area_basics() {
        let tri: Vec<P2> = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!((triangulation_area(&tri, &[[0, 1, 2]]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn folded_triangulation_absolute_exceeds_signed() {
        // Two triangles tiling the unit square, then one vertex reflected so
        // a face flips.
        let faces = [[0, 1, 2], [0, 2, 3]];
        let square: Vec<P2> = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!((triangulation_area(&square, &faces) - 1.0).abs() < 1e-15);
        assert!((triangulation_area_signed(&square, &faces) - 1.0).abs() < 1e-15);

        let mut folded = square.clone();
        folded[3] = [0.75, 0.25]; // drags face (0,2,3) inside-out
        let unsigned = triangulation_area(&folded, &faces);
        let signed = triangulation_area_signed(&folded, &faces);
        assert!(unsigned > signed + 1e-6, "{unsigned} vs {signed}");
    }

    #[test]
    fn fan_identity_energy_is_polygon_area_minus_pi() {
        for n in [4usize, 12, 48] {
            let (_, sys) = fan_system(n);
            let f = circle_points(&equal_angles(n));
            let analytic =
                (n as f64 / 2.0) * (std::f64::consts::TAU / n as f64).sin() - std::f64::consts::PI;
            let e = conformal_energy(&sys, &f);
            assert!(
                (e - analytic).abs() < 1e-12,
                "n={n}: {e} vs analytic {analytic}"
            );
        }
    }

    #[test]
    fn fan_energy_matches_full_quadratic_form() {
        // Cross-check the Schur route against <L f, f> on the full embedding.
        let n = 12;
        let mesh = fixtures::flat_fan(n);
        let lap = build_laplacian(&mesh).unwrap();
        let sys = partition_blocks(&lap, mesh.boundary_loop(), SchurMode::Explicit).unwrap();
        let f_b = circle_points(&equal_angles(n));
        let full = sys.extend_harmonic(&f_b, mesh.vertex_count());
        let e_schur = conformal_energy(&sys, &f_b);
        let e_full = 0.5 * lap.quad_form(&full) - std::f64::consts::PI;
        assert!((e_schur - e_full).abs() < 1e-12);
    }

    #[test]
    fn collapsed_boundary_gives_minus_pi() {
        let (_, sys) = fan_system(6);
        let f = vec![[1.0, 0.0]; 6];
        assert!((conformal_energy(&sys, &f) + std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn objective_reduces_to_energy_when_penalty_off() {
        let (_, sys) = fan_system(8);
        let pen = PenaltyState::new(0.0, 8, ObjectiveVariant::SubtractTrueArea);
        let f = circle_points(&equal_angles(8));
        assert!((penalized_objective(&f, &sys, &pen) - conformal_energy(&sys, &f)).abs() < 1e-15);
    }

    #[test]
    fn objective_on_square_with_mu_ten() {
        // 4-fan identity: Dirichlet/2 = A = 2, so the objective is
        // 2 - pi + 5 (pi - 2)^2, assembled here from the analytic pieces.
        let (_, sys) = fan_system(4);
        let pen = PenaltyState::new(10.0, 4, ObjectiveVariant::SubtractTrueArea);
        let f = circle_points(&equal_angles(4));
        let pi = std::f64::consts::PI;
        let expect = 2.0 - pi + 5.0 * (pi - 2.0) * (pi - 2.0);
        assert!((penalized_objective(&f, &sys, &pen) - expect).abs() < 1e-12);
    }

    #[test]
    fn hinge_adds_alpha_times_negative_sector() {
        let (_, sys) = fan_system(4);
        let mut pen = PenaltyState::new(0.0, 4, ObjectiveVariant::SubtractTrueArea);
        let f = circle_points(&equal_angles(4));
        let base = penalized_objective(&f, &sys, &pen);

        // Swap two adjacent boundary points so one sector flips sign.
        let mut folded = f.clone();
        folded.swap(1, 2);
        let sigmas = sector_terms(&folded);
        let neg: f64 = sigmas.iter().filter(|&&s| s < 0.0).map(|&s| -s).sum();
        assert!(neg > 0.0);

        pen.alpha = vec![1.0; 4];
        let with_hinge = penalized_objective(&folded, &sys, &pen);
        pen.alpha = vec![0.0; 4];
        let without = penalized_objective(&folded, &sys, &pen);
        assert!((with_hinge - without - neg).abs() < 1e-12);
        let _ = base;
    }

    #[test]
    fn constant_boundary_has_zero_projected_gradient() {
        // S annihilates constants, D2 of a constant vanishes, sector terms
        // are zero: the collapsed configuration is stationary.
        let (_, sys) = fan_system(6);
        for mu in [0.0, 25.0] {
            let pen = PenaltyState::new(mu, 6, ObjectiveVariant::SubtractTrueArea);
            let f = vec![[0.6f64.cos(), 0.6f64.sin()]; 6];
            let g = objective_gradient(&f, &sys, &pen);
            for p in &g {
                assert!(norm2(*p) < 1e-12, "{p:?}");
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let n = 12;
        let (_, sys) = fan_system(n);
        let mut rng = SplitMix64::new(2024);
        for variant in [
            ObjectiveVariant::SubtractTrueArea,
            ObjectiveVariant::SubtractPolygonArea,
        ] {
            let mut pen = PenaltyState::new(25.0, n, variant);
            // Exercise the hinge too, away from its kink.
            pen.alpha = (0..n).map(|i| (i % 3) as f64).collect();
            for _ in 0..20 {
                let angles: Vec<f64> = (0..n)
                    .map(|_| rng.next_f64() * std::f64::consts::TAU)
                    .collect();
                let f = circle_points(&angles);
                if sector_terms(&f).iter().any(|s| s.abs() < 1e-3) {
                    continue; // keep central differences off the hinge kink
                }
                let g = objective_gradient(&f, &sys, &pen);
                // Random tangent direction.
                let mut dir: Vec<P2> = f
                    .iter()
                    .map(|p| {
                        let s = rng.next_f64() - 0.5;
                        [-p[1] * s, p[0] * s]
                    })
                    .collect();
                let scale: f64 = dir.iter().map(|d| norm2(*d)).sum();
                for d in &mut dir {
                    d[0] /= scale;
                    d[1] /= scale;
                }
                let h = 1e-6;
                let shift = |eps: f64| -> Vec<P2> {
                    f.iter()
                        .zip(&dir)
                        .map(|(p, d)| [p[0] + eps * d[0], p[1] + eps * d[1]])
                        .collect()
                };
                let fd = (penalized_objective(&shift(h), &sys, &pen)
                    - penalized_objective(&shift(-h), &sys, &pen))
                    / (2.0 * h);
                let analytic: f64 = g
                    .iter()
                    .zip(&dir)
                    .map(|(a, b)| a[0] * b[0] + a[1] * b[1])
                    .sum();
                assert!(
                    (fd - analytic).abs() <= 1e-6 * analytic.abs().max(1e-3),
                    "fd {fd} vs analytic {analytic}"
                );
            }
        }
    }

    #[test]
    fn projected_gradient_is_tangent() {
        let n = 10;
        let (_, sys) = fan_system(n);
        let pen = PenaltyState::new(7.0, n, ObjectiveVariant::SubtractTrueArea);
        let mut rng = SplitMix64::new(8);
        let angles: Vec<f64> = (0..n)
            .map(|_| rng.next_f64() * std::f64::consts::TAU)
            .collect();
        let f = circle_points(&angles);
        let g = objective_gradient(&f, &sys, &pen);
        for (gi, fi) in g.iter().zip(&f) {
            assert!(dot2(*gi, *fi).abs() <= 1e-12);
        }
    }

    #[test]
    fn objective_is_invariant_under_cyclic_relabeling() {
        // Rotating the loop start relabels both the points and the alphas.
        let n = 9;
        let (_, _sys) = fan_system(n);
        let mut pen = PenaltyState::new(13.0, n, ObjectiveVariant::SubtractTrueArea);
        pen.alpha = (0..n).map(|i| i as f64 * 0.1).collect();
        let mut rng = SplitMix64::new(77);
        let angles: Vec<f64> = (0..n)
            .map(|_| rng.next_f64() * std::f64::consts::TAU)
            .collect();
        let f = circle_points(&angles);
        let base = {
            // Area and hinge pieces only; the Schur form is tied to vertex
            // identity and must not be rotated.
            let a = polygon_area(&f);
            let hinge: f64 = sector_terms(&f)
                .iter()
                .zip(&pen.alpha)
                .filter(|(s, _)| **s < 0.0)
                .map(|(s, a)| -s * a)
                .sum();
            0.5 * pen.mu * (std::f64::consts::PI - a).powi(2) + hinge
        };
        for shift in 1..n {
            let mut f2 = f.clone();
            f2.rotate_left(shift);
            let mut alpha2 = pen.alpha.clone();
            alpha2.rotate_left(shift);
            let a = polygon_area(&f2);
            let hinge: f64 = sector_terms(&f2)
                .iter()
                .zip(&alpha2)
                .filter(|(s, _)| **s < 0.0)
                .map(|(s, a)| -s * a)
                .sum();
            let rotated = 0.5 * pen.mu * (std::f64::consts::PI - a).powi(2) + hinge;
            assert!((rotated - base).abs() < 1e-12);
        }
    }

    #[test]
    fn area_approaches_pi_for_fine_equal_spacing() {
        let mut last = 0.0;
        for n in [8, 32, 128, 512] {
            let f = circle_points(&equal_angles(n));
            let a = polygon_area(&f);
            assert!(a > last && a < std::f64::consts::PI);
            last = a;
        }
        assert!(std::f64::consts::PI - last < 1e-3);
    }

    #[test]
    fn kkt_residual_zero_at_collapse_and_positive_away() {
        let (_, sys) = fan_system(8);
        let pen = PenaltyState::new(0.0, 8, ObjectiveVariant::SubtractTrueArea);
        let collapsed = vec![[1.0, 0.0]; 8];
        let (res, _) = kkt_residual(&collapsed, &sys, &pen);
        assert!(res <= 1e-12, "collapse residual {res}");

        let mut rng = SplitMix64::new(4);
        let angles: Vec<f64> = (0..8)
            .map(|_| rng.next_f64() * std::f64::consts::TAU)
            .collect();
        let (res2, lambdas) = kkt_residual(&circle_points(&angles), &sys, &pen);
        assert!(res2 > 1e-2, "non-stationary residual {res2}");
        assert_eq!(lambdas.len(), 8);
    }
}
