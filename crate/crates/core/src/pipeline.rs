//! End-to-end parameterization pipeline: Laplacian and Schur reduction,
//! initial boundary, penalty solve (fixed or adaptively tuned), harmonic
//! interior, folding repair, and the quality report.

use std::time::Instant;

use thiserror::Error;

use crate::energy::{
    conformal_energy, polygon_area, DiskEmbedding, ObjectiveVariant, PenaltyState, SdmceObjective,
};
use crate::laplacian::{build_laplacian, partition_blocks, LaplacianError, SchurMode};
use crate::mesh::TriMesh;
use crate::metrics::{angle_errors, build_report, QualityReport};
use crate::optimizer::{minimize_on_circles, NcgConfig, OptimError, SolveTrace};
use crate::tuning::{
    generate_initial_boundary, tune_mu, BoundaryInit, MuProbe, ProbeResult, TuneError, TuneOptions,
};
use crate::unfolding::{repair_all, RepairError, RepairHistory, RepairOptions};
use crate::util::P2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuMode {
    /// Adaptive tuning.
    Auto,
    Fixed(f64),
}

/// Which ratio seeds the per-round hinge increment during boundary repair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaRule {
    /// `|boundary| / |interior|`.
    #[default]
    BoundaryOverInterior,
    /// `|boundary| / |faces|`.
    BoundaryOverFaces,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mu: MuMode,
    pub variant: ObjectiveVariant,
    pub init: BoundaryInit,
    /// Gate accuracy for adaptive tuning.
    pub tau: f64,
    pub ncg: NcgConfig,
    pub schur_mode: SchurMode,
    pub repair: bool,
    pub delta_rule: DeltaRule,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mu: MuMode::Auto,
            variant: ObjectiveVariant::SubtractTrueArea,
            init: BoundaryInit::EqualAngles,
            tau: 1e-4,
            ncg: NcgConfig::default(),
            schur_mode: SchurMode::Explicit,
            repair: true,
            delta_rule: DeltaRule::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Laplacian(#[from] LaplacianError),
    #[error(transparent)]
    Tune(#[from] TuneError),
    #[error(transparent)]
    Optimizer(#[from] OptimError),
}

#[derive(Debug)]
pub struct RunResult {
    pub embedding: DiskEmbedding,
    pub report: QualityReport,
    /// The penalty weight actually used (tuned or fixed).
    pub mu: f64,
    /// Probe history when `mu` was tuned.
    pub tune_history: Option<Vec<MuProbe>>,
    /// Trace of the final boundary solve.
    pub trace: SolveTrace,
    pub repair: Option<RepairHistory>,
    /// Set when repair hit its round caps with foldings left; the report
    /// still describes the partial result.
    pub repair_stalled: bool,
    /// Wall time of the solve phase (tuning, solves, repairs), excluding
    /// Laplacian and Schur construction.
    pub solve_seconds: f64,
    /// Estimated 1-norm condition of the interior block.
    pub interior_condition: f64,
}

/// Runs the pipeline with the configured initial boundary.
pub fn run(mesh: &TriMesh, config: &RunConfig) -> Result<RunResult, PipelineError> {
    let n = mesh.boundary_loop().len();
    let t0 = generate_initial_boundary(&config.init, n)?;
    run_with_initial_angles(mesh, config, &t0)
}

/// Runs the pipeline from explicit initial central angles (one per boundary
/// vertex, in loop order).
pub fn run_with_initial_angles(
    mesh: &TriMesh,
    config: &RunConfig,
    t0: &[f64],
) -> Result<RunResult, PipelineError> {
    let lap = build_laplacian(mesh)?;
    let system = partition_blocks(&lap, mesh.boundary_loop(), config.schur_mode)?;
    let interior_condition = system.interior_condition_estimate();
    if std::env::var("SDMCE_LOG").is_ok() {
        eprintln!(
            "interior block: {} unknowns, estimated 1-norm condition {:.3e}",
            system.interior().len(),
            interior_condition
        );
    }
    let n = mesh.boundary_loop().len();

    let solve_started = Instant::now();
    let verbose = std::env::var("SDMCE_LOG").is_ok();

    // One converged solve at fixed mu, from given central angles.
    let mut solve_probe = |mu: f64, angles: &[f64]| -> ProbeResult {
        let started = Instant::now();
        let penalty = PenaltyState::new(mu, n, config.variant);
        let start: Vec<P2> = angles.iter().map(|&t| [t.cos(), t.sin()]).collect();
        let mut objective = SdmceObjective {
            system: &system,
            penalty: &penalty,
        };
        let (f_b, trace) = minimize_on_circles(&mut objective, &start, &config.ncg)
            .expect("start generated on the unit circle");
        let e_cd = conformal_energy(&system, &f_b);
        let eps_a = std::f64::consts::PI - polygon_area(&f_b);
        let full = system.extend_harmonic(&f_b, mesh.vertex_count());
        let eps_theta = angle_errors(mesh, &full).mean;
        if verbose {
            eprintln!(
                "probe mu={mu}: E_C={e_cd:.6e} eps_A={eps_a:.6e} eps_theta={eps_theta:.6e} \
                 ({} iterations, {:?})",
                trace.iterations(),
                trace.termination
            );
        }
        ProbeResult {
            boundary: f_b,
            e_cd,
            eps_a,
            eps_theta,
            seconds: started.elapsed().as_secs_f64(),
        }
    };

    let (mu, boundary, tune_history) = match config.mu {
        MuMode::Auto => {
            let opts = TuneOptions {
                tau: config.tau,
                ..TuneOptions::default()
            };
            let outcome = tune_mu(&mut solve_probe, t0, &opts)?;
            (outcome.mu, outcome.result.boundary, Some(outcome.history))
        }
        MuMode::Fixed(mu) => {
            let probe = solve_probe(mu, t0);
            (mu, probe.boundary, None)
        }
    };

    // Final solve from the accepted boundary, for the returned trace; warm
    // started, so this converges in a handful of iterations at most.
    let mut penalty = PenaltyState::new(mu, n, config.variant);
    let mut objective = SdmceObjective {
        system: &system,
        penalty: &penalty,
    };
    let (f_b, trace) = minimize_on_circles(&mut objective, &boundary, &config.ncg)?;
    let mut points = system.extend_harmonic(&f_b, mesh.vertex_count());

    let mut repair_history = None;
    let mut repair_stalled = false;
    if config.repair {
        let mut options = match config.delta_rule {
            DeltaRule::BoundaryOverInterior => RepairOptions::for_mesh(mesh),
            DeltaRule::BoundaryOverFaces => RepairOptions::for_mesh_face_ratio(mesh),
        };
        options.boundary_vertex_rounds = 100;
        match repair_all(
            mesh,
            &system,
            &mut points,
            &mut penalty,
            &config.ncg,
            &options,
        ) {
            Ok(history) => repair_history = Some(history),
            Err(RepairError::RepairStall { .. }) => repair_stalled = true,
            Err(RepairError::Optimizer(e)) => return Err(e.into()),
        }
    }
    let solve_seconds = solve_started.elapsed().as_secs_f64();

    let report = build_report(mesh, &lap, &points, solve_seconds);
    let f_b_final: Vec<P2> = system.boundary().iter().map(|&v| points[v]).collect();
    let embedding = DiskEmbedding::from_boundary_points(&system, &f_b_final, mesh.vertex_count());
    // Keep the repaired interior rather than re-extending it harmonically:
    // triangle repairs move interior points off the harmonic extension on
    // purpose.
    let embedding = DiskEmbedding {
        points,
        angles: embedding.angles,
    };

    Ok(RunResult {
        embedding,
        report,
        mu,
        tune_history,
        trace,
        repair: repair_history,
        repair_stalled,
        solve_seconds,
        interior_condition,
    })
}

/// Re-audits an existing parameterization without solving anything.
pub fn audit(mesh: &TriMesh, points: &[P2]) -> Result<QualityReport, PipelineError> {
    let lap = build_laplacian(mesh)?;
    Ok(build_report(mesh, &lap, points, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::f64::consts::PI;

    #[test]
    fn flat_fan_with_fixed_mu_recovers_identity() {
        let n = 12;
        let mesh = fixtures::flat_fan(n);
        let config = RunConfig {
            mu: MuMode::Fixed(10.0),
            ..RunConfig::default()
        };
        let result = run(&mesh, &config).unwrap();
        let analytic = (n as f64 / 2.0) * (std::f64::consts::TAU / n as f64).sin() - PI;
        assert!(
            (result.report.e_cd - analytic).abs() < 1e-9,
            "{} vs {analytic}",
            result.report.e_cd
        );
        assert!(result.report.angle_error_mean < 1e-9);
        assert_eq!(result.report.folding.total(), 0);
        assert!(!result.repair_stalled);
    }

    #[test]
    fn auto_mu_on_hemisphere_passes_gates() {
        let mesh = fixtures::hemisphere(8);
        let result = run(&mesh, &RunConfig::default()).unwrap();
        assert!(result.report.e_cd > -1e-4, "E = {}", result.report.e_cd);
        assert!(result.report.eps_a_signed > -1e-4);
        assert!(result.tune_history.is_some());
        assert_eq!(result.report.folding.total(), 0);
    }

    #[test]
    fn audit_matches_solve_report() {
        let mesh = fixtures::hemisphere(5);
        let result = run(&mesh, &RunConfig::default()).unwrap();
        let audited = audit(&mesh, &result.embedding.points).unwrap();
        assert!((audited.e_cd - result.report.e_cd).abs() <= 1e-12);
        assert!((audited.angle_error_mean - result.report.angle_error_mean).abs() <= 1e-12);
        assert_eq!(audited.folding, result.report.folding);
    }

    #[test]
    fn embedding_boundary_is_unit_after_full_run() {
        let mesh = fixtures::hemisphere(5);
        let result = run(&mesh, &RunConfig::default()).unwrap();
        for &v in mesh.boundary_loop() {
            let p = result.embedding.points[v];
            assert!((crate::util::norm2(p) - 1.0).abs() <= 1e-12);
        }
    }
}
