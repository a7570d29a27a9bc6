//! Nonlinear conjugate gradient over points constrained to the unit circle.
//!
//! The iterate is a list of 2D points, each kept on the unit circle by row
//! normalization after every step (the retraction). Directions use the
//! Polak-Ribiere-plus coefficient with periodic restarts and a reset to
//! steepest descent whenever the candidate loses descent; steps use Armijo
//! backtracking. Identical inputs yield identical traces.

use std::io::Write;

use thiserror::Error;

use crate::util::{norm2, P2};

/// Objective over unit-circle-constrained point lists. Gradients returned by
/// `value_and_gradient` must already be tangent (row-wise orthogonal to the
/// current point).
pub trait CircleObjective {
    fn value(&mut self, f_b: &[P2]) -> f64;
    fn value_and_gradient(&mut self, f_b: &[P2], grad: &mut Vec<P2>) -> f64;
}

#[derive(Debug, Clone)]
pub struct NcgConfig {
    pub max_iterations: usize,
    /// Termination threshold on the max row norm of the projected gradient.
    pub gradient_tolerance: f64,
    /// Backtracking contraction factor, in (0, 1).
    pub contraction: f64,
    /// Armijo sufficient-decrease constant.
    pub sufficient_decrease: f64,
    pub initial_step: f64,
    pub max_backtracks: usize,
    /// Steepest-descent restart period; `None` means the number of boundary
    /// points.
    pub restart_period: Option<usize>,
}

impl Default for NcgConfig {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            gradient_tolerance: 1e-6,
            contraction: 0.5,
            sufficient_decrease: 1e-4,
            initial_step: 1.0,
            max_backtracks: 50,
            restart_period: None,
        }
    }
}

impl NcgConfig {
    fn validate(&self) {
        assert!(self.max_iterations > 0);
        assert!(self.gradient_tolerance > 0.0);
        assert!(self.contraction > 0.0 && self.contraction < 1.0);
        assert!(self.sufficient_decrease > 0.0);
        assert!(self.initial_step > 0.0);
        assert!(self.max_backtracks > 0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    /// Backtracking exhausted without sufficient decrease; the best iterate
    /// so far is returned with this flag rather than an error.
    LineSearchStalled,
}

#[derive(Debug, Clone)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub restarted: bool,
}

#[derive(Debug, Clone)]
pub struct SolveTrace {
    pub rows: Vec<TraceRow>,
    pub termination: Termination,
    pub final_objective: f64,
    pub final_grad_norm: f64,
}

impl SolveTrace {
    pub fn iterations(&self) -> usize {
        self.rows.last().map_or(0, |r| r.iteration)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iteration,objective,grad_norm,step")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                r.iteration,
                crate::util::fmt_g17(r.objective),
                crate::util::fmt_g17(r.grad_norm),
                crate::util::fmt_g17(r.step)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("initial boundary point {index} is off the unit circle by {violation:.3e}")]
    InfeasibleStart { index: usize, violation: f64 },
}

fn max_row_norm(v: &[P2]) -> f64 {
    v.iter().map(|p| norm2(*p)).fold(0.0, f64::max)
}

fn flat_dot(a: &[P2], b: &[P2]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| p[0] * q[0] + p[1] * q[1])
        .sum()
}

/// Polak-Ribiere-plus direction update:
/// `beta = max(0, <g_new, g_new - g_old> / <g_old, g_old>)`,
/// `d = -g_new + beta d_old`, reset to steepest descent if `d` is not a
/// descent direction. Returns the direction and whether a reset happened.
pub fn ncg_direction(g_new: &[P2], g_old: &[P2], d_old: &[P2]) -> (Vec<P2>, bool) {
    let denom = flat_dot(g_old, g_old);
    let beta = if denom > 0.0 {
        let num: f64 = g_new
            .iter()
            .zip(g_old)
            .map(|(n, o)| n[0] * (n[0] - o[0]) + n[1] * (n[1] - o[1]))
            .sum();
        (num / denom).max(0.0)
    } else {
        0.0
    };
    let mut d: Vec<P2> = g_new
        .iter()
        .zip(d_old)
        .map(|(g, d)| [-g[0] + beta * d[0], -g[1] + beta * d[1]])
        .collect();
    if flat_dot(&d, g_new) >= 0.0 {
        for (di, g) in d.iter_mut().zip(g_new) {
            *di = [-g[0], -g[1]];
        }
        return (d, true);
    }
    (d, false)
}

/// Minimizes the objective over unit-circle-constrained boundary points.
///
/// Every iterate has unit rows; warm starting amounts to passing the
/// previous solution as `f0`. The objective sequence is non-increasing over
/// accepted steps.
pub fn minimize_on_circles<O: CircleObjective>(
    objective: &mut O,
    f0: &[P2],
    config: &NcgConfig,
) -> Result<(Vec<P2>, SolveTrace), OptimError> {
    config.validate();
    for (i, p) in f0.iter().enumerate() {
        let violation = (norm2(*p) - 1.0).abs();
        if violation > 1e-12 {
            return Err(OptimError::InfeasibleStart {
                index: i,
                violation,
            });
        }
    }
    let n = f0.len();
    let restart_period = config.restart_period.unwrap_or(n).max(1);

    let mut f = f0.to_vec();
    let mut grad = Vec::new();
    let mut value = objective.value_and_gradient(&f, &mut grad);
    let mut grad_norm = max_row_norm(&grad);

    let mut rows = Vec::new();
    let mut prev_grad: Option<Vec<P2>> = None;
    let mut prev_dir: Option<Vec<P2>> = None;
    let mut since_restart = 0usize;
    let termination;

    // Resume near the last accepted step length; it may grow back by
    // doubling, capped at the configured initial step.
    let mut step_init = config.initial_step;
    let mut iteration = 0usize;
    loop {
        if grad_norm <= config.gradient_tolerance {
            termination = Termination::GradientTolerance;
            rows.push(TraceRow {
                iteration,
                objective: value,
                grad_norm,
                step: 0.0,
                restarted: false,
            });
            break;
        }
        if iteration >= config.max_iterations {
            termination = Termination::MaxIterations;
            rows.push(TraceRow {
                iteration,
                objective: value,
                grad_norm,
                step: 0.0,
                restarted: false,
            });
            break;
        }

        let (mut dir, mut restarted) = match (&prev_grad, &prev_dir) {
            (Some(g_old), Some(d_old)) if since_restart < restart_period => {
                // Transport the previous direction by projecting onto the
                // current tangents before mixing it in.
                let mut d_old = d_old.clone();
                crate::energy::project_tangent(&f, &mut d_old);
                ncg_direction(&grad, g_old, &d_old)
            }
            _ => (grad.iter().map(|g| [-g[0], -g[1]]).collect(), true),
        };
        if restarted {
            since_restart = 0;
        }
        let mut slope = flat_dot(&dir, &grad);
        if slope >= 0.0 {
            // Degenerate transported direction; fall back to steepest descent.
            dir = grad.iter().map(|g| [-g[0], -g[1]]).collect();
            slope = -flat_dot(&grad, &grad);
            restarted = true;
            since_restart = 0;
        }

        let mut step = step_init;
        let mut accepted: Option<(Vec<P2>, f64)> = None;
        for _ in 0..config.max_backtracks {
            // `retract` refuses rows passing near the origin; halve without
            // evaluating in that case.
            if let Some(candidate) = retract(&f, &dir, step) {
                let v = objective.value(&candidate);
                if v <= value + config.sufficient_decrease * step * slope {
                    accepted = Some((candidate, v));
                    break;
                }
            }
            step *= config.contraction;
        }

        match accepted {
            Some((candidate, v)) => {
                rows.push(TraceRow {
                    iteration,
                    objective: value,
                    grad_norm,
                    step,
                    restarted,
                });
                step_init = (2.0 * step).min(config.initial_step);
                prev_grad = Some(std::mem::take(&mut grad));
                prev_dir = Some(dir);
                f = candidate;
                value = objective.value_and_gradient(&f, &mut grad);
                debug_assert!(v == value || (v - value).abs() <= 1e-12 * value.abs().max(1.0));
                grad_norm = max_row_norm(&grad);
                since_restart += 1;
                iteration += 1;
            }
            None => {
                termination = Termination::LineSearchStalled;
                rows.push(TraceRow {
                    iteration,
                    objective: value,
                    grad_norm,
                    step: 0.0,
                    restarted,
                });
                break;
            }
        }
    }

    let trace = SolveTrace {
        rows,
        termination,
        final_objective: value,
        final_grad_norm: grad_norm,
    };
    Ok((f, trace))
}

/// `normalize(f + step * dir)` row-wise, or `None` if any row lands within
/// 1e-8 of the origin.
fn retract(f: &[P2], dir: &[P2], step: f64) -> Option<Vec<P2>> {
    let mut out = Vec::with_capacity(f.len());
    for (p, d) in f.iter().zip(dir) {
        let q = [p[0] + step * d[0], p[1] + step * d[1]];
        let norm = norm2(q);
        if norm < 1e-8 {
            return None;
        }
        out.push([q[0] / norm, q[1] / norm]);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::{dot2, SplitMix64};

    /// `(1/2) sum ||f_i - c_i||^2` with unit targets; tangent gradient.
    struct PullToTarget {
        targets: Vec<P2>,
    }

    impl CircleObjective for PullToTarget {
        fn value(&mut self, f: &[P2]) -> f64 {
            0.5 * f
                .iter()
                .zip(&self.targets)
                .map(|(p, c)| {
                    let d = [p[0] - c[0], p[1] - c[1]];
                    d[0] * d[0] + d[1] * d[1]
                })
                .sum::<f64>()
        }

        fn value_and_gradient(&mut self, f: &[P2], grad: &mut Vec<P2>) -> f64 {
            *grad = f
                .iter()
                .zip(&self.targets)
                .map(|(p, c)| [p[0] - c[0], p[1] - c[1]])
                .collect();
            crate::energy::project_tangent(f, grad);
            self.value(f)
        }
    }

    fn unit(t: f64) -> P2 {
        [t.cos(), t.sin()]
    }

    #[test]
    fn converges_to_unit_targets() {
        let n = 16;
        let targets: Vec<P2> = (0..n).map(|i| unit(0.3 + i as f64 * 0.35)).collect();
        let start: Vec<P2> = (0..n).map(|i| unit(2.0 + i as f64 * 0.11)).collect();
        let mut obj = PullToTarget {
            targets: targets.clone(),
        };
        let (f, trace) = minimize_on_circles(&mut obj, &start, &NcgConfig::default()).unwrap();
        assert_eq!(trace.termination, Termination::GradientTolerance);
        assert!(trace.iterations() <= 200, "{}", trace.iterations());
        for (p, c) in f.iter().zip(&targets) {
            assert!(norm2([p[0] - c[0], p[1] - c[1]]) < 1e-5);
        }
    }

    #[test]
    fn iterates_stay_feasible_and_objective_monotone() {
        let n = 12;
        let targets: Vec<P2> = (0..n).map(|i| unit(i as f64)).collect();
        let start: Vec<P2> = (0..n).map(|i| unit(i as f64 * 1.7 + 0.5)).collect();
        let mut obj = PullToTarget { targets };
        let (f, trace) = minimize_on_circles(&mut obj, &start, &NcgConfig::default()).unwrap();
        for p in &f {
            assert!((norm2(*p) - 1.0).abs() <= 1e-12);
        }
        for w in trace.rows.windows(2) {
            assert!(
                w[1].objective <= w[0].objective + 1e-14 * w[0].objective.abs(),
                "objective rose: {} -> {}",
                w[0].objective,
                w[1].objective
            );
        }
    }

    #[test]
    fn zero_gradient_start_returns_immediately() {
        let targets: Vec<P2> = (0..5).map(|i| unit(i as f64)).collect();
        let start = targets.clone();
        let mut obj = PullToTarget { targets };
        let (f, trace) = minimize_on_circles(&mut obj, &start, &NcgConfig::default()).unwrap();
        assert_eq!(trace.termination, Termination::GradientTolerance);
        assert_eq!(trace.iterations(), 0);
        assert_eq!(f, start);
    }

    #[test]
    fn identical_runs_produce_identical_traces() {
        let n = 9;
        let targets: Vec<P2> = (0..n).map(|i| unit(i as f64 * 0.9)).collect();
        let start: Vec<P2> = (0..n).map(|i| unit(i as f64 * 0.2 + 1.0)).collect();
        let run = || {
            let mut obj = PullToTarget {
                targets: targets.clone(),
            };
            minimize_on_circles(&mut obj, &start, &NcgConfig::default()).unwrap()
        };
        let (f1, t1) = run();
        let (f2, t2) = run();
        assert_eq!(f1, f2);
        assert_eq!(t1.rows.len(), t2.rows.len());
        for (a, b) in t1.rows.iter().zip(&t2.rows) {
            assert_eq!(a.objective, b.objective);
            assert_eq!(a.step, b.step);
        }
    }

    #[test]
    fn direction_rules() {
        let g: Vec<P2> = vec![[1.0, 0.0], [0.0, 1.0]];
        // g_old == g_new -> beta = 0 -> steepest descent.
        let (d, _) = ncg_direction(&g, &g, &[[5.0, 5.0]; 2]);
        assert_eq!(d, vec![[-1.0, 0.0], [0.0, -1.0]]);

        // Orthogonal successive gradients -> beta = |g_new|^2 / |g_old|^2.
        let g_old: Vec<P2> = vec![[0.0, 2.0], [0.0, 0.0]];
        let g_new: Vec<P2> = vec![[1.0, 0.0], [0.0, 0.0]];
        let d_old: Vec<P2> = vec![[0.0, -2.0], [0.0, 0.0]];
        let (d, reset) = ncg_direction(&g_new, &g_old, &d_old);
        assert!(!reset);
        // beta = 1/4; d = -g_new + beta d_old = (-1, -1/2).
        assert!((d[0][0] + 1.0).abs() < 1e-15 && (d[0][1] + 0.5).abs() < 1e-15);

        // Non-descent candidate resets to -g_new.
        let d_old: Vec<P2> = vec![[10.0, 0.0], [0.0, 0.0]];
        let (d, reset) = ncg_direction(&g_new, &g_old, &d_old);
        assert!(reset);
        assert_eq!(d[0], [-1.0, 0.0]);
    }

    #[test]
    fn trace_csv_has_header() {
        let targets: Vec<P2> = (0..4).map(|i| unit(i as f64)).collect();
        let start: Vec<P2> = (0..4).map(|i| unit(i as f64 + 1.0)).collect();
        let mut obj = PullToTarget { targets };
        let (_, trace) = minimize_on_circles(&mut obj, &start, &NcgConfig::default()).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iteration,objective,grad_norm,step"));
        assert_eq!(text.lines().count(), trace.rows.len() + 1);
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let start = vec![[0.5, 0.0]];
        let mut obj = PullToTarget {
            targets: vec![[1.0, 0.0]],
        };
        assert!(matches!(
            minimize_on_circles(&mut obj, &start, &NcgConfig::default()),
            Err(OptimError::InfeasibleStart { index: 0, .. })
        ));
    }

    proptest::proptest! {
        #[test]
        fn feasibility_invariant_under_random_targets(seed in 0u64..50) {
            let mut rng = SplitMix64::new(seed);
            let n = 3 + rng.next_below(10);
            let targets: Vec<P2> = (0..n).map(|_| unit(rng.next_f64() * std::f64::consts::TAU)).collect();
            let start: Vec<P2> = (0..n).map(|_| unit(rng.next_f64() * std::f64::consts::TAU)).collect();
            let mut obj = PullToTarget { targets };
            let (f, trace) = minimize_on_circles(&mut obj, &start, &NcgConfig::default()).unwrap();
            for p in &f {
                proptest::prop_assert!((norm2(*p) - 1.0).abs() <= 1e-12);
            }
            // The returned point is never worse than the start.
            proptest::prop_assert!(trace.final_objective <= trace.rows[0].objective + 1e-12);
            let _ = dot2([0.0, 0.0], [0.0, 0.0]);
        }
    }
}
