//! Initial boundary generators and adaptive tuning of the area-penalty
//! weight.
//!
//! The tuner drives an opaque solve callback through three phases: an
//! escalation loop that grows `mu` (step `s_mu` itself growing by 10) until
//! the solution passes the gates `E_C > -tau` and `eps_A > -tau`; a probe of
//! a second, larger `mu`; and a refinement that bisects downward or
//! escalates upward while the mean angle error keeps improving by a relative
//! factor `(1 - tau)`. Each probe starts from the anchor angles `T0`, which
//! are re-anchored to the last solution whenever its area deviation is
//! small.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use thiserror::Error;

use crate::util::{wrap_angle, SplitMix64, P2};

/// How the initial boundary central angles are laid out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryInit {
    /// `t_i = 2 pi i / n`: equally spaced in the correct order.
    EqualAngles,
    /// Equal gaps covering an arc of length `2 pi / rho`, wrapped mod 2 pi;
    /// `rho < 1` over-covers the circle, `rho > 1` under-covers it.
    ScaledArc { rho: f64 },
    /// Equally spaced angles assigned to the boundary in a seeded random
    /// order (a heavily folded start).
    RandomOrder { seed: u64 },
}

#[derive(Debug, Error)]
pub enum TuneError {
    #[error("scaled-arc ratio must be positive, got {0}")]
    BadArcRatio(f64),
    #[error("boundary needs at least 3 vertices, got {0}")]
    TooFewBoundaryPoints(usize),
    #[error("penalty escalation exceeded mu = {mu:.3e} without passing the energy gates; the mesh is pathological or too coarse for the gate accuracy (a fixed penalty weight sidesteps the gates)")]
    EscalationOverflow { mu: f64 },
}

/// Generates the initial central angles for `n` boundary vertices.
pub fn generate_initial_boundary(init: &BoundaryInit, n: usize) -> Result<Vec<f64>, TuneError> {
    if n < 3 {
        return Err(TuneError::TooFewBoundaryPoints(n));
    }
    match *init {
        BoundaryInit::EqualAngles => Ok((0..n).map(|i| TAU * i as f64 / n as f64).collect()),
        BoundaryInit::ScaledArc { rho } => {
            if rho <= 0.0 {
                return Err(TuneError::BadArcRatio(rho));
            }
            Ok((0..n)
                .map(|i| wrap_angle((TAU / rho) * i as f64 / n as f64))
                .collect())
        }
        BoundaryInit::RandomOrder { seed } => {
            let mut angles: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
            SplitMix64::new(seed).shuffle(&mut angles);
            Ok(angles)
        }
    }
}

/// One converged solve at a fixed `mu`, as seen by the tuner.
#[derive(Debug, Clone)]
pub struct ProbeResult {
    /// Converged boundary points, unit rows in loop order.
    pub boundary: Vec<P2>,
    /// Discrete conformal energy of the solution.
    pub e_cd: f64,
    /// Signed area deviation `pi - A(f)`.
    pub eps_a: f64,
    /// Mean relative angle error of the solution.
    pub eps_theta: f64,
    pub seconds: f64,
}

/// One history record per probe.
#[derive(Debug, Clone)]
pub struct MuProbe {
    pub mu: f64,
    pub e_cd: f64,
    pub eps_a: f64,
    pub eps_theta: f64,
    pub seconds: f64,
}

pub fn write_history_csv<W: Write>(history: &[MuProbe], mut w: W) -> std::io::Result<()> {
    writeln!(w, "mu,e_cd,eps_a,eps_theta,seconds")?;
    for p in history {
        writeln!(
            w,
            "{},{},{},{},{}",
            crate::util::fmt_g17(p.mu),
            crate::util::fmt_g17(p.e_cd),
            crate::util::fmt_g17(p.eps_a),
            crate::util::fmt_g17(p.eps_theta),
            crate::util::fmt_g17(p.seconds)
        )?;
    }
    Ok(())
}

/// Tuner state: penalty weight, its step, and the two anchored probes.
#[derive(Debug, Clone)]
pub struct MuSchedule {
    pub mu: f64,
    pub s_mu: f64,
    pub mu_lo: Option<f64>,
    pub mu_hi: Option<f64>,
    pub tau: f64,
    /// Re-anchor `T0` to the probe's boundary when `|eps_A| < area_gate`.
    pub area_gate: f64,
}

#[derive(Debug, Clone)]
pub struct TuneOptions {
    /// Gate accuracy; both `E_C > -tau` and `eps_A > -tau` must hold.
    pub tau: f64,
    pub area_gate: f64,
    /// Abort threshold for the escalation loop.
    pub mu_cap: f64,
    /// `|A(f)|` below this marks a fully collapsed probe; the anchor is
    /// reset to equal angles since a collapsed boundary carries no usable
    /// ordering information.
    pub degenerate_area: f64,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            tau: 1e-4,
            area_gate: 0.1,
            mu_cap: 1e6,
            degenerate_area: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub mu: f64,
    pub result: ProbeResult,
    pub history: Vec<MuProbe>,
}

struct Anchor {
    angles: Vec<f64>,
    equal: Vec<f64>,
}

impl Anchor {
    fn update(&mut self, probe: &ProbeResult, opts: &TuneOptions) {
        let area = PI - probe.eps_a;
        if area.abs() <= opts.degenerate_area {
            // Collapsed solve: restart the anchor from the canonical layout.
            self.angles = self.equal.clone();
        } else if probe.eps_a.abs() < opts.area_gate {
            self.angles = probe
                .boundary
                .iter()
                .map(|p| wrap_angle(p[1].atan2(p[0])))
                .collect();
        }
    }
}

/// Runs the adaptive tuning of `mu` against a solve callback.
///
/// `solver(mu, t0)` must return a converged solve of the penalized problem
/// started from the central angles `t0`. The returned solution satisfies
/// both gates; the history records every probe in order.
pub fn tune_mu<S>(solver: &mut S, t0: &[f64], opts: &TuneOptions) -> Result<TuneOutcome, TuneError>
where
    S: FnMut(f64, &[f64]) -> ProbeResult,
{
    let n = t0.len();
    if n < 3 {
        return Err(TuneError::TooFewBoundaryPoints(n));
    }
    let tau = opts.tau;
    let gates = |p: &ProbeResult| p.e_cd > -tau && p.eps_a > -tau;

    let mut anchor = Anchor {
        angles: t0.to_vec(),
        equal: generate_initial_boundary(&BoundaryInit::EqualAngles, n)?,
    };
    let mut history: Vec<MuProbe> = Vec::new();
    let mut probe = |mu: f64, anchor: &mut Anchor, history: &mut Vec<MuProbe>| -> ProbeResult {
        let p = solver(mu, &anchor.angles);
        history.push(MuProbe {
            mu,
            e_cd: p.e_cd,
            eps_a: p.eps_a,
            eps_theta: p.eps_theta,
            seconds: p.seconds,
        });
        anchor.update(&p, opts);
        p
    };

    let mut sched = MuSchedule {
        mu: 0.0,
        s_mu: 0.0,
        mu_lo: None,
        mu_hi: None,
        tau,
        area_gate: opts.area_gate,
    };

    // Phase 1: escalate until the gates pass.
    let (mu_lo, mut f_lo) = loop {
        sched.mu += sched.s_mu;
        sched.s_mu += 10.0;
        if sched.mu > opts.mu_cap {
            return Err(TuneError::EscalationOverflow { mu: sched.mu });
        }
        let p = probe(sched.mu, &mut anchor, &mut history);
        if gates(&p) {
            break (sched.mu, p);
        }
    };
    sched.mu_lo = Some(mu_lo);
    let mut mu_lo = mu_lo;

    // Phase 2: a second anchor above the first. If its gates fail (they do
    // not in practice), keep escalating the same way.
    sched.s_mu = sched.s_mu.max(10.0);
    sched.mu = mu_lo + sched.s_mu;
    let (mu_hi, mut f_hi) = loop {
        if sched.mu > opts.mu_cap {
            return Err(TuneError::EscalationOverflow { mu: sched.mu });
        }
        let p = probe(sched.mu, &mut anchor, &mut history);
        if gates(&p) {
            break (sched.mu, p);
        }
        sched.mu += sched.s_mu;
        sched.s_mu += 10.0;
    };
    sched.mu_hi = Some(mu_hi);
    let mut mu_hi = mu_hi;

    // Phase 3: the lower anchor is better; bisect downward, keeping
    // improvements.
    if f_lo.eps_theta < (1.0 - tau) * f_hi.eps_theta && mu_lo > 0.0 {
        while sched.s_mu > 5.0 {
            sched.s_mu /= 2.0;
            let mu = (mu_lo - sched.s_mu).floor().max(0.0);
            let p = probe(mu, &mut anchor, &mut history);
            if !(p.e_cd > -tau && p.eps_a > 0.0) {
                continue;
            }
            if p.eps_theta < (1.0 - tau) * f_lo.eps_theta {
                mu_lo = mu;
                f_lo = p;
            }
        }
    }

    // Phase 4: the upper anchor is better; escalate while it keeps
    // improving.
    if f_hi.eps_theta < (1.0 - tau) * f_lo.eps_theta {
        loop {
            let mu = mu_hi + sched.s_mu;
            if mu > opts.mu_cap {
                break;
            }
            let p = probe(mu, &mut anchor, &mut history);
            if gates(&p) && p.eps_theta < (1.0 - tau) * f_hi.eps_theta {
                mu_hi = mu;
                f_hi = p;
            } else {
                break;
            }
        }
    }

    let (mu, result) = if f_lo.eps_theta < f_hi.eps_theta {
        (mu_lo, f_lo)
    } else {
        (mu_hi, f_hi)
    };
    debug_assert!(result.e_cd > -tau && result.eps_a > -tau);
    Ok(TuneOutcome {
        mu,
        result,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_points(angles: &[f64]) -> Vec<P2> {
        angles.iter().map(|&t| [t.cos(), t.sin()]).collect()
    }

    #[test]
    fn equal_angles_layout() {
        let t = generate_initial_boundary(&BoundaryInit::EqualAngles, 4).unwrap();
        let expect = [0.0, PI / 2.0, PI, 3.0 * PI / 2.0];
        for (a, b) in t.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn scaled_arc_covers_fraction() {
        // rho = 2: half circle.
        let t = generate_initial_boundary(&BoundaryInit::ScaledArc { rho: 2.0 }, 4).unwrap();
        let expect = [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0];
        for (a, b) in t.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        // rho < 1 wraps around.
        let t = generate_initial_boundary(&BoundaryInit::ScaledArc { rho: 0.5 }, 8).unwrap();
        assert!(t.iter().all(|&x| (0.0..TAU).contains(&x)));
        assert!(generate_initial_boundary(&BoundaryInit::ScaledArc { rho: 0.0 }, 4).is_err());
    }

    #[test]
    fn random_order_is_a_reproducible_permutation() {
        let a = generate_initial_boundary(&BoundaryInit::RandomOrder { seed: 7 }, 4).unwrap();
        let b = generate_initial_boundary(&BoundaryInit::RandomOrder { seed: 7 }, 4).unwrap();
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_by(f64::total_cmp);
        let equal = generate_initial_boundary(&BoundaryInit::EqualAngles, 4).unwrap();
        for (x, y) in sorted.iter().zip(&equal) {
            assert!((x - y).abs() < 1e-15);
        }
        let c = generate_initial_boundary(&BoundaryInit::RandomOrder { seed: 8 }, 4).unwrap();
        assert_ne!(a, c);
    }

    /// A solver stub that always fails the gates, to watch the escalation.
    #[test]
    fn escalation_sequence_is_0_10_30_60_100() {
        let mut mus = Vec::new();
        let mut solver = |mu: f64, t0: &[f64]| {
            mus.push(mu);
            ProbeResult {
                boundary: unit_points(t0),
                e_cd: -1.0,
                eps_a: 1.0,
                eps_theta: 1.0,
                seconds: 0.0,
            }
        };
        let t0 = generate_initial_boundary(&BoundaryInit::EqualAngles, 6).unwrap();
        let err = tune_mu(&mut solver, &t0, &TuneOptions::default()).unwrap_err();
        assert!(matches!(err, TuneError::EscalationOverflow { .. }));
        assert_eq!(&mus[..5], &[0.0, 10.0, 30.0, 60.0, 100.0]);
    }

    #[test]
    fn immediate_pass_probes_only_two_mus() {
        let mut solver = |_mu: f64, t0: &[f64]| ProbeResult {
            boundary: unit_points(t0),
            e_cd: 1e-3,
            eps_a: 1e-3,
            eps_theta: 0.5,
            seconds: 0.0,
        };
        let t0 = generate_initial_boundary(&BoundaryInit::EqualAngles, 6).unwrap();
        let out = tune_mu(&mut solver, &t0, &TuneOptions::default()).unwrap();
        assert!(out.mu == 0.0 || out.mu == 10.0);
        assert_eq!(out.history.len(), 2);
        assert_eq!(out.history[0].mu, 0.0);
        assert_eq!(out.history[1].mu, 10.0);
    }

    /// Scripted landscape: angle error improves up to mu = 40, then worsens.
    #[test]
    fn upward_refinement_stops_at_first_non_improvement() {
        let mut solver = |mu: f64, t0: &[f64]| ProbeResult {
            boundary: unit_points(t0),
            e_cd: 1e-3,
            eps_a: 1e-3,
            eps_theta: (mu - 40.0).abs() / 100.0 + 0.01,
            seconds: 0.0,
        };
        let t0 = generate_initial_boundary(&BoundaryInit::EqualAngles, 6).unwrap();
        let out = tune_mu(&mut solver, &t0, &TuneOptions::default()).unwrap();
        assert_eq!(out.mu, 40.0);
        assert!(out.mu <= 50.0);
        // Probes: 0, 10, then 20, 30, 40, 50 (the non-improvement).
        let mus: Vec<f64> = out.history.iter().map(|p| p.mu).collect();
        assert_eq!(mus, vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0]);
    }

    /// A collapsed probe resets the anchor to equal angles; with that the
    /// next probe succeeds.
    #[test]
    fn collapsed_probe_resets_anchor() {
        let mut anchors: Vec<Vec<f64>> = Vec::new();
        let mut solver = |_mu: f64, t0: &[f64]| {
            anchors.push(t0.to_vec());
            let spread = t0.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - t0.iter().cloned().fold(f64::INFINITY, f64::min);
            if spread < 1e-12 {
                // Collapsed start stays collapsed: A = 0, E = -pi.
                ProbeResult {
                    boundary: vec![[1.0, 0.0]; t0.len()],
                    e_cd: -PI,
                    eps_a: PI,
                    eps_theta: 1.0,
                    seconds: 0.0,
                }
            } else {
                ProbeResult {
                    boundary: unit_points(t0),
                    e_cd: 1e-3,
                    eps_a: 1e-3,
                    eps_theta: 0.1,
                    seconds: 0.0,
                }
            }
        };
        let t0 = vec![0.0; 8];
        let out = tune_mu(&mut solver, &t0, &TuneOptions::default()).unwrap();
        assert!(out.result.e_cd > -1e-4);
        // First anchor is the collapsed input, later ones the equal layout.
        assert!(anchors[0].iter().all(|&t| t == 0.0));
        assert!(anchors[1].windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn tuning_is_deterministic() {
        let run = || {
            let mut solver = |mu: f64, t0: &[f64]| ProbeResult {
                boundary: unit_points(t0),
                e_cd: 1e-3,
                eps_a: 1e-3,
                eps_theta: (mu - 25.0).abs() * 1e-3 + 0.02,
                seconds: 0.0,
            };
            let t0 = generate_initial_boundary(&BoundaryInit::EqualAngles, 5).unwrap();
            tune_mu(&mut solver, &t0, &TuneOptions::default()).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.mu, b.mu);
        assert_eq!(a.history.len(), b.history.len());
    }

    #[test]
    fn history_csv_has_header_and_rows() {
        let history = vec![MuProbe {
            mu: 10.0,
            e_cd: 1e-3,
            eps_a: 2e-3,
            eps_theta: 0.01,
            seconds: 0.5,
        }];
        let mut buf = Vec::new();
        write_history_csv(&history, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("mu,e_cd,eps_a,eps_theta,seconds"));
        assert_eq!(text.lines().count(), 2);
    }
}
