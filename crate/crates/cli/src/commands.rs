//! The data-producing subcommands. Each returns its CSV text, a summary and
//! any warnings; routing them to streams or files is the caller's job.

use oscpop::closedform::{quadrature_solution, two_phase_trajectory};
use oscpop::discretemap::{bifurcation_scan, normalized, ScanConfig};
use oscpop::odesolve::solve_logistic;
use oscpop::periodic::{
    find_periodic_solution, half_max_summary, half_square_identity, mean_identity_residual, time_average,
    two_phase_deductions_with,
};
use oscpop::trajectory::sample_grid;
use oscpop::{Error, LogisticParams, Result};

use crate::output::{csv_text, fmt_num};
use crate::{BifurcationArgs, PeriodicArgs, TrajectoryArgs, TwoPhaseArgs};

/// Cycle samples used for the pointwise half-maximum statistics.
const HALF_MAX_SAMPLES: usize = 2000;

/// Orbit samples per period when `--dt` is not given.
const DEFAULT_ORBIT_SAMPLES: f64 = 200.0;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub csv: String,
    pub summary: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl Outcome {
    fn add(&mut self, key: &str, value: impl Into<String>) {
        self.summary.push((key.to_string(), value.into()));
    }

    fn num(&mut self, key: &str, value: f64) {
        self.add(key, fmt_num(value));
    }
}

fn optional(value: Option<f64>) -> String {
    value.map_or_else(|| "none".to_string(), fmt_num)
}

/// `t,P,M` from the adaptive integrator's dense output. Any finite `p0` is
/// accepted here, including the negative starts that blow up.
pub fn simulate(a: &TrajectoryArgs) -> Result<Outcome> {
    let cap = a.schedule.build()?;
    let cfg = a.solver.build()?;
    let params = LogisticParams {
        r: a.r,
        p0: a.p0,
        t0: a.t0,
    };
    let grid = sample_grid(a.t0, a.t_end, a.dt)?;
    let dense = solve_logistic(&params, &cap, a.t_end, &cfg)?;
    let rows = grid
        .iter()
        .map(|&t| Ok(vec![t, dense.eval(t)?, cap.at(t)?]))
        .collect::<Result<Vec<_>>>()?;

    let mut o = Outcome {
        csv: csv_text(&["t", "P", "M"], rows)?,
        ..Outcome::default()
    };
    let stats = dense.stats();
    o.add("schedule", cap.to_string());
    o.num("final_P", dense.final_value());
    o.add("accepted_steps", stats.accepted_steps.to_string());
    o.add("rejected_steps", stats.rejected_steps.to_string());
    Ok(o)
}

/// Integrating-factor quadrature against RK45 on the same grid.
pub fn closed_form(a: &TrajectoryArgs) -> Result<Outcome> {
    let cap = a.schedule.build()?;
    let cfg = a.solver.build()?;
    let params = LogisticParams::new(a.r, a.p0, a.t0)?;
    let grid = sample_grid(a.t0, a.t_end, a.dt)?;
    let dense = solve_logistic(&params, &cap, a.t_end, &cfg)?;

    let (mut max_abs, mut max_rel) = (0.0f64, 0.0f64);
    let mut rows = Vec::with_capacity(grid.len());
    for &t in &grid {
        let closed = quadrature_solution(&params, &cap, t, &cfg)?;
        let numeric = dense.eval(t)?;
        let diff = (closed - numeric).abs();
        max_abs = max_abs.max(diff);
        max_rel = max_rel.max(diff / closed.abs());
        rows.push(vec![t, closed, numeric, diff]);
    }

    let mut o = Outcome {
        csv: csv_text(&["t", "P_closed", "P_numeric", "abs_diff"], rows)?,
        ..Outcome::default()
    };
    o.add("schedule", cap.to_string());
    o.num("max_abs_diff", max_abs);
    o.num("max_rel_diff", max_rel);
    Ok(o)
}

/// Exact piecewise trajectory and the periodic-cycle report.
pub fn two_phase(a: &TwoPhaseArgs) -> Result<Outcome> {
    let t = &a.trajectory;
    let cap = t.schedule.build()?;
    let cfg = t.solver.build()?;
    let params = LogisticParams::new(t.r, t.p0, t.t0)?;
    if !(a.tolerance > 0.0 && a.tolerance.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "tolerance",
            reason: "must be finite and > 0".into(),
        });
    }
    let traj = two_phase_trajectory(&params, &cap, t.t_end, t.dt)?;
    let report = two_phase_deductions_with(&params, &cap, &cfg, a.tolerance)?;
    let rows = traj
        .samples()
        .iter()
        .map(|s| Ok(vec![s.t, s.p, cap.at(s.t)?]))
        .collect::<Result<Vec<_>>>()?;

    let mut o = Outcome {
        csv: csv_text(&["t", "P", "M"], rows)?,
        ..Outcome::default()
    };
    o.add("schedule", cap.to_string());
    o.num("P1", report.p1);
    o.num("P2", report.p2);
    o.num("mean_population", report.mean_population);
    o.num("mean_condition_gap", report.mean_condition_gap);
    o.num("plateau_gap_1", report.plateau_gaps.0);
    o.num("plateau_gap_2", report.plateau_gaps.1);
    o.num("p1_p2_relative_gap", report.p1_p2_relative_gap);
    o.num("first_cycle_half", report.first_cycle.0);
    o.num("first_cycle_full", report.first_cycle.1);
    o.add("saturated", report.saturated.to_string());
    o.num("tolerance", report.tolerance);
    o.num("ode_cycle_residual", report.ode_cycle_residual);
    if !report.saturated {
        o.warnings.push(format!(
            "cycle does not saturate: plateau gaps {} and {} exceed {} of capacity",
            fmt_num(report.plateau_gaps.0),
            fmt_num(report.plateau_gaps.1),
            fmt_num(report.tolerance)
        ));
    }
    Ok(o)
}

/// Fixed point of the period map, its invariants and one sampled period.
pub fn periodic(a: &PeriodicArgs) -> Result<Outcome> {
    let cap = a.schedule.build()?;
    let cfg = a.solver.build()?;
    if !(a.band > 0.0 && a.band.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "band",
            reason: "must be finite and > 0".into(),
        });
    }
    let sol = find_periodic_solution(a.r, &cap, &cfg)?;
    let start = sol.orbit.start();
    let dt = a.dt.unwrap_or(sol.period / DEFAULT_ORBIT_SAMPLES);
    let grid = sample_grid(start, sol.orbit.end(), dt)?;
    let rows = grid
        .iter()
        .map(|&t| Ok(vec![t, sol.orbit.eval(t)?, cap.at(t)?]))
        .collect::<Result<Vec<_>>>()?;

    let average = time_average(&sol)?;
    let identity = mean_identity_residual(&sol, &cap)?;
    let (lhs, rhs) = half_square_identity(&sol, &cap)?;
    let half = half_max_summary(&sol, &cap, a.band, HALF_MAX_SAMPLES)?;

    let mut o = Outcome {
        csv: csv_text(&["t", "P", "M"], rows)?,
        ..Outcome::default()
    };
    o.add("schedule", cap.to_string());
    o.num("p_star", sol.p_star);
    o.num("period", sol.period);
    o.num("residual", sol.residual);
    o.num("time_average", average);
    o.add("mean_capacity", optional(cap.mean_over_period()));
    o.num("mean_identity_residual", identity);
    o.num("half_square_lhs", lhs);
    o.num("half_square_rhs", rhs);
    o.num("peak_capacity", half.peak_capacity);
    o.num("half_peak", 0.5 * half.peak_capacity);
    o.num("average_gap", half.average_gap);
    o.num("max_gap", half.max_gap);
    o.num("band", half.band);
    o.num("fraction_within_band", half.fraction_within_band);
    Ok(o)
}

/// Scatter of attractor values against `ρ = rM`. Branch values are the
/// normalised states `x = rP/(1 + ρ)`, so every branch lies in `[0, 1]`.
pub fn bifurcation(a: &BifurcationArgs) -> Result<Outcome> {
    let invalid = |name: &'static str, reason: &str| Error::InvalidParameter {
        name,
        reason: reason.to_string(),
    };
    if !(a.r > 0.0 && a.r.is_finite()) {
        return Err(invalid("r", "must be finite and > 0"));
    }
    if !(a.rho_min.is_finite() && a.rho_max.is_finite() && a.rho_min < a.rho_max) {
        return Err(invalid("rho_max", "must be finite and exceed rho_min"));
    }
    if a.steps < 2 {
        return Err(invalid("steps", "must be >= 2"));
    }
    if a.window < 2 {
        return Err(invalid("window", "must be >= 2"));
    }
    if !(a.match_tol > 0.0 && a.match_tol.is_finite()) {
        return Err(invalid("match_tol", "must be finite and > 0"));
    }
    if !(a.x0 > 0.0 && a.x0 < 1.0) {
        return Err(invalid("x0", "must lie in (0, 1)"));
    }
    let cfg = ScanConfig {
        transient: a.transient,
        window: a.window,
        match_tol: a.match_tol,
        carry_seed: !a.no_carry,
        initial_x: a.x0,
    };
    let scan = bifurcation_scan(a.r, a.rho_min, a.rho_max, a.steps, &cfg);
    let rows = scan
        .records
        .iter()
        .filter(|rec| rec.detected_period != oscpop::discretemap::DetectedPeriod::Diverged)
        .flat_map(|rec| {
            rec.attractor
                .iter()
                .map(move |&p| vec![rec.control, normalized(rec.r, rec.m, p)])
        });

    let mut o = Outcome {
        csv: csv_text(&["rho", "branch_value"], rows)?,
        ..Outcome::default()
    };
    o.add("points", scan.records.len().to_string());
    o.add("first_doubling", optional(scan.first_doubling));
    o.add("second_doubling", optional(scan.second_doubling));
    o.add("aperiodic_points", scan.aperiodic_points.to_string());
    o.add("diverged_points", scan.diverged_points.to_string());
    if scan.diverged_points > 0 {
        o.warnings.push(format!(
            "{} scan points escaped to infinity",
            scan.diverged_points
        ));
    }
    Ok(o)
}
