//! Periodic steady states for periodic carrying capacity.
//!
//! For a schedule with period `h` the period map `Φ(p) = P(h; P(0) = p)`
//! is increasing, and its positive fixed point is the periodic solution.
//! It exists exactly when `∫_0^h M > 0`: the reciprocal `z = 1/P` obeys the
//! linear equation `z' + rMz = r`, whose Floquet multiplier is
//! `exp(−r ∫_0^h M)`.
//!
//! Periodicity forces `∫_0^h (MP − P²) dt = (1/r) ln(P(h)/P(0)) = 0`, so on a
//! periodic orbit `⟨MP⟩ = ⟨P²⟩` holds exactly. Whether `P` also tracks half
//! the peak capacity depends on the regime; [`half_max_summary`] measures it.

use crate::capacity::CapacitySchedule;
use crate::closedform::{two_phase_parts, two_phase_step, LogisticParams};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::odesolve::{solve_logistic, try_adaptive_quadrature, DenseSolution};
use crate::trajectory::Trajectory;

/// Relative tolerance for the regime claims `P₁ ≈ M₁`, `P ≈ M/2`.
pub const DEFAULT_REGIME_TOLERANCE: f64 = 0.05;

const MAX_BRACKET_EXPANSIONS: usize = 60;
const MAX_BISECTIONS: usize = 400;

/// A fixed point of the period map together with its one-period orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSolution {
    pub p_star: f64,
    pub period: f64,
    pub growth_rate: f64,
    /// `|Φ(p*) − p*| / p*`.
    pub residual: f64,
    /// Fixed-point tolerance the solution was converged to.
    pub tolerance: f64,
    pub orbit: DenseSolution,
    pub cfg: SolverConfig,
}

impl PeriodicSolution {
    pub fn orbit_trajectory(&self) -> Trajectory {
        self.orbit.trajectory()
    }
}

/// `Φ(p0)`: population after one period, starting from `p0` at `t = 0`.
///
/// The fixed-point residual is relative, so the absolute tolerance is
/// tightened to stay well below `rel_tol·p0` for small populations.
pub fn period_map(r: f64, cap: &CapacitySchedule, p0: f64, cfg: &SolverConfig) -> Result<f64> {
    Ok(orbit_from(r, cap, p0, cfg)?.final_value())
}

fn orbit_from(r: f64, cap: &CapacitySchedule, p0: f64, cfg: &SolverConfig) -> Result<DenseSolution> {
    let h = cap.period().ok_or(Error::NotPeriodic)?;
    let params = LogisticParams::new(r, p0, 0.0)?;
    solve_logistic(&params, cap, h, &relative_to(cfg, p0))
}

/// `cfg` with `abs_tol` no larger than `1e-3·rel_tol·magnitude`.
fn relative_to(cfg: &SolverConfig, magnitude: f64) -> SolverConfig {
    let floor = 1e-3 * cfg.rel_tol * magnitude.abs();
    SolverConfig {
        abs_tol: if floor > 0.0 {
            cfg.abs_tol.min(floor)
        } else {
            cfg.abs_tol
        },
        ..*cfg
    }
}

/// Mean of `M` over one period, or the `NoPeriodicSolution` error when it is
/// not positive.
pub fn check_existence(cap: &CapacitySchedule) -> Result<f64> {
    cap.validate()?;
    let h = cap.period().ok_or(Error::NotPeriodic)?;
    let mean_capacity = cap.integral(0.0, h)? / h;
    if mean_capacity > 0.0 {
        Ok(mean_capacity)
    } else {
        Err(Error::NoPeriodicSolution { mean_capacity })
    }
}

/// Locates the positive fixed point of the period map by bracketing and
/// bisection, starting from `peak(M)·[1e-6, 10]`.
pub fn find_periodic_solution(
    r: f64,
    cap: &CapacitySchedule,
    cfg: &SolverConfig,
) -> Result<PeriodicSolution> {
    let peak = cap.peak();
    find_periodic_solution_from(r, cap, (peak * 1e-6, peak * 10.0), cfg)
}

/// [`find_periodic_solution`] from an explicit initial bracket `(lo, hi)`,
/// which is widened geometrically until `Φ(p) − p` changes sign.
pub fn find_periodic_solution_from(
    r: f64,
    cap: &CapacitySchedule,
    bracket: (f64, f64),
    cfg: &SolverConfig,
) -> Result<PeriodicSolution> {
    cfg.validate()?;
    check_existence(cap)?;
    let h = cap.period().ok_or(Error::NotPeriodic)?;
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::invalid("bracket", "need 0 < lo < hi"));
    }
    let tolerance = cfg.rel_tol;
    let excess = |p: f64| -> Result<f64> { Ok(period_map(r, cap, p, cfg)? - p) };

    let mut expansions = 0;
    while excess(lo)? <= 0.0 {
        lo *= 0.1;
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS || lo < f64::MIN_POSITIVE {
            return Err(Error::NonConvergence {
                what: "periodic-solution bracket (lower end)",
                iterations: expansions,
            });
        }
    }
    while excess(hi)? >= 0.0 {
        lo = lo.max(hi);
        hi *= 10.0;
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS || !hi.is_finite() {
            return Err(Error::NonConvergence {
                what: "periodic-solution bracket (upper end)",
                iterations: expansions,
            });
        }
    }

    let budget = MAX_BISECTIONS.min(cfg.max_iterations);
    let mut p_star = None;
    for _ in 0..budget {
        let mid = if hi > 2.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            p_star = Some(mid);
            break;
        }
        let g = excess(mid)?;
        if g == 0.0 {
            p_star = Some(mid);
            break;
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-3 * tolerance * lo {
            p_star = Some(0.5 * (lo + hi));
            break;
        }
    }
    let p_star = p_star.ok_or(Error::NonConvergence {
        what: "periodic-solution bisection",
        iterations: budget,
    })?;

    let orbit = orbit_from(r, cap, p_star, cfg)?;
    let residual = (orbit.final_value() - p_star).abs() / p_star;
    if residual > tolerance {
        return Err(Error::NonConvergence {
            what: "periodic-solution residual",
            iterations: budget,
        });
    }
    Ok(PeriodicSolution {
        p_star,
        period: h,
        growth_rate: r,
        residual,
        tolerance,
        orbit,
        cfg: *cfg,
    })
}

/// `∫_0^h f(t, P(t), M(t)) dt` over the orbit, split at capacity
/// breakpoints with every solver step as a panel boundary.
fn integrate_over_orbit<F>(
    sol: &PeriodicSolution,
    cap: &CapacitySchedule,
    cfg: &SolverConfig,
    f: F,
) -> Result<f64>
where
    F: Fn(f64, f64, f64) -> f64,
{
    let (start, end) = (sol.orbit.start(), sol.orbit.end());
    let knots = sol.orbit.knot_times();
    let mut edges = vec![start];
    edges.extend(cap.breakpoints(start, end));
    edges.push(end);
    let mut total = 0.0;
    for w in edges.windows(2) {
        let anchor = 0.5 * (w[0] + w[1]);
        total += try_adaptive_quadrature(
            |t| {
                let m = cap.local(t, anchor)?.0;
                Ok(f(t, sol.orbit.eval(t)?, m))
            },
            w[0],
            w[1],
            &knots,
            cfg,
        )?;
    }
    Ok(total)
}

/// `|∫(MP − P²) dt| / ∫P² dt` over one period.
pub fn mean_identity_residual(sol: &PeriodicSolution, cap: &CapacitySchedule) -> Result<f64> {
    let scale = integrate_over_orbit(sol, cap, &sol.cfg, |_, p, _| p * p)?;
    // The net integral is near zero; measure it against the scale.
    let cfg = relative_to(&sol.cfg, scale);
    let net = integrate_over_orbit(sol, cap, &cfg, |_, p, m| m * p - p * p)?;
    Ok(net.abs() / scale)
}

/// The identity in completed-square form: `(∫(P − M/2)² dt, ∫M²/4 dt)`.
pub fn half_square_identity(sol: &PeriodicSolution, cap: &CapacitySchedule) -> Result<(f64, f64)> {
    let lhs = integrate_over_orbit(sol, cap, &sol.cfg, |_, p, m| (p - 0.5 * m).powi(2))?;
    let rhs = integrate_over_orbit(sol, cap, &sol.cfg, |_, _, m| 0.25 * m * m)?;
    Ok((lhs, rhs))
}

/// `⟨P⟩ = (1/h) ∫_0^h P dt`.
pub fn time_average(sol: &PeriodicSolution) -> Result<f64> {
    let orbit = &sol.orbit;
    let integral = try_adaptive_quadrature(
        |t| orbit.eval(t),
        orbit.start(),
        orbit.end(),
        &orbit.knot_times(),
        &relative_to(&sol.cfg, sol.p_star * sol.period),
    )?;
    Ok(integral / sol.period)
}

/// How closely a periodic orbit follows half the peak capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfMaxSummary {
    pub peak_capacity: f64,
    pub time_average: f64,
    /// `|⟨P⟩ − M_max/2|`.
    pub average_gap: f64,
    /// `max_t |P(t) − M_max/2|` over the sampled cycle.
    pub max_gap: f64,
    /// Fraction of the period where `|P − M_max/2| < band·M_max`.
    pub fraction_within_band: f64,
    pub band: f64,
}

pub fn half_max_summary(
    sol: &PeriodicSolution,
    cap: &CapacitySchedule,
    band: f64,
    samples: usize,
) -> Result<HalfMaxSummary> {
    let peak = cap.peak();
    let half = 0.5 * peak;
    let average = time_average(sol)?;
    let n = samples.max(1);
    let step = sol.period / n as f64;
    let mut max_gap: f64 = 0.0;
    let mut inside = 0usize;
    for k in 0..n {
        let t = sol.orbit.start() + (k as f64 + 0.5) * step;
        let gap = (sol.orbit.eval(t)? - half).abs();
        max_gap = max_gap.max(gap);
        if gap < band * peak.abs() {
            inside += 1;
        }
    }
    Ok(HalfMaxSummary {
        peak_capacity: peak,
        time_average: average,
        average_gap: (average - half).abs(),
        max_gap,
        fraction_within_band: inside as f64 / n as f64,
        band,
    })
}

/// Quantities behind the two-phase saturation argument, on the periodic cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhaseReport {
    /// Population at the end of the `m1` phase.
    pub p1: f64,
    /// Population at the end of the `m2` phase (cycle start).
    pub p2: f64,
    pub mean_population: f64,
    /// `|(m1 + m2)/2 − ⟨P⟩|`.
    pub mean_condition_gap: f64,
    /// `(|p1 − m1|, |p2 − m2|)`.
    pub plateau_gaps: (f64, f64),
    /// `|p1 − p2| / max(p1, p2)`.
    pub p1_p2_relative_gap: f64,
    /// `(p_half, p_full)` of the first cycle from the supplied `p0`.
    pub first_cycle: (f64, f64),
    /// Both plateau gaps within `tolerance` relative to their capacities.
    pub saturated: bool,
    pub tolerance: f64,
    /// `|Φ_ode(p2) − p2| / p2`: the closed-form cycle checked by RK45.
    pub ode_cycle_residual: f64,
}

/// [`two_phase_deductions_with`] at [`DEFAULT_REGIME_TOLERANCE`].
pub fn two_phase_deductions(
    params: &LogisticParams,
    cap: &CapacitySchedule,
    cfg: &SolverConfig,
) -> Result<TwoPhaseReport> {
    two_phase_deductions_with(params, cap, cfg, DEFAULT_REGIME_TOLERANCE)
}

/// Periodic two-phase cycle in closed form.
///
/// Over a constant-capacity phase of length `τ` the reciprocal evolves
/// affinely, `z ↦ e^{−rmτ} z + (1 − e^{−rmτ})/m`, so the cycle map is affine
/// and its fixed point is explicit. The phase average follows from
/// `∫P dt = mτ − (1/r) ln(P_end/P_start)`.
pub fn two_phase_deductions_with(
    params: &LogisticParams,
    cap: &CapacitySchedule,
    cfg: &SolverConfig,
    tolerance: f64,
) -> Result<TwoPhaseReport> {
    params.validate()?;
    let (m1, m2, h) = two_phase_parts(cap)?;
    check_existence(cap)?;
    let r = params.r;
    let tau = 0.5 * h;
    let (a1, b1) = reciprocal_affine(r, m1, tau);
    let (a2, b2) = reciprocal_affine(r, m2, tau);
    let z_start = (a2 * b1 + b2) / (1.0 - a1 * a2);
    let z_mid = a1 * z_start + b1;
    let (p2, p1) = (1.0 / z_start, 1.0 / z_mid);

    let integral = m1 * tau - (p1 / p2).ln() / r + m2 * tau - (p2 / p1).ln() / r;
    let mean_population = integral / h;
    let plateau_gaps = ((p1 - m1).abs(), (p2 - m2).abs());
    let saturated = plateau_gaps.0 <= tolerance * m1.abs() && plateau_gaps.1 <= tolerance * m2.abs();

    let ode_end = period_map(r, cap, p2, cfg)?;

    Ok(TwoPhaseReport {
        p1,
        p2,
        mean_population,
        mean_condition_gap: (0.5 * (m1 + m2) - mean_population).abs(),
        plateau_gaps,
        p1_p2_relative_gap: (p1 - p2).abs() / p1.max(p2),
        first_cycle: two_phase_step(params, cap)?,
        saturated,
        tolerance,
        ode_cycle_residual: (ode_end - p2).abs() / p2,
    })
}

fn reciprocal_affine(r: f64, m: f64, tau: f64) -> (f64, f64) {
    let x = r * m * tau;
    let offset = if m == 0.0 { r * tau } else { -(-x).exp_m1() / m };
    ((-x).exp(), offset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn constant_equilibrium_is_periodic() {
        let cfg = SolverConfig::default();
        let cap = CapacitySchedule::constant(2.0).with_period(1.0).unwrap();
        assert_eq!(period_map(1.0, &cap, 2.0, &cfg).unwrap(), 2.0);
        let sol = find_periodic_solution(1.0, &cap, &cfg).unwrap();
        assert!((sol.p_star - 2.0).abs() < 1e-8 * 2.0, "{}", sol.p_star);
        assert!(mean_identity_residual(&sol, &cap).unwrap() < 1e-9);
        assert!((time_average(&sol).unwrap() - 2.0).abs() < 1e-7);
    }

    #[test]
    fn needs_a_period() {
        let cfg = SolverConfig::default();
        let cap = CapacitySchedule::constant(2.0);
        assert_eq!(
            find_periodic_solution(1.0, &cap, &cfg).unwrap_err(),
            Error::NotPeriodic
        );
        assert_eq!(period_map(1.0, &cap, 1.0, &cfg).unwrap_err(), Error::NotPeriodic);
    }

    #[test]
    fn mean_zero_capacity_has_no_solution() {
        let cfg = SolverConfig::default();
        let sine = CapacitySchedule::sinusoid(0.0, 1.0, TAU).unwrap();
        assert!(matches!(
            find_periodic_solution(1.0, &sine, &cfg),
            Err(Error::NoPeriodicSolution { .. })
        ));
        assert!(period_map(1.0, &sine, 1.0, &cfg).unwrap() < 1.0);
    }

    #[test]
    fn affine_cycle_degenerates_to_equilibrium() {
        let cfg = SolverConfig::default();
        let params = LogisticParams::new(0.3, 0.7, 0.0).unwrap();
        let cap = CapacitySchedule::two_phase(4.0, 4.0, 3.0).unwrap();
        let rep = two_phase_deductions(&params, &cap, &cfg).unwrap();
        assert!((rep.p1 - 4.0).abs() < 1e-12 && (rep.p2 - 4.0).abs() < 1e-12);
        assert!(rep.mean_condition_gap < 1e-12);
        assert!(rep.saturated);
    }

    #[test]
    fn two_phase_needs_positive_mean() {
        let cfg = SolverConfig::default();
        let params = LogisticParams::new(1.0, 1.0, 0.0).unwrap();
        let cap = CapacitySchedule::two_phase(1.0, -2.0, 2.0).unwrap();
        assert!(matches!(
            two_phase_deductions(&params, &cap, &cfg),
            Err(Error::NoPeriodicSolution { .. })
        ));
    }
}
