//! Closed-form solutions of the logistic equation.
//!
//! * constant capacity, evaluated without overflow for any exponent;
//! * piecewise-constant (two-phase) capacity by chaining the constant form;
//! * arbitrary capacity through the reciprocal `z = 1/P`, whose equation
//!   `z' + rMz = r` is linear and solved with the integrating factor
//!   `Q(t) = exp(r ∫_{t0}^t M)`.

use crate::capacity::CapacitySchedule;
use crate::config::{SolverConfig, MAX_EXPONENT};
use crate::error::{Error, Result};
use crate::odesolve::try_adaptive_quadrature;
use crate::trajectory::{sample_grid, Sample, SolverStats, Trajectory};

/// Denominator magnitude (normalised to 1 at `t0`) treated as a pole.
pub const POLE_TOLERANCE: f64 = 1e-10;

/// Growth coefficient `r`, initial population `p0` at time `t0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticParams {
    pub r: f64,
    pub p0: f64,
    pub t0: f64,
}

impl LogisticParams {
    pub fn new(r: f64, p0: f64, t0: f64) -> Result<Self> {
        let params = Self { r, p0, t0 };
        params.validate()?;
        Ok(params)
    }

    /// `r > 0`, `p0 > 0`, all finite.
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::invalid("r", "must be finite and > 0"));
        }
        if !(self.p0 > 0.0 && self.p0.is_finite()) {
            return Err(Error::invalid("p0", "must be finite and > 0"));
        }
        if !self.t0.is_finite() {
            return Err(Error::invalid("t0", "must be finite"));
        }
        Ok(())
    }

    fn starting_at(&self, t0: f64, p0: f64) -> Self {
        Self { t0, p0, ..*self }
    }
}

/// `P(t) = M·P0 / (P0 + (M − P0)·exp(−rM(t − t0)))`.
///
/// Evaluated as `P0 / D` with `D(t0) = 1`, rearranged so only
/// `exp(-|rM(t-t0)|)` is ever formed. `M = 0` gives the limit
/// `P0 / (1 + r·P0·(t − t0))`. A denominator that reaches
/// [`POLE_TOLERANCE`] means the solution blew up between `t0` and `t`.
pub fn logistic_constant(params: &LogisticParams, m: f64, t: f64) -> Result<f64> {
    params.validate()?;
    if !(m.is_finite() && t.is_finite()) {
        return Err(Error::invalid("m, t", "must be finite"));
    }
    let LogisticParams { r, p0, t0 } = *params;
    let tau = t - t0;
    if tau == 0.0 {
        return Ok(p0);
    }
    let x = r * m * tau;
    let excess = m / p0 - 1.0;
    if m > 0.0 && x >= 0.0 && excess >= 0.0 && excess.is_finite() {
        // p0 <= m: this form is monotone in t and never passes m.
        return Ok(m / (1.0 + excess * (-x).exp()));
    }
    let (numerator, denominator) = if x >= 0.0 {
        let growth = if m == 0.0 { -r * tau } else { (-x).exp_m1() / m };
        (p0, (-x).exp() - p0 * growth)
    } else {
        (p0 * x.exp(), 1.0 + p0 * x.exp_m1() / m)
    };
    if !(denominator > POLE_TOLERANCE) {
        return Err(Error::Pole { t, denominator });
    }
    Ok(numerator / denominator)
}

/// Populations at the end of each half of one two-phase cycle starting at `t0`.
///
/// Returns `(p_half, p_full)`: `P0` evolved for `h/2` under `m1`, then that
/// value evolved for another `h/2` under `m2`.
pub fn two_phase_step(params: &LogisticParams, cap: &CapacitySchedule) -> Result<(f64, f64)> {
    let (m1, m2, h) = two_phase_parts(cap)?;
    let t_half = params.t0 + 0.5 * h;
    let p_half = logistic_constant(params, m1, t_half)?;
    let p_full = logistic_constant(&params.starting_at(t_half, p_half), m2, params.t0 + h)?;
    Ok((p_half, p_full))
}

/// Exact solution for a piecewise-constant schedule, one constant-capacity
/// piece per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSolution {
    r: f64,
    segments: Vec<PiecewiseSegment>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewiseSegment {
    pub start: f64,
    pub end: f64,
    pub m: f64,
    pub p_start: f64,
}

impl PiecewiseSolution {
    pub fn segments(&self) -> &[PiecewiseSegment] {
        &self.segments
    }

    /// Value at `t` computed from segment `index`'s formula (may be outside
    /// the segment; used to check continuity from both sides).
    pub fn eval_in_segment(&self, index: usize, t: f64) -> Result<f64> {
        let seg = self
            .segments
            .get(index)
            .ok_or_else(|| Error::invalid("index", "no such segment"))?;
        let params = LogisticParams {
            r: self.r,
            p0: seg.p_start,
            t0: seg.start,
        };
        logistic_constant(&params, seg.m, t)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let (lo, hi) = (self.segments[0].start, self.segments[self.segments.len() - 1].end);
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        let i = self
            .segments
            .partition_point(|s| s.end <= t)
            .min(self.segments.len() - 1);
        self.eval_in_segment(i, t)
    }
}

/// Chains [`logistic_constant`] across every breakpoint of a two-phase (or
/// constant) schedule on `[t0, t_end]`.
pub fn piecewise_solution(
    params: &LogisticParams,
    cap: &CapacitySchedule,
    t_end: f64,
) -> Result<PiecewiseSolution> {
    params.validate()?;
    cap.validate()?;
    if !matches!(
        cap,
        CapacitySchedule::TwoPhase { .. } | CapacitySchedule::Constant { .. }
    ) {
        return Err(Error::invalid(
            "cap",
            "piecewise solution needs a two-phase or constant schedule",
        ));
    }
    if !(t_end >= params.t0) {
        return Err(Error::invalid("t_end", "must be >= t0"));
    }
    let mut edges = vec![params.t0];
    edges.extend(cap.breakpoints(params.t0, t_end));
    edges.push(t_end);

    let mut segments = Vec::with_capacity(edges.len() - 1);
    let mut p = params.p0;
    for w in edges.windows(2) {
        let (start, end) = (w[0], w[1]);
        let (m, _) = cap.local(start, 0.5 * (start + end))?;
        segments.push(PiecewiseSegment {
            start,
            end,
            m,
            p_start: p,
        });
        p = logistic_constant(&params.starting_at(start, p), m, end)?;
    }
    Ok(PiecewiseSolution {
        r: params.r,
        segments,
    })
}

/// Piecewise-exact two-phase trajectory sampled every `dt_sample`.
pub fn two_phase_trajectory(
    params: &LogisticParams,
    cap: &CapacitySchedule,
    t_end: f64,
    dt_sample: f64,
) -> Result<Trajectory> {
    two_phase_parts(cap)?;
    let solution = piecewise_solution(params, cap, t_end)?;
    let samples = sample_grid(params.t0, t_end, dt_sample)?
        .into_iter()
        .map(|t| {
            Ok(Sample {
                t,
                p: solution.eval(t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(
        samples,
        SolverStats {
            solver: "closed-form-two-phase",
            ..SolverStats::default()
        },
    )
}

/// `Q(t) = exp(r ∫_{t_ref}^t M)`; `Q(t_ref) = 1`.
pub fn integrating_factor(r: f64, cap: &CapacitySchedule, t_ref: f64, t: f64) -> Result<f64> {
    let exponent = r * signed_integral(cap, t_ref, t)?;
    if exponent.abs() > MAX_EXPONENT {
        return Err(Error::Range {
            exponent,
            bound: MAX_EXPONENT,
        });
    }
    Ok(exponent.exp())
}

/// `z(t) = 1/P(t) = 1/(P0·Q(t)) + (r/Q(t)) ∫_{t0}^t Q(s) ds`, with `Q`
/// anchored at `t0`.
///
/// The ratio `Q(s)/Q(t) = exp(−r ∫_s^t M)` is integrated directly, which
/// stays bounded whenever `M > 0` instead of overflowing with `Q`.
pub fn reciprocal_solution_z(
    params: &LogisticParams,
    cap: &CapacitySchedule,
    t: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    params.validate()?;
    cap.validate()?;
    cfg.validate()?;
    let LogisticParams { r, p0, t0 } = *params;
    if !(t >= t0) {
        return Err(Error::invalid("t", "must be >= t0"));
    }
    if t == t0 {
        return Ok(1.0 / p0);
    }
    let homogeneous = bounded_exp(-r * cap.integral(t0, t)?)? / p0;
    let forced = try_adaptive_quadrature(
        |s| bounded_exp(-r * cap.integral(s, t)?),
        t0,
        t,
        &cap.breakpoints(t0, t),
        cfg,
    )?;
    Ok(homogeneous + r * forced)
}

/// `P(t)` for an arbitrary schedule, the reciprocal of [`reciprocal_solution_z`].
pub fn quadrature_solution(
    params: &LogisticParams,
    cap: &CapacitySchedule,
    t: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    if t == params.t0 {
        params.validate()?;
        return Ok(params.p0);
    }
    let z = reciprocal_solution_z(params, cap, t, cfg)?;
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Divergence { t });
    }
    Ok(1.0 / z)
}

/// [`quadrature_solution`] at each requested time.
pub fn quadrature_trajectory(
    params: &LogisticParams,
    cap: &CapacitySchedule,
    times: &[f64],
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    let samples = times
        .iter()
        .map(|&t| {
            Ok(Sample {
                t,
                p: quadrature_solution(params, cap, t, cfg)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(
        samples,
        SolverStats {
            solver: "integrating-factor-quadrature",
            ..SolverStats::default()
        },
    )
}

fn signed_integral(cap: &CapacitySchedule, a: f64, b: f64) -> Result<f64> {
    if a <= b {
        cap.integral(a, b)
    } else {
        Ok(-cap.integral(b, a)?)
    }
}

fn bounded_exp(exponent: f64) -> Result<f64> {
    if exponent > MAX_EXPONENT {
        return Err(Error::Range {
            exponent,
            bound: MAX_EXPONENT,
        });
    }
    Ok(exponent.exp())
}

pub(crate) fn two_phase_parts(cap: &CapacitySchedule) -> Result<(f64, f64, f64)> {
    cap.validate()?;
    match *cap {
        CapacitySchedule::TwoPhase { m1, m2, h } => Ok((m1, m2, h)),
        _ => Err(Error::invalid("cap", "expected a two-phase schedule")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, TAU};

    fn params(r: f64, p0: f64) -> LogisticParams {
        LogisticParams::new(r, p0, 0.0).unwrap()
    }

    #[test]
    fn constant_capacity_examples() {
        assert_eq!(logistic_constant(&params(1.0, 1.0), 1.0, 5.0).unwrap(), 1.0);
        assert_eq!(logistic_constant(&params(1.0, 0.5), 1.0, 0.0).unwrap(), 0.5);
        let p = logistic_constant(&params(1.0, 0.5), 1.0, 3f64.ln()).unwrap();
        assert!((p - 0.75).abs() < 1e-15);
    }

    #[test]
    fn zero_capacity_limit() {
        // P' = -r P^2  =>  P = P0 / (1 + r P0 t).
        let p = logistic_constant(&params(2.0, 1.0), 0.0, 1.5).unwrap();
        assert!((p - 0.25).abs() < 1e-15);
        let near = logistic_constant(&params(2.0, 1.0), 1e-12, 1.5).unwrap();
        assert!((near - 0.25).abs() < 1e-10);
    }

    #[test]
    fn extreme_exponents_do_not_overflow() {
        let p = logistic_constant(&params(1.0, 0.5), 1.0, 1e6).unwrap();
        assert_eq!(p, 1.0);
        let back = logistic_constant(&params(1.0, 0.5), 1.0, -1e6).unwrap();
        assert!((0.0..1e-300).contains(&back));
        let big = logistic_constant(&params(1.0, 3.0), 2.0, 800.0).unwrap();
        assert_eq!(big, 2.0);
    }

    #[test]
    fn poles() {
        // P0 > 0 > M: the backward solution blows up at t = ln((P0 - M)/P0) / (rM).
        let pole_t = (3.0f64 / 2.0).ln() / -1.0;
        let before = logistic_constant(&params(1.0, 2.0), -1.0, pole_t * 0.5);
        assert!(before.is_ok());
        assert!(matches!(
            logistic_constant(&params(1.0, 2.0), -1.0, pole_t * 1.5),
            Err(Error::Pole { .. })
        ));
        // Forward in time the same solution decays to zero.
        assert!(logistic_constant(&params(1.0, 2.0), -1.0, 10.0).unwrap() > 0.0);
        // P0 > M > 0 backward in time.
        assert!(matches!(
            logistic_constant(&params(1.0, 2.0), 1.0, -5.0),
            Err(Error::Pole { .. })
        ));
        // M = 0 backward: pole at t = -1/(r P0).
        assert!(matches!(
            logistic_constant(&params(1.0, 1.0), 0.0, -1.5),
            Err(Error::Pole { .. })
        ));
    }

    #[test]
    fn rejects_invalid_params() {
        let bad = LogisticParams {
            r: 1.0,
            p0: 0.0,
            t0: 0.0,
        };
        assert!(logistic_constant(&bad, 1.0, 1.0).is_err());
        assert!(LogisticParams::new(-1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn two_phase_step_examples() {
        let cap = CapacitySchedule::two_phase(1.0, 1.0, 2.0 * 3f64.ln()).unwrap();
        let (half, _) = two_phase_step(&params(1.0, 0.5), &cap).unwrap();
        assert!((half - 0.75).abs() < 1e-15);

        let m = 3.0;
        let h = 1.7;
        let cap = CapacitySchedule::two_phase(m, m, h).unwrap();
        let (_, full) = two_phase_step(&params(0.4, 0.2), &cap).unwrap();
        let direct = logistic_constant(&params(0.4, 0.2), m, h).unwrap();
        assert!((full - direct).abs() < 1e-14 * direct);

        assert!(two_phase_step(&params(1.0, 1.0), &CapacitySchedule::constant(1.0)).is_err());
    }

    #[test]
    fn piecewise_segments_and_continuity() {
        let cap = CapacitySchedule::two_phase(1.0, 3.0, 2.0).unwrap();
        let sol = piecewise_solution(&params(1.0, 0.5), &cap, 5.0).unwrap();
        let ms: Vec<f64> = sol.segments().iter().map(|s| s.m).collect();
        assert_eq!(ms, vec![1.0, 3.0, 1.0, 3.0, 1.0]);
        for i in 1..sol.segments().len() {
            let bp = sol.segments()[i].start;
            let left = sol.eval_in_segment(i - 1, bp).unwrap();
            let right = sol.eval_in_segment(i, bp).unwrap();
            assert_eq!(left, right);
        }
        assert!(sol.eval(5.1).is_err());
    }

    #[test]
    fn integrating_factor_reductions() {
        let sine = CapacitySchedule::sinusoid(0.0, 1.0, TAU).unwrap();
        assert_eq!(integrating_factor(0.7, &sine, 1.3, 1.3).unwrap(), 1.0);
        let c = CapacitySchedule::constant(2.0);
        let q = integrating_factor(0.5, &c, 1.0, 3.0).unwrap();
        assert!((q - 2f64.exp()).abs() < 1e-14);
        let (r, t0, t): (f64, f64, f64) = (1.3, 0.4, 2.9);
        let want = (r * t0.cos()).exp() * (-r * t.cos()).exp();
        assert!((integrating_factor(r, &sine, t0, t).unwrap() - want).abs() < 1e-13 * want);
        assert!(matches!(
            integrating_factor(1.0, &c, 0.0, 400.0),
            Err(Error::Range { .. })
        ));
        let unit = CapacitySchedule::constant(1.0);
        let back = integrating_factor(1.0, &unit, 1.0, 1.0 - LN_2).unwrap();
        assert!((back - 0.5).abs() < 1e-15);
    }

    #[test]
    fn reciprocal_examples() {
        let cfg = SolverConfig::default();
        let c = CapacitySchedule::constant(1.0);
        assert_eq!(
            reciprocal_solution_z(&params(1.0, 0.5), &c, 0.0, &cfg).unwrap(),
            2.0
        );
        let z = reciprocal_solution_z(&params(1.0, 0.5), &c, 3f64.ln(), &cfg).unwrap();
        assert!((z - 4.0 / 3.0).abs() < 1e-10);
        assert!(reciprocal_solution_z(&params(1.0, 0.5), &c, -1.0, &cfg).is_err());
    }

    #[test]
    fn negative_capacity_overflow_is_reported() {
        let cfg = SolverConfig::default();
        let c = CapacitySchedule::constant(-10.0);
        let err = quadrature_solution(&params(1.0, 0.5), &c, 100.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::Range { .. }));
    }
}
