//! Scalar Dormand–Prince 4(5) pair with PI step-size control and the
//! pair's fourth-order continuous extension for dense output.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::trajectory::SolverStats;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
// Fifth-order weights (also the last stage row, FSAL).
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Fourth-order continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

/// One accepted step `[t0, t1]` with its continuous-extension coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub t0: f64,
    pub t1: f64,
    coeffs: [f64; 5],
}

impl Step {
    pub fn start_value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn end_value(&self) -> f64 {
        self.coeffs[0] + self.coeffs[1]
    }

    /// Fourth-order interpolant; exact at both ends.
    pub fn eval(&self, t: f64) -> f64 {
        if t == self.t1 {
            return self.end_value();
        }
        let [c1, c2, c3, c4, c5] = self.coeffs;
        let theta = (t - self.t0) / (self.t1 - self.t0);
        let theta1 = 1.0 - theta;
        c1 + theta * (c2 + theta1 * (c3 + theta * (c4 + theta1 * c5)))
    }

    /// Derivative of the interpolant with respect to `t`.
    fn slope(&self, theta: f64) -> f64 {
        let [_, c2, c3, c4, c5] = self.coeffs;
        let theta1 = 1.0 - theta;
        let g = c3 + theta * (c4 + theta1 * c5);
        let dg = c4 + (theta1 - theta) * c5;
        let inner = c2 + theta1 * g;
        let dinner = theta1 * dg - g;
        (inner + theta * dinner) / (self.t1 - self.t0)
    }
}

/// Interior points where the interpolant's defect is sampled.
const DEFECT_POINTS: [f64; 2] = [0.25, 0.75];

/// Integrates `y' = rhs(t, y)` from `(t0, y0)` to exactly `t1`, returning
/// the accepted steps (empty when `t1 == t0`).
///
/// `budget` counts attempted steps across calls so a multi-segment
/// integration shares one `max_iterations` cap. Relative error is measured
/// on `y + offset(t)`, the quantity the caller reports.
#[allow(clippy::too_many_arguments)]
pub(crate) fn integrate_segment<F, G>(
    mut rhs: F,
    offset: G,
    t0: f64,
    y0: f64,
    t1: f64,
    cfg: &SolverConfig,
    max_step: f64,
    stats: &mut SolverStats,
    budget: &mut usize,
) -> Result<Vec<Step>>
where
    F: FnMut(f64, f64) -> Result<f64>,
    G: Fn(f64) -> f64,
{
    let mut eval = |t: f64, y: f64, stats: &mut SolverStats| {
        stats.rhs_evaluations += 1;
        rhs(t, y)
    };

    let f0 = eval(t0, y0, stats)?;
    if !y0.is_finite() || !f0.is_finite() {
        return Err(Error::Divergence { t: t0 });
    }
    let mut steps = Vec::new();
    if t1 <= t0 {
        return Ok(steps);
    }

    let max_step = max_step.min(cfg.max_step);
    let mut h = initial_step(
        &mut eval,
        t0,
        y0,
        f0,
        t1 - t0,
        (y0 + offset(t0)).abs(),
        cfg,
        max_step,
        stats,
    )?;
    let (mut t, mut y, mut k1) = (t0, y0, f0);
    let mut err_prev: f64 = 1e-4;
    let mut rejected_last = false;
    let end_slack = 4.0 * f64::EPSILON * t1.abs().max(t0.abs()).max(1.0);

    loop {
        if *budget == 0 {
            return Err(Error::NonConvergence {
                what: "RK45 integration",
                iterations: cfg.max_iterations,
            });
        }
        *budget -= 1;

        let last = t + h >= t1 - end_slack;
        if last {
            h = t1 - t;
        }

        let k2 = eval(t + C2 * h, y + h * A21 * k1, stats)?;
        let k3 = eval(t + C3 * h, y + h * (A31 * k1 + A32 * k2), stats)?;
        let k4 = eval(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3), stats)?;
        let k5 = eval(
            t + C5 * h,
            y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
            stats,
        )?;
        let k6 = eval(
            t + h,
            y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
            stats,
        )?;
        let t_new = if last { t1 } else { t + h };
        let y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        let k7 = eval(t_new, y_new, stats)?;
        let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);

        if !(y_new.is_finite() && k7.is_finite() && err.is_finite()) {
            stats.rejected_steps += 1;
            rejected_last = true;
            h *= 0.1;
            if h < cfg.min_step {
                return Err(Error::Divergence { t });
            }
            continue;
        }

        let size = (y + offset(t)).abs().max((y_new + offset(t_new)).abs());
        let scale = cfg.abs_tol + cfg.rel_tol * size;
        let mut err_norm = err.abs() / scale;

        let rise = y_new - y;
        let bulge = h * k1 - rise;
        let step = Step {
            t0: t,
            t1: t_new,
            coeffs: [
                y,
                rise,
                bulge,
                rise - h * k7 - bulge,
                h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
            ],
        };
        if err_norm <= 1.0 {
            // The interpolant is used for sampling, so its error is held to
            // the same tolerance: |u - y| is bounded by about h·max|u' - f(u)|.
            for theta in DEFECT_POINTS {
                let ts = t + theta * h;
                let u = step.eval(ts);
                let defect = h * (step.slope(theta) - eval(ts, u, stats)?);
                let size = (u + offset(ts)).abs();
                let norm = defect.abs() / (cfg.abs_tol + cfg.rel_tol * size);
                err_norm = if norm.is_finite() {
                    err_norm.max(norm)
                } else {
                    f64::INFINITY
                };
            }
        }

        if err_norm <= 1.0 {
            stats.accepted_steps += 1;
            steps.push(step);
            t = t_new;
            y = y_new;
            k1 = k7;
            if last {
                return Ok(steps);
            }
            let mut factor = if err_norm == 0.0 {
                MAX_FACTOR
            } else {
                SAFETY * err_norm.powf(-ALPHA) * err_prev.powf(BETA)
            };
            factor = factor.clamp(MIN_FACTOR, MAX_FACTOR);
            if rejected_last {
                factor = factor.min(1.0);
            }
            err_prev = err_norm.max(1e-4);
            rejected_last = false;
            h = (h * factor).min(max_step);
        } else {
            stats.rejected_steps += 1;
            rejected_last = true;
            h *= (SAFETY * err_norm.powf(-0.2)).max(MIN_FACTOR);
            if h < cfg.min_step {
                return Err(Error::Stiffness { t, step: h });
            }
        }
    }
}

/// Starting step from the usual two-derivative-estimate heuristic.
#[allow(clippy::too_many_arguments)]
fn initial_step<F>(
    eval: &mut F,
    t0: f64,
    y0: f64,
    f0: f64,
    span: f64,
    size: f64,
    cfg: &SolverConfig,
    max_step: f64,
    stats: &mut SolverStats,
) -> Result<f64>
where
    F: FnMut(f64, f64, &mut SolverStats) -> Result<f64>,
{
    let scale = cfg.abs_tol + cfg.rel_tol * size;
    let d0 = size / scale;
    let d1 = f0.abs() / scale;
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(max_step).min(span);
    let f1 = eval(t0 + h0, y0 + h0 * f0, stats)?;
    let d2 = (f1 - f0).abs() / scale / h0;
    let h1 = if !d2.is_finite() {
        h0
    } else if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(max_step).min(span).max(cfg.min_step))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(rhs: impl FnMut(f64, f64) -> Result<f64>, y0: f64, t1: f64) -> Result<Vec<Step>> {
        let cfg = SolverConfig::default();
        let mut stats = SolverStats::default();
        let mut budget = cfg.max_iterations;
        integrate_segment(
            rhs,
            |_| 0.0,
            0.0,
            y0,
            t1,
            &cfg,
            cfg.max_step,
            &mut stats,
            &mut budget,
        )
    }

    #[test]
    fn exponential_decay() {
        let steps = run(|_, y| Ok(-y), 1.0, 5.0).unwrap();
        let end = steps.last().unwrap();
        assert_eq!(end.t1, 5.0);
        assert!((end.end_value() - (-5.0f64).exp()).abs() < 1e-9);
        assert!(steps
            .windows(2)
            .all(|w| w[0].t1 == w[1].t0 && w[0].end_value() == w[1].start_value()));
    }

    #[test]
    fn continuous_extension_tracks_solution() {
        let steps = run(|_, y| Ok(-y), 1.0, 5.0).unwrap();
        for s in &steps {
            for k in 0..=8 {
                let t = s.t0 + (s.t1 - s.t0) * k as f64 / 8.0;
                assert!((s.eval(t) - (-t).exp()).abs() < 1e-8, "t = {t}");
            }
        }
        assert!(run(|_, y| Ok(-y), 1.0, 0.0).unwrap().is_empty());
    }

    #[test]
    fn blow_up_underflows_step() {
        // y' = y^2 from y(0) = 1 blows up at t = 1.
        let err = run(|_, y| Ok(y * y), 1.0, 2.0).unwrap_err();
        let t = match err {
            Error::Stiffness { t, .. } | Error::Divergence { t } => t,
            other => panic!("{other:?}"),
        };
        assert!((t - 1.0).abs() < 1e-3, "{t}");
    }

    #[test]
    fn stiff_problem_underflows_step() {
        // Stability limits explicit steps to ~3/|λ|, below min_step here.
        let cfg = SolverConfig {
            min_step: 1e-3,
            ..SolverConfig::default()
        };
        let mut stats = SolverStats::default();
        let mut budget = cfg.max_iterations;
        let err = integrate_segment(
            |_, y| Ok(-1e4 * (y - 1.0)),
            |_| 0.0,
            0.0,
            0.0,
            1.0,
            &cfg,
            1.0,
            &mut stats,
            &mut budget,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Stiffness { .. }), "{err:?}");
    }

    #[test]
    fn non_finite_start_is_divergence() {
        let err = run(|_, y| Ok(y * y), f64::INFINITY, 1.0).unwrap_err();
        assert_eq!(err, Error::Divergence { t: 0.0 });
    }

    #[test]
    fn budget_exhaustion() {
        let cfg = SolverConfig {
            max_iterations: 3,
            ..SolverConfig::default()
        };
        let mut stats = SolverStats::default();
        let mut budget = cfg.max_iterations;
        let err = integrate_segment(
            |t, _| Ok(t.sin()),
            |_| 0.0,
            0.0,
            0.0,
            100.0,
            &cfg,
            1.0,
            &mut stats,
            &mut budget,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }
}
