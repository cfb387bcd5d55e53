//! Direct numerical integration of the logistic equation and its Riccati
//! form, independent of the closed-form solutions.
//!
//! Integration restarts at every schedule breakpoint; inside a segment the
//! capacity is evaluated from the piece that owns the segment, so no step
//! ever sees a jump or a kink.

mod quadrature;
mod rk45;

pub use quadrature::{adaptive_quadrature, try_adaptive_quadrature};
pub use rk45::Step;

use crate::capacity::CapacitySchedule;
use crate::closedform::LogisticParams;
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::trajectory::{Sample, SolverStats, Trajectory};

/// Continuous solution assembled from the accepted steps of every segment.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSolution {
    t0: f64,
    p0: f64,
    steps: Vec<Step>,
    /// Owning-piece anchor for each step (used by the Riccati offset).
    anchors: Vec<f64>,
    /// Set when the integrated state is `W = P − M/2`.
    riccati: Option<CapacitySchedule>,
    stats: SolverStats,
}

impl DenseSolution {
    pub fn stats(&self) -> &SolverStats {
        &self.stats
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn end(&self) -> f64 {
        self.steps.last().map_or(self.t0, |s| s.t1)
    }

    pub fn initial_value(&self) -> f64 {
        self.p0
    }

    pub fn final_value(&self) -> f64 {
        match self.steps.len() {
            0 => self.p0,
            n => self.population(n - 1, self.steps[n - 1].t1),
        }
    }

    fn population(&self, i: usize, t: f64) -> f64 {
        let state = self.steps[i].eval(t);
        match &self.riccati {
            None => state,
            Some(cap) => {
                let m = cap.local(t, self.anchors[i]).map_or(f64::NAN, |(m, _)| m);
                state + 0.5 * m
            }
        }
    }

    /// Population at `t` within `[start, end]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let (lo, hi) = (self.start(), self.end());
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        if t == lo {
            return Ok(self.p0);
        }
        let i = self.steps.partition_point(|s| s.t1 < t).min(self.steps.len() - 1);
        Ok(self.population(i, t))
    }

    /// Start time followed by the end time of every accepted step.
    pub fn knot_times(&self) -> Vec<f64> {
        std::iter::once(self.t0)
            .chain(self.steps.iter().map(|s| s.t1))
            .collect()
    }

    /// The accepted steps as a trajectory.
    pub fn trajectory(&self) -> Trajectory {
        let mut samples = vec![Sample {
            t: self.t0,
            p: self.p0,
        }];
        for (i, s) in self.steps.iter().enumerate() {
            samples.push(Sample {
                t: s.t1,
                p: self.population(i, s.t1),
            });
        }
        Trajectory::new(samples, self.stats.clone()).expect("accepted steps are ordered and finite")
    }

    /// Dense-output samples at the requested (strictly increasing) times.
    pub fn sample(&self, times: &[f64]) -> Result<Trajectory> {
        let samples = times
            .iter()
            .map(|&t| Ok(Sample { t, p: self.eval(t)? }))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(samples, self.stats.clone())
    }
}

/// `dP/dt = r(M(t) − P)P` by adaptive RK45, returning the accepted steps.
pub fn integrate_logistic(
    params: &LogisticParams,
    cap: &CapacitySchedule,
    t_end: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    Ok(solve_logistic(params, cap, t_end, cfg)?.trajectory())
}

/// `dW/dt = r(−W² + M²/4) − ½ dM/dt` with `W = P − M/2`, reported as `P`.
pub fn integrate_riccati(
    params: &LogisticParams,
    cap: &CapacitySchedule,
    t_end: f64,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    Ok(solve_riccati(params, cap, t_end, cfg)?.trajectory())
}

/// [`integrate_logistic`] with dense output.
pub fn solve_logistic(
    params: &LogisticParams,
    cap: &CapacitySchedule,
    t_end: f64,
    cfg: &SolverConfig,
) -> Result<DenseSolution> {
    let r = params.r;
    integrate_pieces(params, cap, t_end, cfg, Equation::Logistic, |seg, p_start| {
        rk45::integrate_segment(
            |t, p| Ok(r * (cap.local(t, seg.anchor)?.0 - p) * p),
            |_| 0.0,
            seg.a,
            p_start,
            seg.b,
            cfg,
            seg.max_step,
            seg.stats,
            seg.budget,
        )
    })
}

/// [`integrate_riccati`] with dense output.
pub fn solve_riccati(
    params: &LogisticParams,
    cap: &CapacitySchedule,
    t_end: f64,
    cfg: &SolverConfig,
) -> Result<DenseSolution> {
    let r = params.r;
    integrate_pieces(params, cap, t_end, cfg, Equation::Riccati, |seg, p_start| {
        let anchor = seg.anchor;
        // W jumps wherever M does; restart it from the continuous P.
        let w_start = p_start - 0.5 * cap.local(seg.a, anchor)?.0;
        rk45::integrate_segment(
            |t, w| {
                let (m, dm) = cap.local(t, anchor)?;
                Ok(r * (-w * w + 0.25 * m * m) - 0.5 * dm)
            },
            // Control the error in P = W + M/2, not in W.
            |t| cap.local(t, anchor).map_or(0.0, |(m, _)| 0.5 * m),
            seg.a,
            w_start,
            seg.b,
            cfg,
            seg.max_step,
            seg.stats,
            seg.budget,
        )
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Equation {
    Logistic,
    Riccati,
}

struct Segment<'a> {
    a: f64,
    b: f64,
    anchor: f64,
    max_step: f64,
    stats: &'a mut SolverStats,
    budget: &'a mut usize,
}

fn integrate_pieces<F>(
    params: &LogisticParams,
    cap: &CapacitySchedule,
    t_end: f64,
    cfg: &SolverConfig,
    equation: Equation,
    mut run_segment: F,
) -> Result<DenseSolution>
where
    F: FnMut(Segment<'_>, f64) -> Result<Vec<Step>>,
{
    cfg.validate()?;
    cap.validate()?;
    if !(params.r > 0.0 && params.r.is_finite()) {
        return Err(Error::invalid("r", "must be finite and > 0"));
    }
    if !params.t0.is_finite() {
        return Err(Error::invalid("t0", "must be finite"));
    }
    if !(t_end >= params.t0 && t_end.is_finite()) {
        return Err(Error::invalid("t_end", "must be finite and >= t0"));
    }
    if !params.p0.is_finite() {
        return Err(Error::Divergence { t: params.t0 });
    }
    cap.at(params.t0)?;
    cap.at(t_end)?;

    // Smooth periodic forcing must be resolved even where the error
    // estimate alone would allow long steps.
    let max_step = match *cap {
        CapacitySchedule::SinusoidOffset { period, .. } => cfg.max_step.min(period / 8.0),
        _ => cfg.max_step,
    };

    let mut edges = vec![params.t0];
    edges.extend(cap.breakpoints(params.t0, t_end));
    edges.push(t_end);

    let mut solution = DenseSolution {
        t0: params.t0,
        p0: params.p0,
        steps: Vec::new(),
        anchors: Vec::new(),
        riccati: (equation == Equation::Riccati).then(|| cap.clone()),
        stats: SolverStats {
            solver: match equation {
                Equation::Logistic => "rk45-logistic",
                Equation::Riccati => "rk45-riccati",
            },
            ..SolverStats::default()
        },
    };
    let mut budget = cfg.max_iterations;
    let mut p = params.p0;
    for (i, w) in edges.windows(2).enumerate() {
        if i > 0 {
            solution.stats.restarts += 1;
        }
        let anchor = 0.5 * (w[0] + w[1]);
        let seg = Segment {
            a: w[0],
            b: w[1],
            anchor,
            max_step,
            stats: &mut solution.stats,
            budget: &mut budget,
        };
        let steps = run_segment(seg, p)?;
        solution.anchors.extend(std::iter::repeat_n(anchor, steps.len()));
        solution.steps.extend(steps);
        p = solution.final_value();
    }
    Ok(solution)
}
