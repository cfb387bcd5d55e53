use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub p: f64,
}

/// Bookkeeping reported alongside a trajectory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverStats {
    pub solver: &'static str,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
    /// Number of restarts at schedule breakpoints.
    pub restarts: usize,
}

/// Ordered `(t, P)` samples produced by any solver.
///
/// Times are strictly increasing and every population is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<Sample>,
    stats: SolverStats,
}

impl Trajectory {
    pub fn new(samples: Vec<Sample>, stats: SolverStats) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("samples", "trajectory needs at least one sample"));
        }
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::invalid("samples", "times must be strictly increasing"));
        }
        if let Some(bad) = samples.iter().find(|s| !s.p.is_finite()) {
            return Err(Error::Divergence { t: bad.t });
        }
        Ok(Self { samples, stats })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn stats(&self) -> &SolverStats {
        &self.stats
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn populations(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.p)
    }

    pub fn first(&self) -> Sample {
        self.samples[0]
    }

    pub fn last(&self) -> Sample {
        self.samples[self.samples.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// `t0, t0 + dt, t0 + 2dt, ...` up to and including `t_end`.
///
/// Grid times are computed as `t0 + k*dt` so they do not drift; `t_end` is
/// appended when the grid does not land on it.
pub fn sample_grid(t0: f64, t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", "must be finite and > 0"));
    }
    if !(t_end >= t0) {
        return Err(Error::invalid("t_end", "must be >= t0"));
    }
    let n = ((t_end - t0) / dt).floor() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|k| t0 + k as f64 * dt).collect();
    while grid.len() > 1 && grid[grid.len() - 1] > t_end {
        grid.pop();
    }
    let last = grid[grid.len() - 1];
    if t_end - last > 1e-9 * dt {
        grid.push(t_end);
    } else if grid.len() > 1 {
        let end = grid.len() - 1;
        grid[end] = t_end;
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unordered_or_non_finite() {
        let s = |t, p| Sample { t, p };
        assert!(Trajectory::new(vec![s(0.0, 1.0), s(0.0, 1.0)], SolverStats::default()).is_err());
        assert!(matches!(
            Trajectory::new(vec![s(0.0, 1.0), s(1.0, f64::NAN)], SolverStats::default()),
            Err(Error::Divergence { t }) if t == 1.0
        ));
        assert!(Trajectory::new(vec![], SolverStats::default()).is_err());
    }

    #[test]
    fn grid_hits_end() {
        assert_eq!(
            sample_grid(0.0, 1.0, 0.25).unwrap(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert_eq!(sample_grid(0.0, 1.0, 0.4).unwrap(), vec![0.0, 0.4, 0.8, 1.0]);
        assert_eq!(sample_grid(2.0, 2.0, 0.1).unwrap(), vec![2.0]);
        let g = sample_grid(0.0, 12.566, 0.01).unwrap();
        assert_eq!(*g.last().unwrap(), 12.566);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(sample_grid(0.0, 1.0, 0.0).is_err());
        assert!(sample_grid(1.0, 0.0, 0.1).is_err());
    }
}
