use crate::error::{Error, Result};

/// Largest exponent accepted before `exp` is considered an overflow risk.
pub const MAX_EXPONENT: f64 = 700.0;

/// Tolerances, step bounds and iteration caps shared by the numerical routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_step: 1.0,
            min_step: 1e-12,
            max_iterations: 1_000_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::invalid("abs_tol", "must be finite and > 0"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::invalid("rel_tol", "must be finite and > 0"));
        }
        if !(self.min_step > 0.0) {
            return Err(Error::invalid("min_step", "must be > 0"));
        }
        if !(self.min_step < self.max_step) {
            return Err(Error::invalid("max_step", "must exceed min_step"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be >= 1"));
        }
        Ok(())
    }

    /// Same configuration with both tolerances scaled by `factor`.
    pub fn scaled_tolerances(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            ..*self
        }
    }

    /// Error bound `max(abs_tol, rel_tol * |value|)`.
    pub fn bound_for(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        SolverConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let base = SolverConfig::default();
        for cfg in [
            SolverConfig { abs_tol: 0.0, ..base },
            SolverConfig {
                rel_tol: -1.0,
                ..base
            },
            SolverConfig {
                min_step: 2.0,
                max_step: 1.0,
                ..base
            },
            SolverConfig {
                max_iterations: 0,
                ..base
            },
        ] {
            assert!(matches!(cfg.validate(), Err(Error::InvalidParameter { .. })));
        }
    }
}
