//! Discrete logistic dynamics `P_{k+1} = P_k + r(M − P_k)P_k`.
//!
//! With `ρ = rM` and `x = rP/(1 + ρ)` the update is exactly the quadratic
//! map `x ↦ λx(1 − x)` with `λ = 1 + ρ`, so period doubling starts at
//! `ρ = 2` (λ = 3) and the next doubling at `ρ = √6` (λ = 1 + √6).

/// Orbits leaving `|x| ≤ ESCAPE_BOUND` (normalised units) are flagged as divergent.
pub const ESCAPE_BOUND: f64 = 10.0;

/// Sequence `P_0, P_1, ...` of the map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapOrbit {
    /// `P_0` followed by every iterate computed.
    pub values: Vec<f64>,
    /// Index of the first iterate outside the escape bound, if any.
    /// Iteration stops there.
    pub escaped_at: Option<usize>,
}

impl MapOrbit {
    pub fn diverged(&self) -> bool {
        self.escaped_at.is_some()
    }
}

/// One application of the map.
#[inline]
pub fn map_step(r: f64, m: f64, p: f64) -> f64 {
    p + r * (m - p) * p
}

/// Normalised coordinate `x = rP/(1 + rM)` in which the map is `λx(1 − x)`.
#[inline]
pub fn normalized(r: f64, m: f64, p: f64) -> f64 {
    r * p / (1.0 + r * m)
}

fn escaped(r: f64, m: f64, p: f64) -> bool {
    !p.is_finite() || (r * p).abs() > ESCAPE_BOUND * (1.0 + r * m).abs()
}

/// `n` iterations from `p0`; stops early (flagged) on escape.
pub fn iterate_map(r: f64, m: f64, p0: f64, n: usize) -> MapOrbit {
    let mut values = Vec::with_capacity(n + 1);
    values.push(p0);
    let mut p = p0;
    for k in 1..=n {
        p = map_step(r, m, p);
        values.push(p);
        if escaped(r, m, p) {
            return MapOrbit {
                values,
                escaped_at: Some(k),
            };
        }
    }
    MapOrbit {
        values,
        escaped_at: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectedPeriod {
    Finite(usize),
    /// No period up to half the observation window.
    Aperiodic,
    /// The orbit escaped; no period is claimed.
    Diverged,
}

impl DetectedPeriod {
    pub fn finite(self) -> Option<usize> {
        match self {
            DetectedPeriod::Finite(p) => Some(p),
            _ => None,
        }
    }
}

impl std::fmt::Display for DetectedPeriod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DetectedPeriod::Finite(p) => write!(f, "{p}"),
            DetectedPeriod::Aperiodic => f.write_str("aperiodic"),
            DetectedPeriod::Diverged => f.write_str("diverged"),
        }
    }
}

/// One point of a bifurcation scan.
#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationRecord {
    /// Control parameter `ρ = rM`.
    pub control: f64,
    pub r: f64,
    pub m: f64,
    /// Distinct cycle values (sorted), or the whole window when aperiodic.
    pub attractor: Vec<f64>,
    pub detected_period: DetectedPeriod,
    /// Last iterate reached, used to seed the next scan point.
    pub final_state: f64,
}

/// Iterates `transient` steps, observes `window` more and reports the
/// smallest period `p ≤ window/2` whose consecutive blocks agree within
/// `match_tol` in normalised units.
pub fn detect_attractor(
    r: f64,
    m: f64,
    p0: f64,
    transient: usize,
    window: usize,
    match_tol: f64,
) -> BifurcationRecord {
    let window = window.max(1);
    let orbit = iterate_map(r, m, p0, transient.max(1) + window - 1);
    let control = r * m;
    let final_state = *orbit.values.last().expect("orbit holds p0");
    if orbit.diverged() {
        let attractor = orbit.values.iter().copied().filter(|v| v.is_finite()).collect();
        return BifurcationRecord {
            control,
            r,
            m,
            attractor,
            detected_period: DetectedPeriod::Diverged,
            final_state,
        };
    }
    let observed = &orbit.values[orbit.values.len() - window..];
    let x: Vec<f64> = observed.iter().map(|&p| normalized(r, m, p)).collect();

    let period = (1..=window / 2).find(|&p| (0..window - p).all(|i| (x[i] - x[i + p]).abs() <= match_tol));

    let (detected_period, mut attractor) = match period {
        Some(p) => (DetectedPeriod::Finite(p), observed[window - p..].to_vec()),
        None => (DetectedPeriod::Aperiodic, observed.to_vec()),
    };
    attractor.sort_by(f64::total_cmp);
    if period.is_some() {
        attractor.dedup();
    }
    BifurcationRecord {
        control,
        r,
        m,
        attractor,
        detected_period,
        final_state,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub transient: usize,
    pub window: usize,
    pub match_tol: f64,
    /// Start each point from the previous point's final state.
    pub carry_seed: bool,
    /// Starting normalised state `x0` when not carrying a seed.
    pub initial_x: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            transient: 20_000,
            window: 512,
            match_tol: 1e-9,
            carry_seed: true,
            initial_x: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationScan {
    pub records: Vec<BifurcationRecord>,
    /// First control value with period 2 after period 1 was last seen.
    pub first_doubling: Option<f64>,
    /// First control value with period 4 after period 2 was last seen.
    pub second_doubling: Option<f64>,
    pub diverged_points: usize,
    pub aperiodic_points: usize,
}

/// Sweeps `ρ` uniformly over `[rho_min, rho_max]` in `steps` points with
/// `r = r_fixed` and `M = ρ / r_fixed`.
pub fn bifurcation_scan(
    r_fixed: f64,
    rho_min: f64,
    rho_max: f64,
    steps: usize,
    cfg: &ScanConfig,
) -> BifurcationScan {
    let steps = steps.max(2);
    let spacing = (rho_max - rho_min) / (steps - 1) as f64;
    let mut records: Vec<BifurcationRecord> = Vec::with_capacity(steps);
    let mut seed_x = cfg.initial_x;
    for i in 0..steps {
        let rho = rho_min + i as f64 * spacing;
        let m = rho / r_fixed;
        let p0 = seed_x * (1.0 + rho) / r_fixed;
        let record = detect_attractor(r_fixed, m, p0, cfg.transient, cfg.window, cfg.match_tol);
        seed_x = if cfg.carry_seed && record.detected_period != DetectedPeriod::Diverged {
            normalized(r_fixed, m, record.final_state)
        } else {
            cfg.initial_x
        };
        records.push(record);
    }

    let mut first_doubling = None;
    let mut second_doubling = None;
    let mut last_finite = None;
    for rec in &records {
        if let Some(p) = rec.detected_period.finite() {
            match (last_finite, p) {
                (Some(1), 2) if first_doubling.is_none() => first_doubling = Some(rec.control),
                (Some(2), 4) if second_doubling.is_none() => second_doubling = Some(rec.control),
                _ => {}
            }
            last_finite = Some(p);
        }
    }
    let count = |want: DetectedPeriod| records.iter().filter(|r| r.detected_period == want).count();
    BifurcationScan {
        first_doubling,
        second_doubling,
        diverged_points: count(DetectedPeriod::Diverged),
        aperiodic_points: count(DetectedPeriod::Aperiodic),
        records,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_points() {
        let orbit = iterate_map(0.7, 3.0, 3.0, 50);
        assert_eq!(orbit.values.len(), 51);
        assert!(orbit.values.iter().all(|&p| p == 3.0));
        assert!(iterate_map(0.7, 3.0, 0.0, 50).values.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn stable_fixed_point_attracts() {
        let orbit = iterate_map(0.5, 1.0, 0.1, 200);
        assert!((orbit.values[200] - 1.0).abs() < 1e-12);
        assert!(!orbit.diverged());
    }

    #[test]
    fn escape_is_flagged_not_thrown() {
        let orbit = iterate_map(1.0, 1.0, 5.0, 100);
        assert!(orbit.diverged());
        let k = orbit.escaped_at.unwrap();
        assert_eq!(orbit.values.len(), k + 1);
        let rec = detect_attractor(1.0, 1.0, 5.0, 100, 64, 1e-9);
        assert_eq!(rec.detected_period, DetectedPeriod::Diverged);
        assert!(!rec.attractor.is_empty());
    }

    #[test]
    fn periods() {
        let one = detect_attractor(1.0, 1.0, 0.2, 2000, 64, 1e-9);
        assert_eq!(one.detected_period, DetectedPeriod::Finite(1));
        assert_eq!(one.attractor, vec![1.0]);
        let two = detect_attractor(1.0, 2.2, 0.5, 5000, 64, 1e-9);
        assert_eq!(two.detected_period, DetectedPeriod::Finite(2));
        assert_eq!(two.attractor.len(), 2);
    }

    #[test]
    fn transitions_reported() {
        let scan = bifurcation_scan(1.0, 1.9, 2.6, 141, &ScanConfig::default());
        let first = scan.first_doubling.unwrap();
        let second = scan.second_doubling.unwrap();
        assert!((first - 2.0).abs() <= 0.01, "{first}");
        assert!((second - 6f64.sqrt()).abs() <= 0.01, "{second}");
    }
}
