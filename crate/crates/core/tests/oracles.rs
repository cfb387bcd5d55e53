//! Worked examples checked against independent oracles: brute-force
//! quadrature, direct RK45 integration, the exact reciprocal-linear periodic
//! fixed point, and plain iteration of the discrete map.

use std::f64::consts::{PI, TAU};

use oscpop::closedform::{
    logistic_constant, quadrature_solution, reciprocal_solution_z, two_phase_step, two_phase_trajectory,
};
use oscpop::discretemap::{detect_attractor, iterate_map, DetectedPeriod};
use oscpop::odesolve::{adaptive_quadrature, integrate_logistic, integrate_riccati, solve_logistic};
use oscpop::periodic::{
    find_periodic_solution, half_max_summary, mean_identity_residual, period_map, time_average,
    two_phase_deductions, PeriodicSolution,
};
use oscpop::{CapacitySchedule, Error, LogisticParams, SolverConfig};

fn params(r: f64, p0: f64) -> LogisticParams {
    LogisticParams::new(r, p0, 0.0).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Composite midpoint rule with `n` panels.
fn midpoint(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
}

/// Periodic fixed point from the linear reciprocal equation `z' + rMz = r`:
/// `z* = r ∫_0^h Q / (Q(h) − 1)` with `Q(t) = exp(r ∫_0^t M)`, by brute-force
/// midpoint quadrature of `Q`.
fn periodic_fixed_point_oracle(r: f64, cap: &CapacitySchedule) -> f64 {
    let h = cap.period().unwrap();
    let q = |t: f64| (r * cap.integral(0.0, t).unwrap()).exp();
    let integral = midpoint(q, 0.0, h, 400_000);
    let z = r * integral / (q(h) - 1.0);
    1.0 / z
}

#[test]
fn constant_capacity_matches_ode() {
    let p = params(1.0, 0.5);
    let cap = CapacitySchedule::constant(1.0);
    assert!((logistic_constant(&p, 1.0, 3f64.ln()).unwrap() - 0.75).abs() < 1e-15);
    let sol = solve_logistic(&p, &cap, 10.0, &SolverConfig::default()).unwrap();
    for t in [1.0, 2.0, 5.0, 10.0] {
        let exact = logistic_constant(&p, 1.0, t).unwrap();
        assert!(rel(sol.eval(t).unwrap(), exact) < 1e-6, "t = {t}");
    }
}

#[test]
fn quadrature_matches_brute_force_midpoint() {
    let f = |t: f64| (-t.cos()).exp();
    let oracle = midpoint(f, 0.0, PI, 1_000_000);
    let got = adaptive_quadrature(f, 0.0, PI, &[], &SolverConfig::default()).unwrap();
    assert!((got - oracle).abs() < 1e-8, "{got} vs {oracle}");
}

#[test]
fn two_phase_saturates() {
    let p = params(0.01, 1.0);
    let cap = CapacitySchedule::two_phase(1000.0, 2000.0, 4.0).unwrap();
    let (half, _) = two_phase_step(&p, &cap).unwrap();
    assert!(rel(half, 1000.0) < 0.01, "{half}");
    let ode = solve_logistic(&p, &cap, 2.0, &SolverConfig::default()).unwrap();
    assert!(rel(half, ode.final_value()) < 1e-6);
}

#[test]
fn two_phase_trajectory_oscillates_between_plateaus() {
    let p = params(0.01, 1.0);
    let cap = CapacitySchedule::two_phase(1000.0, 2000.0, 4.0).unwrap();
    let traj = two_phase_trajectory(&p, &cap, 40.0, 0.05).unwrap();
    let ode = solve_logistic(&p, &cap, 40.0, &SolverConfig::default()).unwrap();
    for s in traj.samples() {
        assert!(rel(s.p, ode.eval(s.t).unwrap()) < 1e-6, "t = {}", s.t);
    }
    // After the first cycle every half-period ends on its plateau.
    for k in 2..20 {
        let t_end = k as f64 * 2.0 - 1e-9;
        let plateau = if k % 2 == 1 { 1000.0 } else { 2000.0 };
        let p_end = ode.eval(t_end).unwrap();
        assert!(rel(p_end, plateau) < 0.01, "k = {k}, P = {p_end}");
    }
}

#[test]
fn quadrature_solution_matches_ode_for_sine_capacity() {
    let p = params(1.0, 1.0);
    let cap = CapacitySchedule::sinusoid(0.0, 1.0, TAU).unwrap();
    let cfg = SolverConfig::default();
    let quad = quadrature_solution(&p, &cap, PI, &cfg).unwrap();
    let ode = solve_logistic(&p, &cap, PI, &cfg).unwrap().final_value();
    assert!(rel(quad, ode) < 1e-6, "{quad} vs {ode}");
    let z = reciprocal_solution_z(&p, &cap, PI, &cfg).unwrap();
    assert!((z * quad - 1.0).abs() < 1e-12);
}

#[test]
fn riccati_matches_logistic() {
    let cfg = SolverConfig::default();
    let cap = CapacitySchedule::sinusoid(2.0, 0.5, TAU).unwrap();
    let p = params(1.0, 1.0);
    let direct = solve_logistic(&p, &cap, 15.0, &cfg).unwrap();
    let riccati = integrate_riccati(&p, &cap, 15.0, &cfg).unwrap();
    for s in riccati.samples() {
        assert!(rel(s.p, direct.eval(s.t).unwrap()) < 1e-6, "t = {}", s.t);
    }
    let unit = CapacitySchedule::constant(1.0);
    let r = integrate_riccati(&params(1.0, 0.5), &unit, 3f64.ln(), &cfg).unwrap();
    assert!((r.last().p - 0.75).abs() < 1e-6);
}

#[test]
fn period_map_is_increasing() {
    let cfg = SolverConfig::default();
    let cap = CapacitySchedule::sinusoid(1.0, 0.5, TAU).unwrap();
    let values: Vec<f64> = (1..=40)
        .map(|k| period_map(1.0, &cap, 0.05 * k as f64, &cfg).unwrap())
        .collect();
    assert!(values.windows(2).all(|w| w[1] > w[0]));
    let sine = CapacitySchedule::sinusoid(0.0, 1.0, TAU).unwrap();
    assert!(period_map(1.0, &sine, 1.0, &cfg).unwrap() < 1.0);
}

#[test]
fn periodic_solution_matches_linear_oracle() {
    let cfg = SolverConfig::default();
    let cap = CapacitySchedule::sinusoid(1.0, 0.5, TAU).unwrap();
    let sol = find_periodic_solution(1.0, &cap, &cfg).unwrap();
    assert!(sol.p_star > 0.0 && sol.residual < 1e-8);
    let oracle = periodic_fixed_point_oracle(1.0, &cap);
    assert!(rel(sol.p_star, oracle) < 1e-7, "{} vs {oracle}", sol.p_star);
    assert!(mean_identity_residual(&sol, &cap).unwrap() < 1e-7);
}

#[test]
fn no_periodic_solution_for_sine_capacity() {
    let cfg = SolverConfig::default();
    let sine = CapacitySchedule::sinusoid(0.0, 1.0, TAU).unwrap();
    for p in [1e-3, 0.1, 1.0, 10.0] {
        assert!(period_map(1.0, &sine, p, &cfg).unwrap() < p);
    }
    assert!(matches!(
        find_periodic_solution(1.0, &sine, &cfg),
        Err(Error::NoPeriodicSolution { .. })
    ));
}

#[test]
fn perturbed_orbit_breaks_mean_identity() {
    let cfg = SolverConfig::default();
    let cap = CapacitySchedule::sinusoid(1.0, 0.5, TAU).unwrap();
    let sol = find_periodic_solution(1.0, &cap, &cfg).unwrap();
    let converged = mean_identity_residual(&sol, &cap).unwrap();
    let p_off = sol.p_star * 1.01;
    let orbit = solve_logistic(&params(1.0, p_off), &cap, sol.period, &cfg).unwrap();
    let perturbed = PeriodicSolution {
        p_star: p_off,
        residual: (orbit.final_value() - p_off).abs() / p_off,
        orbit,
        ..sol.clone()
    };
    let broken = mean_identity_residual(&perturbed, &cap).unwrap();
    assert!(broken >= 10.0 * converged.max(1e-12), "{broken} vs {converged}");
}

#[test]
fn fast_oscillation_tracks_half_maximum() {
    let cfg = SolverConfig::default();
    let cap = CapacitySchedule::sinusoid(0.5, 0.5, 0.05).unwrap();
    let sol = find_periodic_solution(1.0, &cap, &cfg).unwrap();
    let avg = time_average(&sol).unwrap();
    assert!((avg - 0.5).abs() <= 0.05, "{avg}");
    let summary = half_max_summary(&sol, &cap, 0.1, 2000).unwrap();
    assert_eq!(summary.fraction_within_band, 1.0);
}

#[test]
fn two_phase_average_is_mean_capacity_when_saturated() {
    let cfg = SolverConfig::default();
    let cap = CapacitySchedule::two_phase(100.0, 120.0, 20.0).unwrap();
    let sol = find_periodic_solution(0.05, &cap, &cfg).unwrap();
    assert!(rel(time_average(&sol).unwrap(), 110.0) < 0.05);
    // The closed-form cycle agrees with the RK45 period map.
    let report = two_phase_deductions(&params(0.05, 1.0), &cap, &cfg).unwrap();
    assert!(rel(report.p2, sol.p_star) < 1e-7);
    assert!(report.ode_cycle_residual < 1e-7);
}

#[test]
fn two_phase_deductions_regimes() {
    let cfg = SolverConfig::default();
    let p = params(0.05, 1.0);
    let slow = CapacitySchedule::two_phase(100.0, 120.0, 20.0).unwrap();
    let rep = two_phase_deductions(&p, &slow, &cfg).unwrap();
    assert!(rep.plateau_gaps.0 < 0.01 * 100.0 && rep.plateau_gaps.1 < 0.01 * 120.0);
    assert!(rep.saturated);

    let fast = CapacitySchedule::two_phase(100.0, 120.0, 0.1).unwrap();
    let rep = two_phase_deductions(&p, &fast, &cfg).unwrap();
    assert!(!rep.saturated);
    assert!(rep.plateau_gaps.0 > 0.05 * 100.0 && rep.plateau_gaps.1 > 0.05 * 120.0);
    // Fast switching keeps P near the mean capacity: each half period moves P
    // by about r*10*110*0.05, i.e. roughly 1.3% of 110.
    assert!(rel(rep.p1, 110.0) < 0.02 && rel(rep.p2, 110.0) < 0.02);
    assert!(rep.p1 < 110.0 && rep.p2 > 110.0);
    let sol = find_periodic_solution(0.05, &fast, &cfg).unwrap();
    assert!(rel(rep.p2, sol.p_star) < 1e-7);
}

#[test]
fn two_phase_deductions_degenerate_case() {
    let cfg = SolverConfig::default();
    let p = params(0.5, 0.2);
    let cap = CapacitySchedule::two_phase(3.0, 3.0, 2.0).unwrap();
    let rep = two_phase_deductions(&p, &cap, &cfg).unwrap();
    assert!((rep.p1 - rep.p2).abs() < 1e-12);
    let (half, full) = rep.first_cycle;
    assert_eq!(half, logistic_constant(&p, 3.0, 1.0).unwrap());
    assert!(rel(full, logistic_constant(&p, 3.0, 2.0).unwrap()) < 1e-14);
    assert!(rep.mean_condition_gap < 1e-12);
}

#[test]
fn logistic_equilibria_in_ode() {
    let cfg = SolverConfig::default();
    let cap = CapacitySchedule::constant(4.0);
    let p = LogisticParams {
        r: 1.0,
        p0: 4.0,
        t0: 0.0,
    };
    assert!(integrate_logistic(&p, &cap, 20.0, &cfg)
        .unwrap()
        .populations()
        .all(|x| x == 4.0));
}

#[test]
fn discrete_map_examples() {
    // rho = 0.5: stable fixed point.
    let orbit = iterate_map(0.5, 1.0, 0.1, 500);
    assert!((orbit.values[500] - 1.0).abs() < 1e-12);

    // rho = 1: period 1 at M.
    let rec = detect_attractor(1.0, 1.0, 0.3, 5000, 256, 1e-9);
    assert_eq!(rec.detected_period, DetectedPeriod::Finite(1));
    assert_eq!(rec.attractor, vec![1.0]);

    // rho = 2.2: period 2; brute-force check that P_{k+2} = P_k after a long run.
    let rec = detect_attractor(1.0, 2.2, 0.3, 5000, 256, 1e-9);
    assert_eq!(rec.detected_period, DetectedPeriod::Finite(2));
    let brute = iterate_map(1.0, 2.2, 0.3, 100_000).values;
    let n = brute.len();
    assert!((brute[n - 1] - brute[n - 3]).abs() < 1e-12);
    assert!((brute[n - 1] - brute[n - 2]).abs() > 1e-3);

    // rho = 2.8: chaotic band, for several seeds.
    for seed in [0.1, 0.7, 1.9, 3.1] {
        let rec = detect_attractor(1.0, 2.8, seed, 5000, 256, 1e-9);
        match rec.detected_period {
            DetectedPeriod::Aperiodic => {}
            DetectedPeriod::Finite(p) => assert!(p > 16, "seed {seed}: period {p}"),
            DetectedPeriod::Diverged => panic!("seed {seed} diverged"),
        }
    }
}
