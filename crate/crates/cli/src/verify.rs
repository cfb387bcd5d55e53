//! Built-in invariant battery behind `oscpop verify`.
//!
//! Each check prints one `PASS`/`FAIL` line with the measured quantity. The
//! randomized checks draw from a ChaCha8 stream seeded by `--seed`.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use oscpop::closedform::{logistic_constant, quadrature_solution, reciprocal_solution_z};
use oscpop::discretemap::{bifurcation_scan, map_step, normalized, ScanConfig};
use oscpop::odesolve::{solve_logistic, solve_riccati};
use oscpop::periodic::{find_periodic_solution, mean_identity_residual};
use oscpop::trajectory::sample_grid;
use oscpop::{CapacitySchedule, Error, LogisticParams, Result, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{EXIT_CHECK_FAILED, EXIT_DOMAIN, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};

/// Outcome of one check: pass flag and a short measurement.
pub type Verdict = (bool, String);

type Check = fn(&mut ChaCha8Rng) -> Result<Verdict>;

const CHECKS: &[(&str, Check)] = &[
    ("closed-form-vs-rk45", closed_form_vs_rk45),
    ("reduction-to-constant", reduction_to_constant),
    ("sinusoid-cross-check", sinusoid_cross_check),
    ("riccati-equivalence", riccati_equivalence),
    ("map-conjugacy", map_conjugacy),
    ("map-scale-covariance", map_scale_covariance),
    ("mean-identity", mean_identity),
    ("existence-boundary", existence_boundary),
    ("pole-detection", pole_detection),
    ("stiffness-flag", stiffness_flag),
    ("divergence-flag", divergence_flag),
    ("tolerance-halving", tolerance_halving),
    ("first-doubling", first_doubling),
    ("second-doubling", second_doubling),
    ("exit-codes", exit_codes),
];

/// Runs every check and returns 0 when all pass, 1 otherwise.
pub fn run_battery(seed: u64, out: &mut dyn Write) -> i32 {
    let results = run_checks(seed);
    let failed = results.iter().filter(|(_, (ok, _))| !ok).count();
    for (name, (ok, detail)) in &results {
        let _ = writeln!(out, "{} {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
    }
    let _ = writeln!(out, "{} checks, {failed} failed (seed {seed})", results.len());
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

/// Every check with its verdict; an error inside a check counts as a failure.
pub fn run_checks(seed: u64) -> Vec<(&'static str, Verdict)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CHECKS
        .iter()
        .map(|&(name, check)| {
            let verdict = check(&mut rng).unwrap_or_else(|e| (false, format!("{}: {e}", e.name())));
            (name, verdict)
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn expect_error(result: Result<impl Sized>, want: fn(&Error) -> bool) -> Verdict {
    match result {
        Err(e) if want(&e) => (true, e.name().to_string()),
        Err(e) => (false, format!("unexpected {}: {e}", e.name())),
        Ok(_) => (false, "no error raised".to_string()),
    }
}

fn closed_form_vs_rk45(_: &mut ChaCha8Rng) -> Result<Verdict> {
    let params = LogisticParams::new(1.0, 0.5, 0.0)?;
    let cap = CapacitySchedule::constant(1.0);
    let dense = solve_logistic(&params, &cap, 10.0, &SolverConfig::default())?;
    let mut worst = 0.0f64;
    for t in [0.5, 1.0, 2.0, 5.0, 10.0] {
        worst = worst.max(rel(dense.eval(t)?, logistic_constant(&params, 1.0, t)?));
    }
    let ln3 = (logistic_constant(&params, 1.0, 3f64.ln())? - 0.75).abs();
    Ok((
        worst <= 1e-6 && ln3 <= 1e-9,
        format!("max rel {worst:.2e}, |P(ln 3) - 0.75| {ln3:.2e}"),
    ))
}

fn reduction_to_constant(rng: &mut ChaCha8Rng) -> Result<Verdict> {
    let cfg = SolverConfig::default();
    let mut worst = 0.0f64;
    for r in [0.1, 1.0] {
        let m = rng.gen_range(0.5..5.0);
        let p0 = m * rng.gen_range(0.05..1.9);
        let params = LogisticParams::new(r, p0, 0.0)?;
        let cap = CapacitySchedule::constant(m);
        let t_end = 10.0 / (r * m);
        for k in 0..200 {
            let t = t_end * k as f64 / 199.0;
            let q = quadrature_solution(&params, &cap, t, &cfg)?;
            worst = worst.max(rel(q, logistic_constant(&params, m, t)?));
        }
    }
    Ok((worst <= 1e-8, format!("max rel {worst:.2e} over 2x200 points")))
}

fn sinusoid_cross_check(_: &mut ChaCha8Rng) -> Result<Verdict> {
    let cfg = SolverConfig::default();
    let params = LogisticParams::new(1.0, 1.0, 0.0)?;
    let cap = CapacitySchedule::sinusoid(0.0, 1.0, TAU)?;
    let t_end = 4.0 * PI;
    let dense = solve_logistic(&params, &cap, t_end, &cfg)?;
    let (mut worst, mut product) = (0.0f64, 0.0f64);
    for t in sample_grid(0.0, t_end, 0.01)? {
        let q = quadrature_solution(&params, &cap, t, &cfg)?;
        worst = worst.max(rel(dense.eval(t)?, q));
        let z = reciprocal_solution_z(&params, &cap, t, &cfg)?;
        product = product.max((z * q - 1.0).abs());
    }
    Ok((
        worst <= 1e-6 && product <= 1e-9,
        format!("max rel {worst:.2e}, max |zP - 1| {product:.2e}"),
    ))
}

fn riccati_equivalence(_: &mut ChaCha8Rng) -> Result<Verdict> {
    let cfg = SolverConfig::default();
    let cases = [
        (CapacitySchedule::sinusoid(2.0, 0.5, TAU)?, 1.0),
        (CapacitySchedule::two_phase(1.0, 2.0, 4.0)?, 0.5),
    ];
    let mut worst = 0.0f64;
    for (cap, p0) in &cases {
        let params = LogisticParams::new(1.0, *p0, 0.0)?;
        let direct = solve_logistic(&params, cap, 20.0, &cfg)?;
        let riccati = solve_riccati(&params, cap, 20.0, &cfg)?;
        for t in sample_grid(0.0, 20.0, 0.05)? {
            worst = worst.max(rel(riccati.eval(t)?, direct.eval(t)?));
        }
    }
    Ok((worst <= 1e-6, format!("max rel {worst:.2e}")))
}

fn map_conjugacy(rng: &mut ChaCha8Rng) -> Result<Verdict> {
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let r = rng.gen_range(0.1..4.0);
        let m = rng.gen_range(0.1..4.0);
        let rho = r * m;
        let x = rng.gen_range(0.0..1.0);
        let p = x * (1.0 + rho) / r;
        let lhs = normalized(r, m, map_step(r, m, p));
        let x = normalized(r, m, p);
        worst = worst.max((lhs - (1.0 + rho) * x * (1.0 - x)).abs());
    }
    Ok((
        worst <= 1e-12,
        format!("max |difference| {worst:.2e} over 1000 draws"),
    ))
}

fn map_scale_covariance(rng: &mut ChaCha8Rng) -> Result<Verdict> {
    let mut exact = true;
    for _ in 0..1000 {
        let (r, m, p) = (
            rng.gen_range(0.1..4.0),
            rng.gen_range(0.1..4.0),
            rng.gen_range(0.0..4.0),
        );
        let c = 2f64.powi(rng.gen_range(-8..=8));
        exact &= map_step(r / c, c * m, c * p) == c * map_step(r, m, p);
    }
    Ok((
        exact,
        "P -> cP, M -> cM, r -> r/c commutes with the map".to_string(),
    ))
}

fn mean_identity(rng: &mut ChaCha8Rng) -> Result<Verdict> {
    let cfg = SolverConfig::default();
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let m0 = rng.gen_range(0.1..2.0);
        let cap = CapacitySchedule::sinusoid(m0, rng.gen_range(0.0..2.0), rng.gen_range(0.5..10.0))?;
        let sol = find_periodic_solution(rng.gen_range(0.2..2.0), &cap, &cfg)?;
        worst = worst.max(mean_identity_residual(&sol, &cap)?);
    }
    Ok((
        worst <= 1e-7,
        format!("max residual {worst:.2e} over 5 schedules"),
    ))
}

fn existence_boundary(_: &mut ChaCha8Rng) -> Result<Verdict> {
    let cfg = SolverConfig::default();
    let sine = CapacitySchedule::sinusoid(0.0, 1.0, TAU)?;
    let (none, detail) = expect_error(find_periodic_solution(1.0, &sine, &cfg), |e| {
        matches!(e, Error::NoPeriodicSolution { .. })
    });
    let barely = CapacitySchedule::sinusoid(0.05, 1.0, TAU)?;
    let sol = find_periodic_solution(1.0, &barely, &cfg)?;
    let ok = none && sol.p_star > 0.0;
    Ok((ok, format!("sin t: {detail}; m0 = 0.05: p* = {:.6e}", sol.p_star)))
}

fn pole_detection(_: &mut ChaCha8Rng) -> Result<Verdict> {
    // P0 > 0 > M: the denominator vanishes at t = -ln 2, in backward time.
    let params = LogisticParams::new(1.0, 1.0, 0.0)?;
    Ok(expect_error(logistic_constant(&params, -1.0, -1.0), |e| {
        matches!(e, Error::Pole { .. })
    }))
}

fn stiffness_flag(_: &mut ChaCha8Rng) -> Result<Verdict> {
    let cfg = SolverConfig {
        min_step: 1e-3,
        ..SolverConfig::default()
    };
    let params = LogisticParams::new(1e4, 0.5, 0.0)?;
    let cap = CapacitySchedule::constant(1.0);
    Ok(expect_error(solve_logistic(&params, &cap, 1.0, &cfg), |e| {
        matches!(e, Error::Stiffness { .. })
    }))
}

fn divergence_flag(_: &mut ChaCha8Rng) -> Result<Verdict> {
    let params = LogisticParams {
        r: 1.0,
        p0: -1e300,
        t0: 0.0,
    };
    let cap = CapacitySchedule::constant(1.0);
    Ok(expect_error(
        solve_logistic(&params, &cap, 1.0, &SolverConfig::default()),
        |e| matches!(e, Error::Divergence { .. }),
    ))
}

fn tolerance_halving(_: &mut ChaCha8Rng) -> Result<Verdict> {
    let params = LogisticParams::new(1.0, 0.5, 0.0)?;
    let cap = CapacitySchedule::constant(1.0);
    let grid = sample_grid(0.0, 10.0, 0.01)?;
    let mut cfg = SolverConfig {
        abs_tol: 1e-6,
        rel_tol: 1e-4,
        ..SolverConfig::default()
    };
    let mut errors = Vec::new();
    for _ in 0..12 {
        let dense = solve_logistic(&params, &cap, 10.0, &cfg)?;
        let mut worst = 0.0f64;
        for &t in &grid {
            worst = worst.max((dense.eval(t)? - logistic_constant(&params, 1.0, t)?).abs());
        }
        errors.push(worst);
        cfg = cfg.scaled_tolerances(0.5);
    }
    let ok = errors.windows(2).all(|w| w[1] <= w[0]);
    Ok((
        ok,
        format!("max error {:.2e} -> {:.2e}", errors[0], errors[errors.len() - 1]),
    ))
}

fn scan_threshold(
    lo: f64,
    hi: f64,
    pick: fn(&oscpop::discretemap::BifurcationScan) -> Option<f64>,
    want: f64,
) -> Verdict {
    let scan = bifurcation_scan(1.0, lo, hi, 101, &ScanConfig::default());
    match pick(&scan) {
        Some(rho) => (
            (rho - want).abs() <= 0.01,
            format!("detected at rho = {rho:.4}, expected {want:.4}"),
        ),
        None => (false, format!("no transition detected in [{lo}, {hi}]")),
    }
}

fn first_doubling(_: &mut ChaCha8Rng) -> Result<Verdict> {
    Ok(scan_threshold(1.95, 2.05, |s| s.first_doubling, 2.0))
}

fn second_doubling(_: &mut ChaCha8Rng) -> Result<Verdict> {
    Ok(scan_threshold(2.40, 2.50, |s| s.second_doubling, 6f64.sqrt()))
}

fn exit_codes(_: &mut ChaCha8Rng) -> Result<Verdict> {
    let cases: [(&[&str], i32); 5] = [
        (
            &[
                "simulate",
                "--schedule",
                "constant:1",
                "--r",
                "1",
                "--p0",
                "1",
                "--t-end",
                "1",
            ],
            EXIT_OK,
        ),
        (&["simulate", "--bogus"], EXIT_USAGE),
        (
            &[
                "simulate",
                "--schedule",
                "wave:1",
                "--r",
                "1",
                "--p0",
                "1",
                "--t-end",
                "1",
            ],
            EXIT_USAGE,
        ),
        (
            &["periodic", "--schedule", "sinusoid:0,1,6.2831853", "--r", "1"],
            EXIT_DOMAIN,
        ),
        (
            &[
                "periodic",
                "--schedule",
                "sinusoid:1,0.5,6.2831853",
                "--r",
                "1",
                "--max-iter",
                "5",
            ],
            EXIT_NUMERICAL,
        ),
    ];
    let mut got = Vec::new();
    let mut ok = true;
    for (args, want) in cases {
        let argv = std::iter::once("oscpop").chain(args.iter().copied());
        let code = crate::run(argv, &mut std::io::sink(), &mut std::io::sink());
        ok &= code == want;
        got.push(format!("{}={code}", args[0]));
    }
    Ok((ok, format!("exit codes {}", got.join(" "))))
}
