//! Adaptive Simpson quadrature with mandatory panel boundaries.

use crate::config::SolverConfig;
use crate::error::{Error, Result};

const MIN_DEPTH: u32 = 4;
const MAX_DEPTH: u32 = 60;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

/// `∫_a^b f` to within `max(abs_tol, rel_tol·|result|)`.
///
/// Every point of `mandatory_points` inside `(a, b)` becomes a panel
/// boundary, so kinks and jumps there are never straddled.
pub fn adaptive_quadrature<F>(
    mut f: F,
    a: f64,
    b: f64,
    mandatory_points: &[f64],
    cfg: &SolverConfig,
) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    try_adaptive_quadrature(|t| Ok(f(t)), a, b, mandatory_points, cfg)
}

/// As [`adaptive_quadrature`] for integrands that can fail.
pub fn try_adaptive_quadrature<F>(
    mut f: F,
    a: f64,
    b: f64,
    mandatory_points: &[f64],
    cfg: &SolverConfig,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("a, b", "integration limits must be finite"));
    }
    if a > b {
        return Err(Error::invalid("b", "must be >= a"));
    }
    if a == b {
        return Ok(0.0);
    }

    let mut edges = vec![a];
    let mut inner: Vec<f64> = mandatory_points
        .iter()
        .copied()
        .filter(|&t| t > a && t < b)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(b);

    let mut eval = |t: f64| -> Result<f64> {
        let v = f(t)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Divergence { t })
        }
    };

    let mut panels = Vec::with_capacity(edges.len() - 1);
    let mut estimate = 0.0;
    let mut fa = eval(a)?;
    for w in edges.windows(2) {
        let (pa, pb) = (w[0], w[1]);
        let fm = eval(0.5 * (pa + pb))?;
        let fb = eval(pb)?;
        let whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
        estimate += whole;
        panels.push((pa, pb, fa, fm, fb, whole));
        fa = fb;
    }
    let total_tol = cfg.bound_for(estimate);

    let mut stack: Vec<Panel> = panels
        .into_iter()
        .rev()
        .map(|(pa, pb, fa, fm, fb, whole)| Panel {
            a: pa,
            b: pb,
            fa,
            fm,
            fb,
            whole,
            tol: total_tol * (pb - pa) / (b - a),
            depth: 0,
        })
        .collect();

    let mut sum = 0.0;
    let mut compensation = 0.0;
    let mut iterations = 0usize;
    while let Some(p) = stack.pop() {
        iterations += 1;
        if iterations > cfg.max_iterations {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature",
                iterations: cfg.max_iterations,
            });
        }
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = eval(lm)?;
        let frm = eval(rm)?;
        let left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
        let right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
        let delta = left + right - p.whole;
        let roundoff = 64.0 * f64::EPSILON * (left.abs() + right.abs());

        if p.depth >= MIN_DEPTH && (delta.abs() <= 15.0 * p.tol || delta.abs() <= roundoff) {
            // Kahan summation keeps thousands of panels from eroding the total.
            let term = left + right + delta / 15.0 - compensation;
            let next = sum + term;
            compensation = (next - sum) - term;
            sum = next;
            continue;
        }
        if p.depth >= MAX_DEPTH || lm <= p.a || rm >= p.b {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature (interval exhausted)",
                iterations,
            });
        }
        let tol = 0.5 * p.tol;
        let depth = p.depth + 1;
        stack.push(Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
            tol,
            depth,
        });
        stack.push(Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
            tol,
            depth,
        });
    }
    Ok(sum)
}
