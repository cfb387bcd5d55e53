//! Carrying-capacity schedules `M(t)`.
//!
//! Every solver needs three things from a schedule: its value, its exact
//! integral and its derivative. Schedules with jumps or kinks also report
//! their breakpoints so integrators and quadrature never straddle one.

use std::f64::consts::TAU;
use std::fmt;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// The carrying-capacity function `M(t)`.
///
/// Negative or zero capacities are accepted; operations never clamp.
#[derive(Debug, Clone, PartialEq)]
pub enum CapacitySchedule {
    /// `M(t) = m`, optionally declared periodic with an arbitrary period.
    Constant { m: f64, period: Option<f64> },
    /// `M = m1` on `[kh, kh + h/2)`, `M = m2` on `[kh + h/2, (k+1)h)`.
    TwoPhase { m1: f64, m2: f64, h: f64 },
    /// `M(t) = m0 + amplitude * sin(2πt / period)`.
    SinusoidOffset { m0: f64, amplitude: f64, period: f64 },
    /// Linear interpolation through samples.
    Tabulated(Table),
}

impl CapacitySchedule {
    pub fn constant(m: f64) -> Self {
        CapacitySchedule::Constant { m, period: None }
    }

    pub fn two_phase(m1: f64, m2: f64, h: f64) -> Result<Self> {
        let cap = CapacitySchedule::TwoPhase { m1, m2, h };
        cap.validate()?;
        Ok(cap)
    }

    pub fn sinusoid(m0: f64, amplitude: f64, period: f64) -> Result<Self> {
        let cap = CapacitySchedule::SinusoidOffset {
            m0,
            amplitude,
            period,
        };
        cap.validate()?;
        Ok(cap)
    }

    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self> {
        Ok(CapacitySchedule::Tabulated(Table::new(samples)?))
    }

    /// Declares a period on a `Constant` or `Tabulated` schedule.
    ///
    /// A tabulated schedule can only be declared periodic over exactly its
    /// sample span. `TwoPhase` and `SinusoidOffset` already carry a period
    /// and reject a conflicting one.
    pub fn with_period(self, period: f64) -> Result<Self> {
        check_positive("period", period)?;
        match self {
            CapacitySchedule::Constant { m, .. } => Ok(CapacitySchedule::Constant {
                m,
                period: Some(period),
            }),
            CapacitySchedule::Tabulated(table) => Ok(CapacitySchedule::Tabulated(table.with_period(period)?)),
            other => match other.period() {
                Some(p) if (p - period).abs() <= 1e-12 * p => Ok(other),
                _ => Err(Error::invalid(
                    "period",
                    "schedule already has a different intrinsic period",
                )),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CapacitySchedule::Constant { m, period } => {
                check_finite("m", m)?;
                if let Some(p) = period {
                    check_positive("period", p)?;
                }
            }
            CapacitySchedule::TwoPhase { m1, m2, h } => {
                check_finite("m1", m1)?;
                check_finite("m2", m2)?;
                check_positive("h", h)?;
            }
            CapacitySchedule::SinusoidOffset {
                m0,
                amplitude,
                period,
            } => {
                check_finite("m0", m0)?;
                check_finite("amplitude", amplitude)?;
                check_positive("period", period)?;
            }
            CapacitySchedule::Tabulated(ref table) => table.validate()?,
        }
        Ok(())
    }

    pub fn period(&self) -> Option<f64> {
        match *self {
            CapacitySchedule::Constant { period, .. } => period,
            CapacitySchedule::TwoPhase { h, .. } => Some(h),
            CapacitySchedule::SinusoidOffset { period, .. } => Some(period),
            CapacitySchedule::Tabulated(ref table) => table.period,
        }
    }

    /// `M(t)`. Two-phase pieces are left-closed and wrap modulo `h`.
    pub fn at(&self, t: f64) -> Result<f64> {
        match *self {
            CapacitySchedule::Constant { m, .. } => Ok(m),
            CapacitySchedule::TwoPhase { m1, m2, h } => Ok(if wrap(t, h) < 0.5 * h { m1 } else { m2 }),
            CapacitySchedule::SinusoidOffset {
                m0,
                amplitude,
                period,
            } => Ok(m0 + amplitude * (TAU * wrap(t, period) / period).sin()),
            CapacitySchedule::Tabulated(ref table) => table.at(t),
        }
    }

    /// `∫_{t0}^{t1} M(t) dt`, exact for every schedule kind.
    pub fn integral(&self, t0: f64, t1: f64) -> Result<f64> {
        if t0 > t1 {
            return Err(Error::invalid("t1", format!("must be >= t0 ({t1} < {t0})")));
        }
        if t0 == t1 {
            if let CapacitySchedule::Tabulated(ref table) = *self {
                table.locate(t0)?;
            }
            return Ok(0.0);
        }
        match *self {
            CapacitySchedule::Constant { m, .. } => Ok(m * (t1 - t0)),
            CapacitySchedule::SinusoidOffset {
                m0,
                amplitude,
                period,
            } => {
                let w = TAU / period;
                let c0 = (w * wrap(t0, period)).cos();
                let c1 = (w * wrap(t1, period)).cos();
                Ok(m0 * (t1 - t0) + amplitude / w * (c0 - c1))
            }
            CapacitySchedule::TwoPhase { .. } | CapacitySchedule::Tabulated(_) => {
                Ok(self.cumulative(t1)? - self.cumulative(t0)?)
            }
        }
    }

    /// `dM/dt`. Errors at two-phase jumps and at interior tabulated knots.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        match *self {
            CapacitySchedule::Constant { .. } => Ok(0.0),
            CapacitySchedule::TwoPhase { h, .. } => {
                let phase = wrap(t, h);
                if phase == 0.0 || phase == 0.5 * h {
                    Err(Error::NonDifferentiable { t })
                } else {
                    Ok(0.0)
                }
            }
            CapacitySchedule::SinusoidOffset {
                amplitude, period, ..
            } => {
                let w = TAU / period;
                Ok(amplitude * w * (w * wrap(t, period)).cos())
            }
            CapacitySchedule::Tabulated(ref table) => table.derivative(t),
        }
    }

    /// Points strictly inside `(a, b)` where `M` or `dM/dt` is discontinuous.
    pub fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        if !(a < b) {
            return Vec::new();
        }
        match *self {
            CapacitySchedule::Constant { .. } | CapacitySchedule::SinusoidOffset { .. } => Vec::new(),
            CapacitySchedule::TwoPhase { h, .. } => grid_points(0.0, 0.5 * h, &[0.0], a, b),
            CapacitySchedule::Tabulated(ref table) => match table.period {
                Some(p) => {
                    let offsets: Vec<f64> = table.times[..table.times.len() - 1]
                        .iter()
                        .map(|t| t - table.times[0])
                        .collect();
                    grid_points(table.times[0], p, &offsets, a, b)
                }
                None => table.times[1..table.times.len() - 1]
                    .iter()
                    .copied()
                    .filter(|&t| t > a && t < b)
                    .collect(),
            },
        }
    }

    /// Largest value `M` attains (over one period, or over the sample range).
    pub fn peak(&self) -> f64 {
        match *self {
            CapacitySchedule::Constant { m, .. } => m,
            CapacitySchedule::TwoPhase { m1, m2, .. } => m1.max(m2),
            CapacitySchedule::SinusoidOffset { m0, amplitude, .. } => m0 + amplitude.abs(),
            CapacitySchedule::Tabulated(ref table) => {
                table.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// Mean of `M` over one declared period.
    pub fn mean_over_period(&self) -> Option<f64> {
        let h = self.period()?;
        let start = match self {
            CapacitySchedule::Tabulated(table) => table.times[0],
            _ => 0.0,
        };
        self.integral(start, start + h).ok().map(|i| i / h)
    }

    /// Value and slope of the smooth piece containing `anchor`, evaluated at
    /// `t`. Lets integrators treat each piece as analytic up to its ends.
    pub(crate) fn local(&self, t: f64, anchor: f64) -> Result<(f64, f64)> {
        match *self {
            CapacitySchedule::Constant { m, .. } => Ok((m, 0.0)),
            CapacitySchedule::TwoPhase { .. } => Ok((self.at(anchor)?, 0.0)),
            CapacitySchedule::SinusoidOffset { .. } => Ok((self.at(t)?, self.derivative(t)?)),
            CapacitySchedule::Tabulated(ref table) => {
                let wrapped = table.wrap(anchor)?;
                let i = table.segment(wrapped);
                let slope = table.slope(i);
                let local_t = wrapped + (t - anchor);
                Ok((table.values[i] + slope * (local_t - table.times[i]), slope))
            }
        }
    }

    fn cumulative(&self, t: f64) -> Result<f64> {
        match *self {
            CapacitySchedule::TwoPhase { m1, m2, h } => {
                let cycles = (t / h).floor();
                let phase = t - cycles * h;
                let half = 0.5 * h;
                let partial = m1 * phase.min(half) + m2 * (phase - half).max(0.0);
                Ok(cycles * (m1 + m2) * half + partial)
            }
            CapacitySchedule::Tabulated(ref table) => table.cumulative(t),
            _ => unreachable!("closed-form schedules integrate directly"),
        }
    }

    /// Parses the text grammar `constant:M`, `twophase:M1,M2,h`,
    /// `sinusoid:M0,A,period` or `table:path.csv`.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, rest) = text
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("schedule `{text}` lacks a `kind:` prefix")))?;
        match kind.trim() {
            "constant" => {
                let [m] = parse_numbers::<1>(rest, kind)?;
                let cap = CapacitySchedule::constant(m);
                cap.validate()?;
                Ok(cap)
            }
            "twophase" => {
                let [m1, m2, h] = parse_numbers::<3>(rest, kind)?;
                CapacitySchedule::two_phase(m1, m2, h)
            }
            "sinusoid" => {
                let [m0, a, p] = parse_numbers::<3>(rest, kind)?;
                CapacitySchedule::sinusoid(m0, a, p)
            }
            "table" => Ok(CapacitySchedule::Tabulated(Table::from_csv_path(rest.trim())?)),
            other => Err(Error::Parse(format!("unknown schedule kind `{other}`"))),
        }
    }
}

impl fmt::Display for CapacitySchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CapacitySchedule::Constant { m, .. } => write!(f, "constant:{m}"),
            CapacitySchedule::TwoPhase { m1, m2, h } => write!(f, "twophase:{m1},{m2},{h}"),
            CapacitySchedule::SinusoidOffset {
                m0,
                amplitude,
                period,
            } => write!(f, "sinusoid:{m0},{amplitude},{period}"),
            CapacitySchedule::Tabulated(table) => {
                write!(f, "table[{} samples]", table.times.len())
            }
        }
    }
}

/// Samples of `M` with linear interpolation between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    times: Vec<f64>,
    values: Vec<f64>,
    /// `cumulative[i] = ∫ M` from the first sample to `times[i]`.
    cumulative: Vec<f64>,
    period: Option<f64>,
}

impl Table {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        let (times, values): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
        let mut cumulative = Vec::with_capacity(times.len());
        let mut acc = 0.0;
        for i in 0..times.len() {
            if i > 0 {
                acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
            }
            cumulative.push(acc);
        }
        let table = Table {
            times,
            values,
            cumulative,
            period: None,
        };
        table.validate()?;
        Ok(table)
    }

    /// Reads a CSV with a header row containing columns `t` and `M`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Parse(format!("table is missing a `{name}` column")))
        };
        let (ti, mi) = (column("t")?, column("M")?);
        let mut samples = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            let field = |i: usize| -> Result<f64> {
                let raw = record.get(i).unwrap_or("");
                raw.parse()
                    .map_err(|_| Error::Parse(format!("row {}: `{raw}` is not a number", line + 2)))
            };
            samples.push((field(ti)?, field(mi)?));
        }
        Table::new(samples)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Table::from_csv_reader(file)
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    pub fn range(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    fn with_period(mut self, period: f64) -> Result<Self> {
        let (lo, hi) = self.range();
        let span = hi - lo;
        if (span - period).abs() > 1e-9 * span {
            return Err(Error::invalid(
                "period",
                format!("tabulated period must equal the sample span {span}"),
            ));
        }
        self.period = Some(span);
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.times.len() < 2 {
            return Err(Error::invalid("samples", "need at least 2 samples"));
        }
        for (&t, &m) in self.times.iter().zip(&self.values) {
            check_finite("t", t)?;
            check_finite("M", m)?;
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("samples", "times must be strictly increasing"));
        }
        Ok(())
    }

    /// Maps `t` into the sample range (wrapping when periodic).
    fn wrap(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        match self.period {
            Some(p) => Ok(lo + wrap(t - lo, p)),
            None if t >= lo && t <= hi => Ok(t),
            None => Err(Error::OutOfRange { t, lo, hi }),
        }
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let w = self.wrap(t)?;
        Ok((self.segment(w), w))
    }

    /// Index `i` of the segment `[times[i], times[i+1]]` holding `t`;
    /// interior knots belong to the segment on their right.
    fn segment(&self, t: f64) -> usize {
        let n = self.times.len();
        self.times.partition_point(|&x| x <= t).clamp(1, n - 1) - 1
    }

    fn slope(&self, i: usize) -> f64 {
        (self.values[i + 1] - self.values[i]) / (self.times[i + 1] - self.times[i])
    }

    fn at(&self, t: f64) -> Result<f64> {
        let (i, w) = self.locate(t)?;
        let frac = (w - self.times[i]) / (self.times[i + 1] - self.times[i]);
        Ok(self.values[i] + frac * (self.values[i + 1] - self.values[i]))
    }

    fn derivative(&self, t: f64) -> Result<f64> {
        let (i, w) = self.locate(t)?;
        let n = self.times.len();
        let interior = self.times[1..n - 1].contains(&w);
        let periodic_seam = self.period.is_some() && w == self.times[0];
        if interior || periodic_seam {
            return Err(Error::NonDifferentiable { t });
        }
        Ok(self.slope(i))
    }

    fn cumulative(&self, t: f64) -> Result<f64> {
        let (i, w) = self.locate(t)?;
        let local = self.cumulative[i] + 0.5 * (w - self.times[i]) * (self.values[i] + self.at(w)?);
        match self.period {
            Some(p) => {
                let cycles = ((t - self.times[0]) / p).floor();
                Ok(cycles * self.cumulative[self.times.len() - 1] + local)
            }
            None => Ok(local),
        }
    }
}

/// `t mod period` in `[0, period)`.
fn wrap(t: f64, period: f64) -> f64 {
    let r = t.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

/// All `origin + k*spacing + offset` (for each offset) strictly inside `(a, b)`, sorted.
fn grid_points(origin: f64, spacing: f64, offsets: &[f64], a: f64, b: f64) -> Vec<f64> {
    let first = ((a - origin) / spacing).floor() as i64 - 1;
    let last = ((b - origin) / spacing).ceil() as i64 + 1;
    let mut points: Vec<f64> = (first..=last)
        .flat_map(|k| offsets.iter().map(move |o| origin + k as f64 * spacing + o))
        .filter(|&t| t > a && t < b)
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

fn parse_numbers<const N: usize>(text: &str, kind: &str) -> Result<[f64; N]> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(Error::Parse(format!(
            "`{kind}` expects {N} comma-separated numbers, got `{text}`"
        )));
    }
    let mut out = [0.0; N];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = part
            .parse()
            .map_err(|_| Error::Parse(format!("`{part}` is not a number")))?;
    }
    Ok(out)
}

fn check_finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, "must be finite"))
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, "must be finite and > 0"))
    }
}
