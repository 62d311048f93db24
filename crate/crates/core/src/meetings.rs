//! Closed-form node-meeting statistics and their empirical counterparts.
//!
//! A meeting starts when two nodes come within range `R`. With uniform
//! headings, a node meets new neighbors at total rate `8 v nu R / pi`; the
//! relative heading `psi` of a meeting pair has density `sin(psi/2) / 4`,
//! so the relative speed `V = 2 v sin(psi/2)` has density
//! `V / (2v sqrt(4v^2 - V^2))`. The chord crossed inside the range disk has
//! tail `sqrt(1 - x^2 / 4R^2)`, and the meeting duration `T = d / V` has, in
//! the billiard regime (`tau = 0`), the exact tail
//!
//! ```text
//! P(T > t) = 1/4 log|(x+1)/(x-1)| (1/x - x) + 1/2,   x = v t / R
//! ```
//!
//! whose density is `(v/R) [1/4 log|(x+1)/(x-1)| (1 + 1/x^2) - 1/(2x)]`.
//! For `tau > 0` only the Markov bound `min(1, pi^2 R / (8 v t))` is
//! available, and it is not extrapolated.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::contacts::ContactStream;
use crate::{Error, Result, ScenarioParams};

/// Total rate at which a node meets new neighbors, `8 v nu R / pi`.
pub fn meeting_rate_total(v: f64, nu: f64, range: f64) -> f64 {
    8.0 * v * nu * range / PI
}

/// Rate density of meetings with nodes heading in `[psi1, psi1 + dpsi)`
/// for a node heading `psi0`: `(2 v nu R / pi) |sin((psi1 - psi0) / 2)|`.
pub fn meeting_rate_directional(psi0: f64, psi1: f64, v: f64, nu: f64, range: f64) -> f64 {
    2.0 * v * nu * range / PI * ((psi1 - psi0) / 2.0).sin().abs()
}

/// Value of the meeting-duration density; the log singularity at `t = R/v`
/// is integrable and reported distinctly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    Value(f64),
    Singular,
}

impl Density {
    /// Numeric value, `+inf` at the singularity.
    pub fn value(self) -> f64 {
        match self {
            Density::Value(v) => v,
            Density::Singular => f64::INFINITY,
        }
    }
}

/// `Q(u) = sum_{k>=1} u^{2k} / (4k^2 - 1)` for `0 <= u <= 1/2`.
fn q_series(u: f64) -> f64 {
    let u2 = u * u;
    let mut term = u2;
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let add = term / (4.0 * kf * kf - 1.0);
        sum += add;
        if add < 1e-18 * sum {
            break;
        }
        term *= u2;
    }
    sum
}

/// `Q'(u) = sum_{k>=1} 2k u^{2k-1} / (4k^2 - 1)` for `0 <= u <= 1/2`.
fn dq_series(u: f64) -> f64 {
    let u2 = u * u;
    let mut term = u;
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        let add = 2.0 * kf * term / (4.0 * kf * kf - 1.0);
        sum += add;
        if add < 1e-18 * sum {
            break;
        }
        term *= u2;
    }
    sum
}

/// Dimensionless density in `x = v t / R`.
fn unit_pdf(x: f64) -> Density {
    if x == 1.0 {
        return Density::Singular;
    }
    if x <= 0.5 {
        Density::Value(dq_series(x))
    } else if x >= 2.0 {
        let u = 1.0 / x;
        Density::Value(u * u * dq_series(u))
    } else {
        let log = ((x + 1.0) / (x - 1.0)).abs().ln();
        Density::Value(0.25 * log * (1.0 + 1.0 / (x * x)) - 0.5 / x)
    }
}

/// Dimensionless tail in `x = v t / R`.
fn unit_tail(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x == 1.0 {
        0.5
    } else if x <= 0.5 {
        1.0 - q_series(x)
    } else if x >= 2.0 {
        q_series(1.0 / x)
    } else {
        let log = ((x + 1.0) / (x - 1.0)).abs().ln();
        0.25 * log * (1.0 / x - x) + 0.5
    }
}

/// Meeting-duration density `p_T(t)` in the billiard regime.
pub fn meeting_duration_pdf(t: f64, v: f64, range: f64) -> Result<Density> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    if !(v > 0.0 && range > 0.0) {
        return Err(Error::Domain {
            name: "v, R",
            value: v.min(range),
            domain: "(0, inf)",
        });
    }
    let scale = v / range;
    Ok(match unit_pdf(scale * t) {
        Density::Value(p) => Density::Value(scale * p),
        Density::Singular => Density::Singular,
    })
}

/// Exact meeting-duration tail `P(T > t)` in the billiard regime.
pub fn meeting_duration_tail(t: f64, v: f64, range: f64) -> f64 {
    unit_tail(v * t / range)
}

/// Markov bound on the duration tail, `min(1, pi^2 R / (8 v t))`. Holds for any `tau`.
pub fn meeting_duration_tail_bound(t: f64, v: f64, range: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    (PI * PI * range / (8.0 * v * t)).min(1.0)
}

/// Mean meeting duration implied by the meeting rate and Little's law, `pi^2 R / (8 v)`.
pub fn mean_meeting_duration(v: f64, range: f64) -> f64 {
    PI * PI * range / (8.0 * v)
}

/// Density of the relative speed of a meeting pair, `V / (2v sqrt(4v^2 - V^2))` on `[0, 2v)`.
pub fn relative_velocity_pdf(rel: f64, v: f64) -> Result<f64> {
    if !(rel >= 0.0 && rel < 2.0 * v) {
        return Err(Error::Domain {
            name: "V",
            value: rel,
            domain: "[0, 2v)",
        });
    }
    Ok(rel / (2.0 * v) / (4.0 * v * v - rel * rel).sqrt())
}

/// Tail of the chord length crossed inside the range disk, `sqrt(1 - x^2 / 4R^2)`.
pub fn chord_tail(x: f64, range: f64) -> Result<f64> {
    if !(0.0..=2.0 * range).contains(&x) {
        return Err(Error::Domain {
            name: "x",
            value: x,
            domain: "[0, 2R]",
        });
    }
    Ok((1.0 - x * x / (4.0 * range * range)).max(0.0).sqrt())
}

/// Upper bound `gamma(y)` on the probability that a meeting lasts at least `y / G`.
///
/// `tau > 0`: `min(pi^2 R G / (8 v y), 1)`; `tau = 0`: `min((R G)^2 / (3 (v y)^2), 1)`.
pub fn gamma_of_y(y: f64, scenario: &ScenarioParams) -> f64 {
    let (r, g, v) = (scenario.range(), scenario.rate(), scenario.speed());
    if y <= 0.0 || v <= 0.0 {
        return 1.0;
    }
    let raw = if scenario.tau() > 0.0 {
        PI * PI * r * g / (8.0 * v * y)
    } else {
        (r * g).powi(2) / (3.0 * (v * y).powi(2))
    };
    raw.min(1.0)
}

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub mass: f64,
}

/// Empirical tail against the Markov bound at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub t: f64,
    pub empirical_tail: f64,
    pub bound: f64,
    pub sigma: f64,
}

impl BoundCheck {
    pub fn holds(&self, n_sigma: f64) -> bool {
        self.empirical_tail <= self.bound + n_sigma * self.sigma
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetingStats {
    /// Complete (uncensored) contacts used for duration statistics.
    pub sample_count: usize,
    /// Contact beginnings inside the window (new-neighbor events).
    pub meeting_count: usize,
    pub histogram: Vec<HistogramBin>,
    /// Per-node new-neighbor rate, 1/s.
    pub meeting_rate: f64,
    pub mean_duration: f64,
    /// KS distance against the exact tail; only for `tau = 0`.
    pub ks_distance: Option<f64>,
    pub bound_checks: Vec<BoundCheck>,
    /// Sorted complete durations, kept for empirical tails.
    #[serde(skip)]
    pub durations: Vec<f64>,
}

impl MeetingStats {
    /// Fraction of complete contacts lasting longer than `t`.
    pub fn empirical_tail(&self, t: f64) -> f64 {
        let above = self.durations.len() - self.durations.partition_point(|&d| d <= t);
        above as f64 / self.durations.len() as f64
    }

    /// Every bin satisfies `empirical <= bound + n_sigma * sigma`.
    pub fn bound_holds(&self, n_sigma: f64) -> bool {
        self.bound_checks.iter().all(|c| c.holds(n_sigma))
    }
}

pub const MIN_MEETING_SAMPLES: usize = 100;
const HIST_BINS: usize = 50;

/// Confronts a contact stream with the closed-form meeting laws.
///
/// Only contact beginnings inside the window count as meetings; durations
/// are taken from contacts whose both ends are genuine range crossings.
pub fn empirical_meeting_stats(stream: &ContactStream, scenario: &ScenarioParams) -> Result<MeetingStats> {
    let (v, r) = (scenario.speed(), scenario.range());
    let mut durations: Vec<f64> = stream.iter().filter(|c| c.is_complete()).map(|c| c.duration).collect();
    if durations.len() < MIN_MEETING_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_MEETING_SAMPLES,
            got: durations.len(),
        });
    }
    durations.sort_by(f64::total_cmp);
    let meeting_count = stream.iter().filter(|c| !c.open_start).count();
    let meeting_rate = 2.0 * meeting_count as f64 / (scenario.n() as f64 * stream.horizon);
    let n = durations.len();
    let mean_duration = durations.iter().sum::<f64>() / n as f64;

    let width = if v > 0.0 { r / (5.0 * v) } else { 1.0 };
    let mut histogram: Vec<HistogramBin> = (0..HIST_BINS)
        .map(|k| HistogramBin {
            lo: k as f64 * width,
            hi: (k + 1) as f64 * width,
            mass: 0.0,
        })
        .collect();
    histogram.push(HistogramBin {
        lo: HIST_BINS as f64 * width,
        hi: f64::INFINITY,
        mass: 0.0,
    });
    for &d in &durations {
        let k = ((d / width) as usize).min(HIST_BINS);
        histogram[k].mass += 1.0;
    }
    for b in histogram.iter_mut() {
        b.mass /= n as f64;
    }

    let ks_distance = (scenario.tau() == 0.0 && v > 0.0)
        .then(|| ks_statistic(&durations, |t| 1.0 - meeting_duration_tail(t, v, r)));

    let mut stats = MeetingStats {
        sample_count: n,
        meeting_count,
        histogram,
        meeting_rate,
        mean_duration,
        ks_distance,
        bound_checks: Vec::new(),
        durations,
    };
    if v > 0.0 {
        stats.bound_checks = stats
            .histogram
            .iter()
            .skip(1)
            .map(|b| {
                let t = b.lo;
                let bound = meeting_duration_tail_bound(t, v, r);
                BoundCheck {
                    t,
                    empirical_tail: stats.empirical_tail(t),
                    bound,
                    sigma: (bound * (1.0 - bound) / n as f64).sqrt(),
                }
            })
            .collect();
    }
    Ok(stats)
}

/// Writes `t,pdf,tail,tail_bound,empirical_tail` on the grid `ts`.
/// The exact columns are left empty when `tau > 0`.
pub fn write_meetings_csv<W: Write>(
    ts: &[f64],
    scenario: &ScenarioParams,
    stats: Option<&MeetingStats>,
    out: W,
) -> Result<()> {
    let (v, r) = (scenario.speed(), scenario.range());
    let exact = scenario.tau() == 0.0;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "pdf", "tail", "tail_bound", "empirical_tail"])?;
    for &t in ts {
        let pdf = if exact {
            meeting_duration_pdf(t, v, r).map(|d| d.value().to_string()).unwrap_or_default()
        } else {
            String::new()
        };
        let tail = if exact {
            meeting_duration_tail(t, v, r).to_string()
        } else {
            String::new()
        };
        let emp = stats.map(|s| s.empirical_tail(t).to_string()).unwrap_or_default();
        w.write_record([
            t.to_string(),
            pdf,
            tail,
            meeting_duration_tail_bound(t, v, r).to_string(),
            emp,
        ])?;
    }
    w.flush()?;
    Ok(())
}
