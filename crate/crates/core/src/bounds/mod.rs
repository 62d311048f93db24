//! Upper bound on the information propagation speed of capacity-`y` journeys.
//!
//! For `rho > 0` the kernel is
//!
//! ```text
//! theta(rho) = sqrt(rho^2 v^2 + (tau + gamma 4 pi v nu R I0(rho R) / D(rho))^2) - tau
//! D(rho)     = 1 - gamma pi nu R I1(rho R) / (2 rho)
//! ```
//!
//! and the bound is the smallest `theta / rho` over `0 < rho < rho_c`, where
//! `rho_c` is the root of `D`. When `pi nu R^2 gamma >= 1` the bound is
//! infinite. Everything is evaluated in SI units.
//!
//! The large-`y` random-walk estimate `pi v R sqrt(nu G / (y tau))` comes from
//! the `R = G = 1` expression `pi v sqrt(nu / (y tau))` with its minimizer
//! `rho = (pi / v) sqrt(nu tau / y)`; the SI minimizer is
//! `(pi R / v) sqrt(nu tau G / y)`.

pub mod bessel;
pub mod minimize;

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use bessel::{bessel_i0, bessel_i0_checked, bessel_i1, bessel_i1_checked, BesselValue};

use crate::meetings::gamma_of_y;
use crate::{Error, Result, ScenarioParams};

const GRID_POINTS: usize = 512;
const REL_WIDTH: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub scenario: ScenarioParams,
    pub capacity_y: f64,
}

impl BoundQuery {
    pub fn new(scenario: ScenarioParams, capacity_y: f64) -> Result<Self> {
        if !(capacity_y.is_finite() && capacity_y > 0.0) {
            return Err(Error::Validation(format!("capacity must be finite and > 0 (got {capacity_y})")));
        }
        Ok(BoundQuery { scenario, capacity_y })
    }

    pub fn gamma(&self) -> f64 {
        gamma_of_y(self.capacity_y, &self.scenario)
    }

    /// `pi nu R^2 gamma(y)`; the bound is finite strictly below 1.
    pub fn thinned_degree(&self) -> f64 {
        self.scenario.mean_degree() * self.gamma()
    }

    fn kernel_denominator(&self, rho: f64) -> f64 {
        let s = &self.scenario;
        1.0 - self.gamma() * PI * s.density() * s.range() / (2.0 * rho) * bessel_i1(rho * s.range())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub capacity_y: f64,
    pub gamma: f64,
    /// 1/m; NaN when the bound is infinite.
    pub rho_star: f64,
    /// 1/s; NaN when the bound is infinite.
    pub theta_star: f64,
    pub speed_upper: f64,
    pub finite: bool,
    pub capacity_product: f64,
}

/// `theta(rho)` for the query, or [`Error::KernelDomain`] where the denominator is not positive.
pub fn theta_of_rho(rho: f64, query: &BoundQuery) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Domain {
            name: "rho",
            value: rho,
            domain: "(0, inf)",
        });
    }
    let s = &query.scenario;
    let denominator = query.kernel_denominator(rho);
    if !(denominator > 0.0) {
        return Err(Error::KernelDomain { rho, denominator });
    }
    let (v, tau) = (s.speed(), s.tau());
    let excess = query.gamma() * 4.0 * PI * v * s.density() * s.range() * bessel_i0(rho * s.range()) / denominator;
    let a2 = rho * rho * v * v;
    // sqrt(a^2 + (tau + c)^2) - tau without cancellation for large tau
    let num = a2 + excess * (2.0 * tau + excess);
    let root = (a2 + (tau + excess).powi(2)).sqrt();
    Ok(num / (root + tau))
}

/// Root `rho_c` of the kernel denominator, found by bisection.
pub fn denominator_root(query: &BoundQuery) -> f64 {
    let r = query.scenario.range();
    let mut lo = 1e-9 / r;
    let mut hi = 1.0 / r;
    while query.kernel_denominator(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 / r {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if query.kernel_denominator(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    lo
}

/// Minimizes `theta(rho) / rho` over `(0, rho_c)`.
pub fn upper_bound_speed(query: &BoundQuery) -> BoundResult {
    let gamma = query.gamma();
    let y = query.capacity_y;
    if query.thinned_degree() >= 1.0 {
        return BoundResult {
            capacity_y: y,
            gamma,
            rho_star: f64::NAN,
            theta_star: f64::NAN,
            speed_upper: f64::INFINITY,
            finite: false,
            capacity_product: f64::INFINITY,
        };
    }
    let r = query.scenario.range();
    let rho_c = denominator_root(query);
    let lo = 1e-6 / r;
    let hi = if rho_c.is_finite() { rho_c * (1.0 - 1e-6) } else { 1e3 / r };
    let ratio = |rho: f64| theta_of_rho(rho, query).map(|t| t / rho).unwrap_or(f64::INFINITY);
    let (rho_star, speed) = minimize::minimize_log_grid(ratio, lo, hi, GRID_POINTS, REL_WIDTH)
        .expect("kernel is finite near rho = 0");
    let theta_star = theta_of_rho(rho_star, query).expect("minimizer lies inside the kernel domain");
    BoundResult {
        capacity_y: y,
        gamma,
        rho_star,
        theta_star,
        speed_upper: speed,
        finite: true,
        capacity_product: speed * y,
    }
}

/// Capacity `y_c` at which `pi nu R^2 gamma(y) = 1`; the bound is infinite
/// for `y <= y_c`. Zero when the bound is finite for every `y`.
pub fn critical_capacity(scenario: &ScenarioParams) -> f64 {
    let degree = scenario.mean_degree();
    if degree < 1.0 {
        return 0.0;
    }
    let (r, g, v) = (scenario.range(), scenario.rate(), scenario.speed());
    if v == 0.0 {
        return f64::INFINITY;
    }
    if scenario.tau() > 0.0 {
        PI.powi(3) * scenario.density() * r.powi(3) * g / (8.0 * v)
    } else {
        r * g * (degree / 3.0).sqrt() / v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    RandomWalk,
    Billiard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSpeed {
    pub value: f64,
    pub regime: Regime,
    /// Predicted minimizer, 1/m; only for the random-walk regime.
    pub rho_predicted: Option<f64>,
}

/// Leading-order large-`y` speed: `pi v R sqrt(nu G / (y tau))` for `tau > 0`, `v` for `tau = 0`.
pub fn asymptotic_speed(query: &BoundQuery) -> AsymptoticSpeed {
    let s = &query.scenario;
    let (v, r, g, nu, tau, y) = (s.speed(), s.range(), s.rate(), s.density(), s.tau(), query.capacity_y);
    if tau > 0.0 {
        AsymptoticSpeed {
            value: PI * v * r * (nu * g / (y * tau)).sqrt(),
            regime: Regime::RandomWalk,
            rho_predicted: (v > 0.0).then(|| PI * r / v * (nu * tau * g / y).sqrt()),
        }
    } else {
        AsymptoticSpeed {
            value: v,
            regime: Regime::Billiard,
            rho_predicted: None,
        }
    }
}

/// Minimizer and minimum of `I0(x) / x` over `x > 0`.
pub fn min_i0_over_rho() -> (f64, f64) {
    minimize::minimize_log_grid(|x| bessel_i0(x) / x, 1e-2, 20.0, GRID_POINTS, REL_WIDTH).expect("finite on the grid")
}

/// Writes `y,gamma,rho_star,theta_star,speed_upper,finite,capacity_product`.
pub fn write_bounds_csv<W: Write>(results: &[BoundResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["y", "gamma", "rho_star", "theta_star", "speed_upper", "finite", "capacity_product"])?;
    for b in results {
        w.write_record([
            b.capacity_y.to_string(),
            b.gamma.to_string(),
            b.rho_star.to_string(),
            b.theta_star.to_string(),
            b.speed_upper.to_string(),
            b.finite.to_string(),
            b.capacity_product.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
