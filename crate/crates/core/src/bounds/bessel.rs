//! Modified Bessel functions of the first kind, orders 0 and 1.
//!
//! Power series up to `x = 15`, Hankel asymptotic expansion above.

use std::f64::consts::PI;

const SERIES_LIMIT: f64 = 15.0;

/// Value with an overflow marker; `value` is `+inf` when `overflow` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselValue {
    pub value: f64,
    pub overflow: bool,
}

fn series(order: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = if order == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + order as f64));
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
        k += 1.0;
    }
    sum
}

/// `sum_k (-1)^k a_k(order) / x^k` with `a_k = prod (mu - (2j-1)^2) / (k! 8^k)`.
fn hankel_sum(order: u32, x: f64) -> f64 {
    let mu = 4.0 * (order * order) as f64;
    let mut term = 1.0f64;
    let mut sum = 1.0;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn evaluate(order: u32, x: f64) -> BesselValue {
    let ax = x.abs();
    let sign = if order == 1 && x < 0.0 { -1.0 } else { 1.0 };
    if ax <= SERIES_LIMIT {
        return BesselValue {
            value: sign * series(order, ax),
            overflow: false,
        };
    }
    // e^x split in halves so the prefactor survives until the product overflows
    let half = (0.5 * ax).exp();
    let value = half * (hankel_sum(order, ax) / (2.0 * PI * ax).sqrt()) * half;
    BesselValue {
        value: sign * value,
        overflow: value.is_infinite(),
    }
}

pub fn bessel_i0_checked(x: f64) -> BesselValue {
    evaluate(0, x)
}

pub fn bessel_i1_checked(x: f64) -> BesselValue {
    evaluate(1, x)
}

/// `I0(x)`; `+inf` past the representable range.
pub fn bessel_i0(x: f64) -> f64 {
    evaluate(0, x).value
}

/// `I1(x)`; odd in `x`.
pub fn bessel_i1(x: f64) -> f64 {
    evaluate(1, x).value
}
