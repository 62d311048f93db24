//! One-dimensional global minimization: log-spaced grid scan, then golden section.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search on `[lo, hi]` until the bracket is narrower than
/// `rel_width` times its midpoint. Returns `(argmin, min)`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, rel_width: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..500 {
        if hi - lo <= rel_width * 0.5 * (hi + lo).abs() {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Scans `points` log-spaced abscissae on `[lo, hi]` (both > 0) and refines
/// around the best one. Non-finite evaluations are skipped.
pub fn minimize_log_grid<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points: usize, rel_width: f64) -> Option<(f64, f64)> {
    assert!(lo > 0.0 && hi > lo && points >= 3);
    let step = (hi / lo).ln() / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|i| lo * (step * i as f64).exp()).collect();
    let (best, _) = grid
        .iter()
        .enumerate()
        .map(|(i, &x)| (i, f(x)))
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(points - 1)];
    let (x, v) = golden_section(&f, a, b, rel_width);
    let at_grid = f(grid[best]);
    Some(if at_grid < v { (grid[best], at_grid) } else { (x, v) })
}
