//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::panic;
use std::process::ExitCode;
use std::time::Instant;

use dtncap::bounds::{critical_capacity, min_i0_over_rho, upper_bound_speed, bessel_i0, bessel_i1, BoundQuery};
use dtncap::contacts::{brute_force_contacts, contact_stream};
use dtncap::dissemination::{run_epidemic, verify_journeys, window_meeting_durations, CapacityQuery, RendezvousSettings};
use dtncap::harness::{node_nearest_center, rendezvous_batch, run_experiment, sweep_rows, ExperimentSpec, RendezvousBatch, SweepRow};
use dtncap::meetings::{empirical_meeting_stats, mean_meeting_duration, meeting_rate_total, MeetingStats};
use dtncap::ScenarioParams;

mod common;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn reference(tau: f64) -> ScenarioParams {
    ScenarioParams::new(500, 600.0, 10.0, 1.0, 5.0, tau).unwrap()
}

fn meeting_stats(tau: f64) -> MeetingStats {
    let s = reference(tau);
    let trace = contact_stream(&s, 2500.0, 1, 0);
    empirical_meeting_stats(&trace.stream, &s).unwrap()
}

fn criterion_1(stats: &MeetingStats) -> Verdict {
    let ks = stats.ks_distance.unwrap_or(f64::NAN);
    verdict(
        stats.sample_count >= 100_000 && ks < 0.01,
        format!("{} durations, KS distance {ks:.5} (< 0.01)", stats.sample_count),
    )
}

fn criterion_2(stats: &MeetingStats) -> Verdict {
    let s = reference(0.0);
    let rate = meeting_rate_total(s.speed(), s.density(), s.range());
    let mean = mean_meeting_duration(s.speed(), s.range());
    let rate_err = (stats.meeting_rate - rate).abs() / rate;
    let mean_err = (stats.mean_duration - mean).abs() / mean;
    verdict(
        rate_err <= 0.03 && mean_err <= 0.03,
        format!(
            "rate {:.5} vs {rate:.5} ({:.2}%), mean duration {:.4} vs {mean:.4} ({:.2}%)",
            stats.meeting_rate,
            100.0 * rate_err,
            stats.mean_duration,
            100.0 * mean_err
        ),
    )
}

fn criterion_3(stats: &MeetingStats) -> Verdict {
    let worst = stats
        .bound_checks
        .iter()
        .map(|b| (b.empirical_tail - b.bound) / b.sigma.max(f64::MIN_POSITIVE))
        .fold(f64::NEG_INFINITY, f64::max);
    verdict(
        stats.bound_holds(3.0),
        format!("{} bins, worst excess {worst:.2} sigma (<= 3)", stats.bound_checks.len()),
    )
}

fn sweep(tau: f64) -> (ExperimentSpec, Vec<SweepRow>, dtncap::harness::ExperimentBundle) {
    let spec = ExperimentSpec::new(reference(tau), vec![1.0, 2.0, 3.0], 50.0, 250.0, 10, 1);
    let bundle = run_experiment(&spec).unwrap();
    let rows = sweep_rows(&bundle).unwrap();
    (spec, rows, bundle)
}

fn criterion_4(sweeps: &[(f64, Vec<SweepRow>)]) -> Verdict {
    let v = 5.0;
    let mut pass = true;
    let mut parts = Vec::new();
    for (tau, rows) in sweeps {
        for r in rows {
            let e = &r.estimate;
            let upper_ok = e.speed_slope <= 1.05 * r.speed_upper_bound && e.speed_frontier <= 1.05 * r.speed_upper_bound;
            let lower_ok = *tau != 0.0 || e.capacity_y > 2.0 || (e.speed_slope >= 0.8 * v && e.speed_slope <= r.speed_upper_bound);
            pass &= upper_ok && lower_ok;
            parts.push(format!(
                "tau {tau} y {}: slope {:.3} frontier {:.3} bound {:.3}{}",
                e.capacity_y,
                e.speed_slope,
                e.speed_frontier,
                r.speed_upper_bound,
                if upper_ok && lower_ok { "" } else { " !" }
            ));
        }
    }
    verdict(pass, parts.join("; "))
}

fn criterion_5(rows: &[SweepRow]) -> Verdict {
    let v = 5.0;
    let mut pass = true;
    let mut parts = Vec::new();
    for r in rows.iter().filter(|r| r.estimate.capacity_y <= 2.0) {
        let y = r.estimate.capacity_y;
        let err = (r.capacity_product - v * y).abs() / (v * y);
        pass &= err <= 0.2;
        parts.push(format!("y {y}: c {:.3} vs {:.1} ({:.1}%)", r.capacity_product, v * y, 100.0 * err));
    }
    verdict(pass, parts.join("; "))
}

fn series_i(order: u32, x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = if order == 0 { 1.0 } else { half };
    let mut sum = term;
    for k in 1..200 {
        term *= half * half / (k as f64 * (k + order) as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

fn criterion_6() -> Verdict {
    let mut parts = Vec::new();

    // (a)
    let mut worst: f64 = 0.0;
    for i in 0..=2000 {
        let x = i as f64 * 0.01;
        worst = worst.max(((bessel_i0(x) - series_i(0, x)) / series_i(0, x)).abs());
        if x > 0.0 {
            worst = worst.max(((bessel_i1(x) - series_i(1, x)) / series_i(1, x)).abs());
        }
    }
    let a = worst <= 1e-10;
    parts.push(format!("(a) {} max rel err {worst:.2e}", ok(a)));

    // (b)
    let (rho, _) = min_i0_over_rho();
    let b = (rho - 1.608).abs() <= 0.005;
    parts.push(format!("(b) {} argmin {rho:.5}", ok(b)));

    // (c)
    let mut c = true;
    let mut flips = Vec::new();
    for tau in [0.0, 0.05] {
        let s = ScenarioParams::new(2000, 600.0, 10.0, 1.0, 5.0, tau).unwrap();
        let finite = |y: f64| upper_bound_speed(&BoundQuery::new(s, y).unwrap()).finite;
        let (mut lo, mut hi) = (1e-3, 1e3);
        c &= !finite(lo) && finite(hi);
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if finite(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let q = BoundQuery::new(s, hi).unwrap();
        let threshold = PI * s.density() * s.range().powi(2) * q.gamma();
        let yc = critical_capacity(&s);
        c &= (threshold - 1.0).abs() <= 1e-9 && (hi - yc).abs() <= 1e-9 * yc && !finite(yc * (1.0 - 1e-9)) && finite(yc * (1.0 + 1e-9));
        flips.push(format!("tau {tau}: y_c {hi:.9}, pi nu R^2 gamma {threshold:.12}"));
    }
    parts.push(format!("(c) {} {}", ok(c), flips.join(", ")));

    // (d)
    let s = reference(0.05);
    let degree = s.mean_degree();
    let y0 = PI * PI * s.range() * s.rate() / (8.0 * s.speed() * 0.1 / degree);
    let mut d = true;
    let mut ratios = Vec::new();
    for m in [1.0, 2.0, 5.0, 10.0, 100.0, 1000.0] {
        let y = y0 * m;
        let su = upper_bound_speed(&BoundQuery::new(s, y).unwrap()).speed_upper;
        let pred = PI * s.speed() * s.range() * (s.density() * s.rate() / (y * s.tau())).sqrt();
        let ratio = su / pred;
        d &= (ratio - 1.0).abs() <= 0.1;
        ratios.push(format!("y {y:.1}: {ratio:.3}"));
    }
    parts.push(format!("(d) {} s_U / asymptote {}", ok(d), ratios.join(", ")));

    // (e)
    let s = reference(0.0);
    let y1 = s.range() * s.rate() / (s.speed() * (3.0f64 * 0.01).sqrt());
    let mut e = true;
    let mut worst_e: f64 = 0.0;
    for m in [1.0, 1.5, 3.0, 10.0, 100.0] {
        let su = upper_bound_speed(&BoundQuery::new(s, y1 * m).unwrap()).speed_upper;
        let err = (su - s.speed()) / s.speed();
        e &= err.abs() <= 0.05;
        worst_e = worst_e.max(err.abs());
    }
    parts.push(format!("(e) {} worst rel gap to v {worst_e:.4}", ok(e)));

    // (f)
    let mut f = true;
    for tau in [0.0, 0.05] {
        let s = reference(tau);
        let speeds: Vec<f64> =
            (1..=20).map(|i| upper_bound_speed(&BoundQuery::new(s, 0.25 * i as f64).unwrap()).speed_upper).collect();
        f &= speeds.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    }
    parts.push(format!("(f) {}", ok(f)));

    verdict(a && b && c && d && e && f, parts.join("; "))
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAILED"
    }
}

fn criterion_7(bundles: &[&dtncap::harness::ExperimentBundle]) -> Verdict {
    let mut verified = 0;
    let mut pass = true;
    for bundle in bundles {
        let spec = &bundle.spec;
        for rep in 0..spec.replications {
            let trace = contact_stream(&spec.scenario, spec.horizon, spec.seed, rep as u32);
            for run in bundle.runs.iter().filter(|r| r.replication == rep) {
                pass &= verify_journeys(&run.log, &trace.stream, &run.log.query).is_ok();
                verified += 1;
            }
        }
    }

    let mut small_cases = 0;
    for seed in 0..20u64 {
        let n = 6 + (seed as usize % 15);
        let s = ScenarioParams::new(n, 80.0, 10.0, 1.0, 4.0, if seed % 2 == 0 { 0.0 } else { 0.2 }).unwrap();
        let horizon = 60.0;
        let trace = contact_stream(&s, horizon, seed, 0);
        let oracle = brute_force_contacts(&trace.trajectories, s.range(), horizon);
        pass &= trace.stream.len() == oracle.len()
            && trace.stream.iter().zip(oracle.iter()).all(|(a, b)| {
                a.node_a == b.node_a
                    && a.node_b == b.node_b
                    && (a.t_begin - b.t_begin).abs() <= 1e-9 * b.t_begin.max(1.0)
                    && (a.t_end - b.t_end).abs() <= 1e-9 * b.t_end.max(1.0)
            });
        let source = node_nearest_center(&trace.trajectories, s.side(), 0.0);
        for y in [0.5, 1.0, 2.0] {
            let q = CapacityQuery::for_scenario(&s, y, source, 0.0).unwrap();
            let log = run_epidemic(&trace.stream, n, &q, horizon).unwrap();
            let want = if trace.stream.len() <= 14 {
                common::exhaustive(&trace.stream, n, source, 0.0, y)
            } else {
                common::fixed_point(&trace.stream, n, source, 0.0, y)
            };
            let got_set: Vec<bool> = log.informed_time.iter().map(|t| t.is_finite()).collect();
            let want_set: Vec<bool> = want.iter().map(|t| t.is_finite()).collect();
            pass &= got_set == want_set && verify_journeys(&log, &trace.stream, &q).is_ok();
            small_cases += 1;
        }
        let q = CapacityQuery::for_scenario(&s, 1e-12, source, 0.0).unwrap();
        let log = run_epidemic(&trace.stream, n, &q, horizon).unwrap();
        let got: Vec<bool> = log.informed_time.iter().map(|t| t.is_finite()).collect();
        pass &= got == common::reachable(&trace.stream, n, source, 0.0);
    }
    verdict(
        pass,
        format!("{verified} simulated broadcasts verified; {small_cases} small-network cases against oracles"),
    )
}

fn criterion_8() -> Verdict {
    let s = ScenarioParams::new(5000, 2000.0, 10.0, 1.0, 5.0, 0.0).unwrap();
    let y = 1.0;
    let mut batch = RendezvousBatch::new(s, y, 100, 1, 500.0);
    batch.settings = RendezvousSettings::default();
    let records = rendezvous_batch(&batch).unwrap();
    let mut ratios: Vec<f64> = records
        .iter()
        .filter(|r| r.outcome.delivered)
        .map(|r| r.outcome.arrival_time / (r.outcome.r / s.speed()))
        .collect();
    ratios.sort_by(f64::total_cmp);
    let delivered = ratios.len();
    let median = if delivered == 0 {
        f64::NAN
    } else if delivered % 2 == 1 {
        ratios[delivered / 2]
    } else {
        0.5 * (ratios[delivered / 2 - 1] + ratios[delivered / 2])
    };
    let routed = delivered > 0 && median <= 1.3;

    let trace = contact_stream(&s, 300.0, 7, 0);
    let floor = 15f64.sqrt() / 4.0 - 0.05;
    let mut window_ok = true;
    let mut fractions = Vec::new();
    for wy in [1.0, 2.0] {
        let (lo, hi) = RendezvousSettings { k: 1.0 }.angle_window(&s, wy);
        let durations = window_meeting_durations(&trace, lo, hi);
        let long = durations.iter().filter(|&&d| d >= wy / s.rate()).count();
        let frac = long as f64 / durations.len().max(1) as f64;
        window_ok &= !durations.is_empty() && frac >= floor;
        fractions.push(format!("y {wy}: {long}/{} = {frac:.3}", durations.len()));
    }
    verdict(
        routed && window_ok,
        format!(
            "y {y}: {delivered}/100 delivered, median arrival/(r/v) {median:.3} (<= 1.3); window P(T >= y/G) {} (>= {floor:.3})",
            fractions.join(", ")
        ),
    )
}

fn run(name: &str, f: impl FnOnce() -> Verdict + panic::UnwindSafe) -> bool {
    let start = Instant::now();
    let v = panic::catch_unwind(f).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        verdict(false, format!("panicked: {msg}"))
    });
    println!(
        "{} criterion {name}: {} [{:.1}s]",
        if v.pass { "PASS" } else { "FAIL" },
        v.detail,
        start.elapsed().as_secs_f64()
    );
    v.pass
}

fn main() -> ExitCode {
    let setup = Instant::now();
    let billiard = meeting_stats(0.0);
    let walk = meeting_stats(0.05);
    let (_, rows0, bundle0) = sweep(0.0);
    let (_, rows5, bundle5) = sweep(0.05);
    println!("shared traces and sweeps built in {:.1}s", setup.elapsed().as_secs_f64());

    let results = [
        run("1 meeting-duration law", || criterion_1(&billiard)),
        run("2 meeting rate and mean duration", || criterion_2(&billiard)),
        run("3 duration tail bound", || criterion_3(&walk)),
        run("4 measured speed vs bound", || criterion_4(&[(0.0, rows0.clone()), (0.05, rows5.clone())])),
        run("5 space-time capacity", || criterion_5(&rows0)),
        run("6 bounds engine", criterion_6),
        run("7 dissemination correctness", || criterion_7(&[&bundle0, &bundle5])),
        run("8 rendezvous routing", criterion_8),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
