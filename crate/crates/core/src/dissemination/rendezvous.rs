//! Three-stage unicast towards the point where a node leaving the source at
//! speed `v` would intercept the destination.
//!
//! Distances are in meters, so the unit-range constants become: angle window
//! `[a/2, a]` with `a = R G / (2 v y)`, approach radius `sqrt(r R)` around the
//! waypoint `B`, and delivery line within `R / 2` of the rendezvous point.
//! Relaying in stages 1 and 3 is a flood restricted to transmissions between
//! nodes whose headings differ by an angle in the window; the outcome is the
//! earliest journey that obeys the stage rules.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::contacts::{contact_stream, ContactTrace};
use crate::geometry::{angle_between, Vec2};
use crate::mobility::{Segment, Trajectory};
use crate::{Error, Result, ScenarioParams};

use super::epidemic::Label;
use super::CapacityQuery;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RendezvousSettings {
    /// Admissible capacities are `y <= k R G / v`.
    pub k: f64,
}

impl Default for RendezvousSettings {
    fn default() -> Self {
        RendezvousSettings { k: 0.5 }
    }
}

impl RendezvousSettings {
    pub fn max_capacity(&self, scenario: &ScenarioParams) -> f64 {
        self.k * scenario.range() * scenario.rate() / scenario.speed()
    }

    /// Relative-heading window `[a/2, a]`, with `a` capped at `pi/2`.
    pub fn angle_window(&self, scenario: &ScenarioParams, capacity_y: f64) -> (f64, f64) {
        let a = (scenario.range() * scenario.rate() / (2.0 * scenario.speed() * capacity_y)).min(FRAC_PI_2);
        (0.5 * a, a)
    }

    pub fn check_regime(&self, scenario: &ScenarioParams, query: &CapacityQuery) -> Result<()> {
        if scenario.tau() != 0.0 {
            return Err(Error::InvalidRegime(format!(
                "rendezvous routing needs straight-line mobility (tau = 0, got {})",
                scenario.tau()
            )));
        }
        if scenario.speed() <= 0.0 {
            return Err(Error::InvalidRegime("rendezvous routing needs moving nodes".into()));
        }
        if !(self.k > 0.0) {
            return Err(Error::Validation(format!("k must be > 0 (got {})", self.k)));
        }
        let limit = self.max_capacity(scenario);
        if query.capacity() > limit {
            return Err(Error::InvalidRegime(format!(
                "capacity {} exceeds k R G / v = {limit}",
                query.capacity()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RendezvousPlan {
    pub source_pos: Vec2,
    /// Where and when a node leaving the source at speed `v` meets the destination.
    pub rendezvous: Vec2,
    pub intercept_time: f64,
    pub r: f64,
    /// Waypoint on the destination's path, `r_b` before the rendezvous.
    pub waypoint: Vec2,
    pub r_b: f64,
    pub approach_radius: f64,
    pub angle_lo: f64,
    pub angle_hi: f64,
}

/// Locates the rendezvous point on the destination's recorded path.
///
/// `|D(t0 + t) - S| - v t` is non-increasing, so its first zero is found by
/// bisection. `None` when the destination cannot be reached before `search_end`.
pub fn plan_rendezvous(
    trajectories: &[Trajectory],
    scenario: &ScenarioParams,
    query: &CapacityQuery,
    dest: usize,
    settings: &RendezvousSettings,
    search_end: f64,
) -> Result<Option<RendezvousPlan>> {
    settings.check_regime(scenario, query)?;
    let n = trajectories.len();
    if query.source_id >= n || dest >= n {
        return Err(Error::NodeOutOfRange {
            index: query.source_id.max(dest),
            n,
        });
    }
    if dest == query.source_id {
        return Err(Error::Validation("destination equals source".into()));
    }
    let v = scenario.speed();
    let r_range = scenario.range();
    let t0 = query.emit_time;
    let s = trajectories[query.source_id].position_at(t0);
    let d = &trajectories[dest];
    let gap = |t: f64| d.position_at(t0 + t).distance(s) - v * t;
    let span = search_end - t0;
    if span < 0.0 || gap(span) > 0.0 {
        return Ok(None);
    }
    let intercept = if gap(0.0) <= 0.0 {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0, span);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gap(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi.max(1.0) {
                break;
            }
        }
        hi
    };
    let r = v * intercept;
    let r_b = (r * r_range).sqrt();
    let (angle_lo, angle_hi) = settings.angle_window(scenario, query.capacity());
    Ok(Some(RendezvousPlan {
        source_pos: s,
        rendezvous: d.position_at(t0 + intercept),
        intercept_time: t0 + intercept,
        r,
        waypoint: d.position_at((t0 + intercept - r_b / v).max(t0)),
        r_b,
        approach_radius: r_b,
        angle_lo,
        angle_hi,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JourneyOutcome {
    pub delivered: bool,
    /// Absolute time; `+inf` when not delivered.
    pub arrival_time: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub hops: usize,
    pub r: f64,
}

impl JourneyOutcome {
    fn undelivered(r: f64) -> Self {
        JourneyOutcome {
            delivered: false,
            arrival_time: f64::INFINITY,
            t1: f64::NAN,
            t2: f64::NAN,
            t3: f64::NAN,
            hops: 0,
            r,
        }
    }
}

/// First time in `[t_from, min(seg.end, until)]` at which the segment is
/// within `radius` of `center`.
fn disk_entry(seg: &Segment, t_from: f64, until: f64, center: Vec2, radius: f64) -> Option<f64> {
    let end = seg.end.min(until);
    if t_from > end {
        return None;
    }
    let d0 = seg.position_at(t_from) - center;
    let c = d0.norm_sq() - radius * radius;
    if c <= 0.0 {
        return Some(t_from);
    }
    let a = seg.velocity.norm_sq();
    let b = 2.0 * d0.dot(seg.velocity);
    if a == 0.0 || b >= 0.0 {
        return None;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    // smaller root, written to avoid cancellation
    let s = 2.0 * c / (-b + disc.sqrt());
    (t_from + s <= end).then_some(t_from + s)
}

/// First `(time on segment, entry time)` at which the node's path from `t`
/// comes within `radius` of `center`.
fn first_approach(traj: &Trajectory, t: f64, until: f64, center: Vec2, radius: f64) -> Option<(f64, f64)> {
    let first = traj.segment_index(t);
    traj.segments[first..]
        .iter()
        .take_while(|s| s.start <= until)
        .find_map(|seg| {
            let from = t.max(seg.start);
            disk_entry(seg, from, until, center, radius).map(|e| (from, e))
        })
}

#[derive(Debug, Clone, Copy)]
struct StageThree {
    stage1_end: f64,
    stage2_end: f64,
    hops: usize,
}

/// Routes one bundle from `query.source_id` to `dest` on a recorded trace.
pub fn route_rendezvous(
    trace: &ContactTrace,
    query: &CapacityQuery,
    dest: usize,
    settings: &RendezvousSettings,
) -> Result<JourneyOutcome> {
    let scenario = &trace.scenario;
    let Some(plan) = plan_rendezvous(&trace.trajectories, scenario, query, dest, settings, trace.horizon)? else {
        return Ok(JourneyOutcome::undelivered(f64::NAN));
    };
    let n = trace.n();
    let horizon = trace.horizon;
    let theta = query.thickness();
    let trajs = &trace.trajectories;
    let incidence = trace.stream.incidence(n);
    let in_window = |u: usize, w: usize, t: f64| {
        let rel = angle_between(trajs[u].heading_at(t), trajs[w].heading_at(t));
        rel >= plan.angle_lo && rel <= plan.angle_hi
    };

    // state u for stage 1, n + u for stage 3
    let mut time = vec![f64::INFINITY; 2 * n];
    let mut hops1 = vec![0usize; n];
    let mut meta3: Vec<Option<StageThree>> = vec![None; n];
    let mut settled = vec![false; 2 * n];
    let mut heap = BinaryHeap::new();
    time[query.source_id] = query.emit_time;
    heap.push(Reverse(Label(query.emit_time, query.source_id)));
    let mut best: Option<(f64, StageThree)> = None;

    while let Some(Reverse(Label(t, state))) = heap.pop() {
        if settled[state] {
            continue;
        }
        if best.is_some_and(|(arr, _)| t >= arr) {
            break;
        }
        settled[state] = true;
        let stage3 = state >= n;
        let u = state % n;

        if !stage3 {
            if let Some((from, entry)) = first_approach(&trajs[u], t, horizon, plan.waypoint, plan.approach_radius) {
                if entry < time[n + u] {
                    time[n + u] = entry;
                    meta3[u] = Some(StageThree {
                        stage1_end: from,
                        stage2_end: entry,
                        hops: hops1[u],
                    });
                    heap.push(Reverse(Label(entry, n + u)));
                }
            }
        } else {
            let meta = meta3[u].expect("stage-three state has metadata");
            let radius = 0.5 * scenario.range();
            if let Some((final_from, _)) = first_approach(&trajs[u], t, horizon, plan.rendezvous, radius) {
                for &idx in &incidence[u] {
                    let c = &trace.stream.contacts[idx];
                    if c.other(u) != dest {
                        continue;
                    }
                    let recv = c.t_begin.max(final_from) + theta;
                    if recv <= c.t_end && recv <= horizon && best.is_none_or(|(arr, _)| recv < arr) {
                        best = Some((
                            recv,
                            StageThree {
                                hops: meta.hops + 1,
                                ..meta
                            },
                        ));
                    }
                }
            }
        }

        for &idx in &incidence[u] {
            let c = &trace.stream.contacts[idx];
            let w = c.other(u);
            if w == dest || c.t_end < t + theta {
                continue;
            }
            let start = c.t_begin.max(t);
            let recv = start + theta;
            let target = if stage3 { n + w } else { w };
            if settled[target] || recv > c.t_end || recv > horizon || recv >= time[target] || !in_window(u, w, start) {
                continue;
            }
            time[target] = recv;
            if stage3 {
                let meta = meta3[u].expect("stage-three state has metadata");
                meta3[w] = Some(StageThree {
                    hops: meta.hops + 1,
                    ..meta
                });
            } else {
                hops1[w] = hops1[u] + 1;
            }
            heap.push(Reverse(Label(recv, target)));
        }
    }

    Ok(match best {
        None => JourneyOutcome::undelivered(plan.r),
        Some((arrival, meta)) => JourneyOutcome {
            delivered: true,
            arrival_time: arrival,
            t1: meta.stage1_end - query.emit_time,
            t2: meta.stage2_end - meta.stage1_end,
            t3: arrival - meta.stage2_end,
            hops: meta.hops,
            r: plan.r,
        },
    })
}

/// Simulates a fresh replication and routes one bundle on it.
pub fn run_rendezvous(
    scenario: &ScenarioParams,
    query: &CapacityQuery,
    dest: usize,
    settings: &RendezvousSettings,
    seed: u64,
    replication: u32,
    horizon: f64,
) -> Result<JourneyOutcome> {
    settings.check_regime(scenario, query)?;
    let trace = contact_stream(scenario, horizon, seed, replication);
    route_rendezvous(&trace, query, dest, settings)
}

/// Durations of complete contacts whose relative heading at the start lies in `[lo, hi]`.
pub fn window_meeting_durations(trace: &ContactTrace, lo: f64, hi: f64) -> Vec<f64> {
    trace
        .stream
        .iter()
        .filter(|c| c.is_complete())
        .filter(|c| {
            let rel = angle_between(trace.heading(c.node_a, c.t_begin), trace.heading(c.node_b, c.t_begin));
            rel >= lo && rel <= hi
        })
        .map(|c| c.duration)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JourneyRecord {
    pub seed: u64,
    pub outcome: JourneyOutcome,
}

/// Writes `seed,delivered,r,arrival_time,t1,t2,t3,hops`.
pub fn write_journeys_csv<W: Write>(records: &[JourneyRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "delivered", "r", "arrival_time", "t1", "t2", "t3", "hops"])?;
    for rec in records {
        let o = &rec.outcome;
        w.write_record([
            rec.seed.to_string(),
            o.delivered.to_string(),
            o.r.to_string(),
            o.arrival_time.to_string(),
            o.t1.to_string(),
            o.t2.to_string(),
            o.t3.to_string(),
            o.hops.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contacts::contacts_from_fleet;
    use crate::mobility::{EventKind, Fleet, NodeState};

    fn state(id: usize, x: f64, y: f64, heading: f64, speed: f64) -> NodeState {
        NodeState {
            node_id: id,
            pos: Vec2::new(x, y),
            heading,
            speed,
            anchor_time: 0.0,
            next_event_time: f64::INFINITY,
            next_event_kind: EventKind::Idle,
        }
    }

    fn scenario() -> ScenarioParams {
        ScenarioParams::new(3, 1000.0, 10.0, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn colocated_destination_is_served_at_once() {
        let s = scenario();
        let states = vec![state(0, 500.0, 500.0, 0.0, 1.0), state(1, 500.0, 500.0, 0.0, 1.0), state(2, 100.0, 100.0, 1.0, 1.0)];
        let trace = contacts_from_fleet(&s, Fleet::from_states(&s, states, 1, 0), 50.0);
        let q = CapacityQuery::new(0.5, 1.0, 0, 0.0).unwrap();
        let out = route_rendezvous(&trace, &q, 1, &RendezvousSettings::default()).unwrap();
        assert!(out.delivered);
        assert_eq!(out.r, 0.0);
        assert!((out.arrival_time - 0.5).abs() < 1e-12);
        assert_eq!(out.t1, 0.0);
        assert_eq!(out.t2, 0.0);
        assert_eq!(out.hops, 1);
    }

    #[test]
    fn interception_geometry() {
        // destination heading up-left from (600, 400); source at (400, 400)
        let s = scenario();
        let heading = 2.0 * std::f64::consts::PI / 3.0;
        let states = vec![state(0, 400.0, 400.0, 0.0, 1.0), state(1, 600.0, 400.0, heading, 1.0), state(2, 0.0, 0.0, 0.0, 1.0)];
        let mut fleet = Fleet::from_states(&s, states, 1, 0);
        fleet.extend_to(500.0);
        let q = CapacityQuery::new(0.5, 1.0, 0, 0.0).unwrap();
        let plan = plan_rendezvous(fleet.trajectories(), &s, &q, 1, &RendezvousSettings::default(), 500.0)
            .unwrap()
            .unwrap();
        assert!((plan.r - 200.0).abs() < 1e-6);
        assert!(plan.rendezvous.distance(Vec2::new(500.0, 400.0 + 100.0 * 3f64.sqrt())) < 1e-6);
        let a = plan.rendezvous;
        assert!((a.distance(Vec2::new(400.0, 400.0)) - plan.r).abs() < 1e-6);
        assert!((a.distance(Vec2::new(600.0, 400.0)) - plan.r).abs() < 1e-6);
        assert!((plan.r_b - (plan.r * 10.0).sqrt()).abs() < 1e-9);
        assert!((plan.waypoint.distance(a) - plan.r_b).abs() < 1e-6);
    }

    #[test]
    fn regime_errors() {
        let s = scenario();
        let settings = RendezvousSettings::default();
        let too_big = CapacityQuery::new(5.1, 1.0, 0, 0.0).unwrap();
        assert!(matches!(settings.check_regime(&s, &too_big), Err(Error::InvalidRegime(_))));
        let ok = CapacityQuery::new(5.0, 1.0, 0, 0.0).unwrap();
        settings.check_regime(&s, &ok).unwrap();
        let walk = s.with_tau(0.1).unwrap();
        assert!(matches!(settings.check_regime(&walk, &ok), Err(Error::InvalidRegime(_))));
    }

    #[test]
    fn angle_window_scaling() {
        let s = ScenarioParams::new(5000, 2000.0, 10.0, 1.0, 5.0, 0.0).unwrap();
        let (lo, hi) = RendezvousSettings { k: 1.0 }.angle_window(&s, 2.0);
        assert_eq!((lo, hi), (0.25, 0.5));
        let (_, hi) = RendezvousSettings::default().angle_window(&s, 0.1);
        assert_eq!(hi, FRAC_PI_2);
    }

    #[test]
    fn disk_entry_cases() {
        let seg = Segment {
            start: 0.0,
            end: 100.0,
            origin: Vec2::new(0.0, 0.0),
            heading: 0.0,
            velocity: Vec2::new(1.0, 0.0),
        };
        let e = disk_entry(&seg, 0.0, 100.0, Vec2::new(50.0, 3.0), 5.0).unwrap();
        assert!((e - 46.0).abs() < 1e-12);
        assert!(disk_entry(&seg, 0.0, 100.0, Vec2::new(50.0, 6.0), 5.0).is_none());
        assert!(disk_entry(&seg, 60.0, 100.0, Vec2::new(50.0, 3.0), 5.0).is_none());
        assert!(disk_entry(&seg, 0.0, 40.0, Vec2::new(50.0, 3.0), 5.0).is_none());
        assert_eq!(disk_entry(&seg, 48.0, 100.0, Vec2::new(50.0, 3.0), 5.0), Some(48.0));
    }
}
