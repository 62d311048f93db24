//! Piecewise-linear node trajectories in the `[0, L]^2` square.
//!
//! Nodes start uniformly at random with uniform headings, move at constant
//! speed `v`, pick a fresh uniform heading at Poisson rate `tau`, and reflect
//! specularly on the walls. With `tau = 0` this is the pure billiard model;
//! `tau = O(1/L)` gives the random way-point-like regime (nodes cover a
//! domain-scale distance between turns), which is reached by choosing `tau`
//! rather than through a separate waypoint model.
//!
//! Trajectories are produced lazily by [`NodeMotion`], one kinematic event at
//! a time. Time-to-border is solved in closed form; there is no time stepping.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_angle, Vec2};
use crate::rng::{Purpose, RandomStream};
use crate::{Error, Result, ScenarioParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    BorderHit,
    DirectionChange,
    /// No further event (the node is not moving).
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Wall {
    /// `x = 0`
    Left,
    /// `x = L`
    Right,
    /// `y = 0`
    Bottom,
    /// `y = L`
    Top,
}

impl Wall {
    fn is_vertical(self) -> bool {
        matches!(self, Wall::Left | Wall::Right)
    }
}

/// Mirror reflection of a heading on a wall: vertical walls negate the x
/// velocity component, horizontal walls the y component.
pub fn reflect(heading: f64, wall: Wall) -> f64 {
    if wall.is_vertical() {
        normalize_angle(PI - heading)
    } else {
        normalize_angle(-heading)
    }
}

/// Kinematic anchor of one node: it is at `pos` at `anchor_time` and moves
/// along `heading` at `speed` until `next_event_time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub node_id: usize,
    pub pos: Vec2,
    pub heading: f64,
    pub speed: f64,
    pub anchor_time: f64,
    pub next_event_time: f64,
    pub next_event_kind: EventKind,
}

impl NodeState {
    pub fn velocity(&self) -> Vec2 {
        Vec2::from_heading(self.heading) * self.speed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicEvent {
    pub node_id: usize,
    pub time: f64,
    pub kind: EventKind,
    pub new_heading: f64,
    /// Walls hit at `time`; two entries for an exact corner hit.
    pub walls: [Option<Wall>; 2],
}

/// Position of the node at time `t`, valid on `[anchor_time, next_event_time]`.
pub fn position_at(state: &NodeState, t: f64) -> Result<Vec2> {
    if !(t >= state.anchor_time && t <= state.next_event_time) {
        return Err(Error::OutsideWindow {
            t,
            start: state.anchor_time,
            end: state.next_event_time,
        });
    }
    Ok(state.pos + state.velocity() * (t - state.anchor_time))
}

/// Time until the node reaches a wall, together with the wall(s) hit.
fn time_to_border(pos: Vec2, vel: Vec2, side: f64) -> (f64, [Option<Wall>; 2]) {
    let axis = |p: f64, v: f64, low: Wall, high: Wall| -> (f64, Option<Wall>) {
        if v > 0.0 {
            (((side - p) / v).max(0.0), Some(high))
        } else if v < 0.0 {
            ((-p / v).max(0.0), Some(low))
        } else {
            (f64::INFINITY, None)
        }
    };
    let (tx, wx) = axis(pos.x, vel.x, Wall::Left, Wall::Right);
    let (ty, wy) = axis(pos.y, vel.y, Wall::Bottom, Wall::Top);
    if tx.is_infinite() && ty.is_infinite() {
        return (f64::INFINITY, [None, None]);
    }
    // Exact corner hits are measure-zero; treat near-ties as a corner so the
    // node cannot escape through it.
    let scale = tx.min(ty).max(1e-300);
    if (tx - ty).abs() <= 1e-12 * scale.max(1.0) {
        (tx.min(ty), [wx, wy])
    } else if tx < ty {
        (tx, [wx, None])
    } else {
        (ty, [wy, None])
    }
}

/// Draws the next kinematic event from the node's anchor. The direction-change
/// clock is redrawn at every event, which is exact because it is memoryless.
pub fn next_kinematic_event(state: &NodeState, scenario: &ScenarioParams, rng: &mut ChaCha8Rng) -> KinematicEvent {
    let idle = KinematicEvent {
        node_id: state.node_id,
        time: f64::INFINITY,
        kind: EventKind::Idle,
        new_heading: state.heading,
        walls: [None, None],
    };
    if state.speed <= 0.0 {
        return idle;
    }
    let (dt_border, walls) = time_to_border(state.pos, state.velocity(), scenario.side());
    let dt_turn = if scenario.tau() > 0.0 {
        Exp::new(scenario.tau()).expect("tau > 0").sample(rng)
    } else {
        f64::INFINITY
    };
    if dt_turn < dt_border {
        KinematicEvent {
            node_id: state.node_id,
            time: state.anchor_time + dt_turn,
            kind: EventKind::DirectionChange,
            new_heading: rng.random_range(0.0..TAU),
            walls: [None, None],
        }
    } else if dt_border.is_finite() {
        let new_heading = walls.iter().flatten().fold(state.heading, |h, &w| reflect(h, w));
        KinematicEvent {
            node_id: state.node_id,
            time: state.anchor_time + dt_border,
            kind: EventKind::BorderHit,
            new_heading,
            walls,
        }
    } else {
        idle
    }
}

/// Applies `event` to `state`: moves to the event position (snapping onto
/// any wall that was hit) and adopts the new heading.
fn apply_event(state: &NodeState, event: &KinematicEvent, side: f64) -> NodeState {
    let mut pos = state.pos + state.velocity() * (event.time - state.anchor_time);
    for wall in event.walls.iter().flatten() {
        match wall {
            Wall::Left => pos.x = 0.0,
            Wall::Right => pos.x = side,
            Wall::Bottom => pos.y = 0.0,
            Wall::Top => pos.y = side,
        }
    }
    pos.x = pos.x.clamp(0.0, side);
    pos.y = pos.y.clamp(0.0, side);
    NodeState {
        node_id: state.node_id,
        pos,
        heading: event.new_heading,
        speed: state.speed,
        anchor_time: event.time,
        next_event_time: f64::INFINITY,
        next_event_kind: EventKind::Idle,
    }
}

/// Uniform initial placement with uniform headings.
///
/// The returned states carry the border-hit preview as their next event;
/// [`NodeMotion::new`] attaches the direction-change clock.
pub fn initial_placement(scenario: &ScenarioParams, rng: &mut ChaCha8Rng) -> Vec<NodeState> {
    let side = scenario.side();
    (0..scenario.n())
        .map(|node_id| {
            let pos = Vec2::new(rng.random_range(0.0..side), rng.random_range(0.0..side));
            let heading = rng.random_range(0.0..TAU);
            let mut state = NodeState {
                node_id,
                pos,
                heading,
                speed: scenario.speed(),
                anchor_time: 0.0,
                next_event_time: f64::INFINITY,
                next_event_kind: EventKind::Idle,
            };
            if state.speed > 0.0 {
                let (dt, _) = time_to_border(pos, state.velocity(), side);
                if dt.is_finite() {
                    state.next_event_time = dt;
                    state.next_event_kind = EventKind::BorderHit;
                }
            }
            state
        })
        .collect()
}

/// One straight piece of a trajectory, valid on `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub origin: Vec2,
    pub heading: f64,
    pub velocity: Vec2,
}

impl Segment {
    pub fn position_at(&self, t: f64) -> Vec2 {
        self.origin + self.velocity * (t - self.start)
    }

    fn from_state(state: &NodeState) -> Segment {
        Segment {
            start: state.anchor_time,
            end: state.next_event_time,
            origin: state.pos,
            heading: state.heading,
            velocity: state.velocity(),
        }
    }
}

/// Lazy event stream for one node.
#[derive(Debug, Clone)]
pub struct NodeMotion {
    state: NodeState,
    pending: KinematicEvent,
    scenario: ScenarioParams,
    rng: ChaCha8Rng,
}

impl NodeMotion {
    pub fn new(state: NodeState, scenario: &ScenarioParams, mut rng: ChaCha8Rng) -> Self {
        let mut state = state;
        let pending = next_kinematic_event(&state, scenario, &mut rng);
        state.next_event_time = pending.time;
        state.next_event_kind = pending.kind;
        NodeMotion {
            state,
            pending,
            scenario: *scenario,
            rng,
        }
    }

    pub fn state(&self) -> &NodeState {
        &self.state
    }

    pub fn segment(&self) -> Segment {
        Segment::from_state(&self.state)
    }

    /// Applies the pending event and draws the next one. Returns the applied event.
    pub fn advance(&mut self) -> KinematicEvent {
        let applied = self.pending;
        if applied.kind == EventKind::Idle {
            return applied;
        }
        let mut next = apply_event(&self.state, &applied, self.scenario.side());
        self.pending = next_kinematic_event(&next, &self.scenario, &mut self.rng);
        next.next_event_time = self.pending.time;
        next.next_event_kind = self.pending.kind;
        self.state = next;
        applied
    }
}

/// Recorded trajectory of one node: contiguous segments in time order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub segments: Vec<Segment>,
}

impl Trajectory {
    /// Index of the segment containing `t` (the later one at a boundary).
    pub fn segment_index(&self, t: f64) -> usize {
        let idx = self.segments.partition_point(|s| s.start <= t);
        idx.saturating_sub(1)
    }

    pub fn segment_at(&self, t: f64) -> &Segment {
        &self.segments[self.segment_index(t)]
    }

    pub fn position_at(&self, t: f64) -> Vec2 {
        self.segment_at(t).position_at(t)
    }

    pub fn heading_at(&self, t: f64) -> f64 {
        self.segment_at(t).heading
    }

    /// Recorded coverage end.
    pub fn end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    /// Segments overlapping `[t0, t1]`.
    pub fn window(&self, t0: f64, t1: f64) -> &[Segment] {
        let first = self.segment_index(t0);
        let last = self.segments.partition_point(|s| s.start < t1).max(first + 1);
        &self.segments[first..last]
    }
}

/// All nodes of one replication, advanced lazily and recorded as they go.
#[derive(Debug, Clone)]
pub struct Fleet {
    motions: Vec<NodeMotion>,
    trajectories: Vec<Trajectory>,
}

impl Fleet {
    /// Places the nodes from the replication's placement stream and gives each
    /// node its own direction-change stream.
    pub fn new(scenario: &ScenarioParams, seed: u64, replication: u32) -> Self {
        let mut placement = RandomStream::for_purpose(seed, replication, Purpose::Placement, 0).rng();
        let states = initial_placement(scenario, &mut placement);
        Fleet::from_states(scenario, states, seed, replication)
    }

    pub fn from_states(scenario: &ScenarioParams, states: Vec<NodeState>, seed: u64, replication: u32) -> Self {
        let motions: Vec<NodeMotion> = states
            .into_iter()
            .map(|s| {
                let rng = RandomStream::for_purpose(seed, replication, Purpose::Direction, s.node_id as u32).rng();
                NodeMotion::new(s, scenario, rng)
            })
            .collect();
        let trajectories = motions
            .iter()
            .map(|m| Trajectory {
                segments: vec![m.segment()],
            })
            .collect();
        Fleet { motions, trajectories }
    }

    pub fn len(&self) -> usize {
        self.motions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.motions.is_empty()
    }

    /// Records every node's trajectory at least up to time `t`.
    pub fn extend_to(&mut self, t: f64) {
        for (motion, traj) in self.motions.iter_mut().zip(self.trajectories.iter_mut()) {
            while traj.end() < t {
                let applied = motion.advance();
                if applied.kind == EventKind::Idle {
                    break;
                }
                traj.segments.push(motion.segment());
            }
        }
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn into_trajectories(self) -> Vec<Trajectory> {
        self.trajectories
    }
}

/// Simulates every node's trajectory over `[0, horizon]`.
pub fn simulate_trajectories(scenario: &ScenarioParams, horizon: f64, seed: u64, replication: u32) -> Vec<Trajectory> {
    let mut fleet = Fleet::new(scenario, seed, replication);
    fleet.extend_to(horizon);
    fleet.into_trajectories()
}

/// Writes the trajectory dump: `node_id,time,x,y,heading` at kinematic events only.
pub fn write_trajectory_csv<W: Write>(trajectories: &[Trajectory], horizon: f64, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node_id", "time", "x", "y", "heading"])?;
    for (id, traj) in trajectories.iter().enumerate() {
        for s in traj.segments.iter().take_while(|s| s.start <= horizon) {
            w.write_record([
                id.to_string(),
                format!("{:.9}", s.start),
                format!("{:.9}", s.origin.x),
                format!("{:.9}", s.origin.y),
                format!("{:.9}", s.heading),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_stream;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    fn scenario(n: usize, side: f64, speed: f64, tau: f64) -> ScenarioParams {
        ScenarioParams::new(n, side, 10.0_f64.min(side / 2.0), 1.0, speed, tau).unwrap()
    }

    fn state(pos: Vec2, heading: f64, speed: f64) -> NodeState {
        NodeState {
            node_id: 0,
            pos,
            heading,
            speed,
            anchor_time: 0.0,
            next_event_time: f64::INFINITY,
            next_event_kind: EventKind::Idle,
        }
    }

    #[test]
    fn reflect_examples() {
        assert!((reflect(FRAC_PI_3, Wall::Top) - 5.0 * FRAC_PI_3).abs() < 1e-12);
        assert!((reflect(0.0, Wall::Right) - PI).abs() < 1e-12);
    }

    #[test]
    fn reflect_is_an_involution() {
        for k in 0..64 {
            let h = k as f64 * TAU / 64.0 + 0.01;
            for w in [Wall::Left, Wall::Right, Wall::Bottom, Wall::Top] {
                let back = reflect(reflect(h, w), w);
                assert!(crate::geometry::angle_between(back, h) < 1e-12, "h={h} w={w:?}");
            }
        }
    }

    #[test]
    fn border_hit_on_left_wall() {
        let sc = scenario(2, 600.0, 1.0, 0.0);
        let s = state(Vec2::new(1.0, 1.0), PI, 1.0);
        let ev = next_kinematic_event(&s, &sc, &mut rng_stream(0, 0));
        assert_eq!(ev.kind, EventKind::BorderHit);
        assert!((ev.time - 1.0).abs() < 1e-12);
        assert!(crate::geometry::angle_between(ev.new_heading, 0.0) < 1e-12);
        assert_eq!(ev.walls, [Some(Wall::Left), None]);
    }

    #[test]
    fn idle_when_static() {
        let sc = scenario(2, 600.0, 0.0, 0.1);
        let s = state(Vec2::new(1.0, 1.0), PI, 0.0);
        let ev = next_kinematic_event(&s, &sc, &mut rng_stream(0, 0));
        assert_eq!(ev.kind, EventKind::Idle);
        assert!(ev.time.is_infinite());
    }

    /// Tiny-step integrator with explicit reflections, used as an independent oracle.
    fn integrate(mut pos: Vec2, heading: f64, speed: f64, side: f64, duration: f64, dt: f64) -> (Vec2, Vec2) {
        let mut vel = Vec2::from_heading(heading) * speed;
        let steps = (duration / dt).round() as usize;
        for _ in 0..steps {
            pos = pos + vel * dt;
            if pos.x < 0.0 {
                pos.x = -pos.x;
                vel.x = -vel.x;
            }
            if pos.x > side {
                pos.x = 2.0 * side - pos.x;
                vel.x = -vel.x;
            }
            if pos.y < 0.0 {
                pos.y = -pos.y;
                vel.y = -vel.y;
            }
            if pos.y > side {
                pos.y = 2.0 * side - pos.y;
                vel.y = -vel.y;
            }
        }
        (pos, vel)
    }

    #[test]
    fn corner_hit_applies_both_reflections() {
        let side = 600.0;
        let sc = scenario(2, side, 1.0, 0.0);
        let s = state(Vec2::new(side - 3.0, side - 3.0), FRAC_PI_4, 1.0);
        let mut motion = NodeMotion::new(s, &sc, rng_stream(0, 0));
        let ev = motion.advance();
        assert_eq!(ev.kind, EventKind::BorderHit);
        assert!(ev.walls[1].is_some(), "corner must hit two walls");
        assert!(crate::geometry::angle_between(ev.new_heading, PI + FRAC_PI_4) < 1e-12);
        let after = motion.state();
        assert!(after.pos.x <= side && after.pos.y <= side);

        // Oracle: tiny-step integration for 10 s through the corner.
        let (oracle_pos, oracle_vel) = integrate(s.pos, FRAC_PI_4, 1.0, side, 10.0, 1e-5);
        let pos = position_at(motion.state(), 10.0).unwrap();
        assert!(pos.distance(oracle_pos) < 1e-6, "{pos:?} vs {oracle_pos:?}");
        assert!((motion.state().velocity() - oracle_vel).norm() < 1e-9);
    }

    #[test]
    fn event_stream_matches_integrator_oracle() {
        let side = 50.0;
        let sc = scenario(2, side, 3.0, 0.0);
        let s = state(Vec2::new(12.3, 40.1), 2.2, 3.0);
        let mut fleet = Fleet::from_states(&sc, vec![s], 1, 0);
        fleet.extend_to(100.0);
        let traj = &fleet.trajectories()[0];
        let (oracle, _) = integrate(s.pos, 2.2, 3.0, side, 100.0, 1e-5);
        assert!(traj.position_at(100.0).distance(oracle) < 1e-5);
    }

    #[test]
    fn position_at_window() {
        let s = NodeState {
            next_event_time: 10.0,
            next_event_kind: EventKind::BorderHit,
            ..state(Vec2::new(1.0, 2.0), 0.0, 5.0)
        };
        assert_eq!(position_at(&s, 0.0).unwrap(), s.pos);
        assert_eq!(position_at(&s, 2.0).unwrap(), Vec2::new(11.0, 2.0));
        assert!(matches!(position_at(&s, 10.5), Err(Error::OutsideWindow { .. })));
        assert!(position_at(&s, -0.1).is_err());
    }

    #[test]
    fn two_nodes_placed() {
        let sc = scenario(2, 600.0, 5.0, 0.0);
        let states = initial_placement(&sc, &mut rng_stream(3, 0));
        assert_eq!(states.len(), 2);
        for s in &states {
            assert!(s.pos.is_finite() && s.heading.is_finite());
            assert!(s.next_event_time.is_finite());
        }
    }

    #[test]
    fn placement_mean_within_three_sigma() {
        let sc = scenario(500, 600.0, 5.0, 0.0);
        let states = initial_placement(&sc, &mut rng_stream(11, 0));
        let mean_x = states.iter().map(|s| s.pos.x).sum::<f64>() / 500.0;
        let tol = 3.0 * (600.0 / 12f64.sqrt()) / 500f64.sqrt();
        assert!((tol - 23.24).abs() < 0.01);
        assert!((mean_x - 300.0).abs() < tol, "mean {mean_x}");
    }

    #[test]
    fn placement_passes_chi_square_uniformity() {
        let sc = ScenarioParams::new(10_000, 100.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let states = initial_placement(&sc, &mut rng_stream(5, 0));
        let mut counts = [0usize; 100];
        for s in &states {
            let cx = ((s.pos.x / 10.0) as usize).min(9);
            let cy = ((s.pos.y / 10.0) as usize).min(9);
            counts[cy * 10 + cx] += 1;
        }
        let expected = 100.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // chi-square with 99 dof, upper 1% point
        assert!(chi2 < 134.64, "chi2 = {chi2}");
    }

    #[test]
    fn mean_distance_between_turns() {
        // Memoryless clock: the run length between direction changes is v*Exp(tau).
        let sc = scenario(2, 1e7, 5.0, 0.05);
        let mut rng = rng_stream(9, 1);
        let mut total = 0.0;
        let n = 100_000;
        for _ in 0..n {
            let s = state(Vec2::new(5e6, 5e6), rng.random_range(0.0..TAU), 5.0);
            let ev = next_kinematic_event(&s, &sc, &mut rng);
            assert_eq!(ev.kind, EventKind::DirectionChange);
            total += ev.time * 5.0;
        }
        let mean = total / n as f64;
        assert!((mean - 100.0).abs() < 2.0, "mean run length {mean}");
    }

    #[test]
    fn direction_change_intervals_are_exponential() {
        let sc = scenario(2, 600.0, 5.0, 0.05);
        let s = initial_placement(&sc, &mut rng_stream(21, 0))[0];
        let mut motion = NodeMotion::new(s, &sc, rng_stream(21, 1));
        let mut last = 0.0;
        let mut gaps = Vec::with_capacity(100_000);
        while gaps.len() < 100_000 {
            let ev = motion.advance();
            if ev.kind == EventKind::DirectionChange {
                gaps.push(ev.time - last);
                last = ev.time;
            }
        }
        let d = crate::meetings::ks_statistic(&gaps, |x| 1.0 - (-0.05 * x).exp());
        // 1% critical value for n = 1e5
        assert!(d < 1.628 / (gaps.len() as f64).sqrt(), "KS {d}");
    }

    #[test]
    fn trajectories_stay_in_domain_with_constant_speed() {
        for tau in [0.0, 0.05, 1.0] {
            let sc = ScenarioParams::new(50, 100.0, 5.0, 1.0, 5.0, tau).unwrap();
            let trajs = simulate_trajectories(&sc, 500.0, 77, 0);
            for traj in &trajs {
                for w in traj.segments.windows(2) {
                    assert_eq!(w[0].end, w[1].start);
                }
                for seg in &traj.segments {
                    assert!((seg.velocity.norm() - 5.0).abs() < 1e-12);
                    assert!(seg.end > seg.start);
                    for k in 0..=4 {
                        let t = seg.start + (seg.end.min(500.0) - seg.start) * k as f64 / 4.0;
                        let p = seg.position_at(t);
                        let tol = 1e-9 * 100.0;
                        assert!(p.x >= -tol && p.x <= 100.0 + tol && p.y >= -tol && p.y <= 100.0 + tol, "{p:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn trajectory_window_lookup() {
        let sc = ScenarioParams::new(3, 100.0, 5.0, 1.0, 5.0, 0.2).unwrap();
        let trajs = simulate_trajectories(&sc, 200.0, 3, 0);
        let traj = &trajs[0];
        let w = traj.window(50.0, 60.0);
        assert!(w.first().unwrap().start <= 50.0 && w.first().unwrap().end >= 50.0);
        assert!(w.last().unwrap().end >= 60.0);
        assert!(w.iter().all(|s| s.end >= 50.0 && s.start <= 60.0));
    }

    #[test]
    fn trajectory_csv_has_expected_columns() {
        let sc = ScenarioParams::new(3, 100.0, 5.0, 1.0, 5.0, 0.0).unwrap();
        let trajs = simulate_trajectories(&sc, 50.0, 3, 0);
        let mut buf = Vec::new();
        write_trajectory_csv(&trajs, 50.0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("node_id,time,x,y,heading\n"));
    }
}
