//! Exact continuous-time contact detection.
//!
//! Narrow phase: on every time interval where both nodes move linearly, the
//! in-range set `|dp(t)| <= R` is the sub-level set of a quadratic, solved in
//! closed form and polished with one Newton step. Pieces that touch at a
//! kinematic event are stitched into one contact.
//!
//! Broad phase: a uniform grid of cell side `R`, rebuilt every macro interval
//! `D = R / (2v)`. Two nodes farther apart than `2R + 2vD` at a macro tick
//! cannot come within range before the next tick.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::mobility::{Fleet, Segment, Trajectory};
use crate::{Result, ScenarioParams, Vec2};

/// Contacts shorter than this are treated as tangential grazes and dropped.
pub const MIN_CONTACT_DURATION: f64 = 1e-9;

/// One encounter interval between `node_a < node_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactEvent {
    pub node_a: usize,
    pub node_b: usize,
    pub t_begin: f64,
    pub t_end: f64,
    pub duration: f64,
    /// The pair was already in range at the start of the simulation window.
    pub open_start: bool,
    /// The pair was still in range at the horizon.
    pub open_end: bool,
}

impl ContactEvent {
    pub fn new(a: usize, b: usize, t_begin: f64, t_end: f64, window: (f64, f64)) -> Self {
        let (node_a, node_b) = if a < b { (a, b) } else { (b, a) };
        ContactEvent {
            node_a,
            node_b,
            t_begin,
            t_end,
            duration: t_end - t_begin,
            open_start: t_begin <= window.0,
            open_end: t_end >= window.1,
        }
    }

    /// True when both endpoints are genuine range crossings.
    pub fn is_complete(&self) -> bool {
        !self.open_start && !self.open_end
    }

    pub fn other(&self, node: usize) -> usize {
        if node == self.node_a {
            self.node_b
        } else {
            self.node_a
        }
    }

    pub fn involves(&self, node: usize) -> bool {
        node == self.node_a || node == self.node_b
    }
}

/// All contacts over `[0, horizon]`, ordered by `(t_begin, node_a, node_b)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContactStream {
    pub contacts: Vec<ContactEvent>,
    pub horizon: f64,
}

impl ContactStream {
    pub fn new(mut contacts: Vec<ContactEvent>, horizon: f64) -> Self {
        contacts.sort_by(|x, y| {
            x.t_begin
                .total_cmp(&y.t_begin)
                .then(x.node_a.cmp(&y.node_a))
                .then(x.node_b.cmp(&y.node_b))
                .then(x.t_end.total_cmp(&y.t_end))
        });
        ContactStream { contacts, horizon }
    }

    pub fn len(&self) -> usize {
        self.contacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contacts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ContactEvent> {
        self.contacts.iter()
    }

    /// Contact indices incident to each node, in stream order.
    pub fn incidence(&self, n: usize) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); n];
        for (i, c) in self.contacts.iter().enumerate() {
            inc[c.node_a].push(i);
            inc[c.node_b].push(i);
        }
        inc
    }

    /// Writes `t_begin,t_end,node_a,node_b,duration` with 9 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_begin", "t_end", "node_a", "node_b", "duration"])?;
        for c in &self.contacts {
            w.write_record([
                sig9(c.t_begin),
                sig9(c.t_end),
                c.node_a.to_string(),
                c.node_b.to_string(),
                sig9(c.duration),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Formats with 9 significant digits in plain decimal notation.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (8 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Sub-level set `{s in [0, len] : A s^2 + B s + C <= 0}` with `A >= 0`.
/// Returns offsets; `None` when empty or a single point.
fn in_range_offsets(a: f64, b: f64, c: f64, len: f64) -> Option<(f64, f64)> {
    let f = |s: f64| (a * s + b) * s + c;
    let start_in = c <= 0.0;
    let end_in = f(len) <= 0.0;
    let (lo, hi) = if a == 0.0 {
        // Linear: B s + C <= 0
        if b == 0.0 {
            return if start_in { Some((0.0, len)) } else { None };
        }
        let root = -c / b;
        if b > 0.0 {
            (f64::NEG_INFINITY, root)
        } else {
            (root, f64::INFINITY)
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc <= 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        // Numerically stable pair of roots.
        let q = -0.5 * (b + b.signum() * sq);
        let (mut r1, mut r2) = if q != 0.0 { (q / a, c / q) } else { (-sq / (2.0 * a), sq / (2.0 * a)) };
        if r1 > r2 {
            std::mem::swap(&mut r1, &mut r2);
        }
        let newton = |s: f64| {
            let d = 2.0 * a * s + b;
            if d != 0.0 {
                s - f(s) / d
            } else {
                s
            }
        };
        (newton(r1), newton(r2))
    };
    let s0 = if start_in { 0.0 } else { lo.max(0.0) };
    let s1 = if end_in { len } else { hi.min(len) };
    if s1 > s0 {
        Some((s0, s1))
    } else {
        None
    }
}

/// In-range intervals of two piecewise-linear trajectories within `window`.
///
/// Both segment lists must cover the window. Pieces that touch at a segment
/// boundary are merged, and intervals shorter than [`MIN_CONTACT_DURATION`]
/// are dropped.
pub fn pair_contact_intervals(a: &[Segment], b: &[Segment], range: f64, window: (f64, f64)) -> Vec<(f64, f64)> {
    let (t0, t1) = window;
    let r2 = range * range;
    let mut out: Vec<(f64, f64)> = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    let mut cur = t0;
    while cur < t1 {
        while i + 1 < a.len() && a[i].end <= cur {
            i += 1;
        }
        while j + 1 < b.len() && b[j].end <= cur {
            j += 1;
        }
        let (sa, sb) = (&a[i], &b[j]);
        let next = sa.end.min(sb.end).min(t1);
        if next <= cur {
            break;
        }
        let p0: Vec2 = sb.position_at(cur) - sa.position_at(cur);
        let w = sb.velocity - sa.velocity;
        let qa = w.norm_sq();
        let qb = 2.0 * p0.dot(w);
        let qc = p0.norm_sq() - r2;
        if let Some((s0, s1)) = in_range_offsets(qa, qb, qc, next - cur) {
            let begin = if s0 == 0.0 { cur } else { cur + s0 };
            let end = if s1 == next - cur { next } else { (cur + s1).min(next) };
            match out.last_mut() {
                Some(last) if last.1 == begin => last.1 = end,
                _ => out.push((begin, end)),
            }
        }
        cur = next;
    }
    out.retain(|&(s, e)| e - s >= MIN_CONTACT_DURATION);
    out
}

/// Recorded mobility plus the contacts it produces.
#[derive(Debug, Clone)]
pub struct ContactTrace {
    pub scenario: ScenarioParams,
    pub horizon: f64,
    pub trajectories: Vec<Trajectory>,
    pub stream: ContactStream,
}

impl ContactTrace {
    pub fn n(&self) -> usize {
        self.trajectories.len()
    }

    pub fn position(&self, node: usize, t: f64) -> Vec2 {
        self.trajectories[node].position_at(t)
    }

    pub fn heading(&self, node: usize, t: f64) -> f64 {
        self.trajectories[node].heading_at(t)
    }
}

/// Simulates mobility and every contact among the `n` nodes over `[0, horizon]`.
pub fn contact_stream(scenario: &ScenarioParams, horizon: f64, seed: u64, replication: u32) -> ContactTrace {
    contacts_from_fleet(scenario, Fleet::new(scenario, seed, replication), horizon)
}

/// Like [`contact_stream`] but starting from an explicit fleet (custom initial states).
pub fn contacts_from_fleet(scenario: &ScenarioParams, mut fleet: Fleet, horizon: f64) -> ContactTrace {
    assert!(horizon > 0.0, "horizon must be positive");
    let n = fleet.len();
    let range = scenario.range();
    let speed = scenario.speed();
    let (step, reach) = if speed > 0.0 {
        let step = range / (2.0 * speed);
        (step, 2.0 * range + 2.0 * speed * step)
    } else {
        (horizon, 2.0 * range)
    };
    let side = scenario.side();
    let cells_per_side = ((side / range).ceil() as usize).max(1);
    let ring = (reach / range).ceil() as isize;
    let cell_of = |p: Vec2| -> (isize, isize) {
        let cx = ((p.x / range) as isize).clamp(0, cells_per_side as isize - 1);
        let cy = ((p.y / range) as isize).clamp(0, cells_per_side as isize - 1);
        (cx, cy)
    };

    let mut grid: Vec<Vec<u32>> = vec![Vec::new(); cells_per_side * cells_per_side];
    let mut positions = vec![Vec2::ZERO; n];
    let mut open: HashMap<(u32, u32), f64> = HashMap::new();
    let mut contacts = Vec::new();
    let window = (0.0, horizon);

    let mut k: u64 = 0;
    loop {
        let t = k as f64 * step;
        if t >= horizon {
            break;
        }
        let t1 = ((k + 1) as f64 * step).min(horizon);
        fleet.extend_to(t1);
        let trajs = fleet.trajectories();

        for cell in grid.iter_mut() {
            cell.clear();
        }
        for (id, traj) in trajs.iter().enumerate() {
            let p = traj.position_at(t);
            positions[id] = p;
            let (cx, cy) = cell_of(p);
            grid[cy as usize * cells_per_side + cx as usize].push(id as u32);
        }

        let mut next_open: HashMap<(u32, u32), f64> = HashMap::new();
        for a in 0..n {
            let (cx, cy) = cell_of(positions[a]);
            for dy in -ring..=ring {
                let y = cy + dy;
                if y < 0 || y >= cells_per_side as isize {
                    continue;
                }
                for dx in -ring..=ring {
                    let x = cx + dx;
                    if x < 0 || x >= cells_per_side as isize {
                        continue;
                    }
                    for &b in &grid[y as usize * cells_per_side + x as usize] {
                        let b = b as usize;
                        if b <= a || positions[a].distance(positions[b]) > reach {
                            continue;
                        }
                        let key = (a as u32, b as u32);
                        let pieces = pair_contact_intervals(
                            trajs[a].window(t, t1),
                            trajs[b].window(t, t1),
                            range,
                            (t, t1),
                        );
                        let mut carried = open.remove(&key);
                        let count = pieces.len();
                        for (idx, (s, e)) in pieces.into_iter().enumerate() {
                            let begin = match carried.take() {
                                Some(b0) if s == t => b0,
                                Some(b0) => {
                                    contacts.push(ContactEvent::new(a, b, b0, t, window));
                                    s
                                }
                                None => s,
                            };
                            if idx + 1 == count && e == t1 && t1 < horizon {
                                next_open.insert(key, begin);
                            } else {
                                contacts.push(ContactEvent::new(a, b, begin, e, window));
                            }
                        }
                        if let Some(b0) = carried {
                            contacts.push(ContactEvent::new(a, b, b0, t, window));
                        }
                    }
                }
            }
        }
        // Open contacts whose pair fell out of the candidate set ended at the tick.
        for ((a, b), b0) in open.drain() {
            contacts.push(ContactEvent::new(a as usize, b as usize, b0, t, window));
        }
        open = next_open;
        k += 1;
    }
    for ((a, b), b0) in open.drain() {
        contacts.push(ContactEvent::new(a as usize, b as usize, b0, horizon, window));
    }
    contacts.retain(|c| c.duration >= MIN_CONTACT_DURATION);

    ContactTrace {
        scenario: *scenario,
        horizon,
        trajectories: fleet.into_trajectories(),
        stream: ContactStream::new(contacts, horizon),
    }
}

/// O(n^2) reference: every pair over the whole window, no broad phase.
pub fn brute_force_contacts(trajectories: &[Trajectory], range: f64, horizon: f64) -> ContactStream {
    let mut contacts = Vec::new();
    for a in 0..trajectories.len() {
        for b in (a + 1)..trajectories.len() {
            let sa = trajectories[a].window(0.0, horizon);
            let sb = trajectories[b].window(0.0, horizon);
            for (s, e) in pair_contact_intervals(sa, sb, range, (0.0, horizon)) {
                contacts.push(ContactEvent::new(a, b, s, e, (0.0, horizon)));
            }
        }
    }
    ContactStream::new(contacts, horizon)
}
