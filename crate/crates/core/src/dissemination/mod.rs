//! Store-carry-forward spreading under a journey-capacity constraint.
//!
//! A transmission over a contact `[t_begin, t_end]` from a sender informed at
//! `t_s` occupies `[max(t_begin, t_s), max(t_begin, t_s) + y/G]` and must fit
//! inside the contact. The sender holds the whole bundle before it starts.

mod epidemic;
mod rendezvous;

use serde::{Deserialize, Serialize};

pub use epidemic::{run_epidemic, run_epidemic_on_trace, verify_journeys, Violation};
pub use rendezvous::{
    plan_rendezvous, route_rendezvous, run_rendezvous, window_meeting_durations, write_journeys_csv, JourneyOutcome,
    JourneyRecord, RendezvousPlan, RendezvousSettings,
};

use crate::geometry::Vec2;
use crate::{Error, Result, ScenarioParams};

/// One broadcast: who emits, when, and how much data every hop must carry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityQuery {
    capacity_y: f64,
    thickness: f64,
    pub source_id: usize,
    pub emit_time: f64,
}

impl CapacityQuery {
    pub fn new(capacity_y: f64, rate_g: f64, source_id: usize, emit_time: f64) -> Result<Self> {
        if !(capacity_y.is_finite() && capacity_y > 0.0) {
            return Err(Error::Validation(format!("capacity must be finite and > 0 (got {capacity_y})")));
        }
        if !(rate_g.is_finite() && rate_g > 0.0) {
            return Err(Error::Validation(format!("rate must be finite and > 0 (got {rate_g})")));
        }
        if !(emit_time.is_finite() && emit_time >= 0.0) {
            return Err(Error::Validation(format!("emit time must be >= 0 (got {emit_time})")));
        }
        Ok(CapacityQuery {
            capacity_y,
            thickness: capacity_y / rate_g,
            source_id,
            emit_time,
        })
    }

    pub fn for_scenario(scenario: &ScenarioParams, capacity_y: f64, source_id: usize, emit_time: f64) -> Result<Self> {
        CapacityQuery::new(capacity_y, scenario.rate(), source_id, emit_time)
    }

    pub fn capacity(&self) -> f64 {
        self.capacity_y
    }

    /// Minimum transmission duration `y / G`.
    pub fn thickness(&self) -> f64 {
        self.thickness
    }
}

/// Result of one broadcast, indexed by node id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InformedLog {
    pub query: CapacityQuery,
    /// `+inf` for nodes never reached.
    pub informed_time: Vec<f64>,
    pub predecessor: Vec<Option<usize>>,
    /// Index into the contact stream of the contact that carried the bundle.
    pub witness: Vec<Option<usize>>,
    /// Filled by [`InformedLog::locate`].
    pub informed_pos: Vec<Option<Vec2>>,
    pub distance_from_origin: Vec<f64>,
}

impl InformedLog {
    pub fn n(&self) -> usize {
        self.informed_time.len()
    }

    pub fn is_informed(&self, node: usize) -> bool {
        self.informed_time[node].is_finite()
    }

    pub fn informed_count(&self) -> usize {
        self.informed_time.iter().filter(|t| t.is_finite()).count()
    }

    /// Nodes informed no later than `t`.
    pub fn informed_by(&self, t: f64) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.informed_time[i] <= t).collect()
    }

    /// Records where each node was when informed, and its distance from the
    /// source's position at the emit time.
    pub fn locate(&mut self, trajectories: &[crate::mobility::Trajectory]) {
        let origin = trajectories[self.query.source_id].position_at(self.query.emit_time);
        for node in 0..self.n() {
            let t = self.informed_time[node];
            if t.is_finite() {
                let p = trajectories[node].position_at(t);
                self.informed_pos[node] = Some(p);
                self.distance_from_origin[node] = p.distance(origin);
            } else {
                self.informed_pos[node] = None;
                self.distance_from_origin[node] = f64::INFINITY;
            }
        }
    }

    /// `(distance, delay)` for every informed non-source node.
    pub fn delay_distance_samples(&self) -> Vec<(f64, f64)> {
        (0..self.n())
            .filter(|&i| i != self.query.source_id && self.is_informed(i) && self.distance_from_origin[i].is_finite())
            .map(|i| (self.distance_from_origin[i], self.informed_time[i] - self.query.emit_time))
            .collect()
    }

    /// Writes `node_id,informed_time,x,y,distance_from_origin,predecessor`.
    /// Unreached nodes get `inf` and empty fields.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node_id", "informed_time", "x", "y", "distance_from_origin", "predecessor"])?;
        for node in 0..self.n() {
            let (x, y) = self.informed_pos[node].map_or((String::new(), String::new()), |p| (p.x.to_string(), p.y.to_string()));
            let dist = if self.distance_from_origin[node].is_finite() {
                self.distance_from_origin[node].to_string()
            } else {
                String::new()
            };
            w.write_record([
                node.to_string(),
                self.informed_time[node].to_string(),
                x,
                y,
                dist,
                self.predecessor[node].map(|p| p.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
