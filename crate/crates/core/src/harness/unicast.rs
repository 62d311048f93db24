use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contacts::contacts_from_fleet;
use crate::dissemination::{plan_rendezvous, route_rendezvous, CapacityQuery, JourneyRecord, RendezvousSettings};
use crate::mobility::Fleet;
use crate::rng::{Purpose, RandomStream};
use crate::{Error, Result, ScenarioParams};

use super::node_nearest_center;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RendezvousBatch {
    pub scenario: ScenarioParams,
    pub capacity_y: f64,
    pub runs: usize,
    pub seed: u64,
    /// Destinations are drawn among nodes whose rendezvous distance lies in `[min_r, max_r]`.
    pub min_r: f64,
    pub max_r: f64,
    pub settings: RendezvousSettings,
    /// Contact recording ends at `horizon_factor * r / v`.
    pub horizon_factor: f64,
}

impl RendezvousBatch {
    pub fn new(scenario: ScenarioParams, capacity_y: f64, runs: usize, seed: u64, min_r: f64) -> Self {
        RendezvousBatch {
            scenario,
            capacity_y,
            runs,
            seed,
            min_r,
            max_r: 1.5 * min_r,
            settings: RendezvousSettings::default(),
            horizon_factor: 2.0,
        }
    }
}

fn one_run(batch: &RendezvousBatch, run: usize) -> Result<JourneyRecord> {
    let s = &batch.scenario;
    let seed = batch.seed.wrapping_add(run as u64);
    let v = s.speed();
    let mut fleet = Fleet::new(s, seed, 0);
    let search_end = batch.max_r / v;
    fleet.extend_to(search_end);
    let source = node_nearest_center(fleet.trajectories(), s.side(), 0.0);
    let query = CapacityQuery::for_scenario(s, batch.capacity_y, source, 0.0)?;

    let mut order: Vec<usize> = (0..s.n()).filter(|&i| i != source).collect();
    order.shuffle(&mut RandomStream::for_purpose(seed, 0, Purpose::Selection, 0).rng());
    let mut chosen = None;
    for dest in order {
        if let Some(plan) = plan_rendezvous(fleet.trajectories(), s, &query, dest, &batch.settings, search_end)? {
            if plan.r >= batch.min_r && plan.r <= batch.max_r {
                chosen = Some((dest, plan.r));
                break;
            }
        }
    }
    let Some((dest, r)) = chosen else {
        return Err(Error::Validation(format!(
            "no destination with rendezvous distance in [{}, {}] m",
            batch.min_r, batch.max_r
        )));
    };
    let trace = contacts_from_fleet(s, fleet, batch.horizon_factor * r / v);
    let outcome = route_rendezvous(&trace, &query, dest, &batch.settings)?;
    Ok(JourneyRecord { seed, outcome })
}

/// Independent unicast runs, one fresh replication per run with seed `seed + run`.
pub fn rendezvous_batch(batch: &RendezvousBatch) -> Result<Vec<JourneyRecord>> {
    let probe = CapacityQuery::for_scenario(&batch.scenario, batch.capacity_y, 0, 0.0)?;
    batch.settings.check_regime(&batch.scenario, &probe)?;
    if !(batch.min_r > 0.0 && batch.max_r >= batch.min_r) {
        return Err(Error::Validation("rendezvous distance band must satisfy 0 < min_r <= max_r".into()));
    }
    (0..batch.runs).into_par_iter().map(|run| one_run(batch, run)).collect()
}
