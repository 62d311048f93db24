//! Experiment runner: replicated broadcasts, speed estimation, capacity sweeps.

mod plots;
mod speed;
mod unicast;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use plots::{reference_line, render_plots};
pub use speed::{estimate_speed, SpeedEstimate, MIN_FIT_SAMPLES};
pub use unicast::{rendezvous_batch, RendezvousBatch};

use crate::bounds::{upper_bound_speed, BoundQuery};
use crate::contacts::contact_stream;
use crate::dissemination::{run_epidemic_on_trace, verify_journeys, CapacityQuery, InformedLog};
use crate::geometry::Vec2;
use crate::mobility::Trajectory;
use crate::{Error, Result, ScenarioParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: ScenarioParams,
    pub capacities: Vec<f64>,
    pub source_time: f64,
    pub horizon: f64,
    pub replications: usize,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    /// Distance window `[lo, hi]` in meters used by the speed fits.
    pub fit_window: (f64, f64),
}

impl ExperimentSpec {
    /// Spec with the default fit window `[L/6, L/2]` and no output directory.
    pub fn new(
        scenario: ScenarioParams,
        capacities: Vec<f64>,
        source_time: f64,
        horizon: f64,
        replications: usize,
        seed: u64,
    ) -> Self {
        let side = scenario.side();
        ExperimentSpec {
            scenario,
            capacities,
            source_time,
            horizon,
            replications,
            seed,
            out_dir: None,
            fit_window: (side / 6.0, side / 2.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > self.source_time) {
            return Err(Error::Validation(format!(
                "horizon ({}) must exceed source time ({})",
                self.horizon, self.source_time
            )));
        }
        if self.source_time < 0.0 {
            return Err(Error::Validation("source time must be >= 0".into()));
        }
        if self.replications < 1 {
            return Err(Error::Validation("replications must be >= 1".into()));
        }
        if self.capacities.is_empty() || self.capacities.iter().any(|y| !(y.is_finite() && *y > 0.0)) {
            return Err(Error::Validation("capacities must be a non-empty list of positive values".into()));
        }
        if !(self.fit_window.0 >= 0.0 && self.fit_window.1 > self.fit_window.0) {
            return Err(Error::Validation("fit window must satisfy 0 <= lo < hi".into()));
        }
        Ok(())
    }
}

/// Node closest to the domain center at time `t`; lowest id on ties.
pub fn node_nearest_center(trajectories: &[Trajectory], side: f64, t: f64) -> usize {
    let center = Vec2::new(0.5 * side, 0.5 * side);
    (0..trajectories.len())
        .min_by(|&a, &b| {
            let da = trajectories[a].position_at(t).distance(center);
            let db = trajectories[b].position_at(t).distance(center);
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .expect("at least one node")
}

#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastRun {
    pub replication: usize,
    pub capacity_y: f64,
    pub log: InformedLog,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentBundle {
    pub spec: ExperimentSpec,
    /// Ordered by `(replication, capacity index)`.
    pub runs: Vec<BroadcastRun>,
}

impl ExperimentBundle {
    /// Per-replication `(distance, delay)` samples for one capacity.
    pub fn samples_for(&self, capacity_y: f64) -> Vec<Vec<(f64, f64)>> {
        self.runs
            .iter()
            .filter(|r| r.capacity_y == capacity_y)
            .map(|r| r.log.delay_distance_samples())
            .collect()
    }
}

fn replication_runs(spec: &ExperimentSpec, replication: usize) -> Result<Vec<BroadcastRun>> {
    let trace = contact_stream(&spec.scenario, spec.horizon, spec.seed, replication as u32);
    let source = node_nearest_center(&trace.trajectories, spec.scenario.side(), spec.source_time);
    spec.capacities
        .iter()
        .map(|&y| {
            let query = CapacityQuery::for_scenario(&spec.scenario, y, source, spec.source_time)?;
            let log = run_epidemic_on_trace(&trace, &query)?;
            if let Err(v) = verify_journeys(&log, &trace.stream, &query) {
                return Err(Error::Validation(format!("journey check failed (replication {replication}, y {y}): {v}")));
            }
            Ok(BroadcastRun {
                replication,
                capacity_y: y,
                log,
            })
        })
        .collect()
}

/// Runs every replication (in parallel) and every capacity, then writes the
/// per-run `informed` CSVs, `samples.csv` and `manifest.json` when an output
/// directory is set.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentBundle> {
    spec.validate()?;
    let per_rep: Vec<Result<Vec<BroadcastRun>>> =
        (0..spec.replications).into_par_iter().map(|rep| replication_runs(spec, rep)).collect();
    let mut runs = Vec::new();
    for r in per_rep {
        runs.extend(r?);
    }
    let bundle = ExperimentBundle { spec: spec.clone(), runs };
    if let Some(dir) = &spec.out_dir {
        write_bundle(&bundle, dir)?;
    }
    Ok(bundle)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub spec: ExperimentSpec,
    pub replication_seeds: Vec<(usize, u64)>,
    pub fit_method: String,
    pub averaging: String,
}

impl Manifest {
    pub fn for_spec(spec: &ExperimentSpec) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            spec: spec.clone(),
            replication_seeds: (0..spec.replications).map(|r| (r, spec.seed)).collect(),
            fit_method: format!(
                "least squares of delay on distance through the origin over [{}, {}] m; frontier: pooled within-run slope of running max distance on delay",
                spec.fit_window.0, spec.fit_window.1
            ),
            averaging: "20 equal-width distance bins".into(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn write_bundle(bundle: &ExperimentBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for run in &bundle.runs {
        let name = format!("informed_rep{}_y{}.csv", run.replication, run.capacity_y);
        run.log.write_csv(fs::File::create(dir.join(name))?)?;
    }
    let mut w = csv::Writer::from_path(dir.join("samples.csv"))?;
    w.write_record(["replication", "y", "distance", "delay"])?;
    for run in &bundle.runs {
        for (d, t) in run.log.delay_distance_samples() {
            w.write_record([run.replication.to_string(), run.capacity_y.to_string(), d.to_string(), t.to_string()])?;
        }
    }
    w.flush()?;
    let manifest = Manifest::for_spec(&bundle.spec);
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub estimate: SpeedEstimate,
    pub speed_upper_bound: f64,
    /// Measured `s(y) y`.
    pub capacity_product: f64,
}

/// Measured speed, bound and space-time capacity for each capacity in the experiment.
pub fn sweep_capacity(spec: &ExperimentSpec) -> Result<(ExperimentBundle, Vec<SweepRow>)> {
    if spec.capacities.len() < 2 {
        return Err(Error::Validation("a sweep needs at least two capacities".into()));
    }
    let bundle = run_experiment(spec)?;
    let rows = sweep_rows(&bundle)?;
    if let Some(dir) = &spec.out_dir {
        write_speed_csv(&rows, fs::File::create(dir.join("speed.csv"))?)?;
    }
    Ok((bundle, rows))
}

/// Speed table for an existing bundle.
pub fn sweep_rows(bundle: &ExperimentBundle) -> Result<Vec<SweepRow>> {
    let spec = &bundle.spec;
    spec.capacities
        .iter()
        .map(|&y| {
            let estimate = estimate_speed(y, &bundle.samples_for(y), spec.fit_window)?;
            let bound = upper_bound_speed(&BoundQuery::new(spec.scenario, y)?);
            Ok(SweepRow {
                estimate,
                speed_upper_bound: bound.speed_upper,
                capacity_product: estimate.speed_slope * y,
            })
        })
        .collect()
}

/// Writes `y,speed_slope,speed_frontier,speed_upper_bound,capacity_product,samples`.
pub fn write_speed_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["y", "speed_slope", "speed_frontier", "speed_upper_bound", "capacity_product", "samples"])?;
    for r in rows {
        w.write_record([
            r.estimate.capacity_y.to_string(),
            r.estimate.speed_slope.to_string(),
            r.estimate.speed_frontier.to_string(),
            r.speed_upper_bound.to_string(),
            r.capacity_product.to_string(),
            r.estimate.samples.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentSpec {
        let s = ScenarioParams::new(60, 200.0, 10.0, 1.0, 5.0, 0.0).unwrap();
        ExperimentSpec::new(s, vec![1.0, 2.0], 5.0, 60.0, 2, 3)
    }

    #[test]
    fn horizon_before_source_time_rejected() {
        let mut spec = small();
        spec.horizon = 5.0;
        assert!(run_experiment(&spec).unwrap_err().is_validation());
    }

    #[test]
    fn zero_replications_rejected() {
        let mut spec = small();
        spec.replications = 0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn same_seed_same_bundle() {
        let a = run_experiment(&small()).unwrap();
        let b = run_experiment(&small()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.runs.len(), 4);
        assert_eq!(a.runs[1].replication, 0);
        assert_eq!(a.runs[1].capacity_y, 2.0);
    }

    #[test]
    fn single_capacity_sweep_rejected() {
        let mut spec = small();
        spec.capacities = vec![1.0];
        assert!(sweep_capacity(&spec).is_err());
    }

    #[test]
    fn speed_csv_header() {
        let mut buf = Vec::new();
        write_speed_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim(), "y,speed_slope,speed_frontier,speed_upper_bound,capacity_product,samples");
    }
}
