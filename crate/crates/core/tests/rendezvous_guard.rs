use dtncap::dissemination::RendezvousSettings;
use dtncap::harness::{rendezvous_batch, RendezvousBatch};
use dtncap::ScenarioParams;

/// Frozen from a 40-run fit on this scenario (largest observed value -0.56).
const STAGE_TWO_C: f64 = 0.5;

#[test]
fn dense_network_delivers_and_stage_two_stays_short() {
    let s = ScenarioParams::new(6000, 600.0, 10.0, 1.0, 5.0, 0.0).unwrap();
    let mut batch = RendezvousBatch::new(s, 0.5, 12, 1, 150.0);
    batch.settings = RendezvousSettings::default();
    let records = rendezvous_batch(&batch).unwrap();
    let delivered: Vec<_> = records.iter().filter(|r| r.outcome.delivered).collect();
    assert!(delivered.len() >= 3, "{} delivered", delivered.len());
    for rec in &delivered {
        let o = &rec.outcome;
        let r = o.r;
        assert!((o.t1 + o.t2 + o.t3 - o.arrival_time).abs() < 1e-9 * o.arrival_time.max(1.0));
        assert!(o.t1 >= 0.0 && o.t2 >= 0.0 && o.t3 >= 0.0);
        assert!(o.hops >= 1);
        let cap = (r + STAGE_TWO_C * (r * s.range()).sqrt()) / s.speed();
        assert!(o.t2 <= cap, "seed {}: t2 {} > {cap}", rec.seed, o.t2);
    }
}
