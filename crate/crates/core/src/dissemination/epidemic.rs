use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;

use crate::contacts::{ContactStream, ContactTrace};
use crate::{Error, Result};

use super::{CapacityQuery, InformedLog};

/// Heap key ordered by time, then node id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Label(pub f64, pub usize);

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Capacity-constrained epidemic broadcast over a contact stream.
///
/// Label-setting in increasing informed time: a node's time is final when it
/// leaves the queue, and every contact it has is scanned from that time on,
/// including contacts already in progress. The receive time
/// `max(t_begin, t_sender) + y/G` is non-decreasing in `t_sender`, so the
/// first settlement is the earliest one.
pub fn run_epidemic(stream: &ContactStream, n: usize, query: &CapacityQuery, horizon: f64) -> Result<InformedLog> {
    if query.source_id >= n {
        return Err(Error::NodeOutOfRange {
            index: query.source_id,
            n,
        });
    }
    if query.emit_time > horizon {
        return Err(Error::Validation(format!(
            "emit time {} is past the horizon {horizon}",
            query.emit_time
        )));
    }
    let theta = query.thickness();
    let incidence = stream.incidence(n);
    let mut time = vec![f64::INFINITY; n];
    let mut predecessor = vec![None; n];
    let mut witness = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    time[query.source_id] = query.emit_time;
    heap.push(Reverse(Label(query.emit_time, query.source_id)));

    while let Some(Reverse(Label(t, u))) = heap.pop() {
        if settled[u] {
            continue;
        }
        settled[u] = true;
        for &idx in &incidence[u] {
            let c = &stream.contacts[idx];
            if c.t_end < t + theta {
                continue;
            }
            let w = c.other(u);
            if settled[w] {
                continue;
            }
            let recv = c.t_begin.max(t) + theta;
            if recv <= c.t_end && recv <= horizon && recv < time[w] {
                time[w] = recv;
                predecessor[w] = Some(u);
                witness[w] = Some(idx);
                heap.push(Reverse(Label(recv, w)));
            }
        }
    }

    Ok(InformedLog {
        query: *query,
        informed_time: time,
        predecessor,
        witness,
        informed_pos: vec![None; n],
        distance_from_origin: vec![f64::INFINITY; n],
    })
}

/// [`run_epidemic`] on a recorded trace, with positions and distances filled in.
pub fn run_epidemic_on_trace(trace: &ContactTrace, query: &CapacityQuery) -> Result<InformedLog> {
    let mut log = run_epidemic(&trace.stream, trace.n(), query, trace.horizon)?;
    log.locate(&trace.trajectories);
    Ok(log)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub node: usize,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {}: {}", self.node, self.reason)
    }
}

impl std::error::Error for Violation {}

/// Re-checks every informed node against the raw contact stream: it must have
/// a predecessor informed earlier, and some contact with that predecessor
/// must hold a full `y/G` transmission that starts once the predecessor is
/// informed and ends by the node's recorded time. Predecessor chains must
/// lead back to the source.
pub fn verify_journeys(
    log: &InformedLog,
    stream: &ContactStream,
    query: &CapacityQuery,
) -> std::result::Result<(), Violation> {
    let n = log.n();
    let theta = query.thickness();
    let fail = |node: usize, reason: String| Err(Violation { node, reason });
    let src = query.source_id;
    if src >= n {
        return fail(src, "source out of range".into());
    }
    if log.informed_time[src] != query.emit_time {
        return fail(src, format!("source informed at {} instead of {}", log.informed_time[src], query.emit_time));
    }
    if log.predecessor[src].is_some() {
        return fail(src, "source has a predecessor".into());
    }
    for node in 0..n {
        if node == src {
            continue;
        }
        let t = log.informed_time[node];
        if !t.is_finite() {
            if log.predecessor[node].is_some() {
                return fail(node, "uninformed node has a predecessor".into());
            }
            continue;
        }
        let Some(pred) = log.predecessor[node] else {
            return fail(node, "informed without a predecessor".into());
        };
        if pred >= n {
            return fail(node, format!("predecessor {pred} out of range"));
        }
        let tp = log.informed_time[pred];
        if !(tp <= t) {
            return fail(node, format!("predecessor {pred} informed at {tp}, after {t}"));
        }
        let slack = 1e-9 * t.abs().max(1.0);
        let qualifying = stream.iter().any(|c| {
            c.involves(node) && c.involves(pred) && node != pred && {
                let start = c.t_begin.max(tp);
                start + theta <= c.t_end + slack && start + theta <= t + slack
            }
        });
        if !qualifying {
            return fail(
                node,
                format!("no contact with predecessor {pred} holds a {theta} s transmission ending by {t}"),
            );
        }
    }
    for node in 0..n {
        let mut cur = node;
        let mut steps = 0;
        while log.informed_time[cur].is_finite() && cur != src {
            match log.predecessor[cur] {
                Some(p) => cur = p,
                None => break,
            }
            steps += 1;
            if steps > n {
                return fail(node, "predecessor chain does not reach the source".into());
            }
        }
    }
    Ok(())
}
