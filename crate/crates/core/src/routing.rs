//! Exact single-batch routing: an earliest-finish Held-Karp dynamic program
//! over item subsets with release-time waiting.
//!
//! The recursion is
//!
//! ```text
//! t({i}, i) = max(start_time + d(start, i), release_i) + pick_time
//! t(S, i)   = min over p in S minus {i} of
//!             max(t(S minus {i}, p) + d(p, i), release_i) + pick_time
//! ```
//!
//! A closed route adds the return leg to the chosen end node; an open route
//! reports the earliest finish per candidate last item. Waiting happens only
//! at item locations: shifting a mid-edge wait forward to the next item never
//! changes the earliest finish, so the DP needs no explicit waiting states.
//!
//! Every argmin is deterministic: candidates tie-break on the smallest
//! predecessor item index, then the smallest item index. Item indices follow
//! the caller's task order, which order construction keeps canonical
//! (ascending order id, then the order's own item sequence).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Layout, NodeId};

/// Default cap on items per routed batch; the DP scratch scales as
/// `2^items * items`.
pub const DEFAULT_ITEM_LIMIT: u32 = 18;

const NO_PRED: u8 = u8::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RouteError {
    #[error("batch of {items} items exceeds the inner routing limit of {limit}")]
    TooManyItems { items: usize, limit: u32 },
}

/// One pick to schedule: an access node plus the earliest tick the item may
/// be picked (its order's arrival).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PickTask {
    pub node: NodeId,
    pub release_ticks: u64,
}

/// Picker location, possibly mid-edge when a plan was interrupted while
/// walking. `ticks_from` counts elapsed ticks since leaving `from`
/// (`0 < ticks_from < walk_ticks_per_length`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Position {
    At(NodeId),
    OnEdge { from: NodeId, to: NodeId, ticks_from: u32 },
}

impl Position {
    /// Earliest travel time from this position to `target`, in ticks. From
    /// mid-edge the picker may continue or turn back.
    pub fn travel_ticks_to(&self, layout: &Layout, target: NodeId) -> u64 {
        match *self {
            Position::At(v) => layout.travel_ticks(v, target),
            Position::OnEdge { from, to, ticks_from } => {
                let back = u64::from(ticks_from) + layout.travel_ticks(from, target);
                let fwd = u64::from(layout.walk_ticks_per_length() - ticks_from)
                    + layout.travel_ticks(to, target);
                back.min(fwd)
            }
        }
    }
}

/// Where a batch route begins: at a concrete position, or nowhere in
/// particular (used for free-endpoint order makespans).
#[derive(Clone, Copy, Debug)]
pub enum RouteStart {
    At(Position),
    Free,
}

impl RouteStart {
    fn travel_ticks_to(&self, layout: &Layout, target: NodeId) -> u64 {
        match self {
            RouteStart::At(p) => p.travel_ticks_to(layout, target),
            RouteStart::Free => 0,
        }
    }
}

/// How a batch route ends: walking back to a fixed node (pushcart depot
/// return) or stopping at the last pick (robot).
#[derive(Clone, Copy, Debug)]
pub enum RouteEnd {
    ReturnTo(NodeId),
    FreeEnd,
}

/// One scheduled pick of a computed route.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Visit {
    /// Index into the routed task slice.
    pub task: usize,
    pub node: NodeId,
    pub arrival_ticks: u64,
    /// Pick completion: `max(arrival, release) + pick_time`.
    pub done_ticks: u64,
}

/// A fully scheduled batch route.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedRoute {
    pub start_ticks: u64,
    pub visits: Vec<Visit>,
    pub end_node: NodeId,
    pub finish_ticks: u64,
}

/// Reusable scratch for the subset DP; one router per solver keeps the hot
/// path allocation-free.
#[derive(Default)]
pub struct BatchRouter {
    f: Vec<u64>,
    pred: Vec<u8>,
}

impl BatchRouter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Earliest finish of a batch that must end back at `ret`; value only.
    pub fn finish_return(
        &mut self,
        layout: &Layout,
        tasks: &[PickTask],
        start: RouteStart,
        start_ticks: u64,
        ret: NodeId,
        pick_ticks: u64,
        limit: u32,
    ) -> Result<u64, RouteError> {
        match tasks {
            [] => Ok(start_ticks + start.travel_ticks_to(layout, ret)),
            [a] => {
                let done = pick_one(layout, *a, &start, start_ticks, pick_ticks);
                Ok(done + layout.travel_ticks(a.node, ret))
            }
            [a, b] => {
                let (fa, fb) = pick_two(layout, *a, *b, &start, start_ticks, pick_ticks);
                Ok((fa + layout.travel_ticks(b.node, ret))
                    .min(fb + layout.travel_ticks(a.node, ret)))
            }
            _ => {
                self.run_dp(layout, tasks, &start, start_ticks, pick_ticks, limit)?;
                let m = tasks.len();
                let full = (1usize << m) - 1;
                let mut best = u64::MAX;
                for i in 0..m {
                    let total = self.f[full * m + i] + layout.travel_ticks(tasks[i].node, ret);
                    best = best.min(total);
                }
                Ok(best)
            }
        }
    }

    /// Earliest finish per candidate last item for an open-ended batch;
    /// `out[i]` is the finish when task `i` is picked last.
    pub fn free_end_finishes(
        &mut self,
        layout: &Layout,
        tasks: &[PickTask],
        start: RouteStart,
        start_ticks: u64,
        pick_ticks: u64,
        limit: u32,
        out: &mut Vec<u64>,
    ) -> Result<(), RouteError> {
        out.clear();
        match tasks {
            [] => Ok(()),
            [a] => {
                out.push(pick_one(layout, *a, &start, start_ticks, pick_ticks));
                Ok(())
            }
            [a, b] => {
                let (fa, fb) = pick_two(layout, *a, *b, &start, start_ticks, pick_ticks);
                // fa ends at b (a picked first), fb ends at a.
                out.push(fb);
                out.push(fa);
                Ok(())
            }
            _ => {
                self.run_dp(layout, tasks, &start, start_ticks, pick_ticks, limit)?;
                let m = tasks.len();
                let full = (1usize << m) - 1;
                out.extend((0..m).map(|i| self.f[full * m + i]));
                Ok(())
            }
        }
    }

    /// Full route with schedule and deterministic tie-breaking. For
    /// `FreeEnd` the overall-minimum finish is chosen; pass `forced_last` to
    /// reconstruct the route ending at a specific task instead (used when an
    /// outer solver has already fixed the end node).
    pub fn route(
        &mut self,
        layout: &Layout,
        tasks: &[PickTask],
        start: RouteStart,
        start_ticks: u64,
        end: RouteEnd,
        forced_last: Option<usize>,
        pick_ticks: u64,
        limit: u32,
    ) -> Result<TimedRoute, RouteError> {
        if tasks.is_empty() {
            let (end_node, finish) = match end {
                RouteEnd::ReturnTo(v) => (v, start_ticks + start.travel_ticks_to(layout, v)),
                RouteEnd::FreeEnd => match start {
                    RouteStart::At(Position::At(v)) => (v, start_ticks),
                    _ => panic!("an empty open-ended route needs a node position"),
                },
            };
            return Ok(TimedRoute {
                start_ticks,
                visits: Vec::new(),
                end_node,
                finish_ticks: finish,
            });
        }

        self.run_dp(layout, tasks, &start, start_ticks, pick_ticks, limit)?;
        let m = tasks.len();
        let full = (1usize << m) - 1;

        // Select the last item: smallest total, then smallest stored
        // predecessor index, then smallest item index.
        let last = match forced_last {
            Some(i) => i,
            None => {
                let mut best: Option<(u64, u8, usize)> = None;
                for i in 0..m {
                    let total = match end {
                        RouteEnd::ReturnTo(v) => {
                            self.f[full * m + i] + layout.travel_ticks(tasks[i].node, v)
                        }
                        RouteEnd::FreeEnd => self.f[full * m + i],
                    };
                    let key = (total, self.pred[full * m + i], i);
                    if best.map_or(true, |b| key < b) {
                        best = Some(key);
                    }
                }
                best.expect("non-empty batch").2
            }
        };

        // Backward walk over stored predecessors.
        let mut seq = Vec::with_capacity(m);
        let mut set = full;
        let mut cur = last;
        loop {
            seq.push(cur);
            let p = self.pred[set * m + cur];
            if p == NO_PRED {
                break;
            }
            set &= !(1usize << cur);
            cur = p as usize;
        }
        seq.reverse();
        debug_assert_eq!(seq.len(), m);

        // Forward replay to timestamps.
        let mut visits = Vec::with_capacity(m);
        let mut clock = start_ticks;
        let mut at: Option<NodeId> = None;
        for &i in &seq {
            let travel = match at {
                None => start.travel_ticks_to(layout, tasks[i].node),
                Some(prev) => layout.travel_ticks(prev, tasks[i].node),
            };
            let arrival = clock + travel;
            let done = arrival.max(tasks[i].release_ticks) + pick_ticks;
            visits.push(Visit {
                task: i,
                node: tasks[i].node,
                arrival_ticks: arrival,
                done_ticks: done,
            });
            clock = done;
            at = Some(tasks[i].node);
        }
        let last_node = tasks[last].node;
        let (end_node, finish) = match end {
            RouteEnd::ReturnTo(v) => (v, clock + layout.travel_ticks(last_node, v)),
            RouteEnd::FreeEnd => (last_node, clock),
        };
        debug_assert_eq!(clock, self.f[full * m + last]);
        Ok(TimedRoute { start_ticks, visits, end_node, finish_ticks: finish })
    }

    fn run_dp(
        &mut self,
        layout: &Layout,
        tasks: &[PickTask],
        start: &RouteStart,
        start_ticks: u64,
        pick_ticks: u64,
        limit: u32,
    ) -> Result<(), RouteError> {
        let m = tasks.len();
        if m as u32 > limit || m >= 64 {
            return Err(RouteError::TooManyItems { items: m, limit });
        }
        let size = (1usize << m) * m;
        self.f.clear();
        self.f.resize(size, u64::MAX);
        self.pred.clear();
        self.pred.resize(size, NO_PRED);

        for (i, t) in tasks.iter().enumerate() {
            let arrive = start_ticks + start.travel_ticks_to(layout, t.node);
            self.f[(1usize << i) * m + i] = arrive.max(t.release_ticks) + pick_ticks;
        }
        for set in 1..(1usize << m) {
            let base = set * m;
            for p in 0..m {
                if set & (1 << p) == 0 {
                    continue;
                }
                let fp = self.f[base + p];
                if fp == u64::MAX {
                    continue;
                }
                let mut rest = !set & ((1usize << m) - 1);
                while rest != 0 {
                    let i = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    let arrive = fp + layout.travel_ticks(tasks[p].node, tasks[i].node);
                    let cand = arrive.max(tasks[i].release_ticks) + pick_ticks;
                    let slot = (set | (1 << i)) * m + i;
                    // Strict improvement keeps the smallest predecessor on
                    // ties because p ascends.
                    if cand < self.f[slot] {
                        self.f[slot] = cand;
                        self.pred[slot] = p as u8;
                    }
                }
            }
        }
        Ok(())
    }
}

fn pick_one(
    layout: &Layout,
    t: PickTask,
    start: &RouteStart,
    start_ticks: u64,
    pick_ticks: u64,
) -> u64 {
    let arrive = start_ticks + start.travel_ticks_to(layout, t.node);
    arrive.max(t.release_ticks) + pick_ticks
}

/// Finishes of the two possible visit orders for a two-item batch:
/// returns `(finish picking a then b, finish picking b then a)`.
fn pick_two(
    layout: &Layout,
    a: PickTask,
    b: PickTask,
    start: &RouteStart,
    start_ticks: u64,
    pick_ticks: u64,
) -> (u64, u64) {
    let d = layout.travel_ticks(a.node, b.node);
    let done_a = pick_one(layout, a, start, start_ticks, pick_ticks);
    let done_b = pick_one(layout, b, start, start_ticks, pick_ticks);
    let ab = (done_a + d).max(b.release_ticks) + pick_ticks;
    let ba = (done_b + d).max(a.release_ticks) + pick_ticks;
    (ab, ba)
}

/// Cart hardware, which fixes how batch routes are anchored: pushcarts start
/// and end every batch at the depot, robot batches chain from wherever the
/// previous batch ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cart {
    Pushcart,
    Robot,
}

/// The isolated-order makespan `M(o)` in length units: for pushcarts the
/// optimal depot-anchored closed tour over the order's items; for robots the
/// optimal open path with both endpoints free (0 for a single item). Pick
/// times and releases are excluded; callers scale by walk speed as needed.
pub fn order_makespan_lengths(
    layout: &Layout,
    item_nodes: &[NodeId],
    cart: Cart,
    limit: u32,
) -> Result<u64, RouteError> {
    let tasks: Vec<PickTask> =
        item_nodes.iter().map(|&node| PickTask { node, release_ticks: 0 }).collect();
    let mut router = BatchRouter::new();
    let walk = u64::from(layout.walk_ticks_per_length());
    let ticks = match cart {
        Cart::Pushcart => {
            let depot = layout.depot();
            router.finish_return(
                layout,
                &tasks,
                RouteStart::At(Position::At(depot)),
                0,
                depot,
                0,
                limit,
            )?
        }
        Cart::Robot => {
            if tasks.len() <= 1 {
                return Ok(0);
            }
            let mut out = Vec::new();
            router.free_end_finishes(layout, &tasks, RouteStart::Free, 0, 0, limit, &mut out)?;
            out.into_iter().min().expect("non-empty batch")
        }
    };
    debug_assert_eq!(ticks % walk, 0, "zero-pick travel is a multiple of walk speed");
    Ok(ticks / walk)
}
