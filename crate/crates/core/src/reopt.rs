//! Online policy simulation: replay order arrivals against a picking policy
//! that re-solves the remaining problem exactly at its decision points.
//!
//! Three policies share one event loop:
//!
//! * `PcartN` (non-interventionist pushcart): replans only at the depot,
//!   either when a batch ends with orders waiting or when an arrival ends an
//!   idle wait. A batch in progress always runs to completion.
//! * `Pcart` (interventionist pushcart): additionally replans at every
//!   arrival, wherever the picker stands.
//! * `Robot`: replans at every arrival; batches end at their last pick, the
//!   next one chains from there, and the picker idles in place.
//!
//! When a replan interrupts a batch, orders with at least one picked item
//! are committed: they keep their cart bin and must finish in the next
//! plan's first batch, which starts at the picker's exact position (possibly
//! mid-edge). Unstarted orders of the old batch return to the pool. An
//! arrival landing strictly inside a pick interval waits for that pick: the
//! item counts as picked and the replan clock moves to the pick's end.
//! Arrivals sharing a tick are admitted together and trigger a single
//! replan; a batch finishing exactly at an arrival tick completes before the
//! replan sees the world.
//!
//! Every step is deterministic, so two runs of the same instance produce
//! identical traces.

use serde::{Deserialize, Serialize};

use crate::ciopt::{solve_plan, Plan, PlanItem, PlanRequest, SolverBudget, Unsolved};
use crate::geometry::{Layout, NodeId};
use crate::instance::{Instance, PolicyKind};
use crate::routing::{Position, TimedRoute};

/// One entry of the queue-length series: how many orders were arrived but
/// neither begun nor finished just after this order was admitted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueSample {
    pub order_idx: usize,
    pub queue_len: usize,
}

/// Everything a simulation run observed, in chronological order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationTrace {
    /// Policy makespan: depot return of the last batch for pushcarts, last
    /// pick for robots.
    pub objective_ticks: u64,
    pub events: Vec<Event>,
    pub queue_at_arrival: Vec<QueueSample>,
}

/// A timestamped simulation event. Ticks never decrease along the trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Arrival {
        tick: u64,
        order_idx: usize,
    },
    /// A fresh exact plan. `batches` lists the planned batches as order
    /// index sets; the first contains every committed order.
    Replan {
        tick: u64,
        position: Position,
        committed_order_idxs: Vec<usize>,
        pending_order_idxs: Vec<usize>,
        batches: Vec<Vec<usize>>,
        objective_ticks: u64,
    },
    Pick {
        tick: u64,
        order_idx: usize,
        item_idx: usize,
        node: NodeId,
    },
    BatchComplete {
        tick: u64,
        order_idxs: Vec<usize>,
        position: Position,
    },
    IdleStart {
        tick: u64,
        position: Position,
    },
    IdleEnd {
        tick: u64,
    },
    Done {
        tick: u64,
    },
}

impl Event {
    pub fn tick(&self) -> u64 {
        match *self {
            Event::Arrival { tick, .. }
            | Event::Replan { tick, .. }
            | Event::Pick { tick, .. }
            | Event::BatchComplete { tick, .. }
            | Event::IdleStart { tick, .. }
            | Event::IdleEnd { tick }
            | Event::Done { tick } => tick,
        }
    }
}

/// Runs `kind` against the instance's arrival sequence. Each replan is an
/// exact solve under `budget`; the first budget breach aborts the run.
pub fn simulate(
    instance: &Instance,
    layout: &Layout,
    kind: PolicyKind,
    budget: &SolverBudget,
) -> Result<SimulationTrace, Unsolved> {
    Sim::new(instance, layout, kind, budget).run()
}

/// The per-arrival queue-length series of a run: how congested the system
/// was each time an order arrived.
pub fn queue_probe(
    instance: &Instance,
    layout: &Layout,
    kind: PolicyKind,
    budget: &SolverBudget,
) -> Result<Vec<QueueSample>, Unsolved> {
    Ok(simulate(instance, layout, kind, budget)?.queue_at_arrival)
}

// ---------------------------------------------------------------------------
// Walking a planned route tick by tick
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
struct EdgeStep {
    a: NodeId,
    b: NodeId,
    /// Ticks already covered along `a -> b` when the step begins; nonzero
    /// only for the partial first edge of a mid-edge start.
    offset0: u32,
    depart: u64,
    arrive: u64,
}

/// One pick of a script. The picker occupies `node` from `arrive`, starts
/// the pick at `pick_start` (later than `arrive` only when waiting for a
/// release), and finishes at `done`. `task` indexes the routed task slice,
/// which for planned batches is the batch's item list.
#[derive(Clone, Copy, Debug)]
pub struct PickStep {
    pub task: usize,
    pub node: NodeId,
    pub arrive: u64,
    pub pick_start: u64,
    pub done: u64,
}

#[derive(Clone, Copy, Debug)]
enum Step {
    Edge(EdgeStep),
    Pick(PickStep),
}

/// A planned batch route expanded into its exact walk: a contiguous
/// sequence of single-edge moves and pick intervals. This makes the
/// picker's position and picked-item set at any tick reproducible, which
/// interrupting policies rely on.
pub struct RouteScript {
    start_ticks: u64,
    finish_ticks: u64,
    start_position: Position,
    end_position: Position,
    steps: Vec<Step>,
    walk: u32,
}

impl RouteScript {
    pub fn new(layout: &Layout, start: Position, route: &TimedRoute, pick_ticks: u64) -> Self {
        let walk = layout.walk_ticks_per_length();
        let mut steps = Vec::new();
        let mut cursor = start;
        let mut t = route.start_ticks;
        for visit in &route.visits {
            walk_to(layout, &mut steps, &mut cursor, &mut t, visit.node);
            debug_assert_eq!(t, visit.arrival_ticks, "script walk matches the route schedule");
            steps.push(Step::Pick(PickStep {
                task: visit.task,
                node: visit.node,
                arrive: visit.arrival_ticks,
                pick_start: visit.done_ticks - pick_ticks,
                done: visit.done_ticks,
            }));
            t = visit.done_ticks;
        }
        walk_to(layout, &mut steps, &mut cursor, &mut t, route.end_node);
        debug_assert_eq!(t, route.finish_ticks, "script ends when the route does");
        RouteScript {
            start_ticks: route.start_ticks,
            finish_ticks: route.finish_ticks,
            start_position: normalize(start, walk),
            end_position: Position::At(route.end_node),
            steps,
            walk,
        }
    }

    pub fn start_ticks(&self) -> u64 {
        self.start_ticks
    }

    pub fn finish_ticks(&self) -> u64 {
        self.finish_ticks
    }

    pub fn end_position(&self) -> Position {
        self.end_position
    }

    pub fn picks(&self) -> impl Iterator<Item = &PickStep> {
        self.steps.iter().filter_map(|s| match s {
            Step::Pick(p) => Some(p),
            Step::Edge(_) => None,
        })
    }

    /// Exact position at `tick`. Before the start this is the start
    /// position; at or past the finish it is the route's end node.
    pub fn position_at(&self, tick: u64) -> Position {
        if tick <= self.start_ticks {
            return self.start_position;
        }
        if tick >= self.finish_ticks {
            return self.end_position;
        }
        for step in &self.steps {
            match *step {
                Step::Edge(e) if tick <= e.arrive => {
                    let off = e.offset0 + (tick - e.depart) as u32;
                    return normalize(
                        Position::OnEdge { from: e.a, to: e.b, ticks_from: off },
                        self.walk,
                    );
                }
                Step::Pick(p) if tick <= p.done => return Position::At(p.node),
                _ => {}
            }
        }
        self.end_position
    }
}

/// Appends the edge-by-edge walk from `cursor` to `target`, following the
/// deterministic shortest path; from mid-edge the shorter completion wins,
/// falling back to the `from` endpoint on a tie.
fn walk_to(
    layout: &Layout,
    steps: &mut Vec<Step>,
    cursor: &mut Position,
    t: &mut u64,
    target: NodeId,
) {
    let walk = u64::from(layout.walk_ticks_per_length());
    let mut at = match *cursor {
        Position::At(v) => v,
        Position::OnEdge { from, to, ticks_from } => {
            let back = u64::from(ticks_from) + layout.travel_ticks(from, target);
            let fwd = u64::from(layout.walk_ticks_per_length() - ticks_from)
                + layout.travel_ticks(to, target);
            if back <= fwd {
                steps.push(Step::Edge(EdgeStep {
                    a: to,
                    b: from,
                    offset0: layout.walk_ticks_per_length() - ticks_from,
                    depart: *t,
                    arrive: *t + u64::from(ticks_from),
                }));
                *t += u64::from(ticks_from);
                from
            } else {
                steps.push(Step::Edge(EdgeStep {
                    a: from,
                    b: to,
                    offset0: ticks_from,
                    depart: *t,
                    arrive: *t + (walk - u64::from(ticks_from)),
                }));
                *t += walk - u64::from(ticks_from);
                to
            }
        }
    };
    while at != target {
        let next = layout.next_step(at, target);
        steps.push(Step::Edge(EdgeStep {
            a: at,
            b: next,
            offset0: 0,
            depart: *t,
            arrive: *t + walk,
        }));
        *t += walk;
        at = next;
    }
    *cursor = Position::At(target);
}

/// Canonical form: endpoint offsets become node positions and edges are
/// oriented from the smaller node id, so equal physical spots compare equal.
fn normalize(position: Position, walk: u32) -> Position {
    match position {
        Position::At(v) => Position::At(v),
        Position::OnEdge { from, to, ticks_from } => {
            if ticks_from == 0 {
                Position::At(from)
            } else if ticks_from == walk {
                Position::At(to)
            } else if from < to {
                Position::OnEdge { from, to, ticks_from }
            } else {
                Position::OnEdge { from: to, to: from, ticks_from: walk - ticks_from }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// The event loop
// ---------------------------------------------------------------------------

struct Sim<'a> {
    inst: &'a Instance,
    layout: &'a Layout,
    kind: PolicyKind,
    budget: &'a SolverBudget,
    events: Vec<Event>,
    queue: Vec<QueueSample>,
    picked: Vec<Vec<bool>>,
    completed: Vec<bool>,
    arrived: Vec<bool>,
    /// Arrivals grouped by tick; a group is admitted, and replanned on, as
    /// one event.
    groups: Vec<(u64, Vec<usize>)>,
    next_group: usize,
    clock: u64,
    position: Position,
    plan: Option<Plan>,
    next_batch: usize,
}

impl<'a> Sim<'a> {
    fn new(
        inst: &'a Instance,
        layout: &'a Layout,
        kind: PolicyKind,
        budget: &'a SolverBudget,
    ) -> Self {
        let mut groups: Vec<(u64, Vec<usize>)> = Vec::new();
        for (idx, &tick) in inst.arrivals_ticks.iter().enumerate() {
            match groups.last_mut() {
                Some((t, members)) if *t == tick => members.push(idx),
                _ => groups.push((tick, vec![idx])),
            }
        }
        Sim {
            inst,
            layout,
            kind,
            budget,
            events: Vec::new(),
            queue: Vec::new(),
            picked: inst.orders.iter().map(|o| vec![false; o.slots.len()]).collect(),
            completed: vec![false; inst.order_count()],
            arrived: vec![false; inst.order_count()],
            groups,
            next_group: 0,
            clock: 0,
            position: Position::At(layout.depot()),
            plan: None,
            next_batch: 0,
        }
    }

    fn run(mut self) -> Result<SimulationTrace, Unsolved> {
        loop {
            // Admit arrivals that are due right now (for instance at a batch
            // boundary); interrupting policies replan on them immediately,
            // the non-interventionist pushcart lets them queue.
            let admitted = self.admit_due(self.clock);
            if admitted && self.kind != PolicyKind::PcartN {
                self.do_replan()?;
            }

            let has_batch = self.plan.as_ref().is_some_and(|p| self.next_batch < p.batches.len());
            if has_batch {
                self.execute_batch()?;
                continue;
            }

            if !self.pending_idxs().is_empty() {
                // The non-interventionist pushcart starts its next plan here
                // after a depot visit or an idle wait. Interrupting policies
                // land here too when an arrival coincided with a batch end:
                // the completion was processed first, so the replan sees the
                // finished state.
                self.do_replan()?;
                continue;
            }

            if self.next_group < self.groups.len() {
                let t = self.groups[self.next_group].0;
                debug_assert!(t > self.clock, "due arrivals were admitted above");
                self.events.push(Event::IdleStart { tick: self.clock, position: self.position });
                self.events.push(Event::IdleEnd { tick: t });
                self.clock = t;
                continue;
            }

            self.events.push(Event::Done { tick: self.clock });
            return Ok(SimulationTrace {
                objective_ticks: self.clock,
                events: self.events,
                queue_at_arrival: self.queue,
            });
        }
    }

    /// True if the order is in a batch in progress: something of it has
    /// been picked but its batch has not completed.
    fn commenced(&self, order: usize) -> bool {
        !self.completed[order] && self.picked[order].iter().any(|&p| p)
    }

    fn pending_idxs(&self) -> Vec<usize> {
        (0..self.inst.order_count())
            .filter(|&o| self.arrived[o] && !self.completed[o] && !self.commenced(o))
            .collect()
    }

    /// Admits every arrival group due at or before `tick`; returns whether
    /// any was admitted.
    fn admit_due(&mut self, tick: u64) -> bool {
        let mut any = false;
        while self.next_group < self.groups.len() && self.groups[self.next_group].0 <= tick {
            self.admit_group();
            any = true;
        }
        any
    }

    fn admit_group(&mut self) {
        let (tick, members) = self.groups[self.next_group].clone();
        self.next_group += 1;
        for &o in &members {
            self.arrived[o] = true;
            self.events.push(Event::Arrival { tick, order_idx: o });
        }
        let queue_len = self.pending_idxs().len();
        for &o in &members {
            self.queue.push(QueueSample { order_idx: o, queue_len });
        }
    }

    fn order_items(&self, order: usize) -> Vec<PlanItem> {
        let release = self.inst.arrivals_ticks[order];
        self.inst.orders[order]
            .slots
            .iter()
            .enumerate()
            .map(|(item_idx, &slot)| PlanItem {
                order_idx: order,
                item_idx,
                node: self.layout.slot_access(slot),
                release_ticks: release,
            })
            .collect()
    }

    /// Solves the remaining problem exactly from the current state and
    /// installs the plan.
    fn do_replan(&mut self) -> Result<(), Unsolved> {
        let mut committed_orders = Vec::new();
        let mut committed = Vec::new();
        let mut pending = Vec::new();
        for o in 0..self.inst.order_count() {
            if !self.arrived[o] || self.completed[o] {
                continue;
            }
            let items = self.order_items(o);
            if self.commenced(o) {
                committed_orders.push(o);
                committed.extend(items.into_iter().filter(|item| !self.picked[o][item.item_idx]));
            } else {
                pending.push((o, items));
            }
        }
        let pending_order_idxs: Vec<usize> = pending.iter().map(|&(o, _)| o).collect();
        let request = PlanRequest {
            layout: self.layout,
            cart: self.kind.cart(),
            capacity: self.inst.capacity,
            pick_time_ticks: self.inst.pick_time_ticks,
            clock_ticks: self.clock,
            position: self.position,
            committed_orders: committed_orders.clone(),
            committed,
            pending,
        };
        let plan = solve_plan(&request, self.budget)?;
        self.events.push(Event::Replan {
            tick: self.clock,
            position: self.position,
            committed_order_idxs: committed_orders,
            pending_order_idxs,
            batches: plan.batches.iter().map(|b| b.order_idxs.clone()).collect(),
            objective_ticks: plan.objective_ticks,
        });
        self.plan = Some(plan);
        self.next_batch = 0;
        Ok(())
    }

    /// Runs the next planned batch, either to completion or up to the first
    /// interrupting arrival.
    fn execute_batch(&mut self) -> Result<(), Unsolved> {
        let plan = self.plan.as_ref().expect("caller checked");
        let batch = &plan.batches[self.next_batch];
        debug_assert_eq!(batch.route.start_ticks, self.clock, "batches chain without gaps");
        let script =
            RouteScript::new(self.layout, self.position, &batch.route, self.inst.pick_time_ticks);
        let items = batch.items.clone();
        let order_idxs = batch.order_idxs.clone();

        let interrupt = if self.kind == PolicyKind::PcartN {
            None
        } else {
            self.groups.get(self.next_group).map(|&(t, _)| t).filter(|&t| t < script.finish_ticks())
        };

        if let Some(trigger) = interrupt {
            // Picks already finished happen as scheduled; a pick straddling
            // the trigger completes first and pushes the replan clock to
            // its end. If that was the batch's last act, the batch has in
            // fact completed and the arrival is handled from its end state.
            let mut straddle: Option<PickStep> = None;
            let mut resume = trigger;
            for p in script.picks() {
                if p.done <= trigger {
                    continue;
                }
                if p.pick_start < trigger {
                    straddle = Some(*p);
                    resume = p.done;
                }
                break;
            }
            if resume >= script.finish_ticks() {
                return self.complete_batch(&script, &items, &order_idxs);
            }
            for p in script.picks() {
                if p.done <= trigger {
                    let item = items[p.task];
                    self.picked[item.order_idx][item.item_idx] = true;
                    self.events.push(Event::Pick {
                        tick: p.done,
                        order_idx: item.order_idx,
                        item_idx: item.item_idx,
                        node: p.node,
                    });
                }
            }
            if let Some(p) = straddle {
                let item = items[p.task];
                self.picked[item.order_idx][item.item_idx] = true;
                // Arrivals inside the straddling pick come first in the
                // trace; the pick event lands at its completion tick.
                self.admit_due(p.done.saturating_sub(1));
                self.events.push(Event::Pick {
                    tick: p.done,
                    order_idx: item.order_idx,
                    item_idx: item.item_idx,
                    node: p.node,
                });
            }
            self.admit_due(resume);
            self.clock = resume;
            self.position = script.position_at(resume);
            return self.do_replan();
        }

        // Uninterrupted run. Only the non-interventionist pushcart can see
        // arrivals here; they are admitted in tick order, after any pick
        // sharing their tick.
        debug_assert!(
            self.kind == PolicyKind::PcartN
                || self
                    .groups
                    .get(self.next_group)
                    .is_none_or(|&(t, _)| t >= script.finish_ticks())
        );
        self.complete_batch(&script, &items, &order_idxs)
    }

    fn complete_batch(
        &mut self,
        script: &RouteScript,
        items: &[PlanItem],
        order_idxs: &[usize],
    ) -> Result<(), Unsolved> {
        for p in script.picks() {
            self.admit_due(p.done.saturating_sub(1));
            let item = items[p.task];
            debug_assert!(!self.picked[item.order_idx][item.item_idx], "items picked once");
            self.picked[item.order_idx][item.item_idx] = true;
            self.events.push(Event::Pick {
                tick: p.done,
                order_idx: item.order_idx,
                item_idx: item.item_idx,
                node: p.node,
            });
        }
        self.admit_due(script.finish_ticks().saturating_sub(1));
        for &o in order_idxs {
            debug_assert!(self.picked[o].iter().all(|&p| p), "completed batches are fully picked");
            self.completed[o] = true;
        }
        self.events.push(Event::BatchComplete {
            tick: script.finish_ticks(),
            order_idxs: order_idxs.to_vec(),
            position: script.end_position(),
        });
        self.clock = script.finish_ticks();
        self.position = script.end_position();
        self.next_batch += 1;
        if self.kind == PolicyKind::PcartN {
            // The non-interventionist pushcart re-solves at every depot
            // visit, so the rest of the plan is discarded.
            self.plan = None;
        }
        Ok(())
    }
}
