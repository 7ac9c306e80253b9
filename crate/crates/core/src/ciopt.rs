//! Exact batching and sequencing: a dynamic program over order subsets whose
//! inner evaluations are the exact batch routes of [`crate::routing`].
//!
//! The same engine answers two questions. Solving a whole instance from the
//! depot at tick 0 with true arrival times as release times gives the
//! complete-information optimum (the planner knows all arrivals but picks may
//! not happen before them). Solving from an arbitrary position and clock with
//! some items already committed gives the replanning step of the online
//! policies, where all considered orders have already arrived.
//!
//! Pushcart plans need one value per order subset (every batch starts and
//! ends at the depot, so the picker's location between batches is fixed).
//! Robot plans track (subset, end node) because a batch ends at its last
//! pick and the next batch starts there.
//!
//! Determinism: subsets are processed in ascending mask order, candidate
//! batches in lexicographic order of their sorted order indices, robot
//! source and target nodes in ascending id order, and a stored plan is only
//! replaced on strict improvement, so ties always keep the first candidate
//! in this ordering.

use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Layout, NodeId};
use crate::instance::{Instance, PolicyKind};
use crate::routing::{
    BatchRouter, Cart, PickTask, Position, RouteEnd, RouteStart, TimedRoute, DEFAULT_ITEM_LIMIT,
};

/// Resource limits for one solver call. The defaults match the benchmark
/// protocol: 300 s of wall clock, 8 GiB of state, at most 18 items in any
/// routed batch.
#[derive(Clone, Debug)]
pub struct SolverBudget {
    pub wall_clock: Duration,
    pub memory_bytes: u64,
    pub batch_item_limit: u32,
}

impl SolverBudget {
    pub fn desk() -> Self {
        SolverBudget {
            wall_clock: Duration::from_secs(300),
            memory_bytes: 8 << 30,
            batch_item_limit: DEFAULT_ITEM_LIMIT,
        }
    }
}

impl Default for SolverBudget {
    fn default() -> Self {
        Self::desk()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnsolvedReason {
    TimeLimit,
    MemoryLimit,
    BatchTooLarge,
}

impl fmt::Display for UnsolvedReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnsolvedReason::TimeLimit => "wall-clock limit exceeded",
            UnsolvedReason::MemoryLimit => "memory limit exceeded",
            UnsolvedReason::BatchTooLarge => "batch exceeds the routing item limit",
        })
    }
}

/// The solver gave up within its budget; instances hitting this are reported
/// as unsolved, never approximated.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{reason}: {detail}")]
pub struct Unsolved {
    pub reason: UnsolvedReason,
    pub detail: String,
}

fn unsolved(reason: UnsolvedReason, detail: impl Into<String>) -> Unsolved {
    Unsolved { reason, detail: detail.into() }
}

/// One item of a plan: which order it belongs to, its index within that
/// order, where it is picked, and when it becomes available.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanItem {
    pub order_idx: usize,
    pub item_idx: usize,
    pub node: NodeId,
    pub release_ticks: u64,
}

impl PlanItem {
    fn task(&self) -> PickTask {
        PickTask { node: self.node, release_ticks: self.release_ticks }
    }
}

/// One batch of a plan: the orders it completes, its items in canonical
/// order (the route's visit indices point into `items`), and the exact
/// schedule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedBatch {
    pub order_idxs: Vec<usize>,
    pub items: Vec<PlanItem>,
    pub route: TimedRoute,
}

/// A complete plan: batches in execution order; the objective is the last
/// batch's finish (depot return for pushcarts, last pick for robots).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub batches: Vec<PlannedBatch>,
    pub objective_ticks: u64,
}

/// A planning problem for [`solve_plan`]: finish the committed work and all
/// `pending` orders, starting from `position` at `clock_ticks`.
///
/// `committed_orders` are orders of the batch in progress with at least one
/// item already picked; they must complete in the first batch and each
/// occupies one of its capacity slots even if nothing of theirs remains to
/// pick (their bins are in use until the batch ends). `committed` lists
/// their still-unpicked items. The first batch starts at the current
/// position and may absorb pending orders into the remaining free slots;
/// `pending` orders may otherwise be placed anywhere. For a full
/// complete-information solve the position is the depot, the clock is 0,
/// nothing is committed, and every order is pending with its arrival as
/// release time.
pub struct PlanRequest<'a> {
    pub layout: &'a Layout,
    pub cart: Cart,
    pub capacity: u32,
    pub pick_time_ticks: u64,
    pub clock_ticks: u64,
    pub position: Position,
    pub committed_orders: Vec<usize>,
    pub committed: Vec<PlanItem>,
    pub pending: Vec<(usize, Vec<PlanItem>)>,
}

/// Complete-information optimum of an instance: the planner sees all orders
/// and their arrival times at tick 0 but cannot pick an item before it
/// arrives.
pub fn solve_ciopt(
    instance: &Instance,
    layout: &Layout,
    system: PolicyKind,
    budget: &SolverBudget,
) -> Result<Plan, Unsolved> {
    let depot = layout.depot();
    let pending = (0..instance.order_count())
        .map(|idx| {
            let release = instance.arrivals_ticks[idx];
            let items = instance.orders[idx]
                .slots
                .iter()
                .enumerate()
                .map(|(item_idx, &slot)| PlanItem {
                    order_idx: idx,
                    item_idx,
                    node: layout.slot_access(slot),
                    release_ticks: release,
                })
                .collect();
            (idx, items)
        })
        .collect();
    let request = PlanRequest {
        layout,
        cart: system.cart(),
        capacity: instance.capacity,
        pick_time_ticks: instance.pick_time_ticks,
        clock_ticks: 0,
        position: Position::At(depot),
        committed_orders: Vec::new(),
        committed: Vec::new(),
        pending,
    };
    solve_plan(&request, budget)
}

/// Exact minimum-makespan plan for a [`PlanRequest`].
pub fn solve_plan(request: &PlanRequest, budget: &SolverBudget) -> Result<Plan, Unsolved> {
    Engine::new(request, budget)?.run()
}

const SEED: u64 = u64::MAX;

struct Engine<'a> {
    req: &'a PlanRequest<'a>,
    budget: &'a SolverBudget,
    started: Instant,
    router: BatchRouter,
    /// Pending orders sorted by order index; bit `p` of a mask refers to
    /// `pend[p]`.
    pend: Vec<(usize, Vec<PlanItem>)>,
    committed_orders: Vec<usize>,
    committed: Vec<PlanItem>,
    /// Capacity left in the first batch after the committed orders.
    free_slots: usize,
    depot: NodeId,
    tasks: Vec<PickTask>,
    finishes: Vec<u64>,
}

impl<'a> Engine<'a> {
    fn new(req: &'a PlanRequest<'a>, budget: &'a SolverBudget) -> Result<Self, Unsolved> {
        let mut pend = req.pending.clone();
        pend.sort_by_key(|(idx, _)| *idx);
        let mut committed = req.committed.clone();
        committed.sort_by_key(|item| (item.order_idx, item.item_idx));

        let mut committed_orders = req.committed_orders.clone();
        committed_orders.sort_unstable();
        committed_orders.dedup();
        debug_assert!(
            committed.iter().all(|i| committed_orders.contains(&i.order_idx)),
            "every committed item belongs to a committed order"
        );
        let free_slots = (req.capacity as usize).saturating_sub(committed_orders.len());

        // Reject upfront if any batch the DP will enumerate could exceed the
        // routing limit; skipping such batches silently would forfeit
        // exactness.
        let mut sizes: Vec<usize> = pend.iter().map(|(_, items)| items.len()).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        let largest: usize = sizes.iter().take(req.capacity as usize).sum();
        let first_batch_largest = committed.len() + sizes.iter().take(free_slots).sum::<usize>();
        let worst = largest.max(first_batch_largest);
        if worst > budget.batch_item_limit as usize {
            return Err(unsolved(
                UnsolvedReason::BatchTooLarge,
                format!(
                    "a candidate batch holds {worst} items, over the limit of {}",
                    budget.batch_item_limit
                ),
            ));
        }

        Ok(Engine {
            req,
            budget,
            started: Instant::now(),
            router: BatchRouter::new(),
            pend,
            committed_orders,
            committed,
            free_slots,
            depot: req.layout.depot(),
            tasks: Vec::new(),
            finishes: Vec::new(),
        })
    }

    fn check_time(&self) -> Result<(), Unsolved> {
        if self.started.elapsed() > self.budget.wall_clock {
            return Err(unsolved(
                UnsolvedReason::TimeLimit,
                format!("exceeded {:?}", self.budget.wall_clock),
            ));
        }
        Ok(())
    }

    fn check_memory(&self, state_count: u128, bytes_per_state: u128) -> Result<(), Unsolved> {
        let needed = state_count * bytes_per_state;
        if needed > u128::from(self.budget.memory_bytes) {
            return Err(unsolved(
                UnsolvedReason::MemoryLimit,
                format!(
                    "state table needs about {needed} bytes, over the {} limit",
                    self.budget.memory_bytes
                ),
            ));
        }
        Ok(())
    }

    fn run(self) -> Result<Plan, Unsolved> {
        if self.pend.is_empty() {
            return self.finish_without_pending();
        }
        match self.req.cart {
            Cart::Pushcart => self.run_pushcart(),
            Cart::Robot => self.run_robot(),
        }
    }

    /// Fill the scratch task list with the committed items (optionally) and
    /// the items of the given pending orders.
    fn build_tasks(&mut self, with_committed: bool, batch: &[usize]) {
        self.tasks.clear();
        if with_committed {
            self.tasks.extend(self.committed.iter().map(PlanItem::task));
        }
        for &p in batch {
            self.tasks.extend(self.pend[p].1.iter().map(PlanItem::task));
        }
    }

    fn batch_items(&self, with_committed: bool, batch: &[usize]) -> Vec<PlanItem> {
        let mut items = Vec::new();
        if with_committed {
            items.extend(self.committed.iter().copied());
        }
        for &p in batch {
            items.extend(self.pend[p].1.iter().copied());
        }
        items
    }

    fn batch_order_idxs(&self, with_committed: bool, batch: &[usize]) -> Vec<usize> {
        let mut idxs: Vec<usize> = Vec::new();
        if with_committed {
            idxs.extend(self.committed_orders.iter().copied());
        }
        idxs.extend(batch.iter().map(|&p| self.pend[p].0));
        idxs.sort_unstable();
        idxs
    }

    /// No pending orders: the plan is at most the one committed batch.
    fn finish_without_pending(mut self) -> Result<Plan, Unsolved> {
        let limit = self.budget.batch_item_limit;
        let pick = self.req.pick_time_ticks;
        if self.committed_orders.is_empty() {
            let objective = match self.req.cart {
                Cart::Pushcart => {
                    self.req.clock_ticks
                        + self.req.position.travel_ticks_to(self.req.layout, self.depot)
                }
                Cart::Robot => self.req.clock_ticks,
            };
            return Ok(Plan { batches: Vec::new(), objective_ticks: objective });
        }
        self.build_tasks(true, &[]);
        let end = match self.req.cart {
            Cart::Pushcart => RouteEnd::ReturnTo(self.depot),
            Cart::Robot => RouteEnd::FreeEnd,
        };
        let route = self
            .router
            .route(
                self.req.layout,
                &self.tasks,
                RouteStart::At(self.req.position),
                self.req.clock_ticks,
                end,
                None,
                pick,
                limit,
            )
            .expect("batch size checked upfront");
        let objective = route.finish_ticks;
        Ok(Plan {
            batches: vec![PlannedBatch {
                order_idxs: self.batch_order_idxs(true, &[]),
                items: self.batch_items(true, &[]),
                route,
            }],
            objective_ticks: objective,
        })
    }

    fn run_pushcart(mut self) -> Result<Plan, Unsolved> {
        let n = self.pend.len();
        self.check_memory(1u128 << n, 16)?;
        let size = 1usize << n;
        let full = size - 1;
        let mut dp = vec![u64::MAX; size];
        let mut par = vec![SEED; size];
        let limit = self.budget.batch_item_limit;
        let pick = self.req.pick_time_ticks;

        // First-batch seeds: the committed items plus any lexicographic
        // choice of pending orders that fits, routed from the current
        // position back to the depot.
        let seed_cap = self.free_slots;
        let mut seeds: Vec<Vec<usize>> = vec![Vec::new()];
        collect_subsets_lex(n, seed_cap, &mut seeds);
        for seed in seeds {
            self.check_time()?;
            self.build_tasks(true, &seed);
            let finish = self
                .router
                .finish_return(
                    self.req.layout,
                    &self.tasks,
                    RouteStart::At(self.req.position),
                    self.req.clock_ticks,
                    self.depot,
                    pick,
                    limit,
                )
                .expect("batch size checked upfront");
            let mask = mask_of(&seed);
            if finish < dp[mask] {
                dp[mask] = finish;
                par[mask] = SEED;
            }
        }

        // Later batches run depot to depot.
        let cap = self.req.capacity as usize;
        let mut batch = Vec::with_capacity(cap);
        let mut avail = Vec::with_capacity(n);
        for mask in 0..size {
            if dp[mask] == u64::MAX {
                continue;
            }
            if mask & 0xFFF == 0 {
                self.check_time()?;
            }
            let start_clock = dp[mask];
            avail.clear();
            avail.extend((0..n).filter(|p| mask & (1 << p) == 0));
            batch.clear();
            self.visit_batches(&avail, cap, 0, &mut batch, &mut |eng, chosen| {
                eng.build_tasks(false, chosen);
                let finish = eng
                    .router
                    .finish_return(
                        eng.req.layout,
                        &eng.tasks,
                        RouteStart::At(Position::At(eng.depot)),
                        start_clock,
                        eng.depot,
                        pick,
                        limit,
                    )
                    .expect("batch size checked upfront");
                let target = mask | mask_of(chosen);
                if finish < dp[target] {
                    dp[target] = finish;
                    par[target] = mask_of(chosen) as u64;
                }
            });
        }

        let objective = dp[full];
        debug_assert_ne!(objective, u64::MAX, "every subset is reachable");

        // Walk the parent chain back to the seed, then replay forward.
        let mut batches_rev: Vec<(usize, bool)> = Vec::new(); // (batch mask, is seed)
        let mut cur = full;
        loop {
            if par[cur] == SEED {
                batches_rev.push((cur, true));
                break;
            }
            let bm = par[cur] as usize;
            batches_rev.push((bm, false));
            cur &= !bm;
        }
        batches_rev.reverse();

        let mut batches = Vec::with_capacity(batches_rev.len());
        let mut done_mask = 0usize;
        let mut clock = self.req.clock_ticks;
        for (i, &(bm, is_seed)) in batches_rev.iter().enumerate() {
            let chosen: Vec<usize> = (0..n).filter(|p| bm & (1 << p) != 0).collect();
            self.build_tasks(is_seed, &chosen);
            let start = if i == 0 {
                RouteStart::At(self.req.position)
            } else {
                RouteStart::At(Position::At(self.depot))
            };
            let route = self
                .router
                .route(
                    self.req.layout,
                    &self.tasks,
                    start,
                    clock,
                    RouteEnd::ReturnTo(self.depot),
                    None,
                    pick,
                    limit,
                )
                .expect("batch size checked upfront");
            done_mask |= bm;
            debug_assert_eq!(route.finish_ticks, dp[done_mask]);
            clock = route.finish_ticks;
            batches.push(PlannedBatch {
                order_idxs: self.batch_order_idxs(is_seed, &chosen),
                items: self.batch_items(is_seed, &chosen),
                route,
            });
        }
        Ok(Plan { batches, objective_ticks: objective })
    }

    fn run_robot(mut self) -> Result<Plan, Unsolved> {
        let n = self.pend.len();
        let node_count = self.req.layout.node_count();
        self.check_memory((1u128 << n) * node_count as u128, 21)?;
        let size = (1usize << n) * node_count;
        let full = (1usize << n) - 1;
        let mut dp = vec![u64::MAX; size];
        let mut par_batch = vec![SEED; size];
        let mut par_node = vec![u32::MAX; size];
        let mut par_last = vec![0u8; size];
        let limit = self.budget.batch_item_limit;
        let pick = self.req.pick_time_ticks;

        // First-batch seeds from the current position; an empty first batch
        // only makes sense when committed orders force one.
        let mut seeds: Vec<Vec<usize>> = Vec::new();
        if !self.committed_orders.is_empty() {
            seeds.push(Vec::new());
        }
        collect_subsets_lex(n, self.free_slots, &mut seeds);
        let mut finishes = std::mem::take(&mut self.finishes);
        for seed in seeds {
            self.check_time()?;
            self.build_tasks(true, &seed);
            self.router
                .free_end_finishes(
                    self.req.layout,
                    &self.tasks,
                    RouteStart::At(self.req.position),
                    self.req.clock_ticks,
                    pick,
                    limit,
                    &mut finishes,
                )
                .expect("batch size checked upfront");
            let mask = mask_of(&seed);
            for (last, &finish) in finishes.iter().enumerate() {
                let state = mask * node_count + self.tasks[last].node.0 as usize;
                if finish < dp[state] {
                    dp[state] = finish;
                    par_batch[state] = SEED;
                    par_node[state] = u32::MAX;
                    par_last[state] = last as u8;
                }
            }
        }

        let cap = self.req.capacity as usize;
        let mut batch = Vec::with_capacity(cap);
        let mut avail = Vec::with_capacity(n);
        for mask in 0..=full {
            self.check_time()?;
            avail.clear();
            avail.extend((0..n).filter(|p| mask & (1 << p) == 0));
            for v in 0..node_count {
                let state = mask * node_count + v;
                let start_clock = dp[state];
                if start_clock == u64::MAX {
                    continue;
                }
                batch.clear();
                let from = Position::At(NodeId(v as u32));
                self.visit_batches(&avail, cap, 0, &mut batch, &mut |eng, chosen| {
                    eng.build_tasks(false, chosen);
                    eng.router
                        .free_end_finishes(
                            eng.req.layout,
                            &eng.tasks,
                            RouteStart::At(from),
                            start_clock,
                            pick,
                            limit,
                            &mut finishes,
                        )
                        .expect("batch size checked upfront");
                    let target_mask = mask | mask_of(chosen);
                    for (last, &finish) in finishes.iter().enumerate() {
                        let target = target_mask * node_count + eng.tasks[last].node.0 as usize;
                        if finish < dp[target] {
                            dp[target] = finish;
                            par_batch[target] = mask_of(chosen) as u64;
                            par_node[target] = v as u32;
                            par_last[target] = last as u8;
                        }
                    }
                });
            }
        }

        // Answer: best end node of the full subset, smallest node id on ties.
        let mut best: Option<(u64, usize)> = None;
        for v in 0..node_count {
            let val = dp[full * node_count + v];
            if val != u64::MAX && best.map_or(true, |(b, _)| val < b) {
                best = Some((val, v));
            }
        }
        let (objective, mut cur_node) =
            best.expect("every subset is reachable for a non-empty robot plan");

        // Parent walk, then forward replay with the stored last item forcing
        // each batch's end.
        let mut chain: Vec<(usize, bool, usize)> = Vec::new(); // (batch mask, is seed, last item)
        let mut cur_mask = full;
        loop {
            let state = cur_mask * node_count + cur_node;
            let last = par_last[state] as usize;
            if par_batch[state] == SEED {
                chain.push((cur_mask, true, last));
                break;
            }
            let bm = par_batch[state] as usize;
            chain.push((bm, false, last));
            cur_node = par_node[state] as usize;
            cur_mask &= !bm;
        }
        chain.reverse();

        let mut batches = Vec::with_capacity(chain.len());
        let mut done_mask = 0usize;
        let mut clock = self.req.clock_ticks;
        let mut at = self.req.position;
        for (i, &(bm, is_seed, last)) in chain.iter().enumerate() {
            let chosen: Vec<usize> = (0..n).filter(|p| bm & (1 << p) != 0).collect();
            self.build_tasks(is_seed, &chosen);
            let start = if i == 0 { self.req.position } else { at };
            let route = self
                .router
                .route(
                    self.req.layout,
                    &self.tasks,
                    RouteStart::At(start),
                    clock,
                    RouteEnd::FreeEnd,
                    Some(last),
                    pick,
                    limit,
                )
                .expect("batch size checked upfront");
            done_mask |= bm;
            debug_assert_eq!(
                route.finish_ticks,
                dp[done_mask * node_count + route.end_node.0 as usize]
            );
            clock = route.finish_ticks;
            at = Position::At(route.end_node);
            batches.push(PlannedBatch {
                order_idxs: self.batch_order_idxs(is_seed, &chosen),
                items: self.batch_items(is_seed, &chosen),
                route,
            });
        }
        self.finishes = finishes;
        Ok(Plan { batches, objective_ticks: objective })
    }

    /// Visit nonempty subsets of `avail` with at most `cap` elements, in
    /// lexicographic order of their sorted index tuples.
    fn visit_batches(
        &mut self,
        avail: &[usize],
        cap: usize,
        from: usize,
        batch: &mut Vec<usize>,
        f: &mut impl FnMut(&mut Self, &[usize]),
    ) {
        for t in from..avail.len() {
            batch.push(avail[t]);
            f(self, batch);
            if batch.len() < cap {
                self.visit_batches(avail, cap, t + 1, batch, f);
            }
            batch.pop();
        }
    }
}

fn mask_of(chosen: &[usize]) -> usize {
    chosen.iter().fold(0usize, |m, &p| m | (1 << p))
}

/// All subsets of `{0, …, n-1}` with 1 to `cap` elements, appended in
/// lexicographic order of their sorted tuples.
fn collect_subsets_lex(n: usize, cap: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(n: usize, cap: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for t in from..n {
            cur.push(t);
            out.push(cur.clone());
            if cur.len() < cap {
                rec(n, cap, t + 1, cur, out);
            }
            cur.pop();
        }
    }
    if cap == 0 {
        return;
    }
    let mut cur = Vec::new();
    rec(n, cap, 0, &mut cur, out);
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

/// Independent exhaustive optimum: enumerate ordered partitions of the
/// orders into batches of at most `c`, and all item permutations within each
/// batch. Exponential; intended for cross-checking the DP on instances with
/// few orders and items.
pub fn brute_force_ciopt(instance: &Instance, layout: &Layout, system: PolicyKind) -> u64 {
    let items: Vec<Vec<(NodeId, u64)>> = instance
        .orders
        .iter()
        .enumerate()
        .map(|(idx, order)| {
            order
                .slots
                .iter()
                .map(|&slot| (layout.slot_access(slot), instance.arrivals_ticks[idx]))
                .collect()
        })
        .collect();
    let n = items.len();
    if n == 0 {
        return 0;
    }
    let cap = instance.capacity as usize;
    let pick = instance.pick_time_ticks;
    let depot = layout.depot();
    let full = (1usize << n) - 1;

    fn perms(
        tasks: &[(NodeId, u64)],
        layout: &Layout,
        start: NodeId,
        clock: u64,
        pick: u64,
        chosen: &mut Vec<usize>,
        used: &mut Vec<bool>,
        visit: &mut impl FnMut(u64, NodeId),
    ) {
        if chosen.len() == tasks.len() {
            let mut t = clock;
            let mut at = start;
            for &i in chosen.iter() {
                let (node, release) = tasks[i];
                t = (t + layout.travel_ticks(at, node)).max(release) + pick;
                at = node;
            }
            visit(t, at);
            return;
        }
        for i in 0..tasks.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            chosen.push(i);
            perms(tasks, layout, start, clock, pick, chosen, used, visit);
            chosen.pop();
            used[i] = false;
        }
    }

    fn best_batch(
        tasks: &[(NodeId, u64)],
        layout: &Layout,
        start: NodeId,
        clock: u64,
        pick: u64,
        cart: Cart,
        depot: NodeId,
    ) -> Vec<(NodeId, u64)> {
        // Earliest finish per possible end node (a single entry for
        // pushcarts, which always end at the depot).
        let mut ends: Vec<(NodeId, u64)> = Vec::new();
        let mut chosen = Vec::new();
        let mut used = vec![false; tasks.len()];
        perms(tasks, layout, start, clock, pick, &mut chosen, &mut used, &mut |finish, at| {
            let (node, total) = match cart {
                Cart::Pushcart => (depot, finish + layout.travel_ticks(at, depot)),
                Cart::Robot => (at, finish),
            };
            match ends.iter_mut().find(|(e, _)| *e == node) {
                Some((_, best)) => *best = (*best).min(total),
                None => ends.push((node, total)),
            }
        });
        ends
    }

    fn rec(
        remaining: usize,
        clock: u64,
        at: NodeId,
        items: &[Vec<(NodeId, u64)>],
        layout: &Layout,
        cap: usize,
        pick: u64,
        cart: Cart,
        depot: NodeId,
    ) -> u64 {
        if remaining == 0 {
            return clock;
        }
        let mut best = u64::MAX;
        let mut sub = remaining;
        while sub > 0 {
            if sub.count_ones() as usize <= cap {
                let tasks: Vec<(NodeId, u64)> = (0..items.len())
                    .filter(|o| sub & (1 << o) != 0)
                    .flat_map(|o| items[o].iter().copied())
                    .collect();
                for (end, finish) in best_batch(&tasks, layout, at, clock, pick, cart, depot) {
                    let rest =
                        rec(remaining & !sub, finish, end, items, layout, cap, pick, cart, depot);
                    best = best.min(rest);
                }
            }
            sub = (sub - 1) & remaining;
        }
        best
    }

    rec(full, 0, depot, &items, layout, cap, pick, system.cart(), depot)
}

// ---------------------------------------------------------------------------
// Lower bounds
// ---------------------------------------------------------------------------

/// Two proven lower bounds on the complete-information optimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LowerBounds {
    /// No plan can finish before the last order arrives.
    pub last_arrival_ticks: u64,
    /// Packing bound on the release-free relaxation: each batch serves at
    /// most `c` orders and costs at least each member's isolated travel
    /// time, so `c * makespan >= sum of M(o)`.
    pub packing_ticks: u64,
}

/// Computes both lower bounds; `M(o)` uses the cart's isolated-order tour
/// (depot-anchored for pushcarts, free endpoints for robots), travel only.
pub fn lower_bounds(
    instance: &Instance,
    layout: &Layout,
    system: PolicyKind,
) -> Result<LowerBounds, Unsolved> {
    let walk = u64::from(layout.walk_ticks_per_length());
    let mut sum_ticks: u64 = 0;
    for order in &instance.orders {
        let nodes: Vec<NodeId> = order.slots.iter().map(|&s| layout.slot_access(s)).collect();
        let lengths = crate::routing::order_makespan_lengths(
            layout,
            &nodes,
            system.cart(),
            DEFAULT_ITEM_LIMIT,
        )
        .map_err(|e| unsolved(UnsolvedReason::BatchTooLarge, e.to_string()))?;
        sum_ticks += lengths * walk;
    }
    let c = u64::from(instance.capacity);
    Ok(LowerBounds {
        last_arrival_ticks: instance.arrivals_ticks.last().copied().unwrap_or(0),
        packing_ticks: sum_ticks.div_ceil(c),
    })
}
