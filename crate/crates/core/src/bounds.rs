//! Analytical guarantee checks tying the three computed quantities together:
//! the online policy's makespan, the complete-information optimum, and the
//! optimum of the release-free relaxation.
//!
//! All five checks are theorems for zero pick times, so a false check on a
//! zero-pick instance is a solver or simulator bug, never bad data. The
//! slack constant `u` is the full-coverage traversal time of the layout: a
//! picker can always fall back to one sweep of the whole warehouse, so
//! restarting after the last arrival costs at most that.
//!
//! Everything compares in exact integer arithmetic; ratios are reduced
//! fractions, never floats.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ciopt::{lower_bounds, solve_ciopt, SolverBudget, Unsolved};
use crate::geometry::{GeometryError, Layout};
use crate::instance::{Instance, PolicyKind};
use crate::reopt::simulate;

#[derive(Debug, Error)]
pub enum AuditError {
    /// The guarantees are proven for instantaneous picks; auditing an
    /// instance with pick time would silently weaken them.
    #[error("bound checks need zero pick time, this instance picks in {0} ticks")]
    NonzeroPickTime(u64),
    #[error("order {order_id} has {items} items; this analysis needs single-item orders")]
    MultiItemOrder { order_id: u32, items: usize },
    #[error(transparent)]
    Unsolved(#[from] Unsolved),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// An exact reduced fraction `num/den`, ordered by cross-multiplication.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    /// Reduced `num/den`; `None` for a zero denominator.
    pub fn new(num: u64, den: u64) -> Option<Ratio> {
        if den == 0 {
            return None;
        }
        let g = gcd(num, den).max(1);
        Some(Ratio { num: num / g, den: den / g })
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let left = u128::from(self.num) * u128::from(other.den);
        let right = u128::from(other.num) * u128::from(self.den);
        left.cmp(&right)
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// The five guarantee checks. Each is `true` when the inequality holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundChecks {
    /// Online makespan is at most a full restart after the last arrival:
    /// `reopt <= r_n + ciopt_zero_release + u`.
    pub reopt_within_restart_bound: bool,
    /// The release-free optimum packs batches no better than fully:
    /// `ciopt_zero_release >= ceil(sum of isolated order makespans / c)`.
    pub makespan_packing_lower_bound: bool,
    /// Releases only delay: `ciopt >= max(r_n, ciopt_zero_release)`.
    pub release_lower_bound: bool,
    /// Additive-slack envelope: `reopt <= 2 * ciopt + u`.
    pub asymptotic_ratio_bound: bool,
    /// Multiplicative envelope: `reopt <= 2.5 * ciopt` for the
    /// non-interventionist pushcart, `reopt <= 4 * ciopt` otherwise.
    pub strict_ratio_bound: bool,
}

impl BoundChecks {
    pub fn all_hold(&self) -> bool {
        self.reopt_within_restart_bound
            && self.makespan_packing_lower_bound
            && self.release_lower_bound
            && self.asymptotic_ratio_bound
            && self.strict_ratio_bound
    }
}

/// The audited quantities and every check verdict for one run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Human-readable instance label from its provenance.
    pub instance: String,
    pub system: PolicyKind,
    pub reopt_ticks: u64,
    pub ciopt_ticks: u64,
    pub ciopt_zero_release_ticks: u64,
    /// The slack constant `u`: full-coverage traversal time in ticks.
    pub slack_ticks: u64,
    pub last_arrival_ticks: u64,
    /// Packing lower bound on the release-free optimum, in ticks.
    pub packing_ticks: u64,
    /// Exact `reopt / ciopt`; absent only for empty instances.
    pub ratio: Option<Ratio>,
    pub checks: BoundChecks,
}

/// The slack constant for a layout: its full-coverage traversal walk
/// converted to ticks.
pub fn slack_ticks(layout: &Layout) -> u64 {
    layout.traversal_bound_lengths() * u64::from(layout.walk_ticks_per_length())
}

/// Evaluates all five checks from already-computed exact values. The
/// instance must have zero pick time; the inputs must come from exact
/// solves, not fallbacks, for the verdicts to mean anything.
pub fn audit(
    instance: &Instance,
    layout: &Layout,
    system: PolicyKind,
    reopt_ticks: u64,
    ciopt_ticks: u64,
    ciopt_zero_release_ticks: u64,
) -> Result<BoundReport, AuditError> {
    if instance.pick_time_ticks != 0 {
        return Err(AuditError::NonzeroPickTime(instance.pick_time_ticks));
    }
    let u = slack_ticks(layout);
    let r_n = instance.arrivals_ticks.last().copied().unwrap_or(0);
    let packing = lower_bounds(instance, layout, system)?.packing_ticks;

    let reopt = u128::from(reopt_ticks);
    let ciopt = u128::from(ciopt_ticks);
    let ciopt0 = u128::from(ciopt_zero_release_ticks);
    let checks = BoundChecks {
        reopt_within_restart_bound: reopt <= u128::from(r_n) + ciopt0 + u128::from(u),
        makespan_packing_lower_bound: ciopt_zero_release_ticks >= packing,
        release_lower_bound: ciopt_ticks >= r_n.max(ciopt_zero_release_ticks),
        asymptotic_ratio_bound: reopt <= 2 * ciopt + u128::from(u),
        strict_ratio_bound: match system {
            PolicyKind::PcartN => 2 * reopt <= 5 * ciopt,
            PolicyKind::Pcart | PolicyKind::Robot => reopt <= 4 * ciopt,
        },
    };
    Ok(BoundReport {
        instance: instance.label(),
        system,
        reopt_ticks,
        ciopt_ticks,
        ciopt_zero_release_ticks,
        slack_ticks: u,
        last_arrival_ticks: r_n,
        packing_ticks: packing,
        ratio: Ratio::new(reopt_ticks, ciopt_ticks),
        checks,
    })
}

/// Convenience wrapper: simulates the policy, solves the optimum and its
/// release-free relaxation, then audits.
pub fn audit_run(
    instance: &Instance,
    layout: &Layout,
    system: PolicyKind,
    budget: &SolverBudget,
) -> Result<BoundReport, AuditError> {
    if instance.pick_time_ticks != 0 {
        return Err(AuditError::NonzeroPickTime(instance.pick_time_ticks));
    }
    let reopt = simulate(instance, layout, system, budget)?.objective_ticks;
    let ciopt = solve_ciopt(instance, layout, system, budget)?.objective_ticks;
    let mut relaxed = instance.clone();
    relaxed.arrivals_ticks = vec![0; relaxed.order_count()];
    let ciopt0 = solve_ciopt(&relaxed, layout, system, budget)?.objective_ticks;
    audit(instance, layout, system, reopt, ciopt, ciopt0)
}

/// One point of a single-item robot series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub order_count: usize,
    pub reopt_ticks: u64,
    pub ciopt_ticks: u64,
    pub last_arrival_ticks: u64,
    /// `reopt * r_n <= (r_n + u) * ciopt`: since `ciopt >= r_n`, the ratio
    /// never exceeds `(r_n + u) / r_n`. Trivially true when `r_n = 0`.
    pub within_slack_bound: bool,
}

impl RatioPoint {
    pub fn ratio(&self) -> Option<Ratio> {
        Ratio::new(self.reopt_ticks, self.ciopt_ticks)
    }
}

/// Robot runs over single-item orders behave like an online traveling
/// salesman with release dates; this evaluates a series of such instances
/// for trend inspection, checking each against the arrival-slack
/// consistency bound.
pub fn single_item_asymptotics(
    instances: &[Instance],
    budget: &SolverBudget,
) -> Result<Vec<RatioPoint>, AuditError> {
    let mut points = Vec::with_capacity(instances.len());
    for instance in instances {
        for order in &instance.orders {
            if order.slots.len() != 1 {
                return Err(AuditError::MultiItemOrder {
                    order_id: order.id,
                    items: order.slots.len(),
                });
            }
        }
        let layout = instance.build_layout()?;
        let reopt = simulate(instance, &layout, PolicyKind::Robot, budget)?.objective_ticks;
        let ciopt = solve_ciopt(instance, &layout, PolicyKind::Robot, budget)?.objective_ticks;
        let r_n = instance.arrivals_ticks.last().copied().unwrap_or(0);
        let u = slack_ticks(&layout);
        let within = u128::from(reopt) * u128::from(r_n)
            <= (u128::from(r_n) + u128::from(u)) * u128::from(ciopt);
        points.push(RatioPoint {
            order_count: instance.order_count(),
            reopt_ticks: reopt,
            ciopt_ticks: ciopt,
            last_arrival_ticks: r_n,
            within_slack_bound: within,
        });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GridSpec, LayoutSpec, Point, SlotId, VerticalSpan};
    use crate::instance::{gen_pcartn_unfortunate, illustrative_fixture, Order};

    fn fixture_report(system: PolicyKind) -> BoundReport {
        let fixture = illustrative_fixture();
        let layout = fixture.build_layout().unwrap();
        audit_run(&fixture, &layout, system, &SolverBudget::desk()).unwrap()
    }

    #[test]
    fn fixture_audits_clean_for_all_systems() {
        let expected = [
            (PolicyKind::PcartN, 100, 88, Ratio { num: 25, den: 22 }),
            (PolicyKind::Pcart, 90, 88, Ratio { num: 45, den: 44 }),
            (PolicyKind::Robot, 54, 52, Ratio { num: 27, den: 26 }),
        ];
        for (system, reopt, ciopt, ratio) in expected {
            let report = fixture_report(system);
            assert!(report.checks.all_hold(), "{system:?}: {:?}", report.checks);
            assert_eq!(report.reopt_ticks, reopt);
            assert_eq!(report.ciopt_ticks, ciopt);
            assert_eq!(report.ratio, Some(ratio));
            assert_eq!(report.last_arrival_ticks, 10);
        }
    }

    #[test]
    fn nonzero_pick_time_is_refused() {
        let mut fixture = illustrative_fixture();
        fixture.pick_time_ticks = 40;
        let layout = fixture.build_layout().unwrap();
        let err = audit_run(&fixture, &layout, PolicyKind::Pcart, &SolverBudget::desk());
        assert!(matches!(err, Err(AuditError::NonzeroPickTime(40))));
    }

    fn line_instance(picks: &[(i64, u64)], capacity: u32) -> Instance {
        Instance {
            layout: LayoutSpec::Grid(GridSpec {
                vertical_spans: vec![VerticalSpan { x: 0, y_min: 0, y_max: 10 }],
                horizontal_spans: vec![],
                depot: Point::new(0, 0),
                pick_points: picks.iter().map(|&(y, _)| Point::new(0, y)).collect(),
                walk_ticks_per_length: 1,
            }),
            capacity,
            pick_time_ticks: 0,
            orders: (0..picks.len() as u32)
                .map(|i| Order { id: i + 1, slots: vec![SlotId(i)] })
                .collect(),
            arrivals_ticks: picks.iter().map(|&(_, r)| r).collect(),
            provenance: None,
        }
    }

    #[test]
    fn matching_policy_and_optimum_audit_to_ratio_one() {
        let inst = line_instance(&[(4, 0)], 1);
        let layout = inst.build_layout().unwrap();
        for system in PolicyKind::ALL {
            let report = audit_run(&inst, &layout, system, &SolverBudget::desk()).unwrap();
            assert_eq!(report.reopt_ticks, report.ciopt_ticks);
            assert_eq!(report.ratio, Some(Ratio { num: 1, den: 1 }));
            assert!(report.checks.all_hold());
        }
    }

    #[test]
    fn unfortunate_fixture_approaches_the_strict_envelope() {
        // With a large square and unit slack terms the ratio lands just
        // under 2.5 while the strict check still holds.
        let inst = gen_pcartn_unfortunate(25, 25, 1, 1).unwrap();
        let layout = inst.build_layout().unwrap();
        let report = audit_run(&inst, &layout, PolicyKind::PcartN, &SolverBudget::desk()).unwrap();
        let ratio = report.ratio.unwrap();
        assert!(ratio > Ratio::new(24, 10).unwrap(), "{ratio}");
        assert!(ratio < Ratio::new(25, 10).unwrap(), "{ratio}");
        assert!(report.checks.strict_ratio_bound);
        assert!(report.checks.all_hold());
    }

    #[test]
    fn ratios_compare_exactly() {
        let a = Ratio::new(100, 88).unwrap();
        let b = Ratio::new(90, 88).unwrap();
        assert_eq!(a, Ratio { num: 25, den: 22 });
        assert!(a > b);
        assert_eq!(Ratio::new(3, 0), None);
        assert_eq!(Ratio::new(0, 7), Some(Ratio { num: 0, den: 1 }));
        let ordered = [Ratio::new(1, 1), Ratio::new(45, 44), Ratio::new(25, 22)];
        assert!(ordered.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn single_item_series_rejects_multi_item_orders() {
        let mut inst = line_instance(&[(4, 0), (6, 2)], 2);
        inst.orders[1].slots = vec![SlotId(0), SlotId(1)];
        let err = single_item_asymptotics(&[inst], &SolverBudget::desk());
        assert!(matches!(err, Err(AuditError::MultiItemOrder { order_id: 2, items: 2 })));
    }

    #[test]
    fn lone_late_order_hits_the_closed_form() {
        // One item three steps out, released at 7: the policy waits and
        // walks (7 + 3); the oracle pre-positions and picks at the release
        // (max(7, 3)).
        let inst = line_instance(&[(3, 7)], 1);
        let points = single_item_asymptotics(&[inst], &SolverBudget::desk()).unwrap();
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].reopt_ticks, 10);
        assert_eq!(points[0].ciopt_ticks, 7);
        assert!(points[0].within_slack_bound);
    }

    #[test]
    fn simultaneous_release_collapses_the_series_to_ratio_one() {
        let inst = line_instance(&[(2, 0), (5, 0), (8, 0)], 2);
        let points = single_item_asymptotics(&[inst], &SolverBudget::desk()).unwrap();
        assert_eq!(points[0].reopt_ticks, points[0].ciopt_ticks);
        assert_eq!(points[0].ratio(), Ratio::new(1, 1));
        assert!(points[0].within_slack_bound);
    }

    #[test]
    fn fixture_slack_is_the_traversal_time() {
        let fixture = illustrative_fixture();
        let layout = fixture.build_layout().unwrap();
        assert_eq!(slack_ticks(&layout), layout.traversal_bound_lengths());
        let report = fixture_report(PolicyKind::Pcart);
        assert_eq!(report.slack_ticks, slack_ticks(&layout));
    }
}
