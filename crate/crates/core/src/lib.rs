//! Exact solvers, online reoptimization policies, and an experiment harness
//! for order batching, sequencing, and routing in picker warehouses.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`] builds unit-grid street graphs for rectangular warehouses
//!   and hand-drawn corridor layouts, with exact all-pairs distances.
//! * [`routing`] routes a single batch of picks optimally (earliest finish
//!   with release-time waiting) via a subset dynamic program.
//! * [`instance`] defines orders, arrivals, serialization, the stochastic
//!   warehouse settings, and the adversarial instance families.
//! * [`ciopt`] computes complete-information optima over whole instances and
//!   the constrained replans used by the online policies.
//! * [`reopt`] simulates the three online policies event by event.
//! * [`bounds`] audits analytical bounds on solved instances.
//! * [`harness`] runs experiment grids, writes CSV/markdown results, and
//!   verifies the adversarial families against their closed forms.

pub mod bounds;
pub mod ciopt;
pub mod geometry;
pub mod harness;
pub mod instance;
pub mod reopt;
pub mod routing;

pub use ciopt::{SolverBudget, Unsolved, UnsolvedReason};
pub use geometry::{Layout, LayoutSpec, NodeId, Point, SlotId};
pub use instance::{Instance, Order, PolicyKind};
