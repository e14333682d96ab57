//! Proportionally fair allocations.
//!
//! With unit budgets the PF allocation is exactly a Fisher market equilibrium,
//! so every solver reports prices next to the allocation. Only utilities and
//! prices are unique; which of several PF allocations comes back is a fixed but
//! arbitrary choice of each solver.

mod equilibrium;
mod general;
mod two_bidder;
mod two_item;

pub use equilibrium::{certify_prices, verify_equilibrium, EquilibriumReport, Violation, ViolationKind};
pub use general::{solve_pf, solve_pf_with, SolverOptions};
pub use two_bidder::solve_pf_two_bidder;
pub use two_item::{solve_pf_two_item, RatioBidder, Role, TwoItemPf};

use crate::error::Result;
use crate::model::{Allocation, Instance};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PfSolution {
    pub allocation: Allocation,
    pub prices: Vec<Rational>,
    pub utilities: Vec<Rational>,
    /// Whether the prices were confirmed as an exact equilibrium.
    pub certified: bool,
}

/// Exact PF by the closed-form solver when one applies, else the general solver.
pub fn solve_pf_exact(inst: &Instance) -> Result<PfSolution> {
    match inst.shape() {
        (2, _) => solve_pf_two_bidder(inst),
        (_, 2) => Ok(solve_pf_two_item(inst)?.1),
        _ => solve_pf(inst, general::DEFAULT_TOL),
    }
}
