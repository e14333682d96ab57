//! Closed-form PF for two items.
//!
//! Item 0 is the "top" item and item 1 the "bottom" item. Rank bidders by how
//! much they prefer top (bottom value ascending, since rows are normalized).
//! If the first `k - 1` bidders buy only top, the `k`-th splits, and the rest
//! buy only bottom, then the `k`-th bidder spends
//! `x_k = (n - k + 1) - n * vbottom_k` on top. `x_k` drops by at least one per
//! rank, so the equilibrium is fixed by the last rank with `x_k >= 0`. When that
//! spend is fractional, the splitter is the ratio-defining bidder `R_b`, and her
//! valuations alone fix the price ratio.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{utilities, Allocation, Instance};
use crate::rational::{int, Rational};

use super::PfSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Top,
    Bottom,
    Ratio,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioBidder {
    pub bidder: usize,
    /// 1-based rank `k` in [`TwoItemPf::order`].
    pub rank: usize,
    /// Top value with bottom scaled to one.
    pub v: Rational,
    /// Spend on the top item, strictly between 0 and 1.
    pub x: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoItemPf {
    /// Bidders by decreasing scaled top value, ties by index.
    pub order: Vec<usize>,
    pub roles: Vec<Role>,
    pub ratio_bidder: Option<RatioBidder>,
    pub top_price: Rational,
    pub bottom_price: Rational,
}

impl TwoItemPf {
    pub fn bidders_with(&self, role: Role) -> impl Iterator<Item = usize> + '_ {
        self.order.iter().copied().filter(move |&i| self.roles[i] == role)
    }
}

fn spend_at_rank(n: usize, k: usize, bottom: &Rational) -> Rational {
    int((n - k + 1) as i64) - int(n as i64) * bottom
}

pub fn solve_pf_two_item(inst: &Instance) -> Result<(TwoItemPf, PfSolution)> {
    if inst.items() != 2 {
        return Err(Error::ShapeMismatch {
            mechanism: "two-item PF",
            requirement: "m=2",
        });
    }
    let n = inst.bidders();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| inst.value(a, 1).cmp(inst.value(b, 1)));

    // x_1 = n * vtop >= 0 always, so the search starts from a valid rank
    let ranks: Vec<usize> = (1..=n).collect();
    let k = ranks.partition_point(|&r| !spend_at_rank(n, r, inst.value(order[r - 1], 1)).is_negative());
    debug_assert!(k >= 1);
    let splitter = order[k - 1];
    let x = spend_at_rank(n, k, inst.value(splitter, 1));

    let mut roles = vec![Role::Bottom; n];
    for &i in &order[..k - 1] {
        roles[i] = Role::Top;
    }
    let one = Rational::one();
    let ratio_bidder = if x >= one {
        roles[splitter] = Role::Top;
        None
    } else if x.is_positive() {
        roles[splitter] = Role::Ratio;
        Some(RatioBidder {
            bidder: splitter,
            rank: k,
            v: inst.value(splitter, 0) / inst.value(splitter, 1),
            x: x.clone(),
        })
    } else {
        None
    };
    let top_count = roles.iter().filter(|&&r| r == Role::Top).count();
    let top_price = int(top_count as i64) + ratio_bidder.as_ref().map_or_else(Rational::zero, |r| r.x.clone());
    let bottom_price = int(n as i64) - &top_price;

    let mut alloc = Allocation::zeros(n, 2);
    for i in 0..n {
        match roles[i] {
            Role::Top => alloc.set_share(i, 0, &one / &top_price),
            Role::Bottom => alloc.set_share(i, 1, &one / &bottom_price),
            Role::Ratio => {
                alloc.set_share(i, 0, &x / &top_price);
                alloc.set_share(i, 1, (&one - &x) / &bottom_price);
            }
        }
    }
    let utils = utilities(inst, &alloc)?;
    let sol = PfSolution {
        allocation: alloc,
        prices: vec![top_price.clone(), bottom_price.clone()],
        utilities: utils,
        certified: true,
    };
    Ok((
        TwoItemPf {
            order,
            roles,
            ratio_bidder,
            top_price,
            bottom_price,
        },
        sol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pf::verify_equilibrium;
    use crate::rational::ratio;

    #[test]
    fn separate_interests() {
        let inst = Instance::from_weights(&[[1, 0], [0, 1]]).unwrap();
        let (info, sol) = solve_pf_two_item(&inst).unwrap();
        assert_eq!(sol.prices, vec![int(1), int(1)]);
        assert!(info.ratio_bidder.is_none());
        assert!(verify_equilibrium(&inst, &sol, 0.0).is_ok());
    }

    #[test]
    fn symmetric_integral_case() {
        let inst = Instance::from_weights(&[[1, 1], [1, 1]]).unwrap();
        let (info, sol) = solve_pf_two_item(&inst).unwrap();
        assert_eq!(sol.prices, vec![int(1), int(1)]);
        assert!(info.ratio_bidder.is_none());
        assert_eq!(sol.allocation.row(0), &[int(1), int(0)]);
        assert_eq!(sol.allocation.row(1), &[int(0), int(1)]);
        assert!(verify_equilibrium(&inst, &sol, 0.0).is_ok());
    }

    #[test]
    fn ratio_bidder_in_the_middle() {
        // scaled top values 3, 1, 1/3
        let inst = Instance::from_weights(&[[1, 1], [3, 1], [1, 3]]).unwrap();
        let (info, sol) = solve_pf_two_item(&inst).unwrap();
        let rb = info.ratio_bidder.clone().unwrap();
        assert_eq!((rb.bidder, rb.rank), (0, 2));
        assert_eq!(rb.v, int(1));
        assert_eq!(rb.x, ratio(1, 2));
        assert_eq!(sol.prices, vec![ratio(3, 2), ratio(3, 2)]);
        // (v + 1) / n in scaled units is 2/3; rows here sum to one, so 1/3
        assert_eq!(sol.utilities[0], ratio(1, 3));
        assert_eq!(info.order, vec![1, 0, 2]);
        assert!(verify_equilibrium(&inst, &sol, 0.0).is_ok());
    }

    #[test]
    fn everyone_wants_top() {
        let inst = Instance::from_weights(&[[1, 0], [1, 0], [1, 0]]).unwrap();
        let (info, sol) = solve_pf_two_item(&inst).unwrap();
        assert_eq!(sol.prices, vec![int(3), int(0)]);
        assert_eq!(info.bidders_with(Role::Top).count(), 3);
        assert!(verify_equilibrium(&inst, &sol, 0.0).is_ok());
    }

    #[test]
    fn bottom_ratio_bidder() {
        let inst = Instance::from_weights(&[[1, 0], [1, 0], [5, 1]]).unwrap();
        let (info, sol) = solve_pf_two_item(&inst).unwrap();
        let rb = info.ratio_bidder.unwrap();
        assert_eq!(rb.rank, 3);
        assert_eq!(rb.v, int(5));
        // x = ((n-k+1) v - (k-1)) / (v+1)
        assert_eq!(rb.x, ratio(5 - 2, 6));
        assert!(verify_equilibrium(&inst, &sol, 0.0).is_ok());
    }
}
