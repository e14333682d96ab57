//! Exact PF for two bidders by scanning the Pareto frontier.
//!
//! With items sorted by `v_A / v_B` in decreasing order, every Pareto-optimal
//! allocation gives A a prefix and B the suffix, splitting at most one item.
//! The product `u_A * u_B` is maximized on one of the frontier's linear pieces;
//! on each piece the maximizer has a closed form.

use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance};
use crate::rational::{int, Rational};

use super::PfSolution;

/// Items in decreasing `v_A / v_B` order, compared by cross-multiplication.
/// Items nobody values are dropped. The sort is stable, so equal ratios keep
/// index order.
fn frontier_order(inst: &Instance) -> Vec<usize> {
    let mut order: Vec<usize> = (0..inst.items())
        .filter(|&j| inst.value(0, j).is_positive() || inst.value(1, j).is_positive())
        .collect();
    order.sort_by(|&j, &k| {
        let lhs = inst.value(0, j) * inst.value(1, k);
        let rhs = inst.value(0, k) * inst.value(1, j);
        rhs.cmp(&lhs)
    });
    order
}

/// Maximizer of `(a + t va)(b + (1 - t) vb)` over `t` in `[0, 1]`.
fn best_split(a: &Rational, b: &Rational, va: &Rational, vb: &Rational) -> Rational {
    if va.is_zero() {
        return Rational::zero();
    }
    if vb.is_zero() {
        return Rational::one();
    }
    let t = (va * (b + vb) - vb * a) / (int(2) * va * vb);
    t.clamp(Rational::zero(), Rational::one())
}

pub fn solve_pf_two_bidder(inst: &Instance) -> Result<PfSolution> {
    if inst.bidders() != 2 {
        return Err(Error::ShapeMismatch {
            mechanism: "two-bidder PF",
            requirement: "n=2",
        });
    }
    let m = inst.items();
    let order = frontier_order(inst);
    let va: Vec<&Rational> = order.iter().map(|&j| inst.value(0, j)).collect();
    let vb: Vec<&Rational> = order.iter().map(|&j| inst.value(1, j)).collect();

    // suffix[r] = B's value for order[r..]
    let mut suffix = vec![Rational::zero(); order.len() + 1];
    for r in (0..order.len()).rev() {
        suffix[r] = &suffix[r + 1] + vb[r];
    }

    let mut prefix = Rational::zero();
    let mut best: Option<(Rational, usize, Rational)> = None;
    for r in 0..order.len() {
        let b = &suffix[r + 1];
        let t = best_split(&prefix, b, va[r], vb[r]);
        let ua = &prefix + &t * va[r];
        let ub = b + (Rational::one() - &t) * vb[r];
        let product = ua * ub;
        if best.as_ref().is_none_or(|(p, _, _)| product.cmp(p) == Ordering::Greater) {
            best = Some((product, r, t));
        }
        prefix += va[r];
    }
    let (_, split, t) = best.expect("a normalized instance has a valued item");

    let mut alloc = Allocation::zeros(2, m);
    for (r, &j) in order.iter().enumerate() {
        match r.cmp(&split) {
            Ordering::Less => alloc.set_share(0, j, Rational::one()),
            Ordering::Greater => alloc.set_share(1, j, Rational::one()),
            Ordering::Equal => {
                alloc.set_share(1, j, Rational::one() - &t);
                alloc.set_share(0, j, t.clone());
            }
        }
    }
    let utilities = crate::model::utilities(inst, &alloc)?;
    let prices = (0..m)
        .map(|j| {
            let holder = if alloc.share(0, j).is_positive() { 0 } else { 1 };
            if alloc.share(holder, j).is_positive() {
                inst.value(holder, j) / &utilities[holder]
            } else {
                Rational::zero()
            }
        })
        .collect();
    Ok(PfSolution {
        allocation: alloc,
        prices,
        utilities,
        certified: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pf::verify_equilibrium;
    use crate::rational::ratio;

    #[test]
    fn disjoint_supports() {
        let inst = Instance::from_weights(&[[1, 0], [0, 1]]).unwrap();
        let sol = solve_pf_two_bidder(&inst).unwrap();
        assert_eq!(sol.utilities, vec![int(1), int(1)]);
        assert!(verify_equilibrium(&inst, &sol, 0.0).is_ok());
    }

    #[test]
    fn three_items() {
        let inst = Instance::from_weights(&[[6, 3, 1], [2, 3, 5]]).unwrap();
        let sol = solve_pf_two_bidder(&inst).unwrap();
        assert_eq!(sol.utilities, vec![ratio(7, 10), ratio(7, 10)]);
        assert_eq!(sol.allocation.row(0), &[int(1), ratio(1, 3), int(0)]);
        assert!(verify_equilibrium(&inst, &sol, 0.0).is_ok());
    }

    #[test]
    fn identical_bidders_split_evenly() {
        let inst = Instance::from_weights(&[[1, 1], [1, 1]]).unwrap();
        let sol = solve_pf_two_bidder(&inst).unwrap();
        assert_eq!(sol.utilities, vec![ratio(1, 2), ratio(1, 2)]);
        assert_eq!(sol.prices, vec![int(1), int(1)]);
        assert!(verify_equilibrium(&inst, &sol, 0.0).is_ok());
    }

    #[test]
    fn shared_unvalued_item() {
        let inst = Instance::from_weights(&[[1, 0, 2], [3, 0, 1]]).unwrap();
        let sol = solve_pf_two_bidder(&inst).unwrap();
        assert_eq!(sol.prices[1], int(0));
        assert!(verify_equilibrium(&inst, &sol, 0.0).is_ok());
    }

    #[test]
    fn rejects_other_shapes() {
        let inst = Instance::from_weights(&[[1], [1], [1]]).unwrap();
        assert!(solve_pf_two_bidder(&inst).is_err());
    }
}
