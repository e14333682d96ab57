//! Two-bidder mechanisms aimed at social welfare.
//!
//! Halves of items are kept as scaled columns: "half of item `j`" is a share
//! of `1/2` in column `j`, never a new column.

use num_traits::One;

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance, MechanismResult};
use crate::pf::{solve_pf_two_bidder, PfSolution};
use crate::rational::{ratio, Rational};

fn require_two_bidders(inst: &Instance, mechanism: &'static str) -> Result<()> {
    if inst.bidders() == 2 {
        Ok(())
    } else {
        Err(Error::ShapeMismatch {
            mechanism,
            requirement: "n=2",
        })
    }
}

/// The `limit` most valuable items, ties broken toward the lower index. Sorted.
pub fn best_bundle(values: &[Rational], limit: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(limit.min(values.len()));
    idx.sort_unstable();
    idx
}

/// One dictator game on whole items: `dictator` takes her best `⌊m/2⌋` items,
/// the other bidder everything else.
pub fn dictator_outcome(inst: &Instance, dictator: usize) -> Result<Allocation> {
    require_two_bidders(inst, "dictator game")?;
    let m = inst.items();
    let bundle = best_bundle(inst.row(dictator), m / 2);
    let mut x = Allocation::zeros(2, m);
    for j in 0..m {
        let owner = if bundle.binary_search(&j).is_ok() { dictator } else { 1 - dictator };
        x.set_share(owner, j, Rational::one());
    }
    Ok(x)
}

/// Both dictator games, each on one half of every item. This is also the
/// expected allocation of the randomized version that picks a dictator by a fair coin.
pub fn swap_dictatorial_allocation(inst: &Instance) -> Result<Allocation> {
    let a = dictator_outcome(inst, 0)?;
    let b = dictator_outcome(inst, 1)?;
    a.mix(&b, &ratio(1, 2))
}

pub fn swap_dictatorial(inst: &Instance) -> Result<MechanismResult> {
    let x = swap_dictatorial_allocation(inst)?;
    let pf = solve_pf_two_bidder(inst)?;
    MechanismResult::new(inst, x, &pf.utilities)
}

/// A keeps a `v_B` fraction of her PF bundle and B a `v_A` fraction of hers.
pub fn partial_allocation_from(pf: &PfSolution) -> Result<Allocation> {
    let scale = [pf.utilities[1].clone(), pf.utilities[0].clone()];
    pf.allocation.scale_rows(&scale)
}

pub fn partial_allocation(inst: &Instance) -> Result<MechanismResult> {
    require_two_bidders(inst, "pa")?;
    let pf = solve_pf_two_bidder(inst)?;
    let x = partial_allocation_from(&pf)?;
    MechanismResult::new(inst, x, &pf.utilities)
}

/// Swap-dictatorial on one half of every item and PA on the other half.
pub fn hybrid(inst: &Instance) -> Result<MechanismResult> {
    require_two_bidders(inst, "hybrid")?;
    let pf = solve_pf_two_bidder(inst)?;
    let swap = swap_dictatorial_allocation(inst)?;
    let pa = partial_allocation_from(&pf)?;
    let x = swap.mix(&pa, &ratio(1, 2))?;
    MechanismResult::new(inst, x, &pf.utilities)
}

/// `(1/2 + v_A v_B) / (v_A + v_B)`, the hybrid's guaranteed share of PF welfare
/// when the swap half contributes its minimum welfare of one.
pub fn hybrid_pf_bound(va: &Rational, vb: &Rational) -> Rational {
    (ratio(1, 2) + va * vb) / (va + vb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{is_envy_free, social_welfare};
    use crate::rational::{int, parse_rational};

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn best_bundle_examples() {
        let eps = q("0.001");
        let vals = [int(1) - int(2) * &eps, eps.clone(), &eps / int(2), &eps / int(2)];
        assert_eq!(best_bundle(&vals, 2), vec![0, 1]);
        assert_eq!(best_bundle(&[q("1/3"), q("1/3"), q("1/3")], 1), vec![0]);
        assert_eq!(best_bundle(&[q("0.1"), q("0.5"), q("0.4")], 2), vec![1, 2]);
    }

    #[test]
    fn swap_disjoint_supports() {
        let inst = Instance::from_weights(&[[1, 1, 0, 0], [0, 0, 1, 1]]).unwrap();
        let r = swap_dictatorial(&inst).unwrap();
        assert_eq!(r.sw, int(2));
        assert_eq!(r.allocation.row(0), &[int(1), int(1), int(0), int(0)]);
    }

    #[test]
    fn swap_equal_values() {
        let inst = Instance::from_weights(&[[1, 1], [1, 1]]).unwrap();
        let r = swap_dictatorial(&inst).unwrap();
        assert_eq!(r.per_bidder_utility, vec![ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn swap_epsilon_instance() {
        let eps = q("1/1000");
        let half = &eps / int(2);
        let a = vec![int(1) - int(2) * &eps, eps.clone(), half.clone(), half.clone()];
        let b = vec![eps.clone(), int(1) - int(2) * &eps, half.clone(), half];
        let inst = Instance::normalize(vec![a, b]).unwrap();
        let r = swap_dictatorial(&inst).unwrap();
        let ratio_opt = &r.sw / inst.optimal_welfare();
        assert_eq!(ratio_opt, int(1) / (int(2) - int(3) * &eps));
    }

    #[test]
    fn pa_examples() {
        let eq = Instance::from_weights(&[[1, 1], [1, 1]]).unwrap();
        let r = partial_allocation(&eq).unwrap();
        assert_eq!(r.per_bidder_pf_fraction, vec![ratio(1, 2), ratio(1, 2)]);
        assert_eq!(r.sw, ratio(1, 2));

        let disjoint = Instance::from_weights(&[[1, 0], [0, 1]]).unwrap();
        assert_eq!(partial_allocation(&disjoint).unwrap().rho, int(1));

        let three = Instance::from_weights(&[[6, 3, 1], [2, 3, 5]]).unwrap();
        let r = partial_allocation(&three).unwrap();
        assert_eq!(r.per_bidder_utility, vec![q("0.49"), q("0.49")]);
        assert!(is_envy_free(&three, &r.allocation).unwrap());
    }

    #[test]
    fn hybrid_examples() {
        let eq = Instance::from_weights(&[[1, 1], [1, 1]]).unwrap();
        let r = hybrid(&eq).unwrap();
        let pf = solve_pf_two_bidder(&eq).unwrap();
        let pf_sw: Rational = pf.utilities.iter().sum();
        assert_eq!(&r.sw / &pf_sw, ratio(3, 4));
        assert_eq!(hybrid_pf_bound(&ratio(1, 2), &ratio(1, 2)), ratio(3, 4));
        assert_eq!(hybrid_pf_bound(&int(1), &int(1)), ratio(3, 4));
        assert_eq!(hybrid_pf_bound(&ratio(1, 2), &int(1)), ratio(2, 3));

        // with disjoint supports the swap half already reaches full welfare
        let disjoint = Instance::from_weights(&[[1, 0], [0, 1]]).unwrap();
        let r = hybrid(&disjoint).unwrap();
        assert_eq!(r.sw, int(2));
        assert!(&r.sw / int(2) >= ratio(3, 4));
    }

    #[test]
    fn hybrid_is_a_mix() {
        let inst = Instance::from_weights(&[[5, 3, 2], [1, 1, 8]]).unwrap();
        let h = hybrid(&inst).unwrap();
        let s = swap_dictatorial(&inst).unwrap();
        let p = partial_allocation(&inst).unwrap();
        assert_eq!(h.sw, (&s.sw + &p.sw) / int(2));
        assert_eq!(social_welfare(&inst, &h.allocation).unwrap(), h.sw);
    }
}
