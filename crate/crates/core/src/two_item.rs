//! PF-approximating mechanisms for two items.
//!
//! All three mechanisms start from the closed-form PF solution and act only
//! when it has a ratio-defining bidder `R_b`; otherwise the PF allocation is
//! returned unchanged. `v` is always `R_b`'s top value with her bottom value
//! scaled to one.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance, MechanismResult};
use crate::pf::{solve_pf_two_item, PfSolution, Role, TwoItemPf};
use crate::rational::{int, ratio, Rational};

/// `t(v) = α - β / v²` of top and `b(v) = γ / v - δ` of bottom for `R_b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoItemSchedule {
    pub alpha: Rational,
    pub beta: Rational,
    pub gamma: Rational,
    pub delta: Rational,
    /// Closed interval of `v` on which the schedule is used; `None` is unbounded.
    pub valid: (Rational, Option<Rational>),
}

impl TwoItemSchedule {
    /// Two bidders: `t(v) = 1/2 - 1/(2v²)`, `b(v) = 1/v`, for `v >= 1`.
    pub fn two_bidder() -> Self {
        Self {
            alpha: ratio(1, 2),
            beta: ratio(1, 2),
            gamma: int(1),
            delta: int(0),
            valid: (int(1), None),
        }
    }

    /// Three bidders, `R_b` ranked in the middle, `1 <= v <= 2`.
    pub fn three_bidder_middle() -> Self {
        Self {
            alpha: ratio(3, 5),
            beta: ratio(2, 5),
            gamma: ratio(4, 5),
            delta: ratio(2, 5),
            valid: (int(1), Some(int(2))),
        }
    }

    /// Three bidders, `R_b` ranked last, `2 <= v <= sqrt(12)`.
    /// The upper end is irrational, so the stored bound is only a rational cap;
    /// [`three_bidder_two_item`] switches schedules by the exact test `v² <= 12`.
    pub fn three_bidder_bottom() -> Self {
        Self {
            alpha: ratio(1, 4),
            beta: int(1),
            gamma: int(2),
            delta: int(0),
            valid: (int(2), Some(ratio(433, 125))),
        }
    }

    pub fn t(&self, v: &Rational) -> Rational {
        &self.alpha - &self.beta / (v * v)
    }

    pub fn b(&self, v: &Rational) -> Rational {
        &self.gamma / v - &self.delta
    }

    /// Scaled utility of a bidder whose true value is `v` when she bids `bid`.
    pub fn utility(&self, bid: &Rational, v: &Rational) -> Rational {
        self.t(bid) * v + self.b(bid)
    }

    pub fn first_order_condition(&self) -> bool {
        self.gamma == &self.beta * int(2)
    }

    pub fn contains(&self, v: &Rational) -> bool {
        v >= &self.valid.0 && self.valid.1.as_ref().is_none_or(|hi| v <= hi)
    }

    /// `t` and `b` in `[0, 1]` at `v`.
    pub fn feasible_at(&self, v: &Rational) -> bool {
        let unit = |x: Rational| x >= Rational::zero() && x <= Rational::one();
        unit(self.t(v)) && unit(self.b(v))
    }
}

fn swapped(inst: &Instance) -> Instance {
    inst.permute_items(&[1, 0])
}

fn finish(inst: &Instance, x: Allocation, swap_back: bool, pf: &PfSolution) -> Result<MechanismResult> {
    let x = if swap_back { x.permute_items(&[1, 0]) } else { x };
    MechanismResult::new(inst, x, &pf.utilities)
}

fn require(inst: &Instance, mechanism: &'static str, n: Option<usize>) -> Result<()> {
    if inst.items() != 2 {
        return Err(Error::ShapeMismatch {
            mechanism,
            requirement: "m=2",
        });
    }
    match n {
        Some(2) if inst.bidders() != 2 => Err(Error::ShapeMismatch {
            mechanism,
            requirement: "n=2",
        }),
        Some(3) if inst.bidders() != 3 => Err(Error::ShapeMismatch {
            mechanism,
            requirement: "n=3",
        }),
        _ => Ok(()),
    }
}

/// Which item `R_b` is steered to by the Single-Item mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiChoice {
    Top,
    Bottom,
}

/// `R_b`'s choice and the resulting common ratio `ρ`.
pub fn si_choice(info: &TwoItemPf, n: usize) -> Option<(SiChoice, Rational)> {
    let rb = info.ratio_bidder.as_ref()?;
    let k = rb.rank as i64;
    let share_top = &rb.v / int(k);
    let share_bottom = ratio(1, n as i64 - k + 1);
    let (choice, u) = if share_top >= share_bottom {
        (SiChoice::Top, share_top)
    } else {
        (SiChoice::Bottom, share_bottom)
    };
    let rho = u * int(n as i64) / (&rb.v + int(1));
    Some((choice, rho))
}

/// Single-Item mechanism: every bidder ends up with part of one item only, and
/// all bidders get the same fraction `ρ >= n/(n+1)` of their PF utility.
pub fn si_mechanism(inst: &Instance) -> Result<MechanismResult> {
    require(inst, "si", None)?;
    let n = inst.bidders();
    let (info, pf) = solve_pf_two_item(inst)?;
    let Some((choice, rho)) = si_choice(&info, n) else {
        return MechanismResult::new(inst, pf.allocation.clone(), &pf.utilities);
    };
    let rb = info.ratio_bidder.as_ref().expect("si_choice found R_b");
    let mut x = Allocation::zeros(n, 2);
    for i in 0..n {
        match info.roles[i] {
            Role::Top => x.set_share(i, 0, &rho / &info.top_price),
            Role::Bottom => x.set_share(i, 1, &rho / &info.bottom_price),
            Role::Ratio => match choice {
                SiChoice::Top => x.set_share(i, 0, ratio(1, rb.rank as i64)),
                SiChoice::Bottom => x.set_share(i, 1, ratio(1, (n - rb.rank + 1) as i64)),
            },
        }
    }
    finish(inst, x, false, &pf)
}

/// Two bidders and two items, guaranteeing `ρ >= 2(sqrt(2) - 1)`.
pub fn two_bidder_two_item(inst: &Instance) -> Result<MechanismResult> {
    require(inst, "two2", Some(2))?;
    let (info, pf) = solve_pf_two_item(inst)?;
    let Some(rb) = info.ratio_bidder.as_ref() else {
        return MechanismResult::new(inst, pf.allocation.clone(), &pf.utilities);
    };
    let flip = rb.v < int(1);
    let (oriented, v) = if flip {
        (swapped(inst), int(1) / &rb.v)
    } else {
        (inst.clone(), rb.v.clone())
    };
    let b_idx = rb.bidder;
    let a_idx = 1 - b_idx;
    debug_assert!(oriented.value(b_idx, 1) > &Rational::zero());

    let sched = TwoItemSchedule::two_bidder();
    let t = sched.t(&v);
    let mut x = Allocation::zeros(2, 2);
    x.set_share(b_idx, 0, t.clone());
    x.set_share(b_idx, 1, sched.b(&v));
    x.set_share(a_idx, 0, Rational::one() - t);
    finish(inst, x, flip, &pf)
}

/// `ρ = (v² + 1) / (v² + v)` for the two-bidder schedule.
pub fn two_bidder_rho(v: &Rational) -> Rational {
    (v * v + int(1)) / (v * v + v)
}

/// `ρ = 3 (3v²/5 - 2v/5 + 2/5) / (v² + v)` for a middle `R_b`.
pub fn three_bidder_middle_rho(v: &Rational) -> Rational {
    int(3) * (ratio(3, 5) * v * v - ratio(2, 5) * v + ratio(2, 5)) / (v * v + v)
}

/// `ρ` for a bottom-ranked `R_b` with `v >= 2`.
pub fn three_bidder_bottom_rho(v: &Rational) -> Rational {
    if v * v <= int(12) {
        (ratio(1, 4) + int(1) / (v * v)) * int(3) * v / (v + int(1))
    } else {
        v / (v + int(1))
    }
}

/// Three bidders and two items, guaranteeing `ρ >= (12 - sqrt(12)) / 11`.
///
/// Items are first oriented so that a middle `R_b` has `v >= 1` and an
/// extreme `R_b` is ranked last; a top-ranked `R_b` (`v < 1/2`) becomes a
/// bottom-ranked one with value `1/v > 2` after the swap.
pub fn three_bidder_two_item(inst: &Instance) -> Result<MechanismResult> {
    require(inst, "three2", Some(3))?;
    let (info, pf) = solve_pf_two_item(inst)?;
    let Some(rb) = info.ratio_bidder.as_ref() else {
        return MechanismResult::new(inst, pf.allocation.clone(), &pf.utilities);
    };
    let middle = rb.rank == 2;
    let flip = if middle { rb.v < int(1) } else { rb.rank == 1 };
    let oriented = if flip { swapped(inst) } else { inst.clone() };
    let (oinfo, _) = solve_pf_two_item(&oriented)?;
    let orb = oinfo.ratio_bidder.as_ref().expect("orientation keeps R_b");
    let v = orb.v.clone();
    let r = orb.bidder;
    let mut x = Allocation::zeros(3, 2);

    if orb.rank == 2 {
        let sched = TwoItemSchedule::three_bidder_middle();
        let rho = three_bidder_middle_rho(&v);
        x.set_share(r, 0, sched.t(&v));
        x.set_share(r, 1, sched.b(&v));
        for i in oinfo.bidders_with(Role::Top) {
            x.set_share(i, 0, &rho * (&v + int(1)) / (int(3) * &v));
        }
        for i in oinfo.bidders_with(Role::Bottom) {
            x.set_share(i, 1, &rho * (&v + int(1)) / int(3));
        }
    } else {
        debug_assert_eq!(orb.rank, 3);
        let others: Vec<usize> = oinfo.bidders_with(Role::Top).collect();
        if v <= int(2) {
            x.set_share(r, 1, int(1));
            for &i in &others {
                x.set_share(i, 0, ratio(1, 2));
            }
        } else if &v * &v <= int(12) {
            let sched = TwoItemSchedule::three_bidder_bottom();
            x.set_share(r, 0, sched.t(&v));
            x.set_share(r, 1, sched.b(&v));
            for &i in &others {
                x.set_share(i, 0, ratio(1, 4) + int(1) / (&v * &v));
            }
        } else {
            for i in 0..3 {
                x.set_share(i, 0, ratio(1, 3));
            }
        }
    }
    finish(inst, x, flip, &pf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::bounds;

    fn n_over(n: i64) -> Rational {
        ratio(n, n + 1)
    }

    #[test]
    fn schedules_satisfy_first_order_condition() {
        for s in [
            TwoItemSchedule::two_bidder(),
            TwoItemSchedule::three_bidder_middle(),
            TwoItemSchedule::three_bidder_bottom(),
        ] {
            assert!(s.first_order_condition());
            assert!(s.feasible_at(&s.valid.0));
        }
        let s = TwoItemSchedule::two_bidder();
        assert_eq!(s.t(&int(1)), int(0));
        assert_eq!(s.b(&int(1)), int(1));
    }

    #[test]
    fn si_without_ratio_bidder_is_pf() {
        let inst = Instance::from_weights(&[[1, 0], [0, 1]]).unwrap();
        let r = si_mechanism(&inst).unwrap();
        assert_eq!(r.rho, int(1));
    }

    #[test]
    fn si_three_bidders_at_indifference() {
        // top-only, R_b with v = 1, bottom-only
        let inst = Instance::from_weights(&[[1, 0], [1, 1], [0, 1]]).unwrap();
        let r = si_mechanism(&inst).unwrap();
        assert_eq!(r.rho, ratio(3, 4));
        assert!(r.per_bidder_pf_fraction.iter().all(|f| f == &ratio(3, 4)));
        assert_eq!(r.allocation.row(1), &[ratio(1, 2), int(0)]);
    }

    #[test]
    fn si_four_bidders_item_swap() {
        // R_b at k = 2 with v = 2/3; swapping items moves her to k = 3 with v = 3/2
        let direct = Instance::from_weights(&[[1, 0], [2, 3], [0, 1], [0, 1]]).unwrap();
        assert_eq!(si_mechanism(&direct).unwrap().rho, n_over(4));
        let flipped = direct.permute_items(&[1, 0]);
        let (info, _) = solve_pf_two_item(&flipped).unwrap();
        assert_eq!(info.ratio_bidder.unwrap().rank, 3);
        assert_eq!(si_mechanism(&flipped).unwrap().rho, n_over(4));
    }

    #[test]
    fn two2_examples() {
        // v = 1 boundary: PF already integral
        let inst = Instance::from_weights(&[[1, 0], [1, 1]]).unwrap();
        assert_eq!(two_bidder_two_item(&inst).unwrap().rho, int(1));

        let both_top = Instance::from_weights(&[[1, 0], [1, 0]]).unwrap();
        let r = two_bidder_two_item(&both_top).unwrap();
        assert_eq!(r.allocation.row(0), &[ratio(1, 2), int(0)]);
        assert_eq!(r.allocation.row(1), &[ratio(1, 2), int(0)]);

        let split = Instance::from_weights(&[[1, 0], [3, 1]]).unwrap();
        let r = two_bidder_two_item(&split).unwrap();
        assert_eq!(r.rho, two_bidder_rho(&int(3)));
        assert!(r.per_bidder_pf_fraction.iter().all(|f| f == &r.rho));
        let flipped = split.permute_items(&[1, 0]);
        assert_eq!(two_bidder_two_item(&flipped).unwrap().rho, r.rho);
    }

    #[test]
    fn two2_worst_case_value() {
        // rational v close to 1 + sqrt(2)
        let v = ratio(2_414_214, 1_000_000);
        let rho = two_bidder_rho(&v);
        let bound = bounds::two_bidder_two_item();
        assert!(bound.le_rational(&rho));
        assert!((crate::rational::to_f64(&rho) - bound.to_f64()).abs() < 1e-9);
    }

    #[test]
    fn three2_middle_and_bottom() {
        // middle R_b, v = 3/2
        let inst = Instance::from_weights(&[[1, 0], [3, 2], [0, 1]]).unwrap();
        let r = three_bidder_two_item(&inst).unwrap();
        assert_eq!(r.rho, three_bidder_middle_rho(&ratio(3, 2)));

        // bottom R_b, v = 3
        let inst = Instance::from_weights(&[[1, 0], [1, 0], [3, 1]]).unwrap();
        let r = three_bidder_two_item(&inst).unwrap();
        assert_eq!(r.rho, three_bidder_bottom_rho(&int(3)));

        // top R_b with v = 1/4 behaves as bottom R_b with v = 4
        let inst = Instance::from_weights(&[[1, 4], [0, 1], [0, 1]]).unwrap();
        let r = three_bidder_two_item(&inst).unwrap();
        assert_eq!(r.rho, three_bidder_bottom_rho(&int(4)));
        assert_eq!(r.allocation.column_total(0), int(0));
    }

    #[test]
    fn three2_bottom_rho_at_sqrt12_matches_bound() {
        let below = ratio(3_464_101, 1_000_000);
        let rho = three_bidder_bottom_rho(&below);
        let bound = bounds::three_bidder_two_item();
        assert!(bound.le_rational(&rho));
        assert!((crate::rational::to_f64(&rho) - bound.to_f64()).abs() < 1e-6);
    }
}
