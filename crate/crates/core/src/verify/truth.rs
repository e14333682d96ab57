//! Deviation search: a falsifier for truthfulness, never a proof.

use num_traits::{One, Signed, Zero};

use crate::error::Result;
use crate::mechanism::Mechanism;
use crate::model::{Allocation, Instance};
use crate::rational::{int, ratio, Rational};

/// Multiplicative perturbations applied to one coordinate at a time.
pub fn perturbation_factors() -> [Rational; 6] {
    [ratio(1, 4), ratio(1, 2), ratio(3, 4), ratio(4, 3), int(2), int(4)]
}

fn normalized(row: Vec<Rational>) -> Option<Vec<Rational>> {
    let total: Rational = row.iter().sum();
    total.is_positive().then(|| row.into_iter().map(|x| x / &total).collect())
}

/// Candidate false bids for `bidder`, each normalized, deduplicated, and
/// excluding the truthful row.
pub fn deviation_grid(inst: &Instance, bidder: usize) -> Vec<Vec<Rational>> {
    let (n, m) = inst.shape();
    let truth = inst.row(bidder).to_vec();
    let mut bids = Vec::new();

    for j in 0..m {
        for f in perturbation_factors() {
            let mut row = truth.clone();
            if row[j].is_zero() {
                row[j] = ratio(1, 4 * m as i64) * &f;
            } else {
                row[j] *= &f;
            }
            bids.extend(normalized(row));
        }
        let mut single = vec![Rational::zero(); m];
        single[j] = Rational::one();
        bids.push(single);
    }
    bids.extend(normalized(truth.iter().rev().cloned().collect()));
    for k in (0..n).filter(|&k| k != bidder) {
        bids.push(inst.row(k).to_vec());
    }

    if m == 2 {
        // bottom-value targets around every other bidder's position, where
        // the PF ranking changes
        let mut marks: Vec<Rational> = (0..n).filter(|&k| k != bidder).map(|k| inst.value(k, 1).clone()).collect();
        marks.push(Rational::zero());
        marks.push(Rational::one());
        marks.sort();
        marks.dedup();
        let mut targets = marks.clone();
        for w in marks.windows(2) {
            targets.push((&w[0] + &w[1]) / int(2));
        }
        let bump = ratio(1, 1000);
        for t in &marks {
            targets.push(t + &bump);
            targets.push(t - &bump);
        }
        targets.extend((0..=20).map(|t| ratio(t, 20)));
        for b in targets {
            if b >= Rational::zero() && b <= Rational::one() {
                bids.push(vec![Rational::one() - &b, b]);
            }
        }
    }

    bids.sort();
    bids.dedup();
    bids.retain(|b| b != &truth);
    bids
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub bidder: usize,
    pub bid: Vec<Rational>,
    pub gain: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthReport {
    /// Largest true-utility gain over the truthful outcome; `<= 0` means no lie found.
    pub max_gain: Rational,
    pub witness: Option<Witness>,
    pub evaluated: usize,
}

impl TruthReport {
    pub fn no_profitable_lie(&self) -> bool {
        !self.max_gain.is_positive()
    }
}

fn value_of(inst: &Instance, bidder: usize, x: &Allocation) -> Rational {
    inst.row(bidder).iter().zip(x.row(bidder)).map(|(v, s)| v * s).sum()
}

/// Tries every bid in `deviations[i]` for bidder `i` with the others truthful
/// and reports the largest gain in the deviator's true valuation.
pub fn check_truthfulness<M: Mechanism + ?Sized>(
    mech: &M,
    inst: &Instance,
    deviations: &[Vec<Vec<Rational>>],
) -> Result<TruthReport> {
    let baseline = mech.allocate(inst)?;
    let mut report = TruthReport {
        max_gain: Rational::zero(),
        witness: None,
        evaluated: 0,
    };
    let mut best: Option<Rational> = None;
    for (i, bids) in deviations.iter().enumerate() {
        let honest = value_of(inst, i, &baseline);
        for bid in bids {
            let lied = inst.with_bid(i, bid)?;
            let x = mech.allocate(&lied)?;
            let gain = value_of(inst, i, &x) - &honest;
            report.evaluated += 1;
            if best.as_ref().is_none_or(|b| &gain > b) {
                best = Some(gain.clone());
                if gain.is_positive() {
                    report.witness = Some(Witness {
                        bidder: i,
                        bid: bid.clone(),
                        gain: gain.clone(),
                    });
                }
            }
        }
    }
    report.max_gain = best.unwrap_or_else(Rational::zero);
    Ok(report)
}

/// [`check_truthfulness`] over [`deviation_grid`] for every bidder.
pub fn check_truthfulness_grid<M: Mechanism + ?Sized>(mech: &M, inst: &Instance) -> Result<TruthReport> {
    let grids: Vec<_> = (0..inst.bidders()).map(|i| deviation_grid(inst, i)).collect();
    check_truthfulness(mech, inst, &grids)
}

/// Hands everything to the bidder reporting the highest top-item value.
/// Plainly manipulable; it exists to show the deviation search can find lies.
#[derive(Debug, Clone, Copy, Default)]
pub struct TopValueDictator;

impl Mechanism for TopValueDictator {
    fn name(&self) -> &str {
        "top-value-dictator"
    }

    fn check_shape(&self, _inst: &Instance) -> Result<()> {
        Ok(())
    }

    fn allocate(&self, inst: &Instance) -> Result<Allocation> {
        let (n, m) = inst.shape();
        let winner = (0..n).fold(0, |w, i| if inst.value(i, 0) > inst.value(w, 0) { i } else { w });
        let mut x = Allocation::zeros(n, m);
        for j in 0..m {
            x.set_share(winner, j, Rational::one());
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::MechanismKind;

    #[test]
    fn grid_is_normalized_and_excludes_truth() {
        let inst = Instance::from_weights(&[[1, 2], [3, 1]]).unwrap();
        let grid = deviation_grid(&inst, 0);
        assert!(grid.len() > 20);
        assert!(grid.iter().all(|b| b.iter().sum::<Rational>().is_one()));
        assert!(!grid.contains(&inst.row(0).to_vec()));
    }

    #[test]
    fn broken_mechanism_is_caught() {
        let inst = Instance::from_weights(&[[1, 1], [2, 1]]).unwrap();
        let report = check_truthfulness_grid(&TopValueDictator, &inst).unwrap();
        assert!(report.max_gain.is_positive());
        assert_eq!(report.witness.unwrap().bidder, 0);
    }

    #[test]
    fn pa_resists_grid_on_small_case() {
        let inst = Instance::from_weights(&[[6, 3, 1], [2, 3, 5]]).unwrap();
        let report = check_truthfulness_grid(&MechanismKind::PartialAllocation, &inst).unwrap();
        assert!(report.no_profitable_lie(), "{report:?}");
    }
}
