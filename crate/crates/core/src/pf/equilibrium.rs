use num_traits::{One, Signed, Zero};

use crate::flow::FlowNetwork;
use crate::model::{utilities, Allocation, Instance};
use crate::rational::{from_f64, int, to_f64, Rational};

use super::PfSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// `Σ_j p_j != n`.
    BudgetTotal,
    /// A bidder does not spend exactly her unit budget.
    Spend,
    /// Money spent on an item below the bidder's maximum bang per buck.
    Mbb,
    /// A positively priced item is not fully allocated.
    Clearing,
    /// A free item that somebody values.
    UnpricedDemand,
    /// Shape problems: wrong lengths or a negative price.
    Malformed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub bidder: Option<usize>,
    pub item: Option<usize>,
    pub magnitude: Rational,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EquilibriumReport {
    pub violations: Vec<Violation>,
    /// Largest magnitude seen over all checks, including those within tolerance.
    pub max_residual: f64,
}

impl EquilibriumReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

struct Checker {
    tol: Rational,
    report: EquilibriumReport,
}

impl Checker {
    fn check(&mut self, kind: ViolationKind, bidder: Option<usize>, item: Option<usize>, magnitude: Rational) {
        let m = to_f64(&magnitude);
        if m > self.report.max_residual {
            self.report.max_residual = m;
        }
        if magnitude > self.tol {
            self.report.violations.push(Violation {
                kind,
                bidder,
                item,
                magnitude,
            });
        }
    }
}

/// Checks the market-equilibrium conditions of `sol` exactly; `tol = 0` demands equality.
///
/// The MBB residual of a share is the money it wastes, `p_j x_ij (1 - bpb_ij / α_i)`,
/// where `α_i` is the bidder's best bang per buck over priced items.
pub fn verify_equilibrium(inst: &Instance, sol: &PfSolution, tol: f64) -> EquilibriumReport {
    let (n, m) = inst.shape();
    let mut c = Checker {
        tol: from_f64(tol.max(0.0)).unwrap_or_else(Rational::zero),
        report: EquilibriumReport::default(),
    };
    let x = &sol.allocation;
    if sol.prices.len() != m || x.bidders() != n || x.items() != m {
        c.check(ViolationKind::Malformed, None, None, Rational::one());
        return c.report;
    }
    for (j, p) in sol.prices.iter().enumerate() {
        if p.is_negative() {
            c.check(ViolationKind::Malformed, None, Some(j), -p.clone());
        }
    }

    let total: Rational = sol.prices.iter().sum();
    c.check(ViolationKind::BudgetTotal, None, None, (total - int(n as i64)).abs());

    for i in 0..n {
        let spend: Rational = (0..m).map(|j| &sol.prices[j] * x.share(i, j)).sum();
        c.check(ViolationKind::Spend, Some(i), None, (spend - Rational::one()).abs());

        let alpha = (0..m)
            .filter(|&j| sol.prices[j].is_positive())
            .map(|j| inst.value(i, j) / &sol.prices[j])
            .max();
        for j in 0..m {
            let v = inst.value(i, j);
            let p = &sol.prices[j];
            if p.is_zero() {
                if v.is_positive() {
                    c.check(ViolationKind::UnpricedDemand, Some(i), Some(j), v.clone());
                }
                continue;
            }
            let share = x.share(i, j);
            if share.is_positive() {
                if let Some(alpha) = alpha.as_ref().filter(|a| a.is_positive()) {
                    let waste = p * share * (Rational::one() - (v / p) / alpha);
                    c.check(ViolationKind::Mbb, Some(i), Some(j), waste);
                }
            }
        }
    }

    for j in 0..m {
        if sol.prices[j].is_positive() {
            let sold = x.column_total(j);
            c.check(ViolationKind::Clearing, None, Some(j), (Rational::one() - sold).abs());
        }
    }
    c.report
}

/// If `prices` are exact equilibrium prices, returns a matching allocation and the
/// bidders' utilities; otherwise `None`.
///
/// Spending is routed by max-flow on the exact MBB graph: source to bidder with
/// capacity 1, bidder to MBB item uncapacitated, item to sink with capacity `p_j`.
pub fn certify_prices(inst: &Instance, prices: &[Rational]) -> Option<(Allocation, Vec<Rational>)> {
    let (n, m) = inst.shape();
    if prices.len() != m || prices.iter().any(Signed::is_negative) {
        return None;
    }
    let total: Rational = prices.iter().sum();
    let budget = int(n as i64);
    if total != budget {
        return None;
    }
    for j in 0..m {
        if prices[j].is_zero() && (0..n).any(|i| inst.value(i, j).is_positive()) {
            return None;
        }
    }

    let source = 0;
    let sink = n + m + 1;
    let mut net = FlowNetwork::new(n + m + 2);
    let unbounded = &budget + Rational::one();
    let mut edges = Vec::new();
    let mut alphas = Vec::with_capacity(n);
    for i in 0..n {
        let bpb: Vec<Option<Rational>> = (0..m)
            .map(|j| prices[j].is_positive().then(|| inst.value(i, j) / &prices[j]))
            .collect();
        let alpha = bpb.iter().flatten().max().cloned()?;
        if !alpha.is_positive() {
            return None;
        }
        net.add_edge(source, 1 + i, Rational::one());
        for (j, b) in bpb.iter().enumerate() {
            if b.as_ref() == Some(&alpha) {
                edges.push((i, j, net.add_edge(1 + i, 1 + n + j, unbounded.clone())));
            }
        }
        alphas.push(alpha);
    }
    for (j, p) in prices.iter().enumerate() {
        if p.is_positive() {
            net.add_edge(1 + n + j, sink, p.clone());
        }
    }
    if net.max_flow(source, sink, &unbounded) != budget {
        return None;
    }
    let mut alloc = Allocation::zeros(n, m);
    for (i, j, id) in edges {
        let f = net.flow(id);
        if f.is_positive() {
            alloc.set_share(i, j, f / &prices[j]);
        }
    }
    alloc.validate().ok()?;
    let utils = utilities(inst, &alloc).ok()?;
    debug_assert_eq!(utils, alphas);
    Some((alloc, utils))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn certifies_symmetric_prices() {
        let inst = Instance::from_weights(&[[1, 1], [1, 1]]).unwrap();
        let (alloc, utils) = certify_prices(&inst, &[int(1), int(1)]).unwrap();
        assert_eq!(utils, vec![ratio(1, 2), ratio(1, 2)]);
        let sol = PfSolution {
            allocation: alloc,
            prices: vec![int(1), int(1)],
            utilities: utils,
            certified: true,
        };
        assert!(verify_equilibrium(&inst, &sol, 0.0).is_ok());
        assert!(certify_prices(&inst, &[ratio(3, 2), ratio(1, 2)]).is_none());
    }

    #[test]
    fn flags_non_mbb_share() {
        let inst = Instance::from_weights(&[[3, 1], [1, 3]]).unwrap();
        // each bidder holds the item she likes less
        let alloc = Allocation::new(vec![vec![int(0), int(1)], vec![int(1), int(0)]]).unwrap();
        let sol = PfSolution {
            utilities: utilities(&inst, &alloc).unwrap(),
            allocation: alloc,
            prices: vec![int(1), int(1)],
            certified: false,
        };
        let report = verify_equilibrium(&inst, &sol, 0.0);
        assert_eq!(report.count(ViolationKind::Mbb), 2);
        assert_eq!(report.count(ViolationKind::Spend), 0);
        assert!(report.max_residual > 0.6);
    }

    #[test]
    fn flags_budget_and_clearing() {
        let inst = Instance::from_weights(&[[1, 1]]).unwrap();
        let alloc = Allocation::new(vec![vec![ratio(1, 2), int(1)]]).unwrap();
        let sol = PfSolution {
            utilities: utilities(&inst, &alloc).unwrap(),
            allocation: alloc,
            prices: vec![int(1), int(1)],
            certified: false,
        };
        let report = verify_equilibrium(&inst, &sol, 1e-9);
        assert_eq!(report.count(ViolationKind::BudgetTotal), 1);
        assert_eq!(report.count(ViolationKind::Clearing), 1);
        assert_eq!(report.count(ViolationKind::Spend), 1);
    }

    #[test]
    fn rejects_free_valued_item() {
        let inst = Instance::from_weights(&[[1, 1], [1, 0]]).unwrap();
        assert!(certify_prices(&inst, &[int(2), int(0)]).is_none());
    }
}
