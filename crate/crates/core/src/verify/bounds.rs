//! Guarantees each mechanism is supposed to meet, as exact thresholds.

use std::fmt;

use num_traits::{One, Zero};

use crate::mechanism::MechanismKind;
use crate::model::Instance;
use crate::pf::PfSolution;
use crate::rational::{bounds, int, ratio, to_f64, Rational, Surd};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Threshold {
    Exact(Rational),
    Irrational(Surd),
}

impl Threshold {
    /// `value >= self`, decided exactly.
    pub fn met_by(&self, value: &Rational) -> bool {
        match self {
            Threshold::Exact(t) => value >= t,
            Threshold::Irrational(s) => s.le_rational(value),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Threshold::Exact(t) => to_f64(t),
            Threshold::Irrational(s) => s.to_f64(),
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Exact(t) => write!(f, "{}", crate::rational::format_exact(t)),
            Threshold::Irrational(s) => write!(f, "{s}"),
        }
    }
}

/// `(2/3) * (1/2 + sqrt(3)/4)`: hybrid welfare against the optimum.
pub fn hybrid_vs_optimum() -> Surd {
    Surd::new(ratio(1, 3), ratio(1, 6), int(3))
}

/// `min_j p_j / ⌈p_j⌉` over items with positive PF price.
pub fn sdm_guarantee(prices: &[Rational]) -> Rational {
    prices
        .iter()
        .filter(|p| !p.is_zero())
        .map(|p| p / p.ceil())
        .min()
        .unwrap_or_else(Rational::one)
}

/// Some priced item is cheaper than one, outside the strong-demand regime.
pub fn below_unit_price(prices: &[Rational]) -> bool {
    prices.iter().any(|p| !p.is_zero() && *p < Rational::one())
}

/// Lower bound on `ρ` for `kind` on `inst`.
pub fn rho_threshold(kind: MechanismKind, inst: &Instance, pf: &PfSolution) -> Option<Threshold> {
    match kind {
        MechanismKind::PartialAllocation => Some(Threshold::Exact(ratio(1, 2))),
        MechanismKind::SingleItem => {
            let n = inst.bidders() as i64;
            Some(Threshold::Exact(ratio(n, n + 1)))
        }
        MechanismKind::TwoBidderTwoItem => Some(Threshold::Irrational(bounds::two_bidder_two_item())),
        MechanismKind::ThreeBidderTwoItem => Some(Threshold::Irrational(bounds::three_bidder_two_item())),
        MechanismKind::StrongDemandMatching => Some(Threshold::Exact(sdm_guarantee(&pf.prices))),
        MechanismKind::SwapDictatorial | MechanismKind::Hybrid => None,
    }
}

/// Lower bound on `SW / Σ_j max_i v_ij`.
pub fn sw_opt_threshold(kind: MechanismKind) -> Option<Threshold> {
    match kind {
        MechanismKind::Hybrid => Some(Threshold::Irrational(hybrid_vs_optimum())),
        _ => None,
    }
}

/// Lower bound on `SW / SW(x_PF)`.
pub fn sw_pf_threshold(kind: MechanismKind) -> Option<Threshold> {
    match kind {
        MechanismKind::Hybrid => Some(Threshold::Exact(bounds::hybrid_vs_pf())),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hybrid_optimum_bound_value() {
        assert!((hybrid_vs_optimum().to_f64() - 0.622_008_46).abs() < 1e-8);
        assert!(Threshold::Irrational(hybrid_vs_optimum()).met_by(&ratio(623, 1000)));
        assert!(!Threshold::Irrational(hybrid_vs_optimum()).met_by(&ratio(622, 1000)));
    }

    #[test]
    fn sdm_guarantee_examples() {
        assert_eq!(sdm_guarantee(&[int(2), ratio(3, 2)]), ratio(3, 4));
        assert_eq!(sdm_guarantee(&[int(3), int(0)]), int(1));
        assert_eq!(sdm_guarantee(&[ratio(5, 2), ratio(1, 2)]), ratio(1, 2));
        assert!(below_unit_price(&[ratio(5, 2), ratio(1, 2)]));
        assert!(!below_unit_price(&[int(3), int(0)]));
    }
}
