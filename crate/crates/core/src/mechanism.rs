use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance, MechanismResult};
use crate::pf::solve_pf_exact;
use crate::{sdm, sw, two_item};

pub trait Mechanism: Sync {
    fn name(&self) -> &str;

    /// Errors with [`Error::ShapeMismatch`] when the mechanism does not apply.
    fn check_shape(&self, inst: &Instance) -> Result<()>;

    fn allocate(&self, inst: &Instance) -> Result<Allocation>;

    fn run(&self, inst: &Instance) -> Result<MechanismResult> {
        let x = self.allocate(inst)?;
        let pf = solve_pf_exact(inst)?;
        MechanismResult::new(inst, x, &pf.utilities)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MechanismKind {
    PartialAllocation,
    SwapDictatorial,
    Hybrid,
    SingleItem,
    TwoBidderTwoItem,
    ThreeBidderTwoItem,
    StrongDemandMatching,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 7] = [
        MechanismKind::PartialAllocation,
        MechanismKind::SwapDictatorial,
        MechanismKind::Hybrid,
        MechanismKind::SingleItem,
        MechanismKind::TwoBidderTwoItem,
        MechanismKind::ThreeBidderTwoItem,
        MechanismKind::StrongDemandMatching,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MechanismKind::PartialAllocation => "pa",
            MechanismKind::SwapDictatorial => "swap",
            MechanismKind::Hybrid => "hybrid",
            MechanismKind::SingleItem => "si",
            MechanismKind::TwoBidderTwoItem => "two2",
            MechanismKind::ThreeBidderTwoItem => "three2",
            MechanismKind::StrongDemandMatching => "sdm",
        }
    }

    /// `(n, m)` requirements; `None` means any.
    pub fn shape(self) -> (Option<usize>, Option<usize>) {
        match self {
            MechanismKind::PartialAllocation | MechanismKind::SwapDictatorial | MechanismKind::Hybrid => (Some(2), None),
            MechanismKind::SingleItem => (None, Some(2)),
            MechanismKind::TwoBidderTwoItem => (Some(2), Some(2)),
            MechanismKind::ThreeBidderTwoItem => (Some(3), Some(2)),
            MechanismKind::StrongDemandMatching => (None, None),
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MechanismKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parse {
                context: "mechanism".into(),
                message: format!("unknown mechanism {s:?}"),
            })
    }
}

impl Mechanism for MechanismKind {
    fn name(&self) -> &str {
        self.as_str()
    }

    fn check_shape(&self, inst: &Instance) -> Result<()> {
        let mechanism = self.as_str();
        match self.shape() {
            (Some(2), _) if inst.bidders() != 2 => Err(Error::ShapeMismatch {
                mechanism,
                requirement: "n=2",
            }),
            (Some(3), _) if inst.bidders() != 3 => Err(Error::ShapeMismatch {
                mechanism,
                requirement: "n=3",
            }),
            (_, Some(2)) if inst.items() != 2 => Err(Error::ShapeMismatch {
                mechanism,
                requirement: "m=2",
            }),
            _ => Ok(()),
        }
    }

    fn allocate(&self, inst: &Instance) -> Result<Allocation> {
        self.check_shape(inst)?;
        match self {
            MechanismKind::SwapDictatorial => sw::swap_dictatorial_allocation(inst),
            MechanismKind::StrongDemandMatching => Ok(sdm::run_sdm(inst)?.allocation),
            _ => Ok(self.run(inst)?.allocation),
        }
    }

    fn run(&self, inst: &Instance) -> Result<MechanismResult> {
        self.check_shape(inst)?;
        match self {
            MechanismKind::PartialAllocation => sw::partial_allocation(inst),
            MechanismKind::SwapDictatorial => sw::swap_dictatorial(inst),
            MechanismKind::Hybrid => sw::hybrid(inst),
            MechanismKind::SingleItem => two_item::si_mechanism(inst),
            MechanismKind::TwoBidderTwoItem => two_item::two_bidder_two_item(inst),
            MechanismKind::ThreeBidderTwoItem => two_item::three_bidder_two_item(inst),
            MechanismKind::StrongDemandMatching => sdm::sdm_mechanism(inst),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in MechanismKind::ALL {
            assert_eq!(k.as_str().parse::<MechanismKind>().unwrap(), k);
        }
        assert!("nope".parse::<MechanismKind>().is_err());
    }

    #[test]
    fn shape_errors_name_the_constraint() {
        let inst = Instance::from_weights(&[[1, 1], [1, 2], [2, 1]]).unwrap();
        let err = MechanismKind::PartialAllocation.run(&inst).unwrap_err();
        assert_eq!(err.to_string(), "pa requires n=2");
        assert!(MechanismKind::SingleItem.run(&inst).is_ok());
        let wide = Instance::from_weights(&[[1, 1, 1], [1, 2, 3]]).unwrap();
        assert_eq!(
            MechanismKind::TwoBidderTwoItem.run(&wide).unwrap_err().to_string(),
            "two2 requires m=2"
        );
    }
}
