//! Instances, allocations, and the welfare / PF-ratio metrics.
//!
//! Valuations are additive. Every row of an [`Instance`] sums to exactly one,
//! so a bidder's utility for a bundle is the fraction of her total value she
//! receives. An [`Allocation`] may leave part of an item unassigned; those
//! leftovers are discarded.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::pf::PfSolution;
use crate::rational::Rational;

/// Normalized valuation matrix: `n` bidders by `m` items.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instance {
    values: Vec<Vec<Rational>>,
}

impl Instance {
    /// Divides each row by its sum.
    pub fn normalize(raw: Vec<Vec<Rational>>) -> Result<Self> {
        let m = raw.first().map_or(0, Vec::len);
        if raw.is_empty() || m == 0 {
            return Err(Error::EmptyInstance);
        }
        let mut values = Vec::with_capacity(raw.len());
        for (i, row) in raw.into_iter().enumerate() {
            if row.len() != m {
                return Err(Error::Ragged {
                    row: i,
                    expected: m,
                    found: row.len(),
                });
            }
            if let Some(j) = row.iter().position(Signed::is_negative) {
                return Err(Error::NegativeValue { bidder: i, item: j });
            }
            let total: Rational = row.iter().sum();
            if total.is_zero() {
                return Err(Error::DegenerateBidder { bidder: i });
            }
            values.push(row.into_iter().map(|v| v / &total).collect());
        }
        Ok(Self { values })
    }

    /// Convenience constructor from integer weights.
    pub fn from_weights<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        Self::normalize(
            rows.iter()
                .map(|r| r.as_ref().iter().map(|&w| crate::rational::int(w)).collect())
                .collect(),
        )
    }

    pub fn bidders(&self) -> usize {
        self.values.len()
    }

    pub fn items(&self) -> usize {
        self.values[0].len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.bidders(), self.items())
    }

    pub fn value(&self, bidder: usize, item: usize) -> &Rational {
        &self.values[bidder][item]
    }

    pub fn row(&self, bidder: usize) -> &[Rational] {
        &self.values[bidder]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.values
    }

    /// The same instance with `bidder` reporting `bid` instead (re-normalized).
    pub fn with_bid(&self, bidder: usize, bid: &[Rational]) -> Result<Self> {
        let mut raw = self.values.clone();
        raw[bidder] = bid.to_vec();
        Self::normalize(raw)
    }

    /// Drops one bidder. Errors if that would leave no bidders.
    pub fn without_bidder(&self, bidder: usize) -> Result<Self> {
        if self.bidders() <= 1 {
            return Err(Error::EmptyInstance);
        }
        let mut values = self.values.clone();
        values.remove(bidder);
        Ok(Self { values })
    }

    /// Reorders columns: item `j` of the result is item `perm[j]` of `self`.
    pub fn permute_items(&self, perm: &[usize]) -> Self {
        Self {
            values: self
                .values
                .iter()
                .map(|row| perm.iter().map(|&j| row[j].clone()).collect())
                .collect(),
        }
    }

    /// `Σ_j max_i v_ij`, the welfare of giving every item to its top valuer.
    pub fn optimal_welfare(&self) -> Rational {
        (0..self.items())
            .map(|j| {
                self.values
                    .iter()
                    .map(|row| &row[j])
                    .max()
                    .cloned()
                    .unwrap_or_else(Rational::zero)
            })
            .sum()
    }
}

/// Fractions `x_ij` of item `j` held by bidder `i`, with column sums at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    shares: Vec<Vec<Rational>>,
}

impl Allocation {
    pub fn zeros(bidders: usize, items: usize) -> Self {
        Self {
            shares: vec![vec![Rational::zero(); items]; bidders],
        }
    }

    /// Validates entries in `[0, 1]` and column sums `<= 1`.
    pub fn new(shares: Vec<Vec<Rational>>) -> Result<Self> {
        let alloc = Self { shares };
        alloc.validate()?;
        Ok(alloc)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.items();
        let one = Rational::one();
        for (i, row) in self.shares.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidAllocation(format!("row {i} is ragged")));
            }
            for (j, x) in row.iter().enumerate() {
                if x.is_negative() || *x > one {
                    return Err(Error::InvalidAllocation(format!(
                        "share of bidder {i} in item {j} is {x}"
                    )));
                }
            }
        }
        for j in 0..m {
            let total = self.column_total(j);
            if total > one {
                return Err(Error::InvalidAllocation(format!(
                    "item {j} is over-allocated ({total})"
                )));
            }
        }
        Ok(())
    }

    pub fn bidders(&self) -> usize {
        self.shares.len()
    }

    pub fn items(&self) -> usize {
        self.shares.first().map_or(0, Vec::len)
    }

    pub fn share(&self, bidder: usize, item: usize) -> &Rational {
        &self.shares[bidder][item]
    }

    pub fn set_share(&mut self, bidder: usize, item: usize, x: Rational) {
        self.shares[bidder][item] = x;
    }

    pub fn row(&self, bidder: usize) -> &[Rational] {
        &self.shares[bidder]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.shares
    }

    pub fn column_total(&self, item: usize) -> Rational {
        self.shares.iter().map(|row| &row[item]).sum()
    }

    /// Every share multiplied by the per-bidder factor `scale[i]`.
    pub fn scale_rows(&self, scale: &[Rational]) -> Result<Self> {
        Self::new(
            self.shares
                .iter()
                .zip(scale)
                .map(|(row, s)| row.iter().map(|x| x * s).collect())
                .collect(),
        )
    }

    /// `weight * self + (1 - weight) * other`.
    pub fn mix(&self, other: &Self, weight: &Rational) -> Result<Self> {
        if self.bidders() != other.bidders() || self.items() != other.items() {
            return Err(Error::DimensionMismatch {
                expected: (self.bidders(), self.items()),
                found: (other.bidders(), other.items()),
            });
        }
        let rest = Rational::one() - weight;
        Self::new(
            self.shares
                .iter()
                .zip(&other.shares)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * weight + y * &rest).collect())
                .collect(),
        )
    }

    pub fn permute_items(&self, perm: &[usize]) -> Self {
        Self {
            shares: self
                .shares
                .iter()
                .map(|row| perm.iter().map(|&j| row[j].clone()).collect())
                .collect(),
        }
    }
}

fn check_shape(inst: &Instance, x: &Allocation) -> Result<()> {
    if inst.shape() != (x.bidders(), x.items()) {
        return Err(Error::DimensionMismatch {
            expected: inst.shape(),
            found: (x.bidders(), x.items()),
        });
    }
    Ok(())
}

/// `v_i(x)` for every bidder.
pub fn utilities(inst: &Instance, x: &Allocation) -> Result<Vec<Rational>> {
    check_shape(inst, x)?;
    Ok(inst
        .rows()
        .iter()
        .zip(x.rows())
        .map(|(v, s)| v.iter().zip(s).map(|(a, b)| a * b).sum())
        .collect())
}

/// `SW(x) = Σ_i v_i(x)`.
pub fn social_welfare(inst: &Instance, x: &Allocation) -> Result<Rational> {
    Ok(utilities(inst, x)?.into_iter().sum())
}

/// Per-bidder `v_i(x) / v_i(x_PF)` and their minimum.
pub fn pf_fraction(inst: &Instance, x: &Allocation, pf: &PfSolution) -> Result<(Vec<Rational>, Rational)> {
    let utils = utilities(inst, x)?;
    fractions(&utils, &pf.utilities)
}

fn fractions(utils: &[Rational], pf_utils: &[Rational]) -> Result<(Vec<Rational>, Rational)> {
    if utils.len() != pf_utils.len() {
        return Err(Error::DimensionMismatch {
            expected: (pf_utils.len(), 1),
            found: (utils.len(), 1),
        });
    }
    let mut out = Vec::with_capacity(utils.len());
    for (i, (u, p)) in utils.iter().zip(pf_utils).enumerate() {
        if !p.is_positive() {
            return Err(Error::ZeroPfUtility { bidder: i });
        }
        out.push(u / p);
    }
    let min = out.iter().min().cloned().unwrap_or_else(Rational::one);
    Ok((out, min))
}

/// An allocation together with its utilities, PF fractions, and welfare.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MechanismResult {
    pub allocation: Allocation,
    pub per_bidder_utility: Vec<Rational>,
    pub per_bidder_pf_fraction: Vec<Rational>,
    pub rho: Rational,
    pub sw: Rational,
}

impl MechanismResult {
    pub fn new(inst: &Instance, allocation: Allocation, pf_utilities: &[Rational]) -> Result<Self> {
        allocation.validate()?;
        let per_bidder_utility = utilities(inst, &allocation)?;
        let (per_bidder_pf_fraction, rho) = fractions(&per_bidder_utility, pf_utilities)?;
        let sw = per_bidder_utility.iter().sum();
        Ok(Self {
            allocation,
            per_bidder_utility,
            per_bidder_pf_fraction,
            rho,
            sw,
        })
    }
}

/// Values of other bidders' bundles, used for envy checks: `envy[i][k] = v_i(x_k)`.
pub fn bundle_values(inst: &Instance, x: &Allocation) -> Result<Vec<Vec<Rational>>> {
    check_shape(inst, x)?;
    Ok(inst
        .rows()
        .iter()
        .map(|v| {
            x.rows()
                .iter()
                .map(|s| v.iter().zip(s).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect())
}

/// True when no bidder strictly prefers another bidder's bundle.
pub fn is_envy_free(inst: &Instance, x: &Allocation) -> Result<bool> {
    let table = bundle_values(inst, x)?;
    Ok(table
        .iter()
        .enumerate()
        .all(|(i, row)| row.iter().all(|other| other <= &row[i])))
}
