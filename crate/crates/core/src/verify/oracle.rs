//! Brute-force PF oracle on a lattice of allocations.
//!
//! Every share is a multiple of `1/grid`. Small lattices are enumerated in
//! full. Larger ones start from the best point of a coarse enumeration and
//! improve it by moving `δ/grid` of one item between two bidders, with `δ`
//! halving down to one. The objective `Σ log u_i` is concave, so these
//! exchanges settle next to the true optimum.

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance};
use crate::rational::{int, to_f64, Rational};

/// Largest lattice enumerated in full.
pub const EXHAUSTIVE_LIMIT: u128 = 20_000_000;

/// Above this many shares the oracle refuses.
pub const MAX_VARIABLES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub allocation: Allocation,
    pub utilities: Vec<Rational>,
    pub log_objective: f64,
    pub exhaustive: bool,
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(left - k, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

fn lattice_size(n: usize, m: usize, grid: usize) -> u128 {
    binomial((grid + n - 1) as u128, (n - 1) as u128).saturating_pow(m as u32)
}

struct Lattice<'a> {
    v: &'a [Vec<f64>],
    n: usize,
    m: usize,
    grid: usize,
}

impl Lattice<'_> {
    fn objective(&self, units: &[Vec<usize>]) -> f64 {
        (0..self.n)
            .map(|i| {
                let u: f64 = (0..self.m).map(|j| self.v[i][j] * units[i][j] as f64).sum::<f64>() / self.grid as f64;
                u.ln()
            })
            .sum()
    }

    fn enumerate(&self) -> (Vec<Vec<usize>>, f64) {
        let comps = compositions(self.grid, self.n);
        let mut best = (vec![vec![0; self.m]; self.n], f64::NEG_INFINITY);
        let mut choice = vec![0usize; self.m];
        let mut partial = vec![vec![0.0; self.n]; self.m + 1];
        self.descend(0, &comps, &mut choice, &mut partial, &mut best);
        best
    }

    fn descend(
        &self,
        j: usize,
        comps: &[Vec<usize>],
        choice: &mut Vec<usize>,
        partial: &mut Vec<Vec<f64>>,
        best: &mut (Vec<Vec<usize>>, f64),
    ) {
        if j == self.m {
            let obj: f64 = partial[j].iter().map(|u| (u / self.grid as f64).ln()).sum();
            if obj > best.1 {
                let mut units = vec![vec![0; self.m]; self.n];
                for (jj, &c) in choice.iter().enumerate() {
                    for i in 0..self.n {
                        units[i][jj] = comps[c][i];
                    }
                }
                *best = (units, obj);
            }
            return;
        }
        for (c, comp) in comps.iter().enumerate() {
            choice[j] = c;
            for i in 0..self.n {
                partial[j + 1][i] = partial[j][i] + self.v[i][j] * comp[i] as f64;
            }
            self.descend(j + 1, comps, choice, partial, best);
        }
    }

    fn ascend(&self, units: &mut [Vec<usize>], mut obj: f64, mut step: usize) -> f64 {
        while step >= 1 {
            loop {
                let mut improved = false;
                for j in 0..self.m {
                    for a in 0..self.n {
                        for b in 0..self.n {
                            if a == b || units[a][j] < step {
                                continue;
                            }
                            units[a][j] -= step;
                            units[b][j] += step;
                            let cand = self.objective(units);
                            if cand > obj + 1e-15 {
                                obj = cand;
                                improved = true;
                            } else {
                                units[a][j] += step;
                                units[b][j] -= step;
                            }
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            step /= 2;
        }
        obj
    }
}

pub fn brute_force_pf(inst: &Instance, grid: usize) -> Result<OracleSolution> {
    let (n, m) = inst.shape();
    if n * m > MAX_VARIABLES || grid == 0 {
        return Err(Error::Intractable {
            cells: lattice_size(n, m, grid.max(1)),
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let v: Vec<Vec<f64>> = inst.rows().iter().map(|r| r.iter().map(to_f64).collect()).collect();
    let full = Lattice { v: &v, n, m, grid };
    let exhaustive = lattice_size(n, m, grid) <= EXHAUSTIVE_LIMIT;
    let (units, obj) = if exhaustive {
        full.enumerate()
    } else {
        let mut coarse = grid;
        while coarse > 1 && lattice_size(n, m, coarse) > EXHAUSTIVE_LIMIT / 20 {
            coarse /= 2;
        }
        let (start, _) = Lattice { v: &v, n, m, grid: coarse }.enumerate();
        let mut units: Vec<Vec<usize>> = start
            .iter()
            .map(|row| row.iter().map(|&c| c * grid / coarse).collect())
            .collect();
        // hand rounding leftovers to the first bidder who values the item
        for j in 0..m {
            let used: usize = (0..n).map(|i| units[i][j]).sum();
            let owner = (0..n).find(|&i| v[i][j] > 0.0).unwrap_or(0);
            units[owner][j] += grid - used;
        }
        let obj = full.objective(&units);
        let step = (grid / coarse).max(1).next_power_of_two();
        let obj = full.ascend(&mut units, obj, step);
        (units, obj)
    };
    let shares = units
        .iter()
        .map(|row| row.iter().map(|&c| int(c as i64) / int(grid as i64)).collect())
        .collect();
    let allocation = Allocation::new(shares)?;
    let utilities = crate::model::utilities(inst, &allocation)?;
    Ok(OracleSolution {
        allocation,
        utilities,
        log_objective: obj,
        exhaustive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn close(a: &Rational, b: f64, tol: f64) -> bool {
        (to_f64(a) - b).abs() <= tol
    }

    #[test]
    fn symmetric_two_by_two() {
        let inst = Instance::from_weights(&[[1, 1], [1, 1]]).unwrap();
        let s = brute_force_pf(&inst, 50).unwrap();
        assert!(s.exhaustive);
        assert!(s.utilities.iter().all(|u| close(u, 0.5, 1.0 / 50.0)));
    }

    #[test]
    fn three_item_split() {
        let inst = Instance::from_weights(&[[6, 3, 1], [2, 3, 5]]).unwrap();
        let s = brute_force_pf(&inst, 60).unwrap();
        // 1/3 of the middle item is a lattice point for grid 60
        assert_eq!(s.utilities, vec![ratio(7, 10), ratio(7, 10)]);
    }

    #[test]
    fn single_bidder_takes_everything() {
        let inst = Instance::from_weights(&[[1, 2, 3]]).unwrap();
        let s = brute_force_pf(&inst, 10).unwrap();
        assert_eq!(s.utilities, vec![int(1)]);
    }

    #[test]
    fn refuses_large_instances() {
        let inst = Instance::from_weights(&[[1; 5], [1; 5], [1; 5], [1; 5]]).unwrap();
        assert!(matches!(brute_force_pf(&inst, 10), Err(Error::Intractable { .. })));
    }

    #[test]
    fn coarse_then_ascent_for_three_by_three() {
        let inst = Instance::from_weights(&[[5, 3, 2], [1, 7, 2], [3, 3, 4]]).unwrap();
        let s = brute_force_pf(&inst, 200).unwrap();
        assert!(!s.exhaustive);
        let pf = crate::pf::solve_pf(&inst, 1e-9).unwrap();
        for (a, b) in s.utilities.iter().zip(&pf.utilities) {
            assert!(close(a, to_f64(b), 2.0 / 200.0 + 1e-6));
        }
    }
}
