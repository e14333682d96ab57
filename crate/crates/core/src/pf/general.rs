//! General PF solver: a smoothed price-space dual minimized by Newton's method,
//! followed by an exact rounding step.
//!
//! Equilibrium prices minimize `Σ_j p_j + Σ_i log max_j (v_ij / p_j)`. The max
//! is replaced by a log-sum-exp at temperature `μ`, which makes the objective
//! smooth and strictly convex in `q = log p`, and `μ` is lowered tenfold per
//! stage with warm starts. At the optimum for a given `μ` each bidder spends
//! her budget by softmax over bang per buck. Once `μ` is small the near-MBB
//! graph is turned into exact prices (ratios along a spanning forest, scaled
//! so every component's prices sum to its bidder count) and handed to
//! [`certify_prices`]. Once that succeeds the answer is exact.

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{utilities, Allocation, Instance};
use crate::rational::{from_f64, int, to_f64, Rational};

use super::equilibrium::certify_prices;
use super::PfSolution;

pub(super) const DEFAULT_TOL: f64 = 1e-9;

const SLACKS: [f64; 11] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12];

/// Spending cutoffs for candidate forests, as fractions of a unit budget.
const SPEND_CUTOFFS: [f64; 5] = [1e-2, 1e-4, 1e-6, 1e-9, 1e-12];

/// Temperatures from `10^0` down to `10^-LAST_STAGE`; below that f64 runs out.
const LAST_STAGE: i32 = 10;

/// Certification is attempted once `μ` is at most this.
const CERTIFY_BELOW: f64 = 1e-3;

const NEWTON_PER_STAGE: usize = 60;

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Relative gap between a bidder's best bang per buck and her utility.
    pub tol: f64,
    /// Total Newton steps over all stages.
    pub max_iterations: usize,
    /// Try to round to exact equilibrium prices after each stage.
    pub exact: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iterations: 2_000,
            exact: true,
        }
    }
}

pub fn solve_pf(inst: &Instance, tol: f64) -> Result<PfSolution> {
    solve_pf_with(
        inst,
        &SolverOptions {
            tol,
            ..SolverOptions::default()
        },
    )
}

struct Smoothed {
    n: usize,
    m: usize,
    v: Vec<f64>,
    /// Items some bidder values; the rest stay at price zero.
    active: Vec<usize>,
    /// Per bidder: `(position in active, log v_ij)` over valued items.
    logs: Vec<Vec<(usize, f64)>>,
    q: DVector<f64>,
}

struct Eval {
    f: f64,
    grad: DVector<f64>,
    /// Softmax spending of each bidder, aligned with `logs`.
    spend: Vec<Vec<f64>>,
}

impl Smoothed {
    fn new(inst: &Instance) -> Self {
        let (n, m) = inst.shape();
        let v: Vec<f64> = inst.rows().iter().flatten().map(to_f64).collect();
        let active: Vec<usize> = (0..m).filter(|&j| (0..n).any(|i| v[i * m + j] > 0.0)).collect();
        let logs = (0..n)
            .map(|i| {
                active
                    .iter()
                    .enumerate()
                    .filter(|&(_, &j)| v[i * m + j] > 0.0)
                    .map(|(k, &j)| (k, v[i * m + j].ln()))
                    .collect()
            })
            .collect();
        // start from every bidder splitting her budget in proportion to value
        let q = DVector::from_iterator(active.len(), active.iter().map(|&j| (0..n).map(|i| v[i * m + j]).sum::<f64>().ln()));
        Self {
            n,
            m,
            v,
            active,
            logs,
            q,
        }
    }

    fn eval(&self, q: &DVector<f64>, mu: f64) -> Eval {
        let mut f: f64 = q.iter().map(|x| x.exp()).sum();
        let mut grad = q.map(f64::exp);
        let mut spend = Vec::with_capacity(self.n);
        for row in &self.logs {
            let top = row.iter().map(|&(k, lv)| lv - q[k]).fold(f64::NEG_INFINITY, f64::max);
            let mut w: Vec<f64> = row.iter().map(|&(k, lv)| ((lv - q[k] - top) / mu).exp()).collect();
            let z: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= z);
            f += top + mu * z.ln();
            for (&(k, _), &x) in row.iter().zip(&w) {
                grad[k] -= x;
            }
            spend.push(w);
        }
        Eval { f, grad, spend }
    }

    fn hessian(&self, mu: f64, spend: &[Vec<f64>]) -> DMatrix<f64> {
        let a = self.active.len();
        let mut h = DMatrix::from_diagonal(&self.q.map(f64::exp));
        for (row, w) in self.logs.iter().zip(spend) {
            for (x, &(k, _)) in row.iter().enumerate() {
                h[(k, k)] += w[x] / mu;
                for (y, &(l, _)) in row.iter().enumerate() {
                    h[(k, l)] -= w[x] * w[y] / mu;
                }
            }
        }
        debug_assert_eq!(h.nrows(), a);
        h
    }

    /// Damped Newton at one temperature. Returns steps taken.
    ///
    /// Once the predicted decrease is below the rounding level of `f`, the
    /// Armijo test is noise, so full steps are taken while the gradient shrinks.
    fn minimize(&mut self, mu: f64, budget: usize) -> usize {
        let mut cur = self.eval(&self.q, mu);
        for step in 0..budget {
            let h = self.hessian(mu, &cur.spend);
            let Some(chol) = h.cholesky() else { return step };
            let dir = chol.solve(&(-&cur.grad));
            let slope = cur.grad.dot(&dir);
            if dir.amax() < 1e-15 || slope >= 0.0 {
                return step;
            }
            if -slope <= 1e-13 * (1.0 + cur.f.abs()) {
                let cand = &self.q + &dir;
                let next = self.eval(&cand, mu);
                if next.grad.amax() >= cur.grad.amax() {
                    return step;
                }
                self.q = cand;
                cur = next;
                continue;
            }
            let mut t = 1.0;
            loop {
                let cand = &self.q + &dir * t;
                let next = self.eval(&cand, mu);
                if next.f <= cur.f + 1e-4 * t * slope {
                    self.q = cand;
                    cur = next;
                    break;
                }
                t *= 0.5;
                if t < 1e-12 {
                    return step + 1;
                }
            }
        }
        budget
    }

    fn prices(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.m];
        for (k, &j) in self.active.iter().enumerate() {
            p[j] = self.q[k].exp();
        }
        p
    }

    /// Bidder-item pairs within relative `slack` of the bidder's best bang per buck.
    fn near_mbb(&self, slack: f64) -> Vec<Vec<usize>> {
        let p = self.prices();
        (0..self.n)
            .map(|i| {
                let row = &self.v[i * self.m..(i + 1) * self.m];
                let a = (0..self.m).filter(|&j| p[j] > 0.0).map(|j| row[j] / p[j]).fold(0.0, f64::max);
                (0..self.m)
                    .filter(|&j| p[j] > 0.0 && row[j] > 0.0 && row[j] / p[j] >= (1.0 - slack) * a)
                    .collect()
            })
            .collect()
    }

    /// Maximum-spending forest over edges carrying at least `tau` of a bidder's
    /// budget. Any equilibrium spending pattern can be taken acyclic, and
    /// heavily used edges are the ones most surely tight.
    fn spend_forest(&self, mu: f64, tau: f64) -> Vec<Vec<usize>> {
        let spend = self.eval(&self.q, mu).spend;
        let mut cand: Vec<(f64, usize, usize)> = Vec::new();
        for (i, (row, w)) in self.logs.iter().zip(&spend).enumerate() {
            for (&(k, _), &x) in row.iter().zip(w) {
                if x >= tau {
                    cand.push((x, i, self.active[k]));
                }
            }
        }
        cand.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        // union-find over bidders 0..n and items n..n+m
        let mut parent: Vec<usize> = (0..self.n + self.m).collect();
        fn root(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut edges = vec![Vec::new(); self.n];
        for (_, i, j) in cand {
            let (a, b) = (root(&mut parent, i), root(&mut parent, self.n + j));
            if a != b {
                parent[a] = b;
                edges[i].push(j);
            }
        }
        edges.iter_mut().for_each(|e| e.sort_unstable());
        edges
    }

    /// Shares `x_ij = spend_ij / p_j`, each column capped at one.
    fn shares(&self, mu: f64) -> Vec<Vec<f64>> {
        let p = self.prices();
        let spend = self.eval(&self.q, mu).spend;
        let mut x = vec![vec![0.0; self.m]; self.n];
        for (i, (row, w)) in self.logs.iter().zip(&spend).enumerate() {
            for (&(k, _), &s) in row.iter().zip(w) {
                let j = self.active[k];
                x[i][j] = s / p[j];
            }
        }
        for j in 0..self.m {
            let total: f64 = (0..self.n).map(|i| x[i][j]).sum();
            if total > 1.0 {
                (0..self.n).for_each(|i| x[i][j] /= total);
            }
        }
        x
    }

    fn residual(&self, mu: f64) -> f64 {
        let p = self.prices();
        let x = self.shares(mu);
        (0..self.n)
            .map(|i| {
                let row = &self.v[i * self.m..(i + 1) * self.m];
                let a = (0..self.m).filter(|&j| p[j] > 0.0).map(|j| row[j] / p[j]).fold(0.0, f64::max);
                let u: f64 = (0..self.m).map(|j| row[j] * x[i][j]).sum();
                if a > 0.0 {
                    ((a - u) / a).max(0.0)
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }

    fn float_solution(&self, inst: &Instance, mu: f64) -> Result<PfSolution> {
        let shares: Vec<Vec<Rational>> = self
            .shares(mu)
            .iter()
            .map(|row| row.iter().map(|&x| from_f64(x).unwrap_or_else(Rational::zero)).collect())
            .collect();
        // exact rescaling: float rounding can leave a column a hair above one
        let mut shares = shares;
        for j in 0..self.m {
            let total: Rational = shares.iter().map(|r| r[j].clone()).sum();
            if total > Rational::one() {
                shares.iter_mut().for_each(|r| r[j] /= &total);
            }
        }
        let allocation = Allocation::new(shares)?;
        let utilities = utilities(inst, &allocation)?;
        let prices = self
            .prices()
            .iter()
            .map(|&p| from_f64(p).unwrap_or_else(Rational::zero))
            .collect();
        Ok(PfSolution {
            allocation,
            prices,
            utilities,
            certified: false,
        })
    }
}

/// Exact prices implied by treating `edges` as the MBB graph.
fn prices_from_graph(inst: &Instance, edges: &[Vec<usize>]) -> Vec<Rational> {
    let (n, m) = inst.shape();
    let mut item_bidders = vec![Vec::new(); m];
    for (i, items) in edges.iter().enumerate() {
        for &j in items {
            item_bidders[j].push(i);
        }
    }
    let mut prices: Vec<Option<Rational>> = vec![None; m];
    let mut alpha: Vec<Option<Rational>> = vec![None; n];
    for root in 0..m {
        if prices[root].is_some() || item_bidders[root].is_empty() {
            continue;
        }
        prices[root] = Some(Rational::one());
        let mut comp_items = vec![root];
        let mut comp_bidders = 0usize;
        let mut head = 0;
        while head < comp_items.len() {
            let j = comp_items[head];
            head += 1;
            let pj = prices[j].clone().expect("visited items are priced");
            for &i in &item_bidders[j] {
                if alpha[i].is_some() {
                    continue;
                }
                let a = inst.value(i, j) / &pj;
                for &k in &edges[i] {
                    if prices[k].is_none() {
                        prices[k] = Some(inst.value(i, k) / &a);
                        comp_items.push(k);
                    }
                }
                alpha[i] = Some(a);
                comp_bidders += 1;
            }
        }
        let total: Rational = comp_items.iter().map(|&j| prices[j].clone().unwrap()).sum();
        let scale = int(comp_bidders as i64) / total;
        for &j in &comp_items {
            if let Some(p) = prices[j].as_mut() {
                *p *= &scale;
            }
        }
    }
    prices.into_iter().map(|p| p.unwrap_or_else(Rational::zero)).collect()
}

/// Float version of [`prices_from_graph`] followed by the MBB test: no bidder
/// may see a strictly better item than those on her graph edges. Cheap enough
/// to screen every candidate graph before the exact attempt.
fn float_consistent(v: &[f64], m: usize, edges: &[Vec<usize>]) -> bool {
    let n = edges.len();
    let mut item_bidders = vec![Vec::new(); m];
    for (i, items) in edges.iter().enumerate() {
        for &j in items {
            item_bidders[j].push(i);
        }
    }
    let mut p: Vec<Option<f64>> = vec![None; m];
    let mut alpha: Vec<Option<f64>> = vec![None; n];
    for root in 0..m {
        if p[root].is_some() || item_bidders[root].is_empty() {
            continue;
        }
        p[root] = Some(1.0);
        let mut comp = vec![root];
        let mut bidders = 0usize;
        let mut head = 0;
        while head < comp.len() {
            let j = comp[head];
            head += 1;
            for &i in &item_bidders[j] {
                if alpha[i].is_some() {
                    continue;
                }
                let a = v[i * m + j] / p[j].unwrap();
                for &k in &edges[i] {
                    if p[k].is_none() {
                        p[k] = Some(v[i * m + k] / a);
                        comp.push(k);
                    }
                }
                alpha[i] = Some(a);
                bidders += 1;
            }
        }
        let scale = bidders as f64 / comp.iter().map(|&j| p[j].unwrap()).sum::<f64>();
        for &j in &comp {
            p[j] = p[j].map(|x| x * scale);
        }
    }
    (0..n).all(|i| {
        let Some(&j0) = edges[i].first() else { return false };
        let own = v[i * m + j0] / p[j0].unwrap();
        (0..m).all(|j| match p[j] {
            Some(pj) => v[i * m + j] / pj <= own * (1.0 + 1e-9),
            None => v[i * m + j] == 0.0,
        })
    })
}

fn try_certify(inst: &Instance, state: &Smoothed, mu: f64, tried: &mut Vec<Vec<Vec<usize>>>) -> Option<PfSolution> {
    let forests = SPEND_CUTOFFS.iter().map(|&tau| state.spend_forest(mu, tau));
    let graphs = SLACKS.iter().map(|&slack| state.near_mbb(slack));
    for edges in forests.chain(graphs) {
        if tried.contains(&edges) {
            continue;
        }
        if !float_consistent(&state.v, state.m, &edges) {
            tried.push(edges);
            continue;
        }
        let prices = prices_from_graph(inst, &edges);
        tried.push(edges);
        if let Some((allocation, utilities)) = certify_prices(inst, &prices) {
            return Some(PfSolution {
                allocation,
                prices,
                utilities,
                certified: true,
            });
        }
    }
    None
}

pub fn solve_pf_with(inst: &Instance, opts: &SolverOptions) -> Result<PfSolution> {
    let mut state = Smoothed::new(inst);
    let mut tried = Vec::new();
    let mut steps = 0;
    let mut mu = 1.0;
    for stage in 0..=LAST_STAGE {
        mu = 10f64.powi(-stage);
        let budget = NEWTON_PER_STAGE.min(opts.max_iterations.saturating_sub(steps));
        steps += state.minimize(mu, budget);
        if opts.exact && mu <= CERTIFY_BELOW {
            if let Some(sol) = try_certify(inst, &state, mu, &mut tried) {
                return Ok(sol);
            }
        }
        if steps >= opts.max_iterations {
            break;
        }
    }
    let residual = state.residual(mu);
    if residual <= opts.tol {
        return state.float_solution(inst, mu);
    }
    Err(Error::SolverFailure {
        iterations: steps,
        residual,
    })
}
#[cfg(test)]
mod tests {
    use super::*;
    use crate::pf::verify_equilibrium;
    use crate::rational::ratio;

    #[test]
    fn symmetric_two_by_two() {
        let inst = Instance::from_weights(&[[1, 1], [1, 1]]).unwrap();
        let sol = solve_pf(&inst, 1e-9).unwrap();
        assert!(sol.certified);
        assert_eq!(sol.prices, vec![int(1), int(1)]);
        assert_eq!(sol.utilities, vec![ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn single_item() {
        let inst = Instance::from_weights(&[[1], [1], [1]]).unwrap();
        let sol = solve_pf(&inst, 1e-9).unwrap();
        assert_eq!(sol.prices, vec![int(3)]);
        assert_eq!(sol.utilities, vec![ratio(1, 3); 3]);
    }

    #[test]
    fn three_item_split() {
        let inst = Instance::from_weights(&[[6, 3, 1], [2, 3, 5]]).unwrap();
        let sol = solve_pf(&inst, 1e-9).unwrap();
        assert!(sol.certified);
        assert_eq!(sol.utilities, vec![ratio(7, 10), ratio(7, 10)]);
        assert!(verify_equilibrium(&inst, &sol, 0.0).is_ok());
    }

    #[test]
    fn float_fallback_is_close() {
        let inst = Instance::from_weights(&[[5, 3, 2], [1, 7, 2], [3, 3, 4]]).unwrap();
        let opts = SolverOptions {
            exact: false,
            ..SolverOptions::default()
        };
        let float = solve_pf_with(&inst, &opts).unwrap();
        let exact = solve_pf(&inst, 1e-9).unwrap();
        assert!(!float.certified && exact.certified);
        for (a, b) in float.utilities.iter().zip(&exact.utilities) {
            assert!((to_f64(a) - to_f64(b)).abs() < 1e-6);
        }
        assert!(verify_equilibrium(&inst, &float, 1e-6).is_ok());
    }

    #[test]
    fn unvalued_item_stays_unpriced() {
        let inst = Instance::from_weights(&[[1, 0, 1], [2, 0, 1]]).unwrap();
        let sol = solve_pf(&inst, 1e-9).unwrap();
        assert!(sol.certified);
        assert_eq!(sol.prices[1], int(0));
        assert!(verify_equilibrium(&inst, &sol, 0.0).is_ok());
    }
}
