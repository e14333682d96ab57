//! Strong Demand Matching.
//!
//! Every bidder has a unit budget and should end up matched to a single MBB
//! item `j`, receiving `1/p_j` of it. Item `j` can take `⌊p_j⌋` bidders. While
//! some bidders stay unmatched, the prices of all items reachable from them
//! by alternating paths rise by a common factor until either a price hits an
//! integer (capacity grows) or a bidder whose MBB items all lie in the raised
//! set starts to also demand an item outside it.
//!
//! Prices are exact rationals. Candidate events are located with an `f64`
//! shadow of the prices and then confirmed exactly, so tie and integrality
//! events are never decided by rounding.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use num_traits::{One, Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance, MechanismResult};
use crate::pf::solve_pf_exact;
use crate::rational::{format_exact, int, to_f64, Rational};

/// Relative margin for the float prefilter on MBB-growth candidates.
const PREFILTER_MARGIN: f64 = 1e-9;

/// Bidder-to-item MBB edges, items sorted by index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemandGraph {
    pub edges: Vec<Vec<usize>>,
}

impl DemandGraph {
    pub fn bidders(&self) -> usize {
        self.edges.len()
    }
}

/// Exact MBB edges at `prices`.
pub fn demand_graph(inst: &Instance, prices: &[Rational]) -> DemandGraph {
    let edges = (0..inst.bidders())
        .map(|i| {
            let bpb: Vec<Rational> = (0..inst.items()).map(|j| inst.value(i, j) / &prices[j]).collect();
            let best = bpb.iter().max().expect("m >= 1");
            (0..inst.items()).filter(|&j| best.is_positive() && &bpb[j] == best).collect()
        })
        .collect();
    DemandGraph { edges }
}

pub fn capacities(prices: &[Rational]) -> Vec<usize> {
    prices
        .iter()
        .map(|p| p.floor().to_integer().to_usize().unwrap_or(usize::MAX))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    IntegralPrice,
    MbbGrowth,
}

/// How an MBB-growth event continued.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    /// Every added item was full; the raise continues on a larger set.
    Absorbed,
    /// Some added item had room, so more bidders could be matched.
    Augmenting,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub x: Rational,
    pub kind: EventKind,
    /// New MBB edges that appear at the raised prices.
    pub new_edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SdmStats {
    /// Step-1 invocations: the first one plus one after each integral or augmenting event.
    pub step1: usize,
    pub integral_events: usize,
    /// Growth events that only enlarged the raised set.
    pub absorbed_growth: usize,
    pub augmenting_growth: usize,
    /// Longest run of absorbed growth events between two capacity increases.
    pub max_absorbed_run: usize,
    /// Integral events not followed by a new match; always zero for a correct run.
    pub stalled_integral: usize,
    /// Matched bidders after each step 1.
    pub matched_history: Vec<usize>,
}

impl SdmStats {
    pub fn events(&self) -> usize {
        self.integral_events + self.absorbed_growth + self.augmenting_growth
    }
}

/// Reachable items and the bidders `d(R)` reached along the way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reach {
    pub items: Vec<usize>,
    pub bidders: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SdmState<'a> {
    inst: &'a Instance,
    n: usize,
    m: usize,
    v64: Vec<f64>,
    prices: Vec<Rational>,
    p64: Vec<f64>,
    caps: Vec<usize>,
    edges: Vec<Vec<usize>>,
    item_bidders: Vec<Vec<usize>>,
    assigned: Vec<Option<usize>>,
    matched: Vec<BTreeSet<usize>>,
}

enum Search {
    Augmented,
    Stuck(Reach),
}

impl<'a> SdmState<'a> {
    pub fn new(inst: &'a Instance, prices: Vec<Rational>) -> Self {
        let (n, m) = inst.shape();
        let graph = demand_graph(inst, &prices);
        let mut item_bidders = vec![Vec::new(); m];
        for (i, items) in graph.edges.iter().enumerate() {
            for &j in items {
                item_bidders[j].push(i);
            }
        }
        Self {
            inst,
            n,
            m,
            v64: inst.rows().iter().flatten().map(to_f64).collect(),
            p64: prices.iter().map(to_f64).collect(),
            caps: capacities(&prices),
            prices,
            edges: graph.edges,
            item_bidders,
            assigned: vec![None; n],
            matched: vec![BTreeSet::new(); m],
        }
    }

    pub fn prices(&self) -> &[Rational] {
        &self.prices
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assigned
    }

    pub fn graph(&self) -> DemandGraph {
        DemandGraph {
            edges: self.edges.clone(),
        }
    }

    pub fn matched_count(&self) -> usize {
        self.assigned.iter().flatten().count()
    }

    pub fn unmatched(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.assigned[i].is_none()).collect()
    }

    /// Multi-source alternating BFS from the unmatched bidders in index order.
    /// Augments along the first path that ends at an item with spare capacity.
    fn search(&mut self) -> Search {
        let mut seen_bidder = vec![false; self.n];
        let mut seen_item = vec![false; self.m];
        let mut via_item: Vec<Option<usize>> = vec![None; self.n];
        let mut via_bidder = vec![usize::MAX; self.m];
        let mut queue = VecDeque::new();
        let mut reached_bidders = Vec::new();
        let mut reached_items = Vec::new();
        for i in 0..self.n {
            if self.assigned[i].is_none() {
                seen_bidder[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            reached_bidders.push(i);
            for &j in &self.edges[i] {
                if seen_item[j] {
                    continue;
                }
                seen_item[j] = true;
                via_bidder[j] = i;
                reached_items.push(j);
                if self.matched[j].len() < self.caps[j] {
                    self.augment(j, &via_item, &via_bidder);
                    return Search::Augmented;
                }
                for &b in &self.matched[j] {
                    if !seen_bidder[b] {
                        seen_bidder[b] = true;
                        via_item[b] = Some(j);
                        queue.push_back(b);
                    }
                }
            }
        }
        reached_items.sort_unstable();
        reached_bidders.sort_unstable();
        Search::Stuck(Reach {
            items: reached_items,
            bidders: reached_bidders,
        })
    }

    fn augment(&mut self, end: usize, via_item: &[Option<usize>], via_bidder: &[usize]) {
        let mut j = end;
        loop {
            let i = via_bidder[j];
            let previous = self.assigned[i];
            self.assigned[i] = Some(j);
            self.matched[j].insert(i);
            match previous {
                Some(old) => {
                    debug_assert_eq!(via_item[i], Some(old));
                    self.matched[old].remove(&i);
                    j = old;
                }
                None => return,
            }
        }
    }

    /// Step 1: grow the current valid assignment to a maximum one. Returns the
    /// number of new matches and, if bidders remain unmatched, the reachable set.
    pub fn maximize(&mut self) -> (usize, Option<Reach>) {
        let mut gained = 0;
        loop {
            match self.search() {
                Search::Augmented => gained += 1,
                Search::Stuck(reach) => {
                    let unmatched = reach.bidders.iter().any(|&i| self.assigned[i].is_none());
                    return (gained, unmatched.then_some(reach));
                }
            }
        }
    }

    /// Reachable items from the unmatched bidders under the current assignment.
    pub fn reachable(&self) -> Reach {
        let mut scratch = self.clone();
        // a stuck search leaves the state untouched; an augmenting one is
        // discarded with the clone
        loop {
            match scratch.search() {
                Search::Stuck(reach) => return reach,
                Search::Augmented => continue,
            }
        }
    }

    fn best_bang64(&self, i: usize) -> f64 {
        let a = self.edges[i][0];
        self.v64[i * self.m + a] / self.p64[a]
    }

    /// Step 2: the smallest raise factor `x > 1` at which an event occurs.
    pub fn next_event(&self, reach: &Reach) -> Event {
        let in_r = {
            let mut mask = vec![false; self.m];
            reach.items.iter().for_each(|&j| mask[j] = true);
            mask
        };
        let x_integral = reach
            .items
            .iter()
            .map(|&j| {
                let p = &self.prices[j];
                let next = if p.is_integer() { p + int(1) } else { p.ceil() };
                next / p
            })
            .min()
            .expect("R is nonempty while bidders are unmatched");

        let mut candidates = Vec::new();
        let mut best = f64::INFINITY;
        for &i in &reach.bidders {
            let alpha = self.best_bang64(i);
            for k in 0..self.m {
                let v = self.v64[i * self.m + k];
                if in_r[k] || v <= 0.0 {
                    continue;
                }
                let r = alpha * self.p64[k] / v;
                if r <= best * (1.0 + PREFILTER_MARGIN) {
                    best = best.min(r);
                    candidates.push((i, k, r));
                }
            }
        }
        let cutoff = best * (1.0 + PREFILTER_MARGIN);
        let exact: Vec<(usize, usize, Rational)> = candidates
            .into_iter()
            .filter(|&(_, _, r)| r <= cutoff)
            .map(|(i, k, _)| {
                let a = self.edges[i][0];
                let x = self.inst.value(i, a) * &self.prices[k] / (&self.prices[a] * self.inst.value(i, k));
                (i, k, x)
            })
            .collect();
        let x_growth = exact.iter().map(|(_, _, x)| x).min().cloned();

        let (x, kind) = match x_growth {
            Some(g) if g < x_integral => (g, EventKind::MbbGrowth),
            _ => (x_integral, EventKind::IntegralPrice),
        };
        let new_edges = exact
            .into_iter()
            .filter(|(_, _, r)| r == &x)
            .map(|(i, k, _)| (i, k))
            .collect();
        Event { x, kind, new_edges }
    }

    /// Raises the prices of `reach.items` by `event.x` and updates the demand graph.
    pub fn apply(&mut self, reach: &Reach, event: &Event) {
        let mut in_d = vec![false; self.n];
        reach.bidders.iter().for_each(|&i| in_d[i] = true);
        for &j in &reach.items {
            self.prices[j] *= &event.x;
            self.p64[j] = to_f64(&self.prices[j]);
            self.caps[j] = capacities(std::slice::from_ref(&self.prices[j]))[0];
            let (keep, drop): (Vec<usize>, Vec<usize>) = self.item_bidders[j].iter().partition(|&&i| in_d[i]);
            for i in drop {
                debug_assert!(self.assigned[i] != Some(j));
                self.edges[i].retain(|&k| k != j);
                debug_assert!(!self.edges[i].is_empty());
            }
            self.item_bidders[j] = keep;
        }
        for &(i, k) in &event.new_edges {
            if let Err(pos) = self.edges[i].binary_search(&k) {
                self.edges[i].insert(pos, k);
                self.item_bidders[k].push(i);
            }
        }
    }

    fn trace_line(&self, step: usize, event: &Event, reach: &Reach, growth: Option<Growth>) -> String {
        let kind = match (event.kind, growth) {
            (EventKind::IntegralPrice, _) => "integral",
            (EventKind::MbbGrowth, Some(Growth::Augmenting)) => "growth-augmenting",
            (EventKind::MbbGrowth, _) => "growth-absorbed",
        };
        let mut line = format!("step={step} x={} event={kind} R={:?} prices=[", format_exact(&event.x), reach.items);
        for (j, p) in self.prices.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            let _ = write!(line, "{}", format_exact(p));
        }
        line.push(']');
        line
    }
}

#[derive(Debug, Clone, Default)]
pub struct SdmOptions {
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SdmOutcome {
    pub prices: Vec<Rational>,
    pub assignment: Vec<usize>,
    pub allocation: Allocation,
    pub stats: SdmStats,
    pub trace: Vec<String>,
}

impl SdmOutcome {
    /// Each bidder's utility for her `1/q_j` share of her assigned item.
    pub fn utilities(&self, inst: &Instance) -> Vec<Rational> {
        self.assignment
            .iter()
            .enumerate()
            .map(|(i, &j)| inst.value(i, j) / &self.prices[j])
            .collect()
    }
}

/// Event budget far above the `O(n min(n, m))` accounting; hitting it means a bug.
pub fn iteration_budget(n: usize, m: usize) -> usize {
    8 * n * (n.min(m) + 1) + 16
}

pub fn run_sdm(inst: &Instance) -> Result<SdmOutcome> {
    run_sdm_from(inst, vec![Rational::one(); inst.items()], &SdmOptions::default())
}

/// Runs the price-raising loop from `start` prices (all at least one).
pub fn run_sdm_from(inst: &Instance, start: Vec<Rational>, opts: &SdmOptions) -> Result<SdmOutcome> {
    let (n, m) = inst.shape();
    if start.len() != m {
        return Err(Error::DimensionMismatch {
            expected: (1, m),
            found: (1, start.len()),
        });
    }
    let budget = iteration_budget(n, m);
    let mut state = SdmState::new(inst, start);
    let mut stats = SdmStats::default();
    let mut trace = Vec::new();
    let mut run = 0usize;

    stats.step1 += 1;
    let (_, mut reach) = state.maximize();
    stats.matched_history.push(state.matched_count());
    let mut step = 0usize;
    while let Some(r) = reach {
        if stats.events() >= budget {
            return Err(Error::IterationBudget { budget });
        }
        step += 1;
        let event = state.next_event(&r);
        debug_assert!(event.x > Rational::one());
        state.apply(&r, &event);
        let (gained, next) = state.maximize();
        let growth = match event.kind {
            EventKind::IntegralPrice => {
                stats.integral_events += 1;
                if gained == 0 {
                    stats.stalled_integral += 1;
                }
                None
            }
            EventKind::MbbGrowth if gained > 0 => {
                stats.augmenting_growth += 1;
                Some(Growth::Augmenting)
            }
            EventKind::MbbGrowth => {
                stats.absorbed_growth += 1;
                Some(Growth::Absorbed)
            }
        };
        if growth == Some(Growth::Absorbed) {
            run += 1;
            stats.max_absorbed_run = stats.max_absorbed_run.max(run);
        } else {
            run = 0;
            stats.step1 += 1;
            stats.matched_history.push(state.matched_count());
        }
        if opts.trace {
            trace.push(state.trace_line(step, &event, &r, growth));
        }
        reach = next;
    }

    let assignment: Vec<usize> = state
        .assigned
        .iter()
        .map(|a| a.expect("loop exits only when everyone is matched"))
        .collect();
    let mut allocation = Allocation::zeros(n, m);
    for (i, &j) in assignment.iter().enumerate() {
        allocation.set_share(i, j, Rational::one() / &state.prices[j]);
    }
    allocation.validate()?;
    Ok(SdmOutcome {
        prices: state.prices,
        assignment,
        allocation,
        stats,
        trace,
    })
}

/// Runs without bidder `b` first, then with everyone from the resulting prices.
pub fn run_sdm_two_phase(inst: &Instance, b: usize) -> Result<SdmOutcome> {
    let (n, m) = inst.shape();
    if b >= n {
        return Err(Error::DimensionMismatch {
            expected: (n, m),
            found: (b + 1, m),
        });
    }
    let first = if n == 1 {
        vec![Rational::one(); m]
    } else {
        run_sdm(&inst.without_bidder(b)?)?.prices
    };
    run_sdm_from(inst, first, &SdmOptions::default())
}

pub fn sdm_mechanism(inst: &Instance) -> Result<MechanismResult> {
    let outcome = run_sdm(inst)?;
    let pf = solve_pf_exact(inst)?;
    MechanismResult::new(inst, outcome.allocation, &pf.utilities)
}
