//! Dinic max-flow over exact rational capacities.

use std::collections::VecDeque;

use num_traits::{Signed, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    rev: usize,
    cap: Rational,
}

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    graph: Vec<Vec<Edge>>,
    level: Vec<i64>,
    iter: Vec<usize>,
}

/// Handle to a forward edge, for reading its flow after [`FlowNetwork::max_flow`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeId {
    from: usize,
    index: usize,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self {
            graph: vec![Vec::new(); nodes],
            level: vec![-1; nodes],
            iter: vec![0; nodes],
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: Rational) -> EdgeId {
        let index = self.graph[from].len();
        let rev = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Edge { to, rev, cap });
        self.graph[to].push(Edge {
            to: from,
            rev: index,
            cap: Rational::zero(),
        });
        EdgeId { from, index }
    }

    /// Flow currently pushed through a forward edge (the residual of its reverse).
    pub fn flow(&self, id: EdgeId) -> &Rational {
        let e = &self.graph[id.from][id.index];
        &self.graph[e.to][e.rev].cap
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for e in &self.graph[v] {
                if e.cap.is_positive() && self.level[e.to] < 0 {
                    self.level[e.to] = self.level[v] + 1;
                    queue.push_back(e.to);
                }
            }
        }
    }

    fn dfs(&mut self, v: usize, t: usize, limit: Rational) -> Rational {
        if v == t {
            return limit;
        }
        while self.iter[v] < self.graph[v].len() {
            let i = self.iter[v];
            let (to, cap) = {
                let e = &self.graph[v][i];
                (e.to, e.cap.clone())
            };
            if cap.is_positive() && self.level[v] < self.level[to] {
                let pushed = self.dfs(to, t, if cap < limit { cap } else { limit.clone() });
                if pushed.is_positive() {
                    self.graph[v][i].cap -= &pushed;
                    let rev = self.graph[v][i].rev;
                    self.graph[to][rev].cap += &pushed;
                    return pushed;
                }
            }
            self.iter[v] += 1;
        }
        Rational::zero()
    }

    /// Maximum `s`-`t` flow. `bound` must be at least the answer; it caps each DFS.
    pub fn max_flow(&mut self, s: usize, t: usize, bound: &Rational) -> Rational {
        let mut total = Rational::zero();
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return total;
            }
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, bound.clone());
                if f.is_zero() {
                    break;
                }
                total += f;
            }
        }
    }
}
