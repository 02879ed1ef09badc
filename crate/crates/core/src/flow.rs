//! Small deterministic max-flow (Dinic). Arcs are explored in insertion
//! order, so the flow found depends only on how the network was built.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub(crate) struct FlowNet {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
    orig: Vec<i64>,
}

impl FlowNet {
    pub fn new(nodes: usize) -> Self {
        FlowNet {
            adj: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            orig: Vec::new(),
        }
    }

    /// Adds arc `u -> v`; returns its id.
    pub fn add(&mut self, u: usize, v: usize, c: i64) -> usize {
        let id = self.to.len();
        self.adj[u].push(id);
        self.to.push(v);
        self.cap.push(c);
        self.orig.push(c);
        self.adj[v].push(id + 1);
        self.to.push(u);
        self.cap.push(0);
        self.orig.push(0);
        id
    }

    pub fn flow_on(&self, arc: usize) -> i64 {
        self.orig[arc] - self.cap[arc]
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let n = self.adj.len();
        let mut total = 0;
        loop {
            let mut level = vec![u32::MAX; n];
            level[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &e in &self.adj[u] {
                    let v = self.to[e];
                    if self.cap[e] > 0 && level[v] == u32::MAX {
                        level[v] = level[u] + 1;
                        q.push_back(v);
                    }
                }
            }
            if level[t] == u32::MAX {
                return total;
            }
            let mut it = vec![0usize; n];
            loop {
                let f = self.augment(s, t, i64::MAX, &level, &mut it);
                if f == 0 {
                    break;
                }
                total += f;
            }
        }
    }

    // Iterative DFS along the level graph; lowest arc index first.
    fn augment(&mut self, s: usize, t: usize, limit: i64, level: &[u32], it: &mut [usize]) -> i64 {
        let mut path: Vec<usize> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let f = path.iter().map(|&e| self.cap[e]).min().unwrap_or(limit).min(limit);
                for &e in &path {
                    self.cap[e] -= f;
                    self.cap[e ^ 1] += f;
                }
                return f;
            }
            let mut advanced = false;
            while it[u] < self.adj[u].len() {
                let e = self.adj[u][it[u]];
                let v = self.to[e];
                if self.cap[e] > 0 && level[v] == level[u] + 1 {
                    path.push(e);
                    u = v;
                    advanced = true;
                    break;
                }
                it[u] += 1;
            }
            if !advanced {
                if u == s {
                    return 0;
                }
                // dead end: retreat and skip the arc that led here
                let e = path.pop().unwrap();
                u = self.to[e ^ 1];
                it[u] += 1;
            }
        }
    }
}
