// p = 1 on source/target families: the modulus is the minimum number of
// vertices meeting every path (LP duality with fractional path packing, and
// the packing is integral by Menger). Dinic on the vertex-split network.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::{LocalSolution, PathFamily, Status, Terminals};

struct Edge {
    to: usize,
    cap: i64,
}

struct Network {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
    level: Vec<i32>,
    next: Vec<usize>,
}

impl Network {
    fn new(n: usize) -> Self {
        Network { edges: Vec::new(), adj: vec![Vec::new(); n], level: vec![0; n], next: vec![0; n] }
    }

    fn add(&mut self, u: usize, v: usize, cap: i64) {
        self.adj[u].push(self.edges.len());
        self.edges.push(Edge { to: v, cap });
        self.adj[v].push(self.edges.len());
        self.edges.push(Edge { to: u, cap: 0 });
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let to = self.edges[e].to;
                if self.edges[e].cap > 0 && self.level[to] < 0 {
                    self.level[to] = self.level[u] + 1;
                    queue.push_back(to);
                }
            }
        }
    }

    // Iterative blocking-flow augmentation along level-increasing edges.
    fn augment(&mut self, s: usize, t: usize) -> i64 {
        let mut stack: Vec<usize> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let push = stack.iter().map(|&e| self.edges[e].cap).min().unwrap_or(0);
                for &e in &stack {
                    self.edges[e].cap -= push;
                    self.edges[e ^ 1].cap += push;
                }
                return push;
            }
            let mut advanced = false;
            while self.next[u] < self.adj[u].len() {
                let e = self.adj[u][self.next[u]];
                let to = self.edges[e].to;
                if self.edges[e].cap > 0 && self.level[to] == self.level[u] + 1 {
                    stack.push(e);
                    u = to;
                    advanced = true;
                    break;
                }
                self.next[u] += 1;
            }
            if !advanced {
                if u == s {
                    return 0;
                }
                self.level[u] = -1;
                let e = stack.pop().unwrap();
                u = self.edges[e ^ 1].to;
                self.next[u] += 1;
            }
        }
    }

    fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut flow = 0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return flow;
            }
            self.next.iter_mut().for_each(|x| *x = 0);
            loop {
                let f = self.augment(s, t);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
    }
}

pub(super) fn solve(family: &PathFamily) -> LocalSolution {
    let Terminals::SourceTarget { source, target } = family.terminals() else {
        unreachable!("flow solver needs a source/target family")
    };
    let g = family.graph();
    let n = g.vertex_count();
    let (s, t) = (2 * n, 2 * n + 1);
    let inf = n as i64 + 1;
    let mut net = Network::new(2 * n + 2);
    for v in 0..n {
        net.add(2 * v, 2 * v + 1, 1);
        for &u in g.neighbors(v) {
            net.add(2 * v + 1, 2 * u as usize, inf);
        }
        if source[v] {
            net.add(s, 2 * v, inf);
        }
        if target[v] {
            net.add(2 * v + 1, t, inf);
        }
    }
    let flow = net.max_flow(s, t);
    net.bfs(s);
    let rho: Vec<f64> = (0..n)
        .map(|v| if net.level[2 * v] >= 0 && net.level[2 * v + 1] < 0 { 1.0 } else { 0.0 })
        .collect();

    // decompose the flow into unit paths
    let mut used: Vec<i64> = (0..net.edges.len()).map(|e| if e % 2 == 0 { net.edges[e ^ 1].cap } else { 0 }).collect();
    let mut active = Vec::new();
    for _ in 0..flow {
        let mut path: Vec<usize> = Vec::new();
        let mut u = s;
        while u != t {
            let Some(&e) = net.adj[u].iter().find(|&&e| e % 2 == 0 && used[e] > 0) else {
                break;
            };
            used[e] -= 1;
            u = net.edges[e].to;
            if u < 2 * n && u % 2 == 0 {
                let v = u / 2;
                if let Some(at) = path.iter().position(|&w| w == v) {
                    path.truncate(at);
                }
                path.push(v);
            }
        }
        if u == t {
            active.push(path);
        }
    }
    LocalSolution {
        value: flow as f64,
        lower_bound: flow as f64,
        rho,
        active,
        iterations: 1,
        status: Status::Converged,
        note: None,
    }
}
