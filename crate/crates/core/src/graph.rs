//! Undirected reply graphs and the network indicators computed on them.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Simple undirected graph over named users. Node indices follow the sorted
/// order of the names.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InteractionGraph {
    nodes: Vec<String>,
    index: BTreeMap<String, usize>,
    adj: Vec<BTreeSet<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageDegree {
    pub avg: f64,
    /// `ln(avg)`, absent when the graph has no edges.
    pub log: Option<f64>,
}

impl InteractionGraph {
    pub fn new<I, S>(nodes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: BTreeSet<String> = nodes.into_iter().map(Into::into).collect();
        let nodes: Vec<String> = names.into_iter().collect();
        let index = nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let adj = vec![BTreeSet::new(); nodes.len()];
        InteractionGraph { nodes, index, adj }
    }

    /// Builds a graph from an edge list; endpoints become nodes.
    pub fn from_edges<'a>(extra_nodes: &[&str], edges: &[(&'a str, &'a str)]) -> Self {
        let mut g = InteractionGraph::new(
            extra_nodes
                .iter()
                .copied()
                .chain(edges.iter().flat_map(|(a, b)| [*a, *b])),
        );
        for (a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    /// Adds an undirected edge between two existing nodes. Self-loops and
    /// repeats are ignored; returns whether a new edge was created.
    pub fn add_edge(&mut self, a: &str, b: &str) -> bool {
        let (Some(&i), Some(&j)) = (self.index.get(a), self.index.get(b)) else {
            return false;
        };
        if i == j {
            return false;
        }
        let fresh = self.adj[i].insert(j);
        self.adj[j].insert(i);
        fresh
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[i].iter().copied()
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) => self.adj[i].contains(&j),
            _ => false,
        }
    }

    /// Hop distances from `src`; `None` for unreachable nodes.
    pub fn bfs(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.nodes.len()];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].expect("queued nodes have a distance");
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Connected components, each sorted, ordered by their smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.nodes.len()];
        let mut out = Vec::new();
        for start in 0..self.nodes.len() {
            if seen[start] {
                continue;
            }
            let mut comp: Vec<usize> = self
                .bfs(start)
                .iter()
                .enumerate()
                .filter_map(|(i, d)| d.map(|_| i))
                .collect();
            comp.sort_unstable();
            for &i in &comp {
                seen[i] = true;
            }
            out.push(comp);
        }
        out
    }

    pub fn count_components(&self) -> usize {
        self.components().len()
    }

    pub fn is_connected(&self) -> bool {
        self.count_components() == 1
    }

    /// Mean number of distinct neighbors. `None` for an empty graph.
    pub fn average_degree(&self) -> Option<AverageDegree> {
        if self.nodes.is_empty() {
            return None;
        }
        let total: usize = self.adj.iter().map(BTreeSet::len).sum();
        let avg = total as f64 / self.nodes.len() as f64;
        Some(AverageDegree {
            avg,
            log: (avg > 0.0).then(|| avg.ln()),
        })
    }

    /// Longest shortest path inside the largest component (ties: the
    /// component holding the lexicographically smallest user). 0 without
    /// edges.
    pub fn diameter(&self) -> usize {
        if self.n_edges() == 0 {
            return 0;
        }
        let comps = self.components();
        // components are ordered by smallest member, so max_by_key keeping
        // the first maximum applies the tie rule
        let largest = comps
            .iter()
            .rev()
            .max_by_key(|c| c.len())
            .expect("graph with edges has a component");
        largest
            .iter()
            .map(|&s| self.bfs(s).into_iter().flatten().max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Freeman degree centralization `sum(d_max - d_i) / ((n-1)(n-2))`;
    /// `None` below three nodes.
    pub fn degree_centralization(&self) -> Option<f64> {
        let n = self.nodes.len();
        if n < 3 {
            return None;
        }
        let degrees: Vec<usize> = (0..n).map(|i| self.degree(i)).collect();
        let max = *degrees.iter().max().expect("n >= 3");
        let spread: usize = degrees.iter().map(|d| max - d).sum();
        Some(spread as f64 / ((n - 1) * (n - 2)) as f64)
    }

    /// Freeman closeness centralization with `C_i = (n-1) / sum_j d(i,j)`,
    /// normalized by the star maximum `(n-1)(n-2)/(2n-3)`. `None` unless the
    /// graph is connected with at least three nodes.
    ///
    /// The sum is accumulated as an exact fraction while it fits in 128 bits
    /// so that the star and regular graphs land exactly on 1 and 0.
    pub fn closeness_centralization(&self) -> Option<f64> {
        let n = self.nodes.len();
        if n < 3 || !self.is_connected() {
            return None;
        }
        let farness: Vec<u128> = (0..n)
            .map(|i| self.bfs(i).into_iter().flatten().map(|d| d as u128).sum())
            .collect();
        let min = *farness.iter().min().expect("n >= 3");
        // sum_i (1/min - 1/S_i) * (2n-3)/(n-2); the (n-1) factors cancel.
        let scale_num = (2 * n - 3) as u128;
        let scale_den = (n - 2) as u128;
        match exact_centralization(&farness, min, scale_num, scale_den) {
            Some(v) => Some(v),
            None => {
                let sum: f64 = farness
                    .iter()
                    .map(|&s| 1.0 / min as f64 - 1.0 / s as f64)
                    .sum();
                Some(sum * scale_num as f64 / scale_den as f64)
            }
        }
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn exact_centralization(farness: &[u128], min: u128, scale_num: u128, scale_den: u128) -> Option<f64> {
    let (mut num, mut den) = (0u128, 1u128);
    for &s in farness {
        if s == min {
            continue;
        }
        // (s - min) / (min * s)
        let (tn, td) = (s - min, min.checked_mul(s)?);
        let g = gcd(den, td);
        let lcm = (den / g).checked_mul(td)?;
        num = num.checked_mul(lcm / den)?.checked_add(tn.checked_mul(lcm / td)?)?;
        den = lcm;
        let r = gcd(num, den);
        num /= r;
        den /= r;
    }
    let num = num.checked_mul(scale_num)?;
    let den = den.checked_mul(scale_den)?;
    Some(num as f64 / den as f64)
}
