//! Compatibility graphs, arrival distributions and the graph predicates the
//! rest of the crate relies on (independent sets, stability condition, odd
//! cycles, complete multipartite structure).
//!
//! Classes are the integers `1..=n`; every public input and output uses that
//! labelling.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Largest number of classes a graph may have.
pub const MAX_CLASSES: usize = 20;

/// A set of classes, stored as a bitmask where bit `c` stands for class `c`.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassSet(u32);

impl ClassSet {
    pub const EMPTY: ClassSet = ClassSet(0);

    pub fn singleton(class: u8) -> Self {
        ClassSet(1 << class)
    }

    pub fn from_bits(bits: u32) -> Self {
        ClassSet(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn contains(self, class: u8) -> bool {
        class < 32 && self.0 & (1 << class) != 0
    }

    pub fn insert(&mut self, class: u8) {
        self.0 |= 1 << class;
    }

    pub fn union(self, other: ClassSet) -> ClassSet {
        ClassSet(self.0 | other.0)
    }

    pub fn intersection(self, other: ClassSet) -> ClassSet {
        ClassSet(self.0 & other.0)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Classes in ascending order.
    pub fn iter(self) -> impl Iterator<Item = u8> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let c = bits.trailing_zeros() as u8;
            bits &= bits - 1;
            Some(c)
        })
    }

    pub fn to_vec(self) -> Vec<u8> {
        self.iter().collect()
    }
}

impl FromIterator<u8> for ClassSet {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        let mut s = ClassSet::EMPTY;
        for c in iter {
            s.insert(c);
        }
        s
    }
}

impl fmt::Debug for ClassSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for ClassSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, c) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

/// Canonical order on class sets: by size, then lexicographically on the
/// sorted members.
pub fn canonical_set_cmp(a: &ClassSet, b: &ClassSet) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.iter().cmp(b.iter()))
}

/// A simple, connected, undirected graph on the classes `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompatibilityGraph {
    n: usize,
    adj: Vec<ClassSet>,
    edges: Vec<(u8, u8)>,
}

/// Serialized object form: `{ "n": 4, "edges": [[1,2], ...] }`.
#[derive(Serialize, Deserialize)]
struct GraphObject {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl CompatibilityGraph {
    /// Builds a graph from 1-based class pairs. Duplicate pairs (in either
    /// orientation) are merged.
    pub fn from_edge_list(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if n > MAX_CLASSES {
            return Err(Error::InvalidGraph(format!(
                "{n} classes requested, at most {MAX_CLASSES} supported"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidGraph("at least two classes are required".into()));
        }
        let mut adj = vec![ClassSet::EMPTY; n + 1];
        for &(i, j) in pairs {
            for c in [i, j] {
                if c == 0 || c > n {
                    return Err(Error::OutOfRange { class: c, n });
                }
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            adj[i].insert(j as u8);
            adj[j].insert(i as u8);
        }
        let mut edges = Vec::new();
        for (i, nb) in adj.iter().enumerate().skip(1) {
            for j in nb.iter() {
                if (i as u8) < j {
                    edges.push((i as u8, j));
                }
            }
        }
        let g = CompatibilityGraph { n, adj, edges };
        if !g.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> &[(u8, u8)] {
        &self.edges
    }

    pub fn all_classes(&self) -> ClassSet {
        (1..=self.n as u8).collect()
    }

    /// Neighbour set `E(v)`.
    #[inline]
    pub fn neighbors(&self, v: u8) -> ClassSet {
        self.adj[v as usize]
    }

    #[inline]
    pub fn adjacent(&self, a: u8, b: u8) -> bool {
        self.adj[a as usize].contains(b)
    }

    pub fn degree(&self, v: u8) -> usize {
        self.adj[v as usize].len()
    }

    pub fn check_class(&self, class: usize) -> Result<u8> {
        if class == 0 || class > self.n {
            Err(Error::OutOfRange { class, n: self.n })
        } else {
            Ok(class as u8)
        }
    }

    fn check_set(&self, set: ClassSet) -> Result<()> {
        let outside = set.bits() & !self.all_classes().bits();
        if outside != 0 {
            let class = outside.trailing_zeros() as usize;
            return Err(Error::OutOfRange { class, n: self.n });
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        let mut seen = ClassSet::singleton(1);
        let mut queue = VecDeque::from([1u8]);
        while let Some(u) = queue.pop_front() {
            for v in self.neighbors(u).iter() {
                if !seen.contains(v) {
                    seen.insert(v);
                    queue.push_back(v);
                }
            }
        }
        seen == self.all_classes()
    }

    /// `E(U)`: every class adjacent to some member of `set`.
    pub fn neighbors_of_set(&self, set: ClassSet) -> Result<ClassSet> {
        self.check_set(set)?;
        Ok(set.iter().fold(ClassSet::EMPTY, |acc, u| acc.union(self.neighbors(u))))
    }

    pub fn is_independent(&self, set: ClassSet) -> bool {
        set.iter().all(|u| self.neighbors(u).intersection(set).is_empty())
    }

    /// All non-empty independent sets, in canonical order.
    pub fn independent_sets(&self) -> Vec<ClassSet> {
        let mut out: Vec<ClassSet> = (1u32..1 << self.n)
            .map(|bits| ClassSet::from_bits(bits << 1))
            .filter(|&s| self.is_independent(s))
            .collect();
        out.sort_by(canonical_set_cmp);
        out
    }

    /// Checks `mu(I) < mu(E(I))` for every independent set `I`; the witness is
    /// the first violating set in canonical order.
    pub fn ncond_check(&self, mu: &ArrivalDistribution) -> Result<NcondReport> {
        if mu.len() != self.n {
            return Err(Error::DimensionMismatch(mu.len(), self.n));
        }
        for set in self.independent_sets() {
            let nb = self.neighbors_of_set(set)?;
            if mu.mass(set) >= mu.mass(nb) {
                return Ok(NcondReport {
                    holds: false,
                    witness: Some(set),
                });
            }
        }
        Ok(NcondReport {
            holds: true,
            witness: None,
        })
    }

    /// BFS distances and parents from `root`; neighbours are scanned in
    /// ascending order so parents are the lowest-labelled discoverers.
    fn bfs(&self, root: u8) -> (Vec<Option<usize>>, Vec<u8>) {
        let mut dist = vec![None; self.n + 1];
        let mut parent = vec![0u8; self.n + 1];
        dist[root as usize] = Some(0);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize].unwrap();
            for v in self.neighbors(u).iter() {
                if dist[v as usize].is_none() {
                    dist[v as usize] = Some(du + 1);
                    parent[v as usize] = u;
                    queue.push_back(v);
                }
            }
        }
        (dist, parent)
    }

    /// A shortest path `from = a_0, a_1, ..., a_l = to`, ties broken towards
    /// lower classes.
    pub fn shortest_path(&self, from: u8, to: u8) -> Vec<u8> {
        let (_, parent) = self.bfs(from);
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = parent[cur as usize];
            path.push(cur);
        }
        path.reverse();
        path
    }

    /// Shortest path from `from` to the nearest member of `targets`.
    pub fn shortest_path_to_set(&self, from: u8, targets: ClassSet) -> Vec<u8> {
        let (dist, _) = self.bfs(from);
        let to = targets
            .iter()
            .min_by_key(|&t| (dist[t as usize].unwrap_or(usize::MAX), t))
            .expect("non-empty target set");
        self.shortest_path(from, to)
    }

    pub fn is_bipartite(&self) -> bool {
        self.find_induced_odd_cycle().is_none()
    }

    /// The shortest odd cycle of the graph, which is necessarily induced.
    /// Among equally short cycles the lexicographically smallest normalized
    /// node sequence is returned (smallest class first, then the smaller of
    /// its two cycle neighbours).
    pub fn find_induced_odd_cycle(&self) -> Option<OddCycleCert> {
        let mut best: Option<Vec<u8>> = None;
        for root in 1..=self.n as u8 {
            let (dist, parent) = self.bfs(root);
            for &(u, v) in &self.edges {
                let (Some(du), Some(dv)) = (dist[u as usize], dist[v as usize]) else {
                    continue;
                };
                if du != dv {
                    continue;
                }
                let len = 2 * du + 1;
                if best.as_ref().is_some_and(|b| b.len() < len) {
                    continue;
                }
                let climb = |mut x: u8| {
                    let mut p = vec![x];
                    while x != root {
                        x = parent[x as usize];
                        p.push(x);
                    }
                    p
                };
                // root .. u, then v .. back towards root
                let mut up = climb(u);
                up.reverse();
                let down = climb(v);
                let mut cycle = up;
                cycle.extend_from_slice(&down[..down.len() - 1]);
                let distinct: ClassSet = cycle.iter().copied().collect();
                if distinct.len() != cycle.len() {
                    continue;
                }
                let cycle = normalize_cycle(&cycle);
                best = match best {
                    Some(b) if b.len() < cycle.len() || (b.len() == cycle.len() && b <= cycle) => Some(b),
                    _ => Some(cycle),
                };
            }
        }
        best.map(|nodes| OddCycleCert { nodes })
    }

    /// A closed odd walk visiting every class: the smallest induced odd cycle,
    /// followed by an out-and-back shortest path from its first node to each
    /// class still uncovered, in ascending class order.
    pub fn spanning_odd_cycle(&self) -> Result<OddCycleCert> {
        let base = self.find_induced_odd_cycle().ok_or(Error::BipartiteGraph)?;
        let anchor = base.nodes[0];
        let mut walk = base.nodes.clone();
        let mut covered: ClassSet = walk.iter().copied().collect();
        for target in 1..=self.n as u8 {
            if covered.contains(target) {
                continue;
            }
            let path = self.shortest_path(anchor, target);
            // anchor, a1, .., target, .., a1; the walk then closes back on anchor
            walk.extend_from_slice(&path);
            walk.extend(path[1..path.len() - 1].iter().rev());
            covered = covered.union(path.iter().copied().collect());
        }
        Ok(OddCycleCert { nodes: walk })
    }

    /// Parts of the graph when it is complete p-partite with `p >= 3`.
    pub fn classify_complete_multipartite(&self) -> MultipartiteReport {
        let all = self.all_classes();
        let mut parts: Vec<ClassSet> = Vec::new();
        let mut assigned = ClassSet::EMPTY;
        for v in 1..=self.n as u8 {
            if assigned.contains(v) {
                continue;
            }
            let part = ClassSet::from_bits(all.bits() & !self.neighbors(v).bits());
            // non-adjacency must be an equivalence relation
            if part
                .iter()
                .any(|u| ClassSet::from_bits(all.bits() & !self.neighbors(u).bits()) != part)
            {
                return MultipartiteReport {
                    is_cpp: false,
                    parts: None,
                };
            }
            assigned = assigned.union(part);
            parts.push(part);
        }
        if parts.len() >= 3 {
            MultipartiteReport {
                is_cpp: true,
                parts: Some(parts),
            }
        } else {
            MultipartiteReport {
                is_cpp: false,
                parts: None,
            }
        }
    }

    /// Whether the graph is a single odd cycle; returns the cycle order
    /// starting at class 1 towards its smaller neighbour.
    pub fn odd_cycle_order(&self) -> Option<Vec<u8>> {
        if self.n.is_multiple_of(2) || self.n < 3 || (1..=self.n as u8).any(|v| self.degree(v) != 2) {
            return None;
        }
        let mut order = vec![1u8];
        let mut prev = 0u8;
        let mut cur = 1u8;
        loop {
            let next = self.neighbors(cur).iter().find(|&x| x != prev)?;
            if next == 1 {
                break;
            }
            order.push(next);
            prev = cur;
            cur = next;
        }
        (order.len() == self.n).then_some(order)
    }

    /// Plain text form: `n` on the first line, then one `i j` line per edge.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for &(i, j) in &self.edges {
            s.push_str(&format!("{i} {j}\n"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::Parse("empty graph file".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("class count: {e}")))?;
        let mut pairs = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace().map(|t| {
                t.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("edge `{line}`: {e}")))
            });
            match (it.next(), it.next(), it.next()) {
                (Some(i), Some(j), None) => pairs.push((i?, j?)),
                _ => return Err(Error::Parse(format!("malformed edge line `{line}`"))),
            }
        }
        Self::from_edge_list(n, &pairs)
    }

    /// Object form `{"n":..,"edges":[[i,j],..]}`.
    pub fn to_json(&self) -> String {
        let obj = GraphObject {
            n: self.n,
            edges: self.edges.iter().map(|&(i, j)| [i as usize, j as usize]).collect(),
        };
        serde_json::to_string(&obj).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let obj: GraphObject = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let pairs: Vec<(usize, usize)> = obj.edges.iter().map(|e| (e[0], e[1])).collect();
        Self::from_edge_list(obj.n, &pairs)
    }

    /// Parses either serialized form, detected from the first character.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            Self::from_text(text)
        }
    }

    /// SHA-256 of the plain text form, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    /// The paw: a triangle 2-3-4 with a pendant class 1 attached to 2.
    pub fn paw() -> Self {
        Self::from_edge_list(4, &[(1, 2), (2, 3), (2, 4), (3, 4)]).unwrap()
    }

    /// The cycle `1 - 2 - ... - n - 1`.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGraph(format!("cycle needs n >= 3, got {n}")));
        }
        let pairs: Vec<_> = (1..=n).map(|i| (i, i % n + 1)).collect();
        Self::from_edge_list(n, &pairs)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut pairs = Vec::new();
        for i in 1..=n {
            for j in i + 1..=n {
                pairs.push((i, j));
            }
        }
        Self::from_edge_list(n, &pairs)
    }

    /// Complete multipartite graph with the given part sizes. Classes are
    /// dealt to the parts round-robin, so sizes `[2, 2, 2]` give the parts
    /// `{1,4}, {2,5}, {3,6}`.
    pub fn complete_multipartite(sizes: &[usize]) -> Result<Self> {
        let n: usize = sizes.iter().sum();
        let mut part_of = Vec::with_capacity(n);
        let mut remaining = sizes.to_vec();
        while part_of.len() < n {
            for (p, r) in remaining.iter_mut().enumerate() {
                if *r > 0 {
                    part_of.push(p);
                    *r -= 1;
                }
            }
        }
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if part_of[i] != part_of[j] {
                    pairs.push((i + 1, j + 1));
                }
            }
        }
        Self::from_edge_list(n, &pairs)
    }

    /// The octahedron `K_{2,2,2}` with parts `{1,4}, {2,5}, {3,6}`.
    pub fn octahedron() -> Self {
        Self::complete_multipartite(&[2, 2, 2]).unwrap()
    }

    /// Resolves a built-in graph name: `paw`, `octahedron`, `cycle:N`,
    /// `complete:N` (or `kN`), `kpartite:a,b,c`.
    pub fn builtin(name: &str) -> Result<Self> {
        let name = name.trim().to_ascii_lowercase();
        let num = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("`{name}`: {e}")));
        if name == "paw" {
            Ok(Self::paw())
        } else if name == "octahedron" {
            Ok(Self::octahedron())
        } else if let Some(rest) = name.strip_prefix("cycle:") {
            Self::cycle(num(rest)?)
        } else if let Some(rest) = name.strip_prefix("complete:") {
            Self::complete(num(rest)?)
        } else if let Some(rest) = name.strip_prefix("kpartite:") {
            let sizes = rest.split(',').map(num).collect::<Result<Vec<_>>>()?;
            Self::complete_multipartite(&sizes)
        } else if let Some(rest) = name.strip_prefix('k').filter(|r| r.parse::<usize>().is_ok()) {
            Self::complete(num(rest)?)
        } else {
            Err(Error::Parse(format!("unknown built-in graph `{name}`")))
        }
    }
}

fn normalize_cycle(cycle: &[u8]) -> Vec<u8> {
    let len = cycle.len();
    let start = (0..len).min_by_key(|&k| cycle[k]).unwrap();
    let fwd: Vec<u8> = (0..len).map(|k| cycle[(start + k) % len]).collect();
    let bwd: Vec<u8> = (0..len).map(|k| cycle[(start + len - k) % len]).collect();
    fwd.min(bwd)
}

/// Outcome of the stability-condition check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NcondReport {
    pub holds: bool,
    pub witness: Option<ClassSet>,
}

/// An odd closed walk `c_1 .. c_{2q+1}` whose closing edge is `c_{2q+1} - c_1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OddCycleCert {
    pub nodes: Vec<u8>,
}

impl OddCycleCert {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Odd length of at least three, and every consecutive pair (including
    /// the closing pair) is an edge.
    pub fn is_valid(&self, g: &CompatibilityGraph) -> bool {
        let len = self.nodes.len();
        len >= 3 && len % 2 == 1 && (0..len).all(|k| g.adjacent(self.nodes[k], self.nodes[(k + 1) % len]))
    }

    /// No edge joins two non-consecutive nodes of the cycle.
    pub fn is_induced(&self, g: &CompatibilityGraph) -> bool {
        let len = self.nodes.len();
        (0..len).all(|a| (a + 2..len).all(|b| (a == 0 && b == len - 1) || !g.adjacent(self.nodes[a], self.nodes[b])))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultipartiteReport {
    pub is_cpp: bool,
    pub parts: Option<Vec<ClassSet>>,
}

/// Arrival distribution `mu` over the classes, with full support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalDistribution {
    probs: Vec<f64>,
}

impl ArrivalDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty vector".into()));
        }
        if let Some((c, p)) = probs.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidDistribution(format!(
                "class {} has probability {p}; full support required",
                c + 1
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(ArrivalDistribution { probs })
    }

    pub fn uniform(n: usize) -> Self {
        ArrivalDistribution {
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// Parses a comma-separated probability vector.
    pub fn parse(text: &str) -> Result<Self> {
        let probs = text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("probability `{t}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(probs)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, class: u8) -> f64 {
        self.probs[class as usize - 1]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mass(&self, set: ClassSet) -> f64 {
        set.iter().map(|c| self.prob(c)).sum()
    }
}

impl fmt::Display for ArrivalDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.probs.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(classes: &[u8]) -> ClassSet {
        classes.iter().copied().collect()
    }

    #[test]
    fn paw_structure() {
        let g = CompatibilityGraph::paw();
        assert_eq!(g.edges(), &[(1, 2), (2, 3), (2, 4), (3, 4)]);
        assert_eq!(g.neighbors(1), set(&[2]));
        assert_eq!(g.neighbors(2), set(&[1, 3, 4]));
    }

    #[test]
    fn edge_list_errors() {
        assert_eq!(
            CompatibilityGraph::from_edge_list(4, &[(1, 2), (3, 4)]),
            Err(Error::Disconnected)
        );
        assert_eq!(
            CompatibilityGraph::from_edge_list(3, &[(1, 1)]),
            Err(Error::SelfLoop(1))
        );
        assert_eq!(
            CompatibilityGraph::from_edge_list(3, &[(1, 4)]),
            Err(Error::OutOfRange { class: 4, n: 3 })
        );
        let g = CompatibilityGraph::from_edge_list(2, &[(1, 2), (2, 1), (1, 2)]).unwrap();
        assert_eq!(g.edges(), &[(1, 2)]);
        assert!(CompatibilityGraph::from_edge_list(21, &[]).is_err());
    }

    #[test]
    fn neighbors_of_sets() {
        let g = CompatibilityGraph::paw();
        assert_eq!(g.neighbors_of_set(set(&[1])).unwrap(), set(&[2]));
        assert_eq!(g.neighbors_of_set(set(&[1, 3])).unwrap(), set(&[2, 4]));
        assert_eq!(g.neighbors_of_set(ClassSet::EMPTY).unwrap(), ClassSet::EMPTY);
        assert!(matches!(
            g.neighbors_of_set(set(&[5])),
            Err(Error::OutOfRange { class: 5, .. })
        ));
    }

    #[test]
    fn independent_sets_in_canonical_order() {
        let paw = CompatibilityGraph::paw();
        assert_eq!(
            paw.independent_sets(),
            vec![set(&[1]), set(&[2]), set(&[3]), set(&[4]), set(&[1, 3]), set(&[1, 4])]
        );
        let edge = CompatibilityGraph::from_edge_list(2, &[(1, 2)]).unwrap();
        assert_eq!(edge.independent_sets(), vec![set(&[1]), set(&[2])]);
        let k3 = CompatibilityGraph::complete(3).unwrap();
        assert_eq!(k3.independent_sets(), vec![set(&[1]), set(&[2]), set(&[3])]);
    }

    #[test]
    fn ncond_examples() {
        let paw = CompatibilityGraph::paw();
        let mu = ArrivalDistribution::new(vec![0.2, 0.3, 0.25, 0.25]).unwrap();
        assert_eq!(
            paw.ncond_check(&mu).unwrap(),
            NcondReport {
                holds: true,
                witness: None
            }
        );
        let report = paw.ncond_check(&ArrivalDistribution::uniform(4)).unwrap();
        assert!(!report.holds);
        assert_eq!(report.witness, Some(set(&[1])));
        let edge = CompatibilityGraph::from_edge_list(2, &[(1, 2)]).unwrap();
        let mu = ArrivalDistribution::new(vec![0.4, 0.6]).unwrap();
        assert!(!edge.ncond_check(&mu).unwrap().holds);
    }

    #[test]
    fn odd_cycles() {
        let paw = CompatibilityGraph::paw();
        let c = paw.find_induced_odd_cycle().unwrap();
        assert_eq!(c.nodes, vec![2, 3, 4]);
        assert!(c.is_valid(&paw) && c.is_induced(&paw));

        let c4 = CompatibilityGraph::cycle(4).unwrap();
        assert!(c4.find_induced_odd_cycle().is_none());
        assert!(c4.is_bipartite());

        let c5 = CompatibilityGraph::cycle(5).unwrap();
        assert_eq!(c5.find_induced_odd_cycle().unwrap().nodes, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn spanning_walks() {
        let paw = CompatibilityGraph::paw();
        assert_eq!(paw.spanning_odd_cycle().unwrap().nodes, vec![2, 3, 4, 2, 1]);
        let c5 = CompatibilityGraph::cycle(5).unwrap();
        assert_eq!(c5.spanning_odd_cycle().unwrap().nodes, vec![1, 2, 3, 4, 5]);
        let c4 = CompatibilityGraph::cycle(4).unwrap();
        assert_eq!(c4.spanning_odd_cycle(), Err(Error::BipartiteGraph));
    }

    #[test]
    fn complete_multipartite_classification() {
        let oct = CompatibilityGraph::octahedron();
        let r = oct.classify_complete_multipartite();
        assert!(r.is_cpp);
        assert_eq!(r.parts.unwrap(), vec![set(&[1, 4]), set(&[2, 5]), set(&[3, 6])]);
        let k3 = CompatibilityGraph::complete(3).unwrap();
        assert_eq!(
            k3.classify_complete_multipartite().parts.unwrap(),
            vec![set(&[1]), set(&[2]), set(&[3])]
        );
        assert!(!CompatibilityGraph::paw().classify_complete_multipartite().is_cpp);
        assert!(
            !CompatibilityGraph::cycle(4)
                .unwrap()
                .classify_complete_multipartite()
                .is_cpp
        );
    }

    #[test]
    fn odd_cycle_order() {
        assert_eq!(
            CompatibilityGraph::cycle(5).unwrap().odd_cycle_order(),
            Some(vec![1, 2, 3, 4, 5])
        );
        assert_eq!(CompatibilityGraph::paw().odd_cycle_order(), None);
        assert_eq!(CompatibilityGraph::cycle(4).unwrap().odd_cycle_order(), None);
    }

    #[test]
    fn text_and_json_forms() {
        let paw = CompatibilityGraph::paw();
        let text = paw.to_text();
        assert_eq!(text, "4\n1 2\n2 3\n2 4\n3 4\n");
        assert_eq!(CompatibilityGraph::parse(&text).unwrap().to_text(), text);
        let json = paw.to_json();
        assert_eq!(json, r#"{"n":4,"edges":[[1,2],[2,3],[2,4],[3,4]]}"#);
        assert_eq!(CompatibilityGraph::parse(&json).unwrap().to_json(), json);
    }

    #[test]
    fn builtins() {
        assert_eq!(CompatibilityGraph::builtin("paw").unwrap(), CompatibilityGraph::paw());
        assert_eq!(
            CompatibilityGraph::builtin("kpartite:2,2,2").unwrap(),
            CompatibilityGraph::octahedron()
        );
        assert_eq!(CompatibilityGraph::builtin("cycle:5").unwrap().n(), 5);
        assert_eq!(CompatibilityGraph::builtin("k3").unwrap().edges().len(), 3);
        assert!(CompatibilityGraph::builtin("petersen").is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(ArrivalDistribution::new(vec![0.5, 0.5]).is_ok());
        assert!(ArrivalDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(ArrivalDistribution::new(vec![1.0, 0.0]).is_err());
        assert_eq!(
            ArrivalDistribution::parse("0.2,0.3,0.25,0.25").unwrap().probs(),
            &[0.2, 0.3, 0.25, 0.25]
        );
    }
}
