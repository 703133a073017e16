//! Construction points, matchings of windows of a bi-infinite stream, and
//! the time-reversal check for FCFM blocks.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{ArrivalDistribution, CompatibilityGraph};
use crate::policy::{ascending_pref, MatchingTrace, Policy, PreferenceList};
use crate::stream::{ArrivalStream, PairSource};
use crate::words::{is_admissible, QueueDetail, Word};

/// Extra arrivals allowed past the window end for its items to be matched.
pub const DEFAULT_EXTRA_ARRIVALS: u64 = 100_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulationRun {
    pub trace: MatchingTrace,
    /// Pair indices `t` (from 0) at which the buffer is empty.
    pub cps: Vec<u64>,
}

fn prefs_table(g: &CompatibilityGraph) -> Vec<PreferenceList> {
    (1..=g.n() as u8).map(|v| ascending_pref(g, v)).collect()
}

/// Runs `n_steps` pairs (arrivals `0 .. 2 n_steps` of `source`) on an
/// unbounded buffer started from `y`.
pub fn simulate_from<S: PairSource>(
    g: &CompatibilityGraph,
    policy: &Policy,
    y: &QueueDetail,
    source: &mut S,
    n_steps: u64,
) -> Result<SimulationRun> {
    if !is_admissible(g, y) {
        return Err(Error::InadmissibleState(y.clone()));
    }
    let asc = prefs_table(g);
    let mut items: Vec<u8> = y.letters().to_vec();
    let mut queue = y.clone();
    let mut ids: Vec<usize> = (0..y.len()).collect();
    let mut edges = Vec::new();
    let mut cps = Vec::new();
    if y.is_empty() {
        cps.push(0);
    }
    for t in 0..n_steps {
        for n in [2 * t as i64, 2 * t as i64 + 1] {
            let e = source.event(n);
            let v = e.class;
            let pref = e.pref.as_deref().unwrap_or(&asc[v as usize - 1]);
            let idx = items.len();
            items.push(v);
            match policy.step(g, &mut queue, v, pref) {
                Some(pos) => edges.push((ids.remove(pos), idx)),
                None => ids.push(idx),
            }
        }
        if queue.is_empty() {
            cps.push(t + 1);
        }
    }
    Ok(SimulationRun {
        trace: MatchingTrace {
            items,
            initial_len: y.len(),
            edges,
            leftover: queue,
            leftover_indices: ids,
        },
        cps,
    })
}

/// Forward simulation on the seeded stream, recording construction points.
pub fn simulate_with_construction_points(
    g: &CompatibilityGraph,
    policy: &Policy,
    mu: &ArrivalDistribution,
    y: &QueueDetail,
    n_steps: u64,
    seed: u64,
) -> Result<SimulationRun> {
    let mut stream = ArrivalStream::new(g, policy, mu, seed);
    simulate_from(g, policy, y, &mut stream, n_steps)
}

impl SimulationRun {
    /// Item index ranges between consecutive construction points.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        let off = self.trace.initial_len;
        self.cps
            .windows(2)
            .map(|w| (off + 2 * w[0] as usize, off + 2 * w[1] as usize))
            .collect()
    }

    /// Whether every item of every block is matched inside its block.
    pub fn blocks_are_perfect(&self) -> bool {
        let partners = self.trace.partners();
        self.blocks()
            .iter()
            .all(|&(lo, hi)| (lo..hi).all(|i| matches!(partners[i], Some(j) if (lo..hi).contains(&j))))
    }

    /// The matching restricted to items `lo..hi`, re-indexed from 0.
    pub fn block_trace(&self, lo: usize, hi: usize) -> MatchingTrace {
        let items = self.trace.items[lo..hi].to_vec();
        let edges = self
            .trace
            .edges
            .iter()
            .filter(|&&(a, b)| (lo..hi).contains(&a) && (lo..hi).contains(&b))
            .map(|&(a, b)| (a - lo, b - lo))
            .collect();
        let mut seen = vec![false; hi - lo];
        for &(a, b) in &self.trace.edges {
            if (lo..hi).contains(&a) && (lo..hi).contains(&b) {
                seen[a - lo] = true;
                seen[b - lo] = true;
            }
        }
        let leftover_indices: Vec<usize> = (0..hi - lo).filter(|&i| !seen[i]).collect();
        let leftover = Word::from_slice(&leftover_indices.iter().map(|&i| items[i]).collect::<Vec<_>>());
        MatchingTrace {
            items,
            initial_len: 0,
            edges,
            leftover,
            leftover_indices,
        }
    }
}

/// A matched pair of arrival times with their classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct WindowEdge {
    pub t_i: i64,
    pub t_j: i64,
    pub class_i: u8,
    pub class_j: u8,
}

/// Parity of the arrival time at which runs are started.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StartParity {
    Even,
    Odd,
}

impl StartParity {
    fn align(self, s: i64) -> i64 {
        let want = match self {
            StartParity::Even => 0,
            StartParity::Odd => 1,
        };
        if s.rem_euclid(2) == want {
            s
        } else {
            s - 1
        }
    }
}

/// The matching seen on `[a, b)` once it no longer depends on the start.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BiMatchWindow {
    pub a: i64,
    pub b: i64,
    pub parity: StartParity,
    /// Matched pairs with at least one end in `[a, b)`, sorted.
    pub edges: Vec<WindowEdge>,
    pub stabilized_from: u64,
    pub depths: Vec<u64>,
}

/// Runs from `∅` at arrival time `start` until every item of `[a, b)` is
/// matched; `None` if that takes more than `extra` arrivals past `b`.
pub fn window_matching<S: PairSource>(
    g: &CompatibilityGraph,
    policy: &Policy,
    source: &mut S,
    start: i64,
    a: i64,
    b: i64,
    extra: u64,
) -> Option<Vec<WindowEdge>> {
    let asc = prefs_table(g);
    let mut queue = Word::new();
    let mut times: Vec<i64> = Vec::new();
    let mut edges = Vec::new();
    let in_window = |t: i64| a <= t && t < b;
    let mut n = start;
    loop {
        if n >= b && !times.iter().any(|&t| in_window(t)) {
            break;
        }
        if n >= b + extra as i64 {
            return None;
        }
        let e = source.event(n);
        let v = e.class;
        let pref = e.pref.as_deref().unwrap_or(&asc[v as usize - 1]);
        match policy.step(g, &mut queue, v, pref) {
            Some(pos) => {
                let t = times.remove(pos);
                if in_window(t) || in_window(n) {
                    edges.push(WindowEdge {
                        t_i: t,
                        t_j: n,
                        class_i: source.class(t),
                        class_j: v,
                    });
                }
            }
            None => times.push(n),
        }
        n += 1;
    }
    edges.sort();
    Some(edges)
}

/// Matching of the window `[a, b)` of arrival times, computed from empty
/// buffers started at times `a - k` (aligned to `parity`) for each depth `k`
/// of the schedule. Returns the first depth from which every deeper depth
/// of the schedule gives the same edges (at least two depths must agree).
#[allow(clippy::too_many_arguments)]
pub fn biinfinite_window(
    g: &CompatibilityGraph,
    policy: &Policy,
    mu: &ArrivalDistribution,
    a: i64,
    b: i64,
    schedule: &[u64],
    parity: StartParity,
    seed: u64,
) -> Result<BiMatchWindow> {
    if b < a {
        return Err(Error::InvalidGraph(format!("empty window [{a}, {b})")));
    }
    let first = *schedule
        .first()
        .ok_or_else(|| Error::NotStabilized { depths: Vec::new() })?;
    if a == b {
        return Ok(BiMatchWindow {
            a,
            b,
            parity,
            edges: Vec::new(),
            stabilized_from: first,
            depths: schedule.to_vec(),
        });
    }
    let runs: Vec<Option<Vec<WindowEdge>>> = schedule
        .par_iter()
        .map(|&k| {
            let mut stream = ArrivalStream::new(g, policy, mu, seed);
            let start = parity.align(a - k as i64);
            window_matching(g, policy, &mut stream, start, a, b, DEFAULT_EXTRA_ARRIVALS)
        })
        .collect();
    let last = runs.len() - 1;
    let mut m = last;
    while m > 0 && runs[m].is_some() && runs[m - 1] == runs[m] {
        m -= 1;
    }
    if m == last || runs[m].is_none() {
        return Err(Error::NotStabilized {
            depths: schedule.to_vec(),
        });
    }
    Ok(BiMatchWindow {
        a,
        b,
        parity,
        edges: runs[m].clone().unwrap(),
        stabilized_from: schedule[m],
        depths: schedule.to_vec(),
    })
}

/// `t_i t_j class_i class_j` lines for arc diagrams.
pub fn arc_plot_data(edges: &[WindowEdge]) -> String {
    let mut s = String::from("# t_i t_j class_i class_j\n");
    for e in edges {
        s.push_str(&format!("{} {} {} {}\n", e.t_i, e.t_j, e.class_i, e.class_j));
    }
    s
}

/// FCFM matching of `items` from an empty buffer under `adj`, as sorted
/// `(earlier, later)` pairs, and the number of unmatched items.
fn fcfm_edges(items: &[u8], adj: impl Fn(u8, u8) -> bool) -> (Vec<(usize, usize)>, usize) {
    let mut queue: Vec<usize> = Vec::new();
    let mut edges = Vec::new();
    for (k, &v) in items.iter().enumerate() {
        match queue.iter().position(|&i| adj(items[i], v)) {
            Some(pos) => edges.push((queue.remove(pos), k)),
            None => queue.push(k),
        }
    }
    edges.sort();
    (edges, queue.len())
}

/// Replaces each item of a perfectly matched FCFM block by a barred copy of
/// its partner's class (labels `n + c`), reverses time, and checks that FCFM
/// on the result gives back the original matching read backward.
pub fn fcfm_reverse_check(g: &CompatibilityGraph, trace: &MatchingTrace) -> Result<bool> {
    let m = trace.items.len();
    let partners = trace.partners();
    if !trace.leftover.is_empty() || partners.iter().any(Option::is_none) {
        return Err(Error::NotPerfect);
    }
    let mut original: Vec<(usize, usize)> = trace.edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    original.sort();
    let (recomputed, rest) = fcfm_edges(&trace.items, |a, b| g.adjacent(a, b));
    if rest != 0 || recomputed != original {
        return Err(Error::NotFcfm);
    }
    let n = g.n() as u8;
    let reversed: Vec<u8> = (0..m).rev().map(|k| n + trace.items[partners[k].unwrap()]).collect();
    let (rev_edges, rest) = fcfm_edges(&reversed, |a, b| g.adjacent(a - n, b - n));
    let mut expected: Vec<(usize, usize)> = original.iter().map(|&(i, j)| (m - 1 - j, m - 1 - i)).collect();
    expected.sort();
    Ok(rest == 0 && rev_edges == expected)
}
