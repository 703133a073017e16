//! Even-time dynamics with a buffer of at most `2C` items, the exact
//! transition matrix over `W_2(C)` and its stationary distribution.

use std::collections::{BTreeMap, HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::graph::{ArrivalDistribution, CompatibilityGraph};
use crate::policy::{
    ascending_pref, check_permutation, draw_preference, enumerate_preferences, ArrivalEvent, Policy, PreferenceList,
};
use crate::stream::{derive_seed, draw_event, ClassSampler};
use crate::words::{enumerate_w2_bounded, is_admissible, QueueDetail, Word};

/// Largest state space for which a transition matrix is built.
pub const MATRIX_STATE_BOUND: usize = 200_000;

/// Largest number of preference combinations averaged per class pair.
pub const PREF_COMBINATION_BOUND: usize = 10_000;

/// States up to which the stationary system is solved directly.
pub const DENSE_SOLVE_BOUND: usize = 2000;

pub const RESIDUAL_BOUND: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct FiniteBufferChain {
    pub graph: CompatibilityGraph,
    pub policy: Policy,
    pub capacity: usize,
    pub mu: ArrivalDistribution,
}

impl FiniteBufferChain {
    pub fn new(graph: CompatibilityGraph, policy: Policy, capacity: usize, mu: ArrivalDistribution) -> Result<Self> {
        if mu.len() != graph.n() {
            return Err(Error::DimensionMismatch(mu.len(), graph.n()));
        }
        Ok(FiniteBufferChain {
            graph,
            policy,
            capacity,
            mu,
        })
    }

    pub fn states(&self) -> Result<Vec<Word>> {
        enumerate_w2_bounded(&self.graph, self.capacity, MATRIX_STATE_BOUND)
    }

    /// Unchecked pair step in place (see [`pair_transition`]).
    #[inline]
    pub fn step_pair(&self, u: &mut Word, v0: u8, p0: &[u8], v1: u8, p1: &[u8]) {
        pair_step(&self.graph, &self.policy, self.capacity, u, v0, p0, v1, p1);
    }
}

/// Two arrivals on a buffer of capacity `2C`. If the buffer would end above
/// `2C` the pair is discarded and `u` is left unchanged; a first arrival that
/// finds the buffer full is held as the youngest item while the second one
/// is processed.
#[inline]
#[allow(clippy::too_many_arguments)]
pub fn pair_step(
    g: &CompatibilityGraph,
    policy: &Policy,
    capacity: usize,
    u: &mut Word,
    v0: u8,
    p0: &[u8],
    v1: u8,
    p1: &[u8],
) {
    let limit = 2 * capacity;
    let saved = (u.len() + 2 > limit).then(|| u.clone());
    policy.step(g, u, v0, p0);
    policy.step(g, u, v1, p1);
    if u.len() > limit {
        *u = saved.expect("only a buffer near capacity can overflow");
    }
}

fn resolve(g: &CompatibilityGraph, policy: &Policy, e: &ArrivalEvent, rng: &mut ChaCha8Rng) -> Result<PreferenceList> {
    g.check_class(e.class as usize)?;
    match &e.pref {
        Some(p) => {
            check_permutation(g, e.class, p)?;
            Ok(p.clone())
        }
        None if policy.uses_preferences() => Ok(draw_preference(g, e.class, rng)),
        None => Ok(ascending_pref(g, e.class)),
    }
}

/// Checked pair transition `u -> u'`. Missing preference lists are drawn
/// from `rng` for policies that use them.
pub fn pair_transition(
    chain: &FiniteBufferChain,
    u: &QueueDetail,
    e0: &ArrivalEvent,
    e1: &ArrivalEvent,
    rng: &mut ChaCha8Rng,
) -> Result<QueueDetail> {
    let g = &chain.graph;
    if !is_admissible(g, u) {
        return Err(Error::InadmissibleState(u.clone()));
    }
    if u.len() > 2 * chain.capacity {
        return Err(Error::Overflow {
            state: u.clone(),
            capacity: chain.capacity,
        });
    }
    let p0 = resolve(g, &chain.policy, e0, rng)?;
    let p1 = resolve(g, &chain.policy, e1, rng)?;
    let mut next = u.clone();
    chain.step_pair(&mut next, e0.class, &p0, e1.class, &p1);
    if next.len() > 2 * chain.capacity {
        return Err(Error::Overflow {
            state: next,
            capacity: chain.capacity,
        });
    }
    Ok(next)
}

/// Sparse row-stochastic matrix over the canonical states of `W_2(C)`.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    pub states: Vec<Word>,
    pub index: HashMap<Word, usize>,
    /// `rows[i]` lists `(j, P(i, j))` with `j` ascending and positive entries.
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .map(|pos| self.rows[i][pos].1)
            .unwrap_or(0.0)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(_, p)| p).sum()).collect()
    }

    pub fn max_row_error(&self) -> f64 {
        self.row_sums().iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                m[(i, j)] = p;
            }
        }
        m
    }

    /// Builds a matrix from dense rows; used for hand-made chains.
    pub fn from_dense(states: Vec<Word>, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != states.len() {
            return Err(Error::DimensionMismatch(rows.len(), states.len()));
        }
        let mut sparse = Vec::with_capacity(rows.len());
        for r in rows {
            if r.len() != states.len() {
                return Err(Error::DimensionMismatch(r.len(), states.len()));
            }
            sparse.push(r.iter().copied().enumerate().filter(|&(_, p)| p > 0.0).collect());
        }
        let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(TransitionMatrix {
            states,
            index,
            rows: sparse,
        })
    }

    fn reach(&self, adj: &[Vec<usize>]) -> usize {
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count
    }

    /// Strong connectivity of the directed graph of positive entries.
    pub fn is_irreducible(&self) -> bool {
        if self.is_empty() {
            return false;
        }
        let fwd: Vec<Vec<usize>> = self.rows.iter().map(|r| r.iter().map(|&(j, _)| j).collect()).collect();
        let mut bwd = vec![Vec::new(); self.len()];
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, _) in r {
                bwd[j].push(i);
            }
        }
        self.reach(&fwd) == self.len() && self.reach(&bwd) == self.len()
    }

    /// `(πP)`.
    pub fn left_multiply(&self, pi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (i, row) in self.rows.iter().enumerate() {
            let w = pi[i];
            if w != 0.0 {
                for &(j, p) in row {
                    out[j] += w * p;
                }
            }
        }
        out
    }

    /// `‖πP − π‖_∞`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        self.left_multiply(pi)
            .iter()
            .zip(pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn pref_choices(g: &CompatibilityGraph, policy: &Policy, v: u8) -> Vec<PreferenceList> {
    if policy.uses_preferences() {
        enumerate_preferences(g, v)
    } else {
        vec![ascending_pref(g, v)]
    }
}

/// The exact transition matrix of the pair chain on `W_2(C)`, averaging over
/// all preference lists for policies that use them.
pub fn build_transition_matrix(chain: &FiniteBufferChain) -> Result<TransitionMatrix> {
    let g = &chain.graph;
    let states = chain.states().map_err(|_| {
        Error::TooLarge(format!(
            "W_2({}) has more than {MATRIX_STATE_BOUND} states",
            chain.capacity
        ))
    })?;
    let n = g.n() as u8;
    let prefs: Vec<Vec<PreferenceList>> = (1..=n).map(|v| pref_choices(g, &chain.policy, v)).collect();
    for a in &prefs {
        for b in &prefs {
            if a.len() * b.len() > PREF_COMBINATION_BOUND {
                return Err(Error::TooLarge(format!(
                    "{} preference combinations for one class pair",
                    a.len() * b.len()
                )));
            }
        }
    }
    let index: HashMap<Word, usize> = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let rows: Vec<Vec<(usize, f64)>> = states
        .par_iter()
        .map(|s| {
            let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
            for v0 in 1..=n {
                for v1 in 1..=n {
                    let (ps0, ps1) = (&prefs[v0 as usize - 1], &prefs[v1 as usize - 1]);
                    let w = chain.mu.prob(v0) * chain.mu.prob(v1) / (ps0.len() * ps1.len()) as f64;
                    for p0 in ps0 {
                        for p1 in ps1 {
                            let mut t = s.clone();
                            chain.step_pair(&mut t, v0, p0, v1, p1);
                            *acc.entry(index[&t]).or_insert(0.0) += w;
                        }
                    }
                }
            }
            acc.into_iter().collect()
        })
        .collect();
    let m = TransitionMatrix { states, index, rows };
    let err = m.max_row_error();
    if err > 1e-12 {
        return Err(Error::VerificationFailed(format!("row sums deviate from 1 by {err:e}")));
    }
    Ok(m)
}

/// A probability vector over canonical states.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryDistribution {
    pub states: Vec<Word>,
    pub probs: Vec<f64>,
}

impl StationaryDistribution {
    pub fn prob_of(&self, w: &Word) -> f64 {
        self.states
            .iter()
            .position(|s| s == w)
            .map(|i| self.probs[i])
            .unwrap_or(0.0)
    }

    /// One `state prob` line per state.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (w, p) in self.states.iter().zip(&self.probs) {
            s.push_str(&format!("{w} {p}\n"));
        }
        s
    }

    /// Parses a dump; `#` lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut states = Vec::new();
        let mut probs = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let (Some(w), Some(p), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse(format!("expected `state prob`, got `{line}`")));
            };
            states.push(Word::parse(w)?);
            probs.push(p.parse::<f64>().map_err(|e| Error::Parse(format!("{p}: {e}")))?);
        }
        Ok(StationaryDistribution { states, probs })
    }
}

fn normalize(v: &mut [f64]) {
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let s: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= s;
    }
}

fn power_iterate(m: &TransitionMatrix, pi: &mut [f64], max_iter: usize) -> f64 {
    let mut res = m.residual(pi);
    let mut k = 0;
    while res >= RESIDUAL_BOUND * 0.01 && k < max_iter {
        // lazy step avoids oscillation on periodic chains
        let next = m.left_multiply(pi);
        for (a, b) in pi.iter_mut().zip(next) {
            *a = 0.5 * (*a + b);
        }
        normalize(pi);
        res = m.residual(pi);
        k += 1;
    }
    res
}

/// The unique stationary distribution of an irreducible matrix.
pub fn solve_stationary(m: &TransitionMatrix) -> Result<StationaryDistribution> {
    if !m.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    let n = m.len();
    let mut pi = if n <= DENSE_SOLVE_BOUND {
        let mut a = m.dense().transpose();
        for i in 0..n {
            a[(i, i)] -= 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut b = DVector::zeros(n);
        b[n - 1] = 1.0;
        let x = a.lu().solve(&b).ok_or(Error::NoConvergence(f64::INFINITY))?;
        let mut pi: Vec<f64> = x.iter().copied().collect();
        normalize(&mut pi);
        pi
    } else {
        vec![1.0 / n as f64; n]
    };
    let mut res = m.residual(&pi);
    if res >= RESIDUAL_BOUND {
        res = power_iterate(m, &mut pi, 1_000_000);
    }
    if res >= RESIDUAL_BOUND {
        return Err(Error::NoConvergence(res));
    }
    Ok(StationaryDistribution {
        states: m.states.clone(),
        probs: pi,
    })
}

/// `½ Σ |p_i − q_i|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(p.len(), q.len()));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Cells merged because their expected count was below 5.
    pub pooled_cells: usize,
}

/// Pearson goodness-of-fit of observed `counts` against `probs`. Cells with
/// expected count below 5 are pooled.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> Result<ChiSquareResult> {
    if counts.len() != probs.len() {
        return Err(Error::DimensionMismatch(counts.len(), probs.len()));
    }
    let total: u64 = counts.iter().sum();
    let nt = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pool = (0.0, 0.0);
    let mut pooled_cells = 0;
    for (&c, &p) in counts.iter().zip(probs) {
        let e = p * nt;
        if e < 5.0 {
            pool.0 += c as f64;
            pool.1 += e;
            pooled_cells += 1;
        } else {
            cells.push((c as f64, e));
        }
    }
    if pooled_cells > 0 {
        if pool.1 >= 5.0 || cells.is_empty() {
            cells.push(pool);
        } else {
            let k = (0..cells.len())
                .min_by(|&a, &b| cells[a].1.total_cmp(&cells[b].1))
                .unwrap();
            cells[k].0 += pool.0;
            cells[k].1 += pool.1;
        }
    }
    let statistic: f64 = cells
        .iter()
        .filter(|c| c.1 > 0.0)
        .map(|&(o, e)| (o - e) * (o - e) / e)
        .sum();
    let df = cells.len().saturating_sub(1);
    let p_value = if df == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(df as f64).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        1.0 - dist.cdf(statistic)
    };
    Ok(ChiSquareResult {
        statistic,
        df,
        p_value,
        pooled_cells,
    })
}

/// Buffer dynamics used by [`estimate_return_time`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dynamics {
    Finite(usize),
    Infinite,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReturnTimeEstimate {
    /// Mean over the uncensored replicas.
    pub mean: f64,
    pub std_err: f64,
    pub ci: (f64, f64),
    pub censored: usize,
    pub n_reps: usize,
}

/// Monte Carlo estimate of `E[τ₁(Y)]`, `τ₁(Y) = inf{n > 0 : U_n = ∅}`
/// counted in pairs. Replicas not back to `∅` within `horizon` pairs are
/// counted as censored and left out of the mean.
#[allow(clippy::too_many_arguments)]
pub fn estimate_return_time(
    g: &CompatibilityGraph,
    policy: &Policy,
    mu: &ArrivalDistribution,
    dynamics: Dynamics,
    y: &QueueDetail,
    n_reps: usize,
    horizon: u64,
    seed: u64,
) -> Result<ReturnTimeEstimate> {
    if !is_admissible(g, y) {
        return Err(Error::InadmissibleState(y.clone()));
    }
    if let Dynamics::Finite(c) = dynamics {
        if y.len() > 2 * c {
            return Err(Error::Overflow {
                state: y.clone(),
                capacity: c,
            });
        }
    }
    let sampler = ClassSampler::new(mu);
    let neighbors: Vec<PreferenceList> = (1..=g.n() as u8).map(|v| ascending_pref(g, v)).collect();
    let with_prefs = policy.uses_preferences();
    let times: Vec<Option<u64>> = (0..n_reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, rep));
            let mut u = y.clone();
            for n in 1..=horizon {
                let e0 = draw_event(&sampler, &neighbors, with_prefs, &mut rng);
                let e1 = draw_event(&sampler, &neighbors, with_prefs, &mut rng);
                let p0 = e0.pref.unwrap_or_else(|| neighbors[e0.class as usize - 1].clone());
                let p1 = e1.pref.unwrap_or_else(|| neighbors[e1.class as usize - 1].clone());
                match dynamics {
                    Dynamics::Finite(c) => pair_step(g, policy, c, &mut u, e0.class, &p0, e1.class, &p1),
                    Dynamics::Infinite => {
                        policy.step(g, &mut u, e0.class, &p0);
                        policy.step(g, &mut u, e1.class, &p1);
                    }
                }
                if u.is_empty() {
                    return Some(n);
                }
            }
            None
        })
        .collect();
    let done: Vec<f64> = times.iter().flatten().map(|&t| t as f64).collect();
    let censored = n_reps - done.len();
    let k = done.len() as f64;
    let mean = if done.is_empty() {
        f64::NAN
    } else {
        done.iter().sum::<f64>() / k
    };
    let var = if done.len() > 1 {
        done.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (k - 1.0)
    } else {
        f64::NAN
    };
    let std_err = (var / k).sqrt();
    Ok(ReturnTimeEstimate {
        mean,
        std_err,
        ci: (mean - 1.96 * std_err, mean + 1.96 * std_err),
        censored,
        n_reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paw_chain(policy: Policy, c: usize) -> FiniteBufferChain {
        let mu = ArrivalDistribution::new(vec![0.2, 0.3, 0.25, 0.25]).unwrap();
        FiniteBufferChain::new(CompatibilityGraph::paw(), policy, c, mu).unwrap()
    }

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn overflow_cases() {
        let chain = paw_chain(Policy::fcfm(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = ArrivalEvent::new;
        let run = |u: &str, a, b, rng: &mut ChaCha8Rng| pair_transition(&chain, &w(u), &e(a), &e(b), rng).unwrap();
        assert_eq!(run("33", 1, 1, &mut rng), w("33"));
        assert_eq!(run("33", 2, 2, &mut rng), w("-"));
        assert_eq!(run("33", 1, 2, &mut rng), w("31"));
        assert_eq!(run("33", 1, 3, &mut rng), w("33"));
        assert_eq!(run("-", 1, 1, &mut rng), w("11"));
        assert!(matches!(
            pair_transition(&chain, &w("1111"), &e(2), &e(2), &mut rng),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn never_exceeds_capacity() {
        for g in [CompatibilityGraph::paw(), CompatibilityGraph::cycle(5).unwrap()] {
            for policy in [
                Policy::fcfm(),
                Policy::lcfm(),
                Policy::ml(),
                Policy::ms(),
                Policy::uniform(),
            ] {
                for c in 0..=2 {
                    let states = enumerate_w2_bounded(&g, c, 10_000).unwrap();
                    for s in &states {
                        for v0 in 1..=g.n() as u8 {
                            for v1 in 1..=g.n() as u8 {
                                for p0 in enumerate_preferences(&g, v0) {
                                    for p1 in enumerate_preferences(&g, v1) {
                                        let mut t = s.clone();
                                        pair_step(&g, &policy, c, &mut t, v0, &p0, v1, &p1);
                                        assert!(t.len() <= 2 * c && is_admissible(&g, &t));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn empty_to_empty_probability() {
        let chain = paw_chain(Policy::fcfm(), 1);
        let m = build_transition_matrix(&chain).unwrap();
        let g = &chain.graph;
        // from ∅ the pair leaves ∅ exactly when its two classes are compatible
        let mut expected = 0.0;
        for a in 1..=4u8 {
            for b in 1..=4u8 {
                if g.adjacent(a, b) {
                    expected += chain.mu.prob(a) * chain.mu.prob(b);
                }
            }
        }
        assert!((m.get(0, 0) - expected).abs() < 1e-15);
        assert!(m.max_row_error() < 1e-12);
        assert!(m.is_irreducible());
        assert_eq!(m.len(), 9);
    }

    #[test]
    fn stationary_residuals() {
        for policy in [Policy::fcfm(), Policy::ml(), Policy::uniform()] {
            for c in 1..=3 {
                let m = build_transition_matrix(&paw_chain(policy.clone(), c)).unwrap();
                let pi = solve_stationary(&m).unwrap();
                assert!(m.residual(&pi.probs) < 1e-9);
                assert!((pi.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
                assert!(pi.probs.iter().all(|&p| p >= 0.0));
            }
        }
    }

    #[test]
    fn power_iteration_agrees_with_lu() {
        let m = build_transition_matrix(&paw_chain(Policy::fcfm(), 2)).unwrap();
        let pi = solve_stationary(&m).unwrap();
        let mut q = vec![1.0 / m.len() as f64; m.len()];
        power_iterate(&m, &mut q, 1_000_000);
        assert!(total_variation(&pi.probs, &q).unwrap() < 1e-8);
    }

    #[test]
    fn two_state_and_reducible() {
        let states = vec![w("-"), w("11")];
        let m = TransitionMatrix::from_dense(states.clone(), &[vec![0.3, 0.7], vec![0.7, 0.3]]).unwrap();
        let pi = solve_stationary(&m).unwrap();
        assert!((pi.probs[0] - 0.5).abs() < 1e-12);
        let r = TransitionMatrix::from_dense(states, &[vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert_eq!(solve_stationary(&r), Err(Error::NotIrreducible));
    }

    #[test]
    fn tv_values() {
        assert_eq!(total_variation(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert_eq!(total_variation(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(total_variation(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), 0.5);
        assert_eq!(
            total_variation(&[1.0], &[0.5, 0.5]),
            Err(Error::DimensionMismatch(1, 2))
        );
    }

    #[test]
    fn chi_square_pools_small_cells() {
        let r = chi_square_gof(&[50, 50, 0], &[0.5, 0.5, 0.0]).unwrap();
        assert_eq!(r.pooled_cells, 1);
        assert_eq!(r.df, 1);
        assert!(r.p_value > 0.99);
        let bad = chi_square_gof(&[90, 10], &[0.5, 0.5]).unwrap();
        assert!(bad.p_value < 1e-10);
    }

    #[test]
    fn dump_round_trip() {
        let m = build_transition_matrix(&paw_chain(Policy::fcfm(), 1)).unwrap();
        let pi = solve_stationary(&m).unwrap();
        let back = StationaryDistribution::parse(&pi.dump()).unwrap();
        assert_eq!(back, pi);
        assert!(pi.dump().starts_with("- "));
    }

    #[test]
    fn kac_formula() {
        let chain = paw_chain(Policy::fcfm(), 1);
        let m = build_transition_matrix(&chain).unwrap();
        let pi = solve_stationary(&m).unwrap();
        let est = estimate_return_time(
            &chain.graph,
            &chain.policy,
            &chain.mu,
            Dynamics::Finite(1),
            &Word::new(),
            20_000,
            100_000,
            5,
        )
        .unwrap();
        assert_eq!(est.censored, 0);
        assert!(est.mean >= 1.0);
        let exact = 1.0 / pi.probs[0];
        assert!((est.mean - exact).abs() < 3.0 * est.std_err, "{} vs {exact}", est.mean);
    }
}
