//! Erasing words and strong erasing words: verification, search, the
//! closed-form constructions, and dictionaries for the perfect sampler.
//!
//! Verification propagates the set of buffers reachable over all preference
//! assignments, so it is exhaustive for every policy.

use std::fmt;

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{ClassSet, CompatibilityGraph};
use crate::policy::{reachable_leftovers, Policy};
use crate::words::{enumerate_w2_bounded, is_admissible, QueueDetail, Word};

/// Cap on `|W_2(C)|` for strong-word verification.
pub const STRONG_STATE_BOUND: usize = 200_000;

/// Cap on the number of candidate words in exhaustive searches.
pub const SEARCH_WORD_BOUND: u64 = 20_000_000;

fn step_set(g: &CompatibilityGraph, policy: &Policy, states: &[Word], v: u8) -> Vec<Word> {
    let mut next = Vec::with_capacity(states.len());
    for s in states {
        for (pos, _) in policy.branches(g, s.letters(), v) {
            let mut t = s.clone();
            match pos {
                Some(p) => {
                    t.remove(p);
                }
                None => t.push(v),
            }
            next.push(t);
        }
    }
    if next.len() > 1 {
        next.sort();
        next.dedup();
    }
    next
}

fn check_even(z: &Word) -> Result<()> {
    if z.len() % 2 == 1 {
        Err(Error::OddLength(z.clone()))
    } else {
        Ok(())
    }
}

/// `W(z) = ∅` and `W(uz) = ∅` for every preference assignment.
pub fn is_erasing_word(g: &CompatibilityGraph, policy: &Policy, u: &QueueDetail, z: &Word) -> Result<bool> {
    check_even(z)?;
    z.check_range(g.n())?;
    if !is_admissible(g, u) {
        return Err(Error::InadmissibleState(u.clone()));
    }
    let empty = |w: &Word| reachable_leftovers(g, policy, w, z).iter().all(Word::is_empty);
    Ok(empty(&Word::new()) && empty(u))
}

/// Where a word fails to be strong erasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrongFailure {
    pub initial: Word,
    /// Length of the prefix after which the reached buffer is too large, or
    /// the full length if the buffer is not emptied at the end.
    pub prefix_len: usize,
    pub state: Word,
}

/// First failure (in canonical state order) of the strong erasing
/// conditions for capacity `C`, or `None` if `z` is `2C`-strong.
pub fn strong_erasing_failure(
    g: &CompatibilityGraph,
    policy: &Policy,
    capacity: usize,
    z: &Word,
) -> Result<Option<StrongFailure>> {
    check_even(z)?;
    z.check_range(g.n())?;
    let states = enumerate_w2_bounded(g, capacity, STRONG_STATE_BOUND)
        .map_err(|_| Error::DomainTooLarge(format!("W_2({capacity}) has more than {STRONG_STATE_BOUND} states")))?;
    let failures: Vec<Option<StrongFailure>> = states.par_iter().map(|w| failure_from(g, policy, w, z)).collect();
    Ok(failures.into_iter().flatten().next())
}

fn failure_from(g: &CompatibilityGraph, policy: &Policy, w: &Word, z: &Word) -> Option<StrongFailure> {
    let mut set = vec![w.clone()];
    for (k, &v) in z.letters().iter().enumerate() {
        set = step_set(g, policy, &set, v);
        if k % 2 == 1 {
            if let Some(s) = set.iter().find(|s| s.len() > w.len()) {
                return Some(StrongFailure {
                    initial: w.clone(),
                    prefix_len: k + 1,
                    state: s.clone(),
                });
            }
        }
    }
    set.iter().find(|s| !s.is_empty()).map(|s| StrongFailure {
        initial: w.clone(),
        prefix_len: z.len(),
        state: s.clone(),
    })
}

/// Whether `z` is a `2C`-strong erasing word: from every `w ∈ W_2(C)` and for
/// every preference assignment, `wz` is completely matched and the buffer
/// never exceeds `|w|` after an even prefix of `z`.
pub fn is_strong_erasing_word(g: &CompatibilityGraph, policy: &Policy, capacity: usize, z: &Word) -> Result<bool> {
    Ok(strong_erasing_failure(g, policy, capacity, z)?.is_none())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum CertTarget {
    /// Erasing word of this buffer.
    Buffer(Word),
    /// `2C`-strong erasing word.
    Capacity(usize),
}

/// A word together with what it was certified for.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ErasingCert {
    pub target: CertTarget,
    pub word: Word,
    pub policy: String,
    pub checked_domain: String,
    /// False when the word was only derived by composition and the domain
    /// was too large to check directly.
    pub verified: bool,
}

impl ErasingCert {
    pub fn reverify(&self, g: &CompatibilityGraph, policy: &Policy) -> Result<bool> {
        match &self.target {
            CertTarget::Buffer(u) => is_erasing_word(g, policy, u, &self.word),
            CertTarget::Capacity(c) => is_strong_erasing_word(g, policy, *c, &self.word),
        }
    }

    fn strong(g: &CompatibilityGraph, policy: &Policy, capacity: usize, word: Word) -> Result<Self> {
        match strong_erasing_failure(g, policy, capacity, &word)? {
            None => Ok(ErasingCert {
                target: CertTarget::Capacity(capacity),
                checked_domain: strong_domain(g, capacity),
                word,
                policy: policy.to_string(),
                verified: true,
            }),
            Some(f) => Err(Error::VerificationFailed(format!(
                "{word} is not {}-strong for {policy}: from {} the prefix of length {} leaves {}",
                2 * capacity,
                f.initial,
                f.prefix_len,
                f.state
            ))),
        }
    }
}

impl fmt::Display for ErasingCert {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.target {
            CertTarget::Buffer(u) => write!(f, "erasing word {} of {u} for {}", self.word, self.policy),
            CertTarget::Capacity(c) => write!(f, "{}-strong erasing word {} for {}", 2 * c, self.word, self.policy),
        }
    }
}

fn strong_domain(g: &CompatibilityGraph, capacity: usize) -> String {
    match enumerate_w2_bounded(g, capacity, STRONG_STATE_BOUND) {
        Ok(s) => format!("all {} states of W_2({capacity}), all preference assignments", s.len()),
        Err(_) => format!("W_2({capacity}) too large to enumerate"),
    }
}

/// Certifies `z` as a `2C`-strong erasing word, or explains the failure.
pub fn certify_strong(g: &CompatibilityGraph, policy: &Policy, capacity: usize, z: &Word) -> Result<ErasingCert> {
    ErasingCert::strong(g, policy, capacity, z.clone())
}

/// An erasing word of the two-letter buffer `ij` (with `i` and `j` not
/// adjacent): the shortest path between them, completed through the odd
/// cycle when the path has even length.
fn pair_erasing_word(g: &CompatibilityGraph, cycle: &[u8], i: u8, j: u8) -> Vec<u8> {
    let path = if i == j {
        let k = g.neighbors(i).iter().next().expect("connected graph");
        vec![i, k, i]
    } else {
        g.shortest_path(i, j)
    };
    let p = path.len() - 1;
    let interior = &path[1..p];
    let mut y: Vec<u8> = interior.to_vec();
    if p % 2 == 1 {
        return y;
    }
    let last = *interior.last().unwrap();
    y.push(last);
    let on_cycle: ClassSet = cycle.iter().copied().collect();
    let (connector, start): (Vec<u8>, usize) = if on_cycle.contains(last) {
        // start the cycle right after `last`, so that it ends on `last`
        let at = cycle.iter().position(|&c| c == last).unwrap();
        (Vec::new(), (at + 1) % cycle.len())
    } else {
        let route = g.shortest_path_to_set(last, on_cycle);
        let k1 = *route.last().unwrap();
        let at = cycle.iter().position(|&c| c == k1).unwrap();
        (route[1..route.len() - 1].to_vec(), at)
    };
    for &c in &connector {
        y.push(c);
        y.push(c);
    }
    let rotated: Vec<u8> = (0..cycle.len()).map(|k| cycle[(start + k) % cycle.len()]).collect();
    y.push(rotated[0]);
    y.extend_from_slice(&rotated);
    y
}

/// Builds an erasing word of `u` by repeatedly erasing the last two letters
/// of the remaining buffer: a shortest path between them when it has odd
/// length, otherwise the path with its last node doubled followed by a
/// doubled route to the smallest induced odd cycle and a tour of it. The
/// remaining buffer is the longest reachable one (first in lexicographic
/// order among ties). The result is always re-verified.
pub fn construct_erasing_word(g: &CompatibilityGraph, policy: &Policy, u: &QueueDetail) -> Result<ErasingCert> {
    if !is_admissible(g, u) {
        return Err(Error::InadmissibleState(u.clone()));
    }
    check_even(u)?;
    let cycle = g.find_induced_odd_cycle().ok_or(Error::BipartiteGraph)?;
    let mut z = Word::new();
    let max_rounds = 4 * u.len() + 8;
    for _ in 0..=max_rounds {
        let residuals = reachable_leftovers(g, policy, u, &z);
        let Some(r) = residuals
            .iter()
            .filter(|r| !r.is_empty())
            .max_by(|a, b| a.len().cmp(&b.len()).then_with(|| b.cmp(a)))
        else {
            break;
        };
        let l = r.letters();
        if l.len() < 2 {
            break;
        }
        let y = pair_erasing_word(g, &cycle.nodes, l[l.len() - 2], l[l.len() - 1]);
        z.extend_from_slice(&y);
    }
    if !is_erasing_word(g, policy, u, &z)? {
        return Err(Error::VerificationFailed(format!(
            "constructed word {z} does not erase {u} under {policy}"
        )));
    }
    Ok(ErasingCert {
        target: CertTarget::Buffer(u.clone()),
        word: z,
        policy: policy.to_string(),
        checked_domain: "all preference assignments".into(),
        verified: true,
    })
}

/// All words of length `len >= 1` over `1..=n`, in lexicographic order.
fn all_words(n: u8, len: usize) -> impl Iterator<Item = Word> {
    (0..len)
        .map(|_| 1..=n)
        .multi_cartesian_product()
        .map(|v| Word::from_slice(&v))
}

/// All erasing words of `u` of the smallest non-zero length at most
/// `max_len` (an odd bound is rounded down), in lexicographic order. Words
/// of minimal length are reduced.
pub fn find_minimal_erasing_words(
    g: &CompatibilityGraph,
    policy: &Policy,
    u: &QueueDetail,
    max_len: usize,
) -> Result<Vec<Word>> {
    if !is_admissible(g, u) {
        return Err(Error::InadmissibleState(u.clone()));
    }
    let n = g.n() as u8;
    for len in (2..=max_len).step_by(2) {
        let count = (n as u64).checked_pow(len as u32).unwrap_or(u64::MAX);
        if count > SEARCH_WORD_BOUND {
            return Err(Error::DomainTooLarge(format!("{count} words of length {len}")));
        }
        let words: Vec<Word> = all_words(n, len).collect();
        let found: Vec<Word> = words
            .into_par_iter()
            .filter(|z| is_erasing_word(g, policy, u, z).unwrap_or(false))
            .collect();
        if !found.is_empty() {
            return Ok(found);
        }
    }
    Err(Error::NoneFound(max_len))
}

/// All `2C`-strong erasing words of length `len`, in lexicographic order,
/// stopping after `limit` words. Such words are sequences of compatible
/// pairs (the empty buffer must be emptied after every pair), which the
/// search exploits, together with pruning on every even prefix.
pub fn search_strong_words(
    g: &CompatibilityGraph,
    policy: &Policy,
    capacity: usize,
    len: usize,
    limit: usize,
) -> Result<Vec<Word>> {
    if len % 2 == 1 {
        return Ok(Vec::new());
    }
    let states =
        enumerate_w2_bounded(g, capacity, STRONG_STATE_BOUND).map_err(|e| Error::DomainTooLarge(e.to_string()))?;
    let pairs: Vec<(u8, u8)> = (1..=g.n() as u8)
        .flat_map(|a| g.neighbors(a).iter().map(move |b| (a, b)))
        .collect();
    let start: Vec<Vec<Word>> = states.iter().map(|w| vec![w.clone()]).collect();
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    strong_dfs(
        g,
        policy,
        &states,
        &pairs,
        &start,
        len / 2,
        &mut prefix,
        &mut out,
        limit,
    );
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn strong_dfs(
    g: &CompatibilityGraph,
    policy: &Policy,
    states: &[Word],
    pairs: &[(u8, u8)],
    sets: &[Vec<Word>],
    remaining: usize,
    prefix: &mut Vec<u8>,
    out: &mut Vec<Word>,
    limit: usize,
) {
    if out.len() >= limit {
        return;
    }
    if remaining == 0 {
        if sets.iter().all(|s| s.iter().all(Word::is_empty)) {
            out.push(Word::from_slice(prefix));
        }
        return;
    }
    'pairs: for &(a, b) in pairs {
        let mut next = Vec::with_capacity(sets.len());
        for (w, set) in states.iter().zip(sets) {
            let s = step_set(g, policy, &step_set(g, policy, set, a), b);
            if s.iter().any(|x| x.len() > w.len()) {
                continue 'pairs;
            }
            next.push(s);
        }
        prefix.push(a);
        prefix.push(b);
        strong_dfs(g, policy, states, pairs, &next, remaining - 1, prefix, out, limit);
        prefix.truncate(prefix.len() - 2);
    }
}

/// Concatenates `C` certified 2-strong words into a `2C`-strong word. The
/// result is checked directly when `W_2(C)` is small enough; otherwise it is
/// marked as derived by composition only.
pub fn compose_strong_words(g: &CompatibilityGraph, policy: &Policy, certs: &[ErasingCert]) -> Result<ErasingCert> {
    if certs.is_empty() {
        return Err(Error::NoBaseWords);
    }
    for c in certs {
        if c.target != CertTarget::Capacity(1) || !is_strong_erasing_word(g, policy, 1, &c.word)? {
            return Err(Error::VerificationFailed(format!(
                "{} is not a 2-strong erasing word for {policy}",
                c.word
            )));
        }
    }
    let capacity = certs.len();
    let mut word = Word::new();
    for c in certs {
        word.extend_from_slice(c.word.letters());
    }
    match strong_erasing_failure(g, policy, capacity, &word) {
        Ok(None) => Ok(ErasingCert {
            target: CertTarget::Capacity(capacity),
            checked_domain: strong_domain(g, capacity),
            word,
            policy: policy.to_string(),
            verified: true,
        }),
        Ok(Some(f)) => Err(Error::VerificationFailed(format!(
            "composition {word} fails from {} after {} letters",
            f.initial, f.prefix_len
        ))),
        Err(Error::DomainTooLarge(_)) => Ok(ErasingCert {
            target: CertTarget::Capacity(capacity),
            checked_domain: "derived by composition of 2-strong words".into(),
            word,
            policy: policy.to_string(),
            verified: false,
        }),
        Err(e) => Err(e),
    }
}

/// The spanning odd walk repeated four times, certified 2-strong for `policy`
/// (intended for LCFM).
pub fn make_lcfm_cycle_word(g: &CompatibilityGraph, policy: &Policy) -> Result<ErasingCert> {
    let walk = g.spanning_odd_cycle()?;
    let word = Word::from_slice(&walk.nodes).repeat(4);
    ErasingCert::strong(g, policy, 1, word)
}

/// For an odd cycle `c_1..c_m`: the cycle read forwards twice, then
/// `c_1 c_m .. c_2` twice, certified 2-strong for `policy` (intended for FCFM).
pub fn make_fcfm_cycle_word(g: &CompatibilityGraph, policy: &Policy) -> Result<ErasingCert> {
    let order = g.odd_cycle_order().ok_or(Error::NotAnOddCycle)?;
    let mut back = vec![order[0]];
    back.extend(order[1..].iter().rev());
    let mut word = Word::from_slice(&order).repeat(2);
    word.extend_from_slice(&back);
    word.extend_from_slice(&back);
    ErasingCert::strong(g, policy, 1, word)
}

/// For a complete p-partite graph with parts `I_1..I_p` (ordered by their
/// smallest class): the pairs `(I_k, I_{k+1})` for `k = 1..p` cyclically,
/// where a part contributes its smallest class on first use and its largest
/// on second use. Certified 2-strong for `policy`.
pub fn make_complete_partite_word(g: &CompatibilityGraph, policy: &Policy) -> Result<ErasingCert> {
    let report = g.classify_complete_multipartite();
    let parts = report.parts.ok_or(Error::NotCompleteMultipartite)?;
    let p = parts.len();
    let mut used = vec![0usize; p];
    let mut take = |k: usize| {
        let members = parts[k].to_vec();
        used[k] += 1;
        if used[k] == 1 {
            members[0]
        } else {
            *members.last().unwrap()
        }
    };
    let mut letters = Vec::with_capacity(2 * p);
    for k in 0..p {
        letters.push(take(k));
        letters.push(take((k + 1) % p));
    }
    ErasingCert::strong(g, policy, 1, Word::from_slice(&letters))
}

/// All concatenations of `capacity` base words (with repetition), without
/// duplicates, in lexicographic order of the index tuples.
pub fn build_dictionary(base: &[Word], capacity: usize) -> Result<Vec<Word>> {
    if base.is_empty() {
        return Err(Error::NoBaseWords);
    }
    if !base.iter().map(Word::len).all_equal() {
        return Err(Error::MixedLengths);
    }
    let mut out: Vec<Word> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for combo in (0..capacity).map(|_| base.iter()).multi_cartesian_product() {
        let mut w = Word::new();
        for b in combo {
            w.extend_from_slice(b.letters());
        }
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    if capacity == 0 {
        out.push(Word::new());
    }
    Ok(out)
}

/// Dictionary file: `# key = value` header lines, then one word per line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DictionaryFile {
    pub graph_hash: String,
    pub policy: String,
    pub capacity: usize,
    pub q: usize,
    pub words: Vec<Word>,
}

impl DictionaryFile {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# graph = {}\n# policy = {}\n# capacity = {}\n# q = {}\n",
            self.graph_hash, self.policy, self.capacity, self.q
        );
        for w in &self.words {
            s.push_str(&format!("{w}\n"));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut d = DictionaryFile {
            graph_hash: String::new(),
            policy: String::new(),
            capacity: 0,
            q: 0,
            words: Vec::new(),
        };
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(h) = line.strip_prefix('#') {
                let Some((key, value)) = h.split_once('=') else {
                    continue;
                };
                let value = value.trim();
                let num = || value.parse::<usize>().map_err(|e| Error::Parse(format!("{key}: {e}")));
                match key.trim() {
                    "graph" => d.graph_hash = value.to_string(),
                    "policy" => d.policy = value.to_string(),
                    "capacity" => d.capacity = num()?,
                    "q" => d.q = num()?,
                    _ => {}
                }
            } else {
                d.words.push(Word::parse(line)?);
            }
        }
        Ok(d)
    }
}
