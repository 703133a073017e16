//! Matching policies acting on queue details and class details, and full
//! matching traces of a word.

use std::fmt;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::graph::{ClassSet, CompatibilityGraph};
use crate::words::{is_admissible, ClassDetail, QueueDetail, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    Fcfm,
    Lcfm,
    Ml,
    Ms,
    Priority,
    Uniform,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::Fcfm,
        PolicyKind::Lcfm,
        PolicyKind::Ml,
        PolicyKind::Ms,
        PolicyKind::Priority,
        PolicyKind::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Fcfm => "fcfm",
            PolicyKind::Lcfm => "lcfm",
            PolicyKind::Ml => "ml",
            PolicyKind::Ms => "ms",
            PolicyKind::Priority => "priority",
            PolicyKind::Uniform => "uniform",
        }
    }

    /// Whether the arriving item's preference list can change the outcome.
    pub fn uses_preferences(self) -> bool {
        matches!(self, PolicyKind::Ml | PolicyKind::Ms | PolicyKind::Uniform)
    }

    /// Whether the policy only looks at class counts (so it acts on class
    /// details). FCFM and LCFM need arrival order.
    pub fn is_class_admissible(self) -> bool {
        !matches!(self, PolicyKind::Fcfm | PolicyKind::Lcfm)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A permutation of the neighbours of the arriving class.
pub type PreferenceList = SmallVec<[u8; 8]>;

/// Matched positions in two queues and a preference list producing them.
pub type JointBranch = (Option<usize>, Option<usize>, PreferenceList);

/// An arriving item: its class and, for preference-driven policies, its
/// preference list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArrivalEvent {
    pub class: u8,
    pub pref: Option<PreferenceList>,
}

impl ArrivalEvent {
    pub fn new(class: u8) -> Self {
        ArrivalEvent { class, pref: None }
    }

    pub fn with_pref(class: u8, pref: &[u8]) -> Self {
        ArrivalEvent {
            class,
            pref: Some(PreferenceList::from_slice(pref)),
        }
    }
}

/// A matching policy. Priority policies carry one fixed list per class.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Policy {
    kind: PolicyKind,
    priority: Option<Vec<PreferenceList>>,
}

impl Policy {
    /// Any kind except [`PolicyKind::Priority`], which needs lists.
    pub fn simple(kind: PolicyKind) -> Result<Self> {
        if kind == PolicyKind::Priority {
            return Err(Error::InvalidPolicy(
                "priority policies need one preference list per class".into(),
            ));
        }
        Ok(Policy { kind, priority: None })
    }

    pub fn fcfm() -> Self {
        Policy::simple(PolicyKind::Fcfm).unwrap()
    }

    pub fn lcfm() -> Self {
        Policy::simple(PolicyKind::Lcfm).unwrap()
    }

    pub fn ml() -> Self {
        Policy::simple(PolicyKind::Ml).unwrap()
    }

    pub fn ms() -> Self {
        Policy::simple(PolicyKind::Ms).unwrap()
    }

    pub fn uniform() -> Self {
        Policy::simple(PolicyKind::Uniform).unwrap()
    }

    /// Priority policy; `lists[k]` is the list of class `k + 1` and must be a
    /// permutation of its neighbours.
    pub fn priority(g: &CompatibilityGraph, lists: Vec<Vec<u8>>) -> Result<Self> {
        if lists.len() != g.n() {
            return Err(Error::InvalidPolicy(format!(
                "{} priority lists given for {} classes",
                lists.len(),
                g.n()
            )));
        }
        let mut out = Vec::with_capacity(lists.len());
        for (k, list) in lists.into_iter().enumerate() {
            check_permutation(g, k as u8 + 1, &list)?;
            out.push(PreferenceList::from_vec(list));
        }
        Ok(Policy {
            kind: PolicyKind::Priority,
            priority: Some(out),
        })
    }

    /// Priority policy preferring lower classes.
    pub fn priority_ascending(g: &CompatibilityGraph) -> Self {
        let lists = (1..=g.n() as u8).map(|v| g.neighbors(v).to_vec()).collect();
        Policy::priority(g, lists).unwrap()
    }

    /// Priority policy preferring higher classes.
    pub fn priority_descending(g: &CompatibilityGraph) -> Self {
        let lists = (1..=g.n() as u8)
            .map(|v| {
                let mut l = g.neighbors(v).to_vec();
                l.reverse();
                l
            })
            .collect();
        Policy::priority(g, lists).unwrap()
    }

    /// Every priority policy on `g`, in lexicographic order of the lists.
    pub fn all_priorities(g: &CompatibilityGraph) -> impl Iterator<Item = Policy> + '_ {
        (1..=g.n() as u8)
            .map(|v| {
                enumerate_preferences(g, v)
                    .into_iter()
                    .map(|p| p.to_vec())
                    .collect::<Vec<_>>()
            })
            .multi_cartesian_product()
            .map(move |lists| Policy::priority(g, lists).unwrap())
    }

    /// Parses `fcfm`, `lcfm`, `ml`, `ms`, `uniform`, `priority` (ascending
    /// lists), `priority:desc`, or `priority:L1;L2;..;Ln` with each `Lk` a
    /// comma-separated list of the neighbours of class `k`.
    pub fn parse(g: &CompatibilityGraph, text: &str) -> Result<Self> {
        let t = text.trim().to_ascii_lowercase();
        let (head, tail) = match t.split_once(':') {
            Some((h, rest)) => (h.to_string(), Some(rest.to_string())),
            None => (t.clone(), None),
        };
        let kind = match head.as_str() {
            "fcfm" => PolicyKind::Fcfm,
            "lcfm" => PolicyKind::Lcfm,
            "ml" => PolicyKind::Ml,
            "ms" => PolicyKind::Ms,
            "uniform" | "u" | "random" => PolicyKind::Uniform,
            "priority" | "prio" => PolicyKind::Priority,
            _ => return Err(Error::InvalidPolicy(format!("unknown policy `{text}`"))),
        };
        if kind != PolicyKind::Priority {
            if tail.is_some() {
                return Err(Error::InvalidPolicy(format!("`{head}` takes no arguments")));
            }
            return Policy::simple(kind);
        }
        match tail.as_deref() {
            None | Some("asc") => Ok(Policy::priority_ascending(g)),
            Some("desc") => Ok(Policy::priority_descending(g)),
            Some(spec) => {
                let lists = spec
                    .split(';')
                    .map(|part| {
                        part.split(',')
                            .map(|tok| {
                                tok.trim()
                                    .parse::<u8>()
                                    .map_err(|e| Error::InvalidPolicy(format!("priority entry `{tok}`: {e}")))
                            })
                            .collect::<Result<Vec<u8>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Policy::priority(g, lists)
            }
        }
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn priority_list(&self, class: u8) -> Option<&[u8]> {
        self.priority.as_ref().map(|lists| lists[class as usize - 1].as_slice())
    }

    pub fn uses_preferences(&self) -> bool {
        self.kind.uses_preferences()
    }

    /// The class picked by a count-based policy, given the count of each
    /// class. `None` when no neighbour of `v` is present.
    #[inline]
    pub fn select_class(&self, g: &CompatibilityGraph, v: u8, pref: &[u8], count: impl Fn(u8) -> u32) -> Option<u8> {
        let nb = g.neighbors(v);
        match self.kind {
            PolicyKind::Priority => self.priority_list(v).unwrap().iter().copied().find(|&k| count(k) > 0),
            PolicyKind::Uniform => pref.iter().copied().find(|&k| count(k) > 0),
            PolicyKind::Ml => {
                let best = nb.iter().map(&count).max().unwrap_or(0);
                (best > 0)
                    .then(|| pref.iter().copied().find(|&k| count(k) == best))
                    .flatten()
            }
            PolicyKind::Ms => {
                let best = nb.iter().map(&count).filter(|&c| c > 0).min()?;
                pref.iter().copied().find(|&k| count(k) == best)
            }
            PolicyKind::Fcfm | PolicyKind::Lcfm => None,
        }
    }

    /// Position of the buffered item matched by an arrival of class `v`, or
    /// `None` if it is stored. The queue must be admissible and `pref` a
    /// permutation of `E(v)` (ignored by policies that do not use it).
    #[inline]
    pub fn select(&self, g: &CompatibilityGraph, queue: &[u8], v: u8, pref: &[u8]) -> Option<usize> {
        let nb = g.neighbors(v);
        match self.kind {
            PolicyKind::Fcfm => queue.iter().position(|&c| nb.contains(c)),
            PolicyKind::Lcfm => queue.iter().rposition(|&c| nb.contains(c)),
            _ => {
                let mut counts = [0u32; 32];
                let mut any = false;
                for &c in queue {
                    if nb.contains(c) {
                        counts[c as usize] += 1;
                        any = true;
                    }
                }
                if !any {
                    return None;
                }
                let k = self.select_class(g, v, pref, |k| counts[k as usize])?;
                queue.iter().position(|&c| c == k)
            }
        }
    }

    /// Applies one arrival in place; returns the matched position.
    #[inline]
    pub fn step(&self, g: &CompatibilityGraph, queue: &mut Word, v: u8, pref: &[u8]) -> Option<usize> {
        match self.select(g, queue.letters(), v, pref) {
            Some(pos) => {
                queue.remove(pos);
                Some(pos)
            }
            None => {
                queue.push(v);
                None
            }
        }
    }

    /// The classes this policy may match with an arrival of class `v` as the
    /// preference list ranges over all permutations of `E(v)`, given counts.
    pub fn candidate_classes(&self, g: &CompatibilityGraph, v: u8, count: impl Fn(u8) -> u32) -> ClassSet {
        let present: ClassSet = g.neighbors(v).iter().filter(|&k| count(k) > 0).collect();
        if present.is_empty() {
            return present;
        }
        match self.kind {
            PolicyKind::Uniform => present,
            PolicyKind::Ml => {
                let best = present.iter().map(&count).max().unwrap();
                present.iter().filter(|&k| count(k) == best).collect()
            }
            PolicyKind::Ms => {
                let best = present.iter().map(&count).min().unwrap();
                present.iter().filter(|&k| count(k) == best).collect()
            }
            PolicyKind::Priority => self.select_class(g, v, &[], &count).into_iter().collect(),
            PolicyKind::Fcfm | PolicyKind::Lcfm => present,
        }
    }

    /// Every distinct outcome of an arrival of class `v` on `queue` over the
    /// support of the preference distribution, each with a preference list
    /// realizing it. Outcomes are the matched position (or `None`).
    pub fn branches(
        &self,
        g: &CompatibilityGraph,
        queue: &[u8],
        v: u8,
    ) -> SmallVec<[(Option<usize>, PreferenceList); 4]> {
        let mut out = SmallVec::new();
        if !self.uses_preferences() {
            let pref = ascending_pref(g, v);
            out.push((self.select(g, queue, v, &pref), pref));
            return out;
        }
        let nb = g.neighbors(v);
        let mut counts = [0u32; 32];
        for &c in queue {
            if nb.contains(c) {
                counts[c as usize] += 1;
            }
        }
        let cands = self.candidate_classes(g, v, |k| counts[k as usize]);
        if cands.is_empty() {
            out.push((None, ascending_pref(g, v)));
            return out;
        }
        for k in cands.iter() {
            let pref = pref_with_first(g, v, k);
            out.push((queue.iter().position(|&c| c == k), pref));
        }
        out
    }

    /// Joint outcomes of the same arrival (same preference list) on two
    /// queues, each with a preference list realizing it.
    pub fn joint_branches(&self, g: &CompatibilityGraph, qa: &[u8], qb: &[u8], v: u8) -> SmallVec<[JointBranch; 4]> {
        let mut out = SmallVec::new();
        if !self.uses_preferences() {
            let pref = ascending_pref(g, v);
            out.push((self.select(g, qa, v, &pref), self.select(g, qb, v, &pref), pref));
            return out;
        }
        let count = |q: &[u8]| {
            let mut counts = [0u32; 32];
            for &c in q {
                counts[c as usize] += 1;
            }
            counts
        };
        let (ca, cb) = (count(qa), count(qb));
        let union = self
            .candidate_classes(g, v, |k| ca[k as usize])
            .union(self.candidate_classes(g, v, |k| cb[k as usize]));
        if union.len() <= 1 {
            let pref = match union.iter().next() {
                Some(k) => pref_with_first(g, v, k),
                None => ascending_pref(g, v),
            };
            out.push((self.select(g, qa, v, &pref), self.select(g, qb, v, &pref), pref));
            return out;
        }
        let members = union.to_vec();
        let rest: Vec<u8> = g.neighbors(v).iter().filter(|k| !union.contains(*k)).collect();
        for perm in members.iter().copied().permutations(members.len()) {
            let mut pref = PreferenceList::from_vec(perm);
            pref.extend_from_slice(&rest);
            let outcome = (self.select(g, qa, v, &pref), self.select(g, qb, v, &pref));
            if !out.iter().any(|(a, b, _)| (*a, *b) == outcome) {
                out.push((outcome.0, outcome.1, pref));
            }
        }
        out
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.priority {
            None => f.write_str(self.kind.name()),
            Some(lists) => {
                let parts: Vec<String> = lists.iter().map(|l| l.iter().join(",")).collect();
                write!(f, "priority:{}", parts.join(";"))
            }
        }
    }
}

/// Errors unless `list` is a permutation of `E(v)`.
pub fn check_permutation(g: &CompatibilityGraph, v: u8, list: &[u8]) -> Result<()> {
    let set: ClassSet = list.iter().copied().collect();
    if set.len() != list.len() || set != g.neighbors(v) {
        return Err(Error::InvalidPreference {
            class: v,
            reason: format!(
                "{} is not a permutation of the neighbours {}",
                list.iter().join(","),
                g.neighbors(v)
            ),
        });
    }
    Ok(())
}

/// Neighbours of `v` in ascending order.
pub fn ascending_pref(g: &CompatibilityGraph, v: u8) -> PreferenceList {
    g.neighbors(v).iter().collect()
}

/// `k` first, then the other neighbours of `v` in ascending order.
pub fn pref_with_first(g: &CompatibilityGraph, v: u8, k: u8) -> PreferenceList {
    let mut pref = PreferenceList::new();
    pref.push(k);
    pref.extend(g.neighbors(v).iter().filter(|&c| c != k));
    pref
}

/// All `|E(v)|!` preference lists of class `v`, in lexicographic order.
pub fn enumerate_preferences(g: &CompatibilityGraph, v: u8) -> Vec<PreferenceList> {
    let nb = g.neighbors(v).to_vec();
    nb.iter()
        .copied()
        .permutations(nb.len())
        .map(PreferenceList::from_vec)
        .collect()
}

/// A uniformly random preference list of class `v`.
pub fn draw_preference<R: Rng + ?Sized>(g: &CompatibilityGraph, v: u8, rng: &mut R) -> PreferenceList {
    let mut pref = ascending_pref(g, v);
    pref.shuffle(rng);
    pref
}

/// Result of a single arrival on a queue detail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrivalOutcome {
    pub queue: QueueDetail,
    pub matched_index: Option<usize>,
}

fn resolve_pref<R: Rng + ?Sized>(
    g: &CompatibilityGraph,
    policy: &Policy,
    e: &ArrivalEvent,
    rng: &mut R,
) -> Result<PreferenceList> {
    match &e.pref {
        Some(p) => {
            check_permutation(g, e.class, p)?;
            Ok(p.clone())
        }
        None if policy.uses_preferences() => Ok(draw_preference(g, e.class, rng)),
        None => Ok(ascending_pref(g, e.class)),
    }
}

/// `q ⊙ (v, σ)`: the arrival is matched according to the policy, or stored
/// at the end of the queue. The preference list of `e` is used when present;
/// otherwise one is drawn from `rng` if the policy needs it.
pub fn apply_arrival<R: Rng + ?Sized>(
    g: &CompatibilityGraph,
    policy: &Policy,
    q: &QueueDetail,
    e: &ArrivalEvent,
    rng: &mut R,
) -> Result<ArrivalOutcome> {
    g.check_class(e.class as usize)?;
    if !is_admissible(g, q) {
        return Err(Error::InadmissibleState(q.clone()));
    }
    let pref = resolve_pref(g, policy, e, rng)?;
    let mut queue = q.clone();
    let matched_index = policy.step(g, &mut queue, e.class, &pref);
    Ok(ArrivalOutcome { queue, matched_index })
}

/// `x ⊙ (v, σ)` on class details, for count-based policies.
pub fn apply_class<R: Rng + ?Sized>(
    g: &CompatibilityGraph,
    policy: &Policy,
    x: &ClassDetail,
    e: &ArrivalEvent,
    rng: &mut R,
) -> Result<ClassDetail> {
    if !policy.kind().is_class_admissible() {
        return Err(Error::PolicyNotClassAdmissible(policy.kind()));
    }
    let v = g.check_class(e.class as usize)?;
    if !x.is_admissible(g) {
        return Err(Error::InvalidPolicy(format!("inadmissible class detail {x}")));
    }
    let pref = resolve_pref(g, policy, e, rng)?;
    Ok(step_class(g, policy, x, v, &pref))
}

/// Unchecked class-detail step.
#[inline]
pub fn step_class(g: &CompatibilityGraph, policy: &Policy, x: &ClassDetail, v: u8, pref: &[u8]) -> ClassDetail {
    let mut y = x.clone();
    match policy.select_class(g, v, pref, |k| x.get(k)) {
        Some(k) => y.set(k, x.get(k) - 1),
        None => y.set(v, x.get(v) + 1),
    }
    y
}

/// The matching of an initial buffer followed by a word. Items are indexed
/// in order: the initial buffer first, then the arrivals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingTrace {
    pub items: Vec<u8>,
    pub initial_len: usize,
    /// Matched index pairs `(earlier, later)`, in the order the matches occur.
    pub edges: Vec<(usize, usize)>,
    pub leftover: QueueDetail,
    /// Indices of the unmatched items, in arrival order.
    pub leftover_indices: Vec<usize>,
}

impl MatchingTrace {
    pub fn empty() -> Self {
        MatchingTrace {
            items: Vec::new(),
            initial_len: 0,
            edges: Vec::new(),
            leftover: Word::new(),
            leftover_indices: Vec::new(),
        }
    }

    /// `partner[i]` is the index matched with item `i`.
    pub fn partners(&self) -> Vec<Option<usize>> {
        let mut p = vec![None; self.items.len()];
        for &(a, b) in &self.edges {
            p[a] = Some(b);
            p[b] = Some(a);
        }
        p
    }

    /// Every index in at most one edge, matched pairs compatible, and the
    /// leftover equal to the unmatched items in order.
    pub fn is_consistent(&self, g: &CompatibilityGraph) -> bool {
        let mut seen = vec![false; self.items.len()];
        for &(a, b) in &self.edges {
            if a >= self.items.len() || b >= self.items.len() || seen[a] || seen[b] {
                return false;
            }
            seen[a] = true;
            seen[b] = true;
            if !g.adjacent(self.items[a], self.items[b]) {
                return false;
            }
        }
        let unmatched: Vec<usize> = (0..self.items.len()).filter(|&i| !seen[i]).collect();
        let letters: Vec<u8> = unmatched.iter().map(|&i| self.items[i]).collect();
        unmatched == self.leftover_indices && letters == self.leftover.letters()
    }

    /// One `t class matched_with|-` line per item, then `leftover <word>`.
    pub fn dump(&self) -> String {
        let partners = self.partners();
        let mut s = String::new();
        for (t, (&c, p)) in self.items.iter().zip(&partners).enumerate() {
            match p {
                Some(m) => s.push_str(&format!("{t} {c} {m}\n")),
                None => s.push_str(&format!("{t} {c} -\n")),
            }
        }
        s.push_str(&format!("leftover {}\n", self.leftover));
        s
    }
}

/// Folds [`apply_arrival`] over `z` starting from `initial`. Preference
/// lists come from `prefs` (one per letter) when given, else from `rng` when
/// the policy needs them.
pub fn run_word<R: Rng + ?Sized>(
    g: &CompatibilityGraph,
    policy: &Policy,
    initial: &QueueDetail,
    z: &Word,
    prefs: Option<&[PreferenceList]>,
    rng: &mut R,
) -> Result<MatchingTrace> {
    if !is_admissible(g, initial) {
        return Err(Error::InadmissibleState(initial.clone()));
    }
    z.check_range(g.n())?;
    if let Some(p) = prefs {
        if p.len() != z.len() {
            return Err(Error::DimensionMismatch(p.len(), z.len()));
        }
    }
    let mut items: Vec<u8> = initial.letters().to_vec();
    let mut queue = initial.clone();
    let mut ids: Vec<usize> = (0..initial.len()).collect();
    let mut edges = Vec::new();
    for (k, &v) in z.letters().iter().enumerate() {
        let pref = match prefs {
            Some(p) => {
                check_permutation(g, v, &p[k])?;
                p[k].clone()
            }
            None if policy.uses_preferences() => draw_preference(g, v, rng),
            None => ascending_pref(g, v),
        };
        let idx = items.len();
        items.push(v);
        match policy.step(g, &mut queue, v, &pref) {
            Some(pos) => edges.push((ids.remove(pos), idx)),
            None => ids.push(idx),
        }
    }
    Ok(MatchingTrace {
        items,
        initial_len: initial.len(),
        edges,
        leftover: queue,
        leftover_indices: ids,
    })
}

/// `W(initial · z)` for explicit preference lists (`prefs` may be empty for
/// policies that ignore them).
pub fn leftover_with(
    g: &CompatibilityGraph,
    policy: &Policy,
    initial: &QueueDetail,
    z: &Word,
    prefs: &[PreferenceList],
) -> Result<Word> {
    let prefs = if prefs.is_empty() && !policy.uses_preferences() {
        None
    } else {
        Some(prefs)
    };
    let mut rng = rand::rngs::mock::StepRng::new(0, 1);
    run_word(g, policy, initial, z, prefs, &mut rng).map(|t| t.leftover)
}

/// Every leftover `W(initial · z)` reachable over all preference lists, in
/// sorted order.
pub fn reachable_leftovers(g: &CompatibilityGraph, policy: &Policy, initial: &QueueDetail, z: &Word) -> Vec<Word> {
    let mut states = vec![initial.clone()];
    for &v in z.letters() {
        let mut next: Vec<Word> = Vec::with_capacity(states.len());
        for s in &states {
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
        next.sort();
        next.dedup();
        states = next;
    }
    states
}
