//! Bounded exhaustive checks of non-expansiveness and sub-additivity, with
//! replayable counterexamples.
//!
//! Preference lists are never enumerated blindly: at each arrival only the
//! orderings that can change the outcome are branched on (see
//! [`Policy::branches`] and [`Policy::joint_branches`]), which keeps the
//! exhaustive searches polynomial in the number of reachable states.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::CompatibilityGraph;
use crate::policy::{draw_preference, enumerate_preferences, leftover_with, Policy, PolicyKind, PreferenceList};
use crate::words::{enumerate_class_details, ClassDetail, Word};

/// At most this many violations are kept in a report; the count is exact.
pub const MAX_RECORDED_VIOLATIONS: usize = 100_000;

/// Cap on the joint states explored by the exhaustive sub-additivity search.
pub const DEFAULT_MAX_STATES: usize = 30_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Property {
    NonExpansive,
    SubAdditive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    HoldsOnDomain,
    Violated,
}

/// A concrete counterexample that can be replayed through the policy engine.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Witness {
    /// `‖x' ⊙ (v,σ) − x ⊙ (v,σ)‖ = lhs > rhs = ‖x' − x‖`.
    NonExpansive {
        x: ClassDetail,
        x_prime: ClassDetail,
        v: u8,
        pref: Vec<u8>,
        lhs: u64,
        rhs: u64,
    },
    /// `|W(z'z'')| = joint > left + right = |W(z')| + |W(z'')|`, with the
    /// preference lists of `z''` shared by both runs.
    SubAdditive {
        z1: Word,
        z2: Word,
        prefs1: Vec<Vec<u8>>,
        prefs2: Vec<Vec<u8>>,
        joint: usize,
        left: usize,
        right: usize,
    },
}

impl Witness {
    /// Re-runs the witness and checks it reproduces the recorded values and
    /// is a violation.
    pub fn replay(&self, g: &CompatibilityGraph, policy: &Policy) -> Result<bool> {
        match self {
            Witness::NonExpansive {
                x,
                x_prime,
                v,
                pref,
                lhs,
                rhs,
            } => {
                let a = crate::policy::step_class(g, policy, x, *v, pref);
                let b = crate::policy::step_class(g, policy, x_prime, *v, pref);
                let l = a.l1_distance(&b);
                let r = x.l1_distance(x_prime);
                Ok(l == *lhs && r == *rhs && l > r)
            }
            Witness::SubAdditive {
                z1,
                z2,
                prefs1,
                prefs2,
                joint,
                left,
                right,
            } => {
                let p1: Vec<PreferenceList> = prefs1.iter().map(|p| PreferenceList::from_slice(p)).collect();
                let p2: Vec<PreferenceList> = prefs2.iter().map(|p| PreferenceList::from_slice(p)).collect();
                let mut p12 = p1.clone();
                p12.extend(p2.iter().cloned());
                let empty = Word::new();
                let j = leftover_with(g, policy, &empty, &z1.concat(z2), &p12)?.len();
                let l = leftover_with(g, policy, &empty, z1, &p1)?.len();
                let r = leftover_with(g, policy, &empty, z2, &p2)?.len();
                Ok(j == *joint && l == *left && r == *right && j > l + r)
            }
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::NonExpansive {
                x,
                x_prime,
                v,
                pref,
                lhs,
                rhs,
            } => write!(
                f,
                "x={x} x'={x_prime} v={v} sigma={} norms {lhs} > {rhs}",
                fmt_list(pref)
            ),
            Witness::SubAdditive {
                z1,
                z2,
                prefs1,
                prefs2,
                joint,
                left,
                right,
            } => write!(
                f,
                "z'={z1} z''={z2} sigma'={} sigma''={} sizes {joint} > {left}+{right}",
                fmt_prefs(prefs1),
                fmt_prefs(prefs2)
            ),
        }
    }
}

fn fmt_list(p: &[u8]) -> String {
    p.iter().map(u8::to_string).collect::<Vec<_>>().join(",")
}

fn fmt_prefs(prefs: &[Vec<u8>]) -> String {
    if prefs.is_empty() {
        return "-".into();
    }
    prefs.iter().map(|p| fmt_list(p)).collect::<Vec<_>>().join("/")
}

/// Outcome of a bounded property check.
#[derive(Clone, Debug, Serialize)]
pub struct PropertyReport {
    pub property: Property,
    pub policy: String,
    pub verdict: Verdict,
    /// First violation in the canonical search order.
    pub witness: Option<Witness>,
    /// Up to [`MAX_RECORDED_VIOLATIONS`] violations, in search order.
    pub violations: Vec<Witness>,
    pub violation_count: u64,
    pub domain: String,
    pub cases_checked: u64,
}

impl PropertyReport {
    fn new(
        property: Property,
        policy: &Policy,
        domain: String,
        violations: Vec<Witness>,
        violation_count: u64,
        cases_checked: u64,
    ) -> Self {
        PropertyReport {
            property,
            policy: policy.to_string(),
            verdict: if violation_count == 0 {
                Verdict::HoldsOnDomain
            } else {
                Verdict::Violated
            },
            witness: violations.first().cloned(),
            violations,
            violation_count,
            domain,
            cases_checked,
        }
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::HoldsOnDomain
    }
}

fn preference_support(g: &CompatibilityGraph, policy: &Policy, v: u8) -> Result<Vec<PreferenceList>> {
    if policy.uses_preferences() {
        if g.degree(v) > 8 {
            return Err(Error::DomainTooLarge(format!(
                "class {v} has {} neighbours; preference enumeration capped at 8",
                g.degree(v)
            )));
        }
        Ok(enumerate_preferences(g, v))
    } else {
        Ok(vec![crate::policy::ascending_pref(g, v)])
    }
}

/// Checks `‖x'⊙(v,σ) − x⊙(v,σ)‖ ≤ ‖x' − x‖` for every ordered pair of
/// admissible class details with entries at most `max_count`, every class
/// `v` and every preference list the policy can draw.
pub fn check_nonexpansive(g: &CompatibilityGraph, policy: &Policy, max_count: u32) -> Result<PropertyReport> {
    if !policy.kind().is_class_admissible() {
        return Err(Error::PolicyNotClassAdmissible(policy.kind()));
    }
    let states = enumerate_class_details(g, max_count);
    let prefs: Vec<Vec<PreferenceList>> = (1..=g.n() as u8)
        .map(|v| preference_support(g, policy, v))
        .collect::<Result<_>>()?;
    // image[s][v-1][p]
    let image: Vec<Vec<Vec<ClassDetail>>> = states
        .par_iter()
        .map(|x| {
            (1..=g.n() as u8)
                .map(|v| {
                    prefs[v as usize - 1]
                        .iter()
                        .map(|p| crate::policy::step_class(g, policy, x, v, p))
                        .collect()
                })
                .collect()
        })
        .collect();
    let per_row: Vec<(Vec<Witness>, u64, u64)> = (0..states.len())
        .into_par_iter()
        .map(|i| {
            let mut found = Vec::new();
            let mut count = 0u64;
            let mut checked = 0u64;
            for j in 0..states.len() {
                if i == j {
                    continue;
                }
                let rhs = states[i].l1_distance(&states[j]);
                for v in 1..=g.n() as u8 {
                    for (k, p) in prefs[v as usize - 1].iter().enumerate() {
                        checked += 1;
                        let lhs = image[i][v as usize - 1][k].l1_distance(&image[j][v as usize - 1][k]);
                        if lhs > rhs {
                            count += 1;
                            if found.len() < MAX_RECORDED_VIOLATIONS {
                                found.push(Witness::NonExpansive {
                                    x: states[i].clone(),
                                    x_prime: states[j].clone(),
                                    v,
                                    pref: p.to_vec(),
                                    lhs,
                                    rhs,
                                });
                            }
                        }
                    }
                }
            }
            (found, count, checked)
        })
        .collect();
    let mut violations = Vec::new();
    let (mut count, mut checked) = (0, 0);
    for (found, c, k) in per_row {
        count += c;
        checked += k;
        let room = MAX_RECORDED_VIOLATIONS - violations.len();
        violations.extend(found.into_iter().take(room));
    }
    let domain = format!(
        "{} class details with entries <= {max_count}, all arrivals, {} preference lists",
        states.len(),
        if policy.uses_preferences() { "all" } else { "fixed" }
    );
    Ok(PropertyReport::new(
        Property::NonExpansive,
        policy,
        domain,
        violations,
        count,
        checked,
    ))
}

/// Non-expansiveness of every priority policy at once. The inequality only
/// involves the list of the arriving class, and a priority policy with list
/// `L` at class `v` acts exactly like the uniform policy with `σ(v) = L`, so
/// the check ranges over all lists of every class.
pub fn check_nonexpansive_all_priorities(g: &CompatibilityGraph, max_count: u32) -> Result<PropertyReport> {
    let mut report = check_nonexpansive(g, &Policy::uniform(), max_count)?;
    report.policy = "priority:*".into();
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    /// Every word pair and every preference assignment.
    Exhaustive,
    /// Random word pairs with shared random preference draws.
    Sampled { draws: usize },
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Triple {
    a_len: u8,
    x: Word,
    y: Word,
}

enum Origin {
    Source(Word),
    Step { prev: Triple, v: u8, pref: PreferenceList },
}

/// Checks `|W(z'z'')| ≤ |W(z')| + |W(z'')|` over word pairs with
/// `|z'| + |z''| ≤ max_len`.
///
/// The exhaustive mode is a breadth-first search: first over the buffers
/// `a = W(z')` reachable from the empty buffer, then over joint states
/// `(|a|, W(a z''), W(z''))` where both runs of `z''` share its preference
/// lists. A joint state reached at total length `d ≤ max_len` with
/// `|W(a z'')| > |a| + |W(z'')|` is a violation. Each recorded violation is
/// reconstructed into an explicit word pair with preference lists.
pub fn check_subadditive<R: Rng + ?Sized>(
    g: &CompatibilityGraph,
    policy: &Policy,
    max_len: usize,
    mode: SearchMode,
    rng: &mut R,
) -> Result<PropertyReport> {
    match mode {
        SearchMode::Exhaustive => check_subadditive_exhaustive(g, policy, max_len, DEFAULT_MAX_STATES),
        SearchMode::Sampled { draws } => check_subadditive_sampled(g, policy, max_len, draws, rng),
    }
}

type Parents = HashMap<Word, Option<(Word, u8, PreferenceList)>>;

fn apply_branch(q: &Word, pos: Option<usize>, v: u8) -> Word {
    let mut t = q.clone();
    match pos {
        Some(p) => {
            t.remove(p);
        }
        None => t.push(v),
    }
    t
}

pub fn check_subadditive_exhaustive(
    g: &CompatibilityGraph,
    policy: &Policy,
    max_len: usize,
    max_states: usize,
) -> Result<PropertyReport> {
    let n = g.n() as u8;
    // buffers reachable from the empty buffer, by minimal word length
    let mut parents: Parents = HashMap::new();
    parents.insert(Word::new(), None);
    let mut layers: Vec<Vec<Word>> = vec![vec![Word::new()]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in layers.last().unwrap() {
            for v in 1..=n {
                for (pos, pref) in policy.branches(g, s.letters(), v) {
                    let t = apply_branch(s, pos, v);
                    if !parents.contains_key(&t) {
                        parents.insert(t.clone(), Some((s.clone(), v, pref)));
                        next.push(t);
                    }
                }
            }
        }
        if parents.len() > max_states {
            return Err(Error::DomainTooLarge(format!(
                "more than {max_states} reachable buffers"
            )));
        }
        layers.push(next);
    }

    let mut origin: HashMap<Triple, Origin> = HashMap::new();
    let mut frontier: Vec<Triple> = Vec::new();
    let mut violations = Vec::new();
    let mut count = 0u64;
    for (d, layer) in layers.iter().enumerate() {
        // sources entering at total length d
        for a in layer {
            let t = Triple {
                a_len: a.len() as u8,
                x: a.clone(),
                y: Word::new(),
            };
            if !origin.contains_key(&t) {
                origin.insert(t.clone(), Origin::Source(a.clone()));
                frontier.push(t);
            }
        }
        for t in &frontier {
            if t.x.len() > t.a_len as usize + t.y.len() {
                count += 1;
                if violations.len() < MAX_RECORDED_VIOLATIONS {
                    violations.push(reconstruct(g, policy, t, &origin, &parents)?);
                }
            }
        }
        if d == max_len {
            break;
        }
        let mut next = Vec::new();
        for t in &frontier {
            for v in 1..=n {
                for (px, py, pref) in policy.joint_branches(g, t.x.letters(), t.y.letters(), v) {
                    let u = Triple {
                        a_len: t.a_len,
                        x: apply_branch(&t.x, px, v),
                        y: apply_branch(&t.y, py, v),
                    };
                    if !origin.contains_key(&u) {
                        origin.insert(
                            u.clone(),
                            Origin::Step {
                                prev: t.clone(),
                                v,
                                pref,
                            },
                        );
                        next.push(u);
                    }
                }
            }
        }
        if origin.len() > max_states {
            return Err(Error::DomainTooLarge(format!(
                "more than {max_states} joint states within length {max_len}"
            )));
        }
        frontier = next;
    }
    let domain = format!(
        "all word pairs with |z'|+|z''| <= {max_len}, all preference assignments ({} joint states)",
        origin.len()
    );
    let checked = origin.len() as u64;
    Ok(PropertyReport::new(
        Property::SubAdditive,
        policy,
        domain,
        violations,
        count,
        checked,
    ))
}

fn reconstruct(
    g: &CompatibilityGraph,
    policy: &Policy,
    t: &Triple,
    origin: &HashMap<Triple, Origin>,
    parents: &Parents,
) -> Result<Witness> {
    let mut z2 = Vec::new();
    let mut prefs2 = Vec::new();
    let mut cur = t.clone();
    let a = loop {
        match &origin[&cur] {
            Origin::Source(a) => break a.clone(),
            Origin::Step { prev, v, pref } => {
                z2.push(*v);
                prefs2.push(pref.to_vec());
                cur = prev.clone();
            }
        }
    };
    z2.reverse();
    prefs2.reverse();
    let mut z1 = Vec::new();
    let mut prefs1 = Vec::new();
    let mut cur = a;
    while let Some(Some((prev, v, pref))) = parents.get(&cur) {
        z1.push(*v);
        prefs1.push(pref.to_vec());
        cur = prev.clone();
    }
    z1.reverse();
    prefs1.reverse();
    let (z1, z2) = (Word::from_slice(&z1), Word::from_slice(&z2));
    let sizes = pair_sizes(g, policy, &z1, &z2, &prefs1, &prefs2)?;
    Ok(Witness::SubAdditive {
        z1,
        z2,
        prefs1: strip(policy, prefs1),
        prefs2: strip(policy, prefs2),
        joint: sizes.0,
        left: sizes.1,
        right: sizes.2,
    })
}

fn strip(policy: &Policy, prefs: Vec<Vec<u8>>) -> Vec<Vec<u8>> {
    if policy.uses_preferences() {
        prefs
    } else {
        Vec::new()
    }
}

fn pair_sizes(
    g: &CompatibilityGraph,
    policy: &Policy,
    z1: &Word,
    z2: &Word,
    prefs1: &[Vec<u8>],
    prefs2: &[Vec<u8>],
) -> Result<(usize, usize, usize)> {
    let p1: Vec<PreferenceList> = prefs1.iter().map(|p| PreferenceList::from_slice(p)).collect();
    let p2: Vec<PreferenceList> = prefs2.iter().map(|p| PreferenceList::from_slice(p)).collect();
    let mut p12 = p1.clone();
    p12.extend(p2.iter().cloned());
    let e = Word::new();
    Ok((
        leftover_with(g, policy, &e, &z1.concat(z2), &p12)?.len(),
        leftover_with(g, policy, &e, z1, &p1)?.len(),
        leftover_with(g, policy, &e, z2, &p2)?.len(),
    ))
}

/// Every distinct `(|W(z'z'')|, |W(z')|, |W(z'')|)` over all preference
/// assignments for one fixed word pair (lists of `z''` shared), sorted.
pub fn evaluate_pair(
    g: &CompatibilityGraph,
    policy: &Policy,
    z1: &Word,
    z2: &Word,
) -> Result<Vec<(usize, usize, usize)>> {
    z1.check_range(g.n())?;
    z2.check_range(g.n())?;
    let firsts = crate::policy::reachable_leftovers(g, policy, &Word::new(), z1);
    let mut out = Vec::new();
    for a in firsts {
        let mut pairs = vec![(a.clone(), Word::new())];
        for &v in z2.letters() {
            let mut next = Vec::new();
            for (x, y) in &pairs {
                for (px, py, _) in policy.joint_branches(g, x.letters(), y.letters(), v) {
                    next.push((apply_branch(x, px, v), apply_branch(y, py, v)));
                }
            }
            next.sort();
            next.dedup();
            pairs = next;
        }
        for (x, y) in pairs {
            out.push((x.len(), a.len(), y.len()));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn check_subadditive_sampled<R: Rng + ?Sized>(
    g: &CompatibilityGraph,
    policy: &Policy,
    max_len: usize,
    draws: usize,
    rng: &mut R,
) -> Result<PropertyReport> {
    let n = g.n() as u8;
    let mut violations = Vec::new();
    let mut count = 0u64;
    for _ in 0..draws {
        let total = rng.gen_range(0..=max_len);
        let split = rng.gen_range(0..=total);
        let letters: Vec<u8> = (0..total).map(|_| rng.gen_range(1..=n)).collect();
        let prefs: Vec<Vec<u8>> = letters.iter().map(|&v| draw_preference(g, v, rng).to_vec()).collect();
        let z1 = Word::from_slice(&letters[..split]);
        let z2 = Word::from_slice(&letters[split..]);
        let (p1, p2) = prefs.split_at(split);
        let (joint, left, right) = pair_sizes(g, policy, &z1, &z2, p1, p2)?;
        if joint > left + right {
            count += 1;
            if violations.len() < MAX_RECORDED_VIOLATIONS {
                violations.push(Witness::SubAdditive {
                    z1,
                    z2,
                    prefs1: strip(policy, p1.to_vec()),
                    prefs2: strip(policy, p2.to_vec()),
                    joint,
                    left,
                    right,
                });
            }
        }
    }
    let domain = format!("{draws} random word pairs with |z'|+|z''| <= {max_len}, shared preference draws");
    Ok(PropertyReport::new(
        Property::SubAdditive,
        policy,
        domain,
        violations,
        count,
        draws as u64,
    ))
}

/// Policies whose sub-additivity is established (all but MS).
pub fn is_known_subadditive(kind: PolicyKind) -> bool {
    kind != PolicyKind::Ms
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn ms_is_expansive_on_the_paw() {
        let paw = CompatibilityGraph::paw();
        let r = check_nonexpansive(&paw, &Policy::ms(), 2).unwrap();
        assert_eq!(r.verdict, Verdict::Violated);
        let x = ClassDetail::from_counts(&[2, 0, 1, 0]);
        let xp = ClassDetail::from_counts(&[1, 0, 2, 0]);
        let hits: Vec<_> = r
            .violations
            .iter()
            .filter(|wt| matches!(wt, Witness::NonExpansive { x: a, x_prime: b, v: 2, .. } if *a == x && *b == xp))
            .collect();
        // the violation does not depend on the preference list
        assert_eq!(hits.len(), 6);
        for h in hits {
            assert!(matches!(h, Witness::NonExpansive { lhs: 4, rhs: 2, .. }));
            assert!(h.replay(&paw, &Policy::ms()).unwrap());
        }
        assert!(r.violations.iter().all(|wt| wt.replay(&paw, &Policy::ms()).unwrap()));
    }

    #[test]
    fn ml_uniform_priority_are_nonexpansive_on_the_paw() {
        let paw = CompatibilityGraph::paw();
        for p in [Policy::ml(), Policy::uniform(), Policy::priority_ascending(&paw)] {
            let r = check_nonexpansive(&paw, &p, 2).unwrap();
            assert!(r.holds(), "{p}: {:?}", r.witness);
            assert!(r.witness.is_none());
        }
        assert!(check_nonexpansive_all_priorities(&paw, 2).unwrap().holds());
        assert_eq!(
            check_nonexpansive(&paw, &Policy::lcfm(), 2).unwrap_err(),
            Error::PolicyNotClassAdmissible(PolicyKind::Lcfm)
        );
    }

    #[test]
    fn ms_is_not_subadditive_on_the_paw() {
        let paw = CompatibilityGraph::paw();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = check_subadditive(&paw, &Policy::ms(), 8, SearchMode::Exhaustive, &mut rng).unwrap();
        assert_eq!(r.verdict, Verdict::Violated);
        assert!(r.violations.iter().all(|wt| wt.replay(&paw, &Policy::ms()).unwrap()));
        assert_eq!(
            evaluate_pair(&paw, &Policy::ms(), &w("11"), &w("133224")).unwrap(),
            vec![(4, 2, 0)]
        );
    }

    #[test]
    fn fcfm_and_ml_are_subadditive_on_the_paw() {
        let paw = CompatibilityGraph::paw();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for (p, len) in [(Policy::fcfm(), 8), (Policy::lcfm(), 8), (Policy::ml(), 6)] {
            let r = check_subadditive(&paw, &p, len, SearchMode::Exhaustive, &mut rng).unwrap();
            assert!(r.holds(), "{p}: {:?}", r.witness);
        }
    }

    #[test]
    fn empty_prefix_never_violates() {
        let paw = CompatibilityGraph::paw();
        for z in ["133224", "1324", "22", "-"] {
            let out = evaluate_pair(&paw, &Policy::ms(), &Word::new(), &w(z)).unwrap();
            assert!(out.iter().all(|&(j, l, r)| j <= l + r));
        }
    }

    #[test]
    fn sampled_mode_finds_ms_violations() {
        let paw = CompatibilityGraph::paw();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = check_subadditive(&paw, &Policy::ms(), 8, SearchMode::Sampled { draws: 20_000 }, &mut rng).unwrap();
        assert_eq!(r.verdict, Verdict::Violated);
        assert!(r.violations.iter().all(|wt| wt.replay(&paw, &Policy::ms()).unwrap()));
        let r = check_subadditive(
            &paw,
            &Policy::fcfm(),
            8,
            SearchMode::Sampled { draws: 20_000 },
            &mut rng,
        )
        .unwrap();
        assert!(r.holds());
    }

    #[test]
    fn exhaustive_search_respects_state_cap() {
        let paw = CompatibilityGraph::paw();
        assert!(matches!(
            check_subadditive_exhaustive(&paw, &Policy::fcfm(), 8, 10),
            Err(Error::DomainTooLarge(_))
        ));
    }
}
