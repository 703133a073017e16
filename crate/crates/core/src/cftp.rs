//! Perfect sampling of the finite-buffer chain by coupling from the past:
//! scan the arrival stream backward until the last `2p` classes form a
//! strong erasing word, reset the buffer to `∅` right after that word and
//! replay forward to time 0.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::erasing::strong_erasing_failure;
use crate::error::{Error, Result};
use crate::finite_buffer::FiniteBufferChain;
use crate::policy::{ascending_pref, PreferenceList};
use crate::stream::{derive_seed, draw_event, ArrivalStream, ClassSampler, PairSource};
use crate::words::{enumerate_w2_bounded, Word};

pub const DEFAULT_DEPTH_LIMIT: u64 = 100_000_000;

const BITS: u32 = 5;

/// A set of strong erasing words of common length `2p`.
#[derive(Clone, Debug)]
pub struct Dictionary {
    words: Vec<Word>,
    half_len: usize,
    keys: HashSet<u128>,
}

fn key_of(letters: &[u8]) -> u128 {
    letters.iter().fold(0u128, |k, &c| (k << BITS) | c as u128)
}

impl Dictionary {
    /// Checks that every word is `2C`-strong erasing for the chain.
    pub fn certified(chain: &FiniteBufferChain, words: &[Word]) -> Result<Self> {
        let d = Dictionary::unchecked(words)?;
        for w in &d.words {
            if strong_erasing_failure(&chain.graph, &chain.policy, chain.capacity, w)?.is_some() {
                return Err(Error::UncertifiedWord(w.clone()));
            }
        }
        Ok(d)
    }

    /// Builds the lookup without checking the words.
    pub fn unchecked(words: &[Word]) -> Result<Self> {
        let first = words.first().ok_or(Error::EmptyDictionary)?;
        if words.iter().any(|w| w.len() != first.len()) {
            return Err(Error::MixedLengths);
        }
        if first.len() % 2 == 1 {
            return Err(Error::OddLength(first.clone()));
        }
        if first.is_empty() {
            return Err(Error::EmptyDictionary);
        }
        if first.len() * BITS as usize > 128 {
            return Err(Error::TooLarge(format!("dictionary words of length {}", first.len())));
        }
        if words.iter().flat_map(|w| w.letters()).any(|&c| c >= 1 << BITS) {
            return Err(Error::TooLarge("class label too large for the window key".into()));
        }
        let mut sorted = words.to_vec();
        sorted.sort();
        sorted.dedup();
        let keys = sorted.iter().map(|w| key_of(w.letters())).collect();
        Ok(Dictionary {
            half_len: first.len() / 2,
            words: sorted,
            keys,
        })
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    /// `p`, half the common word length.
    pub fn half_len(&self) -> usize {
        self.half_len
    }

    pub fn contains(&self, letters: &[u8]) -> bool {
        letters.len() == 2 * self.half_len && self.keys.contains(&key_of(letters))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CftpResult {
    pub sample: Word,
    /// `-i` for the window start `i` (in pairs) where the scan stopped.
    pub scan_depth: u64,
    /// Pair index at which the buffer was reset to `∅`.
    pub reset_time: i64,
}

/// One perfect sample, reading arrivals from `source`. Pair `t` consists
/// of the arrivals at times `2t` and `2t + 1`; the sample is the buffer at
/// pair index 0.
pub fn cftp_sample_from<S: PairSource>(
    chain: &FiniteBufferChain,
    dict: &Dictionary,
    source: &mut S,
    depth_limit: u64,
) -> Result<CftpResult> {
    let p = dict.half_len as i64;
    let width = 2 * p as u32 * BITS;
    let top = |c: u8, k: u32| (c as u128) << (width - BITS * k);
    let mask = if width == 128 { u128::MAX } else { (1u128 << width) - 1 };
    let mut i = -p;
    let mut key = 0u128;
    for n in 2 * i..0 {
        key = (key << BITS) | source.class(n) as u128;
    }
    while !dict.keys.contains(&key) {
        if (-i) as u64 >= depth_limit {
            return Err(Error::DepthLimit(depth_limit));
        }
        i -= 1;
        let a = source.class(2 * i);
        let b = source.class(2 * i + 1);
        key = ((key >> (2 * BITS)) | top(a, 1) | top(b, 2)) & mask;
    }
    let reset_time = i + p;
    let g = &chain.graph;
    let asc: Vec<PreferenceList> = (1..=g.n() as u8).map(|v| ascending_pref(g, v)).collect();
    let mut u = Word::new();
    for t in reset_time..0 {
        let e0 = source.event(2 * t).clone();
        let e1 = source.event(2 * t + 1);
        let p0 = e0.pref.as_deref().unwrap_or(&asc[e0.class as usize - 1]);
        let p1 = e1.pref.as_deref().unwrap_or(&asc[e1.class as usize - 1]);
        chain.step_pair(&mut u, e0.class, p0, e1.class, p1);
    }
    Ok(CftpResult {
        sample: u,
        scan_depth: (-i) as u64,
        reset_time,
    })
}

/// [`cftp_sample_from`] on the seeded stream.
pub fn cftp_sample(chain: &FiniteBufferChain, dict: &Dictionary, seed: u64, depth_limit: u64) -> Result<CftpResult> {
    let mut stream = ArrivalStream::new(&chain.graph, &chain.policy, &chain.mu, seed);
    cftp_sample_from(chain, dict, &mut stream, depth_limit)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloResult {
    pub states: Vec<Word>,
    pub counts: Vec<u64>,
    pub n_samples: usize,
    pub mean_scan_depth: f64,
    pub max_scan_depth: u64,
}

impl MonteCarloResult {
    pub fn histogram(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n_samples as f64).collect()
    }

    /// `state prob` lines in canonical order.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (w, p) in self.states.iter().zip(self.histogram()) {
            s.push_str(&format!("{w} {p}\n"));
        }
        s
    }
}

/// `n_samples` independent samples, replica `k` seeded with
/// `derive_seed(master_seed, k)`. The result does not depend on `workers`.
pub fn monte_carlo(
    chain: &FiniteBufferChain,
    dict: &Dictionary,
    n_samples: usize,
    master_seed: u64,
    workers: usize,
    depth_limit: u64,
) -> Result<MonteCarloResult> {
    if n_samples == 0 {
        return Err(Error::InvalidDistribution("n_samples must be at least 1".into()));
    }
    let states = chain.states()?;
    let index: HashMap<&Word, usize> = states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidPolicy(format!("thread pool: {e}")))?;
    let results: Vec<CftpResult> = pool.install(|| {
        (0..n_samples as u64)
            .into_par_iter()
            .map(|k| cftp_sample(chain, dict, derive_seed(master_seed, k), depth_limit))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut counts = vec![0u64; states.len()];
    let mut depth_sum = 0u128;
    let mut max_scan_depth = 0;
    for r in &results {
        counts[index[&r.sample]] += 1;
        depth_sum += r.scan_depth as u128;
        max_scan_depth = max_scan_depth.max(r.scan_depth);
    }
    Ok(MonteCarloResult {
        states: states.clone(),
        counts,
        n_samples,
        mean_scan_depth: depth_sum as f64 / n_samples as f64,
        max_scan_depth,
    })
}

/// Runs every state of `W_2(C)` through random segments made of a prefix of
/// 0 to 8 random pairs, a dictionary word, and a suffix of 0 to 8 random
/// pairs, with shared preference draws. All runs must be at `∅` right after
/// the word and agree at the end.
pub fn coalescence_check(chain: &FiniteBufferChain, words: &[Word], n_trials: usize, seed: u64) -> Result<bool> {
    if words.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    let g = &chain.graph;
    let states = enumerate_w2_bounded(g, chain.capacity, crate::erasing::STRONG_STATE_BOUND)?;
    let sampler = ClassSampler::new(&chain.mu);
    let asc: Vec<PreferenceList> = (1..=g.n() as u8).map(|v| ascending_pref(g, v)).collect();
    let with_prefs = chain.policy.uses_preferences();
    for trial in 0..n_trials {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, trial as u64));
        let word = &words[rng.gen_range(0..words.len())];
        if word.len() % 2 == 1 {
            return Err(Error::OddLength(word.clone()));
        }
        let pre = 2 * rng.gen_range(0..=8usize);
        let post = 2 * rng.gen_range(0..=8usize);
        let mut events = Vec::with_capacity(pre + word.len() + post);
        for _ in 0..pre {
            events.push(draw_event(&sampler, &asc, with_prefs, &mut rng));
        }
        for &c in word.letters() {
            let mut e = draw_event(&sampler, &asc, with_prefs, &mut rng);
            if let Some(p) = e.pref.as_mut() {
                // a fresh uniform list for the word's own class
                *p = asc[c as usize - 1].clone();
                use rand::seq::SliceRandom;
                p.shuffle(&mut rng);
            }
            e.class = c;
            events.push(e);
        }
        for _ in 0..post {
            events.push(draw_event(&sampler, &asc, with_prefs, &mut rng));
        }
        let word_end = pre + word.len();
        let mut finals: Option<Word> = None;
        for s in &states {
            let mut u = s.clone();
            for (k, pair) in events.chunks(2).enumerate() {
                let (e0, e1) = (&pair[0], &pair[1]);
                let p0 = e0.pref.as_deref().unwrap_or(&asc[e0.class as usize - 1]);
                let p1 = e1.pref.as_deref().unwrap_or(&asc[e1.class as usize - 1]);
                chain.step_pair(&mut u, e0.class, p0, e1.class, p1);
                if 2 * (k + 1) == word_end && !u.is_empty() {
                    return Err(Error::CoalescenceFailed {
                        trial,
                        initial: s.clone(),
                        end: u,
                        word: word.clone(),
                    });
                }
            }
            match &finals {
                None => finals = Some(u),
                Some(f) if *f != u => {
                    return Err(Error::CoalescenceFailed {
                        trial,
                        initial: s.clone(),
                        end: u,
                        word: word.clone(),
                    })
                }
                _ => {}
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_buffer::{build_transition_matrix, solve_stationary, total_variation};
    use crate::graph::{ArrivalDistribution, CompatibilityGraph};
    use crate::policy::Policy;
    use crate::stream::ScriptedStream;

    fn paw_chain(c: usize) -> FiniteBufferChain {
        let mu = ArrivalDistribution::new(vec![0.2, 0.3, 0.25, 0.25]).unwrap();
        FiniteBufferChain::new(CompatibilityGraph::paw(), Policy::fcfm(), c, mu).unwrap()
    }

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn dictionary_validation() {
        let chain = paw_chain(1);
        assert!(Dictionary::certified(&chain, &[w("234234")]).is_ok());
        assert_eq!(
            Dictionary::certified(&chain, &[w("22")]).unwrap_err(),
            Error::UncertifiedWord(w("22"))
        );
        assert_eq!(Dictionary::unchecked(&[]).unwrap_err(), Error::EmptyDictionary);
        assert_eq!(
            Dictionary::unchecked(&[w("12"), w("1234")]).unwrap_err(),
            Error::MixedLengths
        );
    }

    #[test]
    fn deterministic_under_seed() {
        let chain = paw_chain(1);
        let d = Dictionary::certified(&chain, &[w("234234")]).unwrap();
        for seed in 0..20 {
            let a = cftp_sample(&chain, &d, seed, DEFAULT_DEPTH_LIMIT).unwrap();
            let b = cftp_sample(&chain, &d, seed, DEFAULT_DEPTH_LIMIT).unwrap();
            assert_eq!(a, b);
            assert!(a.scan_depth >= 3);
            assert_eq!(a.reset_time, 3 - a.scan_depth as i64);
            assert!(a.sample.len() <= 2);
        }
    }

    #[test]
    fn word_at_the_end_gives_empty() {
        let chain = paw_chain(1);
        let d = Dictionary::certified(&chain, &[w("234234")]).unwrap();
        let base = ArrivalStream::new(&chain.graph, &chain.policy, &chain.mu, 11);
        let mut s = ScriptedStream::new(base).with_classes(-6, &[2, 3, 4, 2, 3, 4]);
        let r = cftp_sample_from(&chain, &d, &mut s, 10).unwrap();
        assert_eq!(
            r,
            CftpResult {
                sample: Word::new(),
                scan_depth: 3,
                reset_time: 0
            }
        );
    }

    #[test]
    fn window_found_deeper() {
        let chain = paw_chain(1);
        let d = Dictionary::certified(&chain, &[w("234234")]).unwrap();
        // word at pairs -5..-2, then pairs -2 and -1 are (1,1), (3,2)
        let base = ArrivalStream::new(&chain.graph, &chain.policy, &chain.mu, 11);
        let mut s = ScriptedStream::new(base).with_classes(-10, &[2, 3, 4, 2, 3, 4, 1, 1, 3, 2]);
        let r = cftp_sample_from(&chain, &d, &mut s, 1000).unwrap();
        assert_eq!(
            r,
            CftpResult {
                sample: w("13"),
                scan_depth: 5,
                reset_time: -2
            }
        );
    }

    #[test]
    fn depth_limit_reported() {
        let chain = paw_chain(1);
        let d = Dictionary::unchecked(&[w("111111")]).unwrap();
        let base = ArrivalStream::new(&chain.graph, &chain.policy, &chain.mu, 1);
        let mut s = ScriptedStream::new(base);
        for n in -40..0 {
            s = s.with_classes(n, &[2]);
        }
        assert_eq!(cftp_sample_from(&chain, &d, &mut s, 10), Err(Error::DepthLimit(10)));
    }

    #[test]
    fn workers_do_not_change_results() {
        let chain = paw_chain(1);
        let d = Dictionary::certified(&chain, &[w("234234")]).unwrap();
        let a = monte_carlo(&chain, &d, 2000, 9, 1, DEFAULT_DEPTH_LIMIT).unwrap();
        let b = monte_carlo(&chain, &d, 2000, 9, 4, DEFAULT_DEPTH_LIMIT).unwrap();
        assert_eq!(a, b);
        assert!((a.histogram().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_run_close_to_exact() {
        let chain = paw_chain(1);
        let d = Dictionary::certified(&chain, &[w("234234")]).unwrap();
        let mc = monte_carlo(&chain, &d, 20_000, 3, 2, DEFAULT_DEPTH_LIMIT).unwrap();
        let pi = solve_stationary(&build_transition_matrix(&chain).unwrap()).unwrap();
        assert_eq!(mc.states, pi.states);
        assert!(total_variation(&mc.histogram(), &pi.probs).unwrap() < 0.03);
    }

    #[test]
    fn coalescence() {
        let chain = paw_chain(1);
        assert_eq!(coalescence_check(&chain, &[w("234234")], 100, 4), Ok(true));
        match coalescence_check(&chain, &[w("22")], 100, 4) {
            Err(Error::CoalescenceFailed { end, word, .. }) => {
                assert!(!end.is_empty());
                assert_eq!(word, w("22"));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(coalescence_check(&paw_chain(0), &[w("22")], 10, 4), Ok(true));
    }
}
