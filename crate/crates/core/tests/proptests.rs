use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stochmatch::cftp::cftp_sample;
use stochmatch::erasing::{construct_erasing_word, is_erasing_word};
use stochmatch::finite_buffer::pair_transition;
use stochmatch::policy::{apply_arrival, draw_preference, run_word, step_class};
use stochmatch::stream::PairSource;
use stochmatch::words::{commutative_image, is_admissible};
use stochmatch::{
    ArrivalDistribution, ArrivalEvent, ArrivalStream, ClassDetail, ClassSet, CompatibilityGraph, Dictionary,
    FiniteBufferChain, Policy, Word,
};

/// Connected graphs on 2..=7 classes from an edge bitmask.
fn graphs() -> impl Strategy<Value = CompatibilityGraph> {
    (2usize..=7, any::<u32>()).prop_filter_map("disconnected", |(n, mask)| {
        let mut pairs = Vec::new();
        let mut bit = 0;
        for i in 1..=n {
            for j in i + 1..=n {
                if mask >> (bit % 32) & 1 == 1 {
                    pairs.push((i, j));
                }
                bit += 1;
            }
        }
        CompatibilityGraph::from_edge_list(n, &pairs).ok()
    })
}

fn non_bipartite_graphs() -> impl Strategy<Value = CompatibilityGraph> {
    graphs().prop_filter("bipartite", |g| !g.is_bipartite())
}

fn policies(g: &CompatibilityGraph) -> Vec<Policy> {
    vec![
        Policy::fcfm(),
        Policy::lcfm(),
        Policy::ml(),
        Policy::ms(),
        Policy::uniform(),
        Policy::priority_ascending(g),
        Policy::priority_descending(g),
    ]
}

fn word_over(g: &CompatibilityGraph, raw: &[u8]) -> Word {
    let letters: Vec<u8> = raw.iter().map(|&b| 1 + b % g.n() as u8).collect();
    Word::from_slice(&letters)
}

fn brute_independent(g: &CompatibilityGraph) -> usize {
    (1u32..1 << g.n())
        .filter(|&bits| {
            let s = ClassSet::from_bits(bits << 1);
            s.iter().all(|a| s.iter().all(|b| !g.adjacent(a, b)))
        })
        .count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_serializations_round_trip(g in graphs()) {
        let t = CompatibilityGraph::parse(&g.to_text()).unwrap();
        let j = CompatibilityGraph::parse(&g.to_json()).unwrap();
        prop_assert_eq!(t.edges(), g.edges());
        prop_assert_eq!(j.edges(), g.edges());
        prop_assert_eq!(t.digest(), g.digest());
    }

    #[test]
    fn odd_cycle_certificate_iff_not_bipartite(g in graphs()) {
        match g.find_induced_odd_cycle() {
            Some(c) => {
                prop_assert!(!g.is_bipartite());
                prop_assert!(c.len() % 2 == 1);
                prop_assert!(c.is_valid(&g) && c.is_induced(&g));
            }
            None => prop_assert!(g.is_bipartite()),
        }
    }

    #[test]
    fn independent_sets_match_brute_force(g in graphs()) {
        let sets = g.independent_sets();
        prop_assert!(sets.iter().all(|&s| !s.is_empty() && g.is_independent(s)));
        prop_assert_eq!(sets.len(), brute_independent(&g));
    }

    #[test]
    fn matching_keeps_buffer_admissible(g in graphs(), raw in prop::collection::vec(any::<u8>(), 0..40), seed in any::<u64>()) {
        let z = word_over(&g, &raw);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in policies(&g) {
            let t = run_word(&g, &p, &Word::new(), &z, None, &mut rng).unwrap();
            prop_assert!(is_admissible(&g, &t.leftover), "{} {}", p, z);
            prop_assert!(t.is_consistent(&g));
            prop_assert_eq!(t.leftover.len() + 2 * t.edges.len(), z.len());
        }
    }

    #[test]
    fn class_dynamics_agree_with_queue_dynamics(g in graphs(), raw in prop::collection::vec(any::<u8>(), 0..30), seed in any::<u64>()) {
        let z = word_over(&g, &raw);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in policies(&g).into_iter().filter(|p| p.kind().is_class_admissible()) {
            let mut q = Word::new();
            let mut x = ClassDetail::zeros(g.n());
            for &v in z.letters() {
                let pref = draw_preference(&g, v, &mut rng);
                let e = ArrivalEvent::with_pref(v, &pref);
                q = apply_arrival(&g, &p, &q, &e, &mut rng).unwrap().queue;
                x = step_class(&g, &p, &x, v, &pref);
                prop_assert_eq!(&commutative_image(&q, g.n()), &x, "{} after {}", p, v);
            }
        }
    }

    #[test]
    fn constructed_erasing_word_erases(g in non_bipartite_graphs(), raw in prop::collection::vec(any::<u8>(), 0..6)) {
        // an admissible buffer of even length built by running the arrivals through FCFM
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let arrivals = word_over(&g, &raw[..raw.len() / 2 * 2]);
        let u = run_word(&g, &Policy::fcfm(), &Word::new(), &arrivals, None, &mut rng).unwrap().leftover;
        for p in policies(&g) {
            let cert = construct_erasing_word(&g, &p, &u).unwrap();
            prop_assert!((u.len() + cert.word.len()).is_multiple_of(2));
            prop_assert!(is_erasing_word(&g, &p, &u, &cert.word).unwrap());
        }
    }

    #[test]
    fn finite_buffer_never_overflows(g in graphs(), capacity in 0usize..3, raw in prop::collection::vec(any::<u8>(), 0..60), seed in any::<u64>()) {
        let mu = ArrivalDistribution::uniform(g.n());
        for p in [Policy::fcfm(), Policy::ml(), Policy::uniform()] {
            let chain = FiniteBufferChain::new(g.clone(), p, capacity, mu.clone()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut u = Word::new();
            for pair in word_over(&g, &raw).letters().chunks_exact(2) {
                let (e0, e1) = (ArrivalEvent::new(pair[0]), ArrivalEvent::new(pair[1]));
                let before = u.clone();
                u = pair_transition(&chain, &u, &e0, &e1, &mut rng).unwrap();
                prop_assert!(u.len() <= 2 * capacity);
                prop_assert!(u.len().is_multiple_of(2));
                prop_assert!(is_admissible(&g, &u));
                prop_assert!(u.len().abs_diff(before.len()) <= 2);
            }
        }
    }

    #[test]
    fn word_text_round_trips(raw in prop::collection::vec(1u8..=9, 0..20)) {
        let w = Word::from_slice(&raw);
        prop_assert_eq!(Word::parse(&w.to_string()).unwrap(), w);
    }

    #[test]
    fn stream_regenerates_identically(seed in any::<u64>(), times in prop::collection::vec(-5000i64..5000, 1..50)) {
        let g = CompatibilityGraph::paw();
        let mu = ArrivalDistribution::new(vec![0.2, 0.3, 0.25, 0.25]).unwrap();
        let mut a = ArrivalStream::new(&g, &Policy::ml(), &mu, seed);
        let mut b = ArrivalStream::new(&g, &Policy::ml(), &mu, seed);
        let first: Vec<ArrivalEvent> = times.iter().map(|&t| a.event(t).clone()).collect();
        a.clear_cache();
        for (&t, e) in times.iter().rev().zip(first.iter().rev()) {
            prop_assert_eq!(a.event(t), e);
            prop_assert_eq!(b.event(t), e);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cftp_is_a_function_of_the_seed(seed in any::<u64>()) {
        let g = CompatibilityGraph::paw();
        let mu = ArrivalDistribution::new(vec![0.2, 0.3, 0.25, 0.25]).unwrap();
        let chain = FiniteBufferChain::new(g, Policy::fcfm(), 1, mu).unwrap();
        let dict = Dictionary::certified(&chain, &[Word::parse("234234").unwrap()]).unwrap();
        let a = cftp_sample(&chain, &dict, seed, 100_000_000).unwrap();
        let b = cftp_sample(&chain, &dict, seed, 100_000_000).unwrap();
        prop_assert!(a.sample.len() <= 2);
        let p = dict.half_len() as i64;
        prop_assert!(a.scan_depth as i64 >= p);
        prop_assert_eq!(a.reset_time, p - a.scan_depth as i64);
        prop_assert_eq!(a, b);
    }
}
