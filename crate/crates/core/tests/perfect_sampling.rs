use stochmatch::cftp::{cftp_sample, monte_carlo, Dictionary};
use stochmatch::erasing::search_strong_words;
use stochmatch::finite_buffer::{build_transition_matrix, chi_square_gof, solve_stationary, total_variation};
use stochmatch::{ArrivalDistribution, CompatibilityGraph, Error, FiniteBufferChain, Policy, Word};

fn paw_chain(policy: Policy, capacity: usize) -> FiniteBufferChain {
    let mu = ArrivalDistribution::new(vec![0.2, 0.3, 0.25, 0.25]).unwrap();
    FiniteBufferChain::new(CompatibilityGraph::paw(), policy, capacity, mu).unwrap()
}

#[test]
fn two_class_chain_closed_form() {
    // one edge, C = 1: states -, 11, 22; 11 empties only on 22 and 22 only on 11
    let g = CompatibilityGraph::from_edge_list(2, &[(1, 2)]).unwrap();
    let p = 0.4;
    let mu = ArrivalDistribution::new(vec![p, 1.0 - p]).unwrap();
    let chain = FiniteBufferChain::new(g, Policy::fcfm(), 1, mu).unwrap();
    let m = build_transition_matrix(&chain).unwrap();
    let pi = solve_stationary(&m).unwrap();
    let q = 1.0 - p;
    let r11 = p * p / (q * q);
    let r22 = q * q / (p * p);
    let z = 1.0 + r11 + r22;
    for (state, want) in [("-", 1.0 / z), ("11", r11 / z), ("22", r22 / z)] {
        let got = pi.prob_of(&Word::parse(state).unwrap());
        assert!((got - want).abs() < 1e-12, "{state}: {got} vs {want}");
    }
}

#[test]
fn stationary_vectors_are_fixed_points() {
    for policy in [Policy::fcfm(), Policy::lcfm(), Policy::ml(), Policy::uniform()] {
        for capacity in 1..=3 {
            let chain = paw_chain(policy.clone(), capacity);
            let m = build_transition_matrix(&chain).unwrap();
            assert!(m.max_row_error() < 1e-12);
            let pi = solve_stationary(&m).unwrap();
            assert!(m.residual(&pi.probs) < 1e-9, "{policy} C={capacity}");
            assert!((pi.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(pi.probs.iter().all(|&x| x > 0.0));
        }
    }
}

#[test]
fn ml_perfect_samples_match_exact_law() {
    let chain = paw_chain(Policy::ml(), 1);
    let words = search_strong_words(&chain.graph, &chain.policy, 1, 6, 1000).unwrap();
    assert!(words.contains(&Word::parse("234234").unwrap()));
    let dict = Dictionary::certified(&chain, &words).unwrap();
    let mc = monte_carlo(&chain, &dict, 20_000, 31, 2, 100_000_000).unwrap();
    let pi = solve_stationary(&build_transition_matrix(&chain).unwrap()).unwrap();
    let exact: Vec<f64> = mc.states.iter().map(|s| pi.prob_of(s)).collect();
    let tv = total_variation(&mc.histogram(), &exact).unwrap();
    assert!(tv < 0.03, "tv {tv}");
    let chi = chi_square_gof(&mc.counts, &exact).unwrap();
    assert!(chi.p_value > 1e-4, "p {}", chi.p_value);
}

#[test]
fn uncertified_dictionary_is_refused() {
    let chain = paw_chain(Policy::fcfm(), 1);
    let err = Dictionary::certified(&chain, &[Word::parse("22").unwrap()]).unwrap_err();
    assert!(matches!(err, Error::UncertifiedWord(_)));
    // 234234 erases W_2(1) but not every buffer of W_2(2)
    let chain2 = paw_chain(Policy::fcfm(), 2);
    assert!(Dictionary::certified(&chain2, &[Word::parse("234234").unwrap()]).is_err());
}

#[test]
fn samples_stay_in_the_state_space() {
    let chain = paw_chain(Policy::fcfm(), 2);
    let dict = Dictionary::certified(&chain, &[Word::parse("234234234234").unwrap()]).unwrap();
    let states = chain.states().unwrap();
    for seed in 0..20 {
        let r = cftp_sample(&chain, &dict, seed, 100_000_000).unwrap();
        assert!(states.contains(&r.sample));
    }
}
