use stochmatch::{ArrivalDistribution, ClassSet, CompatibilityGraph, Error};

fn set(classes: &[u8]) -> ClassSet {
    let mut s = ClassSet::default();
    for &c in classes {
        s.insert(c);
    }
    s
}

#[test]
fn paw_independent_sets() {
    let g = CompatibilityGraph::paw();
    let mut sets = g.independent_sets();
    sets.sort_by_key(|s| s.bits());
    let mut want = vec![set(&[1]), set(&[2]), set(&[3]), set(&[4]), set(&[1, 3]), set(&[1, 4])];
    want.sort_by_key(|s| s.bits());
    assert_eq!(sets, want);
}

#[test]
fn ncond_on_paw() {
    let g = CompatibilityGraph::paw();
    let ok = ArrivalDistribution::new(vec![0.2, 0.3, 0.25, 0.25]).unwrap();
    assert!(g.ncond_check(&ok).unwrap().holds);
    // mu(1) = mu(E(1)) = mu(2): not strict
    let r = g.ncond_check(&ArrivalDistribution::uniform(4)).unwrap();
    assert!(!r.holds);
    assert_eq!(r.witness, Some(set(&[1])));
}

#[test]
fn ncond_needs_non_bipartite_graph() {
    for g in [
        CompatibilityGraph::cycle(4).unwrap(),
        CompatibilityGraph::complete_multipartite(&[2, 3]).unwrap(),
    ] {
        let mu = ArrivalDistribution::uniform(g.n());
        assert!(g.is_bipartite());
        assert!(!g.ncond_check(&mu).unwrap().holds);
    }
    let c5 = CompatibilityGraph::cycle(5).unwrap();
    assert!(c5.ncond_check(&ArrivalDistribution::uniform(5)).unwrap().holds);
}

#[test]
fn octahedron_is_complete_tripartite() {
    let g = CompatibilityGraph::octahedron();
    assert_eq!(g.n(), 6);
    assert_eq!(g.edges().len(), 12);
    let r = g.classify_complete_multipartite();
    assert!(r.is_cpp);
    let mut parts = r.parts.unwrap();
    assert_eq!(parts.len(), 3);
    parts.sort_by_key(|s| s.bits());
    assert!(parts.iter().all(|p| p.len() == 2 && g.is_independent(*p)));
    assert!(!CompatibilityGraph::paw().classify_complete_multipartite().is_cpp);
}

#[test]
fn odd_cycles() {
    let c7 = CompatibilityGraph::cycle(7).unwrap();
    assert_eq!(c7.find_induced_odd_cycle().unwrap().len(), 7);
    assert_eq!(
        CompatibilityGraph::paw().find_induced_odd_cycle().unwrap().nodes,
        vec![2, 3, 4]
    );
    assert!(CompatibilityGraph::cycle(6).unwrap().find_induced_odd_cycle().is_none());
}

#[test]
fn malformed_graphs_are_rejected() {
    assert!(matches!(
        CompatibilityGraph::from_edge_list(3, &[(1, 1)]),
        Err(Error::SelfLoop(1))
    ));
    assert!(matches!(
        CompatibilityGraph::from_edge_list(4, &[(1, 2), (3, 4)]),
        Err(Error::Disconnected)
    ));
    assert!(CompatibilityGraph::from_edge_list(3, &[(1, 4)]).is_err());
    assert!(CompatibilityGraph::parse("3\n1 2 3\n").is_err());
    assert!(ArrivalDistribution::new(vec![0.5, 0.6]).is_err());
    assert!(ArrivalDistribution::new(vec![1.0, 0.0]).is_err());
}

#[test]
fn builtins_parse() {
    assert_eq!(
        CompatibilityGraph::builtin("cycle:5").unwrap().edges(),
        CompatibilityGraph::cycle(5).unwrap().edges()
    );
    assert_eq!(CompatibilityGraph::builtin("kpartite:2,2,2").unwrap().edges().len(), 12);
    assert!(CompatibilityGraph::builtin("cycle:x").is_err());
}
