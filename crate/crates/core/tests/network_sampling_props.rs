use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use netsensor::geo::Gazetteer;
use netsensor::ingest::{default_epoch, FilterLevel};
use netsensor::network::{paradox_stats, DegreeKind, NodeId, SocialGraph};
use netsensor::pipeline::prepare;
use netsensor::sampling::{draw_pair, GeoCombo, GeoConstraint, Region, SamplingPool};
use netsensor::simulator::{generate_network, node_name, simulate, SimConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

#[test]
fn degrees_match_edge_list_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(210);
    let n = 2_000;
    let raw: Vec<(u32, u32)> = (0..30_000)
        .map(|_| (rng.random_range(0..n as u32), rng.random_range(0..n as u32)))
        .collect();
    let g = SocialGraph::from_indexed(names(n), &raw);

    let unique: BTreeSet<(u32, u32)> = raw.iter().copied().filter(|(u, v)| u != v).collect();
    assert_eq!(g.edge_count(), unique.len());
    let mut out_deg = vec![0usize; n];
    let mut in_deg = vec![0usize; n];
    for &(u, v) in &unique {
        out_deg[u as usize] += 1;
        in_deg[v as usize] += 1;
    }
    for v in g.nodes() {
        assert_eq!(g.out_degree(v), out_deg[v.index()]);
        assert_eq!(g.in_degree(v), in_deg[v.index()]);
        assert_eq!(g.friends(v).len(), g.out_degree(v));
        let friends: BTreeSet<(u32, u32)> = g.friends(v).iter().map(|w| (v.0, w.0)).collect();
        let expected: BTreeSet<(u32, u32)> = unique.range((v.0, 0)..=(v.0, u32::MAX)).copied().collect();
        assert_eq!(friends, expected);
        assert!(g.followers(v).iter().all(|&w| g.has_edge(w, v)));
    }
    let total: usize = g.nodes().map(|v| g.friends_of(g.name(v)).unwrap().len()).sum();
    assert_eq!(total, g.edge_count());
}

#[test]
fn paradox_identity_on_configuration_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(219);
    let n = 10_000;
    // Heavy-tailed degree sequence, stubs matched uniformly.
    let degrees: Vec<usize> = (0..n)
        .map(|_| {
            let u: f64 = rng.random_range(0.0..1.0);
            (2.0 * (1.0 - u).powf(-1.0 / 1.5)).min(500.0) as usize
        })
        .collect();
    let mut stubs: Vec<u32> = degrees
        .iter()
        .enumerate()
        .flat_map(|(i, &d)| std::iter::repeat_n(i as u32, d))
        .collect();
    if stubs.len() % 2 == 1 {
        stubs.pop();
    }
    for i in (1..stubs.len()).rev() {
        let j = rng.random_range(0..=i);
        stubs.swap(i, j);
    }
    let edges: Vec<(u32, u32)> = stubs.chunks(2).map(|c| (c[0], c[1])).collect();
    let g = SocialGraph::from_indexed(names(n), &edges).bidirected();

    let stats = paradox_stats(&g, DegreeKind::Out).unwrap();
    let d: Vec<f64> = g.nodes().map(|v| g.out_degree(v) as f64).collect();
    let s1: f64 = d.iter().sum();
    let s2: f64 = d.iter().map(|x| x * x).sum();
    let ratio = (s2 / s1) / (s1 / n as f64);
    assert!(
        (stats.ratio - ratio).abs() <= 1e-12 * ratio,
        "{} vs {ratio}",
        stats.ratio
    );
    assert!(stats.ratio > 1.0);
}

#[test]
fn feld_inequality_on_simulated_graphs() {
    for seed in 1..=5 {
        let cfg = SimConfig {
            n_nodes: 3_000,
            seed,
            ..SimConfig::default()
        };
        let g = generate_network(&cfg).unwrap();
        let bi = paradox_stats(&g.bidirected(), DegreeKind::Out).unwrap();
        assert!(bi.mean_friend_degree >= bi.mean_degree);
        let inn = paradox_stats(&g, DegreeKind::In).unwrap();
        assert!(inn.mean_friend_degree >= inn.mean_degree);
        let total: usize = g
            .nodes()
            .map(|v| g.friends_of(&node_name(v.index())).unwrap().len())
            .sum();
        assert_eq!(total, g.edge_count());
    }
}

#[test]
fn sensors_have_more_friends_than_controls() {
    let out = simulate(&SimConfig::endogenous_dominant(20_000, 7), default_epoch()).unwrap();
    let prep = prepare(
        &out.messages,
        &out.profiles,
        Arc::new(out.graph.clone()),
        &Gazetteer::default(),
        Some(&out.area),
        FilterLevel::Strict,
    );
    let pop = &prep.population;
    let mean_out = |members: &[NodeId]| {
        members.iter().map(|&v| pop.graph().out_degree(v) as f64).sum::<f64>() / members.len() as f64
    };
    let mut wins = 0;
    for seed in 0..100 {
        let pair = draw_pair(pop.graph(), pop.pool(), 500, GeoCombo::Any, seed).unwrap();
        if mean_out(&pair.sensor.members) > mean_out(&pair.control.members) {
            wins += 1;
        }
    }
    assert!(wins >= 95, "sensor out-degree higher in {wins}/100 trials");
}

fn admits(c: GeoConstraint, r: Option<Region>) -> bool {
    match c {
        GeoConstraint::Any => true,
        GeoConstraint::In => r == Some(Region::Inside),
        GeoConstraint::Out => r == Some(Region::Outside),
    }
}

#[derive(Debug, Clone)]
struct Case {
    graph: SocialGraph,
    active: Vec<bool>,
    region: Vec<Option<Region>>,
}

fn arb_case() -> impl Strategy<Value = Case> {
    (20usize..120).prop_flat_map(|n| {
        (
            prop::collection::vec((0..n as u32, 0..n as u32), 0..n * 6),
            prop::collection::vec(prop::bool::weighted(0.8), n),
            prop::collection::vec(
                prop::sample::select(vec![None, Some(Region::Inside), Some(Region::Outside)]),
                n,
            ),
        )
            .prop_map(move |(edges, active, region)| Case {
                graph: SocialGraph::from_indexed(names(n), &edges),
                active,
                region,
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(256) })]

    #[test]
    fn groups_are_disjoint_sized_and_constrained(
        case in arb_case(),
        n in 1usize..15,
        combo in prop::sample::select(GeoCombo::ALL.to_vec()),
        seed in any::<u64>(),
    ) {
        let pool = SamplingPool::new(case.active.clone(), case.region.clone());
        let Ok(pair) = draw_pair(&case.graph, &pool, n, combo, seed) else {
            return Ok(());
        };
        let control = &pair.control.members;
        let sensor = &pair.sensor.members;
        prop_assert_eq!(control.len(), n);
        prop_assert_eq!(sensor.len(), n);
        let cs: HashSet<NodeId> = control.iter().copied().collect();
        let ss: HashSet<NodeId> = sensor.iter().copied().collect();
        prop_assert_eq!(cs.len(), n);
        prop_assert_eq!(ss.len(), n);
        prop_assert!(cs.is_disjoint(&ss));
        for &v in control {
            prop_assert!(case.active[v.index()] && case.region[v.index()].is_some());
            prop_assert!(admits(combo.control(), case.region[v.index()]));
        }
        for &s in sensor {
            prop_assert!(case.active[s.index()]);
            prop_assert!(admits(combo.sensor(), case.region[s.index()]));
            prop_assert!(control.iter().any(|&c| case.graph.has_edge(c, s)), "sensor is nobody's friend");
        }
        let again = draw_pair(&case.graph, &pool, n, combo, seed).unwrap();
        prop_assert_eq!(again, pair);
    }
}
