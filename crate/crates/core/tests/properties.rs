use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use outfn::chain::{
    add_terms, contract_terms, remove_terms, ChainBasis, Contractor, LinComb, Term,
};
use outfn::enumerator::{enumerate_graphs, EnumMode, EnumSpec};
use outfn::forests::{forest_basis, normalize_graph};
use outfn::{canonical_form, GraphClass, Multigraph};

fn sample_graphs() -> Vec<GraphClass> {
    let mut out = Vec::new();
    for n in 2..=4 {
        out.extend(enumerate_graphs(&EnumSpec::trivalent(n)).unwrap());
    }
    for (n, d) in [(3, 3), (4, 2)] {
        out.extend(
            enumerate_graphs(&EnumSpec {
                n,
                mode: EnumMode::MaxDegree(d),
                allow_loops: true,
                max_classes: None,
            })
            .unwrap(),
        );
    }
    out
}

/// Random vertex relabeling and edge order; returns the new graph and where
/// each old edge position went.
fn shuffle(g: &Multigraph, rng: &mut ChaCha8Rng) -> (Multigraph, Vec<usize>) {
    let mut perm: Vec<usize> = (0..g.vertex_count()).collect();
    perm.shuffle(rng);
    let mut order: Vec<usize> = (0..g.edge_count()).collect();
    order.shuffle(rng);
    let raw: Vec<(usize, usize)> = order
        .iter()
        .map(|&e| {
            let (u, v) = g.edge(e);
            (perm[u as usize], perm[v as usize])
        })
        .collect();
    let (h, pos) = Multigraph::with_positions(g.vertex_count(), raw).unwrap();
    let mut moved = vec![0; g.edge_count()];
    for (i, &e) in order.iter().enumerate() {
        moved[e] = pos[i];
    }
    (h, moved)
}

#[test]
fn canonical_form_is_invariant_under_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let graphs = sample_graphs();
    assert!(graphs.len() > 20, "{} graphs", graphs.len());
    for class in &graphs {
        for _ in 0..1000 {
            let (h, _) = shuffle(class.canon(), &mut rng);
            let c = canonical_form(&h);
            assert_eq!(c.key(), class.key(), "{h}");
        }
    }
}

#[test]
fn forest_normalization_is_invariant_under_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for n in 3..=4 {
        for class in enumerate_graphs(&EnumSpec::trivalent(n)).unwrap() {
            let class = Arc::new(class);
            for p in 1..=3 {
                for e in forest_basis(&class, p) {
                    for _ in 0..20 {
                        let (h, moved) = shuffle(class.canon(), &mut rng);
                        let mut forest: Vec<usize> =
                            e.forest.iter().map(|&f| moved[f as usize]).collect();
                        let (c, r) = normalize_graph(&h, &forest).unwrap();
                        assert_eq!(c.key(), class.key());
                        assert_eq!((r.sign, &r.forest), (1, &e.forest));
                        forest.swap(0, p - 1);
                        if p > 1 {
                            let (_, r) = normalize_graph(&h, &forest).unwrap();
                            assert_eq!(r.sign, -1);
                        }
                    }
                }
            }
        }
    }
}

fn graphs(n: usize) -> Vec<Arc<GraphClass>> {
    enumerate_graphs(&EnumSpec::trivalent(n))
        .unwrap()
        .into_iter()
        .map(Arc::new)
        .collect()
}

fn boundary(comb: &LinComb, contractor: &Contractor) -> LinComb {
    let mut out = LinComb::new();
    for t in comb.values() {
        add_terms(
            &mut out,
            contract_terms(&t.graph, &t.forest, contractor),
            t.coeff,
        );
        add_terms(&mut out, remove_terms(&t.graph, &t.forest), -t.coeff);
    }
    out
}

#[test]
fn full_differential_squares_to_zero() {
    let contractor = Contractor::new();
    for n in 2..=4 {
        let gs = graphs(n);
        for p in 0..=(2 * n - 3) {
            for e in &ChainBasis::build(&gs, n, p).elements {
                let mut start = LinComb::new();
                add_terms(
                    &mut start,
                    [Term {
                        coeff: 1,
                        graph: e.graph.clone(),
                        forest: e.forest.clone(),
                    }],
                    1,
                );
                assert!(boundary(&boundary(&start, &contractor), &contractor).is_empty());
            }
        }
    }
}

#[test]
fn contraction_and_removal_do_not_commute() {
    // with the shared sign convention the two compositions are negatives of
    // each other, so they are equal only where both vanish
    let contractor = Contractor::new();
    let gs = graphs(3);
    let mut witness = None;
    for e in &ChainBasis::build(&gs, 3, 2).elements {
        let mut start = LinComb::new();
        add_terms(
            &mut start,
            [Term {
                coeff: 1,
                graph: e.graph.clone(),
                forest: e.forest.clone(),
            }],
            1,
        );
        let mut cr = LinComb::new();
        let mut rc = LinComb::new();
        for t in start.values() {
            for r in remove_terms(&t.graph, &t.forest) {
                let c = r.coeff;
                add_terms(&mut cr, contract_terms(&r.graph, &r.forest, &contractor), c);
            }
            for k in contract_terms(&t.graph, &t.forest, &contractor) {
                let c = k.coeff;
                add_terms(&mut rc, remove_terms(&k.graph, &k.forest), c);
            }
        }
        if !cr.is_empty() {
            witness = Some((cr, rc));
            break;
        }
    }
    let (cr, rc) = witness.expect("a nonzero composition exists at n = 3");
    assert_eq!(cr.len(), rc.len());
    for (k, t) in &cr {
        assert_eq!(rc[k].coeff, -t.coeff);
    }
}
