use std::sync::Arc;

use outfn::chain::{
    add_terms, boundary_contract, boundary_remove, contract_terms, remove_terms, ChainBasis,
    Contractor, LinComb, Term,
};
use outfn::enumerator::{enumerate_graphs, EnumSpec};
use outfn::GraphClass;

fn graphs(n: usize) -> Vec<Arc<GraphClass>> {
    enumerate_graphs(&EnumSpec::trivalent(n))
        .unwrap()
        .into_iter()
        .map(Arc::new)
        .collect()
}

#[derive(Clone, Copy)]
enum Op {
    Contract,
    Remove,
}

fn apply(op: Op, comb: &LinComb, contractor: &Contractor) -> LinComb {
    let mut out = LinComb::new();
    for t in comb.values() {
        let terms = match op {
            Op::Contract => contract_terms(&t.graph, &t.forest, contractor),
            Op::Remove => remove_terms(&t.graph, &t.forest),
        };
        add_terms(&mut out, terms, t.coeff);
    }
    out
}

fn single(t: Term) -> LinComb {
    let mut c = LinComb::new();
    add_terms(&mut c, [t], 1);
    c
}

fn sum(a: &LinComb, b: &LinComb) -> LinComb {
    let mut out = a.clone();
    add_terms(&mut out, b.values().cloned(), 1);
    out
}

#[test]
fn contraction_and_removal_square_to_zero() {
    let contractor = Contractor::new();
    for n in 2..=4 {
        let gs = graphs(n);
        for p in 0..=(2 * n - 3) {
            let b = ChainBasis::build(&gs, n, p);
            for e in &b.elements {
                let start = single(Term {
                    coeff: 1,
                    graph: e.graph.clone(),
                    forest: e.forest.clone(),
                });
                let cc = apply(
                    Op::Contract,
                    &apply(Op::Contract, &start, &contractor),
                    &contractor,
                );
                assert!(cc.is_empty(), "contract twice on {e} is nonzero");
                let rr = apply(
                    Op::Remove,
                    &apply(Op::Remove, &start, &contractor),
                    &contractor,
                );
                assert!(rr.is_empty(), "remove twice on {e} is nonzero");
            }
        }
    }
}

#[test]
fn contraction_and_removal_anticommute() {
    let contractor = Contractor::new();
    for n in 2..=4 {
        let gs = graphs(n);
        let mut checked = 0;
        for p in 0..=(2 * n - 3) {
            let b = ChainBasis::build(&gs, n, p);
            for e in &b.elements {
                let start = single(Term {
                    coeff: 1,
                    graph: e.graph.clone(),
                    forest: e.forest.clone(),
                });
                let cr = apply(
                    Op::Contract,
                    &apply(Op::Remove, &start, &contractor),
                    &contractor,
                );
                let rc = apply(
                    Op::Remove,
                    &apply(Op::Contract, &start, &contractor),
                    &contractor,
                );
                assert!(sum(&cr, &rc).is_empty(), "C R + R C nonzero on {e}");
                if !cr.is_empty() {
                    checked += 1;
                }
            }
        }
        if n >= 3 {
            assert!(checked > 0, "no nontrivial instance at n = {n}");
        }
    }
}

#[test]
fn matrix_products_vanish() {
    for n in 3..=4 {
        let gs = graphs(n);
        let bases: Vec<ChainBasis> = (0..=(2 * n - 3))
            .map(|p| ChainBasis::build(&gs, n, p))
            .collect();
        for p in 2..bases.len() {
            let r1 = boundary_remove(&bases[p], &bases[p - 1]).unwrap();
            let r2 = boundary_remove(&bases[p - 1], &bases[p - 2]).unwrap();
            assert!(r2.mul(&r1).is_zero(), "removal squared at n = {n}, p = {p}");
        }
    }
}

#[test]
fn removal_stays_in_the_filtration() {
    // every removal target is itself a trivalent basis element one step down
    for n in 2..=5 {
        let gs = graphs(n);
        let mut prev = ChainBasis::build(&gs, n, 0);
        for p in 1..=(2 * n - 3) {
            let b = ChainBasis::build(&gs, n, p);
            let m = boundary_remove(&b, &prev).expect("targets present");
            for &(r, c, _) in &m.entries {
                assert_eq!(prev.elements[r].graph.key(), b.elements[c].graph.key());
            }
            let dc = boundary_contract(&b);
            for label in &dc.row_labels {
                assert_eq!(label.forest().len(), p - 1);
            }
            prev = b;
        }
    }
}

#[test]
fn forest_basis_counts_rank_seven() {
    let gs = graphs(7);
    assert_eq!(gs.len(), 365);
    assert_eq!(ChainBasis::build(&gs, 7, 1).dim(), 3712);
    assert_eq!(ChainBasis::build(&gs, 7, 2).dim(), 23227);
}
