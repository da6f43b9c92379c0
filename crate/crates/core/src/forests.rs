//! Oriented forests up to automorphism.
//!
//! A forested graph is a graph together with an ordered set of edges that
//! contains no cycle; the ordering is the orientation, and reordering by a
//! permutation multiplies the generator by the sign of that permutation.
//! Normal forms pick, among all images of the forest under the automorphism
//! group, the lexicographically smallest ascending position list. A forest
//! whose setwise stabilizer acts by an odd permutation is zero.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::error::ForestError;
use crate::multigraph::{
    canonical_form, canonical_labeling, contract_edges, CanonicalKey, GraphClass, Multigraph,
};

/// Normalized forest on a canonical graph, with the sign relating the input
/// ordering to the ascending representative. `sign == 0` marks a forested
/// graph killed by an odd symmetry.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SignedRef {
    pub sign: i8,
    pub forest: Vec<u8>,
}

/// Hash key of a normalized forested graph: the canonical graph key followed
/// by the ascending forest positions.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ForestKey(Box<[u8]>);

impl ForestKey {
    pub fn new(graph: &CanonicalKey, forest: &[u8]) -> Self {
        let mut bytes = Vec::with_capacity(graph.as_bytes().len() + forest.len());
        bytes.extend_from_slice(graph.as_bytes());
        bytes.extend_from_slice(forest);
        ForestKey(bytes.into_boxed_slice())
    }

    fn split(&self) -> (&[u8], &[u8]) {
        let len = 2 + 2 * self.0[1] as usize;
        self.0.split_at(len)
    }

    pub fn graph(&self) -> Multigraph {
        let (g, _) = self.split();
        let edges = g[2..].chunks(2).map(|c| (c[0] as usize, c[1] as usize));
        Multigraph::new(g[0] as usize, edges).expect("key encodes a valid graph")
    }

    pub fn forest(&self) -> &[u8] {
        self.split().1
    }
}

impl fmt::Display for ForestKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} | F=", self.graph())?;
        for (i, e) in self.forest().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", e)?;
        }
        Ok(())
    }
}

/// A normalized forested graph: ascending forest on a canonical graph, and
/// the key of the fully contracted graph `G / forest`.
#[derive(Clone, Debug)]
pub struct ForestedGraph {
    pub graph: Arc<GraphClass>,
    pub forest: Vec<u8>,
    pub block_key: CanonicalKey,
}

impl ForestedGraph {
    pub fn new(graph: Arc<GraphClass>, forest: Vec<u8>) -> Self {
        let block_key = contracted_key(graph.canon(), &forest);
        ForestedGraph {
            graph,
            forest,
            block_key,
        }
    }

    pub fn key(&self) -> ForestKey {
        ForestKey::new(self.graph.key(), &self.forest)
    }
}

impl fmt::Display for ForestedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.key().fmt(f)
    }
}

/// Canonical key of `g / forest`.
pub fn contracted_key(g: &Multigraph, forest: &[u8]) -> CanonicalKey {
    let which: Vec<usize> = forest.iter().map(|&e| e as usize).collect();
    let c = contract_edges(g, &which).expect("forest positions index the graph");
    canonical_form(&c.graph).key().clone()
}

/// Checks that `forest` lists distinct edges of `g` without a cycle.
pub fn check_forest(g: &Multigraph, forest: &[usize]) -> Result<(), ForestError> {
    let mut parent: Vec<usize> = (0..g.vertex_count()).collect();
    let mut used = vec![false; g.edge_count()];
    for &e in forest {
        if e >= g.edge_count() {
            return Err(crate::error::GraphError::EdgeOutOfRange {
                position: e,
                edge_count: g.edge_count(),
            }
            .into());
        }
        if std::mem::replace(&mut used[e], true) {
            return Err(ForestError::Duplicate(e));
        }
        let (u, v) = g.edge(e);
        let (a, b) = (root(&mut parent, u as usize), root(&mut parent, v as usize));
        if a == b {
            return Err(ForestError::Cycle(e));
        }
        parent[a] = b;
    }
    Ok(())
}

fn root(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Parity (true = odd) of the permutation sorting `tuple`.
pub(crate) fn sorting_parity(tuple: &[u8]) -> bool {
    let mut odd = false;
    for i in 0..tuple.len() {
        for j in i + 1..tuple.len() {
            if tuple[i] > tuple[j] {
                odd = !odd;
            }
        }
    }
    odd
}

/// Orbit of a forest under the automorphism group.
#[derive(Clone, Debug)]
pub struct ForestOrbit {
    /// Smallest ascending position list in the orbit.
    pub representative: Vec<u8>,
    /// Image of the input ordering landing on `representative`.
    pub transported: Vec<u8>,
    /// Some automorphism stabilizes the forest setwise with odd action.
    pub odd: bool,
    pub members: Vec<Vec<u8>>,
}

/// Breadth-first traversal of the orbit of `ordered` under the edge action of
/// the generators. Each visited set remembers one ordered image; reaching a
/// set again through a different path with an image of opposite parity
/// exhibits an odd element of the stabilizer. Every Schreier generator of the
/// stabilizer shows up as such a revisit, so the test is complete.
pub fn forest_orbit(graph: &GraphClass, ordered: &[u8]) -> ForestOrbit {
    let mut start_set = ordered.to_vec();
    start_set.sort_unstable();
    let mut images: HashMap<Vec<u8>, Vec<u8>> = HashMap::new();
    images.insert(start_set.clone(), ordered.to_vec());
    let mut queue = vec![start_set];
    let mut odd = false;
    let mut head = 0;
    while head < queue.len() {
        let tuple = images[&queue[head]].clone();
        head += 1;
        for gen in graph.edge_perm_generators() {
            let image: Vec<u8> = tuple.iter().map(|&e| gen[e as usize]).collect();
            let mut set = image.clone();
            set.sort_unstable();
            match images.get(&set) {
                Some(seen) => {
                    if !odd && relative_parity(seen, &image) {
                        odd = true;
                    }
                }
                None => {
                    images.insert(set.clone(), image);
                    queue.push(set);
                }
            }
        }
    }
    let representative = queue.iter().min().cloned().unwrap();
    let transported = images[&representative].clone();
    ForestOrbit {
        representative,
        transported,
        odd,
        members: queue,
    }
}

/// Parity of the permutation carrying tuple `a` to tuple `b` (same entries).
fn relative_parity(a: &[u8], b: &[u8]) -> bool {
    sorting_parity(a) != sorting_parity(b)
}

/// Normal form of the forested graph `(graph, ordered_forest)`.
pub fn normalize(graph: &GraphClass, ordered_forest: &[usize]) -> Result<SignedRef, ForestError> {
    check_forest(graph.canon(), ordered_forest)?;
    let ordered: Vec<u8> = ordered_forest.iter().map(|&e| e as u8).collect();
    Ok(normalize_unchecked(graph, &ordered))
}

pub(crate) fn normalize_unchecked(graph: &GraphClass, ordered: &[u8]) -> SignedRef {
    let orbit = forest_orbit(graph, ordered);
    let sign = if orbit.odd {
        0
    } else if sorting_parity(&orbit.transported) {
        -1
    } else {
        1
    };
    SignedRef {
        sign,
        forest: orbit.representative,
    }
}

/// Canonicalizes an arbitrary multigraph and normalizes a forest on it given
/// by positions in `g`.
pub fn normalize_graph(
    g: &Multigraph,
    ordered_forest: &[usize],
) -> Result<(GraphClass, SignedRef), ForestError> {
    check_forest(g, ordered_forest)?;
    let (class, lab) = canonical_labeling(g);
    let moved: Vec<u8> = ordered_forest.iter().map(|&e| lab.edges[e] as u8).collect();
    let signed = normalize_unchecked(&class, &moved);
    Ok((class, signed))
}

/// All acyclic `p`-subsets of the edges of `g` as ascending position lists,
/// in lexicographic order.
pub fn acyclic_subsets(g: &Multigraph, p: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let parent: Vec<usize> = (0..g.vertex_count()).collect();
    let mut cur = Vec::with_capacity(p);
    extend_subsets(g, p, 0, &parent, &mut cur, &mut out);
    out
}

fn extend_subsets(
    g: &Multigraph,
    p: usize,
    from: usize,
    parent: &[usize],
    cur: &mut Vec<u8>,
    out: &mut Vec<Vec<u8>>,
) {
    if cur.len() == p {
        out.push(cur.clone());
        return;
    }
    let need = p - cur.len();
    for e in from..g.edge_count() {
        if g.edge_count() - e < need {
            break;
        }
        let (u, v) = g.edge(e);
        let mut next = parent.to_vec();
        let (a, b) = (root(&mut next, u as usize), root(&mut next, v as usize));
        if a == b {
            continue;
        }
        next[a] = b;
        cur.push(e as u8);
        extend_subsets(g, p, e + 1, &next, cur, out);
        cur.pop();
    }
}

/// One orbit per class of acyclic `p`-subsets, in order of their smallest
/// member, including odd-symmetric ones.
pub fn forest_orbits(graph: &GraphClass, p: usize) -> Vec<ForestOrbit> {
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut out = Vec::new();
    for subset in acyclic_subsets(graph.canon(), p) {
        if seen.contains(&subset) {
            continue;
        }
        let orbit = forest_orbit(graph, &subset);
        seen.extend(orbit.members.iter().cloned());
        out.push(orbit);
    }
    out
}

/// Basis of `p`-forests on `graph`: one normalized representative per orbit,
/// odd-symmetric orbits dropped, ordered by representative.
pub fn forest_basis(graph: &Arc<GraphClass>, p: usize) -> Vec<ForestedGraph> {
    let mut reps: Vec<Vec<u8>> = forest_orbits(graph, p)
        .into_iter()
        .filter(|o| !o.odd)
        .map(|o| o.representative)
        .collect();
    reps.sort();
    reps.into_iter()
        .map(|f| ForestedGraph::new(graph.clone(), f))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multigraph::canonical_form;

    fn class(text: &str) -> Arc<GraphClass> {
        Arc::new(canonical_form(&text.parse().unwrap()))
    }

    #[test]
    fn transposition_flips_sign() {
        let mut nonzero = 0;
        for text in [
            "V=4 E=0-1,0-2,0-3,1-2,1-3,2-3",
            "V=6 E=0-1,0-2,0-3,1-2,1-4,2-5,3-4,3-5,4-5",
            "V=6 E=0-1,0-1,0-2,1-3,2-4,2-5,3-4,3-5,4-5",
        ] {
            let g = class(text);
            for p in 2..4 {
                for f in acyclic_subsets(g.canon(), p) {
                    let mut f: Vec<usize> = f.iter().map(|&e| e as usize).collect();
                    let a = normalize(&g, &f).unwrap();
                    f.swap(0, p - 1);
                    let b = normalize(&g, &f).unwrap();
                    assert_eq!(a.forest, b.forest);
                    assert_eq!(a.sign, -b.sign);
                    nonzero += (a.sign != 0) as usize;
                }
            }
        }
        assert!(nonzero > 0);
        // in K4 every 2-forest is a path or a matching, both reversed by a symmetry
        let k4 = class("V=4 E=0-1,0-2,0-3,1-2,1-3,2-3");
        assert_eq!(normalize(&k4, &[0, 5]).unwrap().sign, 0);
        assert_eq!(normalize(&k4, &[0, 1]).unwrap().sign, 0);
    }

    #[test]
    fn doubled_four_cycle_is_odd() {
        // double edges 0-1 and 2-3, single edges 0-2 and 1-3
        let g: Multigraph = "V=4 E=0-1,0-1,0-2,1-3,2-3,2-3".parse().unwrap();
        let (_, r) = normalize_graph(&g, &[2, 3]).unwrap();
        assert_eq!(r.sign, 0);
        let (_, r) = normalize_graph(&g, &[3, 2]).unwrap();
        assert_eq!(r.sign, 0);
    }

    #[test]
    fn theta_forests() {
        let theta = class("V=2 E=0-1,0-1,0-1");
        for e in 0..3 {
            let r = normalize(&theta, &[e]).unwrap();
            assert_eq!(r.sign, 1);
            assert_eq!(r.forest, vec![0]);
        }
        assert_eq!(forest_basis(&theta, 1).len(), 1);
        assert!(forest_basis(&theta, 2).is_empty());
        assert_eq!(forest_basis(&theta, 0).len(), 1);
    }

    #[test]
    fn invalid_forests_rejected() {
        let theta = class("V=2 E=0-1,0-1,0-1");
        assert_eq!(normalize(&theta, &[0, 1]), Err(ForestError::Cycle(1)));
        assert_eq!(normalize(&theta, &[2, 2]), Err(ForestError::Duplicate(2)));
        assert!(normalize(&theta, &[3]).is_err());
        let rose = class("V=1 E=0-0");
        assert_eq!(normalize(&rose, &[0]), Err(ForestError::Cycle(0)));
    }

    #[test]
    fn orbit_sizes_cover_all_subsets() {
        for text in [
            "V=4 E=0-1,0-2,0-3,1-2,1-3,2-3",
            "V=4 E=0-1,0-1,0-2,1-3,2-3,2-3",
            "V=6 E=0-1,0-2,0-3,1-2,1-4,2-5,3-4,3-5,4-5",
        ] {
            let g = class(text);
            for p in 0..g.canon().vertex_count() {
                let total: usize = forest_orbits(&g, p).iter().map(|o| o.members.len()).sum();
                assert_eq!(total, acyclic_subsets(g.canon(), p).len(), "{text} p={p}");
            }
        }
    }

    #[test]
    fn forest_key_round_trip() {
        let k4 = class("V=4 E=0-1,0-2,0-3,1-2,1-3,2-3");
        let key = ForestKey::new(k4.key(), &[0, 3]);
        assert_eq!(key.forest(), &[0, 3]);
        assert_eq!(&key.graph(), k4.canon());
        assert_eq!(key.to_string(), "V=4 E=0-1,0-2,0-3,1-2,1-3,2-3 | F=0,3");
    }
}
