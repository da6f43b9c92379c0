//! Multigraphs with identified edges, admissibility predicates, edge
//! contraction and canonical labeling.
//!
//! Vertices are `0..vertex_count`. Edges are stored as `(u, v)` pairs with
//! `u <= v`, sorted lexicographically; parallel edges are repeated pairs and
//! are told apart by their position in the edge list. A pair with `u == v` is
//! a loop.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::GraphError;

/// Largest vertex count accepted anywhere in the crate.
pub const MAX_VERTICES: usize = 64;
/// Largest edge count accepted anywhere in the crate.
pub const MAX_EDGES: usize = 255;

pub type Edge = (u8, u8);

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Multigraph {
    vertex_count: usize,
    edges: Vec<Edge>,
}

impl Multigraph {
    /// Builds a multigraph from an arbitrary edge list. Endpoints are put in
    /// `u <= v` order and the list is sorted, so positions may differ from the
    /// input order; use [`Multigraph::with_positions`] when the input order
    /// matters.
    pub fn new<I>(vertex_count: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Ok(Self::with_positions(vertex_count, edges)?.0)
    }

    /// Like [`Multigraph::new`], also returning where each input edge ended up.
    pub fn with_positions<I>(
        vertex_count: usize,
        edges: I,
    ) -> Result<(Self, Vec<usize>), GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if vertex_count > MAX_VERTICES {
            return Err(GraphError::TooLarge {
                what: "vertices",
                count: vertex_count,
                max: MAX_VERTICES,
            });
        }
        let mut raw = Vec::new();
        for (u, v) in edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(GraphError::EndpointOutOfRange {
                    endpoint: u.max(v),
                    vertex_count,
                });
            }
            raw.push(if u <= v {
                (u as u8, v as u8)
            } else {
                (v as u8, u as u8)
            });
        }
        if raw.len() > MAX_EDGES {
            return Err(GraphError::TooLarge {
                what: "edges",
                count: raw.len(),
                max: MAX_EDGES,
            });
        }
        Ok(Self::from_unsorted(vertex_count, raw))
    }

    /// Sorts `raw` stably and reports the new position of every input edge.
    pub(crate) fn from_unsorted(vertex_count: usize, raw: Vec<Edge>) -> (Self, Vec<usize>) {
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by_key(|&i| (raw[i], i));
        let mut position = vec![0; raw.len()];
        for (new, &old) in order.iter().enumerate() {
            position[old] = new;
        }
        let edges = order.iter().map(|&i| raw[i]).collect();
        (
            Multigraph {
                vertex_count,
                edges,
            },
            position,
        )
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, position: usize) -> Edge {
        self.edges[position]
    }

    pub fn is_loop(&self, position: usize) -> bool {
        let (u, v) = self.edges[position];
        u == v
    }

    /// Valence of every vertex; a loop counts twice.
    pub fn valences(&self) -> Vec<usize> {
        let mut val = vec![0; self.vertex_count];
        for &(u, v) in &self.edges {
            val[u as usize] += 1;
            val[v as usize] += 1;
        }
        val
    }

    pub fn loop_count(&self) -> usize {
        self.edges.iter().filter(|(u, v)| u == v).count()
    }

    /// Positions `start..end` of all edges equal to `pair` (its parallel class).
    pub fn parallel_class(&self, pair: Edge) -> std::ops::Range<usize> {
        let start = self.edges.partition_point(|e| *e < pair);
        let end = self.edges.partition_point(|e| *e <= pair);
        start..end
    }

    /// Applies a vertex relabeling `perm` (old label -> new label) and returns
    /// the relabeled graph together with the induced edge position map. Edges
    /// of one parallel class keep their relative order.
    pub fn relabel(&self, perm: &[u8]) -> (Multigraph, Vec<usize>) {
        let raw = self
            .edges
            .iter()
            .map(|&(u, v)| {
                let (a, b) = (perm[u as usize], perm[v as usize]);
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        Self::from_unsorted(self.vertex_count, raw)
    }

    pub(crate) fn multiplicity_matrix(&self) -> Vec<u8> {
        let n = self.vertex_count;
        let mut m = vec![0u8; n * n];
        for &(u, v) in &self.edges {
            let (u, v) = (u as usize, v as usize);
            m[u * n + v] += 1;
            if u != v {
                m[v * n + u] += 1;
            }
        }
        m
    }

    fn connected_ignoring(&self, skip: Option<usize>) -> bool {
        if self.vertex_count == 0 {
            return true;
        }
        let mut parent: Vec<usize> = (0..self.vertex_count).collect();
        let mut components = self.vertex_count;
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            let (a, b) = (find(&mut parent, u as usize), find(&mut parent, v as usize));
            if a != b {
                parent[a] = b;
                components -= 1;
            }
        }
        components == 1
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl fmt::Display for Multigraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V={} E=", self.vertex_count)?;
        for (i, (u, v)) in self.edges.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}-{}", u, v)?;
        }
        Ok(())
    }
}

impl FromStr for Multigraph {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GraphError::Parse(s.to_string());
        let s = s.trim();
        let rest = s.strip_prefix("V=").ok_or_else(bad)?;
        let (count, rest) = rest.split_once(' ').ok_or_else(bad)?;
        let vertex_count: usize = count.parse().map_err(|_| bad())?;
        let list = rest.trim().strip_prefix("E=").ok_or_else(bad)?;
        let mut edges = Vec::new();
        if !list.is_empty() {
            for tok in list.split(',') {
                let (u, v) = tok.split_once('-').ok_or_else(bad)?;
                edges.push((
                    u.parse::<usize>().map_err(|_| bad())?,
                    v.parse::<usize>().map_err(|_| bad())?,
                ));
            }
        }
        Multigraph::new(vertex_count, edges)
    }
}

/// Structural summary of a graph relative to a target rank.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Classification {
    pub connected: bool,
    pub bridgeless: bool,
    pub loopless: bool,
    pub min_valence_ok: bool,
    /// First Betti number `E - V + 1`; only set for connected graphs.
    pub rank: Option<usize>,
    /// `sum over vertices of (valence - 3)`.
    pub degree: i64,
    pub admissible: bool,
}

/// Classifies `g` against rank `n`. A graph is admissible when it is
/// connected, bridgeless, loopless, has every valence at least three and has
/// rank `n`.
pub fn classify(g: &Multigraph, n: usize) -> Classification {
    let connected = g.vertex_count() > 0 && g.connected_ignoring(None);
    let bridgeless =
        connected && (0..g.edge_count()).all(|i| g.is_loop(i) || g.connected_ignoring(Some(i)));
    let loopless = g.loop_count() == 0;
    let valences = g.valences();
    let min_valence_ok = valences.iter().all(|&d| d >= 3);
    let degree = valences.iter().map(|&d| d as i64 - 3).sum();
    let rank = connected.then(|| g.edge_count() + 1 - g.vertex_count());
    let admissible = connected && bridgeless && loopless && min_valence_ok && rank == Some(n);
    Classification {
        connected,
        bridgeless,
        loopless,
        min_valence_ok,
        rank,
        degree,
        admissible,
    }
}

/// Result of contracting a set of edges: the quotient graph and, for each
/// original edge position, its position in the quotient (`None` when
/// contracted).
#[derive(Clone, Debug)]
pub struct Contraction {
    pub graph: Multigraph,
    pub edge_map: Vec<Option<usize>>,
}

/// Contracts every edge in `which`. Merged vertices are relabeled in order of
/// first appearance of their classes when scanning the old labels upwards.
pub fn contract_edges(g: &Multigraph, which: &[usize]) -> Result<Contraction, GraphError> {
    let mut contracted = vec![false; g.edge_count()];
    let mut parent: Vec<usize> = (0..g.vertex_count()).collect();
    for &e in which {
        if e >= g.edge_count() {
            return Err(GraphError::EdgeOutOfRange {
                position: e,
                edge_count: g.edge_count(),
            });
        }
        contracted[e] = true;
        let (u, v) = g.edge(e);
        let (a, b) = (find(&mut parent, u as usize), find(&mut parent, v as usize));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut label = vec![u8::MAX; g.vertex_count()];
    let mut root_label = vec![u8::MAX; g.vertex_count()];
    let mut next = 0u8;
    for v in 0..g.vertex_count() {
        let r = find(&mut parent, v);
        if root_label[r] == u8::MAX {
            root_label[r] = next;
            next += 1;
        }
        label[v] = root_label[r];
    }
    let mut kept = Vec::new();
    let mut raw = Vec::new();
    for (i, &(u, v)) in g.edges().iter().enumerate() {
        if contracted[i] {
            continue;
        }
        let (a, b) = (label[u as usize], label[v as usize]);
        raw.push(if a <= b { (a, b) } else { (b, a) });
        kept.push(i);
    }
    let (graph, position) = Multigraph::from_unsorted(next as usize, raw);
    let mut edge_map = vec![None; g.edge_count()];
    for (k, &old) in kept.iter().enumerate() {
        edge_map[old] = Some(position[k]);
    }
    Ok(Contraction { graph, edge_map })
}

/// Byte string identifying an isomorphism class: vertex count, edge count,
/// then the canonical edge list.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct CanonicalKey(Box<[u8]>);

impl CanonicalKey {
    fn of(g: &Multigraph) -> Self {
        let mut bytes = Vec::with_capacity(2 + 2 * g.edge_count());
        bytes.push(g.vertex_count() as u8);
        bytes.push(g.edge_count() as u8);
        for &(u, v) in g.edges() {
            bytes.push(u);
            bytes.push(v);
        }
        CanonicalKey(bytes.into_boxed_slice())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// Rebuilds the canonical multigraph encoded in the key.
    pub fn graph(&self) -> Multigraph {
        let v = self.0[0] as usize;
        let edges = self.0[2..].chunks(2).map(|c| (c[0], c[1])).collect();
        Multigraph {
            vertex_count: v,
            edges,
        }
    }
}

/// An automorphism of a canonical graph, acting on vertex labels and on
/// edge positions.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Automorphism {
    pub vertices: Vec<u8>,
    pub edges: Vec<u8>,
}

/// Canonical representative of an isomorphism class with generators of its
/// automorphism group.
///
/// Generators come in two kinds: those induced by vertex permutations (edge
/// images completed within parallel classes in ascending order) and
/// transpositions of adjacent edges of one parallel class, which fix every
/// vertex.
#[derive(Clone, Debug)]
pub struct GraphClass {
    canon: Multigraph,
    generators: Vec<Automorphism>,
    key: CanonicalKey,
}

impl GraphClass {
    pub fn canon(&self) -> &Multigraph {
        &self.canon
    }

    pub fn key(&self) -> &CanonicalKey {
        &self.key
    }

    pub fn generators(&self) -> &[Automorphism] {
        &self.generators
    }

    pub fn vertex_perm_generators(&self) -> impl Iterator<Item = &[u8]> {
        self.generators.iter().map(|a| a.vertices.as_slice())
    }

    pub fn edge_perm_generators(&self) -> impl Iterator<Item = &[u8]> {
        self.generators.iter().map(|a| a.edges.as_slice())
    }

    /// Order of the automorphism group acting on edges and vertices, by
    /// closing the generators. Only meant for small groups.
    pub fn group_order(&self) -> usize {
        let v = self.canon.vertex_count();
        let identity: Vec<u8> = (0..v as u8)
            .chain(0..self.canon.edge_count() as u8)
            .collect();
        let mut seen = std::collections::HashSet::new();
        seen.insert(identity.clone());
        let mut queue = vec![identity];
        while let Some(cur) = queue.pop() {
            for g in &self.generators {
                let mut next = cur.clone();
                for (i, x) in next.iter_mut().enumerate() {
                    *x = if i < v {
                        g.vertices[cur[i] as usize]
                    } else {
                        g.edges[cur[i] as usize]
                    };
                }
                if seen.insert(next.clone()) {
                    queue.push(next);
                }
            }
        }
        seen.len()
    }
}

/// How an input graph maps onto its canonical form.
#[derive(Clone, Debug)]
pub struct Relabeling {
    pub vertices: Vec<u8>,
    pub edges: Vec<usize>,
}

pub fn canonical_form(g: &Multigraph) -> GraphClass {
    canonical_labeling(g).0
}

/// Computes the canonical form of `g`, generators of its automorphism group
/// and the relabeling from `g` onto the canonical form.
pub fn canonical_labeling(g: &Multigraph) -> (GraphClass, Relabeling) {
    let mut search = Search::new(g);
    let root = search.initial_partition();
    let root = search.refine(root);
    search.explore(root, &mut Vec::new());
    let best = search
        .best
        .take()
        .expect("search reaches at least one leaf")
        .0;
    let (canon, edge_pos) = g.relabel(&best);

    // Automorphisms of g conjugated onto canon.
    let mut inverse = vec![0u8; best.len()];
    for (v, &l) in best.iter().enumerate() {
        inverse[l as usize] = v as u8;
    }
    let mut generators = Vec::new();
    for gamma in &search.automorphisms {
        let vertices: Vec<u8> = (0..best.len())
            .map(|x| best[gamma[inverse[x] as usize] as usize])
            .collect();
        if vertices.iter().enumerate().all(|(i, &x)| i == x as usize) {
            continue;
        }
        let edges = induced_edge_perm(&canon, &vertices);
        generators.push(Automorphism { vertices, edges });
    }
    generators.sort_by(|a, b| a.vertices.cmp(&b.vertices));
    generators.dedup();
    let identity: Vec<u8> = (0..canon.vertex_count() as u8).collect();
    let mut start = 0;
    while start < canon.edge_count() {
        let class = canon.parallel_class(canon.edge(start));
        for i in class.start..class.end - 1 {
            let mut edges: Vec<u8> = (0..canon.edge_count() as u8).collect();
            edges.swap(i, i + 1);
            generators.push(Automorphism {
                vertices: identity.clone(),
                edges,
            });
        }
        start = class.end;
    }
    let key = CanonicalKey::of(&canon);
    (
        GraphClass {
            canon,
            generators,
            key,
        },
        Relabeling {
            vertices: best,
            edges: edge_pos,
        },
    )
}

/// Edge position permutation induced by a vertex automorphism of `g`, with the
/// k-th edge of a parallel class sent to the k-th edge of the image class.
pub(crate) fn induced_edge_perm(g: &Multigraph, vertices: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; g.edge_count()];
    let mut i = 0;
    while i < g.edge_count() {
        let (u, v) = g.edge(i);
        let class = g.parallel_class((u, v));
        let (a, b) = (vertices[u as usize], vertices[v as usize]);
        let image = g.parallel_class(if a <= b { (a, b) } else { (b, a) });
        debug_assert_eq!(class.len(), image.len(), "not an automorphism");
        for (k, pos) in class.clone().enumerate() {
            out[pos] = (image.start + k) as u8;
        }
        i = class.end;
    }
    out
}

type Partition = Vec<Vec<u8>>;

/// Individualization-refinement search for the lexicographically smallest
/// relabeled edge list.
struct Search {
    n: usize,
    adj: Vec<u8>,
    edges: Vec<Edge>,
    first: Option<(Vec<u8>, Vec<Edge>)>,
    best: Option<(Vec<u8>, Vec<Edge>)>,
    automorphisms: Vec<Vec<u8>>,
}

impl Search {
    fn new(g: &Multigraph) -> Self {
        Search {
            n: g.vertex_count(),
            adj: g.multiplicity_matrix(),
            edges: g.edges().to_vec(),
            first: None,
            best: None,
            automorphisms: Vec::new(),
        }
    }

    fn initial_partition(&self) -> Partition {
        let mut keyed: Vec<((u8, usize), u8)> = (0..self.n)
            .map(|v| {
                let loops = self.adj[v * self.n + v];
                let val: usize = (0..self.n).map(|w| self.adj[v * self.n + w] as usize).sum();
                ((loops, val + loops as usize), v as u8)
            })
            .collect();
        keyed.sort();
        let mut cells: Partition = Vec::new();
        let mut last = None;
        for (k, v) in keyed {
            if last != Some(k) {
                cells.push(Vec::new());
                last = Some(k);
            }
            cells.last_mut().unwrap().push(v);
        }
        cells
    }

    /// Refines to the coarsest equitable partition below `cells`, splitting
    /// each cell by the sorted multiplicities towards every other cell.
    fn refine(&self, mut cells: Partition) -> Partition {
        loop {
            let mut cell_of = vec![0usize; self.n];
            for (ci, c) in cells.iter().enumerate() {
                for &v in c {
                    cell_of[v as usize] = ci;
                }
            }
            let mut changed = false;
            let mut next: Partition = Vec::with_capacity(cells.len());
            for c in &cells {
                if c.len() == 1 {
                    next.push(c.clone());
                    continue;
                }
                let mut keyed: Vec<(Vec<(usize, u8)>, u8)> = c
                    .iter()
                    .map(|&v| {
                        let row = &self.adj[v as usize * self.n..(v as usize + 1) * self.n];
                        let mut sig: Vec<(usize, u8)> = row
                            .iter()
                            .enumerate()
                            .filter(|(w, &m)| m > 0 && *w != v as usize)
                            .map(|(w, &m)| (cell_of[w], m))
                            .collect();
                        sig.sort_unstable();
                        (sig, v)
                    })
                    .collect();
                keyed.sort();
                let before = next.len();
                for (i, (sig, v)) in keyed.iter().enumerate() {
                    if i == 0 || keyed[i - 1].0 != *sig {
                        next.push(Vec::new());
                    }
                    next.last_mut().unwrap().push(*v);
                }
                if next.len() - before > 1 {
                    changed = true;
                }
            }
            cells = next;
            if !changed {
                return cells;
            }
        }
    }

    fn certificate(&self, lab: &[u8]) -> Vec<Edge> {
        let mut cert: Vec<Edge> = self
            .edges
            .iter()
            .map(|&(u, v)| {
                let (a, b) = (lab[u as usize], lab[v as usize]);
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        cert.sort_unstable();
        cert
    }

    fn record_automorphism(&mut self, from: &[u8], to: &[u8]) {
        // gamma = from^-1 . to
        let mut inv = vec![0u8; self.n];
        for (v, &l) in from.iter().enumerate() {
            inv[l as usize] = v as u8;
        }
        let gamma: Vec<u8> = to.iter().map(|&l| inv[l as usize]).collect();
        if gamma.iter().enumerate().any(|(i, &x)| i != x as usize) {
            self.automorphisms.push(gamma);
        }
    }

    fn leaf(&mut self, cells: &Partition) {
        let mut lab = vec![0u8; self.n];
        for (i, c) in cells.iter().enumerate() {
            lab[c[0] as usize] = i as u8;
        }
        let cert = self.certificate(&lab);
        match &self.first {
            None => {
                self.first = Some((lab.clone(), cert.clone()));
                self.best = Some((lab, cert));
                return;
            }
            Some((flab, fcert)) if *fcert == cert => {
                let flab = flab.clone();
                self.record_automorphism(&flab, &lab);
                return;
            }
            _ => {}
        }
        let (blab, bcert) = self.best.as_ref().unwrap();
        match cert.cmp(bcert) {
            Ordering::Less => self.best = Some((lab, cert)),
            Ordering::Equal => {
                let blab = blab.clone();
                self.record_automorphism(&blab, &lab);
            }
            Ordering::Greater => {}
        }
    }

    fn explore(&mut self, cells: Partition, path: &mut Vec<u8>) {
        let Some(target) = cells.iter().position(|c| c.len() > 1) else {
            self.leaf(&cells);
            return;
        };
        let mut tried: Vec<u8> = Vec::new();
        for &w in &cells[target] {
            if !tried.is_empty() && self.equivalent_to_tried(path, &tried, w) {
                continue;
            }
            tried.push(w);
            let mut child = cells.clone();
            let rest: Vec<u8> = child[target].iter().copied().filter(|&x| x != w).collect();
            child[target] = vec![w];
            child.insert(target + 1, rest);
            let child = self.refine(child);
            path.push(w);
            self.explore(child, path);
            path.pop();
        }
    }

    /// Whether `w` lies in the orbit of an already explored sibling under the
    /// automorphisms found so far that fix `path` pointwise.
    fn equivalent_to_tried(&self, path: &[u8], tried: &[u8], w: u8) -> bool {
        let mut parent: Vec<usize> = (0..self.n).collect();
        let mut any = false;
        for gamma in &self.automorphisms {
            if path.iter().any(|&x| gamma[x as usize] != x) {
                continue;
            }
            any = true;
            for v in 0..self.n {
                let (a, b) = (find(&mut parent, v), find(&mut parent, gamma[v] as usize));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        if !any {
            return false;
        }
        let rw = find(&mut parent, w as usize);
        tried.iter().any(|&t| find(&mut parent, t as usize) == rw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta() -> Multigraph {
        Multigraph::new(2, [(0, 1), (0, 1), (0, 1)]).unwrap()
    }

    fn k4() -> Multigraph {
        Multigraph::new(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    fn permute(g: &Multigraph, perm: &[usize]) -> Multigraph {
        Multigraph::new(
            g.vertex_count(),
            g.edges()
                .iter()
                .map(|&(u, v)| (perm[u as usize], perm[v as usize])),
        )
        .unwrap()
    }

    fn all_perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in all_perms(n - 1) {
            for i in 0..n {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn text_format_round_trip() {
        let g: Multigraph = "V=4 E=0-1,0-1,2-3,0-2,1-3,2-3".parse().unwrap();
        assert_eq!(g.to_string(), "V=4 E=0-1,0-1,0-2,1-3,2-3,2-3");
        assert_eq!(g.to_string().parse::<Multigraph>().unwrap(), g);
        let empty: Multigraph = "V=1 E=".parse().unwrap();
        assert_eq!(empty.edge_count(), 0);
        assert!("V=2 E=0-2".parse::<Multigraph>().is_err());
        assert!("E=0-1".parse::<Multigraph>().is_err());
    }

    #[test]
    fn classify_small_graphs() {
        let c = classify(&theta(), 2);
        assert_eq!((c.rank, c.degree, c.admissible), (Some(2), 0, true));
        let c = classify(&k4(), 3);
        assert_eq!((c.rank, c.degree, c.admissible), (Some(3), 0, true));
        assert!(!classify(&k4(), 2).admissible);

        let rose = Multigraph::new(1, [(0, 0), (0, 0)]).unwrap();
        let c = classify(&rose, 2);
        assert!(!c.loopless && !c.admissible);
        assert_eq!(c.rank, Some(2));
        assert!(c.bridgeless);

        let dumbbell = Multigraph::new(2, [(0, 0), (0, 1), (1, 1)]).unwrap();
        let c = classify(&dumbbell, 2);
        assert!(c.connected && !c.bridgeless);

        let split = Multigraph::new(4, [(0, 1), (0, 1), (0, 1), (2, 3), (2, 3), (2, 3)]).unwrap();
        let c = classify(&split, 4);
        assert!(!c.connected && !c.admissible);
        assert_eq!(c.rank, None);
    }

    #[test]
    fn contract_theta_and_k4() {
        let c = contract_edges(&theta(), &[1]).unwrap();
        assert_eq!(c.graph.to_string(), "V=1 E=0-0,0-0");
        assert_eq!(c.edge_map, vec![Some(0), None, Some(1)]);

        let c = contract_edges(&k4(), &[0]).unwrap();
        assert_eq!(c.graph.vertex_count(), 3);
        assert_eq!(c.graph.edge_count(), 5);
        let mut val = c.graph.valences();
        val.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(val, vec![4, 3, 3]);
        assert_eq!(classify(&c.graph, 3).degree, 1);
        assert!(contract_edges(&k4(), &[6]).is_err());
    }

    #[test]
    fn contraction_keeps_edge_identity() {
        let g = k4();
        let c = contract_edges(&g, &[0, 5]).unwrap();
        for (old, new) in c.edge_map.iter().enumerate() {
            if let Some(new) = new {
                // Endpoints must be the images of the old endpoints.
                let (u, v) = g.edge(old);
                let (a, b) = c.graph.edge(*new);
                let merged = |x: u8| match x {
                    0 | 1 => 0,
                    2 | 3 => 1,
                    _ => unreachable!(),
                };
                let mut want = [merged(u), merged(v)];
                want.sort_unstable();
                assert_eq!([a, b], want);
            }
        }
    }

    #[test]
    fn theta_canonical_and_automorphisms() {
        let cls = canonical_form(&theta());
        assert_eq!(cls.canon(), &theta());
        // vertex swap times Sym(3) on the parallel edges
        assert_eq!(cls.group_order(), 12);
        let mut edge_perms = std::collections::HashSet::new();
        // Closing only the edge action must give all of Sym(3).
        let mut queue = vec![vec![0u8, 1, 2]];
        edge_perms.insert(vec![0u8, 1, 2]);
        while let Some(p) = queue.pop() {
            for g in cls.edge_perm_generators() {
                let q: Vec<u8> = p.iter().map(|&x| g[x as usize]).collect();
                if edge_perms.insert(q.clone()) {
                    queue.push(q);
                }
            }
        }
        assert_eq!(edge_perms.len(), 6);
    }

    #[test]
    fn k4_key_stable_under_all_relabelings() {
        let key = canonical_form(&k4()).key().clone();
        for p in all_perms(4) {
            assert_eq!(canonical_form(&permute(&k4(), &p)).key(), &key);
        }
        assert_eq!(canonical_form(&k4()).group_order(), 24);
    }

    #[test]
    fn generators_preserve_canon() {
        let g: Multigraph = "V=4 E=0-1,0-1,0-2,1-3,2-3,2-3".parse().unwrap();
        let cls = canonical_form(&g);
        let canon = cls.canon();
        for a in cls.generators() {
            let (img, _) = canon.relabel(&a.vertices);
            assert_eq!(&img, canon);
            for (i, &j) in a.edges.iter().enumerate() {
                let (u, v) = canon.edge(i);
                let (x, y) = (a.vertices[u as usize], a.vertices[v as usize]);
                let want = if x <= y { (x, y) } else { (y, x) };
                assert_eq!(canon.edge(j as usize), want);
            }
        }
        // doubled 4-cycle: dihedral of order 4 on vertices, times two parallel swaps
        assert_eq!(cls.group_order(), 16);
    }

    #[test]
    fn relabeling_maps_input_onto_canon() {
        let g: Multigraph = "V=4 E=0-1,0-2,0-3,1-2,1-3,2-3,2-3"
            .parse::<Multigraph>()
            .unwrap();
        let (cls, lab) = canonical_labeling(&g);
        for (i, &(u, v)) in g.edges().iter().enumerate() {
            let (a, b) = (lab.vertices[u as usize], lab.vertices[v as usize]);
            let want = if a <= b { (a, b) } else { (b, a) };
            assert_eq!(cls.canon().edge(lab.edges[i]), want);
        }
        let mut seen = lab.edges.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..g.edge_count()).collect::<Vec<_>>());
    }

    #[test]
    fn canonical_form_is_idempotent() {
        let g: Multigraph = "V=3 E=0-0,0-1,0-2,1-2,1-2".parse().unwrap();
        let cls = canonical_form(&g);
        let again = canonical_form(cls.canon());
        assert_eq!(again.key(), cls.key());
        assert_eq!(again.canon(), cls.canon());
    }

    #[test]
    fn non_isomorphic_graphs_get_distinct_keys() {
        let a: Multigraph = "V=4 E=0-1,0-1,0-2,1-3,2-3,2-3".parse().unwrap();
        let b: Multigraph = "V=4 E=0-1,0-1,0-2,1-2,2-3,3-3".parse().unwrap();
        assert_ne!(canonical_form(&a).key(), canonical_form(&b).key());
        assert_ne!(canonical_form(&a).key(), canonical_form(&k4()).key());
    }
}
