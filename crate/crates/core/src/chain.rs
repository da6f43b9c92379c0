//! Differentials of the forested graph complex as sparse integer matrices.
//!
//! On a forested graph `(G, (e_1, ..., e_p))` the contraction differential is
//! `sum_i (-1)^i (G/e_i, forest without e_i)` and the removal differential is
//! `sum_i (-1)^i (G, forest without e_i)`; the full differential is their
//! difference. Contraction keeps `G / forest` fixed, so its matrix is block
//! diagonal with one block per fully contracted graph.
//!
//! Contraction targets are kept even when they carry loops: a forest edge
//! with a parallel partner contracts to a graph with a loop, and those graphs
//! are genuine generators of the complex.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use thiserror::Error;

use crate::forests::{forest_basis, normalize_unchecked, ForestKey, ForestedGraph};
use crate::multigraph::{
    canonical_form, canonical_labeling, contract_edges, CanonicalKey, GraphClass, Multigraph,
};

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("boundary target {0} is missing from the codomain basis")]
    MissingTarget(String),
    #[error("malformed {what}: {detail}")]
    Parse { what: &'static str, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sparse integer matrix stored as `(row, col, value)` triplets sorted by
/// `(col, row)`, without duplicates or zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseIntMat {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, i64)>,
    /// Codomain generator of each row, when the rows have a meaning.
    pub row_labels: Vec<ForestKey>,
}

impl SparseIntMat {
    /// Sorts, sums duplicates and drops zeros.
    pub fn new(rows: usize, cols: usize, mut entries: Vec<(usize, usize, i64)>) -> Self {
        entries.sort_unstable_by_key(|&(r, c, _)| (c, r));
        let mut merged: Vec<(usize, usize, i64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            debug_assert!(
                r < rows && c < cols,
                "entry ({r}, {c}) outside {rows}x{cols}"
            );
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != 0);
        SparseIntMat {
            rows,
            cols,
            entries: merged,
            row_labels: Vec::new(),
        }
    }

    pub fn with_labels(mut self, labels: Vec<ForestKey>) -> Self {
        assert_eq!(labels.len(), self.rows);
        self.row_labels = labels;
        self
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry ranges of each column.
    pub fn column_slices(&self) -> Vec<Range<usize>> {
        let mut out = vec![0..0; self.cols];
        let mut i = 0;
        while i < self.entries.len() {
            let c = self.entries[i].1;
            let start = i;
            while i < self.entries.len() && self.entries[i].1 == c {
                i += 1;
            }
            out[c] = start..i;
        }
        out
    }

    /// Integer product `self * other`.
    pub fn mul(&self, other: &SparseIntMat) -> SparseIntMat {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let by_col = self.column_slices();
        let mut entries = Vec::new();
        for &(k, j, b) in &other.entries {
            for &(i, _, a) in &self.entries[by_col[k].clone()] {
                entries.push((i, j, a * b));
            }
        }
        SparseIntMat::new(self.rows, other.cols, entries)
    }

    /// Selects columns and renumbers them in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> SparseIntMat {
        let by_col = self.column_slices();
        let mut entries = Vec::new();
        for (j, &c) in cols.iter().enumerate() {
            for &(r, _, v) in &self.entries[by_col[c].clone()] {
                entries.push((r, j, v));
            }
        }
        SparseIntMat::new(self.rows, cols.len(), entries)
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &SparseIntMat) -> SparseIntMat {
        assert_eq!(self.cols, other.cols);
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().map(|&(r, c, v)| (r + self.rows, c, v)));
        SparseIntMat::new(self.rows + other.rows, self.cols, entries)
    }

    /// Header `rows cols nnz`, then one `row col value` line per entry.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", self.rows, self.cols, self.nnz())?;
        for &(r, c, v) in &self.entries {
            writeln!(w, "{r} {c} {v}")?;
        }
        Ok(())
    }

    pub fn read_triplets<R: BufRead>(r: R) -> Result<SparseIntMat, ChainError> {
        let bad = |detail: String| ChainError::Parse {
            what: "matrix",
            detail,
        };
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))??;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(header.clone())))
            .collect::<Result<_, _>>()?;
        let [rows, cols, nnz] = nums[..] else {
            return Err(bad(header));
        };
        let mut entries = Vec::with_capacity(nnz);
        for line in lines {
            let line = line?;
            let t: Vec<&str> = line.split_whitespace().collect();
            let [r, c, v] = t[..] else {
                return Err(bad(line));
            };
            let (r, c, v): (usize, usize, i64) = (
                r.parse().map_err(|_| bad(line.clone()))?,
                c.parse().map_err(|_| bad(line.clone()))?,
                v.parse().map_err(|_| bad(line.clone()))?,
            );
            if r >= rows || c >= cols {
                return Err(bad(line));
            }
            entries.push((r, c, v));
        }
        if entries.len() != nnz {
            return Err(bad(format!(
                "expected {nnz} entries, found {}",
                entries.len()
            )));
        }
        Ok(SparseIntMat::new(rows, cols, entries))
    }

    pub fn write_row_labels<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for l in &self.row_labels {
            writeln!(w, "{l}")?;
        }
        Ok(())
    }
}

/// Columns sharing one fully contracted graph.
#[derive(Clone, Debug)]
pub struct Block {
    pub key: CanonicalKey,
    pub columns: Vec<usize>,
}

/// Basis of the degree-`p` part of the complex with `p` forest edges, i.e. of
/// forested graphs on trivalent graphs.
#[derive(Clone, Debug)]
pub struct ChainBasis {
    pub n: usize,
    pub p: usize,
    pub elements: Vec<ForestedGraph>,
    index: HashMap<ForestKey, usize>,
    blocks: Vec<Block>,
}

impl ChainBasis {
    /// Forest bases of all `graphs`, concatenated in graph order.
    pub fn build(graphs: &[Arc<GraphClass>], n: usize, p: usize) -> Self {
        let parts: Vec<Vec<ForestedGraph>> =
            graphs.par_iter().map(|g| forest_basis(g, p)).collect();
        Self::from_elements(n, p, parts.into_iter().flatten().collect())
    }

    /// As [`ChainBasis::build`], but gives up once more than `cap` elements
    /// have been produced; the error carries the count reached.
    pub fn build_capped(
        graphs: &[Arc<GraphClass>],
        n: usize,
        p: usize,
        cap: usize,
    ) -> Result<Self, usize> {
        let count = AtomicUsize::new(0);
        let parts: Option<Vec<Vec<ForestedGraph>>> = graphs
            .par_iter()
            .map(|g| {
                if count.load(Ordering::Relaxed) > cap {
                    return None;
                }
                let part = forest_basis(g, p);
                let total = count.fetch_add(part.len(), Ordering::Relaxed) + part.len();
                (total <= cap).then_some(part)
            })
            .collect();
        match parts {
            Some(parts) => Ok(Self::from_elements(
                n,
                p,
                parts.into_iter().flatten().collect(),
            )),
            None => Err(count.into_inner()),
        }
    }

    pub fn from_elements(n: usize, p: usize, elements: Vec<ForestedGraph>) -> Self {
        let index: HashMap<ForestKey, usize> = elements
            .iter()
            .enumerate()
            .map(|(i, e)| (e.key(), i))
            .collect();
        assert_eq!(index.len(), elements.len(), "duplicate basis elements");
        let mut by_block: HashMap<&CanonicalKey, Vec<usize>> = HashMap::new();
        for (i, e) in elements.iter().enumerate() {
            by_block.entry(&e.block_key).or_default().push(i);
        }
        let mut blocks: Vec<Block> = by_block
            .into_iter()
            .map(|(k, columns)| Block {
                key: k.clone(),
                columns,
            })
            .collect();
        blocks.sort_by(|a, b| a.key.cmp(&b.key));
        ChainBasis {
            n,
            p,
            elements,
            index,
            blocks,
        }
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn index_of(&self, key: &ForestKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn keys(&self) -> Vec<ForestKey> {
        self.elements.iter().map(|e| e.key()).collect()
    }

    /// One line per element: `<graph-text> | F=<i1>,<i2>,...`.
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in &self.elements {
            writeln!(w, "{e}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R, n: usize, p: usize) -> Result<Self, ChainError> {
        let bad = |detail: String| ChainError::Parse {
            what: "basis",
            detail,
        };
        let mut classes: HashMap<String, Arc<GraphClass>> = HashMap::new();
        let mut elements = Vec::new();
        for line in r.lines() {
            let line = line?;
            let (graph, forest) = line.split_once(" | F=").ok_or_else(|| bad(line.clone()))?;
            let class = match classes.get(graph) {
                Some(c) => c.clone(),
                None => {
                    let g: Multigraph = graph.parse().map_err(|_| bad(line.clone()))?;
                    let c = Arc::new(canonical_form(&g));
                    if c.canon() != &g {
                        return Err(bad(format!("graph not canonical: {line}")));
                    }
                    classes.insert(graph.to_string(), c.clone());
                    c
                }
            };
            let forest: Vec<u8> = if forest.is_empty() {
                Vec::new()
            } else {
                forest
                    .split(',')
                    .map(|t| t.parse().map_err(|_| bad(line.clone())))
                    .collect::<Result<_, _>>()?
            };
            if forest.len() != p
                || forest
                    .iter()
                    .any(|&e| e as usize >= class.canon().edge_count())
            {
                return Err(bad(line.clone()));
            }
            elements.push(ForestedGraph::new(class, forest));
        }
        Ok(Self::from_elements(n, p, elements))
    }
}

/// Canonical form of `G / e` for one edge, with the map from edge positions
/// of `G` to those of the canonical quotient.
#[derive(Clone, Debug)]
pub struct EdgeContraction {
    pub class: Arc<GraphClass>,
    pub edge_map: Vec<Option<u8>>,
}

/// Memo of single-edge contractions per graph class.
#[derive(Default)]
pub struct Contractor {
    cache: RwLock<HashMap<CanonicalKey, Arc<Vec<Option<EdgeContraction>>>>>,
}

impl Contractor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contractions(&self, g: &GraphClass) -> Arc<Vec<Option<EdgeContraction>>> {
        if let Some(v) = self.cache.read().unwrap().get(g.key()) {
            return v.clone();
        }
        let canon = g.canon();
        let all: Vec<Option<EdgeContraction>> = (0..canon.edge_count())
            .map(|e| {
                if canon.is_loop(e) {
                    return None;
                }
                let c = contract_edges(canon, &[e]).expect("edge in range");
                let (class, lab) = canonical_labeling(&c.graph);
                let edge_map = c
                    .edge_map
                    .iter()
                    .map(|m| m.map(|pos| lab.edges[pos] as u8))
                    .collect();
                Some(EdgeContraction {
                    class: Arc::new(class),
                    edge_map,
                })
            })
            .collect();
        let all = Arc::new(all);
        self.cache
            .write()
            .unwrap()
            .entry(g.key().clone())
            .or_insert(all)
            .clone()
    }
}

/// A normalized, nonzero summand of a boundary.
#[derive(Clone, Debug)]
pub struct Term {
    pub coeff: i64,
    pub graph: Arc<GraphClass>,
    pub forest: Vec<u8>,
}

impl Term {
    pub fn key(&self) -> ForestKey {
        ForestKey::new(self.graph.key(), &self.forest)
    }
}

fn alternating(i: usize) -> i64 {
    // positions are 1-based in the boundary formulas
    if (i + 1) % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Summands of the contraction differential on `(graph, forest)`, with the
/// forest in the given order.
pub fn contract_terms(graph: &GraphClass, forest: &[u8], contractor: &Contractor) -> Vec<Term> {
    let table = contractor.contractions(graph);
    let mut out = Vec::with_capacity(forest.len());
    for (i, &e) in forest.iter().enumerate() {
        let ec = table[e as usize]
            .as_ref()
            .expect("forest edges are not loops");
        let rest: Vec<u8> = forest
            .iter()
            .filter(|&&f| f != e)
            .map(|&f| ec.edge_map[f as usize].expect("only e is contracted"))
            .collect();
        let r = normalize_unchecked(&ec.class, &rest);
        if r.sign != 0 {
            out.push(Term {
                coeff: alternating(i) * r.sign as i64,
                graph: ec.class.clone(),
                forest: r.forest,
            });
        }
    }
    out
}

/// Summands of the removal differential on `(graph, forest)`.
pub fn remove_terms(graph: &Arc<GraphClass>, forest: &[u8]) -> Vec<Term> {
    let mut out = Vec::with_capacity(forest.len());
    for (i, &e) in forest.iter().enumerate() {
        let rest: Vec<u8> = forest.iter().copied().filter(|&f| f != e).collect();
        let r = normalize_unchecked(graph, &rest);
        if r.sign != 0 {
            out.push(Term {
                coeff: alternating(i) * r.sign as i64,
                graph: graph.clone(),
                forest: r.forest,
            });
        }
    }
    out
}

/// Integer linear combination of normalized forested graphs.
pub type LinComb = HashMap<ForestKey, Term>;

pub fn add_terms(acc: &mut LinComb, terms: impl IntoIterator<Item = Term>, scale: i64) {
    for t in terms {
        let key = t.key();
        let coeff = t.coeff * scale;
        match acc.get_mut(&key) {
            Some(existing) => existing.coeff += coeff,
            None => {
                acc.insert(key, Term { coeff, ..t });
            }
        }
    }
    acc.retain(|_, t| t.coeff != 0);
}

/// The contraction differential on the columns of one block, with rows
/// hash-consed in order of first occurrence and then sorted by key.
#[derive(Clone, Debug)]
pub struct BlockMatrix {
    pub key: CanonicalKey,
    /// Global column index of each local column.
    pub columns: Vec<usize>,
    pub matrix: SparseIntMat,
}

fn assemble_block(b: &ChainBasis, block: &Block, contractor: &Contractor) -> BlockMatrix {
    let mut rows: HashMap<ForestKey, usize> = HashMap::new();
    let mut labels: Vec<ForestKey> = Vec::new();
    let mut entries = Vec::new();
    for (local, &col) in block.columns.iter().enumerate() {
        let e = &b.elements[col];
        for t in contract_terms(&e.graph, &e.forest, contractor) {
            let key = t.key();
            let row = *rows.entry(key.clone()).or_insert_with(|| {
                labels.push(key);
                labels.len() - 1
            });
            entries.push((row, local, t.coeff));
        }
    }
    let m = SparseIntMat::new(labels.len(), block.columns.len(), entries);
    // drop rows that cancelled and renumber by key
    let mut live = vec![false; labels.len()];
    for &(r, _, _) in &m.entries {
        live[r] = true;
    }
    let mut order: Vec<usize> = (0..labels.len()).filter(|&r| live[r]).collect();
    order.sort_by(|&x, &y| labels[x].cmp(&labels[y]));
    let mut renumber = vec![usize::MAX; labels.len()];
    for (new, &old) in order.iter().enumerate() {
        renumber[old] = new;
    }
    let entries = m
        .entries
        .iter()
        .map(|&(r, c, v)| (renumber[r], c, v))
        .collect();
    let sorted_labels = order.iter().map(|&r| labels[r].clone()).collect();
    BlockMatrix {
        key: block.key.clone(),
        columns: block.columns.clone(),
        matrix: SparseIntMat::new(order.len(), block.columns.len(), entries)
            .with_labels(sorted_labels),
    }
}

/// Contraction differential, block by block.
pub fn contract_blocks(b: &ChainBasis, contractor: &Contractor) -> Vec<BlockMatrix> {
    if b.p == 0 {
        return Vec::new();
    }
    b.blocks()
        .par_iter()
        .map(|block| assemble_block(b, block, contractor))
        .collect()
}

/// Contraction differential on the whole basis; rows are the hash-consed
/// codomain generators sorted by key. For `p == 0` this is the `0 x a_0`
/// matrix.
pub fn boundary_contract(b: &ChainBasis) -> SparseIntMat {
    let contractor = Contractor::new();
    assemble_global(b, &contract_blocks(b, &contractor))
}

pub fn assemble_global(b: &ChainBasis, blocks: &[BlockMatrix]) -> SparseIntMat {
    let mut labels: Vec<(ForestKey, usize, usize)> = Vec::new();
    for (bi, blk) in blocks.iter().enumerate() {
        for (r, l) in blk.matrix.row_labels.iter().enumerate() {
            labels.push((l.clone(), bi, r));
        }
    }
    labels.sort();
    let mut global_row: Vec<Vec<usize>> = blocks.iter().map(|b| vec![0; b.matrix.rows]).collect();
    for (g, (_, bi, r)) in labels.iter().enumerate() {
        global_row[*bi][*r] = g;
    }
    let mut entries = Vec::new();
    for (bi, blk) in blocks.iter().enumerate() {
        for &(r, c, v) in &blk.matrix.entries {
            entries.push((global_row[bi][r], blk.columns[c], v));
        }
    }
    SparseIntMat::new(labels.len(), b.dim(), entries)
        .with_labels(labels.into_iter().map(|(k, _, _)| k).collect())
}

/// Removal differential from `b` into the basis `target` one degree lower.
pub fn boundary_remove(b: &ChainBasis, target: &ChainBasis) -> Result<SparseIntMat, ChainError> {
    if b.p == 0 {
        return Ok(SparseIntMat::new(0, b.dim(), Vec::new()));
    }
    let cols: Vec<Result<Vec<(usize, usize, i64)>, ChainError>> = b
        .elements
        .par_iter()
        .enumerate()
        .map(|(col, e)| {
            remove_terms(&e.graph, &e.forest)
                .into_iter()
                .map(|t| {
                    let key = t.key();
                    target
                        .index_of(&key)
                        .map(|row| (row, col, t.coeff))
                        .ok_or_else(|| ChainError::MissingTarget(key.to_string()))
                })
                .collect()
        })
        .collect();
    let mut entries = Vec::new();
    for c in cols {
        entries.extend(c?);
    }
    Ok(SparseIntMat::new(target.dim(), b.dim(), entries).with_labels(target.keys()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerator::{enumerate_graphs, EnumSpec};

    fn basis(n: usize, p: usize) -> ChainBasis {
        let graphs: Vec<Arc<GraphClass>> = enumerate_graphs(&EnumSpec::trivalent(n))
            .unwrap()
            .into_iter()
            .map(Arc::new)
            .collect();
        ChainBasis::build(&graphs, n, p)
    }

    #[test]
    fn rank_two_contraction_hits_the_rose() {
        let b1 = basis(2, 1);
        assert_eq!(b1.dim(), 1);
        let m = boundary_contract(&b1);
        assert_eq!(m.rows, 1);
        assert_eq!(m.entries, vec![(0, 0, -1)]);
        assert_eq!(m.row_labels[0].to_string(), "V=1 E=0-0,0-0 | F=");
    }

    #[test]
    fn rank_two_removal() {
        let (b0, b1) = (basis(2, 0), basis(2, 1));
        let m = boundary_remove(&b1, &b0).unwrap();
        assert_eq!((m.rows, m.cols), (1, 1));
        assert_eq!(m.entries, vec![(0, 0, -1)]);
        let z = boundary_contract(&b0);
        assert_eq!((z.rows, z.cols), (0, 1));
    }

    #[test]
    fn removal_on_k4_before_normalization() {
        let k4 = Arc::new(canonical_form(
            &"V=4 E=0-1,0-2,0-3,1-2,1-3,2-3".parse().unwrap(),
        ));
        // (K4, (e1, e2)) -> -(K4, (e2)) + (K4, (e1)); all single edges of K4
        // are equivalent, so the two terms cancel after normalization.
        let terms = remove_terms(&k4, &[0, 1]);
        assert_eq!(terms.len(), 2);
        assert_eq!(terms[0].coeff, -1);
        assert_eq!(terms[1].coeff, 1);
        let mut acc = LinComb::new();
        add_terms(&mut acc, terms, 1);
        assert!(acc.is_empty());
    }

    #[test]
    fn contraction_targets_share_the_block_key() {
        let contractor = Contractor::new();
        for p in 1..=4 {
            let b = basis(4, p);
            for e in &b.elements {
                for t in contract_terms(&e.graph, &e.forest, &contractor) {
                    let fg = ForestedGraph::new(t.graph.clone(), t.forest.clone());
                    assert_eq!(fg.block_key, e.block_key);
                }
            }
        }
    }

    #[test]
    fn block_matrices_match_global() {
        let b = basis(4, 3);
        let contractor = Contractor::new();
        let blocks = contract_blocks(&b, &contractor);
        let global = assemble_global(&b, &blocks);
        assert_eq!(global, boundary_contract(&b));
        let total: usize = blocks.iter().map(|x| x.matrix.nnz()).sum();
        assert_eq!(total, global.nnz());
        let mut labels = global.row_labels.clone();
        labels.sort();
        assert_eq!(labels, global.row_labels);
    }

    #[test]
    fn triplet_and_basis_round_trip() {
        let b = basis(3, 2);
        let m = boundary_contract(&b);
        let mut buf = Vec::new();
        m.write_triplets(&mut buf).unwrap();
        let back = SparseIntMat::read_triplets(&buf[..]).unwrap();
        assert_eq!(back.entries, m.entries);
        assert_eq!((back.rows, back.cols), (m.rows, m.cols));

        let mut buf = Vec::new();
        b.write(&mut buf).unwrap();
        let back = ChainBasis::read(&buf[..], 3, 2).unwrap();
        assert_eq!(back.keys(), b.keys());
        assert!(SparseIntMat::read_triplets(&b"2 2 1\n5 0 1\n"[..]).is_err());
    }
}
