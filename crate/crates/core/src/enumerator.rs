//! Isomorphism-class representatives of admissible graphs of a given rank.
//!
//! Trivalent graphs are grown one rank at a time: every bridgeless loopless
//! cubic multigraph of rank `n + 1` arises from one of rank `n` by
//! subdividing two edges (or one edge twice) and joining the two new
//! vertices. Graphs of higher degree are enumerated directly as labeled
//! multiplicity matrices with a non-increasing valence sequence.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::multigraph::{canonical_form, classify, CanonicalKey, GraphClass, Multigraph};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EnumMode {
    Trivalent,
    /// Every admissible graph of degree at most the bound.
    MaxDegree(usize),
}

#[derive(Clone, Copy, Debug)]
pub struct EnumSpec {
    pub n: usize,
    pub mode: EnumMode,
    /// Admit graphs with loops (the codomain closure used by the full
    /// complex); never relevant for trivalent graphs, which are loopless
    /// once bridgeless.
    pub allow_loops: bool,
    /// Abort once more classes than this have been found.
    pub max_classes: Option<usize>,
}

impl EnumSpec {
    pub fn trivalent(n: usize) -> Self {
        EnumSpec {
            n,
            mode: EnumMode::Trivalent,
            allow_loops: false,
            max_classes: None,
        }
    }

    pub fn max_degree(n: usize, d: usize) -> Self {
        EnumSpec {
            n,
            mode: EnumMode::MaxDegree(d),
            allow_loops: false,
            max_classes: None,
        }
    }

    pub fn validate(&self) -> Result<(), EnumError> {
        if self.n < 2 {
            return Err(EnumError::InvalidSpec(format!("rank {} < 2", self.n)));
        }
        if let EnumMode::MaxDegree(d) = self.mode {
            if d > 2 * self.n - 3 {
                return Err(EnumError::InvalidSpec(format!(
                    "degree bound {d} exceeds 2n-3 = {}",
                    2 * self.n - 3
                )));
            }
        }
        Ok(())
    }

    pub fn mode_tag(&self) -> String {
        let base = match self.mode {
            EnumMode::Trivalent => "trivalent".to_string(),
            EnumMode::MaxDegree(d) => format!("deg{d}"),
        };
        if self.allow_loops {
            base + "-loops"
        } else {
            base
        }
    }

    fn admits(&self, g: &Multigraph) -> bool {
        let c = classify(g, self.n);
        let degree_ok = match self.mode {
            EnumMode::Trivalent => c.degree == 0,
            EnumMode::MaxDegree(d) => c.degree <= d as i64,
        };
        c.connected
            && c.bridgeless
            && c.min_valence_ok
            && c.rank == Some(self.n)
            && degree_ok
            && (self.allow_loops || c.loopless)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnumError {
    #[error("invalid enumeration request: {0}")]
    InvalidSpec(String),
    #[error("class cap {cap} exceeded: {found} classes found at {stage}")]
    CapExceeded {
        cap: usize,
        found: usize,
        stage: String,
    },
    #[error("graph cache {path}: {reason}")]
    Cache { path: String, reason: String },
}

/// One representative per isomorphism class, sorted by canonical key.
pub fn enumerate_graphs(spec: &EnumSpec) -> Result<Vec<GraphClass>, EnumError> {
    spec.validate()?;
    match spec.mode {
        EnumMode::Trivalent => trivalent(spec),
        EnumMode::MaxDegree(d) => {
            let mut all = BTreeMap::new();
            for degree in 0..=d {
                let vertices = 2 * spec.n - 2 - degree;
                let edges = 3 * spec.n - 3 - degree;
                labeled_matrices(vertices, edges, spec.allow_loops, &mut |g| {
                    if spec.admits(&g) {
                        let cls = canonical_form(&g);
                        all.entry(cls.key().clone()).or_insert(cls);
                    }
                });
                check_cap(spec, all.len(), format!("degree {degree}"))?;
            }
            Ok(all.into_values().collect())
        }
    }
}

fn check_cap(spec: &EnumSpec, found: usize, stage: String) -> Result<(), EnumError> {
    match spec.max_classes {
        Some(cap) if found > cap => Err(EnumError::CapExceeded { cap, found, stage }),
        _ => Ok(()),
    }
}

fn theta() -> Multigraph {
    Multigraph::new(2, [(0, 1), (0, 1), (0, 1)]).unwrap()
}

fn trivalent(spec: &EnumSpec) -> Result<Vec<GraphClass>, EnumError> {
    let mut level: BTreeMap<CanonicalKey, GraphClass> = BTreeMap::new();
    let t = canonical_form(&theta());
    level.insert(t.key().clone(), t);
    for rank in 3..=spec.n {
        let parents: Vec<&GraphClass> = level.values().collect();
        let children: Vec<Vec<GraphClass>> = parents
            .par_iter()
            .map(|p| {
                let mut local = BTreeMap::new();
                for g in insertions(p.canon()) {
                    let cls = canonical_form(&g);
                    local.entry(cls.key().clone()).or_insert(cls);
                }
                local.into_values().collect()
            })
            .collect();
        let mut next = BTreeMap::new();
        for cls in children.into_iter().flatten() {
            next.entry(cls.key().clone()).or_insert(cls);
        }
        check_cap(spec, next.len(), format!("rank {rank}"))?;
        level = next;
    }
    debug_assert!(level.values().all(|c| spec.admits(c.canon())));
    Ok(level.into_values().collect())
}

/// All graphs obtained from `g` by subdividing edges `i <= j` with new
/// vertices `x`, `y` and adding the edge `x-y`.
fn insertions(g: &Multigraph) -> Vec<Multigraph> {
    let v = g.vertex_count();
    let (x, y) = (v, v + 1);
    let mut out = Vec::new();
    for i in 0..g.edge_count() {
        for j in i..g.edge_count() {
            let mut edges: Vec<(usize, usize)> = Vec::with_capacity(g.edge_count() + 3);
            for (k, &(a, b)) in g.edges().iter().enumerate() {
                if k != i && k != j {
                    edges.push((a as usize, b as usize));
                }
            }
            let (a, b) = g.edge(i);
            if i == j {
                edges.extend([(a as usize, x), (x, y), (x, y), (y, b as usize)]);
            } else {
                let (c, d) = g.edge(j);
                edges.extend([
                    (a as usize, x),
                    (x, b as usize),
                    (c as usize, y),
                    (y, d as usize),
                    (x, y),
                ]);
            }
            out.push(Multigraph::new(v + 2, edges).expect("valid insertion"));
        }
    }
    out
}

/// Calls `visit` on every labeled multigraph with `vertices` vertices and
/// `edges` edges whose valences are all at least three and non-increasing in
/// the vertex label.
pub(crate) fn labeled_matrices(
    vertices: usize,
    edges: usize,
    allow_loops: bool,
    visit: &mut dyn FnMut(Multigraph),
) {
    let mut cells = Vec::new();
    for i in 0..vertices {
        for j in i..vertices {
            cells.push((i, j));
        }
    }
    let mut state = MatrixState {
        vertices,
        allow_loops,
        cells,
        counts: Vec::new(),
        degree: vec![0; vertices],
    };
    state.fill(0, edges, visit);
}

struct MatrixState {
    vertices: usize,
    allow_loops: bool,
    cells: Vec<(usize, usize)>,
    counts: Vec<usize>,
    degree: Vec<usize>,
}

impl MatrixState {
    fn fill(&mut self, cell: usize, remaining: usize, visit: &mut dyn FnMut(Multigraph)) {
        if cell == self.cells.len() {
            if remaining == 0 {
                let mut edges = Vec::new();
                for (k, &(i, j)) in self.cells.iter().enumerate() {
                    for _ in 0..self.counts[k] {
                        edges.push((i, j));
                    }
                }
                visit(Multigraph::new(self.vertices, edges).unwrap());
            }
            return;
        }
        let (i, j) = self.cells[cell];
        let max = if i == j && !self.allow_loops {
            0
        } else {
            remaining
        };
        for m in 0..=max {
            let add = if i == j { 2 * m } else { m };
            self.degree[i] += add;
            if i != j {
                self.degree[j] += m;
            }
            self.counts.push(m);
            let row_done = j == self.vertices - 1;
            let ok = !row_done
                || (self.degree[i] >= 3 && (i == 0 || self.degree[i] <= self.degree[i - 1]));
            if ok {
                self.fill(cell + 1, remaining - m, visit);
            }
            self.counts.pop();
            self.degree[i] -= add;
            if i != j {
                self.degree[j] -= m;
            }
        }
    }
}

/// Writes `graphs-n<k>-<mode>.txt` (one canonical graph per line) and its
/// `.count` sidecar.
pub fn write_graph_cache(
    dir: &Path,
    spec: &EnumSpec,
    graphs: &[GraphClass],
) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let path = graph_cache_path(dir, spec);
    let mut out = std::io::BufWriter::new(fs::File::create(&path)?);
    for g in graphs {
        writeln!(out, "{}", g.canon())?;
    }
    out.flush()?;
    fs::write(path.with_extension("count"), format!("{}\n", graphs.len()))
}

pub fn graph_cache_path(dir: &Path, spec: &EnumSpec) -> std::path::PathBuf {
    dir.join(format!("graphs-n{}-{}.txt", spec.n, spec.mode_tag()))
}

/// Reads a graph cache written by [`write_graph_cache`]; `Ok(None)` if absent.
pub fn read_graph_cache(dir: &Path, spec: &EnumSpec) -> Result<Option<Vec<GraphClass>>, EnumError> {
    let path = graph_cache_path(dir, spec);
    let err = |reason: String| EnumError::Cache {
        path: path.display().to_string(),
        reason,
    };
    let Ok(file) = fs::File::open(&path) else {
        return Ok(None);
    };
    let expected: usize = fs::read_to_string(path.with_extension("count"))
        .map_err(|e| err(e.to_string()))?
        .trim()
        .parse()
        .map_err(|_| err("bad count sidecar".into()))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| err(e.to_string()))?;
        let g: Multigraph = line
            .parse()
            .map_err(|e: crate::GraphError| err(e.to_string()))?;
        let cls = canonical_form(&g);
        if cls.canon() != &g {
            return Err(err(format!("line is not in canonical form: {line}")));
        }
        out.push(cls);
    }
    if out.len() != expected {
        return Err(err(format!("{} lines, sidecar says {expected}", out.len())));
    }
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_trivalent_counts() {
        let g2 = enumerate_graphs(&EnumSpec::trivalent(2)).unwrap();
        assert_eq!(g2.len(), 1);
        assert_eq!(g2[0].canon().to_string(), "V=2 E=0-1,0-1,0-1");
        for n in 2..=5 {
            let gs = enumerate_graphs(&EnumSpec::trivalent(n)).unwrap();
            for g in &gs {
                assert_eq!(g.canon().vertex_count(), 2 * n - 2);
                assert_eq!(g.canon().edge_count(), 3 * n - 3);
                assert!(classify(g.canon(), n).admissible);
            }
            let mut keys: Vec<_> = gs.iter().map(|g| g.key().clone()).collect();
            let sorted = keys.clone();
            keys.dedup();
            assert_eq!(keys, sorted);
            let mut resorted = sorted.clone();
            resorted.sort();
            assert_eq!(resorted, sorted);
        }
    }

    #[test]
    fn max_degree_zero_matches_trivalent() {
        for n in 2..=4 {
            let a = enumerate_graphs(&EnumSpec::trivalent(n)).unwrap();
            let b = enumerate_graphs(&EnumSpec::max_degree(n, 0)).unwrap();
            let ka: Vec<_> = a.iter().map(|g| g.key().clone()).collect();
            let kb: Vec<_> = b.iter().map(|g| g.key().clone()).collect();
            assert_eq!(ka, kb);
        }
    }

    #[test]
    fn loops_enlarge_rank_two() {
        let mut spec = EnumSpec::max_degree(2, 1);
        assert_eq!(enumerate_graphs(&spec).unwrap().len(), 1);
        spec.allow_loops = true;
        // theta and the two-petal rose
        assert_eq!(enumerate_graphs(&spec).unwrap().len(), 2);
    }

    #[test]
    fn invalid_specs_and_caps() {
        assert!(enumerate_graphs(&EnumSpec::trivalent(1)).is_err());
        assert!(enumerate_graphs(&EnumSpec::max_degree(3, 4)).is_err());
        let mut spec = EnumSpec::trivalent(4);
        spec.max_classes = Some(1);
        assert!(matches!(
            enumerate_graphs(&spec),
            Err(EnumError::CapExceeded { .. })
        ));
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = EnumSpec::trivalent(4);
        let gs = enumerate_graphs(&spec).unwrap();
        assert!(read_graph_cache(dir.path(), &spec).unwrap().is_none());
        write_graph_cache(dir.path(), &spec, &gs).unwrap();
        let back = read_graph_cache(dir.path(), &spec).unwrap().unwrap();
        assert_eq!(back.len(), gs.len());
        assert!(back.iter().zip(&gs).all(|(a, b)| a.key() == b.key()));
    }
}
