//! Reading, writing and checking cycle vectors.
//!
//! A cycle file has one term per line, `coefficient [e1 e2 ...]`, where each
//! edge token is `x+y` (edge in the forest) or `x-y` (edge outside it), with
//! `x <= y` vertex labels counted from zero. Repeated tokens are parallel
//! edges. The forest is oriented by listing its edges in lexicographic order.
//! Blank lines and lines starting with `#` are ignored.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::chain::{
    add_terms, contract_terms, remove_terms, ChainBasis, Contractor, LinComb, Term,
};
use crate::error::ForestError;
use crate::forests::{normalize_graph, ForestKey, ForestedGraph};
use crate::multigraph::{classify, Multigraph};

#[derive(Debug, Error)]
pub enum CycleError {
    #[error("line {line}: {detail}")]
    Syntax { line: usize, detail: String },
    #[error("line {line}: {source}")]
    Forest {
        line: usize,
        #[source]
        source: ForestError,
    },
    #[error("line {line}: {term} is zero by an odd symmetry")]
    OddSymmetric { line: usize, term: String },
    #[error("line {line}: term has rank {rank} and {forest} forest edges, expected {n} and {p}")]
    Mismatch {
        line: usize,
        rank: usize,
        forest: usize,
        n: usize,
        p: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One term of a cycle vector, normalized.
#[derive(Clone, Debug)]
pub struct CycleTerm {
    pub coeff: i64,
    pub element: ForestedGraph,
}

/// Integer combination of normalized forested graphs of rank `n` with `p`
/// forest edges, sorted by key, without zero or repeated terms.
#[derive(Clone, Debug, Default)]
pub struct CycleVector {
    pub n: usize,
    pub p: usize,
    pub terms: Vec<CycleTerm>,
}

/// One unnormalized term: a coefficient, a graph, and an ordered forest
/// given by edge positions.
pub type RawTerm = (i64, Multigraph, Vec<usize>);

impl CycleVector {
    pub fn zero(n: usize, p: usize) -> Self {
        CycleVector {
            n,
            p,
            terms: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Normalizes and merges raw terms. The position of each term in `raw`
    /// is reported as its line number in errors.
    pub fn from_raw(raw: Vec<(usize, RawTerm)>) -> Result<Self, CycleError> {
        let mut shape: Option<(usize, usize)> = None;
        let mut acc: HashMap<ForestKey, (i64, ForestedGraph)> = HashMap::new();
        for (line, (coeff, g, forest)) in raw {
            let cls = classify(&g, 0);
            let Some(rank) = cls.rank else {
                return Err(CycleError::Syntax {
                    line,
                    detail: "graph is not connected".into(),
                });
            };
            let (n, p) = *shape.get_or_insert((rank, forest.len()));
            if (rank, forest.len()) != (n, p) {
                return Err(CycleError::Mismatch {
                    line,
                    rank,
                    forest: forest.len(),
                    n,
                    p,
                });
            }
            let (class, r) = normalize_graph(&g, &forest)
                .map_err(|source| CycleError::Forest { line, source })?;
            let element = ForestedGraph::new(Arc::new(class), r.forest);
            if r.sign == 0 {
                return Err(CycleError::OddSymmetric {
                    line,
                    term: element.to_string(),
                });
            }
            let entry = acc.entry(element.key()).or_insert((0, element));
            entry.0 += coeff * r.sign as i64;
        }
        let mut terms: Vec<(ForestKey, CycleTerm)> = acc
            .into_iter()
            .filter(|(_, (c, _))| *c != 0)
            .map(|(k, (coeff, element))| (k, CycleTerm { coeff, element }))
            .collect();
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        let (n, p) = shape.unwrap_or((0, 0));
        Ok(CycleVector {
            n,
            p,
            terms: terms.into_iter().map(|(_, t)| t).collect(),
        })
    }

    /// The vector with the given coordinates in `basis`.
    pub fn from_coordinates(basis: &ChainBasis, coords: &[(usize, i64)]) -> Self {
        let mut merged: HashMap<usize, i64> = HashMap::new();
        for &(i, c) in coords {
            *merged.entry(i).or_default() += c;
        }
        let mut idx: Vec<(usize, i64)> = merged.into_iter().filter(|e| e.1 != 0).collect();
        idx.sort_by(|a, b| basis.elements[a.0].key().cmp(&basis.elements[b.0].key()));
        CycleVector {
            n: basis.n,
            p: basis.p,
            terms: idx
                .into_iter()
                .map(|(i, coeff)| CycleTerm {
                    coeff,
                    element: basis.elements[i].clone(),
                })
                .collect(),
        }
    }

    /// Coordinates in `basis`, or the keys of the terms it lacks.
    pub fn coordinates(&self, basis: &ChainBasis) -> Result<Vec<(usize, i64)>, Vec<String>> {
        let mut coords = Vec::with_capacity(self.terms.len());
        let mut missing = Vec::new();
        for t in &self.terms {
            match basis.index_of(&t.element.key()) {
                Some(i) => coords.push((i, t.coeff)),
                None => missing.push(t.element.to_string()),
            }
        }
        if missing.is_empty() {
            Ok(coords)
        } else {
            Err(missing)
        }
    }
}

fn parse_edge(tok: &str, line: usize) -> Result<(usize, usize, bool), CycleError> {
    let bad = || CycleError::Syntax {
        line,
        detail: format!("bad edge token {tok:?}"),
    };
    let (split, in_forest) = match (tok.find('+'), tok.find('-')) {
        (Some(i), None) => (i, true),
        (None, Some(i)) => (i, false),
        _ => return Err(bad()),
    };
    let x: usize = tok[..split].parse().map_err(|_| bad())?;
    let y: usize = tok[split + 1..].parse().map_err(|_| bad())?;
    if x > y {
        return Err(CycleError::Syntax {
            line,
            detail: format!("edge {tok} has x > y"),
        });
    }
    if y > u8::MAX as usize {
        return Err(bad());
    }
    Ok((x, y, in_forest))
}

/// Parses one line into a raw term.
pub fn parse_line(text: &str, line: usize) -> Result<RawTerm, CycleError> {
    let syntax = |detail: &str| CycleError::Syntax {
        line,
        detail: detail.to_string(),
    };
    let (coeff, rest) = text
        .trim()
        .split_once('[')
        .ok_or_else(|| syntax("missing '['"))?;
    let coeff: i64 = coeff
        .trim()
        .parse()
        .map_err(|_| syntax("bad coefficient"))?;
    let body = rest
        .trim_end()
        .strip_suffix(']')
        .ok_or_else(|| syntax("missing ']'"))?;
    let tokens = body
        .split_whitespace()
        .map(|t| parse_edge(t, line))
        .collect::<Result<Vec<_>, _>>()?;
    if tokens.is_empty() {
        return Err(syntax("no edges"));
    }
    let vertices = tokens.iter().map(|t| t.1).max().unwrap() + 1;
    let (g, positions) = Multigraph::with_positions(vertices, tokens.iter().map(|t| (t.0, t.1)))
        .map_err(|e| CycleError::Forest {
            line,
            source: e.into(),
        })?;
    let mut forest: Vec<(usize, usize, usize)> = tokens
        .iter()
        .zip(&positions)
        .filter(|(t, _)| t.2)
        .map(|(t, &pos)| (t.0, t.1, pos))
        .collect();
    // orientation: lexicographic order of the forest edges
    forest.sort_by_key(|e| (e.0, e.1));
    Ok((coeff, g, forest.into_iter().map(|e| e.2).collect()))
}

pub fn parse_cycle<R: BufRead>(r: R) -> Result<CycleVector, CycleError> {
    let mut raw = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        raw.push((i + 1, parse_line(t, i + 1)?));
    }
    CycleVector::from_raw(raw)
}

/// Writes one line per term on the canonical graph; forest edges of a
/// normalized term are already in lexicographic order.
pub fn serialize_cycle<W: Write>(w: &CycleVector, mut out: W) -> std::io::Result<()> {
    for t in &w.terms {
        let g = t.element.graph.canon();
        let tokens: Vec<String> = g
            .edges()
            .iter()
            .enumerate()
            .map(|(i, &(u, v))| {
                let mark = if t.element.forest.contains(&(i as u8)) {
                    '+'
                } else {
                    '-'
                };
                format!("{u}{mark}{v}")
            })
            .collect();
        writeln!(out, "{} [{}]", t.coeff, tokens.join(" "))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CycleVerdict {
    pub n: usize,
    pub p: usize,
    pub terms: usize,
    pub is_in_basis: bool,
    pub missing: Vec<String>,
    pub dc_zero: bool,
    pub dr_zero: bool,
}

impl CycleVerdict {
    pub fn passes(&self) -> bool {
        self.is_in_basis && self.dc_zero && self.dr_zero
    }
}

fn boundary_is_zero(w: &CycleVector, f: impl Fn(&CycleTerm) -> Vec<Term> + Sync) -> bool {
    let parts: Vec<(i64, Vec<Term>)> = w.terms.par_iter().map(|t| (t.coeff, f(t))).collect();
    let mut acc = LinComb::new();
    for (coeff, terms) in parts {
        add_terms(&mut acc, terms, coeff);
    }
    acc.is_empty()
}

/// Checks membership in `basis` and that both differentials vanish on `w`,
/// exactly over the integers.
pub fn verify_cycle(w: &CycleVector, basis: &ChainBasis) -> CycleVerdict {
    let missing = match w.coordinates(basis) {
        Ok(_) => Vec::new(),
        Err(m) => m,
    };
    let contractor = Contractor::new();
    let dc_zero = boundary_is_zero(w, |t| {
        contract_terms(&t.element.graph, &t.element.forest, &contractor)
    });
    let dr_zero = boundary_is_zero(w, |t| remove_terms(&t.element.graph, &t.element.forest));
    CycleVerdict {
        n: if w.is_zero() { basis.n } else { w.n },
        p: if w.is_zero() { basis.p } else { w.p },
        terms: w.terms.len(),
        is_in_basis: missing.is_empty() && (w.is_zero() || (w.n, w.p) == (basis.n, basis.p)),
        missing,
        dc_zero,
        dr_zero,
    }
}
