//! Exact rank and nullspace computations.
//!
//! Over a prime field the work is done by sparse Gaussian elimination with a
//! Markowitz pivot rule; over the rationals by dense fraction-free (Bareiss)
//! elimination for ranks and dense Gauss-Jordan for nullspaces. The rational
//! routes are only meant for small matrices.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::SparseIntMat;

pub const DEFAULT_PRIMES: [u32; 2] = [65521, 65519];

/// Bit length above which rational arithmetic gives up.
pub const DEFAULT_MAX_BITS: u64 = 1 << 16;
/// Largest dense rational matrix (rows times columns) we agree to build.
pub const DEFAULT_MAX_DENSE: usize = 4_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("{0} is not an odd prime below 2^31")]
    NotPrime(u64),
    #[error("rational arithmetic exceeded {max_bits} bits")]
    Overflow { max_bits: u64 },
    #[error("dense {rows}x{cols} matrix exceeds the rational size limit")]
    TooLarge { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("elimination fill exceeded {limit} nonzeros")]
    FillExceeded { limit: usize },
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum FieldSpec {
    Rationals,
    Prime(u32),
}

impl FieldSpec {
    pub fn prime(p: u64) -> Result<Self, LinalgError> {
        if p < 3 || p >= 1 << 31 || !is_prime(p) {
            return Err(LinalgError::NotPrime(p));
        }
        Ok(FieldSpec::Prime(p as u32))
    }

    pub fn validate(&self) -> Result<(), LinalgError> {
        match *self {
            FieldSpec::Rationals => Ok(()),
            FieldSpec::Prime(p) => Self::prime(p as u64).map(|_| ()),
        }
    }
}

impl std::fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldSpec::Rationals => f.write_str("Q"),
            FieldSpec::Prime(p) => write!(f, "GF({p})"),
        }
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub(crate) fn reduce(x: i64, p: u32) -> u32 {
    x.rem_euclid(p as i64) as u32
}

fn inv_mod(a: u32, p: u32) -> u32 {
    let (mut base, mut exp, mut acc) = (a as u64, p as u64 - 2, 1u64);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p as u64;
        }
        base = base * base % p as u64;
        exp >>= 1;
    }
    acc as u32
}

/// Nullspace as sparse columns `(row index, value)` with `M * N = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct NullspaceBasis<T> {
    pub source_dim: usize,
    pub columns: Vec<Vec<(usize, T)>>,
}

impl<T> NullspaceBasis<T> {
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn empty(source_dim: usize) -> Self {
        NullspaceBasis {
            source_dim,
            columns: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Nullspace {
    Modular { p: u32, basis: NullspaceBasis<u32> },
    Rational(NullspaceBasis<BigInt>),
}

impl Nullspace {
    pub fn dim(&self) -> usize {
        match self {
            Nullspace::Modular { basis, .. } => basis.dim(),
            Nullspace::Rational(b) => b.dim(),
        }
    }
}

pub fn rank_of(m: &SparseIntMat, f: FieldSpec) -> Result<usize, LinalgError> {
    f.validate()?;
    match f {
        FieldSpec::Prime(p) => Ok(rank_mod(m, p)),
        FieldSpec::Rationals => rank_rational(m, DEFAULT_MAX_BITS),
    }
}

pub fn nullspace_of(m: &SparseIntMat, f: FieldSpec) -> Result<Nullspace, LinalgError> {
    f.validate()?;
    match f {
        FieldSpec::Prime(p) => Ok(Nullspace::Modular {
            p,
            basis: nullspace_mod(m, p),
        }),
        FieldSpec::Rationals => nullspace_rational(m, DEFAULT_MAX_BITS).map(Nullspace::Rational),
    }
}

type Row = Vec<(u32, u32)>;

fn rows_mod(m: &SparseIntMat, p: u32) -> Vec<Row> {
    let mut rows: Vec<Row> = vec![Vec::new(); m.rows];
    for &(r, c, v) in &m.entries {
        let x = reduce(v, p);
        if x != 0 {
            rows[r].push((c as u32, x));
        }
    }
    for r in rows.iter_mut() {
        r.sort_unstable_by_key(|e| e.0);
        // tolerate duplicates in hand-built input
        let mut merged: Row = Vec::with_capacity(r.len());
        for &(c, x) in r.iter() {
            match merged.last_mut() {
                Some(last) if last.0 == c => {
                    last.1 = ((last.1 as u64 + x as u64) % p as u64) as u32
                }
                _ => merged.push((c, x)),
            }
        }
        merged.retain(|e| e.1 != 0);
        *r = merged;
    }
    rows
}

/// `target -= factor * source` over GF(p), both sorted by column.
fn axpy(target: &Row, factor: u32, source: &Row, p: u32) -> Row {
    let p64 = p as u64;
    let neg = (p64 - factor as u64) % p64;
    let mut out = Vec::with_capacity(target.len() + source.len());
    let (mut i, mut j) = (0, 0);
    while i < target.len() || j < source.len() {
        let take_t = j == source.len() || (i < target.len() && target[i].0 < source[j].0);
        let take_s = i == target.len() || (j < source.len() && source[j].0 < target[i].0);
        if take_t {
            out.push(target[i]);
            i += 1;
        } else if take_s {
            let x = (neg * source[j].1 as u64 % p64) as u32;
            if x != 0 {
                out.push((source[j].0, x));
            }
            j += 1;
        } else {
            let x = ((target[i].1 as u64 + neg * source[j].1 as u64) % p64) as u32;
            if x != 0 {
                out.push((target[i].0, x));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

fn entry(row: &Row, col: u32) -> Option<u32> {
    row.binary_search_by_key(&col, |e| e.0)
        .ok()
        .map(|i| row[i].1)
}

/// Result of forward elimination over GF(p): the pivot rows, scaled so the
/// pivot is one, with their pivot columns, in elimination order. Every pivot
/// row is free of all earlier pivot columns.
#[derive(Clone, Debug)]
pub struct Echelon {
    cols: usize,
    p: u32,
    pivots: Vec<(u32, Row)>,
}

/// Rows with the fewest nonzeros examined per pivot choice.
const MARKOWITZ_CANDIDATES: usize = 4;

fn eliminate(
    mut rows: Vec<Row>,
    cols: usize,
    p: u32,
    keep: bool,
    max_fill: usize,
) -> Result<Echelon, LinalgError> {
    let mut active: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut col_count = vec![0u32; cols];
    let mut col_rows: Vec<Vec<u32>> = vec![Vec::new(); cols];
    let mut is_active = vec![false; rows.len()];
    for (r, row) in rows.iter().enumerate() {
        if row.is_empty() {
            continue;
        }
        active.insert((row.len(), r));
        is_active[r] = true;
        for &(c, _) in row {
            col_count[c as usize] += 1;
            col_rows[c as usize].push(r as u32);
        }
    }
    let mut fill: usize = rows.iter().map(|r| r.len()).sum();
    let mut pivots = Vec::new();
    while !active.is_empty() {
        // Markowitz: minimize (r - 1)(c - 1) over the shortest rows, ties by
        // (row length, row index, column index).
        let mut best: Option<((u64, usize, usize, u32), usize, u32)> = None;
        for &(len, r) in active.iter().take(MARKOWITZ_CANDIDATES) {
            for &(c, _) in &rows[r] {
                let cost = (len as u64 - 1) * (col_count[c as usize] as u64 - 1);
                let key = (cost, len, r, c);
                if best.as_ref().map_or(true, |b| key < b.0) {
                    best = Some((key, r, c));
                }
            }
        }
        let (_, pr, pc) = best.expect("active rows are nonempty");
        let prow = std::mem::take(&mut rows[pr]);
        active.remove(&(prow.len(), pr));
        is_active[pr] = false;
        for &(c, _) in &prow {
            col_count[c as usize] -= 1;
        }
        let pinv = inv_mod(entry(&prow, pc).unwrap(), p);
        let prow: Row = prow
            .into_iter()
            .map(|(c, x)| (c, (x as u64 * pinv as u64 % p as u64) as u32))
            .collect();
        let touched = std::mem::take(&mut col_rows[pc as usize]);
        for &s in &touched {
            let s = s as usize;
            if !is_active[s] {
                continue;
            }
            let Some(factor) = entry(&rows[s], pc) else {
                continue;
            };
            let old = std::mem::take(&mut rows[s]);
            active.remove(&(old.len(), s));
            let new = axpy(&old, factor, &prow, p);
            fill = fill + new.len() - old.len();
            if fill > max_fill {
                return Err(LinalgError::FillExceeded { limit: max_fill });
            }
            // update column counts and the column->row index
            let (mut i, mut j) = (0, 0);
            while i < old.len() || j < new.len() {
                if j == new.len() || (i < old.len() && old[i].0 < new[j].0) {
                    col_count[old[i].0 as usize] -= 1;
                    i += 1;
                } else if i == old.len() || new[j].0 < old[i].0 {
                    col_count[new[j].0 as usize] += 1;
                    col_rows[new[j].0 as usize].push(s as u32);
                    j += 1;
                } else {
                    i += 1;
                    j += 1;
                }
            }
            if new.is_empty() {
                is_active[s] = false;
            } else {
                active.insert((new.len(), s));
            }
            rows[s] = new;
        }
        if !keep {
            fill -= prow.len();
        }
        pivots.push((pc, if keep { prow } else { Vec::new() }));
    }
    Ok(Echelon { cols, p, pivots })
}

pub fn rank_mod(m: &SparseIntMat, p: u32) -> usize {
    rank_mod_capped(m, p, usize::MAX).expect("uncapped")
}

/// As [`rank_mod`], giving up once the working rows hold more than
/// `max_fill` nonzeros.
pub fn rank_mod_capped(m: &SparseIntMat, p: u32, max_fill: usize) -> Result<usize, LinalgError> {
    Ok(eliminate(rows_mod(m, p), m.cols, p, false, max_fill)?
        .pivots
        .len())
}

/// Nullspace over GF(p). Free columns get a one in their own coordinate;
/// pivot coordinates are solved by back substitution in reverse pivot order.
pub fn nullspace_mod(m: &SparseIntMat, p: u32) -> NullspaceBasis<u32> {
    nullspace_mod_capped(m, p, usize::MAX).expect("uncapped")
}

/// As [`nullspace_mod`] with a cap on elimination fill and on the total
/// size of the back-substituted basis.
pub fn nullspace_mod_capped(
    m: &SparseIntMat,
    p: u32,
    max_fill: usize,
) -> Result<NullspaceBasis<u32>, LinalgError> {
    echelon_mod(m, p, max_fill)?.kernel_sparse(max_fill)
}

/// Forward elimination of `m` over GF(p), keeping the pivot rows.
pub fn echelon_mod(m: &SparseIntMat, p: u32, max_fill: usize) -> Result<Echelon, LinalgError> {
    eliminate(rows_mod(m, p), m.cols, p, true, max_fill)
}

/// Kernel stored densely by source coordinate: row `c` of the `cols x dim`
/// matrix whose columns span the kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseKernel {
    pub dim: usize,
    data: Vec<u32>,
}

impl DenseKernel {
    pub fn source_dim(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn row(&self, c: usize) -> &[u32] {
        &self.data[c * self.dim..(c + 1) * self.dim]
    }

    /// The same kernel as sparse columns.
    pub fn to_sparse(&self, source_dim: usize) -> NullspaceBasis<u32> {
        let mut columns = vec![Vec::new(); self.dim];
        for c in 0..source_dim.min(self.source_dim()) {
            for (j, &x) in self.row(c).iter().enumerate() {
                if x != 0 {
                    columns[j].push((c, x));
                }
            }
        }
        NullspaceBasis {
            source_dim,
            columns,
        }
    }
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn nullity(&self) -> usize {
        self.cols - self.pivots.len()
    }

    /// Pivot columns in elimination order.
    pub fn pivot_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.pivots.iter().map(|(c, _)| *c as usize)
    }

    fn layout(&self) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let mut pivot_of_col = vec![usize::MAX; self.cols];
        for (k, (c, _)) in self.pivots.iter().enumerate() {
            pivot_of_col[*c as usize] = k;
        }
        let free: Vec<usize> = (0..self.cols)
            .filter(|&c| pivot_of_col[c] == usize::MAX)
            .collect();
        let mut free_index = vec![usize::MAX; self.cols];
        for (i, &f) in free.iter().enumerate() {
            free_index[f] = i;
        }
        (pivot_of_col, free, free_index)
    }

    /// Kernel basis: free columns get a one in their own coordinate; pivot
    /// coordinates are solved by back substitution in reverse pivot order.
    /// Fails once the basis holds more than `max_size` nonzeros.
    pub fn kernel_sparse(&self, max_size: usize) -> Result<NullspaceBasis<u32>, LinalgError> {
        let p = self.p;
        let (pivot_of_col, free, free_index) = self.layout();
        // expr[k]: pivot variable k as a combination of free variables
        let mut expr: Vec<Vec<(u32, u32)>> = vec![Vec::new(); self.pivots.len()];
        let p64 = p as u64;
        let mut size = 0usize;
        for k in (0..self.pivots.len()).rev() {
            let (pc, row) = &self.pivots[k];
            let mut acc: Vec<(u32, u32)> = Vec::new();
            for &(c, x) in row {
                if c == *pc {
                    continue;
                }
                let neg = (p64 - x as u64) % p64;
                if free_index[c as usize] != usize::MAX {
                    acc = merge_add(&acc, &[(free_index[c as usize] as u32, neg as u32)], 1, p);
                } else {
                    let j = pivot_of_col[c as usize];
                    debug_assert!(j > k);
                    acc = merge_add(&acc, &expr[j], neg as u32, p);
                }
            }
            size += acc.len();
            if size > max_size {
                return Err(LinalgError::FillExceeded { limit: max_size });
            }
            expr[k] = acc;
        }
        let mut columns: Vec<Vec<(usize, u32)>> = free.iter().map(|&f| vec![(f, 1)]).collect();
        for (k, e) in expr.iter().enumerate() {
            let pc = self.pivots[k].0 as usize;
            for &(fi, x) in e {
                columns[fi as usize].push((pc, x));
            }
        }
        for c in columns.iter_mut() {
            c.sort_unstable_by_key(|e| e.0);
        }
        Ok(NullspaceBasis {
            source_dim: self.cols,
            columns,
        })
    }

    /// The same basis as [`Echelon::kernel_sparse`], stored densely; meant
    /// for small nullities, where the sparse form would be mostly full.
    pub fn kernel_dense(&self, max_entries: usize) -> Result<DenseKernel, LinalgError> {
        let p = self.p as u64;
        let (pivot_of_col, _free, free_index) = self.layout();
        let dim = self.nullity();
        if self.cols.saturating_mul(dim) > max_entries {
            return Err(LinalgError::TooLarge {
                rows: self.cols,
                cols: dim,
            });
        }
        let mut data = vec![0u32; self.cols * dim];
        for (c, &fi) in free_index.iter().enumerate() {
            if fi != usize::MAX {
                data[c * dim + fi] = 1;
            }
        }
        let mut acc = vec![0u64; dim];
        for k in (0..self.pivots.len()).rev() {
            let (pc, row) = &self.pivots[k];
            acc.iter_mut().for_each(|x| *x = 0);
            for &(c, x) in row {
                if c == *pc {
                    continue;
                }
                let neg = (p - x as u64) % p;
                let src = c as usize * dim;
                debug_assert!(free_index[c as usize] != usize::MAX || pivot_of_col[c as usize] > k);
                for (a, &y) in acc.iter_mut().zip(&data[src..src + dim]) {
                    *a = (*a + neg * y as u64) % p;
                }
            }
            let dst = *pc as usize * dim;
            for (d, &a) in data[dst..dst + dim].iter_mut().zip(&acc) {
                *d = a as u32;
            }
        }
        Ok(DenseKernel { dim, data })
    }
}

/// Rank over GF(p) of a stream of dense rows of fixed width. The basis is
/// kept in reduced echelon form, so a new row only needs the free columns of
/// each basis row it touches.
#[derive(Clone, Debug)]
pub struct StreamingRank {
    width: usize,
    p: u32,
    free: Vec<usize>,
    rows: Vec<(usize, Vec<u32>)>,
}

impl StreamingRank {
    pub fn new(width: usize, p: u32) -> Self {
        StreamingRank {
            width,
            p,
            free: (0..width).collect(),
            rows: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.width
    }

    /// Reduces `v` (entries already in `0..p`) against the basis and keeps
    /// it if something is left. Returns whether the rank grew.
    pub fn push(&mut self, mut v: Vec<u32>) -> bool {
        assert_eq!(v.len(), self.width);
        let p = self.p as u64;
        for (pc, row) in &self.rows {
            let x = v[*pc];
            if x == 0 {
                continue;
            }
            let f = p - x as u64;
            for &t in &self.free {
                if row[t] != 0 {
                    v[t] = ((v[t] as u64 + f * row[t] as u64) % p) as u32;
                }
            }
            v[*pc] = 0;
        }
        let Some(pos) = self.free.iter().position(|&t| v[t] != 0) else {
            return false;
        };
        let pc = self.free.remove(pos);
        let inv = inv_mod(v[pc], self.p) as u64;
        for &t in &self.free {
            v[t] = (v[t] as u64 * inv % p) as u32;
        }
        v[pc] = 1;
        for (_, row) in self.rows.iter_mut() {
            let x = row[pc];
            if x == 0 {
                continue;
            }
            let f = p - x as u64;
            for &t in &self.free {
                if v[t] != 0 {
                    row[t] = ((row[t] as u64 + f * v[t] as u64) % p) as u32;
                }
            }
            row[pc] = 0;
        }
        self.rows.push((pc, v));
        true
    }
}

fn merge_add(a: &[(u32, u32)], b: &[(u32, u32)], factor: u32, p: u32) -> Vec<(u32, u32)> {
    let p64 = p as u64;
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            let x = (factor as u64 * b[j].1 as u64 % p64) as u32;
            if x != 0 {
                out.push((b[j].0, x));
            }
            j += 1;
        } else {
            let x = ((a[i].1 as u64 + factor as u64 * b[j].1 as u64) % p64) as u32;
            if x != 0 {
                out.push((a[i].0, x));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// `m * N` over GF(p), one output column per nullspace vector.
pub fn mul_nullspace_mod(
    m: &SparseIntMat,
    n: &NullspaceBasis<u32>,
    p: u32,
) -> Result<SparseIntMat, LinalgError> {
    if m.cols != n.source_dim {
        return Err(LinalgError::Dimension(format!(
            "{} columns times {} rows",
            m.cols, n.source_dim
        )));
    }
    let by_col = m.column_slices();
    let mut entries = Vec::new();
    let mut acc = vec![0u64; m.rows];
    let mut seen = vec![false; m.rows];
    let mut touched = Vec::new();
    for (j, v) in n.columns.iter().enumerate() {
        for &(k, x) in v {
            for &(r, _, a) in &m.entries[by_col[k].clone()] {
                if !std::mem::replace(&mut seen[r], true) {
                    touched.push(r);
                }
                acc[r] = (acc[r] + reduce(a, p) as u64 * x as u64) % p as u64;
            }
        }
        touched.sort_unstable();
        for &r in &touched {
            if acc[r] != 0 {
                entries.push((r, j, acc[r] as i64));
            }
            acc[r] = 0;
            seen[r] = false;
        }
        touched.clear();
    }
    Ok(SparseIntMat::new(m.rows, n.dim(), entries))
}

/// Writes a modular nullspace as a `field=` line followed by the triplet
/// format, one matrix column per basis vector.
pub fn write_nullspace_mod<W: std::io::Write>(
    n: &NullspaceBasis<u32>,
    p: u32,
    mut w: W,
) -> std::io::Result<()> {
    let nnz: usize = n.columns.iter().map(|c| c.len()).sum();
    writeln!(w, "field=GF({p})")?;
    writeln!(w, "{} {} {}", n.source_dim, n.dim(), nnz)?;
    for (j, col) in n.columns.iter().enumerate() {
        let mut col = col.clone();
        col.sort_unstable_by_key(|e| e.0);
        for (i, x) in col {
            writeln!(w, "{i} {j} {x}")?;
        }
    }
    Ok(())
}

/// Applies `m` to one sparse vector over GF(p).
pub fn apply_mod(m: &SparseIntMat, v: &[(usize, u32)], p: u32) -> Vec<(usize, u32)> {
    let by_col = m.column_slices();
    let mut acc = vec![0u64; m.rows];
    for &(k, x) in v {
        for &(r, _, a) in &m.entries[by_col[k].clone()] {
            acc[r] = (acc[r] + reduce(a, p) as u64 * x as u64) % p as u64;
        }
    }
    acc.into_iter()
        .enumerate()
        .filter(|(_, x)| *x != 0)
        .map(|(r, x)| (r, x as u32))
        .collect()
}

fn dense_integer(m: &SparseIntMat) -> Result<Vec<Vec<BigInt>>, LinalgError> {
    if m.rows.saturating_mul(m.cols) > DEFAULT_MAX_DENSE {
        return Err(LinalgError::TooLarge {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let mut a = vec![vec![BigInt::zero(); m.cols]; m.rows];
    for &(r, c, v) in &m.entries {
        a[r][c] += v;
    }
    Ok(a)
}

/// Rank over the rationals by fraction-free elimination.
pub fn rank_rational(m: &SparseIntMat, max_bits: u64) -> Result<usize, LinalgError> {
    let mut a = dense_integer(m)?;
    bareiss_rank(&mut a, max_bits)
}

/// Bareiss elimination in place; returns the rank.
pub fn bareiss_rank(a: &mut [Vec<BigInt>], max_bits: u64) -> Result<usize, LinalgError> {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut prev = BigInt::one();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, piv);
        for r in rank + 1..rows {
            for c in col + 1..cols {
                let v = (&a[rank][col] * &a[r][c] - &a[r][col] * &a[rank][c]) / &prev;
                if v.bits() > max_bits {
                    return Err(LinalgError::Overflow { max_bits });
                }
                a[r][c] = v;
            }
            a[r][col] = BigInt::zero();
        }
        prev = a[rank][col].clone();
        rank += 1;
    }
    Ok(rank)
}

/// Nullspace over the rationals, each vector scaled to coprime integers with
/// a positive entry in its free coordinate.
pub fn nullspace_rational(
    m: &SparseIntMat,
    max_bits: u64,
) -> Result<NullspaceBasis<BigInt>, LinalgError> {
    let ints = dense_integer(m)?;
    let mut a: Vec<Vec<BigRational>> = ints
        .into_iter()
        .map(|r| r.into_iter().map(BigRational::from_integer).collect())
        .collect();
    let (rows, cols) = (m.rows, m.cols);
    let mut pivot_cols = Vec::new();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, piv);
        let inv = a[rank][col].recip();
        for c in col..cols {
            a[rank][c] = &a[rank][c] * &inv;
        }
        for r in 0..rows {
            if r == rank || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for c in col..cols {
                let v = &a[r][c] - &factor * &a[rank][c];
                if v.numer().bits() > max_bits || v.denom().bits() > max_bits {
                    return Err(LinalgError::Overflow { max_bits });
                }
                a[r][c] = v;
            }
        }
        pivot_cols.push(col);
        rank += 1;
    }
    let mut is_pivot = vec![false; cols];
    for &c in &pivot_cols {
        is_pivot[c] = true;
    }
    let mut columns = Vec::new();
    for f in (0..cols).filter(|&c| !is_pivot[c]) {
        let mut v: Vec<(usize, BigRational)> = vec![(f, BigRational::one())];
        for (k, &pc) in pivot_cols.iter().enumerate() {
            if !a[k][f].is_zero() {
                v.push((pc, -a[k][f].clone()));
            }
        }
        v.sort_by_key(|e| e.0);
        columns.push(clear_denominators(v));
    }
    Ok(NullspaceBasis {
        source_dim: cols,
        columns,
    })
}

fn clear_denominators(v: Vec<(usize, BigRational)>) -> Vec<(usize, BigInt)> {
    let l = v
        .iter()
        .fold(BigInt::one(), |acc, (_, x)| acc.lcm(x.denom()));
    let ints: Vec<(usize, BigInt)> = v
        .into_iter()
        .map(|(i, x)| (i, (x * BigRational::from_integer(l.clone())).to_integer()))
        .collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, (_, x)| acc.gcd(x));
    if g.is_zero() || g.is_one() {
        return ints;
    }
    ints.into_iter().map(|(i, x)| (i, x / &g)).collect()
}

/// `m * v` over the integers.
pub fn apply_integer(m: &SparseIntMat, v: &[(usize, BigInt)]) -> Vec<(usize, BigInt)> {
    let by_col = m.column_slices();
    let mut acc = vec![BigInt::zero(); m.rows];
    for (k, x) in v {
        for &(r, _, a) in &m.entries[by_col[*k].clone()] {
            acc[r] += x * a;
        }
    }
    acc.into_iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .collect()
}

/// Integer product `m * N` for a rational nullspace basis.
pub fn mul_nullspace_integer(
    m: &SparseIntMat,
    n: &NullspaceBasis<BigInt>,
) -> Result<Vec<Vec<BigInt>>, LinalgError> {
    if m.cols != n.source_dim {
        return Err(LinalgError::Dimension(format!(
            "{} columns times {} rows",
            m.cols, n.source_dim
        )));
    }
    if m.rows.saturating_mul(n.dim()) > DEFAULT_MAX_DENSE {
        return Err(LinalgError::TooLarge {
            rows: m.rows,
            cols: n.dim(),
        });
    }
    let mut out = vec![vec![BigInt::zero(); n.dim()]; m.rows];
    for (j, v) in n.columns.iter().enumerate() {
        for (r, x) in apply_integer(m, v) {
            out[r][j] = x;
        }
    }
    Ok(out)
}

/// Rank of a dense integer matrix over the rationals.
pub fn dense_rank(mut a: Vec<Vec<BigInt>>, max_bits: u64) -> Result<usize, LinalgError> {
    bareiss_rank(&mut a, max_bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, cols: usize, dense: &[i64]) -> SparseIntMat {
        let mut entries = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if dense[r * cols + c] != 0 {
                    entries.push((r, c, dense[r * cols + c]));
                }
            }
        }
        SparseIntMat::new(rows, cols, entries)
    }

    const FIELDS: [FieldSpec; 3] = [
        FieldSpec::Rationals,
        FieldSpec::Prime(65521),
        FieldSpec::Prime(65519),
    ];

    #[test]
    fn field_validation() {
        assert!(FieldSpec::prime(65521).is_ok());
        assert!(FieldSpec::prime(65519).is_ok());
        assert!(FieldSpec::prime(65520).is_err());
        assert!(FieldSpec::prime(2).is_err());
        assert!(FieldSpec::prime(1 << 31).is_err());
        assert!(rank_of(&mat(1, 1, &[1]), FieldSpec::Prime(9)).is_err());
    }

    #[test]
    fn identity_and_all_ones() {
        let id = mat(3, 3, &[1, 0, 0, 0, 1, 0, 0, 0, 1]);
        for f in FIELDS {
            assert_eq!(rank_of(&id, f).unwrap(), 3);
            assert_eq!(nullspace_of(&id, f).unwrap().dim(), 0);
        }
        let ones = mat(2, 2, &[1, 1, 1, 1]);
        assert_eq!(rank_of(&ones, FieldSpec::Prime(65521)).unwrap(), 1);
        match nullspace_of(&ones, FieldSpec::Prime(65521)).unwrap() {
            Nullspace::Modular { basis, .. } => {
                assert_eq!(basis.columns, vec![vec![(0, 65520), (1, 1)]]);
            }
            _ => unreachable!(),
        }
        match nullspace_of(&ones, FieldSpec::Rationals).unwrap() {
            Nullspace::Rational(b) => {
                assert_eq!(
                    b.columns,
                    vec![vec![(0, BigInt::from(-1)), (1, BigInt::from(1))]]
                );
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn zero_matrix_nullspace_is_everything() {
        let z = SparseIntMat::new(4, 3, vec![]);
        for f in FIELDS {
            assert_eq!(rank_of(&z, f).unwrap(), 0);
            assert_eq!(nullspace_of(&z, f).unwrap().dim(), 3);
        }
    }

    #[test]
    fn rank_drops_mod_p_only_when_divisible() {
        let m = mat(2, 2, &[65521, 0, 0, 1]);
        assert_eq!(rank_of(&m, FieldSpec::Rationals).unwrap(), 2);
        assert_eq!(rank_of(&m, FieldSpec::Prime(65521)).unwrap(), 1);
        assert_eq!(rank_of(&m, FieldSpec::Prime(65519)).unwrap(), 2);
    }

    #[test]
    fn overflow_is_reported() {
        let m = mat(3, 3, &[1 << 40, 3, 1, 5, 1 << 41, 7, 1, 1, 1 << 42]);
        assert_eq!(
            rank_rational(&m, 8),
            Err(LinalgError::Overflow { max_bits: 8 })
        );
        assert_eq!(rank_rational(&m, DEFAULT_MAX_BITS), Ok(3));
    }

    #[test]
    fn nullspace_vectors_are_killed() {
        let m = mat(3, 5, &[1, 2, 0, -1, 3, 0, 1, 1, 0, -2, 1, 3, 1, -1, 1]);
        let p = 65521;
        let n = nullspace_mod(&m, p);
        assert_eq!(n.dim(), 5 - rank_mod(&m, p));
        for v in &n.columns {
            assert!(apply_mod(&m, v, p).is_empty());
        }
        let q = nullspace_rational(&m, DEFAULT_MAX_BITS).unwrap();
        assert_eq!(q.dim(), n.dim());
        for v in &q.columns {
            assert!(apply_integer(&m, v).is_empty());
        }
    }
}
