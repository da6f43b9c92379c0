//! End-to-end rank profiles: enumeration, bases, differentials, ranks.
//!
//! Every stage writes its result into the cache directory (when one is
//! configured) and is skipped on the next run if its artifact is present, so
//! an interrupted run resumes where it stopped. Resource caps turn a stage
//! into a hole in the profile instead of aborting the whole run.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{
    assemble_global, boundary_remove, contract_blocks, contract_terms, remove_terms, BlockMatrix,
    ChainBasis, ChainError, Contractor, SparseIntMat,
};
use crate::enumerator::{
    enumerate_graphs, read_graph_cache, write_graph_cache, EnumError, EnumMode, EnumSpec,
};
use crate::exactla::{
    dense_rank, echelon_mod, mul_nullspace_integer, mul_nullspace_mod, nullspace_rational,
    rank_mod_capped, rank_rational, write_nullspace_mod, Echelon, FieldSpec, LinalgError,
    NullspaceBasis, StreamingRank, DEFAULT_MAX_BITS, DEFAULT_PRIMES,
};
use crate::multigraph::GraphClass;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("n = {n}, p = {p}: {quantity} differs between fields: {values}")]
    CrossPrime {
        n: usize,
        p: usize,
        quantity: &'static str,
        values: String,
    },
    #[error("n = {n}: dim H_{p} = {value} is negative even after exact recomputation")]
    NegativeDimension { n: usize, p: usize, value: i64 },
    #[error("p = {p}, {stage}: {reason}")]
    ResourceCap {
        p: usize,
        stage: &'static str,
        reason: String,
    },
    #[error(transparent)]
    Enum(#[from] EnumError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    /// 1 for validation failures, 2 for resource caps, 3 for cross-field
    /// disagreement.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::ResourceCap { .. } => 2,
            PipelineError::Enum(EnumError::CapExceeded { .. }) => 2,
            PipelineError::CrossPrime { .. } => 3,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    /// Largest forest basis built for one `p`.
    pub max_basis: usize,
    /// Largest matrix, and largest elimination fill, in nonzeros.
    pub max_nnz: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_basis: 2_000_000,
            max_nnz: 40_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub n: usize,
    pub p_values: Vec<usize>,
    /// Primes to run; ranks from all of them must agree.
    pub primes: Vec<u32>,
    /// Work over the rationals instead of the primes.
    pub rational: bool,
    pub cache_dir: Option<PathBuf>,
    pub caps: Caps,
}

impl PipelineConfig {
    pub fn new(n: usize) -> Self {
        PipelineConfig {
            n,
            p_values: default_p_range(n),
            primes: DEFAULT_PRIMES.to_vec(),
            rational: false,
            cache_dir: None,
            caps: Caps::default(),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |s: String| Err(PipelineError::InvalidConfig(s));
        if self.n < 2 {
            return bad(format!("n = {} is below 2", self.n));
        }
        if self.n > 12 {
            return bad(format!("n = {} is beyond the supported range", self.n));
        }
        let top = 2 * self.n - 3;
        if let Some(p) = self.p_values.iter().find(|&&p| p > top) {
            return bad(format!("p = {p} exceeds 2n - 3 = {top}"));
        }
        if !self.rational && self.primes.is_empty() {
            return bad("no field selected".into());
        }
        for &q in &self.primes {
            FieldSpec::prime(q as u64).map_err(|e| PipelineError::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    }

    fn fields(&self) -> Vec<FieldSpec> {
        if self.rational {
            vec![FieldSpec::Rationals]
        } else {
            self.primes.iter().map(|&q| FieldSpec::Prime(q)).collect()
        }
    }
}

/// All of `0..=2n-3` for `n <= 5`; the two ends of the range otherwise.
pub fn default_p_range(n: usize) -> Vec<usize> {
    let top = (2 * n).saturating_sub(3);
    if n <= 5 {
        (0..=top).collect()
    } else {
        let mut v = vec![0, 1, 2, top - 1, top];
        v.dedup();
        v
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hole {
    pub p: usize,
    pub stage: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub p: usize,
    pub field: FieldSpec,
    pub seconds: f64,
}

/// Ranks of one stage over one field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub n: usize,
    pub p: usize,
    pub field: FieldSpec,
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankProfile {
    pub n: usize,
    pub field: FieldSpec,
    pub primes: Vec<u32>,
    pub p_values: Vec<usize>,
    pub a: Vec<Option<usize>>,
    pub b: Vec<Option<usize>>,
    pub c: Vec<Option<usize>>,
    pub dims: Vec<Option<i64>>,
    pub holes: Vec<Hole>,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub timings: Vec<StageTiming>,
}

impl RankProfile {
    fn empty(cfg: &PipelineConfig) -> Self {
        let len = 2 * cfg.n - 2;
        let mut p_values = cfg.p_values.clone();
        p_values.sort_unstable();
        p_values.dedup();
        RankProfile {
            n: cfg.n,
            field: cfg.fields()[0],
            primes: if cfg.rational {
                Vec::new()
            } else {
                cfg.primes.clone()
            },
            p_values,
            a: vec![None; len],
            b: vec![None; len],
            c: vec![None; len],
            dims: vec![None; len],
            holes: Vec::new(),
            notes: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.holes.is_empty() && self.p_values.iter().all(|&p| self.dims[p].is_some())
    }

    /// Alternating sum of the homology dimensions, if all are known.
    pub fn euler_characteristic(&self) -> Option<i64> {
        self.dims
            .iter()
            .enumerate()
            .map(|(p, d)| d.map(|d| if p % 2 == 0 { d } else { -d }))
            .sum()
    }

    /// Structured form; timings only when asked, so that two runs of the
    /// same configuration print the same bytes.
    pub fn to_json(&self, with_timings: bool) -> String {
        let mut copy = self.clone();
        if !with_timings {
            copy.timings.clear();
        }
        serde_json::to_string_pretty(&copy).expect("profile serializes")
    }

    pub fn to_table(&self) -> String {
        let show = |x: Option<usize>| x.map_or("-".to_string(), |v| v.to_string());
        let mut out = String::new();
        let fields = if self.primes.len() > 1 {
            let list: Vec<String> = self.primes.iter().map(|q| format!("GF({q})")).collect();
            list.join(", ")
        } else {
            self.field.to_string()
        };
        out.push_str(&format!("n = {}  field: {}\n", self.n, fields));
        out.push_str(&format!(
            "{:>3} {:>10} {:>10} {:>10} {:>8}\n",
            "p", "a_p", "b_p", "c_p", "dim H_p"
        ));
        for p in 0..self.a.len() {
            let d = self.dims[p].map_or("-".to_string(), |v| v.to_string());
            out.push_str(&format!(
                "{:>3} {:>10} {:>10} {:>10} {:>8}\n",
                p,
                show(self.a[p]),
                show(self.b[p]),
                show(self.c[p]),
                d
            ));
        }
        let dims: Vec<String> = self
            .dims
            .iter()
            .map(|d| d.map_or("-".into(), |v| v.to_string()))
            .collect();
        out.push_str(&format!("dims: {}\n", dims.join(",")));
        for h in &self.holes {
            out.push_str(&format!("hole: p = {} at {}: {}\n", h.p, h.stage, h.reason));
        }
        for note in &self.notes {
            out.push_str(&format!("note: {note}\n"));
        }
        out
    }
}

/// `dim H_p = b_p - c_p - c_{p+1}` wherever the inputs are known; `c` past
/// the top degree is zero.
pub fn homology_dimensions(rp: &RankProfile) -> Vec<Option<i64>> {
    let top = rp.b.len() - 1;
    (0..=top)
        .map(|p| {
            let next = if p == top { Some(0) } else { rp.c[p + 1] };
            Some(rp.b[p]? as i64 - rp.c[p]? as i64 - next? as i64)
        })
        .collect()
}

fn field_tag(f: FieldSpec) -> String {
    match f {
        FieldSpec::Rationals => "q".into(),
        FieldSpec::Prime(q) => format!("gf{q}"),
    }
}

/// Writes through a temporary file so an interrupted run never leaves a
/// truncated artifact behind.
fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        body(&mut w)?;
        w.flush()?;
    }
    fs::rename(tmp, path)
}

pub fn basis_cache_path(dir: &Path, n: usize, p: usize) -> PathBuf {
    dir.join(format!("basis-n{n}-p{p}.txt"))
}

pub fn stage_cache_path(dir: &Path, n: usize, p: usize, f: FieldSpec) -> PathBuf {
    dir.join(format!("stage-n{n}-p{p}-{}.json", field_tag(f)))
}

pub fn report_path(dir: &Path, n: usize) -> PathBuf {
    dir.join(format!("report-n{n}.json"))
}

/// Trivalent graph classes for `n`, from the cache when possible.
pub fn load_graphs(
    n: usize,
    cache_dir: Option<&Path>,
) -> Result<Vec<Arc<GraphClass>>, PipelineError> {
    let spec = EnumSpec::trivalent(n);
    if let Some(dir) = cache_dir {
        if let Some(g) = read_graph_cache(dir, &spec)? {
            return Ok(g.into_iter().map(Arc::new).collect());
        }
    }
    let graphs = enumerate_graphs(&spec)?;
    if let Some(dir) = cache_dir {
        write_graph_cache(dir, &spec, &graphs)?;
    }
    Ok(graphs.into_iter().map(Arc::new).collect())
}

fn cap_error(p: usize, stage: &'static str, e: LinalgError) -> PipelineError {
    match e {
        LinalgError::FillExceeded { .. }
        | LinalgError::TooLarge { .. }
        | LinalgError::Overflow { .. } => PipelineError::ResourceCap {
            p,
            stage,
            reason: e.to_string(),
        },
        other => PipelineError::Linalg(other),
    }
}

/// Assembled differentials of one stage.
pub struct StageMatrices {
    pub basis: Arc<ChainBasis>,
    pub contract: Vec<BlockMatrix>,
    pub remove: SparseIntMat,
}

impl StageMatrices {
    pub fn contract_global(&self) -> SparseIntMat {
        assemble_global(&self.basis, &self.contract)
    }
}

/// Nullspace of the contraction differential over GF(q), block by block,
/// in global coordinates.
pub fn contract_nullspace_mod(
    m: &StageMatrices,
    q: u32,
    max_fill: usize,
) -> Result<NullspaceBasis<u32>, LinalgError> {
    if m.basis.p == 0 {
        let a = m.basis.dim();
        return Ok(NullspaceBasis {
            source_dim: a,
            columns: (0..a).map(|i| vec![(i, 1)]).collect(),
        });
    }
    sparse_kernel(m, &contract_echelons(m, q, max_fill)?, max_fill)
}

/// Per-block echelon forms of the contraction differential over GF(q).
pub fn contract_echelons(
    m: &StageMatrices,
    q: u32,
    max_fill: usize,
) -> Result<Vec<Echelon>, LinalgError> {
    m.contract
        .par_iter()
        .map(|blk| echelon_mod(&blk.matrix, q, max_fill))
        .collect()
}

fn sparse_kernel(
    m: &StageMatrices,
    echelons: &[Echelon],
    max_size: usize,
) -> Result<NullspaceBasis<u32>, LinalgError> {
    let mut columns = Vec::new();
    let mut size = 0usize;
    for (blk, ech) in m.contract.iter().zip(echelons) {
        let ns = ech.kernel_sparse(max_size - size)?;
        size += ns.columns.iter().map(Vec::len).sum::<usize>();
        columns.extend(ns.columns.into_iter().map(|v| {
            v.into_iter()
                .map(|(i, x)| (blk.columns[i], x))
                .collect::<Vec<_>>()
        }));
    }
    Ok(NullspaceBasis {
        source_dim: m.basis.dim(),
        columns,
    })
}

/// `(b, c)` over GF(q) with the kernel of the contraction differential held
/// densely. The rank of the removal differential on the kernel is taken one
/// product row at a time, so the product is never stored.
pub fn dense_counts_mod(
    m: &StageMatrices,
    echelons: &[Echelon],
    q: u32,
    max_entries: usize,
) -> Result<(usize, usize), LinalgError> {
    let mut kernels = Vec::with_capacity(echelons.len());
    let mut used = 0usize;
    for ech in echelons {
        let k = ech.kernel_dense(max_entries - used)?;
        used += k.source_dim() * k.dim;
        kernels.push(k);
    }
    let mut offsets = Vec::with_capacity(kernels.len());
    let mut width = 0;
    for k in &kernels {
        offsets.push(width);
        width += k.dim;
    }
    // global coordinate -> (block, position in block)
    let mut place = vec![(u32::MAX, 0u32); m.basis.dim()];
    for (b, blk) in m.contract.iter().enumerate() {
        for (i, &c) in blk.columns.iter().enumerate() {
            place[c] = (b as u32, i as u32);
        }
    }
    let mut by_row: Vec<Vec<(u32, u32)>> = vec![Vec::new(); m.remove.rows];
    for &(r, c, x) in &m.remove.entries {
        by_row[r].push((c as u32, x.rem_euclid(q as i64) as u32));
    }
    let q64 = q as u64;
    let mut acc = StreamingRank::new(width, q);
    for chunk in by_row.chunks(4096) {
        let rows: Vec<Vec<u32>> = chunk
            .par_iter()
            .filter(|row| !row.is_empty())
            .filter_map(|row| {
                let mut v = vec![0u64; width];
                for &(c, x) in row {
                    let (b, i) = place[c as usize];
                    if b == u32::MAX || kernels[b as usize].dim == 0 {
                        continue;
                    }
                    let k = &kernels[b as usize];
                    let off = offsets[b as usize];
                    for (t, &y) in v[off..off + k.dim].iter_mut().zip(k.row(i as usize)) {
                        *t = (*t + x as u64 * y as u64) % q64;
                    }
                }
                v.iter()
                    .any(|&x| x != 0)
                    .then(|| v.into_iter().map(|x| x as u32).collect())
            })
            .collect();
        for v in rows {
            acc.push(v);
        }
        if acc.is_full() {
            break;
        }
    }
    Ok((width, acc.rank()))
}

/// Nullspace of the contraction differential over the rationals, scaled to
/// integer vectors.
pub fn contract_nullspace_rational(
    m: &StageMatrices,
) -> Result<NullspaceBasis<BigInt>, LinalgError> {
    let a = m.basis.dim();
    if m.basis.p == 0 {
        return Ok(NullspaceBasis {
            source_dim: a,
            columns: (0..a).map(|i| vec![(i, BigInt::from(1))]).collect(),
        });
    }
    let mut columns = Vec::new();
    for blk in &m.contract {
        let ns = nullspace_rational(&blk.matrix, DEFAULT_MAX_BITS)?;
        columns.extend(ns.columns.into_iter().map(|v| {
            v.into_iter()
                .map(|(i, x)| (blk.columns[i], x))
                .collect::<Vec<_>>()
        }));
    }
    Ok(NullspaceBasis {
        source_dim: a,
        columns,
    })
}

struct Runner<'a> {
    cfg: &'a PipelineConfig,
    graphs: Vec<Arc<GraphClass>>,
    bases: HashMap<usize, Arc<ChainBasis>>,
    contractor: Contractor,
    profile: RankProfile,
}

impl<'a> Runner<'a> {
    fn dir(&self) -> Option<&Path> {
        self.cfg.cache_dir.as_deref()
    }

    fn basis(&mut self, p: usize) -> Result<Arc<ChainBasis>, PipelineError> {
        if let Some(b) = self.bases.get(&p) {
            return Ok(b.clone());
        }
        let (n, cap) = (self.cfg.n, self.cfg.caps.max_basis);
        let too_big = |found: usize| PipelineError::ResourceCap {
            p,
            stage: "basis",
            reason: format!("basis size {found} exceeds the cap of {cap}"),
        };
        let cached = match self.dir() {
            Some(dir) if basis_cache_path(dir, n, p).exists() => {
                let f = fs::File::open(basis_cache_path(dir, n, p))?;
                Some(ChainBasis::read(BufReader::new(f), n, p)?)
            }
            _ => None,
        };
        let basis = match cached {
            Some(b) if b.dim() > cap => return Err(too_big(b.dim())),
            Some(b) => b,
            None => {
                let b = ChainBasis::build_capped(&self.graphs, n, p, cap).map_err(too_big)?;
                if let Some(dir) = self.dir() {
                    write_atomic(&basis_cache_path(dir, n, p), |w| b.write(w))?;
                }
                b
            }
        };
        self.profile.a[p] = Some(basis.dim());
        let basis = Arc::new(basis);
        self.bases.insert(p, basis.clone());
        Ok(basis)
    }

    fn matrices(&mut self, p: usize) -> Result<StageMatrices, PipelineError> {
        let basis = self.basis(p)?;
        let max_nnz = self.cfg.caps.max_nnz;
        let check = |nnz: usize, what: &'static str| {
            if nnz > max_nnz {
                Err(PipelineError::ResourceCap {
                    p,
                    stage: what,
                    reason: format!("{nnz} nonzeros exceed the cap of {max_nnz}"),
                })
            } else {
                Ok(())
            }
        };
        // every column contributes at most p terms to either differential
        check(basis.dim() * p, "matrices")?;
        let contract = contract_blocks(&basis, &self.contractor);
        let remove = if p == 0 {
            SparseIntMat::new(0, basis.dim(), Vec::new())
        } else {
            let lower = self.basis(p - 1)?;
            boundary_remove(&basis, &lower)?
        };
        check(
            contract.iter().map(|b| b.matrix.nnz()).sum::<usize>() + remove.nnz(),
            "matrices",
        )?;
        Ok(StageMatrices {
            basis,
            contract,
            remove,
        })
    }

    fn compute(&self, m: &StageMatrices, f: FieldSpec) -> Result<StageRecord, PipelineError> {
        let p = m.basis.p;
        let start = Instant::now();
        let max = self.cfg.caps.max_nnz;
        let (b, c) = match f {
            FieldSpec::Prime(_) if p == 0 => (m.basis.dim(), 0),
            FieldSpec::Prime(q) => {
                let echelons =
                    contract_echelons(m, q, max).map_err(|e| cap_error(p, "nullspace", e))?;
                let dense_size: usize = m
                    .contract
                    .iter()
                    .zip(&echelons)
                    .map(|(blk, e)| blk.columns.len().saturating_mul(e.nullity()))
                    .fold(0, usize::saturating_add);
                if dense_size <= max {
                    dense_counts_mod(m, &echelons, q, max)
                        .map_err(|e| cap_error(p, "dense kernel", e))?
                } else {
                    let ns = sparse_kernel(m, &echelons, max)
                        .map_err(|e| cap_error(p, "nullspace", e))?;
                    drop(echelons);
                    let prod = mul_nullspace_mod(&m.remove, &ns, q)?;
                    if prod.nnz() > max {
                        return Err(cap_error(
                            p,
                            "product",
                            LinalgError::FillExceeded { limit: max },
                        ));
                    }
                    let c = rank_mod_capped(&prod, q, max).map_err(|e| cap_error(p, "rank", e))?;
                    if let (Some(dir), true) =
                        (self.dir(), Some(f) == self.cfg.fields().first().copied())
                    {
                        let path =
                            dir.join(format!("null-n{}-p{p}-{}.txt", self.cfg.n, field_tag(f)));
                        write_atomic(&path, |w| write_nullspace_mod(&ns, q, w))?;
                    }
                    (ns.dim(), c)
                }
            }
            FieldSpec::Rationals => {
                let ns =
                    contract_nullspace_rational(m).map_err(|e| cap_error(p, "nullspace", e))?;
                let c = if p == 0 {
                    0
                } else {
                    let prod = mul_nullspace_integer(&m.remove, &ns)
                        .map_err(|e| cap_error(p, "product", e))?;
                    dense_rank(prod, DEFAULT_MAX_BITS).map_err(|e| cap_error(p, "rank", e))?
                };
                (ns.dim(), c)
            }
        };
        Ok(StageRecord {
            n: self.cfg.n,
            p,
            field: f,
            a: m.basis.dim(),
            b,
            c,
            seconds: start.elapsed().as_secs_f64(),
        })
    }

    fn load_record(&self, p: usize, f: FieldSpec) -> Result<Option<StageRecord>, PipelineError> {
        let Some(dir) = self.dir() else {
            return Ok(None);
        };
        let path = stage_cache_path(dir, self.cfg.n, p, f);
        if !path.exists() {
            return Ok(None);
        }
        Ok(Some(serde_json::from_reader(BufReader::new(
            fs::File::open(path)?,
        ))?))
    }

    fn store_record(&self, r: &StageRecord) -> Result<(), PipelineError> {
        if let Some(dir) = self.dir() {
            write_atomic(&stage_cache_path(dir, r.n, r.p, r.field), |w| {
                serde_json::to_writer_pretty(&mut *w, r)?;
                writeln!(w)
            })?;
        }
        Ok(())
    }

    /// Records over the requested fields, from the cache or computed.
    fn records(
        &mut self,
        p: usize,
        fields: &[FieldSpec],
    ) -> Result<Vec<StageRecord>, PipelineError> {
        let mut out = BTreeMap::new();
        for (i, &f) in fields.iter().enumerate() {
            if let Some(r) = self.load_record(p, f)? {
                out.insert(i, r);
            }
        }
        if out.len() < fields.len() {
            let m = self.matrices(p)?;
            for (i, &f) in fields.iter().enumerate() {
                if out.contains_key(&i) {
                    continue;
                }
                let r = self.compute(&m, f)?;
                self.store_record(&r)?;
                out.insert(i, r);
            }
        }
        Ok(out.into_values().collect())
    }

    fn stage(&mut self, p: usize) -> Result<(), PipelineError> {
        let fields = self.cfg.fields();
        let records = self.records(p, &fields)?;
        let first = &records[0];
        let disagree = records.iter().find(|r| r.b != first.b || r.c != first.c);
        let chosen = match disagree {
            None => first.clone(),
            Some(other) => {
                let quantity = if other.b != first.b { "b_p" } else { "c_p" };
                let values = records
                    .iter()
                    .map(|r| format!("{}: b = {}, c = {}", r.field, r.b, r.c))
                    .collect::<Vec<_>>()
                    .join("; ");
                let exact = self.records(p, &[FieldSpec::Rationals]).map_err(|_| {
                    PipelineError::CrossPrime {
                        n: self.cfg.n,
                        p,
                        quantity,
                        values: values.clone(),
                    }
                })?;
                self.profile.notes.push(format!(
                    "p = {p}: {quantity} disagreed ({values}); exact values used"
                ));
                exact[0].clone()
            }
        };
        for r in &records {
            self.profile.timings.push(StageTiming {
                p,
                field: r.field,
                seconds: r.seconds,
            });
        }
        self.profile.a[p] = Some(chosen.a);
        self.profile.b[p] = Some(chosen.b);
        self.profile.c[p] = Some(chosen.c);
        Ok(())
    }

    fn exact_retry(&mut self, p: usize) -> Result<bool, PipelineError> {
        if self.cfg.rational {
            return Ok(false);
        }
        let top = 2 * self.cfg.n - 3;
        for q in [p, p + 1] {
            if q > top {
                continue;
            }
            match self.records(q, &[FieldSpec::Rationals]) {
                Ok(r) => {
                    self.profile.b[q] = Some(r[0].b);
                    self.profile.c[q] = Some(r[0].c);
                }
                Err(PipelineError::ResourceCap { .. }) => return Ok(false),
                Err(e) => return Err(e),
            }
        }
        self.profile.notes.push(format!(
            "p = {p}: negative dimension over primes; recomputed exactly"
        ));
        Ok(true)
    }
}

/// Computes the requested part of the rank profile.
pub fn compute_rank_profile(cfg: &PipelineConfig) -> Result<RankProfile, PipelineError> {
    cfg.validate()?;
    let graphs = load_graphs(cfg.n, cfg.cache_dir.as_deref())?;
    let mut runner = Runner {
        cfg,
        graphs,
        bases: HashMap::new(),
        contractor: Contractor::new(),
        profile: RankProfile::empty(cfg),
    };
    runner.profile.a[0] = Some(runner.graphs.len());
    let p_values = runner.profile.p_values.clone();
    for &p in &p_values {
        // only p and p - 1 are ever needed together
        runner.bases.retain(|&q, _| q + 1 >= p);
        match runner.stage(p) {
            Ok(()) => {}
            Err(PipelineError::ResourceCap { p, stage, reason }) => {
                runner.profile.holes.push(Hole {
                    p,
                    stage: stage.to_string(),
                    reason,
                })
            }
            Err(e) => return Err(e),
        }
    }
    runner.bases.clear();
    let mut dims = homology_dimensions(&runner.profile);
    for p in 0..dims.len() {
        if let Some(d) = dims[p].filter(|&d| d < 0) {
            if !runner.exact_retry(p)? {
                return Err(PipelineError::NegativeDimension {
                    n: cfg.n,
                    p,
                    value: d,
                });
            }
            dims = homology_dimensions(&runner.profile);
            if let Some(d) = dims[p].filter(|&d| d < 0) {
                return Err(PipelineError::NegativeDimension {
                    n: cfg.n,
                    p,
                    value: d,
                });
            }
        }
    }
    let mut profile = runner.profile;
    profile.dims = dims;
    if let Some(dir) = cfg.cache_dir.as_deref() {
        let body = profile.to_json(true);
        write_atomic(&report_path(dir, cfg.n), |w| writeln!(w, "{body}"))?;
    }
    Ok(profile)
}

/// Forested graphs of every degree (loops allowed) with `k` forest edges,
/// for `k = 0..=2n-3`.
fn full_bases(n: usize) -> Result<Vec<ChainBasis>, PipelineError> {
    let top = 2 * n - 3;
    let spec = EnumSpec {
        n,
        mode: EnumMode::MaxDegree(top),
        allow_loops: true,
        max_classes: None,
    };
    let graphs: Vec<Arc<GraphClass>> = enumerate_graphs(&spec)?.into_iter().map(Arc::new).collect();
    Ok((0..=top)
        .map(|k| ChainBasis::build(&graphs, n, k))
        .collect())
}

/// Homology of the whole forested graph complex by exact rational ranks.
/// Independent of the filtration; only feasible for `n <= 3`.
pub fn oracle_full_complex(n: usize) -> Result<Vec<i64>, PipelineError> {
    if !(2..=3).contains(&n) {
        return Err(PipelineError::InvalidConfig(format!(
            "the full-complex oracle only runs for n = 2, 3 (got {n})"
        )));
    }
    let bases = full_bases(n)?;
    let contractor = Contractor::new();
    let mut ranks = vec![0usize; bases.len() + 1];
    for k in 1..bases.len() {
        let (src, dst) = (&bases[k], &bases[k - 1]);
        let mut entries = Vec::new();
        for (col, e) in src.elements.iter().enumerate() {
            let contracted = contract_terms(&e.graph, &e.forest, &contractor).into_iter();
            let removed = remove_terms(&e.graph, &e.forest).into_iter().map(|mut t| {
                t.coeff = -t.coeff;
                t
            });
            for t in contracted.chain(removed) {
                let key = t.key();
                let row = dst
                    .index_of(&key)
                    .ok_or_else(|| ChainError::MissingTarget(key.to_string()))?;
                entries.push((row, col, t.coeff));
            }
        }
        let d = SparseIntMat::new(dst.dim(), src.dim(), entries);
        ranks[k] = rank_rational(&d, DEFAULT_MAX_BITS)?;
    }
    Ok((0..bases.len())
        .map(|k| bases[k].dim() as i64 - ranks[k] as i64 - ranks[k + 1] as i64)
        .collect())
}

/// Alternating count of generators of the whole complex.
pub fn full_complex_euler(n: usize) -> Result<i64, PipelineError> {
    if !(2..=4).contains(&n) {
        return Err(PipelineError::InvalidConfig(format!(
            "generator counts of the whole complex are limited to n <= 4 (got {n})"
        )));
    }
    Ok(full_bases(n)?
        .iter()
        .enumerate()
        .map(|(k, b)| {
            if k % 2 == 0 {
                b.dim() as i64
            } else {
                -(b.dim() as i64)
            }
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(n: usize) -> RankProfile {
        compute_rank_profile(&PipelineConfig::new(n)).unwrap()
    }

    #[test]
    fn small_ranks() {
        let rp = run(2);
        assert_eq!(rp.dims, vec![Some(1), Some(0)]);
        assert_eq!(rp.a, vec![Some(1), Some(1)]);
        let rp = run(3);
        assert_eq!(rp.dims, vec![Some(1), Some(0), Some(0), Some(0)]);
        assert!(rp.is_complete());
    }

    #[test]
    fn oracle_small() {
        assert_eq!(oracle_full_complex(2).unwrap(), vec![1, 0]);
        assert_eq!(oracle_full_complex(3).unwrap(), vec![1, 0, 0, 0]);
        assert!(oracle_full_complex(4).is_err());
    }

    #[test]
    fn default_ranges() {
        assert_eq!(default_p_range(4), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(default_p_range(7), vec![0, 1, 2, 10, 11]);
    }

    #[test]
    fn config_validation() {
        let mut cfg = PipelineConfig::new(3);
        cfg.p_values = vec![4];
        assert!(matches!(
            compute_rank_profile(&cfg),
            Err(PipelineError::InvalidConfig(_))
        ));
        cfg.p_values = vec![0];
        cfg.primes = vec![65520];
        assert_eq!(compute_rank_profile(&cfg).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn caps_leave_holes() {
        let mut cfg = PipelineConfig::new(4);
        cfg.caps.max_basis = 10;
        let rp = compute_rank_profile(&cfg).unwrap();
        assert!(!rp.holes.is_empty());
        assert_eq!(rp.dims[0], None);
        assert_eq!(rp.a[0], Some(5));
    }
}
