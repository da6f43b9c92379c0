//! Command-line front end.
//!
//! Exit status: 0 on success, 1 on validation failure, 2 when a resource cap
//! left holes in the result, 3 when the two primes disagree.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use outfn::chain::ChainBasis;
use outfn::cycleio::{parse_cycle, verify_cycle};
use outfn::enumerator::{enumerate_graphs, EnumMode, EnumSpec};
use outfn::exactla::DEFAULT_PRIMES;
use outfn::pipeline::{
    compute_rank_profile, load_graphs, oracle_full_complex, Caps, PipelineConfig, PipelineError,
};

#[derive(Parser, Debug)]
#[command(
    name = "outfn",
    version,
    about = "Rational homology of Out(F_n) from forested graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for cached artifacts
    #[arg(long, global = true, env = "OUTFN_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Largest matrix or elimination fill, in nonzeros
    #[arg(long, global = true, default_value_t = Caps::default().max_nnz)]
    max_nnz: usize,
    /// Largest forest basis for one p
    #[arg(long, global = true, default_value_t = Caps::default().max_basis)]
    max_basis: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Args, Debug)]
struct Degrees {
    /// Comma-separated list of p values
    #[arg(long, value_delimiter = ',')]
    p: Vec<usize>,
    /// All p up to this value
    #[arg(long, conflicts_with = "p")]
    p_max: Option<usize>,
}

impl Degrees {
    fn resolve(&self, n: usize) -> Option<Vec<usize>> {
        if !self.p.is_empty() {
            Some(self.p.clone())
        } else {
            self.p_max.map(|m| (0..=m).collect())
        }
        .or_else(|| (n >= 2).then(|| outfn::pipeline::default_p_range(n)))
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate graph classes of rank n
    Graphs {
        #[arg(long)]
        n: usize,
        /// Trivalent graphs only (the default)
        #[arg(long, conflicts_with = "max_degree")]
        trivalent: bool,
        /// All graphs up to this degree instead
        #[arg(long)]
        max_degree: Option<usize>,
        /// Admit loops (with --max-degree)
        #[arg(long)]
        loops: bool,
        #[arg(long)]
        count_only: bool,
    },
    /// Forest bases and their sizes a_p
    Basis {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        degrees: Degrees,
        #[arg(long)]
        count_only: bool,
    },
    /// Assemble both differentials and write them to the cache directory
    Matrices {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        degrees: Degrees,
    },
    /// Rank profile and homology dimensions
    Homology {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        degrees: Degrees,
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Check that a cycle file lies in the kernel of both differentials
    VerifyCycle {
        file: PathBuf,
        /// Expected rank (taken from the file when omitted)
        #[arg(long)]
        n: Option<usize>,
        /// Expected forest size (taken from the file when omitted)
        #[arg(long)]
        p: Option<usize>,
    },
    /// Homology of the whole complex by exact ranks (n = 2, 3)
    Oracle {
        #[arg(long)]
        n: usize,
    },
    /// Compare the oracle with the rank profile
    Check {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Args, Debug)]
struct FieldArgs {
    #[arg(long, default_value_t = DEFAULT_PRIMES[0])]
    prime: u32,
    #[arg(long, default_value_t = DEFAULT_PRIMES[1])]
    second_prime: u32,
    /// Skip the second prime
    #[arg(long)]
    single_prime: bool,
    /// Exact rational arithmetic instead of primes
    #[arg(long)]
    rational: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn io_fail(e: std::io::Error) -> Failure {
    invalid(e.to_string())
}

fn check_n(n: usize) -> Result<(), Failure> {
    if !(2..=12).contains(&n) {
        return Err(invalid(format!("n = {n} is outside 2..=12")));
    }
    Ok(())
}

fn check_degrees(n: usize, ps: &[usize]) -> Result<(), Failure> {
    let top = 2 * n - 3;
    match ps.iter().find(|&&p| p > top) {
        Some(p) => Err(invalid(format!("p = {p} exceeds 2n - 3 = {top}"))),
        None => Ok(()),
    }
}

fn config(n: usize, ps: Vec<usize>, common: &Common) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(n);
    cfg.p_values = ps;
    cfg.cache_dir = common.cache_dir.clone();
    cfg.caps = Caps {
        max_basis: common.max_basis,
        max_nnz: common.max_nnz,
    };
    cfg
}

fn print_dims(dims: &[i64], format: Format, out: &mut impl Write) -> std::io::Result<()> {
    match format {
        Format::Table => {
            let s: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
            writeln!(out, "{}", s.join(","))
        }
        Format::Json => writeln!(out, "{}", serde_json::json!({ "dims": dims })),
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    if let Some(t) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| invalid(e.to_string()))?;
    }
    let common = &cli.common;
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cli.command {
        Command::Graphs {
            n,
            trivalent: _,
            max_degree,
            loops,
            count_only,
        } => {
            check_n(n)?;
            let spec = EnumSpec {
                n,
                mode: max_degree.map_or(EnumMode::Trivalent, EnumMode::MaxDegree),
                allow_loops: loops,
                max_classes: None,
            };
            spec.validate().map_err(|e| invalid(e.to_string()))?;
            let graphs = match spec.mode {
                EnumMode::Trivalent => load_graphs(n, common.cache_dir.as_deref())?
                    .into_iter()
                    .map(|g| g.as_ref().clone())
                    .collect(),
                _ => enumerate_graphs(&spec).map_err(PipelineError::from)?,
            };
            if count_only {
                writeln!(out, "{}", graphs.len()).map_err(io_fail)?;
            } else {
                for g in &graphs {
                    writeln!(out, "{}", g.canon()).map_err(io_fail)?;
                }
            }
        }
        Command::Basis {
            n,
            degrees,
            count_only,
        } => {
            check_n(n)?;
            let ps = degrees.resolve(n).unwrap_or_default();
            check_degrees(n, &ps)?;
            let graphs = load_graphs(n, common.cache_dir.as_deref())?;
            for p in ps {
                let b =
                    ChainBasis::build_capped(&graphs, n, p, common.max_basis).map_err(|found| {
                        Failure {
                            code: 2,
                            message: format!(
                                "p = {p}: basis size {found} exceeds the cap of {}",
                                common.max_basis
                            ),
                        }
                    })?;
                if let Some(dir) = &common.cache_dir {
                    write_file(&outfn::pipeline::basis_cache_path(dir, n, p), |w| {
                        b.write(w)
                    })?;
                }
                if count_only {
                    writeln!(out, "p = {p}: a_p = {}", b.dim()).map_err(io_fail)?;
                } else {
                    b.write(&mut out).map_err(io_fail)?;
                }
            }
        }
        Command::Matrices { n, degrees } => {
            check_n(n)?;
            let Some(dir) = common.cache_dir.clone() else {
                return Err(invalid("matrices needs --cache-dir or OUTFN_CACHE_DIR"));
            };
            let ps = degrees.resolve(n).unwrap_or_default();
            check_degrees(n, &ps)?;
            let graphs = load_graphs(n, Some(&dir))?;
            for p in ps {
                let cap_fail = |found: usize| Failure {
                    code: 2,
                    message: format!(
                        "p = {p}: basis size {found} exceeds the cap of {}",
                        common.max_basis
                    ),
                };
                let b =
                    ChainBasis::build_capped(&graphs, n, p, common.max_basis).map_err(cap_fail)?;
                let dc = outfn::chain::boundary_contract(&b);
                let dr = if p == 0 {
                    outfn::chain::SparseIntMat::new(0, b.dim(), Vec::new())
                } else {
                    let lower = ChainBasis::build_capped(&graphs, n, p - 1, common.max_basis)
                        .map_err(cap_fail)?;
                    outfn::chain::boundary_remove(&b, &lower).map_err(|e| invalid(e.to_string()))?
                };
                for (name, m) in [("dc", &dc), ("dr", &dr)] {
                    let path = dir.join(format!("{name}-n{n}-p{p}.txt"));
                    write_file(&path, |w| m.write_triplets(w))?;
                    write_file(&path.with_extension("rows"), |w| m.write_row_labels(w))?;
                    writeln!(
                        out,
                        "p = {p}: {name} {} x {}, {} nonzeros",
                        m.rows,
                        m.cols,
                        m.nnz()
                    )
                    .map_err(io_fail)?;
                }
            }
        }
        Command::Homology { n, degrees, field } => {
            check_n(n)?;
            let ps = degrees.resolve(n).unwrap_or_default();
            let mut cfg = config(n, ps, common);
            cfg.rational = field.rational;
            cfg.primes = if field.single_prime {
                vec![field.prime]
            } else {
                vec![field.prime, field.second_prime]
            };
            let rp = compute_rank_profile(&cfg)?;
            match common.format {
                Format::Table => write!(out, "{}", rp.to_table()),
                Format::Json => writeln!(out, "{}", rp.to_json(false)),
            }
            .map_err(io_fail)?;
            if !rp.holes.is_empty() {
                out.flush().map_err(io_fail)?;
                return Err(Failure {
                    code: 2,
                    message: format!("{} stage(s) stopped at a resource cap", rp.holes.len()),
                });
            }
        }
        Command::VerifyCycle { file, n, p } => {
            let f =
                fs::File::open(&file).map_err(|e| invalid(format!("{}: {e}", file.display())))?;
            let w = parse_cycle(BufReader::new(f))
                .map_err(|e| invalid(format!("{}: {e}", file.display())))?;
            let (n, p) = match (n, p, w.is_zero()) {
                (Some(n), Some(p), true) => (n, p),
                (_, _, true) => return Err(invalid("empty cycle file needs --n and --p")),
                (n_arg, p_arg, false) => {
                    if n_arg.is_some_and(|x| x != w.n) || p_arg.is_some_and(|x| x != w.p) {
                        return Err(invalid(format!("file has n = {}, p = {}", w.n, w.p)));
                    }
                    (w.n, w.p)
                }
            };
            check_n(n)?;
            check_degrees(n, &[p])?;
            let graphs = load_graphs(n, common.cache_dir.as_deref())?;
            let b = ChainBasis::build_capped(&graphs, n, p, common.max_basis).map_err(|found| {
                Failure {
                    code: 2,
                    message: format!("basis size {found} exceeds the cap of {}", common.max_basis),
                }
            })?;
            let v = verify_cycle(&w, &b);
            match common.format {
                Format::Json => writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&v).expect("verdict serializes")
                ),
                Format::Table => writeln!(out, "n = {}, p = {}, terms = {}", v.n, v.p, v.terms)
                    .and_then(|_| writeln!(out, "in basis: {}", v.is_in_basis))
                    .and_then(|_| writeln!(out, "contraction zero: {}", v.dc_zero))
                    .and_then(|_| writeln!(out, "removal zero: {}", v.dr_zero))
                    .and_then(|_| {
                        v.missing
                            .iter()
                            .try_for_each(|m| writeln!(out, "missing: {m}"))
                    }),
            }
            .map_err(io_fail)?;
            if !v.passes() {
                return Ok(1);
            }
        }
        Command::Oracle { n } => {
            let dims = oracle_full_complex(n)?;
            print_dims(&dims, common.format, &mut out).map_err(io_fail)?;
        }
        Command::Check { n } => {
            let oracle = oracle_full_complex(n)?;
            let rp = compute_rank_profile(&config(n, outfn::pipeline::default_p_range(n), common))?;
            let dims: Vec<i64> = rp.dims.iter().map(|d| d.unwrap_or(i64::MIN)).collect();
            let agree = dims == oracle;
            writeln!(out, "oracle:   {:?}", oracle).map_err(io_fail)?;
            writeln!(
                out,
                "pipeline: {:?}",
                rp.dims.iter().flatten().collect::<Vec<_>>()
            )
            .map_err(io_fail)?;
            writeln!(out, "{}", if agree { "agree" } else { "DISAGREE" }).map_err(io_fail)?;
            if !agree {
                return Ok(1);
            }
        }
    }
    out.flush().map_err(io_fail)?;
    Ok(0)
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
) -> Result<(), Failure> {
    let go = || -> std::io::Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut w = BufWriter::new(fs::File::create(path)?);
        body(&mut w)?;
        w.flush()
    };
    go().map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
