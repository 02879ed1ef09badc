use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gridcube::cubelabel::{double_caterpillar, label_from_caterpillar, search_caterpillar, verify_window, Caterpillar};
use gridcube::grid::DEFAULT_CAP;
use gridcube::pipeline::Pipeline;
use gridcube::rounding::parse_matrices;
use gridcube::verify::{assemble_hk, audit, audit_embedding, dilation, labelings_for, parse_gridcube, write_gridcube};
use gridcube::GridSpec;

/// Embed multidimensional grids into their optimal hypercubes.
#[derive(Parser)]
#[command(name = "gridcube", version)]
struct Cli {
    /// Worker threads for edge scans (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct BuildOpts {
    /// Side lengths a1 .. ak.
    dims: Vec<u64>,
    /// Designation matrices replacing the generated ones, one per stage from 2.
    #[arg(long)]
    seed: Option<PathBuf>,
    /// Vertex cap.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u64,
    /// Per-dimension labeling windows, comma separated (0 Gray, 3 or 5).
    #[arg(long, value_delimiter = ',')]
    windows: Option<Vec<u32>>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the embedding and write it as a GRIDCUBE file.
    Embed {
        #[command(flatten)]
        build: BuildOpts,
        /// Output file (default: stdout, with the summary on stderr).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also print the images of stage i.
        #[arg(long)]
        dump_stage: Option<usize>,
    },
    /// Run the invariant battery on dims or on a GRIDCUBE file.
    Audit {
        #[command(flatten)]
        build: BuildOpts,
        /// GRIDCUBE file to audit instead of building from dims.
        #[arg(long, conflicts_with = "dims")]
        from: Option<PathBuf>,
    },
    /// Find (or load) a spanning cyclic caterpillar of Q_t and verify its window.
    Cat {
        t: u32,
        leaf_degree: u32,
        /// Start from the caterpillar of this smaller dimension and double.
        #[arg(long)]
        from: Option<u32>,
        #[arg(long, default_value = ".")]
        cache_dir: PathBuf,
        /// Cache file to write (default: cat-<t>-<leaf_degree>.txt in the cache dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn build(opts: &BuildOpts) -> Result<(GridSpec, Pipeline)> {
    if opts.dims.is_empty() {
        bail!("no side lengths given");
    }
    let spec = GridSpec::with_cap(&opts.dims, opts.cap)?;
    let seeds = match &opts.seed {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_matrices(&text)?
        }
        None => Vec::new(),
    };
    let p = Pipeline::build_seeded(&spec, &seeds)?;
    Ok((spec, p))
}

fn join<T: ToString>(v: impl IntoIterator<Item = T>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn embed(build_opts: &BuildOpts, out: Option<&Path>, dump_stage: Option<usize>) -> Result<bool> {
    let (spec, p) = build(build_opts)?;
    let emb = assemble_hk(&spec, p.fk(), labelings_for(&spec, build_opts.windows.as_deref())?)?;
    let file = write_gridcube(&emb);
    let mut info: Box<dyn std::io::Write> = match out {
        Some(path) => {
            fs::write(path, &file).with_context(|| format!("writing {}", path.display()))?;
            Box::new(std::io::stdout())
        }
        None => {
            std::io::stdout().write_all(file.as_bytes())?;
            Box::new(std::io::stderr())
        }
    };
    if let Some(i) = dump_stage {
        write!(info, "{}", p.dump_stage(i)?)?;
    }
    let budgets = (2..=spec.k()).map(|i| spec.level_budget(i)).collect::<gridcube::Result<Vec<_>>>()?;
    let d = dilation(&emb);
    writeln!(info, "vertices {}", spec.total())?;
    writeln!(info, "n {}", emb.n())?;
    writeln!(info, "u {}", join(budgets))?;
    writeln!(info, "windows {}", join(emb.labelings().iter().map(|l| l.window())))?;
    writeln!(info, "dilation {}", d.dilation)?;
    Ok(true)
}

fn run_audit(build_opts: &BuildOpts, from: Option<&Path>) -> Result<bool> {
    let rep = match from {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            audit_embedding(&parse_gridcube(&text, build_opts.cap)?)
        }
        None => {
            let (spec, p) = build(build_opts)?;
            let emb = assemble_hk(&spec, p.fk(), labelings_for(&spec, build_opts.windows.as_deref())?)?;
            audit(&p, &emb)
        }
    };
    print!("{rep}");
    Ok(rep.passed())
}

fn caterpillar(t: u32, leaf_degree: u32, from: Option<u32>, cache_dir: &Path, out: Option<&Path>) -> Result<bool> {
    let cache_path = |t: u32| cache_dir.join(format!("cat-{t}-{leaf_degree}.txt"));
    let load_or_search = |t: u32| -> Result<Caterpillar> {
        let path = cache_path(t);
        if path.exists() {
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let cat = Caterpillar::from_cache(&text)?;
            if cat.t() != t || cat.leaf_degree() != leaf_degree {
                bail!("{} holds a caterpillar of other parameters", path.display());
            }
            Ok(cat)
        } else {
            Ok(search_caterpillar(t, leaf_degree)?)
        }
    };
    let cat = match from {
        Some(t0) if t0 > t => bail!("--from {t0} exceeds t = {t}"),
        Some(t0) => {
            let mut c = load_or_search(t0)?;
            while c.t() < t {
                c = double_caterpillar(&c)?;
            }
            c
        }
        None => load_or_search(t)?,
    };
    let lab = label_from_caterpillar(&cat);
    let w = cat.window();
    let ok = verify_window(&lab, w, 3).is_none();
    let tight = verify_window(&lab, w + 1, 3);
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| cache_path(t));
    fs::write(&path, cat.to_cache()).with_context(|| format!("writing {}", path.display()))?;
    println!("caterpillar Cat({},{}) in Q_{}", cat.spine().len(), leaf_degree, t);
    println!("window {w}: {}", if ok { "verified" } else { "FAILED" });
    match tight {
        Some((x, y)) => println!("window {}: counterexample {x} {y}", w + 1),
        None => println!("window {}: holds for this caterpillar", w + 1),
    }
    println!("cache {}", path.display());
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let res = match &cli.cmd {
        Cmd::Embed { build, out, dump_stage } => embed(build, out.as_deref(), *dump_stage),
        Cmd::Audit { build, from } => run_audit(build, from.as_deref()),
        Cmd::Cat { t, leaf_degree, from, cache_dir, out } => {
            caterpillar(*t, *leaf_degree, *from, cache_dir, out.as_deref())
        }
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
