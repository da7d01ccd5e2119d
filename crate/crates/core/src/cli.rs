//! Command-line front end.
//!
//! Every command prints a JSON summary on stdout and writes its tables to
//! files. Exit status: 0 on success, 2 on invalid flags, 1 on runtime
//! errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::compare::{cka, overlap, overlap_gt, CkaKernel};
use crate::dataset::{generate, load, read_int_column, write, Family, Format, ManifoldSpec};
use crate::error::{Error, Result};
use crate::export::{num, Table};
use crate::id::{parse_fractions, Estimator};
use crate::neighbors::build_knn;
use crate::pipeline::{cluster_run, id_scan, ClusterConfig, DensityMethod, IdChoice, IdScanConfig};
use crate::redundancy::{chunk_scan_with, scan_table, ReconstructOptions};

#[derive(Debug, Parser)]
#[command(name = "mscope", version, about = "Distance-based analysis of point clouds")]
pub struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "MSCOPE_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a benchmark manifold.
    Gen(GenArgs),
    /// Intrinsic dimension across scales.
    IdScan(IdScanArgs),
    /// Density-peak clustering.
    Cluster(ClusterArgs),
    /// Neighborhood overlap between two representations or with labels.
    Overlap(OverlapArgs),
    /// Chunk reconstruction scan of a wide matrix.
    Chunks(ChunksArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Binary,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Binary => Format::Binary,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_parser = parse_family)]
    pub family: Family,
    /// Intrinsic dimension.
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Embedding dimension (0 = the family's native one).
    #[arg(long, default_value_t = 0)]
    pub embed: usize,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the file extension (`.bin`/`.msd` binary, else CSV).
    #[arg(long)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Gride,
    Twonn,
    Mle,
}

#[derive(Debug, Args)]
pub struct IdScanArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Gride)]
    pub method: MethodArg,
    /// Largest neighbor rank, a power of two.
    #[arg(long, default_value_t = 64, value_parser = parse_pow2)]
    pub kmax: usize,
    /// Decimation fractions, e.g. "1,1/2,1/4".
    #[arg(long, value_parser = parse_fraction_list)]
    pub fractions: Option<Fractions>,
    /// Repeats per fraction (default 2^i at fraction 2^-i).
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Neighbor order for MLE on subsets.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV.
    #[arg(long, default_value = "id_scan.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone)]
pub struct Fractions(pub Vec<f64>);

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DensityArg {
    Knn,
    Pak,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = DensityArg::Pak)]
    pub density: DensityArg,
    /// Neighbors for the fixed-k density.
    #[arg(long, default_value_t = 30)]
    pub k: usize,
    /// "auto" or a positive number.
    #[arg(long, default_value = "auto", value_parser = parse_id)]
    pub id: IdChoice,
    #[arg(long, default_value_t = 1.6)]
    pub z: f64,
    #[arg(long = "k-graph", default_value_t = 30)]
    pub k_graph: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OverlapArgs {
    /// First representation.
    #[arg(long)]
    pub a: PathBuf,
    /// Second representation (omit when comparing with labels).
    #[arg(long)]
    pub b: Option<PathBuf>,
    /// One integer label per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    pub k: usize,
    /// Also report linear and Gaussian CKA.
    #[arg(long)]
    pub cka: bool,
    /// Optional per-point CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ChunksArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Chunk sizes, e.g. "8,16,32".
    #[arg(long, value_parser = parse_sizes)]
    pub sizes: Sizes,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    pub ridge: f64,
    /// Fit on raw columns instead of centered ones.
    #[arg(long)]
    pub no_center: bool,
    #[arg(long, default_value = "chunks.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone)]
pub struct Sizes(pub Vec<usize>);

fn parse_family(s: &str) -> std::result::Result<Family, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_pow2(s: &str) -> std::result::Result<usize, String> {
    let k: usize = s.parse().map_err(|_| format!("'{s}' is not an integer"))?;
    if k >= 2 && k.is_power_of_two() {
        Ok(k)
    } else {
        Err(format!("{k} is not a power of two >= 2"))
    }
}

fn parse_fraction_list(s: &str) -> std::result::Result<Fractions, String> {
    parse_fractions(s).map(Fractions).map_err(|e| e.to_string())
}

fn parse_id(s: &str) -> std::result::Result<IdChoice, String> {
    if s == "auto" {
        return Ok(IdChoice::Auto);
    }
    match s.parse::<f64>() {
        Ok(d) if d > 0.0 && d.is_finite() => Ok(IdChoice::Fixed(d)),
        _ => Err(format!("expected 'auto' or a positive number, got '{s}'")),
    }
}

fn parse_sizes(s: &str) -> std::result::Result<Sizes, String> {
    let v = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<usize>().ok().filter(|&x| x > 0).ok_or_else(|| format!("bad size '{p}'")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if v.is_empty() {
        return Err("no sizes given".into());
    }
    Ok(Sizes(v))
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(t) = cli.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match run(&cli.command) {
        Ok(summary) => {
            use std::io::Write;
            let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
            // a closed pipe downstream is not an error of the run
            let _ = writeln!(std::io::stdout(), "{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(cmd: &Command) -> Result<Value> {
    match cmd {
        Command::Gen(a) => cmd_gen(a),
        Command::IdScan(a) => cmd_id_scan(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Overlap(a) => cmd_overlap(a),
        Command::Chunks(a) => cmd_chunks(a),
    }
}

fn load_any(path: &Path) -> Result<crate::Dataset> {
    load(path, Format::from_path(path))
}

fn cmd_gen(a: &GenArgs) -> Result<Value> {
    let mut spec = ManifoldSpec::new(a.family, a.d, a.n).noise(a.sigma).seed(a.seed);
    if a.embed > 0 {
        spec = spec.embed(a.embed);
    }
    let data = generate(&spec)?;
    let format = a.format.map_or_else(|| Format::from_path(&a.out), Format::from);
    write(&data, &a.out, format)?;
    Ok(json!({
        "n": data.n(),
        "d": a.d,
        "embed": data.dim(),
        "sigma": a.sigma,
        "family": a.family,
        "seed": a.seed,
        "path": a.out,
    }))
}

fn cmd_id_scan(a: &IdScanArgs) -> Result<Value> {
    let data = load_any(&a.input)?;
    let method = match a.method {
        MethodArg::Gride => Estimator::Gride,
        MethodArg::Twonn => Estimator::TwoNn,
        MethodArg::Mle => Estimator::Mle,
    };
    let cfg = IdScanConfig {
        method,
        k_max: a.kmax,
        fractions: a.fractions.clone().map(|f| f.0),
        repeats: a.repeats,
        mle_k: a.k,
        seed: a.seed,
    };
    let scan = id_scan(&data, &cfg)?;
    scan.table().write(&a.out)?;
    Ok(json!({
        "input": a.input,
        "n": data.n(),
        "method": scan.method,
        "rows": scan.estimates.len(),
        "d_hat": scan.estimates.iter().map(|e| e.d_hat).collect::<Vec<_>>(),
        "scale_param": scan.estimates.iter().map(|e| e.scale_param).collect::<Vec<_>>(),
        "out": a.out,
    }))
}

fn cmd_cluster(a: &ClusterArgs) -> Result<Value> {
    let data = load_any(&a.input)?;
    let cfg = ClusterConfig {
        density: match a.density {
            DensityArg::Knn => DensityMethod::Knn { k: a.k },
            DensityArg::Pak => DensityMethod::Pak,
        },
        id: a.id,
        z: a.z,
        k_graph: a.k_graph,
    };
    let run = cluster_run(&data, &cfg)?;
    std::fs::create_dir_all(&a.out)?;
    let c = &run.clustering;
    let files = [
        ("clusters", a.out.join("clusters.csv")),
        ("saddles", a.out.join("saddles.csv")),
        ("dendrogram", a.out.join("dendrogram.csv")),
        ("peaks_2d", a.out.join("peaks_2d.csv")),
    ];
    c.table(&run.density).write(&files[0].1)?;
    c.saddle_table().write(&files[1].1)?;
    let mut dendro = Table::new(&["node_a", "node_b", "log_rho_saddle"]);
    if let Some(d) = &run.dendrogram {
        dendro = d.table();
    }
    dendro.write(&files[2].1)?;
    let mut emb = Table::new(&["peak", "x", "y"]);
    match &run.embedding {
        Some(e) => {
            for (p, xy) in e.coords.iter().enumerate() {
                emb.push(vec![p.to_string(), num(xy[0]), num(xy[1])]);
            }
        }
        None => emb.push(vec!["0".into(), "0".into(), "0".into()]),
    }
    emb.write(&files[3].1)?;
    let mut sizes = vec![0usize; c.n_peaks()];
    for &l in &c.labels {
        sizes[l] += 1;
    }
    Ok(json!({
        "input": a.input,
        "n": data.n(),
        "id": match run.id_choice { IdChoice::Auto => json!("auto"), IdChoice::Fixed(d) => json!(d) },
        "id_used": run.id_used,
        "density": run.density_method,
        "z": a.z,
        "k_graph": a.k_graph,
        "n_clusters": c.n_peaks(),
        "cluster_sizes": sizes,
        "peak_log_rho": c.peak_log_rho,
        "halo_points": c.halo.iter().filter(|&&h| h).count(),
        "constant_density": c.constant_density,
        "dendrogram_disconnected": run.dendrogram.as_ref().map(|d| d.disconnected),
        "files": files.iter().map(|(k, p)| (k.to_string(), json!(p))).collect::<serde_json::Map<_, _>>(),
    }))
}

fn cmd_overlap(a: &OverlapArgs) -> Result<Value> {
    let da = load_any(&a.a)?;
    let ga = build_knn(&da, a.k)?;
    let (res, key, extra) = match (&a.b, &a.labels) {
        (Some(b), None) => {
            let db = load_any(b)?;
            let r = overlap(&ga, &build_knn(&db, a.k)?, a.k)?;
            let extra = if a.cka {
                json!({
                    "cka_linear": cka(&da, &db, CkaKernel::Linear)?,
                    "cka_gaussian": cka(&da, &db, CkaKernel::gaussian())?,
                })
            } else {
                json!({})
            };
            (r, format!("{}:{}", da.name(), db.name()), extra)
        }
        (None, labels) => {
            let labels = match labels {
                Some(p) => Some(read_int_column(p)?),
                None => da.labels().map(<[i32]>::to_vec),
            };
            let r = overlap_gt(&ga, labels.as_deref(), a.k)?;
            (r, format!("{}:labels", da.name()), json!({}))
        }
        (Some(_), Some(_)) => return Err(Error::InvalidData("give either --b or --labels, not both".into())),
    };
    if let Some(out) = &a.out {
        let mut t = Table::new(&["index", "chi"]);
        for (i, v) in res.per_point.iter().enumerate() {
            t.push(vec![i.to_string(), num(*v)]);
        }
        t.write(out)?;
    }
    let mut entry = json!({ "chi": res.chi, "k": res.k });
    if let (Value::Object(m), Value::Object(x)) = (&mut entry, extra) {
        m.extend(x);
    }
    Ok(json!({ key: entry }))
}

fn cmd_chunks(a: &ChunksArgs) -> Result<Value> {
    let data = load_any(&a.input)?;
    let opts = ReconstructOptions {
        center: !a.no_center,
        ridge: a.ridge,
    };
    let rows = chunk_scan_with(&data, &a.sizes.0, a.repeats, a.seed, &opts)?;
    scan_table(&rows).write(&a.out)?;
    Ok(json!({
        "input": a.input,
        "n": data.n(),
        "width": data.dim(),
        "repeats": a.repeats,
        "rows": rows.len(),
        "mean_r2": rows.iter().map(|r| r.mean_r2).collect::<Vec<_>>(),
        "mean_corr": rows.iter().map(|r| r.mean_corr).collect::<Vec<_>>(),
        "out": a.out,
    }))
}
