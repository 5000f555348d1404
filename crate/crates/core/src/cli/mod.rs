//! `parwire` command line.
//!
//! Exit codes: 0 success, 1 usage or invalid configuration, 2 I/O or
//! malformed input file, 3 invariant violation.

mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::OUT_ENV;
use config::{out_dir, FileConfig, GenKnobs, PathKnobs, ScoreKnobs, SimKnobs, SourceKnobs, SweepKnobs};

use crate::archmodel::ArchSpec;
use crate::dagify::depth_width_histogram;
use crate::deploy::{balance_entropy, group_chains, place_greedy, simulate, Workload};
use crate::error::{Error, Result};
use crate::hypart::{build_hypergraph, load_imbalance, partition, total_communication, write_hmetis, write_partition};
use crate::randgraph::GeneratorKind;
use crate::score::{concurrency_score, write_metrics_csv, RowLabel, CSV_HEADER};
use crate::sweep::{run_sweep, sample_architecture, summarize, to_csv, SweepConfig};

#[derive(Debug, Parser)]
#[command(name = "parwire", version, about = "Random concurrent architectures: generate, score, partition, simulate")]
struct Cli {
    #[command(flatten)]
    paths: PathKnobs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate one architecture; writes JSON and DOT
    Gen {
        #[command(flatten)]
        gen: GenKnobs,
    },
    /// Concurrency score over an imbalance grid for each unit count
    Score {
        #[command(flatten)]
        src: SourceKnobs,
        #[command(flatten)]
        gen: GenKnobs,
        #[command(flatten)]
        score: ScoreKnobs,
    },
    /// Partition the hypergraph; writes hMETIS and partition files
    Partition {
        #[command(flatten)]
        src: SourceKnobs,
        #[command(flatten)]
        gen: GenKnobs,
        #[command(flatten)]
        score: ScoreKnobs,
    },
    /// Group, place and simulate one inference; writes placement and trace
    Simulate {
        #[command(flatten)]
        src: SourceKnobs,
        #[command(flatten)]
        gen: GenKnobs,
        #[command(flatten)]
        score: ScoreKnobs,
        #[command(flatten)]
        sim: SimKnobs,
    },
    /// Many-sample comparison of generators; writes long and summary CSVs
    Sweep {
        #[command(flatten)]
        sweep: SweepKnobs,
        #[command(flatten)]
        gen: GenKnobs,
        #[command(flatten)]
        score: ScoreKnobs,
        #[command(flatten)]
        sim: SimKnobs,
    },
    /// Depth/width histogram of one architecture
    Histogram {
        #[command(flatten)]
        src: SourceKnobs,
        #[command(flatten)]
        gen: GenKnobs,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) => 1,
        Error::Io { .. } | Error::Malformed { .. } => 2,
        Error::Cycle | Error::Invariant(_) | Error::Unplaced(_) => 3,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(report) => {
            print!("{report}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn run(cli: Cli) -> Result<String> {
    let file = match &cli.paths.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let out = out_dir(cli.paths.out, &file);
    match cli.command {
        Command::Gen { gen } => cmd_gen(gen.or(file.view()?), &out),
        Command::Score { src, gen, score } => {
            cmd_score(src.or(file.view()?), gen.or(file.view()?), score.or(file.view()?), &out)
        }
        Command::Partition { src, gen, score } => {
            cmd_partition(src.or(file.view()?), gen.or(file.view()?), score.or(file.view()?), &out)
        }
        Command::Simulate { src, gen, score, sim } => cmd_simulate(
            src.or(file.view()?),
            gen.or(file.view()?),
            score.or(file.view()?),
            sim.or(file.view()?),
            &out,
        ),
        Command::Sweep { sweep, gen, score, sim } => cmd_sweep(
            sweep.or(file.view()?),
            gen.or(file.view()?),
            score.or(file.view()?),
            sim.or(file.view()?),
            &out,
        ),
        Command::Histogram { src, gen } => cmd_histogram(src.or(file.view()?), gen.or(file.view()?), &out),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Loaded or generated architecture plus the stem used for output names.
struct Source {
    spec: ArchSpec,
    stem: String,
    generator: String,
    n_vertices: usize,
    seed: u64,
}

fn load_source(src: &SourceKnobs, gen: &GenKnobs) -> Result<Source> {
    if let Some(path) = &src.arch {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec = ArchSpec::from_json(&text)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("arch").to_string();
        let source = spec.dag().source_graph();
        let generator = source
            .generator
            .as_ref()
            .map(|g| g.kind.name().to_string())
            .unwrap_or_else(|| "custom".into());
        return Ok(Source {
            n_vertices: spec.dag().n_blocks(),
            seed: gen.seed.unwrap_or(spec.seed()),
            spec,
            stem,
            generator,
        });
    }
    let cfg = gen.generator();
    cfg.validate()?;
    let staging = gen.staging();
    let spec = sample_architecture(&cfg, cfg.seed, &staging)?;
    Ok(Source {
        stem: format!("{}-n{}-s{}", cfg.kind.name(), cfg.n, cfg.seed),
        generator: cfg.kind.name().to_string(),
        n_vertices: cfg.n,
        seed: cfg.seed,
        spec,
    })
}

fn cmd_gen(gen: GenKnobs, out: &Path) -> Result<String> {
    let s = load_source(&SourceKnobs::default(), &gen)?;
    let dag = s.spec.dag();
    let json = write_file(out, &format!("{}.json", s.stem), &s.spec.to_json())?;
    let dot = write_file(out, &format!("{}.dot", s.stem), &s.spec.to_dot())?;
    let mut r = String::new();
    writeln!(r, "architecture {}", s.stem).unwrap();
    writeln!(r, "vertices {}", dag.n_vertices()).unwrap();
    writeln!(r, "undirected edges {}", dag.source_graph().edge_count()).unwrap();
    writeln!(r, "directed edges {}", dag.edges().len()).unwrap();
    writeln!(r, "params {}", s.spec.total_params()).unwrap();
    writeln!(r, "flops {}", s.spec.total_flops()).unwrap();
    writeln!(r, "wrote {}", json.display()).unwrap();
    writeln!(r, "wrote {}", dot.display()).unwrap();
    Ok(r)
}

fn cmd_score(src: SourceKnobs, gen: GenKnobs, score: ScoreKnobs, out: &Path) -> Result<String> {
    let s = load_source(&src, &gen)?;
    let label = RowLabel {
        generator: s.generator.clone(),
        seed: s.seed,
        n_vertices: s.n_vertices,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::invariant(format!("CSV write failed: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    let mut r = String::new();
    for n in score.units() {
        let report = concurrency_score(&s.spec, n, &score.eps(), &score.weights(), s.seed)?;
        write_metrics_csv(&mut w, &label, &report).map_err(csv_err)?;
        let best = report.best_record();
        writeln!(
            r,
            "n={n} best_cs={} epsilon={} delta_w={} lambda_prime={} eta={}{}",
            best.cs,
            best.epsilon,
            best.delta_w,
            best.lambda_prime,
            best.eta,
            if report.all_best_effort() { " (no balanced partition)" } else { "" }
        )
        .unwrap();
    }
    let text = String::from_utf8(w.into_inner().map_err(|e| Error::invariant(e.to_string()))?)
        .expect("CSV output is UTF-8");
    let path = write_file(out, &format!("{}-score.csv", s.stem), &text)?;
    writeln!(r, "wrote {}", path.display()).unwrap();
    Ok(r)
}

fn cmd_partition(src: SourceKnobs, gen: GenKnobs, score: ScoreKnobs, out: &Path) -> Result<String> {
    let s = load_source(&src, &gen)?;
    let h = build_hypergraph(&s.spec);
    let mut r = String::new();
    let hgr = write_file(out, &format!("{}.hgr", s.stem), &write_hmetis(&h))?;
    writeln!(r, "wrote {}", hgr.display()).unwrap();
    for n in score.units() {
        for eps in score.eps() {
            let p = partition(&h, n, eps, s.seed)?;
            let path = write_file(out, &format!("{}-p{n}-e{eps}.part", s.stem), &write_partition(p.assignment()))?;
            writeln!(
                r,
                "parts={n} epsilon={eps} lambda_bytes={} delta_w={}{} -> {}",
                total_communication(&h, &p)?,
                load_imbalance(&p),
                if p.is_best_effort() { " best_effort" } else { "" },
                path.display()
            )
            .unwrap();
        }
    }
    Ok(r)
}

fn cmd_simulate(src: SourceKnobs, gen: GenKnobs, score: ScoreKnobs, sim: SimKnobs, out: &Path) -> Result<String> {
    let s = load_source(&src, &gen)?;
    let opts = sim.options();
    let w = Workload::from(&s.spec);
    let groups = group_chains(&w);
    let mut r = String::new();
    for n in score.units() {
        let placement = place_greedy(&groups, n, sim.dedicated_merge())?;
        let result = simulate(&w, &groups, &placement, &opts)?;
        let pj = write_file(out, &format!("{}-n{n}-placement.json", s.stem), &placement.to_json(&groups))?;
        let tr = write_file(out, &format!("{}-n{n}-trace.csv", s.stem), &result.schedule.trace_csv())?;
        let entropy = if n >= 2 {
            balance_entropy(&placement, &groups)?.to_string()
        } else {
            "-".into()
        };
        writeln!(
            r,
            "n={n} groups={} makespan={} single_unit={} speedup={} entropy={entropy}",
            groups.n_groups(),
            result.makespan(),
            result.single_unit_makespan,
            result.speedup()
        )
        .unwrap();
        writeln!(r, "wrote {}", pj.display()).unwrap();
        writeln!(r, "wrote {}", tr.display()).unwrap();
    }
    Ok(r)
}

fn cmd_sweep(sweep: SweepKnobs, gen: GenKnobs, score: ScoreKnobs, sim: SimKnobs, out: &Path) -> Result<String> {
    let kinds = sweep.generators.clone().unwrap_or_else(|| GeneratorKind::ALL.to_vec());
    let mut cfg = SweepConfig::presets(
        &kinds,
        gen.n.unwrap_or(40),
        sweep.samples.unwrap_or(1000),
        sweep.master_seed.unwrap_or(0),
    );
    cfg.generators = cfg.generators.into_iter().map(|g| gen.apply(g)).collect();
    cfg.staging = gen.staging();
    cfg.units = score.units();
    cfg.eps_grid = score.eps();
    cfg.weights = score.weights();
    cfg.sim = sim.options();
    cfg.dedicated_merge = sim.dedicated_merge();
    let rows = run_sweep(&cfg, sweep.jobs.unwrap_or(0))?;
    let summary = summarize(&rows);
    let long = write_file(out, "sweep-long.csv", &to_csv(&rows)?)?;
    let short = write_file(out, "sweep-summary.csv", &to_csv(&summary)?)?;
    let mut r = String::new();
    writeln!(r, "generator n_units mean_cs mean_latency_norm mean_speedup").unwrap();
    let pick = |g: &str, n: usize, m: &str| {
        summary
            .iter()
            .find(|x| x.generator == g && x.n_units == n && x.metric == m)
            .map(|x| x.mean)
            .unwrap_or(f64::NAN)
    };
    for k in &kinds {
        for &n in &cfg.units {
            writeln!(
                r,
                "{} {n} {:.4} {:.4} {:.3}",
                k.name(),
                pick(k.name(), n, "cs"),
                pick(k.name(), n, "latency_norm"),
                pick(k.name(), n, "speedup")
            )
            .unwrap();
        }
    }
    writeln!(r, "wrote {}", long.display()).unwrap();
    writeln!(r, "wrote {}", short.display()).unwrap();
    Ok(r)
}

fn cmd_histogram(src: SourceKnobs, gen: GenKnobs, out: &Path) -> Result<String> {
    let s = load_source(&src, &gen)?;
    let hist = depth_width_histogram(s.spec.dag());
    let mut text = String::from("depth,width\n");
    for (d, w) in hist.widths.iter().enumerate() {
        writeln!(text, "{d},{w}").unwrap();
    }
    let path = write_file(out, &format!("{}-histogram.csv", s.stem), &text)?;
    Ok(format!(
        "depths {} max_width {}\nwrote {}\n",
        hist.widths.len(),
        hist.max_width(),
        path.display()
    ))
}
