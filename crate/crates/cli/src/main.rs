use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use vistrace::config::{PipelineConfig, Z0Choice};
use vistrace::emit::{canonical_json, emit, Format};
use vistrace::generators::{generate_domain, DomainSpec};
use vistrace::pipeline::run_pipeline;
use vistrace::suites::{run_suite, SuiteOptions, LEMMAS};

#[derive(Parser)]
#[command(
    name = "vistrace",
    version,
    about = "Visible boundaries and Besov traces on grid domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize a domain and write its interior mask as text.
    Generate {
        /// disk, annulus, slit_disk, comb, punctured_disk, koch_flake_interior or mask_file
        name: String,
        /// Generator parameter, e.g. `cells=128` or `teeth=6`.
        #[arg(long = "param", value_parser = parse_kv)]
        params: Vec<(String, String)>,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the full pipeline and write the report files.
    Run(Box<RunArgs>),
    /// Run one lemma's property suite.
    Verify {
        lemma: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 48)]
        cells: usize,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        /// Print the suite report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Summarize a report.json (or a directory holding one).
    Report { path: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// TOML or JSON configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Domain generator name.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long = "param", value_parser = parse_kv)]
    params: Vec<(String, String)>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    q_trace: Option<f64>,
    #[arg(long)]
    q_hat: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    proof_mode: bool,
    /// `auto-deepest` or `x,y`.
    #[arg(long)]
    z0: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "VISTRACE_OUT_DIR")]
    out: Option<PathBuf>,
    /// Comma-separated subset of json, csv, plot.
    #[arg(long, value_delimiter = ',', default_values_t = vec!["json".to_string(), "csv".into(), "plot".into()])]
    format: Vec<String>,
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected key=value, got '{s}'"))
}

fn parse_z0(s: &str) -> Result<Z0Choice> {
    if s == "auto-deepest" {
        return Ok(Z0Choice::default());
    }
    let parts: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("z0 '{s}' is neither auto-deepest nor x,y"))?;
    match parts[..] {
        [x, y] => Ok(Z0Choice::Coords([x, y])),
        _ => bail!("z0 needs two coordinates, got {}", parts.len()),
    }
}

fn parse_format(s: &str) -> Result<Format> {
    Ok(match s {
        "json" => Format::Json,
        "csv" => Format::Csv,
        "plot" => Format::Plot,
        _ => bail!("unknown format '{s}'"),
    })
}

fn build_config(a: &RunArgs) -> Result<PipelineConfig> {
    let mut cfg = match &a.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(name) = &a.domain {
        cfg.domain = DomainSpec::from_params(name, &a.params)?;
    } else if !a.params.is_empty() {
        bail!("--param needs --domain");
    }
    let set = |dst: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *dst = v;
        }
    };
    set(&mut cfg.t, a.t);
    set(&mut cfg.p, a.p);
    set(&mut cfg.q, a.q);
    set(&mut cfg.q_trace, a.q_trace);
    set(&mut cfg.q_hat, a.q_hat);
    set(&mut cfg.c, a.c);
    set(&mut cfg.eta, a.eta);
    if let Some(d) = a.depth {
        cfg.depth = d;
    }
    cfg.strict_mode |= a.strict;
    cfg.proof_mode |= a.proof_mode;
    if let Some(z) = &a.z0 {
        cfg.z0 = parse_z0(z)?;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(o) = &a.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn run(a: &RunArgs) -> Result<ExitCode> {
    let cfg = build_config(a)?;
    let formats = a
        .format
        .iter()
        .map(|s| parse_format(s))
        .collect::<Result<Vec<_>>>()?;
    let report = run_pipeline(&cfg)?;
    let files = emit(&report, &cfg.output_dir, &formats)?;
    let summary = serde_json::to_value(&report)?;
    print_summary(&summary);
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn status_line(name: &str, stage: &Value) -> String {
    let status = stage["status"].as_str().unwrap_or("?");
    match stage["error"].as_str() {
        Some(e) => format!("{name:<14} {status:<8} {e}"),
        None => format!("{name:<14} {status}"),
    }
}

fn num(v: &Value) -> String {
    match v.as_f64() {
        Some(x) => format!("{x:.4e}"),
        None => "null".into(),
    }
}

fn print_summary(report: &Value) {
    let stages = &report["stages"];
    for name in [
        "space",
        "decomposition",
        "lower_content",
        "generations",
        "frostman",
        "john",
        "content_bound",
        "trace",
    ] {
        println!("{}", status_line(name, &stages[name]));
    }
    let out = |s: &str| &stages[s]["output"];
    if let Some(c0) = out("lower_content").get("c0") {
        println!(
            "c0 (empirical lower-constant over sampled scales) = {}",
            num(c0)
        );
    }
    if let Some(sizes) = out("generations").get("sizes") {
        println!("generation sizes = {sizes}");
    }
    if let Some(c2) = out("frostman").get("c2") {
        println!("c2 = {}", num(c2));
    }
    if let Some(ok) = out("john").get("all_ok") {
        println!("john certificates ok = {ok}");
    }
    if let Some(c1) = out("content_bound").get("c1") {
        println!(
            "c1 (empirical lower-constant over sampled scales) = {}",
            num(c1)
        );
    }
    if let Some(entries) = out("trace").get("entries").and_then(Value::as_array) {
        for e in entries {
            let r = &e["report"];
            println!(
                "trace {:<28} energy ratio {}  Lq ratio {}",
                e["function"].as_str().unwrap_or("?"),
                num(&r["ratio_energy"]),
                num(&r["ratio_lq"])
            );
        }
    }
}

fn report(path: &Path) -> Result<()> {
    let file = if path.is_dir() {
        path.join("report.json")
    } else {
        path.to_path_buf()
    };
    let text =
        std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
    let v: Value = serde_json::from_str(&text)?;
    println!(
        "report {} (version {})",
        file.display(),
        v["version"].as_str().unwrap_or("?")
    );
    print_summary(&v);
    Ok(())
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate {
            name,
            params,
            output,
        } => {
            let spec = DomainSpec::from_params(&name, &params)?;
            let gen = generate_domain(&spec)?;
            let mask = gen.interior_mask();
            let text = mask.to_text();
            match output {
                Some(p) => std::fs::write(&p, text)?,
                None => print!("{text}"),
            }
            eprintln!(
                "{}: {} interior cells, h = {}",
                spec.name(),
                mask.count(),
                gen.h
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(a) => run(&a),
        Command::Verify {
            lemma,
            seed,
            cells,
            instances,
            json,
        } => {
            if !LEMMAS.contains(&lemma.as_str()) {
                bail!(
                    "unknown lemma '{lemma}', expected one of {}",
                    LEMMAS.join(", ")
                );
            }
            let rep = run_suite(
                &lemma,
                SuiteOptions {
                    seed,
                    cells,
                    instances,
                },
            )?;
            if json {
                print!("{}", canonical_json(&rep)?);
            } else {
                for c in &rep.cases {
                    let tag = if c.ok { "PASS" } else { "FAIL" };
                    println!("{tag} {:<32} {:>12.4e}  {}", c.name, c.value, c.detail);
                }
                println!("{}: {}", rep.lemma, if rep.ok { "ok" } else { "FAILED" });
            }
            Ok(if rep.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Report { path } => {
            report(&path)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
