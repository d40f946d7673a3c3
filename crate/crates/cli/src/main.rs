//! `rarevas` — lower bounds on time-bounded rare-event reachability in
//! stochastic vector addition systems and chemical reaction networks.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use rarevas::ctmc::export_explicit;
use rarevas::depgraph::build_dependency_graph;
use rarevas::model::{parse_model, PropertySpec, VasModel};
use rarevas::pipeline::{run, RunOptions, RunOutcome, RunReport};
use rarevas::search::{Comparator, Method, TieBreak};
use rarevas::subspaces::DisplacementRule;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Sdp,
    Isr,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ComparatorArg {
    Default,
    Lex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DisplacementArg {
    Shifted,
    Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TieBreakArg {
    Fifo,
    State,
}

/// Computes a guaranteed lower bound on the probability of reaching the
/// model's target within its time bound, by building a small partial state
/// graph and running transient analysis on it.
#[derive(Debug, Parser)]
#[command(name = "rarevas", version)]
struct Cli {
    /// Model file.
    #[arg(long)]
    model: PathBuf,
    /// Search heuristic; `both` runs each and reports the larger bound.
    #[arg(long, value_enum, default_value = "sdp")]
    method: MethodArg,
    /// Number of satisfying states to find before the search stops.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Overrides the model's time bound.
    #[arg(long)]
    time: Option<f64>,
    /// Poisson truncation tolerance, in (0, 1e-3].
    #[arg(long, default_value_t = rarevas::ctmc::DEFAULT_TOLERANCE)]
    tol: f64,
    /// Cap on indexed states.
    #[arg(long, default_value_t = rarevas::search::DEFAULT_MAX_STATES)]
    max_states: usize,
    /// Write the partial CTMC's transitions here (requires --export-lab).
    #[arg(long, requires = "export_lab")]
    export_tra: Option<PathBuf>,
    /// Write the partial CTMC's labels here (requires --export-tra).
    #[arg(long, requires = "export_tra")]
    export_lab: Option<PathBuf>,
    /// Write the dependency graph in DOT format.
    #[arg(long)]
    dump_depgraph: Option<PathBuf>,
    /// Write the indexed subspace chain as JSON (ISR only).
    #[arg(long)]
    dump_subspaces: Option<PathBuf>,
    /// How ISR ranks states.
    #[arg(long, value_enum, default_value = "default")]
    comparator: ComparatorArg,
    /// Keep the requested K even when the target admits a single solution.
    #[arg(long)]
    no_clamp_k: bool,
    /// How the subspace chain's displacement vector is chosen (ISR only).
    #[arg(long, value_enum, default_value = "shifted")]
    displacement: DisplacementArg,
    /// How states with identical priorities are ordered.
    #[arg(long, value_enum, default_value = "fifo")]
    tie_break: TieBreakArg,
    /// Print the result as JSON instead of text.
    #[arg(long)]
    json: bool,
    /// Log progress to standard error (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl Cli {
    fn options(&self, method: Method) -> RunOptions {
        let mut opts = RunOptions::new(method, self.k);
        opts.time = self.time;
        opts.tol = self.tol;
        opts.max_states = self.max_states;
        opts.comparator = match self.comparator {
            ComparatorArg::Default => Comparator::Default,
            ComparatorArg::Lex => Comparator::Lex,
        };
        opts.clamp_k = !self.no_clamp_k;
        opts.displacement = match self.displacement {
            DisplacementArg::Shifted => DisplacementRule::Shifted,
            DisplacementArg::Span => DisplacementRule::Span,
        };
        opts.tie_break = match self.tie_break {
            TieBreakArg::Fifo => TieBreak::Fifo,
            TieBreakArg::State => TieBreak::State,
        };
        opts
    }

    fn methods(&self) -> Vec<Method> {
        match self.method {
            MethodArg::Sdp => vec![Method::Sdp],
            MethodArg::Isr => vec![Method::Isr],
            MethodArg::Both => vec![Method::Sdp, Method::Isr],
        }
    }
}

/// Output document when several methods ran.
#[derive(Serialize)]
struct Combined<'a> {
    method: &'static str,
    p_min: f64,
    best: Method,
    runs: &'a [RunReport],
}

fn load(path: &Path) -> Result<(VasModel, PropertySpec)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_model(&text)
        .map_err(|e| anyhow::anyhow!("{}:{}:{}: {}", path.display(), e.line, e.column, e.message))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn print_text(report: &RunReport) {
    println!("method:       {}", report.method);
    println!(
        "K:            {} (effective {})",
        report.k, report.k_effective
    );
    println!("time bound:   {}", report.time_bound);
    println!("p_min:        {:e}", report.p_min);
    println!("states:       {}", report.states);
    println!("transitions:  {}", report.transitions);
    println!("satisfying:   {}", report.sat_count);
    println!("lambda:       {}", report.lambda);
    println!("terms:        {}", report.terms_used);
    println!("truncated:    {}", report.truncated);
    println!("wall time:    {} ms", report.wall_time_ms);
    if let Some(why) = &report.unreachable {
        println!("unreachable:  {why}");
    }
}

fn execute(cli: &Cli) -> Result<ExitCode> {
    let (model, prop) = load(&cli.model)?;
    if cli.k == 0 {
        bail!("invalid configuration: --k must be at least 1");
    }
    if !(cli.tol > 0.0 && cli.tol <= 1e-3) {
        bail!(
            "invalid configuration: --tol must lie in (0, 1e-3], got {}",
            cli.tol
        );
    }
    if cli.dump_subspaces.is_some() && cli.method == MethodArg::Sdp {
        bail!("invalid configuration: --dump-subspaces needs --method isr or both");
    }

    if let Some(path) = &cli.dump_depgraph {
        match build_dependency_graph(&model, &prop) {
            Ok(dg) => write_text(path, &dg.to_dot(&model))?,
            Err(evidence) => log::warn!("no dependency graph to dump: {evidence}"),
        }
    }

    let mut outcomes: Vec<RunOutcome> = Vec::new();
    for method in cli.methods() {
        let outcome =
            run(&model, &prop, &cli.options(method)).map_err(|e| anyhow::anyhow!("{e}"))?;
        outcomes.push(outcome);
    }
    // the run with the larger bound (the first on ties)
    let best = outcomes.iter().enumerate().fold(
        0,
        |b, (i, o)| if o.p_min > outcomes[b].p_min { i } else { b },
    );

    if let Some(path) = &cli.dump_subspaces {
        if let Some(chain) = outcomes.iter().find_map(|o| o.chain.as_ref()) {
            let json = serde_json::to_string_pretty(&chain.to_json(&model))?;
            write_text(path, &(json + "\n"))?;
        } else {
            log::warn!("no subspace chain to dump");
        }
    }
    if let (Some(tra), Some(lab)) = (&cli.export_tra, &cli.export_lab) {
        match &outcomes[best].graph {
            Some(graph) => export_explicit(graph, tra, lab).map_err(|e| anyhow::anyhow!("{e}"))?,
            None => log::warn!("no state graph to export"),
        }
    }

    let reports: Vec<RunReport> = outcomes.iter().map(RunOutcome::report).collect();
    if cli.json {
        let doc = if reports.len() == 1 {
            serde_json::to_string(&reports[0])?
        } else {
            serde_json::to_string(&Combined {
                method: "both",
                p_min: reports[best].p_min,
                best: reports[best].method,
                runs: &reports,
            })?
        };
        println!("{doc}");
    } else {
        for (i, report) in reports.iter().enumerate() {
            if i > 0 {
                println!();
            }
            print_text(report);
        }
        if reports.len() > 1 {
            println!();
            println!(
                "best:         {} (p_min {:e})",
                reports[best].method, reports[best].p_min
            );
        }
    }

    let unreachable = outcomes.iter().any(|o| o.unreachable.is_some());
    Ok(if unreachable {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage errors are configuration errors (exit 1); exit 2 is
            // reserved for proven unreachability
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
