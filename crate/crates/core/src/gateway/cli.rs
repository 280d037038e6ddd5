//! `cohost` command line.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::engine::OutputAction;
use crate::gateway::render::{render_chart, ChartFormat};
use crate::gateway::serve::{serve_session, serve_tcp};
use crate::gateway::wire::{encode_action, encode_event};
use crate::intervene::VisualizationSpec;
use crate::simulator::{compare, oracle_report, run as simulate, OracleReport, Scenario, SimSummary};

#[derive(Debug, Parser)]
#[command(name = "cohost", version, about = "Virtual co-host for online meetings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario through the engine and write logs, report and charts.
    Simulate {
        scenario: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Feed an event log through a fresh engine and print the actions.
    Replay {
        eventlog: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Speak the wire protocol on stdin/stdout or over TCP.
    Serve {
        #[arg(long, conflicts_with = "listen")]
        stdio: bool,
        /// Address to listen on, e.g. 127.0.0.1:7400.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Compute the reference report for a scenario.
    Oracle {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a simulation summary against an oracle report.
    Compare {
        /// `sim.json`, or a simulate output directory.
        sim: PathBuf,
        oracle: PathBuf,
    },
    /// Render a chart spec (JSON) as SVG or text.
    Render {
        spec: PathBuf,
        #[arg(long)]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Simulate { scenario, seed, out } => run_simulate(&scenario, seed, &out),
        Command::Replay { eventlog, out } => run_replay(&eventlog, out.as_deref()),
        Command::Serve { stdio: _, listen } => match listen {
            Some(addr) => {
                serve_tcp(addr.as_str()).with_context(|| format!("serving on {addr}"))?;
                Ok(ExitCode::SUCCESS)
            }
            None => {
                let stdin = io::stdin().lock();
                serve_session(stdin, io::stdout().lock())?;
                Ok(ExitCode::SUCCESS)
            }
        },
        Command::Oracle { scenario, seed, out } => {
            let scenario = load_scenario(&scenario, seed)?;
            write_output(out.as_deref(), &to_json(&oracle_report(&scenario)))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { sim, oracle } => run_compare(&sim, &oracle),
        Command::Render { spec, format, out } => {
            let format: ChartFormat = format.parse()?;
            let spec: VisualizationSpec = read_json(&spec)?;
            write_output(out.as_deref(), &render_chart(&spec, format)?)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn write_output(path: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, content).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

fn load_scenario(path: &Path, seed: Option<u64>) -> anyhow::Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut scenario = Scenario::from_json(&text).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn write_lines<I: IntoIterator<Item = String>>(path: &Path, lines: I) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for line in lines {
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

fn run_simulate(path: &Path, seed: Option<u64>, out: &Path) -> anyhow::Result<ExitCode> {
    let scenario = load_scenario(path, seed)?;
    let result = simulate(&scenario)?;
    let charts = out.join("charts");
    fs::create_dir_all(&charts).with_context(|| format!("creating {}", charts.display()))?;

    write_lines(&out.join("events.ndjson"), result.events.iter().map(encode_event))?;
    write_lines(&out.join("actions.ndjson"), result.actions.iter().map(encode_action))?;
    fs::write(out.join("report.json"), to_json(&result.report))?;
    fs::write(out.join("sim.json"), to_json(&result.summary()))?;

    let mut chart_count = 0;
    for (i, action) in result.actions.iter().enumerate() {
        if let OutputAction::DirectMessage { to, chart: Some(spec), .. } = action {
            let stem = format!("{i:03}-{}", file_stem(to.as_str()));
            fs::write(charts.join(format!("{stem}.svg")), render_chart(spec, ChartFormat::Svg)?)?;
            fs::write(charts.join(format!("{stem}.txt")), render_chart(spec, ChartFormat::Text)?)?;
            chart_count += 1;
        }
    }

    let trigger = match &result.report.trigger {
        Some(t) => format!("triggered at t={} ({})", t.t, t.reason.label()),
        None => "never triggered".to_string(),
    };
    println!(
        "{} event(s), {} action(s), {} chart(s); {trigger}; output in {}",
        result.events.len(),
        result.actions.len(),
        chart_count,
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_replay(path: &Path, out: Option<&Path>) -> anyhow::Result<ExitCode> {
    let reader = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let stats = match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
            let stats = serve_session(reader, &mut w)?;
            w.flush()?;
            stats
        }
        None => serve_session(reader, io::stdout().lock())?,
    };
    if stats.errors > 0 {
        eprintln!("{} line(s) rejected", stats.errors);
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn run_compare(sim: &Path, oracle: &Path) -> anyhow::Result<ExitCode> {
    let sim_path = if sim.is_dir() { sim.join("sim.json") } else { sim.to_path_buf() };
    let summary: SimSummary = read_json(&sim_path)?;
    let oracle: OracleReport = read_json(oracle)?;
    let report = compare(&summary, &oracle);
    if report.is_empty() {
        println!("no divergences ({} ticks checked)", oracle.table.rows.len());
        return Ok(ExitCode::SUCCESS);
    }
    for d in &report.divergences {
        println!("{d}");
    }
    Ok(ExitCode::FAILURE)
}
