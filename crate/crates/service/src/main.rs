use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use netplan_core::config::{validate_json, NetworkConfig};
use netplan_core::network::{plan_network, simulate_network};
use netplan_core::report::{generate_report, ReportRequest, RunArtifacts};
use netplan_core::solver::SolverOptions;
use netplan_service::store::{new_run_id, now_rfc3339, sha256_hex, JobState, RunRecord, Store};
use netplan_service::{api, llm, Service};

#[derive(Parser)]
#[command(name = "netplan", version, about = "Multi-site inventory transfer planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a configuration and write the run record as JSON.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        rel_gap: Option<f64>,
    },
    /// Write the no-transfer projection as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a narrative report for a stored run or a run record file.
    Report {
        /// Run id in the data directory, or a path to a run record.
        #[arg(long)]
        run: String,
        #[arg(long)]
        role: String,
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
    },
    /// Serve the REST API.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
        /// Configuration to activate at startup.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn read_config(path: &Path) -> Result<(String, NetworkConfig)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (cfg, report) = validate_json(&text);
    for a in &report.advisories {
        tracing::warn!("{a}");
    }
    match cfg {
        Some(cfg) if report.pass => Ok((text, cfg)),
        _ => {
            for v in &report.violations {
                eprintln!("{v}");
            }
            bail!("{} failed validation", path.display())
        }
    }
}

fn solve(config: &Path, out: &Path, time_limit: Option<f64>, rel_gap: Option<f64>) -> Result<()> {
    let (text, cfg) = read_config(config)?;
    let mut options = SolverOptions::default();
    if let Some(t) = time_limit {
        options.time_limit_secs = t;
    }
    if let Some(g) = rel_gap {
        options.rel_gap = g;
    }
    options.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
    let created_at = now_rfc3339();
    let plan = plan_network(&cfg, &options)?;
    println!(
        "status {:?}, objective {}, gap {:.3e}, units {}, savings {}",
        plan.status, plan.objective, plan.gap, plan.total_units, plan.total_savings
    );
    let rec = RunRecord {
        id: new_run_id(),
        created_at,
        started_at: None,
        finished_at: Some(now_rfc3339()),
        state: JobState::Done,
        note: None,
        config_hash: sha256_hex(text.as_bytes()),
        config_version: None,
        config: text,
        options,
        plan: Some(plan),
    };
    std::fs::write(out, serde_json::to_vec_pretty(&rec)?)?;
    Ok(())
}

fn simulate(config: &Path, out: Option<&Path>) -> Result<()> {
    let (_, cfg) = read_config(config)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for ledger in simulate_network(&cfg)? {
        for row in ledger.rows() {
            w.serialize(row)?;
        }
    }
    let bytes = w.into_inner()?;
    match out {
        Some(p) => std::fs::write(p, bytes)?,
        None => print!("{}", String::from_utf8(bytes)?),
    }
    Ok(())
}

fn report(run: &str, role: &str, data_dir: &Path) -> Result<()> {
    let path = Path::new(run);
    let rec: RunRecord = if path.is_file() {
        serde_json::from_slice(&std::fs::read(path)?)?
    } else {
        Store::open(data_dir)?.get_run(run)?.with_context(|| format!("run {run} not found"))?
    };
    let artifacts: RunArtifacts = rec.artifacts().with_context(|| format!("run {} has no plan", rec.id))?;
    let report = generate_report(&artifacts, role, &ReportRequest::new(&rec.id))?;
    print!("{}", report.to_text());
    Ok(())
}

async fn serve(host: &str, port: u16, data_dir: PathBuf, config: Option<PathBuf>) -> Result<()> {
    let external = llm::external_from_env()?;
    let svc = Arc::new(Service::open(&data_dir, external)?);
    if let Some(p) = config {
        let bytes = std::fs::read(&p)?;
        let active = svc.store().get_config()?;
        match active {
            Some((current, v)) if current == bytes => tracing::info!("{} is already config version {v}", p.display()),
            _ => match svc.store().put_config(&bytes)? {
                Ok((v, _)) => tracing::info!("activated {} as config version {v}", p.display()),
                Err(report) => {
                    for v in &report.violations {
                        eprintln!("{v}");
                    }
                    bail!("{} failed validation", p.display());
                }
            },
        }
    }
    let addr: SocketAddr = format!("{host}:{port}").parse()?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    // Unfinished runs stay on disk and are re-queued by the next start.
    axum::serve(listener, api::router(svc))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Solve { config, out, time_limit, rel_gap } => solve(&config, &out, time_limit, rel_gap),
        Command::Simulate { config, out } => simulate(&config, out.as_deref()),
        Command::Report { run, role, data_dir } => report(&run, &role, &data_dir),
        Command::Serve { host, port, data_dir, config } => {
            tokio::runtime::Runtime::new()?.block_on(serve(&host, port, data_dir, config))
        }
    }
}
