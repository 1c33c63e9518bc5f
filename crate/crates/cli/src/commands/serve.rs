use std::io::Write;
use std::path::PathBuf;

use radsimp_survey::{ServiceState, ADMIN_TOKEN_ENV};

use crate::error::{CliError, Kind, Result};
use crate::study_file::StudyFile;
use crate::Settings;

#[derive(clap::Args)]
pub struct Args {
    /// Study definition (TOML); repeat to host several studies.
    #[arg(long, required = true)]
    study: Vec<PathBuf>,
    /// Address to listen on; port 0 picks a free port.
    #[arg(long)]
    bind: Option<String>,
    /// Directory holding one event log per study.
    #[arg(long)]
    state_dir: Option<PathBuf>,
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

pub fn run(settings: &Settings, args: Args) -> Result<()> {
    let mut studies = Vec::new();
    for path in &args.study {
        let file = StudyFile::load(path)?;
        studies.push(file.build(None)?);
    }
    let state_dir = args.state_dir.unwrap_or_else(|| settings.config.serve.state_dir.clone());
    let bind = args.bind.unwrap_or_else(|| settings.config.serve.bind.clone());
    let admin = std::env::var(ADMIN_TOKEN_ENV).ok().filter(|t| !t.is_empty());
    if admin.is_none() {
        log::warn!("{ADMIN_TOKEN_ENV} is not set; the export endpoint is disabled");
    }
    let state = ServiceState::open(studies, &state_dir, admin).map_err(CliError::validation)?;

    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::new(Kind::Io, e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&bind)
            .await
            .map_err(|e| CliError::new(Kind::Io, format!("cannot bind {bind}: {e}")))?;
        let addr = listener
            .local_addr()
            .map_err(|e| CliError::new(Kind::Io, e.to_string()))?;
        let base = format!("http://{addr}");
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "listening on {base}");
        for handle in state.studies() {
            let study = handle.study();
            let _ = writeln!(
                out,
                "study {} ({:?}, {} events in {})",
                study.id(),
                study.state(),
                handle.event_count(),
                handle.log_path().display()
            );
            for r in &study.config().raters {
                let token = study.token_for(&r.id).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "  {:<12} {:<9} {base}/api/studies/{}/next?rater={token}",
                    r.id,
                    format!("{:?}", r.role).to_lowercase(),
                    study.id()
                );
            }
        }
        let _ = out.flush();
        drop(out);
        radsimp_survey::serve(listener, state, shutdown_signal())
            .await
            .map_err(|e| CliError::new(Kind::Io, e.to_string()))?;
        println!("shut down cleanly");
        Ok(())
    })
}
