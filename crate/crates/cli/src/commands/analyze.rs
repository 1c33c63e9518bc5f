use std::path::PathBuf;

use radsimp_core::analytics::AnalyticsReport;
use radsimp_core::survey::{ExportError, SurveyExport};

use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::Settings;

pub const REPORT_TEXT: &str = "report.txt";
pub const REPORT_JSON: &str = "report.json";
pub const CONFIDENCE_CSV: &str = "confidence_histogram.csv";
pub const VOTES_CSV: &str = "preference_votes.csv";

#[derive(clap::Args)]
pub struct Args {
    /// Survey export produced by the service.
    #[arg(long)]
    export: PathBuf,
    /// Corpus file carrying the expert severity labels; defaults to the
    /// labels recorded in the export.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

pub fn run(settings: &Settings, args: Args) -> Result<()> {
    let export = SurveyExport::load(&args.export).map_err(|e| match e {
        ExportError::Io(e) => CliError::io(&args.export, e),
        other => CliError::validation(format!("{}: {other}", args.export.display())),
    })?;
    let labels = match &args.labels {
        Some(p) => crate::load_corpus(Some(p))?
            .into_iter()
            .filter_map(|s| s.severity.map(|l| (s.id, l)))
            .collect(),
        None => export.corpus_labels(),
    };
    let (responses, experts) = export.responses();
    let report = AnalyticsReport::build(&responses, &experts, &labels, &export.header.answer_maps);

    crate::create_dir(&args.out)?;
    let mut manifest = RunManifest::start("analyze", &args.out, settings.config_path.as_deref(), export.header.seed);
    manifest.corpus_path = args.labels.clone();
    manifest.detail("export", &args.export);
    manifest.detail("study_id", &export.header.study_id);
    manifest.detail("events", export.events.len());

    let text = report.render_text();
    print!("{text}");
    let files = [
        (REPORT_TEXT, text),
        (REPORT_JSON, serde_json::to_string_pretty(&report).expect("report serializes")),
        (CONFIDENCE_CSV, report.confidence_csv()),
        (VOTES_CSV, report.votes_csv()),
    ];
    for (name, body) in files {
        let path = args.out.join(name);
        crate::write_atomic(&path, body.as_bytes())?;
        manifest.output(&path);
    }
    manifest.finish()
}
