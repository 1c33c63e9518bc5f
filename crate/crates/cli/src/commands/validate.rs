use std::path::PathBuf;

use radsimp_core::corpus::{check_references, load_simplifications};
use radsimp_core::survey::{ExportError, SurveyExport};

use crate::error::{CliError, Result};
use crate::study_file::StudyFile;
use crate::Settings;

/// Checks input files without producing anything.
#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Checked against --corpus (or the demo corpus).
    #[arg(long)]
    simplifications: Option<PathBuf>,
    #[arg(long)]
    export: Option<PathBuf>,
    #[arg(long)]
    study: Option<PathBuf>,
}

pub fn run(settings: &Settings, args: Args) -> Result<()> {
    settings.config.validate()?;
    println!("ok: configuration");

    let corpus = crate::load_corpus(args.corpus.as_deref())?;
    println!("ok: corpus, {} sentences", corpus.len());

    if let Some(path) = &args.simplifications {
        let records = load_simplifications(path).map_err(|e| CliError::from((path.as_path(), e)))?;
        check_references(&corpus, &records).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        println!("ok: {}, {} records", path.display(), records.len());
    }
    if let Some(path) = &args.study {
        let study = StudyFile::load(path)?.build(None)?;
        println!(
            "ok: {}, study {} with {} raters and {} items",
            path.display(),
            study.id(),
            study.config().raters.len(),
            study.all_items().len()
        );
    }
    if let Some(path) = &args.export {
        let export = SurveyExport::load(path).map_err(|e| match e {
            ExportError::Io(e) => CliError::io(path, e),
            other => CliError::validation(format!("{}: {other}", path.display())),
        })?;
        println!("ok: {}, {} events", path.display(), export.events.len());
    }
    Ok(())
}
