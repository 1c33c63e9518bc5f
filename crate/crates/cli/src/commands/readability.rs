use std::path::PathBuf;

use radsimp_core::corpus::{check_references, load_simplifications};
use radsimp_core::readability::score_table;

use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::Settings;

pub const TEXT_FILE: &str = "readability.txt";
pub const JSON_FILE: &str = "readability.json";

#[derive(clap::Args)]
pub struct Args {
    /// Corpus file (JSONL); the bundled demo corpus if omitted.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    simplifications: PathBuf,
    /// Where to write the table; defaults to the simplifications' directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(settings: &Settings, args: Args) -> Result<()> {
    let corpus = crate::load_corpus(args.corpus.as_deref())?;
    let records = load_simplifications(&args.simplifications)
        .map_err(|e| CliError::from((args.simplifications.as_path(), e)))?;
    check_references(&corpus, &records).map_err(CliError::validation)?;
    let table = score_table(&corpus, &records).map_err(CliError::validation)?;

    let out = match args.out {
        Some(d) => d,
        None => args
            .simplifications
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    crate::create_dir(&out)?;
    let text = table.render();
    print!("{text}");
    let mut manifest = RunManifest::start("readability", &out, settings.config_path.as_deref(), settings.config.seed);
    manifest.corpus_path = args.corpus;
    manifest.detail("simplifications", &args.simplifications);
    let text_path = out.join(TEXT_FILE);
    crate::write_atomic(&text_path, text.as_bytes())?;
    manifest.output(&text_path);
    let json_path = out.join(JSON_FILE);
    let json = serde_json::to_string_pretty(&table).expect("table serializes");
    crate::write_atomic(&json_path, json.as_bytes())?;
    manifest.output(&json_path);
    manifest.finish()
}
