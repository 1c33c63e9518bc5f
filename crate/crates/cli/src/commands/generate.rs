use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use radsimp_core::chat::TranscriptStore;
use radsimp_core::corpus::{check_references, SimplificationRecord};
use radsimp_core::simplifier::{PromptTemplateSet, Simplifier, SimplifierError, VariantSet};
use radsimp_core::{RadiologySentence, VariantTag};

use crate::backend::{self, Counting};
use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::Settings;

pub const SIMPLIFICATIONS_FILE: &str = "simplifications.jsonl";
pub const TRANSCRIPTS_DIR: &str = "transcripts";

#[derive(clap::Args)]
pub struct Args {
    /// Corpus file (JSONL); the bundled demo corpus if omitted.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output directory; an existing run there is resumed.
    #[arg(long)]
    out: PathBuf,
}

/// Complete records from a previous run. A torn final line (crash mid-append)
/// is ignored, as is any sentence without all four variants.
fn read_previous(path: &Path) -> Result<(Vec<SimplificationRecord>, bool)> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Vec::new(), false)),
        Err(e) => return Err(CliError::io(path, e)),
    };
    let mut dirty = false;
    let mut records = Vec::new();
    let mut lines: Vec<&str> = text.split_inclusive('\n').collect();
    if lines.last().is_some_and(|l| !l.ends_with('\n')) {
        lines.pop();
        dirty = true;
    }
    for (n, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: SimplificationRecord = serde_json::from_str(line)
            .map_err(|e| CliError::validation(format!("{} line {}: {e}", path.display(), n + 1)))?;
        rec.validate()
            .map_err(|e| CliError::validation(format!("{} line {}: {e}", path.display(), n + 1)))?;
        records.push(rec);
    }
    let mut by_sentence: BTreeMap<String, Vec<SimplificationRecord>> = BTreeMap::new();
    for r in records {
        by_sentence.entry(r.sentence_id.clone()).or_default().push(r);
    }
    let mut complete = Vec::new();
    for (_, group) in by_sentence {
        let variants: BTreeSet<VariantTag> = group.iter().map(|r| r.variant).collect();
        if group.len() == VariantTag::ALL.len() && variants.len() == group.len() {
            complete.extend(group);
        } else {
            dirty = true;
        }
    }
    Ok((complete, dirty))
}

fn in_corpus_order(corpus: &[RadiologySentence], records: &mut [SimplificationRecord]) {
    let pos: BTreeMap<&str, usize> = corpus.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    records.sort_by_key(|r| (pos.get(r.sentence_id.as_str()).copied(), r.variant));
}

fn write_all(path: &Path, records: &[SimplificationRecord]) -> Result<()> {
    let text: String = records.iter().map(radsimp_core::jsonl::to_line).collect();
    crate::write_atomic(path, text.as_bytes())
}

fn append_set(path: &Path, records: &[SimplificationRecord]) -> Result<()> {
    let text: String = records.iter().map(radsimp_core::jsonl::to_line).collect();
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.sync_data())
        .map_err(|e| CliError::io(path, e))
}

pub fn run(settings: &Settings, args: Args) -> Result<()> {
    let config = &settings.config;
    let corpus = crate::load_corpus(args.corpus.as_deref())?;
    let templates = match &config.templates {
        Some(p) => PromptTemplateSet::load(p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?,
        None => PromptTemplateSet::default(),
    };
    crate::create_dir(&args.out)?;
    let out_file = args.out.join(SIMPLIFICATIONS_FILE);
    let store = TranscriptStore::open(args.out.join(TRANSCRIPTS_DIR))
        .map_err(|e| CliError::io(&args.out.join(TRANSCRIPTS_DIR), e))?;

    let (mut done, dirty) = read_previous(&out_file)?;
    check_references(&corpus, &done).map_err(|e| {
        CliError::validation(format!("{}: {e} (output belongs to another corpus?)", out_file.display()))
    })?;
    if dirty {
        log::warn!("{}: dropping incomplete sentence sets from an interrupted run", out_file.display());
        in_corpus_order(&corpus, &mut done);
        write_all(&out_file, &done)?;
    }
    let finished: BTreeSet<String> = done.iter().map(|r| r.sentence_id.clone()).collect();
    let todo: Vec<&RadiologySentence> = corpus.iter().filter(|s| !finished.contains(&s.id)).collect();

    let mut manifest = RunManifest::start("generate", &args.out, settings.config_path.as_deref(), config.seed);
    manifest.corpus_path = args.corpus.clone();
    manifest.backend = Some(config.backend.as_str().into());
    manifest.workers = Some(config.workers);

    let (backend, clock) = backend::build(config)?;
    let counting = Counting::new(backend);
    let mut loop_config = config.loop_config();
    loop_config.params.seed = loop_config.params.seed.or(Some(config.seed));
    let simplifier = Simplifier::new(&counting, templates, loop_config)
        .map_err(CliError::config)?
        .with_clock(clock);

    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let mut failure: Option<SimplifierError> = None;
    let mut generated = 0usize;
    std::thread::scope(|scope| -> Result<()> {
        let (tx, rx) = mpsc::channel::<(usize, std::result::Result<VariantSet, SimplifierError>)>();
        for _ in 0..config.workers.min(todo.len()) {
            let tx = tx.clone();
            let (next, stop, todo, simplifier) = (&next, &stop, &todo, &simplifier);
            scope.spawn(move || loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(sentence) = todo.get(i) else { break };
                if tx.send((i, simplifier.generate_variant_set(sentence))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, result) in rx {
            match result {
                Ok(set) => {
                    for t in &set.transcripts {
                        store.save(t).map_err(|e| CliError::io(store.dir(), e))?;
                    }
                    append_set(&out_file, &set.records)?;
                    done.extend(set.records);
                    generated += 1;
                    log::info!("{}: done", todo[i].id);
                }
                Err(e) => {
                    stop.store(true, Ordering::SeqCst);
                    if let SimplifierError::Backend { transcript, .. } = &e {
                        store.save(transcript).map_err(|e| CliError::io(store.dir(), e))?;
                    }
                    if failure.is_none() {
                        failure = Some(e);
                    }
                }
            }
        }
        Ok(())
    })?;

    // Workers finish out of order; leave the file in corpus order.
    in_corpus_order(&corpus, &mut done);
    write_all(&out_file, &done)?;

    manifest.output(&out_file);
    for r in &done {
        manifest.output(&store.path_for(&r.transcript_ref));
    }
    manifest.detail("sentences_generated", generated);
    manifest.detail("sentences_skipped", finished.len());
    manifest.detail("backend_calls", counting.calls());
    manifest.detail("prompt_templates", &config.templates);
    if let Some(e) = &failure {
        manifest.detail("error", e.to_string());
    }
    manifest.finish()?;

    println!(
        "{} records for {} sentences ({generated} generated, {} already complete), {} backend calls",
        done.len(),
        done.len() / VariantTag::ALL.len(),
        finished.len(),
        counting.calls()
    );
    println!("wrote {}", out_file.display());
    match failure {
        Some(SimplifierError::Backend { sentence_id, agent, source, .. }) => Err(CliError::backend(format!(
            "sentence {sentence_id}: {agent} call failed: {source}; rerun to resume"
        ))),
        Some(other) => Err(CliError::config(other)),
        None => Ok(()),
    }
}
