use std::path::PathBuf;

use radsimp_core::analytics::latin_square_plan;
use radsimp_core::VariantTag;

use crate::error::{CliError, Result};
use crate::study_file::StudyFile;
use crate::Settings;

#[derive(clap::Args)]
pub struct Args {
    /// Print the plan of this study (layperson rows in roster order).
    #[arg(long, conflicts_with_all = ["raters", "corpus"])]
    study: Option<PathBuf>,
    /// Number of raters for an ad-hoc plan.
    #[arg(long, required_unless_present = "study")]
    raters: Option<usize>,
    /// Corpus for an ad-hoc plan; the bundled demo corpus if omitted.
    #[arg(long)]
    corpus: Option<PathBuf>,
}

pub fn run(_settings: &Settings, args: Args) -> Result<()> {
    if let Some(path) = args.study {
        let study = StudyFile::load(&path)?.build(None)?;
        let Some(plan) = study.plan() else {
            println!("study {} has no laypeople", study.id());
            return Ok(());
        };
        for (i, r) in study.plan_raters().iter().enumerate() {
            println!("{i:<4} {r}");
        }
        print!("{}", plan.render());
        return Ok(());
    }
    let raters = args.raters.expect("clap enforces --raters");
    let corpus = crate::load_corpus(args.corpus.as_deref())?;
    let ids: Vec<String> = corpus.into_iter().map(|s| s.id).collect();
    let plan = latin_square_plan(raters, &ids, &VariantTag::ALL).map_err(CliError::validation)?;
    print!("{}", plan.render());
    for r in 0..plan.n_raters() {
        let counts = plan.rater_counts(r);
        if counts.iter().any(|&c| c != counts[0]) {
            log::warn!("rater {r} sees variants unevenly: {counts:?}");
        }
    }
    Ok(())
}
