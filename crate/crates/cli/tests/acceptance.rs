//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test -p radsimp-cli --test acceptance`

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use radsimp_core::analytics::{
    krippendorff_alpha, latin_square_plan, masi_distance, severity_error, AnswerMaps,
    LaypersonResponse, Phase, Rating,
};
use radsimp_core::chat::{demo_script, Clock, ScriptedBackend};
use radsimp_core::corpus::{demo_corpus, load_simplifications};
use radsimp_core::readability::{analyze, score_text, TextStats};
use radsimp_core::simplifier::{
    LoopConfig, PromptTemplateSet, Simplifier, StopReason, Strategy, GENERATOR, PATIENT,
    PROCESSOR_PATIENT, PROCESSOR_RADIOLOGIST, RADIOLOGIST,
};
use radsimp_core::survey::{RaterSpec, Role, Study, StudyConfig, StudyState};
use radsimp_core::{RadiologySentence, SeverityLevel, VariantTag};
use radsimp_survey::ServiceState;
use reqwest::blocking::Client;
use serde_json::{json, Map, Value};

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: [(&str, Option<Duration>, Check); 8] = [
        ("readability oracle and monotonicity", Some(Duration::from_secs(5)), readability),
        ("MASI over all 225 subset pairs", Some(Duration::from_secs(1)), masi),
        ("Krippendorff alpha", Some(Duration::from_secs(10)), alpha),
        ("self-correction loop", Some(Duration::from_secs(5)), self_correction),
        ("Latin square 8x40x4", Some(Duration::from_secs(1)), latin_square),
        ("severity MSE/ACC", None, severity),
        ("end-to-end pipeline", Some(Duration::from_secs(60)), end_to_end),
        ("durability across kill and restart", None, durability),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                Err(msg)
            });
        let took = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(l)) if took >= l => Err(format!("took {took:.2?}, limit {l:?}")),
            (r, _) => r,
        };
        let limit = limit.map(|l| format!(", limit {l:?}")).unwrap_or_default();
        match result {
            Ok(detail) => println!("PASS  {name} ({took:.2?}{limit}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name} ({took:.2?}{limit}): {why}");
            }
        }
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// ---------------------------------------------------------------- readability

// Counted by hand.
const FIXTURES: &[(&str, TextStats)] = &[
    ("The cat sat on the mat.", TextStats { sentences: 1, words: 6, syllables: 6, characters: 17, complex_words: 0 }),
    ("There is a small hiatal hernia. It is mild.", TextStats { sentences: 2, words: 9, syllables: 11, characters: 33, complex_words: 0 }),
    ("Hypodensities are seen in the liver!", TextStats { sentences: 1, words: 6, syllables: 11, characters: 30, complex_words: 1 }),
    ("Mild degenerative change. No fracture.", TextStats { sentences: 2, words: 5, syllables: 10, characters: 32, complex_words: 1 }),
    ("The table is stable, isn't it? Yes.", TextStats { sentences: 2, words: 7, syllables: 9, characters: 25, complex_words: 0 }),
    ("Grade 1 anterolisthesis of L4 on L5.", TextStats { sentences: 1, words: 7, syllables: 12, characters: 29, complex_words: 1 }),
];

const ONE: &[&str] = &["cat", "dog", "sat", "on", "mat", "big", "red", "lung", "bone", "spot"];
const TWO: &[&str] = &["liver", "kidney", "hernia", "table", "basal"];
const COMPLEX: &[&str] = &["hypodensity", "atelectasis", "effusion", "degenerative", "calculus"];

fn join(text: &[Vec<String>]) -> String {
    text.iter().map(|s| format!("{}.", s.join(" "))).collect::<Vec<_>>().join(" ")
}

fn readability() -> Result<String, String> {
    for (text, stats) in FIXTURES {
        ensure(analyze(text) == *stats, || format!("counts differ for {text:?}: {:?}", analyze(text)))?;
        let (w, s) = (stats.words as f64, stats.sentences as f64);
        let fkgl = 0.39 * (w / s) + 11.8 * (stats.syllables as f64 / w) - 15.59;
        let gfi = 0.4 * ((w / s) + 100.0 * (stats.complex_words as f64 / w));
        let ari = 4.71 * (stats.characters as f64 / w) + 0.5 * (w / s) - 21.43;
        let got = score_text(text).map_err(|e| e.to_string())?;
        ensure(close(got.fkgl, fkgl, 1e-9) && close(got.gfi, gfi, 1e-9) && close(got.ari, ari, 1e-9), || {
            format!("{text:?}: got {got:?}, formula ({fkgl}, {gfi}, {ari})")
        })?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    const TRIALS: usize = 1000;
    for trial in 0..TRIALS {
        let text: Vec<Vec<String>> = (0..rng.random_range(1..5))
            .map(|_| {
                (0..rng.random_range(1..12))
                    .map(|_| ONE[rng.random_range(0..ONE.len())].to_string())
                    .collect()
            })
            .collect();
        let i = rng.random_range(0..text.len());
        let j = rng.random_range(0..text[i].len());
        let before = score_text(&join(&text)).map_err(|e| e.to_string())?;

        let mut t = text.clone();
        t[i][j] = TWO[rng.random_range(0..TWO.len())].to_string();
        let after = score_text(&join(&t)).unwrap();
        ensure(after.fkgl > before.fkgl, || format!("trial {trial}: FKGL did not rise for {}", join(&t)))?;

        let mut t = text.clone();
        t[i][j] = COMPLEX[rng.random_range(0..COMPLEX.len())].to_string();
        let after = score_text(&join(&t)).unwrap();
        ensure(after.gfi > before.gfi, || format!("trial {trial}: GFI did not rise for {}", join(&t)))?;

        let mut t = text.clone();
        t[i][j].push_str(&"x".repeat(rng.random_range(1..6)));
        let after = score_text(&join(&t)).unwrap();
        ensure(after.ari > before.ari, || format!("trial {trial}: ARI did not rise for {}", join(&t)))?;
    }
    Ok(format!("{} fixtures at 1e-9, {TRIALS} perturbations per metric", FIXTURES.len()))
}

// ----------------------------------------------------------------------- MASI

fn subsets() -> Vec<BTreeSet<VariantTag>> {
    (1u8..16)
        .map(|mask| {
            VariantTag::ALL
                .into_iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, v)| v)
                .collect()
        })
        .collect()
}

fn masi() -> Result<String, String> {
    let all = subsets();
    let mut cases = [0usize; 4];
    for a in &all {
        for b in &all {
            let inter = a.intersection(b).count() as f64;
            let j = inter / a.union(b).count() as f64;
            let (case, want) = if a == b {
                (0, 0.0)
            } else if a.is_subset(b) || b.is_subset(a) {
                (1, 1.0 - j * 2.0 / 3.0)
            } else if inter > 0.0 {
                (2, 1.0 - j / 3.0)
            } else {
                (3, 1.0)
            };
            cases[case] += 1;
            let got = masi_distance(a, b).map_err(|e| e.to_string())?;
            ensure(close(got, want, 1e-12), || format!("{a:?} vs {b:?}: {got} != {want}"))?;
        }
    }
    let total: usize = cases.iter().sum();
    ensure(total == 225 && cases.iter().all(|&n| n > 0), || format!("case counts {cases:?}"))?;
    Ok(format!(
        "{total} pairs: {} equal, {} subset, {} crossing, {} disjoint",
        cases[0], cases[1], cases[2], cases[3]
    ))
}

// ---------------------------------------------------------------------- alpha

type Label = BTreeSet<VariantTag>;

fn masi_d(a: &Label, b: &Label) -> f64 {
    masi_distance(a, b).unwrap()
}

/// Double loop straight from the definition.
fn brute_alpha(ratings: &[Rating<Label>]) -> Option<f64> {
    let mut items: BTreeMap<&str, Vec<&Label>> = BTreeMap::new();
    for r in ratings {
        items.entry(&r.item_id).or_default().push(&r.label);
    }
    items.retain(|_, v| v.len() >= 2);
    let pooled: Vec<&Label> = items.values().flatten().copied().collect();
    let n = pooled.len() as f64;
    if n < 2.0 {
        return None;
    }
    let mut d_o = 0.0;
    for v in items.values() {
        let m = v.len() as f64;
        for i in 0..v.len() {
            for j in 0..v.len() {
                if i != j {
                    d_o += masi_d(v[i], v[j]) / (m - 1.0);
                }
            }
        }
    }
    d_o /= n;
    let mut d_e = 0.0;
    for i in 0..pooled.len() {
        for j in 0..pooled.len() {
            if i != j {
                d_e += masi_d(pooled[i], pooled[j]);
            }
        }
    }
    d_e /= n * (n - 1.0);
    (d_e > 0.0).then(|| 1.0 - d_o / d_e)
}

fn random_set(rng: &mut ChaCha8Rng, singleton: bool) -> Label {
    let all = subsets();
    if singleton {
        [VariantTag::ALL[rng.random_range(0..4)]].into()
    } else {
        all[rng.random_range(0..all.len())].clone()
    }
}

fn alpha() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);

    for _ in 0..50 {
        let items = rng.random_range(2..=10);
        let raters = rng.random_range(2..=5);
        let labels: Vec<Label> = loop {
            let l: Vec<Label> = (0..items).map(|_| random_set(&mut rng, false)).collect();
            if l.iter().collect::<BTreeSet<_>>().len() >= 2 {
                break l;
            }
        };
        let ratings: Vec<_> = labels
            .iter()
            .enumerate()
            .flat_map(|(i, l)| {
                (0..raters).map(move |r| Rating {
                    item_id: format!("i{i}"),
                    rater_id: format!("r{r}"),
                    label: l.clone(),
                })
            })
            .collect();
        let a = krippendorff_alpha(&ratings, masi_d).map_err(|e| e.to_string())?.alpha;
        ensure(close(a, 1.0, 1e-9), || format!("perfect agreement gave {a}"))?;
    }

    const INSTANCES: usize = 200;
    let (mut defined, mut singleton_runs) = (0, 0);
    for k in 0..INSTANCES {
        let raters = rng.random_range(1..=5);
        let items = rng.random_range(1..=10);
        let singleton = k % 2 == 0;
        singleton_runs += usize::from(singleton);
        let mut ratings = Vec::new();
        for i in 0..items {
            for r in 0..raters {
                if rng.random_bool(0.85) {
                    ratings.push(Rating {
                        item_id: format!("i{i}"),
                        rater_id: format!("r{r}"),
                        label: random_set(&mut rng, singleton),
                    });
                }
            }
        }
        let got = krippendorff_alpha(&ratings, masi_d).ok().map(|r| r.alpha);
        let want = brute_alpha(&ratings);
        match (got, want) {
            (Some(g), Some(w)) if close(g, w, 1e-9) => defined += 1,
            (None, None) => {}
            _ => return Err(format!("instance {k}: {got:?} vs oracle {want:?}")),
        }

        // permute raters: new names, shuffled rating order
        let mut perm: Vec<usize> = (0..raters).collect();
        perm.shuffle(&mut rng);
        let mut permuted: Vec<_> = ratings
            .iter()
            .map(|r| {
                let idx: usize = r.rater_id[1..].parse().unwrap();
                Rating {
                    item_id: r.item_id.clone(),
                    rater_id: format!("p{}", perm[idx]),
                    label: r.label.clone(),
                }
            })
            .collect();
        permuted.shuffle(&mut rng);
        let again = krippendorff_alpha(&permuted, masi_d).ok().map(|r| r.alpha);
        match (got, again) {
            (Some(a), Some(b)) if close(a, b, 1e-9) => {}
            (None, None) => {}
            _ => return Err(format!("instance {k}: permuting raters changed {got:?} to {again:?}")),
        }
    }
    ensure(defined >= INSTANCES / 2, || format!("only {defined} instances had a defined alpha"))?;
    Ok(format!(
        "50 perfect-agreement runs at 1; {INSTANCES} oracle instances ({singleton_runs} singleton-only, {defined} defined), all rater-permutation invariant"
    ))
}

// ------------------------------------------------------------ self-correction

fn sentence() -> RadiologySentence {
    RadiologySentence {
        id: "s1".into(),
        text: "Mild bibasilar atelectasis.".into(),
        severity: None,
    }
}

/// Replies in call order: drafts from the generator, critiques, and processor
/// verdicts that say "Yes" for `yes_rounds` rounds and then "No".
fn loop_script(yes_rounds: usize, max_rounds: usize) -> Vec<String> {
    let mut q = Vec::new();
    for round in 0..=max_rounds {
        q.push(format!("draft {round}"));
        q.push("The wording is too technical.".into());
        q.push("I do not know what bibasilar means.".into());
        let verdict = if round < yes_rounds { "Yes, explain bibasilar." } else { "No." };
        q.push(verdict.into());
        q.push(verdict.into());
    }
    q
}

fn loop_run(yes_rounds: usize) -> Result<(radsimp_core::simplifier::LoopOutcome, usize), String> {
    let backend = ScriptedBackend::from_queue(loop_script(yes_rounds, 6));
    let config = LoopConfig {
        max_refine_rounds: 5,
        ..LoopConfig::default()
    };
    let s = Simplifier::new(&backend, PromptTemplateSet::default(), config)
        .map_err(|e| e.to_string())?
        .with_clock(Clock::Logical);
    let out = s.run_self_correction(&sentence(), Strategy::Plain).map_err(|e| e.to_string())?;
    Ok((out, backend.call_count()))
}

fn self_correction() -> Result<String, String> {
    let (out, calls) = loop_run(0)?;
    ensure(out.rounds_used == 0 && out.stop_reason == StopReason::ProcessorSaidNo, || {
        format!("immediate No: {} rounds, {:?}", out.rounds_used, out.stop_reason)
    })?;
    ensure(out.transcript.turns_by(GENERATOR).count() == 1 && calls == 5, || {
        format!("immediate No made {calls} calls")
    })?;

    for k in 1..=4 {
        let (out, _) = loop_run(k)?;
        let gens = out.transcript.turns_by(GENERATOR).count();
        ensure(out.rounds_used as usize == k && gens == k + 1, || {
            format!("{k} rounds: rounds_used {}, generator calls {gens}", out.rounds_used)
        })?;
        ensure(out.final_text == format!("draft {k}"), || format!("{k} rounds: final {:?}", out.final_text))?;

        let agents: Vec<&str> = out.transcript.turns().iter().map(|t| t.agent.as_str()).collect();
        let round = [RADIOLOGIST, PATIENT, PROCESSOR_RADIOLOGIST, PROCESSOR_PATIENT];
        let mut want = vec![GENERATOR];
        for _ in 0..k {
            want.extend(round);
            want.push(GENERATOR);
        }
        want.extend(round);
        ensure(agents == want, || format!("{k} rounds: turn order {agents:?}"))?;
    }

    let (out, _) = loop_run(usize::MAX)?;
    let gens = out.transcript.turns_by(GENERATOR).count();
    ensure(
        out.rounds_used == 5 && out.stop_reason == StopReason::RoundCapReached && gens == 6,
        || format!("cap: {} rounds, {gens} generator calls, {:?}", out.rounds_used, out.stop_reason),
    )?;

    let run = || -> Vec<String> {
        let s = Simplifier::new(
            ScriptedBackend::from_script(demo_script()),
            PromptTemplateSet::default(),
            LoopConfig::default(),
        )
        .unwrap()
        .with_clock(Clock::Logical);
        demo_corpus()
            .iter()
            .map(|sent| {
                let set = s.generate_variant_set(sent).unwrap();
                serde_json::to_string(&(&set.records, &set.transcripts)).unwrap()
            })
            .collect()
    };
    let (a, b) = (run(), run());
    ensure(a == b, || "two demo runs differ".into())?;
    Ok(format!(
        "0 rounds, k+1 generator calls for k=1..4, cap 5, turn order, {} bytes identical across runs",
        a.iter().map(String::len).sum::<usize>()
    ))
}

// --------------------------------------------------------------- Latin square

fn latin_square() -> Result<String, String> {
    let sentences: Vec<String> = (0..40).map(|i| format!("s{i}")).collect();
    let plan = latin_square_plan(8, &sentences, &VariantTag::ALL).map_err(|e| e.to_string())?;
    for r in 0..8 {
        let counts = plan.rater_counts(r);
        ensure(counts == vec![10; 4], || format!("rater {r}: {counts:?}"))?;
    }
    for s in 0..40 {
        for v in VariantTag::ALL {
            let n = plan.pair_count(s, v);
            ensure(n == 2, || format!("sentence {s} {v}: {n} raters"))?;
        }
    }
    Ok("every rater sees each variant 10 times, every (sentence, variant) has 2 raters".into())
}

// ------------------------------------------------------------------- severity

fn severity() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let level = |rng: &mut ChaCha8Rng| SeverityLevel::ALL[rng.random_range(0..5)];
    let flip = |l: SeverityLevel| SeverityLevel::from_numeric(6 - l.numeric()).unwrap();
    const SETS: usize = 100;
    let mut pairs_checked = 0;
    for k in 0..SETS {
        let n_sent = rng.random_range(1..8);
        let labels: BTreeMap<String, SeverityLevel> =
            (0..n_sent).map(|i| (format!("s{i}"), level(&mut rng))).collect();
        let responses: Vec<LaypersonResponse> = (0..rng.random_range(1..60))
            .map(|i| {
                let mut r = LaypersonResponse::new(
                    &format!("r{i}"),
                    &format!("s{}", rng.random_range(0..n_sent)),
                    VariantTag::ALL[i % 4],
                );
                r.q3_orig = rng.random_bool(0.9).then(|| level(&mut rng));
                r.q3_simp = rng.random_bool(0.9).then(|| level(&mut rng));
                r
            })
            .collect();
        let flipped_labels: BTreeMap<_, _> = labels.iter().map(|(k, &v)| (k.clone(), flip(v))).collect();
        let flipped: Vec<_> = responses
            .iter()
            .cloned()
            .map(|mut r| {
                r.q3_orig = r.q3_orig.map(flip);
                r.q3_simp = r.q3_simp.map(flip);
                r
            })
            .collect();
        for phase in [Phase::Original, Phase::WithSimplification] {
            let pairs: Vec<(f64, f64)> = responses
                .iter()
                .filter_map(|r| {
                    let g = match phase {
                        Phase::Original => r.q3_orig,
                        Phase::WithSimplification => r.q3_simp,
                    }?;
                    Some((f64::from(g.numeric()), f64::from(labels[&r.sentence_id].numeric())))
                })
                .collect();
            let got = severity_error(&responses, &labels, phase);
            if pairs.is_empty() {
                ensure(got.is_err(), || format!("set {k}: no pairs but a result"))?;
                continue;
            }
            let got = got.map_err(|e| format!("set {k}: {e}"))?;
            let n = pairs.len() as f64;
            let mse = pairs.iter().map(|(g, t)| (g - t) * (g - t)).sum::<f64>() / n;
            let acc = pairs.iter().filter(|(g, t)| g == t).count() as f64 / n;
            ensure(close(got.mse, mse, 1e-12) && close(got.accuracy, acc, 1e-12), || {
                format!("set {k} {phase:?}: {got:?} vs ({mse}, {acc})")
            })?;
            let rev = severity_error(&flipped, &flipped_labels, phase).map_err(|e| e.to_string())?;
            ensure(close(rev.mse, got.mse, 1e-12) && close(rev.accuracy, got.accuracy, 1e-12), || {
                format!("set {k} {phase:?}: reversal changed {got:?} to {rev:?}")
            })?;
            pairs_checked += pairs.len();
        }
    }
    Ok(format!("{SETS} random sets ({pairs_checked} guess/label pairs) match the oracle and are reversal invariant"))
}

// ---------------------------------------------------------------- end to end

fn radsimp() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_radsimp"));
    c.env_remove("RADSIMP_API_KEY").env("RUST_LOG", "warn");
    c
}

fn run_ok(cmd: &mut Command) -> Result<String, String> {
    let out = cmd.output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{cmd:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

/// Valid answers for whatever the served item asks, drawn from the options
/// exactly as the client sees them.
fn answers_for(item: &Value, rng: &mut ChaCha8Rng) -> Value {
    let mut out = Map::new();
    let mut most: BTreeSet<String> = BTreeSet::new();
    for q in item["questions"].as_array().unwrap() {
        let key = q["key"].as_str().unwrap();
        let kind = &q["kind"];
        let v = match kind["type"].as_str().unwrap() {
            "single_choice" => {
                let opts = kind["options"].as_array().unwrap();
                opts[rng.random_range(0..opts.len())]["value"].clone()
            }
            "multi_choice" => {
                let free: Vec<String> = kind["options"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|o| o["value"].as_str().unwrap().to_string())
                    .filter(|v| !most.contains(v))
                    .collect();
                let mut pick = BTreeSet::new();
                pick.insert(free[rng.random_range(0..free.len())].clone());
                for v in &free {
                    if rng.random_bool(0.2) {
                        pick.insert(v.clone());
                    }
                }
                if key == "most_preferred" {
                    most = pick.clone();
                }
                json!(pick)
            }
            "likert" => {
                json!(rng.random_range(kind["min"].as_u64().unwrap()..=kind["max"].as_u64().unwrap()))
            }
            _ => {
                if rng.random_bool(0.5) {
                    continue;
                }
                json!("clearer")
            }
        };
        out.insert(key.to_string(), v);
    }
    Value::Object(out)
}

struct InProcess {
    base: String,
    runtime: tokio::runtime::Runtime,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
}

impl InProcess {
    fn start(study: Study, dir: &Path, admin: &str) -> Self {
        let state = ServiceState::open(vec![study], dir, Some(admin.into())).unwrap();
        let runtime = tokio::runtime::Runtime::new().unwrap();
        let listener = runtime
            .block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))
            .unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let (tx, rx) = tokio::sync::oneshot::channel();
        runtime.spawn(radsimp_survey::serve(listener, state, async {
            let _ = rx.await;
        }));
        Self {
            base,
            runtime,
            stop: Some(tx),
        }
    }
}

impl Drop for InProcess {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        let rt = std::mem::replace(&mut self.runtime, tokio::runtime::Runtime::new().unwrap());
        rt.shutdown_timeout(Duration::from_secs(2));
    }
}

/// What one rater saw and answered.
struct Seen {
    rater: String,
    item: Value,
    answers: Value,
}

fn drive_raters(
    client: &Client,
    base: &str,
    study: &str,
    tokens: &[(String, String)],
    rng: &mut ChaCha8Rng,
    limit: Option<usize>,
    session: &str,
) -> Result<Vec<Seen>, String> {
    let mut seen = Vec::new();
    let mut open: Vec<&(String, String)> = tokens.iter().collect();
    while !open.is_empty() {
        if limit.is_some_and(|l| seen.len() >= l) {
            break;
        }
        let pick = rng.random_range(0..open.len());
        let (rater, token) = open[pick];
        let next: Value = client
            .get(format!("{base}/api/studies/{study}/next?rater={token}"))
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.json())
            .map_err(|e| e.to_string())?;
        if next["status"] == "done" {
            open.remove(pick);
            continue;
        }
        let item = next["item"].clone();
        let answers = answers_for(&item, rng);
        let body = json!({
            "rater": token,
            "event_id": format!("{session}-{rater}-{}", seen.len()),
            "item_id": item["item_id"],
            "answers": answers,
        });
        let resp = client
            .post(format!("{base}/api/studies/{study}/responses"))
            .json(&body)
            .send()
            .map_err(|e| e.to_string())?;
        let status = resp.status();
        let reply: Value = resp.json().map_err(|e| e.to_string())?;
        if status.as_u16() != 201 || reply["status"] != "accepted" {
            return Err(format!("submission rejected with {status}: {reply}"));
        }
        seen.push(Seen {
            rater: rater.clone(),
            item,
            answers,
        });
    }
    Ok(seen)
}

fn study_config(id: &str, laypeople: usize, experts: usize) -> (StudyConfig, Vec<(String, String)>) {
    let mut raters: Vec<RaterSpec> = (0..laypeople)
        .map(|i| RaterSpec {
            id: format!("lay{i}"),
            role: Role::Layperson,
            token: Some(format!("tok-lay{i}")),
        })
        .collect();
    raters.extend((0..experts).map(|i| RaterSpec {
        id: format!("rad{i}"),
        role: Role::Expert,
        token: Some(format!("tok-rad{i}")),
    }));
    let tokens = raters.iter().map(|r| (r.id.clone(), r.token.clone().unwrap())).collect();
    let config = StudyConfig {
        id: id.into(),
        state: StudyState::Open,
        seed: 9,
        blind_experts: true,
        token_salt: String::new(),
        raters,
        answer_maps: AnswerMaps::default(),
    };
    (config, tokens)
}

fn q1_value(v: &Value) -> f64 {
    match v.as_str().unwrap() {
        "not_at_all" => 1.0,
        "somewhat" => 2.0,
        "mostly" => 3.0,
        "completely" => 4.0,
        other => panic!("q1 {other}"),
    }
}

fn q2_index(v: &Value) -> usize {
    ["not_at_all", "low_confidence", "high_confidence"]
        .iter()
        .position(|k| *k == v.as_str().unwrap())
        .unwrap()
}

fn q4_value(v: &Value) -> f64 {
    match v.as_str().unwrap() {
        "further_confused" => -1.0,
        "no_help" => 0.0,
        "somewhat_better" => 1.0,
        "much_better" => 2.0,
        other => panic!("q4 {other}"),
    }
}

fn severity_value(v: &Value) -> f64 {
    let names = ["critical", "serious", "moderate", "mild", "healthy"];
    (names.iter().position(|n| *n == v.as_str().unwrap()).unwrap() + 1) as f64
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn mse_acc(pairs: &[(f64, f64)]) -> (f64, f64) {
    let n = pairs.len() as f64;
    (
        pairs.iter().map(|(g, t)| (g - t).powi(2)).sum::<f64>() / n,
        pairs.iter().filter(|(g, t)| g == t).count() as f64 / n,
    )
}

fn check_num(report: &Value, pointer: &str, want: f64) -> Result<(), String> {
    let got = report
        .pointer(pointer)
        .and_then(Value::as_f64)
        .ok_or_else(|| format!("report has no number at {pointer}"))?;
    ensure(close(got, want, 1e-9), || format!("{pointer}: report {got}, recomputed {want}"))
}

fn end_to_end() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let gen_dir = dir.path().join("gen");
    let out = run_ok(radsimp().args(["--backend", "scripted", "generate", "--out"]).arg(&gen_dir))?;
    ensure(out.contains("48 records for 12 sentences"), || format!("generate said {out:?}"))?;
    let simp_path = gen_dir.join("simplifications.jsonl");
    run_ok(radsimp().args(["readability", "--simplifications"]).arg(&simp_path))?;

    // readability table against per-text scores of the raw records
    let corpus = demo_corpus();
    let raw: Vec<Value> = std::fs::read_to_string(&simp_path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let table: Value = serde_json::from_str(&std::fs::read_to_string(gen_dir.join("readability.json")).unwrap()).unwrap();
    let mut groups: Vec<(&str, Vec<String>)> = vec![("Original", corpus.iter().map(|s| s.text.clone()).collect())];
    for v in VariantTag::ALL {
        let texts = raw
            .iter()
            .filter(|r| r["variant"] == v.as_str())
            .map(|r| r["text"].as_str().unwrap().to_string())
            .collect();
        groups.push((v.label(), texts));
    }
    for (i, (label, texts)) in groups.iter().enumerate() {
        let scores: Vec<_> = texts.iter().map(|t| score_text(t).unwrap()).collect();
        let col = &table["columns"][i];
        ensure(col["source"] == *label, || format!("readability column {i} is {}", col["source"]))?;
        for (key, want) in [
            ("fkgl", mean(&scores.iter().map(|s| s.fkgl).collect::<Vec<_>>())),
            ("gfi", mean(&scores.iter().map(|s| s.gfi).collect::<Vec<_>>())),
            ("ari", mean(&scores.iter().map(|s| s.ari).collect::<Vec<_>>())),
        ] {
            ensure(close(col[key].as_f64().unwrap(), want, 1e-9), || format!("readability {label} {key}"))?;
        }
    }

    // serve in-process and submit as scripted raters
    let records = load_simplifications(&simp_path).map_err(|e| e.to_string())?;
    let (config, tokens) = study_config("e2e", 8, 2);
    let study = Study::new(config, corpus.clone(), records).map_err(|e| e.to_string())?;
    let server = InProcess::start(study, &dir.path().join("state"), "admin");
    let client = Client::new();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let seen = drive_raters(&client, &server.base, "e2e", &tokens, &mut rng, None, "e2e")?;
    ensure(seen.len() == 8 * 36 + 2 * 48, || format!("{} submissions", seen.len()))?;
    let export = client
        .get(format!("{}/api/studies/e2e/export", server.base))
        .bearer_auth("admin")
        .send()
        .and_then(|r| r.error_for_status())
        .and_then(|r| r.text())
        .map_err(|e| e.to_string())?;
    drop(server);
    let export_path = dir.path().join("export.jsonl");
    std::fs::write(&export_path, &export).unwrap();

    let report_dir = dir.path().join("report");
    let text = run_ok(radsimp().args(["analyze", "--export"]).arg(&export_path).arg("--out").arg(&report_dir))?;
    for block in [
        "Expert evaluation",
        "Layperson evaluation",
        "Confidence (Q2) vs severity guess (Q3)",
        "Majority votes",
        "Krippendorff's alpha (MASI), most preferred",
        "Krippendorff's alpha (MASI), least preferred",
    ] {
        ensure(text.contains(block), || format!("report lacks {block:?}"))?;
    }
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(report_dir.join("report.json")).unwrap()).unwrap();

    // Recompute from the raw export lines.
    let lines: Vec<Value> = export.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let header = &lines[0];
    let events = &lines[1..];
    ensure(events.len() == seen.len(), || format!("export has {} events", events.len()))?;
    let submitted: BTreeSet<(String, String, String)> = seen
        .iter()
        .map(|s| (s.rater.clone(), s.item["item_id"].as_str().unwrap().to_string(), s.answers.to_string()))
        .collect();
    let exported: BTreeSet<(String, String, String)> = events
        .iter()
        .map(|e| {
            (
                e["rater_id"].as_str().unwrap().to_string(),
                e["item_id"].as_str().unwrap().to_string(),
                e["answers"].to_string(),
            )
        })
        .collect();
    ensure(submitted == exported, || "exported events differ from the submissions".into())?;

    let truth: BTreeMap<String, f64> = header["sentences"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| (s["id"].as_str().unwrap().to_string(), severity_value(&s["severity"])))
        .collect();
    let sentence_pos: BTreeMap<String, usize> =
        corpus.iter().enumerate().map(|(i, s)| (s.id.clone(), i)).collect();
    let lay_rows: BTreeMap<String, usize> = header["plan_raters"]
        .as_array()
        .unwrap()
        .iter()
        .enumerate()
        .map(|(i, r)| (r.as_str().unwrap().to_string(), i))
        .collect();
    let items: BTreeMap<(String, String), &Value> = header["items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| ((i["rater_id"].as_str().unwrap().to_string(), i["item_id"].as_str().unwrap().to_string()), i))
        .collect();
    let text_of: BTreeMap<(String, String), String> = raw
        .iter()
        .map(|r| {
            (
                (r["sentence_id"].as_str().unwrap().to_string(), r["variant"].as_str().unwrap().to_string()),
                r["text"].as_str().unwrap().to_string(),
            )
        })
        .collect();

    // sources: 0 = Original, 1.. = variant index + 1
    let mut q1: [Vec<f64>; 5] = Default::default();
    let mut q2: [Vec<f64>; 5] = Default::default();
    let mut q3: [Vec<(f64, f64)>; 5] = Default::default();
    let mut q4: [Vec<f64>; 5] = Default::default();
    let mut q2_hist = [[0usize; 3]; 5];
    let mut strata: [Vec<(f64, f64)>; 3] = Default::default();
    let mut expert: [[Vec<f64>; 5]; 4] = Default::default();
    let mut most: BTreeMap<String, Vec<(String, Label)>> = BTreeMap::new();
    let mut least: BTreeMap<String, Vec<(String, Label)>> = BTreeMap::new();
    let mut lay_pairs: BTreeSet<(String, String)> = BTreeSet::new();
    for e in events {
        let rater = e["rater_id"].as_str().unwrap();
        let item_id = e["item_id"].as_str().unwrap();
        let item = items[&(rater.to_string(), item_id.to_string())];
        let sid = item["sentence_id"].as_str().unwrap();
        let a = &e["answers"];
        let t = truth[sid];
        let source = match item["panel"].as_str().unwrap() {
            "lay_original" => 0,
            "lay_simplified" => {
                // the Latin-square row of this rater, recomputed
                let v = VariantTag::ALL[(lay_rows[rater] + sentence_pos[sid]) % 4];
                ensure(item["variant"] == v.as_str(), || format!("{rater} {sid}: plan says {}", item["variant"]))?;
                let shown = seen
                    .iter()
                    .find(|s| s.rater == rater && s.item["item_id"] == item_id)
                    .unwrap();
                ensure(shown.item["simplification"] == text_of[&(sid.to_string(), v.as_str().to_string())], || {
                    format!("{rater} {sid}: shown text is not the {v} record")
                })?;
                v.index() + 1
            }
            "lay_preference" => {
                lay_pairs.insert((rater.to_string(), sid.to_string()));
                let candidates: Vec<VariantTag> = item["candidates"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|c| c.as_str().unwrap().parse().unwrap())
                    .collect();
                let to_set = |letters: &Value| -> Label {
                    letters
                        .as_array()
                        .unwrap()
                        .iter()
                        .map(|l| {
                            let idx = l.as_str().unwrap().as_bytes()[0] - b'A';
                            candidates[usize::from(idx)]
                        })
                        .collect()
                };
                most.entry(sid.to_string()).or_default().push((rater.to_string(), to_set(&a["most_preferred"])));
                least.entry(sid.to_string()).or_default().push((rater.to_string(), to_set(&a["least_preferred"])));
                continue;
            }
            "expert_rating" => {
                let v: VariantTag = item["variant"].as_str().unwrap().parse().unwrap();
                for (k, axis) in ["correctness", "completeness", "hallucination", "structure", "simplicity"]
                    .iter()
                    .enumerate()
                {
                    expert[v.index()][k].push(a[axis].as_f64().unwrap());
                }
                continue;
            }
            other => return Err(format!("unknown panel {other}")),
        };
        q1[source].push(q1_value(&a["q1"]));
        q2[source].push((q2_index(&a["q2"]) + 1) as f64);
        q2_hist[source][q2_index(&a["q2"])] += 1;
        q3[source].push((severity_value(&a["q3"]), t));
        strata[q2_index(&a["q2"])].push((severity_value(&a["q3"]), t));
        if source > 0 {
            q4[source].push(q4_value(&a["q4"]));
        }
    }
    let mut checked = 0;
    let lay_n = lay_pairs.len();
    check_num(&report, "/layperson_responses", lay_n as f64)?;
    check_num(&report, "/expert_ratings", events.len() as f64 - 3.0 * lay_n as f64)?;
    for s in 0..5 {
        let base = format!("/questions/columns/{s}");
        check_num(&report, &format!("{base}/responses"), if s == 0 { lay_n } else { q1[s].len() } as f64)?;
        check_num(&report, &format!("{base}/q1"), mean(&q1[s]))?;
        check_num(&report, &format!("{base}/q2"), mean(&q2[s]))?;
        let (m, acc) = mse_acc(&q3[s]);
        check_num(&report, &format!("{base}/q3/mse"), m)?;
        check_num(&report, &format!("{base}/q3/accuracy"), acc)?;
        if s > 0 {
            check_num(&report, &format!("{base}/q4"), mean(&q4[s]))?;
        } else {
            ensure(report.pointer(&format!("{base}/q4")) == Some(&Value::Null), || "Original q4 present".into())?;
        }
        for (k, n) in q2_hist[s].iter().enumerate() {
            check_num(&report, &format!("/confidence_distribution/rows/{s}/1/{k}"), *n as f64)?;
        }
        checked += 10;
    }
    for (k, key) in ["not_at_all", "low_confidence", "high_confidence"].iter().enumerate() {
        if strata[k].is_empty() {
            ensure(report["confidence_strata"]["rows"].get(key).is_none(), || format!("empty stratum {key} reported"))?;
            continue;
        }
        let (m, acc) = mse_acc(&strata[k]);
        check_num(&report, &format!("/confidence_strata/rows/{key}/mse"), m)?;
        check_num(&report, &format!("/confidence_strata/rows/{key}/accuracy"), acc)?;
        check_num(&report, &format!("/confidence_strata/rows/{key}/n"), strata[k].len() as f64)?;
        checked += 3;
    }
    for (v, axes) in expert.iter().enumerate() {
        for (k, axis) in ["correctness", "completeness", "hallucination", "structure", "simplicity"]
            .iter()
            .enumerate()
        {
            check_num(&report, &format!("/expert/columns/{v}/{axis}"), mean(&axes[k]))?;
            checked += 1;
        }
    }

    // votes and alpha
    let mut csv_rows = BTreeSet::new();
    for (kind, sets) in [("most", &most), ("least", &least)] {
        let mut wins = [0u32; 4];
        let width = sets.values().map(Vec::len).max().unwrap() + 1;
        let mut hist = vec![vec![0usize; width]; 4];
        let mut ratings = Vec::new();
        for (sid, picks) in sets {
            let mut tally = [0usize; 4];
            for (rater, set) in picks {
                for v in set {
                    tally[v.index()] += 1;
                }
                ratings.push(Rating {
                    item_id: sid.clone(),
                    rater_id: rater.clone(),
                    label: set.clone(),
                });
            }
            let max = *tally.iter().max().unwrap();
            for v in 0..4 {
                wins[v] += u32::from(tally[v] == max);
                hist[v][tally[v]] += 1;
            }
        }
        for v in 0..4 {
            check_num(&report, &format!("/votes/{kind}/{v}"), f64::from(wins[v]))?;
            for (k, n) in hist[v].iter().enumerate() {
                csv_rows.insert(format!("{kind},{},{k},{n}", VariantTag::ALL[v].as_str()));
            }
        }
        let want = brute_alpha(&ratings).ok_or("alpha undefined on the simulated data")?;
        check_num(&report, &format!("/alpha_{kind}/alpha"), want)?;
        check_num(&report, &format!("/alpha_{kind}/ratings"), ratings.len() as f64)?;
        let pairable = sets.values().filter(|p| p.len() >= 2).count();
        check_num(&report, &format!("/alpha_{kind}/items"), pairable as f64)?;
        checked += 7;
    }

    // figure data files
    let votes_csv = std::fs::read_to_string(report_dir.join("preference_votes.csv")).unwrap();
    let mut lines = votes_csv.lines();
    ensure(lines.next() == Some("kind,variant,votes,sentences"), || "votes CSV header".into())?;
    let got: BTreeSet<String> = lines.map(str::to_string).collect();
    ensure(got == csv_rows, || "preference_votes.csv differs from the recomputed histogram".into())?;
    let conf_csv = std::fs::read_to_string(report_dir.join("confidence_histogram.csv")).unwrap();
    let want_conf: Vec<String> = std::iter::once("source,not_at_all,low_confidence,high_confidence".to_string())
        .chain(["Original", "Plain_BS", "Plain_SC", "CoT_BS", "CoT_SC"].iter().enumerate().map(|(s, label)| {
            format!("{label},{},{},{}", q2_hist[s][0], q2_hist[s][1], q2_hist[s][2])
        }))
        .collect();
    ensure(conf_csv.lines().collect::<Vec<_>>() == want_conf, || format!("confidence_histogram.csv:\n{conf_csv}"))?;

    Ok(format!(
        "{} HTTP submissions; {checked} report numbers and both CSVs match the recomputation",
        seen.len()
    ))
}

// ----------------------------------------------------------------- durability

struct Served {
    child: Child,
    base: String,
}

fn spawn_serve(study_file: &Path, state: &Path) -> Result<Served, String> {
    let mut child = radsimp()
        .args(["serve", "--bind", "127.0.0.1:0", "--study"])
        .arg(study_file)
        .arg("--state-dir")
        .arg(state)
        .env("RADSIMP_ADMIN_TOKEN", "admin")
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    let stdout = child.stdout.take().unwrap();
    let mut lines = BufReader::new(stdout).lines();
    let first = lines.next().ok_or("serve printed nothing")?.map_err(|e| e.to_string())?;
    let base = first
        .strip_prefix("listening on ")
        .ok_or_else(|| format!("unexpected first line {first:?}"))?
        .to_string();
    // keep draining so the child never blocks on a full pipe
    std::thread::spawn(move || for _ in lines {});
    Ok(Served { child, base })
}

fn exported_events(client: &Client, base: &str) -> Result<usize, String> {
    let body = client
        .get(format!("{base}/api/studies/durable/export"))
        .bearer_auth("admin")
        .send()
        .and_then(|r| r.error_for_status())
        .and_then(|r| r.text())
        .map_err(|e| e.to_string())?;
    Ok(body.lines().count() - 1)
}

fn durability() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let gen_dir = dir.path().join("gen");
    run_ok(radsimp().args(["generate", "--out"]).arg(&gen_dir))?;
    let study_file = dir.path().join("study.toml");
    let (config, tokens) = study_config("durable", 4, 1);
    let mut toml_text = format!(
        "simplifications = {:?}\n\n[study]\nid = \"durable\"\nstate = \"open\"\nseed = {}\ntoken_salt = \"\"\n",
        gen_dir.join("simplifications.jsonl").display().to_string(),
        config.seed
    );
    for r in &config.raters {
        let role = match r.role {
            Role::Layperson => "layperson",
            Role::Expert => "expert",
        };
        toml_text.push_str(&format!(
            "\n[[study.raters]]\nid = \"{}\"\nrole = \"{role}\"\ntoken = \"{}\"\n",
            r.id,
            r.token.as_deref().unwrap()
        ));
    }
    std::fs::write(&study_file, toml_text).unwrap();
    let state = dir.path().join("state");
    let client = Client::builder().timeout(Duration::from_secs(10)).build().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(51);

    let mut report = Vec::new();
    let mut total = 0;
    for k in [7usize, 0, 13] {
        let mut served = spawn_serve(&study_file, &state)?;
        let before = exported_events(&client, &served.base)?;
        ensure(before == total, || format!("restart recovered {before} events, expected {total}"))?;
        let seen = drive_raters(&client, &served.base, "durable", &tokens, &mut rng, Some(k), &format!("run{}", report.len()))?;
        ensure(seen.len() == k, || format!("only {} submissions acknowledged", seen.len()))?;
        total += k;
        served.child.kill().map_err(|e| e.to_string())?;
        served.child.wait().map_err(|e| e.to_string())?;
        report.push(k);
    }
    let served = spawn_serve(&study_file, &state)?;
    let recovered = exported_events(&client, &served.base)?;
    let mut child = served.child;
    let _ = child.kill();
    let _ = child.wait();
    ensure(recovered == total, || format!("recovered {recovered} of {total} events"))?;
    let log = state.join("durable").join("events.jsonl");
    let lines = std::fs::read_to_string(&log).map_err(|e| e.to_string())?.lines().count();
    ensure(lines == total, || format!("log holds {lines} lines"))?;
    Ok(format!("killed after {report:?} acknowledged submissions; every restart recovered exactly the running total ({total})"))
}
