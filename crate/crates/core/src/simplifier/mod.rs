//! Plain and chain-of-thought prompting plus the four-agent self-correction loop.
//!
//! One self-correction session runs as follows. The Generator answers the
//! initial prompt. Each round the Radiologist and Patient personas critique
//! the current simplification, and the Processor condenses each critique
//! separately. When both condensed critiques start with the stop word the
//! loop ends; otherwise the Generator gets the refine prompt and answers
//! again. Only the Generator keeps a conversation; every other agent call
//! starts from a fresh history.

mod templates;

use serde::{Deserialize, Serialize};

use crate::chat::{BackendError, ChatBackend, ChatMessage, Clock, ModelParams, Transcript};
use crate::corpus::{RadiologySentence, SimplificationRecord, VariantTag};

pub use templates::{
    PromptTemplateSet, TemplateError, FEEDBACK_SLOT, PATIENT_FEEDBACK_SLOT,
    RADIOLOGIST_FEEDBACK_SLOT, SENTENCE_SLOT,
};

pub const GENERATOR: &str = "generator";
pub const RADIOLOGIST: &str = "radiologist";
pub const PATIENT: &str = "patient";
pub const PROCESSOR_RADIOLOGIST: &str = "processor:radiologist";
pub const PROCESSOR_PATIENT: &str = "processor:patient";

/// Stand-in for a feedback stream whose processor found nothing to fix.
pub const NO_CRITICAL_COMMENTS: &str = "No critical comments.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Plain,
    Cot,
}

impl Strategy {
    pub fn baseline_variant(self) -> VariantTag {
        match self {
            Strategy::Plain => VariantTag::PlainBs,
            Strategy::Cot => VariantTag::CotBs,
        }
    }

    pub fn self_corrected_variant(self) -> VariantTag {
        match self {
            Strategy::Plain => VariantTag::PlainSc,
            Strategy::Cot => VariantTag::CotSc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    pub max_refine_rounds: u32,
    pub params: ModelParams,
    pub stop_prefix: String,
    /// Sentences processed in parallel by batch generation.
    pub worker_count: usize,
    /// Keep only the last paragraph of CoT baseline responses.
    pub cot_extract_final_paragraph: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            max_refine_rounds: 5,
            params: ModelParams::default(),
            stop_prefix: "No".into(),
            worker_count: 1,
            cot_extract_final_paragraph: false,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), SimplifierError> {
        if self.max_refine_rounds == 0 {
            return Err(SimplifierError::Config("max_refine_rounds must be >= 1".into()));
        }
        if self.stop_prefix.trim().is_empty() {
            return Err(SimplifierError::Config("stop_prefix must not be empty".into()));
        }
        if self.worker_count == 0 {
            return Err(SimplifierError::Config("worker_count must be >= 1".into()));
        }
        self.params
            .validate()
            .map_err(|e| SimplifierError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ProcessorSaidNo,
    RoundCapReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopOutcome {
    pub final_text: String,
    pub rounds_used: u32,
    pub stop_reason: StopReason,
    pub transcript: Transcript,
}

impl LoopOutcome {
    pub fn transcript_ref(&self) -> &str {
        self.transcript.id()
    }
}

/// All four simplifications of one sentence and the sessions that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantSet {
    pub records: Vec<SimplificationRecord>,
    pub transcripts: Vec<Transcript>,
    pub stop_reasons: Vec<(VariantTag, StopReason)>,
}

#[derive(Debug, thiserror::Error)]
pub enum SimplifierError {
    #[error("sentence {sentence_id}: {agent} call failed: {source}")]
    Backend {
        sentence_id: String,
        agent: String,
        #[source]
        source: BackendError,
        /// Everything recorded before the failing call.
        transcript: Box<Transcript>,
    },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("invalid loop configuration: {0}")]
    Config(String),
}

/// True when `reply` opens with `prefix` as a whole word, ignoring case and any
/// leading whitespace, quotes or punctuation.
pub fn matches_stop(reply: &str, prefix: &str) -> bool {
    let trimmed = reply.trim_start_matches(|c: char| {
        c.is_whitespace()
            || c.is_ascii_punctuation()
            || matches!(c, '\u{2018}' | '\u{2019}' | '\u{201c}' | '\u{201d}')
    });
    let prefix = prefix.trim();
    let Some(head) = trimmed.get(..prefix.len()) else {
        return false;
    };
    if !head.eq_ignore_ascii_case(prefix) {
        return false;
    }
    !trimmed[prefix.len()..]
        .chars()
        .next()
        .is_some_and(char::is_alphabetic)
}

/// Last non-empty paragraph of a response (paragraphs split on blank lines).
pub fn extract_final_paragraph(text: &str) -> &str {
    let mut last = text.trim();
    let mut current_start: Option<usize> = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if line.trim().is_empty() {
            current_start = None;
        } else if current_start.is_none() {
            current_start = Some(offset);
        }
        offset += line.len();
        if let Some(start) = current_start {
            last = text[start..offset].trim();
        }
    }
    last
}

pub struct Simplifier<B> {
    backend: B,
    templates: PromptTemplateSet,
    config: LoopConfig,
    clock: Clock,
}

struct Session<'a> {
    sentence_id: &'a str,
    transcript: Transcript,
}

impl<B: ChatBackend> Simplifier<B> {
    pub fn new(
        backend: B,
        templates: PromptTemplateSet,
        config: LoopConfig,
    ) -> Result<Self, SimplifierError> {
        templates.validate()?;
        config.validate()?;
        Ok(Self {
            backend,
            templates,
            config,
            clock: Clock::System,
        })
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn config(&self) -> &LoopConfig {
        &self.config
    }

    pub fn templates(&self) -> &PromptTemplateSet {
        &self.templates
    }

    fn initial_prompt(&self, sentence: &RadiologySentence, strategy: Strategy) -> String {
        match strategy {
            Strategy::Plain => self.templates.render_plain(&sentence.text),
            Strategy::Cot => self.templates.render_cot(&sentence.text),
        }
    }

    fn call(
        &self,
        session: &mut Session<'_>,
        agent: &str,
        request: Vec<ChatMessage>,
    ) -> Result<ChatMessage, SimplifierError> {
        match self.backend.complete(&request, &self.config.params) {
            Ok(response) => {
                let ts = self.clock.stamp(&session.transcript);
                session
                    .transcript
                    .record_turn(agent, request, response.clone(), &self.config.params, ts)
                    .expect("session transcript is open");
                Ok(response)
            }
            Err(source) => Err(SimplifierError::Backend {
                sentence_id: session.sentence_id.to_string(),
                agent: agent.to_string(),
                source,
                transcript: Box::new(session.transcript.clone()),
            }),
        }
    }

    /// Single-shot simplification (Plain_BS or CoT_BS) and its one-turn transcript.
    pub fn simplify_baseline(
        &self,
        sentence: &RadiologySentence,
        strategy: Strategy,
    ) -> Result<(SimplificationRecord, Transcript), SimplifierError> {
        let variant = strategy.baseline_variant();
        let mut session = Session {
            sentence_id: &sentence.id,
            transcript: Transcript::new(transcript_id(&sentence.id, variant), &sentence.id),
        };
        let prompt = self.initial_prompt(sentence, strategy);
        let reply = self.call(&mut session, GENERATOR, vec![ChatMessage::user(prompt)])?;
        let text = if strategy == Strategy::Cot && self.config.cot_extract_final_paragraph {
            extract_final_paragraph(&reply.content).to_string()
        } else {
            reply.content
        };
        let mut transcript = session.transcript;
        transcript.finalize();
        let record = SimplificationRecord {
            sentence_id: sentence.id.clone(),
            variant,
            text,
            iterations: 0,
            transcript_ref: transcript.id().to_string(),
        };
        Ok((record, transcript))
    }

    fn critique(
        &self,
        session: &mut Session<'_>,
        agent: &str,
        persona: &str,
        instruction: &str,
        sentence: &str,
        candidate: &str,
    ) -> Result<String, SimplifierError> {
        let request = vec![
            ChatMessage::system(persona),
            ChatMessage::user(PromptTemplateSet::render_critique(instruction, sentence, candidate)),
        ];
        Ok(self.call(session, agent, request)?.content)
    }

    fn process(
        &self,
        session: &mut Session<'_>,
        agent: &str,
        feedback: &str,
    ) -> Result<String, SimplifierError> {
        let request = vec![ChatMessage::user(self.templates.render_processor(feedback))];
        Ok(self.call(session, agent, request)?.content)
    }

    /// Runs the Generator → Radiologist → Patient → Processor loop until both
    /// processed critiques say the stop word or the round cap is hit.
    pub fn run_self_correction(
        &self,
        sentence: &RadiologySentence,
        strategy: Strategy,
    ) -> Result<LoopOutcome, SimplifierError> {
        let variant = strategy.self_corrected_variant();
        let mut session = Session {
            sentence_id: &sentence.id,
            transcript: Transcript::new(transcript_id(&sentence.id, variant), &sentence.id),
        };
        let t = &self.templates;
        let stop = self.config.stop_prefix.as_str();

        let mut generator_history = vec![ChatMessage::user(self.initial_prompt(sentence, strategy))];
        let mut current = self
            .call(&mut session, GENERATOR, generator_history.clone())?
            .content;
        generator_history.push(ChatMessage::assistant(current.clone()));

        let mut rounds_used = 0;
        let stop_reason = loop {
            let rad_feedback = self.critique(
                &mut session,
                RADIOLOGIST,
                &t.radiologist_persona,
                &t.radiologist_instruction,
                &sentence.text,
                &current,
            )?;
            let pat_feedback = self.critique(
                &mut session,
                PATIENT,
                &t.patient_persona,
                &t.patient_instruction,
                &sentence.text,
                &current,
            )?;
            let rad_processed = self.process(&mut session, PROCESSOR_RADIOLOGIST, &rad_feedback)?;
            let pat_processed = self.process(&mut session, PROCESSOR_PATIENT, &pat_feedback)?;

            let rad_done = matches_stop(&rad_processed, stop);
            let pat_done = matches_stop(&pat_processed, stop);
            if rad_done && pat_done {
                break StopReason::ProcessorSaidNo;
            }
            if rounds_used >= self.config.max_refine_rounds {
                break StopReason::RoundCapReached;
            }

            let refine = t.render_refine(
                if rad_done { NO_CRITICAL_COMMENTS } else { &rad_processed },
                if pat_done { NO_CRITICAL_COMMENTS } else { &pat_processed },
            );
            generator_history.push(ChatMessage::user(refine));
            current = self
                .call(&mut session, GENERATOR, generator_history.clone())?
                .content;
            generator_history.push(ChatMessage::assistant(current.clone()));
            rounds_used += 1;
        };

        let mut transcript = session.transcript;
        transcript.finalize();
        Ok(LoopOutcome {
            final_text: current,
            rounds_used,
            stop_reason,
            transcript,
        })
    }

    /// Produces Plain_BS, CoT_BS, Plain_SC and CoT_SC (called in that order).
    /// Records come back in report column order. Any failure discards the set.
    pub fn generate_variant_set(
        &self,
        sentence: &RadiologySentence,
    ) -> Result<VariantSet, SimplifierError> {
        let mut records = Vec::with_capacity(4);
        let mut transcripts = Vec::with_capacity(4);
        let mut stop_reasons = Vec::with_capacity(2);
        for strategy in [Strategy::Plain, Strategy::Cot] {
            let (record, transcript) = self.simplify_baseline(sentence, strategy)?;
            records.push(record);
            transcripts.push(transcript);
        }
        for strategy in [Strategy::Plain, Strategy::Cot] {
            let outcome = self.run_self_correction(sentence, strategy)?;
            let variant = strategy.self_corrected_variant();
            records.push(SimplificationRecord {
                sentence_id: sentence.id.clone(),
                variant,
                text: outcome.final_text,
                iterations: outcome.rounds_used,
                transcript_ref: outcome.transcript.id().to_string(),
            });
            stop_reasons.push((variant, outcome.stop_reason));
            transcripts.push(outcome.transcript);
        }
        records.sort_by_key(|r| r.variant);
        transcripts.sort_by(|a, b| a.id().cmp(b.id()));
        Ok(VariantSet {
            records,
            transcripts,
            stop_reasons,
        })
    }
}

pub fn transcript_id(sentence_id: &str, variant: VariantTag) -> String {
    format!("{sentence_id}/{}", variant.as_str())
}
