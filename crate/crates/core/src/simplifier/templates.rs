use std::path::Path;

use serde::{Deserialize, Serialize};

pub const SENTENCE_SLOT: &str = "<RADIOLOGY SENTENCE>";
pub const FEEDBACK_SLOT: &str = "<FEEDBACK>";
pub const RADIOLOGIST_FEEDBACK_SLOT: &str = "<PROCESSED RADIOLOGIST FEEDBACK>";
pub const PATIENT_FEEDBACK_SLOT: &str = "<PROCESSED PATIENT FEEDBACK>";

const PLAIN: &str = "Simplify the sentence: <RADIOLOGY SENTENCE>.";

const COT: &str = "Sentence: <RADIOLOGY SENTENCE>.\n\
Can you list all the complicated medical terms and provide explanations that are understandable by laypeople? \
Finally, write a simplification of the original sentence that laypeople can understand.";

const PROCESSOR: &str = "Feedback: <FEEDBACK>\n\
Are there any critical comments or improvement suggestions in Feedback? \
If so, extract them starting with \"Yes\". Otherwise, say \"No\".";

const REFINE: &str = "Radiologist's feedback: <PROCESSED RADIOLOGIST FEEDBACK>\n\
Patient's feedback: <PROCESSED PATIENT FEEDBACK>\n\
Can you improve your simplification while keeping it concise?";

const RADIOLOGIST_PERSONA: &str = "Pretend that you are an experienced radiologist. \
You read and write radiology reports every day, and you care that anything a patient is told \
about their report is medically correct and complete.";

const RADIOLOGIST_INSTRUCTION: &str = "You will see a sentence from a radiology report and a simplification of it \
written for a patient. Evaluate the simplification. Is it correct, or does it change the meaning of any finding? \
Is it complete, or does it leave out important information? Does it add information that is not in the original? \
Does it mention the body part, the finding, and what the finding means? Give short, specific feedback.";

const PATIENT_PERSONA: &str = "Pretend that you are a patient who lacks medical knowledge and cannot understand \
complex medical concepts. You have just received a sentence from your radiology report together with a \
simplified explanation of it.";

const PATIENT_INSTRUCTION: &str = "Read the simplification of your radiology sentence. Say whether you understand \
what it means and how serious your condition is. Point out any words or parts that confuse you. \
Only comment on what is hard to understand; do not judge whether it is medically correct, \
because you do not have the knowledge to do that.";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template {template:?} must contain slot {slot} exactly once (found {found})")]
    Slot {
        template: &'static str,
        slot: &'static str,
        found: usize,
    },
    #[error("template {0:?} is empty")]
    Empty(&'static str),
    #[error("cannot read template file: {0}")]
    Io(String),
    #[error("cannot parse template file: {0}")]
    Parse(String),
}

/// Every prompt and persona used by the generator and critic agents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptTemplateSet {
    pub plain: String,
    pub cot: String,
    pub radiologist_persona: String,
    pub patient_persona: String,
    pub radiologist_instruction: String,
    pub patient_instruction: String,
    pub processor_prompt: String,
    pub refine_prompt: String,
}

impl Default for PromptTemplateSet {
    fn default() -> Self {
        Self {
            plain: PLAIN.into(),
            cot: COT.into(),
            radiologist_persona: RADIOLOGIST_PERSONA.into(),
            patient_persona: PATIENT_PERSONA.into(),
            radiologist_instruction: RADIOLOGIST_INSTRUCTION.into(),
            patient_instruction: PATIENT_INSTRUCTION.into(),
            processor_prompt: PROCESSOR.into(),
            refine_prompt: REFINE.into(),
        }
    }
}

fn expect_slot(
    template: &'static str,
    text: &str,
    slot: &'static str,
) -> Result<(), TemplateError> {
    let found = text.matches(slot).count();
    if found == 1 {
        Ok(())
    } else {
        Err(TemplateError::Slot {
            template,
            slot,
            found,
        })
    }
}

impl PromptTemplateSet {
    /// Reads a TOML file whose keys are the field names; absent keys keep defaults.
    pub fn load(path: &Path) -> Result<Self, TemplateError> {
        let text = std::fs::read_to_string(path).map_err(|e| TemplateError::Io(e.to_string()))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, TemplateError> {
        let set: Self = toml::from_str(text).map_err(|e| TemplateError::Parse(e.to_string()))?;
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        expect_slot("plain", &self.plain, SENTENCE_SLOT)?;
        expect_slot("cot", &self.cot, SENTENCE_SLOT)?;
        expect_slot("processor_prompt", &self.processor_prompt, FEEDBACK_SLOT)?;
        expect_slot("refine_prompt", &self.refine_prompt, RADIOLOGIST_FEEDBACK_SLOT)?;
        expect_slot("refine_prompt", &self.refine_prompt, PATIENT_FEEDBACK_SLOT)?;
        for (name, text) in [
            ("radiologist_persona", &self.radiologist_persona),
            ("patient_persona", &self.patient_persona),
            ("radiologist_instruction", &self.radiologist_instruction),
            ("patient_instruction", &self.patient_instruction),
        ] {
            if text.trim().is_empty() {
                return Err(TemplateError::Empty(name));
            }
        }
        Ok(())
    }

    /// The templates put their own full stop after the sentence slot, so one
    /// trailing '.' is dropped from the sentence.
    fn sentence_for_slot(sentence: &str) -> &str {
        let s = sentence.trim();
        s.strip_suffix('.').unwrap_or(s)
    }

    pub fn render_plain(&self, sentence: &str) -> String {
        self.plain
            .replace(SENTENCE_SLOT, Self::sentence_for_slot(sentence))
    }

    pub fn render_cot(&self, sentence: &str) -> String {
        self.cot.replace(SENTENCE_SLOT, Self::sentence_for_slot(sentence))
    }

    pub fn render_processor(&self, feedback: &str) -> String {
        self.processor_prompt.replace(FEEDBACK_SLOT, feedback.trim())
    }

    pub fn render_refine(&self, radiologist: &str, patient: &str) -> String {
        self.refine_prompt
            .replace(RADIOLOGIST_FEEDBACK_SLOT, radiologist.trim())
            .replace(PATIENT_FEEDBACK_SLOT, patient.trim())
    }

    /// User message for a persona critic: its instruction, then the pair under review.
    pub fn render_critique(instruction: &str, sentence: &str, simplification: &str) -> String {
        format!(
            "{}\n\nOriginal sentence: {}\nSimplification: {}",
            instruction.trim(),
            sentence.trim(),
            simplification.trim()
        )
    }
}
