use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::KernelError;

pub const CONTENT: &str = "{content}";
pub const TARGET_LANG: &str = "{target_lang}";

pub const REPHRASE_P1: &str = include_str!("../../prompts/rephrase_p1.txt");
pub const REPHRASE_P2: &str = include_str!("../../prompts/rephrase_p2.txt");
pub const TRANSLATE_TO: &str = include_str!("../../prompts/translate_to.txt");
pub const TRANSLATE_FROM: &str = include_str!("../../prompts/translate_from.txt");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template `{template_id}` must contain {{content}} exactly once, found {count}")]
    ContentPlaceholder { template_id: String, count: usize },
    #[error("template `{template_id}` requires a value for placeholder {{target_lang}}")]
    MissingArgument { template_id: String },
    #[error("template `{template_id}` has no {{target_lang}} placeholder but a value was supplied")]
    UnexpectedArgument { template_id: String },
    #[error("unknown template id `{0}`")]
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    template_id: String,
    body: String,
}

impl PromptTemplate {
    pub fn new(template_id: impl Into<String>, body: impl Into<String>) -> Result<Self, TemplateError> {
        let template_id = template_id.into();
        let body = body.into();
        let count = body.matches(CONTENT).count();
        if count != 1 {
            return Err(TemplateError::ContentPlaceholder { template_id, count });
        }
        Ok(Self { template_id, body })
    }

    /// One of the shipped templates: `rephrase_p1`, `rephrase_p2`,
    /// `translate_to`, `translate_from`.
    pub fn builtin(template_id: &str) -> Result<Self, TemplateError> {
        let body = match template_id {
            "rephrase_p1" => REPHRASE_P1,
            "rephrase_p2" => REPHRASE_P2,
            "translate_to" => TRANSLATE_TO,
            "translate_from" => TRANSLATE_FROM,
            other => return Err(TemplateError::Unknown(other.to_string())),
        };
        Self::new(template_id, body)
    }

    pub fn id(&self) -> &str {
        &self.template_id
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    pub fn needs_target_lang(&self) -> bool {
        self.body.contains(TARGET_LANG)
    }

    /// Placeholder substitution only.
    pub fn render(&self, content: &str, target_lang: Option<&str>) -> Result<String, TemplateError> {
        let body = match (self.needs_target_lang(), target_lang) {
            (true, Some(lang)) => self.body.replace(TARGET_LANG, lang),
            (true, None) => {
                return Err(TemplateError::MissingArgument {
                    template_id: self.template_id.clone(),
                })
            }
            (false, Some(_)) => {
                return Err(TemplateError::UnexpectedArgument {
                    template_id: self.template_id.clone(),
                })
            }
            (false, None) => self.body.clone(),
        };
        Ok(body.replacen(CONTENT, content, 1))
    }
}

pub fn render_prompt(
    template: &PromptTemplate,
    content: &crate::textunit::Sentence,
    target_lang: Option<&str>,
) -> Result<String, TemplateError> {
    template.render(content.raw(), target_lang)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SchedulePolicy {
    #[default]
    Fixed,
    Alternate,
}

/// Which template is active at each iteration. With `Alternate`, iteration
/// `t` uses `templates[t mod k]`; the pair (state, index) is the augmented
/// Markov state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSchedule {
    templates: Vec<PromptTemplate>,
    policy: SchedulePolicy,
}

impl PromptSchedule {
    pub fn new(templates: Vec<PromptTemplate>, policy: SchedulePolicy) -> Result<Self, KernelError> {
        if templates.is_empty() {
            return Err(KernelError::InvalidInput("prompt schedule has no templates".into()));
        }
        if policy == SchedulePolicy::Fixed && templates.len() != 1 {
            return Err(KernelError::InvalidInput(format!(
                "fixed schedule takes exactly one template, got {}",
                templates.len()
            )));
        }
        Ok(Self { templates, policy })
    }

    pub fn fixed(template: PromptTemplate) -> Self {
        Self {
            templates: vec![template],
            policy: SchedulePolicy::Fixed,
        }
    }

    pub fn alternate(templates: Vec<PromptTemplate>) -> Result<Self, KernelError> {
        Self::new(templates, SchedulePolicy::Alternate)
    }

    pub fn policy(&self) -> SchedulePolicy {
        self.policy
    }

    pub fn templates(&self) -> &[PromptTemplate] {
        &self.templates
    }

    pub fn index_for(&self, t: usize) -> usize {
        match self.policy {
            SchedulePolicy::Fixed => 0,
            SchedulePolicy::Alternate => t % self.templates.len(),
        }
    }

    pub fn template_for(&self, t: usize) -> (usize, &PromptTemplate) {
        let k = self.index_for(t);
        (k, &self.templates[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textunit::Sentence;

    #[test]
    fn listing_one_renders() {
        let tpl = PromptTemplate::builtin("rephrase_p1").unwrap();
        let s = Sentence::new("We begin.").unwrap();
        let out = render_prompt(&tpl, &s, None).unwrap();
        assert!(out.starts_with("Given a passage, rephrase it while preserving all the original meaning"));
        assert!(out.contains("Return only the rephrased passage.\n\n"));
        assert!(out.ends_with("Rephrase the following text:\nWe begin."));
    }

    #[test]
    fn translation_renders_target_language() {
        let tpl = PromptTemplate::builtin("translate_to").unwrap();
        let s = Sentence::new("We begin with a prologue.").unwrap();
        let out = render_prompt(&tpl, &s, Some("French")).unwrap();
        assert_eq!(out, "Translate the following English text into French:\nWe begin with a prologue.");
        let back = PromptTemplate::builtin("translate_from").unwrap();
        let out = back.render("Nous commençons par un prologue.", Some("French")).unwrap();
        assert!(out.starts_with("Translate the following French text into English:"));
    }

    #[test]
    fn placeholder_contract() {
        let tpl = PromptTemplate::builtin("rephrase_p2").unwrap();
        assert_eq!(
            tpl.render("x", Some("French")),
            Err(TemplateError::UnexpectedArgument {
                template_id: "rephrase_p2".into()
            })
        );
        let tr = PromptTemplate::builtin("translate_to").unwrap();
        assert!(matches!(tr.render("x", None), Err(TemplateError::MissingArgument { .. })));
        assert!(matches!(
            PromptTemplate::new("bad", "no placeholder"),
            Err(TemplateError::ContentPlaceholder { count: 0, .. })
        ));
        assert!(PromptTemplate::new("twice", "{content} {content}").is_err());
        assert!(PromptTemplate::builtin("nope").is_err());
    }

    #[test]
    fn content_is_not_reinterpreted() {
        let tpl = PromptTemplate::new("t", "A {content} B").unwrap();
        assert_eq!(tpl.render("{target_lang}", None).unwrap(), "A {target_lang} B");
    }

    #[test]
    fn schedule_indices() {
        let p1 = PromptTemplate::builtin("rephrase_p1").unwrap();
        let p2 = PromptTemplate::builtin("rephrase_p2").unwrap();
        let fixed = PromptSchedule::fixed(p1.clone());
        assert!((0..10).all(|t| fixed.index_for(t) == 0));
        let alt = PromptSchedule::alternate(vec![p1.clone(), p2]).unwrap();
        let seq: Vec<usize> = (0..6).map(|t| alt.index_for(t)).collect();
        assert_eq!(seq, vec![0, 1, 0, 1, 0, 1]);
        assert!(PromptSchedule::alternate(vec![]).is_err());
        assert!(PromptSchedule::new(vec![p1.clone(), p1], SchedulePolicy::Fixed).is_err());
    }
}
