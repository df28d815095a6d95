//! Combining translator answers `s` and searcher answers `i`.
//!
//! `Dda` keeps `s` when it is non-empty and reaches F1 ≥ σ against gold,
//! otherwise takes the better of the two by F1 (ties to the translator).
//! `Bna` takes `i` only when `s` is empty and needs no gold answers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::AnswerSet;
use crate::metrics::{f1, AnswerSource};

#[derive(Debug, Error, PartialEq)]
pub enum FusionError {
    #[error("decision factor {0} outside [0, 1]")]
    SigmaOutOfRange(f64),
    #[error("dynamic decision needs gold answers")]
    MissingGold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionRule {
    Dda,
    Bna,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub sigma: f64,
    pub rule: FusionRule,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            rule: FusionRule::Dda,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), FusionError> {
        if (0.0..=1.0).contains(&self.sigma) {
            Ok(())
        } else {
            Err(FusionError::SigmaOutOfRange(self.sigma))
        }
    }
}

/// Borrowed view of whichever input a rule picked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Choice<'a> {
    pub answers: &'a AnswerSet,
    pub source: AnswerSource,
}

impl<'a> Choice<'a> {
    fn translator(answers: &'a AnswerSet) -> Self {
        Self {
            answers,
            source: AnswerSource::Translator,
        }
    }

    fn searcher(answers: &'a AnswerSet) -> Self {
        Self {
            answers,
            source: AnswerSource::Searcher,
        }
    }
}

/// Higher F1 against gold wins; a tie keeps `a`.
pub fn better<'a>(a: &'a AnswerSet, b: &'a AnswerSet, gold: &AnswerSet) -> &'a AnswerSet {
    if f1(b, gold) > f1(a, gold) {
        b
    } else {
        a
    }
}

pub fn dda<'a>(s: &'a AnswerSet, i: &'a AnswerSet, gold: &AnswerSet, sigma: f64) -> &'a AnswerSet {
    dda_choice(s, i, gold, sigma).answers
}

fn dda_choice<'a>(s: &'a AnswerSet, i: &'a AnswerSet, gold: &AnswerSet, sigma: f64) -> Choice<'a> {
    if !s.is_empty() && f1(s, gold) >= sigma {
        return Choice::translator(s);
    }
    if std::ptr::eq(better(s, i, gold), s) {
        Choice::translator(s)
    } else {
        Choice::searcher(i)
    }
}

pub fn bna<'a>(s: &'a AnswerSet, i: &'a AnswerSet) -> &'a AnswerSet {
    bna_choice(s, i).answers
}

fn bna_choice<'a>(s: &'a AnswerSet, i: &'a AnswerSet) -> Choice<'a> {
    if s.is_empty() {
        Choice::searcher(i)
    } else {
        Choice::translator(s)
    }
}

/// Applies the configured rule. `gold` is required for `Dda` only.
pub fn fuse<'a>(
    config: &FusionConfig,
    s: &'a AnswerSet,
    i: &'a AnswerSet,
    gold: Option<&AnswerSet>,
) -> Result<Choice<'a>, FusionError> {
    config.validate()?;
    match config.rule {
        FusionRule::Bna => Ok(bna_choice(s, i)),
        FusionRule::Dda => {
            let gold = gold.ok_or(FusionError::MissingGold)?;
            Ok(dda_choice(s, i, gold, config.sigma))
        }
    }
}
