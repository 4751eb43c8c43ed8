//! Turning candidate logical forms into text for the critic.
//!
//! Three methods, in increasing distance from the logical form: the raw
//! serialization, the serialization with entity tokens rewritten to English
//! phrases, and a full canonical utterance from a template grammar.

mod grammar;
mod lexicon;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beam::BeamCandidate;
use crate::lf::LfTree;

pub use grammar::{SlotType, TemplateGrammar, TemplateRule};
pub use lexicon::EntityLexicon;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PreprocessError {
    #[error("method {0} needs a {1}, none was provided")]
    MissingResource(Method, &'static str),
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("grammar line {line}: {message}")]
    Grammar { line: usize, message: String },
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Raw,
    EntityNames,
    Templated,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Raw, Method::EntityNames, Method::Templated];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Raw => "raw",
            Method::EntityNames => "entity_names",
            Method::Templated => "templated",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(Method::Raw),
            "entity_names" | "entity-names" => Ok(Method::EntityNames),
            "templated" => Ok(Method::Templated),
            other => Err(format!("unknown method {other:?} (expected raw, entity_names or templated)")),
        }
    }
}

/// Lexicon and grammar, loaded once and shared read-only.
#[derive(Debug, Clone, Default)]
pub struct Resources {
    pub lexicon: Option<EntityLexicon>,
    pub grammar: Option<TemplateGrammar>,
}

impl Resources {
    pub fn check(&self, method: Method) -> Result<(), PreprocessError> {
        match method {
            Method::Raw => Ok(()),
            Method::EntityNames if self.lexicon.is_none() => Err(PreprocessError::MissingResource(method, "lexicon")),
            Method::Templated if self.grammar.is_none() => Err(PreprocessError::MissingResource(method, "grammar")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ProcessedText {
    Text(String),
    /// No canonical utterance exists; only produced by the templated method.
    Excluded,
}

impl ProcessedText {
    pub fn text(&self) -> Option<&str> {
        match self {
            ProcessedText::Text(t) => Some(t),
            ProcessedText::Excluded => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedCandidate {
    pub rank: usize,
    pub method: Method,
    pub text: ProcessedText,
}

pub fn process_raw(lf: &LfTree) -> String {
    lf.serialize()
}

/// Rewrites one token: lexicon phrase if present, otherwise an
/// underscore-prefixed token loses its leading underscore and has its
/// remaining underscores turned into spaces.
pub fn naturalize_token(token: &str, lexicon: &EntityLexicon) -> String {
    if let Some(phrase) = lexicon.get(token) {
        return phrase.to_string();
    }
    if let Some(rest) = token.strip_prefix('_') {
        let words = rest.split('_').filter(|w| !w.is_empty()).collect::<Vec<_>>().join(" ");
        if !words.is_empty() {
            return words;
        }
    }
    token.to_string()
}

pub fn naturalize(lf: &LfTree, lexicon: &EntityLexicon) -> String {
    join_words(lf.tokens().iter().map(|t| naturalize_token(t, lexicon)))
}

/// Same rewrite applied to whitespace-separated text.
pub fn naturalize_text(text: &str, lexicon: &EntityLexicon) -> String {
    join_words(text.split_whitespace().map(|t| naturalize_token(t, lexicon)))
}

fn join_words(words: impl Iterator<Item = String>) -> String {
    words.collect::<Vec<_>>().join(" ")
}

pub fn expand_template(lf: &LfTree, grammar: &TemplateGrammar) -> ProcessedText {
    grammar.expand(lf).map_or(ProcessedText::Excluded, ProcessedText::Text)
}

pub fn process_one(lf: &LfTree, method: Method, resources: &Resources) -> Result<ProcessedText, PreprocessError> {
    resources.check(method)?;
    Ok(match method {
        Method::Raw => ProcessedText::Text(process_raw(lf)),
        Method::EntityNames => ProcessedText::Text(naturalize(lf, resources.lexicon.as_ref().unwrap())),
        Method::Templated => expand_template(lf, resources.grammar.as_ref().unwrap()),
    })
}

/// Processes a beam, preserving candidate order.
pub fn process(
    candidates: &[BeamCandidate],
    method: Method,
    resources: &Resources,
) -> Result<Vec<ProcessedCandidate>, PreprocessError> {
    resources.check(method)?;
    candidates
        .iter()
        .map(|c| Ok(ProcessedCandidate { rank: c.rank, method, text: process_one(&c.lf, method, resources)? }))
        .collect()
}
