use std::collections::BTreeMap;
use std::path::Path;

use super::PreprocessError;

/// Maps logical-form tokens to natural-language phrases.
///
/// Phrases are lowercase and must not themselves contain lexicon keys or
/// underscore-prefixed words, which keeps naturalization idempotent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntityLexicon {
    entries: BTreeMap<String, String>,
}

impl EntityLexicon {
    pub fn from_pairs<I, K, V>(pairs: I) -> Result<Self, PreprocessError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Self::build(pairs.into_iter().enumerate().map(|(i, (k, v))| (i + 1, k.into(), v.into())))
    }

    /// Reads `token<TAB>phrase` lines. Blank lines and lines starting with
    /// `#` are skipped.
    pub fn from_tsv(text: &str) -> Result<Self, PreprocessError> {
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('\t').ok_or_else(|| lexicon_err(i + 1, "expected token<TAB>phrase"))?;
            rows.push((i + 1, k.trim().to_string(), v.to_string()));
        }
        Self::build(rows.into_iter())
    }

    fn build(rows: impl Iterator<Item = (usize, String, String)>) -> Result<Self, PreprocessError> {
        let mut entries = BTreeMap::new();
        for (line, k, v) in rows {
            if k.is_empty() || k.chars().any(char::is_whitespace) {
                return Err(lexicon_err(line, format!("invalid token {k:?}")));
            }
            let phrase = v.split_whitespace().collect::<Vec<_>>().join(" ");
            if phrase.is_empty() {
                return Err(lexicon_err(line, format!("empty phrase for {k:?}")));
            }
            if phrase != phrase.to_lowercase() {
                return Err(lexicon_err(line, format!("phrase {phrase:?} is not lowercase")));
            }
            if entries.insert(k.clone(), (line, phrase)).is_some() {
                return Err(lexicon_err(line, format!("duplicate token {k:?}")));
            }
        }
        for (k, (line, phrase)) in &entries {
            if let Some(w) = phrase.split(' ').find(|w| w.starts_with('_') || entries.contains_key(*w)) {
                return Err(lexicon_err(
                    *line,
                    format!("phrase for {k:?} contains {w:?}, which would be rewritten again"),
                ));
            }
        }
        Ok(EntityLexicon { entries: entries.into_iter().map(|(k, (_, v))| (k, v)).collect() })
    }

    pub fn load(path: &Path) -> Result<Self, PreprocessError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| PreprocessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_tsv(&text)
    }

    pub fn get(&self, token: &str) -> Option<&str> {
        self.entries.get(token).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn to_tsv(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}\t{v}\n")).collect()
    }
}

fn lexicon_err(line: usize, message: impl Into<String>) -> PreprocessError {
    PreprocessError::Lexicon { line, message: message.into() }
}
