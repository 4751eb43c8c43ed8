//! Deterministic logical-form → canonical-utterance templates.
//!
//! One rule per line:
//!
//! ```text
//! # comment
//! arg max($1, $2)   => $1 that has the largest $2
//! >=($1:lit)        => at least $1
//! type.player       => player
//! ```
//!
//! A pattern is a functor name plus `$1..$k` slots. Slot types are `any`
//! (the default: the child is expanded recursively), `lit` (the child must be
//! a literal and is copied verbatim) and `leaf` (any leaf, copied verbatim).
//! Rules are tried in file order and the first match wins.

use std::path::Path;

use super::PreprocessError;
use crate::lf::{LfTree, Node, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotType {
    Any,
    Literal,
    Leaf,
}

impl SlotType {
    fn admits(self, node: &Node) -> bool {
        match self {
            SlotType::Any => true,
            SlotType::Literal => node.kind == NodeKind::Literal,
            SlotType::Leaf => node.is_leaf(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Part {
    Text(String),
    Slot(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateRule {
    pub name: String,
    pub slots: Vec<SlotType>,
    parts: Vec<Part>,
}

impl TemplateRule {
    fn matches(&self, node: &Node) -> bool {
        node.name == self.name
            && node.children.len() == self.slots.len()
            && self.slots.iter().zip(&node.children).all(|(t, c)| t.admits(c))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TemplateGrammar {
    rules: Vec<TemplateRule>,
}

impl TemplateGrammar {
    pub fn parse(text: &str) -> Result<Self, PreprocessError> {
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            rules.push(parse_rule(line).map_err(|message| PreprocessError::Grammar { line: i + 1, message })?);
        }
        Ok(TemplateGrammar { rules })
    }

    pub fn load(path: &Path) -> Result<Self, PreprocessError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| PreprocessError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn rules(&self) -> &[TemplateRule] {
        &self.rules
    }

    /// Canonical utterance for `lf`, or `None` when some subtree has no rule.
    pub fn expand(&self, lf: &LfTree) -> Option<String> {
        let mut out = String::new();
        self.expand_node(&lf.root, &mut out)?;
        Some(out.split_whitespace().collect::<Vec<_>>().join(" "))
    }

    fn expand_node(&self, node: &Node, out: &mut String) -> Option<()> {
        let rule = self.rules.iter().find(|r| r.matches(node))?;
        for part in &rule.parts {
            match part {
                Part::Text(t) => out.push_str(t),
                Part::Slot(k) => {
                    let child = &node.children[k - 1];
                    match rule.slots[k - 1] {
                        SlotType::Any => self.expand_node(child, out)?,
                        SlotType::Literal | SlotType::Leaf => out.push_str(verbatim(&child.name)),
                    }
                }
            }
        }
        Some(())
    }
}

fn verbatim(name: &str) -> &str {
    let quoted = name.len() >= 2
        && (name.starts_with('\'') && name.ends_with('\'') || name.starts_with('"') && name.ends_with('"'));
    if quoted {
        &name[1..name.len() - 1]
    } else {
        name
    }
}

fn parse_rule(line: &str) -> Result<TemplateRule, String> {
    let (pattern, template) = line.split_once("=>").ok_or("expected `pattern => template`")?;
    let pattern = pattern.trim();
    let (name, slots) = match pattern.find('(') {
        None => (pattern, Vec::new()),
        Some(open) => {
            let inner = pattern[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| format!("pattern {pattern:?} must end with ')'"))?;
            let mut slots = Vec::new();
            for (i, arg) in inner.split(',').enumerate() {
                let arg = arg.trim();
                let (slot, ty) = arg.split_once(':').unwrap_or((arg, "any"));
                if slot.trim() != format!("${}", i + 1) {
                    return Err(format!("argument {} of {pattern:?} must be ${}", i + 1, i + 1));
                }
                slots.push(match ty.trim() {
                    "any" => SlotType::Any,
                    "lit" => SlotType::Literal,
                    "leaf" => SlotType::Leaf,
                    other => return Err(format!("unknown slot type {other:?}")),
                });
            }
            (&pattern[..open], slots)
        }
    };
    let name = name.split_whitespace().collect::<Vec<_>>().join(" ");
    if name.is_empty() {
        return Err("empty functor name".into());
    }

    let mut parts = Vec::new();
    let mut text = String::new();
    let mut chars = template.trim().chars().peekable();
    while let Some(c) = chars.next() {
        if c == '$' {
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            let k: usize = digits.parse().map_err(|_| "stray '$' in template".to_string())?;
            if k == 0 || k > slots.len() {
                return Err(format!("template references unbound slot ${k}"));
            }
            if !text.is_empty() {
                parts.push(Part::Text(std::mem::take(&mut text)));
            }
            parts.push(Part::Slot(k));
        } else if matches!(c, '(' | ')') {
            return Err("templates may not contain parentheses".into());
        } else {
            text.push(c);
        }
    }
    if !text.is_empty() {
        parts.push(Part::Text(text));
    }
    Ok(TemplateRule { name, slots, parts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lf::{parse, Formalism};

    const GRAMMAR: &str = "\
# players
arg max($1, $2) => $1 that has the largest $2
and($1, $2) => $1 whose $2
numPoints.($1) => number of points is $1
>($1:lit) => larger than $1
type.player => player
numRebounds => number of rebounds
";

    fn on(s: &str) -> LfTree {
        parse(s, Formalism::Overnight).unwrap()
    }

    #[test]
    fn arg_max_example() {
        let g = TemplateGrammar::parse(GRAMMAR).unwrap();
        assert_eq!(g.rules().len(), 6);
        assert_eq!(
            g.expand(&on("arg max(type.player, numRebounds)")).as_deref(),
            Some("player that has the largest number of rebounds")
        );
    }

    #[test]
    fn three_rule_nesting_matches_hand_expansion() {
        let g = TemplateGrammar::parse(GRAMMAR).unwrap();
        // and($1,$2)        -> "$1 whose $2"
        // type.player       -> "player"
        // numPoints.($1)    -> "number of points is $1"
        // >($1:lit)         -> "larger than 20"
        let hand = "player whose number of points is larger than 20";
        assert_eq!(g.expand(&on("type.player ⊓ numPoints. > 20")).as_deref(), Some(hand));
    }

    #[test]
    fn uncovered_subtree_excludes() {
        let g = TemplateGrammar::parse(GRAMMAR).unwrap();
        assert_eq!(g.expand(&on("arg min(type.player, numRebounds)")), None);
        assert_eq!(g.expand(&on("arg max(type.team, numRebounds)")), None);
        // lit slot refuses a non-literal child
        assert_eq!(g.expand(&on("type.player ⊓ numPoints. > numRebounds")), None);
    }

    #[test]
    fn first_match_wins() {
        let g = TemplateGrammar::parse("x => first\nx => second\nf($1:leaf) => f of $1\nf($1) => g").unwrap();
        assert_eq!(g.expand(&on("x")).as_deref(), Some("first"));
        assert_eq!(g.expand(&on("f(y)")).as_deref(), Some("f of y"));
        assert_eq!(g.expand(&on("f(x ⊓ y)")).as_deref(), Some("g"));
    }

    #[test]
    fn load_time_validation() {
        let err = |s: &str| match TemplateGrammar::parse(s).unwrap_err() {
            PreprocessError::Grammar { line, .. } => line,
            e => panic!("{e}"),
        };
        assert_eq!(err("ok => fine\nf($1) => $2"), 2);
        assert_eq!(err("f($2) => $2"), 1);
        assert_eq!(err("f($1:num) => $1"), 1);
        assert_eq!(err("no arrow here"), 1);
        assert_eq!(err("f => (x)"), 1);
        assert_eq!(err("f => $"), 1);
    }
}
