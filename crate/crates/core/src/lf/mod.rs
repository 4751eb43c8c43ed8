//! Logical forms: parse trees for FunQL, lambda-calculus and Overnight-style
//! expressions, plus normalization and exact-match comparison.

mod normalize;
mod parse;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use normalize::{lf_equal, lf_equal_with, normalize, normalize_tree, normalize_with, NormalForm, NormalizeConfig};
pub use parse::{parse, parse_with, ParseConfig, DEFAULT_BINDERS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formalism {
    Funql,
    Lambda,
    Overnight,
}

impl Formalism {
    pub fn as_str(self) -> &'static str {
        match self {
            Formalism::Funql => "funql",
            Formalism::Lambda => "lambda",
            Formalism::Overnight => "overnight",
        }
    }
}

impl fmt::Display for Formalism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Formalism {
    type Err = LfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "funql" => Ok(Formalism::Funql),
            "lambda" => Ok(Formalism::Lambda),
            "overnight" => Ok(Formalism::Overnight),
            other => Err(LfError::UnknownFormalism(other.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LfError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("formalism mismatch: {0} vs {1}")]
    FormalismMismatch(Formalism, Formalism),
    #[error("unknown formalism {0:?}")]
    UnknownFormalism(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    /// Functor application; `name` is the functor.
    Apply,
    /// Variable occurrence (lambda forms only).
    Variable,
    Entity,
    /// Numbers and quoted strings.
    Literal,
    /// Variable binder such as `_lambda`, `_exists` or `_argmax`. The first
    /// child is the bound variable, the rest is its scope.
    Binder,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node {
    pub kind: NodeKind,
    pub name: String,
    pub children: Vec<Node>,
}

impl Node {
    pub fn leaf(kind: NodeKind, name: impl Into<String>) -> Self {
        Node { kind, name: name.into(), children: Vec::new() }
    }

    pub fn apply(name: impl Into<String>, children: Vec<Node>) -> Self {
        Node { kind: NodeKind::Apply, name: name.into(), children }
    }

    pub fn binder(name: impl Into<String>, var: impl Into<String>, scope: Vec<Node>) -> Self {
        let mut children = vec![Node::leaf(NodeKind::Variable, var)];
        children.extend(scope);
        Node { kind: NodeKind::Binder, name: name.into(), children }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Variable | NodeKind::Entity | NodeKind::Literal)
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(Node::depth).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Node::size).sum::<usize>()
    }

    /// Pre-order iterator over the subtree rooted here.
    pub fn iter(&self) -> impl Iterator<Item = &Node> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.children.iter().rev());
            Some(node)
        })
    }
}

/// A parsed logical form. The formalism tag lives on the tree, so it is
/// uniform across every node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LfTree {
    pub formalism: Formalism,
    pub root: Node,
}

impl LfTree {
    pub fn new(formalism: Formalism, root: Node) -> Self {
        LfTree { formalism, root }
    }

    /// Surface tokens in serialization order.
    pub fn tokens(&self) -> Vec<String> {
        let mut out = Vec::new();
        emit_tokens(&self.root, self.formalism, &mut out);
        out
    }

    pub fn serialize(&self) -> String {
        self.tokens().join(" ")
    }
}

impl fmt::Display for LfTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

/// Single-space-separated canonical surface string. `parse` of the result
/// yields a structurally identical tree.
pub fn serialize(tree: &LfTree) -> String {
    tree.serialize()
}

fn emit_tokens(node: &Node, formalism: Formalism, out: &mut Vec<String>) {
    match formalism {
        Formalism::Lambda => {
            if node.is_leaf() {
                out.push(node.name.clone());
                return;
            }
            out.push("(".into());
            out.push(node.name.clone());
            for c in &node.children {
                emit_tokens(c, formalism, out);
            }
            out.push(")".into());
        }
        Formalism::Funql | Formalism::Overnight => {
            out.push(node.name.clone());
            if node.children.is_empty() {
                return;
            }
            out.push("(".into());
            for (i, c) in node.children.iter().enumerate() {
                if i > 0 {
                    out.push(",".into());
                }
                emit_tokens(c, formalism, out);
            }
            out.push(")".into());
        }
    }
}

/// Input sentence paired with a logical form in a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub id: String,
    pub text: String,
    pub domain: String,
}

impl Utterance {
    pub fn new(id: impl Into<String>, text: impl Into<String>, domain: impl Into<String>) -> Result<Self, String> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err("utterance text is empty".into());
        }
        Ok(Utterance { id: id.into(), text, domain: domain.into() })
    }
}
