//! Canonical variable naming and sorting of unordered arguments.
//!
//! Bound variables are first replaced by de Bruijn indices so that the sort
//! key of a subtree does not depend on where its siblings end up. Children of
//! unordered functors are then sorted bottom-up by the bytewise order of
//! their nameless serialization, and finally every binder is renamed to
//! `$0, $1, ...` in pre-order of the sorted tree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{parse, Formalism, LfError, LfTree, Node, NodeKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizeConfig {
    pub unordered: BTreeMap<Formalism, BTreeSet<String>>,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        let mut unordered = BTreeMap::new();
        unordered.insert(Formalism::Funql, BTreeSet::new());
        unordered.insert(Formalism::Lambda, set(&["_and", "_or"]));
        unordered.insert(Formalism::Overnight, set(&["and", "or"]));
        NormalizeConfig { unordered }
    }
}

impl NormalizeConfig {
    fn is_unordered(&self, formalism: Formalism, name: &str) -> bool {
        self.unordered.get(&formalism).is_some_and(|s| s.contains(name))
    }
}

/// Canonical token sequence of a logical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NormalForm {
    pub tokens: Vec<String>,
    pub formalism: Formalism,
}

impl NormalForm {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn to_tree(&self) -> Result<LfTree, LfError> {
        parse(&self.text(), self.formalism)
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

pub fn normalize(tree: &LfTree) -> Result<NormalForm, LfError> {
    normalize_with(tree, &NormalizeConfig::default())
}

pub fn normalize_with(tree: &LfTree, config: &NormalizeConfig) -> Result<NormalForm, LfError> {
    let tree = normalize_tree(tree, config)?;
    Ok(NormalForm { tokens: tree.tokens(), formalism: tree.formalism })
}

/// The normalized tree itself, for callers that want structure rather than
/// tokens.
pub fn normalize_tree(tree: &LfTree, config: &NormalizeConfig) -> Result<LfTree, LfError> {
    let mut scope = Vec::new();
    let mut canon = nameless(&tree.root, tree.formalism, &mut scope)?;
    sort_unordered(&mut canon, tree.formalism, config);
    let mut counter = 0;
    let root = rename(&canon, &mut Vec::new(), &mut counter);
    Ok(LfTree::new(tree.formalism, root))
}

pub fn lf_equal(a: &LfTree, b: &LfTree) -> Result<bool, LfError> {
    lf_equal_with(a, b, &NormalizeConfig::default())
}

pub fn lf_equal_with(a: &LfTree, b: &LfTree, config: &NormalizeConfig) -> Result<bool, LfError> {
    if a.formalism != b.formalism {
        return Err(LfError::FormalismMismatch(a.formalism, b.formalism));
    }
    Ok(normalize_with(a, config)?.tokens == normalize_with(b, config)?.tokens)
}

#[derive(Debug, Clone)]
enum Var {
    /// The variable slot of a binder.
    Slot,
    /// Distance to the binding binder, innermost = 0.
    Bound(usize),
    /// Left as is; only reachable outside lambda forms.
    Free(String),
}

#[derive(Debug, Clone)]
struct Canon {
    kind: NodeKind,
    name: String,
    var: Option<Var>,
    children: Vec<Canon>,
    key: String,
}

fn nameless<'a>(node: &'a Node, formalism: Formalism, scope: &mut Vec<&'a str>) -> Result<Canon, LfError> {
    let mut var = None;
    let mut children = Vec::with_capacity(node.children.len());
    match node.kind {
        NodeKind::Variable => {
            var = Some(match scope.iter().rposition(|v| *v == node.name) {
                Some(pos) => Var::Bound(scope.len() - 1 - pos),
                None if formalism == Formalism::Lambda => return Err(LfError::UnboundVariable(node.name.clone())),
                None => Var::Free(node.name.clone()),
            });
        }
        NodeKind::Binder => {
            let (head, rest) = node.children.split_first().expect("binder without variable");
            children.push(Canon {
                kind: NodeKind::Variable,
                name: head.name.clone(),
                var: Some(Var::Slot),
                children: Vec::new(),
                key: String::new(),
            });
            scope.push(&head.name);
            for c in rest {
                children.push(nameless(c, formalism, scope)?);
            }
            scope.pop();
        }
        _ => {
            for c in &node.children {
                children.push(nameless(c, formalism, scope)?);
            }
        }
    }
    Ok(Canon { kind: node.kind, name: node.name.clone(), var, children, key: String::new() })
}

fn sort_unordered(node: &mut Canon, formalism: Formalism, config: &NormalizeConfig) {
    for c in node.children.iter_mut() {
        sort_unordered(c, formalism, config);
    }
    if node.kind == NodeKind::Apply && config.is_unordered(formalism, &node.name) {
        node.children.sort_by(|a, b| a.key.as_bytes().cmp(b.key.as_bytes()));
    }
    node.key = canon_key(node, formalism);
}

fn canon_key(node: &Canon, formalism: Formalism) -> String {
    let label = match &node.var {
        Some(Var::Slot) => "#".to_string(),
        Some(Var::Bound(i)) => format!("#{i}"),
        Some(Var::Free(name)) => name.clone(),
        None => node.name.clone(),
    };
    if node.children.is_empty() && node.kind != NodeKind::Apply {
        return label;
    }
    let mut s = String::new();
    match formalism {
        Formalism::Lambda => {
            s.push_str("( ");
            s.push_str(&label);
            for c in &node.children {
                s.push(' ');
                s.push_str(&c.key);
            }
            s.push_str(" )");
        }
        Formalism::Funql | Formalism::Overnight => {
            s.push_str(&label);
            if !node.children.is_empty() {
                s.push_str(" (");
                for (i, c) in node.children.iter().enumerate() {
                    s.push_str(if i == 0 { " " } else { " , " });
                    s.push_str(&c.key);
                }
                s.push_str(" )");
            }
        }
    }
    s
}

fn rename(node: &Canon, scope: &mut Vec<String>, counter: &mut usize) -> Node {
    match &node.var {
        Some(Var::Bound(i)) => {
            return Node::leaf(NodeKind::Variable, scope[scope.len() - 1 - i].clone());
        }
        Some(Var::Free(name)) => return Node::leaf(NodeKind::Variable, name.clone()),
        Some(Var::Slot) => unreachable!("binder slots are renamed by their binder"),
        None => {}
    }
    if node.kind == NodeKind::Binder {
        let fresh = format!("${counter}");
        *counter += 1;
        let mut children = vec![Node::leaf(NodeKind::Variable, fresh.clone())];
        scope.push(fresh);
        children.extend(node.children[1..].iter().map(|c| rename(c, scope, counter)));
        scope.pop();
        return Node { kind: NodeKind::Binder, name: node.name.clone(), children };
    }
    Node {
        kind: node.kind,
        name: node.name.clone(),
        children: node.children.iter().map(|c| rename(c, scope, counter)).collect(),
    }
}
