//! Shared generators and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use lfrerank::lf::{Formalism, LfTree, Node, NodeKind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const GEO_BORDERS: &str = "answer(state(next_to_2(stateid(alabama))))";
pub const ATIS_FLIGHTS: &str = "(_lambda $0 e (_and (_flight $0) (_from $0 st_petersburg:_ci) (_to $0 charlotte:_ci)))";

const LAMBDA_FUNCTORS: [&str; 6] = ["_flight", "_from", "_to", "_fare", "_departure_time", "_airline"];
const LAMBDA_ENTITIES: [&str; 5] = ["ci0", "st_petersburg:_ci", "charlotte:_ci", "dl:_al", "1200:_ti"];
const FUNQL_FUNCTORS: [&str; 8] =
    ["answer", "state", "next_to_2", "stateid", "cityid", "largest", "loc_2", "intersection"];
const FUNQL_LEAVES: [&str; 5] = ["alabama", "texas", "austin", "tx", "'new york'"];
const OVERNIGHT_FUNCTORS: [&str; 8] = ["arg max", "arg min", "count", "filter", "numPoints.", "!=", ">", "R"];
const OVERNIGHT_LEAVES: [&str; 6] =
    ["type.player", "en.team.lakers", "numRebounds", "3", "\"kobe bryant\"", "en.location.greenberg_cafe"];

fn leaf_kind(name: &str) -> NodeKind {
    let numeric = name.chars().next().is_some_and(|c| c.is_ascii_digit()) && name.parse::<f64>().is_ok();
    if numeric || name.starts_with('"') || name.starts_with('\'') {
        NodeKind::Literal
    } else {
        NodeKind::Entity
    }
}

fn entity(pool: &[&str], rng: &mut ChaCha8Rng) -> Node {
    let name = *pool.choose(rng).unwrap();
    Node::leaf(leaf_kind(name), name)
}

/// Options for lambda generation.
#[derive(Clone, Copy)]
pub struct LambdaShape {
    pub max_depth: usize,
    /// Give every binder a fresh variable name (no shadowing, no reuse).
    pub unique_binders: bool,
    pub max_binders: usize,
}

impl Default for LambdaShape {
    fn default() -> Self {
        LambdaShape { max_depth: 4, unique_binders: false, max_binders: 4 }
    }
}

struct LambdaGen<'a> {
    rng: &'a mut ChaCha8Rng,
    shape: LambdaShape,
    binders: usize,
}

impl LambdaGen<'_> {
    fn node(&mut self, depth: usize, scope: &mut Vec<String>) -> Node {
        if depth == 0 || self.rng.gen_bool(0.2) {
            return self.leaf(scope);
        }
        let roll: f64 = self.rng.gen();
        if roll < 0.3 && self.binders < self.shape.max_binders {
            self.binders += 1;
            let var = if self.shape.unique_binders {
                format!("$v{}", self.binders)
            } else {
                format!("${}", self.rng.gen_range(0..3))
            };
            let lambda = self.rng.gen_bool(0.5);
            scope.push(var.clone());
            let body = self.node(depth - 1, scope);
            scope.pop();
            return if lambda {
                Node::binder("_lambda", var, vec![Node::leaf(NodeKind::Entity, "e"), body])
            } else {
                Node::binder(*["_exists", "_argmax"].choose(self.rng).unwrap(), var, vec![body])
            };
        }
        if roll < 0.6 {
            let name = if self.rng.gen_bool(0.6) { "_and" } else { "_or" };
            let n = self.rng.gen_range(2..=3);
            let kids = (0..n).map(|_| self.node(depth - 1, scope)).collect();
            return Node::apply(name, kids);
        }
        let name = *LAMBDA_FUNCTORS.choose(self.rng).unwrap();
        let n = self.rng.gen_range(0..=2);
        let kids = (0..n).map(|_| self.node(depth - 1, scope)).collect();
        Node::apply(name, kids)
    }

    fn leaf(&mut self, scope: &[String]) -> Node {
        if !scope.is_empty() && self.rng.gen_bool(0.6) {
            Node::leaf(NodeKind::Variable, scope.choose(self.rng).unwrap().clone())
        } else {
            entity(&LAMBDA_ENTITIES, self.rng)
        }
    }
}

pub fn gen_lambda(seed: u64, shape: LambdaShape) -> LfTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = LambdaGen { rng: &mut rng, shape, binders: 0 };
    let root = g.node(shape.max_depth, &mut Vec::new());
    LfTree::new(Formalism::Lambda, root)
}

fn gen_funql_node(rng: &mut ChaCha8Rng, depth: usize) -> Node {
    if depth == 0 || rng.gen_bool(0.25) {
        return entity(&FUNQL_LEAVES, rng);
    }
    let name = *FUNQL_FUNCTORS.choose(rng).unwrap();
    let n = rng.gen_range(1..=3);
    Node::apply(name, (0..n).map(|_| gen_funql_node(rng, depth - 1)).collect())
}

fn gen_overnight_node(rng: &mut ChaCha8Rng, depth: usize) -> Node {
    if depth == 0 || rng.gen_bool(0.25) {
        return entity(&OVERNIGHT_LEAVES, rng);
    }
    if rng.gen_bool(0.35) {
        let name = if rng.gen_bool(0.6) { "and" } else { "or" };
        let n = rng.gen_range(2..=3);
        return Node::apply(name, (0..n).map(|_| gen_overnight_node(rng, depth - 1)).collect());
    }
    let name = *OVERNIGHT_FUNCTORS.choose(rng).unwrap();
    let n = rng.gen_range(1..=2);
    Node::apply(name, (0..n).map(|_| gen_overnight_node(rng, depth - 1)).collect())
}

pub fn gen_tree(formalism: Formalism, seed: u64) -> LfTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match formalism {
        Formalism::Lambda => gen_lambda(seed, LambdaShape::default()),
        Formalism::Funql => LfTree::new(formalism, gen_funql_node(&mut rng, 4)),
        Formalism::Overnight => LfTree::new(formalism, gen_overnight_node(&mut rng, 4)),
    }
}

fn is_unordered(formalism: Formalism, name: &str) -> bool {
    match formalism {
        Formalism::Lambda => name == "_and" || name == "_or",
        Formalism::Overnight => name == "and" || name == "or",
        Formalism::Funql => false,
    }
}

/// Randomly permutes the children of every unordered functor.
pub fn shuffle_unordered(tree: &LfTree, seed: u64) -> LfTree {
    fn go(node: &Node, formalism: Formalism, rng: &mut ChaCha8Rng) -> Node {
        let mut children: Vec<Node> = node.children.iter().map(|c| go(c, formalism, rng)).collect();
        if node.kind == NodeKind::Apply && is_unordered(formalism, &node.name) {
            children.shuffle(rng);
        }
        Node { kind: node.kind, name: node.name.clone(), children }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    LfTree::new(tree.formalism, go(&tree.root, tree.formalism, &mut rng))
}

pub fn variable_names(tree: &LfTree) -> BTreeSet<String> {
    tree.root.iter().filter(|n| n.kind == NodeKind::Variable).map(|n| n.name.clone()).collect()
}

/// Applies a name-to-name map to every variable occurrence (binder slots
/// included). An injective map is a consistent alpha-renaming.
pub fn rename_variables(tree: &LfTree, map: &dyn Fn(&str) -> String) -> LfTree {
    fn go(node: &Node, map: &dyn Fn(&str) -> String) -> Node {
        let name = if node.kind == NodeKind::Variable { map(&node.name) } else { node.name.clone() };
        Node { kind: node.kind, name, children: node.children.iter().map(|c| go(c, map)).collect() }
    }
    LfTree::new(tree.formalism, go(&tree.root, map))
}

/// A random injective renaming into fresh names.
pub fn random_alpha(tree: &LfTree, seed: u64) -> LfTree {
    let names: Vec<String> = variable_names(tree).into_iter().collect();
    let mut fresh: Vec<String> = (0..names.len()).map(|i| format!("$r{i}")).collect();
    fresh.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    rename_variables(tree, &|v| fresh[names.iter().position(|n| n == v).unwrap()].clone())
}

/// All orderings of a slice.
pub fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

/// Every tree obtained by reordering children of unordered functors.
pub fn all_reorderings(node: &Node, formalism: Formalism) -> Vec<Node> {
    let child_options: Vec<Vec<Node>> = node.children.iter().map(|c| all_reorderings(c, formalism)).collect();
    let mut combos: Vec<Vec<Node>> = vec![Vec::new()];
    for opts in &child_options {
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                opts.iter().map(move |o| {
                    let mut p = prefix.clone();
                    p.push(o.clone());
                    p
                })
            })
            .collect();
    }
    let reorder = node.kind == NodeKind::Apply && is_unordered(formalism, &node.name);
    let mut out = Vec::new();
    for combo in combos {
        let orders = if reorder { permutations(&combo) } else { vec![combo] };
        for children in orders {
            out.push(Node { kind: node.kind, name: node.name.clone(), children });
        }
    }
    out
}

/// Brute-force equality for small lambda trees whose binders all use
/// distinct names: some bijection of variable names together with some
/// reordering of unordered children makes the trees identical.
pub fn brute_force_equal(a: &LfTree, b: &LfTree) -> bool {
    let va: Vec<String> = variable_names(a).into_iter().collect();
    let vb: Vec<String> = variable_names(b).into_iter().collect();
    if va.len() != vb.len() {
        return false;
    }
    permutations(&vb).iter().any(|perm| {
        let renamed = rename_variables(a, &|v| perm[va.iter().position(|n| n == v).unwrap()].clone());
        all_reorderings(&renamed.root, a.formalism).contains(&b.root)
    })
}

/// Exhaustive list of unordered beam/beam pairs `(i, j)`, `i < j`.
pub fn unordered_index_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i < j {
                out.push((i, j));
            }
        }
    }
    out
}
