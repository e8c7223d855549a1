use serde_json::{json, Map};

use crate::dsl::{parse_predicate, render_predicate, Constants, PredicateExpr, Script, Statement};
use crate::engine::{EvalError, EvalMode, TriState};
use crate::record::{Record, Value};

use super::TransformError;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf(bool),
    Branch { condition: PredicateExpr, then: Box<TreeNode>, otherwise: Box<TreeNode> },
}

impl TreeNode {
    pub fn branch(condition: PredicateExpr, then: TreeNode, otherwise: TreeNode) -> TreeNode {
        TreeNode::Branch { condition, then: Box::new(then), otherwise: Box::new(otherwise) }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 0,
            TreeNode::Branch { then, otherwise, .. } => 1 + then.depth().max(otherwise.depth()),
        }
    }
}

/// A nested decision tree with the set constants its conditions refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub constants: Constants,
    pub root: TreeNode,
}

impl DecisionTree {
    pub fn new(root: TreeNode) -> Self {
        DecisionTree { constants: Constants::new(), root }
    }

    /// Parses the JSON tree format: either a bare node or an object with
    /// `constants` (name to array of values) and `tree`.
    ///
    /// A node is `{"if": "<predicate>", "then": node, "else": node}` or
    /// `{"return": true|false}`.
    pub fn from_json_str(text: &str) -> Result<DecisionTree, TransformError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| {
            TransformError::TreeFormat { path: String::new(), message: e.to_string() }
        })?;
        DecisionTree::from_json(&value)
    }

    pub fn from_json(value: &serde_json::Value) -> Result<DecisionTree, TransformError> {
        let fmt = |path: &str, message: &str| TransformError::TreeFormat {
            path: path.to_string(),
            message: message.to_string(),
        };
        let obj = value.as_object().ok_or_else(|| fmt("", "expected an object"))?;
        if !obj.contains_key("tree") {
            let root = node_from_json(value, "", &Constants::new())?;
            return Ok(DecisionTree::new(root));
        }
        if let Some(k) = obj.keys().find(|k| *k != "tree" && *k != "constants") {
            return Err(fmt("", &format!("unexpected key `{k}`")));
        }
        let mut constants = Constants::new();
        if let Some(c) = obj.get("constants") {
            let c = c.as_object().ok_or_else(|| fmt("/constants", "expected an object"))?;
            for (name, vals) in c {
                let path = format!("/constants/{name}");
                let vals = vals.as_array().ok_or_else(|| fmt(&path, "expected an array"))?;
                let vals = vals
                    .iter()
                    .map(|v| match Value::from_json(v.clone()) {
                        Ok(Value::Missing) => Err(fmt(&path, "null is not a set member")),
                        Ok(v) => Ok(v),
                        Err(e) => Err(fmt(&path, &e)),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                constants.insert(name.clone(), vals);
            }
        }
        let root = node_from_json(&obj["tree"], "/tree", &constants)?;
        Ok(DecisionTree { constants, root })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let root = node_to_json(&self.root);
        if self.constants.is_empty() {
            return root;
        }
        let constants: Map<String, serde_json::Value> = self
            .constants
            .iter()
            .map(|(k, vs)| (k.clone(), vs.iter().map(Value::to_json).collect()))
            .collect();
        json!({ "constants": constants, "tree": root })
    }

    /// Evaluates the tree. `None` when a condition is `Unknown`.
    pub fn evaluate(&self, record: &Record, mode: EvalMode) -> Result<Option<bool>, EvalError> {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf(b) => return Ok(Some(*b)),
                TreeNode::Branch { condition, then, otherwise } => {
                    let (t, _) = crate::engine::eval_predicate_with(
                        condition,
                        record,
                        &self.constants,
                        mode,
                    )?;
                    node = match t {
                        TriState::True => then,
                        TriState::False => otherwise,
                        TriState::Unknown => return Ok(None),
                    };
                }
            }
        }
    }
}

fn node_from_json(
    value: &serde_json::Value,
    path: &str,
    constants: &Constants,
) -> Result<TreeNode, TransformError> {
    let fmt = |message: String| TransformError::TreeFormat { path: path.to_string(), message };
    let obj = value.as_object().ok_or_else(|| fmt("expected a node object".into()))?;
    if let Some(ret) = obj.get("return") {
        if obj.len() != 1 {
            return Err(fmt("a `return` node has no other keys".into()));
        }
        return ret
            .as_bool()
            .map(TreeNode::Leaf)
            .ok_or_else(|| fmt("`return` must be a boolean".into()));
    }
    for key in obj.keys() {
        if !matches!(key.as_str(), "if" | "then" | "else") {
            return Err(fmt(format!("unexpected key `{key}`")));
        }
    }
    let cond = obj
        .get("if")
        .and_then(|c| c.as_str())
        .ok_or_else(|| fmt("expected `if` with predicate text or `return`".into()))?;
    let condition = parse_predicate(cond, constants)
        .map_err(|source| TransformError::Predicate { path: format!("{path}/if"), source })?;
    let child = |key: &str| {
        let sub = obj.get(key).ok_or_else(|| fmt(format!("missing `{key}` branch")))?;
        node_from_json(sub, &format!("{path}/{key}"), constants)
    };
    Ok(TreeNode::branch(condition, child("then")?, child("else")?))
}

fn node_to_json(node: &TreeNode) -> serde_json::Value {
    match node {
        TreeNode::Leaf(b) => json!({ "return": b }),
        TreeNode::Branch { condition, then, otherwise } => json!({
            "if": render_predicate(condition),
            "then": node_to_json(then),
            "else": node_to_json(otherwise),
        }),
    }
}

/// Flattens a tree into a first-match cascade.
///
/// Paths are enumerated depth first, then-branch before else-branch. Each
/// path becomes a statement whose predicate conjoins the path conditions,
/// negated on else edges. The last path is dropped and its action becomes
/// the default.
pub fn tree_to_cascade(tree: &DecisionTree) -> Script {
    fn walk(node: &TreeNode, path: &mut Vec<PredicateExpr>, out: &mut Vec<(PredicateExpr, bool)>) {
        match node {
            TreeNode::Leaf(b) => out.push((PredicateExpr::and(path.iter().cloned()), *b)),
            TreeNode::Branch { condition, then, otherwise } => {
                path.push(condition.clone());
                walk(then, path, out);
                path.pop();
                path.push(condition.negate());
                walk(otherwise, path, out);
                path.pop();
            }
        }
    }
    let mut paths = Vec::new();
    walk(&tree.root, &mut Vec::new(), &mut paths);
    let (_, final_action) = paths.pop().expect("a tree has at least one leaf");
    let statements = paths.into_iter().map(|(p, a)| Statement::new(p, a)).collect();
    Script::new(tree.constants.clone(), statements, final_action)
}
