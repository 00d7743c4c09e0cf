// SPDX-License-Identifier: Apache-2.0

//! Type-only syntax trees.
//!
//! A [`TypedTree`] keeps nothing but the node-type label of each AST node and
//! the ordered parent/child structure. Lexical values (identifier names,
//! literal contents) are dropped by the [`ParserAdapter`] that produced the
//! tree, so downstream code never sees them.
//!
//! Trees can also be written and read as S-expressions:
//!
//! ```text
//! tree := "(" label tree* ")"
//! ```
//!
//! which is the canonical form used for storage and as a structural oracle.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ParseError;

/// Opaque node-type label such as `function_definition`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeType(String);

impl NodeType {
    pub fn new(label: impl Into<String>) -> Result<Self, ParseError> {
        let label = label.into();
        if label.is_empty() {
            return Err(ParseError::InvalidNodeType {
                label,
                reason: "label is empty",
            });
        }
        if label.chars().any(|c| c.is_whitespace() || c == '(' || c == ')') {
            return Err(ParseError::InvalidNodeType {
                label,
                reason: "label contains whitespace or parentheses",
            });
        }
        Ok(NodeType(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for NodeType {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeType,
    pub children: Vec<usize>,
}

/// Rooted ordered tree of node types.
///
/// Nodes are always stored in pre-order: the root is node 0 and the subtree
/// rooted at node `i` occupies the contiguous index range
/// `i..i + subtree_size(i)`. Two trees compare equal exactly when they have
/// the same shape and labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedTree {
    nodes: Vec<Node>,
    sizes: Vec<usize>,
}

impl TypedTree {
    /// Builds a tree from an arbitrary node table, validating that `root`
    /// reaches every node exactly once. The result is re-indexed in pre-order.
    pub fn from_nodes(nodes: Vec<Node>, root: usize) -> Result<Self, ParseError> {
        let n = nodes.len();
        if root >= n {
            return Err(ParseError::syntax(0, "root index out of range"));
        }
        let mut seen = vec![false; n];
        let mut remap = vec![usize::MAX; n];
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            if seen[i] {
                return Err(ParseError::syntax(0, format!("node {i} has more than one parent")));
            }
            seen[i] = true;
            remap[i] = order.len();
            order.push(i);
            for &c in nodes[i].children.iter().rev() {
                if c >= n {
                    return Err(ParseError::syntax(0, format!("child index {c} out of range")));
                }
                stack.push(c);
            }
        }
        if order.len() != n {
            return Err(ParseError::syntax(0, "tree has unreachable nodes"));
        }
        let mut slots: Vec<Option<Node>> = nodes.into_iter().map(Some).collect();
        let reindexed = order
            .iter()
            .map(|&old| {
                let node = slots[old].take().expect("each node visited once");
                Node {
                    kind: node.kind,
                    children: node.children.iter().map(|&c| remap[c]).collect(),
                }
            })
            .collect();
        Ok(Self::from_preorder(reindexed))
    }

    /// `nodes` must already be in pre-order with consistent child indices.
    fn from_preorder(nodes: Vec<Node>) -> Self {
        let mut sizes = vec![1usize; nodes.len()];
        for i in (0..nodes.len()).rev() {
            sizes[i] += nodes[i].children.iter().map(|&c| sizes[c]).sum::<usize>();
        }
        TypedTree { nodes, sizes }
    }

    pub fn leaf(kind: NodeType) -> Self {
        Self::from_preorder(vec![Node {
            kind,
            children: Vec::new(),
        }])
    }

    /// Creates a node with the given ordered children.
    pub fn with_children(kind: NodeType, children: Vec<TypedTree>) -> Self {
        let total = 1 + children.iter().map(|c| c.node_count()).sum::<usize>();
        let mut nodes = Vec::with_capacity(total);
        nodes.push(Node {
            kind,
            children: Vec::with_capacity(children.len()),
        });
        for child in children {
            let offset = nodes.len();
            nodes[0].children.push(offset);
            nodes.extend(child.nodes.into_iter().map(|mut n| {
                n.children.iter_mut().for_each(|c| *c += offset);
                n
            }));
        }
        Self::from_preorder(nodes)
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn kind(&self, i: usize) -> &NodeType {
        &self.nodes[i].kind
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.nodes[i].children
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Number of nodes in the subtree rooted at `i`.
    pub fn subtree_size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    /// Indices of the proper descendants of `i`.
    pub fn descendants(&self, i: usize) -> std::ops::Range<usize> {
        i + 1..i + self.sizes[i]
    }

    /// Copies out the subtree rooted at `i`.
    pub fn subtree(&self, i: usize) -> TypedTree {
        let range = i..i + self.sizes[i];
        let nodes = self.nodes[range]
            .iter()
            .map(|n| Node {
                kind: n.kind.clone(),
                children: n.children.iter().map(|&c| c - i).collect(),
            })
            .collect();
        Self::from_preorder(nodes)
    }

    /// Node indices in post-order (children left to right, then parent).
    pub fn postorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(0usize, 0usize)];
        while let Some((node, next_child)) = stack.pop() {
            match self.nodes[node].children.get(next_child) {
                Some(&c) => {
                    stack.push((node, next_child + 1));
                    stack.push((c, 0));
                }
                None => out.push(node),
            }
        }
        out
    }

    pub fn depth(&self) -> usize {
        let mut depth = vec![1usize; self.nodes.len()];
        for i in 0..self.nodes.len() {
            for &c in &self.nodes[i].children {
                depth[c] = depth[i] + 1;
            }
        }
        depth.into_iter().max().unwrap_or(0)
    }

    /// Histogram of node types, useful for quick corpus statistics.
    pub fn type_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for n in &self.nodes {
            *counts.entry(n.kind.as_str()).or_insert(0) += 1;
        }
        counts
    }
}

pub fn node_count(tree: &TypedTree) -> usize {
    tree.node_count()
}

/// Canonical S-expression: single spaces between siblings, no trailing space.
pub fn to_sexpr(tree: &TypedTree) -> String {
    let mut out = String::with_capacity(tree.node_count() * 8);
    // (node, next child index)
    let mut stack = vec![(0usize, 0usize)];
    out.push('(');
    out.push_str(tree.kind(0).as_str());
    while let Some((node, next)) = stack.pop() {
        match tree.children(node).get(next) {
            Some(&c) => {
                stack.push((node, next + 1));
                out.push_str(" (");
                out.push_str(tree.kind(c).as_str());
                stack.push((c, 0));
            }
            None => out.push(')'),
        }
    }
    out
}

/// Parses a single S-expression tree. Leading and trailing whitespace is allowed.
pub fn parse_sexpr(text: &str) -> Result<TypedTree, ParseError> {
    let mut parser = SexprParser {
        bytes: text.as_bytes(),
        text,
        pos: 0,
    };
    parser.skip_ws();
    let tree = parser.tree()?;
    parser.skip_ws();
    if parser.pos != text.len() {
        return Err(ParseError::syntax(parser.pos, "trailing input after tree"));
    }
    Ok(tree)
}

/// Parses a tree ingestion file: one S-expression per record, records
/// separated by blank lines. Error offsets are relative to the whole file.
pub fn parse_sexpr_records(text: &str) -> Result<Vec<TypedTree>, ParseError> {
    let mut trees = Vec::new();
    let mut block_start: Option<usize> = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if line.trim().is_empty() {
            if let Some(start) = block_start.take() {
                trees.push(parse_at(text, start, offset)?);
            }
        } else if block_start.is_none() {
            block_start = Some(offset);
        }
        offset += line.len();
    }
    if let Some(start) = block_start {
        trees.push(parse_at(text, start, text.len())?);
    }
    Ok(trees)
}

fn parse_at(text: &str, start: usize, end: usize) -> Result<TypedTree, ParseError> {
    parse_sexpr(&text[start..end]).map_err(|e| match e {
        ParseError::Syntax { offset, message } => ParseError::Syntax {
            offset: offset + start,
            message,
        },
        other => other,
    })
}

struct SexprParser<'a> {
    bytes: &'a [u8],
    text: &'a str,
    pos: usize,
}

impl SexprParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        // non-ASCII whitespace
        while let Some(c) = self.text[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn expect_open(&mut self) -> Result<(), ParseError> {
        match self.bytes.get(self.pos) {
            Some(b'(') => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => Err(ParseError::syntax(self.pos, "expected '('")),
            None => Err(ParseError::syntax(self.pos, "unexpected end of input, expected '('")),
        }
    }

    fn label(&mut self) -> Result<NodeType, ParseError> {
        let start = self.pos;
        let rest = &self.text[start..];
        let len = rest
            .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(ParseError::syntax(start, "empty node label"));
        }
        self.pos += len;
        NodeType::new(&rest[..len])
    }

    fn tree(&mut self) -> Result<TypedTree, ParseError> {
        let mut nodes: Vec<Node> = Vec::new();
        let mut open: Vec<usize> = Vec::new();
        self.expect_open()?;
        nodes.push(Node {
            kind: self.label()?,
            children: Vec::new(),
        });
        open.push(0);
        while let Some(&top) = open.last() {
            self.skip_ws();
            match self.bytes.get(self.pos) {
                Some(b')') => {
                    self.pos += 1;
                    open.pop();
                }
                Some(b'(') => {
                    self.pos += 1;
                    let kind = self.label()?;
                    let id = nodes.len();
                    nodes.push(Node {
                        kind,
                        children: Vec::new(),
                    });
                    nodes[top].children.push(id);
                    open.push(id);
                }
                Some(_) => return Err(ParseError::syntax(self.pos, "expected '(' or ')'")),
                None => return Err(ParseError::syntax(self.pos, "unexpected end of input, expected ')'")),
            }
        }
        Ok(TypedTree::from_preorder(nodes))
    }
}

impl fmt::Display for TypedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&to_sexpr(self))
    }
}

impl std::str::FromStr for TypedTree {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_sexpr(s)
    }
}

impl Serialize for TypedTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&to_sexpr(self))
    }
}

impl<'de> Deserialize<'de> for TypedTree {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_sexpr(&s).map_err(serde::de::Error::custom)
    }
}

/// Turns source text in some language into a type-only tree.
///
/// Implementations must drop value attributes (identifier names, literal
/// text) and keep child order exactly as the grammar produces it.
pub trait ParserAdapter: Send + Sync {
    fn parse(&self, source: &str, language: &str) -> Result<TypedTree, ParseError>;
}

/// Treats the source text itself as an S-expression, for any language id.
#[derive(Debug, Default, Clone, Copy)]
pub struct SexprAdapter;

impl ParserAdapter for SexprAdapter {
    fn parse(&self, source: &str, _language: &str) -> Result<TypedTree, ParseError> {
        parse_sexpr(source)
    }
}

/// Dispatches on the language id.
#[derive(Default)]
pub struct AdapterRegistry {
    adapters: BTreeMap<String, Box<dyn ParserAdapter>>,
}

impl AdapterRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry with the bundled adapters: `expr` and `sexpr`.
    pub fn with_defaults() -> Self {
        let mut reg = Self::new();
        reg.register(crate::exprlang::LANGUAGE_ID, crate::exprlang::ExprAdapter);
        reg.register("sexpr", SexprAdapter);
        reg
    }

    pub fn register(&mut self, language: &str, adapter: impl ParserAdapter + 'static) {
        self.adapters.insert(language.to_owned(), Box::new(adapter));
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.adapters.keys().map(String::as_str)
    }
}

impl ParserAdapter for AdapterRegistry {
    fn parse(&self, source: &str, language: &str) -> Result<TypedTree, ParseError> {
        self.adapters
            .get(language)
            .ok_or_else(|| ParseError::UnknownLanguage(language.to_owned()))?
            .parse(source, language)
    }
}
