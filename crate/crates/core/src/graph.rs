//! Program graphs: trees of module invocations compiled from an instruction.
//!
//! Nodes are stored in execution order and every input refers to an earlier
//! node, so a forward pass is a single left-to-right sweep. The root is the
//! last node. The canonical order is the post-order walk from the root that
//! visits inputs left to right, which coincides with the order of the words
//! the nodes come from.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::vocab::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    /// The object currently in the gripper ("it").
    Held,
    /// A `Locate` node grounding an explicit direct object.
    Located(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    /// Word filter; the payload is the word's feature index.
    Detect(usize),
    And(usize, usize),
    /// `(preposition index, input)`.
    Shift(usize, usize),
    Locate(usize),
    Position {
        prep: usize,
        source: Source,
        referent: usize,
    },
}

impl Node {
    pub fn inputs(&self) -> Vec<usize> {
        match *self {
            Node::Detect(_) => vec![],
            Node::And(a, b) => vec![a, b],
            Node::Shift(_, a) | Node::Locate(a) => vec![a],
            Node::Position {
                source, referent, ..
            } => match source {
                Source::Held => vec![referent],
                Source::Located(s) => vec![s, referent],
            },
        }
    }

    /// Whether the node produces an attention map.
    pub fn is_attention(&self) -> bool {
        matches!(self, Node::Detect(_) | Node::And(..) | Node::Shift(..))
    }

    fn remap(&self, map: &[usize]) -> Node {
        match *self {
            Node::Detect(w) => Node::Detect(w),
            Node::And(a, b) => Node::And(map[a], map[b]),
            Node::Shift(p, a) => Node::Shift(p, map[a]),
            Node::Locate(a) => Node::Locate(map[a]),
            Node::Position {
                prep,
                source,
                referent,
            } => Node::Position {
                prep,
                source: match source {
                    Source::Held => Source::Held,
                    Source::Located(s) => Source::Located(map[s]),
                },
                referent: map[referent],
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProgramGraph {
    nodes: Vec<Node>,
}

impl ProgramGraph {
    /// Validates the node list and brings it into canonical order.
    pub fn new(nodes: Vec<Node>) -> Result<Self> {
        validate(&nodes)?;
        Ok(ProgramGraph { nodes }.canonical())
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root_index(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn root(&self) -> &Node {
        &self.nodes[self.root_index()]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Words (feature indices) of every Detect node, in node order.
    pub fn detect_words(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Detect(w) => Some(*w),
            _ => None,
        })
    }

    pub fn count(&self, pred: impl Fn(&Node) -> bool) -> usize {
        self.nodes.iter().filter(|n| pred(n)).count()
    }

    /// The Locate-rooted graph whose grounding decides the action: the graph
    /// itself for pick-like programs, the referent subtree under a fresh
    /// Locate for placement programs.
    pub fn grounding_graph(&self) -> ProgramGraph {
        match *self.root() {
            Node::Position { referent, .. } => {
                let mut nodes = self.subtree(referent);
                let top = nodes.len() - 1;
                nodes.push(Node::Locate(top));
                ProgramGraph { nodes }.canonical()
            }
            _ => self.clone(),
        }
    }

    /// The Locate-rooted graph of an explicit placement source, if any.
    pub fn source_graph(&self) -> Option<ProgramGraph> {
        match *self.root() {
            Node::Position {
                source: Source::Located(s),
                ..
            } => Some(
                ProgramGraph {
                    nodes: self.subtree(s),
                }
                .canonical(),
            ),
            _ => None,
        }
    }

    fn subtree(&self, top: usize) -> Vec<Node> {
        let mut order = Vec::new();
        self.post_order(top, &mut order);
        let mut map = vec![usize::MAX; self.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            map[old] = new;
        }
        order.iter().map(|&i| self.nodes[i].remap(&map)).collect()
    }

    fn post_order(&self, at: usize, out: &mut Vec<usize>) {
        for input in self.nodes[at].inputs() {
            self.post_order(input, out);
        }
        out.push(at);
    }

    fn canonical(&self) -> ProgramGraph {
        ProgramGraph {
            nodes: self.subtree(self.root_index()),
        }
    }

    /// Canonical text form, e.g.
    /// `detect(apple); detect(black); detect(mug); and(1,2); shift(right-of,3); and(0,4); locate(5)`.
    /// Placement roots print as `position(<prep>,<source>,<referent>)` where
    /// the source is `held` or a node index.
    pub fn to_text(&self, vocab: &Vocabulary) -> String {
        let parts: Vec<String> = self
            .nodes
            .iter()
            .map(|n| match *n {
                Node::Detect(w) => format!("detect({})", vocab.word(w)),
                Node::And(a, b) => format!("and({a},{b})"),
                Node::Shift(p, a) => format!("shift({},{a})", vocab.preposition(p).name),
                Node::Locate(a) => format!("locate({a})"),
                Node::Position {
                    prep,
                    source,
                    referent,
                } => {
                    let src = match source {
                        Source::Held => String::from("held"),
                        Source::Located(s) => format!("{s}"),
                    };
                    format!(
                        "position({},{src},{referent})",
                        vocab.preposition(prep).name
                    )
                }
            })
            .collect();
        parts.join("; ")
    }

    pub fn from_text(text: &str, vocab: &Vocabulary) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidGraph(format!("{msg} in `{text}`"));
        let mut nodes = Vec::new();
        for part in text.split(';') {
            let part = part.trim();
            let open = part.find('(').ok_or_else(|| bad("missing `(`"))?;
            if !part.ends_with(')') {
                return Err(bad("missing `)`"));
            }
            let name = &part[..open];
            let args: Vec<&str> = part[open + 1..part.len() - 1]
                .split(',')
                .map(str::trim)
                .collect();
            let index = |s: &str| s.parse::<usize>().map_err(|_| bad("bad node index"));
            let prep = |s: &str| {
                vocab
                    .preposition_index(s)
                    .ok_or_else(|| Error::UnknownSymbol(String::from(s)))
            };
            let node = match (name, args.as_slice()) {
                ("detect", [w]) => Node::Detect(
                    vocab
                        .feature_index(w)
                        .ok_or_else(|| Error::UnknownSymbol(String::from(*w)))?,
                ),
                ("and", [a, b]) => Node::And(index(a)?, index(b)?),
                ("shift", [p, a]) => Node::Shift(prep(p)?, index(a)?),
                ("locate", [a]) => Node::Locate(index(a)?),
                ("position", [p, s, r]) => Node::Position {
                    prep: prep(p)?,
                    source: if *s == "held" {
                        Source::Held
                    } else {
                        Source::Located(index(s)?)
                    },
                    referent: index(r)?,
                },
                _ => return Err(bad("unknown node form")),
            };
            nodes.push(node);
        }
        ProgramGraph::new(nodes)
    }
}

fn validate(nodes: &[Node]) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidGraph(msg));
    if nodes.is_empty() {
        return bad("empty graph".into());
    }
    let root = nodes.len() - 1;
    let mut consumers = vec![0usize; nodes.len()];
    for (i, node) in nodes.iter().enumerate() {
        for input in node.inputs() {
            if input >= i {
                return bad(format!("node {i} reads node {input} which is not earlier"));
            }
            consumers[input] += 1;
        }
        match *node {
            Node::And(a, b) => {
                if !nodes[a].is_attention() || !nodes[b].is_attention() {
                    return bad(format!("and node {i} needs attention inputs"));
                }
            }
            Node::Shift(_, a) | Node::Locate(a) => {
                if !nodes[a].is_attention() {
                    return bad(format!("node {i} needs an attention input"));
                }
            }
            Node::Position {
                source, referent, ..
            } => {
                if i != root {
                    return bad(format!("position node {i} must be the root"));
                }
                if !nodes[referent].is_attention() {
                    return bad(format!("position node {i} needs an attention referent"));
                }
                if let Source::Located(s) = source {
                    if !matches!(nodes[s], Node::Locate(_)) {
                        return bad(format!("position source {s} must be a locate node"));
                    }
                }
            }
            Node::Detect(_) => {}
        }
    }
    if !matches!(nodes[root], Node::Locate(_) | Node::Position { .. }) {
        return bad("root must be locate or position".into());
    }
    for (i, &c) in consumers.iter().enumerate() {
        if i == root {
            continue;
        }
        if c != 1 {
            return bad(format!("node {i} has {c} consumers; expected 1"));
        }
        if matches!(nodes[i], Node::Locate(_))
            && !matches!(nodes[root], Node::Position { source: Source::Located(s), .. } if s == i)
        {
            return bad(format!(
                "locate node {i} is neither root nor placement source"
            ));
        }
    }
    Ok(())
}
