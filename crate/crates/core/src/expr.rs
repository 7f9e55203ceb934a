//! Referring-expression syntax trees, their compilation into program graphs,
//! the inverse mapping for gold-shaped graphs, surface rendering, and a
//! symbolic evaluator used as the ground-truth grounder.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{Node, ProgramGraph, Source};
use crate::vocab::Vocabulary;
use crate::world::{Cell, SceneState};

/// `DET? ADJ* NOUN (PREP NP)?` with words stored as feature indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NounPhrase {
    pub adjectives: Vec<usize>,
    pub noun: usize,
    pub relation: Option<(usize, Box<NounPhrase>)>,
}

impl NounPhrase {
    pub fn bare(noun: usize) -> Self {
        NounPhrase {
            adjectives: Vec::new(),
            noun,
            relation: None,
        }
    }

    pub fn with_adjectives(mut self, adjectives: impl IntoIterator<Item = usize>) -> Self {
        self.adjectives = adjectives.into_iter().collect();
        self
    }

    pub fn related(mut self, prep: usize, referent: NounPhrase) -> Self {
        self.relation = Some((prep, Box::new(referent)));
        self
    }

    fn compile(&self, nodes: &mut Vec<Node>) -> usize {
        let mut words = self
            .adjectives
            .iter()
            .copied()
            .chain(core::iter::once(self.noun));
        nodes.push(Node::Detect(words.next().expect("noun present")));
        let mut acc = nodes.len() - 1;
        for w in words {
            nodes.push(Node::Detect(w));
            nodes.push(Node::And(acc, nodes.len() - 1));
            acc = nodes.len() - 1;
        }
        if let Some((prep, referent)) = &self.relation {
            let r = referent.compile(nodes);
            nodes.push(Node::Shift(*prep, r));
            nodes.push(Node::And(acc, nodes.len() - 1));
            acc = nodes.len() - 1;
        }
        acc
    }

    fn render(&self, vocab: &Vocabulary, out: &mut Vec<String>) {
        out.push("the".into());
        for &a in &self.adjectives {
            out.push(vocab.word(a).into());
        }
        out.push(vocab.word(self.noun).into());
        if let Some((prep, referent)) = &self.relation {
            out.push(vocab.preposition(*prep).surface.clone());
            referent.render(vocab, out);
        }
    }

    /// Every noun phrase of the chain, outermost first.
    pub fn chain(&self) -> Vec<&NounPhrase> {
        let mut out = Vec::new();
        let mut at = Some(self);
        while let Some(np) = at {
            out.push(np);
            at = np.relation.as_ref().map(|(_, r)| r.as_ref());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    Pick(NounPhrase),
    Put {
        /// `None` stands for the pronoun "it".
        source: Option<NounPhrase>,
        prep: usize,
        referent: NounPhrase,
    },
}

impl Instruction {
    pub fn compile(&self) -> ProgramGraph {
        let mut nodes = Vec::new();
        match self {
            Instruction::Pick(np) => {
                let top = np.compile(&mut nodes);
                nodes.push(Node::Locate(top));
            }
            Instruction::Put {
                source,
                prep,
                referent,
            } => {
                let source = match source {
                    None => Source::Held,
                    Some(np) => {
                        let top = np.compile(&mut nodes);
                        nodes.push(Node::Locate(top));
                        Source::Located(nodes.len() - 1)
                    }
                };
                let r = referent.compile(&mut nodes);
                nodes.push(Node::Position {
                    prep: *prep,
                    source,
                    referent: r,
                });
            }
        }
        ProgramGraph::new(nodes).expect("compiled graphs are well formed")
    }

    /// Recovers the expression tree of a graph in the shape produced by
    /// [`Instruction::compile`].
    pub fn from_graph(graph: &ProgramGraph, vocab: &Vocabulary) -> Result<Self> {
        let nodes = graph.nodes();
        match *graph.root() {
            Node::Locate(a) => Ok(Instruction::Pick(decompile(nodes, a, vocab)?)),
            Node::Position {
                prep,
                source,
                referent,
            } => {
                let source = match source {
                    Source::Held => None,
                    Source::Located(s) => match nodes[s] {
                        Node::Locate(a) => Some(decompile(nodes, a, vocab)?),
                        _ => return Err(not_gold()),
                    },
                };
                Ok(Instruction::Put {
                    source,
                    prep,
                    referent: decompile(nodes, referent, vocab)?,
                })
            }
            _ => Err(not_gold()),
        }
    }

    /// Surface text with the given verb phrase.
    pub fn render(&self, verb: &str, vocab: &Vocabulary) -> String {
        let mut words: Vec<String> = Vec::new();
        words.push(verb.into());
        match self {
            Instruction::Pick(np) => np.render(vocab, &mut words),
            Instruction::Put {
                source,
                prep,
                referent,
            } => {
                match source {
                    None => words.push("it".into()),
                    Some(np) => np.render(vocab, &mut words),
                }
                words.push(vocab.preposition(*prep).surface.clone());
                referent.render(vocab, &mut words);
            }
        }
        words.join(" ")
    }
}

fn not_gold() -> Error {
    Error::InvalidGraph("graph is not in referring-expression form".into())
}

fn decompile(nodes: &[Node], at: usize, vocab: &Vocabulary) -> Result<NounPhrase> {
    if let Node::And(core, rel) = nodes[at] {
        if let Node::Shift(prep, sub) = nodes[rel] {
            let mut np = decompile_core(nodes, core, vocab)?;
            np.relation = Some((prep, Box::new(decompile(nodes, sub, vocab)?)));
            return Ok(np);
        }
    }
    decompile_core(nodes, at, vocab)
}

fn decompile_core(nodes: &[Node], at: usize, vocab: &Vocabulary) -> Result<NounPhrase> {
    match nodes[at] {
        Node::Detect(w) if vocab.is_noun(w) => Ok(NounPhrase::bare(w)),
        Node::And(left, right) => match nodes[right] {
            Node::Detect(w) if vocab.is_noun(w) => {
                let mut adjectives = Vec::new();
                adjective_chain(nodes, left, vocab, &mut adjectives)?;
                Ok(NounPhrase::bare(w).with_adjectives(adjectives))
            }
            _ => Err(not_gold()),
        },
        _ => Err(not_gold()),
    }
}

fn adjective_chain(
    nodes: &[Node],
    at: usize,
    vocab: &Vocabulary,
    out: &mut Vec<usize>,
) -> Result<()> {
    match nodes[at] {
        Node::Detect(w) if !vocab.is_noun(w) => {
            out.push(w);
            Ok(())
        }
        Node::And(left, right) => match nodes[right] {
            Node::Detect(w) if !vocab.is_noun(w) => {
                adjective_chain(nodes, left, vocab, out)?;
                out.push(w);
                Ok(())
            }
            _ => Err(not_gold()),
        },
        _ => Err(not_gold()),
    }
}

/// Symbolic execution of a graph on a labelled scene. Detect selects the cells
/// whose object carries the word, And intersects, Shift collects every cell
/// related to some input cell through the preposition. For a Locate root the
/// result is the located cell set; for a Position root it is the referent set.
pub fn oracle_cells(
    graph: &ProgramGraph,
    scene: &SceneState,
    vocab: &Vocabulary,
) -> Result<BTreeSet<Cell>> {
    let spec = &scene.grid_spec;
    let mut sets: Vec<BTreeSet<Cell>> = Vec::with_capacity(graph.len());
    for node in graph.nodes() {
        let set = match *node {
            Node::Detect(w) => {
                let word = vocab.word(w);
                let mut cells = BTreeSet::new();
                for o in scene.placed() {
                    let hit = if vocab.is_noun(w) {
                        o.class_noun == word
                    } else {
                        o.attributes.contains(word)
                    };
                    if hit {
                        cells.insert(o.cell(spec)?);
                    }
                }
                cells
            }
            Node::And(a, b) => sets[a].intersection(&sets[b]).copied().collect(),
            Node::Shift(p, a) => {
                let prep = vocab.preposition(p);
                spec.cells()
                    .filter(|c| {
                        sets[a]
                            .iter()
                            .any(|r| prep.relates(r.to_array(), c.to_array()))
                    })
                    .collect()
            }
            Node::Locate(a) => sets[a].clone(),
            Node::Position { referent, .. } => sets[referent].clone(),
        };
        sets.push(set);
    }
    sets.pop()
        .ok_or_else(|| Error::InvalidGraph("empty graph".into()))
}
