//! Interactive session: instructions in, actions out.
//!
//! Each instruction is parsed, the anchor beliefs are revised against the
//! grounding, and the revised beliefs drive a pick or a place action that is
//! applied to the simulated world. Everything that changes the session is
//! appended to a log from which the session can be replayed.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::anchor::{anchors_to_scene, Anchor, AnchorSpace, Percept};
use crate::belief::{apply_posterior, resolve, scoring_graph, Posterior, ResolveOptions};
use crate::error::{Error, Result};
use crate::graph::{Node, ProgramGraph, Source};
use crate::nn::{execute, ParamStore};
use crate::parser::parse;
use crate::vocab::Vocabulary;
use crate::world::{encode_scene, free_cell_along, Cell, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RevisionMode {
    /// Revise beliefs on every instruction.
    #[default]
    Always,
    /// Revise only when a noun of the instruction is nobody's top label.
    OnMissingLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SessionConfig {
    pub revision: RevisionMode,
    pub resolve: ResolveOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ActionCommand {
    PickUp {
        anchor: String,
    },
    Place {
        anchor: String,
        position: [f64; 3],
        cell: Cell,
    },
    NoOp {
        reason: String,
    },
}

/// Posterior as kept in the log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub anchors: BTreeMap<String, BTreeMap<String, f64>>,
    pub map_grounding: Option<String>,
    pub configurations: usize,
    pub degenerate: bool,
}

impl From<&Posterior> for PosteriorSummary {
    fn from(p: &Posterior) -> Self {
        PosteriorSummary {
            anchors: p.anchors.clone(),
            map_grounding: p.map_grounding.clone(),
            configurations: p.configurations.len(),
            degenerate: p.degenerate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum LogEvent {
    Instruction {
        text: String,
        graph: Option<String>,
        posterior: Option<PosteriorSummary>,
        action: ActionCommand,
    },
    Action {
        action: ActionCommand,
    },
    Perception {
        percepts: Vec<Percept>,
        time: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    /// Logical timestamp: position in the log.
    pub seq: u64,
    #[serde(flatten)]
    pub event: LogEvent,
}

/// Output of one node of the executed grounding program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeAttention {
    pub node: String,
    pub dims: [usize; 3],
    /// Attention values for map-producing nodes, cell probabilities for the
    /// Locate node, cell-major.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub action: ActionCommand,
    pub graph: Option<ProgramGraph>,
    pub posterior: Option<Posterior>,
    pub attention: Vec<NodeAttention>,
}

/// Nearest free cell from the referent along the preposition's direction.
pub fn position_compute(
    space: &AnchorSpace,
    direction: [i32; 3],
    referent: &str,
) -> Result<([f64; 3], Cell)> {
    let grid = &space.grid;
    let from = grid.cell_of(space.get(referent)?.position)?;
    let occupied: BTreeSet<Cell> = space
        .anchors()
        .filter(|a| space.held() != Some(a.id.as_str()))
        .map(|a| grid.cell_of(a.position))
        .collect::<Result<_>>()?;
    let cell = free_cell_along(grid, |c| occupied.contains(&c), from, direction)?;
    Ok((grid.cell_center(cell), cell))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    vocab: Vocabulary,
    params: ParamStore,
    pub config: SessionConfig,
    initial: AnchorSpace,
    space: AnchorSpace,
    log: Vec<LogEntry>,
}

impl Session {
    pub fn new(
        vocab: Vocabulary,
        params: ParamStore,
        space: AnchorSpace,
        config: SessionConfig,
    ) -> Result<Self> {
        space.validate()?;
        if params.channels() != vocab.feature_width()
            || params.preposition_count() != vocab.prepositions().len()
            || params.grid_dims() != space.grid.dims()
        {
            return Err(Error::DimMismatch(
                "parameters do not fit the vocabulary or grid",
            ));
        }
        Ok(Session {
            vocab,
            params,
            config,
            initial: space.clone(),
            space,
            log: Vec::new(),
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn space(&self) -> &AnchorSpace {
        &self.space
    }

    pub fn initial_space(&self) -> &AnchorSpace {
        &self.initial
    }

    pub fn held(&self) -> Option<&str> {
        self.space.held()
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    fn append(&mut self, event: LogEvent) -> &LogEntry {
        let seq = self.log.len() as u64;
        self.log.push(LogEntry { seq, event });
        self.log.last().expect("just pushed")
    }

    fn noop(reason: impl Into<String>) -> ActionCommand {
        ActionCommand::NoOp {
            reason: reason.into(),
        }
    }

    /// Nouns of the grounding program that no placed anchor holds as its top
    /// label.
    fn missing_labels(&self, graph: &ProgramGraph) -> bool {
        let tops: BTreeSet<&str> = self
            .space
            .anchors()
            .filter(|a| self.space.held() != Some(a.id.as_str()))
            .map(Anchor::top_label)
            .collect();
        graph
            .detect_words()
            .filter(|&w| self.vocab.is_noun(w))
            .any(|w| !tops.contains(self.vocab.word(w)))
    }

    fn attention(&self, graph: &ProgramGraph) -> Result<Vec<NodeAttention>> {
        let scene = anchors_to_scene(&self.space, None)?;
        let grid = encode_scene(&scene, &self.vocab, None)?;
        let (dist, trace) = execute(graph, &grid, &self.params)?;
        let text = graph.to_text(&self.vocab);
        Ok(trace
            .nodes()
            .iter()
            .zip(text.split("; "))
            .map(|(n, name)| NodeAttention {
                node: name.to_string(),
                dims: dist.dims(),
                values: match &n.output {
                    Some(map) => map.values().to_vec(),
                    None => dist.probs().to_vec(),
                },
            })
            .collect())
    }

    /// Decides the action for an instruction without touching the log.
    fn decide(
        &mut self,
        text: &str,
    ) -> (
        ActionCommand,
        Option<ProgramGraph>,
        Option<Posterior>,
        Vec<NodeAttention>,
    ) {
        let graph = match parse(text, &self.vocab) {
            Ok(g) => g,
            Err(e) => {
                return (
                    Self::noop(format!("parse error: {e}")),
                    None,
                    None,
                    Vec::new(),
                )
            }
        };
        let put = match *graph.root() {
            Node::Position { prep, source, .. } => Some((prep, source)),
            _ => None,
        };
        match put {
            None if self.held().is_some() => {
                return (Self::noop("hand occupied"), Some(graph), None, Vec::new());
            }
            Some((_, Source::Held)) if self.held().is_none() => {
                return (
                    Self::noop("unresolvable pronoun"),
                    Some(graph),
                    None,
                    Vec::new(),
                );
            }
            Some((_, Source::Located(_))) if self.held().is_none() => {
                return (Self::noop("nothing held"), Some(graph), None, Vec::new());
            }
            _ => {}
        }
        let scoring = scoring_graph(&graph);
        let options = match self.config.revision {
            RevisionMode::OnMissingLabel if !self.missing_labels(&scoring) => ResolveOptions {
                k: 1,
                ..self.config.resolve
            },
            _ => self.config.resolve,
        };
        let posterior = match resolve(
            &self.space,
            &graph,
            &self.params,
            &self.vocab,
            None,
            options,
        ) {
            Ok(p) => p,
            Err(e) => {
                return (
                    Self::noop(format!("grounding failed: {e}")),
                    Some(graph),
                    None,
                    Vec::new(),
                )
            }
        };
        if posterior.degenerate {
            return (
                Self::noop("degenerate evidence"),
                Some(graph),
                Some(posterior),
                Vec::new(),
            );
        }
        match apply_posterior(&self.space, &posterior) {
            Ok(space) => self.space = space,
            Err(e) => {
                return (
                    Self::noop(format!("revision failed: {e}")),
                    Some(graph),
                    Some(posterior),
                    Vec::new(),
                )
            }
        }
        let attention = self.attention(&scoring).unwrap_or_default();
        let Some(target) = posterior.map_grounding.clone() else {
            return (
                Self::noop("nothing to ground on"),
                Some(graph),
                Some(posterior),
                attention,
            );
        };
        let action = match put {
            None => ActionCommand::PickUp { anchor: target },
            Some((prep, _)) => {
                let direction = self.vocab.preposition(prep).direction;
                match position_compute(&self.space, direction, &target) {
                    Ok((position, cell)) => ActionCommand::Place {
                        anchor: self.held().unwrap_or_default().to_string(),
                        position,
                        cell,
                    },
                    Err(e) => Self::noop(format!("{e}")),
                }
            }
        };
        (action, Some(graph), Some(posterior), attention)
    }

    /// Handles one instruction end to end. Failures become a no-op action;
    /// the session is never left in an invalid state.
    pub fn submit_instruction(&mut self, text: &str) -> Outcome {
        let (action, graph, posterior, attention) = self.decide(text);
        if !matches!(action, ActionCommand::NoOp { .. }) {
            self.actuate(&action).expect("decided actions are valid");
        }
        self.append(LogEvent::Instruction {
            text: text.to_string(),
            graph: graph.as_ref().map(|g| g.to_text(&self.vocab)),
            posterior: posterior.as_ref().map(PosteriorSummary::from),
            action: action.clone(),
        });
        Outcome {
            action,
            graph,
            posterior,
            attention,
        }
    }

    fn actuate(&mut self, action: &ActionCommand) -> Result<()> {
        match action {
            ActionCommand::PickUp { anchor } => {
                if let Some(h) = self.held() {
                    return Err(Error::InvalidAction(format!("hand already holds {h}")));
                }
                self.space.get(anchor)?;
                self.space.set_held(Some(anchor))
            }
            ActionCommand::Place { anchor, cell, .. } => {
                if self.held() != Some(anchor.as_str()) {
                    return Err(Error::InvalidAction(format!("{anchor} is not held")));
                }
                let grid = self.space.grid.clone();
                if !grid.contains(*cell) {
                    return Err(Error::InvalidAction(format!("cell {cell} is off the grid")));
                }
                let occupied = self
                    .space
                    .anchors()
                    .filter(|a| a.id != *anchor)
                    .any(|a| grid.cell_of(a.position).ok() == Some(*cell));
                if occupied {
                    return Err(Error::InvalidAction(format!("cell {cell} is occupied")));
                }
                self.space.get_mut(anchor)?.position = grid.cell_center(*cell);
                self.space.set_held(None)
            }
            ActionCommand::NoOp { .. } => Ok(()),
        }
    }

    /// Applies an action directly and logs it.
    pub fn step_world(&mut self, action: ActionCommand) -> Result<()> {
        self.actuate(&action)?;
        self.append(LogEvent::Action { action });
        Ok(())
    }

    /// Feeds a frame of percepts to the anchoring layer and logs it.
    pub fn perceive(&mut self, percepts: Vec<Percept>, time: u64) -> Result<Vec<String>> {
        let mut space = self.space.clone();
        let ids = space.perceive(&percepts, time)?;
        space.validate()?;
        self.space = space;
        self.append(LogEvent::Perception { percepts, time });
        Ok(ids)
    }

    /// Re-runs the log against the initial snapshot.
    pub fn replay(&self) -> Result<Session> {
        let mut s = Session::new(
            self.vocab.clone(),
            self.params.clone(),
            self.initial.clone(),
            self.config,
        )?;
        for entry in &self.log {
            match &entry.event {
                LogEvent::Instruction { text, .. } => {
                    s.submit_instruction(text);
                }
                LogEvent::Action { action } => s.step_world(action.clone())?,
                LogEvent::Perception { percepts, time } => {
                    s.perceive(percepts.clone(), *time)?;
                }
            }
        }
        Ok(s)
    }
}

/// Desk-scale scene of the two-instruction demonstration: two balls, a can
/// with one ball in front of it, and a black object whose top label is pot
/// while it is actually a mug.
pub fn showcase_space(grid: &GridSpec) -> Result<AnchorSpace> {
    let mut space = AnchorSpace::new(grid.clone());
    let anchor = |id: &str, belief: &[(&str, f64)], attrs: &[&str], cell: Cell| Anchor {
        id: id.to_string(),
        label_belief: belief.iter().map(|(l, p)| (l.to_string(), *p)).collect(),
        attributes: attrs.iter().map(|a| a.to_string()).collect(),
        position: grid.cell_center(cell),
        last_seen: 0,
    };
    space.insert(anchor(
        "can-1",
        &[("can", 1.0)],
        &["green"],
        Cell::new(1, 3, 0),
    ))?;
    space.insert(anchor(
        "ball-1",
        &[("ball", 1.0)],
        &["red"],
        Cell::new(1, 1, 0),
    ))?;
    space.insert(anchor(
        "ball-2",
        &[("ball", 1.0)],
        &["blue"],
        Cell::new(4, 4, 0),
    ))?;
    space.insert(anchor(
        "pot-1",
        &[("pot", 0.6), ("mug", 0.4)],
        &["black"],
        Cell::new(3, 3, 0),
    ))?;
    space.validate()?;
    Ok(space)
}

pub const SHOWCASE_SCRIPT: [&str; 2] = [
    "pick up the ball in front of the can",
    "drop it in front of the mug",
];
