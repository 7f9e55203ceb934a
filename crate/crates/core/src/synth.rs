//! Synthetic scenario generator.
//!
//! Each sample is a random grid world built around a target object, a
//! referring expression that singles the target out, and the gold program
//! graph. The scenario decides how ambiguous the world is:
//!
//! 1. the target's noun is unique;
//! 2. the noun is shared by distractors and adjectives discriminate;
//! 3. noun and attributes are shared by distractors and a prepositional phrase
//!    with a single referent discriminates;
//! 4. as 3, with the (redundant) target adjectives also spelled out;
//! 5. as 3, with the referent needing adjectives of its own;
//! 6. uniform draw from 1-5 per sample.
//!
//! Training data comes from a constrained generator in which each noun only
//! appears with a fixed fraction of the adjectives and of the cells.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::expr::{oracle_cells, Instruction, NounPhrase};
use crate::graph::ProgramGraph;
use crate::rng::{self, Rng};
use crate::vocab::{VerbClass, Vocabulary};
use crate::world::{free_cell_along, Cell, GridSpec, ObjectInstance, SceneState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScenarioId(u8);

impl ScenarioId {
    pub const MIXED: ScenarioId = ScenarioId(6);

    pub fn new(value: u8) -> Result<Self> {
        if (1..=6).contains(&value) {
            Ok(ScenarioId(value))
        } else {
            Err(Error::InvalidConfig(format!(
                "scenario {value} is not in 1..=6"
            )))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = ScenarioId> {
        (1..=6).map(ScenarioId)
    }
}

impl core::fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    pub max_objects: usize,
    pub distractors: usize,
    /// Attributes per object are drawn from `1..=max_attributes`.
    pub max_attributes: usize,
    pub max_attempts: u32,
    /// Probability that a sample is rewritten as "put it PREP <expression>".
    pub put_fraction: f64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            max_objects: 10,
            distractors: 2,
            max_attributes: 2,
            max_attempts: 1000,
            put_fraction: 0.0,
        }
    }
}

/// Per-noun subsets of adjectives and cells that training samples may use.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConstraints {
    fraction: f64,
    /// Indexed by noun; adjective feature indices, ascending.
    attributes: Vec<Vec<usize>>,
    /// Indexed by noun; flat cell indices, ascending.
    cells: Vec<Vec<usize>>,
}

/// `ceil(fraction * n)` clamped to `1..=n`, tolerant of products such as
/// `0.7 * 10 = 7.000000000000001`.
pub fn constrained_size(fraction: f64, n: usize) -> usize {
    let raw = libm::ceil(fraction * n as f64 - 1e-9) as usize;
    raw.clamp(1, n.max(1))
}

fn pick_subset(rng: &mut Rng, universe: impl Iterator<Item = usize>, size: usize) -> Vec<usize> {
    let mut all: Vec<usize> = universe.collect();
    all.shuffle(rng);
    all.truncate(size);
    all.sort_unstable();
    all
}

pub fn make_constraints(
    vocab: &Vocabulary,
    grid: &GridSpec,
    fraction: f64,
    seed: u64,
) -> Result<GenerationConstraints> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "constraint fraction {fraction} is not in (0, 1]"
        )));
    }
    let n_nouns = vocab.nouns().len();
    let n_adj = vocab.adjectives().len();
    let n_cells = grid.cell_count();
    let mut attributes = Vec::with_capacity(n_nouns);
    let mut cells = Vec::with_capacity(n_nouns);
    for noun in 0..n_nouns {
        let mut r = rng::stream(seed, 0xc0, noun as u64);
        attributes.push(pick_subset(
            &mut r,
            n_nouns..n_nouns + n_adj,
            constrained_size(fraction, n_adj),
        ));
        cells.push(pick_subset(
            &mut r,
            0..n_cells,
            constrained_size(fraction, n_cells),
        ));
    }
    Ok(GenerationConstraints {
        fraction,
        attributes,
        cells,
    })
}

impl GenerationConstraints {
    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    pub fn allowed_attributes(&self, noun: usize) -> &[usize] {
        &self.attributes[noun]
    }

    pub fn allowed_cells(&self, noun: usize) -> &[usize] {
        &self.cells[noun]
    }

    /// Whether an object of `noun` carrying `attributes` at `cell` could
    /// appear in constrained data.
    pub fn admits(&self, noun: usize, attributes: &[usize], cell: usize) -> bool {
        attributes
            .iter()
            .all(|a| self.attributes[noun].binary_search(a).is_ok())
            && self.cells[noun].binary_search(&cell).is_ok()
    }

    /// Named view of the attribute subsets.
    pub fn attribute_map(&self, vocab: &Vocabulary) -> BTreeMap<String, BTreeSet<String>> {
        self.attributes
            .iter()
            .enumerate()
            .map(|(n, adjs)| {
                (
                    vocab.word(n).to_string(),
                    adjs.iter().map(|&a| vocab.word(a).to_string()).collect(),
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub scene: SceneState,
    pub instruction: String,
    pub gold_graph: ProgramGraph,
    /// Located cell for pick-like samples, placement cell for put-like ones.
    pub gold_target: Cell,
    pub scenario: ScenarioId,
    pub seed: u64,
}

impl Sample {
    pub fn verb_class(&self) -> VerbClass {
        match self.gold_graph.root() {
            crate::graph::Node::Position { .. } => VerbClass::PutLike,
            _ => VerbClass::PickLike,
        }
    }

    /// Id of the object at the gold cell (pick-like samples).
    pub fn target_object(&self) -> Option<&ObjectInstance> {
        self.scene.object_at(self.gold_target)
    }
}

/// Object under construction: noun and adjective feature indices plus cell.
#[derive(Debug, Clone)]
struct Draft {
    noun: usize,
    attributes: Vec<usize>,
    cell: Cell,
}

struct Builder<'a> {
    vocab: &'a Vocabulary,
    grid: &'a GridSpec,
    constraints: Option<&'a GenerationConstraints>,
    config: &'a GenerationConfig,
    objects: Vec<Draft>,
}

impl<'a> Builder<'a> {
    fn n_nouns(&self) -> usize {
        self.vocab.nouns().len()
    }

    fn allowed_attributes(&self, noun: usize) -> Vec<usize> {
        match self.constraints {
            Some(c) => c.allowed_attributes(noun).to_vec(),
            None => (self.n_nouns()..self.vocab.feature_width()).collect(),
        }
    }

    fn cell_allowed(&self, noun: usize, cell: Cell) -> bool {
        match self.constraints {
            Some(c) => c
                .allowed_cells(noun)
                .binary_search(&self.grid.cell_index(cell))
                .is_ok(),
            None => true,
        }
    }

    fn occupied(&self, cell: Cell) -> bool {
        self.objects.iter().any(|o| o.cell == cell)
    }

    fn random_noun(&self, rng: &mut Rng, exclude: &[usize]) -> Option<usize> {
        let pool: Vec<usize> = (0..self.n_nouns())
            .filter(|n| !exclude.contains(n))
            .collect();
        pool.choose(rng).copied()
    }

    fn random_attributes(&self, rng: &mut Rng, noun: usize) -> Vec<usize> {
        let allowed = self.allowed_attributes(noun);
        let max = self.config.max_attributes.min(allowed.len());
        if max == 0 {
            return Vec::new();
        }
        let size = rng.gen_range(1..=max);
        let mut picked: Vec<usize> = allowed.choose_multiple(rng, size).copied().collect();
        picked.sort_unstable();
        picked
    }

    fn free_cells(&self, noun: usize, accept: impl Fn(Cell) -> bool) -> Vec<Cell> {
        self.grid
            .cells()
            .filter(|&c| !self.occupied(c) && self.cell_allowed(noun, c) && accept(c))
            .collect()
    }

    fn place(
        &mut self,
        rng: &mut Rng,
        noun: usize,
        attributes: Vec<usize>,
        accept: impl Fn(Cell) -> bool,
    ) -> Option<Cell> {
        let cell = *self.free_cells(noun, accept).choose(rng)?;
        self.objects.push(Draft {
            noun,
            attributes,
            cell,
        });
        Some(cell)
    }

    fn add_noise(&mut self, rng: &mut Rng, exclude: &[usize]) -> Option<()> {
        let room = self.config.max_objects.saturating_sub(self.objects.len());
        let count = rng.gen_range(0..=room);
        for _ in 0..count {
            let noun = self.random_noun(rng, exclude)?;
            let attrs = self.random_attributes(rng, noun);
            self.place(rng, noun, attrs, |_| true)?;
        }
        Some(())
    }

    fn pick_scenario(&mut self, rng: &mut Rng, scenario: u8) -> Option<(NounPhrase, Cell)> {
        let k = self.config.distractors;
        let target_noun = self.random_noun(rng, &[])?;
        let target_attrs = self.random_attributes(rng, target_noun);
        match scenario {
            1 => {
                let target = self.place(rng, target_noun, target_attrs.clone(), |_| true)?;
                for _ in 0..k {
                    // same attributes, different class
                    let mut placed = false;
                    for _ in 0..8 {
                        let noun = self.random_noun(rng, &[target_noun])?;
                        let allowed = self.allowed_attributes(noun);
                        if target_attrs.iter().all(|a| allowed.contains(a)) {
                            self.place(rng, noun, target_attrs.clone(), |_| true)?;
                            placed = true;
                            break;
                        }
                    }
                    if !placed {
                        return None;
                    }
                }
                self.add_noise(rng, &[target_noun])?;
                Some((NounPhrase::bare(target_noun), target))
            }
            2 => {
                if target_attrs.is_empty() {
                    return None;
                }
                let size = rng.gen_range(1..=target_attrs.len());
                let mut mention: Vec<usize> =
                    target_attrs.choose_multiple(rng, size).copied().collect();
                mention.sort_unstable();
                let target = self.place(rng, target_noun, target_attrs, |_| true)?;
                for _ in 0..k {
                    let mut placed = false;
                    for _ in 0..16 {
                        let attrs = self.random_attributes(rng, target_noun);
                        if !mention.iter().all(|m| attrs.contains(m)) {
                            self.place(rng, target_noun, attrs, |_| true)?;
                            placed = true;
                            break;
                        }
                    }
                    if !placed {
                        return None;
                    }
                }
                self.add_noise(rng, &[target_noun])?;
                Some((
                    NounPhrase::bare(target_noun).with_adjectives(mention),
                    target,
                ))
            }
            3..=5 => {
                let prep_index = rng.gen_range(0..self.vocab.prepositions().len());
                let prep = self.vocab.preposition(prep_index).clone();
                let referent_noun = self.random_noun(rng, &[target_noun])?;
                let referent_attrs = self.random_attributes(rng, referent_noun);
                let referent_cell =
                    self.place(rng, referent_noun, referent_attrs.clone(), |_| true)?;
                let target = self.place(rng, target_noun, target_attrs.clone(), |c| {
                    prep.relates(referent_cell.to_array(), c.to_array())
                })?;
                for _ in 0..k {
                    self.place(rng, target_noun, target_attrs.clone(), |c| {
                        !prep.relates(referent_cell.to_array(), c.to_array())
                    })?;
                }
                let mut referent = NounPhrase::bare(referent_noun);
                if scenario == 5 {
                    if referent_attrs.is_empty() {
                        return None;
                    }
                    let size = rng.gen_range(1..=referent_attrs.len());
                    let mut mention: Vec<usize> =
                        referent_attrs.choose_multiple(rng, size).copied().collect();
                    mention.sort_unstable();
                    let others = rng.gen_range(1..=2usize);
                    for _ in 0..others {
                        let mut placed = false;
                        for _ in 0..16 {
                            let attrs = self.random_attributes(rng, referent_noun);
                            if !mention.iter().all(|m| attrs.contains(m)) {
                                self.place(rng, referent_noun, attrs, |_| true)?;
                                placed = true;
                                break;
                            }
                        }
                        if !placed {
                            return None;
                        }
                    }
                    referent = referent.with_adjectives(mention);
                }
                self.add_noise(rng, &[target_noun, referent_noun])?;
                let mut phrase = NounPhrase::bare(target_noun);
                if scenario == 4 {
                    phrase = phrase.with_adjectives(target_attrs);
                }
                Some((phrase.related(prep_index, referent), target))
            }
            _ => None,
        }
    }

    fn scene(
        &self,
        rng: &mut Rng,
        held: Option<Draft>,
    ) -> Result<(SceneState, BTreeMap<Cell, String>)> {
        let mut drafts: Vec<&Draft> = self.objects.iter().collect();
        drafts.shuffle(rng);
        let mut objects = Vec::with_capacity(drafts.len() + 1);
        let mut ids = BTreeMap::new();
        for (i, d) in drafts.iter().enumerate() {
            let id = format!("obj-{i}");
            ids.insert(d.cell, id.clone());
            objects.push(self.object(&id, d));
        }
        let held_id = held.map(|d| {
            objects.push(self.object("held", &d));
            String::from("held")
        });
        let scene = SceneState {
            grid_spec: self.grid.clone(),
            objects,
            held: held_id,
        };
        scene.validate(self.config.max_objects + 1)?;
        Ok((scene, ids))
    }

    fn object(&self, id: &str, d: &Draft) -> ObjectInstance {
        ObjectInstance::new(
            id,
            self.vocab.word(d.noun),
            d.attributes.iter().map(|&a| self.vocab.word(a)),
            self.grid.cell_center(d.cell),
        )
    }
}

fn choose_verb<'v>(vocab: &'v Vocabulary, class: VerbClass, rng: &mut Rng) -> Result<&'v str> {
    let verbs: Vec<&str> = vocab.verbs_of(class).collect();
    verbs
        .choose(rng)
        .copied()
        .ok_or_else(|| Error::InvalidConfig(format!("no {class:?} verbs in the vocabulary")))
}

/// Renders a gold graph as an instruction with a random verb synonym.
pub fn render_instruction(
    graph: &ProgramGraph,
    vocab: &Vocabulary,
    rng: &mut Rng,
) -> Result<String> {
    let instruction = Instruction::from_graph(graph, vocab)?;
    let class = match instruction {
        Instruction::Pick(_) => VerbClass::PickLike,
        Instruction::Put { .. } => VerbClass::PutLike,
    };
    Ok(instruction.render(choose_verb(vocab, class, rng)?, vocab))
}

pub fn generate_sample(
    scenario: ScenarioId,
    constraints: Option<&GenerationConstraints>,
    vocab: &Vocabulary,
    grid: &GridSpec,
    config: &GenerationConfig,
    seed: u64,
) -> Result<Sample> {
    let mut rng = rng::rng(seed);
    let concrete = if scenario == ScenarioId::MIXED {
        rng.gen_range(1..=5u8)
    } else {
        scenario.get()
    };
    let needed = match concrete {
        1 | 2 => 1 + config.distractors,
        3 | 4 => 2 + config.distractors,
        _ => 3 + config.distractors,
    };
    if needed > config.max_objects || needed > grid.cell_count() {
        return Err(Error::InvalidConfig(format!(
            "scenario {concrete} needs {needed} objects; cap {} on {} cells",
            config.max_objects,
            grid.cell_count()
        )));
    }
    for _ in 0..config.max_attempts {
        let mut builder = Builder {
            vocab,
            grid,
            constraints,
            config,
            objects: Vec::new(),
        };
        let Some((phrase, target)) = builder.pick_scenario(&mut rng, concrete) else {
            continue;
        };
        let put = config.put_fraction > 0.0 && rng.gen_bool(config.put_fraction.min(1.0));
        let (instruction, held, gold_target) = if put {
            let prep_index = rng.gen_range(0..vocab.prepositions().len());
            let direction = vocab.preposition(prep_index).direction;
            let Ok(place) = free_cell_along(grid, |c| builder.occupied(c), target, direction)
            else {
                continue;
            };
            let noun = match builder.random_noun(&mut rng, &[]) {
                Some(n) => n,
                None => continue,
            };
            let attributes = builder.random_attributes(&mut rng, noun);
            let held = Draft {
                noun,
                attributes,
                cell: place,
            };
            let instruction = Instruction::Put {
                source: None,
                prep: prep_index,
                referent: phrase,
            };
            (instruction, Some(held), place)
        } else {
            (Instruction::Pick(phrase), None, target)
        };
        let (scene, _) = builder.scene(&mut rng, held)?;
        let gold_graph = instruction.compile();
        let grounded = oracle_cells(&gold_graph, &scene, vocab)?;
        if grounded.len() != 1 || !grounded.contains(&target) {
            continue;
        }
        let class = match instruction {
            Instruction::Pick(_) => VerbClass::PickLike,
            Instruction::Put { .. } => VerbClass::PutLike,
        };
        let text = instruction.render(choose_verb(vocab, class, &mut rng)?, vocab);
        return Ok(Sample {
            scene,
            instruction: text,
            gold_graph,
            gold_target,
            scenario: ScenarioId(concrete),
            seed,
        });
    }
    Err(Error::GenerationFailure(config.max_attempts))
}

/// A random well-formed instruction over the vocabulary: pick-like or
/// put-like, with up to `max_chain` chained prepositional phrases and up to
/// two adjectives per noun phrase.
pub fn random_instruction(vocab: &Vocabulary, rng: &mut Rng, max_chain: usize) -> Instruction {
    fn phrase(vocab: &Vocabulary, rng: &mut Rng, depth: usize) -> NounPhrase {
        let n_nouns = vocab.nouns().len();
        let noun = rng.gen_range(0..n_nouns);
        let adjs: Vec<usize> = (n_nouns..vocab.feature_width()).collect();
        let count = rng.gen_range(0..=2usize.min(adjs.len()));
        let mut np =
            NounPhrase::bare(noun).with_adjectives(adjs.choose_multiple(rng, count).copied());
        if depth > 0 && rng.gen_bool(0.6) {
            let prep = rng.gen_range(0..vocab.prepositions().len());
            np = np.related(prep, phrase(vocab, rng, depth - 1));
        }
        np
    }
    if rng.gen_bool(0.7) {
        Instruction::Pick(phrase(vocab, rng, max_chain))
    } else {
        let source = if rng.gen_bool(0.5) {
            None
        } else {
            Some(phrase(vocab, rng, 0))
        };
        Instruction::Put {
            source,
            prep: rng.gen_range(0..vocab.prepositions().len()),
            referent: phrase(vocab, rng, max_chain),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Node;
    use crate::parser::parse;

    fn desk() -> (Vocabulary, GridSpec) {
        (Vocabulary::desk(), GridSpec::desk())
    }

    #[test]
    fn constraint_sizes() {
        let v = Vocabulary::default();
        let g = GridSpec::default();
        let c = make_constraints(&v, &g, 0.75, 1).unwrap();
        assert!(c.allowed_attributes(0).len() == 20);
        assert_eq!(c.allowed_cells(0).len(), 225);
        let full = make_constraints(&v, &g, 1.0, 1).unwrap();
        assert_eq!(full.allowed_attributes(5).len(), 26);
        assert_eq!(full.allowed_cells(5).len(), 300);
        assert_eq!(c, make_constraints(&v, &g, 0.75, 1).unwrap());
        assert_ne!(c, make_constraints(&v, &g, 0.75, 2).unwrap());
        assert!(make_constraints(&v, &g, 0.0, 1).is_err());
        assert!(make_constraints(&v, &g, 1.5, 1).is_err());
        assert_eq!(constrained_size(0.7, 10), 7);
        assert_eq!(constrained_size(0.75, 6), 5);
    }

    fn check_sample(s: &Sample, v: &Vocabulary, config: &GenerationConfig) {
        s.scene.validate(config.max_objects + 1).unwrap();
        assert!(s.scene.placed().count() <= config.max_objects);
        let grounded = oracle_cells(&s.gold_graph, &s.scene, v).unwrap();
        assert_eq!(grounded.len(), 1, "{}", s.instruction);
        assert_eq!(parse(&s.instruction, v).unwrap(), s.gold_graph);
    }

    #[test]
    fn scenario_contracts() {
        let (v, g) = desk();
        let cfg = GenerationConfig::default();
        for seed in 0..200u64 {
            for scenario in 1..=5u8 {
                let sc = ScenarioId::new(scenario).unwrap();
                let s = generate_sample(sc, None, &v, &g, &cfg, seed).unwrap();
                check_sample(&s, &v, &cfg);
                let target = s.target_object().unwrap().clone();
                let same_noun: Vec<_> = s
                    .scene
                    .placed()
                    .filter(|o| o.id != target.id && o.class_noun == target.class_noun)
                    .collect();
                let shifts = s.gold_graph.count(|n| matches!(n, Node::Shift(..)));
                let adjectives = s
                    .gold_graph
                    .detect_words()
                    .filter(|w| !v.is_noun(*w))
                    .count();
                match scenario {
                    1 => {
                        assert!(same_noun.is_empty());
                        assert_eq!(shifts, 0);
                        assert_eq!(s.gold_graph.detect_words().count(), 1);
                    }
                    2 => {
                        assert!(same_noun.len() >= 2);
                        assert!(same_noun
                            .iter()
                            .all(|d| !target.attributes.is_subset(&d.attributes)));
                        assert_eq!(shifts, 0);
                        assert!(adjectives >= 1);
                    }
                    3..=5 => {
                        assert!(same_noun.len() >= 2);
                        assert!(same_noun
                            .iter()
                            .take(2)
                            .all(|d| d.attributes == target.attributes));
                        assert_eq!(shifts, 1);
                        if scenario == 3 {
                            assert_eq!(adjectives, 0);
                        }
                        if scenario == 4 {
                            assert_eq!(adjectives, target.attributes.len());
                        }
                        if scenario == 5 {
                            assert!(adjectives >= 1);
                        }
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let (v, g) = desk();
        let cfg = GenerationConfig::default();
        let a = generate_sample(ScenarioId::MIXED, None, &v, &g, &cfg, 42).unwrap();
        let b = generate_sample(ScenarioId::MIXED, None, &v, &g, &cfg, 42).unwrap();
        assert_eq!(a, b);
        assert!((1..=5).contains(&a.scenario.get()));
    }

    #[test]
    fn constrained_samples_respect_constraints() {
        let (v, g) = desk();
        let cfg = GenerationConfig::default();
        let c = make_constraints(&v, &g, 0.75, 3).unwrap();
        for seed in 0..300u64 {
            let s = generate_sample(ScenarioId::MIXED, Some(&c), &v, &g, &cfg, seed).unwrap();
            check_sample(&s, &v, &cfg);
            for o in s.scene.placed() {
                let noun = v.noun_index(&o.class_noun).unwrap();
                let attrs: Vec<usize> = o
                    .attributes
                    .iter()
                    .map(|a| v.adjective_index(a).unwrap())
                    .collect();
                let cell = g.cell_index(o.cell(&g).unwrap());
                assert!(c.admits(noun, &attrs, cell));
            }
        }
    }

    #[test]
    fn put_samples_place_next_to_referent() {
        let (v, g) = desk();
        let cfg = GenerationConfig {
            put_fraction: 1.0,
            ..GenerationConfig::default()
        };
        for seed in 0..100u64 {
            let s = generate_sample(ScenarioId::MIXED, None, &v, &g, &cfg, seed).unwrap();
            assert_eq!(s.verb_class(), VerbClass::PutLike);
            assert!(s.scene.held.is_some());
            assert!(s.scene.object_at(s.gold_target).is_none());
            check_sample(&s, &v, &cfg);
        }
    }

    #[test]
    fn degenerate_configs_fail() {
        let (v, g) = desk();
        let cfg = GenerationConfig {
            max_objects: 3,
            ..GenerationConfig::default()
        };
        assert!(matches!(
            generate_sample(ScenarioId::new(5).unwrap(), None, &v, &g, &cfg, 0),
            Err(Error::InvalidConfig(_))
        ));
        let tiny = GridSpec::new(2, 1, 1, 0.1).unwrap();
        assert!(generate_sample(
            ScenarioId::new(3).unwrap(),
            None,
            &v,
            &tiny,
            &GenerationConfig::default(),
            0
        )
        .is_err());
        // adjectives cannot discriminate objects that carry none
        let cfg = GenerationConfig {
            max_attempts: 20,
            max_attributes: 0,
            ..GenerationConfig::default()
        };
        assert_eq!(
            generate_sample(ScenarioId::new(2).unwrap(), None, &v, &g, &cfg, 0).unwrap_err(),
            Error::GenerationFailure(20)
        );
    }

    #[test]
    fn render_examples() {
        let v = Vocabulary::desk();
        let g = parse("pick up the apple", &v).unwrap();
        let mut r = rng::rng(0);
        let text = render_instruction(&g, &v, &mut r).unwrap();
        assert!(text.ends_with(" the apple"));
        assert_eq!(parse(&text, &v).unwrap(), g);
    }

    #[test]
    fn round_trip_random_gold_graphs() {
        let v = Vocabulary::default();
        let mut r = rng::rng(77);
        for _ in 0..300 {
            let g = random_instruction(&v, &mut r, 3).compile();
            let text = render_instruction(&g, &v, &mut r).unwrap();
            assert_eq!(parse(&text, &v).unwrap(), g, "{text}");
        }
    }
}
