//! TOML run configuration.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use reground_core::anchor::{MatchConfig, NoiseModel};
use reground_core::belief::ResolveOptions;
use reground_core::nn::{AdamConfig, InitScheme};
use reground_core::session::{RevisionMode, SessionConfig};
use reground_core::synth::{make_constraints, GenerationConfig, GenerationConstraints, ScenarioId};
use reground_core::trainer::CurriculumConfig;
use reground_core::{GridSpec, Preposition, VerbClass, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub grid: GridSection,
    pub vocabulary: VocabularySection,
    pub generation: GenerationSection,
    pub training: TrainingSection,
    pub anchoring: AnchoringSection,
    pub noise: NoiseSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub width: usize,
    pub height: usize,
    pub layers: usize,
    pub cell_size: f64,
    pub origin: [f64; 3],
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            width: 10,
            height: 10,
            layers: 3,
            cell_size: 0.1,
            origin: [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum VocabularyPreset {
    /// 102 nouns, 26 adjectives, 27 prepositions.
    #[default]
    Full,
    /// 12 nouns, 6 adjectives, 6 prepositions.
    Desk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerbLists {
    pub pick: Vec<String>,
    pub put: Vec<String>,
}

/// A preset, or explicit word lists that replace it entirely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct VocabularySection {
    pub preset: VocabularyPreset,
    pub nouns: Option<Vec<String>>,
    pub adjectives: Option<Vec<String>>,
    pub prepositions: Option<Vec<Preposition>>,
    pub verbs: Option<VerbLists>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationSection {
    pub max_objects: usize,
    pub distractors: usize,
    pub max_attributes: usize,
    pub max_attempts: u32,
    pub put_fraction: f64,
    /// Fraction of adjectives and cells each noun may use in training data.
    pub constraint_fraction: f64,
    pub constraint_seed: u64,
}

impl Default for GenerationSection {
    fn default() -> Self {
        let g = GenerationConfig::default();
        GenerationSection {
            max_objects: g.max_objects,
            distractors: g.distractors,
            max_attributes: g.max_attributes,
            max_attempts: g.max_attempts,
            put_fraction: g.put_fraction,
            constraint_fraction: 0.75,
            constraint_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitName {
    #[default]
    NonNegative,
    Symmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub scenario_order: Vec<u8>,
    pub eval_period: usize,
    pub eval_batch: usize,
    pub stop_threshold: f64,
    pub ema_decay: f64,
    pub max_samples: usize,
    pub seed: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub init: InitName,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let c = CurriculumConfig::default();
        TrainingSection {
            scenario_order: c.scenario_order.iter().map(|s| s.get()).collect(),
            eval_period: c.eval_period,
            eval_batch: c.eval_batch,
            stop_threshold: c.stop_threshold,
            ema_decay: c.ema_decay,
            max_samples: c.max_samples,
            seed: c.seed,
            lr: c.adam.lr,
            beta1: c.adam.beta1,
            beta2: c.adam.beta2,
            eps: c.adam.eps,
            init: InitName::NonNegative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnchoringSection {
    pub match_radius: f64,
    pub match_overlap: f64,
    pub top_k: usize,
    pub anchor_cap: usize,
    pub revision: RevisionMode,
}

impl Default for AnchoringSection {
    fn default() -> Self {
        let m = MatchConfig::default();
        let r = ResolveOptions::default();
        AnchoringSection {
            match_radius: m.radius,
            match_overlap: m.overlap,
            top_k: r.k,
            anchor_cap: r.cap,
            revision: RevisionMode::Always,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    /// Confusable classes per true class as `[label, probability]` pairs.
    pub confusion: BTreeMap<String, Vec<(String, f64)>>,
    pub belief_band: (f64, f64),
    pub position_jitter: f64,
    pub seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let n = NoiseModel::default();
        NoiseSection {
            confusion: BTreeMap::new(),
            belief_band: n.belief_band,
            position_jitter: n.position_jitter,
            seed: n.seed,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let config: Config = toml::from_str(text)?;
        config.grid()?;
        config.vocabulary()?;
        config.curriculum()?.validate()?;
        config.noise_model().validate()?;
        Ok(config)
    }

    /// Loads `path` when given, otherwise the built-in defaults.
    pub fn load_or_default(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Config::default()),
        }
    }

    pub fn grid(&self) -> anyhow::Result<GridSpec> {
        let g = &self.grid;
        let mut spec = GridSpec::new(g.width, g.height, g.layers, g.cell_size)?;
        spec.origin = g.origin;
        spec.validate()?;
        Ok(spec)
    }

    pub fn vocabulary(&self) -> anyhow::Result<Vocabulary> {
        let v = &self.vocabulary;
        let base = match v.preset {
            VocabularyPreset::Full => Vocabulary::default(),
            VocabularyPreset::Desk => Vocabulary::desk(),
        };
        if v.nouns.is_none()
            && v.adjectives.is_none()
            && v.prepositions.is_none()
            && v.verbs.is_none()
        {
            return Ok(base);
        }
        let nouns = v.nouns.clone().unwrap_or_else(|| base.nouns().to_vec());
        let adjectives = v
            .adjectives
            .clone()
            .unwrap_or_else(|| base.adjectives().to_vec());
        let prepositions = v
            .prepositions
            .clone()
            .unwrap_or_else(|| base.prepositions().to_vec());
        let verbs = match &v.verbs {
            Some(lists) => {
                let mut map = BTreeMap::new();
                for (words, class) in [
                    (&lists.pick, VerbClass::PickLike),
                    (&lists.put, VerbClass::PutLike),
                ] {
                    for w in words {
                        if map.insert(w.clone(), class).is_some() {
                            bail!("verb `{w}` listed twice");
                        }
                    }
                }
                map
            }
            None => base.verbs().clone(),
        };
        Ok(Vocabulary::new(nouns, adjectives, prepositions, verbs)?)
    }

    pub fn generation(&self) -> GenerationConfig {
        let g = &self.generation;
        GenerationConfig {
            max_objects: g.max_objects,
            distractors: g.distractors,
            max_attributes: g.max_attributes,
            max_attempts: g.max_attempts,
            put_fraction: g.put_fraction,
        }
    }

    pub fn constraints(
        &self,
        vocab: &Vocabulary,
        grid: &GridSpec,
    ) -> anyhow::Result<GenerationConstraints> {
        Ok(make_constraints(
            vocab,
            grid,
            self.generation.constraint_fraction,
            self.generation.constraint_seed,
        )?)
    }

    pub fn curriculum(&self) -> anyhow::Result<CurriculumConfig> {
        let t = &self.training;
        Ok(CurriculumConfig {
            scenario_order: t
                .scenario_order
                .iter()
                .map(|&s| ScenarioId::new(s))
                .collect::<Result<_, _>>()?,
            eval_period: t.eval_period,
            eval_batch: t.eval_batch,
            stop_threshold: t.stop_threshold,
            ema_decay: t.ema_decay,
            max_samples: t.max_samples,
            seed: t.seed,
            adam: AdamConfig {
                lr: t.lr,
                beta1: t.beta1,
                beta2: t.beta2,
                eps: t.eps,
            },
            init: match t.init {
                InitName::NonNegative => InitScheme::NonNegative,
                InitName::Symmetric => InitScheme::Symmetric,
            },
            generation: self.generation(),
        })
    }

    pub fn session(&self) -> SessionConfig {
        SessionConfig {
            revision: self.anchoring.revision,
            resolve: ResolveOptions {
                k: self.anchoring.top_k,
                cap: self.anchoring.anchor_cap,
            },
        }
    }

    pub fn matching(&self) -> MatchConfig {
        MatchConfig {
            radius: self.anchoring.match_radius,
            overlap: self.anchoring.match_overlap,
        }
    }

    pub fn noise_model(&self) -> NoiseModel {
        NoiseModel {
            confusion: self.noise.confusion.clone(),
            belief_band: self.noise.belief_band,
            position_jitter: self.noise.position_jitter,
            seed: self.noise.seed,
        }
    }
}
