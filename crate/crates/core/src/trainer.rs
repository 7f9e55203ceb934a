//! Curriculum training of the neural modules.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::oracle_cells;
use crate::graph::{Node, ProgramGraph};
use crate::nn::{adam_step, backprop, execute, AdamConfig, InitScheme, ParamStore};
use crate::rng;
use crate::synth::{generate_sample, GenerationConfig, GenerationConstraints, Sample, ScenarioId};
use crate::vocab::Vocabulary;
use crate::world::{encode_scene, Cell, GridSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumConfig {
    pub scenario_order: Vec<ScenarioId>,
    /// Training samples between two evaluations.
    pub eval_period: usize,
    /// Unconstrained samples per evaluation.
    pub eval_batch: usize,
    pub stop_threshold: f64,
    pub ema_decay: f64,
    /// Training samples per stage before the stage is cut off.
    pub max_samples: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    pub init: InitScheme,
    pub generation: GenerationConfig,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        CurriculumConfig {
            scenario_order: ScenarioId::all().collect(),
            eval_period: 500,
            eval_batch: 200,
            stop_threshold: 1e-5,
            ema_decay: 0.9,
            max_samples: 200_000,
            seed: 0,
            adam: AdamConfig::default(),
            init: InitScheme::default(),
            generation: GenerationConfig::default(),
        }
    }
}

impl CurriculumConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.scenario_order.is_empty() {
            return bad("scenario order is empty");
        }
        if self.eval_period == 0 || self.eval_batch == 0 || self.max_samples == 0 {
            return bad("eval period, eval batch and max samples must be positive");
        }
        if !(self.stop_threshold > 0.0) {
            return bad("stop threshold must be positive");
        }
        if !(self.ema_decay > 0.0 && self.ema_decay < 1.0) {
            return bad("ema decay must lie in (0, 1)");
        }
        if !(self.adam.lr > 0.0) {
            return bad("learning rate must be positive");
        }
        Ok(())
    }
}

/// One evaluation during training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Position of the stage in the curriculum, from 0.
    pub stage: usize,
    pub scenario: ScenarioId,
    /// Training samples consumed within the stage.
    pub samples_seen: usize,
    pub error: f64,
    pub ema: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub stage: usize,
    pub scenario: ScenarioId,
    pub points: Vec<CurvePoint>,
    /// Samples seen at the first evaluation whose average fell under the
    /// threshold.
    pub samples_to_threshold: Option<usize>,
    /// The stage hit `max_samples` before converging.
    pub timed_out: bool,
}

impl StageReport {
    pub fn final_error(&self) -> Option<f64> {
        self.points.last().map(|p| p.error)
    }

    pub fn samples_seen(&self) -> usize {
        self.points.last().map_or(0, |p| p.samples_seen)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub stop_threshold: f64,
    pub stages: Vec<StageReport>,
}

impl TrainReport {
    /// Rebuilds a report from its curve points, as stored in a learning
    /// curve file. Points must be grouped by stage and increasing in
    /// `samples_seen` within a stage.
    pub fn from_points(
        points: &[CurvePoint],
        stop_threshold: f64,
        max_samples: usize,
    ) -> Result<Self> {
        let mut stages: Vec<StageReport> = Vec::new();
        for p in points {
            match stages.last_mut() {
                Some(s) if s.stage == p.stage => {
                    if s.scenario != p.scenario || s.samples_seen() >= p.samples_seen {
                        return Err(Error::InvalidConfig(format!(
                            "curve point out of order in stage {}",
                            p.stage
                        )));
                    }
                    s.points.push(*p);
                }
                _ => {
                    if stages.last().is_some_and(|s| s.stage >= p.stage) {
                        return Err(Error::InvalidConfig(format!("stage {} repeats", p.stage)));
                    }
                    stages.push(StageReport {
                        stage: p.stage,
                        scenario: p.scenario,
                        points: alloc::vec![*p],
                        samples_to_threshold: None,
                        timed_out: false,
                    });
                }
            }
        }
        for s in &mut stages {
            s.samples_to_threshold = s
                .points
                .iter()
                .find(|p| p.ema < stop_threshold)
                .map(|p| p.samples_seen);
            s.timed_out = s.samples_to_threshold.is_none() && s.samples_seen() >= max_samples;
        }
        Ok(TrainReport {
            stop_threshold,
            stages,
        })
    }

    pub fn points(&self) -> impl Iterator<Item = &CurvePoint> {
        self.stages.iter().flat_map(|s| s.points.iter())
    }
}

/// Graph and cell a sample is scored on: the gold program for pick-like
/// samples, the grounding of the referent for put-like ones.
pub fn grounding_target(sample: &Sample, vocab: &Vocabulary) -> Result<(ProgramGraph, Cell)> {
    match sample.gold_graph.root() {
        Node::Position { .. } => {
            let graph = sample.gold_graph.grounding_graph();
            let cells = oracle_cells(&graph, &sample.scene, vocab)?;
            let mut it = cells.into_iter();
            match (it.next(), it.next()) {
                (Some(c), None) => Ok((graph, c)),
                _ => Err(Error::InvalidScene("referent is not unique".into())),
            }
        }
        _ => Ok((sample.gold_graph.clone(), sample.gold_target)),
    }
}

/// Argmax cell of the gold program on the sample's scene.
pub fn predict(params: &ParamStore, vocab: &Vocabulary, sample: &Sample) -> Result<Cell> {
    let grid = encode_scene(&sample.scene, vocab, None)?;
    let (graph, _) = grounding_target(sample, vocab)?;
    Ok(execute(&graph, &grid, params)?.0.argmax())
}

/// Misclassification rate over the pick-like samples; 0 when there are none.
pub fn evaluate(params: &ParamStore, vocab: &Vocabulary, samples: &[Sample]) -> Result<f64> {
    let mut total = 0usize;
    let mut wrong = 0usize;
    for s in samples {
        if matches!(s.gold_graph.root(), Node::Position { .. }) {
            continue;
        }
        total += 1;
        if predict(params, vocab, s)? != s.gold_target {
            wrong += 1;
        }
    }
    Ok(if total == 0 {
        0.0
    } else {
        wrong as f64 / total as f64
    })
}

/// One Adam step on the cross-entropy of the sample's gold cell. Returns the
/// loss before the update.
pub fn train_step(
    params: &mut ParamStore,
    vocab: &Vocabulary,
    sample: &Sample,
    adam: &AdamConfig,
) -> Result<f64> {
    let grid = encode_scene(&sample.scene, vocab, None)?;
    let (graph, target) = grounding_target(sample, vocab)?;
    let (_, trace) = execute(&graph, &grid, params)?;
    let loss = trace.loss(target);
    let grads = backprop(&trace, params, target)?;
    adam_step(params, &grads, adam)?;
    Ok(loss)
}

const TRAIN_STREAM: u64 = 0x7a;
const EVAL_STREAM: u64 = 0xe7;

/// Seed of the `index`-th training sample of a stage.
pub fn training_seed(base: u64, stage: usize, index: usize) -> u64 {
    rng::derive(
        rng::derive(base, TRAIN_STREAM, stage as u64),
        0,
        index as u64,
    )
}

/// Seed of the `index`-th sample of the `round`-th evaluation of a stage.
pub fn evaluation_seed(base: u64, stage: usize, round: usize, index: usize) -> u64 {
    let stage_seed = rng::derive(base, EVAL_STREAM, stage as u64);
    rng::derive(stage_seed, round as u64 + 1, index as u64)
}

pub fn evaluation_batch(
    config: &CurriculumConfig,
    vocab: &Vocabulary,
    grid: &GridSpec,
    stage: usize,
    round: usize,
) -> Result<Vec<Sample>> {
    let scenario = config.scenario_order[stage];
    (0..config.eval_batch)
        .map(|i| {
            generate_sample(
                scenario,
                None,
                vocab,
                grid,
                &config.generation,
                evaluation_seed(config.seed, stage, round, i),
            )
        })
        .collect()
}

pub fn train_curriculum(
    config: &CurriculumConfig,
    vocab: &Vocabulary,
    grid: &GridSpec,
    constraints: Option<&GenerationConstraints>,
) -> Result<(ParamStore, TrainReport)> {
    let mut params = ParamStore::init(vocab, grid, rng::derive(config.seed, 0x1a, 0), config.init);
    let report = train_curriculum_from(config, vocab, grid, constraints, &mut params, |_, _| {})?;
    Ok((params, report))
}

/// Runs the curriculum starting from `params`, calling `on_stage` with the
/// parameters as they stand at the end of every stage.
pub fn train_curriculum_from(
    config: &CurriculumConfig,
    vocab: &Vocabulary,
    grid: &GridSpec,
    constraints: Option<&GenerationConstraints>,
    params: &mut ParamStore,
    mut on_stage: impl FnMut(&StageReport, &ParamStore),
) -> Result<TrainReport> {
    config.validate()?;
    let mut stages = Vec::with_capacity(config.scenario_order.len());
    for (stage, &scenario) in config.scenario_order.iter().enumerate() {
        let mut points = Vec::new();
        let mut ema: Option<f64> = None;
        let mut seen = 0usize;
        let mut converged = None;
        while seen < config.max_samples {
            let batch = config.eval_period.min(config.max_samples - seen);
            for i in seen..seen + batch {
                let sample = generate_sample(
                    scenario,
                    constraints,
                    vocab,
                    grid,
                    &config.generation,
                    training_seed(config.seed, stage, i),
                )?;
                train_step(params, vocab, &sample, &config.adam)?;
            }
            seen += batch;
            let eval = evaluation_batch(config, vocab, grid, stage, points.len())?;
            let error = evaluate(params, vocab, &eval)?;
            let avg = match ema {
                None => error,
                Some(prev) => config.ema_decay * prev + (1.0 - config.ema_decay) * error,
            };
            ema = Some(avg);
            points.push(CurvePoint {
                stage,
                scenario,
                samples_seen: seen,
                error,
                ema: avg,
            });
            if avg < config.stop_threshold {
                converged = Some(seen);
                break;
            }
        }
        let report = StageReport {
            stage,
            scenario,
            points,
            samples_to_threshold: converged,
            timed_out: converged.is_none(),
        };
        on_stage(&report, params);
        stages.push(report);
    }
    Ok(TrainReport {
        stop_threshold: config.stop_threshold,
        stages,
    })
}
