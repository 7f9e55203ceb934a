//! Simulated perceptual anchoring.
//!
//! A ground-truth scene is turned into noisy percepts (label belief drawn
//! from a confusion model, jittered position) which are matched against
//! existing anchors or acquired as new ones.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::world::{GridSpec, ObjectInstance, SceneState};

/// Highest-probability label of a belief; ties go to the smaller name.
pub fn top_label(belief: &BTreeMap<String, f64>) -> Option<&str> {
    let mut best: Option<(&str, f64)> = None;
    for (label, &p) in belief {
        if best.is_none_or(|(_, q)| p > q) {
            best = Some((label, p));
        }
    }
    best.map(|(l, _)| l)
}

/// Labels of a belief sorted by decreasing probability, then by name.
pub fn ranked_labels(belief: &BTreeMap<String, f64>) -> Vec<(&str, f64)> {
    let mut v: Vec<(&str, f64)> = belief.iter().map(|(l, &p)| (l.as_str(), p)).collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    v
}

fn check_distribution(what: &str, dist: impl IntoIterator<Item = f64>, tol: f64) -> Result<()> {
    let mut total = 0.0;
    for p in dist {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "{what}: probability {p} is not valid"
            )));
        }
        total += p;
    }
    if (total - 1.0).abs() > tol {
        return Err(Error::InvalidConfig(format!(
            "{what}: probabilities sum to {total}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub id: String,
    pub label_belief: BTreeMap<String, f64>,
    pub attributes: BTreeSet<String>,
    pub position: [f64; 3],
    pub last_seen: u64,
}

impl Anchor {
    pub fn top_label(&self) -> &str {
        top_label(&self.label_belief).unwrap_or("")
    }
}

/// Output of the simulated perception for one visible object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Percept {
    pub label_belief: BTreeMap<String, f64>,
    pub attributes: BTreeSet<String>,
    pub position: [f64; 3],
    pub time: u64,
    /// Id of the ground-truth object, for diagnostics only.
    #[serde(default)]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    /// Match radius in cells.
    pub radius: f64,
    /// Minimum Jaccard overlap of attribute sets.
    pub overlap: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            radius: 1.5,
            overlap: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSpace {
    pub grid: GridSpec,
    pub time: u64,
    pub matching: MatchConfig,
    anchors: BTreeMap<String, Anchor>,
    /// Next counter per label; ids are never reused.
    counters: BTreeMap<String, u64>,
    /// Anchor currently in the gripper, if any.
    #[serde(default)]
    held: Option<String>,
}

impl AnchorSpace {
    pub fn new(grid: GridSpec) -> Self {
        AnchorSpace {
            grid,
            time: 0,
            matching: MatchConfig::default(),
            anchors: BTreeMap::new(),
            counters: BTreeMap::new(),
            held: None,
        }
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn anchors(&self) -> impl Iterator<Item = &Anchor> {
        self.anchors.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.anchors.keys().map(String::as_str)
    }

    pub fn get(&self, id: &str) -> Result<&Anchor> {
        self.anchors
            .get(id)
            .ok_or_else(|| Error::UnknownAnchor(id.to_string()))
    }

    pub fn get_mut(&mut self, id: &str) -> Result<&mut Anchor> {
        self.anchors
            .get_mut(id)
            .ok_or_else(|| Error::UnknownAnchor(id.to_string()))
    }

    pub fn held(&self) -> Option<&str> {
        self.held.as_deref()
    }

    pub fn set_held(&mut self, id: Option<&str>) -> Result<()> {
        if let Some(id) = id {
            self.get(id)?;
        }
        self.held = id.map(str::to_string);
        Ok(())
    }

    /// Checks every anchor invariant.
    pub fn validate(&self) -> Result<()> {
        for (id, a) in &self.anchors {
            if *id != a.id {
                return Err(Error::InvalidScene(format!(
                    "anchor key `{id}` holds `{}`",
                    a.id
                )));
            }
            check_distribution(
                &format!("belief of {id}"),
                a.label_belief.values().copied(),
                1e-9,
            )?;
            self.grid.cell_of(a.position)?;
        }
        if let Some(h) = &self.held {
            self.get(h)?;
        }
        Ok(())
    }

    /// Inserts a fully specified anchor (fixtures, snapshots). The counter
    /// of the id's label is advanced past its number.
    pub fn insert(&mut self, anchor: Anchor) -> Result<()> {
        if self.anchors.contains_key(&anchor.id) {
            return Err(Error::DuplicateSymbol(anchor.id));
        }
        check_distribution(
            &format!("belief of {}", anchor.id),
            anchor.label_belief.values().copied(),
            1e-9,
        )?;
        self.grid.cell_of(anchor.position)?;
        if let Some((label, n)) = anchor.id.rsplit_once('-') {
            if let Ok(n) = n.parse::<u64>() {
                let next = self.counters.entry(label.to_string()).or_insert(1);
                *next = (*next).max(n + 1);
            }
        }
        self.anchors.insert(anchor.id.clone(), anchor);
        Ok(())
    }

    pub fn remove(&mut self, id: &str) -> Result<Anchor> {
        if self.held.as_deref() == Some(id) {
            self.held = None;
        }
        self.anchors
            .remove(id)
            .ok_or_else(|| Error::UnknownAnchor(id.to_string()))
    }

    /// Mints a new anchor from an unmatched percept.
    pub fn acquire(&mut self, percept: &Percept) -> Result<String> {
        check_distribution(
            "percept belief",
            percept.label_belief.values().copied(),
            1e-9,
        )?;
        let label = top_label(&percept.label_belief)
            .ok_or_else(|| Error::InvalidConfig("percept without label belief".into()))?
            .to_string();
        let position = self.clamp(percept.position);
        let counter = self.counters.entry(label.clone()).or_insert(1);
        let id = format!("{label}-{counter}");
        *counter += 1;
        self.anchors.insert(
            id.clone(),
            Anchor {
                id: id.clone(),
                label_belief: percept.label_belief.clone(),
                attributes: percept.attributes.clone(),
                position,
                last_seen: percept.time,
            },
        );
        Ok(id)
    }

    /// Replaces an anchor's perceptual state by the most recent percept.
    pub fn re_acquire(&mut self, percept: &Percept, id: &str) -> Result<()> {
        check_distribution(
            "percept belief",
            percept.label_belief.values().copied(),
            1e-9,
        )?;
        let position = self.clamp(percept.position);
        let anchor = self.get_mut(id)?;
        anchor.label_belief = percept.label_belief.clone();
        anchor.attributes = percept.attributes.clone();
        anchor.position = position;
        anchor.last_seen = percept.time;
        Ok(())
    }

    fn clamp(&self, p: [f64; 3]) -> [f64; 3] {
        let g = &self.grid;
        let dims = g.dims();
        let mut out = p;
        for axis in 0..3 {
            let lo = g.origin[axis];
            // stay strictly inside the last cell
            let hi = lo + dims[axis] as f64 * g.cell_size - g.cell_size * 1e-6;
            out[axis] = p[axis].clamp(lo, hi);
        }
        out
    }

    /// Nearest anchor within the match radius whose attribute overlap is at
    /// least the threshold; ties go to the smaller id.
    pub fn match_percept(&self, percept: &Percept) -> Option<&str> {
        self.match_excluding(percept, &BTreeSet::new())
    }

    fn match_excluding(&self, percept: &Percept, taken: &BTreeSet<String>) -> Option<&str> {
        let mut best: Option<(&str, f64)> = None;
        for a in self.anchors.values() {
            if taken.contains(&a.id) || self.held.as_deref() == Some(a.id.as_str()) {
                continue;
            }
            let d = distance(a.position, percept.position) / self.grid.cell_size;
            if d > self.matching.radius
                || jaccard(&a.attributes, &percept.attributes) < self.matching.overlap
            {
                continue;
            }
            // anchors iterate in id order, so a strict comparison keeps the
            // smaller id on equal distance (up to rounding of positions)
            if best.is_none_or(|(_, bd)| d < bd - 1e-9) {
                best = Some((&a.id, d));
            }
        }
        best.map(|(id, _)| id)
    }

    /// Matches a frame of percepts one by one (each anchor at most once per
    /// frame), re-acquiring matches and acquiring the rest. Returns the
    /// anchor id assigned to each percept.
    pub fn perceive(&mut self, percepts: &[Percept], time: u64) -> Result<Vec<String>> {
        let mut taken = BTreeSet::new();
        let mut ids = Vec::with_capacity(percepts.len());
        for p in percepts {
            let id = match self.match_excluding(p, &taken).map(str::to_string) {
                Some(id) => {
                    self.re_acquire(p, &id)?;
                    id
                }
                None => self.acquire(p)?,
            };
            taken.insert(id.clone());
            ids.push(id);
        }
        self.time = time;
        Ok(ids)
    }

    /// Per-anchor argmax labels.
    pub fn default_selection(&self) -> BTreeMap<String, String> {
        self.anchors
            .values()
            .map(|a| (a.id.clone(), a.top_label().to_string()))
            .collect()
    }
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    libm::sqrt((0..3).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum())
}

/// Jaccard overlap; two empty sets overlap fully.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Grid-world scene with one object per anchor labelled by `selection`
/// (argmax labels when `None`). The held anchor, if any, is the held object.
pub fn anchors_to_scene(
    space: &AnchorSpace,
    selection: Option<&BTreeMap<String, String>>,
) -> Result<SceneState> {
    let mut objects = Vec::with_capacity(space.len());
    let mut cells = BTreeMap::new();
    for a in space.anchors() {
        let label = match selection {
            Some(sel) => sel
                .get(&a.id)
                .ok_or_else(|| Error::UnknownAnchor(format!("selection lacks {}", a.id)))?
                .clone(),
            None => a.top_label().to_string(),
        };
        let cell = space.grid.cell_of(a.position)?;
        if space.held() != Some(a.id.as_str()) {
            if let Some(other) = cells.insert(cell, a.id.clone()) {
                return Err(Error::CellCollision(other, a.id.clone()));
            }
        }
        objects.push(ObjectInstance {
            id: a.id.clone(),
            class_noun: label,
            attributes: a.attributes.clone(),
            position: a.position,
        });
    }
    let scene = SceneState {
        grid_spec: space.grid.clone(),
        objects,
        held: space.held.clone(),
    };
    scene.validate(usize::MAX)?;
    Ok(scene)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Confusable classes per true class. A missing row means perfect
    /// classification.
    pub confusion: BTreeMap<String, Vec<(String, f64)>>,
    /// Range of the top label's mass when the row is not the identity.
    pub belief_band: (f64, f64),
    /// Standard deviation of the position noise in meters.
    pub position_jitter: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::noiseless(0)
    }
}

impl NoiseModel {
    pub fn noiseless(seed: u64) -> Self {
        NoiseModel {
            confusion: BTreeMap::new(),
            belief_band: (0.55, 0.9),
            position_jitter: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (noun, row) in &self.confusion {
            check_distribution(
                &format!("confusion row {noun}"),
                row.iter().map(|(_, p)| *p),
                1e-9,
            )?;
        }
        let (lo, hi) = self.belief_band;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "belief band ({lo}, {hi}) is not within (0, 1]"
            )));
        }
        if !(self.position_jitter >= 0.0 && self.position_jitter.is_finite()) {
            return Err(Error::InvalidConfig(
                "position jitter must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Draws a belief for an object of class `truth`: the top label is
    /// sampled from the confusion row, the runner-up is the true class (or,
    /// when the top label is correct, the next most likely confusable
    /// class), and the top mass is uniform in the belief band.
    pub fn belief(&self, truth: &str, rng: &mut rng::Rng) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        let row = match self.confusion.get(truth) {
            Some(row) if !row.iter().all(|(l, p)| l == truth || *p == 0.0) => row,
            _ => {
                out.insert(truth.to_string(), 1.0);
                return out;
            }
        };
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut top = row.last().map(|(l, _)| l.as_str()).unwrap_or(truth);
        for (l, p) in row {
            acc += p;
            if u < acc {
                top = l;
                break;
            }
        }
        let second = if top != truth {
            truth.to_string()
        } else {
            let mut others: Vec<&(String, f64)> =
                row.iter().filter(|(l, p)| l != truth && *p > 0.0).collect();
            others.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            others[0].0.clone()
        };
        let (lo, hi) = self.belief_band;
        let mass = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        if mass >= 1.0 {
            out.insert(top.to_string(), 1.0);
        } else {
            out.insert(top.to_string(), mass);
            out.insert(second, 1.0 - mass);
        }
        out
    }
}

fn gaussian(rng: &mut rng::Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

/// One percept per placed object of the ground-truth scene, in scene order.
pub fn simulate_perception(
    scene: &SceneState,
    noise: &NoiseModel,
    time: u64,
) -> Result<Vec<Percept>> {
    scene.validate(usize::MAX)?;
    noise.validate()?;
    Ok(scene
        .placed()
        .enumerate()
        .map(|(i, o)| {
            let mut rng = rng::stream(rng::derive(noise.seed, 0xa5, time), i as u64, 0);
            let label_belief = noise.belief(&o.class_noun, &mut rng);
            let mut position = o.position;
            if noise.position_jitter > 0.0 {
                for p in &mut position {
                    *p += noise.position_jitter * gaussian(&mut rng);
                }
            }
            Percept {
                label_belief,
                attributes: o.attributes.clone(),
                position,
                time,
                source: Some(o.id.clone()),
            }
        })
        .collect())
}
