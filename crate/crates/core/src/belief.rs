//! Revision of anchor label beliefs from the grounding of an instruction.
//!
//! Every anchor keeps its `k` most likely labels. Each joint assignment
//! (configuration) gets prior `prod p(l_j)` and likelihood equal to the Locate
//! mass the grounder puts on the target under that assignment. Per-anchor
//! posteriors are the marginals of the normalized product.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::anchor::{anchors_to_scene, ranked_labels, AnchorSpace};
use crate::error::{Error, Result};
use crate::graph::{Node, ProgramGraph};
use crate::nn::{execute, CellDistribution, ParamStore};
use crate::vocab::Vocabulary;
use crate::world::encode_scene;

pub const DEFAULT_TOP_K: usize = 2;
pub const DEFAULT_ANCHOR_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabelConfiguration {
    pub assignment: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationSet {
    pub k: usize,
    /// Anchor ids in enumeration order.
    pub anchors: Vec<String>,
    /// Candidate labels of each anchor with their belief, best first.
    pub candidates: Vec<Vec<(String, f64)>>,
    pub configurations: Vec<LabelConfiguration>,
}

/// Cartesian product of every anchor's top-`k` labels. The last anchor (in
/// id order) varies fastest; labels follow belief order.
pub fn enumerate_configurations(
    space: &AnchorSpace,
    k: usize,
    cap: usize,
) -> Result<ConfigurationSet> {
    if k == 0 {
        return Err(Error::InvalidConfig("top-k must be at least 1".into()));
    }
    if space.len() > cap {
        return Err(Error::TooManyAnchors(space.len(), cap));
    }
    let mut anchors = Vec::with_capacity(space.len());
    let mut candidates = Vec::with_capacity(space.len());
    for a in space.anchors() {
        let ranked: Vec<(String, f64)> = ranked_labels(&a.label_belief)
            .into_iter()
            .take(k)
            .map(|(l, p)| (l.to_string(), p))
            .collect();
        if ranked.is_empty() {
            return Err(Error::InvalidScene(alloc::format!(
                "anchor {} has no label belief",
                a.id
            )));
        }
        anchors.push(a.id.clone());
        candidates.push(ranked);
    }
    let total: usize = candidates.iter().map(Vec::len).product();
    let mut configurations = Vec::with_capacity(total);
    let mut digits = alloc::vec![0usize; anchors.len()];
    for _ in 0..total {
        configurations.push(LabelConfiguration {
            assignment: anchors
                .iter()
                .zip(&candidates)
                .zip(&digits)
                .map(|((id, c), &d)| (id.clone(), c[d].0.clone()))
                .collect(),
        });
        for i in (0..digits.len()).rev() {
            digits[i] += 1;
            if digits[i] < candidates[i].len() {
                break;
            }
            digits[i] = 0;
        }
    }
    Ok(ConfigurationSet {
        k,
        anchors,
        candidates,
        configurations,
    })
}

/// Unnormalized prior: product of each anchor's belief in its assigned label.
pub fn config_prior(c: &LabelConfiguration, space: &AnchorSpace) -> Result<f64> {
    let mut p = 1.0;
    for a in space.anchors() {
        let label = c
            .assignment
            .get(&a.id)
            .ok_or_else(|| Error::UnknownAnchor(a.id.clone()))?;
        p *= a.label_belief.get(label).copied().unwrap_or(0.0);
    }
    Ok(p)
}

fn normalize(values: &[f64]) -> Option<Vec<f64>> {
    let total: f64 = values.iter().sum();
    if total > 0.0 && total.is_finite() {
        Some(values.iter().map(|v| v / total).collect())
    } else {
        None
    }
}

/// Priors of the whole set, renormalized after top-k truncation.
pub fn config_priors(set: &ConfigurationSet, space: &AnchorSpace) -> Result<Vec<f64>> {
    let raw = set
        .configurations
        .iter()
        .map(|c| config_prior(c, space))
        .collect::<Result<Vec<f64>>>()?;
    normalize(&raw).ok_or_else(|| Error::InvalidScene("configuration priors are all zero".into()))
}

/// Grounder evidence for one configuration: the likelihood and the Locate
/// mass on each placed anchor's cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    pub likelihood: f64,
    pub anchor_mass: BTreeMap<String, f64>,
}

fn evidence_from(
    space: &AnchorSpace,
    dist: &CellDistribution,
    target: Option<&str>,
) -> Result<Evidence> {
    let mut anchor_mass = BTreeMap::new();
    for a in space.anchors() {
        if space.held() == Some(a.id.as_str()) {
            continue;
        }
        anchor_mass.insert(a.id.clone(), dist.prob(space.grid.cell_of(a.position)?));
    }
    let likelihood = match target {
        Some(id) => {
            space.get(id)?;
            anchor_mass.get(id).copied().unwrap_or(0.0)
        }
        None => anchor_mass.values().sum(),
    };
    Ok(Evidence {
        likelihood: likelihood.clamp(0.0, 1.0),
        anchor_mass,
    })
}

/// Graph actually executed for grounding: placement programs are scored on
/// their referent.
pub fn scoring_graph(graph: &ProgramGraph) -> ProgramGraph {
    match graph.root() {
        Node::Position { .. } => graph.grounding_graph(),
        _ => graph.clone(),
    }
}

/// Runs the grounder on the scene implied by `c`.
pub fn config_likelihood(
    c: &LabelConfiguration,
    graph: &ProgramGraph,
    space: &AnchorSpace,
    params: &ParamStore,
    vocab: &Vocabulary,
    target: Option<&str>,
) -> Result<Evidence> {
    let scene = anchors_to_scene(space, Some(&c.assignment))?;
    let grid = encode_scene(&scene, vocab, None)?;
    let (dist, _) = execute(&scoring_graph(graph), &grid, params)?;
    evidence_from(space, &dist, target)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub configurations: Vec<LabelConfiguration>,
    pub config_prior: Vec<f64>,
    pub likelihood: Vec<f64>,
    pub config_posterior: Vec<f64>,
    /// Prior over each anchor's candidate labels (truncated belief,
    /// renormalized).
    pub anchor_prior: BTreeMap<String, BTreeMap<String, f64>>,
    pub anchors: BTreeMap<String, BTreeMap<String, f64>>,
    /// Posterior-weighted Locate mass per placed anchor.
    pub grounding_mass: BTreeMap<String, f64>,
    pub map_grounding: Option<String>,
    /// Every likelihood vanished; the posterior is the prior.
    pub degenerate: bool,
}

impl Posterior {
    /// Argmax label of an anchor's posterior; ties go to the smaller name.
    pub fn top_label(&self, id: &str) -> Option<&str> {
        crate::anchor::top_label(self.anchors.get(id)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolveOptions {
    pub k: usize,
    pub cap: usize,
}

impl Default for ResolveOptions {
    fn default() -> Self {
        ResolveOptions {
            k: DEFAULT_TOP_K,
            cap: DEFAULT_ANCHOR_CAP,
        }
    }
}

fn marginals(set: &ConfigurationSet, weights: &[f64]) -> BTreeMap<String, BTreeMap<String, f64>> {
    let mut out: BTreeMap<String, BTreeMap<String, f64>> = set
        .anchors
        .iter()
        .zip(&set.candidates)
        .map(|(id, cands)| {
            (
                id.clone(),
                cands.iter().map(|(l, _)| (l.clone(), 0.0)).collect(),
            )
        })
        .collect();
    for (c, w) in set.configurations.iter().zip(weights) {
        for (id, label) in &c.assignment {
            *out.get_mut(id)
                .and_then(|m| m.get_mut(label))
                .expect("enumerated label") += w;
        }
    }
    out
}

/// Posterior computation with a caller-supplied evidence function.
pub fn resolve_with(
    space: &AnchorSpace,
    options: ResolveOptions,
    mut scorer: impl FnMut(&LabelConfiguration) -> Result<Evidence>,
) -> Result<Posterior> {
    let set = enumerate_configurations(space, options.k, options.cap)?;
    let prior = config_priors(&set, space)?;
    let mut likelihood = Vec::with_capacity(prior.len());
    let mut evidence = Vec::with_capacity(prior.len());
    for c in &set.configurations {
        let e = scorer(c)?;
        likelihood.push(e.likelihood);
        evidence.push(e.anchor_mass);
    }
    let joint: Vec<f64> = prior.iter().zip(&likelihood).map(|(p, l)| p * l).collect();
    let (config_posterior, degenerate) = match normalize(&joint) {
        Some(p) => (p, false),
        None => (prior.clone(), true),
    };
    let mut grounding_mass: BTreeMap<String, f64> = BTreeMap::new();
    for (w, masses) in config_posterior.iter().zip(&evidence) {
        for (id, m) in masses {
            *grounding_mass.entry(id.clone()).or_insert(0.0) += w * m;
        }
    }
    let mut map_grounding: Option<(&String, f64)> = None;
    for (id, &m) in &grounding_mass {
        if map_grounding.is_none_or(|(_, best)| m > best) {
            map_grounding = Some((id, m));
        }
    }
    let map_grounding = map_grounding.map(|(id, _)| id.clone());
    Ok(Posterior {
        anchor_prior: marginals(&set, &prior),
        anchors: marginals(&set, &config_posterior),
        configurations: set.configurations,
        config_prior: prior,
        likelihood,
        config_posterior,
        grounding_mass,
        map_grounding,
        degenerate,
    })
}

/// Posterior over labels given that the instruction grounds on `target`
/// (or on some anchor when `target` is `None`).
pub fn resolve(
    space: &AnchorSpace,
    graph: &ProgramGraph,
    params: &ParamStore,
    vocab: &Vocabulary,
    target: Option<&str>,
    options: ResolveOptions,
) -> Result<Posterior> {
    let scoring = scoring_graph(graph);
    resolve_with(space, options, |c| {
        let scene = anchors_to_scene(space, Some(&c.assignment))?;
        let grid = encode_scene(&scene, vocab, None)?;
        let (dist, _) = execute(&scoring, &grid, params)?;
        evidence_from(space, &dist, target)
    })
}

/// Writes the posterior back into the anchors' beliefs. The candidate labels
/// of an anchor share the mass they held before, redistributed by the
/// posterior; other labels keep their mass. Ids are left untouched.
pub fn apply_posterior(space: &AnchorSpace, posterior: &Posterior) -> Result<AnchorSpace> {
    let mut out = space.clone();
    for (id, dist) in &posterior.anchors {
        let anchor = out.get_mut(id)?;
        let mass: f64 = dist
            .keys()
            .map(|l| anchor.label_belief.get(l).copied().unwrap_or(0.0))
            .sum();
        for (label, p) in dist {
            anchor.label_belief.insert(label.clone(), p * mass);
        }
    }
    Ok(out)
}
