//! Anchor snapshots and scripted perception feeds, both JSON.

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use reground_core::anchor::{simulate_perception, AnchorSpace, MatchConfig, NoiseModel};
use reground_core::SceneState;

pub fn read_snapshot(path: &Path) -> anyhow::Result<AnchorSpace> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let space: AnchorSpace =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    space.validate()?;
    Ok(space)
}

pub fn write_snapshot(path: &Path, space: &AnchorSpace) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(space)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Ground-truth scenes at successive time indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptionFeed {
    pub frames: Vec<Frame>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub time: u64,
    pub scene: SceneState,
}

pub fn read_feed(path: &Path) -> anyhow::Result<PerceptionFeed> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

/// Anchors left after perceiving every frame of the feed in order.
pub fn run_feed(
    feed: &PerceptionFeed,
    noise: &NoiseModel,
    matching: &MatchConfig,
) -> anyhow::Result<AnchorSpace> {
    let grid = feed
        .frames
        .first()
        .map(|f| f.scene.grid_spec.clone())
        .context("feed has no frames")?;
    let mut space = AnchorSpace::new(grid);
    space.matching = matching.clone();
    for frame in &feed.frames {
        let percepts = simulate_perception(&frame.scene, noise, frame.time)?;
        space.perceive(&percepts, frame.time)?;
    }
    Ok(space)
}
