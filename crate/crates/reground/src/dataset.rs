//! JSON-lines sample files: one header line, then one sample per line.

use std::io::{BufRead, Write};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use reground_core::synth::{Sample, ScenarioId};
use reground_core::{Cell, GridSpec, ProgramGraph, SceneState, Vocabulary};

pub const FORMAT: &str = "reground-dataset";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    /// Hex fingerprint of the vocabulary the samples use.
    pub vocabulary: String,
    pub grid: GridSpec,
    pub count: usize,
    pub seed: u64,
    pub constrained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Record {
    seed: u64,
    scenario: u8,
    instruction: String,
    graph: String,
    target: Cell,
    scene: SceneState,
}

pub fn header(
    vocab: &Vocabulary,
    grid: &GridSpec,
    count: usize,
    seed: u64,
    constrained: bool,
) -> Header {
    Header {
        format: FORMAT.into(),
        version: FORMAT_VERSION,
        vocabulary: format!("{:016x}", vocab.fingerprint()),
        grid: grid.clone(),
        count,
        seed,
        constrained,
    }
}

pub fn write_dataset(
    out: &mut impl Write,
    header: &Header,
    samples: &[Sample],
    vocab: &Vocabulary,
) -> anyhow::Result<()> {
    serde_json::to_writer(&mut *out, header)?;
    out.write_all(b"\n")?;
    for s in samples {
        let r = Record {
            seed: s.seed,
            scenario: s.scenario.get(),
            instruction: s.instruction.clone(),
            graph: s.gold_graph.to_text(vocab),
            target: s.gold_target,
            scene: s.scene.clone(),
        };
        serde_json::to_writer(&mut *out, &r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_dataset(
    input: impl BufRead,
    vocab: &Vocabulary,
) -> anyhow::Result<(Header, Vec<Sample>)> {
    let mut lines = input.lines();
    let first = lines.next().context("empty dataset")??;
    let header: Header = serde_json::from_str(&first).context("dataset header")?;
    if header.format != FORMAT || header.version != FORMAT_VERSION {
        bail!(
            "unsupported dataset format {} v{}",
            header.format,
            header.version
        );
    }
    if header.vocabulary != format!("{:016x}", vocab.fingerprint()) {
        bail!("dataset was generated for a different vocabulary");
    }
    let mut samples = Vec::with_capacity(header.count);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: Record = serde_json::from_str(&line).with_context(|| format!("sample {}", i + 1))?;
        samples.push(Sample {
            scene: r.scene,
            instruction: r.instruction,
            gold_graph: ProgramGraph::from_text(&r.graph, vocab)?,
            gold_target: r.target,
            scenario: ScenarioId::new(r.scenario)?,
            seed: r.seed,
        });
    }
    if samples.len() != header.count {
        bail!(
            "header announces {} samples, found {}",
            header.count,
            samples.len()
        );
    }
    Ok((header, samples))
}
