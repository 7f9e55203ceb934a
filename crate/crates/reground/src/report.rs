//! Learning-curve files: tab-separated, one evaluation per line, appended as
//! training progresses.

use std::io::{BufRead, Write};

use anyhow::{bail, Context};

use reground_core::synth::ScenarioId;
use reground_core::trainer::{CurvePoint, TrainReport};

const COLUMNS: &str = "stage\tscenario\tsamples_seen\terror\tema";

pub struct CurveWriter<W: Write> {
    out: W,
}

impl<W: Write> CurveWriter<W> {
    pub fn new(mut out: W, stop_threshold: f64, max_samples: usize) -> anyhow::Result<Self> {
        writeln!(
            out,
            "# stop_threshold={stop_threshold} max_samples={max_samples}"
        )?;
        writeln!(out, "{COLUMNS}")?;
        out.flush()?;
        Ok(CurveWriter { out })
    }

    pub fn append(&mut self, p: &CurvePoint) -> anyhow::Result<()> {
        writeln!(
            self.out,
            "{}\t{}\t{}\t{}\t{}",
            p.stage, p.scenario, p.samples_seen, p.error, p.ema
        )?;
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

fn field<T: std::str::FromStr>(parts: &[&str], i: usize, line: usize) -> anyhow::Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    parts
        .get(i)
        .with_context(|| format!("line {line}: missing column {i}"))?
        .parse()
        .with_context(|| format!("line {line}: column {i}"))
}

/// Rebuilds the training report from a curve file.
pub fn read_curve(input: impl BufRead) -> anyhow::Result<TrainReport> {
    let mut lines = input.lines();
    let meta = lines.next().context("empty curve file")??;
    let mut threshold = None;
    let mut max_samples = None;
    for kv in meta.trim_start_matches('#').split_whitespace() {
        match kv.split_once('=') {
            Some(("stop_threshold", v)) => threshold = Some(v.parse::<f64>()?),
            Some(("max_samples", v)) => max_samples = Some(v.parse::<usize>()?),
            _ => {}
        }
    }
    let (Some(threshold), Some(max_samples)) = (threshold, max_samples) else {
        bail!("curve file lacks its metadata line");
    };
    if lines.next().transpose()?.as_deref() != Some(COLUMNS) {
        bail!("curve file lacks its column header");
    }
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let n = i + 3;
        let parts: Vec<&str> = line.split('\t').collect();
        points.push(CurvePoint {
            stage: field(&parts, 0, n)?,
            scenario: ScenarioId::new(field(&parts, 1, n)?)?,
            samples_seen: field(&parts, 2, n)?,
            error: field(&parts, 3, n)?,
            ema: field(&parts, 4, n)?,
        });
    }
    Ok(TrainReport::from_points(&points, threshold, max_samples)?)
}

/// Per-stage summary lines for the terminal.
pub fn summary(report: &TrainReport) -> String {
    let mut s = String::new();
    for st in &report.stages {
        let reached = match st.samples_to_threshold {
            Some(n) => format!("threshold after {n} samples"),
            None => format!("timed out after {} samples", st.samples_seen()),
        };
        s.push_str(&format!(
            "stage {} (scenario {}): {reached}, last error {:.4}\n",
            st.stage,
            st.scenario,
            st.final_error().unwrap_or(f64::NAN)
        ));
    }
    s
}
