//! Command-line interface.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use reground_core::anchor::AnchorSpace;
use reground_core::belief::resolve;
use reground_core::nn::ParamStore;
use reground_core::parser::parse;
use reground_core::rng;
use reground_core::session::{showcase_space, Session};
use reground_core::synth::{generate_sample, Sample, ScenarioId};
use reground_core::trainer::{evaluate, train_curriculum_from};
use reground_core::{GridSpec, Vocabulary};

use crate::config::Config;
use crate::server::{initial_space, AppState, CreateRequest, ServerSetup};
use crate::{dataset, repl, report, snapshot, weights};

#[derive(Debug, Parser)]
#[command(
    name = "reground",
    version,
    about = "Ground pick/place instructions in a voxel world"
)]
pub struct Cli {
    /// TOML configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a constrained training file and an unconstrained test file.
    GenerateData(GenerateArgs),
    /// Run the curriculum and write weights and a learning curve.
    Train(TrainArgs),
    /// Error rate of a weight file on a dataset file.
    Eval(EvalArgs),
    /// Print the program graph of each instruction (arguments or stdin lines).
    Parse(ParseArgs),
    /// Posterior over anchor labels for one instruction.
    Resolve(ResolveArgs),
    /// Simulate perception of a scripted feed and write the anchor snapshot.
    Perceive(PerceiveArgs),
    /// Interactive session on the terminal.
    Repl(SessionArgs),
    /// HTTP session service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scenario 1 to 5, or 6 for the uniform mixture.
    #[arg(long, default_value_t = 6)]
    pub scenario: u8,
    #[arg(long, default_value_t = 1000)]
    pub train: usize,
    #[arg(long, default_value_t = 200)]
    pub test: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Overrides the configured training seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "weights.bin")]
    pub weights: PathBuf,
    #[arg(long, default_value = "curve.tsv")]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    pub instructions: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ResolveArgs {
    #[arg(long)]
    pub weights: PathBuf,
    /// Anchor snapshot (JSON); the showcase scene when absent.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    pub instruction: String,
}

#[derive(Debug, Args)]
pub struct PerceiveArgs {
    /// Perception feed (JSON): frames of ground-truth scenes.
    #[arg(long)]
    pub feed: PathBuf,
    /// Overrides the configured noise seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SessionArgs {
    #[arg(long)]
    pub weights: PathBuf,
    /// Start from this anchor snapshot.
    #[arg(long, conflicts_with = "seed")]
    pub snapshot: Option<PathBuf>,
    /// Start from a generated scene with this seed, seen through the noise model.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, requires = "seed")]
    pub scenario: Option<u8>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
}

pub fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let config = Config::load_or_default(cli.config.as_deref())?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::GenerateData(a) => generate_data(&config, &a, &mut out),
        Command::Train(a) => train(&config, &a, &mut out),
        Command::Eval(a) => eval(&config, &a, &mut out),
        Command::Parse(a) => parse_cmd(&config, &a, std::io::stdin().lock(), &mut out),
        Command::Resolve(a) => resolve_cmd(&config, &a, &mut out),
        Command::Perceive(a) => perceive(&config, &a, &mut out),
        Command::Repl(a) => {
            let mut session = open_session(&config, &a)?;
            writeln!(
                out,
                "{} anchors; type an instruction or :help",
                session.space().len()
            )?;
            repl::run(&mut session, std::io::stdin().lock(), &mut out, true)
        }
        Command::Serve(a) => serve(&config, &a),
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

pub fn generate_data(
    config: &Config,
    a: &GenerateArgs,
    out: &mut impl Write,
) -> anyhow::Result<()> {
    let vocab = config.vocabulary()?;
    let grid = config.grid()?;
    let generation = config.generation();
    let constraints = config.constraints(&vocab, &grid)?;
    let scenario = ScenarioId::new(a.scenario)?;
    std::fs::create_dir_all(&a.out_dir)?;
    for (name, count, stream, constrained) in [
        ("train", a.train, 0x7a, true),
        ("test", a.test, 0x7e, false),
    ] {
        let samples: Vec<Sample> = (0..count)
            .map(|i| {
                let seed = rng::derive(a.seed, stream, i as u64);
                generate_sample(
                    scenario,
                    constrained.then_some(&constraints),
                    &vocab,
                    &grid,
                    &generation,
                    seed,
                )
            })
            .collect::<Result<_, _>>()?;
        let path = a.out_dir.join(format!("{name}.jsonl"));
        let mut f = create(&path)?;
        let h = dataset::header(&vocab, &grid, count, a.seed, constrained);
        dataset::write_dataset(&mut f, &h, &samples, &vocab)?;
        f.flush()?;
        writeln!(out, "wrote {count} samples to {}", path.display())?;
    }
    Ok(())
}

pub fn train(config: &Config, a: &TrainArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let vocab = config.vocabulary()?;
    let grid = config.grid()?;
    let mut curriculum = config.curriculum()?;
    if let Some(seed) = a.seed {
        curriculum.seed = seed;
    }
    let constraints = config.constraints(&vocab, &grid)?;
    let mut params = ParamStore::init(
        &vocab,
        &grid,
        rng::derive(curriculum.seed, 0x1a, 0),
        curriculum.init,
    );
    let mut curve = report::CurveWriter::new(
        create(&a.report)?,
        curriculum.stop_threshold,
        curriculum.max_samples,
    )?;
    let mut failure = None;
    let report = train_curriculum_from(
        &curriculum,
        &vocab,
        &grid,
        Some(&constraints),
        &mut params,
        |stage, _| {
            if failure.is_none() {
                failure = stage.points.iter().try_for_each(|p| curve.append(p)).err();
            }
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    curve.into_inner().flush()?;
    weights::save(&a.weights, &params, &vocab, &grid)?;
    write!(out, "{}", report::summary(&report))?;
    writeln!(out, "weights written to {}", a.weights.display())?;
    Ok(())
}

fn load_weights(
    config: &Config,
    path: &Path,
) -> anyhow::Result<(Vocabulary, ParamStore, GridSpec)> {
    let vocab = config.vocabulary()?;
    let (params, grid) = weights::load(path, &vocab)?;
    if grid != config.grid()? {
        bail!(
            "{} was trained on a different grid than the configured one",
            path.display()
        );
    }
    Ok((vocab, params, grid))
}

pub fn eval(config: &Config, a: &EvalArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let (vocab, params, grid) = load_weights(config, &a.weights)?;
    let file = File::open(&a.data).with_context(|| format!("opening {}", a.data.display()))?;
    let (header, samples) = dataset::read_dataset(BufReader::new(file), &vocab)?;
    if header.grid != grid {
        bail!("dataset grid differs from the weights' grid");
    }
    writeln!(out, "samples\t{}", samples.len())?;
    writeln!(out, "error\t{}", evaluate(&params, &vocab, &samples)?)?;
    for s in ScenarioId::all() {
        let subset: Vec<Sample> = samples
            .iter()
            .filter(|x| x.scenario == s)
            .cloned()
            .collect();
        if !subset.is_empty() {
            writeln!(
                out,
                "scenario {s}\t{}\t{}",
                subset.len(),
                evaluate(&params, &vocab, &subset)?
            )?;
        }
    }
    Ok(())
}

pub fn parse_cmd(
    config: &Config,
    a: &ParseArgs,
    stdin: impl BufRead,
    out: &mut impl Write,
) -> anyhow::Result<()> {
    let vocab = config.vocabulary()?;
    let lines: Vec<String> = if a.instructions.is_empty() {
        stdin.lines().collect::<Result<_, _>>()?
    } else {
        a.instructions.clone()
    };
    let mut failed = 0;
    for text in lines.iter().map(|l| l.trim()).filter(|l| !l.is_empty()) {
        match parse(text, &vocab) {
            Ok(g) => writeln!(out, "{}", g.to_text(&vocab))?,
            Err(e) => {
                failed += 1;
                writeln!(out, "error: {e}")?;
            }
        }
    }
    if failed > 0 {
        bail!("{failed} instruction(s) did not parse");
    }
    Ok(())
}

pub fn write_anchors(out: &mut impl Write, space: &AnchorSpace) -> anyhow::Result<()> {
    for a in space.anchors() {
        let mut beliefs: Vec<(&String, &f64)> = a.label_belief.iter().collect();
        beliefs.sort_by(|x, y| y.1.total_cmp(x.1).then(x.0.cmp(y.0)));
        let beliefs: Vec<String> = beliefs.iter().map(|(l, p)| format!("{l}={p}")).collect();
        let cell = space.grid.cell_of(a.position)?;
        let held = if space.held() == Some(a.id.as_str()) {
            "\theld"
        } else {
            ""
        };
        writeln!(
            out,
            "anchor\t{}\t{}\t{}\t[{}]{held}",
            a.id,
            cell,
            beliefs.join(" "),
            a.attributes.iter().cloned().collect::<Vec<_>>().join(" ")
        )?;
    }
    Ok(())
}

/// Line report of a posterior: tab-separated records, one per line.
pub fn resolve_report(
    space: &AnchorSpace,
    text: &str,
    vocab: &Vocabulary,
    params: &ParamStore,
    options: reground_core::belief::ResolveOptions,
    out: &mut impl Write,
) -> anyhow::Result<()> {
    let graph = parse(text, vocab)?;
    let post = resolve(space, &graph, params, vocab, None, options)?;
    writeln!(out, "instruction\t{text}")?;
    writeln!(out, "graph\t{}", graph.to_text(vocab))?;
    writeln!(out, "configurations\t{}", post.configurations.len())?;
    writeln!(out, "degenerate\t{}", post.degenerate)?;
    for (i, c) in post.configurations.iter().enumerate() {
        let labels: Vec<String> = c
            .assignment
            .iter()
            .map(|(id, l)| format!("{id}={l}"))
            .collect();
        writeln!(
            out,
            "config\t{i}\t{}\t{}\t{}\t{}",
            post.config_prior[i],
            post.likelihood[i],
            post.config_posterior[i],
            labels.join(" ")
        )?;
    }
    for (id, dist) in &post.anchors {
        let prior = &post.anchor_prior[id];
        for (label, p) in dist {
            writeln!(out, "label\t{id}\t{label}\t{}\t{p}", prior[label])?;
        }
    }
    for (id, m) in &post.grounding_mass {
        writeln!(out, "grounding\t{id}\t{m}")?;
    }
    writeln!(
        out,
        "map\t{}",
        post.map_grounding.as_deref().unwrap_or("none")
    )?;
    Ok(())
}

pub fn resolve_cmd(config: &Config, a: &ResolveArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let (vocab, params, grid) = load_weights(config, &a.weights)?;
    let space = match &a.snapshot {
        Some(p) => snapshot::read_snapshot(p)?,
        None => showcase_space(&grid)?,
    };
    if space.grid != grid {
        bail!("snapshot grid differs from the weights' grid");
    }
    resolve_report(
        &space,
        &a.instruction,
        &vocab,
        &params,
        config.session().resolve,
        out,
    )
}

pub fn perceive(config: &Config, a: &PerceiveArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let mut noise = config.noise_model();
    if let Some(seed) = a.seed {
        noise.seed = seed;
    }
    let feed = snapshot::read_feed(&a.feed)?;
    let space = snapshot::run_feed(&feed, &noise, &config.matching())?;
    snapshot::write_snapshot(&a.out, &space)?;
    write_anchors(out, &space)
}

fn setup(config: &Config, weights_path: &Path) -> anyhow::Result<ServerSetup> {
    let (vocab, params, grid) = load_weights(config, weights_path)?;
    Ok(ServerSetup {
        vocab,
        params,
        grid,
        session: config.session(),
        generation: config.generation(),
        noise: config.noise_model(),
        matching: config.matching(),
    })
}

pub fn open_session(config: &Config, a: &SessionArgs) -> anyhow::Result<Session> {
    let setup = setup(config, &a.weights)?;
    let req = match (&a.snapshot, a.seed) {
        (Some(p), _) => CreateRequest {
            snapshot: Some(snapshot::read_snapshot(p)?),
            ..CreateRequest::default()
        },
        (None, Some(seed)) => CreateRequest {
            seed: Some(seed),
            scenario: a.scenario,
            ..CreateRequest::default()
        },
        (None, None) => CreateRequest {
            fixture: Some("showcase".into()),
            ..CreateRequest::default()
        },
    };
    let space = initial_space(&setup, &req)?;
    Ok(Session::new(
        setup.vocab,
        setup.params,
        space,
        setup.session,
    )?)
}

pub fn serve(config: &Config, a: &ServeArgs) -> anyhow::Result<()> {
    let state = AppState::new(setup(config, &a.weights)?);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port)).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        crate::server::serve(listener, state).await
    })
}
