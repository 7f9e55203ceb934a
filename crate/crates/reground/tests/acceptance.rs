//! Acceptance suite. Runs every check, prints one PASS/FAIL line per check
//! and exits non-zero if any failed.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use reground::config::Config;
use reground_core::anchor::{Anchor, AnchorSpace};
use reground_core::belief::{resolve_with, Evidence, ResolveOptions};
use reground_core::nn::{backprop, execute, InitScheme, ParamStore};
use reground_core::parser::parse;
use reground_core::rng;
use reground_core::session::{showcase_space, ActionCommand, Session, SHOWCASE_SCRIPT};
use reground_core::synth::{
    generate_sample, random_instruction, render_instruction, Sample, ScenarioId,
};
use reground_core::trainer::{evaluate, predict, train_curriculum_from};
use reground_core::world::encode_scene;
use reground_core::{
    Cell, GridSpec, Node, ObjectInstance, Preposition, ProgramGraph, SceneState, Vocabulary,
};

struct Verdict {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(name: &'static str, pass: bool, detail: String) -> Verdict {
    Verdict { name, pass, detail }
}

fn desk_config() -> Config {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml");
    Config::load(&path).expect("desk configuration")
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

// ---------------------------------------------------------------- gradients

fn small_vocab() -> Vocabulary {
    let words = |ws: &[&str]| ws.iter().map(|w| w.to_string()).collect::<Vec<_>>();
    Vocabulary::new(
        words(&["apple", "mug", "ball", "box", "can"]),
        words(&["red", "black", "blue"]),
        vec![
            Preposition::new("right-of", "to the right of", [1, 0, 0]),
            Preposition::new("on", "on", [0, 0, 1]),
        ],
        Vocabulary::desk().verbs().clone(),
    )
    .unwrap()
}

fn random_scene(vocab: &Vocabulary, grid: &GridSpec, r: &mut rng::Rng) -> SceneState {
    let mut cells: Vec<Cell> = grid.cells().collect();
    cells.shuffle(r);
    let n = r.gen_range(3..=7);
    let objects = cells[..n]
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let noun = &vocab.nouns()[r.gen_range(0..vocab.nouns().len())];
            let k = r.gen_range(0..=2);
            let attrs: Vec<&str> = vocab
                .adjectives()
                .choose_multiple(r, k)
                .map(String::as_str)
                .collect();
            ObjectInstance::new(&format!("o{i}"), noun, attrs, grid.cell_center(c))
        })
        .collect();
    SceneState::new(grid.clone(), objects, None).unwrap()
}

fn relu_masks(trace: &reground_core::nn::ExecutionTrace) -> Vec<Vec<bool>> {
    trace
        .nodes()
        .iter()
        .filter_map(|n| n.pre.as_ref().map(|p| p.iter().map(|&x| x > 0.0).collect()))
        .collect()
}

fn gradient_check() -> Verdict {
    let start = Instant::now();
    let vocab = small_vocab();
    let grid = GridSpec::new(4, 4, 2, 0.1).unwrap();
    assert_eq!(vocab.feature_width(), 8);
    let eps = 1e-5;
    let detect_len = vocab.feature_width() * (vocab.feature_width() + 1);
    // [detect, shift] x [checked, within tolerance]
    let mut tally = [[0usize; 2]; 2];
    let mut excluded = 0usize;
    let mut with_shift = 0;
    let mut with_and = 0;
    let graphs = 40;
    for g in 0..graphs {
        let mut r = rng::stream(0x9c4ec, g, 0);
        // every fourth graph is forced to contain a Shift
        let chain = (g % 3) as usize + usize::from(g % 4 == 0);
        let graph = loop {
            let graph = random_instruction(&vocab, &mut r, chain)
                .compile()
                .grounding_graph();
            if g % 4 != 0 || graph.count(|n| matches!(n, Node::Shift(..))) > 0 {
                break graph;
            }
        };
        with_shift += usize::from(graph.count(|n| matches!(n, Node::Shift(..))) > 0);
        with_and += usize::from(graph.count(|n| matches!(n, Node::And(..))) > 0);
        let scene = random_scene(&vocab, &grid, &mut r);
        let input = encode_scene(&scene, &vocab, None).unwrap();
        let scheme = if g % 2 == 0 {
            InitScheme::Symmetric
        } else {
            InitScheme::NonNegative
        };
        let mut params = ParamStore::init(&vocab, &grid, rng::derive(0x9c4ec, g, 1), scheme);
        let gold = grid.cell_at(r.gen_range(0..grid.cell_count()));
        let (_, trace) = execute(&graph, &input, &params).unwrap();
        let base_masks = relu_masks(&trace);
        let grads = backprop(&trace, &params, gold).unwrap();
        for j in 0..params.len() {
            let orig = params.values()[j];
            params.values_mut()[j] = orig + eps;
            let (_, plus) = execute(&graph, &input, &params).unwrap();
            params.values_mut()[j] = orig - eps;
            let (_, minus) = execute(&graph, &input, &params).unwrap();
            params.values_mut()[j] = orig;
            let numeric = (plus.loss(gold) - minus.loss(gold)) / (2.0 * eps);
            let analytic = grads.values[j];
            if numeric == 0.0 && analytic == 0.0 {
                continue;
            }
            if relu_masks(&plus) != base_masks || relu_masks(&minus) != base_masks {
                excluded += 1;
                continue;
            }
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            let kind = usize::from(j >= detect_len);
            tally[kind][0] += 1;
            tally[kind][1] += usize::from(rel < 1e-4);
        }
    }
    let elapsed = start.elapsed();
    let rate = |t: [usize; 2]| {
        if t[0] == 0 {
            0.0
        } else {
            t[1] as f64 / t[0] as f64
        }
    };
    let (d, s) = (rate(tally[0]), rate(tally[1]));
    let pass = d >= 0.99
        && s >= 0.99
        && with_shift > 0
        && with_and > 0
        && elapsed < Duration::from_secs(60);
    verdict(
        "gradient check",
        pass,
        format!(
            "{graphs} graphs ({with_shift} with shift, {with_and} with and); detect {}/{} ({:.4}), shift {}/{} ({:.4}) within 1e-4; {excluded} relu-kink params excluded; {}",
            tally[0][1], tally[0][0], d, tally[1][1], tally[1][0], s, secs(elapsed)
        ),
    )
}

// ---------------------------------------------------------- belief oracle

const LABELS: [&str; 6] = ["apple", "ball", "box", "cup", "mug", "pot"];

fn random_space(r: &mut rng::Rng) -> AnchorSpace {
    let grid = GridSpec::desk();
    let mut space = AnchorSpace::new(grid.clone());
    let mut cells: Vec<Cell> = grid.cells().collect();
    cells.shuffle(r);
    let n = r.gen_range(1..=4);
    for (i, &cell) in cells.iter().take(n).enumerate() {
        let k = r.gen_range(2..=4);
        let labels: Vec<&str> = LABELS.choose_multiple(r, k).copied().collect();
        let raw: Vec<f64> = labels.iter().map(|_| r.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        space
            .insert(Anchor {
                id: format!("x-{}", i + 1),
                label_belief: labels
                    .iter()
                    .zip(&raw)
                    .map(|(l, p)| (l.to_string(), p / total))
                    .collect(),
                attributes: BTreeSet::new(),
                position: grid.cell_center(cell),
                last_seen: 0,
            })
            .unwrap();
    }
    space
}

struct OracleResult {
    configs: BTreeMap<Vec<String>, (f64, f64)>,
    marginals: BTreeMap<String, BTreeMap<String, f64>>,
    grounding: BTreeMap<String, f64>,
    map: Option<String>,
}

/// Brute force over bit patterns: bit i picks the runner-up label of anchor i.
fn oracle(
    space: &AnchorSpace,
    fixture: &BTreeMap<Vec<String>, (f64, BTreeMap<String, f64>)>,
) -> OracleResult {
    let anchors: Vec<&Anchor> = space.anchors().collect();
    let top2: Vec<Vec<(String, f64)>> = anchors
        .iter()
        .map(|a| {
            let mut l: Vec<(String, f64)> = a
                .label_belief
                .iter()
                .map(|(k, v)| (k.clone(), *v))
                .collect();
            l.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then_with(|| x.0.cmp(&y.0)));
            l.truncate(2);
            l
        })
        .collect();
    let n = anchors.len();
    let mut rows = Vec::new();
    for bits in 0..(1usize << n) {
        let mut key = Vec::new();
        let mut prior = 1.0;
        for (i, cands) in top2.iter().enumerate() {
            let (label, p) = &cands[(bits >> (n - 1 - i)) & 1];
            key.push(label.clone());
            prior *= p;
        }
        rows.push((key, prior));
    }
    let z_prior: f64 = rows.iter().map(|r| r.1).sum();
    let joint: Vec<f64> = rows
        .iter()
        .map(|(k, p)| p / z_prior * fixture[k].0)
        .collect();
    let z: f64 = joint.iter().sum();
    let mut configs = BTreeMap::new();
    let mut marginals: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut grounding: BTreeMap<String, f64> = BTreeMap::new();
    for ((key, p), j) in rows.iter().zip(&joint) {
        let post = if z > 0.0 { j / z } else { p / z_prior };
        configs.insert(key.clone(), (p / z_prior, post));
        for (a, label) in anchors.iter().zip(key) {
            *marginals
                .entry(a.id.clone())
                .or_default()
                .entry(label.clone())
                .or_insert(0.0) += post;
        }
        for (id, m) in &fixture[key].1 {
            *grounding.entry(id.clone()).or_insert(0.0) += post * m;
        }
    }
    let mut map: Option<(String, f64)> = None;
    for (id, m) in &grounding {
        if map.as_ref().is_none_or(|(_, best)| *m > *best) {
            map = Some((id.clone(), *m));
        }
    }
    OracleResult {
        configs,
        marginals,
        grounding,
        map: map.map(|x| x.0),
    }
}

fn fixture_key(space: &AnchorSpace, assignment: &BTreeMap<String, String>) -> Vec<String> {
    space.ids().map(|id| assignment[id].clone()).collect()
}

fn belief_oracle() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut count_mismatch = 0;
    let mut map_mismatch = 0;
    for case in 0..200u64 {
        let mut r = rng::stream(0xbe11ef, case, 0);
        let space = random_space(&mut r);
        let ids: Vec<String> = space.ids().map(str::to_string).collect();
        // likelihood and anchor masses for every possible assignment
        let mut fixture = BTreeMap::new();
        let mut keys: Vec<Vec<String>> = vec![vec![]];
        for id in &ids {
            let labels: Vec<String> = space
                .get(id)
                .unwrap()
                .label_belief
                .keys()
                .cloned()
                .collect();
            keys = keys
                .into_iter()
                .flat_map(|k| {
                    labels.iter().map(move |l| {
                        let mut k = k.clone();
                        k.push(l.clone());
                        k
                    })
                })
                .collect();
        }
        for k in keys {
            let lik = if r.gen_bool(0.1) {
                0.0
            } else {
                r.gen_range(0.0..1.0)
            };
            let masses: BTreeMap<String, f64> = ids
                .iter()
                .map(|id| (id.clone(), r.gen_range(0.0..1.0)))
                .collect();
            fixture.insert(k, (lik, masses));
        }
        let post = resolve_with(&space, ResolveOptions { k: 2, cap: 12 }, |c| {
            let (likelihood, anchor_mass) = fixture[&fixture_key(&space, &c.assignment)].clone();
            Ok(Evidence {
                likelihood,
                anchor_mass,
            })
        })
        .unwrap();
        let want = oracle(&space, &fixture);
        if post.configurations.len() != 1 << ids.len()
            || want.configs.len() != post.configurations.len()
        {
            count_mismatch += 1;
            continue;
        }
        for (i, c) in post.configurations.iter().enumerate() {
            let key = fixture_key(&space, &c.assignment);
            let Some(&(prior, p)) = want.configs.get(&key) else {
                count_mismatch += 1;
                break;
            };
            worst = worst.max((prior - post.config_prior[i]).abs());
            worst = worst.max((p - post.config_posterior[i]).abs());
        }
        for (id, dist) in &want.marginals {
            for (label, p) in dist {
                worst = worst.max((p - post.anchors[id][label]).abs());
            }
        }
        for (id, m) in &want.grounding {
            worst = worst.max((m - post.grounding_mass[id]).abs());
        }
        map_mismatch += usize::from(want.map != post.map_grounding);
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-12
        && count_mismatch == 0
        && map_mismatch == 0
        && elapsed < Duration::from_secs(10);
    verdict(
        "belief revision matches brute force",
        pass,
        format!(
            "200 instances; max deviation {worst:.2e}; {count_mismatch} configuration-set mismatches; {map_mismatch} MAP mismatches; {}",
            secs(elapsed)
        ),
    )
}

fn uninformative_evidence() -> Verdict {
    let mut worst = 0.0f64;
    for case in 0..200u64 {
        let mut r = rng::stream(0x0f1a7, case, 0);
        let space = random_space(&mut r);
        let lik = r.gen_range(0.01..1.0);
        let post = resolve_with(&space, ResolveOptions::default(), |_| {
            Ok(Evidence {
                likelihood: lik,
                anchor_mass: BTreeMap::new(),
            })
        })
        .unwrap();
        for (p, q) in post.config_prior.iter().zip(&post.config_posterior) {
            worst = worst.max((p - q).abs());
        }
        for (id, dist) in &post.anchors {
            for (label, p) in dist {
                worst = worst.max((p - post.anchor_prior[id][label]).abs());
            }
        }
    }
    verdict(
        "uninformative evidence keeps the prior",
        worst <= 1e-12,
        format!("200 instances; max |posterior - prior| {worst:.2e}"),
    )
}

// ------------------------------------------------------------------ parser

fn parser_corpus() -> Verdict {
    let vocab = desk_config().vocabulary().unwrap();
    let text = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden.txt"),
    )
    .unwrap();
    let mut total = 0;
    let mut exact = 0;
    let mut misses = Vec::new();
    for line in text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
    {
        let (instruction, graph) = line.split_once('|').unwrap();
        total += 1;
        let want = ProgramGraph::from_text(graph.trim(), &vocab).unwrap();
        match parse(instruction.trim(), &vocab) {
            Ok(g) if g == want => exact += 1,
            _ => misses.push(instruction.trim().to_string()),
        }
    }
    let mut round_trips = 0;
    for (i, v) in [vocab.clone(), Vocabulary::default()].iter().enumerate() {
        for n in 0..500u64 {
            let mut r = rng::stream(0x90d3, i as u64, n);
            let graph = random_instruction(v, &mut r, 3).compile();
            let text = render_instruction(&graph, v, &mut r).unwrap();
            round_trips += usize::from(parse(&text, v).ok() == Some(graph));
        }
    }
    let has_examples = text.contains("pick up the apple to the right of the black mug |")
        && text.contains("drop it in front of the mug |");
    verdict(
        "parser golden corpus and round trip",
        total >= 50 && exact == total && round_trips == 1000 && has_examples,
        format!(
            "golden {exact}/{total} exact{}; parse(render(g)) = g on {round_trips}/1000",
            if misses.is_empty() {
                String::new()
            } else {
                format!(" (missed: {})", misses.join("; "))
            }
        ),
    )
}

// ---------------------------------------------------------------- learning

fn held_out(
    scenario: u8,
    n: usize,
    vocab: &Vocabulary,
    grid: &GridSpec,
    config: &Config,
) -> Vec<Sample> {
    let s = ScenarioId::new(scenario).unwrap();
    (0..n)
        .map(|i| {
            generate_sample(
                s,
                None,
                vocab,
                grid,
                &config.generation(),
                rng::derive(0xacce55, scenario as u64, i as u64),
            )
            .unwrap()
        })
        .collect()
}

struct Learning {
    verdicts: Vec<Verdict>,
    after_stage_two: ParamStore,
    final_params: ParamStore,
}

fn learning() -> Learning {
    let config = desk_config();
    let vocab = config.vocabulary().unwrap();
    let grid = config.grid().unwrap();
    let constraints = config.constraints(&vocab, &grid).unwrap();
    assert_eq!(
        (
            vocab.nouns().len(),
            vocab.adjectives().len(),
            vocab.prepositions().len()
        ),
        (12, 6, 6)
    );
    assert_eq!(grid.dims(), [6, 6, 2]);
    let tests: BTreeMap<u8, Vec<Sample>> = (1..=5)
        .map(|s| (s, held_out(s, 1000, &vocab, &grid, &config)))
        .collect();
    let mut verdicts = Vec::new();

    // scenario 1 alone under a 20,000-sample budget
    let mut first = config.curriculum().unwrap();
    first.scenario_order = vec![ScenarioId::new(1).unwrap()];
    first.max_samples = 20_000;
    let start = Instant::now();
    let mut params = ParamStore::init(&vocab, &grid, rng::derive(first.seed, 0x1a, 0), first.init);
    let report = train_curriculum_from(
        &first,
        &vocab,
        &grid,
        Some(&constraints),
        &mut params,
        |_, _| {},
    )
    .unwrap();
    let elapsed = start.elapsed();
    let seen = report.stages[0].samples_seen();
    let err = evaluate(&params, &vocab, &tests[&1]).unwrap();
    verdicts.push(verdict(
        "scenario 1 within 20k samples",
        err <= 0.01 && seen <= 20_000 && elapsed < Duration::from_secs(300),
        format!(
            "test error {err:.4} on 1000 unconstrained samples after {seen} training samples; {}",
            secs(elapsed)
        ),
    ));

    // full curriculum, held-out error of every scenario after every stage
    let curriculum = config.curriculum().unwrap();
    let mut params = ParamStore::init(
        &vocab,
        &grid,
        rng::derive(curriculum.seed, 0x1a, 0),
        curriculum.init,
    );
    let mut errors: Vec<BTreeMap<u8, f64>> = Vec::new();
    let mut after_stage_two = None;
    let report = train_curriculum_from(
        &curriculum,
        &vocab,
        &grid,
        Some(&constraints),
        &mut params,
        |stage, p| {
            errors.push(
                tests
                    .iter()
                    .map(|(s, t)| (*s, evaluate(p, &vocab, t).unwrap()))
                    .collect(),
            );
            if stage.stage == 1 {
                after_stage_two = Some(p.clone());
            }
        },
    )
    .unwrap();
    let own: Vec<(u8, f64)> = report
        .stages
        .iter()
        .filter(|st| st.scenario.get() <= 5)
        .map(|st| (st.scenario.get(), errors[st.stage][&st.scenario.get()]))
        .collect();
    let later_ok = own.iter().filter(|(s, _)| *s >= 2).all(|(_, e)| *e <= 0.02);
    verdicts.push(verdict(
        "scenarios 2-5 reach 2%",
        later_ok,
        format!(
            "held-out error after each scenario's stage: {}; after the last stage: {}",
            own.iter()
                .map(|(s, e)| format!("s{s} {e:.4}"))
                .collect::<Vec<_>>()
                .join(", "),
            errors
                .last()
                .unwrap()
                .iter()
                .map(|(s, e)| format!("s{s} {e:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    ));
    let to_threshold = |s: u8| {
        report
            .stages
            .iter()
            .find(|st| st.scenario.get() == s)
            .and_then(|st| st.samples_to_threshold)
    };
    let (n1, n3) = (to_threshold(1), to_threshold(3));
    let stage_of = |s: u8| {
        report
            .stages
            .iter()
            .position(|st| st.scenario.get() == s)
            .unwrap()
    };
    let (i3, i4) = (stage_of(3), stage_of(4));
    let (e3, e3_after4) = (errors[i3][&3], errors[i4][&3]);
    verdicts.push(verdict(
        "prepositions need more data than nouns",
        matches!((n1, n3), (Some(a), Some(b)) if b > a),
        format!(
            "samples to EMA error < {}: scenario 1 {n1:?}, scenario 3 {n3:?}",
            curriculum.stop_threshold
        ),
    ));
    verdicts.push(verdict(
        "scenario 4 keeps scenario 3 accuracy",
        e3_after4 <= e3 + 0.01,
        format!(
            "scenario-3 held-out error {e3:.4} after its stage, {e3_after4:.4} after scenario 4"
        ),
    ));
    Learning {
        verdicts,
        after_stage_two: after_stage_two.unwrap(),
        final_params: params,
    }
}

fn compositional(params: &ParamStore) -> Verdict {
    let config = desk_config();
    let vocab = config.vocabulary().unwrap();
    let grid = config.grid().unwrap();
    let constraints = config.constraints(&vocab, &grid).unwrap();
    let mut tally = [[0usize; 2]; 2]; // [seen, unseen] x [total, correct]
    let s2 = ScenarioId::new(2).unwrap();
    for i in 0..4000u64 {
        let sample = generate_sample(
            s2,
            None,
            &vocab,
            &grid,
            &config.generation(),
            rng::derive(0xc0_4b05, 2, i),
        )
        .unwrap();
        let words: Vec<usize> = sample.gold_graph.detect_words().collect();
        let noun = words.iter().copied().find(|&w| vocab.is_noun(w)).unwrap();
        let allowed = constraints.allowed_attributes(noun);
        let adjectives: Vec<usize> = words
            .iter()
            .copied()
            .filter(|&w| !vocab.is_noun(w))
            .collect();
        if adjectives.is_empty() {
            continue;
        }
        let unseen = adjectives.iter().any(|a| !allowed.contains(a));
        let t = &mut tally[usize::from(unseen)];
        t[0] += 1;
        t[1] += usize::from(predict(params, &vocab, &sample).unwrap() == sample.gold_target);
    }
    let acc = |t: [usize; 2]| t[1] as f64 / t[0].max(1) as f64;
    let (seen, unseen) = (acc(tally[0]), acc(tally[1]));
    verdict(
        "unseen attribute-noun combinations",
        tally[1][0] >= 200 && (seen - unseen).abs() <= 0.05,
        format!(
            "after the scenario-2 stage: seen {seen:.4} ({} samples), unseen {unseen:.4} ({} samples), gap {:.2} points",
            tally[0][0],
            tally[1][0],
            100.0 * (seen - unseen).abs()
        ),
    )
}

// ---------------------------------------------------------------- showcase

fn showcase(params: &ParamStore) -> Verdict {
    let config = desk_config();
    let vocab = config.vocabulary().unwrap();
    let grid = config.grid().unwrap();
    let start = Instant::now();
    let space = showcase_space(&grid).unwrap();
    let before = space.get("pot-1").unwrap().top_label().to_string();
    let mug_tops = space.anchors().filter(|a| a.top_label() == "mug").count();
    let mut session = Session::new(vocab, params.clone(), space, config.session()).unwrap();
    let first = session.submit_instruction(SHOWCASE_SCRIPT[0]);
    let pick_ok = first.action
        == ActionCommand::PickUp {
            anchor: "ball-1".into(),
        };
    // independent ray walk from the black object toward the viewer
    let occupied: BTreeSet<Cell> = session
        .space()
        .anchors()
        .filter(|a| session.held() != Some(a.id.as_str()))
        .map(|a| grid.cell_of(a.position).unwrap())
        .collect();
    let pot = grid
        .cell_of(session.space().get("pot-1").unwrap().position)
        .unwrap();
    let expected = (1..=pot.y)
        .map(|k| Cell::new(pot.x, pot.y - k, pot.z))
        .find(|c| !occupied.contains(c));
    let second = session.submit_instruction(SHOWCASE_SCRIPT[1]);
    let after = session
        .space()
        .get("pot-1")
        .unwrap()
        .top_label()
        .to_string();
    let place_ok = matches!(
        &second.action,
        ActionCommand::Place { anchor, cell, .. } if anchor == "ball-1" && Some(*cell) == expected
    );
    let replay = session.replay().unwrap();
    let identical = serde_json::to_string(replay.log()).unwrap()
        == serde_json::to_string(session.log()).unwrap()
        && serde_json::to_string(replay.space()).unwrap()
            == serde_json::to_string(session.space()).unwrap();
    let elapsed = start.elapsed();
    let describe = |a: &ActionCommand| match a {
        ActionCommand::PickUp { anchor } => format!("pick-up {anchor}"),
        ActionCommand::Place { anchor, cell, .. } => format!("place {anchor} at {cell}"),
        ActionCommand::NoOp { reason } => format!("no-op ({reason})"),
    };
    verdict(
        "showcase script",
        mug_tops == 0
            && before == "pot"
            && pick_ok
            && after == "mug"
            && place_ok
            && identical
            && elapsed < Duration::from_secs(30),
        format!(
            "{}; {}; black object {before} -> {after}; replay {}; {}",
            describe(&first.action),
            describe(&second.action),
            if identical { "identical" } else { "differs" },
            secs(elapsed)
        ),
    )
}

// ------------------------------------------------------------- determinism

fn run(args: &[&str], stdin: Option<&str>) -> Vec<u8> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_reground"));
    cmd.args(args);
    let out = match stdin {
        None => cmd.output().unwrap(),
        Some(text) => {
            use std::io::Write;
            let mut child = cmd
                .stdin(std::process::Stdio::piped())
                .stdout(std::process::Stdio::piped())
                .spawn()
                .unwrap();
            child
                .stdin
                .take()
                .unwrap()
                .write_all(text.as_bytes())
                .unwrap();
            child.wait_with_output().unwrap()
        }
    };
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn determinism() -> Verdict {
    let start = Instant::now();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml");
    let config = config.to_str().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    // a perception feed built from one generated scene, moved over two frames
    let cfg = desk_config();
    let vocab = cfg.vocabulary().unwrap();
    let grid = cfg.grid().unwrap();
    let sample = generate_sample(
        ScenarioId::new(3).unwrap(),
        None,
        &vocab,
        &grid,
        &cfg.generation(),
        5,
    )
    .unwrap();
    let feed = serde_json::json!({
        "frames": [
            { "time": 0, "scene": sample.scene },
            { "time": 1, "scene": sample.scene },
        ]
    });
    std::fs::write(root.join("feed.json"), feed.to_string()).unwrap();

    let mut compared: Vec<(String, bool)> = Vec::new();
    let mut outputs: [BTreeMap<String, Vec<u8>>; 2] = Default::default();
    for (round, outputs) in outputs.iter_mut().enumerate() {
        let d = root.join(format!("run{round}"));
        std::fs::create_dir_all(&d).unwrap();
        let p = |name: &str| -> String { d.join(name).to_str().unwrap().to_string() };
        let data = p("data");
        let mut record = |name: &str, bytes: Vec<u8>| {
            outputs.insert(name.to_string(), bytes);
        };
        record(
            "generate-data stdout",
            run(
                &[
                    "--config",
                    config,
                    "generate-data",
                    "--seed",
                    "11",
                    "--train",
                    "400",
                    "--test",
                    "200",
                    "--out-dir",
                    &data,
                ],
                None,
            )
            .replace_dir(&d),
        );
        record(
            "train.jsonl",
            std::fs::read(PathBuf::from(&data).join("train.jsonl")).unwrap(),
        );
        record(
            "test.jsonl",
            std::fs::read(PathBuf::from(&data).join("test.jsonl")).unwrap(),
        );
        let (w, c) = (p("w.bin"), p("curve.tsv"));
        record(
            "train stdout",
            run(
                &[
                    "--config",
                    config,
                    "train",
                    "--seed",
                    "3",
                    "--weights",
                    &w,
                    "--report",
                    &c,
                ],
                None,
            )
            .replace_dir(&d),
        );
        record("weights", std::fs::read(&w).unwrap());
        record("curve", std::fs::read(&c).unwrap());
        let test = PathBuf::from(&data).join("test.jsonl");
        record(
            "eval",
            run(
                &[
                    "--config",
                    config,
                    "eval",
                    "--weights",
                    &w,
                    "--data",
                    test.to_str().unwrap(),
                ],
                None,
            ),
        );
        record("parse", run(&["--config", config, "parse"], Some("pick up the apple to the right of the black mug\ndrop it in front of the mug\n")));
        let snap = p("snapshot.json");
        record(
            "perceive stdout",
            run(
                &[
                    "--config",
                    config,
                    "perceive",
                    "--feed",
                    root.join("feed.json").to_str().unwrap(),
                    "--seed",
                    "9",
                    "--out",
                    &snap,
                ],
                None,
            ),
        );
        record("snapshot", std::fs::read(&snap).unwrap());
        record(
            "resolve",
            run(
                &[
                    "--config",
                    config,
                    "resolve",
                    "--weights",
                    &w,
                    "drop it in front of the mug",
                ],
                None,
            ),
        );
        record(
            "resolve snapshot",
            run(
                &[
                    "--config",
                    config,
                    "resolve",
                    "--weights",
                    &w,
                    "--snapshot",
                    &snap,
                    &sample.instruction,
                ],
                None,
            ),
        );
        record(
            "repl",
            run(
                &["--config", config, "repl", "--weights", &w, "--seed", "4"],
                Some("pick up the ball\n:state\n:log\n"),
            ),
        );
    }
    for (name, bytes) in &outputs[0] {
        compared.push((
            name.clone(),
            outputs[1].get(name) == Some(bytes) && !bytes.is_empty(),
        ));
    }
    let differing: Vec<&str> = compared
        .iter()
        .filter(|c| !c.1)
        .map(|c| c.0.as_str())
        .collect();
    verdict(
        "byte-identical CLI outputs",
        differing.is_empty() && compared.len() == 13,
        format!(
            "{} outputs compared across two runs{}; {}",
            compared.len(),
            if differing.is_empty() {
                String::new()
            } else {
                format!(", differing: {}", differing.join(", "))
            },
            secs(start.elapsed())
        ),
    )
}

trait ReplaceDir {
    fn replace_dir(self, dir: &Path) -> Vec<u8>;
}

impl ReplaceDir for Vec<u8> {
    /// Output paths differ between the two runs by construction.
    fn replace_dir(self, dir: &Path) -> Vec<u8> {
        String::from_utf8(self)
            .unwrap()
            .replace(dir.to_str().unwrap(), "<dir>")
            .into_bytes()
    }
}

fn main() {
    let start = Instant::now();
    let mut verdicts = vec![
        gradient_check(),
        belief_oracle(),
        uninformative_evidence(),
        parser_corpus(),
    ];
    let learned = learning();
    verdicts.extend(learned.verdicts);
    verdicts.push(compositional(&learned.after_stage_two));
    verdicts.push(showcase(&learned.final_params));
    verdicts.push(determinism());
    println!();
    for v in &verdicts {
        println!(
            "{} {:<42} {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.detail
        );
    }
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!(
        "\n{} of {} checks passed in {}",
        verdicts.len() - failed,
        verdicts.len(),
        secs(start.elapsed())
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
