//! WebAssembly bindings for the demo page in `www/`. Every export returns a
//! JSON string; failures come back as `{"error": "..."}`.

use agebo::controller::{run, SearchConfig, SearchMode};
use agebo::executor::{synthetic_arch_score, synthetic_hp_score, SimulatedBackend, SimulatedPool};
use agebo::model::NetworkPlan;
use agebo::reporting::best_so_far;
use agebo::space::{Decision, LayerChoice, LayerKind};
use agebo::{ArchConfig, ArchSpace, AsyncBo, BoSettings, ForestParams, HpConfig, HpSpace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn to_json(result: agebo::Result<serde_json::Value>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

#[derive(Serialize)]
struct Series {
    mode: String,
    points: Vec<(f64, f64)>,
    best: f64,
    evaluations: usize,
}

/// Best-so-far curves of AgE, AgE-n and AgEBO on the synthetic joint
/// objective over an `nodes`-node space.
pub fn trajectories(seed: u64, evaluations: usize, workers: usize, nodes: usize) -> agebo::Result<serde_json::Value> {
    let space = ArchSpace::new(nodes, 1, 2)?;
    let mut series = Vec::new();
    for mode in [SearchMode::Age, SearchMode::AgeN, SearchMode::Agebo] {
        let mut cfg = SearchConfig::new(mode, space.clone(), workers);
        cfg.population_size = 20;
        cfg.sample_size = 5;
        cfg.max_evaluations = Some(evaluations);
        cfg.seed = seed;
        cfg.fixed_hp = HpConfig { n: 4, ..HpConfig::default() };
        cfg.bo = BoSettings {
            n_candidates: 300,
            forest: ForestParams {
                n_trees: 10,
                ..Default::default()
            },
            ..Default::default()
        };
        let backend = SimulatedBackend::builtin("joint").expect("builtin objective");
        let mut pool = SimulatedPool::new(backend, workers.max(1));
        let state = run(&cfg, &mut pool, &mut |_| {}).map_err(|a| a.error)?;
        let points = best_so_far(&state.history);
        series.push(Series {
            mode: mode.to_string(),
            best: points.last().map_or(0.0, |p| p.1),
            points,
            evaluations: state.history.len(),
        });
    }
    Ok(json!({ "optimum": 1.0, "series": series }))
}

/// Surrogate mean, spread and UCB score along the learning-rate axis at a
/// fixed batch size and process count, after `observations` random
/// evaluations of the synthetic hyperparameter score.
pub fn ucb_explorer(kappa: f64, observations: usize, seed: u64, bs1: usize, n: usize) -> agebo::Result<serde_json::Value> {
    let space = HpSpace::default();
    let settings = BoSettings {
        kappa,
        n_initial: 1,
        n_candidates: 500,
        forest: ForestParams {
            n_trees: 30,
            seed,
            ..Default::default()
        },
    };
    let mut bo = AsyncBo::new(space.clone(), settings, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let observed: Vec<(HpConfig, f64)> = (0..observations.max(1))
        .map(|_| {
            let hp = space.random_hp(&mut rng);
            (hp, synthetic_hp_score(&hp))
        })
        .collect();
    for (hp, y) in &observed {
        bo.tell(&[*hp], &[*y])?;
    }
    let grid: Vec<HpConfig> = (0..=120)
        .map(|i| HpConfig {
            lr1: space.lr_at(i as f64 / 120.0),
            bs1,
            n,
        })
        .collect();
    let curve: Vec<_> = bo
        .score(&grid)?
        .into_iter()
        .map(|s| json!({ "lr1": s.config.lr1, "mu": s.mu, "sigma": s.sigma, "ucb": s.score }))
        .collect();
    let picked = bo.ask(1)?[0];
    let chosen = bo.last_scores().iter().find(|s| s.config == picked).copied();
    Ok(json!({
        "kappa": kappa,
        "curve": curve,
        "observed": observed.iter().map(|(hp, y)| json!({ "lr1": hp.lr1, "bs1": hp.bs1, "n": hp.n, "objective": y })).collect::<Vec<_>>(),
        "selected": chosen.map(|s| json!({ "lr1": s.config.lr1, "bs1": s.config.bs1, "n": s.config.n, "mu": s.mu, "sigma": s.sigma, "ucb": s.score })),
    }))
}

/// Layers, active skips and parameter count of a decision vector.
pub fn decode_arch(nodes: usize, decisions: &[u8], input_dim: usize, output_dim: usize) -> agebo::Result<serde_json::Value> {
    let space = ArchSpace::new(nodes, input_dim, output_dim)?;
    let arch = ArchConfig::new(decisions.to_vec());
    space.validate(&arch)?;
    let plan = NetworkPlan::build(&arch, &space)?;
    let mut layers = Vec::new();
    let mut skips = Vec::new();
    for (decision, &value) in space.layout().iter().zip(decisions) {
        match *decision {
            Decision::Layer { node } => {
                let label = match LayerChoice::new(value)?.decode() {
                    LayerKind::PassThrough => "identity".to_string(),
                    LayerKind::Dense { units, activation } => format!("dense {units} {activation:?}").to_lowercase(),
                };
                layers.push(json!({ "node": node, "choice": value, "layer": label }));
            }
            Decision::Skip { source, dest } if value == 1 => skips.push(json!({ "source": source, "dest": dest })),
            Decision::Skip { .. } => {}
        }
    }
    Ok(json!({
        "decisions": decisions,
        "num_decisions": space.num_decision_variables(),
        "space_size": space.space_size().to_string(),
        "layers": layers,
        "skips": skips,
        "num_params": plan.num_params(),
        "num_projections": plan.num_projections(),
        "synthetic_score": synthetic_arch_score(&arch),
    }))
}

pub fn random_decisions(nodes: usize, seed: u64) -> agebo::Result<Vec<u8>> {
    let space = ArchSpace::new(nodes, 1, 1)?;
    Ok(space.random_arch(&mut ChaCha8Rng::seed_from_u64(seed)).decisions)
}

fn parse_decisions(text: &str) -> agebo::Result<Vec<u8>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u8>()
                .map_err(|_| agebo::Error::InvalidInput(format!("{t:?} is not a decision value")))
        })
        .collect()
}

#[wasm_bindgen(js_name = trajectories)]
pub fn trajectories_js(seed: u32, evaluations: u32, workers: u32, nodes: u32) -> String {
    to_json(trajectories(seed.into(), evaluations as usize, workers as usize, nodes as usize))
}

#[wasm_bindgen(js_name = ucbExplorer)]
pub fn ucb_explorer_js(kappa: f64, observations: u32, seed: u32, bs1: u32, n: u32) -> String {
    to_json(ucb_explorer(kappa, observations as usize, seed.into(), bs1 as usize, n as usize))
}

/// `decisions` is a comma- or space-separated list.
#[wasm_bindgen(js_name = decodeArch)]
pub fn decode_arch_js(nodes: u32, decisions: &str, input_dim: u32, output_dim: u32) -> String {
    to_json(parse_decisions(decisions).and_then(|d| decode_arch(nodes as usize, &d, input_dim as usize, output_dim as usize)))
}

#[wasm_bindgen(js_name = randomArch)]
pub fn random_arch_js(nodes: u32, seed: u32) -> String {
    to_json(random_decisions(nodes as usize, seed.into()).map(|d| json!(d)))
}
