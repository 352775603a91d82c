use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use netq_core::eval::{
    adversarial_unit_progress, check_logarithmic_bound, default_reps, pool_size_sweep, run_experiment, run_synthetic,
    sortability_survey, ExperimentConfig, TheoryError,
};
use netq_core::net::{generate_demands, DemandMatrix, Topology};
use netq_core::pcs::{build_pool, Pool};
use netq_core::scenario::{ObjectiveInstance, Scenario, ScenarioOptions};
use serde_json::json;

use crate::cli::{DemandsArgs, ExperimentArgs, PoolArgs, RunArgs, SweepArgs, TheoryArgs};

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_pool(path: &Path) -> Result<Pool> {
    Pool::load(path).with_context(|| format!("loading pool {}", path.display()))
}

fn load_ground_truth(path: &Path, pool: &Pool) -> Result<ObjectiveInstance> {
    let gt = ObjectiveInstance::load(path).with_context(|| format!("loading ground truth {}", path.display()))?;
    if gt.kind() != pool.scenario.kind {
        bail!("ground truth is a {} objective but the pool is {}", gt.kind().name(), pool.scenario.kind.name());
    }
    Ok(gt)
}

fn experiment_config(args: &ExperimentArgs) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(args.algo, args.teacher, args.seed);
    cfg.reps = args.reps.unwrap_or_else(default_reps);
    cfg.n_query = args.queries;
    cfg
}

pub fn demands(args: &DemandsArgs) -> Result<()> {
    if args.classes == 0 || args.scale.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        bail!("--classes must be at least 1 and --scale positive");
    }
    let t = Topology::load(&args.topology).with_context(|| format!("loading topology {}", args.topology.display()))?;
    let mut d = generate_demands(&t, args.classes, args.scale, args.seed);
    if let Some(n) = args.pairs {
        d = d.sample_pairs(n, args.seed);
    }
    write(&args.out, &d.to_json(&t))?;
    println!("{} flows, total demand {:.3}", d.flows.len(), d.total());
    Ok(())
}

pub fn pool(args: &PoolArgs) -> Result<()> {
    let t = Topology::load(&args.topology).with_context(|| format!("loading topology {}", args.topology.display()))?;
    let d = DemandMatrix::load(&t, &args.demands).with_context(|| format!("loading demands {}", args.demands.display()))?;
    let mut options = ScenarioOptions::default();
    if let Some(k) = args.tunnels {
        options.tunnels = k;
    }
    if let Some(u) = args.latency_unit {
        options.latency_unit = u;
    }
    if let Some(g) = args.groups {
        options.groups = g;
    }
    let s = Scenario::new(args.scenario.into(), t, d, options)?;
    let started = std::time::Instant::now();
    let pool = build_pool(&s, args.size, args.seed)?;
    pool.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    println!("{} pairs, {} distinct designs, built in {:.1?}", pool.len(), pool.candidates().len(), started.elapsed());
    Ok(())
}

pub fn run(args: &RunArgs) -> Result<()> {
    let pool = load_pool(&args.pool)?;
    let gt = load_ground_truth(&args.experiment.ground_truth, &pool)?;
    let ranking = match &args.rank_pool {
        Some(p) => load_pool(p)?.designs(),
        None => pool.designs(),
    };
    let cfg = experiment_config(&args.experiment);
    let result = run_experiment(&Arc::new(pool.pair_list()), &ranking, &gt, &cfg);
    let mut curve = result.curve;
    curve.meta["scenario"] = json!(pool.scenario.kind.name());
    curve.meta["topology"] = pool.scenario.topology.get("name").cloned().unwrap_or_default();
    curve.meta["ground_truth"] = serde_json::to_value(&gt)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    curve.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    for p in &curve.points {
        println!("query {:>2}: median {:.4} (min {:.4}, max {:.4})", p.query, p.median, p.min, p.max);
    }
    Ok(())
}

pub fn sweep(args: &SweepArgs) -> Result<()> {
    let master = load_pool(&args.pool)?;
    if let Some(&bad) = args.sizes.iter().find(|&&s| s == 0 || s > master.len()) {
        bail!("size {bad} is outside 1..={}", master.len());
    }
    let gt = load_ground_truth(&args.experiment.ground_truth, &master)?;
    let cfg = experiment_config(&args.experiment);
    let rows = pool_size_sweep(&master, &args.sizes, &gt, &cfg);
    let mut csv = String::from("size,median,min,max\n");
    for r in &rows {
        let last = r.result.curve.points.last().context("experiment produced no points")?;
        csv.push_str(&format!("{},{},{},{}\n", r.size, last.median, last.min, last.max));
        println!("size {:>5}: final median {:.4}", r.size, last.median);
    }
    write(&args.out, &csv)?;
    let meta = json!({ "master": master.len(), "sizes": args.sizes, "config": cfg });
    write(&args.out.with_extension("json"), &serde_json::to_string_pretty(&meta)?)
}

pub fn check_theory(args: &TheoryArgs) -> Result<bool> {
    let pool = load_pool(&args.pool)?;
    let kind = pool.scenario.kind;
    let survey = sortability_survey(&pool.pair_list(), args.samples, 3..=50, args.seed);
    let adversarial: Vec<_> = (2..=10).map(|n| json!({ "n": n, "unit_progress": adversarial_unit_progress(n) })).collect();
    let synthetic = run_synthetic(args.reps, 1000, 10, args.seed);
    let (bound_ok, bound) = match check_logarithmic_bound(&synthetic.samples) {
        Ok(report) => (true, report),
        Err(TheoryError::BoundViolated { report, .. }) => (false, report),
        Err(e) => return Err(e.into()),
    };
    let sortable_all = survey.undecided == 0 && survey.unsortable == 0;
    let lemma_ok = survey.half_lemma_held == survey.half_lemma_checked;
    let adversarial_ok = adversarial.iter().all(|a| a["unit_progress"] == json!(true));
    let report = json!({
        "scenario": kind.name(),
        "expected_sortable": kind.sortable(),
        "observed_sortable": sortable_all,
        "sortability": survey,
        "half_lemma_ok": lemma_ok,
        "adversarial": adversarial,
        "bound": bound,
        "bound_ok": bound_ok,
    });
    let text = serde_json::to_string_pretty(&report)?;
    println!("{text}");
    if let Some(out) = &args.out {
        write(out, &text)?;
    }
    Ok(lemma_ok && adversarial_ok && bound_ok)
}
