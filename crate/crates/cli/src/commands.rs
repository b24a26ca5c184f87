use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use ddorder_core::evaluator::{self, EvalConfig, EvalReport};
use ddorder_core::trainer::{self, BaDistribution, EpsilonSchedule, TrainConfig};
use ddorder_core::{
    generate_ba_batch, graph, load_instance, BaConfig, Graph, ModelFile, OrderingSpec, Problem,
};
use serde_json::json;

use crate::args::{BoundArgs, Command, EvaluateArgs, GenerateArgs, ProfileArgs, TrainArgs};
use crate::{config, UsageError};

fn usage(msg: impl std::fmt::Display) -> anyhow::Error {
    anyhow!(UsageError(msg.to_string()))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// `report.csv` -> `report.config.txt`, next to the output.
fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("config.txt")
}

fn default_weights(problem: Problem) -> (i64, i64) {
    match problem {
        Problem::Misp => (1, 1),
        Problem::Mcp => (1, 10),
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Bound(a) => bound(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Profile(a) => profile(a),
    }
}

fn generate(mut a: GenerateArgs) -> Result<()> {
    let (lo, hi) = default_weights(a.problem);
    a.weight_low.get_or_insert(lo);
    a.weight_high.get_or_insert(hi);
    let cfg = BaConfig {
        n: a.n,
        nu: a.nu,
        weight_low: a.weight_low.unwrap_or(lo),
        weight_high: a.weight_high.unwrap_or(hi),
        seed: a.seed,
    };
    cfg.validate().map_err(usage)?;
    if a.count == 0 {
        return Err(usage("count must be at least 1"));
    }
    let graphs = generate_ba_batch(&cfg, a.count)?;
    create_dir(&a.out)?;
    let mut files = Vec::with_capacity(graphs.len());
    for (i, g) in graphs.iter().enumerate() {
        let name = format!("inst_{}_{i}.gr", a.seed);
        graph::save_instance(g, a.out.join(&name))?;
        files.push(name);
    }
    config::write(&a.out.join("config.txt"), "generate", &a)?;
    write_json(
        &a.out.join("manifest.json"),
        &json!({
            "command": "generate",
            "problem": a.problem,
            "generator": cfg,
            "files": files,
        }),
    )?;
    println!("wrote {} instances to {}", files.len(), a.out.display());
    Ok(())
}

fn train_config(a: &TrainArgs) -> TrainConfig {
    let mut c = TrainConfig::desk(a.problem, a.sense);
    c.width = a.width;
    c.seed = a.seed;
    macro_rules! set {
        ($($field:ident).+ = $arg:ident) => {
            if let Some(v) = a.$arg {
                c.$($field).+ = v;
            }
        };
    }
    set!(episodes = episodes);
    set!(batch_size = batch_size);
    set!(epsilon.start = eps_start);
    set!(epsilon.end = eps_end);
    set!(epsilon.decay_fraction = eps_decay);
    set!(reward_scale = reward_scale);
    set!(learning_rate = learning_rate);
    set!(gamma = gamma);
    set!(replay_capacity = replay_capacity);
    set!(train_set_size = train_set);
    set!(refresh_every = refresh_every);
    set!(validation_set_size = validation_set);
    set!(validation_every = validation_every);
    set!(dim = dim);
    set!(depth = depth);
    set!(weight_scale = weight_scale);
    set!(distribution.n_min = n_min);
    set!(distribution.n_max = n_max);
    set!(distribution.nu = nu);
    set!(distribution.weight_low = weight_low);
    set!(distribution.weight_high = weight_high);
    c
}

// The arguments with every default filled in.
fn resolved_train_args(a: &TrainArgs, c: &TrainConfig) -> TrainArgs {
    let d: &BaDistribution = &c.distribution;
    let e: &EpsilonSchedule = &c.epsilon;
    TrainArgs {
        episodes: Some(c.episodes),
        batch_size: Some(c.batch_size),
        eps_start: Some(e.start),
        eps_end: Some(e.end),
        eps_decay: Some(e.decay_fraction),
        reward_scale: Some(c.reward_scale),
        learning_rate: Some(c.learning_rate),
        gamma: Some(c.gamma),
        replay_capacity: Some(c.replay_capacity),
        train_set: Some(c.train_set_size),
        refresh_every: Some(c.refresh_every),
        validation_set: Some(c.validation_set_size),
        validation_every: Some(c.validation_every),
        dim: Some(c.dim),
        depth: Some(c.depth),
        weight_scale: Some(c.weight_scale),
        n_min: Some(d.n_min),
        n_max: Some(d.n_max),
        nu: Some(d.nu),
        weight_low: Some(d.weight_low),
        weight_high: Some(d.weight_high),
        ..a.clone()
    }
}

fn train(a: TrainArgs) -> Result<()> {
    let cfg = train_config(&a);
    cfg.validate().map_err(usage)?;
    let d = cfg.distribution;
    if d.n_min > d.n_max {
        return Err(usage("n-min exceeds n-max"));
    }
    BaConfig {
        n: d.n_min,
        nu: d.nu,
        weight_low: d.weight_low,
        weight_high: d.weight_high,
        seed: 0,
    }
    .validate()
    .map_err(usage)?;
    let init = a
        .init
        .as_ref()
        .map(|p| ModelFile::load(p).with_context(|| format!("loading {}", p.display())))
        .transpose()?;

    let mut provider = cfg.distribution;
    let outcome = match &init {
        Some(m) => {
            trainer::train_from(&cfg, &mut provider, m, a.allow_sense_switch).map_err(|e| match e {
                ddorder_core::Error::ModelMismatch(_) => usage(e),
                other => other.into(),
            })?
        }
        None => trainer::train(&cfg, &mut provider)?,
    };

    create_dir(&a.out)?;
    let model_path = a.out.join("model.txt");
    let log_path = a.out.join("log.jsonl");
    trainer::checkpoint_save(&outcome, &cfg, &model_path)?;
    trainer::write_log(&outcome.log, &log_path)?;
    config::write(&a.out.join("config.txt"), "train", &resolved_train_args(&a, &cfg))?;
    write_json(
        &a.out.join("manifest.json"),
        &json!({
            "command": "train",
            "model": "model.txt",
            "log": "log.jsonl",
            "config": cfg,
            "episodes": outcome.log.len(),
            "samples": outcome.samples_stored,
            "optimizer_steps": outcome.optimizer_steps,
            "best_validation": outcome.best_validation,
            "last_validation": outcome.last_validation,
        }),
    )?;
    println!(
        "trained {} episodes; best validation return {}; model written to {}",
        outcome.log.len(),
        outcome.best_validation,
        model_path.display()
    );
    Ok(())
}

fn load_model(path: Option<&PathBuf>, method_needs: bool) -> Result<Option<ModelFile>> {
    match path {
        Some(p) => Ok(Some(
            ModelFile::load(p).with_context(|| format!("loading {}", p.display()))?,
        )),
        None if method_needs => Err(usage("the learned method requires --model")),
        None => Ok(None),
    }
}

fn bound(a: BoundArgs) -> Result<()> {
    if a.width == 0 {
        return Err(usage("width must be at least 1"));
    }
    if a.method == OrderingSpec::Min && a.problem == Problem::Mcp {
        return Err(usage("the min ordering is only defined for misp"));
    }
    let model = load_model(a.model.as_ref(), a.method == OrderingSpec::Learned)?;
    if let Some(m) = &model {
        m.ensure_problem(a.problem).map_err(usage)?;
    }
    let g = load_instance(&a.instance)?;
    let compiled = evaluator::compile_method(
        a.problem,
        &g,
        a.method,
        a.sense.mode(a.width),
        a.seed,
        model.as_ref(),
        a.dot.is_some(),
    )?;
    if let (Some(path), Some(dot)) = (&a.dot, &compiled.dot) {
        fs::write(path, dot).with_context(|| format!("writing {}", path.display()))?;
        config::write(&sidecar(path), "bound", &a)?;
    }
    println!("{}", compiled.bound);
    Ok(())
}

fn collect_instances(paths: &[PathBuf]) -> Result<Vec<(String, Graph)>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("reading {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "gr"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(usage("no instance files found"));
    }
    files
        .into_iter()
        .map(|f| {
            let name = f
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| f.display().to_string());
            Ok((name, load_instance(&f)?))
        })
        .collect()
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let model = load_model(a.model.as_ref(), a.methods.contains(&OrderingSpec::Learned))?;
    let cfg = EvalConfig {
        problem: a.problem,
        sense: a.sense,
        width: a.width,
        methods: a.methods.clone(),
        rand_trials: a.rand_trials,
        seed: a.seed,
        timing: !a.no_timing,
        jobs: a.jobs,
    };
    cfg.validate(model.as_ref()).map_err(usage)?;
    let instances = collect_instances(&a.instances)?;
    let report = evaluator::evaluate_methods(&instances, &cfg, model.as_ref())?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    report.save_csv(&a.out)?;
    config::write(&sidecar(&a.out), "evaluate", &a)?;
    for m in report.methods() {
        match report.mean_gap(m) {
            Some(g) => println!("{m}: mean gap {g:.6}"),
            None => println!("{m}: no optimum available"),
        }
    }
    Ok(())
}

fn profile(a: ProfileArgs) -> Result<()> {
    let report = EvalReport::load_csv(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let curves = evaluator::report_profile(&report)
        .with_context(|| format!("{} has no complete rows", a.input.display()))?;
    let file = fs::File::create(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    evaluator::write_profile_csv(&curves, std::io::BufWriter::new(file))?;
    config::write(&sidecar(&a.out), "profile", &a)?;
    println!("wrote {} curves to {}", curves.len(), a.out.display());
    Ok(())
}
