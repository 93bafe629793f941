//! The `flowtrack` command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
//! Every subcommand is deterministic given `--seed` (default [`DEFAULT_SEED`]).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::actuation::{clip_torque, envelope_limit, friction_torque, joint_power, torque_ceiling, ActuatorCatalog};
use crate::distill::{
    dagger_train, es_refine, evaluate_policy, load_residual, mix, save_residual, DistillCfg, EsCfg, EvalCfg,
    FlowPolicy, Policy, ResidualPolicy, ResidualStack,
};
use crate::env::{ArmEnv, EnvConfig, ExpertPolicy};
use crate::flow::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::fsio::write_atomic;
use crate::metrics::{analyze_clip, RawComplexity, TrackingMetrics, DEFAULT_H_AIR};
use crate::motion::{load_motion, save_motion, segment_clips, synth_motion, MotionClip, SynthMotionSpec};

/// Seed used when `--seed` is omitted.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "flowtrack", version, about = "Flow-matching motion tracking on a torque-controlled arm")]
struct Cli {
    /// Seed for every random draw of the run.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Suppress progress and warnings on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    /// Output file (analyze, actuator, eval, synth) or run directory (train, refine).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Config override as a dot path, e.g. `env.episode_len=200`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Motion complexity report for every motion file in a directory.
    Analyze {
        motions_dir: PathBuf,
        /// Height above which a foot counts as airborne (m).
        #[arg(long, default_value_t = DEFAULT_H_AIR)]
        h_air: f64,
    },
    /// Evaluate an actuator model at one operating point or over a velocity sweep.
    Actuator {
        name: String,
        /// Joint velocity (rad/s).
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        v: f64,
        /// Commanded torque (N·m).
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        tau: f64,
        /// Print a CSV over velocities from 0 to `--v-max`.
        #[arg(long)]
        sweep: bool,
        /// Upper end of the sweep; defaults to 1.25 × the zero-torque velocity.
        #[arg(long)]
        v_max: Option<f64>,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// JSON file with extra actuator models.
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Distill one expert per motion into a flow-matching policy with DAgger.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Write an intermediate checkpoint every K iterations (0: final only).
        #[arg(long, default_value_t = 0)]
        checkpoint_every: usize,
    },
    /// Closed-loop tracking metrics of a policy over seeded rollouts.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        /// Flow policy checkpoint.
        #[arg(long)]
        policy: PathBuf,
        /// Optional residual checkpoint stacked on the policy.
        #[arg(long)]
        residual: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        rollouts: usize,
        /// Segment length (s) applied to every motion before evaluation.
        #[arg(long, default_value_t = 10.0)]
        segment: f64,
    },
    /// Train a residual on top of a frozen policy with an evolution strategy.
    Refine {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        policy: PathBuf,
    },
    /// Write a sinusoidal reference motion.
    Synth {
        #[arg(long, default_value_t = 2)]
        joints: usize,
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
        #[arg(long, default_value_t = 50.0)]
        fps: f64,
        /// Amplitude per joint (rad); one value is broadcast.
        #[arg(long, value_delimiter = ',', default_value = "0.3", allow_hyphen_values = true)]
        amplitude: Vec<f64>,
        /// Frequency per joint (Hz); one value is broadcast.
        #[arg(long, value_delimiter = ',', default_value = "0.25")]
        frequency: Vec<f64>,
        /// Phase per joint (rad); one value is broadcast.
        #[arg(long, value_delimiter = ',', default_value = "0", allow_hyphen_values = true)]
        phase: Vec<f64>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Motion files or directories of `*.json` motions. Repeatable.
    #[arg(long, required = true)]
    motions: Vec<PathBuf>,
    /// Environment config (JSON).
    #[arg(long)]
    env: Option<PathBuf>,
    /// Run config (JSON object keyed by section, e.g. a previous `config.json`).
    #[arg(long)]
    cfg: Option<PathBuf>,
}

/// Failure with its exit code.
#[derive(Debug)]
enum Fail {
    Usage(String),
    Runtime(String),
}

impl Fail {
    fn code(&self) -> i32 {
        match self {
            Fail::Usage(_) => 1,
            Fail::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Fail::Usage(m) | Fail::Runtime(m) => m,
        }
    }
}

fn usage(e: impl ToString) -> Fail {
    Fail::Usage(e.to_string())
}

fn runtime(e: impl ToString) -> Fail {
    Fail::Runtime(e.to_string())
}

type CliResult<T = ()> = std::result::Result<T, Fail>;

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, A>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut ctx = Ctx { stdout, stderr, quiet: cli.quiet };
    match dispatch(&cli, &mut ctx) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(ctx.stderr, "error: {}", f.message());
            f.code()
        }
    }
}

struct Ctx<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
    quiet: bool,
}

impl Ctx<'_> {
    fn say(&mut self, line: &str) -> CliResult {
        writeln!(self.stdout, "{line}").map_err(runtime)
    }

    fn note(&mut self, line: &str) {
        if !self.quiet {
            let _ = writeln!(self.stderr, "{line}");
        }
    }
}

fn dispatch(cli: &Cli, ctx: &mut Ctx) -> CliResult {
    match &cli.command {
        Command::Analyze { motions_dir, h_air } => cmd_analyze(cli, ctx, motions_dir, *h_air),
        Command::Actuator { name, v, tau, sweep, v_max, points, catalog } => {
            cmd_actuator(cli, ctx, name, *v, *tau, sweep.then_some((*v_max, *points)), catalog.as_deref())
        }
        Command::Train { run, checkpoint_every } => cmd_train(cli, ctx, run, *checkpoint_every),
        Command::Eval { run, policy, residual, rollouts, segment } => {
            cmd_eval(cli, ctx, run, policy, residual.as_deref(), *rollouts, *segment)
        }
        Command::Refine { run, policy } => cmd_refine(cli, ctx, run, policy),
        Command::Synth { joints, duration, fps, amplitude, frequency, phase } => {
            cmd_synth(cli, ctx, *joints, *duration, *fps, amplitude, frequency, phase)
        }
    }
}

/// `%g`-style formatting with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let trim = |s: String| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-4..6).contains(&exp) {
        let s = trim(format!("{:.*}", (5 - exp).max(0) as usize, x));
        // rounding can carry into a new digit, e.g. 999999.5
        if s.trim_start_matches('-').split('.').next().map_or(0, str::len) > 6 {
            return sig6_sci(x);
        }
        if s == "-0" { "0".into() } else { s }
    } else {
        sig6_sci(x)
    }
}

fn sig6_sci(x: f64) -> String {
    let s = format!("{x:.5e}");
    let (mant, exp) = s.split_once('e').expect("scientific format");
    let mant = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
    let exp: i32 = exp.parse().expect("exponent");
    format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

fn write_out(path: &Path, bytes: &[u8]) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(runtime)?;
    }
    write_atomic(path, bytes).map_err(runtime)
}

fn emit(cli: &Cli, ctx: &mut Ctx, text: &str) -> CliResult {
    match &cli.out {
        Some(p) => write_out(p, text.as_bytes()),
        None => ctx.stdout.write_all(text.as_bytes()).map_err(runtime),
    }
}

fn run_dir(cli: &Cli) -> CliResult<&Path> {
    let dir = cli.out.as_deref().ok_or_else(|| usage("this subcommand needs --out <DIR>"))?;
    fs::create_dir_all(dir).map_err(runtime)?;
    Ok(dir)
}

// ---- analyze ----

#[derive(Serialize)]
struct AnalyzeEntry {
    motion: String,
    raw: RawComplexity<f64>,
    scores: [f64; 6],
}

fn cmd_analyze(cli: &Cli, ctx: &mut Ctx, dir: &Path, h_air: f64) -> CliResult {
    let files = json_files(dir).map_err(usage)?;
    if files.is_empty() {
        return Err(usage(format!("no *.json motion files in {}", dir.display())));
    }
    let mut entries = Vec::new();
    for path in &files {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        match load_motion(path).and_then(|clip| analyze_clip(&clip, h_air)) {
            Ok(c) => entries.push(AnalyzeEntry { motion: name, raw: c.raw, scores: c.scores }),
            Err(e) => ctx.note(&format!("warning: skipping {name}: {e}")),
        }
    }
    if entries.is_empty() {
        return Err(usage("no motion file could be analyzed"));
    }
    let mut text = serde_json::to_string_pretty(&entries).map_err(runtime)?;
    text.push('\n');
    emit(cli, ctx, &text)?;
    if cli.out.is_some() {
        ctx.note(&format!("analyzed {} of {} motions", entries.len(), files.len()));
    }
    Ok(())
}

/// `*.json` files of a directory in filename order.
fn json_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

// ---- actuator ----

fn cmd_actuator(
    cli: &Cli,
    ctx: &mut Ctx,
    name: &str,
    v: f64,
    tau: f64,
    sweep: Option<(Option<f64>, usize)>,
    catalog: Option<&Path>,
) -> CliResult {
    let cat = match catalog {
        Some(path) => {
            let extra = ActuatorCatalog::load(path).map_err(usage)?;
            let mut map: std::collections::BTreeMap<String, _> =
                ActuatorCatalog::builtin().iter().map(|(k, p)| (k.to_string(), p)).collect();
            map.extend(extra.iter().map(|(k, p)| (k.to_string(), p)));
            ActuatorCatalog::from_map(map).map_err(usage)?
        }
        None => ActuatorCatalog::builtin(),
    };
    let p = cat.get(name).map_err(usage)?;
    if !(v.is_finite() && tau.is_finite()) {
        return Err(usage("--v and --tau must be finite"));
    }
    let row = |v: f64| {
        let limit = envelope_limit(v, torque_ceiling(v, tau, &p), &p);
        let clipped = clip_torque(tau, v, &p);
        let friction = friction_torque(v, &p);
        let applied = clipped - friction;
        [v, limit, clipped, friction, applied, joint_power(applied, v)]
    };
    match sweep {
        None => {
            let r = row(v);
            let mut text = format!("actuator {name}\n");
            for (k, x) in ["velocity", "limit", "clipped", "friction", "applied", "power"].iter().zip(r) {
                let _ = writeln!(text, "{k} {}", sig6(x));
            }
            let _ = writeln!(text, "tau_cmd {}", sig6(tau));
            emit(cli, ctx, &text)
        }
        Some((v_max, points)) => {
            let v_max = v_max.unwrap_or(1.25 * p.v_x2);
            if points < 2 || !(v_max > 0.0 && v_max.is_finite()) {
                return Err(usage("--points must be at least 2 and --v-max positive"));
            }
            let mut text = String::from("v,limit,clipped,friction,applied,power\n");
            for i in 0..points {
                let r = row(v_max * i as f64 / (points - 1) as f64);
                let cells: Vec<String> = r.iter().map(|&x| sig6(x)).collect();
                let _ = writeln!(text, "{}", cells.join(","));
            }
            emit(cli, ctx, &text)
        }
    }
}

// ---- run configuration ----

/// Residual network shape used by `refine`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResidualCfg {
    pub hidden: Vec<usize>,
    pub bound: f64,
}

impl Default for ResidualCfg {
    fn default() -> Self {
        Self { hidden: vec![16], bound: 0.5 }
    }
}

/// Loads `--cfg` and `--env`, fills defaults for `sections`, seeds every
/// section that has a `seed` key, then applies `--set` overrides.
fn run_config(cli: &Cli, run: &RunArgs, defaults: Vec<(&str, Value)>) -> CliResult<Map<String, Value>> {
    let mut root = Map::new();
    for (k, v) in defaults {
        root.insert(k.to_string(), v);
    }
    if let Some(path) = &run.cfg {
        let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let file: Map<String, Value> =
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        for (k, v) in file {
            let slot = root.get_mut(&k).ok_or_else(|| usage(format!("unknown config section `{k}`")))?;
            merge(slot, v);
        }
    }
    if let Some(path) = &run.env {
        let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let env: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        merge(root.get_mut("env").expect("env section"), env);
    }
    for section in root.values_mut() {
        if let Some(obj) = section.as_object_mut() {
            if obj.contains_key("seed") {
                obj.insert("seed".into(), Value::from(cli.seed));
            }
        }
    }
    for o in &cli.overrides {
        apply_override(&mut root, o)?;
    }
    Ok(root)
}

fn merge(dst: &mut Value, src: Value) {
    match (dst, src) {
        (Value::Object(d), Value::Object(s)) => {
            for (k, v) in s {
                match d.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        d.insert(k, v);
                    }
                }
            }
        }
        (d, s) => *d = s,
    }
}

/// Applies `a.b.c=value`; the value is parsed as JSON, falling back to a string.
fn apply_override(root: &mut Map<String, Value>, spec: &str) -> CliResult {
    let (path, raw) = spec.split_once('=').ok_or_else(|| usage(format!("override `{spec}` is not KEY=VALUE")))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(usage(format!("bad override path `{path}`")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let section = root.get_mut(keys[0]).ok_or_else(|| usage(format!("unknown config section `{}`", keys[0])))?;
    let mut node = section;
    for k in &keys[1..] {
        node = match node {
            Value::Object(m) => m.entry(k.to_string()).or_insert(Value::Null),
            Value::Array(a) => {
                let i: usize = k.parse().map_err(|_| usage(format!("`{k}` is not an index in `{path}`")))?;
                let len = a.len();
                a.get_mut(i).ok_or_else(|| usage(format!("index {i} out of range ({len}) in `{path}`")))?
            }
            _ => return Err(usage(format!("`{path}` descends into a scalar"))),
        };
    }
    *node = value;
    Ok(())
}

fn section<T: for<'de> Deserialize<'de>>(root: &Map<String, Value>, key: &str) -> CliResult<T> {
    serde_json::from_value(root[key].clone()).map_err(|e| usage(format!("config section `{key}`: {e}")))
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("config serializes")
}

fn build_env(root: &Map<String, Value>) -> CliResult<ArmEnv> {
    let cfg: EnvConfig = section(root, "env")?;
    ArmEnv::new(cfg).map_err(usage)
}

/// Motions from files and directories, each directory in filename order.
fn load_motions(paths: &[PathBuf]) -> CliResult<Vec<(String, MotionClip)>> {
    let mut out = Vec::new();
    for p in paths {
        let files = if p.is_dir() { json_files(p).map_err(usage)? } else { vec![p.clone()] };
        for f in files {
            let clip = load_motion(&f).map_err(|e| usage(format!("{}: {e}", f.display())))?;
            let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            out.push((name, clip));
        }
    }
    if out.is_empty() {
        return Err(usage("no motions given"));
    }
    Ok(out)
}

fn check_motions(env: &ArmEnv, motions: &[(String, MotionClip)]) -> CliResult {
    for (name, m) in motions {
        if m.n_joints() != env.n_joints() {
            return Err(usage(format!("motion {name} has {} joints, the arm has {}", m.n_joints(), env.n_joints())));
        }
    }
    Ok(())
}

fn history_csv(header: &str, values: &[f64]) -> String {
    let mut text = format!("{header}\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(text, "{i},{v}");
    }
    text
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

fn load_base(path: &Path, env: &ArmEnv) -> CliResult<Checkpoint<f64>> {
    let ckpt: Checkpoint<f64> = load_checkpoint(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if ckpt.net.action_dim() != env.n_joints() || ckpt.net.obs_dim() != env.obs_dim() {
        return Err(usage(format!(
            "checkpoint/env incompatibility: policy maps {} obs to {} actions, environment has {} obs and {} joints",
            ckpt.net.obs_dim(),
            ckpt.net.action_dim(),
            env.obs_dim(),
            env.n_joints()
        )));
    }
    Ok(ckpt)
}

// ---- train ----

fn cmd_train(cli: &Cli, ctx: &mut Ctx, run: &RunArgs, every: usize) -> CliResult {
    let root = run_config(
        cli,
        run,
        vec![
            ("env", to_value(&EnvConfig::default())),
            ("distill", to_value(&DistillCfg { seed: cli.seed, ..DistillCfg::default() })),
            ("expert", to_value(&ExpertPolicy::default())),
        ],
    )?;
    let mut env = build_env(&root)?;
    let cfg: DistillCfg = section(&root, "distill")?;
    cfg.validate().map_err(usage)?;
    let expert: ExpertPolicy = section(&root, "expert")?;
    let motions = load_motions(&run.motions)?;
    check_motions(&env, &motions)?;
    let dir = run_dir(cli)?.to_path_buf();
    write_out(&dir.join("config.json"), pretty(&Value::Object(root.clone())).as_bytes())?;

    let clips: Vec<MotionClip> = motions.iter().map(|(_, m)| m.clone()).collect();
    let experts = vec![expert; clips.len()];
    let net = cfg.build_net(&env).map_err(usage)?;
    let sampler = cfg.sampler;
    let mut progress = Vec::new();
    let report = dagger_train(&mut env, &experts, &clips, net, &cfg, &mut |it, net, loss| {
        progress.push(format!("iteration {it} loss {}", sig6(loss)));
        if every > 0 && (it + 1) % every == 0 {
            let ckpt = Checkpoint { net: net.clone(), sampler };
            save_checkpoint(&ckpt, &dir.join(format!("checkpoint_{:04}.json", it + 1)))?;
        }
        Ok(())
    })
    .map_err(runtime)?;
    for line in progress {
        ctx.note(&line);
    }
    save_checkpoint(&Checkpoint { net: report.net, sampler }, &dir.join("policy.json")).map_err(runtime)?;
    write_out(&dir.join("loss.csv"), history_csv("iteration,loss", &report.loss_history).as_bytes())?;
    match report.loss_history.last() {
        Some(&l) => ctx.say(&format!("final_loss {}", sig6(l))),
        None => ctx.say("final_loss none"),
    }
}

// ---- eval ----

#[derive(Serialize)]
struct EvalEntry {
    motion: String,
    segment: usize,
    metrics: TrackingMetrics<f64>,
    joint_error: f64,
    mean_reward: f64,
}

#[derive(Serialize)]
struct EvalOutput {
    rollouts: usize,
    seed: u64,
    motions: Vec<EvalEntry>,
    aggregate: TrackingMetrics<f64>,
    joint_error: f64,
    mean_reward: f64,
}

fn cmd_eval(
    cli: &Cli,
    ctx: &mut Ctx,
    run: &RunArgs,
    policy: &Path,
    residual: Option<&Path>,
    rollouts: usize,
    segment: f64,
) -> CliResult {
    let root = run_config(
        cli,
        run,
        vec![
            ("env", to_value(&EnvConfig::default())),
            ("eval", to_value(&EvalCfg { rollouts, seed: cli.seed, ..EvalCfg::default() })),
        ],
    )?;
    let mut env = build_env(&root)?;
    let cfg: EvalCfg = section(&root, "eval")?;
    if cfg.rollouts == 0 {
        return Err(usage("--rollouts must be positive"));
    }
    let ckpt = load_base(policy, &env)?;
    let residual = match residual {
        Some(p) => {
            let r = load_residual(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            if r.n_joints() != env.n_joints() {
                return Err(usage("checkpoint/env incompatibility: residual joint count differs from the arm"));
            }
            Some(r)
        }
        None => None,
    };
    let motions = load_motions(&run.motions)?;
    check_motions(&env, &motions)?;
    let mut clips = Vec::new();
    for (name, m) in &motions {
        for (k, c) in segment_clips(m, segment).map_err(usage)?.into_iter().enumerate() {
            clips.push((name.clone(), k, c));
        }
    }
    let only: Vec<MotionClip> = clips.iter().map(|(_, _, c)| c.clone()).collect();
    let mut base = FlowPolicy::new(&ckpt.net, ckpt.sampler.steps).map_err(usage)?;
    let mut stack;
    let policy: &mut dyn Policy = match &residual {
        Some(r) => {
            stack = ResidualStack { base: base.clone(), residual: r };
            &mut stack
        }
        None => &mut base,
    };
    let report = evaluate_policy(policy, &mut env, &only, &cfg).map_err(runtime)?;
    let out = EvalOutput {
        rollouts: cfg.rollouts,
        seed: cfg.seed,
        motions: clips
            .iter()
            .zip(&report.per_motion)
            .map(|((name, k, _), m)| EvalEntry {
                motion: name.clone(),
                segment: *k,
                metrics: m.metrics,
                joint_error: m.joint_error,
                mean_reward: m.mean_reward,
            })
            .collect(),
        aggregate: report.overall,
        joint_error: report.joint_error,
        mean_reward: report.mean_reward,
    };
    let mut text = serde_json::to_string_pretty(&out).map_err(runtime)?;
    text.push('\n');
    match &cli.out {
        Some(p) => write_out(p, text.as_bytes())?,
        None => ctx.stdout.write_all(text.as_bytes()).map_err(runtime)?,
    }
    if cli.out.is_some() {
        ctx.say(&format!("success_rate {}", sig6(report.overall.success_rate)))?;
        ctx.say(&format!("mpjpe_mm {}", sig6(report.overall.mpjpe_mm)))?;
    }
    Ok(())
}

// ---- refine ----

fn cmd_refine(cli: &Cli, ctx: &mut Ctx, run: &RunArgs, policy: &Path) -> CliResult {
    let root = run_config(
        cli,
        run,
        vec![
            ("env", to_value(&EnvConfig::default())),
            ("es", to_value(&EsCfg { seed: cli.seed, ..EsCfg::default() })),
            ("residual", to_value(&ResidualCfg::default())),
        ],
    )?;
    let mut env = build_env(&root)?;
    let cfg: EsCfg = section(&root, "es")?;
    cfg.validate().map_err(usage)?;
    let rcfg: ResidualCfg = section(&root, "residual")?;
    let ckpt = load_base(policy, &env)?;
    let motions = load_motions(&run.motions)?;
    check_motions(&env, &motions)?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix(cli.seed, 0x4e5));
    let residual = ResidualPolicy::new(env.n_joints(), &rcfg.hidden, rcfg.bound, &mut rng).map_err(usage)?;
    let dir = run_dir(cli)?.to_path_buf();
    write_out(&dir.join("config.json"), pretty(&Value::Object(root.clone())).as_bytes())?;

    let clips: Vec<MotionClip> = motions.into_iter().map(|(_, m)| m).collect();
    let report = es_refine(&ckpt.net, residual, &mut env, &clips, &cfg).map_err(runtime)?;
    save_residual(&report.residual, &dir.join("residual.json")).map_err(runtime)?;
    write_out(&dir.join("reward.csv"), history_csv("generation,best", &report.best_history).as_bytes())?;
    ctx.say(&format!("initial_reward {}", sig6(report.initial_reward)))?;
    ctx.say(&format!("best_reward {}", sig6(*report.best_history.last().unwrap_or(&report.initial_reward))))
}

// ---- synth ----

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    cli: &Cli,
    ctx: &mut Ctx,
    joints: usize,
    duration: f64,
    fps: f64,
    amplitude: &[f64],
    frequency: &[f64],
    phase: &[f64],
) -> CliResult {
    let out = cli.out.as_deref().ok_or_else(|| usage("synth needs --out <FILE>"))?;
    let spread = |xs: &[f64], what: &str| -> CliResult<Vec<f64>> {
        match xs.len() {
            1 => Ok(vec![xs[0]; joints]),
            n if n == joints => Ok(xs.to_vec()),
            n => Err(usage(format!("{what} has {n} values for {joints} joints"))),
        }
    };
    let mut spec = SynthMotionSpec::uniform(joints, duration, fps, 0.0, 0.0);
    spec.amplitude = spread(amplitude, "--amplitude")?;
    spec.frequency = spread(frequency, "--frequency")?;
    spec.phase = spread(phase, "--phase")?;
    let clip = synth_motion(&spec).map_err(usage)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(runtime)?;
    }
    save_motion(&clip, out).map_err(runtime)?;
    ctx.note(&format!("wrote {} frames to {}", clip.len(), out.display()));
    Ok(())
}
