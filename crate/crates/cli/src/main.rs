use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use eventchron::bayesnet::{fit_cpts, Dag, NetworkJson};
use eventchron::causal::{effects_for_dag, CausalRelationTable, EffectsConfig};
use eventchron::chronology::{
    build_chronology, compare_models, consensus_edges, deterministic_chronology, falsify, strong_causal_relations,
    write_scores_csv, FalsifyConfig, PermutationReference,
};
use eventchron::dataset::{exclude_events, load_reads, write_reads, EventMatrix, TokenSchema};
use eventchron::discovery::{learn, log_grid, Algorithm, Correction, LearnerConfig};
use eventchron::imputation::{em_impute, EmConfig, InitialMethod};
use eventchron::pipeline::{rerun_manifest, run_pipeline, InputSource, PipelineConfig, PipelineError, ReferenceModel};
use eventchron::scenario::{simulate, Preset, ScenarioSpec};

#[derive(Parser)]
#[command(name = "eventchron", version, about = "Causal chronologies of binary maturation events")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic read matrix with block missingness and its ground truth.
    Simulate(SimulateArgs),
    /// Fill missing cells by EM over a learned network.
    Impute(ImputeArgs),
    /// Learn a DAG from a complete matrix.
    Discover(DiscoverArgs),
    /// Estimate and refute the effect along every edge of a DAG.
    Effects(EffectsArgs),
    /// Build the chronology tree from a DAG and its effect table.
    Chronology(ChronologyArgs),
    /// Frequency-rule chronology from pairwise co-occurrence tests.
    Baseline(BaselineArgs),
    /// Score candidate DAGs on the same data by BIC.
    Compare(CompareArgs),
    /// Permutation falsification test of a DAG against data.
    Falsify(FalsifyArgs),
    /// Run every stage end to end.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Read matrix (CSV/TSV, header of event names).
    #[arg(short, long, visible_alias = "data")]
    input: PathBuf,
    /// JSON token schema {"one": [..], "zero": [..], "missing": [..]}.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Events to drop before analysis.
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<String>,
}

#[derive(Args)]
struct ScenarioArgs {
    /// chain, chain-<d>, fork, collider, diamond, random-<d>-<p>, ndhB, ndhD.
    #[arg(long, conflicts_with = "network")]
    preset: Option<Preset>,
    /// Generating network as JSON.
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    missing_rate: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for reads.csv, complete.csv, truth.json, truth.edges, truth.dot.
    #[arg(short, long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ImputeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, visible_alias = "method", default_value = "mode")]
    initial: InitialMethod,
    #[arg(long, default_value = "hc")]
    learner: Algorithm,
    #[arg(long, default_value_t = 10)]
    max_iter: usize,
    #[arg(long, default_value_t = 0.01)]
    tol: f64,
    #[arg(long, default_value_t = 1.0)]
    ess: f64,
    /// JSON learner hyperparameters.
    #[arg(long)]
    learner_config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Completed matrix (stdout if omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Convergence report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct DiscoverArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(short, long, visible_alias = "algo", default_value = "hc")]
    algorithm: Algorithm,
    #[arg(long)]
    learner_config: Option<PathBuf>,
    /// PC significance level.
    #[arg(long)]
    alpha: Option<f64>,
    /// NOTEARS penalty for a single run.
    #[arg(long, conflicts_with = "lambda_grid")]
    lambda: Option<f64>,
    /// Log-spaced stability grid, as lo:hi:k.
    #[arg(long, value_parser = parse_grid)]
    lambda_grid: Option<Grid>,
    /// NOTEARS weight threshold.
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    resamples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Writes <OUT>.edges and <OUT>.dot, plus <OUT>.json for stability runs.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct EffectsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    dag: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    ess: f64,
    #[arg(long)]
    no_refute: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Effect table CSV (stdout if omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ChronologyArgs {
    #[arg(long)]
    dag: PathBuf,
    #[arg(long)]
    effects: PathBuf,
    /// Writes <OUT>.edges, <OUT>.dot and <OUT>.json.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// bh or bonferroni.
    #[arg(long, default_value = "bh")]
    correction: Correction,
    /// Writes <OUT>.edges, <OUT>.dot and <OUT>.json.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    input: InputArgs,
    /// name=path.edges, repeatable.
    #[arg(long = "model", required = true)]
    models: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    ess: f64,
    /// Scores CSV (stdout if omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Edge-agreement summary as JSON.
    #[arg(long)]
    consensus: Option<PathBuf>,
}

#[derive(Args)]
struct FalsifyArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    dag: PathBuf,
    #[arg(long, default_value_t = 20)]
    n_perm: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha_ci: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha_f: f64,
    /// Compare against every permutation instead of non-equivalent ones only.
    #[arg(long)]
    uniform: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Verdict JSON (stdout if omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// JSON configuration; flags below override its values.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Re-run the configuration recorded in a manifest.
    #[arg(long, conflicts_with_all = ["config", "input", "preset"])]
    manifest: Option<PathBuf>,
    #[arg(short, long)]
    input: Option<PathBuf>,
    #[arg(long, conflicts_with = "input")]
    preset: Option<Preset>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    missing_rate: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    exclude: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<Algorithm>>,
    /// name=path.edges, repeatable.
    #[arg(long = "reference")]
    references: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
}

enum Failure {
    Invalid(anyhow::Error),
    Stage(anyhow::Error),
}

type Outcome = Result<(), Failure>;

fn invalid<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Invalid(e.into())
}

fn failed(stage: &'static str) -> impl Fn(anyhow::Error) -> Failure {
    move |e| Failure::Stage(e.context(format!("stage '{stage}' failed")))
}

trait StageResult<T> {
    fn stage(self, name: &'static str) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> StageResult<T> for Result<T, E> {
    fn stage(self, name: &'static str) -> Result<T, Failure> {
        self.map_err(|e| failed(name)(e.into()))
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(invalid)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read_text(path)?).with_context(|| format!("parsing {}", path.display())).map_err(invalid)
}

fn read_dag(path: &Path) -> Result<Dag, Failure> {
    Dag::from_edge_list(&read_text(path)?).with_context(|| format!("parsing {}", path.display())).map_err(invalid)
}

fn load(args: &InputArgs) -> Result<EventMatrix, Failure> {
    let schema = match &args.schema {
        Some(p) => {
            let s: TokenSchema = read_json(p)?;
            s.validate().map_err(invalid)?;
            s
        }
        None => TokenSchema::default(),
    };
    let m = load_reads(&args.input, &schema).with_context(|| format!("loading {}", args.input.display())).map_err(invalid)?;
    let drop: BTreeSet<String> = args.exclude.iter().cloned().collect();
    exclude_events(&m, &drop).map_err(invalid)
}

fn learner_config(path: &Option<PathBuf>) -> Result<LearnerConfig, Failure> {
    path.as_deref().map_or(Ok(LearnerConfig::default()), read_json)
}

fn write_out(path: &Option<PathBuf>, bytes: &[u8]) -> Outcome {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())).map_err(failed("write")),
        None => io::stdout().write_all(bytes).map_err(|e| failed("write")(e.into())),
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s.into_bytes()
}

fn with_ext(stem: &Path, ext: &str) -> Option<PathBuf> {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    Some(PathBuf::from(s))
}

fn write_graph(stem: &Path, dag: &Dag) -> Outcome {
    write_out(&with_ext(stem, "edges"), dag.to_edge_list().as_bytes())?;
    write_out(&with_ext(stem, "dot"), dag.to_dot().as_bytes())
}

fn csv_bytes(m: &EventMatrix) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    write_reads(m, &mut buf, b',').stage("write")?;
    Ok(buf)
}

fn named_paths(specs: &[String]) -> Result<Vec<(String, PathBuf)>, Failure> {
    specs
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(n, p)| (n.to_string(), PathBuf::from(p)))
                .ok_or_else(|| invalid(anyhow!("expected name=path, got {s:?}")))
        })
        .collect()
}

fn scenario_spec(args: &ScenarioArgs, seed: u64) -> Result<ScenarioSpec, Failure> {
    let network: Option<NetworkJson> = args.network.as_deref().map(read_json).transpose()?;
    if args.preset.is_none() && network.is_none() {
        return Err(invalid(anyhow!("one of --preset or --network is required")));
    }
    Ok(ScenarioSpec {
        preset: args.preset.clone(),
        network,
        n_rows: args.rows,
        missing_rate: args.missing_rate,
        seed,
    })
}

fn cmd_simulate(a: SimulateArgs) -> Outcome {
    let spec = scenario_spec(&a.scenario, a.seed)?;
    let sim = simulate(&spec).map_err(invalid)?;
    fs::create_dir_all(&a.out_dir).stage("write")?;
    let dir = &a.out_dir;
    write_out(&Some(dir.join("reads.csv")), &csv_bytes(&sim.data)?)?;
    write_out(&Some(dir.join("complete.csv")), &csv_bytes(&sim.complete)?)?;
    write_out(&Some(dir.join("truth.json")), &json_bytes(&sim.truth))?;
    write_graph(&dir.join("truth"), sim.network.dag())?;
    log::info!("{} rows, {} missing cells", sim.data.n_rows(), sim.data.missing_count());
    Ok(())
}

fn cmd_impute(a: ImputeArgs) -> Outcome {
    let m = load(&a.input)?;
    let cfg = EmConfig {
        initial: a.initial,
        algorithm: a.learner,
        learner: learner_config(&a.learner_config)?,
        max_iter: a.max_iter,
        tol: a.tol,
        ess: a.ess,
    };
    let res = em_impute(&m, &cfg, a.seed).stage("impute")?;
    write_out(&a.output, &csv_bytes(&res.completed)?)?;
    if a.report.is_some() {
        write_out(&a.report, &json_bytes(&res.report()))?;
    }
    Ok(())
}

fn cmd_discover(a: DiscoverArgs) -> Outcome {
    let m = load(&a.input)?;
    let mut cfg = learner_config(&a.learner_config)?;
    if let Some(alpha) = a.alpha {
        cfg.pc.alpha = alpha;
    }
    if let Some(lambda) = a.lambda {
        cfg.notears.lambda = lambda;
    }
    if let Some(Grid(grid)) = a.lambda_grid {
        cfg.stability.lambda_grid = grid;
    }
    if let Some(omega) = a.omega {
        cfg.notears.omega = omega;
        cfg.stability.notears.omega = omega;
    }
    if let Some(n) = a.resamples {
        cfg.stability.n_resamples = n;
    }
    let learned = learn(&m, a.algorithm, &cfg, a.seed).stage("discover")?;
    for (x, y) in &learned.order_forced {
        log::warn!("orientation of {x} - {y} forced by column order");
    }
    write_graph(&a.out, &learned.dag)?;
    if let Some(report) = &learned.stability {
        write_out(&with_ext(&a.out, "json"), &json_bytes(report))?;
    }
    Ok(())
}

#[derive(Clone)]
struct Grid(Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, k] = parts[..] else {
        return Err("expected lo:hi:k".into());
    };
    let lo: f64 = lo.parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("{e}"))?;
    let k: usize = k.parse().map_err(|e| format!("{e}"))?;
    if !(lo > 0.0 && hi >= lo && k >= 1) {
        return Err("need 0 < lo <= hi and k >= 1".into());
    }
    Ok(Grid(log_grid(lo, hi, k)))
}

fn cmd_effects(a: EffectsArgs) -> Outcome {
    let m = load(&a.input)?;
    let dag = read_dag(&a.dag)?;
    let bn = fit_cpts(&dag, &m, a.ess).stage("effects")?;
    let cfg = EffectsConfig {
        refute: !a.no_refute,
        ..EffectsConfig::default()
    };
    let table = effects_for_dag(&bn, &m, &cfg, a.seed);
    let mut buf = Vec::new();
    table.write_csv(&mut buf).stage("effects")?;
    write_out(&a.output, &buf)
}

fn cmd_chronology(a: ChronologyArgs) -> Outcome {
    let dag = read_dag(&a.dag)?;
    let text = read_text(&a.effects)?;
    let table = CausalRelationTable::read_csv(text.as_bytes()).map_err(invalid)?;
    let strong = strong_causal_relations(&table, &dag);
    let tree = build_chronology(&dag, &strong).stage("chronology")?;
    write_out(&with_ext(&a.out, "edges"), tree.to_edge_list().as_bytes())?;
    write_out(&with_ext(&a.out, "dot"), tree.to_dot().as_bytes())?;
    write_out(&with_ext(&a.out, "json"), &json_bytes(&tree))
}

fn cmd_baseline(a: BaselineArgs) -> Outcome {
    let m = load(&a.input)?;
    let base = deterministic_chronology(&m, a.alpha, a.correction).stage("baseline")?;
    write_graph(&a.out, &base.graph())?;
    write_out(&with_ext(&a.out, "json"), &json_bytes(&base))
}

fn cmd_compare(a: CompareArgs) -> Outcome {
    let m = load(&a.input)?;
    let models = named_paths(&a.models)?
        .into_iter()
        .map(|(n, p)| Ok((n, read_dag(&p)?)))
        .collect::<Result<Vec<_>, Failure>>()?;
    let scores = compare_models(&models, &m, a.ess).stage("compare")?;
    let mut buf = Vec::new();
    write_scores_csv(&scores, &mut buf).stage("compare")?;
    write_out(&a.output, &buf)?;
    if a.consensus.is_some() {
        let dags: Vec<Dag> = models.into_iter().map(|(_, g)| g).collect();
        write_out(&a.consensus, &json_bytes(&consensus_edges(&dags)))?;
    }
    Ok(())
}

fn cmd_falsify(a: FalsifyArgs) -> Outcome {
    let m = load(&a.input)?;
    let dag = read_dag(&a.dag)?;
    let cfg = FalsifyConfig {
        n_perm: a.n_perm,
        alpha_ci: a.alpha_ci,
        alpha_f: a.alpha_f,
        reference: if a.uniform { PermutationReference::Uniform } else { PermutationReference::NonEquivalent },
        ..FalsifyConfig::default()
    };
    let verdict = falsify(&dag, &m, &cfg, a.seed).stage("falsify")?;
    write_out(&a.output, &json_bytes(&verdict))
}

fn pipeline_config(a: PipelineArgs) -> Result<PipelineConfig, Failure> {
    let flag_input = match (&a.input, &a.preset) {
        (Some(p), _) => Some(InputSource::Path(p.clone())),
        (None, Some(preset)) => Some(InputSource::Scenario(ScenarioSpec {
            preset: Some(preset.clone()),
            network: None,
            n_rows: a.rows,
            missing_rate: a.missing_rate,
            seed: a.seed.unwrap_or(0),
        })),
        (None, None) => None,
    };
    let mut cfg = match (&a.config, flag_input) {
        (Some(p), input) => {
            let mut cfg = PipelineConfig::from_json(&read_text(p)?).map_err(invalid)?;
            if let Some(input) = input {
                cfg.input = input;
            }
            cfg
        }
        (None, Some(input)) => {
            let dir = a.output_dir.clone().ok_or_else(|| invalid(anyhow!("--output-dir is required without --config")))?;
            PipelineConfig::new(input, dir)
        }
        (None, None) => return Err(invalid(anyhow!("one of --config, --input or --preset is required"))),
    };
    if let InputSource::Scenario(spec) = &mut cfg.input {
        spec.n_rows = a.rows.or(spec.n_rows);
        spec.missing_rate = a.missing_rate.or(spec.missing_rate);
    }
    if let Some(dir) = a.output_dir {
        cfg.output_dir = dir;
    }
    if let Some(x) = a.exclude {
        cfg.exclude_events = x;
    }
    if let Some(algos) = a.algorithms {
        cfg.algorithms = algos;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    for (name, path) in named_paths(&a.references)? {
        cfg.reference_models.push(ReferenceModel { name, path });
    }
    Ok(cfg)
}

fn cmd_pipeline(a: PipelineArgs) -> Outcome {
    let result = match &a.manifest {
        Some(m) => rerun_manifest(m, a.output_dir.as_deref()),
        None => run_pipeline(&pipeline_config(a)?),
    };
    match result {
        Ok(report) => {
            for m in &report.models {
                let v = &m.verdict;
                println!(
                    "{}\tedges={}\tfalsifiable={}\tfalsified={}\tp={:.3}",
                    m.name,
                    m.edges.len(),
                    v.falsifiable,
                    v.falsified,
                    v.p_value
                );
            }
            Ok(())
        }
        Err(e @ PipelineError::Invalid(_)) => Err(invalid(e)),
        Err(e) => Err(Failure::Stage(e.into())),
    }
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Impute(a) => cmd_impute(a),
        Command::Discover(a) => cmd_discover(a),
        Command::Effects(a) => cmd_effects(a),
        Command::Chronology(a) => cmd_chronology(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Falsify(a) => cmd_falsify(a),
        Command::Pipeline(a) => cmd_pipeline(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = match cli.jobs {
        Some(0) => Err(invalid(anyhow!("--jobs must be at least 1"))),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(invalid(e)),
        },
        None => dispatch(cli.command),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Stage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
