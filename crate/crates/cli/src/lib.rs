//! Command-line driver for the `lfrerank` pipeline.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or protocol
//! errors. Diagnostics go to stderr; data goes to files or stdout.

mod config;
mod demo;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand};

use lfrerank::dataset::{read_beams, read_dataset, Beams, DatasetExample};
use lfrerank::eval::{
    generator_predictions, oracle_at_k, render_summary, render_table, report, top1_accuracy, ReportConfig, TableRow,
};
use lfrerank::lf::{normalize, parse, Formalism};
use lfrerank::pairgen::{generate_dataset, read_pairs_file, shuffle_pairs, write_pairs, PairGenConfig};
use lfrerank::preprocess::{process, EntityLexicon, Method, Resources, TemplateGrammar};
use lfrerank::rerank::{
    predictions, read_predictions, rerank_dataset, write_results, Critic, RerankOptions, RerankPolicy, Rule,
};
use lfrerank::scorer::{
    pair_accuracy, train_baseline, BaselineModel, ConstantScorer, RemoteScorer, Scorer, TrainConfig,
};

/// An error caused by how the program was invoked rather than by its input
/// data.
#[derive(Debug)]
pub(crate) struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

#[derive(Debug, Parser)]
#[command(name = "lfrerank", version, about = "Critic-based reranking of semantic parser beams")]
#[command(args_override_self = true)]
struct Cli {
    /// TOML file supplying default flag values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for per-example work (1 = sequential reference run).
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the normal form of each logical form, one per line.
    Normalize(NormalizeArgs),
    /// Turn beam candidates into text with one processing method.
    Process(ProcessArgs),
    /// Generate critic training pairs.
    GenPairs(GenPairsArgs),
    /// Train the built-in baseline critic.
    Train(TrainArgs),
    /// Rerank beams with a critic.
    Rerank(RerankArgs),
    /// Score rerank results against the gold forms.
    Evaluate(EvaluateArgs),
    /// Top-k oracle rates of the beams.
    Oracle(OracleArgs),
    /// Run the full experiment on a synthetic corpus.
    Demo(demo::DemoArgs),
}

pub(crate) const COMMANDS: [&str; 8] =
    ["normalize", "process", "gen-pairs", "train", "rerank", "evaluate", "oracle", "demo"];

#[derive(Debug, Args)]
struct NormalizeArgs {
    #[arg(long, value_parser = Formalism::from_str)]
    formalism: Formalism,
    /// Input file, one logical form per line; `-` reads stdin.
    #[arg(long, default_value = "-")]
    input: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Dataset JSONL.
    #[arg(long)]
    dataset: PathBuf,
    /// Beam JSONL.
    #[arg(long)]
    beams: PathBuf,
}

#[derive(Debug, Args)]
struct ResourceArgs {
    #[arg(long, value_parser = Method::from_str, default_value = "raw")]
    method: Method,
    /// Entity lexicon TSV (needed by entity_names).
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Template grammar (needed by templated).
    #[arg(long)]
    grammar: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProcessArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    resources: ResourceArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenPairsArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    resources: ResourceArgs,
    /// Leave the gold candidate out of beam/beam negatives.
    #[arg(long)]
    no_gold_in_beam_pairs: bool,
    /// Emit no beam/beam negatives at all.
    #[arg(long)]
    no_beam_beam_pairs: bool,
    /// Shuffle the corpus with this seed.
    #[arg(long)]
    shuffle_seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Pair JSONL from gen-pairs.
    #[arg(long)]
    pairs: PathBuf,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    learning_rate: f64,
    #[arg(long, default_value_t = TrainConfig::default().seed)]
    seed: u64,
    /// Plain log-loss without class weights.
    #[arg(long)]
    no_balance: bool,
    /// Held-out pairs to report accuracy on.
    #[arg(long)]
    eval_pairs: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RerankArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    resources: ResourceArgs,
    #[arg(long, value_parser = Rule::from_str, default_value = "always")]
    rule: Rule,
    /// Use only the top N candidates of each beam.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    beam_size: Option<u64>,
    /// baseline:<model>, remote:<url>, oracle or constant:<value>.
    #[arg(long)]
    scorer: ScorerSpec,
    #[arg(long, default_value_t = lfrerank::rerank::DEFAULT_SCORE_FLOOR)]
    score_floor: f64,
    #[arg(long, default_value_t = lfrerank::rerank::DEFAULT_MARGIN)]
    margin: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Results JSONL from rerank.
    #[arg(long)]
    results: PathBuf,
    /// Oracle depths, comma-separated.
    #[arg(long, default_value = "10,25", value_parser = parse_ks)]
    ks: Ks,
    /// Domains expected in the report, comma-separated.
    #[arg(long)]
    domains: Option<String>,
    /// Write the report as JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "1,10,25", value_parser = parse_ks)]
    ks: Ks,
}

#[derive(Debug, Clone)]
struct Ks(Vec<usize>);

fn parse_ks(s: &str) -> Result<Ks, String> {
    let ks = s
        .split(',')
        .map(|k| match k.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(k),
            _ => Err(format!("invalid depth {k:?}")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Ks(ks))
}

#[derive(Debug, Clone)]
enum ScorerSpec {
    Baseline(PathBuf),
    Remote(String),
    Oracle,
    Constant(f64),
}

impl FromStr for ScorerSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "oracle" {
            return Ok(ScorerSpec::Oracle);
        }
        match s.split_once(':') {
            Some(("baseline", p)) if !p.is_empty() => Ok(ScorerSpec::Baseline(PathBuf::from(p))),
            Some(("remote", u)) if !u.is_empty() => Ok(ScorerSpec::Remote(u.to_string())),
            Some(("constant", v)) => v
                .parse::<f64>()
                .ok()
                .filter(|v| (0.0..=1.0).contains(v))
                .map(ScorerSpec::Constant)
                .ok_or_else(|| format!("constant score {v:?} must be a number in [0, 1]")),
            _ => Err(format!("unknown scorer {s:?} (expected baseline:<model>, remote:<url>, oracle or constant:<v>)")),
        }
    }
}

/// Runs the program and returns its exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let argv = match config::apply(argv) {
        Ok(a) => a,
        Err(e) => return report_error(&e),
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return 0;
            }
            if !e.to_string().contains("Usage:") {
                eprintln!("\n{}", usage_text(&argv));
            }
            return 1;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => report_error(&e),
    }
}

fn usage_text(argv: &[String]) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    let sub = config::subcommand_index(argv).map(|i| argv[i].clone());
    match sub.and_then(|name| cmd.find_subcommand_mut(name).cloned()) {
        Some(mut sub) => sub.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}

fn report_error(e: &anyhow::Error) -> i32 {
    eprintln!("error: {e:#}");
    if e.downcast_ref::<Usage>().is_some() {
        1
    } else {
        2
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let jobs = cli.jobs as usize;
    match cli.command {
        Command::Normalize(a) => cmd_normalize(a),
        Command::Process(a) => cmd_process(a),
        Command::GenPairs(a) => cmd_gen_pairs(a, jobs),
        Command::Train(a) => cmd_train(a),
        Command::Rerank(a) => cmd_rerank(a, jobs),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Demo(a) => demo::run(a, jobs),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("{}", p.display()))?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn load_data(d: &DataArgs) -> Result<(Vec<DatasetExample>, Beams)> {
    let dataset = read_dataset(&d.dataset)?;
    let beams = read_beams(&d.beams, &dataset)?;
    Ok((dataset, beams))
}

fn load_resources(r: &ResourceArgs) -> Result<Resources> {
    let resources = Resources {
        lexicon: r.lexicon.as_deref().map(EntityLexicon::load).transpose()?,
        grammar: r.grammar.as_deref().map(TemplateGrammar::load).transpose()?,
    };
    match r.method {
        Method::EntityNames if resources.lexicon.is_none() => usage("--method entity_names needs --lexicon"),
        Method::Templated if resources.grammar.is_none() => usage("--method templated needs --grammar"),
        _ => Ok(resources),
    }
}

fn cmd_normalize(a: NormalizeArgs) -> Result<()> {
    let mut text = String::new();
    if a.input == "-" {
        std::io::stdin().read_to_string(&mut text)?;
    } else {
        let f = File::open(&a.input).with_context(|| a.input.clone())?;
        BufReader::new(f).read_to_string(&mut text).with_context(|| a.input.clone())?;
    }
    let mut out = output(a.out.as_deref())?;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let nf =
            parse(line, a.formalism).and_then(|t| normalize(&t)).map_err(|e| anyhow!("{}:{}: {e}", a.input, i + 1))?;
        writeln!(out, "{}", nf.text())?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_process(a: ProcessArgs) -> Result<()> {
    let (dataset, beams) = load_data(&a.data)?;
    let resources = load_resources(&a.resources)?;
    let mut out = output(a.out.as_deref())?;
    for ex in &dataset {
        let Some(beam) = beams.get(ex.id()) else {
            return Err(anyhow!("no beam for example {:?}", ex.id()));
        };
        for p in process(beam, a.resources.method, &resources)? {
            let record = serde_json::json!({
                "candidate_id": format!("{}:{}", ex.id(), p.rank),
                "method": p.method.as_str(),
                "text": p.text.text().unwrap_or("EXCLUDED"),
            });
            writeln!(out, "{record}")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_gen_pairs(a: GenPairsArgs, jobs: usize) -> Result<()> {
    let (dataset, beams) = load_data(&a.data)?;
    let resources = load_resources(&a.resources)?;
    let config = PairGenConfig {
        include_gold_in_beam_pairs: !a.no_gold_in_beam_pairs,
        beam_beam_negatives: !a.no_beam_beam_pairs,
    };
    let mut pairs = generate_dataset(&dataset, &beams, a.resources.method, &resources, config, jobs)?;
    if let Some(seed) = a.shuffle_seed {
        shuffle_pairs(&mut pairs, seed);
    }
    let f = File::create(&a.out).with_context(|| a.out.display().to_string())?;
    write_pairs(BufWriter::new(f), &pairs).with_context(|| a.out.display().to_string())?;
    log::info!("wrote {} pairs to {}", pairs.len(), a.out.display());
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let pairs = read_pairs_file(&a.pairs).map_err(|e| anyhow!(e))?;
    let config = TrainConfig {
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        seed: a.seed,
        balance_classes: !a.no_balance,
        ..TrainConfig::default()
    };
    let model = train_baseline(&pairs, config)?;
    model.save(&a.out)?;
    eprintln!("training pair accuracy: {:.4} over {} pairs", pair_accuracy(&model, &pairs), pairs.len());
    if let Some(path) = &a.eval_pairs {
        let held = read_pairs_file(path).map_err(|e| anyhow!(e))?;
        println!("held-out pair accuracy: {:.4} over {} pairs", pair_accuracy(&model, &held), held.len());
    }
    Ok(())
}

fn build_scorer(spec: &ScorerSpec) -> Result<Option<Box<dyn Scorer>>> {
    Ok(match spec {
        ScorerSpec::Baseline(p) => Some(Box::new(BaselineModel::load(p)?)),
        ScorerSpec::Remote(u) => Some(Box::new(RemoteScorer::new(u))),
        ScorerSpec::Constant(v) => Some(Box::new(ConstantScorer::new(*v)?)),
        ScorerSpec::Oracle => None,
    })
}

fn cmd_rerank(a: RerankArgs, jobs: usize) -> Result<()> {
    let policy = RerankPolicy::new(a.resources.method, a.rule)
        .with_thresholds(a.score_floor, a.margin)
        .map_err(|e| Usage(e.to_string()))?;
    let (dataset, beams) = load_data(&a.data)?;
    let resources = load_resources(&a.resources)?;
    let scorer = build_scorer(&a.scorer)?;
    let critic = match &scorer {
        Some(s) => Critic::Model(s.as_ref()),
        None => Critic::Oracle,
    };
    let options = RerankOptions { beam_size: a.beam_size.map(|k| k as usize), jobs };
    let results = rerank_dataset(&dataset, &beams, &policy, critic, &resources, options)?;
    write_results(&a.out, &results)?;
    let reranked = results.iter().filter(|r| r.reranked).count();
    let accuracy = top1_accuracy(&predictions(&results), &dataset)?;
    eprintln!("reranked {reranked} of {} examples; top-1 accuracy {:.4}", results.len(), accuracy);
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let (dataset, beams) = load_data(&a.data)?;
    let predictions = read_predictions(&a.results, &dataset)?;
    let rep = report(
        &dataset,
        &beams,
        &predictions,
        &ReportConfig {
            ks: a.ks.0.clone(),
            domains: a
                .domains
                .iter()
                .flat_map(|d| d.split(','))
                .map(|d| d.trim().to_string())
                .filter(|d| !d.is_empty())
                .collect(),
        },
    )?;
    let mut rows = vec![TableRow::generator("Generator", &rep), TableRow::reranked("Reranked", &rep)];
    rows.extend(rep.oracle.keys().map(|k| TableRow::oracle(&format!("Oracle@{k}"), &rep, *k)));
    print!("{}\n{}", render_summary(&rep, "Reranked"), render_table(&rows));
    if let Some(path) = &a.json {
        std::fs::write(path, rep.to_json()).with_context(|| path.display().to_string())?;
    }
    Ok(())
}

fn cmd_oracle(a: OracleArgs) -> Result<()> {
    let (dataset, beams) = load_data(&a.data)?;
    let generator = top1_accuracy(&generator_predictions(&dataset, &beams)?, &dataset)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "generator_top1\t{generator:.4}")?;
    for k in &a.ks.0 {
        writeln!(out, "oracle@{k}\t{:.4}", oracle_at_k(&beams, &dataset, *k)?)?;
    }
    Ok(())
}
