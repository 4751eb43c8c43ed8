//! `demo`: synthetic corpus, critic training, reranking under every method
//! and rule, and a per-domain report.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;

use lfrerank::dataset::{write_beams, write_dataset};
use lfrerank::eval::{render_summary, render_table, report, EvalReport, ReportConfig, TableRow};
use lfrerank::pairgen::{generate_dataset, write_pairs, PairGenConfig};
use lfrerank::preprocess::Method;
use lfrerank::rerank::{predictions, rerank_dataset, write_results, Critic, RerankOptions, RerankPolicy, Rule};
use lfrerank::scorer::{pair_accuracy, train_baseline, TrainConfig};
use lfrerank::synth::{demo_grammar_text, demo_lexicon_tsv, demo_resources, generate_corpus, SynthConfig, DOMAINS};

#[derive(Debug, Args)]
pub(crate) struct DemoArgs {
    /// Directory for the corpus, resources, models, results and report.
    #[arg(long, default_value = "lfrerank-demo")]
    out_dir: PathBuf,
    /// Seed of the evaluation corpus; the training corpus uses seed + 1000.
    #[arg(long, default_value_t = SynthConfig::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    epochs: usize,
}

#[derive(Serialize)]
struct PairStats {
    pairs: &'static str,
    method: Method,
    train_pairs: usize,
    train_accuracy: f64,
    test_pairs: usize,
    test_accuracy: f64,
}

#[derive(Serialize)]
struct DemoReport<'a> {
    metric: &'a str,
    average: &'a str,
    examples: usize,
    beam_size: usize,
    generator: &'a EvalReport,
    critics: Vec<PairStats>,
    rows: Vec<TableRow>,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| path.display().to_string())
}

pub(crate) fn run(a: DemoArgs, jobs: usize) -> Result<()> {
    let started = Instant::now();
    let dir = &a.out_dir;
    std::fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;

    let test_cfg = SynthConfig { seed: a.seed, id_prefix: "test".to_string(), ..SynthConfig::default() };
    let train_cfg = SynthConfig { seed: a.seed + 1000, ..SynthConfig::training() };
    let test = generate_corpus(&test_cfg)?;
    let train = generate_corpus(&train_cfg)?;
    let resources = demo_resources();

    write_text(&dir.join("grammar.txt"), &demo_grammar_text())?;
    write_text(&dir.join("lexicon.tsv"), &demo_lexicon_tsv())?;
    write_dataset(&dir.join("train_dataset.jsonl"), &train.dataset)?;
    write_beams(&dir.join("train_beams.jsonl"), &train.dataset, &train.beams)?;
    write_dataset(&dir.join("test_dataset.jsonl"), &test.dataset)?;
    write_beams(&dir.join("test_beams.jsonl"), &test.dataset, &test.beams)?;

    let report_cfg = ReportConfig { ks: vec![1, 10, 25], domains: DOMAINS.iter().map(|d| d.to_string()).collect() };
    let results_dir = dir.join("results");
    std::fs::create_dir_all(&results_dir).with_context(|| results_dir.display().to_string())?;
    let options = RerankOptions { beam_size: None, jobs };

    let oracle_policy = RerankPolicy::new(Method::Templated, Rule::Always);
    let oracle_results =
        rerank_dataset(&test.dataset, &test.beams, &oracle_policy, Critic::Oracle, &resources, options)?;
    write_results(&results_dir.join("templated_always_oracle.jsonl"), &oracle_results)?;
    let oracle_report = report(&test.dataset, &test.beams, &predictions(&oracle_results), &report_cfg)?;

    let rows = vec![
        TableRow::generator("Generator", &oracle_report),
        TableRow::oracle("Oracle@10", &oracle_report, 10),
        TableRow::reranked("templated always (oracle critic)", &oracle_report),
    ];
    let pair_sets = [
        ("all", PairGenConfig::default()),
        ("utterance", PairGenConfig { beam_beam_negatives: false, ..PairGenConfig::default() }),
    ];
    let mut critics = Vec::new();
    let mut critic_rows: Vec<Vec<TableRow>> = Vec::new();
    let train_config = TrainConfig { epochs: a.epochs, ..TrainConfig::default() };
    for (set, pair_config) in pair_sets {
        let mut set_rows = Vec::new();
        for method in Method::ALL {
            let name = method.as_str();
            let pairs = generate_dataset(&train.dataset, &train.beams, method, &resources, pair_config, jobs)?;
            let held = generate_dataset(&test.dataset, &test.beams, method, &resources, pair_config, jobs)?;
            let pairs_path = dir.join(format!("pairs_{set}_{name}.jsonl"));
            let f = File::create(&pairs_path).with_context(|| pairs_path.display().to_string())?;
            write_pairs(BufWriter::new(f), &pairs).with_context(|| pairs_path.display().to_string())?;

            let model = train_baseline(&pairs, train_config)?;
            model.save(&dir.join(format!("model_{set}_{name}.json")))?;
            critics.push(PairStats {
                pairs: set,
                method,
                train_pairs: pairs.len(),
                train_accuracy: pair_accuracy(&model, &pairs),
                test_pairs: held.len(),
                test_accuracy: pair_accuracy(&model, &held),
            });

            for rule in Rule::ALL {
                let policy = RerankPolicy::new(method, rule);
                let results =
                    rerank_dataset(&test.dataset, &test.beams, &policy, Critic::Model(&model), &resources, options)?;
                write_results(&results_dir.join(format!("{set}_{name}_{rule}.jsonl")), &results)?;
                let rep = report(&test.dataset, &test.beams, &predictions(&results), &report_cfg)?;
                set_rows.push(TableRow::reranked(&format!("{name} {rule}"), &rep));
            }
        }
        critic_rows.push(set_rows);
    }

    let mut text = format!(
        "Synthetic Overnight-style corpus: {} test examples, beam size {}, {} training examples.\n\
         Metric: {}; Avg. is the macro mean over domains. Values are percentages.\n\n",
        test.dataset.len(),
        test_cfg.beam_size,
        train.dataset.len(),
        oracle_report.metric,
    );
    text.push_str(&render_summary(&oracle_report, "Oracle critic"));
    text.push_str("\nBaseline critic pair accuracy (train / held-out):\n");
    for c in &critics {
        text.push_str(&format!(
            "  {:<9} {:<13} {:.3} over {} pairs / {:.3} over {} pairs\n",
            c.pairs,
            c.method.as_str(),
            c.train_accuracy,
            c.train_pairs,
            c.test_accuracy,
            c.test_pairs
        ));
    }
    text.push_str("\nTop-1 accuracy by domain:\n");
    text.push_str(&render_table(&rows));
    text.push_str("\nBaseline critic trained on all pairs:\n");
    text.push_str(&render_table(&critic_rows[0]));
    text.push_str("\nBaseline critic trained on utterance pairs only (no beam/beam negatives):\n");
    text.push_str(&render_table(&critic_rows[1]));
    print!("{text}");
    write_text(&dir.join("report.txt"), &text)?;

    let json = DemoReport {
        metric: &oracle_report.metric,
        average: &oracle_report.average,
        examples: test.dataset.len(),
        beam_size: test_cfg.beam_size,
        generator: &oracle_report,
        critics,
        rows: rows.into_iter().chain(critic_rows.into_iter().flatten()).collect(),
    };
    let mut json = serde_json::to_string_pretty(&json)?;
    json.push('\n');
    write_text(&dir.join("report.json"), &json)?;
    eprintln!("wrote {} in {:.1}s", dir.display(), started.elapsed().as_secs_f64());
    Ok(())
}
