use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use kgqa::answer::AnswerSet;
use kgqa::err::{correct_cql, SelectionMode};
use kgqa::fusion::FusionRule;
use kgqa::kg::KnowledgeGraph;
use kgqa::metrics::{aggregate, Report, Summary};
use kgqa::pipeline::{
    ablation, has_question_errors, run_benchmark, Engine, PipelineConfig, PipelineError, Translator, Workflows,
};
use kgqa::similarity::BigramDice;

#[derive(Parser)]
#[command(name = "kgqa", version, about = "Knowledge-graph question answering with query repair and retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Knowledge-graph utilities.
    Kg {
        #[command(subcommand)]
        action: KgAction,
    },
    /// Print the translator's query for a question.
    Translate {
        question: String,
        #[arg(long)]
        config: PathBuf,
    },
    /// Repair a query against the graph and print the correction as JSON.
    Err {
        question: String,
        cql: String,
        #[arg(long)]
        config: PathBuf,
        /// Gold answer (repeatable). Without gold, heuristic selection is used.
        #[arg(long = "gold")]
        gold: Vec<String>,
    },
    /// Answer a question through retrieval and print the context and answers.
    Search {
        question: String,
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a benchmark and write the report.
    Run {
        config: PathBuf,
        /// Report destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workflows: Option<Workflows>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, value_parser = parse_rule)]
        rule: Option<FusionRule>,
        #[arg(long)]
        concurrency: Option<usize>,
    },
    /// Recompute the aggregates of a saved report and compare them.
    Eval { report: PathBuf },
    /// Compare translator-only, searcher-only and fused runs.
    Ablate { config: PathBuf },
}

#[derive(Subcommand)]
enum KgAction {
    /// Triple, entity and relation counts.
    Stats { graph: PathBuf },
}

fn parse_rule(s: &str) -> Result<FusionRule, String> {
    match s.to_ascii_lowercase().as_str() {
        "dda" => Ok(FusionRule::Dda),
        "bna" => Ok(FusionRule::Bna),
        other => Err(format!("unknown fusion rule {other:?} (expected dda or bna)")),
    }
}

/// Failure before any question was processed.
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Fatal(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn engine(config: &Path) -> Result<Engine, PipelineError> {
    Engine::from_config(&PipelineConfig::load(config)?)
}

fn print_json(value: &impl serde::Serialize) -> Result<(), Fatal> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn summary_line(label: &str, s: &Summary) -> String {
    format!(
        "{label:<12} n={:<5} acc_lx={:.4} acc_ex={:.4} P={:.4} R={:.4} F1={:.4}",
        s.count, s.acc_lx, s.acc_ex, s.macro_p, s.macro_r, s.macro_f1
    )
}

fn dispatch(command: Command) -> Result<ExitCode, Fatal> {
    match command {
        Command::Kg {
            action: KgAction::Stats { graph },
        } => {
            let g = KnowledgeGraph::load_path(&graph)?;
            println!("triples\t{}", g.len());
            println!("entities\t{}", g.entity_names().len());
            println!("relations\t{}", g.relation_names().len());
        }
        Command::Translate { question, config } => {
            let engine = engine(&config)?;
            println!("{}", engine.translator.translate(&question)?);
        }
        Command::Err {
            question,
            cql,
            config,
            gold,
        } => {
            let engine = engine(&config)?;
            let mut err_config = engine.config.err;
            let gold: Option<AnswerSet> = (!gold.is_empty()).then(|| gold.into_iter().collect());
            if gold.is_none() && err_config.selection_mode == SelectionMode::Oracle {
                log::warn!("no gold answers given; using heuristic selection");
                err_config.selection_mode = SelectionMode::Heuristic;
            }
            let result = correct_cql(
                &question,
                &cql,
                &engine.graph,
                &err_config,
                &engine.selector,
                &BigramDice,
                gold.as_ref(),
            )?;
            print_json(&result)?;
        }
        Command::Search { question, config } => {
            let engine = engine(&config)?;
            let r = engine.search(&question)?;
            print_json(&json!({
                "topic_entities": r.context.topic_entities,
                "knowledge": r.context.verbalized,
                "answers": r.answers,
            }))?;
        }
        Command::Run {
            config,
            out,
            workflows,
            sigma,
            rule,
            concurrency,
        } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(w) = workflows {
                cfg.workflows = w;
            }
            if let Some(s) = sigma {
                cfg.fusion.sigma = s;
            }
            if let Some(r) = rule {
                cfg.fusion.rule = r;
            }
            if let Some(c) = concurrency {
                cfg.concurrency = c;
            }
            cfg.validate()?;
            let report = run_benchmark(&cfg)?;
            let text = serde_json::to_string_pretty(&report)?;
            match out {
                Some(path) => std::fs::write(&path, text + "\n").map_err(|e| Fatal(format!("{}: {e}", path.display())))?,
                None => println!("{text}"),
            }
            eprintln!("{}", summary_line("all", &report.summary));
            for (d, s) in &report.by_difficulty {
                eprintln!("{}", summary_line(&format!("{d:?}").to_lowercase(), s));
            }
            if has_question_errors(&report) {
                let n = report.records.iter().filter(|r| !r.errors.is_empty()).count();
                eprintln!("{n} question(s) recorded errors");
                return Ok(ExitCode::from(2));
            }
        }
        Command::Eval { report } => {
            let text = std::fs::read_to_string(&report).map_err(|e| Fatal(format!("{}: {e}", report.display())))?;
            let saved: Report = serde_json::from_str(&text)?;
            let recomputed = aggregate(saved.records.clone())?;
            println!("{}", summary_line("all", &recomputed.summary));
            for (d, s) in &recomputed.by_difficulty {
                println!("{}", summary_line(&format!("{d:?}").to_lowercase(), s));
            }
            if recomputed.summary != saved.summary || recomputed.by_difficulty != saved.by_difficulty {
                return Err(Fatal("stored aggregates differ from the records".into()));
            }
        }
        Command::Ablate { config } => {
            let cfg = PipelineConfig::load(&config)?;
            for (name, s) in ablation(&cfg)? {
                println!("{}", summary_line(&name, &s));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
