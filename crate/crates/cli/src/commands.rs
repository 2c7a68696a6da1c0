//! Implementations of the batch subcommands.

use std::fmt::Write as _;
use std::io::Write;
use std::sync::Arc;

use anyhow::Context;
use svmenum::cv::{default_grid, select_c};
use svmenum::data::{inject_flips, split, synthetic};
use svmenum::metrics::Evaluator;
use svmenum::oracle::{brute_force_enumerate, compare};
use svmenum::{Dataset, EnumConfig, EnumSession, EnumeratedModel, KernelSpec, ModelRecord, SolverParams};

use crate::cli::{CvArgs, DataArgs, EnumerateArgs, VerifyArgs};
use crate::load::{self, LoadOptions};

#[derive(Debug)]
pub enum CommandError {
    Core(svmenum::Error),
    Output(anyhow::Error),
}

impl From<svmenum::Error> for CommandError {
    fn from(e: svmenum::Error) -> Self {
        CommandError::Core(e)
    }
}

impl From<anyhow::Error> for CommandError {
    fn from(e: anyhow::Error) -> Self {
        CommandError::Output(e)
    }
}

type CommandResult<T> = Result<T, CommandError>;

/// Metrics record for an emitted model; `emitted` must start at rank 1.
pub fn record(evaluator: &Evaluator, emitted: &[EnumeratedModel], model: &EnumeratedModel) -> svmenum::Result<ModelRecord> {
    let rank_one = emitted.first().unwrap_or(model);
    Ok(ModelRecord::new(model, evaluator.evaluate(model, rank_one)?))
}

/// Enumerates up to `k` models and evaluates each on `eval`.
pub fn enumerate_records(
    train: Arc<Dataset>,
    eval: Arc<Dataset>,
    sensitive: Option<&str>,
    config: EnumConfig,
    k: usize,
) -> svmenum::Result<Vec<ModelRecord>> {
    let evaluator = Evaluator::new(Arc::clone(&train), eval, sensitive)?;
    let mut session = EnumSession::new(train, config)?;
    let mut records = Vec::with_capacity(k);
    while records.len() < k {
        let Some(model) = session.next_model()? else { break };
        records.push(record(&evaluator, session.emitted(), &model)?);
    }
    Ok(records)
}

fn load_options(data: &DataArgs) -> LoadOptions {
    LoadOptions {
        label: data.label.clone(),
        positive: data.positive.clone(),
        attributes: Vec::new(),
    }
}

/// Training and evaluation sets after splitting, injection and exclusion.
pub fn prepare(args: &EnumerateArgs) -> svmenum::Result<(Dataset, Option<Dataset>)> {
    let options = load_options(&args.data);
    let full = load::read(&args.data.data, args.data.format, &options)?;
    let (mut train, mut test) = match (&args.test, args.train_fraction) {
        (Some(path), _) => (full, Some(load::read(path, args.data.format, &options)?)),
        (None, Some(fraction)) => {
            let (train, test) = split(&full, fraction, args.seed)?;
            (train, Some(test))
        }
        (None, None) => (full, None),
    };
    if let (Some(count), Some(z)) = (args.inject_flips, &args.sensitive) {
        train = inject_flips(&train, z, count, args.seed)?;
    }
    if let (true, Some(z)) = (args.exclude_sensitive, &args.sensitive) {
        train = load::exclude_column(train, z)?;
        test = test.map(|t| load::exclude_column(t, z)).transpose()?;
    }
    Ok((train, test))
}

pub fn enumerate(args: &EnumerateArgs) -> CommandResult<()> {
    let kernel = KernelSpec::from_json(&args.kernel)?;
    let (train, test) = prepare(args)?;
    let train = Arc::new(train);
    let eval = test.map(Arc::new).unwrap_or_else(|| Arc::clone(&train));
    let k = usize::try_from(args.top_k).unwrap_or(usize::MAX);
    let records = enumerate_records(train, eval, args.sensitive.as_deref(), EnumConfig::new(args.c, kernel), k)?;

    let mut lines = String::new();
    for r in &records {
        lines.push_str(&r.to_json_line());
        lines.push('\n');
    }
    match &args.out {
        Some(path) => {
            std::fs::write(path, lines).with_context(|| format!("writing {}", path.display()))?;
            print!("{}", summary_table(&records));
        }
        None => {
            std::io::stdout().write_all(lines.as_bytes()).context("writing models")?;
            eprint!("{}", summary_table(&records));
        }
    }
    Ok(())
}

fn optional(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

pub fn summary_table(records: &[ModelRecord]) -> String {
    let mut out = format!(
        "{:>5} {:>14} {:>8} {:>6} {:>10} {:>9} {:>8} {:>8}\n",
        "rank", "objective", "ratio", "|supp|", "hinge", "loss/1", "misclass", "dp"
    );
    for r in records {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{:>5} {:>14.6e} {:>8.4} {:>6} {:>10.4} {:>9} {:>8.4} {:>8}",
            r.rank,
            r.objective,
            r.objective_ratio,
            r.support_size,
            m.test_hinge_mean,
            optional(m.test_loss_ratio),
            m.misclassification_ratio,
            optional(m.demographic_parity)
        );
    }
    out
}

pub fn cv(args: &CvArgs) -> CommandResult<()> {
    let kernel = KernelSpec::from_json(&args.kernel)?;
    let ds = Arc::new(load::read(&args.data.data, args.data.format, &load_options(&args.data))?);
    let grid = args.grid.clone().unwrap_or_else(default_grid);
    let result = select_c(ds, kernel, &grid, args.folds, args.seed, &SolverParams::default())?;
    println!("{:>12} {:>14}", "C", "mean hinge");
    for s in &result.scores {
        println!("{:>12} {:>14.6}", s.c, s.mean_validation_hinge);
    }
    println!("selected C = {}", result.chosen);
    Ok(())
}

const VERIFY_C: [f64; 3] = [0.1, 1.0, 10.0];

/// Runs the oracle comparison; `Ok(false)` when any trial disagrees.
pub fn verify(args: &VerifyArgs) -> CommandResult<bool> {
    let n = args.n as usize;
    let mut all_ok = true;
    for trial in 0..args.trials {
        let c = VERIFY_C[(trial % 3) as usize];
        let seed = args.seed.wrapping_add(trial);
        let ds = Arc::new(synthetic::uniform(n, 2, seed));
        let mut config = EnumConfig::new(c, KernelSpec::Linear);
        config.invert_order = args.invert_order;
        let models: Vec<EnumeratedModel> = EnumSession::new(Arc::clone(&ds), config)?.collect::<Result<_, _>>()?;
        let listing = brute_force_enumerate(&ds, c, &KernelSpec::Linear)?;
        let diffs = compare(&listing, &models, args.tolerance);
        let note = if listing.is_ambiguous() {
            format!(" ({} subsets with non-unique optimum; supports checked by value and witness)", listing.ambiguous().len())
        } else {
            String::new()
        };
        if diffs.is_empty() {
            println!("trial {trial}: seed={seed} C={c} models={} ok{note}", models.len());
        } else {
            all_ok = false;
            println!("trial {trial}: seed={seed} C={c} MISMATCH{note}");
            for d in diffs {
                println!("  {d}");
            }
        }
    }
    println!("{}", if all_ok { "all trials agree" } else { "verification failed" });
    Ok(all_ok)
}
