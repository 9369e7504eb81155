use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lowregret::cutting_plane::LearnerSpec;
use lowregret::harness::{
    emit_plot, run_experiment, run_lemma_suite, run_lowerbound_study, run_sweep, shipped_learners, Budget,
    ExperimentConfig, RegretTrace,
};
use lowregret::{Error, RngStream};

#[derive(Parser)]
#[command(name = "lowregret", version, about = "Low-regret cutting-plane and contextual recommendation experiments")]
struct Cli {
    /// Overrides the config's base_seed (and the default seed of other commands).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config; writes trace CSVs, a summary JSON and an SVG.
    Run {
        config: PathBuf,
        /// Overrides the config's output_dir.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run a config once per value of one parameter.
    Sweep {
        config: PathBuf,
        /// T, d, H, k, trials, mc_budget or seed.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<String>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Plot cumulative regret from trace CSVs.
    Plot {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long, default_value = "regret.svg")]
        out: PathBuf,
    },
    /// Run learners against the local-feedback lower-bound instance.
    Lowerbound {
        #[arg(long)]
        dim: usize,
        /// Defaults to floor(sqrt(|S|)).
        #[arg(long)]
        list_size: Option<usize>,
        /// Defaults to floor(0.1 sqrt(|S|)).
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long, default_value_t = 32)]
        draws: usize,
        /// A learner kind, or `all`.
        #[arg(long, default_value = "all")]
        learner: String,
        #[arg(long, default_value_t = 256)]
        mc_budget: usize,
        /// Pieces of the curvature_random learner.
        #[arg(long, default_value_t = 512)]
        pieces: usize,
    },
    /// Run the geometric check suite and print one line per check.
    Verify {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value = "small")]
        budget: String,
    },
}

fn color_enabled() -> bool {
    std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stdout().is_terminal()
}

fn status(ok: bool) -> String {
    let word = if ok { "PASS" } else { "FAIL" };
    if color_enabled() {
        format!("\x1b[{}m{word}\x1b[0m", if ok { 32 } else { 31 })
    } else {
        word.to_string()
    }
}

fn load(path: &PathBuf, seed: Option<u64>, output_dir: Option<PathBuf>) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(d) = output_dir {
        cfg.output_dir = d;
    }
    Ok(cfg)
}

fn pick_learners(name: &str, pieces: usize) -> Result<Vec<LearnerSpec>, Error> {
    let all = shipped_learners(pieces);
    if name == "all" {
        return Ok(all);
    }
    let picked: Vec<LearnerSpec> = all.into_iter().filter(|l| l.name() == name).collect();
    if picked.is_empty() {
        return Err(Error::Config {
            field: "learner".into(),
            reason: format!("unknown learner {name:?}"),
        });
    }
    Ok(picked)
}

/// Returns whether every reported check passed.
fn execute(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Run { config, output_dir } => {
            let cfg = load(&config, cli.seed, output_dir)?;
            let (_, summary, out) = run_experiment(&cfg)?;
            println!(
                "{} trials of {}: mean cumulative regret {:.6}, max {:.6}, slope vs log T {:.6}",
                summary.trials,
                cfg.game.name(),
                summary.mean_cum_regret,
                summary.max_cum_regret,
                summary.slope_vs_log_t
            );
            println!("summary: {}", out.summary.display());
            println!("plot:    {}", out.plot.display());
            Ok(true)
        }
        Command::Sweep {
            config,
            param,
            values,
            output_dir,
        } => {
            let cfg = load(&config, cli.seed, output_dir)?;
            for p in run_sweep(&cfg, &param, &values)? {
                println!(
                    "{param}={}: mean cumulative regret {:.6}, slope vs log T {:.6}",
                    p.value, p.summary.mean_cum_regret, p.summary.slope_vs_log_t
                );
            }
            println!("sweep: {}", cfg.output_dir.join("sweep.json").display());
            Ok(true)
        }
        Command::Plot { traces, out } => {
            let mut loaded = Vec::with_capacity(traces.len());
            for p in &traces {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", p.display())))?;
                let label = p.file_stem().map_or("trace".into(), |s| s.to_string_lossy().into_owned());
                loaded.push(RegretTrace::from_csv(&text, label)?);
            }
            emit_plot(&loaded, &out)?;
            println!("plot: {}", out.display());
            Ok(true)
        }
        Command::Lowerbound {
            dim,
            list_size,
            rounds,
            draws,
            learner,
            mc_budget,
            pieces,
        } => {
            let learners = pick_learners(&learner, pieces)?;
            let st = run_lowerbound_study(dim, list_size, rounds, draws, &learners, mc_budget, cli.seed.unwrap_or(0))?;
            let bound = 0.6 * st.rounds as f64 * 0.8;
            println!(
                "|S| = {}, H = {}, rounds = {}, draws = {}, bound 0.48 m = {bound:.4}",
                st.packing_size, st.list_size, st.rounds, st.draws
            );
            let mut ok = true;
            for r in &st.rows {
                let pass = r.mean_regret >= bound;
                ok &= pass;
                println!(
                    "{} {:<18} mean regret {:.4}, hidden listed in {}/{} draws",
                    status(pass),
                    r.learner,
                    r.mean_regret,
                    r.found,
                    st.draws
                );
            }
            Ok(ok)
        }
        Command::Verify { dim, budget } => {
            let budget: Budget = budget.parse()?;
            let res = run_lemma_suite(dim, &budget.config(), RngStream::new(cli.seed.unwrap_or(0), 0))?;
            let mut ok = true;
            for r in &res {
                ok &= r.passed();
                println!(
                    "{} {:<17} d={} checks={} violations={} worst_margin={:.6}",
                    status(r.passed()),
                    r.lemma.name(),
                    r.dim,
                    r.checks,
                    r.violations,
                    r.worst_margin
                );
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
