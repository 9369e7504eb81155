use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::Rng;
use serde::Serialize;

use super::config::{ExperimentConfig, GameKind};
use super::plot::emit_plot;
use crate::contextual::{
    make_lowerbound_instance, run_contextual_game, run_list_game, run_local_game, run_lowerbound_game,
    ActionGenerator, LowerBoundInstance,
};
use crate::cutting_plane::{run_cutting_plane_game, Learner};
use crate::error::{Error, Result};
use crate::geometry::{Direction, Point};
use crate::rng::RngStream;

pub const CSV_HEADER: &str = "round,instant_regret,cum_regret,width_diag";

/// Stream tag for per-trial draws made before the game starts.
const SETUP_TAG: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub round: usize,
    pub instant_regret: f64,
    pub cum_regret: f64,
    pub width_diag: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegretTrace {
    pub label: String,
    pub rows: Vec<TraceRow>,
    pub config_hash: String,
    pub seed: u64,
    pub trial: usize,
}

impl RegretTrace {
    /// Builds the trace from per-round `(regret, width)` pairs; the
    /// cumulative column is the running sum.
    pub fn from_rounds(
        label: impl Into<String>,
        rounds: impl IntoIterator<Item = (f64, f64)>,
        config_hash: impl Into<String>,
        seed: u64,
        trial: usize,
    ) -> Self {
        let mut cum = 0.0;
        let rows = rounds
            .into_iter()
            .enumerate()
            .map(|(i, (r, w))| {
                cum += r;
                TraceRow {
                    round: i + 1,
                    instant_regret: r,
                    cum_regret: cum,
                    width_diag: w,
                }
            })
            .collect();
        Self {
            label: label.into(),
            rows,
            config_hash: config_hash.into(),
            seed,
            trial,
        }
    }

    pub fn final_regret(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_regret)
    }

    /// Cumulative regret after `round` rounds (0 before the first).
    pub fn cum_at(&self, round: usize) -> f64 {
        if round == 0 {
            0.0
        } else {
            self.rows[round.min(self.rows.len()) - 1].cum_regret
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{}\n",
                r.round,
                fmt_sig(r.instant_regret),
                fmt_sig(r.cum_regret),
                fmt_sig(r.width_diag)
            ));
        }
        s
    }

    /// Reads a trace written by [`RegretTrace::to_csv`].
    pub fn from_csv(text: &str, label: impl Into<String>) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(CSV_HEADER) {
            return Err(Error::invalid(format!("trace CSV must start with `{CSV_HEADER}`")));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::invalid(format!("malformed trace row {}: {line:?}", i + 2));
            if f.len() != 4 {
                return Err(bad());
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
            rows.push(TraceRow {
                round: f[0].trim().parse().map_err(|_| bad())?,
                instant_regret: num(f[1])?,
                cum_regret: num(f[2])?,
                width_diag: num(f[3])?,
            });
        }
        Ok(Self {
            label: label.into(),
            rows,
            config_hash: String::new(),
            seed: 0,
            trial: 0,
        })
    }
}

/// Decimal notation with 12 significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    // The exponent after rounding to 12 digits fixes the decimal count.
    let sci = format!("{x:.11e}");
    let exp: i64 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    format!("{:.*}", (11 - exp).max(0) as usize, x)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub game: GameKind,
    pub horizon: usize,
    pub mean_cum_regret: f64,
    pub max_cum_regret: f64,
    /// Least-squares slope of mean cumulative regret against `ln t` over
    /// log-spaced rounds.
    #[serde(rename = "slope_vs_logT")]
    pub slope_vs_log_t: f64,
    pub config_hash: String,
    pub trials: usize,
    pub final_cum_regrets: Vec<f64>,
    /// `A / (H - 1)` for local games over a fixed-size action set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl Summary {
    pub fn from_traces(cfg: &ExperimentConfig, traces: &[RegretTrace]) -> Self {
        let finals: Vec<f64> = traces.iter().map(RegretTrace::final_regret).collect();
        let n = finals.len().max(1) as f64;
        let gamma = match (cfg.game, &cfg.environment.actions) {
            (GameKind::Local, ActionGenerator::UniformSphere { count }) => {
                Some(*count as f64 / (local_list_size(cfg) - 1) as f64)
            }
            (GameKind::Local, ActionGenerator::FixedCatalog { actions }) => {
                Some(actions.len() as f64 / (local_list_size(cfg) - 1) as f64)
            }
            _ => None,
        };
        Self {
            game: cfg.game,
            horizon: cfg.horizon,
            mean_cum_regret: finals.iter().sum::<f64>() / n,
            max_cum_regret: finals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            slope_vs_log_t: slope_vs_log_t(traces),
            config_hash: cfg.hash(),
            trials: traces.len(),
            final_cum_regrets: finals,
            gamma,
        }
    }
}

/// Slope of `mean_t R(t)` against `ln t` on up to 33 log-spaced rounds.
pub fn slope_vs_log_t(traces: &[RegretTrace]) -> f64 {
    let Some(t_max) = traces.iter().map(|t| t.rows.len()).min().filter(|&t| t > 1) else {
        return 0.0;
    };
    let mut rounds: Vec<usize> = (0..=32)
        .map(|j| (t_max as f64).powf(j as f64 / 32.0).round() as usize)
        .collect();
    rounds.dedup();
    let xs: Vec<f64> = rounds.iter().map(|&t| (t as f64).ln()).collect();
    let ys: Vec<f64> = rounds
        .iter()
        .map(|&t| traces.iter().map(|tr| tr.cum_at(t)).sum::<f64>() / traces.len() as f64)
        .collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

fn local_list_size(cfg: &ExperimentConfig) -> usize {
    cfg.environment.list_size.unwrap_or(2)
}

/// Uniform point of the unit ball.
fn random_w_star(dim: usize, rng: RngStream) -> Point {
    let mut g = rng.rng();
    let u = Direction::random(dim, &mut g);
    let radius = g.random::<f64>().powf(1.0 / dim as f64);
    Point::new(u.vector().iter().map(|x| x * radius).collect()).expect("finite")
}

/// The packing shared by all trials of a lowerbound experiment.
pub fn lowerbound_packing(cfg: &ExperimentConfig) -> Result<LowerBoundInstance> {
    make_lowerbound_instance(cfg.dim, RngStream::new(cfg.base_seed, 0).substream(SETUP_TAG))
}

/// One trial: stream id = trial index, so adding trials never changes the
/// earlier ones.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize, packing: Option<&LowerBoundInstance>) -> Result<RegretTrace> {
    let rng = RngStream::new(cfg.base_seed, trial as u64);
    let setup = rng.substream(SETUP_TAG);
    let w_star = match cfg.fixed_w_star()? {
        Some(w) => w,
        None => random_w_star(cfg.dim, setup),
    };
    let learner = cfg
        .learner
        .clone()
        .map(|l| Learner::new(l, cfg.mc_budget))
        .transpose()?;
    let need_learner = || learner.as_ref().ok_or_else(|| Error::config("learner", "required"));
    let env = &cfg.environment;
    let rounds: Vec<(f64, f64)> = match cfg.game {
        GameKind::CuttingPlane => {
            let oracle = cfg.oracle.as_ref().ok_or_else(|| Error::config("oracle", "required"))?;
            run_cutting_plane_game(need_learner()?, oracle, &w_star, cfg.horizon, rng)?
                .iter()
                .map(|r| (r.regret, r.width_along_v))
                .collect()
        }
        GameKind::Contextual => run_contextual_game(need_learner()?, &env.actions, &w_star, cfg.horizon, rng)?
            .iter()
            .map(|r| (r.regret, r.width_along_v))
            .collect(),
        GameKind::List => run_list_game(&env.actions, cfg.list_pieces(), &w_star, cfg.horizon, cfg.mc_budget, rng)?
            .iter()
            .map(|r| (r.loss, r.width_diag))
            .collect(),
        GameKind::Local => run_local_game(
            need_learner()?,
            &env.actions,
            local_list_size(cfg),
            &w_star,
            &env.feedback,
            cfg.horizon,
            rng,
        )?
        .iter()
        .map(|r| (r.regret, r.width_along_v))
        .collect(),
        GameKind::Lowerbound => {
            let base = match packing {
                Some(p) => p.clone(),
                None => lowerbound_packing(cfg)?,
            };
            let hidden = setup.rng().random_range(0..base.packing.len());
            let inst = base.with_hidden(hidden)?;
            let h = env.list_size.unwrap_or(inst.bound_list_size().max(2));
            run_lowerbound_game(&inst, need_learner()?, h, cfg.horizon, rng)?
                .iter()
                .map(|r| (r.regret, r.width_along_v))
                .collect()
        }
    };
    let label = format!(
        "{} {} trial {}",
        cfg.game.name(),
        cfg.learner.as_ref().map_or("list", |l| l.name()),
        trial
    );
    Ok(RegretTrace::from_rounds(label, rounds, cfg.hash(), cfg.base_seed, trial))
}

/// Runs all trials, using up to `available_parallelism` threads. Results
/// are independent of the thread count.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<RegretTrace>> {
    cfg.validate()?;
    let packing = match cfg.game {
        GameKind::Lowerbound => Some(lowerbound_packing(cfg)?),
        _ => None,
    };
    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(cfg.trials);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<RegretTrace>>>> = Mutex::new(vec![None; cfg.trials]);
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cfg.trials {
                    break;
                }
                let res = run_trial(cfg, i, packing.as_ref());
                slots.lock().unwrap()[i] = Some(res);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every trial ran"))
        .collect()
}

/// Paths written by [`run_experiment`].
#[derive(Clone, Debug, PartialEq)]
pub struct Outputs {
    pub traces: Vec<PathBuf>,
    pub summary: PathBuf,
    pub plot: PathBuf,
}

/// Runs the experiment and writes one CSV per trial, a summary JSON and an
/// SVG of the cumulative regret curves into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Vec<RegretTrace>, Summary, Outputs)> {
    let traces = run_trials(cfg)?;
    let summary = Summary::from_traces(cfg, &traces);
    let outputs = write_outputs(cfg, &traces, &summary, &cfg.output_dir)?;
    Ok((traces, summary, outputs))
}

fn write_outputs(cfg: &ExperimentConfig, traces: &[RegretTrace], summary: &Summary, dir: &Path) -> Result<Outputs> {
    std::fs::create_dir_all(dir)?;
    let tag = &cfg.hash()[..12];
    let mut paths = Vec::with_capacity(traces.len());
    for t in traces {
        let p = dir.join(format!("trace_{tag}_trial{}.csv", t.trial));
        std::fs::write(&p, t.to_csv())?;
        paths.push(p);
    }
    let summary_path = dir.join(format!("summary_{tag}.json"));
    let json = serde_json::to_string_pretty(summary).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(&summary_path, json + "\n")?;
    let plot = dir.join(format!("regret_{tag}.svg"));
    emit_plot(traces, &plot)?;
    Ok(Outputs {
        traces: paths,
        summary: summary_path,
        plot,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: String,
    pub summary: Summary,
}

/// Runs the config once per value of `param`, each into its own
/// subdirectory `<param>=<value>` of the output directory, and writes
/// `sweep.json` plus a plot of the per-value mean curves.
pub fn run_sweep(cfg: &ExperimentConfig, param: &str, values: &[String]) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::config("values", "at least one value is required"));
    }
    let mut points = Vec::with_capacity(values.len());
    let mut means = Vec::with_capacity(values.len());
    for v in values {
        let mut c = cfg.clone();
        c.set_param(param, v)?;
        c.output_dir = cfg.output_dir.join(format!("{param}={v}"));
        let (traces, summary, _) = run_experiment(&c)?;
        means.push(mean_trace(&traces, format!("{param}={v}"), &summary.config_hash, c.base_seed));
        points.push(SweepPoint {
            value: v.clone(),
            summary,
        });
    }
    std::fs::create_dir_all(&cfg.output_dir)?;
    let json = serde_json::to_string_pretty(&points).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(cfg.output_dir.join("sweep.json"), json + "\n")?;
    emit_plot(&means, &cfg.output_dir.join("sweep.svg"))?;
    Ok(points)
}

/// Round-by-round mean over trials (truncated to the shortest trace).
pub fn mean_trace(traces: &[RegretTrace], label: String, hash: &str, seed: u64) -> RegretTrace {
    let len = traces.iter().map(|t| t.rows.len()).min().unwrap_or(0);
    let n = traces.len().max(1) as f64;
    let rounds = (0..len).map(|i| {
        let r = traces.iter().map(|t| t.rows[i].instant_regret).sum::<f64>() / n;
        let w = traces.iter().map(|t| t.rows[i].width_diag).sum::<f64>() / n;
        (r, w)
    });
    RegretTrace::from_rounds(label, rounds, hash, seed, 0)
}
