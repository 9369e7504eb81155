use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::contextual::{ActionGenerator, FeedbackPolicy};
use crate::cutting_plane::LearnerSpec;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::oracles::OracleSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    CuttingPlane,
    Contextual,
    List,
    Local,
    Lowerbound,
}

impl GameKind {
    pub fn name(self) -> &'static str {
        match self {
            GameKind::CuttingPlane => "cutting_plane",
            GameKind::Contextual => "contextual",
            GameKind::List => "list",
            GameKind::Local => "local",
            GameKind::Lowerbound => "lowerbound",
        }
    }
}

/// Settings of the contextual games. Unused keys are ignored by games that
/// do not need them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    #[serde(default = "default_actions")]
    pub actions: ActionGenerator,
    /// `H` for the local and lowerbound games. The lowerbound game defaults
    /// to `floor(sqrt(|S|))`, the local game to 2.
    #[serde(default)]
    pub list_size: Option<usize>,
    /// Discretization pieces `k` of the list game; defaults to `200 d^4`.
    #[serde(default)]
    pub pieces: Option<usize>,
    #[serde(default = "default_feedback")]
    pub feedback: FeedbackPolicy,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        Self {
            actions: default_actions(),
            list_size: None,
            pieces: None,
            feedback: default_feedback(),
        }
    }
}

fn default_actions() -> ActionGenerator {
    ActionGenerator::UniformSphere { count: 20 }
}

fn default_feedback() -> FeedbackPolicy {
    FeedbackPolicy::ExactBest
}

fn default_trials() -> usize {
    1
}

fn default_mc_budget() -> usize {
    1024
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameKind,
    pub dim: usize,
    pub horizon: usize,
    /// Required by every game except `list`.
    #[serde(default)]
    pub learner: Option<LearnerSpec>,
    /// Required by `cutting_plane`.
    #[serde(default)]
    pub oracle: Option<OracleSpec>,
    #[serde(default)]
    pub environment: EnvironmentConfig,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Monte Carlo rays per centroid estimate.
    #[serde(default = "default_mc_budget")]
    pub mc_budget: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Hidden vector; drawn uniformly from the unit ball per trial if absent.
    /// Ignored by `lowerbound`, whose instance fixes it.
    #[serde(default)]
    pub w_star: Option<Vec<f64>>,
}

impl ExperimentConfig {
    /// Parses and validates a config. Errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "<root>".to_string() } else { path };
            Error::config(field, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let min_dim = if self.game == GameKind::Lowerbound { 3 } else { 2 };
        if self.dim < min_dim {
            return Err(Error::config("dim", format!("must be at least {min_dim} for {}", self.game.name())));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.mc_budget < 4 {
            return Err(Error::config("mc_budget", "must be at least 4"));
        }
        match (&self.learner, self.game) {
            (None, GameKind::List) => {}
            (None, g) => return Err(Error::config("learner", format!("required for game {}", g.name()))),
            (Some(l), _) => l.validate()?,
        }
        if self.game == GameKind::CuttingPlane {
            match &self.oracle {
                Some(o) => o.validate()?,
                None => return Err(Error::config("oracle", "required for game cutting_plane")),
            }
        }
        let env = &self.environment;
        if matches!(self.game, GameKind::Contextual | GameKind::List | GameKind::Local) {
            env.actions.validate(self.dim)?;
        }
        if let Some(h) = env.list_size {
            if h < 2 {
                return Err(Error::config("environment.list_size", "must be at least 2"));
            }
        }
        if env.pieces == Some(0) {
            return Err(Error::config("environment.pieces", "must be at least 1"));
        }
        if self.game == GameKind::Local {
            if let FeedbackPolicy::LowerBound { .. } = env.feedback {
                return Err(Error::config(
                    "environment.feedback",
                    "lower_bound feedback belongs to the lowerbound game",
                ));
            }
        }
        if let Some(w) = &self.w_star {
            if w.len() != self.dim {
                return Err(Error::config("w_star", format!("length {} but dim is {}", w.len(), self.dim)));
            }
            let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(n <= 1.0 + 1e-9) {
                return Err(Error::config("w_star", format!("norm {n} exceeds 1")));
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the config JSON with `output_dir` left out, so that
    /// moving outputs does not change the hash.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("output_dir");
        }
        let digest = Sha256::digest(v.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn fixed_w_star(&self) -> Result<Option<Point>> {
        self.w_star.as_ref().map(|w| Point::new(w.clone())).transpose()
    }

    /// Pieces of the list game.
    pub fn list_pieces(&self) -> usize {
        self.environment.pieces.unwrap_or(200 * self.dim.pow(4))
    }

    /// Sets a sweepable parameter from its command-line name.
    pub fn set_param(&mut self, param: &str, value: &str) -> Result<()> {
        let parse = |field: &str| -> Result<usize> {
            value
                .parse::<usize>()
                .map_err(|_| Error::config(field, format!("expected a count, got {value:?}")))
        };
        match param {
            "T" | "horizon" => self.horizon = parse("horizon")?,
            "d" | "dim" => {
                self.dim = parse("dim")?;
                self.w_star = None;
            }
            "H" | "list_size" => self.environment.list_size = Some(parse("environment.list_size")?),
            "k" | "pieces" => self.environment.pieces = Some(parse("environment.pieces")?),
            "trials" => self.trials = parse("trials")?,
            "mc_budget" => self.mc_budget = parse("mc_budget")?,
            "seed" | "base_seed" => {
                self.base_seed = value
                    .parse()
                    .map_err(|_| Error::config("base_seed", format!("expected an integer, got {value:?}")))?
            }
            _ => {
                return Err(Error::config(
                    "param",
                    format!("unknown sweep parameter {param:?} (use T, d, H, k, trials, mc_budget or seed)"),
                ))
            }
        }
        self.validate()
    }
}
