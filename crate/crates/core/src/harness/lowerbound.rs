//! Repeated runs of the lower-bound instance over random hidden vectors.

use rand::Rng;
use serde::Serialize;

use crate::contextual::{make_lowerbound_instance, run_lowerbound_game};
use crate::cutting_plane::{Learner, LearnerSpec};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// One of each learner kind. The curvature learner's pieces are capped at
/// `pieces` because `192 d^4` is out of reach in high dimension.
pub fn shipped_learners(pieces: usize) -> Vec<LearnerSpec> {
    vec![
        LearnerSpec::JohnCenter { eps: 0.05 },
        LearnerSpec::SteinerCentroid,
        LearnerSpec::SteinerDoubling { initial_horizon: 1 },
        LearnerSpec::CurvatureRandom { pieces: Some(pieces) },
        LearnerSpec::Centroid,
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyRow {
    pub learner: String,
    pub mean_regret: f64,
    pub min_regret: f64,
    /// Draws in which the hidden vector was listed at least once.
    pub found: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundStudy {
    pub dim: usize,
    pub packing_size: usize,
    pub list_size: usize,
    pub rounds: usize,
    pub draws: usize,
    pub rows: Vec<StudyRow>,
}

/// Plays `rounds` rounds with list size `list_size` (default
/// `floor(sqrt(|S|))`) for each learner and each of `draws` hidden indices.
/// `rounds` defaults to `floor(0.1 sqrt(|S|))`.
pub fn run_lowerbound_study(
    dim: usize,
    list_size: Option<usize>,
    rounds: Option<usize>,
    draws: usize,
    learners: &[LearnerSpec],
    mc_budget: usize,
    seed: u64,
) -> Result<LowerBoundStudy> {
    if draws == 0 {
        return Err(Error::config("draws", "must be at least 1"));
    }
    let base = make_lowerbound_instance(dim, RngStream::new(seed, 0).substream(u64::MAX))?;
    let s = base.packing.len();
    let h = list_size.unwrap_or(base.bound_list_size().max(2));
    if h < 2 || h > s {
        return Err(Error::config("list_size", format!("must lie in [2, {s}]")));
    }
    let m = rounds.unwrap_or(base.bound_rounds());
    let mut rows = Vec::with_capacity(learners.len());
    for spec in learners {
        let learner = Learner::new(spec.clone(), mc_budget)?;
        let mut total = 0.0;
        let mut min = f64::INFINITY;
        let mut found = 0;
        for i in 0..draws {
            let rng = RngStream::new(seed, i as u64);
            let hidden = rng.substream(u64::MAX).rng().random_range(0..s);
            let inst = base.with_hidden(hidden)?;
            let recs = run_lowerbound_game(&inst, &learner, h, m, rng)?;
            let reg: f64 = recs.iter().map(|r| r.regret).sum();
            total += reg;
            min = min.min(reg);
            if recs.iter().any(|r| r.recommendation.contains(hidden)) {
                found += 1;
            }
        }
        rows.push(StudyRow {
            learner: spec.name().to_string(),
            mean_regret: total / draws as f64,
            min_regret: min,
            found,
        });
    }
    Ok(LowerBoundStudy {
        dim,
        packing_size: s,
        list_size: h,
        rounds: m,
        draws,
        rows,
    })
}
