//! Local recommendation: list the learner's action plus `H - 1` random
//! actions and learn from any action at least as good as the list's best.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{best_response, ActionGenerator, ActionSet, FeedbackEvent, FeedbackKind, Recommendation};
use crate::cutting_plane::{update_knowledge, CuttingPlaneState, Learner};
use crate::error::{Error, Result};
use crate::geometry::{Direction, Point};
use crate::oracles::VALIDITY_TOL;
use crate::rng::RngStream;

/// How the environment picks `x^loc` among actions at least as good as the
/// best listed one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeedbackPolicy {
    /// The global best action.
    ExactBest,
    /// The least informative admissible answer: the best listed action,
    /// preferring the anchor when it is among the best listed.
    AdversarialMinimal,
    /// `hidden` if it was listed, otherwise `fallback`.
    LowerBound { hidden: usize, fallback: usize },
}

impl FeedbackPolicy {
    fn respond(&self, x: &ActionSet, rec: &Recommendation, w_star: &Point) -> usize {
        match self {
            FeedbackPolicy::ExactBest => best_response(w_star, x),
            FeedbackPolicy::AdversarialMinimal => {
                let top = rec
                    .list
                    .iter()
                    .map(|&i| x.value(i, w_star))
                    .fold(f64::NEG_INFINITY, f64::max);
                if x.value(rec.anchor_index(), w_star) >= top {
                    rec.anchor_index()
                } else {
                    *rec.list.iter().filter(|&&i| x.value(i, w_star) >= top).min().unwrap()
                }
            }
            FeedbackPolicy::LowerBound { hidden, fallback } => {
                if rec.contains(*hidden) {
                    *hidden
                } else {
                    *fallback
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalRound {
    pub round: usize,
    pub recommendation: Recommendation,
    pub feedback: FeedbackEvent,
    /// `<w*, x* - x_t>` against the global best `x*`.
    pub regret: f64,
    /// `<w* - p_t, v_t>` on rounds that updated the learner.
    pub cutting_plane_regret: Option<f64>,
    pub width_along_v: f64,
}

/// One round of local recommendation with lists of size at most `h`.
pub fn step_local(
    state: &CuttingPlaneState,
    learner: &Learner,
    x: &ActionSet,
    h: usize,
    w_star: &Point,
    policy: &FeedbackPolicy,
    rng: RngStream,
) -> Result<(LocalRound, CuttingPlaneState)> {
    if h < 2 {
        return Err(Error::invalid("list size H must be at least 2"));
    }
    let (p, memo) = learner.propose_memo(state, rng.substream(0))?;
    let anchor = best_response(&p, x);
    let extra = (h - 1).min(x.len());
    let picks = sample(&mut rng.substream(1).rng(), x.len(), extra);
    let rec = Recommendation::with_anchor(anchor, picks.iter());

    let loc = policy.respond(x, &rec, w_star);
    let listed_best = rec
        .list
        .iter()
        .map(|&i| x.value(i, w_star))
        .fold(f64::NEG_INFINITY, f64::max);
    if x.value(loc, w_star) < listed_best - 1e-9 {
        return Err(Error::invalid("local feedback worse than the listed actions"));
    }
    let best = best_response(w_star, x);
    let regret = x.value(best, w_star) - x.value(anchor, w_star);
    let feedback = FeedbackEvent {
        kind: FeedbackKind::LocalBetter,
        action_index: loc,
    };
    if loc == anchor {
        let r = LocalRound {
            round: x.round(),
            recommendation: rec,
            feedback,
            regret,
            cutting_plane_regret: None,
            width_along_v: 0.0,
        };
        return Ok((r, state.clone().with_memo(memo)));
    }
    let v = Direction::normalize(x.get(loc).vector() - x.get(anchor).vector())?;
    let cp = (w_star.vector() - p.vector()).dot(&v);
    if cp < -VALIDITY_TOL {
        return Err(Error::InvalidOracle(cp));
    }
    let width_along_v = state.knowledge().width(&v)?;
    let next = update_knowledge(state, &p, &v)?;
    let r = LocalRound {
        round: x.round(),
        recommendation: rec,
        feedback,
        regret,
        cutting_plane_regret: Some(cp),
        width_along_v,
    };
    Ok((r, next))
}

#[allow(clippy::too_many_arguments)]
pub fn run_local_game(
    learner: &Learner,
    actions: &ActionGenerator,
    h: usize,
    w_star: &Point,
    policy: &FeedbackPolicy,
    horizon: usize,
    rng: RngStream,
) -> Result<Vec<LocalRound>> {
    let d = w_star.dim();
    actions.validate(d)?;
    let mut state = CuttingPlaneState::initial(d, Some(horizon))?;
    let mut out = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let x = actions.generate(d, t + 1, rng.substream(4 * t as u64))?;
        let (rec, next) =
            step_local(&state, learner, &x, h, w_star, policy, rng.substream(4 * t as u64 + 1))?;
        out.push(rec);
        state = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutting_plane::LearnerSpec;

    fn setup() -> (Learner, CuttingPlaneState, ActionSet, Point) {
        let learner = Learner::new(LearnerSpec::JohnCenter { eps: 0.05 }, 16).unwrap();
        let state = CuttingPlaneState::new(crate::geometry::Polytope::cube(2, 1.0).unwrap(), Some(100));
        let x = ActionGenerator::UniformSphere { count: 10 }
            .generate(2, 1, RngStream::new(4, 0))
            .unwrap();
        (learner, state, x, Point::new(vec![0.3, 0.6]).unwrap())
    }

    #[test]
    fn list_contains_anchor_and_respects_size() {
        let (learner, state, x, w) = setup();
        for s in 0..50 {
            let (r, _) = step_local(&state, &learner, &x, 4, &w, &FeedbackPolicy::ExactBest, RngStream::new(s, 0))
                .unwrap();
            assert!(r.recommendation.len() <= 4 && r.recommendation.len() >= 3);
            let top = r
                .recommendation
                .list
                .iter()
                .map(|&i| x.value(i, &w))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(x.value(r.feedback.action_index, &w) >= top - 1e-9);
        }
    }

    #[test]
    fn minimal_feedback_is_best_listed() {
        let (learner, state, x, w) = setup();
        for s in 0..50 {
            let (r, next) = step_local(
                &state,
                &learner,
                &x,
                3,
                &w,
                &FeedbackPolicy::AdversarialMinimal,
                RngStream::new(s, 0),
            )
            .unwrap();
            assert!(r.recommendation.contains(r.feedback.action_index));
            if r.feedback.action_index == r.recommendation.anchor_index() {
                assert_eq!(next.round(), state.round());
            }
        }
    }

    #[test]
    fn full_list_hits_best_with_expected_frequency() {
        let (learner, state, x, w) = setup();
        let best = best_response(&w, &x);
        let h = x.len();
        let n = 10_000;
        let mut hits = 0;
        for s in 0..n {
            let (r, _) = step_local(&state, &learner, &x, h, &w, &FeedbackPolicy::ExactBest, RngStream::new(s, 1))
                .unwrap();
            if r.recommendation.contains(best) {
                hits += 1;
            }
        }
        let freq = hits as f64 / n as f64;
        assert!(freq >= (h - 1) as f64 / x.len() as f64 - 0.02);
    }
}
