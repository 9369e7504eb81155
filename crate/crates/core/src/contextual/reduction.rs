//! Single-action recommendation through a cutting-plane learner.
//!
//! The learner's query `p_t` is turned into the action `x_t = BR(p_t)`. When
//! the revealed best action `x*` differs, `v = (x* - x_t)/|x* - x_t|` is a
//! valid separation direction for `p_t`, and
//! `<w*, x* - x_t> <= |x* - x_t| <w* - p_t, v> <= 2 <w* - p_t, v>`.

use serde::Serialize;

use super::{best_response, ActionGenerator, ActionSet, FeedbackEvent, FeedbackKind};
use crate::cutting_plane::{update_knowledge, CuttingPlaneState, Learner};
use crate::error::{Error, Result};
use crate::geometry::{Direction, Point};
use crate::oracles::VALIDITY_TOL;
use crate::rng::RngStream;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContextualRound {
    pub round: usize,
    pub played: usize,
    pub feedback: FeedbackEvent,
    /// `<w*, x* - x_t>`.
    pub regret: f64,
    /// `<w* - p_t, v_t>` on rounds that updated the learner.
    pub cutting_plane_regret: Option<f64>,
    /// Width of the knowledge set along `v_t` before the update (0 otherwise).
    pub width_along_v: f64,
}

/// One round of the reduction. On a round where the learner's action was
/// already best, the returned state equals the input state.
pub fn step_reduction(
    state: &CuttingPlaneState,
    learner: &Learner,
    x: &ActionSet,
    w_star: &Point,
    rng: RngStream,
) -> Result<(ContextualRound, CuttingPlaneState)> {
    let (p, memo) = learner.propose_memo(state, rng)?;
    let played = best_response(&p, x);
    let best = best_response(w_star, x);
    let feedback = FeedbackEvent {
        kind: FeedbackKind::BestAction,
        action_index: best,
    };
    let regret = x.value(best, w_star) - x.value(played, w_star);
    if best == played {
        let rec = ContextualRound {
            round: x.round(),
            played,
            feedback,
            regret,
            cutting_plane_regret: None,
            width_along_v: 0.0,
        };
        return Ok((rec, state.clone().with_memo(memo)));
    }
    let v = Direction::normalize(x.get(best).vector() - x.get(played).vector())?;
    let cp = (w_star.vector() - p.vector()).dot(&v);
    if cp < -VALIDITY_TOL {
        return Err(Error::InvalidOracle(cp));
    }
    let width_along_v = state.knowledge().width(&v)?;
    let next = update_knowledge(state, &p, &v)?;
    let rec = ContextualRound {
        round: x.round(),
        played,
        feedback,
        regret,
        cutting_plane_regret: Some(cp),
        width_along_v,
    };
    Ok((rec, next))
}

/// `horizon` rounds of the reduction against fresh action sets.
pub fn run_contextual_game(
    learner: &Learner,
    actions: &ActionGenerator,
    w_star: &Point,
    horizon: usize,
    rng: RngStream,
) -> Result<Vec<ContextualRound>> {
    let d = w_star.dim();
    actions.validate(d)?;
    let mut state = CuttingPlaneState::initial(d, Some(horizon))?;
    let mut out = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let x = actions.generate(d, t + 1, rng.substream(4 * t as u64))?;
        let (rec, next) = step_reduction(&state, learner, &x, w_star, rng.substream(4 * t as u64 + 1))?;
        out.push(rec);
        state = next;
    }
    Ok(out)
}
