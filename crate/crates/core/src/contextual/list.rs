//! List recommendation from the curvature-path discretization.
//!
//! The list is the set of best responses to the points of the discretized
//! curvature path of `K_t`. After `x*` is revealed, every listed action `x`
//! yields the cut `<x* - x, w> >= 0`.

use serde::Serialize;

use super::{best_response, ActionGenerator, ActionSet, FeedbackEvent, FeedbackKind, Recommendation};
use crate::error::Result;
use crate::geometry::{discretize_curvature_path, Direction, Halfspace, Point, Polytope};
use crate::rng::RngStream;

const BR_TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ListRound {
    pub round: usize,
    pub recommendation: Recommendation,
    pub feedback: FeedbackEvent,
    /// `<w*, x*> - max_{x in L_t} <w*, x>`.
    pub loss: f64,
    pub cuts: usize,
    /// Width of `K_t` along the first cut's normal (0 without cuts).
    pub width_diag: f64,
}

/// True iff `x_i` is a best response to every point of `K`, checked by one
/// LP per competing action. Ties up to round-off count as best, since the
/// cuts all pass through the origin, where every action ties.
pub fn br_constant_on(k: &Polytope, x: &ActionSet, i: usize) -> Result<bool> {
    let xi = x.get(i).vector();
    for j in 0..x.len() {
        if j == i {
            continue;
        }
        let diff = xi - x.get(j).vector();
        let (lo, _) = k.support_min(&diff)?;
        if lo < -BR_TIE_TOL * diff.norm() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One round of list recommendation with a `k`-piece discretization and
/// `n` rays per path point. When a single action is a best response on all
/// of `K`, every path point maps to it and the path is not traced.
pub fn step_list(
    knowledge: &Polytope,
    x: &ActionSet,
    k: usize,
    w_star: &Point,
    n: usize,
    rng: RngStream,
) -> Result<(ListRound, Polytope)> {
    let anchor = best_response(knowledge.witness(), x);
    let rec = if knowledge.is_frozen() || br_constant_on(knowledge, x, anchor)? {
        Recommendation::with_anchor(anchor, [])
    } else {
        let disc = discretize_curvature_path(knowledge, k, n, rng)?;
        let brs: Vec<usize> = disc.points.iter().map(|p| best_response(p, x)).collect();
        Recommendation::with_anchor(brs[0], brs[1..].iter().copied())
    };
    let best = best_response(w_star, x);
    let best_val = x.value(best, w_star);
    let list_val = rec
        .list
        .iter()
        .map(|&i| x.value(i, w_star))
        .fold(f64::NEG_INFINITY, f64::max);
    let loss = if rec.contains(best) { 0.0 } else { best_val - list_val };

    let cuts: Vec<Halfspace> = rec
        .list
        .iter()
        .filter(|&&i| i != best)
        .filter_map(|&i| {
            Direction::normalize(x.get(best).vector() - x.get(i).vector())
                .ok()
                .map(|v| Halfspace::new(v, 0.0))
        })
        .collect();
    let width_diag = match cuts.first() {
        Some(h) => knowledge.width(&h.normal)?,
        None => 0.0,
    };
    let next = if cuts.is_empty() {
        knowledge.clone()
    } else {
        knowledge.intersect_all(cuts.iter().cloned())?
    };
    Ok((
        ListRound {
            round: x.round(),
            recommendation: rec,
            feedback: FeedbackEvent {
                kind: FeedbackKind::BestAction,
                action_index: best,
            },
            loss,
            cuts: cuts.len(),
            width_diag,
        },
        next,
    ))
}

pub fn run_list_game(
    actions: &ActionGenerator,
    k: usize,
    w_star: &Point,
    horizon: usize,
    n: usize,
    rng: RngStream,
) -> Result<Vec<ListRound>> {
    let d = w_star.dim();
    actions.validate(d)?;
    let mut knowledge = Polytope::unit_ball_approx(d)?;
    let mut out = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let x = actions.generate(d, t + 1, rng.substream(4 * t as u64))?;
        let (rec, next) = step_list(&knowledge, &x, k, w_star, n, rng.substream(4 * t as u64 + 1))?;
        out.push(rec);
        knowledge = next;
    }
    Ok(out)
}
