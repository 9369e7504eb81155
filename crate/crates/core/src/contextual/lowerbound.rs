//! The hard instance for local feedback.
//!
//! Actions are a packing `S` of unit vectors orthogonal to `e_1` with
//! pairwise inner products at most 0.1, plus `e_1` itself. The hidden vector
//! is `w* = 0.2 e_1 + 0.8 u` for a hidden `u` in `S`. The environment answers
//! `u` when it is listed and `e_1` otherwise, so a learner learns nothing
//! until it lists `u` by chance, and pays `0.8 - 0.2 = 0.6` per round while
//! it plays `e_1`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::local::{step_local, FeedbackPolicy, LocalRound};
use super::ActionSet;
use crate::cutting_plane::{CuttingPlaneState, Learner};
use crate::error::{Error, Result};
use crate::geometry::{Direction, Point};
use crate::rng::RngStream;

pub const PACKING_MAX_INNER: f64 = 0.1;
pub const MIN_PACKING: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundInstance {
    pub dim: usize,
    pub packing: Vec<Direction>,
    pub hidden_index: usize,
    pub w_star: Point,
}

impl LowerBoundInstance {
    /// `S` followed by `e_1`, the same every round.
    pub fn action_set(&self, round: usize) -> Result<ActionSet> {
        let mut actions: Vec<Point> = self
            .packing
            .iter()
            .map(|s| Point::from_vector_unchecked(s.vector().clone()))
            .collect();
        actions.push(Point::from_vector_unchecked(Direction::axis(self.dim, 0).vector().clone()));
        ActionSet::new(actions, round)
    }

    pub fn e1_index(&self) -> usize {
        self.packing.len()
    }

    pub fn policy(&self) -> FeedbackPolicy {
        FeedbackPolicy::LowerBound {
            hidden: self.hidden_index,
            fallback: self.e1_index(),
        }
    }

    /// Same packing with another hidden vector.
    pub fn with_hidden(&self, hidden_index: usize) -> Result<Self> {
        if hidden_index >= self.packing.len() {
            return Err(Error::invalid("hidden index out of range"));
        }
        Ok(Self {
            hidden_index,
            w_star: hidden_point(&self.packing[hidden_index]),
            ..self.clone()
        })
    }

    /// `floor(0.1 sqrt(|S|))` rounds, the horizon of the bound.
    pub fn bound_rounds(&self) -> usize {
        (0.1 * (self.packing.len() as f64).sqrt()).floor() as usize
    }

    /// `floor(sqrt(|S|))`, the list size of the bound.
    pub fn bound_list_size(&self) -> usize {
        (self.packing.len() as f64).sqrt().floor() as usize
    }
}

fn hidden_point(u: &Direction) -> Point {
    let mut w = u.vector() * 0.8;
    w[0] += 0.2;
    Point::from_vector_unchecked(w)
}

/// Builds the packing and draws the hidden vector.
///
/// The packing starts from `±e_2, ..., ±e_d` (pairwise inner products 0 or
/// -1) and is extended by random unit vectors orthogonal to `e_1`, each
/// accepted iff its inner product with every accepted vector is at most 0.1.
/// Extension stops after `200 |S|` consecutive rejections.
pub fn make_lowerbound_instance(dim: usize, rng: RngStream) -> Result<LowerBoundInstance> {
    if dim < 3 {
        return Err(Error::invalid("the lower-bound instance needs d >= 3"));
    }
    let mut packing: Vec<Direction> = Vec::new();
    for j in 1..dim {
        packing.push(Direction::axis(dim, j));
        packing.push(Direction::axis(dim, j).negated());
    }
    let mut gen = rng.substream(0).rng();
    let mut misses = 0usize;
    while misses < 200 * packing.len() {
        let mut v: Vec<f64> = (0..dim).map(|_| gen.sample(StandardNormal)).collect();
        v[0] = 0.0;
        let Ok(c) = Direction::from_slice(&v) else {
            continue;
        };
        if packing.iter().all(|s| s.dot(&c) <= PACKING_MAX_INNER) {
            packing.push(c);
            misses = 0;
        } else {
            misses += 1;
        }
    }
    if packing.len() < MIN_PACKING {
        return Err(Error::PackingTooSmall(packing.len()));
    }
    let hidden_index = rng.substream(1).rng().random_range(0..packing.len());
    let w_star = hidden_point(&packing[hidden_index]);
    Ok(LowerBoundInstance {
        dim,
        packing,
        hidden_index,
        w_star,
    })
}

/// Plays `horizon` rounds of local recommendation against the instance's
/// adversary.
pub fn run_lowerbound_game(
    instance: &LowerBoundInstance,
    learner: &Learner,
    h: usize,
    horizon: usize,
    rng: RngStream,
) -> Result<Vec<LocalRound>> {
    if h > instance.packing.len() {
        return Err(Error::invalid("list size exceeds the packing size"));
    }
    let policy = instance.policy();
    let mut state = CuttingPlaneState::initial(instance.dim, Some(horizon.max(1)))?;
    let mut out = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let x = instance.action_set(t + 1)?;
        let (rec, next) = step_local(
            &state,
            learner,
            &x,
            h,
            &instance.w_star,
            &policy,
            rng.substream(4 * t as u64 + 1),
        )?;
        out.push(rec);
        state = next;
    }
    Ok(out)
}
