//! Contextual recommendation with comparison feedback.
//!
//! Every round the environment shows an action set `X_t` inside the unit
//! ball, the learner recommends one action or a list, and the environment
//! reveals the best action (or, in the local variant, any action at least as
//! good as the best one listed). Utility is linear in a hidden `w*`.

mod actions;
mod list;
mod local;
mod lowerbound;
mod reduction;

pub use actions::{best_response, ActionGenerator, ActionSet, ACTION_NORM_TOL, DEDUP_TOL};
pub use list::{br_constant_on, run_list_game, step_list, ListRound};
pub use local::{run_local_game, step_local, FeedbackPolicy, LocalRound};
pub use lowerbound::{make_lowerbound_instance, run_lowerbound_game, LowerBoundInstance};
pub use reduction::{run_contextual_game, step_reduction, ContextualRound};

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    BestAction,
    LocalBetter,
}

/// The action revealed by the environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FeedbackEvent {
    pub kind: FeedbackKind,
    pub action_index: usize,
}

/// A recommended list; the first entry is the anchor action `x_t`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Recommendation {
    pub list: Vec<usize>,
}

impl Recommendation {
    /// Builds a list with `anchor` first, dropping repeated indices.
    pub fn with_anchor(anchor: usize, rest: impl IntoIterator<Item = usize>) -> Self {
        let mut list = vec![anchor];
        for i in rest {
            if !list.contains(&i) {
                list.push(i);
            }
        }
        Self { list }
    }

    pub fn anchor_index(&self) -> usize {
        self.list[0]
    }

    pub fn contains(&self, i: usize) -> bool {
        self.list.contains(&i)
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }
}
