use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Direction, Point};
use crate::rng::RngStream;

/// Actions closer than this are merged when a set is built.
pub const DEDUP_TOL: f64 = 1e-12;
/// Allowed excess of an action's norm over 1.
pub const ACTION_NORM_TOL: f64 = 1e-9;

/// The actions offered in one round. Near-duplicates are merged on
/// construction so that index equality means value equality.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionSet {
    actions: Vec<Point>,
    round: usize,
}

impl ActionSet {
    pub fn new(actions: Vec<Point>, round: usize) -> Result<Self> {
        let Some(first) = actions.first() else {
            return Err(Error::invalid("action set must be nonempty"));
        };
        let d = first.dim();
        let mut kept: Vec<Point> = Vec::with_capacity(actions.len());
        for a in actions {
            if a.dim() != d {
                return Err(Error::invalid("actions have mixed dimensions"));
            }
            if a.norm() > 1.0 + ACTION_NORM_TOL {
                return Err(Error::invalid(format!("action norm {} exceeds 1", a.norm())));
            }
            if !kept.iter().any(|k| k.distance(&a) <= DEDUP_TOL) {
                kept.push(a);
            }
        }
        Ok(Self { actions: kept, round })
    }

    pub fn actions(&self) -> &[Point] {
        &self.actions
    }

    pub fn get(&self, i: usize) -> &Point {
        &self.actions[i]
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn dim(&self) -> usize {
        self.actions[0].dim()
    }

    pub fn value(&self, i: usize, w: &Point) -> f64 {
        self.actions[i].dot(w)
    }
}

/// Lowest index maximizing `<x, w>` over the set.
pub fn best_response(w: &Point, x: &ActionSet) -> usize {
    let mut best = 0;
    let mut best_val = x.value(0, w);
    for i in 1..x.len() {
        let v = x.value(i, w);
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

/// How each round's action set is produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionGenerator {
    /// `count` points uniform on the unit sphere, fresh every round.
    UniformSphere { count: usize },
    /// Vertices of the convex hull of `count` points uniform in the unit
    /// ball, fresh every round.
    VertexCloud { count: usize },
    /// The same actions every round.
    FixedCatalog { actions: Vec<Vec<f64>> },
}

impl ActionGenerator {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            ActionGenerator::UniformSphere { count } | ActionGenerator::VertexCloud { count } => {
                if *count == 0 {
                    return Err(Error::config("environment.actions.count", "must be at least 1"));
                }
            }
            ActionGenerator::FixedCatalog { actions } => {
                if actions.is_empty() {
                    return Err(Error::config("environment.actions.actions", "must be nonempty"));
                }
                for a in actions {
                    if a.len() != dim {
                        return Err(Error::config(
                            "environment.actions.actions",
                            format!("action of length {} in dimension {dim}", a.len()),
                        ));
                    }
                    let n = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if !(n <= 1.0 + ACTION_NORM_TOL) {
                        return Err(Error::config(
                            "environment.actions.actions",
                            format!("action norm {n} exceeds 1"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn generate(&self, dim: usize, round: usize, rng: RngStream) -> Result<ActionSet> {
        let mut rng = rng.rng();
        let actions = match self {
            ActionGenerator::UniformSphere { count } => (0..*count)
                .map(|_| Point::from_vector_unchecked(Direction::random(dim, &mut rng).vector().clone()))
                .collect(),
            ActionGenerator::VertexCloud { count } => {
                let pts: Vec<Point> = (0..*count)
                    .map(|_| {
                        let u = Direction::random(dim, &mut rng);
                        let radius = rng.random::<f64>().powf(1.0 / dim as f64);
                        Point::from_vector_unchecked(u.vector() * radius)
                    })
                    .collect();
                hull_vertices(&pts)
            }
            ActionGenerator::FixedCatalog { actions } => actions
                .iter()
                .map(|a| Point::new(a.clone()))
                .collect::<Result<_>>()?,
        };
        ActionSet::new(actions, round)
    }
}

/// Points that are vertices of the convex hull of `pts`: `x_i` is kept iff
/// some `c` in `[-1, 1]^d` has `<c, x_i - x_j> > 0` for every other `j`.
fn hull_vertices(pts: &[Point]) -> Vec<Point> {
    use crate::geometry::lp_separation_margin;
    if pts.len() <= 1 {
        return pts.to_vec();
    }
    (0..pts.len())
        .filter(|&i| {
            let diffs: Vec<DVector<f64>> = pts
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, p)| pts[i].vector() - p.vector())
                .collect();
            lp_separation_margin(&diffs).is_some_and(|m| m > 1e-10)
        })
        .map(|i| pts[i].clone())
        .collect()
}
