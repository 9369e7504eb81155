//! Simulated separation oracles.
//!
//! Strong oracles see the query before choosing a direction. Weak oracles
//! commit to a direction `u_t` in [`Oracle::begin_round`], which only sees
//! the knowledge set, and then answer `+u_t` or `-u_t`.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cutting_plane::OracleResponse;
use crate::error::{Error, Result};
use crate::geometry::{john_ellipsoid, sample_dilated, Direction, Point, Polytope};
use crate::rng::RngStream;

/// Tolerance on `<w* - p, v>` below which a response counts as invalid.
pub const VALIDITY_TOL: f64 = 1e-9;

fn default_candidates() -> usize {
    64
}

fn default_cut_samples() -> usize {
    512
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleSpec {
    StrongMaxRegret,
    StrongMinCut {
        #[serde(default = "default_candidates")]
        candidates: usize,
        /// Points of `K` used to compare removed volumes.
        #[serde(default = "default_cut_samples")]
        samples: usize,
    },
    WeakRandom,
    WeakLongAxis,
}

impl OracleSpec {
    pub fn name(&self) -> &'static str {
        match self {
            OracleSpec::StrongMaxRegret => "strong_max_regret",
            OracleSpec::StrongMinCut { .. } => "strong_min_cut",
            OracleSpec::WeakRandom => "weak_random",
            OracleSpec::WeakLongAxis => "weak_long_axis",
        }
    }

    pub fn is_weak(&self) -> bool {
        matches!(self, OracleSpec::WeakRandom | OracleSpec::WeakLongAxis)
    }

    pub fn validate(&self) -> Result<()> {
        if let OracleSpec::StrongMinCut { candidates, samples } = self {
            if *candidates == 0 {
                return Err(Error::config("oracle.candidates", "must be at least 1"));
            }
            if *samples == 0 {
                return Err(Error::config("oracle.samples", "must be at least 1"));
            }
        }
        Ok(())
    }
}

fn fallback_direction(dim: usize) -> Direction {
    Direction::axis(dim, 0)
}

/// `v = (w* - p)/|w* - p|`, or `e_1` when `w* = p`.
pub fn respond_strong_max_regret(w_star: &Point, p: &Point) -> OracleResponse {
    let diff = w_star.vector() - p.vector();
    let direction = Direction::normalize(diff).unwrap_or_else(|_| fallback_direction(p.dim()));
    OracleResponse { direction }
}

/// `v = +u` if `<w* - p, u> >= 0`, else `-u`.
pub fn respond_weak(u: &Direction, w_star: &Point, p: &Point) -> OracleResponse {
    let s = (w_star.vector() - p.vector()).dot(u);
    let direction = if s >= 0.0 { u.clone() } else { u.negated() };
    OracleResponse { direction }
}

/// Among `candidates` directions (the max-regret direction plus random
/// ones) that are valid for `w*`, the one whose cut through `p` removes the
/// smallest fraction of `points`.
pub fn respond_strong_min_cut_with(
    w_star: &Point,
    p: &Point,
    points: &[Point],
    candidates: usize,
    rng: RngStream,
) -> Result<OracleResponse> {
    if candidates == 0 {
        return Err(Error::invalid("min-cut oracle needs at least one candidate"));
    }
    let d = p.dim();
    let diff = w_star.vector() - p.vector();
    let mut rng = rng.rng();
    let mut dirs = vec![respond_strong_max_regret(w_star, p).direction];
    for _ in 1..candidates {
        dirs.push(Direction::random(d, &mut rng));
    }
    let centered: Vec<DVector<f64>> = points.iter().map(|x| x.vector() - p.vector()).collect();
    let mut best: Option<(usize, &Direction)> = None;
    for v in &dirs {
        if diff.dot(v) < 0.0 {
            continue;
        }
        let removed = centered.iter().filter(|y| y.dot(v) < 0.0).count();
        if best.is_none_or(|(b, _)| removed < b) {
            best = Some((removed, v));
        }
    }
    let direction = best.map(|(_, v)| v.clone()).unwrap_or_else(|| dirs[0].clone());
    Ok(OracleResponse { direction })
}

/// Min-cut response using `samples` points of `K` drawn from `rng`.
pub fn respond_strong_min_cut(
    w_star: &Point,
    p: &Point,
    k: &Polytope,
    candidates: usize,
    samples: usize,
    rng: RngStream,
) -> Result<OracleResponse> {
    let points = sample_dilated(k, 0.0, samples, rng.substream(0))?;
    respond_strong_min_cut_with(w_star, p, &points, candidates, rng.substream(1))
}

/// An oracle bound to a hidden point, answering one round at a time.
#[derive(Clone, Debug)]
pub struct Oracle {
    spec: OracleSpec,
    w_star: Point,
    committed: Option<Direction>,
    cloud: Vec<Point>,
    round_rng: Option<RngStream>,
}

impl Oracle {
    pub fn new(spec: OracleSpec, w_star: Point) -> Result<Self> {
        spec.validate()?;
        if w_star.norm() > 1.0 + 1e-9 {
            return Err(Error::invalid("hidden point must have norm at most 1"));
        }
        Ok(Self {
            spec,
            w_star,
            committed: None,
            cloud: Vec::new(),
            round_rng: None,
        })
    }

    pub fn spec(&self) -> &OracleSpec {
        &self.spec
    }

    pub fn w_star(&self) -> &Point {
        &self.w_star
    }

    /// The direction a weak oracle committed to this round.
    pub fn committed(&self) -> Option<&Direction> {
        self.committed.as_ref()
    }

    /// Prepares a round from the knowledge set alone, before the query.
    pub fn begin_round(&mut self, k: &Polytope, rng: RngStream) -> Result<()> {
        let d = k.dim();
        self.committed = None;
        self.cloud.clear();
        self.round_rng = Some(rng);
        match &self.spec {
            OracleSpec::StrongMaxRegret => {}
            OracleSpec::StrongMinCut { samples, .. } => {
                self.cloud = sample_dilated(k, 0.0, *samples, rng.substream(0))?;
            }
            OracleSpec::WeakRandom => {
                self.committed = Some(Direction::random(d, &mut rng.rng()));
            }
            OracleSpec::WeakLongAxis => {
                let u = match john_ellipsoid(k, 0.05) {
                    Ok(e) => e.longest_axis(),
                    Err(_) => fallback_direction(d),
                };
                // A random sign keeps the adversary from favouring one side.
                let sign = rng.rng().random_bool(0.5);
                self.committed = Some(if sign { u } else { u.negated() });
            }
        }
        Ok(())
    }

    /// Answers the query `p`, checking validity against the hidden point.
    pub fn respond(&self, p: &Point) -> Result<OracleResponse> {
        let resp = match &self.spec {
            OracleSpec::StrongMaxRegret => respond_strong_max_regret(&self.w_star, p),
            OracleSpec::StrongMinCut { candidates, .. } => {
                let rng = self.round_rng.unwrap_or(RngStream::new(0, 0));
                respond_strong_min_cut_with(&self.w_star, p, &self.cloud, *candidates, rng.substream(1))?
            }
            OracleSpec::WeakRandom | OracleSpec::WeakLongAxis => {
                let u = self
                    .committed
                    .as_ref()
                    .ok_or_else(|| Error::invalid("weak oracle queried before begin_round"))?;
                respond_weak(u, &self.w_star, p)
            }
        };
        check_valid(&self.w_star, p, &resp)?;
        Ok(resp)
    }
}

/// `Err(InvalidOracle)` unless `<w* - p, v> >= -VALIDITY_TOL`.
pub fn check_valid(w_star: &Point, p: &Point, resp: &OracleResponse) -> Result<f64> {
    let g = (w_star.vector() - p.vector()).dot(&resp.direction);
    if g < -VALIDITY_TOL {
        return Err(Error::InvalidOracle(g));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn max_regret_examples() {
        let r = respond_strong_max_regret(&pt(&[1.0, 0.0]), &pt(&[0.0, 0.0]));
        assert_eq!(r.direction.as_slice(), &[1.0, 0.0]);
        let r = respond_strong_max_regret(&pt(&[0.3, 0.3]), &pt(&[0.3, 0.3]));
        assert_eq!(r.direction.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn max_regret_equals_distance() {
        let w = pt(&[0.2, -0.7]);
        let p = pt(&[-0.4, 0.1]);
        let r = respond_strong_max_regret(&w, &p);
        let g = check_valid(&w, &p, &r).unwrap();
        assert!((g - w.distance(&p)).abs() < 1e-15);
    }

    #[test]
    fn weak_examples() {
        let u = Direction::axis(2, 0);
        let w = pt(&[0.5, 0.0]);
        assert_eq!(respond_weak(&u, &w, &pt(&[0.0, 0.0])).direction, u);
        assert_eq!(respond_weak(&u, &w, &pt(&[0.9, 0.0])).direction, u.negated());
        let p = pt(&[0.1, 0.8]);
        let r = respond_weak(&u, &w, &p);
        let g = check_valid(&w, &p, &r).unwrap();
        assert!((g - (w.vector() - p.vector()).dot(&u).abs()).abs() < 1e-15);
    }

    #[test]
    fn single_candidate_is_max_regret() {
        let k = Polytope::cube(2, 1.0).unwrap();
        let w = pt(&[0.4, 0.7]);
        let p = pt(&[0.0, 0.0]);
        let r = respond_strong_min_cut(&w, &p, &k, 1, 64, RngStream::new(1, 0)).unwrap();
        assert_eq!(r, respond_strong_max_regret(&w, &p));
    }

    #[test]
    fn invalid_response_is_rejected() {
        let w = pt(&[0.5, 0.0]);
        let p = pt(&[0.0, 0.0]);
        let bad = OracleResponse {
            direction: Direction::axis(2, 0).negated(),
        };
        assert!(matches!(check_valid(&w, &p, &bad), Err(Error::InvalidOracle(_))));
    }

    #[test]
    fn weak_oracle_commits_before_query() {
        let k = Polytope::axis_box(&[-2.0, -0.5], &[2.0, 0.5]).unwrap();
        let mut o = Oracle::new(OracleSpec::WeakLongAxis, pt(&[0.1, 0.1])).unwrap();
        o.begin_round(&k, RngStream::new(3, 0)).unwrap();
        let u = o.committed().unwrap().clone();
        assert!(u[0].abs() > 0.999);
        for q in [[0.0, 0.0], [0.5, 0.2], [-0.3, 0.1]] {
            let v = o.respond(&pt(&q)).unwrap().direction;
            assert!(v == u || v == u.negated());
        }
    }
}
