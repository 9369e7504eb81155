//! The cutting-plane game and its learners.
//!
//! Each round the learner proposes `p_t` from the knowledge set `K_t`, the
//! oracle answers a direction `v_t` with `<w* - p_t, v_t> >= 0`, the round
//! costs `<w* - p_t, v_t>` and the knowledge set becomes
//! `K_t ∩ {w : <w - p_t, v_t> >= 0}`.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    discretize_curvature_path, john_ellipsoid, CurvatureDiscretization, Direction, Halfspace, Point,
    Polytope, RadialCentroid,
};
use crate::oracles::{check_valid, Oracle, OracleSpec};
use crate::rng::RngStream;

/// Accuracy of the John ellipsoid used by the John-center learner.
pub const DEFAULT_JOHN_EPS: f64 = 0.05;
/// The Steiner learner retries with up to this many times its budget when
/// the centroid error is large against the body's width.
pub const MAX_BUDGET_ESCALATION: usize = 16;

#[derive(Clone, Debug)]
pub struct CuttingPlaneState {
    round: usize,
    knowledge: Polytope,
    horizon: Option<usize>,
    memo: Option<Memo>,
}

/// Work a learner already did on this exact state. A state carried over by
/// a round without an update keeps it, so the learner's target is not
/// re-estimated from fresh samples.
#[derive(Clone, Debug)]
pub struct Memo {
    spec: LearnerSpec,
    mc_budget: usize,
    work: MemoWork,
}

#[derive(Clone, Debug)]
enum MemoWork {
    Query(Point),
    Path(Arc<CurvatureDiscretization>),
}

impl CuttingPlaneState {
    pub fn new(knowledge: Polytope, horizon: Option<usize>) -> Self {
        Self {
            round: 0,
            knowledge,
            horizon,
            memo: None,
        }
    }

    /// The same state, remembering the learner work in `memo`.
    pub fn with_memo(mut self, memo: Memo) -> Self {
        self.memo = Some(memo);
        self
    }

    /// Starts from the circumscribed approximation of the unit ball.
    pub fn initial(dim: usize, horizon: Option<usize>) -> Result<Self> {
        Ok(Self::new(Polytope::unit_ball_approx(dim)?, horizon))
    }

    /// Number of counted rounds played so far.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn knowledge(&self) -> &Polytope {
        &self.knowledge
    }

    pub fn horizon(&self) -> Option<usize> {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.knowledge.dim()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResponse {
    pub direction: Direction,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub query: Point,
    pub response: OracleResponse,
    pub regret: f64,
    pub width_along_v: f64,
}

/// Center of the John ellipsoid of `K_t` (the witness once `K_t` is a point).
pub fn propose_john_center(state: &CuttingPlaneState, eps: f64) -> Result<Point> {
    let k = state.knowledge();
    if k.is_frozen() {
        return Ok(k.witness().clone());
    }
    Ok(john_ellipsoid(k, eps)?.center().clone())
}

/// Estimate of `cg(K_t + B/T)`.
///
/// Starts from `n` rays and multiplies the budget by 4 (up to
/// [`MAX_BUDGET_ESCALATION`]) while three standard errors along some John
/// axis exceed `width / (32 e d)` along that axis.
pub fn propose_steiner_centroid(state: &CuttingPlaneState, n: usize, rng: RngStream) -> Result<Point> {
    let t = state.horizon().ok_or(Error::MissingHorizon)?;
    dilated_centroid_query(state.knowledge(), 1.0 / t.max(1) as f64, n, rng)
}

/// Estimate of `cg(K_t)`, with the same budget rule as the Steiner learner.
pub fn propose_centroid(state: &CuttingPlaneState, n: usize, rng: RngStream) -> Result<Point> {
    dilated_centroid_query(state.knowledge(), 0.0, n, rng)
}

fn dilated_centroid_query(k: &Polytope, r: f64, n: usize, rng: RngStream) -> Result<Point> {
    if n == 0 {
        return Err(Error::invalid("sample budget must be at least 1"));
    }
    if k.is_frozen() {
        return Ok(k.witness().clone());
    }
    let d = k.dim();
    let john = john_ellipsoid(k, DEFAULT_JOHN_EPS)?;
    let axes = john.axes();
    let limit = 2.0 / (32.0 * std::f64::consts::E * d as f64);
    let mut budget = n;
    let mut attempt = 0u64;
    loop {
        let est = RadialCentroid::new(k, &john, (budget / 2).max(2), rng.substream(attempt))?
            .centroid(r)?;
        let ok = axes
            .iter()
            .all(|(s, u)| 3.0 * est.std_error_along(u) <= limit * s);
        if ok || budget >= n * MAX_BUDGET_ESCALATION {
            return Ok(est.point);
        }
        budget *= 4;
        attempt += 1;
    }
}

/// A uniformly random point of the `pieces`-piece curvature-path
/// discretization of `K_t`.
pub fn propose_curvature_random(
    state: &CuttingPlaneState,
    pieces: usize,
    n: usize,
    rng: RngStream,
) -> Result<Point> {
    if pieces == 0 {
        return Err(Error::invalid("pieces must be at least 1"));
    }
    let disc = discretize_curvature_path(state.knowledge(), pieces, n, rng.substream(0))?;
    Ok(pick_point(&disc, rng))
}

fn pick_point(disc: &CurvatureDiscretization, rng: RngStream) -> Point {
    let i = rng.substream(1).rng().random_range(0..disc.points.len());
    disc.points[i].clone()
}

/// `K_{t+1} = K_t ∩ {w : <w - p, v> >= 0}`, counting one round.
pub fn update_knowledge(state: &CuttingPlaneState, p: &Point, v: &Direction) -> Result<CuttingPlaneState> {
    if p.dim() != state.dim() || v.dim() != state.dim() {
        return Err(Error::invalid("query or direction has the wrong dimension"));
    }
    Ok(CuttingPlaneState {
        round: state.round + 1,
        knowledge: state.knowledge.intersect(Halfspace::through(p, v))?,
        horizon: state.horizon,
        memo: None,
    })
}

fn default_john_eps() -> f64 {
    DEFAULT_JOHN_EPS
}

/// Learner selection, as it appears in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LearnerSpec {
    /// Queries the John-ellipsoid center.
    JohnCenter {
        #[serde(default = "default_john_eps")]
        eps: f64,
    },
    /// Queries `cg(K_t + B/T)` with the game's horizon `T`.
    SteinerCentroid,
    /// Steiner learner without a known horizon: starts at
    /// `initial_horizon` and doubles it whenever the round count reaches it.
    SteinerDoubling { initial_horizon: usize },
    /// Queries a random point of the curvature-path discretization;
    /// `pieces` defaults to `192 d^4`.
    CurvatureRandom {
        #[serde(default)]
        pieces: Option<usize>,
    },
    /// Queries `cg(K_t)`; no regret guarantee is claimed for it.
    Centroid,
}

impl LearnerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LearnerSpec::JohnCenter { .. } => "john_center",
            LearnerSpec::SteinerCentroid => "steiner_centroid",
            LearnerSpec::SteinerDoubling { .. } => "steiner_doubling",
            LearnerSpec::CurvatureRandom { .. } => "curvature_random",
            LearnerSpec::Centroid => "centroid",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LearnerSpec::JohnCenter { eps } if !(*eps > 0.0 && *eps < 1.0) => {
                Err(Error::config("learner.eps", "must lie in (0, 1)"))
            }
            LearnerSpec::SteinerDoubling { initial_horizon: 0 } => {
                Err(Error::config("learner.initial_horizon", "must be at least 1"))
            }
            LearnerSpec::CurvatureRandom { pieces: Some(0) } => {
                Err(Error::config("learner.pieces", "must be at least 1"))
            }
            _ => Ok(()),
        }
    }

    /// Pieces used by the curvature learner at dimension `d`.
    pub fn pieces(&self, d: usize) -> Option<usize> {
        match self {
            LearnerSpec::CurvatureRandom { pieces } => Some(pieces.unwrap_or(192 * d.pow(4))),
            _ => None,
        }
    }
}

/// A learner: a spec plus its Monte Carlo budget. Proposals depend only on
/// the state and the stream, so resetting a round needs no extra bookkeeping.
#[derive(Clone, Debug)]
pub struct Learner {
    spec: LearnerSpec,
    mc_budget: usize,
}

impl Learner {
    pub fn new(spec: LearnerSpec, mc_budget: usize) -> Result<Self> {
        spec.validate()?;
        if mc_budget == 0 {
            return Err(Error::config("mc_budget", "must be at least 1"));
        }
        Ok(Self { spec, mc_budget })
    }

    pub fn spec(&self) -> &LearnerSpec {
        &self.spec
    }

    /// Horizon used at the current round by the doubling wrapper.
    pub fn doubling_horizon(initial: usize, round: usize) -> usize {
        let mut t = initial.max(1);
        while round >= t {
            t *= 2;
        }
        t
    }

    pub fn propose(&self, state: &CuttingPlaneState, rng: RngStream) -> Result<Point> {
        Ok(self.propose_memo(state, rng)?.0)
    }

    /// Like [`Learner::propose`], also returning the work to keep with the
    /// state if it is carried into the next round unchanged. A memo left by
    /// this learner on `state` is reused.
    pub fn propose_memo(&self, state: &CuttingPlaneState, rng: RngStream) -> Result<(Point, Memo)> {
        let memo = |work| Memo {
            spec: self.spec.clone(),
            mc_budget: self.mc_budget,
            work,
        };
        let cached = state
            .memo
            .as_ref()
            .filter(|m| m.spec == self.spec && m.mc_budget == self.mc_budget);
        if let LearnerSpec::CurvatureRandom { .. } = self.spec {
            let disc = match cached.map(|m| &m.work) {
                Some(MemoWork::Path(d)) => d.clone(),
                _ => {
                    let pieces = self.spec.pieces(state.dim()).unwrap_or(1);
                    Arc::new(discretize_curvature_path(
                        state.knowledge(),
                        pieces,
                        self.mc_budget,
                        rng.substream(0),
                    )?)
                }
            };
            return Ok((pick_point(&disc, rng), memo(MemoWork::Path(disc))));
        }
        if let Some(MemoWork::Query(p)) = cached.map(|m| &m.work) {
            return Ok((p.clone(), memo(MemoWork::Query(p.clone()))));
        }
        let n = self.mc_budget;
        let p = match &self.spec {
            LearnerSpec::JohnCenter { eps } => propose_john_center(state, *eps)?,
            LearnerSpec::SteinerCentroid => propose_steiner_centroid(state, n, rng)?,
            LearnerSpec::SteinerDoubling { initial_horizon } => {
                let t = Self::doubling_horizon(*initial_horizon, state.round());
                let inner = CuttingPlaneState {
                    horizon: Some(t),
                    ..state.clone()
                };
                propose_steiner_centroid(&inner, n, rng)?
            }
            LearnerSpec::CurvatureRandom { .. } => unreachable!(),
            LearnerSpec::Centroid => propose_centroid(state, n, rng)?,
        };
        Ok((p.clone(), memo(MemoWork::Query(p))))
    }
}

/// Plays `horizon` rounds from the unit-ball approximation and returns the
/// per-round records. Any invalid oracle answer aborts with `InvalidOracle`.
pub fn run_cutting_plane_game(
    learner: &Learner,
    oracle: &OracleSpec,
    w_star: &Point,
    horizon: usize,
    rng: RngStream,
) -> Result<Vec<RoundRecord>> {
    if horizon == 0 {
        return Err(Error::config("horizon", "must be at least 1"));
    }
    let mut oracle = Oracle::new(oracle.clone(), w_star.clone())?;
    let mut state = CuttingPlaneState::initial(w_star.dim(), Some(horizon))?;
    let mut records = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let (record, next) = play_round(&mut state, learner, &mut oracle, t, rng)?;
        records.push(record);
        state = next;
    }
    Ok(records)
}

fn play_round(
    state: &mut CuttingPlaneState,
    learner: &Learner,
    oracle: &mut Oracle,
    t: usize,
    rng: RngStream,
) -> Result<(RoundRecord, CuttingPlaneState)> {
    let base = 4 * t as u64;
    oracle.begin_round(state.knowledge(), rng.substream(base))?;
    let p = learner.propose(state, rng.substream(base + 1))?;
    let response = oracle.respond(&p)?;
    let regret = check_valid(oracle.w_star(), &p, &response)?;
    let width_along_v = state.knowledge().width(&response.direction)?;
    let next = update_knowledge(state, &p, &response.direction)?;
    Ok((
        RoundRecord {
            round: t + 1,
            query: p,
            response,
            regret,
            width_along_v,
        },
        next,
    ))
}

/// Regret `<w* - p, v>` of a single answer.
pub fn round_regret(w_star: &Point, p: &Point, v: &Direction) -> f64 {
    (w_star.vector() - p.vector()).dot(v)
}

/// `sum_t regret_t`.
pub fn total_regret(records: &[RoundRecord]) -> f64 {
    records.iter().map(|r| r.regret).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn john_center_examples() {
        let s = CuttingPlaneState::new(Polytope::cube(2, 1.0).unwrap(), None);
        assert!(propose_john_center(&s, 0.05).unwrap().norm() < 1e-6);
        let s = CuttingPlaneState::new(Polytope::axis_box(&[0.0, -1.0], &[1.0, 1.0]).unwrap(), None);
        let c = propose_john_center(&s, 0.05).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-4 && c[1].abs() < 1e-4, "{c:?}");
    }

    #[test]
    fn steiner_needs_horizon() {
        let s = CuttingPlaneState::new(Polytope::cube(2, 1.0).unwrap(), None);
        assert_eq!(
            propose_steiner_centroid(&s, 100, RngStream::new(0, 0)),
            Err(Error::MissingHorizon)
        );
    }

    #[test]
    fn update_appends_one_halfspace() {
        let s = CuttingPlaneState::new(Polytope::cube(2, 1.0).unwrap(), None);
        let s2 = update_knowledge(&s, &pt(&[0.0, 0.0]), &Direction::axis(2, 0)).unwrap();
        assert_eq!(s2.knowledge().halfspace_count(), s.knowledge().halfspace_count() + 1);
        assert_eq!(s2.round(), 1);
        assert!(!s2.knowledge().contains(&DVector::from_vec(vec![-0.1, 0.0]), 1e-9));
        assert!(s2.knowledge().contains(&DVector::from_vec(vec![0.1, 0.0]), 1e-9));
    }

    #[test]
    fn opposite_cuts_freeze_and_learners_return_witness() {
        let s = CuttingPlaneState::new(Polytope::cube(2, 1.0).unwrap(), Some(10));
        let p = pt(&[0.25, 0.0]);
        let v = Direction::axis(2, 0);
        let s = update_knowledge(&s, &p, &v).unwrap();
        let s = update_knowledge(&s, &p, &v.negated()).unwrap();
        assert!(s.knowledge().is_frozen());
        for spec in [
            LearnerSpec::JohnCenter { eps: 0.05 },
            LearnerSpec::SteinerCentroid,
            LearnerSpec::CurvatureRandom { pieces: Some(4) },
            LearnerSpec::Centroid,
        ] {
            let q = Learner::new(spec, 64).unwrap().propose(&s, RngStream::new(1, 0)).unwrap();
            assert!((q[0] - 0.25).abs() < 1e-7);
        }
    }

    #[test]
    fn doubling_horizon_schedule() {
        assert_eq!(Learner::doubling_horizon(4, 0), 4);
        assert_eq!(Learner::doubling_horizon(4, 3), 4);
        assert_eq!(Learner::doubling_horizon(4, 4), 8);
        assert_eq!(Learner::doubling_horizon(4, 17), 32);
    }

    #[test]
    fn max_regret_game_regret_is_distance() {
        let learner = Learner::new(LearnerSpec::JohnCenter { eps: 0.05 }, 64).unwrap();
        let w = pt(&[0.3, -0.2]);
        let recs =
            run_cutting_plane_game(&learner, &OracleSpec::StrongMaxRegret, &w, 20, RngStream::new(2, 0))
                .unwrap();
        for r in &recs {
            assert!((r.regret - w.distance(&r.query)).abs() < 1e-12);
        }
    }

    #[test]
    fn spec_serde_roundtrip() {
        let s: LearnerSpec = serde_json::from_str(r#"{"kind":"john_center"}"#).unwrap();
        assert_eq!(s, LearnerSpec::JohnCenter { eps: 0.05 });
        let s: LearnerSpec = serde_json::from_str(r#"{"kind":"curvature_random","pieces":512}"#).unwrap();
        assert_eq!(s.pieces(2), Some(512));
        let s: LearnerSpec = serde_json::from_str(r#"{"kind":"curvature_random"}"#).unwrap();
        assert_eq!(s.pieces(2), Some(3072));
        assert!(serde_json::from_str::<LearnerSpec>(r#"{"kind":"nope"}"#).is_err());
    }
}
