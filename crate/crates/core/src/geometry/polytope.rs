use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::lp::{self, Objective, Rows, SolveError};
use super::{Direction, Halfspace, Point};
use crate::error::{Error, Result};

/// Minimum slack the stored witness must have for the body to count as
/// full-dimensional.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Below this inradius the body is treated as a point and frozen.
pub const FREEZE_SLACK: f64 = 1e-9;
/// A witness LP optimum below `-EMPTY_TOL` certifies emptiness.
const EMPTY_TOL: f64 = 1e-7;
/// Slack margin used when certifying a halfspace as redundant.
const REDUNDANCY_TOL: f64 = 1e-12;

/// Bounded intersection of halfspaces `{w : <a_i, w> >= b_i}`.
///
/// The full halfspace history is kept as given; numerical routines run on a
/// cached subset of non-redundant halfspaces, which describes the same set.
/// The coordinate box `[-R, R]^d` is always part of the list, so every
/// feasible point has sup-norm at most `R`.
#[derive(Clone, Debug)]
pub struct Polytope {
    dim: usize,
    halfspaces: Vec<Halfspace>,
    bounding_radius: f64,
    witness: Point,
    witness_slack: f64,
    frozen: bool,
    active: Vec<usize>,
    rows: Vec<f64>,
    offsets: Vec<f64>,
}

impl Polytope {
    /// Builds the polytope from `halfspaces` plus the box `[-R, R]^d`.
    pub fn new(dim: usize, halfspaces: Vec<Halfspace>, bounding_radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("polytope dimension must be positive"));
        }
        if !(bounding_radius > 0.0 && bounding_radius.is_finite()) {
            return Err(Error::invalid("bounding radius must be positive and finite"));
        }
        if halfspaces.iter().any(|h| h.normal.dim() != dim || !h.offset.is_finite()) {
            return Err(Error::invalid("halfspace dimension mismatch or non-finite offset"));
        }
        let mut all = halfspaces;
        for j in 0..dim {
            all.push(Halfspace::new(Direction::axis(dim, j), -bounding_radius));
            all.push(Halfspace::new(Direction::axis(dim, j).negated(), -bounding_radius));
        }
        let active: Vec<usize> = (0..all.len()).collect();
        let mut poly = Polytope {
            dim,
            halfspaces: all,
            bounding_radius,
            witness: Point::zeros(dim),
            witness_slack: 0.0,
            frozen: false,
            active,
            rows: Vec::new(),
            offsets: Vec::new(),
        };
        poly.rebuild_rows();
        poly.refresh(Point::zeros(dim))?;
        Ok(poly)
    }

    /// The box `[lo_j, hi_j]`.
    pub fn axis_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
            return Err(Error::invalid("box bounds must satisfy lo < hi coordinatewise"));
        }
        let dim = lo.len();
        let mut hs = Vec::with_capacity(2 * dim);
        for j in 0..dim {
            hs.push(Halfspace::new(Direction::axis(dim, j), lo[j]));
            hs.push(Halfspace::new(Direction::axis(dim, j).negated(), -hi[j]));
        }
        let r = lo.iter().chain(hi).fold(0.0f64, |a, &x| a.max(x.abs()));
        Self::new(dim, hs, r.max(1e-12) * (1.0 + 1e-9))
    }

    /// The cube `[-half, half]^d`.
    pub fn cube(dim: usize, half: f64) -> Result<Self> {
        Self::axis_box(&vec![-half; dim], &vec![half; dim])
    }

    /// The simplex `conv{0, s e_1, ..., s e_d}`.
    pub fn corner_simplex(dim: usize, scale: f64) -> Result<Self> {
        let mut hs: Vec<Halfspace> = (0..dim)
            .map(|j| Halfspace::new(Direction::axis(dim, j), 0.0))
            .collect();
        let ones = Direction::normalize(DVector::from_element(dim, 1.0))?;
        hs.push(Halfspace::new(ones.negated(), -scale / (dim as f64).sqrt()));
        Self::new(dim, hs, scale * (1.0 + 1e-9))
    }

    /// Circumscribed polytope approximation of the unit ball.
    ///
    /// Normals: 64 evenly spaced at `d = 2`, a Fibonacci lattice at `d = 3`,
    /// seeded Gaussian directions above; `min(256, max(2d^2, 64))` in all.
    pub fn unit_ball_approx(dim: usize) -> Result<Self> {
        let count = (2 * dim * dim).max(64).min(256);
        let normals: Vec<Direction> = match dim {
            1 => vec![],
            2 => (0..count)
                .map(|i| {
                    let th = 2.0 * std::f64::consts::PI * (i as f64) / count as f64;
                    Direction::from_slice(&[th.cos(), th.sin()])
                })
                .collect::<Result<_>>()?,
            3 => {
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                (0..count)
                    .map(|i| {
                        let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                        let rad = (1.0 - z * z).sqrt();
                        let th = golden * i as f64;
                        Direction::from_slice(&[rad * th.cos(), rad * th.sin(), z])
                    })
                    .collect::<Result<_>>()?
            }
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(0x0b_a11_5eed);
                (0..count).map(|_| Direction::random(dim, &mut rng)).collect()
            }
        };
        let hs = normals.into_iter().map(|n| Halfspace::new(n, -1.0)).collect();
        Self::new(dim, hs, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Every halfspace ever added, including the bounding box.
    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn halfspace_count(&self) -> usize {
        self.halfspaces.len()
    }

    /// Number of halfspaces in the non-redundant working description.
    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    /// Interior point maximizing the minimum slack.
    pub fn witness(&self) -> &Point {
        &self.witness
    }

    pub fn witness_slack(&self) -> f64 {
        self.witness_slack
    }

    /// True once the body is numerically a point.
    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub(crate) fn rows(&self) -> Rows<'_> {
        Rows {
            a: &self.rows,
            b: &self.offsets,
            dim: self.dim,
        }
    }

    fn max_iter(&self) -> usize {
        10 * self.dim * self.active.len().max(1)
    }

    /// `K ∩ h`, with witness recomputation and redundancy pruning.
    pub fn intersect(&self, h: Halfspace) -> Result<Polytope> {
        if h.normal.dim() != self.dim || !h.offset.is_finite() {
            return Err(Error::invalid("halfspace dimension mismatch or non-finite offset"));
        }
        let mut next = self.clone();
        next.halfspaces.push(h);
        if self.frozen {
            return Ok(next);
        }
        next.active.push(next.halfspaces.len() - 1);
        next.rebuild_rows();
        next.refresh(self.witness.clone())?;
        Ok(next)
    }

    /// Intersects with several halfspaces at once.
    pub fn intersect_all(&self, hs: impl IntoIterator<Item = Halfspace>) -> Result<Polytope> {
        let mut next = self.clone();
        let mut any = false;
        for h in hs {
            if h.normal.dim() != self.dim || !h.offset.is_finite() {
                return Err(Error::invalid("halfspace dimension mismatch or non-finite offset"));
            }
            next.halfspaces.push(h);
            if !self.frozen {
                next.active.push(next.halfspaces.len() - 1);
            }
            any = true;
        }
        if any && !self.frozen {
            next.rebuild_rows();
            next.refresh(self.witness.clone())?;
        }
        Ok(next)
    }

    fn rebuild_rows(&mut self) {
        self.rows.clear();
        self.offsets.clear();
        for &i in &self.active {
            let h = &self.halfspaces[i];
            self.rows.extend(h.normal.iter());
            self.offsets.push(h.offset);
        }
    }

    /// Recomputes the witness from `start`, then prunes redundant rows.
    fn refresh(&mut self, start: Point) -> Result<()> {
        let (w, s) = self.max_slack_point(start.as_slice())?;
        if s < -EMPTY_TOL {
            return Err(Error::EmptyKnowledge { max_slack: s });
        }
        self.witness = Point::from_vector_unchecked(DVector::from_vec(w));
        self.witness_slack = s;
        self.frozen = s < FREEZE_SLACK;
        if !self.frozen {
            self.prune();
        }
        Ok(())
    }

    /// Solves `max s  s.t.  a_i . x - s >= b_i,  s <= 2R` from `start`.
    fn max_slack_point(&self, start: &[f64]) -> Result<(Vec<f64>, f64)> {
        let d = self.dim;
        let m = self.offsets.len();
        let mut a = Vec::with_capacity((m + 1) * (d + 1));
        let mut b = Vec::with_capacity(m + 1);
        for i in 0..m {
            a.extend_from_slice(&self.rows[i * d..(i + 1) * d]);
            a.push(-1.0);
            b.push(self.offsets[i]);
        }
        a.extend(std::iter::repeat(0.0).take(d));
        a.push(-1.0);
        b.push(-2.0 * self.bounding_radius);
        let rows = Rows { a: &a, b: &b, dim: d + 1 };
        let mut x0 = start.to_vec();
        let s0 = self.rows().min_slack(start).min(2.0 * self.bounding_radius) - 1.0;
        x0.push(s0);
        let mut c = vec![0.0; d + 1];
        c[d] = -1.0;
        let cap = 10 * (d + 1) * (m + 1);
        let sol = lp::solve(rows, Objective::Linear(&c), &x0, None, cap).map_err(map_err)?;
        let mut x = sol.y;
        x.truncate(d);
        let attained = self.rows().min_slack(&x);
        Ok((x, attained))
    }

    fn prune(&mut self) {
        let mut k = 0;
        while k < self.active.len() {
            if self.active.len() <= self.dim + 1 {
                break;
            }
            let d = self.dim;
            let row = self.rows[k * d..(k + 1) * d].to_vec();
            let b = self.offsets[k];
            let cap = 10 * d * self.active.len();
            let res = lp::solve(
                self.rows(),
                Objective::Linear(&row),
                self.witness.as_slice(),
                Some(k),
                cap,
            );
            let redundant = match res {
                Ok(sol) => lp::dot(&row, &sol.y) >= b - REDUNDANCY_TOL,
                Err(_) => false,
            };
            if redundant {
                self.active.remove(k);
                self.rows.drain(k * d..(k + 1) * d);
                self.offsets.remove(k);
            } else {
                k += 1;
            }
        }
    }

    /// Membership in every recorded halfspace within `tol`.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.slack(x) >= -tol)
    }

    /// `min_{x in K} <u, x>` and its minimizer.
    pub fn support_min(&self, u: &DVector<f64>) -> Result<(f64, Point)> {
        if u.len() != self.dim {
            return Err(Error::invalid("direction dimension mismatch"));
        }
        if self.witness_slack < -EMPTY_TOL {
            return Err(Error::LpInfeasible("witness violates the halfspaces".into()));
        }
        let sol = lp::solve(
            self.rows(),
            Objective::Linear(u.as_slice()),
            self.witness.as_slice(),
            None,
            self.max_iter(),
        )
        .map_err(map_err)?;
        let y = DVector::from_vec(sol.y);
        Ok((u.dot(&y), Point::from_vector_unchecked(y)))
    }

    /// `max_{x in K} <u, x>` and its maximizer.
    pub fn support_max(&self, u: &DVector<f64>) -> Result<(f64, Point)> {
        let neg = -u;
        let (v, p) = self.support_min(&neg)?;
        Ok((-v, p))
    }

    /// `max <u,x> - min <u,x>` over the body.
    pub fn width(&self, u: &Direction) -> Result<f64> {
        let (lo, _) = self.support_min(u)?;
        let (hi, _) = self.support_max(u)?;
        Ok((hi - lo).max(0.0))
    }

    /// Per-coordinate extents `(lo, hi)`.
    pub fn extents(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut lo = Vec::with_capacity(self.dim);
        let mut hi = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            let e = Direction::axis(self.dim, j);
            lo.push(self.support_min(&e)?.0);
            hi.push(self.support_max(&e)?.0);
        }
        Ok((lo, hi))
    }

    /// Euclidean projection onto the body; `y` satisfies every halfspace
    /// within `tol` and `|x - y| <= dist(x, K) + tol`.
    pub fn project(&self, x: &Point, tol: f64) -> Result<Point> {
        if x.dim() != self.dim {
            return Err(Error::invalid("point dimension mismatch"));
        }
        if !(tol > 0.0) {
            return Err(Error::invalid("projection tolerance must be positive"));
        }
        let y = self.project_raw(x.as_slice())?;
        let y = DVector::from_vec(y);
        if !self.contains(&y, tol.max(self.frozen_tol())) {
            return Err(Error::NonConvergence(
                "projection left the feasible set beyond tolerance".into(),
            ));
        }
        Ok(Point::from_vector_unchecked(y))
    }

    fn frozen_tol(&self) -> f64 {
        if self.frozen {
            EMPTY_TOL
        } else {
            0.0
        }
    }

    pub(crate) fn project_raw(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.rows().min_slack(x) >= 0.0 {
            return Ok(x.to_vec());
        }
        lp::solve(
            self.rows(),
            Objective::Distance(x),
            self.witness.as_slice(),
            None,
            self.max_iter(),
        )
        .map(|s| s.y)
        .map_err(map_err)
    }

    /// `dist(x, K)`.
    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        let y = self.project_raw(x)?;
        Ok(x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
    }
}

fn map_err(e: SolveError) -> Error {
    match e {
        SolveError::Unbounded => Error::LpUnbounded,
        SolveError::IterationCap(n) => Error::NonConvergence(format!("active-set cap {n} reached")),
        SolveError::Singular => Error::NonConvergence("singular working set".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn cube_width_and_witness() {
        let k = Polytope::cube(2, 1.0).unwrap();
        assert!((k.width(&Direction::axis(2, 0)).unwrap() - 2.0).abs() < 1e-8);
        assert!((k.witness_slack() - 1.0).abs() < 1e-9);
        assert!(!k.is_frozen());
    }

    #[test]
    fn triangle_width_matches_vertex_enumeration() {
        let k = Polytope::corner_simplex(2, 1.0).unwrap();
        let u = Direction::from_slice(&[1.0, 1.0]).unwrap();
        // vertices 0, e1, e2 project to 0, 1/sqrt2, 1/sqrt2
        let expected = std::f64::consts::FRAC_1_SQRT_2;
        assert!((k.width(&u).unwrap() - expected).abs() < 1e-8);
    }

    #[test]
    fn ball_approx_width_close_to_two() {
        let k = Polytope::unit_ball_approx(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let u = Direction::random(2, &mut rng);
            let w = k.width(&u).unwrap();
            assert!((w - 2.0).abs() <= 0.01, "width {w}");
        }
        // redundant box rows are pruned
        assert_eq!(k.active_count(), 64);
        assert_eq!(k.halfspace_count(), 68);
    }

    #[test]
    fn projection_examples() {
        let k = Polytope::cube(2, 1.0).unwrap();
        let y = k.project(&pt(&[3.0, 0.0]), 1e-7).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9);
        let x = pt(&[0.2, -0.7]);
        assert_eq!(k.project(&x, 1e-7).unwrap(), x);

        let half = k
            .intersect(Halfspace::new(Direction::axis(2, 0), 0.0))
            .unwrap();
        let y = half.project(&pt(&[-2.0, 0.5]), 1e-7).unwrap();
        assert!(y[0].abs() < 1e-9 && (y[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn intersect_keeps_history_and_prunes() {
        let k = Polytope::cube(2, 1.0).unwrap();
        let n0 = k.halfspace_count();
        let k2 = k
            .intersect(Halfspace::through(&Point::zeros(2), &Direction::axis(2, 0)))
            .unwrap();
        assert_eq!(k2.halfspace_count(), n0 + 1);
        // x >= -1 is now redundant
        assert_eq!(k2.active_count(), 4);
        assert!(k2.contains(&DVector::from_vec(vec![0.5, 0.0]), 0.0));
        assert!(!k2.contains(&DVector::from_vec(vec![-0.5, 0.0]), 0.0));
    }

    #[test]
    fn opposite_cuts_freeze() {
        let k = Polytope::cube(2, 1.0).unwrap();
        let p = pt(&[0.1, 0.2]);
        let v = Direction::from_slice(&[1.0, 1.0]).unwrap();
        let k = k.intersect(Halfspace::through(&p, &v)).unwrap();
        assert!(!k.is_frozen());
        let k = k.intersect(Halfspace::through(&p, &v.negated())).unwrap();
        assert!(k.is_frozen());
        // witness lies on the slab
        assert!((v.dot(k.witness()) - v.dot(&p)).abs() < 1e-7);
        // further cuts are recorded without error
        let n = k.halfspace_count();
        let k = k.intersect(Halfspace::through(&p, &Direction::axis(2, 1))).unwrap();
        assert_eq!(k.halfspace_count(), n + 1);
    }

    #[test]
    fn empty_intersection_is_an_error() {
        let k = Polytope::cube(2, 1.0).unwrap();
        let h = Halfspace::new(Direction::axis(2, 0), 2.0);
        assert!(matches!(k.intersect(h), Err(Error::EmptyKnowledge { .. })));
    }
}
