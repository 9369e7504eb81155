//! Radial estimator of `cg(K + rB)` with common directions across radii.
//!
//! For a body `A` star-shaped about `c` with radial function `t(n)`,
//! `cg(A) - c = d/(d+1) * E[n t(n)^(d+1)] / E[t(n)^d]` for `n` uniform on the
//! sphere. Directions come in antithetic pairs `(n, -n)`, so the centrally
//! symmetric part of the body cancels and the error stays of the order of the
//! size of `K` even when `r` is large. Rays are taken in the coordinates of
//! `(M + r^2 I)^(1/2)` with `M` the John shape, which keeps the dilation round.
//! Reusing the same directions for every radius makes the estimate a
//! continuous function of `r`.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use super::lp::dot;
use super::sampling::CentroidEstimate;
use super::{Ellipsoid, Point, Polytope};
use crate::error::{Error, Result};
use crate::rng::RngStream;

const MAX_RAY_ITERS: usize = 80;

pub struct RadialCentroid<'a> {
    poly: &'a Polytope,
    center: DVector<f64>,
    shape: DMatrix<f64>,
    /// Unit directions; `-dirs[i]` is used alongside each.
    dirs: Vec<DVector<f64>>,
    /// Upper bound on `max_{z in K} |z - center|`.
    reach: f64,
}

impl<'a> RadialCentroid<'a> {
    pub fn new(poly: &'a Polytope, john: &Ellipsoid, pairs: usize, rng: RngStream) -> Result<Self> {
        if pairs < 2 {
            return Err(Error::invalid("radial estimator needs at least two direction pairs"));
        }
        let d = poly.dim();
        let mut rng = rng.rng();
        let dirs = (0..pairs)
            .map(|_| loop {
                let z: DVector<f64> = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
                let n = z.norm();
                if n > 1e-12 {
                    break z / n;
                }
            })
            .collect();
        let (lo, hi) = poly.extents()?;
        let center = john.center().vector().clone();
        let reach = (0..d)
            .map(|j| (hi[j] - center[j]).abs().max((center[j] - lo[j]).abs()).powi(2))
            .sum::<f64>()
            .sqrt();
        Ok(Self {
            poly,
            center,
            shape: john.shape().clone(),
            dirs,
            reach,
        })
    }

    pub fn centroid(&self, r: f64) -> Result<CentroidEstimate> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::invalid("dilation radius must be finite and nonnegative"));
        }
        let d = self.poly.dim();
        let m = &self.shape + DMatrix::identity(d, d) * (r * r);
        let l = m
            .cholesky()
            .ok_or_else(|| Error::NonConvergence("rounding shape not positive definite".into()))?
            .l();
        let n = self.dirs.len();
        let mut xs: Vec<DVector<f64>> = Vec::with_capacity(n);
        let mut ys: Vec<f64> = Vec::with_capacity(n);
        for u in &self.dirs {
            let m_plus = &l * u;
            let tp = self.exit(&m_plus, r)?;
            let tm = self.exit(&(-&m_plus), r)?;
            xs.push(u * ((tp.powi(d as i32 + 1) - tm.powi(d as i32 + 1)) / 2.0));
            ys.push((tp.powi(d as i32) + tm.powi(d as i32)) / 2.0);
        }
        let xbar = xs.iter().fold(DVector::zeros(d), |a, x| a + x) / n as f64;
        let ybar = ys.iter().sum::<f64>() / n as f64;
        let ratio = &xbar / ybar;
        let k = d as f64 / (d as f64 + 1.0);
        let mu = &ratio * k;

        let mut cov = DMatrix::<f64>::zeros(d, d);
        for (x, &y) in xs.iter().zip(&ys) {
            let e = x - &ratio * y;
            cov += &e * e.transpose();
        }
        cov *= k * k / ((n as f64 - 1.0) * n as f64 * ybar * ybar);
        let cov_x = &l * cov * l.transpose();
        let point = &self.center + &l * mu;
        Ok(CentroidEstimate {
            point: Point::from_vector(point)?,
            std_error: (0..d).map(|j| cov_x[(j, j)].max(0.0).sqrt()).collect(),
            covariance: cov_x,
            samples: 2 * n,
        })
    }

    /// Largest `t` with `center + t m` in `K + rB`.
    fn exit(&self, m: &DVector<f64>, r: f64) -> Result<f64> {
        let rows = self.poly.rows();
        let c = self.center.as_slice();
        let ms = m.as_slice();
        let mut t_k = f64::INFINITY;
        for i in 0..rows.len() {
            let am = dot(rows.row(i), ms);
            if am < 0.0 {
                t_k = t_k.min(rows.slack(i, c).max(0.0) / -am);
            }
        }
        if !t_k.is_finite() {
            return Err(Error::LpUnbounded);
        }
        if r == 0.0 {
            return Ok(t_k);
        }
        let mn = m.norm();
        // dist(c + t m, K) - r is convex and increasing past t_k.
        let mut lo = t_k + r / mn;
        let mut hi = (self.reach + r) / mn;
        if hi <= lo {
            return Ok(lo);
        }
        let tol = 1e-12 * (self.reach + r);
        let mut t = lo;
        let mut x = vec![0.0; c.len()];
        for _ in 0..MAX_RAY_ITERS {
            for j in 0..x.len() {
                x[j] = c[j] + t * ms[j];
            }
            let p = self.poly.project_raw(&x)?;
            let diff: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a - b).collect();
            let dist = dot(&diff, &diff).sqrt();
            let f = dist - r;
            if f.abs() <= tol {
                return Ok(t);
            }
            if f < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let slope = if dist > 0.0 { dot(&diff, ms) / dist } else { 0.0 };
            let next = if slope > 0.0 { t - f / slope } else { f64::NAN };
            t = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-14 * hi {
                return Ok(lo);
            }
        }
        Ok(lo)
    }
}
