//! Hit-and-run sampling of `K + rB`.
//!
//! Each step draws a direction from a rounding ellipsoid, brackets the chord
//! with the outer polytope `{a_i . x >= b_i - r}` (which contains `K + rB`)
//! and then samples the chord uniformly by shrinkage: a proposal outside
//! `K + rB` pulls the bracket end in towards the current point. For `r = 0`
//! the bracket is the exact chord and no membership calls are needed.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::lp::dot;
use super::{john_ellipsoid, Point, Polytope, RadialCentroid};
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Clone, Debug)]
pub struct SamplerConfig {
    /// Burn-in steps per dimension from the witness.
    pub burn_in_per_dim: usize,
    /// Steps per dimension between retained samples.
    pub thin_per_dim: usize,
    /// Batches for batch-means standard errors.
    pub batches: usize,
    /// Proposals per step before giving up and staying put.
    pub max_shrink: usize,
    /// Accuracy of the John ellipsoid used for rounding.
    pub rounding_eps: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            burn_in_per_dim: 50,
            thin_per_dim: 1,
            batches: 32,
            max_shrink: 64,
            rounding_eps: 0.05,
        }
    }
}

/// Sample mean of `K + rB` with per-coordinate standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct CentroidEstimate {
    pub point: Point,
    pub std_error: Vec<f64>,
    /// Covariance of the estimate (diagonal when only marginals are known).
    pub covariance: DMatrix<f64>,
    pub samples: usize,
}

impl CentroidEstimate {
    /// Standard error of `<u, point>`.
    pub fn std_error_along(&self, u: &DVector<f64>) -> f64 {
        (u.transpose() * &self.covariance * u)[(0, 0)].max(0.0).sqrt()
    }

    /// Largest per-coordinate standard error.
    pub fn max_std_error(&self) -> f64 {
        self.std_error.iter().cloned().fold(0.0, f64::max)
    }
}

/// Hit-and-run sampler bound to one polytope and rounding shape.
#[derive(Clone, Debug)]
pub struct DilatedSampler<'a> {
    poly: &'a Polytope,
    shape: DMatrix<f64>,
    cfg: SamplerConfig,
}

impl<'a> DilatedSampler<'a> {
    /// Uses the John ellipsoid of `poly` for rounding, falling back to the
    /// identity if it cannot be computed.
    pub fn new(poly: &'a Polytope, cfg: SamplerConfig) -> Self {
        let d = poly.dim();
        let shape = match john_ellipsoid(poly, cfg.rounding_eps) {
            Ok(e) => e.shape().clone(),
            Err(_) => DMatrix::identity(d, d),
        };
        Self { poly, shape, cfg }
    }

    pub fn with_shape(poly: &'a Polytope, shape: DMatrix<f64>, cfg: SamplerConfig) -> Self {
        Self { poly, shape, cfg }
    }

    pub fn polytope(&self) -> &Polytope {
        self.poly
    }

    fn direction_factor(&self, r: f64) -> DMatrix<f64> {
        let d = self.poly.dim();
        let m = &self.shape + DMatrix::identity(d, d) * (r * r);
        match m.clone().cholesky() {
            Some(ch) => ch.l(),
            None => DMatrix::identity(d, d),
        }
    }

    /// `n` approximately uniform points of `K + rB`, flattened row-major.
    pub(crate) fn sample_flat(&self, r: f64, n: usize, stream: RngStream) -> Result<Vec<f64>> {
        check_args(r, n)?;
        let d = self.poly.dim();
        let witness = self.poly.witness().as_slice().to_vec();
        if self.poly.is_frozen() && r == 0.0 {
            return Ok(witness.repeat(n));
        }
        let mut rng = stream.rng();
        let factor = self.direction_factor(r);
        let mut chain = Chain {
            poly: self.poly,
            r,
            x: witness,
            factor,
            max_shrink: self.cfg.max_shrink,
            u: vec![0.0; d],
            y: vec![0.0; d],
            z: vec![0.0; d],
        };
        for _ in 0..self.cfg.burn_in_per_dim * d {
            chain.step(&mut rng)?;
        }
        let thin = (self.cfg.thin_per_dim * d).max(1);
        let mut out = Vec::with_capacity(n * d);
        for _ in 0..n {
            for _ in 0..thin {
                chain.step(&mut rng)?;
            }
            out.extend_from_slice(&chain.x);
        }
        Ok(out)
    }

    pub fn sample(&self, r: f64, n: usize, stream: RngStream) -> Result<Vec<Point>> {
        let d = self.poly.dim();
        let flat = self.sample_flat(r, n, stream)?;
        Ok(flat
            .chunks(d)
            .map(|c| Point::from_vector_unchecked(DVector::from_column_slice(c)))
            .collect())
    }

    pub fn centroid(&self, r: f64, n: usize, stream: RngStream) -> Result<CentroidEstimate> {
        let d = self.poly.dim();
        let flat = self.sample_flat(r, n, stream)?;
        let (mean, se) = batch_means(&flat, d, self.cfg.batches);
        Ok(CentroidEstimate {
            point: Point::from_vector(DVector::from_vec(mean))?,
            covariance: DMatrix::from_diagonal(&DVector::from_iterator(d, se.iter().map(|s| s * s))),
            std_error: se,
            samples: n,
        })
    }
}

fn check_args(r: f64, n: usize) -> Result<()> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::invalid("dilation radius must be finite and nonnegative"));
    }
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    Ok(())
}

struct Chain<'p> {
    poly: &'p Polytope,
    r: f64,
    x: Vec<f64>,
    factor: DMatrix<f64>,
    max_shrink: usize,
    u: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
}

impl Chain<'_> {
    fn step(&mut self, rng: &mut ChaCha8Rng) -> Result<()> {
        let d = self.x.len();
        for zj in self.z.iter_mut() {
            *zj = rng.sample(StandardNormal);
        }
        let mut norm = 0.0;
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += self.factor[(i, j)] * self.z[j];
            }
            self.u[i] = acc;
            norm += acc * acc;
        }
        let norm = norm.sqrt();
        if !(norm > 0.0) {
            return Ok(());
        }
        self.u.iter_mut().for_each(|v| *v /= norm);

        let rows = self.poly.rows();
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..rows.len() {
            let a = rows.row(i);
            let au = dot(a, &self.u);
            let c = (dot(a, &self.x) - rows.b[i] + self.r).max(0.0);
            if au > 1e-300 {
                lo = lo.max(-c / au);
            } else if au < -1e-300 {
                hi = hi.min(c / -au);
            }
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::LpUnbounded);
        }
        lo = lo.min(0.0);
        hi = hi.max(0.0);

        if self.r == 0.0 {
            let t = lo + rng.random::<f64>() * (hi - lo);
            for j in 0..d {
                self.x[j] += t * self.u[j];
            }
            return Ok(());
        }
        for _ in 0..self.max_shrink {
            let t = lo + rng.random::<f64>() * (hi - lo);
            for j in 0..d {
                self.y[j] = self.x[j] + t * self.u[j];
            }
            if in_dilation(self.poly, self.r, &self.y)? {
                std::mem::swap(&mut self.x, &mut self.y);
                return Ok(());
            }
            if t < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
        }
        Ok(())
    }
}

/// `dist(y, K) <= r`, using the cheap slack bounds before projecting.
pub(crate) fn in_dilation(poly: &Polytope, r: f64, y: &[f64]) -> Result<bool> {
    let rows = poly.rows();
    let mut worst = 0.0f64;
    for i in 0..rows.len() {
        worst = worst.max(-rows.slack(i, y));
        if worst > r {
            return Ok(false);
        }
    }
    if worst == 0.0 {
        return Ok(true);
    }
    Ok(poly.distance(y)? <= r)
}

/// Mean and batch-means standard error per coordinate.
pub(crate) fn batch_means(flat: &[f64], d: usize, batches: usize) -> (Vec<f64>, Vec<f64>) {
    let n = flat.len() / d;
    let mut mean = vec![0.0; d];
    for row in flat.chunks(d) {
        for j in 0..d {
            mean[j] += row[j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let nb = batches.min(n / 2);
    let mut se = vec![0.0; d];
    if nb >= 2 {
        let size = n / nb;
        let mut bm = vec![vec![0.0; d]; nb];
        for (b, bmean) in bm.iter_mut().enumerate() {
            for row in flat[b * size * d..(b + 1) * size * d].chunks(d) {
                for j in 0..d {
                    bmean[j] += row[j] / size as f64;
                }
            }
        }
        for j in 0..d {
            let mu: f64 = bm.iter().map(|b| b[j]).sum::<f64>() / nb as f64;
            let var: f64 =
                bm.iter().map(|b| (b[j] - mu).powi(2)).sum::<f64>() / (nb as f64 - 1.0);
            se[j] = (var / nb as f64).sqrt();
        }
    } else if n >= 2 {
        for j in 0..d {
            let var: f64 = flat.chunks(d).map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>()
                / (n as f64 - 1.0);
            se[j] = (var / n as f64).sqrt();
        }
    }
    (mean, se)
}

/// True iff `|x - project(K, x)| <= r + tol`.
pub fn member_dilated(poly: &Polytope, r: f64, x: &Point, tol: f64) -> Result<bool> {
    if !(r >= 0.0) {
        return Err(Error::invalid("dilation radius must be nonnegative"));
    }
    let y = poly.project(x, tol)?;
    Ok(x.distance(&y) <= r + tol)
}

/// `n` approximately uniform points of `K + rB`.
pub fn sample_dilated(poly: &Polytope, r: f64, n: usize, rng: RngStream) -> Result<Vec<Point>> {
    DilatedSampler::new(poly, SamplerConfig::default()).sample(r, n, rng)
}

/// Monte Carlo estimate of `cg(K + rB)` from `n` rays (`n / 2` antithetic
/// direction pairs) of the radial estimator. A frozen body returns its
/// witness with zero error.
pub fn centroid_dilated(
    poly: &Polytope,
    r: f64,
    n: usize,
    rng: RngStream,
) -> Result<CentroidEstimate> {
    check_args(r, n)?;
    if poly.is_frozen() {
        return Ok(CentroidEstimate {
            point: poly.witness().clone(),
            std_error: vec![0.0; poly.dim()],
            covariance: DMatrix::zeros(poly.dim(), poly.dim()),
            samples: n,
        });
    }
    let john = john_ellipsoid(poly, SamplerConfig::default().rounding_eps)?;
    RadialCentroid::new(poly, &john, (n / 2).max(2), rng)?.centroid(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn member_dilated_examples() {
        let k = Polytope::cube(2, 1.0).unwrap();
        assert!(member_dilated(&k, 0.5, &pt(&[1.4, 0.0]), 1e-9).unwrap());
        assert!(!member_dilated(&k, 0.5, &pt(&[1.6, 0.0]), 1e-9).unwrap());
        // corner distance sqrt(2)*0.4 = 0.566 > 0.5
        assert!(!member_dilated(&k, 0.5, &pt(&[1.4, 1.4]), 1e-9).unwrap());
        assert!(member_dilated(&k, 0.6, &pt(&[1.4, 1.4]), 1e-9).unwrap());
    }

    #[test]
    fn samples_stay_in_dilation() {
        let k = Polytope::corner_simplex(2, 1.0).unwrap();
        for r in [0.0, 0.3] {
            let pts = sample_dilated(&k, r, 500, RngStream::new(1, 0)).unwrap();
            for p in &pts {
                assert!(member_dilated(&k, r, p, 1e-9).unwrap());
            }
        }
    }

    #[test]
    fn cube_mean_near_origin() {
        let k = Polytope::cube(2, 1.0).unwrap();
        for r in [0.0, 1.0] {
            let c = centroid_dilated(&k, r, 10_000, RngStream::new(2, 0)).unwrap();
            assert!(c.point.norm() < 0.05, "r={r} mean {:?}", c.point);
        }
    }

    #[test]
    fn triangle_mean_is_centroid() {
        let k = Polytope::corner_simplex(2, 1.0).unwrap();
        let c = centroid_dilated(&k, 0.0, 10_000, RngStream::new(5, 0)).unwrap();
        assert!((c.point[0] - 1.0 / 3.0).abs() < 0.05);
        assert!((c.point[1] - 1.0 / 3.0).abs() < 0.05);
    }

    #[test]
    fn deterministic_given_stream() {
        let k = Polytope::corner_simplex(2, 1.0).unwrap();
        let a = centroid_dilated(&k, 0.2, 300, RngStream::new(9, 4)).unwrap();
        let b = centroid_dilated(&k, 0.2, 300, RngStream::new(9, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn batch_means_constant_input() {
        let flat = vec![1.0, 2.0].repeat(64);
        let (m, se) = batch_means(&flat, 2, 8);
        assert_eq!(m, vec![1.0, 2.0]);
        assert_eq!(se, vec![0.0, 0.0]);
    }
}
