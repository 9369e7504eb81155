//! Discretization of the curvature path `r -> cg(K + rB)`.
//!
//! The path starts at the centroid of `K` (`r = 0`) and tends to the Steiner
//! point as `r` grows. It is traced by radial centroid estimates sharing one
//! set of directions on a geometric radius grid, measured in the coordinates
//! of the John ellipsoid of `K`, and cut into pieces of equal length there.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{john_ellipsoid, Point, Polytope, RadialCentroid};
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Clone, Debug)]
pub struct PathConfig {
    /// Total number of radii, including `r = 0`.
    pub grid_points: usize,
    /// Smallest positive radius, relative to the body's scale.
    pub r_min_rel: f64,
    /// Largest radius, relative to the body's scale.
    pub r_max_rel: f64,
    pub john_eps: f64,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            grid_points: 40,
            r_min_rel: 1e-3,
            r_max_rel: 8.0,
            john_eps: 0.05,
        }
    }
}

/// Points `p_0, ..., p_k` along the curvature path with their radii.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureDiscretization {
    pub points: Vec<Point>,
    pub radii: Vec<f64>,
    pub source_dim: usize,
    pub pieces: usize,
}

/// Raw traced polyline before reparametrization.
#[derive(Clone, Debug)]
pub struct TracedPath {
    pub radii: Vec<f64>,
    /// Centroid estimates, projected onto `K`.
    pub points: Vec<Point>,
    /// Largest per-coordinate standard error at each radius.
    pub std_errors: Vec<f64>,
    /// Polyline length in John coordinates.
    pub transformed_length: f64,
    /// Length unit used for the radius grid.
    pub scale: f64,
    /// `A = M^{-1/2}` and centre `q` of the John map.
    pub john_map: DMatrix<f64>,
    pub john_center: DVector<f64>,
}

impl TracedPath {
    fn transformed(&self) -> Vec<DVector<f64>> {
        self.points
            .iter()
            .map(|p| &self.john_map * (p.vector() - &self.john_center))
            .collect()
    }
}

/// Traces `cg(K + rB)` on the radius grid. Returns `None` for a frozen body,
/// whose path is the single witness point.
pub fn trace_curvature_path(
    poly: &Polytope,
    n_per_point: usize,
    cfg: &PathConfig,
    rng: RngStream,
) -> Result<Option<TracedPath>> {
    if n_per_point == 0 {
        return Err(Error::invalid("n_per_point must be at least 1"));
    }
    if cfg.grid_points < 2 || !(cfg.r_min_rel > 0.0 && cfg.r_max_rel > cfg.r_min_rel) {
        return Err(Error::invalid("radius grid needs two points and 0 < r_min < r_max"));
    }
    if poly.is_frozen() {
        return Ok(None);
    }
    let d = poly.dim();
    let john = john_ellipsoid(poly, cfg.john_eps)?;
    let scale = d as f64 * (1.0 + cfg.john_eps) * john.semi_axes()[0];
    let radii = radius_grid(scale, cfg);
    // One set of directions for all radii keeps the traced path continuous.
    let radial = RadialCentroid::new(poly, &john, (n_per_point / 2).max(2), rng)?;

    let mut points = Vec::with_capacity(radii.len());
    let mut std_errors = Vec::with_capacity(radii.len());
    for &r in &radii {
        let est = radial.centroid(r)?;
        std_errors.push(est.max_std_error());
        let y = poly.project_raw(est.point.as_slice())?;
        points.push(Point::from_vector_unchecked(DVector::from_vec(y)));
    }
    let mut path = TracedPath {
        radii,
        points,
        std_errors,
        transformed_length: 0.0,
        scale,
        john_map: john.rounding_map(),
        john_center: john.center().vector().clone(),
    };
    let t = path.transformed();
    path.transformed_length = t.windows(2).map(|w| (&w[1] - &w[0]).norm()).sum();
    Ok(Some(path))
}

fn radius_grid(scale: f64, cfg: &PathConfig) -> Vec<f64> {
    let m = cfg.grid_points - 1;
    let ratio = cfg.r_max_rel / cfg.r_min_rel;
    let mut radii = vec![0.0];
    for j in 0..m {
        let f = if m == 1 { 0.0 } else { j as f64 / (m - 1) as f64 };
        radii.push(scale * cfg.r_min_rel * ratio.powf(f));
    }
    radii
}

/// `k + 1` points at equal arc-length spacing (in John coordinates) along
/// the traced curvature path of `K`.
pub fn discretize_curvature_path(
    poly: &Polytope,
    k: usize,
    n_per_point: usize,
    rng: RngStream,
) -> Result<CurvatureDiscretization> {
    discretize_with(poly, k, n_per_point, &PathConfig::default(), rng)
}

pub fn discretize_with(
    poly: &Polytope,
    k: usize,
    n_per_point: usize,
    cfg: &PathConfig,
    rng: RngStream,
) -> Result<CurvatureDiscretization> {
    if k == 0 {
        return Err(Error::invalid("curvature discretization needs k >= 1"));
    }
    let d = poly.dim();
    let Some(path) = trace_curvature_path(poly, n_per_point, cfg, rng)? else {
        return Ok(CurvatureDiscretization {
            points: vec![poly.witness().clone(); k + 1],
            radii: (0..=k).map(|i| i as f64).collect(),
            source_dim: d,
            pieces: k,
        });
    };
    let (points, radii) = reparametrize(&path, k);
    Ok(CurvatureDiscretization {
        points,
        radii,
        source_dim: d,
        pieces: k,
    })
}

/// Equal arc-length resampling. Falls back to equal index spacing when the
/// polyline has zero length.
pub(crate) fn reparametrize(path: &TracedPath, k: usize) -> (Vec<Point>, Vec<f64>) {
    let t = path.transformed();
    let n = t.len();
    let mut cum = vec![0.0; n];
    for j in 1..n {
        cum[j] = cum[j - 1] + (&t[j] - &t[j - 1]).norm();
    }
    let total = cum[n - 1];
    let mut points = Vec::with_capacity(k + 1);
    let mut radii = Vec::with_capacity(k + 1);
    for i in 0..=k {
        let (j, f) = if total > 0.0 {
            let s = total * i as f64 / k as f64;
            // First segment of positive length whose end reaches s.
            let mut j = 0;
            while j + 2 < n && (cum[j + 1] < s || cum[j + 1] == cum[j]) {
                j += 1;
            }
            let len = cum[j + 1] - cum[j];
            let f = if len > 0.0 { ((s - cum[j]) / len).clamp(0.0, 1.0) } else { 1.0 };
            (j, f)
        } else {
            let pos = (n - 1) as f64 * i as f64 / k as f64;
            let j = (pos.floor() as usize).min(n - 2);
            (j, pos - j as f64)
        };
        let a = path.points[j].vector();
        let b = path.points[j + 1].vector();
        points.push(Point::from_vector_unchecked(a + (b - a) * f));
        radii.push(path.radii[j] + (path.radii[j + 1] - path.radii[j]) * f);
    }
    radii[0] = 0.0;
    (points, radii)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::member_dilated;

    fn small_cfg() -> PathConfig {
        PathConfig {
            grid_points: 12,
            ..PathConfig::default()
        }
    }

    #[test]
    fn grid_shape() {
        let r = radius_grid(2.0, &PathConfig::default());
        assert_eq!(r.len(), 40);
        assert_eq!(r[0], 0.0);
        assert!((r[1] - 2e-3).abs() < 1e-15);
        assert!((r[39] - 16.0).abs() < 1e-9);
        assert!(r.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn symmetric_body_stays_at_center() {
        let k = Polytope::axis_box(&[-2.0, -1.0], &[2.0, 1.0]).unwrap();
        let d = discretize_with(&k, 4, 4000, &small_cfg(), RngStream::new(1, 0)).unwrap();
        assert_eq!(d.points.len(), 5);
        for p in &d.points {
            assert!(p.norm() < 0.1, "{p:?}");
        }
        assert!(d.radii.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn frozen_body_gives_witness() {
        let k = Polytope::cube(2, 1.0).unwrap();
        let v = crate::geometry::Direction::axis(2, 0);
        let p = Point::new(vec![0.2, 0.0]).unwrap();
        let k = k
            .intersect(crate::geometry::Halfspace::through(&p, &v))
            .unwrap()
            .intersect(crate::geometry::Halfspace::through(&p, &v.negated()))
            .unwrap();
        assert!(k.is_frozen());
        let d = discretize_curvature_path(&k, 3, 100, RngStream::new(0, 0)).unwrap();
        assert_eq!(d.points.len(), 4);
        assert!(d.points.iter().all(|q| (q[0] - 0.2).abs() < 1e-8));
    }

    #[test]
    fn triangle_path_runs_from_centroid_towards_steiner_point() {
        let k = Polytope::corner_simplex(2, 1.0).unwrap();
        let d = discretize_with(&k, 8, 6000, &small_cfg(), RngStream::new(3, 0)).unwrap();
        let p0 = &d.points[0];
        assert!((p0[0] - 1.0 / 3.0).abs() < 0.03 && (p0[1] - 1.0 / 3.0).abs() < 0.03);
        for p in &d.points {
            assert!(member_dilated(&k, 0.0, p, 1e-7).unwrap());
        }
        // Steiner point: vertices weighted by exterior angle, (3/8, 3/8).
        let last = &d.points[8];
        assert!((last[0] - 0.375).abs() < 0.03 && (last[1] - 0.375).abs() < 0.03, "{last:?}");
    }
}
