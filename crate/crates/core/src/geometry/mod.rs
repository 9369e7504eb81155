//! Numerical convex geometry over bounded H-polytopes.
//!
//! Everything here works on [`Polytope`] values: width and support via LP,
//! Euclidean projection, hit-and-run sampling of the dilation `K + rB`,
//! centroids and volumes of dilations, John ellipsoids, and the
//! discretized curvature path `r -> cg(K + rB)`.

pub(crate) mod curvature;
mod ellipsoid;
mod lp;
mod polytope;
mod radial;
pub(crate) mod sampling;
pub(crate) mod volume;

pub use curvature::{
    discretize_curvature_path, discretize_with, trace_curvature_path, CurvatureDiscretization, PathConfig, TracedPath,
};
pub use ellipsoid::{john_ellipsoid, Ellipsoid};
pub use radial::RadialCentroid;
pub(crate) use lp::separation_margin as lp_separation_margin;
pub use polytope::{Polytope, FEASIBILITY_TOL, FREEZE_SLACK};
pub use sampling::{
    centroid_dilated, member_dilated, sample_dilated, CentroidEstimate, DilatedSampler,
    SamplerConfig,
};
pub use volume::{volume_dilated, volume_fraction, VolumeEstimate};

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::ops::Deref;

use crate::error::{Error, Result};

/// A point of `R^d` with finite coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(DVector<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(coords))
    }

    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        if v.iter().all(|x| x.is_finite()) {
            Ok(Point(v))
        } else {
            Err(Error::invalid("point has non-finite coordinates"))
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Point(DVector::zeros(dim))
    }

    pub(crate) fn from_vector_unchecked(v: DVector<f64>) -> Self {
        Point(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (&self.0 - &other.0).norm()
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0.as_slice().to_vec()
    }
}

impl Deref for Point {
    type Target = DVector<f64>;
    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

/// A unit vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Direction(DVector<f64>);

pub const DIRECTION_TOL: f64 = 1e-9;

impl Direction {
    /// Normalizes `v`; fails on zero or non-finite input.
    pub fn normalize(v: DVector<f64>) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n <= f64::MIN_POSITIVE {
            return Err(Error::invalid("cannot normalize a zero or non-finite vector"));
        }
        Ok(Direction(v / n))
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::normalize(DVector::from_column_slice(v))
    }

    /// Accepts `v` only if it already has unit norm.
    pub fn new(v: DVector<f64>) -> Result<Self> {
        if v.iter().all(|x| x.is_finite()) && (v.norm() - 1.0).abs() <= DIRECTION_TOL {
            Ok(Direction(v))
        } else {
            Err(Error::invalid("direction must have unit norm"))
        }
    }

    pub fn axis(dim: usize, j: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[j] = 1.0;
        Direction(v)
    }

    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        loop {
            let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            if let Ok(d) = Self::normalize(v) {
                return d;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn negated(&self) -> Self {
        Direction(-&self.0)
    }
}

impl TryFrom<Vec<f64>> for Direction {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(DVector::from_vec(v))
    }
}

impl From<Direction> for Vec<f64> {
    fn from(d: Direction) -> Self {
        d.0.as_slice().to_vec()
    }
}

impl Deref for Direction {
    type Target = DVector<f64>;
    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

/// The closed halfspace `{w : <normal, w> >= offset}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Direction,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Direction, offset: f64) -> Self {
        Self { normal, offset }
    }

    /// The cut `{w : <w - p, v> >= 0}`.
    pub fn through(p: &Point, v: &Direction) -> Self {
        Self {
            offset: v.dot(p),
            normal: v.clone(),
        }
    }

    /// `<normal, x> - offset`; nonnegative inside.
    pub fn slack(&self, x: &DVector<f64>) -> f64 {
        self.normal.dot(x) - self.offset
    }
}
