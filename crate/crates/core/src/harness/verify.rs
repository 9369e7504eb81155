//! Monte Carlo checks of the geometric facts the learners rely on, run on
//! random polytopes at small dimension.
//!
//! Every check produces a margin `allowed - observed`, where `allowed`
//! already includes three standard errors of the Monte Carlo estimates
//! involved. A negative margin is a violation.

use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::curvature::reparametrize;
use crate::geometry::sampling::in_dilation;
use crate::geometry::{
    john_ellipsoid, trace_curvature_path, volume_fraction, Direction, Halfspace, PathConfig, Polytope,
    RadialCentroid,
};
use crate::rng::RngStream;

const E: f64 = std::f64::consts::E;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Small,
    Full,
}

impl FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Budget::Small),
            "full" => Ok(Budget::Full),
            _ => Err(Error::config("budget", format!("expected small or full, got {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub instances: usize,
    /// Draws inside the dilation per volume fraction.
    pub volume_samples: usize,
    /// Rays per centroid estimate.
    pub centroid_samples: usize,
    pub probes: usize,
}

impl Budget {
    pub fn config(self) -> VerifyConfig {
        match self {
            Budget::Small => VerifyConfig {
                instances: 6,
                volume_samples: 20_000,
                centroid_samples: 2048,
                probes: 20,
            },
            Budget::Full => VerifyConfig {
                instances: 50,
                volume_samples: 100_000,
                centroid_samples: 4096,
                probes: 100,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma {
    Grunbaum,
    Conelem,
    VolumeReduction,
    Pathlen,
    Discretization,
}

impl Lemma {
    pub const ALL: [Lemma; 5] = [
        Lemma::Grunbaum,
        Lemma::Conelem,
        Lemma::VolumeReduction,
        Lemma::Pathlen,
        Lemma::Discretization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Lemma::Grunbaum => "grunbaum",
            Lemma::Conelem => "conelem",
            Lemma::VolumeReduction => "volume-reduction",
            Lemma::Pathlen => "pathlen",
            Lemma::Discretization => "discretization",
        }
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaResult {
    pub lemma: Lemma,
    pub dim: usize,
    pub checks: usize,
    pub violations: usize,
    /// Smallest margin seen; negative iff some check failed.
    pub worst_margin: f64,
}

impl LemmaResult {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn collect(lemma: Lemma, dim: usize, margins: &[f64]) -> Self {
        Self {
            lemma,
            dim,
            checks: margins.len(),
            violations: margins.iter().filter(|m| !(**m >= 0.0)).count(),
            worst_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

/// Random polytope containing the origin: `d + 2 ..= 3d + 3` halfspaces
/// `<n, x> >= -o` with random unit normals and offsets in `[0.05, 1]`,
/// inside the unit box.
pub fn random_polytope(dim: usize, rng: RngStream) -> Result<Polytope> {
    let mut g = rng.rng();
    let m = g.random_range(dim + 2..=3 * dim + 3);
    let hs = (0..m)
        .map(|_| {
            let n = Direction::random(dim, &mut g);
            Halfspace::new(n, -(0.05 + 0.95 * g.random::<f64>()))
        })
        .collect();
    Polytope::new(dim, hs, 1.0)
}

/// Fraction of `K + rB` lying in `S + rB`, for `S` a subset of `K`.
fn dilated_fraction(k: &Polytope, s: &Polytope, r: f64, n: usize, rng: RngStream) -> Result<(f64, f64)> {
    let err = RefCell::new(None);
    let est = volume_fraction(
        k,
        r,
        |y| match in_dilation(s, r, y) {
            Ok(b) => b,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                false
            }
        },
        n,
        rng,
    )?;
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok((est.value, est.std_error))
}

fn grunbaum(k: &Polytope, cfg: &VerifyConfig, rng: RngStream) -> Result<Vec<f64>> {
    let d = k.dim();
    let john = john_ellipsoid(k, 0.05)?;
    let c = RadialCentroid::new(k, &john, cfg.centroid_samples / 2, rng.substream(0))?.centroid(0.0)?;
    let u = Direction::random(d, &mut rng.substream(1).rng());
    let w = k.width(&u)?;
    let t = c.std_error_along(u.vector());
    let cut = Halfspace::new(u.clone(), u.vector().dot(c.point.vector()));
    let upper = k.intersect(cut)?;
    let (f, se) = dilated_fraction(k, &upper, 0.0, cfg.volume_samples, rng.substream(2))?;
    // The centroid error t moves the guarantee by at most 2 t (d + 1) / width.
    let mc = se + 2.0 * t * (d as f64 + 1.0) / w;
    let floor = 1.0 / E - 0.05;
    Ok(vec![f.min(1.0 - f) - floor + 3.0 * mc])
}

fn conelem(k: &Polytope, cfg: &VerifyConfig, rng: RngStream) -> Result<Vec<f64>> {
    let d = k.dim();
    let mut g = rng.substream(0).rng();
    let u = Direction::random(d, &mut g);
    let (lo, _) = k.support_min(u.vector())?;
    let w = k.width(&u)?;
    let b = lo + w * (0.1 + 0.8 * g.random::<f64>());
    let r = w / d as f64 * (0.1 + 0.4 * g.random::<f64>());
    let h = 0.01 * w;
    let slab = k.intersect_all([
        Halfspace::new(u.clone(), b - h / 2.0),
        Halfspace::new(u.negated(), -(b + h / 2.0)),
    ])?;
    let (f, se) = dilated_fraction(k, &slab, r, cfg.volume_samples, rng.substream(1))?;
    Ok(vec![2.0 * r * d as f64 / w - f + 3.0 * se])
}

fn volume_reduction(k: &Polytope, cfg: &VerifyConfig, rng: RngStream) -> Result<Vec<f64>> {
    let d = k.dim();
    let mut g = rng.substream(0).rng();
    let u = Direction::random(d, &mut g);
    let w = k.width(&u)?;
    let limit = w / (16.0 * E * d as f64);
    let r = limit * g.random::<f64>();
    let b = limit * (2.0 * g.random::<f64>() - 1.0);
    let john = john_ellipsoid(k, 0.05)?;
    let c = RadialCentroid::new(k, &john, cfg.centroid_samples / 2, rng.substream(1))?.centroid(r)?;
    let plus = k.intersect(Halfspace::new(u.clone(), u.vector().dot(c.point.vector()) - b))?;
    let (f, se) = dilated_fraction(k, &plus, r, cfg.volume_samples, rng.substream(2))?;
    Ok(vec![0.9 - f + 3.0 * se])
}

/// Path length and discretization checks share one traced path.
fn path_checks(k: &Polytope, cfg: &VerifyConfig, rng: RngStream) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = k.dim();
    let d3 = (d * d * d) as f64;
    let Some(path) = trace_curvature_path(k, cfg.centroid_samples, &PathConfig::default(), rng.substream(0))?
    else {
        return Ok((vec![4.0 * d3], Vec::new()));
    };
    let length = vec![4.0 * d3 - path.transformed_length];

    let pieces = 16 * d * d * d;
    let (points, _) = reparametrize(&path, pieces);
    let pts: Vec<&DVector<f64>> = points.iter().map(|p| p.vector()).collect();
    let john = john_ellipsoid(k, 0.05)?;
    // Independent directions, so probe estimates do not share the path's noise.
    let probe = RadialCentroid::new(k, &john, cfg.centroid_samples / 2, rng.substream(1))?;
    let mut g = rng.substream(2).rng();
    let mut margins = Vec::with_capacity(cfg.probes);
    for _ in 0..cfg.probes {
        let r = if g.random::<f64>() < 0.1 {
            0.0
        } else {
            path.scale * 10f64.powf(-4.0 + 5.5 * g.random::<f64>())
        };
        let u = Direction::random(d, &mut g);
        let rho = probe.centroid(r)?;
        let w = k.width(&u)?;
        let gap = pts
            .iter()
            .map(|p| (rho.point.vector() - *p).dot(u.vector()).abs())
            .fold(f64::INFINITY, f64::min);
        let se = rho.std_error_along(u.vector());
        margins.push(4.0 * d3 / pieces as f64 * w + 3.0 * se - gap);
    }
    Ok((length, margins))
}

/// Runs every check on `cfg.instances` random polytopes in dimension `dim`.
pub fn run_lemma_suite(dim: usize, cfg: &VerifyConfig, rng: RngStream) -> Result<Vec<LemmaResult>> {
    if !(2..=crate::geometry::volume::MAX_VOLUME_DIM).contains(&dim) {
        return Err(Error::config("dim", "the lemma suite runs in dimensions 2 to 4"));
    }
    if cfg.instances == 0 || cfg.volume_samples == 0 || cfg.centroid_samples < 4 {
        return Err(Error::config("budget", "instances, samples and rays must be positive"));
    }
    let mut margins: [Vec<f64>; 5] = Default::default();
    for i in 0..cfg.instances {
        let inst = rng.substream(i as u64);
        let k = random_polytope(dim, inst.substream(0))?;
        margins[0].extend(grunbaum(&k, cfg, inst.substream(1))?);
        margins[1].extend(conelem(&k, cfg, inst.substream(2))?);
        margins[2].extend(volume_reduction(&k, cfg, inst.substream(3))?);
        let (len, disc) = path_checks(&k, cfg, inst.substream(4))?;
        margins[3].extend(len);
        margins[4].extend(disc);
    }
    Ok(Lemma::ALL
        .iter()
        .zip(&margins)
        .map(|(&l, m)| LemmaResult::collect(l, dim, m))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_polytopes_contain_origin() {
        for s in 0..20 {
            let k = random_polytope(3, RngStream::new(s, 0)).unwrap();
            assert!(k.contains(&DVector::zeros(3), 0.0));
            assert!(!k.is_frozen());
        }
    }

    #[test]
    fn small_suite_runs() {
        let cfg = VerifyConfig {
            instances: 2,
            volume_samples: 4000,
            centroid_samples: 512,
            probes: 5,
        };
        let res = run_lemma_suite(2, &cfg, RngStream::new(9, 0)).unwrap();
        assert_eq!(res.len(), 5);
        for r in &res {
            assert!(r.checks > 0, "{r:?}");
        }
    }

    #[test]
    fn budget_parses() {
        assert_eq!("full".parse::<Budget>().unwrap(), Budget::Full);
        assert!("huge".parse::<Budget>().is_err());
    }
}
