//! Rejection-sampling volumes of dilations, for desk-scale checks (`d <= 4`).

use rand::Rng;

use super::sampling::in_dilation;
use super::Polytope;
use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const MAX_VOLUME_DIM: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    /// Standard error divided by the estimate (infinite if the estimate is 0).
    pub rel_std_error: f64,
    pub std_error: f64,
    /// Draws that landed in the dilation.
    pub samples: usize,
}

struct BoxSampler {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxSampler {
    fn around(poly: &Polytope, r: f64) -> Result<Self> {
        let d = poly.dim();
        if d > MAX_VOLUME_DIM {
            return Err(Error::DimensionTooLarge {
                dim: d,
                max: MAX_VOLUME_DIM,
            });
        }
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::invalid("dilation radius must be finite and nonnegative"));
        }
        let (mut lo, mut hi) = poly.extents()?;
        for j in 0..d {
            lo[j] -= r;
            hi[j] += r;
        }
        Ok(Self { lo, hi })
    }

    fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    fn draw<R: Rng>(&self, rng: &mut R, x: &mut [f64]) {
        for j in 0..x.len() {
            x[j] = self.lo[j] + rng.random::<f64>() * (self.hi[j] - self.lo[j]);
        }
    }
}

fn estimate(hits: usize, n: usize, scale: f64) -> VolumeEstimate {
    let p = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    VolumeEstimate {
        value: p * scale,
        rel_std_error: if p > 0.0 { se / p } else { f64::INFINITY },
        std_error: se * scale,
        samples: n,
    }
}

/// Monte Carlo estimate of `Vol(K + rB)` from `n` uniform draws in a box
/// enclosing the dilation.
pub fn volume_dilated(poly: &Polytope, r: f64, n: usize, rng: RngStream) -> Result<VolumeEstimate> {
    let sampler = BoxSampler::around(poly, r)?;
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let mut rng = rng.rng();
    let mut x = vec![0.0; poly.dim()];
    let mut hits = 0;
    for _ in 0..n {
        sampler.draw(&mut rng, &mut x);
        if in_dilation(poly, r, &x)? {
            hits += 1;
        }
    }
    Ok(estimate(hits, n, sampler.volume()))
}

/// Fraction of `Vol(K + rB)` on which `keep` holds, with its binomial
/// relative standard error. Draws until `n` points of the dilation were seen
/// or `64 n` box draws were spent.
pub fn volume_fraction<F>(
    poly: &Polytope,
    r: f64,
    keep: F,
    n: usize,
    rng: RngStream,
) -> Result<VolumeEstimate>
where
    F: Fn(&[f64]) -> bool,
{
    let sampler = BoxSampler::around(poly, r)?;
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let mut rng = rng.rng();
    let mut x = vec![0.0; poly.dim()];
    let (mut inside, mut kept) = (0usize, 0usize);
    for _ in 0..64 * n {
        sampler.draw(&mut rng, &mut x);
        if in_dilation(poly, r, &x)? {
            inside += 1;
            if keep(&x) {
                kept += 1;
            }
            if inside == n {
                break;
            }
        }
    }
    if inside == 0 {
        return Err(Error::NonConvergence("no draws landed in the dilation".into()));
    }
    Ok(estimate(kept, inside, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_volume() {
        let k = Polytope::cube(2, 1.0).unwrap();
        let v = volume_dilated(&k, 0.0, 20_000, RngStream::new(1, 0)).unwrap();
        assert!((v.value - 4.0).abs() < 0.08);
    }

    #[test]
    fn dilated_cube_volume() {
        // Grid quadrature of the rounded square as an independent check.
        let k = Polytope::cube(2, 1.0).unwrap();
        let h: f64 = 0.005;
        let mut grid = 0.0;
        let mut y = -2.0 + h / 2.0;
        while y < 2.0 {
            let mut x = -2.0 + h / 2.0;
            while x < 2.0 {
                let dx = (x.abs() - 1.0).max(0.0);
                let dy = (y.abs() - 1.0).max(0.0);
                if dx * dx + dy * dy <= 1.0 {
                    grid += h * h;
                }
                x += h;
            }
            y += h;
        }
        assert!((grid - (12.0 + std::f64::consts::PI)).abs() < 0.01);
        let v = volume_dilated(&k, 1.0, 40_000, RngStream::new(2, 0)).unwrap();
        assert!((v.value - grid).abs() / grid < 0.02, "{}", v.value);
    }

    #[test]
    fn thin_slab_tends_to_disc() {
        let k = Polytope::axis_box(&[-1e-4, -1e-4], &[1e-4, 1e-4]).unwrap();
        let v = volume_dilated(&k, 1.0, 40_000, RngStream::new(3, 0)).unwrap();
        assert!((v.value - std::f64::consts::PI).abs() / std::f64::consts::PI < 0.05);
    }

    #[test]
    fn rejects_high_dimension() {
        let k = Polytope::cube(5, 1.0).unwrap();
        assert!(matches!(
            volume_dilated(&k, 0.0, 10, RngStream::new(0, 0)),
            Err(Error::DimensionTooLarge { dim: 5, max: 4 })
        ));
    }

    #[test]
    fn half_cube_fraction() {
        let k = Polytope::cube(2, 1.0).unwrap();
        let f = volume_fraction(&k, 0.5, |x| x[0] >= 0.0, 20_000, RngStream::new(4, 0)).unwrap();
        assert!((f.value - 0.5).abs() < 0.02);
    }
}
