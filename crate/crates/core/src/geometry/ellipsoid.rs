//! Ellipsoids and the maximum-volume inscribed (John) ellipsoid.
//!
//! The inscribed ellipsoid is parametrized as `E = {B z + c : |z| <= 1}` with
//! `B` symmetric positive definite. It lies in `{a . x >= b}` iff
//! `|B a| <= a . c - b`, a second-order cone constraint, so the problem
//! `max log det B` is solved by a path-following barrier method with the
//! Lorentz-cone barrier `-log((a.c - b)^2 - |B a|^2)` per facet.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{Direction, Point, Polytope};
use crate::error::{Error, Result};

/// `{x : (x - q)^T M^{-1} (x - q) <= 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ellipsoid {
    center: Point,
    shape: DMatrix<f64>,
}

impl Ellipsoid {
    pub fn new(center: Point, shape: DMatrix<f64>) -> Result<Self> {
        let d = center.dim();
        if shape.nrows() != d || shape.ncols() != d {
            return Err(Error::invalid("ellipsoid shape has wrong size"));
        }
        let asym = (&shape - shape.transpose()).amax();
        if asym > 1e-9 * (1.0 + shape.amax()) {
            return Err(Error::invalid("ellipsoid shape must be symmetric"));
        }
        let eig = SymmetricEigen::new(shape.clone());
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::invalid("ellipsoid shape must be positive definite"));
        }
        Ok(Self { center, shape })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    fn eigen(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        SymmetricEigen::new(self.shape.clone())
    }

    fn shape_power(&self, power: f64) -> DMatrix<f64> {
        let eig = self.eigen();
        let diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.powf(power)));
        &eig.eigenvectors * diag * eig.eigenvectors.transpose()
    }

    /// `M^{1/2}`.
    pub fn sqrt_shape(&self) -> DMatrix<f64> {
        self.shape_power(0.5)
    }

    /// The rounding map `A = M^{-1/2}`; `A(E - q)` is the unit ball.
    pub fn rounding_map(&self) -> DMatrix<f64> {
        self.shape_power(-0.5)
    }

    /// Semi-axis lengths, largest first.
    pub fn semi_axes(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.eigen().eigenvalues.iter().map(|l| l.sqrt()).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    /// `(semi-axis length, unit axis)` pairs, largest first.
    pub fn axes(&self) -> Vec<(f64, Direction)> {
        let eig = self.eigen();
        let mut v: Vec<(f64, Direction)> = (0..self.dim())
            .map(|i| {
                let dir = Direction::normalize(eig.eigenvectors.column(i).into_owned())
                    .unwrap_or_else(|_| Direction::axis(self.dim(), i));
                (eig.eigenvalues[i].max(0.0).sqrt(), dir)
            })
            .collect();
        v.sort_by(|a, b| b.0.total_cmp(&a.0));
        v
    }

    /// Unit vector along the longest semi-axis.
    pub fn longest_axis(&self) -> Direction {
        let eig = self.eigen();
        let (imax, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &l)| if l > acc.1 { (i, l) } else { acc });
        let v = eig.eigenvectors.column(imax).into_owned();
        Direction::normalize(v).unwrap_or_else(|_| Direction::axis(self.dim(), 0))
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let diff = x - self.center.vector();
        match self.shape.clone().cholesky() {
            Some(ch) => diff.dot(&ch.solve(&diff)) <= 1.0 + tol,
            None => false,
        }
    }

    /// `min_{x in E} <a, x>`.
    pub fn support_min(&self, a: &DVector<f64>) -> f64 {
        a.dot(self.center.vector()) - a.dot(&(&self.shape * a)).max(0.0).sqrt()
    }

    /// The concentric copy scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Ellipsoid {
        Ellipsoid {
            center: self.center.clone(),
            shape: &self.shape * (factor * factor),
        }
    }
}

/// Index pairs `(j, k)`, `j <= k`, spanning symmetric matrices.
fn sym_basis(d: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(d * (d + 1) / 2);
    for j in 0..d {
        for k in j..d {
            v.push((j, k));
        }
    }
    v
}

struct Barrier<'a> {
    d: usize,
    basis: Vec<(usize, usize)>,
    rows: &'a [f64],
    /// Offsets shifted so that the witness is the origin.
    offsets: Vec<f64>,
}

impl<'a> Barrier<'a> {
    fn unpack(&self, x: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
        let d = self.d;
        let p = self.basis.len();
        let mut b = DMatrix::zeros(d, d);
        for (alpha, &(j, k)) in self.basis.iter().enumerate() {
            b[(j, k)] = x[alpha];
            b[(k, j)] = x[alpha];
        }
        let c = x.rows(p, d).into_owned();
        (b, c)
    }

    /// Barrier value, or `None` outside the domain.
    fn value(&self, x: &DVector<f64>, t: f64) -> Option<f64> {
        let d = self.d;
        let (b, c) = self.unpack(x);
        let chol = b.clone().cholesky()?;
        let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let mut f = -t * logdet;
        for (i, &off) in self.offsets.iter().enumerate() {
            let a = DVector::from_column_slice(&self.rows[i * d..(i + 1) * d]);
            let s = a.dot(&c) - off;
            let w = &b * &a;
            let h = s * s - w.norm_squared();
            if !(s > 0.0 && h > 0.0) {
                return None;
            }
            f -= h.ln();
        }
        Some(f)
    }

    fn grad_hess(&self, x: &DVector<f64>, t: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let d = self.d;
        let p = self.basis.len();
        let n = p + d;
        let (b, c) = self.unpack(x);
        let binv = b.clone().cholesky()?.inverse();
        let mut g = DVector::zeros(n);
        let mut hmat = DMatrix::zeros(n, n);

        // -t log det B
        let pairs = |alpha: usize| -> Vec<(usize, usize)> {
            let (j, k) = self.basis[alpha];
            if j == k {
                vec![(j, j)]
            } else {
                vec![(j, k), (k, j)]
            }
        };
        let all_pairs: Vec<Vec<(usize, usize)>> = (0..p).map(pairs).collect();
        for alpha in 0..p {
            let tr: f64 = all_pairs[alpha].iter().map(|&(j, k)| binv[(k, j)]).sum();
            g[alpha] -= t * tr;
            for beta in alpha..p {
                let mut acc = 0.0;
                for &(j, k) in &all_pairs[alpha] {
                    for &(l, m) in &all_pairs[beta] {
                        acc += binv[(m, j)] * binv[(k, l)];
                    }
                }
                hmat[(alpha, beta)] += t * acc;
                if beta != alpha {
                    hmat[(beta, alpha)] += t * acc;
                }
            }
        }

        // -log(s^2 - |B a|^2) per facet. With J the Jacobian of B a in the
        // entries of B, the sum of 2 J^T J / h over facets only depends on
        // the weighted moment sum of 2 a a^T / h, accumulated in `mw`.
        let mut mw = DMatrix::zeros(d, d);
        let mut dh = DVector::zeros(n);
        for (i, &off) in self.offsets.iter().enumerate() {
            let a = DVector::from_column_slice(&self.rows[i * d..(i + 1) * d]);
            let s = a.dot(&c) - off;
            let w = &b * &a;
            let h = s * s - w.norm_squared();
            if !(s > 0.0 && h > 0.0) {
                return None;
            }
            // dh = 2 s sigma - 2 J^T w
            for (alpha, &(j, k)) in self.basis.iter().enumerate() {
                dh[alpha] = if j == k {
                    -2.0 * a[j] * w[j]
                } else {
                    -2.0 * (a[k] * w[j] + a[j] * w[k])
                };
            }
            for j in 0..d {
                dh[p + j] = 2.0 * s * a[j];
            }
            g -= &dh / h;
            // Hess = dh dh^T / h^2 - d2h / h,  d2h = 2 sigma sigma^T - 2 J^T J
            hmat.ger(1.0 / (h * h), &dh, &dh, 1.0);
            mw.ger(2.0 / h, &a, &a, 1.0);
        }
        let kd = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
        for (alpha, &(j, k)) in self.basis.iter().enumerate() {
            for (beta, &(l, m)) in self.basis.iter().enumerate() {
                let mut v = kd(j, l) * mw[(k, m)] + kd(j, m) * mw[(k, l)] + kd(k, l) * mw[(j, m)] + kd(k, m) * mw[(j, l)];
                if j == k {
                    v *= 0.5;
                }
                if l == m {
                    v *= 0.5;
                }
                hmat[(alpha, beta)] += v;
            }
        }
        for j in 0..d {
            for k in 0..d {
                hmat[(p + j, p + k)] -= mw[(j, k)];
            }
        }
        Some((g, hmat))
    }
}

/// `(1 + eps)`-approximate maximum-volume ellipsoid inscribed in `poly`.
///
/// The barrier path is followed until the log-det gap bound `2m/t` falls
/// below `eps^2 / 10`.
pub fn john_ellipsoid(poly: &Polytope, eps: f64) -> Result<Ellipsoid> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid("eps must lie in (0, 1)"));
    }
    if poly.is_frozen() {
        return Err(Error::NonConvergence(
            "body is numerically a point; no inscribed ellipsoid".into(),
        ));
    }
    let d = poly.dim();
    let rows = poly.rows();
    let witness = poly.witness().vector().clone();
    let offsets: Vec<f64> = (0..rows.len())
        .map(|i| rows.b[i] - witness.dot(&DVector::from_column_slice(rows.row(i))))
        .collect();
    let m = offsets.len();
    let barrier = Barrier {
        d,
        basis: sym_basis(d),
        rows: rows.a,
        offsets,
    };
    let p = barrier.basis.len();
    let n = p + d;

    let mut x = DVector::zeros(n);
    let r0 = 0.5 * poly.witness_slack();
    for (alpha, &(j, k)) in barrier.basis.iter().enumerate() {
        if j == k {
            x[alpha] = r0;
        }
    }

    let gap_tol = (eps * eps / 10.0).max(1e-10);
    let mut t = 1.0;
    let mut newton_steps = 0usize;
    loop {
        for _ in 0..200 {
            let (g, h) = barrier
                .grad_hess(&x, t)
                .ok_or_else(|| Error::NonConvergence("left the barrier domain".into()))?;
            let step = match h.clone().cholesky() {
                Some(ch) => -ch.solve(&g),
                None => {
                    // Regularize a numerically indefinite Hessian.
                    let reg = &h + DMatrix::identity(n, n) * (1e-12 * h.amax().max(1.0));
                    -reg.cholesky()
                        .ok_or_else(|| Error::NonConvergence("singular Newton system".into()))?
                        .solve(&g)
                }
            };
            let decrement = -g.dot(&step);
            newton_steps += 1;
            if decrement / 2.0 < 1e-10 {
                break;
            }
            let f0 = barrier
                .value(&x, t)
                .ok_or_else(|| Error::NonConvergence("left the barrier domain".into()))?;
            let mut tau = 1.0;
            let mut accepted = false;
            for _ in 0..80 {
                let cand = &x + &step * tau;
                if let Some(f1) = barrier.value(&cand, t) {
                    if f1 <= f0 - 0.25 * tau * decrement {
                        x = cand;
                        accepted = true;
                        break;
                    }
                }
                tau *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if 2.0 * m as f64 / t < gap_tol {
            break;
        }
        t *= 10.0;
        if newton_steps > 5000 {
            return Err(Error::NonConvergence("John ellipsoid barrier stalled".into()));
        }
    }

    let (b, c) = barrier.unpack(&x);
    let shape = &b * &b;
    let shape = (&shape + shape.transpose()) * 0.5;
    let center = Point::from_vector(witness + c)?;
    Ellipsoid::new(center, shape)
}
