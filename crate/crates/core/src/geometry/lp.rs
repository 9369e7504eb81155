//! Primal active-set kernel for `min f(y)  s.t.  a_i . y >= b_i`.
//!
//! Two objectives share the kernel: a linear objective (an LP solved by
//! walking from a feasible point along projected gradients to a vertex) and
//! the squared distance to a target point (Euclidean projection). Both start
//! from a feasible point and keep feasibility on every step. Bland's rule
//! picks both the entering and the leaving constraint, which rules out
//! cycling on degenerate vertices.

use nalgebra::{DMatrix, DVector};

/// Row-major constraint block: row `i` is `a[i*dim..(i+1)*dim]`, meaning
/// `a_i . y >= b[i]`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Rows<'a> {
    pub a: &'a [f64],
    pub b: &'a [f64],
    pub dim: usize,
}

impl<'a> Rows<'a> {
    pub fn len(&self) -> usize {
        self.b.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.a[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn slack(&self, i: usize, y: &[f64]) -> f64 {
        dot(self.row(i), y) - self.b[i]
    }

    pub fn min_slack(&self, y: &[f64]) -> f64 {
        (0..self.len())
            .map(|i| self.slack(i, y))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Objective<'a> {
    /// Minimize `c . y`.
    Linear(&'a [f64]),
    /// Minimize `|y - x|^2 / 2`.
    Distance(&'a [f64]),
}

#[derive(Clone, Debug)]
pub(crate) struct Solution {
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum SolveError {
    Unbounded,
    IterationCap(usize),
    Singular,
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Runs the active-set method from the feasible point `start`.
/// Constraint `skip` (if any) is ignored.
pub(crate) fn solve(
    rows: Rows<'_>,
    objective: Objective<'_>,
    start: &[f64],
    skip: Option<usize>,
    max_iter: usize,
) -> Result<Solution, SolveError> {
    let d = rows.dim;
    let m = rows.len();
    let mut y = start.to_vec();
    let mut working: Vec<usize> = Vec::with_capacity(d);
    let mut g = vec![0.0; d];
    let mut p = vec![0.0; d];

    for _ in 0..max_iter {
        match objective {
            Objective::Linear(c) => g.copy_from_slice(c),
            Objective::Distance(x) => {
                for j in 0..d {
                    g[j] = y[j] - x[j];
                }
            }
        }
        let gnorm = dot(&g, &g).sqrt();

        // Multipliers of the working set and the null-space projection of g.
        let lambda = if working.is_empty() {
            p.iter_mut().zip(&g).for_each(|(pj, gj)| *pj = -gj);
            DVector::zeros(0)
        } else {
            let k = working.len();
            let aw = DMatrix::from_fn(k, d, |r, c| rows.row(working[r])[c]);
            let gram = &aw * aw.transpose();
            let chol = gram.cholesky().ok_or(SolveError::Singular)?;
            let gv = DVector::from_column_slice(&g);
            let lambda = chol.solve(&(&aw * &gv));
            if k == d {
                // A vertex: the null space is trivial, whatever round-off says.
                p.iter_mut().for_each(|pj| *pj = 0.0);
            } else {
                let back = aw.transpose() * &lambda;
                for j in 0..d {
                    p[j] = -(g[j] - back[j]);
                }
            }
            lambda
        };

        let pnorm = dot(&p, &p).sqrt();
        if pnorm <= 1e-13 * (1.0 + gnorm) {
            let tol = 1e-11 * (1.0 + gnorm);
            // Bland: leave with the smallest constraint index among negatives.
            let leaving = working
                .iter()
                .enumerate()
                .filter(|(r, _)| lambda[*r] < -tol)
                .min_by_key(|(_, &i)| i)
                .map(|(r, _)| r);
            match leaving {
                None => {
                    return Ok(Solution {
                        y,
                    })
                }
                Some(r) => {
                    working.remove(r);
                    continue;
                }
            }
        }

        let step_cap = match objective {
            Objective::Linear(_) => f64::INFINITY,
            Objective::Distance(_) => 1.0,
        };
        let mut step = step_cap;
        let mut blocking: Option<usize> = None;
        let ptol = 1e-14 * pnorm;
        for i in 0..m {
            if Some(i) == skip || working.contains(&i) {
                continue;
            }
            let ap = dot(rows.row(i), &p);
            if ap < -ptol {
                let t = rows.slack(i, &y).max(0.0) / (-ap);
                if t < step {
                    step = t;
                    blocking = Some(i);
                }
            }
        }
        if !step.is_finite() {
            return Err(SolveError::Unbounded);
        }
        for j in 0..d {
            y[j] += step * p[j];
        }
        match blocking {
            Some(i) if working.len() < d => working.push(i),
            Some(_) => return Err(SolveError::Singular),
            None => {
                // Unconstrained subspace minimum reached (distance objective).
            }
        }
    }
    Err(SolveError::IterationCap(max_iter))
}

/// `max s` over `c in [-1, 1]^d`, `s <= 1` with `<c, g_j> >= s` for every
/// `g_j`; positive iff some linear function strictly separates 0 from all
/// `g_j`'s negatives.
pub(crate) fn separation_margin(gs: &[nalgebra::DVector<f64>]) -> Option<f64> {
    let d = gs.first()?.len();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for g in gs {
        a.extend(g.iter());
        a.push(-1.0);
        b.push(0.0);
    }
    for k in 0..d {
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; d + 1];
            row[k] = sign;
            a.extend(row);
            b.push(-1.0);
        }
    }
    let mut row = vec![0.0; d + 1];
    row[d] = -1.0;
    a.extend(row);
    b.push(-1.0);
    let rows = Rows { a: &a, b: &b, dim: d + 1 };
    let mut start = vec![0.0; d + 1];
    start[d] = -1.0;
    let mut c = vec![0.0; d + 1];
    c[d] = -1.0;
    let cap = 10 * (d + 1) * rows.len();
    solve(rows, Objective::Linear(&c), &start, None, cap).ok().map(|s| s.y[d])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> (Vec<f64>, Vec<f64>) {
        // [-1,1]^2 as x >= -1, -x >= -1, y >= -1, -y >= -1
        (
            vec![1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0],
            vec![-1.0, -1.0, -1.0, -1.0],
        )
    }

    #[test]
    fn lp_reaches_vertex() {
        let (a, b) = square();
        let rows = Rows { a: &a, b: &b, dim: 2 };
        let sol = solve(rows, Objective::Linear(&[1.0, 2.0]), &[0.0, 0.0], None, 100).unwrap();
        assert!((sol.y[0] + 1.0).abs() < 1e-12 && (sol.y[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn lp_unbounded_without_constraint() {
        let (a, b) = square();
        let rows = Rows { a: &a, b: &b, dim: 2 };
        let res = solve(rows, Objective::Linear(&[1.0, 0.0]), &[0.0, 0.0], Some(0), 100);
        assert_eq!(res.unwrap_err(), SolveError::Unbounded);
    }

    #[test]
    fn projection_onto_corner_and_face() {
        let (a, b) = square();
        let rows = Rows { a: &a, b: &b, dim: 2 };
        let s = solve(rows, Objective::Distance(&[3.0, 2.0]), &[0.0, 0.0], None, 100).unwrap();
        assert!((s.y[0] - 1.0).abs() < 1e-12 && (s.y[1] - 1.0).abs() < 1e-12);
        let s = solve(rows, Objective::Distance(&[3.0, 0.5]), &[0.0, 0.0], None, 100).unwrap();
        assert!((s.y[0] - 1.0).abs() < 1e-12 && (s.y[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_vertex_does_not_cycle() {
        // Three constraints through the origin plus a box.
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        let a = vec![1.0, 0.0, 0.0, 1.0, s2, s2, -1.0, 0.0, 0.0, -1.0];
        let b = vec![0.0, 0.0, 0.0, -1.0, -1.0];
        let rows = Rows { a: &a, b: &b, dim: 2 };
        let sol = solve(rows, Objective::Linear(&[1.0, 1.0]), &[0.5, 0.5], None, 100).unwrap();
        assert!(sol.y[0].abs() < 1e-12 && sol.y[1].abs() < 1e-12);
    }
}
