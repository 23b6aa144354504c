//! Linear solves behind the stationary distributions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative pivot threshold below which a factorization is declared singular.
const RANK_TOL: f64 = 1e-13;

/// Stationary vector of a dense generator: solve `G^T p = 0` with the last
/// balance row replaced by the normalization `sum(p) = 1`.
pub fn stationary_by_replacement(generator: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = generator.nrows();
    if n != generator.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: generator.ncols(),
        });
    }
    let mut system = generator.transpose();
    system.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let lu = system.lu();
    let u = lu.u();
    let scale = u.diagonal().amax();
    if u.diagonal().iter().any(|d| d.abs() <= RANK_TOL * scale) {
        return Err(Error::SingularSystem("zero pivot in LU factorization".into()));
    }
    let solution = lu
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("LU solve failed".into()))?;
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem("non-finite solution".into()));
    }
    Ok(solution.iter().copied().collect())
}

/// Least-squares solution of an overdetermined full-column-rank system via
/// Householder QR.
pub fn least_squares(system: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let (rows, cols) = system.shape();
    if rows < cols {
        return Err(Error::DimensionMismatch {
            expected: cols,
            actual: rows,
        });
    }
    if rhs.len() != rows {
        return Err(Error::DimensionMismatch {
            expected: rows,
            actual: rhs.len(),
        });
    }
    let qr = system.qr();
    let r = qr.r();
    let scale = r.diagonal().amax();
    if scale == 0.0 || r.diagonal().iter().any(|d| d.abs() <= RANK_TOL * scale) {
        return Err(Error::SingularSystem("rank-deficient least-squares system".into()));
    }
    let qt_b = qr.q().transpose() * rhs;
    r.solve_upper_triangular(&qt_b)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::SingularSystem("triangular solve failed".into()))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn scale_in_place(v: &mut [f64], s: f64) {
    v.iter_mut().for_each(|x| *x *= s);
}

/// Outcome of an iterative least-squares solve.
#[derive(Debug, Clone)]
pub struct LsqrOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Final `||A x - b||`.
    pub residual: f64,
}

/// Matrix-free LSQR (Paige & Saunders) for `min ||A x - b||`.
///
/// `apply` computes `y = A x` and `apply_t` computes `x = A^T y`; both
/// overwrite their output. Stops when the normal-equation residual
/// `||A^T r||` drops below `tol * ||A|| * ||r||` or `||r|| <= tol * ||b||`.
pub fn lsqr<F, G>(
    rows: usize,
    cols: usize,
    apply: F,
    apply_t: G,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> LsqrOutcome
where
    F: Fn(&[f64], &mut [f64]),
    G: Fn(&[f64], &mut [f64]),
{
    let mut x = vec![0.0; cols];
    let mut u = rhs.to_vec();
    let b_norm = norm(&u);
    if b_norm == 0.0 {
        return LsqrOutcome {
            solution: x,
            iterations: 0,
            residual: 0.0,
        };
    }
    let mut beta = b_norm;
    scale_in_place(&mut u, 1.0 / beta);
    let mut v = vec![0.0; cols];
    apply_t(&u, &mut v);
    let mut alpha = norm(&v);
    if alpha > 0.0 {
        scale_in_place(&mut v, 1.0 / alpha);
    }
    let mut w = v.clone();
    let mut phi_bar = beta;
    let mut rho_bar = alpha;
    let mut a_norm_sq = 0.0;
    let mut tmp_rows = vec![0.0; rows];
    let mut tmp_cols = vec![0.0; cols];
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        // bidiagonalization
        apply(&v, &mut tmp_rows);
        for (ui, ti) in u.iter_mut().zip(&tmp_rows) {
            *ui = ti - alpha * *ui;
        }
        beta = norm(&u);
        if beta > 0.0 {
            scale_in_place(&mut u, 1.0 / beta);
        }
        a_norm_sq += alpha * alpha + beta * beta;
        apply_t(&u, &mut tmp_cols);
        for (vi, ti) in v.iter_mut().zip(&tmp_cols) {
            *vi = ti - beta * *vi;
        }
        alpha = norm(&v);
        if alpha > 0.0 {
            scale_in_place(&mut v, 1.0 / alpha);
        }

        // plane rotation
        let rho = rho_bar.hypot(beta);
        let c = rho_bar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rho_bar = -c * alpha;
        let phi = c * phi_bar;
        phi_bar *= s;

        for ((xi, wi), vi) in x.iter_mut().zip(w.iter_mut()).zip(&v) {
            *xi += (phi / rho) * *wi;
            *wi = vi - (theta / rho) * *wi;
        }

        let r_norm = phi_bar;
        let ar_norm = phi_bar * alpha * c.abs();
        if r_norm <= tol * b_norm || ar_norm <= tol * a_norm_sq.sqrt() * r_norm {
            break;
        }
    }

    apply(&x, &mut tmp_rows);
    let residual = tmp_rows
        .iter()
        .zip(rhs)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    LsqrOutcome {
        solution: x,
        iterations,
        residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn replacement_two_state() {
        let g = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 2.0, -2.0]);
        let p = stationary_by_replacement(&g).unwrap();
        assert_abs_diff_eq!(p[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn replacement_detects_reducible() {
        // two absorbing states: the balance rows plus normalization are dependent
        let g = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 1.0, -2.0, 1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            stationary_by_replacement(&g),
            Err(Error::SingularSystem(_))
        ));
    }

    #[test]
    fn least_squares_consistent_overdetermined() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let x = least_squares(a, &b).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn least_squares_rank_deficient() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(least_squares(a, &b).is_err());
    }

    #[test]
    fn lsqr_matches_direct() {
        let a = DMatrix::from_row_slice(
            4,
            3,
            &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0, 1.0, 1.0, 1.0],
        );
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let direct = least_squares(a.clone(), &b).unwrap();
        let out = lsqr(
            4,
            3,
            |x, y| {
                let r = &a * DVector::from_column_slice(x);
                y.copy_from_slice(r.as_slice());
            },
            |y, x| {
                let r = a.transpose() * DVector::from_column_slice(y);
                x.copy_from_slice(r.as_slice());
            },
            b.as_slice(),
            1e-14,
            100,
        );
        for k in 0..3 {
            assert_abs_diff_eq!(out.solution[k], direct[k], epsilon = 1e-10);
        }
    }
}
