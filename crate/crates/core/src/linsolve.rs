//! Jacobi-preconditioned conjugate gradients and sparse direct solves.

use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use rayon::prelude::*;
use serde::Serialize;
use sprs::CsMat;

use crate::error::{Result, VemError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cg,
    Cholesky,
    Lu,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub method: Method,
    pub iterations: usize,
    pub relative_residual: f64,
    pub seconds: f64,
}

pub const DEFAULT_TOL: f64 = 1e-12;

/// Residual bound accepted from a direct factorization.
pub const DIRECT_TOL: f64 = 1e-10;

/// `y = A x`, rows in parallel; each row sum is sequential, so the result
/// does not depend on the thread count.
pub fn spmv(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    assert!(a.is_csr());
    (0..a.rows())
        .into_par_iter()
        .map(|i| {
            a.outer_view(i)
                .map(|row| row.iter().map(|(j, v)| v * x[j]).sum())
                .unwrap_or(0.0)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves the SPD system `A x = b` to `‖Ax − b‖ ≤ tol ‖b‖`.
pub fn cg_solve(a: &CsMat<f64>, b: &[f64], tol: f64, maxiter: usize) -> Result<(Vec<f64>, SolveReport)> {
    cg_solve_observed(a, b, tol, maxiter, |_, _| {})
}

/// As [`cg_solve`], calling `observe(iteration, iterate)` after every update.
pub fn cg_solve_observed(
    a: &CsMat<f64>,
    b: &[f64],
    tol: f64,
    maxiter: usize,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let n = b.len();
    let a = if a.is_csr() { a.clone() } else { a.to_csr() };
    let inv_diag: Vec<f64> = (0..n)
        .map(|i| match a.get(i, i) {
            Some(&d) if d > 0.0 => 1.0 / d,
            _ => 1.0,
        })
        .collect();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    let report = |iterations, rel| SolveReport {
        method: Method::Cg,
        iterations,
        relative_residual: rel,
        seconds: start.elapsed().as_secs_f64(),
    };
    if bnorm == 0.0 {
        return Ok((x, report(0, 0.0)));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for it in 1..=maxiter {
        let ap = spmv(&a, &p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(VemError::NotConverged(report(it, rel)));
        }
        let alpha = rz / pap;
        x.iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
        r.iter_mut().zip(&ap).for_each(|(r, ap)| *r -= alpha * ap);
        observe(it, &x);
        rel = norm(&r) / bnorm;
        if rel <= tol {
            // confirm against the true residual
            let ax = spmv(&a, &x);
            let true_rel = norm(&ax.iter().zip(b).map(|(ax, b)| b - ax).collect::<Vec<_>>()) / bnorm;
            if true_rel <= tol {
                return Ok((x, report(it, true_rel)));
            }
            rel = true_rel;
        }
        z.iter_mut()
            .zip(&r)
            .zip(&inv_diag)
            .for_each(|((z, r), d)| *z = r * d);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
    }
    Err(VemError::NotConverged(report(maxiter, rel)))
}

fn to_faer(a: &CsMat<f64>) -> Result<SparseColMat<usize, f64>> {
    let trips: Vec<Triplet<usize, usize, f64>> = a
        .iter()
        .map(|(&v, (i, j))| Triplet::new(i, j, v))
        .collect();
    SparseColMat::try_new_from_triplets(a.rows(), a.cols(), &trips)
        .map_err(|e| VemError::Factorization(format!("{e:?}")))
}

fn residual(a: &CsMat<f64>, x: &[f64], b: &[f64]) -> f64 {
    let a = if a.is_csr() { a.clone() } else { a.to_csr() };
    let ax = spmv(&a, x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(ax, b)| b - ax).collect();
    let bn = norm(b);
    if bn == 0.0 {
        norm(&r)
    } else {
        norm(&r) / bn
    }
}

/// Direct sparse solve: Cholesky for SPD input, LU with partial pivoting when
/// `indefinite` is set.
pub fn direct_solve(a: &CsMat<f64>, b: &[f64], indefinite: bool) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    if a.rows() != a.cols() || a.rows() != b.len() {
        return Err(VemError::Factorization("dimension mismatch".into()));
    }
    let n = b.len();
    if n == 0 {
        return Ok((
            Vec::new(),
            SolveReport {
                method: if indefinite { Method::Lu } else { Method::Cholesky },
                iterations: 0,
                relative_residual: 0.0,
                seconds: 0.0,
            },
        ));
    }
    let m = to_faer(a)?;
    let rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    let (sol, method) = if indefinite {
        let lu = m
            .sp_lu()
            .map_err(|e| VemError::Factorization(format!("LU: {e:?}")))?;
        (lu.solve(&rhs), Method::Lu)
    } else {
        let llt = m
            .sp_cholesky(Side::Lower)
            .map_err(|e| VemError::Factorization(format!("Cholesky: {e:?}")))?;
        (llt.solve(&rhs), Method::Cholesky)
    };
    let x: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(VemError::Factorization("singular matrix (non-finite solution)".into()));
    }
    let rel = residual(a, &x, b);
    if rel > DIRECT_TOL {
        return Err(VemError::Factorization(format!(
            "residual {rel:.3e} above {DIRECT_TOL:.0e} (matrix singular or ill-conditioned)"
        )));
    }
    Ok((
        x,
        SolveReport {
            method,
            iterations: 1,
            relative_residual: rel,
            seconds: start.elapsed().as_secs_f64(),
        },
    ))
}

/// Attempts a sparse Cholesky factorization; success witnesses positive definiteness.
pub fn cholesky_succeeds(a: &CsMat<f64>) -> bool {
    to_faer(a)
        .ok()
        .map(|m| m.sp_cholesky(Side::Lower).is_ok())
        .unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use sprs::TriMat;

    fn dense_to_csr(n: usize, f: impl Fn(usize, usize) -> f64) -> CsMat<f64> {
        let mut t = TriMat::new((n, n));
        for i in 0..n {
            for j in 0..n {
                let v = f(i, j);
                if v != 0.0 {
                    t.add_triplet(i, j, v);
                }
            }
        }
        t.to_csr()
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let a = CsMat::<f64>::eye(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 4.0];
        let (x, rep) = cg_solve(&a, &b, 1e-12, 50).unwrap();
        assert_eq!(rep.iterations, 1);
        assert_eq!(x, b);
    }

    #[test]
    fn two_by_two_hand_solution() {
        let a = dense_to_csr(2, |i, j| [[4.0, 1.0], [1.0, 3.0]][i][j]);
        let (x, _) = cg_solve(&a, &[1.0, 2.0], 1e-14, 20).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn energy_error_decreases_monotonically() {
        let n = 40;
        let a = dense_to_csr(n, |i, j| match (i as i64 - j as i64).abs() {
            0 => 2.0 + 0.1 * i as f64,
            1 => -1.0,
            _ => 0.0,
        });
        let b: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let (exact, _) = direct_solve(&a, &b, false).unwrap();
        let mut errs = Vec::new();
        cg_solve_observed(&a, &b, 1e-13, 400, |_, x| {
            let e: Vec<f64> = x.iter().zip(&exact).map(|(x, y)| x - y).collect();
            errs.push(dot(&e, &spmv(&a, &e)).sqrt());
        })
        .unwrap();
        assert!(errs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-15));
    }

    #[test]
    fn scalar_direct_solve() {
        let a = dense_to_csr(1, |_, _| 4.0);
        let (x, _) = direct_solve(&a, &[2.0], false).unwrap();
        assert_eq!(x, vec![0.5]);
    }

    #[test]
    fn saddle_hand_solution() {
        let a = dense_to_csr(2, |i, j| [[2.0, 1.0], [1.0, 0.0]][i][j]);
        let (x, rep) = direct_solve(&a, &[3.0, 1.0], true).unwrap();
        assert_eq!(rep.method, Method::Lu);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        assert!(!cholesky_succeeds(&a));
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = dense_to_csr(2, |_, _| 1.0);
        assert!(direct_solve(&a, &[1.0, 2.0], true).is_err());
    }

    #[test]
    fn maxiter_exceeded_carries_report() {
        let a = dense_to_csr(3, |i, j| if i == j { (i + 1) as f64 } else { 0.1 });
        match cg_solve(&a, &[1.0, 1.0, 1.0], 1e-30, 1) {
            Err(VemError::NotConverged(rep)) => assert_eq!(rep.iterations, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn direct_and_cg_agree_on_random_spd(seed in proptest::collection::vec(-1.0f64..1.0, 50 * 50)) {
            let n = 50;
            // A = MᵀM + n I
            let m = nalgebra::DMatrix::from_vec(n, n, seed);
            let spd = m.transpose() * &m + nalgebra::DMatrix::identity(n, n) * n as f64;
            let a = dense_to_csr(n, |i, j| spd[(i, j)]);
            let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let (x1, _) = direct_solve(&a, &b, false).unwrap();
            let (x2, _) = cg_solve(&a, &b, 1e-13, 500).unwrap();
            let diff = norm(&x1.iter().zip(&x2).map(|(a, b)| a - b).collect::<Vec<_>>());
            prop_assert!(diff <= 1e-9 * norm(&x1));
        }
    }
}
