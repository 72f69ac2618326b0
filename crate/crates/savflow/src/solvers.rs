//! Preconditioned Krylov solvers: conjugate gradients for the symmetric
//! positive (semi-)definite systems and BiCGStab for the nonsymmetric
//! momentum system.
//!
//! Both solvers use the stopping rule `||r|| <= rtol * ||b|| + atol` on the
//! true preconditioned-free residual norm, accept a warm-start iterate, and
//! report the iterate with the smallest residual seen when the iteration
//! budget runs out instead of failing hard.

use crate::error::LinalgError;
use crate::sparse::{axpy, check_square, dot, norm2, SparseMatrix};

/// Preconditioner selection. Jacobi is diagonal scaling; `None` is the
/// identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
}

/// Nullspace handling for singular symmetric systems.
///
/// `Constants` projects the constant vector out of the right-hand side and
/// out of every preconditioned direction, which makes CG solve the pure
/// Neumann pressure problem for the mean-zero representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nullspace {
    None,
    Constants,
}

/// Tolerances and limits for a Krylov solve.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_iter: usize,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rtol: 1e-10,
            atol: 1e-14,
            max_iter: 10_000,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

/// Outcome of a solve. `converged` is false when the iteration budget ran
/// out; the returned iterate is then the best one encountered.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn subtract_mean(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
}

fn apply_jacobi(inv_diag: Option<&[f64]>, r: &[f64], z: &mut [f64]) {
    match inv_diag {
        Some(d) => {
            for i in 0..r.len() {
                z[i] = d[i] * r[i];
            }
        }
        None => z.copy_from_slice(r),
    }
}

/// Preconditioned conjugate gradient method.
///
/// `a` must be symmetric positive definite, or positive semidefinite with
/// the constants as nullspace when `nullspace` is [`Nullspace::Constants`].
pub fn cg_solve(
    a: &SparseMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    config: &SolverConfig,
    nullspace: Nullspace,
) -> Result<(Vec<f64>, SolveStats), LinalgError> {
    check_square(a, b)?;
    let n = b.len();
    let project = nullspace == Nullspace::Constants;

    let mut b = b.to_vec();
    if project {
        subtract_mean(&mut b);
    }
    let norm_b = norm2(&b);
    let tol = config.rtol * norm_b + config.atol;

    let mut x = match x0 {
        Some(x0) => {
            if x0.len() != n {
                return Err(LinalgError::DimensionMismatch {
                    expected: n,
                    found: x0.len(),
                });
            }
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    if project {
        subtract_mean(&mut x);
    }
    if norm_b == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveStats {
                iterations: 0,
                residual: 0.0,
                converged: true,
            },
        ));
    }

    let inv_diag = match config.preconditioner {
        Preconditioner::Jacobi => Some(a.inverse_diagonal()),
        Preconditioner::None => None,
    };

    let mut r = vec![0.0; n];
    a.spmv_into(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut res = norm2(&r);
    if res <= tol {
        return Ok((
            x,
            SolveStats {
                iterations: 0,
                residual: res,
                converged: true,
            },
        ));
    }

    let mut z = vec![0.0; n];
    apply_jacobi(inv_diag.as_deref(), &r, &mut z);
    if project {
        subtract_mean(&mut z);
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];

    let mut best_x = x.clone();
    let mut best_res = res;
    let mut iterations = 0;

    for it in 1..=config.max_iter {
        iterations = it;
        a.spmv_into(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 || !pq.is_finite() {
            // Lost positive definiteness numerically; stop with the best
            // iterate rather than diverging.
            break;
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        res = norm2(&r);
        if res < best_res {
            best_res = res;
            best_x.copy_from_slice(&x);
        }
        if res <= tol {
            if project {
                subtract_mean(&mut x);
            }
            return Ok((
                x,
                SolveStats {
                    iterations: it,
                    residual: res,
                    converged: true,
                },
            ));
        }
        apply_jacobi(inv_diag.as_deref(), &r, &mut z);
        if project {
            subtract_mean(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    if project {
        subtract_mean(&mut best_x);
    }
    let converged = best_res <= tol;
    Ok((
        best_x,
        SolveStats {
            iterations,
            residual: best_res,
            converged,
        },
    ))
}

/// Deterministic perturbation used to restart BiCGStab after a shadow
/// residual breakdown. Hash-based so reruns are bitwise identical.
fn perturb_shadow(r: &[f64], scale: f64) -> Vec<f64> {
    r.iter()
        .enumerate()
        .map(|(i, &ri)| {
            let h = (i as u64).wrapping_mul(0x9e3779b97f4a7c15);
            let frac = (h >> 11) as f64 / (1u64 << 53) as f64;
            ri + scale * (frac - 0.5)
        })
        .collect()
}

/// Preconditioned BiCGStab for nonsymmetric systems.
///
/// A (near-)orthogonal shadow residual triggers a deterministic restart
/// with a perturbed copy of the current residual as the new shadow;
/// restarts are allowed as long as each one improves the residual, and
/// stagnation ends the iteration with the best iterate seen.
pub fn bicgstab_solve(
    a: &SparseMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    config: &SolverConfig,
) -> Result<(Vec<f64>, SolveStats), LinalgError> {
    check_square(a, b)?;
    let n = b.len();
    let norm_b = norm2(b);
    let tol = config.rtol * norm_b + config.atol;

    let mut x = match x0 {
        Some(x0) => {
            if x0.len() != n {
                return Err(LinalgError::DimensionMismatch {
                    expected: n,
                    found: x0.len(),
                });
            }
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    if norm_b == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveStats {
                iterations: 0,
                residual: 0.0,
                converged: true,
            },
        ));
    }

    let inv_diag = match config.preconditioner {
        Preconditioner::Jacobi => Some(a.inverse_diagonal()),
        Preconditioner::None => None,
    };

    let mut r = vec![0.0; n];
    a.spmv_into(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut res = norm2(&r);
    if res <= tol {
        return Ok((
            x,
            SolveStats {
                iterations: 0,
                residual: res,
                converged: true,
            },
        ));
    }

    let mut r_hat = r.clone();
    let mut rho_prev = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    // Residual norm at the last shadow restart; a restart that has not
    // improved on the previous one by at least 1% counts as stagnation.
    let mut res_at_restart = f64::INFINITY;

    let mut best_x = x.clone();
    let mut best_res = res;
    let mut iterations = 0;

    for it in 1..=config.max_iter {
        iterations = it;
        let rho = dot(&r_hat, &r);
        let degenerate = !rho.is_finite() || rho.abs() < f64::EPSILON * norm2(&r_hat) * res;
        if degenerate {
            if res >= 0.99 * res_at_restart {
                break;
            }
            res_at_restart = res;
            r_hat = perturb_shadow(&r, 1e-8 * res.max(config.atol));
            rho_prev = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|x| *x = 0.0);
            p.iter_mut().for_each(|x| *x = 0.0);
            continue;
        }
        let beta = (rho / rho_prev) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        apply_jacobi(inv_diag.as_deref(), &p, &mut p_hat);
        a.spmv_into(&p_hat, &mut v);
        let rhat_v = dot(&r_hat, &v);
        if rhat_v == 0.0 || !rhat_v.is_finite() {
            if res >= 0.99 * res_at_restart {
                break;
            }
            res_at_restart = res;
            r_hat = perturb_shadow(&r, 1e-8 * res.max(config.atol));
            rho_prev = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|x| *x = 0.0);
            p.iter_mut().for_each(|x| *x = 0.0);
            continue;
        }
        alpha = rho / rhat_v;
        // s reuses the r storage: s = r - alpha v.
        axpy(-alpha, &v, &mut r);
        let norm_s = norm2(&r);
        if norm_s <= tol {
            axpy(alpha, &p_hat, &mut x);
            return Ok((
                x,
                SolveStats {
                    iterations: it,
                    residual: norm_s,
                    converged: true,
                },
            ));
        }
        apply_jacobi(inv_diag.as_deref(), &r, &mut s_hat);
        a.spmv_into(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            axpy(alpha, &p_hat, &mut x);
            res = norm_s;
            if res < best_res {
                best_res = res;
                best_x.copy_from_slice(&x);
            }
            break;
        }
        omega = dot(&t, &r) / tt;
        axpy(alpha, &p_hat, &mut x);
        axpy(omega, &s_hat, &mut x);
        // r = s - omega t.
        axpy(-omega, &t, &mut r);
        res = norm2(&r);
        if res < best_res {
            best_res = res;
            best_x.copy_from_slice(&x);
        }
        if res <= tol {
            return Ok((
                x,
                SolveStats {
                    iterations: it,
                    residual: res,
                    converged: true,
                },
            ));
        }
        if omega == 0.0 {
            break;
        }
        rho_prev = rho;
    }

    let converged = best_res <= tol;
    Ok((
        best_x,
        SolveStats {
            iterations,
            residual: best_res,
            converged,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CooBuilder;

    fn matrix(entries: &[(usize, usize, f64)], n: usize) -> SparseMatrix {
        let mut b = CooBuilder::new(n, n);
        for &(i, j, v) in entries {
            b.add(i, j, v);
        }
        b.build()
    }

    #[test]
    fn cg_two_by_two() {
        // [[4, 1], [1, 3]] x = (1, 2) has solution (1/11, 7/11).
        let a = matrix(&[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)], 2);
        let cfg = SolverConfig::default();
        let (x, stats) = cg_solve(&a, &[1.0, 2.0], None, &cfg, Nullspace::None).unwrap();
        assert!(stats.converged);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-12);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn cg_zero_rhs_returns_zero() {
        let a = matrix(&[(0, 0, 2.0), (1, 1, 2.0)], 2);
        let cfg = SolverConfig::default();
        let (x, stats) = cg_solve(&a, &[0.0, 0.0], None, &cfg, Nullspace::None).unwrap();
        assert!(stats.converged);
        assert_eq!(x, vec![0.0, 0.0]);
    }

    #[test]
    fn cg_budget_exhaustion_reports_not_converged() {
        // A 1D Laplacian needs more than one iteration from a zero guess.
        let n = 20;
        let mut b = CooBuilder::new(n, n);
        for i in 0..n {
            b.add(i, i, 2.0);
            if i > 0 {
                b.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                b.add(i, i + 1, -1.0);
            }
        }
        let a = b.build();
        let rhs = vec![1.0; n];
        let cfg = SolverConfig {
            max_iter: 1,
            ..SolverConfig::default()
        };
        let (_, stats) = cg_solve(&a, &rhs, None, &cfg, Nullspace::None).unwrap();
        assert!(!stats.converged);
        assert_eq!(stats.iterations, 1);
    }

    #[test]
    fn cg_constants_nullspace_neumann_laplacian() {
        // Singular 1D Neumann Laplacian; the mean-zero solution of
        // b = (1, 0, -1) is (1, 0, -1).
        let a = matrix(
            &[
                (0, 0, 1.0),
                (0, 1, -1.0),
                (1, 0, -1.0),
                (1, 1, 2.0),
                (1, 2, -1.0),
                (2, 1, -1.0),
                (2, 2, 1.0),
            ],
            3,
        );
        let cfg = SolverConfig::default();
        let (x, stats) = cg_solve(&a, &[1.0, 0.0, -1.0], None, &cfg, Nullspace::Constants).unwrap();
        assert!(stats.converged);
        assert!((x[0] - 1.0).abs() < 1e-10);
        assert!(x[1].abs() < 1e-10);
        assert!((x[2] + 1.0).abs() < 1e-10);
        let mean: f64 = x.iter().sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn cg_random_spd_system() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(42);
        let n = 30;
        // Dense random SPD matrix: A = B^T B + n I, stored sparsely.
        let mut dense = vec![vec![0.0f64; n]; n];
        let raw: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += raw[k][i] * raw[k][j];
                }
                dense[i][j] = s + if i == j { n as f64 } else { 0.0 };
            }
        }
        let mut builder = CooBuilder::new(n, n);
        for i in 0..n {
            for j in 0..n {
                builder.add(i, j, dense[i][j]);
            }
        }
        let a = builder.build();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cfg = SolverConfig::default();
        let (x, stats) = cg_solve(&a, &b, None, &cfg, Nullspace::None).unwrap();
        assert!(stats.converged, "stats: {stats:?}");
        let r: Vec<f64> = a
            .spmv(&x)
            .iter()
            .zip(&b)
            .map(|(ax, bi)| bi - ax)
            .collect();
        assert!(norm2(&r) <= 1e-9 * norm2(&b) + 1e-12);
    }

    #[test]
    fn bicgstab_upper_triangular() {
        // [[1, 1], [0, 1]] x = (2, 1) has solution (1, 1).
        let a = matrix(&[(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0)], 2);
        let cfg = SolverConfig::default();
        let (x, stats) = bicgstab_solve(&a, &[2.0, 1.0], None, &cfg).unwrap();
        assert!(stats.converged);
        assert!((x[0] - 1.0).abs() < 1e-10, "x = {x:?}");
        assert!((x[1] - 1.0).abs() < 1e-10, "x = {x:?}");
    }

    #[test]
    fn bicgstab_random_nonsymmetric() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let n = 40;
        let mut builder = CooBuilder::new(n, n);
        let mut dense = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    dense[i][j] = 10.0 + rng.gen_range(0.0..1.0);
                } else if rng.gen_bool(0.2) {
                    dense[i][j] = rng.gen_range(-1.0..1.0);
                }
                if dense[i][j] != 0.0 {
                    builder.add(i, j, dense[i][j]);
                }
            }
        }
        let a = builder.build();
        let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = a.spmv(&x_true);
        let cfg = SolverConfig::default();
        let (x, stats) = bicgstab_solve(&a, &b, None, &cfg).unwrap();
        assert!(stats.converged, "stats: {stats:?}");
        for i in 0..n {
            assert!((x[i] - x_true[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn warm_start_at_solution_converges_immediately() {
        let a = matrix(&[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)], 2);
        let cfg = SolverConfig::default();
        let x0 = [1.0 / 11.0, 7.0 / 11.0];
        let (_, stats) = cg_solve(&a, &[1.0, 2.0], Some(&x0), &cfg, Nullspace::None).unwrap();
        assert_eq!(stats.iterations, 0);
        assert!(stats.converged);
    }
}
