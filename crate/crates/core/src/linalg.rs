//! Small dense and iterative kernels shared by the solvers.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Weighted dot product `Σ w_k a_k b_k`.
#[inline]
pub(crate) fn wdot<T: Real>(w: &[T], a: &[T], b: &[T]) -> T {
    w.iter().zip(a).zip(b).map(|((&w, &a), &b)| w * a * b).sum()
}

/// Removes the weighted mean so that `Σ w_k x_k = 0`.
pub(crate) fn project_mean_zero<T: Real>(w: &[T], x: &mut [T]) {
    let total: T = w.iter().copied().sum();
    let mean = w.iter().zip(x.iter()).map(|(&w, &v)| w * v).sum::<T>() / total;
    for v in x.iter_mut() {
        *v -= mean;
    }
}

pub(crate) struct CgSetup<'a, T> {
    /// Inner-product weights; the operator must be self-adjoint in them.
    pub weights: &'a [T],
    /// Jacobi preconditioner diagonal.
    pub diag: &'a [T],
    /// Restrict iterates to the weighted mean-zero subspace.
    pub project: bool,
    pub rel_tol: T,
    pub max_iter: usize,
}

/// Preconditioned conjugate gradients for `op(x) = rhs`, starting from zero.
pub(crate) fn pcg<T: Real>(op: impl Fn(&[T]) -> Vec<T>, rhs: &[T], setup: &CgSetup<'_, T>) -> Result<Vec<T>> {
    let w = setup.weights;
    let n = rhs.len();
    let mut x = vec![T::zero(); n];
    let mut r = rhs.to_vec();
    if setup.project {
        project_mean_zero(w, &mut r);
    }
    let rhs_norm = wdot(w, &r, &r).sqrt();
    if rhs_norm == T::zero() {
        return Ok(x);
    }
    let target = setup.rel_tol * rhs_norm;
    let precondition = |r: &[T]| {
        let mut z: Vec<T> = r.iter().zip(setup.diag).map(|(&r, &d)| r / d).collect();
        if setup.project {
            project_mean_zero(w, &mut z);
        }
        z
    };
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = wdot(w, &r, &z);
    let mut res = rhs_norm;
    for _ in 0..setup.max_iter {
        let ap = op(&p);
        let pap = wdot(w, &p, &ap);
        if !(pap > T::zero()) {
            break;
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        res = wdot(w, &r, &r).sqrt();
        if res <= target {
            if setup.project {
                project_mean_zero(w, &mut x);
            }
            return Ok(x);
        }
        z = precondition(&r);
        let rz_new = wdot(w, &r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::SolverFailure {
        iterations: setup.max_iter,
        residual: (res / rhs_norm).as_f64(),
    })
}

/// Solves the symmetric positive definite system `a x = b` in place
/// (`a` is row-major `n × n`, overwritten by its Cholesky factor).
pub(crate) fn cholesky_solve<T: Real>(a: &mut [T], b: &mut [T]) -> Result<()> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > T::zero()) {
            return Err(Error::SolverFailure {
                iterations: j,
                residual: d.as_f64(),
            });
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Ok(())
}
