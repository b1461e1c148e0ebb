//! Krylov methods for operators that are self-adjoint in a caller-supplied
//! inner product.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinresOutcome {
    pub iterations: usize,
    /// Residual norm `‖b - A x‖` in the supplied inner product.
    pub residual: f64,
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// MINRES for `A x = b` with `A` self-adjoint in `inner` on the range of the
/// projector `project`, which is reapplied to every Krylov vector so that
/// round-off cannot leak out of that subspace. Stops when the residual drops
/// below `max(rtol·‖b‖, atol)`.
pub fn minres<A, I, P>(
    apply: A,
    inner: I,
    project: P,
    b: &[f64],
    rtol: f64,
    atol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, MinresOutcome)>
where
    A: Fn(&[f64]) -> Vec<f64>,
    I: Fn(&[f64], &[f64]) -> f64,
    P: Fn(&mut Vec<f64>),
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let beta1 = inner(b, b).max(0.0).sqrt();
    if beta1 == 0.0 {
        return Ok((
            x,
            MinresOutcome {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let target = (rtol * beta1).max(atol);
    let mut r1 = b.to_vec();
    let mut r2 = b.to_vec();
    let mut beta = beta1;
    let mut oldb = 0.0;
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn): (f64, f64) = (-1.0, 0.0);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    for itn in 1..=max_iter {
        let s = 1.0 / beta;
        let v: Vec<f64> = r2.iter().map(|x| s * x).collect();
        let mut y = apply(&v);
        if itn >= 2 {
            axpy(&mut y, -beta / oldb, &r1);
        }
        let alfa = inner(&v, &y);
        axpy(&mut y, -alfa / beta, &r2);
        project(&mut y);
        r1 = std::mem::replace(&mut r2, y);
        oldb = beta;
        beta = inner(&r2, &r2).max(0.0).sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::MIN_POSITIVE);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let w1 = std::mem::replace(&mut w2, std::mem::take(&mut w));
        w = v
            .iter()
            .zip(&w1)
            .zip(&w2)
            .map(|((vi, a), b)| (vi - oldeps * a - delta * b) / gamma)
            .collect();
        axpy(&mut x, phi, &w);

        if phibar <= target || beta == 0.0 {
            return Ok((
                x,
                MinresOutcome {
                    iterations: itn,
                    residual: phibar,
                },
            ));
        }
    }
    Err(Error::NoConvergence {
        what: format!("MINRES (residual {phibar:.3e}, target {target:.3e})"),
        iterations: max_iter,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanczosOutcome {
    /// Ritz values, ascending.
    pub ritz: Vec<f64>,
    pub iterations: usize,
    /// Residual bound `|β_m·s_m|` of the smallest Ritz pair.
    pub residual: f64,
}

/// Lanczos with full reorthogonalization; returns the Ritz values of the
/// operator after `steps` iterations (fewer on breakdown). As in [`minres`],
/// `project` is reapplied to every new basis vector.
pub fn lanczos<A, I, P>(apply: A, inner: I, project: P, start: &[f64], steps: usize) -> Result<LanczosOutcome>
where
    A: Fn(&[f64]) -> Vec<f64>,
    I: Fn(&[f64], &[f64]) -> f64,
    P: Fn(&mut Vec<f64>),
{
    let norm0 = inner(start, start).max(0.0).sqrt();
    if norm0 == 0.0 || steps == 0 {
        return Err(Error::Degenerate("Lanczos start vector is zero".into()));
    }
    let mut basis: Vec<Vec<f64>> = vec![start.iter().map(|x| x / norm0).collect()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    for j in 0..steps {
        let mut w = apply(&basis[j]);
        let a = inner(&basis[j], &w);
        alpha.push(a);
        // two passes of Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for q in &basis {
                let c = inner(q, &w);
                axpy(&mut w, -c, q);
            }
        }
        project(&mut w);
        let b = inner(&w, &w).max(0.0).sqrt();
        if j + 1 == steps || b <= 1e-13 * a.abs().max(1.0) {
            beta.push(b);
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let ritz: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let smallest = order[0];
    let residual = (beta[m - 1] * eig.eigenvectors[(m - 1, smallest)]).abs();
    Ok(LanczosOutcome {
        ritz,
        iterations: m,
        residual,
    })
}
