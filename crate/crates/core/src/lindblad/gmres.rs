//! Restarted, right-preconditioned GMRES for complex systems.

use crate::C64;

pub(crate) struct GmresOutcome {
    pub x: Vec<C64>,
    pub iterations: usize,
    pub rel_residual: f64,
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Solves `A x = b` with `A` and `M⁻¹` given as closures. Stores the
/// preconditioned directions, so a changing preconditioner is fine.
pub(crate) fn gmres<A, M>(
    apply_a: A,
    apply_m_inv: M,
    b: &[C64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> GmresOutcome
where
    A: Fn(&[C64]) -> Vec<C64>,
    M: Fn(&[C64]) -> Vec<C64>,
{
    let n = b.len();
    let b_norm = norm(b).max(f64::MIN_POSITIVE);
    let mut x = vec![C64::new(0.0, 0.0); n];
    let mut total = 0usize;
    let mut rel = 1.0;

    while total < max_iter {
        let ax = apply_a(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        rel = beta / b_norm;
        if rel <= tol {
            break;
        }
        let m = restart.min(max_iter - total).max(1);
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        let mut dirs: Vec<Vec<C64>> = Vec::with_capacity(m);
        let mut hess: Vec<Vec<C64>> = Vec::with_capacity(m);
        let mut rot: Vec<(f64, C64)> = Vec::with_capacity(m);
        let mut g = vec![C64::new(0.0, 0.0); m + 1];
        g[0] = C64::new(beta, 0.0);
        basis.push(r.iter().map(|v| v / beta).collect());

        let mut k = 0;
        while k < m {
            let z = apply_m_inv(&basis[k]);
            let mut w = apply_a(&z);
            dirs.push(z);
            let mut col = vec![C64::new(0.0, 0.0); k + 2];
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let h = dot(v, &w);
                    col[i] += h;
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= h * vi);
                }
            }
            let h_next = norm(&w);
            col[k + 1] = C64::new(h_next, 0.0);
            for (i, &(c, s)) in rot.iter().enumerate() {
                let (a, bb) = (col[i], col[i + 1]);
                col[i] = c * a + s * bb;
                col[i + 1] = -s.conj() * a + c * bb;
            }
            let (a, bb) = (col[k], col[k + 1]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if a.norm() == 0.0 {
                (0.0, C64::new(1.0, 0.0))
            } else {
                (a.norm() / den, (a / a.norm()) * bb.conj() / den)
            };
            col[k] = c * a + s * bb;
            col[k + 1] = C64::new(0.0, 0.0);
            let gk = g[k];
            g[k] = c * gk;
            g[k + 1] = -s.conj() * gk;
            rot.push((c, s));
            hess.push(col);
            k += 1;
            total += 1;
            rel = g[k].norm() / b_norm;
            if rel <= tol || h_next == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / h_next).collect());
        }

        // back substitution on the k×k triangular system
        let mut y = vec![C64::new(0.0, 0.0); k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for j in i + 1..k {
                acc -= hess[j][i] * y[j];
            }
            y[i] = acc / hess[i][i];
        }
        for (yj, z) in y.iter().zip(&dirs) {
            x.iter_mut().zip(z).for_each(|(xi, zi)| *xi += yj * zi);
        }
        if rel <= tol {
            // recompute the true residual before returning
            let ax = apply_a(&x);
            let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            rel = norm(&r) / b_norm;
            if rel <= tol * 10.0 {
                break;
            }
        }
    }
    GmresOutcome { x, iterations: total, rel_residual: rel }
}
