//! Restarted GMRES for complex linear systems given as a matrix-free operator.

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    pub restart: usize,
    pub max_iter: usize,
    /// Relative tolerance on `||b - A x|| / ||b||`.
    pub tol: f64,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            restart: 50,
            max_iter: 200,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves `A x = b` starting from the contents of `x`. `apply(v, out)` must
/// write `A v` into `out`.
pub fn gmres(
    mut apply: impl FnMut(&[Complex64], &mut [Complex64]),
    b: &[Complex64],
    x: &mut [Complex64],
    cfg: &GmresConfig,
) -> GmresOutcome {
    let n = b.len();
    assert_eq!(x.len(), n, "gmres: dimension mismatch");
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        return GmresOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let restart = cfg.restart.max(1);
    let mut ax = vec![Complex64::new(0.0, 0.0); n];
    let mut total = 0;
    let mut rel = f64::INFINITY;

    while total < cfg.max_iter {
        apply(x, &mut ax);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        rel = beta / b_norm;
        if rel <= cfg.tol {
            return GmresOutcome {
                iterations: total,
                relative_residual: rel,
                converged: true,
            };
        }

        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(restart + 1);
        basis.push(r.iter().map(|z| z / beta).collect());
        // Hessenberg columns, already rotated into upper-triangular form.
        let mut hess: Vec<Vec<Complex64>> = Vec::with_capacity(restart);
        let mut cs: Vec<f64> = Vec::with_capacity(restart);
        let mut sn: Vec<Complex64> = Vec::with_capacity(restart);
        let mut g = vec![Complex64::new(0.0, 0.0); restart + 1];
        g[0] = Complex64::new(beta, 0.0);

        let mut steps = 0;
        for j in 0..restart {
            if total >= cfg.max_iter {
                break;
            }
            let mut w = vec![Complex64::new(0.0, 0.0); n];
            apply(&basis[j], &mut w);
            total += 1;

            let mut col = vec![Complex64::new(0.0, 0.0); j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(v, &w);
                col[i] = hij;
                w.iter_mut().zip(v).for_each(|(wk, vk)| *wk -= hij * vk);
            }
            let h_next = norm(&w);
            col[j + 1] = Complex64::new(h_next, 0.0);

            for i in 0..j {
                let (a, bb) = (col[i], col[i + 1]);
                col[i] = cs[i] * a + sn[i] * bb;
                col[i + 1] = -sn[i].conj() * a + cs[i] * bb;
            }
            let (c, s) = givens(col[j], col[j + 1]);
            col[j] = c * col[j] + s * col[j + 1];
            col[j + 1] = Complex64::new(0.0, 0.0);
            g[j + 1] = -s.conj() * g[j];
            g[j] *= c;
            cs.push(c);
            sn.push(s);
            hess.push(col);
            steps = j + 1;

            rel = g[j + 1].norm() / b_norm;
            if rel <= cfg.tol || h_next <= 1e-14 * beta {
                break;
            }
            basis.push(w.iter().map(|z| z / h_next).collect());
        }

        // Back substitution for the small triangular system.
        let mut y = vec![Complex64::new(0.0, 0.0); steps];
        for i in (0..steps).rev() {
            let mut acc = g[i];
            for (l, yl) in y.iter().enumerate().skip(i + 1) {
                acc -= hess[l][i] * yl;
            }
            y[i] = acc / hess[i][i];
        }
        for (yi, v) in y.iter().zip(&basis) {
            x.iter_mut().zip(v).for_each(|(xk, vk)| *xk += yi * vk);
        }
        if rel <= cfg.tol {
            apply(x, &mut ax);
            let true_rel = norm(
                &b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>(),
            ) / b_norm;
            return GmresOutcome {
                iterations: total,
                relative_residual: true_rel,
                converged: true_rel <= cfg.tol * 10.0,
            };
        }
    }
    GmresOutcome {
        iterations: total,
        relative_residual: rel,
        converged: false,
    }
}

/// Complex Givens rotation `(c, s)` with real `c` that annihilates `b` in `(a, b)`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let (na, nb) = (a.norm(), b.norm());
    if nb == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let r = na.hypot(nb);
    (na / r, (a / na) * b.conj() / r)
}
