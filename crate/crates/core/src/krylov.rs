//! Restarted GMRES and BiCGSTAB over an abstract operator, with optional
//! left Jacobi preconditioning.
//!
//! Both solvers stop on the absolute 2-norm of the preconditioned residual
//! `P^-1 (b - A x)`. When a sum tolerance is given they additionally require
//! `|sum(x) - sum(b)|` to be within it, which for a column-stochastic operator
//! is the total of the unpreconditioned residual.

/// A square linear map `y = A x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

/// Dense column-major operator, mostly useful in tests.
impl LinearOperator for nalgebra::DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nrows();
        y.iter_mut().for_each(|v| *v = 0.0);
        for (c, &xc) in x.iter().enumerate() {
            let col = &self.as_slice()[c * n..(c + 1) * n];
            for (yi, &a) in y.iter_mut().zip(col) {
                *yi += a * xc;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    pub sum_tol: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct KrylovOutcome {
    pub x: Vec<f64>,
    /// Operator applications inside the iteration (one per GMRES step,
    /// two per BiCGSTAB step are counted as one iteration).
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Peak number of f64 values held by the solver's own buffers.
    pub workspace_values: usize,
}

struct Preconditioned<'a, A> {
    op: &'a A,
    inv_diag: Option<&'a [f64]>,
}

impl<A: LinearOperator> Preconditioned<'_, A> {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.op.apply(x, y);
        self.scale(y);
    }

    fn scale(&self, y: &mut [f64]) {
        if let Some(d) = self.inv_diag {
            y.iter_mut().zip(d).for_each(|(v, s)| *v *= s);
        }
    }

    // P^-1 (b - A x)
    fn residual(&self, b: &[f64], x: &[f64], r: &mut [f64]) {
        self.op.apply(x, r);
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
        self.scale(r);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn sum_ok(x: &[f64], b_sum: f64, sum_tol: Option<f64>) -> bool {
    sum_tol.is_none_or(|t| (x.iter().sum::<f64>() - b_sum).abs() <= t)
}

/// Applies the stopping rule to `x`, leaving its preconditioned residual in
/// `r`. When only the sum test fails, the defect is spread evenly over `x`
/// and kept if the residual still passes.
fn accept<A: LinearOperator>(
    pre: &Preconditioned<'_, A>,
    b: &[f64],
    b_sum: f64,
    x: &mut [f64],
    r: &mut [f64],
    opts: &KrylovOptions,
) -> (bool, f64) {
    pre.residual(b, x, r);
    let residual = norm2(r);
    if residual > opts.tol || sum_ok(x, b_sum, opts.sum_tol) {
        return (residual <= opts.tol, residual);
    }
    let shift = (b_sum - x.iter().sum::<f64>()) / x.len() as f64;
    x.iter_mut().for_each(|v| *v += shift);
    pre.residual(b, x, r);
    let corrected = norm2(r);
    if corrected <= opts.tol && sum_ok(x, b_sum, opts.sum_tol) {
        return (true, corrected);
    }
    x.iter_mut().for_each(|v| *v -= shift);
    pre.residual(b, x, r);
    (false, residual)
}

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations.
pub fn gmres<A: LinearOperator>(
    op: &A,
    inv_diag: Option<&[f64]>,
    b: &[f64],
    x0: Vec<f64>,
    opts: &KrylovOptions,
) -> KrylovOutcome {
    let n = op.dim();
    assert_eq!(b.len(), n);
    assert_eq!(x0.len(), n);
    let pre = Preconditioned { op, inv_diag };
    let m = opts.restart.max(1).min(n.max(1));
    let b_sum: f64 = b.iter().sum();

    let mut x = x0;
    let mut r = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut h = vec![vec![0.0; m]; m + 1];
    let (mut cs, mut sn, mut g) = (vec![0.0; m], vec![0.0; m], vec![0.0; m + 1]);
    let mut iterations = 0;
    let mut residual;
    let mut peak_vectors = 0;

    loop {
        let (ok, res) = accept(&pre, b, b_sum, &mut x, &mut r, opts);
        residual = res;
        if ok {
            return finish(x, iterations, residual, true, peak_vectors, n, m);
        }
        if iterations >= opts.max_iter || residual == 0.0 {
            break;
        }

        basis.clear();
        basis.push(r.iter().map(|v| v / residual).collect());
        g.iter_mut().for_each(|v| *v = 0.0);
        g[0] = residual;
        let mut steps = 0;

        for j in 0..m {
            let mut w = vec![0.0; n];
            pre.apply(&basis[j], &mut w);
            iterations += 1;
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                h[i][j] = hij;
                w.iter_mut().zip(v).for_each(|(wk, vk)| *wk -= hij * vk);
            }
            let hnext = norm2(&w);
            h[j + 1][j] = hnext;

            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = h[j][j].hypot(h[j + 1][j]);
            if denom == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = h[j][j] / denom;
                sn[j] = h[j + 1][j] / denom;
            }
            h[j][j] = cs[j] * h[j][j] + sn[j] * h[j + 1][j];
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            steps = j + 1;

            let breakdown = hnext <= f64::EPSILON * residual;
            if !breakdown {
                w.iter_mut().for_each(|v| *v /= hnext);
                basis.push(w);
            }
            peak_vectors = peak_vectors.max(basis.len() + 1);
            if g[j + 1].abs() <= opts.tol || breakdown || iterations >= opts.max_iter {
                break;
            }
        }

        // back substitution for the least-squares coefficients
        let mut y = vec![0.0; steps];
        for i in (0..steps).rev() {
            let mut acc = g[i];
            for k in i + 1..steps {
                acc -= h[i][k] * y[k];
            }
            y[i] = if h[i][i] != 0.0 { acc / h[i][i] } else { 0.0 };
        }
        for (yi, v) in y.iter().zip(&basis) {
            x.iter_mut().zip(v).for_each(|(xk, vk)| *xk += yi * vk);
        }
    }

    let (converged, residual) = accept(&pre, b, b_sum, &mut x, &mut r, opts);
    finish(x, iterations, residual, converged, peak_vectors, n, m)
}

fn finish(
    x: Vec<f64>,
    iterations: usize,
    residual: f64,
    converged: bool,
    peak_vectors: usize,
    n: usize,
    m: usize,
) -> KrylovOutcome {
    // x, r, Krylov basis (+ work vector), Hessenberg and rotations
    let workspace_values = 2 * n + peak_vectors * n + (m + 1) * m + 3 * m + 1;
    KrylovOutcome {
        x,
        iterations,
        residual,
        converged,
        workspace_values,
    }
}

/// Preconditioned BiCGSTAB. Each iteration applies the operator twice.
pub fn bicgstab<A: LinearOperator>(
    op: &A,
    inv_diag: Option<&[f64]>,
    b: &[f64],
    x0: Vec<f64>,
    opts: &KrylovOptions,
) -> KrylovOutcome {
    let n = op.dim();
    assert_eq!(b.len(), n);
    assert_eq!(x0.len(), n);
    let pre = Preconditioned { op, inv_diag };
    let b_sum: f64 = b.iter().sum();
    let workspace_values = 8 * n;

    let mut x = x0;
    let mut r = vec![0.0; n];
    let (ok, mut residual) = accept(&pre, b, b_sum, &mut x, &mut r, opts);
    if ok {
        return KrylovOutcome {
            x,
            iterations: 0,
            residual,
            converged: true,
            workspace_values,
        };
    }
    let mut r_hat = r.clone();
    let (mut p, mut v) = (vec![0.0; n], vec![0.0; n]);
    let (mut s, mut t) = (vec![0.0; n], vec![0.0; n]);
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut best = (x.clone(), residual);
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let rho_next = dot(&r_hat, &r);
        if rho_next == 0.0 || omega == 0.0 {
            break;
        }
        let beta = (rho_next / rho) * (alpha / omega);
        rho = rho_next;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        pre.apply(&p, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            break;
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        let half_step = norm2(&s) <= opts.tol;
        if half_step {
            x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        } else {
            pre.apply(&s, &mut t);
            let tt = dot(&t, &t);
            omega = if tt == 0.0 { 0.0 } else { dot(&t, &s) / tt };
            for i in 0..n {
                x[i] += alpha * p[i] + omega * s[i];
                r[i] = s[i] - omega * t[i];
            }
            residual = norm2(&r);
        }
        if half_step || residual <= opts.tol {
            // the recurrence residual drifts; judge the true one and restart from it
            let (ok, res) = accept(&pre, b, b_sum, &mut x, &mut r, opts);
            residual = res;
            if ok {
                return KrylovOutcome {
                    x,
                    iterations,
                    residual,
                    converged: true,
                    workspace_values,
                };
            }
            r_hat.copy_from_slice(&r);
            p.iter_mut().for_each(|v| *v = 0.0);
            v.iter_mut().for_each(|v| *v = 0.0);
            (rho, alpha, omega) = (1.0, 1.0, 1.0);
        }
        if residual < best.1 {
            best = (x.clone(), residual);
        }
    }

    let (mut x, _) = best;
    let (converged, residual) = accept(&pre, b, b_sum, &mut x, &mut r, opts);
    KrylovOutcome {
        x,
        iterations,
        residual,
        converged,
        workspace_values,
    }
}
