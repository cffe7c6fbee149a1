//! Unconstrained minimization: Nelder-Mead simplex followed by BFGS on
//! central finite-difference gradients.
//!
//! Objectives signal infeasible points by returning `+inf` (or NaN, which is
//! treated the same way).

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub grad_norm: f64,
    pub converged: bool,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    /// Relative change in the objective treated as no progress.
    pub ftol: f64,
    /// Gradient-norm threshold, scaled by `1 + |f|`.
    pub gtol: f64,
    pub max_simplex_evals: usize,
    pub max_bfgs_iters: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            ftol: 1e-8,
            gtol: 1e-6,
            max_simplex_evals: 4000,
            max_bfgs_iters: 500,
        }
    }
}

#[inline]
fn clean(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

struct Counted<'a, F> {
    f: &'a F,
    evals: usize,
}

impl<F: Fn(&[f64]) -> f64> Counted<'_, F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        clean((self.f)(x))
    }
}

/// Nelder-Mead with dimension-adaptive coefficients.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    steps: &[f64],
    max_evals: usize,
    ftol: f64,
) -> Minimum {
    let n = x0.len();
    let mut cf = Counted { f, evals: 0 };
    if n == 0 {
        let fx = cf.call(x0);
        return Minimum {
            x: Vec::new(),
            fx,
            grad_norm: 0.0,
            converged: true,
            evals: 1,
        };
    }
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += steps[i];
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| cf.call(p)).collect();

    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let worst = values[n];
        let spread = (worst - best).abs();
        if best.is_finite() && spread <= ftol * (best.abs() + 1e-10) || cf.evals >= max_evals {
            break;
        }

        let mut centroid = vec![0.0; n];
        for p in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = cf.call(&xr);
        if fr < values[0] {
            let xe = along(alpha * gamma);
            let fe = cf.call(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(alpha * rho);
            let fc = cf.call(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = cf.call(&xc);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=n {
            let p: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, v)| b + sigma * (v - b))
                .collect();
            values[i] = cf.call(&p);
            simplex[i] = p;
        }
    }
    let evals = cf.evals;
    Minimum {
        x: simplex.swap_remove(0),
        fx: values[0],
        grad_norm: f64::NAN,
        converged: false,
        evals,
    }
}

fn fd_step(x: f64) -> f64 {
    1e-5 * x.abs().max(1.0)
}

/// Central-difference gradient; falls back to a one-sided difference where
/// one neighbour is infeasible.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<f64> {
    let fx = clean(f(x));
    let mut g = vec![0.0; x.len()];
    let mut p = x.to_vec();
    for i in 0..x.len() {
        let h = fd_step(x[i]);
        p[i] = x[i] + h;
        let fp = clean(f(&p));
        p[i] = x[i] - h;
        let fm = clean(f(&p));
        p[i] = x[i];
        g[i] = match (fp.is_finite(), fm.is_finite()) {
            (true, true) => (fp - fm) / (2.0 * h),
            (true, false) => (fp - fx) / h,
            (false, true) => (fx - fm) / h,
            (false, false) => f64::NAN,
        };
    }
    g
}

/// Central-difference Hessian.
pub fn fd_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut hess = vec![vec![0.0; n]; n];
    let hs: Vec<f64> = x.iter().map(|v| 1e-4 * v.abs().max(1.0)).collect();
    let mut p = x.to_vec();
    let fx = clean(f(x));
    for i in 0..n {
        p[i] = x[i] + hs[i];
        let fp = clean(f(&p));
        p[i] = x[i] - hs[i];
        let fm = clean(f(&p));
        p[i] = x[i];
        hess[i][i] = (fp - 2.0 * fx + fm) / (hs[i] * hs[i]);
        for j in 0..i {
            let mut eval = |di: f64, dj: f64| {
                p[i] = x[i] + di * hs[i];
                p[j] = x[j] + dj * hs[j];
                let v = clean(f(&p));
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                / (4.0 * hs[i] * hs[j]);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    hess
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// BFGS with Armijo backtracking.
pub fn bfgs<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], opts: &Options) -> Minimum {
    let n = x0.len();
    let mut evals = 0usize;
    let mut x = x0.to_vec();
    let mut fx = clean(f(&x));
    evals += 1;
    let mut g = fd_gradient(f, &x);
    evals += 2 * n + 1;
    let mut hinv = identity(n);
    let mut first = true;
    let mut stalls = 0;

    for _ in 0..opts.max_bfgs_iters {
        let gn = norm(&g);
        if !gn.is_finite() || gn <= opts.gtol * (1.0 + fx.abs()) {
            break;
        }
        let mut dir: Vec<f64> = hinv.iter().map(|row| -dot(row, &g)).collect();
        if dot(&dir, &g) >= 0.0 {
            hinv = identity(n);
            dir = g.iter().map(|v| -v).collect();
        }
        let slope = dot(&dir, &g);
        let mut t = if first { 1.0 / gn.max(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let fnew = clean(f(&xn));
            evals += 1;
            if fnew.is_finite() && fnew <= fx + 1e-4 * t * slope {
                accepted = Some((xn, fnew));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            if first {
                break;
            }
            // lost curvature information; restart from steepest descent
            hinv = identity(n);
            first = true;
            continue;
        };
        let gnew = fd_gradient(f, &xn);
        evals += 2 * n + 1;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && y.iter().all(|v| v.is_finite()) {
            if first {
                let scale = sy / dot(&y, &y);
                hinv = identity(n);
                for (i, row) in hinv.iter_mut().enumerate() {
                    row[i] = scale;
                }
            }
            let hy: Vec<f64> = hinv.iter().map(|row| dot(row, &y)).collect();
            let yhy = dot(&y, &hy);
            let r = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    hinv[i][j] += (1.0 + yhy * r) * r * s[i] * s[j] - r * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
            first = false;
        }
        let rel = (fx - fnew).abs() / (1.0 + fx.abs());
        x = xn;
        fx = fnew;
        g = gnew;
        if rel < 1e-15 {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    let grad_norm = norm(&g);
    Minimum {
        converged: grad_norm.is_finite() && grad_norm <= opts.gtol * (1.0 + fx.abs()),
        x,
        fx,
        grad_norm,
        evals,
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Simplex search, then BFGS refinement; repeats once from the refined point
/// when the gradient test fails. Never returns a point worse than `x0`.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], steps: &[f64], opts: &Options) -> Minimum {
    let start_val = clean(f(x0));
    let mut best = Minimum {
        x: x0.to_vec(),
        fx: start_val,
        grad_norm: f64::NAN,
        converged: false,
        evals: 1,
    };
    let mut from = x0.to_vec();
    let mut total = 1;
    for round in 0..2 {
        let nm_steps: Vec<f64> = if round == 0 {
            steps.to_vec()
        } else {
            steps.iter().map(|s| 0.1 * s).collect()
        };
        let nm = nelder_mead(f, &from, &nm_steps, opts.max_simplex_evals, opts.ftol * 1e-4);
        total += nm.evals;
        let start = if nm.fx <= best.fx { nm.x } else { best.x.clone() };
        let mut refined = bfgs(f, &start, opts);
        total += refined.evals;
        refined.evals = total;
        if refined.fx <= best.fx {
            best = refined;
        } else {
            best.evals = total;
        }
        if best.converged {
            break;
        }
        from = best.x.clone();
    }
    if !best.grad_norm.is_finite() && best.fx.is_finite() {
        best.grad_norm = norm(&fd_gradient(f, &best.x));
        best.converged = best.grad_norm <= opts.gtol * (1.0 + best.fx.abs());
    }
    best
}
