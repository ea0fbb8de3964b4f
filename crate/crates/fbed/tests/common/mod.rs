//! Shared test oracles. Everything here is deliberately independent of the
//! library's implementation paths: quadrature instead of incomplete gamma,
//! full Newton instead of IRLS, Gaussian elimination instead of Cholesky,
//! and path enumeration instead of trail reachability.

#![allow(dead_code)]

use fbed::graphs::Dag;
use fbed::Dataset;

/// chi^2_k survival function by adaptive Simpson quadrature of the density.
/// The substitution t = u^2 removes the k = 1 endpoint singularity, so the
/// integrand 2 u^{k-1} e^{-u^2/2} / (2^{k/2} Gamma(k/2)) is smooth.
pub fn chi2_sf_quadrature(x: f64, k: usize) -> f64 {
    assert!(k >= 1 && x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    let norm = 2.0_f64.powf(k as f64 / 2.0) * gamma_exact_half(k);
    let f = |u: f64| 2.0 * u.powi(k as i32 - 1) * (-u * u / 2.0).exp() / norm;
    let cdf = adaptive_simpson(&f, 0.0, x.sqrt(), 1e-12, 40);
    (1.0 - cdf).clamp(0.0, 1.0)
}

/// Gamma(k/2) exactly: factorials for even k, the half-integer closed form
/// (2m)! sqrt(pi) / (4^m m!) for odd k.
fn gamma_exact_half(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        let m = k / 2; // Gamma(m) = (m-1)!
        (1..m).map(|i| i as f64).product()
    } else {
        let m = (k - 1) / 2; // Gamma(m + 1/2)
        let mut v = std::f64::consts::PI.sqrt();
        for i in 0..m {
            v *= i as f64 + 0.5;
        }
        v
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let c = 0.5 * (a + b);
    let fa = f(a);
    let fb = f(b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        simpson_step(f, a, c, fa, fc, fd, left, tol / 2.0, depth - 1)
            + simpson_step(f, c, b, fc, fb, fe, right, tol / 2.0, depth - 1)
    }
}

/// Dense solve by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let m = b.len();
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..m {
            let f = a[row][col] / a[col][col];
            for k in col..m {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let mut v = b[row];
        for k in (row + 1)..m {
            v -= a[row][k] * x[k];
        }
        x[row] = v / a[row][row];
    }
    x
}

/// Logistic deviance by undamped Newton iteration on the log-likelihood,
/// stopping on the gradient norm. No clamping, no working response.
pub fn newton_logistic_deviance(d: &Dataset, vars: &[usize]) -> f64 {
    let n = d.n();
    let m = vars.len() + 1;
    let y = d.target();
    let x = |i: usize, r: usize| if i == 0 { 1.0 } else { d.column(vars[i - 1])[r] };

    let mut beta = vec![0.0; m];
    for _ in 0..200 {
        let mut grad = vec![0.0; m];
        let mut hess = vec![vec![0.0; m]; m];
        for r in 0..n {
            let mut eta = 0.0;
            for i in 0..m {
                eta += beta[i] * x(i, r);
            }
            let mu = 1.0 / (1.0 + (-eta).exp());
            let w = mu * (1.0 - mu);
            for i in 0..m {
                grad[i] += (y[r] - mu) * x(i, r);
                for j in 0..m {
                    hess[i][j] += w * x(i, r) * x(j, r);
                }
            }
        }
        if grad.iter().all(|g| g.abs() < 1e-10) {
            break;
        }
        let step = gauss_solve(hess, grad);
        for i in 0..m {
            beta[i] += step[i];
        }
    }

    let mut ll = 0.0;
    for r in 0..n {
        let mut eta = 0.0;
        for i in 0..m {
            eta += beta[i] * x(i, r);
        }
        let softplus = if eta > 0.0 {
            eta + (-eta).exp().ln_1p()
        } else {
            eta.exp().ln_1p()
        };
        ll += y[r] * eta - softplus;
    }
    -2.0 * ll
}

/// d-separation by brute force: enumerate every simple path between x and y
/// and apply the blocking rule directly. Only for small graphs.
pub fn d_separated_by_enumeration(g: &Dag, x: usize, y: usize, z: &[usize]) -> bool {
    let n = g.n_nodes();
    let mut descendants_in_z = vec![false; n];
    for v in 0..n {
        // v has a descendant in z (or is in z itself)?
        let mut stack = vec![v];
        let mut seen = vec![false; n];
        while let Some(u) = stack.pop() {
            if seen[u] {
                continue;
            }
            seen[u] = true;
            if z.contains(&u) {
                descendants_in_z[v] = true;
                break;
            }
            stack.extend_from_slice(g.children_of(u));
        }
    }

    // DFS over the skeleton collecting simple paths from x to y.
    let mut path = vec![x];
    let mut on_path = vec![false; n];
    on_path[x] = true;
    let mut all_blocked = true;
    explore(
        g,
        y,
        z,
        &descendants_in_z,
        &mut path,
        &mut on_path,
        &mut all_blocked,
    );
    all_blocked
}

fn explore(
    g: &Dag,
    y: usize,
    z: &[usize],
    descendants_in_z: &[bool],
    path: &mut Vec<usize>,
    on_path: &mut Vec<bool>,
    all_blocked: &mut bool,
) {
    if !*all_blocked {
        return;
    }
    let last = *path.last().unwrap();
    if last == y {
        if !path_blocked(g, path, z, descendants_in_z) {
            *all_blocked = false;
        }
        return;
    }
    let mut neighbors: Vec<usize> = Vec::new();
    neighbors.extend_from_slice(g.parents_of(last));
    neighbors.extend_from_slice(g.children_of(last));
    for next in neighbors {
        if on_path[next] {
            continue;
        }
        path.push(next);
        on_path[next] = true;
        explore(g, y, z, descendants_in_z, path, on_path, all_blocked);
        path.pop();
        on_path[next] = false;
    }
}

/// The blocking rule: some non-endpoint node is a conditioned non-collider,
/// or an unconditioned collider with no descendant in z.
fn path_blocked(g: &Dag, path: &[usize], z: &[usize], descendants_in_z: &[bool]) -> bool {
    for w in 1..path.len() - 1 {
        let (prev, node, next) = (path[w - 1], path[w], path[w + 1]);
        let into_left = g.parents_of(node).contains(&prev);
        let into_right = g.parents_of(node).contains(&next);
        let collider = into_left && into_right;
        if collider {
            if !descendants_in_z[node] {
                return true;
            }
        } else if z.contains(&node) {
            return true;
        }
    }
    false
}

/// ln C(n, k) by direct summation.
pub fn ln_choose_by_summation(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (((n - i) as f64) / ((i + 1) as f64)).ln()).sum()
}
