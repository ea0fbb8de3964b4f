//! Intercept-bearing GLM fits: logistic regression via iteratively
//! reweighted least squares for binary targets, ordinary least squares for
//! continuous ones. Both report a deviance on the same -2 log-likelihood
//! scale so the likelihood-ratio and information criteria work unchanged
//! across families.
//!
//! Fits are pure functions of `(dataset, vars)` and safe to call
//! concurrently on a shared dataset.

use crate::dataset::{Dataset, TargetKind};
use crate::error::{Error, Result};
use crate::linalg::cholesky_solve_in_place;

/// Cap on IRLS iterations; hitting it returns `converged = false`.
const IRLS_MAX_ITER: usize = 100;
/// Stop when the relative deviance change drops below this.
const IRLS_REL_TOL: f64 = 1e-8;
/// Linear predictors are clamped to this band so separated data stay finite.
const ETA_CLAMP: f64 = 30.0;
/// One-shot ridge added when the weighted normal equations are singular.
const RIDGE: f64 = 1e-10;
/// Per-sample floor applied to the residual sum of squares before the log.
const RSS_FLOOR: f64 = 1e-12;

/// Summary of a fitted model.
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    /// -2 log-likelihood (Gaussian family: the profile form `n ln(RSS/n)`).
    pub deviance: f64,
    /// Parameter count: intercept + one slope per variable, plus the
    /// variance parameter for the Gaussian family.
    pub n_params: usize,
    pub converged: bool,
    /// Intercept first, then one coefficient per entry of `vars`.
    pub coefficients: Vec<f64>,
}

/// Dispatches on the target kind.
pub fn fit(d: &Dataset, vars: &[usize]) -> Result<FitResult> {
    match d.target_kind() {
        TargetKind::Binary => fit_logistic(d, vars),
        TargetKind::Continuous => fit_gaussian(d, vars),
    }
}

/// Maximum-likelihood logistic regression of the target on `vars`.
pub fn fit_logistic(d: &Dataset, vars: &[usize]) -> Result<FitResult> {
    if d.target_kind() != TargetKind::Binary {
        return Err(Error::InvalidArgument(
            "fit_logistic requires a binary target".into(),
        ));
    }
    check_vars(d, vars)?;

    let n = d.n();
    let m = vars.len() + 1;
    let cols: Vec<&[f64]> = vars.iter().map(|&v| d.column(v)).collect();
    let y = d.target();

    let mut beta = vec![0.0; m];
    let mut eta = vec![0.0; n];
    let mut deviance = logistic_deviance(&eta, y);
    let mut converged = false;

    let mut xtwx = vec![0.0; m * m];
    let mut xtwz = vec![0.0; m];
    let mut weights = vec![0.0; n];
    let mut wz = vec![0.0; n];
    // Weight-scaled predictor columns, one contiguous row per variable.
    let mut wx = vec![0.0; n * vars.len()];

    for _ in 0..IRLS_MAX_ITER {
        for r in 0..n {
            let mu = sigmoid(eta[r]);
            let w = mu * (1.0 - mu);
            weights[r] = w;
            // Working response contribution: w * z = w * eta + (y - mu).
            wz[r] = w * eta[r] + (y[r] - mu);
        }
        for (j, col) in cols.iter().enumerate() {
            let row = &mut wx[j * n..(j + 1) * n];
            for ((dst, &w), &x) in row.iter_mut().zip(&weights).zip(*col) {
                *dst = w * x;
            }
        }
        // Cross products against the intercept and each other.
        xtwx[0] = weights.iter().sum();
        xtwz[0] = wz.iter().sum();
        for i in 1..m {
            let wxi = &wx[(i - 1) * n..i * n];
            xtwx[i * m] = wxi.iter().sum();
            xtwz[i] = dot(cols[i - 1], &wz);
            for j in 1..=i {
                xtwx[i * m + j] = dot(wxi, cols[j - 1]);
            }
        }
        mirror_upper(&mut xtwx, m);

        let next = solve_with_ridge(&xtwx, &xtwz, m).ok_or(Error::SingularSystem)?;
        eta.iter_mut().for_each(|e| *e = next[0]);
        for (j, col) in cols.iter().enumerate() {
            let b = next[j + 1];
            for (e, &x) in eta.iter_mut().zip(*col) {
                *e += b * x;
            }
        }
        eta.iter_mut().for_each(|e| *e = e.clamp(-ETA_CLAMP, ETA_CLAMP));
        let next_dev = logistic_deviance(&eta, y);
        let done = (deviance - next_dev).abs() <= IRLS_REL_TOL * (deviance.abs() + 1.0);
        beta = next;
        deviance = next_dev;
        if done {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        deviance,
        n_params: m,
        converged,
        coefficients: beta,
    })
}

/// Ordinary least squares with profile-likelihood deviance `n ln(RSS/n)`.
/// The variance counts as one parameter so nested differences stay 1 df per
/// variable, matching the logistic family.
pub fn fit_gaussian(d: &Dataset, vars: &[usize]) -> Result<FitResult> {
    if d.target_kind() != TargetKind::Continuous {
        return Err(Error::InvalidArgument(
            "fit_gaussian requires a continuous target".into(),
        ));
    }
    check_vars(d, vars)?;

    let n = d.n();
    let m = vars.len() + 1;
    let cols: Vec<&[f64]> = vars.iter().map(|&v| d.column(v)).collect();
    let y = d.target();

    let mut xtx = vec![0.0; m * m];
    let mut xty = vec![0.0; m];
    xtx[0] = n as f64;
    xty[0] = y.iter().sum();
    for i in 1..m {
        xtx[i * m] = cols[i - 1].iter().sum();
        xty[i] = dot(cols[i - 1], y);
        for j in 1..=i {
            xtx[i * m + j] = dot(cols[i - 1], cols[j - 1]);
        }
    }
    mirror_upper(&mut xtx, m);

    let beta = solve_with_ridge(&xtx, &xty, m).ok_or(Error::RankDeficient)?;

    let mut fitted = vec![beta[0]; n];
    for (j, col) in cols.iter().enumerate() {
        let b = beta[j + 1];
        for (f, &x) in fitted.iter_mut().zip(*col) {
            *f += b * x;
        }
    }
    let mut rss = 0.0;
    for (&f, &yv) in fitted.iter().zip(y) {
        let resid = yv - f;
        rss += resid * resid;
    }
    let nf = n as f64;
    let rss = rss.max(RSS_FLOOR * nf);

    Ok(FitResult {
        deviance: nf * (rss / nf).ln(),
        n_params: vars.len() + 2,
        converged: true,
        coefficients: beta,
    })
}

fn check_vars(d: &Dataset, vars: &[usize]) -> Result<()> {
    for (i, &v) in vars.iter().enumerate() {
        if v >= d.p() {
            return Err(Error::InvalidArgument(format!(
                "variable index {v} out of range (p = {})",
                d.p()
            )));
        }
        if vars[..i].contains(&v) {
            return Err(Error::InvalidArgument(format!("duplicate variable index {v}")));
        }
    }
    Ok(())
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Four-way unrolled dot product; the fixed accumulator split keeps the
/// result deterministic while breaking the serial-add latency chain.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let chunks = a.len() / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..chunks {
        let k = 4 * i;
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    let mut total = (s0 + s1) + (s2 + s3);
    for k in (4 * chunks)..a.len() {
        total += a[k] * b[k];
    }
    total
}

/// -2 sum[y ln(mu) + (1-y) ln(1-mu)] via the softplus form, which is exact
/// for clamped linear predictors.
fn logistic_deviance(eta: &[f64], y: &[f64]) -> f64 {
    let mut ll = 0.0;
    for (&e, &yi) in eta.iter().zip(y) {
        let softplus = if e > 0.0 {
            e + (-e).exp().ln_1p()
        } else {
            e.exp().ln_1p()
        };
        ll += yi * e - softplus;
    }
    -2.0 * ll
}

fn mirror_upper(a: &mut [f64], m: usize) {
    for i in 0..m {
        for j in (i + 1)..m {
            a[i * m + j] = a[j * m + i];
        }
    }
}

fn solve_with_ridge(a: &[f64], b: &[f64], m: usize) -> Option<Vec<f64>> {
    let mut work_a = a.to_vec();
    let mut work_b = b.to_vec();
    if cholesky_solve_in_place(&mut work_a, &mut work_b, m).is_some() {
        return Some(work_b);
    }
    work_a.copy_from_slice(a);
    work_b.copy_from_slice(b);
    for i in 0..m {
        work_a[i * m + i] += RIDGE;
    }
    cholesky_solve_in_place(&mut work_a, &mut work_b, m).map(|()| work_b)
}
