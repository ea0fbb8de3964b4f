//! Small dense symmetric solves for the normal equations. Systems here are
//! (k+1) x (k+1) with k the number of selected variables, so a plain
//! Cholesky factorization is all that is needed.

/// Solves `a x = b` for symmetric positive-definite `a` (row-major, square).
/// Returns `None` when a pivot is non-positive or non-finite. `a` and `b`
/// are clobbered; the solution ends up in `b`.
pub(crate) fn cholesky_solve_in_place(a: &mut [f64], b: &mut [f64], m: usize) -> Option<()> {
    debug_assert_eq!(a.len(), m * m);
    debug_assert_eq!(b.len(), m);

    // Factor: a[i*m+j] (j <= i) becomes L.
    for j in 0..m {
        let mut diag = a[j * m + j];
        for k in 0..j {
            diag -= a[j * m + k] * a[j * m + k];
        }
        if !diag.is_finite() || diag <= 0.0 {
            return None;
        }
        let root = diag.sqrt();
        a[j * m + j] = root;
        for i in (j + 1)..m {
            let mut v = a[i * m + j];
            for k in 0..j {
                v -= a[i * m + k] * a[j * m + k];
            }
            a[i * m + j] = v / root;
        }
    }
    // Forward substitution: L y = b.
    for i in 0..m {
        let mut v = b[i];
        for k in 0..i {
            v -= a[i * m + k] * b[k];
        }
        b[i] = v / a[i * m + i];
    }
    // Back substitution: L^T x = y.
    for i in (0..m).rev() {
        let mut v = b[i];
        for k in (i + 1)..m {
            v -= a[k * m + i] * b[k];
        }
        b[i] = v / a[i * m + i];
    }
    if b.iter().all(|v| v.is_finite()) {
        Some(())
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        // a = [[4,2],[2,3]], b = [10, 8] -> x = [1.75, 1.5]
        let mut a = vec![4.0, 2.0, 2.0, 3.0];
        let mut b = vec![10.0, 8.0];
        cholesky_solve_in_place(&mut a, &mut b, 2).unwrap();
        assert!((b[0] - 1.75).abs() < 1e-12);
        assert!((b[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        let mut a = vec![0.0, 1.0, 1.0, 0.0];
        let mut b = vec![1.0, 1.0];
        assert!(cholesky_solve_in_place(&mut a, &mut b, 2).is_none());
    }
}
