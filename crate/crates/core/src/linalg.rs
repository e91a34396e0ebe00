//! Tridiagonal elimination for the Newton steps of the implicit solvers.

/// Solve a tridiagonal system A x = rhs by the Thomas algorithm.
///
/// A is given by `sub[i] = A_{i+1,i}` (length n-1), `diag[i] = A_{i,i}`
/// (length n), `sup[i] = A_{i,i+1}` (length n-1). The systems assembled by
/// the flow and elliptic solvers are strictly diagonally dominant, so no
/// pivoting is needed.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(n > 0, "empty tridiagonal system");
    assert_eq!(rhs.len(), n);
    if n > 1 {
        assert_eq!(sub.len(), n - 1);
        assert_eq!(sup.len(), n - 1);
    }

    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];

    c[0] = if n > 1 { sup[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = sup[i] / m;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / m;
    }

    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}
