//! Thomas algorithm for `(I - c D2) u = rhs` with Dirichlet end rows.

/// Solves `-r u[i-1] + (1 + 2r) u[i] - r u[i+1] = rhs[i]` on the interior,
/// with `u[0] = left` and `u[n-1] = right`. `rhs` is overwritten with `u`.
pub(crate) fn solve_implicit_diffusion(r: f64, left: f64, right: f64, rhs: &mut [f64]) {
    let n = rhs.len();
    debug_assert!(n >= 3);
    rhs[0] = left;
    rhs[n - 1] = right;
    // interior unknowns 1..n-2; fold boundary values into the source
    rhs[1] += r * left;
    rhs[n - 2] += r * right;
    let diag = 1.0 + 2.0 * r;
    let m = n - 2;
    let mut c_prime = vec![0.0; m];
    c_prime[0] = -r / diag;
    rhs[1] /= diag;
    for k in 1..m {
        let denom = diag + r * c_prime[k - 1];
        c_prime[k] = -r / denom;
        rhs[k + 1] = (rhs[k + 1] + r * rhs[k]) / denom;
    }
    for k in (0..m - 1).rev() {
        rhs[k + 1] -= c_prime[k] * rhs[k + 2];
    }
}
