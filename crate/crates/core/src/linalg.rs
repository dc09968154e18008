//! Small dense-vector helpers over `f64` slices.

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn norm_sq(v: &[f64]) -> f64 {
    dot(v, v)
}

pub fn dist(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub fn sub(u: &[f64], v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(a, b)| a - b).collect()
}

/// `alpha * u + beta * v`
pub fn lincomb(alpha: f64, u: &[f64], beta: f64, v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(a, b)| alpha * a + beta * b).collect()
}

pub fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Row-major square matrix times vector.
pub fn matvec(m: &[f64], n: usize, v: &[f64], out: &mut [f64]) {
    debug_assert_eq!(m.len(), n * n);
    for (i, o) in out.iter_mut().enumerate().take(n) {
        *o = dot(&m[i * n..(i + 1) * n], v);
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration, returned as the Rayleigh quotient of the final iterate.
pub fn power_iteration(m: &[f64], n: usize, max_iter: usize, tol: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    // Non-uniform start so that the iterate is not orthogonal to the leading
    // eigenvector of structured matrices.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        matvec(m, n, &v, &mut w);
        let next = dot(&v, &w) / dot(&v, &v);
        let nw = norm(&w);
        if nw == 0.0 {
            return 0.0;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
        let done = (next - lambda).abs() <= tol * next.abs().max(1.0);
        lambda = next;
        if done {
            break;
        }
    }
    matvec(m, n, &v, &mut w);
    dot(&v, &w) / dot(&v, &v)
}

/// Solve `m x = rhs` for symmetric positive definite `m` (row-major) by
/// Cholesky factorization. Returns `None` if `m` is not positive definite.
pub fn cholesky_solve(m: &[f64], n: usize, rhs: &[f64]) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            if i == j {
                let d = m[i * n + i] - s;
                if d <= 0.0 || !d.is_finite() {
                    return None;
                }
                l[i * n + i] = d.sqrt();
            } else {
                l[i * n + j] = (m[i * n + j] - s) / l[j * n + j];
            }
        }
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * z[k]).sum();
        z[i] = (rhs[i] - s) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i * n + i];
    }
    Some(x)
}
