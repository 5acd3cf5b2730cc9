use nalgebra::{DMatrix, DVector};

/// Naive triple-loop product.
pub fn matmul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.nrows());
    let mut out = DMatrix::zeros(a.nrows(), b.ncols());
    for i in 0..a.nrows() {
        for j in 0..b.ncols() {
            let mut acc = 0.0;
            for k in 0..a.ncols() {
                acc += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

pub fn matvec(a: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(a.nrows(), |i, _| {
        (0..a.ncols()).map(|k| a[(i, k)] * x[k]).sum()
    })
}

pub fn transpose(a: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)])
}

/// `J K J` with `J = I − 𝟙𝟙ᵀ/N` built explicitly.
pub fn center_gram_triple(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    let j = DMatrix::from_fn(n, n, |a, b| if a == b { 1.0 } else { 0.0 } - 1.0 / n as f64);
    matmul(&matmul(&j, k), &j)
}

/// Cyclic Jacobi eigensolver. Returns eigenvalues in descending order and
/// the matching unit eigenvectors as columns.
pub fn jacobi_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].partial_cmp(&a[(x, x)]).unwrap());
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Gaussian elimination with partial pivoting; returns the solution and
/// the log-absolute determinant of `a`.
pub fn solve_with_logdet(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut rhs = b.clone();
    let mut logdet = 0.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| m[(x, col)].abs().partial_cmp(&m[(y, col)].abs()).unwrap())
            .unwrap();
        m.swap_rows(col, pivot);
        rhs.swap_rows(col, pivot);
        let p = m[(col, col)];
        assert!(p != 0.0, "singular matrix");
        logdet += p.abs().ln();
        for r in (col + 1)..n {
            let f = m[(r, col)] / p;
            for c in col..n {
                m[(r, c)] -= f * m[(col, c)];
            }
            for c in 0..rhs.ncols() {
                rhs[(r, c)] -= f * rhs[(col, c)];
            }
        }
    }
    for c in 0..rhs.ncols() {
        for r in (0..n).rev() {
            let mut acc = rhs[(r, c)];
            for k in (r + 1)..n {
                acc -= m[(r, k)] * rhs[(k, c)];
            }
            rhs[(r, c)] = acc / m[(r, r)];
        }
    }
    (rhs, logdet)
}

pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (x, _) = solve_with_logdet(a, &DMatrix::from_column_slice(b.len(), 1, b.as_slice()));
    x.column(0).into_owned()
}

pub fn inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    solve_with_logdet(a, &DMatrix::identity(n, n)).0
}

/// Sum of multivariate normal log-densities of the columns of `x`, using
/// an explicitly inverted covariance.
pub fn dense_mvn_loglik(x: &DMatrix<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let d = cov.nrows();
    let (inv, logdet) = solve_with_logdet(cov, &DMatrix::identity(d, d));
    let mut total = 0.0;
    for j in 0..x.ncols() {
        let y = DVector::from_fn(d, |i, _| x[(i, j)] - mean[i]);
        let quad = y.dot(&matvec(&inv, &y));
        total += -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + quad);
    }
    total
}

/// Classical kernel PCA on a centered Gram matrix: component scores
/// `z_p = ε_pᵀk / √λ_p` and the kernel-space reconstruction
/// `Σ_p z_p √λ_p ε_p`.
pub fn kpca(kc: &DMatrix<f64>, k: &DVector<f64>, q: usize) -> (DVector<f64>, DVector<f64>) {
    let (vals, vecs) = jacobi_eigen(kc);
    let mut z = DVector::zeros(q);
    let mut recon = DVector::zeros(k.len());
    for p in 0..q {
        let e = vecs.column(p);
        z[p] = e.dot(k) / vals[p].sqrt();
        recon += e * (z[p] * vals[p].sqrt());
    }
    (z, recon)
}

/// `argmin_h ‖y − W h‖² + s2 ‖h‖²` through the normal equations.
pub fn ridge(w: &DMatrix<f64>, y: &DVector<f64>, s2: f64) -> DVector<f64> {
    let wt = transpose(w);
    let mut g = matmul(&wt, w);
    for i in 0..g.nrows() {
        g[(i, i)] += s2;
    }
    solve(&g, &matvec(&wt, y))
}

/// Unbiased-free empirical covariance `(1/M) Σ s sᵀ` of zero-mean samples
/// stored as columns.
pub fn second_moment(samples: &[DVector<f64>]) -> DMatrix<f64> {
    let n = samples[0].len();
    let mut acc = DMatrix::zeros(n, n);
    for s in samples {
        for i in 0..n {
            for j in 0..n {
                acc[(i, j)] += s[i] * s[j];
            }
        }
    }
    acc / samples.len() as f64
}

/// Flips `v` to point the same way as `reference`.
pub fn align_sign(v: &DVector<f64>, reference: &DVector<f64>) -> DVector<f64> {
    if v.dot(reference) < 0.0 {
        -v
    } else {
        v.clone()
    }
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn rel_frobenius(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    let num: f64 = estimate
        .iter()
        .zip(truth.iter())
        .map(|(x, y)| (x - y).powi(2))
        .sum();
    let den: f64 = truth.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Numerical rank from singular values of a symmetric matrix via Jacobi.
pub fn symmetric_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let (vals, _) = jacobi_eigen(m);
    let top = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    vals.iter().filter(|v| v.abs() > rel_tol * top).count()
}
