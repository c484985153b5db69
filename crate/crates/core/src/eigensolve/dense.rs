//! Dense symmetric eigensolvers.
//!
//! The reduced problems only need the few smallest eigenpairs, so the main
//! path tridiagonalizes once (Householder), locates the smallest eigenvalues
//! by Sturm bisection and recovers eigenvectors by inverse iteration. Results
//! are verified against the input matrix; on any defect the full QR-based
//! decomposition takes over.

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// All eigenpairs, ascending.
pub fn full_sorted(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let se = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| se.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// The `count` smallest eigenpairs, ascending.
pub fn smallest_sorted(a: &DMatrix<f64>, count: usize) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    assert!(count <= n);
    if count == 0 {
        return (Vec::new(), DMatrix::zeros(n, 0));
    }
    if n <= 32 || 3 * count >= n {
        let (values, vectors) = full_sorted(a);
        return (
            values[..count].to_vec(),
            vectors.columns(0, count).into_owned(),
        );
    }
    match partial_smallest(a, count) {
        Some(res) => res,
        None => {
            let (values, vectors) = full_sorted(a);
            (
                values[..count].to_vec(),
                vectors.columns(0, count).into_owned(),
            )
        }
    }
}

struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    /// Householder vectors; `reflectors[k]` acts on rows `k+1..n`.
    reflectors: Vec<Vec<f64>>,
}

/// Householder tridiagonalization on a flat row-major buffer, referencing the
/// lower triangle only (symmetric rank-2 updates at 4/3·n³ flops total).
fn tridiagonalize(a: &DMatrix<f64>) -> Tridiagonal {
    let n = a.nrows();
    let mut w: Vec<f64> = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            w[i * n + j] = a[(i, j)];
        }
    }
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    let mut off = vec![0.0; n.saturating_sub(1)];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let mut v: Vec<f64> = (0..m).map(|r| w[(k + 1 + r) * n + k]).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            off[k] = 0.0;
            reflectors.push(Vec::new());
            continue;
        }
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            off[k] = alpha;
            reflectors.push(Vec::new());
            continue;
        }
        for x in &mut v {
            *x /= vnorm;
        }
        off[k] = alpha;

        // A22 <- H A22 H with H = I - 2 v vᵀ: p = 2 A22 v, then
        // A22 -= v wᵀ + w vᵀ with w = p - (pᵀv) v. Dot and axpy passes are
        // kept separate so they vectorize.
        let mut p = vec![0.0; m];
        for i in 0..m {
            let ri = (k + 1 + i) * n + (k + 1);
            let vi = v[i];
            let row = &w[ri..ri + i];
            let mut acc = w[ri + i] * vi;
            acc += row.iter().zip(&v[..i]).map(|(a, b)| a * b).sum::<f64>();
            for (pj, aij) in p[..i].iter_mut().zip(row) {
                *pj += aij * vi;
            }
            p[i] += acc;
        }
        for x in &mut p {
            *x *= 2.0;
        }
        let pv: f64 = p.iter().zip(&v).map(|(x, y)| x * y).sum();
        let wvec: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - pv * vi).collect();
        for i in 0..m {
            let ri = (k + 1 + i) * n + (k + 1);
            let vi = v[i];
            let wi = wvec[i];
            let row = &mut w[ri..=ri + i];
            for (aij, wj) in row.iter_mut().zip(&wvec[..=i]) {
                *aij -= vi * wj;
            }
            for (aij, vj) in row.iter_mut().zip(&v[..=i]) {
                *aij -= wi * vj;
            }
        }
        reflectors.push(v);
    }
    if n >= 2 {
        off[n - 2] = w[(n - 1) * n + n - 2];
    }
    let diag = (0..n).map(|i| w[i * n + i]).collect();
    Tridiagonal {
        diag,
        off,
        reflectors,
    }
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64, pivmin: f64) -> usize {
    let mut neg = 0;
    let mut t = diag[0] - x;
    if t.abs() < pivmin {
        t = -pivmin;
    }
    if t < 0.0 {
        neg += 1;
    }
    for i in 1..diag.len() {
        t = diag[i] - x - off[i - 1] * off[i - 1] / t;
        if t.abs() < pivmin {
            t = -pivmin;
        }
        if t < 0.0 {
            neg += 1;
        }
    }
    neg
}

fn bisect_smallest(diag: &[f64], off: &[f64], count: usize) -> Vec<f64> {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 }
            + if i < n - 1 { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let pivmin = f64::EPSILON * f64::EPSILON * span * span;
    let mut values = Vec::with_capacity(count);
    let mut floor = lo;
    for k in 0..count {
        // Eigenvalues come out ascending, so the previous bracket floors the
        // next search.
        let (mut a, mut b) = (floor, hi);
        for _ in 0..90 {
            let mid = 0.5 * (a + b);
            if sturm_count(diag, off, mid, pivmin) >= k + 1 {
                b = mid;
            } else {
                a = mid;
            }
            if b - a <= f64::EPSILON * a.abs().max(b.abs()).max(span * 1e-14) {
                break;
            }
        }
        values.push(0.5 * (a + b));
        floor = a;
    }
    values
}

/// One inverse-iteration solve `(T - λ I) x = b` via tridiagonal LU with
/// partial pivoting; pivoting fills a second superdiagonal. Near-zero pivots
/// are floored at `pivmin` so exactly-converged shifts stay solvable.
fn shifted_tridiag_solve(diag: &[f64], off: &[f64], lambda: f64, b: &mut [f64], pivmin: f64) {
    let n = diag.len();
    let mut d: Vec<f64> = diag.iter().map(|&x| x - lambda).collect();
    let mut du: Vec<f64> = off.to_vec();
    let mut dl: Vec<f64> = off.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut swapped = vec![false; n.saturating_sub(1)];

    let safe = |x: f64| {
        if x.abs() < pivmin {
            pivmin.copysign(if x == 0.0 { 1.0 } else { x })
        } else {
            x
        }
    };

    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            let fact = dl[i] / safe(d[i]);
            dl[i] = fact;
            d[i + 1] -= fact * du[i];
        } else {
            swapped[i] = true;
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = fact;
            let tmp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = tmp - fact * d[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du[i + 1];
            }
        }
    }

    for i in 0..n - 1 {
        if swapped[i] {
            let tmp = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tmp - dl[i] * b[i + 1];
        } else {
            b[i + 1] -= dl[i] * b[i];
        }
    }
    b[n - 1] /= safe(d[n - 1]);
    if n >= 2 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / safe(d[n - 2]);
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / safe(d[i]);
    }
}

fn partial_smallest(a: &DMatrix<f64>, count: usize) -> Option<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let tri = tridiagonalize(a);
    let values = bisect_smallest(&tri.diag, &tri.off, count);

    let span = {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { tri.off[i - 1].abs() } else { 0.0 }
                + if i < n - 1 { tri.off[i].abs() } else { 0.0 };
            lo = lo.min(tri.diag[i] - r);
            hi = hi.max(tri.diag[i] + r);
        }
        (hi - lo).max(f64::MIN_POSITIVE)
    };
    let pivmin = f64::EPSILON * f64::EPSILON * span * span;
    let cluster_gap = 1e-6 * span;

    let mut rng = ChaCha12Rng::seed_from_u64(0x7431_d1a6);
    let mut tvecs: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut cluster_start = 0usize;
    for (k, &lambda) in values.iter().enumerate() {
        if k > 0 && lambda - values[k - 1] > cluster_gap {
            cluster_start = k;
        }
        let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        for _ in 0..4 {
            shifted_tridiag_solve(&tri.diag, &tri.off, lambda, &mut x, pivmin);
            for prev in &tvecs[cluster_start..k] {
                let c: f64 = x.iter().zip(prev).map(|(a, b)| a * b).sum();
                for (xi, pi) in x.iter_mut().zip(prev) {
                    *xi -= c * pi;
                }
            }
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return None;
            }
            for xi in &mut x {
                *xi /= norm;
            }
        }
        tvecs.push(x);
    }

    // Tighten orthogonality across all computed vectors.
    for k in 0..tvecs.len() {
        let (done, rest) = tvecs.split_at_mut(k);
        let x = &mut rest[0];
        for prev in done.iter() {
            let c: f64 = x.iter().zip(prev.iter()).map(|(a, b)| a * b).sum();
            for (xi, pi) in x.iter_mut().zip(prev.iter()) {
                *xi -= c * pi;
            }
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 0.5 {
            return None;
        }
        for xi in x.iter_mut() {
            *xi /= norm;
        }
    }

    // Back-transform through the stored reflectors.
    let mut vectors = DMatrix::zeros(n, count);
    for (k, y) in tvecs.iter().enumerate() {
        let mut u = y.clone();
        for (kk, v) in tri.reflectors.iter().enumerate().rev() {
            if v.is_empty() {
                continue;
            }
            let tail = kk + 1;
            let c: f64 = v.iter().zip(&u[tail..]).map(|(a, b)| a * b).sum();
            for (vi, ui) in v.iter().zip(u[tail..].iter_mut()) {
                *ui -= 2.0 * c * vi;
            }
        }
        for i in 0..n {
            vectors[(i, k)] = u[i];
        }
    }

    // Verify against the original matrix; any defect falls back.
    let scale = values.iter().fold(span, |s, v| s.max(v.abs()));
    for (k, &lambda) in values.iter().enumerate() {
        let u = vectors.column(k);
        let r = a * u - lambda * u;
        if r.norm() > 1e-10 * scale {
            return None;
        }
    }
    for i in 0..count {
        for j in 0..i {
            let dot: f64 = vectors.column(i).dot(&vectors.column(j));
            if dot.abs() > 1e-9 {
                return None;
            }
        }
    }
    Some((values, vectors))
}
