//! Independent reference implementations used by the integration tests.
//! Everything here is written from the defining formulas with plain loops
//! and shares no numerical code with the library.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn normals(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// `n x p` matrix of iid standard normals.
pub fn gaussian_design(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    DMatrix::from_vec(n, p, normals(n * p, seed))
}

pub fn col(x: &DMatrix<f64>, j: usize) -> Vec<f64> {
    x.column(j).iter().copied().collect()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn centered(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = x.clone();
    for j in 0..x.ncols() {
        let m = mean(&col(x, j));
        for r in 0..x.nrows() {
            c[(r, j)] -= m;
        }
    }
    c
}

/// Rank-based balanced slices: sort by `(y, index)`; the first `n mod h`
/// slices take one extra observation.
pub fn brute_slices(y: &[f64], h: usize) -> Vec<usize> {
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].partial_cmp(&y[b]).unwrap().then(a.cmp(&b)));
    let mut sizes = vec![n / h; h];
    for s in sizes.iter_mut().take(n % h) {
        *s += 1;
    }
    let mut out = vec![0; n];
    let mut pos = 0;
    for (slice, &size) in sizes.iter().enumerate() {
        for &obs in &order[pos..pos + size] {
            out[obs] = slice;
        }
        pos += size;
    }
    out
}

/// Straight-line evaluation of the estimator, its variance, the statistics
/// and the multiplier bootstrap.
#[derive(Debug, Clone)]
pub struct BruteSda {
    pub nu: Vec<f64>,
    pub omega: Vec<Vec<f64>>,
    pub z: Vec<f64>,
    pub ks: f64,
    pub cvm: f64,
    pub ks_draws: Vec<f64>,
    pub cvm_draws: Vec<f64>,
}

pub fn brute_sda(resid: &[f64], assign: &[usize], h: usize, l_draws: usize, boot_seed: u64) -> BruteSda {
    let n = resid.len();
    let nf = n as f64;
    let mut nu = vec![0.0; h];
    for s in 0..h {
        let mut acc = 0.0;
        for j in 0..n {
            if assign[j] == s {
                acc += resid[j];
            }
        }
        nu[s] = acc / nf;
    }
    let psi: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            (0..h)
                .map(|s| if assign[j] == s { resid[j] - nu[s] } else { -nu[s] })
                .collect()
        })
        .collect();
    let mut omega = vec![vec![0.0; h]; h];
    for a in 0..h {
        for b in 0..h {
            let mut acc = 0.0;
            for row in &psi {
                acc += row[a] * row[b];
            }
            omega[a][b] = acc / nf;
        }
    }
    let z: Vec<f64> = (0..h).map(|s| nf.sqrt() * nu[s] / omega[s][s].sqrt()).collect();
    let ks = z.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let cvm = z.iter().map(|v| v.abs()).sum::<f64>() / h as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(boot_seed);
    let mut ks_draws = Vec::with_capacity(l_draws);
    let mut cvm_draws = Vec::with_capacity(l_draws);
    for _ in 0..l_draws {
        let u: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut zu = vec![0.0; h];
        for s in 0..h {
            let mut phi = 0.0;
            for j in 0..n {
                phi += u[j] * psi[j][s];
            }
            zu[s] = (phi / nf.sqrt() / omega[s][s].sqrt()).abs();
        }
        ks_draws.push(zu.iter().copied().fold(0.0, f64::max));
        cvm_draws.push(zu.iter().sum::<f64>() / h as f64);
    }
    BruteSda {
        nu,
        omega,
        z,
        ks,
        cvm,
        ks_draws,
        cvm_draws,
    }
}

/// Smallest `k` with `k >= (1 - alpha) L`, then the `k`-th smallest draw.
pub fn brute_critical(draws: &[f64], alpha: f64) -> f64 {
    let mut s = draws.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let target = (1.0 - alpha) * draws.len() as f64;
    let mut k = 1;
    while (k as f64) < target - 1e-9 {
        k += 1;
    }
    s[k - 1]
}

pub fn brute_p_value(stat: f64, draws: &[f64]) -> f64 {
    let mut count = 0usize;
    for &d in draws {
        if d >= stat {
            count += 1;
        }
    }
    (count + 1) as f64 / (draws.len() + 1) as f64
}

/// `(1/n)||y - Xb||^2 + lambda ||b||_1`.
pub fn lasso_objective(x: &DMatrix<f64>, y: &[f64], b: &[f64], lambda: f64) -> f64 {
    let n = x.nrows();
    let mut rss = 0.0;
    for r in 0..n {
        let mut fit = 0.0;
        for (j, bj) in b.iter().enumerate() {
            fit += x[(r, j)] * bj;
        }
        rss += (y[r] - fit).powi(2);
    }
    rss / n as f64 + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
}

/// Largest violation of the subgradient optimality conditions.
pub fn kkt_violation(x: &DMatrix<f64>, y: &[f64], b: &[f64], lambda: f64) -> f64 {
    let n = x.nrows();
    let resid: Vec<f64> = (0..n)
        .map(|r| y[r] - (0..b.len()).map(|j| x[(r, j)] * b[j]).sum::<f64>())
        .collect();
    let mut worst = 0.0f64;
    for j in 0..b.len() {
        let xj: Vec<f64> = (0..n).map(|r| x[(r, j)]).collect();
        if xj.iter().all(|v| v.abs() < 1e-14) {
            continue;
        }
        let g = 2.0 / n as f64 * xj.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>();
        let v = if b[j] != 0.0 {
            (g - lambda * b[j].signum()).abs()
        } else {
            (g.abs() - lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// Exhaustive grid minimization of the LASSO objective for up to three
/// coefficients: a coarse pass over `[-bound, bound]^d`, then a 1e-3 grid
/// around the coarse winner.
pub fn grid_lasso(x: &DMatrix<f64>, y: &[f64], lambda: f64, bound: f64) -> Vec<f64> {
    let d = x.ncols();
    assert!((1..=3).contains(&d));
    let n = x.nrows() as f64;
    // quadratic form pieces so each grid point costs O(d^2)
    let mut g = vec![vec![0.0; d]; d];
    let mut c = vec![0.0; d];
    for a in 0..d {
        for b in 0..d {
            g[a][b] = (0..x.nrows()).map(|r| x[(r, a)] * x[(r, b)]).sum::<f64>() / n;
        }
        c[a] = (0..x.nrows()).map(|r| x[(r, a)] * y[r]).sum::<f64>() / n;
    }
    let obj = |b: &[f64]| -> f64 {
        let mut q = 0.0;
        for a in 0..d {
            for k in 0..d {
                q += b[a] * g[a][k] * b[k];
            }
        }
        q - 2.0 * (0..d).map(|a| c[a] * b[a]).sum::<f64>() + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
    };
    let search = |center: &[f64], half: f64, step: f64| -> Vec<f64> {
        let m = (half / step).round() as i64;
        let axis = |k: usize, i: i64| center[k] + i as f64 * step;
        let mut best = center.to_vec();
        let mut best_val = obj(&best);
        let mut b = vec![0.0; d];
        let r1 = -m..=m;
        let r2 = if d >= 2 { -m..=m } else { 0..=0 };
        let r3 = if d >= 3 { -m..=m } else { 0..=0 };
        for i in r1 {
            b[0] = axis(0, i);
            for j in r2.clone() {
                if d >= 2 {
                    b[1] = axis(1, j);
                }
                for k in r3.clone() {
                    if d >= 3 {
                        b[2] = axis(2, k);
                    }
                    let v = obj(&b);
                    if v < best_val {
                        best_val = v;
                        best = b.clone();
                    }
                }
            }
        }
        best
    };
    let coarse = search(&vec![0.0; d], bound, 0.05);
    // snap the fine grid onto multiples of 1e-3 so that exact zeros are grid points
    let snapped: Vec<f64> = coarse.iter().map(|v| (v * 1000.0).round() / 1000.0).collect();
    search(&snapped, 0.06, 1e-3)
}

/// Solves `A b = c` by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut c: Vec<f64>) -> Vec<f64> {
    let n = c.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap()).unwrap();
        a.swap(k, piv);
        c.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            c[i] -= f * c[k];
        }
    }
    let mut b = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * b[j]).sum();
        b[k] = (c[k] - s) / a[k][k];
    }
    b
}

pub fn ols(x: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
    let (n, d) = x.shape();
    let a: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| (0..n).map(|r| x[(r, i)] * x[(r, j)]).sum()).collect())
        .collect();
    let c: Vec<f64> = (0..d).map(|i| (0..n).map(|r| x[(r, i)] * y[r]).sum()).collect();
    solve_dense(a, c)
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for k in 0..a.len() {
        sab += (a[k] - ma) * (b[k] - mb);
        saa += (a[k] - ma).powi(2);
        sbb += (b[k] - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

/// Indices `j != i` ranked by `|corr(x_i, x_j)|` with a double loop,
/// ties to the smaller index, truncated to `keep`.
pub fn brute_sis(x: &DMatrix<f64>, i: usize, keep: usize) -> Vec<usize> {
    let p = x.ncols();
    let xi = col(x, i);
    let mut scored: Vec<(usize, f64)> = Vec::new();
    for j in 0..p {
        if j != i {
            scored.push((j, pearson(&xi, &col(x, j)).abs()));
        }
    }
    // selection sort keeps the tie rule explicit
    let mut out = Vec::new();
    while out.len() < keep {
        let mut best: Option<usize> = None;
        for k in 0..scored.len() {
            if out.contains(&scored[k].0) {
                continue;
            }
            best = match best {
                None => Some(k),
                Some(b) if scored[k].1 > scored[b].1 => Some(k),
                keep => keep,
            };
        }
        out.push(scored[best.unwrap()].0);
    }
    out
}

/// Step-up rule by direct search: reject the `k` smallest, where `k` is the
/// largest rank with `p_(k) <= k q / m`.
pub fn brute_bh(p: &[f64], q: f64) -> Vec<bool> {
    let m = p.len();
    let mut sorted = p.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut k = 0;
    for r in 1..=m {
        if sorted[r - 1] <= r as f64 * q / m as f64 {
            k = r;
        }
    }
    if k == 0 {
        return vec![false; m];
    }
    let cutoff = sorted[k - 1];
    p.iter().map(|&v| v <= cutoff).collect()
}

/// Symmetric eigenvalues by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}
