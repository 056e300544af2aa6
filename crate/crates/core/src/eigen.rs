//! Lowest eigenpairs of a symmetric [`PmOperator`].

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::PmOperator;

/// Grids up to this many cells are diagonalized densely by default.
pub const DENSE_LIMIT: usize = 2048;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    /// Diagonal when possible, dense on small grids, filtered otherwise.
    #[default]
    Auto,
    Dense,
    /// Chebyshev-filtered subspace iteration.
    Filtered,
}

/// Eigenpairs sorted by ascending value; `vectors` has one column per value.
#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
    /// True when every eigenpair of the operator is present.
    pub complete: bool,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, j: usize) -> Vec<f64> {
        (0..self.vectors.nrows()).map(|i| self.vectors[(i, j)]).collect()
    }
}

/// At least `want` lowest eigenpairs of `op` (more when the backend gives them for free).
pub fn lowest_pairs(op: &PmOperator, want: usize, method: EigenMethod, tol: f64) -> Result<EigenPairs> {
    let n = op.dim();
    let want = want.clamp(1, n);
    if let Some(diag) = op.as_diagonal() {
        return Ok(diagonal_pairs(diag, want));
    }
    let method = match method {
        EigenMethod::Auto if n <= DENSE_LIMIT || (want * 4 >= n && n <= 2 * DENSE_LIMIT) => EigenMethod::Dense,
        EigenMethod::Auto => EigenMethod::Filtered,
        m => m,
    };
    match method {
        EigenMethod::Dense => dense_pairs(op),
        _ if want * 2 >= n => dense_pairs(op),
        _ => filtered_pairs(op, want, tol),
    }
}

fn diagonal_pairs(diag: &[f64], want: usize) -> EigenPairs {
    let n = diag.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));
    // Extend to the end of the cluster holding the last requested value.
    let mut take = want;
    while take < n && diag[order[take]] == diag[order[take - 1]] {
        take += 1;
    }
    let values = order[..take].iter().map(|&i| diag[i]).collect();
    let vectors = Mat::from_fn(n, take, |i, j| if order[j] == i { 1.0 } else { 0.0 });
    EigenPairs {
        values,
        vectors,
        complete: take == n,
    }
}

/// Dense matrix of `op`, column by column.
pub fn assemble(op: &PmOperator) -> Mat<f64> {
    let n = op.dim();
    let mut m = Mat::<f64>::zeros(n, n);
    let mut unit = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        unit[j] = 1.0;
        op.apply_into(&unit, &mut col);
        unit[j] = 0.0;
        for (i, v) in col.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    m
}

fn dense_pairs(op: &PmOperator) -> Result<EigenPairs> {
    let m = assemble(op);
    let n = m.nrows();
    let sym = Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let evd = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Accuracy(format!("dense eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let values = (0..n).map(|i| s[i]).collect();
    Ok(EigenPairs {
        values,
        vectors: evd.U().to_owned(),
        complete: true,
    })
}

fn column(x: &Mat<f64>, j: usize) -> Vec<f64> {
    (0..x.nrows()).map(|i| x[(i, j)]).collect()
}

fn apply_block(op: &PmOperator, x: &Mat<f64>) -> Mat<f64> {
    let mut out = Mat::<f64>::zeros(x.nrows(), x.ncols());
    let mut buf = vec![0.0; x.nrows()];
    for j in 0..x.ncols() {
        op.apply_into(&column(x, j), &mut buf);
        for (i, v) in buf.iter().enumerate() {
            out[(i, j)] = *v;
        }
    }
    out
}

fn orthonormalize(x: &Mat<f64>) -> Mat<f64> {
    x.qr().compute_thin_Q()
}

fn small_eigen(h: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let k = h.nrows();
    let sym = Mat::from_fn(k, k, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]));
    let evd = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Accuracy(format!("projected eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    Ok(((0..k).map(|i| s[i]).collect(), evd.U().to_owned()))
}

/// Spectral bounds from a short Lanczos run with full reorthogonalization.
pub fn spectral_bounds(op: &PmOperator, steps: usize) -> Result<(f64, f64)> {
    let n = op.dim();
    let steps = steps.min(n).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|a| *a /= nv);
    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    for it in 0..steps {
        let mut w = op.apply(&basis[it]);
        let a = dot(&w, &basis[it]);
        alpha.push(a);
        for b in &basis {
            let c = dot(&w, b);
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let nb = norm(&w);
        beta.push(nb);
        if nb < 1e-12 * a.abs().max(1.0) || it + 1 == steps {
            break;
        }
        w.iter_mut().for_each(|x| *x /= nb);
        basis.push(w);
    }
    let m = alpha.len();
    let t = Mat::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let (vals, _) = small_eigen(&t)?;
    let slack = beta.last().copied().unwrap_or(0.0);
    Ok((vals[0] - slack, vals[m - 1] + slack))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scaled Chebyshev filter damping the interval `[cut, upper]`.
fn chebyshev_filter(op: &PmOperator, x: &Mat<f64>, degree: usize, cut: f64, upper: f64, bottom: f64) -> Mat<f64> {
    let e = 0.5 * (upper - cut);
    let c = 0.5 * (upper + cut);
    let sigma1 = e / (bottom - c);
    let mut sigma = sigma1;
    let mut prev = x.clone();
    let ax = apply_block(op, x);
    let mut cur = Mat::from_fn(x.nrows(), x.ncols(), |i, j| (ax[(i, j)] - c * x[(i, j)]) * sigma1 / e);
    for _ in 1..degree {
        let sigma_new = 1.0 / (2.0 / sigma1 - sigma);
        let ay = apply_block(op, &cur);
        let next = Mat::from_fn(x.nrows(), x.ncols(), |i, j| {
            2.0 * (ay[(i, j)] - c * cur[(i, j)]) * sigma_new / e - sigma * sigma_new * prev[(i, j)]
        });
        prev = cur;
        cur = next;
        sigma = sigma_new;
    }
    cur
}

fn filtered_pairs(op: &PmOperator, want: usize, tol: f64) -> Result<EigenPairs> {
    const DEGREE: usize = 20;
    const MAX_ITER: usize = 200;
    let n = op.dim();
    let block = (want + (want / 4).max(10)).min(n);
    let (lower, mut upper) = spectral_bounds(op, 40)?;
    let scale = lower.abs().max(upper.abs()).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0xc4eb);
    let start = Mat::from_fn(n, block, |_, _| rng.random_range(-1.0..1.0));
    let mut x = orthonormalize(&start);
    for iter in 0..MAX_ITER {
        let ax = apply_block(op, &x);
        let h = x.transpose() * &ax;
        let (theta, y) = small_eigen(&h)?;
        x = &x * &y;
        let ax = &ax * &y;
        let worst = (0..want)
            .map(|j| {
                (0..n)
                    .map(|i| (ax[(i, j)] - theta[j] * x[(i, j)]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        log::debug!("filtered iteration {iter}: worst residual {worst:.3e}");
        if worst <= tol * scale {
            let vectors = Mat::from_fn(n, want, |i, j| x[(i, j)]);
            return Ok(EigenPairs {
                values: theta[..want].to_vec(),
                vectors,
                complete: want == n,
            });
        }
        let cut = theta[block - 1];
        if cut >= upper {
            upper = cut + 0.1 * scale;
        }
        let filtered = chebyshev_filter(op, &x, DEGREE, cut, upper, theta[0]);
        x = orthonormalize(&filtered);
    }
    Err(Error::Accuracy(format!(
        "filtered eigensolver did not converge in {MAX_ITER} iterations"
    )))
}
