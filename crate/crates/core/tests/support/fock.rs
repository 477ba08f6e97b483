//! Brute-force truncated Fock-space oracle for few-mode quadratic
//! Hamiltonians
//!
//! ```text
//! H = sum_i omega_i n_i + sum_(i<j) g_ij (b_i + b_i^dag)(b_j + b_j^dag)
//! ```
//!
//! The ground state comes from a Lanczos iteration with full
//! reorthogonalization on the sparse matrix-vector product; covariances and
//! logarithmic negativities are then evaluated directly on the state vector.
//! Everything here is independent of the Gaussian-state machinery it checks.

use ndarray::Array2;
use ndarray_linalg::{Eigh, SVD, UPLO};

pub struct FockModel {
    pub omegas: Vec<f64>,
    /// `(i, j, g)` coupling terms, `i != j`.
    pub couplings: Vec<(usize, usize, f64)>,
    /// Levels per mode (cutoff quanta + 1).
    pub dims: Vec<usize>,
}

impl FockModel {
    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.dims.len()];
        for i in (0..self.dims.len() - 1).rev() {
            s[i] = s[i + 1] * self.dims[i + 1];
        }
        s
    }

    /// y = H x.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let strides = self.strides();
        let n_modes = self.dims.len();
        let mut occ = vec![0usize; n_modes];
        for (idx, yv) in y.iter_mut().enumerate() {
            let mut rest = idx;
            for m in 0..n_modes {
                occ[m] = rest / strides[m];
                rest %= strides[m];
            }
            let mut acc = 0.0;
            let diag: f64 = self
                .omegas
                .iter()
                .zip(&occ)
                .map(|(w, &n)| w * n as f64)
                .sum();
            acc += diag * x[idx];
            for &(i, j, g) in &self.couplings {
                // (b_i + b_i^dag)(b_j + b_j^dag) couples occ_i +- 1, occ_j +- 1.
                for (di, fi) in ladder(occ[i], self.dims[i]) {
                    for (dj, fj) in ladder(occ[j], self.dims[j]) {
                        let src = (idx as isize
                            + di * strides[i] as isize
                            + dj * strides[j] as isize) as usize;
                        acc += g * fi * fj * x[src];
                    }
                }
            }
            *yv = acc;
        }
    }

    /// Ground state by Lanczos with full reorthogonalization; converged when
    /// the Ritz residual `beta * |last coefficient|` is negligible.
    pub fn ground_state(&self, max_iter: usize) -> (f64, Vec<f64>) {
        let dim = self.total_dim();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        // Vacuum start vector: always overlaps the ground state of these
        // number-conserving-plus-squeezing Hamiltonians.
        let mut v = vec![0.0; dim];
        v[0] = 1.0;
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut w = vec![0.0; dim];

        let build = |alphas: &[f64], betas: &[f64], basis: &[Vec<f64>]| -> (f64, Vec<f64>) {
            let (e0, coeffs) = tridiag_ground(alphas, betas);
            let mut ground = vec![0.0; dim];
            for (c, b) in coeffs.iter().zip(basis) {
                for (gi, bi) in ground.iter_mut().zip(b) {
                    *gi += c * bi;
                }
            }
            let norm = dot(&ground, &ground).sqrt();
            for g in &mut ground {
                *g /= norm;
            }
            (e0, ground)
        };

        for it in 0..max_iter.min(dim) {
            self.apply(&v, &mut w);
            let alpha = dot(&v, &w);
            alphas.push(alpha);
            for (wi, vi) in w.iter_mut().zip(&v) {
                *wi -= alpha * vi;
            }
            if let Some(beta_prev) = betas.last() {
                let prev = &basis[basis.len() - 1];
                for (wi, pi) in w.iter_mut().zip(prev) {
                    *wi -= beta_prev * pi;
                }
            }
            basis.push(v.clone());
            // Full reorthogonalization.
            for b in &basis {
                let c = dot(&w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
            let beta = dot(&w, &w).sqrt();
            if beta < 1e-13 {
                return build(&alphas, &betas, &basis);
            }
            if it >= 5 && it % 5 == 0 {
                let (e0, coeffs) = tridiag_ground(&alphas, &betas);
                let residual = beta * coeffs.last().unwrap().abs();
                if residual < 1e-11 * (1.0 + e0.abs()) {
                    return build(&alphas, &betas, &basis);
                }
            }
            betas.push(beta);
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / beta;
            }
        }
        panic!("Lanczos did not converge in {max_iter} iterations");
    }

    /// Apply `b_i + b_i^dag` (sign = +1) or `i (b_i^dag - b_i)`-style raising
    /// and lowering pieces: here plain `(b + b^dag)` and `(b - b^dag)` acting
    /// on a real vector.
    pub fn displacement(&self, i: usize, x: &[f64], minus: bool) -> Vec<f64> {
        let strides = self.strides();
        let mut out = vec![0.0; x.len()];
        for (idx, &xv) in x.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let n_i = (idx / strides[i]) % self.dims[i];
            // b^dag |n> = sqrt(n+1) |n+1>
            if n_i + 1 < self.dims[i] {
                let sign = if minus { -1.0 } else { 1.0 };
                out[idx + strides[i]] += sign * ((n_i + 1) as f64).sqrt() * xv;
            }
            // b |n> = sqrt(n) |n-1>
            if n_i > 0 {
                out[idx - strides[i]] += (n_i as f64).sqrt() * xv;
            }
        }
        out
    }

    /// `<q_i q_j> = <(b_i+b_i^dag)(b_j+b_j^dag)> / 2` on a real state.
    pub fn qq(&self, state: &[f64], i: usize, j: usize) -> f64 {
        let w = self.displacement(j, state, false);
        let u = self.displacement(i, &w, false);
        0.5 * dot(state, &u)
    }

    /// `<p_i p_j> = -<(b_i - b_i^dag)(b_j - b_j^dag)> / 2` on a real state.
    pub fn pp(&self, state: &[f64], i: usize, j: usize) -> f64 {
        let w = self.displacement(j, state, true);
        let w: Vec<f64> = w.iter().map(|x| -x).collect(); // (b - b^dag)
        let u = self.displacement(i, &w, true);
        let u: Vec<f64> = u.iter().map(|x| -x).collect();
        -0.5 * dot(state, &u)
    }
}

/// `(index shift, matrix element)` pairs of `b + b^dag` from occupation `n`.
fn ladder(n: usize, dim: usize) -> Vec<(isize, f64)> {
    let mut out = Vec::with_capacity(2);
    // <n | (b + b^dag) | n - 1> = sqrt(n): source below.
    if n > 0 {
        out.push((-1, (n as f64).sqrt()));
    }
    if n + 1 < dim {
        out.push((1, ((n + 1) as f64).sqrt()));
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lowest eigenpair of the symmetric tridiagonal Lanczos matrix.
fn tridiag_ground(alphas: &[f64], betas: &[f64]) -> (f64, Vec<f64>) {
    let m = alphas.len();
    let mut t = Array2::<f64>::zeros((m, m));
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let (vals, vecs) = t.eigh(UPLO::Lower).expect("tridiagonal eigensolve");
    let coeffs = (0..m).map(|i| vecs[(i, 0)]).collect();
    (vals[0], coeffs)
}

/// Logarithmic negativity of a PURE two-mode state: `2 ln(sum of Schmidt
/// coefficients)`.
pub fn pure_log_negativity(model: &FockModel, state: &[f64]) -> f64 {
    assert_eq!(model.dims.len(), 2);
    let (d1, d2) = (model.dims[0], model.dims[1]);
    let mut a = Array2::<f64>::zeros((d1, d2));
    for i in 0..d1 {
        for j in 0..d2 {
            a[(i, j)] = state[i * d2 + j];
        }
    }
    let (_, s, _) = a.svd(false, false).expect("svd");
    let total: f64 = s.iter().sum();
    (2.0 * total.ln()).max(0.0)
}

/// Logarithmic negativity of the reduction of a pure THREE-mode state onto
/// modes `(keep_a, keep_b)`: `ln ||rho^(T_b)||_1` from the dense partial
/// transpose.
pub fn mixed_log_negativity(model: &FockModel, state: &[f64], keep_a: usize, keep_b: usize) -> f64 {
    assert_eq!(model.dims.len(), 3);
    let traced = 3 - keep_a - keep_b;
    let (da, db, dt) = (model.dims[keep_a], model.dims[keep_b], model.dims[traced]);
    let strides = model.strides();
    let elem = |na: usize, nb: usize, nt: usize| -> f64 {
        state[na * strides[keep_a] + nb * strides[keep_b] + nt * strides[traced]]
    };
    // rho^(T_b)[(a,b),(a',b')] = sum_t psi(a, b', t) psi(a', b, t)
    let dim = da * db;
    let mut pt = Array2::<f64>::zeros((dim, dim));
    for a in 0..da {
        for b in 0..db {
            for ap in 0..da {
                for bp in 0..db {
                    let mut acc = 0.0;
                    for t in 0..dt {
                        acc += elem(a, bp, t) * elem(ap, b, t);
                    }
                    pt[(a * db + b, ap * db + bp)] = acc;
                }
            }
        }
    }
    let (vals, _) = pt.eigh(UPLO::Lower).expect("partial transpose eigensolve");
    let trace_norm: f64 = vals.iter().map(|v| v.abs()).sum();
    trace_norm.ln().max(0.0)
}

#[allow(dead_code)]
pub fn vacuum_check(model: &FockModel) -> f64 {
    let (e, _) = model.ground_state(200);
    e
}
