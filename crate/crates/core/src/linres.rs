//! Linear response around a steady state: collective modes, ground-state
//! covariance and atom-membrane entanglement.
//!
//! Small deviations of the variational coordinates obey
//!
//! ```text
//! dd(da') + 2 gamma d(da') + omega_a'^2 da' = c1 dzeta - c2 dsigma
//! dd(dzeta)                + omega_z^2 dzeta = c3 da'
//! dd(dsigma)               + omega_s^2 dsigma = -c4 da'
//! ```
//!
//! which, in rescaled quadratures, is `x' = M x` with a real 6x6 matrix `M`.
//! Its eigenvalues `nu = i omega - gamma_k` carry the excitation frequencies
//! and decay rates.  Without damping the same dynamics is generated by a
//! three-mode quadratic Hamiltonian whose Bogoliubov ground state yields the
//! covariance matrix and, from its partial transpose, the logarithmic
//! negativity between the membrane and either atomic mode.
//!
//! The atomic frequencies `omega_z`, `omega_s` are evaluated from the
//! analytic Hessian of the potential energy at the steady state, which on
//! the steady state reproduces the usual width-mode formula and fixes the
//! `exp(-sigma0^2)` factor of the displacement mode.

use ndarray::Array2;
use ndarray_linalg::{Determinant, Eig, Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::variational::{self, SteadyState};

/// Frequencies and couplings of the linearized system.
#[derive(Debug, Clone, Copy)]
pub struct LinearResponse {
    /// Membrane quadrature frequency, `omega_a'^2 = Omega_m^2 + gamma^2`.
    pub omega_alpha: f64,
    /// Displacement-mode frequency.
    pub omega_zeta: f64,
    /// Width-mode frequency.
    pub omega_sigma: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    /// Effective membrane-displacement quadrature coupling.
    pub lambda_az: f64,
    /// Effective membrane-width quadrature coupling; zero below threshold.
    pub lambda_as: f64,
    /// Rescaling factors of the quadratures `q_mu = eps_mu * d(mu)`, chosen so
    /// that the coupled rows of `M` carry the same coefficient.
    pub epsilon_scales: [f64; 3],
}

/// Linearize around a converged steady state.
pub fn linearize(p: &ModelParams, ss: &SteadyState) -> Result<LinearResponse> {
    p.validate()?;
    let grad = variational::energy_gradient(ss.alpha_prime0, ss.sigma0, ss.zeta0, p)?;
    let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if gnorm > 1e-8 {
        return Err(Error::InvalidInput(format!(
            "linearize requires a stationary state; gradient norm is {gnorm:.3e}"
        )));
    }
    let hess = variational::energy_hessian(ss.alpha_prime0, ss.sigma0, ss.zeta0, p)?;
    let wz2 = 2.0 * p.omega_r * hess[2][2];
    let ws2 = 4.0 * p.omega_r * hess[1][1];
    if wz2 <= 0.0 || ws2 <= 0.0 {
        return Err(Error::Unstable(format!(
            "negative curvature at the expansion point (omega_z^2 = {wz2:.3e}, omega_s^2 = {ws2:.3e})"
        )));
    }
    let omega_zeta = wz2.sqrt();
    let omega_sigma = ws2.sqrt();
    let omega_alpha = (p.omega_m * p.omega_m + p.gamma * p.gamma).sqrt();

    let gauss = (-ss.sigma0 * ss.sigma0).exp();
    let root = (1.0 - ss.s0 * ss.s0).sqrt();
    let c1 = 2.0 * p.lambda * p.omega_m * root * gauss;
    let c2 = 2.0 * p.lambda * p.omega_m * ss.sigma0 * ss.s0 * gauss;
    let c3 = 4.0 * p.omega_r * c1 / p.omega_m;
    let c4 = 8.0 * p.omega_r * c2 / p.omega_m;

    let lambda_az = (c1 * c3 / (4.0 * omega_alpha * omega_zeta)).sqrt();
    let lambda_as = (c2 * c4 / (4.0 * omega_alpha * omega_sigma)).sqrt();

    // c1/c3 and c2/c4 are coupling-independent, so the scales stay finite
    // even where c2 = 0.
    let eps_zeta = (p.omega_m * omega_zeta / (4.0 * p.omega_r * omega_alpha)).sqrt();
    let eps_sigma = (p.omega_m * omega_sigma / (8.0 * p.omega_r * omega_alpha)).sqrt();

    Ok(LinearResponse {
        omega_alpha,
        omega_zeta,
        omega_sigma,
        c1,
        c2,
        c3,
        c4,
        lambda_az,
        lambda_as,
        epsilon_scales: [1.0, eps_zeta, eps_sigma],
    })
}

/// The dynamical matrix over the quadrature vector
/// `(q_a', p_a', q_z, p_z, q_s, p_s)`.
pub fn build_m(lr: &LinearResponse, gamma: f64) -> Array2<f64> {
    let (wa, wz, ws) = (lr.omega_alpha, lr.omega_zeta, lr.omega_sigma);
    let (laz, las) = (lr.lambda_az, lr.lambda_as);
    ndarray::array![
        [0.0, wa, 0.0, 0.0, 0.0, 0.0],
        [-wa, -2.0 * gamma, 2.0 * laz, 0.0, -2.0 * las, 0.0],
        [0.0, 0.0, 0.0, wz, 0.0, 0.0],
        [2.0 * laz, 0.0, -wz, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, ws],
        [-2.0 * las, 0.0, 0.0, 0.0, -ws, 0.0],
    ]
}

/// Branch identity of a collective mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchLabel {
    Membrane,
    Displacement,
    Width,
}

/// Eigenvalues and eigenvectors of a dynamical matrix, in the `x' = M x`
/// convention: `nu = i omega - gamma_k`.
#[derive(Debug, Clone)]
pub struct ModeSet {
    /// Sorted by |Im nu| ascending; conjugate partners adjacent.
    pub eigenvalues: Vec<Complex64>,
    /// Column `k` belongs to `eigenvalues[k]`, normalized to unit length.
    pub eigenvectors: Array2<Complex64>,
    /// Branch tags; empty until assigned by [`track_modes`].
    pub labels: Vec<BranchLabel>,
}

impl ModeSet {
    pub fn frequencies(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|nu| nu.im).collect()
    }

    pub fn decay_rates(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|nu| -nu.re).collect()
    }

    /// Smallest nonnegative eigenfrequency.
    pub fn lowest_frequency(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|nu| nu.im.abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Dense eigendecomposition of a real dynamical matrix.  The residual
/// `|M v - nu v|` of every pair is verified against `1e-10 |v|`.
pub fn eigenmodes(m: &Array2<f64>) -> Result<ModeSet> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidInput("eigenmodes requires a square matrix".into()));
    }
    let (vals, vecs) = m.eig()?;
    let n = vals.len();
    let mc = m.mapv(|x| Complex64::new(x, 0.0));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let ka = (vals[a].im.abs(), -vals[a].im, vals[a].re);
        let kb = (vals[b].im.abs(), -vals[b].im, vals[b].re);
        ka.partial_cmp(&kb).unwrap()
    });
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = Array2::<Complex64>::zeros((n, n));
    for (slot, &idx) in order.iter().enumerate() {
        let v = vecs.column(idx);
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let residual = (mc.dot(&v.to_owned()) - v.mapv(|x| x * vals[idx]))
            .iter()
            .map(|x| x.norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual > 1e-10 * norm {
            return Err(Error::Linalg(format!(
                "eigenpair residual {residual:.3e} exceeds tolerance"
            )));
        }
        eigenvalues.push(vals[idx]);
        for (r, x) in v.iter().enumerate() {
            eigenvectors[(r, slot)] = x / norm;
        }
    }
    Ok(ModeSet {
        eigenvalues,
        eigenvectors,
        labels: Vec::new(),
    })
}

/// Closed-form mode frequencies of the undamped symmetric phase.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticModes {
    /// `i Omega_m sqrt(1 + (Lambda/Lambda_c)^2)` (printed estimate).
    pub membrane: Complex64,
    /// `i omega_z sqrt(1 - (Lambda/Lambda_c)^2)`: the softening mode.
    pub displacement: Complex64,
    /// `i omega_s`: uncoupled below threshold.
    pub width: Complex64,
    /// Exact roots of the quartic
    /// `nu^2 = -(Omega^2 + omega_z^2 +- sqrt((Omega^2 - omega_z^2)^2 + 4 c1 c3)) / 2`,
    /// ordered `(+fast, -fast, +soft, -soft)`.
    pub exact_quartic: [Complex64; 4],
}

/// Estimated and exact eigenvalues of the 4x4 undamped block below threshold.
///
/// Requires `gamma = 0` (so `lr.omega_alpha` is the bare membrane frequency)
/// and the symmetric branch.
pub fn analytic_modes_gamma0(lr: &LinearResponse, lambda: f64, lambda_c: f64) -> Result<AnalyticModes> {
    if lambda >= lambda_c {
        return Err(Error::InvalidInput(format!(
            "analytic modes exist below threshold only (Lambda = {lambda}, Lambda_c = {lambda_c})"
        )));
    }
    let x2 = (lambda / lambda_c).powi(2);
    let om = lr.omega_alpha;
    let wz = lr.omega_zeta;
    let membrane = Complex64::new(0.0, om * (1.0 + x2).sqrt());
    let displacement = Complex64::new(0.0, wz * (1.0 - x2).sqrt());
    let width = Complex64::new(0.0, lr.omega_sigma);

    let s = om * om + wz * wz;
    let d = ((om * om - wz * wz).powi(2) + 4.0 * lr.c1 * lr.c3).sqrt();
    let fast = ((s + d) / 2.0).sqrt();
    let soft_sq = (s - d) / 2.0;
    if soft_sq < 0.0 {
        return Err(Error::Unstable(format!(
            "quartic soft mode squared is negative ({soft_sq:.3e}); state is beyond threshold"
        )));
    }
    let soft = soft_sq.sqrt();
    Ok(AnalyticModes {
        membrane,
        displacement,
        width,
        exact_quartic: [
            Complex64::new(0.0, fast),
            Complex64::new(0.0, -fast),
            Complex64::new(0.0, soft),
            Complex64::new(0.0, -soft),
        ],
    })
}

/// Assign branch labels across an ordered sweep of mode sets.
///
/// Labels are seeded on the first set by frequency proximity to
/// `seed_freqs = [membrane, displacement, width]` and propagated step to
/// step by maximal eigenvector overlap.  When the top two overlaps of a pick
/// are closer than 1e-6 the tie is broken by eigenvalue proximity and the
/// `(step, slot)` pair is reported.
pub fn track_modes(sets: &mut [ModeSet], seed_freqs: [f64; 3]) -> Result<Vec<(usize, usize)>> {
    if sets.is_empty() {
        return Ok(Vec::new());
    }
    let n = sets[0].eigenvalues.len();
    for set in sets.iter() {
        if set.eigenvalues.len() != n {
            return Err(Error::InvalidInput("mode sets must have equal dimension".into()));
        }
    }

    // Seed: each branch claims the two eigenvalues closest to its frequency.
    let branches = [BranchLabel::Membrane, BranchLabel::Displacement, BranchLabel::Width];
    let mut labels0 = vec![None::<BranchLabel>; n];
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new(); // (cost, slot, branch)
    for (bi, &f) in seed_freqs.iter().enumerate() {
        for slot in 0..n {
            pairs.push(((sets[0].eigenvalues[slot].im.abs() - f).abs(), slot, bi));
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut claimed = [0usize; 3];
    for (_, slot, bi) in pairs {
        if labels0[slot].is_none() && claimed[bi] < 2 {
            labels0[slot] = Some(branches[bi]);
            claimed[bi] += 1;
        }
    }
    sets[0].labels = labels0.into_iter().map(|l| l.unwrap()).collect();

    let mut ambiguous = Vec::new();
    for step in 1..sets.len() {
        let (prev, cur) = {
            let (a, b) = sets.split_at_mut(step);
            (&a[step - 1], &mut b[0])
        };
        // overlap[i][j] = |<v_i_prev, v_j_cur>|
        let mut overlap = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for j in 0..n {
                let dot: Complex64 = prev
                    .eigenvectors
                    .column(i)
                    .iter()
                    .zip(cur.eigenvectors.column(j).iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                overlap[i][j] = dot.norm();
            }
        }
        let mut used_prev = vec![false; n];
        let mut used_cur = vec![false; n];
        let mut labels = vec![None::<BranchLabel>; n];
        for _ in 0..n {
            // Global best among unassigned pairs.
            let mut best = (f64::MIN, 0, 0);
            let mut second = f64::MIN;
            for i in 0..n {
                if used_prev[i] {
                    continue;
                }
                for j in 0..n {
                    if used_cur[j] {
                        continue;
                    }
                    if overlap[i][j] > best.0 {
                        second = best.0;
                        best = (overlap[i][j], i, j);
                    } else if overlap[i][j] > second {
                        second = overlap[i][j];
                    }
                }
            }
            let (score, mut bi, mut bj) = best;
            if (score - second).abs() < 1e-6 {
                // Tie: among near-equal overlaps pick the closest eigenvalue.
                let mut best_dist = f64::MAX;
                for i in 0..n {
                    if used_prev[i] {
                        continue;
                    }
                    for j in 0..n {
                        if used_cur[j] || (overlap[i][j] - score).abs() >= 1e-6 {
                            continue;
                        }
                        let dist = (prev.eigenvalues[i] - cur.eigenvalues[j]).norm();
                        if dist < best_dist {
                            best_dist = dist;
                            bi = i;
                            bj = j;
                        }
                    }
                }
                ambiguous.push((step, bj));
            }
            used_prev[bi] = true;
            used_cur[bj] = true;
            labels[bj] = Some(prev.labels[bi]);
        }
        cur.labels = labels.into_iter().map(|l| l.unwrap()).collect();
    }
    Ok(ambiguous)
}

/// A 6x6 covariance of the quadratures `(q_a', p_a', q_z, p_z, q_s, p_s)`.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    pub matrix: Array2<f64>,
}

/// Which two-mode reduction to take before computing entanglement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModePair {
    MembraneDisplacement,
    MembraneWidth,
}

impl CovarianceMatrix {
    /// Reduced 4x4 covariance of the selected pair.
    pub fn reduced(&self, pair: ModePair) -> Array2<f64> {
        let idx: [usize; 4] = match pair {
            ModePair::MembraneDisplacement => [0, 1, 2, 3],
            ModePair::MembraneWidth => [0, 1, 4, 5],
        };
        let mut out = Array2::zeros((4, 4));
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out[(a, b)] = self.matrix[(i, j)];
            }
        }
        out
    }

    /// Symplectic eigenvalues: moduli of the eigenvalues of `i Omega C`,
    /// one per mode.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.matrix.nrows() / 2;
        let mut omega = Array2::<f64>::zeros((2 * n, 2 * n));
        for k in 0..n {
            omega[(2 * k, 2 * k + 1)] = 1.0;
            omega[(2 * k + 1, 2 * k)] = -1.0;
        }
        let prod = omega.dot(&self.matrix);
        let (vals, _) = prod.eig()?;
        let mut out: Vec<f64> = vals.iter().filter(|v| v.im > 0.0).map(|v| v.norm()).collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if out.len() != n {
            return Err(Error::Linalg(format!(
                "expected {n} symplectic eigenvalues, found {}",
                out.len()
            )));
        }
        Ok(out)
    }

    /// Largest variance in the matrix (diverges at the transition).
    pub fn largest_eigenvalue(&self) -> Result<f64> {
        let (vals, _) = self.matrix.eigh(UPLO::Lower)?;
        Ok(vals[vals.len() - 1])
    }
}

/// Ground-state covariance of the undamped three-mode Hamiltonian
///
/// ```text
/// H = sum_mu omega_mu (q_mu^2 + p_mu^2)/2
///     + 2 lambda_az q_a' q_z - 2 lambda_as q_a' q_s ,
/// ```
///
/// obtained by an explicit Bogoliubov transformation whose coefficients are
/// checked against the bosonic normalization `sum(|u|^2 - |v|^2) = 1`.
///
/// Only meaningful for `gamma = 0`; fails with an instability error when the
/// quadratic form is not positive (symmetric branch at or above threshold).
pub fn ground_state_covariance(lr: &LinearResponse) -> Result<CovarianceMatrix> {
    let omegas = [lr.omega_alpha, lr.omega_zeta, lr.omega_sigma];
    let mut k = Array2::<f64>::zeros((3, 3));
    for (i, w) in omegas.iter().enumerate() {
        k[(i, i)] = w * w;
    }
    k[(0, 1)] = 2.0 * lr.lambda_az * (omegas[0] * omegas[1]).sqrt();
    k[(1, 0)] = k[(0, 1)];
    k[(0, 2)] = -2.0 * lr.lambda_as * (omegas[0] * omegas[2]).sqrt();
    k[(2, 0)] = k[(0, 2)];

    let (nu_sq, basis) = k.eigh(UPLO::Lower)?;
    let scale = nu_sq.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
    if nu_sq[0] <= 1e-12 * scale {
        return Err(Error::Unstable(
            "soft mode at zero frequency: no ground state on this branch".into(),
        ));
    }

    // Bogoliubov coefficients b_mu = sum_k u_k[mu] d_k + v_k[mu] d_k^dag.
    let mut u = [[0.0f64; 3]; 3]; // u[k][mu]
    let mut v = [[0.0f64; 3]; 3];
    for kk in 0..3 {
        let nu = nu_sq[kk].sqrt();
        let mut norm = 0.0;
        for mu in 0..3 {
            let x = (omegas[mu] / nu).sqrt();
            u[kk][mu] = basis[(mu, kk)] * (x + 1.0 / x) / 2.0;
            v[kk][mu] = basis[(mu, kk)] * (x - 1.0 / x) / 2.0;
            norm += u[kk][mu] * u[kk][mu] - v[kk][mu] * v[kk][mu];
        }
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Linalg(format!(
                "Bogoliubov normalization violated: {norm}"
            )));
        }
    }

    let mut c = Array2::<f64>::zeros((6, 6));
    for mu in 0..3 {
        for nu in 0..3 {
            let mut qq = 0.0;
            let mut pp = 0.0;
            for kk in 0..3 {
                qq += 0.5 * (u[kk][mu] + v[kk][mu]) * (u[kk][nu] + v[kk][nu]);
                pp += 0.5 * (u[kk][mu] - v[kk][mu]) * (u[kk][nu] - v[kk][nu]);
            }
            c[(2 * mu, 2 * nu)] = qq;
            c[(2 * mu + 1, 2 * nu + 1)] = pp;
        }
    }
    Ok(CovarianceMatrix { matrix: c })
}

/// Logarithmic negativity of a two-mode reduction,
/// `E_N = max(0, -ln(2 nu_-))` with the partially transposed smallest
/// symplectic eigenvalue
/// `nu_- = 2^{-1/2} sqrt(Sigma - sqrt(Sigma^2 - 4 det C'))`,
/// `Sigma = det U + det W - 2 det V`.
pub fn log_negativity(c: &CovarianceMatrix, pair: ModePair) -> Result<f64> {
    let cp = c.reduced(pair);
    let det2 = |a: f64, b: f64, cc: f64, d: f64| a * d - b * cc;
    let det_u = det2(cp[(0, 0)], cp[(0, 1)], cp[(1, 0)], cp[(1, 1)]);
    let det_w = det2(cp[(2, 2)], cp[(2, 3)], cp[(3, 2)], cp[(3, 3)]);
    let det_v = det2(cp[(0, 2)], cp[(0, 3)], cp[(1, 2)], cp[(1, 3)]);
    let sigma = det_u + det_w - 2.0 * det_v;
    let det_c = cp.det()?;
    let disc = sigma * sigma - 4.0 * det_c;
    if disc < -1e-10 * sigma * sigma {
        return Err(Error::NumericalDomain(format!(
            "negative discriminant {disc:.3e} in the symplectic eigenvalue"
        )));
    }
    let inner = sigma - disc.max(0.0).sqrt();
    if inner < -1e-10 * sigma.abs() {
        return Err(Error::NumericalDomain(format!(
            "negative radicand {inner:.3e} in the symplectic eigenvalue"
        )));
    }
    let nu_minus = (inner.max(0.0) / 2.0).sqrt();
    Ok((-(2.0 * nu_minus).ln()).max(0.0))
}
