//! Gaussian-ansatz reduction of the coupled condensate-membrane dynamics.
//!
//! The condensate is described by a displaced Gaussian with center `zeta`,
//! width `sigma` and two phase parameters; together with the real membrane
//! amplitude this gives a potential energy
//!
//! ```text
//! E = gN / (sqrt(8 pi) sigma)
//!     - [V sqrt(1 - S^2) + 4 Lambda alpha' S] / (2 exp(sigma^2))
//!     + omega_R / (2 sigma^2) + Omega_eff alpha'^2 ,     S = sin(2 zeta),
//! ```
//!
//! whose minima are the steady states.  Above a critical coupling the
//! symmetric minimum at `S = 0` splits into a degenerate pair at `+-S0`:
//! a second-order nonequilibrium phase transition.  This module provides the
//! energy, its analytic gradient and Hessian, steady-state and
//! critical-coupling solvers, the closed-form order parameter, the
//! normalized energy surface and time integration of the variational
//! equations of motion.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::ModelParams;

const SQRT_8PI: f64 = 5.013256549262001; // sqrt(8 pi)
const PI: f64 = std::f64::consts::PI;

/// Variational parameters of the condensate plus the membrane amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    /// Center-of-mass position, wrapped into the principal cell `(-pi/2, pi/2]`.
    pub zeta: f64,
    /// Condensate width, `> 0`.
    pub sigma: f64,
    /// Linear phase.
    pub kappa: f64,
    /// Quadratic phase.
    pub beta: f64,
    /// Complex membrane amplitude, scaled by `1/sqrt(N)`.
    pub alpha: Complex64,
}

impl GaussianState {
    pub fn new(zeta: f64, sigma: f64, kappa: f64, beta: f64, alpha: Complex64) -> Self {
        GaussianState {
            zeta: wrap_zeta(zeta),
            sigma,
            kappa,
            beta,
            alpha,
        }
    }

    /// Order parameter `S = sin(2 zeta)`.
    pub fn order_parameter(&self) -> f64 {
        (2.0 * self.zeta).sin()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::Domain(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if !(self.zeta > -PI / 2.0 && self.zeta <= PI / 2.0) {
            return Err(Error::Domain(format!(
                "zeta must lie in the principal cell, got {}",
                self.zeta
            )));
        }
        Ok(())
    }
}

/// Wrap a position into the principal lattice cell `(-pi/2, pi/2]`.
pub fn wrap_zeta(zeta: f64) -> f64 {
    let mut z = (zeta + PI / 2.0).rem_euclid(PI) - PI / 2.0;
    if z <= -PI / 2.0 {
        z += PI;
    }
    z
}

/// Equilibrium configuration of the coupled system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    /// Real part of the membrane amplitude.
    pub alpha_prime0: f64,
    /// Imaginary part, slaved to the real part by the damping:
    /// `alpha''_0 = gamma alpha'_0 / Omega_m`.
    pub alpha_dprime0: f64,
    /// Equilibrium condensate width.
    pub sigma0: f64,
    /// Order parameter in `[-1, 1]`; exactly 0 below the critical coupling.
    pub s0: f64,
    /// Center-of-mass shift, `zeta0 = asin(S0) / 2`.
    pub zeta0: f64,
    /// `+1` or `-1` on the symmetry-broken branch, `0` on the symmetric one.
    pub branch: i8,
}

impl SteadyState {
    pub fn membrane_alpha(&self) -> Complex64 {
        Complex64::new(self.alpha_prime0, self.alpha_dprime0)
    }
}

/// Potential energy of a configuration `(alpha', sigma, S)`.
pub fn energy(alpha_prime: f64, sigma: f64, s: f64, p: &ModelParams) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be > 0, got {sigma}")));
    }
    if !(s.abs() <= 1.0) {
        return Err(Error::Domain(format!("|S| must be <= 1, got {s}")));
    }
    let gauss = (-sigma * sigma).exp();
    Ok(p.g_n / (SQRT_8PI * sigma)
        - gauss * (p.lattice_depth * (1.0 - s * s).sqrt() + 4.0 * p.lambda * alpha_prime * s) / 2.0
        + p.omega_r / (2.0 * sigma * sigma)
        + p.effective_omega_m() * alpha_prime * alpha_prime)
}

/// Analytic gradient `(dE/dalpha', dE/dsigma, dE/dzeta)` with `S = sin(2 zeta)`.
pub fn energy_gradient(alpha_prime: f64, sigma: f64, zeta: f64, p: &ModelParams) -> Result<[f64; 3]> {
    let s = (2.0 * zeta).sin();
    let cos2z = (2.0 * zeta).cos();
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be > 0, got {sigma}")));
    }
    let one_m_s2 = 1.0 - s * s;
    if one_m_s2 <= 0.0 {
        return Err(Error::Domain("gradient undefined at |S| = 1".into()));
    }
    let gauss = (-sigma * sigma).exp();
    let bracket = p.lattice_depth * one_m_s2.sqrt() + 4.0 * p.lambda * alpha_prime * s;
    let d_alpha = -2.0 * p.lambda * s * gauss + 2.0 * p.effective_omega_m() * alpha_prime;
    let d_sigma = -p.g_n / (SQRT_8PI * sigma * sigma) + sigma * gauss * bracket
        - p.omega_r / (sigma * sigma * sigma);
    let d_zeta = gauss
        * cos2z
        * (p.lattice_depth * s / one_m_s2.sqrt() - 4.0 * p.lambda * alpha_prime);
    Ok([d_alpha, d_sigma, d_zeta])
}

/// Analytic Hessian of the energy in the coordinates `(alpha', sigma, zeta)`.
pub fn energy_hessian(alpha_prime: f64, sigma: f64, zeta: f64, p: &ModelParams) -> Result<[[f64; 3]; 3]> {
    let s = (2.0 * zeta).sin();
    let cos2z = (2.0 * zeta).cos();
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be > 0, got {sigma}")));
    }
    let one_m_s2 = 1.0 - s * s;
    if one_m_s2 <= 0.0 {
        return Err(Error::Domain("Hessian undefined at |S| = 1".into()));
    }
    let gauss = (-sigma * sigma).exp();
    let root = one_m_s2.sqrt();
    let bracket = p.lattice_depth * root + 4.0 * p.lambda * alpha_prime * s;
    let tilt = p.lattice_depth * s / root - 4.0 * p.lambda * alpha_prime;

    let h_aa = 2.0 * p.effective_omega_m();
    let h_as = 4.0 * p.lambda * sigma * s * gauss;
    let h_az = -4.0 * p.lambda * cos2z * gauss;
    let h_ss = 2.0 * p.g_n / (SQRT_8PI * sigma * sigma * sigma)
        + (1.0 - 2.0 * sigma * sigma) * gauss * bracket
        + 3.0 * p.omega_r / sigma.powi(4);
    let h_sz = -2.0 * sigma * gauss * cos2z * tilt;
    let h_zz = gauss
        * (-2.0 * s * tilt + 2.0 * p.lattice_depth * cos2z * cos2z / (one_m_s2 * root));
    Ok([[h_aa, h_as, h_az], [h_as, h_ss, h_sz], [h_az, h_sz, h_zz]])
}

/// Width equation on the symmetric branch:
/// `V sigma^4 exp(-sigma^2) = omega_R + gN sigma / sqrt(8 pi)`.
fn solve_width_symmetric(p: &ModelParams) -> Result<f64> {
    let map = |sigma: f64| {
        ((p.omega_r + p.g_n * sigma / SQRT_8PI) * (sigma * sigma).exp() / p.lattice_depth).powf(0.25)
    };
    fixed_point(map, (p.omega_r / p.lattice_depth).powf(0.25), "symmetric width equation")
}

/// Width equation on the symmetry-broken branch:
/// `omega_R + gN sigma / sqrt(8 pi) = V (Lambda / Lambda_cV)^2 sigma^4 exp(-2 sigma^2)`.
fn solve_width_broken(p: &ModelParams) -> Result<f64> {
    let lcv = p.lambda_cv();
    let ratio2 = (lcv / p.lambda) * (lcv / p.lambda);
    let map = |sigma: f64| {
        ((p.omega_r + p.g_n * sigma / SQRT_8PI) * (2.0 * sigma * sigma).exp() * ratio2
            / p.lattice_depth)
            .powf(0.25)
    };
    fixed_point(map, (p.omega_r / p.lattice_depth).powf(0.25), "broken-branch width equation")
}

/// Plain fixed-point iteration.  The width maps contract like `sigma0^2 < 1`
/// near their roots for `V >= 10`, so no damping is needed there.
fn fixed_point(map: impl Fn(f64) -> f64, start: f64, what: &'static str) -> Result<f64> {
    let mut sigma = start;
    for _ in 0..2000 {
        let next = map(sigma);
        if !next.is_finite() {
            return Err(Error::NumericalDomain(format!("{what}: iterate left the domain")));
        }
        let delta = (next - sigma).abs();
        sigma = next;
        if delta <= 1e-15 * sigma.max(1.0) {
            return Ok(sigma);
        }
    }
    Err(Error::NoConvergence {
        what,
        iterations: 2000,
        residual: (map(sigma) - sigma).abs(),
    })
}

/// Solve for the equilibrium configuration.
///
/// Below the critical coupling this returns the symmetric state (`S0 = 0`,
/// `branch = 0`) regardless of the requested branch; above it, the
/// symmetry-broken state with the sign of `branch`.  The residuals of the
/// two printed steady-state equations are verified to `1e-10`.
pub fn steady_state(p: &ModelParams, branch: i8) -> Result<SteadyState> {
    p.validate()?;
    if branch != 1 && branch != -1 {
        return Err(Error::InvalidInput(format!("branch must be +1 or -1, got {branch}")));
    }
    let lcv = p.lambda_cv();
    if p.lambda > lcv {
        if let Some(ss) = broken_steady_state(p, branch)? {
            return Ok(ss);
        }
    }
    symmetric_steady_state(p)
}

fn symmetric_steady_state(p: &ModelParams) -> Result<SteadyState> {
    let sigma0 = solve_width_symmetric(p)?;
    let res = (p.omega_r + p.g_n * sigma0 / SQRT_8PI)
        - p.lattice_depth * sigma0.powi(4) * (-sigma0 * sigma0).exp();
    check_residual(res, "symmetric width equation", 2000)?;
    Ok(SteadyState {
        alpha_prime0: 0.0,
        alpha_dprime0: 0.0,
        sigma0,
        s0: 0.0,
        zeta0: 0.0,
        branch: 0,
    })
}

/// Returns `None` when no symmetry-broken solution exists at this coupling.
fn broken_steady_state(p: &ModelParams, branch: i8) -> Result<Option<SteadyState>> {
    let sigma0 = solve_width_broken(p)?;
    let lcv = p.lambda_cv();
    // 1 - S0^2 in a cancellation-free form.
    let complement = (lcv / p.lambda).powi(4) * (2.0 * sigma0 * sigma0).exp();
    let s0_sq = 1.0 - complement;
    if s0_sq <= 0.0 {
        return Ok(None);
    }
    let s0 = branch as f64 * s0_sq.sqrt();
    let omega_eff = p.effective_omega_m();
    let alpha_prime0 = p.lambda * s0 * (-sigma0 * sigma0).exp() / omega_eff;

    let root = complement.sqrt();
    let res_width = root * (p.omega_r + p.g_n * sigma0 / SQRT_8PI)
        - p.lattice_depth * sigma0.powi(4) * (-sigma0 * sigma0).exp();
    check_residual(res_width, "broken-branch width equation", 2000)?;
    let res_tilt = s0 * (p.lambda * p.lambda * root - lcv * lcv * (sigma0 * sigma0).exp());
    check_residual(
        res_tilt / (p.lambda * p.lambda).max(1.0),
        "steady-state tilt equation",
        2000,
    )?;

    Ok(Some(SteadyState {
        alpha_prime0,
        alpha_dprime0: p.gamma * alpha_prime0 / p.omega_m,
        sigma0,
        s0,
        zeta0: s0.asin() / 2.0,
        branch,
    }))
}

fn check_residual(res: f64, what: &'static str, iterations: usize) -> Result<()> {
    if res.abs() >= 1e-10 {
        return Err(Error::NoConvergence {
            what,
            iterations,
            residual: res.abs(),
        });
    }
    Ok(())
}

/// Critical coupling `Lambda_c`: the smallest root above `Lambda_cV` of
///
/// ```text
/// omega_R + gN / sqrt(8 pi) * sqrt(2 ln r) = 4 V (ln r / r)^2 ,   r = Lambda_c / Lambda_cV,
/// ```
///
/// solved by bisection in `u = ln r` over `(0, ln 10]` to residual `1e-12`.
pub fn critical_coupling(p: &ModelParams) -> Result<f64> {
    p.validate()?;
    let lcv = p.lambda_cv();
    let h = |u: f64| {
        4.0 * p.lattice_depth * (u * (-u).exp()).powi(2)
            - p.omega_r
            - p.g_n / SQRT_8PI * (2.0 * u).sqrt()
    };
    // h < 0 as u -> 0+; scan for the first sign change on a geometric grid, so
    // the root is caught even when it sits very close to u = 0 (deep lattices).
    let u_max = 10.0f64.ln();
    let n_scan = 4000;
    let u_min = 1e-9;
    let ratio = (u_max / u_min).powf(1.0 / n_scan as f64);
    let mut u_lo = 0.0;
    let mut u_hi = None;
    let mut u = u_min;
    for _ in 0..=n_scan {
        if h(u) > 0.0 {
            u_hi = Some(u);
            break;
        }
        u_lo = u;
        u = (u * ratio).min(u_max);
    }
    let mut hi = u_hi.ok_or(Error::NoRoot {
        what: "critical-coupling equation",
        lo: 1.0,
        hi: 10.0,
    })?;
    let mut lo = u_lo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let u_root = 0.5 * (lo + hi);
    let residual = h(u_root).abs();
    if residual >= 1e-12 {
        return Err(Error::NoConvergence {
            what: "critical-coupling bisection",
            iterations: 200,
            residual,
        });
    }
    Ok(lcv * u_root.exp())
}

/// Closed-form order parameter at coupling `Lambda`:
/// zero up to the critical coupling, then
/// `S0 = sqrt(1 - (Lambda_cV / Lambda)^4 exp(2 sigma0^2))` (positive root).
pub fn order_parameter(p: &ModelParams, lambda: f64) -> Result<f64> {
    let pp = p.with_lambda(lambda);
    let lambda_c = critical_coupling(&pp)?;
    if lambda <= lambda_c {
        return Ok(0.0);
    }
    let ss = steady_state(&pp, 1)?;
    let s2 = 1.0 - (pp.lambda_cv() / lambda).powi(4) * (2.0 * ss.sigma0 * ss.sigma0).exp();
    Ok(s2.max(0.0).sqrt())
}

/// Adiabatically eliminating the membrane leaves the separable long-range
/// interaction `G(z, z') = G0 sin(2z) sin(2z')`; this returns its scaled
/// strength `N G0 = -2 Lambda^2 / Omega_m_eff`.
pub fn adiabatic_coupling_g0(p: &ModelParams) -> f64 {
    -2.0 * p.lambda * p.lambda / p.effective_omega_m()
}

/// Energy at fixed order parameter `S`, minimized over the width and the
/// membrane amplitude (the latter in closed form).  Returns
/// `(energy, sigma, alpha')` at the constrained minimum.
pub fn min_energy_at_s(p: &ModelParams, s: f64) -> Result<(f64, f64, f64)> {
    if !(s.abs() <= 1.0) {
        return Err(Error::Domain(format!("|S| must be <= 1, got {s}")));
    }
    let omega_eff = p.effective_omega_m();
    let root = (1.0 - s * s).sqrt();
    // sigma^3 * dE/dsigma with alpha' already eliminated.
    let slope = |sigma: f64| {
        let g1 = (-sigma * sigma).exp();
        let g2 = (-2.0 * sigma * sigma).exp();
        -p.g_n * sigma / SQRT_8PI
            + sigma.powi(4) * g1 * p.lattice_depth * root
            + 4.0 * sigma.powi(4) * p.lambda * p.lambda * s * s * g2 / omega_eff
            - p.omega_r
    };
    // First sign change from below marks the single minimum of E(sigma).
    let grid = 400;
    let (s_min, s_max) = (1e-3f64, 8.0f64);
    let ratio = (s_max / s_min).powf(1.0 / grid as f64);
    let mut lo = s_min;
    let mut bracket = None;
    let mut x = s_min;
    for _ in 0..=grid {
        let next = x * ratio;
        if slope(x) < 0.0 && slope(next) >= 0.0 {
            bracket = Some((x, next));
            break;
        }
        lo = x;
        x = next;
    }
    let (mut a, mut b) = bracket.ok_or_else(|| {
        Error::Domain(format!("no width minimum exists at S = {s} (scanned sigma <= {lo:.3})"))
    })?;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if slope(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let sigma = 0.5 * (a + b);
    let alpha_prime = p.lambda * s * (-sigma * sigma).exp() / omega_eff;
    let e = energy(alpha_prime, sigma, s, p)?;
    Ok((e, sigma, alpha_prime))
}

/// Normalized potential energy surface over an `(S, Lambda)` grid.
#[derive(Debug, Clone)]
pub struct EnergySurface {
    pub s_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    /// `epsilon[i][j]` corresponds to `(lambda_values[i], s_values[j])`;
    /// failed cells hold NaN.
    pub epsilon: ndarray::Array2<f64>,
    /// Positive minimum locus `S0(Lambda)`.
    pub minima: Vec<f64>,
    pub failed_cells: Vec<(usize, usize)>,
}

/// Build the surface `epsilon(S, Lambda) = (E(S) - E(S0)) / max(E(S) - E(S0))`
/// where each `E(S)` is minimized over width and membrane amplitude.
pub fn energy_surface(p: &ModelParams, s_grid: &[f64], lambda_grid: &[f64]) -> Result<EnergySurface> {
    if s_grid.is_empty() || lambda_grid.is_empty() {
        return Err(Error::InvalidInput("energy surface grids must be nonempty".into()));
    }
    if let Some(bad) = s_grid.iter().find(|s| !(s.abs() <= 1.0)) {
        return Err(Error::Domain(format!("|S| must be <= 1 on the grid, got {bad}")));
    }
    let mut epsilon = ndarray::Array2::<f64>::zeros((lambda_grid.len(), s_grid.len()));
    let mut minima = Vec::with_capacity(lambda_grid.len());
    let mut failed = Vec::new();
    for (i, &lambda) in lambda_grid.iter().enumerate() {
        let pl = p.with_lambda(lambda);
        let ss = steady_state(&pl, 1)?;
        minima.push(ss.s0.abs());
        let (e0, _, _) = min_energy_at_s(&pl, ss.s0)?;
        let mut col = Vec::with_capacity(s_grid.len());
        for (j, &s) in s_grid.iter().enumerate() {
            match min_energy_at_s(&pl, s) {
                Ok((e, _, _)) => col.push(e - e0),
                Err(_) => {
                    col.push(f64::NAN);
                    failed.push((i, j));
                }
            }
        }
        let max = col.iter().copied().filter(|x| x.is_finite()).fold(0.0f64, f64::max);
        let scale = if max > 0.0 { max } else { 1.0 };
        for (j, v) in col.into_iter().enumerate() {
            epsilon[(i, j)] = v / scale;
        }
    }
    Ok(EnergySurface {
        s_values: s_grid.to_vec(),
        lambda_values: lambda_grid.to_vec(),
        epsilon,
        minima,
        failed_cells: failed,
    })
}

/// Sampled solution of the variational equations of motion.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GaussianState>,
    /// Total variational energy (potential plus the kinetic terms of the
    /// three coordinates); a Lyapunov function when the membrane is damped.
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOpts {
    /// Record every this many accepted steps.
    pub sample_every: usize,
    /// Step-doubling error control instead of a fixed step.
    pub adaptive: bool,
    /// Local error tolerance in adaptive mode.
    pub local_tol: f64,
}

impl Default for EvolveOpts {
    fn default() -> Self {
        EvolveOpts {
            sample_every: 100,
            adaptive: false,
            local_tol: 1e-10,
        }
    }
}

/// Integrate the variational equations of motion with a fixed-step leapfrog
/// (damping applied to the membrane velocity by exact exponential factors).
///
/// The second-order system is
/// `alpha''  : dd(alpha') + 2 gamma d(alpha') = -(Omega_m / 2) dE/dalpha'`,
/// `zeta     : dd(zeta)  = -2 omega_R dE/dzeta`,
/// `sigma    : dd(sigma) = -4 omega_R dE/dsigma`;
/// the phases are slaved to the velocities via `zeta' = 2 omega_R (kappa + 2 beta zeta)`
/// and `sigma' = 4 omega_R beta sigma` and recovered in the samples.
pub fn evolve(initial: &GaussianState, p: &ModelParams, t_end: f64, dt: f64) -> Result<Trajectory> {
    evolve_with(initial, p, t_end, dt, &EvolveOpts::default())
}

#[derive(Clone, Copy)]
struct PhaseSpace {
    x: [f64; 3], // alpha', zeta, sigma
    v: [f64; 3],
}

pub fn evolve_with(
    initial: &GaussianState,
    p: &ModelParams,
    t_end: f64,
    dt: f64,
    opts: &EvolveOpts,
) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be > 0, got {dt}")));
    }
    initial.validate()?;
    p.validate()?;

    let mut y = PhaseSpace {
        x: [initial.alpha.re, initial.zeta, initial.sigma],
        v: [
            p.omega_m * initial.alpha.im - p.gamma * initial.alpha.re,
            2.0 * p.omega_r * (initial.kappa + 2.0 * initial.beta * initial.zeta),
            4.0 * p.omega_r * initial.beta * initial.sigma,
        ],
    };

    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        energies: Vec::new(),
    };
    record(&mut traj, 0.0, &y, p)?;

    let mut t = 0.0;
    let mut h = dt.min(t_end);
    let mut accepted: usize = 0;
    while t < t_end * (1.0 - 1e-15) {
        h = h.min(t_end - t);
        if opts.adaptive {
            loop {
                let full = leapfrog_step(&y, p, h)?;
                let half = leapfrog_step(&leapfrog_step(&y, p, 0.5 * h)?, p, 0.5 * h)?;
                let err = full
                    .x
                    .iter()
                    .chain(full.v.iter())
                    .zip(half.x.iter().chain(half.v.iter()))
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                if err <= opts.local_tol {
                    y = half;
                    t += h;
                    if err < 0.01 * opts.local_tol {
                        h = (2.0 * h).min(dt);
                    }
                    break;
                }
                h *= 0.5;
                if h < 1e-14 * t_end.max(1.0) {
                    return Err(Error::StepUnderflow { t });
                }
            }
        } else {
            y = leapfrog_step(&y, p, h)?;
            t += h;
        }
        accepted += 1;
        if accepted % opts.sample_every == 0 || t >= t_end * (1.0 - 1e-15) {
            record(&mut traj, t, &y, p)?;
        }
    }
    Ok(traj)
}

fn leapfrog_step(y: &PhaseSpace, p: &ModelParams, dt: f64) -> Result<PhaseSpace> {
    let mut out = *y;
    let damp = (-p.gamma * dt).exp();
    out.v[0] *= damp;
    let a = accelerations(&out, p)?;
    for i in 0..3 {
        out.v[i] += 0.5 * dt * a[i];
        out.x[i] += dt * out.v[i];
    }
    out.x[1] = wrap_zeta(out.x[1]);
    if out.x[2] <= 0.0 {
        return Err(Error::Domain(format!("width collapsed to {} during evolution", out.x[2])));
    }
    let a = accelerations(&out, p)?;
    for i in 0..3 {
        out.v[i] += 0.5 * dt * a[i];
    }
    out.v[0] *= damp;
    Ok(out)
}

fn accelerations(y: &PhaseSpace, p: &ModelParams) -> Result<[f64; 3]> {
    let g = energy_gradient(y.x[0], y.x[2], y.x[1], p)?;
    Ok([
        -0.5 * p.omega_m * g[0],
        -2.0 * p.omega_r * g[2],
        -4.0 * p.omega_r * g[1],
    ])
}

fn record(traj: &mut Trajectory, t: f64, y: &PhaseSpace, p: &ModelParams) -> Result<()> {
    let beta = y.v[2] / (4.0 * p.omega_r * y.x[2]);
    let kappa = y.v[1] / (2.0 * p.omega_r) - 2.0 * beta * y.x[1];
    let alpha_dprime = (y.v[0] + p.gamma * y.x[0]) / p.omega_m;
    let s = (2.0 * y.x[1]).sin();
    let e_pot = energy(y.x[0], y.x[2], s, p)?;
    let e = e_pot
        + y.v[0] * y.v[0] / p.omega_m
        + y.v[1] * y.v[1] / (4.0 * p.omega_r)
        + y.v[2] * y.v[2] / (8.0 * p.omega_r);
    if !e.is_finite() {
        return Err(Error::NanDetected {
            context: "variational evolution",
            step: traj.times.len(),
        });
    }
    traj.times.push(t);
    traj.states.push(GaussianState {
        zeta: y.x[1],
        sigma: y.x[2],
        kappa,
        beta,
        alpha: Complex64::new(y.x[0], alpha_dprime),
    });
    traj.energies.push(e);
    Ok(())
}
