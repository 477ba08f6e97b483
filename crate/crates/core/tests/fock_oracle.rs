//! Cross-validation of the Gaussian-state covariance and logarithmic
//! negativity against a brute-force truncated Fock-space diagonalization.

#[path = "support/fock.rs"]
mod fock;

use fock::FockModel;
use membec::linres::{self, LinearResponse, ModePair};
use membec::variational;
use membec::ModelParams;

/// A weakly coupled three-mode instance in the shape the linearization
/// produces; the `c` constants are not used by the covariance machinery.
fn synthetic(lambda_az: f64, lambda_as: f64) -> LinearResponse {
    LinearResponse {
        omega_alpha: 2.3,
        omega_zeta: 1.0,
        omega_sigma: 1.7,
        c1: 0.0,
        c2: 0.0,
        c3: 0.0,
        c4: 0.0,
        lambda_az,
        lambda_as,
        epsilon_scales: [1.0; 3],
    }
}

fn fock_model(lr: &LinearResponse, dims: &[usize]) -> FockModel {
    let mut couplings = vec![(0usize, 1usize, lr.lambda_az)];
    if dims.len() == 3 {
        couplings.push((0, 2, -lr.lambda_as));
    }
    FockModel {
        omegas: match dims.len() {
            2 => vec![lr.omega_alpha, lr.omega_zeta],
            _ => vec![lr.omega_alpha, lr.omega_zeta, lr.omega_sigma],
        },
        couplings,
        dims: dims.to_vec(),
    }
}

#[test]
fn vacuum_limit_of_the_oracle() {
    let lr = synthetic(0.0, 0.0);
    let model = fock_model(&lr, &[6, 6, 6]);
    let (e0, ground) = model.ground_state(100);
    assert!(e0.abs() < 1e-12);
    for i in 0..3 {
        assert!((model.qq(&ground, i, i) - 0.5).abs() < 1e-12);
        assert!((model.pp(&ground, i, i) - 0.5).abs() < 1e-12);
    }
}

#[test]
fn covariance_matches_two_mode_fock_at_cutoff_40() {
    let lr = synthetic(0.08, 0.0);
    let c = linres::ground_state_covariance(&lr).unwrap();
    let model = fock_model(&lr, &[41, 41]);
    let (_, ground) = model.ground_state(400);
    // Quadrature order in the covariance: (q_a, p_a, q_z, p_z, ...).
    let pairs = [
        (c.matrix[(0, 0)], model.qq(&ground, 0, 0)),
        (c.matrix[(2, 2)], model.qq(&ground, 1, 1)),
        (c.matrix[(0, 2)], model.qq(&ground, 0, 1)),
        (c.matrix[(1, 1)], model.pp(&ground, 0, 0)),
        (c.matrix[(3, 3)], model.pp(&ground, 1, 1)),
        (c.matrix[(1, 3)], model.pp(&ground, 0, 1)),
    ];
    for (gauss, brute) in pairs {
        assert!(
            (gauss - brute).abs() <= 1e-4 * brute.abs().max(0.1),
            "covariance mismatch: {gauss} vs {brute}"
        );
    }
}

#[test]
fn displacement_variance_matches_three_mode_fock_at_cutoff_40() {
    let lr = synthetic(0.08, 0.06);
    let c = linres::ground_state_covariance(&lr).unwrap();
    let model = fock_model(&lr, &[41, 41, 41]);
    let (_, ground) = model.ground_state(400);
    let brute = model.qq(&ground, 1, 1);
    let gauss = c.matrix[(2, 2)];
    assert!(
        (gauss - brute).abs() <= 1e-4 * brute.abs(),
        "<q_zeta^2> mismatch: {gauss} vs {brute}"
    );
    let brute_s = model.qq(&ground, 2, 2);
    assert!((c.matrix[(4, 4)] - brute_s).abs() <= 1e-4 * brute_s.abs());
}

#[test]
fn log_negativity_matches_pure_two_mode_schmidt() {
    for coupling in [0.03, 0.08, 0.15] {
        let lr = synthetic(coupling, 0.0);
        let c = linres::ground_state_covariance(&lr).unwrap();
        let gauss = linres::log_negativity(&c, ModePair::MembraneDisplacement).unwrap();
        let model = fock_model(&lr, &[41, 41]);
        let (_, ground) = model.ground_state(400);
        let brute = fock::pure_log_negativity(&model, &ground);
        assert!(
            (gauss - brute).abs() < 1e-3,
            "E_N mismatch at coupling {coupling}: {gauss} vs {brute}"
        );
        assert!(gauss > 1e-3, "instance should be entangled");
    }
}

#[test]
fn log_negativity_matches_mixed_three_mode_partial_transpose() {
    let lr = synthetic(0.08, 0.06);
    let c = linres::ground_state_covariance(&lr).unwrap();
    let model = fock_model(&lr, &[10, 10, 10]);
    let (_, ground) = model.ground_state(300);
    let cases = [
        (ModePair::MembraneDisplacement, 0usize, 1usize),
        (ModePair::MembraneWidth, 0, 2),
    ];
    for (pair, a, b) in cases {
        let gauss = linres::log_negativity(&c, pair).unwrap();
        let brute = fock::mixed_log_negativity(&model, &ground, a, b);
        assert!(
            (gauss - brute).abs() < 1e-3,
            "E_N mismatch for {pair:?}: {gauss} vs {brute}"
        );
    }
}

#[test]
fn physical_below_threshold_instance() {
    // Paper parameters at weak coupling, gamma = 0.
    let p = ModelParams::paper_default().with_gamma(0.0).with_lambda(5.0);
    let ss = variational::steady_state(&p, 1).unwrap();
    let lr = linres::linearize(&p, &ss).unwrap();
    let c = linres::ground_state_covariance(&lr).unwrap();
    let model = fock_model(&lr, &[12, 12, 12]);
    let (_, ground) = model.ground_state(300);
    let brute = model.qq(&ground, 1, 1);
    let gauss = c.matrix[(2, 2)];
    assert!(
        (gauss - brute).abs() <= 1e-4 * brute.abs(),
        "<q_zeta^2> mismatch: {gauss} vs {brute}"
    );
    let gauss_en = linres::log_negativity(&c, ModePair::MembraneDisplacement).unwrap();
    let brute_en = fock::mixed_log_negativity(&model, &ground, 0, 1);
    assert!(
        (gauss_en - brute_en).abs() < 1e-3,
        "E_N mismatch: {gauss_en} vs {brute_en}"
    );
}
