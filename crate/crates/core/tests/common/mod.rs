//! Independent reference computations for the integration tests.

#![allow(dead_code)]

use cvqkd_core::symplectic::SymplecticForm;
use cvqkd_core::TwoModeCovariance;

/// Symplectic spectrum from the eigenvalues of `Ωγ` (a real Schur
/// decomposition); they come in pairs `±iν`.
pub fn generic_symplectic_spectrum(gamma: &TwoModeCovariance) -> (f64, f64) {
    let m = SymplecticForm::matrix() * gamma.matrix();
    let mut nus: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.im.abs()).collect();
    nus.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (0.5 * (nus[0] + nus[1]), 0.5 * (nus[2] + nus[3]))
}

/// Sign changes along a sampled curve.
pub fn sign_changes(values: &[f64]) -> usize {
    values.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count()
}
