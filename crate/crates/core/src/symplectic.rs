//! Two-mode Gaussian-state algebra in shot-noise units.
//!
//! Mode ordering is `(x_A, p_A, x_B, p_B)` and the vacuum quadrature variance
//! is 1. Everything here is a pure function of its inputs.

use nalgebra::{Matrix2, Matrix4, SMatrix, Vector2};
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance on symplectic eigenvalues (and on the Hermitian test) below which
/// a state is still accepted as physical.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Variances below this are treated as zero by the homodyne pseudoinverse.
pub const PINV_THRESHOLD: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-12;

/// Real symmetric 4x4 covariance matrix of a two-mode Gaussian state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeCovariance(Matrix4<f64>);

impl TwoModeCovariance {
    pub fn new(entries: Matrix4<f64>) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("covariance matrix has non-finite entries"));
        }
        let scale = entries.amax().max(1.0);
        for i in 0..4 {
            for j in (i + 1)..4 {
                if (entries[(i, j)] - entries[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::domain(format!(
                        "covariance matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self(entries))
    }

    pub fn from_row_slice(rows: &[f64; 16]) -> Result<Self> {
        Self::new(Matrix4::from_row_slice(rows))
    }

    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    /// Local block of mode A.
    pub fn mode_a(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(0, 0).into_owned()
    }

    /// Local block of mode B.
    pub fn mode_b(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(2, 2).into_owned()
    }

    /// Off-diagonal block correlating A (rows) with B (columns).
    pub fn correlations(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(0, 2).into_owned()
    }

    /// True when no entry couples an x quadrature to a p quadrature, in which
    /// case the matrix splits into independent x and p blocks.
    fn is_quadrature_diagonal(&self) -> bool {
        let m = &self.0;
        [(0, 1), (0, 3), (1, 2), (2, 3)]
            .iter()
            .all(|&(i, j)| m[(i, j)] == 0.0 && m[(j, i)] == 0.0)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        if self.is_quadrature_diagonal() {
            let det_x = m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)];
            let det_p = m[(1, 1)] * m[(3, 3)] - m[(1, 3)] * m[(3, 1)];
            det_x * det_p
        } else {
            m.determinant()
        }
    }

    /// `Δ² - 4 det γ` of the invariant equation.
    ///
    /// For x/p-decoupled matrices this uses the factorised form
    /// `(a1 a2 - b1 b2)² + 4 (a1 c2 + b2 c1)(a2 c1 + b1 c2)`, which stays
    /// accurate for nearly pure states where the expanded form cancels.
    fn invariant_discriminant(&self, delta: f64) -> f64 {
        if self.is_quadrature_diagonal() {
            let m = &self.0;
            let (a1, a2) = (m[(0, 0)], m[(1, 1)]);
            let (b1, b2) = (m[(2, 2)], m[(3, 3)]);
            let (c1, c2) = (m[(0, 2)], m[(1, 3)]);
            (a1 * a2 - b1 * b2).powi(2) + 4.0 * (a1 * c2 + b2 * c1) * (a2 * c1 + b1 * c2)
        } else {
            delta * delta - 4.0 * self.determinant()
        }
    }

    /// Second symplectic invariant `det A + det B + 2 det C`.
    pub fn seralian(&self) -> f64 {
        self.mode_a().determinant()
            + self.mode_b().determinant()
            + 2.0 * self.correlations().determinant()
    }
}

/// The two-mode symplectic form, a direct sum of `[[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SymplecticForm;

impl SymplecticForm {
    pub fn matrix() -> Matrix4<f64> {
        let mut omega = Matrix4::zeros();
        omega[(0, 1)] = 1.0;
        omega[(1, 0)] = -1.0;
        omega[(2, 3)] = 1.0;
        omega[(3, 2)] = -1.0;
        omega
    }
}

/// Symplectic eigenvalues, `nu1 >= nu2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymplecticSpectrum {
    pub nu1: f64,
    pub nu2: f64,
}

impl SymplecticSpectrum {
    pub fn is_physical(&self) -> bool {
        self.nu2 >= 1.0 - PHYSICALITY_TOL
    }
}

/// Covariance matrix of mode A conditioned on Bob's x-homodyne outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalCovariance(Matrix2<f64>);

impl ConditionalCovariance {
    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.0
    }

    /// Single-mode symplectic eigenvalue `sqrt(det)`.
    pub fn symplectic_eigenvalue(&self) -> f64 {
        self.0.determinant().max(0.0).sqrt()
    }
}

/// Symplectic spectrum from the invariant equation `z^2 - Δ z + det γ = 0`.
pub fn symplectic_eigenvalues(gamma: &TwoModeCovariance) -> Result<SymplecticSpectrum> {
    // The invariants alone cannot tell γ from -γ.
    if gamma.matrix().cholesky().is_none() {
        return Err(Error::NonPhysicalMatrix(
            "covariance matrix is not positive definite".into(),
        ));
    }
    let det = gamma.determinant();
    let delta = gamma.seralian();
    let scale = delta.abs().max(1.0);
    if det < -PHYSICALITY_TOL * scale * scale {
        return Err(Error::NonPhysicalMatrix(format!(
            "negative determinant {det:e}"
        )));
    }
    if delta < -PHYSICALITY_TOL * scale {
        return Err(Error::NonPhysicalMatrix(format!(
            "negative symplectic invariant {delta:e}"
        )));
    }
    let det = det.max(0.0);
    let mut disc = gamma.invariant_discriminant(delta);
    if disc < 0.0 {
        if disc < -PHYSICALITY_TOL * scale * scale {
            return Err(Error::NonPhysicalMatrix(format!(
                "negative discriminant {disc:e} in the invariant equation"
            )));
        }
        disc = 0.0;
    }
    let z_plus = 0.5 * (delta.max(0.0) + disc.sqrt());
    // Vieta keeps the small root accurate when det γ ≪ Δ².
    let z_minus = if z_plus > 0.0 { det / z_plus } else { 0.0 };
    Ok(SymplecticSpectrum {
        nu1: z_plus.sqrt(),
        nu2: z_minus.sqrt(),
    })
}

/// Heisenberg test `γ + iΩ ≥ 0`.
///
/// The Hermitian matrix `A + iB` is embedded as the real symmetric
/// `[[A, -B], [B, A]]`, which has the same spectrum with doubled
/// multiplicity. The tolerance scales with the largest entry so that
/// strongly modulated states sitting on the boundary are not rejected by
/// rounding alone.
pub fn is_physical(gamma: &TwoModeCovariance) -> bool {
    min_uncertainty_eigenvalue(gamma) >= -PHYSICALITY_TOL * gamma.matrix().amax().max(1.0)
}

/// Smallest eigenvalue of the Hermitian matrix `γ + iΩ`.
pub fn min_uncertainty_eigenvalue(gamma: &TwoModeCovariance) -> f64 {
    let omega = SymplecticForm::matrix();
    let mut embedded = SMatrix::<f64, 8, 8>::zeros();
    embedded.fixed_view_mut::<4, 4>(0, 0).copy_from(gamma.matrix());
    embedded.fixed_view_mut::<4, 4>(4, 4).copy_from(gamma.matrix());
    embedded.fixed_view_mut::<4, 4>(0, 4).copy_from(&(-omega));
    embedded.fixed_view_mut::<4, 4>(4, 0).copy_from(&omega);
    embedded.symmetric_eigenvalues().min()
}

/// `γ_A - σ (X γ_B X)^MP σ^T` with `X = diag(1, 0)`.
pub fn condition_on_x_homodyne(gamma: &TwoModeCovariance) -> Result<ConditionalCovariance> {
    let variance = gamma.matrix()[(2, 2)];
    if variance < PINV_THRESHOLD {
        return Err(Error::DegenerateMeasurement { variance });
    }
    let sigma = gamma.correlations();
    let column: Vector2<f64> = sigma.column(0).into_owned();
    let conditioned = gamma.mode_a() - column * column.transpose() / variance;
    Ok(ConditionalCovariance(conditioned))
}

/// Bosonic entropy `G(x) = (x+1) log2(x+1) - x log2 x` in bits.
pub fn bosonic_entropy(x: f64) -> Result<f64> {
    if x.is_nan() || x < -1e-12 {
        return Err(Error::domain(format!(
            "bosonic entropy argument must be non-negative, got {x}"
        )));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    let nats = (x + 1.0) * x.ln_1p() - x * x.ln();
    Ok(nats / std::f64::consts::LN_2)
}

/// Entropy of a thermal mode with symplectic eigenvalue `nu`, clamping
/// `nu` values that are physical within tolerance up to 1.
pub(crate) fn mode_entropy(nu: f64) -> Result<f64> {
    if nu < 1.0 - PHYSICALITY_TOL {
        return Err(Error::NonPhysicalMatrix(format!(
            "symplectic eigenvalue {nu} below 1"
        )));
    }
    bosonic_entropy(0.5 * (nu.max(1.0) - 1.0))
}
