//! Closed-form key rates in the strong-modulation (`V_M → ∞`) regime.
//!
//! These evaluate the rate at the physicality bound `C_p^max`, so they are
//! upper bounds on the pessimistic rate and coincide with it whenever the
//! worst correlation sits on the parabola.

use std::f64::consts::{E, LOG2_E};

use crate::error::{Error, Result};
use crate::protocols::QuadratureChannel;
use crate::symplectic::bosonic_entropy;

/// `D = η_x (1 + η_x ε_x - η_x) (V_p^B (1 + η_x ε_x) - 1)`.
fn d_term(x: &QuadratureChannel, v_p_b: f64) -> Result<f64> {
    let (eta, eps) = (x.eta, x.eps);
    let above_vertex = v_p_b * (1.0 + eta * eps) - 1.0;
    if above_vertex < -1e-12 {
        return Err(Error::EmptyRegion {
            v_p_b,
            vertex: 1.0 / (1.0 + eta * eps),
        });
    }
    Ok((eta * (1.0 + eta * eps - eta) * above_vertex).max(0.0))
}

/// Strong-modulation limit of the rate at `C_p^max`.
///
/// The log argument is `η_x / [(1 + η_x ε_x)(1 - 2η_x V_0^B + η_x V_p^B) + 2√D]`,
/// i.e. the exact large-`V_M` limit of `det γ'` on the parabola.
pub fn strong_modulation_key_rate(x: &QuadratureChannel, v_p_b: f64) -> Result<f64> {
    let x = QuadratureChannel::new(x.eta, x.eps)?;
    let (eta, eps) = (x.eta, x.eps);
    let d = d_term(&x, v_p_b)?;
    let denom = (1.0 + eta * eps) - 2.0 * eta + eta * v_p_b * (1.0 + eta * eps) + 2.0 * d.sqrt();
    let cond = bosonic_entropy(0.5 * ((1.0 / eta + eps).sqrt() - 1.0))?;
    Ok(0.5 * (eta / denom).log2() - (E / 2.0).log2() + cond)
}

/// Further expansion of [`strong_modulation_key_rate`] for `η_x ≪ 1`:
/// `[(1/3 + (1 - V_p^B)/2) η_x - √D] log2 e`.
pub fn strong_loss_key_rate(x: &QuadratureChannel, v_p_b: f64) -> Result<f64> {
    let x = QuadratureChannel::new(x.eta, x.eps)?;
    let d = d_term(&x, v_p_b)?;
    Ok(((1.0 / 3.0 + 0.5 * (1.0 - v_p_b)) * x.eta - d.sqrt()) * LOG2_E)
}

/// Unidimensional rate on a pure-loss channel at infinite modulation,
/// `(1/(2√η)) log2((1+√η)/(1-√η)) - log2 e`.
pub fn ud_noiseless_exact(eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::domain(format!(
            "noiseless closed form needs 0 < eta < 1, got {eta}"
        )));
    }
    let s = eta.sqrt();
    // atanh keeps (1+s)/(1-s) accurate for small s
    Ok(s.atanh() / s * LOG2_E - LOG2_E)
}

/// GG02 pure-loss rate at infinite modulation, `-½ log2(1 - η)`.
pub fn gg02_high_modulation_key_rate(eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::domain(format!(
            "GG02 limit needs 0 < eta < 1, got {eta}"
        )));
    }
    Ok(-0.5 * (-eta).ln_1p() * LOG2_E)
}
