//! Protocol models: entanglement-based input state, channel output matrices,
//! the physicality parabola bounding the unmeasured p-correlation, and the
//! symmetric GG02 baseline.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symplectic::TwoModeCovariance;

/// Which protocol (and which treatment of the unknown p-correlation) a rate
/// refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Symmetric Gaussian modulation of both quadratures.
    Gg02,
    /// Unidimensional, C_p minimised over the whole physical interval.
    UdPessimistic,
    /// Unidimensional, C_p taken at the physicality bound `C_p^max`.
    UdOptimistic,
    /// Unidimensional with the p-transmittance estimated, so C_p is known.
    UdEstimated,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Gg02,
        Variant::UdEstimated,
        Variant::UdPessimistic,
        Variant::UdOptimistic,
    ];

    /// Command-line spelling.
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Gg02 => "gg02",
            Variant::UdPessimistic => "ud-pessimistic",
            Variant::UdOptimistic => "ud-optimistic",
            Variant::UdEstimated => "ud-estimated",
        }
    }

    /// Identifier-safe spelling used in column names.
    pub fn column_suffix(&self) -> &'static str {
        match self {
            Variant::Gg02 => "gg02",
            Variant::UdPessimistic => "ud_pessimistic",
            Variant::UdOptimistic => "ud_optimistic",
            Variant::UdEstimated => "ud_estimated",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gg02" => Ok(Variant::Gg02),
            "ud-pessimistic" => Ok(Variant::UdPessimistic),
            "ud-optimistic" => Ok(Variant::UdOptimistic),
            "ud-estimated" => Ok(Variant::UdEstimated),
            other => Err(Error::domain(format!(
                "unknown variant '{other}' (expected gg02, ud-pessimistic, ud-optimistic or ud-estimated)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolConfig {
    modulation_variance: f64,
    variant: Variant,
    reconciliation_efficiency: f64,
}

impl ProtocolConfig {
    pub fn new(modulation_variance: f64, variant: Variant) -> Result<Self> {
        if !(modulation_variance.is_finite() && modulation_variance > 0.0) {
            return Err(Error::domain(format!(
                "modulation variance V_M must be positive and finite, got {modulation_variance}"
            )));
        }
        Ok(Self {
            modulation_variance,
            variant,
            reconciliation_efficiency: 1.0,
        })
    }

    /// Scales the trusted parties' information by `beta` in `(0, 1]`.
    pub fn with_reconciliation_efficiency(mut self, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::domain(format!(
                "reconciliation efficiency must lie in (0, 1], got {beta}"
            )));
        }
        self.reconciliation_efficiency = beta;
        Ok(self)
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn modulation_variance(&self) -> f64 {
        self.modulation_variance
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn reconciliation_efficiency(&self) -> f64 {
        self.reconciliation_efficiency
    }

    /// EPR variance of the unidimensional source, `sqrt(1 + V_M)`.
    pub fn epr_variance(&self) -> f64 {
        (1.0 + self.modulation_variance).sqrt()
    }
}

/// Transmittance and input-referred excess noise of one quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureChannel {
    pub eta: f64,
    pub eps: f64,
}

impl QuadratureChannel {
    pub fn new(eta: f64, eps: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::domain(format!(
                "transmittance must lie in (0, 1], got {eta}"
            )));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::domain(format!(
                "excess noise must be non-negative, got {eps}"
            )));
        }
        Ok(Self { eta, eps })
    }

    /// Output variance `1 + η(V + ε)` for an input modulation `V` above vacuum.
    pub fn output_variance(&self, modulation: f64) -> f64 {
        1.0 + self.eta * (modulation + self.eps)
    }
}

/// A generally phase-sensitive Gaussian channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelParams {
    pub x: QuadratureChannel,
    pub p: QuadratureChannel,
}

impl ChannelParams {
    pub fn new(eta_x: f64, eta_p: f64, eps_x: f64, eps_p: f64) -> Result<Self> {
        let x = QuadratureChannel::new(eta_x, eps_x)
            .map_err(|e| Error::domain(format!("x quadrature: {e}")))?;
        let p = QuadratureChannel::new(eta_p, eps_p)
            .map_err(|e| Error::domain(format!("p quadrature: {e}")))?;
        Ok(Self { x, p })
    }

    /// Phase-insensitive channel with equal loss and noise in both quadratures.
    pub fn symmetric(eta: f64, eps: f64) -> Result<Self> {
        Self::new(eta, eta, eps, eps)
    }

    /// Bob's p-variance for an unmodulated p quadrature, `1 + η_p ε_p`.
    pub fn unmodulated_p_variance(&self) -> f64 {
        self.p.output_variance(0.0)
    }
}

/// Bob's p-quadrature statistics; the correlation is unknown unless p is
/// estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PQuadObservation {
    pub v_p_b: f64,
    pub c_p: Option<f64>,
}

impl PQuadObservation {
    pub fn new(v_p_b: f64, c_p: f64) -> Self {
        Self {
            v_p_b,
            c_p: Some(c_p),
        }
    }

    pub fn unknown(v_p_b: f64) -> Self {
        Self { v_p_b, c_p: None }
    }
}

/// Boundary `(C_p - C_0)^2 = k (V_p^B - V_0^B)` of the physical
/// `(V_p^B, C_p)` region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalityParabola {
    pub v0: f64,
    pub c0: f64,
    pub curvature_coeff: f64,
}

impl PhysicalityParabola {
    fn half_width(&self, v_p_b: f64) -> Result<f64> {
        if !v_p_b.is_finite() {
            return Err(Error::domain(format!("V_p^B must be finite, got {v_p_b}")));
        }
        let span = v_p_b - self.v0;
        if span < 0.0 {
            // Rounding in 1 + η ε can leave V_p^B a hair below the vertex.
            if span >= -1e-12 * self.v0 {
                return Ok(0.0);
            }
            return Err(Error::EmptyRegion {
                v_p_b,
                vertex: self.v0,
            });
        }
        Ok((self.curvature_coeff * span).sqrt())
    }

    /// Closed interval of physical correlations at the given p-variance.
    pub fn c_p_range(&self, v_p_b: f64) -> Result<(f64, f64)> {
        let w = self.half_width(v_p_b)?;
        Ok((self.c0 - w, self.c0 + w))
    }

    /// Upper branch of the parabola, the physicality-bounded correlation
    /// `C_p^max` used by the optimistic evaluation.
    pub fn c_p_max(&self, v_p_b: f64) -> Result<f64> {
        Ok(self.c0 + self.half_width(v_p_b)?)
    }

    /// Signed slack `k (V_p^B - V_0^B) - (C_p - C_0)^2`; non-negative inside.
    pub fn margin(&self, v_p_b: f64, c_p: f64) -> f64 {
        self.curvature_coeff * (v_p_b - self.v0) - (c_p - self.c0).powi(2)
    }

    pub fn contains(&self, v_p_b: f64, c_p: f64) -> bool {
        self.margin(v_p_b, c_p) >= 0.0
    }
}

/// Two-mode squeezed vacuum of variance `V = sqrt(1 + V_M)` with the B mode
/// squeezed by `-ln sqrt(V)`.
pub fn build_epr_input(config: &ProtocolConfig) -> Result<TwoModeCovariance> {
    let v = config.epr_variance();
    let vv = v * v - 1.0;
    let cx = (v * vv).sqrt();
    let cp = -(vv / v).sqrt();
    TwoModeCovariance::from_row_slice(&[
        v, 0.0, cx, 0.0, //
        0.0, v, 0.0, cp, //
        cx, 0.0, v * v, 0.0, //
        0.0, cp, 0.0, 1.0,
    ])
}

/// x-quadrature correlation after the channel, `sqrt(η_x V_M) (1+V_M)^{1/4}`.
fn ud_x_correlation(config: &ProtocolConfig, x: &QuadratureChannel) -> f64 {
    let vm = config.modulation_variance();
    (x.eta * vm).sqrt() * (1.0 + vm).powf(0.25)
}

/// Covariance matrix shared by Alice and Bob after the channel, with the
/// p-block filled in from `obs`.
pub fn ud_channel_output(
    config: &ProtocolConfig,
    x: &QuadratureChannel,
    obs: &PQuadObservation,
) -> Result<TwoModeCovariance> {
    let x = QuadratureChannel::new(x.eta, x.eps)?;
    let c_p = obs.c_p.ok_or_else(|| {
        Error::domain("C_p must be resolved (parabola or estimation) before building the output matrix")
    })?;
    let v = config.epr_variance();
    let cx = ud_x_correlation(config, &x);
    let vx = x.output_variance(config.modulation_variance());
    let m = Matrix4::new(
        v, 0.0, cx, 0.0, //
        0.0, v, 0.0, c_p, //
        cx, 0.0, vx, 0.0, //
        0.0, c_p, 0.0, obs.v_p_b,
    );
    TwoModeCovariance::new(m)
}

pub fn physicality_parabola(
    config: &ProtocolConfig,
    x: &QuadratureChannel,
) -> Result<PhysicalityParabola> {
    let x = QuadratureChannel::new(x.eta, x.eps)?;
    let vm = config.modulation_variance();
    let v0 = 1.0 / (1.0 + x.eta * x.eps);
    let c0 = -v0 * (x.eta * vm).sqrt() / (1.0 + vm).powf(0.25);
    let curvature_coeff = vm / (1.0 + vm).sqrt() * (1.0 - x.eta * v0);
    Ok(PhysicalityParabola {
        v0,
        c0,
        curvature_coeff,
    })
}

/// Correlation in p when its transmittance has been estimated: the input
/// p-correlation scaled by `sqrt(η_p)`.
pub fn estimated_c_p(config: &ProtocolConfig, channel: &ChannelParams) -> f64 {
    let vm = config.modulation_variance();
    -(channel.p.eta * vm).sqrt() / (1.0 + vm).powf(0.25)
}

/// Entanglement-based matrix of the symmetric coherent-state protocol:
/// TMSV of variance `1 + V_M` sent through the (per-quadrature) channel.
pub fn gg02_output(config: &ProtocolConfig, channel: &ChannelParams) -> Result<TwoModeCovariance> {
    let channel = ChannelParams::new(channel.x.eta, channel.p.eta, channel.x.eps, channel.p.eps)?;
    let vm = config.modulation_variance();
    let v = 1.0 + vm;
    let vv = vm * (vm + 2.0);
    let cx = (channel.x.eta * vv).sqrt();
    let cp = -(channel.p.eta * vv).sqrt();
    let m = Matrix4::new(
        v, 0.0, cx, 0.0, //
        0.0, v, 0.0, cp, //
        cx, 0.0, channel.x.output_variance(vm), 0.0, //
        0.0, cp, 0.0, channel.p.output_variance(vm),
    );
    TwoModeCovariance::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{is_physical, symplectic_eigenvalues};
    use approx::assert_relative_eq;

    fn cfg(vm: f64) -> ProtocolConfig {
        ProtocolConfig::new(vm, Variant::UdPessimistic).unwrap()
    }

    #[test]
    fn epr_input_entries() {
        let g = build_epr_input(&cfg(10.0)).unwrap();
        // sqrt(10 sqrt(11)), mpmath
        assert_relative_eq!(g.matrix()[(0, 2)], 5.759_014_490_653_24, epsilon = 1e-12);
        assert_relative_eq!(g.matrix()[(2, 2)], 11.0, epsilon = 1e-12);
        assert_eq!(g.matrix()[(3, 3)], 1.0);
    }

    #[test]
    fn epr_input_vacuum_limit() {
        let g = build_epr_input(&cfg(1e-14)).unwrap();
        assert!((g.matrix() - Matrix4::identity()).amax() < 1e-6);
    }

    #[test]
    fn epr_input_is_pure() {
        for vm in [1e-3, 0.5, 10.0, 100.0, 1e4] {
            let g = build_epr_input(&cfg(vm)).unwrap();
            let s = symplectic_eigenvalues(&g).unwrap();
            assert!((s.nu1 - 1.0).abs() < 1e-9, "vm {vm}: {s:?}");
            assert!((s.nu2 - 1.0).abs() < 1e-9, "vm {vm}: {s:?}");
            assert!((g.determinant() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn invalid_modulation_rejected() {
        assert!(ProtocolConfig::new(0.0, Variant::Gg02).is_err());
        assert!(ProtocolConfig::new(-1.0, Variant::Gg02).is_err());
        assert!(ProtocolConfig::new(f64::NAN, Variant::Gg02).is_err());
    }

    #[test]
    fn channel_validation() {
        assert!(QuadratureChannel::new(1.2, 0.0).is_err());
        assert!(QuadratureChannel::new(0.0, 0.0).is_err());
        assert!(QuadratureChannel::new(0.5, -0.1).is_err());
        assert!(QuadratureChannel::new(1.0, 0.0).is_ok());
        let err = ChannelParams::new(0.5, 1.5, 0.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("p quadrature"));
    }

    #[test]
    fn identity_channel_reproduces_input() {
        for vm in [0.3, 10.0, 250.0] {
            let c = cfg(vm);
            let x = QuadratureChannel::new(1.0, 0.0).unwrap();
            let c_p = -vm.sqrt() / (1.0 + vm).powf(0.25);
            let out = ud_channel_output(&c, &x, &PQuadObservation::new(1.0, c_p)).unwrap();
            let input = build_epr_input(&c).unwrap();
            assert!((out.matrix() - input.matrix()).amax() < 1e-12 * vm.max(1.0));
        }
    }

    #[test]
    fn fig2_channel_output_x_variance() {
        let x = QuadratureChannel::new(0.1, 0.05).unwrap();
        let out = ud_channel_output(&cfg(10.0), &x, &PQuadObservation::new(1.005, -0.5)).unwrap();
        assert_relative_eq!(out.matrix()[(2, 2)], 2.005, epsilon = 1e-14);
    }

    #[test]
    fn unknown_c_p_rejected() {
        let x = QuadratureChannel::new(0.1, 0.05).unwrap();
        assert!(ud_channel_output(&cfg(10.0), &x, &PQuadObservation::unknown(1.0)).is_err());
    }

    #[test]
    fn parabola_vertex() {
        let x = QuadratureChannel::new(0.1, 0.05).unwrap();
        let p = physicality_parabola(&cfg(10.0), &x).unwrap();
        assert_relative_eq!(p.v0, 0.995_024_875_621_890_5, epsilon = 1e-15);
        // mpmath
        assert_relative_eq!(p.c0, -0.546_368_643_558_320_8, epsilon = 1e-14);
        assert!(p.curvature_coeff >= 0.0);

        let noiseless = QuadratureChannel::new(0.3, 0.0).unwrap();
        let p = physicality_parabola(&cfg(10.0), &noiseless).unwrap();
        assert_eq!(p.v0, 1.0);
        assert_relative_eq!(p.c0, -(3.0f64).sqrt() / 11f64.powf(0.25), epsilon = 1e-14);
        let (lo, hi) = p.c_p_range(1.0).unwrap();
        assert_eq!(lo, hi);
        assert_eq!(lo, p.c0);
    }

    #[test]
    fn parabola_empty_below_vertex() {
        let x = QuadratureChannel::new(0.1, 0.05).unwrap();
        let p = physicality_parabola(&cfg(10.0), &x).unwrap();
        assert!(matches!(
            p.c_p_range(0.99),
            Err(Error::EmptyRegion { .. })
        ));
    }

    #[test]
    fn boundary_saturates_uncertainty() {
        let c = cfg(10.0);
        let x = QuadratureChannel::new(0.1, 0.05).unwrap();
        let p = physicality_parabola(&c, &x).unwrap();
        for v_p_b in [1.0, 1.005, 1.02, 1.3] {
            let (lo, hi) = p.c_p_range(v_p_b).unwrap();
            for c_p in [lo, hi] {
                let g = ud_channel_output(&c, &x, &PQuadObservation::new(v_p_b, c_p)).unwrap();
                let s = symplectic_eigenvalues(&g).unwrap();
                assert!((s.nu2 - 1.0).abs() < 1e-7, "{v_p_b} {c_p}: {s:?}");
                assert!(is_physical(&g));
            }
            let outside = ud_channel_output(&c, &x, &PQuadObservation::new(v_p_b, hi + 1e-3)).unwrap();
            assert!(!is_physical(&outside));
        }
    }

    #[test]
    fn estimated_c_p_limits() {
        let c = cfg(10.0);
        let lossless = ChannelParams::symmetric(1.0, 0.0).unwrap();
        assert_relative_eq!(
            estimated_c_p(&c, &lossless),
            -(10.0f64).sqrt() / 11f64.powf(0.25),
            epsilon = 1e-15
        );
        let lossy = ChannelParams::symmetric(1e-12, 0.0).unwrap();
        assert!(estimated_c_p(&c, &lossy).abs() < 1e-5);
    }

    #[test]
    fn estimated_point_strictly_inside() {
        let c = cfg(10.0);
        let ch = ChannelParams::symmetric(0.1, 0.05).unwrap();
        let p = physicality_parabola(&c, &ch.x).unwrap();
        let margin = p.margin(ch.unmodulated_p_variance(), estimated_c_p(&c, &ch));
        assert!(margin > 0.0, "margin {margin}");
    }

    #[test]
    fn gg02_lossless_is_pure() {
        let c = cfg(10.0);
        let g = gg02_output(&c, &ChannelParams::symmetric(1.0, 0.0).unwrap()).unwrap();
        let s = symplectic_eigenvalues(&g).unwrap();
        assert!((s.nu1 - 1.0).abs() < 1e-9 && (s.nu2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gg02_physical_over_parameters() {
        for vm in [1.0, 10.0, 100.0] {
            for eta in [0.01, 0.3, 0.9, 1.0] {
                for eps in [0.0, 0.05, 0.5] {
                    let c = cfg(vm);
                    let g = gg02_output(&c, &ChannelParams::symmetric(eta, eps).unwrap()).unwrap();
                    assert!(is_physical(&g), "{vm} {eta} {eps}");
                }
            }
        }
    }

    #[test]
    fn variant_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert!("bb84".parse::<Variant>().is_err());
    }
}
