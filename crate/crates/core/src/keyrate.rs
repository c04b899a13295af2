//! Collective-attack key rates with reverse reconciliation on Bob's x data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::{
    estimated_c_p, gg02_output, physicality_parabola, ud_channel_output, ChannelParams,
    PQuadObservation, ProtocolConfig, QuadratureChannel, Variant,
};
use crate::symplectic::{
    condition_on_x_homodyne, mode_entropy, symplectic_eigenvalues, TwoModeCovariance,
};

/// Rates in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    /// Information retained by the trusted parties (already scaled by the
    /// reconciliation efficiency).
    pub i_ab: f64,
    pub chi_be: f64,
    /// `i_ab - chi_be`; negative values mean no key and are kept as-is.
    pub key_rate: f64,
    pub c_p_evaluated: f64,
    pub worst_case: bool,
}

impl KeyRateResult {
    fn new(i_ab: f64, chi_be: f64, c_p: f64, worst_case: bool) -> Self {
        Self {
            i_ab,
            chi_be,
            key_rate: i_ab - chi_be,
            c_p_evaluated: c_p,
            worst_case,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchSettings {
    /// Samples across the physical C_p interval; odd so the vertex is hit.
    pub grid_points: usize,
    /// Golden-section termination width on C_p.
    pub refine_tol: f64,
    /// Modulation variance used as "large" in asymptotic comparisons.
    pub v_m_large: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            grid_points: 2001,
            refine_tol: 1e-10,
            v_m_large: 1e6,
        }
    }
}

impl SearchSettings {
    pub fn with_grid_points(grid_points: usize) -> Result<Self> {
        let s = Self {
            grid_points,
            ..Self::default()
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 101 || self.grid_points.is_multiple_of(2) {
            return Err(Error::domain(format!(
                "grid points must be odd and at least 101, got {}",
                self.grid_points
            )));
        }
        if !(self.refine_tol > 0.0) {
            return Err(Error::domain(format!(
                "refinement tolerance must be positive, got {}",
                self.refine_tol
            )));
        }
        Ok(())
    }
}

/// `½ log2(1 + η_x V_M / (1 + η_x ε_x))`.
pub fn mutual_information(config: &ProtocolConfig, x: &QuadratureChannel) -> f64 {
    let snr = x.eta * config.modulation_variance() / (1.0 + x.eta * x.eps);
    0.5 * snr.ln_1p() / std::f64::consts::LN_2
}

/// `½ log2(V_A / V_{A|x_B})` read off a unidimensional output matrix.
pub fn mutual_information_from_matrix(gamma: &TwoModeCovariance) -> Result<f64> {
    let cond = condition_on_x_homodyne(gamma)?;
    Ok(0.5 * (gamma.matrix()[(0, 0)] / cond.matrix()[(0, 0)]).log2())
}

/// Eve's Holevo information on Bob's x outcome, assuming she holds the
/// purification of the shared state.
pub fn holevo_bound(gamma_out: &TwoModeCovariance) -> Result<f64> {
    let spectrum = symplectic_eigenvalues(gamma_out)?;
    if !spectrum.is_physical() {
        return Err(Error::NonPhysicalMatrix(format!(
            "smaller symplectic eigenvalue {} is below 1",
            spectrum.nu2
        )));
    }
    let lambda_cond = condition_on_x_homodyne(gamma_out)?.symplectic_eigenvalue();
    Ok(mode_entropy(spectrum.nu1)? + mode_entropy(spectrum.nu2)? - mode_entropy(lambda_cond)?)
}

/// Key rate of the unidimensional protocol for a fully specified p-block.
pub fn key_rate_at(
    config: &ProtocolConfig,
    x: &QuadratureChannel,
    obs: &PQuadObservation,
) -> Result<KeyRateResult> {
    let c_p = obs
        .c_p
        .ok_or_else(|| Error::domain("key_rate_at needs a concrete C_p"))?;
    physicality_parabola(config, x)?.c_p_range(obs.v_p_b)?;
    let gamma = ud_channel_output(config, x, obs)?;
    let chi = holevo_bound(&gamma)?;
    let i_ab = config.reconciliation_efficiency() * mutual_information(config, x);
    Ok(KeyRateResult::new(i_ab, chi, c_p, false))
}

fn ud_rate(config: &ProtocolConfig, x: &QuadratureChannel, v_p_b: f64, c_p: f64) -> Result<f64> {
    Ok(key_rate_at(config, x, &PQuadObservation::new(v_p_b, c_p))?.key_rate)
}

/// Minimises the key rate over every physical C_p at the measured `v_p_b`.
///
/// A dense scan of the whole chord locates the global basin (the rate can be
/// multi-modal in C_p), then golden-section search polishes it. Ties go to
/// the lowest C_p.
pub fn worst_case_key_rate(
    config: &ProtocolConfig,
    x: &QuadratureChannel,
    v_p_b: f64,
    settings: &SearchSettings,
) -> Result<KeyRateResult> {
    settings.validate()?;
    let (lo, hi) = physicality_parabola(config, x)?.c_p_range(v_p_b)?;
    let n = settings.grid_points;
    let at = |i: usize| {
        if i + 1 == n {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    };

    let mut best = (0usize, f64::INFINITY);
    if hi > lo {
        for i in 0..n {
            let k = ud_rate(config, x, v_p_b, at(i))?;
            if k < best.1 {
                best = (i, k);
            }
        }
    }
    let (mut c_best, mut k_best) = if hi > lo {
        (at(best.0), best.1)
    } else {
        (lo, ud_rate(config, x, v_p_b, lo)?)
    };

    if hi > lo {
        let a = at(best.0.saturating_sub(1));
        let b = at((best.0 + 1).min(n - 1));
        let (c, k) = golden_section_min(|c| ud_rate(config, x, v_p_b, c), a, b, settings.refine_tol)?;
        if k < k_best {
            c_best = c;
            k_best = k;
        }
    }

    let mut result = key_rate_at(config, x, &PQuadObservation::new(v_p_b, c_best))?;
    debug_assert_eq!(result.key_rate, k_best);
    result.worst_case = true;
    Ok(result)
}

fn golden_section_min<F>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Rate at the physicality-bounded correlation `C_p^max`.
pub fn optimistic_key_rate(
    config: &ProtocolConfig,
    x: &QuadratureChannel,
    v_p_b: f64,
) -> Result<KeyRateResult> {
    let c_p = physicality_parabola(config, x)?.c_p_max(v_p_b)?;
    key_rate_at(config, x, &PQuadObservation::new(v_p_b, c_p))
}

/// Rate when the p-correlation is known from estimating `η_p`.
pub fn estimated_key_rate(
    config: &ProtocolConfig,
    channel: &ChannelParams,
    v_p_b: f64,
) -> Result<KeyRateResult> {
    let c_p = estimated_c_p(config, channel);
    key_rate_at(config, &channel.x, &PQuadObservation::new(v_p_b, c_p))
}

/// Symmetric-modulation baseline through the same conditioning and Holevo
/// pipeline.
pub fn gg02_key_rate(config: &ProtocolConfig, channel: &ChannelParams) -> Result<KeyRateResult> {
    let gamma = gg02_output(config, channel)?;
    let chi = holevo_bound(&gamma)?;
    let i_ab = config.reconciliation_efficiency() * mutual_information(config, &channel.x);
    Ok(KeyRateResult::new(i_ab, chi, gamma.matrix()[(1, 3)], false))
}

/// Rate for `config.variant()`; `v_p_b` is ignored by GG02.
pub fn variant_key_rate(
    config: &ProtocolConfig,
    channel: &ChannelParams,
    v_p_b: f64,
    settings: &SearchSettings,
) -> Result<KeyRateResult> {
    match config.variant() {
        Variant::Gg02 => gg02_key_rate(config, channel),
        Variant::UdEstimated => estimated_key_rate(config, channel, v_p_b),
        Variant::UdPessimistic => worst_case_key_rate(config, &channel.x, v_p_b, settings),
        Variant::UdOptimistic => optimistic_key_rate(config, &channel.x, v_p_b),
    }
}

/// Rate over a phase-insensitive channel, where `V_p^B = 1 + η ε`.
pub fn symmetric_key_rate(
    config: &ProtocolConfig,
    eta: f64,
    eps: f64,
    settings: &SearchSettings,
) -> Result<KeyRateResult> {
    let channel = ChannelParams::symmetric(eta, eps)?;
    variant_key_rate(config, &channel, channel.unmodulated_p_variance(), settings)
}
