//! Figure-level outputs: security regions in the `(C_p, V_p^B)` plane, rate
//! slices in C_p, loss sweeps and tolerable excess noise.
//!
//! Independent sweep points are evaluated on the ambient rayon pool; results
//! are always assembled in abscissa order.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::keyrate::{symmetric_key_rate, worst_case_key_rate, SearchSettings};
use crate::protocols::{
    physicality_parabola, PQuadObservation, ProtocolConfig, QuadratureChannel, Variant,
};

/// Bracket width on V_p^B when locating the security/physicality crossing.
pub const CROSSING_TOL: f64 = 1e-6;
/// Bracket width on ε for the tolerable-noise bisection.
pub const NOISE_TOL: f64 = 1e-5;
/// Largest excess noise probed before giving up on bracketing a root.
pub const NOISE_CEILING: f64 = 10.0;

const NOISE_ROOT_RATE_TOL: f64 = 1e-7;

pub fn transmittance_from_loss_db(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

pub fn loss_db_from_transmittance(eta: f64) -> f64 {
    -10.0 * eta.log10()
}

/// Closed C_p interval on which the rate is positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecureInterval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionRecord {
    pub v_p_b: f64,
    pub c_lo: f64,
    pub c_hi: f64,
    pub secure: Vec<SecureInterval>,
    pub worst_case_c_p: f64,
    pub worst_case_key_rate: f64,
}

impl RegionRecord {
    /// True when every physical C_p gives a positive rate.
    pub fn secure_everywhere(&self) -> bool {
        self.worst_case_key_rate > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionMap {
    pub records: Vec<RegionRecord>,
    /// Where the worst-case rate first reaches zero (`V_p^{B,max}`).
    pub v_p_b_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCurve {
    pub label: String,
    pub abscissa: Vec<f64>,
    pub ordinate: Vec<f64>,
}

impl SweepCurve {
    pub fn new(label: impl Into<String>, abscissa: Vec<f64>, ordinate: Vec<f64>) -> Result<Self> {
        if abscissa.len() != ordinate.len() {
            return Err(Error::domain("sweep abscissa and ordinate lengths differ"));
        }
        if abscissa.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("sweep abscissa must be strictly increasing"));
        }
        Ok(Self {
            label: label.into(),
            abscissa,
            ordinate,
        })
    }
}

/// Evenly spaced loss points `min, min + step, ..., max` in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossGrid {
    pub min_db: f64,
    pub max_db: f64,
    pub step_db: f64,
}

impl LossGrid {
    pub fn new(min_db: f64, max_db: f64, step_db: f64) -> Result<Self> {
        if !(min_db >= 0.0 && max_db >= min_db && min_db.is_finite() && max_db.is_finite()) {
            return Err(Error::domain(format!(
                "loss range must satisfy 0 <= min <= max, got [{min_db}, {max_db}] dB"
            )));
        }
        if !(step_db > 0.0) {
            return Err(Error::domain(format!("loss step must be positive, got {step_db}")));
        }
        Ok(Self {
            min_db,
            max_db,
            step_db,
        })
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.max_db - self.min_db) / self.step_db + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.min_db + i as f64 * self.step_db).collect()
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn ud_rate(config: &ProtocolConfig, x: &QuadratureChannel, v_p_b: f64, c_p: f64) -> Result<f64> {
    Ok(crate::keyrate::key_rate_at(config, x, &PQuadObservation::new(v_p_b, c_p))?.key_rate)
}

/// Bisection for a sign change of `f` on `[a, b]` where `f(a) > 0 >= f(b)`
/// or vice versa.
fn bisect_sign<F>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let fa_positive = f(a)? > 0.0;
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        if (f(mid)? > 0.0) == fa_positive {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Rate samples over the full physical C_p interval at `v_p_b`.
pub fn key_rate_vs_cp(
    config: &ProtocolConfig,
    x: &QuadratureChannel,
    v_p_b: f64,
    resolution: usize,
) -> Result<SweepCurve> {
    if resolution < 2 {
        return Err(Error::domain(format!("resolution must be at least 2, got {resolution}")));
    }
    let (lo, hi) = physicality_parabola(config, x)?.c_p_range(v_p_b)?;
    let c_p = if hi > lo { linspace(lo, hi, resolution) } else { vec![lo] };
    let k = c_p
        .iter()
        .map(|&c| ud_rate(config, x, v_p_b, c))
        .collect::<Result<Vec<_>>>()?;
    SweepCurve::new(format!("v_p_b={v_p_b}"), c_p, k)
}

/// Maximal runs of positive rate, with ends refined by bisection.
fn secure_intervals(
    config: &ProtocolConfig,
    x: &QuadratureChannel,
    v_p_b: f64,
    curve: &SweepCurve,
) -> Result<Vec<SecureInterval>> {
    let c = &curve.abscissa;
    let k = &curve.ordinate;
    if c.len() == 1 {
        return Ok(if k[0] > 0.0 {
            vec![SecureInterval { lo: c[0], hi: c[0] }]
        } else {
            Vec::new()
        });
    }
    let f = |cp: f64| ud_rate(config, x, v_p_b, cp);
    let tol = 1e-12 * (c[c.len() - 1] - c[0]).abs().max(1e-300);
    let mut out = Vec::new();
    let mut start: Option<f64> = None;
    for i in 0..c.len() {
        let positive = k[i] > 0.0;
        match (start, positive) {
            (None, true) => {
                start = Some(if i == 0 {
                    c[0]
                } else {
                    bisect_sign(f, c[i - 1], c[i], tol)?
                });
            }
            (Some(lo), false) => {
                let hi = bisect_sign(f, c[i - 1], c[i], tol)?;
                out.push(SecureInterval { lo, hi });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(lo) = start {
        out.push(SecureInterval {
            lo,
            hi: c[c.len() - 1],
        });
    }
    Ok(out)
}

fn region_record(
    config: &ProtocolConfig,
    x: &QuadratureChannel,
    v_p_b: f64,
    settings: &SearchSettings,
) -> Result<RegionRecord> {
    let curve = key_rate_vs_cp(config, x, v_p_b, settings.grid_points)?;
    let secure = secure_intervals(config, x, v_p_b, &curve)?;
    let worst = worst_case_key_rate(config, x, v_p_b, settings)?;
    Ok(RegionRecord {
        v_p_b,
        c_lo: curve.abscissa[0],
        c_hi: curve.abscissa[curve.abscissa.len() - 1],
        secure,
        worst_case_c_p: worst.c_p_evaluated,
        worst_case_key_rate: worst.key_rate,
    })
}

/// Physical and secure C_p sets along a range of measured p-variances.
///
/// The lower end of the range is clipped to the parabola vertex.
pub fn scan_region(
    config: &ProtocolConfig,
    x: &QuadratureChannel,
    v_p_b_range: (f64, f64),
    resolution: usize,
    settings: &SearchSettings,
) -> Result<RegionMap> {
    settings.validate()?;
    if resolution < 2 {
        return Err(Error::domain(format!("resolution must be at least 2, got {resolution}")));
    }
    let (lo, hi) = v_p_b_range;
    if !(hi >= lo) {
        return Err(Error::domain(format!("empty V_p^B range [{lo}, {hi}]")));
    }
    let parabola = physicality_parabola(config, x)?;
    if hi < parabola.v0 {
        return Err(Error::EmptyRegion {
            v_p_b: hi,
            vertex: parabola.v0,
        });
    }
    let lo = lo.max(parabola.v0);
    let axis = if hi > lo { linspace(lo, hi, resolution) } else { vec![lo] };
    let records = axis
        .par_iter()
        .map(|&v| region_record(config, x, v, settings))
        .collect::<Result<Vec<_>>>()?;
    let v_p_b_max = security_crossing(config, x, settings)?;
    Ok(RegionMap { records, v_p_b_max })
}

/// Smallest `V_p^B` at which some physical C_p gives a non-positive rate.
///
/// Returns the vertex itself when even the vertex is insecure and `None`
/// when the worst-case rate stays positive up to `V_0^B + 1e3`.
pub fn security_crossing(
    config: &ProtocolConfig,
    x: &QuadratureChannel,
    settings: &SearchSettings,
) -> Result<Option<f64>> {
    let v0 = physicality_parabola(config, x)?.v0;
    let worst = |v: f64| Ok(worst_case_key_rate(config, x, v, settings)?.key_rate);
    if worst(v0)? <= 0.0 {
        return Ok(Some(v0));
    }
    let mut lo = v0;
    let mut step = 1e-3;
    let mut hi = v0 + step;
    while worst(hi)? > 0.0 {
        lo = hi;
        step *= 2.0;
        hi = v0 + step;
        if step > 1e3 {
            return Ok(None);
        }
    }
    bisect_sign(worst, lo, hi, CROSSING_TOL).map(Some)
}

fn sweep_variant(
    config: &ProtocolConfig,
    eps: f64,
    losses: &[f64],
    settings: &SearchSettings,
) -> Result<SweepCurve> {
    let rates = losses
        .par_iter()
        .map(|&db| {
            symmetric_key_rate(config, transmittance_from_loss_db(db), eps, settings).map(|r| r.key_rate)
        })
        .collect::<Result<Vec<_>>>()?;
    SweepCurve::new(config.variant().as_str(), losses.to_vec(), rates)
}

/// Key rate versus loss over a phase-insensitive channel with excess noise
/// `eps`, one curve per variant.
pub fn key_rate_vs_loss(
    config: &ProtocolConfig,
    eps: f64,
    losses: &LossGrid,
    variants: &[Variant],
    settings: &SearchSettings,
) -> Result<Vec<SweepCurve>> {
    settings.validate()?;
    let points = losses.points();
    variants
        .iter()
        .map(|&v| sweep_variant(&config.with_variant(v), eps, &points, settings))
        .collect()
}

/// Largest symmetric excess noise keeping the rate of `config.variant()`
/// positive at `loss_db`.
pub fn max_tolerable_noise(
    config: &ProtocolConfig,
    loss_db: f64,
    settings: &SearchSettings,
) -> Result<f64> {
    settings.validate()?;
    if !(loss_db >= 0.0 && loss_db.is_finite()) {
        return Err(Error::domain(format!("loss must be a non-negative number of dB, got {loss_db}")));
    }
    let eta = transmittance_from_loss_db(loss_db);
    let rate = |eps: f64| Ok(symmetric_key_rate(config, eta, eps, settings)?.key_rate);
    if rate(0.0)? <= 0.0 {
        return Err(Error::NoPositiveRate { loss_db });
    }
    let mut lo = 0.0;
    let mut hi = 0.01;
    loop {
        if rate(hi)? <= 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > NOISE_CEILING {
            return Err(Error::Unbracketed { upper: hi });
        }
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let k = rate(mid)?;
        if hi - lo <= NOISE_TOL && k.abs() <= NOISE_ROOT_RATE_TOL {
            break;
        }
        if k > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Outcome of one tolerable-noise point in a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePoint {
    pub loss_db: f64,
    pub eps_max: Result<f64>,
}

/// [`max_tolerable_noise`] over a loss grid; per-point failures are kept.
pub fn tolerable_noise_vs_loss(
    config: &ProtocolConfig,
    losses: &LossGrid,
    settings: &SearchSettings,
) -> Vec<NoisePoint> {
    losses
        .points()
        .par_iter()
        .map(|&loss_db| NoisePoint {
            loss_db,
            eps_max: max_tolerable_noise(config, loss_db, settings),
        })
        .collect()
}
