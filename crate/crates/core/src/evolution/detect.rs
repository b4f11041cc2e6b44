//! Blow-up and scattering detectors over a window of trajectory samples.

use super::{EvolutionConfig, TrajectorySample};
use crate::functionals::Sigma;

/// Instantaneous quantities at the current step, which may lie between
/// recorded samples.
#[derive(Debug, Clone, Copy)]
pub struct Probe {
    pub t: f64,
    pub gradnorm: f64,
    pub k2: f64,
    pub at_dt_min: bool,
}

fn window<'a>(samples: &'a [TrajectorySample], t: f64, width: f64) -> impl Iterator<Item = &'a TrajectorySample> {
    samples.iter().filter(move |s| s.t >= t - width)
}

/// Gradient growth past growth_factor × initial AND K₂ < 0 at every sample
/// of the window. Returns the evidence text when it holds.
pub fn gradient_criterion(
    samples: &[TrajectorySample],
    probe: &Probe,
    grad0: f64,
    cfg: &EvolutionConfig,
) -> Option<String> {
    if probe.gradnorm <= cfg.growth_factor * grad0 || probe.k2 >= 0.0 {
        return None;
    }
    let mut series = Vec::new();
    for s in window(samples, probe.t, cfg.window) {
        if s.report.k2 >= 0.0 {
            return None;
        }
        series.push(format!("{:.4}:{:.4e}", s.t, s.report.k2));
    }
    series.push(format!("{:.6}:{:.4e}", probe.t, probe.k2));
    Some(format!(
        "gradnorm {:.4e} > {} x {:.4e}; K2 < 0 over window [{}]",
        probe.gradnorm,
        cfg.growth_factor,
        grad0,
        series.join(" ")
    ))
}

/// Numerical blow-up signature: gradient criterion plus step collapse to
/// dt_min. Never fires for σ = −.
pub fn detect_blowup(
    samples: &[TrajectorySample],
    probe: &Probe,
    grad0: f64,
    sigma: Sigma,
    cfg: &EvolutionConfig,
) -> Option<String> {
    if sigma == Sigma::Defocusing || !probe.at_dt_min {
        return None;
    }
    gradient_criterion(samples, probe, grad0, cfg).map(|e| format!("{e}; dt at dt_min {:.3e}", cfg.dt_min))
}

/// Dispersion signature at the last sample: ‖ξ‖_{L⁶} down by 10× from its
/// run maximum, the ST integral and |z| both flat over the last half window.
pub fn detect_scattering(samples: &[TrajectorySample], cfg: &EvolutionConfig) -> Option<String> {
    let last = samples.last()?;
    if last.t < cfg.window {
        return None;
    }
    let peak = samples.iter().map(|s| s.xi_l6).fold(0.0, f64::max);
    // A run that never sheds radiation above roundoff is an exact soliton.
    let negligible = peak <= 1e-9 * last.l4norm;
    if !negligible && !(last.xi_l6.is_finite() && peak > 0.0 && last.xi_l6 * 10.0 <= peak) {
        return None;
    }
    let half: Vec<&TrajectorySample> = window(samples, last.t, 0.5 * cfg.window).collect();
    let first = half.first()?;
    let st_growth = if negligible {
        0.0
    } else if last.st_integral > 0.0 {
        (last.st_integral - first.st_integral) / last.st_integral
    } else {
        return None;
    };
    if st_growth >= 0.01 {
        return None;
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut sum = 0.0;
    for s in &half {
        let a = s.z_abs()?;
        lo = lo.min(a);
        hi = hi.max(a);
        sum += a;
    }
    let mean = sum / half.len() as f64;
    let osc = if mean > 0.0 { (hi - lo) / mean } else { 0.0 };
    if osc >= 0.01 {
        return None;
    }
    let radiation = if negligible {
        format!("radiation at roundoff level (xi_L6 peak {peak:.3e})")
    } else {
        format!("xi_L6 {:.3e} <= peak {peak:.3e} / 10", last.xi_l6)
    };
    Some(format!("{radiation}; ST integral growth {st_growth:.2e} over last half window; |z| oscillation {osc:.2e}"))
}
