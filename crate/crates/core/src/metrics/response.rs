//! Step-response characteristics of uniformly sampled signals.

use crate::{Error, Result};

/// Earliest sample time after which `|signal − target|` stays within
/// `band_fraction · step_magnitude`. `None` if the final sample is outside
/// the band.
pub fn settling_time(
    signal: &[f64],
    dt: f64,
    target: f64,
    step_magnitude: f64,
    band_fraction: f64,
) -> Result<Option<f64>> {
    if signal.is_empty() {
        return Err(Error::InvalidInput("settling_time of an empty signal".into()));
    }
    if !(step_magnitude > 0.0 && band_fraction >= 0.0 && dt > 0.0) {
        return Err(Error::InvalidInput(format!(
            "settling_time needs dt > 0, step_magnitude > 0 and band_fraction ≥ 0 \
             (got {dt}, {step_magnitude}, {band_fraction})"
        )));
    }
    let band = band_fraction * step_magnitude;
    let outside = signal.iter().rposition(|s| (s - target).abs() > band);
    Ok(match outside {
        None => Some(0.0),
        Some(i) if i + 1 == signal.len() => None,
        Some(i) => Some((i + 1) as f64 * dt),
    })
}

/// Peak excursion beyond `target` in the direction of the step, in percent
/// of `|target − initial|`. Zero for a degenerate step.
pub fn overshoot(signal: &[f64], initial: f64, target: f64) -> f64 {
    let step = target - initial;
    if step == 0.0 {
        return 0.0;
    }
    let peak = signal
        .iter()
        .map(|s| (s - target) * step.signum())
        .fold(0.0, f64::max);
    100.0 * peak / step.abs()
}

/// Mean `|signal − target|` over the final `window` seconds: in percent of
/// `step_magnitude` when given, otherwise in signal units.
pub fn steady_state_error(
    signal: &[f64],
    dt: f64,
    target: f64,
    window: f64,
    step_magnitude: Option<f64>,
) -> Result<f64> {
    let n = (window / dt).round();
    if !(n >= 1.0 && n as usize <= signal.len()) {
        return Err(Error::InvalidInput(format!(
            "steady-state window of {window} s does not fit a {} s signal",
            signal.len() as f64 * dt
        )));
    }
    let tail = &signal[signal.len() - n as usize..];
    let mean = tail.iter().map(|s| (s - target).abs()).sum::<f64>() / tail.len() as f64;
    Ok(match step_magnitude {
        Some(m) => 100.0 * mean / m,
        None => mean,
    })
}
