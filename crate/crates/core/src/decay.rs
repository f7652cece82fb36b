//! Exponential decay fits `norm(t) ≈ M e^{−rate·t}`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Norms at or below this are treated as round-off and discarded.
pub const NOISE_FLOOR: f64 = 1e-13;

/// Minimum number of usable samples in a fit window.
pub const MIN_SAMPLES: usize = 10;

/// Required coefficient of determination of the log-linear fit.
pub const MIN_R_SQUARED: f64 = 0.999;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    #[serde(rename = "M")]
    pub constant: f64,
    pub r_squared: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
}

/// Least-squares fit of `log(norm)` against `t`.
///
/// Samples at or below [`NOISE_FLOOR`] are dropped. The window ends at the
/// last usable sample and starts as early as possible while the fit keeps
/// `R² ≥ 0.999`; if no window of [`MIN_SAMPLES`] qualifies, the window with
/// the best `R²` is returned.
pub fn estimate_decay_rate(history: &[(f64, f64)]) -> Result<DecayFit> {
    let usable: Vec<(f64, f64)> = history
        .iter()
        .filter(|(t, v)| t.is_finite() && v.is_finite() && *v > NOISE_FLOOR)
        .map(|&(t, v)| (t, v.ln()))
        .collect();
    if usable.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_SAMPLES,
            found: usable.len(),
        });
    }
    let mut best: Option<DecayFit> = None;
    for start in 0..=usable.len() - MIN_SAMPLES {
        let fit = fit_window(&usable[start..]);
        if fit.r_squared >= MIN_R_SQUARED {
            return Ok(fit);
        }
        if best.as_ref().is_none_or(|b| fit.r_squared > b.r_squared) {
            best = Some(fit);
        }
    }
    Ok(best.expect("at least one window"))
}

fn fit_window(points: &[(f64, f64)]) -> DecayFit {
    let m = points.len() as f64;
    let tbar = points.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = points.iter().map(|p| p.1).sum::<f64>() / m;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, y) in points {
        stt += (t - tbar) * (t - tbar);
        sty += (t - tbar) * (y - ybar);
        syy += (y - ybar) * (y - ybar);
    }
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    let intercept = ybar - slope * tbar;
    let r_squared = if syy > 0.0 { sty * sty / (stt * syy) } else { 1.0 };
    DecayFit {
        rate: -slope,
        constant: intercept.exp(),
        r_squared,
        t_start: points[0].0,
        t_end: points[points.len() - 1].0,
        samples: points.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential() {
        let h: Vec<(f64, f64)> = (0..40).map(|i| {
            let t = 0.1 * i as f64;
            (t, 3.0 * (-2.0 * t).exp())
        }).collect();
        let fit = estimate_decay_rate(&h).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-10);
        assert!((fit.constant - 3.0).abs() < 1e-10);
        assert_eq!(fit.samples, 40);
    }

    #[test]
    fn noise_floor_and_sample_count() {
        let mut h: Vec<(f64, f64)> = (0..12).map(|i| (i as f64, (-(i as f64)).exp())).collect();
        h.extend((12..30).map(|i| (i as f64, 1e-14)));
        let fit = estimate_decay_rate(&h).unwrap();
        assert_eq!(fit.samples, 12);
        assert!((fit.rate - 1.0).abs() < 1e-10);
        let short: Vec<(f64, f64)> = (0..9).map(|i| (i as f64, 1.0)).collect();
        assert!(matches!(
            estimate_decay_rate(&short),
            Err(Error::InsufficientSamples { needed: 10, found: 9 })
        ));
    }

    #[test]
    fn transient_is_trimmed() {
        let h: Vec<(f64, f64)> = (0..200).map(|i| {
            let t = 0.1 * i as f64;
            (t, 5.0 * (-8.0 * t).exp() + (-0.5 * t).exp())
        }).collect();
        let fit = estimate_decay_rate(&h).unwrap();
        assert!((fit.rate - 0.5).abs() < 0.01, "{fit:?}");
    }
}
