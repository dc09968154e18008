//! Convergence-regime classification from the distance-to-limit signal.
//!
//! For an energy with Łojasiewicz exponent `theta` at the limit, trajectories
//! converge in finite time (`theta < 1/2`), exponentially (`theta = 1/2`) or
//! like `(a2 t + b2)^{-(1-theta)/(2 theta - 1)}` (`theta > 1/2`). The
//! exponent is not observable directly, so it is inferred from fits of
//! `d(t) = |x(t) - xbar| + |y(t) + (a/b) xbar|`.

use serde::{Deserialize, Serialize};

use crate::diagnostics::LimitReport;
use crate::error::{Error, Result};
use crate::integrator::{StopReason, Trajectory};
use crate::linalg;

/// Minimum number of samples above the noise floor.
pub const MIN_USABLE_SAMPLES: usize = 20;

/// Fits below this coefficient of determination are rejected.
pub const MIN_R_SQUARED: f64 = 0.95;

/// Samples with `d` below `NOISE_FLOOR_FACTOR * stop_tol` are noise.
pub const NOISE_FLOOR_FACTOR: f64 = 100.0;

/// A floor hit counts as finite-time only if it happens before this fraction
/// of the horizon.
pub const FINITE_TIME_HORIZON_FRACTION: f64 = 0.9;

/// Required ratio of the log-decay rate just before the floor hit to the rate
/// earlier in the window.
pub const FINITE_TIME_ACCELERATION: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySignal {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Upper bound on the remaining path length from each sample.
    pub sigma: Vec<f64>,
    pub noise_floor: f64,
    /// Configured integration horizon.
    pub horizon: f64,
    /// Samples before the trailing run below the noise floor.
    pub usable: usize,
}

fn usable_prefix(values: &[f64], floor: f64) -> usize {
    values
        .iter()
        .rposition(|&d| !(d < floor))
        .map_or(0, |i| i + 1)
}

impl DecaySignal {
    /// Signal from externally supplied samples; `sigma` is the remaining
    /// total variation of `values` plus the final value.
    pub fn from_samples(times: Vec<f64>, values: Vec<f64>, noise_floor: f64, horizon: f64) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(Error::InvalidParameter(
                "decay signal needs equally many (nonzero) times and values".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("decay signal times must increase".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidParameter("decay values must be nonnegative".into()));
        }
        let k = values.len();
        let mut sigma = vec![0.0; k];
        sigma[k - 1] = values[k - 1];
        for i in (0..k - 1).rev() {
            sigma[i] = sigma[i + 1] + (values[i] - values[i + 1]).abs();
        }
        let usable = usable_prefix(&values, noise_floor);
        Ok(DecaySignal {
            times,
            values,
            sigma,
            noise_floor,
            horizon,
            usable,
        })
    }

    /// All samples already rest on the noise floor.
    pub fn trivially_converged(&self) -> bool {
        self.usable == 0
    }
}

/// Distance-to-limit and tail-length signal of a stationary trajectory.
///
/// `sigma` uses the larger endpoint of each interval so that it bounds the
/// path length for piecewise monotone speeds, and starts from the terminal
/// offset `|y_K + (a/b) x_K|`; this keeps `d <= sigma` on discrete data.
pub fn decay_signal(trajectory: &Trajectory, limit: &LimitReport) -> Result<DecaySignal> {
    if trajectory.stop_reason != StopReason::Stationarity {
        return Err(Error::NotConverged(trajectory.stop_reason.to_string()));
    }
    let ratio = trajectory.params.a / trajectory.params.b;
    let xbar = &limit.x_limit;
    let ybar: Vec<f64> = xbar.iter().map(|v| -ratio * v).collect();

    let samples = &trajectory.samples;
    let times: Vec<f64> = samples.iter().map(|s| s.state.t).collect();
    let values: Vec<f64> = samples
        .iter()
        .map(|s| linalg::dist(&s.state.x, xbar) + linalg::dist(&s.state.y, &ybar))
        .collect();
    let speed: Vec<f64> = samples
        .iter()
        .map(|s| s.diagnostics.xdot_norm + s.diagnostics.ydot_norm)
        .collect();

    let k = samples.len();
    let mut sigma = vec![0.0; k];
    sigma[k - 1] = values[k - 1];
    for i in (0..k - 1).rev() {
        sigma[i] = sigma[i + 1] + speed[i].max(speed[i + 1]) * (times[i + 1] - times[i]);
    }

    let noise_floor = NOISE_FLOOR_FACTOR * trajectory.settings.stop_tol;
    let usable = usable_prefix(&values, noise_floor);
    if usable > 0 && usable < MIN_USABLE_SAMPLES {
        return Err(Error::InsufficientData {
            usable,
            required: MIN_USABLE_SAMPLES,
        });
    }
    Ok(DecaySignal {
        times,
        values,
        sigma,
        noise_floor,
        horizon: trajectory.settings.t_max,
        usable,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    FiniteTime,
    Exponential,
    Polynomial,
    Inconclusive,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::FiniteTime => "finite-time",
            Regime::Exponential => "exponential",
            Regime::Polynomial => "polynomial",
            Regime::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub regime: Regime,
    /// Point estimate, present for the exponential and polynomial regimes.
    pub theta_hat: Option<f64>,
    /// Present for the finite-time regime, where only `(0, 1/2)` is implied.
    pub theta_interval: Option<(f64, f64)>,
    /// `(a1, b1)` of `a1 exp(-b1 t)` or `(a2, b2)` of `(a2 t + b2)^(-p)`.
    pub fit_constants: Option<(f64, f64)>,
    pub r_squared: Option<f64>,
    /// Fitted slope: `log d` against `t` or against `log t`.
    pub slope: Option<f64>,
    pub window: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y ~ slope * x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 0.0 };
    Some(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Inverts `(1 - theta) / (2 theta - 1) = |s|`.
pub fn theta_from_polynomial_slope(s: f64) -> Result<f64> {
    if !(s < 0.0) || !s.is_finite() {
        return Err(Error::InvalidSlope(s));
    }
    let p = -s;
    Ok((1.0 + p) / (1.0 + 2.0 * p))
}

/// Decay exponent `(1 - theta) / (2 theta - 1)` for `theta` in `(1/2, 1)`.
pub fn polynomial_exponent(theta: f64) -> f64 {
    (1.0 - theta) / (2.0 * theta - 1.0)
}

fn log_rate(times: &[f64], values: &[f64], from: usize, to: usize) -> f64 {
    let span = times[to] - times[from];
    if span <= 0.0 {
        return 0.0;
    }
    (values[from].ln() - values[to].ln()) / span
}

fn finite_time_report(window: (f64, f64)) -> RateReport {
    RateReport {
        regime: Regime::FiniteTime,
        theta_hat: None,
        theta_interval: Some((0.0, 0.5)),
        fit_constants: None,
        r_squared: None,
        slope: None,
        window,
    }
}

pub fn classify_rate(signal: &DecaySignal) -> Result<RateReport> {
    let DecaySignal {
        times,
        values,
        usable,
        ..
    } = signal;
    let usable = *usable;
    if usable == 0 {
        let t0 = times[0];
        return Ok(finite_time_report((t0, t0)));
    }
    if usable < MIN_USABLE_SAMPLES {
        return Err(Error::InsufficientData {
            usable,
            required: MIN_USABLE_SAMPLES,
        });
    }

    // Finite time: the floor is hit well before the horizon and the decay
    // accelerates into it.
    if usable < values.len() {
        let t_hit = times[usable];
        if t_hit < FINITE_TIME_HORIZON_FRACTION * signal.horizon {
            let m = (usable / 20).max(3);
            let late = log_rate(times, values, usable - m, usable - 1);
            let start = usable / 2;
            let end = (usable * 9 / 10).max(start + 1).min(usable - 1);
            let reference = log_rate(times, values, start, end);
            if late > 0.0 && late > FINITE_TIME_ACCELERATION * reference.max(0.0) {
                return Ok(finite_time_report((times[0], t_hit)));
            }
        }
    }

    let lo = usable / 2;
    let idx: Vec<usize> = (lo..usable).filter(|&i| times[i] > 0.0 && values[i] > 0.0).collect();
    if idx.len() < 2 {
        return Err(Error::InsufficientData {
            usable: idx.len(),
            required: MIN_USABLE_SAMPLES,
        });
    }
    let window = (times[idx[0]], times[*idx.last().unwrap()]);
    let t: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
    let log_t: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let log_d: Vec<f64> = idx.iter().map(|&i| values[i].ln()).collect();

    let exp_fit = fit_line(&t, &log_d).filter(|f| f.slope < 0.0);
    let poly_fit = fit_line(&log_t, &log_d).filter(|f| f.slope < 0.0);
    let r2 = |f: &Option<LineFit>| f.map_or(-1.0, |f| f.r_squared);

    let inconclusive = RateReport {
        regime: Regime::Inconclusive,
        theta_hat: None,
        theta_interval: None,
        fit_constants: None,
        r_squared: Some(r2(&exp_fit).max(r2(&poly_fit)).max(0.0)),
        slope: None,
        window,
    };
    if r2(&exp_fit) < MIN_R_SQUARED && r2(&poly_fit) < MIN_R_SQUARED {
        return Ok(inconclusive);
    }

    if r2(&exp_fit) >= r2(&poly_fit) {
        let f = exp_fit.expect("exp fit clears the threshold");
        Ok(RateReport {
            regime: Regime::Exponential,
            theta_hat: Some(0.5),
            theta_interval: None,
            fit_constants: Some((f.intercept.exp(), -f.slope)),
            r_squared: Some(f.r_squared),
            slope: Some(f.slope),
            window,
        })
    } else {
        let f = poly_fit.expect("poly fit clears the threshold");
        let theta = theta_from_polynomial_slope(f.slope)?;
        // d^{-1/p} is affine in t under the polynomial model.
        let p = -f.slope;
        let lifted: Vec<f64> = idx.iter().map(|&i| values[i].powf(-1.0 / p)).collect();
        let constants = fit_line(&t, &lifted).map(|g| (g.slope, g.intercept));
        Ok(RateReport {
            regime: Regime::Polynomial,
            theta_hat: Some(theta),
            theta_interval: None,
            fit_constants: constants,
            r_squared: Some(f.r_squared),
            slope: Some(f.slope),
            window,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64, t_end: f64, n: usize) -> DecaySignal {
        let times: Vec<f64> = (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect();
        let values = times.iter().map(|&t| f(t)).collect();
        DecaySignal::from_samples(times, values, 1e-6, t_end).unwrap()
    }

    #[test]
    fn exponential_signal() {
        let r = classify_rate(&synthetic(|t| (-2.0 * t).exp(), 10.0, 1000)).unwrap();
        assert_eq!(r.regime, Regime::Exponential);
        assert_eq!(r.theta_hat, Some(0.5));
        let (_, b1) = r.fit_constants.unwrap();
        assert!((b1 - 2.0).abs() < 0.01);
    }

    #[test]
    fn polynomial_signal() {
        let r = classify_rate(&synthetic(|t| (1.0 + t).powf(-0.5), 1000.0, 2000)).unwrap();
        assert_eq!(r.regime, Regime::Polynomial);
        assert!((r.theta_hat.unwrap() - 0.75).abs() < 0.01);
        let (a2, b2) = r.fit_constants.unwrap();
        // (1 + t)^{-1/2} = (a2 t + b2)^{-p} with p -> 1/2
        assert!((a2 - 1.0).abs() < 0.05 && b2.abs() < 30.0, "{a2} {b2}");
    }

    #[test]
    fn finite_time_signal() {
        let r = classify_rate(&synthetic(|t| (5.0 - t).max(0.0).powi(2), 10.0, 1000)).unwrap();
        assert_eq!(r.regime, Regime::FiniteTime);
        assert_eq!(r.theta_interval, Some((0.0, 0.5)));
        assert!(r.theta_hat.is_none());
    }

    #[test]
    fn late_floor_hit_is_not_finite_time() {
        // hits the floor only after 0.9 of the horizon
        let s = synthetic(|t| (9.5 - t).max(0.0).powi(2), 10.0, 1000);
        assert_ne!(classify_rate(&s).unwrap().regime, Regime::FiniteTime);
    }

    #[test]
    fn flat_signal_is_inconclusive() {
        let r = classify_rate(&synthetic(|t| 1.0 + 0.1 * (t * 7.0).sin(), 10.0, 500)).unwrap();
        assert_eq!(r.regime, Regime::Inconclusive);
    }

    #[test]
    fn trivially_converged_signal() {
        let s = DecaySignal::from_samples(vec![0.0], vec![0.0], 1e-6, 10.0).unwrap();
        assert!(s.trivially_converged());
        assert_eq!(classify_rate(&s).unwrap().regime, Regime::FiniteTime);
    }

    #[test]
    fn too_few_samples() {
        let s = synthetic(|t| (-t).exp(), 1.0, 10);
        assert!(matches!(classify_rate(&s), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn theta_inversion_examples() {
        assert!((theta_from_polynomial_slope(-0.5).unwrap() - 0.75).abs() < 1e-15);
        assert!((theta_from_polynomial_slope(-1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let steep = theta_from_polynomial_slope(-1e9).unwrap();
        assert!(steep > 0.5 && steep - 0.5 < 1e-9);
        assert!(matches!(theta_from_polynomial_slope(0.0), Err(Error::InvalidSlope(_))));
        assert!(theta_from_polynomial_slope(0.3).is_err());
    }

    #[test]
    fn sigma_of_samples_dominates_values() {
        let s = synthetic(|t| (1.0 + t).powf(-0.5) * (1.0 + 0.1 * t.sin()), 50.0, 300);
        assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        assert!(s.values.iter().zip(&s.sigma).all(|(d, sg)| *d <= sg + 1e-9));
    }
}
