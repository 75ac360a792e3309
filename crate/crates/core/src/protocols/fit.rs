//! Least-squares fits used to extract rates from simulated time series.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use num_traits::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{wrap_angle, Real};

pub const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    NotConverged,
    /// The data do not constrain the model (flat signal, less than half a period).
    Degenerate,
}

/// Parameter estimates with 1σ uncertainties.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub names: &'static [&'static str],
    pub params: Vec<T>,
    pub errors: Vec<T>,
    /// `√Σ r²`.
    pub residual_norm: T,
    pub iterations: usize,
    pub status: FitStatus,
}

pub const LINEAR_PARAMS: &[&str] = &["intercept", "slope"];
pub const SINUSOID_PARAMS: &[&str] = &["amplitude", "frequency", "phase", "offset"];

impl<T: Copy> FitResult<T> {
    fn index(&self, name: &str) -> usize {
        self.names
            .iter()
            .position(|n| *n == name)
            .unwrap_or_else(|| panic!("fit has no parameter {name}"))
    }

    pub fn value(&self, name: &str) -> T {
        self.params[self.index(name)]
    }

    pub fn error(&self, name: &str) -> T {
        self.errors[self.index(name)]
    }

    pub fn converged(&self) -> bool {
        self.status == FitStatus::Converged
    }
}

fn check_series<T: Real>(x: &[T], y: &[T], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Fit(format!("{} abscissae for {} ordinates", x.len(), y.len())));
    }
    if x.len() < min {
        return Err(Error::Fit(format!("need at least {min} points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !Float::is_finite(*v)) {
        return Err(Error::Fit("non-finite data".into()));
    }
    Ok(())
}

fn mean<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, &b| a + b) / T::count(v.len())
}

/// Ordinary least-squares line `y = intercept + slope·x`.
///
/// With `sigma` the uncertainties follow from the known per-point noise;
/// otherwise from the residual variance (infinite for two points).
pub fn fit_linear<T: Real>(x: &[T], y: &[T], sigma: Option<T>) -> Result<FitResult<T>> {
    check_series(x, y, 2)?;
    let n = T::count(x.len());
    let (xm, ym) = (mean(x), mean(y));
    let sxx = x.iter().fold(T::zero(), |a, &xi| a + (xi - xm) * (xi - xm));
    let scale = x.iter().fold(T::zero(), |a, &xi| Float::max(a, Float::abs(xi)));
    if sxx <= T::lit(1e-24) * Float::max(scale * scale, T::min_positive_value()) * n {
        return Err(Error::Fit("degenerate abscissae".into()));
    }
    let sxy = x.iter().zip(y).fold(T::zero(), |a, (&xi, &yi)| a + (xi - xm) * (yi - ym));
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let rss = x
        .iter()
        .zip(y)
        .fold(T::zero(), |a, (&xi, &yi)| a + Float::powi(yi - intercept - slope * xi, 2));
    let s2 = match sigma {
        Some(s) => s * s,
        None if x.len() > 2 => rss / (n - T::lit(2.0)),
        None => T::infinity(),
    };
    let slope_err = Float::sqrt(s2 / sxx);
    let intercept_err = Float::sqrt(s2 * (T::one() / n + xm * xm / sxx));
    Ok(FitResult {
        names: LINEAR_PARAMS,
        params: vec![intercept, slope],
        errors: vec![intercept_err, slope_err],
        residual_norm: Float::sqrt(rss),
        iterations: 1,
        status: FitStatus::Converged,
    })
}

/// Linear least squares for `y ≈ a sin(ωt) + b cos(ωt) + c` at fixed `ω`.
fn linear_phase(t: &[f64], y: &[f64], omega: f64) -> Option<(f64, f64, f64)> {
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for (&ti, &yi) in t.iter().zip(y) {
        let (s, c) = (omega * ti).sin_cos();
        let row = Vector3::new(s, c, 1.0);
        ata += row * row.transpose();
        aty += row * yi;
    }
    let sol = ata.lu().solve(&aty)?;
    Some((sol[0], sol[1], sol[2]))
}

/// Frequency of the largest periodogram peak, ties toward lower frequency.
fn spectral_peak(t: &[f64], y: &[f64]) -> f64 {
    let span = t[t.len() - 1] - t[0];
    let ym = y.iter().sum::<f64>() / y.len() as f64;
    let nyquist = (t.len() - 1) as f64 / (2.0 * span);
    let df = 1.0 / (4.0 * span);
    let mut best = (0.0, f64::NEG_INFINITY);
    let mut j = 1usize;
    while j as f64 * df <= nyquist {
        let w = TAU * j as f64 * df;
        let (mut re, mut im) = (0.0, 0.0);
        for (&ti, &yi) in t.iter().zip(y) {
            let (s, c) = (w * ti).sin_cos();
            re += (yi - ym) * c;
            im -= (yi - ym) * s;
        }
        let p = re * re + im * im;
        if p > best.1 {
            best = (j as f64 * df, p);
        }
        j += 1;
    }
    best.0
}

fn sinusoid_chi2(t: &[f64], y: &[f64], p: &Vector4<f64>) -> f64 {
    t.iter()
        .zip(y)
        .map(|(&ti, &yi)| {
            let r = yi - (p[0] * (TAU * p[1] * ti + p[2]).sin() + p[3]);
            r * r
        })
        .sum()
}

/// Nonlinear least squares for `y = A sin(2πft + φ) + C` by Levenberg–Marquardt.
///
/// The starting frequency is `freq_prior` when given, otherwise the
/// periodogram peak. Returned `A ≥ 0`, `f ≥ 0`, `φ ∈ (-π, π]`. The normal
/// equations are solved in double precision whatever `T` is.
pub fn fit_sinusoid<T: Real>(t: &[T], y: &[T], freq_prior: Option<T>) -> Result<FitResult<T>> {
    check_series(t, y, 6)?;
    if let Some(f) = freq_prior {
        if !(f > T::zero() && f.is_finite()) {
            return Err(Error::Fit("frequency prior must be positive".into()));
        }
    }
    let t: Vec<f64> = t.iter().map(|v| v.to_f64_lossy()).collect();
    let y: Vec<f64> = y.iter().map(|v| v.to_f64_lossy()).collect();
    let fit = sinusoid_f64(&t, &y, freq_prior.map(|f| f.to_f64_lossy()))?;
    Ok(FitResult {
        names: fit.names,
        params: fit.params.into_iter().map(T::lit).collect(),
        errors: fit.errors.into_iter().map(T::lit).collect(),
        residual_norm: T::lit(fit.residual_norm),
        iterations: fit.iterations,
        status: fit.status,
    })
}

fn sinusoid_f64(t: &[f64], y: &[f64], freq_prior: Option<f64>) -> Result<FitResult<f64>> {
    let n = t.len();
    let span = t[n - 1] - t[0];
    if !(span > 0.0) {
        return Err(Error::Fit("abscissae must increase".into()));
    }
    let ym = y.iter().sum::<f64>() / n as f64;
    let spread = y.iter().fold(0.0f64, |a, &v| a.max((v - ym).abs()));
    let yscale = ym.abs().max(1.0);
    let degenerate = |iterations| FitResult {
        names: SINUSOID_PARAMS,
        params: vec![0.0, 0.0, 0.0, ym],
        errors: vec![f64::INFINITY; 4],
        residual_norm: y.iter().map(|&v| (v - ym) * (v - ym)).sum::<f64>().sqrt(),
        iterations,
        status: FitStatus::Degenerate,
    };
    if spread <= 1e-12 * yscale {
        return Ok(degenerate(0));
    }

    let f0 = freq_prior.unwrap_or_else(|| spectral_peak(t, y));
    let Some((a, b, c)) = linear_phase(t, y, TAU * f0) else {
        return Ok(degenerate(0));
    };
    let mut p = Vector4::new(a.hypot(b), f0, b.atan2(a), c);
    let mut chi2 = sinusoid_chi2(t, y, &p);
    let mut lambda = 1e-3;
    let floor = 1e-30 * n as f64 * spread * spread;
    let mut status = FitStatus::NotConverged;
    let mut iterations = 0;
    let mut jtj = Matrix4::<f64>::zeros();

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        jtj = Matrix4::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for (&ti, &yi) in t.iter().zip(y) {
            let (s, cu) = (TAU * p[1] * ti + p[2]).sin_cos();
            let row = Vector4::new(s, p[0] * cu * TAU * ti, p[0] * cu, 1.0);
            jtj += row * row.transpose();
            jtr += row * (yi - (p[0] * s + p[3]));
        }
        if chi2 <= floor {
            status = FitStatus::Converged;
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = jtj;
            for k in 0..4 {
                damped[(k, k)] += lambda * jtj[(k, k)].max(f64::MIN_POSITIVE);
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let trial_chi2 = sinusoid_chi2(t, y, &trial);
            if trial_chi2 <= chi2 {
                let rel = (chi2 - trial_chi2) / chi2.max(f64::MIN_POSITIVE);
                let small_step = (0..4).all(|k| step[k].abs() <= 1e-12 * p[k].abs().max(1e-12));
                p = trial;
                chi2 = trial_chi2;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if rel <= 1e-14 || small_step {
                    status = FitStatus::Converged;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: a minimum to working precision
            status = FitStatus::Converged;
            break;
        }
        if status == FitStatus::Converged {
            break;
        }
    }

    // canonical signs
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[0] = -p[0];
        p[2] = -p[2];
    }
    if p[0] < 0.0 {
        p[0] = -p[0];
        p[2] += PI;
    }
    p[2] = wrap_angle(p[2]);

    let s2 = if n > 4 { chi2 / (n - 4) as f64 } else { f64::INFINITY };
    let errors = match jtj.try_inverse() {
        Some(cov) => (0..4).map(|k| (cov[(k, k)].max(0.0) * s2).sqrt()).collect(),
        None => vec![f64::INFINITY; 4],
    };
    if freq_prior.is_none() && p[1] * span < 0.5 {
        status = FitStatus::Degenerate;
    }
    if p[0] <= 1e-12 * yscale {
        status = FitStatus::Degenerate;
    }
    if status == FitStatus::NotConverged {
        log::warn!("sinusoid fit did not converge in {MAX_ITERATIONS} iterations");
    }
    Ok(FitResult {
        names: SINUSOID_PARAMS,
        params: p.iter().copied().collect(),
        errors,
        residual_norm: chi2.sqrt(),
        iterations,
        status,
    })
}

/// Coefficient of determination of `model` against `y`.
pub fn r_squared<T: Real>(y: &[T], model: &[T]) -> T {
    let ym = mean(y);
    let ss_tot = y.iter().fold(T::zero(), |a, &v| a + (v - ym) * (v - ym));
    let ss_res = y.iter().zip(model).fold(T::zero(), |a, (&v, &m)| a + (v - m) * (v - m));
    if ss_tot == T::zero() {
        return if ss_res == T::zero() { T::one() } else { T::zero() };
    }
    T::one() - ss_res / ss_tot
}

/// Least squares through the origin, `y = a·x`; returns `(a, R²)`.
pub fn fit_proportional<T: Real>(x: &[T], y: &[T]) -> Result<(T, T)> {
    check_series(x, y, 1)?;
    let sxx = x.iter().fold(T::zero(), |a, &v| a + v * v);
    if sxx == T::zero() {
        return Err(Error::Fit("degenerate abscissae".into()));
    }
    let a = x.iter().zip(y).fold(T::zero(), |acc, (&xi, &yi)| acc + xi * yi) / sxx;
    let model: Vec<T> = x.iter().map(|&xi| a * xi).collect();
    Ok((a, r_squared(y, &model)))
}
