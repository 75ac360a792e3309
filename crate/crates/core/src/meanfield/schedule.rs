use crate::ensemble::interpolate;
use crate::error::{Error, Result};
use crate::hamiltonian::CouplingSet;
use crate::scalar::Real;

/// Piecewise-linear time profile; constant outside its knot range.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile<T> {
    knots: Vec<(T, T)>,
}

impl<T: Real> Profile<T> {
    pub fn constant(value: T) -> Self {
        Self { knots: vec![(T::zero(), value)] }
    }

    pub fn from_knots(knots: Vec<(T, T)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidSchedule("profile needs at least one knot".into()));
        }
        if knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidSchedule("non-finite knot".into()));
        }
        if knots.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::InvalidSchedule("knots must be time-ordered".into()));
        }
        Ok(Self { knots })
    }

    /// Ramp from `from` to `to` over `[t0, t0 + duration]` following the
    /// smooth profile `(1 - cos πu)/2`, sampled at `segments + 1` knots.
    pub fn smooth_ramp(from: T, to: T, t0: T, duration: T, segments: usize) -> Self {
        let segments = segments.max(1);
        let knots = (0..=segments)
            .map(|i| {
                let u = T::count(i) / T::count(segments);
                let s = (T::one() - (T::PI() * u).cos()) / T::lit(2.0);
                (t0 + duration * u, from + (to - from) * s)
            })
            .collect();
        Self { knots }
    }

    /// Straight-line ramp from `from` to `to` over `[t0, t0 + duration]`.
    pub fn linear_ramp(from: T, to: T, t0: T, duration: T) -> Self {
        Self { knots: vec![(t0, from), (t0 + duration, to)] }
    }

    pub fn eval(&self, t: T) -> T {
        interpolate(&self.knots, t)
    }

    pub fn knots(&self) -> &[(T, T)] {
        &self.knots
    }

    pub fn max_abs(&self) -> T {
        self.knots.iter().fold(T::zero(), |m, k| m.max(k.1.abs()))
    }
}

/// Time-dependent coupling set over `[0, duration]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule<T> {
    pub j_xy: Profile<T>,
    pub j_z: Profile<T>,
    pub h_x: Profile<T>,
    pub h_z: Profile<T>,
    pub mu: Profile<T>,
    pub gamma_sc: Profile<T>,
    pub inhom: Option<Vec<T>>,
    pub duration: T,
}

/// Couplings frozen at one instant; borrows the static per-site table.
#[derive(Debug, Clone, Copy)]
pub struct InstantCouplings<'a, T> {
    pub j_xy: T,
    pub j_z: T,
    pub h_x: T,
    pub h_z: T,
    pub mu: T,
    pub gamma_sc: T,
    pub inhom: Option<&'a [T]>,
}

impl<'a, T: Real> InstantCouplings<'a, T> {
    pub fn from_set(c: &'a CouplingSet<T>) -> Self {
        Self {
            j_xy: c.j_xy,
            j_z: c.j_z,
            h_x: c.h_x,
            h_z: c.h_z,
            mu: c.mu,
            gamma_sc: c.gamma_sc,
            inhom: c.inhom.as_deref(),
        }
    }

    pub fn inhomogeneous_field(&self, site: usize, zeta: T) -> T {
        let table = self.inhom.and_then(|t| t.get(site).copied()).unwrap_or_else(T::zero);
        self.mu * zeta + table
    }

    pub fn to_set(&self) -> CouplingSet<T> {
        CouplingSet {
            j_xy: self.j_xy,
            j_z: self.j_z,
            h_x: self.h_x,
            h_z: self.h_z,
            mu: self.mu,
            gamma_sc: self.gamma_sc,
            inhom: self.inhom.map(|t| t.to_vec()),
        }
    }
}

impl<T: Real> Schedule<T> {
    pub fn constant(c: &CouplingSet<T>, duration: T) -> Self {
        Self {
            j_xy: Profile::constant(c.j_xy),
            j_z: Profile::constant(c.j_z),
            h_x: Profile::constant(c.h_x),
            h_z: Profile::constant(c.h_z),
            mu: Profile::constant(c.mu),
            gamma_sc: Profile::constant(c.gamma_sc),
            inhom: c.inhom.clone(),
            duration,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > T::zero()) || !self.duration.is_finite() {
            return Err(Error::InvalidSchedule(format!("duration must be > 0 (got {})", self.duration)));
        }
        let profiles = [&self.j_xy, &self.j_z, &self.h_x, &self.h_z, &self.mu, &self.gamma_sc];
        for p in profiles {
            Profile::from_knots(p.knots.clone())?;
        }
        if self.gamma_sc.knots.iter().any(|k| k.1 < T::zero()) {
            return Err(Error::InvalidSchedule("scattering rate must be >= 0".into()));
        }
        Ok(())
    }

    pub fn at(&self, t: T) -> InstantCouplings<'_, T> {
        InstantCouplings {
            j_xy: self.j_xy.eval(t),
            j_z: self.j_z.eval(t),
            h_x: self.h_x.eval(t),
            h_z: self.h_z.eval(t),
            mu: self.mu.eval(t),
            gamma_sc: self.gamma_sc.eval(t),
            inhom: self.inhom.as_deref(),
        }
    }
}
