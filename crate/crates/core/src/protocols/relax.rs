//! Static ground-state preparation by self-consistent field alignment.

use crate::ensemble::EnsembleState;
use crate::error::{Error, Result};
use crate::hamiltonian::CouplingSet;
use crate::meanfield::local_fields;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxOptions<T> {
    /// Fraction of the new direction mixed in per sweep.
    pub mixing: T,
    /// Largest per-site change (relative to `|f|`) accepted as converged.
    pub tolerance: T,
    pub max_iterations: usize,
}

impl<T: Real> Default for RelaxOptions<T> {
    fn default() -> Self {
        Self { mixing: T::lit(0.5), tolerance: T::lit(1e-10), max_iterations: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxReport<T> {
    pub iterations: usize,
    pub residual: T,
}

/// Rotates every spin antiparallel to its local field, iterating the
/// collective field to a fixed point. Spin lengths are preserved.
pub fn relax_to_ground<T: Real>(
    state: &mut EnsembleState<T>,
    couplings: &CouplingSet<T>,
    opts: &RelaxOptions<T>,
) -> Result<RelaxReport<T>> {
    couplings.validate()?;
    if !(opts.mixing > T::zero() && opts.mixing <= T::one()) {
        return Err(Error::InvalidArgument("mixing must lie in (0, 1]".into()));
    }
    let mut residual = T::infinity();
    for it in 1..=opts.max_iterations {
        let fields = local_fields(state, couplings);
        residual = T::zero();
        for (site, b) in state.sites.iter_mut().zip(fields) {
            let len = site.f.norm();
            let Some(dir) = b.normalized() else { continue };
            if len == T::zero() {
                continue;
            }
            let target = dir.scale(-len);
            let mixed = site.f.scale(T::one() - opts.mixing) + target.scale(opts.mixing);
            // mixing antiparallel vectors cancels; step straight to the target
            let next = match mixed.normalized() {
                Some(u) => u.scale(len),
                None => target,
            };
            residual = residual.max((next - site.f).norm() / len);
            site.f = next;
        }
        if residual <= opts.tolerance {
            return Ok(RelaxReport { iterations: it, residual });
        }
    }
    Err(Error::PreparationFailed { iterations: opts.max_iterations, residual: residual.to_f64_lossy() })
}
