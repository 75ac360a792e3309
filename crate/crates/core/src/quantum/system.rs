use nalgebra::{Complex, DMatrix, DVector};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::hamiltonian::CouplingSet;
use crate::vec3::Vec3;

use super::QReal;

pub const MAX_ATOMS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Collective operators of `N` spin-1 atoms with coupling weights `c_i`.
#[derive(Debug, Clone)]
pub struct QuantumSystem<T: QReal> {
    pub n_atoms: usize,
    pub dim: usize,
    pub weights: Vec<T>,
    /// `F_x`.
    pub fx: DMatrix<T>,
    /// Imaginary part of `F_y`.
    pub fy_im: DMatrix<T>,
    /// `F_z` (diagonal).
    pub fz: DMatrix<T>,
    /// `𝓕_x`.
    pub wx: DMatrix<T>,
    /// Imaginary part of `𝓕_y`.
    pub wy_im: DMatrix<T>,
    /// `𝓕_z`.
    pub wz: DMatrix<T>,
}

fn half_sqrt2<T: QReal>() -> T {
    Float::sqrt(T::lit(0.5))
}

/// Magnetic quantum number of digit `d`.
pub(crate) fn digit_m(d: usize) -> i32 {
    1 - d as i32
}

pub(crate) fn digit(index: usize, site: usize, n_atoms: usize) -> usize {
    (index / 3usize.pow((n_atoms - 1 - site) as u32)) % 3
}

pub(crate) fn stride(site: usize, n_atoms: usize) -> usize {
    3usize.pow((n_atoms - 1 - site) as u32)
}

/// Total magnetic quantum number of a basis state.
pub(crate) fn total_m(index: usize, n_atoms: usize) -> i32 {
    (0..n_atoms).map(|i| digit_m(digit(index, i, n_atoms))).sum()
}

/// Operator `Σ_i coeff_i f_{i,axis}` as a dense real matrix (imaginary part for `Y`).
fn collective<T: QReal>(n_atoms: usize, coeff: &[T], axis: Axis) -> DMatrix<T> {
    let dim = 3usize.pow(n_atoms as u32);
    let s = half_sqrt2::<T>();
    let mut m = DMatrix::<T>::zeros(dim, dim);
    for a in 0..dim {
        for (i, &c) in coeff.iter().enumerate() {
            let d = digit(a, i, n_atoms);
            match axis {
                Axis::Z => m[(a, a)] += c * T::lit(digit_m(d) as f64),
                Axis::X | Axis::Y if d < 2 => {
                    let b = a + stride(i, n_atoms);
                    let (ab, ba) = match axis {
                        Axis::X => (c * s, c * s),
                        _ => (-(c * s), c * s),
                    };
                    m[(a, b)] += ab;
                    m[(b, a)] += ba;
                }
                _ => {}
            }
        }
    }
    m
}

/// Assembles the collective and weighted operators for `n_atoms` spin-1 atoms.
pub fn build_system<T: QReal>(n_atoms: usize, weights: &[T]) -> Result<QuantumSystem<T>> {
    if n_atoms == 0 || n_atoms > MAX_ATOMS {
        return Err(Error::DimensionGuard(n_atoms));
    }
    if weights.len() != n_atoms {
        return Err(Error::InvalidArgument(format!(
            "expected {n_atoms} coupling weights, got {}",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !Float::is_finite(*w)) {
        return Err(Error::InvalidArgument("coupling weights must be finite".into()));
    }
    let ones = vec![T::one(); n_atoms];
    Ok(QuantumSystem {
        n_atoms,
        dim: 3usize.pow(n_atoms as u32),
        weights: weights.to_vec(),
        fx: collective(n_atoms, &ones, Axis::X),
        fy_im: collective(n_atoms, &ones, Axis::Y),
        fz: collective(n_atoms, &ones, Axis::Z),
        wx: collective(n_atoms, weights, Axis::X),
        wy_im: collective(n_atoms, weights, Axis::Y),
        wz: collective(n_atoms, weights, Axis::Z),
    })
}

impl<T: QReal> QuantumSystem<T> {
    /// Single-site operator `f_{site,axis}` (imaginary part for `Y`).
    pub fn site_operator(&self, site: usize, axis: Axis) -> DMatrix<T> {
        let mut coeff = vec![T::zero(); self.n_atoms];
        coeff[site] = T::one();
        collective(self.n_atoms, &coeff, axis)
    }

    /// `F² = F_x² + F_y² + F_z²`.
    pub fn total_spin_sq(&self) -> DMatrix<T> {
        &self.fx * &self.fx - &self.fy_im * &self.fy_im + &self.fz * &self.fz
    }

    pub fn uniform_weights(&self) -> bool {
        let w0 = self.weights[0];
        self.weights
            .iter()
            .all(|&w| Float::abs(w - w0) <= T::lit(1e-12) * Float::max(Float::abs(w0), T::one()))
    }

    /// Largest entry of `[F_x, F_y] - iF_z`.
    pub fn algebra_defect(&self) -> T {
        let comm = &self.fx * &self.fy_im - &self.fy_im * &self.fx - &self.fz;
        comm.iter().fold(T::zero(), |m, x| Float::max(m, Float::abs(*x)))
    }

    /// Largest deviation from Hermiticity among the single-site operators.
    pub fn hermiticity_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n_atoms {
            for axis in [Axis::X, Axis::Y, Axis::Z] {
                let op = self.site_operator(i, axis);
                // f_y = iY is Hermitian iff Y is antisymmetric
                let defect = match axis {
                    Axis::Y => &op + op.transpose(),
                    _ => &op - op.transpose(),
                };
                worst = defect.iter().fold(worst, |m, x| Float::max(m, Float::abs(*x)));
            }
        }
        worst
    }
}

/// `H = J_xy(𝓕_x² + 𝓕_y²) + J_z 𝓕_z² + h_x F_x + h_z F_z + Σ h_{i,z} f_{i,z}`.
///
/// Per-atom fields come from `couplings.inhom`; a gradient `μ` has no meaning
/// without positions and is rejected.
pub fn hamiltonian_matrix<T: QReal>(system: &QuantumSystem<T>, couplings: &CouplingSet<T>) -> Result<DMatrix<T>> {
    couplings.validate()?;
    if couplings.mu != T::zero() {
        return Err(Error::InvalidArgument("exact oracle takes per-atom fields, not a gradient".into()));
    }
    let mut h = DMatrix::<T>::zeros(system.dim, system.dim);
    if couplings.j_xy != T::zero() {
        h += (&system.wx * &system.wx - &system.wy_im * &system.wy_im) * couplings.j_xy;
    }
    if couplings.j_z != T::zero() {
        h += (&system.wz * &system.wz) * couplings.j_z;
    }
    if couplings.h_x != T::zero() {
        h += &system.fx * couplings.h_x;
    }
    if couplings.h_z != T::zero() {
        h += &system.fz * couplings.h_z;
    }
    if let Some(table) = &couplings.inhom {
        if table.len() != system.n_atoms {
            return Err(Error::InvalidArgument(format!(
                "expected {} per-atom fields, got {}",
                system.n_atoms,
                table.len()
            )));
        }
        h += collective(system.n_atoms, table, Axis::Z);
    }
    Ok(h)
}

/// Single-site spin-1 coherent state along `n̂`, components for `m = +1, 0, -1`.
fn coherent_site<T: QReal>(n: Vec3<T>) -> [Complex<T>; 3] {
    let theta = Float::acos(Float::max(Float::min(n.z, T::one()), -T::one()));
    let phi = Float::atan2(n.y, n.x);
    let (sh, ch) = (Float::sin(theta / T::lit(2.0)), Float::cos(theta / T::lit(2.0)));
    let e = |a: T| Complex::new(Float::cos(a), Float::sin(a));
    [
        e(-phi) * (ch * ch),
        Complex::new(Float::sqrt(T::lit(2.0)) * sh * ch, T::zero()),
        e(phi) * (sh * sh),
    ]
}

/// Product of spin-1 coherent states along `direction`, with optional
/// per-site directions.
pub fn coherent_product_state<T: QReal>(
    system: &QuantumSystem<T>,
    direction: Vec3<T>,
    overrides: &[(usize, Vec3<T>)],
) -> Result<DVector<Complex<T>>> {
    let check = |u: Vec3<T>| {
        let n = u.norm();
        if Float::abs(n - T::one()) <= T::lit(1e-9) {
            Ok(())
        } else {
            Err(Error::NonUnitDirection(n.to_f64_lossy()))
        }
    };
    check(direction)?;
    let mut dirs = vec![direction; system.n_atoms];
    for &(i, d) in overrides {
        if i >= system.n_atoms {
            return Err(Error::InvalidArgument(format!("site {i} out of range")));
        }
        check(d)?;
        dirs[i] = d;
    }
    let amps: Vec<[Complex<T>; 3]> = dirs.into_iter().map(coherent_site).collect();
    Ok(DVector::from_fn(system.dim, |a, _| {
        (0..system.n_atoms).fold(Complex::new(T::one(), T::zero()), |acc, i| {
            acc * amps[i][digit(a, i, system.n_atoms)]
        })
    }))
}
