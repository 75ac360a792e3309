use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::hamiltonian::CouplingSet;

use super::system::{hamiltonian_matrix, total_m, QuantumSystem};
use super::QReal;

/// Eigen-decomposition of a model Hamiltonian, ascending in energy.
#[derive(Debug, Clone)]
pub struct SpectrumResult<T: QReal> {
    pub energies: Vec<T>,
    /// Column `k` is the eigenvector of `energies[k]`.
    pub vectors: DMatrix<T>,
    /// Total-spin quantum number `F` (or its `⟨F²⟩` equivalent when `F` is not conserved).
    pub f_labels: Vec<T>,
    /// Total `m`, present when `[H, F_z] = 0`.
    pub m_labels: Option<Vec<i32>>,
    pub f_conserved: bool,
}

impl<T: QReal> SpectrumResult<T> {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Integer `F` label, if `F` is a good quantum number.
    pub fn f_integer(&self, k: usize) -> Option<i32> {
        let f = self.f_labels[k].to_f64_lossy();
        (self.f_conserved && (f - f.round()).abs() < 1e-6).then(|| f.round() as i32)
    }
}

fn max_abs<T: QReal>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, x| Float::max(acc, Float::abs(*x)))
}

fn f_from_sq<T: QReal>(x: T) -> T {
    (Float::sqrt(T::one() + T::lit(4.0) * Float::max(x, T::zero())) - T::one()) / T::lit(2.0)
}

/// Diagonalizes `h` on the index set `idx`, rotating degenerate clusters to
/// diagonalize `F²` when `F` is conserved.
fn diagonalize_block<T: QReal>(
    h: &DMatrix<T>,
    f2: &DMatrix<T>,
    idx: &[usize],
    f_conserved: bool,
    tol: T,
) -> Vec<(T, Vec<T>, T)> {
    let n = idx.len();
    let hb = DMatrix::from_fn(n, n, |i, j| h[(idx[i], idx[j])]);
    let fb = DMatrix::from_fn(n, n, |i, j| f2[(idx[i], idx[j])]);
    let eig = SymmetricEigen::new(hb);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals: Vec<T> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);

    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && vals[end] - vals[end - 1] <= tol {
            end += 1;
        }
        if f_conserved && end - start > 1 {
            let v = vecs.columns(start, end - start).into_owned();
            let proj = v.transpose() * &fb * &v;
            let sub = SymmetricEigen::new(proj);
            let rotated = &v * &sub.eigenvectors;
            vecs.columns_mut(start, end - start).copy_from(&rotated);
        }
        start = end;
    }

    (0..n)
        .map(|k| {
            let col = vecs.column(k);
            let f2k = (col.transpose() * &fb * col)[(0, 0)];
            let mut full = vec![T::zero(); h.nrows()];
            for (i, &g) in idx.iter().enumerate() {
                full[g] = col[i];
            }
            (vals[k], full, f_from_sq(f2k))
        })
        .collect()
}

/// Full spectrum of `couplings` on `system`, labelled by `F` and (when conserved) `m`.
pub fn spectrum<T: QReal>(system: &QuantumSystem<T>, couplings: &CouplingSet<T>) -> Result<SpectrumResult<T>> {
    let h = hamiltonian_matrix(system, couplings)?;
    let f2 = system.total_spin_sq();
    let scale = Float::max(max_abs(&h), T::one());
    let zero_tol = T::lit(1e-10) * scale;

    let m_of: Vec<i32> = (0..system.dim).map(|a| total_m(a, system.n_atoms)).collect();
    let mut m_conserved = true;
    'outer: for a in 0..system.dim {
        for b in 0..system.dim {
            if m_of[a] != m_of[b] && Float::abs(h[(a, b)]) > zero_tol {
                m_conserved = false;
                break 'outer;
            }
        }
    }
    let comm = &h * &f2 - &f2 * &h;
    let f_conserved = max_abs(&comm) <= zero_tol * Float::max(max_abs(&f2), T::one());

    let blocks: Vec<(Option<i32>, Vec<usize>)> = if m_conserved {
        let n = system.n_atoms as i32;
        (-n..=n)
            .rev()
            .map(|m| (Some(m), (0..system.dim).filter(|&a| m_of[a] == m).collect()))
            .collect()
    } else {
        vec![(None, (0..system.dim).collect())]
    };

    let degeneracy_tol = T::lit(1e-9) * scale;
    let mut levels: Vec<(T, Vec<T>, T, Option<i32>)> = Vec::with_capacity(system.dim);
    for (m, idx) in &blocks {
        for (e, v, f) in diagonalize_block(&h, &f2, idx, f_conserved, degeneracy_tol) {
            levels.push((e, v, f, *m));
        }
    }
    // Stable within ties: block order (descending m) then block-internal order.
    levels.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let dim = system.dim;
    let vectors = DMatrix::from_fn(dim, dim, |i, k| levels[k].1[i]);
    Ok(SpectrumResult {
        energies: levels.iter().map(|l| l.0).collect(),
        vectors,
        f_labels: levels
            .iter()
            .map(|l| if f_conserved { Float::round(l.2) } else { l.2 })
            .collect(),
        m_labels: m_conserved.then(|| levels.iter().map(|l| l.3.unwrap()).collect()),
        f_conserved,
    })
}

/// Gap protecting the fully symmetric manifold under a ferromagnetic XY
/// interaction: the smallest `E(F = N-1, m) - E(F = N, m)` over shared `m`.
///
/// A single atom has no `F = N - 1` manifold; there the first excitation
/// above the ground level is returned instead.
pub fn protection_gap<T: QReal>(system: &QuantumSystem<T>, j_xy: T) -> Result<T> {
    if !system.uniform_weights() {
        return Err(Error::NonUniformWeights);
    }
    if !(j_xy < T::zero()) {
        return Err(Error::InvalidArgument("protection gap needs J_xy < 0".into()));
    }
    let c = CouplingSet { j_xy, ..CouplingSet::zero() };
    let spec = spectrum(system, &c)?;
    let tol = T::lit(1e-9) * Float::max(Float::abs(spec.energies[0]), T::one());
    if system.n_atoms == 1 {
        let e0 = spec.energies[0];
        return spec
            .energies
            .iter()
            .copied()
            .find(|&e| e - e0 > tol)
            .map(|e| e - e0)
            .ok_or_else(|| Error::InvalidArgument("spectrum has a single level".into()));
    }
    let m_labels = spec.m_labels.as_ref().expect("pure XY conserves F_z");
    let n = system.n_atoms as i32;
    let lowest = |f: i32, m: i32| {
        (0..spec.len())
            .filter(|&k| spec.f_integer(k) == Some(f) && m_labels[k] == m)
            .map(|k| spec.energies[k])
            .fold(None, |acc: Option<T>, e| Some(acc.map_or(e, |a| Float::min(a, e))))
    };
    let mut gap: Option<T> = None;
    for m in -(n - 1)..=(n - 1) {
        if let (Some(lo), Some(hi)) = (lowest(n, m), lowest(n - 1, m)) {
            let g = hi - lo;
            gap = Some(gap.map_or(g, |x| Float::min(x, g)));
        }
    }
    gap.ok_or_else(|| Error::InvalidArgument("no shared m between F = N and F = N - 1".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::build_system;

    #[test]
    fn single_atom_xy_levels() {
        let sys = build_system::<f64>(1, &[1.0]).unwrap();
        let c = CouplingSet { j_xy: -1.0, ..CouplingSet::zero() };
        let s = spectrum(&sys, &c).unwrap();
        // J(F² - F_z²) on spin 1
        assert!((s.energies[0] + 2.0).abs() < 1e-12);
        assert!((s.energies[1] + 1.0).abs() < 1e-12);
        assert!((s.energies[2] + 1.0).abs() < 1e-12);
        assert!((protection_gap(&sys, -1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_atom_gap_and_labels() {
        let sys = build_system::<f64>(2, &[1.0, 1.0]).unwrap();
        assert!((protection_gap(&sys, -1.0).unwrap() - 4.0).abs() < 1e-10);
        let s = spectrum(&sys, &CouplingSet { j_xy: -1.0, ..CouplingSet::zero() }).unwrap();
        assert!(s.f_conserved);
        assert!(s.m_labels.is_some());
        let count = |f| (0..s.len()).filter(|&k| s.f_integer(k) == Some(f)).count();
        assert_eq!((count(0), count(1), count(2)), (1, 3, 5));
    }

    #[test]
    fn transverse_field_breaks_m() {
        let sys = build_system::<f64>(2, &[1.0, 1.0]).unwrap();
        let s = spectrum(&sys, &CouplingSet { j_z: 1.0, h_x: 0.3, ..CouplingSet::zero() }).unwrap();
        assert!(s.m_labels.is_none());
        assert!(s.f_conserved);
    }

    #[test]
    fn gap_needs_uniform_ferromagnet() {
        let sys = build_system::<f64>(2, &[1.0, 0.5]).unwrap();
        assert!(matches!(protection_gap(&sys, -1.0), Err(Error::NonUniformWeights)));
        let sys = build_system::<f64>(2, &[1.0, 1.0]).unwrap();
        assert!(protection_gap(&sys, 1.0).is_err());
    }
}
