use nalgebra::{Complex, DMatrix, DVector};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::vec3::Vec3;

use super::spectrum::SpectrumResult;
use super::system::{digit, digit_m, stride, QuantumSystem};
use super::QReal;

/// Site-resolved and collective expectation values of a pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumObservables<T> {
    pub sites: Vec<Vec3<T>>,
    /// `⟨F⟩ = Σ_i ⟨f_i⟩`.
    pub collective: Vec3<T>,
    /// `|⟨F_⊥⟩| / N`.
    pub contrast: T,
}

/// Evolves states through a precomputed eigenbasis, `ψ(t) = V e^{-iEt} Vᵀ ψ(0)`.
pub struct Propagator<'a, T: QReal> {
    spectrum: &'a SpectrumResult<T>,
}

impl<'a, T: QReal> Propagator<'a, T> {
    pub fn new(spectrum: &'a SpectrumResult<T>) -> Self {
        Self { spectrum }
    }

    pub fn propagate(&self, psi0: &DVector<Complex<T>>, t: T) -> Result<DVector<Complex<T>>> {
        check_normalized(psi0)?;
        let v = &self.spectrum.vectors;
        if psi0.len() != v.nrows() {
            return Err(Error::InvalidArgument(format!(
                "state has dimension {}, Hamiltonian {}",
                psi0.len(),
                v.nrows()
            )));
        }
        let (re, im) = split(psi0);
        let mut a = v.tr_mul(&re);
        let mut b = v.tr_mul(&im);
        for (k, &e) in self.spectrum.energies.iter().enumerate() {
            let (s, c) = Float::sin_cos(e * t);
            let (x, y) = (a[k], b[k]);
            // (x + iy) e^{-iEt}
            a[k] = x * c + y * s;
            b[k] = y * c - x * s;
        }
        let re = v * a;
        let im = v * b;
        Ok(DVector::from_fn(re.len(), |i, _| Complex::new(re[i], im[i])))
    }
}

fn split<T: QReal>(psi: &DVector<Complex<T>>) -> (DVector<T>, DVector<T>) {
    (psi.map(|z| z.re), psi.map(|z| z.im))
}

fn check_normalized<T: QReal>(psi: &DVector<Complex<T>>) -> Result<()> {
    let n = Float::sqrt(psi.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()));
    if Float::abs(n - T::one()) > T::lit(1e-10) {
        return Err(Error::NotNormalized(n.to_f64_lossy()));
    }
    Ok(())
}

/// `ψ(t)` from `ψ(0)` under the Hamiltonian whose spectrum is given.
pub fn evolve_quantum<T: QReal>(
    spectrum: &SpectrumResult<T>,
    psi0: &DVector<Complex<T>>,
    t: T,
) -> Result<DVector<Complex<T>>> {
    Propagator::new(spectrum).propagate(psi0, t)
}

impl<T: QReal> QuantumSystem<T> {
    /// `⟨f_i⟩` for every site plus collective quantities.
    pub fn observables(&self, psi: &DVector<Complex<T>>) -> QuantumObservables<T> {
        let s = Float::sqrt(T::lit(0.5));
        let two_s = s + s;
        let mut sites = vec![Vec3::zero(); self.n_atoms];
        for (a, za) in psi.iter().enumerate() {
            let pa = za.norm_sqr();
            for (i, site) in sites.iter_mut().enumerate() {
                let d = digit(a, i, self.n_atoms);
                site.z += pa * T::lit(digit_m(d) as f64);
                if d < 2 {
                    let zb = psi[a + stride(i, self.n_atoms)];
                    let prod = za.conj() * zb;
                    site.x += two_s * prod.re;
                    site.y += two_s * prod.im;
                }
            }
        }
        let collective = sites.iter().fold(Vec3::zero(), |acc, &f| acc + f);
        let contrast = collective.transverse() / T::count(self.n_atoms);
        QuantumObservables { sites, collective, contrast }
    }

    /// `⟨ψ|O|ψ⟩` for a real symmetric operator.
    pub fn expectation(&self, op: &DMatrix<T>, psi: &DVector<Complex<T>>) -> T {
        let (a, b) = split(psi);
        a.dot(&(op * &a)) + b.dot(&(op * &b))
    }

    /// `⟨ψ|iY|ψ⟩` for a real antisymmetric `Y`.
    pub fn expectation_imaginary(&self, op_im: &DMatrix<T>, psi: &DVector<Complex<T>>) -> T {
        let (a, b) = split(psi);
        -(T::lit(2.0) * a.dot(&(op_im * &b)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::CouplingSet;
    use crate::quantum::{build_system, coherent_product_state, spectrum};

    #[test]
    fn coherent_state_expectations() {
        let sys = build_system::<f64>(2, &[1.0, 1.0]).unwrap();
        let n = Vec3::new(0.6, 0.0, 0.8);
        let other = Vec3::new(0.0, 1.0, 0.0);
        let psi = coherent_product_state(&sys, n, &[(1, other)]).unwrap();
        let obs = sys.observables(&psi);
        assert!(obs.sites[0].max_abs_diff(n) < 1e-14);
        assert!(obs.sites[1].max_abs_diff(other) < 1e-14);
        let fy = sys.expectation_imaginary(&sys.fy_im, &psi);
        assert!((fy - 1.0).abs() < 1e-14);
        assert!((sys.expectation(&sys.fx, &psi) - 0.6).abs() < 1e-14);
    }

    #[test]
    fn larmor_precession_matches_classical_sense() {
        // H = ω F_z turns x toward +y, as ḟ = B × f with B = ω ẑ.
        let sys = build_system::<f64>(1, &[1.0]).unwrap();
        let spec = spectrum(&sys, &CouplingSet { h_z: 1.0, ..CouplingSet::zero() }).unwrap();
        let psi0 = coherent_product_state(&sys, Vec3::unit_x(), &[]).unwrap();
        let psi = evolve_quantum(&spec, &psi0, std::f64::consts::FRAC_PI_2).unwrap();
        let f = sys.observables(&psi).sites[0];
        assert!(f.max_abs_diff(Vec3::unit_y()) < 1e-12, "{f:?}");
    }

    #[test]
    fn rejects_unnormalized_state() {
        let sys = build_system::<f64>(1, &[1.0]).unwrap();
        let spec = spectrum(&sys, &CouplingSet::zero()).unwrap();
        let psi = DVector::from_element(3, Complex::new(1.0, 0.0));
        assert!(matches!(evolve_quantum(&spec, &psi, 1.0), Err(Error::NotNormalized(_))));
    }
}
