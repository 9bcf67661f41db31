//! Random model instances for property sweeps.
//!
//! States are Gaussian vectors normalized to the unit sphere; bases are the
//! `Q` factor of a Gaussian matrix; observables are symmetrized Gaussian
//! matrices. The `real_*` variants keep every entry real, which keeps weak
//! values real.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::quantum::{Observable, OrthonormalBasis, PureState};
use crate::C64;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(gaussian(rng), gaussian(rng))
}

pub fn random_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> PureState {
    let v = DVector::from_fn(d, |_, _| complex_gaussian(rng));
    PureState::normalized(v).expect("gaussian vector is nonzero")
}

pub fn random_real_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> PureState {
    let v = DVector::from_fn(d, |_, _| C64::new(gaussian(rng), 0.0));
    PureState::normalized(v).expect("gaussian vector is nonzero")
}

pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<C64> {
    let a = DMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

pub fn random_observable<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Observable {
    Observable::new(random_hermitian(d, rng)).expect("symmetrized")
}

pub fn random_real_observable<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Observable {
    let a = DMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let s = (&a + a.transpose()) * 0.5;
    Observable::new(s.map(|v| C64::new(v, 0.0))).expect("symmetrized")
}

fn basis_from_columns(q: &DMatrix<C64>) -> OrthonormalBasis {
    let vectors = q
        .column_iter()
        .map(|c| PureState::normalized(c.into_owned()).expect("nonzero column"))
        .collect();
    OrthonormalBasis::new(vectors).expect("QR factor is orthonormal")
}

pub fn random_basis<R: Rng + ?Sized>(d: usize, rng: &mut R) -> OrthonormalBasis {
    let a = DMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    basis_from_columns(&a.qr().q())
}

pub fn random_real_basis<R: Rng + ?Sized>(d: usize, rng: &mut R) -> OrthonormalBasis {
    let a = DMatrix::from_fn(d, d, |_, _| C64::new(gaussian(rng), 0.0));
    basis_from_columns(&a.qr().q())
}
