//! Seeded random states for property checks and demos.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::statealg::{ComplexMatrix, DensityMatrix, PureStateVector, C64};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed pure state.
pub fn pure_state<R: Rng + ?Sized>(layout: &[usize], rng: &mut R) -> PureStateVector {
    let dim: usize = layout.iter().product();
    let amps = (0..dim).map(|_| gaussian(rng)).collect();
    PureStateVector::normalized(amps, layout.to_vec()).expect("gaussian vector is nonzero")
}

/// Random mixed state `G G^dagger / Tr(G G^dagger)` with a `dim x rank` Ginibre `G`.
pub fn density_matrix<R: Rng + ?Sized>(layout: &[usize], rank: usize, rng: &mut R) -> DensityMatrix {
    let dim: usize = layout.iter().product();
    let entries: Vec<C64> = (0..dim * rank).map(|_| gaussian(rng)).collect();
    let g = ComplexMatrix::from_row_slice(dim, rank, &entries).expect("shape");
    DensityMatrix::from_unnormalized(&g * &g.adjoint(), layout.to_vec()).expect("Ginibre state is valid")
}

/// Random normalized single-qubit amplitudes `(alpha, beta)`.
pub fn qubit_amplitudes<R: Rng + ?Sized>(rng: &mut R) -> (C64, C64) {
    let psi = pure_state(&[2], rng);
    (psi.amplitude(0), psi.amplitude(1))
}
