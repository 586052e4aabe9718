//! Haar-random unitaries, states and channels.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::{ComplexMatrix, Unitary};

fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Orthonormal columns from a QR factorization, with the phases of `R`'s
/// diagonal pushed into `Q` so the result is Haar distributed.
fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex64> {
    let qr = ginibre(rows, cols, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..cols {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for row in 0..rows {
            q[(row, c)] *= phase;
        }
    }
    q
}

pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Unitary {
    Unitary::new_unchecked(ComplexMatrix::from_nalgebra(&haar_isometry(dim, dim, rng)))
}

/// Uniformly random pure state vector.
pub fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    let g = ginibre(dim, 1, rng);
    let norm = g.norm();
    g.iter().map(|z| z / norm).collect()
}

/// A random channel with `rank` Kraus operators, cut from a Haar isometry.
pub fn random_kraus<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Vec<ComplexMatrix> {
    let v = haar_isometry(dim * rank, dim, rng);
    (0..rank)
        .map(|s| ComplexMatrix::from_fn(dim, dim, |r, c| v[(s * dim + r, c)]))
        .collect()
}

/// A random full-rank density matrix `G G† / tr(G G†)`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_nalgebra(&ginibre(dim, dim, rng));
    let m = &g * &g.dagger();
    let tr = m.trace().re;
    m.scale_real(1.0 / tr)
}
