//! Clifford groups by breadth-first closure of a generator set.

use std::collections::{HashSet, VecDeque};
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::paulis::{enumerate_paulis, pauli_matrix, root_of_unity, PauliLabel};
use crate::qlinalg::{ComplexMatrix, Unitary, C_ONE};

/// Products evaluated before a closure is abandoned.
pub const CLOSURE_CAP: usize = 200_000;

const FINGERPRINT_SCALE: f64 = 1e8;

/// Phase-insensitive key of a matrix: divide by its first non-negligible
/// entry and round every component on a 1e-8 grid.
pub fn phase_fingerprint(m: &ComplexMatrix) -> Vec<i64> {
    let pivot = m
        .as_slice()
        .iter()
        .find(|z| z.norm() > 1e-6)
        .copied()
        .unwrap_or(C_ONE);
    let inv = pivot.inv();
    m.as_slice()
        .iter()
        .flat_map(|&z| {
            let w = z * inv;
            [
                (w.re * FINGERPRINT_SCALE).round() as i64,
                (w.im * FINGERPRINT_SCALE).round() as i64,
            ]
        })
        .collect()
}

/// Rotates the global phase so the first non-negligible entry is real positive.
pub(crate) fn canonical_phase(m: &ComplexMatrix) -> ComplexMatrix {
    match m.as_slice().iter().find(|z| z.norm() > 1e-6) {
        Some(p) => m.scale(p.conj() / p.norm()),
        None => m.clone(),
    }
}

pub(crate) fn generators(d: usize, n: usize) -> Result<Vec<(String, Unitary)>> {
    let h = ComplexMatrix::from_real_rows(&[
        [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
        [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
    ])?;
    let s = ComplexMatrix::diag(&[C_ONE, Complex64::new(0.0, 1.0)]);
    let id2 = ComplexMatrix::identity(2);
    let gens = match (d, n) {
        (2, 1) => vec![("H".to_string(), h), ("S".to_string(), s)],
        (2, 2) => {
            let cz = ComplexMatrix::diag(&[C_ONE, C_ONE, C_ONE, -C_ONE]);
            vec![
                ("H0".to_string(), h.kron(&id2)),
                ("H1".to_string(), id2.kron(&h)),
                ("S0".to_string(), s.kron(&id2)),
                ("S1".to_string(), id2.kron(&s)),
                ("CZ".to_string(), cz),
            ]
        }
        (3, 1) => {
            let norm = 1.0 / 3f64.sqrt();
            let f = ComplexMatrix::from_fn(3, 3, |r, c| root_of_unity(3, r * c) * norm);
            let s3 = ComplexMatrix::diag(&[C_ONE, C_ONE, root_of_unity(3, 1)]);
            vec![("F".to_string(), f), ("S".to_string(), s3)]
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "Clifford group for d={d}, n={n}; supported: (2,1), (2,2), (3,1)"
            )))
        }
    };
    gens.into_iter()
        .map(|(name, m)| Ok((name, Unitary::new(m)?)))
        .collect()
}

/// Closure of `gens` under left multiplication, deduplicated modulo phase.
/// Elements are returned in discovery order with the identity first; each
/// label is the generator word that produced it (rightmost applied first).
pub fn closure(
    gens: &[(String, Unitary)],
    cap: usize,
) -> Result<(Vec<Unitary>, Vec<String>)> {
    let dim = gens[0].1.rows();
    let identity = ComplexMatrix::identity(dim);
    let mut seen = HashSet::new();
    seen.insert(phase_fingerprint(&identity));
    let mut elements = vec![Unitary::new_unchecked(identity)];
    let mut labels = vec!["I".to_string()];
    let mut queue = VecDeque::from([0usize]);
    let mut products = 0usize;
    while let Some(idx) = queue.pop_front() {
        for (name, g) in gens {
            products += 1;
            if products > cap {
                return Err(Error::CapExceeded {
                    what: "Clifford closure products",
                    size: products,
                    cap,
                });
            }
            let candidate = canonical_phase(&(g.matrix() * elements[idx].matrix()));
            if seen.insert(phase_fingerprint(&candidate)) {
                let label = if labels[idx] == "I" {
                    name.clone()
                } else {
                    format!("{name}.{}", labels[idx])
                };
                elements.push(Unitary::new_unchecked(candidate));
                labels.push(label);
                queue.push_back(elements.len() - 1);
            }
        }
    }
    Ok((elements, labels))
}

/// Result of conjugating one Pauli by a candidate normalizer element.
#[derive(Clone, Debug)]
pub struct PauliImage {
    pub label: PauliLabel,
    pub phase: Complex64,
    pub residual: f64,
}

/// Finds `P'` and `λ` with `C P C† ≈ λ P'`, reporting the max-norm residual.
pub fn conjugate_pauli(c: &Unitary, p: &PauliLabel) -> PauliImage {
    let dims = p.dims().to_vec();
    let dim = c.rows();
    let image = &(c.matrix() * pauli_matrix(p).matrix()) * &c.dagger();
    let candidates = enumerate_paulis(dims[0], dims.len()).expect("register already validated");
    let (best, coeff) = candidates
        .into_iter()
        .map(|l| {
            let t = l.trace_against(&image) / dim as f64;
            (l, t)
        })
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("at least one label");
    let rebuilt = pauli_matrix(&best).scale(coeff);
    PauliImage {
        residual: image.max_abs_diff(&rebuilt),
        label: best,
        phase: coeff,
    }
}

/// Whether `phase` is a `2d`-th root of unity within `tol`.
pub fn is_clifford_phase(phase: Complex64, d: usize, tol: f64) -> bool {
    (0..2 * d).any(|k| (phase - root_of_unity(2 * d, k)).norm() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_ignores_global_phase() {
        let h = &generators(2, 1).unwrap()[0].1;
        let rotated = h.scale(Complex64::from_polar(1.0, 0.37));
        assert_eq!(phase_fingerprint(h), phase_fingerprint(&rotated));
        let s = &generators(2, 1).unwrap()[1].1;
        assert_ne!(phase_fingerprint(h), phase_fingerprint(s));
    }

    #[test]
    fn unsupported_groups_rejected() {
        assert!(matches!(generators(5, 1), Err(Error::Unsupported(_))));
        assert!(matches!(generators(2, 3), Err(Error::Unsupported(_))));
    }

    #[test]
    fn closure_respects_cap() {
        let gens = generators(2, 2).unwrap();
        assert!(matches!(
            closure(&gens, 100),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn hadamard_swaps_x_and_z() {
        let h = &generators(2, 1).unwrap()[0].1;
        let x = PauliLabel::new(2, vec![1], vec![0]).unwrap();
        let img = conjugate_pauli(h, &x);
        assert_eq!(img.label.to_string(), "x:0;z:1");
        assert!(img.residual < 1e-12);
        assert!((img.phase - C_ONE).norm() < 1e-12);
    }
}
