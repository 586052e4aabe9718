//! Benchmarkable gate sets and the twirl condition
//! `Σᵢ Uᵢ† P_j Uᵢ = |G|·I` for `j = o`, `0` otherwise.

pub mod clifford;

use std::collections::HashSet;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::paulis::{enumerate_paulis, enumerate_register, pauli_matrix, register_dim, PauliLabel};
use crate::qlinalg::{kernel, ComplexMatrix, Unitary, C_ONE, C_ZERO};

pub use clifford::{conjugate_pauli, is_clifford_phase, phase_fingerprint, PauliImage, CLOSURE_CAP};

/// Largest gate set (or label set) any constructor will build.
pub const SET_CAP: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Pauli,
    Clifford,
    ControlledPauli,
    MsDressed,
    UDressed,
    Custom,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Family::Pauli => "pauli",
            Family::Clifford => "clifford",
            Family::ControlledPauli => "controlled",
            Family::MsDressed => "ms",
            Family::UDressed => "dressed",
            Family::Custom => "custom",
        };
        f.write_str(name)
    }
}

/// An ordered, immutable list of unitaries on a qudit register.
#[derive(Clone, Debug)]
pub struct GateSet {
    dims: Vec<usize>,
    family: Family,
    elements: Vec<Unitary>,
    labels: Vec<String>,
}

impl GateSet {
    fn from_parts(dims: Vec<usize>, family: Family, elements: Vec<Unitary>, labels: Vec<String>) -> Self {
        debug_assert_eq!(elements.len(), labels.len());
        Self {
            dims,
            family,
            elements,
            labels,
        }
    }

    /// A user-supplied set; elements must be unitary and distinct up to phase.
    pub fn custom(dims: &[usize], elements: Vec<ComplexMatrix>) -> Result<Self> {
        if elements.is_empty() {
            return Err(invalid("gate set needs at least one element"));
        }
        let dim = register_dim(dims);
        let mut seen = HashSet::new();
        let mut unitaries = Vec::with_capacity(elements.len());
        for (i, m) in elements.into_iter().enumerate() {
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "element {i} is {}x{}, register dimension is {dim}",
                    m.rows(),
                    m.cols()
                )));
            }
            if !seen.insert(phase_fingerprint(&m)) {
                return Err(invalid(format!("element {i} duplicates an earlier one up to phase")));
            }
            unitaries.push(Unitary::new(m)?);
        }
        let labels = (0..unitaries.len()).map(|i| format!("U{i}")).collect();
        Ok(Self::from_parts(dims.to_vec(), Family::Custom, unitaries, labels))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Common qudit dimension, or `None` for a mixed register.
    pub fn d(&self) -> Option<usize> {
        let d = self.dims[0];
        self.dims.iter().all(|&e| e == d).then_some(d)
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    /// Hilbert space dimension of the register.
    pub fn dim(&self) -> usize {
        register_dim(&self.dims)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Unitary] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> Result<&Unitary> {
        self.elements.get(i).ok_or_else(|| {
            invalid(format!("element index {i} out of range for a set of {}", self.len()))
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Whether the set is closed under multiplication up to phase.
    pub fn is_group(&self) -> bool {
        matches!(self.family, Family::Pauli | Family::Clifford)
    }
}

/// All `d^{2n}` Pauli operators `X^x Z^z`.
pub fn build_pauli_set(d: usize, n: usize) -> Result<GateSet> {
    let labels = enumerate_register(&vec![d; n], SET_CAP)?;
    let elements = labels.iter().map(pauli_matrix).collect();
    let names = labels.iter().map(|l| l.to_string()).collect();
    Ok(GateSet::from_parts(vec![d; n], Family::Pauli, elements, names))
}

/// The Clifford group on one of the supported registers (2,1), (2,2), (3,1).
pub fn build_clifford_set(d: usize, n: usize) -> Result<GateSet> {
    let gens = clifford::generators(d, n)?;
    let (elements, labels) = clifford::closure(&gens, CLOSURE_CAP)?;
    Ok(GateSet::from_parts(vec![d; n], Family::Clifford, elements, labels))
}

/// `(P_i ⊗ I)(|0><0| ⊗ P_r + |1><1| ⊗ P_s)` with a qubit control and a
/// target qudit of dimension `d`; `4·d⁴` elements.
pub fn build_controlled_set(d: usize) -> Result<GateSet> {
    build_multi_controlled_set(1, d)
}

/// The two-control family containing the Toffoli gate (target qubit).
pub fn build_toffoli_set() -> Result<GateSet> {
    build_multi_controlled_set(2, 2)
}

/// `(P_c ⊗ I) Σ_b |b><b| ⊗ P_{t_b}` over `controls` qubits and one qudit
/// target, with independent target Paulis for each control basis state.
pub fn build_multi_controlled_set(controls: usize, d: usize) -> Result<GateSet> {
    if controls == 0 {
        return Err(invalid("controlled set needs at least one control qubit"));
    }
    let branches = 1usize << controls;
    let control_labels = enumerate_paulis(2, controls)?;
    let target_labels = enumerate_register(&[d], SET_CAP)?;
    let total = (target_labels.len() as f64).powi(branches as i32) * control_labels.len() as f64;
    if total > SET_CAP as f64 {
        return Err(Error::CapExceeded {
            what: "controlled gate set",
            size: total as usize,
            cap: SET_CAP,
        });
    }
    let target_mats: Vec<Unitary> = target_labels.iter().map(pauli_matrix).collect();
    let tid = ComplexMatrix::identity(d);
    let mut elements = Vec::with_capacity(total as usize);
    let mut labels = Vec::with_capacity(total as usize);
    for c in &control_labels {
        let dressing = pauli_matrix(c).matrix().kron(&tid);
        let mut choice = vec![0usize; branches];
        loop {
            let mut block = ComplexMatrix::zeros(branches * d, branches * d);
            for (b, &t) in choice.iter().enumerate() {
                for r in 0..d {
                    for col in 0..d {
                        block[(b * d + r, b * d + col)] = target_mats[t][(r, col)];
                    }
                }
            }
            elements.push(Unitary::new_unchecked(&dressing * &block));
            let targets: Vec<String> = choice.iter().map(|&t| target_labels[t].to_string()).collect();
            labels.push(format!("c[{c}] t[{}]", targets.join(" | ")));
            // odometer over branch choices, last branch fastest
            let mut pos = branches;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                choice[pos] += 1;
                if choice[pos] < target_mats.len() {
                    break;
                }
                choice[pos] = 0;
            }
            if choice.iter().all(|&t| t == 0) {
                break;
            }
        }
    }
    let mut dims = vec![2; controls];
    dims.push(d);
    Ok(GateSet::from_parts(dims, Family::ControlledPauli, elements, labels))
}

/// `Π_{s<r} exp(iθ X_s X_r)` on `n` qubits, pairs taken in lexicographic order.
pub fn ms_unitary(n: usize, theta: f64) -> Result<Unitary> {
    if n < 2 {
        return Err(invalid("Mølmer–Sørensen gate needs at least two qubits"));
    }
    let dim = 1usize << n;
    let (c, s) = (theta.cos(), theta.sin());
    let mut acc = ComplexMatrix::identity(dim);
    for a in 0..n {
        for b in a + 1..n {
            let mut x = vec![0; n];
            x[a] = 1;
            x[b] = 1;
            let xx = pauli_matrix(&PauliLabel::new(2, x, vec![0; n])?);
            let factor = &ComplexMatrix::identity(dim).scale(Complex64::new(c, 0.0))
                + &xx.scale(Complex64::new(0.0, s));
            acc = &factor * &acc;
        }
    }
    Ok(Unitary::new_unchecked(acc))
}

/// `P_i · U_n(θ)` for all `4^n` qubit Paulis.
pub fn build_ms_dressed_set(n: usize, theta: f64) -> Result<GateSet> {
    let u = ms_unitary(n, theta)?;
    let mut set = dress(&u, 2, n)?;
    set.family = Family::MsDressed;
    Ok(set)
}

/// `P_i · U` for all `d^{2n}` Paulis and a fixed unitary `U`.
pub fn build_dressed_set(u: &ComplexMatrix, d: usize, n: usize) -> Result<GateSet> {
    let dim = register_dim(&vec![d; n]);
    if u.rows() != dim || u.cols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "dressing unitary is {}x{}, register dimension is {dim}",
            u.rows(),
            u.cols()
        )));
    }
    dress(&Unitary::new(u.clone())?, d, n)
}

fn dress(u: &Unitary, d: usize, n: usize) -> Result<GateSet> {
    let labels = enumerate_register(&vec![d; n], SET_CAP)?;
    let elements = labels.iter().map(|l| &pauli_matrix(l) * u).collect();
    let names = labels.iter().map(|l| format!("{l}·U")).collect();
    Ok(GateSet::from_parts(vec![d; n], Family::UDressed, elements, names))
}

/// Outcome of the twirl-condition check.
#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub passed: bool,
    pub worst_label: PauliLabel,
    pub worst_residual: f64,
    pub tolerance: f64,
}

/// Evaluates `Σᵢ Uᵢ† P_j Uᵢ` for every Pauli `P_j` on the set's register.
pub fn check_condition(set: &GateSet) -> Result<ConditionReport> {
    check_condition_with(set, 1e-8 * set.len() as f64)
}

pub fn check_condition_with(set: &GateSet, tolerance: f64) -> Result<ConditionReport> {
    let labels = enumerate_register(set.dims(), SET_CAP)?;
    let dim = set.dim();
    let size = set.len() as f64;
    let daggers: Vec<ComplexMatrix> = set.elements.iter().map(|u| u.dagger()).collect();
    let residuals: Vec<f64> = labels
        .par_iter()
        .map(|label| {
            let (perm, phase) = label.monomial();
            let mut sum = vec![C_ZERO; dim * dim];
            let mut pu = vec![C_ZERO; dim * dim];
            let mut term = vec![C_ZERO; dim * dim];
            for (u, ud) in set.elements.iter().zip(&daggers) {
                // rows of P·U are phased, permuted rows of U
                for (s, (&t, &ph)) in perm.iter().zip(&phase).enumerate() {
                    for c in 0..dim {
                        pu[t * dim + c] = ph * u.as_slice()[s * dim + c];
                    }
                }
                term.iter_mut().for_each(|z| *z = C_ZERO);
                kernel::mul_into(ud.as_slice(), &pu, &mut term, dim);
                sum.iter_mut().zip(&term).for_each(|(a, b)| *a += b);
            }
            if label.is_identity() {
                for r in 0..dim {
                    sum[r * dim + r] -= C_ONE * size;
                }
            }
            sum.iter().map(|z| z.norm()).fold(0.0, f64::max)
        })
        .collect();
    let (worst, &worst_residual) = residuals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("register has at least one label");
    Ok(ConditionReport {
        passed: worst_residual <= tolerance,
        worst_label: labels[worst].clone(),
        worst_residual,
        tolerance,
    })
}

/// Product `U_{s_m} ⋯ U_{s_1}` of a sequence of element indices.
pub fn sequence_product(seq: &[usize], set: &GateSet) -> Result<ComplexMatrix> {
    let mut acc = ComplexMatrix::identity(set.dim());
    for &i in seq {
        acc = set.element(i)?.matrix() * &acc;
    }
    Ok(acc)
}

/// `(U_{s_m} ⋯ U_{s_1})†`, the gate that undoes the sequence.
pub fn sequence_inverse(seq: &[usize], set: &GateSet) -> Result<ComplexMatrix> {
    if seq.is_empty() {
        return Err(invalid("sequence_inverse needs a nonempty sequence"));
    }
    Ok(sequence_product(seq, set)?.dagger())
}

/// Checks that every element maps every Pauli to a Pauli times a `2d`-th
/// root of unity; returns the largest residual found.
pub fn normalizer_residual(set: &GateSet) -> Result<f64> {
    let d = set
        .d()
        .ok_or_else(|| Error::Unsupported("normalizer check on a mixed register".into()))?;
    let labels = enumerate_paulis(d, set.n())?;
    let worst = set
        .elements
        .par_iter()
        .map(|c| {
            labels
                .iter()
                .map(|p| {
                    let img = conjugate_pauli(c, p);
                    if is_clifford_phase(img.phase, d, 1e-10) {
                        img.residual
                    } else {
                        f64::INFINITY
                    }
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::random::haar_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn pauli_sets() {
        let p = build_pauli_set(2, 1).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.labels(), ["x:0;z:0", "x:0;z:1", "x:1;z:0", "x:1;z:1"]);
        assert_eq!(build_pauli_set(2, 2).unwrap().len(), 16);
        let q = build_pauli_set(3, 1).unwrap();
        assert_eq!(q.len(), 9);
        assert!(q.elements().iter().all(|u| u.unitarity_residual() < 1e-10));
        assert!(check_condition(&p).unwrap().passed);
        assert!(check_condition(&q).unwrap().passed);
        assert!(matches!(build_pauli_set(2, 9), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn clifford_sizes_and_condition() {
        let c1 = build_clifford_set(2, 1).unwrap();
        assert_eq!(c1.len(), 24);
        assert!(check_condition(&c1).unwrap().passed);
        assert!(normalizer_residual(&c1).unwrap() < 1e-10);
        let c3 = build_clifford_set(3, 1).unwrap();
        assert_eq!(c3.len(), 216);
        assert!(check_condition(&c3).unwrap().passed);
        assert!(normalizer_residual(&c3).unwrap() < 1e-10);
        assert!(matches!(build_clifford_set(5, 1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn two_qubit_clifford_group() {
        let c = build_clifford_set(2, 2).unwrap();
        assert_eq!(c.len(), 11520);
        assert!(check_condition(&c).unwrap().passed);
        assert!(normalizer_residual(&c).unwrap() < 1e-10);
    }

    #[test]
    fn controlled_set_contains_cnot_and_passes() {
        let set = build_controlled_set(2).unwrap();
        assert_eq!(set.len(), 64);
        assert_eq!(set.dims(), &[2, 2]);
        let cnot = ComplexMatrix::from_real_rows(&[
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        assert!(set.elements().iter().any(|u| u.max_abs_diff(&cnot) < 1e-15));
        assert!(check_condition(&set).unwrap().passed);
        let qutrit = build_controlled_set(3).unwrap();
        assert_eq!(qutrit.len(), 4 * 81);
        assert_eq!(qutrit.dims(), &[2, 3]);
        assert!(check_condition(&qutrit).unwrap().passed);
    }

    #[test]
    fn toffoli_family() {
        let set = build_toffoli_set().unwrap();
        assert_eq!(set.len(), 16 * 256);
        let mut toffoli = ComplexMatrix::identity(8);
        toffoli[(6, 6)] = C_ZERO;
        toffoli[(7, 7)] = C_ZERO;
        toffoli[(6, 7)] = C_ONE;
        toffoli[(7, 6)] = C_ONE;
        assert!(set.elements().iter().any(|u| u.max_abs_diff(&toffoli) < 1e-15));
        assert!(check_condition(&set).unwrap().passed);
    }

    #[test]
    fn ms_sets() {
        let zero = build_ms_dressed_set(2, 0.0).unwrap();
        let pauli = build_pauli_set(2, 2).unwrap();
        for (a, b) in zero.elements().iter().zip(pauli.elements()) {
            assert!(a.max_abs_diff(b) < 1e-15);
        }
        for theta in [PI / 4.0, PI / 7.0] {
            let set = build_ms_dressed_set(2, theta).unwrap();
            assert_eq!(set.len(), 16);
            assert!(check_condition(&set).unwrap().passed);
        }
        assert!(check_condition(&build_ms_dressed_set(3, 0.3).unwrap()).unwrap().passed);
        assert!(build_ms_dressed_set(1, 0.3).is_err());
    }

    #[test]
    fn dressed_sets() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = ComplexMatrix::from_real_rows(&[[s, s], [s, -s]]).unwrap();
        let set = build_dressed_set(&h, 2, 1).unwrap();
        assert_eq!(set.len(), 4);
        let z = pauli_matrix(&PauliLabel::new(2, vec![0], vec![1]).unwrap());
        assert!(set.elements()[1].max_abs_diff(&(z.matrix() * &h)) < 1e-15);
        assert!(check_condition(&set).unwrap().passed);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let u = haar_unitary(4, &mut rng);
            let report = check_condition(&build_dressed_set(&u, 2, 2).unwrap()).unwrap();
            assert!(report.passed && report.worst_residual < 1e-9);
        }
        let bad = ComplexMatrix::from_real_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(build_dressed_set(&bad, 2, 1), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn custom_set_failures() {
        let z = pauli_matrix(&PauliLabel::new(2, vec![0], vec![1]).unwrap()).into_inner();
        let set = GateSet::custom(&[2], vec![ComplexMatrix::identity(2), z.clone()]).unwrap();
        let report = check_condition(&set).unwrap();
        assert!(!report.passed);
        assert_eq!(report.worst_label.to_string(), "x:0;z:1");
        assert!((report.worst_residual - 2.0).abs() < 1e-12);
        let dup = GateSet::custom(&[2], vec![z.clone(), z.scale(Complex64::new(0.0, 1.0))]);
        assert!(dup.is_err());
        assert!(GateSet::custom(&[2], vec![]).is_err());
    }

    #[test]
    fn random_singletons_fail() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let u = haar_unitary(2, &mut rng).into_inner();
            let report = check_condition(&GateSet::custom(&[2], vec![u]).unwrap()).unwrap();
            assert!(!report.passed && report.worst_residual > 0.1);
        }
    }

    #[test]
    fn inverses() {
        let p = build_pauli_set(2, 1).unwrap();
        let inv = sequence_inverse(&[2], &p).unwrap();
        assert!(inv.max_abs_diff(p.elements()[2].matrix()) < 1e-15);
        assert!(sequence_inverse(&[], &p).is_err());
        assert!(sequence_inverse(&[9], &p).is_err());

        let c = build_clifford_set(2, 1).unwrap();
        let s = c.labels().iter().position(|l| l == "S").unwrap();
        let inv = sequence_inverse(&[s, s], &c).unwrap();
        let round = &inv * &sequence_product(&[s, s], &c).unwrap();
        assert!(round.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        use rand::Rng;
        let seq: Vec<usize> = (0..10).map(|_| rng.random_range(0..c.len())).collect();
        let round = &sequence_inverse(&seq, &c).unwrap() * &sequence_product(&seq, &c).unwrap();
        assert!(round.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-11);
    }
}
