use num_complex::Complex64;

use super::matrix::{ComplexMatrix, Unitary, C_ONE, C_ZERO};
use crate::error::{Error, Result};
use crate::tolerance::TOLERANCES;

/// A validated density operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidState("not square".into()));
        }
        let tol = TOLERANCES.structural;
        if !matrix.is_hermitian(tol) {
            return Err(Error::InvalidState("not Hermitian".into()));
        }
        let tr = matrix.trace();
        if (tr - C_ONE).norm() > tol {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let (vals, _) = matrix.hermitian_eigen();
        if vals[0] < -TOLERANCES.positivity {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:.3e}",
                vals[0]
            )));
        }
        Ok(Self { matrix })
    }

    pub(crate) fn new_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    /// `|ψ><ψ|` for a normalized state vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if psi.is_empty() || (norm - 1.0).abs() > TOLERANCES.structural {
            return Err(Error::InvalidState(format!("state norm² {norm} is not 1")));
        }
        Ok(Self::new_unchecked(ComplexMatrix::outer(psi, psi)))
    }

    /// Computational basis projector `|index><index|`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(index, index)] = C_ONE;
        Self::new_unchecked(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::new_unchecked(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn conjugate(&self, u: &Unitary) -> Self {
        Self::new_unchecked(&(u.matrix() * &self.matrix) * &u.dagger())
    }

    /// If the state is pure, a representative state vector.
    pub fn pure_vector(&self) -> Result<Vec<Complex64>> {
        if (self.purity() - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidState(format!(
                "state is mixed (purity {:.6})",
                self.purity()
            )));
        }
        let n = self.dim();
        // ρ = |φ><φ|, so its heaviest column is φ·conj(φ_c)
        let col = (0..n)
            .max_by(|&a, &b| self.matrix[(a, a)].re.total_cmp(&self.matrix[(b, b)].re))
            .unwrap_or(0);
        let v: Vec<Complex64> = (0..n).map(|r| self.matrix[(r, col)]).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        Ok(v.into_iter().map(|z| z / norm).collect())
    }
}

/// `k` branch unitaries selected by a `k`-level control register.
#[derive(Clone, Debug)]
pub struct ControlledUnitary {
    branches: Vec<Unitary>,
}

impl ControlledUnitary {
    pub fn new(branches: Vec<Unitary>) -> Result<Self> {
        let Some(first) = branches.first() else {
            return Err(Error::InvalidArgument("controlled unitary needs k >= 1".into()));
        };
        let dim = first.rows();
        if let Some(bad) = branches.iter().find(|u| u.rows() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "branch of dimension {} among branches of dimension {dim}",
                bad.rows()
            )));
        }
        Ok(Self { branches })
    }

    pub fn k(&self) -> usize {
        self.branches.len()
    }

    pub fn target_dim(&self) -> usize {
        self.branches[0].rows()
    }

    pub fn branches(&self) -> &[Unitary] {
        &self.branches
    }

    pub fn materialize(&self) -> Unitary {
        materialize_controlled(self)
    }
}

/// `Σᵢ |i><i| ⊗ Uᵢ` with the control as the high-order factor.
pub fn materialize_controlled(cu: &ControlledUnitary) -> Unitary {
    let d = cu.target_dim();
    let dim = cu.k() * d;
    let mut m = ComplexMatrix::zeros(dim, dim);
    for (i, u) in cu.branches.iter().enumerate() {
        for r in 0..d {
            for c in 0..d {
                m[(i * d + r, i * d + c)] = u[(r, c)];
            }
        }
    }
    Unitary::new_unchecked(m)
}

/// `‖Σ K†K − I‖_max` for a Kraus list.
pub fn kraus_residual(kraus: &[ComplexMatrix]) -> f64 {
    let Some(first) = kraus.first() else {
        return f64::INFINITY;
    };
    let dim = first.cols();
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for k in kraus {
        if k.cols() != dim || k.rows() != dim {
            return f64::INFINITY;
        }
        acc = &acc + &(&k.dagger() * k);
    }
    acc.max_abs_diff(&ComplexMatrix::identity(dim))
}

/// `Σ_s K_s ρ K_s†`.
pub fn apply_channel(rho: &DensityMatrix, kraus: &[ComplexMatrix]) -> Result<DensityMatrix> {
    let residual = kraus_residual(kraus);
    if residual.is_infinite() || kraus[0].rows() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Kraus operators do not act on a {}-dimensional state",
            rho.dim()
        )));
    }
    if residual > TOLERANCES.channel {
        return Err(Error::NotTracePreserving { residual });
    }
    Ok(DensityMatrix::new_unchecked(apply_kraus(rho.matrix(), kraus)))
}

/// Unchecked Kraus action on an arbitrary operator.
pub(crate) fn apply_kraus(m: &ComplexMatrix, kraus: &[ComplexMatrix]) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(m.rows(), m.cols());
    for k in kraus {
        out = &out + &(&(k * m) * &k.dagger());
    }
    out
}

/// `tr(E ρ)` for an effect `0 ≼ E ≼ I`.
pub fn povm_expectation(rho: &DensityMatrix, effect: &ComplexMatrix) -> Result<f64> {
    if effect.rows() != rho.dim() || !effect.is_square() {
        return Err(Error::DimensionMismatch("effect and state differ in dimension".into()));
    }
    if !effect.is_hermitian(TOLERANCES.structural) {
        return Err(Error::InvalidEffect("not Hermitian".into()));
    }
    let (vals, _) = effect.hermitian_eigen();
    let tol = TOLERANCES.positivity;
    if vals[0] < -tol || vals[vals.len() - 1] > 1.0 + tol {
        return Err(Error::InvalidEffect(format!(
            "spectrum [{:.3e}, {:.3e}]",
            vals[0],
            vals[vals.len() - 1]
        )));
    }
    let value = (effect * rho.matrix()).trace().re;
    Ok(if value < 0.0 && value > -tol {
        0.0
    } else if value > 1.0 && value < 1.0 + tol {
        1.0
    } else {
        value
    })
}

/// `|+>` on a `k`-level register.
pub fn plus_state(k: usize) -> Vec<Complex64> {
    vec![Complex64::new(1.0 / (k as f64).sqrt(), 0.0); k]
}

/// `|index>` in dimension `dim`.
pub fn basis_vector(dim: usize, index: usize) -> Vec<Complex64> {
    let mut v = vec![C_ZERO; dim];
    v[index] = C_ONE;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap()
    }

    fn z() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[[1.0, 0.0], [0.0, -1.0]]).unwrap()
    }

    #[test]
    fn trivial_control_is_the_branch_itself() {
        let u = Unitary::new(x()).unwrap();
        let cu = ControlledUnitary::new(vec![u.clone()]).unwrap();
        assert_eq!(cu.materialize().matrix(), u.matrix());
    }

    #[test]
    fn two_branch_identity_x_is_cnot() {
        let cu = ControlledUnitary::new(vec![Unitary::identity(2), Unitary::new(x()).unwrap()])
            .unwrap();
        let cnot = ComplexMatrix::from_real_rows(&[
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        assert_eq!(cu.materialize().matrix(), &cnot);
    }

    #[test]
    fn four_branch_pauli_control_is_unitary() {
        let xz = &x() * &z();
        let branches = [ComplexMatrix::identity(2), x(), z(), xz]
            .into_iter()
            .map(|m| Unitary::new(m).unwrap())
            .collect();
        let m = ControlledUnitary::new(branches).unwrap().materialize();
        assert_eq!(m.rows(), 8);
        assert!(m.unitarity_residual() < 1e-12);
        // off-diagonal blocks vanish
        assert_eq!(m[(0, 2)], C_ZERO);
        assert_eq!(m[(7, 1)], C_ZERO);
    }

    #[test]
    fn mismatched_branches_rejected() {
        let err = ControlledUnitary::new(vec![Unitary::identity(2), Unitary::identity(3)]);
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
        assert!(ControlledUnitary::new(vec![]).is_err());
    }

    #[test]
    fn identity_channel_is_identity() {
        let rho = DensityMatrix::pure(&plus_state(2)).unwrap();
        let out = apply_channel(&rho, &[ComplexMatrix::identity(2)]).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn half_dephasing_kills_coherences() {
        // {√(1−p) I, √p Z} scales coherences by 1 − 2p
        let p: f64 = 0.5;
        let kraus = [
            ComplexMatrix::identity(2).scale_real((1.0 - p).sqrt()),
            z().scale_real(p.sqrt()),
        ];
        let rho = DensityMatrix::pure(&plus_state(2)).unwrap();
        let out = apply_channel(&rho, &kraus).unwrap();
        assert!(out.matrix().max_abs_diff(DensityMatrix::maximally_mixed(2).matrix()) < 1e-15);
    }

    #[test]
    fn non_trace_preserving_rejected() {
        let rho = DensityMatrix::maximally_mixed(2);
        let kraus = [ComplexMatrix::identity(2).scale_real(0.9)];
        assert!(matches!(
            apply_channel(&rho, &kraus),
            Err(Error::NotTracePreserving { .. })
        ));
    }

    #[test]
    fn povm_values() {
        let plus = plus_state(2);
        let rho = DensityMatrix::pure(&plus).unwrap();
        let e = ComplexMatrix::outer(&plus, &plus);
        assert!((povm_expectation(&rho, &e).unwrap() - 1.0).abs() < 1e-15);
        let zero = basis_vector(2, 0);
        let e0 = ComplexMatrix::outer(&zero, &zero);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_eq!(povm_expectation(&mixed, &e0).unwrap(), 0.5);
        let too_big = ComplexMatrix::identity(2).scale_real(1.5);
        assert!(matches!(
            povm_expectation(&mixed, &too_big),
            Err(Error::InvalidEffect(_))
        ));
    }

    #[test]
    fn coherent_initial_state_has_unit_overlap_with_probe() {
        // |+>⟨+| ⊗ |0⟩⟨0| measured with the same projector at m = 0
        let k = 4;
        let psi: Vec<Complex64> = {
            let c = plus_state(k);
            let t = basis_vector(2, 0);
            c.iter().flat_map(|a| t.iter().map(move |b| a * b)).collect()
        };
        let rho = DensityMatrix::pure(&psi).unwrap();
        let e = ComplexMatrix::outer(&psi, &psi);
        assert!((povm_expectation(&rho, &e).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_validation() {
        let bad = ComplexMatrix::diag(&[Complex64::new(1.2, 0.0), Complex64::new(-0.2, 0.0)]);
        assert!(DensityMatrix::new(bad).is_err());
        let ok = DensityMatrix::new(DensityMatrix::maximally_mixed(3).into_matrix()).unwrap();
        assert_eq!(ok.dim(), 3);
        assert!(ok.pure_vector().is_err());
    }
}
