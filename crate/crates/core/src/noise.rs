//! Quantum channels, their process (χ) matrices in the Pauli basis, and the
//! noise model used by the simulation engines.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::gatesets::GateSet;
use crate::paulis::{enumerate_register, pauli_matrix, register_dim, root_of_unity, PauliLabel};
use crate::qlinalg::{apply_kraus, kraus_residual, ComplexMatrix, DensityMatrix, Unitary, C_ZERO};

/// Largest χ matrix built (labels per side).
pub const CHI_LABEL_CAP: usize = 256;

/// A completely positive trace-preserving map in Kraus form.
#[derive(Clone, Debug)]
pub struct Channel {
    dims: Vec<usize>,
    kraus: Vec<ComplexMatrix>,
}

impl Channel {
    pub fn identity(dims: &[usize]) -> Self {
        Self {
            dims: dims.to_vec(),
            kraus: vec![ComplexMatrix::identity(register_dim(dims))],
        }
    }

    /// Validates shapes and trace preservation (within 1e-8).
    pub fn from_kraus(dims: &[usize], kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = register_dim(dims);
        if kraus.is_empty() {
            return Err(invalid("Kraus list is empty"));
        }
        if let Some(k) = kraus.iter().find(|k| k.rows() != dim || k.cols() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operator is {}x{}, register dimension is {dim}",
                k.rows(),
                k.cols()
            )));
        }
        let residual = kraus_residual(&kraus);
        if residual > 1e-8 {
            return Err(Error::NotTracePreserving { residual });
        }
        Ok(Self {
            dims: dims.to_vec(),
            kraus,
        })
    }

    /// `{√(1−p) I, √(p/n) Z_s}`: each site dephased with total weight `p`.
    pub fn dephasing(dims: &[usize], p: f64) -> Result<Self> {
        check_probability(p, "dephasing p")?;
        let n = dims.len();
        let dim = register_dim(dims);
        let mut kraus = vec![ComplexMatrix::identity(dim).scale_real((1.0 - p).sqrt())];
        if p > 0.0 {
            for site in 0..n {
                let mut z = vec![0; n];
                z[site] = 1;
                let zs = pauli_matrix(&PauliLabel::on_register(dims, vec![0; n], z)?);
                kraus.push(zs.scale_real((p / n as f64).sqrt()));
            }
        }
        Self::from_kraus(dims, kraus)
    }

    /// `ρ ↦ (1−p)ρ + p·I/D`.
    pub fn depolarizing(dims: &[usize], p: f64) -> Result<Self> {
        check_probability(p, "depolarizing p")?;
        let labels = enumerate_register(dims, CHI_LABEL_CAP * CHI_LABEL_CAP)?;
        let dim = register_dim(dims) as f64;
        let weight = p / (dim * dim);
        let mut kraus = vec![ComplexMatrix::identity(dim as usize).scale_real((1.0 - p + weight).sqrt())];
        if p > 0.0 {
            kraus.extend(
                labels
                    .iter()
                    .skip(1)
                    .map(|l| pauli_matrix(l).scale_real(weight.sqrt())),
            );
        }
        Self::from_kraus(dims, kraus)
    }

    /// The unitary channel `ρ ↦ UρU†`.
    pub fn unitary(dims: &[usize], u: &Unitary) -> Result<Self> {
        Self::from_kraus(dims, vec![u.matrix().clone()])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        register_dim(&self.dims)
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// Whether the channel is the identity map (single Kraus operator ∝ I).
    pub fn is_identity(&self) -> bool {
        self.kraus.len() == 1 && {
            let k = &self.kraus[0];
            let phase = k[(0, 0)];
            k.max_abs_diff(&ComplexMatrix::identity(k.rows()).scale(phase)) < 1e-14
        }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state of dimension {} through a channel on dimension {}",
                rho.dim(),
                self.dim()
            )));
        }
        Ok(DensityMatrix::new_unchecked(self.apply_operator(rho.matrix())))
    }

    /// `Σ K M K†` on an arbitrary operator.
    pub fn apply_operator(&self, m: &ComplexMatrix) -> ComplexMatrix {
        apply_kraus(m, &self.kraus)
    }

    /// `next ∘ self`: apply `self`, then `next`.
    pub fn then(&self, next: &Channel) -> Result<Channel> {
        if next.dims != self.dims {
            return Err(Error::DimensionMismatch("composing channels on different registers".into()));
        }
        let kraus = next
            .kraus
            .iter()
            .flat_map(|b| self.kraus.iter().map(move |a| b * a))
            .collect();
        Self::from_kraus(&self.dims, kraus)
    }

    /// `ρ ↦ U† Λ(U ρ U†) U`, Kraus operators `U† K U`.
    pub fn conjugated(&self, u: &Unitary) -> Channel {
        let ud = u.dagger();
        Channel {
            dims: self.dims.clone(),
            kraus: self.kraus.iter().map(|k| &(&ud * k) * u.matrix()).collect(),
        }
    }

    pub fn chi(&self) -> Result<ChiMatrix> {
        kraus_to_chi(&self.kraus, &self.dims)
    }

    pub fn chi00(&self) -> f64 {
        chi00_of(&self.kraus)
    }
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(invalid(format!("{what} = {p} outside [0, 1]")));
    }
    Ok(())
}

/// Process matrix `χ_ij` with `Λ(ρ) = Σ χ_ij P_i ρ P_j†`, rows and columns
/// in the order of [`enumerate_register`] (identity first).
#[derive(Clone, Debug)]
pub struct ChiMatrix {
    dims: Vec<usize>,
    labels: Vec<PauliLabel>,
    entries: ComplexMatrix,
}

impl ChiMatrix {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[PauliLabel] {
        &self.labels
    }

    pub fn entries(&self) -> &ComplexMatrix {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[(i, j)]
    }

    pub fn chi00(&self) -> f64 {
        self.entries[(0, 0)].re
    }

    /// Kraus operators `√λ_s Σ_i v_{s,i} P_i` from the eigendecomposition of χ.
    pub fn to_kraus(&self) -> Vec<ComplexMatrix> {
        let dim = register_dim(&self.dims);
        let paulis: Vec<Unitary> = self.labels.iter().map(pauli_matrix).collect();
        let (values, vectors) = self.entries.hermitian_eigen();
        values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 1e-14)
            .map(|(s, &v)| {
                let mut k = ComplexMatrix::zeros(dim, dim);
                for (i, p) in paulis.iter().enumerate() {
                    let c = vectors[(i, s)] * v.sqrt();
                    if c.norm() > 0.0 {
                        k = &k + &p.scale(c);
                    }
                }
                k
            })
            .collect()
    }

    pub fn to_channel(&self) -> Result<Channel> {
        Channel::from_kraus(&self.dims, self.to_kraus())
    }
}

/// `χ_ij = Σ_s c_{si} c̄_{sj}` with `c_{si} = tr(P_i† K_s)/D`.
pub fn kraus_to_chi(kraus: &[ComplexMatrix], dims: &[usize]) -> Result<ChiMatrix> {
    let channel = Channel::from_kraus(dims, kraus.to_vec())?;
    let labels = enumerate_register(dims, CHI_LABEL_CAP)?;
    let dim = register_dim(dims) as f64;
    let coeffs: Vec<Vec<Complex64>> = channel
        .kraus
        .iter()
        .map(|k| labels.iter().map(|l| l.trace_against(k) / dim).collect())
        .collect();
    let size = labels.len();
    let entries = ComplexMatrix::from_fn(size, size, |i, j| {
        coeffs.iter().map(|c| c[i] * c[j].conj()).sum()
    });
    Ok(ChiMatrix {
        dims: dims.to_vec(),
        labels,
        entries,
    })
}

/// `Σ_s |tr K_s|² / D²`, the identity–identity entry of χ.
pub fn chi00_of(kraus: &[ComplexMatrix]) -> f64 {
    let dim = kraus.first().map_or(1, |k| k.rows()) as f64;
    kraus.iter().map(|k| k.trace().norm_sqr()).sum::<f64>() / (dim * dim)
}

/// Average gate fidelity `(D χ₀₀ + 1)/(D + 1)`.
pub fn avg_gate_fidelity(chi00: f64, d_eff: usize) -> Result<f64> {
    if !(-1e-12..=1.0 + 1e-12).contains(&chi00) {
        return Err(invalid(format!("chi00 = {chi00} outside [0, 1]")));
    }
    if d_eff < 2 {
        return Err(invalid(format!("effective dimension {d_eff} < 2")));
    }
    let d = d_eff as f64;
    Ok((d * chi00 + 1.0) / (d + 1.0))
}

/// Inverse of [`avg_gate_fidelity`].
pub fn chi00_from_fidelity(fidelity: f64, d_eff: usize) -> f64 {
    let d = d_eff as f64;
    (fidelity * (d + 1.0) - 1.0) / d
}

/// Dephasing strength `p = r(D+1)/D` whose average gate infidelity is `r`.
pub fn infidelity_to_dephasing_p(target_infidelity: f64, d_eff: usize) -> Result<f64> {
    let d = d_eff as f64;
    if !(0.0..d / (d + 1.0)).contains(&target_infidelity) {
        return Err(invalid(format!(
            "infidelity {target_infidelity} unreachable by dephasing in dimension {d_eff}"
        )));
    }
    Ok(target_infidelity * (d + 1.0) / d)
}

/// Dephasing channel on `dims` with average gate infidelity `r`.
pub fn infidelity_to_dephasing(target_infidelity: f64, dims: &[usize]) -> Result<Channel> {
    let p = infidelity_to_dephasing_p(target_infidelity, register_dim(dims))?;
    Channel::dephasing(dims, p)
}

/// `ρ ↦ qρ + (1−q)·(I_k/k) ⊗ tr_c(ρ)` on a `k`-level control register.
pub fn control_depolarize(rho: &DensityMatrix, q: f64, k: usize) -> Result<DensityMatrix> {
    check_probability(q, "control q")?;
    let dim = rho.dim();
    if k == 0 || !dim.is_multiple_of(k) {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {dim} is not divisible by k = {k}"
        )));
    }
    let t = dim / k;
    let m = rho.matrix();
    let mut reduced = ComplexMatrix::zeros(t, t);
    for l in 0..k {
        for r in 0..t {
            for c in 0..t {
                reduced[(r, c)] += m[(l * t + r, l * t + c)];
            }
        }
    }
    let mut out = m.scale_real(q);
    let w = (1.0 - q) / k as f64;
    for l in 0..k {
        for r in 0..t {
            for c in 0..t {
                out[(l * t + r, l * t + c)] += reduced[(r, c)] * w;
            }
        }
    }
    Ok(DensityMatrix::new_unchecked(out))
}

/// `⟨|⟨φ|U|φ⟩|²⟩` over the elements of a set, for a pure state `φ`.
pub fn avg_state_fidelity(set: &GateSet, phi: &DensityMatrix) -> Result<f64> {
    let v = phi.pure_vector()?;
    if v.len() != set.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} for a set on dimension {}",
            v.len(),
            set.dim()
        )));
    }
    let total: f64 = set
        .elements()
        .iter()
        .map(|u| {
            let uv = u.mul_vec(&v);
            v.iter().zip(&uv).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm_sqr()
        })
        .sum();
    Ok(total / set.len() as f64)
}

/// Phase `φ` with `P_a P_{−a} = φ I`.
fn inverse_phase(label: &PauliLabel) -> Complex64 {
    label
        .dims()
        .iter()
        .zip(label.x().iter().zip(label.z()))
        .map(|(&d, (&x, &z))| root_of_unity(d, (d - (x * z) % d) % d))
        .product()
}

/// χ₀₀ of `outer ∘ inner` from the two process matrices:
/// `Σ_{i,i'} χᵒ_{ii'} χⁱ_{−i,−i'} φ_i φ̄_{i'}`.
pub fn composed_chi00(outer: &ChiMatrix, inner: &ChiMatrix) -> Result<f64> {
    if outer.dims != inner.dims {
        return Err(Error::DimensionMismatch("process matrices on different registers".into()));
    }
    let neg: Vec<usize> = outer.labels.iter().map(|l| l.negated().index()).collect();
    let phases: Vec<Complex64> = outer.labels.iter().map(inverse_phase).collect();
    let size = outer.labels.len();
    let mut acc = C_ZERO;
    for i in 0..size {
        for j in 0..size {
            acc += outer.get(i, j) * inner.get(neg[i], neg[j]) * phases[i] * phases[j].conj();
        }
    }
    Ok(acc.re)
}

/// χ re-expressed over the Hermitian qubit Paulis `i^{x·z} X^x Z^z`.
pub fn hermitian_basis_chi(chi: &ChiMatrix) -> Result<ComplexMatrix> {
    if chi.dims.iter().any(|&d| d != 2) {
        return Err(Error::Unsupported("Hermitian Pauli basis exists for qubits only".into()));
    }
    let h: Vec<Complex64> = chi
        .labels
        .iter()
        .map(|l| root_of_unity(4, l.x().iter().zip(l.z()).map(|(x, z)| x * z).sum()))
        .collect();
    let size = h.len();
    Ok(ComplexMatrix::from_fn(size, size, |i, j| {
        chi.get(i, j) * h[i].conj() * h[j]
    }))
}

/// Qubit form `Σ_ij χᵒ_ij χⁱ_ij` of [`composed_chi00`], both matrices taken
/// in the Hermitian Pauli basis.
pub fn composed_chi00_hermitian(outer: &ChiMatrix, inner: &ChiMatrix) -> Result<f64> {
    let a = hermitian_basis_chi(outer)?;
    let b = hermitian_basis_chi(inner)?;
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x * y)
        .sum::<Complex64>()
        .re)
}

/// Noise attached to one protocol run.
#[derive(Clone, Debug)]
pub struct NoiseModel {
    /// Applied to the target after every controlled gate.
    pub gate: Channel,
    /// Applied after the final inverse gate.
    pub final_gate: Channel,
    /// Control-register depolarizing parameter (1 = noiseless control).
    pub control_q: f64,
    /// Target preparation `(1−ε_p)|0><0| + ε_p I/D`.
    pub prep_error: f64,
    /// Measurement effect `(1−ε_m)|ψ><ψ| + ε_m I/dim`.
    pub meas_error: f64,
}

impl NoiseModel {
    pub fn noiseless(dims: &[usize]) -> Self {
        Self::with_gate(Channel::identity(dims))
    }

    /// Same channel after every gate and after the inverse; ideal SPAM.
    pub fn with_gate(gate: Channel) -> Self {
        Self {
            final_gate: gate.clone(),
            gate,
            control_q: 1.0,
            prep_error: 0.0,
            meas_error: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gate.dims != self.final_gate.dims {
            return Err(Error::DimensionMismatch(
                "gate and final channels act on different registers".into(),
            ));
        }
        check_probability(self.control_q, "control q")?;
        check_probability(self.prep_error, "preparation error")?;
        check_probability(self.meas_error, "measurement error")
    }

    pub fn dims(&self) -> &[usize] {
        &self.gate.dims
    }

    /// Prepared target state `(1−ε_p)|0><0| + ε_p I/D`.
    pub fn prepared_target(&self) -> ComplexMatrix {
        let dim = self.gate.dim();
        let mut m = ComplexMatrix::identity(dim).scale_real(self.prep_error / dim as f64);
        m[(0, 0)] += Complex64::new(1.0 - self.prep_error, 0.0);
        m
    }

    /// Decay amplitude `(1−ε_m)<0|ξ_f(τ)|0>`.
    pub fn spam_amplitude(&self) -> f64 {
        let survival = self.final_gate.apply_operator(&self.prepared_target())[(0, 0)].re;
        (1.0 - self.meas_error) * survival
    }

    /// Constant floor `ε_m/dim` added by the measurement error on a register
    /// of total dimension `dim`.
    pub fn spam_offset(&self, dim: usize) -> f64 {
        self.meas_error / dim as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gatesets::{build_clifford_set, build_pauli_set, GateSet};
    use crate::qlinalg::random::{haar_state, random_density, random_kraus};
    use crate::qlinalg::{apply_channel, basis_vector, plus_state, tensor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn identity_chi() {
        let chi = Channel::identity(&[2]).chi().unwrap();
        assert!(close(chi.chi00(), 1.0, 1e-15));
        let rest: f64 = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|&(i, j)| (i, j) != (0, 0))
            .map(|(i, j)| chi.get(i, j).norm())
            .sum();
        assert!(rest < 1e-15);
    }

    #[test]
    fn dephasing_chi_is_diagonal() {
        let chi = Channel::dephasing(&[2], 0.01).unwrap().chi().unwrap();
        assert!(close(chi.chi00(), 0.99, 1e-15));
        assert!(close(chi.get(1, 1).re, 0.01, 1e-15));
        assert!(chi.get(0, 1).norm() < 1e-15);
    }

    #[test]
    fn qubit_depolarizing_chi00() {
        let p: f64 = 0.04;
        let labels = enumerate_register(&[2], 16).unwrap();
        let mut kraus = vec![ComplexMatrix::identity(2).scale_real((1.0 - 3.0 * p / 4.0).sqrt())];
        kraus.extend(labels[1..].iter().map(|l| pauli_matrix(l).scale_real((p / 4.0).sqrt())));
        let chi = kraus_to_chi(&kraus, &[2]).unwrap();
        assert!(close(chi.chi00(), 1.0 - 3.0 * p / 4.0, 1e-15));
        // the library constructor uses the ρ ↦ (1−p)ρ + pI/D convention
        let dep = Channel::depolarizing(&[2], p).unwrap();
        assert!(close(dep.chi00(), 1.0 - 3.0 * p / 4.0, 1e-15));
        let rho = DensityMatrix::basis(2, 0);
        let out = dep.apply(&rho).unwrap();
        assert!(close(out.matrix()[(1, 1)].re, p / 2.0, 1e-15));
    }

    #[test]
    fn chi00_matches_chi_entry_for_random_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for dim in [2, 3, 4] {
            let dims: Vec<usize> = if dim == 4 { vec![2, 2] } else { vec![dim] };
            for _ in 0..10 {
                let kraus = random_kraus(dim, 3, &mut rng);
                let chi = kraus_to_chi(&kraus, &dims).unwrap();
                assert!(close(chi00_of(&kraus), chi.chi00(), 1e-12));
                assert!(chi.entries().is_hermitian(1e-10));
                let (vals, _) = chi.entries().hermitian_eigen();
                assert!(vals[0] > -1e-9);
                assert!(close(chi.entries().trace().re, 1.0, 1e-10));
            }
        }
    }

    #[test]
    fn chi_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for trial in 0..50 {
            let (dim, dims) = match trial % 3 {
                0 => (2, vec![2]),
                1 => (3, vec![3]),
                _ => (4, vec![2, 2]),
            };
            let kraus = random_kraus(dim, 1 + trial % 4, &mut rng);
            let rebuilt = kraus_to_chi(&kraus, &dims).unwrap().to_channel().unwrap();
            for r in 0..dim {
                for c in 0..dim {
                    let mut e = ComplexMatrix::zeros(dim, dim);
                    e[(r, c)] = Complex64::new(1.0, 0.0);
                    let a = apply_kraus(&e, &kraus);
                    let b = rebuilt.apply_operator(&e);
                    assert!(a.max_abs_diff(&b) < 1e-8);
                }
            }
        }
    }

    #[test]
    fn fidelity_formulas() {
        assert!(close(avg_gate_fidelity(1.0, 5).unwrap(), 1.0, 1e-15));
        assert!(close(avg_gate_fidelity(0.99985, 2).unwrap(), 0.9999, 1e-12));
        assert!(close(avg_gate_fidelity(0.99, 4).unwrap(), 0.992, 1e-12));
        assert!(avg_gate_fidelity(1.2, 2).is_err());
        assert!(avg_gate_fidelity(0.5, 1).is_err());
        for p in [0.0, 0.01, 0.3] {
            let chi = chi00_of(Channel::dephasing(&[2], p).unwrap().kraus());
            assert!(close(avg_gate_fidelity(chi, 2).unwrap(), 1.0 - 2.0 * p / 3.0, 1e-12));
        }
    }

    #[test]
    fn infidelity_parameterization() {
        assert!(infidelity_to_dephasing(0.0, &[2]).unwrap().is_identity());
        let p = infidelity_to_dephasing_p(1e-4, 2).unwrap();
        assert!(close(p, 1.5e-4, 1e-18));
        let ch = infidelity_to_dephasing(1e-4, &[2]).unwrap();
        assert!(close(ch.chi00(), 0.99985, 1e-15));
        assert!(close(infidelity_to_dephasing_p(1e-5, 2).unwrap(), 1.5e-5, 1e-19));
        assert!(infidelity_to_dephasing_p(0.7, 2).is_err());
        let two = infidelity_to_dephasing(1e-3, &[2, 2]).unwrap();
        assert!(close(avg_gate_fidelity(two.chi00(), 4).unwrap(), 1.0 - 1e-3, 1e-14));
    }

    #[test]
    fn control_depolarizing() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sigma = random_density(2, &mut rng);
        let plus = ComplexMatrix::outer(&plus_state(2), &plus_state(2));
        let rho = DensityMatrix::new(tensor(&plus, &sigma)).unwrap();
        let same = control_depolarize(&rho, 1.0, 2).unwrap();
        assert!(same.matrix().max_abs_diff(rho.matrix()) < 1e-15);
        let full = control_depolarize(&rho, 0.0, 2).unwrap();
        let expect = tensor(&ComplexMatrix::identity(2).scale_real(0.5), &sigma);
        assert!(full.matrix().max_abs_diff(&expect) < 1e-15);
        let part = control_depolarize(&rho, 0.9, 2).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                let off = part.matrix()[(r, 2 + c)];
                assert!((off - rho.matrix()[(r, 2 + c)] * 0.9).norm() < 1e-15);
            }
        }
        assert!(close(part.trace(), 1.0, 1e-14));
        assert!(control_depolarize(&rho, 0.5, 3).is_err());
    }

    #[test]
    fn control_depolarizing_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let a = random_density(6, &mut rng);
            let b = random_density(6, &mut rng);
            let mix = &a.scale_real(0.3) + &b.scale_real(0.7);
            let f = |m: &ComplexMatrix| {
                control_depolarize(&DensityMatrix::new_unchecked(m.clone()), 0.8, 3)
                    .unwrap()
                    .into_matrix()
            };
            let lhs = f(&mix);
            let rhs = &f(&a).scale_real(0.3) + &f(&b).scale_real(0.7);
            assert!(lhs.max_abs_diff(&rhs) < 1e-14);
            assert!(close(lhs.trace().re, 1.0, 1e-12));
        }
    }

    #[test]
    fn state_fidelity_of_sets() {
        let zero = DensityMatrix::basis(2, 0);
        let pauli = build_pauli_set(2, 1).unwrap();
        assert!(close(avg_state_fidelity(&pauli, &zero).unwrap(), 0.5, 1e-15));
        let two = build_pauli_set(2, 2).unwrap();
        let state = DensityMatrix::basis(4, 2);
        assert!(close(avg_state_fidelity(&two, &state).unwrap(), 0.25, 1e-15));
        let single = GateSet::custom(&[2], vec![ComplexMatrix::identity(2)]).unwrap();
        assert!(close(avg_state_fidelity(&single, &zero).unwrap(), 1.0, 1e-15));
        // 24 Cliffords on |0>: 8 keep it on the z axis, 16 send it to the equator
        let cliff = build_clifford_set(2, 1).unwrap();
        let direct: f64 = cliff
            .elements()
            .iter()
            .map(|u| u[(0, 0)].norm_sqr())
            .sum::<f64>()
            / 24.0;
        let f = avg_state_fidelity(&cliff, &zero).unwrap();
        assert!(close(f, direct, 1e-14));
        assert!(close(f, 0.5, 1e-12));
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!(avg_state_fidelity(&pauli, &mixed).is_err());
    }

    #[test]
    fn composition_helpers() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for dims in [vec![2], vec![3], vec![2, 2]] {
            let dim = register_dim(&dims);
            for _ in 0..5 {
                let a = Channel::from_kraus(&dims, random_kraus(dim, 2, &mut rng)).unwrap();
                let b = Channel::from_kraus(&dims, random_kraus(dim, 3, &mut rng)).unwrap();
                let direct = a.then(&b).unwrap().chi00();
                let sum = composed_chi00(&b.chi().unwrap(), &a.chi().unwrap()).unwrap();
                assert!(close(direct, sum, 1e-12));
                if dims.iter().all(|&d| d == 2) {
                    let herm = composed_chi00_hermitian(&b.chi().unwrap(), &a.chi().unwrap()).unwrap();
                    assert!(close(direct, herm, 1e-12));
                }
            }
        }
    }

    #[test]
    fn channel_validation_and_application() {
        let bad = vec![ComplexMatrix::identity(2).scale_real(0.5)];
        assert!(matches!(
            Channel::from_kraus(&[2], bad),
            Err(Error::NotTracePreserving { .. })
        ));
        assert!(Channel::dephasing(&[2], 1.5).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = haar_state(2, &mut rng);
        let rho = DensityMatrix::pure(&psi).unwrap();
        let ch = Channel::dephasing(&[2], 0.2).unwrap();
        let a = ch.apply(&rho).unwrap();
        let b = apply_channel(&rho, ch.kraus()).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-15);
        assert!(ch.apply(&DensityMatrix::basis(3, 0)).is_err());
    }

    #[test]
    fn spam_amplitude() {
        let mut model = NoiseModel::with_gate(Channel::dephasing(&[2], 0.1).unwrap());
        assert!(close(model.spam_amplitude(), 1.0, 1e-15));
        model.prep_error = 0.1;
        model.meas_error = 0.2;
        let tau = model.prepared_target();
        assert!(close(tau[(0, 0)].re, 0.95, 1e-15));
        assert!(close(model.spam_amplitude(), 0.8 * 0.95, 1e-15));
        assert!(close(model.spam_offset(4), 0.05, 1e-15));
        let v = basis_vector(2, 0);
        assert!(close(v[0].re, 1.0, 0.0));
    }
}
