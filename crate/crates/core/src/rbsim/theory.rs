//! Closed-form predictions the simulators are checked against.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gatesets::GateSet;
use crate::noise::{composed_chi00, Channel, NoiseModel};
use crate::qlinalg::{ComplexMatrix, Unitary, C_ZERO};

/// `A · χ₀₀^m`.
pub fn decay_law(amplitude: f64, chi00: f64, m: usize) -> f64 {
    amplitude * chi00.powi(m as i32)
}

/// Full-superposition coherent fidelity `A·χ₀₀^m + ε_m/(k·D)` with
/// `k = |G|^m` branches.
pub fn coherent_full_prediction(set: &GateSet, noise: &NoiseModel, m: usize) -> f64 {
    let k = (set.len() as f64).powi(m as i32);
    let offset = noise.meas_error / (k * set.dim() as f64);
    decay_law(noise.spam_amplitude(), noise.gate.chi00(), m) + offset
}

/// `(q χ₀₀)^m + (1 − q^m)/k · f_G`.
pub fn control_noise_prediction(q: f64, chi00: f64, k: usize, state_fidelity: f64, m: usize) -> f64 {
    (q * chi00).powi(m as i32) + (1.0 - q.powi(m as i32)) / k as f64 * state_fidelity
}

/// Superoperator (row-major vectorization) of the group twirl
/// `ρ ↦ (1/|G|) Σ U† ξ(U ρ U†) U`.
pub fn twirl_superoperator(set: &GateSet, channel: &Channel) -> ComplexMatrix {
    let d = set.dim();
    let nn = d * d;
    let mut sup = ComplexMatrix::zeros(nn, nn);
    for (col, (r, c)) in (0..d).flat_map(|r| (0..d).map(move |c| (r, c))).enumerate() {
        let mut e = ComplexMatrix::zeros(d, d);
        e[(r, c)] = Complex64::new(1.0, 0.0);
        let mut acc = ComplexMatrix::zeros(d, d);
        for u in set.elements() {
            let inner = &(u.matrix() * &e) * &u.dagger();
            let out = &(&u.dagger() * &channel.apply_operator(&inner)) * u.matrix();
            acc = &acc + &out;
        }
        let acc = acc.scale_real(1.0 / set.len() as f64);
        for (row, z) in acc.as_slice().iter().enumerate() {
            sup[(row, col)] = *z;
        }
    }
    sup
}

/// Expected single-sequence survival `<0|ξ_f(T^m τ)|0>` for a group, with
/// `T` the twirl of the gate channel; no measurement error applied.
pub fn standard_survival(set: &GateSet, noise: &NoiseModel, m: usize) -> Result<f64> {
    if !set.is_group() {
        return Err(Error::Unsupported(format!(
            "twirl prediction needs a group, got the {} family",
            set.family()
        )));
    }
    let d = set.dim();
    let sup = twirl_superoperator(set, &noise.gate);
    let mut state = noise.prepared_target().as_slice().to_vec();
    let mut next = vec![C_ZERO; d * d];
    for _ in 0..m {
        for (r, out) in next.iter_mut().enumerate() {
            *out = sup.row(r).iter().zip(&state).map(|(a, b)| a * b).sum();
        }
        std::mem::swap(&mut state, &mut next);
    }
    let rho = ComplexMatrix::from_vec(d, d, state)?;
    Ok(noise.final_gate.apply_operator(&rho)[(0, 0)].re)
}

/// Expected standard RB fidelity, measurement error included.
pub fn standard_prediction(set: &GateSet, noise: &NoiseModel, m: usize) -> Result<f64> {
    let s = standard_survival(set, noise, m)?;
    Ok((1.0 - noise.meas_error) * s + noise.meas_error / set.dim() as f64)
}

/// Expected coherent fidelity with `k` sampled branches:
/// `(1−1/k)·<0|ξ_f(τ)|0>χ₀₀^m + (1/k)·<0|ξ_f(T^m τ)|0>`, SPAM included.
pub fn coherent_expectation(set: &GateSet, noise: &NoiseModel, k: usize, m: usize) -> Result<f64> {
    let diag = standard_survival(set, noise, m)?;
    let survival = noise.final_gate.apply_operator(&noise.prepared_target())[(0, 0)].re;
    let off = survival * noise.gate.chi00().powi(m as i32);
    let kf = k as f64;
    let proj = (1.0 - 1.0 / kf) * off + diag / kf;
    Ok((1.0 - noise.meas_error) * proj + noise.meas_error / (kf * set.dim() as f64))
}

/// χ₀₀ of one interleaved position: gate channel followed by
/// `C̄ = C† ξ_C(C · C†) C`.
pub fn interleaved_chi00(gate_channel: &Channel, gate: &Unitary, channel: &Channel) -> Result<f64> {
    let cbar = channel.conjugated(gate);
    composed_chi00(&cbar.chi()?, &gate_channel.chi()?)
}
