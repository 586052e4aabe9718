//! Reference simulator on the full `k·D`-dimensional density matrix.
//! Slow, but built only from the generic `qlinalg` and `noise` primitives.

use crate::error::{invalid, Result};
use crate::gatesets::{sequence_product, GateSet};
use crate::noise::{control_depolarize, Channel, NoiseModel};
use crate::qlinalg::{
    apply_kraus as apply, materialize_controlled, plus_state, povm_expectation, tensor, ComplexMatrix, ControlledUnitary,
    DensityMatrix, Unitary, C_ZERO,
};

/// Optional control-register depolarizing.
#[derive(Clone, Copy, Debug)]
pub struct ControlNoise {
    pub q: f64,
    pub after_inverse: bool,
}

/// Runs the controlled-sequence protocol on explicit branch sequences.
/// With a single branch this is the standard single-sequence survival.
pub fn dense_fidelity(
    set: &GateSet,
    noise: &NoiseModel,
    seqs: &[Vec<usize>],
    interleave: Option<(&Unitary, &Channel)>,
    control: Option<ControlNoise>,
) -> Result<f64> {
    let k = seqs.len();
    let m = seqs.first().map_or(0, |s| s.len());
    if k == 0 || m == 0 || seqs.iter().any(|s| s.len() != m) {
        return Err(invalid("need k >= 1 sequences of a common positive length"));
    }
    let d = set.dim();
    let id_k = ComplexMatrix::identity(k);
    let lift = |ch: &Channel| -> Vec<ComplexMatrix> { ch.kraus().iter().map(|kr| tensor(&id_k, kr)).collect() };
    let gate_kraus = lift(&noise.gate);
    let plus = plus_state(k);
    let mut rho = tensor(&ComplexMatrix::outer(&plus, &plus), &noise.prepared_target());
    let depolarize = |rho: ComplexMatrix| -> Result<ComplexMatrix> {
        match control {
            Some(c) => Ok(control_depolarize(&DensityMatrix::new_unchecked(rho), c.q, k)?.into_matrix()),
            None => Ok(rho),
        }
    };

    let mut frames: Vec<ComplexMatrix> = vec![ComplexMatrix::identity(d); k];
    for t in 0..m {
        let branches = seqs
            .iter()
            .map(|s| set.element(s[t]).cloned())
            .collect::<Result<Vec<_>>>()?;
        let cu = materialize_controlled(&ControlledUnitary::new(branches)?);
        rho = &(cu.matrix() * &rho) * &cu.dagger();
        rho = apply(&rho, &gate_kraus);
        if let Some((c, ch)) = interleave {
            let lifted = tensor(&id_k, c.matrix());
            rho = &(&lifted * &rho) * &lifted.dagger();
            rho = apply(&rho, &lift(ch));
        }
        rho = depolarize(rho)?;
        for (i, s) in seqs.iter().enumerate() {
            let mut step = set.element(s[t])?.matrix().clone();
            if let Some((c, _)) = interleave {
                step = c.matrix() * &step;
            }
            frames[i] = &step * &frames[i];
        }
    }

    let inverses = frames
        .iter()
        .map(|w| Unitary::new(w.dagger()))
        .collect::<Result<Vec<_>>>()?;
    let cv = materialize_controlled(&ControlledUnitary::new(inverses)?);
    rho = &(cv.matrix() * &rho) * &cv.dagger();
    let final_channel = if interleave.is_some() {
        Channel::identity(noise.dims())
    } else {
        noise.final_gate.clone()
    };
    rho = apply(&rho, &lift(&final_channel));
    if control.is_some_and(|c| c.after_inverse) {
        rho = depolarize(rho)?;
    }

    let dim = k * d;
    let mut probe = vec![C_ZERO; dim];
    for (i, z) in plus.iter().enumerate() {
        probe[i * d] = *z;
    }
    let effect = &ComplexMatrix::outer(&probe, &probe).scale_real(1.0 - noise.meas_error)
        + &ComplexMatrix::identity(dim).scale_real(noise.meas_error / dim as f64);
    povm_expectation(&DensityMatrix::new_unchecked(rho), &effect)
}

/// Survival of one sequence without a control register.
pub fn dense_survival(set: &GateSet, noise: &NoiseModel, seq: &[usize]) -> Result<f64> {
    let w = sequence_product(seq, set)?;
    let d = set.dim();
    let mut rho = noise.prepared_target();
    for &g in seq {
        let u = set.element(g)?;
        rho = noise.gate.apply_operator(&(&(u.matrix() * &rho) * &u.dagger()));
    }
    rho = noise.final_gate.apply_operator(&(&(&w.dagger() * &rho) * &w));
    Ok((1.0 - noise.meas_error) * rho[(0, 0)].re + noise.meas_error / d as f64)
}
