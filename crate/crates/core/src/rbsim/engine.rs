//! Block-structured simulation of the controlled-sequence protocol.
//!
//! The joint state is kept as `ρ = (1/k) Σ_ij |i><j| ⊗ B_ij`. Branch `i`
//! only ever acts on the left of `B_ij` and branch `j` on the right, so each
//! block evolves independently of the others (except for control noise,
//! which mixes the diagonal blocks). The final inverse and measurement fold
//! into a pair of probe vectors per branch.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::gatesets::GateSet;
use crate::noise::{Channel, NoiseModel};
use crate::qlinalg::{kernel, ComplexMatrix, Unitary, C_ZERO};

/// Per-run precomputed operators.
pub(crate) struct Protocol {
    dim: usize,
    /// `step[g]` holds the blocks `S_a · U_g` back to back.
    step: Vec<Vec<Complex64>>,
    n_step: usize,
    /// `frame[g]` advances the branch product: `W ← frame[g] · W`.
    frame: Vec<ComplexMatrix>,
    /// `K'_s† |0>` for each Kraus operator of the final channel.
    probes: Vec<Vec<Complex64>>,
    tau: Vec<Complex64>,
}

impl Protocol {
    /// Each gate followed by the model's gate channel; the inverse by its final channel.
    pub fn new(set: &GateSet, noise: &NoiseModel) -> Self {
        Self::build(set, noise.gate.kraus(), None, &noise.final_gate, noise)
    }

    /// Each position applies `U_g`, the gate channel, the interleaved gate
    /// `C` and its channel; the final inverse is noiseless.
    pub fn interleaved(set: &GateSet, noise: &NoiseModel, gate: &Unitary, channel: &Channel) -> Self {
        let step: Vec<ComplexMatrix> = channel
            .kraus()
            .iter()
            .flat_map(|kc| {
                let kc_c = kc * gate.matrix();
                noise.gate.kraus().iter().map(move |k| &kc_c * k)
            })
            .collect();
        let ideal = Channel::identity(noise.dims());
        Self::build(set, &step, Some(gate), &ideal, noise)
    }

    fn build(
        set: &GateSet,
        step_kraus: &[ComplexMatrix],
        interleaved: Option<&Unitary>,
        final_channel: &Channel,
        noise: &NoiseModel,
    ) -> Self {
        let dim = set.dim();
        let step = set
            .elements()
            .iter()
            .map(|u| {
                step_kraus
                    .iter()
                    .flat_map(|s| (s * u.matrix()).as_slice().to_vec())
                    .collect()
            })
            .collect();
        let frame = set
            .elements()
            .iter()
            .map(|u| match interleaved {
                Some(c) => c.matrix() * u.matrix(),
                None => u.matrix().clone(),
            })
            .collect();
        let probes = final_channel
            .kraus()
            .iter()
            .map(|k| k.row(0).iter().map(|z| z.conj()).collect())
            .collect();
        Self {
            dim,
            step,
            n_step: step_kraus.len(),
            frame,
            probes,
            tau: noise.prepared_target().as_slice().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `W K'_s†|0>` for every final Kraus operator, `W` the branch product.
    fn branch_probes(&self, seq: &[usize]) -> Vec<Vec<Complex64>> {
        let mut w = ComplexMatrix::identity(self.dim);
        for &g in seq {
            w = &self.frame[g] * &w;
        }
        self.probes.iter().map(|f| w.mul_vec(f)).collect()
    }

    /// One position of the sequence applied to a block: `Σ_a L_{a,gi} B L_{a,gj}†`.
    fn step_block(&self, gi: usize, gj: usize, b: &[Complex64], tmp: &mut [Complex64], out: &mut [Complex64]) {
        let n = self.dim;
        let nn = n * n;
        out.iter_mut().for_each(|z| *z = C_ZERO);
        let (li, lj) = (&self.step[gi], &self.step[gj]);
        for a in 0..self.n_step {
            kernel::mul_into(&li[a * nn..(a + 1) * nn], b, tmp, n);
            kernel::mul_adj_acc(tmp, &lj[a * nn..(a + 1) * nn], out, n);
        }
    }

    fn evolve_pair(&self, si: &[usize], sj: &[usize]) -> Vec<Complex64> {
        let nn = self.dim * self.dim;
        let mut b = self.tau.clone();
        let mut next = vec![C_ZERO; nn];
        let mut tmp = vec![C_ZERO; nn];
        for (&gi, &gj) in si.iter().zip(sj) {
            self.step_block(gi, gj, &b, &mut tmp, &mut next);
            std::mem::swap(&mut b, &mut next);
        }
        b
    }

    fn readout(&self, b: &[Complex64], ui: &[Vec<Complex64>], uj: &[Vec<Complex64>]) -> Complex64 {
        ui.iter()
            .zip(uj)
            .map(|(a, c)| kernel::sandwich(a, b, c, self.dim))
            .sum()
    }

    /// The matrix `v_ij = <0|ξ_f(V_i B_ij V_j†)|0>` over all branch pairs.
    pub fn pair_values(&self, seqs: &[Vec<usize>]) -> ComplexMatrix {
        let probes: Vec<_> = seqs.par_iter().map(|s| self.branch_probes(s)).collect();
        let k = seqs.len();
        let rows: Vec<Vec<Complex64>> = (0..k)
            .into_par_iter()
            .map(|i| {
                (0..k)
                    .map(|j| self.readout(&self.evolve_pair(&seqs[i], &seqs[j]), &probes[i], &probes[j]))
                    .collect()
            })
            .collect();
        ComplexMatrix::from_fn(k, k, |i, j| rows[i][j])
    }

    /// Single-branch survival values `v_ii`.
    pub fn survivals(&self, seqs: &[Vec<usize>]) -> Vec<f64> {
        seqs.par_iter()
            .map(|s| {
                let u = self.branch_probes(s);
                self.readout(&self.evolve_pair(s, s), &u, &u).re
            })
            .collect()
    }

    /// `(1/k²) Σ_ij Re v_ij` with off-diagonal blocks damped by `offdiag_scale`
    /// and, if `control_q < 1`, diagonal blocks mixed after every position.
    pub fn coherent_projection(&self, seqs: &[Vec<usize>], control_q: f64, offdiag_scale: f64) -> f64 {
        let k = seqs.len();
        let probes: Vec<_> = seqs.par_iter().map(|s| self.branch_probes(s)).collect();
        let rows: Vec<(f64, f64)> = (0..k)
            .into_par_iter()
            .map(|i| {
                let diag = if control_q < 1.0 {
                    0.0
                } else {
                    self.readout(&self.evolve_pair(&seqs[i], &seqs[i]), &probes[i], &probes[i]).re
                };
                let off: f64 = (i + 1..k)
                    .map(|j| {
                        self.readout(&self.evolve_pair(&seqs[i], &seqs[j]), &probes[i], &probes[j]).re
                    })
                    .sum();
                (diag, off)
            })
            .collect();
        let diag_sum: f64 = if control_q < 1.0 {
            self.mixed_diagonals(seqs, &probes, control_q).iter().sum()
        } else {
            rows.iter().map(|r| r.0).sum()
        };
        let off_sum: f64 = rows.iter().map(|r| r.1).sum();
        (diag_sum + 2.0 * offdiag_scale * off_sum) / (k * k) as f64
    }

    /// Diagonal blocks under control depolarizing after each position:
    /// `B_ii ← q B_ii + (1−q)(1/k) Σ_l B_ll`.
    #[allow(clippy::needless_range_loop)]
    fn mixed_diagonals(&self, seqs: &[Vec<usize>], probes: &[Vec<Vec<Complex64>>], q: f64) -> Vec<f64> {
        let k = seqs.len();
        let nn = self.dim * self.dim;
        let m = seqs[0].len();
        let mut blocks: Vec<Vec<Complex64>> = vec![self.tau.clone(); k];
        for t in 0..m {
            blocks = blocks
                .par_iter()
                .enumerate()
                .map(|(i, b)| {
                    let mut out = vec![C_ZERO; nn];
                    let mut tmp = vec![C_ZERO; nn];
                    let g = seqs[i][t];
                    self.step_block(g, g, b, &mut tmp, &mut out);
                    out
                })
                .collect();
            let mut mean = vec![C_ZERO; nn];
            for b in &blocks {
                mean.iter_mut().zip(b).for_each(|(a, z)| *a += z);
            }
            let w = (1.0 - q) / k as f64;
            for b in blocks.iter_mut() {
                b.iter_mut().zip(&mean).for_each(|(z, mu)| *z = *z * q + mu * w);
            }
        }
        blocks
            .iter()
            .zip(probes)
            .map(|(b, u)| self.readout(b, u, u).re)
            .collect()
    }
}
