//! Decay fitting, interleaved-benchmarking extraction and deviation studies.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gatesets::GateSet;
use crate::noise::NoiseModel;
use crate::rbsim::{run, theory, FidelityRecord, Mode, RbRunConfig};

/// Upper edge of the amplitude box.
pub const AMPLITUDE_MAX: f64 = 1.0 + 1e-6;
const MAX_ITERATIONS: usize = 100;
const STEP_TOL: f64 = 1e-12;

/// Least-squares fit of `F(m) = A·χ₀₀^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub amplitude: f64,
    pub chi00: f64,
    pub amplitude_se: f64,
    pub chi00_se: f64,
    pub residual_rms: f64,
    pub points_used: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl DecayFit {
    pub fn predict(&self, m: usize) -> f64 {
        theory::decay_law(self.amplitude, self.chi00, m)
    }
}

/// Unweighted fit; see [`fit_decay_weighted`].
pub fn fit_decay(points: &[(usize, f64)]) -> Result<DecayFit> {
    fit_decay_weighted(points, None)
}

/// Log-linear initialization followed by box-constrained Gauss–Newton in
/// linear space. `weights` scale each squared residual (default 1).
pub fn fit_decay_weighted(points: &[(usize, f64)], weights: Option<&[f64]>) -> Result<DecayFit> {
    let w: Vec<f64> = match weights {
        Some(w) if w.len() != points.len() => {
            return Err(Error::Fit(format!("{} weights for {} points", w.len(), points.len())))
        }
        Some(w) if w.iter().any(|&x| !(x.is_finite() && x >= 0.0)) => {
            return Err(Error::Fit("weights must be finite and non-negative".into()))
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; points.len()],
    };
    let mut lengths: Vec<usize> = points.iter().map(|p| p.0).collect();
    lengths.sort_unstable();
    lengths.dedup();
    if lengths.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 distinct lengths, got {}", lengths.len())));
    }
    if let Some(bad) = points.iter().find(|p| !p.1.is_finite() || p.1 < 0.0 || p.1 >= 1.05) {
        return Err(Error::Fit(format!("fidelity {} at m = {} outside [0, 1.05)", bad.1, bad.0)));
    }
    if points.iter().all(|p| p.1 == 0.0) {
        return Err(Error::Fit("all fidelities are zero".into()));
    }

    let init = log_linear(points, &w)?;
    let sse = |a: f64, c: f64| -> f64 {
        points
            .iter()
            .zip(&w)
            .map(|(&(m, f), wi)| wi * (f - a * c.powi(m as i32)).powi(2))
            .sum()
    };

    let (mut a, mut c) = init;
    let mut current = sse(a, c);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let Some((da, dc)) = gauss_newton_step(points, &w, a, c) else {
            break;
        };
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let na = (a + scale * da).clamp(0.0, AMPLITUDE_MAX);
            let nc = (c + scale * dc).clamp(0.0, 1.0);
            let trial = sse(na, nc);
            if trial.is_finite() && trial <= current {
                accepted = Some((na, nc, trial));
                break;
            }
            scale *= 0.5;
        }
        let Some((na, nc, trial)) = accepted else {
            // no descent direction left: at a minimum to working precision
            converged = true;
            break;
        };
        let step = ((na - a).powi(2) + (nc - c).powi(2)).sqrt();
        a = na;
        c = nc;
        current = trial;
        if step < STEP_TOL {
            converged = true;
            break;
        }
    }
    if !(a.is_finite() && c.is_finite()) {
        converged = false;
    }
    if !converged {
        (a, c) = init;
        current = sse(a, c);
    }

    let n = points.len();
    let wsum: f64 = w.iter().sum();
    let residual_rms = (current / wsum).sqrt();
    let (amplitude_se, chi00_se) = standard_errors(points, &w, a, c, current);
    Ok(DecayFit {
        amplitude: a,
        chi00: c,
        amplitude_se,
        chi00_se,
        residual_rms,
        points_used: n,
        iterations,
        converged,
    })
}

/// Weighted least squares on `ln F = ln A + m ln χ₀₀`, zeros excluded.
fn log_linear(points: &[(usize, f64)], w: &[f64]) -> Result<(f64, f64)> {
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut distinct = std::collections::BTreeSet::new();
    for (&(m, f), &wi) in points.iter().zip(w) {
        if f <= 0.0 || wi == 0.0 {
            continue;
        }
        distinct.insert(m);
        let (x, y) = (m as f64, f.ln());
        sw += wi;
        sx += wi * x;
        sy += wi * y;
        sxx += wi * x * x;
        sxy += wi * x * y;
    }
    if distinct.len() < 2 {
        return Err(Error::Fit("fewer than two lengths with positive fidelity".into()));
    }
    let det = sw * sxx - sx * sx;
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / sw;
    Ok((intercept.exp().clamp(0.0, AMPLITUDE_MAX), slope.exp().clamp(0.0, 1.0)))
}

fn jacobian_row(m: usize, a: f64, c: f64) -> (f64, f64) {
    let mi = m as i32;
    let dc = if m == 0 { 0.0 } else { a * m as f64 * c.powi(mi - 1) };
    (c.powi(mi), dc)
}

fn normal_matrix(points: &[(usize, f64)], w: &[f64], a: f64, c: f64) -> ([f64; 3], [f64; 2]) {
    let (mut jaa, mut jac, mut jcc, mut ga, mut gc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&(m, f), &wi) in points.iter().zip(w) {
        let (ja, jc) = jacobian_row(m, a, c);
        let r = f - a * c.powi(m as i32);
        jaa += wi * ja * ja;
        jac += wi * ja * jc;
        jcc += wi * jc * jc;
        ga += wi * ja * r;
        gc += wi * jc * r;
    }
    ([jaa, jac, jcc], [ga, gc])
}

fn gauss_newton_step(points: &[(usize, f64)], w: &[f64], a: f64, c: f64) -> Option<(f64, f64)> {
    let ([jaa, jac, jcc], [ga, gc]) = normal_matrix(points, w, a, c);
    let det = jaa * jcc - jac * jac;
    if !(det.is_finite() && det.abs() > 1e-300) {
        return None;
    }
    Some(((jcc * ga - jac * gc) / det, (jaa * gc - jac * ga) / det))
}

/// Square roots of the diagonal of `σ²(JᵀWJ)⁻¹`, `σ² = SSE/(n − 2)`.
fn standard_errors(points: &[(usize, f64)], w: &[f64], a: f64, c: f64, sse: f64) -> (f64, f64) {
    let n = points.len();
    if n <= 2 {
        return (f64::NAN, f64::NAN);
    }
    let ([jaa, jac, jcc], _) = normal_matrix(points, w, a, c);
    let det = jaa * jcc - jac * jac;
    let sigma2 = sse / (n - 2) as f64;
    ((sigma2 * jcc / det).max(0.0).sqrt(), (sigma2 * jaa / det).max(0.0).sqrt())
}

/// Fit over every record (each repetition is one point).
pub fn fit_records(records: &[FidelityRecord]) -> Result<DecayFit> {
    let points: Vec<(usize, f64)> = records.iter().map(|r| (r.m, r.fidelity)).collect();
    fit_decay(&points)
}

/// Per-length summary of a record stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthSummary {
    pub m: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub count: usize,
}

pub fn mean_by_length(records: &[FidelityRecord]) -> Vec<LengthSummary> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry(r.m).or_default().push(r.fidelity);
    }
    groups
        .into_iter()
        .map(|(m, v)| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = if v.len() > 1 {
                v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            LengthSummary {
                m,
                mean,
                std_dev: var.sqrt(),
                count: v.len(),
            }
        })
        .collect()
}

/// `(1 − 1/k)·coherent + (1/k)·standard`.
pub fn combined_decay(coherent: f64, standard: f64, k: usize) -> f64 {
    let kf = k.max(1) as f64;
    (1.0 - 1.0 / kf) * coherent + standard / kf
}

/// Half-width `2√((1−p)p(1−c)c) + (1−p)(1−c)` of the composed-χ₀₀ window.
pub fn irb_bound(chi00_ref: f64, chi00_gate: f64) -> f64 {
    let (p, c) = (chi00_ref.clamp(0.0, 1.0), chi00_gate.clamp(0.0, 1.0));
    2.0 * ((1.0 - p) * p * (1.0 - c) * c).sqrt() + (1.0 - p) * (1.0 - c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrbEstimate {
    pub chi00_ref: f64,
    pub chi00_combined: f64,
    pub chi00_gate: f64,
    pub bound_e: f64,
}

impl IrbEstimate {
    /// Average gate fidelity of the interleaved gate for dimension `d_eff`.
    pub fn gate_fidelity(&self, d_eff: usize) -> Result<f64> {
        crate::noise::avg_gate_fidelity(self.chi00_gate, d_eff)
    }
}

/// Gate χ₀₀ as the ratio of interleaved to reference decay, with the bound
/// evaluated at the point estimate.
pub fn irb_extract(fit_ref: &DecayFit, fit_interleaved: &DecayFit) -> Result<IrbEstimate> {
    irb_from_decays(fit_ref.chi00, fit_interleaved.chi00)
}

pub fn irb_from_decays(chi00_ref: f64, chi00_combined: f64) -> Result<IrbEstimate> {
    if chi00_ref <= 0.0 {
        return Err(Error::Fit("reference decay is zero".into()));
    }
    let gate = (chi00_combined / chi00_ref).clamp(0.0, 1.0);
    Ok(IrbEstimate {
        chi00_ref,
        chi00_combined,
        chi00_gate: gate,
        bound_e: irb_bound(chi00_ref, gate),
    })
}

/// Parameters of one coherent-versus-standard deviation study.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub set: Arc<GateSet>,
    pub noise: NoiseModel,
    pub k: usize,
    pub repetitions: usize,
    pub lengths: Vec<usize>,
    pub seed: u64,
}

impl Scenario {
    pub fn config(&self, mode: Mode) -> RbRunConfig {
        RbRunConfig::new(self.set.clone(), self.noise.clone(), mode)
            .with_lengths(self.lengths.clone())
            .with_k(self.k)
            .with_repetitions(self.repetitions)
            .with_seed(self.seed)
    }
}

/// Deviations `|F − F̄|` of every run from the analytic decay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationSummary {
    pub name: String,
    pub family: String,
    pub k: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub chi00: f64,
    pub lengths: Vec<usize>,
    /// `A·χ₀₀^m` (plus the measurement floor) shared by both modes.
    pub reference: Vec<f64>,
    pub coherent: Vec<Vec<f64>>,
    pub standard: Vec<Vec<f64>>,
    pub max_coherent: f64,
    pub max_standard: f64,
    pub mean_coherent: f64,
    pub mean_standard: f64,
    /// Expected standard curve from the group twirl, when the set is a group.
    pub standard_twirl: Option<Vec<f64>>,
    /// `(1−1/k)·reference + (1/k)·standard_twirl`.
    pub combined: Option<Vec<f64>>,
    pub coherent_vs_combined: Option<Vec<Vec<f64>>>,
    pub max_coherent_vs_combined: Option<f64>,
    pub mean_coherent_vs_combined: Option<f64>,
}

impl DeviationSummary {
    pub fn per_length_max(devs: &[Vec<f64>]) -> Vec<f64> {
        devs.iter().map(|d| d.iter().copied().fold(0.0, f64::max)).collect()
    }
}

/// Runs both engines on the scenario and measures deviations from the law.
pub fn deviation_experiment(scenario: &Scenario) -> Result<DeviationSummary> {
    let coherent = run(&scenario.config(Mode::Coherent))?;
    let standard = run(&scenario.config(Mode::Standard))?;
    let noise = &scenario.noise;
    let chi00 = noise.gate.chi00();
    let d = scenario.set.dim();
    let a = noise.spam_amplitude();
    let law = |m: usize, dim: usize| theory::decay_law(a, chi00, m) + noise.spam_offset(dim);
    let reference: Vec<f64> = scenario.lengths.iter().map(|&m| law(m, scenario.k * d)).collect();
    let standard_reference: Vec<f64> = scenario.lengths.iter().map(|&m| law(m, d)).collect();

    let group = |records: &[FidelityRecord]| -> Vec<Vec<f64>> {
        scenario
            .lengths
            .iter()
            .map(|&m| records.iter().filter(|r| r.m == m).map(|r| r.fidelity).collect())
            .collect()
    };
    let deviations = |values: &[Vec<f64>], truth: &[f64]| -> Vec<Vec<f64>> {
        values
            .iter()
            .zip(truth)
            .map(|(v, t)| v.iter().map(|f| (f - t).abs()).collect())
            .collect()
    };
    let coh_values = group(&coherent);
    let std_values = group(&standard);
    let coh_dev = deviations(&coh_values, &reference);
    let std_dev = deviations(&std_values, &standard_reference);

    let (standard_twirl, combined, coherent_vs_combined) = if scenario.set.is_group() {
        let twirl: Vec<f64> = scenario
            .lengths
            .iter()
            .map(|&m| theory::standard_survival(&scenario.set, noise, m))
            .collect::<Result<_>>()?;
        let comb: Vec<f64> = scenario
            .lengths
            .iter()
            .map(|&m| theory::coherent_expectation(&scenario.set, noise, scenario.k, m))
            .collect::<Result<_>>()?;
        let dev = deviations(&coh_values, &comb);
        (Some(twirl), Some(comb), Some(dev))
    } else {
        (None, None, None)
    };

    let max_of = |devs: &[Vec<f64>]| devs.iter().flatten().copied().fold(0.0, f64::max);
    let mean_of = |devs: &[Vec<f64>]| {
        let n = devs.iter().map(Vec::len).sum::<usize>();
        devs.iter().flatten().sum::<f64>() / n as f64
    };
    Ok(DeviationSummary {
        name: scenario.name.clone(),
        family: scenario.set.family().to_string(),
        k: scenario.k,
        repetitions: scenario.repetitions,
        seed: scenario.seed,
        chi00,
        lengths: scenario.lengths.clone(),
        reference,
        max_coherent: max_of(&coh_dev),
        max_standard: max_of(&std_dev),
        mean_coherent: mean_of(&coh_dev),
        mean_standard: mean_of(&std_dev),
        coherent: coh_dev,
        standard: std_dev,
        max_coherent_vs_combined: coherent_vs_combined.as_deref().map(max_of),
        mean_coherent_vs_combined: coherent_vs_combined.as_deref().map(mean_of),
        standard_twirl,
        combined,
        coherent_vs_combined,
    })
}
