//! Generalized (Weyl–Heisenberg) Pauli operators on qudit registers.
//!
//! A label `(x, z)` names the operator `X^{x₁}Z^{z₁} ⊗ … ⊗ X^{xₙ}Z^{zₙ}` with
//! `X|s> = |s+1 mod d>` and `Z|s> = wˢ|s>`, `w = e^{2πi/d}`. The X factor
//! sits to the left of the Z factor on every site and no phase is added to
//! make the operator Hermitian.
//!
//! Registers may mix site dimensions (a qubit control next to a qutrit
//! target, say); the symplectic product in `Z_d` only exists for homogeneous
//! registers, while [`commutation_phase`] works for any register.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::qlinalg::{ComplexMatrix, Unitary, C_ZERO};

/// Largest label set enumerated without an explicit cap.
pub const DEFAULT_LABEL_CAP: usize = 4096;

/// `(x, z)` exponent vectors of an n-qudit Pauli operator.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct PauliLabel {
    dims: Vec<usize>,
    x: Vec<usize>,
    z: Vec<usize>,
}

impl PauliLabel {
    /// Label on `n = x.len()` qudits of dimension `d`; exponents are reduced mod `d`.
    pub fn new(d: usize, x: Vec<usize>, z: Vec<usize>) -> Result<Self> {
        Self::on_register(&vec![d; x.len()], x, z)
    }

    pub fn on_register(dims: &[usize], mut x: Vec<usize>, mut z: Vec<usize>) -> Result<Self> {
        check_register(dims)?;
        if x.len() != dims.len() || z.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "label with {} x and {} z exponents on {} sites",
                x.len(),
                z.len(),
                dims.len()
            )));
        }
        for (i, &d) in dims.iter().enumerate() {
            x[i] %= d;
            z[i] %= d;
        }
        Ok(Self {
            dims: dims.to_vec(),
            x,
            z,
        })
    }

    pub fn identity(dims: &[usize]) -> Self {
        Self {
            dims: dims.to_vec(),
            x: vec![0; dims.len()],
            z: vec![0; dims.len()],
        }
    }

    /// The label at position `index` of [`enumerate_register`].
    pub fn from_index(dims: &[usize], mut index: usize) -> Self {
        let n = dims.len();
        let mut x = vec![0; n];
        let mut z = vec![0; n];
        for site in (0..n).rev() {
            z[site] = index % dims[site];
            index /= dims[site];
        }
        for site in (0..n).rev() {
            x[site] = index % dims[site];
            index /= dims[site];
        }
        Self {
            dims: dims.to_vec(),
            x,
            z,
        }
    }

    /// Position in lexicographic order of `(x₁…xₙ, z₁…zₙ)`, identity first.
    pub fn index(&self) -> usize {
        let mut idx = 0;
        for (site, &d) in self.dims.iter().enumerate() {
            idx = idx * d + self.x[site];
        }
        for (site, &d) in self.dims.iter().enumerate() {
            idx = idx * d + self.z[site];
        }
        idx
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    /// The common site dimension, if the register is homogeneous.
    pub fn d(&self) -> Option<usize> {
        let d = self.dims[0];
        self.dims.iter().all(|&e| e == d).then_some(d)
    }

    pub fn x(&self) -> &[usize] {
        &self.x
    }

    pub fn z(&self) -> &[usize] {
        &self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&e| e == 0)
    }

    /// Label of `(−x, −z)`; `P_a P_{−a}` is a phase times the identity.
    pub fn negated(&self) -> Self {
        let neg = |v: &[usize]| -> Vec<usize> {
            v.iter()
                .zip(&self.dims)
                .map(|(&e, &d)| (d - e) % d)
                .collect()
        };
        Self {
            dims: self.dims.clone(),
            x: neg(&self.x),
            z: neg(&self.z),
        }
    }

    /// Parses `x:<e,e,…>;z:<e,e,…>` on qudits of dimension `d`.
    pub fn parse(text: &str, d: usize) -> Result<Self> {
        let (x, z) = parse_exponents(text)?;
        Self::new(d, x, z)
    }

    pub fn parse_on(text: &str, dims: &[usize]) -> Result<Self> {
        let (x, z) = parse_exponents(text)?;
        Self::on_register(dims, x, z)
    }

    /// `P|s> = phase[s]·|perm[s]>` over the register's computational basis.
    pub(crate) fn monomial(&self) -> (Vec<usize>, Vec<Complex64>) {
        let dim = register_dim(&self.dims);
        let roots: Vec<Arc<[Complex64]>> = self.dims.iter().map(|&d| roots_of_unity(d)).collect();
        let mut perm = Vec::with_capacity(dim);
        let mut phase = Vec::with_capacity(dim);
        let mut digits = vec![0usize; self.n()];
        for _ in 0..dim {
            let mut target = 0;
            let mut ph = Complex64::new(1.0, 0.0);
            for (site, &d) in self.dims.iter().enumerate() {
                let s = digits[site];
                ph *= roots[site][(self.z[site] * s) % d];
                target = target * d + (s + self.x[site]) % d;
            }
            perm.push(target);
            phase.push(ph);
            // odometer over digits, last site fastest
            for site in (0..self.n()).rev() {
                digits[site] += 1;
                if digits[site] < self.dims[site] {
                    break;
                }
                digits[site] = 0;
            }
        }
        (perm, phase)
    }

    /// `tr(P† M)` computed from the monomial structure.
    pub fn trace_against(&self, m: &ComplexMatrix) -> Complex64 {
        let (perm, phase) = self.monomial();
        perm.iter()
            .zip(&phase)
            .enumerate()
            .map(|(s, (&t, ph))| ph.conj() * m[(t, s)])
            .sum()
    }
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize]| {
            v.iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(f, "x:{};z:{}", join(&self.x), join(&self.z))
    }
}

fn parse_exponents(text: &str) -> Result<(Vec<usize>, Vec<usize>)> {
    let text = text.trim();
    let (xs, zs) = text
        .split_once(';')
        .ok_or_else(|| Error::Parse(format!("expected `x:..;z:..`, got `{text}`")))?;
    let field = |part: &str, key: &str| -> Result<Vec<usize>> {
        let body = part
            .trim()
            .strip_prefix(key)
            .ok_or_else(|| Error::Parse(format!("expected `{key}` in `{part}`")))?;
        body.split(',')
            .map(|e| {
                e.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad exponent `{e}`")))
            })
            .collect()
    };
    Ok((field(xs, "x:")?, field(zs, "z:")?))
}

fn check_register(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(invalid("register needs at least one qudit"));
    }
    if let Some(&d) = dims.iter().find(|&&d| d < 2) {
        return Err(invalid(format!("qudit dimension {d} < 2")));
    }
    Ok(())
}

/// Hilbert space dimension of a register.
pub fn register_dim(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// `w^k` for `w = e^{2πi/d}`, exact at multiples of a quarter turn.
pub fn root_of_unity(d: usize, k: usize) -> Complex64 {
    let k = k % d;
    if (4 * k).is_multiple_of(d) {
        return match 4 * k / d {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64)
}

/// The table `[w⁰, w¹, …, w^{d−1}]`, built once per `d`.
pub fn roots_of_unity(d: usize) -> Arc<[Complex64]> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<[Complex64]>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("roots cache poisoned");
    guard
        .entry(d)
        .or_insert_with(|| (0..d).map(|k| root_of_unity(d, k)).collect())
        .clone()
}

/// The unitary `X^{x₁}Z^{z₁} ⊗ … ⊗ X^{xₙ}Z^{zₙ}`.
pub fn pauli_matrix(label: &PauliLabel) -> Unitary {
    let (perm, phase) = label.monomial();
    let dim = perm.len();
    let mut m = ComplexMatrix::zeros(dim, dim);
    for (s, (&t, &ph)) in perm.iter().zip(&phase).enumerate() {
        m[(t, s)] = ph;
    }
    Unitary::new_unchecked(m)
}

/// `(a, b)_Sp = x_a·z_b − z_a·x_b mod d` on a homogeneous register.
///
/// With the operator convention of this module the matrices satisfy
/// `P_a P_b = w^{(b, a)_Sp} P_b P_a`; see [`commutation_phase`].
pub fn symplectic_product(a: &PauliLabel, b: &PauliLabel) -> Result<usize> {
    if a.dims != b.dims {
        return Err(Error::DimensionMismatch("labels live on different registers".into()));
    }
    let d = a
        .d()
        .ok_or_else(|| Error::Unsupported("symplectic product on a mixed register".into()))?;
    let mut acc = 0usize;
    for site in 0..a.n() {
        acc += a.x[site] * b.z[site] + (d - a.z[site]) * b.x[site];
    }
    Ok(acc % d)
}

/// The phase `λ` with `P_a P_b = λ P_b P_a`.
pub fn commutation_phase(a: &PauliLabel, b: &PauliLabel) -> Result<Complex64> {
    if a.dims != b.dims {
        return Err(Error::DimensionMismatch("labels live on different registers".into()));
    }
    let mut phase = Complex64::new(1.0, 0.0);
    for (site, &d) in a.dims.iter().enumerate() {
        // Z^{z_a} X^{x_b} = w^{z_a x_b} X^{x_b} Z^{z_a}
        let e = a.z[site] * b.x[site] + (d - a.x[site]) * b.z[site];
        phase *= root_of_unity(d, e % d);
    }
    Ok(phase)
}

/// All `d^{2n}` labels, identity first, in lexicographic order.
pub fn enumerate_paulis(d: usize, n: usize) -> Result<Vec<PauliLabel>> {
    enumerate_register(&vec![d; n], DEFAULT_LABEL_CAP)
}

pub fn enumerate_register(dims: &[usize], cap: usize) -> Result<Vec<PauliLabel>> {
    check_register(dims)?;
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d * d))
        .unwrap_or(usize::MAX);
    if count > cap {
        return Err(Error::CapExceeded {
            what: "Pauli label set",
            size: count,
            cap,
        });
    }
    Ok((0..count).map(|i| PauliLabel::from_index(dims, i)).collect())
}

/// `Σ_x w^{(q, x)_Sp}` over all labels `x`.
pub fn character_sum(q: &PauliLabel, d: usize, n: usize) -> Result<Complex64> {
    if q.dims != vec![d; n] {
        return Err(Error::DimensionMismatch(format!(
            "label is not on {n} qudits of dimension {d}"
        )));
    }
    let roots = roots_of_unity(d);
    enumerate_paulis(d, n)?
        .iter()
        .try_fold(C_ZERO, |acc, x| Ok(acc + roots[symplectic_product(q, x)?]))
}

/// Coefficients `c_i = tr(P_i† M)/D` of `M` in the Pauli basis of `dims`.
pub fn pauli_coefficients(m: &ComplexMatrix, labels: &[PauliLabel]) -> Vec<Complex64> {
    let dim = m.rows() as f64;
    labels.iter().map(|l| l.trace_against(m) / dim).collect()
}
