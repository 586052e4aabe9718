//! Text specifications for gate sets, channels and single gates.
//!
//! Set specs: `pauli:d=2,n=1`, `clifford:d=2,n=1`, `controlled:d=2`,
//! `toffoli`, `ms:n=2,theta=0.785`, `dressed:d=2,n=1,u=<file>`,
//! `custom:<file>` or `custom:d=2,n=2,file=<file>`.
//!
//! Channel specs: `identity`, `dephasing:p=0.01`, `depolarizing:p=0.01`,
//! `infidelity-dephasing:r=1e-4`, `kraus:<file>`.
//!
//! Gate specs: `i`, `x`, `y`, `z`, `h`, `s`, `t` (qubit), `cnot`, `cz`
//! (two qubits), or a matrix file path.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gatesets::{
    build_clifford_set, build_controlled_set, build_dressed_set, build_ms_dressed_set, build_pauli_set,
    build_toffoli_set, GateSet,
};
use crate::io::read_matrices;
use crate::noise::{infidelity_to_dephasing, Channel};
use crate::qlinalg::{ComplexMatrix, Unitary};

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Splits `name:key=value,...` into the name and its arguments.
fn split_spec(spec: &str) -> (String, &str) {
    let spec = spec.trim();
    match spec.split_once(':') {
        Some((name, rest)) => (name.trim().to_ascii_lowercase(), rest.trim()),
        None => (spec.to_ascii_lowercase(), ""),
    }
}

fn key_values(args: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    if args.is_empty() {
        return Ok(out);
    }
    for part in args.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected key=value, got `{part}`")))?;
        if out.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(parse_err(format!("duplicate key `{}`", k.trim())));
        }
    }
    Ok(out)
}

struct Args {
    what: String,
    map: BTreeMap<String, String>,
}

impl Args {
    fn new(what: &str, args: &str, allowed: &[&str]) -> Result<Self> {
        let map = key_values(args)?;
        if let Some(k) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(parse_err(format!("unknown key `{k}` for {what}")));
        }
        Ok(Self {
            what: what.to_string(),
            map,
        })
    }

    fn raw(&self, key: &str) -> Result<&str> {
        self.map
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| parse_err(format!("{} needs `{key}=`", self.what)))
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key)?;
        raw.parse()
            .map_err(|_| parse_err(format!("bad value `{raw}` for `{key}` in {}", self.what)))
    }

    fn num_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        if self.map.contains_key(key) {
            self.num(key)
        } else {
            Ok(default)
        }
    }
}

/// Parses a set spec; file paths are resolved relative to `base`.
pub fn parse_set_in(spec: &str, base: &Path) -> Result<GateSet> {
    let (name, rest) = split_spec(spec);
    match name.as_str() {
        "pauli" => {
            let a = Args::new("pauli", rest, &["d", "n"])?;
            build_pauli_set(a.num_or("d", 2)?, a.num_or("n", 1)?)
        }
        "clifford" => {
            let a = Args::new("clifford", rest, &["d", "n"])?;
            build_clifford_set(a.num_or("d", 2)?, a.num_or("n", 1)?)
        }
        "controlled" => {
            let a = Args::new("controlled", rest, &["d"])?;
            build_controlled_set(a.num_or("d", 2)?)
        }
        "toffoli" => {
            Args::new("toffoli", rest, &[])?;
            build_toffoli_set()
        }
        "ms" => {
            let a = Args::new("ms", rest, &["n", "theta"])?;
            build_ms_dressed_set(a.num_or("n", 2)?, a.num("theta")?)
        }
        "dressed" => {
            let a = Args::new("dressed", rest, &["d", "n", "u"])?;
            let u = single_matrix(&base.join(a.raw("u")?))?;
            build_dressed_set(&u, a.num_or("d", 2)?, a.num_or("n", 1)?)
        }
        "custom" => {
            let (dims, file) = if rest.contains('=') {
                let a = Args::new("custom", rest, &["d", "n", "file"])?;
                let (d, n): (usize, usize) = (a.num("d")?, a.num("n")?);
                (Some(vec![d; n]), a.raw("file")?.to_string())
            } else {
                (None, rest.to_string())
            };
            if file.is_empty() {
                return Err(parse_err("custom set needs a matrix file"));
            }
            let mats = read_matrices(&base.join(&file))?;
            let dim = mats[0].rows();
            let dims = dims.unwrap_or_else(|| vec![dim]);
            GateSet::custom(&dims, mats)
        }
        "" => Err(parse_err("empty set spec")),
        other => Err(parse_err(format!("unknown set family `{other}`"))),
    }
}

pub fn parse_set(spec: &str) -> Result<GateSet> {
    parse_set_in(spec, Path::new("."))
}

/// Parses a channel spec acting on a register of shape `dims`.
pub fn parse_channel_in(spec: &str, dims: &[usize], base: &Path) -> Result<Channel> {
    let (name, rest) = split_spec(spec);
    match name.as_str() {
        "identity" | "none" => {
            Args::new("identity", rest, &[])?;
            Ok(Channel::identity(dims))
        }
        "dephasing" => Channel::dephasing(dims, Args::new("dephasing", rest, &["p"])?.num("p")?),
        "depolarizing" => Channel::depolarizing(dims, Args::new("depolarizing", rest, &["p"])?.num("p")?),
        "infidelity-dephasing" => {
            infidelity_to_dephasing(Args::new("infidelity-dephasing", rest, &["r"])?.num("r")?, dims)
        }
        "kraus" => {
            if rest.is_empty() {
                return Err(parse_err("kraus channel needs a matrix file"));
            }
            Channel::from_kraus(dims, read_matrices(&base.join(rest))?)
        }
        "" => Err(parse_err("empty channel spec")),
        other => Err(parse_err(format!("unknown channel `{other}`"))),
    }
}

pub fn parse_channel(spec: &str, dims: &[usize]) -> Result<Channel> {
    parse_channel_in(spec, dims, Path::new("."))
}

/// Parses a named gate or a single-matrix file.
pub fn parse_gate_in(spec: &str, base: &Path) -> Result<Unitary> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let r = |x: f64| c(x, 0.0);
    let h = FRAC_1_SQRT_2;
    let rows: Option<Vec<Vec<Complex64>>> = match spec.trim().to_ascii_lowercase().as_str() {
        "i" => Some(vec![vec![r(1.0), r(0.0)], vec![r(0.0), r(1.0)]]),
        "x" => Some(vec![vec![r(0.0), r(1.0)], vec![r(1.0), r(0.0)]]),
        "y" => Some(vec![vec![r(0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), r(0.0)]]),
        "z" => Some(vec![vec![r(1.0), r(0.0)], vec![r(0.0), r(-1.0)]]),
        "h" => Some(vec![vec![r(h), r(h)], vec![r(h), r(-h)]]),
        "s" => Some(vec![vec![r(1.0), r(0.0)], vec![r(0.0), c(0.0, 1.0)]]),
        "t" => Some(vec![vec![r(1.0), r(0.0)], vec![r(0.0), c(h, h)]]),
        "cnot" | "cx" => Some(permutation_rows(&[0, 1, 3, 2])),
        "cz" => Some(
            (0..4)
                .map(|i| (0..4).map(|j| r(if i != j { 0.0 } else if i == 3 { -1.0 } else { 1.0 })).collect())
                .collect(),
        ),
        _ => None,
    };
    match rows {
        Some(rows) => Unitary::new(ComplexMatrix::from_rows(&rows)?),
        None => Unitary::new(single_matrix(&base.join(spec.trim()))?),
    }
}

pub fn parse_gate(spec: &str) -> Result<Unitary> {
    parse_gate_in(spec, Path::new("."))
}

fn permutation_rows(perm: &[usize]) -> Vec<Vec<Complex64>> {
    perm.iter()
        .map(|&p| (0..perm.len()).map(|j| Complex64::new(f64::from(u8::from(j == p)), 0.0)).collect())
        .collect()
}

fn single_matrix(path: &Path) -> Result<ComplexMatrix> {
    let mut mats = read_matrices(path)?;
    if mats.len() != 1 {
        return Err(parse_err(format!("{} holds {} matrices, expected one", path.display(), mats.len())));
    }
    Ok(mats.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gatesets::check_condition;
    use crate::gatesets::Family;
    use crate::io::write_matrices;

    #[test]
    fn set_specs() {
        assert_eq!(parse_set("pauli:d=2,n=1").unwrap().len(), 4);
        assert_eq!(parse_set("pauli:d=3,n=1").unwrap().len(), 9);
        assert_eq!(parse_set("clifford:d=2,n=1").unwrap().len(), 24);
        assert_eq!(parse_set("controlled:d=2").unwrap().family(), Family::ControlledPauli);
        assert_eq!(parse_set(" MS:n=2, theta=0.3 ").unwrap().family(), Family::MsDressed);
        assert!(parse_set("pauli").is_ok());
    }

    #[test]
    fn bad_set_specs() {
        for bad in ["", "nope:d=2", "pauli:d=2,d=3", "pauli:q=2", "pauli:d=x", "ms:n=2", "custom:", "pauli:d"] {
            assert!(matches!(parse_set(bad), Err(Error::Parse(_))), "{bad}");
        }
        assert!(parse_set("clifford:d=5,n=1").is_err());
    }

    #[test]
    fn file_backed_specs() {
        let dir = tempfile::tempdir().unwrap();
        let z = parse_gate("z").unwrap().into_inner();
        let id = parse_gate("i").unwrap().into_inner();
        write_matrices(&dir.path().join("iz.txt"), &[id.clone(), z.clone()]).unwrap();
        let set = parse_set_in("custom:iz.txt", dir.path()).unwrap();
        let report = check_condition(&set).unwrap();
        assert!(!report.passed);
        assert_eq!(report.worst_label.to_string(), "x:0;z:1");
        let h = parse_gate("h").unwrap().into_inner();
        write_matrices(&dir.path().join("h.txt"), &[h]).unwrap();
        let dressed = parse_set_in("dressed:d=2,n=1,u=h.txt", dir.path()).unwrap();
        assert!(check_condition(&dressed).unwrap().passed);
        assert!(parse_gate_in("h.txt", dir.path()).is_ok());
        assert!(parse_gate_in("iz.txt", dir.path()).is_err());

        let p: f64 = 0.1;
        let k0 = id.scale_real((1.0 - p).sqrt());
        let k1 = z.scale_real(p.sqrt());
        write_matrices(&dir.path().join("k.txt"), &[k0, k1]).unwrap();
        let ch = parse_channel_in("kraus:k.txt", &[2], dir.path()).unwrap();
        assert!((ch.chi00() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn channel_specs() {
        let ch = parse_channel("dephasing:p=0.01", &[2]).unwrap();
        assert!((ch.chi00() - 0.99).abs() < 1e-12);
        assert!(parse_channel("identity", &[2]).unwrap().is_identity());
        let ch = parse_channel("infidelity-dephasing:r=1e-4", &[2]).unwrap();
        assert!((ch.chi00() - 0.99985).abs() < 1e-12);
        assert!(parse_channel("depolarizing:p=0.02", &[2, 2]).is_ok());
        assert!(parse_channel("dephasing:p=2", &[2]).is_err());
        assert!(parse_channel("amplitude:p=0.1", &[2]).is_err());
        assert!(parse_channel("dephasing", &[2]).is_err());
    }

    #[test]
    fn named_gates_are_unitary() {
        for g in ["i", "x", "y", "z", "h", "s", "t", "cnot", "cz"] {
            assert!(parse_gate(g).unwrap().unitarity_residual() < 1e-15);
        }
    }
}
