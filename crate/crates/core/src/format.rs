//! Plain-text scenario and solution files.
//!
//! ```text
//! # comment
//! kind = explicit
//! n = 2
//! [Kxx] 2 2
//! 1 0.5,-0.25
//! 0.5,0.25 2
//! ```
//!
//! `key = value` lines and matrix sections `[Name] rows cols` followed by
//! `rows` lines of `cols` whitespace-separated entries. An entry is `re` or
//! `re,im`. Floats are written with the shortest representation that parses
//! back to the same value, so writing and re-reading is lossless.
//!
//! Scenario kinds:
//!
//! * `identity_block`: `n`, `rho`, `sigma`, optional `tau` (defaults to
//!   `conj(sigma) rho`); complex values are written `re,im`.
//! * `wishart`: `n`, `seed`, optional `field` (`real` or `complex`).
//! * `explicit`: sections `Kxx Kxy Kxz Kyy Kyz Kzz`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex;

use crate::covmodel::{default_tau, Field, JointChannelCovariance, ScenarioSpec};
use crate::error::Error;
use crate::scalar::Real;
use crate::solver::{AttackParameters, AttackSolution};
use crate::CMatrix;

const BLOCKS: [&str; 6] = ["Kxx", "Kxy", "Kxz", "Kyy", "Kyz", "Kzz"];

/// Raw contents of a file: keys and matrix sections, with line numbers.
#[derive(Debug, Clone)]
struct Document<T: Real> {
    keys: BTreeMap<String, (usize, String)>,
    sections: BTreeMap<String, (usize, CMatrix<T>)>,
}

impl<T: Real> Document<T> {
    fn parse(text: &str) -> Result<Self, Error<T>> {
        let mut keys = BTreeMap::new();
        let mut sections = BTreeMap::new();
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, strip_comment(l)));
        while let Some((no, line)) = lines.next() {
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let (name, dims) = rest.split_once(']').ok_or_else(|| Error::parse(no, "unterminated section name"))?;
                let name = name.trim().to_string();
                let mut it = dims.split_whitespace();
                let mut dim = |what| -> Result<usize, Error<T>> {
                    it.next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| Error::parse(no, format!("section [{name}] needs a {what} count")))
                };
                let (rows, cols) = (dim("row")?, dim("column")?);
                let mut m = CMatrix::<T>::zeros(rows, cols);
                for r in 0..rows {
                    let (rno, row) = lines
                        .by_ref()
                        .find(|(_, l)| !l.is_empty())
                        .ok_or_else(|| Error::parse(no, format!("section [{name}] ends after {r} of {rows} rows")))?;
                    let entries: Vec<&str> = row.split_whitespace().collect();
                    if entries.len() != cols {
                        return Err(Error::parse(rno, format!("[{name}] row {r} has {} entries, expected {cols}", entries.len())));
                    }
                    for (c, tok) in entries.iter().enumerate() {
                        m[(r, c)] = parse_complex(tok).ok_or_else(|| Error::parse(rno, format!("bad entry '{tok}'")))?;
                    }
                }
                if sections.insert(name.clone(), (no, m)).is_some() {
                    return Err(Error::parse(no, format!("duplicate section [{name}]")));
                }
            } else {
                let (k, v) = line.split_once('=').ok_or_else(|| Error::parse(no, "expected 'key = value' or '[Section] rows cols'"))?;
                let k = k.trim().to_string();
                if keys.insert(k.clone(), (no, v.trim().to_string())).is_some() {
                    return Err(Error::parse(no, format!("duplicate key '{k}'")));
                }
            }
        }
        Ok(Self { keys, sections })
    }

    fn raw(&self, key: &str) -> Result<(usize, &str), Error<T>> {
        self.keys
            .get(key)
            .map(|(no, v)| (*no, v.as_str()))
            .ok_or_else(|| Error::parse(0, format!("missing key '{key}'")))
    }

    fn get<V: std::str::FromStr>(&self, key: &str) -> Result<V, Error<T>> {
        let (no, v) = self.raw(key)?;
        v.parse().map_err(|_| Error::parse(no, format!("cannot parse '{key}' from '{v}'")))
    }

    fn real(&self, key: &str) -> Result<T, Error<T>> {
        let (no, v) = self.raw(key)?;
        T::parse_lit(v).ok_or_else(|| Error::parse(no, format!("'{key}' is not a number: '{v}'")))
    }

    fn complex(&self, key: &str) -> Result<Complex<T>, Error<T>> {
        let (no, v) = self.raw(key)?;
        parse_complex(v).ok_or_else(|| Error::parse(no, format!("'{key}' is not a number: '{v}'")))
    }

    fn matrix(&self, name: &str) -> Result<CMatrix<T>, Error<T>> {
        self.sections
            .get(name)
            .map(|(_, m)| m.clone())
            .ok_or_else(|| Error::parse(0, format!("missing section [{name}]")))
    }
}

fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(a, _)| a).trim()
}

fn parse_complex<T: Real>(tok: &str) -> Option<Complex<T>> {
    match tok.split_once(',') {
        Some((re, im)) => Some(Complex::new(T::parse_lit(re)?, T::parse_lit(im)?)),
        None => Some(Complex::new(T::parse_lit(tok)?, T::zero())),
    }
}

fn fmt_complex<T: Real>(v: Complex<T>) -> String {
    if v.im == T::zero() {
        format!("{}", v.re)
    } else {
        format!("{},{}", v.re, v.im)
    }
}

fn write_matrix<T: Real>(out: &mut String, name: &str, m: &CMatrix<T>) {
    let _ = writeln!(out, "[{name}] {} {}", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| fmt_complex(m[(r, c)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

fn write_blocks<T: Real>(out: &mut String, k: &JointChannelCovariance<T>) {
    let blocks = [k.kxx(), k.kxy(), k.kxz(), k.kyy(), k.kyz(), k.kzz()];
    for (name, m) in BLOCKS.iter().zip(blocks) {
        write_matrix(out, name, m);
    }
}

fn read_blocks<T: Real>(doc: &Document<T>) -> Result<JointChannelCovariance<T>, Error<T>> {
    let [kxx, kxy, kxz, kyy, kyz, kzz] = BLOCKS.map(|b| doc.matrix(b));
    JointChannelCovariance::from_blocks(kxx?, kxy?, kxz?, kyy?, kyz?, kzz?)
}

/// Parse a scenario description. Shapes are checked; covariance invariants
/// are left to [`JointChannelCovariance::validate`].
pub fn parse_scenario<T: Real>(text: &str) -> Result<ScenarioSpec<T>, Error<T>> {
    let doc = Document::<T>::parse(text)?;
    let kind: String = doc.get("kind")?;
    match kind.as_str() {
        "identity_block" => {
            let rho = doc.complex("rho")?;
            let sigma = doc.complex("sigma")?;
            let tau = if doc.keys.contains_key("tau") { doc.complex("tau")? } else { default_tau(rho, sigma) };
            Ok(ScenarioSpec::IdentityBlock { n: doc.get("n")?, rho, sigma, tau })
        }
        "wishart" => {
            let field = if doc.keys.contains_key("field") { doc.get::<Field>("field")? } else { Field::Real };
            Ok(ScenarioSpec::Wishart { n: doc.get("n")?, seed: doc.get("seed")?, field })
        }
        "explicit" => Ok(ScenarioSpec::Explicit(read_blocks(&doc)?)),
        other => Err(Error::parse(
            doc.keys["kind"].0,
            format!("unknown scenario kind '{other}' (expected identity_block, wishart or explicit)"),
        )),
    }
}

pub fn write_scenario<T: Real>(spec: &ScenarioSpec<T>) -> String {
    let mut out = String::new();
    match spec {
        ScenarioSpec::IdentityBlock { n, rho, sigma, tau } => {
            let _ = writeln!(out, "kind = identity_block");
            let _ = writeln!(out, "n = {n}");
            let _ = writeln!(out, "rho = {}", fmt_complex(*rho));
            let _ = writeln!(out, "sigma = {}", fmt_complex(*sigma));
            let _ = writeln!(out, "tau = {}", fmt_complex(*tau));
        }
        ScenarioSpec::Wishart { n, seed, field } => {
            let _ = writeln!(out, "kind = wishart");
            let _ = writeln!(out, "n = {n}");
            let _ = writeln!(out, "seed = {seed}");
            let _ = writeln!(out, "field = {field}");
        }
        ScenarioSpec::Explicit(k) => {
            let _ = writeln!(out, "kind = explicit");
            write_blocks(&mut out, k);
        }
    }
    out
}

/// Everything needed to re-check a solution without re-solving: the
/// scenario blocks, `(Z, C)` and the summary numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRecord<T: Real = f64> {
    pub covariance: JointChannelCovariance<T>,
    pub params: AttackParameters<T>,
    pub j_star: T,
    pub d_star: T,
    pub stationarity_residual: T,
    pub iterations: usize,
    pub converged: bool,
    pub projected: bool,
    pub j_cf: Option<T>,
    pub eta: Option<T>,
    /// Free-form `config.<key> = value` lines, e.g. the run configuration.
    pub config: Vec<(String, String)>,
}

impl<T: Real> SolutionRecord<T> {
    pub fn new(covariance: JointChannelCovariance<T>, solution: &AttackSolution<T>, config: Vec<(String, String)>) -> Self {
        Self {
            covariance,
            params: solution.params.clone(),
            j_star: solution.j_star,
            d_star: solution.d_star,
            stationarity_residual: solution.stationarity_residual,
            iterations: solution.iterations,
            converged: solution.converged,
            projected: solution.projected(),
            j_cf: solution.relaxed.as_ref().map(|r| r.j_cf),
            eta: solution.eta(),
            config,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# attack solution\n");
        let _ = writeln!(out, "j_star = {}", self.j_star);
        let _ = writeln!(out, "d_star = {}", self.d_star);
        let _ = writeln!(out, "stationarity_residual = {}", self.stationarity_residual);
        let _ = writeln!(out, "iterations = {}", self.iterations);
        let _ = writeln!(out, "converged = {}", self.converged);
        let _ = writeln!(out, "projected = {}", self.projected);
        if let Some(v) = self.j_cf {
            let _ = writeln!(out, "j_cf = {v}");
        }
        if let Some(v) = self.eta {
            let _ = writeln!(out, "eta = {v}");
        }
        for (k, v) in &self.config {
            let _ = writeln!(out, "config.{k} = {v}");
        }
        write_matrix(&mut out, "Z", &self.params.z);
        write_matrix(&mut out, "C", &self.params.c);
        write_blocks(&mut out, &self.covariance);
        out
    }

    pub fn parse(text: &str) -> Result<Self, Error<T>> {
        let doc = Document::<T>::parse(text)?;
        let optional = |key: &str| if doc.keys.contains_key(key) { doc.real(key).map(Some) } else { Ok(None) };
        let covariance = read_blocks(&doc)?;
        let params = AttackParameters { z: doc.matrix("Z")?, c: doc.matrix("C")? };
        let (n, m) = (covariance.n(), covariance.m());
        if params.z.shape() != (n, m) || params.c.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "Z is {:?} and C is {:?}; scenario needs ({n}, {m}) and ({n}, {n})",
                params.z.shape(),
                params.c.shape()
            )));
        }
        let config = doc
            .keys
            .iter()
            .filter_map(|(k, (_, v))| k.strip_prefix("config.").map(|k| (k.to_string(), v.clone())))
            .collect();
        Ok(Self {
            j_star: doc.real("j_star")?,
            d_star: doc.real("d_star")?,
            stationarity_residual: doc.real("stationarity_residual")?,
            iterations: doc.get("iterations")?,
            converged: doc.get("converged")?,
            projected: doc.get("projected")?,
            j_cf: optional("j_cf")?,
            eta: optional("eta")?,
            covariance,
            params,
            config,
        })
    }
}
