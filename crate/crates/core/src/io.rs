//! JSON reading and writing of ensembles and POVMs.
//!
//! An ensemble file looks like
//!
//! ```json
//! {
//!   "n_bits": 1,
//!   "dim": 2,
//!   "entries": [
//!     { "key": "0", "prob": 0.5, "state": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]] },
//!     { "key": "1", "prob": 0.5, "state": [[[0, 0], [0, 0]], [[0, 0], [1, 0]]] }
//!   ]
//! }
//! ```
//!
//! Matrix entries are `[re, im]` pairs, rows first. A POVM file has the same
//! shape with `elements: [{ "guess", "operator" }]`. Every validation error
//! names the offending field, e.g. `entries[1].state[0][1]`.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::discrimination::{Povm, PovmElement};
use crate::ensemble::{CqEnsemble, Entry, Key, MAX_KEY_BITS};
use crate::error::{Error, Result};
use crate::linalg::{check_density_operator, HermitianMatrix, Matrix, C64};
use crate::tol;

type Rows = Vec<Vec<C64>>;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleFile {
    n_bits: usize,
    dim: usize,
    entries: Vec<EntryFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryFile {
    key: Key,
    prob: f64,
    state: Rows,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PovmFile {
    dim: usize,
    elements: Vec<ElementFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementFile {
    guess: Key,
    operator: Rows,
}

fn schema(path: impl Into<String>, message: impl std::fmt::Display) -> Error {
    Error::Schema { path: path.into(), message: message.to_string() }
}

fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => schema(path, inner),
            _ => Error::Json { line: inner.line(), column: inner.column(), message: inner.to_string() },
        }
    })?;
    de.end().map_err(|e| Error::Json { line: e.line(), column: e.column(), message: e.to_string() })?;
    Ok(value)
}

fn to_matrix(rows: &Rows, dim: usize, path: &str) -> Result<HermitianMatrix> {
    if rows.len() != dim {
        return Err(schema(path, format!("{} rows, expected {dim}", rows.len())));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(schema(format!("{path}[{r}]"), format!("{} columns, expected {dim}", row.len())));
        }
        if let Some(c) = row.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(schema(format!("{path}[{r}][{c}]"), "entry is not finite"));
        }
    }
    let m = Matrix::from_rows(rows).map_err(|e| schema(path, e))?;
    HermitianMatrix::new(m).map_err(|e| schema(path, e))
}

fn from_matrix(m: &HermitianMatrix) -> Rows {
    (0..m.dim()).map(|r| m.row(r).to_vec()).collect()
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > tol::MAX_DIM {
        return Err(schema("dim", format!("must be in 1..={}", tol::MAX_DIM)));
    }
    Ok(())
}

pub fn parse_ensemble(text: &str) -> Result<CqEnsemble> {
    let file: EnsembleFile = from_json(text)?;
    if file.n_bits == 0 || file.n_bits > MAX_KEY_BITS {
        return Err(schema("n_bits", format!("must be in 1..={MAX_KEY_BITS}")));
    }
    check_dim(file.dim)?;
    if file.entries.is_empty() {
        return Err(schema("entries", "at least one entry is required"));
    }
    let mut entries = Vec::with_capacity(file.entries.len());
    for (i, e) in file.entries.into_iter().enumerate() {
        if e.key.len() != file.n_bits {
            return Err(schema(format!("entries[{i}].key"), format!("{} bits, expected {}", e.key.len(), file.n_bits)));
        }
        if !(0.0..=1.0).contains(&e.prob) {
            return Err(schema(format!("entries[{i}].prob"), format!("{} is outside [0, 1]", e.prob)));
        }
        let path = format!("entries[{i}].state");
        let state = to_matrix(&e.state, file.dim, &path)?;
        check_density_operator(&state).map_err(|err| schema(&path, err))?;
        entries.push(Entry { key: e.key, prob: e.prob, state });
    }
    CqEnsemble::new(file.n_bits, entries).map_err(|e| schema("entries", e))
}

/// Pretty-printed JSON. Numbers are written in shortest round-trip form, so
/// parsing the output reproduces the ensemble exactly.
pub fn ensemble_to_json(ens: &CqEnsemble) -> String {
    let file = EnsembleFile {
        n_bits: ens.n_bits(),
        dim: ens.dim(),
        entries: ens
            .entries()
            .iter()
            .map(|e| EntryFile { key: e.key.clone(), prob: e.prob, state: from_matrix(&e.state) })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("ensembles serialize")
}

pub fn parse_povm(text: &str) -> Result<Povm> {
    let file: PovmFile = from_json(text)?;
    check_dim(file.dim)?;
    let mut elements = Vec::with_capacity(file.elements.len());
    for (i, e) in file.elements.into_iter().enumerate() {
        let operator = to_matrix(&e.operator, file.dim, &format!("elements[{i}].operator"))?;
        elements.push(PovmElement { operator, guess: e.guess });
    }
    Povm::new(elements).map_err(|e| schema("elements", e))
}

pub fn povm_to_json(povm: &Povm) -> String {
    let file = PovmFile {
        dim: povm.dim(),
        elements: povm
            .elements()
            .iter()
            .map(|e| ElementFile { guess: e.guess.clone(), operator: from_matrix(&e.operator) })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("POVMs serialize")
}
