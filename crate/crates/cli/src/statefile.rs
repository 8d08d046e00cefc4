//! JSON state files.

use std::path::Path;

use dssep::{DsState, SymmetricNQubitState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub i: usize,
    pub j: usize,
    #[serde(alias = "weight")]
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum StateFile {
    #[serde(rename = "bipartite_ds")]
    BipartiteDs {
        #[serde(default = "default_version")]
        version: String,
        d: usize,
        entries: Vec<Entry>,
        #[serde(default)]
        normalized: bool,
    },
    #[serde(rename = "multiqubit")]
    Multiqubit {
        #[serde(default = "default_version")]
        version: String,
        n: usize,
        /// Dicke-basis diagonal `C(N,k) lambda_k`.
        diag: Vec<f64>,
        sigma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coherence_pair: Option<(usize, usize)>,
        /// Defaults to the sum of `diag`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        normalization: Option<f64>,
    },
}

fn default_version() -> String {
    FORMAT_VERSION.to_string()
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("schema: {0}")]
    Schema(serde_json::Error),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field(field: impl Into<String>, message: impl ToString) -> ParseError {
    ParseError::Field {
        field: field.into(),
        message: message.to_string(),
    }
}

pub enum State {
    Bipartite(DsState),
    Multiqubit(SymmetricNQubitState),
}

impl StateFile {
    pub fn read(path: &Path) -> Result<Self, ParseError> {
        let text = std::fs::read_to_string(path).map_err(|source| ParseError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let file = StateFile::deserialize(value).map_err(ParseError::Schema)?;
        let version = match &file {
            StateFile::BipartiteDs { version, .. } | StateFile::Multiqubit { version, .. } => version,
        };
        if version != FORMAT_VERSION {
            return Err(field("version", format!("unsupported version {version:?}")));
        }
        Ok(file)
    }

    pub fn from_ds(rho: &DsState) -> Self {
        StateFile::BipartiteDs {
            version: default_version(),
            d: rho.d(),
            entries: rho.weights().map(|((i, j), w)| Entry { i, j, w }).collect(),
            normalized: rho.is_normalized(),
        }
    }

    pub fn from_multiqubit(s: &SymmetricNQubitState) -> Self {
        StateFile::Multiqubit {
            version: default_version(),
            n: s.n_qubits(),
            diag: s.diag().to_vec(),
            sigma: s.coherence(),
            coherence_pair: Some(s.coherence_pair()),
            normalization: Some(s.normalization()),
        }
    }

    /// Validates into a state; `normalize` rescales bipartite weights to unit trace.
    pub fn to_state(&self, normalize: bool) -> Result<State, ParseError> {
        match self {
            StateFile::BipartiteDs {
                d,
                entries,
                normalized,
                ..
            } => {
                for (k, e) in entries.iter().enumerate() {
                    if e.i > e.j || e.j >= *d {
                        return Err(field(
                            format!("entries[{k}]"),
                            format!("pair ({},{}) needs i <= j < d = {d}", e.i, e.j),
                        ));
                    }
                }
                let weights = entries.iter().map(|e| ((e.i, e.j), e.w));
                let rho = DsState::new(*d, weights, *normalized && !normalize)
                    .map_err(|e| field(bipartite_field(&e, entries), e))?;
                let rho = if normalize {
                    rho.normalized().map_err(|e| field("entries", e))?
                } else {
                    rho
                };
                Ok(State::Bipartite(rho))
            }
            StateFile::Multiqubit {
                n,
                diag,
                sigma,
                coherence_pair,
                normalization,
                ..
            } => {
                let norm = normalization.unwrap_or_else(|| diag.iter().sum());
                let pair = coherence_pair.unwrap_or((0, *n));
                SymmetricNQubitState::new(*n, diag.clone(), *sigma, pair, norm)
                    .map(State::Multiqubit)
                    .map_err(|e| {
                        let name = match e {
                            dssep::Error::DimensionMismatch { .. } | dssep::Error::NegativeWeight { .. } => "diag",
                            _ => "n",
                        };
                        field(name, e)
                    })
            }
        }
    }
}

fn bipartite_field(e: &dssep::Error, entries: &[Entry]) -> String {
    let locate = |i: usize, j: usize| {
        entries
            .iter()
            .rposition(|en| (en.i, en.j) == (i, j))
            .map_or("entries".to_string(), |k| format!("entries[{k}]"))
    };
    match e {
        dssep::Error::NegativeWeight { i, j, .. } | dssep::Error::DuplicateEntry { i, j } => {
            format!("{}.w", locate(*i, *j))
        }
        dssep::Error::DimensionTooSmall(_) => "d".into(),
        dssep::Error::BadNormalization { .. } => "normalized".into(),
        _ => "entries".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_bipartite() {
        let f = StateFile::parse(
            r#"{"version":"1","kind":"bipartite_ds","d":2,"entries":[{"i":0,"j":0,"w":1.0}],"normalized":true}"#,
        )
        .unwrap();
        assert!(matches!(f.to_state(false).unwrap(), State::Bipartite(_)));
    }

    #[test]
    fn parses_multiqubit_without_version() {
        let f = StateFile::parse(r#"{"kind":"multiqubit","n":2,"diag":[1,2,1],"sigma":0.5}"#).unwrap();
        match f.to_state(false).unwrap() {
            State::Multiqubit(s) => assert_eq!(s.normalization(), 4.0),
            _ => panic!(),
        }
    }

    #[test]
    fn reports_field_context() {
        let f = StateFile::parse(
            r#"{"kind":"bipartite_ds","d":3,"entries":[{"i":0,"j":0,"w":1},{"i":0,"j":1,"w":-0.1}]}"#,
        )
        .unwrap();
        let err = f.to_state(false).err().unwrap().to_string();
        assert!(err.contains("entries[1].w"), "{err}");
        let err = StateFile::parse(r#"{"kind":"bipartite_ds","d":3}"#).unwrap_err().to_string();
        assert!(err.contains("`entries`"), "{err}");
        let err = StateFile::parse("{\n\"kind\": \"bipartite_ds\",\n\"d\": 3,,\n}").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let err = StateFile::parse(r#"{"kind":"bipartite_ds","version":"2","d":3,"entries":[]}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("version"));
    }
}
