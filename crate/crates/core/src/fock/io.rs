//! JSON state documents.
//!
//! Amplitudes are written as decimal strings with 17 significant digits,
//! which reproduces every `f64` bit for bit on reading.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::layout::{ModeSpec, SystemLayout};
use super::state::PureState;
use crate::error::{Error, Result};

pub const STATE_FORMAT: &str = "fermode-state";
pub const STATE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeRecord {
    pub occupation: String,
    pub re: String,
    pub im: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDocument {
    pub format: String,
    pub version: u32,
    pub normalized: bool,
    pub parties: Vec<String>,
    pub modes: Vec<ModeSpec>,
    pub amplitudes: Vec<AmplitudeRecord>,
}

pub(crate) fn exact(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_exact(s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|e| Error::Format(format!("bad number `{s}`: {e}")))
}

impl StateDocument {
    pub fn from_state(state: &PureState) -> Self {
        let layout = state.layout();
        StateDocument {
            format: STATE_FORMAT.into(),
            version: STATE_VERSION,
            normalized: state.is_normalized(),
            parties: layout.parties(),
            modes: layout.modes().to_vec(),
            amplitudes: state
                .amplitudes()
                .map(|(k, a)| AmplitudeRecord { occupation: layout.format_key(k), re: exact(a.re), im: exact(a.im) })
                .collect(),
        }
    }

    pub fn to_state(&self) -> Result<PureState> {
        if self.format != STATE_FORMAT {
            return Err(Error::Format(format!("unexpected format `{}`", self.format)));
        }
        if self.version != STATE_VERSION {
            return Err(Error::Format(format!("unsupported version {}", self.version)));
        }
        let layout = Arc::new(SystemLayout::with_registry(self.modes.clone(), self.parties.clone())?);
        let mut amps = std::collections::BTreeMap::new();
        for rec in &self.amplitudes {
            let key = layout.parse_key(&rec.occupation)?;
            let a = Complex64::new(parse_exact(&rec.re)?, parse_exact(&rec.im)?);
            if amps.insert(key, a).is_some() {
                return Err(Error::Format(format!("occupation {} listed twice", rec.occupation)));
            }
        }
        let state = PureState::from_map(layout, amps, self.normalized);
        if self.normalized {
            state.check_normalized()?;
        }
        Ok(state)
    }
}

pub fn state_to_json(state: &PureState) -> Result<String> {
    Ok(serde_json::to_string_pretty(&StateDocument::from_state(state))?)
}

pub fn state_from_json(text: &str) -> Result<PureState> {
    serde_json::from_str::<StateDocument>(text)?.to_state()
}

pub fn write_state(path: &Path, state: &PureState) -> Result<()> {
    std::fs::write(path, state_to_json(state)? + "\n")?;
    Ok(())
}

pub fn read_state(path: &Path) -> Result<PureState> {
    state_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::layout::ModeId;

    #[test]
    fn round_trip_is_bit_exact() {
        let l = Arc::new(
            SystemLayout::new(vec![
                ModeSpec::fermion("a", "A"),
                ModeSpec::boson("x", "A"),
                ModeSpec::fermion("b", "B"),
            ])
            .unwrap(),
        );
        let s = PureState::from_amplitudes(
            &l,
            [
                (0b001, Complex64::new(0.1, -1.0 / 3.0)),
                (0b110, Complex64::new(std::f64::consts::PI, 1e-300)),
                (0b111, Complex64::new(-0.0, 2.0f64.sqrt())),
            ],
        )
        .unwrap()
        .transfer_mode(ModeId(0), "B")
        .unwrap();
        let back = state_from_json(&state_to_json(&s).unwrap()).unwrap();
        assert_eq!(back.layout(), s.layout());
        let a: Vec<_> = s.amplitudes().map(|(k, v)| (k, v.re.to_bits(), v.im.to_bits())).collect();
        let b: Vec<_> = back.amplitudes().map(|(k, v)| (k, v.re.to_bits(), v.im.to_bits())).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_malformed_documents() {
        let l = Arc::new(SystemLayout::new(vec![ModeSpec::fermion("a", "A")]).unwrap());
        let mut doc = StateDocument::from_state(&PureState::vacuum(&l));
        doc.amplitudes[0].re = "0.5".into();
        assert!(doc.to_state().is_err());
        doc.amplitudes[0].re = "one".into();
        assert!(matches!(doc.to_state(), Err(Error::Format(_))));
        doc.format = "other".into();
        assert!(doc.to_state().is_err());
    }
}
