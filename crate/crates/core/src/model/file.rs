//! Human-readable model files.
//!
//! Coupling tensors are given as sparse entry lists; each entry also sets its
//! Hermitian partner. Units are part of the field names.

use serde::{Deserialize, Serialize};

use super::{ChannelKind, InitialStateSpec, LindbladChannel, ModeSpec, VCModel, RAD_PER_THZ};
use crate::error::{Error, Result};
use crate::quantum::C64;

/// The shipped pyrazine model.
pub const PYRAZINE_MODEL_TOML: &str = include_str!("../../models/pyrazine.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub electronic_states: usize,
    pub cutoffs: Vec<usize>,
    pub modes: Vec<ModeEntry>,
    #[serde(default)]
    pub c0: Vec<C0Entry>,
    #[serde(default)]
    pub c1: Vec<C1Entry>,
    #[serde(default)]
    pub c2: Vec<C2Entry>,
    pub initial_state: InitialEntry,
    #[serde(default)]
    pub channels: Vec<ChannelEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    pub freq_over_2pi_thz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct C0Entry {
    pub n: usize,
    pub m: usize,
    pub value_over_2pi_thz: f64,
    #[serde(default)]
    pub imag_over_2pi_thz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct C1Entry {
    pub n: usize,
    pub m: usize,
    pub mode: usize,
    pub value_over_2pi_thz: f64,
    #[serde(default)]
    pub imag_over_2pi_thz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct C2Entry {
    pub n: usize,
    pub m: usize,
    pub j: usize,
    pub k: usize,
    pub value_over_2pi_thz: f64,
    #[serde(default)]
    pub imag_over_2pi_thz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialEntry {
    pub electronic: usize,
    #[serde(default)]
    pub displacements: Vec<DisplacementEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplacementEntry {
    pub mode: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelEntry {
    #[serde(flatten)]
    pub kind: ChannelKind,
    pub rate_per_s: f64,
}

fn thz(re: f64, im: f64) -> C64 {
    C64::new(re * RAD_PER_THZ, im * RAD_PER_THZ)
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn pyrazine() -> Self {
        Self::parse(PYRAZINE_MODEL_TOML).expect("shipped model parses")
    }

    pub fn model(&self) -> Result<VCModel> {
        let modes = self
            .modes
            .iter()
            .map(|m| ModeSpec::from_thz(m.freq_over_2pi_thz))
            .collect::<Result<Vec<_>>>()?;
        let mut model = VCModel::new(self.electronic_states, modes)?;
        for e in &self.c0 {
            model.set_c0(e.n, e.m, thz(e.value_over_2pi_thz, e.imag_over_2pi_thz))?;
        }
        for e in &self.c1 {
            model.set_c1(e.n, e.m, e.mode, thz(e.value_over_2pi_thz, e.imag_over_2pi_thz))?;
        }
        for e in &self.c2 {
            model.set_c2(e.n, e.m, e.j, e.k, thz(e.value_over_2pi_thz, e.imag_over_2pi_thz))?;
        }
        model.validate()?;
        Ok(model)
    }

    pub fn initial_state(&self) -> Result<InitialStateSpec> {
        let n_modes = self.modes.len();
        let mut displacements = vec![C64::new(0.0, 0.0); n_modes];
        for d in &self.initial_state.displacements {
            if d.mode >= n_modes {
                return Err(Error::InvalidArgument(format!("displacement on unknown mode {}", d.mode)));
            }
            displacements[d.mode] = C64::new(d.re, d.im);
        }
        Ok(InitialStateSpec {
            electronic: self.initial_state.electronic,
            displacements,
        })
    }

    pub fn channels(&self) -> Result<Vec<LindbladChannel>> {
        let model = self.model()?;
        self.channels
            .iter()
            .map(|c| {
                let ch = LindbladChannel::new(c.kind, c.rate_per_s)?;
                ch.validate(&model)?;
                Ok(ch)
            })
            .collect()
    }
}
