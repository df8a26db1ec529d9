use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::coupling::CouplingMatrix;
use crate::error::{Error, Result};

/// The four bipartite couplings.
///
/// * `H1`: `Σ J_ij/n · σx τx`
/// * `H2`: `Σ J_ij/n · (σx τx + σz τz)`
/// * `H3`: `Σ J_ij/(2n) · (σx τx + σy τy)`
/// * `H4`: `Σ J_ij/(2n) · (σx τx + σy τy + σz τz)`
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    H1,
    H2,
    H3,
    H4,
}

/// Output-space class: `I` spreads over all `2^{2n}` strings, `II` stays
/// inside the weight-`n` sector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelClass {
    I,
    II,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::H1, ModelKind::H2, ModelKind::H3, ModelKind::H4];

    pub fn class(self) -> ModelClass {
        match self {
            ModelKind::H1 | ModelKind::H2 => ModelClass::I,
            ModelKind::H3 | ModelKind::H4 => ModelClass::II,
        }
    }

    /// Whether the total z-magnetization is conserved.
    pub fn conserves_weight(self) -> bool {
        self.class() == ModelClass::II
    }

    /// Prefactor `c` in the bound `‖H‖ ≤ c · Σ|J_ij| / n`, as printed.
    pub fn norm_prefactor(self) -> f64 {
        match self {
            ModelKind::H1 | ModelKind::H3 => 1.0,
            ModelKind::H2 => 2.0,
            ModelKind::H4 => 1.5,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelKind::H1 => "H1",
            ModelKind::H2 => "H2",
            ModelKind::H3 => "H3",
            ModelKind::H4 => "H4",
        };
        f.write_str(s)
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "H1" => Ok(ModelKind::H1),
            "H2" => Ok(ModelKind::H2),
            "H3" => Ok(ModelKind::H3),
            "H4" => Ok(ModelKind::H4),
            _ => Err(Error::invalid(format!("unknown model `{s}`"))),
        }
    }
}

/// Local z fields `Σ h1_i σz_i + Σ h2_j τz_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZFields {
    pub sigma: Vec<f64>,
    pub tau: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    kind: ModelKind,
    couplings: CouplingMatrix,
    z_fields: Option<ZFields>,
}

impl HamiltonianSpec {
    pub fn new(kind: ModelKind, couplings: CouplingMatrix) -> Self {
        HamiltonianSpec {
            kind,
            couplings,
            z_fields: None,
        }
    }

    pub fn with_z_fields(mut self, sigma: Vec<f64>, tau: Vec<f64>) -> Result<Self> {
        let n = self.n();
        if sigma.len() != n || tau.len() != n {
            return Err(Error::invalid(format!(
                "z fields must have length n = {n}, got {} and {}",
                sigma.len(),
                tau.len()
            )));
        }
        if sigma.iter().chain(&tau).any(|v| !v.is_finite()) {
            return Err(Error::invalid("z fields must be finite"));
        }
        self.z_fields = Some(ZFields { sigma, tau });
        Ok(self)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.couplings.n()
    }

    pub fn couplings(&self) -> &CouplingMatrix {
        &self.couplings
    }

    pub fn z_fields(&self) -> Option<&ZFields> {
        self.z_fields.as_ref()
    }

    /// Same model with `J` (and the fields) multiplied by `c`; `H` scales by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        HamiltonianSpec {
            kind: self.kind,
            couplings: self.couplings.scaled(c),
            z_fields: self.z_fields.as_ref().map(|z| ZFields {
                sigma: z.sigma.iter().map(|v| v * c).collect(),
                tau: z.tau.iter().map(|v| v * c).collect(),
            }),
        }
    }

    pub fn without_fields(&self) -> Self {
        HamiltonianSpec::new(self.kind, self.couplings.clone())
    }
}
