use serde::{Deserialize, Serialize};

use super::{BracketEntry, LieAlgebra};
use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational};

/// `[i, j, [[k, "p/q"], ...]]`: `[e_i, e_j] = Σ c_k e_k`.
pub type BracketDoc = (usize, usize, Vec<(usize, String)>);

/// JSON form of an algebra:
/// `{"dim", "labels", "step", "layers", "brackets": [[i, j, [[k, "p/q"], …]], …]}`
/// with 0-based basis indices. Only one of each antisymmetric pair is written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraDoc {
    pub dim: usize,
    pub labels: Vec<String>,
    pub step: u32,
    pub layers: Vec<u32>,
    #[serde(default)]
    pub brackets: Vec<BracketDoc>,
}

impl AlgebraDoc {
    pub fn from_algebra(alg: &LieAlgebra) -> Self {
        let mut brackets = Vec::new();
        for (i, j, image) in alg.entries() {
            let partner_is_negation = (0..alg.dim()).all(|k| {
                alg.structure_constant(j, i, k) == -alg.structure_constant(i, j, k)
            });
            if i < j || !partner_is_negation || i == j {
                let image = image.iter().map(|(k, c)| (*k, format_rational(c))).collect();
                brackets.push((i, j, image));
            }
        }
        Self {
            dim: alg.dim(),
            labels: alg.labels().to_vec(),
            step: alg.step(),
            layers: alg.layers().to_vec(),
            brackets,
        }
    }

    pub fn to_algebra(&self) -> Result<LieAlgebra> {
        if self.labels.len() != self.dim {
            return Err(Error::InvalidAlgebra(format!(
                "dim {} but {} labels",
                self.dim,
                self.labels.len()
            )));
        }
        let entries = self
            .brackets
            .iter()
            .map(|(i, j, image)| {
                let image = image
                    .iter()
                    .map(|(k, c)| Ok((*k, parse_rational(c)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(BracketEntry { i: *i, j: *j, image })
            })
            .collect::<Result<Vec<_>>>()?;
        LieAlgebra::new(self.labels.clone(), self.layers.clone(), self.step, entries)
    }
}

impl Serialize for LieAlgebra {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        AlgebraDoc::from_algebra(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for LieAlgebra {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = AlgebraDoc::deserialize(d)?;
        doc.to_algebra().map_err(serde::de::Error::custom)
    }
}
