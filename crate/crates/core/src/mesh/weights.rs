//! JSON weights sidecar:
//!
//! ```json
//! { "epsilon": [1, 1, 0, 1],
//!   "eta": [ { "edge": [0, 1], "value": 1.0 }, ... ] }
//! ```
//!
//! Every mesh edge needs exactly one `eta` entry.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Triangulation, WeightedSurface};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightsFile {
    pub epsilon: Vec<i64>,
    pub eta: Vec<EtaEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EtaEntry {
    pub edge: [usize; 2],
    pub value: f64,
}

impl WeightsFile {
    /// Sidecar describing the weights already attached to `surface`.
    pub fn from_surface(surface: &WeightedSurface) -> Self {
        let t = surface.triangulation();
        WeightsFile {
            epsilon: surface.epsilon().iter().map(|&e| i64::from(e)).collect(),
            eta: t
                .edges()
                .iter()
                .zip(surface.eta())
                .map(|(&edge, &value)| EtaEntry { edge, value })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("weights serialize")
    }

    /// Attaches these weights to `triangulation`.
    pub fn into_surface(self, triangulation: Triangulation) -> Result<WeightedSurface> {
        if self.epsilon.len() != triangulation.num_vertices() {
            return Err(Error::Weights(format!(
                "epsilon has {} entries, mesh has {} vertices",
                self.epsilon.len(),
                triangulation.num_vertices()
            )));
        }
        let mut epsilon = Vec::with_capacity(self.epsilon.len());
        for (i, &e) in self.epsilon.iter().enumerate() {
            match e {
                0 | 1 => epsilon.push(e as u8),
                -1 => {
                    return Err(Error::UnsupportedGeometry(format!(
                        "epsilon[{i}] = -1 selects the spherical scheme, which is not supported"
                    )))
                }
                other => {
                    return Err(Error::Weights(format!(
                        "epsilon[{i}] = {other} is not in {{0, 1}}"
                    )))
                }
            }
        }
        let mut eta = vec![None; triangulation.num_edges()];
        for entry in &self.eta {
            let [a, b] = entry.edge;
            let e = triangulation.edge_index(a, b).ok_or_else(|| {
                Error::Weights(format!(
                    "eta given for ({a}, {b}), which is not a mesh edge"
                ))
            })?;
            if eta[e].replace(entry.value).is_some() {
                return Err(Error::Weights(format!(
                    "duplicate eta entry for edge ({a}, {b})"
                )));
            }
        }
        let eta = eta
            .into_iter()
            .enumerate()
            .map(|(e, v)| {
                v.ok_or_else(|| {
                    let [a, b] = triangulation.edges()[e];
                    Error::Weights(format!("missing eta for edge ({a}, {b})"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        WeightedSurface::new(triangulation, epsilon, eta)
    }
}

pub fn parse_weights(text: &str, triangulation: Triangulation) -> Result<WeightedSurface> {
    let file: WeightsFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    file.into_surface(triangulation)
}

pub fn load_weights(
    path: impl AsRef<Path>,
    triangulation: Triangulation,
) -> Result<WeightedSurface> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_weights(&text, triangulation)
}
