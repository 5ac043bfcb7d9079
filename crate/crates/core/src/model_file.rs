//! JSON model definitions.
//!
//! ```json
//! {"kind": "hyperbolic", "n": 3, "r_max": 120}
//! {"kind": "warped-custom", "n": 3, "r_max": 50, "warp_table": [[0, 0], [1, 1], ...]}
//! {"kind": "cylinder-soliton", "n": 4, "k": 2}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{make_soliton, Manifold, SolitonStructure, WarpedModel};
use crate::profile::RadialProfile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFileKind {
    Euclidean,
    Hyperbolic,
    Cusp,
    WarpedCustom,
    GaussianSoliton,
    CylinderSoliton,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelFileKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warp_table: Option<Vec<[f64; 2]>>,
}

fn field(name: &str, msg: impl std::fmt::Display) -> Error {
    Error::ModelFile(format!("field `{name}`: {msg}"))
}

impl ModelSpec {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::ModelFile(format!("line {} column {}: {}", e.line(), e.column(), e))
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Manifold> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ModelFile(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
            .and_then(|spec| spec.build())
            .map_err(|e| match e {
                Error::ModelFile(msg) => Error::ModelFile(format!("{}: {msg}", path.display())),
                other => other,
            })
    }

    fn r_max(&self) -> Result<f64> {
        match self.r_max {
            Some(r) if r.is_finite() && r > 0.0 => Ok(r),
            Some(r) => Err(field("r_max", format!("must be positive and finite, got {r}"))),
            None => Err(field("r_max", "required for warped models")),
        }
    }

    fn reject(&self, name: &str, present: bool) -> Result<()> {
        if present {
            return Err(field(name, format!("not used by kind {:?}", self.kind)));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Manifold> {
        let wrap = |e: Error| match e {
            Error::InvalidInput(msg) => Error::ModelFile(msg),
            other => other,
        };
        if self.n < 2 {
            return Err(field("n", format!("dimension must be at least 2, got {}", self.n)));
        }
        use ModelFileKind::*;
        match self.kind {
            Euclidean | Hyperbolic | Cusp => {
                self.reject("k", self.k.is_some())?;
                self.reject("warp_table", self.warp_table.is_some())?;
                let r_max = self.r_max()?;
                let model = match self.kind {
                    Euclidean => WarpedModel::euclidean(self.n, r_max),
                    Hyperbolic => WarpedModel::hyperbolic(self.n, r_max),
                    _ if self.n != 2 => return Err(field("n", "the cusp is a surface (n = 2)")),
                    _ => WarpedModel::cusp(r_max),
                };
                Ok(Manifold::Warped(model.map_err(wrap)?))
            }
            WarpedCustom => {
                self.reject("k", self.k.is_some())?;
                let table = self.warp_table.as_ref().ok_or_else(|| field("warp_table", "required for warped-custom"))?;
                if table.len() < 4 {
                    return Err(field("warp_table", "need at least four [r, g] rows"));
                }
                for (i, w) in table.windows(2).enumerate() {
                    if !(w[1][0] > w[0][0]) {
                        return Err(field("warp_table", format!("radii must increase (row {})", i + 1)));
                    }
                }
                for (i, &[r, g]) in table.iter().enumerate() {
                    let pole = i == 0 && g == 0.0;
                    if !(g > 0.0 || pole) || !r.is_finite() || !g.is_finite() {
                        return Err(field("warp_table", format!("warp must be positive, row {i} has g({r}) = {g}")));
                    }
                }
                let r_max = self.r_max.unwrap_or(table[table.len() - 1][0]);
                if r_max > table[table.len() - 1][0] {
                    return Err(field("r_max", "exceeds the last tabulated radius"));
                }
                let (xs, ys) = table.iter().map(|&[r, g]| (r, g)).unzip();
                let warp = RadialProfile::tabulated(xs, ys).map_err(wrap)?;
                Ok(Manifold::Warped(WarpedModel::custom(self.n, warp, r_max).map_err(wrap)?))
            }
            GaussianSoliton | CylinderSoliton => {
                self.reject("warp_table", self.warp_table.is_some())?;
                let (structure, k) = if self.kind == GaussianSoliton {
                    (SolitonStructure::Gaussian, self.k.unwrap_or(0))
                } else {
                    (SolitonStructure::Cylinder, self.k.ok_or_else(|| field("k", "required for cylinder-soliton"))?)
                };
                let model = make_soliton(structure, self.n, k).map_err(|e| match e {
                    Error::InvalidInput(msg) => field("k", msg),
                    other => other,
                })?;
                Ok(Manifold::Soliton(model))
            }
        }
    }
}
