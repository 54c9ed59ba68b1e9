//! JSON documents for atlases, channels and operator graphs.
//!
//! Every operator is stored as `{rows, cols, data}` with `data` the row-major
//! list of `[re, im]` pairs. Floats are written in shortest round-trip form,
//! so a reload reproduces each stored entry exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{KrausChannel, KrausLabel, LinearMap};
use crate::coherent::{QuadratureRule, YMode};
use crate::error::{Error, Result};
use crate::model::{Model, ModelParams};
use crate::operator::{CMat, CVec, OperatorSubspace};
use crate::povm::{Component, PovmAtlas, PovmAtom};

pub const ATLAS_SCHEMA: &str = "qjc.atlas/1";
pub const CHANNEL_SCHEMA: &str = "qjc.channel/1";
pub const GRAPH_SCHEMA: &str = "qjc.graph/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixDoc {
    pub fn from_matrix(m: &CMat) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let z = m[(r, c)];
                data.push([z.re, z.im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Serialization(format!(
                "matrix {}x{} has {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |r, c| {
            let [re, im] = self.data[r * self.cols + c];
            Complex64::new(re, im)
        }))
    }
}

fn vector_doc(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn vector_from_doc(d: &[[f64; 2]]) -> CVec {
    CVec::from_iterator(d.len(), d.iter().map(|[re, im]| Complex64::new(*re, *im)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorDoc {
    pub lambda: f64,
    pub vector: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomDoc {
    pub id: usize,
    pub component: Component,
    pub x_node: Option<usize>,
    pub y_node: Option<usize>,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub weight: f64,
    pub density: MatrixDoc,
    pub factors: Vec<FactorDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasDoc {
    pub schema: String,
    pub params: ModelParams,
    pub k0: usize,
    pub dim: usize,
    pub y_mode: YMode,
    pub quad_order: usize,
    pub series_depth: usize,
    pub quad_j: QuadratureRule,
    pub quad_s: QuadratureRule,
    pub atoms: Vec<AtomDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDoc {
    pub schema: String,
    pub in_dim: usize,
    pub out_dim: usize,
    /// Environment labels, present for the measurement channel of an atlas.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<KrausLabel>>,
    pub kraus: Vec<MatrixDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub schema: String,
    pub dim: usize,
    pub rank_tol: f64,
    pub basis: Vec<MatrixDoc>,
}

fn check_schema(found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::Serialization(format!("schema {found:?}, expected {expected:?}")));
    }
    Ok(())
}

impl AtlasDoc {
    pub fn from_atlas(atlas: &PovmAtlas) -> Self {
        let atoms = atlas
            .atoms()
            .iter()
            .enumerate()
            .map(|(id, a)| AtomDoc {
                id,
                component: a.component,
                x_node: a.x_node,
                y_node: a.y_node,
                x: a.x,
                y: a.y,
                weight: a.weight,
                density: MatrixDoc::from_matrix(&a.density),
                factors: a
                    .factors()
                    .iter()
                    .map(|(l, v)| FactorDoc {
                        lambda: *l,
                        vector: vector_doc(v),
                    })
                    .collect(),
            })
            .collect();
        Self {
            schema: ATLAS_SCHEMA.into(),
            params: atlas.params,
            k0: atlas.k0,
            dim: atlas.dim(),
            y_mode: atlas.y_mode,
            quad_order: atlas.quad_order,
            series_depth: atlas.series_depth,
            quad_j: atlas.quad_j.clone(),
            quad_s: atlas.quad_s.clone(),
            atoms,
        }
    }

    pub fn to_atlas(&self) -> Result<PovmAtlas> {
        check_schema(&self.schema, ATLAS_SCHEMA)?;
        let model = Model::new(self.params)?;
        if model.k0() != self.k0 || model.working_dim() != self.dim {
            return Err(Error::Inconsistent(format!(
                "stored k0 = {}, dim = {} but the parameters give k0 = {}, dim = {}",
                self.k0,
                self.dim,
                model.k0(),
                model.working_dim()
            )));
        }
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for (pos, a) in self.atoms.iter().enumerate() {
            if a.id != pos {
                return Err(Error::Serialization(format!("atom at position {pos} has id {}", a.id)));
            }
            let factors = a
                .factors
                .iter()
                .map(|f| (f.lambda, vector_from_doc(&f.vector)))
                .collect();
            atoms.push(PovmAtom::from_stored(
                a.component,
                a.x_node,
                a.y_node,
                (a.x, a.y),
                a.weight,
                a.density.to_matrix()?,
                factors,
            )?);
        }
        PovmAtlas::from_parts(
            &model,
            self.y_mode,
            self.quad_order,
            self.series_depth,
            self.quad_j.clone(),
            self.quad_s.clone(),
            atoms,
        )
    }
}

impl ChannelDoc {
    pub fn from_channel(ch: &KrausChannel, labels: Option<&[KrausLabel]>) -> Self {
        Self {
            schema: CHANNEL_SCHEMA.into(),
            in_dim: ch.in_dim(),
            out_dim: ch.out_dim(),
            labels: labels.map(<[KrausLabel]>::to_vec),
            kraus: ch.kraus().iter().map(MatrixDoc::from_matrix).collect(),
        }
    }

    pub fn to_channel(&self) -> Result<KrausChannel> {
        check_schema(&self.schema, CHANNEL_SCHEMA)?;
        if let Some(l) = &self.labels {
            if l.len() != self.kraus.len() {
                return Err(Error::Serialization(format!(
                    "{} labels for {} Kraus operators",
                    l.len(),
                    self.kraus.len()
                )));
            }
        }
        let kraus = self
            .kraus
            .iter()
            .map(MatrixDoc::to_matrix)
            .collect::<Result<Vec<_>>>()?;
        KrausChannel::new(self.in_dim, self.out_dim, kraus)
    }
}

impl GraphDoc {
    pub fn from_subspace(v: &OperatorSubspace) -> Self {
        Self {
            schema: GRAPH_SCHEMA.into(),
            dim: v.ambient_dim(),
            rank_tol: v.rank_tol(),
            basis: v.basis().iter().map(MatrixDoc::from_matrix).collect(),
        }
    }

    /// Reload; fails unless the stored basis is orthonormal to `1e-10`.
    pub fn to_subspace(&self) -> Result<OperatorSubspace> {
        check_schema(&self.schema, GRAPH_SCHEMA)?;
        let basis = self
            .basis
            .iter()
            .map(MatrixDoc::to_matrix)
            .collect::<Result<Vec<_>>>()?;
        OperatorSubspace::from_orthonormal(self.dim, basis, self.rank_tol)
    }
}

pub fn to_json_pretty<T: Serialize>(doc: &T) -> Result<String> {
    serde_json::to_string_pretty(doc).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))
}
