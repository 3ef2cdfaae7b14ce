//! JSON exchange format for meshes and assembled components.
//!
//! The file is one object:
//!
//! ```text
//! {
//!   "mesh":      { "nodes": [[x, y], ...], "triangles": [[a, b, c], ...],
//!                  "boundary_edges": [{"nodes": [a, b], "side": s, "triangle": t}, ...],
//!                  "subdomain_of_triangle": [...], "n_subdomains": m },
//!   "n": n_dofs,
//!   "matrices":  { "diffusion_1": {"rows": [...], "cols": [...], "values": [...]}, ...,
//!                  "reaction": ..., "robin": ..., "mass": ..., "h1_gram": ... },
//!   "load":      [...],
//!   "alpha":     a,
//!   "reaction_range": [lo, hi]
//! }
//! ```
//!
//! Matrices are stored as full (both triangles) coordinate triplets, zero
//! based.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::assembly::{FomComponents, SymPattern};
use super::mesh::Mesh;
use crate::error::{check_len, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triplets {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FomFile {
    pub mesh: Mesh,
    pub n: usize,
    pub matrices: BTreeMap<String, Triplets>,
    pub load: Vec<f64>,
    pub alpha: f64,
    pub reaction_range: (f64, f64),
}

fn to_triplets(p: &SymPattern, values: &[f64]) -> Triplets {
    let mut t = Triplets { rows: Vec::new(), cols: Vec::new(), values: Vec::new() };
    for j in 0..p.n {
        for k in p.col_offsets[j]..p.col_offsets[j + 1] {
            t.rows.push(p.row_indices[k]);
            t.cols.push(j);
            t.values.push(values[k]);
        }
    }
    t
}

fn from_triplets(p: &SymPattern, t: &Triplets) -> Result<Vec<f64>> {
    check_len(t.rows.len(), t.values.len())?;
    check_len(t.cols.len(), t.values.len())?;
    let mut vals = p.zeros();
    for ((&r, &c), &v) in t.rows.iter().zip(&t.cols).zip(&t.values) {
        if r >= p.n || c >= p.n {
            return Err(Error::InvalidInput(format!("triplet ({r}, {c}) out of range")));
        }
        let k = p.find(r, c).ok_or_else(|| Error::InvalidInput(format!("entry ({r}, {c}) not in the mesh pattern")))?;
        vals[k] += v;
    }
    Ok(vals)
}

impl FomFile {
    pub fn new(mesh: &Mesh, c: &FomComponents) -> Self {
        let mut matrices = BTreeMap::new();
        for (i, d) in c.diffusion.iter().enumerate() {
            matrices.insert(format!("diffusion_{}", i + 1), to_triplets(&c.pattern, d));
        }
        matrices.insert("reaction".into(), to_triplets(&c.pattern, &c.reaction));
        matrices.insert("robin".into(), to_triplets(&c.pattern, &c.robin));
        matrices.insert("mass".into(), to_triplets(&c.pattern, &c.mass));
        matrices.insert("h1_gram".into(), to_triplets(&c.pattern, &c.h1_gram));
        FomFile {
            mesh: mesh.clone(),
            n: c.pattern.n,
            matrices,
            load: c.load.as_slice().to_vec(),
            alpha: c.alpha,
            reaction_range: c.reaction_range,
        }
    }

    pub fn into_parts(self) -> Result<(Mesh, FomComponents)> {
        self.mesh.validate()?;
        check_len(self.mesh.n_nodes(), self.n)?;
        check_len(self.n, self.load.len())?;
        let pattern = SymPattern::from_mesh(&self.mesh);
        let get = |name: &str| -> Result<Vec<f64>> {
            let t = self
                .matrices
                .get(name)
                .ok_or_else(|| Error::InvalidInput(format!("matrix '{name}' missing")))?;
            from_triplets(&pattern, t)
        };
        let diffusion = (1..=self.mesh.n_subdomains)
            .map(|i| get(&format!("diffusion_{i}")))
            .collect::<Result<Vec<_>>>()?;
        let comps = FomComponents {
            diffusion,
            reaction: get("reaction")?,
            robin: get("robin")?,
            mass: get("mass")?,
            h1_gram: get("h1_gram")?,
            load: DVector::from_vec(self.load),
            alpha: self.alpha,
            reaction_range: self.reaction_range,
            pattern,
        };
        Ok((self.mesh, comps))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(f, self)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(f)?)
    }
}
