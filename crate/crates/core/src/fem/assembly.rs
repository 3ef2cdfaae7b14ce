//! Exact P1 assembly of the parameter-separable components.

use nalgebra::DVector;
use nalgebra_sparse::pattern::SparsityPattern;
use nalgebra_sparse::CscMatrix;
use serde::{Deserialize, Serialize};

use super::mesh::Mesh;
use crate::error::{check_len, Error, Result};

/// A scalar coefficient on the mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Constant(f64),
    /// One value per subdomain label, `values[label - 1]`. Integrated exactly
    /// as a piecewise constant.
    PerSubdomain(Vec<f64>),
    /// Nodal values of a P1 interpolant.
    Nodal(Vec<f64>),
}

impl Field {
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        match self {
            Field::Constant(_) => Ok(()),
            Field::PerSubdomain(v) => check_len(mesh.n_subdomains, v.len()),
            Field::Nodal(v) => check_len(mesh.n_nodes(), v.len()),
        }
    }

    /// Values at the three vertices as seen from inside triangle `t`.
    pub fn on_triangle(&self, mesh: &Mesh, t: usize) -> [f64; 3] {
        match self {
            Field::Constant(c) => [*c; 3],
            Field::PerSubdomain(v) => [v[mesh.subdomain_of_triangle[t] - 1]; 3],
            Field::Nodal(v) => {
                let [a, b, c] = mesh.triangles[t];
                [v[a], v[b], v[c]]
            }
        }
    }

    /// Smallest and largest value the field takes.
    pub fn range(&self) -> (f64, f64) {
        let vals: &[f64] = match self {
            Field::Constant(c) => std::slice::from_ref(c),
            Field::PerSubdomain(v) | Field::Nodal(v) => v,
        };
        vals.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    }
}

/// Symmetric sparsity pattern in compressed-column form, shared by every
/// component matrix. Because all matrices are symmetric the same arrays read
/// as CSR as well.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymPattern {
    pub n: usize,
    pub col_offsets: Vec<usize>,
    pub row_indices: Vec<usize>,
}

impl SymPattern {
    pub fn from_mesh(mesh: &Mesh) -> Self {
        let n = mesh.n_nodes();
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for tri in &mesh.triangles {
            for &a in tri {
                for &b in tri {
                    cols[b].push(a);
                }
            }
        }
        let mut col_offsets = Vec::with_capacity(n + 1);
        let mut row_indices = Vec::new();
        col_offsets.push(0);
        for mut c in cols {
            c.sort_unstable();
            c.dedup();
            row_indices.extend(c);
            col_offsets.push(row_indices.len());
        }
        SymPattern { n, col_offsets, row_indices }
    }

    pub fn nnz(&self) -> usize {
        self.row_indices.len()
    }

    /// Position of entry `(row, col)` in the value arrays.
    pub fn find(&self, row: usize, col: usize) -> Option<usize> {
        let lo = self.col_offsets[col];
        let hi = self.col_offsets[col + 1];
        self.row_indices[lo..hi].binary_search(&row).ok().map(|k| lo + k)
    }

    pub fn zeros(&self) -> Vec<f64> {
        vec![0.0; self.nnz()]
    }

    pub fn matvec(&self, values: &[f64], x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        for j in 0..self.n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for k in self.col_offsets[j]..self.col_offsets[j + 1] {
                y[self.row_indices[k]] += values[k] * xj;
            }
        }
        y
    }

    /// `x^T A y`.
    pub fn bilinear(&self, values: &[f64], x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let mut s = 0.0;
        for j in 0..self.n {
            let mut col = 0.0;
            for k in self.col_offsets[j]..self.col_offsets[j + 1] {
                col += values[k] * x[self.row_indices[k]];
            }
            s += col * y[j];
        }
        s
    }

    pub fn sparsity(&self) -> SparsityPattern {
        SparsityPattern::try_from_offsets_and_indices(
            self.n,
            self.n,
            self.col_offsets.clone(),
            self.row_indices.clone(),
        )
        .expect("pattern built from sorted, deduplicated columns")
    }

    pub fn to_csc(&self, values: Vec<f64>) -> CscMatrix<f64> {
        CscMatrix::try_from_pattern_and_values(self.sparsity(), values)
            .expect("value array matches pattern")
    }

    /// Dense copy, for small test problems.
    pub fn to_dense(&self, values: &[f64]) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            for k in self.col_offsets[j]..self.col_offsets[j + 1] {
                m[(self.row_indices[k], j)] = values[k];
            }
        }
        m
    }

    fn add_local(&self, values: &mut [f64], nodes: &[usize], local: &[[f64; 3]; 3], size: usize) {
        for a in 0..size {
            for b in 0..size {
                let k = self.find(nodes[a], nodes[b]).expect("element coupling present in pattern");
                values[k] += local[a][b];
            }
        }
    }
}

/// Component matrices (values on the shared pattern) and load vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FomComponents {
    pub pattern: SymPattern,
    /// Stiffness restricted to each subdomain, in label order.
    pub diffusion: Vec<Vec<f64>>,
    /// Mass weighted by the reaction coefficient.
    pub reaction: Vec<f64>,
    /// Boundary mass scaled by the Robin coefficient.
    pub robin: Vec<f64>,
    pub load: DVector<f64>,
    /// L2 Gram matrix.
    pub mass: Vec<f64>,
    /// H1 Gram matrix, stiffness plus mass.
    pub h1_gram: Vec<f64>,
    pub alpha: f64,
    /// Range of the reaction coefficient over the mesh.
    pub reaction_range: (f64, f64),
}

/// Physical data folded into the components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelData {
    pub reaction: Field,
    pub source: Field,
    pub ambient: Field,
    pub alpha: f64,
}

pub fn local_stiffness(mesh: &Mesh, t: usize) -> [[f64; 3]; 3] {
    let tri = mesh.triangles[t];
    let p = tri.map(|v| mesh.nodes[v]);
    let area = mesh.signed_area(t);
    let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
    let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        }
    }
    k
}

/// `int w phi_i phi_j` for a P1 weight given by its vertex values.
pub fn local_weighted_mass(area: f64, w: [f64; 3]) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0.0;
            for (k, wk) in w.iter().enumerate() {
                let f = if i == j && j == k {
                    1.0 / 10.0
                } else if i == j || j == k || i == k {
                    1.0 / 30.0
                } else {
                    1.0 / 60.0
                };
                s += f * wk;
            }
            m[i][j] = area * s;
        }
    }
    m
}

/// `int f phi_i` for a P1 function `f`.
pub fn local_load(area: f64, f: [f64; 3]) -> [f64; 3] {
    let sum: f64 = f.iter().sum();
    f.map(|fi| area / 12.0 * (fi + sum))
}

/// Assembles `int w phi` for every node, e.g. the desired-state functional.
pub fn assemble_functional(mesh: &Mesh, w: &Field) -> Result<DVector<f64>> {
    w.validate(mesh)?;
    let mut out = DVector::zeros(mesh.n_nodes());
    for t in 0..mesh.n_triangles() {
        let loc = local_load(mesh.signed_area(t), w.on_triangle(mesh, t));
        for (a, &v) in mesh.triangles[t].iter().enumerate() {
            out[v] += loc[a];
        }
    }
    Ok(out)
}

/// `int w^2` computed exactly for the P1 representation of `w`.
pub fn integrate_square(mesh: &Mesh, w: &Field) -> Result<f64> {
    w.validate(mesh)?;
    let mut s = 0.0;
    for t in 0..mesh.n_triangles() {
        let vals = w.on_triangle(mesh, t);
        let m = local_weighted_mass(mesh.signed_area(t), [1.0; 3]);
        for i in 0..3 {
            for j in 0..3 {
                s += vals[i] * m[i][j] * vals[j];
            }
        }
    }
    Ok(s)
}

pub fn assemble_components(mesh: &Mesh, data: &ModelData) -> Result<FomComponents> {
    mesh.validate()?;
    for f in [&data.reaction, &data.source, &data.ambient] {
        f.validate(mesh)?;
    }
    if !(data.alpha >= 0.0) {
        return Err(Error::InvalidInput(format!("Robin coefficient must be nonnegative, got {}", data.alpha)));
    }
    let reaction_range = data.reaction.range();
    if !(reaction_range.0 > 0.0) {
        return Err(Error::InvalidInput("reaction coefficient must be positive".into()));
    }

    let pattern = SymPattern::from_mesh(mesh);
    let mut diffusion = vec![pattern.zeros(); mesh.n_subdomains];
    let mut reaction = pattern.zeros();
    let mut robin = pattern.zeros();
    let mut mass = pattern.zeros();
    let mut stiffness = pattern.zeros();
    let mut load = DVector::zeros(mesh.n_nodes());

    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangles[t];
        let area = mesh.signed_area(t);
        let k = local_stiffness(mesh, t);
        pattern.add_local(&mut diffusion[mesh.subdomain_of_triangle[t] - 1], &tri, &k, 3);
        pattern.add_local(&mut stiffness, &tri, &k, 3);
        pattern.add_local(&mut mass, &tri, &local_weighted_mass(area, [1.0; 3]), 3);
        pattern.add_local(&mut reaction, &tri, &local_weighted_mass(area, data.reaction.on_triangle(mesh, t)), 3);
        let f = local_load(area, data.source.on_triangle(mesh, t));
        for a in 0..3 {
            load[tri[a]] += f[a];
        }
    }

    if data.alpha > 0.0 {
        for e in &mesh.boundary_edges {
            let len = mesh.edge_length(e);
            let s = data.alpha * len / 6.0;
            let local = [[2.0 * s, s, 0.0], [s, 2.0 * s, 0.0], [0.0; 3]];
            pattern.add_local(&mut robin, &e.nodes, &local, 2);
            // ambient value seen from the adjacent triangle
            let tri = mesh.triangles[e.triangle];
            let vals = data.ambient.on_triangle(mesh, e.triangle);
            let g = |node: usize| vals[tri.iter().position(|&v| v == node).expect("edge node in triangle")];
            let (g0, g1) = (g(e.nodes[0]), g(e.nodes[1]));
            load[e.nodes[0]] += s * (2.0 * g0 + g1);
            load[e.nodes[1]] += s * (g0 + 2.0 * g1);
        }
    }

    let h1_gram = stiffness.iter().zip(&mass).map(|(a, b)| a + b).collect();
    Ok(FomComponents {
        pattern,
        diffusion,
        reaction,
        robin,
        load,
        mass,
        h1_gram,
        alpha: data.alpha,
        reaction_range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::SymmetricEigen;

    fn data(alpha: f64) -> ModelData {
        ModelData {
            reaction: Field::Constant(1.0),
            source: Field::Constant(1.0),
            ambient: Field::Constant(0.0),
            alpha,
        }
    }

    #[test]
    fn no_robin_terms_without_exchange() {
        let mesh = Mesh::unit_square(4, &[0.5]).unwrap();
        let mut d = data(0.0);
        d.ambient = Field::Constant(7.0);
        let c = assemble_components(&mesh, &d).unwrap();
        assert!(c.robin.iter().all(|&v| v == 0.0));
        assert_relative_eq!(c.load.sum(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn unit_reaction_gives_mass() {
        let mesh = Mesh::unit_square(5, &[0.4]).unwrap();
        let c = assemble_components(&mesh, &data(0.3)).unwrap();
        for (a, b) in c.reaction.iter().zip(&c.mass) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
        let ones = DVector::from_element(mesh.n_nodes(), 1.0);
        // total area and perimeter
        assert_relative_eq!(c.pattern.bilinear(&c.mass, &ones, &ones), 1.0, epsilon = 1e-13);
        assert_relative_eq!(c.pattern.bilinear(&c.robin, &ones, &ones), 0.3 * 4.0, epsilon = 1e-13);
        // stiffness annihilates constants
        for d in &c.diffusion {
            assert!(c.pattern.matvec(d, &ones).amax() < 1e-13);
        }
    }

    #[test]
    fn components_symmetric_and_semidefinite() {
        let mesh = Mesh::unit_square(4, &[0.5]).unwrap();
        let mut d = data(0.5);
        d.reaction = Field::Nodal(mesh.nodes.iter().map(|p| 1.0 + p[0] * p[1]).collect());
        let c = assemble_components(&mesh, &d).unwrap();
        let mut all = c.diffusion.clone();
        all.extend([c.reaction.clone(), c.robin.clone(), c.mass.clone(), c.h1_gram.clone()]);
        for vals in &all {
            let m = c.pattern.to_dense(vals);
            assert!((&m - m.transpose()).amax() < 1e-14);
            let eig = SymmetricEigen::new(m);
            assert!(eig.eigenvalues.min() > -1e-12);
        }
        let g = SymmetricEigen::new(c.pattern.to_dense(&c.h1_gram));
        assert!(g.eigenvalues.min() > 1e-6);
    }

    #[test]
    fn weighted_mass_integrates_linear_weight() {
        // int_T x dx over the reference triangle (0,0),(1,0),(0,1) is 1/6
        let w = [0.0, 1.0, 0.0];
        let m = local_weighted_mass(0.5, w);
        let total: f64 = m.iter().flatten().sum();
        assert_relative_eq!(total, 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn piecewise_constant_source_is_exact() {
        let mesh = Mesh::unit_square(4, &[0.5]).unwrap();
        let c = [2.76, -0.96, 0.51, -1.66];
        let f = assemble_functional(&mesh, &Field::PerSubdomain(c.to_vec())).unwrap();
        assert_relative_eq!(f.sum(), c.iter().sum::<f64>() / 4.0, epsilon = 1e-14);
        let sq = integrate_square(&mesh, &Field::PerSubdomain(vec![1.0, 1.0, 0.0, 0.0])).unwrap();
        assert_relative_eq!(sq, 0.5, epsilon = 1e-14);
    }
}
