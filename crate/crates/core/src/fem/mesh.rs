//! Structured triangulations of the unit square with subdomain labels.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A boundary edge together with the triangle it belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    /// 0 bottom, 1 right, 2 top, 3 left.
    pub side: u8,
    pub triangle: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Subdomain label `1..=n_subdomains` of every triangle.
    pub subdomain_of_triangle: Vec<usize>,
    pub n_subdomains: usize,
}

const GRID_TOL: f64 = 1e-9;

impl Mesh {
    /// Uniform `n x n` grid of squares, each cut into two triangles with the
    /// diagonal direction alternating in a checkerboard pattern.
    ///
    /// `splits` are the interface coordinates used on both axes; they cut the
    /// square into `(splits.len() + 1)^2` rectangular subdomains numbered
    /// column-major: the block in column `bx` and row `by` gets label
    /// `bx * (splits.len() + 1) + by + 1`. With `splits = [0.5]` this gives
    /// `(0,.5)x(0,.5)`, `(0,.5)x(.5,1)`, `(.5,1)x(0,.5)`, `(.5,1)x(.5,1)`.
    pub fn unit_square(n_per_side: usize, splits: &[f64]) -> Result<Self> {
        if n_per_side < 2 {
            return Err(Error::InvalidMesh(format!(
                "n_per_side must be at least 2, got {n_per_side}"
            )));
        }
        let mut split_cells = Vec::with_capacity(splits.len());
        for (k, &s) in splits.iter().enumerate() {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::InvalidMesh(format!(
                    "interface coordinate {s} is not inside (0, 1)"
                )));
            }
            let cells = s * n_per_side as f64;
            let rounded = cells.round();
            if (cells - rounded).abs() > GRID_TOL {
                return Err(Error::InvalidMesh(format!(
                    "interface coordinate {s} does not lie on a grid line of the {n_per_side}x{n_per_side} grid"
                )));
            }
            let cell = rounded as usize;
            if k > 0 && cell <= split_cells[k - 1] {
                return Err(Error::InvalidMesh(
                    "interface coordinates must be strictly increasing".into(),
                ));
            }
            split_cells.push(cell);
        }
        let blocks = splits.len() + 1;
        let block_of = |cell: usize| split_cells.iter().filter(|&&s| cell >= s).count();

        let n = n_per_side;
        let h = 1.0 / n as f64;
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                nodes.push([i as f64 * h, j as f64 * h]);
            }
        }

        let mut triangles = Vec::with_capacity(2 * n * n);
        let mut labels = Vec::with_capacity(2 * n * n);
        // triangle index touching each boundary cell edge
        let mut bottom = vec![0; n];
        let mut top = vec![0; n];
        let mut left = vec![0; n];
        let mut right = vec![0; n];
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
                let label = block_of(i) * blocks + block_of(j) + 1;
                let t0 = triangles.len();
                if (i + j) % 2 == 0 {
                    // diagonal v00-v11: lower-right and upper-left triangles
                    triangles.push([v00, v10, v11]);
                    triangles.push([v00, v11, v01]);
                    if j == 0 {
                        bottom[i] = t0;
                    }
                    if i + 1 == n {
                        right[j] = t0;
                    }
                    if j + 1 == n {
                        top[i] = t0 + 1;
                    }
                    if i == 0 {
                        left[j] = t0 + 1;
                    }
                } else {
                    // diagonal v10-v01: lower-left and upper-right triangles
                    triangles.push([v00, v10, v01]);
                    triangles.push([v10, v11, v01]);
                    if j == 0 {
                        bottom[i] = t0;
                    }
                    if i == 0 {
                        left[j] = t0;
                    }
                    if i + 1 == n {
                        right[j] = t0 + 1;
                    }
                    if j + 1 == n {
                        top[i] = t0 + 1;
                    }
                }
                labels.push(label);
                labels.push(label);
            }
        }

        let mut boundary_edges = Vec::with_capacity(4 * n);
        for i in 0..n {
            boundary_edges.push(BoundaryEdge { nodes: [idx(i, 0), idx(i + 1, 0)], side: 0, triangle: bottom[i] });
        }
        for j in 0..n {
            boundary_edges.push(BoundaryEdge { nodes: [idx(n, j), idx(n, j + 1)], side: 1, triangle: right[j] });
        }
        for i in (0..n).rev() {
            boundary_edges.push(BoundaryEdge { nodes: [idx(i + 1, n), idx(i, n)], side: 2, triangle: top[i] });
        }
        for j in (0..n).rev() {
            boundary_edges.push(BoundaryEdge { nodes: [idx(0, j + 1), idx(0, j)], side: 3, triangle: left[j] });
        }

        let mesh = Mesh {
            nodes,
            triangles,
            boundary_edges,
            subdomain_of_triangle: labels,
            n_subdomains: blocks * blocks,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        let (p, q) = (self.nodes[e.nodes[0]], self.nodes[e.nodes[1]]);
        ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> f64) -> DVector<f64> {
        DVector::from_iterator(self.n_nodes(), self.nodes.iter().map(|&p| f(p)))
    }

    /// Checks positive orientation, label ranges and boundary coverage.
    pub fn validate(&self) -> Result<()> {
        if self.subdomain_of_triangle.len() != self.triangles.len() {
            return Err(Error::InvalidMesh("one subdomain label per triangle required".into()));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= self.n_nodes()) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing node")));
            }
            if self.signed_area(t) <= 0.0 {
                return Err(Error::InvalidMesh(format!("triangle {t} has non-positive signed area")));
            }
            let label = self.subdomain_of_triangle[t];
            if label == 0 || label > self.n_subdomains {
                return Err(Error::InvalidMesh(format!("triangle {t} has label {label} outside 1..={}", self.n_subdomains)));
            }
        }
        for label in 1..=self.n_subdomains {
            if !self.subdomain_of_triangle.contains(&label) {
                return Err(Error::InvalidMesh(format!("subdomain {label} is empty")));
            }
        }
        // boundary edges lie on the boundary, belong to their triangle, and
        // cover each side with total length 1
        let mut per_side = [0.0; 4];
        for e in &self.boundary_edges {
            let (p, q) = (self.nodes[e.nodes[0]], self.nodes[e.nodes[1]]);
            let on_side = |x: [f64; 2]| match e.side {
                0 => x[1].abs() < GRID_TOL,
                1 => (x[0] - 1.0).abs() < GRID_TOL,
                2 => (x[1] - 1.0).abs() < GRID_TOL,
                3 => x[0].abs() < GRID_TOL,
                _ => false,
            };
            if !(on_side(p) && on_side(q)) {
                return Err(Error::InvalidMesh(format!("boundary edge {:?} is not on side {}", e.nodes, e.side)));
            }
            let tri = self.triangles.get(e.triangle).ok_or_else(|| Error::InvalidMesh("edge triangle missing".into()))?;
            if !(tri.contains(&e.nodes[0]) && tri.contains(&e.nodes[1])) {
                return Err(Error::InvalidMesh(format!("edge {:?} not part of triangle {}", e.nodes, e.triangle)));
            }
            per_side[e.side as usize] += self.edge_length(e);
        }
        if per_side.iter().any(|l| (l - 1.0).abs() > 1e-9) {
            return Err(Error::InvalidMesh(format!("boundary edges do not cover the boundary: side lengths {per_side:?}")));
        }
        Ok(())
    }

    /// The same mesh with node `i` renamed to `perm[i]`.
    pub fn renumbered(&self, perm: &[usize]) -> Result<Mesh> {
        if perm.len() != self.n_nodes() {
            return Err(Error::InvalidMesh("permutation length mismatch".into()));
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::InvalidMesh("not a permutation".into()));
            }
            seen[p] = true;
        }
        let mut nodes = vec![[0.0; 2]; self.n_nodes()];
        for (i, &p) in perm.iter().enumerate() {
            nodes[p] = self.nodes[i];
        }
        Ok(Mesh {
            nodes,
            triangles: self.triangles.iter().map(|t| [perm[t[0]], perm[t[1]], perm[t[2]]]).collect(),
            boundary_edges: self
                .boundary_edges
                .iter()
                .map(|e| BoundaryEdge { nodes: [perm[e.nodes[0]], perm[e.nodes[1]]], ..*e })
                .collect(),
            subdomain_of_triangle: self.subdomain_of_triangle.clone(),
            n_subdomains: self.n_subdomains,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_mesh_counts() {
        let m = Mesh::unit_square(2, &[0.5]).unwrap();
        assert_eq!(m.n_nodes(), 9);
        assert_eq!(m.n_triangles(), 8);
        for label in 1..=4 {
            assert_eq!(m.subdomain_of_triangle.iter().filter(|&&l| l == label).count(), 2);
        }
        assert_eq!(m.boundary_edges.len(), 8);
    }

    #[test]
    fn benchmark_sized_mesh() {
        let m = Mesh::unit_square(36, &[0.5]).unwrap();
        assert_eq!(m.n_nodes(), 1369);
    }

    #[test]
    fn interface_must_sit_on_grid() {
        let err = Mesh::unit_square(2, &[0.3]).unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(_)));
        assert!(Mesh::unit_square(1, &[]).is_err());
    }

    #[test]
    fn subdomain_numbering_matches_quadrants() {
        let m = Mesh::unit_square(4, &[0.5]).unwrap();
        for (t, tri) in m.triangles.iter().enumerate() {
            let cx = tri.iter().map(|&v| m.nodes[v][0]).sum::<f64>() / 3.0;
            let cy = tri.iter().map(|&v| m.nodes[v][1]).sum::<f64>() / 3.0;
            let expected = match (cx > 0.5, cy > 0.5) {
                (false, false) => 1,
                (false, true) => 2,
                (true, false) => 3,
                (true, true) => 4,
            };
            assert_eq!(m.subdomain_of_triangle[t], expected);
        }
        let total: f64 = (0..m.n_triangles()).map(|t| m.signed_area(t)).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }
}
