//! Closed triangulated surfaces and their (ε, η) weights.

mod builtin;
mod off;
mod weights;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use builtin::{genus2, tetrahedron, torus7, torus_grid};
pub use off::{load_mesh, parse_off, write_off};
pub use weights::{load_weights, parse_weights, WeightsFile};

/// Background geometry of the polyhedral metric. Spherical is not supported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackgroundGeometry {
    Euclidean,
    Hyperbolic,
}

impl BackgroundGeometry {
    /// Curvature sign λ of the model space.
    pub fn lambda(self) -> f64 {
        match self {
            BackgroundGeometry::Euclidean => 0.0,
            BackgroundGeometry::Hyperbolic => -1.0,
        }
    }
}

impl std::str::FromStr for BackgroundGeometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "e" => Ok(BackgroundGeometry::Euclidean),
            "hyperbolic" | "h" => Ok(BackgroundGeometry::Hyperbolic),
            "spherical" | "s" => Err(Error::UnsupportedGeometry(
                "spherical background geometry is not supported".into(),
            )),
            other => Err(Error::Config(format!("unknown geometry '{other}'"))),
        }
    }
}

impl std::fmt::Display for BackgroundGeometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BackgroundGeometry::Euclidean => f.write_str("euclidean"),
            BackgroundGeometry::Hyperbolic => f.write_str("hyperbolic"),
        }
    }
}

/// Combinatorics of a closed, connected triangulated surface.
///
/// Edges are canonical `[min, max]` pairs derived from the faces. For a face
/// `[i, j, k]`, `face_edges` lists the edges opposite each corner, i.e.
/// `[jk, ik, ij]`.
#[derive(Clone, Debug)]
pub struct Triangulation {
    num_vertices: usize,
    faces: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    edge_lookup: HashMap<[usize; 2], usize>,
    face_edges: Vec<[usize; 3]>,
    edge_faces: Vec<[usize; 2]>,
    vertex_faces: Vec<Vec<usize>>,
}

fn canonical(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

impl Triangulation {
    /// Builds and validates a closed surface from its face list.
    pub fn from_faces(num_vertices: usize, faces: Vec<[usize; 3]>) -> Result<Self> {
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&v) = f.iter().find(|&&v| v >= num_vertices) {
                return Err(Error::InvalidFace {
                    face: fi,
                    reason: format!("vertex index {v} out of range (n = {num_vertices})"),
                });
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidFace {
                    face: fi,
                    reason: "repeated vertex".into(),
                });
            }
        }

        let mut edges = Vec::new();
        let mut edge_lookup = HashMap::new();
        let mut incident: Vec<Vec<usize>> = Vec::new();
        let mut face_edges = Vec::with_capacity(faces.len());
        for (fi, &[i, j, k]) in faces.iter().enumerate() {
            let mut fe = [0; 3];
            for (slot, (a, b)) in [(j, k), (i, k), (i, j)].into_iter().enumerate() {
                let key = canonical(a, b);
                let e = *edge_lookup.entry(key).or_insert_with(|| {
                    edges.push(key);
                    incident.push(Vec::new());
                    edges.len() - 1
                });
                incident[e].push(fi);
                fe[slot] = e;
            }
            face_edges.push(fe);
        }

        let mut edge_faces = Vec::with_capacity(edges.len());
        for (e, inc) in incident.iter().enumerate() {
            if inc.len() != 2 {
                return Err(Error::BoundaryEdge {
                    edge: edges[e],
                    count: inc.len(),
                });
            }
            edge_faces.push([inc[0], inc[1]]);
        }

        let mut vertex_faces = vec![Vec::new(); num_vertices];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                vertex_faces[v].push(fi);
            }
        }
        if let Some(v) = vertex_faces.iter().position(Vec::is_empty) {
            return Err(Error::IsolatedVertex { vertex: v });
        }

        let t = Triangulation {
            num_vertices,
            faces,
            edges,
            edge_lookup,
            face_edges,
            edge_faces,
            vertex_faces,
        };
        let components = t.face_components();
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(t)
    }

    fn face_components(&self) -> usize {
        let n = self.faces.len();
        let mut seen = vec![false; n];
        let mut components = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(f) = stack.pop() {
                for &e in &self.face_edges[f] {
                    for &g in &self.edge_faces[e] {
                        if !seen[g] {
                            seen[g] = true;
                            stack.push(g);
                        }
                    }
                }
            }
        }
        components
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Edge indices opposite the three corners of `face`.
    pub fn face_edges(&self, face: usize) -> [usize; 3] {
        self.face_edges[face]
    }

    pub fn edge_faces(&self, edge: usize) -> [usize; 2] {
        self.edge_faces[edge]
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    /// Number of edges at `v`; equals the number of incident faces on a closed surface.
    pub fn degree(&self, v: usize) -> usize {
        self.vertex_faces[v].len()
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&canonical(a, b)).copied()
    }

    /// χ = |V| − |E| + |F|.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }
}

/// Free-function form of [`Triangulation::euler_characteristic`].
pub fn euler_characteristic(t: &Triangulation) -> i64 {
    t.euler_characteristic()
}

/// A triangulation with per-vertex scheme coefficients ε ∈ {0, 1} and
/// per-edge conformal structure coefficients η (indexed like `edges()`).
#[derive(Clone, Debug)]
pub struct WeightedSurface {
    triangulation: Triangulation,
    epsilon: Vec<u8>,
    eta: Vec<f64>,
}

impl WeightedSurface {
    pub fn new(triangulation: Triangulation, epsilon: Vec<u8>, eta: Vec<f64>) -> Result<Self> {
        if epsilon.len() != triangulation.num_vertices() {
            return Err(Error::Weights(format!(
                "epsilon has {} entries, mesh has {} vertices",
                epsilon.len(),
                triangulation.num_vertices()
            )));
        }
        if eta.len() != triangulation.num_edges() {
            return Err(Error::Weights(format!(
                "eta has {} entries, mesh has {} edges",
                eta.len(),
                triangulation.num_edges()
            )));
        }
        if let Some(i) = epsilon.iter().position(|&e| e > 1) {
            return Err(Error::Weights(format!(
                "epsilon[{i}] = {} is not in {{0, 1}}",
                epsilon[i]
            )));
        }
        if let Some(e) = eta.iter().position(|x| !x.is_finite()) {
            return Err(Error::Weights(format!("eta on edge {e} is not finite")));
        }
        Ok(WeightedSurface {
            triangulation,
            epsilon,
            eta,
        })
    }

    /// Constant weights: ε ≡ `epsilon`, η ≡ `eta`.
    pub fn uniform(triangulation: Triangulation, epsilon: u8, eta: f64) -> Result<Self> {
        let n = triangulation.num_vertices();
        let m = triangulation.num_edges();
        Self::new(triangulation, vec![epsilon; n], vec![eta; m])
    }

    /// Tangential circle packing (ε ≡ 1, η ≡ 1).
    pub fn tangential_circle_packing(triangulation: Triangulation) -> Result<Self> {
        Self::uniform(triangulation, 1, 1.0)
    }

    /// Vertex scaling (ε ≡ 0) with η ≡ `eta`.
    pub fn vertex_scaling(triangulation: Triangulation, eta: f64) -> Result<Self> {
        Self::uniform(triangulation, 0, eta)
    }

    pub fn triangulation(&self) -> &Triangulation {
        &self.triangulation
    }

    pub fn num_vertices(&self) -> usize {
        self.triangulation.num_vertices()
    }

    pub fn epsilon(&self) -> &[u8] {
        &self.epsilon
    }

    pub fn eps(&self, v: usize) -> f64 {
        f64::from(self.epsilon[v])
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn eta_edge(&self, e: usize) -> f64 {
        self.eta[e]
    }

    /// Counts (N₀, N₁) of vertices with ε = 0 and ε = 1.
    pub fn scheme_counts(&self) -> (usize, usize) {
        let n1 = self.epsilon.iter().filter(|&&e| e == 1).count();
        (self.epsilon.len() - n1, n1)
    }

    /// Checks ε_s ε_t + η_st > 0 on every edge and ε_q η_st + η_qs η_qt ≥ 0
    /// at every corner q of every face.
    pub fn check_structure_conditions(&self) -> Vec<StructureViolation> {
        let t = &self.triangulation;
        let mut out = Vec::new();
        for (e, &[s, tt]) in t.edges().iter().enumerate() {
            let value = self.eps(s) * self.eps(tt) + self.eta[e];
            if !(value > 0.0) {
                out.push(StructureViolation::Edge {
                    edge: [s, tt],
                    value,
                });
            }
        }
        for (fi, face) in t.faces().iter().enumerate() {
            let fe = t.face_edges(fi);
            for c in 0..3 {
                let q = face[c];
                let eta_st = self.eta[fe[c]];
                let eta_qs = self.eta[fe[(c + 1) % 3]];
                let eta_qt = self.eta[fe[(c + 2) % 3]];
                let value = self.eps(q) * eta_st + eta_qs * eta_qt;
                if !(value >= 0.0) {
                    out.push(StructureViolation::Corner {
                        face: fi,
                        vertex: q,
                        value,
                    });
                }
            }
        }
        out
    }
}

/// One failing instance of the structure conditions.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum StructureViolation {
    /// ε_s ε_t + η_st ≤ 0.
    Edge { edge: [usize; 2], value: f64 },
    /// ε_q η_st + η_qs η_qt < 0 at corner `vertex` of `face`.
    Corner {
        face: usize,
        vertex: usize,
        value: f64,
    },
}

impl std::fmt::Display for StructureViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StructureViolation::Edge { edge, value } => write!(
                f,
                "condition (1) fails on edge ({}, {}): eps*eps + eta = {value}",
                edge[0], edge[1]
            ),
            StructureViolation::Corner {
                face,
                vertex,
                value,
            } => write!(
                f,
                "condition (2) fails at vertex {vertex} of face {face}: eps*eta + eta*eta = {value}"
            ),
        }
    }
}

/// Free-function form of [`WeightedSurface::check_structure_conditions`].
pub fn check_structure_conditions(surface: &WeightedSurface) -> Vec<StructureViolation> {
    surface.check_structure_conditions()
}
