//! Per-face geometry: admissibility, inner angles, extension by constants,
//! hyperbolic area and the angle Jacobian ∂θ/∂u.
//!
//! Length triples are ordered by opposite corner: for a face `[i, j, k]` the
//! lengths are `[l_jk, l_ik, l_ij]`.
//!
//! Angles come from the (hyperbolic) law of cosines written in half-perimeter
//! form, `θ_i = atan2(sin-part, cos-part)`, so that nearly flat triangles keep
//! full relative accuracy.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{BackgroundGeometry, WeightedSurface};
use crate::metric::{df_du, edge_lengths, ConformalState, EdgeInput};

/// All three strict triangle inequalities hold.
pub fn is_admissible(l: [f64; 3]) -> bool {
    l[0] < l[1] + l[2] && l[1] < l[0] + l[2] && l[2] < l[0] + l[1]
}

/// The corner opposite an edge at least as long as the other two combined.
/// At most one such corner exists when all lengths are positive.
pub fn degenerate_corner(l: [f64; 3]) -> Option<usize> {
    (0..3).find(|&c| l[c] >= l[(c + 1) % 3] + l[(c + 2) % 3])
}

/// Half-perimeter differences `s − l_c`, computed without forming `s`.
fn half_excess(l: [f64; 3]) -> [f64; 3] {
    [
        0.5 * (l[1] + l[2] - l[0]),
        0.5 * (l[0] + l[2] - l[1]),
        0.5 * (l[0] + l[1] - l[2]),
    ]
}

/// Inner angles of an admissible triangle.
pub fn inner_angles(l: [f64; 3], geometry: BackgroundGeometry) -> Result<[f64; 3]> {
    if !is_admissible(l) {
        return Err(Error::Numerical(format!(
            "lengths {l:?} violate the triangle inequality; use extended_inner_angles"
        )));
    }
    Ok(admissible_angles(l, geometry))
}

fn admissible_angles(l: [f64; 3], geometry: BackgroundGeometry) -> [f64; 3] {
    let d = half_excess(l);
    let s = 0.5 * (l[0] + l[1] + l[2]);
    let mut theta = [0.0; 3];
    match geometry {
        BackgroundGeometry::Euclidean => {
            // cos θ_c = (l_a² + l_b² − l_c²) / (2 l_a l_b)
            let area2 = 2.0 * (s * d[0] * d[1] * d[2]).sqrt();
            for c in 0..3 {
                let (a, b) = ((c + 1) % 3, (c + 2) % 3);
                theta[c] = area2.atan2(l[a] * l[b] - 2.0 * d[a] * d[b]);
            }
        }
        BackgroundGeometry::Hyperbolic => {
            // cos θ_c = (cosh l_a cosh l_b − cosh l_c) / (sinh l_a sinh l_b)
            let sqrt_delta = 2.0 * (s.sinh() * d[0].sinh() * d[1].sinh() * d[2].sinh()).sqrt();
            for c in 0..3 {
                let (a, b) = ((c + 1) % 3, (c + 2) % 3);
                let cos_part = l[a].sinh() * l[b].sinh() - 2.0 * d[a].sinh() * d[b].sinh();
                theta[c] = sqrt_delta.atan2(cos_part);
            }
        }
    }
    theta
}

/// Inner angles extended continuously by constants: π at the corner opposite
/// an edge that is too long, 0 at the other two.
pub fn extended_inner_angles(l: [f64; 3], geometry: BackgroundGeometry) -> [f64; 3] {
    match degenerate_corner(l) {
        Some(c) => {
            let mut theta = [0.0; 3];
            theta[c] = PI;
            theta
        }
        None => admissible_angles(l, geometry),
    }
}

/// Angle deficit π − Σθ; zero for Euclidean and extended degenerate triangles.
pub fn hyperbolic_area(angles: [f64; 3]) -> f64 {
    (PI - angles[0] - angles[1] - angles[2]).max(0.0)
}

/// ∂θ_c / ∂l_e for an admissible triangle (rows: corners, columns: opposite edges).
pub fn angle_length_jacobian(l: [f64; 3], geometry: BackgroundGeometry) -> Result<Matrix3<f64>> {
    let theta = inner_angles(l, geometry)?;
    let d = half_excess(l);
    let s = 0.5 * (l[0] + l[1] + l[2]);
    // ∂θ_c/∂l_c = w_c, ∂θ_c/∂l_a = −w_c cos θ_b (a, b the other two corners)
    let w: [f64; 3] = match geometry {
        BackgroundGeometry::Euclidean => {
            let area = (s * d[0] * d[1] * d[2]).sqrt();
            [0, 1, 2].map(|c| l[c] / (2.0 * area))
        }
        BackgroundGeometry::Hyperbolic => {
            let sqrt_delta = 2.0 * (s.sinh() * d[0].sinh() * d[1].sinh() * d[2].sinh()).sqrt();
            [0, 1, 2].map(|c| l[c].sinh() / sqrt_delta)
        }
    };
    let mut j = Matrix3::zeros();
    for c in 0..3 {
        let (a, b) = ((c + 1) % 3, (c + 2) % 3);
        j[(c, c)] = w[c];
        j[(c, a)] = -w[c] * theta[b].cos();
        j[(c, b)] = -w[c] * theta[a].cos();
    }
    Ok(j)
}

/// One face evaluated at a conformal state.
#[derive(Clone, Debug, Serialize)]
pub struct TriangleGeometry {
    pub face: [usize; 3],
    /// `[l_jk, l_ik, l_ij]`.
    pub lengths: [f64; 3],
    pub admissible: bool,
    /// Inner angles when admissible, extended angles otherwise.
    pub angles: [f64; 3],
    /// Hyperbolic area; zero in Euclidean geometry.
    pub area: f64,
    /// ∂θ/∂u, present only when requested and the face is admissible.
    #[serde(skip)]
    pub jacobian: Option<Matrix3<f64>>,
}

impl TriangleGeometry {
    /// Evaluates face `face` from precomputed edge lengths.
    pub fn evaluate(
        surface: &WeightedSurface,
        state: &ConformalState,
        lengths: &[f64],
        face: usize,
        with_jacobian: bool,
    ) -> Result<Self> {
        let t = surface.triangulation();
        let corners = t.faces()[face];
        let fe = t.face_edges(face);
        let l = fe.map(|e| lengths[e]);
        let geometry = state.geometry();
        let admissible = is_admissible(l);
        let angles = extended_inner_angles(l, geometry);
        let area = match geometry {
            BackgroundGeometry::Euclidean => 0.0,
            BackgroundGeometry::Hyperbolic => hyperbolic_area(angles),
        };
        let jacobian = if with_jacobian && admissible {
            Some(face_angle_jacobian(surface, state, l, face)?)
        } else {
            None
        };
        Ok(TriangleGeometry {
            face: corners,
            lengths: l,
            admissible,
            angles,
            area,
            jacobian,
        })
    }
}

/// Chain rule ∂θ/∂l · ∂l/∂f · ∂f/∂u for one admissible face.
pub(crate) fn face_angle_jacobian(
    surface: &WeightedSurface,
    state: &ConformalState,
    l: [f64; 3],
    face: usize,
) -> Result<Matrix3<f64>> {
    let t = surface.triangulation();
    let corners = t.faces()[face];
    let fe = t.face_edges(face);
    let geometry = state.geometry();
    let dtheta_dl = angle_length_jacobian(l, geometry).map_err(|_| Error::Inadmissible { face })?;

    let mut dl_df = Matrix3::zeros();
    for (row, &e) in fe.iter().enumerate() {
        let input = EdgeInput::new(surface, state.f(), e);
        let grad = input.length_gradient(geometry, l[row]);
        let ends = t.edges()[e];
        for (k, &v) in ends.iter().enumerate() {
            let col = corners
                .iter()
                .position(|&c| c == v)
                .expect("edge lies on face");
            dl_df[(row, col)] = grad[k];
        }
    }
    let df_du_diag = Matrix3::from_diagonal(&nalgebra::Vector3::from_fn(|c, _| {
        let v = corners[c];
        df_du(surface.epsilon()[v], state.f()[v], geometry)
    }));
    Ok(dtheta_dl * dl_df * df_du_diag)
}

/// ∂(θ_i, θ_j, θ_k)/∂(u_i, u_j, u_k) for `face` under `state`.
pub fn angle_jacobian(
    surface: &WeightedSurface,
    state: &ConformalState,
    face: usize,
) -> Result<Matrix3<f64>> {
    let t = surface.triangulation();
    let lengths = edge_lengths(surface, state)?;
    let l = t.face_edges(face).map(|e| lengths[e]);
    if !is_admissible(l) {
        return Err(Error::Inadmissible { face });
    }
    face_angle_jacobian(surface, state, l, face)
}
