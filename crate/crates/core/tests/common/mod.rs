#![allow(dead_code)]

use dcs_core::curvature::classical_curvature;
use dcs_core::mesh::{
    genus2, tetrahedron, torus7, BackgroundGeometry, Triangulation, WeightedSurface,
};
use dcs_core::metric::ConformalState;
use dcs_core::triangle::is_admissible;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn meshes() -> Vec<(&'static str, Triangulation)> {
    vec![
        ("tetrahedron", tetrahedron()),
        ("torus7", torus7()),
        ("genus2", genus2()),
    ]
}

/// Random weights satisfying both structure conditions: ε ∈ {0, 1} per vertex
/// and η ∈ [0.3, 1] (all positive, so the corner condition holds trivially).
pub fn random_weights(t: Triangulation, rng: &mut ChaCha8Rng) -> WeightedSurface {
    let n = t.num_vertices();
    let m = t.num_edges();
    let scheme = rng.gen_range(0..3);
    let epsilon: Vec<u8> = (0..n)
        .map(|_| match scheme {
            0 => 1,
            1 => 0,
            _ => rng.gen_range(0..2),
        })
        .collect();
    let eta: Vec<f64> = (0..m).map(|_| rng.gen_range(0.3..=1.0)).collect();
    WeightedSurface::new(t, epsilon, eta).unwrap()
}

pub fn all_admissible(surface: &WeightedSurface, state: &ConformalState) -> bool {
    let t = surface.triangulation();
    let Ok(l) = dcs_core::metric::edge_lengths(surface, state) else {
        return false;
    };
    (0..t.num_faces()).all(|f| is_admissible(t.face_edges(f).map(|e| l[e])))
}

/// Smallest (a + b − c)/(a + b + c) over all faces; 0 at a degenerate face.
pub fn min_relative_slack(surface: &WeightedSurface, state: &ConformalState) -> f64 {
    let t = surface.triangulation();
    let l = dcs_core::metric::edge_lengths(surface, state).unwrap();
    (0..t.num_faces())
        .map(|f| {
            let mut v = t.face_edges(f).map(|e| l[e]);
            v.sort_by(f64::total_cmp);
            (v[0] + v[1] - v[2]) / (v[0] + v[1] + v[2])
        })
        .fold(f64::INFINITY, f64::min)
}

/// Rejection-samples an admissible state around a random centre.
pub fn random_admissible_state(
    surface: &WeightedSurface,
    geometry: BackgroundGeometry,
    alpha: f64,
    spread: f64,
    rng: &mut ChaCha8Rng,
) -> ConformalState {
    let n = surface.num_vertices();
    for _ in 0..10_000 {
        let u: Vec<f64> = match geometry {
            BackgroundGeometry::Euclidean => {
                let c = rng.gen_range(-1.0..1.0);
                (0..n).map(|_| c + rng.gen_range(-spread..spread)).collect()
            }
            BackgroundGeometry::Hyperbolic => {
                let c = rng.gen_range(-2.0..-0.8);
                (0..n)
                    .map(|_| (c + rng.gen_range(-spread..spread)).min(-0.05))
                    .collect()
            }
        };
        let state = ConformalState::from_u(surface, u, geometry, alpha).unwrap();
        if all_admissible(surface, &state) {
            return state;
        }
    }
    panic!("no admissible state found");
}

/// Central differences of K with respect to u.
pub fn fd_curvature_jacobian(
    surface: &WeightedSurface,
    state: &ConformalState,
    h: f64,
) -> DMatrix<f64> {
    let n = state.len();
    let mut j = DMatrix::zeros(n, n);
    for col in 0..n {
        let mut up = state.u().to_vec();
        let mut dn = state.u().to_vec();
        up[col] += h;
        dn[col] -= h;
        let kp = classical_curvature(surface, &state.with_u(surface, up).unwrap(), false).unwrap();
        let km = classical_curvature(surface, &state.with_u(surface, dn).unwrap(), false).unwrap();
        for row in 0..n {
            j[(row, col)] = (kp[row] - km[row]) / (2.0 * h);
        }
    }
    j
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m: f64, (x, y)| m.max((x - y).abs()))
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Subtracts the mean, for comparisons modulo the constant-shift kernel.
pub fn centered(x: &[f64]) -> Vec<f64> {
    let m = mean(x);
    x.iter().map(|v| v - m).collect()
}

/// Perturbation with entries uniform in [−r, r].
pub fn perturbation(n: usize, r: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-r..=r)).collect()
}
