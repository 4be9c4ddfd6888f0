//! Conformal factors, the f ↔ u coordinate change and polyhedral edge lengths.
//!
//! Euclidean: `l² = ε_i e^{2f_i} + ε_j e^{2f_j} + 2η e^{f_i+f_j}`.
//! Hyperbolic: `cosh l = √((1+ε_i e^{2f_i})(1+ε_j e^{2f_j})) + η e^{f_i+f_j}`.
//!
//! Flows and solvers work in u. In Euclidean geometry u = f; in hyperbolic
//! geometry u = f on ε = 0 vertices and u = ln tanh(r/2) with e^f = sinh r on
//! ε = 1 vertices, so u < 0 there.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec;
use crate::mesh::{BackgroundGeometry, WeightedSurface};

/// Below this the hyperbolic `cosh l − 1` is treated as rounding noise around
/// zero instead of a metric violation.
pub const ARCCOSH_GUARD: f64 = 1e-12;

/// Per-vertex conformal factors in both coordinates, with the background
/// geometry and the curvature parameter α.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConformalState {
    f: Vec<f64>,
    u: Vec<f64>,
    geometry: BackgroundGeometry,
    alpha: f64,
}

impl ConformalState {
    pub fn from_f(
        surface: &WeightedSurface,
        f: Vec<f64>,
        geometry: BackgroundGeometry,
        alpha: f64,
    ) -> Result<Self> {
        check_len(surface, f.len())?;
        let u = f_to_u(surface, &f, geometry);
        Ok(ConformalState {
            f,
            u,
            geometry,
            alpha,
        })
    }

    /// Fails with [`Error::DomainExit`] if a hyperbolic ε = 1 vertex has u ≥ 0.
    pub fn from_u(
        surface: &WeightedSurface,
        u: Vec<f64>,
        geometry: BackgroundGeometry,
        alpha: f64,
    ) -> Result<Self> {
        check_len(surface, u.len())?;
        let f = u_to_f(surface, &u, geometry)?;
        Ok(ConformalState {
            f,
            u,
            geometry,
            alpha,
        })
    }

    /// The state with f ≡ 0.
    pub fn zero(surface: &WeightedSurface, geometry: BackgroundGeometry, alpha: f64) -> Self {
        Self::from_f(surface, vec![0.0; surface.num_vertices()], geometry, alpha)
            .expect("length matches")
    }

    /// Same geometry and α at a new u.
    pub fn with_u(&self, surface: &WeightedSurface, u: Vec<f64>) -> Result<Self> {
        Self::from_u(surface, u, self.geometry, self.alpha)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn geometry(&self) -> BackgroundGeometry {
        self.geometry
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

fn check_len(surface: &WeightedSurface, got: usize) -> Result<()> {
    let expected = surface.num_vertices();
    if got != expected {
        return Err(Error::Dimension { expected, got });
    }
    Ok(())
}

/// u_i from f_i for a single vertex.
pub fn f_to_u_vertex(epsilon: u8, f: f64, geometry: BackgroundGeometry) -> f64 {
    match (geometry, epsilon) {
        (BackgroundGeometry::Hyperbolic, 1) => {
            // ½ ln((h − 1)/(h + 1)) with h = √(1+e^{2f}); written as
            // −atanh(1/h) for f > 0 and f − ln(1 + h) otherwise to avoid cancellation
            let h = f.exp().hypot(1.0);
            if f > 0.0 {
                -h.recip().atanh()
            } else {
                f - h.ln_1p()
            }
        }
        _ => f,
    }
}

/// f_i from u_i for a single vertex; `None` when u ≥ 0 on a hyperbolic ε = 1 vertex.
pub fn u_to_f_vertex(epsilon: u8, u: f64, geometry: BackgroundGeometry) -> Option<f64> {
    match (geometry, epsilon) {
        (BackgroundGeometry::Hyperbolic, 1) => {
            if !(u < 0.0) {
                return None;
            }
            // e^f = 2e^u / (1 − e^{2u})
            Some(std::f64::consts::LN_2 + u - (-(2.0 * u).exp_m1()).ln())
        }
        _ => Some(u),
    }
}

/// ∂f_i/∂u_i: 1 except on hyperbolic ε = 1 vertices, where it is √(1+e^{2f_i}) = cosh r_i.
pub fn df_du(epsilon: u8, f: f64, geometry: BackgroundGeometry) -> f64 {
    match (geometry, epsilon) {
        (BackgroundGeometry::Hyperbolic, 1) => f.exp().hypot(1.0),
        _ => 1.0,
    }
}

pub fn f_to_u(surface: &WeightedSurface, f: &[f64], geometry: BackgroundGeometry) -> Vec<f64> {
    f.iter()
        .zip(surface.epsilon())
        .map(|(&fi, &e)| f_to_u_vertex(e, fi, geometry))
        .collect()
}

pub fn u_to_f(
    surface: &WeightedSurface,
    u: &[f64],
    geometry: BackgroundGeometry,
) -> Result<Vec<f64>> {
    u.iter()
        .zip(surface.epsilon())
        .enumerate()
        .map(|(i, (&ui, &e))| {
            u_to_f_vertex(e, ui, geometry).ok_or(Error::DomainExit { vertex: i, u: ui })
        })
        .collect()
}

/// Checks that u lies in the coordinate domain ℝ^{N₀} × ℝ^{N₁}_{<0} (hyperbolic).
pub fn check_domain(
    surface: &WeightedSurface,
    u: &[f64],
    geometry: BackgroundGeometry,
) -> Result<()> {
    if geometry == BackgroundGeometry::Hyperbolic {
        for (i, (&ui, &e)) in u.iter().zip(surface.epsilon()).enumerate() {
            if e == 1 && !(ui < 0.0) {
                return Err(Error::DomainExit { vertex: i, u: ui });
            }
        }
    }
    Ok(())
}

/// Edge data needed by both the length and its derivative.
#[derive(Clone, Copy, Debug)]
pub struct EdgeInput {
    pub eps: [f64; 2],
    pub eta: f64,
    pub f: [f64; 2],
}

impl EdgeInput {
    pub fn new(surface: &WeightedSurface, f: &[f64], edge: usize) -> Self {
        let [i, j] = surface.triangulation().edges()[edge];
        EdgeInput {
            eps: [surface.eps(i), surface.eps(j)],
            eta: surface.eta_edge(edge),
            f: [f[i], f[j]],
        }
    }

    /// Edge length, or a reason why the weights do not define one here.
    pub fn length(&self, geometry: BackgroundGeometry) -> std::result::Result<f64, String> {
        let [ei, ej] = self.eps;
        let [fi, fj] = self.f;
        match geometry {
            BackgroundGeometry::Euclidean => {
                // l = e^{(f_i+f_j)/2} √(ε_i e^{f_i−f_j} + ε_j e^{f_j−f_i} + 2η)
                let d = fi - fj;
                let bracket = ei * d.exp() + ej * (-d).exp() + 2.0 * self.eta;
                if !(bracket > 0.0) {
                    return Err(format!("squared length factor {bracket} is not positive"));
                }
                Ok((0.5 * (fi + fj)).exp() * bracket.sqrt())
            }
            BackgroundGeometry::Hyperbolic => {
                let y = self.cosh_minus_one();
                if !(y >= -ARCCOSH_GUARD) {
                    return Err(format!("arccosh argument 1 + {y} is below 1"));
                }
                let y = y.max(0.0);
                Ok((y + (y * (y + 2.0)).sqrt()).ln_1p())
            }
        }
    }

    /// cosh l − 1 evaluated without cancellation.
    fn cosh_minus_one(&self) -> f64 {
        let a = self.eps[0] * (2.0 * self.f[0]).exp();
        let b = self.eps[1] * (2.0 * self.f[1]).exp();
        let p = ((1.0 + a) * (1.0 + b)).sqrt();
        (a + b + a * b) / (p + 1.0) + self.eta * (self.f[0] + self.f[1]).exp()
    }

    /// (∂l/∂f_i, ∂l/∂f_j) at length `l > 0`.
    pub fn length_gradient(&self, geometry: BackgroundGeometry, l: f64) -> [f64; 2] {
        let g = (self.f[0] + self.f[1]).exp();
        let a = self.eps[0] * (2.0 * self.f[0]).exp();
        let b = self.eps[1] * (2.0 * self.f[1]).exp();
        match geometry {
            BackgroundGeometry::Euclidean => [(a + self.eta * g) / l, (b + self.eta * g) / l],
            BackgroundGeometry::Hyperbolic => {
                let p = ((1.0 + a) * (1.0 + b)).sqrt();
                let sinh_l = l.sinh();
                [
                    (a * p / (1.0 + a) + self.eta * g) / sinh_l,
                    (b * p / (1.0 + b) + self.eta * g) / sinh_l,
                ]
            }
        }
    }
}

/// Length of `edge` under `state`.
pub fn edge_length(surface: &WeightedSurface, state: &ConformalState, edge: usize) -> Result<f64> {
    EdgeInput::new(surface, state.f(), edge)
        .length(state.geometry())
        .map_err(|reason| Error::InvalidMetric {
            edge: surface.triangulation().edges()[edge],
            reason,
        })
}

/// All edge lengths, indexed like `Triangulation::edges`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeLengths(pub Vec<f64>);

impl std::ops::Deref for EdgeLengths {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn edge_lengths(surface: &WeightedSurface, state: &ConformalState) -> Result<EdgeLengths> {
    let m = surface.triangulation().num_edges();
    exec::try_map_range(m, |e| edge_length(surface, state, e)).map(EdgeLengths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{tetrahedron, Triangulation};
    use BackgroundGeometry::{Euclidean, Hyperbolic};

    fn input(eps: [f64; 2], eta: f64, f: [f64; 2]) -> EdgeInput {
        EdgeInput { eps, eta, f }
    }

    #[test]
    fn euclidean_tangential_unit_radii() {
        let l = input([1.0, 1.0], 1.0, [0.0, 0.0])
            .length(Euclidean)
            .unwrap();
        assert!((l - 2.0).abs() < 1e-15);
    }

    #[test]
    fn euclidean_vertex_scaling_half() {
        let l = input([0.0, 0.0], 0.5, [0.0, 0.0])
            .length(Euclidean)
            .unwrap();
        assert!((l - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hyperbolic_vertex_scaling_unit_length() {
        let eta = 1f64.cosh() - 1.0;
        let l = input([0.0, 0.0], eta, [0.0, 0.0])
            .length(Hyperbolic)
            .unwrap();
        assert!((l - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hyperbolic_mixed_edge() {
        // arccosh(√2 + 0.1) evaluated as ln(x + √(x² − 1))
        let x = 2f64.sqrt() + 0.1;
        let oracle = (x + (x * x - 1.0).sqrt()).ln();
        let l = input([1.0, 0.0], 0.1, [0.0, 0.0])
            .length(Hyperbolic)
            .unwrap();
        assert!((l - oracle).abs() < 1e-14);
        assert!((l - 0.975).abs() < 5e-4);
    }

    #[test]
    fn invalid_metric_when_condition_one_fails() {
        assert!(input([0.0, 0.0], -0.2, [0.0, 0.0])
            .length(Euclidean)
            .is_err());
        assert!(input([0.0, 0.0], -0.2, [0.0, 0.0])
            .length(Hyperbolic)
            .is_err());
        let surface = WeightedSurface::vertex_scaling(tetrahedron(), -1.0).unwrap();
        let state = ConformalState::zero(&surface, Euclidean, 0.0);
        assert!(matches!(
            edge_length(&surface, &state, 0),
            Err(Error::InvalidMetric { .. })
        ));
    }

    #[test]
    fn hyperbolic_guard_band_clamps() {
        // η tuned so that cosh l − 1 is a tiny negative rounding residue
        let e = input([0.0, 0.0], -1e-14, [0.0, 0.0]);
        assert_eq!(e.length(Hyperbolic).unwrap(), 0.0);
        let e = input([0.0, 0.0], -1e-9, [0.0, 0.0]);
        assert!(e.length(Hyperbolic).is_err());
    }

    fn one_vertex_surface(eps: u8) -> WeightedSurface {
        // any closed mesh works; only vertex 0's epsilon matters below
        let t: Triangulation = tetrahedron();
        WeightedSurface::new(t, vec![eps, 0, 0, 0], vec![1.0; 6]).unwrap()
    }

    #[test]
    fn euclidean_coordinates_are_identity() {
        let s = one_vertex_surface(1);
        let f = vec![0.3, -1.0, 2.0, 0.0];
        assert_eq!(f_to_u(&s, &f, Euclidean), f);
        assert_eq!(u_to_f(&s, &f, Euclidean).unwrap(), f);
    }

    #[test]
    fn hyperbolic_u_at_f_zero() {
        let u = f_to_u_vertex(1, 0.0, Hyperbolic);
        let direct = 0.5 * ((2f64.sqrt() - 1.0) / (2f64.sqrt() + 1.0)).ln();
        assert!((u - direct).abs() < 1e-15);
        assert!((u - (2f64.sqrt() - 1.0).ln()).abs() < 1e-15);
        assert!((u + 0.8814).abs() < 1e-4);
        // e^f = sinh r, u = ln tanh(r/2)
        let r = 1f64.asinh();
        assert!((u - (r / 2.0).tanh().ln()).abs() < 1e-15);
        assert!(u_to_f_vertex(1, u, Hyperbolic).unwrap().abs() < 1e-15);
    }

    #[test]
    fn hyperbolic_u_tends_to_zero_from_below() {
        let mut prev = f64::NEG_INFINITY;
        for f in [1.0, 5.0, 10.0, 20.0, 40.0] {
            let u = f_to_u_vertex(1, f, Hyperbolic);
            assert!(u < 0.0 && u > prev);
            prev = u;
        }
        assert!(prev > -1e-17);
    }

    #[test]
    fn domain_exit_on_nonnegative_u() {
        assert_eq!(u_to_f_vertex(1, 0.1, Hyperbolic), None);
        let s = one_vertex_surface(1);
        let err =
            ConformalState::from_u(&s, vec![0.1, 0.0, 0.0, 0.0], Hyperbolic, 0.0).unwrap_err();
        assert!(matches!(err, Error::DomainExit { vertex: 0, .. }));
    }

    #[test]
    fn closed_form_inverse_matches_bisection() {
        // invert u(f) by bisection on the defining expression
        let u_of_f = |f: f64| {
            let s = (1.0 + (2.0 * f).exp()).sqrt();
            0.5 * ((s - 1.0) / (s + 1.0)).abs().ln()
        };
        for &target in &[-3.0, -1.0, -0.5, -0.1, -0.01] {
            let (mut lo, mut hi) = (-40.0, 40.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if u_of_f(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let f = u_to_f_vertex(1, target, Hyperbolic).unwrap();
            assert!((f - 0.5 * (lo + hi)).abs() < 1e-9, "u = {target}");
        }
    }

    #[test]
    fn df_du_is_derivative_of_inverse() {
        for &u in &[-2.0, -0.7, -0.05] {
            let h = 1e-6;
            let fd = (u_to_f_vertex(1, u + h, Hyperbolic).unwrap()
                - u_to_f_vertex(1, u - h, Hyperbolic).unwrap())
                / (2.0 * h);
            let f = u_to_f_vertex(1, u, Hyperbolic).unwrap();
            assert!((df_du(1, f, Hyperbolic) - fd).abs() < 1e-7 * fd.abs());
        }
    }

    #[test]
    fn length_gradient_matches_finite_differences() {
        for geometry in [Euclidean, Hyperbolic] {
            for (eps, eta, f) in [
                ([1.0, 1.0], 0.4, [0.2, -0.3]),
                ([0.0, 1.0], 0.9, [-0.5, 0.1]),
                ([0.0, 0.0], 1.5, [0.3, 0.7]),
            ] {
                let e = input(eps, eta, f);
                let l = e.length(geometry).unwrap();
                let g = e.length_gradient(geometry, l);
                for k in 0..2 {
                    let h = 1e-6;
                    let mut p = e;
                    p.f[k] += h;
                    let mut m = e;
                    m.f[k] -= h;
                    let fd =
                        (p.length(geometry).unwrap() - m.length(geometry).unwrap()) / (2.0 * h);
                    assert!((g[k] - fd).abs() < 1e-8, "{geometry} {k}: {} vs {fd}", g[k]);
                }
            }
        }
    }
}
