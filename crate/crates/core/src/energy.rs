//! Extended Ricci energy F̃, its gradient, and a damped Newton solver for
//! prescribed α-curvature.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::curvature::{curvature_report, generalized_jacobian};
use crate::error::{Error, Result};
use crate::exec;
use crate::mesh::{check_structure_conditions, BackgroundGeometry, WeightedSurface};
use crate::metric::{check_domain, u_to_f_vertex, ConformalState, EdgeInput};
use crate::triangle::extended_inner_angles;

/// Absolute tolerance of the per-face line integrals.
pub const QUADRATURE_TOL: f64 = 1e-12;
const MAX_DEPTH: u32 = 60;

/// Extended angles of one face with the corner conformal factors given in u.
fn local_angles(
    surface: &WeightedSurface,
    geometry: BackgroundGeometry,
    face: usize,
    u: [f64; 3],
) -> Result<[f64; 3]> {
    let t = surface.triangulation();
    let corners = t.faces()[face];
    let mut f = [0.0; 3];
    for c in 0..3 {
        let v = corners[c];
        f[c] = u_to_f_vertex(surface.epsilon()[v], u[c], geometry)
            .ok_or(Error::DomainExit { vertex: v, u: u[c] })?;
    }
    let fe = t.face_edges(face);
    let mut l = [0.0; 3];
    for c in 0..3 {
        let (a, b) = ((c + 1) % 3, (c + 2) % 3);
        let input = EdgeInput {
            eps: [surface.eps(corners[a]), surface.eps(corners[b])],
            eta: surface.eta_edge(fe[c]),
            f: [f[a], f[b]],
        };
        l[c] = input
            .length(geometry)
            .map_err(|reason| Error::InvalidMetric {
                edge: t.edges()[fe[c]],
                reason,
            })?;
    }
    Ok(extended_inner_angles(l, geometry))
}

/// Adaptive Simpson on [a, b]. Intervals shorter than `1e-13 (b − a)` are
/// accepted as they are: the extended angles are only Hölder continuous where
/// a face degenerates, and below that width the contribution is negligible.
fn adaptive_simpson<F>(g: &F, a: f64, b: f64, tol: f64) -> std::result::Result<f64, ()>
where
    F: Fn(f64) -> Result<f64>,
{
    let eval = |x: f64| g(x).map_err(|_| ());
    let fa = eval(a)?;
    let fb = eval(b)?;
    let m = 0.5 * (a + b);
    let fm = eval(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let min_width = 1e-13 * (b - a);
    simpson_step(&eval, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, min_width)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    g: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    min_width: f64,
) -> std::result::Result<f64, ()>
where
    F: Fn(f64) -> std::result::Result<f64, ()>,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let flm = g(lm)?;
    let frm = g(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || b - a < min_width {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(());
    }
    Ok(
        simpson_step(g, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, min_width)?
            + simpson_step(g, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, min_width)?,
    )
}

/// F̃_ijk(u) − F̃_ijk(u⁰): the integral of Σ θ̃ du along the segment from
/// `base` to `state` (both full u-vectors).
pub fn triangle_energy(
    surface: &WeightedSurface,
    state: &ConformalState,
    face: usize,
    base: &ConformalState,
) -> Result<f64> {
    face_segment_integral(surface, state.geometry(), face, base.u(), state.u())
}

fn face_segment_integral(
    surface: &WeightedSurface,
    geometry: BackgroundGeometry,
    face: usize,
    from: &[f64],
    to: &[f64],
) -> Result<f64> {
    let corners = surface.triangulation().faces()[face];
    let u0 = corners.map(|v| from[v]);
    let d = corners.map(|v| to[v] - from[v]);
    if d.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let g = |s: f64| -> Result<f64> {
        let theta = local_angles(surface, geometry, face, [0, 1, 2].map(|c| u0[c] + s * d[c]))?;
        Ok(theta[0] * d[0] + theta[1] * d[1] + theta[2] * d[2])
    };
    // surface errors from the integrand before blaming the quadrature
    g(0.0)?;
    g(1.0)?;
    adaptive_simpson(&g, 0.0, 1.0, QUADRATURE_TOL).map_err(|_| Error::Quadrature { face })
}

/// ∫ (2π − R̄ e^{αx}) dx from u⁰ to u.
fn vertex_integral(u: f64, u0: f64, alpha: f64, target: f64) -> f64 {
    if alpha == 0.0 {
        (2.0 * PI - target) * (u - u0)
    } else {
        2.0 * PI * (u - u0) - target * ((alpha * u).exp() - (alpha * u0).exp()) / alpha
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyEvaluation {
    pub value: f64,
    /// K̃ − R̄ e^{αu}.
    pub gradient: Vec<f64>,
    pub base_point: Vec<f64>,
}

fn check_target(surface: &WeightedSurface, target: &[f64]) -> Result<()> {
    if target.len() != surface.num_vertices() {
        return Err(Error::Dimension {
            expected: surface.num_vertices(),
            got: target.len(),
        });
    }
    Ok(())
}

/// F̃(u) = −Σ F̃_ijk + Σ_i ∫ (2π − R̄_i e^{αx}) dx, integrated from `base`.
pub fn total_energy(
    surface: &WeightedSurface,
    state: &ConformalState,
    target: &[f64],
    base: &ConformalState,
) -> Result<EnergyEvaluation> {
    check_target(surface, target)?;
    if base.geometry() != state.geometry() || base.len() != state.len() {
        return Err(Error::Config(
            "energy base point must match the state".into(),
        ));
    }
    let alpha = state.alpha();
    let nf = surface.triangulation().num_faces();
    let faces = exec::try_map_range(nf, |f| triangle_energy(surface, state, f, base))?;
    let vertex: f64 = state
        .u()
        .iter()
        .zip(base.u())
        .zip(target)
        .map(|((&u, &u0), &r)| vertex_integral(u, u0, alpha, r))
        .sum();
    let value = vertex - faces.iter().sum::<f64>();
    Ok(EnergyEvaluation {
        value,
        gradient: energy_gradient(surface, state, target)?,
        base_point: base.u().to_vec(),
    })
}

/// ∇F̃ = K̃ − R̄ e^{αu}.
pub fn energy_gradient(
    surface: &WeightedSurface,
    state: &ConformalState,
    target: &[f64],
) -> Result<Vec<f64>> {
    check_target(surface, target)?;
    let k = curvature_report(surface, state, true, false)?.k;
    Ok(gradient_from_k(&k, state, target))
}

fn gradient_from_k(k: &[f64], state: &ConformalState, target: &[f64]) -> Vec<f64> {
    let alpha = state.alpha();
    k.iter()
        .zip(state.u())
        .zip(target)
        .map(|((&k, &u), &r)| k - r * (alpha * u).exp())
        .collect()
}

/// Constraint pinning the kernel direction 𝟙 when the solution is only
/// determined up to a constant shift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Gauge {
    /// Σ u_i = value.
    SumU(f64),
    /// Σ e^{α u_i} = value.
    SumExpAlphaU(f64),
}

impl Gauge {
    /// The gauge value realised by `state`.
    pub fn sum_u(state: &ConformalState) -> Self {
        Gauge::SumU(state.u().iter().sum())
    }

    pub fn sum_exp_alpha_u(state: &ConformalState) -> Self {
        let a = state.alpha();
        Gauge::SumExpAlphaU(state.u().iter().map(|&u| (a * u).exp()).sum())
    }

    fn residual_and_row(&self, u: &[f64], alpha: f64) -> (f64, Vec<f64>) {
        match *self {
            Gauge::SumU(c) => (u.iter().sum::<f64>() - c, vec![1.0; u.len()]),
            Gauge::SumExpAlphaU(c) => {
                let e: Vec<f64> = u.iter().map(|&x| (alpha * x).exp()).collect();
                let row = e.iter().map(|&x| alpha * x).collect();
                (e.iter().sum::<f64>() - c, row)
            }
        }
    }
}

/// True when the Euclidean energy is invariant under u → u + c𝟙 (αR̄ ≡ 0).
pub fn gauge_required(geometry: BackgroundGeometry, alpha: f64, target: &[f64]) -> bool {
    geometry == BackgroundGeometry::Euclidean && target.iter().all(|&r| alpha * r == 0.0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Stop when ‖R̃_α − R̄‖∞ falls below this.
    pub tol: f64,
    pub max_iterations: usize,
    pub max_halvings: u32,
    pub gauge: Option<Gauge>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-11,
            max_iterations: 200,
            max_halvings: 30,
            gauge: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// ‖R̃_α − R̄‖∞ at the returned state.
    pub residual: f64,
    pub gradient_norm: f64,
    pub gauge: Option<Gauge>,
    pub warnings: Vec<String>,
}

pub const UNIQUENESS_WARNING: &str = "uniqueness not guaranteed: alpha * target > 0 at some vertex";

fn alpha_residual(grad: &[f64], u: &[f64], alpha: f64) -> f64 {
    grad.iter()
        .zip(u)
        .map(|(&g, &x)| (g * (-alpha * x).exp()).abs())
        .fold(0.0, f64::max)
}

/// Damped Newton iteration on ∇F̃ = 0 from `initial`; the Hessian is
/// Λ − α diag(R̄ e^{αu}) with degenerate faces contributing nothing.
pub fn newton_solve(
    surface: &WeightedSurface,
    initial: &ConformalState,
    target: &[f64],
    options: &SolveOptions,
) -> Result<(ConformalState, SolveReport)> {
    check_target(surface, target)?;
    let alpha = initial.alpha();
    let geometry = initial.geometry();
    let n = surface.num_vertices();

    let mut warnings = Vec::new();
    if target.iter().any(|&r| alpha * r > 0.0) {
        warnings.push(UNIQUENESS_WARNING.to_string());
    }
    if !check_structure_conditions(surface).is_empty() {
        warnings.push("structure conditions fail; rigidity does not apply".to_string());
    }
    let gauge = if gauge_required(geometry, alpha, target) {
        match options.gauge {
            None => return Err(Error::GaugeRequired),
            Some(Gauge::SumExpAlphaU(_)) if alpha == 0.0 => {
                return Err(Error::Config(
                    "the exp(alpha u) gauge is degenerate at alpha = 0".into(),
                ))
            }
            g => g,
        }
    } else {
        None
    };

    let merit = |grad: &[f64], u: &[f64]| -> f64 {
        let mut m: f64 = grad.iter().map(|g| g * g).sum();
        if let Some(g) = &gauge {
            m += g.residual_and_row(u, alpha).0.powi(2);
        }
        m.sqrt()
    };

    let mut state = initial.clone();
    let mut grad = energy_gradient(surface, &state, target)?;
    let mut iterations = 0;
    loop {
        let residual = alpha_residual(&grad, state.u(), alpha);
        let gauge_ok = gauge.is_none_or(|g| {
            g.residual_and_row(state.u(), alpha).0.abs() <= options.tol * (1.0 + n as f64)
        });
        if residual < options.tol && gauge_ok {
            let gradient_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            return Ok((
                state,
                SolveReport {
                    iterations,
                    residual,
                    gradient_norm,
                    gauge,
                    warnings,
                },
            ));
        }
        if iterations >= options.max_iterations {
            return Err(Error::MaxIterations {
                iterations,
                residual,
            });
        }
        iterations += 1;

        let (_, lambda) = generalized_jacobian(surface, &state)?;
        let mut h = lambda;
        for i in 0..n {
            h[(i, i)] -= alpha * target[i] * (alpha * state.u()[i]).exp();
        }
        let step = newton_direction(&h, &grad, gauge.as_ref(), state.u(), alpha)?;

        let current = merit(&grad, state.u());
        let mut t = 1.0;
        let mut accepted = None;
        let mut fallback = None;
        for _ in 0..=options.max_halvings {
            let u: Vec<f64> = state
                .u()
                .iter()
                .zip(&step)
                .map(|(&x, &d)| x + t * d)
                .collect();
            if check_domain(surface, &u, geometry).is_ok() {
                if let Ok(candidate) = state.with_u(surface, u) {
                    if let Ok(g) = energy_gradient(surface, &candidate, target) {
                        let m = merit(&g, candidate.u());
                        if m < current {
                            accepted = Some((candidate, g));
                            break;
                        }
                        if fallback.is_none() {
                            fallback = Some((candidate, g));
                        }
                    }
                }
            }
            t *= 0.5;
        }
        // with no decrease found, take the last in-domain trial step rather
        // than stalling; the iteration cap bounds the damage
        let (next, g) = accepted.or(fallback).ok_or(Error::MaxIterations {
            iterations,
            residual,
        })?;
        state = next;
        grad = g;
    }
}

fn newton_direction(
    h: &DMatrix<f64>,
    grad: &[f64],
    gauge: Option<&Gauge>,
    u: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    let n = grad.len();
    let (mat, rhs) = match gauge {
        None => (
            h.clone(),
            DVector::from_iterator(n, grad.iter().map(|g| -g)),
        ),
        Some(g) => {
            let (c, row) = g.residual_and_row(u, alpha);
            let mut m = DMatrix::zeros(n + 1, n + 1);
            m.view_mut((0, 0), (n, n)).copy_from(h);
            for i in 0..n {
                m[(i, n)] = row[i];
                m[(n, i)] = row[i];
            }
            let mut r = DVector::zeros(n + 1);
            for i in 0..n {
                r[i] = -grad[i];
            }
            r[n] = -c;
            (m, r)
        }
    };
    let scale = mat.amax().max(1.0);
    let mut shift = 0.0;
    for _ in 0..6 {
        let mut m = mat.clone();
        for i in 0..n {
            m[(i, i)] += shift;
        }
        if let Some(x) = m.lu().solve(&rhs) {
            if x.iter().all(|v| v.is_finite()) {
                return Ok(x.iter().take(n).copied().collect());
            }
        }
        shift = if shift == 0.0 {
            1e-10 * scale
        } else {
            shift * 100.0
        };
    }
    Err(Error::SingularHessian)
}

/// Independent Newton solves from several starts, run in parallel.
pub fn solve_many(
    surface: &WeightedSurface,
    starts: &[ConformalState],
    target: &[f64],
    options: &SolveOptions,
) -> Vec<Result<(ConformalState, SolveReport)>> {
    exec::map_slice(starts, |s| newton_solve(surface, s, target, options))
}
