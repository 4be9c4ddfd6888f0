//! Vertex curvatures K and R_α (plain and extended), Gauss-Bonnet bookkeeping,
//! the curvature Jacobian Λ = ∂K/∂u, the α-Laplacian and flow linearizations.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec;
use crate::flows::FlowKind;
use crate::mesh::{BackgroundGeometry, WeightedSurface};
use crate::metric::{edge_lengths, ConformalState};
use crate::triangle::TriangleGeometry;

/// Relative threshold below which an eigenvalue counts as zero.
pub const ZERO_EIGENVALUE_RTOL: f64 = 1e-8;

/// Evaluates every face at `state`. Jacobians are attached to admissible faces
/// when `with_jacobian` is set.
pub fn evaluate_faces(
    surface: &WeightedSurface,
    state: &ConformalState,
    with_jacobian: bool,
) -> Result<Vec<TriangleGeometry>> {
    let lengths = edge_lengths(surface, state)?;
    let nf = surface.triangulation().num_faces();
    exec::try_map_range(nf, |f| {
        TriangleGeometry::evaluate(surface, state, &lengths, f, with_jacobian)
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureReport {
    /// Classical curvature K (or K̃ when extension was used).
    pub k: Vec<f64>,
    /// R_α = K e^{−α u}.
    pub r_alpha: Vec<f64>,
    /// Per face: the extended angles were used.
    pub extended: Vec<bool>,
    /// Total hyperbolic area; zero in Euclidean geometry.
    pub area: f64,
    pub euler_characteristic: i64,
    /// ΣK − 2πχ − Area.
    pub gauss_bonnet_residual: f64,
    /// Λ = ∂K/∂u, when requested.
    #[serde(skip)]
    pub jacobian: Option<DMatrix<f64>>,
}

impl CurvatureReport {
    pub fn degenerate_faces(&self) -> Vec<usize> {
        self.extended
            .iter()
            .enumerate()
            .filter_map(|(f, &e)| e.then_some(f))
            .collect()
    }
}

/// Full curvature report. With `use_extension = false` any inadmissible face
/// is an error; the Jacobian additionally needs every face admissible.
pub fn curvature_report(
    surface: &WeightedSurface,
    state: &ConformalState,
    use_extension: bool,
    with_jacobian: bool,
) -> Result<CurvatureReport> {
    let faces = evaluate_faces(surface, state, with_jacobian)?;
    if !use_extension || with_jacobian {
        if let Some(f) = faces.iter().position(|g| !g.admissible) {
            return Err(Error::Inadmissible { face: f });
        }
    }
    let n = surface.num_vertices();
    let mut k = vec![2.0 * PI; n];
    let mut area = 0.0;
    for g in &faces {
        for c in 0..3 {
            k[g.face[c]] -= g.angles[c];
        }
        area += g.area;
    }
    let chi = surface.triangulation().euler_characteristic();
    let total: f64 = k.iter().sum();
    let gauss_bonnet_residual = total - 2.0 * PI * chi as f64 - area;
    let r_alpha = scale_by_exp(&k, state.u(), -state.alpha());
    let jacobian = with_jacobian.then(|| assemble_jacobian(n, &faces));
    Ok(CurvatureReport {
        k,
        r_alpha,
        extended: faces.iter().map(|g| !g.admissible).collect(),
        area,
        euler_characteristic: chi,
        gauss_bonnet_residual,
        jacobian,
    })
}

/// `x_i e^{c u_i}`.
pub(crate) fn scale_by_exp(x: &[f64], u: &[f64], c: f64) -> Vec<f64> {
    x.iter()
        .zip(u)
        .map(|(&xi, &ui)| xi * (c * ui).exp())
        .collect()
}

/// Λ = −Σ_faces ∂θ/∂u; faces without a Jacobian contribute nothing.
fn assemble_jacobian(n: usize, faces: &[TriangleGeometry]) -> DMatrix<f64> {
    let mut lambda = DMatrix::zeros(n, n);
    for g in faces {
        if let Some(j) = &g.jacobian {
            for a in 0..3 {
                for b in 0..3 {
                    lambda[(g.face[a], g.face[b])] -= j[(a, b)];
                }
            }
        }
    }
    lambda
}

/// K_i = 2π − Σ θ_i (θ̃ when `use_extension`).
pub fn classical_curvature(
    surface: &WeightedSurface,
    state: &ConformalState,
    use_extension: bool,
) -> Result<Vec<f64>> {
    curvature_report(surface, state, use_extension, false).map(|r| r.k)
}

/// R_{α,i} = K_i / e^{α u_i}.
pub fn alpha_curvature(
    surface: &WeightedSurface,
    state: &ConformalState,
    use_extension: bool,
) -> Result<Vec<f64>> {
    curvature_report(surface, state, use_extension, false).map(|r| r.r_alpha)
}

/// Λ = ∂(K_1..K_N)/∂(u_1..u_N) on the admissible space.
pub fn curvature_jacobian(
    surface: &WeightedSurface,
    state: &ConformalState,
) -> Result<DMatrix<f64>> {
    curvature_report(surface, state, false, true).map(|r| r.jacobian.expect("requested"))
}

/// Hessian of the extended energy's face part: like Λ, but degenerate faces
/// (where the extended angles are locally constant) contribute zero.
pub(crate) fn generalized_jacobian(
    surface: &WeightedSurface,
    state: &ConformalState,
) -> Result<(Vec<TriangleGeometry>, DMatrix<f64>)> {
    let faces = evaluate_faces(surface, state, true)?;
    let lambda = assemble_jacobian(surface.num_vertices(), &faces);
    Ok((faces, lambda))
}

/// Δ_α g_i = −e^{−α u_i} Σ_j (∂K_i/∂u_j) g_j.
pub fn alpha_laplacian(
    surface: &WeightedSurface,
    state: &ConformalState,
    g: &[f64],
) -> Result<Vec<f64>> {
    if g.len() != surface.num_vertices() {
        return Err(Error::Dimension {
            expected: surface.num_vertices(),
            got: g.len(),
        });
    }
    let lambda = curvature_jacobian(surface, state)?;
    Ok(apply_laplacian(&lambda, state.u(), state.alpha(), g))
}

pub(crate) fn apply_laplacian(lambda: &DMatrix<f64>, u: &[f64], alpha: f64, g: &[f64]) -> Vec<f64> {
    let lg = lambda * DVector::from_column_slice(g);
    lg.iter()
        .zip(u)
        .map(|(&x, &ui)| -(-alpha * ui).exp() * x)
        .collect()
}

/// Eigenvalues of a flow linearization with sign counts.
#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
    /// Absolute threshold used for the zero count.
    pub zero_threshold: f64,
}

impl Spectrum {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(|a, b| a.total_cmp(b));
        let scale = eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let zero_threshold = ZERO_EIGENVALUE_RTOL * scale;
        let zero = eigenvalues
            .iter()
            .filter(|x| x.abs() < zero_threshold)
            .count();
        let negative = eigenvalues
            .iter()
            .filter(|&&x| x <= -zero_threshold)
            .count();
        let positive = eigenvalues.len() - zero - negative;
        Spectrum {
            eigenvalues,
            negative,
            zero,
            positive,
            zero_threshold,
        }
    }

    /// Eigenvalues of a symmetric matrix.
    pub fn of_symmetric(m: DMatrix<f64>) -> Self {
        Self::from_eigenvalues(SymmetricEigen::new(m).eigenvalues.iter().copied().collect())
    }
}

/// Spectrum of the curvature Jacobian Λ itself.
pub fn jacobian_spectrum(surface: &WeightedSurface, state: &ConformalState) -> Result<Spectrum> {
    let lambda = curvature_jacobian(surface, state)?;
    Ok(Spectrum::of_symmetric(symmetrize(lambda)))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// Symmetric square root of a positive semi-definite matrix (negative
/// rounding-level eigenvalues are clamped to zero).
fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let d = eig.eigenvalues.map(|x| x.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// Eigenvalues of the Jacobian DΓ of a flow field, assembled from Λ,
/// Σ = diag(e^{u}) and diag(R̄) in symmetrized form:
///
/// * normalized Ricci: `α R_av I − L − α R_av v vᵀ / Σe^{αu}`, v = e^{αu/2};
/// * Ricci / modified Ricci: `−L + α diag(R̄)` (R̄ = 0 for the plain flow);
/// * Calabi / modified Calabi: `−Q^{½}(Q − α L′)Q^{½}` with Q = L and
///   L′ = diag(R̄), L′ = R_av I for the Euclidean plain flow and 0 for the
///   hyperbolic one;
///
/// where L = Σ^{−α/2} Λ Σ^{−α/2}. Each matrix is similar to DΓ at a fixed
/// point of the corresponding flow.
pub fn linearization_spectrum(
    surface: &WeightedSurface,
    state: &ConformalState,
    kind: FlowKind,
    target: Option<&[f64]>,
) -> Result<Spectrum> {
    let lambda = symmetrize(curvature_jacobian(surface, state)?);
    let n = surface.num_vertices();
    let alpha = state.alpha();
    let u = state.u();
    let s = DVector::from_iterator(n, u.iter().map(|&ui| (-0.5 * alpha * ui).exp()));
    let l = DMatrix::from_fn(n, n, |i, j| s[i] * lambda[(i, j)] * s[j]);

    let need_target = || -> Result<DVector<f64>> {
        let t = target.ok_or_else(|| Error::Config(format!("{kind} needs a target curvature")))?;
        if t.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: t.len(),
            });
        }
        Ok(DVector::from_column_slice(t))
    };
    let average = || {
        let chi = surface.triangulation().euler_characteristic() as f64;
        let total: f64 = u.iter().map(|&ui| (alpha * ui).exp()).sum();
        (2.0 * PI * chi / total, total)
    };

    let m = match kind {
        FlowKind::NormalizedRicci => {
            if state.geometry() != BackgroundGeometry::Euclidean {
                return Err(Error::Config(
                    "normalized Ricci flow is defined for Euclidean geometry only".into(),
                ));
            }
            let (r_av, total) = average();
            let v = DVector::from_iterator(n, u.iter().map(|&ui| (0.5 * alpha * ui).exp()));
            DMatrix::identity(n, n) * (alpha * r_av)
                - &l
                - (&v * v.transpose()) * (alpha * r_av / total)
        }
        FlowKind::Ricci => -&l,
        FlowKind::ModifiedRicci => -&l + DMatrix::from_diagonal(&need_target()?) * alpha,
        FlowKind::Calabi | FlowKind::ModifiedCalabi => {
            let lprime = match (kind, state.geometry()) {
                (FlowKind::ModifiedCalabi, _) => need_target()?,
                (_, BackgroundGeometry::Euclidean) => DVector::from_element(n, average().0),
                (_, BackgroundGeometry::Hyperbolic) => DVector::zeros(n),
            };
            let root = psd_sqrt(&l);
            let inner = &l - DMatrix::from_diagonal(&lprime) * alpha;
            -(&root * inner * &root)
        }
    };
    Ok(Spectrum::of_symmetric(symmetrize(m)))
}
