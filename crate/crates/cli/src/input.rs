//! Resolving command-line inputs into library values.

use std::fs;
use std::path::Path;

use dcs_core::curvature::curvature_report;
use dcs_core::io::{read_state, read_target};
use dcs_core::mesh::{
    self, load_mesh, load_weights, BackgroundGeometry, Triangulation, WeightedSurface,
};
use dcs_core::metric::ConformalState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::{Common, TargetArgs};
use crate::failure::{Failure, Outcome};

pub fn triangulation(spec: &str) -> Outcome<Triangulation> {
    match spec {
        "tetrahedron" => Ok(mesh::tetrahedron()),
        "torus7" => Ok(mesh::torus7()),
        "genus2" => Ok(mesh::genus2()),
        _ => {
            if let Some(dims) = spec.strip_prefix("torus-grid:") {
                let (r, c) = dims
                    .split_once('x')
                    .and_then(|(r, c)| Some((r.parse().ok()?, c.parse().ok()?)))
                    .ok_or_else(|| {
                        Failure::config(format!("bad grid size '{dims}', expected RxC"))
                    })?;
                if r < 3 || c < 3 {
                    return Err(Failure::config(
                        "torus grids need at least 3 rows and 3 columns",
                    ));
                }
                return Ok(mesh::torus_grid(r, c));
            }
            Ok(load_mesh(spec)?)
        }
    }
}

fn weights(spec: &str, t: Triangulation) -> Outcome<WeightedSurface> {
    let bad = || Failure::config(format!("bad weights spec '{spec}'"));
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = spec.split(':').collect();
    let surface = match parts.as_slice() {
        ["tangential"] => WeightedSurface::tangential_circle_packing(t)?,
        ["vertex-scaling"] => WeightedSurface::vertex_scaling(t, 1.0)?,
        ["vertex-scaling", eta] => WeightedSurface::vertex_scaling(t, num(eta)?)?,
        ["uniform", eps, eta] => {
            let eps = eps.parse::<u8>().map_err(|_| bad())?;
            WeightedSurface::uniform(t, eps, num(eta)?)?
        }
        _ => load_weights(spec, t)?,
    };
    Ok(surface)
}

pub fn surface(common: &Common) -> Outcome<WeightedSurface> {
    weights(&common.weights, triangulation(&common.mesh)?)
}

pub fn geometry(common: &Common) -> Outcome<BackgroundGeometry> {
    Ok(common.geometry.parse()?)
}

/// The state from --state, or f ≡ 0.
pub fn state(common: &Common, surface: &WeightedSurface) -> Outcome<ConformalState> {
    let g = geometry(common)?;
    if !common.alpha.is_finite() {
        return Err(Failure::config("alpha must be finite"));
    }
    match &common.state {
        Some(path) => Ok(read_state(path, surface, g, common.alpha)?),
        None => Ok(ConformalState::zero(surface, g, common.alpha)),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `state` with u shifted by a uniform draw in [−r, r] per vertex.
pub fn perturbed(
    surface: &WeightedSurface,
    state: &ConformalState,
    r: f64,
    rng: &mut ChaCha8Rng,
) -> Outcome<ConformalState> {
    if r == 0.0 {
        return Ok(state.clone());
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Failure::config("perturbation radius must be positive"));
    }
    let u = state
        .u()
        .iter()
        .map(|&x| x + rng.gen_range(-r..=r))
        .collect();
    state.with_u(surface, u).map_err(|e| {
        Failure::config(format!(
            "perturbed start leaves the domain ({e}); use a smaller --perturb"
        ))
    })
}

/// Target α-curvature from whichever source was given.
pub fn target(
    args: &TargetArgs,
    common: &Common,
    surface: &WeightedSurface,
) -> Outcome<Option<Vec<f64>>> {
    let n = surface.num_vertices();
    if let Some(c) = args.target_constant {
        return Ok(Some(vec![c; n]));
    }
    if let Some(path) = &args.target_file {
        return Ok(Some(read_target(path, n)?));
    }
    if let Some(path) = &args.target_from_state {
        let st = read_state(path, surface, geometry(common)?, common.alpha)?;
        return Ok(Some(curvature_report(surface, &st, true, false)?.r_alpha));
    }
    Ok(None)
}

pub fn out_dir(common: &Common) -> Outcome<&Path> {
    fs::create_dir_all(&common.out)
        .map_err(|e| Failure::config(format!("cannot create {}: {e}", common.out.display())))?;
    Ok(&common.out)
}
