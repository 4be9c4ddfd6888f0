use dcs_core::curvature::{curvature_report, jacobian_spectrum, linearization_spectrum, Spectrum};
use dcs_core::energy::{solve_many, Gauge, SolveOptions, SolveReport};
use dcs_core::flows::{
    run, FlowKind, FlowSpec, FlowSummary, Integrator, StopCriteria, Termination,
};
use dcs_core::io::{write_curvature, write_events, write_json, write_state, write_trace};
use dcs_core::mesh::{BackgroundGeometry, StructureViolation, WeightedSurface};
use dcs_core::metric::ConformalState;
use dcs_core::Error;
use serde::Serialize;

use crate::args::{CurvatureArgs, FlowArgs, GaugeArg, MethodArg, SolveArgs, ValidateArgs};
use crate::failure::{Code, Failure, Outcome};
use crate::input;

fn warn(message: &str) {
    eprintln!("warning: {message}");
}

#[derive(Serialize)]
struct MeshInfo {
    vertices: usize,
    edges: usize,
    faces: usize,
    euler_characteristic: i64,
    circle_packing_vertices: usize,
    vertex_scaling_vertices: usize,
}

impl MeshInfo {
    fn of(s: &WeightedSurface) -> Self {
        let t = s.triangulation();
        let (ones, zeros) = s.scheme_counts();
        MeshInfo {
            vertices: t.num_vertices(),
            edges: t.num_edges(),
            faces: t.num_faces(),
            euler_characteristic: t.euler_characteristic(),
            circle_packing_vertices: ones,
            vertex_scaling_vertices: zeros,
        }
    }
}

#[derive(Serialize)]
struct ValidationReport {
    ok: bool,
    mesh: MeshInfo,
    structure_violations: Vec<StructureViolation>,
    state_checked: bool,
    state_error: Option<String>,
    degenerate_faces: Vec<usize>,
}

pub fn validate(a: &ValidateArgs) -> Outcome {
    let c = &a.common;
    let surface = input::surface(c)?;
    let violations = surface.check_structure_conditions();
    let mut state_error = None;
    let mut degenerate = Vec::new();
    if c.state.is_some() {
        let st = input::state(c, &surface)?;
        match curvature_report(&surface, &st, true, false) {
            Ok(r) => degenerate = r.degenerate_faces(),
            Err(e) => state_error = Some(e.to_string()),
        }
    }
    let ok = violations.is_empty() && state_error.is_none() && degenerate.is_empty();
    let report = ValidationReport {
        ok,
        mesh: MeshInfo::of(&surface),
        structure_violations: violations.clone(),
        state_checked: c.state.is_some(),
        state_error: state_error.clone(),
        degenerate_faces: degenerate.clone(),
    };
    write_json(input::out_dir(c)?.join("validation.json"), &report)?;

    let m = &report.mesh;
    println!(
        "mesh: {} vertices, {} edges, {} faces, chi = {}",
        m.vertices, m.edges, m.faces, m.euler_characteristic
    );
    if ok {
        println!("ok");
        return Ok(());
    }
    let mut lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
    lines.extend(state_error);
    lines.extend(
        degenerate
            .iter()
            .map(|f| format!("face {f} violates the triangle inequality")),
    );
    Err(Failure::new(
        Code::Validation,
        format!("validation failed:\n  {}", lines.join("\n  ")),
    ))
}

#[derive(Serialize)]
struct LinearizationInfo {
    kind: FlowKind,
    #[serde(flatten)]
    spectrum: Spectrum,
}

#[derive(Serialize)]
struct CurvatureSummary {
    geometry: BackgroundGeometry,
    alpha: f64,
    extended: bool,
    euler_characteristic: i64,
    total_curvature: f64,
    area: f64,
    gauss_bonnet_residual: f64,
    degenerate_faces: Vec<usize>,
    jacobian_spectrum: Option<Spectrum>,
    linearization_spectrum: Option<LinearizationInfo>,
}

pub fn curvature(a: &CurvatureArgs) -> Outcome {
    let c = &a.common;
    let surface = input::surface(c)?;
    let st = input::state(c, &surface)?;
    let report = curvature_report(&surface, &st, a.extended, false).map_err(|e| match e {
        Error::Inadmissible { .. } => {
            Failure::new(Code::Validation, format!("{e} (pass --extended)"))
        }
        other => other.into(),
    })?;

    let (jac, lin) = if a.spectrum {
        let kind: FlowKind = a.kind.parse()?;
        let target = input::target(&a.target, c, &surface)?;
        let lin = linearization_spectrum(&surface, &st, kind, target.as_deref())?;
        (
            Some(jacobian_spectrum(&surface, &st)?),
            Some(LinearizationInfo {
                kind,
                spectrum: lin,
            }),
        )
    } else {
        (None, None)
    };

    let summary = CurvatureSummary {
        geometry: st.geometry(),
        alpha: st.alpha(),
        extended: a.extended,
        euler_characteristic: report.euler_characteristic,
        total_curvature: report.k.iter().sum(),
        area: report.area,
        gauss_bonnet_residual: report.gauss_bonnet_residual,
        degenerate_faces: report.degenerate_faces(),
        jacobian_spectrum: jac,
        linearization_spectrum: lin,
    };
    let out = input::out_dir(c)?;
    write_curvature(out.join("curvature.csv"), &report)?;
    write_state(out.join("state.csv"), &st)?;
    write_json(out.join("curvature.json"), &summary)?;

    println!(
        "total curvature {:.12}, gauss-bonnet residual {:.3e}, {} degenerate faces",
        summary.total_curvature,
        summary.gauss_bonnet_residual,
        summary.degenerate_faces.len()
    );
    if let Some(s) = &summary.jacobian_spectrum {
        println!(
            "jacobian: {} negative, {} zero, {} positive",
            s.negative, s.zero, s.positive
        );
    }
    if let Some(l) = &summary.linearization_spectrum {
        let s = &l.spectrum;
        println!(
            "{} linearization: {} negative, {} zero, {} positive",
            l.kind, s.negative, s.zero, s.positive
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct FlowOutput<'a> {
    spec: &'a FlowSpec,
    integrator: &'a Integrator,
    stop: &'a StopCriteria,
    seed: u64,
    perturbation: f64,
    #[serde(flatten)]
    summary: FlowSummary,
    warnings: Vec<String>,
}

fn describe(t: &Termination) -> String {
    match t {
        Termination::Converged => "converged".into(),
        Termination::MaxTime => "reached t_max".into(),
        Termination::RemovableSingularity { face } => {
            format!("face {face} degenerated (removable singularity; rerun with --extended)")
        }
        Termination::DomainExit { vertex } => format!("u left the domain at vertex {vertex}"),
        Termination::Escape => "u escaped to infinity".into(),
        Termination::StepCollapse => "adaptive step size collapsed".into(),
    }
}

pub fn flow(a: &FlowArgs) -> Outcome {
    let c = &a.common;
    let surface = input::surface(c)?;
    let kind: FlowKind = a.kind.parse()?;
    let geometry = input::geometry(c)?;
    let mut spec = FlowSpec::new(kind, geometry, c.alpha).extended(a.extended);
    if let Some(t) = input::target(&a.target, c, &surface)? {
        spec = spec.with_target(t);
    }
    let mut integrator = match a.method {
        MethodArg::Rk4 => Integrator::rk4(a.h),
        MethodArg::Euler => Integrator::euler(a.h),
    };
    if let Some(tol) = a.adaptive {
        integrator = integrator.adaptive(tol);
    }
    let stop = StopCriteria {
        residual_tol: a.residual_tol,
        t_max: a.t_max,
        record_every: a.record_every,
    };
    let base = input::state(c, &surface)?;
    let init = input::perturbed(&surface, &base, a.perturb, &mut input::rng(c.seed))?;

    let trace = run(&surface, &init, &spec, &integrator, &stop).map_err(|e| match e {
        Error::Inadmissible { .. } => Failure::new(Code::Validation, format!("initial state: {e}")),
        other => other.into(),
    })?;
    let summary = trace.summary(&surface, geometry);
    let mut warnings = Vec::new();
    if summary.termination == Termination::MaxTime {
        warnings.push(format!(
            "not converged by t_max = {} (residual {:.3e})",
            a.t_max, summary.final_residual
        ));
    }

    let out = input::out_dir(c)?;
    write_trace(out.join("trace.csv"), &trace)?;
    write_events(out.join("events.csv"), &trace.events)?;
    let last = init.with_u(&surface, trace.last().u.clone())?;
    write_state(out.join("final_state.csv"), &last)?;
    let termination = summary.termination.clone();
    let output = FlowOutput {
        spec: &spec,
        integrator: &integrator,
        stop: &stop,
        seed: c.seed,
        perturbation: a.perturb,
        summary,
        warnings: warnings.clone(),
    };
    write_json(out.join("summary.json"), &output)?;

    let s = &output.summary;
    println!(
        "{}: {} after {} steps, t = {:.6}, residual {:.3e}",
        kind,
        describe(&termination),
        s.steps,
        s.t_final,
        s.final_residual
    );
    if let Some(rate) = s.rate {
        println!("fitted rate {rate:.6}");
    }
    for w in &warnings {
        warn(w);
    }
    if termination.is_singular() {
        let at = trace.events.last().map_or(s.t_final, |e| e.time);
        return Err(Failure::new(
            Code::Singular,
            format!("flow stopped at t = {at}: {}", describe(&termination)),
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveOutput {
    geometry: BackgroundGeometry,
    alpha: f64,
    options: SolveOptions,
    seed: u64,
    starts: usize,
    succeeded: usize,
    /// max_i |u_i| over pairs of successful solutions.
    max_pairwise_difference: f64,
    report: SolveReport,
    failures: Vec<String>,
}

pub fn solve(a: &SolveArgs) -> Outcome {
    let c = &a.common;
    let surface = input::surface(c)?;
    let target = input::target(&a.target, c, &surface)?.ok_or_else(|| {
        Failure::config("solve needs --target-constant, --target-file or --target-from-state")
    })?;
    let base = input::state(c, &surface)?;
    if a.starts == 0 {
        return Err(Failure::config("--starts must be at least 1"));
    }
    let mut rng = input::rng(c.seed);
    let starts = (0..a.starts)
        .map(|_| input::perturbed(&surface, &base, a.perturb, &mut rng))
        .collect::<Outcome<Vec<ConformalState>>>()?;
    let options = SolveOptions {
        tol: a.tol,
        max_iterations: a.max_iterations,
        gauge: match a.gauge {
            GaugeArg::None => None,
            GaugeArg::SumU => Some(Gauge::sum_u(&base)),
            GaugeArg::SumExpAlphaU => Some(Gauge::sum_exp_alpha_u(&base)),
        },
        ..Default::default()
    };

    let mut solved = Vec::new();
    let mut errors = Vec::new();
    for (k, r) in solve_many(&surface, &starts, &target, &options)
        .into_iter()
        .enumerate()
    {
        match r {
            Ok(x) => solved.push(x),
            Err(e) => errors.push((k, e)),
        }
    }
    if solved.is_empty() {
        let (_, e) = errors.remove(0);
        return Err(e.into());
    }
    let mut spread = 0.0f64;
    for (i, (x, _)) in solved.iter().enumerate() {
        for (y, _) in &solved[i + 1..] {
            for (p, q) in x.u().iter().zip(y.u()) {
                spread = spread.max((p - q).abs());
            }
        }
    }
    let (solution, report) = solved.swap_remove(0);
    let failures: Vec<String> = errors
        .iter()
        .map(|(k, e)| format!("start {k}: {e}"))
        .collect();

    let out = input::out_dir(c)?;
    write_state(out.join("solution.csv"), &solution)?;
    let output = SolveOutput {
        geometry: solution.geometry(),
        alpha: solution.alpha(),
        options,
        seed: c.seed,
        starts: a.starts,
        succeeded: a.starts - failures.len(),
        max_pairwise_difference: spread,
        report,
        failures,
    };
    write_json(out.join("solve.json"), &output)?;

    println!(
        "solved in {} iterations, residual {:.3e}; {}/{} starts succeeded, max pairwise difference {:.3e}",
        output.report.iterations, output.report.residual, output.succeeded, output.starts, spread
    );
    for w in &output.report.warnings {
        warn(w);
    }
    for f in &output.failures {
        warn(f);
    }
    Ok(())
}
