//! Combinatorial α-Ricci and α-Calabi flows in u-coordinates, with explicit
//! time stepping, conservation monitoring and singularity detection.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curvature::{apply_laplacian, curvature_report, CurvatureReport};
use crate::error::{Error, Result};
use crate::mesh::{BackgroundGeometry, WeightedSurface};
use crate::metric::{check_domain, ConformalState};

/// Essential-singularity threshold on ‖u‖∞.
pub const ESCAPE_LIMIT: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    /// du/dt = −R_α
    Ricci,
    /// du/dt = R_av − R_α, Euclidean only
    NormalizedRicci,
    /// du/dt = R̄ − R_α
    ModifiedRicci,
    /// du/dt = Δ_α R_α
    Calabi,
    /// du/dt = Δ_α (R_α − R̄)
    ModifiedCalabi,
}

impl FlowKind {
    pub const ALL: [FlowKind; 5] = [
        FlowKind::Ricci,
        FlowKind::NormalizedRicci,
        FlowKind::ModifiedRicci,
        FlowKind::Calabi,
        FlowKind::ModifiedCalabi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FlowKind::Ricci => "ricci",
            FlowKind::NormalizedRicci => "normalized_ricci",
            FlowKind::ModifiedRicci => "modified_ricci",
            FlowKind::Calabi => "calabi",
            FlowKind::ModifiedCalabi => "modified_calabi",
        }
    }

    pub fn is_ricci_family(self) -> bool {
        matches!(
            self,
            FlowKind::Ricci | FlowKind::NormalizedRicci | FlowKind::ModifiedRicci
        )
    }

    pub fn needs_target(self) -> bool {
        matches!(self, FlowKind::ModifiedRicci | FlowKind::ModifiedCalabi)
    }
}

impl fmt::Display for FlowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FlowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        FlowKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown flow kind '{s}'")))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowSpec {
    pub kind: FlowKind,
    /// Use extended curvature (Ricci-family kinds only).
    pub extended: bool,
    pub alpha: f64,
    /// Prescribed R̄; required by the modified kinds.
    pub target: Option<Vec<f64>>,
    pub geometry: BackgroundGeometry,
}

impl FlowSpec {
    pub fn new(kind: FlowKind, geometry: BackgroundGeometry, alpha: f64) -> Self {
        FlowSpec {
            kind,
            extended: false,
            alpha,
            target: None,
            geometry,
        }
    }

    pub fn with_target(mut self, target: Vec<f64>) -> Self {
        self.target = Some(target);
        self
    }

    pub fn extended(mut self, extended: bool) -> Self {
        self.extended = extended;
        self
    }

    pub fn validate(&self, surface: &WeightedSurface) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(Error::Config("alpha must be finite".into()));
        }
        if self.kind == FlowKind::NormalizedRicci && self.geometry != BackgroundGeometry::Euclidean
        {
            return Err(Error::Config(
                "normalized Ricci flow is defined for Euclidean geometry only".into(),
            ));
        }
        if self.extended && !self.kind.is_ricci_family() {
            return Err(Error::Config(format!(
                "{} flow has no extension through degenerate faces",
                self.kind
            )));
        }
        match (&self.target, self.kind.needs_target()) {
            (None, true) => Err(Error::Config(format!(
                "{} flow needs a target curvature",
                self.kind
            ))),
            (Some(t), true) if t.len() != surface.num_vertices() => Err(Error::Dimension {
                expected: surface.num_vertices(),
                got: t.len(),
            }),
            (Some(t), true) if t.iter().any(|x| !x.is_finite()) => {
                Err(Error::Config("target curvature must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    fn check_state(&self, state: &ConformalState) -> Result<()> {
        if state.geometry() != self.geometry || state.alpha() != self.alpha {
            return Err(Error::Config(format!(
                "state ({}, alpha {}) does not match flow spec ({}, alpha {})",
                state.geometry(),
                state.alpha(),
                self.geometry,
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Σu when α = 0, Σ e^{αu} otherwise.
pub fn conserved_quantity(u: &[f64], alpha: f64) -> f64 {
    if alpha == 0.0 {
        u.iter().sum()
    } else {
        u.iter().map(|&x| (alpha * x).exp()).sum()
    }
}

/// R_av = 2πχ / Σ e^{αu}.
pub fn average_alpha_curvature(surface: &WeightedSurface, u: &[f64], alpha: f64) -> f64 {
    let chi = surface.triangulation().euler_characteristic() as f64;
    let total: f64 = u.iter().map(|&x| (alpha * x).exp()).sum();
    2.0 * std::f64::consts::PI * chi / total
}

/// du/dt together with the curvature report it was computed from.
pub fn flow_field_with_report(
    surface: &WeightedSurface,
    state: &ConformalState,
    spec: &FlowSpec,
) -> Result<(Vec<f64>, CurvatureReport)> {
    let alpha = spec.alpha;
    let u = state.u();
    let target = spec.target.as_deref();
    let calabi = !spec.kind.is_ricci_family();
    let report = curvature_report(surface, state, spec.extended, calabi)?;
    let r = &report.r_alpha;
    let field: Vec<f64> = match spec.kind {
        FlowKind::Ricci => r.iter().map(|x| -x).collect(),
        FlowKind::NormalizedRicci => {
            let avg = average_alpha_curvature(surface, u, alpha);
            r.iter().map(|x| avg - x).collect()
        }
        FlowKind::ModifiedRicci => {
            let t = target.expect("validated");
            t.iter().zip(r).map(|(a, b)| a - b).collect()
        }
        FlowKind::Calabi | FlowKind::ModifiedCalabi => {
            let g: Vec<f64> = match target {
                Some(t) if spec.kind == FlowKind::ModifiedCalabi => {
                    r.iter().zip(t).map(|(a, b)| a - b).collect()
                }
                _ => r.clone(),
            };
            let lambda = report.jacobian.as_ref().expect("requested");
            apply_laplacian(lambda, u, alpha, &g)
        }
    };
    Ok((field, report))
}

pub fn flow_field(
    surface: &WeightedSurface,
    state: &ConformalState,
    spec: &FlowSpec,
) -> Result<Vec<f64>> {
    spec.validate(surface)?;
    spec.check_state(state)?;
    flow_field_with_report(surface, state, spec).map(|(f, _)| f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4,
    Euler,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rk4" => Ok(Method::Rk4),
            "euler" => Ok(Method::Euler),
            _ => Err(Error::Config(format!("unknown integrator '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integrator {
    pub method: Method,
    pub h: f64,
    /// Subdivide a step while the step-doubling error estimate exceeds `local_tol`.
    pub adaptive: bool,
    pub local_tol: f64,
    pub min_h: f64,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator {
            method: Method::Rk4,
            h: 1e-2,
            adaptive: false,
            local_tol: 1e-12,
            min_h: 1e-10,
        }
    }
}

impl Integrator {
    pub fn rk4(h: f64) -> Self {
        Integrator {
            h,
            ..Default::default()
        }
    }

    pub fn euler(h: f64) -> Self {
        Integrator {
            method: Method::Euler,
            h,
            ..Default::default()
        }
    }

    pub fn adaptive(mut self, local_tol: f64) -> Self {
        self.adaptive = true;
        self.local_tol = local_tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Config(format!(
                "step size {} must be positive",
                self.h
            )));
        }
        if self.adaptive && !(self.local_tol > 0.0 && self.min_h > 0.0) {
            return Err(Error::Config(
                "adaptive stepping needs positive local_tol and min_h".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowState {
    pub t: f64,
    pub u: Vec<f64>,
    /// ‖du/dt‖∞.
    pub residual: f64,
    pub conserved: f64,
    pub degenerate_faces: Vec<usize>,
}

impl FlowState {
    /// Evaluates the field at `state` to fill in the diagnostics.
    pub fn at(
        surface: &WeightedSurface,
        state: &ConformalState,
        spec: &FlowSpec,
        t: f64,
    ) -> Result<Self> {
        let (field, report) = flow_field_with_report(surface, state, spec)?;
        Ok(FlowState {
            t,
            u: state.u().to_vec(),
            residual: field.iter().fold(0.0, |m: f64, x| m.max(x.abs())),
            conserved: conserved_quantity(state.u(), spec.alpha),
            degenerate_faces: report.degenerate_faces(),
        })
    }
}

fn escape_check(u: &[f64]) -> Result<()> {
    let norm = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(norm <= ESCAPE_LIMIT) {
        return Err(Error::Escape {
            norm,
            limit: ESCAPE_LIMIT,
        });
    }
    Ok(())
}

struct Stepper<'a> {
    surface: &'a WeightedSurface,
    spec: &'a FlowSpec,
    template: ConformalState,
}

impl Stepper<'_> {
    fn field(&self, u: &[f64]) -> Result<Vec<f64>> {
        escape_check(u)?;
        check_domain(self.surface, u, self.spec.geometry)?;
        let state = self.template.with_u(self.surface, u.to_vec())?;
        flow_field_with_report(self.surface, &state, self.spec).map(|(f, _)| f)
    }

    fn single(&self, u: &[f64], h: f64, method: Method) -> Result<Vec<f64>> {
        let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x + s * y).collect()
        };
        let k1 = self.field(u)?;
        let out = match method {
            Method::Euler => axpy(u, h, &k1),
            Method::Rk4 => {
                let k2 = self.field(&axpy(u, 0.5 * h, &k1))?;
                let k3 = self.field(&axpy(u, 0.5 * h, &k2))?;
                let k4 = self.field(&axpy(u, h, &k3))?;
                (0..u.len())
                    .map(|i| u[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect()
            }
        };
        escape_check(&out)?;
        check_domain(self.surface, &out, self.spec.geometry)?;
        Ok(out)
    }

    fn adaptive(&self, u: &[f64], h: f64, integ: &Integrator) -> Result<Vec<f64>> {
        let coarse = self.single(u, h, integ.method);
        let mid = self.single(u, 0.5 * h, integ.method);
        let fine = mid.and_then(|m| self.single(&m, 0.5 * h, integ.method));
        let at_floor = h <= integ.min_h;
        match (coarse, fine) {
            (Ok(c), Ok(f)) => {
                let err = c
                    .iter()
                    .zip(&f)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                if err <= integ.local_tol {
                    return Ok(f);
                }
                if at_floor {
                    return Err(Error::StepCollapse {
                        min_h: integ.min_h,
                        error: err,
                    });
                }
            }
            (_, Err(e)) if at_floor => return Err(e),
            // the coarse step alone left the domain; the two half steps did not
            (Err(_), Ok(f)) if at_floor => return Ok(f),
            _ => {}
        }
        let m = self.adaptive(u, 0.5 * h, integ)?;
        self.adaptive(&m, 0.5 * h, integ)
    }

    fn advance(&self, u: &[f64], integ: &Integrator) -> Result<Vec<f64>> {
        if integ.adaptive {
            self.adaptive(u, integ.h, integ)
        } else {
            self.single(u, integ.h, integ.method)
        }
    }
}

/// One integrator step from `current`.
pub fn step(
    surface: &WeightedSurface,
    current: &FlowState,
    template: &ConformalState,
    spec: &FlowSpec,
    integrator: &Integrator,
) -> Result<FlowState> {
    spec.validate(surface)?;
    spec.check_state(template)?;
    integrator.validate()?;
    let stepper = Stepper {
        surface,
        spec,
        template: template.clone(),
    };
    let u = stepper.advance(&current.u, integrator)?;
    let state = template.with_u(surface, u)?;
    FlowState::at(surface, &state, spec, current.t + integrator.h)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopCriteria {
    pub residual_tol: f64,
    pub t_max: f64,
    /// Keep every n-th sample (the first and last are always kept).
    pub record_every: usize,
}

impl Default for StopCriteria {
    fn default() -> Self {
        StopCriteria {
            residual_tol: 1e-10,
            t_max: 100.0,
            record_every: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    DegenerateEnter,
    DegenerateExit,
    DomainExit,
    Escape,
    StepCollapse,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::DegenerateEnter => "degenerate_enter",
            EventKind::DegenerateExit => "degenerate_exit",
            EventKind::DomainExit => "domain_exit",
            EventKind::Escape => "escape",
            EventKind::StepCollapse => "step_collapse",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowEvent {
    pub time: f64,
    pub kind: EventKind,
    pub face: Option<usize>,
    pub vertex: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Termination {
    Converged,
    MaxTime,
    /// A face became inadmissible under a non-extended flow.
    RemovableSingularity {
        face: usize,
    },
    /// u reached 0 on a hyperbolic ε = 1 vertex.
    DomainExit {
        vertex: usize,
    },
    /// ‖u‖∞ exceeded the escape limit.
    Escape,
    /// Adaptive stepping could not meet its tolerance above `min_h`: the
    /// solution is blowing up faster than the integrator can follow.
    StepCollapse,
}

impl Termination {
    pub fn is_singular(&self) -> bool {
        !matches!(self, Termination::Converged | Termination::MaxTime)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RateFit {
    /// Slope of ln(residual) against t.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Least-squares fit of ln(residual) against t over the last half of the samples.
pub fn fit_exponential_rate(samples: &[FlowState]) -> Option<RateFit> {
    let tail = &samples[samples.len() / 2..];
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .filter(|s| s.residual > 0.0)
        .map(|s| (s.t, s.residual.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if stt == 0.0 {
        return None;
    }
    let slope = sty / stt;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sty * sty / (stt * syy)
    };
    Some(RateFit {
        slope,
        intercept: my - slope * mt,
        r_squared,
        samples: pts.len(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowTrace {
    pub samples: Vec<FlowState>,
    pub events: Vec<FlowEvent>,
    pub termination: Termination,
    pub steps: usize,
}

impl FlowTrace {
    pub fn last(&self) -> &FlowState {
        self.samples.last().expect("trace holds the initial state")
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    /// max_t |C(t) − C(0)| for the conserved quantity C.
    pub fn conserved_drift(&self) -> f64 {
        let c0 = self.samples[0].conserved;
        self.samples
            .iter()
            .fold(0.0, |m: f64, s| m.max((s.conserved - c0).abs()))
    }

    pub fn rate_fit(&self) -> Option<RateFit> {
        fit_exponential_rate(&self.samples)
    }

    /// min over samples of −max_{ε_i=1} u_i; `None` unless hyperbolic with ε = 1 vertices.
    pub fn domain_margin(
        &self,
        surface: &WeightedSurface,
        geometry: BackgroundGeometry,
    ) -> Option<f64> {
        if geometry != BackgroundGeometry::Hyperbolic {
            return None;
        }
        let ones: Vec<usize> = (0..surface.num_vertices())
            .filter(|&i| surface.epsilon()[i] == 1)
            .collect();
        if ones.is_empty() {
            return None;
        }
        Some(self.samples.iter().fold(f64::INFINITY, |m, s| {
            let top = ones
                .iter()
                .map(|&i| s.u[i])
                .fold(f64::NEG_INFINITY, f64::max);
            m.min(-top)
        }))
    }

    pub fn summary(&self, surface: &WeightedSurface, geometry: BackgroundGeometry) -> FlowSummary {
        let last = self.last();
        let fit = self.rate_fit();
        FlowSummary {
            converged: self.converged(),
            termination: self.termination.clone(),
            steps: self.steps,
            t_final: last.t,
            final_residual: last.residual,
            rate: fit.as_ref().map(|f| f.slope),
            rate_r_squared: fit.as_ref().map(|f| f.r_squared),
            conserved_drift: self.conserved_drift(),
            degenerate_events: self
                .events
                .iter()
                .filter(|e| {
                    matches!(
                        e.kind,
                        EventKind::DegenerateEnter | EventKind::DegenerateExit
                    )
                })
                .count(),
            domain_margin: self.domain_margin(surface, geometry),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowSummary {
    pub converged: bool,
    pub termination: Termination,
    pub steps: usize,
    pub t_final: f64,
    pub final_residual: f64,
    pub rate: Option<f64>,
    pub rate_r_squared: Option<f64>,
    pub conserved_drift: f64,
    pub degenerate_events: usize,
    pub domain_margin: Option<f64>,
}

fn face_events(prev: &[usize], next: &[usize], time: f64, events: &mut Vec<FlowEvent>) {
    let a: BTreeSet<_> = prev.iter().copied().collect();
    let b: BTreeSet<_> = next.iter().copied().collect();
    for &f in b.difference(&a) {
        events.push(FlowEvent {
            time,
            kind: EventKind::DegenerateEnter,
            face: Some(f),
            vertex: None,
        });
    }
    for &f in a.difference(&b) {
        events.push(FlowEvent {
            time,
            kind: EventKind::DegenerateExit,
            face: Some(f),
            vertex: None,
        });
    }
}

/// Integrates from `initial` until the residual drops below `stop.residual_tol`
/// or `t_max` is reached. Singularities end the run and are reported in the
/// trace rather than as errors, so the partial trajectory is kept.
pub fn run(
    surface: &WeightedSurface,
    initial: &ConformalState,
    spec: &FlowSpec,
    integrator: &Integrator,
    stop: &StopCriteria,
) -> Result<FlowTrace> {
    spec.validate(surface)?;
    spec.check_state(initial)?;
    integrator.validate()?;
    let stepper = Stepper {
        surface,
        spec,
        template: initial.clone(),
    };
    let every = stop.record_every.max(1);

    let mut events = Vec::new();
    // an inadmissible start under a non-extended flow is a caller error
    let mut current = FlowState::at(surface, initial, spec, 0.0)?;
    if !current.degenerate_faces.is_empty() {
        face_events(&[], &current.degenerate_faces, 0.0, &mut events);
    }
    let mut samples = vec![current.clone()];
    let mut steps = 0usize;
    let termination = loop {
        if current.residual < stop.residual_tol {
            break Termination::Converged;
        }
        // stop within half a step of t_max to avoid an extra sliver step
        if current.t >= stop.t_max - 0.5 * integrator.h {
            break Termination::MaxTime;
        }
        let t_next = (steps + 1) as f64 * integrator.h;
        let next = stepper.advance(&current.u, integrator).and_then(|u| {
            let state = initial.with_u(surface, u)?;
            FlowState::at(surface, &state, spec, t_next)
        });
        let next = match next {
            Ok(s) => s,
            Err(Error::Inadmissible { face }) => {
                events.push(FlowEvent {
                    time: t_next,
                    kind: EventKind::DegenerateEnter,
                    face: Some(face),
                    vertex: None,
                });
                break Termination::RemovableSingularity { face };
            }
            Err(Error::DomainExit { vertex, .. }) => {
                events.push(FlowEvent {
                    time: t_next,
                    kind: EventKind::DomainExit,
                    face: None,
                    vertex: Some(vertex),
                });
                break Termination::DomainExit { vertex };
            }
            Err(Error::Escape { .. }) => {
                events.push(FlowEvent {
                    time: t_next,
                    kind: EventKind::Escape,
                    face: None,
                    vertex: None,
                });
                break Termination::Escape;
            }
            Err(Error::StepCollapse { .. }) => {
                events.push(FlowEvent {
                    time: current.t,
                    kind: EventKind::StepCollapse,
                    face: None,
                    vertex: None,
                });
                break Termination::StepCollapse;
            }
            Err(e) => return Err(e),
        };
        steps += 1;
        face_events(
            &current.degenerate_faces,
            &next.degenerate_faces,
            next.t,
            &mut events,
        );
        current = next;
        if steps.is_multiple_of(every) {
            samples.push(current.clone());
        }
    };
    if samples.last().map(|s| s.t) != Some(current.t) {
        samples.push(current);
    }
    Ok(FlowTrace {
        samples,
        events,
        termination,
        steps,
    })
}
