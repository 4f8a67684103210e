//! Level-set reconstruction of a two-valued `gamma` from contact measurements.
//!
//! The unknown N-region is `{phi >= 0}`; `gamma = gamma_P + (gamma_N -
//! gamma_P) H_eps(phi)` with a smoothed Heaviside `H_eps`. The misfit
//! `J = 1/2 sum_j |F(gamma, U_j) - Y_j|^2` is minimized by normalized
//! gradient descent on `phi`, with gradients from discrete adjoint solves.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::elliptic::DEFAULT_RTOL;
use crate::forward::{
    ContinuityModel, GammaField, Measurement, MeasurementKind, MeasurementSet, Mobilities,
};
use crate::grid::{indicator, symmetric_difference_error, Grid, ScalarField, Segment, Trace};
use crate::redistance::signed_distance;
use crate::{Error, Result};

/// `H_eps(t)`: 0 below `-eps`, 1 above `eps`, `(1 + t/eps + sin(pi t/eps)/pi)/2` between.
pub fn smoothed_heaviside(t: f64, eps: f64) -> f64 {
    if t <= -eps {
        0.0
    } else if t >= eps {
        1.0
    } else {
        0.5 * (1.0 + t / eps + (PI * t / eps).sin() / PI)
    }
}

/// Derivative of [`smoothed_heaviside`].
pub fn smoothed_delta(t: f64, eps: f64) -> f64 {
    if t.abs() >= eps {
        0.0
    } else {
        0.5 / eps * (1.0 + (PI * t / eps).cos())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Region shapes for level-set initialization and phantoms. The designated
/// region is where the signed distance is positive.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Circle {
        center: (f64, f64),
        radius: f64,
    },
    /// `{coordinate > offset}` along `axis`.
    HalfPlane {
        axis: Axis,
        offset: f64,
    },
    /// Simple polygon, vertices in order.
    Polygon(Vec<(f64, f64)>),
}

impl Shape {
    /// The rectangle `[x0, x1] x [y0, y1]` with the corner `[notch_x, x1] x
    /// [notch_y, y1]` removed.
    pub fn l_shape(x0: f64, y0: f64, x1: f64, y1: f64, notch_x: f64, notch_y: f64) -> Shape {
        Shape::Polygon(vec![
            (x0, y0),
            (x1, y0),
            (x1, notch_y),
            (notch_x, notch_y),
            (notch_x, y1),
            (x0, y1),
        ])
    }

    fn validate(&self) -> Result<()> {
        let inside = |(x, y): (f64, f64)| (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y);
        match self {
            Shape::Circle { center, radius } => {
                if !(inside(*center) && *radius > 0.0 && radius.is_finite()) {
                    return Err(Error::invalid(format!(
                        "degenerate circle at {center:?} with radius {radius}"
                    )));
                }
            }
            Shape::HalfPlane { offset, .. } => {
                if !(*offset > 0.0 && *offset < 1.0) {
                    return Err(Error::invalid(format!(
                        "half-plane offset {offset} is outside (0, 1)"
                    )));
                }
            }
            Shape::Polygon(v) => {
                if v.len() < 3 || !v.iter().all(|&p| inside(p)) {
                    return Err(Error::invalid(
                        "polygon needs at least 3 vertices inside the unit square",
                    ));
                }
                let area2: f64 = (0..v.len())
                    .map(|k| {
                        let (a, b) = (v[k], v[(k + 1) % v.len()]);
                        a.0 * b.1 - b.0 * a.1
                    })
                    .sum();
                if area2.abs() < 1e-12 {
                    return Err(Error::invalid("polygon has zero area"));
                }
            }
        }
        Ok(())
    }

    /// Signed distance to the shape boundary, positive inside.
    pub fn signed_distance(&self, x: f64, y: f64) -> f64 {
        match self {
            Shape::Circle { center, radius } => radius - (x - center.0).hypot(y - center.1),
            Shape::HalfPlane {
                axis: Axis::X,
                offset,
            } => x - offset,
            Shape::HalfPlane {
                axis: Axis::Y,
                offset,
            } => y - offset,
            Shape::Polygon(v) => {
                let mut dist = f64::INFINITY;
                let mut inside = false;
                for k in 0..v.len() {
                    let (a, b) = (v[k], v[(k + 1) % v.len()]);
                    dist = dist.min(segment_distance((x, y), a, b));
                    if (a.1 > y) != (b.1 > y) && x < a.0 + (y - a.1) * (b.0 - a.0) / (b.1 - a.1) {
                        inside = !inside;
                    }
                }
                if inside {
                    dist
                } else {
                    -dist
                }
            }
        }
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

/// Exact signed distance to `shape`, sampled at the cell centers.
pub fn init_phi(grid: Grid, shape: &Shape) -> Result<ScalarField> {
    shape.validate()?;
    Ok(ScalarField::from_fn(grid, |x, y| {
        shape.signed_distance(x, y)
    }))
}

/// Level-set function together with the two known values of `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetState {
    phi: ScalarField,
    gamma_p: f64,
    gamma_n: f64,
    eps_smooth: f64,
}

impl LevelSetState {
    /// `eps_smooth` is the Heaviside half width in units of the grid spacing.
    pub fn new(phi: ScalarField, gamma_p: f64, gamma_n: f64, eps_smooth: f64) -> Result<Self> {
        if !(gamma_p > 0.0 && gamma_p < gamma_n && gamma_n.is_finite()) {
            return Err(Error::invalid(format!(
                "need 0 < gamma_P < gamma_N, got {gamma_p}, {gamma_n}"
            )));
        }
        if !(eps_smooth > 0.0 && eps_smooth.is_finite()) {
            return Err(Error::invalid(format!(
                "smoothing width must be positive, got {eps_smooth}"
            )));
        }
        Ok(Self {
            phi,
            gamma_p,
            gamma_n,
            eps_smooth,
        })
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn gamma_p(&self) -> f64 {
        self.gamma_p
    }

    pub fn gamma_n(&self) -> f64 {
        self.gamma_n
    }

    pub fn eps_smooth(&self) -> f64 {
        self.eps_smooth
    }

    /// Smoothing half width in physical units.
    pub fn eps(&self) -> f64 {
        self.eps_smooth * self.phi.grid().h()
    }

    pub fn grid(&self) -> Grid {
        self.phi.grid()
    }

    pub fn with_phi(&self, phi: ScalarField) -> Self {
        Self {
            phi,
            ..self.clone()
        }
    }

    /// Indicator of the N-region `{phi >= 0}`.
    pub fn indicator(&self) -> ScalarField {
        indicator(&self.phi)
    }
}

pub fn gamma_from_phi(state: &LevelSetState) -> GammaField {
    let eps = state.eps();
    let (lo, hi) = (state.gamma_p, state.gamma_n);
    let field = state
        .phi
        .map(|p| lo + (hi - lo) * smoothed_heaviside(p, eps));
    GammaField::new(field).expect("convex combination of positive values")
}

/// Misfit functional value with its per-measurement residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub value: f64,
    /// `F(gamma, U_j) - Y_j`; one entry per face (pointwise) or a single value.
    pub residuals: Vec<Vec<f64>>,
}

impl Objective {
    /// Data-space norm of the stacked residual, `sqrt(2 J)`.
    pub fn residual_norm(&self) -> f64 {
        (2.0 * self.value).sqrt()
    }
}

fn check_data(state: &LevelSetState, data: &MeasurementSet) -> Result<()> {
    if data.grid() != state.grid() {
        return Err(Error::invalid("data and level set live on different grids"));
    }
    Ok(())
}

fn misfits(
    model: &ContinuityModel,
    data: &MeasurementSet,
) -> Result<Vec<(crate::forward::ContinuityState, Vec<f64>)>> {
    data.entries()
        .iter()
        .map(|entry| {
            let s = model.solve(&entry.profile)?;
            let trace = model.current_trace(&s)?;
            let predicted = match data.kind() {
                MeasurementKind::Pointwise => Measurement::Pointwise(trace),
                MeasurementKind::CurrentFlow => {
                    Measurement::CurrentFlow(crate::grid::integrate_trace(&trace)?)
                }
            };
            let r = predicted.misfit(&entry.noisy)?;
            Ok((s, r))
        })
        .collect()
}

fn objective_of(kind: MeasurementKind, grid: Grid, residuals: Vec<Vec<f64>>) -> Objective {
    let value = 0.5
        * residuals
            .iter()
            .map(|r| Measurement::squared_norm(kind, grid, r))
            .sum::<f64>();
    Objective { value, residuals }
}

/// `J(phi) = 1/2 sum_j |F(gamma(phi), U_j) - Y_j|^2` against the noisy data.
pub fn objective(
    state: &LevelSetState,
    data: &MeasurementSet,
    mobilities: Mobilities,
) -> Result<Objective> {
    check_data(state, data)?;
    let model = ContinuityModel::new(&gamma_from_phi(state), mobilities)?;
    let residuals = misfits(&model, data)?.into_iter().map(|(_, r)| r).collect();
    Ok(objective_of(data.kind(), state.grid(), residuals))
}

/// Derivative of `J` with respect to the cell coefficients `a` of one
/// continuity equation, where `J` depends on that equation's contact flux
/// through `dJ/dq_k = h * weight_k`.
///
/// `w` solves the forward problem with contact data `g_bottom` (zero on
/// Gamma1) and `z` solves the adjoint problem with zero on Gamma0 and
/// `weight` on Gamma1.
fn coefficient_gradient(
    a: &ScalarField,
    w: &ScalarField,
    g_bottom: &[f64],
    z: &ScalarField,
    weight: &[f64],
    out: &mut [f64],
) {
    let grid = a.grid();
    let n = grid.n();
    let (a, w, z) = (a.values(), w.values(), z.values());
    for k in 0..grid.len() {
        let (i, j) = grid.coords(k);
        for q in [(i + 1 < n).then_some(k + 1), (j + 1 < n).then_some(k + n)]
            .into_iter()
            .flatten()
        {
            let s = a[k] + a[q];
            let coupling = (z[k] - z[q]) * (w[k] - w[q]);
            out[k] += 2.0 * a[q] * a[q] / (s * s) * coupling;
            out[q] += 2.0 * a[k] * a[k] / (s * s) * coupling;
        }
    }
    for (i, k) in grid.segment_cells(Segment::Gamma0).enumerate() {
        out[k] += 2.0 * z[k] * (w[k] - g_bottom[i]);
    }
    // Gamma1 faces: adjoint face term plus the explicit flux dependence on a
    for (i, k) in grid.segment_cells(Segment::Gamma1).enumerate() {
        out[k] += 2.0 * w[k] * (z[k] - weight[i]);
    }
}

/// `dJ/dphi` from one forward and one adjoint solve per measurement and equation.
pub fn gradient_adjoint(
    state: &LevelSetState,
    data: &MeasurementSet,
    mobilities: Mobilities,
) -> Result<ScalarField> {
    Ok(objective_and_gradient(state, data, mobilities)?.1)
}

fn objective_and_gradient(
    state: &LevelSetState,
    data: &MeasurementSet,
    mobilities: Mobilities,
) -> Result<(Objective, ScalarField)> {
    check_data(state, data)?;
    let grid = state.grid();
    let gamma = gamma_from_phi(state);
    let model = ContinuityModel::new(&gamma, mobilities)?;
    let zero_bottom = Trace::zeros(grid, Segment::Gamma0);
    let mut d_electron = vec![0.0; grid.len()];
    let mut d_hole = vec![0.0; grid.len()];
    let solved = misfits(&model, data)?;
    let objective = objective_of(
        data.kind(),
        grid,
        solved.iter().map(|(_, r)| r.clone()).collect(),
    );
    for ((forward, residual), entry) in solved.into_iter().zip(data.entries()) {
        let rho: Vec<f64> = match data.kind() {
            MeasurementKind::Pointwise => residual,
            MeasurementKind::CurrentFlow => vec![residual[0]; grid.n()],
        };
        if rho.iter().all(|&r| r == 0.0) {
            continue;
        }
        let neg_rho: Vec<f64> = rho.iter().map(|r| -r).collect();
        let u_top = Trace::from_vec_unchecked(grid, Segment::Gamma1, rho.clone());
        let v_top = Trace::from_vec_unchecked(grid, Segment::Gamma1, neg_rho.clone());
        let z_u = model
            .electron_solver()
            .solve(&zero_bottom, &u_top, DEFAULT_RTOL)?;
        let z_v = model
            .hole_solver()
            .solve(&zero_bottom, &v_top, DEFAULT_RTOL)?;
        let applied = entry.profile.trace().values();
        let u_bottom: Vec<f64> = applied.iter().map(|x| -x).collect();
        coefficient_gradient(
            model.electron_coefficient(),
            &forward.u,
            &u_bottom,
            &z_u,
            &rho,
            &mut d_electron,
        );
        coefficient_gradient(
            model.hole_coefficient(),
            &forward.v,
            applied,
            &z_v,
            &neg_rho,
            &mut d_hole,
        );
    }
    let eps = state.eps();
    let spread = state.gamma_n - state.gamma_p;
    let values = state
        .phi
        .values()
        .iter()
        .zip(gamma.field().values())
        .zip(d_electron.iter().zip(&d_hole))
        .map(|((&phi, &g), (&de, &dh))| {
            let d_gamma = mobilities.mu_n * de - mobilities.mu_p / (g * g) * dh;
            d_gamma * spread * smoothed_delta(phi, eps)
        })
        .collect();
    Ok((objective, ScalarField::from_vec_unchecked(grid, values)))
}

/// Default central-difference step for [`gradient_fd`].
pub fn default_fd_step(phi: &ScalarField) -> f64 {
    1e-5 * phi.max_abs() + 1e-8
}

/// Finite-difference gradient, one cell at a time: the residuals are
/// differenced centrally and contracted with the current residual, which is
/// the chain rule for `J = 1/2 |r|^2`. Costs two objective evaluations per
/// cell in the smoothing band.
pub fn gradient_fd(
    state: &LevelSetState,
    data: &MeasurementSet,
    mobilities: Mobilities,
    step: f64,
) -> Result<ScalarField> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    check_data(state, data)?;
    let grid = state.grid();
    let kind = data.kind();
    let eps = state.eps();
    let base = objective(state, data, mobilities)?;
    let mut out = vec![0.0; grid.len()];
    for (k, g) in out.iter_mut().enumerate() {
        // Cells outside the smoothing band do not influence gamma.
        if state.phi.values()[k].abs() >= eps + step {
            continue;
        }
        let eval = |delta: f64| -> Result<Objective> {
            let mut p = state.phi.clone();
            p.values_mut()[k] += delta;
            objective(&state.with_phi(p), data, mobilities)
        };
        let (plus, minus) = (eval(step)?, eval(-step)?);
        for ((r, rp), rm) in base
            .residuals
            .iter()
            .zip(&plus.residuals)
            .zip(&minus.residuals)
        {
            let d: Vec<f64> = rp
                .iter()
                .zip(rm)
                .map(|(a, b)| (a - b) / (2.0 * step))
                .collect();
            let sum: Vec<f64> = r.iter().zip(&d).map(|(a, b)| a + b).collect();
            let diff: Vec<f64> = r.iter().zip(&d).map(|(a, b)| a - b).collect();
            *g += 0.25
                * (Measurement::squared_norm(kind, grid, &sum)
                    - Measurement::squared_norm(kind, grid, &diff));
        }
    }
    Ok(ScalarField::from_vec_unchecked(grid, out))
}

/// Settings of the level-set iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionConfig {
    /// Largest change of `phi` per iteration in units of the grid spacing
    /// (the gradient is max-normalized).
    pub step_size: f64,
    pub max_iters: usize,
    /// Discrepancy factor; stop once `|residual| <= tau * |noise|`.
    pub discrepancy_tau: f64,
    pub grad_tol: f64,
    pub kind: MeasurementKind,
    pub record_every: usize,
    pub reinit_every: usize,
    /// Step halvings tried before an iteration is declared stalled.
    pub max_halvings: usize,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            step_size: 0.5,
            max_iters: 200,
            discrepancy_tau: 1.5,
            grad_tol: 1e-9,
            kind: MeasurementKind::Pointwise,
            record_every: 1,
            reinit_every: 20,
            max_halvings: 20,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid(format!(
                "step size must be nonnegative, got {}",
                self.step_size
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.discrepancy_tau >= 1.0) {
            return Err(Error::invalid(format!(
                "discrepancy tau must be >= 1, got {}",
                self.discrepancy_tau
            )));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(Error::invalid(format!(
                "grad_tol must be nonnegative, got {}",
                self.grad_tol
            )));
        }
        if self.record_every == 0 || self.reinit_every == 0 {
            return Err(Error::invalid(
                "record_every and reinit_every must be at least 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub residual: f64,
    pub symdiff_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    Discrepancy,
    GradientTolerance,
    MaxIterations,
    /// No step size in the halving sequence decreased the misfit.
    Stalled,
    SolverFailure(String),
}

impl StopReason {
    pub fn as_str(&self) -> &str {
        match self {
            StopReason::Discrepancy => "discrepancy",
            StopReason::GradientTolerance => "gradient",
            StopReason::MaxIterations => "max_iters",
            StopReason::Stalled => "stalled",
            StopReason::SolverFailure(_) => "solver_failure",
        }
    }

    /// Stopped on one of the convergence criteria.
    pub fn converged(&self) -> bool {
        matches!(
            self,
            StopReason::Discrepancy | StopReason::GradientTolerance
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub state: LevelSetState,
    pub records: Vec<IterationRecord>,
    pub stop_reason: StopReason,
    /// Descent steps taken.
    pub iterations: usize,
}

impl ReconstructionResult {
    pub fn final_record(&self) -> &IterationRecord {
        self.records.last().expect("records are never empty")
    }

    /// CSV `iter,residual,symdiff_error`; the last column is empty without ground truth.
    pub fn convergence_csv(&self) -> String {
        let mut out = String::from("iter,residual,symdiff_error\n");
        for r in &self.records {
            let sym = r
                .symdiff_error
                .map(|e| format!("{e:e}"))
                .unwrap_or_default();
            let _ = writeln!(out, "{},{:e},{}", r.iter, r.residual, sym);
        }
        out
    }
}

struct Evaluation {
    objective: Objective,
    gradient: ScalarField,
}

fn evaluate(
    state: &LevelSetState,
    data: &MeasurementSet,
    mobilities: Mobilities,
) -> Result<Evaluation> {
    let (objective, gradient) = objective_and_gradient(state, data, mobilities)?;
    Ok(Evaluation {
        objective,
        gradient,
    })
}

/// Normalized gradient descent on `phi`.
///
/// Each iteration moves `phi` by `-step * h * g / max|g|`, halving the step
/// until the misfit does not increase, so accepted residuals are
/// non-increasing. `phi` is reset to a signed distance every `reinit_every`
/// iterations; a reset that would increase the misfit is retried after the
/// next step instead.
pub fn reconstruct(
    data: &MeasurementSet,
    cfg: &InversionConfig,
    init: &LevelSetState,
    mobilities: Mobilities,
    ground_truth: Option<&ScalarField>,
) -> Result<ReconstructionResult> {
    cfg.validate()?;
    check_data(init, data)?;
    if cfg.kind != data.kind() {
        return Err(Error::invalid(format!(
            "inversion configured for {} data but got {}",
            cfg.kind.as_str(),
            data.kind().as_str()
        )));
    }
    if let Some(t) = ground_truth {
        if t.grid() != init.grid() {
            return Err(Error::invalid("ground truth lives on a different grid"));
        }
    }
    let noise_bound = if data.noise_level() > 0.0 {
        Some(cfg.discrepancy_tau * data.noise_norm())
    } else {
        None
    };
    let symdiff = |s: &LevelSetState| -> Result<Option<f64>> {
        ground_truth
            .map(|t| symmetric_difference_error(&s.indicator(), t))
            .transpose()
    };

    let mut state = init.clone();
    let mut records = Vec::new();
    let mut eval = match evaluate(&state, data, mobilities) {
        Ok(e) => e,
        Err(e) if e.is_solver_failure() => {
            return Ok(ReconstructionResult {
                records: vec![IterationRecord {
                    iter: 0,
                    residual: f64::NAN,
                    symdiff_error: symdiff(&state)?,
                }],
                state,
                stop_reason: StopReason::SolverFailure(e.to_string()),
                iterations: 0,
            })
        }
        Err(e) => return Err(e),
    };

    let mut iter = 0;
    let mut reinit_pending = false;
    let stop_reason = loop {
        let residual = eval.objective.residual_norm();
        let grad_max = eval.gradient.max_abs();
        let stop = if noise_bound.is_some_and(|b| residual <= b) {
            Some(StopReason::Discrepancy)
        } else if grad_max <= cfg.grad_tol {
            Some(StopReason::GradientTolerance)
        } else if iter >= cfg.max_iters {
            Some(StopReason::MaxIterations)
        } else {
            None
        };
        if stop.is_some() || iter % cfg.record_every == 0 {
            records.push(IterationRecord {
                iter,
                residual,
                symdiff_error: symdiff(&state)?,
            });
        }
        if let Some(reason) = stop {
            break reason;
        }

        let scale = cfg.step_size * state.grid().h() / (grad_max + f64::MIN_POSITIVE);
        let mut step = scale;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let mut phi = state.phi.clone();
            for (p, g) in phi.values_mut().iter_mut().zip(eval.gradient.values()) {
                *p -= step * g;
            }
            let trial = state.with_phi(phi);
            match objective(&trial, data, mobilities) {
                Ok(obj) if obj.value <= eval.objective.value => {
                    accepted = Some(trial);
                    break;
                }
                Ok(_) => step *= 0.5,
                Err(e) if e.is_solver_failure() => break,
                Err(e) => return Err(e),
            }
        }
        let Some(mut next) = accepted else {
            records.push(IterationRecord {
                iter,
                residual,
                symdiff_error: symdiff(&state)?,
            });
            break StopReason::Stalled;
        };
        iter += 1;

        let mut next_eval = match evaluate(&next, data, mobilities) {
            Ok(e) => e,
            Err(e) if e.is_solver_failure() => break StopReason::SolverFailure(e.to_string()),
            Err(e) => return Err(e),
        };
        if iter % cfg.reinit_every == 0 {
            reinit_pending = true;
        }
        if reinit_pending {
            let reset = next.with_phi(signed_distance(&next.phi));
            if let Ok(e) = evaluate(&reset, data, mobilities) {
                if e.objective.value <= next_eval.objective.value {
                    next = reset;
                    next_eval = e;
                    reinit_pending = false;
                }
            }
        }
        state = next;
        eval = next_eval;
    };
    dedup_last(&mut records);
    Ok(ReconstructionResult {
        state,
        records,
        stop_reason,
        iterations: iter,
    })
}

fn dedup_last(records: &mut Vec<IterationRecord>) {
    let n = records.len();
    if n >= 2 && records[n - 1] == records[n - 2] {
        records.pop();
    }
}
