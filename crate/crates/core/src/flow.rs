//! Implicit time integration of the radial parabolic Monge-Ampere equation in
//! the bounded unknown chi = phi - t*psi, for the conical, cusp, regularized,
//! and smoke variants.
//!
//! The step solves
//!     chi+ = chi + dt * (rhs(t+dt, chi+) - psi)
//! by damped Newton, where
//!     rhs(t, chi) = log((b_t + D2(t*psi + chi)) / g) + h + coeff * ell_eff
//! is the time derivative of phi = chi + t*psi. The second difference of the
//! nodal psi is used inside the flow (rather than its closed-form chain rule)
//! so that the chi-level and phi-level discrete flows agree exactly; every
//! comparison-principle check then holds at the solver tolerance by the
//! M-matrix structure of the Jacobian. The closed-form model densities stay
//! in the geometry module where the validators compare against them.

use crate::error::{CoreError, Result};
use crate::geometry::{self, ConeParams, ModelGeometry};
use crate::linalg::solve_tridiagonal;
use crate::mesh::{second_difference, second_difference_coeffs, Mesh};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FlowVariant {
    /// No divisor term at all: ell_eff = 0, nu = 0, h = 0, psi = 0.
    Smoke,
    /// Cone angle gamma > 0, unknown chi = phi - t*psi_gamma.
    Conical,
    /// Smooth approximation with log(eps^2 + |s|^2) in place of log|s|^2 and
    /// mollified initial data; evolves phi directly (psi = 0).
    Regularized { epsilon: f64, mollify_j: usize },
    /// Cusp path (gamma = 0), unknown chi = phi - t*psi_o.
    Cusp,
}

impl FlowVariant {
    pub fn name(&self) -> &'static str {
        match self {
            FlowVariant::Smoke => "smoke",
            FlowVariant::Conical => "conical",
            FlowVariant::Regularized { .. } => "regularized",
            FlowVariant::Cusp => "cusp",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowConfig {
    pub geom: ModelGeometry,
    pub params: ConeParams,
    pub mesh: Mesh,
    pub variant: FlowVariant,
    /// Piecewise step sizes as (t_end, dt) pairs covering (0, horizon_t].
    pub dt_schedule: Vec<(f64, f64)>,
    /// Requested output times in (0, horizon_t]; the t = 0 state is always
    /// the first trajectory entry.
    pub output_times: Vec<f64>,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub positivity_floor: f64,
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let t_horizon = self.params.horizon_t;
        if !(t_horizon > 0.0) {
            return Err(CoreError::config("flow.horizon_t", "must be positive"));
        }
        if let Some(gamma_class) = self.class_gamma() {
            let tmax = geometry::tmax(&self.geom, gamma_class);
            if !(t_horizon < tmax) {
                return Err(CoreError::config(
                    "flow.horizon_t",
                    format!(
                        "horizon {t_horizon} reaches the maximal existence time {tmax} \
                         set by positivity of the background cohomology class"
                    ),
                ));
            }
        }
        match self.variant {
            FlowVariant::Conical => {
                if !(self.params.gamma > 0.0 && self.params.gamma <= 1.0) {
                    return Err(CoreError::config(
                        "flow.gamma",
                        format!("Conical requires gamma > 0 (and <= 1), got {}", self.params.gamma),
                    ));
                }
            }
            FlowVariant::Regularized { epsilon, mollify_j } => {
                if !(epsilon > 0.0) {
                    return Err(CoreError::config(
                        "flow.epsilon",
                        "Regularized requires epsilon > 0",
                    ));
                }
                if mollify_j < 1 {
                    return Err(CoreError::config(
                        "flow.mollify_j",
                        "Regularized requires mollify_j >= 1",
                    ));
                }
            }
            FlowVariant::Cusp | FlowVariant::Smoke => {}
        }
        if self.dt_schedule.is_empty() {
            return Err(CoreError::config("flow.dt_schedule", "must not be empty"));
        }
        let mut prev_end = 0.0;
        for &(t_end, dt) in &self.dt_schedule {
            if !(dt > 0.0) {
                return Err(CoreError::config("flow.dt_schedule", "dt must be positive"));
            }
            if !(t_end > prev_end) {
                return Err(CoreError::config(
                    "flow.dt_schedule",
                    "segment ends must increase",
                ));
            }
            prev_end = t_end;
        }
        if prev_end < t_horizon - 1e-12 {
            return Err(CoreError::config(
                "flow.dt_schedule",
                format!("schedule ends at {prev_end}, must cover (0, {t_horizon}]"),
            ));
        }
        for &t in &self.output_times {
            if !(t > 0.0 && t <= t_horizon + 1e-12) {
                return Err(CoreError::config(
                    "flow.output_times",
                    format!("output time {t} outside (0, horizon]"),
                ));
            }
        }
        if !(self.newton_tol > 0.0) {
            return Err(CoreError::config("flow.newton_tol", "must be positive"));
        }
        if !(self.positivity_floor > 0.0) {
            return Err(CoreError::config(
                "flow.positivity_floor",
                "must be positive",
            ));
        }
        Ok(())
    }

    /// Gamma entering the background class: the conical value for the conical
    /// flow, zero for the cusp-type paths, none for the smoke config (nu = 0,
    /// so the class never degenerates).
    fn class_gamma(&self) -> Option<f64> {
        match self.variant {
            FlowVariant::Conical => Some(self.params.gamma),
            FlowVariant::Cusp | FlowVariant::Regularized { .. } => Some(0.0),
            FlowVariant::Smoke => None,
        }
    }
}

/// Per-config nodal fields shared by every step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowFields {
    pub g: Vec<f64>,
    pub ell: Vec<f64>,
    /// coeff * ell_eff, the fixed source term of the equation.
    pub source: Vec<f64>,
    /// psi at the nodes (psi_gamma, psi_o, or zero).
    pub psi: Vec<f64>,
    /// Second difference of the nodal psi: discrete at interior rows, the
    /// closed-form chain rule at the two boundary rows. The nodal psi has a
    /// nonvanishing slope at the truncation ends, so the ghost-reflection
    /// rows would misstate its curvature by O(psi'/h) and could push the
    /// background negative; the closed form is exact there. The affine
    /// algebra behind the comparison checks propagates this hybrid
    /// consistently.
    pub d2psi: Vec<f64>,
    /// d/dt of the background class factor (0 for smoke).
    pub class_rate: f64,
}

impl FlowFields {
    pub fn build(cfg: &FlowConfig) -> Result<FlowFields> {
        let mesh = &cfg.mesh;
        let geom = &cfg.geom;
        let g = mesh.sample(|u| geom.g(u));
        let ell = mesh.sample(|u| geom.ell(u));
        let (psi, source, class_rate) = match cfg.variant {
            FlowVariant::Smoke => (vec![0.0; mesh.len()], vec![0.0; mesh.len()], 0.0),
            FlowVariant::Conical => {
                let gamma = cfg.params.gamma;
                let psi: Vec<f64> = ell
                    .iter()
                    .map(|&l| geometry::psi_gamma_from_ell(gamma, l))
                    .collect();
                let source: Vec<f64> = ell.iter().map(|&l| (1.0 - gamma) * l).collect();
                (psi, source, geom.class_shrink_rate(gamma))
            }
            FlowVariant::Cusp => {
                let psi: Vec<f64> = ell.iter().map(|&l| geometry::psi_cusp_from_ell(l)).collect();
                (psi, ell.clone(), geom.class_shrink_rate(0.0))
            }
            FlowVariant::Regularized { epsilon, .. } => {
                let source: Vec<f64> = ell
                    .iter()
                    .map(|&l| (epsilon * epsilon + l.exp()).ln())
                    .collect();
                (vec![0.0; mesh.len()], source, geom.class_shrink_rate(0.0))
            }
        };
        let d2psi = second_difference(mesh, &psi)?;
        Ok(FlowFields {
            g,
            ell,
            source,
            psi,
            d2psi,
            class_rate,
        })
    }

    fn background(&self, t: f64, i: usize) -> f64 {
        (1.0 + t * self.class_rate) * self.g[i]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowState {
    pub t: f64,
    /// Bounded unknown chi = phi - t*psi.
    pub chi: Vec<f64>,
    /// Accepted time derivative of phi (the PDE right-hand side).
    pub phidot: Vec<f64>,
    /// Metric density b_t + D2(t*psi + chi) at the nodes.
    pub metric_density: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub steps: usize,
    pub newton_iters_total: usize,
    pub newton_iters_max: usize,
    pub dt_halvings: usize,
    pub dt_min_used: f64,
    pub dt_history: Vec<(f64, f64, usize)>, // (t_reached, dt, newton iters)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub config: FlowConfig,
    pub fields: FlowFields,
    pub states: Vec<FlowState>,
    pub stats: RunStats,
}

impl Trajectory {
    /// phi = chi + t*psi at output index k.
    pub fn phi(&self, k: usize) -> Vec<f64> {
        let s = &self.states[k];
        s.chi
            .iter()
            .zip(&self.fields.psi)
            .map(|(&c, &p)| c + s.t * p)
            .collect()
    }

    pub fn initial_phi(&self) -> Vec<f64> {
        self.states[0].chi.clone()
    }

    pub fn state_at(&self, t: f64) -> Option<&FlowState> {
        self.states
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-12 * t.max(1.0))
    }

    /// Assemble a trajectory from raw states (used by validator tests that
    /// plant synthetic fields).
    pub fn synthetic(config: FlowConfig, states: Vec<FlowState>) -> Result<Trajectory> {
        let fields = FlowFields::build(&config)?;
        Ok(Trajectory {
            config,
            fields,
            states,
            stats: RunStats::default(),
        })
    }
}

#[derive(Debug)]
pub struct FlowAbort {
    pub partial: Trajectory,
    pub reason: CoreError,
}

impl std::fmt::Display for FlowAbort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "flow aborted at t = {:.6e}: {}",
            self.partial.states.last().map(|s| s.t).unwrap_or(0.0),
            self.reason
        )
    }
}

/// Driver owning the per-run precomputations.
pub struct FlowSolver {
    pub cfg: FlowConfig,
    pub fields: FlowFields,
}

type Forcing<'a> = &'a dyn Fn(f64, f64) -> f64;

impl FlowSolver {
    pub fn new(cfg: FlowConfig) -> Result<FlowSolver> {
        cfg.validate()?;
        let fields = FlowFields::build(&cfg)?;
        Ok(FlowSolver { cfg, fields })
    }

    /// Metric density b_t + D2(t*psi + chi); errors carry the offending nodes.
    pub fn metric_density(&self, t: f64, chi: &[f64]) -> Result<Vec<f64>> {
        let d2chi = second_difference(&self.cfg.mesh, chi)?;
        let n = chi.len();
        let mut m = vec![0.0; n];
        let mut bad = Vec::new();
        for i in 0..n {
            m[i] = self.fields.background(t, i) + t * self.fields.d2psi[i] + d2chi[i];
            if !(m[i] > 0.0) {
                bad.push(i);
            }
        }
        if !bad.is_empty() {
            return Err(CoreError::Positivity {
                t,
                first: bad[0],
                nodes: bad,
            });
        }
        Ok(m)
    }

    /// The PDE right-hand side (time derivative of phi) at (t, chi):
    /// log(metric/g) + h + coeff*ell_eff. The chi evolution is rhs - psi.
    pub fn rhs(&self, t: f64, chi: &[f64]) -> Result<Vec<f64>> {
        let m = self.metric_density(t, chi)?;
        Ok(self.rhs_from_metric(&m))
    }

    fn rhs_from_metric(&self, metric: &[f64]) -> Vec<f64> {
        metric
            .iter()
            .zip(&self.fields.g)
            .zip(&self.fields.source)
            .map(|((&m, &g), &src)| m.ln() - g.ln() + src)
            .collect()
    }

    /// One backward Euler step by damped Newton with a positivity line search.
    pub fn step_backward_euler(&self, state: &FlowState, dt: f64) -> Result<FlowState> {
        self.step_forced(state, dt, None).map(|(s, _)| s)
    }

    /// Backward Euler step of chi' = rhs - psi + forcing(t, u); also reports
    /// the Newton iteration count.
    pub fn step_forced(
        &self,
        state: &FlowState,
        dt: f64,
        forcing: Option<Forcing>,
    ) -> Result<(FlowState, usize)> {
        if !(dt > 0.0) {
            return Err(CoreError::domain("step_backward_euler", "dt must be positive"));
        }
        let mesh = &self.cfg.mesh;
        let n = mesh.len();
        let t_new = state.t + dt;
        let floor = self.cfg.positivity_floor;
        let chi_scale = state.chi.iter().fold(1.0f64, |a, &x| a.max(x.abs()));
        // the residual cannot be driven below the rounding floor of its own
        // evaluation, so cap the target there for very small steps
        let tol = (self.cfg.newton_tol * dt).max(4.0 * f64::EPSILON * chi_scale);
        // on rows where the metric degenerates the residual quantizes in
        // units far above tol; a vanishing Newton increment then certifies
        // convergence instead
        let tol_increment = self.cfg.newton_tol * chi_scale;

        let force: Vec<f64> = match forcing {
            Some(f) => mesh.nodes.iter().map(|&u| f(t_new, u)).collect(),
            None => vec![0.0; n],
        };

        // base part of the metric that does not depend on chi
        let base: Vec<f64> = (0..n)
            .map(|i| self.fields.background(t_new, i) + t_new * self.fields.d2psi[i])
            .collect();

        let metric_of = |chi: &[f64]| -> Vec<f64> {
            let d2 = second_difference(mesh, chi).expect("length checked");
            (0..n).map(|i| base[i] + d2[i]).collect()
        };
        let residual_of = |chi: &[f64], metric: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let rhs_i =
                        metric[i].ln() - self.fields.g[i].ln() + self.fields.source[i];
                    chi[i] - state.chi[i] - dt * (rhs_i - self.fields.psi[i] + force[i])
                })
                .collect()
        };
        let feasible = |metric: &[f64]| metric.iter().all(|&m| m > floor);

        let mut chi = state.chi.clone();
        let mut metric = metric_of(&chi);
        if !feasible(&metric) {
            // warm start infeasible at the new time; let the caller cut dt
            let bad: Vec<usize> = metric
                .iter()
                .enumerate()
                .filter(|(_, &m)| !(m > floor))
                .map(|(i, _)| i)
                .collect();
            return Err(CoreError::Positivity {
                t: t_new,
                first: bad[0],
                nodes: bad,
            });
        }
        let mut res = residual_of(&chi, &metric);
        let mut res_norm = sup_norm(&res);

        for iter in 0..=self.cfg.newton_max_iter {
            if res_norm <= tol {
                let phidot = self.rhs_from_metric(&metric);
                return Ok((
                    FlowState {
                        t: t_new,
                        chi,
                        phidot,
                        metric_density: metric,
                    },
                    iter,
                ));
            }
            if iter == self.cfg.newton_max_iter {
                break;
            }

            // J = I - dt * diag(1/M) * D2, strictly diagonally dominant
            let mut sub = vec![0.0; n - 1];
            let mut diag = vec![0.0; n];
            let mut sup = vec![0.0; n - 1];
            for i in 0..n {
                let (a, b, c) = second_difference_coeffs(mesh, i);
                let w = dt / metric[i];
                diag[i] = 1.0 - w * b;
                if i > 0 {
                    sub[i - 1] = -w * a;
                }
                if i < n - 1 {
                    sup[i] = -w * c;
                }
            }
            let neg_res: Vec<f64> = res.iter().map(|r| -r).collect();
            let delta = solve_tridiagonal(&sub, &diag, &sup, &neg_res);
            let delta_norm = sup_norm(&delta);
            let increment_converged = delta_norm <= tol_increment;

            // backtracking: stay above the positivity floor and reduce ||G||
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = chi
                    .iter()
                    .zip(&delta)
                    .map(|(&x, &d)| x + step * d)
                    .collect();
                let trial_metric = metric_of(&trial);
                if feasible(&trial_metric) {
                    let trial_res = residual_of(&trial, &trial_metric);
                    let trial_norm = sup_norm(&trial_res);
                    if trial_norm <= (1.0 - 0.25 * step) * res_norm
                        || trial_norm <= tol
                        || (increment_converged && trial_norm <= res_norm)
                    {
                        chi = trial;
                        metric = trial_metric;
                        res = trial_res;
                        res_norm = trial_norm;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if increment_converged {
                // the correction itself is below the meaningful chi
                // resolution: converged at the floating-point floor
                let phidot = self.rhs_from_metric(&metric);
                return Ok((
                    FlowState {
                        t: t_new,
                        chi,
                        phidot,
                        metric_density: metric,
                    },
                    iter + 1,
                ));
            }
            if !accepted {
                return Err(CoreError::NewtonDiverged {
                    t: t_new,
                    iters: iter,
                    residual: res_norm,
                });
            }
        }
        Err(CoreError::NewtonDiverged {
            t: t_new,
            iters: self.cfg.newton_max_iter,
            residual: res_norm,
        })
    }

    /// Integrate from phi0 (the t = 0 value of chi) across the schedule,
    /// recording states at the requested output times. Newton failures halve
    /// the step down to a floor, then abort with the partial trajectory.
    pub fn run_flow(&self, phi0: &[f64]) -> std::result::Result<Trajectory, Box<FlowAbort>> {
        self.run_forced(phi0, None)
    }

    pub fn run_forced(
        &self,
        phi0: &[f64],
        forcing: Option<Forcing>,
    ) -> std::result::Result<Trajectory, Box<FlowAbort>> {
        let mut stats = RunStats {
            dt_min_used: f64::INFINITY,
            ..Default::default()
        };
        let make_traj = |states: Vec<FlowState>, stats: RunStats| Trajectory {
            config: self.cfg.clone(),
            fields: self.fields.clone(),
            states,
            stats,
        };

        // initial state at t = 0
        let metric0 = match self.metric_density(0.0, phi0) {
            Ok(m) => m,
            Err(e) => {
                return Err(Box::new(FlowAbort {
                    partial: make_traj(Vec::new(), stats),
                    reason: e,
                }))
            }
        };
        let phidot0 = self.rhs_from_metric(&metric0);
        let mut states = vec![FlowState {
            t: 0.0,
            chi: phi0.to_vec(),
            phidot: phidot0,
            metric_density: metric0,
        }];

        // merged breakpoints: schedule segment ends and output times
        let horizon = self.cfg.params.horizon_t;
        let mut cuts: Vec<f64> = self
            .cfg
            .output_times
            .iter()
            .cloned()
            .chain(self.cfg.dt_schedule.iter().map(|&(e, _)| e))
            .filter(|&t| t > 0.0 && t <= horizon + 1e-12)
            .collect();
        cuts.push(horizon);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * horizon.max(1.0));

        let dt_for = |t: f64| -> f64 {
            for &(t_end, dt) in &self.cfg.dt_schedule {
                if t < t_end - 1e-13 {
                    return dt;
                }
            }
            self.cfg.dt_schedule.last().unwrap().1
        };
        let is_output = |t: f64| -> bool {
            self.cfg
                .output_times
                .iter()
                .any(|&o| (o - t).abs() <= 1e-12 * horizon.max(1.0))
        };

        let dt_floor = 1e-12 * horizon;
        let mut current = states[0].clone();
        for &target in &cuts {
            while current.t < target - 1e-13 * horizon.max(1.0) {
                let remaining = target - current.t;
                let mut dt = dt_for(current.t).min(remaining);
                // halve on failure
                loop {
                    match self.step_forced(&current, dt, forcing) {
                        Ok((next, iters)) => {
                            stats.steps += 1;
                            stats.newton_iters_total += iters;
                            stats.newton_iters_max = stats.newton_iters_max.max(iters);
                            stats.dt_min_used = stats.dt_min_used.min(dt);
                            stats.dt_history.push((next.t, dt, iters));
                            current = next;
                            break;
                        }
                        Err(e) => {
                            stats.dt_halvings += 1;
                            dt *= 0.5;
                            if dt < dt_floor {
                                return Err(Box::new(FlowAbort {
                                    partial: make_traj(states, stats),
                                    reason: e,
                                }));
                            }
                        }
                    }
                }
            }
            // snap to the exact breakpoint for reproducible output times
            current.t = target;
            if is_output(target) || (target - horizon).abs() <= 1e-12 * horizon.max(1.0) {
                states.push(current.clone());
            }
        }

        Ok(make_traj(states, stats))
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()))
}

/// Discrete sup-convolution mollifier: widens each value by the quadratic
/// envelope max_k(phi[k] - (j/2)(u_i - u_k)^2). The output dominates the
/// input, decreases pointwise as j grows, and recovers the input on the grid
/// as j -> inf; constants pass through unchanged.
pub fn mollify_initial(mesh: &Mesh, phi0_raw: &[f64], j: usize) -> Result<Vec<f64>> {
    if phi0_raw.len() != mesh.len() {
        return Err(CoreError::LengthMismatch {
            got: phi0_raw.len(),
            want: mesh.len(),
        });
    }
    if j < 1 {
        return Err(CoreError::domain("mollify_initial", "j must be >= 1"));
    }
    let jf = j as f64;
    let n = mesh.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let ui = mesh.nodes[i];
        let mut best = f64::NEG_INFINITY;
        for k in 0..n {
            let d = ui - mesh.nodes[k];
            let cand = phi0_raw[k] - 0.5 * jf * d * d;
            if cand > best {
                best = cand;
            }
        }
        out[i] = best;
    }
    Ok(out)
}

/// Default step-size schedule: dt roughly proportional to t near zero,
/// capped for the bulk of the run.
pub fn default_dt_schedule(horizon_t: f64) -> Vec<(f64, f64)> {
    let t = horizon_t;
    vec![
        (1e-5 * t, 1e-5 * t),
        (1e-4 * t, 2.5e-5 * t),
        (1e-3 * t, 2.5e-4 * t),
        (1e-2 * t, 2.5e-3 * t),
        (1e-1 * t, 1e-2 * t),
        (t, 2e-2 * t),
    ]
}

/// Default output times: a geometric ladder accumulating at zero plus a
/// uniform tail, always ending at the horizon.
pub fn default_output_times(horizon_t: f64) -> Vec<f64> {
    let mut times: Vec<f64> = (0..=16).map(|k| horizon_t * 0.5f64.powi(k)).collect();
    for k in 1..=9 {
        times.push(horizon_t * k as f64 / 10.0);
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * horizon_t);
    times
}
