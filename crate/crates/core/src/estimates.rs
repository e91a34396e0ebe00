//! Per-proposition validators: each a-priori inequality becomes a fitted
//! constant (the exact max of its defect over the trajectory grid) plus a
//! uniformity verdict across the cone-angle sweep.
//!
//! Conventions shared by all validators:
//! - states[0] is the t = 0 state, so phi_0 = chi_0 on the grid;
//! - phi = chi + t*psi with the nodal psi of the run's variant;
//! - sup/inf/osc of phi_0 are grid quantities on the truncated domain;
//! - every fit is a pure max-scan: rerunning on the same trajectory
//!   reproduces fitted_c bit for bit.

use crate::error::{CoreError, Result};
use crate::flow::{FlowVariant, Trajectory};
use crate::geometry;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub name: String,
    pub gamma: f64,
    pub fitted_c: f64,
    pub aux: BTreeMap<String, f64>,
    pub pass: bool,
    pub notes: String,
}

impl EstimateReport {
    fn new(name: &str, gamma: f64, fitted_c: f64, aux: BTreeMap<String, f64>, notes: String) -> Self {
        let pass = fitted_c.is_finite() && aux.values().all(|v| v.is_finite());
        EstimateReport {
            name: name.to_string(),
            gamma,
            fitted_c,
            aux,
            pass,
            notes,
        }
    }
}

fn check_nonempty(traj: &Trajectory) -> Result<()> {
    if traj.states.len() < 2 {
        return Err(CoreError::EmptyTrajectory);
    }
    Ok(())
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
}

fn inf(v: &[f64]) -> f64 {
    v.iter().fold(f64::INFINITY, |a, &b| a.min(b))
}

fn gamma_of(traj: &Trajectory) -> f64 {
    match traj.config.variant {
        FlowVariant::Conical => traj.config.params.gamma,
        _ => 0.0,
    }
}

/// phi(t) <= sup phi_0 + t*psi + C*t. In chi variables the defect is
/// (chi - sup chi_0)/t.
pub fn check_upper_bound(traj: &Trajectory) -> Result<EstimateReport> {
    check_nonempty(traj)?;
    let sup0 = sup(&traj.states[0].chi);
    let mut c = f64::NEG_INFINITY;
    for s in traj.states.iter().skip(1) {
        for &x in &s.chi {
            c = c.max((x - sup0) / s.t);
        }
    }
    Ok(EstimateReport::new(
        "potential_upper",
        gamma_of(traj),
        c,
        BTreeMap::new(),
        String::new(),
    ))
}

/// Short-time lower bounds on (0, min(1,T)]:
/// flat form  phi >= inf phi_0 + t*psi - C_flat,
/// log form   phi >= phi_0 + t*psi + (t log t - t) - C_log * t  (n = 1).
pub fn check_lower_bound_short(traj: &Trajectory) -> Result<EstimateReport> {
    check_nonempty(traj)?;
    let chi0 = &traj.states[0].chi;
    let inf0 = inf(chi0);
    let t_cap = traj.config.params.horizon_t.min(1.0);
    let mut c_flat = f64::NEG_INFINITY;
    let mut c_log = f64::NEG_INFINITY;
    for s in traj.states.iter().skip(1) {
        if s.t > t_cap + 1e-12 {
            continue;
        }
        let profile = s.t * s.t.ln() - s.t;
        for (i, &x) in s.chi.iter().enumerate() {
            c_flat = c_flat.max(inf0 - x);
            c_log = c_log.max((chi0[i] + profile - x) / s.t);
        }
    }
    let mut aux = BTreeMap::new();
    aux.insert("c_log".to_string(), c_log);
    Ok(EstimateReport::new(
        "potential_lower_short",
        gamma_of(traj),
        c_flat,
        aux,
        String::new(),
    ))
}

/// Upper bounds on the time derivative:
/// mean-value form  phidot <= (phi - phi_0)/t + n   (defect reported in aux),
/// model form       phidot <= psi + C on [delta, T] (the fitted constant).
pub fn check_phidot_upper(traj: &Trajectory, delta: f64) -> Result<EstimateReport> {
    check_nonempty(traj)?;
    let chi0 = &traj.states[0].chi;
    let psi = &traj.fields.psi;
    let mut mean_value = f64::NEG_INFINITY;
    let mut c_model = f64::NEG_INFINITY;
    for s in traj.states.iter().skip(1) {
        for i in 0..s.chi.len() {
            // (phi - phi_0)/t = (chi - chi_0)/t + psi
            let slope = (s.chi[i] - chi0[i]) / s.t + psi[i];
            mean_value = mean_value.max(s.phidot[i] - slope - 1.0);
            if s.t >= delta - 1e-12 {
                c_model = c_model.max(s.phidot[i] - psi[i]);
            }
        }
    }
    let mut aux = BTreeMap::new();
    aux.insert("mean_value_defect".to_string(), mean_value);
    aux.insert("delta".to_string(), delta);
    Ok(EstimateReport::new(
        "phidot_upper",
        gamma_of(traj),
        c_model,
        aux,
        String::new(),
    ))
}

/// Lower bounds on the time derivative:
/// log form         sigma*(phidot - psi) >= -2 osc phi_0 + n log t - C,
/// horizon-weighted (T - t)*(phidot - psi) >= -C  (in aux).
///
/// sigma is config-supplied (the uniform small constant exists but is not
/// numeric); the fit is then a linear max-scan.
pub fn check_phidot_lower(traj: &Trajectory, sigma: f64) -> Result<EstimateReport> {
    check_nonempty(traj)?;
    if !(sigma > 0.0) {
        return Err(CoreError::domain("check_phidot_lower", "sigma must be positive"));
    }
    let chi0 = &traj.states[0].chi;
    let osc0 = sup(chi0) - inf(chi0);
    let psi = &traj.fields.psi;
    let horizon = traj.config.params.horizon_t;
    let mut c_log = f64::NEG_INFINITY;
    let mut c_weighted = f64::NEG_INFINITY;
    for s in traj.states.iter().skip(1) {
        for i in 0..s.chi.len() {
            let gap = s.phidot[i] - psi[i];
            c_log = c_log.max(s.t.ln() - sigma * gap);
            c_weighted = c_weighted.max((horizon - s.t) * (-gap));
        }
    }
    let fitted = c_log + 2.0 * osc0;
    let mut aux = BTreeMap::new();
    aux.insert("c_horizon_weighted".to_string(), c_weighted);
    aux.insert("sigma".to_string(), sigma);
    aux.insert("osc_phi0".to_string(), osc0);
    Ok(EstimateReport::new(
        "phidot_lower",
        gamma_of(traj),
        fitted,
        aux,
        String::new(),
    ))
}

/// Metric sandwich against the model metric: in complex dimension one the
/// trace ratio is the scalar density ratio, so
/// fitted_c = max over (t, u) of t^2 * |log(metric/model)|.
pub fn check_trace_sandwich(traj: &Trajectory) -> Result<EstimateReport> {
    check_nonempty(traj)?;
    let model = model_metric_nodal(traj)?;
    let mut c = f64::NEG_INFINITY;
    for s in traj.states.iter().skip(1) {
        for (i, &m) in s.metric_density.iter().enumerate() {
            c = c.max(s.t * s.t * (m / model[i]).ln().abs());
        }
    }
    Ok(EstimateReport::new(
        "trace_sandwich",
        gamma_of(traj),
        c,
        BTreeMap::new(),
        String::new(),
    ))
}

/// Global lower bound phi >= t*psi - C, i.e. C = max(-chi).
pub fn check_global_lower(traj: &Trajectory) -> Result<EstimateReport> {
    check_nonempty(traj)?;
    let mut c = f64::NEG_INFINITY;
    for s in traj.states.iter().skip(1) {
        for &x in &s.chi {
            c = c.max(-x);
        }
    }
    Ok(EstimateReport::new(
        "potential_global_lower",
        gamma_of(traj),
        c,
        BTreeMap::new(),
        String::new(),
    ))
}

/// The cusp-limit bullets on a cusp trajectory:
/// metric sandwich against the cusp model (the fitted constant),
/// phidot - psi_o <= C/t, and phidot - psi_o >= a log t - C with the slope
/// a fitted by regression of the nodal minima against log t.
pub fn check_cusp_bullets(traj: &Trajectory) -> Result<EstimateReport> {
    check_nonempty(traj)?;
    if !matches!(traj.config.variant, FlowVariant::Cusp) {
        return Err(CoreError::Mismatch(
            "check_cusp_bullets needs a cusp-variant trajectory".into(),
        ));
    }
    let model = model_metric_nodal(traj)?;
    let psi = &traj.fields.psi;
    let mut c_metric = f64::NEG_INFINITY;
    let mut c_upper = f64::NEG_INFINITY;
    let mut minima = Vec::new();
    for s in traj.states.iter().skip(1) {
        let mut min_gap = f64::INFINITY;
        for i in 0..s.chi.len() {
            let gap = s.phidot[i] - psi[i];
            c_metric = c_metric.max(s.t * s.t * (s.metric_density[i] / model[i]).ln().abs());
            c_upper = c_upper.max(s.t * gap);
            min_gap = min_gap.min(gap);
        }
        minima.push((s.t.ln(), min_gap));
    }
    // slope of the lower envelope in log t
    let m = minima.len() as f64;
    let xbar = minima.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = minima.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = minima.iter().map(|p| (p.0 - xbar).powi(2)).sum();
    let sxy: f64 = minima.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let mut c_lower = f64::NEG_INFINITY;
    for &(lt, mg) in &minima {
        c_lower = c_lower.max(a * lt - mg);
    }
    let mut aux = BTreeMap::new();
    aux.insert("a".to_string(), a);
    aux.insert("c_upper".to_string(), c_upper);
    aux.insert("c_lower".to_string(), c_lower);
    Ok(EstimateReport::new(
        "cusp_bullets",
        0.0,
        c_metric,
        aux,
        String::new(),
    ))
}

/// Closed-form model metric density at the nodes (conical or cusp).
fn model_metric_nodal(traj: &Trajectory) -> Result<Vec<f64>> {
    let geom = &traj.config.geom;
    let mesh = &traj.config.mesh;
    match traj.config.variant {
        FlowVariant::Conical => {
            let p = &traj.config.params;
            mesh.nodes
                .iter()
                .map(|&u| geometry::model_metric_density(geom, p, u))
                .collect()
        }
        FlowVariant::Cusp => mesh
            .nodes
            .iter()
            .map(|&u| geometry::cusp_metric_density(geom, u))
            .collect(),
        _ => Err(CoreError::Mismatch(
            "trace comparison needs a conical or cusp trajectory".into(),
        )),
    }
}

/// The standard validator battery for a conical trajectory.
pub fn conical_battery(traj: &Trajectory, sigma: f64, delta: f64) -> Result<Vec<EstimateReport>> {
    Ok(vec![
        check_upper_bound(traj)?,
        check_lower_bound_short(traj)?,
        check_phidot_upper(traj, delta)?,
        check_phidot_lower(traj, sigma)?,
        check_trace_sandwich(traj)?,
        check_global_lower(traj)?,
    ])
}

/// Literal max/min of the fitted constants across a sweep. For an
/// all-positive family this is the spec'd growth ratio; families bounded
/// above by zero (slack inequalities) give a quotient below one, which
/// correctly reads as uniform.
pub fn uniformity_ratio(values: &[f64]) -> f64 {
    let hi = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let lo = values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    hi / lo
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformityReport {
    pub name: String,
    pub per_gamma: Vec<(f64, f64)>,
    pub ratio: f64,
    pub pass: bool,
}

/// Group reports by proposition and compute the sweep ratios.
pub fn uniformity_across_gammas(reports: &[EstimateReport]) -> Vec<UniformityReport> {
    let mut names: Vec<String> = Vec::new();
    for r in reports {
        if !names.contains(&r.name) {
            names.push(r.name.clone());
        }
    }
    names
        .into_iter()
        .map(|name| {
            let per_gamma: Vec<(f64, f64)> = reports
                .iter()
                .filter(|r| r.name == name)
                .map(|r| (r.gamma, r.fitted_c))
                .collect();
            let values: Vec<f64> = per_gamma.iter().map(|p| p.1).collect();
            let ratio = uniformity_ratio(&values);
            let pass = values.iter().all(|v| v.is_finite()) && ratio <= 3.0;
            UniformityReport {
                name,
                per_gamma,
                ratio,
                pass,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{default_dt_schedule, default_output_times, FlowConfig, FlowState};
    use crate::geometry::{ConeParams, DivisorConfig, ModelGeometry};
    use crate::mesh::build_mesh;

    fn test_config(variant: FlowVariant, gamma: f64, horizon: f64) -> FlowConfig {
        let geom = ModelGeometry::new(DivisorConfig::default()).unwrap();
        let mesh = build_mesh(-28.0, 12.0, 65, 1.0).unwrap();
        let g_min = mesh
            .nodes
            .iter()
            .map(|&u| geom.g(u))
            .fold(f64::INFINITY, f64::min);
        FlowConfig {
            geom,
            params: ConeParams {
                gamma,
                epsilon: 0.0,
                horizon_t: horizon,
            },
            mesh,
            variant,
            dt_schedule: default_dt_schedule(horizon),
            output_times: default_output_times(horizon),
            newton_tol: 1e-11,
            newton_max_iter: 30,
            positivity_floor: 1e-14 * g_min,
        }
    }

    /// Build a synthetic conical trajectory with chi(t) = chi0 + shape(t)
    /// and phidot = psi + pd_shift(t) planted directly.
    fn synthetic(
        cfg: FlowConfig,
        chi0: Vec<f64>,
        times: Vec<f64>,
        chi_shape: impl Fn(f64, usize) -> f64,
        phidot_shift: impl Fn(f64, usize) -> f64,
    ) -> Trajectory {
        let fields = crate::flow::FlowFields::build(&cfg).unwrap();
        let n = chi0.len();
        let mut states = vec![FlowState {
            t: 0.0,
            chi: chi0.clone(),
            phidot: vec![0.0; n],
            metric_density: vec![1.0; n],
        }];
        for &t in &times {
            let chi: Vec<f64> = (0..n).map(|i| chi0[i] + chi_shape(t, i)).collect();
            let phidot: Vec<f64> = (0..n).map(|i| fields.psi[i] + phidot_shift(t, i)).collect();
            states.push(FlowState {
                t,
                chi,
                phidot,
                metric_density: vec![1.0; n],
            });
        }
        Trajectory::synthetic(cfg, states).unwrap()
    }

    #[test]
    fn upper_bound_inverts_planted_constant() {
        let cfg = test_config(FlowVariant::Conical, 0.5, 1.0);
        let n = cfg.mesh.len();
        let chi0 = vec![0.3; n];
        let times = vec![0.1, 0.5, 1.0];
        // phi = sup phi0 + t psi + 3t  <=>  chi = sup chi0 + 3t
        let traj = synthetic(cfg, chi0, times, |t, _| 3.0 * t, |_, _| 0.0);
        let rep = check_upper_bound(&traj).unwrap();
        assert!((rep.fitted_c - 3.0).abs() < 1e-12);
        assert!(rep.pass);
    }

    #[test]
    fn upper_bound_is_nonpositive_when_flow_stays_below() {
        let cfg = test_config(FlowVariant::Conical, 0.5, 1.0);
        let n = cfg.mesh.len();
        let chi0 = vec![1.0; n];
        let times = vec![0.25, 0.75];
        let traj = synthetic(cfg, chi0, times, |_, _| 0.0, |_, _| 0.0);
        let rep = check_upper_bound(&traj).unwrap();
        assert!(rep.fitted_c <= 1e-12);
    }

    #[test]
    fn lower_bound_short_inverts_profiles() {
        let cfg = test_config(FlowVariant::Conical, 0.5, 1.0);
        let n = cfg.mesh.len();
        let chi0 = vec![0.2; n];
        let times = vec![0.05, 0.2, 0.6, 1.0];
        // chi = chi0 + (t log t - t): the log-form defect vanishes
        let traj = synthetic(
            cfg.clone(),
            chi0.clone(),
            times.clone(),
            |t, _| t * t.ln() - t,
            |_, _| 0.0,
        );
        let rep = check_lower_bound_short(&traj).unwrap();
        assert!(rep.aux["c_log"].abs() < 1e-10, "c_log {}", rep.aux["c_log"]);
        assert!(rep.fitted_c.is_finite());

        // chi = chi0: the log form bound is at most 1 on (0, 1]
        let traj2 = synthetic(cfg, chi0, times, |_, _| 0.0, |_, _| 0.0);
        let rep2 = check_lower_bound_short(&traj2).unwrap();
        assert!(rep2.aux["c_log"] <= 1.0 + 1e-12);
        assert!((rep2.fitted_c - 0.0).abs() < 1e-12);
    }

    #[test]
    fn phidot_upper_smoke_defect_is_minus_one() {
        let cfg = test_config(FlowVariant::Smoke, 0.0, 1.0);
        let n = cfg.mesh.len();
        let traj = synthetic(
            cfg,
            vec![0.0; n],
            vec![0.2, 0.6, 1.0],
            |_, _| 0.0,
            |_, _| 0.0,
        );
        let rep = check_phidot_upper(&traj, 0.1).unwrap();
        assert!((rep.aux["mean_value_defect"] + 1.0).abs() < 1e-12);
        // smoke has psi = 0 and phidot = 0, so the model form fits 0
        assert!(rep.fitted_c.abs() < 1e-12);
    }

    #[test]
    fn phidot_upper_model_form_inverts() {
        let cfg = test_config(FlowVariant::Conical, 0.5, 1.0);
        let n = cfg.mesh.len();
        let traj = synthetic(
            cfg,
            vec![0.0; n],
            vec![0.2, 0.6, 1.0],
            |_, _| 0.0,
            |_, _| 0.0, // phidot = psi exactly
        );
        let rep = check_phidot_upper(&traj, 0.1).unwrap();
        assert!(rep.fitted_c.abs() < 1e-12);
    }

    #[test]
    fn phidot_lower_inverts_log_profile() {
        let cfg = test_config(FlowVariant::Conical, 0.5, 1.0);
        let n = cfg.mesh.len();
        let sigma = 0.05;
        let chi0: Vec<f64> = (0..n).map(|i| 0.1 * (i as f64 / n as f64)).collect();
        let osc = 0.1 * ((n - 1) as f64 / n as f64);
        // phidot = psi + (1/sigma) log t
        let traj = synthetic(
            cfg.clone(),
            chi0.clone(),
            vec![0.05, 0.2, 0.7, 1.0],
            |_, _| 0.0,
            move |t, _| t.ln() / sigma,
        );
        let rep = check_phidot_lower(&traj, sigma).unwrap();
        assert!(
            (rep.fitted_c - 2.0 * osc).abs() < 1e-10,
            "fitted {} vs 2 osc {}",
            rep.fitted_c,
            2.0 * osc
        );

        // phidot = psi: the horizon-weighted form fits 0
        let traj2 = synthetic(cfg, chi0, vec![0.05, 0.2, 0.7, 1.0], |_, _| 0.0, |_, _| 0.0);
        let rep2 = check_phidot_lower(&traj2, sigma).unwrap();
        assert!(rep2.aux["c_horizon_weighted"].abs() < 1e-12);
    }

    #[test]
    fn trace_sandwich_inverts() {
        let cfg = test_config(FlowVariant::Conical, 0.5, 1.0);
        let mesh = cfg.mesh.clone();
        let geom = cfg.geom;
        let p = cfg.params;
        let model: Vec<f64> = mesh
            .nodes
            .iter()
            .map(|&u| geometry::model_metric_density(&geom, &p, u).unwrap())
            .collect();
        let n = mesh.len();
        let fields = crate::flow::FlowFields::build(&cfg).unwrap();
        let mut states = vec![FlowState {
            t: 0.0,
            chi: vec![0.0; n],
            phidot: vec![0.0; n],
            metric_density: model.clone(),
        }];
        // metric = model at t = 0.4, metric = e^{1/t^2} * model at t = 0.8
        states.push(FlowState {
            t: 0.4,
            chi: vec![0.0; n],
            phidot: fields.psi.clone(),
            metric_density: model.clone(),
        });
        let scaled: Vec<f64> = model
            .iter()
            .map(|&m| m * (1.0f64 / (0.8 * 0.8)).exp())
            .collect();
        states.push(FlowState {
            t: 0.8,
            chi: vec![0.0; n],
            phidot: fields.psi.clone(),
            metric_density: scaled,
        });
        let traj = Trajectory::synthetic(cfg, states).unwrap();
        let rep = check_trace_sandwich(&traj).unwrap();
        assert!((rep.fitted_c - 1.0).abs() < 1e-10, "fitted {}", rep.fitted_c);
    }

    #[test]
    fn global_lower_inverts() {
        let cfg = test_config(FlowVariant::Conical, 0.5, 1.0);
        let n = cfg.mesh.len();
        // phi = t psi  =>  chi = 0  =>  C = 0
        let traj = synthetic(cfg.clone(), vec![0.0; n], vec![0.5, 1.0], |_, _| 0.0, |_, _| 0.0);
        assert!(check_global_lower(&traj).unwrap().fitted_c.abs() < 1e-12);
        // phi = t psi - 7  =>  C = 7
        let traj2 = synthetic(cfg, vec![-7.0; n], vec![0.5, 1.0], |_, _| 0.0, |_, _| 0.0);
        assert!((check_global_lower(&traj2).unwrap().fitted_c - 7.0).abs() < 1e-12);
    }

    #[test]
    fn cusp_bullets_invert() {
        let cfg = test_config(FlowVariant::Cusp, 0.0, 1.0);
        let mesh = cfg.mesh.clone();
        let geom = cfg.geom;
        let model: Vec<f64> = mesh
            .nodes
            .iter()
            .map(|&u| geometry::cusp_metric_density(&geom, u).unwrap())
            .collect();
        let n = mesh.len();
        let fields = crate::flow::FlowFields::build(&cfg).unwrap();
        let mk = |t: f64, shift: f64| FlowState {
            t,
            chi: vec![0.0; n],
            phidot: fields.psi.iter().map(|&p| p + shift).collect(),
            metric_density: model.clone(),
        };
        // phidot = psi_o: all fits vanish, slope a = 0
        let states = vec![mk(0.0, 0.0), mk(0.3, 0.0), mk(0.7, 0.0)];
        let traj = Trajectory::synthetic(cfg.clone(), states).unwrap();
        let rep = check_cusp_bullets(&traj).unwrap();
        assert!(rep.fitted_c.abs() < 1e-12);
        assert!(rep.aux["a"].abs() < 1e-12);
        assert!(rep.aux["c_upper"].abs() < 1e-12);
        assert!(rep.aux["c_lower"].abs() < 1e-12);

        // phidot = psi_o + 1/t: the upper form fits exactly 1
        let states2 = vec![mk(0.0, 0.0), mk(0.25, 4.0), mk(0.5, 2.0), mk(1.0, 1.0)];
        let traj2 = Trajectory::synthetic(cfg, states2).unwrap();
        let rep2 = check_cusp_bullets(&traj2).unwrap();
        assert!((rep2.aux["c_upper"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cusp_bullets_reject_conical_input() {
        let cfg = test_config(FlowVariant::Conical, 0.5, 1.0);
        let n = cfg.mesh.len();
        let traj = synthetic(cfg, vec![0.0; n], vec![0.5], |_, _| 0.0, |_, _| 0.0);
        assert!(check_cusp_bullets(&traj).is_err());
    }

    #[test]
    fn validators_are_deterministic_rescans() {
        let cfg = test_config(FlowVariant::Conical, 0.25, 1.0);
        let n = cfg.mesh.len();
        let chi0: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin() * 0.2).collect();
        let traj = synthetic(
            cfg,
            chi0,
            vec![0.1, 0.4, 1.0],
            |t, i| -0.5 * t + 0.01 * (i as f64).cos(),
            |t, i| t.ln() * 0.3 + 0.02 * (i as f64).sin(),
        );
        let a = check_upper_bound(&traj).unwrap().fitted_c;
        let b = check_upper_bound(&traj).unwrap().fitted_c;
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn empty_trajectory_is_an_error() {
        let cfg = test_config(FlowVariant::Conical, 0.5, 1.0);
        let traj = Trajectory::synthetic(cfg, Vec::new()).unwrap();
        assert!(matches!(
            check_upper_bound(&traj),
            Err(CoreError::EmptyTrajectory)
        ));
    }

    #[test]
    fn uniformity_ratio_semantics() {
        assert!((uniformity_ratio(&[1.0, 2.0, 3.0]) - 3.0).abs() < 1e-15);
        // all-negative families read as uniformly bounded (quotient < 1)
        assert!(uniformity_ratio(&[-1.4, -2.0]) < 1.0);
    }
}
