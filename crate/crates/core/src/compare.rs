//! Comparison-principle oracles: the auxiliary elliptic Monge-Ampere solves,
//! the sub-solution construction they feed, the uniqueness contraction test,
//! and the ordering against the regularized flow.
//!
//! On the truncated grid the divisor lies outside the domain, so plain nodal
//! maxima are used throughout; no barrier terms are needed.

use crate::error::{CoreError, Result};
use crate::flow::{FlowVariant, Trajectory};
use crate::geometry::{self, ModelGeometry};
use crate::linalg::solve_tridiagonal;
use crate::mesh::{second_difference, second_difference_coeffs, Mesh};
use serde::Serialize;

/// Bounded-unknown shift for the elliptic solve: the solution is written as
/// u = kappa * psi + v with v solved under Neumann ends.
#[derive(Debug, Clone, Copy)]
pub enum PsiShift {
    Conical { gamma: f64, kappa: f64 },
    Cusp,
}

/// Discrete analogue of (omega + i ddbar u)^n = e^{u + source} omega^n / |s|^{2(1-gamma)}.
#[derive(Debug, Clone)]
pub struct EllipticProblem {
    /// Additive term in the exponent (for the sub-solution feed this is
    /// -h - 2*l*phi(t0)).
    pub source_field: Vec<f64>,
    /// Exponent gamma of the divisor weight |s|^{-2(1-gamma)}.
    pub gamma: f64,
    pub shift: PsiShift,
}

/// Damped Newton solve of
///   g + D2(kappa psi + v) = exp(v + kappa psi + source - (1-gamma) ell) * g
/// in the bounded unknown v; returns the full field u = kappa psi + v.
/// The discrete second difference of the nodal psi is used, matching the
/// flow's discretization, so the sub-solution algebra below is exact.
pub fn solve_elliptic(
    problem: &EllipticProblem,
    geom: &ModelGeometry,
    mesh: &Mesh,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = mesh.len();
    if problem.source_field.len() != n {
        return Err(CoreError::LengthMismatch {
            got: problem.source_field.len(),
            want: n,
        });
    }
    let g = mesh.sample(|u| geom.g(u));
    let ell = mesh.sample(|u| geom.ell(u));
    let psi: Vec<f64> = match problem.shift {
        PsiShift::Conical { gamma, kappa } => ell
            .iter()
            .map(|&l| kappa * geometry::psi_gamma_from_ell(gamma, l))
            .collect(),
        PsiShift::Cusp => ell.iter().map(|&l| geometry::psi_cusp_from_ell(l)).collect(),
    };
    let d2psi = second_difference(mesh, &psi)?;

    // weight in the exponent: psi + source - (1-gamma) ell
    let expo_base: Vec<f64> = (0..n)
        .map(|i| psi[i] + problem.source_field[i] - (1.0 - problem.gamma) * ell[i])
        .collect();

    let metric_of = |v: &[f64]| -> Result<Vec<f64>> {
        let d2v = second_difference(mesh, v)?;
        Ok((0..n).map(|i| g[i] + d2psi[i] + d2v[i]).collect())
    };
    let rhs_of = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| (v[i] + expo_base[i]).exp() * g[i])
            .collect()
    };

    let mut v = vec![0.0; n];
    let metric0 = metric_of(&v)?;
    let mut w = rhs_of(&v);
    let mut res: Vec<f64> = (0..n).map(|i| metric0[i] - w[i]).collect();
    let mut res_norm = res.iter().fold(0.0f64, |a, &r| a.max(r.abs()));

    for iter in 0..=max_iter {
        if res_norm <= tol {
            return Ok((0..n).map(|i| psi[i] + v[i]).collect());
        }
        if iter == max_iter {
            break;
        }
        // J = D2 - diag(w): strictly diagonally dominant after negation
        let mut sub = vec![0.0; n - 1];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n - 1];
        for i in 0..n {
            let (a, b, c) = second_difference_coeffs(mesh, i);
            diag[i] = b - w[i];
            if i > 0 {
                sub[i - 1] = a;
            }
            if i < n - 1 {
                sup[i] = c;
            }
        }
        let neg_res: Vec<f64> = res.iter().map(|r| -r).collect();
        let delta = solve_tridiagonal(&sub, &diag, &sup, &neg_res);

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = v.iter().zip(&delta).map(|(&x, &d)| x + step * d).collect();
            if let Ok(trial_metric) = metric_of(&trial) {
                if trial_metric.iter().all(|&m| m > 0.0) {
                    let trial_w = rhs_of(&trial);
                    let trial_res: Vec<f64> =
                        (0..n).map(|i| trial_metric[i] - trial_w[i]).collect();
                    let trial_norm = trial_res.iter().fold(0.0f64, |a, &r| a.max(r.abs()));
                    if trial_norm <= (1.0 - 0.25 * step) * res_norm || trial_norm <= tol {
                        v = trial;
                        w = trial_w;
                        res = trial_res;
                        res_norm = trial_norm;
                        accepted = true;
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(CoreError::NewtonDiverged {
                t: 0.0,
                iters: iter,
                residual: res_norm,
            });
        }
    }
    Err(CoreError::NewtonDiverged {
        t: 0.0,
        iters: max_iter,
        residual: res_norm,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SubsolutionReport {
    pub t0: f64,
    pub l: f64,
    /// max over checked times and nodes of M(t) - phi(t + t0).
    pub max_violation: f64,
    /// max |M(0) - phi(t0)|; an algebraic identity, zero to rounding.
    pub anchor_gap: f64,
    pub times_checked: usize,
    pub pass: bool,
    /// (t, u, lhs, rhs) rows for nodes violating the inequality.
    pub violations: Vec<(f64, f64, f64, f64)>,
}

/// Build the curve M(t) = (1-2lt) phi(t0) + t u_elliptic + (t log t - t) and
/// check it stays below the trajectory, M(t) <= phi(t + t0).
pub fn build_subsolution(
    traj: &Trajectory,
    t0: f64,
    l: f64,
    tol: f64,
) -> Result<SubsolutionReport> {
    let gamma = match traj.config.variant {
        FlowVariant::Conical => traj.config.params.gamma,
        _ => {
            return Err(CoreError::Mismatch(
                "build_subsolution needs a conical trajectory".into(),
            ))
        }
    };
    if !(l >= 1.0) {
        return Err(CoreError::domain("build_subsolution", "l must be >= 1"));
    }
    let geom = &traj.config.geom;
    let rate = geom.class_shrink_rate(gamma);
    // admissibility: (2l-1) omega + nu_gamma >= omega/2 and
    // (2l-1) omega + (1+2lt0) nu_gamma >= 0
    if (2.0 * l - 1.0) + rate < 0.5 {
        return Err(CoreError::domain(
            "build_subsolution",
            format!("l = {l} below admissibility: (2l-1) + nu rate = {}", 2.0 * l - 1.0 + rate),
        ));
    }
    if (2.0 * l - 1.0) + (1.0 + 2.0 * l * t0) * rate < 0.0 {
        return Err(CoreError::domain(
            "build_subsolution",
            "l, t0 violate background positivity of the sub-solution",
        ));
    }
    let state0 = traj
        .state_at(t0)
        .ok_or_else(|| CoreError::Mismatch(format!("no trajectory output at t0 = {t0}")))?;
    let k0 = traj.states.iter().position(|s| std::ptr::eq(s, state0)).unwrap();
    let phi_t0 = traj.phi(k0);

    // elliptic feed: source = -h - 2 l phi(t0), weight |s|^{-2(1-gamma)},
    // bounded unknown u - (1 + 2 l t0) psi_gamma
    let problem = EllipticProblem {
        source_field: phi_t0.iter().map(|&p| -2.0 * l * p).collect(),
        gamma,
        shift: PsiShift::Conical {
            gamma,
            kappa: 1.0 + 2.0 * l * t0,
        },
    };
    let u_ell = solve_elliptic(&problem, geom, &traj.config.mesh, 1e-10, 200)?;

    let span = 0.5 / l - t0;
    let mut max_violation = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    let mut times_checked = 0;
    let mut anchor_gap = 0.0f64;
    for s in traj.states.iter().skip(k0) {
        let t = s.t - t0;
        if t > span + 1e-12 {
            break;
        }
        let profile = if t > 0.0 { t * t.ln() - t } else { 0.0 };
        let phi_t = traj.phi(traj.states.iter().position(|x| std::ptr::eq(x, s)).unwrap());
        times_checked += 1;
        for i in 0..phi_t.len() {
            let m = (1.0 - 2.0 * l * t) * phi_t0[i] + t * u_ell[i] + profile;
            if t == 0.0 {
                anchor_gap = anchor_gap.max((m - phi_t0[i]).abs());
            }
            let gap = m - phi_t[i];
            max_violation = max_violation.max(gap);
            if gap > tol {
                violations.push((s.t, traj.config.mesh.nodes[i], m, phi_t[i]));
            }
        }
    }
    Ok(SubsolutionReport {
        t0,
        l,
        max_violation,
        anchor_gap,
        times_checked,
        pass: max_violation <= tol && times_checked >= 2,
        violations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    /// (t, max over nodes of phi_A - phi_B).
    pub curve: Vec<(f64, f64)>,
    pub initial_sup: f64,
    pub max_excess: f64,
    pub pass: bool,
}

/// Uniqueness contraction: max(phi_A(t) - phi_B(t)) <= sup(phi_A0 - phi_B0)
/// at every shared output time. Only the initial-sup bound is asserted;
/// monotonicity of the curve in t is not claimed.
pub fn contraction_test(a: &Trajectory, b: &Trajectory, tol: f64) -> Result<ContractionReport> {
    check_same_setup(a, b)?;
    let phi_a0 = a.initial_phi();
    let phi_b0 = b.initial_phi();
    let initial_sup = phi_a0
        .iter()
        .zip(&phi_b0)
        .map(|(&x, &y)| x - y)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut curve = Vec::new();
    let mut max_excess = f64::NEG_INFINITY;
    for (k, sa) in a.states.iter().enumerate().skip(1) {
        let sb = match b.state_at(sa.t) {
            Some(s) => s,
            None => continue,
        };
        let kb = b.states.iter().position(|s| std::ptr::eq(s, sb)).unwrap();
        let pa = a.phi(k);
        let pb = b.phi(kb);
        let m = pa
            .iter()
            .zip(&pb)
            .map(|(&x, &y)| x - y)
            .fold(f64::NEG_INFINITY, f64::max);
        curve.push((sa.t, m));
        max_excess = max_excess.max(m - initial_sup);
    }
    if curve.is_empty() {
        return Err(CoreError::Mismatch("no shared output times".into()));
    }
    Ok(ContractionReport {
        curve,
        initial_sup,
        max_excess,
        pass: max_excess <= tol,
    })
}

fn check_same_setup(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.config.mesh.nodes != b.config.mesh.nodes {
        return Err(CoreError::Mismatch("meshes differ".into()));
    }
    if a.config.geom != b.config.geom {
        return Err(CoreError::Mismatch("geometries differ".into()));
    }
    if a.config.variant != b.config.variant {
        return Err(CoreError::Mismatch("flow variants differ".into()));
    }
    if (a.config.params.gamma - b.config.params.gamma).abs() > 0.0 {
        return Err(CoreError::Mismatch("cone angles differ".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderingReport {
    /// (t, max over nodes of lhs - rhs); nonpositive means ordered.
    pub per_time_max: Vec<(f64, f64)>,
    pub max_violation: f64,
    pub pass: bool,
    pub violations: Vec<(f64, f64, f64, f64)>,
}

/// Ordering of the conical flow against the regularized one:
/// phi_gamma(t) + t*gamma*ell <= phi_reg(t) nodally at shared times.
pub fn ordering_vs_regularized(
    conical: &Trajectory,
    regularized: &Trajectory,
    tol: f64,
) -> Result<OrderingReport> {
    let gamma = match conical.config.variant {
        FlowVariant::Conical => conical.config.params.gamma,
        _ => {
            return Err(CoreError::Mismatch(
                "first trajectory must be conical".into(),
            ))
        }
    };
    if !matches!(regularized.config.variant, FlowVariant::Regularized { .. }) {
        return Err(CoreError::Mismatch(
            "second trajectory must be regularized".into(),
        ));
    }
    ordering_against(conical, regularized, gamma, tol)
}

/// Ordering of the conical flow against the cusp flow:
/// phi_gamma(t) + t*gamma*ell <= phi_cusp(t).
pub fn ordering_vs_cusp(
    conical: &Trajectory,
    cusp: &Trajectory,
    tol: f64,
) -> Result<OrderingReport> {
    let gamma = match conical.config.variant {
        FlowVariant::Conical => conical.config.params.gamma,
        _ => {
            return Err(CoreError::Mismatch(
                "first trajectory must be conical".into(),
            ))
        }
    };
    if !matches!(cusp.config.variant, FlowVariant::Cusp) {
        return Err(CoreError::Mismatch("second trajectory must be cusp".into()));
    }
    ordering_against(conical, cusp, gamma, tol)
}

/// Ordering of the cusp flow below a regularized flow: phi_cusp <= phi_reg.
pub fn ordering_cusp_vs_regularized(
    cusp: &Trajectory,
    regularized: &Trajectory,
    tol: f64,
) -> Result<OrderingReport> {
    if !matches!(cusp.config.variant, FlowVariant::Cusp) {
        return Err(CoreError::Mismatch("first trajectory must be cusp".into()));
    }
    if !matches!(regularized.config.variant, FlowVariant::Regularized { .. }) {
        return Err(CoreError::Mismatch(
            "second trajectory must be regularized".into(),
        ));
    }
    ordering_against(cusp, regularized, 0.0, tol)
}

fn ordering_against(
    lower: &Trajectory,
    upper: &Trajectory,
    gamma_twist: f64,
    tol: f64,
) -> Result<OrderingReport> {
    if lower.config.mesh.nodes != upper.config.mesh.nodes {
        return Err(CoreError::Mismatch("meshes differ".into()));
    }
    if lower.config.geom != upper.config.geom {
        return Err(CoreError::Mismatch("geometries differ".into()));
    }
    let ell = &lower.fields.ell;
    let mut per_time_max = Vec::new();
    let mut max_violation = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    for (k, sl) in lower.states.iter().enumerate() {
        let su = match upper.state_at(sl.t) {
            Some(s) => s,
            None => continue,
        };
        let ku = upper.states.iter().position(|s| std::ptr::eq(s, su)).unwrap();
        let pl = lower.phi(k);
        let pu = upper.phi(ku);
        let mut m = f64::NEG_INFINITY;
        for i in 0..pl.len() {
            let lhs = pl[i] + sl.t * gamma_twist * ell[i];
            let gap = lhs - pu[i];
            m = m.max(gap);
            if gap > tol {
                violations.push((sl.t, lower.config.mesh.nodes[i], lhs, pu[i]));
            }
        }
        per_time_max.push((sl.t, m));
        max_violation = max_violation.max(m);
    }
    if per_time_max.is_empty() {
        return Err(CoreError::Mismatch("no shared output times".into()));
    }
    Ok(OrderingReport {
        per_time_max,
        max_violation,
        pass: max_violation <= tol,
        violations,
    })
}
