//! Method of manufactured solutions: inject the forcing that makes a chosen
//! closed-form field solve the flow, then measure the scheme's temporal and
//! spatial convergence orders against it.
//!
//! The forcing is computed from the exact continuum operator (closed-form
//! second derivatives, chain-rule psi''), so the discrete runs carry their
//! full spatial truncation error and the refinement ladders expose the
//! genuine orders: one in time (backward Euler), two in space (3-point
//! second difference with the cosine modes' compatible ends).

use crate::error::{CoreError, Result};
use crate::flow::{FlowConfig, FlowSolver, FlowState, FlowVariant};
use crate::geometry::{self, ConeParams, ModelGeometry};
use crate::mesh::build_mesh;
use serde::Serialize;

pub struct ManufacturedSolution {
    pub chi: Box<dyn Fn(f64, f64) -> f64 + Sync>,
    pub chi_t: Box<dyn Fn(f64, f64) -> f64 + Sync>,
    pub chi_uu: Box<dyn Fn(f64, f64) -> f64 + Sync>,
}

impl ManufacturedSolution {
    /// Constant field: zero forcing on the smoke config, zero error.
    pub fn constant(value: f64) -> ManufacturedSolution {
        ManufacturedSolution {
            chi: Box::new(move |_, _| value),
            chi_t: Box::new(|_, _| 0.0),
            chi_uu: Box::new(|_, _| 0.0),
        }
    }

    /// amp * e^{2t} * cos(k pi (u - u_min)/L): compatible with the Neumann
    /// ends (first and third u-derivatives vanish there) and genuinely
    /// curved in time so the temporal order is visible.
    pub fn cosine_mode(amp: f64, k: usize, u_min: f64, u_max: f64) -> ManufacturedSolution {
        let w = k as f64 * std::f64::consts::PI / (u_max - u_min);
        let chi = move |t: f64, u: f64| amp * (2.0 * t).exp() * (w * (u - u_min)).cos();
        ManufacturedSolution {
            chi: Box::new(chi),
            chi_t: Box::new(move |t, u| 2.0 * chi(t, u)),
            chi_uu: Box::new(move |t, u| -w * w * chi(t, u)),
        }
    }

    /// Time-linear field t*cos(u/4); useful as a smoke-level probe (its
    /// backward Euler temporal error vanishes identically).
    pub fn linear_in_time(u_scale: f64) -> ManufacturedSolution {
        ManufacturedSolution {
            chi: Box::new(move |t, u| t * (u / u_scale).cos()),
            chi_t: Box::new(move |_, u| (u / u_scale).cos()),
            chi_uu: Box::new(move |t, u| -t * (u / u_scale).cos() / (u_scale * u_scale)),
        }
    }
}

/// Base problem for an MMS study; the mesh size and step are ladder inputs.
#[derive(Debug, Clone)]
pub struct MmsBase {
    pub geom: ModelGeometry,
    pub gamma: f64,
    pub variant: FlowVariant,
    pub u_min: f64,
    pub u_max: f64,
    pub t_begin: f64,
    pub t_end: f64,
    pub newton_tol: f64,
    /// Rows dropped from each end when taking the error norm.
    pub boundary_skip: usize,
}

impl MmsBase {
    pub fn smoke(u_min: f64, u_max: f64) -> Result<MmsBase> {
        Ok(MmsBase {
            geom: ModelGeometry::new(Default::default())?,
            gamma: 0.0,
            variant: FlowVariant::Smoke,
            u_min,
            u_max,
            t_begin: 0.0,
            t_end: 0.5,
            newton_tol: 1e-12,
            boundary_skip: 2,
        })
    }

    pub fn conical(gamma: f64, u_min: f64, u_max: f64) -> Result<MmsBase> {
        Ok(MmsBase {
            geom: ModelGeometry::new(Default::default())?,
            gamma,
            variant: FlowVariant::Conical,
            u_min,
            u_max,
            t_begin: 0.25,
            t_end: 0.75,
            newton_tol: 1e-12,
            boundary_skip: 2,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MmsReport {
    /// (dt, sup error) at fixed fine mesh.
    pub temporal: Vec<(f64, f64)>,
    /// (h_max, sup error) with dt scaled like h^2.
    pub spatial: Vec<(f64, f64)>,
    /// Least-squares slope and its standard error.
    pub temporal_order: (f64, f64),
    pub spatial_order: (f64, f64),
}

/// Run the forced flow on one (n, dt) level and return the final-time sup
/// error against the manufactured field, away from the boundary rows.
pub fn mms_level(
    base: &MmsBase,
    exact: &ManufacturedSolution,
    n: usize,
    dt: f64,
) -> Result<f64> {
    let mesh = build_mesh(base.u_min, base.u_max, n, 1.0)?;
    let g_min = mesh
        .nodes
        .iter()
        .map(|&u| base.geom.g(u))
        .fold(f64::INFINITY, f64::min);
    let cfg = FlowConfig {
        geom: base.geom,
        params: ConeParams {
            gamma: base.gamma,
            epsilon: 0.0,
            horizon_t: base.t_end,
        },
        mesh,
        variant: base.variant,
        dt_schedule: vec![(base.t_end.max(1.0), dt)],
        output_times: vec![base.t_end],
        newton_tol: base.newton_tol,
        newton_max_iter: 50,
        positivity_floor: 1e-14 * g_min,
    };
    let solver = FlowSolver::new(cfg)?;

    // closed-form source and psi for the exact operator
    let geom = base.geom;
    let gamma = base.gamma;
    let variant = base.variant;
    let class_rate = match variant {
        FlowVariant::Smoke => 0.0,
        FlowVariant::Conical => geom.class_shrink_rate(gamma),
        FlowVariant::Cusp | FlowVariant::Regularized { .. } => geom.class_shrink_rate(0.0),
    };
    let source_psi = move |u: f64| -> (f64, f64, f64) {
        // (source, psi, psi'' closed form)
        match variant {
            FlowVariant::Smoke => (0.0, 0.0, 0.0),
            FlowVariant::Conical => {
                let ell = geom.ell(u);
                (
                    (1.0 - gamma) * ell,
                    geometry::psi_gamma_from_ell(gamma, ell),
                    geometry::psi_gamma_dd_u(&geom, gamma, u),
                )
            }
            FlowVariant::Cusp => {
                let ell = geom.ell(u);
                (
                    ell,
                    geometry::psi_cusp_from_ell(ell),
                    geometry::psi_cusp_dd_u(&geom, u),
                )
            }
            FlowVariant::Regularized { epsilon, .. } => {
                let ell = geom.ell(u);
                ((epsilon * epsilon + ell.exp()).ln(), 0.0, 0.0)
            }
        }
    };
    let chi_t = &exact.chi_t;
    let chi_uu = &exact.chi_uu;
    let forcing = move |t: f64, u: f64| -> f64 {
        let (source, psi, psi_dd) = source_psi(u);
        let g = geom.g(u);
        let metric = (1.0 + t * class_rate) * g + t * psi_dd + chi_uu(t, u);
        chi_t(t, u) - ((metric / g).ln() + source - psi)
    };

    // integrate from t_begin with fixed dt
    let nodes = solver.cfg.mesh.nodes.clone();
    let chi0: Vec<f64> = nodes.iter().map(|&u| (exact.chi)(base.t_begin, u)).collect();
    let metric0 = solver.metric_density(base.t_begin, &chi0).map_err(|e| {
        CoreError::Other(format!("manufactured field infeasible at t_begin: {e}"))
    })?;
    let phidot0 = vec![0.0; nodes.len()];
    let mut state = FlowState {
        t: base.t_begin,
        chi: chi0,
        phidot: phidot0,
        metric_density: metric0,
    };
    let span = base.t_end - base.t_begin;
    let steps = (span / dt).round().max(1.0) as usize;
    let dt_exact = span / steps as f64;
    for _ in 0..steps {
        let (next, _) = solver.step_forced(&state, dt_exact, Some(&forcing))?;
        state = next;
    }

    let skip = base.boundary_skip.min(nodes.len() / 4);
    let mut err = 0.0f64;
    for i in skip..nodes.len() - skip {
        let want = (exact.chi)(base.t_end, nodes[i]);
        err = err.max((state.chi[i] - want).abs());
    }
    Ok(err)
}

/// Full refinement study: a dt ladder on a fixed fine mesh and an h ladder
/// with dt scaled like h^2.
pub fn mms_run(
    base: &MmsBase,
    exact: &ManufacturedSolution,
    temporal_dts: &[f64],
    temporal_n: usize,
    spatial_ns: &[usize],
    spatial_dt0: f64,
) -> Result<MmsReport> {
    let mut temporal = Vec::new();
    for &dt in temporal_dts {
        temporal.push((dt, mms_level(base, exact, temporal_n, dt)?));
    }
    let mut spatial = Vec::new();
    let h0 = (base.u_max - base.u_min) / (spatial_ns[0] - 1) as f64;
    for &n in spatial_ns {
        let h = (base.u_max - base.u_min) / (n - 1) as f64;
        let dt = spatial_dt0 * (h / h0).powi(2);
        spatial.push((h, mms_level(base, exact, n, dt)?));
    }
    let temporal_order = log_log_slope(&temporal);
    let spatial_order = log_log_slope(&spatial);
    Ok(MmsReport {
        temporal,
        spatial,
        temporal_order,
        spatial_order,
    })
}

/// Least-squares slope of log(err) against log(x) with its standard error.
pub fn log_log_slope(points: &[(f64, f64)]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(x, e)| x > 0.0 && e > 0.0)
        .map(|&(x, e)| (x.ln(), e.ln()))
        .collect();
    let m = pts.len();
    if m < 2 {
        return (f64::NAN, f64::NAN);
    }
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / m as f64;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xbar).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let slope = sxy / sxx;
    if m == 2 {
        return (slope, 0.0);
    }
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - ybar - slope * (p.0 - xbar)).powi(2))
        .sum();
    let band = (ss_res / (m - 2) as f64 / sxx).sqrt();
    (slope, band)
}
