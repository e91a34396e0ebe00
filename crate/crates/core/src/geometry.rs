//! Closed-form radial evaluation of every background quantity on the
//! rotationally symmetric model surface.
//!
//! Convention: every (1,1)-density is taken with respect to the reference
//! area form `beta = i dz^dzbar / |z|^2` in the radial coordinate
//! `u = log|z|^2`. For an S^1-invariant potential `f(u)` the complex Hessian
//! `i ddbar f` then has density `f''(u)`, and the round background
//! `g(u) = e^u/(1+e^u)^2` has constant curvature 2 under
//! `K = -(log w)''/w`. That calibration pins the normalization; see the
//! curvature tests.
//!
//! The divisor is the point `u = -inf`. Its section norm is
//! `r(u) = |s|^2(u) = e^{ell(u)}` with `ell(u) - u -> log(lambda)` as
//! `u -> -inf`, where `lambda < delta_cap` is the Hermitian rescale factor
//! keeping `sup |s|^2` small.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivisorKind {
    /// One smooth divisor point at u = -inf (degree-1 section).
    OnePoint,
    /// Divisor points at u = -inf and u = +inf (degree-2 section).
    /// Treated as an extension of the one-point model.
    TwoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivisorConfig {
    pub kind: DivisorKind,
    /// Coefficient of the smooth twist eta = twist_c * omega.
    pub twist_c: f64,
    /// Hermitian rescale: sup |s|^2 = rescale_lambda.
    pub rescale_lambda: f64,
    /// Cap delta on the section norm; requires rescale_lambda < delta_cap.
    pub delta_cap: f64,
}

impl Default for DivisorConfig {
    fn default() -> Self {
        DivisorConfig {
            kind: DivisorKind::OnePoint,
            twist_c: 1.0,
            rescale_lambda: 0.005,
            delta_cap: 0.01,
        }
    }
}

impl DivisorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rescale_lambda > 0.0 && self.rescale_lambda < 1.0) {
            return Err(CoreError::config(
                "geometry.rescale_lambda",
                format!("must lie in (0,1), got {}", self.rescale_lambda),
            ));
        }
        if !(self.delta_cap > 0.0 && self.delta_cap < 1.0) {
            return Err(CoreError::config(
                "geometry.delta_cap",
                format!("must lie in (0,1), got {}", self.delta_cap),
            ));
        }
        if !(self.rescale_lambda < self.delta_cap) {
            return Err(CoreError::config(
                "geometry.rescale_lambda",
                format!(
                    "rescale_lambda = {} must be < delta_cap = {}",
                    self.rescale_lambda, self.delta_cap
                ),
            ));
        }
        if !self.twist_c.is_finite() {
            return Err(CoreError::config("geometry.twist_c", "must be finite"));
        }
        Ok(())
    }
}

/// Cone-angle and horizon parameters for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeParams {
    /// Cone angle parameter in [0,1]; 0 selects the cusp path.
    pub gamma: f64,
    /// Regularization parameter of the smoothed flow; 0 disables it.
    pub epsilon: f64,
    /// Run horizon; must stay below the class-positivity time.
    pub horizon_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelGeometry {
    pub divisor: DivisorConfig,
}

impl ModelGeometry {
    pub fn new(divisor: DivisorConfig) -> Result<Self> {
        divisor.validate()?;
        Ok(ModelGeometry { divisor })
    }

    /// Density of the round background form: g(u) = e^u/(1+e^u)^2.
    pub fn g(&self, u: f64) -> f64 {
        let c = (0.5 * u).cosh();
        0.25 / (c * c)
    }

    /// ell(u) = log |s|^2(u).
    pub fn ell(&self, u: f64) -> f64 {
        let lam = self.divisor.rescale_lambda;
        match self.divisor.kind {
            DivisorKind::OnePoint => lam.ln() + u - softplus(u),
            DivisorKind::TwoPoint => (4.0 * lam).ln() + u - 2.0 * softplus(u),
        }
    }

    pub fn ell_d1(&self, u: f64) -> f64 {
        let s = sigmoid(u);
        match self.divisor.kind {
            DivisorKind::OnePoint => 1.0 - s,
            DivisorKind::TwoPoint => 1.0 - 2.0 * s,
        }
    }

    pub fn ell_d2(&self, u: f64) -> f64 {
        match self.divisor.kind {
            DivisorKind::OnePoint => -self.g(u),
            DivisorKind::TwoPoint => -2.0 * self.g(u),
        }
    }

    /// Section norm squared r(u) = |s|^2(u), always in (0, rescale_lambda].
    pub fn section_norm_sq(&self, u: f64) -> f64 {
        self.ell(u).exp()
    }

    /// Curvature density of the Hermitian metric on the divisor bundle.
    pub fn theta_density(&self, u: f64) -> f64 {
        -self.ell_d2(u)
    }

    /// Density of nu_gamma = -Ric(Omega) + (1-gamma)*theta + eta with the
    /// explicit choice Omega = omega (so h = 0 and Ric has density 2g).
    pub fn nu_gamma_density(&self, u: f64, gamma: f64) -> f64 {
        self.class_shrink_rate(gamma) * self.g(u)
    }

    /// h from Omega = e^{-h} omega^n; identically zero for Omega = omega.
    pub fn h_density(&self, _u: f64) -> f64 {
        0.0
    }

    /// d/dt of the class factor: the background density is
    /// (1 + t * class_shrink_rate) * g.
    pub fn class_shrink_rate(&self, gamma: f64) -> f64 {
        let c = self.divisor.twist_c;
        match self.divisor.kind {
            DivisorKind::OnePoint => c - 1.0 - gamma,
            DivisorKind::TwoPoint => c - 2.0 * gamma,
        }
    }

    pub fn class_factor(&self, gamma: f64, t: f64) -> f64 {
        1.0 + t * self.class_shrink_rate(gamma)
    }
}

fn softplus(u: f64) -> f64 {
    if u > 35.0 {
        u + (-u).exp()
    } else if u < -35.0 {
        u.exp()
    } else {
        u.exp().ln_1p()
    }
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Conical model potential psi_gamma(r) = -2 log((1 - r^gamma)/gamma).
pub fn psi_gamma(gamma: f64, r: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(CoreError::domain(
            "psi_gamma",
            format!("gamma must lie in (0,1], got {gamma}"),
        ));
    }
    if !(r >= 0.0 && r < 1.0) {
        return Err(CoreError::domain(
            "psi_gamma",
            format!("section norm must lie in [0,1), got {r}"),
        ));
    }
    if r == 0.0 {
        return Ok(2.0 * gamma.ln());
    }
    Ok(psi_gamma_from_ell(gamma, r.ln()))
}

/// psi_gamma evaluated from ell = log r; stable for tiny gamma via expm1.
pub fn psi_gamma_from_ell(gamma: f64, ell: f64) -> f64 {
    let q = gamma * ell;
    // 1 - r^gamma = -expm1(q), q < 0
    -2.0 * ((-f64::exp_m1(q)).ln() - gamma.ln())
}

/// d psi_gamma / d ell.
pub fn psi_gamma_d1_ell(gamma: f64, ell: f64) -> f64 {
    let q = gamma * ell;
    2.0 * gamma / f64::exp_m1(-q)
}

/// d^2 psi_gamma / d ell^2.
pub fn psi_gamma_d2_ell(gamma: f64, ell: f64) -> f64 {
    let q = gamma * ell;
    let em = f64::exp_m1(q); // e^q - 1, negative
    2.0 * gamma * gamma * q.exp() / (em * em)
}

/// Cusp potential psi_o(r) = -log log^2 r.
pub fn psi_cusp(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(CoreError::domain(
            "psi_cusp",
            format!("section norm must lie in (0,1), got {r}"),
        ));
    }
    Ok(psi_cusp_from_ell(r.ln()))
}

pub fn psi_cusp_from_ell(ell: f64) -> f64 {
    -2.0 * (-ell).ln()
}

pub fn psi_cusp_d1_ell(ell: f64) -> f64 {
    -2.0 / ell
}

pub fn psi_cusp_d2_ell(ell: f64) -> f64 {
    2.0 / (ell * ell)
}

/// Second u-derivative of psi_gamma(r(u)) by the closed-form chain rule.
pub fn psi_gamma_dd_u(geom: &ModelGeometry, gamma: f64, u: f64) -> f64 {
    let ell = geom.ell(u);
    let l1 = geom.ell_d1(u);
    let l2 = geom.ell_d2(u);
    psi_gamma_d2_ell(gamma, ell) * l1 * l1 + psi_gamma_d1_ell(gamma, ell) * l2
}

/// Second u-derivative of psi_o(r(u)) by the closed-form chain rule.
pub fn psi_cusp_dd_u(geom: &ModelGeometry, u: f64) -> f64 {
    let ell = geom.ell(u);
    let l1 = geom.ell_d1(u);
    let l2 = geom.ell_d2(u);
    psi_cusp_d2_ell(ell) * l1 * l1 + psi_cusp_d1_ell(ell) * l2
}

/// psi_gamma as a function of the radial coordinate.
pub fn psi_gamma_u(geom: &ModelGeometry, gamma: f64, u: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(CoreError::domain(
            "psi_gamma",
            format!("gamma must lie in (0,1], got {gamma}"),
        ));
    }
    Ok(psi_gamma_from_ell(gamma, geom.ell(u)))
}

pub fn psi_cusp_u(geom: &ModelGeometry, u: f64) -> f64 {
    psi_cusp_from_ell(geom.ell(u))
}

/// Density of the time-affine background omega_{gamma t} = omega + t nu_gamma.
pub fn background_density(
    geom: &ModelGeometry,
    params: &ConeParams,
    t: f64,
    u: f64,
) -> Result<f64> {
    if !(t >= 0.0 && t <= params.horizon_t) {
        return Err(CoreError::domain(
            "background_density",
            format!("t = {t} outside [0, {}]", params.horizon_t),
        ));
    }
    let density = geom.class_factor(params.gamma, t) * geom.g(u);
    if !(density > 0.0) {
        return Err(CoreError::domain(
            "background_density",
            format!(
                "class positivity violated at t = {t}: factor = {}",
                geom.class_factor(params.gamma, t)
            ),
        ));
    }
    Ok(density)
}

/// Density of the conical model metric omega_gamma = omega + i ddbar psi_gamma,
/// via the closed-form chain rule (the finite-difference cross-check is
/// `model_metric_density_fd`).
pub fn model_metric_density(geom: &ModelGeometry, params: &ConeParams, u: f64) -> Result<f64> {
    let gamma = params.gamma;
    if !(gamma > 0.0) {
        return Err(CoreError::domain(
            "model_metric_density",
            "gamma must be positive; the cusp path uses psi_cusp",
        ));
    }
    let density = geom.g(u) + psi_gamma_dd_u(geom, gamma, u);
    if !(density > 0.0) {
        return Err(CoreError::domain(
            "model_metric_density",
            format!("nonpositive density {density} at u = {u}; delta cap too large"),
        ));
    }
    Ok(density)
}

/// Centered finite-difference cross check of `model_metric_density`.
pub fn model_metric_density_fd(
    geom: &ModelGeometry,
    params: &ConeParams,
    u: f64,
    step: f64,
) -> Result<f64> {
    let gamma = params.gamma;
    if !(gamma > 0.0) {
        return Err(CoreError::domain(
            "model_metric_density_fd",
            "gamma must be positive",
        ));
    }
    let p = |x: f64| psi_gamma_from_ell(gamma, geom.ell(x));
    let dd = (p(u + step) - 2.0 * p(u) + p(u - step)) / (step * step);
    Ok(geom.g(u) + dd)
}

/// Density of the cusp model metric omega_o = omega + i ddbar psi_o.
pub fn cusp_metric_density(geom: &ModelGeometry, u: f64) -> Result<f64> {
    let density = geom.g(u) + psi_cusp_dd_u(geom, u);
    if !(density > 0.0) {
        return Err(CoreError::domain(
            "cusp_metric_density",
            format!("nonpositive density {density} at u = {u}"),
        ));
    }
    Ok(density)
}

/// The bounded combination log(omega_gamma/omega) + (1-gamma) ell - psi_gamma.
/// Its sup over the grid is asserted to be bounded uniformly in gamma.
pub fn model_ratio_defect(geom: &ModelGeometry, params: &ConeParams, u: f64) -> Result<f64> {
    if !u.is_finite() {
        return Err(CoreError::domain(
            "model_ratio_defect",
            "section norm vanishes (u not finite)",
        ));
    }
    let r = geom.section_norm_sq(u);
    if !(r > 0.0) {
        return Err(CoreError::domain(
            "model_ratio_defect",
            format!("section norm vanishes at u = {u}"),
        ));
    }
    let gamma = params.gamma;
    let m = model_metric_density(geom, params, u)?;
    let ell = geom.ell(u);
    Ok((m / geom.g(u)).ln() + (1.0 - gamma) * ell - psi_gamma_from_ell(gamma, ell))
}

/// Gauss curvature of the metric w(u) * beta: K = -(log w)''(u) / w(u),
/// with the second derivative taken by a 5-point stencil of width `step`.
pub fn curvature_density(
    w: impl Fn(f64) -> f64,
    u: f64,
    step: f64,
    domain: (f64, f64),
) -> Result<f64> {
    if !(step > 0.0) {
        return Err(CoreError::domain("curvature_density", "step must be positive"));
    }
    if u - 2.0 * step < domain.0 || u + 2.0 * step > domain.1 {
        return Err(CoreError::domain(
            "curvature_density",
            format!("stencil at u = {u} (step {step}) leaves [{}, {}]", domain.0, domain.1),
        ));
    }
    let wc = w(u);
    if !(wc > 0.0) {
        return Err(CoreError::domain(
            "curvature_density",
            format!("metric density nonpositive at u = {u}"),
        ));
    }
    // evaluate log(w(x)/w(u)) through ln_1p so the stencil differences do not
    // carry the absolute size of log w
    let mut f = [0.0; 5];
    for (k, fk) in f.iter_mut().enumerate() {
        let x = u + (k as f64 - 2.0) * step;
        let wx = w(x);
        if !(wx > 0.0) {
            return Err(CoreError::domain(
                "curvature_density",
                format!("metric density nonpositive at u = {x}"),
            ));
        }
        *fk = ((wx - wc) / wc).ln_1p();
    }
    let dd = (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * step * step);
    Ok(-dd / wc)
}

/// Largest time with a nonnegative background class; infinite when the class
/// never degenerates.
pub fn tmax(geom: &ModelGeometry, gamma: f64) -> f64 {
    let rate = geom.class_shrink_rate(gamma);
    if rate >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / rate
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_point() -> ModelGeometry {
        ModelGeometry::new(DivisorConfig::default()).unwrap()
    }

    fn params(gamma: f64) -> ConeParams {
        ConeParams {
            gamma,
            epsilon: 0.0,
            horizon_t: 10.0,
        }
    }

    #[test]
    fn psi_gamma_pinned_values() {
        assert_eq!(psi_gamma(1.0, 0.0).unwrap(), 0.0);
        assert!(psi_gamma(0.5, 0.25).unwrap().abs() < 1e-15);
        let want = 2.0 * 0.5f64.ln();
        assert!((psi_gamma(0.5, 0.0).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn psi_gamma_tends_to_psi_cusp_for_tiny_gamma() {
        // (1 - e^{-gamma})/gamma = 1 - gamma/2 + O(gamma^2), so the gap at
        // r = e^{-1} is about gamma.
        let r = (-1.0f64).exp();
        let gap = (psi_gamma(1e-6, r).unwrap() - psi_cusp(r).unwrap()).abs();
        assert!(gap < 1e-5, "gap {gap}");
    }

    #[test]
    fn psi_gamma_domain_errors() {
        assert!(psi_gamma(0.0, 0.5).is_err());
        assert!(psi_gamma(1.5, 0.5).is_err());
        assert!(psi_gamma(0.5, 1.0).is_err());
        assert!(psi_gamma(0.5, -0.1).is_err());
    }

    #[test]
    fn psi_cusp_pinned_values() {
        assert!(psi_cusp((-1.0f64).exp()).unwrap().abs() < 1e-15);
        let r = (-std::f64::consts::E).exp();
        assert!((psi_cusp(r).unwrap() + 2.0).abs() < 1e-14);
        // direct high-precision evaluation at r = 1e-8
        let want = -2.0 * (8.0 * std::f64::consts::LN_10).ln();
        assert!((psi_cusp(1e-8).unwrap() - want).abs() < 1e-13);
        assert!(psi_cusp(0.0).is_err());
        assert!(psi_cusp(1.0).is_err());
    }

    #[test]
    fn background_density_examples() {
        let geom = one_point();
        // c = 1: factor 1 + t(1 - 1 - gamma) = 1 - t*gamma
        let d = background_density(&geom, &params(0.5), 1.0, 0.0).unwrap();
        assert!((d - 0.125).abs() < 1e-15);
        let d0 = background_density(&geom, &params(0.77), 0.0, 0.0).unwrap();
        assert!((d0 - 0.25).abs() < 1e-15);

        let mut cfg = DivisorConfig::default();
        cfg.twist_c = 2.0;
        let geom2 = ModelGeometry::new(cfg).unwrap();
        let g1 = 1.0f64.exp() / (1.0 + 1.0f64.exp()).powi(2);
        let want = (1.0 + 3.0 * 0.75) * g1;
        let got = background_density(&geom2, &params(0.25), 3.0, 1.0).unwrap();
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn background_density_detects_class_collapse() {
        let geom = one_point(); // c = 1, rate = -gamma
        let p = ConeParams {
            gamma: 0.5,
            epsilon: 0.0,
            horizon_t: 10.0,
        };
        // class factor hits zero at t = 2
        assert!(background_density(&geom, &p, 3.0, 0.0).is_err());
    }

    #[test]
    fn model_metric_matches_finite_differences() {
        // step 1e-2: large enough that the centered difference of the O(1)
        // potential sits well above its rounding floor, small enough for the
        // truncation term to stay below the tolerance
        let geom = one_point();
        for gamma in [1.0, 0.5, 0.125] {
            let p = params(gamma);
            for u in [-7.0, -3.0, -1.0, 0.0, 3.0] {
                let closed = model_metric_density(&geom, &p, u).unwrap();
                let fd = model_metric_density_fd(&geom, &p, u, 1e-2).unwrap();
                assert!(
                    (closed - fd).abs() < 1e-5 + 1e-4 * closed.abs(),
                    "gamma {gamma} u {u}: closed {closed} fd {fd}"
                );
            }
        }
    }

    #[test]
    fn model_metric_close_to_round_far_from_divisor_at_full_angle() {
        let geom = one_point();
        let p = params(1.0);
        // r(u) -> 0: the conical correction dies and both the closed form and
        // its step-1e-4 finite-difference cross-check approach g
        let u = -20.0;
        let m = model_metric_density(&geom, &p, u).unwrap();
        let fd = model_metric_density_fd(&geom, &p, u, 1e-4).unwrap();
        assert!((m / geom.g(u) - 1.0).abs() < 1e-2);
        assert!((fd / geom.g(u) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn model_metric_dominates_half_background() {
        let geom = one_point(); // delta_cap = 0.01
        for k in 1..=9 {
            let gamma = 0.5f64.powi(k);
            let p = params(gamma);
            for i in 0..=500 {
                let u = -40.0 + 50.0 * (i as f64) / 500.0;
                let m = model_metric_density(&geom, &p, u).unwrap();
                assert!(
                    m >= 0.5 * geom.g(u),
                    "gamma {gamma} u {u}: m = {m}, g/2 = {}",
                    0.5 * geom.g(u)
                );
            }
        }
    }

    #[test]
    fn model_metric_requires_positive_gamma() {
        let geom = one_point();
        assert!(model_metric_density(&geom, &params(0.0), 0.0).is_err());
    }

    #[test]
    fn ratio_defect_bounded_uniformly_in_gamma() {
        let geom = one_point();
        let sup = |gamma: f64| {
            let p = params(gamma);
            let mut s = 0.0f64;
            for i in 0..=1000 {
                let u = -40.0 + 50.0 * (i as f64) / 1000.0;
                s = s.max(model_ratio_defect(&geom, &p, u).unwrap().abs());
            }
            s
        };
        let c1 = sup(0.5);
        assert!(c1.is_finite() && c1 > 0.0);
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for k in 1..=10 {
            let s = sup(0.5f64.powi(k));
            lo = lo.min(s);
            hi = hi.max(s);
        }
        assert!(hi / c1 <= 3.0 && c1 / lo <= 3.0, "c1 {c1} range [{lo}, {hi}]");
    }

    #[test]
    fn ratio_defect_rejects_vanishing_section() {
        let geom = one_point();
        assert!(model_ratio_defect(&geom, &params(0.5), f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn round_metric_has_curvature_two() {
        // [-5, 5] carries ~99% of the round area; beyond it the density decay
        // puts the 1e-6 target below the f64 stencil floor at step 1e-3
        let geom = one_point();
        for i in 0..=100 {
            let u = -5.0 + 10.0 * i as f64 / 100.0;
            let k = curvature_density(|x| geom.g(x), u, 1e-3, (-30.0, 12.0)).unwrap();
            assert!((k - 2.0).abs() < 1e-6, "u {u}: K = {k}");
        }
    }

    #[test]
    fn flat_density_has_zero_curvature() {
        let k = curvature_density(|_| 3.7, 0.0, 1e-3, (-10.0, 10.0)).unwrap();
        assert!(k.abs() < 1e-9);
    }

    #[test]
    fn conical_metric_curvature_stays_bounded() {
        // The model metric's curvature is largest at the half angle, where
        // the tail value tends to -(1 + 1/lambda); below it the profile is
        // cusp-like with |K| of order one. The whole gamma <= 1/2 family
        // must sit under one constant.
        let geom = one_point();
        let lam = geom.divisor.rescale_lambda;
        let cap = 1.0 + 1.0 / lam;
        let mut fitted = Vec::new();
        for k in 1..=6 {
            let gamma = 0.5f64.powi(k);
            let mut max_abs = 0.0f64;
            for i in 0..=800 {
                let u = -25.0 + 35.0 * (i as f64) / 800.0;
                let kk = curvature_density(
                    |x| geom.g(x) + psi_gamma_dd_u(&geom, gamma, x),
                    u,
                    1e-3,
                    (-30.0, 12.0),
                )
                .unwrap();
                max_abs = max_abs.max(kk.abs());
            }
            assert!(
                max_abs.is_finite() && max_abs <= cap * 1.01,
                "gamma {gamma}: {max_abs} above the uniform cap {cap}"
            );
            fitted.push(max_abs);
        }
        assert!(fitted[0] > fitted[1], "half angle is the extremal case: {fitted:?}");

        // calibration of the extremal tail value at gamma = 1/2
        let k_tail = curvature_density(
            |x| geom.g(x) + psi_gamma_dd_u(&geom, 0.5, x),
            -28.0,
            1e-2,
            (-32.0, 12.0),
        )
        .unwrap();
        assert!(
            (k_tail + cap).abs() < 0.005 * cap,
            "tail curvature {k_tail} vs -(1 + 1/lambda) = {}",
            -cap
        );
    }

    #[test]
    fn curvature_stencil_domain_guard() {
        let geom = one_point();
        assert!(curvature_density(|x| geom.g(x), -9.999, 1e-2, (-10.0, 10.0)).is_err());
    }

    #[test]
    fn tmax_examples() {
        let mut cfg = DivisorConfig::default();
        cfg.twist_c = 0.0;
        let geom = ModelGeometry::new(cfg).unwrap();
        assert!((tmax(&geom, 0.0) - 1.0).abs() < 1e-15);

        let geom1 = one_point(); // c = 1
        assert!(tmax(&geom1, 0.0).is_infinite());

        let mut cfg2 = DivisorConfig::default();
        cfg2.twist_c = 0.5;
        let geom2 = ModelGeometry::new(cfg2).unwrap();
        assert!((tmax(&geom2, 0.25) - 1.0 / 0.75).abs() < 1e-12);
    }

    #[test]
    fn potential_sandwich_on_a_grid() {
        // psi_o <= psi_{gamma'} <= psi_gamma <= psi_1 for gamma' < gamma
        let gammas: Vec<f64> = (1..=40).map(|k| k as f64 / 40.0).collect();
        let rs: Vec<f64> = (1..=60).map(|k| 0.01 * (k as f64 / 60.0).powi(3)).collect();
        for &r in &rs {
            if r == 0.0 {
                continue;
            }
            let po = psi_cusp(r).unwrap();
            let mut prev = po;
            for &gamma in &gammas {
                let pg = psi_gamma(gamma, r).unwrap();
                assert!(pg >= prev - 1e-12, "gamma {gamma} r {r}: {pg} < {prev}");
                prev = pg;
            }
            let p1 = psi_gamma(1.0, r).unwrap();
            assert!((p1 - prev).abs() < 1e-12);
        }
    }

    #[test]
    fn psi_gamma_bounded_above_uniformly() {
        let geom = one_point();
        let mut fitted = Vec::new();
        for k in 1..=10 {
            let gamma = 0.5f64.powi(k);
            let mut sup = f64::NEG_INFINITY;
            for i in 0..=500 {
                let u = -40.0 + 52.0 * (i as f64) / 500.0;
                sup = sup.max(psi_gamma_u(&geom, gamma, u).unwrap());
            }
            fitted.push(sup);
        }
        // the fitted bound must not grow as gamma shrinks
        for w in fitted.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn pointwise_limit_monotone_to_cusp() {
        let geom = one_point();
        for u in [-20.0, -5.0, 0.0, 4.0] {
            let po = psi_cusp_u(&geom, u);
            let mut prev_gap = f64::INFINITY;
            for k in 1..=12 {
                let gamma = 0.5f64.powi(k);
                let gap = psi_gamma_u(&geom, gamma, u).unwrap() - po;
                assert!(gap >= -1e-12);
                assert!(gap <= prev_gap + 1e-12, "u {u} gamma {gamma}");
                prev_gap = gap;
            }
            assert!(prev_gap < 1e-2, "u {u}: residual gap {prev_gap}");
        }
    }

    #[test]
    fn ell_asymptotics_and_cap() {
        let geom = one_point();
        let lam: f64 = geom.divisor.rescale_lambda;
        for u in [-40.0, -10.0, 0.0, 12.0] {
            assert!(geom.ell(u) < geom.divisor.delta_cap.ln());
        }
        assert!((geom.ell(-40.0) - (-40.0) - lam.ln()).abs() < 1e-12);
    }

    #[test]
    fn two_point_section_peaks_at_lambda() {
        let mut cfg = DivisorConfig::default();
        cfg.kind = DivisorKind::TwoPoint;
        let geom = ModelGeometry::new(cfg).unwrap();
        let lam = cfg.rescale_lambda;
        assert!((geom.section_norm_sq(0.0) - lam).abs() < 1e-15);
        assert!(geom.section_norm_sq(8.0) < lam);
        assert!(geom.section_norm_sq(-8.0) < lam);
        // theta has degree 2
        assert!((geom.theta_density(1.3) - 2.0 * geom.g(1.3)).abs() < 1e-15);
    }
}
