//! Flat key-value run configuration with dotted sections (geometry.*,
//! mesh.*, flow.*, estimates.*, compare.*, sweep.*), chosen for
//! diff-friendliness in experiment logs. Unknown keys are hard errors; the
//! canonical echo reparses to an equal config.

use crate::error::{CoreError, Result};
use crate::flow::{
    default_dt_schedule, default_output_times, FlowConfig, FlowVariant,
};
use crate::geometry::{self, ConeParams, DivisorConfig, DivisorKind, ModelGeometry};
use crate::mesh::build_mesh;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKey {
    Smoke,
    Conical,
    Regularized,
    Cusp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phi0Profile {
    Zero,
    Tanh,
    Sin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabConfig {
    // geometry.*
    pub divisor: DivisorKind,
    pub twist_c: f64,
    pub rescale_lambda: f64,
    pub delta_cap: f64,
    // mesh.*
    pub u_min: f64,
    pub u_max: f64,
    pub n: usize,
    pub grading: f64,
    // flow.*
    pub variant: VariantKey,
    pub gamma: f64,
    pub epsilon: f64,
    pub mollify_j: usize,
    pub horizon_t: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub positivity_floor_rel: f64,
    pub phi0_profile: Phi0Profile,
    pub phi0_amplitude: f64,
    pub phi0_width: f64,
    /// Extra output times beyond the default ladder (empty = default only).
    pub output_times: Vec<f64>,
    // estimates.*
    pub sigma: f64,
    pub subsolution_l: f64,
    pub delta_scan: f64,
    // compare.*
    pub t0: f64,
    // sweep.*
    pub gammas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub j_list: Vec<usize>,
    pub window: (f64, f64),
    pub times: Vec<f64>,
    pub u_mins: Vec<f64>,
    // top level
    pub seed: u64,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            divisor: DivisorKind::OnePoint,
            twist_c: 1.0,
            rescale_lambda: 0.005,
            delta_cap: 0.01,
            u_min: -28.0,
            u_max: 12.0,
            n: 513,
            grading: 1.0,
            variant: VariantKey::Conical,
            gamma: 0.5,
            epsilon: 0.1,
            mollify_j: 4,
            horizon_t: 1.0,
            newton_tol: 1e-11,
            newton_max_iter: 30,
            positivity_floor_rel: 1e-14,
            phi0_profile: Phi0Profile::Tanh,
            phi0_amplitude: 0.3,
            phi0_width: 1.5,
            output_times: Vec::new(),
            sigma: 0.05,
            subsolution_l: 2.0,
            delta_scan: 0.1,
            t0: 0.05,
            gammas: (1..=8).map(|k| 0.5f64.powi(k)).collect(),
            epsilons: vec![0.1, 0.05, 0.025],
            j_list: vec![2, 4, 8],
            window: (-5.0, 5.0),
            times: vec![0.1, 0.5, 0.9],
            u_mins: vec![-16.0, -22.0, -28.0],
            seed: 42,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| CoreError::config(key, format!("cannot parse `{value}` as a number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| CoreError::config(key, format!("cannot parse `{value}` as a count")))
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value
        .parse::<u64>()
        .map_err(|_| CoreError::config(key, format!("cannot parse `{value}` as an integer")))
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|s| parse_f64(key, s.trim()))
        .collect()
}

fn parse_usize_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(|s| parse_usize(key, s.trim()))
        .collect()
}

impl LabConfig {
    /// Parse the flat key-value text. Unknown keys, duplicates, and malformed
    /// values are hard errors carrying the line number and key.
    pub fn parse(text: &str) -> Result<LabConfig> {
        let mut cfg = LabConfig::default();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CoreError::config(
                    format!("line {}", lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            let key = key.trim();
            let value = value.trim();
            if let Some(prev) = seen.insert(key.to_string(), lineno + 1) {
                return Err(CoreError::config(
                    key,
                    format!("duplicate key (lines {prev} and {})", lineno + 1),
                ));
            }
            cfg.apply(key, value, lineno + 1)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str, lineno: usize) -> Result<()> {
        match key {
            "geometry.divisor" => {
                self.divisor = match value {
                    "one_point" => DivisorKind::OnePoint,
                    "two_point" => DivisorKind::TwoPoint,
                    _ => {
                        return Err(CoreError::config(
                            key,
                            format!("expected one_point|two_point, got `{value}`"),
                        ))
                    }
                }
            }
            "geometry.twist_c" => self.twist_c = parse_f64(key, value)?,
            "geometry.rescale_lambda" => self.rescale_lambda = parse_f64(key, value)?,
            "geometry.delta_cap" => self.delta_cap = parse_f64(key, value)?,
            "mesh.u_min" => self.u_min = parse_f64(key, value)?,
            "mesh.u_max" => self.u_max = parse_f64(key, value)?,
            "mesh.n" => self.n = parse_usize(key, value)?,
            "mesh.grading" => self.grading = parse_f64(key, value)?,
            "flow.variant" => {
                self.variant = match value {
                    "smoke" => VariantKey::Smoke,
                    "conical" => VariantKey::Conical,
                    "regularized" => VariantKey::Regularized,
                    "cusp" => VariantKey::Cusp,
                    _ => {
                        return Err(CoreError::config(
                            key,
                            format!("expected smoke|conical|regularized|cusp, got `{value}`"),
                        ))
                    }
                }
            }
            "flow.gamma" => self.gamma = parse_f64(key, value)?,
            "flow.epsilon" => self.epsilon = parse_f64(key, value)?,
            "flow.mollify_j" => self.mollify_j = parse_usize(key, value)?,
            "flow.horizon_t" => self.horizon_t = parse_f64(key, value)?,
            "flow.newton_tol" => self.newton_tol = parse_f64(key, value)?,
            "flow.newton_max_iter" => self.newton_max_iter = parse_usize(key, value)?,
            "flow.positivity_floor_rel" => self.positivity_floor_rel = parse_f64(key, value)?,
            "flow.phi0" => {
                // profile[:amplitude[:width]]
                let mut parts = value.split(':');
                let profile = parts.next().unwrap_or("");
                self.phi0_profile = match profile {
                    "zero" => Phi0Profile::Zero,
                    "tanh" => Phi0Profile::Tanh,
                    "sin" => Phi0Profile::Sin,
                    _ => {
                        return Err(CoreError::config(
                            key,
                            format!("expected zero|tanh:amp:width|sin:amp:width, got `{value}`"),
                        ))
                    }
                };
                if let Some(a) = parts.next() {
                    self.phi0_amplitude = parse_f64(key, a)?;
                }
                if let Some(w) = parts.next() {
                    self.phi0_width = parse_f64(key, w)?;
                }
                if parts.next().is_some() {
                    return Err(CoreError::config(key, "too many `:` fields"));
                }
            }
            "flow.output_times" => self.output_times = parse_f64_list(key, value)?,
            "estimates.sigma" => self.sigma = parse_f64(key, value)?,
            "estimates.l" => self.subsolution_l = parse_f64(key, value)?,
            "estimates.delta" => self.delta_scan = parse_f64(key, value)?,
            "compare.t0" => self.t0 = parse_f64(key, value)?,
            "sweep.gammas" => self.gammas = parse_f64_list(key, value)?,
            "sweep.epsilons" => self.epsilons = parse_f64_list(key, value)?,
            "sweep.j_list" => self.j_list = parse_usize_list(key, value)?,
            "sweep.window" => {
                let v = parse_f64_list(key, value)?;
                if v.len() != 2 {
                    return Err(CoreError::config(key, "expected `lo, hi`"));
                }
                self.window = (v[0], v[1]);
            }
            "sweep.times" => self.times = parse_f64_list(key, value)?,
            "sweep.u_mins" => self.u_mins = parse_f64_list(key, value)?,
            "seed" => self.seed = parse_u64(key, value)?,
            _ => {
                return Err(CoreError::config(
                    key,
                    format!("unknown key (line {lineno})"),
                ))
            }
        }
        Ok(())
    }

    /// Eager validation of every cross-field invariant.
    pub fn validate(&self) -> Result<()> {
        self.divisor_config().validate()?;
        // mesh invariants via a trial build
        build_mesh(self.u_min, self.u_max, self.n, self.grading)?;
        match self.variant {
            VariantKey::Conical => {
                if !(self.gamma > 0.0 && self.gamma <= 1.0) {
                    return Err(CoreError::config(
                        "flow.gamma",
                        format!("Conical requires gamma > 0, got {}", self.gamma),
                    ));
                }
            }
            VariantKey::Regularized => {
                if !(self.epsilon > 0.0) {
                    return Err(CoreError::config(
                        "flow.epsilon",
                        "Regularized requires epsilon > 0",
                    ));
                }
                if self.mollify_j < 1 {
                    return Err(CoreError::config(
                        "flow.mollify_j",
                        "Regularized requires mollify_j >= 1",
                    ));
                }
            }
            _ => {}
        }
        if !(self.horizon_t > 0.0) {
            return Err(CoreError::config("flow.horizon_t", "must be positive"));
        }
        let geom = ModelGeometry::new(self.divisor_config())?;
        let class_gamma = match self.variant {
            VariantKey::Conical => Some(self.gamma),
            VariantKey::Cusp | VariantKey::Regularized => Some(0.0),
            VariantKey::Smoke => None,
        };
        if let Some(cg) = class_gamma {
            let tmax = geometry::tmax(&geom, cg);
            if !(self.horizon_t < tmax) {
                return Err(CoreError::config(
                    "flow.horizon_t",
                    format!(
                        "horizon {} reaches the maximal existence time {tmax} set by \
                         positivity of the background class [omega] + t(-c1 + (1-gamma) c1(L) + [eta])",
                        self.horizon_t
                    ),
                ));
            }
        }
        // the sweep gammas must all fit under the shared horizon
        for &g in &self.gammas {
            if !(g > 0.0 && g <= 1.0) {
                return Err(CoreError::config(
                    "sweep.gammas",
                    format!("gamma {g} outside (0, 1]"),
                ));
            }
            let tmax = geometry::tmax(&geom, g);
            if !(self.horizon_t < tmax) {
                return Err(CoreError::config(
                    "sweep.gammas",
                    format!("gamma {g} has maximal time {tmax} below the horizon {}", self.horizon_t),
                ));
            }
        }
        if !(self.sigma > 0.0) {
            return Err(CoreError::config("estimates.sigma", "must be positive"));
        }
        if !(self.subsolution_l >= 1.0) {
            return Err(CoreError::config("estimates.l", "must be >= 1"));
        }
        if !(self.t0 > 0.0 && self.t0 < 0.5 / self.subsolution_l) {
            return Err(CoreError::config(
                "compare.t0",
                format!("must lie in (0, 1/(2l)) = (0, {})", 0.5 / self.subsolution_l),
            ));
        }
        for &t in &self.times {
            if !(t > 0.0 && t <= 1.0) {
                return Err(CoreError::config(
                    "sweep.times",
                    format!("times are fractions of the horizon in (0, 1], got {t}"),
                ));
            }
        }
        Ok(())
    }

    pub fn divisor_config(&self) -> DivisorConfig {
        DivisorConfig {
            kind: self.divisor,
            twist_c: self.twist_c,
            rescale_lambda: self.rescale_lambda,
            delta_cap: self.delta_cap,
        }
    }

    pub fn geometry(&self) -> Result<ModelGeometry> {
        ModelGeometry::new(self.divisor_config())
    }

    /// Initial potential on a mesh.
    pub fn phi0(&self, mesh: &crate::mesh::Mesh) -> Vec<f64> {
        let a = self.phi0_amplitude;
        let w = self.phi0_width;
        match self.phi0_profile {
            Phi0Profile::Zero => vec![0.0; mesh.len()],
            Phi0Profile::Tanh => mesh.sample(|u| a * (u / w).tanh()),
            Phi0Profile::Sin => mesh.sample(|u| {
                // taper so the field flattens toward both ends
                let c = (u / (2.0 * w)).cosh();
                a * (u / w).sin() / (c * c)
            }),
        }
    }

    /// Assemble the flow configuration for this run (or for an overridden
    /// variant/gamma, as the sweep drivers need).
    pub fn flow_config_for(&self, variant: FlowVariant, gamma: f64) -> Result<FlowConfig> {
        let geom = self.geometry()?;
        let mesh = build_mesh(self.u_min, self.u_max, self.n, self.grading)?;
        let g_min = mesh
            .nodes
            .iter()
            .map(|&u| geom.g(u))
            .fold(f64::INFINITY, f64::min);
        let mut output_times = default_output_times(self.horizon_t);
        for &fraction in &self.times {
            output_times.push(fraction * self.horizon_t);
        }
        output_times.extend(self.output_times.iter().cloned());
        output_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        output_times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * self.horizon_t);
        // the sub-solution anchor must be an output time
        if !output_times
            .iter()
            .any(|&t| (t - self.t0).abs() <= 1e-12 * self.horizon_t)
        {
            output_times.push(self.t0);
            output_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        let cfg = FlowConfig {
            geom,
            params: ConeParams {
                gamma,
                epsilon: self.epsilon,
                horizon_t: self.horizon_t,
            },
            mesh,
            variant,
            dt_schedule: default_dt_schedule(self.horizon_t),
            output_times,
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
            positivity_floor: self.positivity_floor_rel * g_min,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The flow configuration of the run named by flow.variant.
    pub fn flow_config(&self) -> Result<FlowConfig> {
        let variant = match self.variant {
            VariantKey::Smoke => FlowVariant::Smoke,
            VariantKey::Conical => FlowVariant::Conical,
            VariantKey::Cusp => FlowVariant::Cusp,
            VariantKey::Regularized => FlowVariant::Regularized {
                epsilon: self.epsilon,
                mollify_j: self.mollify_j,
            },
        };
        self.flow_config_for(variant, self.gamma)
    }

    /// Canonical echo: every key, sorted within sections, defaults filled in.
    /// Reparsing the echo yields an equal config.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let variant = match self.variant {
            VariantKey::Smoke => "smoke",
            VariantKey::Conical => "conical",
            VariantKey::Regularized => "regularized",
            VariantKey::Cusp => "cusp",
        };
        let divisor = match self.divisor {
            DivisorKind::OnePoint => "one_point",
            DivisorKind::TwoPoint => "two_point",
        };
        let profile = match self.phi0_profile {
            Phi0Profile::Zero => "zero",
            Phi0Profile::Tanh => "tanh",
            Phi0Profile::Sin => "sin",
        };
        let f = |x: f64| format!("{x:.17e}");
        let list = |v: &[f64]| {
            v.iter()
                .map(|&x| format!("{x:.17e}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        if let Ok(geom) = self.geometry() {
            let class_gamma = match self.variant {
                VariantKey::Conical => self.gamma,
                _ => 0.0,
            };
            s.push_str(&format!(
                "# tmax = {}\n",
                geometry::tmax(&geom, class_gamma)
            ));
        }
        s.push_str(&format!("compare.t0 = {}\n", f(self.t0)));
        s.push_str(&format!("estimates.delta = {}\n", f(self.delta_scan)));
        s.push_str(&format!("estimates.l = {}\n", f(self.subsolution_l)));
        s.push_str(&format!("estimates.sigma = {}\n", f(self.sigma)));
        s.push_str(&format!("flow.epsilon = {}\n", f(self.epsilon)));
        s.push_str(&format!("flow.gamma = {}\n", f(self.gamma)));
        s.push_str(&format!("flow.horizon_t = {}\n", f(self.horizon_t)));
        s.push_str(&format!("flow.mollify_j = {}\n", self.mollify_j));
        s.push_str(&format!("flow.newton_max_iter = {}\n", self.newton_max_iter));
        s.push_str(&format!("flow.newton_tol = {}\n", f(self.newton_tol)));
        s.push_str(&format!(
            "flow.phi0 = {profile}:{}:{}\n",
            f(self.phi0_amplitude),
            f(self.phi0_width)
        ));
        s.push_str(&format!(
            "flow.positivity_floor_rel = {}\n",
            f(self.positivity_floor_rel)
        ));
        if !self.output_times.is_empty() {
            s.push_str(&format!("flow.output_times = {}\n", list(&self.output_times)));
        }
        s.push_str(&format!("flow.variant = {variant}\n"));
        s.push_str(&format!("geometry.delta_cap = {}\n", f(self.delta_cap)));
        s.push_str(&format!("geometry.divisor = {divisor}\n"));
        s.push_str(&format!(
            "geometry.rescale_lambda = {}\n",
            f(self.rescale_lambda)
        ));
        s.push_str(&format!("geometry.twist_c = {}\n", f(self.twist_c)));
        s.push_str(&format!("mesh.grading = {}\n", f(self.grading)));
        s.push_str(&format!("mesh.n = {}\n", self.n));
        s.push_str(&format!("mesh.u_max = {}\n", f(self.u_max)));
        s.push_str(&format!("mesh.u_min = {}\n", f(self.u_min)));
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("sweep.epsilons = {}\n", list(&self.epsilons)));
        s.push_str(&format!("sweep.gammas = {}\n", list(&self.gammas)));
        s.push_str(&format!(
            "sweep.j_list = {}\n",
            self.j_list
                .iter()
                .map(|j| j.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ));
        s.push_str(&format!("sweep.times = {}\n", list(&self.times)));
        s.push_str(&format!(
            "sweep.u_mins = {}\n",
            list(&self.u_mins)
        ));
        s.push_str(&format!(
            "sweep.window = {}, {}\n",
            f(self.window.0),
            f(self.window.1)
        ));
        s
    }
}
