//! Adaptive Collaborative Interface.
//!
//! Each robot runs its own instance. The interface turns the force measured at
//! the end-effector into an admittance velocity, compares the admittance and
//! hand speeds over a sliding window to obtain the adaptive index `alpha`, and
//! blends `v_d = v_adm + alpha * v_h`. The blended velocity is integrated into
//! the desired pose handed to the whole-body controller; the desired
//! orientation never changes and the desired angular velocity is zero.

use std::collections::VecDeque;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{is_finite3, twist, Pose, Twist};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmittanceParams {
    /// Diagonal of the desired mass matrix (kg).
    pub mass: [f64; 3],
    /// Diagonal of the desired damping matrix (N s/m).
    pub damping: [f64; 3],
}

impl Default for AdmittanceParams {
    fn default() -> Self {
        Self {
            mass: [4.0; 3],
            damping: [45.0; 3],
        }
    }
}

/// How `alpha` is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    /// Sliding-window adaptive index.
    #[default]
    Adaptive,
    /// `alpha` pinned at zero: a plain admittance controller.
    Admittance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AciParams {
    #[serde(default)]
    pub admittance: AdmittanceParams,
    /// Sliding window length (s).
    #[serde(default = "default_window")]
    pub window_length: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Control period (s). Overwritten by the scenario `dt` when run in the simulator.
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub alpha_mode: AlphaMode,
}

fn default_window() -> f64 {
    0.5
}
fn default_epsilon() -> f64 {
    1e-6
}
fn default_dt() -> f64 {
    1e-3
}

impl Default for AciParams {
    fn default() -> Self {
        Self {
            admittance: AdmittanceParams::default(),
            window_length: default_window(),
            epsilon: default_epsilon(),
            dt: default_dt(),
            alpha_mode: AlphaMode::Adaptive,
        }
    }
}

impl AciParams {
    pub fn validate(&self, locator: &str) -> Result<()> {
        let adm = &self.admittance;
        if adm.mass.iter().chain(&adm.damping).any(|v| !(*v > 0.0)) {
            return Err(Error::config(
                format!("{locator}.admittance"),
                "mass and damping diagonals must be strictly positive",
            ));
        }
        if !(self.dt > 0.0) {
            return Err(Error::config(format!("{locator}.dt"), "must be > 0"));
        }
        if !(self.window_length > 0.0) || self.window_length < self.dt {
            return Err(Error::config(
                format!("{locator}.window_length"),
                "must be positive and at least one control period",
            ));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config(format!("{locator}.epsilon"), "must be > 0"));
        }
        Ok(())
    }

    /// Number of samples the window holds (`round(W_l/dt) + 1`).
    pub fn window_samples(&self) -> usize {
        (self.window_length / self.dt).round().max(1.0) as usize + 1
    }
}

/// Output of one interface tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AciOutput {
    pub v_adm: Vector3<f64>,
    pub alpha: f64,
    pub v_d: Vector3<f64>,
    pub x_d: Pose,
    pub xdot_d: Twist,
}

#[derive(Debug, Clone)]
pub struct AciState {
    pub v_adm: Vector3<f64>,
    /// `(|v_adm|, |v_h|)` samples, oldest first.
    window: VecDeque<(f64, f64)>,
    capacity: usize,
    pub alpha: f64,
    pub x_d: Pose,
    pub v_d: Vector3<f64>,
    /// Number of force samples rejected as non-finite.
    pub rejected_samples: u64,
}

impl AciState {
    /// Fresh state holding `x_d` with the window primed with zeros.
    pub fn new(x_d: Pose, params: &AciParams) -> Self {
        let capacity = params.window_samples();
        Self {
            v_adm: Vector3::zeros(),
            window: std::iter::repeat_n((0.0, 0.0), capacity).collect(),
            capacity,
            alpha: match params.alpha_mode {
                AlphaMode::Adaptive => 1.0,
                AlphaMode::Admittance => 0.0,
            },
            x_d,
            v_d: Vector3::zeros(),
            rejected_samples: 0,
        }
    }

    pub fn data_quality_ok(&self) -> bool {
        self.rejected_samples == 0
    }

    /// Time span covered by the window (s).
    pub fn window_span(&self, dt: f64) -> f64 {
        (self.window.len().saturating_sub(1)) as f64 * dt
    }

    /// Exact per-axis discretization of `M v̇ + D v = F` with the force held
    /// over one period. Non-finite forces are rejected and flagged.
    pub fn admittance_step(&mut self, params: &AciParams, force: &Vector3<f64>) -> Vector3<f64> {
        if !is_finite3(force) {
            self.rejected_samples += 1;
            log::warn!("non-finite force sample rejected: {force:?}");
            return self.v_adm;
        }
        let adm = &params.admittance;
        for i in 0..3 {
            let decay = (-adm.damping[i] * params.dt / adm.mass[i]).exp();
            self.v_adm[i] = self.v_adm[i] * decay + force[i] / adm.damping[i] * (1.0 - decay);
        }
        self.v_adm
    }

    /// Appends the current `(|v_adm|, |v_h|)` sample, dropping the oldest.
    pub fn record(&mut self, v_h: &Vector3<f64>) {
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back((self.v_adm.norm(), v_h.norm()));
    }

    /// Updates and returns `alpha` from the current window.
    pub fn adaptive_index(&mut self, params: &AciParams) -> f64 {
        self.alpha = match params.alpha_mode {
            AlphaMode::Admittance => 0.0,
            AlphaMode::Adaptive => {
                let (adm, hand) = window_integrals(self.window.iter().copied(), params.dt);
                alpha_from_integrals(adm, hand, params.epsilon)
            }
        };
        self.alpha
    }

    /// `v_d = v_adm + alpha * v_h`.
    pub fn reference_velocity(&mut self, v_h: &Vector3<f64>) -> Vector3<f64> {
        self.v_d = self.v_adm + self.alpha * v_h;
        self.v_d
    }

    /// Explicit-Euler position update; orientation held, angular twist zero.
    pub fn integrate_reference(&mut self, dt: f64) -> (Pose, Twist) {
        self.x_d.translation.vector += self.v_d * dt;
        (self.x_d, twist(self.v_d, Vector3::zeros()))
    }

    /// One full tick: admittance, window, `alpha`, blend, integrate.
    pub fn tick(&mut self, params: &AciParams, force: &Vector3<f64>, v_h: &Vector3<f64>) -> AciOutput {
        self.admittance_step(params, force);
        self.record(v_h);
        self.adaptive_index(params);
        self.reference_velocity(v_h);
        let (x_d, xdot_d) = self.integrate_reference(params.dt);
        AciOutput {
            v_adm: self.v_adm,
            alpha: self.alpha,
            v_d: self.v_d,
            x_d,
            xdot_d,
        }
    }
}

/// Trapezoidal integrals `(∫|v_adm| dt, ∫|v_h| dt)` over uniformly spaced samples.
pub fn window_integrals(samples: impl IntoIterator<Item = (f64, f64)>, dt: f64) -> (f64, f64) {
    let mut prev: Option<(f64, f64)> = None;
    let (mut a, mut h) = (0.0, 0.0);
    for s in samples {
        if let Some(p) = prev {
            a += 0.5 * (p.0 + s.0) * dt;
            h += 0.5 * (p.1 + s.1) * dt;
        }
        prev = Some(s);
    }
    (a, h)
}

/// `1 - adm / (hand + eps)`, clamped to `[0, 1]`.
pub fn alpha_from_integrals(adm: f64, hand: f64, epsilon: f64) -> f64 {
    let raw = 1.0 - adm / (hand + epsilon);
    if raw.is_nan() {
        return 0.0;
    }
    raw.clamp(0.0, 1.0)
}
