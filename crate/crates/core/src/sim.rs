use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftPlanner};
use std::collections::VecDeque;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::spectral::OneOverFModel;
use crate::types::{ConditionId, HapticParams, RunRecord, SamplingSpec};

/// One forced cell of the positional-marker stimulus. Cells alternate force
/// direction; a small unforced gap separates neighbours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkerCell {
    pub index: usize,
    pub z_lo_mm: f64,
    /// Upper edge of the forced span; the gap runs from here to the next cell.
    pub z_hi_mm: f64,
    pub force_n: f64,
}

/// Marker force sign for a cell index: odd cells push up, even cells down.
fn marker_cell_force(index: usize, p: &HapticParams) -> f64 {
    if index % 2 == 1 {
        p.marker_force_n
    } else {
        -p.marker_force_n
    }
}

/// The full marker layout over the workspace.
pub fn marker_cells(p: &HapticParams) -> Vec<MarkerCell> {
    let count = (p.workspace_height_mm / p.marker_interval_mm).floor() as usize;
    (0..count)
        .map(|i| {
            let lo = p.workspace_base_mm + i as f64 * p.marker_interval_mm;
            MarkerCell {
                index: i,
                z_lo_mm: lo,
                z_hi_mm: lo + p.marker_interval_mm - p.marker_gap_mm,
                force_n: marker_cell_force(i, p),
            }
        })
        .collect()
}

/// Force step felt when crossing from one forced cell into the next.
pub fn marker_step_amplitude(p: &HapticParams) -> f64 {
    2.0 * p.marker_force_n
}

fn marker_force(z: f64, p: &HapticParams) -> f64 {
    let rel = z - p.workspace_base_mm;
    let index = (rel / p.marker_interval_mm).floor() as i64;
    let count = (p.workspace_height_mm / p.marker_interval_mm).floor() as i64;
    if index < 0 || index >= count {
        return 0.0;
    }
    let offset = rel - index as f64 * p.marker_interval_mm;
    if offset >= p.marker_interval_mm - p.marker_gap_mm {
        0.0
    } else {
        marker_cell_force(index as usize, p)
    }
}

/// Haptic force command for condition `n` at the sensed state, N.
pub fn condition_force(n: u8, z_mm: f64, v_mm_s: f64, p: &HapticParams) -> Result<f64> {
    if z_mm < p.workspace_base_mm || z_mm > p.z_max_mm() {
        return Err(Error::ZOutOfRange(z_mm));
    }
    Ok(match n {
        0 => 0.0,
        1 => p.pos_force_n,
        2 => p.neg_force_n,
        3 => p.viscosity_n_per_mm_s * v_mm_s,
        4 => p.anti_viscosity_n_per_mm_s * v_mm_s,
        5 => marker_force(z_mm, p),
        other => {
            return Err(Error::InvalidCondition(format!("{other},?")));
        }
    })
}

/// Sonification pitch for a position: `tone_base * 2^(z * semitones_per_mm / 12)`,
/// capped at the tone ceiling.
pub fn pitch_of_z(z_mm: f64, p: &HapticParams) -> Result<f64> {
    if z_mm < 0.0 {
        return Err(Error::NegativeZ(z_mm));
    }
    let pitch = p.tone_base_hz * (z_mm * p.tone_semitones_per_mm / 12.0).exp2();
    Ok(pitch.min(p.tone_cap_hz))
}

// Drift: a bounded random walk in displacement, stepped every DRIFT_KNOT_S
// and smoothstep-interpolated so its velocity and acceleration stay defined.
const DRIFT_KNOT_S: f64 = 0.25;
const DRIFT_STEP_MM: f64 = 0.25;
const DRIFT_BOUND_MM: f64 = 0.9;

/// Lognormal sigma of the per-run amplitude factor applied to the whole
/// stochastic displacement. Captures run-to-run spread between subjects.
const RUN_AMPLITUDE_SIGMA: f64 = 0.30;

/// Tremor displacement series plus its first two time derivatives, all
/// sampled on the position grid.
struct Motion {
    d: Vec<f64>,
    dv: Vec<f64>,
    da: Vec<f64>,
}

impl Motion {
    fn zeros(n: usize) -> Self {
        Motion {
            d: vec![0.0; n],
            dv: vec![0.0; n],
            da: vec![0.0; n],
        }
    }

    fn add(&mut self, other: &Motion) {
        for i in 0..self.d.len() {
            self.d[i] += other.d[i];
            self.dv[i] += other.dv[i];
            self.da[i] += other.da[i];
        }
    }

    fn scale(&mut self, s: f64) {
        for i in 0..self.d.len() {
            self.d[i] *= s;
            self.dv[i] *= s;
            self.da[i] *= s;
        }
    }
}

/// Sum of bin-aligned cosines whose peak-to-peak amplitudes follow the 1/f
/// model, with phases drawn from `rng`. Synthesized by an inverse transform,
/// which is exactly the cosine sum up to rounding.
fn synth_tremor(model: &OneOverFModel, rng: &mut ChaCha8Rng, n: usize, rate_hz: f64) -> Motion {
    let df = rate_hz / n as f64;
    let k_lo = ((model.band_lo_hz / df - 1e-9).ceil() as usize).max(1);
    let k_hi = ((model.band_hi_hz / df + 1e-9).floor() as usize).min(n / 2);

    let mut spec = vec![Complex::new(0.0, 0.0); n];
    for k in k_lo..=k_hi {
        let f = k as f64 * df;
        let amp = model.c_mm_hz / f / 2.0;
        let phase = rng.random::<f64>() * TAU;
        let x = Complex::from_polar(amp * n as f64 / 2.0, phase);
        spec[k] = x;
        spec[n - k] = x.conj();
    }

    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n);
    let inv_n = 1.0 / n as f64;
    let take_real = |buf: &mut Vec<Complex<f64>>| -> Vec<f64> {
        ifft.process(buf);
        buf.iter().map(|c| c.re * inv_n).collect()
    };

    let mut buf_v: Vec<Complex<f64>> = spec
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let freq = if k <= n / 2 {
                k as f64
            } else {
                k as f64 - n as f64
            };
            x * Complex::new(0.0, TAU * freq * df)
        })
        .collect();
    let mut buf_a: Vec<Complex<f64>> = spec
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let freq = if k <= n / 2 {
                k as f64
            } else {
                k as f64 - n as f64
            };
            let w = TAU * freq * df;
            x * Complex::new(-w * w, 0.0)
        })
        .collect();
    let mut buf_d = spec;

    Motion {
        d: take_real(&mut buf_d),
        dv: take_real(&mut buf_v),
        da: take_real(&mut buf_a),
    }
}

/// Bounded asymmetric random walk between knots, smoothstep-interpolated.
fn synth_drift(rng: &mut ChaCha8Rng, n: usize, rate_hz: f64) -> Motion {
    let knot_samples = ((DRIFT_KNOT_S * rate_hz).round() as usize).max(1);
    let segments = n.div_ceil(knot_samples);
    let mut knots = Vec::with_capacity(segments + 1);
    let mut x = 0.0f64;
    knots.push(x);
    for _ in 0..segments {
        // Exp(1) - 1 step: zero mean, right-skewed, like slow postural drift.
        let e = -(1.0 - rng.random::<f64>()).ln();
        x += DRIFT_STEP_MM * (e - 1.0);
        while x.abs() > DRIFT_BOUND_MM {
            x = x.signum() * (2.0 * DRIFT_BOUND_MM - x.abs());
        }
        knots.push(x);
    }

    let mut m = Motion::zeros(n);
    let t_seg = knot_samples as f64 / rate_hz;
    for i in 0..n {
        let seg = i / knot_samples;
        let u = (i % knot_samples) as f64 / knot_samples as f64;
        let (a, b) = (knots[seg], knots[seg + 1]);
        let delta = b - a;
        m.d[i] = a + delta * (3.0 * u * u - 2.0 * u * u * u);
        m.dv[i] = delta * 6.0 * u * (1.0 - u) / t_seg;
        m.da[i] = delta * (6.0 - 12.0 * u) / (t_seg * t_seg);
    }
    m
}

/// Involuntary fingertip motion: 1/f tremor with random phases, optionally
/// riding on a bounded low-frequency drift. Zero mean.
pub fn generate_tremor(
    model: &OneOverFModel,
    seed: u64,
    duration_s: f64,
    rate_hz: f64,
    drift_enabled: bool,
) -> Result<Vec<f64>> {
    let n = samples_for(duration_s, rate_hz)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut motion = synth_tremor(model, &mut rng, n, rate_hz);
    if drift_enabled {
        motion.add(&synth_drift(&mut rng, n, rate_hz));
    }
    let mean = motion.d.iter().sum::<f64>() / n as f64;
    Ok(motion.d.into_iter().map(|x| x - mean).collect())
}

fn samples_for(duration_s: f64, rate_hz: f64) -> Result<usize> {
    if duration_s <= 0.0 || rate_hz <= 0.0 {
        return Err(Error::InvalidConfig(
            "duration and rate must be positive".into(),
        ));
    }
    let n = (duration_s * rate_hz).round() as usize;
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    if !n.is_multiple_of(2) {
        return Err(Error::OddLength(n));
    }
    Ok(n)
}

/// Full simulator configuration. Defaults reproduce a plain still-hold run
/// under condition 0,0 with device emulation switched off.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub condition: ConditionId,
    pub seed: u64,
    pub target_z_mm: f64,
    /// Postural stiffness of the hold, N/mm.
    pub controller_kp: f64,
    /// Postural damping, N per mm/s. Must exceed the anti-viscosity
    /// coefficient under condition n=4 or the loop diverges.
    pub controller_kd: f64,
    /// Scales the whole stochastic displacement (tremor + drift).
    pub noise_scale: f64,
    pub drift_enabled: bool,
    pub model: OneOverFModel,
    /// Subjects cancel the static load of their condition before the run.
    pub static_load_compensation: bool,
    pub emulate_latency: bool,
    pub emulate_quantization: bool,
    pub emulate_sensor_noise: bool,
    /// Start position; defaults to the hold target.
    pub initial_z_mm: Option<f64>,
    pub initial_v_mm_s: f64,
    pub subject: Option<u32>,
    pub run_index: Option<u32>,
    pub haptics: HapticParams,
    pub sampling: SamplingSpec,
}

impl SimConfig {
    pub fn new(condition: ConditionId, seed: u64) -> Self {
        SimConfig {
            condition,
            seed,
            target_z_mm: 5.0,
            controller_kp: 0.02,
            controller_kd: 0.002,
            noise_scale: 1.0,
            drift_enabled: true,
            model: OneOverFModel::default(),
            static_load_compensation: true,
            emulate_latency: false,
            emulate_quantization: false,
            emulate_sensor_noise: false,
            initial_z_mm: None,
            initial_v_mm_s: 0.0,
            subject: None,
            run_index: None,
            haptics: HapticParams::default(),
            sampling: SamplingSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sampling.validate()?;
        let p = &self.haptics;
        if self.target_z_mm <= p.workspace_base_mm || self.target_z_mm >= p.z_max_mm() {
            return Err(Error::InvalidConfig(format!(
                "target {} mm outside the open workspace",
                self.target_z_mm
            )));
        }
        if let Some(z0) = self.initial_z_mm {
            if z0 < p.workspace_base_mm || z0 > p.z_max_mm() {
                return Err(Error::InvalidConfig(format!(
                    "initial z {z0} mm outside the workspace"
                )));
            }
        }
        if self.controller_kp < 0.0 || self.controller_kd < 0.0 {
            return Err(Error::InvalidConfig("controller gains must be >= 0".into()));
        }
        if self.noise_scale < 0.0 {
            return Err(Error::InvalidConfig("noise scale must be >= 0".into()));
        }
        if self.condition.n() == 4 && self.controller_kd <= p.anti_viscosity_n_per_mm_s {
            return Err(Error::InvalidConfig(format!(
                "condition 4,{} needs controller_kd > {} to stay stable",
                self.condition.m(),
                p.anti_viscosity_n_per_mm_s
            )));
        }
        if self.model.band_lo_hz <= 0.0 || self.model.band_hi_hz <= self.model.band_lo_hz {
            return Err(Error::InvalidConfig("tremor band must be ordered".into()));
        }
        Ok(())
    }
}

/// Simulate one run of holding still under a condition.
///
/// The plant is `m * z_dotdot = F_condition + F_controller + F_noise` stepped
/// on the position grid. Velocity-proportional forces (controller damping,
/// viscous conditions) are integrated exactly over each step, which reduces
/// to semi-implicit Euler as damping goes to zero; the position update stays
/// `z += v_new * dt`. State-independent condition commands go through the
/// 1000 Hz zero-order-hold path, with optional latency, force quantization
/// and sensor noise emulating the physical device.
pub fn simulate_run(cfg: &SimConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let p = &cfg.haptics;
    let sp = &cfg.sampling;
    let n = sp.samples_per_run();
    let dt = sp.dt_s();
    // Force in N, lengths in mm: effective mass is kg/1000 N per mm/s^2.
    let m_eff = sp.moving_mass_kg / 1000.0;
    let cond_n = cfg.condition.n();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Stochastic displacement the subject's motor noise would produce.
    let mut desired = synth_tremor(&cfg.model, &mut rng, n, sp.position_rate_hz as f64);
    let amp_factor = {
        let (u1, u2) = (rng.random::<f64>(), rng.random::<f64>());
        let g = (-2.0 * (1.0 - u1).ln()).sqrt() * (TAU * u2).cos();
        (RUN_AMPLITUDE_SIGMA * g).exp()
    };
    if cfg.drift_enabled {
        desired.add(&synth_drift(&mut rng, n, sp.position_rate_hz as f64));
    }
    desired.scale(cfg.noise_scale * amp_factor);
    // Re-anchor so the desired path starts where the finger starts.
    let d0 = desired.d[0];
    for d in &mut desired.d {
        *d -= d0;
    }

    // Condition damping handled continuously inside the integrator;
    // everything else arrives as zero-order-hold commands.
    let (beta_cond, command_drives_plant) = match cond_n {
        3 => (-p.viscosity_n_per_mm_s, false),
        4 => (-p.anti_viscosity_n_per_mm_s, false),
        _ => (0.0, true),
    };
    let beta = cfg.controller_kd + beta_cond;
    let decay = (-beta * dt / m_eff).exp();

    let mut z = cfg.initial_z_mm.unwrap_or(cfg.target_z_mm);
    let mut v = cfg.initial_v_mm_s;

    let hold = cfg.controller_kp > 0.0 || cfg.controller_kd > 0.0;
    let bias = if cfg.static_load_compensation && hold {
        -condition_force(cond_n, z, 0.0, p)?
    } else {
        0.0
    };

    let noise_half = sp.position_noise_mm / 2.0;
    let sense = |z: f64, rng: &mut ChaCha8Rng| -> f64 {
        if cfg.emulate_sensor_noise {
            (z + (rng.random::<f64>() * 2.0 - 1.0) * noise_half)
                .clamp(p.workspace_base_mm, p.z_max_mm())
        } else {
            z
        }
    };

    let latency = if cfg.emulate_latency {
        sp.latency_ticks()
    } else {
        0
    };
    let per_tick = sp.samples_per_command();
    let quantize = |f: f64| {
        if cfg.emulate_quantization {
            (f / sp.force_resolution_n).round() * sp.force_resolution_n
        } else {
            f
        }
    };

    let mut queue: VecDeque<f64> = VecDeque::with_capacity(latency + 1);
    let first_cmd = quantize(condition_force(cond_n, sense(z, &mut rng), v, p)?);
    for _ in 0..latency {
        queue.push_back(first_cmd);
    }
    let mut cmd = first_cmd;

    let mut z_series = Vec::with_capacity(n);
    let mut v_series = Vec::with_capacity(n);
    let mut f_series = Vec::with_capacity(n);
    let mut clamped = 0usize;

    for i in 0..n {
        if i % per_tick == 0 {
            let sensed = sense(z, &mut rng);
            queue.push_back(quantize(condition_force(cond_n, sensed, v, p)?));
            cmd = queue.pop_front().expect("queue holds at least one command");
        }

        z_series.push(z);
        v_series.push(v);
        f_series.push(cmd);

        let f_noise =
            m_eff * desired.da[i] + beta * desired.dv[i] + cfg.controller_kp * desired.d[i];
        let f_const = if command_drives_plant { cmd } else { 0.0 }
            + cfg.controller_kp * (cfg.target_z_mm - z)
            + bias
            + f_noise;

        v = if beta != 0.0 {
            v * decay + f_const / beta * (1.0 - decay)
        } else {
            v + f_const * dt / m_eff
        };
        z += v * dt;

        if z < p.workspace_base_mm {
            z = p.workspace_base_mm;
            v = 0.0;
            clamped += 1;
        } else if z > p.z_max_mm() {
            z = p.z_max_mm();
            v = 0.0;
            clamped += 1;
        }
    }

    if clamped * 2 > n {
        return Err(Error::UnstableSimulation { clamped, steps: n });
    }

    RunRecord::new(
        cfg.condition,
        cfg.subject,
        cfg.run_index,
        z_series,
        v_series,
        f_series,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::dft_pp;
    use crate::stats::travel_amplitude;
    use proptest::prelude::*;

    fn params() -> HapticParams {
        HapticParams::default()
    }

    #[test]
    fn forces_by_condition() {
        let p = params();
        assert_eq!(condition_force(0, 5.0, 3.0, &p).unwrap(), 0.0);
        assert_eq!(condition_force(1, 5.0, 3.0, &p).unwrap(), 0.25);
        assert_eq!(condition_force(2, 5.0, 3.0, &p).unwrap(), -0.25);
        assert!((condition_force(3, 5.0, 10.0, &p).unwrap() - -0.03).abs() < 1e-12);
        assert!((condition_force(4, 5.0, 10.0, &p).unwrap() - 0.008).abs() < 1e-12);
        assert_eq!(condition_force(5, 0.1, 0.0, &p).unwrap(), -0.022);
        assert_eq!(condition_force(5, 0.3, 0.0, &p).unwrap(), 0.022);
        assert_eq!(condition_force(5, 0.1995, 0.0, &p).unwrap(), 0.0);
        assert_eq!(condition_force(5, 10.0, 0.0, &p).unwrap(), 0.0);
        assert!(matches!(
            condition_force(0, -0.1, 0.0, &p),
            Err(Error::ZOutOfRange(_))
        ));
        assert!(matches!(
            condition_force(5, 10.2, 0.0, &p),
            Err(Error::ZOutOfRange(_))
        ));
    }

    #[test]
    fn marker_layout() {
        let p = params();
        let cells = marker_cells(&p);
        assert_eq!(cells.len(), 50);
        assert_eq!(cells[0].z_lo_mm, 0.0);
        assert!((cells[0].z_hi_mm - 0.199).abs() < 1e-12);
        assert!((cells[49].z_lo_mm - 9.8).abs() < 1e-12);
        for w in cells.windows(2) {
            assert!(w[0].force_n * w[1].force_n < 0.0, "cells must alternate");
            assert!((w[1].z_lo_mm - w[0].z_lo_mm - 0.2).abs() < 1e-12);
        }
        for c in &cells {
            assert_eq!(c.force_n.abs(), 0.022);
            assert_eq!(
                condition_force(5, (c.z_lo_mm + c.z_hi_mm) / 2.0, 0.0, &p).unwrap(),
                c.force_n
            );
        }
        assert_eq!(marker_step_amplitude(&p), 0.044);
    }

    #[test]
    fn pitch_examples() {
        let p = params();
        assert_eq!(pitch_of_z(0.0, &p).unwrap(), 440.0);
        assert!((pitch_of_z(3.0, &p).unwrap() - 880.0).abs() < 1e-9);
        assert!((pitch_of_z(10.0, &p).unwrap() - 440.0 * (10.0f64 / 3.0).exp2()).abs() < 1e-9);
        assert_eq!(pitch_of_z(13.0, &p).unwrap(), 8000.0);
        assert!(matches!(pitch_of_z(-0.1, &p), Err(Error::NegativeZ(_))));
    }

    #[test]
    fn tremor_is_deterministic_and_centered() {
        let m = OneOverFModel::default();
        let a = generate_tremor(&m, 9, 4.0, 4000.0, true).unwrap();
        let b = generate_tremor(&m, 9, 4.0, 4000.0, true).unwrap();
        assert_eq!(a, b);
        let c = generate_tremor(&m, 10, 4.0, 4000.0, true).unwrap();
        assert_ne!(a, c);
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        assert!(mean.abs() < 1e-9);
        assert_eq!(a.len(), 16000);
    }

    #[test]
    fn tremor_spectrum_matches_model_exactly() {
        let m = OneOverFModel::default();
        let z = generate_tremor(&m, 3, 1.0, 4000.0, false).unwrap();
        let s = dft_pp(&z, 4000.0).unwrap();
        assert_eq!(s.df_hz, 1.0);
        for (i, &pp) in s.pp_mm.iter().enumerate() {
            let f = s.bin_freq(i);
            if (1.0 - 1e-9..=30.0 + 1e-9).contains(&f) {
                assert!((pp - m.c_mm_hz / f).abs() < 1e-9, "bin {f} Hz: {pp}");
            } else {
                assert!(pp < 1e-9, "bin {f} Hz should be empty, got {pp}");
            }
        }
    }

    #[test]
    fn drift_adds_bounded_low_frequency_motion() {
        let m = OneOverFModel::default();
        let plain = generate_tremor(&m, 5, 4.0, 4000.0, false).unwrap();
        let drifted = generate_tremor(&m, 5, 4.0, 4000.0, true).unwrap();
        assert_ne!(plain, drifted);
        let spread = travel_amplitude(&drifted).unwrap();
        assert!(
            spread < 2.0 * DRIFT_BOUND_MM + 4.0,
            "drift must stay bounded"
        );
    }

    #[test]
    fn equilibrium_hold_is_exactly_still() {
        for n in 0..6u8 {
            let mut cfg = SimConfig::new(ConditionId::new(n, 0).unwrap(), 1);
            cfg.noise_scale = 0.0;
            if n == 4 {
                cfg.controller_kd = 0.002;
            }
            let rec = simulate_run(&cfg).unwrap();
            assert_eq!(travel_amplitude(rec.z_mm()).unwrap(), 0.0, "condition {n}");
            assert!(rec.v_mm_s().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let cfg = SimConfig::new(ConditionId::new(0, 0).unwrap(), 42);
        assert_eq!(simulate_run(&cfg).unwrap(), simulate_run(&cfg).unwrap());
        let mut other = cfg.clone();
        other.seed = 43;
        assert_ne!(simulate_run(&cfg).unwrap(), simulate_run(&other).unwrap());
    }

    #[test]
    fn anti_viscosity_needs_damping() {
        let mut cfg = SimConfig::new(ConditionId::new(4, 0).unwrap(), 1);
        cfg.controller_kd = 0.0008;
        assert!(matches!(simulate_run(&cfg), Err(Error::InvalidConfig(_))));
        cfg.controller_kd = 0.0009;
        assert!(simulate_run(&cfg).is_ok());
    }

    #[test]
    fn runaway_force_reports_instability() {
        let mut cfg = SimConfig::new(ConditionId::new(1, 0).unwrap(), 1);
        cfg.controller_kp = 0.0;
        cfg.controller_kd = 0.0;
        cfg.noise_scale = 0.0;
        cfg.static_load_compensation = false;
        match simulate_run(&cfg) {
            Err(Error::UnstableSimulation { clamped, steps }) => {
                assert_eq!(steps, 16000);
                assert!(clamped > steps / 2);
            }
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn quantization_snaps_commands() {
        let mut cfg = SimConfig::new(ConditionId::new(5, 0).unwrap(), 11);
        cfg.emulate_quantization = true;
        let rec = simulate_run(&cfg).unwrap();
        for &f in rec.f_target_n() {
            let q = f / 0.003;
            assert!((q - q.round()).abs() < 1e-9, "command {f} off the grid");
        }
    }

    #[test]
    fn latency_shifts_commands() {
        let mut cfg = SimConfig::new(ConditionId::new(5, 0).unwrap(), 11);
        let immediate = simulate_run(&cfg).unwrap();
        cfg.emulate_latency = true;
        let delayed = simulate_run(&cfg).unwrap();
        assert_ne!(immediate.f_target_n(), delayed.f_target_n());
    }

    #[test]
    fn sensor_noise_perturbs_marker_commands() {
        let mut cfg = SimConfig::new(ConditionId::new(5, 0).unwrap(), 11);
        let clean = simulate_run(&cfg).unwrap();
        cfg.emulate_sensor_noise = true;
        let noisy = simulate_run(&cfg).unwrap();
        assert_ne!(clean.f_target_n(), noisy.f_target_n());
    }

    #[test]
    fn command_hold_spans_four_samples() {
        let mut cfg = SimConfig::new(ConditionId::new(5, 0).unwrap(), 17);
        cfg.drift_enabled = true;
        let rec = simulate_run(&cfg).unwrap();
        let f = rec.f_target_n();
        for i in 0..f.len() {
            assert_eq!(f[i], f[i - i % 4], "sample {i} broke the hold");
        }
        assert!(f.iter().any(|&x| x != f[0]), "markers never crossed");
    }

    proptest! {
        #[test]
        fn pitch_monotone(a in 0.0f64..10.0, b in 0.0f64..10.0) {
            let p = params();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(pitch_of_z(lo, &p).unwrap() <= pitch_of_z(hi, &p).unwrap());
        }

        #[test]
        fn pitch_octave_ratio(z in 0.0f64..6.0) {
            let p = params();
            // 4 semitones per mm: +3 mm is one octave below the cap.
            let lo = pitch_of_z(z, &p).unwrap();
            let hi = pitch_of_z(z + 3.0, &p).unwrap();
            prop_assume!(hi < p.tone_cap_hz);
            prop_assert!((hi / lo - 2.0).abs() < 1e-9);
        }

        #[test]
        fn marker_force_only_three_levels(z in 0.0f64..10.0) {
            let p = params();
            let f = condition_force(5, z, 0.0, &p).unwrap();
            prop_assert!(f == 0.0 || f == 0.022 || f == -0.022);
        }

        #[test]
        fn simulated_z_stays_in_workspace(seed in 0u64..30) {
            let mut cfg = SimConfig::new(ConditionId::new(0, 0).unwrap(), seed);
            cfg.noise_scale = 2.0;
            let rec = simulate_run(&cfg).unwrap();
            prop_assert!(rec.z_mm().iter().all(|&z| (0.0..=10.0).contains(&z)));
            prop_assert_eq!(rec.len(), 16000);
        }
    }
}
