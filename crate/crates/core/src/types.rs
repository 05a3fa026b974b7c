use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Experimental condition: haptic law `n` (0..=5) crossed with musical control `m` (0..=1).
///
/// Renders and parses as `"n,m"`, e.g. `"3,1"` for viscosity with musical control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConditionId {
    n: u8,
    m: u8,
}

pub const HAPTIC_CONDITIONS: u8 = 6;
pub const MUSICAL_CONDITIONS: u8 = 2;

impl ConditionId {
    pub fn new(n: u8, m: u8) -> Result<Self> {
        if n >= HAPTIC_CONDITIONS || m >= MUSICAL_CONDITIONS {
            return Err(Error::InvalidCondition(format!("{n},{m}")));
        }
        Ok(ConditionId { n, m })
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn m(&self) -> u8 {
        self.m
    }

    /// All 12 conditions, haptic index varying fastest within each musical block.
    pub fn all() -> impl Iterator<Item = ConditionId> {
        (0..MUSICAL_CONDITIONS)
            .flat_map(|m| (0..HAPTIC_CONDITIONS).map(move |n| ConditionId { n, m }))
    }

    /// Column-style name used in amplitude tables, e.g. `condition30`.
    pub fn group_name(&self) -> String {
        format!("condition{}{}", self.n, self.m)
    }

    pub fn from_group_name(name: &str) -> Result<Self> {
        let digits = name
            .strip_prefix("condition")
            .filter(|d| d.len() == 2 && d.chars().all(|c| c.is_ascii_digit()))
            .ok_or_else(|| Error::InvalidCondition(name.to_string()))?;
        let n = digits.as_bytes()[0] - b'0';
        let m = digits.as_bytes()[1] - b'0';
        ConditionId::new(n, m).map_err(|_| Error::InvalidCondition(name.to_string()))
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.n, self.m)
    }
}

impl FromStr for ConditionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidCondition(s.to_string());
        let (n, m) = s.split_once(',').ok_or_else(bad)?;
        let n: u8 = n.trim().parse().map_err(|_| bad())?;
        let m: u8 = m.trim().parse().map_err(|_| bad())?;
        ConditionId::new(n, m).map_err(|_| bad())
    }
}

/// Human-readable names for the two factors of a condition.
pub fn condition_label(id: ConditionId) -> (&'static str, &'static str) {
    let haptic = match id.n() {
        0 => "zero force",
        1 => "positive force",
        2 => "negative force",
        3 => "viscosity",
        4 => "anti-viscosity",
        _ => "positional markers",
    };
    let musical = match id.m() {
        0 => "no musical control",
        _ => "musical control",
    };
    (haptic, musical)
}

/// Haptic rendering constants shared by the device and the simulator.
///
/// Force laws, in the order of the haptic index:
/// 0 zero force, 1 constant +0.25 N, 2 constant -0.25 N,
/// 3 viscosity -0.0030 N per mm/s, 4 anti-viscosity +0.0008 N per mm/s,
/// 5 alternating constant-force cells of 0.2 mm with a 0.001 mm unforced gap.
#[derive(Debug, Clone, PartialEq)]
pub struct HapticParams {
    pub pos_force_n: f64,
    pub neg_force_n: f64,
    /// Force per unit velocity, N per mm/s. Negative: opposes motion.
    pub viscosity_n_per_mm_s: f64,
    /// Force per unit velocity, N per mm/s. Positive: amplifies motion.
    pub anti_viscosity_n_per_mm_s: f64,
    pub marker_force_n: f64,
    pub marker_interval_mm: f64,
    pub marker_gap_mm: f64,
    /// Lowest z position rendered, mm.
    pub workspace_base_mm: f64,
    /// Workspace height above the base, mm.
    pub workspace_height_mm: f64,
    pub tone_base_hz: f64,
    pub tone_cap_hz: f64,
    pub tone_semitones_per_mm: f64,
    /// Audio rate of the noise bed heard in m=0 runs, Hz. Metadata only.
    pub noise_lowpass_hz: f64,
    pub noise_highpass_hz: f64,
}

impl Default for HapticParams {
    fn default() -> Self {
        HapticParams {
            pos_force_n: 0.25,
            neg_force_n: -0.25,
            viscosity_n_per_mm_s: -0.0030,
            anti_viscosity_n_per_mm_s: 0.0008,
            marker_force_n: 0.022,
            marker_interval_mm: 0.2,
            marker_gap_mm: 0.001,
            workspace_base_mm: 0.0,
            workspace_height_mm: 10.0,
            tone_base_hz: 440.0,
            tone_cap_hz: 8000.0,
            tone_semitones_per_mm: 4.0,
            noise_lowpass_hz: 1000.0,
            noise_highpass_hz: 220.0,
        }
    }
}

impl HapticParams {
    pub fn z_max_mm(&self) -> f64 {
        self.workspace_base_mm + self.workspace_height_mm
    }
}

/// Acquisition timing and device resolution constants.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingSpec {
    pub position_rate_hz: u32,
    pub force_rate_hz: u32,
    pub run_duration_s: f64,
    pub moving_mass_kg: f64,
    pub command_latency_s: f64,
    pub force_resolution_n: f64,
    pub position_noise_mm: f64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec {
            position_rate_hz: 4000,
            force_rate_hz: 1000,
            run_duration_s: 4.0,
            moving_mass_kg: 0.010,
            command_latency_s: 0.004,
            force_resolution_n: 0.003,
            position_noise_mm: 0.2,
        }
    }
}

impl SamplingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.position_rate_hz == 0 || self.force_rate_hz == 0 {
            return Err(Error::InvalidConfig("sample rates must be positive".into()));
        }
        if !self.position_rate_hz.is_multiple_of(self.force_rate_hz) {
            return Err(Error::InvalidConfig(format!(
                "position rate {} Hz is not a multiple of force rate {} Hz",
                self.position_rate_hz, self.force_rate_hz
            )));
        }
        if self.run_duration_s <= 0.0 {
            return Err(Error::InvalidConfig("run duration must be positive".into()));
        }
        if self.moving_mass_kg <= 0.0 {
            return Err(Error::InvalidConfig("moving mass must be positive".into()));
        }
        Ok(())
    }

    pub fn samples_per_run(&self) -> usize {
        (self.run_duration_s * self.position_rate_hz as f64).round() as usize
    }

    pub fn dt_s(&self) -> f64 {
        1.0 / self.position_rate_hz as f64
    }

    /// Position samples per force command tick.
    pub fn samples_per_command(&self) -> usize {
        (self.position_rate_hz / self.force_rate_hz) as usize
    }

    /// Command latency expressed in force ticks, rounded to the nearest tick.
    pub fn latency_ticks(&self) -> usize {
        (self.command_latency_s * self.force_rate_hz as f64).round() as usize
    }
}

/// One recorded 4 s run: position, velocity and commanded-force series on the
/// position-sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    condition: ConditionId,
    subject: Option<u32>,
    run_index: Option<u32>,
    z_mm: Vec<f64>,
    v_mm_s: Vec<f64>,
    f_target_n: Vec<f64>,
}

impl RunRecord {
    pub fn new(
        condition: ConditionId,
        subject: Option<u32>,
        run_index: Option<u32>,
        z_mm: Vec<f64>,
        v_mm_s: Vec<f64>,
        f_target_n: Vec<f64>,
    ) -> Result<Self> {
        if z_mm.is_empty() {
            return Err(Error::EmptySeries);
        }
        if z_mm.len() != v_mm_s.len() || z_mm.len() != f_target_n.len() {
            return Err(Error::LengthMismatch {
                z: z_mm.len(),
                v: v_mm_s.len(),
                f: f_target_n.len(),
            });
        }
        if let Some(&bad) = z_mm.iter().find(|z| !(0.0..=10.0).contains(*z)) {
            return Err(Error::ZOutOfRange(bad));
        }
        Ok(RunRecord {
            condition,
            subject,
            run_index,
            z_mm,
            v_mm_s,
            f_target_n,
        })
    }

    pub fn condition(&self) -> ConditionId {
        self.condition
    }

    pub fn subject(&self) -> Option<u32> {
        self.subject
    }

    pub fn run_index(&self) -> Option<u32> {
        self.run_index
    }

    pub fn z_mm(&self) -> &[f64] {
        &self.z_mm
    }

    pub fn v_mm_s(&self) -> &[f64] {
        &self.v_mm_s
    }

    pub fn f_target_n(&self) -> &[f64] {
        &self.f_target_n
    }

    pub fn len(&self) -> usize {
        self.z_mm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_mm.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condition_round_trip() {
        for id in ConditionId::all() {
            let s = id.to_string();
            assert_eq!(s.parse::<ConditionId>().unwrap(), id);
            assert_eq!(ConditionId::from_group_name(&id.group_name()).unwrap(), id);
        }
        assert_eq!(ConditionId::all().count(), 12);
    }

    #[test]
    fn condition_rejects_out_of_range() {
        assert!(ConditionId::new(6, 0).is_err());
        assert!(ConditionId::new(0, 2).is_err());
        assert!("6,0".parse::<ConditionId>().is_err());
        assert!("0".parse::<ConditionId>().is_err());
        assert!("a,b".parse::<ConditionId>().is_err());
        assert!(ConditionId::from_group_name("condition7").is_err());
        assert!(ConditionId::from_group_name("condition71").is_err());
    }

    #[test]
    fn labels() {
        let c = ConditionId::new(3, 1).unwrap();
        assert_eq!(condition_label(c), ("viscosity", "musical control"));
        let c = ConditionId::new(0, 0).unwrap();
        assert_eq!(condition_label(c), ("zero force", "no musical control"));
    }

    #[test]
    fn sampling_defaults() {
        let s = SamplingSpec::default();
        s.validate().unwrap();
        assert_eq!(s.samples_per_run(), 16000);
        assert_eq!(s.samples_per_command(), 4);
        assert_eq!(s.latency_ticks(), 4);
        assert_eq!(s.dt_s(), 0.00025);
    }

    #[test]
    fn sampling_rejects_non_multiple_rates() {
        let s = SamplingSpec {
            position_rate_hz: 4000,
            force_rate_hz: 3000,
            ..SamplingSpec::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn run_record_validates() {
        let c = ConditionId::new(0, 0).unwrap();
        let ok = RunRecord::new(c, None, None, vec![5.0; 4], vec![0.0; 4], vec![0.0; 4]);
        assert!(ok.is_ok());

        let bad_len = RunRecord::new(c, None, None, vec![5.0; 4], vec![0.0; 3], vec![0.0; 4]);
        assert!(matches!(bad_len, Err(Error::LengthMismatch { .. })));

        let bad_z = RunRecord::new(c, None, None, vec![10.5], vec![0.0], vec![0.0]);
        assert!(matches!(bad_z, Err(Error::ZOutOfRange(_))));

        let empty = RunRecord::new(c, None, None, vec![], vec![], vec![]);
        assert!(matches!(empty, Err(Error::EmptySeries)));
    }

    #[test]
    fn haptic_defaults() {
        let p = HapticParams::default();
        assert_eq!(p.z_max_mm(), 10.0);
        assert_eq!(p.marker_interval_mm, 0.2);
        assert!(p.viscosity_n_per_mm_s < 0.0);
        assert!(p.anti_viscosity_n_per_mm_s > 0.0);
    }
}
