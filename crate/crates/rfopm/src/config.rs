//! Simulation configuration: a TOML document in which every frequency and
//! rate is a fraction of the rf angular frequency (`*_frac`), plus one
//! absolute `rf_frequency_hz`. Everything is converted to rad/s at load.

use crate::error::{Error, Result};
use crate::generators::{FieldConfig, RelaxationConfig, StateLabel};
use crate::observables::ProbeConfig;
use crate::pump::{read_samples_csv, PumpProfile};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementMode {
    /// Demodulate the pumped steady state directly.
    SingleStep,
    /// Pump to steady state, then cycle-average the pump-free evolution.
    #[default]
    DoubleStep,
}

/// Floquet cutoff: fixed, or raised until the solution stops changing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "QRaw", into = "QRaw")]
pub enum QSetting {
    Fixed(usize),
    Auto,
}

impl Default for QSetting {
    fn default() -> Self {
        QSetting::Fixed(5)
    }
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum QRaw {
    Int(i64),
    Str(String),
}

impl TryFrom<QRaw> for QSetting {
    type Error = String;
    fn try_from(r: QRaw) -> std::result::Result<Self, String> {
        match r {
            QRaw::Int(q) if q >= 1 => Ok(QSetting::Fixed(q as usize)),
            QRaw::Int(q) => Err(format!("Q must be >= 1, got {q}")),
            QRaw::Str(s) => s.parse().map_err(|e: Error| e.to_string()),
        }
    }
}

impl From<QSetting> for QRaw {
    fn from(q: QSetting) -> Self {
        match q {
            QSetting::Fixed(q) => QRaw::Int(q as i64),
            QSetting::Auto => QRaw::Str("auto".into()),
        }
    }
}

impl std::str::FromStr for QSetting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(QSetting::Auto);
        }
        match s.parse::<usize>() {
            Ok(q) if q >= 1 => Ok(QSetting::Fixed(q)),
            _ => Err(Error::Config(format!("Q must be a positive integer or 'auto', got '{s}'"))),
        }
    }
}

/// Either an explicit list or `{ start, stop, points }` (inclusive).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl AxisSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            AxisSpec::Values(v) => v.clone(),
            AxisSpec::Range { start, stop, points } => linspace(*start, *stop, *points),
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("sweep axis must hold at least one finite value".into()));
        }
        Ok(v)
    }
}

pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![start],
        n => (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSection {
    pub omega_rf_frac: f64,
    pub omega_dc_frac: f64,
    pub omega_ext_frac: [f64; 3],
}

impl Default for FieldSection {
    fn default() -> Self {
        FieldSection { omega_rf_frac: 0.05, omega_dc_frac: 1.0, omega_ext_frac: [0.0; 3] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelaxationSection {
    pub gamma_frac: [f64; 3],
    pub spin: f64,
}

impl Default for RelaxationSection {
    fn default() -> Self {
        RelaxationSection { gamma_frac: [0.001; 3], spin: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PumpSection {
    Square { peak_frac: f64, duty: f64, phase_rad: f64 },
    Cw { rate_frac: f64 },
    /// Two CSV columns: time as a fraction of the rf period in `[0, 1)`,
    /// and the rate as a fraction of the rf angular frequency.
    Sampled { csv: PathBuf },
}

impl Default for PumpSection {
    fn default() -> Self {
        PumpSection::Square { peak_frac: 0.01, duty: 0.1, phase_rad: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub omega_dc_frac: AxisSpec,
    pub duty: AxisSpec,
    pub omega_rf_frac: AxisSpec,
    /// Pump phase against the 2ω reference, radians.
    pub phase_rad: AxisSpec,
    pub ext_x_frac: AxisSpec,
    pub ext_y_frac: AxisSpec,
    pub ext_z_frac: AxisSpec,
    /// Resonance position for the 3D operating point; found by a static
    /// sweep when absent.
    pub b_res_frac: Option<f64>,
    /// Finite-difference step for the 3D sensitivities.
    pub fd_step_frac: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            omega_dc_frac: AxisSpec::Range { start: 0.9, stop: 1.1, points: 201 },
            duty: AxisSpec::Values(vec![0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14, 0.16, 0.20, 0.30]),
            omega_rf_frac: AxisSpec::Values(vec![0.005, 0.01, 0.015, 0.02, 0.025, 0.03, 0.04, 0.05, 0.06, 0.08]),
            phase_rad: AxisSpec::Range { start: 0.0, stop: 2.0 * PI, points: 37 },
            ext_x_frac: AxisSpec::Range { start: -0.01, stop: 0.01, points: 5 },
            ext_y_frac: AxisSpec::Range { start: -0.01, stop: 0.01, points: 5 },
            ext_z_frac: AxisSpec::Values(vec![0.0]),
            b_res_frac: None,
            fd_step_frac: 1e-3,
        }
    }
}

/// The document as written on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub rf_frequency_hz: f64,
    pub state: StateLabel,
    pub mode: MeasurementMode,
    pub q: QSetting,
    pub q_tol: f64,
    pub probe_periods: usize,
    pub field: FieldSection,
    pub relaxation: RelaxationSection,
    pub pump: PumpSection,
    pub probe: ProbeConfig,
    pub sweep: SweepSection,
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile {
            rf_frequency_hz: 5000.0,
            state: StateLabel::StretchedX,
            mode: MeasurementMode::default(),
            q: QSetting::default(),
            q_tol: 1e-8,
            probe_periods: 1,
            field: FieldSection::default(),
            relaxation: RelaxationSection::default(),
            pump: PumpSection::default(),
            probe: ProbeConfig::default(),
            sweep: SweepSection::default(),
        }
    }
}

/// A validated configuration in rad/s.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    /// rf angular frequency, rad/s.
    pub omega: f64,
    pub field: FieldConfig,
    pub relaxation: RelaxationConfig,
    pub pump: PumpProfile,
    pub state: StateLabel,
    pub q: QSetting,
    pub q_tol: f64,
    pub mode: MeasurementMode,
    pub probe_periods: usize,
    pub probe: ProbeConfig,
    pub sweep: SweepSection,
    /// SHA-256 of the effective document (and any sample file).
    pub hash: String,
    pub file: ConfigFile,
    pub base: PathBuf,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig::from_file(ConfigFile::default(), Path::new("."))
            .expect("default configuration is valid")
    }
}

impl SimulationConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    /// `base` resolves relative sample-file paths.
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_file(file, base)
    }

    pub fn from_file(file: ConfigFile, base: &Path) -> Result<Self> {
        if !(file.rf_frequency_hz > 0.0 && file.rf_frequency_hz.is_finite()) {
            return Err(Error::Config("rf_frequency_hz must be > 0".into()));
        }
        if !(file.q_tol > 0.0) || file.probe_periods == 0 {
            return Err(Error::Config("q_tol must be > 0 and probe_periods >= 1".into()));
        }
        let w = 2.0 * PI * file.rf_frequency_hz;
        let f = &file.field;
        let field = FieldConfig {
            omega_rf: f.omega_rf_frac * w,
            omega: w,
            omega_dc: f.omega_dc_frac * w,
            omega_ext: f.omega_ext_frac.map(|e| e * w),
        };
        let relaxation = RelaxationConfig {
            gamma: file.relaxation.gamma_frac.map(|g| g * w),
            spin: file.relaxation.spin,
        };
        let mut hasher = Sha256::new();
        hasher.update(toml::to_string(&file).map_err(|e| Error::Config(e.to_string()))?.as_bytes());
        let pump = match &file.pump {
            PumpSection::Square { peak_frac, duty, phase_rad } => {
                PumpProfile::Square { peak: peak_frac * w, duty: *duty, phase: *phase_rad }
            }
            PumpSection::Cw { rate_frac } => PumpProfile::Cw { rate: rate_frac * w },
            PumpSection::Sampled { csv } => {
                let path = if csv.is_absolute() { csv.clone() } else { base.join(csv) };
                let raw = read_samples_csv(&path).map_err(|e| Error::Config(e.to_string()))?;
                for (t, r) in &raw {
                    hasher.update(t.to_le_bytes());
                    hasher.update(r.to_le_bytes());
                }
                let period = 1.0 / file.rf_frequency_hz;
                PumpProfile::Sampled {
                    period,
                    samples: raw.iter().map(|(t, r)| (t * period, r * w)).collect(),
                }
            }
        };
        let hash = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
        let cfg = SimulationConfig {
            omega: w,
            field,
            relaxation,
            pump,
            state: file.state,
            q: file.q,
            q_tol: file.q_tol,
            mode: file.mode,
            probe_periods: file.probe_periods,
            probe: file.probe,
            sweep: file.sweep.clone(),
            hash,
            file,
            base: base.to_path_buf(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.field.validate().map_err(wrap)?;
        self.relaxation.validate().map_err(wrap)?;
        self.pump.validate().map_err(wrap)?;
        self.probe.validate().map_err(wrap)?;
        crate::generators::canonical_input_state(self.state, self.relaxation.spin).map_err(wrap)?;
        Ok(())
    }

    /// Rebuilds from an edited document, resolving sample files as before.
    pub fn edit(&self, f: impl FnOnce(&mut ConfigFile)) -> Result<Self> {
        let mut file = self.file.clone();
        f(&mut file);
        Self::from_file(file, &self.base)
    }

    /// rf period, s.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.file).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_converted_once() {
        let c = SimulationConfig::default();
        let w = 2.0 * PI * 5000.0;
        assert_eq!(c.omega, w);
        assert!((c.field.omega_rf - 0.05 * w).abs() < 1e-9);
        assert!((c.relaxation.gamma[0] - 0.001 * w).abs() < 1e-12);
        assert_eq!(c.mode, MeasurementMode::DoubleStep);
        assert_eq!(c.q, QSetting::Fixed(5));
        assert_eq!(c.hash.len(), 64);
    }

    #[test]
    fn parses_document() {
        let text = r#"
            rf_frequency_hz = 1000.0
            state = "aligned_m0_x"
            mode = "single_step"
            q = "auto"
            [field]
            omega_rf_frac = 0.03
            omega_ext_frac = [0.03, 0.03, 0.0]
            [pump]
            kind = "cw"
            rate_frac = 0.002
            [sweep]
            omega_dc_frac = [0.95, 1.0, 1.05]
        "#;
        let c = SimulationConfig::from_toml_str(text, Path::new(".")).unwrap();
        assert_eq!(c.q, QSetting::Auto);
        assert_eq!(c.mode, MeasurementMode::SingleStep);
        assert_eq!(c.state, StateLabel::AlignedM0X);
        assert!(matches!(c.pump, PumpProfile::Cw { rate } if (rate - 0.002 * 2000.0 * PI).abs() < 1e-9));
        assert_eq!(c.sweep.omega_dc_frac.values().unwrap(), vec![0.95, 1.0, 1.05]);
    }

    #[test]
    fn rejects_bad_documents() {
        for text in [
            "unknown_key = 1",
            "q = 0",
            "q = \"sometimes\"",
            "rf_frequency_hz = -5.0",
            "[pump]\nkind = \"square\"\npeak_frac = 0.01\nduty = 1.5\nphase_rad = 0.0",
            "[relaxation]\ngamma_frac = [0.0, 0.0, 0.0]\nspin = 1.3",
        ] {
            assert!(matches!(SimulationConfig::from_toml_str(text, Path::new(".")), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn hash_tracks_content_not_layout() {
        let a = SimulationConfig::from_toml_str("[field]\nomega_rf_frac = 0.05", Path::new(".")).unwrap();
        let b = SimulationConfig::from_toml_str("# comment\n[field]\nomega_rf_frac   =   0.05\n", Path::new(".")).unwrap();
        let c = SimulationConfig::from_toml_str("[field]\nomega_rf_frac = 0.04", Path::new(".")).unwrap();
        assert_eq!(a.hash, b.hash);
        assert_ne!(a.hash, c.hash);
        let d = a.edit(|f| f.field.omega_rf_frac = 0.04).unwrap();
        assert_eq!(d.hash, c.hash);
        assert_eq!(d.field, c.field);
    }

    #[test]
    fn sampled_pump_from_csv() {
        let dir = std::env::temp_dir().join(format!("rfopm-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let rows: String = (0..64).map(|k| format!("{},{}\n", k as f64 / 64.0, 0.01)).collect();
        std::fs::write(dir.join("p.csv"), format!("t,rate\n{rows}")).unwrap();
        let text = "[pump]\nkind = \"sampled\"\ncsv = \"p.csv\"";
        let c = SimulationConfig::from_toml_str(text, &dir).unwrap();
        let s = c.pump.spectrum(2).unwrap();
        assert!((s.get(0).re - 0.01 * c.omega).abs() < 1e-9 * c.omega);
        assert!(s.get(1).norm() < 1e-12 * c.omega);
        let e = c.edit(|f| f.field.omega_dc_frac = 0.9).unwrap();
        assert_eq!(e.pump, c.pump);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn axis_specs() {
        assert_eq!(AxisSpec::Range { start: 0.0, stop: 1.0, points: 3 }.values().unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(AxisSpec::Values(vec![]).values().is_err());
        assert_eq!("auto".parse::<QSetting>().unwrap(), QSetting::Auto);
        assert_eq!("7".parse::<QSetting>().unwrap(), QSetting::Fixed(7));
    }
}
