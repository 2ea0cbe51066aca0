//! Probe-light observables and resonance-profile characterization.

use crate::algebra::{re, C64};
use crate::error::{Error, Result};
use crate::floquet::{Demod, FloquetVector};
use serde::{Deserialize, Serialize};

/// Probe couplings. The defaults report bare spin-moment units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub g_f1: f64,
    pub g_f2: f64,
    pub s_y_in: f64,
    pub n_f: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { g_f1: 1.0, g_f2: 1.0, s_y_in: 1.0, n_f: 1.0 }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.g_f1, self.g_f2, self.s_y_in, self.n_f].iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidParameter("probe couplings must be >= 0".into()));
        }
        Ok(())
    }
}

/// `(h_X⁽ⁿ⁾, h_Y⁽ⁿ⁾)`: differences of the xx and yy entries of the
/// demodulated second moment.
pub fn h_quadratures(d: &Demod) -> Result<(f64, f64)> {
    if d.xr.len() != 9 {
        return Err(Error::InvalidParameter("h quadratures need second-moment data".into()));
    }
    Ok(((d.xr[0] - d.xr[4]).re, (d.xi[0] - d.xi[4]).re))
}

/// The three magnetometer signals `h_x = h_X⁽¹⁾`, `h_y = h_Y⁽¹⁾`, `h_z = h_X⁽²⁾`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Signals {
    pub hx: f64,
    pub hy: f64,
    pub hz: f64,
}

pub fn signals(first: &Demod, second: &Demod) -> Result<Signals> {
    if first.n != 1 || second.n != 2 {
        return Err(Error::MissingHarmonic { n: if first.n != 1 { 1 } else { 2 }, q: 0 });
    }
    let (hx, hy) = h_quadratures(first)?;
    let (hz, _) = h_quadratures(second)?;
    Ok(Signals { hx, hy, hz })
}

/// Voigt-geometry ellipticity amplitude of one harmonic.
pub fn stokes_voigt(h_x: f64, h_y: f64, probe: &ProbeConfig) -> C64 {
    C64::new(h_x, h_y) * (probe.g_f2 * probe.s_y_in * probe.n_f)
}

/// Faraday-rotation output harmonics `S_x'⁽ⁿ⁾ = S_x δ_{n0} − G_F1 S_y n_F ⟨F_z⟩⁽ⁿ⁾`.
pub fn stokes_faraday(p: &FloquetVector, s_x: f64, probe: &ProbeConfig) -> Result<Vec<(i64, C64)>> {
    if p.dim != 3 {
        return Err(Error::InvalidParameter("Faraday output needs a first-moment solution".into()));
    }
    let k = probe.g_f1 * probe.s_y_in * probe.n_f;
    Ok((-(p.q as i64)..=p.q as i64)
        .map(|n| {
            let base = if n == 0 { re(s_x) } else { re(0.0) };
            (n, base - p.block(n)[2] * k)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    /// Even line: peak over a baseline.
    Resonant,
    /// Odd line: antisymmetric about the center.
    Dispersive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceProfile {
    pub kind: TraceKind,
    pub amplitude: f64,
    pub linewidth: f64,
    pub center: f64,
    pub fom: f64,
    pub detected: bool,
    /// The half-maximum level was not reached inside the sweep; the
    /// linewidth is then a lower bound.
    pub truncated: bool,
}

pub const MIN_PROFILE_POINTS: usize = 32;
const FLAT: f64 = 1e-12;

/// Amplitude, linewidth and FOM of a sampled resonance by interpolation.
pub fn characterize_profile(x: &[f64], y: &[f64], kind: TraceKind) -> Result<ResonanceProfile> {
    if x.len() != y.len() || x.len() < MIN_PROFILE_POINTS {
        return Err(Error::InvalidParameter(format!(
            "profile needs >= {MIN_PROFILE_POINTS} matched samples (got {} / {})",
            x.len(),
            y.len()
        )));
    }
    let none = |kind| ResonanceProfile {
        kind,
        amplitude: 0.0,
        linewidth: 0.0,
        center: f64::NAN,
        fom: 0.0,
        detected: false,
        truncated: false,
    };
    match kind {
        TraceKind::Resonant => {
            let base = 0.5 * (y[0] + y[y.len() - 1]);
            let d: Vec<f64> = y.iter().map(|v| v - base).collect();
            let k = argmax(d.iter().map(|v| v.abs()));
            let amp = d[k];
            if amp.abs() < FLAT {
                return Ok(none(kind));
            }
            let half = amp.abs() / 2.0;
            let mut truncated = false;
            let mut i = k;
            while i > 0 && d[i].abs() > half {
                i -= 1;
            }
            let left = if d[i].abs() > half {
                truncated = true;
                x[0]
            } else {
                lerp_level(x[i], d[i].abs(), x[i + 1], d[i + 1].abs(), half)
            };
            let mut j = k;
            while j + 1 < x.len() && d[j].abs() > half {
                j += 1;
            }
            let right = if d[j].abs() > half {
                truncated = true;
                x[x.len() - 1]
            } else {
                lerp_level(x[j - 1], d[j - 1].abs(), x[j], d[j].abs(), half)
            };
            let lw = (right - left).abs();
            Ok(ResonanceProfile {
                kind,
                amplitude: amp,
                linewidth: lw,
                center: x[k],
                fom: if lw > 0.0 { amp.abs() / lw } else { 0.0 },
                detected: lw > 0.0,
                truncated,
            })
        }
        TraceKind::Dispersive => {
            let imax = argmax(y.iter().copied());
            let imin = argmax(y.iter().map(|v| -v));
            let half_pp = 0.5 * (y[imax] - y[imin]);
            if half_pp < FLAT {
                return Ok(none(kind));
            }
            let sign = if x[imax] >= x[imin] { 1.0 } else { -1.0 };
            let (lo, hi) = (imax.min(imin), imax.max(imin));
            let mid = 0.5 * (y[imax] + y[imin]);
            let center = (lo..hi)
                .find(|&k| (y[k] - mid) * (y[k + 1] - mid) <= 0.0)
                .map(|k| lerp_level(x[k], y[k], x[k + 1], y[k + 1], mid))
                .unwrap_or(0.5 * (x[lo] + x[hi]));
            let lw = (x[imax] - x[imin]).abs();
            Ok(ResonanceProfile {
                kind,
                amplitude: sign * half_pp,
                linewidth: lw,
                center,
                fom: if lw > 0.0 { half_pp / lw } else { 0.0 },
                detected: lw > 0.0,
                truncated: imax == 0 || imin == 0 || imax == x.len() - 1 || imin == x.len() - 1,
            })
        }
    }
}

fn argmax(v: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (k, x) in v.enumerate() {
        if x > best.1 {
            best = (k, x);
        }
    }
    best.0
}

/// `x` where the segment from `(x0, y0)` to `(x1, y1)` reaches `level`.
fn lerp_level(x0: f64, y0: f64, x1: f64, y1: f64, level: f64) -> f64 {
    if y1 == y0 {
        0.5 * (x0 + x1)
    } else {
        x0 + (level - y0) * (x1 - x0) / (y1 - y0)
    }
}

/// Sign changes of a sampled trace, located by linear interpolation.
pub fn zero_crossings(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 0..y.len().saturating_sub(1) {
        if y[k] == 0.0 {
            out.push(x[k]);
        } else if y[k] * y[k + 1] < 0.0 {
            out.push(lerp_level(x[k], y[k], x[k + 1], y[k + 1], 0.0));
        }
    }
    out
}

/// Divides each FOM by the largest of the set (presentation only).
pub fn normalize_fom(foms: &[f64]) -> Vec<f64> {
    let m = foms.iter().cloned().fold(0.0, f64::max);
    foms.iter().map(|f| if m > 0.0 { f / m } else { 0.0 }).collect()
}
