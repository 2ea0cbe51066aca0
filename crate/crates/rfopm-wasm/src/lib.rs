//! Browser bindings for the demo page in `www/`. Each export returns a flat
//! `Float64Array` of fixed-width rows.
//!
//! The plain functions hold the logic so they can be tested natively; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use rfopm::config::{linspace, PumpSection, SimulationConfig};
use rfopm::pump::decompose_square;
use rfopm::sim::{sweep_pump_phase, sweep_static_field};
use std::f64::consts::PI;
use wasm_bindgen::prelude::*;

fn demo_config(omega_rf_frac: f64, ext_x_frac: f64, ext_y_frac: f64, duty: f64) -> Result<SimulationConfig, String> {
    SimulationConfig::default()
        .edit(|f| {
            f.field.omega_rf_frac = omega_rf_frac;
            f.field.omega_ext_frac = [ext_x_frac, ext_y_frac, 0.0];
            f.pump = PumpSection::Square { peak_frac: 0.01, duty, phase_rad: 0.0 };
        })
        .map_err(|e| e.to_string())
}

/// Rows `[Ω_dc/ω, h_x, h_y, h_z]`; failed points are NaN.
pub fn static_sweep_rows(
    omega_rf_frac: f64,
    ext_x_frac: f64,
    ext_y_frac: f64,
    duty: f64,
    start: f64,
    stop: f64,
    points: usize,
) -> Result<Vec<f64>, String> {
    if !(2..=401).contains(&points) {
        return Err("points must be in 2..=401".into());
    }
    let cfg = demo_config(omega_rf_frac, ext_x_frac, ext_y_frac, duty)?;
    let res = sweep_static_field(&cfg, &linspace(start, stop, points), 1).map_err(|e| e.to_string())?;
    Ok(res
        .rows
        .iter()
        .flat_map(|r| {
            let s = r.signals();
            [r.axis[0], s.map_or(f64::NAN, |s| s.hx), s.map_or(f64::NAN, |s| s.hy), s.map_or(f64::NAN, |s| s.hz)]
        })
        .collect())
}

/// Rows `[θ/2π, Γ_p(θ)/Γ_b]` of the square pump rebuilt from `harmonics`
/// Fourier terms.
pub fn pump_profile_rows(duty: f64, phase_rad: f64, harmonics: usize, samples: usize) -> Result<Vec<f64>, String> {
    if harmonics > 200 || !(2..=4096).contains(&samples) {
        return Err("harmonics must be <= 200 and samples in 2..=4096".into());
    }
    let s = decompose_square(1.0, duty, phase_rad, harmonics.max(1)).map_err(|e| e.to_string())?;
    let s = s.truncate(harmonics);
    Ok((0..samples)
        .flat_map(|k| {
            let u = k as f64 / (samples - 1) as f64;
            [u, s.eval(2.0 * PI * u).re]
        })
        .collect())
}

/// Rows `[φ, h_x, h_y, h_z]` over the pump phase against the 2ω reference,
/// at `Ω_dc = ω`.
pub fn phase_sweep_rows(omega_rf_frac: f64, ext_x_frac: f64, ext_y_frac: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(2..=361).contains(&points) {
        return Err("points must be in 2..=361".into());
    }
    let cfg = demo_config(omega_rf_frac, ext_x_frac, ext_y_frac, 0.1)?;
    let res = sweep_pump_phase(&cfg, &linspace(0.0, 2.0 * PI, points), 1).map_err(|e| e.to_string())?;
    Ok(res
        .rows
        .iter()
        .flat_map(|r| {
            let s = r.signals();
            [r.axis[0], s.map_or(f64::NAN, |s| s.hx), s.map_or(f64::NAN, |s| s.hy), s.map_or(f64::NAN, |s| s.hz)]
        })
        .collect())
}

#[wasm_bindgen]
pub fn static_sweep(
    omega_rf_frac: f64,
    ext_x_frac: f64,
    ext_y_frac: f64,
    duty: f64,
    start: f64,
    stop: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    static_sweep_rows(omega_rf_frac, ext_x_frac, ext_y_frac, duty, start, stop, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn pump_profile(duty: f64, phase_rad: f64, harmonics: usize, samples: usize) -> Result<Vec<f64>, JsError> {
    pump_profile_rows(duty, phase_rad, harmonics, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn phase_sweep(omega_rf_frac: f64, ext_x_frac: f64, ext_y_frac: f64, points: usize) -> Result<Vec<f64>, JsError> {
    phase_sweep_rows(omega_rf_frac, ext_x_frac, ext_y_frac, points).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_rows_are_four_wide() {
        let v = static_sweep_rows(0.05, 0.0, 0.0, 0.1, 0.98, 1.02, 5).unwrap();
        assert_eq!(v.len(), 20);
        assert_eq!(v[8], 1.0);
        assert!(v[11] > 0.0);
        assert!(static_sweep_rows(0.05, 0.0, 0.0, 0.1, 0.9, 1.1, 1).is_err());
        assert!(static_sweep_rows(0.05, 0.0, 0.0, 1.5, 0.9, 1.1, 3).is_err());
    }

    #[test]
    fn pump_profile_tracks_the_pulse() {
        let v = pump_profile_rows(0.2, 0.0, 60, 101).unwrap();
        assert_eq!(v.len(), 202);
        // Pulse centred on θ = 0, off at half period.
        assert!((v[1] - 1.0).abs() < 0.1);
        assert!(v[2 * 50 + 1].abs() < 0.05);
        let mean: f64 = (0..100).map(|k| v[2 * k + 1]).sum::<f64>() / 100.0;
        assert!((mean - 0.2).abs() < 1e-2);
    }

    #[test]
    fn phase_rows() {
        let v = phase_sweep_rows(0.05, 0.0, 0.0, 3).unwrap();
        assert_eq!(v.len(), 12);
        assert!(v[3] > 0.0 && v[7] < 0.0);
        assert!((v[3] - v[11]).abs() < 1e-9 * v[3].abs());
    }
}
