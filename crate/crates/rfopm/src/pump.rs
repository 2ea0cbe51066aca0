//! Harmonic decomposition of periodic pumping-rate profiles.

use crate::algebra::{re, Spectrum, C64};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

/// A pumping-rate profile over one rf period. Rates are in rad/s (or any
/// consistent unit); `phase` is in radians of the rf cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PumpProfile {
    Square { peak: f64, duty: f64, phase: f64 },
    Cw { rate: f64 },
    /// `(t, rate)` samples covering `[0, period)`.
    Sampled { period: f64, samples: Vec<(f64, f64)> },
}

impl PumpProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            PumpProfile::Square { peak, duty, phase } => {
                check_duty(*duty)?;
                if !(*peak >= 0.0) || !phase.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "square pump needs peak >= 0 and finite phase (peak {peak}, phase {phase})"
                    )));
                }
            }
            PumpProfile::Cw { rate } => {
                if !(*rate >= 0.0) {
                    return Err(Error::InvalidParameter(format!("cw rate {rate} < 0")));
                }
            }
            PumpProfile::Sampled { period, samples } => {
                if !(*period > 0.0) || samples.is_empty() {
                    return Err(Error::InvalidParameter("empty or zero-period samples".into()));
                }
            }
        }
        Ok(())
    }

    /// Coefficients `c_n`, `|n| <= cutoff`.
    pub fn spectrum(&self, cutoff: usize) -> Result<Spectrum<C64>> {
        self.validate()?;
        match self {
            PumpProfile::Square { peak, duty, phase } => {
                decompose_square(*peak, *duty, *phase, cutoff.max(1))
            }
            PumpProfile::Cw { rate } => decompose_cw(*rate).map(|s| s.truncate(cutoff)),
            PumpProfile::Sampled { period, samples } => {
                decompose_sampled(*period, samples, cutoff.max(1))
            }
        }
    }

    /// Mean rate (the zeroth coefficient).
    pub fn mean_rate(&self) -> f64 {
        match self {
            PumpProfile::Square { peak, duty, .. } => peak * duty,
            PumpProfile::Cw { rate } => *rate,
            PumpProfile::Sampled { .. } => self.spectrum(1).map(|s| s.get(0).re).unwrap_or(0.0),
        }
    }
}

fn check_duty(d: f64) -> Result<()> {
    if (0.0..=1.0).contains(&d) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("duty cycle {d} outside [0, 1]")))
    }
}

/// Square wave of height `peak`, on for a fraction `duty` of the period
/// (pulse centred on `t = 0`), delayed by `phase / ω`.
pub fn decompose_square(peak: f64, duty: f64, phase: f64, cutoff: usize) -> Result<Spectrum<C64>> {
    check_duty(duty)?;
    if cutoff < 1 {
        return Err(Error::InvalidParameter("pump cutoff must be >= 1".into()));
    }
    Ok(Spectrum::from_fn(cutoff, |n| {
        if n == 0 {
            re(peak * duty)
        } else {
            let k = n.unsigned_abs() as f64;
            let mag = peak / (k * PI) * (k * PI * duty).sin();
            C64::from_polar(1.0, -(n as f64) * phase) * mag
        }
    }))
}

pub fn decompose_cw(rate: f64) -> Result<Spectrum<C64>> {
    if !(rate >= 0.0) {
        return Err(Error::InvalidParameter(format!("cw rate {rate} < 0")));
    }
    Ok(Spectrum::constant(re(rate)))
}

/// Trapezoidal Fourier coefficients of a sampled real profile. The samples
/// are closed periodically (the last interval wraps to `t = period`).
pub fn decompose_sampled(period: f64, samples: &[(f64, f64)], cutoff: usize) -> Result<Spectrum<C64>> {
    if cutoff < 1 {
        return Err(Error::InvalidParameter("pump cutoff must be >= 1".into()));
    }
    if samples.len() < 4 * cutoff + 1 {
        return Err(Error::InvalidParameter(format!(
            "{} samples cannot resolve {} harmonics (need at least {})",
            samples.len(),
            cutoff,
            4 * cutoff + 1
        )));
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0))
        || samples[0].0 < 0.0
        || samples[samples.len() - 1].0 >= period
    {
        return Err(Error::InvalidParameter(
            "sample times must increase strictly inside [0, period)".into(),
        ));
    }
    let w = 2.0 * PI / period;
    let mut pts: Vec<(f64, f64)> = samples.to_vec();
    pts.push((samples[0].0 + period, samples[0].1));
    let half: Vec<C64> = (0..=cutoff as i64)
        .map(|n| {
            let mut acc = C64::default();
            for p in pts.windows(2) {
                let (t0, y0) = p[0];
                let (t1, y1) = p[1];
                let f0 = C64::from_polar(y0, -(n as f64) * w * t0);
                let f1 = C64::from_polar(y1, -(n as f64) * w * t1);
                acc += (f0 + f1) * (0.5 * (t1 - t0));
            }
            acc / period
        })
        .collect();
    Ok(Spectrum::from_fn(cutoff, |n| {
        if n >= 0 {
            if n == 0 {
                re(half[0].re)
            } else {
                half[n as usize]
            }
        } else {
            half[(-n) as usize].conj()
        }
    }))
}

/// Reads a two-column CSV `time_s, rate_rad_per_s`; lines starting with `#`
/// and a non-numeric header line are skipped.
pub fn read_samples_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = (cols.len() == 2)
            .then(|| Some((cols[0].parse::<f64>().ok()?, cols[1].parse::<f64>().ok()?)))
            .flatten();
        match parsed {
            Some(p) => out.push(p),
            None if out.is_empty() && k == 0 => continue,
            None => {
                return Err(Error::Config(format!(
                    "{}:{}: expected two numeric columns",
                    path.display(),
                    k + 1
                )))
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Coefficient;

    fn square_samples(peak: f64, duty: f64, m: usize) -> Vec<(f64, f64)> {
        // Period 1, pulse centred on t = 0.
        (0..m)
            .map(|k| {
                let t = k as f64 / m as f64;
                let d = t.min(1.0 - t);
                (t, if d < duty / 2.0 { peak } else { 0.0 })
            })
            .collect()
    }

    #[test]
    fn square_coefficients() {
        let s = decompose_square(1.0, 0.1, 0.0, 5).unwrap();
        assert!((s.get(0) - re(0.1)).norm() < 1e-15);
        let c1 = (0.1 * PI).sin() / PI;
        assert!((s.get(1) - re(c1)).norm() < 1e-15);
        assert!((s.get(-1) - re(c1)).norm() < 1e-15);
        let full = decompose_square(1.0, 1.0, 0.0, 3).unwrap();
        assert!(full.get(1).norm() < 1e-15);
        assert!(decompose_square(1.0, 1.2, 0.0, 3).is_err());
        assert!(decompose_square(1.0, -0.1, 0.0, 3).is_err());
    }

    #[test]
    fn square_matches_quadrature() {
        // Fine trapezoidal integral of the ideal wave as the oracle.
        let m = 10_000;
        let s = decompose_square(1.0, 0.1, 0.0, 3).unwrap();
        let q = decompose_sampled(1.0, &square_samples(1.0, 0.1, m), 3).unwrap();
        for n in -3..=3 {
            assert!((s.get(n) - q.get(n)).norm() < 1e-4, "n={n}");
        }
        let c1: C64 = (0..m)
            .map(|k| {
                let t = k as f64 / m as f64;
                let d = t.min(1.0 - t);
                let y = if d < 0.05 { 1.0 } else { 0.0 };
                C64::from_polar(y, -2.0 * PI * t)
            })
            .sum::<C64>()
            / m as f64;
        assert!((c1 - s.get(1)).norm() < 1e-3);
    }

    #[test]
    fn phase_is_a_pure_factor() {
        let s0 = decompose_square(2.0, 0.3, 0.0, 6).unwrap();
        let s = decompose_square(2.0, 0.3, 0.9, 6).unwrap();
        for n in -6..=6i64 {
            let f = C64::from_polar(1.0, -(n as f64) * 0.9);
            assert!((s.get(n) - s0.get(n) * f).norm() < 1e-15);
        }
        assert!(s.conjugate_asymmetry() < 1e-15);
    }

    #[test]
    fn full_duty_is_cw() {
        let s = decompose_square(0.7, 1.0, 0.4, 5).unwrap();
        let c = decompose_cw(0.7).unwrap().truncate(5);
        for n in -5..=5 {
            assert!((s.get(n) - c.get(n)).norm() < 1e-12);
        }
    }

    #[test]
    fn cw_spectrum() {
        let z = decompose_cw(0.0).unwrap();
        assert_eq!(z.get(0), re(0.0));
        let c = decompose_cw(0.01).unwrap();
        assert_eq!(c.get(0), re(0.01));
        assert_eq!(c.get(1), re(0.0));
        assert_eq!(c.eval(1.234), re(0.01));
        assert!(decompose_cw(-1.0).is_err());
    }

    #[test]
    fn sampled_profiles() {
        let m = 64;
        let flat: Vec<(f64, f64)> = (0..m).map(|k| (k as f64 / m as f64 * 2.0, 0.3)).collect();
        let s = decompose_sampled(2.0, &flat, 5).unwrap();
        assert!((s.get(0) - re(0.3)).norm() < 1e-15);
        for n in 1..=5 {
            assert!(s.get(n).norm() < 1e-12);
        }

        let sq = decompose_sampled(1.0, &square_samples(1.0, 0.5, 20_000), 3).unwrap();
        assert!((sq.get(1).re - 1.0 / PI).abs() < 1e-4);

        let raised: Vec<(f64, f64)> = (0..m)
            .map(|k| {
                let t = k as f64 / m as f64;
                (t, 2.0 * (1.0 + (2.0 * PI * t).cos()) / 2.0)
            })
            .collect();
        let r = decompose_sampled(1.0, &raised, 4).unwrap();
        assert!((r.get(1) - re(0.5)).norm() < 1e-12);
        assert!((r.get(-1) - re(0.5)).norm() < 1e-12);

        assert!(decompose_sampled(1.0, &flat[..8], 2).is_err());
    }

    #[test]
    fn parseval_is_monotone_for_square_waves() {
        // (1/T) ∫ Γ² = peak² d.
        let (peak, d) = (1.0, 0.2);
        let mut last = 0.0;
        for n in 1..40 {
            let s = decompose_square(peak, d, 0.3, n).unwrap();
            let e: f64 = s.iter().map(|(_, c)| c.norm_sqr()).sum();
            assert!(e >= last - 1e-15);
            assert!(e <= peak * peak * d + 1e-12);
            last = e;
        }
        assert!(peak * peak * d - last < 0.01);
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("rfopm-pump-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("p.csv");
        std::fs::write(&p, "time_s,rate_rad_per_s\n0,1\n0.5,2\n# tail\n").unwrap();
        let s = read_samples_csv(&p).unwrap();
        assert_eq!(s, vec![(0.0, 1.0), (0.5, 2.0)]);
        std::fs::write(&p, "0,1\nx,y\n").unwrap();
        assert!(read_samples_csv(&p).is_err());
        let sp = PumpProfile::Cw { rate: 1.0 }.spectrum(2).unwrap();
        assert!(sp.get(1).max_abs() < 1e-15);
    }
}
