//! Pump-probe measurement sequence and parameter sweeps.

use crate::config::{MeasurementMode, PumpSection, QSetting, SimulationConfig};
use crate::error::{Error, Result};
use crate::floquet::{
    check_convergence, demodulate, relative_change, steady_state, CycleAverager, FloquetSystem,
    SteadyState, Q_MAX,
};
use crate::generators::canonical_input_state;
use crate::observables::{characterize_profile, signals, ResonanceProfile, Signals, TraceKind};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Outcome of one parameter point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub signals: Signals,
    pub q: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Second-moment lab system of a configuration at cutoff `q`.
pub fn second_moment_system(cfg: &SimulationConfig, q: usize) -> Result<FloquetSystem> {
    let input = canonical_input_state(cfg.state, cfg.relaxation.spin)?;
    let pump = cfg.pump.spectrum(2 * q)?;
    FloquetSystem::lab_second_moment(&cfg.field, &cfg.relaxation, &pump, &input.x_in, q)
}

/// Pumped steady state at the configured cutoff (raised as needed for auto).
pub fn pumped_state(cfg: &SimulationConfig) -> Result<SteadyState> {
    match cfg.q {
        QSetting::Fixed(q) => steady_state(&second_moment_system(cfg, q.max(2))?),
        QSetting::Auto => {
            let r = check_convergence(|q| second_moment_system(cfg, q), 2, cfg.q_tol)?;
            Ok(r.state)
        }
    }
}

/// Caches the pump-free probe operator per cutoff, since it depends only on
/// the fields and relaxation, not on the pump.
pub struct ProbeStage<'a> {
    cfg: &'a SimulationConfig,
    cache: HashMap<usize, CycleAverager>,
}

impl<'a> ProbeStage<'a> {
    pub fn new(cfg: &'a SimulationConfig) -> Self {
        ProbeStage { cfg, cache: HashMap::new() }
    }

    /// Demodulated signals of a pumped steady state `s` computed with the
    /// same fields as this stage.
    pub fn measure(&mut self, s: &SteadyState) -> Result<PointResult> {
        let x = match self.cfg.mode {
            MeasurementMode::SingleStep => s.x.clone(),
            MeasurementMode::DoubleStep => {
                if !self.cache.contains_key(&s.q) {
                    let sys = second_moment_system(self.cfg, s.q)?.without_pump();
                    self.cache.insert(s.q, CycleAverager::new(&sys, self.cfg.probe_periods)?);
                }
                self.cache[&s.q].apply(&s.x)
            }
        };
        let sig = signals(&demodulate(&x, 1)?, &demodulate(&x, 2)?)?;
        Ok(PointResult { signals: sig, q: s.q, residual: s.residual, converged: s.converged })
    }
}

/// `(h_x, h_y, h_z)` of one configuration.
pub fn run_point(cfg: &SimulationConfig) -> Result<PointResult> {
    ProbeStage::new(cfg).measure(&pumped_state(cfg)?)
}

/// One sweep row; failures keep their position with the error text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: Vec<f64>,
    pub result: std::result::Result<PointResult, String>,
}

impl SweepRow {
    pub fn signals(&self) -> Option<Signals> {
        self.result.as_ref().ok().filter(|r| r.converged).map(|r| r.signals)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: String,
    pub axis_names: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub config_hash: String,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.result.is_err()).count()
    }

    pub fn all_failed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| !matches!(&r.result, Ok(p) if p.converged))
    }

    /// Axis column `k` and one signal of the rows whose first axis equals
    /// `key` (all rows when `key` is `None`).
    pub fn trace(&self, key: Option<f64>, axis: usize, sig: fn(&Signals) -> f64) -> (Vec<f64>, Vec<f64>) {
        self.rows
            .iter()
            .filter(|r| key.is_none_or(|k| r.axis[0] == k))
            .filter_map(|r| r.signals().map(|s| (r.axis[axis], sig(&s))))
            .unzip()
    }
}

/// Maps `f` over `items` with up to `threads` workers (0 = all cores),
/// returning results in input order.
pub fn par_map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if threads != 1 && items.len() > 1 {
            use rayon::prelude::*;
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                return pool.install(|| items.par_iter().map(&f).collect());
            }
        }
    }
    let _ = threads;
    items.iter().map(f).collect()
}

fn row(axis: Vec<f64>, r: Result<PointResult>) -> SweepRow {
    SweepRow { axis, result: r.map_err(|e| e.to_string()) }
}

fn at_dc(cfg: &SimulationConfig, dc: f64) -> Result<SimulationConfig> {
    cfg.edit(|f| f.field.omega_dc_frac = dc)
}

fn square_pump(cfg: &SimulationConfig) -> Result<(f64, f64, f64)> {
    match cfg.file.pump {
        PumpSection::Square { peak_frac, duty, phase_rad } => Ok((peak_frac, duty, phase_rad)),
        _ => Err(Error::Config("duty and phase sweeps need a square pump".into())),
    }
}

fn check_axis(name: &str, v: &[f64], min_points: usize) -> Result<()> {
    if v.len() < min_points {
        return Err(Error::Config(format!("{name} sweep needs >= {min_points} points")));
    }
    Ok(())
}

/// `h` versus `Ω_dc/ω`.
pub fn sweep_static_field(cfg: &SimulationConfig, dc: &[f64], threads: usize) -> Result<SweepResult> {
    check_axis("static-field", dc, 2)?;
    let rows = par_map(dc, threads, |&d| row(vec![d], at_dc(cfg, d).and_then(|c| run_point(&c))));
    Ok(SweepResult { kind: "sweep-bz".into(), axis_names: vec!["omega_dc_frac".into()], rows, config_hash: cfg.hash.clone() })
}

/// Per-value profiles of the three signals and their figures of merit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FomRow {
    pub value: f64,
    pub hx: Option<ResonanceProfile>,
    pub hy: Option<ResonanceProfile>,
    pub hz: Option<ResonanceProfile>,
}

impl FomRow {
    pub fn foms(&self) -> [f64; 3] {
        [&self.hx, &self.hy, &self.hz].map(|p| p.as_ref().map_or(0.0, |p| p.fom))
    }
}

fn fom_rows(res: &SweepResult, values: &[f64]) -> Vec<FomRow> {
    values
        .iter()
        .map(|&v| {
            let prof = |sig: fn(&Signals) -> f64, kind| {
                let (x, y) = res.trace(Some(v), 1, sig);
                characterize_profile(&x, &y, kind).ok()
            };
            FomRow {
                value: v,
                hx: prof(|s| s.hx, TraceKind::Dispersive),
                hy: prof(|s| s.hy, TraceKind::Dispersive),
                hz: prof(|s| s.hz, TraceKind::Resonant),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FomSweep {
    pub result: SweepResult,
    pub fom: Vec<FomRow>,
}

impl FomSweep {
    /// Sweep value maximizing the FOM of signal `k` (0: h_x, 1: h_y, 2: h_z).
    pub fn optimum(&self, k: usize) -> Option<f64> {
        self.fom
            .iter()
            .filter(|r| r.foms()[k] > 0.0)
            .max_by(|a, b| a.foms()[k].total_cmp(&b.foms()[k]))
            .map(|r| r.value)
    }

    /// Range of sweep values where all three FOMs are nonzero.
    pub fn window(&self) -> Option<(f64, f64)> {
        let on: Vec<f64> = self.fom.iter().filter(|r| r.foms().iter().all(|&f| f > 0.0)).map(|r| r.value).collect();
        Some((*on.first()?, *on.last()?))
    }
}

/// A static-field sweep per duty cycle. The probe operator is shared by all
/// duties at one field point.
pub fn sweep_duty(cfg: &SimulationConfig, duties: &[f64], dc: &[f64], threads: usize) -> Result<FomSweep> {
    let (peak, _, phase) = square_pump(cfg)?;
    if duties.iter().any(|&d| !(d > 0.0 && d <= 1.0)) {
        return Err(Error::Config("duty cycles must lie in (0, 1]".into()));
    }
    check_axis("duty", duties, 1)?;
    check_axis("static-field", dc, 2)?;
    let per_dc = par_map(dc, threads, |&d| -> Vec<SweepRow> {
        let base = match at_dc(cfg, d) {
            Ok(c) => c,
            Err(e) => return duties.iter().map(|&u| row(vec![u, d], Err(e.clone_msg()))).collect(),
        };
        let mut stage = ProbeStage::new(&base);
        duties
            .iter()
            .map(|&u| {
                let r = base
                    .edit(|f| f.pump = PumpSection::Square { peak_frac: peak, duty: u, phase_rad: phase })
                    .and_then(|c| pumped_state(&c))
                    .and_then(|s| stage.measure(&s));
                row(vec![u, d], r)
            })
            .collect()
    });
    let rows = (0..duties.len()).flat_map(|i| per_dc.iter().map(move |v| v[i].clone())).collect();
    let result = SweepResult {
        kind: "sweep-duty".into(),
        axis_names: vec!["duty".into(), "omega_dc_frac".into()],
        rows,
        config_hash: cfg.hash.clone(),
    };
    let fom = fom_rows(&result, duties);
    Ok(FomSweep { result, fom })
}

/// A static-field sweep per rf amplitude.
pub fn sweep_rf_amplitude(cfg: &SimulationConfig, amps: &[f64], dc: &[f64], threads: usize) -> Result<FomSweep> {
    if amps.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::Config("rf amplitudes must be > 0".into()));
    }
    check_axis("rf", amps, 1)?;
    check_axis("static-field", dc, 2)?;
    let grid: Vec<(f64, f64)> = amps.iter().flat_map(|&a| dc.iter().map(move |&d| (a, d))).collect();
    let rows = par_map(&grid, threads, |&(a, d)| {
        let r = cfg
            .edit(|f| {
                f.field.omega_rf_frac = a;
                f.field.omega_dc_frac = d;
            })
            .and_then(|c| run_point(&c));
        row(vec![a, d], r)
    });
    let result = SweepResult {
        kind: "sweep-rf".into(),
        axis_names: vec!["omega_rf_frac".into(), "omega_dc_frac".into()],
        rows,
        config_hash: cfg.hash.clone(),
    };
    let fom = fom_rows(&result, amps);
    Ok(FomSweep { result, fom })
}

/// Pump rf-cycle phase for a phase `phi` measured against the 2ω signal
/// reference.
pub fn rf_phase_of(phi: f64) -> f64 {
    phi / 2.0
}

/// `h` versus pump phase (radians against the 2ω reference) at the
/// configured field.
pub fn sweep_pump_phase(cfg: &SimulationConfig, phases: &[f64], threads: usize) -> Result<SweepResult> {
    let (peak, duty, _) = square_pump(cfg)?;
    check_axis("phase", phases, 1)?;
    let chunks: Vec<&[f64]> = phases.chunks(phases.len().div_ceil(threads_hint(threads)).max(1)).collect();
    let rows: Vec<SweepRow> = par_map(&chunks, threads, |chunk| {
        let mut stage = ProbeStage::new(cfg);
        chunk
            .iter()
            .map(|&p| {
                let r = cfg
                    .edit(|f| f.pump = PumpSection::Square { peak_frac: peak, duty, phase_rad: rf_phase_of(p) })
                    .and_then(|c| pumped_state(&c))
                    .and_then(|s| stage.measure(&s));
                row(vec![p], r)
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    Ok(SweepResult { kind: "sweep-phase".into(), axis_names: vec!["phase_rad".into()], rows, config_hash: cfg.hash.clone() })
}

fn threads_hint(threads: usize) -> usize {
    #[cfg(feature = "parallel")]
    {
        if threads == 0 {
            return rayon::current_num_threads();
        }
    }
    threads.max(1)
}

/// Peak of `h_z` on a static sweep, refined by a parabola through the
/// largest sample and its neighbours.
pub fn find_resonance(cfg: &SimulationConfig, dc: &[f64], threads: usize) -> Result<f64> {
    let res = sweep_static_field(cfg, dc, threads)?;
    let (x, y) = res.trace(None, 0, |s| s.hz);
    if x.len() < 3 {
        return Err(Error::Config("resonance search needs >= 3 converged points".into()));
    }
    let base = 0.5 * (y[0] + y[y.len() - 1]);
    let k = (0..y.len()).max_by(|&a, &b| (y[a] - base).abs().total_cmp(&(y[b] - base).abs())).unwrap_or(0);
    if k == 0 || k == x.len() - 1 {
        return Ok(x[k]);
    }
    let (y0, y1, y2) = (y[k - 1], y[k], y[k + 1]);
    let den = y0 - 2.0 * y1 + y2;
    let shift = if den != 0.0 { 0.5 * (y0 - y2) / den } else { 0.0 };
    Ok(x[k] + shift.clamp(-1.0, 1.0) * 0.5 * (x[k + 1] - x[k - 1]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Map3d {
    pub result: SweepResult,
    /// `Ω_dc/ω` at which the map is taken.
    pub operating_point: f64,
    pub b_res: f64,
    /// `∂h_i/∂Ω_ext,j` at zero external field, per unit of `Ω/ω`.
    pub jacobian: [[f64; 3]; 3],
    pub zero_field: Signals,
}

/// Central-difference sensitivities of `(h_x, h_y, h_z)` to the external
/// field components at `cfg`'s operating point.
pub fn sensitivities(cfg: &SimulationConfig, step: f64) -> Result<[[f64; 3]; 3]> {
    let mut j = [[0.0; 3]; 3];
    for k in 0..3 {
        let eval = |s: f64| -> Result<[f64; 3]> {
            let c = cfg.edit(|f| f.field.omega_ext_frac[k] += s)?;
            let p = run_point(&c)?;
            Ok([p.signals.hx, p.signals.hy, p.signals.hz])
        };
        let (hp, hm) = (eval(step)?, eval(-step)?);
        for i in 0..3 {
            j[i][k] = (hp[i] - hm[i]) / (2.0 * step);
        }
    }
    Ok(j)
}

/// `h` over a transverse-field grid at `B_res + Ω_rf/2`, one sheet per
/// longitudinal offset.
pub fn map_3d(
    cfg: &SimulationConfig,
    bx: &[f64],
    by: &[f64],
    bz: &[f64],
    b_res: Option<f64>,
    threads: usize,
) -> Result<Map3d> {
    check_axis("map", bx, 1)?;
    check_axis("map", by, 1)?;
    check_axis("map", bz, 1)?;
    let b_res = match b_res {
        Some(b) => b,
        None => find_resonance(&cfg.edit(|f| f.field.omega_ext_frac = [0.0; 3])?, &cfg.sweep.omega_dc_frac.values()?, threads)?,
    };
    let op = b_res + cfg.file.field.omega_rf_frac / 2.0;
    let at_op = cfg.edit(|f| {
        f.field.omega_dc_frac = op;
        f.field.omega_ext_frac = [0.0; 3];
    })?;
    let grid: Vec<[f64; 3]> =
        bz.iter().flat_map(|&z| by.iter().flat_map(move |&y| bx.iter().map(move |&x| [x, y, z]))).collect();
    let rows = par_map(&grid, threads, |e| row(e.to_vec(), at_op.edit(|f| f.field.omega_ext_frac = *e).and_then(|c| run_point(&c))));
    let zero_field = run_point(&at_op)?.signals;
    let jacobian = sensitivities(&at_op, cfg.sweep.fd_step_frac)?;
    Ok(Map3d {
        result: SweepResult {
            kind: "map3d".into(),
            axis_names: vec!["ext_x_frac".into(), "ext_y_frac".into(), "ext_z_frac".into()],
            rows,
            config_hash: cfg.hash.clone(),
        },
        operating_point: op,
        b_res,
        jacobian,
        zero_field,
    })
}

/// Cutoff study: the relative change of the pumped steady state from Q to
/// Q+1, with the signals at each Q.
pub fn convergence_study(cfg: &SimulationConfig, q_last: usize) -> Result<SweepResult> {
    let q_last = q_last.clamp(2, Q_MAX);
    let mut stage = ProbeStage::new(cfg);
    let mut rows = Vec::new();
    let mut prev: Option<SteadyState> = None;
    for q in 2..=q_last + 1 {
        let s = steady_state(&second_moment_system(cfg, q)?)?;
        if let Some(p) = prev.take() {
            let change = relative_change(&p.x, &s.x);
            rows.push(row(vec![p.q as f64, change], stage.measure(&p)));
        }
        prev = Some(s);
    }
    Ok(SweepResult {
        kind: "converge".into(),
        axis_names: vec!["q".into(), "change_to_next".into()],
        rows,
        config_hash: cfg.hash.clone(),
    })
}

trait CloneMsg {
    fn clone_msg(&self) -> Error;
}

impl CloneMsg for Error {
    fn clone_msg(&self) -> Error {
        Error::Config(self.to_string())
    }
}
