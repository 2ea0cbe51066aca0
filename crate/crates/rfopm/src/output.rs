//! CSV and JSON writers for sweep results.
//!
//! CSV files open with `#` comment lines (config hash, solver settings) and
//! then one row per point: axis columns, `h_x,h_y,h_z,Q,residual,converged`
//! and an `error` column that is empty for successful points. Floats use the
//! shortest round-trip representation, so identical runs give identical
//! bytes.

use crate::config::{QSetting, SimulationConfig};
use crate::sim::{FomSweep, Map3d, SweepResult};
use serde::Serialize;
use std::fmt::Write;

fn header(out: &mut String, kind: &str, cfg: &SimulationConfig, extra: &[(String, String)]) {
    let q = match cfg.q {
        QSetting::Fixed(q) => q.to_string(),
        QSetting::Auto => format!("auto (tol {})", cfg.q_tol),
    };
    let _ = writeln!(out, "# opmsim {kind}");
    let _ = writeln!(out, "# config_sha256 = {}", cfg.hash);
    let _ = writeln!(out, "# rf_frequency_hz = {}", cfg.file.rf_frequency_hz);
    let _ = writeln!(out, "# state = {}", label(&cfg.file.state));
    let _ = writeln!(out, "# mode = {}", label(&cfg.file.mode));
    let _ = writeln!(out, "# q = {q}");
    let _ = writeln!(out, "# probe_periods = {}", cfg.probe_periods);
    for (k, v) in extra {
        let _ = writeln!(out, "# {k} = {v}");
    }
}

/// The serde name of a unit enum variant, as written in the config.
fn label<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

fn clean(s: &str) -> String {
    s.replace([',', '\n', '\r'], ";")
}

pub fn sweep_csv(res: &SweepResult, cfg: &SimulationConfig, extra: &[(String, String)]) -> String {
    let mut out = String::new();
    let mut extra = extra.to_vec();
    extra.push(("points".into(), res.rows.len().to_string()));
    extra.push(("failures".into(), res.failures().to_string()));
    header(&mut out, &res.kind, cfg, &extra);
    let _ = writeln!(out, "{},h_x,h_y,h_z,Q,residual,converged,error", res.axis_names.join(","));
    for r in &res.rows {
        let axis: Vec<String> = r.axis.iter().map(|v| format!("{v:?}")).collect();
        let _ = match &r.result {
            Ok(p) => writeln!(
                out,
                "{},{:?},{:?},{:?},{},{:?},{},",
                axis.join(","),
                p.signals.hx,
                p.signals.hy,
                p.signals.hz,
                p.q,
                p.residual,
                p.converged
            ),
            Err(e) => writeln!(out, "{},NaN,NaN,NaN,0,NaN,false,{}", axis.join(","), clean(e)),
        };
    }
    out
}

/// FOM table: one row per swept value with amplitude, linewidth and FOM of
/// each signal (zeros where no resonance was found).
pub fn fom_csv(f: &FomSweep, cfg: &SimulationConfig) -> String {
    let mut out = String::new();
    let mut extra = vec![];
    if let Some((a, b)) = f.window() {
        extra.push(("window_all_nonzero".into(), format!("{a}..{b}")));
    }
    header(&mut out, &format!("{} fom", f.result.kind), cfg, &extra);
    let _ = writeln!(
        out,
        "{},hx_amplitude,hx_linewidth,hx_fom,hy_amplitude,hy_linewidth,hy_fom,hz_amplitude,hz_linewidth,hz_fom",
        f.result.axis_names[0]
    );
    for r in &f.fom {
        let mut line = format!("{:?}", r.value);
        for p in [&r.hx, &r.hy, &r.hz] {
            let (a, w, m) = p.as_ref().map_or((0.0, 0.0, 0.0), |p| (p.amplitude, p.linewidth, p.fom));
            let _ = write!(line, ",{a:?},{w:?},{m:?}");
        }
        let _ = writeln!(out, "{line}");
    }
    out
}

pub fn map_csv(m: &Map3d, cfg: &SimulationConfig) -> String {
    let j = &m.jacobian;
    let extra = vec![
        ("b_res_frac".into(), m.b_res.to_string()),
        ("operating_point_omega_dc_frac".into(), m.operating_point.to_string()),
        ("zero_field_h".into(), format!("{},{},{}", m.zero_field.hx, m.zero_field.hy, m.zero_field.hz)),
        ("dh_dext_row_x".into(), format!("{},{},{}", j[0][0], j[0][1], j[0][2])),
        ("dh_dext_row_y".into(), format!("{},{},{}", j[1][0], j[1][1], j[1][2])),
        ("dh_dext_row_z".into(), format!("{},{},{}", j[2][0], j[2][1], j[2][2])),
    ];
    sweep_csv(&m.result, cfg, &extra)
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config_sha256: &'a str,
    config: &'a crate::config::ConfigFile,
    data: &'a T,
}

/// JSON mirror: the effective configuration plus the result structure.
pub fn to_json<T: Serialize>(data: &T, cfg: &SimulationConfig) -> String {
    serde_json::to_string_pretty(&Envelope { config_sha256: &cfg.hash, config: &cfg.file, data })
        .unwrap_or_else(|e| format!("{{\"error\": \"{e}\"}}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::Signals;
    use crate::sim::{PointResult, SweepRow};

    fn result() -> SweepResult {
        let ok = PointResult { signals: Signals { hx: 0.5, hy: -1e-20, hz: 1.0 }, q: 5, residual: 1e-15, converged: true };
        SweepResult {
            kind: "sweep-bz".into(),
            axis_names: vec!["omega_dc_frac".into()],
            rows: vec![
                SweepRow { axis: vec![0.9], result: Ok(ok) },
                SweepRow { axis: vec![1.0], result: Err("singular, badly".into()) },
            ],
            config_hash: "x".into(),
        }
    }

    #[test]
    fn csv_layout() {
        let cfg = SimulationConfig::default();
        let s = sweep_csv(&result(), &cfg, &[]);
        let lines: Vec<&str> = s.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines[0], "omega_dc_frac,h_x,h_y,h_z,Q,residual,converged,error");
        assert_eq!(lines[1], "0.9,0.5,-1e-20,1.0,5,1e-15,true,");
        assert_eq!(lines[2], "1.0,NaN,NaN,NaN,0,NaN,false,singular; badly");
        assert!(s.contains(&format!("# config_sha256 = {}", cfg.hash)));
        assert!(s.contains("# failures = 1"));
        assert!(s.contains("# state = stretched_x\n# mode = double_step\n"));
        let parsed: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(parsed, -1e-20);
    }

    #[test]
    fn json_mirror() {
        let cfg = SimulationConfig::default();
        let v: serde_json::Value = serde_json::from_str(&to_json(&result(), &cfg)).unwrap();
        assert_eq!(v["config_sha256"], cfg.hash);
        assert_eq!(v["data"]["rows"][0]["result"]["Ok"]["q"], 5);
        assert_eq!(v["config"]["rf_frequency_hz"], 5000.0);
    }
}
