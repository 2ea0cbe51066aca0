use rfopm::config::{linspace, PumpSection, SimulationConfig};
use rfopm::output::sweep_csv;
use rfopm::sim::{run_point, sweep_duty, sweep_pump_phase, sweep_static_field};
use std::path::Path;

fn small() -> SimulationConfig {
    SimulationConfig::default()
        .edit(|f| {
            f.field.omega_ext_frac = [0.01, 0.01, 0.0];
            f.q = rfopm::config::QSetting::Fixed(4);
        })
        .unwrap()
}

#[test]
fn serial_and_parallel_sweeps_are_bitwise_equal() {
    let cfg = small();
    let dc = linspace(0.95, 1.05, 9);
    let a = sweep_static_field(&cfg, &dc, 1).unwrap();
    let b = sweep_static_field(&cfg, &dc, 0).unwrap();
    assert_eq!(sweep_csv(&a, &cfg, &[]), sweep_csv(&b, &cfg, &[]));

    let d1 = sweep_duty(&cfg, &[0.1, 0.2], &dc, 1).unwrap();
    let d2 = sweep_duty(&cfg, &[0.1, 0.2], &dc, 3).unwrap();
    assert_eq!(sweep_csv(&d1.result, &cfg, &[]), sweep_csv(&d2.result, &cfg, &[]));
}

#[test]
fn sweep_rows_match_single_points() {
    let cfg = small();
    let dc = [0.97, 1.0, 1.03];
    let res = sweep_static_field(&cfg, &dc, 0).unwrap();
    for (row, &w) in res.rows.iter().zip(&dc) {
        let p = run_point(&cfg.edit(|f| f.field.omega_dc_frac = w).unwrap()).unwrap();
        assert_eq!(row.signals().unwrap(), p.signals);
    }
}

// The axis is referenced to 2ω, so a full pump shift is 4π. Without
// transverse fields the Rz(π) symmetry with a half-period shift maps 0 to
// 2π, which keeps h_z and flips the first-harmonic signals.
#[test]
fn phase_sweep_periods() {
    use std::f64::consts::PI;
    let close = |a: rfopm::observables::Signals, b: rfopm::observables::Signals| {
        [(a.hx, b.hx), (a.hy, b.hy), (a.hz, b.hz)].iter().all(|(x, y)| (x - y).abs() <= 1e-9 * a.hz.abs())
    };
    let cfg = small();
    let res = sweep_pump_phase(&cfg, &[0.0, 2.0 * PI, 4.0 * PI], 0).unwrap();
    let s: Vec<_> = res.rows.iter().map(|r| r.signals().unwrap()).collect();
    assert!(close(s[0], s[2]));
    assert!(!close(s[0], s[1]));

    let bare = cfg.edit(|f| f.field.omega_ext_frac = [0.0; 3]).unwrap();
    let res = sweep_pump_phase(&bare, &[0.0, 2.0 * PI], 0).unwrap();
    let (a, b) = (res.rows[0].signals().unwrap(), res.rows[1].signals().unwrap());
    assert!(close(a, rfopm::observables::Signals { hx: -b.hx, hy: -b.hy, hz: b.hz }));
    assert!(a.hx.abs() > 1e-6);
}

#[test]
fn config_file_round_trip_preserves_hash() {
    let cfg = small().edit(|f| f.pump = PumpSection::Cw { rate_frac: 0.002 }).unwrap();
    let again = SimulationConfig::from_toml_str(&cfg.to_toml(), Path::new(".")).unwrap();
    assert_eq!(cfg.hash, again.hash);
    assert_eq!(run_point(&cfg).unwrap().signals, run_point(&again).unwrap().signals);
}
