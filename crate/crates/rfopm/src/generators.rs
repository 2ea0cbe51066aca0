//! Lab-frame generators: field matrices, their Liouville-space lifts,
//! relaxation drift, and the canonical input states.

use crate::algebra::{liouville_left, liouville_right, re, vec_rm, Mat3, Mat9, Spectrum, Vec3, Vec9, C64, I};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Field couplings as Larmor frequencies (rad/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub omega_rf: f64,
    pub omega: f64,
    pub omega_dc: f64,
    pub omega_ext: [f64; 3],
}

impl FieldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) {
            return Err(Error::InvalidParameter(format!("rf frequency {} <= 0", self.omega)));
        }
        let all = [self.omega_rf, self.omega_dc, self.omega_ext[0], self.omega_ext[1], self.omega_ext[2]];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite field value".into()));
        }
        Ok(())
    }

    pub fn detuning(&self) -> f64 {
        self.omega_dc - self.omega
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxationConfig {
    pub gamma: [f64; 3],
    pub spin: f64,
}

impl RelaxationConfig {
    pub fn isotropic(rate: f64, spin: f64) -> Self {
        RelaxationConfig { gamma: [rate; 3], spin }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma.iter().any(|g| !(*g >= 0.0)) {
            return Err(Error::InvalidParameter(format!("negative relaxation rate {:?}", self.gamma)));
        }
        let twice = 2.0 * self.spin;
        if !(self.spin >= 0.5) || (twice - twice.round()).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("spin {} is not a half-integer >= 1/2", self.spin)));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Mat3 {
        Mat3::from_diagonal(&Vec3::new(re(self.gamma[0]), re(self.gamma[1]), re(self.gamma[2])))
    }

    /// `F(F+1)`, the trace of any second moment of the manifold.
    pub fn casimir(&self) -> f64 {
        self.spin * (self.spin + 1.0)
    }
}

/// Rotation generator `G` with `G v = w × v` for `w = (wx, wy, wz)`.
pub fn rotation_generator(w: [f64; 3]) -> Mat3 {
    let [x, y, z] = w;
    Mat3::new(
        re(0.0), re(-z), re(y),
        re(z), re(0.0), re(-x),
        re(-y), re(x), re(0.0),
    )
}

/// `{B⁽⁻¹⁾, B⁽⁰⁾, B⁽¹⁾}` of `B(t) = Ω(t) × · − Γ_rel`, with the rf field
/// `Ω_rf cos(ωt)` along x.
pub fn build_b_harmonics(f: &FieldConfig, r: &RelaxationConfig) -> Spectrum<Mat3> {
    let [ox, oy, oz] = f.omega_ext;
    let b0 = rotation_generator([ox, oy, f.omega_dc + oz]) - r.matrix();
    let mut b1 = Mat3::zeros();
    b1[(1, 2)] = re(-f.omega_rf / 2.0);
    b1[(2, 1)] = re(f.omega_rf / 2.0);
    Spectrum::from_fn(1, |n| if n == 0 { b0 } else { b1 })
}

/// `C⁽ⁿ⁾ = L(B⁽ⁿ⁾) + R(B⁽ⁿ⁾ᵀ)`, the generator of `σ ↦ Bσ + σBᵀ`.
pub fn build_c_harmonics(b: &Spectrum<Mat3>) -> Spectrum<Mat9> {
    b.map(|m| liouville_left(m) + liouville_right(&m.transpose()))
}

/// `(Λ_rel, X₀)`: the relaxation drift and the unpolarized second moment.
pub fn build_relaxation_drift(r: &RelaxationConfig) -> (Mat9, Vec9) {
    let g = r.matrix();
    let lam = liouville_left(&g) + liouville_right(&g);
    let x0 = vec_rm(&(Mat3::identity() * re(r.casimir() / 3.0)));
    (lam, x0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateLabel {
    /// Mixture `diag(4, 1, 1)`: stretched along x.
    StretchedX,
    /// `|F=2, m=0⟩` quantized along x.
    AlignedM0X,
    /// `|F=2, m=2⟩` quantized along x.
    OrientedX,
    Thermal,
}

impl std::str::FromStr for StateLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stretched_x" => Ok(StateLabel::StretchedX),
            "aligned_m0_x" => Ok(StateLabel::AlignedM0X),
            "oriented_x" => Ok(StateLabel::OrientedX),
            "thermal" => Ok(StateLabel::Thermal),
            other => Err(Error::InvalidParameter(format!("unknown input state '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InputState {
    pub label: StateLabel,
    pub p_in: Vec3,
    pub x_in: Vec9,
}

pub fn canonical_input_state(label: StateLabel, spin: f64) -> Result<InputState> {
    let named = label != StateLabel::Thermal;
    if named && (spin - 2.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("state {label:?} is defined for F = 2, got {spin}")));
    }
    let z = re(0.0);
    let v = |d: [C64; 9]| Vec9::from_column_slice(&d);
    let (p_in, x_in) = match label {
        StateLabel::StretchedX => (Vec3::zeros(), v([re(4.0), z, z, z, re(1.0), z, z, z, re(1.0)])),
        StateLabel::AlignedM0X => (Vec3::zeros(), v([z, z, z, z, re(3.0), z, z, z, re(3.0)])),
        StateLabel::OrientedX => (
            Vec3::new(re(2.0), z, z),
            v([re(4.0), z, z, z, re(1.0), -I, z, I, re(1.0)]),
        ),
        StateLabel::Thermal => {
            let c = re(spin * (spin + 1.0) / 3.0);
            (Vec3::zeros(), v([c, z, z, z, c, z, z, z, c]))
        }
    };
    Ok(InputState { label, p_in, x_in })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{unvec_rm, Coefficient};

    fn field() -> FieldConfig {
        FieldConfig { omega_rf: 0.05, omega: 1.0, omega_dc: 0.97, omega_ext: [0.03, -0.02, 0.01] }
    }

    #[test]
    fn zero_field_b_is_pure_decay() {
        let f = FieldConfig { omega_rf: 0.0, omega: 1.0, omega_dc: 0.0, omega_ext: [0.0; 3] };
        let b = build_b_harmonics(&f, &RelaxationConfig::isotropic(0.2, 2.0));
        assert_eq!(b.get(0), Mat3::identity() * re(-0.2));
        assert_eq!(b.get(1), Mat3::zeros());
        assert_eq!(b.get(-1), Mat3::zeros());
    }

    #[test]
    fn rf_entry_and_conjugate_pair() {
        let b = build_b_harmonics(&field(), &RelaxationConfig::isotropic(0.0, 2.0));
        assert!((b.get(1)[(1, 2)] - re(-0.025)).norm() < 1e-15);
        assert_eq!(b.get(-1), b.get(1).conj());
        let c = build_c_harmonics(&b);
        assert_eq!(c.get(-1), c.get(1).conj());
    }

    #[test]
    fn harmonics_reproduce_time_domain_generator() {
        // Direct construction: Bloch equation dF/dt = Ω(t) × F − Γ F.
        let f = field();
        let r = RelaxationConfig { gamma: [0.1, 0.2, 0.3], spin: 2.0 };
        let b = build_b_harmonics(&f, &r);
        for t in [0.0, 0.4, 2.1] {
            let w = [
                f.omega_ext[0] + f.omega_rf * (f.omega * t).cos(),
                f.omega_ext[1],
                f.omega_ext[2] + f.omega_dc,
            ];
            let v = Vec3::new(re(0.3), re(-1.1), re(0.7));
            let cross = Vec3::new(
                re(w[1]) * v[2] - re(w[2]) * v[1],
                re(w[2]) * v[0] - re(w[0]) * v[2],
                re(w[0]) * v[1] - re(w[1]) * v[0],
            );
            let direct = cross - r.matrix() * v;
            let via = b.eval(f.omega * t) * v;
            assert!((direct - via).max_abs() < 1e-14);
        }
    }

    #[test]
    fn c_generator_matches_products() {
        let b = build_b_harmonics(&field(), &RelaxationConfig { gamma: [0.1, 0.2, 0.3], spin: 2.0 });
        let c = build_c_harmonics(&b);
        let sigma = Mat3::from_fn(|i, j| C64::new(i as f64 - 0.3 * j as f64, 0.1 * (i * j) as f64));
        for n in -1..=1 {
            let bn = b.get(n);
            let want = vec_rm(&(bn * sigma + sigma * bn.transpose()));
            assert!((c.get(n) * vec_rm(&sigma) - want).max_abs() < 1e-12);
        }
        let decay = build_b_harmonics(
            &FieldConfig { omega_rf: 0.0, omega: 1.0, omega_dc: 0.0, omega_ext: [0.0; 3] },
            &RelaxationConfig::isotropic(0.4, 2.0),
        );
        assert_eq!(build_c_harmonics(&decay).get(0), Mat9::identity() * re(-0.8));
        let rot = build_c_harmonics(&build_b_harmonics(&field(), &RelaxationConfig::isotropic(0.0, 2.0)));
        assert!((rot.get(0) * vec_rm(&Mat3::identity())).max_abs() < 1e-15);
    }

    #[test]
    fn rotation_generators_preserve_trace() {
        let c = build_c_harmonics(&build_b_harmonics(&field(), &RelaxationConfig::isotropic(0.0, 2.0)));
        let tr = vec_rm(&Mat3::identity());
        for n in -1..=1 {
            let row = tr.transpose() * c.get(n);
            assert!(row.max_abs() < 1e-12);
        }
    }

    #[test]
    fn relaxation_drift() {
        let (lam, x0) = build_relaxation_drift(&RelaxationConfig::isotropic(0.3, 2.0));
        assert_eq!(unvec_rm(&x0), Mat3::identity() * re(2.0));
        assert!((lam * x0 - x0 * re(0.6)).max_abs() < 1e-15);
        let (lam, x0) = build_relaxation_drift(&RelaxationConfig { gamma: [0.1, 0.2, 0.3], spin: 2.0 });
        let d = lam * x0;
        assert_eq!(d[1], re(0.0));
        assert!((d[0] - re(2.0 * 0.1 * 2.0)).norm() < 1e-15);
    }

    #[test]
    fn canonical_states() {
        for label in [StateLabel::StretchedX, StateLabel::AlignedM0X, StateLabel::OrientedX, StateLabel::Thermal] {
            let s = canonical_input_state(label, 2.0).unwrap();
            let m = unvec_rm(&s.x_in);
            assert!((m.trace() - re(6.0)).norm() < 1e-12);
            assert!((m - m.adjoint()).max_abs() < 1e-15);
        }
        let o = canonical_input_state(StateLabel::OrientedX, 2.0).unwrap();
        assert_eq!(unvec_rm(&o.x_in)[(1, 2)], -I);
        assert_eq!(unvec_rm(&o.x_in)[(2, 1)], I);
        assert_eq!(o.p_in[0], re(2.0));
        let t = canonical_input_state(StateLabel::Thermal, 2.0).unwrap();
        assert_eq!(t.x_in, build_relaxation_drift(&RelaxationConfig::isotropic(0.1, 2.0)).1);
        assert!(canonical_input_state(StateLabel::StretchedX, 1.0).is_err());
        assert!("bogus".parse::<StateLabel>().is_err());
    }
}
