//! Rotating frame about z at the rf frequency: RWA generators, the
//! Liouville-space rotation harmonics, the analytic Bloch steady state, and
//! the rotating-frame second-moment solve mapped back to the lab.

use crate::algebra::{liouville_left, liouville_right, re, spectrum_product, vec_rm, Mat3, Mat9, Spectrum, Vec3, Vec9, C64, I};
use crate::error::{Error, Result};
use crate::floquet::{steady_state, FloquetSystem, FloquetVector, SteadyState};
use crate::generators::{rotation_generator, FieldConfig, RelaxationConfig};
use crate::linalg::{CMat, CVec};

/// Rotating-frame generators. `m_ext` carries the static lab fields seen
/// from the rotating frame (harmonics -1, 0, 1).
#[derive(Clone, Debug, PartialEq)]
pub struct RotFrameGenerators {
    pub m_rot: Mat3,
    pub m_ext: Spectrum<Mat3>,
    pub detuning: f64,
    pub omega: f64,
    /// Time-averaged relaxation rates `(Γ₂, Γ₂, Γ_z)`.
    pub gamma: [f64; 3],
}

/// `R(t) = Rot_z(ωt)` as `{R⁽⁻¹⁾, R⁽⁰⁾, R⁽¹⁾}`-style harmonics of `R⁻¹(t)`:
/// `R⁻¹(t) = R0 + R⁽¹⁾ e^{iωt} + R⁽⁻¹⁾ e^{-iωt}`, `R⁽±¹⁾ = (R^R ± i R^I)/2`.
pub fn inverse_rotation_harmonics() -> Spectrum<Mat3> {
    let z = re(0.0);
    let r0 = Mat3::new(z, z, z, z, z, z, z, z, re(1.0));
    let rr = Mat3::new(re(1.0), z, z, z, re(1.0), z, z, z, z);
    let ri = Mat3::new(z, re(-1.0), z, re(1.0), z, z, z, z, z);
    Spectrum::from_fn(1, |n| match n {
        0 => r0,
        1 => (rr + ri * I) * re(0.5),
        _ => (rr - ri * I) * re(0.5),
    })
}

/// Harmonics of `R(t)` itself (the index-reversed inverse series).
pub fn rotation_harmonics() -> Spectrum<Mat3> {
    let inv = inverse_rotation_harmonics();
    Spectrum::from_fn(1, |n| inv.get(-n))
}

pub fn build_rot_generators(f: &FieldConfig, r: &RelaxationConfig) -> Result<RotFrameGenerators> {
    f.validate()?;
    r.validate()?;
    let [gx, gy, gz] = r.gamma;
    let g2 = 0.5 * (gx + gy);
    let delta = f.detuning();
    let w = f.omega_rf / 2.0;
    let z = re(0.0);
    let m_rot = Mat3::new(
        re(-g2), re(-delta), z,
        re(delta), re(-g2), re(-w),
        z, re(w), re(-gz),
    );
    let [ox, oy, oz] = f.omega_ext;
    let minus = C64::new(ox, -oy);
    let m1 = Mat3::new(
            z, z, I * minus,
            z, z, -minus,
            -I * minus, minus, z,
        ) * re(0.5);
    let m0 = rotation_generator([0.0, 0.0, oz]);
    let m_ext = Spectrum::from_fn(1, |n| match n {
        0 => m0,
        1 => m1,
        _ => m1.map(|c| c.conj()),
    });
    Ok(RotFrameGenerators { m_rot, m_ext, detuning: delta, omega: f.omega, gamma: [g2, g2, gz] })
}

/// Closed-form rotating-frame steady state of the first moment under cw
/// pumping at rate `gamma0` towards `(0, 0, fz_in)`, no external fields.
pub fn bloch_steady_analytic(f: &FieldConfig, r: &RelaxationConfig, gamma0: f64, fz_in: f64) -> Result<Vec3> {
    let a = 0.5 * (r.gamma[0] + r.gamma[1]) + gamma0;
    let b = r.gamma[2] + gamma0;
    let w = f.omega_rf / 2.0;
    let d = f.detuning();
    let den = a * (w * w + a * b) + b * d * d;
    if den == 0.0 {
        return Err(Error::Singular);
    }
    Ok(Vec3::new(
        re(gamma0 * d * w * fz_in / den),
        re(-gamma0 * a * w * fz_in / den),
        re(gamma0 * fz_in * (a * a + d * d) / den),
    ))
}

/// Zeroth harmonic of `R⁻¹(t) P(t)` from a lab-frame first-moment solution.
pub fn first_moment_to_rot(p: &FloquetVector) -> Vec3 {
    let rinv = inverse_rotation_harmonics();
    let mut acc = Vec3::zeros();
    for k in -1i64..=1 {
        acc += rinv.get(k) * p.block3(-k);
    }
    acc
}

/// Harmonics `𝖱⁽ⁿ⁾`, `n = -2..=2`, of `vec(R σ' R⁻¹) = 𝖱(t) vec(σ')`.
#[derive(Clone, Debug, PartialEq)]
pub struct LiouvilleRotation {
    pub blocks: Spectrum<Mat9>,
}

pub fn build_liouville_rotation() -> LiouvilleRotation {
    let rinv = inverse_rotation_harmonics();
    let l = |n: i64| liouville_left(&rinv.get(n));
    let r = |n: i64| liouville_right(&rinv.get(n));
    let blocks = Spectrum::from_fn(2, |n| match n {
        0 => l(0) * r(0) + l(-1) * r(-1) + l(1) * r(1),
        1 => l(0) * r(1) + l(-1) * r(0),
        -1 => l(0) * r(-1) + l(1) * r(0),
        2 => l(-1) * r(1),
        _ => l(1) * r(-1),
    });
    LiouvilleRotation { blocks }
}

impl LiouvilleRotation {
    /// `𝖱(t)` at phase `θ = ωt`.
    pub fn at(&self, theta: f64) -> Mat9 {
        self.blocks.eval(theta)
    }
}

fn to_dyn9(m: &Mat9) -> CMat {
    CMat::from_iterator(9, 9, m.iter().copied())
}

/// Rotating-frame second-moment system: RWA generator plus the rotated
/// static fields, time-averaged relaxation, and the pump source
/// `2 Γ_p(t) R⁻¹ σ_in R` expanded by convolution.
pub fn rot_second_moment_system(
    gen: &RotFrameGenerators,
    pump: &Spectrum<C64>,
    x_in: &Vec9,
    spin: f64,
    q: usize,
) -> Result<FloquetSystem> {
    let gmat = |m: &Mat3| to_dyn9(&(liouville_left(m) + liouville_right(&m.transpose())));
    let m0 = gen.m_rot + gen.m_ext.get(0);
    let generator = [gmat(&gen.m_ext.get(-1)), gmat(&m0), gmat(&gen.m_ext.get(1))];

    let gam = Mat3::from_diagonal(&Vec3::new(re(gen.gamma[0]), re(gen.gamma[1]), re(gen.gamma[2])));
    let lam = liouville_left(&gam) + liouville_right(&gam);
    let x0 = vec_rm(&(Mat3::identity() * re(spin * (spin + 1.0) / 3.0)));
    let drift = CVec::from_iterator(9, (lam * x0).iter().copied());

    // vec(R⁻¹ σ R) = 𝖱(-t) vec(σ): harmonic k of the input rotation is 𝖱⁽⁻ᵏ⁾.
    let rot = build_liouville_rotation();
    let rin = Spectrum::from_fn(2, |k| rot.blocks.get(-k));
    let lifted = pump.map(|g| Mat9::identity() * *g);
    let gamma_rot = spectrum_product(&lifted, &rin);
    let input_source = gamma_rot.map(|m| CVec::from_iterator(9, (m * x_in * re(2.0)).iter().copied()));

    let sys = FloquetSystem {
        dim: 9,
        q,
        omega: gen.omega,
        generator,
        pump: pump.clone(),
        pump_weight: 2.0,
        input_source,
        drift,
    };
    sys.with_q(q)
}

pub fn rot_steady_state(
    gen: &RotFrameGenerators,
    pump: &Spectrum<C64>,
    x_in: &Vec9,
    spin: f64,
    q: usize,
) -> Result<SteadyState> {
    steady_state(&rot_second_moment_system(gen, pump, x_in, spin, q)?)
}

/// Lab harmonics `X⁽ⁿ⁾ = Σ_k 𝖱⁽ᵏ⁾ X'⁽ⁿ⁻ᵏ⁾`, with the cutoff grown by 2.
pub fn rot_to_lab(xr: &FloquetVector, rot: &LiouvilleRotation) -> FloquetVector {
    assert_eq!(xr.dim, 9, "rot_to_lab acts on second moments");
    let q = xr.q + 2;
    FloquetVector::from_blocks(9, q, |n| {
        let mut acc = CVec::zeros(9);
        for k in -2i64..=2 {
            let b = xr.block(n - k);
            let m = rot.blocks.get(k);
            acc += to_dyn9(&m) * b;
        }
        acc
    })
}
