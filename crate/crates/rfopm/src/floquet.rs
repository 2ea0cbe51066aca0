//! Harmonic-balance engine: block assembly, steady states, convergence in
//! the cutoff, pump-free propagation and cycle-averaged demodulation.

use crate::algebra::{re, Coefficient, Mat3, Mat9, Spectrum, Vec3, Vec9, C64, I};
use crate::error::{Error, Result};
use crate::generators::{build_b_harmonics, build_c_harmonics, build_relaxation_drift, FieldConfig, RelaxationConfig};
use crate::linalg::{expm, phi12, CMat, CVec, Factorized};
use std::f64::consts::PI;

/// Condition estimates above this switch the pump-free propagator from
/// solves against `C̃` to the φ-function route.
pub const PHI_FALLBACK_COND: f64 = 1e12;

/// Steady-state solves are refused above this condition estimate.
pub const ILL_CONDITIONED: f64 = 1e-3 / f64::EPSILON;

pub const Q_MAX: usize = 25;

/// Harmonic amplitudes `n = -Q..=Q` stacked in blocks of size `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct FloquetVector {
    pub dim: usize,
    pub q: usize,
    pub data: CVec,
}

impl FloquetVector {
    pub fn zeros(dim: usize, q: usize) -> Self {
        FloquetVector { dim, q, data: CVec::zeros(dim * (2 * q + 1)) }
    }

    pub fn from_blocks(dim: usize, q: usize, mut f: impl FnMut(i64) -> CVec) -> Self {
        let mut v = Self::zeros(dim, q);
        for n in -(q as i64)..=q as i64 {
            let b = f(n);
            v.set_block(n, &b);
        }
        v
    }

    fn offset(&self, n: i64) -> usize {
        (n + self.q as i64) as usize * self.dim
    }

    /// Block `n`; zero outside the retained range.
    pub fn block(&self, n: i64) -> CVec {
        if n.unsigned_abs() as usize > self.q {
            return CVec::zeros(self.dim);
        }
        self.data.rows(self.offset(n), self.dim).into_owned()
    }

    pub fn set_block(&mut self, n: i64, b: &CVec) {
        let o = self.offset(n);
        self.data.rows_mut(o, self.dim).copy_from(b);
    }

    pub fn block9(&self, n: i64) -> Vec9 {
        assert_eq!(self.dim, 9);
        Vec9::from_iterator(self.block(n).iter().copied())
    }

    pub fn block3(&self, n: i64) -> Vec3 {
        assert_eq!(self.dim, 3);
        Vec3::from_iterator(self.block(n).iter().copied())
    }

    /// Re-cut to another cutoff, dropping or zero-padding blocks.
    pub fn with_cutoff(&self, q: usize) -> Self {
        Self::from_blocks(self.dim, q, |n| self.block(n))
    }

    /// Largest `|block(-n) - conj(block(n))|`.
    pub fn conjugate_asymmetry(&self) -> f64 {
        (0..=self.q as i64)
            .map(|n| (self.block(-n) - self.block(n).conj()).max_abs())
            .fold(0.0, f64::max)
    }

    /// `sum_n block(n) e^{i n θ}`.
    pub fn reconstruct(&self, theta: f64) -> CVec {
        let mut acc = CVec::zeros(self.dim);
        for n in -(self.q as i64)..=self.q as i64 {
            acc += self.block(n) * C64::from_polar(1.0, n as f64 * theta);
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.max_abs()
    }
}

/// `dY/dt = G(t) Y − w Γ_p(t) Y + s(t) + drift`, expanded in harmonics of ω.
#[derive(Clone, Debug)]
pub struct FloquetSystem {
    pub dim: usize,
    pub q: usize,
    pub omega: f64,
    /// `G⁽⁻¹⁾, G⁽⁰⁾, G⁽¹⁾`.
    pub generator: [CMat; 3],
    pub pump: Spectrum<C64>,
    /// 1 for the first moment, 2 for the second.
    pub pump_weight: f64,
    /// Harmonics of the input term `w Γ_p(t) Y_in(t)`.
    pub input_source: Spectrum<CVec>,
    /// Constant drift added to block 0.
    pub drift: CVec,
}

fn mat3_to_dyn(m: &Mat3) -> CMat {
    CMat::from_iterator(3, 3, m.iter().copied())
}

fn mat9_to_dyn(m: &Mat9) -> CMat {
    CMat::from_iterator(9, 9, m.iter().copied())
}

impl FloquetSystem {
    /// First-moment lab-frame system `dP/dt = B(t)P − Γ_p(t)(P − P_in)`.
    pub fn lab_first_moment(
        f: &FieldConfig,
        r: &RelaxationConfig,
        pump: &Spectrum<C64>,
        p_in: &Vec3,
        q: usize,
    ) -> Result<Self> {
        f.validate()?;
        r.validate()?;
        let b = build_b_harmonics(f, r);
        let p_in = CVec::from_iterator(3, p_in.iter().copied());
        FloquetSystem {
            dim: 3,
            q,
            omega: f.omega,
            generator: [mat3_to_dyn(&b.get(-1)), mat3_to_dyn(&b.get(0)), mat3_to_dyn(&b.get(1))],
            pump: pump.clone(),
            pump_weight: 1.0,
            input_source: pump.map(|g| &p_in * *g),
            drift: CVec::zeros(3),
        }
        .checked()
    }

    /// Second-moment lab-frame system
    /// `dX/dt = C(t)X − 2Γ_p(t)(X − X_in) + Λ_rel X₀`.
    pub fn lab_second_moment(
        f: &FieldConfig,
        r: &RelaxationConfig,
        pump: &Spectrum<C64>,
        x_in: &Vec9,
        q: usize,
    ) -> Result<Self> {
        f.validate()?;
        r.validate()?;
        let c = build_c_harmonics(&build_b_harmonics(f, r));
        let (lam, x0) = build_relaxation_drift(r);
        let x_in = CVec::from_iterator(9, x_in.iter().copied());
        FloquetSystem {
            dim: 9,
            q,
            omega: f.omega,
            generator: [mat9_to_dyn(&c.get(-1)), mat9_to_dyn(&c.get(0)), mat9_to_dyn(&c.get(1))],
            pump: pump.clone(),
            pump_weight: 2.0,
            input_source: pump.map(|g| &x_in * (*g * 2.0)),
            drift: CVec::from_iterator(9, (lam * x0).iter().copied()),
        }
        .checked()
    }

    fn checked(self) -> Result<Self> {
        if self.q < 1 {
            return Err(Error::InvalidParameter("Floquet cutoff Q must be >= 1".into()));
        }
        if !(self.omega > 0.0) {
            return Err(Error::InvalidParameter("rf frequency must be > 0".into()));
        }
        Ok(self)
    }

    pub fn with_q(&self, q: usize) -> Result<Self> {
        FloquetSystem { q, ..self.clone() }.checked()
    }

    /// The same dynamics with the pump switched off (the probe window).
    pub fn without_pump(&self) -> Self {
        FloquetSystem {
            pump: Spectrum::constant(re(0.0)),
            input_source: Spectrum::constant(CVec::zeros(self.dim)),
            ..self.clone()
        }
    }

    pub fn has_pump(&self) -> bool {
        self.pump.iter().any(|(_, c)| c.norm() > 0.0)
    }

    pub fn size(&self) -> usize {
        self.dim * (2 * self.q + 1)
    }

    /// Dense system matrix `A` and source `s`; the steady state solves
    /// `A x + s = 0`. Pump harmonics beyond `2Q` cannot couple retained
    /// blocks and are ignored.
    pub fn assemble(&self) -> Result<(CMat, CVec)> {
        self.clone().checked()?;
        let (d, q) = (self.dim, self.q as i64);
        let mut a = CMat::zeros(self.size(), self.size());
        let mut s = CVec::zeros(self.size());
        let at = |n: i64| (n + q) as usize * d;
        for n in -q..=q {
            let r = at(n);
            for (k, g) in [(-1i64, &self.generator[0]), (0, &self.generator[1]), (1, &self.generator[2])] {
                let m = n - k;
                if m.abs() <= q {
                    let mut v = a.view_mut((r, at(m)), (d, d));
                    v += g;
                }
            }
            for j in 0..d {
                a[(r + j, r + j)] -= I * (n as f64 * self.omega);
            }
            for m in -q..=q {
                let g = self.pump.get(n - m) * self.pump_weight;
                if g != re(0.0) {
                    for j in 0..d {
                        a[(r + j, at(m) + j)] -= g;
                    }
                }
            }
            if let Some(src) = self.input_source.coeff(n) {
                s.rows_mut(r, d).copy_from(src);
            }
        }
        let mut s0 = s.rows_mut(at(0), d);
        s0 += &self.drift;
        Ok((a, s))
    }
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub x: FloquetVector,
    /// `‖A x + s‖ / ‖s‖`.
    pub residual: f64,
    pub q: usize,
    pub condition: f64,
    pub converged: bool,
}

/// Solves the harmonic-balance equations by LU factorization.
pub fn steady_state(sys: &FloquetSystem) -> Result<SteadyState> {
    let (a, s) = sys.assemble()?;
    let lu = Factorized::new(&a)?;
    let condition = lu.condition_estimate();
    if condition > ILL_CONDITIONED {
        return Err(Error::IllConditioned { cond: condition });
    }
    let x = lu.solve(&(-&s));
    let snorm = s.norm();
    let residual = if snorm > 0.0 { (&a * &x + &s).norm() / snorm } else { (&a * &x).norm() };
    Ok(SteadyState {
        x: FloquetVector { dim: sys.dim, q: sys.q, data: x },
        residual,
        q: sys.q,
        condition,
        converged: residual < 1e-10,
    })
}

/// Relative sup-norm difference over the blocks shared by two solutions.
pub fn relative_change(a: &FloquetVector, b: &FloquetVector) -> f64 {
    let q = a.q.min(b.q) as i64;
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for n in -q..=q {
        diff = diff.max((a.block(n) - b.block(n)).max_abs());
        scale = scale.max(b.block(n).max_abs());
    }
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub q: usize,
    pub change: f64,
    /// `(Q, relative change from Q to Q+1)`.
    pub history: Vec<(usize, f64)>,
    pub state: SteadyState,
}

/// Raises the cutoff from `q_start` until the Q and Q+1 solutions agree to
/// `tol`; `build(q)` must return the system at cutoff `q`.
pub fn check_convergence(
    build: impl Fn(usize) -> Result<FloquetSystem>,
    q_start: usize,
    tol: f64,
) -> Result<ConvergenceReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("convergence tolerance must be > 0".into()));
    }
    let mut q = q_start.max(1);
    let mut prev = steady_state(&build(q)?)?;
    let mut history = Vec::new();
    while q < Q_MAX {
        let next = steady_state(&build(q + 1)?)?;
        let change = relative_change(&prev.x, &next.x);
        history.push((q, change));
        if change < tol {
            return Ok(ConvergenceReport { q, change, history, state: SteadyState { converged: true, ..prev } });
        }
        prev = next;
        q += 1;
    }
    let change = history.last().map(|h| h.1).unwrap_or(f64::INFINITY);
    Err(Error::NoConvergence { q_max: Q_MAX, change })
}

/// Pump-free generator `C̃` and drift vector `b` (drift in block 0).
fn free_parts(sys: &FloquetSystem) -> Result<(CMat, CVec)> {
    if sys.has_pump() {
        return Err(Error::InvalidParameter("free evolution requires the pump to be off".into()));
    }
    sys.assemble()
}

/// `X(t) = e^{C̃t} X(0) + C̃⁻¹(e^{C̃t} − I) b`.
pub fn evolve_free(x0: &FloquetVector, sys: &FloquetSystem, t: f64) -> Result<FloquetVector> {
    let (c, b) = free_parts(sys)?;
    check_shape(x0, sys)?;
    if t == 0.0 {
        return Ok(x0.clone());
    }
    let ct = &c * re(t);
    let e = expm(&ct)?;
    let n = c.nrows();
    let forced = match Factorized::new(&c) {
        Ok(lu) if lu.condition_estimate() <= PHI_FALLBACK_COND => {
            lu.solve(&((&e - CMat::identity(n, n)) * &b))
        }
        _ => {
            // Top-right column of exp([[C̃t, t b], [0, 0]]) is t φ₁(C̃t) b.
            let mut big = CMat::zeros(n + 1, n + 1);
            big.view_mut((0, 0), (n, n)).copy_from(&ct);
            big.view_mut((0, n), (n, 1)).copy_from(&(&b * re(t)));
            expm(&big)?.view((0, n), (n, 1)).into_owned().column(0).into_owned()
        }
    };
    Ok(FloquetVector { dim: x0.dim, q: x0.q, data: e * &x0.data + forced })
}

fn check_shape(x: &FloquetVector, sys: &FloquetSystem) -> Result<()> {
    if x.dim != sys.dim || x.q != sys.q {
        return Err(Error::InvalidParameter(format!(
            "state shape (D={}, Q={}) does not match system (D={}, Q={})",
            x.dim, x.q, sys.dim, sys.q
        )));
    }
    Ok(())
}

/// Precomputed cycle-average operator for one pump-free system, so many
/// initial conditions can share one matrix exponential.
#[derive(Clone, Debug)]
pub struct CycleAverager {
    dim: usize,
    q: usize,
    periods: usize,
    /// `e^{C̃T}`.
    step: CMat,
    /// `T φ₁(C̃T) b`.
    step_offset: CVec,
    /// `φ₁(C̃T)`.
    average: CMat,
    /// `T φ₂(C̃T) b`.
    average_offset: CVec,
    pub used_phi_fallback: bool,
}

impl CycleAverager {
    /// Averages over `periods` consecutive rf periods (1 is the standard
    /// single-period lock-in window).
    pub fn new(sys: &FloquetSystem, periods: usize) -> Result<Self> {
        if periods == 0 {
            return Err(Error::InvalidParameter("need at least one averaging period".into()));
        }
        let (c, b) = free_parts(sys)?;
        let n = c.nrows();
        let period = 2.0 * PI / sys.omega;
        let ct = &c * re(period);
        let lu = Factorized::new(&c).ok().filter(|lu| lu.condition_estimate() <= PHI_FALLBACK_COND);
        let (step, average, average_offset, step_offset, used) = match lu {
            Some(lu) => {
                let e = expm(&ct)?;
                let w = lu.solve_mat(&(&e - CMat::identity(n, n))) * re(1.0 / period);
                let wb = &w * &b;
                let avg_off = lu.solve(&(&wb - &b));
                let step_off = wb * re(period);
                (e, w, avg_off, step_off, false)
            }
            None => {
                let e = expm(&ct)?;
                let (p1, p2) = phi12(&ct)?;
                let step_off = &p1 * &b * re(period);
                let avg_off = &p2 * &b * re(period);
                (e, p1, avg_off, step_off, true)
            }
        };
        Ok(CycleAverager {
            dim: sys.dim,
            q: sys.q,
            periods,
            step,
            step_offset,
            average,
            average_offset,
            used_phi_fallback: used,
        })
    }

    pub fn apply(&self, x0: &FloquetVector) -> FloquetVector {
        assert_eq!((x0.dim, x0.q), (self.dim, self.q), "state shape mismatch");
        let mut x = x0.data.clone();
        let mut acc = CVec::zeros(x.len());
        for k in 0..self.periods {
            acc += &self.average * &x + &self.average_offset;
            if k + 1 < self.periods {
                x = &self.step * &x + &self.step_offset;
            }
        }
        FloquetVector { dim: self.dim, q: self.q, data: acc * re(1.0 / self.periods as f64) }
    }
}

/// `(1/T) ∫₀ᵀ X(t) dt` over one rf period of pump-free evolution.
pub fn cycle_average(x0: &FloquetVector, sys: &FloquetSystem) -> Result<FloquetVector> {
    check_shape(x0, sys)?;
    Ok(CycleAverager::new(sys, 1)?.apply(x0))
}

/// Lock-in output of harmonic `n`: in-phase and quadrature vectors. First
/// moments are real; second moments are Hermitian when reshaped (their
/// antisymmetric part is imaginary and carries the first moment).
#[derive(Clone, Debug, PartialEq)]
pub struct Demod {
    pub n: i64,
    pub xr: Vec<C64>,
    pub xi: Vec<C64>,
}

/// Residue tolerated (relative to the block scale) before a demodulated
/// amplitude is declared unphysical.
pub const REALNESS_TOL: f64 = 1e-9;

/// Deviation from realness (`D = 3`) or from Hermiticity (`D = 9`).
pub fn physical_residue(v: &CVec) -> f64 {
    if v.len() == 9 {
        let m = |i: usize, j: usize| v[3 * i + j];
        let mut r: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                r = r.max((m(i, j) - m(j, i).conj()).norm());
            }
        }
        r
    } else {
        v.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

/// `X_R = (X⁽ⁿ⁾ + X⁽⁻ⁿ⁾)/2`, `X_I = −i(X⁽ⁿ⁾ − X⁽⁻ⁿ⁾)/2`.
pub fn demodulate(avg: &FloquetVector, n: i64) -> Result<Demod> {
    if n.unsigned_abs() as usize > avg.q {
        return Err(Error::MissingHarmonic { n, q: avg.q });
    }
    let p = avg.block(n);
    let m = avg.block(-n);
    let xr = (&p + &m) * re(0.5);
    let xi = (&p - &m) * (-I * 0.5);
    let residue = physical_residue(&xr).max(physical_residue(&xi));
    let scale = avg.max_abs().max(1.0);
    if residue > REALNESS_TOL * scale {
        return Err(Error::NotReal { residue });
    }
    Ok(Demod { n, xr: xr.iter().copied().collect(), xi: xi.iter().copied().collect() })
}
