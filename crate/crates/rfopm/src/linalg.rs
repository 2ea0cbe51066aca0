//! Dense complex kernels: matrix products, Padé-13 matrix exponential,
//! LU factorization with a 1-norm condition estimate, and the φ-function
//! fallbacks used by the free-evolution propagator.

use crate::algebra::{re, C64};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, Dyn, LU};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Inputs beyond this 1-norm are rejected by [`expm`]: the squaring phase
/// would need more than ~60 steps and the result is no longer trustworthy.
pub const EXPM_MAX_NORM: f64 = 1e16;

/// Complex product through three real products (Gauss), so the inner loops
/// run on the blocked real kernel.
pub fn cmatmul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows());
    if a.nrows() * a.ncols() * b.ncols() < 4096 {
        return a * b;
    }
    let ar = a.map(|z| z.re);
    let ai = a.map(|z| z.im);
    let br = b.map(|z| z.re);
    let bi = b.map(|z| z.im);
    let t1 = &ar * &br;
    let t2 = &ai * &bi;
    let t3 = (&ar + &ai) * (&br + &bi);
    CMat::from_fn(a.nrows(), b.ncols(), |i, j| {
        C64::new(t1[(i, j)] - t2[(i, j)], t3[(i, j)] - t1[(i, j)] - t2[(i, j)])
    })
}

pub fn norm1(a: &CMat) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

const THETA13: f64 = 5.371_920_351_148_152;

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// `exp(A)` by scaling and squaring with the degree-13 diagonal Padé
/// approximant.
pub fn expm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let nrm = norm1(a);
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) || nrm > EXPM_MAX_NORM {
        return Err(Error::ExpmRange { norm: nrm });
    }
    if n == 0 {
        return Ok(a.clone());
    }
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * re(0.5f64.powi(s));
    let eye = CMat::identity(n, n);
    let b = |k: usize| re(PADE13[k]);

    let a2 = cmatmul(&a, &a);
    let a4 = cmatmul(&a2, &a2);
    let a6 = cmatmul(&a2, &a4);

    let w1 = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let w2 = &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &eye * b(1);
    let u = cmatmul(&a, &(cmatmul(&a6, &w1) + w2));

    let z1 = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let z2 = &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &eye * b(0);
    let v = cmatmul(&a6, &z1) + z2;

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).ok_or(Error::Singular)?;
    for _ in 0..s {
        r = cmatmul(&r, &r);
    }
    Ok(r)
}

/// LU factorization with partial pivoting plus what is needed for solves
/// with the adjoint (for the condition estimate).
pub struct Factorized {
    lu: LU<C64, Dyn, Dyn>,
    norm1: f64,
}

impl Factorized {
    pub fn new(a: &CMat) -> Result<Self> {
        let norm1 = norm1(a);
        let lu = a.clone().lu();
        let u = lu.u();
        let tiny = f64::EPSILON * norm1.max(f64::MIN_POSITIVE);
        if (0..u.nrows()).any(|k| u[(k, k)].norm() <= tiny) {
            return Err(Error::Singular);
        }
        Ok(Factorized { lu, norm1 })
    }

    pub fn solve(&self, b: &CVec) -> CVec {
        self.lu.solve(b).expect("nonsingular by construction")
    }

    pub fn solve_mat(&self, b: &CMat) -> CMat {
        self.lu.solve(b).expect("nonsingular by construction")
    }

    /// Solves `Aᴴ y = x` reusing the factors of `A`.
    pub fn solve_adjoint(&self, x: &CVec) -> CVec {
        // P A = L U  =>  Aᴴ = Uᴴ Lᴴ P.
        let l = self.lu.l();
        let u = self.lu.u();
        let z = u.ad_solve_upper_triangular(x).expect("nonsingular U");
        let mut w = l.ad_solve_lower_triangular(&z).expect("unit L");
        self.lu.p().inv_permute_rows(&mut w);
        w
    }

    /// Hager-Higham estimate of `‖A⁻¹‖₁`.
    pub fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.lu.l().nrows();
        let mut x = CVec::from_element(n, re(1.0 / n as f64));
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            est = y.iter().map(|z| z.norm()).sum::<f64>();
            let xi = y.map(|z| if z.norm() > 0.0 { z / z.norm() } else { re(1.0) });
            let z = self.solve_adjoint(&xi);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(k, v)| (k, v.norm()))
                .fold((0, 0.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            let ztx = z.dotc(&x).re;
            if zmax <= ztx {
                break;
            }
            x = CVec::zeros(n);
            x[j] = re(1.0);
        }
        // Alternating-sign probe guards against the classic failure cases.
        let alt = CVec::from_fn(n, |k, _| {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            re(s * (1.0 + k as f64 / (n.max(2) - 1) as f64))
        });
        let y = self.solve(&alt);
        let alt_est = 2.0 * y.iter().map(|z| z.norm()).sum::<f64>() / (3.0 * n as f64);
        est.max(alt_est)
    }

    /// Estimate of the 1-norm condition number.
    pub fn condition_estimate(&self) -> f64 {
        self.norm1 * self.inverse_norm1_estimate()
    }
}

/// `[φ₁(A), φ₂(A)]` via the exponential of the 3n×3n block matrix
/// `[[A, I, 0], [0, 0, I], [0, 0, 0]]`. Used when `A` is too close to
/// singular for the solve-based formulas.
pub fn phi12(a: &CMat) -> Result<(CMat, CMat)> {
    let n = a.nrows();
    let mut big = CMat::zeros(3 * n, 3 * n);
    big.view_mut((0, 0), (n, n)).copy_from(a);
    for k in 0..n {
        big[(k, n + k)] = re(1.0);
        big[(n + k, 2 * n + k)] = re(1.0);
    }
    let e = expm(&big)?;
    Ok((
        e.view((0, n), (n, n)).into_owned(),
        e.view((0, 2 * n), (n, n)).into_owned(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Coefficient;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> CMat {
        CMat::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
        })
    }

    /// Plain Taylor series with enough terms; the oracle for small norms.
    fn taylor_exp(a: &CMat) -> CMat {
        let n = a.nrows();
        let mut term = CMat::identity(n, n);
        let mut sum = term.clone();
        for k in 1..80 {
            term = &term * a * re(1.0 / k as f64);
            sum += &term;
        }
        sum
    }

    #[test]
    fn gauss_product_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = rand_mat(40, 1.0, &mut rng);
        let b = rand_mat(40, 1.0, &mut rng);
        assert!((cmatmul(&a, &b) - &a * &b).max_abs() < 1e-12);
    }

    #[test]
    fn expm_matches_taylor() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for scale in [0.05, 0.5, 1.5] {
            let a = rand_mat(12, scale, &mut rng);
            let e = expm(&a).unwrap();
            let t = taylor_exp(&a);
            assert!((e - &t).max_abs() < 1e-11 * t.max_abs().max(1.0), "scale {scale}");
        }
    }

    #[test]
    fn expm_of_rotation_and_decay() {
        let th = 7.3;
        let a = CMat::from_row_slice(2, 2, &[re(-0.2), re(-th), re(th), re(-0.2)]);
        let e = expm(&a).unwrap();
        let g = (-0.2f64).exp();
        assert!((e[(0, 0)] - re(g * th.cos())).norm() < 1e-13);
        assert!((e[(1, 0)] - re(g * th.sin())).norm() < 1e-13);
    }

    #[test]
    fn expm_semigroup_at_large_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = rand_mat(20, 2.0, &mut rng) - CMat::identity(20, 20) * re(6.0);
        let e1 = expm(&a).unwrap();
        let half = expm(&(&a * re(0.5))).unwrap();
        let e2 = &half * &half;
        assert!((e1 - &e2).max_abs() < 1e-10 * e2.max_abs().max(1e-300));
    }

    #[test]
    fn expm_rejects_non_finite() {
        let mut a = CMat::zeros(2, 2);
        a[(0, 1)] = re(f64::NAN);
        assert!(matches!(expm(&a), Err(Error::ExpmRange { .. })));
    }

    #[test]
    fn adjoint_solve_and_condition() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = rand_mat(15, 1.0, &mut rng) + CMat::identity(15, 15) * re(3.0);
        let f = Factorized::new(&a).unwrap();
        let x = CVec::from_fn(15, |k, _| C64::new(k as f64, 1.0));
        let y = f.solve_adjoint(&x);
        assert!((a.adjoint() * &y - &x).max_abs() < 1e-12);

        let inv = a.clone().try_inverse().unwrap();
        let exact = norm1(&a) * norm1(&inv);
        let est = f.condition_estimate();
        assert!(est <= exact * (1.0 + 1e-12) && est > exact / 3.0, "{est} {exact}");
    }

    #[test]
    fn singular_is_reported() {
        let a = CMat::from_row_slice(2, 2, &[re(1.0), re(2.0), re(2.0), re(4.0)]);
        assert!(matches!(Factorized::new(&a), Err(Error::Singular)));
    }

    #[test]
    fn phi_functions_match_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let a = rand_mat(6, 0.7, &mut rng);
        let (p1, p2) = phi12(&a).unwrap();
        let n = 6;
        let mut term = CMat::identity(n, n);
        let mut s1 = CMat::zeros(n, n);
        let mut s2 = CMat::zeros(n, n);
        for k in 0..60 {
            // term = A^k / k!
            s1 += &term * re(1.0 / (k as f64 + 1.0));
            s2 += &term * re(1.0 / ((k as f64 + 1.0) * (k as f64 + 2.0)));
            term = &term * &a * re(1.0 / (k as f64 + 1.0));
        }
        assert!((p1 - s1).max_abs() < 1e-12);
        assert!((p2 - s2).max_abs() < 1e-12);
    }
}
