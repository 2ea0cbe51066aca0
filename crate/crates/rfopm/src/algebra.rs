//! Small fixed-size types, the row-major Liouville vectorization, and
//! truncated two-sided Fourier series.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Vec3 = SVector<C64, 3>;
pub type Mat3 = SMatrix<C64, 3, 3>;
pub type Vec9 = SVector<C64, 9>;
pub type Mat9 = SMatrix<C64, 9, 9>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Row-major flattening: entry `3*i + j` holds `sigma[(i, j)]`.
pub fn vec_rm(sigma: &Mat3) -> Vec9 {
    Vec9::from_fn(|k, _| sigma[(k / 3, k % 3)])
}

pub fn unvec_rm(v: &Vec9) -> Mat3 {
    Mat3::from_fn(|i, j| v[3 * i + j])
}

/// `L(O)` with `vec(O * sigma) = L(O) * vec(sigma)`, i.e. `O ⊗ I3`.
pub fn liouville_left(o: &Mat3) -> Mat9 {
    Mat9::from_fn(|r, c| {
        if r % 3 == c % 3 {
            o[(r / 3, c / 3)]
        } else {
            C64::default()
        }
    })
}

/// `R(O)` with `vec(sigma * O) = R(O) * vec(sigma)`, i.e. `I3 ⊗ Oᵀ`.
pub fn liouville_right(o: &Mat3) -> Mat9 {
    Mat9::from_fn(|r, c| {
        if r / 3 == c / 3 {
            o[(c % 3, r % 3)]
        } else {
            C64::default()
        }
    })
}

/// Coefficient types a [`Spectrum`] can carry.
pub trait Coefficient: Clone {
    fn zero_like(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, s: C64) -> Self;
    fn conj(&self) -> Self;
    /// Largest entry modulus.
    fn max_abs(&self) -> f64;
}

impl Coefficient for C64 {
    fn zero_like(&self) -> Self {
        C64::default()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, s: C64) -> Self {
        self * s
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn max_abs(&self) -> f64 {
        self.norm()
    }
}

impl<const R: usize, const C: usize> Coefficient for SMatrix<C64, R, C> {
    fn zero_like(&self) -> Self {
        Self::zeros()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        // Only square blocks are ever multiplied.
        assert_eq!(R, C, "product of non-square blocks");
        let mut out = Self::zeros();
        for i in 0..R {
            for j in 0..C {
                let mut acc = C64::default();
                for k in 0..C {
                    acc += self[(i, k)] * other[(k, j)];
                }
                out[(i, j)] = acc;
            }
        }
        out
    }
    fn scale(&self, s: C64) -> Self {
        self * s
    }
    fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

impl Coefficient for DMatrix<C64> {
    fn zero_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, s: C64) -> Self {
        self * s
    }
    fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

impl Coefficient for DVector<C64> {
    fn zero_like(&self) -> Self {
        DVector::zeros(self.len())
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self.component_mul(other)
    }
    fn scale(&self, s: C64) -> Self {
        self * s
    }
    fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// Truncated series `sum_{n=-N..N} c_n e^{i n ω t}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T> {
    cutoff: usize,
    coeffs: Vec<T>,
}

impl<T: Coefficient> Spectrum<T> {
    /// Builds the series from `f(n)` for `n = -cutoff..=cutoff`.
    pub fn from_fn(cutoff: usize, mut f: impl FnMut(i64) -> T) -> Self {
        let n = cutoff as i64;
        Spectrum {
            cutoff,
            coeffs: (-n..=n).map(&mut f).collect(),
        }
    }

    /// A series whose only nonzero coefficient is `c_0`.
    pub fn constant(c0: T) -> Self {
        Spectrum {
            cutoff: 0,
            coeffs: vec![c0],
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Coefficient `c_n`; zero outside the stored range.
    pub fn get(&self, n: i64) -> T {
        if n.unsigned_abs() as usize > self.cutoff {
            self.coeffs[0].zero_like()
        } else {
            self.coeffs[(n + self.cutoff as i64) as usize].clone()
        }
    }

    pub fn coeff(&self, n: i64) -> Option<&T> {
        if n.unsigned_abs() as usize > self.cutoff {
            None
        } else {
            Some(&self.coeffs[(n + self.cutoff as i64) as usize])
        }
    }

    /// Iterates `(n, c_n)` from `-N` to `N`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &T)> {
        let n = self.cutoff as i64;
        (-n..=n).zip(self.coeffs.iter())
    }

    pub fn map<U: Coefficient>(&self, f: impl Fn(&T) -> U) -> Spectrum<U> {
        Spectrum {
            cutoff: self.cutoff,
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    /// Keeps `|n| <= cutoff`, padding with zeros if the cutoff grows.
    pub fn truncate(&self, cutoff: usize) -> Self {
        Spectrum::from_fn(cutoff, |n| self.get(n))
    }

    /// Value at phase `theta = ω t`.
    pub fn eval(&self, theta: f64) -> T {
        let mut acc = self.coeffs[0].zero_like();
        for (n, c) in self.iter() {
            acc = acc.add(&c.scale(C64::from_polar(1.0, n as f64 * theta)));
        }
        acc
    }

    /// Largest `|c_{-n} - conj(c_n)|` over the series.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let n = self.cutoff as i64;
        (0..=n)
            .map(|k| {
                let d = self.get(-k).add(&self.get(k).conj().scale(re(-1.0)));
                d.max_abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Cauchy product `c_n = sum_k a_k b_{n-k}` with cutoff `N_a + N_b`.
pub fn spectrum_product<T: Coefficient>(a: &Spectrum<T>, b: &Spectrum<T>) -> Spectrum<T> {
    let na = a.cutoff as i64;
    let nb = b.cutoff as i64;
    let zero = a.coeffs[0].zero_like();
    Spectrum::from_fn(a.cutoff + b.cutoff, |n| {
        let mut acc = zero.clone();
        for k in (-na).max(n - nb)..=na.min(n + nb) {
            acc = acc.add(&a.get(k).mul(&b.get(n - k)));
        }
        acc
    })
}
