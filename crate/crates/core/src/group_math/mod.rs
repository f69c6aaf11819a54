//! Modular arithmetic over a Schnorr group and interpolation over its
//! exponent field.
//!
//! A [`GroupParams`] fixes a prime modulus `p`, a prime order `q | p - 1`
//! and a generator `g` of the order-`q` subgroup of `Z_p^*`. [`Scalar`]s
//! live in `Z_q`; [`GroupElement`]s live in the subgroup generated by `g`.

mod arith;
pub mod hexint;
mod lagrange;
mod params;
pub mod presets;

use num_bigint::BigUint;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use arith::{is_probable_prime, mod_exp, mod_inverse, PRIMALITY_ROUNDS};
pub use lagrange::{lagrange_eval, lagrange_eval_with_limit, MAX_INTERPOLATION_POINTS};
pub use params::{generate_params, validate_params, GroupParams, HashAlg, PrimeRole};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MathError {
    #[error("{0} is not prime")]
    NotPrime(PrimeRole),
    #[error("q does not divide p - 1")]
    OrderMismatch,
    #[error("g is not a generator of the order-q subgroup")]
    BadGenerator,
    #[error("modulus must be at least 2")]
    BadModulus,
    #[error("value has no inverse modulo the given modulus")]
    NoInverse,
    #[error("two interpolation points share an abscissa")]
    DuplicateAbscissa,
    #[error("cannot interpolate through an empty point set")]
    EmptyPointSet,
    #[error("{count} points exceeds the interpolation limit of {limit}")]
    TooManyPoints { count: usize, limit: usize },
    #[error("integer is not a reduced residue modulo q")]
    ScalarOutOfRange,
    #[error("integer is not an element of the order-q subgroup")]
    NotInSubgroup,
}

/// A residue modulo `q`.
///
/// The type does not carry `q`; values built through [`GroupParams`] are
/// reduced, and values read from the wire should be checked with
/// [`GroupParams::is_scalar`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Scalar(#[serde(with = "hexint")] BigUint);

impl Scalar {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn into_value(self) -> BigUint {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0 == BigUint::ZERO
    }

    /// Wraps an integer without reducing it. Callers vouch for `value < q`.
    pub fn from_unreduced(value: BigUint) -> Self {
        Scalar(value)
    }
}

impl From<u64> for Scalar {
    fn from(value: u64) -> Self {
        Scalar(BigUint::from(value))
    }
}

impl std::fmt::Display for Scalar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&hexint::encode(&self.0))
    }
}

/// An element of the order-`q` subgroup of `Z_p^*`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(#[serde(with = "hexint")] BigUint);

impl GroupElement {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// Wraps an integer without the subgroup check.
    pub fn from_unchecked(value: BigUint) -> Self {
        GroupElement(value)
    }
}

impl std::fmt::Display for GroupElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&hexint::encode(&self.0))
    }
}

/// A point `(x, y)` on a polynomial over `Z_q`. Serialized as `[x, y]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "(Scalar, Scalar)", into = "(Scalar, Scalar)")]
pub struct Point {
    pub x: Scalar,
    pub y: Scalar,
}

impl Point {
    pub fn new(x: Scalar, y: Scalar) -> Self {
        Point { x, y }
    }
}

impl From<(Scalar, Scalar)> for Point {
    fn from((x, y): (Scalar, Scalar)) -> Self {
        Point { x, y }
    }
}

impl From<Point> for (Scalar, Scalar) {
    fn from(point: Point) -> Self {
        (point.x, point.y)
    }
}

/// Uniform scalar in `[0, q)` or, without `allow_zero`, in `[1, q)`.
///
/// Rejection sampling keeps the distribution free of modulo bias.
///
/// # Panics
///
/// If `q < 3`.
pub fn random_scalar<R: RngCore + ?Sized>(rng: &mut R, q: &BigUint, allow_zero: bool) -> Scalar {
    assert!(q >= &BigUint::from(3u8), "random_scalar needs q >= 3");
    loop {
        let candidate = arith::random_below(rng, q);
        if allow_zero || candidate != BigUint::ZERO {
            return Scalar(candidate);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn same_seed_same_sequence() {
        let q = BigUint::from(1_048_573u32);
        let draw = |seed| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            (0..64).map(|_| random_scalar(&mut rng, &q, true)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn nonzero_draws_never_zero() {
        let q = BigUint::from(11u8);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..100_000 {
            let s = random_scalar(&mut rng, &q, false);
            assert!(!s.is_zero());
            assert!(s.value() < &q);
        }
    }

    #[test]
    fn residues_uniform_within_five_sigma() {
        let q = BigUint::from(11u8);
        let draws = 100_000usize;
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut counts = [0usize; 11];
        for _ in 0..draws {
            let s = random_scalar(&mut rng, &q, true);
            counts[s.value().to_u32_digits().first().copied().unwrap_or(0) as usize] += 1;
        }
        let p = 1.0 / 11.0;
        let expected = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        let mut chi_square = 0.0;
        for (residue, &count) in counts.iter().enumerate() {
            let deviation = count as f64 - expected;
            assert!(deviation.abs() <= 5.0 * sigma, "residue {residue}: {count}");
            chi_square += deviation * deviation / expected;
        }
        // 10 degrees of freedom; 0.999 quantile is 29.59
        assert!(chi_square < 29.59, "chi-square {chi_square}");
    }

    #[test]
    #[should_panic(expected = "q >= 3")]
    fn tiny_order_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        random_scalar(&mut rng, &BigUint::from(2u8), false);
    }

    #[test]
    fn point_serializes_as_pair() {
        let point = Point::new(Scalar::from(2), Scalar::from(255));
        let json = serde_json::to_string(&point).unwrap();
        assert_eq!(json, r#"["2","ff"]"#);
        assert_eq!(serde_json::from_str::<Point>(&json).unwrap(), point);
    }
}
