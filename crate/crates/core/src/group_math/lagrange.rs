use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::One;

use super::arith::mod_inverse;
use super::{MathError, Point, Scalar};

pub const MAX_INTERPOLATION_POINTS: usize = 4096;

/// Evaluates at `x0` the unique polynomial of degree `< points.len()` over
/// `Z_q` passing through `points`, using the Lagrange basis directly.
pub fn lagrange_eval(points: &[Point], x0: &Scalar, q: &BigUint) -> Result<Scalar, MathError> {
    lagrange_eval_with_limit(points, x0, q, MAX_INTERPOLATION_POINTS)
}

pub fn lagrange_eval_with_limit(points: &[Point], x0: &Scalar, q: &BigUint, limit: usize) -> Result<Scalar, MathError> {
    if points.is_empty() {
        return Err(MathError::EmptyPointSet);
    }
    if points.len() > limit {
        return Err(MathError::TooManyPoints { count: points.len(), limit });
    }
    let xs: Vec<BigUint> = points.iter().map(|p| p.x.value() % q).collect();
    let mut seen = HashSet::with_capacity(xs.len());
    if !xs.iter().all(|x| seen.insert(x)) {
        return Err(MathError::DuplicateAbscissa);
    }

    let x0 = x0.value() % q;
    // (a - b) mod q for reduced a, b
    let sub = |a: &BigUint, b: &BigUint| (a + q - b) % q;

    let mut acc = BigUint::ZERO;
    for (i, (xi, point)) in xs.iter().zip(points).enumerate() {
        let mut numerator = BigUint::one();
        let mut denominator = BigUint::one();
        for (j, xj) in xs.iter().enumerate() {
            if i == j {
                continue;
            }
            numerator = numerator * sub(&x0, xj) % q;
            denominator = denominator * sub(xi, xj) % q;
        }
        // distinct abscissas modulo a prime always give an invertible product
        let inverse = mod_inverse(&denominator, q)?;
        acc = (acc + (point.y.value() % q) * numerator % q * inverse) % q;
    }
    Ok(Scalar::from_unreduced(acc))
}
