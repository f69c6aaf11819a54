use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::MathError;

/// Miller-Rabin rounds; each round has error at most 1/4, so 40 rounds
/// bound the false-positive rate by 2^-80.
pub const PRIMALITY_ROUNDS: usize = 40;

const SMALL_PRIMES: [u32; 24] =
    [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89];

/// `base^exponent mod modulus` by square-and-multiply.
pub fn mod_exp(base: &BigUint, exponent: &BigUint, modulus: &BigUint) -> Result<BigUint, MathError> {
    if modulus < &BigUint::from(2u8) {
        return Err(MathError::BadModulus);
    }
    Ok(base.modpow(exponent, modulus))
}

/// Inverse of `value` modulo `modulus` by the extended Euclidean algorithm.
pub fn mod_inverse(value: &BigUint, modulus: &BigUint) -> Result<BigUint, MathError> {
    if modulus < &BigUint::from(2u8) {
        return Err(MathError::BadModulus);
    }
    let m = BigInt::from_biguint(Sign::Plus, modulus.clone());
    let (mut old_r, mut r) = (BigInt::from_biguint(Sign::Plus, value % modulus), m.clone());
    let (mut old_s, mut s) = (BigInt::one(), BigInt::zero());
    while !r.is_zero() {
        let quotient = &old_r / &r;
        let next_r = &old_r - &quotient * &r;
        old_r = std::mem::replace(&mut r, next_r);
        let next_s = &old_s - &quotient * &s;
        old_s = std::mem::replace(&mut s, next_s);
    }
    if !old_r.is_one() {
        return Err(MathError::NoInverse);
    }
    Ok(old_s.mod_floor(&m).to_biguint().expect("mod_floor result is non-negative"))
}

/// Uniform integer in `[0, bound)` by rejection sampling on masked bytes.
pub(crate) fn random_below<R: RngCore + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    debug_assert!(!bound.is_zero());
    let bits = bound.bits();
    let len = bits.div_ceil(8) as usize;
    let top_mask = match bits % 8 {
        0 => 0xff,
        rem => (1u8 << rem) - 1,
    };
    let mut buf = vec![0u8; len];
    loop {
        rng.fill_bytes(&mut buf);
        buf[0] &= top_mask;
        let candidate = BigUint::from_bytes_be(&buf);
        if &candidate < bound {
            return candidate;
        }
    }
}

/// Probabilistic primality test with error below 2^-80.
///
/// Witnesses come from a fixed-seed stream so the answer for a given input
/// never changes between runs.
pub fn is_probable_prime(n: &BigUint) -> bool {
    is_probable_prime_with_rounds(n, PRIMALITY_ROUNDS)
}

pub(crate) fn is_probable_prime_with_rounds(n: &BigUint, rounds: usize) -> bool {
    let two = BigUint::from(2u8);
    if n < &two {
        return false;
    }
    for &small in &SMALL_PRIMES {
        let small = BigUint::from(small);
        if n == &small {
            return true;
        }
        if (n % &small).is_zero() {
            return false;
        }
    }

    let n_minus_one = n - 1u8;
    let shift = n_minus_one.trailing_zeros().expect("n - 1 is even and nonzero");
    let odd_part = &n_minus_one >> shift;
    // witnesses are drawn from [2, n-2]
    let witness_span = n - 3u8;

    let mut rng = ChaCha20Rng::seed_from_u64(0x6d69_6c6c_6572_7261);
    'witness: for _ in 0..rounds {
        let a = random_below(&mut rng, &witness_span) + 2u8;
        let mut x = a.modpow(&odd_part, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..shift {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
