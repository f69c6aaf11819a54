use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::arith::{is_probable_prime, is_probable_prime_with_rounds, random_below};
use super::{hexint, GroupElement, MathError, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimeRole {
    Modulus,
    Order,
}

impl fmt::Display for PrimeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrimeRole::Modulus => f.write_str("p"),
            PrimeRole::Order => f.write_str("q"),
        }
    }
}

/// The hash every member agrees on for key commitments and signatures.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HashAlg {
    #[default]
    Sha256,
}

impl HashAlg {
    pub const fn output_len(self) -> usize {
        match self {
            HashAlg::Sha256 => 32,
        }
    }

    pub fn digest(self, input: &[u8]) -> Vec<u8> {
        use sha2::Digest;
        match self {
            HashAlg::Sha256 => sha2::Sha256::digest(input).to_vec(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    #[serde(with = "hexint")]
    p: BigUint,
    #[serde(with = "hexint")]
    q: BigUint,
    #[serde(with = "hexint")]
    g: BigUint,
    #[serde(default)]
    hash: HashAlg,
}

/// Validated Schnorr group parameters plus the agreed hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct GroupParams {
    p: BigUint,
    q: BigUint,
    g: BigUint,
    hash: HashAlg,
}

impl TryFrom<RawParams> for GroupParams {
    type Error = MathError;

    fn try_from(raw: RawParams) -> Result<Self, MathError> {
        validate_params(raw.p, raw.q, raw.g).map(|params| params.with_hash(raw.hash))
    }
}

impl From<GroupParams> for RawParams {
    fn from(params: GroupParams) -> Self {
        RawParams { p: params.p, q: params.q, g: params.g, hash: params.hash }
    }
}

/// Checks primality of `p` and `q`, `q | p - 1`, and that `g` has order `q`.
pub fn validate_params(p: BigUint, q: BigUint, g: BigUint) -> Result<GroupParams, MathError> {
    if !is_probable_prime(&p) {
        return Err(MathError::NotPrime(PrimeRole::Modulus));
    }
    if !is_probable_prime(&q) {
        return Err(MathError::NotPrime(PrimeRole::Order));
    }
    if !((&p - 1u8) % &q).is_zero() {
        return Err(MathError::OrderMismatch);
    }
    // q is prime, so g != 1 with g^q = 1 has order exactly q
    if g <= BigUint::one() || g >= p || !g.modpow(&q, &p).is_one() {
        return Err(MathError::BadGenerator);
    }
    Ok(GroupParams { p, q, g, hash: HashAlg::Sha256 })
}

/// Draws a fresh parameter set with a `q_bits`-bit order and `p_bits`-bit
/// modulus. Slow for realistic sizes; the shipped fixtures cover tests.
pub fn generate_params<R: RngCore + ?Sized>(rng: &mut R, p_bits: u64, q_bits: u64) -> GroupParams {
    assert!(q_bits >= 3 && p_bits > q_bits + 1, "need p_bits > q_bits + 1 and q_bits >= 3");
    let q = loop {
        let candidate = random_with_top_bit(rng, q_bits) | BigUint::one();
        if is_probable_prime(&candidate) {
            break candidate;
        }
    };
    let cofactor_bits = p_bits - q.bits();
    let p = loop {
        let mut k = random_with_top_bit(rng, cofactor_bits);
        k.set_bit(0, false);
        let candidate = &k * &q + 1u8;
        if candidate.bits() != p_bits {
            continue;
        }
        // one cheap round filters almost every composite before the full test
        if is_probable_prime_with_rounds(&candidate, 1) && is_probable_prime(&candidate) {
            break candidate;
        }
    };
    let cofactor = (&p - 1u8) / &q;
    let mut h = BigUint::from(2u8);
    let g = loop {
        let g = h.modpow(&cofactor, &p);
        if !g.is_one() {
            break g;
        }
        h += 1u8;
    };
    validate_params(p, q, g).expect("generated parameters are valid by construction")
}

fn random_with_top_bit<R: RngCore + ?Sized>(rng: &mut R, bits: u64) -> BigUint {
    let mut value = random_below(rng, &(BigUint::one() << bits));
    value.set_bit(bits - 1, true);
    value
}

impl GroupParams {
    pub fn with_hash(mut self, hash: HashAlg) -> Self {
        self.hash = hash;
        self
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    pub fn hash(&self) -> HashAlg {
        self.hash
    }

    /// Byte length of `q`; the fixed width of an encoded scalar.
    pub fn scalar_len(&self) -> usize {
        self.q.bits().div_ceil(8) as usize
    }

    /// Byte length of `p`; the fixed width of an encoded group element.
    pub fn element_len(&self) -> usize {
        self.p.bits().div_ceil(8) as usize
    }

    pub fn generator(&self) -> GroupElement {
        GroupElement(self.g.clone())
    }

    pub fn reduce(&self, value: &BigUint) -> Scalar {
        Scalar(value % &self.q)
    }

    pub fn scalar(&self, value: BigUint) -> Result<Scalar, MathError> {
        if value < self.q {
            Ok(Scalar(value))
        } else {
            Err(MathError::ScalarOutOfRange)
        }
    }

    pub fn is_scalar(&self, scalar: &Scalar) -> bool {
        scalar.0 < self.q
    }

    pub fn element(&self, value: BigUint) -> Result<GroupElement, MathError> {
        let element = GroupElement(value);
        if self.is_element(&element) {
            Ok(element)
        } else {
            Err(MathError::NotInSubgroup)
        }
    }

    pub fn is_element(&self, element: &GroupElement) -> bool {
        let v = &element.0;
        !v.is_zero() && v < &self.p && v.modpow(&self.q, &self.p).is_one()
    }

    /// `g^exponent mod p`.
    pub fn exp_g(&self, exponent: &Scalar) -> GroupElement {
        GroupElement(self.g.modpow(&exponent.0, &self.p))
    }

    /// `base^exponent mod p`; stays in the subgroup for any exponent.
    pub fn exp(&self, base: &GroupElement, exponent: &BigUint) -> GroupElement {
        GroupElement(base.0.modpow(exponent, &self.p))
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement(&a.0 * &b.0 % &self.p)
    }

    /// Fixed-width big-endian encoding of a scalar.
    pub fn encode_scalar(&self, scalar: &Scalar) -> Vec<u8> {
        left_pad(&scalar.0, self.scalar_len())
    }

    /// Fixed-width big-endian encoding of a group element.
    pub fn encode_element(&self, element: &GroupElement) -> Vec<u8> {
        left_pad(&element.0, self.element_len())
    }
}

fn left_pad(value: &BigUint, width: usize) -> Vec<u8> {
    let bytes = if value.is_zero() { Vec::new() } else { value.to_bytes_be() };
    assert!(bytes.len() <= width, "value wider than its field");
    let mut out = vec![0u8; width - bytes.len()];
    out.extend_from_slice(&bytes);
    out
}
