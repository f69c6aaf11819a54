//! A simulated certificate authority.
//!
//! Certificates are Schnorr signatures over the same group the protocol
//! uses, so the whole system lives in one algebraic structure. The CA is a
//! local object: no revocation, no expiry, no chains.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group_math::{random_scalar, GroupElement, GroupParams, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PkiError {
    #[error("member identifier 0 is reserved for the session key abscissa")]
    ZeroIdentifier,
    #[error("member identifier {0} is not below q")]
    IdentifierOutOfRange(Scalar),
    #[error("member identifier {0} is already registered")]
    DuplicateIdentifier(Scalar),
    #[error("private key is not below q")]
    PrivateKeyOutOfRange,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaKeypair {
    pub signing_scalar: Scalar,
    pub verify_element: GroupElement,
}

impl CaKeypair {
    pub fn from_signing_scalar(params: &GroupParams, signing_scalar: Scalar) -> Self {
        let verify_element = params.exp_g(&signing_scalar);
        CaKeypair { signing_scalar, verify_element }
    }
}

pub fn ca_keygen<R: RngCore + ?Sized>(params: &GroupParams, rng: &mut R) -> CaKeypair {
    CaKeypair::from_signing_scalar(params, random_scalar(rng, params.q(), false))
}

/// Schnorr signature `(e, s)` with `e = H(g^k || m) mod q` and
/// `s = k - x*e mod q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub commitment: Scalar,
    pub response: Scalar,
}

fn challenge(params: &GroupParams, nonce_commitment: &GroupElement, message: &[u8]) -> Scalar {
    let mut input = params.encode_element(nonce_commitment);
    input.extend_from_slice(message);
    params.reduce(&BigUint::from_bytes_be(&params.hash().digest(&input)))
}

pub fn sign<R: RngCore + ?Sized>(params: &GroupParams, ca: &CaKeypair, message: &[u8], rng: &mut R) -> Signature {
    let q = params.q();
    let nonce = random_scalar(rng, q, false);
    let commitment = challenge(params, &params.exp_g(&nonce), message);
    let xe = ca.signing_scalar.value() * commitment.value() % q;
    let response = params.reduce(&(nonce.value() + q - xe));
    Signature { commitment, response }
}

pub fn verify(params: &GroupParams, verify_element: &GroupElement, message: &[u8], signature: &Signature) -> bool {
    if !params.is_scalar(&signature.commitment)
        || !params.is_scalar(&signature.response)
        || !params.is_element(verify_element)
    {
        return false;
    }
    // g^s * y^e = g^(k - x*e) * g^(x*e) = g^k
    let recomputed =
        params.mul(&params.exp_g(&signature.response), &params.exp(verify_element, signature.commitment.value()));
    challenge(params, &recomputed, message) == signature.commitment
}

/// CA-signed binding of a member identifier to a long-term DH public key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    #[serde(rename = "id")]
    pub member_id: Scalar,
    #[serde(rename = "y")]
    pub public_key: GroupElement,
    #[serde(rename = "sig_commitment")]
    pub signature_commitment: Scalar,
    #[serde(rename = "sig_response")]
    pub signature_response: Scalar,
}

impl Certificate {
    pub fn signature(&self) -> Signature {
        Signature { commitment: self.signature_commitment.clone(), response: self.signature_response.clone() }
    }
}

/// Fixed-width `member_id || public_key`, widths taken from `q` and `p`.
pub fn certificate_message(params: &GroupParams, member_id: &Scalar, public_key: &GroupElement) -> Vec<u8> {
    let mut out = params.encode_scalar(member_id);
    out.extend_from_slice(&params.encode_element(public_key));
    out
}

pub fn issue_certificate<R: RngCore + ?Sized>(
    params: &GroupParams,
    ca: &CaKeypair,
    member_id: &Scalar,
    public_key: &GroupElement,
    rng: &mut R,
) -> Certificate {
    let signature = sign(params, ca, &certificate_message(params, member_id, public_key), rng);
    Certificate {
        member_id: member_id.clone(),
        public_key: public_key.clone(),
        signature_commitment: signature.commitment,
        signature_response: signature.response,
    }
}

pub fn verify_certificate(params: &GroupParams, ca_verify_element: &GroupElement, cert: &Certificate) -> bool {
    params.is_scalar(&cert.member_id)
        && params.is_element(&cert.public_key)
        && verify(
            params,
            ca_verify_element,
            &certificate_message(params, &cert.member_id, &cert.public_key),
            &cert.signature(),
        )
}

/// A community member with a long-term DH keypair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Member {
    pub id: Scalar,
    #[serde(rename = "x")]
    pub private_key: Scalar,
    #[serde(rename = "y")]
    pub public_key: GroupElement,
    pub certificate: Certificate,
}

pub fn member_keygen<R: RngCore + ?Sized>(
    params: &GroupParams,
    id: Scalar,
    ca: &CaKeypair,
    rng: &mut R,
) -> Result<Member, PkiError> {
    let private_key = random_scalar(rng, params.q(), false);
    member_from_private_key(params, id, private_key, ca, rng)
}

/// Builds a member around a chosen private key.
pub fn member_from_private_key<R: RngCore + ?Sized>(
    params: &GroupParams,
    id: Scalar,
    private_key: Scalar,
    ca: &CaKeypair,
    rng: &mut R,
) -> Result<Member, PkiError> {
    if id.is_zero() {
        return Err(PkiError::ZeroIdentifier);
    }
    if !params.is_scalar(&id) {
        return Err(PkiError::IdentifierOutOfRange(id));
    }
    if !params.is_scalar(&private_key) {
        return Err(PkiError::PrivateKeyOutOfRange);
    }
    let public_key = params.exp_g(&private_key);
    let certificate = issue_certificate(params, ca, &id, &public_key, rng);
    Ok(Member { id, private_key, public_key, certificate })
}

/// Members keyed by identifier; rejects duplicates and the zero id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Registry {
    members: BTreeMap<Scalar, Member>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, member: Member) -> Result<(), PkiError> {
        if member.id.is_zero() {
            return Err(PkiError::ZeroIdentifier);
        }
        if self.members.contains_key(&member.id) {
            return Err(PkiError::DuplicateIdentifier(member.id));
        }
        self.members.insert(member.id.clone(), member);
        Ok(())
    }

    pub fn get(&self, id: &Scalar) -> Option<&Member> {
        self.members.get(id)
    }

    pub fn contains(&self, id: &Scalar) -> bool {
        self.members.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members in ascending identifier order.
    pub fn iter(&self) -> impl Iterator<Item = &Member> {
        self.members.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &Scalar> {
        self.members.keys()
    }

    pub fn certificates(&self) -> impl Iterator<Item = &Certificate> {
        self.members.values().map(|m| &m.certificate)
    }
}
