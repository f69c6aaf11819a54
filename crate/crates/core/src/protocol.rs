//! Broadcast construction by an initiator and broadcast processing by a
//! recipient.
//!
//! The initiator hides the session key `K` as `f(0)` of a polynomial that
//! also passes through one DH-derived point per recipient, publishes `ℓ`
//! further points of `f`, and commits to the key with `h(t || K)`. Each
//! recipient supplies its own DH point, interpolates, and checks the
//! commitment.

use std::collections::HashSet;

use num_bigint::BigUint;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group_math::{
    hexint, lagrange_eval, random_scalar, GroupElement, GroupParams, MathError, Point, Scalar, MAX_INTERPOLATION_POINTS,
};
use crate::pki::{verify_certificate, Certificate, Member};

/// Default tolerated distance between a message timestamp and the
/// recipient clock, in seconds.
pub const DEFAULT_FRESHNESS_WINDOW: u64 = 120;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("certificate for member {0} does not verify")]
    CertificateInvalid(Scalar),
    #[error("member {0} is listed more than once")]
    DuplicateRecipient(Scalar),
    #[error("the recipient group is empty")]
    EmptyGroup,
    #[error("recipient identifier {0} is zero or not below q")]
    BadRecipientId(Scalar),
    #[error("{0} recipients exceed the interpolation limit")]
    GroupTooLarge(usize),
    #[error("q leaves too few free abscissas for {0} public points")]
    AbscissaSpaceExhausted(usize),
    #[error("public abscissas must be {0} distinct nonzero values disjoint from the recipient ids")]
    InvalidAbscissas(usize),
    #[error("session key is not below q")]
    KeyOutOfRange,
    #[error(transparent)]
    Math(#[from] MathError),
}

/// The group key `K`, a residue modulo `q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionKey(pub Scalar);

impl std::fmt::Display for SessionKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Output of the agreed hash; serialized as lowercase hex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Commitment(#[serde(with = "hex")] pub Vec<u8>);

impl Commitment {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

/// Whether the broadcast names its recipients.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageFormat {
    /// Initiator and recipient identifiers travel with the message.
    #[default]
    Addressed,
    /// Recipient identifiers are omitted, so every member who hears the
    /// broadcast has to attempt recovery to find out whether it was meant
    /// for them.
    PaperLiteral,
}

/// The initiator's broadcast.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BroadcastMessage {
    pub initiator_id: Scalar,
    /// `None` in the paper-literal format.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipient_ids: Option<Vec<Scalar>>,
    pub r: GroupElement,
    #[serde(with = "hexint::u64_hex")]
    pub t: u64,
    #[serde(rename = "points")]
    pub public_points: Vec<Point>,
    #[serde(rename = "commitment_hex")]
    pub key_commitment: Commitment,
}

impl BroadcastMessage {
    pub fn format(&self) -> MessageFormat {
        match self.recipient_ids {
            Some(_) => MessageFormat::Addressed,
            None => MessageFormat::PaperLiteral,
        }
    }

    pub fn is_addressed_to(&self, id: &Scalar) -> bool {
        self.recipient_ids.as_ref().is_some_and(|ids| ids.contains(id))
    }

    /// Structural checks a recipient can make without any secret.
    pub fn check_well_formed(&self, params: &GroupParams) -> bool {
        let points = &self.public_points;
        if points.is_empty() || points.len() + 1 > MAX_INTERPOLATION_POINTS {
            return false;
        }
        if !params.is_scalar(&self.initiator_id)
            || !params.is_element(&self.r)
            || self.key_commitment.0.len() != params.hash().output_len()
        {
            return false;
        }
        let mut abscissas = HashSet::with_capacity(points.len());
        for point in points {
            if !params.is_scalar(&point.x)
                || !params.is_scalar(&point.y)
                || point.x.is_zero()
                || !abscissas.insert(&point.x)
            {
                return false;
            }
        }
        if let Some(ids) = &self.recipient_ids {
            let mut seen = HashSet::with_capacity(ids.len());
            if ids.len() != points.len()
                || !ids.iter().all(|id| params.is_scalar(id) && !id.is_zero() && seen.insert(id))
                || ids.iter().any(|id| abscissas.contains(id))
            {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    StaleTimestamp,
    CommitmentMismatch,
    NotAddressed,
    MalformedMessage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum AcceptanceResult {
    Accepted { key: SessionKey },
    Rejected { reason: RejectReason },
}

impl AcceptanceResult {
    pub fn accepted_key(&self) -> Option<&SessionKey> {
        match self {
            AcceptanceResult::Accepted { key } => Some(key),
            AcceptanceResult::Rejected { .. } => None,
        }
    }

    pub fn reject_reason(&self) -> Option<RejectReason> {
        match self {
            AcceptanceResult::Accepted { .. } => None,
            AcceptanceResult::Rejected { reason } => Some(*reason),
        }
    }

    fn rejected(reason: RejectReason) -> Self {
        AcceptanceResult::Rejected { reason }
    }
}

/// The initiator's one-time secret `s`, kept by the caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EphemeralSecret(pub Scalar);

/// `(y_z^(x_w + s) mod p) mod q`.
pub fn pairwise_key_initiator(params: &GroupParams, x_w: &Scalar, s: &Scalar, y_z: &GroupElement) -> Scalar {
    let exponent = (x_w.value() + s.value()) % params.q();
    params.reduce(params.exp(y_z, &exponent).value())
}

/// `((r * y_w mod p)^x_z mod p) mod q`; equals the initiator's value since
/// `r * y_w = g^(s + x_w)`.
pub fn pairwise_key_recipient(params: &GroupParams, x_z: &Scalar, r: &GroupElement, y_w: &GroupElement) -> Scalar {
    let base = params.mul(r, y_w);
    params.reduce(params.exp(&base, x_z.value()).value())
}

/// `H(t || K)` with `t` as 8 big-endian bytes and `K` left-padded to the
/// byte length of `q`.
pub fn hash_commitment(params: &GroupParams, t: u64, key: &Scalar) -> Commitment {
    let mut input = t.to_be_bytes().to_vec();
    input.extend_from_slice(&params.encode_scalar(key));
    Commitment(params.hash().digest(&input))
}

/// `f(0)` of the polynomial through `(my_id, my_k)` and the public points.
pub fn recover_key(
    params: &GroupParams,
    my_id: &Scalar,
    my_k: &Scalar,
    public_points: &[Point],
) -> Result<Scalar, MathError> {
    let mut points = Vec::with_capacity(public_points.len() + 1);
    points.push(Point::new(my_id.clone(), my_k.clone()));
    points.extend_from_slice(public_points);
    lagrange_eval(&points, &Scalar::from(0), params.q())
}

/// Draws `count` distinct nonzero abscissas avoiding `excluded`.
pub fn sample_abscissas<R: RngCore + ?Sized>(
    rng: &mut R,
    params: &GroupParams,
    excluded: &[Scalar],
    count: usize,
) -> Result<Vec<Scalar>, ProtocolError> {
    let excluded: HashSet<&Scalar> = excluded.iter().filter(|s| !s.is_zero()).collect();
    let free = params.q() - 1u8 - BigUint::from(excluded.len());
    if free < BigUint::from(count) {
        return Err(ProtocolError::AbscissaSpaceExhausted(count));
    }
    let mut chosen: Vec<Scalar> = Vec::with_capacity(count);
    while chosen.len() < count {
        let candidate = random_scalar(rng, params.q(), false);
        if !excluded.contains(&candidate) && !chosen.contains(&candidate) {
            chosen.push(candidate);
        }
    }
    Ok(chosen)
}

/// Evaluates at each abscissa the polynomial through `(0, key)` and the
/// `defining` points.
pub fn points_hiding_key(
    params: &GroupParams,
    key: &Scalar,
    defining: &[Point],
    abscissas: &[Scalar],
) -> Result<Vec<Point>, MathError> {
    let mut polynomial = Vec::with_capacity(defining.len() + 1);
    polynomial.push(Point::new(Scalar::from(0), key.clone()));
    polynomial.extend_from_slice(defining);
    abscissas.iter().map(|a| Ok(Point::new(a.clone(), lagrange_eval(&polynomial, a, params.q())?))).collect()
}

/// What an initiator needs to start a session.
#[derive(Debug, Clone, Copy)]
pub struct BroadcastRequest<'a> {
    pub initiator: &'a Member,
    pub recipients: &'a [Certificate],
    pub key: &'a SessionKey,
    pub timestamp: u64,
    pub format: MessageFormat,
}

/// Runs the initiator side with a fresh ephemeral secret and fresh
/// abscissas drawn from `rng`.
pub fn build_broadcast<R: RngCore + ?Sized>(
    params: &GroupParams,
    ca_verify_element: &GroupElement,
    request: BroadcastRequest<'_>,
    rng: &mut R,
) -> Result<(BroadcastMessage, EphemeralSecret), ProtocolError> {
    let recipient_ids = check_recipients(params, ca_verify_element, request.recipients)?;
    let s = random_scalar(rng, params.q(), false);
    let abscissas = sample_abscissas(rng, params, &recipient_ids, recipient_ids.len())?;
    let message = build_broadcast_with(params, ca_verify_element, request, &s, &abscissas)?;
    Ok((message, EphemeralSecret(s)))
}

/// Runs the initiator side with a caller-chosen `s` and abscissas.
pub fn build_broadcast_with(
    params: &GroupParams,
    ca_verify_element: &GroupElement,
    request: BroadcastRequest<'_>,
    s: &Scalar,
    abscissas: &[Scalar],
) -> Result<BroadcastMessage, ProtocolError> {
    let recipient_ids = check_recipients(params, ca_verify_element, request.recipients)?;
    let key = &request.key.0;
    if !params.is_scalar(key) {
        return Err(ProtocolError::KeyOutOfRange);
    }
    let ell = recipient_ids.len();
    let mut seen = HashSet::new();
    let abscissas_ok = abscissas.len() == ell
        && abscissas
            .iter()
            .all(|a| params.is_scalar(a) && !a.is_zero() && !recipient_ids.contains(a) && seen.insert(a));
    if !abscissas_ok {
        return Err(ProtocolError::InvalidAbscissas(ell));
    }

    let initiator = request.initiator;
    let r = params.exp_g(s);
    let pairwise: Vec<Point> = request
        .recipients
        .iter()
        .map(|cert| {
            let k = pairwise_key_initiator(params, &initiator.private_key, s, &cert.public_key);
            Point::new(cert.member_id.clone(), k)
        })
        .collect();
    let public_points = points_hiding_key(params, key, &pairwise, abscissas)?;

    Ok(BroadcastMessage {
        initiator_id: initiator.id.clone(),
        recipient_ids: match request.format {
            MessageFormat::Addressed => Some(recipient_ids),
            MessageFormat::PaperLiteral => None,
        },
        r,
        t: request.timestamp,
        public_points,
        key_commitment: hash_commitment(params, request.timestamp, key),
    })
}

fn check_recipients(
    params: &GroupParams,
    ca_verify_element: &GroupElement,
    recipients: &[Certificate],
) -> Result<Vec<Scalar>, ProtocolError> {
    if recipients.is_empty() {
        return Err(ProtocolError::EmptyGroup);
    }
    if recipients.len() + 1 > MAX_INTERPOLATION_POINTS {
        return Err(ProtocolError::GroupTooLarge(recipients.len()));
    }
    let mut ids: Vec<Scalar> = Vec::with_capacity(recipients.len());
    for cert in recipients {
        let id = &cert.member_id;
        if id.is_zero() || !params.is_scalar(id) {
            return Err(ProtocolError::BadRecipientId(id.clone()));
        }
        if ids.contains(id) {
            return Err(ProtocolError::DuplicateRecipient(id.clone()));
        }
        if !verify_certificate(params, ca_verify_element, cert) {
            return Err(ProtocolError::CertificateInvalid(id.clone()));
        }
        ids.push(id.clone());
    }
    Ok(ids)
}

/// Runs the recipient side.
///
/// An addressed message that does not list `me` is rejected before any
/// computation; a paper-literal message is always processed in full.
pub fn process_broadcast(
    params: &GroupParams,
    me: &Member,
    initiator_cert: &Certificate,
    msg: &BroadcastMessage,
    now: u64,
    freshness_window: u64,
) -> AcceptanceResult {
    use RejectReason::*;

    if initiator_cert.member_id != msg.initiator_id || !msg.check_well_formed(params) {
        return AcceptanceResult::rejected(MalformedMessage);
    }
    if msg.format() == MessageFormat::Addressed && !msg.is_addressed_to(&me.id) {
        return AcceptanceResult::rejected(NotAddressed);
    }
    if msg.public_points.iter().any(|p| p.x == me.id) {
        return AcceptanceResult::rejected(MalformedMessage);
    }
    if now.abs_diff(msg.t) > freshness_window {
        return AcceptanceResult::rejected(StaleTimestamp);
    }

    let k = pairwise_key_recipient(params, &me.private_key, &msg.r, &initiator_cert.public_key);
    let Ok(candidate) = recover_key(params, &me.id, &k, &msg.public_points) else {
        return AcceptanceResult::rejected(MalformedMessage);
    };
    if hash_commitment(params, msg.t, &candidate) == msg.key_commitment {
        AcceptanceResult::Accepted { key: SessionKey(candidate) }
    } else {
        AcceptanceResult::rejected(CommitmentMismatch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_math::presets;
    use crate::pki::{ca_keygen, member_from_private_key, member_keygen, CaKeypair};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    const T0: u64 = 1_700_000_000;

    struct ToySession {
        ca: CaKeypair,
        initiator: Member,
        recipient: Member,
        message: BroadcastMessage,
    }

    /// Initiator id 1 with `x_w = 3`, recipient id 4 with `x = 4`,
    /// `s = 2`, `K = 7`, public abscissa 2, all over `(23, 11, 2)`.
    fn toy_session() -> ToySession {
        let params = presets::tiny();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let ca = ca_keygen(params, &mut rng);
        let initiator = member_from_private_key(params, Scalar::from(1), Scalar::from(3), &ca, &mut rng).unwrap();
        let recipient = member_from_private_key(params, Scalar::from(4), Scalar::from(4), &ca, &mut rng).unwrap();
        let key = SessionKey(Scalar::from(7));
        let request = BroadcastRequest {
            initiator: &initiator,
            recipients: std::slice::from_ref(&recipient.certificate),
            key: &key,
            timestamp: T0,
            format: MessageFormat::Addressed,
        };
        let message =
            build_broadcast_with(params, &ca.verify_element, request, &Scalar::from(2), &[Scalar::from(2)]).unwrap();
        ToySession { ca, initiator, recipient, message }
    }

    fn community(params: &GroupParams, n: u64, rng: &mut ChaCha20Rng) -> (CaKeypair, Vec<Member>) {
        let ca = ca_keygen(params, rng);
        let members = (1..=n).map(|id| member_keygen(params, Scalar::from(id), &ca, rng).unwrap()).collect();
        (ca, members)
    }

    #[test]
    fn toy_pairwise_keys() {
        let params = presets::tiny();
        let y_z = params.exp_g(&Scalar::from(4));
        assert_eq!(y_z.value(), &BigUint::from(16u8));
        // 2^20 mod 23 = 2^9 mod 23 = 6
        assert_eq!(pairwise_key_initiator(params, &Scalar::from(3), &Scalar::from(2), &y_z), Scalar::from(6));
        let r = params.exp_g(&Scalar::from(2));
        let y_w = params.exp_g(&Scalar::from(3));
        assert_eq!(pairwise_key_recipient(params, &Scalar::from(4), &r, &y_w), Scalar::from(6));
    }

    #[test]
    fn zero_exponents_give_one() {
        let params = presets::tiny();
        let y = params.exp_g(&Scalar::from(7));
        assert_eq!(pairwise_key_initiator(params, &Scalar::from(0), &Scalar::from(0), &y), Scalar::from(1));
        assert_eq!(pairwise_key_recipient(params, &Scalar::from(0), &y, &y), Scalar::from(1));
    }

    #[test]
    fn pairwise_keys_symmetric() {
        for params in [presets::tiny(), presets::standard()] {
            let mut rng = ChaCha20Rng::seed_from_u64(21);
            for _ in 0..1000 {
                let x_w = random_scalar(&mut rng, params.q(), true);
                let s = random_scalar(&mut rng, params.q(), true);
                let x_z = random_scalar(&mut rng, params.q(), true);
                assert_eq!(
                    pairwise_key_initiator(params, &x_w, &s, &params.exp_g(&x_z)),
                    pairwise_key_recipient(params, &x_z, &params.exp_g(&s), &params.exp_g(&x_w))
                );
            }
        }
    }

    #[test]
    fn commitment_known_answers() {
        // SHA-256 of 00 00 00 00 00 00 00 00 01
        assert_eq!(
            hex::encode(hash_commitment(presets::tiny(), 0, &Scalar::from(1)).as_bytes()),
            "2ae1c19c0cbd378e46c927a9f3611923ec07cc1ae357502a09536d455275cf21"
        );
        // 8 zero bytes, then K = 1 padded to 20 bytes
        assert_eq!(
            hex::encode(hash_commitment(presets::standard(), 0, &Scalar::from(1)).as_bytes()),
            "b83a02901a3bc50e20cb9d989610b83c5c03aa0824f2d5da225553ca43ad65a6"
        );
        assert_eq!(
            hex::encode(hash_commitment(presets::tiny(), T0, &Scalar::from(7)).as_bytes()),
            "a8e30f8772aa0a0300c7654269bd16be9a31e8fce97ddac99b88fb629005c219"
        );
    }

    #[test]
    fn commitment_binds_timestamp() {
        let params = presets::standard();
        let mut rng = ChaCha20Rng::seed_from_u64(22);
        for _ in 0..1000 {
            let key = random_scalar(&mut rng, params.q(), true);
            let t: u64 = rng.gen();
            assert_eq!(hash_commitment(params, t, &key), hash_commitment(params, t, &key));
            assert_ne!(hash_commitment(params, t, &key), hash_commitment(params, t.wrapping_add(1), &key));
        }
    }

    #[test]
    fn toy_broadcast_point() {
        let session = toy_session();
        let msg = &session.message;
        // f(x) = 7 - 3x over Z_11, f(2) = 1
        assert_eq!(msg.public_points, vec![Point::new(Scalar::from(2), Scalar::from(1))]);
        assert_eq!(msg.r.value(), &BigUint::from(4u8));
        assert_eq!(msg.recipient_ids, Some(vec![Scalar::from(4)]));
        assert_eq!(msg.initiator_id, Scalar::from(1));
    }

    #[test]
    fn toy_broadcast_recovers_key() {
        let s = toy_session();
        let params = presets::tiny();
        let window = DEFAULT_FRESHNESS_WINDOW;
        let result = process_broadcast(params, &s.recipient, &s.initiator.certificate, &s.message, T0, window);
        assert_eq!(result, AcceptanceResult::Accepted { key: SessionKey(Scalar::from(7)) });

        let late =
            process_broadcast(params, &s.recipient, &s.initiator.certificate, &s.message, T0 + window + 1, window);
        assert_eq!(late.reject_reason(), Some(RejectReason::StaleTimestamp));
        let edge = process_broadcast(params, &s.recipient, &s.initiator.certificate, &s.message, T0 + window, window);
        assert!(edge.accepted_key().is_some());
        let early =
            process_broadcast(params, &s.recipient, &s.initiator.certificate, &s.message, T0 - window - 1, window);
        assert_eq!(early.reject_reason(), Some(RejectReason::StaleTimestamp));

        let mut tampered = s.message.clone();
        tampered.key_commitment.0[0] ^= 1;
        let result = process_broadcast(params, &s.recipient, &s.initiator.certificate, &tampered, T0, window);
        assert_eq!(result.reject_reason(), Some(RejectReason::CommitmentMismatch));
    }

    #[test]
    fn rejects_unaddressed_and_malformed() {
        let s = toy_session();
        let params = presets::tiny();
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        let outsider = member_keygen(params, Scalar::from(9), &s.ca, &mut rng).unwrap();
        let check = |me: &Member, msg: &BroadcastMessage| {
            process_broadcast(params, me, &s.initiator.certificate, msg, T0, DEFAULT_FRESHNESS_WINDOW).reject_reason()
        };
        assert_eq!(check(&outsider, &s.message), Some(RejectReason::NotAddressed));

        let mut duplicate = s.message.clone();
        duplicate.public_points.push(duplicate.public_points[0].clone());
        duplicate.recipient_ids.as_mut().unwrap().push(Scalar::from(5));
        assert_eq!(check(&s.recipient, &duplicate), Some(RejectReason::MalformedMessage));

        let mut short = s.message.clone();
        short.recipient_ids.as_mut().unwrap().push(Scalar::from(5));
        assert_eq!(check(&s.recipient, &short), Some(RejectReason::MalformedMessage));

        let mut zero_abscissa = s.message.clone();
        zero_abscissa.public_points[0].x = Scalar::from(0);
        assert_eq!(check(&s.recipient, &zero_abscissa), Some(RejectReason::MalformedMessage));

        let mut wrong_initiator = s.message.clone();
        wrong_initiator.initiator_id = Scalar::from(2);
        assert_eq!(check(&s.recipient, &wrong_initiator), Some(RejectReason::MalformedMessage));

        let mut off_group = s.message.clone();
        off_group.r = GroupElement::from_unchecked(BigUint::from(5u8));
        assert_eq!(check(&s.recipient, &off_group), Some(RejectReason::MalformedMessage));
    }

    #[test]
    fn build_errors() {
        let params = presets::small();
        let mut rng = ChaCha20Rng::seed_from_u64(24);
        let (ca, members) = community(params, 4, &mut rng);
        let key = SessionKey(Scalar::from(99));
        let twice =
            vec![members[1].certificate.clone(), members[2].certificate.clone(), members[1].certificate.clone()];
        let build = |certs: &[Certificate], rng: &mut ChaCha20Rng| {
            let req = BroadcastRequest {
                initiator: &members[0],
                recipients: certs,
                key: &key,
                timestamp: T0,
                format: MessageFormat::Addressed,
            };
            build_broadcast(params, &ca.verify_element, req, rng).map(|(m, _)| m)
        };
        assert_eq!(build(&twice, &mut rng), Err(ProtocolError::DuplicateRecipient(Scalar::from(2))));
        assert_eq!(build(&[], &mut rng), Err(ProtocolError::EmptyGroup));

        let mut forged = members[3].certificate.clone();
        forged.public_key = members[2].public_key.clone();
        assert_eq!(build(&[forged], &mut rng), Err(ProtocolError::CertificateInvalid(Scalar::from(4))));

        let certs = [members[1].certificate.clone()];
        let req = BroadcastRequest {
            initiator: &members[0],
            recipients: &certs,
            key: &key,
            timestamp: T0,
            format: MessageFormat::Addressed,
        };
        for bad in [vec![Scalar::from(0)], vec![Scalar::from(2)], vec![], vec![Scalar::from(10007)]] {
            assert_eq!(
                build_broadcast_with(params, &ca.verify_element, req, &Scalar::from(5), &bad),
                Err(ProtocolError::InvalidAbscissas(1))
            );
        }
    }

    #[test]
    fn abscissa_space_can_run_out() {
        let params = presets::tiny();
        let mut rng = ChaCha20Rng::seed_from_u64(25);
        let ids: Vec<Scalar> = (1..=6).map(Scalar::from).collect();
        // 10 nonzero residues, 6 taken by ids, 4 left
        assert!(sample_abscissas(&mut rng, params, &ids, 4).is_ok());
        assert_eq!(sample_abscissas(&mut rng, params, &ids, 5), Err(ProtocolError::AbscissaSpaceExhausted(5)));
    }

    #[test]
    fn every_recipient_recovers_the_key() {
        for (params, seed) in [(presets::small(), 26u64), (presets::standard(), 27)] {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let (ca, members) = community(params, 11, &mut rng);
            for ell in 1..=10usize {
                let initiator = &members[ell % members.len()];
                let group: Vec<&Member> = members.iter().filter(|m| m.id != initiator.id).take(ell).collect();
                let certs: Vec<Certificate> = group.iter().map(|m| m.certificate.clone()).collect();
                let key = SessionKey(random_scalar(&mut rng, params.q(), false));
                let req = BroadcastRequest {
                    initiator,
                    recipients: &certs,
                    key: &key,
                    timestamp: T0,
                    format: MessageFormat::Addressed,
                };
                let (msg, _) = build_broadcast(params, &ca.verify_element, req, &mut rng).unwrap();
                assert!(msg.check_well_formed(params));
                for member in &group {
                    let result = process_broadcast(params, member, &initiator.certificate, &msg, T0 + 30, 120);
                    assert_eq!(result.accepted_key(), Some(&key));
                }
            }
        }
    }

    #[test]
    fn initiator_may_address_itself() {
        let params = presets::small();
        let mut rng = ChaCha20Rng::seed_from_u64(28);
        let (ca, members) = community(params, 3, &mut rng);
        let certs: Vec<Certificate> = members.iter().map(|m| m.certificate.clone()).collect();
        let key = SessionKey(Scalar::from(1234));
        let req = BroadcastRequest {
            initiator: &members[0],
            recipients: &certs,
            key: &key,
            timestamp: T0,
            format: MessageFormat::Addressed,
        };
        let (msg, _) = build_broadcast(params, &ca.verify_element, req, &mut rng).unwrap();
        for member in &members {
            let result = process_broadcast(params, member, &members[0].certificate, &msg, T0, 120);
            assert_eq!(result.accepted_key(), Some(&key));
        }
    }

    #[test]
    fn paper_literal_non_members_never_accept() {
        let params = presets::standard();
        let mut rng = ChaCha20Rng::seed_from_u64(29);
        let (ca, members) = community(params, 6, &mut rng);
        let initiator = &members[0];
        let group = &members[1..3];
        let outsiders = &members[3..];
        let certs: Vec<Certificate> = group.iter().map(|m| m.certificate.clone()).collect();
        let mut trials = 0;
        while trials < 1000 {
            let key = SessionKey(random_scalar(&mut rng, params.q(), false));
            let req = BroadcastRequest {
                initiator,
                recipients: &certs,
                key: &key,
                timestamp: T0,
                format: MessageFormat::PaperLiteral,
            };
            let (msg, _) = build_broadcast(params, &ca.verify_element, req, &mut rng).unwrap();
            assert_eq!(msg.recipient_ids, None);
            for member in group {
                let result = process_broadcast(params, member, &initiator.certificate, &msg, T0, 120);
                assert_eq!(result.accepted_key(), Some(&key));
            }
            for outsider in outsiders {
                let result = process_broadcast(params, outsider, &initiator.certificate, &msg, T0, 120);
                assert_eq!(result.reject_reason(), Some(RejectReason::CommitmentMismatch));
                trials += 1;
            }
        }
    }

    #[test]
    fn wire_record_shape() {
        let s = toy_session();
        let json = serde_json::to_string(&s.message).unwrap();
        assert_eq!(
            json,
            concat!(
                r#"{"initiator_id":"1","recipient_ids":["4"],"r":"4","t":"6553f100","points":[["2","1"]],"#,
                r#""commitment_hex":"a8e30f8772aa0a0300c7654269bd16be9a31e8fce97ddac99b88fb629005c219"}"#
            )
        );
        assert_eq!(serde_json::from_str::<BroadcastMessage>(&json).unwrap(), s.message);

        let mut literal = s.message.clone();
        literal.recipient_ids = None;
        let json = serde_json::to_string(&literal).unwrap();
        assert!(!json.contains("recipient_ids"));
        assert_eq!(serde_json::from_str::<BroadcastMessage>(&json).unwrap().format(), MessageFormat::PaperLiteral);
    }
}
