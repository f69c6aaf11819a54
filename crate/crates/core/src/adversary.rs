//! Attacks on the protocol.
//!
//! - [`forge_replay`]: anyone holding an old session key re-issues the old
//!   broadcast under a new timestamp.
//! - [`insider_recover_shares`] and [`insider_forge_broadcast`]: a group
//!   member reads every other member's pairwise key off the polynomial and
//!   then impersonates the initiator with a key of its own choosing.
//! - [`brute_force_dlog`] and [`outsider_recover_key`]: with discrete logs,
//!   public keys alone reveal the session key.
//!
//! Forged messages are ordinary [`BroadcastMessage`]s.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group_math::{lagrange_eval, GroupElement, GroupParams, MathError, Point, Scalar};
use crate::pki::{Certificate, Member};
use crate::protocol::{
    hash_commitment, pairwise_key_recipient, points_hiding_key, recover_key, sample_abscissas, BroadcastMessage,
    ProtocolError, SessionKey,
};

/// Largest group order the exhaustive discrete-log search accepts.
pub const MAX_DLOG_ORDER_BITS: u64 = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttackError {
    #[error("replay forgery needs the compromised session key")]
    MissingLeakedKey,
    #[error("member {0} is not a recipient of the broadcast")]
    NotAMember(Scalar),
    #[error("no exponent up to the search bound maps to the target")]
    NotFound,
    #[error("q exceeds 2^24; exhaustive discrete log is limited to toy groups")]
    ParamsTooLarge,
    #[error("recovered key does not match the broadcast commitment")]
    CommitmentMismatch,
    #[error("the recovered share set does not cover any member")]
    EmptyShareSet,
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// A broadcast seen on the channel, optionally with its session key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedSession {
    pub msg: BroadcastMessage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaked_key: Option<SessionKey>,
}

/// Re-issues `observed.msg` with timestamp `t_new` and a matching
/// commitment. Nothing else changes.
pub fn forge_replay(
    params: &GroupParams,
    observed: &ObservedSession,
    t_new: u64,
) -> Result<BroadcastMessage, AttackError> {
    let key = observed.leaked_key.as_ref().ok_or(AttackError::MissingLeakedKey)?;
    let mut forged = observed.msg.clone();
    forged.t = t_new;
    forged.key_commitment = hash_commitment(params, t_new, &key.0);
    Ok(forged)
}

/// Pairwise keys `(member_id, k)` for every member of a group, in the order
/// the broadcast listed them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveredShareSet {
    pub pairs: Vec<Point>,
}

impl RecoveredShareSet {
    pub fn get(&self, member_id: &Scalar) -> Option<&Scalar> {
        self.pairs.iter().find(|p| &p.x == member_id).map(|p| &p.y)
    }

    pub fn member_ids(&self) -> impl Iterator<Item = &Scalar> {
        self.pairs.iter().map(|p| &p.x)
    }
}

/// A recipient evaluates the recovered polynomial at every other
/// recipient's identifier, yielding that recipient's pairwise key.
pub fn insider_recover_shares(
    params: &GroupParams,
    me: &Member,
    initiator_public_key: &GroupElement,
    msg: &BroadcastMessage,
) -> Result<RecoveredShareSet, AttackError> {
    let recipients = match &msg.recipient_ids {
        Some(ids) if ids.contains(&me.id) => ids,
        _ => return Err(AttackError::NotAMember(me.id.clone())),
    };
    let my_k = pairwise_key_recipient(params, &me.private_key, &msg.r, initiator_public_key);
    let mut polynomial = Vec::with_capacity(msg.public_points.len() + 1);
    polynomial.push(Point::new(me.id.clone(), my_k));
    polynomial.extend_from_slice(&msg.public_points);

    let pairs = recipients
        .iter()
        .map(|id| Ok(Point::new(id.clone(), lagrange_eval(&polynomial, id, params.q())?)))
        .collect::<Result<Vec<_>, MathError>>()?;
    Ok(RecoveredShareSet { pairs })
}

/// Builds a broadcast that every member of the share set accepts with key
/// `k_star`, reusing the original `r` and naming the original initiator.
pub fn insider_forge_broadcast<R: RngCore + ?Sized>(
    params: &GroupParams,
    shares: &RecoveredShareSet,
    r_original: &GroupElement,
    forged_initiator_id: &Scalar,
    k_star: &SessionKey,
    t_star: u64,
    rng: &mut R,
) -> Result<BroadcastMessage, AttackError> {
    let ids: Vec<Scalar> = shares.member_ids().cloned().collect();
    let abscissas = sample_abscissas(rng, params, &ids, ids.len())?;
    insider_forge_broadcast_with(params, shares, r_original, forged_initiator_id, k_star, t_star, &abscissas)
}

/// [`insider_forge_broadcast`] with caller-chosen public abscissas.
pub fn insider_forge_broadcast_with(
    params: &GroupParams,
    shares: &RecoveredShareSet,
    r_original: &GroupElement,
    forged_initiator_id: &Scalar,
    k_star: &SessionKey,
    t_star: u64,
    abscissas: &[Scalar],
) -> Result<BroadcastMessage, AttackError> {
    if shares.pairs.is_empty() {
        return Err(AttackError::EmptyShareSet);
    }
    let ids: Vec<Scalar> = shares.member_ids().cloned().collect();
    let usable = abscissas.len() == ids.len() && abscissas.iter().all(|a| !a.is_zero() && !ids.contains(a));
    if !usable {
        return Err(ProtocolError::InvalidAbscissas(ids.len()).into());
    }
    let public_points = points_hiding_key(params, &k_star.0, &shares.pairs, abscissas)?;
    Ok(BroadcastMessage {
        initiator_id: forged_initiator_id.clone(),
        recipient_ids: Some(ids),
        r: r_original.clone(),
        t: t_star,
        public_points,
        key_commitment: hash_commitment(params, t_star, &k_star.0),
    })
}

/// Smallest `x <= max_exponent` with `g^x = y`, by linear scan.
///
/// `max_exponent` defaults to `q - 1`. Only toy groups (`q <= 2^24`) are
/// accepted.
pub fn brute_force_dlog(
    params: &GroupParams,
    y: &GroupElement,
    max_exponent: Option<&BigUint>,
) -> Result<Scalar, AttackError> {
    if params.q() > &(BigUint::one() << MAX_DLOG_ORDER_BITS) {
        return Err(AttackError::ParamsTooLarge);
    }
    let q_minus_one = params.q() - 1u8;
    let bound = max_exponent.map_or(q_minus_one.clone(), |m| m.min(&q_minus_one).clone());
    let bound = bound.to_u64().expect("bound is below 2^24");

    // 64-bit moduli fit products in u128
    if let (Some(p), Some(g), Some(target)) = (params.p().to_u64(), params.g().to_u64(), y.value().to_u64()) {
        let (p, g) = (u128::from(p), u128::from(g));
        let mut acc: u128 = 1;
        for x in 0..=bound {
            if acc == u128::from(target) {
                return Ok(Scalar::from(x));
            }
            acc = acc * g % p;
        }
        return Err(AttackError::NotFound);
    }

    let mut acc = BigUint::one();
    for x in 0..=bound {
        if &acc == y.value() {
            return Ok(Scalar::from(x));
        }
        acc = acc * params.g() % params.p();
    }
    Err(AttackError::NotFound)
}

/// Recovers the session key of `msg` from public data only: the victim's
/// private key comes from its certificate by discrete log, after which the
/// attacker runs the victim's side of the protocol.
pub fn outsider_recover_key(
    params: &GroupParams,
    msg: &BroadcastMessage,
    victim_cert: &Certificate,
    initiator_cert: &Certificate,
) -> Result<SessionKey, AttackError> {
    if msg.recipient_ids.is_some() && !msg.is_addressed_to(&victim_cert.member_id) {
        return Err(AttackError::NotAMember(victim_cert.member_id.clone()));
    }
    let victim_private = brute_force_dlog(params, &victim_cert.public_key, None)?;
    let k = pairwise_key_recipient(params, &victim_private, &msg.r, &initiator_cert.public_key);
    let key = recover_key(params, &victim_cert.member_id, &k, &msg.public_points)?;
    if hash_commitment(params, msg.t, &key) != msg.key_commitment {
        return Err(AttackError::CommitmentMismatch);
    }
    Ok(SessionKey(key))
}
