use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::group_math::{random_scalar, GroupParams, Scalar};
use crate::pki::{ca_keygen, member_keygen, CaKeypair, Certificate, Member};
use crate::protocol::{build_broadcast, BroadcastMessage, BroadcastRequest, MessageFormat, SessionKey};

pub const T0: u64 = 1_700_000_000;

pub struct Fixture {
    pub params: &'static GroupParams,
    pub ca: CaKeypair,
    pub members: Vec<Member>,
    pub rng: ChaCha20Rng,
}

/// Members with ids `1..=n`.
pub fn fixture(params: &'static GroupParams, n: u64, seed: u64) -> Fixture {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let ca = ca_keygen(params, &mut rng);
    let members = (1..=n).map(|id| member_keygen(params, Scalar::from(id), &ca, &mut rng).unwrap()).collect();
    Fixture { params, ca, members, rng }
}

pub struct Honest {
    pub msg: BroadcastMessage,
    pub key: SessionKey,
    pub s: Scalar,
}

impl Fixture {
    pub fn member(&self, id: u64) -> &Member {
        self.members.iter().find(|m| m.id == Scalar::from(id)).unwrap()
    }

    /// Member `initiator` sends a fresh random key to `group` at `T0`.
    pub fn honest(&mut self, initiator: u64, group: &[u64], format: MessageFormat) -> Honest {
        let certs: Vec<Certificate> = group.iter().map(|&id| self.member(id).certificate.clone()).collect();
        let key = SessionKey(random_scalar(&mut self.rng, self.params.q(), false));
        let initiator = self.member(initiator).clone();
        let request = BroadcastRequest { initiator: &initiator, recipients: &certs, key: &key, timestamp: T0, format };
        let (msg, s) = build_broadcast(self.params, &self.ca.verify_element, request, &mut self.rng).unwrap();
        Honest { msg, key, s: s.0 }
    }
}
