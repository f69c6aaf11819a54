use std::path::Path;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::group_math::{generate_params, presets, random_scalar, GroupParams, Scalar};
use crate::pki::{ca_keygen, member_keygen, verify_certificate, CaKeypair, Certificate, Member, Registry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ParamsSource {
    /// 48-bit p, 20-bit q: small enough for exhaustive discrete logs.
    Toy,
    /// The checked-in 1024-bit p, 160-bit q set.
    Std,
    /// A freshly generated 1024/160-bit set (slow).
    Gen,
}

impl ParamsSource {
    pub fn load<R: rand::RngCore + ?Sized>(self, rng: &mut R) -> GroupParams {
        match self {
            ParamsSource::Toy => presets::toy().clone(),
            ParamsSource::Std => presets::standard().clone(),
            ParamsSource::Gen => generate_params(rng, 1024, 160),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum IdAssignment {
    #[default]
    Random,
    Sequential,
}

/// Every member of the community, with certificates visible to all.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CommunityRecord", into = "CommunityRecord")]
pub struct Community {
    pub params: GroupParams,
    pub ca: CaKeypair,
    members: Registry,
}

#[derive(Serialize, Deserialize)]
struct CommunityRecord {
    params: GroupParams,
    ca: CaKeypair,
    members: Vec<Member>,
}

impl TryFrom<CommunityRecord> for Community {
    type Error = HarnessError;

    fn try_from(record: CommunityRecord) -> Result<Self, HarnessError> {
        Community::new(record.params, record.ca, record.members)
    }
}

impl From<Community> for CommunityRecord {
    fn from(community: Community) -> Self {
        let members = community.members.iter().cloned().collect();
        CommunityRecord { params: community.params, ca: community.ca, members }
    }
}

impl Community {
    /// Checks every member's keypair and certificate before accepting them.
    pub fn new(params: GroupParams, ca: CaKeypair, members: Vec<Member>) -> Result<Self, HarnessError> {
        let invalid = |msg: String| HarnessError::CommunityInvalid(msg);
        if params.exp_g(&ca.signing_scalar) != ca.verify_element {
            return Err(invalid("CA keypair is inconsistent".into()));
        }
        let mut registry = Registry::new();
        for member in members {
            if params.exp_g(&member.private_key) != member.public_key {
                return Err(invalid(format!("member {} has y != g^x", member.id)));
            }
            let cert = &member.certificate;
            if cert.member_id != member.id
                || cert.public_key != member.public_key
                || !verify_certificate(&params, &ca.verify_element, cert)
            {
                return Err(invalid(format!("member {} has a bad certificate", member.id)));
            }
            registry.register(member)?;
        }
        Ok(Community { params, ca, members: registry })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, id: &Scalar) -> Option<&Member> {
        self.members.get(id)
    }

    pub fn certificate(&self, id: &Scalar) -> Option<&Certificate> {
        self.members.get(id).map(|m| &m.certificate)
    }

    pub fn contains(&self, id: &Scalar) -> bool {
        self.members.contains(id)
    }

    /// Members in ascending id order.
    pub fn members(&self) -> impl Iterator<Item = &Member> {
        self.members.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = &Scalar> {
        self.members.ids()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), HarnessError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Builds `n` members with fresh keys, all drawn from one seeded stream.
pub fn setup_community(
    n: usize,
    source: ParamsSource,
    seed: u64,
    ids: IdAssignment,
) -> Result<Community, HarnessError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let params = source.load(&mut rng);
    setup_community_with(n, params, &mut rng, ids)
}

pub(crate) fn setup_community_with(
    n: usize,
    params: GroupParams,
    rng: &mut ChaCha20Rng,
    ids: IdAssignment,
) -> Result<Community, HarnessError> {
    if n == 0 {
        return Err(HarnessError::CommunityInvalid("a community needs at least one member".into()));
    }
    if BigUint::from(n) >= *params.q() {
        return Err(HarnessError::CommunityInvalid(format!("{n} members do not fit below q")));
    }
    let ca = ca_keygen(&params, rng);
    let mut registry = Registry::new();
    for index in 1..=n {
        let id = match ids {
            IdAssignment::Sequential => Scalar::from(index as u64),
            IdAssignment::Random => loop {
                let id = random_scalar(rng, params.q(), false);
                if !registry.contains(&id) {
                    break id;
                }
            },
        };
        registry.register(member_keygen(&params, id, &ca, rng)?)?;
    }
    Ok(Community { params, ca, members: registry })
}
