use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Community, HarnessError, ScenarioKind};
use crate::adversary::RecoveredShareSet;
use crate::group_math::{hexint, Scalar};
use crate::protocol::{AcceptanceResult, BroadcastMessage, RejectReason, SessionKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BroadcastOrigin {
    Honest,
    Forged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackAction {
    /// A compromised key re-issued under a new timestamp.
    Replay {
        source_step: u64,
        leaked_key: SessionKey,
        #[serde(with = "hexint::u64_hex")]
        original_t: u64,
        #[serde(with = "hexint::u64_hex")]
        t_new: u64,
    },
    /// A recipient reads every pairwise key off the polynomial and forges
    /// a broadcast in the initiator's name.
    Insider {
        source_step: u64,
        insider: Scalar,
        impersonated: Scalar,
        recovered: RecoveredShareSet,
        k_star: SessionKey,
        #[serde(with = "hexint::u64_hex")]
        t_star: u64,
    },
    /// The victim's private key is taken from its certificate by discrete
    /// log and used to recover the session key.
    DlogBreak { source_step: u64, victim: Scalar, victim_private_key: Scalar, recovered_key: SessionKey },
}

/// Tallies over the deliveries of one or more broadcasts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveryCounts {
    /// Deliveries to group members.
    pub addressed: usize,
    pub accepted: usize,
    pub accepted_expected_key: usize,
    pub rejected: usize,
    /// Deliveries to non-members that ran key recovery.
    pub non_member_attempts: usize,
    pub non_member_commitment_mismatch: usize,
    pub non_member_accepts: usize,
}

impl DeliveryCounts {
    pub fn record(&mut self, in_group: bool, result: &AcceptanceResult, expected_key: Option<&SessionKey>) {
        match (in_group, result) {
            (true, AcceptanceResult::Accepted { key }) => {
                self.addressed += 1;
                self.accepted += 1;
                if expected_key == Some(key) {
                    self.accepted_expected_key += 1;
                }
            }
            (true, AcceptanceResult::Rejected { .. }) => {
                self.addressed += 1;
                self.rejected += 1;
            }
            (false, AcceptanceResult::Rejected { reason: RejectReason::NotAddressed }) => {}
            (false, AcceptanceResult::Rejected { reason }) => {
                self.non_member_attempts += 1;
                if *reason == RejectReason::CommitmentMismatch {
                    self.non_member_commitment_mismatch += 1;
                }
            }
            (false, AcceptanceResult::Accepted { .. }) => {
                self.non_member_attempts += 1;
                self.non_member_accepts += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub scenario: ScenarioKind,
    pub success: bool,
    pub summary: String,
    /// Steps of the broadcasts whose deliveries `counts` covers.
    pub broadcasts: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_key: Option<SessionKey>,
    pub counts: DeliveryCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    /// Harness ground truth, including member secrets. The broadcast
    /// channel itself only ever carries `Broadcast` messages.
    Setup {
        scenario: ScenarioKind,
        seed: u64,
        community: Community,
        group: Vec<Scalar>,
        initiator: Scalar,
        #[serde(with = "hexint::u64_hex")]
        freshness_window: u64,
    },
    Broadcast {
        origin: BroadcastOrigin,
        #[serde(with = "hexint::u64_hex")]
        clock: u64,
        message: BroadcastMessage,
    },
    Delivery {
        broadcast_step: u64,
        member: Scalar,
        #[serde(with = "hexint::u64_hex")]
        now: u64,
        result: AcceptanceResult,
    },
    AttackAction(AttackAction),
    Verdict(Verdict),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub step: u64,
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuditError {
    #[error("transcript is empty or does not start with a setup event")]
    MissingSetup,
    #[error("step {0} does not follow the previous step")]
    StepOrder(u64),
    #[error("delivery at step {0} references no earlier broadcast")]
    DanglingDelivery(u64),
    #[error("verdict at step {0} references an unknown broadcast")]
    DanglingVerdict(u64),
    #[error("verdict at step {0} disagrees with its deliveries")]
    CountMismatch(u64),
}

/// Ordered event log, serialized as JSON lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    lines: Vec<TranscriptLine>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lines(&self) -> &[TranscriptLine] {
        &self.lines
    }

    pub fn next_step(&self) -> u64 {
        self.lines.last().map_or(0, |line| line.step + 1)
    }

    pub fn push(&mut self, event: Event) -> u64 {
        let step = self.next_step();
        self.lines.push(TranscriptLine { step, event });
        step
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.lines.iter().map(|line| &line.event)
    }

    pub fn verdicts(&self) -> impl Iterator<Item = &Verdict> {
        self.events().filter_map(|event| match event {
            Event::Verdict(verdict) => Some(verdict),
            _ => None,
        })
    }

    pub fn last_verdict(&self) -> Option<&Verdict> {
        self.verdicts().last()
    }

    /// The message of the broadcast at `step`, verbatim.
    pub fn broadcast_at(&self, step: u64) -> Option<&BroadcastMessage> {
        self.lines.iter().find_map(|line| match &line.event {
            Event::Broadcast { message, .. } if line.step == step => Some(message),
            _ => None,
        })
    }

    /// Every message that went over the channel, in order. This is all an
    /// eavesdropper sees.
    pub fn channel(&self) -> impl Iterator<Item = (u64, &BroadcastMessage)> {
        self.lines.iter().filter_map(|line| match &line.event {
            Event::Broadcast { message, .. } => Some((line.step, message)),
            _ => None,
        })
    }

    pub fn deliveries_of(&self, broadcast_step: u64) -> impl Iterator<Item = (&Scalar, &AcceptanceResult)> {
        self.events().filter_map(move |event| match event {
            Event::Delivery { broadcast_step: b, member, result, .. } if *b == broadcast_step => Some((member, result)),
            _ => None,
        })
    }

    pub fn to_jsonl(&self) -> Result<String, serde_json::Error> {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(&serde_json::to_string(line)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self, HarnessError> {
        let lines = text
            .lines()
            .filter(|line| !line.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<Vec<TranscriptLine>, _>>()?;
        let transcript = Transcript { lines };
        transcript.audit()?;
        Ok(transcript)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        Self::from_jsonl(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_jsonl()?)?;
        Ok(())
    }

    /// Checks step ordering, that every delivery follows its broadcast, and
    /// that every verdict's counts can be recomputed from the deliveries.
    pub fn audit(&self) -> Result<(), AuditError> {
        let group: BTreeSet<&Scalar> = match self.lines.first() {
            Some(TranscriptLine { event: Event::Setup { group, .. }, .. }) => group.iter().collect(),
            _ => return Err(AuditError::MissingSetup),
        };
        let mut previous: Option<u64> = None;
        let mut deliveries: BTreeMap<u64, Vec<(&Scalar, &AcceptanceResult)>> = BTreeMap::new();
        for line in &self.lines {
            if previous.is_some_and(|p| line.step <= p) {
                return Err(AuditError::StepOrder(line.step));
            }
            previous = Some(line.step);
            match &line.event {
                Event::Broadcast { .. } => {
                    deliveries.insert(line.step, Vec::new());
                }
                Event::Delivery { broadcast_step, member, result, .. } => deliveries
                    .get_mut(broadcast_step)
                    .ok_or(AuditError::DanglingDelivery(line.step))?
                    .push((member, result)),
                Event::Verdict(verdict) => {
                    let mut counts = DeliveryCounts::default();
                    for step in &verdict.broadcasts {
                        let received = deliveries.get(step).ok_or(AuditError::DanglingVerdict(line.step))?;
                        for (member, result) in received {
                            counts.record(group.contains(member), result, verdict.expected_key.as_ref());
                        }
                    }
                    if counts != verdict.counts {
                        return Err(AuditError::CountMismatch(line.step));
                    }
                }
                Event::Setup { .. } | Event::AttackAction(_) => {}
            }
        }
        Ok(())
    }
}
