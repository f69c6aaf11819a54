use num_bigint::BigUint;
use num_traits::One;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::transcript::{AttackAction, BroadcastOrigin, DeliveryCounts, Event, Transcript, Verdict};
use super::{Community, HarnessError};
use crate::adversary::{
    brute_force_dlog, forge_replay, insider_forge_broadcast, insider_recover_shares, outsider_recover_key,
    ObservedSession, MAX_DLOG_ORDER_BITS,
};
use crate::group_math::{random_scalar, Scalar};
use crate::pki::Certificate;
use crate::protocol::{
    build_broadcast, process_broadcast, AcceptanceResult, BroadcastMessage, BroadcastRequest, MessageFormat,
    RejectReason, SessionKey, DEFAULT_FRESHNESS_WINDOW,
};

/// Logical time at which every simulation starts, in seconds.
pub const DEFAULT_START_TIME: u64 = 1_700_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Honest,
    Replay,
    Insider,
    DlogBreak,
    PaperLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClockSchedule {
    pub start: u64,
    /// How far the clock moves between the honest session and an insider
    /// forgery.
    pub attack_delay: u64,
}

impl Default for ClockSchedule {
    fn default() -> Self {
        ClockSchedule { start: DEFAULT_START_TIME, attack_delay: 3600 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum NewKey {
    #[default]
    Random,
    Fixed(SessionKey),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackOptions {
    pub leak_key: bool,
    /// Replay `i` (from zero) carries `t + (i + 1) * t_offset`.
    pub t_offset: u64,
    pub repeats: usize,
    /// Defaults to the first group member.
    pub insider: Option<Scalar>,
    pub new_key: NewKey,
    /// Defaults to the first group member.
    pub victim: Option<Scalar>,
}

impl Default for AttackOptions {
    fn default() -> Self {
        AttackOptions {
            leak_key: true,
            t_offset: 3600,
            repeats: 1,
            insider: None,
            new_key: NewKey::Random,
            victim: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub group: Vec<Scalar>,
    pub initiator: Scalar,
    pub clock: ClockSchedule,
    pub freshness_window: u64,
    pub attack: AttackOptions,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, group: Vec<Scalar>, initiator: Scalar) -> Self {
        Scenario {
            kind,
            seed: 0,
            group,
            initiator,
            clock: ClockSchedule::default(),
            freshness_window: DEFAULT_FRESHNESS_WINDOW,
            attack: AttackOptions::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// An honest broadcast as seen in the transcript, plus its key when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HonestSession {
    pub step: u64,
    pub message: BroadcastMessage,
    pub key: Option<SessionKey>,
}

/// The running state of one scenario: community, clock, RNG and the
/// transcript recorded so far.
pub struct Simulation {
    community: Community,
    group: Vec<Scalar>,
    initiator: Scalar,
    freshness_window: u64,
    attack_delay: u64,
    clock: u64,
    rng: ChaCha20Rng,
    transcript: Transcript,
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::ScenarioInvalid(msg.into())
}

impl Simulation {
    /// Validates the group against the community and records the setup.
    pub fn start(community: Community, scenario: &Scenario) -> Result<Self, HarnessError> {
        if scenario.group.is_empty() {
            return Err(invalid("the group is empty"));
        }
        for (i, id) in scenario.group.iter().enumerate() {
            if !community.contains(id) {
                return Err(invalid(format!("group member {id} is not in the community")));
            }
            if scenario.group[..i].contains(id) {
                return Err(invalid(format!("group member {id} is listed twice")));
            }
        }
        if !community.contains(&scenario.initiator) {
            return Err(invalid(format!("initiator {} is not in the community", scenario.initiator)));
        }
        let mut transcript = Transcript::new();
        transcript.push(Event::Setup {
            scenario: scenario.kind,
            seed: scenario.seed,
            community: community.clone(),
            group: scenario.group.clone(),
            initiator: scenario.initiator.clone(),
            freshness_window: scenario.freshness_window,
        });
        Ok(Simulation {
            community,
            group: scenario.group.clone(),
            initiator: scenario.initiator.clone(),
            freshness_window: scenario.freshness_window,
            attack_delay: scenario.clock.attack_delay,
            clock: scenario.clock.start,
            rng: ChaCha20Rng::seed_from_u64(scenario.seed),
            transcript,
        })
    }

    /// Continues from a recorded transcript, with a fresh RNG from `seed`
    /// and the clock at the latest time the transcript mentions.
    pub fn resume(transcript: Transcript, seed: u64) -> Result<Self, HarnessError> {
        transcript.audit()?;
        let Some(Event::Setup { community, group, initiator, freshness_window, .. }) = transcript.events().next()
        else {
            return Err(HarnessError::TranscriptInvalid("missing setup event".into()));
        };
        let clock = transcript
            .events()
            .filter_map(|event| match event {
                Event::Broadcast { clock, .. } => Some(*clock),
                Event::Delivery { now, .. } => Some(*now),
                _ => None,
            })
            .max()
            .unwrap_or(DEFAULT_START_TIME);
        Ok(Simulation {
            community: community.clone(),
            group: group.clone(),
            initiator: initiator.clone(),
            freshness_window: *freshness_window,
            attack_delay: ClockSchedule::default().attack_delay,
            clock,
            rng: ChaCha20Rng::seed_from_u64(seed),
            transcript,
        })
    }

    pub fn community(&self) -> &Community {
        &self.community
    }

    pub fn group(&self) -> &[Scalar] {
        &self.group
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }

    fn certificate(&self, id: &Scalar) -> Result<&Certificate, HarnessError> {
        self.community.certificate(id).ok_or_else(|| invalid(format!("member {id} is not in the community")))
    }

    /// Puts `message` on the channel and delivers it to every community
    /// member at time `now`. Returns the broadcast's step.
    pub fn broadcast(&mut self, origin: BroadcastOrigin, message: BroadcastMessage, now: u64) -> u64 {
        let params = &self.community.params;
        let initiator_cert = self.community.certificate(&message.initiator_id).cloned();
        let results: Vec<(Scalar, AcceptanceResult)> = self
            .community
            .members()
            .map(|member| {
                let result = match &initiator_cert {
                    Some(cert) => process_broadcast(params, member, cert, &message, now, self.freshness_window),
                    None => AcceptanceResult::Rejected { reason: RejectReason::MalformedMessage },
                };
                (member.id.clone(), result)
            })
            .collect();
        let step = self.transcript.push(Event::Broadcast { origin, clock: now, message });
        for (member, result) in results {
            self.transcript.push(Event::Delivery { broadcast_step: step, member, now, result });
        }
        step
    }

    /// The initiator sends a fresh random key to the group at the current
    /// clock.
    pub fn honest_session(&mut self, format: MessageFormat) -> Result<HonestSession, HarnessError> {
        let params = &self.community.params;
        let initiator = self.community.member(&self.initiator).expect("initiator validated at start");
        let certs: Vec<Certificate> = self
            .group
            .iter()
            .map(|id| self.community.certificate(id).expect("group validated at start").clone())
            .collect();
        let key = SessionKey(random_scalar(&mut self.rng, params.q(), false));
        let request = BroadcastRequest { initiator, recipients: &certs, key: &key, timestamp: self.clock, format };
        let (message, _ephemeral) = build_broadcast(params, &self.community.ca.verify_element, request, &mut self.rng)?;
        let step = self.broadcast(BroadcastOrigin::Honest, message.clone(), self.clock);
        Ok(HonestSession { step, message, key: Some(key) })
    }

    /// The first honest broadcast in the transcript; its key is whatever a
    /// group member accepted.
    pub fn recorded_session(&self) -> Result<HonestSession, HarnessError> {
        let step = self
            .transcript
            .lines()
            .iter()
            .find_map(|line| match &line.event {
                Event::Broadcast { origin: BroadcastOrigin::Honest, .. } => Some(line.step),
                _ => None,
            })
            .ok_or_else(|| HarnessError::TranscriptInvalid("no honest broadcast recorded".into()))?;
        let message = self.transcript.broadcast_at(step).expect("step found above").clone();
        let key = self
            .transcript
            .deliveries_of(step)
            .filter(|(member, _)| self.group.contains(member))
            .find_map(|(_, result)| result.accepted_key().cloned());
        Ok(HonestSession { step, message, key })
    }

    fn tally(&self, broadcasts: &[u64], expected_key: Option<&SessionKey>) -> DeliveryCounts {
        let mut counts = DeliveryCounts::default();
        for &step in broadcasts {
            for (member, result) in self.transcript.deliveries_of(step) {
                counts.record(self.group.contains(member), result, expected_key);
            }
        }
        counts
    }

    fn conclude(&mut self, verdict: Verdict) -> Verdict {
        self.transcript.push(Event::Verdict(verdict.clone()));
        verdict
    }

    /// Verdict for an honest session: every group member holds the key.
    pub fn judge_honest(&mut self, session: &HonestSession, kind: ScenarioKind) -> Verdict {
        let ell = self.group.len();
        let counts = self.tally(&[session.step], session.key.as_ref());
        let members_ok =
            counts.addressed == ell && counts.accepted_expected_key == ell && counts.non_member_accepts == 0;
        let (success, summary) = if kind == ScenarioKind::PaperLiteral {
            let outsiders = self.community.len() - self.group.iter().filter(|id| self.community.contains(id)).count();
            let success = members_ok
                && counts.non_member_attempts == outsiders
                && counts.non_member_commitment_mismatch == outsiders;
            let summary = format!(
                "{}/{ell} accepted; {}/{} non-member recoveries failed the commitment check; {} wasted recoveries",
                counts.accepted_expected_key,
                counts.non_member_commitment_mismatch,
                counts.non_member_attempts,
                counts.non_member_attempts
            );
            (success, summary)
        } else {
            let equal = if counts.accepted_expected_key == counts.accepted { "keys equal" } else { "keys differ" };
            (members_ok, format!("{}/{ell} accepted, {equal}", counts.accepted))
        };
        self.conclude(Verdict {
            scenario: kind,
            success,
            summary,
            broadcasts: vec![session.step],
            expected_key: session.key.clone(),
            counts,
        })
    }

    /// Re-issues the session under new timestamps with the leaked key.
    pub fn replay(
        &mut self,
        session: &HonestSession,
        leak_key: bool,
        t_offset: u64,
        repeats: usize,
    ) -> Result<Verdict, HarnessError> {
        let observed = ObservedSession {
            msg: session.message.clone(),
            leaked_key: if leak_key { session.key.clone() } else { None },
        };
        let mut steps = Vec::with_capacity(repeats);
        for i in 0..repeats {
            let t_new = session.message.t + t_offset * (i as u64 + 1);
            let forged = forge_replay(&self.community.params, &observed, t_new)?;
            self.transcript.push(Event::AttackAction(AttackAction::Replay {
                source_step: session.step,
                leaked_key: observed.leaked_key.clone().expect("forge_replay checked the key"),
                original_t: session.message.t,
                t_new,
            }));
            // the victims' clocks read t_new when the forgery arrives
            self.clock = t_new;
            steps.push(self.broadcast(BroadcastOrigin::Forged, forged, t_new));
        }
        let expected = observed.leaked_key;
        let counts = self.tally(&steps, expected.as_ref());
        let total = self.group.len() * repeats;
        let success = repeats > 0 && counts.accepted_expected_key == total && counts.non_member_accepts == 0;
        let mut summary = format!("{}/{total} accepted forged replay", counts.accepted_expected_key);
        if repeats > 1 {
            summary.push_str(&format!(" across {repeats} replays"));
        }
        Ok(self.conclude(Verdict {
            scenario: ScenarioKind::Replay,
            success,
            summary,
            broadcasts: steps,
            expected_key: expected,
            counts,
        }))
    }

    /// A group member impersonates the initiator with a key of its own.
    pub fn insider(
        &mut self,
        session: &HonestSession,
        insider: &Scalar,
        new_key: &NewKey,
    ) -> Result<Verdict, HarnessError> {
        if !self.group.contains(insider) {
            return Err(invalid(format!("insider {insider} is not in the group")));
        }
        let params = &self.community.params;
        let me = self.community.member(insider).expect("group validated at start");
        let impersonated = session.message.initiator_id.clone();
        let initiator_cert = self.certificate(&impersonated)?;
        let shares = insider_recover_shares(params, me, &initiator_cert.public_key, &session.message)?;
        let k_star = match new_key {
            NewKey::Random => SessionKey(random_scalar(&mut self.rng, params.q(), false)),
            NewKey::Fixed(key) if params.is_scalar(&key.0) => key.clone(),
            NewKey::Fixed(_) => return Err(invalid("the new key is not below q")),
        };
        self.clock += self.attack_delay;
        let t_star = self.clock;
        let forged = insider_forge_broadcast(
            params,
            &shares,
            &session.message.r,
            &impersonated,
            &k_star,
            t_star,
            &mut self.rng,
        )?;
        self.transcript.push(Event::AttackAction(AttackAction::Insider {
            source_step: session.step,
            insider: insider.clone(),
            impersonated,
            recovered: shares,
            k_star: k_star.clone(),
            t_star,
        }));
        let step = self.broadcast(BroadcastOrigin::Forged, forged, t_star);
        let ell = self.group.len();
        let counts = self.tally(&[step], Some(&k_star));
        let success = counts.accepted_expected_key == ell && counts.non_member_accepts == 0;
        let summary = format!("{}/{ell} accepted K*", counts.accepted_expected_key);
        Ok(self.conclude(Verdict {
            scenario: ScenarioKind::Insider,
            success,
            summary,
            broadcasts: vec![step],
            expected_key: Some(k_star),
            counts,
        }))
    }

    /// Recovers the session key from the broadcast and public certificates.
    pub fn dlog_break(&mut self, session: &HonestSession, victim: &Scalar) -> Result<Verdict, HarnessError> {
        let params = &self.community.params;
        if params.q() > &(BigUint::one() << MAX_DLOG_ORDER_BITS) {
            return Err(invalid("discrete-log recovery needs toy parameters"));
        }
        let ground_truth = session
            .key
            .clone()
            .ok_or_else(|| HarnessError::TranscriptInvalid("no group member accepted the session".into()))?;
        let victim_cert = self.certificate(victim)?.clone();
        let initiator_cert = self.certificate(&session.message.initiator_id)?.clone();
        let recovered = outsider_recover_key(params, &session.message, &victim_cert, &initiator_cert)?;
        let victim_private_key = brute_force_dlog(params, &victim_cert.public_key, None)?;
        self.transcript.push(Event::AttackAction(AttackAction::DlogBreak {
            source_step: session.step,
            victim: victim.clone(),
            victim_private_key,
            recovered_key: recovered.clone(),
        }));
        let counts = self.tally(&[session.step], Some(&ground_truth));
        let success = recovered == ground_truth;
        let summary = if success { "recovered K equals ground truth" } else { "recovered K differs from ground truth" };
        Ok(self.conclude(Verdict {
            scenario: ScenarioKind::DlogBreak,
            success,
            summary: summary.into(),
            broadcasts: vec![session.step],
            expected_key: Some(ground_truth),
            counts,
        }))
    }
}

/// Runs an honest session and then, depending on the scenario kind, the
/// attack against it.
pub fn run_scenario(community: &Community, scenario: &Scenario) -> Result<Transcript, HarnessError> {
    let first = || scenario.group.first().cloned().ok_or_else(|| invalid("the group is empty"));
    match scenario.kind {
        ScenarioKind::Insider => {
            let insider = scenario.attack.insider.clone().map_or_else(first, Ok)?;
            if !scenario.group.contains(&insider) {
                return Err(invalid(format!("insider {insider} is not in the group")));
            }
        }
        ScenarioKind::DlogBreak => {
            let victim = scenario.attack.victim.clone().map_or_else(first, Ok)?;
            if !scenario.group.contains(&victim) {
                return Err(invalid(format!("victim {victim} is not in the group")));
            }
            if community.params.q() > &(BigUint::one() << MAX_DLOG_ORDER_BITS) {
                return Err(invalid("discrete-log recovery needs toy parameters"));
            }
        }
        _ => {}
    }

    let mut sim = Simulation::start(community.clone(), scenario)?;
    let format = match scenario.kind {
        ScenarioKind::PaperLiteral => MessageFormat::PaperLiteral,
        _ => MessageFormat::Addressed,
    };
    let session = sim.honest_session(format)?;
    let honest_kind = match scenario.kind {
        ScenarioKind::PaperLiteral => ScenarioKind::PaperLiteral,
        _ => ScenarioKind::Honest,
    };
    sim.judge_honest(&session, honest_kind);

    let attack = &scenario.attack;
    match scenario.kind {
        ScenarioKind::Honest | ScenarioKind::PaperLiteral => {}
        ScenarioKind::Replay => {
            sim.replay(&session, attack.leak_key, attack.t_offset, attack.repeats)?;
        }
        ScenarioKind::Insider => {
            let insider = attack.insider.clone().map_or_else(first, Ok)?;
            sim.insider(&session, &insider, &attack.new_key)?;
        }
        ScenarioKind::DlogBreak => {
            let victim = attack.victim.clone().map_or_else(first, Ok)?;
            sim.dlog_break(&session, &victim)?;
        }
    }
    Ok(sim.into_transcript())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{setup_community, IdAssignment, ParamsSource};

    fn ids(values: &[u64]) -> Vec<Scalar> {
        values.iter().copied().map(Scalar::from).collect()
    }

    fn community() -> Community {
        setup_community(6, ParamsSource::Toy, 3, IdAssignment::Sequential).unwrap()
    }

    fn verdict(transcript: &Transcript) -> Verdict {
        transcript.last_verdict().unwrap().clone()
    }

    #[test]
    fn honest_three_member_session() {
        let transcript =
            run_scenario(&community(), &Scenario::new(ScenarioKind::Honest, ids(&[2, 3, 4]), 1.into())).unwrap();
        let v = verdict(&transcript);
        assert!(v.success);
        assert_eq!(v.summary, "3/3 accepted, keys equal");
        transcript.audit().unwrap();
    }

    #[test]
    fn replay_on_that_session() {
        let transcript =
            run_scenario(&community(), &Scenario::new(ScenarioKind::Replay, ids(&[2, 3, 4]), 1.into())).unwrap();
        let v = verdict(&transcript);
        assert!(v.success);
        assert_eq!(v.summary, "3/3 accepted forged replay");
        assert_eq!(transcript.verdicts().count(), 2);
    }

    #[test]
    fn repeated_replays() {
        let mut scenario = Scenario::new(ScenarioKind::Replay, ids(&[2, 3, 4]), 1.into());
        scenario.attack.repeats = 5;
        let transcript = run_scenario(&community(), &scenario).unwrap();
        let v = verdict(&transcript);
        assert!(v.success);
        assert_eq!(v.summary, "15/15 accepted forged replay across 5 replays");
        assert_eq!(v.broadcasts.len(), 5);
    }

    #[test]
    fn replay_without_leak_fails() {
        let mut scenario = Scenario::new(ScenarioKind::Replay, ids(&[2, 3]), 1.into());
        scenario.attack.leak_key = false;
        assert!(matches!(
            run_scenario(&community(), &scenario),
            Err(HarnessError::Attack(crate::adversary::AttackError::MissingLeakedKey))
        ));
    }

    #[test]
    fn insider_from_first_member() {
        let transcript =
            run_scenario(&community(), &Scenario::new(ScenarioKind::Insider, ids(&[2, 3, 4]), 1.into())).unwrap();
        let v = verdict(&transcript);
        assert!(v.success);
        assert_eq!(v.summary, "3/3 accepted K*");
    }

    #[test]
    fn insider_with_chosen_key() {
        let mut scenario = Scenario::new(ScenarioKind::Insider, ids(&[2, 3, 4]), 1.into());
        scenario.attack.insider = Some(4.into());
        scenario.attack.new_key = NewKey::Fixed(SessionKey(Scalar::from(0xbeef)));
        let v = verdict(&run_scenario(&community(), &scenario).unwrap());
        assert!(v.success);
        assert_eq!(v.expected_key, Some(SessionKey(Scalar::from(0xbeef))));
    }

    #[test]
    fn dlog_break_recovers_ground_truth() {
        let transcript =
            run_scenario(&community(), &Scenario::new(ScenarioKind::DlogBreak, ids(&[2, 3]), 1.into())).unwrap();
        let v = verdict(&transcript);
        assert!(v.success, "{}", v.summary);
        let std = setup_community(3, ParamsSource::Std, 0, IdAssignment::Sequential).unwrap();
        assert!(matches!(
            run_scenario(&std, &Scenario::new(ScenarioKind::DlogBreak, ids(&[2]), 1.into())),
            Err(HarnessError::ScenarioInvalid(_))
        ));
    }

    #[test]
    fn paper_literal_counts_wasted_recoveries() {
        let transcript =
            run_scenario(&community(), &Scenario::new(ScenarioKind::PaperLiteral, ids(&[2, 3]), 1.into())).unwrap();
        let v = verdict(&transcript);
        assert!(v.success, "{}", v.summary);
        // members 1, 4, 5, 6 are outside the group
        assert_eq!(v.counts.non_member_attempts, 4);
        assert_eq!(v.counts.non_member_commitment_mismatch, 4);
        assert_eq!(
            v.summary,
            "2/2 accepted; 4/4 non-member recoveries failed the commitment check; 4 wasted recoveries"
        );
    }

    #[test]
    fn invalid_scenarios() {
        let c = community();
        let bad = [
            Scenario::new(ScenarioKind::Honest, vec![], 1.into()),
            Scenario::new(ScenarioKind::Honest, ids(&[2, 9]), 1.into()),
            Scenario::new(ScenarioKind::Honest, ids(&[2, 2]), 1.into()),
            Scenario::new(ScenarioKind::Honest, ids(&[2]), 9.into()),
            {
                let mut s = Scenario::new(ScenarioKind::Insider, ids(&[2, 3]), 1.into());
                s.attack.insider = Some(5.into());
                s
            },
        ];
        for scenario in &bad {
            assert!(matches!(run_scenario(&c, scenario), Err(HarnessError::ScenarioInvalid(_))), "{scenario:?}");
        }
    }

    #[test]
    fn resumed_attack_matches_transcript_state() {
        let c = community();
        let transcript = run_scenario(&c, &Scenario::new(ScenarioKind::Honest, ids(&[2, 3, 4]), 1.into())).unwrap();
        let text = transcript.to_jsonl().unwrap();
        let mut sim = Simulation::resume(Transcript::from_jsonl(&text).unwrap(), 0).unwrap();
        let session = sim.recorded_session().unwrap();
        assert!(session.key.is_some());
        let v = sim.insider(&session, &Scalar::from(2), &NewKey::Random).unwrap();
        assert!(v.success);
        sim.transcript().audit().unwrap();
        assert!(sim.transcript().to_jsonl().unwrap().starts_with(&text));
    }

    #[test]
    fn audit_catches_doctored_verdicts() {
        let transcript =
            run_scenario(&community(), &Scenario::new(ScenarioKind::Honest, ids(&[2, 3]), 1.into())).unwrap();
        let doctored = transcript.to_jsonl().unwrap().replace(r#""accepted":2"#, r#""accepted":3"#);
        assert!(matches!(Transcript::from_jsonl(&doctored), Err(HarnessError::Audit(_))));
    }
}
