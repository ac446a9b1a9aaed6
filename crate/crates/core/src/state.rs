//! Dialogue-state machinery shared by both agents.
//!
//! The user simulator tracks a [`UserGoal`] and its binary [`GoalState`];
//! the dialogue system tracks a [`BeliefState`] and its binary
//! [`SummaryBelief`] projection. Both agents exchange [`DialogueAct`]s,
//! sequences of `domain-intent-slot` tokens.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{DomainSlot, MatchResult, Ontology, DONTCARE};

/// Slot sentinel for act tokens that do not reference a slot.
pub const NO_SLOT: &str = "none";
/// Belief value sentinel that deletes a constraint.
pub const NONE_VALUE: &str = "none";
/// Pseudo-domain for domain-independent intents (bye, greet).
pub const GENERAL_DOMAIN: &str = "general";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Intent {
    Inform,
    Request,
    Offer,
    Book,
    Answer,
    Bye,
    Greet,
}

impl Intent {
    pub const ALL: [Intent; 7] = [
        Intent::Inform,
        Intent::Request,
        Intent::Offer,
        Intent::Book,
        Intent::Answer,
        Intent::Bye,
        Intent::Greet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Intent::Inform => "inform",
            Intent::Request => "request",
            Intent::Offer => "offer",
            Intent::Book => "book",
            Intent::Answer => "answer",
            Intent::Bye => "bye",
            Intent::Greet => "greet",
        }
    }

    pub fn parse(s: &str) -> Result<Intent> {
        Intent::ALL
            .into_iter()
            .find(|i| i.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown intent {s:?}")))
    }
}

impl fmt::Display for Intent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One `domain-intent-slot` act token.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct ActToken {
    pub domain: String,
    pub intent: Intent,
    pub slot: String,
}

impl ActToken {
    pub fn new(domain: impl Into<String>, intent: Intent, slot: impl Into<String>) -> Self {
        ActToken {
            domain: domain.into(),
            intent,
            slot: slot.into(),
        }
    }

    pub fn domain_slot(&self) -> Option<DomainSlot> {
        if self.slot == NO_SLOT {
            None
        } else {
            Some(DomainSlot::new(self.domain.clone(), self.slot.clone()))
        }
    }

    pub fn render(&self) -> String {
        format!("{}-{}-{}", self.domain, self.intent, self.slot)
    }

    pub fn parse(s: &str) -> Result<ActToken> {
        let mut parts = s.splitn(3, '-');
        let (d, i, sl) = match (parts.next(), parts.next(), parts.next()) {
            (Some(d), Some(i), Some(sl)) if !d.is_empty() && !sl.is_empty() => (d, i, sl),
            _ => return Err(Error::Parse(format!("malformed act token {s:?}"))),
        };
        Ok(ActToken::new(d, Intent::parse(i)?, sl))
    }
}

impl fmt::Display for ActToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl From<ActToken> for String {
    fn from(t: ActToken) -> String {
        t.render()
    }
}

impl TryFrom<String> for ActToken {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        ActToken::parse(&s).map_err(|e| e.to_string())
    }
}

/// A dialogue act: an ordered sequence of act tokens without duplicates.
/// The decoder's end-of-sequence marker is implicit in the type and explicit
/// in decode traces (`act_logprobs` includes its probability).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DialogueAct {
    pub tokens: Vec<ActToken>,
}

impl DialogueAct {
    pub fn new(tokens: Vec<ActToken>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for t in &tokens {
            if !seen.insert(t.clone()) {
                return Err(Error::Validation(format!("duplicate act token {t}")));
            }
        }
        Ok(DialogueAct { tokens })
    }

    pub fn empty() -> Self {
        DialogueAct { tokens: Vec::new() }
    }

    pub fn render(&self) -> String {
        self.tokens
            .iter()
            .map(ActToken::render)
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn parse(s: &str) -> Result<Self> {
        let tokens = s
            .split_whitespace()
            .map(ActToken::parse)
            .collect::<Result<Vec<_>>>()?;
        DialogueAct::new(tokens)
    }

    pub fn is_terminal(&self) -> bool {
        self.tokens.iter().any(|t| t.intent == Intent::Bye)
    }

    pub fn with_intent(&self, intent: Intent) -> impl Iterator<Item = &ActToken> {
        self.tokens.iter().filter(move |t| t.intent == intent)
    }

    /// First real (non-general) domain mentioned by the act, in token order.
    pub fn first_domain(&self) -> Option<&str> {
        self.tokens
            .iter()
            .map(|t| t.domain.as_str())
            .find(|d| *d != GENERAL_DOMAIN)
    }
}

/// Goal for one domain: informable constraints and requestable attributes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DomainGoal {
    pub constraints: BTreeMap<String, String>,
    pub requests: BTreeSet<String>,
}

/// The user's target across one or more domains.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserGoal {
    pub domains: BTreeMap<String, DomainGoal>,
}

impl UserGoal {
    pub fn validate(&self, ontology: &Ontology) -> Result<()> {
        if self.domains.is_empty() {
            return Err(Error::Validation("user goal has no active domain".into()));
        }
        for (domain, goal) in &self.domains {
            if !ontology.has_domain(domain) {
                return Err(Error::Validation(format!("goal references unknown domain {domain:?}")));
            }
            for (slot, value) in &goal.constraints {
                let ds = DomainSlot::new(domain.clone(), slot.clone());
                let desc = ontology
                    .slot(&ds)
                    .ok_or_else(|| Error::Validation(format!("goal references unknown slot {ds}")))?;
                if value != DONTCARE && !desc.values.contains(value) {
                    return Err(Error::Validation(format!(
                        "goal value {value:?} not in ontology values of {ds}"
                    )));
                }
            }
            for slot in &goal.requests {
                let ds = DomainSlot::new(domain.clone(), slot.clone());
                if ontology.slot(&ds).is_none() {
                    return Err(Error::Validation(format!("goal requests unknown slot {ds}")));
                }
            }
        }
        Ok(())
    }

    pub fn constraint(&self, ds: &DomainSlot) -> Option<&str> {
        self.domains
            .get(&ds.domain)
            .and_then(|g| g.constraints.get(&ds.slot))
            .map(String::as_str)
    }

    pub fn domain_names(&self) -> Vec<&str> {
        self.domains.keys().map(String::as_str).collect()
    }

    /// Relax one constraint of `domain` to `dontcare`: the non-dontcare
    /// constraint with the lowest domain-slot index. Returns the relaxed
    /// pair, or None when nothing is left to relax.
    pub fn relax_constraint(&mut self, domain: &str, ontology: &Ontology) -> Option<DomainSlot> {
        let goal = self.domains.get_mut(domain)?;
        let mut candidates: Vec<(usize, String)> = goal
            .constraints
            .iter()
            .filter(|(_, v)| *v != DONTCARE)
            .filter_map(|(s, _)| {
                ontology
                    .index_of(&DomainSlot::new(domain, s.clone()))
                    .map(|i| (i, s.clone()))
            })
            .collect();
        candidates.sort();
        let (_, slot) = candidates.into_iter().next()?;
        goal.constraints.insert(slot.clone(), DONTCARE.to_string());
        Some(DomainSlot::new(domain, slot))
    }
}

impl crate::ontology::LexicalSource for UserGoal {
    fn value_for(&self, ds: &DomainSlot) -> Option<String> {
        self.constraint(ds).map(str::to_string)
    }
}

/// Binary vector over the ontology's domain-slot index marking goal slots
/// not yet conveyed or asked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GoalState {
    pub bits: Vec<u8>,
}

impl GoalState {
    pub fn as_f64(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| f64::from(b)).collect()
    }

    pub fn set(&mut self, index: usize) {
        if index < self.bits.len() {
            self.bits[index] = 1;
        }
    }
}

/// Goal-state entries start on for every slot in the goal's constraints or
/// requests.
pub fn init_goal_state(goal: &UserGoal, ontology: &Ontology) -> GoalState {
    let mut bits = vec![0u8; ontology.n_domain_slots()];
    for (domain, g) in &goal.domains {
        for slot in g.constraints.keys().chain(g.requests.iter()) {
            if let Some(i) = ontology.index_of(&DomainSlot::new(domain.clone(), slot.clone())) {
                bits[i] = 1;
            }
        }
    }
    GoalState { bits }
}

/// Turn off every entry whose slot appears in the previous user act as an
/// inform or request.
pub fn update_goal_state(state: &GoalState, prev_user_act: &DialogueAct, ontology: &Ontology) -> GoalState {
    let mut bits = state.bits.clone();
    for token in &prev_user_act.tokens {
        if !matches!(token.intent, Intent::Inform | Intent::Request) {
            continue;
        }
        if let Some(ds) = token.domain_slot() {
            if let Some(i) = ontology.index_of(&ds) {
                bits[i] = 0;
            }
        }
    }
    GoalState { bits }
}

/// The DS's accumulated (domain, slot) -> value constraint store.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BeliefState {
    pub constraints: BTreeMap<DomainSlot, String>,
}

impl BeliefState {
    pub fn domain_constraints(&self, domain: &str) -> BTreeMap<String, String> {
        self.constraints
            .iter()
            .filter(|(ds, _)| ds.domain == domain)
            .map(|(ds, v)| (ds.slot.clone(), v.clone()))
            .collect()
    }

    pub fn domains(&self) -> BTreeSet<&str> {
        self.constraints.keys().map(|ds| ds.domain.as_str()).collect()
    }
}

/// Running tallies for conditions that are tolerated rather than fatal.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub unknown_dst_pairs: u64,
    pub act_truncations: u64,
    pub utterance_truncations: u64,
    pub dst_decoder_calls: u64,
}

impl Diagnostics {
    pub fn merge(&mut self, other: &Diagnostics) {
        self.unknown_dst_pairs += other.unknown_dst_pairs;
        self.act_truncations += other.act_truncations;
        self.utterance_truncations += other.utterance_truncations;
        self.dst_decoder_calls += other.dst_decoder_calls;
    }
}

/// Aggregate predicted slot-value pairs into the belief. Pairs with value
/// `none` delete the key; pairs over unknown slots are skipped and tallied.
pub fn update_belief(
    belief: &BeliefState,
    dst_output: &[(DomainSlot, String)],
    ontology: &Ontology,
    diag: &mut Diagnostics,
) -> BeliefState {
    let mut next = belief.clone();
    for (ds, value) in dst_output {
        if ontology.slot(ds).is_none() {
            diag.unknown_dst_pairs += 1;
            continue;
        }
        if value == NONE_VALUE {
            next.constraints.remove(ds);
        } else {
            next.constraints.insert(ds.clone(), value.clone());
        }
    }
    next
}

/// Binary vector over the domain-slot index marking filled belief slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SummaryBelief {
    pub bits: Vec<u8>,
}

impl SummaryBelief {
    pub fn as_f64(&self) -> Vec<f64> {
        self.bits.iter().map(|&b| f64::from(b)).collect()
    }

    /// Compact key for exploration statistics.
    pub fn key(&self) -> String {
        self.bits.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect()
    }
}

pub fn summarize_belief(belief: &BeliefState, ontology: &Ontology) -> SummaryBelief {
    let mut bits = vec![0u8; ontology.n_domain_slots()];
    for ds in belief.constraints.keys() {
        if let Some(i) = ontology.index_of(ds) {
            bits[i] = 1;
        }
    }
    SummaryBelief { bits }
}

/// Slot-value pairs that change `prev` into `cur` (additions and
/// overwrites, deletions as `none`), in domain-slot order. This is the
/// per-turn decoding target for the DST.
pub fn belief_delta(prev: &BeliefState, cur: &BeliefState) -> Vec<(DomainSlot, String)> {
    let mut delta = Vec::new();
    for (ds, v) in &cur.constraints {
        if prev.constraints.get(ds) != Some(v) {
            delta.push((ds.clone(), v.clone()));
        }
    }
    for ds in prev.constraints.keys() {
        if !cur.constraints.contains_key(ds) {
            delta.push((ds.clone(), NONE_VALUE.to_string()));
        }
    }
    delta.sort();
    delta
}

/// Per-agent rewards assigned to one turn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TurnRewards {
    pub ds: f64,
    pub us: f64,
}

/// One exchange: the user speaks, then the system replies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    pub user_utterance: Vec<String>,
    pub system_utterance: Vec<String>,
    pub user_act: DialogueAct,
    pub system_act: DialogueAct,
    pub belief: BeliefState,
    pub goal_state_snapshot: GoalState,
    pub match_result: MatchResult,
    pub rewards: TurnRewards,
    #[serde(default)]
    pub us_act_logprobs: Vec<f64>,
    #[serde(default)]
    pub ds_act_logprobs: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub informed: BTreeMap<String, bool>,
    pub success: bool,
}

/// Full transcript of one self-play episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueLog {
    pub goal: UserGoal,
    pub turns: Vec<Turn>,
    pub outcome: Outcome,
}

impl DialogueLog {
    pub fn validate(&self, max_turns: usize) -> Result<()> {
        if self.turns.len() > max_turns {
            return Err(Error::Validation(format!(
                "log has {} turns, exceeding max_turns {max_turns}",
                self.turns.len()
            )));
        }
        for (i, t) in self.turns.iter().enumerate() {
            if t.index != i {
                return Err(Error::Validation(format!(
                    "turn index {} at position {i} is not strictly increasing from 0",
                    t.index
                )));
            }
        }
        Ok(())
    }
}

/// Serialize logs as JSONL, one dialogue per line.
pub fn logs_to_jsonl(logs: &[DialogueLog]) -> String {
    let mut out = String::new();
    for log in logs {
        out.push_str(&serde_json::to_string(log).expect("log serialization cannot fail"));
        out.push('\n');
    }
    out
}

pub fn logs_from_jsonl(text: &str) -> Result<Vec<DialogueLog>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| Error::Parse(format!("log line {}: {e}", i + 1)))
        })
        .collect()
}
