//! Closed-world ontology and database.
//!
//! The ontology fixes the set of domains, slots and categorical values; the
//! database holds entity records over those slots. Queries are deterministic
//! (results sorted by entity id) and classified into a one-hot vector of size
//! 3 distinguishing no match / unique match / ambiguous match.
//!
//! Delexicalization replaces value tokens with `[value_<domain>_<slot>]`
//! placeholders; lexicalization substitutes them back from an entity or user
//! goal, falling back to a seeded uniform sample from the ontology when the
//! source does not contain the slot.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::stream_rng;

/// Wildcard constraint value accepted by queries and goals.
pub const DONTCARE: &str = "dontcare";

/// A (domain, slot) pair; the unit the goal state and summary belief are
/// indexed by.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct DomainSlot {
    pub domain: String,
    pub slot: String,
}

impl DomainSlot {
    pub fn new(domain: impl Into<String>, slot: impl Into<String>) -> Self {
        DomainSlot {
            domain: domain.into(),
            slot: slot.into(),
        }
    }
}

impl fmt::Display for DomainSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.domain, self.slot)
    }
}

impl From<DomainSlot> for String {
    fn from(ds: DomainSlot) -> String {
        ds.to_string()
    }
}

impl TryFrom<String> for DomainSlot {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        match s.split_once('-') {
            Some((d, r)) if !d.is_empty() && !r.is_empty() => Ok(DomainSlot::new(d, r)),
            _ => Err(format!("malformed domain-slot key: {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotKind {
    Informable,
    Requestable,
    Both,
}

impl SlotKind {
    pub fn is_informable(self) -> bool {
        matches!(self, SlotKind::Informable | SlotKind::Both)
    }
    pub fn is_requestable(self) -> bool {
        matches!(self, SlotKind::Requestable | SlotKind::Both)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlotDescriptor {
    pub name: String,
    pub kind: SlotKind,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DomainSpec {
    slots: Vec<SlotDescriptor>,
}

/// On-disk schema: domains with slot descriptors plus the entity records.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct WorldFile {
    domains: BTreeMap<String, DomainSpec>,
    entities: Vec<Entity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub domain: String,
    pub attributes: BTreeMap<String, String>,
}

/// Result of a database query: matching entity ids (ascending), their count
/// and the one-hot size bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub entities: Vec<String>,
    pub count: usize,
    pub bucket: [u8; 3],
}

impl MatchResult {
    pub fn empty() -> Self {
        MatchResult {
            entities: Vec::new(),
            count: 0,
            bucket: bucketize(0),
        }
    }

    pub fn first(&self) -> Option<&str> {
        self.entities.first().map(String::as_str)
    }
}

/// The validated ontology with a stable total ordering of (domain, slot)
/// pairs.
#[derive(Debug, Clone)]
pub struct Ontology {
    domains: Vec<String>,
    slots: BTreeMap<String, Vec<SlotDescriptor>>,
    index: Vec<DomainSlot>,
    reverse: BTreeMap<DomainSlot, usize>,
}

impl Ontology {
    fn build(domains: BTreeMap<String, DomainSpec>) -> Result<Self> {
        if domains.is_empty() {
            return Err(Error::Validation("ontology has no domains".into()));
        }
        for (domain, spec) in &domains {
            if domain.is_empty() || !domain.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit()) {
                return Err(Error::Validation(format!(
                    "domain name {domain:?} must be non-empty lowercase alphanumeric"
                )));
            }
            let mut seen = BTreeSet::new();
            for slot in &spec.slots {
                if slot.name.is_empty()
                    || !slot
                        .name
                        .chars()
                        .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
                {
                    return Err(Error::Validation(format!(
                        "slot name {:?} in domain {domain:?} must be lowercase alphanumeric/underscore",
                        slot.name
                    )));
                }
                if !seen.insert(slot.name.clone()) {
                    return Err(Error::Validation(format!(
                        "duplicate slot {:?} in domain {domain:?}",
                        slot.name
                    )));
                }
                if slot.kind.is_informable() && slot.values.is_empty() {
                    return Err(Error::Validation(format!(
                        "informable slot {:?} in domain {domain:?} has no values",
                        slot.name
                    )));
                }
            }
            if spec.slots.is_empty() {
                return Err(Error::Validation(format!("domain {domain:?} has no slots")));
            }
        }

        // Stable lexicographic ordering of all (domain, slot) pairs.
        let mut index: Vec<DomainSlot> = domains
            .iter()
            .flat_map(|(d, spec)| spec.slots.iter().map(move |s| DomainSlot::new(d.clone(), s.name.clone())))
            .collect();
        index.sort();
        let reverse = index
            .iter()
            .enumerate()
            .map(|(i, ds)| (ds.clone(), i))
            .collect();

        Ok(Ontology {
            domains: domains.keys().cloned().collect(),
            slots: domains.into_iter().map(|(d, spec)| (d, spec.slots)).collect(),
            index,
            reverse,
        })
    }

    pub fn domains(&self) -> &[String] {
        &self.domains
    }

    pub fn has_domain(&self, domain: &str) -> bool {
        self.slots.contains_key(domain)
    }

    pub fn slots(&self, domain: &str) -> &[SlotDescriptor] {
        self.slots.get(domain).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn slot(&self, ds: &DomainSlot) -> Option<&SlotDescriptor> {
        self.slots.get(&ds.domain)?.iter().find(|s| s.name == ds.slot)
    }

    pub fn values(&self, ds: &DomainSlot) -> Option<&[String]> {
        self.slot(ds).map(|s| s.values.as_slice())
    }

    /// All (domain, slot) pairs in index order.
    pub fn domain_slot_index(&self) -> &[DomainSlot] {
        &self.index
    }

    pub fn n_domain_slots(&self) -> usize {
        self.index.len()
    }

    pub fn index_of(&self, ds: &DomainSlot) -> Option<usize> {
        self.reverse.get(ds).copied()
    }

    pub fn informable_slots(&self, domain: &str) -> Vec<&SlotDescriptor> {
        self.slots(domain).iter().filter(|s| s.kind.is_informable()).collect()
    }

    pub fn requestable_slots(&self, domain: &str) -> Vec<&SlotDescriptor> {
        self.slots(domain).iter().filter(|s| s.kind.is_requestable()).collect()
    }

    /// All distinct value strings, sorted; the DST value vocabulary is built
    /// over these plus the `dontcare`/`none` sentinels.
    pub fn all_values(&self) -> Vec<String> {
        let mut v: BTreeSet<String> = BTreeSet::new();
        for slots in self.slots.values() {
            for s in slots {
                v.extend(s.values.iter().cloned());
            }
        }
        v.into_iter().collect()
    }
}

/// Ontology plus its entity database, immutable after load.
#[derive(Debug, Clone)]
pub struct World {
    pub ontology: Ontology,
    pub entities: Vec<Entity>,
}

impl World {
    pub fn new(ontology: Ontology, mut entities: Vec<Entity>) -> Result<Self> {
        entities.sort_by(|a, b| a.id.cmp(&b.id));
        let mut ids = BTreeSet::new();
        for e in &entities {
            if !ids.insert(e.id.clone()) {
                return Err(Error::Validation(format!("duplicate entity id {:?}", e.id)));
            }
            if !ontology.has_domain(&e.domain) {
                return Err(Error::Validation(format!(
                    "entity {:?} references unknown domain {:?}",
                    e.id, e.domain
                )));
            }
            for slot in ontology.slots(&e.domain) {
                let value = e.attributes.get(&slot.name).ok_or_else(|| {
                    Error::Validation(format!("entity {:?} misses slot {:?}", e.id, slot.name))
                })?;
                if !slot.values.contains(value) {
                    return Err(Error::Validation(format!(
                        "entity {:?} value {:?} not in ontology values of slot {:?}",
                        e.id, value, slot.name
                    )));
                }
            }
        }
        Ok(World { ontology, entities })
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    pub fn domain_entities(&self, domain: &str) -> impl Iterator<Item = &Entity> {
        self.entities.iter().filter(move |e| e.domain == domain)
    }

    pub fn to_json(&self) -> String {
        let file = WorldFile {
            domains: self
                .ontology
                .slots
                .iter()
                .map(|(d, slots)| (d.clone(), DomainSpec { slots: slots.clone() }))
                .collect(),
            entities: self.entities.clone(),
        };
        serde_json::to_string_pretty(&file).expect("world serialization cannot fail")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// Load and validate an ontology/database file.
pub fn load_ontology(path: &Path) -> Result<World> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_world(&text)
}

pub fn parse_world(text: &str) -> Result<World> {
    let file: WorldFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("malformed ontology file: {e}")))?;
    let ontology = Ontology::build(file.domains)?;
    World::new(ontology, file.entities)
}

/// Classify a match count into the one-hot query vector.
pub fn bucketize(count: usize) -> [u8; 3] {
    match count {
        0 => [1, 0, 0],
        1 => [0, 1, 0],
        _ => [0, 0, 1],
    }
}

/// Retrieve the entities of `domain` matching every non-`dontcare`
/// constraint, sorted by id ascending.
pub fn query(
    world: &World,
    domain: &str,
    constraints: &BTreeMap<String, String>,
) -> Result<MatchResult> {
    if !world.ontology.has_domain(domain) {
        return Err(Error::Constraint(format!("unknown domain {domain:?}")));
    }
    for slot in constraints.keys() {
        if world.ontology.slot(&DomainSlot::new(domain, slot.clone())).is_none() {
            return Err(Error::Constraint(format!(
                "unknown slot {slot:?} in domain {domain:?}"
            )));
        }
    }
    let mut entities: Vec<String> = world
        .domain_entities(domain)
        .filter(|e| {
            constraints.iter().all(|(slot, value)| {
                value == DONTCARE || e.attributes.get(slot).map(String::as_str) == Some(value)
            })
        })
        .map(|e| e.id.clone())
        .collect();
    entities.sort();
    let count = entities.len();
    Ok(MatchResult {
        entities,
        count,
        bucket: bucketize(count),
    })
}

/// Anything that can supply a value for a slot during lexicalization.
pub trait LexicalSource {
    fn value_for(&self, ds: &DomainSlot) -> Option<String>;
}

impl LexicalSource for Entity {
    fn value_for(&self, ds: &DomainSlot) -> Option<String> {
        if ds.domain == self.domain {
            self.attributes.get(&ds.slot).cloned()
        } else {
            None
        }
    }
}

/// An empty source; every placeholder falls back to ontology sampling.
pub struct NoSource;

impl LexicalSource for NoSource {
    fn value_for(&self, _: &DomainSlot) -> Option<String> {
        None
    }
}

/// Parse a `[value_<domain>_<slot>]` placeholder token. The domain never
/// contains underscores, so the split at the first `_` is unambiguous.
pub fn parse_placeholder(token: &str) -> Option<DomainSlot> {
    let inner = token.strip_prefix("[value_")?.strip_suffix(']')?;
    let (domain, slot) = inner.split_once('_')?;
    if domain.is_empty() || slot.is_empty() {
        return None;
    }
    Some(DomainSlot::new(domain, slot))
}

pub fn placeholder(ds: &DomainSlot) -> String {
    format!("[value_{}_{}]", ds.domain, ds.slot)
}

/// Substitute placeholders from `source`; slots absent from the source are
/// filled with a seeded uniform sample over the ontology values of the slot.
pub fn lexicalize(
    tokens: &[String],
    source: &dyn LexicalSource,
    ontology: &Ontology,
    rng_seed: u64,
) -> Result<Vec<String>> {
    let mut rng = stream_rng(rng_seed, "lexicalize", 0);
    let mut out = Vec::with_capacity(tokens.len());
    for tok in tokens {
        match parse_placeholder(tok) {
            None => out.push(tok.clone()),
            Some(ds) => {
                let values = ontology.values(&ds).ok_or_else(|| {
                    Error::Lexicalization(format!("placeholder {tok:?} names unknown slot {ds}"))
                })?;
                match source.value_for(&ds) {
                    Some(v) => out.push(v),
                    None => {
                        if values.is_empty() {
                            return Err(Error::Lexicalization(format!(
                                "no ontology values to sample for {ds}"
                            )));
                        }
                        let pick = rng.gen_range(0..values.len());
                        out.push(values[pick].clone());
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Replace any maximal token span equal to an ontology value with its
/// placeholder. Ties are broken by longest span, then lowest
/// domain-slot index.
pub fn delexicalize(tokens: &[String], ontology: &Ontology) -> Vec<String> {
    // value token span -> winning domain-slot (lowest index)
    let mut table: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    for (i, ds) in ontology.domain_slot_index().iter().enumerate() {
        if let Some(values) = ontology.values(ds) {
            for v in values {
                let span: Vec<String> = v.split_whitespace().map(str::to_string).collect();
                if span.is_empty() {
                    continue;
                }
                let entry = table.entry(span).or_insert(i);
                if i < *entry {
                    *entry = i;
                }
            }
        }
    }
    let max_span = table.keys().map(Vec::len).max().unwrap_or(0);
    let mut out = Vec::with_capacity(tokens.len());
    let mut pos = 0;
    while pos < tokens.len() {
        let mut matched = None;
        let longest = max_span.min(tokens.len() - pos);
        for len in (1..=longest).rev() {
            let span = &tokens[pos..pos + len];
            if let Some(&idx) = table.get(span) {
                matched = Some((len, idx));
                break;
            }
        }
        match matched {
            Some((len, idx)) => {
                out.push(placeholder(&ontology.domain_slot_index()[idx]));
                pos += len;
            }
            None => {
                out.push(tokens[pos].clone());
                pos += 1;
            }
        }
    }
    out
}

/// Split an utterance string on whitespace into tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn tiny_world() -> World {
        let json = r#"{
          "domains": {
            "hotel": {"slots": [
              {"name": "area", "kind": "informable", "values": ["north", "south", "east"]},
              {"name": "price", "kind": "informable", "values": ["cheap", "expensive"]},
              {"name": "name", "kind": "requestable", "values": ["acorn", "birch", "cedar", "damson"]}
            ]},
            "restaurant": {"slots": [
              {"name": "food", "kind": "informable", "values": ["italian", "indian"]},
              {"name": "area", "kind": "informable", "values": ["north", "south"]},
              {"name": "name", "kind": "requestable", "values": ["amber", "basil"]}
            ]}
          },
          "entities": [
            {"id": "hotel_00", "domain": "hotel", "attributes": {"area": "north", "price": "cheap", "name": "acorn"}},
            {"id": "hotel_01", "domain": "hotel", "attributes": {"area": "north", "price": "expensive", "name": "birch"}},
            {"id": "hotel_02", "domain": "hotel", "attributes": {"area": "south", "price": "cheap", "name": "cedar"}},
            {"id": "hotel_03", "domain": "hotel", "attributes": {"area": "east", "price": "cheap", "name": "damson"}},
            {"id": "restaurant_00", "domain": "restaurant", "attributes": {"food": "italian", "area": "north", "name": "amber"}},
            {"id": "restaurant_01", "domain": "restaurant", "attributes": {"food": "indian", "area": "south", "name": "basil"}}
          ]
        }"#;
        parse_world(json).unwrap()
    }

    #[test]
    fn index_is_lexicographic() {
        let w = tiny_world();
        let idx = w.ontology.domain_slot_index();
        assert_eq!(idx.len(), 6);
        let rendered: Vec<String> = idx.iter().map(ToString::to_string).collect();
        assert_eq!(
            rendered,
            vec![
                "hotel-area",
                "hotel-name",
                "hotel-price",
                "restaurant-area",
                "restaurant-food",
                "restaurant-name"
            ]
        );
        for (i, ds) in idx.iter().enumerate() {
            assert_eq!(w.ontology.index_of(ds), Some(i));
        }
    }

    #[test]
    fn duplicate_slot_rejected() {
        let json = r#"{
          "domains": {"hotel": {"slots": [
            {"name": "area", "kind": "informable", "values": ["north"]},
            {"name": "area", "kind": "informable", "values": ["south"]}
          ]}},
          "entities": []
        }"#;
        let err = parse_world(json).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn empty_domains_rejected() {
        let err = parse_world(r#"{"domains": {}, "entities": []}"#).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn empty_informable_values_rejected() {
        let json = r#"{
          "domains": {"hotel": {"slots": [{"name": "area", "kind": "informable", "values": []}]}},
          "entities": []
        }"#;
        assert!(matches!(parse_world(json).unwrap_err(), Error::Validation(_)));
    }

    #[test]
    fn entity_value_outside_ontology_rejected() {
        let json = r#"{
          "domains": {"hotel": {"slots": [{"name": "area", "kind": "informable", "values": ["north"]}]}},
          "entities": [{"id": "h0", "domain": "hotel", "attributes": {"area": "west"}}]
        }"#;
        assert!(matches!(parse_world(json).unwrap_err(), Error::Validation(_)));
    }

    #[test]
    fn empty_constraints_match_all_sorted() {
        let w = tiny_world();
        let r = query(&w, "hotel", &BTreeMap::new()).unwrap();
        assert_eq!(r.count, 4);
        assert_eq!(r.entities, vec!["hotel_00", "hotel_01", "hotel_02", "hotel_03"]);
        assert_eq!(r.bucket, [0, 0, 1]);
    }

    #[test]
    fn filtered_query_matches_fixture() {
        // Frozen from a brute-force linear filter over the fixture DB.
        let w = tiny_world();
        let mut c = BTreeMap::new();
        c.insert("area".to_string(), "north".to_string());
        c.insert("price".to_string(), "cheap".to_string());
        let r = query(&w, "hotel", &c).unwrap();
        assert_eq!(r.entities, vec!["hotel_00"]);
        assert_eq!(r.bucket, [0, 1, 0]);
    }

    #[test]
    fn dontcare_is_wildcard() {
        let w = tiny_world();
        let mut c = BTreeMap::new();
        c.insert("area".to_string(), DONTCARE.to_string());
        c.insert("price".to_string(), "cheap".to_string());
        let r = query(&w, "hotel", &c).unwrap();
        assert_eq!(r.entities, vec!["hotel_00", "hotel_02", "hotel_03"]);
    }

    #[test]
    fn unsatisfiable_constraints_empty() {
        let w = tiny_world();
        let mut c = BTreeMap::new();
        c.insert("area".to_string(), "east".to_string());
        c.insert("price".to_string(), "expensive".to_string());
        let r = query(&w, "hotel", &c).unwrap();
        assert!(r.entities.is_empty());
        assert_eq!(r.count, 0);
        assert_eq!(r.bucket, [1, 0, 0]);
    }

    #[test]
    fn unknown_domain_or_slot_errors() {
        let w = tiny_world();
        assert!(matches!(query(&w, "train", &BTreeMap::new()), Err(Error::Constraint(_))));
        let mut c = BTreeMap::new();
        c.insert("stars".to_string(), "three".to_string());
        assert!(matches!(query(&w, "hotel", &c), Err(Error::Constraint(_))));
    }

    #[test]
    fn bucketize_cases() {
        assert_eq!(bucketize(0), [1, 0, 0]);
        assert_eq!(bucketize(1), [0, 1, 0]);
        assert_eq!(bucketize(2), [0, 0, 1]);
        assert_eq!(bucketize(17), [0, 0, 1]);
    }

    #[test]
    fn lexicalize_direct_substitution() {
        let w = tiny_world();
        let e = w.entity("hotel_00").unwrap();
        let toks = tokenize("[value_hotel_name] is in the [value_hotel_area]");
        let out = lexicalize(&toks, e, &w.ontology, 0).unwrap();
        assert_eq!(out, tokenize("acorn is in the north"));
    }

    #[test]
    fn lexicalize_sampled_fallback_is_seeded() {
        let w = tiny_world();
        let toks = tokenize("the [value_restaurant_food] place");
        let e = w.entity("hotel_00").unwrap(); // entity has no restaurant slots
        let a = lexicalize(&toks, e, &w.ontology, 7).unwrap();
        let b = lexicalize(&toks, e, &w.ontology, 7).unwrap();
        assert_eq!(a, b);
        assert!(a[1] == "italian" || a[1] == "indian");
    }

    #[test]
    fn lexicalize_identity_without_placeholders() {
        let w = tiny_world();
        let toks = tokenize("hello there , how are you ?");
        let out = lexicalize(&toks, &NoSource, &w.ontology, 3).unwrap();
        assert_eq!(out, toks);
    }

    #[test]
    fn lexicalize_unknown_slot_errors() {
        let w = tiny_world();
        let toks = tokenize("[value_hotel_stars]");
        assert!(matches!(
            lexicalize(&toks, &NoSource, &w.ontology, 0),
            Err(Error::Lexicalization(_))
        ));
    }

    #[test]
    fn delexicalize_replaces_values() {
        let w = tiny_world();
        let toks = tokenize("i want a cheap hotel in the east");
        let out = delexicalize(&toks, &w.ontology);
        assert_eq!(out, tokenize("i want a [value_hotel_price] hotel in the [value_hotel_area]"));
    }

    #[test]
    fn delexicalize_tie_breaks_on_lowest_index() {
        let w = tiny_world();
        // "north" is a value of hotel-area (index 0) and restaurant-area (index 3).
        let out = delexicalize(&tokenize("somewhere north maybe"), &w.ontology);
        assert_eq!(out, tokenize("somewhere [value_hotel_area] maybe"));
    }

    #[test]
    fn delex_lex_roundtrip() {
        let w = tiny_world();
        let e = w.entity("hotel_02").unwrap();
        let original = tokenize("cedar is a cheap hotel in the south");
        let delexed = delexicalize(&original, &w.ontology);
        let restored = lexicalize(&delexed, e, &w.ontology, 0).unwrap();
        assert_eq!(restored, original);
    }

    /// Brute-force oracle: plain linear filter with no sorting shortcuts.
    fn brute_force(world: &World, domain: &str, constraints: &BTreeMap<String, String>) -> Vec<String> {
        let mut found = Vec::new();
        for e in &world.entities {
            if e.domain != domain {
                continue;
            }
            let mut ok = true;
            for (slot, value) in constraints {
                if value == DONTCARE {
                    continue;
                }
                if e.attributes.get(slot) != Some(value) {
                    ok = false;
                }
            }
            if ok {
                found.push(e.id.clone());
            }
        }
        found.sort();
        found
    }

    proptest! {
        #[test]
        fn query_equals_brute_force(
            db_seed in 0u64..5000,
            n_entities in 0usize..100,
            n_constraints in 0usize..4,
        ) {
            let base = tiny_world();
            let mut rng = stream_rng(db_seed, "prop-db", 0);
            // random hotel DB drawn from the ontology values
            let slots: Vec<_> = base.ontology.slots("hotel").to_vec();
            let entities: Vec<Entity> = (0..n_entities)
                .map(|i| {
                    let attributes = slots
                        .iter()
                        .map(|s| {
                            let v = s.values[rng.gen_range(0..s.values.len())].clone();
                            (s.name.clone(), v)
                        })
                        .collect();
                    Entity { id: format!("hotel_{i:03}"), domain: "hotel".into(), attributes }
                })
                .collect();
            let world = World::new(base.ontology.clone(), entities).unwrap();
            let mut constraints = BTreeMap::new();
            for _ in 0..n_constraints {
                let s = &slots[rng.gen_range(0..slots.len())];
                let v = if rng.gen_bool(0.2) {
                    DONTCARE.to_string()
                } else {
                    s.values[rng.gen_range(0..s.values.len())].clone()
                };
                constraints.insert(s.name.clone(), v);
            }
            let got = query(&world, "hotel", &constraints).unwrap();
            let want = brute_force(&world, "hotel", &constraints);
            prop_assert_eq!(&got.entities, &want);
            prop_assert_eq!(got.count, want.len());
            prop_assert_eq!(got.bucket.iter().map(|&b| b as usize).sum::<usize>(), 1);
        }

        #[test]
        fn bucketize_is_one_hot(count in 0usize..10_000) {
            let b = bucketize(count);
            prop_assert_eq!(b.iter().filter(|&&x| x == 1).count(), 1);
            prop_assert_eq!(b.iter().filter(|&&x| x == 0).count(), 2);
        }
    }
}
