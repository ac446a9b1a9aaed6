//! Vocabularies for the four decoding spaces: words (NLG and encoders),
//! act tokens (policies), DST slots and DST values.
//!
//! Word and act vocabularies are built from the training corpus; the DST
//! slot and value vocabularies are derived from the ontology so that belief
//! decoding is closed over the world. Unknown words map to `<unk>`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{placeholder, Ontology, DONTCARE};
use crate::state::NONE_VALUE;

pub const UNK: &str = "<unk>";
pub const GO: &str = "<go>";
pub const EOS: &str = "<eos>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    tokens: Vec<String>,
}

impl Vocab {
    fn new(tokens: Vec<String>) -> Self {
        Vocab { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.tokens.iter().position(|t| t == token)
    }
}

/// Word vocabulary with `<unk>`/`<go>`/`<eos>` specials at fixed ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordVocab {
    vocab: Vocab,
}

impl WordVocab {
    pub const UNK_ID: usize = 0;
    pub const GO_ID: usize = 1;
    pub const EOS_ID: usize = 2;

    pub fn build<'a>(corpus_tokens: impl Iterator<Item = &'a str>, ontology: &Ontology) -> Self {
        let mut set: BTreeSet<String> = corpus_tokens.map(str::to_string).collect();
        // Lexicalized inputs contain raw values; generation targets contain
        // placeholders. Keep both sides of the vocabulary closed.
        for ds in ontology.domain_slot_index() {
            set.insert(placeholder(ds));
        }
        set.extend(ontology.all_values());
        set.insert(DONTCARE.to_string());
        set.remove(UNK);
        set.remove(GO);
        set.remove(EOS);
        let mut tokens = vec![UNK.to_string(), GO.to_string(), EOS.to_string()];
        tokens.extend(set);
        WordVocab {
            vocab: Vocab::new(tokens),
        }
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> usize {
        self.vocab.id(token).unwrap_or(Self::UNK_ID)
    }

    pub fn token(&self, id: usize) -> &str {
        self.vocab.token(id)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.token(i).to_string()).collect()
    }

    pub fn tokens(&self) -> &[String] {
        self.vocab.tokens()
    }
}

/// Closed vocabulary with `<go>`/`<eos>` specials (acts, DST slots).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeqVocab {
    vocab: Vocab,
}

impl SeqVocab {
    pub const GO_ID: usize = 0;
    pub const EOS_ID: usize = 1;

    pub fn build<'a>(tokens: impl Iterator<Item = &'a str>) -> Self {
        let mut set: BTreeSet<String> = tokens.map(str::to_string).collect();
        set.remove(GO);
        set.remove(EOS);
        let mut all = vec![GO.to_string(), EOS.to_string()];
        all.extend(set);
        SeqVocab {
            vocab: Vocab::new(all),
        }
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.vocab.id(token)
    }

    pub fn token(&self, id: usize) -> &str {
        self.vocab.token(id)
    }

    pub fn tokens(&self) -> &[String] {
        self.vocab.tokens()
    }
}

/// Plain categorical vocabulary without specials (DST values).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueVocab {
    vocab: Vocab,
}

impl ValueVocab {
    pub fn build(ontology: &Ontology) -> Self {
        let mut set: BTreeSet<String> = ontology.all_values().into_iter().collect();
        set.insert(DONTCARE.to_string());
        set.insert(NONE_VALUE.to_string());
        ValueVocab {
            vocab: Vocab::new(set.into_iter().collect()),
        }
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.vocab.id(token)
    }

    pub fn token(&self, id: usize) -> &str {
        self.vocab.token(id)
    }

    pub fn none_id(&self) -> usize {
        self.vocab.id(NONE_VALUE).expect("none is always present")
    }

    pub fn tokens(&self) -> &[String] {
        self.vocab.tokens()
    }
}

/// The four vocabularies an agent pair decodes over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabs {
    pub words: WordVocab,
    pub acts: SeqVocab,
    pub slots: SeqVocab,
    pub values: ValueVocab,
}

impl Vocabs {
    /// Builds all vocabularies from corpus surface forms plus the ontology.
    pub fn build<'a>(
        corpus_words: impl Iterator<Item = &'a str>,
        corpus_acts: impl Iterator<Item = &'a str>,
        ontology: &Ontology,
    ) -> Self {
        let slot_names: Vec<String> = ontology
            .domain_slot_index()
            .iter()
            .map(ToString::to_string)
            .collect();
        Vocabs {
            words: WordVocab::build(corpus_words, ontology),
            acts: SeqVocab::build(corpus_acts),
            slots: SeqVocab::build(slot_names.iter().map(String::as_str)),
            values: ValueVocab::build(ontology),
        }
    }

    /// Checks that the DST vocabularies still agree with an ontology (used
    /// when loading a checkpoint against a world file).
    pub fn validate_against(&self, ontology: &Ontology) -> Result<()> {
        let expect = ValueVocab::build(ontology);
        if expect != self.values {
            return Err(Error::Validation(
                "checkpoint value vocabulary disagrees with the ontology".into(),
            ));
        }
        let slot_names: Vec<String> = ontology
            .domain_slot_index()
            .iter()
            .map(ToString::to_string)
            .collect();
        let expect_slots = SeqVocab::build(slot_names.iter().map(String::as_str));
        if expect_slots != self.slots {
            return Err(Error::Validation(
                "checkpoint slot vocabulary disagrees with the ontology".into(),
            ));
        }
        Ok(())
    }
}
