use std::collections::BTreeMap;

use crate::conll::{Sentence, NULL_ROLE};
use crate::error::{Error, Result};

/// Role decisions for one predicate of one sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    /// One distribution over the role inventory per token.
    pub distributions: Vec<Vec<f64>>,
    /// Predicted role id per token.
    pub labels: Vec<usize>,
}

/// Per (sentence, predicate, token) role distributions and decisions.
///
/// Keys are `(sentence index, 0-based predicate position)`. Role ids index
/// into [`PredictionSet::roles`], whose entry 0 is always the NULL role.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionSet {
    roles: Vec<String>,
    frames: BTreeMap<(usize, usize), Frame>,
}

impl PredictionSet {
    pub fn new(roles: Vec<String>) -> Result<Self> {
        if roles.first().map(String::as_str) != Some(NULL_ROLE) {
            return Err(Error::contract("role inventory must start with the NULL role"));
        }
        Ok(PredictionSet {
            roles,
            frames: BTreeMap::new(),
        })
    }

    /// One-hot predictions read from the role columns of `sentences`; the
    /// inventory is NULL followed by roles in order of first appearance.
    pub fn from_sentences(sentences: &[Sentence]) -> Self {
        let mut roles = vec![NULL_ROLE.to_string()];
        for s in sentences {
            for row in &s.roles {
                for r in row {
                    if !roles.contains(r) {
                        roles.push(r.clone());
                    }
                }
            }
        }
        let mut set = PredictionSet {
            roles,
            frames: BTreeMap::new(),
        };
        for (si, s) in sentences.iter().enumerate() {
            for (k, &p) in s.predicates.iter().enumerate() {
                let labels: Vec<usize> = s.roles[k]
                    .iter()
                    .map(|r| set.roles.iter().position(|x| x == r).expect("collected above"))
                    .collect();
                let distributions = labels
                    .iter()
                    .map(|&l| {
                        let mut d = vec![0.0; set.roles.len()];
                        d[l] = 1.0;
                        d
                    })
                    .collect();
                set.frames.insert((si, p), Frame { distributions, labels });
            }
        }
        set
    }

    pub fn roles(&self) -> &[String] {
        &self.roles
    }

    pub fn role_name(&self, id: usize) -> &str {
        &self.roles[id]
    }

    pub fn insert(&mut self, sentence: usize, predicate: usize, frame: Frame) -> Result<()> {
        if frame.distributions.len() != frame.labels.len() {
            return Err(Error::contract("frame has mismatched distributions and labels"));
        }
        if let Some(bad) = frame.labels.iter().find(|&&l| l >= self.roles.len()) {
            return Err(Error::Index {
                what: "role id",
                index: *bad,
                size: self.roles.len(),
            });
        }
        if frame.distributions.iter().any(|d| d.len() != self.roles.len()) {
            return Err(Error::contract("distribution width differs from role inventory"));
        }
        self.frames.insert((sentence, predicate), frame);
        Ok(())
    }

    pub fn frame(&self, sentence: usize, predicate: usize) -> Option<&Frame> {
        self.frames.get(&(sentence, predicate))
    }

    pub fn frames(&self) -> impl Iterator<Item = (&(usize, usize), &Frame)> {
        self.frames.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.frames.keys()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Predicted role string for a token.
    pub fn label(&self, sentence: usize, predicate: usize, token: usize) -> Option<&str> {
        self.frame(sentence, predicate)
            .and_then(|f| f.labels.get(token))
            .map(|&l| self.role_name(l))
    }
}
