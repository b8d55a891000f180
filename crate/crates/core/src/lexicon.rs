//! String ↔ id maps for every symbol kind the model embeds.
//!
//! Ids are dense and assigned in order of first appearance, so building
//! the same corpus twice produces the same lexicon.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::conll::{Sentence, NULL_ROLE};
use crate::error::{Error, Result};

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const NULL_ROLE_ID: usize = 0;
/// Unknown id in the output-lemma vocabulary.
pub const UNK_LEMMA_OUT_ID: usize = 0;

const FILE_MAGIC: &str = "#syngcn-lexicon";
const FILE_VERSION: &str = "1";

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocab {
    strings: Vec<String>,
    counts: Vec<u64>,
    ids: HashMap<String, usize>,
    unk: Option<usize>,
}

impl Vocab {
    fn with_reserved(reserved: &[&str], unk: Option<usize>) -> Self {
        let mut v = Vocab {
            unk,
            ..Default::default()
        };
        for r in reserved {
            v.push(r, 0);
        }
        v
    }

    fn push(&mut self, s: &str, count: u64) -> usize {
        let id = self.strings.len();
        self.strings.push(s.to_string());
        self.counts.push(count);
        self.ids.insert(s.to_string(), id);
        id
    }

    fn observe(&mut self, s: &str) {
        match self.ids.get(s) {
            Some(&id) => self.counts[id] += 1,
            None => {
                self.push(s, 1);
            }
        }
    }

    pub fn id(&self, s: &str) -> Option<usize> {
        self.ids.get(s).copied()
    }

    /// Id of `s`, or the UNK id for vocabularies that have one.
    ///
    /// # Panics
    /// On a vocabulary without an UNK entry when `s` is unknown; use
    /// [`Vocab::id`] there.
    pub fn lookup(&self, s: &str) -> usize {
        self.id(s)
            .or(self.unk)
            .expect("lookup on a vocabulary without UNK")
    }

    pub fn name(&self, id: usize) -> &str {
        &self.strings[id]
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts[id]
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn strings(&self) -> &[String] {
        &self.strings
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lexicon {
    pub words: Vocab,
    pub lemmas: Vocab,
    pub pos: Vocab,
    /// Syntactic functions. No reserved entries: unseen relations are
    /// handled by the graph builder.
    pub deprels: Vocab,
    /// NULL is id 0.
    pub roles: Vocab,
    /// Lemmas of training predicates, for the role classifier; UNK is id 0.
    pub predicate_lemmas: Vocab,
    pub min_freq: u64,
}

impl Lexicon {
    pub fn build(sentences: &[Sentence], min_freq: u64) -> Self {
        let mut words = Vocab::default();
        let mut lemmas = Vocab::with_reserved(&[PAD, UNK], Some(UNK_ID));
        let mut pos = Vocab::with_reserved(&[PAD, UNK], Some(UNK_ID));
        let mut deprels = Vocab::default();
        let mut roles = Vocab::with_reserved(&[NULL_ROLE], None);
        let mut predicate_lemmas = Vocab::with_reserved(&[UNK], Some(UNK_LEMMA_OUT_ID));

        for s in sentences {
            for t in &s.tokens {
                words.observe(&t.form);
                lemmas.observe(&t.lemma);
                pos.observe(&t.pos);
                if t.head > 0 {
                    deprels.observe(&t.deprel);
                }
            }
            for &p in &s.predicates {
                predicate_lemmas.observe(&s.tokens[p].lemma);
            }
            for row in &s.roles {
                for r in row {
                    roles.observe(r);
                }
            }
        }

        let mut filtered = Vocab::with_reserved(&[PAD, UNK], Some(UNK_ID));
        for (s, &c) in words.strings.iter().zip(&words.counts) {
            if c >= min_freq.max(1) {
                filtered.push(s, c);
            }
        }

        Lexicon {
            words: filtered,
            lemmas,
            pos,
            deprels,
            roles,
            predicate_lemmas,
            min_freq,
        }
    }

    pub fn num_relations(&self) -> usize {
        self.deprels.len()
    }

    pub fn num_roles(&self) -> usize {
        self.roles.len()
    }

    pub fn word_id(&self, form: &str) -> usize {
        self.words.lookup(form)
    }

    pub fn is_singleton_word(&self, id: usize) -> bool {
        id > UNK_ID && self.words.count(id) == 1
    }

    pub fn role_id(&self, role: &str) -> Option<usize> {
        self.roles.id(role)
    }

    fn kinds(&self) -> [(&'static str, &Vocab); 6] {
        [
            ("word", &self.words),
            ("lemma", &self.lemmas),
            ("pos", &self.pos),
            ("deprel", &self.deprels),
            ("role", &self.roles),
            ("plemma", &self.predicate_lemmas),
        ]
    }

    /// Versioned text: a header line, then `kind<TAB>id<TAB>string<TAB>count`.
    pub fn save<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{FILE_MAGIC}\t{FILE_VERSION}\tmin_freq={}", self.min_freq)?;
        for (kind, vocab) in self.kinds() {
            for (id, (s, c)) in vocab.strings.iter().zip(&vocab.counts).enumerate() {
                writeln!(out, "{kind}\t{id}\t{s}\t{c}")?;
            }
        }
        Ok(())
    }

    pub fn load<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let fields: Vec<&str> = header.split('\t').collect();
        if fields.len() != 3 || fields[0] != FILE_MAGIC || fields[1] != FILE_VERSION {
            return Err(Error::format(1, format!("not a version {FILE_VERSION} lexicon file")));
        }
        let min_freq = fields[2]
            .strip_prefix("min_freq=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::format(1, "missing min_freq"))?;

        let mut lex = Lexicon {
            words: Vocab::with_reserved(&[], Some(UNK_ID)),
            lemmas: Vocab::with_reserved(&[], Some(UNK_ID)),
            pos: Vocab::with_reserved(&[], Some(UNK_ID)),
            deprels: Vocab::default(),
            roles: Vocab::default(),
            predicate_lemmas: Vocab::with_reserved(&[], Some(UNK_LEMMA_OUT_ID)),
            min_freq,
        };
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                return Err(Error::format(line_no, "expected kind<TAB>id<TAB>string<TAB>count"));
            }
            let vocab = match f[0] {
                "word" => &mut lex.words,
                "lemma" => &mut lex.lemmas,
                "pos" => &mut lex.pos,
                "deprel" => &mut lex.deprels,
                "role" => &mut lex.roles,
                "plemma" => &mut lex.predicate_lemmas,
                other => return Err(Error::format(line_no, format!("unknown kind `{other}`"))),
            };
            let id: usize = f[1].parse().map_err(|_| Error::format(line_no, "bad id"))?;
            let count: u64 = f[3].parse().map_err(|_| Error::format(line_no, "bad count"))?;
            if id != vocab.len() {
                return Err(Error::format(line_no, format!("id {id} is not dense (expected {})", vocab.len())));
            }
            vocab.push(f[2], count);
        }
        if lex.roles.name_opt(NULL_ROLE_ID) != Some(NULL_ROLE) {
            return Err(Error::format(0, "role inventory does not start with NULL"));
        }
        Ok(lex)
    }
}

impl Vocab {
    fn name_opt(&self, id: usize) -> Option<&str> {
        self.strings.get(id).map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conll::{Sentence, Token};

    fn sentence(words: &[&str], roles: Option<Vec<&str>>) -> Sentence {
        let tokens = words
            .iter()
            .enumerate()
            .map(|(i, w)| Token {
                index: i + 1,
                form: w.to_string(),
                lemma: w.to_string(),
                pos: "X".into(),
                head: if i == 0 { 0 } else { 1 },
                deprel: if i == 0 { "ROOT".into() } else { "DEP".into() },
                is_predicate: i == 0 && roles.is_some(),
                sense: String::new(),
            })
            .collect();
        let rows = roles
            .map(|r| vec![r.into_iter().map(String::from).collect()])
            .unwrap_or_default();
        Sentence::from_tokens(tokens, rows).unwrap()
    }

    #[test]
    fn min_freq_drops_rare_words() {
        let s = sentence(&["a", "a", "b", "a"], None);
        let lex = Lexicon::build(&[s], 2);
        assert_eq!(lex.words.len(), 3);
        assert_eq!(lex.words.name(PAD_ID), PAD);
        assert_eq!(lex.words.name(UNK_ID), UNK);
        assert_eq!(lex.word_id("a"), 2);
        assert_eq!(lex.word_id("b"), UNK_ID);
        assert_eq!(lex.word_id("never-seen"), UNK_ID);
    }

    #[test]
    fn role_inventory_starts_with_null() {
        let s = sentence(&["v", "x", "y"], Some(vec!["_", "A0", "A1"]));
        let lex = Lexicon::build(&[s], 1);
        assert_eq!(lex.roles.strings(), &["_", "A0", "A1"]);
        assert_eq!(lex.role_id("A1"), Some(2));
        assert_eq!(lex.predicate_lemmas.strings(), &[UNK, "v"]);
    }

    #[test]
    fn save_load_round_trip() {
        let s = sentence(&["v", "x", "x"], Some(vec!["_", "A0", "_"]));
        let lex = Lexicon::build(&[s], 1);
        let mut buf = Vec::new();
        lex.save(&mut buf).unwrap();
        let loaded = Lexicon::load(buf.as_slice()).unwrap();
        assert_eq!(loaded, lex);
        let mut again = Vec::new();
        loaded.save(&mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn singleton_detection() {
        let s = sentence(&["v", "x", "x", "y"], None);
        let lex = Lexicon::build(&[s], 1);
        assert!(lex.is_singleton_word(lex.word_id("y")));
        assert!(!lex.is_singleton_word(lex.word_id("x")));
        assert!(!lex.is_singleton_word(UNK_ID));
    }
}
