//! Seeded synthetic corpora used by the examples and tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conll::{Sentence, Token, NULL_ROLE};

/// Relation of the arc that decides the role in the structural corpus.
pub const DECISIVE_RELATION: &str = "COMP";

/// Files shipped in `crates/core/data/`, each produced by [`bundled`].
pub const FIXTURE_FILES: [&str; 4] = [
    "overfit.conll",
    "structural.train.conll",
    "structural.dev.conll",
    "relations48.conll",
];

/// The corpus stored under a bundled file name.
pub fn bundled(name: &str) -> Option<Vec<Sentence>> {
    match name {
        "overfit.conll" => Some(overfit_corpus(7)),
        "structural.train.conll" => Some(structural_corpus(11, 80)),
        "structural.dev.conll" => Some(structural_corpus(12, 40)),
        "relations48.conll" => Some(relation_corpus(5)),
        _ => None,
    }
}

/// Path of a bundled data file inside the source tree.
pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

struct Builder {
    tokens: Vec<Token>,
    roles: Vec<String>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            tokens: Vec::new(),
            roles: Vec::new(),
        }
    }

    /// Push a token; `head` is 1-based (0 = root) and may be patched later.
    fn push(&mut self, form: &str, pos: &str, head: usize, deprel: &str) -> usize {
        self.tokens.push(Token {
            index: self.tokens.len() + 1,
            form: form.to_string(),
            lemma: form.to_lowercase(),
            pos: pos.to_string(),
            head,
            deprel: deprel.to_string(),
            is_predicate: false,
            sense: NULL_ROLE.to_string(),
        });
        self.roles.push(NULL_ROLE.to_string());
        self.tokens.len() - 1
    }

    fn attach(&mut self, dep: usize, head: usize, deprel: &str) {
        self.tokens[dep].head = head + 1;
        self.tokens[dep].deprel = deprel.to_string();
    }

    fn predicate(&mut self, i: usize) {
        self.tokens[i].is_predicate = true;
        self.tokens[i].sense = format!("{}.01", self.tokens[i].lemma);
    }

    fn role(&mut self, i: usize, role: &str) {
        self.roles[i] = role.to_string();
    }

    fn finish(self) -> Sentence {
        Sentence::from_tokens(self.tokens, vec![self.roles]).expect("one predicate per synthetic sentence")
    }
}

const NOUNS: [&str; 16] = [
    "dog", "cat", "farmer", "teacher", "engine", "river", "letter", "garden", "child", "doctor", "city", "boat",
    "song", "window", "market", "horse",
];
const VERBS: [&str; 8] = ["sees", "takes", "builds", "paints", "finds", "helps", "moves", "reads"];
const DETS: [&str; 4] = ["the", "a", "this", "every"];
const ADJS: [&str; 8] = ["old", "red", "quiet", "small", "bright", "heavy", "young", "green"];
const PREPS: [&str; 4] = ["near", "under", "behind", "with"];

/// Noun phrase `[det] [adj] noun`; returns (first token, head noun).
fn noun_phrase<R: Rng>(b: &mut Builder, rng: &mut R) -> (usize, usize) {
    let det = b.push(DETS.choose(rng).unwrap(), "DT", 0, "NMOD");
    let adj = rng.gen_bool(0.5).then(|| b.push(ADJS.choose(rng).unwrap(), "JJ", 0, "NMOD"));
    let noun = b.push(NOUNS.choose(rng).unwrap(), "NN", 0, "_");
    b.attach(det, noun, "NMOD");
    if let Some(a) = adj {
        b.attach(a, noun, "NMOD");
    }
    (det, noun)
}

/// Twenty short transitive sentences over a vocabulary of about fifty
/// words with roles A0 (subject) and A1 (object) of the verb.
pub fn overfit_corpus(seed: u64) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..20)
        .map(|_| {
            let mut b = Builder::new();
            let (_, subj) = noun_phrase(&mut b, &mut rng);
            let verb = b.push(VERBS.choose(&mut rng).unwrap(), "VBZ", 0, "ROOT");
            let (_, obj) = noun_phrase(&mut b, &mut rng);
            b.attach(subj, verb, "SBJ");
            b.attach(obj, verb, "OBJ");
            if rng.gen_bool(0.4) {
                let prep = b.push(PREPS.choose(&mut rng).unwrap(), "IN", 0, "ADV");
                b.attach(prep, verb, "ADV");
                let (_, pobj) = noun_phrase(&mut b, &mut rng);
                b.attach(pobj, prep, "PMOD");
            }
            b.predicate(verb);
            b.role(subj, "A0");
            b.role(obj, "A1");
            b.finish()
        })
        .collect()
}

const MARKERS_A0: [&str; 3] = ["alpha", "beta", "gamma"];
const MARKERS_A1: [&str; 3] = ["delta", "epsilon", "zeta"];
const FILLERS: [&str; 12] = [
    "so", "then", "very", "much", "just", "still", "even", "also", "quite", "too", "rather", "yet",
];
const LONG_VERBS: [&str; 3] = ["signals", "marks", "shows"];

/// Sentences where the argument right after the predicate is A0 or A1
/// depending on the class of a marker word attached directly to the
/// predicate by a `COMP` arc, 7 to 9 tokens away. One or two distractor
/// markers of random class sit nearby attached to other words, so the
/// decisive marker can only be told apart through the dependency arc.
pub fn structural_corpus(seed: u64, sentences: usize) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..sentences)
        .map(|_| {
            let mut b = Builder::new();
            let pre = rng.gen_range(0..=2);
            let pre_ids: Vec<usize> = (0..pre)
                .map(|_| b.push(FILLERS.choose(&mut rng).unwrap(), "RB", 0, "DEP"))
                .collect();
            let pred = b.push(LONG_VERBS.choose(&mut rng).unwrap(), "VBZ", 0, "ROOT");
            for (k, &f) in pre_ids.iter().enumerate() {
                let head = pre_ids.get(k + 1).copied().unwrap_or(pred);
                b.attach(f, head, "DEP");
            }
            let arg = b.push(NOUNS.choose(&mut rng).unwrap(), "NN", 0, "ARG");
            b.attach(arg, pred, "ARG");

            let gap = rng.gen_range(5..=7);
            let post = rng.gen_range(0..=2);
            let mut slots: Vec<bool> = vec![false; gap + post];
            let distractors = rng.gen_range(1..=2);
            for s in rand::seq::index::sample(&mut rng, gap + post, distractors).iter() {
                slots[s] = true;
            }
            let a0 = rng.gen_bool(0.5);
            let mut prev = arg;
            for (k, &is_marker) in slots.iter().enumerate() {
                if k == gap {
                    let pool = if a0 { MARKERS_A0 } else { MARKERS_A1 };
                    let m = b.push(pool.choose(&mut rng).unwrap(), "MK", 0, DECISIVE_RELATION);
                    b.attach(m, pred, DECISIVE_RELATION);
                    prev = m;
                }
                let id = if is_marker {
                    let pool = if rng.gen_bool(0.5) { MARKERS_A0 } else { MARKERS_A1 };
                    let d = b.push(pool.choose(&mut rng).unwrap(), "MK", 0, "NMOD");
                    b.attach(d, prev, "NMOD");
                    d
                } else {
                    let f = b.push(FILLERS.choose(&mut rng).unwrap(), "RB", 0, "DEP");
                    b.attach(f, prev, "DEP");
                    f
                };
                prev = id;
            }
            if post == 0 {
                let pool = if a0 { MARKERS_A0 } else { MARKERS_A1 };
                let m = b.push(pool.choose(&mut rng).unwrap(), "MK", 0, DECISIVE_RELATION);
                b.attach(m, pred, DECISIVE_RELATION);
            }
            b.predicate(pred);
            b.role(arg, if a0 { "A0" } else { "A1" });
            b.finish()
        })
        .collect()
}

/// Three tokens, one predicate, roles NULL, A0 and A1.
pub fn gradcheck_sentence() -> Sentence {
    let mut b = Builder::new();
    let subj = b.push("Sequa", "NNP", 2, "SBJ");
    let verb = b.push("makes", "VBZ", 0, "ROOT");
    let obj = b.push("engines", "NNS", 2, "OBJ");
    b.predicate(verb);
    b.role(subj, "A0");
    b.role(obj, "A1");
    b.finish()
}

/// Random trees whose arcs use 48 distinct relations `R00` … `R47`.
pub fn relation_corpus(seed: u64) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut relations: Vec<usize> = (0..48).collect();
    relations.shuffle(&mut rng);
    let mut next = relations.into_iter().cycle();
    (0..16)
        .map(|_| {
            let n = rng.gen_range(4..=10);
            let mut b = Builder::new();
            let root = rng.gen_range(0..n);
            for i in 0..n {
                b.push(NOUNS.choose(&mut rng).unwrap(), "NN", 0, "ROOT");
                if i != root {
                    let r = next.next().unwrap();
                    b.tokens[i].deprel = format!("R{r:02}");
                }
            }
            // random recursive tree: attach each non-root token to an earlier-placed one
            let mut placed = vec![root];
            let mut order: Vec<usize> = (0..n).filter(|&i| i != root).collect();
            order.shuffle(&mut rng);
            for i in order {
                let h = *placed.choose(&mut rng).unwrap();
                b.tokens[i].head = h + 1;
                placed.push(i);
            }
            b.predicate(root);
            let arg = (0..n).find(|&i| i != root).unwrap_or(root);
            b.role(arg, "A0");
            b.finish()
        })
        .collect()
}
