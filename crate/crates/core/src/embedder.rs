//! Word representations: random word, pretrained word, POS and predicate
//! lemma embeddings concatenated per token.

use std::collections::HashMap;
use std::io::BufRead;

use log::warn;
use rand::Rng;

use crate::error::{Error, Result};
use crate::lexicon::{Lexicon, UNK_ID};
use crate::numerics::{ParamStore, Scalar, Tape, Tensor, Var};

pub const WORD: &str = "embed.word";
pub const PRETRAINED: &str = "embed.pretrained";
pub const POS: &str = "embed.pos";
pub const LEMMA: &str = "embed.lemma";
pub const NOT_PREDICATE: &str = "embed.not_predicate";

const INIT_RANGE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmbedDims {
    pub d_w: usize,
    pub d_pos: usize,
    pub d_l: usize,
    pub not_predicate_vector: bool,
}

impl EmbedDims {
    pub fn width(&self) -> usize {
        2 * self.d_w + self.d_pos + self.d_l
    }
}

/// Per-token vocabulary ids for one sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenIds {
    pub words: Vec<usize>,
    pub pos: Vec<usize>,
    pub lemmas: Vec<usize>,
}

impl TokenIds {
    pub fn new(sentence: &crate::conll::Sentence, lexicon: &Lexicon) -> Self {
        TokenIds {
            words: sentence.tokens.iter().map(|t| lexicon.word_id(&t.form)).collect(),
            pos: sentence.tokens.iter().map(|t| lexicon.pos.lookup(&t.pos)).collect(),
            lemmas: sentence.tokens.iter().map(|t| lexicon.lemmas.lookup(&t.lemma)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Register the embedding tables. The pretrained table is frozen; pass
/// `None` to get an all-zero one.
pub fn init_tables<T: Scalar, R: Rng>(
    params: &mut ParamStore<T>,
    dims: EmbedDims,
    lexicon: &Lexicon,
    pretrained: Option<Tensor<T>>,
    rng: &mut R,
) -> Result<()> {
    let vocab = lexicon.words.len();
    params.insert_uniform(WORD, &[vocab, dims.d_w], INIT_RANGE, rng);
    let pretrained = pretrained.unwrap_or_else(|| Tensor::zeros(&[vocab, dims.d_w]));
    if pretrained.shape() != [vocab, dims.d_w] {
        return Err(Error::Shape {
            op: "pretrained table",
            left: vec![vocab, dims.d_w],
            right: pretrained.shape().to_vec(),
        });
    }
    params.insert(PRETRAINED, pretrained, false);
    params.insert_uniform(POS, &[lexicon.pos.len(), dims.d_pos], INIT_RANGE, rng);
    params.insert_uniform(LEMMA, &[lexicon.lemmas.len(), dims.d_l], INIT_RANGE, rng);
    if dims.not_predicate_vector {
        params.insert_uniform(NOT_PREDICATE, &[1, dims.d_l], INIT_RANGE, rng);
    }
    Ok(())
}

/// `x_i = word ∘ pretrained ∘ pos ∘ lemma` for every token, where the
/// lemma slice is only filled on the predicate row. `word_ids` may differ
/// from `ids.words` when training replaces rare words with UNK.
pub fn embed_sentence<T: Scalar>(
    tape: &mut Tape<T>,
    params: &ParamStore<T>,
    ids: &TokenIds,
    word_ids: &[usize],
    predicate: usize,
) -> Result<Var> {
    let n = ids.len();
    if predicate >= n {
        return Err(Error::Index {
            what: "predicate position",
            index: predicate,
            size: n,
        });
    }
    let word_table = tape.param(params, WORD)?;
    let words = tape.gather_rows(word_table, word_ids)?;
    let pre_table = tape.param(params, PRETRAINED)?;
    let pretrained = tape.gather_rows(pre_table, &ids.words)?;
    let pos_table = tape.param(params, POS)?;
    let pos = tape.gather_rows(pos_table, &ids.pos)?;

    let lemma_table = tape.param(params, LEMMA)?;
    let pred_lemma = tape.gather_rows(lemma_table, &[ids.lemmas[predicate]])?;
    let mut lemma = tape.scatter_add_rows(pred_lemma, &[predicate], n)?;
    if params.contains(NOT_PREDICATE) && n > 1 {
        let np = tape.param(params, NOT_PREDICATE)?;
        let rest: Vec<usize> = (0..n).filter(|&i| i != predicate).collect();
        let rows = tape.gather_rows(np, &vec![0; rest.len()])?;
        let spread = tape.scatter_add_rows(rows, &rest, n)?;
        lemma = tape.add(lemma, spread)?;
    }
    tape.concat_cols(&[words, pretrained, pos, lemma])
}

#[derive(Clone, Debug, PartialEq)]
pub struct PretrainedReport {
    /// Vocabulary words found in the file.
    pub hits: usize,
    /// Vocabulary words missing from the file (zero rows).
    pub misses: usize,
    pub file_entries: usize,
    pub duplicates: usize,
}

impl PretrainedReport {
    pub fn hit_rate(&self) -> f64 {
        let total = self.hits + self.misses;
        if total == 0 {
            0.0
        } else {
            self.hits as f64 / total as f64
        }
    }
}

/// Read `token v1 v2 ... v_d` lines into a table aligned with the word
/// vocabulary. Lookup lowercases vocabulary words; reserved rows and
/// misses stay zero.
pub fn load_pretrained<T: Scalar, R: BufRead>(
    input: R,
    lexicon: &Lexicon,
    d_w: usize,
) -> Result<(Tensor<T>, PretrainedReport)> {
    let mut vectors: HashMap<String, Vec<T>> = HashMap::new();
    let mut dim: Option<usize> = None;
    let mut entries = 0;
    let mut duplicates = 0;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values = fields
            .map(|f| f.parse::<f64>().map(T::lit))
            .collect::<std::result::Result<Vec<T>, _>>()
            .map_err(|_| Error::format(i + 1, "non-numeric embedding value"))?;
        match dim {
            None if values.len() != d_w => {
                return Err(Error::format(
                    i + 1,
                    format!("embedding dimension {} does not match d_w = {d_w}", values.len()),
                ))
            }
            Some(d) if d != values.len() => {
                return Err(Error::format(
                    i + 1,
                    format!("dimension {} differs from earlier lines ({d})", values.len()),
                ))
            }
            _ => dim = Some(values.len()),
        }
        entries += 1;
        if vectors.insert(token.to_string(), values).is_some() {
            duplicates += 1;
            warn!("pretrained embedding for `{token}` repeated at line {}; keeping the last", i + 1);
        }
    }

    let vocab = &lexicon.words;
    let mut table = Tensor::zeros(&[vocab.len(), d_w]);
    let (mut hits, mut misses) = (0, 0);
    for id in (UNK_ID + 1)..vocab.len() {
        match vectors.get(&vocab.name(id).to_lowercase()) {
            Some(v) => {
                table.row_mut(id).copy_from_slice(v);
                hits += 1;
            }
            None => misses += 1,
        }
    }
    Ok((
        table,
        PretrainedReport {
            hits,
            misses,
            file_entries: entries,
            duplicates,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conll::{Sentence, Token};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lexicon(words: &[&str]) -> Lexicon {
        let tokens = words
            .iter()
            .enumerate()
            .map(|(i, w)| Token {
                index: i + 1,
                form: w.to_string(),
                lemma: w.to_lowercase(),
                pos: "N".into(),
                head: if i == 0 { 0 } else { 1 },
                deprel: "DEP".into(),
                is_predicate: false,
                sense: String::new(),
            })
            .collect();
        Lexicon::build(&[Sentence::from_tokens(tokens, vec![]).unwrap()], 1)
    }

    #[test]
    fn pretrained_hit_rate() {
        let lex = lexicon(&["x", "y"]);
        let file = "x 1 2 3\nz 4 5 6\n";
        let (table, report) = load_pretrained::<f32, _>(file.as_bytes(), &lex, 3).unwrap();
        assert_eq!(report.hit_rate(), 0.5);
        assert_eq!(table.row(lex.word_id("x")), &[1.0, 2.0, 3.0]);
        assert_eq!(table.row(lex.word_id("y")), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn empty_pretrained_file() {
        let lex = lexicon(&["x", "y"]);
        let (table, report) = load_pretrained::<f32, _>("".as_bytes(), &lex, 3).unwrap();
        assert_eq!(report.hit_rate(), 0.0);
        assert!(table.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn duplicates_last_wins() {
        let lex = lexicon(&["x"]);
        let file = "x 1 1\nx 2 2\nx 3 3\n";
        let (table, report) = load_pretrained::<f32, _>(file.as_bytes(), &lex, 2).unwrap();
        // oracle: apply the lines in order, overwriting
        let mut oracle = vec![0.0f32; 2];
        for line in file.lines() {
            let v: Vec<f32> = line.split(' ').skip(1).map(|s| s.parse().unwrap()).collect();
            oracle = v;
        }
        assert_eq!(table.row(lex.word_id("x")), oracle.as_slice());
        assert_eq!(report.duplicates, 2);
    }

    #[test]
    fn inconsistent_dimension_reports_line() {
        let lex = lexicon(&["x"]);
        let err = load_pretrained::<f32, _>("x 1 2\ny 1 2 3\n".as_bytes(), &lex, 2).unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }));
    }

    #[test]
    fn pretrained_lookup_lowercases() {
        let lex = lexicon(&["The"]);
        let (table, _) = load_pretrained::<f32, _>("the 0.5\n".as_bytes(), &lex, 1).unwrap();
        assert_eq!(table.row(lex.word_id("The")), &[0.5]);
    }

    fn embed(params: &ParamStore<f32>, ids: &TokenIds, predicate: usize) -> Tensor<f32> {
        let mut tape = Tape::new();
        let x = embed_sentence(&mut tape, params, ids, &ids.words, predicate).unwrap();
        tape.value(x).clone()
    }

    #[test]
    fn row_width_and_lemma_slice() {
        let lex = lexicon(&["a", "b", "c"]);
        let dims = EmbedDims {
            d_w: 100,
            d_pos: 16,
            d_l: 100,
            not_predicate_vector: false,
        };
        let mut params = ParamStore::new();
        init_tables(&mut params, dims, &lex, None, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let s = Sentence::from_tokens(
            ["a", "b", "c"]
                .iter()
                .enumerate()
                .map(|(i, w)| Token {
                    index: i + 1,
                    form: w.to_string(),
                    lemma: w.to_string(),
                    pos: "N".into(),
                    head: if i == 0 { 0 } else { 1 },
                    deprel: "DEP".into(),
                    is_predicate: false,
                    sense: String::new(),
                })
                .collect(),
            vec![],
        )
        .unwrap();
        let ids = TokenIds::new(&s, &lex);
        let x0 = embed(&params, &ids, 0);
        let x2 = embed(&params, &ids, 2);
        assert_eq!(x0.shape(), &[3, 316]);

        let lemma = 2 * 100 + 16..316;
        for r in 0..3 {
            // outside the lemma slice both instances agree exactly
            assert_eq!(x0.row(r)[..lemma.start], x2.row(r)[..lemma.start]);
            let nonzero = |t: &Tensor<f32>| t.row(r)[lemma.clone()].iter().any(|&v| v != 0.0);
            assert_eq!(nonzero(&x0), r == 0);
            assert_eq!(nonzero(&x2), r == 2);
        }
    }

    #[test]
    fn zero_tables_give_zero_rows() {
        let lex = lexicon(&["a", "b"]);
        let dims = EmbedDims {
            d_w: 3,
            d_pos: 2,
            d_l: 3,
            not_predicate_vector: false,
        };
        let mut params = ParamStore::new();
        init_tables(&mut params, dims, &lex, None, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        for name in [WORD, POS] {
            let t = params.value(name).unwrap().clone();
            params.insert(name, Tensor::zeros(t.shape()), true);
        }
        let ids = TokenIds {
            words: vec![2, 3],
            pos: vec![2, 2],
            lemmas: vec![2, 3],
        };
        let x = embed(&params, &ids, 0);
        assert!(x.row(1).iter().all(|&v| v == 0.0));
    }
}
