//! CoNLL-2009 reading and writing.
//!
//! Columns: `ID FORM LEMMA PLEMMA POS PPOS FEAT PFEAT HEAD PHEAD DEPREL
//! PDEPREL FILLPRED PRED APRED1..APREDn`, tab separated, with a blank line
//! after every sentence. The fourteen fixed columns are kept verbatim so
//! that writing a sentence back reproduces its input line for line.

use std::io::{BufRead, Write};

use log::warn;

use crate::error::{Error, Result};
use crate::predictions::PredictionSet;

/// Role cell meaning "not an argument".
pub const NULL_ROLE: &str = "_";

pub const FIXED_COLUMNS: usize = 14;

const ID: usize = 0;
const FORM: usize = 1;
const LEMMA: usize = 2;
const PLEMMA: usize = 3;
const POS: usize = 4;
const PPOS: usize = 5;
const HEAD: usize = 8;
const PHEAD: usize = 9;
const DEPREL: usize = 10;
const PDEPREL: usize = 11;
const FILLPRED: usize = 12;
const PRED: usize = 13;

/// Which syntax columns feed the model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SyntaxSource {
    /// PPOS / PHEAD / PDEPREL, falling back to the gold column when the
    /// predicted cell is `_`.
    #[default]
    Predicted,
    Gold,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    /// 1-based position.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub pos: String,
    /// 1-based head position, 0 for the root.
    pub head: usize,
    pub deprel: String,
    pub is_predicate: bool,
    pub sense: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    /// 0-based positions of predicate tokens, in sentence order.
    pub predicates: Vec<usize>,
    /// `roles[k][i]`: role of token `i` for predicate `k`, [`NULL_ROLE`]
    /// when it is not an argument.
    pub roles: Vec<Vec<String>>,
    /// The fourteen fixed columns of every token as read.
    raw: Vec<Vec<String>>,
    /// Whether the head structure had to be repaired into a tree.
    pub repaired: bool,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// 1-based token ids of the predicates.
    pub fn predicate_ids(&self) -> Vec<usize> {
        self.predicates.iter().map(|p| p + 1).collect()
    }

    /// Heads as 0-based positions, `None` for root attachment.
    pub fn head_positions(&self) -> Vec<Option<usize>> {
        self.tokens
            .iter()
            .map(|t| t.head.checked_sub(1))
            .collect()
    }

    /// Build a sentence from already-parsed tokens and role rows. The raw
    /// columns are synthesized so the sentence can be written out.
    pub fn from_tokens(tokens: Vec<Token>, roles: Vec<Vec<String>>) -> Result<Self> {
        let predicates: Vec<usize> = tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.is_predicate)
            .map(|(i, _)| i)
            .collect();
        if roles.len() != predicates.len() || roles.iter().any(|r| r.len() != tokens.len()) {
            return Err(Error::contract(format!(
                "{} predicates but {} role rows for {} tokens",
                predicates.len(),
                roles.len(),
                tokens.len()
            )));
        }
        let raw = tokens
            .iter()
            .map(|t| {
                let head = t.head.to_string();
                vec![
                    t.index.to_string(),
                    t.form.clone(),
                    t.lemma.clone(),
                    t.lemma.clone(),
                    t.pos.clone(),
                    t.pos.clone(),
                    "_".into(),
                    "_".into(),
                    head.clone(),
                    head,
                    t.deprel.clone(),
                    t.deprel.clone(),
                    if t.is_predicate { "Y" } else { "_" }.into(),
                    if t.is_predicate && !t.sense.is_empty() { t.sense.clone() } else { "_".into() },
                ]
            })
            .collect();
        let mut sentence = Sentence {
            tokens,
            predicates,
            roles,
            raw,
            repaired: false,
        };
        let mut heads: Vec<usize> = sentence.tokens.iter().map(|t| t.head).collect();
        if repair_heads(&mut heads) {
            sentence.repaired = true;
            for (t, h) in sentence.tokens.iter_mut().zip(heads) {
                t.head = h;
            }
        }
        Ok(sentence)
    }

    fn write<W: Write>(&self, out: &mut W, roles: &[Vec<String>]) -> Result<()> {
        for (i, fixed) in self.raw.iter().enumerate() {
            let mut line = fixed.join("\t");
            for row in roles {
                line.push('\t');
                line.push_str(&row[i]);
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        out.write_all(b"\n")?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    pub syntax: SyntaxSource,
}

pub fn parse_conll<R: BufRead>(input: R) -> Result<Vec<Sentence>> {
    parse_conll_with(input, ParseOptions::default())
}

pub fn parse_conll_str(text: &str) -> Result<Vec<Sentence>> {
    parse_conll(text.as_bytes())
}

pub fn parse_conll_with<R: BufRead>(input: R, options: ParseOptions) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut block: Vec<(usize, Vec<String>)> = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            if !block.is_empty() {
                sentences.push(build_sentence(std::mem::take(&mut block), options)?);
            }
            continue;
        }
        block.push((i + 1, line.split('\t').map(str::to_string).collect()));
    }
    if !block.is_empty() {
        sentences.push(build_sentence(block, options)?);
    }
    Ok(sentences)
}

fn parse_index(cell: &str, line: usize, column: &str) -> Result<usize> {
    cell.parse()
        .map_err(|_| Error::parse(line, format!("{column} `{cell}` is not a non-negative integer")))
}

fn pick(row: &[String], preferred: usize, fallback: usize, options: ParseOptions) -> &str {
    match options.syntax {
        SyntaxSource::Gold => &row[fallback],
        SyntaxSource::Predicted if row[preferred] == "_" => &row[fallback],
        SyntaxSource::Predicted => &row[preferred],
    }
}

fn build_sentence(block: Vec<(usize, Vec<String>)>, options: ParseOptions) -> Result<Sentence> {
    let first_line = block[0].0;
    let width = block[0].1.len();
    for (line, cols) in &block {
        if cols.len() < FIXED_COLUMNS {
            return Err(Error::parse(
                *line,
                format!("expected at least {FIXED_COLUMNS} columns, found {}", cols.len()),
            ));
        }
        if cols.len() != width {
            return Err(Error::parse(
                *line,
                format!("ragged row: {} columns where the sentence has {width}", cols.len()),
            ));
        }
    }
    let num_predicates = block.iter().filter(|(_, c)| c[FILLPRED] == "Y").count();
    if width - FIXED_COLUMNS != num_predicates {
        return Err(Error::parse(
            first_line,
            format!(
                "sentence has {num_predicates} predicates but {} APRED columns",
                width - FIXED_COLUMNS
            ),
        ));
    }

    let n = block.len();
    let mut tokens = Vec::with_capacity(n);
    let mut raw = Vec::with_capacity(n);
    let mut roles = vec![Vec::with_capacity(n); num_predicates];
    let mut predicates = Vec::new();
    for (pos, (line, mut cols)) in block.into_iter().enumerate() {
        let id = parse_index(&cols[ID], line, "ID")?;
        if id != pos + 1 {
            return Err(Error::parse(line, format!("expected token ID {}, found {id}", pos + 1)));
        }
        let gold_head = parse_index(&cols[HEAD], line, "HEAD")?;
        let head = match options.syntax {
            SyntaxSource::Predicted if cols[PHEAD] != "_" => parse_index(&cols[PHEAD], line, "PHEAD")?,
            _ => gold_head,
        };
        let is_predicate = cols[FILLPRED] == "Y";
        if is_predicate {
            predicates.push(pos);
        }
        let lemma = if cols[LEMMA] == "_" { &cols[PLEMMA] } else { &cols[LEMMA] };
        tokens.push(Token {
            index: id,
            form: cols[FORM].clone(),
            lemma: lemma.clone(),
            pos: pick(&cols, PPOS, POS, options).to_string(),
            head,
            deprel: pick(&cols, PDEPREL, DEPREL, options).to_string(),
            is_predicate,
            sense: if cols[PRED] == "_" { String::new() } else { cols[PRED].clone() },
        });
        for (k, cell) in cols.drain(FIXED_COLUMNS..).enumerate() {
            roles[k].push(cell);
        }
        raw.push(cols);
    }

    let mut heads: Vec<usize> = tokens.iter().map(|t| t.head).collect();
    let repaired = repair_heads(&mut heads);
    if repaired {
        warn!("sentence at line {first_line}: head structure is not a tree; repaired");
        for (t, h) in tokens.iter_mut().zip(heads) {
            t.head = h;
        }
    }
    Ok(Sentence {
        tokens,
        predicates,
        roles,
        raw,
        repaired,
    })
}

/// Force 1-based `heads` (0 = root) into a single-rooted tree.
///
/// Out-of-range and self heads become root attachments, every cycle is
/// broken by attaching its lowest-index token to the root, and if several
/// tokens then hang off the root, all but the first are re-attached to the
/// first one. Returns whether anything changed.
pub fn repair_heads(heads: &mut [usize]) -> bool {
    let n = heads.len();
    let mut changed = false;
    for (i, h) in heads.iter_mut().enumerate() {
        if *h > n || *h == i + 1 {
            *h = 0;
            changed = true;
        }
    }

    // 0 = unvisited, 1 = on current walk, 2 = reaches root
    let mut state = vec![0u8; n];
    for start in 0..n {
        let mut path = Vec::new();
        let mut cur = start;
        loop {
            match state[cur] {
                2 => break,
                1 => {
                    let at = path.iter().position(|&p| p == cur).expect("on path");
                    let breaker = *path[at..].iter().min().expect("non-empty cycle");
                    heads[breaker] = 0;
                    changed = true;
                    break;
                }
                _ => {}
            }
            state[cur] = 1;
            path.push(cur);
            match heads[cur] {
                0 => break,
                h => cur = h - 1,
            }
        }
        for p in path {
            state[p] = 2;
        }
    }

    let mut roots = (0..n).filter(|&i| heads[i] == 0);
    if let Some(first) = roots.next() {
        let rest: Vec<usize> = roots.collect();
        for r in rest {
            heads[r] = first + 1;
            changed = true;
        }
    }
    changed
}

/// Write sentences with their own role columns.
pub fn write_sentences<W: Write>(out: &mut W, sentences: &[Sentence]) -> Result<()> {
    for s in sentences {
        s.write(out, &s.roles)?;
    }
    Ok(())
}

/// Write sentences with APRED cells replaced by predicted roles.
pub fn write_conll<W: Write>(out: &mut W, sentences: &[Sentence], predictions: &PredictionSet) -> Result<()> {
    for (si, s) in sentences.iter().enumerate() {
        let mut rows = Vec::with_capacity(s.predicates.len());
        for &p in &s.predicates {
            let frame = predictions.frame(si, p).ok_or_else(|| {
                Error::contract(format!("no prediction for sentence {si}, predicate at position {p}"))
            })?;
            if frame.labels.len() != s.len() {
                return Err(Error::contract(format!(
                    "prediction for sentence {si}, predicate {p} covers {} of {} tokens",
                    frame.labels.len(),
                    s.len()
                )));
            }
            rows.push(
                frame
                    .labels
                    .iter()
                    .map(|&r| predictions.role_name(r).to_string())
                    .collect(),
            );
        }
        s.write(out, &rows)?;
    }
    Ok(())
}

pub fn to_conll_string(sentences: &[Sentence]) -> String {
    let mut buf = Vec::new();
    write_sentences(&mut buf, sentences).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8 input")
}
