//! Labeled directed graph over the words of a sentence.
//!
//! Every dependency arc `h → d` with relation `r` contributes an `Along`
//! edge `(h, d)` labeled `r` and an `Opposite` edge `(d, h)` labeled `r′`;
//! every word gets a `SelfLoop` edge labeled `self`. Arcs from the root
//! contribute nothing because the root is not a word.
//!
//! With `R` known relations the extended label ids are
//! `0..R` (along), `R..2R` (opposite, primed) and `2R` (self). Relations
//! unseen in training get two further ids, `2R+1` (along) and `2R+2`
//! (opposite), which have their own biases but are not part of the
//! `2R+1`-sized known label space.

use log::debug;
use rand::Rng;

use crate::conll::Sentence;
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Along = 0,
    Opposite = 1,
    SelfLoop = 2,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Along, Direction::Opposite, Direction::SelfLoop];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Extended label space for `R` relations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LabelSpace {
    pub num_relations: usize,
}

impl LabelSpace {
    pub fn new(num_relations: usize) -> Self {
        LabelSpace { num_relations }
    }

    /// `2R + 1`: along, primed and self labels of known relations.
    pub fn size(&self) -> usize {
        2 * self.num_relations + 1
    }

    /// Known labels plus the two unknown-relation labels.
    pub fn total(&self) -> usize {
        self.size() + 2
    }

    pub fn along(&self, rel: usize) -> usize {
        rel
    }

    pub fn opposite(&self, rel: usize) -> usize {
        self.num_relations + rel
    }

    pub fn self_loop(&self) -> usize {
        2 * self.num_relations
    }

    pub fn unknown(&self, dir: Direction) -> usize {
        match dir {
            Direction::Along => self.size(),
            Direction::Opposite => self.size() + 1,
            Direction::SelfLoop => self.self_loop(),
        }
    }

    /// The underlying relation id of a label, if it names a known relation.
    pub fn relation_of(&self, label: usize) -> Option<usize> {
        let r = self.num_relations;
        match label {
            l if l < r => Some(l),
            l if l < 2 * r => Some(l - r),
            _ => None,
        }
    }

    /// Human-readable label (`subj`, `subj'`, `self`).
    pub fn name(&self, label: usize, lexicon: &Lexicon) -> String {
        match label {
            l if l == self.self_loop() => "self".to_string(),
            l if l == self.size() => "<unk>".to_string(),
            l if l == self.size() + 1 => "<unk>'".to_string(),
            l => {
                let rel = self.relation_of(l).expect("relation label");
                let base = lexicon.deprels.name(rel);
                if l >= self.num_relations {
                    format!("{base}'")
                } else {
                    base.to_string()
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub direction: Direction,
    pub label: usize,
    /// Relation id of the underlying arc; `None` for self loops and for
    /// relations outside the lexicon.
    pub relation: Option<usize>,
}

/// Edges grouped by destination, so `in_edges(v)` is `N(v)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntacticGraph {
    n: usize,
    edges: Vec<Edge>,
    labels: LabelSpace,
}

impl SyntacticGraph {
    /// Build from explicit 0-based heads (`None` = root) and relation ids.
    pub fn from_heads(heads: &[Option<usize>], relations: &[Option<usize>], labels: LabelSpace) -> Result<Self> {
        let n = heads.len();
        if relations.len() != n {
            return Err(Error::Shape {
                op: "build_graph",
                left: vec![n],
                right: vec![relations.len()],
            });
        }
        let mut edges = Vec::with_capacity(3 * n);
        for (d, (&h, &rel)) in heads.iter().zip(relations).enumerate() {
            if let Some(h) = h {
                if h >= n || h == d {
                    return Err(Error::contract(format!("token {d} has invalid head {h}")));
                }
                let (along, opposite) = match rel {
                    Some(r) => (labels.along(r), labels.opposite(r)),
                    None => (labels.unknown(Direction::Along), labels.unknown(Direction::Opposite)),
                };
                edges.push(Edge {
                    src: h,
                    dst: d,
                    direction: Direction::Along,
                    label: along,
                    relation: rel,
                });
                edges.push(Edge {
                    src: d,
                    dst: h,
                    direction: Direction::Opposite,
                    label: opposite,
                    relation: rel,
                });
            }
            edges.push(Edge {
                src: d,
                dst: d,
                direction: Direction::SelfLoop,
                label: labels.self_loop(),
                relation: None,
            });
        }
        edges.sort_by_key(|e| (e.dst, e.direction, e.src));
        Ok(SyntacticGraph { n, edges, labels })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn labels(&self) -> LabelSpace {
        self.labels
    }

    pub fn in_edges(&self, v: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.dst == v)
    }

    /// Independently remove each edge with probability `beta`. Self loops
    /// are exempt when `keep_self_loops` is set. `beta == 0` consumes no
    /// randomness and returns the graph unchanged.
    pub fn edge_dropout<R: Rng>(&self, beta: f64, keep_self_loops: bool, rng: &mut R) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::config(format!("edge dropout probability {beta} is outside [0, 1]")));
        }
        if beta == 0.0 {
            return Ok(self.clone());
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| {
                if keep_self_loops && e.direction == Direction::SelfLoop {
                    return true;
                }
                rng.gen::<f64>() >= beta
            })
            .copied()
            .collect();
        Ok(SyntacticGraph {
            n: self.n,
            edges,
            labels: self.labels,
        })
    }

    /// Remove every along and opposite edge of one relation; self loops
    /// stay.
    pub fn drop_relation(&self, relation: usize) -> Self {
        SyntacticGraph {
            n: self.n,
            edges: self
                .edges
                .iter()
                .filter(|e| e.direction == Direction::SelfLoop || e.relation != Some(relation))
                .copied()
                .collect(),
            labels: self.labels,
        }
    }

    /// Undirected hop distances from `start` over non-self edges.
    pub fn hop_distances(&self, start: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[start] = Some(0);
        let mut frontier = vec![start];
        let mut d = 0;
        while !frontier.is_empty() {
            d += 1;
            let mut next = Vec::new();
            for &u in &frontier {
                for e in &self.edges {
                    let other = if e.src == u {
                        e.dst
                    } else if e.dst == u {
                        e.src
                    } else {
                        continue;
                    };
                    if dist[other].is_none() {
                        dist[other] = Some(d);
                        next.push(other);
                    }
                }
            }
            frontier = next;
        }
        dist
    }
}

/// Build the graph of a sentence, mapping relations through the lexicon.
/// Relations the lexicon has never seen get the unknown-relation labels.
pub fn build_graph(sentence: &Sentence, lexicon: &Lexicon) -> SyntacticGraph {
    let labels = LabelSpace::new(lexicon.num_relations());
    let heads = sentence.head_positions();
    let relations: Vec<Option<usize>> = sentence
        .tokens
        .iter()
        .zip(&heads)
        .map(|(t, h)| {
            let rel = lexicon.deprels.id(&t.deprel);
            if rel.is_none() && h.is_some() {
                debug!("unknown relation `{}`; using the unknown-relation label", t.deprel);
            }
            rel
        })
        .collect();
    SyntacticGraph::from_heads(&heads, &relations, labels).expect("sentence heads form a repaired tree")
}
