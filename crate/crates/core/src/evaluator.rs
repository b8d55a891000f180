//! Argument-labeling scores and analyses.
//!
//! Only argument triples `(predicate, token, role)` with a non-NULL role
//! are counted; predicate senses are excluded unless
//! [`score_with_senses`] is used.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use log::info;

use crate::conll::{Sentence, NULL_ROLE};
use crate::error::{Error, Result};
use crate::model::SrlModel;
use crate::predictions::{Frame, PredictionSet};

/// Distance buckets `0, 1, …, 5, 6+`.
pub const BUCKETS: usize = 7;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl Counts {
    pub fn merge(&mut self, other: Counts) {
        self.correct += other.correct;
        self.predicted += other.predicted;
        self.gold += other.gold;
    }

    pub fn score(self) -> Score {
        Score::from_counts(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Score {
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Score {
    pub fn from_counts(counts: Counts) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(counts.correct, counts.predicted);
        let recall = ratio(counts.correct, counts.gold);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Score {
            counts,
            precision,
            recall,
            f1,
        }
    }
}

/// Check that `pred` covers exactly the predicates of `gold`, with one
/// decision per token.
fn check_alignment(gold: &[Sentence], pred: &PredictionSet) -> Result<()> {
    let expected: BTreeSet<(usize, usize)> = gold
        .iter()
        .enumerate()
        .flat_map(|(si, s)| s.predicates.iter().map(move |&p| (si, p)))
        .collect();
    let got: BTreeSet<(usize, usize)> = pred.keys().copied().collect();
    let mut offenders: Vec<String> = expected
        .difference(&got)
        .map(|(s, p)| format!("missing ({s}, {p})"))
        .chain(got.difference(&expected).map(|(s, p)| format!("unexpected ({s}, {p})")))
        .collect();
    for &(si, p) in expected.intersection(&got) {
        let frame = pred.frame(si, p).expect("present");
        if frame.labels.len() != gold[si].len() {
            offenders.push(format!("length ({si}, {p}): {} vs {}", frame.labels.len(), gold[si].len()));
        }
    }
    if offenders.is_empty() {
        Ok(())
    } else {
        Err(Error::contract(format!("prediction set does not match the corpus: {}", offenders.join(", "))))
    }
}

/// Visit every token of every predicate as `(sentence, predicate position,
/// token, gold role, predicted role)`.
fn for_each_decision(gold: &[Sentence], pred: &PredictionSet, mut f: impl FnMut(usize, usize, usize, &str, &str)) {
    for (si, s) in gold.iter().enumerate() {
        for (k, &p) in s.predicates.iter().enumerate() {
            let frame = pred.frame(si, p).expect("aligned");
            for (i, g) in s.roles[k].iter().enumerate() {
                f(si, p, i, g, pred.role_name(frame.labels[i]));
            }
        }
    }
}

fn tally(counts: &mut Counts, g: &str, y: &str) {
    let (g_arg, y_arg) = (g != NULL_ROLE, y != NULL_ROLE);
    counts.gold += g_arg as usize;
    counts.predicted += y_arg as usize;
    counts.correct += (g_arg && g == y) as usize;
}

/// Labeled micro precision, recall and F1 over argument triples.
pub fn score(gold: &[Sentence], pred: &PredictionSet) -> Result<Score> {
    check_alignment(gold, pred)?;
    let mut counts = Counts::default();
    for_each_decision(gold, pred, |_, _, _, g, y| tally(&mut counts, g, y));
    Ok(counts.score())
}

/// Combined score that also counts one sense triple per predicate, using
/// externally supplied senses keyed by `(sentence, predicate position)`.
/// A predicate whose sense is missing from `senses` counts as wrong.
pub fn score_with_senses(
    gold: &[Sentence],
    pred: &PredictionSet,
    senses: &BTreeMap<(usize, usize), String>,
) -> Result<Score> {
    let mut counts = score(gold, pred)?.counts;
    for (si, s) in gold.iter().enumerate() {
        for &p in &s.predicates {
            counts.gold += 1;
            if let Some(sense) = senses.get(&(si, p)) {
                counts.predicted += 1;
                counts.correct += (sense == &s.tokens[p].sense) as usize;
            }
        }
    }
    Ok(counts.score())
}

pub fn bucket_of(distance: usize) -> usize {
    distance.min(BUCKETS - 1)
}

pub fn bucket_name(bucket: usize) -> String {
    if bucket + 1 == BUCKETS {
        format!("{bucket}+")
    } else {
        bucket.to_string()
    }
}

/// Per-bucket counts by `|argument − predicate|` token distance. Gold and
/// predicted arguments go to the bucket of their own position.
pub fn distance_buckets(gold: &[Sentence], pred: &PredictionSet) -> Result<[Score; BUCKETS]> {
    check_alignment(gold, pred)?;
    let mut counts = [Counts::default(); BUCKETS];
    for_each_decision(gold, pred, |_, p, i, g, y| tally(&mut counts[bucket_of(p.abs_diff(i))], g, y));
    Ok(counts.map(Counts::score))
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TeleportStats {
    pub arguments: usize,
    /// Arguments more than 5 tokens from their predicate.
    pub token_far: usize,
    /// Arguments more than 5 steps away when one dependency arc may be
    /// used as a single step.
    pub teleport_far: usize,
}

impl TeleportStats {
    pub const THRESHOLD: usize = 5;

    pub fn token_fraction(&self) -> f64 {
        self.token_far as f64 / self.arguments.max(1) as f64
    }

    pub fn teleport_fraction(&self) -> f64 {
        self.teleport_far as f64 / self.arguments.max(1) as f64
    }
}

/// Shortest predicate-to-argument path over adjacent-token steps plus at
/// most one dependency arc (in either direction), all of unit cost.
pub fn teleport_distance(heads: &[Option<usize>], predicate: usize, argument: usize) -> usize {
    heads
        .iter()
        .enumerate()
        .filter_map(|(d, h)| h.map(|h| (h, d)))
        .flat_map(|(h, d)| [(h, d), (d, h)])
        .map(|(x, y)| predicate.abs_diff(x) + 1 + y.abs_diff(argument))
        .fold(predicate.abs_diff(argument), usize::min)
}

/// Fractions of gold arguments beyond 5 steps under the token and the
/// teleport metric.
pub fn teleport_stats(sentences: &[Sentence]) -> TeleportStats {
    let mut stats = TeleportStats::default();
    for s in sentences {
        let heads = s.head_positions();
        for (k, &p) in s.predicates.iter().enumerate() {
            for (a, role) in s.roles[k].iter().enumerate() {
                if role == NULL_ROLE {
                    continue;
                }
                stats.arguments += 1;
                stats.token_far += (p.abs_diff(a) > TeleportStats::THRESHOLD) as usize;
                stats.teleport_far += (teleport_distance(&heads, p, a) > TeleportStats::THRESHOLD) as usize;
            }
        }
    }
    stats
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub relation: String,
    /// Arcs with this relation in the evaluated corpus.
    pub count: usize,
    pub score: Score,
    /// `F1(dropped) − F1(baseline)`.
    pub delta_f1: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ablation {
    pub baseline: Score,
    pub rows: Vec<AblationRow>,
}

/// Arc counts per relation string over tokens that have a head.
pub fn relation_counts(sentences: &[Sentence]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for s in sentences {
        for t in s.tokens.iter().filter(|t| t.head > 0) {
            *counts.entry(t.deprel.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// F1 change when every arc of `relation` is removed at test time. A
/// relation that is absent from the corpus or the model's lexicon changes
/// nothing.
pub fn relation_delta(model: &SrlModel, sentences: &[Sentence], relation: &str, threads: usize) -> Result<AblationRow> {
    ensure_syntax(model)?;
    let baseline = score(sentences, &model.predict(sentences, threads)?)?;
    relation_row(model, sentences, relation, baseline, threads)
}

fn ensure_syntax(model: &SrlModel) -> Result<()> {
    if model.config().effective_gcn_layers() == 0 {
        return Err(Error::contract(
            "relation ablation needs a model with at least one GCN layer; this encoder ignores syntax",
        ));
    }
    Ok(())
}

fn relation_row(
    model: &SrlModel,
    sentences: &[Sentence],
    relation: &str,
    baseline: Score,
    threads: usize,
) -> Result<AblationRow> {
    let count = relation_counts(sentences).get(relation).copied().unwrap_or(0);
    let score = match model.lexicon.deprels.id(relation) {
        Some(rel) if count > 0 => {
            let pred = model.predict_with_graphs(sentences, threads, |_, g| g.drop_relation(rel))?;
            self::score(sentences, &pred)?
        }
        _ => baseline,
    };
    Ok(AblationRow {
        relation: relation.to_string(),
        count,
        score,
        delta_f1: score.f1 - baseline.f1,
    })
}

/// Drop each relation occurring at least `min_count` times, one at a time,
/// and report the F1 change. Rows are sorted by relation name.
pub fn relation_ablation(model: &SrlModel, sentences: &[Sentence], min_count: usize, threads: usize) -> Result<Ablation> {
    ensure_syntax(model)?;
    let baseline = score(sentences, &model.predict(sentences, threads)?)?;
    let mut rows = Vec::new();
    for (relation, count) in relation_counts(sentences) {
        if count < min_count {
            continue;
        }
        if model.lexicon.deprels.id(&relation).is_none() {
            info!("skipping relation `{relation}`: unknown to the model");
            continue;
        }
        rows.push(relation_row(model, sentences, &relation, baseline, threads)?);
    }
    Ok(Ablation { baseline, rows })
}

/// Normalized geometric mean `∝ Π_k p_k(r)^{1/K}`. Its argmax is the argmax
/// of the plain product, K identical members reproduce the member, and any
/// zero annihilates the role.
pub fn combine_distributions(members: &[&[f64]]) -> Result<Vec<f64>> {
    let first = members
        .first()
        .ok_or_else(|| Error::contract("cannot combine an empty set of distributions"))?;
    let width = first.len();
    if members.iter().any(|m| m.len() != width) {
        return Err(Error::contract("distributions over different role inventories"));
    }
    let k = members.len() as f64;
    let logs: Vec<f64> = (0..width)
        .map(|r| members.iter().map(|m| m[r].ln()).sum::<f64>() / k)
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::contract("every role has zero probability under some member"));
    }
    let unnorm: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = unnorm.iter().sum();
    Ok(unnorm.into_iter().map(|v| v / z).collect())
}

/// Combine per-member prediction sets token by token. The decision is the
/// argmax of the combined distribution (lowest id on ties).
pub fn combine_predictions(sets: &[PredictionSet]) -> Result<PredictionSet> {
    let first = sets.first().ok_or_else(|| Error::contract("empty ensemble"))?;
    if sets.len() < 2 {
        return Err(Error::contract("an ensemble needs at least two members"));
    }
    if let Some(i) = sets.iter().position(|s| s.roles() != first.roles()) {
        return Err(Error::contract(format!("member {i} has a different role inventory")));
    }
    let keys: Vec<(usize, usize)> = first.keys().copied().collect();
    if let Some(i) = sets.iter().position(|s| !s.keys().copied().eq(keys.iter().copied())) {
        return Err(Error::contract(format!("member {i} covers different predicates")));
    }
    let mut out = PredictionSet::new(first.roles().to_vec())?;
    for (si, p) in keys {
        let frames: Vec<&Frame> = sets.iter().map(|s| s.frame(si, p).expect("same keys")).collect();
        let n = frames[0].labels.len();
        if frames.iter().any(|f| f.labels.len() != n) {
            return Err(Error::contract(format!("members disagree on the length of ({si}, {p})")));
        }
        let mut distributions = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let members: Vec<&[f64]> = frames.iter().map(|f| f.distributions[i].as_slice()).collect();
            let d = combine_distributions(&members)?;
            labels.push(crate::numerics::argmax(&d));
            distributions.push(d);
        }
        out.insert(si, p, Frame { distributions, labels })?;
    }
    Ok(out)
}

/// Product-of-experts ensemble of trained models.
pub fn ensemble(models: &[SrlModel], sentences: &[Sentence], threads: usize) -> Result<PredictionSet> {
    if models.len() < 2 {
        return Err(Error::contract("an ensemble needs at least two models"));
    }
    let roles = models[0].lexicon.roles.strings();
    if let Some(i) = models.iter().position(|m| m.lexicon.roles.strings() != roles) {
        return Err(Error::contract(format!("model {i} has a different role inventory")));
    }
    let sets = models
        .iter()
        .map(|m| m.predict(sentences, threads))
        .collect::<Result<Vec<_>>>()?;
    combine_predictions(&sets)
}

/// Rows of `metric<TAB>key<TAB>value`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<(String, String, f64)>,
}

impl Report {
    pub fn push(&mut self, metric: &str, key: impl Into<String>, value: f64) {
        self.rows.push((metric.to_string(), key.into(), value));
    }

    pub fn add_score(&mut self, metric: &str, s: &Score) {
        self.push(metric, "P", s.precision);
        self.push(metric, "R", s.recall);
        self.push(metric, "F1", s.f1);
        self.push(metric, "correct", s.counts.correct as f64);
        self.push(metric, "predicted", s.counts.predicted as f64);
        self.push(metric, "gold", s.counts.gold as f64);
    }

    pub fn add_buckets(&mut self, buckets: &[Score; BUCKETS]) {
        for (b, s) in buckets.iter().enumerate() {
            self.push("bucket_f1", bucket_name(b), s.f1);
            self.push("bucket_gold", bucket_name(b), s.counts.gold as f64);
        }
    }

    pub fn add_teleport(&mut self, t: &TeleportStats) {
        self.push("teleport", "arguments", t.arguments as f64);
        self.push("teleport", "token_fraction", t.token_fraction());
        self.push("teleport", "teleport_fraction", t.teleport_fraction());
    }

    pub fn add_ablation(&mut self, a: &Ablation) {
        self.push("ablation_baseline", "F1", a.baseline.f1);
        for row in &a.rows {
            self.push("ablation_delta_f1", row.relation.clone(), row.delta_f1);
            self.push("ablation_count", row.relation.clone(), row.count as f64);
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tkey\tvalue\n");
        for (m, k, v) in &self.rows {
            let _ = writeln!(out, "{m}\t{k}\t{}", format_value(*v));
        }
        out
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let header = ("metric", "key", "value");
        let values: Vec<String> = self.rows.iter().map(|r| format_value(r.2)).collect();
        let w0 = self.rows.iter().map(|r| r.0.len()).chain([header.0.len()]).max().unwrap_or(0);
        let w1 = self.rows.iter().map(|r| r.1.len()).chain([header.1.len()]).max().unwrap_or(0);
        let w2 = values.iter().map(String::len).chain([header.2.len()]).max().unwrap_or(0);
        let mut out = format!("{:<w0$}  {:<w1$}  {:>w2$}\n", header.0, header.1, header.2);
        for ((m, k, _), v) in self.rows.iter().zip(&values) {
            let _ = writeln!(out, "{m:<w0$}  {k:<w1$}  {v:>w2$}");
        }
        out
    }
}

fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:.6}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conll::{parse_conll_str, Token};
    use proptest::prelude::*;
    use std::collections::VecDeque;

    fn sentence(n: usize, heads: &[usize], predicates: &[usize], roles: Vec<Vec<&str>>) -> Sentence {
        let tokens = (0..n)
            .map(|i| Token {
                index: i + 1,
                form: format!("w{i}"),
                lemma: format!("w{i}"),
                pos: "NN".into(),
                head: heads[i],
                deprel: if heads[i] == 0 { "ROOT".into() } else { "DEP".into() },
                is_predicate: predicates.contains(&i),
                sense: if predicates.contains(&i) { format!("w{i}.01") } else { "_".into() },
            })
            .collect();
        let roles = roles
            .into_iter()
            .map(|r| r.into_iter().map(String::from).collect())
            .collect();
        Sentence::from_tokens(tokens, roles).unwrap()
    }

    fn with_labels(gold: &[Sentence], labels: &[&[&str]]) -> PredictionSet {
        let mut set = PredictionSet::new(vec!["_".into(), "A0".into(), "A1".into(), "A2".into()]).unwrap();
        let mut it = labels.iter();
        for (si, s) in gold.iter().enumerate() {
            for &p in &s.predicates {
                let names = it.next().unwrap();
                let ids: Vec<usize> = names.iter().map(|n| set.roles().iter().position(|r| r == n).unwrap()).collect();
                let dists = ids
                    .iter()
                    .map(|&l| {
                        let mut d = vec![0.0; 4];
                        d[l] = 1.0;
                        d
                    })
                    .collect();
                set.insert(si, p, Frame { distributions: dists, labels: ids }).unwrap();
            }
        }
        set
    }

    fn gold() -> Vec<Sentence> {
        vec![sentence(4, &[2, 0, 2, 3], &[1], vec![vec!["A0", "_", "A1", "_"]])]
    }

    #[test]
    fn hand_computed_cases() {
        let g = gold();
        let cases: [(&[&str], f64, f64, f64); 5] = [
            (&["A0", "_", "A1", "_"], 1.0, 1.0, 1.0),
            (&["_", "_", "_", "_"], 0.0, 0.0, 0.0),
            (&["_", "A2", "_", "A0"], 0.0, 0.0, 0.0),
            (&["A1", "_", "A0", "_"], 0.0, 0.0, 0.0),
            (&["A0", "_", "_", "A1"], 0.5, 0.5, 0.5),
        ];
        for (labels, p, r, f) in cases {
            let s = score(&g, &with_labels(&g, &[labels])).unwrap();
            assert_eq!((s.precision, s.recall, s.f1), (p, r, f), "{labels:?}");
        }
    }

    #[test]
    fn wrong_label_is_both_false_positive_and_negative() {
        let g = gold();
        let s = score(&g, &with_labels(&g, &[&["A0", "_", "A2", "_"]])).unwrap();
        assert_eq!(s.counts, Counts { correct: 1, predicted: 2, gold: 2 });
    }

    #[test]
    fn misaligned_sets_name_the_offenders() {
        let g = gold();
        let mut other = g.clone();
        other.push(g[0].clone());
        let err = score(&other, &with_labels(&g, &[&["A0", "_", "A1", "_"]])).unwrap_err();
        assert!(err.to_string().contains("missing (1, 1)"), "{err}");
    }

    #[test]
    fn senses_add_one_triple_per_predicate() {
        let g = gold();
        let pred = with_labels(&g, &[&["A0", "_", "A1", "_"]]);
        let mut senses = BTreeMap::new();
        senses.insert((0, 1), "w1.02".to_string());
        let s = score_with_senses(&g, &pred, &senses).unwrap();
        assert_eq!(s.counts, Counts { correct: 2, predicted: 3, gold: 3 });
        senses.insert((0, 1), "w1.01".to_string());
        assert_eq!(score_with_senses(&g, &pred, &senses).unwrap().f1, 1.0);
    }

    #[test]
    fn self_argument_lands_in_bucket_zero() {
        let g = vec![sentence(3, &[0, 1, 1], &[0], vec![vec!["A1", "_", "A0"]])];
        let b = distance_buckets(&g, &with_labels(&g, &[&["A1", "_", "A0"]])).unwrap();
        assert_eq!(b[0].counts.gold, 1);
        assert_eq!(b[2].counts.gold, 1);
        assert_eq!(b[0].f1, 1.0);
    }

    #[test]
    fn adjacent_arguments_only_fill_bucket_one() {
        let g = vec![sentence(3, &[2, 0, 2], &[1], vec![vec!["A0", "_", "A1"]])];
        let b = distance_buckets(&g, &with_labels(&g, &[&["A0", "_", "A1"]])).unwrap();
        for (i, s) in b.iter().enumerate() {
            assert_eq!(s.counts.gold, if i == 1 { 2 } else { 0 });
        }
    }

    #[test]
    fn report_formats() {
        let mut r = Report::default();
        r.push("score", "F1", 0.5);
        r.push("bucket_gold", "6+", 3.0);
        assert_eq!(r.to_tsv(), "metric\tkey\tvalue\nscore\tF1\t0.500000\nbucket_gold\t6+\t3\n");
        let table = r.to_table();
        let widths: BTreeSet<usize> = table.lines().map(str::len).collect();
        assert_eq!(widths.len(), 1, "{table}");
    }

    #[test]
    fn single_arc_shortcut() {
        // predicate 0, argument 8 attached directly to it
        let mut heads = vec![None; 9];
        for (i, h) in heads.iter_mut().enumerate().skip(1) {
            *h = Some(if i == 8 { 0 } else { i - 1 });
        }
        assert_eq!(teleport_distance(&heads, 0, 8), 1);
        assert_eq!(teleport_distance(&heads, 0, 1), 1);
    }

    #[test]
    fn teleport_on_parsed_text() {
        let text = "\
1\ta\ta\ta\tNN\tNN\t_\t_\t2\t2\tX\tX\tY\ta.01\t_
2\tb\tb\tb\tNN\tNN\t_\t_\t0\t0\tROOT\tROOT\t_\t_\tA0

";
        let s = parse_conll_str(text).unwrap();
        let t = teleport_stats(&s);
        assert_eq!((t.arguments, t.token_far, t.teleport_far), (1, 0, 0));
    }

    /// Breadth-first search over (token, arcs used) states.
    fn bfs_teleport(heads: &[Option<usize>], from: usize, to: usize) -> usize {
        let n = heads.len();
        let mut arcs: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (d, h) in heads.iter().enumerate() {
            if let Some(h) = *h {
                arcs[h].push(d);
                arcs[d].push(h);
            }
        }
        let mut dist = vec![[usize::MAX; 2]; n];
        dist[from][0] = 0;
        let mut queue = VecDeque::from([(from, 0usize)]);
        while let Some((u, used)) = queue.pop_front() {
            let d = dist[u][used];
            let mut next: Vec<(usize, usize)> = Vec::new();
            if u > 0 {
                next.push((u - 1, used));
            }
            if u + 1 < n {
                next.push((u + 1, used));
            }
            if used == 0 {
                next.extend(arcs[u].iter().map(|&v| (v, 1)));
            }
            for (v, l) in next {
                if dist[v][l] == usize::MAX {
                    dist[v][l] = d + 1;
                    queue.push_back((v, l));
                }
            }
        }
        dist[to][0].min(dist[to][1])
    }

    fn tree() -> impl Strategy<Value = Vec<Option<usize>>> {
        (1usize..14).prop_flat_map(|n| {
            proptest::collection::vec(any::<prop::sample::Index>(), n).prop_map(move |picks| {
                // random recursive tree over a random order rooted at token 0's pick
                let root = picks[0].index(n);
                let mut order: Vec<usize> = (0..n).filter(|&i| i != root).collect();
                order.insert(0, root);
                let mut heads = vec![None; n];
                for k in 1..n {
                    heads[order[k]] = Some(order[picks[k].index(k)]);
                }
                heads
            })
        })
    }

    proptest! {
        #[test]
        fn closed_form_matches_search(heads in tree(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
            let n = heads.len();
            let (p, x) = (a.index(n), b.index(n));
            prop_assert_eq!(teleport_distance(&heads, p, x), bfs_teleport(&heads, p, x));
        }

        #[test]
        fn geometric_combination_is_normalized_and_argmax_stable(
            raw in proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, 4), 2..5),
            scales in proptest::collection::vec(0.1f64..10.0, 5),
        ) {
            let norm: Vec<Vec<f64>> = raw.iter().map(|d| { let z: f64 = d.iter().sum(); d.iter().map(|v| v / z).collect() }).collect();
            let refs: Vec<&[f64]> = norm.iter().map(Vec::as_slice).collect();
            let c = combine_distributions(&refs).unwrap();
            prop_assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let scaled: Vec<Vec<f64>> = raw.iter().zip(&scales).map(|(d, s)| d.iter().map(|v| v * s).collect()).collect();
            let srefs: Vec<&[f64]> = scaled.iter().map(Vec::as_slice).collect();
            let c2 = combine_distributions(&srefs).unwrap();
            for (u, v) in c.iter().zip(&c2) {
                prop_assert!((u - v).abs() < 1e-9);
            }
            let product: Vec<f64> = (0..4).map(|r| norm.iter().map(|d| d[r]).product()).collect();
            prop_assert_eq!(crate::numerics::argmax(&c), crate::numerics::argmax(&product));
        }
    }

    #[test]
    fn disjoint_confident_picks() {
        let a = [0.7, 0.2, 0.1];
        let b = [0.1, 0.3, 0.6];
        // products 0.07, 0.06, 0.06
        let c = combine_distributions(&[&a, &b]).unwrap();
        assert_eq!(crate::numerics::argmax(&c), 0);
        let g: Vec<f64> = [0.07f64, 0.06, 0.06].iter().map(|v| v.sqrt()).collect();
        let z: f64 = g.iter().sum();
        for (x, y) in c.iter().zip(&g) {
            assert!((x - y / z).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_probability_annihilates() {
        let c = combine_distributions(&[&[0.5, 0.5, 0.0], &[0.2, 0.2, 0.6]]).unwrap();
        assert_eq!(c[2], 0.0);
    }

    #[test]
    fn identical_members_reproduce_the_member() {
        let d = [0.2, 0.5, 0.3];
        let c = combine_distributions(&[&d, &d, &d]).unwrap();
        for (x, y) in c.iter().zip(&d) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn mismatched_inventories_are_rejected() {
        let g = gold();
        let a = with_labels(&g, &[&["A0", "_", "A1", "_"]]);
        let b = PredictionSet::new(vec!["_".into(), "A0".into()]).unwrap();
        assert!(matches!(combine_predictions(&[a, b]), Err(Error::Contract(_))));
    }
}
