//! Full SRL model: word representations, optional BiLSTM, optional GCN
//! stack and the role classifier.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;

use crate::bilstm;
use crate::classifier::{self, ClassifierDims};
use crate::config::TrainConfig;
use crate::conll::Sentence;
use crate::embedder::{self, EmbedDims, TokenIds};
use crate::error::{Error, Result};
use crate::gcn::{self, EdgeDropout, GcnSettings};
use crate::lexicon::{Lexicon, UNK_LEMMA_OUT_ID};
use crate::numerics::{checkpoint, ParamStore, Scalar, Tape, Tensor, Var};
use crate::predictions::{Frame, PredictionSet};
use crate::syngraph::{build_graph, LabelSpace, SyntacticGraph};

pub const CONFIG_FILE: &str = "config.conf";
pub const LEXICON_FILE: &str = "lexicon.tsv";

/// Sizes the forward pass needs, independent of the scalar type.
#[derive(Clone, Debug, PartialEq)]
pub struct Architecture {
    pub config: TrainConfig,
    pub labels: LabelSpace,
}

impl Architecture {
    pub fn new(config: &TrainConfig, lexicon: &Lexicon) -> Self {
        Architecture {
            config: config.clone(),
            labels: LabelSpace::new(lexicon.num_relations()),
        }
    }

    pub fn embed_dims(&self) -> EmbedDims {
        EmbedDims {
            d_w: self.config.d_w,
            d_pos: self.config.d_pos,
            d_l: self.config.d_l,
            not_predicate_vector: self.config.not_predicate_vector,
        }
    }

    pub fn gcn_settings(&self) -> GcnSettings {
        GcnSettings {
            width: self.config.hidden_width(),
            layers: self.config.effective_gcn_layers(),
            gates: self.config.gates,
            labels: self.labels,
        }
    }
}

/// Everything about a sentence the forward pass reads.
#[derive(Clone, Debug)]
pub struct SentenceInput {
    pub ids: TokenIds,
    pub graph: SyntacticGraph,
}

impl SentenceInput {
    pub fn new(sentence: &Sentence, lexicon: &Lexicon) -> Self {
        SentenceInput {
            ids: TokenIds::new(sentence, lexicon),
            graph: build_graph(sentence, lexicon),
        }
    }
}

/// Register every parameter of the model.
pub fn init_params<T: Scalar, R: Rng>(
    params: &mut ParamStore<T>,
    arch: &Architecture,
    lexicon: &Lexicon,
    pretrained: Option<Tensor<T>>,
    rng: &mut R,
) -> Result<()> {
    let cfg = &arch.config;
    embedder::init_tables(params, arch.embed_dims(), lexicon, pretrained, rng)?;
    let lstm_layers = cfg.effective_lstm_layers();
    bilstm::init_params(params, cfg.input_width(), cfg.d_h, lstm_layers, rng);
    let encoder_in = if lstm_layers > 0 {
        cfg.hidden_width()
    } else {
        cfg.input_width()
    };
    gcn::init_params(params, arch.gcn_settings(), encoder_in, rng);
    classifier::init_params(
        params,
        ClassifierDims {
            width: cfg.hidden_width(),
            d_l_out: cfg.d_l_out,
            d_r: cfg.d_r,
            num_lemmas: lexicon.predicate_lemmas.len(),
            num_roles: lexicon.num_roles(),
        },
        rng,
    );
    Ok(())
}

/// Encoder states `[n × m]` for one predicate.
pub fn encode<T: Scalar, R: Rng>(
    tape: &mut Tape<T>,
    params: &ParamStore<T>,
    arch: &Architecture,
    input: &SentenceInput,
    word_ids: &[usize],
    predicate: usize,
    dropout_rng: Option<&mut R>,
) -> Result<Var> {
    let cfg = &arch.config;
    let x = embedder::embed_sentence(tape, params, &input.ids, word_ids, predicate)?;
    let lstm_layers = cfg.effective_lstm_layers();
    let h = if lstm_layers > 0 {
        bilstm::bilstm_encode(tape, params, x, cfg.d_h, lstm_layers)?
    } else {
        x
    };
    let dropout = dropout_rng.map(|rng| EdgeDropout {
        beta: cfg.edge_dropout,
        keep_self_loops: cfg.keep_self_loops,
        rng,
    });
    let h = gcn::gcn_stack_forward(tape, params, arch.gcn_settings(), h, &input.graph, dropout)?;
    if tape.value(h).cols() != cfg.hidden_width() {
        return Err(Error::Shape {
            op: "encode",
            left: vec![cfg.hidden_width()],
            right: vec![tape.value(h).cols()],
        });
    }
    Ok(h)
}

/// Role logits `[n × roles]` for one predicate.
#[allow(clippy::too_many_arguments)]
pub fn forward<T: Scalar, R: Rng>(
    tape: &mut Tape<T>,
    params: &ParamStore<T>,
    arch: &Architecture,
    input: &SentenceInput,
    word_ids: &[usize],
    predicate: usize,
    lemma: usize,
    dropout_rng: Option<&mut R>,
) -> Result<Var> {
    let h = encode(tape, params, arch, input, word_ids, predicate, dropout_rng)?;
    classifier::role_logits(tape, params, h, predicate, lemma)
}

/// A trained (or freshly initialized) model with its lexicon.
#[derive(Clone, Debug)]
pub struct SrlModel {
    pub arch: Architecture,
    pub lexicon: Lexicon,
    pub params: ParamStore<f32>,
}

impl SrlModel {
    pub fn new<R: Rng>(config: &TrainConfig, lexicon: Lexicon, pretrained: Option<Tensor<f32>>, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let arch = Architecture::new(config, &lexicon);
        let mut params = ParamStore::new();
        init_params(&mut params, &arch, &lexicon, pretrained, rng)?;
        Ok(SrlModel { arch, lexicon, params })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.arch.config
    }

    /// Output-lemma id of the predicate at `position`.
    pub fn predicate_lemma(&self, sentence: &Sentence, position: usize) -> usize {
        self.lexicon
            .predicate_lemmas
            .id(&sentence.tokens[position].lemma)
            .unwrap_or(UNK_LEMMA_OUT_ID)
    }

    /// Per-token role decisions and distributions for one predicate.
    pub fn predict_frame(&self, sentence: &Sentence, input: &SentenceInput, predicate: usize) -> Result<Frame> {
        let mut tape = Tape::new();
        let lemma = self.predicate_lemma(sentence, predicate);
        let h = encode::<f32, rand_chacha::ChaCha8Rng>(
            &mut tape,
            &self.params,
            &self.arch,
            input,
            &input.ids.words,
            predicate,
            None,
        )?;
        let encoded = tape.value(h).clone();
        let (labels, distributions) = classifier::predict_arguments(&self.params, &encoded, predicate, lemma)?;
        Ok(Frame { distributions, labels })
    }

    /// Predict every predicate of every sentence. Sentences are processed
    /// in parallel when `threads > 1`; results do not depend on it.
    pub fn predict(&self, sentences: &[Sentence], threads: usize) -> Result<PredictionSet> {
        self.predict_with_graphs(sentences, threads, |_, g| g)
    }

    /// Like [`SrlModel::predict`] but lets the caller alter each graph
    /// first (used by the relation ablation).
    pub fn predict_with_graphs<F>(&self, sentences: &[Sentence], threads: usize, alter: F) -> Result<PredictionSet>
    where
        F: Fn(usize, SyntacticGraph) -> SyntacticGraph + Sync,
    {
        let work = |si: usize| -> Result<Vec<(usize, usize, Frame)>> {
            let s = &sentences[si];
            let mut input = SentenceInput::new(s, &self.lexicon);
            input.graph = alter(si, input.graph);
            s.predicates
                .iter()
                .map(|&p| Ok((si, p, self.predict_frame(s, &input, p)?)))
                .collect()
        };
        let frames: Vec<Vec<(usize, usize, Frame)>> = if threads > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::contract(format!("thread pool: {e}")))?;
            pool.install(|| (0..sentences.len()).into_par_iter().map(work).collect::<Result<_>>())?
        } else {
            (0..sentences.len()).map(work).collect::<Result<_>>()?
        };
        let mut set = PredictionSet::new(self.lexicon.roles.strings().to_vec())?;
        for (si, p, frame) in frames.into_iter().flatten() {
            set.insert(si, p, frame)?;
        }
        Ok(set)
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        checkpoint::save_params(&mut out, &self.params)?;
        out.flush()?;
        Ok(())
    }

    /// Write `config.conf` and `lexicon.tsv` into `dir`.
    pub fn save_sidecars(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join(CONFIG_FILE), self.config().to_text())?;
        let mut out = BufWriter::new(File::create(dir.join(LEXICON_FILE))?);
        self.lexicon.save(&mut out)?;
        out.flush()?;
        Ok(())
    }

    /// Load a checkpoint together with the `config.conf` and `lexicon.tsv`
    /// found next to it.
    pub fn load(path: &Path) -> Result<Self> {
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        let config = TrainConfig::load(&dir.join(CONFIG_FILE))?;
        let lexicon = Lexicon::load(BufReader::new(File::open(dir.join(LEXICON_FILE))?))?;
        Self::load_with(path, &config, lexicon)
    }

    pub fn load_with(path: &Path, config: &TrainConfig, lexicon: Lexicon) -> Result<Self> {
        let arch = Architecture::new(config, &lexicon);
        let mut params = ParamStore::new();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        init_params(&mut params, &arch, &lexicon, None, &mut rng)?;
        checkpoint::load_params(&mut BufReader::new(File::open(path)?), &mut params)?;
        Ok(SrlModel { arch, lexicon, params })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::EncoderMode;
    use crate::conll::parse_conll_str;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TEXT: &str = "\
1\tSequa\tSequa\tSequa\tNNP\tNNP\t_\t_\t2\t2\tSBJ\tSBJ\t_\t_\tA0
2\tmakes\tmake\tmake\tVBZ\tVBZ\t_\t_\t0\t0\tROOT\tROOT\tY\tmake.01\t_
3\tengines\tengine\tengine\tNNS\tNNS\t_\t_\t2\t2\tOBJ\tOBJ\t_\t_\tA1

";

    fn model(mode: EncoderMode, k: usize) -> (SrlModel, Vec<Sentence>) {
        let sentences = parse_conll_str(TEXT).unwrap();
        let mut cfg = TrainConfig::tiny();
        cfg.mode = mode;
        cfg.gcn_layers = k;
        let lex = Lexicon::build(&sentences, 1);
        (SrlModel::new(&cfg, lex, None, &mut ChaCha8Rng::seed_from_u64(3)).unwrap(), sentences)
    }

    #[test]
    fn every_mode_predicts_full_frames() {
        for (mode, k) in [(EncoderMode::LstmOnly, 0), (EncoderMode::LstmGcn, 1), (EncoderMode::GcnOnly, 2)] {
            let (m, s) = model(mode, k);
            let set = m.predict(&s, 1).unwrap();
            let frame = set.frame(0, 1).unwrap();
            assert_eq!(frame.labels.len(), 3);
            for d in &frame.distributions {
                assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn gcn_only_projects_word_representations() {
        let (m, _) = model(EncoderMode::GcnOnly, 1);
        let cfg = m.config();
        assert_eq!(m.params.value(gcn::PROJECTION).unwrap().shape(), &[cfg.hidden_width(), cfg.input_width()]);
        let (m, _) = model(EncoderMode::LstmGcn, 1);
        assert!(!m.params.contains(gcn::PROJECTION));
    }

    #[test]
    fn parallel_prediction_matches_sequential() {
        let (m, s) = model(EncoderMode::LstmGcn, 1);
        let many: Vec<Sentence> = (0..6).map(|_| s[0].clone()).collect();
        assert_eq!(m.predict(&many, 1).unwrap(), m.predict(&many, 3).unwrap());
    }

    #[test]
    fn checkpoint_round_trip_preserves_predictions() {
        let (m, s) = model(EncoderMode::LstmGcn, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        m.save_checkpoint(&path).unwrap();
        m.save_sidecars(dir.path()).unwrap();
        let back = SrlModel::load(&path).unwrap();
        assert_eq!(back.predict(&s, 1).unwrap(), m.predict(&s, 1).unwrap());
    }
}
