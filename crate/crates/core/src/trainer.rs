//! Instances, loss and the training loop.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use log::{error, info, warn};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::TrainConfig;
use crate::conll::Sentence;
use crate::error::{Error, Result};
use crate::evaluator::{score, Score};
use crate::lexicon::{Lexicon, UNK_ID, UNK_LEMMA_OUT_ID};
use crate::model::{forward, Architecture, SentenceInput, SrlModel};
use crate::model;
use crate::numerics::{grad_check, AdamConfig, AdamState, GradCheckReport, ParamStore, Scalar, Tape, Tensor, Var};

pub const METRICS_FILE: &str = "metrics.tsv";
pub const BEST_CHECKPOINT: &str = "best.ckpt";

pub fn epoch_checkpoint_name(epoch: usize) -> String {
    format!("epoch-{epoch:03}.ckpt")
}

/// One predicate of one sentence with its gold role per token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub sentence: usize,
    /// 0-based predicate position.
    pub predicate: usize,
    /// Output-lemma id of the predicate.
    pub lemma: usize,
    pub gold: Vec<usize>,
}

pub fn make_instances(sentences: &[Sentence], lexicon: &Lexicon) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for (si, s) in sentences.iter().enumerate() {
        for (k, &p) in s.predicates.iter().enumerate() {
            let gold = s.roles[k]
                .iter()
                .map(|r| {
                    lexicon
                        .role_id(r)
                        .ok_or_else(|| Error::contract(format!("role `{r}` in sentence {si} is not in the lexicon")))
                })
                .collect::<Result<Vec<_>>>()?;
            let lemma = lexicon
                .predicate_lemmas
                .id(&s.tokens[p].lemma)
                .unwrap_or(UNK_LEMMA_OUT_ID);
            out.push(Instance {
                sentence: si,
                predicate: p,
                lemma,
                gold,
            });
        }
    }
    Ok(out)
}

/// Replace each singleton training word by UNK with probability `rate`.
pub fn word_dropout<R: Rng>(words: &[usize], lexicon: &Lexicon, rate: f64, rng: &mut R) -> Vec<usize> {
    if rate == 0.0 {
        return words.to_vec();
    }
    words
        .iter()
        .map(|&w| {
            if lexicon.is_singleton_word(w) && rng.gen::<f64>() < rate {
                UNK_ID
            } else {
                w
            }
        })
        .collect()
}

/// Summed cross-entropy of one instance on `tape`. Edge dropout is active
/// iff `rng` is given.
pub fn instance_loss_on<T: Scalar, R: Rng>(
    tape: &mut Tape<T>,
    params: &ParamStore<T>,
    arch: &Architecture,
    input: &SentenceInput,
    instance: &Instance,
    word_ids: &[usize],
    rng: Option<&mut R>,
) -> Result<Var> {
    let logits = forward(tape, params, arch, input, word_ids, instance.predicate, instance.lemma, rng)?;
    tape.softmax_cross_entropy(logits, &instance.gold)
}

fn non_finite(params: &ParamStore<impl Scalar>, what: String) -> Error {
    let mut norms = params.norms();
    for (name, norm) in &norms {
        error!("parameter norm {name} = {norm}");
    }
    norms.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Less));
    let top: Vec<String> = norms.iter().take(5).map(|(n, v)| format!("{n}={v:.4e}")).collect();
    Error::NonFinite(format!("{what}; largest parameter norms: {}", top.join(", ")))
}

/// Loss value of one instance without updating anything.
pub fn instance_loss<T: Scalar, R: Rng>(
    params: &ParamStore<T>,
    arch: &Architecture,
    input: &SentenceInput,
    instance: &Instance,
    rng: Option<&mut R>,
) -> Result<f64> {
    let mut tape = Tape::new();
    let loss = instance_loss_on(&mut tape, params, arch, input, instance, &input.ids.words, rng)?;
    let value = tape.value(loss).data()[0].to_f64().unwrap_or(f64::NAN);
    if !value.is_finite() {
        return Err(non_finite(params, format!("loss {value} on sentence {}", instance.sentence)));
    }
    Ok(value)
}

/// Finite-difference check of the full model's summed loss over every
/// instance of `sentences`, in 64-bit arithmetic with dropout disabled.
/// Every parameter, including the frozen pretrained table, is redrawn
/// uniformly from ±0.5 so that no path is numerically idle.
pub fn full_model_grad_check(sentences: &[Sentence], config: &TrainConfig) -> Result<GradCheckReport> {
    config.validate()?;
    let lexicon = Lexicon::build(sentences, config.min_freq);
    let arch = Architecture::new(config, &lexicon);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = ParamStore::<f64>::new();
    model::init_params(&mut params, &arch, &lexicon, None, &mut rng)?;
    for (_, p) in params.iter_mut() {
        let data = (0..p.value.len()).map(|_| rng.gen_range(-0.5..0.5)).collect();
        p.value = std::sync::Arc::new(Tensor::new(p.value.shape().to_vec(), data)?);
    }
    let instances = make_instances(sentences, &lexicon)?;
    let inputs: Vec<SentenceInput> = sentences.iter().map(|s| SentenceInput::new(s, &lexicon)).collect();
    grad_check(
        |tape, p| {
            let losses = instances
                .iter()
                .map(|inst| {
                    let input = &inputs[inst.sentence];
                    instance_loss_on::<f64, ChaCha8Rng>(tape, p, &arch, input, inst, &input.ids.words, None)
                })
                .collect::<Result<Vec<_>>>()?;
            tape.add_all(&losses)
        },
        &params,
    )
}

/// Per-instance optimizer over a fixed training corpus.
pub struct Trainer {
    pub model: SrlModel,
    pub instances: Vec<Instance>,
    inputs: Vec<SentenceInput>,
    adam: AdamState<f32>,
    rng: ChaCha8Rng,
    pending: IndexMap<String, Tensor<f32>>,
    pending_count: usize,
}

impl Trainer {
    /// Build the lexicon from `sentences` and initialize a model from
    /// `config.seed`.
    pub fn new(sentences: &[Sentence], config: &TrainConfig, pretrained: Option<Tensor<f32>>) -> Result<Self> {
        config.validate()?;
        let lexicon = Lexicon::build(sentences, config.min_freq);
        let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
        let model = SrlModel::new(config, lexicon, pretrained, &mut init_rng)?;
        Self::with_model(model, sentences)
    }

    pub fn with_model(model: SrlModel, sentences: &[Sentence]) -> Result<Self> {
        let instances = make_instances(sentences, &model.lexicon)?;
        let inputs = sentences.iter().map(|s| SentenceInput::new(s, &model.lexicon)).collect();
        let cfg = model.config();
        let adam = AdamState::new(AdamConfig {
            learning_rate: cfg.learning_rate,
            ..AdamConfig::default()
        });
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9));
        Ok(Trainer {
            model,
            instances,
            inputs,
            adam,
            rng,
            pending: IndexMap::new(),
            pending_count: 0,
        })
    }

    /// Loss of instance `i` with every kind of dropout disabled.
    pub fn eval_loss(&self, i: usize) -> Result<f64> {
        let inst = &self.instances[i];
        instance_loss::<f32, ChaCha8Rng>(&self.model.params, &self.model.arch, &self.inputs[inst.sentence], inst, None)
    }

    /// Forward and backward on instance `i`; applies an update once
    /// `batch_size` gradients have been accumulated. `dropout` switches
    /// both word and edge dropout.
    pub fn step(&mut self, i: usize, dropout: bool) -> Result<f64> {
        let inst = &self.instances[i];
        let input = &self.inputs[inst.sentence];
        let cfg = self.model.config().clone();
        let mut tape = Tape::new();
        let loss = if dropout {
            let words = word_dropout(&input.ids.words, &self.model.lexicon, cfg.word_dropout, &mut self.rng);
            instance_loss_on(
                &mut tape,
                &self.model.params,
                &self.model.arch,
                input,
                inst,
                &words,
                Some(&mut self.rng),
            )?
        } else {
            instance_loss_on::<f32, ChaCha8Rng>(
                &mut tape,
                &self.model.params,
                &self.model.arch,
                input,
                inst,
                &input.ids.words,
                None,
            )?
        };
        let value = tape.value(loss).data()[0] as f64;
        if !value.is_finite() {
            let node = tape.first_non_finite().map_or(String::new(), |n| format!(" (first at tape node {n})"));
            return Err(non_finite(
                &self.model.params,
                format!("loss {value} on sentence {}, predicate {}{node}", inst.sentence, inst.predicate),
            ));
        }
        let grads = tape.backward(loss)?.into_params();
        for (name, g) in grads {
            match self.pending.get_mut(&name) {
                Some(acc) => acc.add_assign(&g),
                None => {
                    self.pending.insert(name, g);
                }
            }
        }
        self.pending_count += 1;
        if self.pending_count >= cfg.batch_size {
            self.flush()?;
        }
        Ok(value)
    }

    /// Apply any accumulated gradients.
    pub fn flush(&mut self) -> Result<()> {
        if self.pending_count == 0 {
            return Ok(());
        }
        let mut grads = std::mem::take(&mut self.pending);
        let scale = 1.0 / self.pending_count as f32;
        self.pending_count = 0;
        let names: Vec<String> = self.model.params.trainable_names().map(String::from).collect();
        for name in names {
            let g = grads
                .entry(name.clone())
                .or_insert_with(|| Tensor::zeros(self.model.params.value(&name).expect("listed").shape()));
            if scale != 1.0 {
                *g = g.scale(scale);
            }
        }
        let clip = self.model.config().clip_norm;
        if clip > 0.0 {
            let total: f64 = grads
                .values()
                .map(|g| g.data().iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>())
                .sum::<f64>()
                .sqrt();
            if total > clip {
                let s = (clip / total) as f32;
                grads.values_mut().for_each(|g| *g = g.scale(s));
            }
        }
        self.adam.step(&mut self.model.params, &grads)
    }

    /// One pass over the shuffled instances; returns the mean loss.
    pub fn epoch(&mut self) -> Result<f64> {
        let mut order: Vec<usize> = (0..self.instances.len()).collect();
        order.shuffle(&mut self.rng);
        let mut total = 0.0;
        for &i in &order {
            total += self.step(i, true)?;
        }
        self.flush()?;
        Ok(total / order.len().max(1) as f64)
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.adam.set_learning_rate(lr);
    }
}

#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    /// Directory for checkpoints, sidecars and the metrics log.
    pub out_dir: Option<PathBuf>,
    /// Stop as soon as dev F1 reaches this value.
    pub stop_at_f1: Option<f64>,
    pub pretrained: Option<Tensor<f32>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev: Option<Score>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Best model by dev F1 (lowest training loss without a dev set).
    pub best: SrlModel,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
    /// First epoch whose dev F1 reached `stop_at_f1`.
    pub reached: Option<usize>,
}

fn metrics_line(r: &EpochRecord) -> String {
    match &r.dev {
        Some(s) => format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\n",
            r.epoch, r.train_loss, s.precision, s.recall, s.f1
        ),
        None => format!("{}\t{:.6}\t-\t-\t-\n", r.epoch, r.train_loss),
    }
}

/// Train for `config.epochs` epochs, evaluating on `dev` after each one.
pub fn train(
    sentences: &[Sentence],
    dev: Option<&[Sentence]>,
    config: &TrainConfig,
    options: TrainOptions,
) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(sentences, config, options.pretrained)?;
    if dev.is_none() {
        warn!("no development set; selecting the model by training loss");
    }
    if trainer.instances.is_empty() {
        return Err(Error::contract("the training corpus has no predicates"));
    }
    let out_dir = options.out_dir.as_deref();
    let mut metrics = match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            trainer.model.save_sidecars(dir)?;
            let mut f = File::create(dir.join(METRICS_FILE))?;
            f.write_all(b"epoch\ttrain_loss\tdev_P\tdev_R\tdev_F1\n")?;
            Some(f)
        }
        None => None,
    };

    let mut best: Option<(f64, usize, SrlModel)> = None;
    let mut history = Vec::new();
    let mut reached = None;
    let mut lr = config.learning_rate;
    for epoch in 1..=config.epochs {
        let train_loss = trainer.epoch()?;
        let dev_score = match dev {
            Some(d) => Some(score(d, &trainer.model.predict(d, config.threads)?)?),
            None => None,
        };
        let record = EpochRecord {
            epoch,
            train_loss,
            dev: dev_score,
        };
        info!("{}", metrics_line(&record).trim_end());
        if let Some(f) = metrics.as_mut() {
            f.write_all(metrics_line(&record).as_bytes())?;
        }
        let key = dev_score.map_or(-train_loss, |s| s.f1);
        let improved = best.as_ref().is_none_or(|(b, _, _)| key > *b);
        if let Some(dir) = out_dir {
            let path = dir.join(epoch_checkpoint_name(epoch));
            trainer.model.save_checkpoint(&path)?;
            if improved {
                fs::copy(&path, dir.join(BEST_CHECKPOINT))?;
            }
        }
        if improved {
            best = Some((key, epoch, trainer.model.clone()));
        }
        history.push(record);
        if let (Some(target), Some(s)) = (options.stop_at_f1, dev_score) {
            if s.f1 >= target {
                reached = Some(epoch);
                break;
            }
        }
        if config.lr_decay != 1.0 {
            lr *= config.lr_decay;
            trainer.set_learning_rate(lr);
        }
    }
    let (_, best_epoch, best) = best.ok_or_else(|| Error::config("epochs must be at least 1"))?;
    Ok(TrainOutcome {
        best,
        best_epoch,
        history,
        reached,
    })
}

/// Convenience wrapper that checks a checkpoint directory exists.
pub fn best_checkpoint(dir: &Path) -> Result<PathBuf> {
    let path = dir.join(BEST_CHECKPOINT);
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::contract(format!("no {BEST_CHECKPOINT} in {}", dir.display())))
    }
}
