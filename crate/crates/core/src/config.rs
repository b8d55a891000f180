//! Model and training configuration.
//!
//! Stored as flat `key = value` text; `#` starts a comment. Keys match the
//! field names of [`TrainConfig`], with `J`, `K` and `beta` accepted for
//! the layer counts and edge dropout.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EncoderMode {
    LstmOnly,
    LstmGcn,
    GcnOnly,
}

impl EncoderMode {
    pub fn uses_lstm(self) -> bool {
        self != EncoderMode::GcnOnly
    }

    pub fn uses_gcn(self) -> bool {
        self != EncoderMode::LstmOnly
    }
}

impl FromStr for EncoderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lstm" | "lstm_only" => Ok(EncoderMode::LstmOnly),
            "lstm+gcn" | "lstm_gcn" => Ok(EncoderMode::LstmGcn),
            "gcn" | "gcn_only" => Ok(EncoderMode::GcnOnly),
            other => Err(Error::config(format!("unknown encoder mode `{other}` (lstm, lstm+gcn, gcn)"))),
        }
    }
}

impl fmt::Display for EncoderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncoderMode::LstmOnly => "lstm",
            EncoderMode::LstmGcn => "lstm+gcn",
            EncoderMode::GcnOnly => "gcn",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// Word embedding width, shared by the trainable and pretrained tables.
    pub d_w: usize,
    pub d_pos: usize,
    /// Input lemma embedding width (predicate row only).
    pub d_l: usize,
    pub d_h: usize,
    /// Role embedding width in the classifier.
    pub d_r: usize,
    /// Output lemma embedding width in the classifier.
    pub d_l_out: usize,
    /// BiLSTM depth (`J`).
    pub lstm_layers: usize,
    /// GCN depth (`K`).
    pub gcn_layers: usize,
    /// Edge dropout probability (`β`).
    pub edge_dropout: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub batch_size: usize,
    pub mode: EncoderMode,
    pub gates: bool,
    pub min_freq: u64,
    /// Probability of replacing a singleton training word with UNK.
    pub word_dropout: f64,
    /// Keep self loops out of edge dropout.
    pub keep_self_loops: bool,
    pub use_gold_syntax: bool,
    /// Learn a shared lemma vector for non-predicate rows instead of zeros.
    pub not_predicate_vector: bool,
    /// Multiplicative learning-rate decay per epoch; 1 disables it.
    pub lr_decay: f64,
    /// Global gradient norm clip; 0 disables it.
    pub clip_norm: f64,
    pub threads: usize,
}

impl Default for TrainConfig {
    /// The published English configuration.
    fn default() -> Self {
        TrainConfig {
            d_w: 100,
            d_pos: 16,
            d_l: 100,
            d_h: 512,
            d_r: 128,
            d_l_out: 128,
            lstm_layers: 3,
            gcn_layers: 1,
            edge_dropout: 0.3,
            learning_rate: 0.01,
            epochs: 20,
            seed: 1,
            batch_size: 1,
            mode: EncoderMode::LstmGcn,
            gates: true,
            min_freq: 1,
            word_dropout: 0.1,
            keep_self_loops: false,
            use_gold_syntax: false,
            not_predicate_vector: false,
            lr_decay: 1.0,
            clip_norm: 0.0,
            threads: 1,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::config(format!("bad boolean `{value}` for `{key}`"))),
    }
}

impl TrainConfig {
    /// A small configuration for desk-scale runs and tests.
    pub fn tiny() -> Self {
        TrainConfig {
            d_w: 8,
            d_pos: 4,
            d_l: 8,
            d_h: 16,
            d_r: 8,
            d_l_out: 8,
            lstm_layers: 1,
            gcn_layers: 1,
            epochs: 30,
            ..Default::default()
        }
    }

    /// The smallest full model: one BiLSTM layer with `d_h = 4` and one
    /// GCN layer. Used for finite-difference gradient checks.
    pub fn gradcheck() -> Self {
        TrainConfig {
            d_w: 3,
            d_pos: 2,
            d_l: 3,
            d_h: 4,
            d_r: 3,
            d_l_out: 3,
            lstm_layers: 1,
            gcn_layers: 1,
            epochs: 1,
            ..Default::default()
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "d_w" => self.d_w = parse(key, v)?,
            "d_pos" => self.d_pos = parse(key, v)?,
            "d_l" => self.d_l = parse(key, v)?,
            "d_h" => self.d_h = parse(key, v)?,
            "d_r" => self.d_r = parse(key, v)?,
            "d_l_out" | "d'_l" => self.d_l_out = parse(key, v)?,
            "J" | "lstm_layers" => self.lstm_layers = parse(key, v)?,
            "K" | "gcn_layers" => self.gcn_layers = parse(key, v)?,
            "beta" | "edge_dropout" => self.edge_dropout = parse(key, v)?,
            "learning_rate" | "lr" => self.learning_rate = parse(key, v)?,
            "epochs" => self.epochs = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "mode" => self.mode = v.parse()?,
            "gates" => self.gates = parse_bool(key, v)?,
            "min_freq" => self.min_freq = parse(key, v)?,
            "word_dropout" => self.word_dropout = parse(key, v)?,
            "keep_self_loops" => self.keep_self_loops = parse_bool(key, v)?,
            "use_gold_syntax" => self.use_gold_syntax = parse_bool(key, v)?,
            "not_predicate_vector" => self.not_predicate_vector = parse_bool(key, v)?,
            "lr_decay" => self.lr_decay = parse(key, v)?,
            "clip_norm" => self.clip_norm = parse(key, v)?,
            "threads" => self.threads = parse(key, v)?,
            other => return Err(Error::config(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Apply a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override `{kv}` is not key=value")))?;
        self.set(k, v)
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected key = value, found `{line}`")))?;
            cfg.set(k, v).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_text(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Every field as `(key, value)`, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("d_w", self.d_w.to_string()),
            ("d_pos", self.d_pos.to_string()),
            ("d_l", self.d_l.to_string()),
            ("d_h", self.d_h.to_string()),
            ("d_r", self.d_r.to_string()),
            ("d_l_out", self.d_l_out.to_string()),
            ("J", self.lstm_layers.to_string()),
            ("K", self.gcn_layers.to_string()),
            ("beta", self.edge_dropout.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("epochs", self.epochs.to_string()),
            ("seed", self.seed.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("mode", self.mode.to_string()),
            ("gates", self.gates.to_string()),
            ("min_freq", self.min_freq.to_string()),
            ("word_dropout", self.word_dropout.to_string()),
            ("keep_self_loops", self.keep_self_loops.to_string()),
            ("use_gold_syntax", self.use_gold_syntax.to_string()),
            ("not_predicate_vector", self.not_predicate_vector.to_string()),
            ("lr_decay", self.lr_decay.to_string()),
            ("clip_norm", self.clip_norm.to_string()),
            ("threads", self.threads.to_string()),
        ]
    }

    pub fn effective_lstm_layers(&self) -> usize {
        if self.mode.uses_lstm() {
            self.lstm_layers
        } else {
            0
        }
    }

    pub fn effective_gcn_layers(&self) -> usize {
        if self.mode.uses_gcn() {
            self.gcn_layers
        } else {
            0
        }
    }

    /// Width of the word representation fed to the encoder.
    pub fn input_width(&self) -> usize {
        2 * self.d_w + self.d_pos + self.d_l
    }

    /// Width of encoder states (`m`): the BiLSTM output width.
    pub fn hidden_width(&self) -> usize {
        2 * self.d_h
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("d_w", self.d_w),
            ("d_pos", self.d_pos),
            ("d_l", self.d_l),
            ("d_h", self.d_h),
            ("d_r", self.d_r),
            ("d_l_out", self.d_l_out),
            ("batch_size", self.batch_size),
            ("threads", self.threads),
        ];
        if let Some((k, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::config(format!("`{k}` must be positive")));
        }
        if !(0.0..=1.0).contains(&self.edge_dropout) {
            return Err(Error::config("beta must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.word_dropout) {
            return Err(Error::config("word_dropout must lie in [0, 1]"));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::config("learning_rate must be positive"));
        }
        if self.lr_decay.is_nan() || self.lr_decay <= 0.0 || self.clip_norm < 0.0 {
            return Err(Error::config("lr_decay must be positive and clip_norm non-negative"));
        }
        match self.mode {
            EncoderMode::GcnOnly if self.gcn_layers == 0 => {
                Err(Error::config("gcn mode needs K >= 1"))
            }
            EncoderMode::LstmOnly | EncoderMode::LstmGcn if self.lstm_layers == 0 => {
                Err(Error::config("J = 0 is only allowed in gcn mode"))
            }
            EncoderMode::LstmGcn if self.gcn_layers == 0 => {
                Err(Error::config("lstm+gcn mode needs K >= 1 (use mode = lstm for K = 0)"))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_published_configuration() {
        let c = TrainConfig::default();
        assert_eq!((c.d_w, c.d_pos, c.d_l, c.d_h), (100, 16, 100, 512));
        assert_eq!((c.d_r, c.d_l_out, c.lstm_layers, c.gcn_layers), (128, 128, 3, 1));
        assert_eq!((c.edge_dropout, c.learning_rate), (0.3, 0.01));
        assert_eq!(c.input_width(), 316);
        assert_eq!(c.hidden_width(), 1024);
        c.validate().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let mut c = TrainConfig::tiny();
        c.mode = EncoderMode::GcnOnly;
        c.gates = false;
        let parsed = TrainConfig::parse_text(&c.to_text()).unwrap();
        assert_eq!(parsed, c);
    }

    #[test]
    fn comments_and_aliases() {
        let c = TrainConfig::parse_text("# header\nJ = 2 # depth\nK=3\nbeta = 0.5\nmode = gcn\n").unwrap();
        assert_eq!((c.lstm_layers, c.gcn_layers, c.edge_dropout), (2, 3, 0.5));
        assert_eq!(c.mode, EncoderMode::GcnOnly);
    }

    #[test]
    fn invalid_values() {
        assert!(matches!(TrainConfig::parse_text("d_h = x\n"), Err(Error::Parse { line: 1, .. })));
        assert!(TrainConfig::parse_text("bogus = 1\n").is_err());
        let mut c = TrainConfig::tiny();
        c.edge_dropout = 1.2;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::tiny();
        c.lstm_layers = 0;
        assert!(c.validate().is_err());
        c.mode = EncoderMode::GcnOnly;
        assert!(c.validate().is_ok());
    }
}
