//! Logistic-regression critic over four symmetric overlap features.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Score, Scorer, ScorerError};
use crate::pairgen::PairExample;

pub const FEATURE_NAMES: [&str; 4] = ["token_jaccard", "char3_jaccard", "length_ratio", "shared_rare"];

const MODEL_FORMAT: &str = "lfrerank-baseline";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Weight each class by `n / (2 * n_class)`. Pair corpora are heavily
    /// skewed towards negatives.
    pub balance_classes: bool,
    /// A token is rare when it occurs in at most this fraction of the
    /// corpus' distinct texts.
    pub rare_df_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 1000, learning_rate: 1.0, seed: 13, balance_classes: true, rare_df_fraction: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub format: String,
    pub version: u32,
    pub features: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub seed: u64,
    pub train: TrainConfig,
    pub common_tokens: BTreeSet<String>,
}

/// Lowercased alphanumeric runs; everything else separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase().split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_string).collect()
}

fn char_trigrams(text: &str) -> HashSet<String> {
    let chars: Vec<char> = text.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ").chars().collect();
    if chars.len() < 3 {
        return std::iter::once(chars.iter().collect()).filter(|s: &String| !s.is_empty()).collect();
    }
    chars.windows(3).map(|w| w.iter().collect()).collect()
}

fn jaccard<T: Eq + std::hash::Hash>(a: &HashSet<T>, b: &HashSet<T>) -> Option<f64> {
    let union = a.union(b).count();
    if union == 0 {
        None
    } else {
        Some(a.intersection(b).count() as f64 / union as f64)
    }
}

/// Feature vector for a pair; symmetric in its arguments.
pub fn extract_features(a: &str, b: &str, common: &BTreeSet<String>) -> [f64; 4] {
    let ta = tokenize(a);
    let tb = tokenize(b);
    let sa: HashSet<&str> = ta.iter().map(String::as_str).collect();
    let sb: HashSet<&str> = tb.iter().map(String::as_str).collect();
    let token_jaccard = jaccard(&sa, &sb).unwrap_or(1.0);
    let char3 = jaccard(&char_trigrams(a), &char_trigrams(b)).unwrap_or(1.0);
    let (la, lb) = (ta.len() as f64, tb.len() as f64);
    let length_ratio = if la.max(lb) == 0.0 { 1.0 } else { la.min(lb) / la.max(lb) };
    let rare = |s: &HashSet<&str>| -> HashSet<String> {
        s.iter().filter(|t| !common.contains(**t)).map(|t| t.to_string()).collect()
    };
    // Without rare tokens on either side there is no rare evidence; fall back
    // to plain overlap.
    let shared_rare = jaccard(&rare(&sa), &rare(&sb)).unwrap_or(token_jaccard);
    [token_jaccard, char3, length_ratio, shared_rare]
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl BaselineModel {
    pub fn probability(&self, a: &str, b: &str) -> f64 {
        let x = extract_features(a, b, &self.common_tokens);
        sigmoid(self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ScorerError> {
        let model: BaselineModel = serde_json::from_str(text).map_err(|e| ScorerError::Model(e.to_string()))?;
        if model.format != MODEL_FORMAT {
            return Err(ScorerError::Model(format!("not a baseline model file (format {:?})", model.format)));
        }
        if model.version != MODEL_VERSION {
            return Err(ScorerError::Model(format!("unsupported model version {}", model.version)));
        }
        if model.features != FEATURE_NAMES || model.weights.len() != FEATURE_NAMES.len() {
            return Err(ScorerError::Model("feature list does not match this build".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScorerError> {
        std::fs::write(path, self.to_json()).map_err(|e| ScorerError::Model(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, ScorerError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScorerError::Model(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

impl Scorer for BaselineModel {
    fn score_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<Score>, ScorerError> {
        pairs.iter().map(|(a, b)| Score::new(self.probability(a, b))).collect()
    }
}

fn common_tokens(corpus: &[PairExample], rare_df_fraction: f64) -> BTreeSet<String> {
    let texts: BTreeSet<&str> = corpus.iter().flat_map(|p| [p.text_a.as_str(), p.text_b.as_str()]).collect();
    let mut df: HashMap<String, usize> = HashMap::new();
    for t in &texts {
        for tok in tokenize(t).into_iter().collect::<HashSet<_>>() {
            *df.entry(tok).or_default() += 1;
        }
    }
    let n = texts.len() as f64;
    df.into_iter().filter(|(_, c)| *c as f64 / n > rare_df_fraction).map(|(t, _)| t).collect()
}

/// Full-batch gradient descent on (optionally class-weighted) log-loss.
/// The seed drives weight initialization only, so two runs with the same
/// corpus and config produce bit-identical models.
pub fn train_baseline(corpus: &[PairExample], config: TrainConfig) -> Result<BaselineModel, ScorerError> {
    let positives = corpus.iter().filter(|p| p.label == 1).count();
    let negatives = corpus.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(ScorerError::DegenerateCorpus(format!("{positives} positive and {negatives} negative pairs")));
    }
    let common = common_tokens(corpus, config.rare_df_fraction);
    let xs: Vec<[f64; 4]> = corpus.iter().map(|p| extract_features(&p.text_a, &p.text_b, &common)).collect();
    let n = corpus.len() as f64;
    let sample_weight = |label: u8| {
        if !config.balance_classes {
            1.0
        } else if label == 1 {
            n / (2.0 * positives as f64)
        } else {
            n / (2.0 * negatives as f64)
        }
    };
    let sw: Vec<f64> = corpus.iter().map(|p| sample_weight(p.label)).collect();
    let total: f64 = sw.iter().sum();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut weights: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-0.01..0.01));
    let mut bias = 0.0;
    for _ in 0..config.epochs {
        let mut gw = [0.0; 4];
        let mut gb = 0.0;
        for ((x, p), w) in xs.iter().zip(corpus).zip(&sw) {
            let z = bias + weights.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            let err = w * (sigmoid(z) - f64::from(p.label));
            for (g, v) in gw.iter_mut().zip(x) {
                *g += err * v;
            }
            gb += err;
        }
        for (wt, g) in weights.iter_mut().zip(gw) {
            *wt -= config.learning_rate * g / total;
        }
        bias -= config.learning_rate * gb / total;
    }

    Ok(BaselineModel {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        features: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        weights: weights.to_vec(),
        bias,
        seed: config.seed,
        train: config,
        common_tokens: common,
    })
}

/// Fraction of pairs whose predicted label (score above 0.5) matches.
pub fn pair_accuracy(model: &BaselineModel, pairs: &[PairExample]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let hits = pairs.iter().filter(|p| (model.probability(&p.text_a, &p.text_b) > 0.5) == (p.label == 1)).count();
    hits as f64 / pairs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairgen::PairSource;

    fn p(a: &str, b: &str, label: u8) -> PairExample {
        let source = if label == 1 { PairSource::GoldPositive } else { PairSource::BeamNegative };
        PairExample { text_a: a.into(), text_b: b.into(), label, source }
    }

    #[test]
    fn tokenizer_splits_punctuation() {
        assert_eq!(tokenize("Which states, adjoin (alabama)?"), ["which", "states", "adjoin", "alabama"]);
        assert_eq!(tokenize("st_petersburg:_ci"), ["st", "petersburg", "ci"]);
        assert!(tokenize(" ( ) ").is_empty());
    }

    #[test]
    fn features_are_symmetric_and_maximal_on_identity() {
        let common: BTreeSet<String> = ["the".to_string()].into();
        let f = extract_features("the red cat", "the red cat", &common);
        assert_eq!(f, [1.0; 4]);
        let ab = extract_features("the red cat sat", "a red dog", &common);
        let ba = extract_features("a red dog", "the red cat sat", &common);
        assert_eq!(ab, ba);
        assert!(ab.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(extract_features("", "", &common), [1.0; 4]);
    }

    #[test]
    fn degenerate_corpus() {
        let all_pos = vec![p("a", "a", 1), p("b", "b", 1)];
        assert!(matches!(train_baseline(&all_pos, TrainConfig::default()), Err(ScorerError::DegenerateCorpus(_))));
        assert!(train_baseline(&[], TrainConfig::default()).is_err());
    }

    #[test]
    fn model_file_round_trip_and_checks() {
        let corpus = vec![p("a b c", "a b c", 1), p("a b c", "x y z", 0), p("d e", "d e f", 1), p("d e", "q", 0)];
        let m = train_baseline(&corpus, TrainConfig { epochs: 50, ..Default::default() }).unwrap();
        assert_eq!(BaselineModel::from_json(&m.to_json()).unwrap(), m);
        let bumped = m.to_json().replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(BaselineModel::from_json(&bumped), Err(ScorerError::Model(_))));
        assert!(BaselineModel::from_json("{}").is_err());
    }
}
