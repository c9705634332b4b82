//! Word screening for labeled free-text corpora and a Tariff-style scorer.
//!
//! Counts are document-level presence: `m_ij` is the number of documents of
//! cause `i` that use word `j` at least once.
//!
//! Causes are ordered by descending document count (then by label), so the
//! argmax tie-break, which picks the lowest cause index, falls on the most
//! prevalent cause.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{CountData, Decision, EstimatorMode, NullModel, TailReference, TestConfig};
use crate::dstest::{decide, ds_test, freq_resampled_test, DecisionReport, FrequentistReport};
use crate::error::{Error, Result};
use crate::sampling::{derive_seed, stream_for};

const FREQ_STREAM: u64 = 0x6672;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub cause: String,
    pub text: String,
}

/// Tokenizer options: stopwords and a prefix-stem map. A token starting
/// with a map key is replaced by that key's stem (longest key wins).
#[derive(Debug, Clone, Default)]
pub struct TokenRules {
    stopwords: HashSet<String>,
    stems: Vec<(String, String)>,
}

impl TokenRules {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_stopwords<I: IntoIterator<Item = S>, S: Into<String>>(mut self, words: I) -> Self {
        self.stopwords
            .extend(words.into_iter().map(|w| w.into().to_lowercase()));
        self
    }

    pub fn with_stems<I: IntoIterator<Item = (S, S)>, S: Into<String>>(mut self, stems: I) -> Self {
        self.stems.extend(
            stems
                .into_iter()
                .map(|(a, b)| (a.into().to_lowercase(), b.into().to_lowercase())),
        );
        self.stems
            .sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        self
    }

    /// Stopword file: whitespace separated words.
    pub fn load_stopwords(self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(self.with_stopwords(
            text.split_whitespace()
                .map(str::to_string)
                .collect::<Vec<_>>(),
        ))
    }

    /// Stem file: one `prefix,stem` or `prefix stem` pair per line.
    pub fn load_stems(self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut pairs = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let mut parts = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty());
            match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) => pairs.push((a.to_string(), b.to_string())),
                _ => return Err(Error::Corpus(format!("bad stem line '{line}'"))),
            }
        }
        Ok(self.with_stems(pairs))
    }

    fn stem<'a>(&'a self, token: &'a str) -> &'a str {
        self.stems
            .iter()
            .find(|(prefix, _)| token.starts_with(prefix.as_str()))
            .map_or(token, |(_, stem)| stem.as_str())
    }
}

pub fn tokenize(text: &str, rules: &TokenRules) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
        .filter(|t| !rules.stopwords.contains(t))
        .map(|t| rules.stem(&t).to_string())
        .filter(|t| !rules.stopwords.contains(t))
        .collect()
}

/// Reads a corpus CSV with header columns `id,cause,text` (any order,
/// extra columns ignored).
pub fn read_corpus<R: Read>(reader: R) -> Result<Vec<Document>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Corpus(format!("missing column '{name}'")))
    };
    let (id, cause, text) = (col("id")?, col("cause")?, col("text")?);
    let mut docs = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Corpus(e.to_string()))?;
        let field = |i: usize| record.get(i).unwrap_or("").to_string();
        let doc = Document {
            id: field(id),
            cause: field(cause).trim().to_string(),
            text: field(text),
        };
        if doc.cause.is_empty() {
            return Err(Error::Corpus(format!("document '{}' has no cause", doc.id)));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn read_corpus_file(path: &Path) -> Result<Vec<Document>> {
    read_corpus(std::fs::File::open(path)?)
}

pub fn write_corpus(docs: &[Document]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["id", "cause", "text"])?;
    for d in docs {
        w.write_record([&d.id, &d.cause, &d.text])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordCauseTable {
    pub words: Vec<String>,
    /// `counts[j][i]`: documents of cause `i` using word `j`.
    pub counts: Vec<Vec<u64>>,
    pub causes: Vec<String>,
    pub deaths_per_cause: Vec<u64>,
    pub prevalence: NullModel<f64>,
}

impl WordCauseTable {
    pub fn usage(&self, j: usize) -> u64 {
        self.counts[j].iter().sum()
    }

    pub fn cause_index(&self, label: &str) -> Option<usize> {
        self.causes.iter().position(|c| c == label)
    }

    fn word_index(&self) -> HashMap<&str, usize> {
        self.words
            .iter()
            .enumerate()
            .map(|(j, w)| (w.as_str(), j))
            .collect()
    }
}

pub fn build_table(corpus: &[Document], rules: &TokenRules) -> Result<WordCauseTable> {
    if corpus.is_empty() {
        return Err(Error::Corpus("corpus has no documents".into()));
    }
    let mut deaths: BTreeMap<&str, u64> = BTreeMap::new();
    for d in corpus {
        *deaths.entry(d.cause.as_str()).or_default() += 1;
    }
    if deaths.len() < 2 {
        return Err(Error::Corpus("corpus needs at least two causes".into()));
    }
    let mut causes: Vec<(&str, u64)> = deaths.into_iter().collect();
    causes.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let index: HashMap<&str, usize> = causes
        .iter()
        .enumerate()
        .map(|(i, (c, _))| (*c, i))
        .collect();
    let c = causes.len();

    let mut usage: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for d in corpus {
        let i = index[d.cause.as_str()];
        for token in tokenize(&d.text, rules) {
            usage.entry(token).or_insert_with(|| vec![0; c])[i] += 1;
        }
    }
    let deaths_per_cause: Vec<u64> = causes.iter().map(|(_, n)| *n).collect();
    let total = corpus.len() as f64;
    let prevalence = NullModel::new(deaths_per_cause.iter().map(|&n| n as f64 / total).collect())?;
    let (words, counts) = usage.into_iter().unzip();
    Ok(WordCauseTable {
        words,
        counts,
        causes: causes.iter().map(|(c, _)| c.to_string()).collect(),
        deaths_per_cause,
        prevalence,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreenConfig {
    pub test: TestConfig,
    pub freq_resamples: usize,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        ScreenConfig {
            test: TestConfig::default(),
            freq_resamples: 1000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScreenResult {
    pub word: String,
    pub usage: u64,
    pub ds: DecisionReport<f64>,
    pub freq: FrequentistReport,
}

/// FNV-1a, used to give each word its own seed offset independent of the
/// rest of the vocabulary.
fn word_offset(word: &str) -> u64 {
    word.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn screen_corpus(table: &WordCauseTable, config: &ScreenConfig) -> Result<Vec<ScreenResult>> {
    config.test.validate()?;
    if config.freq_resamples == 0 {
        return Err(Error::InvalidConfig("freq_resamples must be >= 1".into()));
    }
    table
        .words
        .par_iter()
        .zip(table.counts.par_iter())
        .map(|(word, counts)| {
            let data = CountData::new(counts.clone())?;
            let seed = derive_seed(config.test.seed, &[word_offset(word)]);
            let test = TestConfig {
                seed,
                ..config.test.clone()
            };
            let ds = ds_test(&data, &table.prevalence, &test)?;
            let freq = freq_resampled_test(
                &data,
                &table.prevalence,
                config.freq_resamples,
                derive_seed(seed, &[FREQ_STREAM]),
                config.test.estimator,
            )?;
            Ok(ScreenResult {
                word: word.clone(),
                usage: data.n(),
                ds,
                freq,
            })
        })
        .collect()
}

pub const SCREEN_CSV_HEADER: &str = "word,count,q_lower_env,q_upper_env,freq_p,ds_decision";

pub fn screening_csv(results: &[ScreenResult]) -> String {
    let mut out = String::from(SCREEN_CSV_HEADER);
    out.push('\n');
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{}",
            r.word,
            r.usage,
            r.ds.tails.q_lower_env,
            r.ds.tails.q_upper_env,
            r.freq.p_value,
            r.ds.decision
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionPolicy {
    All,
    MinCount(u64),
    FreqReject(f64),
    DsReject(f64),
    DsRejectOrUnknown(f64),
}

impl SelectionPolicy {
    /// Builds a policy from its name; `min_count` and `alpha` fill in the
    /// parameter of the policies that take one.
    pub fn parse(name: &str, min_count: u64, alpha: f64) -> Result<Self> {
        match name {
            "all" => Ok(SelectionPolicy::All),
            "min_count" => Ok(SelectionPolicy::MinCount(min_count)),
            "freq_reject" => Ok(SelectionPolicy::FreqReject(alpha)),
            "ds_reject" => Ok(SelectionPolicy::DsReject(alpha)),
            "ds_reject_or_unknown" => Ok(SelectionPolicy::DsRejectOrUnknown(alpha)),
            other => Err(Error::UnknownPolicy(other.to_string())),
        }
    }

    /// The five rows of the standard comparison table.
    pub fn table(min_count: u64, alpha: f64) -> Vec<Self> {
        vec![
            SelectionPolicy::All,
            SelectionPolicy::MinCount(min_count),
            SelectionPolicy::FreqReject(alpha),
            SelectionPolicy::DsReject(alpha),
            SelectionPolicy::DsRejectOrUnknown(alpha),
        ]
    }

    pub fn label(&self) -> String {
        match self {
            SelectionPolicy::All => "all".into(),
            SelectionPolicy::MinCount(t) => format!("min_count({t})"),
            SelectionPolicy::FreqReject(a) => format!("freq_reject({a})"),
            SelectionPolicy::DsReject(a) => format!("ds_reject({a})"),
            SelectionPolicy::DsRejectOrUnknown(a) => format!("ds_reject_or_unknown({a})"),
        }
    }

    fn keeps(&self, r: &ScreenResult) -> bool {
        match *self {
            SelectionPolicy::All => true,
            SelectionPolicy::MinCount(t) => r.usage >= t,
            SelectionPolicy::FreqReject(a) => r.freq.p_value <= a,
            SelectionPolicy::DsReject(a) => decide(r.ds.tails, a) == Decision::Reject,
            SelectionPolicy::DsRejectOrUnknown(a) => decide(r.ds.tails, a) != Decision::Accept,
        }
    }
}

pub fn select_words(results: &[ScreenResult], policy: SelectionPolicy) -> Vec<String> {
    let mut words: Vec<String> = results
        .iter()
        .filter(|r| policy.keeps(r))
        .map(|r| r.word.clone())
        .collect();
    words.sort();
    words
}

#[derive(Debug, Clone, PartialEq)]
pub struct TariffModel {
    /// `tariffs[i][j]` for cause `i`, word `j`.
    pub tariffs: Vec<Vec<f64>>,
    pub words: Vec<String>,
    pub causes: Vec<String>,
}

/// Quantile with inclusive linear interpolation: position `(m-1)q` in the
/// sorted sample.
pub fn quantile_inclusive(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn tariff_fit(table: &WordCauseTable, words: &[String]) -> Result<TariffModel> {
    if words.is_empty() {
        return Err(Error::EmptySelection);
    }
    let index = table.word_index();
    let c = table.causes.len();
    let mut tariffs = vec![Vec::with_capacity(words.len()); c];
    for w in words {
        let j = *index
            .get(w.as_str())
            .ok_or_else(|| Error::Corpus(format!("word '{w}' not in table")))?;
        let p: Vec<f64> = (0..c)
            .map(|i| table.counts[j][i] as f64 / table.deaths_per_cause[i] as f64)
            .collect();
        for (i, t) in tariff_column(&p).into_iter().enumerate() {
            tariffs[i].push(t);
        }
    }
    Ok(TariffModel {
        tariffs,
        words: words.to_vec(),
        causes: table.causes.clone(),
    })
}

/// `(p_i - median) / IQR`, or all zeros when the IQR vanishes.
pub fn tariff_column(p: &[f64]) -> Vec<f64> {
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = quantile_inclusive(&sorted, 0.5);
    let iqr = quantile_inclusive(&sorted, 0.75) - quantile_inclusive(&sorted, 0.25);
    if iqr <= 0.0 {
        return vec![0.0; p.len()];
    }
    p.iter().map(|&x| (x - median) / iqr).collect()
}

impl TariffModel {
    pub fn scores(&self, tokens: &BTreeSet<String>) -> Vec<f64> {
        let used: Vec<usize> = self
            .words
            .iter()
            .enumerate()
            .filter(|(_, w)| tokens.contains(*w))
            .map(|(j, _)| j)
            .collect();
        self.tariffs
            .iter()
            .map(|row| used.iter().fold(0.0, |s, &j| s + row[j]))
            .collect()
    }

    pub fn predict(&self, tokens: &BTreeSet<String>) -> usize {
        argmax_first(&self.scores(tokens))
    }
}

pub fn tariff_predict(model: &TariffModel, tokens: &BTreeSet<String>) -> usize {
    model.predict(tokens)
}

fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub policy: String,
    pub words: usize,
    pub accuracy: f64,
}

pub const ACCURACY_CSV_HEADER: &str = "policy,words,accuracy";

pub fn accuracy_csv(rows: &[AccuracyRow]) -> String {
    let mut out = String::from(ACCURACY_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{:.6}", r.policy, r.words, r.accuracy);
    }
    out
}

/// Fraction of `docs` whose cause the model ranks first. An empty word set
/// predicts cause index 0 for every document.
pub fn accuracy_on(
    table: &WordCauseTable,
    words: &[String],
    docs: &[Document],
    rules: &TokenRules,
) -> Result<f64> {
    if docs.is_empty() {
        return Err(Error::Corpus("no documents to evaluate".into()));
    }
    let model = if words.is_empty() {
        None
    } else {
        Some(tariff_fit(table, words)?)
    };
    let mut hits = 0usize;
    for d in docs {
        let truth = table.cause_index(&d.cause).ok_or_else(|| {
            Error::Corpus(format!(
                "unknown cause '{}' in document '{}'",
                d.cause, d.id
            ))
        })?;
        let guess = model
            .as_ref()
            .map_or(0, |m| m.predict(&tokenize(&d.text, rules)));
        hits += usize::from(guess == truth);
    }
    Ok(hits as f64 / docs.len() as f64)
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub rules: TokenRules,
    pub screen: ScreenConfig,
    /// `None` evaluates on the training corpus itself.
    pub folds: Option<usize>,
}

/// Accuracy per policy. Without folds the screening results passed in are
/// reused and the model is scored on its own training documents; with
/// `folds` each fold is screened and fitted on the remaining documents.
pub fn evaluate_accuracy(
    corpus: &[Document],
    results: &[ScreenResult],
    policies: &[SelectionPolicy],
    options: &EvalOptions,
) -> Result<Vec<AccuracyRow>> {
    let table = build_table(corpus, &options.rules)?;
    match options.folds {
        None => policies
            .iter()
            .map(|p| {
                let words = select_words(results, *p);
                let accuracy = accuracy_on(&table, &words, corpus, &options.rules)?;
                Ok(AccuracyRow {
                    policy: p.label(),
                    words: words.len(),
                    accuracy,
                })
            })
            .collect(),
        Some(k) => {
            if k < 2 || k > corpus.len() {
                return Err(Error::InvalidConfig(format!(
                    "folds must be in 2..={}",
                    corpus.len()
                )));
            }
            let mut hits = vec![0.0; policies.len()];
            let mut sizes = vec![0usize; policies.len()];
            for f in 0..k {
                let (test, train): (Vec<_>, Vec<_>) =
                    corpus.iter().enumerate().partition(|(i, _)| i % k == f);
                let train: Vec<Document> = train.into_iter().map(|(_, d)| d.clone()).collect();
                let test: Vec<Document> = test.into_iter().map(|(_, d)| d.clone()).collect();
                let fold_table = build_table(&train, &options.rules)?;
                let fold_results = screen_corpus(&fold_table, &options.screen)?;
                for (p, policy) in policies.iter().enumerate() {
                    let words = select_words(&fold_results, *policy);
                    sizes[p] += words.len();
                    hits[p] += accuracy_on(&fold_table, &words, &test, &options.rules)?
                        * test.len() as f64;
                }
            }
            Ok(policies
                .iter()
                .enumerate()
                .map(|(p, policy)| AccuracyRow {
                    policy: policy.label(),
                    words: (sizes[p] as f64 / k as f64).round() as usize,
                    accuracy: hits[p] / corpus.len() as f64,
                })
                .collect())
        }
    }
}

/// Parameters of a synthetic corpus with planted discriminative words and
/// prevalence-conforming noise words.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub documents: usize,
    pub causes: usize,
    pub planted_words: usize,
    pub noise_words: usize,
    /// Usage probability of a planted word within its own cause.
    pub planted_rate: f64,
    /// Usage probability of a planted word within every other cause.
    pub background_rate: f64,
    /// Noise word usage probabilities are log-uniform in this range,
    /// identical across causes.
    pub noise_rate: (f64, f64),
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            documents: 1000,
            causes: 8,
            planted_words: 20,
            noise_words: 200,
            planted_rate: 0.3,
            background_rate: 0.02,
            noise_rate: (0.004, 0.15),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub documents: Vec<Document>,
    pub planted: Vec<String>,
    pub noise: Vec<String>,
}

fn letters(mut i: usize) -> String {
    let mut s = Vec::new();
    for _ in 0..3 {
        s.push(b'a' + (i % 26) as u8);
        i /= 26;
    }
    s.reverse();
    String::from_utf8(s).unwrap()
}

/// Cause `c` has weight `2C - c`, so the first cause is the most common
/// and the last about half as common.
pub fn synthetic_corpus(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    if spec.causes < 2 || spec.documents == 0 {
        return Err(Error::InvalidConfig(
            "synthetic corpus needs >= 2 causes and >= 1 document".into(),
        ));
    }
    let mut rng = stream_for(spec.seed, 0).rng();
    let weights: Vec<f64> = (0..spec.causes)
        .map(|c| (2 * spec.causes - c) as f64)
        .collect();
    let total: f64 = weights.iter().sum();
    let planted: Vec<String> = (0..spec.planted_words)
        .map(|j| format!("sig{}", letters(j)))
        .collect();
    let noise: Vec<String> = (0..spec.noise_words)
        .map(|j| format!("noise{}", letters(j)))
        .collect();
    let (lo, hi) = (spec.noise_rate.0.ln(), spec.noise_rate.1.ln());
    let noise_rates: Vec<f64> = (0..spec.noise_words)
        .map(|_| (lo + (hi - lo) * rng.random::<f64>()).exp())
        .collect();

    let mut documents = Vec::with_capacity(spec.documents);
    for d in 0..spec.documents {
        let mut u = rng.random::<f64>() * total;
        let mut cause = spec.causes - 1;
        for (c, w) in weights.iter().enumerate() {
            if u < *w {
                cause = c;
                break;
            }
            u -= w;
        }
        let mut tokens = Vec::new();
        for (j, word) in planted.iter().enumerate() {
            let rate = if j % spec.causes == cause {
                spec.planted_rate
            } else {
                spec.background_rate
            };
            if rng.random::<f64>() < rate {
                tokens.push(word.as_str());
            }
        }
        for (word, &rate) in noise.iter().zip(&noise_rates) {
            if rng.random::<f64>() < rate {
                tokens.push(word.as_str());
            }
        }
        documents.push(Document {
            id: format!("d{d}"),
            cause: format!("cause{}", letters(cause)),
            text: tokens.join(" "),
        });
    }
    Ok(SyntheticCorpus {
        documents,
        planted,
        noise,
    })
}

/// Default settings for a screening run from the command line or tests.
pub fn screen_config(
    alpha: f64,
    replicates: usize,
    seed: u64,
    estimator: EstimatorMode,
    reference: TailReference,
) -> ScreenConfig {
    ScreenConfig {
        test: TestConfig {
            alpha,
            replicates,
            seed,
            estimator,
            reference,
            ..TestConfig::default()
        },
        freq_resamples: replicates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenizer_examples() {
        let rules = TokenRules::new();
        assert_eq!(
            tokenize("Vomited, then vomit again.", &rules),
            set(&["vomited", "then", "vomit", "again"])
        );
        assert!(tokenize("", &rules).is_empty());
        let stems = TokenRules::new().with_stems([("vomited", "vomit")]);
        assert_eq!(
            tokenize("Vomited, then vomit again.", &stems),
            set(&["vomit", "then", "again"])
        );
        let prefix = TokenRules::new().with_stems([("diabet", "diabet")]);
        assert_eq!(tokenize("diabetes diabetic", &prefix), set(&["diabet"]));
        let stop = TokenRules::new().with_stopwords(["then"]);
        assert_eq!(tokenize("a b then x2y", &stop), set(&[]));
    }

    fn doc(id: &str, cause: &str, text: &str) -> Document {
        Document {
            id: id.into(),
            cause: cause.into(),
            text: text.into(),
        }
    }

    #[test]
    fn table_from_two_documents() {
        let corpus = vec![doc("1", "A", "fever cough"), doc("2", "B", "fever")];
        let t = build_table(&corpus, &TokenRules::new()).unwrap();
        assert_eq!(t.words, ["cough", "fever"]);
        assert_eq!(t.counts[1], vec![1, 1]);
        assert_eq!(t.prevalence.probs(), &[0.5, 0.5]);
        assert!(!t.words.contains(&"rash".to_string()));
        assert!(build_table(&[doc("1", "A", "x")], &TokenRules::new()).is_err());
        assert!(build_table(&[], &TokenRules::new()).is_err());
    }

    #[test]
    fn causes_ordered_by_prevalence() {
        let corpus = vec![
            doc("1", "A", "aa"),
            doc("2", "B", "aa"),
            doc("3", "B", "bb"),
        ];
        let t = build_table(&corpus, &TokenRules::new()).unwrap();
        assert_eq!(t.causes, ["B", "A"]);
        assert_eq!(t.deaths_per_cause, vec![2, 1]);
    }

    #[test]
    fn corpus_csv_round_trip() {
        let docs = vec![
            doc("1", "A", "fever, \"quoted\"\nline"),
            doc("2", "B", "cough"),
        ];
        let text = write_corpus(&docs).unwrap();
        assert_eq!(read_corpus(text.as_bytes()).unwrap(), docs);
        assert!(read_corpus("id,text\n1,x\n".as_bytes()).is_err());
    }

    #[test]
    fn tariff_examples() {
        assert_eq!(tariff_column(&[0.2, 0.2, 0.2]), vec![0.0; 3]);
        let t = tariff_column(&[0.5, 0.1, 0.1]);
        assert!((t[0] - 2.0).abs() < 1e-12 && t[1] == 0.0 && t[2] == 0.0);
        let scaled = tariff_column(&[1.5, 0.3, 0.3]);
        assert!((scaled[0] - t[0]).abs() < 1e-12);
        assert!((quantile_inclusive(&[1.0, 2.0, 3.0, 4.0], 0.25) - 1.75).abs() < 1e-12);
    }

    #[test]
    fn predict_tie_break_and_dominant() {
        let model = TariffModel {
            tariffs: vec![vec![5.0, 0.0], vec![-1.0, 0.0], vec![-1.0, 0.0]],
            words: vec!["aa".into(), "bb".into()],
            causes: vec!["x".into(), "y".into(), "z".into()],
        };
        assert_eq!(tariff_predict(&model, &set(&["aa"])), 0);
        assert_eq!(tariff_predict(&model, &set(&["bb"])), 0);
        assert_eq!(tariff_predict(&model, &set(&[])), 0);
        let flipped = TariffModel {
            tariffs: vec![vec![-1.0], vec![3.0], vec![3.0]],
            ..model
        };
        assert_eq!(tariff_predict(&flipped, &set(&["aa"])), 1);
    }

    #[test]
    fn policies_parse() {
        assert_eq!(
            SelectionPolicy::parse("min_count", 50, 0.05).unwrap(),
            SelectionPolicy::MinCount(50)
        );
        assert!(matches!(
            SelectionPolicy::parse("best", 1, 0.05),
            Err(Error::UnknownPolicy(_))
        ));
        assert_eq!(SelectionPolicy::table(50, 0.05).len(), 5);
    }
}
