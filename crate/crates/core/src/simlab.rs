//! Simulation studies: certain-vs-total accuracy, sample-size sweeps and
//! weakening sweeps, with CSV and SVG emission.
//!
//! Seeds are derived from `(study seed, n, dataset index)` so the same
//! dataset (and the same polytope streams) appears in every study that
//! visits the same sample size. Weakening rows therefore use common random
//! numbers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{CountData, Decision, EstimatorMode, NullModel, TailReference, TestConfig};
use crate::dstest::{ds_test, freq_resampled_test};
use crate::error::{Error, Result};
use crate::sampling::{derive_seed, multinomial_draw, stream_for};

const DATA_STREAM: u64 = 0x6461_7461;
const DS_STREAM: u64 = 0x6473;
const FREQ_STREAM: u64 = 0x6672;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyKind {
    Certainty,
    SampleSize,
    Weakening,
}

impl std::str::FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "certainty" => Ok(StudyKind::Certainty),
            "samplesize" => Ok(StudyKind::SampleSize),
            "weakening" => Ok(StudyKind::Weakening),
            other => Err(Error::InvalidConfig(format!("unknown study '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub truth: Vec<f64>,
    pub null: NullModel<f64>,
    pub sample_sizes: Vec<u64>,
    pub datasets_per_size: usize,
    pub test: TestConfig,
    pub weaken_grid: Vec<f64>,
    pub freq_resamples: usize,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.truth.len() != self.null.k() {
            return Err(Error::DimensionMismatch {
                left: self.truth.len(),
                right: self.null.k(),
            });
        }
        let sum: f64 = self.truth.iter().sum();
        if self.truth.iter().any(|&p| p.is_nan() || p < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(
                "truth must be a probability vector".into(),
            ));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return Err(Error::InvalidConfig(
                "sample_sizes must be non-empty and positive".into(),
            ));
        }
        if self.weaken_grid.is_empty()
            || self.weaken_grid.iter().any(|&a| !a.is_finite() || a < 0.0)
        {
            return Err(Error::InvalidConfig(
                "weaken_grid must be non-empty and nonnegative".into(),
            ));
        }
        if self.datasets_per_size == 0 || self.freq_resamples == 0 {
            return Err(Error::InvalidConfig(
                "datasets_per_size and freq_resamples must be >= 1".into(),
            ));
        }
        self.test.validate()
    }

    fn null_is_true(&self) -> bool {
        self.truth
            .iter()
            .zip(self.null.probs())
            .all(|(a, b)| (a - b).abs() <= 1e-12)
    }

    /// Parses a JSON object or `key=value` lines (lists comma separated).
    pub fn parse(text: &str) -> Result<Scenario> {
        let file: ScenarioFile = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?
        } else {
            ScenarioFile::from_key_values(text)?
        };
        file.resolve()
    }
}

/// On-disk scenario description; omitted fields take documented defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    truth: Option<Vec<f64>>,
    null: Option<NullSpec>,
    sample_sizes: Option<Vec<u64>>,
    datasets_per_size: Option<usize>,
    alpha: Option<f64>,
    replicates: Option<usize>,
    estimator: Option<EstimatorMode>,
    reference: Option<TailReference>,
    seed: Option<u64>,
    weaken_grid: Option<Vec<f64>>,
    freq_resamples: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum NullSpec {
    Named(String),
    Probs(Vec<f64>),
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| Error::InvalidConfig(format!("bad value in '{key}': '{s}'")))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse::<T>()
        .map_err(|_| Error::InvalidConfig(format!("bad value for '{key}': '{v}'")))
}

impl ScenarioFile {
    fn from_key_values(text: &str) -> Result<Self> {
        let mut f = ScenarioFile::default();
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("expected key=value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "truth" => f.truth = Some(parse_list(key, value)?),
                "null" => {
                    f.null = Some(if value.contains(',') {
                        NullSpec::Probs(parse_list(key, value)?)
                    } else {
                        NullSpec::Named(value.to_string())
                    })
                }
                "sample_sizes" => f.sample_sizes = Some(parse_list(key, value)?),
                "datasets_per_size" => f.datasets_per_size = Some(parse_one(key, value)?),
                "alpha" => f.alpha = Some(parse_one(key, value)?),
                "replicates" => f.replicates = Some(parse_one(key, value)?),
                "estimator" => f.estimator = Some(parse_one(key, value)?),
                "reference" => f.reference = Some(parse_one(key, value)?),
                "seed" => f.seed = Some(parse_one(key, value)?),
                "weaken_grid" => f.weaken_grid = Some(parse_list(key, value)?),
                "freq_resamples" => f.freq_resamples = Some(parse_one(key, value)?),
                other => return Err(Error::InvalidConfig(format!("unknown key '{other}'"))),
            }
        }
        Ok(f)
    }

    fn resolve(self) -> Result<Scenario> {
        let truth = self
            .truth
            .ok_or_else(|| Error::InvalidConfig("missing 'truth'".into()))?;
        let null = match self.null.unwrap_or(NullSpec::Named("uniform".into())) {
            NullSpec::Named(s) if s == "uniform" => NullModel::uniform(truth.len())?,
            NullSpec::Named(s) => return Err(Error::InvalidConfig(format!("unknown null '{s}'"))),
            NullSpec::Probs(p) => NullModel::new(p)?,
        };
        let defaults = TestConfig::default();
        let scenario = Scenario {
            truth,
            null,
            sample_sizes: self
                .sample_sizes
                .ok_or_else(|| Error::InvalidConfig("missing 'sample_sizes'".into()))?,
            datasets_per_size: self.datasets_per_size.unwrap_or(500),
            test: TestConfig {
                alpha: self.alpha.unwrap_or(defaults.alpha),
                replicates: self.replicates.unwrap_or(defaults.replicates),
                weaken_alpha: 0.0,
                estimator: self.estimator.unwrap_or(defaults.estimator),
                seed: self
                    .seed
                    .ok_or_else(|| Error::InvalidConfig("missing 'seed'".into()))?,
                statistic: defaults.statistic,
                reference: self.reference.unwrap_or(defaults.reference),
            },
            weaken_grid: self.weaken_grid.unwrap_or_else(|| vec![0.0]),
            freq_resamples: self.freq_resamples.unwrap_or(1000),
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// One aggregated row: decision fractions at one `(n, weaken_alpha)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub study: String,
    pub n: u64,
    pub weaken_alpha: f64,
    pub ds_reject: f64,
    pub ds_accept: f64,
    pub ds_unknown: f64,
    pub freq_reject: Option<f64>,
    pub certain_correct: Option<f64>,
    pub total_correct: Option<f64>,
    pub datasets: usize,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    decision: Decision,
    freq_reject: bool,
}

fn simulate_outcomes(
    scenario: &Scenario,
    truth: &[f64],
    n: u64,
    weaken_alpha: f64,
    with_freq: bool,
) -> Result<Vec<Outcome>> {
    let seed = scenario.test.seed;
    (0..scenario.datasets_per_size)
        .into_par_iter()
        .map(|d| {
            let dataset_seed = derive_seed(seed, &[DATA_STREAM, n, d as u64]);
            let mut rng = stream_for(dataset_seed, 0).rng();
            let data = CountData::new(multinomial_draw(&mut rng, n, truth))?;
            let config = TestConfig {
                weaken_alpha,
                seed: derive_seed(dataset_seed, &[DS_STREAM]),
                ..scenario.test.clone()
            };
            let report = ds_test(&data, &scenario.null, &config)?;
            let freq_reject = if with_freq {
                let f = freq_resampled_test(
                    &data,
                    &scenario.null,
                    scenario.freq_resamples,
                    derive_seed(dataset_seed, &[FREQ_STREAM]),
                    scenario.test.estimator,
                )?;
                f.p_value <= scenario.test.alpha
            } else {
                false
            };
            Ok(Outcome {
                decision: report.decision,
                freq_reject,
            })
        })
        .collect()
}

fn summarize(
    study: &str,
    scenario: &Scenario,
    null_true: bool,
    n: u64,
    weaken_alpha: f64,
    outcomes: &[Outcome],
    with_freq: bool,
) -> StudyRow {
    let total = outcomes.len();
    let count = |d: Decision| outcomes.iter().filter(|o| o.decision == d).count();
    let (rej, acc, unk) = (
        count(Decision::Reject),
        count(Decision::Accept),
        count(Decision::Unknown),
    );
    let frac = |c: usize| c as f64 / total as f64;
    let correct = if null_true { acc } else { rej };
    let certain = rej + acc;
    StudyRow {
        study: study.to_string(),
        n,
        weaken_alpha,
        ds_reject: frac(rej),
        ds_accept: frac(acc),
        ds_unknown: frac(unk),
        freq_reject: with_freq.then(|| frac(outcomes.iter().filter(|o| o.freq_reject).count())),
        certain_correct: (certain > 0).then(|| correct as f64 / certain as f64),
        total_correct: Some(frac(correct)),
        datasets: total,
        replicates: scenario.test.replicates,
        seed: scenario.test.seed,
    }
}

/// Correct-decision rates with and without the Unknown tests, next to the
/// frequentist rejection rate, for each sample size.
pub fn run_certainty_study(scenario: &Scenario) -> Result<Vec<StudyRow>> {
    scenario.validate()?;
    let null_true = scenario.null_is_true();
    scenario
        .sample_sizes
        .iter()
        .map(|&n| {
            let out = simulate_outcomes(scenario, &scenario.truth, n, 0.0, true)?;
            Ok(summarize(
                "certainty",
                scenario,
                null_true,
                n,
                0.0,
                &out,
                true,
            ))
        })
        .collect()
}

/// Decision fractions per sample size, once with data drawn from the null
/// (`samplesize_null`) and once from the scenario truth (`samplesize_alt`).
pub fn run_sample_size_study(scenario: &Scenario) -> Result<Vec<StudyRow>> {
    scenario.validate()?;
    let mut rows = Vec::new();
    for (label, truth, null_true) in [
        ("samplesize_null", scenario.null.probs().to_vec(), true),
        (
            "samplesize_alt",
            scenario.truth.clone(),
            scenario.null_is_true(),
        ),
    ] {
        for &n in &scenario.sample_sizes {
            let out = simulate_outcomes(scenario, &truth, n, 0.0, true)?;
            rows.push(summarize(label, scenario, null_true, n, 0.0, &out, true));
        }
    }
    Ok(rows)
}

/// Decision fractions across the weakening grid at one sample size.
pub fn run_weakening_study(scenario: &Scenario) -> Result<Vec<StudyRow>> {
    scenario.validate()?;
    let [n] = scenario.sample_sizes[..] else {
        return Err(Error::InvalidConfig(
            "weakening study takes exactly one sample size".into(),
        ));
    };
    let null_true = scenario.null_is_true();
    scenario
        .weaken_grid
        .iter()
        .map(|&alpha| {
            let out = simulate_outcomes(scenario, &scenario.truth, n, alpha, false)?;
            Ok(summarize(
                "weakening",
                scenario,
                null_true,
                n,
                alpha,
                &out,
                false,
            ))
        })
        .collect()
}

pub fn run_study(kind: StudyKind, scenario: &Scenario) -> Result<Vec<StudyRow>> {
    match kind {
        StudyKind::Certainty => run_certainty_study(scenario),
        StudyKind::SampleSize => run_sample_size_study(scenario),
        StudyKind::Weakening => run_weakening_study(scenario),
    }
}

pub const CSV_HEADER: &str =
    "study,n,weaken_alpha,ds_reject,ds_accept,ds_unknown,freq_reject,certain_correct,total_correct,datasets,replicates,seed";

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

/// Renders rows as CSV text (LF line endings, 6 decimals, empty cells for
/// absent values).
pub fn study_csv(rows: &[StudyRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.study,
            r.n,
            fixed(r.weaken_alpha),
            fixed(r.ds_reject),
            fixed(r.ds_accept),
            fixed(r.ds_unknown),
            r.freq_reject.map(fixed).unwrap_or_default(),
            r.certain_correct.map(fixed).unwrap_or_default(),
            r.total_correct.map(fixed).unwrap_or_default(),
            r.datasets,
            r.replicates,
            r.seed
        );
    }
    out
}

/// Line chart of the three decision fractions against `n` (or the weakening
/// level for weakening rows), one panel-free series per study label and class.
pub fn study_svg(rows: &[StudyRow]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    let x_of = |r: &StudyRow| {
        if r.study == "weakening" {
            r.weaken_alpha
        } else {
            r.n as f64
        }
    };
    let xs: Vec<f64> = rows.iter().map(x_of).collect();
    let (xmin, xmax) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    let span = if xmax > xmin { xmax - xmin } else { 1.0 };
    let px = |x: f64| PAD + (x - xmin) / span * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - y * (H - 2.0 * PAD);

    let mut groups: BTreeMap<&str, Vec<&StudyRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(r.study.as_str()).or_default().push(r);
    }
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{PAD}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{b}" stroke="black"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    let colors = [
        ("reject", "#d62728"),
        ("accept", "#2ca02c"),
        ("unknown", "#7f7f7f"),
    ];
    for (label, group) in &groups {
        for (class, color) in colors {
            let points: Vec<String> = group
                .iter()
                .map(|r| {
                    let y = match class {
                        "reject" => r.ds_reject,
                        "accept" => r.ds_accept,
                        _ => r.ds_unknown,
                    };
                    format!("{:.2},{:.2}", px(x_of(r)), py(y))
                })
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline class="series" data-study="{label}" data-decision="{class}" fill="none" stroke="{color}" points="{}"/>"#,
                points.join(" ")
            );
        }
    }
    let xlabel = if groups.contains_key("weakening") {
        "weakening"
    } else {
        "n"
    };
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text><text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">fraction</text>"#,
        W / 2.0,
        H - 10.0,
        H / 2.0,
        H / 2.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// Writes the CSV to `path`, and the SVG chart next to it when `svg` is set.
pub fn emit_study(rows: &[StudyRow], path: &Path, svg: Option<&Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidConfig("no rows to emit".into()));
    }
    fs::write(path, study_csv(rows))?;
    if let Some(svg_path) = svg {
        fs::write(svg_path, study_svg(rows))?;
    }
    Ok(())
}
