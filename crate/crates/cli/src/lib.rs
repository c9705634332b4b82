//! Argument parsing, command execution and report rendering for the
//! `dsinfer` binary. Commands return their standard output as a string so
//! the binary only handles the worker pool and exit codes.

use std::collections::hash_map::RandomState;
use std::fmt::Write as _;
use std::hash::{BuildHasher, Hasher};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use dsinfer::simlab::{self, Scenario, StudyKind, StudyRow};
use dsinfer::textscreen::{self, EvalOptions, ScreenConfig, SelectionPolicy, TokenRules};
use dsinfer::{
    ds_test, freq_resampled_test, validate_counts, Decision, EstimatorMode, NullModel,
    TailReference, TestConfig,
};

#[derive(Debug, Parser)]
#[command(
    name = "dsinfer",
    version,
    about = "Dempster-Shafer multinomial tests with Dirichlet random polytopes"
)]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,
    /// Worker threads; output does not depend on this.
    #[arg(long, global = true, env = "DS_WORKERS")]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One DS goodness-of-fit test on a vector of counts.
    Test(TestArgs),
    /// Run a simulation study from a scenario file.
    Simulate(SimulateArgs),
    /// Screen every word of a labeled corpus.
    Screen(ScreenArgs),
    /// Tariff accuracy per word-selection policy.
    Classify(ClassifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TestOptions {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1000)]
    pub replicates: usize,
    /// Required for json and csv output.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.0)]
    pub weaken: f64,
    #[arg(long, default_value = "centroid", value_parser = parse_estimator)]
    pub estimator: EstimatorMode,
    #[arg(long, default_value = "null", value_parser = parse_reference)]
    pub reference: TailReference,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub counts: Vec<i64>,
    /// `uniform` or comma-separated probabilities.
    #[arg(long, default_value = "uniform")]
    pub null: String,
    #[command(flatten)]
    pub opts: TestOptions,
    /// Also run the resampled chi-squared test.
    #[arg(long)]
    pub with_freq: bool,
    #[arg(long, default_value_t = 1000)]
    pub freq_resamples: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_study)]
    pub study: StudyKind,
    /// Scenario file: JSON object or key=value lines.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write an SVG chart.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CorpusOptions {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Whitespace-separated stopword file.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Prefix-stem file, one `prefix,stem` pair per line.
    #[arg(long)]
    pub stems: Option<PathBuf>,
    #[command(flatten)]
    pub opts: TestOptions,
    #[arg(long, default_value_t = 1000)]
    pub freq_resamples: usize,
}

#[derive(Debug, Args)]
pub struct ScreenArgs {
    #[command(flatten)]
    pub corpus: CorpusOptions,
    /// Also write the screening CSV here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub corpus: CorpusOptions,
    /// Policies to compare; defaults to all five.
    #[arg(long, value_delimiter = ',')]
    pub policy: Vec<String>,
    #[arg(long, default_value_t = 50)]
    pub min_count: u64,
    /// Cross-validation folds; omitted means evaluation on the training corpus.
    #[arg(long, conflicts_with = "test_corpus")]
    pub folds: Option<usize>,
    /// Labeled documents to evaluate on instead of the training corpus.
    #[arg(long)]
    pub test_corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_estimator(s: &str) -> Result<EstimatorMode, String> {
    s.parse().map_err(|e: dsinfer::Error| e.to_string())
}

fn parse_reference(s: &str) -> Result<TailReference, String> {
    s.parse().map_err(|e: dsinfer::Error| e.to_string())
}

fn parse_study(s: &str) -> Result<StudyKind, String> {
    s.parse().map_err(|e: dsinfer::Error| e.to_string())
}

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit 2.
    Usage(String),
    /// Failure during computation: exit 1.
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Compute(m) => m,
        }
    }
}

impl From<dsinfer::Error> for CliError {
    fn from(e: dsinfer::Error) -> Self {
        use dsinfer::Error as E;
        match e {
            E::NonConvexStatistic
            | E::LatticeTooLarge { .. }
            | E::InvalidPolytope(_)
            | E::InvalidConcentration { .. }
            | E::ZeroConcentrations
            | E::EmptySelection => CliError::Compute(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Stable machine-readable report of `test`; field order is part of the format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub counts: Vec<u64>,
    pub null: Vec<f64>,
    pub alpha: f64,
    pub replicates: usize,
    pub weaken_alpha: f64,
    pub estimator: EstimatorMode,
    pub seed: u64,
    pub t_obs: f64,
    pub q_lower_env: f64,
    pub q_upper_env: f64,
    pub decision: Decision,
    pub belief: f64,
    pub plausibility: f64,
    pub reference: TailReference,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freq_p_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freq_resamples: Option<usize>,
}

pub const TEST_CSV_HEADER: &str = "counts,null,alpha,replicates,weaken_alpha,estimator,seed,t_obs,q_lower_env,q_upper_env,decision,belief,plausibility,reference,freq_p_value,freq_resamples";

impl TestReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes") + "\n"
    }

    pub fn to_csv(&self) -> String {
        let join = |v: Vec<String>| v.join(";");
        format!(
            "{TEST_CSV_HEADER}\n{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            join(self.counts.iter().map(u64::to_string).collect()),
            join(self.null.iter().map(f64::to_string).collect()),
            self.alpha,
            self.replicates,
            self.weaken_alpha,
            self.estimator,
            self.seed,
            self.t_obs,
            self.q_lower_env,
            self.q_upper_env,
            self.decision,
            self.belief,
            self.plausibility,
            self.reference,
            self.freq_p_value.map(|p| p.to_string()).unwrap_or_default(),
            self.freq_resamples
                .map(|r| r.to_string())
                .unwrap_or_default(),
        )
    }

    pub fn to_human(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "decision: {}", self.decision);
        let _ = writeln!(
            s,
            "tail probabilities: lower {:.4}  upper {:.4}",
            self.q_lower_env, self.q_upper_env
        );
        let _ = writeln!(
            s,
            "belief {:.4}  plausibility {:.4}",
            self.belief, self.plausibility
        );
        let _ = writeln!(s, "observed statistic: {:.6}", self.t_obs);
        if let Some(p) = self.freq_p_value {
            let _ = writeln!(s, "resampled chi-squared p-value: {p:.4}");
        }
        let _ = writeln!(
            s,
            "config: counts {:?}, null {:?}, alpha {}, replicates {}, weaken {}, estimator {}, reference {}, seed {}",
            self.counts, self.null, self.alpha, self.replicates, self.weaken_alpha, self.estimator, self.reference, self.seed
        );
        s
    }
}

fn resolve_seed(seed: Option<u64>, format: Format) -> CliResult<u64> {
    match (seed, format) {
        (Some(s), _) => Ok(s),
        (None, Format::Human) => Ok(RandomState::new().build_hasher().finish()),
        (None, _) => Err(CliError::Usage(
            "--seed is required for json and csv output".into(),
        )),
    }
}

fn parse_null(spec: &str, k: usize) -> CliResult<NullModel> {
    if spec == "uniform" {
        return Ok(NullModel::uniform(k)?);
    }
    let probs = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad --null value '{s}'")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(NullModel::new(probs)?)
}

fn test_config(opts: &TestOptions, seed: u64) -> CliResult<TestConfig> {
    let config = TestConfig {
        alpha: opts.alpha,
        replicates: opts.replicates,
        weaken_alpha: opts.weaken,
        estimator: opts.estimator,
        seed,
        reference: opts.reference,
        ..TestConfig::default()
    };
    config.validate()?;
    Ok(config)
}

pub fn cmd_test(args: &TestArgs, format: Format) -> CliResult<String> {
    if args.counts.is_empty() {
        return Err(CliError::Usage("--counts is required".into()));
    }
    let data = validate_counts(&args.counts)?;
    let null = parse_null(&args.null, data.k())?;
    if null.k() != data.k() {
        return Err(CliError::Usage(format!(
            "--null has {} cells but --counts has {}",
            null.k(),
            data.k()
        )));
    }
    let config = test_config(&args.opts, resolve_seed(args.opts.seed, format)?)?;
    if args.with_freq && args.freq_resamples == 0 {
        return Err(CliError::Usage("--freq-resamples must be >= 1".into()));
    }
    let report = ds_test(&data, &null, &config)?;
    let freq = if args.with_freq {
        Some(freq_resampled_test(
            &data,
            &null,
            args.freq_resamples,
            config.seed,
            config.estimator,
        )?)
    } else {
        None
    };
    let out = TestReport {
        counts: data.counts().to_vec(),
        null: null.probs().to_vec(),
        alpha: config.alpha,
        replicates: config.replicates,
        weaken_alpha: config.weaken_alpha,
        estimator: config.estimator,
        seed: config.seed,
        t_obs: report.t_obs,
        q_lower_env: report.tails.q_lower_env,
        q_upper_env: report.tails.q_upper_env,
        decision: report.decision,
        belief: report.belief,
        plausibility: report.plausibility,
        reference: config.reference,
        freq_p_value: freq.as_ref().map(|f| f.p_value),
        freq_resamples: freq.as_ref().map(|f| f.resamples),
    };
    Ok(match format {
        Format::Human => out.to_human(),
        Format::Json => out.to_json(),
        Format::Csv => out.to_csv(),
    })
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    study: StudyKind,
    scenario: &'a Scenario,
    csv: String,
    svg: Option<String>,
    rows: &'a [StudyRow],
}

fn study_name(kind: StudyKind) -> &'static str {
    match kind {
        StudyKind::Certainty => "certainty",
        StudyKind::SampleSize => "samplesize",
        StudyKind::Weakening => "weakening",
    }
}

pub fn cmd_simulate(args: &SimulateArgs, format: Format) -> CliResult<String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.config.display())))?;
    let scenario = Scenario::parse(&text)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", args.out.display())))?;
    let rows = simlab::run_study(args.study, &scenario)?;
    let name = study_name(args.study);
    let csv_path = args.out.join(format!("{name}.csv"));
    let svg_path = args.svg.then(|| args.out.join(format!("{name}.svg")));
    simlab::emit_study(&rows, &csv_path, svg_path.as_deref())?;
    Ok(match format {
        Format::Csv => simlab::study_csv(&rows),
        Format::Json => {
            let out = SimulateOutput {
                study: args.study,
                scenario: &scenario,
                csv: file_name(&csv_path),
                svg: svg_path.as_deref().map(file_name),
                rows: &rows,
            };
            serde_json::to_string(&out).expect("output serializes") + "\n"
        }
        Format::Human => {
            let mut s = format!("wrote {}", csv_path.display());
            if let Some(p) = &svg_path {
                let _ = write!(s, " and {}", p.display());
            }
            s.push('\n');
            s.push_str("study            n  weaken  reject  accept  unknown  freq_reject\n");
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{:<15} {:>4} {:>7.2} {:>7.3} {:>7.3} {:>8.3} {:>12}",
                    r.study,
                    r.n,
                    r.weaken_alpha,
                    r.ds_reject,
                    r.ds_accept,
                    r.ds_unknown,
                    r.freq_reject
                        .map(|f| format!("{f:.3}"))
                        .unwrap_or_else(|| "-".into())
                );
            }
            s
        }
    })
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn token_rules(opts: &CorpusOptions) -> CliResult<TokenRules> {
    let mut rules = TokenRules::new();
    if let Some(p) = &opts.stopwords {
        rules = rules.load_stopwords(p)?;
    }
    if let Some(p) = &opts.stems {
        rules = rules.load_stems(p)?;
    }
    Ok(rules)
}

struct Screened {
    docs: Vec<textscreen::Document>,
    rules: TokenRules,
    config: ScreenConfig,
    results: Vec<textscreen::ScreenResult>,
}

fn screen(opts: &CorpusOptions, format: Format) -> CliResult<Screened> {
    let rules = token_rules(opts)?;
    let docs = textscreen::read_corpus_file(&opts.corpus)?;
    let table = textscreen::build_table(&docs, &rules)?;
    if opts.freq_resamples == 0 {
        return Err(CliError::Usage("--freq-resamples must be >= 1".into()));
    }
    let config = ScreenConfig {
        test: test_config(&opts.opts, resolve_seed(opts.opts.seed, format)?)?,
        freq_resamples: opts.freq_resamples,
    };
    let results = textscreen::screen_corpus(&table, &config)?;
    Ok(Screened {
        docs,
        rules,
        config,
        results,
    })
}

#[derive(Serialize)]
struct ScreenRow<'a> {
    word: &'a str,
    count: u64,
    q_lower_env: f64,
    q_upper_env: f64,
    freq_p: f64,
    ds_decision: Decision,
}

#[derive(Serialize)]
struct ScreenOutput<'a> {
    config: &'a ScreenConfig,
    words: Vec<ScreenRow<'a>>,
}

pub fn cmd_screen(args: &ScreenArgs, format: Format) -> CliResult<String> {
    let s = screen(&args.corpus, format)?;
    let csv = textscreen::screening_csv(&s.results);
    if let Some(path) = &args.out {
        std::fs::write(path, &csv)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(match format {
        Format::Csv => csv,
        Format::Json => {
            let words = s
                .results
                .iter()
                .map(|r| ScreenRow {
                    word: &r.word,
                    count: r.usage,
                    q_lower_env: r.ds.tails.q_lower_env,
                    q_upper_env: r.ds.tails.q_upper_env,
                    freq_p: r.freq.p_value,
                    ds_decision: r.ds.decision,
                })
                .collect();
            serde_json::to_string(&ScreenOutput {
                config: &s.config,
                words,
            })
            .expect("output serializes")
                + "\n"
        }
        Format::Human => {
            let count = |d: Decision| s.results.iter().filter(|r| r.ds.decision == d).count();
            let freq = s
                .results
                .iter()
                .filter(|r| r.freq.p_value <= s.config.test.alpha)
                .count();
            format!(
                "{} words screened (seed {}): Reject {}, Accept {}, Unknown {}; resampled chi-squared rejects {}\n{}",
                s.results.len(),
                s.config.test.seed,
                count(Decision::Reject),
                count(Decision::Accept),
                count(Decision::Unknown),
                freq,
                csv
            )
        }
    })
}

#[derive(Serialize)]
struct ClassifyOutput<'a> {
    config: &'a ScreenConfig,
    folds: Option<usize>,
    rows: &'a [textscreen::AccuracyRow],
}

pub fn cmd_classify(args: &ClassifyArgs, format: Format) -> CliResult<String> {
    let alpha = args.corpus.opts.alpha;
    let policies = if args.policy.is_empty() {
        SelectionPolicy::table(args.min_count, alpha)
    } else {
        args.policy
            .iter()
            .map(|p| SelectionPolicy::parse(p.trim(), args.min_count, alpha))
            .collect::<Result<Vec<_>, _>>()?
    };
    let test_docs = match &args.test_corpus {
        Some(p) => Some(textscreen::read_corpus_file(p)?),
        None => None,
    };
    let s = screen(&args.corpus, format)?;
    let rows = match &test_docs {
        None => textscreen::evaluate_accuracy(
            &s.docs,
            &s.results,
            &policies,
            &EvalOptions {
                rules: s.rules.clone(),
                screen: s.config.clone(),
                folds: args.folds,
            },
        )?,
        Some(test) => {
            let table = textscreen::build_table(&s.docs, &s.rules)?;
            policies
                .iter()
                .map(|p| {
                    let words = textscreen::select_words(&s.results, *p);
                    let accuracy = textscreen::accuracy_on(&table, &words, test, &s.rules)?;
                    Ok(textscreen::AccuracyRow {
                        policy: p.label(),
                        words: words.len(),
                        accuracy,
                    })
                })
                .collect::<CliResult<Vec<_>>>()?
        }
    };
    let csv = textscreen::accuracy_csv(&rows);
    if let Some(path) = &args.out {
        std::fs::write(path, &csv)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(match format {
        Format::Csv | Format::Human => csv,
        Format::Json => {
            serde_json::to_string(&ClassifyOutput {
                config: &s.config,
                folds: args.folds,
                rows: &rows,
            })
            .expect("output serializes")
                + "\n"
        }
    })
}

pub fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Test(a) => cmd_test(a, cli.format),
        Command::Simulate(a) => cmd_simulate(a, cli.format),
        Command::Screen(a) => cmd_screen(a, cli.format),
        Command::Classify(a) => cmd_classify(a, cli.format),
    }
}
