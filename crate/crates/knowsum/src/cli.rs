//! Command-line arguments and their resolution into run configurations.
//!
//! Every parameter is optional on the command line. A run resolves its
//! parameters from, in order: explicit flags, the `--config` file (a bare
//! config object or a whole previous report), then built-in defaults. The
//! resolved parameter struct is what reports echo under `config`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use knowsum_core::validation::ObservedFraction;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_K: u32 = 8;
pub const DEFAULT_T: f64 = 100.0;
pub const DEFAULT_CANDIDATES: [u32; 3] = [6, 8, 10];
pub const DEFAULT_REPS: u32 = 100;
pub const DEFAULT_R_OBS: &str = "1/2";
pub const DEFAULT_KNN: usize = 10;
pub const DEFAULT_Q: f64 = 0.5;
pub const DEFAULT_SIMILARITY: f64 = 0.9;
pub const DEFAULT_TRIALS: u64 = 1000;
pub const DEFAULT_ZIPF_EXPONENT: f64 = 1.1;

#[derive(Parser, Debug)]
#[command(name = "knowsum", version, about = "Estimate how many items a sampled population still hides")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate unseen and total items from counts or responses.
    Estimate(EstimateArgs),
    /// Held-out validation of the estimator on an observation sequence.
    Validate(ValidateArgs),
    /// Cross-validate the truncation level over candidate values.
    SelectK(SelectKArgs),
    /// Monte Carlo trials on a synthetic population.
    Simulate(SimulateArgs),
    /// Sensitivity curve over a grid of t or k.
    Sweep(SweepArgs),
    /// Verify and cluster responses into a counts file.
    Cluster(ClusterArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Estimate(_) => "estimate",
            Command::Validate(_) => "validate",
            Command::SelectK(_) => "select-k",
            Command::Simulate(_) => "simulate",
            Command::Sweep(_) => "sweep",
            Command::Cluster(_) => "cluster",
        }
    }
}

/// Comma-separated list flag. An empty string is an empty list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim().is_empty() {
            return Ok(List(Vec::new()));
        }
        s.split(',')
            .map(|x| x.trim().parse::<T>().map_err(|e| format!("{x:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(List)
    }
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum VerifierKind {
    None,
    Allowlist,
    Keyword,
    Fuzzy,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    TheoremStrict,
    MathRelaxed,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ClusterKind {
    Exact,
    Embedding,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Euclidean,
    Cosine,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Uniform,
    Zipf,
    Explicit,
}

#[derive(ValueEnum, Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Multinomial,
    Poissonized,
}

/// Flags that steer a run but are not part of its configuration.
#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// Load parameters from a config object or a previous report.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the report here instead of stdout (for `cluster`: the counts CSV).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for repetitions and trials; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

macro_rules! fill {
    ($self:ident, $base:ident; $($f:ident),* $(,)?) => {
        $( if $self.$f.is_none() { $self.$f = $base.$f; } )*
    };
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct InputArgs {
    /// Counts CSV (`item,count` or `s,n_s`).
    #[arg(long)]
    pub counts: Option<PathBuf>,
    /// Line-delimited JSON responses.
    #[arg(long)]
    pub responses: Option<PathBuf>,
    /// One observed item per line, in observation order.
    #[arg(long)]
    pub sequence: Option<PathBuf>,
}

impl InputArgs {
    fn fill(&mut self, base: Self) {
        fill!(self, base; counts, responses, sequence);
    }

    fn check(&self) -> Result<()> {
        let given = [&self.counts, &self.responses, &self.sequence].iter().filter(|p| p.is_some()).count();
        if given != 1 {
            return Err(Error::Usage("give exactly one of --counts, --responses, --sequence".into()));
        }
        Ok(())
    }

    pub fn paths(&self) -> Vec<(&'static str, &Path)> {
        let mut out = Vec::new();
        if let Some(p) = &self.counts {
            out.push(("counts", p.as_path()));
        }
        if let Some(p) = &self.responses {
            out.push(("responses", p.as_path()));
        }
        if let Some(p) = &self.sequence {
            out.push(("sequence", p.as_path()));
        }
        out
    }
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub verifier: Option<VerifierKind>,
    #[arg(long, value_enum)]
    pub keywords_preset: Option<Preset>,
    /// Custom keyword list (comma-separated) instead of a preset.
    #[arg(long)]
    pub keywords: Option<List<String>>,
    #[arg(long)]
    pub allowlist: Option<PathBuf>,
    /// Fuzzy-match similarity threshold.
    #[arg(long)]
    pub similarity: Option<f64>,
}

impl VerifyArgs {
    fn fill(&mut self, base: Self) {
        fill!(self, base; verifier, keywords_preset, keywords, allowlist, similarity);
    }

    fn is_default(&self) -> bool {
        *self == VerifyArgs::default() || *self == VerifyArgs { verifier: Some(VerifierKind::None), ..Default::default() }
    }

    fn resolve(&mut self) -> Result<()> {
        let kind = *self.verifier.get_or_insert(VerifierKind::None);
        let has_keywords = self.keywords.is_some() || self.keywords_preset.is_some();
        match kind {
            VerifierKind::None | VerifierKind::Allowlist | VerifierKind::Fuzzy if has_keywords => {
                Err(Error::Usage("--keywords/--keywords-preset need --verifier keyword".into()))
            }
            VerifierKind::Keyword => {
                if self.keywords.is_some() && self.keywords_preset.is_some() {
                    return Err(Error::Usage("give --keywords or --keywords-preset, not both".into()));
                }
                if self.keywords.is_none() {
                    self.keywords_preset.get_or_insert(Preset::TheoremStrict);
                }
                self.no_allowlist(kind)
            }
            VerifierKind::Allowlist | VerifierKind::Fuzzy => {
                if self.allowlist.is_none() {
                    return Err(Error::Config(format!(
                        "--verifier {} needs --allowlist",
                        if kind == VerifierKind::Fuzzy { "fuzzy" } else { "allowlist" }
                    )));
                }
                if kind == VerifierKind::Fuzzy {
                    self.similarity.get_or_insert(DEFAULT_SIMILARITY);
                } else if self.similarity.is_some() {
                    return Err(Error::Usage("--similarity only applies to --verifier fuzzy".into()));
                }
                Ok(())
            }
            VerifierKind::None => self.no_allowlist(kind),
        }
    }

    fn no_allowlist(&self, _kind: VerifierKind) -> Result<()> {
        if self.allowlist.is_some() || self.similarity.is_some() {
            return Err(Error::Usage("--allowlist/--similarity need --verifier allowlist or fuzzy".into()));
        }
        Ok(())
    }
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterOpts {
    #[arg(long = "cluster", value_enum)]
    pub mode: Option<ClusterKind>,
    /// Embedding table (CSV `item,v0,..` or JSON lines).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Quantile of pooled nearest-neighbor distances used as the threshold.
    #[arg(long)]
    pub q: Option<f64>,
    /// Neighbors per point in the pooled distance set.
    #[arg(long)]
    pub knn: Option<usize>,
    #[arg(long, value_enum)]
    pub metric: Option<MetricKind>,
}

impl ClusterOpts {
    fn fill(&mut self, base: Self) {
        fill!(self, base; mode, embeddings, q, knn, metric);
    }

    fn is_default(&self) -> bool {
        *self == ClusterOpts::default() || *self == ClusterOpts { mode: Some(ClusterKind::Exact), ..Default::default() }
    }

    fn resolve(&mut self) -> Result<()> {
        match *self.mode.get_or_insert(ClusterKind::Exact) {
            ClusterKind::Exact => {
                if self.embeddings.is_some() || self.q.is_some() || self.knn.is_some() || self.metric.is_some() {
                    return Err(Error::Usage("--embeddings/--q/--knn/--metric need --cluster embedding".into()));
                }
            }
            ClusterKind::Embedding => {
                if self.embeddings.is_none() {
                    return Err(Error::Config("--cluster embedding needs --embeddings".into()));
                }
                self.q.get_or_insert(DEFAULT_Q);
                self.knn.get_or_insert(DEFAULT_KNN);
                self.metric.get_or_insert(MetricKind::Euclidean);
            }
        }
        Ok(())
    }
}

/// Verifier and cluster flags only make sense on responses input.
fn resolve_pipeline(input: &InputArgs, verify: &mut VerifyArgs, cluster: &mut ClusterOpts) -> Result<()> {
    if input.responses.is_none() {
        if !verify.is_default() || !cluster.is_default() {
            return Err(Error::Usage("verifier and cluster flags need --responses".into()));
        }
        *verify = VerifyArgs::default();
        *cluster = ClusterOpts::default();
        return Ok(());
    }
    verify.resolve()?;
    cluster.resolve()
}

/// Parses `a/b` or a decimal such as `0.25` into an observed fraction.
pub fn parse_r_obs(raw: &str) -> Result<ObservedFraction> {
    let bad = || Error::Usage(format!("--r-obs {raw:?} must be a fraction in (0, 1) such as 1/3"));
    let raw = raw.trim();
    let (num, den) = if let Some((a, b)) = raw.split_once('/') {
        (a.trim().parse::<u32>().map_err(|_| bad())?, b.trim().parse::<u32>().map_err(|_| bad())?)
    } else {
        let (int, frac) = raw.split_once('.').unwrap_or((raw, ""));
        if !int.trim_start_matches('0').is_empty() || frac.len() > 9 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let den = 10u32.pow(frac.len() as u32);
        (if frac.is_empty() { 0 } else { frac.parse::<u32>().map_err(|_| bad())? }, den)
    };
    let g = gcd(num, den).max(1);
    ObservedFraction::new(num / g, den / g).map_err(|_| bad())
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn check_k(k: u32) -> Result<()> {
    if k == 0 {
        return Err(Error::Usage("--k must be >= 1".into()));
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Usage(format!("--t must be a positive number, got {t}")));
    }
    Ok(())
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub verify: VerifyArgs,
    #[command(flatten)]
    pub cluster: ClusterOpts,
    /// Truncation level.
    #[arg(long)]
    pub k: Option<u32>,
    /// Extrapolation factor.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
}

impl EstimateArgs {
    pub fn resolve(mut self, base: Option<Self>) -> Result<Self> {
        if let Some(b) = base {
            self.input.fill(b.input);
            self.verify.fill(b.verify);
            self.cluster.fill(b.cluster);
            fill!(self, b; k, t, format);
        }
        self.input.check()?;
        resolve_pipeline(&self.input, &mut self.verify, &mut self.cluster)?;
        check_k(*self.k.get_or_insert(DEFAULT_K))?;
        check_t(*self.t.get_or_insert(DEFAULT_T))?;
        self.format.get_or_insert(Format::Json);
        Ok(self)
    }
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub verify: VerifyArgs,
    #[command(flatten)]
    pub cluster: ClusterOpts,
    /// Observed fraction, e.g. 1/2, 1/3, 1/4.
    #[arg(long)]
    pub r_obs: Option<String>,
    /// Shuffled repetitions.
    #[arg(long)]
    pub reps: Option<u32>,
    #[arg(long)]
    pub k: Option<u32>,
    /// Extrapolation factor; defaults to (1 - r_obs) / r_obs.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep the input order instead of shuffling each repetition.
    #[arg(long, action = clap::ArgAction::SetTrue)]
    #[serde(skip)]
    pub no_shuffle: bool,
    #[arg(skip)]
    pub shuffle: Option<bool>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
}

fn resolve_split(
    r_obs: &mut Option<String>,
    reps: &mut Option<u32>,
    seed: &mut Option<u64>,
    t: &mut Option<f64>,
    shuffle: &mut Option<bool>,
    no_shuffle: bool,
) -> Result<ObservedFraction> {
    let frac = parse_r_obs(r_obs.get_or_insert_with(|| DEFAULT_R_OBS.into()))?;
    *r_obs = Some(frac.to_string());
    if *reps.get_or_insert(DEFAULT_REPS) == 0 {
        return Err(Error::Usage("--reps must be >= 1".into()));
    }
    seed.get_or_insert(0);
    if no_shuffle {
        *shuffle = Some(false);
    }
    shuffle.get_or_insert(true);
    let t = *t.get_or_insert(frac.max_t());
    check_t(t)?;
    if t > frac.max_t() {
        return Err(Error::Usage(format!(
            "--t {t} exceeds the largest factor {} the holdout supports at r_obs = {frac}",
            frac.max_t()
        )));
    }
    Ok(frac)
}

impl ValidateArgs {
    pub fn resolve(mut self, base: Option<Self>) -> Result<(Self, ObservedFraction)> {
        if let Some(b) = base {
            self.input.fill(b.input);
            self.verify.fill(b.verify);
            self.cluster.fill(b.cluster);
            fill!(self, b; r_obs, reps, k, t, seed, shuffle, format);
        }
        self.input.check()?;
        resolve_pipeline(&self.input, &mut self.verify, &mut self.cluster)?;
        check_k(*self.k.get_or_insert(DEFAULT_K))?;
        let frac = resolve_split(
            &mut self.r_obs,
            &mut self.reps,
            &mut self.seed,
            &mut self.t,
            &mut self.shuffle,
            self.no_shuffle,
        )?;
        self.format.get_or_insert(Format::Json);
        Ok((self, frac))
    }
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SelectKArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub verify: VerifyArgs,
    #[command(flatten)]
    pub cluster: ClusterOpts,
    /// Candidate truncation levels, comma-separated.
    #[arg(long)]
    pub candidates: Option<List<u32>>,
    #[arg(long)]
    pub r_obs: Option<String>,
    #[arg(long)]
    pub reps: Option<u32>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, action = clap::ArgAction::SetTrue)]
    #[serde(skip)]
    pub no_shuffle: bool,
    #[arg(skip)]
    pub shuffle: Option<bool>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
}

impl SelectKArgs {
    pub fn resolve(mut self, base: Option<Self>) -> Result<(Self, ObservedFraction)> {
        if let Some(b) = base {
            self.input.fill(b.input);
            self.verify.fill(b.verify);
            self.cluster.fill(b.cluster);
            fill!(self, b; candidates, r_obs, reps, t, seed, shuffle, format);
        }
        self.input.check()?;
        resolve_pipeline(&self.input, &mut self.verify, &mut self.cluster)?;
        let c = self.candidates.get_or_insert_with(|| List(DEFAULT_CANDIDATES.to_vec()));
        if c.0.is_empty() {
            return Err(Error::Usage("--candidates must list at least one k".into()));
        }
        c.0.iter().try_for_each(|&k| check_k(k))?;
        let frac = resolve_split(
            &mut self.r_obs,
            &mut self.reps,
            &mut self.seed,
            &mut self.t,
            &mut self.shuffle,
            self.no_shuffle,
        )?;
        self.format.get_or_insert(Format::Json);
        Ok((self, frac))
    }
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyKind>,
    /// Population size N (uniform and zipf).
    #[arg(long)]
    pub support: Option<usize>,
    #[arg(long)]
    pub exponent: Option<f64>,
    /// Item probabilities for the explicit family, comma-separated.
    #[arg(long)]
    pub probs: Option<List<f64>>,
    /// Observations per trial.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
}

impl SimulateArgs {
    pub fn resolve(mut self, base: Option<Self>) -> Result<Self> {
        if let Some(b) = base {
            fill!(self, b; family, support, exponent, probs, n, t, k, trials, model, seed, format);
        }
        let family = *self.family.get_or_insert(FamilyKind::Zipf);
        match family {
            FamilyKind::Explicit => {
                let Some(p) = &self.probs else {
                    return Err(Error::Usage("--family explicit needs --probs".into()));
                };
                if self.exponent.is_some() {
                    return Err(Error::Usage("--exponent only applies to --family zipf".into()));
                }
                match self.support {
                    Some(s) if s != p.0.len() => {
                        return Err(Error::Usage(format!("--support {s} but {} probabilities", p.0.len())))
                    }
                    _ => self.support = Some(p.0.len()),
                }
            }
            FamilyKind::Uniform | FamilyKind::Zipf => {
                if self.probs.is_some() {
                    return Err(Error::Usage("--probs only applies to --family explicit".into()));
                }
                if self.support.is_none() {
                    return Err(Error::Usage("--support is required".into()));
                }
                if family == FamilyKind::Zipf {
                    self.exponent.get_or_insert(DEFAULT_ZIPF_EXPONENT);
                } else if self.exponent.is_some() {
                    return Err(Error::Usage("--exponent only applies to --family zipf".into()));
                }
            }
        }
        if self.n.is_none() {
            return Err(Error::Usage("--n is required".into()));
        }
        check_t(*self.t.get_or_insert(1.0))?;
        check_k(*self.k.get_or_insert(DEFAULT_K))?;
        if *self.trials.get_or_insert(DEFAULT_TRIALS) == 0 {
            return Err(Error::Usage("--trials must be >= 1".into()));
        }
        self.model.get_or_insert(ModelKind::Multinomial);
        self.seed.get_or_insert(0);
        self.format.get_or_insert(Format::Json);
        Ok(self)
    }
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub verify: VerifyArgs,
    #[command(flatten)]
    pub cluster: ClusterOpts,
    /// Extrapolation factors to sweep (k held at --k).
    #[arg(long)]
    pub t_grid: Option<List<f64>>,
    /// Truncation levels to sweep (t held at --t).
    #[arg(long)]
    pub k_grid: Option<List<u32>>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
}

impl SweepArgs {
    pub fn resolve(mut self, base: Option<Self>) -> Result<Self> {
        if let Some(b) = base {
            self.input.fill(b.input);
            self.verify.fill(b.verify);
            self.cluster.fill(b.cluster);
            fill!(self, b; t_grid, k_grid, k, t, format);
        }
        self.input.check()?;
        resolve_pipeline(&self.input, &mut self.verify, &mut self.cluster)?;
        match (&self.t_grid, &self.k_grid) {
            (Some(_), Some(_)) => return Err(Error::Usage("give --t-grid or --k-grid, not both".into())),
            (None, None) => return Err(Error::Usage("give --t-grid or --k-grid".into())),
            (Some(g), None) => {
                if self.t.is_some() {
                    return Err(Error::Usage("--t conflicts with --t-grid".into()));
                }
                g.0.iter().try_for_each(|&t| check_t(t))?;
                check_k(*self.k.get_or_insert(DEFAULT_K))?;
            }
            (None, Some(g)) => {
                if self.k.is_some() {
                    return Err(Error::Usage("--k conflicts with --k-grid".into()));
                }
                g.0.iter().try_for_each(|&k| check_k(k))?;
                check_t(*self.t.get_or_insert(DEFAULT_T))?;
            }
        }
        self.format.get_or_insert(Format::Json);
        Ok(self)
    }
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterArgs {
    #[arg(long)]
    pub responses: Option<PathBuf>,
    #[command(flatten)]
    pub verify: VerifyArgs,
    #[command(flatten)]
    pub cluster: ClusterOpts,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
}

impl ClusterArgs {
    pub fn resolve(mut self, base: Option<Self>) -> Result<Self> {
        if let Some(b) = base {
            self.verify.fill(b.verify);
            self.cluster.fill(b.cluster);
            fill!(self, b; responses, format);
        }
        if self.responses.is_none() {
            return Err(Error::Usage("--responses is required".into()));
        }
        if self.run.out.is_none() {
            return Err(Error::Usage("--out (counts CSV destination) is required".into()));
        }
        self.verify.resolve()?;
        self.cluster.resolve()?;
        self.format.get_or_insert(Format::Json);
        Ok(self)
    }
}
