//! Subcommand implementations. Each returns the text to emit; the binary
//! decides where it goes.

use std::collections::BTreeMap;
use std::path::Path;

use knowsum_core::estimator::{estimate_total, growth_bound, EstimatorConfig};
use knowsum_core::pipeline::{
    assign_embeddings, verify_items, ClusterMode, ClusterSpec, EmbeddingTable, KeywordPreset, Metric,
    ResponseRecord, Verification, VerifierSpec,
};
use knowsum_core::simulator::{analytic_expected_unseen_uniform, Family, SamplingModel, SimSpec};
use knowsum_core::validation::{sweep_k, sweep_t, ObservationSequence, SplitSpec};
use knowsum_core::{ClusteredCounts, PrevalenceHistogram};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::*;
use crate::error::{Error, Result};
use crate::io;
use crate::parallel;
use crate::report::{csv_table, fmt_f64, InputDigest, Report};

/// What a command produced: the primary output text, plus the report when the
/// primary output is something else (the `cluster` counts file).
#[derive(Debug)]
pub struct Output {
    pub text: String,
    pub side_report: Option<String>,
}

pub fn run(command: Command) -> Result<Output> {
    let name = command.name();
    match command {
        Command::Estimate(a) => {
            let base = load_config(a.run.config.as_deref(), name)?;
            estimate(a.resolve(base)?)
        }
        Command::Validate(a) => {
            let base = load_config(a.run.config.as_deref(), name)?;
            validate(a.resolve(base)?)
        }
        Command::SelectK(a) => {
            let base = load_config(a.run.config.as_deref(), name)?;
            select_k(a.resolve(base)?)
        }
        Command::Simulate(a) => {
            let base = load_config(a.run.config.as_deref(), name)?;
            simulate(a.resolve(base)?)
        }
        Command::Sweep(a) => {
            let base = load_config(a.run.config.as_deref(), name)?;
            sweep(a.resolve(base)?)
        }
        Command::Cluster(a) => {
            let base = load_config(a.run.config.as_deref(), name)?;
            cluster(a.resolve(base)?)
        }
    }
}

/// Reads a config object, or the `config` of a previous report of the same command.
fn load_config<T: DeserializeOwned>(path: Option<&Path>, command: &str) -> Result<Option<T>> {
    let Some(path) = path else { return Ok(None) };
    let text = io::read_to_string(path)?;
    let mut v: Value =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if let Some(obj) = v.as_object_mut() {
        if let Some(other) = obj.get("command").and_then(Value::as_str) {
            if other != command {
                return Err(Error::Config(format!(
                    "{} is a `{other}` report, not `{command}`",
                    path.display()
                )));
            }
        }
        if let Some(inner) = obj.remove("config") {
            v = inner;
        }
    }
    serde_json::from_value(v).map(Some).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Serialize)]
pub struct PipelineSummary {
    pub items: usize,
    pub valid: usize,
    pub rejected: usize,
    pub rejected_by_reason: BTreeMap<&'static str, usize>,
    pub clusters: usize,
    /// Distance threshold used by embedding clustering.
    pub threshold: Option<f64>,
}

pub struct PipelineRun {
    pub verification: Verification,
    pub labels: knowsum_core::pipeline::Clustering,
    pub summary: PipelineSummary,
}

fn verifier(v: &VerifyArgs) -> Result<VerifierSpec> {
    let spec = match v.verifier.unwrap_or(VerifierKind::None) {
        VerifierKind::None => VerifierSpec::AcceptAll,
        VerifierKind::Keyword => match (&v.keywords, v.keywords_preset) {
            (Some(list), _) => VerifierSpec::Keyword(list.0.clone()),
            (None, Some(Preset::MathRelaxed)) => VerifierSpec::keywords(KeywordPreset::MathRelaxed),
            (None, _) => VerifierSpec::keywords(KeywordPreset::TheoremStrict),
        },
        kind @ (VerifierKind::Allowlist | VerifierKind::Fuzzy) => {
            let path = v.allowlist.as_deref().ok_or_else(|| Error::Config("missing --allowlist".into()))?;
            let list = io::read_allowlist(path)?;
            if kind == VerifierKind::Allowlist {
                VerifierSpec::Allowlist(list)
            } else {
                VerifierSpec::FuzzyAllowlist { allowlist: list, threshold: v.similarity.unwrap_or(DEFAULT_SIMILARITY) }
            }
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn cluster_spec(c: &ClusterOpts) -> Result<(ClusterSpec, EmbeddingTable)> {
    match c.mode.unwrap_or(ClusterKind::Exact) {
        ClusterKind::Exact => Ok((ClusterSpec::exact(), EmbeddingTable::new())),
        ClusterKind::Embedding => {
            let path = c.embeddings.as_deref().ok_or_else(|| Error::Config("missing --embeddings".into()))?;
            let metric = match c.metric.unwrap_or(MetricKind::Euclidean) {
                MetricKind::Euclidean => Metric::Euclidean,
                MetricKind::Cosine => Metric::Cosine,
            };
            let mode = ClusterMode::Embedding {
                q: c.q.unwrap_or(DEFAULT_Q),
                knn: c.knn.unwrap_or(DEFAULT_KNN),
                metric,
            };
            Ok((ClusterSpec { mode }, io::read_embeddings(path)?))
        }
    }
}

/// Verifies and clusters responses.
pub fn run_pipeline(records: &[ResponseRecord], verify: &VerifyArgs, cluster: &ClusterOpts) -> Result<PipelineRun> {
    let spec = verifier(verify)?;
    let (cspec, table) = cluster_spec(cluster)?;
    let verification = verify_items(records, &spec)?;
    let (labels, threshold) = assign_embeddings(&verification.valid, &table, &cspec)?;
    let summary = PipelineSummary {
        items: verification.total(),
        valid: verification.valid.len(),
        rejected: verification.rejected.len(),
        rejected_by_reason: verification.tallies().into_iter().map(|(r, n)| (r.as_str(), n)).collect(),
        clusters: labels.counts().distinct(),
        threshold,
    };
    Ok(PipelineRun { verification, labels, summary })
}

/// Digests of the data files a configuration refers to.
fn digests(input: Option<&InputArgs>, verify: &VerifyArgs, cluster: &ClusterOpts) -> Result<Vec<InputDigest>> {
    let mut out = Vec::new();
    if let Some(input) = input {
        for (role, path) in input.paths() {
            out.push(InputDigest::of_file(role, path)?);
        }
    }
    if let Some(p) = &verify.allowlist {
        out.push(InputDigest::of_file("allowlist", p)?);
    }
    if let Some(p) = &cluster.embeddings {
        out.push(InputDigest::of_file("embeddings", p)?);
    }
    Ok(out)
}

enum Loaded {
    Counts(io::CountsFile),
    Sequence(ObservationSequence),
    Pipeline(PipelineRun),
}

impl Loaded {
    fn histogram(&self) -> PrevalenceHistogram {
        match self {
            Loaded::Counts(c) => c.histogram(),
            Loaded::Sequence(s) => PrevalenceHistogram::from_counts(&ClusteredCounts::from_occurrences(s.items())),
            Loaded::Pipeline(p) => PrevalenceHistogram::from_counts(&p.labels.counts()),
        }
    }

    fn sequence(&self) -> ObservationSequence {
        match self {
            Loaded::Counts(c) => c.sequence(),
            Loaded::Sequence(s) => s.clone(),
            Loaded::Pipeline(p) => p.labels.sequence(),
        }
    }

    fn pipeline(&self) -> Option<&PipelineSummary> {
        match self {
            Loaded::Pipeline(p) => Some(&p.summary),
            _ => None,
        }
    }
}

fn load(input: &InputArgs, verify: &VerifyArgs, cluster: &ClusterOpts) -> Result<Loaded> {
    if let Some(p) = &input.counts {
        Ok(Loaded::Counts(io::read_counts(p)?))
    } else if let Some(p) = &input.sequence {
        Ok(Loaded::Sequence(io::read_sequence(p)?))
    } else if let Some(p) = &input.responses {
        Ok(Loaded::Pipeline(run_pipeline(&io::read_responses(p)?, verify, cluster)?))
    } else {
        Err(Error::Usage("no input given".into()))
    }
}

fn histogram_json(h: &PrevalenceHistogram) -> Value {
    Value::Array(h.iter().map(|b| json!({"s": b.s, "n_s": b.n_s})).collect())
}

fn emit<C: Serialize, R: Serialize>(
    command: &'static str,
    config: &C,
    inputs: Vec<InputDigest>,
    result: &R,
    format: Format,
    csv: impl FnOnce() -> Result<String>,
) -> Result<Output> {
    let report = Report::new(command, config, inputs, result)?.to_json()?;
    let text = match format {
        Format::Json => report,
        Format::Csv => csv()?,
    };
    Ok(Output { text, side_report: None })
}

fn field_rows(fields: &[(&str, String)]) -> Result<String> {
    csv_table(&["field", "value"], fields.iter().map(|(f, v)| vec![f.to_string(), v.clone()]))
}

fn estimate(a: EstimateArgs) -> Result<Output> {
    let inputs = digests(Some(&a.input), &a.verify, &a.cluster)?;
    let loaded = load(&a.input, &a.verify, &a.cluster)?;
    let hist = loaded.histogram();
    let config = EstimatorConfig::new(a.k.unwrap_or(DEFAULT_K), a.t.unwrap_or(DEFAULT_T))?;
    let est = estimate_total(&hist, &config)?;
    let bound = growth_bound(&hist, &config)?;
    let result = json!({
        "n": hist.n(),
        "n_seen": est.n_seen,
        "histogram": histogram_json(&hist),
        "coefficients": est.coefficients,
        "unseen_raw": est.unseen_raw,
        "unseen": est.unseen,
        "total": est.total,
        "skr": est.skr,
        "growth_bound": bound,
        "pipeline": loaded.pipeline(),
    });
    emit("estimate", &a, inputs, &result, a.format.unwrap_or(Format::Json), || {
        field_rows(&[
            ("n", hist.n().to_string()),
            ("n_seen", est.n_seen.to_string()),
            ("unseen_raw", fmt_f64(est.unseen_raw)),
            ("unseen", fmt_f64(est.unseen)),
            ("total", fmt_f64(est.total)),
            ("skr", fmt_f64(est.skr)),
        ])
    })
}

fn split_spec(frac: knowsum_core::validation::ObservedFraction, reps: Option<u32>, seed: Option<u64>, shuffle: Option<bool>) -> SplitSpec {
    let s = SplitSpec::new(frac, reps.unwrap_or(DEFAULT_REPS), seed.unwrap_or(0));
    if shuffle == Some(false) {
        s.without_shuffle()
    } else {
        s
    }
}

fn validate((a, frac): (ValidateArgs, knowsum_core::validation::ObservedFraction)) -> Result<Output> {
    let inputs = digests(Some(&a.input), &a.verify, &a.cluster)?;
    let loaded = load(&a.input, &a.verify, &a.cluster)?;
    let seq = loaded.sequence();
    let split = split_spec(frac, a.reps, a.seed, a.shuffle);
    let config = EstimatorConfig::new(a.k.unwrap_or(DEFAULT_K), a.t.unwrap_or(frac.max_t()))?;
    let pool = parallel::pool(a.run.threads)?;
    let report = parallel::held_out_validate(&pool, &seq, split, config)?;
    let mut result = serde_json::to_value(&report)?;
    result["relative_error_of_means"] = json!(report.relative_error_of_means());
    result["observations"] = json!(seq.len());
    result["pipeline"] = json!(loaded.pipeline());
    emit("validate", &a, inputs, &result, a.format.unwrap_or(Format::Json), || {
        csv_table(
            &["rep", "estimate", "ground_truth"],
            report
                .per_rep
                .iter()
                .enumerate()
                .map(|(i, r)| vec![i.to_string(), fmt_f64(r.estimate), r.ground_truth.to_string()]),
        )
    })
}

fn select_k((a, frac): (SelectKArgs, knowsum_core::validation::ObservedFraction)) -> Result<Output> {
    let inputs = digests(Some(&a.input), &a.verify, &a.cluster)?;
    let loaded = load(&a.input, &a.verify, &a.cluster)?;
    let seq = loaded.sequence();
    let split = split_spec(frac, a.reps, a.seed, a.shuffle);
    let candidates = a.candidates.as_ref().map(|c| c.0.clone()).unwrap_or_else(|| DEFAULT_CANDIDATES.to_vec());
    let t = a.t.unwrap_or(frac.max_t());
    let pool = parallel::pool(a.run.threads)?;
    let report = parallel::select_k(&pool, &seq, split, &candidates, t)?;
    let mut result = serde_json::to_value(&report)?;
    result["observations"] = json!(seq.len());
    result["pipeline"] = json!(loaded.pipeline());
    emit("select-k", &a, inputs, &result, a.format.unwrap_or(Format::Json), || {
        csv_table(
            &["k", "nmse", "mean_estimate", "mean_truth"],
            report.candidates.iter().map(|c| {
                vec![c.k.to_string(), fmt_f64(c.nmse), fmt_f64(c.mean_estimate), fmt_f64(c.mean_truth)]
            }),
        )
    })
}

fn simulate(a: SimulateArgs) -> Result<Output> {
    let n = a.n.ok_or_else(|| Error::Usage("--n is required".into()))?;
    let t = a.t.unwrap_or(1.0);
    let seed = a.seed.unwrap_or(0);
    let support = a.support.unwrap_or(0);
    let family = match a.family.unwrap_or(FamilyKind::Zipf) {
        FamilyKind::Uniform => Family::Uniform,
        FamilyKind::Zipf => Family::Zipf { exponent: a.exponent.unwrap_or(DEFAULT_ZIPF_EXPONENT) },
        FamilyKind::Explicit => Family::Explicit { probs: a.probs.as_ref().map(|p| p.0.clone()).unwrap_or_default() },
    };
    let sampling_model = match a.model.unwrap_or(ModelKind::Multinomial) {
        ModelKind::Multinomial => SamplingModel::Multinomial,
        ModelKind::Poissonized => SamplingModel::Poissonized,
    };
    let spec = SimSpec { family, support_size: support, n_draws: n, t, seed, sampling_model };
    spec.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let config = EstimatorConfig::new(a.k.unwrap_or(DEFAULT_K), t)?;
    let pool = parallel::pool(a.run.threads)?;
    let trials = a.trials.unwrap_or(DEFAULT_TRIALS);
    let summary = parallel::run_trials(&pool, &spec, trials, &config)?;
    let analytic = (spec.family == Family::Uniform && sampling_model == SamplingModel::Multinomial)
        .then(|| analytic_expected_unseen_uniform(support as u64, n, t));
    let mut result = serde_json::to_value(&summary)?;
    result["analytic_expected_unseen"] = json!(analytic);
    emit("simulate", &a, Vec::new(), &result, a.format.unwrap_or(Format::Json), || {
        let mut rows = vec![
            ("trials", summary.trials.to_string()),
            ("mean_estimate", fmt_f64(summary.mean_estimate)),
            ("mean_truth", fmt_f64(summary.mean_truth)),
            ("std_estimate", fmt_f64(summary.std_estimate)),
            ("std_truth", fmt_f64(summary.std_truth)),
            ("mean_observed_distinct", fmt_f64(summary.mean_observed_distinct)),
        ];
        if let Some(x) = analytic {
            rows.push(("analytic_expected_unseen", fmt_f64(x)));
        }
        field_rows(&rows)
    })
}

fn sweep(a: SweepArgs) -> Result<Output> {
    let inputs = digests(Some(&a.input), &a.verify, &a.cluster)?;
    let loaded = load(&a.input, &a.verify, &a.cluster)?;
    let hist = loaded.histogram();
    if hist.n_seen() == 0 {
        return Err(knowsum_core::Error::EmptyInput("no observations to sweep over".into()).into());
    }
    let (axis, points) = match (&a.t_grid, &a.k_grid) {
        (Some(g), None) => ("t", sweep_t(&hist, a.k.unwrap_or(DEFAULT_K), &g.0)?),
        (None, Some(g)) => ("k", sweep_k(&hist, a.t.unwrap_or(DEFAULT_T), &g.0)?),
        _ => return Err(Error::Usage("give exactly one of --t-grid, --k-grid".into())),
    };
    let result = json!({
        "axis": axis,
        "n_seen": hist.n_seen(),
        "points": points,
        "pipeline": loaded.pipeline(),
    });
    emit("sweep", &a, inputs, &result, a.format.unwrap_or(Format::Json), || {
        csv_table(
            &[axis, "unseen", "skr"],
            points.iter().map(|p| {
                let x = if axis == "t" { fmt_f64(p.t) } else { p.k.to_string() };
                vec![x, fmt_f64(p.unseen), fmt_f64(p.skr)]
            }),
        )
    })
}

fn cluster(a: ClusterArgs) -> Result<Output> {
    let responses = a.responses.as_deref().ok_or_else(|| Error::Usage("--responses is required".into()))?;
    let input = InputArgs { responses: Some(responses.to_path_buf()), ..Default::default() };
    let inputs = digests(Some(&input), &a.verify, &a.cluster)?;
    let run = run_pipeline(&io::read_responses(responses)?, &a.verify, &a.cluster)?;
    let counts = run.labels.counts();
    let csv = io::counts_csv(&counts)?;
    let result = json!({
        "summary": run.summary,
        "histogram": histogram_json(&PrevalenceHistogram::from_counts(&counts)),
        "rejections": run.verification.rejected,
    });
    let report = emit("cluster", &a, inputs, &result, a.format.unwrap_or(Format::Json), || {
        let mut rows: Vec<Vec<String>> =
            run.summary.rejected_by_reason.iter().map(|(r, n)| vec![r.to_string(), n.to_string()]).collect();
        rows.insert(0, vec!["valid".into(), run.summary.valid.to_string()]);
        csv_table(&["reason", "count"], rows)
    })?;
    Ok(Output { text: csv, side_report: Some(report.text) })
}
