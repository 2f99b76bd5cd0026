//! The five Monte Carlo studies. Every replicate draws from its own random
//! streams, so results do not depend on the thread count or scheduling.

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use mlspec_core::embed::{Embedding, EstimatorRegistry, SubspaceEstimator};
use mlspec_core::infer::{
    chi2_cdf, chi2_quantile, clustering_error, kmeans_rows, membership_tests, variance_objects_true, SIGNIFICANCE_LEVEL,
};
use mlspec_core::linalg::{self, Mat, SymMatrix};
use mlspec_core::model::{
    balanced_labels, block_schedule, build_mlsbm, build_sim41, build_sim42, sample_layers, CosieModel, DenseStack,
    LayerSource, LayerStack, MembershipMatrix, ReplicateStream,
};

use crate::config::{ConfigError, ExperimentConfig, ExperimentKind};
use crate::emit::{McRecord, RunOutput, Status, SummaryRow, Timing};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Runs whichever study `cfg.kind` names.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    match cfg.kind {
        ExperimentKind::SubspaceError => run_subspace_error(cfg),
        ExperimentKind::PowerTable => run_power_table(cfg),
        ExperimentKind::NullDist => run_null_dist(cfg),
        ExperimentKind::Ellipse => run_ellipse(cfg),
        ExperimentKind::Community => run_community(cfg),
    }
}

fn expect_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    cfg.validate()?;
    if cfg.kind != kind {
        return Err(ConfigError::Invalid(format!("config is for {}, not {}", cfg.kind.as_str(), kind.as_str())).into());
    }
    Ok(())
}

fn model_error(e: impl std::fmt::Display) -> HarnessError {
    ConfigError::Invalid(format!("model construction failed: {e}")).into()
}

/// Collects the output of one replicate.
struct Recorder {
    replicate: u64,
    seed: u64,
    rho: f64,
    records: Vec<McRecord>,
    timings: Vec<Timing>,
}

impl Recorder {
    fn push(&mut self, subject: &str, metric: &str, value: f64, status: Status, note: String) {
        self.records.push(McRecord {
            replicate: self.replicate,
            seed: self.seed,
            rho: self.rho,
            subject: subject.to_string(),
            metric: metric.to_string(),
            value,
            status,
            note,
        });
    }

    fn ok(&mut self, subject: &str, metric: &str, value: f64) {
        self.push(subject, metric, value, Status::Ok, String::new());
    }

    fn failed(&mut self, subject: &str, metric: &str, note: impl ToString) {
        self.push(subject, metric, f64::NAN, Status::Failed, note.to_string());
    }

    fn time(&mut self, subject: &str, seconds: f64) {
        self.timings.push(Timing {
            replicate: self.replicate,
            rho: self.rho,
            subject: subject.to_string(),
            seconds,
        });
    }
}

/// Per-ρ fixed quantities shared by all replicates.
struct Context {
    rho: f64,
    model: CosieModel,
    membership: Option<MembershipMatrix>,
    expected: Option<DenseStack>,
}

impl Context {
    fn layers(&self, stream: &ReplicateStream) -> Layers<'_> {
        match &self.expected {
            Some(stack) => Layers::Expected(stack),
            None => Layers::Sampled(sample_layers(&self.model, stream)),
        }
    }
}

enum Layers<'a> {
    Sampled(LayerStack),
    Expected(&'a DenseStack),
}

impl Layers<'_> {
    fn source(&self) -> &dyn LayerSource {
        match self {
            Layers::Sampled(s) => s,
            Layers::Expected(s) => *s,
        }
    }
}

fn contexts(
    cfg: &ExperimentConfig,
    build: impl Fn(f64) -> std::result::Result<(CosieModel, Option<MembershipMatrix>), String>,
) -> Result<Vec<Context>> {
    cfg.rho
        .iter()
        .map(|&rho| {
            let (model, membership) = build(rho).map_err(model_error)?;
            let expected = cfg.noiseless.then(|| model.expected_stack());
            Ok(Context {
                rho,
                model,
                membership,
                expected,
            })
        })
        .collect()
}

/// Runs `work` for every (ρ, replicate) on a pool of `cfg.threads` workers
/// and returns the outputs in (ρ, replicate) order.
fn for_each_replicate(
    cfg: &ExperimentConfig,
    contexts: &[Context],
    work: impl Fn(usize, &Context, &ReplicateStream, &mut Recorder) + Sync,
) -> Result<(Vec<McRecord>, Vec<Timing>)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let slots: Vec<(usize, u64)> = (0..contexts.len())
        .flat_map(|c| (0..cfg.replicates as u64).map(move |r| (c, r)))
        .collect();
    let mut done: Vec<(usize, u64, Recorder)> = pool.install(|| {
        slots
            .par_iter()
            .map(|&(c, replicate)| {
                let stream = ReplicateStream::new(cfg.seed, ((c as u64) << 32) | replicate);
                let mut rec = Recorder {
                    replicate,
                    seed: stream.seed(),
                    rho: contexts[c].rho,
                    records: Vec::new(),
                    timings: Vec::new(),
                };
                work(c, &contexts[c], &stream, &mut rec);
                (c, replicate, rec)
            })
            .collect()
    });
    done.sort_by_key(|(c, r, _)| (*c, *r));
    let mut records = Vec::new();
    let mut timings = Vec::new();
    for (_, _, rec) in done {
        records.extend(rec.records);
        timings.extend(rec.timings);
    }
    Ok((records, timings))
}

fn build_estimators(cfg: &ExperimentConfig) -> Result<Vec<Box<dyn SubspaceEstimator>>> {
    let registry = EstimatorRegistry::with_builtins();
    cfg.estimators
        .iter()
        .map(|name| {
            registry
                .build(name, &cfg.tuning)
                .map_err(|e| ConfigError::Invalid(e.to_string()).into())
        })
        .collect()
}

fn timed_estimate(
    est: &dyn SubspaceEstimator,
    layers: &dyn LayerSource,
    d: usize,
    rec: &mut Recorder,
) -> std::result::Result<Embedding, String> {
    let start = Instant::now();
    let out = est.estimate(layers, d);
    rec.time(est.name(), start.elapsed().as_secs_f64());
    out.map_err(|e| e.to_string())
}

fn ok_values<'a>(
    records: &'a [McRecord],
    rho: f64,
    subject: &'a str,
    metric: &'a str,
) -> impl Iterator<Item = f64> + 'a {
    records
        .iter()
        .filter(move |r| r.rho == rho && r.subject == subject && r.metric == metric && r.status == Status::Ok)
        .map(|r| r.value)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn row(cfg: &ExperimentConfig, rho: f64, subject: &str, statistic: &str, value: f64, successes: usize) -> SummaryRow {
    SummaryRow {
        rho,
        subject: subject.to_string(),
        statistic: statistic.to_string(),
        value,
        successes,
        replicates: cfg.replicates,
    }
}

/// Two-to-infinity and spectral error of each estimator on the
/// quarter-circle model.
pub fn run_subspace_error(cfg: &ExperimentConfig) -> Result<RunOutput> {
    expect_kind(cfg, ExperimentKind::SubspaceError)?;
    let ctx = contexts(cfg, |rho| {
        build_sim41(cfg.n, cfg.m, cfg.a, cfg.b, rho)
            .map(|m| (m, None))
            .map_err(|e| e.to_string())
    })?;
    let estimators = build_estimators(cfg)?;
    let (records, timings) = for_each_replicate(cfg, &ctx, |_, c, stream, rec| {
        let layers = c.layers(stream);
        for est in &estimators {
            let name = est.name();
            match timed_estimate(est.as_ref(), layers.source(), cfg.d, rec) {
                Ok(emb) => match linalg::aligned_difference(&emb.basis, c.model.basis()) {
                    Ok(diff) => {
                        let note = if emb.diagnostics.degenerate_gap {
                            "degenerate eigengap"
                        } else {
                            ""
                        };
                        rec.push(
                            name,
                            "two_to_infinity",
                            linalg::two_to_infty(&diff),
                            Status::Ok,
                            note.into(),
                        );
                        rec.ok(name, "spectral", linalg::norms(&diff).spectral);
                        rec.ok(name, "iterations", emb.diagnostics.iterations as f64);
                        rec.ok(name, "converged", f64::from(u8::from(emb.diagnostics.converged)));
                    }
                    Err(e) => rec.failed(name, "two_to_infinity", e),
                },
                Err(e) => rec.failed(name, "two_to_infinity", e),
            }
        }
    })?;
    let mut summary = Vec::new();
    for c in &ctx {
        for est in &estimators {
            let name = est.name();
            let errs: Vec<f64> = ok_values(&records, c.rho, name, "two_to_infinity").collect();
            let ok = errs.len();
            summary.push(row(cfg, c.rho, name, "median_two_to_infinity", median(errs), ok));
            let spec: Vec<f64> = ok_values(&records, c.rho, name, "spectral").collect();
            summary.push(row(cfg, c.rho, name, "median_spectral", median(spec), ok));
            let iters: Vec<f64> = ok_values(&records, c.rho, name, "iterations").collect();
            summary.push(row(cfg, c.rho, name, "mean_iterations", mean(&iters), ok));
            summary.push(row(
                cfg,
                c.rho,
                name,
                "max_iterations",
                iters.iter().copied().fold(f64::NAN, f64::max),
                ok,
            ));
            let conv = ok_values(&records, c.rho, name, "converged")
                .filter(|&v| v == 1.0)
                .count();
            summary.push(row(cfg, c.rho, name, "converged", conv as f64, ok));
        }
    }
    Ok(RunOutput {
        records,
        summary,
        timings,
    })
}

fn mixed_membership_contexts(cfg: &ExperimentConfig) -> Result<Vec<Context>> {
    let n0 = cfg.n0.expect("validated");
    contexts(cfg, |rho| {
        build_sim42(cfg.n, n0, cfg.m, cfg.a, cfg.b, rho)
            .map(|(m, z)| (m, Some(z)))
            .map_err(|e| e.to_string())
    })
}

fn single_estimator(cfg: &ExperimentConfig) -> Result<Box<dyn SubspaceEstimator>> {
    if cfg.estimators.len() != 1 {
        return Err(ConfigError::Invalid(format!(
            "{} uses exactly one estimator, got {:?}",
            cfg.kind.as_str(),
            cfg.estimators
        ))
        .into());
    }
    Ok(build_estimators(cfg)?.remove(0))
}

fn pair_name(p: [usize; 2]) -> String {
    format!("{}-{}", p[0], p[1])
}

/// Embeds one replicate and runs the membership test for each 1-based pair,
/// recording statistic, p-value and rejection.
fn record_tests(
    cfg: &ExperimentConfig,
    est: &dyn SubspaceEstimator,
    c: &Context,
    stream: &ReplicateStream,
    pairs: &[[usize; 2]],
    rec: &mut Recorder,
) {
    let layers = c.layers(stream);
    let zero_based: Vec<(usize, usize)> = pairs.iter().map(|p| (p[0] - 1, p[1] - 1)).collect();
    let results = timed_estimate(est, layers.source(), cfg.d, rec).and_then(|emb| {
        let start = Instant::now();
        let out = membership_tests(layers.source(), &emb, &zero_based).map_err(|e| e.to_string());
        rec.time("membership_tests", start.elapsed().as_secs_f64());
        out
    });
    let reports = match results {
        Ok(r) => r,
        Err(e) => {
            for &p in pairs {
                rec.failed(&pair_name(p), "statistic", &e);
            }
            return;
        }
    };
    for (&p, report) in pairs.iter().zip(reports) {
        let name = pair_name(p);
        match report {
            Ok(r) => {
                rec.ok(&name, "statistic", r.statistic);
                rec.ok(&name, "p_value", r.p_value);
                rec.ok(&name, "reject", f64::from(u8::from(r.p_value < SIGNIFICANCE_LEVEL)));
                rec.ok(&name, "clamp_count", r.clamp_count as f64);
            }
            Err(e) => rec.failed(&name, "statistic", e),
        }
    }
}

fn rejection_row(cfg: &ExperimentConfig, records: &[McRecord], rho: f64, subject: &str) -> SummaryRow {
    let rejects: Vec<f64> = ok_values(records, rho, subject, "reject").collect();
    let rate = rejects.iter().sum::<f64>() / rejects.len() as f64;
    row(cfg, rho, subject, "rejection_rate", rate, rejects.len())
}

/// Rejection rates of the membership test over vertex pairs of increasing
/// membership separation `‖z_{i1} − z_{i2}‖`.
pub fn run_power_table(cfg: &ExperimentConfig) -> Result<RunOutput> {
    expect_kind(cfg, ExperimentKind::PowerTable)?;
    let ctx = mixed_membership_contexts(cfg)?;
    let est = single_estimator(cfg)?;
    let pairs = cfg.power_pairs();
    let (records, timings) = for_each_replicate(cfg, &ctx, |_, c, stream, rec| {
        record_tests(cfg, est.as_ref(), c, stream, &pairs, rec);
    })?;
    let mut summary = Vec::new();
    for c in &ctx {
        let z = c.membership.as_ref().expect("mixed-membership model");
        for &p in &pairs {
            let name = pair_name(p);
            let sep = z.profile_distance(p[0] - 1, p[1] - 1);
            summary.push(row(cfg, c.rho, &name, "separation", sep, cfg.replicates));
            summary.push(rejection_row(cfg, &records, c.rho, &name));
        }
    }
    Ok(RunOutput {
        records,
        summary,
        timings,
    })
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// The test statistic for a null pair, compared with `χ²_d`.
pub fn run_null_dist(cfg: &ExperimentConfig) -> Result<RunOutput> {
    expect_kind(cfg, ExperimentKind::NullDist)?;
    let ctx = mixed_membership_contexts(cfg)?;
    let est = single_estimator(cfg)?;
    let pair = cfg.null_pair();
    let (records, timings) = for_each_replicate(cfg, &ctx, |_, c, stream, rec| {
        record_tests(cfg, est.as_ref(), c, stream, &[pair], rec);
    })?;
    let name = pair_name(pair);
    let mut summary = Vec::new();
    for c in &ctx {
        let stats: Vec<f64> = ok_values(&records, c.rho, &name, "statistic").collect();
        let z = c.membership.as_ref().expect("mixed-membership model");
        summary.push(row(
            cfg,
            c.rho,
            &name,
            "separation",
            z.profile_distance(pair[0] - 1, pair[1] - 1),
            cfg.replicates,
        ));
        summary.push(row(
            cfg,
            c.rho,
            &name,
            "ks_distance",
            ks_distance(&stats, |x| chi2_cdf(cfg.d, x)),
            stats.len(),
        ));
        summary.push(row(cfg, c.rho, &name, "mean_statistic", mean(&stats), stats.len()));
        summary.push(rejection_row(cfg, &records, c.rho, &name));
    }
    Ok(RunOutput {
        records,
        summary,
        timings,
    })
}

/// Coverage of the `Γ_i`-based 95% ellipse for row `i` of the aligned
/// embedding error.
pub fn run_ellipse(cfg: &ExperimentConfig) -> Result<RunOutput> {
    expect_kind(cfg, ExperimentKind::Ellipse)?;
    let ctx = mixed_membership_contexts(cfg)?;
    let est = single_estimator(cfg)?;
    let vertex = cfg.ellipse_vertex();
    let subject = vertex.to_string();
    let d = cfg.d;
    let whiteners: Vec<Mat> = ctx
        .iter()
        .map(|c| {
            let gamma = variance_objects_true(&c.model, vertex - 1).map_err(model_error)?.gamma;
            linalg::inv_sqrt_spd(&SymMatrix::new(gamma).map_err(model_error)?).map_err(model_error)
        })
        .collect::<Result<_>>()?;
    let quantile = chi2_quantile(d, 1.0 - SIGNIFICANCE_LEVEL);
    let (records, timings) = for_each_replicate(cfg, &ctx, |ci, c, stream, rec| {
        let layers = c.layers(stream);
        let outcome = timed_estimate(est.as_ref(), layers.source(), d, rec)
            .and_then(|emb| linalg::aligned_difference(&emb.basis, c.model.basis()).map_err(|e| e.to_string()));
        match outcome {
            Ok(diff) => {
                let r = &whiteners[ci] * diff.row(vertex - 1).transpose();
                for a in 0..d {
                    rec.ok(&subject, &format!("r{}", a + 1), r[a]);
                }
                let norm2 = r.norm_squared();
                rec.ok(&subject, "r_norm2", norm2);
                rec.ok(&subject, "covered", f64::from(u8::from(norm2 <= quantile)));
            }
            Err(e) => rec.failed(&subject, "r_norm2", e),
        }
    })?;
    let mut summary = Vec::new();
    for c in &ctx {
        let covered: Vec<f64> = ok_values(&records, c.rho, &subject, "covered").collect();
        let ok = covered.len();
        summary.push(row(cfg, c.rho, &subject, "coverage", mean(&covered), ok));
        summary.push(row(cfg, c.rho, &subject, "chi2_quantile", quantile, ok));
        let comps: Vec<Vec<f64>> = (0..d)
            .map(|a| ok_values(&records, c.rho, &subject, &format!("r{}", a + 1)).collect())
            .collect();
        let means: Vec<f64> = comps.iter().map(|v| mean(v)).collect();
        for a in 0..d {
            summary.push(row(cfg, c.rho, &subject, &format!("mean_{}", a + 1), means[a], ok));
        }
        for a in 0..d {
            for b in a..d {
                let cov = comps[a]
                    .iter()
                    .zip(&comps[b])
                    .map(|(x, y)| (x - means[a]) * (y - means[b]))
                    .sum::<f64>()
                    / (ok.max(2) - 1) as f64;
                summary.push(row(cfg, c.rho, &subject, &format!("cov_{}{}", a + 1, b + 1), cov, ok));
            }
        }
    }
    Ok(RunOutput {
        records,
        summary,
        timings,
    })
}

/// Exact-recovery frequency of K-means on the embedding rows under a
/// multilayer block model.
pub fn run_community(cfg: &ExperimentConfig) -> Result<RunOutput> {
    expect_kind(cfg, ExperimentKind::Community)?;
    let labels = balanced_labels(cfg.n, cfg.k);
    let ctx = contexts(cfg, |rho| {
        let blocks = block_schedule(cfg.design, cfg.m, cfg.k, cfg.a, cfg.b, rho).map_err(|e| e.to_string())?;
        build_mlsbm(&labels, cfg.k, &blocks)
            .map(|(m, z)| (m, Some(z)))
            .map_err(|e| e.to_string())
    })?;
    let estimators = build_estimators(cfg)?;
    let (records, timings) = for_each_replicate(cfg, &ctx, |_, c, stream, rec| {
        let layers = c.layers(stream);
        for (e, est) in estimators.iter().enumerate() {
            let name = est.name();
            let outcome = timed_estimate(est.as_ref(), layers.source(), cfg.d, rec).and_then(|emb| {
                let mut rng = stream.aux_rng(e as u64);
                let start = Instant::now();
                let fit = kmeans_rows(
                    emb.basis.as_matrix(),
                    cfg.k,
                    cfg.kmeans.restarts,
                    cfg.kmeans.max_iters,
                    &mut rng,
                )
                .map_err(|e| e.to_string())?;
                rec.time("kmeans", start.elapsed().as_secs_f64());
                clustering_error(&fit.labels, &labels, cfg.k).map_err(|e| e.to_string())
            });
            match outcome {
                Ok(errors) => {
                    rec.ok(name, "errors", errors as f64);
                    rec.ok(name, "exact", f64::from(u8::from(errors == 0)));
                }
                Err(e) => rec.failed(name, "errors", e),
            }
        }
    })?;
    let mut summary = Vec::new();
    for c in &ctx {
        for est in &estimators {
            let name = est.name();
            let exact: Vec<f64> = ok_values(&records, c.rho, name, "exact").collect();
            let errors: Vec<f64> = ok_values(&records, c.rho, name, "errors").collect();
            summary.push(row(cfg, c.rho, name, "exact_recovery", mean(&exact), exact.len()));
            summary.push(row(cfg, c.rho, name, "mean_errors", mean(&errors), errors.len()));
            summary.push(row(
                cfg,
                c.rho,
                name,
                "max_errors",
                errors.iter().copied().fold(f64::NAN, f64::max),
                errors.len(),
            ));
        }
    }
    Ok(RunOutput {
        records,
        summary,
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny(kind: ExperimentKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::desk_preset(kind);
        cfg.replicates = 3;
        match kind {
            ExperimentKind::SubspaceError => {
                cfg.n = 20;
                cfg.m = 20;
                cfg.rho = vec![0.5];
            }
            ExperimentKind::Community => {
                cfg.n = 30;
                cfg.m = 20;
            }
            _ => {
                cfg.n = 40;
                cfg.n0 = Some(10);
                cfg.m = 20;
                cfg.rho = vec![0.5];
            }
        }
        cfg
    }

    #[test]
    fn every_kind_runs_and_records_are_ordered() {
        for kind in ExperimentKind::ALL {
            let out = run(&tiny(kind)).unwrap();
            assert!(!out.records.is_empty(), "{kind:?}");
            let keys: Vec<u64> = out.records.iter().map(|r| r.replicate).collect();
            assert!(keys.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(*keys.last().unwrap(), 2);
        }
    }

    #[test]
    fn wrong_kind_is_a_config_error() {
        let cfg = tiny(ExperimentKind::NullDist);
        assert!(matches!(run_power_table(&cfg), Err(HarnessError::Config(_))));
    }

    #[test]
    fn noiseless_bcjse_error_is_negligible() {
        let mut cfg = tiny(ExperimentKind::SubspaceError);
        cfg.noiseless = true;
        cfg.estimators = vec!["bcjse".into(), "sos".into()];
        cfg.tuning.r_outer = 30;
        cfg.tuning.s_inner = 30;
        cfg.replicates = 1;
        let out = run(&cfg).unwrap();
        let err = out.summary_value(0.5, "bcjse", "median_two_to_infinity").unwrap().value;
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn zero_signal_is_flagged() {
        let mut cfg = tiny(ExperimentKind::SubspaceError);
        cfg.rho = vec![0.0];
        cfg.estimators = vec!["base".into()];
        let out = run(&cfg).unwrap();
        assert!(out
            .records
            .iter()
            .filter(|r| r.metric == "two_to_infinity")
            .all(|r| r.note == "degenerate eigengap"));
    }

    #[test]
    fn noiseless_community_is_recovered() {
        let mut cfg = tiny(ExperimentKind::Community);
        cfg.noiseless = true;
        let out = run(&cfg).unwrap();
        assert_eq!(out.summary_value(0.2, "bcjse", "exact_recovery").unwrap().value, 1.0);
    }

    #[test]
    fn statistics_are_nonnegative() {
        let out = run(&tiny(ExperimentKind::NullDist)).unwrap();
        for r in out
            .records
            .iter()
            .filter(|r| r.metric == "statistic" && r.status == Status::Ok)
        {
            assert!(r.value >= 0.0);
        }
    }

    #[test]
    fn ks_of_exact_sample_is_within_critical_value() {
        use rand::Rng;
        // χ²_2 is exponential with mean 2.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sample: Vec<f64> = (0..1000).map(|_| -2.0 * (1.0 - rng.random::<f64>()).ln()).collect();
        assert!(ks_distance(&sample, |x| chi2_cdf(2, x)) <= 1.36 / (1000f64).sqrt());
        // Hand-checkable: a single point at the median.
        assert!((ks_distance(&[2.0 * 2f64.ln()], |x| chi2_cdf(2, x)) - 0.5).abs() < 1e-12);
    }
}
