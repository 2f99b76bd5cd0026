//! Acceptance suite: one line per criterion; exits non-zero unless the failures match the documented set.

#[path = "../../core/tests/support/jacobi.rs"]
mod jacobi;

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mlspec::config::{ExperimentConfig, ExperimentKind};
use mlspec::emit::{emit, RunOutput, Status};
use mlspec::{ks_distance, run};
use mlspec_core::embed::{bcjse, BcjseConfig};
use mlspec_core::infer::chi2_cdf;
use mlspec_core::linalg::{self, Mat, SymMatrix};
use mlspec_core::model::{build_mlsbm, mixed_schedule, sample_layers, Layer, LayerSource, LayerStack, ReplicateStream};

type Verdict = (bool, String);

// Criteria that fail for reasons documented in the README. Any other failure,
// or one of these starting to pass, fails the run.
const KNOWN_FAILURES: &[usize] = &[7];

fn random_stack(rng: &mut impl Rng) -> LayerStack {
    let n = rng.random_range(5..=40);
    let m = rng.random_range(1..=20);
    let p = rng.random_range(0.05..0.6);
    let layers = (0..m)
        .map(|_| {
            let edges: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| (i..n).map(move |j| (i, j)))
                .filter(|_| rng.random::<f64>() < p)
                .collect();
            Layer::from_upper_edges(n, &edges).unwrap()
        })
        .collect();
    LayerStack::new(layers).unwrap()
}

fn base_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut mismatches = 0;
    for _ in 0..20 {
        let stack = random_stack(&mut rng);
        let n = stack.n();
        let mut hollowed = Mat::zeros(n, n);
        for t in 0..stack.m() {
            let a = stack.layer(t).into_inner();
            hollowed += &a * &a;
        }
        hollowed.fill_diagonal(0.0);
        let d = rng.random_range(1..=3);
        let want = linalg::top_d_eigs(&SymMatrix::new(hollowed).unwrap(), d).unwrap();
        for s in 1..=3 {
            let got = bcjse(&stack, BcjseConfig::new(d, 1, s).unwrap()).unwrap();
            if got.basis != want.basis || got.eigenvalues != want.values {
                mismatches += 1;
            }
        }
    }
    (mismatches == 0, format!("{mismatches} of 60 runs differ"))
}

fn bias_identity() -> Verdict {
    let (n, m, rho, samples) = (30, 50, 0.3, 400);
    let labels: Vec<usize> = (0..n).map(|i| i * 2 / n).collect();
    let (model, _) = build_mlsbm(&labels, 2, &mixed_schedule(m, 0.8, 0.6, rho).unwrap()).unwrap();
    let mut mean = Mat::zeros(n, n);
    for r in 0..samples {
        let stack = sample_layers(&model, &ReplicateStream::new(55, r));
        mean += linalg::hollow(&stack.gram_sum()).into_inner();
    }
    mean /= samples as f64;
    let probs = model.probability_layers();
    let mut ppt = Mat::zeros(n, n);
    let mut bias = Mat::zeros(n, n);
    for p in &probs {
        let p = p.as_matrix();
        ppt += p * p;
        for i in 0..n {
            for j in 0..n {
                bias[(i, i)] -= p[(i, j)] * p[(i, j)];
            }
        }
    }
    let rel = (&mean - (&ppt + bias)).norm() / ppt.norm();
    (rel <= 0.05, format!("relative Frobenius error {rel:.4} (limit 0.05)"))
}

fn eigen_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut worst_value, mut worst_residual) = (0.0f64, 0.0f64);
    for case in 0..100 {
        let n = 1 + case % 12;
        let a = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = (&a + a.transpose()) * 0.5;
        let row_major: Vec<f64> = (0..n * n).map(|k| a[(k / n, k % n)]).collect();
        let (want, _) = jacobi::jacobi_eigen(&row_major, n);
        let (got, vectors) = linalg::sym_eigen(&SymMatrix::new(a.clone()).unwrap()).unwrap();
        for (k, (g, w)) in got.iter().zip(&want).enumerate() {
            worst_value = worst_value.max((g - w).abs());
            let v = vectors.column(k);
            worst_residual = worst_residual.max((&a * v - v * *g).norm());
        }
    }
    (
        worst_value <= 1e-9 && worst_residual <= 1e-9,
        format!("max eigenvalue gap {worst_value:.1e}, max residual {worst_residual:.1e}"),
    )
}

fn rejection(out: &RunOutput, rho: f64, subject: &str) -> f64 {
    out.summary_value(rho, subject, "rejection_rate").unwrap().value
}

fn size(out: &RunOutput, cfg: &ExperimentConfig) -> Verdict {
    let pair = format!("1-{}", cfg.n0.unwrap());
    let row = out.summary_value(0.04, &pair, "rejection_rate").unwrap();
    let rate = row.value;
    (
        (0.02..=0.10).contains(&rate),
        format!(
            "rejection rate {rate:.4} over {}/{} replicates",
            row.successes, row.replicates
        ),
    )
}

fn null_fit(out: &RunOutput, cfg: &ExperimentConfig) -> Verdict {
    let pair = format!("1-{}", cfg.n0.unwrap());
    let stats: Vec<f64> = out
        .records
        .iter()
        .filter(|r| r.subject == pair && r.metric == "statistic" && r.status == Status::Ok)
        .map(|r| r.value)
        .collect();
    let ks = ks_distance(&stats, |x| chi2_cdf(2, x));
    (
        ks <= 0.08,
        format!("KS distance {ks:.4} over {} statistics", stats.len()),
    )
}

fn power(out: &RunOutput) -> Verdict {
    let mut by_sep: Vec<(f64, f64)> = out
        .summary
        .iter()
        .filter(|r| r.statistic == "separation")
        .map(|r| (r.value, rejection(out, r.rho, &r.subject)))
        .collect();
    by_sep.sort_by(|a, b| a.0.total_cmp(&b.0));
    let top: Vec<(f64, f64)> = by_sep[by_sep.len() - 5..].to_vec();
    let drops: Vec<f64> = top.windows(2).map(|w| w[0].1 - w[1].1).filter(|&d| d > 0.0).collect();
    let monotone = drops.len() <= 1 && drops.iter().all(|&d| d <= 0.02);
    let last = top.last().unwrap().1;
    let table: Vec<String> = top.iter().map(|(s, p)| format!("{s:.3}:{p:.3}")).collect();
    (
        monotone && last >= 0.95,
        format!("separation:power {}", table.join(" ")),
    )
}

fn estimator_ordering() -> Verdict {
    let mut cfg = ExperimentConfig::desk_preset(ExperimentKind::SubspaceError);
    cfg.rho = vec![0.5];
    cfg.estimators = ["sos", "base", "hpca", "bcjse"].map(String::from).to_vec();
    cfg.tuning.r_outer = 2;
    cfg.tuning.s_inner = 1;
    let out = run(&cfg).unwrap();
    let med = |e: &str| out.summary_value(0.5, e, "median_two_to_infinity").unwrap().value;
    let (bc, base, sos, hpca) = (med("bcjse"), med("base"), med("sos"), med("hpca"));
    let ok = bc < base && bc < sos && (bc - hpca).abs() <= 0.10 * hpca;
    (
        ok,
        format!("median 2->inf: bcjse {bc:.4}, base {base:.4}, sos {sos:.4}, hpca {hpca:.4}"),
    )
}

fn exact_recovery() -> Verdict {
    let cfg = ExperimentConfig::desk_preset(ExperimentKind::Community);
    let out = run(&cfg).unwrap();
    let row = out.summary_value(0.2, "bcjse", "exact_recovery").unwrap();
    (
        row.value >= 0.95,
        format!(
            "exact recovery {:.3} over {}/{} replicates",
            row.value, row.successes, row.replicates
        ),
    )
}

fn ellipse() -> Verdict {
    let cfg = ExperimentConfig::desk_preset(ExperimentKind::Ellipse);
    let out = run(&cfg).unwrap();
    let subject = cfg.ellipse_vertex().to_string();
    let get = |s: &str| out.summary_value(0.04, &subject, s).unwrap().value;
    let coverage = get("coverage");
    let cov = [get("cov_11"), get("cov_12"), get("cov_22")];
    let cov_ok = (cov[0] - 1.0).abs() <= 0.2 && cov[1].abs() <= 0.2 && (cov[2] - 1.0).abs() <= 0.2;
    (
        (0.92..=0.98).contains(&coverage) && cov_ok,
        format!(
            "coverage {coverage:.4}, covariance [[{:.3}, {:.3}], [{:.3}, {:.3}]]",
            cov[0], cov[1], cov[1], cov[2]
        ),
    )
}

fn determinism() -> Verdict {
    let mut cfg = ExperimentConfig::desk_preset(ExperimentKind::PowerTable);
    cfg.replicates = 12;
    let dir = std::env::temp_dir().join(format!("mlspec-acceptance-{}", std::process::id()));
    let mut files = Vec::new();
    for threads in [1, 4] {
        cfg.threads = threads;
        let out = run(&cfg).unwrap();
        let emitted = emit(&out, &cfg, &dir.join(threads.to_string())).unwrap();
        files.push((
            std::fs::read(&emitted.records).unwrap(),
            std::fs::read(&emitted.summary_csv).unwrap(),
        ));
    }
    let _ = std::fs::remove_dir_all(&dir);
    let same = files[0] == files[1];
    (
        same,
        format!(
            "records.csv {} bytes, identical at 1 and 4 threads: {same}",
            files[0].0.len()
        ),
    )
}

fn main() -> ExitCode {
    // Criteria 4 to 6 share one run of the reduced mixed-membership design.
    let power_cfg = ExperimentConfig::desk_preset(ExperimentKind::PowerTable);
    let mut power_run: Option<RunOutput> = None;
    let mut shared = |f: &dyn Fn(&RunOutput) -> Verdict| {
        let out = power_run.get_or_insert_with(|| run(&power_cfg).unwrap());
        f(out)
    };
    let mut results = Vec::new();
    let mut record = |id: usize, name: &str, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let (ok, detail) = f();
        let verdict = match (ok, KNOWN_FAILURES.contains(&id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!(
            "criterion {id:>2} {verdict} {name}: {detail} [{:.1}s]",
            start.elapsed().as_secs_f64()
        );
        results.push((id, ok));
    };
    record(1, "single outer pass is the hollowed embedding", &mut base_identity);
    record(2, "bias identity", &mut bias_identity);
    record(3, "eigensolver against Jacobi", &mut eigen_oracle);
    record(4, "empirical size", &mut || shared(&|o| size(o, &power_cfg)));
    record(5, "null chi-square fit", &mut || shared(&|o| null_fit(o, &power_cfg)));
    record(6, "power behaviour", &mut || shared(&power));
    record(7, "estimator ordering", &mut estimator_ordering);
    record(8, "exact recovery", &mut exact_recovery);
    record(9, "ellipse coverage", &mut ellipse);
    record(10, "determinism across thread counts", &mut determinism);
    let failed: Vec<usize> = results.iter().filter(|(_, ok)| !ok).map(|(id, _)| *id).collect();
    println!(
        "acceptance: {} passed, {} failed {:?}",
        results.len() - failed.len(),
        failed.len(),
        failed
    );
    if failed == KNOWN_FAILURES {
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failures differ from the documented set {KNOWN_FAILURES:?}");
        ExitCode::FAILURE
    }
}
