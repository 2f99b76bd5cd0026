//! Quick end-to-end checks run by `mlspec selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mlspec_core::embed::{base, bcjse, BcjseConfig};
use mlspec_core::infer::chi2_sf;
use mlspec_core::linalg::{self, Mat};
use mlspec_core::model::{
    bias_matrix, build_mlsbm, mixed_schedule, sample_layers, Layer, LayerSource, LayerStack, ReplicateStream,
};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::emit::write_records_csv;
use crate::experiments::run;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn random_stack(n: usize, m: usize, p: f64, rng: &mut impl Rng) -> LayerStack {
    let layers = (0..m)
        .map(|_| {
            let edges: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| (i..n).map(move |j| (i, j)))
                .filter(|_| rng.random::<f64>() < p)
                .collect();
            Layer::from_upper_edges(n, &edges).expect("valid edges")
        })
        .collect();
    LayerStack::new(layers).expect("nonempty stack")
}

fn base_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = String::new();
    let passed = (0..5).all(|_| {
        let stack = random_stack(20, 8, 0.3, &mut rng);
        let reference = base(&stack, 2).expect("eigensolver");
        let ok = (1..=3).all(|s| {
            let out = bcjse(
                &stack,
                BcjseConfig {
                    d: 2,
                    r_outer: 1,
                    s_inner: s,
                },
            )
            .expect("eigensolver");
            out.basis == reference.basis
        });
        if !ok {
            worst = "single-pass output differs from the hollowed embedding".into();
        }
        ok
    });
    check("single outer pass equals hollowed embedding", passed, worst)
}

fn chi2_closed_form() -> Check {
    let worst = (0..200)
        .map(|i| {
            let x = i as f64 * 0.25;
            (chi2_sf(2, x) - (-x / 2.0).exp()).abs()
        })
        .fold(0.0, f64::max);
    check(
        "chi-square tail at 2 df",
        worst < 1e-12,
        format!("max abs error {worst:.2e}"),
    )
}

fn bias_identity() -> Check {
    let (n, m, samples) = (20, 20, 200);
    let labels: Vec<usize> = (0..n).map(|i| i * 2 / n).collect();
    let blocks = mixed_schedule(m, 0.8, 0.6, 0.5).expect("valid schedule");
    let (model, _) = build_mlsbm(&labels, 2, &blocks).expect("valid model");
    let mut mean = Mat::zeros(n, n);
    for r in 0..samples {
        mean += linalg::hollow(&sample_layers(&model, &ReplicateStream::new(3, r)).gram_sum()).into_inner();
    }
    mean /= samples as f64;
    let ppt = model.expected_stack().gram_sum().into_inner();
    let target = &ppt + bias_matrix(&model).as_matrix();
    let rel = (&mean - target).norm() / ppt.norm();
    check(
        "mean hollowed gram matches PP' + M",
        rel <= 0.05,
        format!("relative error {rel:.4}"),
    )
}

fn determinism() -> Check {
    let mut cfg = ExperimentConfig::desk_preset(ExperimentKind::NullDist);
    cfg.n = 40;
    cfg.n0 = Some(10);
    cfg.m = 20;
    cfg.rho = vec![0.5];
    cfg.replicates = 6;
    let bytes = |threads: usize| -> Option<Vec<u8>> {
        let mut c = cfg.clone();
        c.threads = threads;
        let out = run(&c).ok()?;
        let mut buf = Vec::new();
        write_records_csv(&out.records, &mut buf).ok()?;
        Some(buf)
    };
    let (one, three) = (bytes(1), bytes(3));
    let passed = one.is_some() && one == three;
    check("records identical across thread counts", passed, String::new())
}

pub fn run_all() -> Vec<Check> {
    vec![base_identity(), chi2_closed_form(), bias_identity(), determinism()]
}

#[cfg(test)]
mod tests {
    #[test]
    fn selftest_passes() {
        for c in super::run_all() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
