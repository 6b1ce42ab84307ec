//! End-to-end acceptance checks. Each check prints one PASS/FAIL line; the
//! process exits non-zero if any fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use matnet::config::{stream_rng, DEFAULT_SEED};
use matnet::gradcheck::check_at;
use matnet::mnist::{self, MnistError, IMAGE_MAGIC, LABEL_MAGIC};
use matnet::{run_experiment, ExperimentConfig, ExperimentReport, RunOptions};
use matnet_core::gradient::{cost, network_param_gradient};
use matnet_core::network::{activation_deriv, forward};
use matnet_core::train::{residual_vector, Method};
use matnet_core::{Activation, Dataset, LayerSpec, NetworkGains, NetworkSpec, Sample};
use rand::Rng;

/// Max |sin x − ŷ| over [−π/2, π/2] of the best least-squares fit of the
/// sigmoid+linear sine network, from `tests/oracles/sine_oracle.py`.
const SINE_ORACLE_ERROR: f64 = 0.03025000537320932;
const GD_FALLBACK_SEEDS: u64 = 3;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn quiet(mut cfg: ExperimentConfig, methods: &[Method]) -> ExperimentConfig {
    cfg.methods = methods.to_vec();
    cfg.record_timing = false;
    cfg
}

fn run(cfg: &ExperimentConfig) -> ExperimentReport {
    run_experiment(cfg, &RunOptions::default()).expect("experiment runs")
}

fn random_net(rng: &mut impl Rng, activations: &[Activation]) -> NetworkSpec {
    let depth = rng.random_range(1..=3);
    let mut layers: Vec<LayerSpec> = (0..depth)
        .map(|_| {
            let a = activations[rng.random_range(0..activations.len())];
            LayerSpec::new(rng.random_range(1..=5), a)
        })
        .collect();
    let final_linear = if rng.random_bool(0.5) {
        Some(rng.random_range(1..=3))
    } else {
        let last = layers.last_mut().unwrap();
        last.width = last.width.min(3);
        None
    };
    NetworkSpec::new(rng.random_range(1..=5), layers, final_linear).unwrap()
}

fn random_data(spec: &NetworkSpec, count: usize, rng: &mut impl Rng) -> Dataset {
    Dataset::new(
        (0..count)
            .map(|_| {
                Sample::new(
                    (0..spec.input_width).map(|_| rng.random_range(-2.0..2.0)).collect(),
                    (0..spec.output_width()).map(|_| rng.random_range(-1.0..1.0)).collect(),
                )
            })
            .collect(),
    )
    .unwrap()
}

fn gradient_fidelity() -> Verdict {
    let start = Instant::now();
    let mut rng = stream_rng(1, 10);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let spec = random_net(&mut rng, &[Activation::Sigmoid]);
        let gains = NetworkGains::random(&spec, &mut rng);
        let data = random_data(&spec, 4, &mut rng);
        let err = check_at(&spec, &gains, &data)
            .unwrap()
            .expect("sigmoid nets have no kinks");
        worst = worst.max(err);
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst < 1e-5 && secs < 5.0,
        format!("max relative error {worst:.2e} (< 1e-5) over 20 nets in {secs:.3} s (< 5 s)"),
    )
}

fn two_neuron_closed_form() -> Verdict {
    let spec = NetworkSpec::new(2, vec![LayerSpec::new(2, Activation::Sigmoid)], Some(1)).unwrap();
    let mut rng = stream_rng(2, 10);
    let mut worst: f64 = 0.0;
    for _ in 0..25 {
        let gains = NetworkGains::random(&spec, &mut rng);
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let trace = forward(&spec, &gains, &x).unwrap();
        let g = network_param_gradient(&spec, &gains, &trace).unwrap();

        let theta1 = &gains.thetas[0];
        let theta2 = &gains.thetas[1];
        let chi = [x[0], x[1], 1.0];
        let z11 = chi[0] * theta1[(0, 0)] + chi[1] * theta1[(1, 0)] + chi[2] * theta1[(2, 0)];
        let x2 = &trace.layer_inputs[1];
        // ∂y/∂θ_21 = x_2ᵀ.
        for (c, v) in x2.iter().enumerate() {
            worst = worst.max((g.final_map[0][(0, c)] - v).abs());
        }
        // ∂y/∂θ_11 = Θ_2ᵀ σ_z(z_11) e_1 χ_1ᵀ = Θ_2[0] σ'(z_11) χ_1ᵀ.
        let scale = theta2[(0, 0)] * activation_deriv(Activation::Sigmoid, z11);
        for (c, v) in chi.iter().enumerate() {
            worst = worst.max((g.layers[0][0][(0, c)] - scale * v).abs());
        }
    }
    verdict(
        worst <= 1e-14,
        format!("max deviation {worst:.2e} (<= 1e-14) over 25 draws"),
    )
}

fn max_error(report: &ExperimentReport, m: Method) -> f64 {
    report.outcome(m).unwrap().max_probe_error
}

fn xor_root_finding() -> Verdict {
    let cfg = quiet(ExperimentConfig::xor(), &[Method::Fs]);
    let start = Instant::now();
    let report = run(&cfg);
    let secs = start.elapsed().as_secs_f64();
    let err = max_error(&report, Method::Fs);
    verdict(
        err < 1e-6 && secs < 1.0,
        format!(
            "seed {}: max |error| {err:.3e} (< 1e-6) in {secs:.3} s (< 1 s)",
            cfg.seed
        ),
    )
}

fn xor_gradient_descent() -> Verdict {
    let mut tried = Vec::new();
    for seed in DEFAULT_SEED..=DEFAULT_SEED + GD_FALLBACK_SEEDS {
        let report = run(&quiet(ExperimentConfig::xor().with_seed(seed), &[Method::Gd]));
        let o = report.outcome(Method::Gd).unwrap();
        let sides = o
            .predictions
            .iter()
            .zip(report.probes.iter())
            .all(|(y, s)| (y[0] > 0.5) == (s.target[0] > 0.5));
        if sides && o.max_probe_error < 0.15 {
            return verdict(
                true,
                format!("seed {seed}: max |error| {:.3e} (< 0.15)", o.max_probe_error),
            );
        }
        tried.push(format!("{seed}: {:.3e}", o.max_probe_error));
    }
    verdict(
        false,
        format!("no seed within 0.15 on the right side of 0.5 ({})", tried.join(", ")),
    )
}

fn xor_random_search() -> Verdict {
    let cfg = quiet(ExperimentConfig::xor(), &[Method::Rsm]);
    let report = run(&cfg);
    let o = report.outcome(Method::Rsm).unwrap();
    let costs = o.trace.costs();
    let monotone = costs.windows(2).all(|w| w[1] <= w[0]);
    verdict(
        o.max_probe_error < 1e-3 && monotone,
        format!(
            "seed {}: max |error| {:.3e} (< 1e-3), cost {:.3e} -> {:.3e}, non-increasing: {monotone}",
            cfg.seed,
            o.max_probe_error,
            costs[0],
            o.trace.final_cost()
        ),
    )
}

fn sine_root_finding() -> Verdict {
    let report = run(&quiet(ExperimentConfig::sine(), &[Method::Fs]));
    let err = max_error(&report, Method::Fs);
    let bound = 1.1 * SINE_ORACLE_ERROR;
    verdict(
        report.probes.len() == 1000 && err <= bound,
        format!(
            "max |sin x - y| {err:.5e} over {} probes (<= {bound:.5e} = 1.1 x oracle {SINE_ORACLE_ERROR:.5e})",
            report.probes.len()
        ),
    )
}

fn mnist_digits() -> Verdict {
    let cfg = quiet(
        ExperimentConfig::preset(matnet::ExperimentName::Mnist).unwrap(),
        &Method::ALL,
    );
    let start = Instant::now();
    let report = run(&cfg);
    let secs = start.elapsed().as_secs_f64();
    let summary: Vec<String> = report
        .outcomes
        .iter()
        .map(|o| {
            let acc = o.accuracy.as_ref().unwrap();
            format!(
                "{} cost {:.3e} {}/{}",
                o.method,
                o.trace.final_cost(),
                acc.total_correct(),
                acc.total()
            )
        })
        .collect();
    let best = report
        .outcomes
        .iter()
        .min_by(|a, b| a.trace.final_cost().total_cmp(&b.trace.final_cost()))
        .unwrap();
    let correct = best.accuracy.as_ref().unwrap().total_correct();
    let pass = best.trace.final_cost() < 1e-3 && correct >= 150 && secs < 600.0;
    verdict(
        pass,
        format!(
            "best {} (cost < 1e-3, >= 150/300 correct): {}; {secs:.1} s (< 600 s)",
            best.method,
            summary.join(", ")
        ),
    )
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Verdict {
    let mut details = Vec::new();
    let mut pass = true;
    let presets = [
        ("xor", ExperimentConfig::xor()),
        ("sine", ExperimentConfig::sine()),
        (
            "mnist",
            ExperimentConfig::preset(matnet::ExperimentName::Mnist).unwrap(),
        ),
    ];
    for (name, cfg) in presets {
        let cfg = quiet(cfg, &Method::ALL);
        // MNIST is slow enough that one sequential and one concurrent run
        // stand in for the repeat as well.
        let modes: &[(bool, usize)] = if name == "mnist" {
            &[(false, 1), (true, 2)]
        } else {
            &[(false, 1), (false, 1), (true, 2)]
        };
        let runs: Vec<_> = modes
            .iter()
            .map(|&(concurrent, threads)| {
                let dir = tempfile::tempdir().unwrap();
                let opts = RunOptions {
                    output_dir: Some(dir.path().to_owned()),
                    concurrent,
                    threads,
                };
                run_experiment(&cfg, &opts).unwrap();
                dir_bytes(dir.path())
            })
            .collect();
        let same = runs.iter().all(|r| *r == runs[0]);
        pass &= same;
        details.push(format!(
            "{name} {} files {}",
            runs[0].len(),
            if same { "identical" } else { "DIFFER" }
        ));
    }
    verdict(pass, format!("repeat and concurrent runs: {}", details.join(", ")))
}

fn residual_identity() -> Verdict {
    let mut rng = stream_rng(9, 10);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let spec = random_net(&mut rng, &[Activation::Sigmoid, Activation::Relu, Activation::Linear]);
        let gains = NetworkGains::random(&spec, &mut rng);
        let count = rng.random_range(1..=8);
        let data = random_data(&spec, count, &mut rng);
        let r = residual_vector(&spec, &gains, &data).unwrap();
        let norm2: f64 = r.iter().map(|v| v * v).sum();
        let c = cost(&spec, &gains, &data, 2).unwrap().value;
        worst = worst.max((norm2 - c).abs() / c.abs().max(f64::MIN_POSITIVE));
    }
    verdict(
        worst <= 1e-12,
        format!("max relative gap {worst:.2e} (<= 1e-12) over 50 nets"),
    )
}

fn idx_fixture() -> Verdict {
    #[rustfmt::skip]
    let images: Vec<u8> = vec![
        0x00, 0x00, 0x08, 0x03, // magic 2051
        0x00, 0x00, 0x00, 0x02, // 2 images
        0x00, 0x00, 0x00, 0x03, // 3 rows
        0x00, 0x00, 0x00, 0x03, // 3 cols
        0, 255, 17, 34, 51, 68, 85, 102, 119,
        255, 0, 1, 2, 3, 4, 5, 6, 254,
    ];
    #[rustfmt::skip]
    let labels: Vec<u8> = vec![
        0x00, 0x00, 0x08, 0x01, // magic 2049
        0x00, 0x00, 0x00, 0x02, // 2 labels
        4, 9,
    ];
    let mut problems = Vec::new();
    match mnist::parse(&images, &labels) {
        Ok(set) => {
            let expected: Vec<Vec<f64>> = [&images[16..25], &images[25..34]]
                .iter()
                .map(|px| px.iter().map(|&b| f64::from(b) / 255.0).collect())
                .collect();
            if set.images != expected || set.labels != [4, 9] || set.images[0][1] != 1.0 || set.images[0][0] != 0.0 {
                problems.push("pixel values".to_owned());
            }
        }
        Err(e) => problems.push(format!("parse failed: {e}")),
    }
    match mnist::parse_labels(&images) {
        Err(MnistError::Magic {
            found: IMAGE_MAGIC,
            expected: LABEL_MAGIC,
            ..
        }) => {}
        other => problems.push(format!("swapped magic gave {other:?}")),
    }
    for cut in [3, 12, images.len() - 1] {
        if !matches!(mnist::parse_images(&images[..cut]), Err(MnistError::Length { .. })) {
            problems.push(format!("truncation at {cut} not reported"));
        }
    }
    if !matches!(mnist::parse(&images, &labels[..9]), Err(MnistError::Length { .. })) {
        problems.push("labels truncation not reported".to_owned());
    }
    let detail = if problems.is_empty() {
        "2-image 3x3 fixture exact; bad magic and truncation rejected".to_owned()
    } else {
        problems.join("; ")
    };
    verdict(problems.is_empty(), detail)
}

type Check = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let checks: [Check; 10] = [
        ("gradient fidelity", gradient_fidelity),
        ("two-neuron closed form", two_neuron_closed_form),
        ("xor root finding", xor_root_finding),
        ("xor gradient descent", xor_gradient_descent),
        ("xor random search", xor_random_search),
        ("sine root finding", sine_root_finding),
        ("mnist digits", mnist_digits),
        ("determinism", determinism),
        ("residual identity", residual_identity),
        ("idx fixture", idx_fixture),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!("{} {id:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
