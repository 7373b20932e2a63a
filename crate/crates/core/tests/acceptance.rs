//! Acceptance suite. Run with
//! `cargo test --release -p rkconv --test acceptance -- --nocapture --test-threads 1`
//! to see one PASS/FAIL line per criterion.

use std::time::{Duration, Instant};

use rand::Rng;
use rkconv::experiments::{
    convergence_scan, deep_size_scan, kernel_check, loglog_slope, rep_rk_gram, sparse_rf_experiment,
    sparsity_scan, Engine, KernelCheckSpec, RandomFeatureSpec, ScanSpec, Topology,
};
use rkconv::kernelcore::Activation;
use rkconv::reservoir::{
    deep_run, features, init_state, run, sample_weights, step, DeepConfig, ReservoirConfig, WeightMode,
};
use rkconv::rkernel::{rk_gram, RKParams, RkTopology};
use rkconv::rng::{stream_rng, Stream};

fn report(id: u32, name: &str, pass: bool, detail: String, elapsed: Duration) {
    println!(
        "criterion {id:>2} {name}: {} ({detail}; {:.1} s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
}

fn erf_setting(topology: Topology) -> ScanSpec {
    ScanSpec::reference_setting(topology, Activation::Erf)
}

const S_LIST: [f64; 13] = [0.005, 0.01, 0.02, 0.03, 0.05, 0.075, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 1.0];

fn deep_n1_list() -> Vec<usize> {
    let mut v: Vec<usize> = (60..=270).step_by(15).collect();
    v.extend([190, 200, 209, 220, 235]);
    v.sort_unstable();
    v.dedup();
    v
}

#[test]
fn criterion_01_kernel_oracle_equivalence() {
    let start = Instant::now();
    let r = kernel_check(&KernelCheckSpec::default()).unwrap();
    let elapsed = start.elapsed();
    let worst = r.column("max_abs_diff").unwrap().iter().copied().fold(0.0, f64::max);
    let pass = worst <= 1e-8 && elapsed < Duration::from_secs(5);
    report(1, "kernel oracle equivalence", pass, format!("max |closed - quadrature| = {worst:.3e}"), elapsed);
    assert!(pass);
}

/// Kolmogorov-Smirnov p-value of a sample against the standard normal, with
/// the Stephens small-sample correction.
fn ks_normal_p(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let cdf = 0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2));
        d = d.max((i as f64 + 1.0) / n - cdf).max(cdf - i as f64 / n);
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        p += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
    }
    p.clamp(0.0, 1.0)
}

#[test]
fn criterion_02_reduction_identities() {
    let start = Instant::now();
    let mut checks = Vec::new();

    // leaky step at a = 1 against a direct implementation of the plain update
    let cfg = ReservoirConfig::new(64, 12, Activation::Erf).with_scales(0.9, 1.3).with_leak(1.0);
    let w = sample_weights(&cfg, &mut stream_rng(1, Stream::Weights { layer: 0 }));
    let x = init_state(64, &mut stream_rng(1, Stream::Initial { layer: 0, input: 0 }));
    let mut rng = stream_rng(1, Stream::Inputs);
    let input: Vec<f64> = (0..12).map(|_| rng.random::<f64>() - 0.5).collect();
    let wr = w.w_r.to_dense();
    let direct: Vec<f64> = (0..64)
        .map(|i| {
            let mut pre = 0.0;
            for j in 0..64 {
                pre += (0.9 * wr.get(i, j)) * x[j];
            }
            let mut drive = 0.0;
            for j in 0..12 {
                drive += (1.3 * w.w_i.get(i, j)) * input[j];
            }
            (1.0 / 8.0) * libm::erf(pre + drive)
        })
        .collect();
    checks.push(("leak=1 step", step(&x, &input, &w, &cfg).unwrap() == direct));
    let f = features(&x, &input, &w, &cfg).unwrap();
    checks.push(("features", f.iter().map(|v| v / 8.0).collect::<Vec<_>>() == direct));

    // a = 1 leaky kernel against the plain kernel, depth 1 deep against shallow
    for act in Activation::ALL {
        let vanilla = ScanSpec::reference_setting(Topology::Vanilla, act).with_reps(20).with_seed(5).with_point(0.8, 1.1);
        let mut leaky = vanilla.clone();
        leaky.topology = Topology::Leaky { leak: 1.0 };
        let mut deep1 = vanilla.clone();
        deep1.topology = Topology::Deep { sizes: vec![vanilla.n] };
        for seed in vanilla.seeds().into_iter().take(5) {
            let g = rep_rk_gram(&vanilla, seed, 0.8, 1.1).unwrap();
            checks.push(("a=1 leaky RK", rep_rk_gram(&leaky, seed, 0.8, 1.1).unwrap() == g));
            checks.push(("L=1 deep RK", rep_rk_gram(&deep1, seed, 0.8, 1.1).unwrap() == g));
        }
        let engine = Engine::default();
        let lv = convergence_scan(&vanilla, &engine).unwrap();
        let ld = convergence_scan(&deep1, &engine).unwrap();
        let ll = convergence_scan(&leaky, &engine).unwrap();
        checks.push(("L=1 deep RC metric", lv.column("L") == ld.column("L")));
        checks.push(("a=1 leaky RC metric", lv.column("L") == ll.column("L")));
    }

    // depth-1 deep trajectories against the shallow run
    let seq: Vec<Vec<f64>> = (0..6).map(|t| vec![0.1 * t as f64; 12]).collect();
    let shallow = run(&seq, &w, &cfg, &x, WeightMode::Fixed).unwrap();
    let deep = deep_run(&seq, &DeepConfig::new(vec![cfg.clone()]).unwrap(), std::slice::from_ref(&w), std::slice::from_ref(&x), WeightMode::Fixed).unwrap();
    checks.push(("L=1 deep_run", deep[0] == shallow));

    let p = RKParams::new(Activation::Sign, 1.2, 0.7);
    let inputs: Vec<Vec<Vec<f64>>> = (0..3).map(|m| (0..5).map(|t| vec![(m + t) as f64 * 0.2 - 0.3; 4]).collect()).collect();
    checks.push((
        "L=1 deep rk_gram",
        rk_gram(&inputs, &RkTopology::Deep(vec![p.clone()])).unwrap() == rk_gram(&inputs, &RkTopology::Single(p)).unwrap(),
    ));

    // s = 1 sampler: 1e5 entries against N(0, 1)
    let cfg = ReservoirConfig::new(317, 1, Activation::Erf).with_sparsity(1.0);
    let w = sample_weights(&cfg, &mut stream_rng(77, Stream::Weights { layer: 0 }));
    let entries: Vec<f64> = w.w_r.to_dense().data()[..100_000].to_vec();
    let p = ks_normal_p(entries);
    checks.push(("s=1 KS p > 0.01", p > 0.01));

    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let pass = failed.is_empty();
    report(
        2,
        "reduction identities",
        pass,
        format!("{} checks, KS p = {p:.3}, failed: {failed:?}", checks.len()),
        start.elapsed(),
    );
    assert!(pass);
}

fn mean_l(spec: &ScanSpec) -> f64 {
    convergence_scan(spec, &Engine::default()).unwrap().column("L").unwrap()[0]
}

fn criterion_3_specs() -> Vec<ScanSpec> {
    [50, 200, 800]
        .into_iter()
        .map(|n| erf_setting(Topology::Vanilla).with_n(n).with_reps(100).with_seed(3))
        .collect()
}

#[test]
fn criterion_03_convergence_rate() {
    let start = Instant::now();
    let l: Vec<f64> = criterion_3_specs().iter().map(mean_l).collect();
    let (r1, r2) = (l[0] / l[1], l[1] / l[2]);
    let elapsed = start.elapsed();
    let pass = (2.0..=8.0).contains(&r1) && (2.0..=8.0).contains(&r2) && elapsed < Duration::from_secs(120);
    report(
        3,
        "convergence rate",
        pass,
        format!("L(50), L(200), L(800) = {:.4e}, {:.4e}, {:.4e}; ratios {r1:.2}, {r2:.2}", l[0], l[1], l[2]),
        elapsed,
    );
    assert!(pass);
}

fn criterion_4_spec() -> ScanSpec {
    erf_setting(Topology::Vanilla).with_reps(1000).with_seed(4)
}

#[test]
fn criterion_04_sparse_equals_dense() {
    let start = Instant::now();
    let rep = sparsity_scan(&[200], &[0.8, 1.0], &criterion_4_spec(), &Engine::default()).unwrap();
    let l = rep.result.column("L").unwrap();
    let (sparse, dense) = (l[0], l[1]);
    let rel = (sparse - dense).abs() / dense;
    let elapsed = start.elapsed();
    let pass = rel <= 0.25 && elapsed < Duration::from_secs(300);
    report(
        4,
        "sparse equals dense",
        pass,
        format!("L(0.8) = {sparse:.4e}, L(1) = {dense:.4e}, relative gap {rel:.3}"),
        elapsed,
    );
    assert!(pass);
}

fn criterion_5_spec() -> ScanSpec {
    erf_setting(Topology::Vanilla).with_reps(1000).with_seed(5)
}

#[test]
fn criterion_05_sparsity_thresholds() {
    let start = Instant::now();
    let rep = sparsity_scan(&[100, 400, 1000], &S_LIST, &criterion_5_spec(), &Engine::default()).unwrap();
    let t: Vec<f64> = [100, 400, 1000].iter().map(|&n| rep.threshold(n).unwrap_or(f64::NAN)).collect();
    let elapsed = start.elapsed();
    let pass = t[0] >= t[1] && t[1] >= t[2] && t[2] <= 0.05 && elapsed < Duration::from_secs(1200);
    report(
        5,
        "sparsity thresholds",
        pass,
        format!("threshold(100, 400, 1000) = {}, {}, {}", t[0], t[1], t[2]),
        elapsed,
    );
    assert!(pass);
}

fn criterion_6_spec() -> ScanSpec {
    erf_setting(Topology::Deep { sizes: vec![200, 200] }).with_reps(500).with_seed(6)
}

#[test]
fn criterion_06_deep_size_u_shape() {
    let start = Instant::now();
    let n1 = deep_n1_list();
    let r = deep_size_scan(2 * 200 * 200, &n1, &criterion_6_spec(), &Engine::default()).unwrap();
    let l = r.column("L").unwrap();
    let at = |v: usize| l[n1.iter().position(|&x| x == v).unwrap()];
    let (argmin, _) = n1
        .iter()
        .zip(l)
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let elapsed = start.elapsed();
    let pass = at(60) > at(200) && at(270) > at(200) && (190..=235).contains(argmin) && elapsed < Duration::from_secs(900);
    report(
        6,
        "deep-size U-shape",
        pass,
        format!(
            "L(60) = {:.4e}, L(200) = {:.4e}, L(270) = {:.4e}, grid minimum at n1 = {argmin}",
            at(60),
            at(200),
            at(270)
        ),
        elapsed,
    );
    println!("    n1: {n1:?}");
    println!("    L : {:?}", l.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>());
    assert!(pass);
}

fn criterion_7_specs() -> [ScanSpec; 2] {
    let base = erf_setting(Topology::Leaky { leak: 0.5 }).with_reps(100).with_seed(7);
    [base.clone().with_point(1.0, 1.0), base.with_point(2.0, 0.04)]
}

#[test]
fn criterion_07_leaky_non_convergence_region() {
    let start = Instant::now();
    let [good, bad] = criterion_7_specs();
    let (lg, lb) = (mean_l(&good), mean_l(&bad));
    let pass = lb >= 10.0 * lg;
    // the deep topology is reported for reference
    let deep = erf_setting(Topology::Deep { sizes: vec![200, 200] }).with_reps(100).with_seed(7);
    let (dg, db) = (mean_l(&deep.clone().with_point(1.0, 1.0)), mean_l(&deep.with_point(2.0, 0.04)));
    report(
        7,
        "leaky non-convergence region",
        pass,
        format!(
            "leaky L(1, 1) = {lg:.4e}, L(2, 0.04) = {lb:.4e}, ratio {:.2}; deep ratio {:.2}",
            lb / lg,
            db / dg
        ),
        start.elapsed(),
    );
    assert!(pass);
}

fn criterion_8_spec() -> RandomFeatureSpec {
    RandomFeatureSpec {
        activation: Activation::Erf,
        d_list: vec![4, 16, 64],
        n_list: (0..=13).map(|k| 1usize << k).collect(),
        sparsity: 0.1,
        reps: 1000,
        master_seed: 8,
    }
}

#[test]
fn criterion_08_sparse_random_features() {
    let start = Instant::now();
    let spec = criterion_8_spec();
    let r = sparse_rf_experiment(&spec, &Engine::default()).unwrap();
    let l = r.column("l").unwrap();
    let k = spec.n_list.len();
    let curve = |di: usize, sparse: usize| &l[(2 * di + sparse) * k..(2 * di + sparse + 1) * k];
    let ns: Vec<f64> = spec.n_list.iter().map(|&n| n as f64).collect();
    let fit = 6..=13;
    let slopes: Vec<f64> = (0..spec.d_list.len())
        .map(|di| loglog_slope(&ns[fit.clone()], &curve(di, 0)[fit.clone()]))
        .collect();
    let dense_ratio = curve(0, 0)[13] / curve(0, 0)[10];
    let sparse_ratio = curve(0, 1)[13] / curve(0, 1)[10];
    let elapsed = start.elapsed();
    let pass = slopes.iter().all(|s| (s + 1.0).abs() <= 0.15)
        && sparse_ratio > 0.5
        && dense_ratio < 0.25
        && elapsed < Duration::from_secs(300);
    report(
        8,
        "sparse random features",
        pass,
        format!(
            "dense slopes {:?} for d = {:?}; d = {} ratios l(2^13)/l(2^10): dense {dense_ratio:.3}, sparse {sparse_ratio:.3}",
            slopes.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>(),
            spec.d_list,
            spec.d_list[0]
        ),
        elapsed,
    );
    assert!(pass);
}

#[test]
fn criterion_09_gram_properties() {
    let start = Instant::now();
    let mut specs: Vec<ScanSpec> = criterion_3_specs();
    specs.push(criterion_4_spec());
    specs.push(criterion_5_spec());
    specs.push(criterion_6_spec());
    specs.extend(criterion_7_specs());
    let mut count = 0usize;
    let mut worst_asym: f64 = 0.0;
    let mut worst_eig = f64::INFINITY;
    for spec in &specs {
        let (sr, si) = spec.operating_point().unwrap();
        for seed in spec.seeds() {
            let g = rep_rk_gram(spec, seed, sr, si).unwrap();
            worst_asym = worst_asym.max(g.asymmetry());
            worst_eig = worst_eig.min(g.min_eigenvalue());
            count += 1;
        }
    }
    let pass = worst_asym == 0.0 && worst_eig >= -1e-8;
    report(
        9,
        "Gram properties",
        pass,
        format!("{count} kernel Grams, max asymmetry {worst_asym:e}, min eigenvalue {worst_eig:.4e}"),
        start.elapsed(),
    );
    assert!(pass);
}

fn cli_bytes(args: &[&str], workers: &str, path: &std::path::Path) -> Vec<u8> {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_rkconv"))
        .args(args)
        .args(["--workers", workers, "--output", path.to_str().unwrap()])
        .output()
        .expect("spawn rkconv");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    std::fs::read(path).unwrap()
}

#[test]
fn criterion_10_cli_determinism() {
    let start = Instant::now();
    let commands: Vec<(&str, Vec<&str>)> = vec![
        ("check.csv", vec!["kernel-check"]),
        ("conv.csv", vec!["convergence", "--paper-defaults", "--n", "50", "--sigma-r", "1", "--sigma-i", "1", "--reps", "20", "--seed", "3"]),
        ("dense.json", vec!["sparsity", "--sizes", "200", "--levels", "0.8,1", "--reps", "20", "--seed", "4"]),
        ("levels.csv", vec!["sparsity", "--sizes", "100,400", "--reps", "4", "--seed", "5"]),
        ("deep.csv", vec!["deep-sizes", "--budget", "80000", "--n1", "120,200,240", "--reps", "5", "--seed", "6"]),
        ("opt.json", vec!["deep-sizes", "--optimize", "--budget", "5000", "--reps", "3", "--seed", "6"]),
        ("leaky.csv", vec!["convergence", "--leak", "0.5", "--sigma-r", "1,2", "--sigma-i", "0.04,1", "--reps", "10", "--seed", "7"]),
        ("cross.csv", vec!["cross-terms", "--paper-defaults", "--reps", "10", "--seed", "7"]),
        ("rf.csv", vec!["sparse-rf", "--dims", "4,16", "--features", "1,4,16,64,256,1024", "--reps", "50", "--seed", "8"]),
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut mismatched = Vec::new();
    for (file, args) in &commands {
        let a = cli_bytes(args, "1", &dir.path().join(format!("a-{file}")));
        let b = cli_bytes(args, "1", &dir.path().join(format!("b-{file}")));
        let c = cli_bytes(args, "2", &dir.path().join(format!("c-{file}")));
        if a.is_empty() || a != b || a != c {
            mismatched.push(args[0]);
        }
    }
    let pass = mismatched.is_empty();
    report(
        10,
        "CLI determinism",
        pass,
        format!("{} commands run three times (1, 1, 2 workers), mismatches {mismatched:?}", commands.len()),
        start.elapsed(),
    );
    assert!(pass);
}
