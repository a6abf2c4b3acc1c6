//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! to stderr (uncaptured) before asserting.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smkl::data_io::{split_labeled, write_labels, write_matrix, LabelMask};
use smkl::evaluation::{clustering_accuracy, evaluate, nmi, EvalMode};
use smkl::kernel_bank::{
    build_bank, gaussian_kernel, linear_kernel, pairwise_sq_dists, rescale_kernel, KernelBank,
    KernelKind, KernelMatrix, Recipe,
};
use smkl::numerics::{connected_components, symmetric_eigen};
use smkl::solver::{
    fit, fit_clustering, fit_kgl, fit_ssl, laplacian, objective, pmkl_update_theta, row_sq_dists,
    self_expression, kernel_fidelity, theta_from_residuals, update_k, update_p_ssl, update_s,
    FitOptions, Method, Task,
};
use smkl::synthetic::{three_blobs, two_moons};
use smkl::{DataMatrix, LabelVector, SolverConfig};

fn announce(criterion: u32, title: &str, passed: bool, detail: &str) {
    let line = format!(
        "acceptance {criterion:>2} [{}] {title}: {detail}\n",
        if passed { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
}

fn check(criterion: u32, title: &str, passed: bool, detail: String) {
    announce(criterion, title, passed, &detail);
    assert!(passed, "criterion {criterion} ({title}) failed: {detail}");
}

fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let z = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let m = &z * z.transpose() / n as f64;
    (&m + m.transpose()) * 0.5
}

fn bank_of(mats: Vec<DMatrix<f64>>) -> KernelBank {
    let kernels = mats
        .into_iter()
        .map(|m| KernelMatrix::new(m, KernelKind::Linear).unwrap())
        .collect();
    KernelBank::new(kernels, "random").unwrap()
}

/// Four kernels on random 3-D data: three Gaussian widths and a linear one.
fn random_instance(seed: u64, n: usize) -> KernelBank {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DataMatrix::new(DMatrix::from_fn(n, 3, |_, _| rng.random_range(-1.0..1.0))).unwrap();
    let (d2, dmax) = pairwise_sq_dists(&x);
    let mut kernels = Vec::new();
    for t in [0.05, 0.3, 2.0] {
        kernels.push(rescale_kernel(&gaussian_kernel(&d2, t, dmax).unwrap()).unwrap());
    }
    kernels.push(rescale_kernel(&linear_kernel(&x)).unwrap());
    KernelBank::new(kernels, "random4").unwrap()
}

#[test]
fn criterion_01_block_descent_monotonicity() {
    let start = Instant::now();
    let mut cfg = SolverConfig::default().with_clusters(3);
    cfg.adaptive_alpha = false;
    cfg.max_iter = 30;
    let mut worst_within = f64::NEG_INFINITY;
    let mut worst_across = f64::NEG_INFINITY;
    let mut iterations = 0;
    for seed in 0..10 {
        let bank = random_instance(seed, 40);
        cfg.seed = seed;
        // per-iteration check with w refreshed between iterations
        let r = fit(Method::Smkl(&bank), Task::Clustering, &cfg, &FitOptions::default()).unwrap();
        for h in &r.history {
            let slack = (h.objective - h.objective_before) / h.objective_before.abs().max(1.0);
            worst_within = worst_within.max(slack);
        }
        iterations += r.iterations;
        // w frozen for the whole run: the trace itself must descend
        let frozen = FitOptions {
            freeze_weights: true,
            ..Default::default()
        };
        let r = fit(Method::Smkl(&bank), Task::Clustering, &cfg, &frozen).unwrap();
        for pair in r.objective_trace.windows(2) {
            worst_across = worst_across.max((pair[1] - pair[0]) / pair[0].abs().max(1.0));
        }
        iterations += r.iterations;
    }
    let elapsed = start.elapsed();
    let passed = worst_within <= 1e-8 && worst_across <= 1e-8 && elapsed < Duration::from_secs(30);
    check(
        1,
        "block-descent monotonicity",
        passed,
        format!(
            "max relative increase within iterations {worst_within:.2e}, across frozen-w iterations {worst_across:.2e}, {iterations} iterations in {elapsed:.2?}"
        ),
    );
}

/// Dense Gaussian elimination with partial pivoting, independent of the
/// library's Cholesky path.
fn gauss_solve(mut a: DMatrix<f64>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
            .unwrap();
        a.swap_rows(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[(row, col)] / a[(col, col)];
            for k in col..n {
                a[(row, k)] -= f * a[(col, k)];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[(row, k)] * x[k]).sum();
        x[row] = (b[row] - tail) / a[(row, row)];
    }
    x
}

#[test]
fn criterion_02_s_update_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 2..=8 {
        for _ in 0..10 {
            let k = random_psd(n, &mut rng);
            let c = rng.random_range(1..=n.min(3));
            let z = DMatrix::from_fn(n, c, |_, _| rng.random_range(-1.0..1.0));
            let p = z.qr().q();
            let alpha = rng.random_range(0.0..3.0);
            let gamma = rng.random_range(0.1..2.0);
            let up = update_s(&k, &row_sq_dists(&p), alpha, gamma, None).unwrap();
            let a = &k + DMatrix::identity(n, n) * gamma;
            for i in 0..n {
                let rhs: Vec<f64> = (0..n)
                    .map(|j| {
                        let g: f64 = (0..c).map(|q| (p[(i, q)] - p[(j, q)]).powi(2)).sum();
                        k[(j, i)] - alpha * g / 4.0
                    })
                    .collect();
                let x = gauss_solve(a.clone(), rhs);
                for j in 0..n {
                    worst = worst.max((up.unconstrained[(j, i)] - x[j]).abs());
                }
            }
            cases += 1;
        }
    }
    check(
        2,
        "S update matches dense-solve oracle",
        worst <= 1e-6,
        format!("{cases} cases, n<=8, max column deviation {worst:.2e}"),
    );
}

#[test]
fn criterion_03_k_update_stationarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_ratio = 0.0f64;
    for case in 0..20 {
        let n = 2 + case % 7;
        let r = 1 + case % 4;
        let bank = bank_of((0..r).map(|_| random_psd(n, &mut rng)).collect());
        let s = DMatrix::from_fn(n, n, |_, _| rng.random_range(0.0..0.5));
        let w: Vec<f64> = (0..r).map(|_| rng.random_range(0.1..2.0)).collect();
        let beta = rng.random_range(0.1..5.0);
        let k = update_k(&s, &bank, &w, beta).unwrap();
        let f = |k: &DMatrix<f64>| self_expression(k, &s) + beta * kernel_fidelity(&bank, k, &w);
        // central differences along symmetric directions E_ij + E_ji
        let h = 1e-5;
        let mut grad2 = 0.0;
        for i in 0..n {
            for j in i..n {
                let mut up = k.clone();
                let mut down = k.clone();
                up[(i, j)] += h;
                down[(i, j)] -= h;
                if i != j {
                    up[(j, i)] += h;
                    down[(j, i)] -= h;
                }
                let d = (f(&up) - f(&down)) / (2.0 * h);
                grad2 += d * d;
            }
        }
        worst_ratio = worst_ratio.max(grad2.sqrt() / (1.0 + f(&k).abs()));
    }
    check(
        3,
        "K update is stationary (finite differences)",
        worst_ratio <= 1e-5,
        format!("20 cases, max |grad| / (1 + objective) = {worst_ratio:.2e}"),
    );
}

#[test]
fn criterion_04_theta_update_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_constraint = 0.0f64;
    for _ in 0..100 {
        let f = [rng.random_range(1e-3..10.0), rng.random_range(1e-3..10.0)];
        let t = theta_from_residuals(&f).unwrap();
        worst_constraint = worst_constraint.max((t[0].sqrt() + t[1].sqrt() - 1.0).abs());
        let value = t[0] * f[0] + t[1] * f[1];
        for step in 0..=1000 {
            let u = step as f64 * 1e-3;
            let grid = u * u * f[0] + (1.0 - u) * (1.0 - u) * f[1];
            worst_gap = worst_gap.max(value - grid);
        }
    }
    // through the bank path as well
    let h = random_psd(5, &mut rng);
    let bank = bank_of(vec![h.clone(), h * 3.0]);
    let s = DMatrix::from_fn(5, 5, |_, _| rng.random_range(0.0..0.3));
    let t = pmkl_update_theta(&bank, &s).unwrap();
    worst_constraint = worst_constraint.max((t[0].sqrt() + t[1].sqrt() - 1.0).abs());
    let passed = worst_gap <= 1e-12 && worst_constraint <= 1e-8;
    check(
        4,
        "theta update beats the constraint grid",
        passed,
        format!("100 random f, worst excess over grid {worst_gap:.2e}, constraint error {worst_constraint:.2e}"),
    );
}

fn zero_multiplicity(w: &DMatrix<f64>) -> usize {
    let eig = symmetric_eigen(&laplacian(w)).unwrap();
    eig.values.iter().filter(|&&v| v < 1e-8).count()
}

#[test]
fn criterion_05_components_equal_zero_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    for case in 0..100 {
        let blocks = rng.random_range(2..=5);
        let n = rng.random_range(blocks * 2..=60);
        // random block sizes, then a random relabeling of the nodes
        let mut sizes = vec![1usize; blocks];
        for _ in 0..(n - blocks) {
            sizes[rng.random_range(0..blocks)] += 1;
        }
        let mut block_of = Vec::new();
        for (b, &s) in sizes.iter().enumerate() {
            block_of.extend(std::iter::repeat_n(b, s));
        }
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            block_of.swap(i, j);
        }
        let sparse = case % 2 == 1;
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                if block_of[i] == block_of[j] && (!sparse || rng.random::<f64>() < 0.3) {
                    let v = rng.random_range(0.1..1.0);
                    w[(i, j)] = v;
                    w[(j, i)] = v;
                }
            }
        }
        let components = connected_components(&w, 0.0).count;
        let zeros = zero_multiplicity(&w);
        // dense blocks are connected by construction; sparse ones may split
        let expected_ok = sparse || components == blocks;
        if components != zeros || !expected_ok {
            mismatches += 1;
        }
    }
    check(
        5,
        "Laplacian zero multiplicity equals component count",
        mismatches == 0,
        format!("100 random block graphs (half sparsified), {mismatches} mismatches"),
    );
}

fn random_connected_graph(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(n, n);
    for i in 1..n {
        let j = rng.random_range(0..i);
        let v = rng.random_range(0.2..1.0);
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < 0.25 {
                let v = rng.random_range(0.2..1.0);
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    w
}

#[test]
fn criterion_06_harmonic_fixed_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_avg = 0.0f64;
    let mut worst_prop = 0.0f64;
    for case in 0..20 {
        let n = 6 + case * 2;
        let c = 2 + case % 3;
        let w = random_connected_graph(n, &mut rng);
        let l = laplacian(&w);
        let labeled: Vec<usize> = (0..c).chain((c..n).filter(|_| rng.random::<f64>() < 0.2)).collect();
        let mask = LabelMask::new(n, labeled).unwrap();
        let y = DMatrix::from_fn(mask.labeled().len(), c, |r, k| {
            let class = if r < c { r } else { (r * 7) % c };
            if class == k { 1.0 } else { 0.0 }
        });
        let p = update_p_ssl(&l, &y, &mask, 1e-8).unwrap();
        // neighbour-average property
        for &i in mask.unlabeled() {
            let deg: f64 = (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
            for k in 0..c {
                let avg: f64 = (0..n).filter(|&j| j != i).map(|j| w[(i, j)] * p[(j, k)]).sum::<f64>() / deg;
                worst_avg = worst_avg.max((avg - p[(i, k)]).abs());
            }
        }
        // iterative label propagation from zero
        let mut q = DMatrix::zeros(n, c);
        for (r, &i) in mask.labeled().iter().enumerate() {
            q.set_row(i, &y.row(r));
        }
        for _ in 0..10_000 {
            let prev = q.clone();
            for &i in mask.unlabeled() {
                let deg: f64 = (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
                for k in 0..c {
                    let s: f64 = (0..n).filter(|&j| j != i).map(|j| w[(i, j)] * prev[(j, k)]).sum();
                    q[(i, k)] = s / deg;
                }
            }
        }
        worst_prop = worst_prop.max((&q - &p).amax());
    }
    // chain 1-2-3 with the ends labeled
    let mut chain = DMatrix::zeros(3, 3);
    for (i, j) in [(0, 1), (1, 2)] {
        chain[(i, j)] = 1.0;
        chain[(j, i)] = 1.0;
    }
    let mask = LabelMask::new(3, vec![0, 2]).unwrap();
    let y = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
    let p = update_p_ssl(&laplacian(&chain), &y, &mask, 1e-8).unwrap();
    let chain_err = (p[(1, 0)] - 0.5).abs().max((p[(1, 1)] - 0.5).abs());
    let passed = worst_avg <= 1e-6 && worst_prop <= 1e-6 && chain_err <= 1e-6;
    check(
        6,
        "harmonic solution is the propagation fixed point",
        passed,
        format!(
            "20 graphs n<=44: neighbour-average error {worst_avg:.2e}, propagation gap {worst_prop:.2e}; chain error {chain_err:.2e}"
        ),
    );
}

struct BlobRun {
    acc: f64,
    nmi: f64,
    worst_kgl: f64,
    components: usize,
    elapsed: Duration,
}

/// SMKL and every single-kernel KGL fit on the ten blob seeds; shared by
/// criteria 7 and 10.
fn blob_runs() -> &'static Vec<BlobRun> {
    static RUNS: OnceLock<Vec<BlobRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        (0..10)
            .map(|seed| {
                let start = Instant::now();
                let blobs = three_blobs(150, seed).unwrap();
                let bank = build_bank(&blobs.data, &Recipe::Clustering12).unwrap();
                let mut cfg = SolverConfig::default().with_clusters(3);
                cfg.seed = seed;
                let r = fit_clustering(&bank, &cfg).unwrap();
                let acc = clustering_accuracy(&r.labels, &blobs.classes).unwrap();
                let nmi = nmi(&r.labels, &blobs.classes).unwrap();
                let s = r.s();
                let components = connected_components(s, 1e-8 * s.max()).count;
                let worst_kgl = (0..bank.len())
                    .map(|i| {
                        let k = fit_kgl(bank.get(i).unwrap(), &cfg).unwrap();
                        clustering_accuracy(&k.labels, &blobs.classes).unwrap()
                    })
                    .fold(f64::INFINITY, f64::min);
                BlobRun {
                    acc,
                    nmi,
                    worst_kgl,
                    components,
                    elapsed: start.elapsed(),
                }
            })
            .collect()
    })
}

#[test]
fn criterion_07_blob_clustering() {
    let runs = blob_runs();
    let good = runs.iter().filter(|r| r.acc >= 0.95 && r.nmi >= 0.90).count();
    let beats_worst = runs.iter().all(|r| r.acc >= r.worst_kgl);
    let slowest = runs.iter().map(|r| r.elapsed).max().unwrap();
    let min_acc = runs.iter().map(|r| r.acc).fold(1.0, f64::min);
    let min_nmi = runs.iter().map(|r| r.nmi).fold(1.0, f64::min);
    let passed = good >= 9 && beats_worst && slowest < Duration::from_secs(60);
    check(
        7,
        "three-blob clustering",
        passed,
        format!(
            "{good}/10 seeds with Acc>=0.95 and NMI>=0.90 (min Acc {min_acc:.3}, min NMI {min_nmi:.3}); SMKL >= worst KGL on every seed: {beats_worst}; slowest seed {slowest:.2?}"
        ),
    );
}

#[test]
fn criterion_08_two_moons_ssl() {
    let start = Instant::now();
    let moons = two_moons(200, 0.05, 8).unwrap();
    let bank = build_bank(&moons.data, &Recipe::Ssl7).unwrap();
    let truth = LabelVector::from_classes(&moons.classes).unwrap();
    let mut accs = Vec::new();
    for k in 0..20u64 {
        let mask = split_labeled(&truth, 0.1, k).unwrap();
        let mut cfg = SolverConfig::default();
        cfg.alpha = 0.01;
        cfg.gamma = 0.1;
        cfg.adaptive_alpha = false;
        cfg.seed = k;
        let r = fit_ssl(&bank, &truth, &mask, &cfg).unwrap();
        let report = evaluate(&r.labels, &moons.classes, Some(mask.unlabeled()), EvalMode::Ssl).unwrap();
        accs.push(report.acc);
    }
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    let elapsed = start.elapsed();
    let passed = mean >= 0.90 && elapsed < Duration::from_secs(120);
    check(
        8,
        "two-moons semi-supervised",
        passed,
        format!("20 repeats at 10% labels: mean unlabeled accuracy {mean:.4}, {elapsed:.2?}"),
    );
}

fn permutations(items: Vec<usize>) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.clone();
        let head = rest.remove(i);
        for mut tail in permutations(rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

#[test]
fn criterion_09_metric_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mismatches = 0;
    for _ in 0..200 {
        let c = rng.random_range(1..=6);
        let n = rng.random_range(1..60);
        let pred: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let brute = permutations((0..c).collect())
            .into_iter()
            .map(|perm| pred.iter().zip(&truth).filter(|(&p, &t)| perm[p] == t).count())
            .max()
            .unwrap() as f64
            / n as f64;
        if (clustering_accuracy(&pred, &truth).unwrap() - brute).abs() > 1e-12 {
            mismatches += 1;
        }
    }
    let x = [0, 0, 1, 1, 2, 2, 2];
    let self_nmi = nmi(&x, &x).unwrap();
    let independent = nmi(&[0, 1, 0, 1], &[0, 0, 1, 1]).unwrap();
    let passed = mismatches == 0 && (self_nmi - 1.0).abs() <= 1e-12 && independent.abs() <= 1e-12;
    check(
        9,
        "accuracy and NMI oracles",
        passed,
        format!(
            "200 random cases c<=6: {mismatches} accuracy mismatches; nmi(x,x)={self_nmi}, independent nmi={independent:e}"
        ),
    );
}

#[test]
fn criterion_10_structural_convergence() {
    let runs = blob_runs();
    let exact = runs.iter().filter(|r| r.components == 3).count();
    let counts: Vec<usize> = runs.iter().map(|r| r.components).collect();
    check(
        10,
        "converged graph has exactly c components",
        exact >= 8,
        format!("{exact}/10 seeds with 3 components at tol 1e-8*max(S): {counts:?}"),
    );
}

fn write_inputs(dir: &Path, data: &DataMatrix, classes: &[usize]) {
    write_matrix(dir.join("x.csv"), data.values(), ',').unwrap();
    write_labels(dir.join("y.txt"), classes).unwrap();
}

fn run_cli(spec: &Path, out_dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_smkl"))
        .arg("run")
        .arg(spec)
        .arg("--out-dir")
        .arg(out_dir)
        .output()
        .unwrap()
}

fn body(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    text.split_once('\n').map(|(_, rest)| rest.to_string()).unwrap_or_default()
}

#[test]
fn criterion_11_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let blobs = three_blobs(60, 11).unwrap();
    write_inputs(dir.path(), &blobs.data, &blobs.classes);
    let specs = [
        (
            "clustering.txt",
            "data=x.csv\nlabels=y.txt\nmethod=smkl,kgl,pmkl\nkernel_index=best\nrecipe=ssl7\nsweep.alpha=0.5,1\nsave_matrices=true\n",
        ),
        (
            "ssl.txt",
            "data=x.csv\nlabels=y.txt\nmode=ssl\nmethod=smkl,pmkl\nlabel_fraction=0.1,0.3\nrepeats=3\nsolver.alpha=0.01\nsolver.gamma=0.1\nsave_matrices=true\n",
        ),
    ];
    let mut identical = true;
    let mut compared = 0;
    for (name, text) in specs {
        let spec = dir.path().join(name);
        fs::write(&spec, text).unwrap();
        let a = dir.path().join(format!("{name}.a"));
        let b = dir.path().join(format!("{name}.b"));
        assert_eq!(run_cli(&spec, &a).status.code(), Some(0));
        assert_eq!(run_cli(&spec, &b).status.code(), Some(0));
        identical &= body(&a.join("report.txt")) == body(&b.join("report.txt"));
        for file in ["report.csv", "labels.txt", "S.csv", "K.csv"] {
            identical &= fs::read(a.join(file)).unwrap() == fs::read(b.join(file)).unwrap();
            compared += 1;
        }
        compared += 1;
    }
    check(
        11,
        "identical specs give byte-identical reports",
        identical,
        format!("{compared} output files compared across two clustering and ssl runs"),
    );
}

#[test]
fn criterion_12_benchmark_protocols() {
    let dir = tempfile::tempdir().unwrap();
    let blobs = three_blobs(60, 12).unwrap();
    write_inputs(dir.path(), &blobs.data, &blobs.classes);
    let table2 = dir.path().join("table2.txt");
    fs::write(
        &table2,
        "data=x.csv\nlabels=y.txt\nmode=clustering\nmethod=smkl,kgl,pmkl\nrecipe=clustering12\nkernel_index=best\n",
    )
    .unwrap();
    let out2 = dir.path().join("t2");
    let status2 = run_cli(&table2, &out2).status.code();
    let rows2 = csv::Reader::from_path(out2.join("report.csv"))
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect::<Vec<_>>();
    let methods2: Vec<String> = rows2.iter().map(|r| r[0].to_string()).collect();
    let ok2 = status2 == Some(0)
        && rows2.len() == 14
        && methods2.iter().filter(|m| *m == "kgl").count() == 12
        && rows2.iter().all(|r| &r[13] == "ok" && r[6].parse::<f64>().is_ok() && r[8].parse::<f64>().is_ok());

    let moons = two_moons(60, 0.05, 12).unwrap();
    let ssl_dir = dir.path().join("ssl");
    fs::create_dir_all(&ssl_dir).unwrap();
    write_inputs(&ssl_dir, &moons.data, &moons.classes);
    let table3 = ssl_dir.join("table3.txt");
    fs::write(
        &table3,
        "data=x.csv\nlabels=y.txt\nmode=ssl\nmethod=smkl\nrecipe=ssl7\nlabel_fraction=0.1,0.3,0.5\nrepeats=20\nsolver.alpha=0.01\nsolver.gamma=0.1\n",
    )
    .unwrap();
    let out3 = ssl_dir.join("t3");
    let status3 = run_cli(&table3, &out3).status.code();
    let rows3 = csv::Reader::from_path(out3.join("report.csv"))
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect::<Vec<_>>();
    let fractions: Vec<String> = rows3.iter().map(|r| r[2].to_string()).collect();
    let ok3 = status3 == Some(0)
        && fractions == ["0.1", "0.3", "0.5"]
        && rows3.iter().all(|r| &r[12] == "20" && r[7].parse::<f64>().is_ok());
    let report3 = fs::read_to_string(out3.join("report.txt")).unwrap();
    let ok3 = ok3 && report3.matches('±').count() >= 3;

    check(
        12,
        "benchmark protocols run from a spec file",
        ok2 && ok3,
        format!(
            "clustering protocol: exit {status2:?}, {} rows (smkl + 12 kgl + pmkl); ssl protocol: exit {status3:?}, fractions {fractions:?} x 20 repeats",
            rows2.len()
        ),
    );
}

#[test]
fn objective_helper_agrees_with_fit_trace() {
    // the recorded trace is the full objective evaluated by the public helper
    let bank = random_instance(99, 20);
    let mut cfg = SolverConfig::default().with_clusters(2);
    cfg.adaptive_alpha = false;
    cfg.max_iter = 3;
    let frozen = FitOptions {
        freeze_weights: true,
        ..Default::default()
    };
    let r = fit(Method::Smkl(&bank), Task::Clustering, &cfg, &frozen).unwrap();
    let v = objective(r.s(), &r.k, &r.p, &r.weights, &bank, cfg.alpha, cfg.beta, cfg.gamma);
    let last = *r.objective_trace.last().unwrap();
    assert!((v - last).abs() <= 1e-9 * last.abs().max(1.0));
}
