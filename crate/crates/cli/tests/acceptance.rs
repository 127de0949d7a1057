//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use dirac_cli::commands::gradcheck::{run_checks, ADJOINT_TOL, GRADIENT_TOL};
use dirac_core::bench::{
    best_f1_threshold, classify_scores, f1_score, generate_dataset, run_benchmark, BenchCase,
    BenchConfig, Confusion,
};
use dirac_core::datr::{datr_transform, DatrConfig};
use dirac_core::deda::{adjoint_check, deda_forward, deda_forward_seq};
use dirac_core::sampling::grid_sample;
use dirac_core::synth::{generate_lesion, rng, LesionKind, LesionSpec};
use dirac_core::transforms::{hough_lines, radon_projection};
use dirac_core::{FeatureMap, GridSet, KernelSpec, SamplingGrid};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn single_pool() -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("thread pool")
}

fn random_map<R: Rng>(r: &mut R, c: usize, dims: &[usize]) -> FeatureMap {
    let n = c * dims.iter().product::<usize>();
    FeatureMap::new(c, dims, (0..n).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
}

fn random_grids<R: Rng>(r: &mut R, n: usize, source: &[usize], target: &[usize]) -> GridSet {
    let plane: usize = source.iter().product();
    let grids = (0..n)
        .map(|_| {
            let coords = target
                .iter()
                .flat_map(|&t| (0..plane).map(move |_| t))
                .map(|t| r.random_range(-1.0..t as f64 + 1.0))
                .collect();
            SamplingGrid::new(target.len(), source, coords).unwrap()
        })
        .collect();
    GridSet::new(grids).unwrap()
}

fn first_argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn adjoint() -> Outcome {
    let mut r = rng(101);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for spec in [KernelSpec::Integer, KernelSpec::Bilinear] {
        for n in [1, 3, 15] {
            for _ in 0..100 {
                let u = random_map(&mut r, 2, &[8, 8]);
                let a = random_map(&mut r, 2, &[8, 8]);
                let grids = random_grids(&mut r, n, &[8, 8], &[8, 8]);
                worst = worst.max(adjoint_check(&u, &a, &grids, spec).map_err(|e| e.to_string())?);
            }
        }
    }
    let elapsed = start.elapsed();
    let msg = format!("max gap {worst:.3e} over 600 instances in {elapsed:.2?}");
    if worst <= 1e-12 && elapsed < Duration::from_secs(1) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn gradcheck() -> Outcome {
    let r = run_checks(6, 3, 20, KernelSpec::Bilinear, 202).map_err(|e| e.to_string())?;
    let worst = r.deda_source.max(r.sample_source).max(r.sample_grid);
    let integer = run_checks(6, 3, 5, KernelSpec::Integer, 203).map_err(|e| e.to_string())?;
    let msg = format!(
        "max rel err {worst:.3e}, adjoint {:.3e}, integer grid grad {}",
        r.adjoint, integer.grid_grad_abs
    );
    if worst <= GRADIENT_TOL && r.adjoint <= ADJOINT_TOL && integer.grid_grad_abs == 0.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn symmetry() -> Outcome {
    let mut r = rng(303);
    let mut bilinear_gap: f64 = 0.0;
    for _ in 0..50 {
        let u = random_map(&mut r, 2, &[7, 9]);
        let grids = random_grids(&mut r, 1, &[7, 9], &[7, 9]);
        let grid = &grids.grids()[0];
        let dims = [7, 9];
        // with one grid, the scatter's adjoint is the gather
        let back_int =
            dirac_core::deda::deda_backward(&u, &grids, KernelSpec::Integer, &dims).unwrap();
        let read_int = grid_sample(&u, grid, KernelSpec::Integer).unwrap();
        if back_int != read_int {
            return Err("integer backward differs from grid sampling".into());
        }
        let back_bil =
            dirac_core::deda::deda_backward(&u, &grids, KernelSpec::Bilinear, &dims).unwrap();
        let read_bil = grid_sample(&u, grid, KernelSpec::Bilinear).unwrap();
        for (a, b) in back_bil.data().iter().zip(read_bil.data()) {
            bilinear_gap = bilinear_gap.max((a - b).abs());
        }
    }
    let msg = format!("integer bit-identical, bilinear max gap {bilinear_gap:.3e}");
    if bilinear_gap <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn brute_hough(img: &FeatureMap, num_rho: usize, num_theta: usize) -> Vec<f64> {
    let (h, w) = (img.dims()[0], img.dims()[1]);
    let diag = ((h - 1) as f64).hypot((w - 1) as f64);
    let mut acc = vec![0.0; num_rho * num_theta];
    for i in 0..h {
        for j in 0..w {
            let v = img.at2(0, i, j);
            if v == 0.0 {
                continue;
            }
            for t in 0..num_theta {
                let theta = PI * t as f64 / num_theta as f64;
                let rho = i as f64 * theta.cos() + j as f64 * theta.sin();
                let bin = ((rho + diag) / (2.0 * diag) * (num_rho - 1) as f64 + 0.5).floor();
                if bin >= 0.0 && (bin as usize) < num_rho {
                    acc[bin as usize * num_theta + t] += v;
                }
            }
        }
    }
    acc
}

fn transforms() -> Outcome {
    let mut r = rng(404);
    for _ in 0..10 {
        let img = random_map(&mut r, 1, &[9, 13]);
        let cols: Vec<f64> = (0..13)
            .map(|j| (0..9).fold(0.0, |s, i| s + img.at2(0, i, j)))
            .collect();
        let rows: Vec<f64> = (0..9)
            .map(|i| (0..13).fold(0.0, |s, j| s + img.at2(0, i, j)))
            .collect();
        if radon_projection(&img, 0.0, 13).unwrap().data() != cols.as_slice()
            || radon_projection(&img, FRAC_PI_2, 9).unwrap().data() != rows.as_slice()
        {
            return Err("radon projection differs from row/column sums".into());
        }
    }
    let (n, num_rho, num_theta) = (32, 91, 60);
    for k in 0..20 {
        let theta: f64 = r.random_range(0.0..PI);
        let (ci, cj) = (
            r.random_range(4.0..n as f64 - 4.0),
            r.random_range(4.0..n as f64 - 4.0),
        );
        let rho = ci * theta.cos() + cj * theta.sin();
        let img = FeatureMap::from_fn_2d(n, n, |i, j| {
            let d = i as f64 * theta.cos() + j as f64 * theta.sin() - rho;
            if d.abs() <= 0.5 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let acc = hough_lines(&img, num_rho, num_theta).unwrap();
        let brute = brute_hough(&img, num_rho, num_theta);
        if acc.argmax_flat(0) != first_argmax(&brute) {
            return Err(format!("hough argmax differs from brute force on line {k}"));
        }
    }
    Ok("radon sums exact on 10 maps, hough argmax matches on 20 lines".into())
}

/// Replicate-padded 3x3 Sobel and nearest-bin shift histogram, written out directly.
fn oracle_vs(img: &FeatureMap, radii: &[u32], eps: f64) -> Vec<f64> {
    let (h, w) = (img.dims()[0], img.dims()[1]);
    let at = |i: isize, j: isize| {
        img.at2(
            0,
            i.clamp(0, h as isize - 1) as usize,
            j.clamp(0, w as isize - 1) as usize,
        )
    };
    let mut vs = vec![0.0; h * w];
    for i in 0..h as isize {
        for j in 0..w as isize {
            let gx = (at(i + 1, j - 1) + 2.0 * at(i + 1, j) + at(i + 1, j + 1))
                - (at(i - 1, j - 1) + 2.0 * at(i - 1, j) + at(i - 1, j + 1));
            let gy = (at(i - 1, j + 1) + 2.0 * at(i, j + 1) + at(i + 1, j + 1))
                - (at(i - 1, j - 1) + 2.0 * at(i, j - 1) + at(i + 1, j - 1));
            let s = gx.hypot(gy);
            for &k in radii {
                let k = f64::from(k);
                let ti = (i as f64 + k * gx / (s + eps) + 0.5).floor();
                let tj = (j as f64 + k * gy / (s + eps) + 0.5).floor();
                if (0.0..h as f64).contains(&ti) && (0.0..w as f64).contains(&tj) {
                    vs[ti as usize * w + tj as usize] += s;
                }
            }
        }
    }
    vs
}

fn rim_localization() -> Outcome {
    let mut r = rng(505);
    let n = 48;
    let total = 200;
    let (mut hits, mut default_hits) = (0, 0);
    for case in 0..total {
        let radius = f64::from(r.random_range(5..=15u32));
        let rim_width = 2.0;
        let outer = radius + rim_width / 2.0;
        let lo = outer + 2.0;
        let hi = n as f64 - 1.0 - lo;
        let spec = LesionSpec {
            kind: LesionKind::RimPositive,
            center: vec![r.random_range(lo..=hi), r.random_range(lo..=hi)],
            radius,
            rim_width,
            rim_intensity: 1.0,
            interior_intensity: 0.3,
            noise_sigma: 0.0,
            seed: case,
        };
        let (patch, _) = generate_lesion(&spec, &[n, n]).map_err(|e| e.to_string())?;
        let near = |flat: usize| {
            ((flat / n) as f64 - spec.center[0]).abs() <= 1.0
                && ((flat % n) as f64 - spec.center[1]).abs() <= 1.0
        };
        // the outer boundary's gradients point inward, so it votes at its own radius
        let matched = DatrConfig::with_radii(&[outer.round() as u32]);
        for cfg in [&matched, &DatrConfig::default()] {
            let maps = datr_transform(&patch, cfg).map_err(|e| e.to_string())?;
            let oracle = oracle_vs(&patch, &cfg.radii, cfg.epsilon);
            for (a, b) in maps.v_s.data().iter().zip(&oracle) {
                if (a - b).abs() > 1e-9 * b.abs().max(1.0) {
                    return Err(format!("case {case}: accumulator differs from oracle"));
                }
            }
            if near(maps.v_s.argmax_flat(0)) {
                if cfg == &matched {
                    hits += 1;
                } else {
                    default_hits += 1;
                }
            }
        }
    }
    let rate = hits as f64 / total as f64;
    let msg = format!(
        "{hits}/{total} peaks within 1 px at the boundary radius ({:.1}%), {default_hits}/{total} with the default radius set",
        100.0 * rate
    );
    if rate >= 0.95 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn metric_identities() -> Outcome {
    let f1 = f1_score(0.792, 0.712);
    if (f1 - 0.750).abs() > 1e-3 {
        return Err(format!("F1(0.792, 0.712) = {f1}"));
    }
    let c = Confusion {
        tp: 126,
        fp: 33,
        tn: 3986 - 33,
        fn_: 51,
    };
    let mut labels = vec![true; 177];
    let mut scores = vec![2.0; 126];
    scores.extend(std::iter::repeat_n(-1.0, 51));
    labels.extend(std::iter::repeat_n(false, 3986));
    scores.extend(std::iter::repeat_n(2.0, 33));
    scores.extend(std::iter::repeat_n(0.0, 3986 - 33));
    let (_, fitted) = best_f1_threshold(&labels, &scores).map_err(|e| e.to_string())?;
    let report = classify_scores(&labels, &scores).map_err(|e| e.to_string())?;
    if fitted != c || (report.f1 - 0.75).abs() > 1e-3 {
        return Err(format!("constructed set gave {fitted:?}, F1 {}", report.f1));
    }
    let mut r = rng(606);
    for _ in 0..200 {
        let y: Vec<bool> = (0..60).map(|i| i % 3 == 0 || r.random_bool(0.1)).collect();
        let s: Vec<f64> = (0..60).map(|_| r.random_range(0.0..1.0)).collect();
        let m = classify_scores(&y, &s).map_err(|e| e.to_string())?;
        if (m.f1 - f1_score(m.precision, m.sensitivity)).abs() > 1e-12 {
            return Err(format!(
                "report F1 {} breaks the harmonic-mean identity",
                m.f1
            ));
        }
    }
    Ok(format!(
        "F1(0.792, 0.712) = {f1:.4}, constructed set F1 {:.4}",
        report.f1
    ))
}

fn benchmark() -> Outcome {
    let cfg = BenchConfig::default();
    let start = Instant::now();
    let result = single_pool().install(|| {
        let cases: Vec<BenchCase> = generate_dataset(&cfg)?
            .iter()
            .map(BenchCase::from)
            .collect();
        run_benchmark(&cases, &cfg.datr, cfg.folds, cfg.seed)
    });
    let elapsed = start.elapsed();
    let report = result.map_err(|e| e.to_string())?.report;
    let msg = format!(
        "{} patches, ROC AUC {:.4}, F1 {:.4} in {elapsed:.2?}",
        cfg.count, report.roc_auc, report.f1
    );
    if report.roc_auc >= 0.99 && elapsed < Duration::from_secs(30) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn run_cli(args: &[&str], threads: Option<&str>) -> Result<(), String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dirac"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("DIRAC_THREADS", t);
    }
    let out = cmd.output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    Ok(())
}

fn read_all(dir: &Path, prefix: &str) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with(prefix))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            let bytes = std::fs::read(&p).unwrap();
            (name.trim_start_matches(prefix).to_string(), bytes)
        })
        .collect()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let gen = d.join("gen");
    run_cli(
        &[
            "generate",
            "--count",
            "60",
            "--output",
            gen.to_str().unwrap(),
        ],
        None,
    )?;
    let patch = gen.join("s000-l0000.dact");
    let patch = if patch.exists() {
        patch
    } else {
        let first = std::fs::read_to_string(gen.join("manifest.csv")).unwrap();
        let line = first.lines().nth(1).unwrap().to_string();
        gen.join(line.rsplit(',').next().unwrap())
    };
    let runs = [("a", None), ("b", None), ("c", Some("1")), ("d", Some("3"))];
    for (tag, threads) in runs {
        let bench = d.join(format!("bench{tag}"));
        let datr = d.join(format!("datr{tag}"));
        run_cli(
            &[
                "bench",
                "--generate",
                "60",
                "--output",
                bench.to_str().unwrap(),
            ],
            threads,
        )?;
        run_cli(
            &[
                "datr",
                "--input",
                patch.to_str().unwrap(),
                "--output",
                datr.to_str().unwrap(),
            ],
            threads,
        )?;
    }
    let reference = [read_all(d, "bencha"), read_all(d, "datra")];
    for tag in ["b", "c", "d"] {
        let other = [
            read_all(d, &format!("bench{tag}")),
            read_all(d, &format!("datr{tag}")),
        ];
        if other != reference {
            return Err(format!("run {tag} differs from run a"));
        }
    }
    let files = reference[0].len() + reference[1].len();

    let mut r = rng(808);
    for _ in 0..10 {
        let u = random_map(&mut r, 3, &[24, 24]);
        let grids = random_grids(&mut r, 15, &[24, 24], &[24, 24]);
        for spec in [KernelSpec::Integer, KernelSpec::Bilinear] {
            let par = deda_forward(&u, &grids, spec, &[24, 24]).unwrap();
            let seq = deda_forward_seq(&u, &grids, spec, &[24, 24]).unwrap();
            if par != seq {
                return Err("parallel accumulation differs from sequential".into());
            }
        }
    }
    Ok(format!(
        "{files} output files identical over 4 runs and thread counts; parallel == sequential"
    ))
}

fn throughput() -> Outcome {
    let mut r = rng(909);
    let u = random_map(&mut r, 1, &[32, 32]);
    let grids = random_grids(&mut r, 15, &[32, 32], &[32, 32]);
    let pool = single_pool();
    let mut times: Vec<Duration> = pool.install(|| {
        (0..21)
            .map(|_| {
                let t = Instant::now();
                std::hint::black_box(
                    deda_forward(&u, &grids, KernelSpec::Integer, &[32, 32]).unwrap(),
                );
                t.elapsed()
            })
            .collect()
    });
    times.sort();
    let median = times[times.len() / 2];
    let msg = format!("median forward pass {median:.2?} single-threaded");
    if median < Duration::from_millis(5) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("adjoint identity", adjoint),
        ("finite-difference gradients", gradcheck),
        ("scatter/gather symmetry", symmetry),
        ("radon and hough accumulation", transforms),
        ("rim localization", rim_localization),
        ("metric identities", metric_identities),
        ("synthetic benchmark", benchmark),
        ("deterministic outputs", determinism),
        ("single-thread throughput", throughput),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(msg) => println!("criterion {}: PASS {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {msg}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
