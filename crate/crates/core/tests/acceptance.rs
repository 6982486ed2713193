//! Acceptance criteria 1 to 11. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion; any failure makes the target fail.
//!
//! Criterion 11 needs the public India air-quality data. Point
//! `DRLSSV_INDIA_HOURLY` at its hourly CSV (and optionally
//! `DRLSSV_INDIA_DAILY` at the daily one) to exercise it.

use std::f64::consts::TAU;
use std::path::Path;
use std::time::Instant;

use drlssv::feature_selection::{fit_logistic, homogenize, log_likelihood, score, LogisticConfig};
use drlssv::hartley::{dht_forward, dht_inverse};
use drlssv::ingestion::{AqiBand, AqiBreakpoints, Diagnostics, StationGrid};
use drlssv::lssv::{kendall_tau, predict, tau_band, train_lssv, KernelSpec};
use drlssv::matrix::Matrix;
use drlssv::pipeline::{self, PipelineConfig, SynthSpec};
use drlssv::Pollutant;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn random_grids() -> Vec<Matrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..200)
        .map(|_| {
            let p = rng.random_range(1..=16);
            let q = rng.random_range(1..=24);
            Matrix::from_fn(p, q, |_, _| rng.random_range(-1.0..1.0))
        })
        .collect()
}

/// Re(F) − Im(F) of the complex 2-D DFT, summed term by term.
fn dft_re_minus_im(x: &Matrix) -> Matrix {
    let (p, q) = (x.rows(), x.cols());
    Matrix::from_fn(p, q, |a, b| {
        let (mut re, mut im) = (0.0, 0.0);
        for d in 0..p {
            for h in 0..q {
                let turns = ((a * d) % p) as f64 / p as f64 + ((b * h) % q) as f64 / q as f64;
                let theta = -TAU * turns;
                re += x[(d, h)] * theta.cos();
                im += x[(d, h)] * theta.sin();
            }
        }
        re - im
    })
}

fn criterion_1(grids: &[Matrix]) -> Outcome {
    let start = Instant::now();
    let (mut round, mut oracle) = (0.0f64, 0.0f64);
    for x in grids {
        let spec = dht_forward(&StationGrid::from_matrix(x.clone()));
        round = round.max(dht_inverse(&spec).max_abs_diff(x));
        oracle = oracle.max(spec.coefficients.max_abs_diff(&dft_re_minus_im(x)));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(round <= 1e-9, format!("round trip error {round:e}"))?;
    ensure(oracle <= 1e-9, format!("DFT oracle error {oracle:e}"))?;
    ensure(secs < 10.0, format!("took {secs:.2} s"))?;
    Ok(format!("round trip {round:.1e}, vs DFT {oracle:.1e}, {secs:.2} s"))
}

fn criterion_2(grids: &[Matrix]) -> Outcome {
    let mut worst = 0.0f64;
    for x in grids {
        let spec = dht_forward(&StationGrid::from_matrix(x.clone()));
        let lhs = spec.energy();
        let rhs = (x.rows() * x.cols()) as f64 * x.sum_squares();
        worst = worst.max((lhs - rhs).abs() / rhs);
    }
    ensure(worst <= 1e-9, format!("relative energy error {worst:e}"))?;
    Ok(format!("max relative error {worst:.1e}"))
}

/// Penalized log-likelihood, written out independently of the library.
fn penalized_ll(alpha: f64, beta: f64, xs: &[f64], ys: &[u8], ridge: f64) -> f64 {
    let mut ll = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let z = alpha + beta * x;
        let log1pexp = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
        ll += f64::from(*y) * z - log1pexp;
    }
    ll - 0.5 * ridge * beta * beta
}

/// Coarse-to-fine grid search for the maximizer of a concave function.
fn grid_argmax(f: impl Fn(f64, f64) -> f64) -> (f64, f64) {
    let (mut ca, mut cb, mut half) = (0.0, 0.0, 20.0);
    while half > 1e-7 {
        let steps = 40;
        let mut best = (f64::NEG_INFINITY, ca, cb);
        for i in 0..=steps {
            for j in 0..=steps {
                let a = ca - half + 2.0 * half * i as f64 / steps as f64;
                let b = cb - half + 2.0 * half * j as f64 / steps as f64;
                let v = f(a, b);
                if v > best.0 {
                    best = (v, a, b);
                }
            }
        }
        ca = best.1;
        cb = best.2;
        half *= 0.25;
    }
    (ca, cb)
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ridge = LogisticConfig::default().ridge;

    let mut worst_fd = 0.0f64;
    for _ in 0..50 {
        let dim = rng.random_range(1..=7);
        let pool = |rng: &mut ChaCha8Rng, n: usize, shift: f64| -> Vec<Vec<f64>> {
            (0..n).map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0) + shift).collect()).collect()
        };
        let n0 = rng.random_range(5..30);
        let n1 = rng.random_range(5..30);
        let hourly = pool(&mut rng, n0, 0.0);
        let daily = pool(&mut rng, n1, 0.5);
        let samples = homogenize(&hourly, &daily).map_err(|e| e.to_string())?.standardized();
        let alpha = rng.random_range(-1.0..1.0);
        let beta: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();

        let (ga, gb) = score(alpha, &beta, &samples, ridge);
        let h = 1e-5;
        let fd_a = (log_likelihood(alpha + h, &beta, &samples, ridge) - log_likelihood(alpha - h, &beta, &samples, ridge)) / (2.0 * h);
        let mut grad = vec![ga];
        let mut fd = vec![fd_a];
        for j in 0..dim {
            let (mut up, mut down) = (beta.clone(), beta.clone());
            up[j] += h;
            down[j] -= h;
            grad.push(gb[j]);
            fd.push((log_likelihood(alpha, &up, &samples, ridge) - log_likelihood(alpha, &down, &samples, ridge)) / (2.0 * h));
        }
        let diff = grad.iter().zip(&fd).fold(0.0f64, |m, (g, f)| m.max((g - f).abs()));
        let scale = fd.iter().fold(0.0f64, |m, f| m.max(f.abs()));
        worst_fd = worst_fd.max(diff / scale);
    }
    ensure(worst_fd < 1e-5, format!("score vs finite differences {worst_fd:e}"))?;

    // Six-sample, one-feature instances whose pools overlap, so the optimum
    // stays inside the search box.
    let mut worst_fit = 0.0f64;
    let mut done = 0;
    while done < 20 {
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..10.0)).collect();
        let (h, d) = (&x[..3], &x[3..]);
        let max = |s: &[f64]| s.iter().cloned().fold(f64::MIN, f64::max);
        let min = |s: &[f64]| s.iter().cloned().fold(f64::MAX, f64::min);
        if max(h) < min(d) || max(d) < min(h) {
            continue;
        }
        let hourly: Vec<Vec<f64>> = h.iter().map(|v| vec![*v]).collect();
        let daily: Vec<Vec<f64>> = d.iter().map(|v| vec![*v]).collect();
        let set = homogenize(&hourly, &daily).map_err(|e| e.to_string())?;
        let model = fit_logistic(&set, &LogisticConfig::default()).map_err(|e| e.to_string())?;

        let std = set.standardized();
        let xs: Vec<f64> = std.iter().map(|s| s.features[0]).collect();
        let ys: Vec<u8> = std.iter().map(|s| s.label).collect();
        let (a, b) = grid_argmax(|a, b| penalized_ll(a, b, &xs, &ys, ridge));
        worst_fit = worst_fit.max((model.alpha - a).abs()).max((model.beta[0] - b).abs());
        done += 1;
    }
    ensure(worst_fit < 1e-3, format!("fit vs grid search {worst_fit:e}"))?;
    Ok(format!("score rel err {worst_fd:.1e}, fit vs grid {worst_fit:.1e}"))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut kkt, mut dual_sum, mut resid) = (0.0f64, 0.0f64, 0.0f64);
    for t in 0..50 {
        let n = rng.random_range(2..=50);
        let dim = rng.random_range(1..=4);
        let x = Matrix::from_fn(n, dim, |_, _| rng.random_range(-3.0..3.0));
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..300.0)).collect();
        let gamma = 10f64.powf(rng.random_range(-1.0..2.0));
        let kernel = if t % 2 == 0 {
            KernelSpec::rbf(rng.random_range(0.5..3.0)).unwrap()
        } else {
            KernelSpec::Linear
        };
        let m = train_lssv(&x, &y, gamma, kernel).map_err(|e| e.to_string())?;
        kkt = kkt.max(m.kkt_residual(&y));
        dual_sum = dual_sum.max(m.dual.iter().sum::<f64>().abs());
        for (k, row) in x.iter_rows().enumerate() {
            let f = predict(&m, row).map_err(|e| e.to_string())?;
            resid = resid.max((y[k] - f - m.dual[k] / gamma).abs());
        }
    }
    ensure(kkt < 1e-8, format!("KKT residual {kkt:e}"))?;
    ensure(dual_sum < 1e-8, format!("dual sum {dual_sum:e}"))?;
    ensure(resid < 1e-8, format!("residual identity {resid:e}"))?;

    let x = Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
    let m = train_lssv(&x, &[1.0, -1.0], 1.0, KernelSpec::Linear).map_err(|e| e.to_string())?;
    let f1 = predict(&m, &[1.0]).map_err(|e| e.to_string())?;
    ensure(m.bias.abs() < 1e-10, format!("closed form bias {}", m.bias))?;
    ensure((f1 - 2.0 / 3.0).abs() < 1e-10, format!("closed form f(1) = {f1}"))?;
    Ok(format!("KKT {kkt:.1e}, dual sum {dual_sum:.1e}, residual identity {resid:.1e}, f(1) = {f1:.12}"))
}

fn tau_oracle(u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    let (mut c, mut d) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let s = (u[i] - u[j]).signum() * (v[i] - v[j]).signum();
            if u[i] != u[j] && v[i] != v[j] {
                if s > 0.0 {
                    c += 1;
                } else {
                    d += 1;
                }
            }
        }
    }
    (c - d) as f64 / (n * (n - 1) / 2) as f64
}

fn permutations(n: usize) -> Vec<Vec<f64>> {
    fn go(prefix: &mut Vec<f64>, rest: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..rest.len() {
            let v = rest.remove(i);
            prefix.push(v);
            go(prefix, rest, out);
            prefix.pop();
            rest.insert(i, v);
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut (0..n).map(|i| i as f64).collect(), &mut out);
    out
}

fn criterion_5() -> Outcome {
    let mut pairs = 0usize;
    for n in 2..=5 {
        let perms = permutations(n);
        for u in &perms {
            for v in &perms {
                let got = kendall_tau(u, v).map_err(|e| e.to_string())?;
                ensure(got == tau_oracle(u, v), format!("n = {n}: {u:?} vs {v:?} gave {got}"))?;
                pairs += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let u: Vec<f64> = (0..50).map(|_| f64::from(rng.random_range(0..12))).collect();
        let v: Vec<f64> = (0..50).map(|_| f64::from(rng.random_range(0..12))).collect();
        let got = kendall_tau(&u, &v).map_err(|e| e.to_string())?;
        ensure((got - tau_oracle(&u, &v)).abs() < 1e-12, "random n = 50 mismatch")?;

        let mut w: Vec<f64> = (0..50).map(|i| i as f64).collect();
        w.shuffle(&mut rng);
        let mapped: Vec<f64> = w.iter().map(|x| x.powi(3) + (x / 7.0).exp()).collect();
        let base = kendall_tau(&w, &v).map_err(|e| e.to_string())?;
        let after = kendall_tau(&mapped, &v).map_err(|e| e.to_string())?;
        ensure(base == after, format!("monotone transform changed tau: {base} vs {after}"))?;
    }
    Ok(format!("{pairs} permutation pairs and 100 random n = 50 vectors agree"))
}

fn criterion_6() -> Outcome {
    for (tau, want) in [(-0.8, AqiBand::VeryPoor), (0.0, AqiBand::Good), (0.75, AqiBand::Moderate)] {
        let got = tau_band(tau).map_err(|e| e.to_string())?;
        ensure(got == want, format!("tau {tau} gave {got}"))?;
    }
    Ok("-0.8 -> Very Poor, 0 -> Good, 0.75 -> Moderate".into())
}

fn synth_config(data: &Path, out: &Path, extra: &[&str]) -> Result<PipelineConfig, String> {
    let mut overrides = vec![
        format!("paths.input='{}'", data.join("hourly.csv").display()),
        format!("paths.daily='{}'", data.join("daily.csv").display()),
        format!("paths.output='{}'", out.display()),
    ];
    overrides.extend(extra.iter().map(|s| s.to_string()));
    PipelineConfig::from_toml_with("", &overrides).map_err(|e| e.to_string())
}

fn write_synth(spec: &SynthSpec, dir: &Path) -> Result<(), String> {
    spec.generate(&AqiBreakpoints::bundled())
        .and_then(|d| d.write_to_dir(dir))
        .map_err(|e| e.to_string())
}

fn criterion_7_and_9(tmp: &Path) -> (Outcome, Outcome) {
    let run = || -> Result<(f64, f64, f64, f64, usize), String> {
        let data = tmp.join("c7");
        write_synth(&SynthSpec::default(), &data)?;
        let cfg = synth_config(&data, &tmp.join("c7out"), &["eval.test_n=2000"])?;
        let start = Instant::now();
        let summary = pipeline::run(&cfg).map_err(|e| e.to_string())?;
        let secs = start.elapsed().as_secs_f64();
        let r = summary
            .reports
            .iter()
            .find(|r| r.method_name == "dr-lssv")
            .ok_or("no dr-lssv report")?;
        Ok((r.accuracy, r.fpr, secs, r.forecast_time_ms, r.n_samples))
    };
    match run() {
        Err(e) => (Err(e.clone()), Err(e)),
        Ok((acc, fpr, secs, ms, n)) => {
            let c7 = ensure(n == 2000, format!("evaluated {n} samples"))
                .and_then(|_| ensure(acc >= 0.95, format!("accuracy {acc:.4}")))
                .and_then(|_| ensure(fpr <= 0.05, format!("FPR {fpr:.4}")))
                .and_then(|_| ensure(secs < 60.0, format!("run took {secs:.1} s")))
                .map(|_| format!("accuracy {acc:.4}, FPR {fpr:.4}, run {secs:.1} s"));
            let c9 = ensure(ms < 1000.0, format!("2000 predictions took {ms:.1} ms"))
                .map(|_| format!("2000 predictions in {ms:.1} ms"));
            (c7, c9)
        }
    }
}

fn criterion_8() -> Outcome {
    let bp = AqiBreakpoints::bundled();
    let mut ratios = Vec::new();
    for seed in 0..10u64 {
        let spec = SynthSpec { seed, ..SynthSpec::default() };
        let data = spec.generate(&bp).map_err(|e| e.to_string())?;
        let mse_for = |keep: f64| -> Result<f64, String> {
            let cfg = PipelineConfig::from_toml_with("", &[format!("hartley.keep_fraction={keep}")])
                .map_err(|e| e.to_string())?;
            let (mut sse, mut n) = (0.0, 0usize);
            for (noisy, clean) in data.hourly.iter().zip(&data.clean) {
                let out = pipeline::preprocess_series(noisy, &cfg, &bp, &mut Diagnostics::default())
                    .map_err(|e| e.to_string())?;
                for (a, b) in out.readings.iter().zip(&clean.readings) {
                    for p in Pollutant::ALL {
                        let (a, b) = (a[p.index()].unwrap_or(0.0), b[p.index()].unwrap_or(0.0));
                        sse += (a - b) * (a - b);
                        n += 1;
                    }
                }
            }
            Ok(sse / n as f64)
        };
        let denoised = mse_for(0.95)?;
        let identity = mse_for(1.0)?;
        ensure(denoised < identity, format!("seed {seed}: denoised MSE {denoised:.4} vs identity {identity:.4}"))?;
        ratios.push(denoised / identity);
    }
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(format!("10/10 seeds reduced MSE, worst ratio {worst:.3}"))
}

fn criterion_10(tmp: &Path) -> Outcome {
    let data = tmp.join("c10");
    write_synth(&SynthSpec { n_stations: 3, days: 40, ..SynthSpec::default() }, &data)?;
    let mut files = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.join(format!("c10{name}"));
        let cfg = synth_config(&data, &out, &["eval.seed=7"])?;
        pipeline::run(&cfg).map_err(|e| e.to_string())?;
        let read = |f: &str| std::fs::read(out.join(f)).map_err(|e| e.to_string());
        files.push((read(pipeline::SELECTION_FILE)?, read(pipeline::MODEL_FILE)?));
    }
    ensure(files[0].0 == files[1].0, "selection.csv differs")?;
    ensure(files[0].1 == files[1].1, "model.drlssv differs")?;
    Ok(format!("selection.csv and model.drlssv identical ({} model bytes)", files[0].1.len()))
}

fn criterion_11(tmp: &Path) -> Outcome {
    let Ok(hourly) = std::env::var("DRLSSV_INDIA_HOURLY") else {
        return Ok("DRLSSV_INDIA_HOURLY not set, nothing to check".into());
    };
    let mut overrides = vec![
        format!("paths.input='{hourly}'"),
        format!("paths.output='{}'", tmp.join("c11").display()),
    ];
    if let Ok(daily) = std::env::var("DRLSSV_INDIA_DAILY") {
        overrides.push(format!("paths.daily='{daily}'"));
    }
    let cfg = PipelineConfig::from_toml_with("", &overrides).map_err(|e| e.to_string())?;
    let mut diag = Diagnostics::default();
    pipeline::ingest(&cfg, &mut diag).map_err(|e| e.to_string())?;
    pipeline::preprocess(&cfg, &mut diag).map_err(|e| e.to_string())?;
    let (sel, _) = pipeline::select(&cfg).map_err(|e| e.to_string())?;
    ensure(sel.selected.len() == 3, format!("{} features selected", sel.selected.len()))?;
    let names: Vec<String> = sel.selected.iter().map(|p| p.to_string()).collect();
    Ok(format!("selected [{}]; reference set [PM10, CO, O3]", names.join(", ")))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let grids = random_grids();
    let (c7, c9) = criterion_7_and_9(tmp.path());
    let results: Vec<(&str, Outcome)> = vec![
        ("DHT round trip and DFT oracle", criterion_1(&grids)),
        ("energy identity", criterion_2(&grids)),
        ("logistic score and fit", criterion_3()),
        ("LSSVM saddle system", criterion_4()),
        ("Kendall tau", criterion_5()),
        ("tau banding anchors", criterion_6()),
        ("end-to-end synthetic", c7),
        ("denoising utility", criterion_8()),
        ("prediction timing", c9),
        ("determinism", criterion_10(tmp.path())),
        ("real-data selection", criterion_11(tmp.path())),
    ];

    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

