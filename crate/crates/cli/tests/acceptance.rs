//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Reference values are recomputed here from first principles (explicit
//! projection matrices, direct formula evaluation, least-squares fits) rather
//! than through the library routines under test.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use spfq_core::align::{align_first_pass, align_order_r, solve_min_inf};
use spfq_core::analysis::{
    adversarial_instance, covariance_recursion_check, finite_alphabet_size,
    projection_decay_experiment, relative_error_sweep, relu_expectation_check,
    stability_bound_check, SigmaSpec,
};
use spfq_core::linalg::{singular_extremes, DenseMatrix};
use spfq_core::{
    quantize_layer, quantize_neuron_fused, quantize_neuron_phase2, AlignMode, Alphabet,
    QuantConfig, RandomStream, Resolution,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `I − zzᵀ/‖z‖²` as an explicit matrix.
fn complement_matrix(z: &[f64]) -> Vec<Vec<f64>> {
    let nz: f64 = z.iter().map(|v| v * v).sum();
    (0..z.len())
        .map(|i| {
            (0..z.len())
                .map(|j| f64::from(u8::from(i == j)) - z[i] * z[j] / nz)
                .collect()
        })
        .collect()
}

fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = b[0].len();
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| row.iter().enumerate().map(|(k, v)| v * b[k][j]).sum())
                .collect()
        })
        .collect()
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

fn perturbed_instance(
    rng: &mut RandomStream,
    m: usize,
    n: usize,
    noise: f64,
) -> (DenseMatrix, DenseMatrix, Vec<f64>) {
    let x = rng.gaussian_matrix(m, n);
    let xt = x.add(&rng.gaussian_matrix(m, n).scale(noise)).unwrap();
    let w = rng.gaussian_vec(n);
    (x, xt, w)
}

fn two_phase_equivalence() -> Outcome {
    let alphabet = Alphabet::infinite(0.3).unwrap();
    let mut entries = 0;
    for i in 0..100 {
        let mut rng = RandomStream::for_trial(101, i);
        let (x, xt, w) = perturbed_instance(&mut rng, 8, 32, 0.3);
        let fused = quantize_neuron_fused(
            &x,
            &xt,
            &w,
            &alphabet,
            &mut RandomStream::for_neuron(7, 0, i),
        )
        .unwrap();
        let aligned = align_first_pass(&x, &xt, &w).unwrap();
        let two = quantize_neuron_phase2(
            &xt,
            &aligned.w_tilde,
            &alphabet,
            &mut RandomStream::for_neuron(7, 0, i),
        )
        .unwrap();
        ensure(fused.q == two.q, || {
            format!("instance {i}: fused and two-phase differ")
        })?;
        entries += fused.q.len();
    }
    Ok(format!("100 instances, {entries} entries identical"))
}

fn alignment_closed_form() -> Outcome {
    let mut worst_closed: f64 = 0.0;
    let mut worst_power: f64 = 0.0;
    for i in 0..100 {
        let mut rng = RandomStream::for_trial(202, i);
        let (m, n) = (8, 32);
        let (x, xt, w) = perturbed_instance(&mut rng, m, n, 0.5);
        let first = align_first_pass(&x, &xt, &w).unwrap();
        let projections: Vec<Vec<Vec<f64>>> =
            (0..n).map(|j| complement_matrix(&xt.column(j))).collect();
        // Σ_j P_N⋯P_j (w_j X_j)
        let mut closed = vec![0.0; m];
        for j in 0..n {
            let mut term: Vec<f64> = x.column(j).iter().map(|v| w[j] * v).collect();
            for p in &projections[j..] {
                term = mat_vec(p, &term);
            }
            for (c, t) in closed.iter_mut().zip(&term) {
                *c += t;
            }
        }
        let diff: Vec<f64> = closed
            .iter()
            .zip(&first.residual)
            .map(|(a, b)| a - b)
            .collect();
        let rel = norm(&diff) / norm(&closed);
        worst_closed = worst_closed.max(rel);
        ensure(rel <= 1e-9, || {
            format!("instance {i}: closed-form mismatch {rel:e}")
        })?;

        let mut full = projections[0].clone();
        for p in &projections[1..] {
            full = mat_mul(p, &full);
        }
        let mut expected = first.residual.clone();
        for r in 2..=3 {
            expected = mat_vec(&full, &expected);
            let got = align_order_r(&x, &xt, &w, r).unwrap().residual;
            let diff: Vec<f64> = got.iter().zip(&expected).map(|(a, b)| a - b).collect();
            let rel = norm(&diff) / norm(&expected);
            worst_power = worst_power.max(rel);
            ensure(rel <= 1e-8, || {
                format!("instance {i}, r={r}: mismatch {rel:e}")
            })?;
        }
    }
    Ok(format!(
        "max rel. deviation {worst_closed:.2e} (first pass), {worst_power:.2e} (r = 2, 3)"
    ))
}

fn quantizer_unbiasedness() -> Outcome {
    let n = 100_000;
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let mut rng = RandomStream::for_trial(303, i);
        let delta = 0.05 + 2.0 * rng.uniform();
        let z = 20.0 * (rng.uniform() - 0.5);
        let a = Alphabet::infinite(delta).unwrap();
        let sum: f64 = (0..n)
            .map(|_| a.stoc_quantize(z, &mut rng).unwrap().value)
            .sum();
        let dev = (sum / n as f64 - z).abs();
        let tol = 4.0 * (delta / 2.0) / (n as f64).sqrt();
        worst = worst.max(dev / tol);
        ensure(dev <= tol, || {
            format!("z={z}, delta={delta}: |mean - z| = {dev:e} > {tol:e}")
        })?;
    }
    Ok(format!(
        "50 pairs, worst deviation {:.2} of tolerance",
        worst
    ))
}

fn quantization_error_bound() -> Outcome {
    let (m, n, p, delta) = (16usize, 256usize, 2.0f64, 0.1);
    let alphabet = Alphabet::infinite(delta).unwrap();
    let trials = 1000;
    let mut violations = 0;
    for t in 0..trials {
        let mut rng = RandomStream::for_trial(404, t);
        let xt = rng.gaussian_matrix(m, n);
        let w = rng.gaussian_vec(n);
        let res = quantize_neuron_phase2(&xt, &w, &alphabet, &mut rng).unwrap();
        let max_col = (0..n).map(|j| norm(&xt.column(j))).fold(0.0, f64::max);
        let bound =
            delta * (2.0 * std::f64::consts::PI * p * m as f64 * (n as f64).ln()).sqrt() * max_col;
        if norm(&res.final_error) > bound {
            violations += 1;
        }
    }
    let rate = violations as f64 / trials as f64;
    ensure(rate <= 0.02, || format!("violation rate {rate} > 0.02"))?;
    Ok(format!("{violations} violations in {trials} trials"))
}

fn adversarial_ratio() -> Outcome {
    let (m, n, eps) = (8, 64, 0.3);
    let mut parts = Vec::new();
    for (k, gamma) in [0.5, 0.25, 0.1].into_iter().enumerate() {
        let inst = adversarial_instance(m, n, gamma, eps, 505 + k as u64).unwrap();
        let b = inst.x.matvec(&inst.w).unwrap();
        let hat = solve_min_inf(&inst.x, &b, None).unwrap();
        let tilde = solve_min_inf(&inst.xt, &b, None).unwrap();
        let hat_inf = hat.w_tilde.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let tilde_inf = tilde.w_tilde.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let ratio = tilde_inf / hat_inf;
        let target = 1.0 / gamma;
        ensure((hat_inf - 1.0 / (n as f64).sqrt()).abs() <= 1e-9, || {
            format!("gamma={gamma}: |w_hat|_inf = {hat_inf}, expected 1/sqrt(N)")
        })?;
        ensure((ratio - target).abs() <= 1e-6 * target, || {
            format!("gamma={gamma}: ratio {ratio} vs {target}")
        })?;
        parts.push(format!("{ratio:.9}"));
    }
    Ok(format!(
        "ratios {} for gamma 0.5, 0.25, 0.1",
        parts.join(", ")
    ))
}

fn stability() -> Outcome {
    let trials = 200;
    let o = stability_bound_check(8, 64, 2, 0.05, trials, 606).map_err(|e| e.to_string())?;
    let q = 2.0 / 64.0;
    let allowed = trials as f64 * q + 3.0 * (trials as f64 * q).sqrt();
    ensure(o.violations as f64 <= allowed, || {
        format!("{} violations > allowed {allowed:.2}", o.violations)
    })?;
    Ok(format!("{} violations, allowed {allowed:.2}", o.violations))
}

fn relative_error_scaling() -> Outcome {
    let ns = [128, 256, 512, 1024, 2048, 4096];
    let sweep = relative_error_sweep(16, &ns, 1, 2, 20, 707, 0.5).map_err(|e| e.to_string())?;
    let means: Vec<f64> = sweep.rows.iter().map(|r| r.mean).collect();
    ensure(means.windows(2).all(|w| w[1] < w[0]), || {
        format!("means not decreasing: {means:?}")
    })?;
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = means.iter().map(|v| v.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    ensure(slope > -1.35 && slope < -0.65, || {
        format!("slope {slope} outside (-1.35, -0.65)")
    })?;
    Ok(format!("log-log slope {slope:.3}"))
}

fn projection_decay() -> Outcome {
    let ns = [20, 40, 80];
    let a = projection_decay_experiment(4, &ns, 20, 808).map_err(|e| e.to_string())?;
    let b = projection_decay_experiment(8, &ns, 20, 809).map_err(|e| e.to_string())?;
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mut slopes = Vec::new();
    for t in [&a, &b] {
        let means: Vec<f64> = t.rows.iter().map(|r| r.mean_log_norm_sq).collect();
        ensure(means.windows(2).all(|w| w[1] < w[0]), || {
            format!("m={}: means not decreasing: {means:?}", t.m)
        })?;
        slopes.push(least_squares_slope(&xs, &means));
    }
    ensure(slopes[1] > slopes[0], || {
        format!(
            "slope for m=8 ({}) not flatter than for m=4 ({})",
            slopes[1], slopes[0]
        )
    })?;
    Ok(format!(
        "slopes {:.4} (m=4), {:.4} (m=8)",
        slopes[0], slopes[1]
    ))
}

fn finite_infinite_coupling() -> Outcome {
    let (m, n, neurons, delta, p) = (8, 64, 8, 0.5, 2);
    let mut clean = 0;
    for i in 0..50 {
        let mut rng = RandomStream::for_trial(909, i);
        let x = rng.gaussian_matrix(m, n);
        let e = rng.gaussian_matrix(m, n).scale(0.02);
        let xt = x.add(&e).unwrap();
        let w = rng.gaussian_matrix(n, neurons);
        let sv = singular_extremes(&x);
        let eps = singular_extremes(&e).0 / sv.0;
        let size = finite_alphabet_size(&xt, delta, p, eps, sv).map_err(|e| e.to_string())?;
        let base = QuantConfig {
            explicit_delta: Some(delta),
            mode: AlignMode::Perfect,
            prob_exponent: p,
            seed: 31 + i as u64,
            ..QuantConfig::default()
        };
        let finite = QuantConfig {
            resolution: Resolution::Levels(size.levels),
            ..base.clone()
        };
        let infinite = QuantConfig {
            resolution: Resolution::Infinite,
            ..base
        };
        let (qf, rf) = quantize_layer(&x, &xt, &w, &finite, 0).map_err(|e| e.to_string())?;
        let (qi, _) = quantize_layer(&x, &xt, &w, &infinite, 0).map_err(|e| e.to_string())?;
        if rf.overflow_count == 0 {
            clean += 1;
            ensure(qf == qi, || {
                format!("layer {i}: finite run differs from infinite run")
            })?;
        }
    }
    ensure(clean >= 48, || {
        format!("only {clean} of 50 layers ran without overflow")
    })?;
    Ok(format!("{clean} of 50 layers overflow-free, all identical"))
}

fn covariance_and_relu() -> Outcome {
    for s in 0..100 {
        let mut rng = RandomStream::for_trial(1010, s);
        let len = 1 + (rng.uniform() * 64.0) as usize;
        let cols: Vec<Vec<f64>> = (0..len).map(|_| rng.gaussian_vec(8)).collect();
        let alpha = 0.1 + 2.0 * rng.uniform();
        let ok = covariance_recursion_check(&cols, alpha).map_err(|e| e.to_string())?;
        ensure(ok, || format!("sequence {s} violates the recursion bound"))?;
    }
    let id = relu_expectation_check(SigmaSpec::Identity, 16, 100_000, 1011)
        .map_err(|e| e.to_string())?;
    let psd = relu_expectation_check(SigmaSpec::RandomPsd, 8, 100_000, 1012)
        .map_err(|e| e.to_string())?;
    // independent recomputation of the identity bound: sqrt(16 / 2π)
    ensure(
        (id.lower_bound - (16.0 / (2.0 * std::f64::consts::PI)).sqrt()).abs() < 1e-12,
        || "identity lower bound mismatch".into(),
    )?;
    ensure(
        id.passed && id.mean >= id.lower_bound - 3.0 * id.std / (1e5f64).sqrt(),
        || format!("identity: mean {} below {}", id.mean, id.lower_bound),
    )?;
    ensure(psd.passed, || {
        format!("random PSD: mean {} below {}", psd.mean, psd.lower_bound)
    })?;
    Ok(format!(
        "100 sequences pass; E|relu(X)| {:.4} >= {:.4} (identity), {:.4} >= {:.4} (random PSD)",
        id.mean, id.lower_bound, psd.mean, psd.lower_bound
    ))
}

fn end_to_end_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = RandomStream::for_trial(1111, 0);
    let mut layers = Vec::new();
    for (r, c) in [(32, 24), (24, 8)] {
        let w = rng.gaussian_matrix(r, c);
        layers.push(serde_json::json!({"rows": r, "cols": c, "weights": w.data()}));
    }
    let net = dir.path().join("net.json");
    std::fs::write(&net, serde_json::json!({ "layers": layers }).to_string()).unwrap();
    let x = rng.gaussian_matrix(12, 32);
    let csv: String = (0..12)
        .map(|i| {
            x.row(i)
                .iter()
                .map(|v| format!("{v:?}"))
                .collect::<Vec<_>>()
                .join(",")
                + "\n"
        })
        .collect();
    let data = dir.path().join("data.csv");
    std::fs::write(&data, csv).unwrap();
    let mut reports = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("q{k}.json"));
        let rep = dir.path().join(format!("r{k}.json"));
        let code = spfq_cli::run([
            "spfq",
            "quantize",
            "--network",
            net.to_str().unwrap(),
            "--data",
            data.to_str().unwrap(),
            "--bits",
            "4",
            "--mode",
            "order-r",
            "--order",
            "2",
            "--seed",
            "99",
            "--out",
            out.to_str().unwrap(),
            "--report",
            rep.to_str().unwrap(),
        ]);
        ensure(code == 0, || format!("run {k} exited with {code}"))?;
        reports.push(std::fs::read(&rep).unwrap());
    }
    ensure(reports[0] == reports[1], || "reports differ".into())?;
    Ok(format!(
        "two runs, {} identical report bytes",
        reports[0].len()
    ))
}

struct Criterion {
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            name: "two-phase equivalence",
            limit: Duration::from_secs(5),
            run: two_phase_equivalence,
        },
        Criterion {
            name: "alignment closed form",
            limit: Duration::from_secs(10),
            run: alignment_closed_form,
        },
        Criterion {
            name: "quantizer unbiasedness",
            limit: Duration::from_secs(5),
            run: quantizer_unbiasedness,
        },
        Criterion {
            name: "quantization error bound",
            limit: Duration::from_secs(60),
            run: quantization_error_bound,
        },
        Criterion {
            name: "adversarial ratio",
            limit: Duration::from_secs(10),
            run: adversarial_ratio,
        },
        Criterion {
            name: "l-infinity stability",
            limit: Duration::from_secs(60),
            run: stability,
        },
        Criterion {
            name: "relative-error scaling",
            limit: Duration::from_secs(120),
            run: relative_error_scaling,
        },
        Criterion {
            name: "projection norm decay",
            limit: Duration::from_secs(60),
            run: projection_decay,
        },
        Criterion {
            name: "finite/infinite coupling",
            limit: Duration::from_secs(30),
            run: finite_infinite_coupling,
        },
        Criterion {
            name: "covariance recursion and ReLU expectation",
            limit: Duration::from_secs(60),
            run: covariance_and_relu,
        },
        Criterion {
            name: "end-to-end determinism",
            limit: Duration::from_secs(10),
            run: end_to_end_determinism,
        },
    ];
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > c.limit => {
                Err(format!("{msg}; took {elapsed:.2?}, limit {:?}", c.limit))
            }
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS {:>2} {} ({:.2?}): {msg}", i + 1, c.name, elapsed),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {} ({:.2?}): {msg}", i + 1, c.name, elapsed);
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
