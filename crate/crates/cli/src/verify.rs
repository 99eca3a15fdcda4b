use clap::ValueEnum;
use rayon::prelude::*;
use spfq_core::analysis::{
    adversarial_instance, covariance_recursion_check, fmt_f64, measure_adversarial,
    projection_decay_experiment, quantization_bound, relu_expectation_check, stability_bound_check,
    tail_outcome, ResultTable, SigmaSpec,
};
use spfq_core::linalg::norm2;
use spfq_core::{quantize_neuron_fused, quantize_neuron_phase2, Alphabet, RandomStream, Result};

use crate::{usage_error, VerifyArgs, EXIT_FAILURE, EXIT_OK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Bounds,
    Tails,
    Projections,
    Stability,
    Adversarial,
    Relu,
    All,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Bounds => "bounds",
            Suite::Tails => "tails",
            Suite::Projections => "projections",
            Suite::Stability => "stability",
            Suite::Adversarial => "adversarial",
            Suite::Relu => "relu",
            Suite::All => "all",
        }
    }

    fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![
                Suite::Bounds,
                Suite::Tails,
                Suite::Projections,
                Suite::Stability,
                Suite::Adversarial,
                Suite::Relu,
            ],
            s => vec![s],
        }
    }
}

/// One checked claim.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub claim: String,
    pub parameters: String,
    pub trials: usize,
    pub statistic: Option<f64>,
    pub threshold: String,
    pub violations: Option<usize>,
    pub allowed: Option<f64>,
    pub passed: bool,
}

impl Check {
    fn failed(suite: &'static str, claim: &str, err: &spfq_core::SpfqError) -> Self {
        Self {
            suite,
            claim: claim.to_string(),
            parameters: String::new(),
            trials: 0,
            statistic: None,
            threshold: format!("error: {err}"),
            violations: None,
            allowed: None,
            passed: false,
        }
    }
}

pub const HEADER: [&str; 9] = [
    "suite",
    "claim",
    "parameters",
    "trials",
    "statistic",
    "threshold",
    "violations",
    "allowed",
    "passed",
];

pub fn checks_table(checks: &[Check]) -> ResultTable {
    let mut t = ResultTable::new(&HEADER);
    for c in checks {
        t.push(vec![
            c.suite.to_string(),
            c.claim.clone(),
            c.parameters.clone(),
            c.trials.to_string(),
            c.statistic.map(fmt_f64).unwrap_or_default(),
            c.threshold.clone(),
            c.violations.map(|v| v.to_string()).unwrap_or_default(),
            c.allowed.map(fmt_f64).unwrap_or_default(),
            c.passed.to_string(),
        ]);
    }
    t
}

/// Runs one suite (or all of them) with `trials` Monte Carlo trials per claim.
pub fn run_suite(suite: Suite, trials: usize, seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    for (k, s) in suite.expand().into_iter().enumerate() {
        let seed = seed.wrapping_add(k as u64);
        out.extend(match s {
            Suite::Bounds => bounds(trials, seed),
            Suite::Tails => tails(trials, seed),
            Suite::Projections => projections(trials, seed),
            Suite::Stability => stability(trials, seed),
            Suite::Adversarial => adversarial(seed),
            Suite::Relu => relu(trials, seed),
            Suite::All => unreachable!("expanded above"),
        });
    }
    out
}

fn rate_check(
    suite: &'static str,
    claim: &str,
    parameters: String,
    flags: Result<Vec<bool>>,
    max_rate: f64,
) -> Check {
    match flags {
        Ok(flags) => {
            let trials = flags.len();
            let violations = flags.iter().filter(|&&v| v).count();
            let allowed = max_rate * trials as f64;
            Check {
                suite,
                claim: claim.to_string(),
                parameters,
                trials,
                statistic: Some(violations as f64 / trials as f64),
                threshold: format!("violation rate <= {max_rate}"),
                violations: Some(violations),
                allowed: Some(allowed),
                passed: violations as f64 <= allowed,
            }
        }
        Err(e) => Check::failed(suite, claim, &e),
    }
}

fn bounds(trials: usize, seed: u64) -> Vec<Check> {
    let (m, n, p, delta) = (16, 256, 2, 0.1);
    let alphabet = Alphabet::infinite(delta).expect("positive step");
    let phase2: Result<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RandomStream::for_cell(seed, 0, t);
            let xt = rng.gaussian_matrix(m, n);
            let w = rng.gaussian_vec(n);
            let res = quantize_neuron_phase2(&xt, &w, &alphabet, &mut rng)?;
            let bound = quantization_bound(delta, p, m, &xt)?;
            Ok(norm2(&res.final_error) > bound.bound_value)
        })
        .collect();
    let (fm, fnn) = (8, 64);
    let fused: Result<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RandomStream::for_cell(seed, 1, t);
            let x = rng.gaussian_matrix(fm, fnn);
            let w = rng.gaussian_vec(fnn);
            let res = quantize_neuron_fused(&x, &x, &w, &alphabet, &mut rng)?;
            let bound = quantization_bound(delta, p, fm, &x)?;
            Ok(norm2(&res.final_error) > bound.bound_value)
        })
        .collect();
    vec![
        rate_check(
            "bounds",
            "phase2-error-bound",
            format!("m={m} N={n} p={p} delta={delta}"),
            phase2,
            0.02,
        ),
        rate_check(
            "bounds",
            "fused-error-bound",
            format!("m={fm} N={fnn} p={p} delta={delta}"),
            fused,
            0.01,
        ),
    ]
}

fn tails(trials: usize, seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let (n, sigma, gamma) = (8, 1.0, 0.1);
    let samples: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| RandomStream::for_cell(seed, 0, t).gaussian_vec(n))
        .collect();
    let o = tail_outcome(&samples, sigma, gamma);
    out.push(Check {
        suite: "tails",
        claim: "gaussian-tail".into(),
        parameters: format!("n={n} sigma={sigma} gamma={gamma}"),
        trials,
        statistic: Some(o.violations as f64 / trials.max(1) as f64),
        threshold: "exceedances <= T*gamma + 3*sqrt(T*gamma*(1-gamma))".into(),
        violations: Some(o.violations),
        allowed: Some(o.allowed),
        passed: o.passed(),
    });

    let (m, nn, delta) = (16, 256, 0.1);
    let alphabet = Alphabet::infinite(delta).expect("positive step");
    let mut fixed = RandomStream::for_cell(seed, 1, 0);
    let xt = fixed.gaussian_matrix(m, nn);
    let w = fixed.gaussian_vec(nn);
    let sigma = delta * (std::f64::consts::PI / 2.0).sqrt() * xt.max_column_norm();
    let errors: Result<Vec<Vec<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RandomStream::for_cell(seed, 2, t);
            Ok(quantize_neuron_phase2(&xt, &w, &alphabet, &mut rng)?.final_error)
        })
        .collect();
    out.push(match errors {
        Ok(samples) => {
            let o = tail_outcome(&samples, sigma, gamma);
            Check {
                suite: "tails",
                claim: "phase2-error-tail".into(),
                parameters: format!("m={m} N={nn} delta={delta} gamma={gamma}"),
                trials,
                statistic: Some(o.violations as f64 / trials.max(1) as f64),
                threshold: "exceedances <= T*gamma + 3*sqrt(T*gamma*(1-gamma))".into(),
                violations: Some(o.violations),
                allowed: Some(o.allowed),
                passed: o.passed(),
            }
        }
        Err(e) => Check::failed("tails", "phase2-error-tail", &e),
    });
    out
}

fn projections(trials: usize, seed: u64) -> Vec<Check> {
    let ns = [20, 40, 80];
    let mut out = Vec::new();
    let mut slopes = Vec::new();
    for (k, m) in [4usize, 8].into_iter().enumerate() {
        let claim = format!("decay-m{m}");
        match projection_decay_experiment(m, &ns, trials, seed.wrapping_add(k as u64)) {
            Ok(t) => {
                let decreasing = t
                    .rows
                    .windows(2)
                    .all(|w| w[1].mean_log_norm_sq < w[0].mean_log_norm_sq);
                let bounded = t.rows.iter().all(|r| r.max_norm <= 1.0 + 1e-8);
                slopes.push(t.slope);
                out.push(Check {
                    suite: "projections",
                    claim,
                    parameters: format!("m={m} N=20,40,80"),
                    trials,
                    statistic: t.slope,
                    threshold: "mean log|P|^2 strictly decreasing in N; |P| <= 1".into(),
                    violations: None,
                    allowed: None,
                    passed: decreasing && bounded,
                });
            }
            Err(e) => {
                slopes.push(None);
                out.push(Check::failed("projections", &claim, &e));
            }
        }
    }
    let ratio = match (slopes[0], slopes[1]) {
        (Some(a), Some(b)) if a != 0.0 => Some(b / a),
        _ => None,
    };
    out.push(Check {
        suite: "projections",
        claim: "decay-flattening".into(),
        parameters: "slope(m=8)/slope(m=4)".into(),
        trials,
        statistic: ratio,
        threshold: "ratio in (0.3, 0.8)".into(),
        violations: None,
        allowed: None,
        passed: ratio.is_some_and(|r| r > 0.3 && r < 0.8),
    });

    let (m, len, alpha) = (8, 64, 1.0);
    let flags: Result<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RandomStream::for_cell(seed, 100, t);
            let cols: Vec<Vec<f64>> = (0..len).map(|_| rng.gaussian_vec(m)).collect();
            Ok(!covariance_recursion_check(&cols, alpha)?)
        })
        .collect();
    let mut c = rate_check(
        "projections",
        "covariance-recursion",
        format!("m={m} t<={len} alpha={alpha}"),
        flags,
        0.0,
    );
    c.threshold = "lambda_max(M_t) <= alpha*max|z_j|^2 + 1e-8 for every t".into();
    out.push(c);
    out
}

fn stability(trials: usize, seed: u64) -> Vec<Check> {
    let (m, n, p, eps) = (8, 64, 2, 0.05);
    vec![match stability_bound_check(m, n, p, eps, trials, seed) {
        Ok(o) => Check {
            suite: "stability",
            claim: "min-inf-stability".into(),
            parameters: format!("m={m} N={n} p={p} epsilon={eps}"),
            trials,
            statistic: Some(o.violations as f64),
            threshold: "violations <= T*q + 3*sqrt(T*q), q = 2/N^(p-1)".into(),
            violations: Some(o.violations),
            allowed: Some(o.allowed),
            passed: o.passed(),
        },
        Err(e) => Check::failed("stability", "min-inf-stability", &e),
    }]
}

fn adversarial(seed: u64) -> Vec<Check> {
    let (m, n, eps) = (8, 64, 0.3);
    [0.5, 0.25, 0.1]
        .into_iter()
        .enumerate()
        .map(|(k, gamma)| {
            let claim = format!("adversarial-ratio-gamma={gamma}");
            let meas = adversarial_instance(m, n, gamma, eps, seed.wrapping_add(k as u64))
                .and_then(|inst| measure_adversarial(&inst));
            match meas {
                Ok(r) => {
                    let expected = 1.0 / gamma;
                    let hat_ok = (r.unperturbed_objective - 1.0 / (n as f64).sqrt()).abs() <= 1e-9;
                    let ratio_ok = (r.ratio - expected).abs() <= 1e-6 * expected;
                    println!(
                        "adversarial gamma={gamma}: measured ratio {:.12} vs 1/gamma {expected}",
                        r.ratio
                    );
                    Check {
                        suite: "adversarial",
                        claim,
                        parameters: format!("m={m} N={n} epsilon={eps}"),
                        trials: 1,
                        statistic: Some(r.ratio),
                        threshold: format!(
                            "ratio = {expected} within 1e-6 relative; |w_hat|_inf = 1/sqrt(N)"
                        ),
                        violations: None,
                        allowed: None,
                        passed: hat_ok && ratio_ok,
                    }
                }
                Err(e) => Check::failed("adversarial", &claim, &e),
            }
        })
        .collect()
}

fn relu(trials: usize, seed: u64) -> Vec<Check> {
    let trials = trials.max(2);
    [
        (SigmaSpec::Identity, 16, "relu-identity"),
        (SigmaSpec::RandomPsd, 8, "relu-random-psd"),
    ]
    .into_iter()
    .enumerate()
    .map(|(k, (sigma, n, claim))| {
        match relu_expectation_check(sigma, n, trials, seed.wrapping_add(k as u64)) {
            Ok(r) => Check {
                suite: "relu",
                claim: claim.into(),
                parameters: format!("n={n}"),
                trials,
                statistic: Some(r.mean),
                threshold: format!("mean >= {} - 3*std/sqrt(T)", fmt_f64(r.lower_bound)),
                violations: None,
                allowed: None,
                passed: r.passed,
            },
            Err(e) => Check::failed("relu", claim, &e),
        }
    })
    .collect()
}

pub(crate) fn cmd_verify(a: &VerifyArgs) -> i32 {
    if a.trials == 0 {
        return usage_error("--trials must be at least 1");
    }
    let checks = run_suite(a.suite, a.trials, a.seed);
    if let Err(e) = checks_table(&checks).write_path(&a.csv) {
        return crate::report_error(&e);
    }
    for c in &checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        let stat = c.statistic.map(fmt_f64).unwrap_or_else(|| "-".into());
        println!(
            "{verdict} {}/{}: statistic {stat} ({})",
            c.suite, c.claim, c.threshold
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!(
        "suite {}: {} of {} checks passed",
        a.suite.name(),
        checks.len() - failed,
        checks.len()
    );
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}
