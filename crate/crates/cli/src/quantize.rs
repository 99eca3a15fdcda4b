use spfq_core::network::read_data_csv;
use spfq_core::{quantize_network, AlignMode, MlpNetwork, QuantConfig, Resolution};

use crate::{report_error, usage_error, Bits, ModeArg, QuantizeArgs, EXIT_OK};

pub(crate) fn config_from_args(a: &QuantizeArgs) -> Result<QuantConfig, String> {
    let resolution = match a.bits {
        Bits::Infinite => {
            if a.delta.is_none() {
                return Err("--bits inf requires --delta".into());
            }
            Resolution::Infinite
        }
        Bits::Finite(b) => Resolution::Bits(b),
    };
    if let Some(d) = a.delta {
        if !(d.is_finite() && d > 0.0) {
            return Err(format!("--delta must be positive, got {d}"));
        }
    }
    if !(a.step_constant.is_finite() && a.step_constant > 0.0) {
        return Err(format!(
            "--step-constant must be positive, got {}",
            a.step_constant
        ));
    }
    if a.order == 0 {
        return Err("--order must be at least 1".into());
    }
    if a.p < 2 {
        return Err(format!("--p must be at least 2, got {}", a.p));
    }
    Ok(QuantConfig {
        resolution,
        step_constant: a.step_constant,
        explicit_delta: a.delta,
        mode: match a.mode {
            ModeArg::Fused => AlignMode::Fused,
            ModeArg::Perfect => AlignMode::Perfect,
            ModeArg::OrderR => AlignMode::OrderR,
        },
        order: a.order,
        prob_exponent: a.p,
        seed: a.seed,
    })
}

pub(crate) fn cmd_quantize(a: &QuantizeArgs) -> i32 {
    let cfg = match config_from_args(a) {
        Ok(c) => c,
        Err(msg) => return usage_error(&msg),
    };
    let net = match MlpNetwork::load(&a.network) {
        Ok(n) => n,
        Err(e) => {
            eprintln!("while reading {}:", a.network.display());
            return report_error(&e);
        }
    };
    let data = match read_data_csv(&a.data) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("while reading {}:", a.data.display());
            return report_error(&e);
        }
    };
    let (qnet, mut report) = match quantize_network(&net, &data, &cfg) {
        Ok(r) => r,
        Err(e) => return report_error(&e),
    };
    if !a.timing {
        report.clear_timing();
    }
    if let Err(e) = qnet.save(&a.out) {
        return report_error(&e);
    }
    let written = report.to_json().and_then(|mut s| {
        s.push('\n');
        std::fs::write(&a.report, s).map_err(Into::into)
    });
    if let Err(e) = written {
        return report_error(&e);
    }
    for l in &report.per_layer {
        let bound = l.bound.map_or("n/a".to_string(), |b| format!("{b:.6e}"));
        println!(
            "layer {}: delta={:.6e} max_col_error={:.6e} bound={} overflow={} zero_columns={}",
            l.layer, l.delta, l.max_col_error, bound, l.overflow_count, l.zero_column_count
        );
    }
    println!(
        "network: frobenius_error={:.6e} relative_error={:.6e}",
        report.network_level.frobenius_error, report.network_level.relative_error
    );
    EXIT_OK
}
