use std::fs;

use anyhow::{bail, Context, Result};
use rdbprofile::csbm::{
    crossover_experiment, crossover_spec, gating_experiment, snr, CrossoverOptions, CsbmSpec, GatingSetup,
};

use crate::output::{envelope, Run};
use crate::{CsbmCommand, CsbmSpecArgs};

/// Spec from `--spec`, from the flags, or `default` when neither is given.
/// Flags left unset take the default's values; `seed` always applies.
fn resolve_spec(a: &CsbmSpecArgs, default: CsbmSpec, seed: u64, run: &mut Run) -> Result<CsbmSpec> {
    let mut spec = if let Some(path) = &a.spec {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        run.input(path)?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    } else if !a.gamma.is_empty() {
        let degrees = match a.degree.as_slice() {
            [] => bail!("--gamma needs --degree"),
            [d] => vec![*d; a.gamma.len()],
            ds if ds.len() == a.gamma.len() => ds.to_vec(),
            ds => bail!("--degree has {} values for {} gammas", ds.len(), a.gamma.len()),
        };
        CsbmSpec::from_gammas(default.n, default.pi, default.delta, &a.gamma, &degrees, seed)
    } else if !a.degree.is_empty() {
        bail!("--degree needs --gamma");
    } else {
        default
    };
    if let Some(d) = a.delta {
        spec.delta = d;
    }
    if let Some(n) = a.n {
        spec.n = n;
    }
    if let Some(pi) = a.pi {
        spec.pi = pi;
    }
    spec.seed = seed;
    spec.resolved()?;
    Ok(spec)
}

pub(crate) fn csbm(cmd: &CsbmCommand, seed: u64) -> Result<()> {
    let mut run = Run::new("csbm", seed, serde_json::to_value(cmd)?);
    match cmd {
        CsbmCommand::Gating { spec, seeds, out } => {
            let mixed = resolve_spec(spec, GatingSetup::default().mixed, seed, &mut run)?;
            let report = gating_experiment(&GatingSetup::from_mixed(mixed)?, *seeds)?;
            eprintln!(
                "mixed: gated {:.4} linear {:.4}; strong gap {:.4}; zero-info shift gated {:+.4} linear {:+.4}",
                report.mixed.gated_mean,
                report.mixed.linear_mean,
                report.strong_gap,
                report.zero_info_gated_shift,
                report.zero_info_linear_shift
            );
            run.emit_json(out.as_deref(), &envelope("csbm gating", report))?;
        }
        CsbmCommand::Crossover { spec, grid, seeds, train_pool, test_pool, csv, out } => {
            let spec = resolve_spec(spec, crossover_spec(), seed, &mut run)?;
            let opts =
                CrossoverOptions { grid: grid.clone(), seeds: *seeds, train_pool: *train_pool, test_pool: *test_pool };
            let report = crossover_experiment(&spec, &opts)?;
            eprintln!("crossover detected in {:.1}% of seeds", 100.0 * report.detection_rate);
            run.emit_json(out.as_deref(), &envelope("csbm crossover", &report))?;
            if let Some(p) = csv {
                run.emit(Some(p), report.to_csv().as_bytes())?;
            }
        }
        CsbmCommand::Snr { spec, mc_samples, out } => {
            let spec = resolve_spec(spec, GatingSetup::default().mixed, seed, &mut run)?;
            let report = snr(&spec, *mc_samples, seed)?;
            run.emit_json(out.as_deref(), &envelope("csbm snr", report))?;
        }
    }
    run.finish()
}
