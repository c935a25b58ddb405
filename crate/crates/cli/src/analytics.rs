use crate::config::{GridSpec, RunConfig};
use crate::format::g12;
use splitflow::frontier::{sweep_fractions, sweep_simplex};
use splitflow::{
    estimate_moments, fit_profile, pareto_frontier, rescale_to_full, select_fraction, Error, MomentPoint,
    PartitionedModel, Result,
};
use std::io::{BufRead, Write};

fn sweep_pair(config: &RunConfig) -> Result<Vec<MomentPoint>> {
    let [a, b] = config.pair()?;
    sweep_fractions(a, b, &config.fractions()?, &config.quad()?)
}

pub fn analyze(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let objective = config.objective()?;
    let points = sweep_pair(config)?;
    writeln!(out, "f,mu,var,pareto")?;
    for p in &points {
        writeln!(out, "{},{},{},{}", g12(p.f()), g12(p.mean), g12(p.variance), p.pareto)?;
    }
    if let Some(obj) = objective {
        let best = select_fraction(&points, obj)?;
        writeln!(out, "# selected f={}", g12(best.f()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn frontier(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let profiles = config.profiles()?;
    let points = match (&config.grid, profiles.len()) {
        (Some(GridSpec::Values(_)), 2) => sweep_pair(config)?,
        _ => sweep_simplex(&profiles, config.step()?, &config.quad()?)?,
    };
    let efficient = pareto_frontier(&points)?;
    let header: Vec<String> = (1..=profiles.len()).map(|i| format!("f_{i}")).collect();
    writeln!(out, "{},mu,var", header.join(","))?;
    for p in &efficient {
        let fs: Vec<String> = p.fractions.iter().map(|&f| g12(f)).collect();
        writeln!(out, "{},{},{}", fs.join(","), g12(p.mean), g12(p.variance))?;
    }
    out.flush()?;
    Ok(())
}

pub fn simulate(config: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let [a, b] = config.pair()?;
    let fractions = config.fractions()?;
    let sim = config.sim()?;
    writeln!(out, "f,empirical_mean,empirical_var,stderr,trials")?;
    for f in fractions {
        let r = estimate_moments(&PartitionedModel::split(a, b, f)?, &sim)?;
        let var = if r.variance_defined { g12(r.empirical_variance) } else { "nan".into() };
        writeln!(out, "{},{},{},{},{}", g12(f), g12(r.empirical_mean), var, g12(r.std_error_mean), r.trials)?;
    }
    out.flush()?;
    Ok(())
}

/// Parses one sample per line; blank lines are skipped.
pub fn read_samples<R: BufRead>(input: R) -> Result<Vec<f64>> {
    let mut samples = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let x: f64 = t
            .parse()
            .map_err(|_| Error::Data(format!("line {}: cannot parse {t:?} as a number", i + 1)))?;
        samples.push(x);
    }
    Ok(samples)
}

pub fn fit<R: BufRead>(input: R, fraction: Option<f64>, out: &mut dyn Write) -> Result<()> {
    let report = fit_profile(read_samples(input)?)?;
    let mut json = serde_json::to_value(report).expect("fit report serializes");
    if let Some(f) = fraction {
        let full = rescale_to_full(&report, f)?;
        json["fraction"] = f.into();
        json["full_mu"] = full.mu().into();
        json["full_sigma"] = full.sigma().into();
    }
    writeln!(out, "{json}")?;
    out.flush()?;
    Ok(())
}
