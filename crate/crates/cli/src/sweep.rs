//! `sweep`: rerun a config along one axis and compare every run with the
//! same algorithm on a lone node (the regret ratio).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::info;
use netbandit::analysis::regret_ratio;
use netbandit::graph::Network;
use netbandit::policy::PolicySpec;
use netbandit::sim::{mean_se, replicate};
use serde::Serialize;

use crate::config::{EnvConfig, ExperimentConfig};
use crate::error::CliError;
use crate::output::write_artifacts;
use crate::run::{cmd_run_config, run_dir, RunOptions};
use crate::svg::{Chart, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axis {
    T,
    K,
    N,
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "T" | "t" => Ok(Axis::T),
            "K" | "k" => Ok(Axis::K),
            "N" | "n" => Ok(Axis::N),
            _ => Err(format!("unknown axis {s:?}, expected T, K or N")),
        }
    }
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::T => "T",
            Axis::K => "K",
            Axis::N => "N",
        }
    }

    /// `cfg` with the axis set to `value`.
    pub fn apply(self, cfg: &ExperimentConfig, value: usize) -> Result<ExperimentConfig, CliError> {
        let mut out = cfg.clone();
        match self {
            Axis::T => out.horizon = value,
            Axis::K => match &mut out.env {
                EnvConfig::Stochastic { arms: Some(k), .. } | EnvConfig::Adversarial { arms: Some(k), .. } => *k = value,
                _ => {
                    return Err(CliError::Config(
                        "sweep over K needs env.arms (explicit means or a tape file fix K)".into(),
                    ))
                }
            },
            Axis::N => {
                out.network = cfg.network.with_nodes(value).ok_or_else(|| {
                    CliError::Config("sweep over N needs a complete, cycle, star or regular network".into())
                })?;
                for v in &mut out.variants {
                    if let Some(net) = &v.network {
                        // A variant pinned to a lone node stays the baseline.
                        if let Some(resized) = net.with_nodes(value) {
                            v.network = Some(resized);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: usize,
    pub run: String,
    pub mean: f64,
    pub se: f64,
    pub baseline_mean: f64,
    pub baseline_se: f64,
    pub ratio: f64,
    pub dir: PathBuf,
}

pub const SWEEP_HEADER: &str = "axis,value,run_id,mean,se,baseline_mean,baseline_se,ratio";

/// The policy a lone node would run in place of the run's agents: the first
/// one that acts on its own.
fn solo_policy(policies: &[PolicySpec]) -> PolicySpec {
    policies
        .iter()
        .find(|p| !matches!(p, PolicySpec::CopyFollower { .. }))
        .cloned()
        .unwrap_or(PolicySpec::Ucbn { alpha: 2.5 })
}

pub fn cmd_sweep_config(
    cfg: ExperimentConfig,
    axis: Axis,
    values: &[usize],
    opts: &RunOptions,
) -> Result<(PathBuf, Vec<SweepPoint>), CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    let mut base = cfg.clone();
    opts.apply(&mut base);
    let mut points = Vec::new();
    for &value in values {
        let mut point_cfg = axis.apply(&cfg, value)?;
        point_cfg.validate()?;
        let out = cmd_run_config(point_cfg.clone(), opts)?;
        opts.apply(&mut point_cfg);
        let seeds = point_cfg.replication_indices();
        for (run, summary) in point_cfg.runs()?.iter().zip(&out.summary.runs) {
            let solo = run.template.with_network(Network::single(), solo_policy(&run.template.policies));
            info!("sweep {}={value}: baseline for {}", axis.name(), run.name);
            let alone = replicate(&solo, &seeds, opts.workers.max(1), |_, trace| Ok(trace.final_regret(0)))?;
            let (baseline_mean, baseline_se) = mean_se(&alone);
            points.push(SweepPoint {
                value,
                run: run.name.clone(),
                mean: summary.mean_regret,
                se: summary.se,
                baseline_mean,
                baseline_se,
                ratio: regret_ratio(summary.mean_regret, baseline_mean).unwrap_or(f64::NAN),
                dir: out.dir.clone(),
            });
        }
    }

    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for p in &points {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            axis.name(),
            p.value,
            p.run,
            p.mean,
            p.se,
            p.baseline_mean,
            p.baseline_se,
            p.ratio
        );
    }
    let mut chart = Chart::new(&format!("regret ratio vs {}", axis.name()), axis.name(), "regret ratio");
    let mut names: Vec<&str> = Vec::new();
    for p in &points {
        if !names.contains(&p.run.as_str()) {
            names.push(&p.run);
        }
    }
    for name in names {
        let pts: Vec<&SweepPoint> = points.iter().filter(|p| p.run == name).collect();
        chart.series.push(Series {
            name: name.into(),
            xs: pts.iter().map(|p| p.value as f64).collect(),
            ys: pts.iter().map(|p| p.ratio).collect(),
            band: None,
        });
    }
    let values_tag: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    let dir = run_dir(&base).join(format!("sweep-{}-{}", axis.name(), values_tag.join("_")));
    write_artifacts(
        &dir,
        &[("sweep.csv", csv.into_bytes()), ("ratio.svg", chart.render().into_bytes())],
        opts.force,
    )?;
    Ok((dir, points))
}

pub fn cmd_sweep(
    config: &Path,
    axis: Axis,
    values: &[usize],
    opts: &RunOptions,
) -> Result<(PathBuf, Vec<SweepPoint>), CliError> {
    cmd_sweep_config(ExperimentConfig::load(config)?, axis, values, opts)
}
