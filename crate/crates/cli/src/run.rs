//! `run`: replicate every run of a config, then write the trace CSV, the
//! bound summary and the regret plot into one output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::info;
use netbandit::analysis::{
    centralized_bound_expression, corollary_complete_bound, lower_bound_gamma, regime_bound, theorem1_bound_for_node,
    theorem2_bound, BoundReport, Verdict,
};
use netbandit::env::Environment;
use netbandit::policy::estimator::beta_for;
use netbandit::policy::{theta_beta, PolicySpec};
use netbandit::sim::{
    aggregate, checkpoints, csv_header, mean_se, replicate, write_csv_rows, CheckpointMode, Episode, RunTrace,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, Run};
use crate::error::CliError;
use crate::output::write_artifacts;
use crate::svg::{Chart, Series};

/// Width of the plotted error bands, in standard errors.
pub const BAND_SE: f64 = 2.0;

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seeds: Option<Vec<u64>>,
    pub workers: usize,
    pub force: bool,
    pub checkpoint: Option<CheckpointMode>,
}

impl RunOptions {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(out) = &self.out {
            cfg.output = Some(out.clone());
        }
        if let Some(seeds) = &self.seeds {
            cfg.seeds = Some(seeds.clone());
        }
        if let Some(mode) = self.checkpoint {
            cfg.checkpoint = mode;
        }
    }
}

/// What one replication leaves behind once its trace is dropped.
struct RepResult {
    csv: String,
    final_regret: Vec<f64>,
    /// `[checkpoint][node]`
    regret_at: Vec<Vec<f64>>,
    /// Per-node bound values; `None` where a bound does not apply.
    ucb_bound: Vec<Option<f64>>,
    adaptive_bound: Vec<Option<f64>>,
    gamma_lower: Vec<Option<f64>>,
    anomalies: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeSummary {
    pub node: usize,
    pub policy: String,
    pub mean_regret: f64,
    pub se: f64,
    pub anomalies: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSummary {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    pub value: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical_se: Option<f64>,
    pub inputs: BTreeMap<String, f64>,
}

impl BoundSummary {
    fn from_report(r: BoundReport, node: Option<usize>) -> Self {
        Self {
            name: r.name,
            node,
            value: r.value,
            verdict: r.verdict,
            empirical_mean: r.empirical.map(|e| e.0),
            empirical_se: r.empirical.map(|e| e.1),
            inputs: r.inputs.into_iter().collect(),
        }
    }
}

/// One policy group's mean regret curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub t: Vec<f64>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub nodes: usize,
    /// Node-averaged final regret across replications.
    pub mean_regret: f64,
    pub se: f64,
    #[serde(rename = "node")]
    pub node_summaries: Vec<NodeSummary>,
    #[serde(rename = "bound")]
    pub bounds: Vec<BoundSummary>,
    #[serde(skip)]
    pub curves: Vec<Curve>,
    /// Per-replication node-averaged final regret.
    #[serde(skip)]
    pub per_replication: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub config_hash: String,
    pub master_seed: u64,
    pub horizon: usize,
    pub arms: usize,
    pub replications: usize,
    pub bands: String,
    #[serde(rename = "run")]
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub summary: ExperimentSummary,
    pub files: Vec<PathBuf>,
}

fn alpha_of(spec: &PolicySpec) -> Option<f64> {
    match spec {
        PolicySpec::Ucbn { alpha } | PolicySpec::Ucb { alpha } => Some(*alpha),
        _ => None,
    }
}

fn reduce(run: &Run, ep: &Episode, trace: &RunTrace, marks: &[usize]) -> Result<RepResult, netbandit::Error> {
    let mut csv = Vec::new();
    write_csv_rows(trace, &run.name, ep.replication, marks, &mut csv)?;
    let nodes = trace.nodes;
    let gaps = match &ep.env {
        Environment::Stochastic(s) => Some(s.gaps()),
        Environment::Adversarial(_) => None,
    };
    let mut ucb_bound = vec![None; nodes];
    let mut adaptive_bound = vec![None; nodes];
    let mut gamma_lower = vec![None; nodes];
    for (v, spec) in ep.policies.iter().enumerate() {
        if let (Some(gaps), Some(alpha)) = (&gaps, alpha_of(spec)) {
            ucb_bound[v] = Some(theorem1_bound_for_node(trace, v, gaps, alpha)?);
        }
        if matches!(spec, PolicySpec::ExpnAdaptive) {
            let gammas = trace.gamma_series(v);
            adaptive_bound[v] = Some(theorem2_bound(&gammas, trace.arms));
            gamma_lower[v] = Some(lower_bound_gamma(&gammas));
        }
    }
    Ok(RepResult {
        csv: String::from_utf8(csv).expect("csv is ascii"),
        final_regret: (0..nodes).map(|v| trace.final_regret(v)).collect(),
        regret_at: marks.iter().map(|&t| (0..nodes).map(|v| trace.cum_regret(t, v)).collect()).collect(),
        ucb_bound,
        adaptive_bound,
        gamma_lower,
        anomalies: trace.anomalies.clone(),
    })
}

fn column_mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    mean_se(&v).0
}

/// Groups nodes by policy label, in order of first appearance.
fn groups(labels: &[&'static str]) -> Vec<(&'static str, Vec<usize>)> {
    let mut out: Vec<(&'static str, Vec<usize>)> = Vec::new();
    for (v, l) in labels.iter().enumerate() {
        match out.iter_mut().find(|(g, _)| g == l) {
            Some((_, members)) => members.push(v),
            None => out.push((l, vec![v])),
        }
    }
    out
}

fn summarize(run: &Run, reps: &[RepResult], marks: &[usize], arms: usize) -> Result<RunSummary, CliError> {
    let tpl = &run.template;
    let nodes = tpl.network.nodes();
    let horizon = tpl.horizon;
    let mut node_summaries = Vec::with_capacity(nodes);
    let mut bounds = Vec::new();
    for v in 0..nodes {
        let finals: Vec<f64> = reps.iter().map(|r| r.final_regret[v]).collect();
        let (mean, se) = mean_se(&finals);
        node_summaries.push(NodeSummary {
            node: v,
            policy: run.labels[v].into(),
            mean_regret: mean,
            se,
            anomalies: reps.iter().map(|r| r.anomalies[v]).sum(),
        });
        let spec = &tpl.policies[v];
        if reps[0].ucb_bound[v].is_some() {
            let value = column_mean(reps.iter().filter_map(|r| r.ucb_bound[v]));
            let alpha = alpha_of(spec).unwrap_or(f64::NAN);
            let report = BoundReport::upper("ucbn_upper", value, vec![("alpha".into(), alpha)], mean, se);
            bounds.push(BoundSummary::from_report(report, Some(v)));
        }
        if reps[0].adaptive_bound[v].is_some() {
            let value = column_mean(reps.iter().filter_map(|r| r.adaptive_bound[v]));
            let inputs = vec![("arms".into(), arms as f64), ("horizon".into(), horizon as f64)];
            let report = BoundReport::upper("expn_adaptive_upper", value, inputs, mean, se);
            bounds.push(BoundSummary::from_report(report, Some(v)));
            let lower = column_mean(reps.iter().filter_map(|r| r.gamma_lower[v]));
            let report = BoundReport::informational("expn_lower_scale", lower, vec![("horizon".into(), horizon as f64)]);
            bounds.push(BoundSummary::from_report(report, Some(v)));
        }
        if let PolicySpec::ExpnFixed { eps, theta, .. } = spec {
            let theta = match (theta, eps) {
                (Some(t), _) => Some(*t),
                (None, Some(e)) => Some(theta_beta(e, arms)?.0),
                _ => None,
            };
            if let Some(theta) = theta {
                let beta = beta_for(theta, arms);
                let (regime, value) = regime_bound(theta, beta, arms, horizon);
                let inputs = vec![
                    ("theta".into(), theta),
                    ("beta".into(), beta),
                    ("regime".into(), regime as u8 as f64),
                ];
                let report = BoundReport::informational("expn_fixed_regime", value, inputs);
                bounds.push(BoundSummary::from_report(report, Some(v)));
            }
        }
    }

    let per_replication: Vec<f64> = reps.iter().map(|r| r.final_regret.iter().sum::<f64>() / nodes as f64).collect();
    let (mean_regret, se) = mean_se(&per_replication);

    let all_ucbn = tpl.policies.iter().all(|p| matches!(p, PolicySpec::Ucbn { .. }));
    if nodes > 1 && all_ucbn && tpl.network.is_complete() && reps[0].ucb_bound[0].is_some() {
        let alpha = alpha_of(&tpl.policies[0]).unwrap_or(f64::NAN);
        let gaps = match tpl.env {
            netbandit::sim::EnvSource::Fixed(Environment::Stochastic(ref s)) => s.gaps(),
            _ => unreachable!("UCB bounds are only computed for stochastic bandits"),
        };
        let value = corollary_complete_bound(nodes, horizon, &gaps, alpha)?;
        let inputs = vec![("b".into(), nodes as f64), ("alpha".into(), alpha)];
        let report = BoundReport::upper("ucbn_complete_upper", value, inputs, mean_regret, se);
        bounds.push(BoundSummary::from_report(report, None));
    }
    if run.centralized {
        let diameter = tpl.network.diameter()?;
        let b_max = tpl.network.max_degree();
        let value = centralized_bound_expression(diameter, b_max, arms, horizon);
        let inputs = vec![("diameter".into(), diameter as f64), ("b_max".into(), b_max as f64)];
        let report = BoundReport::informational("centralized_scale", value, inputs);
        bounds.push(BoundSummary::from_report(report, None));
    }

    let mut curves = Vec::new();
    for (label, members) in groups(&run.labels) {
        let series: Vec<Vec<f64>> = reps
            .iter()
            .map(|r| {
                r.regret_at
                    .iter()
                    .map(|row| members.iter().map(|&v| row[v]).sum::<f64>() / members.len() as f64)
                    .collect()
            })
            .collect();
        let (mean, se) = aggregate(&series)?;
        curves.push(Curve {
            label: format!("{}/{label}", run.name),
            t: marks.iter().map(|&t| t as f64).collect(),
            mean,
            se,
        });
    }

    Ok(RunSummary {
        name: run.name.clone(),
        nodes,
        mean_regret,
        se,
        node_summaries,
        bounds,
        curves,
        per_replication,
    })
}

pub fn curves_chart(title: &str, curves: &[Curve], band: f64) -> Chart {
    let mut chart = Chart::regret(title);
    for c in curves {
        chart.series.push(Series {
            name: c.label.clone(),
            xs: c.t.clone(),
            ys: c.mean.clone(),
            band: Some(c.se.iter().map(|s| band * s).collect()),
        });
    }
    chart
}

/// Directory a config's artifacts land in: `<output>/<hash>-<master seed>`.
pub fn run_dir(cfg: &ExperimentConfig) -> PathBuf {
    let base = cfg.output.clone().unwrap_or_else(|| PathBuf::from("out"));
    base.join(format!("{}-{}", cfg.hash(), cfg.master_seed))
}

/// Runs everything without touching the filesystem beyond reading inputs.
pub fn execute(cfg: &ExperimentConfig, workers: usize) -> Result<(ExperimentSummary, Vec<u8>), CliError> {
    let runs = cfg.runs()?;
    let seeds = cfg.replication_indices();
    let marks = checkpoints(cfg.horizon, cfg.checkpoint);
    let arms = runs[0].template.env.arms();
    let mut csv = csv_header(arms).into_bytes();
    csv.push(b'\n');
    let mut summaries = Vec::with_capacity(runs.len());
    for run in &runs {
        info!(
            "run {}: {} nodes, T = {}, {} replications",
            run.name,
            run.template.network.nodes(),
            cfg.horizon,
            seeds.len()
        );
        let reps = replicate(&run.template, &seeds, workers, |ep, trace| reduce(run, ep, trace, &marks))?;
        for r in &reps {
            csv.extend_from_slice(r.csv.as_bytes());
        }
        summaries.push(summarize(run, &reps, &marks, arms)?);
    }
    let summary = ExperimentSummary {
        config_hash: cfg.hash(),
        master_seed: cfg.master_seed,
        horizon: cfg.horizon,
        arms,
        replications: seeds.len(),
        bands: format!("mean ± {BAND_SE}·se across replications"),
        runs: summaries,
    };
    Ok((summary, csv))
}

pub fn cmd_run_config(mut cfg: ExperimentConfig, opts: &RunOptions) -> Result<RunOutput, CliError> {
    opts.apply(&mut cfg);
    let dir = run_dir(&cfg);
    let (summary, csv) = execute(&cfg, opts.workers.max(1))?;
    let curves: Vec<Curve> = summary.runs.iter().flat_map(|r| r.curves.clone()).collect();
    let svg = curves_chart(&format!("{} (T = {})", cfg.name, cfg.horizon), &curves, BAND_SE).render();
    let summary_text = toml::to_string(&summary).map_err(|e| CliError::Config(format!("summary: {e}")))?;
    let files = write_artifacts(
        &dir,
        &[
            ("config.toml", cfg.canonical().to_toml().into_bytes()),
            ("trace.csv", csv),
            ("summary.toml", summary_text.into_bytes()),
            ("regret.svg", svg.into_bytes()),
        ],
        opts.force,
    )?;
    for r in &summary.runs {
        info!("{}: mean regret {:.3} ± {:.3}", r.name, r.mean_regret, r.se);
        for b in r.bounds.iter().filter(|b| b.verdict == Verdict::Violated) {
            log::warn!("{}: bound {} violated ({:.3})", r.name, b.name, b.value);
        }
    }
    Ok(RunOutput { dir, summary, files })
}

pub fn cmd_run(config: &Path, opts: &RunOptions) -> Result<RunOutput, CliError> {
    cmd_run_config(ExperimentConfig::load(config)?, opts)
}
