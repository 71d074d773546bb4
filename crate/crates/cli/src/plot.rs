//! `plot`: regret curves from one or more trace CSVs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use netbandit::sim::{mean_se, CSV_HEADER_FIXED};

use crate::error::CliError;
use crate::output::write_artifacts;
use crate::run::Curve;

/// Per run id: seed → t → node regrets.
type Table = Vec<(String, BTreeMap<u64, BTreeMap<u64, Vec<f64>>>)>;

fn check_header(path: &Path, header: &str) -> Result<usize, CliError> {
    let bad = |msg: String| CliError::Schema(format!("{}: {msg}", path.display()));
    let rest = header
        .strip_prefix(CSV_HEADER_FIXED)
        .ok_or_else(|| bad(format!("header must start with {CSV_HEADER_FIXED:?}")))?;
    let mut arms = 0;
    for col in rest.split(',').skip(1) {
        if col != format!("n_prime_{arms}") {
            return Err(bad(format!("unexpected column {col:?}")));
        }
        arms += 1;
    }
    if !rest.is_empty() && arms == 0 {
        return Err(bad("malformed header".into()));
    }
    Ok(arms)
}

fn read_into(path: &Path, table: &mut Table, arms: &mut Option<usize>) -> Result<(), CliError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::Schema(format!("{}: empty file", path.display())))?;
    let k = check_header(path, header)?;
    if *arms.get_or_insert(k) != k {
        return Err(CliError::Schema(format!("{}: {k} arms, earlier files have {}", path.display(), arms.unwrap())));
    }
    for (i, line) in lines.enumerate() {
        let bad = |what: &str| CliError::Schema(format!("{}:{}: {what}", path.display(), i + 2));
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 8 + k {
            return Err(bad("wrong number of columns"));
        }
        let seed: u64 = cells[1].parse().map_err(|_| bad("seed is not an integer"))?;
        let t: u64 = cells[3].parse().map_err(|_| bad("t is not an integer"))?;
        let regret: f64 = cells[6].parse().map_err(|_| bad("cum_regret is not a number"))?;
        let run = cells[0];
        let idx = match table.iter().position(|(r, _)| r == run) {
            Some(i) => i,
            None => {
                table.push((run.to_string(), BTreeMap::new()));
                table.len() - 1
            }
        };
        table[idx].1.entry(seed).or_default().entry(t).or_default().push(regret);
    }
    Ok(())
}

/// Node-averaged regret per seed, then mean ± se across seeds, at the
/// rounds every seed logged.
pub fn curves_from_csv(paths: &[&Path]) -> Result<Vec<Curve>, CliError> {
    let mut table = Table::new();
    let mut arms = None;
    for p in paths {
        read_into(p, &mut table, &mut arms)?;
    }
    let mut curves = Vec::new();
    for (run, seeds) in table {
        let mut by_t: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        for rounds in seeds.values() {
            for (t, regrets) in rounds {
                by_t.entry(*t).or_default().push(regrets.iter().sum::<f64>() / regrets.len() as f64);
            }
        }
        let mut curve = Curve {
            label: run,
            t: Vec::new(),
            mean: Vec::new(),
            se: Vec::new(),
        };
        for (t, values) in by_t.into_iter().filter(|(_, v)| v.len() == seeds.len()) {
            let (m, se) = mean_se(&values);
            curve.t.push(t as f64);
            curve.mean.push(m);
            curve.se.push(se);
        }
        curves.push(curve);
    }
    Ok(curves)
}

pub fn cmd_plot(csvs: &[&Path], output: &Path, log_x: bool, force: bool) -> Result<(), CliError> {
    if csvs.is_empty() {
        return Err(CliError::Schema("no input files".into()));
    }
    let curves = curves_from_csv(csvs)?;
    let mut chart = crate::run::curves_chart("cumulative regret", &curves, 1.0);
    chart.log_x = log_x;
    let dir = output.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = output
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| CliError::Schema(format!("{}: not a file name", output.display())))?;
    write_artifacts(dir, &[(name, chart.render().into_bytes())], force)?;
    Ok(())
}

