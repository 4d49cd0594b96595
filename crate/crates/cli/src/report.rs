//! Aggregates the CSV tables of a run directory into `summary.txt`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use boltzlab::reconstruct::ExponentMode;

pub const SUMMARY: &str = "summary.txt";

/// Relative tolerance for calling an exponent convention a match.
const MODE_TOLERANCE: f64 = 0.05;

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Option<Self>> {
        if !path.exists() {
            return Ok(None);
        }
        let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
        let header = r.headers()?.iter().map(String::from).collect();
        let rows = r.records().map(|rec| rec.map(|r| r.iter().map(String::from).collect())).collect::<std::result::Result<_, _>>()?;
        Ok(Some(Self { header, rows }))
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).with_context(|| format!("missing column {name}"))
    }

    fn floats(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column(name)?;
        Ok(self.rows.iter().filter_map(|r| r[c].parse().ok()).collect())
    }
}

fn status(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NAN, f64::max)
}

/// Writes `summary.txt` and returns its contents. Tables that are absent
/// are listed as not run.
pub fn summarize(dir: &Path) -> Result<String> {
    let mut s = String::new();
    writeln!(s, "run directory: {}", dir.display())?;

    for (label, rel) in [("verify-geometry", "verify/geometry.csv"), ("verify-collision", "verify/collision.csv")] {
        match Table::read(&dir.join(rel))? {
            None => writeln!(s, "\n[{label}] not run")?,
            Some(t) => {
                writeln!(s, "\n[{label}]")?;
                let (suite, name, passed, value, threshold) =
                    (t.column("suite")?, t.column("name")?, t.column("passed")?, t.column("value")?, t.column("threshold")?);
                for r in &t.rows {
                    writeln!(
                        s,
                        "{}  {}/{}  value {} threshold {}",
                        status(r[passed] == "true"),
                        r[suite],
                        r[name],
                        r[value],
                        r[threshold]
                    )?;
                }
            }
        }
    }

    match Table::read(&dir.join("forward/convergence.csv"))? {
        None => writeln!(s, "\n[forward] not run")?,
        Some(t) => {
            let deltas = t.floats("delta")?;
            let report: Option<boltzlab::solver::ConvergenceReport> =
                fs::read_to_string(dir.join("forward/report.json")).ok().and_then(|text| serde_json::from_str(&text).ok());
            writeln!(s, "\n[forward]")?;
            match report {
                Some(r) => writeln!(
                    s,
                    "{}  picard converged in {} iterations, ratio {}, residual {}",
                    status(r.converged),
                    r.iterations,
                    r.ratio.map_or("n/a".into(), |x| format!("{x:.3e}")),
                    r.residual.map_or("n/a".into(), |x| format!("{x:.3e}")),
                )?,
                None => writeln!(s, "?     {} iterations recorded, report.json missing", deltas.len())?,
            }
        }
    }

    match Table::read(&dir.join("linearize/pairs.csv"))? {
        None => writeln!(s, "\n[linearize] not run")?,
        Some(t) => {
            let errs = t.floats("max_abs_err")?;
            let quad = t.floats("quadrature_err")?;
            let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
            let last = errs.last().copied().unwrap_or(f64::NAN);
            let q = quad.last().copied().unwrap_or(f64::NAN);
            writeln!(s, "\n[linearize]")?;
            let seq: Vec<String> = errs.iter().map(|e| format!("{e:.3e}")).collect();
            writeln!(s, "{}  |W_fd − τ₋S| strictly decreasing: {}", status(decreasing), seq.join(" > "))?;
            writeln!(s, "{}  final error {last:.3e} < 10 × quadrature estimate {q:.3e}", status(last < 10.0 * q))?;
        }
    }

    match Table::read(&dir.join("reconstruct/probes.csv"))? {
        None => writeln!(s, "\n[reconstruct] not run")?,
        Some(t) => {
            writeln!(s, "\n[reconstruct] {} probes", t.rows.len())?;
            let mut winners = Vec::new();
            for m in ExponentMode::ALL {
                let errs = t.floats(&format!("err_{}", m.name()))?;
                let matched = errs.iter().filter(|e| **e <= MODE_TOLERANCE).count();
                if matched == t.rows.len() {
                    winners.push(m.name());
                }
                writeln!(s, "      {:<20} matches {matched}/{} probes within 5%, worst {:.3e}", m.name(), t.rows.len(), max(&errs))?;
            }
            let winner = if winners.len() == 1 { winners[0] } else { "none" };
            writeln!(s, "{}  exponent oracle winner: {winner}", status(winners.len() == 1))?;
            let rel = t.floats("rel_err")?;
            if !rel.is_empty() {
                writeln!(s, "      kernel recovery: worst relative error {:.3e} over {} probes", max(&rel), rel.len())?;
            }
            let unc = t.floats("uncertainty")?;
            writeln!(s, "      worst extrapolation uncertainty {:.3e}", max(&unc))?;
        }
    }
    if let Some(t) = Table::read(&dir.join("reconstruct/source_check.csv"))? {
        let rel = t.floats("rel_diff")?;
        writeln!(s, "      source cross-check: {} samples, worst relative difference {:.3e}", rel.len(), max(&rel))?;
    }

    fs::write(dir.join(SUMMARY), &s)?;
    Ok(s)
}
