//! Comma-separated output with `#` comment headers.
//!
//! Every file starts with the tool version, command, seed, RNG identity and
//! the full scenario echoed as TOML between two marker lines, so a result
//! file alone is enough to rerun it.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use risdeploy_core::{fraunhofer_distance, RNG_IDENTITY};

use crate::scenario::ScenarioFile;

pub const SCENARIO_BEGIN: &str = "# --- scenario ---";
pub const SCENARIO_END: &str = "# --- end scenario ---";

/// Aperture distance quoted in the reference parameter list for the
/// 200 x 200 half-wavelength panel.
pub const QUOTED_FRAUNHOFER_M: f64 = 400.0;

/// Six significant digits, plain decimal notation for moderate magnitudes
/// and `e` notation otherwise. Never locale dependent.
pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let e = v.abs().log10().floor() as i32;
    // Rounding can carry into the next decade (999999.5 -> 1e6).
    let s = format!("{:.5e}", v);
    let e_rounded: i32 = s.rsplit('e').next().unwrap().parse().unwrap();
    let e = e.max(e_rounded);
    if (-5..6).contains(&e) {
        format!("{:.*}", (5 - e) as usize, v)
    } else {
        s
    }
}

/// `d` with up to 12 decimals and no trailing zeros, for grid axes and
/// configuration values.
pub fn exact(v: f64) -> String {
    let s = format!("{v:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

pub fn fraunhofer_line(scenario: &ScenarioFile) -> String {
    let ris = scenario.ris_config();
    let n = ris.n_elements();
    let d = fraunhofer_distance(n, ris.elem_a, ris.elem_b, scenario.wavelength());
    format!(
        "fraunhofer distance 2*N*sqrt(a^2+b^2)/lambda with N = {n}: {} m; quoted value {} m; not reconciled",
        sig6(d),
        QUOTED_FRAUNHOFER_M
    )
}

#[derive(Debug, Clone)]
pub struct Header {
    lines: Vec<String>,
    scenario: ScenarioFile,
}

impl Header {
    pub fn new(command: &str, scenario: &ScenarioFile) -> Self {
        let lines = vec![
            format!("risdeploy {}", env!("CARGO_PKG_VERSION")),
            format!("command: {command}"),
            format!("seed: {}", scenario.run.seed),
            format!("draws: {}", scenario.run.n_draws),
            format!("rng: {RNG_IDENTITY}"),
            fraunhofer_line(scenario),
        ];
        Self { lines, scenario: scenario.clone() }
    }

    pub fn line(mut self, text: impl Into<String>) -> Self {
        self.lines.push(text.into());
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            writeln!(out, "# {l}").unwrap();
        }
        writeln!(out, "{SCENARIO_BEGIN}").unwrap();
        for l in self.scenario.to_toml().lines() {
            if l.is_empty() {
                writeln!(out, "#").unwrap();
            } else {
                writeln!(out, "# {l}").unwrap();
            }
        }
        writeln!(out, "{SCENARIO_END}").unwrap();
        out
    }
}

/// Rebuilds the scenario echoed in a result file's header.
pub fn parse_scenario_echo(text: &str) -> anyhow::Result<ScenarioFile> {
    let mut inside = false;
    let mut doc = String::new();
    for line in text.lines() {
        if line == SCENARIO_BEGIN {
            inside = true;
        } else if line == SCENARIO_END {
            return ScenarioFile::from_toml(&doc);
        } else if inside {
            let body = line.strip_prefix('#').context("scenario echo line without '#'")?;
            doc.push_str(body.strip_prefix(' ').unwrap_or(body));
            doc.push('\n');
        }
    }
    anyhow::bail!("no complete scenario echo found")
}

/// A CSV table: header, one column-name row, then data rows.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, header: &Header) -> String {
        let mut out = header.render();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(4.96), "4.96000");
        assert_eq!(sig6(12.3456789), "12.3457");
        assert_eq!(sig6(0.000123456789), "0.000123457");
        assert_eq!(sig6(-3.0), "-3.00000");
        assert_eq!(sig6(56568.542), "56568.5");
        assert_eq!(sig6(999999.7), "1.00000e6");
        assert_eq!(sig6(1.5875e14), "1.58750e14");
        assert_eq!(sig6(9.999996), "10.0000");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn exact_trims_zeros() {
        assert_eq!(exact(-49.75), "-49.75");
        assert_eq!(exact(3.0), "3");
        assert_eq!(exact(-0.0), "0");
        assert_eq!(exact(0.25), "0.25");
    }

    #[test]
    fn header_echo_round_trips() {
        let mut s = ScenarioFile::default();
        s.run.seed = 42;
        s.layout.y_ris = 22.0;
        s.ris.elem_b = Some(0.003);
        let text = Table::new(&["a"]).render(&Header::new("test", &s).line("extra"));
        assert!(text.lines().all(|l| l.starts_with('#') || l == "a"));
        assert_eq!(parse_scenario_echo(&text).unwrap(), s);
    }

    #[test]
    fn fraunhofer_line_shows_both_values() {
        let line = fraunhofer_line(&ScenarioFile::default());
        assert!(line.contains("56568.5 m"), "{line}");
        assert!(line.contains("400 m"), "{line}");
    }
}
