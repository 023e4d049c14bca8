//! Result documents and their json / csv / text renderings.

use std::fmt::Write as _;

use elfving_core::{Certificate, DesignMeasure, Vector};
use serde::{Deserialize, Serialize};

use crate::problem::ProblemFile;
use crate::{fmt_sig, round_sig, CliError, Format};

pub const TOOL: &str = "elfving";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    pub x: Vec<f64>,
    pub weight: f64,
    pub sign: i8,
}

/// The design on the transformed curve of a logistic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformedSection {
    /// Rows of `B`.
    pub b: Vec<Vec<f64>>,
    /// `B c`.
    pub target: Vec<f64>,
    pub design: Vec<DesignEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_evals: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultDocument {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    pub input: ProblemFile,
    /// Support in the user's coordinates. Signs refer to the solved space.
    pub design: Vec<DesignEntry>,
    pub gamma: f64,
    pub elfving_point: Vec<f64>,
    pub psi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transformed: Option<TransformedSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub timing: Timing,
}

pub fn rounded(v: &[f64], digits: usize) -> Vec<f64> {
    v.iter().map(|&x| round_sig(x, digits)).collect()
}

pub fn entries(design: &DesignMeasure, signs: &[i8], digits: usize) -> Vec<DesignEntry> {
    design
        .support()
        .iter()
        .zip(signs)
        .map(|(sp, &sign)| DesignEntry {
            u: sp.u.map(|u| round_sig(u, digits)),
            x: rounded(sp.x.as_slice(), digits),
            weight: round_sig(sp.weight, digits),
            sign,
        })
        .collect()
}

pub fn vector(v: &Vector, digits: usize) -> Vec<f64> {
    rounded(v.as_slice(), digits)
}

impl ResultDocument {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::input(format!("result document: {e}")))
    }

    pub fn render(&self, format: Format, digits: usize) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(self).expect("serializable") + "\n",
            Format::Csv => self.to_csv(digits),
            Format::Text => self.to_text(digits),
        }
    }

    fn to_csv(&self, digits: usize) -> String {
        let k = self.design.first().map_or(0, |e| e.x.len());
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["u".to_string(), "weight".into(), "sign".into()];
        header.extend((1..=k).map(|i| format!("x{i}")));
        header.push("psi".into());
        w.write_record(&header).expect("in-memory write");
        for e in &self.design {
            let mut row = vec![e.u.map_or(String::new(), |u| fmt_sig(u, digits)), fmt_sig(e.weight, digits), e.sign.to_string()];
            row.extend(e.x.iter().map(|&x| fmt_sig(x, digits)));
            row.push(fmt_sig(self.psi, digits));
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    fn to_text(&self, digits: usize) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", self.tool, self.version, self.command);
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed      {seed}");
        }
        let _ = writeln!(s, "psi       {}", fmt_sig(self.psi, digits));
        let _ = writeln!(s, "gamma     {}", fmt_sig(self.gamma, digits));
        let _ = writeln!(s, "z*        {}", join(&self.elfving_point, digits));
        let _ = writeln!(s, "support   {} point(s)", self.design.len());
        for e in &self.design {
            let sign = if e.sign < 0 { '-' } else { '+' };
            match e.u {
                Some(u) => {
                    let _ = writeln!(s, "  u = {:>14}  p = {:>14}  {sign}", fmt_sig(u, digits), fmt_sig(e.weight, digits));
                }
                None => {
                    let _ = writeln!(s, "  x = ({})  p = {}  {sign}", join(&e.x, digits), fmt_sig(e.weight, digits));
                }
            }
        }
        if let Some(t) = &self.transformed {
            let _ = writeln!(s, "Bc        {}", join(&t.target, digits));
            for row in &t.b {
                let _ = writeln!(s, "B row     {}", join(row, digits));
            }
        }
        if let Some(c) = &self.certificate {
            let _ = writeln!(s, "certificate {:?}: {} (gap {})", c.method, if c.pass { "pass" } else { "FAIL" }, fmt_sig(c.gap, 3));
        }
        for warning in &self.warnings {
            let _ = writeln!(s, "warning: {warning}");
        }
        let _ = writeln!(s, "time      {:.3}s", self.timing.seconds);
        s
    }
}

fn join(v: &[f64], digits: usize) -> String {
    v.iter().map(|&x| fmt_sig(x, digits)).collect::<Vec<_>>().join(", ")
}

/// Output of `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyReport {
    pub stored_psi: f64,
    /// Criterion recomputed from the stored support and weights.
    pub recomputed_psi: f64,
    pub consistent: bool,
    pub certificate: Certificate,
    pub pass: bool,
}

impl VerifyReport {
    pub fn render(&self, format: Format, digits: usize) -> String {
        let c = &self.certificate;
        match format {
            Format::Json => serde_json::to_string_pretty(self).expect("serializable") + "\n",
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["method", "pass", "stored_psi", "recomputed_psi", "oracle_psi", "gap", "tolerance", "resolution"])
                    .expect("in-memory write");
                w.write_record([
                    format!("{:?}", c.method).to_lowercase(),
                    self.pass.to_string(),
                    fmt_sig(self.stored_psi, digits),
                    fmt_sig(self.recomputed_psi, digits),
                    fmt_sig(c.oracle_psi, digits),
                    fmt_sig(c.gap, digits),
                    fmt_sig(c.tolerance, digits),
                    c.resolution.to_string(),
                ])
                .expect("in-memory write");
                String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
            }
            Format::Text => {
                let mut s = String::new();
                let _ = writeln!(s, "method          {:?}", c.method);
                let _ = writeln!(s, "result          {}", if self.pass { "pass" } else { "FAIL" });
                let _ = writeln!(s, "stored psi      {}", fmt_sig(self.stored_psi, digits));
                let _ = writeln!(s, "recomputed psi  {}", fmt_sig(self.recomputed_psi, digits));
                let _ = writeln!(s, "oracle psi      {}", fmt_sig(c.oracle_psi, digits));
                let _ = writeln!(s, "gap             {} (tolerance {})", fmt_sig(c.gap, 4), fmt_sig(c.tolerance, 4));
                let _ = writeln!(s, "resolution      {}", c.resolution);
                if let Some(m) = c.signs_match {
                    let _ = writeln!(s, "signs match     {m}");
                }
                if !self.consistent {
                    let _ = writeln!(s, "stored psi does not match the stored design");
                }
                s
            }
        }
    }
}
