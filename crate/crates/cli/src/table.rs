//! Polynomial design tables: every `c = e_j` for a range of model sizes.
//!
//! Rows follow the layout of the published table: the weight at `u = 0`,
//! then the `(u, p)` pairs with `u > 0`, then the criterion. The full signed
//! support is kept in a last column as `u:p:sign` items.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use elfving_core::{solve, CurveModel, DesignMeasure, ProblemSpec, SolveSettings, Vector};
use serde::Serialize;

use crate::{fmt_sig, CliError, DEFAULT_PRECISION};

/// Points with `|u|` below this print as `u = 0` at three decimals.
pub const ZERO_U: f64 = 5e-4;
pub const MAX_TABLE_K: usize = 20;

/// Inclusive range of model sizes: `6..10`, `6..=10` or `7`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KRange {
    pub lo: usize,
    pub hi: usize,
}

impl FromStr for KRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?),
            None => {
                let k = parse(s)?;
                (k, k)
            }
        };
        if lo == 0 || lo > hi || hi > MAX_TABLE_K {
            return Err(format!("k range must satisfy 1 <= lo <= hi <= {MAX_TABLE_K}"));
        }
        Ok(Self { lo, hi })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub k: usize,
    pub j: usize,
    /// `"ok"` or `"failed: <reason>"`.
    pub status: String,
    pub xi0: Option<f64>,
    pub pairs: Vec<(f64, f64)>,
    pub psi: Option<f64>,
    /// `(u, weight, sign)` of every support point.
    pub support: Vec<(f64, f64, i8)>,
    #[serde(skip)]
    pub seconds: f64,
}

impl TableRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }

    fn from_design(k: usize, j: usize, design: &DesignMeasure, signs: &[i8], psi: f64) -> Self {
        let mut xi0 = 0.0;
        let mut pairs = Vec::new();
        let mut support = Vec::new();
        for (sp, &sign) in design.support().iter().zip(signs) {
            let u = sp.u.expect("curve designs carry u");
            if u.abs() < ZERO_U {
                xi0 += sp.weight;
            } else if u > 0.0 {
                pairs.push((u, sp.weight));
            }
            support.push((u, sp.weight, sign));
        }
        Self { k, j, status: "ok".into(), xi0: Some(xi0), pairs, psi: Some(psi), support, seconds: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub rows: Vec<TableRow>,
}

/// Solves every cell in `(k, j)` order. `progress` sees each row as it
/// completes; a failed cell is recorded and the run continues.
pub fn cmd_table(range: KRange, settings: &SolveSettings, mut progress: impl FnMut(&TableRow)) -> Result<Table, CliError> {
    settings.validate()?;
    let mut rows = Vec::new();
    for k in range.lo..=range.hi {
        let model = CurveModel::polynomial(k)?;
        for j in 1..=k {
            let mut c = Vector::zeros(k);
            c[j - 1] = 1.0;
            let start = Instant::now();
            let outcome = ProblemSpec::curve(model.clone(), c).and_then(|spec| solve(&spec, settings));
            let mut row = match outcome {
                Ok(r) => TableRow::from_design(k, j, &r.design, &r.solution.signs, r.psi),
                Err(e) => TableRow {
                    k,
                    j,
                    status: format!("failed: {e}"),
                    xi0: None,
                    pairs: Vec::new(),
                    psi: None,
                    support: Vec::new(),
                    seconds: 0.0,
                },
            };
            row.seconds = start.elapsed().as_secs_f64();
            progress(&row);
            rows.push(row);
        }
    }
    Ok(Table { rows })
}

impl Table {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| !r.ok()).count()
    }

    fn pair_columns(&self) -> usize {
        let widest = self.rows.iter().map(|r| r.pairs.len()).max().unwrap_or(0);
        let by_k = self.rows.iter().map(|r| r.k / 2).max().unwrap_or(0);
        widest.max(by_k)
    }

    pub fn to_csv(&self) -> String {
        let d = DEFAULT_PRECISION;
        let n = self.pair_columns();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["k".to_string(), "j".into(), "status".into(), "xi0".into()];
        for i in 1..=n {
            header.push(format!("u{i}"));
            header.push(format!("p{i}"));
        }
        header.push("psi".into());
        header.push("support".into());
        w.write_record(&header).expect("in-memory write");
        for r in &self.rows {
            let mut rec = vec![r.k.to_string(), r.j.to_string(), r.status.clone(), r.xi0.map_or(String::new(), |x| fmt_sig(x, d))];
            for i in 0..n {
                match r.pairs.get(i) {
                    Some(&(u, p)) => {
                        rec.push(fmt_sig(u, d));
                        rec.push(fmt_sig(p, d));
                    }
                    None => rec.extend([String::new(), String::new()]),
                }
            }
            rec.push(r.psi.map_or(String::new(), |x| fmt_sig(x, d)));
            rec.push(
                r.support
                    .iter()
                    .map(|&(u, p, s)| format!("{}:{}:{}", fmt_sig(u, d), fmt_sig(p, d), if s < 0 { '-' } else { '+' }))
                    .collect::<Vec<_>>()
                    .join(" "),
            );
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }

    /// Three-decimal layout for reading by eye.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let _ = write!(s, "k={:<2} j={:<2} ", r.k, r.j);
            if !r.ok() {
                let _ = writeln!(s, "{}", r.status);
                continue;
            }
            let _ = write!(s, "xi(0)={:.3} ", r.xi0.unwrap_or(0.0));
            for (u, p) in &r.pairs {
                let _ = write!(s, "({u:.3},{p:.3}) ");
            }
            let _ = writeln!(s, "psi={}", fmt_sig(r.psi.unwrap_or(f64::NAN), 6));
        }
        s
    }
}
