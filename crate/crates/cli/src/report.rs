//! Report types and their human-readable rendering.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::exit;
use crate::real::{Matrix, Real};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Warn,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub status: Status,
    pub residual: Real,
    pub tolerance: Real,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Verdict {
    /// Pass when `residual <= tolerance`; otherwise `Fail`, or `Warn` for
    /// advisory checks.
    pub fn check(name: &str, residual: f64, tolerance: f64, advisory: bool) -> Verdict {
        let ok = residual <= tolerance;
        Verdict {
            name: name.to_string(),
            status: match (ok, advisory) {
                (true, _) => Status::Pass,
                (false, true) => Status::Warn,
                (false, false) => Status::Fail,
            },
            residual: Real(residual),
            tolerance: Real(tolerance),
            detail: None,
        }
    }

    /// A check that could not be carried out.
    pub fn failed(name: &str, tolerance: f64, why: impl Into<String>) -> Verdict {
        Verdict::check(name, f64::INFINITY, tolerance, false).with(why)
    }

    pub fn with(mut self, detail: impl Into<String>) -> Verdict {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ToleranceReport {
    pub rank_rel: Real,
    pub nonsing_rel: Real,
    pub residual_abs: Real,
}

#[derive(Debug, Clone, Serialize)]
pub struct RootSummary {
    pub unit_root_multiplicity: usize,
    pub min_outside_modulus: Option<Real>,
    pub premise_ok: bool,
    pub ill_conditioned: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinkReport {
    pub index: usize,
    pub size: usize,
    pub rank: usize,
    pub cutoff: Real,
    pub singular_values: Vec<Real>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Coefficient {
    pub j: i32,
    pub matrix: Matrix,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub radius: Real,
    pub nodes: usize,
    pub imag_leak: Real,
    pub doubling_change: Real,
    /// Order read off the oracle coefficients.
    pub m: usize,
    /// `N_{-m}..N_{-1}`.
    pub principal: Vec<Coefficient>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Term {
    pub label: String,
    pub value: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CointReport {
    pub projector: Matrix,
    pub rank: usize,
    pub numerical_rank: usize,
    pub terms: Vec<Term>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_without_pinv: Option<usize>,
    pub stationary_system: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema: u32,
    pub command: String,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub form: String,
    pub tolerances: ToleranceReport,
    pub summary: String,
    pub pole: bool,
    pub m: usize,
    pub mu: usize,
    pub warnings: Vec<String>,
    pub roots: RootSummary,
    pub chain: Vec<LinkReport>,
    pub leading_closed_form: Option<Matrix>,
    pub oracle: Option<OracleReport>,
    pub cointegration: CointReport,
    pub verdicts: Vec<Verdict>,
}

impl AnalysisReport {
    pub fn exit_code(&self) -> i32 {
        if self.verdicts.iter().any(|v| v.status == Status::Fail) {
            exit::VERIFICATION
        } else {
            exit::OK
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_pretty(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.summary);
        let _ = writeln!(
            s,
            "n = {}, K = {} ({} form), m = {}, mu = {}",
            self.n, self.k, self.form, self.m, self.mu
        );
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        if !self.chain.is_empty() {
            let _ = writeln!(s, "\nchain:");
            for l in &self.chain {
                let sv: Vec<String> = l.singular_values.iter().map(|x| fmt_short(x.0)).collect();
                let _ = writeln!(
                    s,
                    "  K_{}: {}x{} rank {}  sv [{}]",
                    l.index,
                    l.size,
                    l.size,
                    l.rank,
                    sv.join(", ")
                );
            }
        }
        if let Some(lead) = &self.leading_closed_form {
            let _ = writeln!(s, "\nleading coefficient N_-{} (closed form):", self.m);
            write_matrix(&mut s, lead);
        }
        if let Some(o) = &self.oracle {
            let _ = writeln!(
                s,
                "\ncontour oracle: radius {}, {} nodes, imag leak {}",
                fmt_short(o.radius.0),
                o.nodes,
                fmt_short(o.imag_leak.0)
            );
            for c in &o.principal {
                let _ = writeln!(s, "N_{}:", c.j);
                write_matrix(&mut s, &c.matrix);
            }
        }
        let c = &self.cointegration;
        let _ = writeln!(
            s,
            "\ncointegration rank {} (numerical {})",
            c.rank, c.numerical_rank
        );
        for t in &c.terms {
            let _ = writeln!(s, "  {} = {}", t.label, t.value);
        }
        let _ = writeln!(s, "P_{}:", self.m);
        write_matrix(&mut s, &c.projector);
        let _ = writeln!(s, "\nverdicts:");
        for v in &self.verdicts {
            let status = match v.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Warn => "warn",
            };
            let _ = write!(
                s,
                "  {status:<4}  {:<38} residual {:>10}  tol {:>10}",
                v.name,
                fmt_short(v.residual.0),
                fmt_short(v.tolerance.0)
            );
            if let Some(d) = &v.detail {
                let _ = write!(s, "  ({d})");
            }
            s.push('\n');
        }
        s
    }
}

fn fmt_short(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.3e}")
    } else {
        "n/a".to_string()
    }
}

pub fn write_matrix(s: &mut String, m: &Matrix) {
    for row in &m.data {
        let cells: Vec<String> = row.iter().map(|x| format!("{:>12.5e}", x.0)).collect();
        let _ = writeln!(s, "  [{}]", cells.join(" "));
    }
}

/// Output of the `laurent` command.
#[derive(Debug, Clone, Serialize)]
pub struct LaurentDump {
    pub schema: u32,
    pub m: usize,
    pub j_min: i32,
    pub j_max: i32,
    pub radius: Real,
    pub nodes: usize,
    pub imag_leak: Real,
    pub doubling_change: Real,
    pub coefficients: Vec<Coefficient>,
}

impl LaurentDump {
    pub fn to_pretty(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "pole order {} (oracle); radius {}, {} nodes, imag leak {}, doubling change {}",
            self.m,
            fmt_short(self.radius.0),
            self.nodes,
            fmt_short(self.imag_leak.0),
            fmt_short(self.doubling_change.0)
        );
        for c in &self.coefficients {
            let _ = writeln!(s, "N_{}:", c.j);
            write_matrix(&mut s, &c.matrix);
        }
        s
    }
}
