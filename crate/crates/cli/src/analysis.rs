//! The analysis pipeline behind `analyze` and `verify`.

use unitroot::coint::cointegration;
use unitroot::laurent::{
    annihilation_check, contour_coefficients, toeplitz_reconstruct_auto,
    verify_fundamental_identities, ContourOptions, LaurentExpansion,
};
use unitroot::numla::{fro, penrose_residual};
use unitroot::polecore::{decomposition_check, detect_pole_order_capped, MAX_ORDER};
use unitroot::simkit::{integration_diagnostics, simulate_var};
use unitroot::{Mat, MatrixPolynomial, Tolerances};

use crate::error::CliError;
use crate::model::ModelFile;
use crate::real::{reals, Matrix, Real};
use crate::report::{
    AnalysisReport, Coefficient, CointReport, LaurentDump, LinkReport, OracleReport, RootSummary,
    Term, ToleranceReport, Verdict, SCHEMA,
};

const TOL_LEADING: f64 = 1e-8;
const TOL_IDENTITIES: f64 = 1e-8;
const TOL_ANNIHILATION: f64 = 1e-8;
const TOL_TOEPLITZ: f64 = 1e-7;
const TOL_DECOMPOSITION: f64 = 1e-8;
const TOL_IDEMPOTENT: f64 = 1e-8;
const TOL_SELF_CONSISTENCY: f64 = 1e-8;
const TOL_IMAG_LEAK: f64 = 1e-9;
const SIM_LENGTH: usize = 4000;

/// Lowest Laurent index requested from the oracle; one below the largest
/// supported order so the order can be read off the coefficients.
const ORACLE_J_MIN: i32 = -(MAX_ORDER as i32) - 1;

#[derive(Debug, Clone)]
pub struct Options {
    pub tol: Tolerances,
    pub contour: ContourOptions,
    pub max_order: usize,
    /// Seed for the simulation check in `verify`.
    pub seed: u64,
    /// Run the extended invariant suite.
    pub full: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            tol: Tolerances::default(),
            contour: ContourOptions::default(),
            max_order: MAX_ORDER,
            seed: 0,
            full: false,
        }
    }
}

fn principal_window(exp: &LaurentExpansion, m: usize) -> Vec<Mat> {
    (-(m as i32)..=m as i32)
        .filter_map(|j| exp.coeff(j).cloned())
        .collect()
}

fn rel_change(a: &[Mat], b: &[Mat]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let scale = b.iter().map(fro).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    a.iter()
        .zip(b)
        .map(|(x, y)| fro(&(x - y)))
        .fold(0.0, f64::max)
        / scale
}

pub fn analyze(model: &ModelFile, opts: &Options) -> Result<AnalysisReport, CliError> {
    let p = model.polynomial()?;
    let tol = opts.tol;
    let report = detect_pole_order_capped(&p, &tol, opts.max_order)?;
    let m = report.m;
    let mut verdicts = Vec::new();

    let roots = &report.roots;
    let margin = if roots.premise_ok {
        0.0
    } else {
        roots
            .min_outside_modulus
            .map_or(1.0, |r| (1.0 - r).max(f64::EPSILON))
    };
    verdicts.push(
        Verdict::check("premise_roots_outside", margin, 0.0, true)
            .with("non-unit roots of det A(z) must lie outside the unit circle"),
    );

    let chain: Vec<LinkReport> = report
        .chain
        .as_ref()
        .map(|c| {
            c.links
                .iter()
                .enumerate()
                .map(|(i, l)| LinkReport {
                    index: i,
                    size: l.size(),
                    rank: l.rank(),
                    cutoff: Real(l.cutoff),
                    singular_values: reals(&l.singular_values),
                })
                .collect()
        })
        .unwrap_or_default();

    let coint = cointegration(&report, &tol)?;
    verdicts.push(
        Verdict::check(
            "rank_formula_matches_projector",
            coint.rank.abs_diff(coint.numerical_rank) as f64,
            0.0,
            false,
        )
        .with(format!(
            "closed form {}, numerical {}",
            coint.rank, coint.numerical_rank
        )),
    );
    verdicts.push(Verdict::check(
        "projector_idempotent",
        coint.idempotency,
        TOL_IDEMPOTENT,
        false,
    ));

    let mut oracle = None;
    if m > 0 {
        match contour_coefficients(&p, ORACLE_J_MIN, m as i32, &opts.contour) {
            Ok(exp) => {
                pole_checks(&p, &report, &coint.p, &exp, &tol, &mut verdicts);
                if opts.full {
                    oracle_self_consistency(&p, m, &exp, &opts.contour, &mut verdicts);
                }
                oracle = Some(OracleReport {
                    radius: Real(exp.radius),
                    nodes: exp.nodes,
                    imag_leak: Real(exp.imag_leak),
                    doubling_change: Real(exp.doubling_change),
                    m: exp.m,
                    principal: (-(exp.m as i32)..0)
                        .filter_map(|j| {
                            exp.coeff(j).map(|c| Coefficient {
                                j,
                                matrix: c.into(),
                            })
                        })
                        .collect(),
                });
            }
            Err(e) => verdicts.push(Verdict::failed("contour_oracle", 0.0, e.to_string())),
        }
    }

    if opts.full {
        if let Some(c) = report.chain.as_ref() {
            for (i, l) in c.links.iter().enumerate() {
                let (kn, xn) = (fro(&l.k), fro(&l.pinv));
                let dropped: f64 = l.singular_values[l.rank()..].iter().map(|s| s * s).sum();
                let bound = tol.residual_abs * (1.0 + kn * xn * (kn + xn)) + 2.0 * dropped.sqrt();
                verdicts.push(Verdict::check(
                    &format!("penrose_K{i}"),
                    penrose_residual(&l.k, &l.pinv),
                    bound,
                    false,
                ));
            }
        }
        if m >= 2 {
            verdicts.push(Verdict::check(
                "bordered_vs_direct_parallel_sum",
                coint.bordered_vs_direct,
                TOL_IDEMPOTENT,
                false,
            ));
        }
        verdicts.push(simulation_check(
            &p,
            m,
            &coint.p,
            opts.seed,
            roots.premise_ok,
        ));
    }

    let formula = coint.formula.as_ref();
    Ok(AnalysisReport {
        schema: SCHEMA,
        command: if opts.full { "verify" } else { "analyze" }.to_string(),
        n: model.n,
        k: model.k,
        form: model.form_name().to_string(),
        tolerances: ToleranceReport {
            rank_rel: Real(tol.rank_rel),
            nonsing_rel: Real(tol.nonsing_rel),
            residual_abs: Real(tol.residual_abs),
        },
        summary: if m == 0 {
            "no unit-root pole".to_string()
        } else {
            format!("pole of order {m} at z = 1")
        },
        pole: m > 0,
        m,
        mu: report.mu,
        warnings: report.warnings.clone(),
        roots: RootSummary {
            unit_root_multiplicity: roots.unit_root_multiplicity,
            min_outside_modulus: roots.min_outside_modulus.map(Real),
            premise_ok: roots.premise_ok,
            ill_conditioned: roots.ill_conditioned,
        },
        chain,
        leading_closed_form: report.n_leading.as_ref().map(Matrix::from),
        oracle,
        cointegration: CointReport {
            projector: (&coint.p).into(),
            rank: coint.rank,
            numerical_rank: coint.numerical_rank,
            terms: formula
                .map(|f| {
                    f.terms
                        .iter()
                        .map(|(label, value)| Term {
                            label: label.clone(),
                            value: *value,
                        })
                        .collect()
                })
                .unwrap_or_default(),
            rank_without_pinv: formula.and_then(|f| f.rank_without_pinv),
            stationary_system: coint.stationary_system,
        },
        verdicts,
    })
}

/// Closed-form results against the contour oracle.
fn pole_checks(
    p: &MatrixPolynomial,
    report: &unitroot::PoleReport,
    proj: &Mat,
    exp: &LaurentExpansion,
    tol: &Tolerances,
    verdicts: &mut Vec<Verdict>,
) {
    let m = report.m;
    verdicts.push(
        Verdict::check("oracle_order_agrees", exp.m.abs_diff(m) as f64, 0.0, false)
            .with(format!("oracle {} vs chain {m}", exp.m)),
    );
    if exp.m != m {
        return;
    }
    if let Some(lead) = report.n_leading.as_ref() {
        let oracle = &exp.principal[0];
        let err = fro(&(lead - oracle)) / fro(oracle).max(f64::MIN_POSITIVE);
        verdicts.push(Verdict::check("leading_matrix", err, TOL_LEADING, false));
    }
    match verify_fundamental_identities(exp, p, TOL_IDENTITIES) {
        Ok(r) => verdicts.push(Verdict::check(
            "fundamental_identities",
            r.max_relative,
            TOL_IDENTITIES,
            false,
        )),
        Err(e) => verdicts.push(Verdict::failed(
            "fundamental_identities",
            TOL_IDENTITIES,
            e.to_string(),
        )),
    }
    let ann = annihilation_check(proj, exp, TOL_ANNIHILATION);
    let worst =
        ann.residuals.iter().fold(0.0f64, |a, &b| a.max(b)) / ann.scale.max(f64::MIN_POSITIVE);
    verdicts.push(Verdict::check(
        "projector_annihilates_principal_part",
        worst,
        TOL_ANNIHILATION,
        false,
    ));
    match toeplitz_reconstruct_auto(p, m, tol) {
        Ok(s) => verdicts.push(
            Verdict::check(
                "toeplitz_principal_part",
                rel_change(&s.principal, &exp.principal),
                TOL_TOEPLITZ,
                false,
            )
            .with(format!("q = {}", s.q)),
        ),
        Err(e) => verdicts.push(Verdict::failed(
            "toeplitz_principal_part",
            TOL_TOEPLITZ,
            e.to_string(),
        )),
    }
    if m >= 2 {
        match decomposition_check(report, &exp.principal) {
            Ok(entries) => {
                let worst = entries.iter().map(|e| e.relative()).fold(0.0, f64::max);
                verdicts.push(Verdict::check(
                    "principal_decomposition",
                    worst,
                    TOL_DECOMPOSITION,
                    false,
                ));
            }
            Err(e) => verdicts.push(Verdict::failed(
                "principal_decomposition",
                TOL_DECOMPOSITION,
                e.to_string(),
            )),
        }
    }
}

fn oracle_self_consistency(
    p: &MatrixPolynomial,
    m: usize,
    exp: &LaurentExpansion,
    base: &ContourOptions,
    verdicts: &mut Vec<Verdict>,
) {
    let reference = principal_window(exp, m);
    let variants = [
        (
            "oracle_node_doubling",
            ContourOptions {
                nodes: exp.nodes,
                ..base.clone()
            },
        ),
        (
            "oracle_radius_halving",
            ContourOptions {
                radius: Some(exp.radius / 2.0),
                ..base.clone()
            },
        ),
    ];
    let mut leak = exp.imag_leak;
    for (name, o) in variants {
        match contour_coefficients(p, ORACLE_J_MIN, m as i32, &o) {
            Ok(e) => {
                leak = leak.max(e.imag_leak);
                verdicts.push(Verdict::check(
                    name,
                    rel_change(&principal_window(&e, m), &reference),
                    TOL_SELF_CONSISTENCY,
                    false,
                ));
            }
            Err(e) => verdicts.push(Verdict::failed(name, TOL_SELF_CONSISTENCY, e.to_string())),
        }
    }
    verdicts.push(Verdict::check(
        "oracle_imag_leak",
        leak,
        TOL_IMAG_LEAK,
        false,
    ));
}

/// Growth diagnostics on a simulated path. Statistical, hence advisory.
fn simulation_check(
    p: &MatrixPolynomial,
    m: usize,
    proj: &Mat,
    seed: u64,
    premise: bool,
) -> Verdict {
    const NAME: &str = "simulation_concordance";
    if !p.is_var_form() {
        return Verdict::check(NAME, 0.0, 0.0, true).with("skipped: not in VAR form");
    }
    if m > 2 || !premise {
        return Verdict::check(NAME, 0.0, 0.0, true)
            .with("skipped: diagnostics cover orders 0 to 2 with the root premise");
    }
    let n = p.dim();
    let run = simulate_var(p, SIM_LENGTH, &Mat::identity(n, n), seed)
        .and_then(|t| integration_diagnostics(&t, m, proj));
    match run {
        Ok(d) => {
            let slopes: Vec<String> = d
                .differences
                .iter()
                .map(|g| format!("{:.2}", g.slope))
                .collect();
            Verdict::check(NAME, if d.concordant { 0.0 } else { 1.0 }, 0.0, true).with(format!(
                "difference slopes [{}], P_m y slope {:.2}, threshold {}",
                slopes.join(", "),
                d.cointegrated.slope,
                d.threshold
            ))
        }
        Err(e) => Verdict::check(NAME, f64::INFINITY, 0.0, true).with(e.to_string()),
    }
}

pub fn laurent(
    model: &ModelFile,
    j_min: i32,
    j_max: i32,
    contour: &ContourOptions,
) -> Result<LaurentDump, CliError> {
    let p = model.polynomial()?;
    let exp = contour_coefficients(&p, j_min, j_max, contour)?;
    Ok(LaurentDump {
        schema: SCHEMA,
        m: exp.m,
        j_min: exp.j_min,
        j_max: exp.j_max(),
        radius: Real(exp.radius),
        nodes: exp.nodes,
        imag_leak: Real(exp.imag_leak),
        doubling_change: Real(exp.doubling_change),
        coefficients: (exp.j_min..=exp.j_max())
            .filter_map(|j| {
                exp.coeff(j).map(|c| Coefficient {
                    j,
                    matrix: c.into(),
                })
            })
            .collect(),
    })
}
