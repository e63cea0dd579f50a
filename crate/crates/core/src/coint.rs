//! Cointegration projectors `P_1..P_4`, their `Pi` ingredients and the
//! closed-form cointegration ranks.
//!
//! Throughout, `X^T` applied as an annihilator means `I - X X^+` and `:` is
//! the parallel sum.

use crate::error::{Error, Result};
use crate::numla::{
    ann_row, hcat, norm2, numerical_rank, range_basis, range_projector, Mat, Tolerances,
};
use crate::parsum::{bordered_parallel_sum, idempotency_residual, parallel_sum};
use crate::polecore::{Chain, PoleReport};

/// The `Pi` matrices defined for a given pole order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PiSet {
    pub pi2: Option<Mat>,
    pub pi3: Option<Mat>,
    pub pi34: Option<Mat>,
    pub pi4: Option<Mat>,
}

impl PiSet {
    /// `Pi_m` for the given order.
    pub fn for_order(&self, m: usize) -> Option<&Mat> {
        match m {
            2 => self.pi2.as_ref(),
            3 => self.pi3.as_ref(),
            4 => self.pi4.as_ref(),
            _ => None,
        }
    }
}

/// `A^+ X F` together with the scale of roundoff in it.
struct Product {
    mat: Mat,
    scale: f64,
}

fn product(chain: &Chain, x: &Mat, x_scale: f64, depth: usize) -> Product {
    let p = &chain.a_pinv;
    Product {
        mat: p * x * chain.c_chain(depth),
        scale: norm2(p) * x_scale,
    }
}

fn ingredients(report: &PoleReport) -> Result<(&Chain, Vec<(Mat, f64)>)> {
    let chain = report.chain()?;
    let mut x = vec![(chain.taylor.a[1].clone(), chain.taylor.scale[1])];
    for (b, s) in chain.brackets.mats.iter().zip(&chain.brackets.mags).skip(1) {
        x.push((b.clone(), *s));
    }
    Ok((chain, x))
}

fn annihilator(pr: &Product, tol: &Tolerances) -> Mat {
    ann_row(&pr.mat, tol.rank_scaled(pr.scale))
}

/// `Pi_2 = (A^+ A^(1) C_0perp C_1perp)^T`,
/// `Pi_3 = 2((A^+ A^(1) C_0perp)^T : (A^+ A^[2] C_0perp C_1perp C_2perp)^T)`,
/// `Pi_34 = 2((A^+ A^(1) C_0perp)^T : (A^+ A^[2] C_0perp)^T)`,
/// `Pi_4 = 2(Pi_34 : (A^+ A^[3] C_0perp..C_3perp)^T)`.
pub fn compute_pi(report: &PoleReport, tol: &Tolerances) -> Result<PiSet> {
    let m = report.m;
    if m < 2 {
        return Err(Error::Precondition(format!(
            "no Pi matrices are needed for m = {m}"
        )));
    }
    let (chain, x) = ingredients(report)?;
    let unit = tol.rank_scaled(1.0);
    let mut out = PiSet::default();
    match m {
        2 => {
            out.pi2 = Some(annihilator(&product(chain, &x[0].0, x[0].1, 2), tol));
        }
        3 => {
            let a = annihilator(&product(chain, &x[0].0, x[0].1, 1), tol);
            let b = annihilator(&product(chain, &x[1].0, x[1].1, 3), tol);
            out.pi3 = Some(parallel_sum(&a, &b, unit) * 2.0);
        }
        _ => {
            let a = annihilator(&product(chain, &x[0].0, x[0].1, 1), tol);
            let b = annihilator(&product(chain, &x[1].0, x[1].1, 1), tol);
            let pi34 = parallel_sum(&a, &b, unit) * 2.0;
            let c = annihilator(&product(chain, &x[2].0, x[2].1, 4), tol);
            out.pi4 = Some(parallel_sum(&pi34, &c, unit) * 2.0);
            out.pi34 = Some(pi34);
        }
    }
    Ok(out)
}

/// Integers entering the closed-form rank.
#[derive(Debug, Clone, PartialEq)]
pub struct RankFormula {
    pub rank: usize,
    /// `(label, value)` in the order they enter the formula.
    pub terms: Vec<(String, usize)>,
    /// For `m = 4`: the rank obtained with `Xi` built without the `A^+` prefix.
    pub rank_without_pinv: Option<usize>,
}

fn rank_of(blocks: &[&Product], tol: &Tolerances) -> usize {
    let mats: Vec<&Mat> = blocks.iter().map(|b| &b.mat).collect();
    let scale = blocks.iter().map(|b| b.scale).fold(0.0, f64::max);
    numerical_rank(&hcat(&mats), tol.rank_scaled(scale))
}

/// `r(C_0)`; for `m = 2` minus `r(A^+ A^(1) C_0perp C_1perp)`; for `m = 3`
/// minus `r([A^+ A^(1) C_0perp, A^+ A^[2] C_0perp C_1perp C_2perp])`; for
/// `m = 4` minus `r([A^+ A^(1) C_0perp, A^+ A^[2] C_0perp])` plus
/// `r(Xi) - r([Xi, Gamma])`, with orthonormal `Gamma`, `Xi` spanning the
/// ranges of `Pi_34` and `(A^+ A^[3] C_0perp..C_3perp)^T`.
pub fn coint_rank(report: &PoleReport, pis: &PiSet, tol: &Tolerances) -> Result<RankFormula> {
    let m = report.m;
    if m == 0 {
        return Err(Error::NoPole);
    }
    let (chain, x) = ingredients(report)?;
    let r0 = chain.links[0].rank();
    let mut terms = vec![("r(C0)".to_string(), r0)];
    let unit = tol.rank_scaled(1.0);
    let mut rank_without_pinv = None;
    let rank = match m {
        1 => r0,
        2 => {
            let r = rank_of(&[&product(chain, &x[0].0, x[0].1, 2)], tol);
            terms.push(("r(A+ A1 C0p C1p)".into(), r));
            r0 - r
        }
        3 => {
            let a = product(chain, &x[0].0, x[0].1, 1);
            let b = product(chain, &x[1].0, x[1].1, 3);
            let r = rank_of(&[&a, &b], tol);
            terms.push(("r([A+ A1 C0p, A+ A[2] C0p C1p C2p])".into(), r));
            r0 - r
        }
        _ => {
            let a = product(chain, &x[0].0, x[0].1, 1);
            let b = product(chain, &x[1].0, x[1].1, 1);
            let r = rank_of(&[&a, &b], tol);
            let pi34 = pis
                .pi34
                .as_ref()
                .ok_or_else(|| Error::Sequencing("Pi_34 missing for m = 4".into()))?;
            let gamma = range_basis(pi34, unit);
            let c = product(chain, &x[2].0, x[2].1, 4);
            let xi = range_basis(&annihilator(&c, tol), unit);
            let r_xi = numerical_rank(&xi, unit);
            let r_xg = numerical_rank(&hcat(&[&xi, &gamma]), unit);

            let bare = Product {
                mat: &x[2].0 * chain.c_chain(4),
                scale: x[2].1,
            };
            let xi_bare = range_basis(&annihilator(&bare, tol), unit);
            let rb_xi = numerical_rank(&xi_bare, unit);
            let rb_xg = numerical_rank(&hcat(&[&xi_bare, &gamma]), unit);
            rank_without_pinv = Some((r0 + rb_xi).saturating_sub(r + rb_xg));

            terms.push(("r([A+ A1 C0p, A+ A[2] C0p])".into(), r));
            terms.push(("r(Xi)".into(), r_xi));
            terms.push(("r([Xi, Gamma])".into(), r_xg));
            (r0 + r_xi).saturating_sub(r + r_xg)
        }
    };
    Ok(RankFormula {
        rank,
        terms,
        rank_without_pinv,
    })
}

#[derive(Debug, Clone)]
pub struct CointegrationResult {
    pub m: usize,
    /// The projector `P_m`.
    pub p: Mat,
    pub pis: PiSet,
    /// Closed-form rank.
    pub rank: usize,
    pub numerical_rank: usize,
    pub formula: Option<RankFormula>,
    /// Closed-form and numerical ranks agree.
    pub consistent: bool,
    pub idempotency: f64,
    /// `|bordered - direct|` for the two evaluations of `2 (P_1 : Pi_m)`.
    pub bordered_vs_direct: f64,
    /// `m = 0`: every linear combination is stationary.
    pub stationary_system: bool,
}

/// `P_1 = (C_0^T)^+ C_0^T`; for `m >= 2`, `P_m = 2 (P_1 : Pi_m)` read off the
/// bordered matrix and cross-checked against the direct product.
pub fn compute_p(
    report: &PoleReport,
    pis: &PiSet,
    tol: &Tolerances,
) -> Result<CointegrationResult> {
    let n = report.dim;
    let m = report.m;
    if m == 0 {
        return Ok(CointegrationResult {
            m,
            p: Mat::identity(n, n),
            pis: PiSet::default(),
            rank: n,
            numerical_rank: n,
            formula: None,
            consistent: true,
            idempotency: 0.0,
            bordered_vs_direct: 0.0,
            stationary_system: true,
        });
    }
    let chain = report.chain()?;
    let unit = tol.rank_scaled(1.0);
    let p1 = range_projector(&chain.links[0].factorization.c, unit);
    let (p, gap) = if m == 1 {
        (p1, 0.0)
    } else {
        let pi = pis
            .for_order(m)
            .ok_or_else(|| Error::Sequencing(format!("Pi_{m} missing")))?;
        let bordered = bordered_parallel_sum(&(&p1 * 2.0), &(pi * 2.0), unit);
        let direct = parallel_sum(&p1, pi, unit) * 2.0;
        let gap = crate::numla::fro(&(&bordered - &direct));
        (bordered, gap)
    };
    let formula = coint_rank(report, pis, tol)?;
    let numerical = numerical_rank(&p, tol.projector_rank());
    Ok(CointegrationResult {
        m,
        idempotency: idempotency_residual(&p),
        p,
        pis: pis.clone(),
        rank: formula.rank,
        numerical_rank: numerical,
        consistent: formula.rank == numerical,
        formula: Some(formula),
        bordered_vs_direct: gap,
        stationary_system: false,
    })
}

/// Runs [`compute_pi`] when needed, then [`compute_p`].
pub fn cointegration(report: &PoleReport, tol: &Tolerances) -> Result<CointegrationResult> {
    let pis = if report.m >= 2 {
        compute_pi(report, tol)?
    } else {
        PiSet::default()
    };
    compute_p(report, &pis, tol)
}
