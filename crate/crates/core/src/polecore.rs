//! Pole order of `A^{-1}(z)` at `z = 1` through the nonsingularity chain
//! `K_1..K_4`, the bracket matrices `A^[m]`, `Theta_1`, `Theta_2`, and the
//! closed-form leading coefficient of the principal part.
//!
//! Notation: `a_k = A^(k) / k!` are the Taylor coefficients about `z = 1`,
//! `A = a_0`, and `A^+` its Moore-Penrose inverse. The chain starts from the
//! rank factorization `A = B_0 C_0^T` and continues with `K_i = B_i C_i^T`.
//! All orthogonal complements are orthonormal, so `(B_perp^T)^+ = B_perp`.
//!
//! Rank decisions on quantities assembled from the coefficients use a scale
//! tracking the magnitude of the terms that enter them, so that a matrix that
//! cancels to roundoff is treated as zero.

use crate::error::{Error, Result};
use crate::matpoly::{MatrixPolynomial, RootReport};
use crate::numla::{
    factorization_from_svd, fro, orth_complement_full, pinv_truncated, Mat, RankFactorization, Svd,
    Threshold, Tolerances,
};

/// Highest pole order handled by the closed forms.
pub const MAX_ORDER: usize = 4;

const CLUSTER_TOL: f64 = 1e-6;
const OUTSIDE_MARGIN: f64 = 1e-6;

/// One step of the chain: `K_0 = A(1)`, then `K_1, K_2, ...`.
#[derive(Debug, Clone)]
pub struct ChainLink {
    pub k: Mat,
    pub singular_values: Vec<f64>,
    /// Cutoff used for the rank decision on this link.
    pub cutoff: f64,
    pub factorization: RankFactorization,
    pub b_perp: Mat,
    pub c_perp: Mat,
    /// Rank-truncated pseudoinverse consistent with `factorization.rank`.
    pub pinv: Mat,
    pub borderline: bool,
}

impl ChainLink {
    fn build(k: Mat, th: Threshold) -> ChainLink {
        let svd = Svd::new(&k);
        let cutoff = th.cutoff(svd.sigma_max());
        let rank = svd.rank(th);
        let factorization = factorization_from_svd(&svd, rank);
        let b_perp = orth_complement_full(&factorization.b);
        let c_perp = orth_complement_full(&factorization.c);
        let pinv = pinv_truncated(&svd, rank);
        let borderline = svd
            .s
            .last()
            .is_some_and(|&s| s > cutoff / 10.0 && s < cutoff * 10.0);
        ChainLink {
            singular_values: svd.s.clone(),
            k,
            cutoff,
            factorization,
            b_perp,
            c_perp,
            pinv,
            borderline,
        }
    }

    pub fn size(&self) -> usize {
        self.k.nrows()
    }

    pub fn rank(&self) -> usize {
        self.factorization.rank
    }

    pub fn is_nonsingular(&self) -> bool {
        self.rank() == self.size()
    }
}

/// Taylor data about `z = 1` together with roundoff scales.
#[derive(Debug, Clone)]
pub struct TaylorData {
    /// `a_0..a_4`, zero-padded beyond the degree.
    pub a: Vec<Mat>,
    /// Roundoff magnitude of each `a_k`: `sum_j binom(j, k) |A_j|`.
    pub scale: Vec<f64>,
}

impl TaylorData {
    pub fn new(p: &MatrixPolynomial) -> TaylorData {
        let n = p.dim();
        let mut a = p.taylor_coeffs_at_one();
        a.resize(MAX_ORDER + 1, Mat::zeros(n, n));
        let mut abs_poly = p.clone();
        abs_poly = MatrixPolynomial::new(
            abs_poly
                .coeffs()
                .iter()
                .map(|c| Mat::from_element(1, 1, fro(c)))
                .collect(),
        )
        .unwrap_or(abs_poly);
        let mut scale: Vec<f64> = abs_poly
            .taylor_coeffs_at_one()
            .iter()
            .map(|m| m[(0, 0)])
            .collect();
        scale.resize(MAX_ORDER + 1, 0.0);
        for (s, ak) in scale.iter_mut().zip(&a) {
            *s = s.max(fro(ak));
        }
        TaylorData { a, scale }
    }
}

/// `A^[1]..A^[4]` with their roundoff magnitudes.
#[derive(Debug, Clone, Default)]
pub struct Brackets {
    pub mats: Vec<Mat>,
    pub mags: Vec<f64>,
}

/// Computes `A^[m]` for `m = 1..4`.
///
/// `m = 1`: `a_1`. `m = 2`: `a_2 - a_1 A^+ a_1`. `m = 3`: `a_3` minus the
/// bordered product `[a_1 A^+, A^[2]] [[a_1, I], [I, Theta_1]] [A^+ a_1; A^[2]]`.
/// `m = 4`: `a_4` minus the bordered product with outer factors
/// `[a_1 A^+, A^[2], A^[3]]`, `[A^+ a_1; A^[2]; A^[3]]` and middle blocks
/// `[[a_2, A^[2] Theta_1 + a_1 A^+, I],
///   [A^+ a_1 + Theta_1 A^[2], A^+ + Theta_1 A^[2] Theta_1, Theta_1],
///   [I, Theta_1, Theta_2]]`.
pub fn compute_a_bracket(
    taylor: &TaylorData,
    a_pinv: &Mat,
    m: usize,
    theta1: Option<&Mat>,
    theta2: Option<&Mat>,
) -> Result<Mat> {
    if !(1..=MAX_ORDER).contains(&m) {
        return Err(Error::UnsupportedOrder(format!(
            "A^[{m}] is defined for 1 <= m <= 4"
        )));
    }
    Ok(brackets_upto(taylor, a_pinv, m, theta1, theta2)?.mats[m - 1].clone())
}

pub fn brackets_upto(
    taylor: &TaylorData,
    a_pinv: &Mat,
    m: usize,
    theta1: Option<&Mat>,
    theta2: Option<&Mat>,
) -> Result<Brackets> {
    let a = &taylor.a;
    let s = &taylor.scale;
    let p = a_pinv;
    let n = p.nrows();
    let mut out = Brackets::default();

    out.mats.push(a[1].clone());
    out.mags.push(s[1]);
    if m == 1 {
        return Ok(out);
    }

    let a1pa1 = &a[1] * p * &a[1];
    let b2 = &a[2] - &a1pa1;
    out.mags.push(s[2] + fro(&a1pa1));
    out.mats.push(b2.clone());
    if m == 2 {
        return Ok(out);
    }

    let t1 = theta1.ok_or_else(|| Error::Sequencing("A^[3] needs Theta_1".into()))?;
    let a1p = &a[1] * p;
    let pa1 = p * &a[1];
    let terms3 = [&a1p * &a[1] * &pa1, &b2 * &pa1, &a1p * &b2, &b2 * t1 * &b2];
    let tilde3 = terms3.iter().fold(Mat::zeros(n, n), |acc, t| acc + t);
    let b3 = &a[3] - tilde3;
    out.mags.push(s[3] + terms3.iter().map(fro).sum::<f64>());
    out.mats.push(b3.clone());
    if m == 3 {
        return Ok(out);
    }

    let t2 = theta2.ok_or_else(|| Error::Sequencing("A^[4] needs Theta_2".into()))?;
    let left = [&a1p, &b2, &b3];
    let right = [&pa1, &b2, &b3];
    let eye = Mat::identity(n, n);
    let mid = [
        [a[2].clone(), &b2 * t1 + &a1p, eye.clone()],
        [&pa1 + t1 * &b2, p + t1 * &b2 * t1, t1.clone()],
        [eye.clone(), t1.clone(), t2.clone()],
    ];
    let mut tilde4 = Mat::zeros(n, n);
    let mut mag4 = s[4];
    for (i, l) in left.iter().enumerate() {
        for (j, r) in right.iter().enumerate() {
            let term = *l * &mid[i][j] * *r;
            mag4 += fro(&term);
            tilde4 += term;
        }
    }
    out.mags.push(mag4);
    out.mats.push(&a[4] - tilde4);
    Ok(out)
}

/// The chain of `K_i` built so far, starting from `A(1)`.
#[derive(Debug, Clone)]
pub struct Chain {
    pub taylor: TaylorData,
    pub a_pinv: Mat,
    /// `links[0]` is `A(1)`, `links[i]` is `K_i`.
    pub links: Vec<ChainLink>,
    pub brackets: Brackets,
    tol: Tolerances,
}

impl Chain {
    /// Factorizes `A(1)`; fails with [`Error::NoPole`] when it is nonsingular.
    pub fn start(p: &MatrixPolynomial, tol: &Tolerances) -> Result<Chain> {
        tol.validate()?;
        let taylor = TaylorData::new(p);
        let base = ChainLink::build(taylor.a[0].clone(), tol.rank_scaled(taylor.scale[0]));
        if base.is_nonsingular() {
            return Err(Error::NoPole);
        }
        let a_pinv = base.pinv.clone();
        Ok(Chain {
            taylor,
            a_pinv,
            links: vec![base],
            brackets: Brackets::default(),
            tol: *tol,
        })
    }

    /// Index of the last `K_i` built (0 when only `A(1)` is factorized).
    pub fn depth(&self) -> usize {
        self.links.len() - 1
    }

    /// `B_{0perp} B_{1perp} ... B_{(i-1)perp}`, an `n x k_i` orthonormal matrix.
    pub fn b_chain(&self, i: usize) -> Mat {
        let n = self.a_pinv.nrows();
        self.links[..i]
            .iter()
            .fold(Mat::identity(n, n), |acc, l| acc * &l.b_perp)
    }

    pub fn c_chain(&self, i: usize) -> Mat {
        let n = self.a_pinv.nrows();
        self.links[..i]
            .iter()
            .fold(Mat::identity(n, n), |acc, l| acc * &l.c_perp)
    }

    /// `Theta_1 = C_{0perp} K_1^+ B_{0perp}^T`.
    pub fn theta1(&self) -> Result<Mat> {
        let k1 = self
            .links
            .get(1)
            .ok_or_else(|| Error::Sequencing("Theta_1 requires K_1".into()))?;
        Ok(&self.links[0].c_perp * &k1.pinv * self.links[0].b_perp.transpose())
    }

    /// `Theta_2 = C_{0perp} C_{1perp} K_2^+ B_{1perp}^T B_{0perp}^T`.
    pub fn theta2(&self) -> Result<Mat> {
        let k2 = self
            .links
            .get(2)
            .ok_or_else(|| Error::Sequencing("Theta_2 requires K_2".into()))?;
        Ok(self.c_chain(2) * &k2.pinv * self.b_chain(2).transpose())
    }

    /// Builds `K_{i+1}`. Fails when the last link is already nonsingular or
    /// the next order exceeds [`MAX_ORDER`].
    pub fn extend(&mut self) -> Result<&ChainLink> {
        let i = self.depth() + 1;
        if i > 1 && self.links[i - 1].is_nonsingular() {
            return Err(Error::Sequencing(format!(
                "K_{} is nonsingular; chain is complete",
                i - 1
            )));
        }
        if i > MAX_ORDER {
            return Err(Error::UnsupportedOrder(format!(
                "K_{MAX_ORDER} is singular: pole order exceeds {MAX_ORDER}"
            )));
        }
        let t1 = if i >= 3 { Some(self.theta1()?) } else { None };
        let t2 = if i >= 4 { Some(self.theta2()?) } else { None };
        self.brackets = brackets_upto(&self.taylor, &self.a_pinv, i, t1.as_ref(), t2.as_ref())?;
        let g = self.b_chain(i);
        let f = self.c_chain(i);
        let k = g.transpose() * &self.brackets.mats[i - 1] * &f;
        let link = ChainLink::build(k, self.tol.nonsing_scaled(self.brackets.mags[i - 1]));
        self.links.push(link);
        Ok(&self.links[i])
    }
}

/// Result of the pole-order analysis.
#[derive(Debug, Clone)]
pub struct PoleReport {
    pub m: usize,
    pub dim: usize,
    /// Empty when `m = 0`.
    pub chain: Option<Chain>,
    pub a_brackets: Vec<Mat>,
    pub theta1: Option<Mat>,
    pub theta2: Option<Mat>,
    pub n_leading: Option<Mat>,
    pub mu: usize,
    pub roots: RootReport,
    pub warnings: Vec<String>,
}

impl PoleReport {
    pub fn chain(&self) -> Result<&Chain> {
        self.chain.as_ref().ok_or(Error::NoPole)
    }

    /// `A^(k) / k!`.
    pub fn taylor(&self, k: usize) -> Result<&Mat> {
        Ok(&self.chain()?.taylor.a[k])
    }
}

/// Determines the pole order `m <= 4` of `A^{-1}(z)` at `z = 1`.
pub fn detect_pole_order(p: &MatrixPolynomial, tol: &Tolerances) -> Result<PoleReport> {
    detect_pole_order_capped(p, tol, MAX_ORDER)
}

/// As [`detect_pole_order`], reporting [`Error::UnsupportedOrder`] as soon as
/// `K_max_order` turns out singular.
pub fn detect_pole_order_capped(
    p: &MatrixPolynomial,
    tol: &Tolerances,
    max_order: usize,
) -> Result<PoleReport> {
    let max_order = max_order.min(MAX_ORDER);
    let roots = p.det_roots(CLUSTER_TOL, OUTSIDE_MARGIN)?;
    let mut warnings = Vec::new();
    if !roots.premise_ok {
        warnings
            .push("some non-unit roots of det A(z) lie on or inside the unit circle".to_string());
    }
    if roots.ill_conditioned {
        warnings.push("companion eigenproblem for det A(z) is ill-conditioned".to_string());
    }
    let mu = roots.unit_root_multiplicity;
    let mut chain = match Chain::start(p, tol) {
        Ok(c) => c,
        Err(Error::NoPole) => {
            return Ok(PoleReport {
                m: 0,
                dim: p.dim(),
                chain: None,
                a_brackets: Vec::new(),
                theta1: None,
                theta2: None,
                n_leading: None,
                mu,
                roots,
                warnings,
            })
        }
        Err(e) => return Err(e),
    };
    if chain.links[0].borderline {
        warnings.push("rank of A(1) is borderline at the current tolerance".to_string());
    }
    let m = loop {
        let i = chain.depth() + 1;
        if i > max_order {
            return Err(Error::UnsupportedOrder(format!(
                "K_{max_order} is singular: pole order exceeds {max_order}"
            )));
        }
        let link = chain.extend()?;
        if link.borderline {
            warnings.push(format!(
                "nonsingularity of K_{i} is borderline at the current tolerance"
            ));
        }
        if link.is_nonsingular() {
            break i;
        }
    };
    let theta1 = chain.theta1().ok();
    let theta2 = chain.theta2().ok();
    let a_brackets = chain.brackets.mats.clone();
    let mut report = PoleReport {
        m,
        dim: p.dim(),
        chain: Some(chain),
        a_brackets,
        theta1,
        theta2,
        n_leading: None,
        mu,
        roots,
        warnings,
    };
    if m > mu {
        report.warnings.push(format!(
            "pole order {m} exceeds the unit-root multiplicity {mu}"
        ));
    }
    report.n_leading = Some(leading_matrix(&report)?);
    Ok(report)
}

/// `N_{-m} = F K_m^{-1} G^T` with `F = C_{0perp}..C_{(m-1)perp}` and
/// `G = B_{0perp}..B_{(m-1)perp}`.
pub fn leading_matrix(report: &PoleReport) -> Result<Mat> {
    if report.m == 0 {
        return Err(Error::NoPole);
    }
    let chain = report.chain()?;
    let m = report.m;
    let km = &chain.links[m];
    Ok(chain.c_chain(m) * &km.pinv * chain.b_chain(m).transpose())
}

/// The convolution part of `N_{-m+theta}` that keeps its form across pole
/// orders:
/// `-A^+ sum_{j=1..theta} a_j N_{-m+theta-j} - sum_{j=1..theta} N_{-m+theta-j} a_j A^+
///  + A^+ A sum_{j=1..theta-1} N_{-m+theta-j} a_j A^+`.
///
/// `principal` holds `N_{-m}, ..., N_{-1}` in that order.
#[allow(clippy::needless_range_loop)]
pub fn lambda_theta(report: &PoleReport, principal: &[Mat], theta: usize) -> Result<Mat> {
    let m = report.m;
    if theta == 0 || theta >= m {
        return Err(Error::Range(format!("theta = {theta} outside 1..{m}")));
    }
    if principal.len() != m {
        return Err(Error::Shape(format!(
            "expected {m} principal matrices, got {}",
            principal.len()
        )));
    }
    let chain = report.chain()?;
    let a = &chain.taylor.a;
    let p = &chain.a_pinv;
    let n = report.dim;
    let coeff = |j: usize| &principal[theta - j];
    let mut left = Mat::zeros(n, n);
    let mut right = Mat::zeros(n, n);
    let mut inner = Mat::zeros(n, n);
    for j in 1..=theta {
        left += &a[j] * coeff(j);
        right += coeff(j) * &a[j];
        if j < theta {
            inner += coeff(j) * &a[j];
        }
    }
    Ok(-(p * left) - right * p + p * &a[0] * inner * p)
}

#[derive(Debug, Clone)]
pub struct DecompositionEntry {
    pub theta: usize,
    /// Left residual `(I - F F^T) R_theta`.
    pub left: f64,
    /// Right residual `R_theta (I - G G^T)`.
    pub right: f64,
    /// Magnitude of the terms forming `R_theta`, at least the largest
    /// principal coefficient.
    pub scale: f64,
}

impl DecompositionEntry {
    pub fn relative(&self) -> f64 {
        let r = self.left.max(self.right);
        if r == 0.0 {
            0.0
        } else {
            r / self.scale
        }
    }
}

/// Splits each non-leading principal matrix `N_{-m+theta}` into
/// `Lambda_theta`, the explicit order-dependent terms, and a remainder that
/// must lie in `F S G^T` for the chain factors `F`, `G` of the case. Returns
/// the annihilation residuals of that remainder.
pub fn decomposition_check(
    report: &PoleReport,
    principal: &[Mat],
) -> Result<Vec<DecompositionEntry>> {
    let m = report.m;
    if m < 2 {
        return Ok(Vec::new());
    }
    if principal.len() != m {
        return Err(Error::Shape(format!(
            "expected {m} principal matrices, got {}",
            principal.len()
        )));
    }
    let chain = report.chain()?;
    let n = report.dim;
    let eye = Mat::identity(n, n);
    let lead = &principal[0];
    let a = &chain.taylor.a;
    let p = &chain.a_pinv;
    let b = &report.a_brackets;
    let principal_scale = principal.iter().map(fro).fold(0.0, f64::max);
    let mut out = Vec::new();
    for theta in 1..m {
        let target = &principal[theta];
        let lambda = lambda_theta(report, principal, theta)?;
        let (explicit, depth) = match (m, theta) {
            (_, t) if t == m - 1 => (Mat::zeros(n, n), 1),
            (3, 1) => {
                let t1 = report
                    .theta1
                    .as_ref()
                    .ok_or(Error::Sequencing("Theta_1 missing".into()))?;
                (-(t1 * &b[1] * lead + lead * &b[1] * t1), 2)
            }
            (4, 1) => {
                let t1 = report
                    .theta1
                    .as_ref()
                    .ok_or(Error::Sequencing("Theta_1 missing".into()))?;
                let t2 = report
                    .theta2
                    .as_ref()
                    .ok_or(Error::Sequencing("Theta_2 missing".into()))?;
                (
                    -(t1 * &b[1] * lead
                        + lead * &b[1] * t1
                        + t2 * &b[2] * lead
                        + lead * &b[2] * t2),
                    3,
                )
            }
            (4, 2) => {
                let t1 = report
                    .theta1
                    .as_ref()
                    .ok_or(Error::Sequencing("Theta_1 missing".into()))?;
                let next = &principal[1];
                let b0p = &chain.links[0].b_perp;
                let c0p = &chain.links[0].c_perp;
                let k1 = &chain.links[1];
                let k1_ann = Mat::identity(k1.size(), k1.size()) - &k1.k * &k1.pinv;
                let dot3 = &a[3] - &a[1] * p * &a[2];
                let breve3 = &a[3] - &a[2] * p * &a[1];
                let e = t1 * &b[1] * next * b0p * &k1_ann * b0p.transpose()
                    + t1 * &dot3 * lead
                    + c0p * c0p.transpose() * next * &b[1] * t1
                    + lead * &breve3 * t1;
                (-e, 2)
            }
            _ => unreachable!("theta < m <= 4"),
        };
        let remainder = target - &lambda - &explicit;
        let f = chain.c_chain(depth);
        let g = chain.b_chain(depth);
        let left = fro(&((&eye - &f * f.transpose()) * &remainder));
        let right = fro(&(&remainder * (&eye - &g * g.transpose())));
        // A remainder that cancels to roundoff is judged against the whole
        // principal part, not against its own vanishing terms.
        let scale = fro(target)
            .max(fro(&lambda))
            .max(fro(&explicit))
            .max(principal_scale)
            .max(f64::MIN_POSITIVE);
        out.push(DecompositionEntry {
            theta,
            left,
            right,
            scale,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn scalar(c: &[f64]) -> MatrixPolynomial {
        MatrixPolynomial::new(c.iter().map(|&x| dmatrix![x]).collect()).unwrap()
    }

    fn diag_poly(a: &[f64], b: &[f64]) -> MatrixPolynomial {
        let k = a.len().max(b.len());
        let coeffs = (0..k)
            .map(|i| dmatrix![a.get(i).copied().unwrap_or(0.0), 0.0; 0.0, b.get(i).copied().unwrap_or(0.0)])
            .collect();
        MatrixPolynomial::new(coeffs).unwrap()
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn close(a: &Mat, b: &Mat, eps: f64) -> bool {
        a.shape() == b.shape() && fro(&(a - b)) <= eps
    }

    #[test]
    fn simple_scalar_pole() {
        let r = detect_pole_order(&scalar(&[1.0, -1.0]), &tol()).unwrap();
        assert_eq!(r.m, 1);
        let chain = r.chain().unwrap();
        assert!(close(
            &chain.links[1].k.map(f64::abs),
            &dmatrix![1.0],
            1e-14
        ));
        assert!(close(r.n_leading.as_ref().unwrap(), &dmatrix![-1.0], 1e-14));
    }

    #[test]
    fn double_scalar_pole() {
        let r = detect_pole_order(&scalar(&[1.0, -2.0, 1.0]), &tol()).unwrap();
        assert_eq!(r.m, 2);
        assert_eq!(r.mu, 2);
        let chain = r.chain().unwrap();
        assert!(close(
            &chain.links[2].k.map(f64::abs),
            &dmatrix![1.0],
            1e-14
        ));
        assert!(close(&r.a_brackets[1], &dmatrix![1.0], 1e-14));
        assert!(close(r.theta1.as_ref().unwrap(), &dmatrix![0.0], 1e-14));
        assert!(close(r.n_leading.as_ref().unwrap(), &dmatrix![1.0], 1e-14));
    }

    #[test]
    fn cointegrated_pair_is_simple() {
        let p = MatrixPolynomial::from_var(&[dmatrix![0.5, 0.5; 0.5, 0.5]]).unwrap();
        let r = detect_pole_order(&p, &tol()).unwrap();
        assert_eq!(r.m, 1);
        let chain = r.chain().unwrap();
        // sign follows the choice of complements; N_{-1} does not
        assert!(close(
            &chain.links[1].k.map(f64::abs),
            &dmatrix![1.0],
            1e-14
        ));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c0p = &chain.links[0].c_perp;
        assert!(close(&c0p.map(f64::abs), &dmatrix![s; s], 1e-14));
        assert!(close(
            r.n_leading.as_ref().unwrap(),
            &dmatrix![-0.5, -0.5; -0.5, -0.5],
            1e-14
        ));
    }

    #[test]
    fn stationary_scalar_has_no_pole() {
        let r = detect_pole_order(&scalar(&[1.0, -0.5]), &tol()).unwrap();
        assert_eq!(r.m, 0);
        assert!(r.n_leading.is_none());
        assert!(matches!(leading_matrix(&r), Err(Error::NoPole)));
    }

    #[test]
    fn theta_sequencing() {
        let p = scalar(&[1.0, -0.5]);
        assert!(matches!(Chain::start(&p, &tol()), Err(Error::NoPole)));
        let p = scalar(&[1.0, -1.0]);
        let mut chain = Chain::start(&p, &tol()).unwrap();
        assert!(matches!(chain.theta1(), Err(Error::Sequencing(_))));
        chain.extend().unwrap();
        assert!(chain.theta1().is_ok());
        assert!(matches!(chain.theta2(), Err(Error::Sequencing(_))));
        assert!(matches!(chain.extend(), Err(Error::Sequencing(_))));
    }

    #[test]
    fn mixed_diagonal_theta_and_bracket() {
        // diag(1 - z, (1 - z)^2)
        let p = diag_poly(&[1.0, -1.0], &[1.0, -2.0, 1.0]);
        let r = detect_pole_order(&p, &tol()).unwrap();
        assert_eq!(r.m, 2);
        assert!(close(
            r.theta1.as_ref().unwrap(),
            &dmatrix![-1.0, 0.0; 0.0, 0.0],
            1e-14
        ));
        assert!(close(
            &r.a_brackets[1],
            &dmatrix![0.0, 0.0; 0.0, 1.0],
            1e-14
        ));
        assert!(close(
            r.n_leading.as_ref().unwrap(),
            &dmatrix![0.0, 0.0; 0.0, 1.0],
            1e-14
        ));
    }

    #[test]
    fn bracket_order_out_of_range() {
        let p = scalar(&[1.0, -1.0]);
        let t = TaylorData::new(&p);
        let z = dmatrix![0.0];
        assert!(matches!(
            compute_a_bracket(&t, &z, 0, None, None),
            Err(Error::UnsupportedOrder(_))
        ));
        assert!(matches!(
            compute_a_bracket(&t, &z, 5, None, None),
            Err(Error::UnsupportedOrder(_))
        ));
        assert!(matches!(
            compute_a_bracket(&t, &z, 3, None, None),
            Err(Error::Sequencing(_))
        ));
    }

    #[test]
    fn fifth_order_pole_is_unsupported() {
        // (1 - z)^5
        let p = scalar(&[1.0, -5.0, 10.0, -10.0, 5.0, -1.0]);
        assert!(matches!(
            detect_pole_order(&p, &tol()),
            Err(Error::UnsupportedOrder(_))
        ));
        let p = scalar(&[1.0, -3.0, 3.0, -1.0]);
        assert!(matches!(
            detect_pole_order_capped(&p, &tol(), 2),
            Err(Error::UnsupportedOrder(_))
        ));
        assert_eq!(detect_pole_order(&p, &tol()).unwrap().m, 3);
    }

    #[test]
    fn lambda_theta_examples() {
        let r = detect_pole_order(&scalar(&[1.0, -2.0, 1.0]), &tol()).unwrap();
        let principal = vec![dmatrix![1.0], dmatrix![0.0]];
        assert!(close(
            &lambda_theta(&r, &principal, 1).unwrap(),
            &dmatrix![0.0],
            1e-15
        ));
        assert!(matches!(
            lambda_theta(&r, &principal, 2),
            Err(Error::Range(_))
        ));

        let p = diag_poly(&[1.0, -1.0], &[1.0, -2.0, 1.0]);
        let r = detect_pole_order(&p, &tol()).unwrap();
        let principal = vec![dmatrix![0.0, 0.0; 0.0, 1.0], dmatrix![-1.0, 0.0; 0.0, 0.0]];
        assert!(close(
            &lambda_theta(&r, &principal, 1).unwrap(),
            &Mat::zeros(2, 2),
            1e-15
        ));
        let d = decomposition_check(&r, &principal).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].relative(), 0.0);

        let r = detect_pole_order(&scalar(&[1.0, -1.0]), &tol()).unwrap();
        assert!(matches!(
            lambda_theta(&r, &[dmatrix![-1.0]], 1),
            Err(Error::Range(_))
        ));
        assert!(decomposition_check(&r, &[dmatrix![-1.0]])
            .unwrap()
            .is_empty());
    }

    #[test]
    fn decomposition_scalar_double_pole() {
        let r = detect_pole_order(&scalar(&[1.0, -2.0, 1.0]), &tol()).unwrap();
        let d = decomposition_check(&r, &[dmatrix![1.0], dmatrix![0.0]]).unwrap();
        assert_eq!(d[0].left, 0.0);
        assert_eq!(d[0].right, 0.0);
    }
}
