//! Laurent coefficients of `A^{-1}(z)` about `z = 1`.
//!
//! `contour_coefficients` is the ground truth: trapezoidal quadrature of the
//! Cauchy coefficient integral on the circle `|z - 1| = rho`. The other entry
//! points check coefficients against the fundamental identities
//! `sum_j N_{h-m-j} a_j = delta_{h,m} I` (left) and
//! `sum_j a_j N_{h-m-j} = delta_{h,m} I` (right), with `a_j = A^(j) / j!`.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::{Complex, Complex64};
use rayon::prelude::*;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::matpoly::{CMat, MatrixPolynomial};
use crate::numla::{fro, norm2, Mat, Svd, Tolerances};

pub const DEFAULT_NODES: usize = 256;
pub const MAX_NODES: usize = 4096;
pub const MAX_RADIUS: f64 = 0.5;
/// Relative floor below which a principal coefficient counts as absent.
pub const COEFF_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ContourOptions {
    /// `None` picks [`default_radius`].
    pub radius: Option<f64>,
    pub nodes: usize,
    pub max_nodes: usize,
    /// Largest condition number of `A(z)` tolerated at a node.
    pub cond_cap: f64,
    /// Relative change allowed when the node count doubles.
    pub quad_tol: f64,
}

/// A stalled doubling is accepted only below this multiple of `quad_tol`.
const STALL_FACTOR: f64 = 100.0;

impl Default for ContourOptions {
    fn default() -> Self {
        ContourOptions {
            radius: None,
            nodes: DEFAULT_NODES,
            max_nodes: MAX_NODES,
            cond_cap: 1e12,
            quad_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LaurentExpansion {
    pub m: usize,
    /// `N_{-m}, ..., N_{-1}`.
    pub principal: Vec<Mat>,
    /// `N_0, ..., N_q`.
    pub regular: Vec<Mat>,
    /// Coefficients computed below `-m`, i.e. `N_{j_min}..N_{-m-1}`; these sit
    /// under the floor and are kept for inspection only.
    pub below: Vec<Mat>,
    pub j_min: i32,
    pub radius: f64,
    pub nodes: usize,
    pub imag_leak: f64,
    /// Largest relative coefficient change seen at the last node doubling.
    pub doubling_change: f64,
}

impl LaurentExpansion {
    /// `N_j`, if it was computed.
    pub fn coeff(&self, j: i32) -> Option<&Mat> {
        let m = self.m as i32;
        if j >= 0 {
            self.regular.get(j as usize)
        } else if j >= -m {
            self.principal.get((j + m) as usize)
        } else if j >= self.j_min {
            self.below.get((j - self.j_min) as usize)
        } else {
            None
        }
    }

    pub fn j_max(&self) -> i32 {
        self.regular.len() as i32 - 1
    }

    /// Largest Frobenius norm over the principal part, 0 when there is none.
    pub fn principal_scale(&self) -> f64 {
        self.principal.iter().map(fro).fold(0.0, f64::max)
    }

    /// Evaluates the truncated series at `z`.
    pub fn evaluate(&self, z: Complex64) -> CMat {
        let n = self
            .principal
            .first()
            .or(self.regular.first())
            .map_or(0, |m| m.nrows());
        let w = z - 1.0;
        let mut acc = CMat::zeros(n, n);
        for j in self.j_min..=self.j_max() {
            if let Some(c) = self.coeff(j) {
                acc += c.map(|x| Complex64::new(x, 0.0)) * w.powi(j);
            }
        }
        acc
    }
}

/// `min(0.5, distance from 1 to the nearest other root of det A(z) / 2)`.
pub fn default_radius(p: &MatrixPolynomial) -> Result<f64> {
    let roots = p.det_roots(1e-6, 1e-6)?;
    Ok(roots
        .nearest_other_distance
        .map_or(MAX_RADIUS, |d| (0.5 * d).min(MAX_RADIUS)))
}

struct NodeValue {
    k: usize,
    inv: CMat,
    cond: f64,
}

/// `exp(2 pi i k / total)`, built so that `k` and `total - k` give exact
/// conjugates.
fn unit_root(k: i64, total: usize) -> Complex64 {
    let t = total as i64;
    let k = k.rem_euclid(t);
    let (k, flip) = if 2 * k > t { (t - k, true) } else { (k, false) };
    let (s, c) = (2.0 * PI * k as f64 / total as f64).sin_cos();
    Complex64::new(c, if flip { -s } else { s })
}

type Dd = Complex<TwoFloat>;

fn dd(c: Complex64) -> Dd {
    Complex::new(TwoFloat::from(c.re), TwoFloat::from(c.im))
}

fn round(c: &Dd) -> Complex64 {
    Complex64::new(c.re.hi() + c.re.lo(), c.im.hi() + c.im.lo())
}

// Evaluated in the Taylor basis about z = 1 with double-double accumulation,
// then inverted with two steps of refinement against that accurate value.
// Near the pole A(z) is ill-conditioned and a plain inverse would put
// roundoff of order cond * eps into every node.
fn node_value(taylor: &[Mat], radius: f64, k: usize, total: usize) -> NodeValue {
    let w = unit_root(k as i64, total) * radius;
    let wd = dd(w);
    let n = taylor[0].nrows();
    let mut acc = vec![Dd::new(TwoFloat::from(0.0), TwoFloat::from(0.0)); n * n];
    for c in taylor.iter().rev() {
        for (idx, v) in acc.iter_mut().enumerate() {
            *v = *v * wd + Dd::new(TwoFloat::from(c[(idx % n, idx / n)]), TwoFloat::from(0.0));
        }
    }
    let a = CMat::from_fn(n, n, |i, j| round(&acc[i + j * n]));
    let size: f64 = taylor
        .iter()
        .enumerate()
        .map(|(j, c)| c.norm() * radius.powi(j as i32))
        .sum();
    let fa = faer::Mat::<Complex64>::from_fn(n, n, |i, j| a[(i, j)]);
    let smin = fa
        .singular_values()
        .map_or(0.0, |sv| sv.last().copied().unwrap_or(0.0));
    let cond = if smin > 0.0 {
        size / smin
    } else {
        f64::INFINITY
    };
    let inv = match a.clone().try_inverse() {
        Some(mut x) => {
            for _ in 0..2 {
                // R = I - A X in double-double, then X += X R
                let r = CMat::from_fn(n, n, |i, j| {
                    let mut s = if i == j {
                        Dd::new(TwoFloat::from(1.0), TwoFloat::from(0.0))
                    } else {
                        Dd::new(TwoFloat::from(0.0), TwoFloat::from(0.0))
                    };
                    for l in 0..n {
                        s -= acc[i + l * n] * dd(x[(l, j)]);
                    }
                    round(&s)
                });
                x += &x * r;
            }
            x
        }
        None => CMat::from_element(n, n, Complex64::new(f64::NAN, 0.0)),
    };
    NodeValue { k, inv, cond }
}

fn evaluate_nodes(
    taylor: &[Mat],
    radius: f64,
    idx: Vec<usize>,
    total: usize,
    cap: f64,
) -> Result<Vec<NodeValue>> {
    let vals: Vec<NodeValue> = idx
        .into_par_iter()
        .map(|k| node_value(taylor, radius, k, total))
        .collect();
    let worst = vals
        .iter()
        .map(|v| {
            if v.cond.is_nan() {
                f64::INFINITY
            } else {
                v.cond
            }
        })
        .fold(0.0, f64::max);
    if worst > cap {
        return Err(Error::Contour {
            radius,
            condition: worst,
        });
    }
    Ok(vals)
}

/// Returns real parts of `N_{j_min}..N_{j_max}` and the largest imaginary part.
fn quadrature(nodes: &[NodeValue], radius: f64, j_min: i32, j_max: i32) -> (Vec<Mat>, f64) {
    let n = nodes[0].inv.nrows();
    let total = nodes.len() as f64;
    let mut out = Vec::new();
    let mut leak = 0.0f64;
    for j in j_min..=j_max {
        let mut acc = CMat::zeros(n, n);
        for v in nodes {
            let phase = unit_root(-(j as i64) * v.k as i64, nodes.len());
            acc += &v.inv * phase;
        }
        let scale = radius.powi(-j) / total;
        acc *= Complex64::new(scale, 0.0);
        leak = leak.max(acc.iter().map(|c| c.im.abs()).fold(0.0, f64::max));
        out.push(acc.map(|c| c.re));
    }
    (out, leak)
}

/// Laurent coefficients `N_{j_min}..N_{j_max}` by trapezoidal quadrature on
/// `|z - 1| = rho`, doubling the node count until the coefficients settle.
pub fn contour_coefficients(
    p: &MatrixPolynomial,
    j_min: i32,
    j_max: i32,
    opts: &ContourOptions,
) -> Result<LaurentExpansion> {
    if j_min > 0 || j_max < -1 || j_min > j_max {
        return Err(Error::Range(format!(
            "coefficient range {j_min}..{j_max} must satisfy j_min <= 0, j_max >= -1"
        )));
    }
    if opts.nodes < 64 || !opts.nodes.is_power_of_two() {
        return Err(Error::Range(format!(
            "node count {} must be a power of two >= 64",
            opts.nodes
        )));
    }
    let radius = match opts.radius {
        Some(r) => r,
        None => default_radius(p)?,
    };
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Range(format!(
            "contour radius {radius} must be positive"
        )));
    }

    let taylor = p.taylor_coeffs_at_one();
    let mut count = opts.nodes;
    let mut vals = evaluate_nodes(&taylor, radius, (0..count).collect(), count, opts.cond_cap)?;
    let (mut coeffs, _) = quadrature(&vals, radius, j_min, j_max);
    let max_nodes = opts.max_nodes.max(2 * opts.nodes);
    let mut prev_worst = f64::INFINITY;
    loop {
        let next = 2 * count;
        let fresh = evaluate_nodes(
            &taylor,
            radius,
            (0..count).map(|k| 2 * k + 1).collect(),
            next,
            opts.cond_cap,
        )?;
        let mut merged = Vec::with_capacity(next);
        for (mut old, new) in vals.into_iter().zip(fresh) {
            old.k *= 2;
            merged.push(old);
            merged.push(new);
        }
        vals = merged;
        let (c2, leak2) = quadrature(&vals, radius, j_min, j_max);

        let inv_max = vals
            .iter()
            .map(|v| fro(&v.inv.map(|c| c.norm())))
            .fold(0.0, f64::max);
        let scale = c2.iter().map(fro).fold(f64::MIN_POSITIVE, f64::max);
        let mut worst = 0.0f64;
        let mut ok = true;
        for (idx, (a, b)) in coeffs.iter().zip(&c2).enumerate() {
            let j = j_min + idx as i32;
            let change = fro(&(a - b));
            let roundoff = 64.0 * f64::EPSILON * inv_max * radius.powi(-j);
            worst = worst.max(change / scale);
            if change > opts.quad_tol * scale + roundoff {
                ok = false;
            }
        }
        coeffs = c2;
        count = next;
        // trapezoidal error falls geometrically, so a change that stops
        // shrinking is the roundoff floor
        let stalled = worst > 0.5 * prev_worst && worst <= STALL_FACTOR * opts.quad_tol;
        prev_worst = worst;
        if ok || stalled {
            return Ok(assemble(coeffs, j_min, radius, count, leak2, worst));
        }
        if count >= max_nodes {
            return Err(Error::Convergence {
                nodes: count,
                change: worst,
            });
        }
    }
}

fn assemble(
    coeffs: Vec<Mat>,
    j_min: i32,
    radius: f64,
    nodes: usize,
    imag_leak: f64,
    change: f64,
) -> LaurentExpansion {
    let top = coeffs.iter().map(fro).fold(0.0, f64::max);
    let floor = COEFF_FLOOR * top;
    let mut m = 0usize;
    for j in (1..=(-j_min) as usize).rev() {
        if fro(&coeffs[(-(j as i32) - j_min) as usize]) > floor {
            m = j;
            break;
        }
    }
    let split_lo = (-(m as i32) - j_min) as usize;
    let split_hi = (-j_min) as usize;
    let mut coeffs = coeffs;
    let regular = coeffs.split_off(split_hi);
    let principal = coeffs.split_off(split_lo);
    LaurentExpansion {
        m,
        principal,
        regular,
        below: coeffs,
        j_min,
        radius,
        nodes,
        imag_leak,
        doubling_change: change,
    }
}

/// Principal and regular coefficients solved from the stacked identities.
#[derive(Debug, Clone)]
pub struct ToeplitzSolution {
    pub m: usize,
    pub q: usize,
    /// `N_{-m}..N_{-1}`.
    pub principal: Vec<Mat>,
    /// `N_0..N_q`; the trailing ones are not pinned down by the system.
    pub regular: Vec<Mat>,
    /// Frobenius residual of the least-squares solve.
    pub residual: f64,
    pub rank: usize,
    pub unknowns: usize,
}

fn taylor_padded(p: &MatrixPolynomial, len: usize) -> Vec<Mat> {
    let n = p.dim();
    let mut a = p.taylor_coeffs_at_one();
    a.resize(len.max(a.len()), Mat::zeros(n, n));
    a
}

/// Solves the left and right identities for `h = 0..m+q` jointly for
/// `N_{-m}..N_q` in the minimum-norm least-squares sense.
///
/// Fails with [`Error::IncreaseQ`] when the null space of the stacked system
/// reaches the principal coordinates.
pub fn toeplitz_reconstruct(
    p: &MatrixPolynomial,
    m: usize,
    q: usize,
    tol: &Tolerances,
) -> Result<ToeplitzSolution> {
    if m > crate::polecore::MAX_ORDER {
        return Err(Error::UnsupportedOrder(format!("m = {m}")));
    }
    tol.validate()?;
    let n = p.dim();
    let blocks = m + q + 1;
    let nn = n * n;
    let a = taylor_padded(p, blocks);
    let rows = 2 * blocks * nn;
    let cols = blocks * nn;
    let mut sys = Mat::zeros(rows, cols);
    let mut rhs = DVector::<f64>::zeros(rows);
    let eye = Mat::identity(n, n);
    let id_vec: Vec<f64> = eye.iter().copied().collect();
    for h in 0..blocks {
        for u in 0..=h {
            let aj = &a[h - u];
            // vec(N a) = (a^T kron I) vec(N), vec(a N) = (I kron a) vec(N)
            let left = aj.transpose().kronecker(&eye);
            let right = eye.kronecker(aj);
            sys.view_mut((h * nn, u * nn), (nn, nn)).copy_from(&left);
            sys.view_mut(((blocks + h) * nn, u * nn), (nn, nn))
                .copy_from(&right);
        }
        if h == m {
            for (i, v) in id_vec.iter().enumerate() {
                rhs[h * nn + i] = *v;
                rhs[(blocks + h) * nn + i] = *v;
            }
        }
    }
    let svd = Svd::new(&sys);
    let th = tol.rank_scaled(p.scale());
    let rank = svd.rank(th);
    let ut_b = svd.u.columns(0, rank).transpose() * &rhs;
    let mut coef = DVector::<f64>::zeros(rank);
    for i in 0..rank {
        coef[i] = ut_b[i] / svd.s[i];
    }
    let x = svd.v.columns(0, rank) * coef;

    if rank < cols && m > 0 {
        // thin V is square here because the system has twice as many rows as columns
        let null = svd.v.columns(rank, cols - rank);
        let reach = null.rows(0, m * nn).norm();
        if reach > 1e-6 {
            return Err(Error::IncreaseQ { q });
        }
    }

    let residual = (&sys * &x - &rhs).norm();
    let mats: Vec<Mat> = (0..blocks)
        .map(|u| Mat::from_column_slice(n, n, x.rows(u * nn, nn).as_slice()))
        .collect();
    let mut principal = mats;
    let regular = principal.split_off(m);
    Ok(ToeplitzSolution {
        m,
        q,
        principal,
        regular,
        residual,
        rank,
        unknowns: cols,
    })
}

/// Starts from `q = m` and raises `q` on [`Error::IncreaseQ`], up to `m + 8`.
pub fn toeplitz_reconstruct_auto(
    p: &MatrixPolynomial,
    m: usize,
    tol: &Tolerances,
) -> Result<ToeplitzSolution> {
    let mut q = m;
    loop {
        match toeplitz_reconstruct(p, m, q, tol) {
            Err(Error::IncreaseQ { .. }) if q < m + 8 => q += 1,
            other => return other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone)]
pub struct IdentityResidual {
    pub h: usize,
    pub side: Side,
    pub residual: f64,
    /// Magnitude of the terms summed for this identity, at least 1.
    pub scale: f64,
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub entries: Vec<IdentityResidual>,
    pub max_relative: f64,
    pub pass: bool,
}

/// Evaluates the left and right identities for `h = 0..m+q` on the stored
/// coefficients, where `N_q` is the last regular coefficient.
pub fn verify_fundamental_identities(
    exp: &LaurentExpansion,
    p: &MatrixPolynomial,
    tol: f64,
) -> Result<IdentityReport> {
    if exp.regular.is_empty() {
        return Err(Error::Range("expansion must include N_0".into()));
    }
    let n = p.dim();
    let m = exp.m;
    let hmax = m + exp.regular.len() - 1;
    let a = taylor_padded(p, hmax + 1);
    let eye = Mat::identity(n, n);
    let mut entries = Vec::new();
    let mut worst = 0.0f64;
    for h in 0..=hmax {
        let mut left = Mat::zeros(n, n);
        let mut right = Mat::zeros(n, n);
        let mut scale = 1.0f64;
        let mut mag = 0.0;
        for (j, aj) in a.iter().enumerate().take(h + 1) {
            let nj = exp
                .coeff(h as i32 - m as i32 - j as i32)
                .expect("index within stored range");
            left += nj * aj;
            right += aj * nj;
            mag += norm2(nj) * norm2(aj);
        }
        scale = scale.max(mag);
        if h == m {
            left -= &eye;
            right -= &eye;
        }
        for (side, r) in [(Side::Left, &left), (Side::Right, &right)] {
            let residual = fro(r);
            worst = worst.max(residual / scale);
            entries.push(IdentityResidual {
                h,
                side,
                residual,
                scale,
            });
        }
    }
    Ok(IdentityReport {
        entries,
        max_relative: worst,
        pass: worst <= tol,
    })
}

#[derive(Debug, Clone)]
pub struct AnnihilationVerdict {
    /// `|P N_{-j}|` for `j = 1..m`.
    pub residuals: Vec<f64>,
    /// Largest principal coefficient norm.
    pub scale: f64,
    pub pass: bool,
}

/// Checks `P N_{-j} = 0` for `j = 1..m`, i.e. that `P A^{-1}(z)` is analytic
/// at `z = 1`.
pub fn annihilation_check(p_m: &Mat, exp: &LaurentExpansion, tol: f64) -> AnnihilationVerdict {
    let scale = exp.principal_scale();
    let residuals: Vec<f64> = (1..=exp.m)
        .map(|j| fro(&(p_m * exp.coeff(-(j as i32)).expect("principal coefficient"))))
        .collect();
    let pass = residuals
        .iter()
        .all(|&r| r <= tol * scale.max(f64::MIN_POSITIVE));
    AnnihilationVerdict {
        residuals,
        scale,
        pass,
    }
}
