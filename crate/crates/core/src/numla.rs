//! Rank-revealing kernel built on the singular value decomposition.
//!
//! Every rank decision in the crate goes through a [`Threshold`]: a singular
//! value counts as nonzero when it exceeds `rel * max(sigma_max, scale)`. With
//! `scale = 0` this is the plain relative cutoff. A positive `scale` lets a
//! caller declare a matrix that is zero up to roundoff (for instance `A(1)`
//! assembled from coefficients that cancel) as rank zero.
//!
//! Empty matrices (`n x 0`, `0 x n`) are supported throughout.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

/// Tolerances shared by the whole pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative singular-value cutoff for rank decisions.
    pub rank_rel: f64,
    /// Relative cutoff below which a `K_i` is declared singular.
    pub nonsing_rel: f64,
    /// Absolute ceiling for verification residuals.
    pub residual_abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_rel: 1e-10,
            nonsing_rel: 1e-8,
            residual_abs: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn new(rank_rel: f64, nonsing_rel: f64, residual_abs: f64) -> Result<Self> {
        let t = Tolerances {
            rank_rel,
            nonsing_rel,
            residual_abs,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !(ok(self.rank_rel) && ok(self.nonsing_rel) && ok(self.residual_abs)) {
            return Err(Error::Input(
                "tolerances must be finite and positive".into(),
            ));
        }
        if self.rank_rel >= 1.0 {
            return Err(Error::Input("rank_rel must be below 1".into()));
        }
        Ok(())
    }

    /// Rank threshold relative to `max(sigma_max, scale)`.
    pub fn rank_scaled(&self, scale: f64) -> Threshold {
        Threshold {
            rel: self.rank_rel,
            scale,
        }
    }

    /// Rank threshold for a matrix that is idempotent within `residual_abs`.
    /// Its singular values are 0 or at least 1, so anything up to the
    /// idempotency tolerance counts as zero.
    pub fn projector_rank(&self) -> Threshold {
        Threshold {
            rel: self.rank_rel.max(self.residual_abs),
            scale: 1.0,
        }
    }

    /// Nonsingularity threshold relative to `max(sigma_max, scale)`.
    pub fn nonsing_scaled(&self, scale: f64) -> Threshold {
        Threshold {
            rel: self.nonsing_rel,
            scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub rel: f64,
    pub scale: f64,
}

impl Threshold {
    pub fn relative(rel: f64) -> Self {
        Threshold { rel, scale: 0.0 }
    }

    pub fn cutoff(&self, sigma_max: f64) -> f64 {
        self.rel * sigma_max.max(self.scale)
    }
}

impl From<&Tolerances> for Threshold {
    fn from(t: &Tolerances) -> Self {
        Threshold::relative(t.rank_rel)
    }
}

impl From<Tolerances> for Threshold {
    fn from(t: Tolerances) -> Self {
        Threshold::relative(t.rank_rel)
    }
}

/// `M = B C^T` with `B`, `C` of full column rank `rank`.
#[derive(Debug, Clone)]
pub struct RankFactorization {
    pub b: Mat,
    pub c: Mat,
    pub rank: usize,
}

impl RankFactorization {
    pub fn reconstruct(&self) -> Mat {
        &self.b * self.c.transpose()
    }
}

/// Thin SVD with singular values sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Mat,
    pub s: Vec<f64>,
    pub v: Mat,
}

impl Svd {
    pub fn new(m: &Mat) -> Svd {
        let (p, q) = m.shape();
        let k = p.min(q);
        if k == 0 {
            return Svd {
                u: Mat::zeros(p, 0),
                s: Vec::new(),
                v: Mat::zeros(q, 0),
            };
        }
        let fm = faer::Mat::<f64>::from_fn(p, q, |i, j| m[(i, j)]);
        let svd = fm.thin_svd().expect("SVD did not converge");
        let (fu, fv) = (svd.U(), svd.V());
        let fs = svd.S().column_vector();
        let s = (0..k).map(|i| fs[i]).collect();
        let u = Mat::from_fn(p, k, |r, c| fu[(r, c)]);
        let v = Mat::from_fn(q, k, |r, c| fv[(r, c)]);
        Svd { u, s, v }
    }

    pub fn sigma_max(&self) -> f64 {
        self.s.first().copied().unwrap_or(0.0)
    }

    pub fn rank(&self, th: Threshold) -> usize {
        let cut = th.cutoff(self.sigma_max());
        self.s.iter().filter(|&&x| x > cut).count()
    }
}

pub fn singular_values(m: &Mat) -> Vec<f64> {
    Svd::new(m).s
}

/// Spectral norm; zero for empty matrices.
pub fn norm2(m: &Mat) -> f64 {
    if m.is_empty() {
        0.0
    } else {
        Svd::new(m).sigma_max()
    }
}

pub fn fro(m: &Mat) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn numerical_rank(m: &Mat, th: impl Into<Threshold>) -> usize {
    Svd::new(m).rank(th.into())
}

pub fn pinv(m: &Mat, th: impl Into<Threshold>) -> Mat {
    let svd = Svd::new(m);
    let r = svd.rank(th.into());
    pinv_truncated(&svd, r)
}

/// Pseudoinverse from an SVD keeping the leading `r` singular triplets.
pub fn pinv_truncated(svd: &Svd, r: usize) -> Mat {
    let (p, q) = (svd.u.nrows(), svd.v.nrows());
    let mut out = Mat::zeros(q, p);
    for k in 0..r {
        let inv = 1.0 / svd.s[k];
        let vk = svd.v.column(k);
        let uk = svd.u.column(k);
        out += (vk * uk.transpose()) * inv;
    }
    out
}

pub fn rank_factorize(m: &Mat, th: impl Into<Threshold>) -> RankFactorization {
    let svd = Svd::new(m);
    let r = svd.rank(th.into());
    factorization_from_svd(&svd, r)
}

/// Symmetric split `B = U_r S_r^{1/2}`, `C = V_r S_r^{1/2}`.
pub fn factorization_from_svd(svd: &Svd, r: usize) -> RankFactorization {
    let (p, q) = (svd.u.nrows(), svd.v.nrows());
    let mut b = Mat::zeros(p, r);
    let mut c = Mat::zeros(q, r);
    for k in 0..r {
        let root = svd.s[k].sqrt();
        b.set_column(k, &(svd.u.column(k) * root));
        c.set_column(k, &(svd.v.column(k) * root));
    }
    RankFactorization { b, c, rank: r }
}

/// Orthonormal basis of the orthogonal complement of the column space of `m`.
pub fn orth_complement(m: &Mat, th: impl Into<Threshold>) -> Mat {
    let n = m.nrows();
    if m.ncols() == 0 || n == 0 {
        return Mat::identity(n, n);
    }
    let svd = padded_svd(m);
    let r = svd.rank(th.into());
    svd.u.columns(r, n - r).into_owned()
}

/// Complement of a matrix known to have full column rank.
pub fn orth_complement_full(m: &Mat) -> Mat {
    let n = m.nrows();
    let r = m.ncols().min(n);
    if r == 0 {
        return Mat::identity(n, n);
    }
    padded_svd(m).u.columns(r, n - r).into_owned()
}

// padding with zero columns makes the thin U square
fn padded_svd(m: &Mat) -> Svd {
    let n = m.nrows();
    let mut padded = Mat::zeros(n, m.ncols() + n);
    padded.view_mut((0, 0), (n, m.ncols())).copy_from(m);
    Svd::new(&padded)
}

/// `G^T = I - G G^+`: annihilates the columns of `G` from the left.
pub fn ann_row(g: &Mat, th: impl Into<Threshold>) -> Mat {
    let n = g.nrows();
    Mat::identity(n, n) - g * pinv(g, th)
}

/// `A^perp = I - A^+ A`: annihilates the rows of `A` from the right.
pub fn ann_col(a: &Mat, th: impl Into<Threshold>) -> Mat {
    let q = a.ncols();
    Mat::identity(q, q) - pinv(a, th) * a
}

/// Orthogonal projector onto the column space of `m`.
pub fn range_projector(m: &Mat, th: impl Into<Threshold>) -> Mat {
    m * pinv(m, th)
}

/// Orthonormal basis of the column space of `m`.
pub fn range_basis(m: &Mat, th: impl Into<Threshold>) -> Mat {
    let svd = Svd::new(m);
    let r = svd.rank(th.into());
    svd.u.columns(0, r).into_owned()
}

/// Horizontal concatenation; tolerates empty blocks.
pub fn hcat(blocks: &[&Mat]) -> Mat {
    let rows = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hcat row mismatch");
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}

/// Largest Penrose-condition residual of `x` as a pseudoinverse of `m`.
pub fn penrose_residual(m: &Mat, x: &Mat) -> f64 {
    let mx = m * x;
    let xm = x * m;
    let r1 = fro(&(&mx * m - m));
    let r2 = fro(&(&xm * x - x));
    let r3 = fro(&(&mx - mx.transpose()));
    let r4 = fro(&(&xm - xm.transpose()));
    r1.max(r2).max(r3).max(r4)
}

pub fn is_finite(m: &Mat) -> bool {
    m.iter().all(|x| x.is_finite())
}
