//! Parallel sums `X : Z = X (X + Z)^+ Z` and the projector obtained by
//! combining two annihilating projectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numla::{fro, numerical_rank, pinv, Mat, Threshold, Tolerances};

/// Two idempotent matrices of the same order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorPair {
    pub p_r: Mat,
    pub p_s: Mat,
}

impl ProjectorPair {
    pub fn new(p_r: Mat, p_s: Mat) -> Self {
        ProjectorPair { p_r, p_s }
    }

    /// `P_R = (R^T)^+ R^T` and `P_S = (S^T)^+ S^T`: the projectors that kill
    /// any `V` with `R^T V = 0` and any `W` with `S^T W = 0`.
    pub fn from_annihilated(r: &Mat, s: &Mat, tol: &Tolerances) -> Self {
        let rt = r.transpose();
        let st = s.transpose();
        ProjectorPair {
            p_r: pinv(&rt, tol) * &rt,
            p_s: pinv(&st, tol) * &st,
        }
    }
}

pub fn idempotency_residual(p: &Mat) -> f64 {
    fro(&(p * p - p))
}

pub fn parallel_sum(x: &Mat, z: &Mat, th: impl Into<Threshold>) -> Mat {
    assert_eq!(x.shape(), z.shape(), "parallel sum of mismatched shapes");
    x * pinv(&(x + z), th) * z
}

/// `2 (P_R : P_S)`, idempotent when both inputs are.
pub fn combined_projector(pair: &ProjectorPair, tol: &Tolerances) -> Result<Mat> {
    if pair.p_r.shape() != pair.p_s.shape() || !pair.p_r.is_square() {
        return Err(Error::Shape(
            "projector pair must be square and of equal order".into(),
        ));
    }
    for (name, p) in [("P_R", &pair.p_r), ("P_S", &pair.p_s)] {
        let res = idempotency_residual(p);
        if res > tol.residual_abs {
            return Err(Error::Precondition(format!(
                "{name} is not idempotent (residual {res:.3e})"
            )));
        }
    }
    Ok(parallel_sum(&pair.p_r, &pair.p_s, tol) * 2.0)
}

/// Parallel sum read off the bordered matrix
/// `[[A, 0, I], [0, B, I], [I, I, 0]]`: minus the trailing diagonal block of
/// its pseudoinverse.
pub fn bordered_parallel_sum(a: &Mat, b: &Mat, th: impl Into<Threshold>) -> Mat {
    assert_eq!(
        a.shape(),
        b.shape(),
        "bordered parallel sum of mismatched shapes"
    );
    let n = a.nrows();
    let eye = Mat::identity(n, n);
    let mut m = Mat::zeros(3 * n, 3 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((n, n), (n, n)).copy_from(b);
    for blk in [(0, 2 * n), (n, 2 * n), (2 * n, 0), (2 * n, n)] {
        m.view_mut(blk, (n, n)).copy_from(&eye);
    }
    -pinv(&m, th).view((2 * n, 2 * n), (n, n)).into_owned()
}

/// `r(A:B) = r(A) + r(B) - r(A + B)`.
pub fn parsum_rank(a: &Mat, b: &Mat, th: impl Into<Threshold>) -> usize {
    let th = th.into();
    let sum = numerical_rank(a, th) + numerical_rank(b, th);
    sum - numerical_rank(&(a + b), th)
}

/// `r(A) + r(B) - n`, valid when `B (I - A A^+) = I - A A^+`. Returns `None`
/// when that condition fails at `tol.residual_abs`.
pub fn parsum_rank_simplified(a: &Mat, b: &Mat, tol: &Tolerances) -> Option<usize> {
    let n = a.nrows();
    let comp = Mat::identity(n, n) - a * pinv(a, tol);
    if fro(&(b * &comp - &comp)) > tol.residual_abs {
        return None;
    }
    (numerical_rank(a, tol) + numerical_rank(b, tol)).checked_sub(n)
}
