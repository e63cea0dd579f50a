//! Test models with a known pole order, VAR simulation and variance-growth
//! diagnostics of integration order.

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matpoly::MatrixPolynomial;
use crate::numla::{fro, Mat};

/// Variogram slope below which a series is called stationary.
pub const STATIONARY_SLOPE: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmithSpec {
    pub n: usize,
    /// Unit-root order of each diagonal slot.
    pub degrees: Vec<usize>,
    pub seed: u64,
    /// Degree of the polynomial entries of the unimodular factors; 0 gives
    /// `E = F = I`.
    pub unimodular_degree: usize,
}

impl SmithSpec {
    pub fn new(degrees: Vec<usize>, seed: u64) -> SmithSpec {
        SmithSpec {
            n: degrees.len(),
            degrees,
            seed,
            unimodular_degree: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.degrees.len() != self.n {
            return Err(Error::Input(format!(
                "need one degree per slot: n = {}, got {} degrees",
                self.n,
                self.degrees.len()
            )));
        }
        if self.degrees.iter().any(|&d| d > crate::polecore::MAX_ORDER) {
            return Err(Error::Input("unit-root degrees must not exceed 4".into()));
        }
        Ok(())
    }
}

type PolyMat = Vec<Vec<Vec<f64>>>;

fn poly_identity(n: usize) -> PolyMat {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| vec![if i == j { 1.0 } else { 0.0 }])
                .collect()
        })
        .collect()
}

fn poly_matmul(a: &PolyMat, b: &PolyMat) -> PolyMat {
    let n = a.len();
    let mut out = vec![vec![vec![0.0]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let (x, y) = (&a[i][k], &b[k][j]);
                let acc = &mut out[i][j];
                if acc.len() < x.len() + y.len() - 1 {
                    acc.resize(x.len() + y.len() - 1, 0.0);
                }
                for (p, xv) in x.iter().enumerate() {
                    for (q, yv) in y.iter().enumerate() {
                        acc[p + q] += xv * yv;
                    }
                }
            }
        }
    }
    out
}

/// Random unitriangular polynomial matrix whose off-diagonal entries have no
/// constant term, so its value at `z = 0` is `I`.
#[allow(clippy::needless_range_loop)]
fn unitriangular(n: usize, degree: usize, lower: bool, rng: &mut ChaCha8Rng) -> PolyMat {
    let mut m = poly_identity(n);
    if degree == 0 {
        return m;
    }
    for i in 0..n {
        for j in 0..n {
            if (lower && i > j) || (!lower && i < j) {
                let mut p = vec![0.0; degree + 1];
                for c in p.iter_mut().skip(1) {
                    *c = rng.random_range(-1.0..=1.0);
                }
                m[i][j] = p;
            }
        }
    }
    m
}

fn unimodular(n: usize, degree: usize, rng: &mut ChaCha8Rng) -> PolyMat {
    let l = unitriangular(n, degree, true, rng);
    let u = unitriangular(n, degree, false, rng);
    poly_matmul(&l, &u)
}

fn to_matrix_polynomial(a: &PolyMat) -> Result<MatrixPolynomial> {
    let n = a.len();
    let deg = a.iter().flatten().map(|p| p.len()).max().unwrap_or(1);
    let coeffs = (0..deg)
        .map(|k| Mat::from_fn(n, n, |i, j| a[i][j].get(k).copied().unwrap_or(0.0)))
        .collect();
    MatrixPolynomial::new(coeffs)
}

/// `A(z) = E(z) diag((1 - z)^{d_i}) F(z)` with unimodular `E`, `F` equal to
/// `I` at `z = 0`. The result is in VAR form, `det A(z) = prod (1 - z)^{d_i}`,
/// and the pole order at `z = 1` is `max d_i`.
pub fn generate_smith_model(spec: &SmithSpec) -> Result<(MatrixPolynomial, usize)> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let e = unimodular(n, spec.unimodular_degree, &mut rng);
    let f = unimodular(n, spec.unimodular_degree, &mut rng);
    let mut d = poly_identity(n);
    for (i, &deg) in spec.degrees.iter().enumerate() {
        // (1 - z)^deg
        let mut p = vec![1.0];
        for _ in 0..deg {
            let mut next = vec![0.0; p.len() + 1];
            for (k, c) in p.iter().enumerate() {
                next[k] += c;
                next[k + 1] -= c;
            }
            p = next;
        }
        d[i][i] = p;
    }
    let a = poly_matmul(&poly_matmul(&e, &d), &f);
    let known_m = spec.degrees.iter().copied().max().unwrap_or(0);
    Ok((to_matrix_polynomial(&a)?, known_m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `y_1..y_T` as rows.
    pub values: Mat,
    pub noise_cov: Mat,
    pub seed: u64,
    /// Pre-sample values `y_{1-K}..y_0` as rows.
    pub initial: Mat,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }
}

/// `L` with `L L^T = sigma` for symmetric positive semidefinite `sigma`.
fn psd_factor(sigma: &Mat) -> Result<Mat> {
    let n = sigma.nrows();
    if !sigma.is_square() {
        return Err(Error::Input("noise covariance must be square".into()));
    }
    let scale = fro(sigma);
    if fro(&(sigma - sigma.transpose())) > 1e-12 * scale.max(1.0) {
        return Err(Error::Input("noise covariance must be symmetric".into()));
    }
    let eig = SymmetricEigen::new(sigma.clone());
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if eig.eigenvalues.iter().any(|&l| l < -1e-12 * lmax.max(1.0)) {
        return Err(Error::Input(
            "noise covariance must be positive semidefinite".into(),
        ));
    }
    let mut l = eig.eigenvectors.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        l.column_mut(j).scale_mut(lam.max(0.0).sqrt());
    }
    debug_assert_eq!(l.nrows(), n);
    Ok(l)
}

/// Iterates `y_t = sum_k Phi_k y_{t-k} + eps_t` with `Phi_k = -A_k`,
/// zero pre-sample values and Gaussian noise of covariance `sigma`.
pub fn simulate_var(
    p: &MatrixPolynomial,
    t_len: usize,
    sigma: &Mat,
    seed: u64,
) -> Result<Trajectory> {
    let phi = p.var_lags()?;
    if t_len == 0 {
        return Err(Error::Input("trajectory length must be at least 1".into()));
    }
    let n = p.dim();
    if sigma.shape() != (n, n) {
        return Err(Error::Shape(format!("noise covariance must be {n}x{n}")));
    }
    let chol = psd_factor(sigma)?;
    let k = phi.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // rows 0..k are the pre-sample
    let mut y = Mat::zeros(k + t_len, n);
    let mut z = nalgebra::DVector::<f64>::zeros(n);
    for t in k..k + t_len {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let mut row = &chol * &z;
        for (lag, ph) in phi.iter().enumerate() {
            let prev = y.row(t - lag - 1).transpose();
            row += ph * prev;
        }
        y.row_mut(t).copy_from(&row.transpose());
    }
    Ok(Trajectory {
        values: y.rows(k, t_len).into_owned(),
        noise_cov: sigma.clone(),
        seed,
        initial: y.rows(0, k).into_owned(),
    })
}

/// Variance-growth verdict for one multivariate series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthVerdict {
    /// Largest log-log variogram slope over the components.
    pub slope: f64,
    pub stationary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub threshold: f64,
    pub windows: Vec<usize>,
    /// Verdicts for `y, Delta y, ..., Delta^m y`.
    pub differences: Vec<GrowthVerdict>,
    /// Verdict for `P_m y_t`.
    pub cointegrated: GrowthVerdict,
    /// `Delta^m y` stationary and, for `m >= 1`, `Delta^{m-1} y` not.
    pub concordant: bool,
}

fn windows_for(t_len: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut w = 16;
    while w <= t_len / 4 {
        out.push(w);
        w *= 2;
    }
    if out.len() < 2 {
        out = vec![1, 2, 4].into_iter().filter(|&w| w < t_len).collect();
    }
    out
}

fn variogram(x: &[f64], w: usize) -> f64 {
    let k = x.len() - w;
    x.windows(w + 1).map(|s| (s[w] - s[0]).powi(2)).sum::<f64>() / k as f64
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Slopes of each component; components whose variogram is negligible next
/// to `reference` are treated as identically zero.
fn growth(series: &Mat, windows: &[usize], reference: f64) -> GrowthVerdict {
    let logw: Vec<f64> = windows.iter().map(|&w| (w as f64).ln()).collect();
    let mut slope = f64::NEG_INFINITY;
    for c in series.column_iter() {
        let x: Vec<f64> = c.iter().copied().collect();
        let v: Vec<f64> = windows.iter().map(|&w| variogram(&x, w)).collect();
        let top = v.iter().fold(0.0f64, |m, &x| m.max(x));
        let s = if top <= 1e-20 * reference || v.iter().any(|&x| x <= 0.0) {
            0.0
        } else {
            ols_slope(&logw, &v.iter().map(|x| x.ln()).collect::<Vec<_>>())
        };
        slope = slope.max(s);
    }
    if slope == f64::NEG_INFINITY {
        slope = 0.0;
    }
    GrowthVerdict {
        slope,
        stationary: slope < STATIONARY_SLOPE,
    }
}

fn difference(x: &Mat) -> Mat {
    let t = x.nrows();
    if t < 2 {
        return Mat::zeros(0, x.ncols());
    }
    x.rows(1, t - 1) - x.rows(0, t - 1)
}

/// Variogram-slope verdicts for `Delta^d y` with `d = 0..m` and for `P_m y_t`.
pub fn integration_diagnostics(
    traj: &Trajectory,
    m: usize,
    p_m: &Mat,
) -> Result<DiagnosticsReport> {
    let n = traj.values.ncols();
    if p_m.shape() != (n, n) {
        return Err(Error::Shape(format!("P_m must be {n}x{n}")));
    }
    if traj.len() < 64 + m {
        return Err(Error::Input("trajectory too short for diagnostics".into()));
    }
    let windows = windows_for(traj.len() - m);
    let wmax = *windows.last().expect("at least one window");
    let reference = traj
        .values
        .column_iter()
        .map(|c| variogram(&c.iter().copied().collect::<Vec<_>>(), wmax))
        .fold(0.0f64, f64::max);

    let mut differences = Vec::with_capacity(m + 1);
    let mut x = traj.values.clone();
    for d in 0..=m {
        if d > 0 {
            x = difference(&x);
        }
        differences.push(growth(&x, &windows, reference));
    }
    let py = &traj.values * p_m.transpose();
    let cointegrated = growth(&py, &windows, reference);
    let concordant = differences[m].stationary && (m == 0 || !differences[m - 1].stationary);
    Ok(DiagnosticsReport {
        threshold: STATIONARY_SLOPE,
        windows,
        differences,
        cointegrated,
        concordant,
    })
}
