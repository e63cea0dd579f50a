//! Real square matrix polynomials `A(z) = A_0 + A_1 z + ... + A_K z^K`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numla::{fro, Mat};

pub type CMat = DMatrix<Complex64>;

/// Lift a real matrix to complex entries.
pub fn complexify(m: &Mat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixPolynomial {
    coeffs: Vec<Mat>,
}

impl MatrixPolynomial {
    /// Build from `A_0..A_K`. Trailing zero coefficients are dropped so that
    /// the leading coefficient is nonzero unless the polynomial is constant.
    pub fn new(mut coeffs: Vec<Mat>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::Shape("at least one coefficient is required".into()))?;
        let n = first.nrows();
        if n == 0 {
            return Err(Error::Shape("dimension must be positive".into()));
        }
        for (k, a) in coeffs.iter().enumerate() {
            if a.shape() != (n, n) {
                return Err(Error::Shape(format!(
                    "coefficient {k} is {}x{}, expected {n}x{n}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::Input(format!(
                    "coefficient {k} has non-finite entries"
                )));
            }
        }
        while coeffs.len() > 1 && coeffs.last().is_some_and(|a| a.iter().all(|&x| x == 0.0)) {
            coeffs.pop();
        }
        Ok(MatrixPolynomial { coeffs })
    }

    /// `A(z) = I - sum_k A_k z^k` from VAR lag matrices `A_1..A_K`.
    pub fn from_var(lags: &[Mat]) -> Result<Self> {
        let n = lags
            .first()
            .ok_or_else(|| Error::Shape("a VAR needs at least one lag matrix".into()))?
            .nrows();
        let mut coeffs = Vec::with_capacity(lags.len() + 1);
        coeffs.push(Mat::identity(n, n));
        for (k, a) in lags.iter().enumerate() {
            if a.shape() != (n, n) {
                return Err(Error::Shape(format!(
                    "lag {} is {}x{}, expected {n}x{n}",
                    k + 1,
                    a.nrows(),
                    a.ncols()
                )));
            }
            coeffs.push(-a);
        }
        Self::new(coeffs)
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Mat] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Mat {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| Mat::zeros(self.dim(), self.dim()))
    }

    /// True when `A_0 = I`, i.e. the polynomial is in VAR form.
    pub fn is_var_form(&self) -> bool {
        let n = self.dim();
        self.coeffs[0] == Mat::identity(n, n)
    }

    /// Lag matrices `A_1..A_K` of the VAR form `I - sum A_k L^k`.
    pub fn var_lags(&self) -> Result<Vec<Mat>> {
        if !self.is_var_form() {
            return Err(Error::Input(
                "polynomial is not in VAR form (A_0 != I)".into(),
            ));
        }
        Ok(self.coeffs[1..].iter().map(|a| -a).collect())
    }

    /// Sum of coefficient Frobenius norms; the natural scale for roundoff in
    /// anything assembled from the coefficients.
    pub fn scale(&self) -> f64 {
        self.coeffs.iter().map(fro).sum()
    }

    /// Horner evaluation at a complex point.
    pub fn evaluate(&self, z: Complex64) -> CMat {
        let mut acc = complexify(self.coeffs.last().unwrap());
        for a in self.coeffs.iter().rev().skip(1) {
            acc *= z;
            acc += complexify(a);
        }
        acc
    }

    pub fn evaluate_real(&self, x: f64) -> Mat {
        let mut acc = self.coeffs.last().unwrap().clone();
        for a in self.coeffs.iter().rev().skip(1) {
            acc *= x;
            acc += a;
        }
        acc
    }

    /// `A^(k)`: the k-th derivative at `z = 1`, computed exactly from the
    /// coefficients.
    pub fn derivative_at_one(&self, k: usize) -> Mat {
        let n = self.dim();
        let mut out = Mat::zeros(n, n);
        for (j, a) in self.coeffs.iter().enumerate().skip(k) {
            out += a * falling_factorial(j, k);
        }
        out
    }

    /// Taylor coefficients `A^(k) / k!` about `z = 1` for `k = 0..K`.
    pub fn taylor_coeffs_at_one(&self) -> Vec<Mat> {
        let n = self.dim();
        (0..=self.degree())
            .map(|k| {
                let mut out = Mat::zeros(n, n);
                for (j, a) in self.coeffs.iter().enumerate().skip(k) {
                    out += a * binomial(j, k);
                }
                out
            })
            .collect()
    }

    /// Coefficients of the scalar polynomial `det A(z)`, lowest power first.
    pub fn det_coeffs(&self) -> Vec<f64> {
        if self.dim() <= 4 {
            self.det_coeffs_expanded()
        } else {
            self.det_coeffs_interpolated()
        }
    }

    /// Exact cofactor expansion over polynomial entries.
    pub fn det_coeffs_expanded(&self) -> Vec<f64> {
        let n = self.dim();
        let entries: Vec<Vec<Vec<f64>>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| self.coeffs.iter().map(|a| a[(i, j)]).collect())
                    .collect()
            })
            .collect();
        let cols: Vec<usize> = (0..n).collect();
        let mut c = cofactor_det(&entries, 0, &cols);
        c.resize(n * self.degree() + 1, 0.0);
        c
    }

    /// Interpolation of `det A(z)` at the roots of unity.
    pub fn det_coeffs_interpolated(&self) -> Vec<f64> {
        let d = self.dim() * self.degree();
        let count = d + 1;
        let values: Vec<Complex64> = (0..count)
            .map(|k| {
                let z = Complex64::from_polar(
                    1.0,
                    2.0 * std::f64::consts::PI * k as f64 / count as f64,
                );
                self.evaluate(z).determinant()
            })
            .collect();
        (0..count)
            .map(|j| {
                let mut s = Complex64::new(0.0, 0.0);
                for (k, v) in values.iter().enumerate() {
                    let ang = -2.0 * std::f64::consts::PI * ((j * k) % count) as f64 / count as f64;
                    s += v * Complex64::from_polar(1.0, ang);
                }
                s.re / count as f64
            })
            .collect()
    }

    /// Determinantal roots, the multiplicity of the unit root and the
    /// root-location premise.
    pub fn det_roots(&self, cluster_tol: f64, outside_margin: f64) -> Result<RootReport> {
        self.check_not_identically_singular()?;
        let mut c = self.det_coeffs();
        let cmax = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        // coefficients below roundoff of the largest one are roots at infinity
        while c.len() > 1 && c.last().unwrap().abs() <= 1e-11 * cmax {
            c.pop();
        }
        let ill_conditioned = c.len() > 1 && cmax / c.last().unwrap().abs() > 1e8;

        let mut mu = 0usize;
        while c.len() > 1 {
            let at_one: f64 = c.iter().sum();
            let size: f64 = c.iter().map(|x| x.abs()).sum();
            if at_one.abs() > cluster_tol * size {
                break;
            }
            c = deflate_at_one(&c);
            mu += 1;
        }

        let others = scalar_roots(&c);
        let mut near_one = 0usize;
        let mut rest = Vec::new();
        for z in others {
            if (z - Complex64::new(1.0, 0.0)).norm() <= cluster_tol {
                near_one += 1;
            } else {
                rest.push(z);
            }
        }
        mu += near_one;

        let mut roots = Vec::new();
        if mu > 0 {
            roots.push(Root {
                re: 1.0,
                im: 0.0,
                multiplicity: mu,
            });
        }
        roots.extend(cluster_roots(&rest, cluster_tol));

        let min_outside_modulus = rest
            .iter()
            .map(|z| z.norm())
            .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))));
        let nearest_other = rest
            .iter()
            .map(|z| (z - Complex64::new(1.0, 0.0)).norm())
            .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))));
        let premise_ok = rest.iter().all(|z| z.norm() > 1.0 + outside_margin);
        Ok(RootReport {
            roots,
            unit_root_multiplicity: mu,
            premise_ok,
            min_outside_modulus,
            nearest_other_distance: nearest_other,
            ill_conditioned,
        })
    }

    fn check_not_identically_singular(&self) -> Result<()> {
        let probes = [
            Complex64::new(0.3137, 0.7211),
            Complex64::new(-0.6173, 0.2029),
            Complex64::new(1.7071, -0.4142),
            Complex64::new(0.0421, -1.3333),
        ];
        let mut best = 0.0f64;
        for z in probes {
            let a = self.evaluate(z);
            let hadamard: f64 = a.column_iter().map(|c| c.norm()).product();
            if hadamard == 0.0 {
                continue;
            }
            best = best.max(a.determinant().norm() / hadamard);
        }
        if best < 1e-12 {
            return Err(Error::Degenerate("det A(z) vanishes identically".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    pub roots: Vec<Root>,
    pub unit_root_multiplicity: usize,
    pub premise_ok: bool,
    /// Smallest modulus among roots other than `z = 1`; `None` if there are none.
    pub min_outside_modulus: Option<f64>,
    pub nearest_other_distance: Option<f64>,
    /// Companion eigenproblem flagged as numerically unreliable.
    pub ill_conditioned: bool,
}

fn falling_factorial(j: usize, k: usize) -> f64 {
    (0..k).map(|i| (j - i) as f64).product()
}

fn binomial(j: usize, k: usize) -> f64 {
    if k > j {
        return 0.0;
    }
    let k = k.min(j - k);
    let mut out = 1.0;
    for i in 0..k {
        out = out * (j - i) as f64 / (i + 1) as f64;
    }
    out.round()
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add_scaled(acc: &mut Vec<f64>, p: &[f64], s: f64) {
    if acc.len() < p.len() {
        acc.resize(p.len(), 0.0);
    }
    for (a, x) in acc.iter_mut().zip(p) {
        *a += s * x;
    }
}

fn cofactor_det(entries: &[Vec<Vec<f64>>], row: usize, cols: &[usize]) -> Vec<f64> {
    if cols.len() == 1 {
        return entries[row][cols[0]].clone();
    }
    let mut acc = vec![0.0];
    for (pos, &c) in cols.iter().enumerate() {
        let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let minor = cofactor_det(entries, row + 1, &rest);
        let term = poly_mul(&entries[row][c], &minor);
        let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
        poly_add_scaled(&mut acc, &term, sign);
    }
    acc
}

/// Quotient of `p(z)` by `(z - 1)`, dropping the remainder.
fn deflate_at_one(p: &[f64]) -> Vec<f64> {
    let d = p.len() - 1;
    let mut q = vec![0.0; d];
    let mut carry = 0.0;
    for k in (1..=d).rev() {
        carry += p[k];
        q[k - 1] = carry;
    }
    q
}

/// Roots of a scalar polynomial via the eigenvalues of its companion matrix.
pub fn scalar_roots(p: &[f64]) -> Vec<Complex64> {
    let d = p.len().saturating_sub(1);
    if d == 0 {
        return Vec::new();
    }
    let lead = p[d];
    let mut comp = Mat::zeros(d, d);
    for i in 1..d {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..d {
        comp[(i, d - 1)] = -p[i] / lead;
    }
    let fc = faer::Mat::<f64>::from_fn(d, d, |i, j| comp[(i, j)]);
    fc.eigenvalues()
        .expect("companion eigenvalues did not converge")
}

fn cluster_roots(roots: &[Complex64], tol: f64) -> Vec<Root> {
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for &z in roots {
        match clusters
            .iter_mut()
            .find(|(c, _)| (*c - z).norm() <= tol.max(tol * z.norm()))
        {
            Some((c, k)) => {
                *c = (*c * *k as f64 + z) / (*k as f64 + 1.0);
                *k += 1;
            }
            None => clusters.push((z, 1)),
        }
    }
    clusters
        .into_iter()
        .map(|(c, k)| Root {
            re: c.re,
            im: c.im,
            multiplicity: k,
        })
        .collect()
}
