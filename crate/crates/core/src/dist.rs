//! Elementary distributions: scalar draws, α-stable variates and the
//! multivariate normal (sampling + exact log-density).

use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::rng::RngStream;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

const LN_2PI: f64 = 1.8378770664093453;

/// Standard normal via Marsaglia polar, one spare cached on the stream.
pub fn standard_gaussian(rng: &mut RngStream) -> f64 {
    if let Some(z) = rng.take_spare_gauss() {
        return z;
    }
    loop {
        let u = 2.0 * rng.next_f64() - 1.0;
        let v = 2.0 * rng.next_f64() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            let m = math::sqrt(-2.0 * math::ln(s) / s);
            rng.put_spare_gauss(v * m);
            return u * m;
        }
    }
}

pub fn gaussian(mu: f64, sigma: f64, rng: &mut RngStream) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParam(format!("gaussian sigma = {sigma}")));
    }
    Ok(mu + sigma * standard_gaussian(rng))
}

pub fn uniform(a: f64, b: f64, rng: &mut RngStream) -> Result<f64> {
    if !(a < b) {
        return Err(Error::InvalidParam(format!("uniform bounds ({a}, {b})")));
    }
    Ok(a + (b - a) * rng.next_f64())
}

/// Poisson draw: sequential inversion below λ = 30, PTRS transformed
/// rejection above. Both are exact.
pub fn poisson(lambda: f64, rng: &mut RngStream) -> Result<u64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParam(format!("poisson lambda = {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(0);
    }
    if lambda < 30.0 {
        let l = math::exp(-lambda);
        let mut k = 0u64;
        let mut p = 1.0;
        loop {
            p *= rng.next_f64();
            if p <= l {
                return Ok(k);
            }
            k += 1;
        }
    }
    Ok(poisson_ptrs(lambda, rng))
}

/// Hörmann's PTRS sampler, valid for λ ≥ 10.
fn poisson_ptrs(lambda: f64, rng: &mut RngStream) -> u64 {
    let slam = math::sqrt(lambda);
    let loglam = math::ln(lambda);
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.next_f64() - 0.5;
        let v = rng.next_open01();
        let us = 0.5 - math::abs(u);
        let k = math::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = math::ln(v * inv_alpha / (a / (us * us) + b));
        let rhs = -lambda + k * loglam - math::ln_gamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// α-stable parameter pair. `alpha = 2` is Gaussian with variance 2 in
/// the parametrization used here; `alpha = 1, beta = 0` is standard
/// Cauchy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableParams {
    alpha: f64,
    beta: f64,
}

impl StableParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidParam(format!("stable alpha = {alpha}")));
        }
        if !(-1.0..=1.0).contains(&beta) || !beta.is_finite() {
            return Err(Error::InvalidParam(format!("stable beta = {beta}")));
        }
        Ok(StableParams { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Standard stable variate by the Chambers–Mallows–Stuck transform in
/// the "1-parametrization" (unit scale, zero location). For β ≠ 0 the
/// law's location depends on the parametrization convention; results
/// for skewed fits are tied to this choice.
pub fn sample_stable(p: &StableParams, rng: &mut RngStream) -> f64 {
    let phi = PI * (rng.next_open01() - 0.5);
    let w = -math::ln(rng.next_open01());
    let alpha = p.alpha;
    let beta = p.beta;
    if alpha == 1.0 {
        let half_pi = PI / 2.0;
        let a = half_pi + beta * phi;
        let x = (a * math::tan(phi)
            - beta * math::ln((half_pi * w * math::cos(phi)) / a))
            / half_pi;
        return x;
    }
    let tan_term = beta * math::tan(PI * alpha / 2.0);
    let b = math::atan(tan_term) / alpha;
    let s = math::powf(1.0 + tan_term * tan_term, 1.0 / (2.0 * alpha));
    let cos_phi = math::cos(phi);
    s * math::sin(alpha * (phi + b)) / math::powf(cos_phi, 1.0 / alpha)
        * math::powf(math::cos(phi - alpha * (phi + b)) / w, (1.0 - alpha) / alpha)
}

/// Diagonal jitter ladder: start at `1e-10 * scale`, escalate tenfold up
/// to `1e-4 * scale`. `scale` is mean(diag), with an absolute fallback
/// for all-zero matrices.
pub(crate) fn jittered_cholesky(cov: &[f64], dim: usize) -> Result<(Vec<f64>, f64)> {
    let mut diag_mean = 0.0;
    for i in 0..dim {
        diag_mean += cov[i * dim + i];
    }
    diag_mean /= dim as f64;
    let scale = if diag_mean > 0.0 { diag_mean } else { 1.0 };

    if let Some(chol) = linalg::cholesky(cov, dim) {
        return Ok((chol, 0.0));
    }
    let mut jitter = 1e-10 * scale;
    let cap = 1e-4 * scale;
    while jitter <= cap * (1.0 + 1e-12) {
        let mut work = cov.to_vec();
        for i in 0..dim {
            work[i * dim + i] += jitter;
        }
        if let Some(chol) = linalg::cholesky(&work, dim) {
            return Ok((chol, jitter));
        }
        jitter *= 10.0;
    }
    Err(Error::NotPositiveDefinite {
        dim,
        matrix: cov.to_vec(),
    })
}

/// Multivariate normal with a cached lower-triangular factor.
#[derive(Debug, Clone)]
pub struct Mvn {
    mean: Vec<f64>,
    chol: Vec<f64>,
    log_det: f64,
    dim: usize,
}

impl Mvn {
    /// `cov` is row-major `dim × dim`; it is symmetrized, then factored
    /// under the jitter policy.
    pub fn new(mean: Vec<f64>, cov: &[f64]) -> Result<Self> {
        let dim = mean.len();
        if cov.len() != dim * dim {
            return Err(Error::Dimension {
                expected: dim * dim,
                got: cov.len(),
            });
        }
        let mut sym = cov.to_vec();
        linalg::symmetrize(&mut sym, dim);
        let (chol, _) = jittered_cholesky(&sym, dim)?;
        let mut log_det = 0.0;
        for i in 0..dim {
            log_det += math::ln(chol[i * dim + i]);
        }
        log_det *= 2.0;
        Ok(Mvn {
            mean,
            chol,
            log_det,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        let mut x = self.mean.clone();
        let z: Vec<f64> = (0..self.dim).map(|_| standard_gaussian(rng)).collect();
        for i in 0..self.dim {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += self.chol[i * self.dim + j] * z[j];
            }
            x[i] += acc;
        }
        x
    }

    /// Exact log-density (normalizing constant included).
    pub fn logpdf(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut diff: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        linalg::forward_substitute(&self.chol, self.dim, &mut diff);
        let quad: f64 = diff.iter().map(|v| v * v).sum();
        -0.5 * (self.dim as f64 * LN_2PI + self.log_det + quad)
    }

    /// Log-density of a random-walk step `x` centered at `at` (same factor).
    pub fn logpdf_centered(&self, x: &[f64], at: &[f64]) -> f64 {
        let mut diff: Vec<f64> = x.iter().zip(at).map(|(a, b)| a - b).collect();
        linalg::forward_substitute(&self.chol, self.dim, &mut diff);
        let quad: f64 = diff.iter().map(|v| v * v).sum();
        -0.5 * (self.dim as f64 * LN_2PI + self.log_det + quad)
    }

    /// Sample a random-walk step centered at `at`.
    pub fn sample_centered(&self, at: &[f64], rng: &mut RngStream) -> Vec<f64> {
        let mut x = at.to_vec();
        let z: Vec<f64> = (0..self.dim).map(|_| standard_gaussian(rng)).collect();
        for i in 0..self.dim {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += self.chol[i * self.dim + j] * z[j];
            }
            x[i] += acc;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn gaussian_mean_of_million_draws() {
        let mut rng = RngStream::new(11, 2);
        let n = 1_000_000;
        let mean = (0..n)
            .map(|_| gaussian(0.0, 1.0, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!(mean > -0.01 && mean < 0.01, "mean = {mean}");
    }

    #[test]
    fn poisson_zero_lambda_is_degenerate() {
        let mut rng = RngStream::new(3, 0);
        for _ in 0..100 {
            assert_eq!(poisson(0.0, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn poisson_moments_across_regimes() {
        let mut rng = RngStream::new(5, 0);
        for &lam in &[0.5, 4.0, 25.0, 60.0, 300.0] {
            let n = 200_000;
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..n {
                let k = poisson(lam, &mut rng).unwrap() as f64;
                sum += k;
                sumsq += k * k;
            }
            let mean = sum / n as f64;
            let var = sumsq / n as f64 - mean * mean;
            assert!((mean - lam).abs() < 5.0 * (lam / n as f64).sqrt() + 1e-3);
            assert!((var - lam).abs() / lam < 0.05, "lam={lam} var={var}");
        }
    }

    #[test]
    fn uniform_respects_bounds() {
        let mut rng = RngStream::new(7, 0);
        for _ in 0..10_000 {
            let u = uniform(-2.3, 0.0, &mut rng).unwrap();
            assert!((-2.3..0.0).contains(&u));
        }
        assert!(uniform(1.0, 1.0, &mut rng).is_err());
        assert!(gaussian(0.0, 0.0, &mut rng).is_err());
        assert!(poisson(-1.0, &mut rng).is_err());
    }

    #[test]
    fn stable_alpha2_variance_is_two() {
        let p = StableParams::new(2.0, 0.3).unwrap();
        let mut rng = RngStream::new(17, 0);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let x = sample_stable(&p, &mut rng);
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!((var - 2.0).abs() / 2.0 < 0.05, "var = {var}");
    }

    #[test]
    fn stable_cauchy_quartiles() {
        // quartiles of the standard Cauchy are ±1 (tan(±π/4))
        let p = StableParams::new(1.0, 0.0).unwrap();
        let mut rng = RngStream::new(19, 0);
        let n = 1_000_000;
        let mut xs: Vec<f64> = (0..n).map(|_| sample_stable(&p, &mut rng)).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q1 = xs[n / 4];
        let q3 = xs[3 * n / 4];
        assert!((q1 + 1.0).abs() < 0.02, "q1 = {q1}");
        assert!((q3 - 1.0).abs() < 0.02, "q3 = {q3}");
    }

    #[test]
    fn stable_skewed_draws_stay_finite() {
        let p = StableParams::new(1.8, -1.0).unwrap();
        let mut rng = RngStream::new(23, 0);
        for _ in 0..1_000_000 {
            let x = sample_stable(&p, &mut rng);
            assert!(x.is_finite());
        }
    }

    #[test]
    fn stable_rejects_bad_params() {
        assert!(StableParams::new(0.0, 0.0).is_err());
        assert!(StableParams::new(2.1, 0.0).is_err());
        assert!(StableParams::new(1.5, -1.01).is_err());
    }

    #[test]
    fn mvn_logpdf_at_standard_mode() {
        let mvn = Mvn::new(vec![0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let expected = -(2.0 * PI).ln();
        assert!((mvn.logpdf(&[0.0, 0.0]) - expected).abs() < 1e-12);
    }

    #[test]
    fn mvn_sample_covariance_recovers_target() {
        let cov = [2.0, 1.0, 1.0, 2.0];
        let mvn = Mvn::new(vec![0.5, -0.5], &cov).unwrap();
        let mut rng = RngStream::new(29, 0);
        let n = 100_000;
        let mut sums = [0.0f64; 2];
        let mut prods = [0.0f64; 4];
        for _ in 0..n {
            let x = mvn.sample(&mut rng);
            sums[0] += x[0];
            sums[1] += x[1];
            for i in 0..2 {
                for j in 0..2 {
                    prods[i * 2 + j] += x[i] * x[j];
                }
            }
        }
        let m = [sums[0] / n as f64, sums[1] / n as f64];
        let mut frob = 0.0;
        let mut base = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let c = prods[i * 2 + j] / n as f64 - m[i] * m[j];
                frob += (c - cov[i * 2 + j]) * (c - cov[i * 2 + j]);
                base += cov[i * 2 + j] * cov[i * 2 + j];
            }
        }
        assert!(frob.sqrt() / base.sqrt() < 0.05);
    }

    /// Dense-inverse oracle for the MVN log-density, kept independent of
    /// the Cholesky path: Gauss-Jordan inverse and LU determinant.
    fn dense_logpdf_oracle(x: &[f64], mean: &[f64], cov: &[f64], n: usize) -> f64 {
        // Gauss-Jordan inverse
        let mut aug = vec![0.0; n * 2 * n];
        for i in 0..n {
            for j in 0..n {
                aug[i * 2 * n + j] = cov[i * n + j];
            }
            aug[i * 2 * n + n + i] = 1.0;
        }
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if aug[r * 2 * n + col].abs() > aug[piv * 2 * n + col].abs() {
                    piv = r;
                }
            }
            for k in 0..2 * n {
                aug.swap(col * 2 * n + k, piv * 2 * n + k);
            }
            let d = aug[col * 2 * n + col];
            for k in 0..2 * n {
                aug[col * 2 * n + k] /= d;
            }
            for r in 0..n {
                if r != col {
                    let f = aug[r * 2 * n + col];
                    for k in 0..2 * n {
                        aug[r * 2 * n + k] -= f * aug[col * 2 * n + k];
                    }
                }
            }
        }
        // determinant by LU (fresh copy)
        let mut lu = cov.to_vec();
        let mut det = 1.0;
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if lu[r * n + col].abs() > lu[piv * n + col].abs() {
                    piv = r;
                }
            }
            if piv != col {
                for k in 0..n {
                    lu.swap(col * n + k, piv * n + k);
                }
                det = -det;
            }
            det *= lu[col * n + col];
            for r in col + 1..n {
                let f = lu[r * n + col] / lu[col * n + col];
                for k in col..n {
                    lu[r * n + k] -= f * lu[col * n + k];
                }
            }
        }
        let diff: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += diff[i] * aug[i * 2 * n + n + j] * diff[j];
            }
        }
        -0.5 * (n as f64 * LN_2PI + det.ln() + quad)
    }

    #[test]
    fn mvn_logpdf_matches_dense_inverse_oracle() {
        let n = 5;
        let mut rng = RngStream::new(31, 0);
        for _ in 0..20 {
            // random SPD: B Bᵀ + I
            let b: Vec<f64> = (0..n * n).map(|_| standard_gaussian(&mut rng)).collect();
            let mut cov = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += b[i * n + k] * b[j * n + k];
                    }
                    cov[i * n + j] = acc + if i == j { 1.0 } else { 0.0 };
                }
            }
            let mean: Vec<f64> = (0..n).map(|_| standard_gaussian(&mut rng)).collect();
            let x: Vec<f64> = (0..n).map(|_| standard_gaussian(&mut rng)).collect();
            let mvn = Mvn::new(mean.clone(), &cov).unwrap();
            let got = mvn.logpdf(&x);
            let want = dense_logpdf_oracle(&x, &mean, &cov, n);
            assert!((got - want).abs() < 1e-10, "got {got}, want {want}");
        }
    }

    #[test]
    fn mvn_logpdf_invariant_under_coordinate_permutation() {
        let mean = vec![0.3, -1.0, 2.0];
        let cov = vec![2.0, 0.5, 0.2, 0.5, 1.5, 0.1, 0.2, 0.1, 1.0];
        let x = vec![0.1, 0.2, -0.4];
        let perm = [2usize, 0, 1];
        let pmean: Vec<f64> = perm.iter().map(|&i| mean[i]).collect();
        let px: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
        let mut pcov = vec![0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                pcov[i * 3 + j] = cov[perm[i] * 3 + perm[j]];
            }
        }
        let a = Mvn::new(mean, &cov).unwrap().logpdf(&x);
        let b = Mvn::new(pmean, &pcov).unwrap().logpdf(&px);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn jitter_handles_singular_and_zero_matrices() {
        // rank-1 matrix: needs jitter but must succeed
        let cov = [1.0, 1.0, 1.0, 1.0];
        let (_, jitter) = jittered_cholesky(&cov, 2).unwrap();
        assert!(jitter > 0.0);
        // all-zero covariance: absolute fallback scale
        let zero = [0.0; 4];
        assert!(jittered_cholesky(&zero, 2).is_ok());
        // genuinely indefinite matrix fails with the matrix reported
        let indef = [1.0, 2.0, 2.0, 1.0];
        match jittered_cholesky(&indef, 2) {
            Err(Error::NotPositiveDefinite { dim, matrix }) => {
                assert_eq!(dim, 2);
                assert_eq!(matrix, indef.to_vec());
            }
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }
}
