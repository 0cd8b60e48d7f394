//! Efficiency and accuracy diagnostics: autocorrelation time, effective
//! sample size, kernel density estimation, total-variation distance, and
//! the replicate-study summary metrics.

use crate::error::{Error, Result};
use crate::math;
use crate::models::stats::quantile_sorted;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy)]
pub struct ActEss {
    pub act: f64,
    pub ess: f64,
    pub ess_per_cpu: f64,
}

/// ACT = 1 + 2 Σ ρ_a, summing lags up to (excluding) the first negative
/// autocorrelation; a negative ρ₁ gives ACT = 1 and a zero-variance
/// chain gives ACT = ∞ (ESS = 0). ESS = len / ACT.
pub fn act_ess(x: &[f64], cpu_seconds: f64) -> Result<ActEss> {
    let n = x.len();
    if n < 10 {
        return Err(Error::Data(format!(
            "autocorrelation time needs at least 10 points, got {n}"
        )));
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let var: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return Ok(ActEss {
            act: f64::INFINITY,
            ess: 0.0,
            ess_per_cpu: 0.0,
        });
    }
    let mut act = 1.0;
    for lag in 1..n {
        let mut acc = 0.0;
        for i in 0..n - lag {
            acc += (x[i] - mean) * (x[i + lag] - mean);
        }
        let rho = acc / (n as f64 * var);
        if rho < 0.0 {
            break;
        }
        act += 2.0 * rho;
    }
    let ess = n as f64 / act;
    Ok(ActEss {
        act,
        ess,
        ess_per_cpu: if cpu_seconds > 0.0 { ess / cpu_seconds } else { 0.0 },
    })
}

/// Gaussian kernel density estimate on an explicit grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub degenerate: bool,
}

impl KdeCurve {
    /// Trapezoid integral of the curve.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }
}

fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..grid.len() {
        acc += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
    }
    acc
}

/// Silverman bandwidth 0.9 min(sd, IQR/1.34) n^{−1/5}; zero pieces fall
/// back to the other, and a fully degenerate sample returns 0.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = math::sqrt(samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0));
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let scale = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        _ => 0.0,
    };
    0.9 * scale * math::powf(n, -0.2)
}

/// KDE with Silverman bandwidth on a grid spanning the sample range
/// padded by three bandwidths.
pub fn kde(samples: &[f64], grid_size: usize) -> Result<KdeCurve> {
    if samples.len() < 30 {
        return Err(Error::Data(format!(
            "kernel density estimation needs at least 30 samples, got {}",
            samples.len()
        )));
    }
    if grid_size < 2 {
        return Err(Error::InvalidParam("grid needs at least 2 points".into()));
    }
    let bw = silverman_bandwidth(samples);
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if bw <= 0.0 {
        // constant sample: a spike of unit mass at the constant
        let center = samples[0];
        let grid: Vec<f64> = (0..grid_size)
            .map(|i| center - 1.0 + 2.0 * i as f64 / (grid_size - 1) as f64)
            .collect();
        let step = grid[1] - grid[0];
        let mut density = vec![0.0; grid_size];
        density[grid_size / 2] = 1.0 / step;
        return Ok(KdeCurve {
            grid,
            density,
            degenerate: true,
        });
    }
    let grid: Vec<f64> = (0..grid_size)
        .map(|i| lo - 3.0 * bw + (hi - lo + 6.0 * bw) * i as f64 / (grid_size - 1) as f64)
        .collect();
    let density = kde_density_on(samples, bw, &grid);
    Ok(KdeCurve {
        grid,
        density,
        degenerate: false,
    })
}

/// KDE with Silverman bandwidth evaluated on a caller-supplied grid.
pub fn kde_on_grid(samples: &[f64], grid: &[f64]) -> Result<KdeCurve> {
    if samples.is_empty() || grid.len() < 2 {
        return Err(Error::Data("kde needs samples and a grid".into()));
    }
    let bw = silverman_bandwidth(samples);
    if bw <= 0.0 {
        let mut density = vec![0.0; grid.len()];
        // place the unit spike at the grid point nearest the constant
        let c = samples[0];
        let mut best = 0usize;
        for (i, g) in grid.iter().enumerate() {
            if (g - c).abs() < (grid[best] - c).abs() {
                best = i;
            }
        }
        let step = grid[1] - grid[0];
        density[best] = 1.0 / step;
        return Ok(KdeCurve {
            grid: grid.to_vec(),
            density,
            degenerate: true,
        });
    }
    Ok(KdeCurve {
        grid: grid.to_vec(),
        density: kde_density_on(samples, bw, grid),
        degenerate: false,
    })
}

fn kde_density_on(samples: &[f64], bw: f64, grid: &[f64]) -> Vec<f64> {
    let norm = 1.0 / (samples.len() as f64 * bw * math::sqrt(2.0 * core::f64::consts::PI));
    grid.iter()
        .map(|&g| {
            let mut acc = 0.0;
            for &x in samples {
                let z = (g - x) / bw;
                if z.abs() < 8.0 {
                    acc += math::exp(-0.5 * z * z);
                }
            }
            acc * norm
        })
        .collect()
}

/// Total variation distance 0.5 ∫ |a − b| between two curves sharing a
/// grid.
pub fn tv_distance(a: &KdeCurve, b: &KdeCurve) -> Result<f64> {
    if a.grid.len() != b.grid.len()
        || a.grid
            .iter()
            .zip(&b.grid)
            .any(|(x, y)| (x - y).abs() > 1e-12)
    {
        return Err(Error::InvalidParam(
            "total variation needs curves on a common grid".into(),
        ));
    }
    let diff: Vec<f64> = a
        .density
        .iter()
        .zip(&b.density)
        .map(|(x, y)| math::abs(x - y))
        .collect();
    Ok(0.5 * trapezoid(&a.grid, &diff))
}

/// Default common-grid resolution for sample-based TV.
pub const TV_GRID: usize = 512;

/// TV between two sample sets: both KDEs evaluated on one grid covering
/// the union range.
pub fn tv_between_samples(xs: &[f64], ys: &[f64], grid_size: usize) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::Data("empty sample set".into()));
    }
    let bw = silverman_bandwidth(xs)
        .max(silverman_bandwidth(ys))
        .max(1e-12);
    let lo = xs.iter().chain(ys).cloned().fold(f64::INFINITY, f64::min) - 3.0 * bw;
    let hi = xs
        .iter()
        .chain(ys)
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
        + 3.0 * bw;
    let grid: Vec<f64> = (0..grid_size)
        .map(|i| lo + (hi - lo) * i as f64 / (grid_size - 1) as f64)
        .collect();
    tv_distance(&kde_on_grid(xs, &grid)?, &kde_on_grid(ys, &grid)?)
}

/// One replicate's posterior sample (post-burn-in draws, flat row-major)
/// with its CPU cost. Particle samplers carry their own effective-size
/// figure instead of an autocorrelation-based one.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub dim: usize,
    pub rows: usize,
    pub draws: Vec<f64>,
    pub cpu_seconds: f64,
    pub ess_override: Option<f64>,
}

impl SampleSet {
    pub fn component(&self, s: usize) -> Vec<f64> {
        (0..self.rows)
            .map(|t| self.draws[t * self.dim + s])
            .collect()
    }

    fn comp_mean(&self, s: usize) -> f64 {
        (0..self.rows)
            .map(|t| self.draws[t * self.dim + s])
            .sum::<f64>()
            / self.rows as f64
    }

    fn comp_var(&self, s: usize) -> f64 {
        let m = self.comp_mean(s);
        (0..self.rows)
            .map(|t| {
                let d = self.draws[t * self.dim + s] - m;
                d * d
            })
            .sum::<f64>()
            / (self.rows as f64 - 1.0)
    }
}

/// The replicate-study summary for one sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerMetrics {
    pub diff_mean: f64,
    pub diff_cov: f64,
    pub tv: f64,
    pub sqrt_bias2: f64,
    pub sqrt_var: f64,
    pub sqrt_mse: f64,
    pub ess: f64,
    pub ess_per_cpu: f64,
}

/// Accuracy/efficiency metrics of `approx` against the reference sets
/// and the true parameter, averaged over replicates and components:
/// mean/variance gaps and TV against the reference, squared bias and
/// replicate variance of the posterior means against the truth, and
/// autocorrelation-based effective sample sizes.
pub fn compare_stats(
    approx: &[SampleSet],
    exact: &[SampleSet],
    truth: &[f64],
) -> Result<SamplerMetrics> {
    let r = approx.len();
    if r < 2 {
        return Err(Error::Data(
            "replicate variance needs at least 2 replicates".into(),
        ));
    }
    if exact.len() != r {
        return Err(Error::Dimension {
            expected: r,
            got: exact.len(),
        });
    }
    let q = truth.len();
    if approx.iter().chain(exact).any(|s| s.dim != q) {
        return Err(Error::Data("component count mismatch".into()));
    }

    let mut diff_mean = 0.0;
    let mut diff_cov = 0.0;
    let mut tv_acc = 0.0;
    let mut ess_acc = 0.0;
    let mut ess_cpu_acc = 0.0;
    let mut grand_mean = vec![0.0; q];
    let mut rep_means = vec![0.0; r * q];

    for (ri, (a, e)) in approx.iter().zip(exact).enumerate() {
        for s in 0..q {
            let am = a.comp_mean(s);
            let em = e.comp_mean(s);
            diff_mean += math::abs(am - em);
            diff_cov += math::abs(a.comp_var(s) - e.comp_var(s));
            tv_acc += tv_between_samples(&a.component(s), &e.component(s), TV_GRID)?;
            grand_mean[s] += am;
            rep_means[ri * q + s] = am;
            let (ess, ess_cpu) = match a.ess_override {
                Some(k) => (
                    k,
                    if a.cpu_seconds > 0.0 {
                        k / a.cpu_seconds
                    } else {
                        0.0
                    },
                ),
                None => {
                    let d = act_ess(&a.component(s), a.cpu_seconds)?;
                    (d.ess, d.ess_per_cpu)
                }
            };
            ess_acc += ess;
            ess_cpu_acc += ess_cpu;
        }
    }
    let cells = (r * q) as f64;
    diff_mean /= cells;
    diff_cov /= cells;
    tv_acc /= cells;
    ess_acc /= cells;
    ess_cpu_acc /= cells;

    // Bias² = Mean_s((Mean_{t,r} − truth)²); VAR = Mean_s(Var_r(Mean_t))
    let mut bias2 = 0.0;
    let mut var = 0.0;
    for s in 0..q {
        let gm = grand_mean[s] / r as f64;
        bias2 += (gm - truth[s]) * (gm - truth[s]);
        let v = (0..r)
            .map(|ri| {
                let d = rep_means[ri * q + s] - gm;
                d * d
            })
            .sum::<f64>()
            / (r as f64 - 1.0);
        var += v;
    }
    bias2 /= q as f64;
    var /= q as f64;

    Ok(SamplerMetrics {
        diff_mean,
        diff_cov,
        tv: tv_acc,
        sqrt_bias2: math::sqrt(bias2),
        sqrt_var: math::sqrt(var),
        sqrt_mse: math::sqrt(bias2 + var),
        ess: ess_acc,
        ess_per_cpu: ess_cpu_acc,
    })
}

/// A study row: a sampler's metrics or the failure that produced none.
#[derive(Debug, Clone)]
pub struct StudyRow {
    pub sampler: String,
    pub outcome: core::result::Result<SamplerMetrics, String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::standard_gaussian;
    use crate::rng::RngStream;

    #[test]
    fn act_of_iid_sequence_is_near_one() {
        let mut rng = RngStream::new(1000, 0);
        let x: Vec<f64> = (0..100_000).map(|_| standard_gaussian(&mut rng)).collect();
        let d = act_ess(&x, 1.0).unwrap();
        assert!((0.8..1.2).contains(&d.act), "ACT = {}", d.act);
        assert!((0.8e5..1.2e5).contains(&d.ess), "ESS = {}", d.ess);
    }

    #[test]
    fn act_of_ar1_matches_closed_form() {
        // AR(1): ACT = (1+ρ)/(1−ρ) = 19 at ρ = 0.9
        let mut rng = RngStream::new(1001, 0);
        let rho: f64 = 0.9;
        let scale = (1.0 - rho * rho).sqrt();
        let mut x = Vec::with_capacity(1_000_000);
        let mut cur = 0.0;
        for _ in 0..1_000_000 {
            cur = rho * cur + scale * standard_gaussian(&mut rng);
            x.push(cur);
        }
        let d = act_ess(&x, 1.0).unwrap();
        let want = (1.0 + rho) / (1.0 - rho);
        assert!(
            (d.act - want).abs() / want < 0.15,
            "ACT = {} vs {}",
            d.act,
            want
        );
    }

    #[test]
    fn act_of_constant_chain_gives_zero_ess() {
        let x = vec![2.0; 100];
        let d = act_ess(&x, 1.0).unwrap();
        assert!(d.act.is_infinite());
        assert_eq!(d.ess, 0.0);
    }

    #[test]
    fn ess_invariant_under_affine_maps() {
        let mut rng = RngStream::new(1002, 0);
        let rho: f64 = 0.5;
        let mut x = Vec::with_capacity(50_000);
        let mut cur = 0.0;
        for _ in 0..50_000 {
            cur = rho * cur + standard_gaussian(&mut rng);
            x.push(cur);
        }
        let y: Vec<f64> = x.iter().map(|v| -7.0 * v + 3.0).collect();
        let a = act_ess(&x, 1.0).unwrap();
        let b = act_ess(&y, 1.0).unwrap();
        assert!((a.ess - b.ess).abs() / a.ess < 1e-9);
    }

    #[test]
    fn kde_matches_standard_normal_at_mode() {
        let mut rng = RngStream::new(1003, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| standard_gaussian(&mut rng)).collect();
        let curve = kde(&xs, 512).unwrap();
        let (mut best, mut bd) = (0usize, f64::INFINITY);
        for (i, g) in curve.grid.iter().enumerate() {
            if g.abs() < bd {
                bd = g.abs();
                best = i;
            }
        }
        let phi0 = 0.3989422804014327;
        assert!(
            (curve.density[best] - phi0).abs() / phi0 < 0.10,
            "kde(0) = {}",
            curve.density[best]
        );
        let integral = curve.integral();
        assert!((0.99..1.01).contains(&integral), "integral {integral}");
    }

    #[test]
    fn kde_symmetric_inputs_give_symmetric_curve() {
        let mut rng = RngStream::new(1004, 0);
        let mut xs = Vec::with_capacity(40_000);
        for _ in 0..20_000 {
            let v = standard_gaussian(&mut rng);
            xs.push(v);
            xs.push(-v);
        }
        let curve = kde(&xs, 513).unwrap();
        let n = curve.grid.len();
        for i in 0..n / 4 {
            let a = curve.density[i];
            let b = curve.density[n - 1 - i];
            assert!((a - b).abs() < 0.01, "asymmetry at {i}: {a} vs {b}");
        }
    }

    #[test]
    fn kde_degenerate_sample_is_flagged_spike() {
        let xs = vec![1.5; 100];
        let curve = kde(&xs, 101).unwrap();
        assert!(curve.degenerate);
        let integral = curve.integral();
        assert!((0.9..1.1).contains(&integral));
    }

    #[test]
    fn tv_is_zero_on_self_and_one_for_disjoint() {
        let mut rng = RngStream::new(1005, 0);
        let xs: Vec<f64> = (0..5000).map(|_| standard_gaussian(&mut rng)).collect();
        let curve = kde(&xs, 256).unwrap();
        assert_eq!(tv_distance(&curve, &curve).unwrap(), 0.0);
        let ys: Vec<f64> = xs.iter().map(|v| v + 50.0).collect();
        let tv = tv_between_samples(&xs, &ys, TV_GRID).unwrap();
        assert!(tv > 0.99 && tv < 1.0 + 1e-6, "tv = {tv}");
    }

    #[test]
    fn tv_of_unit_shift_matches_closed_form() {
        // TV(N(0,1), N(1,1)) = 2Φ(1/2) − 1 ≈ 0.3829
        let mut rng = RngStream::new(1006, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| standard_gaussian(&mut rng)).collect();
        let ys: Vec<f64> = (0..100_000)
            .map(|_| standard_gaussian(&mut rng) + 1.0)
            .collect();
        let tv = tv_between_samples(&xs, &ys, TV_GRID).unwrap();
        let want = 2.0 * math::normal_cdf(0.5) - 1.0;
        assert!((tv - want).abs() < 0.02, "tv = {tv} vs {want}");
    }

    #[test]
    fn tv_symmetry_and_triangle_inequality() {
        let mut rng = RngStream::new(1007, 0);
        let base: Vec<f64> = (0..4000).map(|_| standard_gaussian(&mut rng)).collect();
        let shift1: Vec<f64> = base.iter().map(|v| v + 0.7).collect();
        let shift2: Vec<f64> = base.iter().map(|v| v * 1.5 - 0.2).collect();
        let lo = -8.0;
        let hi = 8.0;
        let grid: Vec<f64> = (0..TV_GRID)
            .map(|i| lo + (hi - lo) * i as f64 / (TV_GRID - 1) as f64)
            .collect();
        let a = kde_on_grid(&base, &grid).unwrap();
        let b = kde_on_grid(&shift1, &grid).unwrap();
        let c = kde_on_grid(&shift2, &grid).unwrap();
        let ab = tv_distance(&a, &b).unwrap();
        let ba = tv_distance(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-12);
        let ac = tv_distance(&a, &c).unwrap();
        let cb = tv_distance(&c, &b).unwrap();
        assert!(ab <= ac + cb + 1e-9);
    }

    fn set_from(draws: Vec<f64>, dim: usize, cpu: f64) -> SampleSet {
        let rows = draws.len() / dim;
        SampleSet {
            dim,
            rows,
            draws,
            cpu_seconds: cpu,
            ess_override: None,
        }
    }

    #[test]
    fn compare_stats_identical_sets_vanish() {
        let mut rng = RngStream::new(1008, 0);
        let reps: Vec<SampleSet> = (0..3)
            .map(|_| {
                let draws: Vec<f64> = (0..2000).map(|_| standard_gaussian(&mut rng)).collect();
                set_from(draws, 1, 1.0)
            })
            .collect();
        let m = compare_stats(&reps, &reps, &[0.0]).unwrap();
        assert_eq!(m.diff_mean, 0.0);
        assert_eq!(m.diff_cov, 0.0);
        assert_eq!(m.tv, 0.0);
    }

    #[test]
    fn compare_stats_two_replicate_arithmetic() {
        // single-component chains with means 1 and 3, truth 2:
        // Bias² = 0, VAR = 2, MSE = 2
        let a1 = set_from(vec![1.0; 100], 1, 1.0);
        let a2 = set_from(vec![3.0; 100], 1, 1.0);
        let m = compare_stats(
            &[a1.clone(), a2.clone()],
            &[a1.clone(), a2.clone()],
            &[2.0],
        )
        .unwrap();
        assert!(m.sqrt_bias2.abs() < 1e-12);
        assert!((m.sqrt_var - 2.0f64.sqrt()).abs() < 1e-12);
        assert!((m.sqrt_mse - 2.0f64.sqrt()).abs() < 1e-12);
        assert!(compare_stats(&[a1], &[a2], &[2.0]).is_err());
    }

    #[test]
    fn compare_stats_matches_from_scratch_oracle() {
        let mut rng = RngStream::new(1009, 0);
        let q = 2;
        let r = 4;
        let make = |rng: &mut RngStream, shift: f64| -> Vec<SampleSet> {
            (0..r)
                .map(|_| {
                    let draws: Vec<f64> = (0..300 * q)
                        .map(|_| standard_gaussian(rng) + shift)
                        .collect();
                    set_from(draws, q, 2.0)
                })
                .collect()
        };
        let approx = make(&mut rng, 0.3);
        let exact = make(&mut rng, 0.0);
        let truth = [0.1, -0.2];
        let got = compare_stats(&approx, &exact, &truth).unwrap();

        // independent reimplementation of the formulas
        let mean_of = |s: &SampleSet, c: usize| -> f64 {
            (0..s.rows).map(|t| s.draws[t * q + c]).sum::<f64>() / s.rows as f64
        };
        let var_of = |s: &SampleSet, c: usize| -> f64 {
            let m = mean_of(s, c);
            (0..s.rows)
                .map(|t| (s.draws[t * q + c] - m) * (s.draws[t * q + c] - m))
                .sum::<f64>()
                / (s.rows as f64 - 1.0)
        };
        let mut dim_acc = 0.0;
        let mut dic_acc = 0.0;
        for ri in 0..r {
            for c in 0..q {
                dim_acc += (mean_of(&approx[ri], c) - mean_of(&exact[ri], c)).abs();
                dic_acc += (var_of(&approx[ri], c) - var_of(&exact[ri], c)).abs();
            }
        }
        dim_acc /= (r * q) as f64;
        dic_acc /= (r * q) as f64;
        assert!((got.diff_mean - dim_acc).abs() < 1e-12);
        assert!((got.diff_cov - dic_acc).abs() < 1e-12);

        let mut bias2 = 0.0;
        let mut var = 0.0;
        for c in 0..q {
            let means: Vec<f64> = (0..r).map(|ri| mean_of(&approx[ri], c)).collect();
            let gm = means.iter().sum::<f64>() / r as f64;
            bias2 += (gm - truth[c]) * (gm - truth[c]);
            var += means.iter().map(|m| (m - gm) * (m - gm)).sum::<f64>() / (r as f64 - 1.0);
        }
        bias2 /= q as f64;
        var /= q as f64;
        assert!((got.sqrt_bias2 - bias2.sqrt()).abs() < 1e-12);
        assert!((got.sqrt_var - var.sqrt()).abs() < 1e-12);
        assert!((got.sqrt_mse - (bias2 + var).sqrt()).abs() < 1e-12);
    }
}
