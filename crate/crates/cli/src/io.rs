//! File formats: dataset/summary/chain/study CSVs, metric and schedule
//! JSON, history snapshots, run manifests. All writers are deterministic
//! byte-for-byte given identical inputs.

use lfi_core::calibration::{DiscrepancyMetric, EpsilonSchedule};
use lfi_core::history::{AbcHistory, BslHistory};
use lfi_core::samplers::{ChainOutput, ParticleSet};
use lfi_core::diagnostics::StudyRow;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use crate::CliError;

pub fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(runtime)?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// FNV-1a 64 content hash, hex encoded; manifests use it to pin inputs.
pub fn fnv64_hex(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

// ---- datasets -----------------------------------------------------------

pub fn write_dataset_csv(path: &Path, y: &[f64]) -> Result<(), CliError> {
    let mut s = String::from("y\n");
    for v in y {
        s.push_str(&format!("{v}\n"));
    }
    write_atomic(path, s.as_bytes())
}

/// Accepts the single-column `y` format or a `date,y`-style file whose
/// last column is the value.
pub fn read_dataset_csv(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read dataset {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Usage(format!("{}: empty dataset", path.display())))?;
    let value_col = header.split(',').count() - 1;
    let mut y = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let field = line
            .split(',')
            .nth(value_col)
            .ok_or_else(|| CliError::Usage(format!("{}: short row {}", path.display(), i + 2)))?;
        let v: f64 = field.trim().parse().map_err(|_| {
            CliError::Usage(format!(
                "{}: row {} has a non-numeric value '{field}'",
                path.display(),
                i + 2
            ))
        })?;
        y.push(v);
    }
    if y.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: dataset has no rows",
            path.display()
        )));
    }
    Ok(y)
}

pub fn write_summary_csv(path: &Path, s: &[f64]) -> Result<(), CliError> {
    let header: Vec<String> = (1..=s.len()).map(|i| format!("s{i}")).collect();
    let row: Vec<String> = s.iter().map(|v| format!("{v}")).collect();
    write_atomic(path, format!("{}\n{}\n", header.join(","), row.join(",")).as_bytes())
}

// ---- metric & schedule ---------------------------------------------------

#[derive(Serialize, Deserialize)]
struct MetricJson {
    p: usize,
    s0: Vec<f64>,
    /// Row-major p×p matrix.
    a: Vec<f64>,
}

pub fn write_metric_json(path: &Path, m: &DiscrepancyMetric) -> Result<(), CliError> {
    let doc = MetricJson {
        p: m.p,
        s0: m.s0.clone(),
        a: m.a.clone(),
    };
    write_atomic(
        path,
        (serde_json::to_string_pretty(&doc).map_err(runtime)? + "\n").as_bytes(),
    )
}

pub fn read_metric_json(path: &Path) -> Result<DiscrepancyMetric, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read metric {}: {e}", path.display())))?;
    let doc: MetricJson =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad metric: {e}")))?;
    if doc.s0.len() != doc.p {
        return Err(CliError::Usage("metric: s0 length disagrees with p".into()));
    }
    DiscrepancyMetric::new(doc.a, doc.s0).map_err(|e| CliError::Usage(e.to_string()))
}

#[derive(Serialize, Deserialize)]
struct ScheduleJson {
    eps: Vec<f64>,
}

pub fn write_schedule_json(path: &Path, s: &EpsilonSchedule) -> Result<(), CliError> {
    let doc = ScheduleJson {
        eps: s.levels().to_vec(),
    };
    write_atomic(
        path,
        (serde_json::to_string_pretty(&doc).map_err(runtime)? + "\n").as_bytes(),
    )
}

pub fn read_schedule_json(path: &Path) -> Result<EpsilonSchedule, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read schedule {}: {e}", path.display())))?;
    let doc: ScheduleJson =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad schedule: {e}")))?;
    EpsilonSchedule::new(doc.eps).map_err(|e| CliError::Usage(e.to_string()))
}

// ---- chains & particles ---------------------------------------------------

fn opt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// One row per iteration: draw components, accepted flag, tolerance in
/// effect (ABC family only) and the per-iteration value (discrepancy or
/// log synthetic likelihood). Timing never enters the file so reruns are
/// byte-identical.
pub fn write_chain_csv(path: &Path, out: &ChainOutput) -> Result<(), CliError> {
    let mut s = String::from("t");
    for d in 0..out.dim {
        s.push_str(&format!(",theta_{d}"));
    }
    s.push_str(",accepted,eps,value\n");
    for t in 0..out.iters() {
        s.push_str(&format!("{}", t + 1));
        for v in out.draw(t) {
            s.push_str(&format!(",{v}"));
        }
        s.push_str(&format!(
            ",{},{},{}\n",
            u8::from(out.accepted[t]),
            opt(out.eps_used[t]),
            opt(out.values[t]),
        ));
    }
    write_atomic(path, s.as_bytes())
}

pub fn write_particles_csv(path: &Path, set: &ParticleSet) -> Result<(), CliError> {
    let mut s = String::from("i");
    for d in 0..set.dim {
        s.push_str(&format!(",theta_{d}"));
    }
    s.push_str(",weight,delta\n");
    for i in 0..set.len() {
        s.push_str(&format!("{}", i + 1));
        for v in set.theta(i) {
            s.push_str(&format!(",{v}"));
        }
        s.push_str(&format!(",{},{}\n", set.weights[i], set.deltas[i]));
    }
    write_atomic(path, s.as_bytes())
}

// ---- history snapshots -----------------------------------------------------

pub fn write_abc_history_csv(path: &Path, h: &AbcHistory) -> Result<(), CliError> {
    let q = h.dim();
    let mut s = String::new();
    for d in 0..q {
        s.push_str(&format!("zeta_{d},"));
    }
    s.push_str("delta\n");
    for i in 0..h.len() {
        let (zeta, delta) = h.entry(i);
        for v in zeta {
            s.push_str(&format!("{v},"));
        }
        s.push_str(&format!("{delta}\n"));
    }
    write_atomic(path, s.as_bytes())
}

pub fn read_abc_history_csv(path: &Path, dim: usize) -> Result<AbcHistory, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read history {}: {e}", path.display())))?;
    let mut h = AbcHistory::new(dim);
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(CliError::Usage(format!(
                "history {}: row {} has {} fields, expected {}",
                path.display(),
                i + 1,
                fields.len(),
                dim + 1
            )));
        }
        let parse = |f: &str| -> Result<f64, CliError> {
            f.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("history: bad number '{f}'")))
        };
        let zeta: Vec<f64> = fields[..dim]
            .iter()
            .map(|f| parse(f))
            .collect::<Result<_, _>>()?;
        h.append(&zeta, parse(fields[dim])?)
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(h)
}

/// BSL snapshot: per entry the proposal and the summary sufficient
/// statistics (Σⱼs and row-major Σⱼssᵀ); `m` rides along per row so a
/// snapshot is self-describing.
pub fn write_bsl_history_csv(path: &Path, h: &BslHistory) -> Result<(), CliError> {
    let (q, p) = (h.dim(), h.p());
    let mut s = String::new();
    for d in 0..q {
        s.push_str(&format!("zeta_{d},"));
    }
    s.push('m');
    for a in 0..p {
        s.push_str(&format!(",sum_s_{a}"));
    }
    for a in 0..p * p {
        s.push_str(&format!(",sum_ss_{a}"));
    }
    s.push('\n');
    for i in 0..h.len() {
        let (zeta, sum_s, sum_ss) = h.entry_sums(i);
        for v in zeta {
            s.push_str(&format!("{v},"));
        }
        s.push_str(&format!("{}", h.m()));
        for v in sum_s.iter().chain(sum_ss) {
            s.push_str(&format!(",{v}"));
        }
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}

pub fn read_bsl_history_csv(path: &Path, dim: usize, p: usize) -> Result<BslHistory, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read history {}: {e}", path.display())))?;
    let mut entries: Vec<(Vec<f64>, usize, Vec<f64>, Vec<f64>)> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let expect = dim + 1 + p + p * p;
        if fields.len() != expect {
            return Err(CliError::Usage(format!(
                "history {}: row {} has {} fields, expected {expect}",
                path.display(),
                i + 1,
                fields.len()
            )));
        }
        let parse = |f: &str| -> Result<f64, CliError> {
            f.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("history: bad number '{f}'")))
        };
        let zeta: Vec<f64> = fields[..dim]
            .iter()
            .map(|f| parse(f))
            .collect::<Result<_, _>>()?;
        let m: usize = fields[dim]
            .trim()
            .parse()
            .map_err(|_| CliError::Usage("history: bad m".into()))?;
        let sum_s: Vec<f64> = fields[dim + 1..dim + 1 + p]
            .iter()
            .map(|f| parse(f))
            .collect::<Result<_, _>>()?;
        let sum_ss: Vec<f64> = fields[dim + 1 + p..]
            .iter()
            .map(|f| parse(f))
            .collect::<Result<_, _>>()?;
        entries.push((zeta, m, sum_s, sum_ss));
    }
    let m = entries
        .first()
        .map(|e| e.1)
        .ok_or_else(|| CliError::Usage("history snapshot is empty".into()))?;
    if entries.iter().any(|e| e.1 != m) {
        return Err(CliError::Usage("history snapshot mixes m values".into()));
    }
    let mut h = BslHistory::new(dim, p, m).map_err(|e| CliError::Usage(e.to_string()))?;
    for (zeta, _, sum_s, sum_ss) in &entries {
        h.append_sums(zeta, sum_s, sum_ss)
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(h)
}

// ---- study table ------------------------------------------------------------

pub const STUDY_HEADER: &str =
    "sampler,DIM,DIC,TV,sqrt_bias2,sqrt_var,sqrt_mse,ESS,ESS_per_CPU";

pub fn study_csv(rows: &[StudyRow]) -> String {
    let mut s = String::from(STUDY_HEADER);
    s.push('\n');
    for row in rows {
        match &row.outcome {
            Ok(m) => {
                s.push_str(&format!(
                    "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.3},{:.6}\n",
                    row.sampler,
                    m.diff_mean,
                    m.diff_cov,
                    m.tv,
                    m.sqrt_bias2,
                    m.sqrt_var,
                    m.sqrt_mse,
                    m.ess,
                    m.ess_per_cpu
                ));
            }
            Err(_) => {
                s.push_str(&format!("{},NA,NA,NA,NA,NA,NA,NA,NA\n", row.sampler));
            }
        }
    }
    s
}

pub fn write_study_csv(path: &Path, rows: &[StudyRow]) -> Result<(), CliError> {
    write_atomic(path, study_csv(rows).as_bytes())
}

// ---- KDE export ---------------------------------------------------------------

pub fn write_kde_csv(path: &Path, curve: &lfi_core::diagnostics::KdeCurve) -> Result<(), CliError> {
    let mut s = String::from("x,density\n");
    for (x, d) in curve.grid.iter().zip(&curve.density) {
        s.push_str(&format!("{x},{d}\n"));
    }
    write_atomic(path, s.as_bytes())
}

// ---- manifests -------------------------------------------------------------

#[derive(Serialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub command: String,
    pub model: String,
    pub sampler: String,
    pub seed: u64,
    pub data_len: usize,
    pub iters: usize,
    pub burn_in: usize,
    pub m: usize,
    pub n0: usize,
    pub acceptance_rate: f64,
    pub posterior_mean: Vec<f64>,
    pub sim_calls: u64,
    pub setup_sim_calls: u64,
    pub skipped_proposals: u64,
    pub flagged: u64,
    /// FNV-1a hash of the effective config JSON.
    pub config_hash: String,
    /// FNV-1a hash of the observed dataset bytes.
    pub dataset_hash: String,
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    write_atomic(
        path,
        (serde_json::to_string_pretty(manifest).map_err(runtime)? + "\n").as_bytes(),
    )
}

#[derive(Serialize)]
struct StudyManifest<'a> {
    format_version: u32,
    command: &'static str,
    config: &'a crate::config::ExperimentConfig,
    config_hash: String,
    /// "wall" when measured wall-clock fed the efficiency column,
    /// otherwise the deterministic simulation-count proxy.
    cpu_basis: &'static str,
}

pub fn write_study_manifest(
    path: &Path,
    cfg: &crate::config::ExperimentConfig,
    wall_time: bool,
) -> Result<(), CliError> {
    let doc = StudyManifest {
        format_version: 1,
        command: "replicate",
        config: cfg,
        config_hash: fnv64_hex(serde_json::to_string(cfg).map_err(runtime)?.as_bytes()),
        cpu_basis: if wall_time { "wall" } else { "sim-count" },
    };
    write_atomic(
        path,
        (serde_json::to_string_pretty(&doc).map_err(runtime)? + "\n").as_bytes(),
    )
}

// ---- returns ingestion -------------------------------------------------------

#[derive(Debug)]
pub struct ReturnsSeries {
    pub dates: Vec<String>,
    pub values: Vec<f64>,
}

/// Log-differences of a `date,close` price series, mean-centered and
/// scaled by 200.
pub fn ingest_returns(path: &Path) -> Result<ReturnsSeries, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read prices {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    let _header = lines
        .next()
        .ok_or_else(|| CliError::Usage("empty price file".into()))?;
    let mut dates: Vec<String> = Vec::new();
    let mut prices: Vec<f64> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = i + 1;
        let mut fields = line.split(',');
        let date = fields
            .next()
            .unwrap_or("")
            .trim();
        if date.is_empty() || !date.bytes().any(|b| b.is_ascii_digit()) {
            return Err(CliError::Usage(format!(
                "prices row {row}: unparseable date '{date}'"
            )));
        }
        let close: f64 = fields
            .next()
            .ok_or_else(|| CliError::Usage(format!("prices row {row}: missing close column")))?
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("prices row {row}: non-numeric close")))?;
        if !(close > 0.0) {
            return Err(CliError::Usage(format!(
                "prices row {row}: non-positive price {close}"
            )));
        }
        dates.push(date.to_string());
        prices.push(close);
    }
    if prices.len() < 2 {
        return Err(CliError::Usage(
            "price series needs at least 2 rows to form returns".into(),
        ));
    }
    let mut raw: Vec<f64> = prices.windows(2).map(|w| w[1].ln() - w[0].ln()).collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    for v in &mut raw {
        *v = (*v - mean) * 200.0;
    }
    Ok(ReturnsSeries {
        dates: dates[1..].to_vec(),
        values: raw,
    })
}

pub fn write_returns_csv(path: &Path, series: &ReturnsSeries) -> Result<(), CliError> {
    let mut s = String::from("date,y\n");
    for (d, v) in series.dates.iter().zip(&series.values) {
        s.push_str(&format!("{d},{v}\n"));
    }
    write_atomic(path, s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("lfi-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn dataset_round_trip_and_flexible_reader() {
        let p = tmp("ds.csv");
        write_dataset_csv(&p, &[1.5, -2.0, 0.25]).unwrap();
        assert_eq!(read_dataset_csv(&p).unwrap(), vec![1.5, -2.0, 0.25]);
        let p2 = tmp("ds2.csv");
        std::fs::write(&p2, "date,y\n2020-01-01,3.5\n2020-01-02,-1\n").unwrap();
        assert_eq!(read_dataset_csv(&p2).unwrap(), vec![3.5, -1.0]);
        let p3 = tmp("ds3.csv");
        std::fs::write(&p3, "y\nabc\n").unwrap();
        assert!(read_dataset_csv(&p3).is_err());
    }

    #[test]
    fn metric_and_schedule_round_trip() {
        let m = DiscrepancyMetric::new(vec![2.0, 0.5, 0.5, 1.0], vec![0.1, -0.3]).unwrap();
        let p = tmp("metric.json");
        write_metric_json(&p, &m).unwrap();
        assert_eq!(read_metric_json(&p).unwrap(), m);
        let s = EpsilonSchedule::log_spaced(10.0, 0.1, 5).unwrap();
        let p = tmp("schedule.json");
        write_schedule_json(&p, &s).unwrap();
        assert_eq!(read_schedule_json(&p).unwrap(), s);
    }

    #[test]
    fn abc_history_round_trip() {
        let mut h = AbcHistory::new(2);
        h.append(&[0.1, 0.2], 1.5).unwrap();
        h.append(&[-0.4, 2.0], 0.25).unwrap();
        let p = tmp("hist.csv");
        write_abc_history_csv(&p, &h).unwrap();
        let back = read_abc_history_csv(&p, 2).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.entry(1), h.entry(1));
    }

    #[test]
    fn bsl_history_round_trip_preserves_estimators() {
        use lfi_core::history::WeightScheme;
        let (q, p, m) = (2, 3, 4);
        let mut h = BslHistory::new(q, p, m).unwrap();
        let stats: Vec<f64> = (0..m * p).map(|i| i as f64 * 0.37 - 1.0).collect();
        h.append(&[0.5, -0.5], &stats).unwrap();
        let stats2: Vec<f64> = (0..m * p).map(|i| (i as f64).sin()).collect();
        h.append(&[0.6, 0.1], &stats2).unwrap();
        let path = tmp("bsl_hist.csv");
        write_bsl_history_csv(&path, &h).unwrap();
        let back = read_bsl_history_csv(&path, q, p).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.m(), m);
        let (mu_a, sig_a) = h.moments_hat(&[0.55, -0.2], WeightScheme::Linear).unwrap();
        let (mu_b, sig_b) = back.moments_hat(&[0.55, -0.2], WeightScheme::Linear).unwrap();
        for (a, b) in mu_a.iter().zip(&mu_b) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in sig_a.iter().zip(&sig_b) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn returns_ingestion_examples() {
        let p = tmp("prices.csv");
        std::fs::write(&p, "date,close\n2020-01-01,100\n2020-01-02,100\n").unwrap();
        let r = ingest_returns(&p).unwrap();
        assert_eq!(r.values, vec![0.0]);

        // raw returns (0.01, 0.03) center to (−0.01, +0.01), scale to (−2, 2)
        let p2 = tmp("prices2.csv");
        let p0 = 100.0f64;
        let p1 = p0 * (0.01f64).exp();
        let p2v = p1 * (0.03f64).exp();
        std::fs::write(
            &p2,
            format!("date,close\n2020-01-01,{p0}\n2020-01-02,{p1}\n2020-01-03,{p2v}\n"),
        )
        .unwrap();
        let r = ingest_returns(&p2).unwrap();
        assert!((r.values[0] + 2.0).abs() < 1e-9, "{:?}", r.values);
        assert!((r.values[1] - 2.0).abs() < 1e-9);
        let mean: f64 = r.values.iter().sum::<f64>() / r.values.len() as f64;
        assert!(mean.abs() < 1e-12);

        let bad = tmp("prices3.csv");
        std::fs::write(&bad, "date,close\n2020-01-01,100\n2020-01-02,-5\n").unwrap();
        let err = ingest_returns(&bad).unwrap_err();
        match err {
            CliError::Usage(msg) => assert!(msg.contains("row 3"), "{msg}"),
            _ => panic!("wrong error kind"),
        }
    }

    #[test]
    fn synthetic_price_series_has_n_minus_one_returns() {
        // 2262 prices yield 2261 returns
        let p = tmp("prices_long.csv");
        let mut s = String::from("date,close\n");
        let mut price = 100.0;
        for i in 0..2262 {
            s.push_str(&format!("2010-{:02}-{:02},{price}\n", 1 + (i / 28) % 12, 1 + i % 28));
            price *= 1.0 + ((i as f64 * 0.7).sin()) * 0.01;
        }
        std::fs::write(&p, s).unwrap();
        let r = ingest_returns(&p).unwrap();
        assert_eq!(r.values.len(), 2261);
    }
}
