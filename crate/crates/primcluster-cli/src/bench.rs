//! Gear benchmark: wall-clock times for the dissimilarity assembly and the
//! merge loop across a doubling ladder of gear sizes, with per-doubling
//! complexity orders.

use std::collections::BTreeMap;
use std::time::Instant;

use primcluster::calibrate::CalibrationProfile;
use primcluster::cluster::{
    agglomerate, assemble_dissimilarities, partition_by_degree, LinkageAlgorithm, StopRule,
};
use primcluster::error::{Error, Result};
use primcluster::geometry::{generate_gear, rescale_to_unit_box, GearMode};

/// One benchmark table row. Orders are `log2(t_this / t_previous)` and are
/// absent on the first row.
#[derive(Debug, Clone)]
pub struct BenchmarkRow {
    pub teeth: usize,
    pub segments: usize,
    pub t_assembly: f64,
    pub t_clustering: f64,
    pub t_total: f64,
    pub o_assembly: Option<f64>,
    pub o_clustering: Option<f64>,
    pub o_total: Option<f64>,
}

/// Thresholds for the benchmark gears: exact primitives sit at round-off,
/// so fixed generous thresholds are correct and avoid timing calibration.
fn benchmark_profile() -> CalibrationProfile<f64> {
    CalibrationProfile {
        ambient_dim: 2,
        m_cap: 2,
        xi: BTreeMap::from([(1, 1e-8), (2, 1e-8)]),
        eta: 1e-6,
        lambda: 1e-10,
        seed: 0,
        q1: 10,
        q2: 10,
        p3: 10,
        train_noise: 0.0,
    }
}

/// Times one clustering of the sampled gear. Returns the final partition
/// (canonicalized as sorted clusters) plus assembly, merge-loop, and total
/// seconds; the phase boundary is matrix build vs merge loop.
fn timed_run(
    clouds: &[primcluster::PointCloud64],
    profile: &CalibrationProfile<f64>,
    algorithm: LinkageAlgorithm,
) -> Result<(Vec<Vec<usize>>, f64, f64, f64)> {
    let start_total = Instant::now();
    let split = partition_by_degree(clouds, profile)?;
    let mut t_assembly = 0.0;
    let mut t_clustering = 0.0;
    let mut partition: Vec<Vec<usize>> = Vec::new();
    for (&degree, members) in &split.classes {
        let class: Vec<_> = members.iter().map(|&i| clouds[i].clone()).collect();
        let start = Instant::now();
        let matrices = assemble_dissimilarities(&class, degree, profile.lambda)?;
        t_assembly += start.elapsed().as_secs_f64();
        let start = Instant::now();
        let run = agglomerate(&matrices, StopRule::Relative, algorithm)?;
        t_clustering += start.elapsed().as_secs_f64();
        for cluster in &run.clusters {
            partition.push(cluster.iter().map(|&local| members[local]).collect());
        }
    }
    partition.extend(split.rejected.iter().map(|&i| vec![i]));
    partition.sort();
    Ok((partition, t_assembly, t_clustering, start_total.elapsed().as_secs_f64()))
}

/// Runs the benchmark ladder. Per row: exact gear, relative-mode clustering,
/// best-of-`repeats` per phase; identical partitions across repeats are
/// enforced. `teeth_list` is expected pre-validated (ascending powers of 2).
pub fn run_benchmark(
    teeth_list: &[usize],
    repeats: usize,
    algorithm: LinkageAlgorithm,
) -> Result<Vec<BenchmarkRow>> {
    if repeats == 0 {
        return Err(Error::invalid("repeats must be at least 1"));
    }
    let profile = benchmark_profile();
    let mut rows: Vec<BenchmarkRow> = Vec::with_capacity(teeth_list.len());
    for &teeth in teeth_list {
        let dataset = generate_gear::<f64>(teeth, GearMode::Exact)?;
        let (rescaled, _) = rescale_to_unit_box(&dataset)?;
        let sampled = rescaled.sample(None, profile.m_cap)?;
        let mut best: Option<(Vec<Vec<usize>>, f64, f64, f64)> = None;
        for _ in 0..repeats {
            let (partition, ta, tc, tt) = timed_run(&sampled.clouds, &profile, algorithm)?;
            best = Some(match best {
                None => (partition, ta, tc, tt),
                Some((prev, pa, pc, pt)) => {
                    if prev != partition {
                        return Err(Error::invalid(
                            "benchmark repeats produced different partitions",
                        ));
                    }
                    (prev, pa.min(ta), pc.min(tc), pt.min(tt))
                }
            });
        }
        let (_, t_assembly, t_clustering, t_total) = best.unwrap();
        let order = |now: f64, before: f64| (now / before).log2();
        let prev = rows.last();
        rows.push(BenchmarkRow {
            teeth,
            segments: sampled.len(),
            t_assembly,
            t_clustering,
            t_total,
            o_assembly: prev.map(|p| order(t_assembly, p.t_assembly)),
            o_clustering: prev.map(|p| order(t_clustering, p.t_clustering)),
            o_total: prev.map(|p| order(t_total, p.t_total)),
        });
    }
    Ok(rows)
}

/// Text table in the shape of the published benchmark: one column per gear
/// size, one line per measurement.
pub fn format_table(rows: &[BenchmarkRow]) -> String {
    let mut s = String::new();
    let line = |label: &str, cells: Vec<String>| {
        let mut l = format!("{label:14}");
        for c in cells {
            l.push_str(&format!(" {c:>10}"));
        }
        l.push('\n');
        l
    };
    let fmt_opt = |o: Option<f64>| o.map_or("-".to_string(), |v| format!("{v:.3}"));
    s.push_str(&line("teeth", rows.iter().map(|r| r.teeth.to_string()).collect()));
    s.push_str(&line("segments", rows.iter().map(|r| r.segments.to_string()).collect()));
    s.push_str(&line("t_assembly", rows.iter().map(|r| format!("{:.4}", r.t_assembly)).collect()));
    s.push_str(&line("o_assembly", rows.iter().map(|r| fmt_opt(r.o_assembly)).collect()));
    s.push_str(&line("t_clustering", rows.iter().map(|r| format!("{:.4}", r.t_clustering)).collect()));
    s.push_str(&line("o_clustering", rows.iter().map(|r| fmt_opt(r.o_clustering)).collect()));
    s.push_str(&line("t_total", rows.iter().map(|r| format!("{:.4}", r.t_total)).collect()));
    s.push_str(&line("o_total", rows.iter().map(|r| fmt_opt(r.o_total)).collect()));
    s
}

/// JSON rows for machine consumption.
pub fn rows_to_json(rows: &[BenchmarkRow]) -> String {
    let opt = |o: Option<f64>| o.map_or("null".to_string(), |v| format!("{v:.6}"));
    let mut s = String::from("[");
    for (i, r) in rows.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&format!(
            "\n{{\"teeth\": {}, \"segments\": {}, \"t_assembly\": {:.6}, \"t_clustering\": {:.6}, \"t_total\": {:.6}, \"o_assembly\": {}, \"o_clustering\": {}, \"o_total\": {}}}",
            r.teeth,
            r.segments,
            r.t_assembly,
            r.t_clustering,
            r.t_total,
            opt(r.o_assembly),
            opt(r.o_clustering),
            opt(r.o_total),
        ));
    }
    s.push_str("\n]\n");
    s
}
