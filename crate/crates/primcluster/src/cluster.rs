//! Degree-based partitioning and agglomerative clustering of patch clouds.
//!
//! Patches are first split into classes by estimated implicit degree, then
//! each class is clustered bottom-up under complete linkage. The pairwise
//! dissimilarity is the smallest singular value of the joint collocation
//! matrix, optionally augmented by a small multiple of the center distance
//! to restore the triangle inequality.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::calibrate::CalibrationProfile;
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::implicitize::{approximate_implicitize, MAX_SURFACE_DEGREE};
use crate::scalar::Scalar;

/// Centers closer than this are treated as coincident when weighting by
/// center distance or calibrating the weight itself.
pub const CENTER_COINCIDENCE_TOL: f64 = 1e-12;

/// Spacing guard for the ratio-based stopping rule. Representation errors
/// are smallest singular values of unit-box collocation matrices, so values
/// below this floor are round-off noise: exact-primitive merges land
/// anywhere in [0, ~1e-15], and an unguarded ratio between two such values
/// (e.g. an exact 0.0 followed by 4e-18) would dwarf the genuine jump the
/// rule is after. The guard absorbs ratios inside the noise floor while
/// perturbing ratios between resolvable errors by less than 1e-6 relative.
pub const RATIO_GUARD: f64 = 1e-14;

/// Estimates the implicit degree of a sampled patch: the smallest candidate
/// degree whose smallest singular value drops below the calibrated threshold.
///
/// Candidates run from 1 to the profile cap; surface clouds are capped at
/// degree 2. If no candidate qualifies, the error carries the full sigma
/// spectrum for diagnosis.
pub fn estimate_degree<S: Scalar>(
    cloud: &PointCloud<S>,
    profile: &CalibrationProfile<S>,
) -> Result<usize> {
    profile.validate()?;
    if cloud.dim() != profile.ambient_dim {
        return Err(Error::invalid(format!(
            "cloud dimension {} does not match profile dimension {}",
            cloud.dim(),
            profile.ambient_dim
        )));
    }
    let cap = if cloud.dim() == 3 {
        profile.m_cap.min(MAX_SURFACE_DEGREE)
    } else {
        profile.m_cap
    };
    let mut sigmas = Vec::with_capacity(cap);
    for m in 1..=cap {
        let fit = approximate_implicitize(cloud, m)?;
        sigmas.push(fit.sigma_min.to_f64_lossy());
        if fit.sigma_min < profile.xi_for(m)? {
            return Ok(m);
        }
    }
    Err(Error::DegreeOverflow {
        m_cap: cap,
        sigmas,
    })
}

/// Outcome of splitting a set of clouds by estimated degree.
///
/// `classes` maps each occupied degree to the ascending member indices;
/// `rejected` lists the indices whose degree overflowed the cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreePartition {
    pub classes: BTreeMap<usize, Vec<usize>>,
    pub rejected: Vec<usize>,
    pub m_max: usize,
}

/// Splits clouds into degree classes, quarantining overflows instead of
/// failing. Estimation runs per cloud in parallel; every other error is
/// genuine and propagates.
pub fn partition_by_degree<S: Scalar>(
    clouds: &[PointCloud<S>],
    profile: &CalibrationProfile<S>,
) -> Result<DegreePartition> {
    profile.validate()?;
    let estimates: Vec<Result<usize>> = clouds
        .par_iter()
        .map(|cloud| estimate_degree(cloud, profile))
        .collect();

    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut rejected = Vec::new();
    for (i, outcome) in estimates.into_iter().enumerate() {
        match outcome {
            Ok(m) => classes.entry(m).or_default().push(i),
            Err(Error::DegreeOverflow { m_cap, sigmas }) => {
                log::warn!(
                    "patch {i} exceeds the degree cap {m_cap}; sigma spectrum {sigmas:?}"
                );
                rejected.push(i);
            }
            Err(other) => return Err(other),
        }
    }
    let m_max = classes.keys().next_back().copied().unwrap_or(0);
    Ok(DegreePartition {
        classes,
        rejected,
        m_max,
    })
}

/// Dissimilarity of two clouds at a fixed degree: the smallest singular
/// value of their joint collocation matrix plus `lambda` times the distance
/// between their centers of mass.
pub fn dissimilarity<S: Scalar>(
    a: &PointCloud<S>,
    b: &PointCloud<S>,
    degree: usize,
    lambda: S,
) -> Result<S> {
    let joint = a.joined(b)?;
    let fit = approximate_implicitize(&joint, degree)?;
    Ok(fit.sigma_min + lambda * a.center_distance(b)?)
}

/// Dense pairwise dissimilarities for one degree class, in two flavors
/// assembled in a single pass: `d0` is the raw joint singular value and
/// `dlambda` adds the center-distance term. Symmetric with an exactly zero
/// diagonal; entries whose joint fit failed hold positive infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrices<S> {
    size: usize,
    degree: usize,
    lambda: S,
    d0: Vec<S>,
    dlambda: Vec<S>,
}

impl<S: Scalar> DissimilarityMatrices<S> {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn lambda(&self) -> S {
        self.lambda
    }

    /// Raw joint singular value, used for representation errors.
    pub fn d0(&self, i: usize, j: usize) -> S {
        self.d0[i * self.size + j]
    }

    /// Center-weighted dissimilarity, used for linkage decisions.
    pub fn dlambda(&self, i: usize, j: usize) -> S {
        self.dlambda[i * self.size + j]
    }
}

/// Builds both dissimilarity matrices for a class. Each unordered pair is
/// fitted exactly once (in parallel) and mirrored, so the result is bitwise
/// symmetric and independent of the worker count. A failed pair is logged
/// and stored as infinity rather than aborting the whole class.
pub fn assemble_dissimilarities<S: Scalar>(
    class: &[PointCloud<S>],
    degree: usize,
    lambda: S,
) -> Result<DissimilarityMatrices<S>> {
    let size = class.len();
    if size == 0 {
        return Err(Error::invalid("cannot assemble dissimilarities for an empty class"));
    }
    if !lambda.is_finite() || lambda < S::zero() {
        return Err(Error::invalid("center weight must be finite and nonnegative"));
    }

    let mut pairs = Vec::with_capacity(size * (size - 1) / 2);
    for i in 0..size {
        for j in (i + 1)..size {
            pairs.push((i, j));
        }
    }
    let entries: Vec<(S, S)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let sigma = class[i]
                .joined(&class[j])
                .and_then(|joint| approximate_implicitize(&joint, degree))
                .map(|fit| fit.sigma_min);
            let dist = class[i].center_distance(&class[j]);
            match (sigma, dist) {
                (Ok(s), Ok(d)) => (s, s + lambda * d),
                (sigma, dist) => {
                    let reason = sigma.err().or(dist.err()).expect("one side failed");
                    log::warn!("joint fit of patches {i} and {j} failed: {reason}");
                    (S::infinity(), S::infinity())
                }
            }
        })
        .collect();

    let mut d0 = vec![S::zero(); size * size];
    let mut dlambda = vec![S::zero(); size * size];
    for (&(i, j), &(s, w)) in pairs.iter().zip(&entries) {
        d0[i * size + j] = s;
        d0[j * size + i] = s;
        dlambda[i * size + j] = w;
        dlambda[j * size + i] = w;
    }
    Ok(DissimilarityMatrices {
        size,
        degree,
        lambda,
        d0,
        dlambda,
    })
}

/// Complete-linkage distance between two clusters: the largest weighted
/// dissimilarity across the cut. Reads cached entries only.
pub fn complete_linkage<S: Scalar>(
    a: &[usize],
    b: &[usize],
    matrices: &DissimilarityMatrices<S>,
) -> S {
    let mut worst = S::zero();
    for &i in a {
        for &j in b {
            let d = matrices.dlambda(i, j);
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Representation error of a partition: the largest raw dissimilarity found
/// inside any cluster. Singletons contribute zero.
pub fn representation_error<S: Scalar>(
    clusters: &[Vec<usize>],
    matrices: &DissimilarityMatrices<S>,
) -> S {
    let mut worst = S::zero();
    for cluster in clusters {
        for (a, &i) in cluster.iter().enumerate() {
            for &j in &cluster[a + 1..] {
                let d = matrices.d0(i, j);
                if d > worst {
                    worst = d;
                }
            }
        }
    }
    worst
}

/// When to cut the merge sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule<S> {
    /// Keep merging while the representation error stays at or below the
    /// threshold; stop just before the first merge that would exceed it.
    Absolute { eta: S },
    /// Run the full sequence and cut just before the largest relative jump
    /// in the representation error.
    Relative,
    /// Ignore errors and merge down to exactly this many clusters.
    ForcedCount(usize),
}

/// How cluster distances are searched during agglomeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkageAlgorithm {
    /// Scan all active pairs every step; the reference implementation.
    Naive,
    /// Nearest-neighbor chain; same dendrogram, near-quadratic time.
    NnChain,
}

/// One accepted merge in the full sequence. Clusters are identified by the
/// smallest patch index they contain; `height` is the linkage distance at
/// which the merge happened and `error` the representation error after it.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeStep<S> {
    pub k: usize,
    pub merged: (usize, usize),
    pub height: S,
    pub error: S,
}

/// Full merge history of one degree class plus the chosen cut.
///
/// `steps` always covers the complete sequence down to a single cluster;
/// `cut` is how many of those merges the stop rule accepted, and `clusters`
/// is the partition after exactly that many merges. `ratios[k-1]` holds the
/// guarded error ratio of step `k` (relative rule only, empty otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct Agglomeration<S> {
    pub clusters: Vec<Vec<usize>>,
    pub steps: Vec<MergeStep<S>>,
    pub ratios: Vec<S>,
    pub cut: usize,
}

struct RawMerge<S> {
    a: usize,
    b: usize,
    height: S,
}

/// Clusters one degree class from its precomputed dissimilarities.
///
/// Merges are ordered by ascending linkage distance, ties broken toward the
/// pair with the smallest member indices, so the sequence is deterministic.
/// Both search algorithms produce the same sequence up to exact ties.
pub fn agglomerate<S: Scalar>(
    matrices: &DissimilarityMatrices<S>,
    rule: StopRule<S>,
    algorithm: LinkageAlgorithm,
) -> Result<Agglomeration<S>> {
    let size = matrices.size();
    if let StopRule::Absolute { eta } = rule {
        if !eta.is_finite() || eta < S::zero() {
            return Err(Error::invalid("stopping threshold must be finite and nonnegative"));
        }
    }
    if let StopRule::ForcedCount(count) = rule {
        if count == 0 {
            return Err(Error::invalid("forced cluster count must be at least 1"));
        }
        if count > size {
            log::warn!("forced cluster count {count} exceeds class size {size}; keeping singletons");
        }
    }
    if size == 1 {
        return Ok(Agglomeration {
            clusters: vec![vec![0]],
            steps: Vec::new(),
            ratios: Vec::new(),
            cut: 0,
        });
    }

    let merges = match algorithm {
        LinkageAlgorithm::Naive => merge_sequence_naive(matrices),
        LinkageAlgorithm::NnChain => merge_sequence_nn_chain(matrices),
    };
    debug_assert_eq!(merges.len(), size - 1);

    // Replay the sequence once to attach representation errors. Only the
    // merged cluster can raise the error, so each step inspects new
    // within-cluster pairs only; the total work stays quadratic.
    let mut members: Vec<Vec<usize>> = (0..size).map(|i| vec![i]).collect();
    let mut root: Vec<usize> = (0..size).collect();
    let mut error = S::zero();
    let mut steps = Vec::with_capacity(merges.len());
    for (k, merge) in merges.iter().enumerate() {
        let ra = find_root(&mut root, merge.a);
        let rb = find_root(&mut root, merge.b);
        debug_assert_ne!(ra, rb, "merge joins two live clusters");
        let (keep, gone) = if ra < rb { (ra, rb) } else { (rb, ra) };
        for &i in &members[keep] {
            for &j in &members[gone] {
                let d = matrices.d0(i, j);
                if d > error {
                    error = d;
                }
            }
        }
        let absorbed = std::mem::take(&mut members[gone]);
        members[keep].extend(absorbed);
        root[gone] = keep;
        steps.push(MergeStep {
            k: k + 1,
            merged: (keep, gone),
            height: merge.height,
            error,
        });
    }

    let mut ratios = Vec::new();
    let cut = match rule {
        StopRule::Absolute { eta } => steps.iter().take_while(|s| s.error <= eta).count(),
        StopRule::Relative => {
            let guard = S::of(RATIO_GUARD);
            let mut best = S::neg_infinity();
            let mut best_k = 1;
            for step in &steps {
                let prev = if step.k == 1 {
                    step.error
                } else {
                    steps[step.k - 2].error
                };
                let ratio = (step.error + guard) / (prev + guard);
                if ratio > best {
                    best = ratio;
                    best_k = step.k;
                }
                ratios.push(ratio);
            }
            best_k - 1
        }
        StopRule::ForcedCount(count) => size.saturating_sub(count).min(steps.len()),
    };

    let mut root: Vec<usize> = (0..size).collect();
    for merge in merges.iter().take(cut) {
        let ra = find_root(&mut root, merge.a);
        let rb = find_root(&mut root, merge.b);
        let (keep, gone) = if ra < rb { (ra, rb) } else { (rb, ra) };
        root[gone] = keep;
    }
    let mut grouped: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..size {
        grouped.entry(find_root(&mut root, i)).or_default().push(i);
    }
    let clusters = grouped.into_values().collect();

    Ok(Agglomeration {
        clusters,
        steps,
        ratios,
        cut,
    })
}

fn find_root(root: &mut [usize], mut i: usize) -> usize {
    while root[i] != i {
        root[i] = root[root[i]];
        i = root[i];
    }
    i
}

/// Reference search: every step scans all active cluster pairs for the
/// smallest linkage distance, ties broken by member indices.
fn merge_sequence_naive<S: Scalar>(matrices: &DissimilarityMatrices<S>) -> Vec<RawMerge<S>> {
    let size = matrices.size();
    // dist holds current cluster-to-cluster linkage for active slots; the
    // slot index doubles as the smallest patch index of its cluster.
    let mut dist: Vec<S> = matrices.dlambda.clone();
    let mut active: Vec<usize> = (0..size).collect();
    let mut merges = Vec::with_capacity(size - 1);

    while active.len() > 1 {
        let mut best = (S::infinity(), usize::MAX, usize::MAX);
        for (p, &a) in active.iter().enumerate() {
            for &b in &active[p + 1..] {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                let d = dist[lo * size + hi];
                if d < best.0 || (d == best.0 && (lo, hi) < (best.1, best.2)) {
                    best = (d, lo, hi);
                }
            }
        }
        let (height, keep, gone) = best;
        for &u in &active {
            if u == keep || u == gone {
                continue;
            }
            let merged = dist[u * size + keep].max(dist[u * size + gone]);
            dist[u * size + keep] = merged;
            dist[keep * size + u] = merged;
        }
        active.retain(|&u| u != gone);
        merges.push(RawMerge {
            a: keep,
            b: gone,
            height,
        });
    }
    merges
}

/// Nearest-neighbor-chain search. Produces the same set of merges as the
/// naive scan because complete linkage is reducible; the discovered order is
/// then sorted by height, which is a valid merge order for any linkage
/// without inversions.
fn merge_sequence_nn_chain<S: Scalar>(matrices: &DissimilarityMatrices<S>) -> Vec<RawMerge<S>> {
    let size = matrices.size();
    let mut dist: Vec<S> = matrices.dlambda.clone();
    let mut alive: Vec<bool> = vec![true; size];
    let mut label: Vec<usize> = (0..size).collect();
    let mut remaining = size;
    let mut chain: Vec<usize> = Vec::with_capacity(size);
    let mut merges: Vec<RawMerge<S>> = Vec::with_capacity(size - 1);

    while remaining > 1 {
        if chain.is_empty() {
            let start = alive.iter().position(|&a| a).expect("a cluster is alive");
            chain.push(start);
        }
        loop {
            let tip = *chain.last().expect("chain is nonempty");
            let mut nearest = usize::MAX;
            let mut nearest_d = S::infinity();
            for u in 0..size {
                if !alive[u] || u == tip {
                    continue;
                }
                let d = dist[tip * size + u];
                if d < nearest_d || (d == nearest_d && label[u] < label.get(nearest).copied().unwrap_or(usize::MAX)) {
                    nearest_d = d;
                    nearest = u;
                }
            }
            if chain.len() >= 2 && nearest == chain[chain.len() - 2] {
                let other = chain.pop().expect("tip exists");
                let prev = chain.pop().expect("reciprocal neighbor exists");
                let (keep, gone) = if label[prev] < label[other] {
                    (prev, other)
                } else {
                    (other, prev)
                };
                for u in 0..size {
                    if !alive[u] || u == keep || u == gone {
                        continue;
                    }
                    let merged = dist[u * size + keep].max(dist[u * size + gone]);
                    dist[u * size + keep] = merged;
                    dist[keep * size + u] = merged;
                }
                alive[gone] = false;
                remaining -= 1;
                merges.push(RawMerge {
                    a: label[keep],
                    b: label[gone],
                    height: nearest_d,
                });
                label[keep] = label[keep].min(label[gone]);
                break;
            }
            chain.push(nearest);
        }
    }

    // Stable by height: equal-height merges keep discovery order, which
    // lists a child cluster before any merge that consumes it.
    merges.sort_by(|x, y| x.height.partial_cmp(&y.height).expect("heights are comparable"));
    merges
}

/// Smallest center-distance weight that restores the triangle inequality
/// for the weighted dissimilarity on this class, computed by maximizing the
/// defect ratio over all center triples.
///
/// Triples whose center geometry makes the denominator vanish (collinear
/// centers) are skipped with a warning; fully coincident centers in any
/// pair are a hard error.
pub fn lambda_star<S: Scalar>(class: &[PointCloud<S>], degree: usize) -> Result<S> {
    let size = class.len();
    if size < 3 {
        return Err(Error::invalid(format!(
            "triangle-inequality calibration needs at least 3 patches, got {size}"
        )));
    }
    let tol = S::of(CENTER_COINCIDENCE_TOL);
    let mut centers = vec![S::zero(); size * size];
    for i in 0..size {
        for j in (i + 1)..size {
            let d = class[i].center_distance(&class[j])?;
            if d < tol {
                return Err(Error::CoincidentCenters);
            }
            centers[i * size + j] = d;
            centers[j * size + i] = d;
        }
    }
    let matrices = assemble_dissimilarities(class, degree, S::zero())?;

    let mut best: Option<S> = None;
    let mut skipped = 0usize;
    for i in 0..size {
        for j in (i + 1)..size {
            for k in 0..size {
                if k == i || k == j {
                    continue;
                }
                let numerator = matrices.d0(i, j) - matrices.d0(i, k) - matrices.d0(j, k);
                let denominator =
                    centers[i * size + k] + centers[j * size + k] - centers[i * size + j];
                if denominator < tol {
                    skipped += 1;
                    continue;
                }
                let ratio = numerator / denominator;
                if best.map_or(true, |b| ratio > b) {
                    best = Some(ratio);
                }
            }
        }
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} center triples with vanishing denominators");
    }
    best.ok_or_else(|| {
        Error::invalid("no center triple with a usable denominator; centers are collinear")
    })
}

/// Fraction of patches left outside the best one-to-one matching between
/// predicted clusters and truth labels. The matching maximizes agreement
/// over all cluster-to-label assignments.
///
/// `clusters` must partition `0..truth.len()` exactly.
pub fn misclassification_rate(clusters: &[Vec<usize>], truth: &[usize]) -> Result<f64> {
    let total = truth.len();
    if total == 0 {
        return Err(Error::invalid("cannot score an empty dataset"));
    }
    let mut seen = vec![false; total];
    for cluster in clusters {
        for &i in cluster {
            if i >= total {
                return Err(Error::invalid(format!(
                    "cluster member {i} out of range for {total} patches"
                )));
            }
            if seen[i] {
                return Err(Error::invalid(format!("patch {i} appears in two clusters")));
            }
            seen[i] = true;
        }
    }
    if seen.iter().any(|&s| !s) {
        return Err(Error::invalid("clusters do not cover every patch"));
    }

    let mut labels: Vec<usize> = truth.to_vec();
    labels.sort_unstable();
    labels.dedup();
    let label_of = |t: usize| labels.binary_search(&t).expect("label is present");

    let rows = clusters.len();
    let cols = labels.len();
    let mut counts = vec![0i64; rows * cols];
    for (c, cluster) in clusters.iter().enumerate() {
        for &i in cluster {
            counts[c * cols + label_of(truth[i])] += 1;
        }
    }
    let matched = max_assignment_value(&counts, rows, cols);
    Ok(1.0 - matched as f64 / total as f64)
}

/// Best achievable total of a one-per-row, one-per-column selection from a
/// nonnegative score table (rows and columns may differ in number).
fn max_assignment_value(scores: &[i64], rows: usize, cols: usize) -> i64 {
    let n = rows.max(cols);
    let peak = scores.iter().copied().max().unwrap_or(0);
    // Square min-cost matrix; padding cells cost the peak (score zero).
    let cost = |i: usize, j: usize| -> i64 {
        if i < rows && j < cols {
            peak - scores[i * cols + j]
        } else {
            peak
        }
    };

    // Hungarian algorithm with row/column potentials.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut matched_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_col[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_col[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_col[j0] = matched_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut value = 0i64;
    for j in 1..=n {
        let i = matched_col[j];
        if i >= 1 && i - 1 < rows && j - 1 < cols {
            value += scores[(i - 1) * cols + (j - 1)];
        }
    }
    value
}
