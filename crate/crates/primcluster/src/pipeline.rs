//! End-to-end clustering: rescale, sample, split by implicit degree, then
//! agglomerate each degree class and stitch the results into one partition.

use std::collections::BTreeMap;

use crate::calibrate::CalibrationProfile;
use crate::cluster::{
    agglomerate, assemble_dissimilarities, misclassification_rate, partition_by_degree,
    representation_error, LinkageAlgorithm, MergeStep, StopRule,
};
use crate::error::{Error, Result};
use crate::geometry::{rescale_to_unit_box, LabeledDataset, SampledDataset};
use crate::scalar::Scalar;

/// Stopping criterion requested for the merge loops. Forced cluster counts
/// (see [`PipelineOptions::clusters_per_degree`]) bypass it per class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusteringMode {
    /// Stop at the last partition whose representation error stays within eta.
    Absolute,
    /// Run to a single cluster and cut at the largest error ratio jump.
    Relative,
}

impl ClusteringMode {
    /// Stable name used in result files and reports.
    pub fn as_str(self) -> &'static str {
        match self {
            ClusteringMode::Absolute => "absolute",
            ClusteringMode::Relative => "relative",
        }
    }

    /// Inverse of [`ClusteringMode::as_str`].
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "absolute" => Ok(ClusteringMode::Absolute),
            "relative" => Ok(ClusteringMode::Relative),
            other => Err(Error::invalid(format!(
                "unknown clustering mode {other:?}; expected \"absolute\" or \"relative\""
            ))),
        }
    }
}

/// Knobs for one pipeline run. Defaults mirror the CLI defaults: relative
/// mode, profile-supplied lambda and eta, naive linkage search.
#[derive(Debug, Clone)]
pub struct PipelineOptions<S> {
    pub mode: ClusteringMode,
    /// Per-axis sample count; `None` picks the per-patch default for the
    /// profile's degree cap.
    pub samples_per_dim: Option<usize>,
    /// Overrides the profile's center-distance weight when set.
    pub lambda: Option<S>,
    /// Overrides the profile's absolute-mode threshold when set.
    pub eta: Option<S>,
    /// Forced final cluster count per implicit degree; classes listed here
    /// skip the stopping criterion entirely.
    pub clusters_per_degree: BTreeMap<usize, usize>,
    pub algorithm: LinkageAlgorithm,
}

impl<S: Scalar> Default for PipelineOptions<S> {
    fn default() -> Self {
        Self {
            mode: ClusteringMode::Relative,
            samples_per_dim: None,
            lambda: None,
            eta: None,
            clusters_per_degree: BTreeMap::new(),
            algorithm: LinkageAlgorithm::Naive,
        }
    }
}

/// Outcome of one degree class: which patches it holds, how they merged,
/// and where the merge sequence was cut.
#[derive(Debug, Clone)]
pub struct ClassOutcome<S> {
    pub degree: usize,
    /// Global patch indices in this class, ascending.
    pub members: Vec<usize>,
    /// Clusters as global patch indices, each ascending; clusters ordered by
    /// their smallest member.
    pub clusters: Vec<Vec<usize>>,
    /// Global cluster id per cluster, parallel to `clusters`.
    pub cluster_ids: Vec<usize>,
    /// Final representation error (max within-cluster d0) per cluster.
    pub errors: Vec<S>,
    /// Full merge trace; `merged` slots are rewritten to global patch
    /// indices (a cluster is named by its smallest member).
    pub steps: Vec<MergeStep<S>>,
    /// Number of leading steps the stopping rule accepted.
    pub cut: usize,
}

/// Partition of the whole dataset: a cluster id per patch, the per-degree
/// sub-partitions behind it, and the quarantined patches whose implicit
/// degree could not be estimated.
#[derive(Debug, Clone)]
pub struct ClusterPartition<S> {
    /// Total number of patches (assignment length).
    pub size: usize,
    /// Cluster id per patch; `None` marks a rejected patch. Ids are
    /// contiguous from 0 across all degree classes.
    pub assignment: Vec<Option<usize>>,
    pub num_clusters: usize,
    /// Estimated implicit degree per non-rejected patch.
    pub degrees: BTreeMap<usize, usize>,
    /// Per-degree outcomes, ascending degree.
    pub classes: Vec<ClassOutcome<S>>,
    /// Patches whose degree estimation overflowed the cap, ascending.
    pub rejected: Vec<usize>,
    pub mode: ClusteringMode,
    /// Misclassification rate against the dataset truth labels, when they
    /// were present; rejected patches count as singleton clusters.
    pub misclassification: Option<f64>,
}

impl<S: Scalar> ClusterPartition<S> {
    /// All clusters in cluster-id order, as global patch indices.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters];
        for class in &self.classes {
            for (cluster, &id) in class.clusters.iter().zip(&class.cluster_ids) {
                out[id] = cluster.clone();
            }
        }
        out
    }

    /// Clusters plus one singleton per rejected patch; a full cover of the
    /// dataset, suitable for scoring against truth labels.
    pub fn cover_with_rejects(&self) -> Vec<Vec<usize>> {
        let mut out = self.clusters();
        out.extend(self.rejected.iter().map(|&i| vec![i]));
        out
    }
}

/// Clusters an already-sampled dataset. Entry point for callers that perturb
/// or otherwise transform the clouds between sampling and clustering; the
/// clouds are expected to live in the unit box.
pub fn cluster_sampled<S: Scalar>(
    sampled: &SampledDataset<S>,
    profile: &CalibrationProfile<S>,
    options: &PipelineOptions<S>,
) -> Result<ClusterPartition<S>> {
    profile.validate()?;
    if sampled.ambient_dim != profile.ambient_dim {
        return Err(Error::invalid(format!(
            "dataset is {}-dimensional but the profile was calibrated for dimension {}",
            sampled.ambient_dim, profile.ambient_dim
        )));
    }
    let lambda = options.lambda.unwrap_or(profile.lambda);
    if !(lambda >= S::zero()) {
        return Err(Error::invalid("lambda must be nonnegative"));
    }
    let eta = options.eta.unwrap_or(profile.eta);

    let split = partition_by_degree(&sampled.clouds, profile)?;
    for (&degree, &count) in &options.clusters_per_degree {
        if !split.classes.contains_key(&degree) {
            log::warn!(
                "forced cluster count {count} for degree {degree} ignored: no patch estimated at that degree"
            );
        }
    }

    let mut classes = Vec::with_capacity(split.classes.len());
    let mut assignment: Vec<Option<usize>> = vec![None; sampled.len()];
    let mut degrees = BTreeMap::new();
    let mut next_id = 0usize;
    for (&degree, members) in &split.classes {
        let class_clouds: Vec<_> = members.iter().map(|&i| sampled.clouds[i].clone()).collect();
        let matrices = assemble_dissimilarities(&class_clouds, degree, lambda)?;
        let rule = match options.clusters_per_degree.get(&degree) {
            Some(&count) => StopRule::ForcedCount(count),
            None => match options.mode {
                ClusteringMode::Absolute => StopRule::Absolute { eta },
                ClusteringMode::Relative => StopRule::Relative,
            },
        };
        let run = agglomerate(&matrices, rule, options.algorithm)?;

        let clusters: Vec<Vec<usize>> = run
            .clusters
            .iter()
            .map(|c| c.iter().map(|&local| members[local]).collect())
            .collect();
        let errors: Vec<S> = run
            .clusters
            .iter()
            .map(|c| representation_error(std::slice::from_ref(c), &matrices))
            .collect();
        let steps: Vec<MergeStep<S>> = run
            .steps
            .iter()
            .map(|s| MergeStep {
                k: s.k,
                merged: (members[s.merged.0], members[s.merged.1]),
                height: s.height,
                error: s.error,
            })
            .collect();

        let mut cluster_ids = Vec::with_capacity(clusters.len());
        for cluster in &clusters {
            for &patch in cluster {
                assignment[patch] = Some(next_id);
            }
            cluster_ids.push(next_id);
            next_id += 1;
        }
        for &patch in members {
            degrees.insert(patch, degree);
        }
        classes.push(ClassOutcome {
            degree,
            members: members.clone(),
            clusters,
            cluster_ids,
            errors,
            steps,
            cut: run.cut,
        });
    }

    let mut partition = ClusterPartition {
        size: sampled.len(),
        assignment,
        num_clusters: next_id,
        degrees,
        classes,
        rejected: split.rejected,
        mode: options.mode,
        misclassification: None,
    };
    if let Some(truth) = &sampled.truth_labels {
        partition.misclassification =
            Some(misclassification_rate(&partition.cover_with_rejects(), truth)?);
    }
    Ok(partition)
}

/// Full pipeline on raw patches: rescale the dataset into the unit box,
/// sample every patch, and cluster the clouds.
pub fn run_pipeline<S: Scalar>(
    dataset: &LabeledDataset<S>,
    profile: &CalibrationProfile<S>,
    options: &PipelineOptions<S>,
) -> Result<ClusterPartition<S>> {
    let (rescaled, _) = rescale_to_unit_box(dataset)?;
    let sampled = rescaled.sample(options.samples_per_dim, profile.m_cap)?;
    cluster_sampled(&sampled, profile, options)
}
