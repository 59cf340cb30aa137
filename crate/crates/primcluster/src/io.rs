//! JSON interchange for datasets, calibration profiles, implicitization
//! results and clustering results.
//!
//! Writers are hand-rolled so every float is serialized with 17 significant
//! digits (`{:.16e}`), which round-trips `f64` exactly; readers go through
//! serde and accept unknown fields. Non-finite floats (possible in merge
//! traces when a pairwise fit fails) are written as `null` and read back as
//! positive infinity.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::calibrate::CalibrationProfile;
use crate::error::{Error, Result};
use crate::geometry::{LabeledDataset, Patch};
use crate::implicitize::ImplicitResult;
use crate::pipeline::{ClusterPartition, ClusteringMode};
use crate::scalar::Scalar;

/// Serializes one float with 17 significant digits; non-finite values become
/// `null`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn float_list(values: impl IntoIterator<Item = f64>) -> String {
    let mut s = String::from("[");
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&format_float(v));
    }
    s.push(']');
    s
}

fn int_list(values: &[usize]) -> String {
    let mut s = String::from("[");
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{v}");
    }
    s.push(']');
    s
}

// ---------------------------------------------------------------------------
// Dataset files

/// Renders a dataset to the documented JSON schema. `truth_degrees` is an
/// extension field, emitted only when present.
pub fn dataset_to_json<S: Scalar>(dataset: &LabeledDataset<S>) -> String {
    let mut s = String::new();
    let _ = write!(s, "{{\n\"ambient_dim\": {},\n\"patches\": [", dataset.ambient_dim);
    for (pi, patch) in dataset.patches.iter().enumerate() {
        if pi > 0 {
            s.push(',');
        }
        s.push_str("\n{");
        let _ = write!(s, "\"param_dim\": {}, \"degree\": {}, ", patch.param_dim(), int_list(patch.degree()));
        s.push_str("\"domain\": [");
        for (i, &(lo, hi)) in patch.domain().iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "[{},{}]", format_float(lo.to_f64_lossy()), format_float(hi.to_f64_lossy()));
        }
        s.push_str("], \"control_points\": [");
        let dim = patch.ambient_dim();
        for (i, point) in patch.control_points().chunks(dim).enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&float_list(point.iter().map(|c| c.to_f64_lossy())));
        }
        s.push(']');
        if let Some(weights) = patch.weights() {
            let _ = write!(s, ", \"weights\": {}", float_list(weights.iter().map(|w| w.to_f64_lossy())));
        }
        s.push('}');
    }
    s.push_str("\n]");
    if let Some(labels) = &dataset.truth_labels {
        let _ = write!(s, ",\n\"truth_labels\": {}", int_list(labels));
    }
    if let Some(degrees) = &dataset.truth_degrees {
        let _ = write!(s, ",\n\"truth_degrees\": {}", int_list(degrees));
    }
    s.push_str("\n}\n");
    s
}

#[derive(Deserialize)]
struct PatchDto {
    param_dim: usize,
    degree: Vec<usize>,
    domain: Vec<[f64; 2]>,
    control_points: Vec<Vec<f64>>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct DatasetDto {
    ambient_dim: usize,
    patches: Vec<PatchDto>,
    #[serde(default)]
    truth_labels: Option<Vec<usize>>,
    #[serde(default)]
    truth_degrees: Option<Vec<usize>>,
}

/// Parses a dataset from its JSON form, validating the patch geometry.
pub fn dataset_from_json(text: &str) -> Result<LabeledDataset<f64>> {
    let dto: DatasetDto = serde_json::from_str(text)?;
    let mut patches = Vec::with_capacity(dto.patches.len());
    for (i, p) in dto.patches.into_iter().enumerate() {
        if p.degree.len() != p.param_dim {
            return Err(Error::Schema(format!(
                "patch {i}: degree has {} entries for param_dim {}",
                p.degree.len(),
                p.param_dim
            )));
        }
        let mut control = Vec::with_capacity(p.control_points.len() * dto.ambient_dim);
        for (j, point) in p.control_points.iter().enumerate() {
            if point.len() != dto.ambient_dim {
                return Err(Error::Schema(format!(
                    "patch {i}, control point {j}: {} coordinates for ambient_dim {}",
                    point.len(),
                    dto.ambient_dim
                )));
            }
            control.extend_from_slice(point);
        }
        let domain = p.domain.iter().map(|&[lo, hi]| (lo, hi)).collect();
        patches.push(Patch::new(dto.ambient_dim, p.degree, domain, control, p.weights)?);
    }
    LabeledDataset::new(dto.ambient_dim, patches, dto.truth_labels, dto.truth_degrees)
}

/// Writes a dataset file.
pub fn write_dataset<S: Scalar>(path: impl AsRef<Path>, dataset: &LabeledDataset<S>) -> Result<()> {
    std::fs::write(path, dataset_to_json(dataset))?;
    Ok(())
}

/// Reads a dataset file.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<LabeledDataset<f64>> {
    dataset_from_json(&std::fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Calibration profiles

/// Renders a profile to JSON. `ambient_dim` and `train_noise` extend the
/// base schema so a profile file is self-describing.
pub fn profile_to_json<S: Scalar>(profile: &CalibrationProfile<S>) -> String {
    let mut s = String::from("{\n");
    let _ = write!(s, "\"m_cap\": {},\n\"xi\": {{", profile.m_cap);
    for (i, (degree, xi)) in profile.xi.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "\"{degree}\": {}", format_float(xi.to_f64_lossy()));
    }
    let _ = write!(
        s,
        "}},\n\"eta\": {},\n\"lambda\": {},\n\"seed\": {},\n\"Q1\": {},\n\"Q2\": {},\n\"P3\": {},\n\"ambient_dim\": {},\n\"train_noise\": {}\n}}\n",
        format_float(profile.eta.to_f64_lossy()),
        format_float(profile.lambda.to_f64_lossy()),
        profile.seed,
        profile.q1,
        profile.q2,
        profile.p3,
        profile.ambient_dim,
        format_float(profile.train_noise.to_f64_lossy()),
    );
    s
}

#[derive(Deserialize)]
struct ProfileDto {
    m_cap: usize,
    xi: BTreeMap<String, f64>,
    eta: f64,
    lambda: f64,
    seed: u64,
    #[serde(rename = "Q1")]
    q1: usize,
    #[serde(rename = "Q2")]
    q2: usize,
    #[serde(rename = "P3")]
    p3: usize,
    #[serde(default = "default_ambient_dim")]
    ambient_dim: usize,
    #[serde(default)]
    train_noise: f64,
}

fn default_ambient_dim() -> usize {
    2
}

/// Parses a profile from its JSON form.
pub fn profile_from_json(text: &str) -> Result<CalibrationProfile<f64>> {
    let dto: ProfileDto = serde_json::from_str(text)?;
    let mut xi = BTreeMap::new();
    for (key, value) in dto.xi {
        let degree: usize = key
            .parse()
            .map_err(|_| Error::Schema(format!("xi key {key:?} is not a degree")))?;
        xi.insert(degree, value);
    }
    let profile = CalibrationProfile {
        ambient_dim: dto.ambient_dim,
        m_cap: dto.m_cap,
        xi,
        eta: dto.eta,
        lambda: dto.lambda,
        seed: dto.seed,
        q1: dto.q1,
        q2: dto.q2,
        p3: dto.p3,
        train_noise: dto.train_noise,
    };
    profile.validate()?;
    Ok(profile)
}

/// Writes a profile file.
pub fn write_profile<S: Scalar>(path: impl AsRef<Path>, profile: &CalibrationProfile<S>) -> Result<()> {
    std::fs::write(path, profile_to_json(profile))?;
    Ok(())
}

/// Reads a profile file.
pub fn read_profile(path: impl AsRef<Path>) -> Result<CalibrationProfile<f64>> {
    profile_from_json(&std::fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Implicitization results

/// Renders an implicitization result to JSON.
pub fn implicit_result_to_json<S: Scalar>(result: &ImplicitResult<S>) -> String {
    format!(
        "{{\n\"degree\": {},\n\"basis_order\": \"graded_lex\",\n\"coefficients\": {},\n\"sigma_min\": {}\n}}\n",
        result.degree,
        float_list(result.coefficients.iter().map(|c| c.to_f64_lossy())),
        format_float(result.sigma_min.to_f64_lossy()),
    )
}

/// Plain parsed form of an implicitization result file.
#[derive(Debug, Clone, Deserialize)]
pub struct ImplicitResultFile {
    pub degree: usize,
    pub basis_order: String,
    pub coefficients: Vec<f64>,
    pub sigma_min: f64,
}

/// Parses an implicitization result, checking the pinned basis order.
pub fn implicit_result_from_json(text: &str) -> Result<ImplicitResultFile> {
    let dto: ImplicitResultFile = serde_json::from_str(text)?;
    if dto.basis_order != "graded_lex" {
        return Err(Error::Schema(format!(
            "unsupported basis_order {:?}; this tool pins \"graded_lex\"",
            dto.basis_order
        )));
    }
    Ok(dto)
}

// ---------------------------------------------------------------------------
// Clustering results

/// Renders a clustering result to JSON. Extensions over the base schema:
/// trace entries carry `degree` and `height`, and the top level gains
/// `cluster_errors` plus, when truth labels were available,
/// `misclassification`.
pub fn result_to_json<S: Scalar>(partition: &ClusterPartition<S>) -> String {
    let mut s = String::from("{\n\"degrees\": {");
    for (i, (patch, degree)) in partition.degrees.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "\"{patch}\": {degree}");
    }
    s.push_str("},\n\"clusters\": [");
    for (i, cluster) in partition.clusters().iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&int_list(cluster));
    }
    s.push_str("],\n\"merge_trace\": [");
    let mut first = true;
    for class in &partition.classes {
        for step in &class.steps {
            if !first {
                s.push(',');
            }
            first = false;
            let _ = write!(
                s,
                "\n{{\"k\": {}, \"degree\": {}, \"merged\": [{},{}], \"height\": {}, \"error\": {}}}",
                step.k,
                class.degree,
                step.merged.0,
                step.merged.1,
                format_float(step.height.to_f64_lossy()),
                format_float(step.error.to_f64_lossy()),
            );
        }
    }
    let _ = write!(
        s,
        "\n],\n\"mode\": \"{}\",\n\"rejected\": {}",
        partition.mode.as_str(),
        int_list(&partition.rejected)
    );
    let errors: Vec<f64> = partition
        .classes
        .iter()
        .flat_map(|c| c.errors.iter().map(|e| e.to_f64_lossy()))
        .collect();
    let _ = write!(s, ",\n\"cluster_errors\": {}", float_list(errors));
    if let Some(rate) = partition.misclassification {
        let _ = write!(s, ",\n\"misclassification\": {}", format_float(rate));
    }
    s.push_str("\n}\n");
    s
}

fn null_as_infinity<'de, D>(de: D) -> std::result::Result<f64, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let v: Option<f64> = Option::deserialize(de)?;
    Ok(v.unwrap_or(f64::INFINITY))
}

/// One parsed merge-trace entry.
#[derive(Debug, Clone, Deserialize)]
pub struct TraceEntryFile {
    pub k: usize,
    #[serde(default)]
    pub degree: Option<usize>,
    pub merged: (usize, usize),
    #[serde(default, deserialize_with = "null_as_infinity")]
    pub height: f64,
    #[serde(deserialize_with = "null_as_infinity")]
    pub error: f64,
}

/// Plain parsed form of a clustering result file.
#[derive(Debug, Clone, Deserialize)]
pub struct ResultFile {
    pub degrees: BTreeMap<String, usize>,
    pub clusters: Vec<Vec<usize>>,
    pub merge_trace: Vec<TraceEntryFile>,
    pub mode: String,
    pub rejected: Vec<usize>,
    #[serde(default)]
    pub cluster_errors: Option<Vec<f64>>,
    #[serde(default)]
    pub misclassification: Option<f64>,
}

impl ResultFile {
    /// Degrees map with numeric patch indices.
    pub fn degree_map(&self) -> Result<BTreeMap<usize, usize>> {
        let mut out = BTreeMap::new();
        for (key, &degree) in &self.degrees {
            let patch: usize = key
                .parse()
                .map_err(|_| Error::Schema(format!("degrees key {key:?} is not a patch index")))?;
            out.insert(patch, degree);
        }
        Ok(out)
    }

    /// Parsed clustering mode.
    pub fn mode(&self) -> Result<ClusteringMode> {
        ClusteringMode::parse(&self.mode)
    }
}

/// Parses a clustering result from its JSON form.
pub fn result_from_json(text: &str) -> Result<ResultFile> {
    let dto: ResultFile = serde_json::from_str(text)?;
    dto.mode()?;
    Ok(dto)
}

/// Writes a clustering result file.
pub fn write_result<S: Scalar>(path: impl AsRef<Path>, partition: &ClusterPartition<S>) -> Result<()> {
    std::fs::write(path, result_to_json(partition))?;
    Ok(())
}

/// Reads a clustering result file.
pub fn read_result(path: impl AsRef<Path>) -> Result<ResultFile> {
    result_from_json(&std::fs::read_to_string(path)?)
}
