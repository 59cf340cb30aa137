//! SVG rendering of clustered datasets: one polyline path per patch,
//! colored by cluster from a fixed 16-color palette.

use std::fmt::Write as _;

use primcluster::error::Result;
use primcluster::geometry::{rescale_to_unit_box, LabeledDataset, Patch};

/// Fixed stroke palette; cluster `i` uses entry `i % 16`.
pub const PALETTE: [&str; 16] = [
    "#e6194b", "#3cb44b", "#ffe119", "#4363d8", "#f58231", "#911eb4", "#46f0f0", "#f032e6",
    "#bcf60c", "#008080", "#9a6324", "#800000", "#808000", "#000075", "#f58ab9", "#5c3c92",
];

/// Stroke for patches outside every cluster (rejected, or an empty result).
pub const UNCLUSTERED: &str = "#808080";

const CURVE_POINTS: usize = 64;
const EDGE_POINTS: usize = 16;

/// Renders the dataset with one path per patch. `clusters` holds patch
/// indices per cluster in cluster-id order; patches in no cluster are drawn
/// gray. The dataset is rescaled into the unit box and the view box fits
/// `[-1, 1]^2` with a 5% margin; 3D patches are projected orthographically
/// onto XY and painted back to front by mean depth.
pub fn render_svg(dataset: &LabeledDataset<f64>, clusters: &[Vec<usize>]) -> Result<String> {
    let (rescaled, _) = rescale_to_unit_box(dataset)?;
    let mut color_of: Vec<&str> = vec![UNCLUSTERED; rescaled.len()];
    for (id, cluster) in clusters.iter().enumerate() {
        for &patch in cluster {
            if patch < color_of.len() {
                color_of[patch] = PALETTE[id % PALETTE.len()];
            }
        }
    }

    let mut strokes = Vec::with_capacity(rescaled.len());
    for (i, patch) in rescaled.patches.iter().enumerate() {
        let points = outline(patch)?;
        let depth = points.iter().map(|p| p.get(2).copied().unwrap_or(0.0)).sum::<f64>()
            / points.len() as f64;
        strokes.push((depth, points, color_of[i]));
    }
    // Back to front so nearer 3D patches paint over farther ones; 2D depths
    // are all zero and the stable sort keeps dataset order.
    strokes.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut svg = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-1.05 -1.05 2.1 2.1\">\n",
    );
    for (_, points, color) in &strokes {
        svg.push_str("<path d=\"");
        for (k, p) in points.iter().enumerate() {
            // SVG y grows downward; mirror to keep the model upright.
            let _ = write!(svg, "{}{:.4},{:.4}", if k == 0 { "M" } else { " L" }, p[0], -p[1]);
        }
        let _ = writeln!(
            svg,
            "\" fill=\"none\" stroke=\"{color}\" stroke-width=\"0.015\" stroke-linecap=\"round\"/>"
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Polyline for one patch: 64 points along a curve, or the boundary loop of
/// a surface patch (16 points per edge).
fn outline(patch: &Patch<f64>) -> Result<Vec<Vec<f64>>> {
    let domain = patch.domain();
    if patch.param_dim() == 1 {
        let (a, b) = domain[0];
        (0..CURVE_POINTS)
            .map(|k| {
                let t = a + (b - a) * k as f64 / (CURVE_POINTS - 1) as f64;
                patch.evaluate(&[t])
            })
            .collect()
    } else {
        let (ua, ub) = domain[0];
        let (va, vb) = domain[1];
        let lerp = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / EDGE_POINTS as f64;
        let mut params = Vec::with_capacity(4 * EDGE_POINTS + 1);
        for k in 0..EDGE_POINTS {
            params.push([lerp(ua, ub, k), va]);
        }
        for k in 0..EDGE_POINTS {
            params.push([ub, lerp(va, vb, k)]);
        }
        for k in 0..EDGE_POINTS {
            params.push([lerp(ub, ua, k), vb]);
        }
        for k in 0..EDGE_POINTS {
            params.push([ua, lerp(vb, va, k)]);
        }
        params.push([ua, va]);
        params.iter().map(|p| patch.evaluate(p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use primcluster::geometry::{
        generate_gear, generate_quadric_surfaces, GearMode, QuadricKind,
    };

    fn stroke_colors(svg: &str) -> Vec<String> {
        svg.lines()
            .filter(|l| l.starts_with("<path "))
            .map(|l| {
                let start = l.find("stroke=\"").unwrap() + 8;
                l[start..start + 7].to_string()
            })
            .collect()
    }

    #[test]
    fn cluster_count_sets_the_color_count() {
        let dataset = generate_gear::<f64>(2, GearMode::Exact).unwrap();
        let clusters: Vec<Vec<usize>> = vec![(0..4).collect(), (4..dataset.len()).collect()];
        let svg = render_svg(&dataset, &clusters).unwrap();
        let mut colors = stroke_colors(&svg);
        assert_eq!(colors.len(), dataset.len());
        colors.sort();
        colors.dedup();
        assert_eq!(colors.len(), 2);
        assert!(!colors.iter().any(|c| c == UNCLUSTERED));
    }

    #[test]
    fn empty_result_draws_everything_gray() {
        let dataset = generate_gear::<f64>(2, GearMode::Exact).unwrap();
        let svg = render_svg(&dataset, &[]).unwrap();
        let colors = stroke_colors(&svg);
        assert_eq!(colors.len(), dataset.len());
        assert!(colors.iter().all(|c| c == UNCLUSTERED));
    }

    #[test]
    fn path_count_matches_patch_count_and_viewbox_is_padded() {
        let dataset = generate_gear::<f64>(8, GearMode::Exact).unwrap();
        let svg = render_svg(&dataset, &[(0..33).collect()]).unwrap();
        assert_eq!(svg.matches("<path ").count(), 33);
        assert!(svg.contains("viewBox=\"-1.05 -1.05 2.1 2.1\""));
    }

    #[test]
    fn surface_patches_render_closed_boundaries() {
        let dataset =
            generate_quadric_surfaces::<f64>(&[QuadricKind::Sphere], 1, 5).unwrap();
        let svg = render_svg(&dataset, &[(0..dataset.len()).collect()]).unwrap();
        assert_eq!(svg.matches("<path ").count(), dataset.len());
        // Coordinates stay inside the padded view box.
        for line in svg.lines().filter(|l| l.starts_with("<path ")) {
            let d_start = line.find("d=\"").unwrap() + 3;
            let d_end = line[d_start..].find('"').unwrap() + d_start;
            for token in line[d_start..d_end].split(['M', 'L', ',', ' ']) {
                if let Ok(v) = token.parse::<f64>() {
                    assert!(v.abs() <= 1.05 + 1e-9, "{v}");
                }
            }
        }
    }

    #[test]
    fn palette_cycles_after_sixteen_clusters() {
        let dataset = generate_gear::<f64>(8, GearMode::Exact).unwrap();
        let clusters: Vec<Vec<usize>> = (0..33).map(|i| vec![i]).collect();
        let svg = render_svg(&dataset, &clusters).unwrap();
        let colors = stroke_colors(&svg);
        // Patches 0 and 16 share a palette slot, 0 and 1 do not.
        assert_eq!(colors.len(), 33);
        let by_patch = |i: usize| {
            // Strokes are depth-sorted, but 2D keeps dataset order.
            colors[i].clone()
        };
        assert_eq!(by_patch(0), by_patch(16));
        assert_ne!(by_patch(0), by_patch(1));
    }
}
