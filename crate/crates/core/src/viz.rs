//! Superimposed-path density plots and dendrogram rendering.
//!
//! Output is self-contained SVG with no external assets, plus a raw grid CSV
//! so other tools can re-render. Rendering is deterministic: identical inputs
//! produce byte-identical documents.

use std::fmt::Write as _;
use std::io::Write;

use thiserror::Error;

use crate::cluster::Dendrogram;
use crate::features::ForumFeatures;
use crate::num::Real;
use crate::paths::ForumArchive;

#[derive(Debug, Error)]
pub enum VizError {
    #[error("archive is empty")]
    EmptyArchive,
    #[error("density grid is empty")]
    EmptyGrid,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Per lattice point, the number of distinct user paths passing through it.
/// Paths are aligned at the origin, not in real time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathDensityGrid {
    extent: usize,
    /// Row-major counts, index = y * (extent + 1) + x.
    counts: Vec<u32>,
    users: usize,
}

impl PathDensityGrid {
    pub fn extent(&self) -> usize {
        self.extent
    }

    pub fn width(&self) -> usize {
        self.extent + 1
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn count_at(&self, x: u32, y: u32) -> u32 {
        self.counts[y as usize * self.width() + x as usize]
    }

    pub fn max_count(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }
}

/// Count, per lattice point, the users whose path visits it. A path never
/// revisits a point (every step advances), so each user contributes at most
/// one count per point.
pub fn path_density_grid(archive: &ForumArchive) -> Result<PathDensityGrid, VizError> {
    if archive.is_empty() {
        return Err(VizError::EmptyArchive);
    }
    let extent = archive
        .users
        .values()
        .flat_map(|h| h.path.points.iter())
        .map(|p| p.x.max(p.y) as usize)
        .max()
        .unwrap_or(0);
    let width = extent + 1;
    let mut counts = vec![0u32; width * width];
    for history in archive.users.values() {
        for p in &history.path.points {
            counts[p.y as usize * width + p.x as usize] += 1;
        }
    }
    Ok(PathDensityGrid {
        extent,
        counts,
        users: archive.len(),
    })
}

/// Rendering options for the forum plot.
#[derive(Debug, Clone, Copy)]
pub struct PlotOptions {
    /// Log color scale (default); linear when false.
    pub log_scale: bool,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self { log_scale: true }
    }
}

const PLOT_SIZE: f64 = 560.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_TOP: f64 = 46.0;
const MARGIN_BOTTOM: f64 = 64.0;
const MARGIN_RIGHT: f64 = 150.0;

fn heat_color(t: f64) -> String {
    // white-blue ramp, dark = dense
    let lo = (247.0, 251.0, 255.0);
    let hi = (8.0, 48.0, 107.0);
    let mix = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(lo.0, hi.0),
        mix(lo.1, hi.1),
        mix(lo.2, hi.2)
    )
}

/// Render the superimposed-path density plot with the baseline ray (dashed),
/// the slope ray (solid), and a dot at the average path length along the
/// slope ray (at x = length / (1 + slope), since each path step moves one
/// lattice unit).
pub fn render_forum_plot<F: Real>(
    grid: &PathDensityGrid,
    features: &ForumFeatures<F>,
    options: PlotOptions,
) -> Result<String, VizError> {
    if grid.users == 0 || grid.counts.iter().all(|&c| c == 0) {
        return Err(VizError::EmptyGrid);
    }
    let extent = grid.extent().max(1) as f64;
    let cell = PLOT_SIZE / (extent + 1.0);
    let width = MARGIN_LEFT + PLOT_SIZE + MARGIN_RIGHT;
    let height = MARGIN_TOP + PLOT_SIZE + MARGIN_BOTTOM;
    // lattice (x, y) -> svg coordinates of the cell's lower-left corner
    let sx = |x: f64| MARGIN_LEFT + x * cell;
    let sy = |y: f64| MARGIN_TOP + PLOT_SIZE - y * cell;

    let max_count = grid.max_count() as f64;
    let intensity = |c: u32| -> f64 {
        if options.log_scale {
            (1.0 + c as f64).ln() / (1.0 + max_count).ln()
        } else {
            c as f64 / max_count
        }
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{width:.0}" height="{height:.0}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="16" fill="black">forum: {}</text>"#,
        MARGIN_LEFT,
        features.forum_id
    );

    // density cells
    for y in 0..grid.width() as u32 {
        for x in 0..grid.width() as u32 {
            let c = grid.count_at(x, y);
            if c == 0 {
                continue;
            }
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                sx(x as f64),
                sy(y as f64) - cell,
                cell,
                cell,
                heat_color(intensity(c))
            );
        }
    }

    // plot frame
    let _ = writeln!(
        svg,
        r#"<rect x="{:.2}" y="{:.2}" width="{PLOT_SIZE:.2}" height="{PLOT_SIZE:.2}" fill="none" stroke="black" stroke-width="1"/>"#,
        MARGIN_LEFT, MARGIN_TOP
    );

    // axis ticks and labels
    let step = tick_step(extent as usize);
    let mut tick = 0usize;
    while tick <= extent as usize {
        let tx = sx(tick as f64 + 0.5);
        let ty = sy(tick as f64 + 0.5);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="black" text-anchor="middle">{}</text>"#,
            tx,
            MARGIN_TOP + PLOT_SIZE + 16.0,
            tick
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="black" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 6.0,
            ty + 4.0,
            tick
        );
        tick += step;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" fill="black" text-anchor="middle">posts</text>"#,
        MARGIN_LEFT + PLOT_SIZE / 2.0,
        MARGIN_TOP + PLOT_SIZE + 40.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" font-family="sans-serif" font-size="13" fill="black" transform="rotate(-90 18 {:.2})" text-anchor="middle">replies received</text>"#,
        MARGIN_TOP + PLOT_SIZE / 2.0,
        MARGIN_TOP + PLOT_SIZE / 2.0
    );

    // rays from the origin cell center, clipped to the square
    let baseline = features.baseline.to_f64().unwrap_or(0.0);
    let slope = features.slope.to_f64().unwrap_or(0.0);
    let clip_ray = |beta: f64| -> (f64, f64) {
        if beta <= 1.0 {
            (extent, beta * extent)
        } else {
            (extent / beta, extent)
        }
    };
    let (bx, by) = clip_ray(baseline);
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="red" stroke-width="2" stroke-dasharray="8 5"/>"#,
        sx(0.5),
        sy(0.5),
        sx(bx + 0.5),
        sy(by + 0.5)
    );
    let (mx, my) = clip_ray(slope);
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="red" stroke-width="2"/>"#,
        sx(0.5),
        sy(0.5),
        sx(mx + 0.5),
        sy(my + 0.5)
    );

    // mean-length marker on the slope ray
    let length = features.length.to_f64().unwrap_or(0.0);
    let dot_x = length / (1.0 + slope);
    let dot_y = slope * dot_x;
    if dot_x <= extent && dot_y <= extent {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="6" fill="blue"/>"#,
            sx(dot_x + 0.5),
            sy(dot_y + 0.5)
        );
    } else {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="blue">mean length {:.2} beyond plot</text>"#,
            MARGIN_LEFT + 8.0,
            MARGIN_TOP + 16.0,
            length
        );
    }
    if features.degenerate_slope {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" fill="darkred">warning: degenerate slope (no replies observed)</text>"#,
            MARGIN_LEFT + 8.0,
            MARGIN_TOP + 32.0
        );
    }

    // legend
    let lx = MARGIN_LEFT + PLOT_SIZE + 16.0;
    let mut ly = MARGIN_TOP + 10.0;
    let _ = writeln!(
        svg,
        r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="red" stroke-width="2" stroke-dasharray="8 5"/>"#,
        lx + 34.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="black">baseline {:.3}</text>"#,
        lx + 40.0,
        ly + 4.0,
        baseline
    );
    ly += 20.0;
    let _ = writeln!(
        svg,
        r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="red" stroke-width="2"/>"#,
        lx + 34.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="black">slope {:.3}</text>"#,
        lx + 40.0,
        ly + 4.0,
        slope
    );
    ly += 20.0;
    let _ = writeln!(
        svg,
        r#"<circle cx="{:.2}" cy="{ly:.2}" r="5" fill="blue"/>"#,
        lx + 17.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="black">mean length {:.2}</text>"#,
        lx + 40.0,
        ly + 4.0,
        length
    );
    ly += 28.0;
    // color scale: five swatches from 1 to the max count
    let _ = writeln!(
        svg,
        r#"<text x="{lx:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="black">paths per point ({})</text>"#,
        ly,
        if options.log_scale { "log scale" } else { "linear scale" }
    );
    ly += 8.0;
    for i in 0..5 {
        let t = i as f64 / 4.0;
        let count = if max_count <= 1.0 {
            1.0
        } else if options.log_scale {
            ((1.0 + max_count).ln() * t).exp() - 1.0
        } else {
            max_count * t
        }
        .max(1.0);
        let _ = writeln!(
            svg,
            r#"<rect x="{lx:.2}" y="{:.2}" width="14" height="14" fill="{}"/>"#,
            ly + i as f64 * 18.0,
            heat_color(t)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" fill="black">{:.0}</text>"#,
            lx + 20.0,
            ly + i as f64 * 18.0 + 11.0,
            count
        );
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

fn tick_step(extent: usize) -> usize {
    (extent / 8).max(1)
}

const DENDRO_WIDTH: f64 = 640.0;
const DENDRO_HEIGHT: f64 = 420.0;
const DENDRO_MARGIN: f64 = 60.0;

/// Standard rectangular dendrogram with leaf labels and a height axis.
pub fn render_dendrogram<F: Real>(dendrogram: &Dendrogram<F>) -> String {
    let n = dendrogram.leaf_count();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{DENDRO_WIDTH:.0}" height="{DENDRO_HEIGHT:.0}" viewBox="0 0 {DENDRO_WIDTH:.0} {DENDRO_HEIGHT:.0}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{DENDRO_WIDTH:.0}" height="{DENDRO_HEIGHT:.0}" fill="white"/>"#
    );
    if n == 0 {
        svg.push_str("</svg>\n");
        return svg;
    }

    // leaf order: depth-first through merges, lower cluster id first
    let mut order: Vec<usize> = Vec::with_capacity(n);
    fn collect_leaves<F>(d: &Dendrogram<F>, id: usize, out: &mut Vec<usize>) {
        let n = d.leaf_count();
        if id < n {
            out.push(id);
        } else {
            let merge = &d.merges[id - n];
            collect_leaves(d, merge.a, out);
            collect_leaves(d, merge.b, out);
        }
    }
    if dendrogram.merges.is_empty() {
        order.push(0);
    } else {
        collect_leaves(dendrogram, 2 * n - 2, &mut order);
    }

    let inner_w = DENDRO_WIDTH - 2.0 * DENDRO_MARGIN;
    let inner_h = DENDRO_HEIGHT - 2.0 * DENDRO_MARGIN;
    let leaf_x = |pos: usize| DENDRO_MARGIN + (pos as f64 + 0.5) * inner_w / n as f64;
    let max_height = dendrogram
        .merges
        .last()
        .map(|m| m.height.to_f64().unwrap_or(1.0))
        .unwrap_or(1.0)
        .max(f64::MIN_POSITIVE);
    let hy = |h: f64| DENDRO_MARGIN + inner_h * (1.0 - h / max_height);

    // positions of live clusters: x center and current height
    let mut position: std::collections::BTreeMap<usize, (f64, f64)> = order
        .iter()
        .enumerate()
        .map(|(pos, &leaf)| (leaf, (leaf_x(pos), 0.0)))
        .collect();

    for (step, merge) in dendrogram.merges.iter().enumerate() {
        let (ax, ah) = position.remove(&merge.a).expect("live cluster");
        let (bx, bh) = position.remove(&merge.b).expect("live cluster");
        let h = merge.height.to_f64().unwrap_or(0.0);
        let _ = writeln!(
            svg,
            r#"<polyline points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="none" stroke="black" stroke-width="1.5"/>"#,
            ax,
            hy(ah),
            ax,
            hy(h),
            bx,
            hy(h),
            bx,
            hy(bh)
        );
        position.insert(n + step, ((ax + bx) / 2.0, h));
    }

    // leaf labels
    for (pos, &leaf) in order.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="black" text-anchor="middle">{}</text>"#,
            leaf_x(pos),
            DENDRO_MARGIN + inner_h + 18.0,
            dendrogram.labels[leaf]
        );
    }

    // height axis with five ticks
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1"/>"#,
        DENDRO_MARGIN - 10.0,
        DENDRO_MARGIN,
        DENDRO_MARGIN - 10.0,
        DENDRO_MARGIN + inner_h
    );
    for i in 0..=4 {
        let h = max_height * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" fill="black" text-anchor="end">{:.2}</text>"#,
            DENDRO_MARGIN - 14.0,
            hy(h) + 3.0,
            h
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" font-family="sans-serif" font-size="12" fill="black" transform="rotate(-90 16 {:.2})" text-anchor="middle">merge height</text>"#,
        DENDRO_MARGIN + inner_h / 2.0,
        DENDRO_MARGIN + inner_h / 2.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// Density grid export: `x,y,count` rows for visited points.
pub fn write_path_density_csv<W: Write>(
    writer: W,
    grid: &PathDensityGrid,
) -> Result<(), VizError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["x", "y", "count"])
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    for y in 0..grid.width() as u32 {
        for x in 0..grid.width() as u32 {
            let c = grid.count_at(x, y);
            if c == 0 {
                continue;
            }
            wtr.write_record([x.to_string(), y.to_string(), c.to_string()])
                .map_err(|e| std::io::Error::other(e.to_string()))?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{ward_clustering, FeatureColumn, FeatureMatrix, NormalizationMode};
    use crate::features::compute_forum_features;
    use crate::paths::{TimingVector, UserHistory, UserPath};
    use std::collections::BTreeMap;

    fn archive_from_symbols(specs: &[(&str, &str)]) -> ForumArchive {
        let mut archive = ForumArchive {
            forum_id: "viz".to_string(),
            users: BTreeMap::new(),
        };
        for (user, s) in specs {
            let symbols = UserPath::parse_symbols(s).unwrap();
            let times: Vec<i64> = (0..symbols.len() as i64).collect();
            archive.users.insert(
                user.to_string(),
                UserHistory {
                    path: UserPath::from_symbols(*user, symbols),
                    timing: TimingVector { t0: 0, event_times: times },
                },
            );
        }
        archive
    }

    #[test]
    fn identical_paths_stack_counts() {
        let archive = archive_from_symbols(&[("u", "pr"), ("v", "pr")]);
        let grid = path_density_grid(&archive).unwrap();
        assert_eq!(grid.count_at(0, 0), 2);
        assert_eq!(grid.count_at(1, 0), 2);
        assert_eq!(grid.count_at(1, 1), 2);
    }

    #[test]
    fn single_path_counts_once() {
        let archive = archive_from_symbols(&[("u", "ppr")]);
        let grid = path_density_grid(&archive).unwrap();
        assert_eq!(grid.count_at(0, 0), 1);
        assert_eq!(grid.count_at(2, 1), 1);
        assert_eq!(grid.count_at(2, 0), 1);
    }

    #[test]
    fn diverging_paths_split_counts() {
        let archive = archive_from_symbols(&[("u", "pp"), ("v", "pr")]);
        let grid = path_density_grid(&archive).unwrap();
        assert_eq!(grid.count_at(1, 0), 2);
        assert_eq!(grid.count_at(2, 0), 1);
        assert_eq!(grid.count_at(1, 1), 1);
    }

    #[test]
    fn origin_count_equals_user_count() {
        let archive = archive_from_symbols(&[("u", "pp"), ("v", "pr"), ("w", "p")]);
        let grid = path_density_grid(&archive).unwrap();
        assert_eq!(grid.count_at(0, 0) as usize, archive.len());
    }

    #[test]
    fn forum_plot_has_one_dashed_and_one_solid_ray() {
        let archive = archive_from_symbols(&[("u", "prpr"), ("v", "ppr")]);
        let grid = path_density_grid(&archive).unwrap();
        let features = compute_forum_features::<f64>(&archive).unwrap();
        let svg = render_forum_plot(&grid, &features, PlotOptions::default()).unwrap();
        assert_eq!(svg.matches("stroke-dasharray").count(), 2); // plot ray + its legend swatch
        let solid_red_lines = svg
            .lines()
            .filter(|l| l.contains("<line") && l.contains("stroke=\"red\"") && !l.contains("stroke-dasharray"))
            .count();
        assert_eq!(solid_red_lines, 2); // plot ray + legend swatch
        assert!(svg.contains("</svg>"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let archive = archive_from_symbols(&[("u", "prpr"), ("v", "ppr")]);
        let grid = path_density_grid(&archive).unwrap();
        let features = compute_forum_features::<f64>(&archive).unwrap();
        let a = render_forum_plot(&grid, &features, PlotOptions::default()).unwrap();
        let b = render_forum_plot(&grid, &features, PlotOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_archive_is_error() {
        assert!(matches!(
            path_density_grid(&ForumArchive::default()),
            Err(VizError::EmptyArchive)
        ));
    }

    fn matrix_1d(values: &[f64]) -> FeatureMatrix<f64> {
        FeatureMatrix {
            labels: (0..values.len()).map(|i| format!("r{i}")).collect(),
            columns: vec![FeatureColumn::Size],
            rows: values.iter().map(|&v| vec![v]).collect(),
            mode: NormalizationMode::ByStdDev,
        }
    }

    #[test]
    fn dendrogram_two_leaves_single_bracket() {
        let d = ward_clustering(&matrix_1d(&[0.0, 2.0])).unwrap();
        let svg = render_dendrogram(&d);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("r0"));
        assert!(svg.contains("r1"));
    }

    #[test]
    fn dendrogram_nested_brackets() {
        let d = ward_clustering(&matrix_1d(&[0.0, 1.0, 10.0])).unwrap();
        let svg = render_dendrogram(&d);
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
