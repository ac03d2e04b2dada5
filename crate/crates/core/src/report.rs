//! Distribution summaries of factor tables, pairwise comparison and SVG plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::Profile;

pub const BINS: usize = 100;

/// Factors whose values lie in `[0, 1]`; the others are binned over
/// `[0, p99]`.
pub const BOUNDED: [&str; 11] = [
    "color_gradient",
    "shape_concavity",
    "non_rectangularity",
    "incompactness_pp",
    "incompactness_schwartzberg",
    "discontinuity",
    "color_similarity",
    "shape_variation",
    "color_similarity_chamfer",
    "color_similarity_hausdorff",
    "boundary_shape_similarity",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub p5: f64,
    pub p95: f64,
    /// Histogram range `[lo, hi]`.
    pub range: [f64; 2],
    pub histogram: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorReport {
    pub dataset_id: String,
    pub bins: usize,
    /// Factors with at least one value, in name order.
    pub factors: BTreeMap<String, FactorSummary>,
    /// Missing values per reported factor.
    pub missing_counts: BTreeMap<String, usize>,
}

/// Linear-interpolated percentile of sorted values, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Bin of `v` among `BINS` equal bins over `[0, hi]`; out-of-range values go
/// to the nearest end bin.
pub fn bin_index(v: f64, hi: f64) -> usize {
    if hi <= 0.0 || v <= 0.0 {
        return 0;
    }
    ((v / hi * BINS as f64).floor() as usize).min(BINS - 1)
}

fn summarize(name: &str, mut values: Vec<f64>) -> FactorSummary {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let hi = if BOUNDED.contains(&name) {
        1.0
    } else {
        percentile(&values, 0.99)
    };
    let mut histogram = vec![0u64; BINS];
    for &v in &values {
        histogram[bin_index(v, hi)] += 1;
    }
    FactorSummary {
        n,
        mean: values.iter().sum::<f64>() / n as f64,
        median: percentile(&values, 0.5),
        p5: percentile(&values, 0.05),
        p95: percentile(&values, 0.95),
        range: [0.0, hi],
        histogram,
    }
}

pub fn build_report(dataset_id: &str, profile: &Profile) -> FactorReport {
    let mut columns: BTreeMap<&'static str, (Vec<f64>, usize)> = BTreeMap::new();
    let rows = profile
        .objects
        .iter()
        .flat_map(|r| r.factors())
        .chain(profile.scenes.iter().flat_map(|r| r.factors()));
    for (name, value) in rows {
        let entry = columns.entry(name).or_default();
        match value {
            Some(v) => entry.0.push(v),
            None => entry.1 += 1,
        }
    }
    let mut report = FactorReport {
        dataset_id: dataset_id.to_string(),
        bins: BINS,
        factors: BTreeMap::new(),
        missing_counts: BTreeMap::new(),
    };
    for (name, (values, missing)) in columns {
        if values.is_empty() {
            continue;
        }
        report
            .factors
            .insert(name.to_string(), summarize(name, values));
        report.missing_counts.insert(name.to_string(), missing);
    }
    report
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorComparison {
    /// `median(b) - median(a)`.
    pub median_diff: f64,
    /// `P(a < b) + P(a = b) / 2` for independent draws, from the histograms.
    pub rank_statistic: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub factors: BTreeMap<String, FactorComparison>,
}

/// `(bin midpoint, count)` for the nonempty bins.
fn midpoints(s: &FactorSummary) -> Vec<(f64, u64)> {
    let width = (s.range[1] - s.range[0]) / BINS as f64;
    s.histogram
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > 0)
        .map(|(i, &c)| (s.range[0] + (i as f64 + 0.5) * width, c))
        .collect()
}

/// Rank statistic with every value represented by its bin midpoint. With
/// equal ranges this is exact at bin resolution: draws in the same bin count
/// as ties.
pub fn rank_statistic(a: &FactorSummary, b: &FactorSummary) -> f64 {
    let (ma, mb) = (midpoints(a), midpoints(b));
    let (mut less, mut ties) = (0u128, 0u128);
    for &(va, ca) in &ma {
        for &(vb, cb) in &mb {
            let w = ca as u128 * cb as u128;
            if va < vb {
                less += w;
            } else if va == vb {
                ties += w;
            }
        }
    }
    let total = a.n as u128 * b.n as u128;
    if total == 0 {
        return 0.5;
    }
    (2 * less + ties) as f64 / (2 * total) as f64
}

pub fn compare(a: &FactorReport, b: &FactorReport) -> Result<Comparison> {
    let names_a: Vec<&String> = a.factors.keys().collect();
    let names_b: Vec<&String> = b.factors.keys().collect();
    if names_a != names_b {
        return Err(Error::structural(format!(
            "factor sets differ: {names_a:?} vs {names_b:?}"
        )));
    }
    let factors = a
        .factors
        .iter()
        .map(|(name, fa)| {
            let fb = &b.factors[name];
            (
                name.clone(),
                FactorComparison {
                    median_diff: fb.median - fa.median,
                    rank_statistic: rank_statistic(fa, fb),
                },
            )
        })
        .collect();
    Ok(Comparison {
        a: a.dataset_id.clone(),
        b: b.dataset_id.clone(),
        factors,
    })
}

const PANEL_W: f64 = 240.0;
const PANEL_H: f64 = 160.0;
const COLUMNS: usize = 4;
const PLOT_X: f64 = 10.0;
const PLOT_Y: f64 = 34.0;
const PLOT_W: f64 = 220.0;
const PLOT_H: f64 = 110.0;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Step outline of a histogram normalized to its own total.
fn step_path(s: &FactorSummary, peak: f64) -> String {
    let bin_w = PLOT_W / BINS as f64;
    let y = |c: u64| PLOT_Y + PLOT_H - c as f64 / s.n as f64 / peak * PLOT_H;
    let mut d = format!("M{:.2},{:.2}", PLOT_X, PLOT_Y + PLOT_H);
    for (i, &c) in s.histogram.iter().enumerate() {
        let x0 = PLOT_X + i as f64 * bin_w;
        let _ = write!(d, " L{:.2},{:.2} L{:.2},{:.2}", x0, y(c), x0 + bin_w, y(c));
    }
    let _ = write!(d, " L{:.2},{:.2} Z", PLOT_X + PLOT_W, PLOT_Y + PLOT_H);
    d
}

fn peak_fraction(s: &FactorSummary) -> f64 {
    s.histogram.iter().copied().max().unwrap_or(0) as f64 / s.n.max(1) as f64
}

struct Series<'a> {
    class: &'static str,
    summary: &'a FactorSummary,
}

fn panel(out: &mut String, index: usize, title: &str, caption: &str, series: &[Series]) {
    let (col, row) = (index % COLUMNS, index / COLUMNS);
    let _ = writeln!(
        out,
        r#"<g class="panel" transform="translate({},{})">"#,
        col as f64 * PANEL_W,
        row as f64 * PANEL_H
    );
    let _ = writeln!(
        out,
        r#"<rect class="frame" x="{PLOT_X}" y="{PLOT_Y}" width="{PLOT_W}" height="{PLOT_H}"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text class="title" x="{PLOT_X}" y="14">{}</text>"#,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<text class="caption" x="{PLOT_X}" y="28">{}</text>"#,
        escape(caption)
    );
    let peak = series
        .iter()
        .map(|s| peak_fraction(s.summary))
        .fold(0.0, f64::max);
    if peak > 0.0 {
        for s in series {
            let _ = writeln!(
                out,
                r#"<path class="{}" d="{}"/>"#,
                s.class,
                step_path(s.summary, peak)
            );
        }
    }
    out.push_str("</g>\n");
}

fn document(panels: usize, body: &str) -> String {
    let rows = panels.div_ceil(COLUMNS).max(1);
    let width = COLUMNS as f64 * PANEL_W;
    let height = rows as f64 * PANEL_H;
    format!(
        concat!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
            "\n<style>",
            ".frame{{fill:none;stroke:#999}} .title{{font:12px sans-serif}} ",
            ".caption{{font:10px sans-serif;fill:#555}} ",
            ".series-a{{fill:#1f77b4;fill-opacity:0.35;stroke:#1f77b4}} ",
            ".series-b{{fill:#d62728;fill-opacity:0.35;stroke:#d62728}}",
            "</style>\n{body}</svg>\n"
        ),
        w = width,
        h = height,
        body = body
    )
}

fn range_label(s: &FactorSummary) -> String {
    format!(
        "n={} median={:.3} range=[{:.3}, {:.3}]",
        s.n, s.median, s.range[0], s.range[1]
    )
}

pub fn render_report_svg(report: &FactorReport) -> String {
    let mut body = String::new();
    if report.factors.is_empty() {
        panel(&mut body, 0, &report.dataset_id, "n=0", &[]);
        return document(1, &body);
    }
    for (i, (name, s)) in report.factors.iter().enumerate() {
        panel(
            &mut body,
            i,
            name,
            &range_label(s),
            &[Series {
                class: "series-a",
                summary: s,
            }],
        );
    }
    document(report.factors.len(), &body)
}

/// Both histograms per factor, overlaid (`series-a` for `a`, `series-b` for `b`).
pub fn render_comparison_svg(
    a: &FactorReport,
    b: &FactorReport,
    comparison: &Comparison,
) -> String {
    let mut body = String::new();
    if comparison.factors.is_empty() {
        panel(
            &mut body,
            0,
            &format!("{} vs {}", a.dataset_id, b.dataset_id),
            "n=0",
            &[],
        );
        return document(1, &body);
    }
    for (i, (name, c)) in comparison.factors.iter().enumerate() {
        let caption = format!(
            "rank={:.3} median diff={:+.3}",
            c.rank_statistic, c.median_diff
        );
        panel(
            &mut body,
            i,
            name,
            &caption,
            &[
                Series {
                    class: "series-a",
                    summary: &a.factors[name],
                },
                Series {
                    class: "series-b",
                    summary: &b.factors[name],
                },
            ],
        );
    }
    document(comparison.factors.len(), &body)
}
