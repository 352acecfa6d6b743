//! Report emission: per-condition summary tables and bar-chart SVGs.
//! Output is fully deterministic (no timestamps).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::anova::LongTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    SvgBars,
}

/// Mean and SD of every response per condition cell, conditions sorted by
/// (classifier, sensor, correction, localization).
struct ConditionSummary {
    labels: Vec<String>,
    classifiers: Vec<String>,
    /// `[condition][response] -> (mean, sd)`.
    stats: Vec<Vec<(f64, f64)>>,
    response_names: Vec<String>,
}

fn summarize(table: &LongTable) -> ConditionSummary {
    let mut groups: BTreeMap<Vec<String>, Vec<Vec<f64>>> = BTreeMap::new();
    for (levels, responses) in table.levels.iter().zip(&table.responses) {
        groups
            .entry(levels.clone())
            .or_insert_with(|| vec![Vec::new(); responses.len()])
            .iter_mut()
            .zip(responses)
            .for_each(|(bucket, &v)| bucket.push(v));
    }
    let mut labels = Vec::new();
    let mut classifiers = Vec::new();
    let mut stats = Vec::new();
    for (levels, buckets) in groups {
        labels.push(levels.join("/"));
        classifiers.push(levels[0].clone());
        stats.push(
            buckets
                .iter()
                .map(|values| {
                    let n = values.len() as f64;
                    let mean = values.iter().sum::<f64>() / n;
                    let sd = if values.len() > 1 {
                        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                            / (n - 1.0))
                            .sqrt()
                    } else {
                        0.0
                    };
                    (mean, sd)
                })
                .collect(),
        );
    }
    ConditionSummary {
        labels,
        classifiers,
        stats,
        response_names: table.response_names.clone(),
    }
}

/// Emits summary tables and bar charts for the given formats. Fails before
/// writing anything when the result table is empty.
pub fn emit_report(
    table: &LongTable,
    out_dir: &Path,
    formats: &[ReportFormat],
) -> Result<Vec<PathBuf>> {
    if table.n_rows() == 0 {
        return Err(Error::Report("empty result set".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;
    let summary = summarize(table);
    let mut written = Vec::new();

    if formats.contains(&ReportFormat::Csv) {
        let mut csv = String::from("condition");
        for r in &summary.response_names {
            csv.push_str(&format!(",{r}_mean,{r}_sd"));
        }
        csv.push('\n');
        for (label, stats) in summary.labels.iter().zip(&summary.stats) {
            csv.push_str(label);
            for (mean, sd) in stats {
                csv.push_str(&format!(",{mean},{sd}"));
            }
            csv.push('\n');
        }
        let path = out_dir.join("mean_stats.csv");
        write_file(&path, csv.as_bytes())?;
        written.push(path);
    }

    if formats.contains(&ReportFormat::Json) {
        let mut entries = Vec::new();
        for (label, stats) in summary.labels.iter().zip(&summary.stats) {
            let mut obj = serde_json::Map::new();
            obj.insert("condition".into(), serde_json::Value::String(label.clone()));
            for (r, (mean, sd)) in summary.response_names.iter().zip(stats) {
                obj.insert(format!("{r}_mean"), (*mean).into());
                obj.insert(format!("{r}_sd"), (*sd).into());
            }
            entries.push(serde_json::Value::Object(obj));
        }
        let path = out_dir.join("mean_stats.json");
        write_file(
            &path,
            serde_json::to_string_pretty(&entries)
                .expect("json serialization")
                .as_bytes(),
        )?;
        written.push(path);
    }

    if formats.contains(&ReportFormat::SvgBars) {
        for (ri, response) in summary.response_names.iter().enumerate() {
            let bars: Vec<(String, f64, f64)> = summary
                .labels
                .iter()
                .zip(&summary.stats)
                .map(|(label, stats)| (label.clone(), stats[ri].0, stats[ri].1))
                .collect();
            let svg = bar_chart_svg(
                &format!("mean {response} per condition (error bars: SD)"),
                &bars,
                &summary.classifiers,
            );
            let path = out_dir.join(format!("bars_{response}.svg"));
            write_file(&path, svg.as_bytes())?;
            written.push(path);
        }
    }

    Ok(written)
}

/// Fig-7-style bar chart for one cell's aggregated coefficients: the top
/// `max_bars` features by |z|, mean bars with SD whiskers. `rows` come from
/// the per-cell coefficient CSV, already sorted by |z| descending.
pub fn coefficient_svg(title: &str, rows: &[(String, f64, f64)], max_bars: usize) -> String {
    let shown: Vec<(String, f64, f64)> = rows.iter().take(max_bars).cloned().collect();
    let groups: Vec<String> = vec![String::new(); shown.len()];
    bar_chart_svg(title, &shown, &groups)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Minimal hand-rolled grouped bar chart: one bar per entry with an SD
/// whisker, a gap between consecutive groups, labels under the axis.
fn bar_chart_svg(title: &str, bars: &[(String, f64, f64)], groups: &[String]) -> String {
    let bar_width = 14.0;
    let gap = 4.0;
    let group_gap = 14.0;
    let height = 360.0;
    let plot_top = 40.0;
    let plot_bottom = height - 110.0;
    let left = 60.0;

    let mut x_positions = Vec::with_capacity(bars.len());
    let mut x = left;
    for (i, _) in bars.iter().enumerate() {
        if i > 0 && groups[i] != groups[i - 1] {
            x += group_gap;
        }
        x_positions.push(x);
        x += bar_width + gap;
    }
    let width = x + 40.0;

    let lo = bars
        .iter()
        .map(|(_, m, s)| m - s)
        .fold(0.0f64, f64::min);
    let hi = bars
        .iter()
        .map(|(_, m, s)| m + s)
        .fold(0.0f64, f64::max)
        .max(lo + 1e-9);
    let scale = (plot_bottom - plot_top) / (hi - lo);
    let y_of = |v: f64| plot_bottom - (v - lo) * scale;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{left}\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n",
        xml_escape(title)
    ));
    // Zero axis.
    svg.push_str(&format!(
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#333\" stroke-width=\"1\"/>\n",
        left - 8.0,
        y_of(0.0),
        width - 20.0,
        y_of(0.0)
    ));
    for ((label, mean, sd), &bx) in bars.iter().zip(&x_positions) {
        let y0 = y_of(0.0);
        let ym = y_of(*mean);
        let (rect_y, rect_h) = if ym <= y0 { (ym, y0 - ym) } else { (y0, ym - y0) };
        svg.push_str(&format!(
            "<rect x=\"{bx:.1}\" y=\"{rect_y:.2}\" width=\"{bar_width}\" height=\"{rect_h:.2}\" fill=\"#4878a8\"/>\n"
        ));
        let cx = bx + bar_width / 2.0;
        svg.push_str(&format!(
            "<line x1=\"{cx:.1}\" y1=\"{:.2}\" x2=\"{cx:.1}\" y2=\"{:.2}\" stroke=\"#222\" stroke-width=\"1\"/>\n",
            y_of(mean - sd),
            y_of(mean + sd)
        ));
        svg.push_str(&format!(
            "<text x=\"{cx:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"8\" transform=\"rotate(60 {cx:.1} {:.1})\">{}</text>\n",
            plot_bottom + 12.0,
            plot_bottom + 12.0,
            xml_escape(label)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"8\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\">{hi:.3}</text>\n",
        plot_top + 4.0
    ));
    svg.push_str(&format!(
        "<text x=\"8\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\">{lo:.3}</text>\n",
        plot_bottom
    ));
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
