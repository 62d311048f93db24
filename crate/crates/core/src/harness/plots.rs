//! Static SVG renderings of a run directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::Manifest;
use crate::{Error, Result};

const BINS: usize = 20;
const SIZE: (u32, u32) = (800, 600);

/// Endpoints of the `delay = distance / v` reference line over `[0, x_max]`.
pub fn reference_line(v: f64, x_max: f64) -> [(f64, f64); 2] {
    [(0.0, 0.0), (x_max, x_max / v)]
}

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Plot(e.to_string())
}

fn read_table(path: &Path, columns: &[&str]) -> Result<Vec<Vec<f64>>> {
    let malformed = |reason: String| Error::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers().map_err(|e| malformed(e.to_string()))?.clone();
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| headers.iter().position(|h| h == *c).ok_or_else(|| malformed(format!("missing column {c:?}"))))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        let row = idx
            .iter()
            .map(|&i| {
                let field = rec.get(i).unwrap_or("");
                field
                    .parse::<f64>()
                    .or_else(|_| match field {
                        "true" => Ok(1.0),
                        "false" => Ok(0.0),
                        _ => Err(()),
                    })
                    .map_err(|_| malformed(format!("row {}: cannot parse {field:?}", line + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn axis_max(values: impl Iterator<Item = f64>) -> f64 {
    let m = values.filter(|v| v.is_finite()).fold(0.0, f64::max);
    if m > 0.0 {
        m * 1.05
    } else {
        1.0
    }
}

/// Mean of `value` per equal-width distance bin over `[0, max]`; empty bins skipped.
fn binned_means(points: &[(f64, f64)], max: f64) -> Vec<(f64, f64)> {
    let width = max / BINS as f64;
    let mut sums = [(0.0, 0usize); BINS];
    for &(d, v) in points {
        let k = ((d / width) as usize).min(BINS - 1);
        sums[k].0 += v;
        sums[k].1 += 1;
    }
    sums.iter()
        .enumerate()
        .filter(|(_, s)| s.1 > 0)
        .map(|(k, s)| ((k as f64 + 0.5) * width, s.0 / s.1 as f64))
        .collect()
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    line: bool,
}

fn draw(path: &Path, title: &str, x_desc: &str, y_desc: &str, series: &[Series], reference: Option<Vec<(f64, f64)>>) -> Result<()> {
    let all = || series.iter().flat_map(|s| s.points.iter()).chain(reference.iter().flatten());
    let x_max = axis_max(all().map(|p| p.0));
    let y_max = axis_max(series.iter().flat_map(|s| s.points.iter()).map(|p| p.1));
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(0f64..x_max, 0f64..y_max)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc(x_desc).y_desc(y_desc).draw().map_err(plot_err)?;
    for (i, s) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        if s.line {
            chart
                .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(2)))
                .map_err(plot_err)?
                .label(&s.label)
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
        } else {
            chart
                .draw_series(s.points.iter().map(|&p| Circle::new(p, 2, color.filled())))
                .map_err(plot_err)?
                .label(&s.label)
                .legend(move |(x, y)| Circle::new((x + 8, y), 3, color.filled()));
        }
    }
    if let Some(line) = reference {
        chart
            .draw_series(LineSeries::new(line, BLACK.stroke_width(1)))
            .map_err(plot_err)?
            .label("node speed")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], BLACK));
    }
    if !series.is_empty() {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    Ok(())
}

fn group_by_y(rows: &[Vec<f64>]) -> BTreeMap<String, Vec<(f64, f64)>> {
    let mut map: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        map.entry(format!("y = {}", r[0])).or_default().push((r[1], r[2]));
    }
    map
}

/// Renders whatever of `samples.csv`, `bounds.csv` and `speed.csv` exists in
/// `dir`. The node speed for reference lines comes from `manifest.json` when present.
pub fn render_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    let speed = Manifest::read(&dir.join("manifest.json")).ok().map(|m| m.spec.scenario.speed());
    let mut written = Vec::new();

    let samples_path = dir.join("samples.csv");
    if samples_path.exists() {
        let rows = read_table(&samples_path, &["y", "distance", "delay"])?;
        let groups = group_by_y(&rows);
        let d_max = axis_max(rows.iter().map(|r| r[1]));

        let ratio: Vec<Series> = groups
            .iter()
            .map(|(label, pts)| Series {
                label: label.clone(),
                points: pts.iter().filter(|p| p.0 > 0.0).map(|&(d, t)| (d, t / d)).collect(),
                line: false,
            })
            .collect();
        let path = dir.join("delay_ratio.svg");
        let flat = speed.map(|v| vec![(0.0, 1.0 / v), (d_max, 1.0 / v)]);
        draw(&path, "delay / distance", "distance (m)", "delay / distance (s/m)", &ratio, flat)?;
        written.push(path);

        let avg: Vec<Series> = groups
            .iter()
            .map(|(label, pts)| Series {
                label: label.clone(),
                points: binned_means(pts, d_max),
                line: true,
            })
            .collect();
        let path = dir.join("avg_delay.svg");
        let line = speed.map(|v| reference_line(v, d_max).to_vec());
        draw(&path, "average delay", "distance (m)", "delay (s)", &avg, line)?;
        written.push(path);

        let capacity: Vec<Series> = groups
            .iter()
            .map(|(label, pts)| {
                let y: f64 = label.trim_start_matches("y = ").parse().unwrap_or(f64::NAN);
                let speeds: Vec<(f64, f64)> = pts.iter().filter(|p| p.1 > 0.0).map(|&(d, t)| (d, y * d / t)).collect();
                Series {
                    label: label.clone(),
                    points: binned_means(&speeds, d_max),
                    line: true,
                }
            })
            .collect();
        let path = dir.join("capacity.svg");
        draw(&path, "space-time capacity", "distance (m)", "c(y) (bit-m/s)", &capacity, None)?;
        written.push(path);
    }

    let bounds_path = dir.join("bounds.csv");
    if bounds_path.exists() {
        let rows = read_table(&bounds_path, &["y", "speed_upper", "finite"])?;
        let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r[2] == 1.0).map(|r| (r[0], r[1])).collect();
        let path = dir.join("bound_speed.svg");
        let x_max = axis_max(pts.iter().map(|p| p.0));
        let flat = speed.map(|v| vec![(0.0, v), (x_max, v)]);
        let series = [Series {
            label: "upper bound".into(),
            points: pts,
            line: true,
        }];
        draw(&path, "speed upper bound", "capacity y", "speed (m/s)", &series, flat)?;
        written.push(path);
    }

    let speed_path = dir.join("speed.csv");
    if speed_path.exists() {
        let rows = read_table(&speed_path, &["y", "speed_slope", "speed_upper_bound"])?;
        let path = dir.join("speed_vs_bound.svg");
        let series = [
            Series {
                label: "measured".into(),
                points: rows.iter().map(|r| (r[0], r[1])).collect(),
                line: true,
            },
            Series {
                label: "upper bound".into(),
                points: rows.iter().filter(|r| r[2].is_finite()).map(|r| (r[0], r[2])).collect(),
                line: true,
            },
        ];
        draw(&path, "measured speed", "capacity y", "speed (m/s)", &series, None)?;
        written.push(path);
    }

    if written.is_empty() {
        return Err(Error::Malformed {
            path: dir.to_path_buf(),
            reason: "no samples.csv, bounds.csv or speed.csv to plot".into(),
        });
    }
    Ok(written)
}
