use std::path::Path;

use anyhow::{bail, Context, Result};
use netq_core::eval::QualityCurve;
use plotters::prelude::*;

const COLORS: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(255, 127, 14),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

fn label(path: &Path, curve: &QualityCurve) -> String {
    let algo = curve.meta.get("algo").and_then(|v| v.as_str());
    let teacher = curve.meta.get("teacher").and_then(|v| v.as_str());
    match (algo, teacher) {
        (Some(a), Some(t)) => format!("{a} ({t})"),
        _ => path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
    }
}

/// Draws the median of every curve with its min/max band.
pub fn plot(paths: &[impl AsRef<Path>], out: &Path, title: Option<&str>) -> Result<()> {
    let mut curves = Vec::new();
    for p in paths {
        let p = p.as_ref();
        let c = QualityCurve::load(p).with_context(|| format!("reading curve {}", p.display()))?;
        if c.points.is_empty() {
            bail!("{} has no points", p.display());
        }
        curves.push((label(p, &c), c));
    }
    let max_q = curves.iter().flat_map(|(_, c)| c.points.iter().map(|p| p.query)).max().unwrap_or(1);
    let lo = curves.iter().flat_map(|(_, c)| c.points.iter().map(|p| p.min)).fold(1.0, f64::min).min(0.9);

    let root = SVGBackend::new(out, (800, 500)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title.unwrap_or("Solution quality"), ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(48)
        .build_cartesian_2d(0.5f64..max_q as f64 + 0.5, (lo - 0.02)..1.01f64)?;
    chart.configure_mesh().x_desc("queries answered").y_desc("quality").draw()?;

    for (i, (name, c)) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let band: Vec<(f64, f64)> = c
            .points
            .iter()
            .map(|p| (p.query as f64, p.max))
            .chain(c.points.iter().rev().map(|p| (p.query as f64, p.min)))
            .collect();
        chart.draw_series(std::iter::once(Polygon::new(band, color.mix(0.15))))?;
        chart
            .draw_series(LineSeries::new(c.points.iter().map(|p| (p.query as f64, p.median)), color.stroke_width(2)))?
            .label(name.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
        chart.draw_series(c.points.iter().map(|p| Circle::new((p.query as f64, p.median), 3, color.filled())))?;
    }
    chart.configure_series_labels().position(SeriesLabelPosition::LowerRight).border_style(BLACK).background_style(WHITE.mix(0.8)).draw()?;
    root.present().with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}
