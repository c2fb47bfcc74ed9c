//! Sweep report serialization: CSV for machine consumption, SVG for a quick
//! visual read of metric-vs-axis shape.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::{SweepAxis, SweepReport, SweepRow};

/// Fixed CSV column set shared by every sweep kind; axis-specific columns
/// (e.g. `cal_ambient_c`, `entropy`) are appended after these.
pub const CSV_HEADER: &str = "config,destrip,bpr,sdn,tdn,flare,tonemap,\
rnu_mean,rnu_std,psnr_mean,psnr_std,cni_mean,cni_std,time_total_ms,\
time_nuc_ms,time_bpr_ms,time_destrip_ms,time_sdn_ms,time_tdn_ms,\
time_flare_ms,time_tonemap_ms";

fn check_non_empty(report: &SweepReport) -> Result<()> {
    if report.rows.is_empty() {
        return Err(Error::InvalidParam("empty sweep report".to_owned()));
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn csv_row(row: &SweepRow) -> String {
    let t = row.toggles;
    let flags = [t.destrip, t.bpr, t.sdn, t.tdn, t.flare]
        .map(|f| if f { "1" } else { "0" })
        .join(",");
    let m = &row.metrics;
    let mut line = format!(
        "{},{},{},{:.6},{:.6},{},{},{:.6},{:.6},{:.6}",
        row.label,
        flags,
        row.tonemap,
        m.rnu_mean,
        m.rnu_std,
        fmt_opt(m.psnr_mean),
        fmt_opt(m.psnr_std),
        m.cni_mean,
        m.cni_std,
        row.timing.total_mean_ms,
    );
    for stage in row.timing.stages {
        line.push_str(&format!(",{:.6}", stage.mean_ms));
    }
    for (_, value) in &row.extra {
        line.push_str(&format!(",{value:.6}"));
    }
    line
}

/// Writes a sweep report as UTF-8 CSV with LF line endings.
pub fn write_csv_to<W: Write>(writer: &mut W, report: &SweepReport) -> Result<()> {
    check_non_empty(report)?;
    let mut header = CSV_HEADER.to_owned();
    for (key, _) in &report.rows[0].extra {
        header.push(',');
        header.push_str(key);
    }
    writer.write_all(header.as_bytes())?;
    writer.write_all(b"\n")?;
    for row in &report.rows {
        writer.write_all(csv_row(row).as_bytes())?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_csv(path: &Path, report: &SweepReport) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_csv_to(&mut writer, report)?;
    writer.flush()?;
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the report as a self-contained SVG bar chart of mean RNU per row
/// (one labeled tick per row); temperature sweeps add a worst-case RNU
/// polyline on top.
pub fn write_svg_to<W: Write>(writer: &mut W, report: &SweepReport) -> Result<()> {
    check_non_empty(report)?;
    let (width, height) = (820.0, 440.0);
    let (left, right, top, bottom) = (70.0, 20.0, 40.0, 90.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;
    let rows = &report.rows;

    let worst_of = |row: &SweepRow| {
        row.extra
            .iter()
            .find(|(k, _)| k == "rnu_worst")
            .map(|(_, v)| *v)
    };
    let mut y_max = rows
        .iter()
        .map(|r| worst_of(r).unwrap_or(0.0).max(r.metrics.rnu_mean))
        .fold(0.0, f64::max);
    if y_max <= 0.0 {
        y_max = 1.0;
    }
    y_max *= 1.1;

    let title = match report.axis {
        SweepAxis::StagePowerset => "Stage power-set ablation",
        SweepAxis::CalibrationTemperature => "Calibration-temperature sweep",
        SweepAxis::Tonemap => "Tonemap survey",
    };
    let x_center =
        |i: usize| left + plot_w * (i as f64 + 0.5) / rows.len() as f64;
    let y_pos = |v: f64| top + plot_h * (1.0 - v / y_max);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{} \
(mean RNU %, {} repeats)</text>\n",
        width / 2.0,
        title,
        report.repeats
    ));
    // Axes and horizontal gridlines.
    svg.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{}\" stroke=\"#333\"/>\n",
        top + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{left}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"#333\"/>\n",
        top + plot_h,
        left + plot_w
    ));
    for g in 0..=4 {
        let v = y_max * g as f64 / 4.0;
        let y = y_pos(v);
        svg.push_str(&format!(
            "<line x1=\"{left}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
stroke=\"#ddd\" stroke-dasharray=\"3 3\"/>\n",
            left + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.3}</text>\n",
            left - 6.0,
            y + 4.0
        ));
    }
    // Bars and per-row ticks.
    let bar_w = (plot_w / rows.len() as f64 * 0.6).min(48.0);
    for (i, row) in rows.iter().enumerate() {
        let x = x_center(i);
        let y = y_pos(row.metrics.rnu_mean);
        svg.push_str(&format!(
            "<rect class=\"bar\" x=\"{:.1}\" y=\"{y:.1}\" width=\"{bar_w:.1}\" \
height=\"{:.1}\" fill=\"#4878a8\"/>\n",
            x - bar_w / 2.0,
            top + plot_h - y
        ));
        svg.push_str(&format!(
            "<text class=\"tick\" x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"end\" \
transform=\"rotate(-45 {x:.1} {0:.1})\">{1}</text>\n",
            top + plot_h + 14.0,
            xml_escape(&row.label)
        ));
    }
    // Worst-case overlay for temperature sweeps.
    if report.axis == SweepAxis::CalibrationTemperature {
        let points: Vec<String> = rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| {
                worst_of(r).map(|w| format!("{:.1},{:.1}", x_center(i), y_pos(w)))
            })
            .collect();
        if points.len() > 1 {
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"#c0392b\" \
stroke-width=\"2\"/>\n",
                points.join(" ")
            ));
        }
    }
    svg.push_str("</svg>\n");
    writer.write_all(svg.as_bytes())?;
    Ok(())
}

pub fn write_svg(path: &Path, report: &SweepReport) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_svg_to(&mut writer, report)?;
    writer.flush()?;
    Ok(())
}
