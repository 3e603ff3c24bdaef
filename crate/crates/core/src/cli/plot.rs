//! Post-hoc learning-curve plots from run directories.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use plotters::prelude::*;

use super::CliError;
use crate::runtime::{names, read_metrics, Section, METRICS_FILE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotMetric {
    Reward,
    Divergence,
    Entropy,
    ActorLoss,
    CriticLoss,
}

impl PlotMetric {
    /// The log record this metric reads.
    pub fn record(self) -> (Section, &'static str) {
        match self {
            PlotMetric::Reward => (Section::Reward, names::MEAN_FITNESS),
            PlotMetric::Divergence => (Section::Metrics, names::DIVERGENCE),
            PlotMetric::Entropy => (Section::Metrics, names::ENTROPY),
            PlotMetric::ActorLoss => (Section::Loss, names::ACTOR_LOSS),
            PlotMetric::CriticLoss => (Section::Loss, names::CRITIC_LOSS),
        }
    }

    fn label(self) -> &'static str {
        match self {
            PlotMetric::Reward => "reward",
            PlotMetric::Divergence => "divergence",
            PlotMetric::Entropy => "entropy",
            PlotMetric::ActorLoss => "actor_loss",
            PlotMetric::CriticLoss => "critic_loss",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SaveType {
    Svg,
}

#[derive(Debug, Clone, Args)]
pub struct PlotRequest {
    /// Run directories, each holding a metrics.jsonl.
    #[arg(short = 'p', long = "paths", num_args = 1.., required = true)]
    pub paths: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "reward")]
    pub metric: PlotMetric,
    /// One sub-panel per title; runs are split evenly across panels in order.
    #[arg(long, num_args = 1..)]
    pub titles: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub num_cols: usize,
    /// One label per run.
    #[arg(long, num_args = 1..)]
    pub legend: Vec<String>,
    /// Trailing moving-average length.
    #[arg(long, default_value_t = 1)]
    pub window: usize,
    #[arg(long)]
    pub log_y: bool,
    /// Output path without extension.
    #[arg(long, default_value = "plot")]
    pub save_path: PathBuf,
    #[arg(long, value_enum, num_args = 1.., default_value = "svg")]
    pub save_types: Vec<SaveType>,
}

/// Trailing moving average; the first `window - 1` points average the
/// prefix available so far.
pub fn moving_average(series: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    (0..series.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let span = &series[lo..=i];
            span.iter().sum::<f64>() / span.len() as f64
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub path: PathBuf,
    pub steps: Vec<u64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub curves: Vec<Curve>,
}

impl PlotRequest {
    fn validate(&self) -> Result<(), CliError> {
        if self.window == 0 {
            return Err(CliError::Usage("--window must be at least 1".into()));
        }
        if self.num_cols == 0 {
            return Err(CliError::Usage("--num-cols must be at least 1".into()));
        }
        if !self.legend.is_empty() && self.legend.len() != self.paths.len() {
            return Err(CliError::Usage(format!(
                "--legend has {} labels for {} paths",
                self.legend.len(),
                self.paths.len()
            )));
        }
        if !self.titles.is_empty() && !self.paths.len().is_multiple_of(self.titles.len()) {
            return Err(CliError::Usage(format!(
                "{} paths cannot be split evenly across {} titles",
                self.paths.len(),
                self.titles.len()
            )));
        }
        Ok(())
    }
}

/// Read and smooth every requested series, grouped into panels.
pub fn load_panels(req: &PlotRequest) -> Result<Vec<Panel>, CliError> {
    req.validate()?;
    let (section, name) = req.metric.record();
    let mut curves = Vec::with_capacity(req.paths.len());
    for (i, dir) in req.paths.iter().enumerate() {
        if !dir.is_dir() {
            return Err(CliError::Runtime(format!(
                "run directory {} does not exist",
                dir.display()
            )));
        }
        let file = dir.join(METRICS_FILE);
        if !file.is_file() {
            return Err(CliError::Runtime(format!("{} has no {METRICS_FILE}", dir.display())));
        }
        let mut points: Vec<(u64, f64)> = read_metrics(&file)?
            .into_iter()
            .filter(|r| r.section == section && r.name == name)
            .map(|r| (r.step, r.value))
            .collect();
        points.sort_by_key(|p| p.0);
        let raw: Vec<f64> = points.iter().map(|p| p.1).collect();
        curves.push(Curve {
            label: req.legend.get(i).cloned().unwrap_or_else(|| dir.display().to_string()),
            path: dir.clone(),
            steps: points.iter().map(|p| p.0).collect(),
            values: moving_average(&raw, req.window),
        });
    }
    if curves.iter().all(|c| c.values.is_empty()) {
        return Err(CliError::Runtime(format!(
            "metric '{}' is absent from every run",
            req.metric.label()
        )));
    }
    let titles = if req.titles.is_empty() {
        vec![req.metric.label().to_owned()]
    } else {
        req.titles.clone()
    };
    let per_panel = curves.len() / titles.len();
    let mut curves = curves.into_iter();
    Ok(titles
        .into_iter()
        .map(|title| Panel {
            title,
            curves: curves.by_ref().take(per_panel).collect(),
        })
        .collect())
}

pub fn sidecar_csv(panels: &[Panel]) -> String {
    let mut out = String::from("panel,label,path,step,value\n");
    for panel in panels {
        for c in &panel.curves {
            for (s, v) in c.steps.iter().zip(&c.values) {
                writeln!(
                    out,
                    "{},{},{},{s},{v:?}",
                    csv_field(&panel.title),
                    csv_field(&c.label),
                    csv_field(&c.path.display().to_string())
                )
                .expect("writing to a String");
            }
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn with_extension(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

const PANEL_W: u32 = 640;
const PANEL_H: u32 = 420;

fn render_svg(panels: &[Panel], req: &PlotRequest, path: &Path) -> Result<(), Box<dyn std::error::Error>> {
    let cols = req.num_cols.min(panels.len()).max(1);
    let rows = panels.len().div_ceil(cols);
    let root = SVGBackend::new(path, (PANEL_W * cols as u32, PANEL_H * rows as u32)).into_drawing_area();
    root.fill(&WHITE)?;
    let areas = root.split_evenly((rows, cols));
    for (panel, area) in panels.iter().zip(areas.iter()) {
        let points: Vec<(f64, f64)> = panel
            .curves
            .iter()
            .flat_map(|c| c.steps.iter().zip(&c.values).map(|(s, v)| (*s as f64, *v)))
            .filter(|(_, v)| v.is_finite() && (!req.log_y || *v > 0.0))
            .collect();
        let (x_lo, x_hi) = bounds(points.iter().map(|p| p.0));
        let (y_lo, y_hi) = bounds(points.iter().map(|p| p.1));
        let mut builder = ChartBuilder::on(area);
        builder
            .caption(&panel.title, ("sans-serif", 22))
            .margin(12)
            .x_label_area_size(36)
            .y_label_area_size(64);
        let label = req.metric.label();
        if req.log_y {
            let mut chart = builder.build_cartesian_2d(x_lo..x_hi, (y_lo.max(f64::MIN_POSITIVE)..y_hi).log_scale())?;
            chart.configure_mesh().x_desc("step").y_desc(label).draw()?;
            draw_curves(&mut chart, panel, req.log_y).map_err(|e| e.to_string())?;
        } else {
            let mut chart = builder.build_cartesian_2d(x_lo..x_hi, y_lo..y_hi)?;
            chart.configure_mesh().x_desc("step").y_desc(label).draw()?;
            draw_curves(&mut chart, panel, req.log_y).map_err(|e| e.to_string())?;
        }
    }
    root.present()?;
    Ok(())
}

fn draw_curves<'a, DB, X, Y>(
    chart: &mut ChartContext<'a, DB, Cartesian2d<X, Y>>,
    panel: &Panel,
    log_y: bool,
) -> Result<(), String>
where
    DB: DrawingBackend + 'a,
    X: Ranged<ValueType = f64>,
    Y: Ranged<ValueType = f64>,
{
    for (i, c) in panel.curves.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let series = c
            .steps
            .iter()
            .zip(&c.values)
            .map(|(s, v)| (*s as f64, *v))
            .filter(|(_, v)| v.is_finite() && (!log_y || *v > 0.0));
        chart
            .draw_series(LineSeries::new(series, color.stroke_width(2)))
            .map_err(|e| e.to_string())?
            .label(c.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| e.to_string())?;
    Ok(())
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// Written files: the CSV sidecar first, then one image per save type.
pub fn cmd_plot(req: &PlotRequest, out: &mut dyn std::io::Write) -> Result<Vec<PathBuf>, CliError> {
    let panels = load_panels(req)?;
    for panel in &panels {
        for c in panel.curves.iter().filter(|c| c.values.is_empty()) {
            writeln!(
                out,
                "warning: metric '{}' absent from {}",
                req.metric.label(),
                c.path.display()
            )?;
        }
    }
    if let Some(parent) = req.save_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::Runtime(format!("{}: {e}", parent.display())))?;
    }
    let mut written = Vec::new();
    let csv_path = with_extension(&req.save_path, "csv");
    fs::write(&csv_path, sidecar_csv(&panels))
        .map_err(|e| CliError::Runtime(format!("{}: {e}", csv_path.display())))?;
    written.push(csv_path);
    for ty in &req.save_types {
        match ty {
            SaveType::Svg => {
                let path = with_extension(&req.save_path, "svg");
                render_svg(&panels, req, &path)
                    .map_err(|e| CliError::Runtime(format!("rendering {}: {e}", path.display())))?;
                written.push(path);
            }
        }
    }
    for p in &written {
        writeln!(out, "{}", p.display())?;
    }
    Ok(written)
}
