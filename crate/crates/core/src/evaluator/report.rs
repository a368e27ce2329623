//! Render an [`ExperimentMatrix`] as markdown (human), csv, or json
//! (machine).
//!
//! The markdown table groups strategy columns into "w/o Task
//! Decomposition" (single combined prompt, then reflect) and "w/ Task
//! Decomposition" (separate explain and decide prompts), one row per
//! model, F1 to two decimals with the best cell per row in bold. The
//! machine formats carry the full-precision metrics and every count.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CellStatus, ExperimentCell, ExperimentMatrix};
use crate::cognition::strategy_from_id;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("experiment matrix has no cells")]
    EmptyMatrix,
    #[error("could not serialize report: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

pub fn render_report(
    matrix: &ExperimentMatrix,
    format: ReportFormat,
) -> Result<String, ReportError> {
    if matrix.cells.is_empty() {
        return Err(ReportError::EmptyMatrix);
    }
    match format {
        ReportFormat::Markdown => render_markdown(matrix),
        ReportFormat::Csv => render_csv(matrix),
        ReportFormat::Json => render_json(matrix),
    }
}

fn column_group(strategy_id: &str) -> &'static str {
    match strategy_from_id(strategy_id) {
        Ok(strategy) if strategy.chain.len() == 2 => "w/o Task Decomposition",
        Ok(_) => "w/ Task Decomposition",
        Err(_) => "Other",
    }
}

fn first_appearance<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = Vec::new();
    for item in items {
        if !seen.iter().any(|s| s == item) {
            seen.push(item.to_string());
        }
    }
    seen
}

fn table_row(cells: &[String]) -> String {
    format!("| {} |", cells.join(" | "))
}

pub fn render_markdown(matrix: &ExperimentMatrix) -> Result<String, ReportError> {
    if matrix.cells.is_empty() {
        return Err(ReportError::EmptyMatrix);
    }
    let models = first_appearance(matrix.cells.iter().map(|c| c.model_id.as_str()));
    let strategies = first_appearance(matrix.cells.iter().map(|c| c.strategy_id.as_str()));
    let by_key: HashMap<(&str, &str), &ExperimentCell> = matrix
        .cells
        .iter()
        .map(|c| ((c.model_id.as_str(), c.strategy_id.as_str()), c))
        .collect();

    // Two header rows, like the source tables: column groups above,
    // strategy names below.
    let mut group_header = vec!["Model".to_string()];
    let mut previous_group = "";
    for strategy in &strategies {
        let group = column_group(strategy);
        group_header.push(if group == previous_group {
            String::new()
        } else {
            group.to_string()
        });
        previous_group = group;
    }
    let separator: Vec<String> = (0..=strategies.len()).map(|_| "---".to_string()).collect();
    let mut strategy_header = vec![String::new()];
    strategy_header.extend(strategies.iter().cloned());

    let mut out = String::new();
    writeln!(out, "{}", table_row(&group_header)).expect("string write");
    writeln!(out, "{}", table_row(&separator)).expect("string write");
    writeln!(out, "{}", table_row(&strategy_header)).expect("string write");

    for model in &models {
        let shown: Vec<Option<String>> = strategies
            .iter()
            .map(|strategy| {
                by_key
                    .get(&(model.as_str(), strategy.as_str()))
                    .map(|cell| match &cell.status {
                        CellStatus::Ok => format!("{:.2}", cell.metrics.f1),
                        CellStatus::Failed(_) => "failed".to_string(),
                    })
            })
            .collect();
        // Bold every cell tied for the row's best displayed F1.
        let best = shown
            .iter()
            .flatten()
            .filter_map(|s| s.parse::<f64>().ok())
            .fold(None::<f64>, |acc, v| Some(acc.map_or(v, |a| a.max(v))));
        let mut row = vec![model.clone()];
        for cell_text in shown {
            row.push(match cell_text {
                None => "—".to_string(),
                Some(text) => match (text.parse::<f64>(), best) {
                    (Ok(v), Some(b)) if v == b => format!("**{text}**"),
                    _ => text,
                },
            });
        }
        writeln!(out, "{}", table_row(&row)).expect("string write");
    }
    Ok(out)
}

pub fn render_csv(matrix: &ExperimentMatrix) -> Result<String, ReportError> {
    if matrix.cells.is_empty() {
        return Err(ReportError::EmptyMatrix);
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "model",
            "strategy",
            "status",
            "tp",
            "fp",
            "tn",
            "fn",
            "unparseable",
            "excluded",
            "evaluated",
            "precision",
            "recall",
            "f1",
        ])
        .map_err(|e| ReportError::Format(e.to_string()))?;
    for cell in &matrix.cells {
        let status = match &cell.status {
            CellStatus::Ok => "ok".to_string(),
            CellStatus::Failed(error) => format!("failed: {error}"),
        };
        writer
            .write_record([
                cell.model_id.clone(),
                cell.strategy_id.clone(),
                status,
                cell.confusion.tp.to_string(),
                cell.confusion.fp.to_string(),
                cell.confusion.tn.to_string(),
                cell.confusion.fn_.to_string(),
                cell.confusion.unparseable_count.to_string(),
                cell.confusion.excluded_count.to_string(),
                cell.confusion.evaluated().to_string(),
                cell.metrics.precision.to_string(),
                cell.metrics.recall.to_string(),
                cell.metrics.f1.to_string(),
            ])
            .map_err(|e| ReportError::Format(e.to_string()))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| ReportError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ReportError::Format(e.to_string()))
}

pub fn render_json(matrix: &ExperimentMatrix) -> Result<String, ReportError> {
    if matrix.cells.is_empty() {
        return Err(ReportError::EmptyMatrix);
    }
    serde_json::to_string_pretty(matrix)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| ReportError::Format(e.to_string()))
}
