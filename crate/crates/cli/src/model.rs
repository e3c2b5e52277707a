use std::path::Path;

use circuit_vi::{factor_graph_to_polynomial, parse_uai, Polynomial};

use crate::error::{CliError, Result};

pub struct Model {
    pub poly: Polynomial,
    /// Grid shape from a `# grid <rows> <cols>` comment, if any.
    pub grid: Option<(usize, usize)>,
}

pub fn grid_comment(rows: usize, cols: usize) -> String {
    format!("# grid {rows} {cols}\n")
}

fn read_grid(text: &str) -> Option<(usize, usize)> {
    text.lines()
        .take_while(|l| l.trim_start().starts_with('#') || l.trim().is_empty())
        .find_map(|l| {
            let mut toks = l.trim_start_matches([' ', '#']).split_whitespace();
            (toks.next()? == "grid").then_some(())?;
            Some((toks.next()?.parse().ok()?, toks.next()?.parse().ok()?))
        })
}

/// Loads a UAI `MARKOV` file (detected by its first token) or a polynomial
/// text file.
pub fn load(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let parse_err = |message: String| CliError::Parse { path: path.to_path_buf(), message };
    if text.split_whitespace().next() == Some("MARKOV") {
        let fg = parse_uai(&text).map_err(|e| parse_err(e.to_string()))?;
        let poly = factor_graph_to_polynomial(&fg)?;
        return Ok(Model { poly, grid: None });
    }
    let poly = Polynomial::from_text(&text).map_err(|e| parse_err(e.to_string()))?;
    Ok(Model { poly, grid: read_grid(&text) })
}
