//! Collates the summary tables under an output directory into one markdown
//! report. The report contains no timestamps, so identical inputs give a
//! byte-identical file.

use std::collections::BTreeSet;
use std::fmt::Write;
use std::fs;
use std::path::{Path, PathBuf};

use qmix_core::{load_manifest, SummaryTable};

use crate::args::ReportArgs;
use crate::error::{CliError, CliResult};
use crate::layout::{
    read_provenance, read_table, write_file, Provenance, TableKind, DATASETS_DIR, PCA_DIR,
    TABLES_DIR, TSNE_DIR,
};

pub const REPORT_FILE: &str = "report.md";
pub const NO_INPUTS: &str = "No inputs found: the output directory holds no datasets or tables.";

const MANIFEST_TAIL: &str = ".manifest.json";

fn sorted_entries(dir: &Path) -> CliResult<Vec<String>> {
    match fs::read_dir(dir) {
        Ok(rd) => {
            let mut names = Vec::new();
            for entry in rd {
                let entry = entry.map_err(|e| CliError::io(dir, e))?;
                names.push(entry.file_name().to_string_lossy().into_owned());
            }
            names.sort();
            Ok(names)
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(CliError::io(dir, e)),
    }
}

/// Problem slugs seen in dataset manifests or table file names.
fn discover(
    out: &Path,
    problems: &mut BTreeSet<String>,
    issues: &mut Vec<String>,
) -> CliResult<()> {
    let datasets = out.join(DATASETS_DIR);
    for name in sorted_entries(&datasets)? {
        let Some(stem) = name.strip_suffix(MANIFEST_TAIL) else {
            continue;
        };
        let csv = datasets.join(format!("{stem}.csv"));
        match load_manifest(&csv) {
            Ok(m) => {
                problems.insert(format!("{}n_{}", m.problem.n(), m.problem.config()));
            }
            Err(e) => issues.push(format!("unreadable manifest `{DATASETS_DIR}/{name}`: {e}")),
        }
    }
    for name in sorted_entries(&out.join(TABLES_DIR))? {
        if let Some(slug) = TableKind::ALL
            .iter()
            .find_map(|k| name.strip_suffix(&format!(".{}.csv", k.suffix())))
        {
            problems.insert(slug.to_string());
        }
    }
    Ok(())
}

fn provenance_section(s: &mut String, table: &SummaryTable, provenance: &Provenance) {
    s.push_str(
        "| Row | Dataset | Model | Runs | Master seed | SHA-256 |\n|---|---|---|---|---|---|\n",
    );
    for (label, _) in &table.rows {
        match provenance.get(label) {
            Some(p) => {
                for d in &p.datasets {
                    let _ = writeln!(
                        s,
                        "| {label} | `{}` | {} | {} | {} | `{}` |",
                        d.file,
                        d.model,
                        d.runs,
                        d.master_seed,
                        &d.sha256[..d.sha256.len().min(16)]
                    );
                }
            }
            None => {
                let _ = writeln!(s, "| {label} | (no provenance) | | | | |");
            }
        }
    }
    s.push('\n');
}

/// Cells carry eight decimals, so sums closer than this are a tie (e.g. both
/// 1 when k equals the parameter count).
const TREND_TIE: f64 = 1e-7;

pub fn trend_verdict(non_entangled: f64, entangled: f64) -> &'static str {
    if (entangled - non_entangled).abs() <= TREND_TIE {
        "tie"
    } else if entangled > non_entangled {
        "yes"
    } else {
        "no"
    }
}

/// Compares the summed explained variance of the leading three components
/// between non-entangled and entangled rows at each parameter count.
fn trend_section(s: &mut String, table: &SummaryTable, provenance: &Provenance) {
    s.push_str("#### Entanglement variance trend\n\n");
    let sum = |cells: &[Option<f64>]| -> Option<f64> { cells.iter().take(3).copied().sum() };
    let seeds = |label: &str| -> String {
        provenance
            .get(label)
            .map(|p| {
                p.datasets
                    .iter()
                    .map(|d| d.master_seed.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            })
            .unwrap_or_else(|| "?".into())
    };
    let mut lines = Vec::new();
    for (label, cells) in &table.rows {
        if label.ends_with(" ent") {
            continue;
        }
        let ent_label = format!("{label} ent");
        let Some((_, ent_cells)) = table.rows.iter().find(|(l, _)| *l == ent_label) else {
            continue;
        };
        if let (Some(plain), Some(ent)) = (sum(cells), sum(ent_cells)) {
            lines.push(format!(
                "| {label} | {plain:.8} | {ent:.8} | {} | {} / {} |",
                trend_verdict(plain, ent),
                seeds(label),
                seeds(&ent_label)
            ));
        }
    }
    if lines.is_empty() {
        s.push_str("No depth has both a non-entangled and an entangled row.\n\n");
        return;
    }
    s.push_str(
        "| Parameters | Sum (non-entangled) | Sum (entangled) | Entangled higher | Seeds |\n",
    );
    s.push_str("|---|---|---|---|---|\n");
    for line in lines {
        s.push_str(&line);
        s.push('\n');
    }
    s.push('\n');
}

fn figure_links(out: &Path, slug: &str, link_base: &Path) -> CliResult<Vec<(String, String)>> {
    let mut links = Vec::new();
    for dir in [PCA_DIR, TSNE_DIR] {
        for name in sorted_entries(&out.join(dir))? {
            if name.ends_with(".svg") && name.starts_with(&format!("{slug}_")) {
                let target = link_base.join(dir).join(&name);
                links.push((name, target.display().to_string()));
            }
        }
    }
    Ok(links)
}

/// Builds the markdown text; `link_base` prefixes figure links.
pub fn render(out: &Path, link_base: &Path) -> CliResult<String> {
    let mut problems = BTreeSet::new();
    let mut missing = Vec::new();
    discover(out, &mut problems, &mut missing)?;

    let mut s = String::from("# QAOA parameter analysis report\n\n");
    if problems.is_empty() {
        s.push_str(NO_INPUTS);
        s.push('\n');
        return Ok(s);
    }

    for slug in &problems {
        let _ = writeln!(s, "## {}\n", slug.replace('_', " "));
        for kind in TableKind::ALL {
            let table_path = kind.table_path(out, slug);
            let rel = format!("{TABLES_DIR}/{slug}.{}.csv", kind.suffix());
            let Some(table) = read_table(&table_path)? else {
                missing.push(format!(
                    "{}: {} (`{rel}`)",
                    slug.replace('_', " "),
                    kind.title()
                ));
                continue;
            };
            let provenance = read_provenance(&kind.provenance_path(out, slug))?;
            let _ = writeln!(s, "### {}\n\nSource: `{rel}`\n", kind.title());
            s.push_str(&table.to_markdown());
            s.push('\n');
            provenance_section(&mut s, &table, &provenance);
            for (label, _) in &table.rows {
                for d in provenance
                    .get(label)
                    .map(|p| p.datasets.as_slice())
                    .unwrap_or_default()
                {
                    if !Path::new(&d.file).exists() {
                        missing.push(format!(
                            "dataset `{}` referenced by {} row `{label}`",
                            d.file, rel
                        ));
                    }
                }
            }
            if kind == TableKind::PcaIndividual {
                trend_section(&mut s, &table, &provenance);
            }
        }
        let figures = figure_links(out, slug, link_base)?;
        if !figures.is_empty() {
            s.push_str("### Figures\n\n");
            for (name, target) in figures {
                let _ = writeln!(s, "- [{name}]({target})");
            }
            s.push('\n');
        }
    }

    s.push_str("## Missing inputs\n\n");
    if missing.is_empty() {
        s.push_str("None.\n");
    } else {
        for m in &missing {
            let _ = writeln!(s, "- {m}");
        }
    }
    Ok(s)
}

pub fn run(out: &Path, args: &ReportArgs) -> CliResult<PathBuf> {
    let path = args.output.clone().unwrap_or_else(|| out.join(REPORT_FILE));
    let report_dir = path.parent().unwrap_or(Path::new(""));
    let link_base = if report_dir == out {
        PathBuf::new()
    } else {
        out.to_path_buf()
    };
    let text = render(out, &link_base)?;
    write_file(&path, text.as_bytes())?;
    println!("report written to {}", path.display());
    Ok(path)
}
