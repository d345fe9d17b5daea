use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qmix_core::persistence::format_exact;
use qmix_core::{fit_pca_with, pair_pca_with, PcaOptions, PcaResult, Source};
use rayon::prelude::*;
use serde_json::json;

use crate::args::PcaArgs;
use crate::error::{CliError, CliResult};
use crate::layout::{
    load_pairs, pair_label, pair_stem, problem_slug, upsert_rows, write_file, LoadedDataset,
    RowProvenance, TableKind, TableRow, PCA_DIR,
};
use crate::svg::{self, Series};

/// At most this many leading components get pairwise scatter plots.
const PLOTTED_COMPONENTS: usize = 3;

pub fn component_columns(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("PCA {i}")).collect()
}

fn projection_csv(result: &PcaResult, sources: &[Source]) -> Vec<u8> {
    let mut out = String::from("run_index,source");
    for i in 1..=result.k() {
        out.push_str(&format!(",pc{i}"));
    }
    out.push('\n');
    let mut counters: BTreeMap<Source, usize> = BTreeMap::new();
    for (row, source) in result.projected.iter_rows().zip(sources) {
        let index = counters.entry(*source).or_default();
        out.push_str(&format!("{index},{source}"));
        *index += 1;
        for v in row {
            out.push(',');
            out.push_str(&format_exact(*v));
        }
        out.push('\n');
    }
    out.into_bytes()
}

fn write_scatters(
    dir: &Path,
    stem: &str,
    title: &str,
    depth: usize,
    result: &PcaResult,
    sources: &[Source],
) -> CliResult<Vec<PathBuf>> {
    let shown = result.k().min(PLOTTED_COMPONENTS);
    let mut paths = Vec::new();
    for a in 0..shown {
        for b in a + 1..shown {
            let series: Vec<Series> = [Source::NonEntangled, Source::Entangled]
                .into_iter()
                .filter(|s| sources.contains(s))
                .map(|s| {
                    let entangled = s == Source::Entangled;
                    Series {
                        label: svg::model_legend(depth, entangled),
                        color: svg::model_color(depth, entangled).to_string(),
                        points: result
                            .projected
                            .iter_rows()
                            .zip(sources)
                            .filter(|(_, src)| **src == s)
                            .map(|(row, _)| (row[a], row[b]))
                            .collect(),
                    }
                })
                .collect();
            let body = svg::scatter(
                &format!("{title}: PCA {} vs PCA {}", a + 1, b + 1),
                &format!("PCA {}", a + 1),
                &format!("PCA {}", b + 1),
                &series,
            );
            let path = dir.join(format!("{stem}.pc{}_pc{}.svg", a + 1, b + 1));
            write_file(&path, body.as_bytes())?;
            paths.push(path);
        }
    }
    Ok(paths)
}

enum Job {
    Single(Box<LoadedDataset>),
    Pair(Box<(LoadedDataset, LoadedDataset)>),
}

struct Fitted {
    kind: TableKind,
    problem_slug: String,
    stem: String,
    title: String,
    depth: usize,
    row: TableRow,
    result: PcaResult,
    sources: Vec<Source>,
}

fn fit(job: Job, k: usize, options: PcaOptions) -> CliResult<Fitted> {
    let settings = json!({ "k": k, "zscore": options.zscore });
    match job {
        Job::Single(ds) => {
            let ds = *ds;
            let result = fit_pca_with(&ds.dataset.matrix, k, options)?;
            let source = Source::from_entangled(ds.qaoa().entangled);
            let label = ds.qaoa().model_label();
            Ok(Fitted {
                kind: TableKind::PcaIndividual,
                problem_slug: problem_slug(ds.problem()),
                stem: ds.stem(),
                title: format!("{} {}", ds.problem().label(), label),
                depth: ds.qaoa().depth,
                row: TableRow {
                    label,
                    cells: result
                        .explained_variance_ratio
                        .iter()
                        .map(|&v| Some(v))
                        .collect(),
                    provenance: RowProvenance {
                        datasets: vec![ds.reference()],
                        settings,
                    },
                },
                sources: vec![source; result.projected.rows()],
                result,
            })
        }
        Job::Pair(pair) => {
            let (a, b) = *pair;
            let result = pair_pca_with(&a.dataset.matrix, &b.dataset.matrix, k, options)?;
            let label = pair_label(a.qaoa());
            Ok(Fitted {
                kind: TableKind::PcaPair,
                problem_slug: problem_slug(a.problem()),
                stem: pair_stem(a.problem(), a.qaoa()),
                title: format!("{} {} pair", a.problem().label(), label),
                depth: a.qaoa().depth,
                row: TableRow {
                    label,
                    cells: result
                        .explained_variance_ratio
                        .iter()
                        .map(|&v| Some(v))
                        .collect(),
                    provenance: RowProvenance {
                        datasets: vec![a.reference(), b.reference()],
                        settings,
                    },
                },
                sources: result.labels.clone().unwrap_or_default(),
                result,
            })
        }
    }
}

pub fn run(out: &Path, args: &PcaArgs) -> CliResult<Vec<PathBuf>> {
    if args.inputs.is_empty() && args.pairs.is_empty() {
        return Err(CliError::Usage(
            "pca needs at least one --input or --pair".into(),
        ));
    }
    if args.k == 0 {
        return Err(CliError::Usage("-k must be at least 1".into()));
    }
    let mut jobs: Vec<Job> = args
        .inputs
        .iter()
        .map(|p| LoadedDataset::load(p).map(|ds| Job::Single(Box::new(ds))))
        .collect::<CliResult<_>>()?;
    jobs.extend(
        load_pairs(&args.pairs)?
            .into_iter()
            .map(|pair| Job::Pair(Box::new(pair))),
    );

    let options = PcaOptions {
        zscore: args.zscore,
    };
    let fitted: Vec<Fitted> = jobs
        .into_par_iter()
        .map(|job| fit(job, args.k, options))
        .collect::<CliResult<_>>()?;

    let dir = out.join(PCA_DIR);
    let columns = component_columns(args.k);
    let mut grouped: BTreeMap<(String, &'static str), (TableKind, Vec<TableRow>)> = BTreeMap::new();
    let mut written = Vec::new();
    for f in fitted {
        let proj = dir.join(format!("{}.projection.csv", f.stem));
        write_file(&proj, &projection_csv(&f.result, &f.sources))?;
        written.push(proj);
        written.extend(write_scatters(
            &dir, &f.stem, &f.title, f.depth, &f.result, &f.sources,
        )?);
        println!(
            "{} [{}]: {}",
            f.title,
            f.kind.suffix(),
            f.row
                .cells
                .iter()
                .map(|c| format!("{:.8}", c.unwrap_or(f64::NAN)))
                .collect::<Vec<_>>()
                .join(" ")
        );
        grouped
            .entry((f.problem_slug, f.kind.suffix()))
            .or_insert_with(|| (f.kind, Vec::new()))
            .1
            .push(f.row);
    }
    for ((slug, _), (kind, rows)) in grouped {
        written.push(upsert_rows(out, kind, &slug, &columns, rows)?);
    }
    Ok(written)
}
