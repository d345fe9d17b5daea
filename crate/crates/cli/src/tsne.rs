use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use qmix_core::persistence::format_exact;
use qmix_core::{fit_tsne, Matrix, Source, TsneConfig, TsneResult};
use rayon::prelude::*;
use serde_json::json;

use crate::args::TsneArgs;
use crate::error::{CliError, CliResult};
use crate::layout::{
    load_pairs, pair_label, pair_stem, perplexity_column, problem_slug, upsert_rows, write_file,
    DatasetRef, LoadedDataset, RowProvenance, TableKind, TableRow, TSNE_DIR,
};
use crate::svg::{self, Series};

/// A dataset (or stacked pair) to embed at several perplexities.
struct Job {
    kind: TableKind,
    problem_slug: String,
    stem: String,
    title: String,
    label: String,
    depth: usize,
    data: Matrix,
    sources: Vec<Source>,
    datasets: Vec<DatasetRef>,
    perplexities: Vec<f64>,
}

impl Job {
    fn single(ds: LoadedDataset, perplexities: &[f64]) -> Self {
        let label = ds.qaoa().model_label();
        let source = Source::from_entangled(ds.qaoa().entangled);
        Job {
            kind: TableKind::TsneIndividual,
            problem_slug: problem_slug(ds.problem()),
            stem: ds.stem(),
            title: format!("{} {}", ds.problem().label(), label),
            label,
            depth: ds.qaoa().depth,
            sources: vec![source; ds.dataset.rows()],
            datasets: vec![ds.reference()],
            data: ds.dataset.matrix,
            perplexities: perplexities.to_vec(),
        }
    }

    fn pair(a: LoadedDataset, b: LoadedDataset, perplexities: &[f64]) -> CliResult<Self> {
        let label = pair_label(a.qaoa());
        let data = a.dataset.matrix.vstack(&b.dataset.matrix)?;
        Ok(Job {
            kind: TableKind::TsnePair,
            problem_slug: problem_slug(a.problem()),
            stem: pair_stem(a.problem(), a.qaoa()),
            title: format!("{} {} pair", a.problem().label(), label),
            label,
            depth: a.qaoa().depth,
            sources: qmix_core::pca::pair_labels(a.dataset.rows(), b.dataset.rows()),
            datasets: vec![a.reference(), b.reference()],
            data,
            perplexities: perplexities.to_vec(),
        })
    }
}

fn embedding_csv(job: &Job, fits: &[(f64, TsneResult)]) -> Vec<u8> {
    let mut out = String::from("run_index,source,y1,y2,perplexity\n");
    for (perplexity, fit) in fits {
        let mut counters: BTreeMap<Source, usize> = BTreeMap::new();
        for (row, source) in fit.embedding.iter_rows().zip(&job.sources) {
            let index = counters.entry(*source).or_default();
            out.push_str(&format!(
                "{index},{source},{},{},{perplexity}\n",
                format_exact(row[0]),
                format_exact(row[1])
            ));
            *index += 1;
        }
    }
    out.into_bytes()
}

fn trace_csv(fits: &[(f64, TsneResult)]) -> Vec<u8> {
    let mut out = String::from("iteration");
    for (p, _) in fits {
        out.push(',');
        out.push_str(&perplexity_column(*p));
    }
    out.push('\n');
    let len = fits
        .iter()
        .map(|(_, f)| f.kl_trace.len())
        .max()
        .unwrap_or(0);
    for i in 0..len {
        out.push_str(&(i + 1).to_string());
        for (_, f) in fits {
            out.push(',');
            if let Some(v) = f.kl_trace.get(i) {
                out.push_str(&format_exact(*v));
            }
        }
        out.push('\n');
    }
    out.into_bytes()
}

fn scatter(job: &Job, perplexity: f64, fit: &TsneResult) -> String {
    let series: Vec<Series> = [Source::NonEntangled, Source::Entangled]
        .into_iter()
        .filter(|s| job.sources.contains(s))
        .map(|s| {
            let entangled = s == Source::Entangled;
            Series {
                label: svg::model_legend(job.depth, entangled),
                color: svg::model_color(job.depth, entangled).to_string(),
                points: fit
                    .embedding
                    .iter_rows()
                    .zip(&job.sources)
                    .filter(|(_, src)| **src == s)
                    .map(|(row, _)| (row[0], row[1]))
                    .collect(),
            }
        })
        .collect();
    svg::scatter(
        &format!("{}: perplexity {perplexity}", job.title),
        "t-SNE 1",
        "t-SNE 2",
        &series,
    )
}

fn config_for(args: &TsneArgs, perplexity: f64) -> TsneConfig {
    TsneConfig {
        perplexity,
        iterations: args.iterations,
        learning_rate: args.learning_rate,
        init: args.init.into(),
        seed: args.seed,
        ..TsneConfig::default()
    }
}

pub fn run(out: &Path, args: &TsneArgs) -> CliResult<Vec<PathBuf>> {
    if args.inputs.is_empty() && args.pairs.is_empty() {
        return Err(CliError::Usage(
            "tsne needs at least one --input or --pair".into(),
        ));
    }
    if args.iterations == 0 {
        return Err(CliError::Usage("--iterations must be at least 1".into()));
    }
    let mut jobs: Vec<Job> = args
        .inputs
        .iter()
        .map(|p| LoadedDataset::load(p).map(|ds| Job::single(ds, &args.perplexities)))
        .collect::<CliResult<_>>()?;
    for (a, b) in load_pairs(&args.pairs)? {
        jobs.push(Job::pair(a, b, &args.pair_perplexities)?);
    }

    // every (dataset, perplexity) fit is independent
    let tasks: Vec<(usize, f64)> = jobs
        .iter()
        .enumerate()
        .flat_map(|(j, job)| job.perplexities.iter().map(move |&p| (j, p)))
        .collect();
    let results: Vec<Option<TsneResult>> = tasks
        .par_iter()
        .map(|&(j, perplexity)| {
            let job = &jobs[j];
            if perplexity >= job.data.rows() as f64 {
                log::warn!(
                    "{}: perplexity {perplexity} needs more than {} points, cell left as n/a",
                    job.title,
                    job.data.rows()
                );
                return Ok(None);
            }
            fit_tsne(&job.data, &config_for(args, perplexity)).map(Some)
        })
        .collect::<Result<_, _>>()?;

    let mut per_job: Vec<Vec<(f64, Option<TsneResult>)>> =
        jobs.iter().map(|_| Vec::new()).collect();
    for (&(j, p), r) in tasks.iter().zip(results) {
        per_job[j].push((p, r));
    }

    let dir = out.join(TSNE_DIR);
    let mut written = Vec::new();
    let mut grouped: BTreeMap<(String, &'static str), (TableKind, Vec<TableRow>)> = BTreeMap::new();
    for (job, fits) in jobs.iter().zip(per_job) {
        let cells: Vec<Option<f64>> = fits
            .iter()
            .map(|(_, r)| r.as_ref().map(|f| f.final_kl))
            .collect();
        let unconverged: BTreeMap<String, usize> = fits
            .iter()
            .filter_map(|(p, r)| {
                r.as_ref()
                    .map(|f| (perplexity_column(*p), f.unconverged_rows.len()))
            })
            .collect();
        let done: Vec<(f64, TsneResult)> = fits
            .into_iter()
            .filter_map(|(p, r)| r.map(|f| (p, f)))
            .collect();

        if !done.is_empty() {
            let path = dir.join(format!("{}.embedding.csv", job.stem));
            write_file(&path, &embedding_csv(job, &done))?;
            written.push(path);
            let path = dir.join(format!("{}.kl_trace.csv", job.stem));
            write_file(&path, &trace_csv(&done))?;
            written.push(path);
            for (p, fit) in &done {
                let path = dir.join(format!("{}.perp{p}.svg", job.stem));
                write_file(&path, scatter(job, *p, fit).as_bytes())?;
                written.push(path);
            }
        }
        println!(
            "{} [{}]: {}",
            job.title,
            job.kind.suffix(),
            job.perplexities
                .iter()
                .zip(&cells)
                .map(|(p, c)| match c {
                    Some(v) => format!("{p}: {v:.8}"),
                    None => format!("{p}: n/a"),
                })
                .collect::<Vec<_>>()
                .join(", ")
        );

        let settings = json!({
            "iterations": args.iterations,
            "learning_rate": args.learning_rate,
            "init": format!("{:?}", args.init).to_lowercase(),
            "seed": args.seed,
            "unconverged_rows": unconverged,
        });
        grouped
            .entry((job.problem_slug.clone(), job.kind.suffix()))
            .or_insert_with(|| (job.kind, Vec::new()))
            .1
            .push(TableRow {
                label: job.label.clone(),
                cells,
                provenance: RowProvenance {
                    datasets: job.datasets.clone(),
                    settings,
                },
            });
    }
    for ((slug, _), (kind, rows)) in grouped {
        let perplexities = match kind {
            TableKind::TsnePair => &args.pair_perplexities,
            _ => &args.perplexities,
        };
        let columns: Vec<String> = perplexities.iter().map(|p| perplexity_column(*p)).collect();
        written.push(upsert_rows(out, kind, &slug, &columns, rows)?);
    }
    Ok(written)
}
