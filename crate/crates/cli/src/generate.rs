use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use qmix_core::{
    brute_force_max_cut, run_experiment_batch, save_dataset, GraphConfig, MaxCutProblem,
    QaoaConfig, QaoaObjective, ShcrrConfig,
};

use crate::args::GenerateArgs;
use crate::error::{CliError, CliResult};
use crate::layout::{cell_stem, DATASETS_DIR};

/// One cell of the generation grid.
#[derive(Debug, Clone)]
pub struct Cell {
    pub problem: MaxCutProblem,
    pub qaoa: QaoaConfig,
}

/// Expands the flag lists into cells, rejecting 3L on 4-node problems
/// unless forced.
pub fn plan(args: &GenerateArgs) -> CliResult<Vec<Cell>> {
    let mut cells = Vec::new();
    for &n in &args.nodes {
        for &config in &args.config {
            let problem = MaxCutProblem::build(GraphConfig::from(config), n)?;
            for &depth in &args.depth {
                if n == 4 && depth == 3 && !args.force {
                    return Err(CliError::Usage(
                        "depth 3 on 4-node problems is outside the studied grid; pass --force to run it".into(),
                    ));
                }
                for &entangled in &args.entangled {
                    let qaoa = QaoaConfig::new(depth, entangled, args.init.into())?;
                    cells.push(Cell {
                        problem: problem.clone(),
                        qaoa,
                    });
                }
            }
        }
    }
    Ok(cells)
}

/// Edges in the 1-indexed node numbering used for display.
fn edge_list(problem: &MaxCutProblem) -> String {
    problem
        .edges()
        .iter()
        .map(|&(j, k)| format!("({},{})", j + 1, k + 1))
        .collect::<Vec<_>>()
        .join(" ")
}

fn dump_amplitudes(cell: &Cell, params: &[f64], path: &Path) -> CliResult<()> {
    let objective = QaoaObjective::new(cell.problem.clone(), cell.qaoa)?;
    let state = objective.final_state(params)?;
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    state
        .write_csv(BufWriter::new(file))
        .map_err(|e| CliError::io(path, e))
}

pub fn run(out: &Path, args: &GenerateArgs) -> CliResult<Vec<PathBuf>> {
    if args.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let cells = plan(args)?;
    let shcrr = ShcrrConfig {
        restarts: args.restarts,
        iterations_per_restart: args.iters,
        step_sigma: args.sigma,
        seed: args.seed,
        record_trace: false,
    };
    shcrr.validate()?;

    let dir = out.join(DATASETS_DIR);
    let mut written = Vec::with_capacity(cells.len());
    for cell in &cells {
        let label = format!("{} {}", cell.problem.label(), cell.qaoa.model_label());
        log::info!("generating {label}: {} runs, seed {}", args.runs, args.seed);
        let dataset = run_experiment_batch(&cell.problem, &cell.qaoa, &shcrr, args.runs)?;
        let path = dir.join(format!("{}.csv", cell_stem(&cell.problem, &cell.qaoa)));
        save_dataset(&dataset, &path)?;

        let values = &dataset.metadata.best_values;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let optimum = brute_force_max_cut(&cell.problem)
            .map(|m| m.value.to_string())
            .unwrap_or_else(|_| "?".into());
        println!(
            "{label}: {} x {} -> {}",
            dataset.rows(),
            dataset.dims(),
            path.display()
        );
        println!("  edges {}", edge_list(&cell.problem));
        println!("  expected cut mean {mean:.6}, best {best:.6}, max cut {optimum}");

        if args.dump_amplitudes {
            let amp_path = dir.join(format!(
                "{}.amplitudes.csv",
                cell_stem(&cell.problem, &cell.qaoa)
            ));
            dump_amplitudes(cell, dataset.matrix.row(0), &amp_path)?;
        }
        written.push(path);
    }
    Ok(written)
}
