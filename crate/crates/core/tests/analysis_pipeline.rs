use qmix_core::{
    evaluate_objective, fit_pca, fit_tsne, pair_pca, pair_tsne, run_experiment_batch,
    ExperimentDataset, InitState, MaxCutProblem, ParameterVector, QaoaConfig, ShcrrConfig, Source,
    TsneConfig,
};

fn generate(entangled: bool, runs: usize, seed: u64) -> ExperimentDataset {
    let problem = MaxCutProblem::cyclic(4).unwrap();
    let qaoa = QaoaConfig::new(1, entangled, InitState::Plus).unwrap();
    let shcrr = ShcrrConfig {
        seed,
        ..ShcrrConfig::default()
    };
    run_experiment_batch(&problem, &qaoa, &shcrr, runs).unwrap()
}

#[test]
fn stored_rows_reproduce_logged_best_values() {
    let ds = generate(true, 12, 77);
    let problem = &ds.metadata.problem;
    for (r, row) in ds.matrix.iter_rows().enumerate() {
        assert!(row.iter().all(|v| (0.0..std::f64::consts::TAU).contains(v)));
        let value = evaluate_objective(
            problem,
            &ds.metadata.qaoa,
            &ParameterVector::from_flat(row).unwrap(),
        )
        .unwrap();
        assert!(
            (value - ds.metadata.best_values[r]).abs() <= 1e-10,
            "row {r}"
        );
    }
}

#[test]
fn pair_pca_on_three_parameter_models_keeps_all_variance() {
    let a = generate(false, 40, 5);
    let b = generate(true, 40, 5);
    let pca = pair_pca(&a.matrix, &b.matrix, 3).unwrap();
    assert_eq!(pca.projected.rows(), 80);
    assert_eq!(pca.projected.cols(), 3);
    let total: f64 = pca.explained_variance_ratio.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    let labels = pca.labels.as_ref().unwrap();
    assert_eq!(
        labels.iter().filter(|s| **s == Source::Entangled).count(),
        40
    );

    let single = fit_pca(&a.matrix, 3).unwrap();
    assert!(single
        .explained_variance_ratio
        .windows(2)
        .all(|w| w[0] >= w[1]));
}

#[test]
fn tsne_on_generated_data_reaches_small_kl_at_high_perplexity() {
    let a = generate(false, 100, 2024);
    let b = generate(true, 100, 2024);

    let single = fit_tsne(&a.matrix, &TsneConfig::with_perplexity(99.0)).unwrap();
    assert!(single.final_kl < 1e-2, "individual KL {}", single.final_kl);

    let pair = pair_tsne(&a.matrix, &b.matrix, &TsneConfig::with_perplexity(199.0)).unwrap();
    assert!(pair.final_kl < 1e-2, "pair KL {}", pair.final_kl);
    assert_eq!(pair.embedding.rows(), 200);
}

#[test]
fn pair_tsne_descends_after_exaggeration() {
    let a = generate(false, 100, 2024);
    let b = generate(true, 100, 2024);
    for perplexity in [3.0, 30.0, 99.0] {
        let config = TsneConfig::with_perplexity(perplexity);
        let result = pair_tsne(&a.matrix, &b.matrix, &config).unwrap();
        let start = result.kl_trace[config.exaggeration_iters - 1];
        let min_after = result.kl_trace[config.exaggeration_iters..]
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!(result.final_kl <= start, "perplexity {perplexity}");
        // the final KL stays close to the best one seen after the switch
        assert!(
            result.final_kl <= min_after + 0.05,
            "perplexity {perplexity}"
        );
    }
}

// Momentum plus gains does not descend monotonically step by step: the trace
// jumps for a few iterations right after exaggeration is switched off and
// oscillates later. Kept as a record of the stricter property.
#[test]
#[ignore = "momentum descent is not monotone per step"]
fn pair_tsne_kl_trace_non_increasing_per_step() {
    let a = generate(false, 100, 2024);
    let b = generate(true, 100, 2024);
    let config = TsneConfig::with_perplexity(30.0);
    let result = pair_tsne(&a.matrix, &b.matrix, &config).unwrap();
    let post = &result.kl_trace[config.exaggeration_iters - 1..];
    for (i, w) in post.windows(2).enumerate() {
        assert!(
            w[1] <= w[0] + 1e-6,
            "step {} rose by {:e}",
            i + config.exaggeration_iters,
            w[1] - w[0]
        );
    }
}
