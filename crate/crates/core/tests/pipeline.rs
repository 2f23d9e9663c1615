use bayeseval::bootstrap::{convergence_at_n, Cohort, ResamplePlan, Scheme};
use bayeseval::io::{emit_report, load_results_csv, load_signals_jsonl, write_results_csv, write_signals_jsonl, ReportFormat};
use bayeseval::rubric::{build_matrix, AttemptSignals, Schema, SignalRecord};
use bayeseval::simulate::{reference_cohort, sample_cohort};
use bayeseval::{evaluate_performance, Method, PriorData};

#[test]
fn signals_to_matrix_to_score_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let records: Vec<SignalRecord> = (0..24)
        .map(|i| SignalRecord {
            question_id: format!("q{}", i / 6),
            trial: (i % 6) as u64,
            signals: AttemptSignals {
                has_box: f64::from(i % 5 != 0),
                completion_bpt: 0.1 * (i % 7) as f64,
                token_ratio: 0.02 * (i % 9) as f64,
                ..AttemptSignals::binary(i % 3 != 0)
            },
            verifier_defaulted: true,
        })
        .collect();
    let signals_path = dir.path().join("signals.jsonl");
    write_signals_jsonl(&records, std::fs::File::create(&signals_path).unwrap()).unwrap();
    let loaded = load_signals_jsonl(&signals_path).unwrap();
    assert_eq!(loaded, records);

    let schema = Schema::builtin("format-aware").unwrap();
    let (matrix, _) = build_matrix(&loaded, &schema).unwrap();
    assert_eq!((matrix.questions(), matrix.trials(), matrix.max_category()), (4, 6, 4));

    let csv_path = dir.path().join("m.csv");
    write_results_csv(&matrix, std::fs::File::create(&csv_path).unwrap()).unwrap();
    let back = load_results_csv(&csv_path, Some(4), None).unwrap();
    assert_eq!(back, matrix);

    let a = evaluate_performance(&matrix, &PriorData::Uniform, schema.weights()).unwrap();
    let b = evaluate_performance(&back, &PriorData::Uniform, schema.weights()).unwrap();
    assert_eq!(emit_report(&a, ReportFormat::Json), emit_report(&b, ReportFormat::Json));
}

#[test]
fn cohort_reports_are_byte_identical_across_runs() {
    let coins = reference_cohort();
    let run = || {
        let matrices = sample_cohort(&coins, 10, 4).unwrap();
        let cohort = Cohort::new(coins.iter().map(|c| c.model_id().to_string()).collect(), matrices).unwrap();
        let plan = ResamplePlan::new(Scheme::RowWise, 100, 4, 10).unwrap();
        let d = convergence_at_n(&cohort, Method::Bayes, &plan).unwrap();
        (emit_report(&d, ReportFormat::Json), emit_report(&d, ReportFormat::Tsv))
    };
    assert_eq!(run(), run());
}
