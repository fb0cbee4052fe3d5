use cgnn::consolidation::RegularizerKind;
use cgnn::graph::NewNode;
use cgnn::harness::*;
use cgnn::synth::SynthConfig;
use cgnn::trainer::{ModelKind, TrainConfig};
use cgnn::{NodeId, SnapshotDelta};

fn synth(steps: u32, per_step: usize, seed: u64) -> SynthConfig {
    SynthConfig {
        steps,
        per_step,
        feature_dim: 8,
        structure_shift: steps.min(2),
        attribute_shift: steps.min(3),
        seed,
        ..SynthConfig::default()
    }
}

fn train() -> TrainConfig {
    TrainConfig {
        epochs: 3,
        batch_size: 8,
        fanout: 4,
        hidden: 8,
        memory_size: 16,
        seed: 3,
        ..TrainConfig::default()
    }
}

fn spec(models: &[ModelKind]) -> ExperimentSpec {
    ExperimentSpec {
        data: DataSource::Synth(synth(4, 30, 1)),
        models: models.to_vec(),
        train: train(),
        cohorts: vec![0, 2],
        ..ExperimentSpec::default()
    }
}

fn untimed(rows: &[MetricRow]) -> Vec<MetricRow> {
    rows.iter()
        .map(|r| MetricRow {
            train_seconds_per_epoch: 0.0,
            detect_seconds: 0.0,
            ..r.clone()
        })
        .collect()
}

#[test]
fn split_is_deterministic_and_partitions_labeled_nodes() {
    let mut stream = DataSource::Synth(synth(3, 21, 2)).load().unwrap();
    stream[1].new_nodes[0].label = None;
    let a = split_stream(&stream, 0.7, 9);
    assert_eq!(a, split_stream(&stream, 0.7, 9));
    assert_ne!(a, split_stream(&stream, 0.7, 10));
    for (t, d) in stream.iter().enumerate() {
        let labeled: Vec<NodeId> = d.new_nodes.iter().filter(|n| n.label.is_some()).map(|n| n.id).collect();
        let train = labeled.iter().filter(|v| a.train[v.index()]).count();
        assert_eq!(train, (0.7 * labeled.len() as f64).round() as usize);
        for v in &labeled {
            assert_ne!(a.train[v.index()], a.test_by_step[t].contains(v));
        }
        assert_eq!(train + a.test_by_step[t].len(), labeled.len());
    }
    let unlabeled = stream[1].new_nodes[0].id;
    assert!(!a.train[unlabeled.index()]);
    assert!(!a.test_by_step[1].contains(&unlabeled));
}

#[test]
fn experiment_is_deterministic_apart_from_timing() {
    let s = spec(&[ModelKind::Continual, ModelKind::Online]);
    let a = run_experiment(&s).unwrap();
    let b = run_experiment(&s).unwrap();
    assert_eq!(untimed(&a.rows), untimed(&b.rows));
    assert_eq!(a.rows.len(), 2 * 4);
    assert!(a.rows.iter().all(|r| r.cohort == "all"));
    for r in &a.rows {
        assert!((0.0..=1.0).contains(&r.macro_f1) && (0.0..=1.0).contains(&r.accuracy));
    }
}

#[test]
fn outputs_are_written_with_header_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let s = ExperimentSpec {
        out_dir: Some(dir.path().to_path_buf()),
        ..spec(&[ModelKind::Online])
    };
    let report = run_experiment(&s).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with('#'));
    assert_eq!(lines.next().unwrap(), CSV_HEADER);
    assert_eq!(lines.count(), report.rows.len());
    let summary: Vec<SummaryRow> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let mean = report.rows.iter().map(|r| r.macro_f1).sum::<f64>() / report.rows.len() as f64;
    assert!((summary[0].macro_f1 - mean).abs() < 1e-12);
}

/// Two classes with one-hot features and edges only inside a class: the
/// mean of any neighborhood is the class indicator itself.
fn separable_stream(steps: u32, per_step: usize) -> Vec<SnapshotDelta> {
    let mut out = Vec::new();
    for t in 0..steps {
        let start = t as usize * per_step;
        let new_nodes: Vec<NewNode> = (0..per_step)
            .map(|j| {
                let k = ((start + j) % 2) as u32;
                NewNode {
                    id: NodeId::from(start + j),
                    features: if k == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] },
                    label: Some(k),
                }
            })
            .collect();
        let edge_adds = (start + 2..start + per_step)
            .map(|v| (NodeId::from(v), NodeId::from(v - 2)))
            .collect();
        out.push(SnapshotDelta {
            time: t,
            new_nodes,
            edge_adds,
            ..SnapshotDelta::empty(t)
        });
    }
    out
}

#[test]
fn separable_toy_stream_is_classified_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    cgnn::io::write_stream(dir.path(), &separable_stream(3, 40)).unwrap();
    let s = ExperimentSpec {
        data: DataSource::Dir(dir.path().to_path_buf()),
        models: vec![ModelKind::Continual, ModelKind::Retrained],
        train: TrainConfig {
            epochs: 30,
            lr: 0.1,
            ..train()
        },
        ..ExperimentSpec::default()
    };
    let report = run_experiment(&s).unwrap();
    for r in report.rows.iter().filter(|r| r.step == 2) {
        assert_eq!(r.accuracy, 1.0, "{r:?}");
        assert_eq!(r.macro_f1, 1.0, "{r:?}");
    }
}

#[test]
fn one_step_stream_gives_identical_rows_for_retrained_and_continual() {
    let s = ExperimentSpec {
        data: DataSource::Synth(synth(1, 40, 4)),
        cohorts: vec![0],
        ..spec(&[ModelKind::Retrained, ModelKind::Continual])
    };
    let rows = untimed(&run_case_study(&s).unwrap().rows);
    let (re, co): (Vec<MetricRow>, Vec<MetricRow>) = rows.into_iter().partition(|r| r.model == "retrained");
    assert_eq!(re.len(), co.len());
    for (a, b) in re.iter().zip(&co) {
        assert_eq!((a.step, &a.cohort, a.macro_f1, a.accuracy), (b.step, &b.cohort, b.macro_f1, b.accuracy));
    }
}

#[test]
fn cohort_rows_match_the_step_rows_they_come_from() {
    let study = run_case_study(&spec(&[ModelKind::Continual])).unwrap();
    let plain = run_experiment(&spec(&[ModelKind::Continual])).unwrap();
    assert_eq!(untimed(&plain.rows), untimed(&study.series(ModelKind::Continual, "all").into_iter().cloned().collect::<Vec<_>>()));
    for c in [0u32, 2] {
        let cohort = study.series(ModelKind::Continual, &format!("V^{c}"));
        assert_eq!(cohort.len(), 4 - c as usize);
        assert_eq!(cohort[0].step, c);
        let same_step = plain.rows.iter().find(|r| r.step == c).unwrap();
        assert_eq!(cohort[0].accuracy, same_step.accuracy);
        assert_eq!(cohort[0].macro_f1, same_step.macro_f1);
    }
}

#[test]
fn case_study_dumps_cohort_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    let s = ExperimentSpec {
        out_dir: Some(dir.path().to_path_buf()),
        ..spec(&[ModelKind::Online])
    };
    run_case_study(&s).unwrap();
    let stream = s.data.load().unwrap();
    let split = split_stream(&stream, s.split, s.split_seed);
    let cohort0 = split.test_by_step[0].len();
    let cohort2 = split.test_by_step[2].len();
    for t in 0..4 {
        let csv = std::fs::read_to_string(dir.path().join("online").join(format!("embeddings_step{t}.csv"))).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        let want = if t >= 2 { cohort0 + cohort2 } else { cohort0 };
        assert_eq!(lines.len(), want);
        assert!(lines.iter().all(|l| l.split(',').count() == 1 + 8));
    }
}

#[test]
fn empty_cohort_is_rejected() {
    let s = ExperimentSpec {
        cohorts: vec![9],
        ..spec(&[ModelKind::Online])
    };
    assert!(run_case_study(&s).is_err());
}

#[test]
fn accumulated_test_set_grows_each_step() {
    let s = ExperimentSpec {
        accumulate_test: true,
        ..spec(&[ModelKind::Pretrained])
    };
    let acc = run_experiment(&s).unwrap();
    let plain = run_experiment(&spec(&[ModelKind::Pretrained])).unwrap();
    assert_eq!(acc.rows[0].accuracy, plain.rows[0].accuracy);
    // A frozen model's accuracy on the union is the size-weighted mean.
    let stream = s.data.load().unwrap();
    let split = split_stream(&stream, s.split, s.split_seed);
    let sizes: Vec<f64> = split.test_by_step.iter().map(|v| v.len() as f64).collect();
    let weighted: f64 = plain.rows.iter().zip(&sizes).map(|(r, n)| r.accuracy * n).sum::<f64>() / sizes.iter().sum::<f64>();
    assert!((acc.rows[3].accuracy - weighted).abs() < 1e-12);
}

#[test]
fn zero_lambda_ablation_point_equals_unregularized_point() {
    let s = spec(&[ModelKind::Continual]);
    let lam = run_ablation(&s, AblationAxis::Lambda, &["0".into()]).unwrap();
    let reg = run_ablation(
        &ExperimentSpec {
            train: TrainConfig {
                regularizer: RegularizerKind::None,
                ..train()
            },
            ..s
        },
        AblationAxis::Lambda,
        &["200".into()],
    )
    .unwrap();
    assert_eq!(untimed(&lam[0].rows), untimed(&reg[0].rows));
}

#[test]
fn view_combos_map_to_replay_and_regularizer_switches() {
    let base = train();
    let none = AblationAxis::ViewCombo.apply(&base, "none").unwrap();
    assert_eq!((none.replay, none.regularizer), (false, RegularizerKind::None));
    let data = AblationAxis::ViewCombo.apply(&base, "data").unwrap();
    assert_eq!((data.replay, data.regularizer), (true, RegularizerKind::None));
    let model = AblationAxis::ViewCombo.apply(&base, "model").unwrap();
    assert_eq!((model.replay, model.regularizer), (false, RegularizerKind::Ewc));
    for cfg in [&none, &data, &model] {
        assert_eq!(cfg.memory_size, base.memory_size);
    }
    assert_eq!(AblationAxis::ViewCombo.apply(&base, "both").unwrap(), base);
    assert!(AblationAxis::ViewCombo.apply(&base, "half").is_err());
    assert!(AblationAxis::MemorySize.apply(&base, "many").is_err());
    for axis in ["detector", "memory_strategy", "memory_size", "lambda", "reg_kind", "view_combo"] {
        let axis: AblationAxis = axis.parse().unwrap();
        for v in axis.default_values() {
            axis.apply(&base, &v).unwrap();
        }
    }
}

#[test]
fn ablation_writes_one_row_block_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let s = ExperimentSpec {
        out_dir: Some(dir.path().to_path_buf()),
        ..spec(&[ModelKind::Continual])
    };
    let values = AblationAxis::MemoryStrategy.default_values();
    let grid = run_ablation(&s, AblationAxis::MemoryStrategy, &values).unwrap();
    assert_eq!(grid.len(), 3);
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 4);
    assert!(csv.lines().skip(1).all(|l| values.iter().any(|v| l.starts_with(&format!("{v},continual,")))));
}

#[test]
fn tiny_scalability_run_is_well_formed() {
    let rep = run_scalability(&synth(2, 0, 5), &train(), ScaleAxis::NetworkSize, &[40, 80], 10, 1).unwrap();
    assert_eq!(rep.points.len(), 2);
    for (p, base) in rep.points.iter().zip([40, 80]) {
        assert_eq!(p.nodes, base + 10);
        assert_eq!(p.delta_nodes, 10);
        assert!(p.ball >= 10 && p.ball <= p.nodes);
        assert_eq!(p.epoch_seconds.keys().collect::<Vec<_>>(), ["continual", "retrained"]);
        assert_eq!(p.detect_seconds.len(), 3);
        assert!(p.epoch_seconds.values().chain(p.detect_seconds.values()).all(|&s| s >= 0.0 && s.is_finite()));
    }
    assert!(rep.slopes.contains_key("retrained"));
    let stream = run_scalability(&synth(2, 0, 5), &train(), ScaleAxis::StreamSize, &[5, 10], 40, 1).unwrap();
    assert_eq!(stream.points[1].delta_nodes, 10);
}

#[test]
fn least_squares_slope() {
    assert!((slope(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 2.0).abs() < 1e-12);
    assert_eq!(slope(&[1.0, 1.0], &[0.0, 5.0]), 0.0);
}
