//! Manifest in, trained projector, index, recall out.

use gakit::manifest::{read_manifest, write_manifest, ManifestDoc};
use gakit::synthetic::{ClusterTask, ClusterTaskSpec};
use gakit::{
    build_index, recall_at_k, sequence_representation, train_projector, EvalCase, IndexInput,
    KernelConfig, PoolingPolicy, Query, RepresentationVector, TrainerConfig,
};

#[test]
fn manifest_round_trip_keeps_kernel_values() {
    let task = ClusterTask::generate(&ClusterTaskSpec {
        docs: 6,
        ..ClusterTaskSpec::default()
    });
    let docs: Vec<ManifestDoc> = task
        .docs
        .iter()
        .map(|d| ManifestDoc {
            sequence: d.clone(),
            meta: String::new(),
        })
        .collect();
    let mut buf = Vec::new();
    write_manifest(&docs, &mut buf).unwrap();
    let back = read_manifest(&buf[..]).unwrap();
    let cfg = KernelConfig {
        normalize_gak: true,
        ..KernelConfig::default()
    };
    for (a, b) in docs.iter().zip(&back) {
        let k0 = gakit::gak_forward(a.sequence.slices(), docs[0].sequence.slices(), &cfg).unwrap();
        let k1 = gakit::gak_forward(b.sequence.slices(), back[0].sequence.slices(), &cfg).unwrap();
        // f32 storage
        assert!((k0 - k1).abs() < 1e-5, "{k0} vs {k1}");
    }
}

#[test]
fn trained_projector_retrieves_same_cluster() {
    let task = ClusterTask::generate(&ClusterTaskSpec::default());
    let tcfg = TrainerConfig {
        learning_rate: 0.5,
        steps: 300,
        seed: 3,
        input_dim: 32,
        output_dim: 16,
        alpha: 0.0,
    };
    let out = train_projector(&task.hidden, &task.views(), &KernelConfig::default(), &tcfg).unwrap();
    assert!(out.trace.last().unwrap() < &out.trace[0]);
    let reps: Vec<Vec<f64>> = task.hidden.iter().map(|h| out.projector.apply(h)).collect();
    let index = build_index(
        (32..64)
            .map(|i| IndexInput::new(task.docs[i].doc_id(), reps[i].clone(), ""))
            .collect(),
        &KernelConfig::default(),
    )
    .unwrap();
    let cases: Vec<EvalCase> = (0..32)
        .map(|q| EvalCase {
            query: Query::Vector(RepresentationVector::new("q", 1, &reps[q]).unwrap()),
            gold_doc_ids: (32..64)
                .filter(|&j| task.cluster_of[j] == task.cluster_of[q])
                .map(|j| task.docs[j].doc_id().to_string())
                .collect(),
        })
        .collect();
    let report = recall_at_k(&cases, &index, &[1, 5], PoolingPolicy::AveragePool).unwrap();
    assert!(report.recall[0] >= 0.9, "{:?}", report.recall);
}

#[test]
fn pooled_documents_index_and_find_themselves() {
    let task = ClusterTask::generate(&ClusterTaskSpec {
        docs: 10,
        ..ClusterTaskSpec::default()
    });
    for policy in [PoolingPolicy::LastToken, PoolingPolicy::AveragePool] {
        let inputs = task
            .docs
            .iter()
            .map(|d| {
                let r = sequence_representation(d.doc_id(), d.slices(), policy).unwrap();
                IndexInput::new(d.doc_id(), r.values().to_vec(), "")
            })
            .collect();
        let index = build_index(inputs, &KernelConfig::default()).unwrap();
        let cases: Vec<EvalCase> = task
            .docs
            .iter()
            .map(|d| EvalCase {
                query: Query::Sequence(d.clone()),
                gold_doc_ids: vec![d.doc_id().to_string()],
            })
            .collect();
        let report = recall_at_k(&cases, &index, &[1], policy).unwrap();
        assert_eq!(report.recall, vec![1.0]);
    }
}
