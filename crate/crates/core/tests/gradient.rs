use nalgebra::DMatrix;

use m3_invariants::kernel::{
    make_self_distill_dataset, make_separation_dataset, train_kernel, ExperimentConfig, MlpKernel,
    TargetKind, TrainingSet,
};
use m3_invariants::sampling::seeded_rng;
use m3_invariants::Collection;

const STEP: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Worst relative error between `analytic` and central differences of `loss`.
fn fd_check(kernel: &MlpKernel, analytic: &[f64], loss: impl Fn(&MlpKernel) -> f64) -> f64 {
    let theta = kernel.parameters();
    let mut probe = kernel.clone();
    let mut worst: f64 = 0.0;
    for k in 0..theta.len() {
        let mut t = theta.clone();
        t[k] = theta[k] + STEP;
        probe.set_parameters(&t).unwrap();
        let up = loss(&probe);
        t[k] = theta[k] - STEP;
        probe.set_parameters(&t).unwrap();
        let down = loss(&probe);
        worst = worst.max(rel_err(analytic[k], (up - down) / (2.0 * STEP)));
    }
    worst
}

#[test]
fn micro_network_gradient() {
    let kernel = MlpKernel::random(&[2, 1, 1], 1, 1, &mut seeded_rng(1)).unwrap();
    assert_eq!(kernel.num_parameters(), 5);
    let inputs = DMatrix::from_fn(2, 7, |r, c| ((r * 7 + c) as f64 * 0.37).sin() * 2.0);
    let seed_grad = DMatrix::from_fn(1, 7, |_, c| (c as f64 * 0.9).cos());
    let loss = |k: &MlpKernel| k.forward(&inputs).component_mul(&seed_grad).sum();
    let cache = kernel.forward_cached(&inputs);
    let analytic = kernel.backward(&cache, &seed_grad).flatten();
    let worst = fd_check(&kernel, &analytic, loss);
    assert!(worst <= REL_TOL, "worst relative error {worst:e}");
}

#[test]
fn training_loss_gradient() {
    let data = make_separation_dataset(2, 6, 4).unwrap();
    for collection in Collection::ALL {
        let set = TrainingSet::new(&data.samples, collection).unwrap();
        let mut kernel = MlpKernel::random(&[collection.dim(), 5, 3, 1], 1, 1, &mut seeded_rng(8)).unwrap();
        kernel.normalization = m3_invariants::kernel::Normalization::fit(set.features());
        let (_, grad) = set.loss_and_gradient(&kernel).unwrap();
        let worst = fd_check(&kernel, &grad.flatten(), |k| set.mse(k).unwrap());
        assert!(worst <= REL_TOL, "{collection}: worst relative error {worst:e}");
    }
}

#[test]
fn self_distillation_drives_loss_down() {
    for collection in Collection::ALL {
        let cfg = ExperimentConfig {
            target: TargetKind::SelfDistill,
            collection,
            n_graphs: 30,
            n_nodes: 5,
            hidden: vec![16, 16],
            epochs: 300,
            ..ExperimentConfig::default()
        };
        let teacher = MlpKernel::random(&cfg.layer_sizes(collection), 1, 1, &mut seeded_rng(99)).unwrap();
        let (data, _) = make_self_distill_dataset(cfg.seed, cfg.n_graphs, cfg.n_nodes, collection, &teacher, 1.0).unwrap();
        let out = train_kernel(&cfg, &data.samples).unwrap();
        let (first, last) = (out.loss_history[0], *out.loss_history.last().unwrap());
        assert_eq!(out.loss_history.len(), cfg.epochs + 1);
        assert!(last < 0.1 * first, "{collection}: {first:e} -> {last:e}");
    }
}
