//! Trains one kernel per invariant collection on the same data and
//! compares them.
//!
//! With the separation target the universal kernel can fit exactly (the
//! target kernel is its second input), while every PONITA kernel is bounded
//! below by the planted collisions. With the self-distillation target both
//! collections should fit their own teacher, which checks that training
//! works at all.

use crate::error::Result;
use crate::invariants::Collection;
use crate::kernel::dataset::{
    make_self_distill_dataset, make_separation_dataset_with, Dataset, SeparationOptions,
};
use crate::kernel::mlp::MlpKernel;
use crate::kernel::train::{initial_kernel, train_from, ExperimentConfig, TargetKind, TrainingSet};
use crate::report::{flag, num, RunReport};
use crate::sampling::seeded_rng;

/// The PONITA test MSE must reach this fraction of the collision floor.
pub const FLOOR_FACTOR: f64 = 0.9;
/// Self-distillation must shrink the training loss below this fraction.
pub const DISTILL_REDUCTION: f64 = 1e-2;

#[derive(Clone, Debug)]
pub struct CollectionResult {
    pub collection: Collection,
    pub kernel: MlpKernel,
    pub loss_history: Vec<f64>,
    pub test_mse: f64,
    pub train_floor_mse: f64,
    pub test_floor_mse: f64,
    pub test_collisions: usize,
}

impl CollectionResult {
    pub fn initial_train_mse(&self) -> f64 {
        self.loss_history[0]
    }

    pub fn final_train_mse(&self) -> f64 {
        *self.loss_history.last().unwrap()
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub results: Vec<CollectionResult>,
}

impl ExperimentOutcome {
    pub fn result(&self, collection: Collection) -> &CollectionResult {
        self.results
            .iter()
            .find(|r| r.collection == collection)
            .expect("both collections are trained")
    }

    /// Universal over PONITA test MSE.
    pub fn mse_ratio(&self) -> f64 {
        self.result(Collection::Universal).test_mse / self.result(Collection::Ponita).test_mse
    }

    /// Named checks, in report order.
    pub fn checks(&self) -> Vec<(Collection, &'static str, bool)> {
        let u = self.result(Collection::Universal);
        let p = self.result(Collection::Ponita);
        match self.config.target {
            TargetKind::Separation => vec![
                (Collection::Universal, "universal_test_mse_below_ponita", u.test_mse < p.test_mse),
                (
                    Collection::Ponita,
                    "ponita_test_mse_above_floor",
                    p.test_mse >= FLOOR_FACTOR * p.test_floor_mse,
                ),
            ],
            TargetKind::SelfDistill => self
                .results
                .iter()
                .map(|r| {
                    (
                        r.collection,
                        "train_loss_reduced",
                        r.final_train_mse() < DISTILL_REDUCTION * r.initial_train_mse(),
                    )
                })
                .collect(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks().iter().all(|c| c.2)
    }

    /// One row per collection.
    pub fn report(&self) -> RunReport {
        let mut r = RunReport::new(&[
            "seed",
            "target",
            "collection",
            "epochs",
            "learning_rate",
            "momentum",
            "initial_train_mse",
            "final_train_mse",
            "test_mse",
            "test_floor_mse",
            "test_collisions",
            "ratio_universal_over_ponita",
            "check",
            "threshold",
            "pass",
        ]);
        let cfg = &self.config;
        let threshold = match cfg.target {
            TargetKind::Separation => FLOOR_FACTOR,
            TargetKind::SelfDistill => DISTILL_REDUCTION,
        };
        let ratio = self.mse_ratio();
        for (res, (_, check, pass)) in self.results.iter().zip(self.checks()) {
            r.push(vec![
                cfg.seed.to_string(),
                cfg.target.name().to_owned(),
                res.collection.to_string(),
                cfg.epochs.to_string(),
                num(cfg.learning_rate),
                num(cfg.momentum),
                num(res.initial_train_mse()),
                num(res.final_train_mse()),
                num(res.test_mse),
                num(res.test_floor_mse),
                res.test_collisions.to_string(),
                num(ratio),
                check.to_owned(),
                num(threshold),
                flag(pass),
            ]);
        }
        r
    }
}

fn split_seed(seed: u64) -> u64 {
    seed ^ 0x5EED_5EED_5EED_5EED
}

fn teacher_seed(seed: u64, collection: Collection) -> u64 {
    seed.wrapping_add(match collection {
        Collection::Universal => 101,
        Collection::Ponita => 202,
    })
}

fn train_collection(
    cfg: &ExperimentConfig,
    collection: Collection,
    data: &Dataset,
) -> Result<CollectionResult> {
    let (train, test) = data.split(cfg.test_fraction, split_seed(cfg.seed));
    let train_set = TrainingSet::new(&train.samples, collection)?;
    let kernel = initial_kernel(cfg, collection, &train_set)?;
    let outcome = train_from(kernel, &train_set, cfg)?;
    let test_mse = if test.is_empty() {
        f64::NAN
    } else {
        TrainingSet::new(&test.samples, collection)?.mse(&outcome.kernel)?
    };
    Ok(CollectionResult {
        collection,
        kernel: outcome.kernel,
        loss_history: outcome.loss_history,
        test_mse,
        train_floor_mse: train.collision_floor_mse(),
        test_floor_mse: test.collision_floor_mse(),
        test_collisions: test.collisions.len(),
    })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let mut results = Vec::new();
    match cfg.target {
        TargetKind::Separation => {
            let opts = SeparationOptions {
                witness_fraction: cfg.witness_fraction,
                half_width: cfg.position_half_width,
            };
            let data = make_separation_dataset_with(cfg.seed, cfg.n_graphs, cfg.n_nodes, &opts)?;
            for collection in Collection::ALL {
                results.push(train_collection(cfg, collection, &data)?);
            }
        }
        TargetKind::SelfDistill => {
            for collection in Collection::ALL {
                let mut rng = seeded_rng(teacher_seed(cfg.seed, collection));
                let teacher = MlpKernel::random(&cfg.layer_sizes(collection), 1, 1, &mut rng)?;
                let (data, _) = make_self_distill_dataset(
                    cfg.seed,
                    cfg.n_graphs,
                    cfg.n_nodes,
                    collection,
                    &teacher,
                    cfg.position_half_width,
                )?;
                results.push(train_collection(cfg, collection, &data)?);
            }
        }
    }
    Ok(ExperimentOutcome {
        config: cfg.clone(),
        results,
    })
}
