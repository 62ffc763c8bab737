//! Strategy generating valid pipeline specs.

use proptest::prelude::*;
use xplainbench::datasets::TaskKind;
use xplainbench::metrics::Averaging;
use xplainbench::models::{FamilyParams, GbtParams, MlpOutput, MlpParams, ModelFamily, RfParams};
use xplainbench::pipeline::{
    EvalSample, ExplainerSpec, MetricsSpec, ModelSpec, PipelineSpec, SplitSpec, TaskSpec,
};
use xplainbench::shap::{ExplainMethod, KernelBudget, Target};

fn task() -> impl Strategy<Value = TaskSpec> {
    prop_oneof![
        (1usize..1_000_000, any::<u64>(), 40u32..160).prop_flat_map(|(n, seed, lo)| {
            // [40, 160] leaves no out-of-band heart rates and is rejected.
            let hi_max = if lo == 40 { 159 } else { 160 };
            (lo + 1..=hi_max).prop_map(move |hi| TaskSpec::BinaryAlertness { n, seed, hr_band_low: lo, hr_band_high: hi })
        }),
        "[a-z/_.]{1,20}".prop_map(|path| TaskSpec::YeastMulticlass { path }),
        ("[a-z/_.]{1,20}", proptest::option::of("[a-z_]{1,10}"))
            .prop_map(|(path, label_column)| TaskSpec::CustomCsv { path, label_column }),
    ]
}

fn hyperparameters(family: ModelFamily) -> BoxedStrategy<FamilyParams> {
    match family {
        ModelFamily::RandomForest => (1usize..500, proptest::option::of(1usize..30), 1usize..20, proptest::option::of(1usize..8), any::<bool>())
            .prop_map(|(n_trees, max_depth, min_samples_leaf, features_per_split, bootstrap)| {
                FamilyParams::RandomForest(RfParams { n_trees, max_depth, min_samples_leaf, features_per_split, bootstrap })
            })
            .boxed(),
        ModelFamily::Gbt => (0usize..500, 1usize..10, 1e-4f64..1.0, 0.0f64..10.0, 0.0f64..10.0)
            .prop_map(|(n_rounds, max_depth, learning_rate, lambda_l2, min_child_weight)| {
                FamilyParams::Gbt(GbtParams { n_rounds, max_depth, learning_rate, lambda_l2, min_child_weight })
            })
            .boxed(),
        ModelFamily::Mlp => (prop::collection::vec(1usize..256, 0..4), 0usize..100, 1usize..512, 1e-5f64..0.1, any::<bool>())
            .prop_map(|(hidden_sizes, epochs, batch_size, learning_rate, softmax)| {
                let output = if softmax { MlpOutput::Softmax } else { MlpOutput::Sigmoid };
                FamilyParams::Mlp(MlpParams { hidden_sizes, epochs, batch_size, learning_rate, output })
            })
            .boxed(),
    }
}

pub fn spec() -> impl Strategy<Value = PipelineSpec> {
    let family = prop_oneof![Just(ModelFamily::RandomForest), Just(ModelFamily::Gbt), Just(ModelFamily::Mlp)];
    (task(), family).prop_flat_map(|(task, family)| {
        let kind = task.known_kind();
        let methods: Vec<ExplainMethod> = if family == ModelFamily::Mlp {
            vec![ExplainMethod::Exact, ExplainMethod::Kernel]
        } else {
            vec![ExplainMethod::Exact, ExplainMethod::Kernel, ExplainMethod::Tree]
        };
        let targets: Vec<Target> = match kind {
            Some(TaskKind::Binary) => vec![Target::PositiveClassProb, Target::PredictedClassProb, Target::ClassIndex(0), Target::ClassIndex(1)],
            Some(TaskKind::Multiclass) => vec![Target::PredictedClassProb, Target::ClassIndex(7)],
            None => vec![Target::PositiveClassProb, Target::PredictedClassProb, Target::ClassIndex(3)],
        };
        let averagings: Vec<Averaging> = if kind == Some(TaskKind::Multiclass) {
            vec![Averaging::Weighted, Averaging::Macro]
        } else {
            vec![Averaging::BinaryPositive, Averaging::Weighted, Averaging::Macro]
        };
        let ovr = if kind == Some(TaskKind::Multiclass) && family.is_tree_based() { Just(true).boxed() } else { any::<bool>().boxed() };
        (
            (Just(task), "[a-z:0-9-]{1,12}", 0.01f64..0.99, any::<u64>(), hyperparameters(family), any::<u64>(), ovr),
            (
                prop::sample::select(methods),
                1usize..1000,
                proptest::option::of(10usize..5000),
                prop::sample::select(targets),
                any::<u64>(),
                1usize..1000,
                any::<u64>(),
            ),
            (prop::sample::select(averagings), 0.0f64..0.1),
        )
            .prop_map(move |((task, source, test_fraction, split_seed, hyperparameters, model_seed, ovr), e, (averaging, tau))| {
                PipelineSpec {
                    spec_version: 1,
                    source,
                    task,
                    split: SplitSpec { test_fraction, seed: split_seed },
                    model: ModelSpec { family, hyperparameters, seed: model_seed, ovr },
                    explainer: ExplainerSpec {
                        method: e.0,
                        background_size: e.1,
                        kernel_budget: e.2.map_or(KernelBudget::Full, KernelBudget::Samples),
                        target: e.3,
                        seed: e.4,
                        eval_sample: EvalSample { size: e.5, seed: e.6 },
                    },
                    metrics: MetricsSpec { averaging, tau },
                }
            })
    })
}
