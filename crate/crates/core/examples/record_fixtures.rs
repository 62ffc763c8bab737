//! Regenerates the replay fixtures and golden prompts under `tests/`.
//!
//! Replies are scripted; rerun after any change to the prompt text or request shape.

use std::path::Path;

use xplainbench::llm_client::{
    render_prompt, request_pipeline, ExchangeConfig, PromptFamily, PromptTask, RecordingTransport, ScriptedTransport,
};

fn reply(spec: &str) -> String {
    format!("Here is a pipeline specification for your request.\n\n```json\n{spec}\n```\n\nThe executor reports accuracy, precision, recall and F1 on the held-out split.")
}

fn scripted(task: PromptTask, family: PromptFamily) -> Vec<String> {
    use PromptFamily::*;
    use PromptTask::*;
    let spec = match (task, family) {
        (Binary, RandomForest) => r#"{
  "spec_version": 1,
  "task": {"kind": "binary_alertness", "n": 20000, "seed": 42},
  "split": {"test_fraction": 0.2, "seed": 42},
  "model": {"family": "random_forest", "hyperparameters": {"n_trees": 100, "min_samples_leaf": 1, "bootstrap": true}},
  "explainer": {"method": "tree", "background_size": 100},
  "metrics": {"averaging": "binary_positive", "tau": 0.001}
}"#,
        (Binary, Gbt) => r#"{
  "spec_version": 1,
  "task": {"kind": "binary_alertness"},
  "split": {"test_fraction": 0.2},
  "model": {"family": "gbt", "hyperparameters": {"n_rounds": 100, "max_depth": 3, "learning_rate": 0.1}},
  "explainer": {"method": "tree"}
}"#,
        (Binary, Mlp) => r#"{
  "spec_version": 1,
  "task": {"kind": "binary_alertness"},
  "model": {"family": "mlp", "hyperparameters": {"hidden_sizes": [64], "epochs": 20, "learning_rate": 0.001}},
  "explainer": {"method": "kernel", "kernel_budget": "full"}
}"#,
        (Multiclass, RandomForest) => r#"{
  "spec_version": 1,
  "task": {"kind": "yeast_multiclass", "path": "yeast.csv"},
  "model": {"family": "random_forest", "ovr": true, "hyperparameters": {"n_trees": 100}},
  "metrics": {"averaging": "weighted"}
}"#,
        (Multiclass, Gbt) => r#"{
  "spec_version": 1,
  "task": {"kind": "yeast_multiclass"},
  "model": {"family": "gbt", "ovr": true},
  "explainer": {"method": "tree", "target": "predicted_class_prob"},
  "metrics": {"averaging": "weighted"}
}"#,
        (Multiclass, Mlp) => r#"{
  "spec_version": 1,
  "task": {"kind": "yeast_multiclass"},
  "model": {"family": "mlp", "hyperparameters": {"hidden_sizes": [64], "output": "sigmoid"}},
  "explainer": {"method": "kernel"},
  "metrics": {"averaging": "weighted"}
}"#,
        (_, Lstm) => unreachable!("lstm has no fixture"),
    };
    let mut replies = Vec::new();
    if (task, family) == (Binary, Gbt) {
        // Wrong family name and a percentage split; corrected on the second turn.
        replies.push(reply(
            r#"{
  "spec_version": 1,
  "task": {"kind": "binary_alertness"},
  "split": {"test_fraction": 20},
  "model": {"family": "xgboost", "hyperparameters": {"n_rounds": 100, "max_depth": 3, "learning_rate": 0.1}},
  "explainer": {"method": "tree"}
}"#,
        ));
    }
    replies.push(reply(spec));
    replies
}

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests");
    for task in [PromptTask::Binary, PromptTask::Multiclass] {
        for family in PromptFamily::ALL {
            let golden = root.join("golden").join(format!("prompt_{}_{}.txt", task.as_str(), family.as_str()));
            std::fs::write(&golden, render_prompt(task, family)).expect("write golden");
            if family.executable().is_none() {
                continue;
            }
            let mut rec = RecordingTransport::new(ScriptedTransport::new(scripted(task, family)));
            let reply = request_pipeline(&mut rec, &ExchangeConfig::default(), task, family);
            reply.result.unwrap_or_else(|e| panic!("{} {}: {e}", task.as_str(), family.as_str()));
            let path = root.join("fixtures/replay").join(format!("{}_{}.json", task.as_str(), family.as_str()));
            rec.fixture.save(&path).expect("write fixture");
            println!("{} ({} exchanges)", path.display(), rec.fixture.entries.len());
        }
    }
}
