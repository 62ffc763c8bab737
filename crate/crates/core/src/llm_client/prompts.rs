use serde::{Deserialize, Serialize};

use crate::models::ModelFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptTask {
    Binary,
    Multiclass,
}

impl PromptTask {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptTask::Binary => "binary",
            PromptTask::Multiclass => "multiclass",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "binary" => Some(PromptTask::Binary),
            "multiclass" => Some(PromptTask::Multiclass),
            _ => None,
        }
    }

    /// Task kind the reply must use.
    pub fn spec_kind(self) -> &'static str {
        match self {
            PromptTask::Binary => "binary_alertness",
            PromptTask::Multiclass => "yeast_multiclass",
        }
    }
}

/// Families the prompts can name; `Lstm` renders but cannot be executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptFamily {
    RandomForest,
    Gbt,
    Mlp,
    Lstm,
}

impl PromptFamily {
    pub const ALL: [PromptFamily; 4] = [PromptFamily::RandomForest, PromptFamily::Gbt, PromptFamily::Mlp, PromptFamily::Lstm];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptFamily::RandomForest => "random_forest",
            PromptFamily::Gbt => "gbt",
            PromptFamily::Mlp => "mlp",
            PromptFamily::Lstm => "lstm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.as_str() == s)
    }

    pub fn executable(self) -> Option<ModelFamily> {
        match self {
            PromptFamily::RandomForest => Some(ModelFamily::RandomForest),
            PromptFamily::Gbt => Some(ModelFamily::Gbt),
            PromptFamily::Mlp => Some(ModelFamily::Mlp),
            PromptFamily::Lstm => None,
        }
    }

    /// Wording of the family inside the prompt body.
    fn prompt_name(self, task: PromptTask) -> &'static str {
        match (task, self) {
            (PromptTask::Binary, PromptFamily::RandomForest) => "random forest",
            (PromptTask::Binary, PromptFamily::Gbt) => "xgboost",
            (PromptTask::Binary, PromptFamily::Mlp) => "mlp",
            (PromptTask::Binary, PromptFamily::Lstm) => "lstm",
            (PromptTask::Multiclass, PromptFamily::RandomForest) => "Random Forest",
            (PromptTask::Multiclass, PromptFamily::Gbt) => "XGBoost",
            (PromptTask::Multiclass, PromptFamily::Mlp) => "MLP",
            (PromptTask::Multiclass, PromptFamily::Lstm) => "LSTM",
        }
    }
}

impl From<ModelFamily> for PromptFamily {
    fn from(f: ModelFamily) -> Self {
        match f {
            ModelFamily::RandomForest => PromptFamily::RandomForest,
            ModelFamily::Gbt => PromptFamily::Gbt,
            ModelFamily::Mlp => PromptFamily::Mlp,
        }
    }
}

const FAMILY_SLOT: &str = "{family}";

const BINARY_PROMPT: &str = "chat I have a csv with 200k rows the rows are analyzed
below heart_rate,yawning,looks_straight,eyes_closed,alert
heart_rate = human heart rate (positive integer
usually no more than 160)
yawning = boolean value that indicates if the person is
yawning in each row or not 0 means yes 1 means no
looks_straight = boolean value that indicates if the
person is looking straight ahead or not
, again 0 means no 1 means
yes eyes_closed = boolean that indicates
if the eyes of the
person are closed 0 means yes 1 means no
I want you to train and evaluate (split the dataset
randomly) an {family} model.
for the evaluation I want the accuracy, the precision,
the recall and F1 score that the model achieved";

const MULTICLASS_PROMPT: &str = "I have a CSV file called yeast.csv.
It has 8 columns and 1484 rows, with the following
characteristics Instances: 1,484 yeast proteins (rows)
Features: 8 numeric features (attributes):
mcg: McGeoch's method for signal sequence recognition
gvh: von Heijne's method
alm: Score for the presence of an Aliphatic region
mit: Score for a mitochondrial targeting sequence
erl, pox, vac, etc.
Label (target): Protein localization site (e.g., CYT,
NUC, MIT, ME1, etc.)
Task: Multi-class classification (predict
protein location from numeric features)
The features are numeric, and the last
column is the target (protein localization site). I want
to build a classification model using {family} to predict the target. Can you help
me with the code to train and evaluate the model?
for the evaluation I want the accuracy, the precision,
the recall and F1 score that the model achieved";

/// Published shape of the reply; every field except those marked required has a default.
pub const SPEC_SCHEMA: &str = r#"{
  "type": "object",
  "required": ["spec_version", "task", "model"],
  "additionalProperties": false,
  "properties": {
    "spec_version": {"const": 1},
    "source": {"type": "string", "default": "baseline"},
    "task": {
      "oneOf": [
        {"type": "object", "additionalProperties": false, "required": ["kind"],
         "properties": {"kind": {"const": "binary_alertness"},
                        "n": {"type": "integer", "minimum": 1, "default": 20000},
                        "seed": {"type": "integer", "minimum": 0, "default": 42},
                        "hr_band_low": {"type": "integer", "minimum": 40, "default": 60},
                        "hr_band_high": {"type": "integer", "maximum": 160, "default": 100}}},
        {"type": "object", "additionalProperties": false, "required": ["kind"],
         "properties": {"kind": {"const": "yeast_multiclass"},
                        "path": {"type": "string", "default": "yeast.csv"}}},
        {"type": "object", "additionalProperties": false, "required": ["kind", "path"],
         "properties": {"kind": {"const": "custom_csv"},
                        "path": {"type": "string"},
                        "label_column": {"type": ["string", "null"], "default": null}}}
      ]
    },
    "split": {"type": "object", "additionalProperties": false,
              "properties": {"test_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1, "default": 0.2},
                             "seed": {"type": "integer", "minimum": 0, "default": 42}}},
    "model": {
      "type": "object", "additionalProperties": false, "required": ["family"],
      "properties": {
        "family": {"enum": ["random_forest", "gbt", "mlp"]},
        "seed": {"type": "integer", "minimum": 0, "default": 42},
        "ovr": {"type": "boolean", "description": "one-vs-rest; required true for tree families on multiclass tasks"},
        "hyperparameters": {
          "type": "object",
          "description": "keys depend on family",
          "random_forest": {"n_trees": 100, "max_depth": null, "min_samples_leaf": 1, "features_per_split": null, "bootstrap": true},
          "gbt": {"n_rounds": 100, "max_depth": 3, "learning_rate": 0.1, "lambda_l2": 1.0, "min_child_weight": 1.0},
          "mlp": {"hidden_sizes": [64], "epochs": 20, "batch_size": 32, "learning_rate": 0.001, "output": "sigmoid | softmax"}
        }
      }
    },
    "explainer": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "method": {"enum": ["exact", "kernel", "tree"], "description": "tree for tree families, kernel otherwise"},
        "background_size": {"type": "integer", "minimum": 1, "default": 100},
        "kernel_budget": {"oneOf": [{"const": "full"}, {"type": "integer", "description": "at least d + 2"}], "default": "full"},
        "target": {"oneOf": [{"const": "positive_class_prob"}, {"const": "predicted_class_prob"},
                             {"type": "object", "properties": {"class_index": {"type": "integer", "minimum": 0}}}]},
        "seed": {"type": "integer", "minimum": 0, "default": 42},
        "eval_sample": {"type": "object", "additionalProperties": false,
                        "properties": {"size": {"type": "integer", "minimum": 1, "default": 200},
                                       "seed": {"type": "integer", "minimum": 0, "default": 42}}}
      }
    },
    "metrics": {"type": "object", "additionalProperties": false,
                "properties": {"averaging": {"enum": ["binary_positive", "weighted", "macro"]},
                               "tau": {"type": "number", "minimum": 0, "default": 0.001}}}
  }
}"#;

/// The task prompt with the family filled in, without the reply-format suffix.
pub fn prompt_body(task: PromptTask, family: PromptFamily) -> String {
    let template = match task {
        PromptTask::Binary => BINARY_PROMPT,
        PromptTask::Multiclass => MULTICLASS_PROMPT,
    };
    template.replacen(FAMILY_SLOT, family.prompt_name(task), 1)
}

/// Fixed instructions asking for a fenced pipeline spec instead of code.
pub fn reply_suffix(task: PromptTask, family: PromptFamily) -> String {
    format!(
        "Instead of code, answer with a pipeline specification that our executor runs for you.\n\
         Reply with exactly one fenced ```json block holding a JSON object that conforms to this schema:\n\
         {SPEC_SCHEMA}\n\
         Use \"spec_version\": 1, \"task\": {{\"kind\": \"{}\"}} and \"model\": {{\"family\": \"{}\"}}.\n\
         Text outside the fenced block is ignored.",
        task.spec_kind(),
        family.as_str()
    )
}

/// Full user message: prompt body, a blank line, then the reply suffix.
pub fn render_prompt(task: PromptTask, family: PromptFamily) -> String {
    format!("{}\n\n{}\n", prompt_body(task, family), reply_suffix(task, family))
}
