use std::fmt;

use serde_json::{json, Map, Value};

use super::spec::*;
use crate::datasets::{AlertnessGenConfig, TaskKind};
use crate::metrics::{Averaging, DEFAULT_TAU};
use crate::models::{FamilyParams, GbtParams, MlpParams, ModelFamily, RfParams};
use crate::shap::{ExplainMethod, MAX_EXACT_FEATURES};

/// One problem in a spec document, located by a dotted path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

/// Every problem found in a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecErrors(pub Vec<ValidationError>);

impl fmt::Display for SpecErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&lines.join("\n"))
    }
}

impl std::error::Error for SpecErrors {}

const ROOT_KEYS: &[&str] = &["spec_version", "source", "task", "split", "model", "explainer", "metrics"];
const SPLIT_KEYS: &[&str] = &["test_fraction", "seed"];
const MODEL_KEYS: &[&str] = &["family", "hyperparameters", "seed", "ovr"];
const EXPLAINER_KEYS: &[&str] = &["method", "background_size", "kernel_budget", "target", "seed", "eval_sample"];
const EVAL_KEYS: &[&str] = &["size", "seed"];
const METRICS_KEYS: &[&str] = &["averaging", "tau"];
const TASK_KINDS: &[&str] = &["binary_alertness", "yeast_multiclass", "custom_csv"];

fn supported_families() -> String {
    ModelFamily::ALL.iter().map(|f| f.as_str()).collect::<Vec<_>>().join(", ")
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

#[derive(Default)]
struct Checker {
    errors: Vec<ValidationError>,
}

impl Checker {
    fn err(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(ValidationError { path: path.into(), message: message.into() });
    }

    /// The object at `path`; `None` (with an error) if the value has another type.
    fn object<'a>(&mut self, value: Option<&'a Value>, path: &str, allowed: &[&str]) -> Option<&'a Map<String, Value>> {
        let map = match value {
            None | Some(Value::Null) => return Some(empty_map()),
            Some(Value::Object(m)) => m,
            Some(other) => {
                self.err(path, format!("expected an object, got {}", type_name(other)));
                return None;
            }
        };
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                self.err(join(path, key), format!("unknown field; expected one of: {}", allowed.join(", ")));
            }
        }
        Some(map)
    }

    fn uint(&mut self, map: &Map<String, Value>, path: &str, key: &str, default: u64, min: u64) -> u64 {
        let p = join(path, key);
        match map.get(key) {
            None => default,
            Some(v) => match v.as_u64() {
                Some(n) if n >= min => n,
                Some(n) => {
                    self.err(p, format!("must be at least {min}, got {n}"));
                    default
                }
                None => {
                    self.err(p, format!("expected a non-negative integer, got {}", short(v)));
                    default
                }
            },
        }
    }

    fn opt_uint(&mut self, map: &Map<String, Value>, path: &str, key: &str, default: Option<u64>, min: u64) -> Option<u64> {
        match map.get(key) {
            None => default,
            Some(Value::Null) => None,
            Some(_) => Some(self.uint(map, path, key, min, min)),
        }
    }

    fn real(&mut self, map: &Map<String, Value>, path: &str, key: &str, default: f64, ok: impl Fn(f64) -> bool, rule: &str) -> f64 {
        let p = join(path, key);
        match map.get(key) {
            None => default,
            Some(v) => match v.as_f64() {
                Some(x) if ok(x) => x,
                Some(x) => {
                    self.err(p, format!("{rule}, got {x}"));
                    default
                }
                None => {
                    self.err(p, format!("expected a number, got {}", short(v)));
                    default
                }
            },
        }
    }

    fn boolean(&mut self, map: &Map<String, Value>, path: &str, key: &str, default: bool) -> bool {
        match map.get(key) {
            None => default,
            Some(Value::Bool(b)) => *b,
            Some(v) => {
                self.err(join(path, key), format!("expected true or false, got {}", short(v)));
                default
            }
        }
    }

    fn string(&mut self, map: &Map<String, Value>, path: &str, key: &str) -> Option<String> {
        match map.get(key) {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(v) => {
                self.err(join(path, key), format!("expected a string, got {}", short(v)));
                None
            }
        }
    }

    /// A string restricted to `choices`.
    fn choice(&mut self, map: &Map<String, Value>, path: &str, key: &str, choices: &[&str]) -> Option<String> {
        let s = self.string(map, path, key)?;
        if choices.contains(&s.as_str()) {
            Some(s)
        } else {
            self.err(join(path, key), format!("unsupported value {s:?}; expected one of: {}", choices.join(", ")));
            None
        }
    }
}

fn empty_map() -> &'static Map<String, Value> {
    static EMPTY: std::sync::OnceLock<Map<String, Value>> = std::sync::OnceLock::new();
    EMPTY.get_or_init(Map::new)
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn short(v: &Value) -> String {
    let s = v.to_string();
    if s.chars().count() > 40 {
        format!("{}...", s.chars().take(40).collect::<String>())
    } else {
        s
    }
}

/// Parses and validates a spec document, filling in documented defaults.
pub fn parse_spec(text: &str) -> Result<PipelineSpec, SpecErrors> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| SpecErrors(vec![ValidationError { path: String::new(), message: format!("invalid JSON: {e}") }]))?;
    parse_spec_value(&doc)
}

pub fn parse_spec_value(doc: &Value) -> Result<PipelineSpec, SpecErrors> {
    let mut c = Checker::default();
    let Value::Object(root) = doc else {
        return Err(SpecErrors(vec![ValidationError {
            path: String::new(),
            message: format!("expected a JSON object, got {}", type_name(doc)),
        }]));
    };
    for key in root.keys() {
        if !ROOT_KEYS.contains(&key.as_str()) {
            c.err(key.clone(), format!("unknown field; expected one of: {}", ROOT_KEYS.join(", ")));
        }
    }

    match root.get("spec_version") {
        None => c.err("spec_version", "missing required field"),
        Some(v) if v.as_u64() == Some(SPEC_VERSION as u64) => {}
        Some(v) => c.err("spec_version", format!("unsupported version {}; expected {SPEC_VERSION}", short(v))),
    }
    let source = c.string(root, "", "source").unwrap_or_else(|| "baseline".into());
    if source.trim().is_empty() {
        c.err("source", "must not be empty");
    }

    let task = check_task(&mut c, root.get("task"));
    let kind = task.as_ref().and_then(TaskSpec::known_kind);
    let n_features = task.as_ref().and_then(TaskSpec::known_features);

    let split = c.object(root.get("split"), "split", SPLIT_KEYS).map(|m| {
        let test_fraction =
            c.real(m, "split", "test_fraction", 0.2, |f| f > 0.0 && f < 1.0, "must lie strictly between 0 and 1");
        json!({ "test_fraction": test_fraction, "seed": c.uint(m, "split", "seed", DEFAULT_SEED, 0) })
    });

    let model = check_model(&mut c, root.get("model"), kind);
    let family = model.as_ref().map(|(f, _)| *f);
    let explainer = check_explainer(&mut c, root.get("explainer"), family, kind, n_features);

    let metrics = c.object(root.get("metrics"), "metrics", METRICS_KEYS).map(|m| {
        let averaging = match c.choice(m, "metrics", "averaging", &["binary_positive", "weighted", "macro"]).as_deref() {
            Some("binary_positive") => Averaging::BinaryPositive,
            Some("weighted") => Averaging::Weighted,
            Some("macro") => Averaging::Macro,
            _ => default_averaging(kind),
        };
        if averaging == Averaging::BinaryPositive && kind == Some(TaskKind::Multiclass) {
            c.err("metrics.averaging", "binary_positive needs a binary task; use weighted or macro");
        }
        let tau = c.real(m, "metrics", "tau", DEFAULT_TAU, |t| t >= 0.0 && t.is_finite(), "must be finite and non-negative");
        json!({ "averaging": averaging, "tau": tau })
    });

    if !c.errors.is_empty() {
        return Err(SpecErrors(c.errors));
    }
    let (_, model) = model.expect("no errors means model parsed");
    let normalized = json!({
        "spec_version": SPEC_VERSION,
        "source": source,
        "task": task.expect("task parsed"),
        "split": split.expect("split parsed"),
        "model": model,
        "explainer": explainer.expect("explainer parsed"),
        "metrics": metrics.expect("metrics parsed"),
    });
    serde_json::from_value(normalized)
        .map_err(|e| SpecErrors(vec![ValidationError { path: String::new(), message: format!("internal normalization error: {e}") }]))
}

fn check_task(c: &mut Checker, value: Option<&Value>) -> Option<TaskSpec> {
    let Some(value) = value else {
        c.err("task", "missing required field");
        return None;
    };
    let Value::Object(map) = value else {
        c.err("task", format!("expected an object, got {}", type_name(value)));
        return None;
    };
    if !map.contains_key("kind") {
        c.err("task.kind", "missing required field");
        return None;
    }
    let kind = c.choice(map, "task", "kind", TASK_KINDS)?;
    let allowed: &[&str] = match kind.as_str() {
        "binary_alertness" => &["kind", "n", "seed", "hr_band_low", "hr_band_high"],
        "yeast_multiclass" => &["kind", "path"],
        _ => &["kind", "path", "label_column"],
    };
    c.object(Some(value), "task", allowed);
    match kind.as_str() {
        "binary_alertness" => {
            let d = AlertnessGenConfig::default();
            let n = c.uint(map, "task", "n", d.n as u64, 1) as usize;
            let seed = c.uint(map, "task", "seed", d.seed, 0);
            let lo = c.uint(map, "task", "hr_band_low", d.hr_band_low as u64, 0);
            let hi = c.uint(map, "task", "hr_band_high", d.hr_band_high as u64, 0);
            let (Ok(lo), Ok(hi)) = (u32::try_from(lo), u32::try_from(hi)) else {
                c.err("task.hr_band_high", "heart-rate bounds out of range");
                return None;
            };
            let cfg = AlertnessGenConfig { n, seed, hr_band_low: lo, hr_band_high: hi };
            if let Err(e) = cfg.validate() {
                c.err("task.hr_band_low", e.to_string());
            }
            Some(TaskSpec::BinaryAlertness { n, seed, hr_band_low: lo, hr_band_high: hi })
        }
        "yeast_multiclass" => {
            let path = c.string(map, "task", "path").unwrap_or_else(|| DEFAULT_YEAST_PATH.into());
            Some(TaskSpec::YeastMulticlass { path })
        }
        _ => {
            let Some(path) = c.string(map, "task", "path") else {
                if !map.contains_key("path") {
                    c.err("task.path", "missing required field");
                }
                return None;
            };
            Some(TaskSpec::CustomCsv { path, label_column: c.string(map, "task", "label_column") })
        }
    }
}

fn check_model(c: &mut Checker, value: Option<&Value>, kind: Option<TaskKind>) -> Option<(ModelFamily, Value)> {
    if value.is_none() {
        c.err("model", "missing required field");
        return None;
    }
    let map = c.object(value, "model", MODEL_KEYS)?;
    let family = match map.get("family") {
        None => {
            c.err("model.family", "missing required field");
            None
        }
        Some(Value::String(s)) => match ModelFamily::parse(s) {
            Some(f) => Some(f),
            None => {
                c.err("model.family", format!("unsupported family {s:?}; supported families: {}", supported_families()));
                None
            }
        },
        Some(v) => {
            c.err("model.family", format!("expected a string, got {}", short(v)));
            None
        }
    };
    let seed = c.uint(map, "model", "seed", DEFAULT_SEED, 0);
    let hp_value = map.get("hyperparameters");
    let family = family?;
    let ovr = c.boolean(map, "model", "ovr", default_ovr(kind, family));
    if kind == Some(TaskKind::Multiclass) && family.is_tree_based() && !ovr {
        c.err("model.ovr", format!("{} on a multiclass task requires ovr = true", family.as_str()));
    }
    let params = check_hyperparameters(c, hp_value, family)?;
    Some((family, json!({ "family": family, "hyperparameters": params, "seed": seed, "ovr": ovr })))
}

fn check_hyperparameters(c: &mut Checker, value: Option<&Value>, family: ModelFamily) -> Option<FamilyParams> {
    const P: &str = "model.hyperparameters";
    let positive = |x: f64| x > 0.0 && x.is_finite();
    let non_negative = |x: f64| x >= 0.0 && x.is_finite();
    Some(match family {
        ModelFamily::RandomForest => {
            let map = c.object(value, P, &["n_trees", "max_depth", "min_samples_leaf", "features_per_split", "bootstrap"])?;
            let d = RfParams::default();
            FamilyParams::RandomForest(RfParams {
                n_trees: c.uint(map, P, "n_trees", d.n_trees as u64, 1) as usize,
                max_depth: c.opt_uint(map, P, "max_depth", None, 1).map(|v| v as usize),
                min_samples_leaf: c.uint(map, P, "min_samples_leaf", d.min_samples_leaf as u64, 1) as usize,
                features_per_split: c.opt_uint(map, P, "features_per_split", None, 1).map(|v| v as usize),
                bootstrap: c.boolean(map, P, "bootstrap", d.bootstrap),
            })
        }
        ModelFamily::Gbt => {
            let map = c.object(value, P, &["n_rounds", "max_depth", "learning_rate", "lambda_l2", "min_child_weight"])?;
            let d = GbtParams::default();
            FamilyParams::Gbt(GbtParams {
                n_rounds: c.uint(map, P, "n_rounds", d.n_rounds as u64, 0) as usize,
                max_depth: c.uint(map, P, "max_depth", d.max_depth as u64, 1) as usize,
                learning_rate: c.real(map, P, "learning_rate", d.learning_rate, positive, "must be positive"),
                lambda_l2: c.real(map, P, "lambda_l2", d.lambda_l2, non_negative, "must be non-negative"),
                min_child_weight: c.real(map, P, "min_child_weight", d.min_child_weight, non_negative, "must be non-negative"),
            })
        }
        ModelFamily::Mlp => {
            let map = c.object(value, P, &["hidden_sizes", "epochs", "batch_size", "learning_rate", "output"])?;
            let d = MlpParams::default();
            let hidden_sizes = match map.get("hidden_sizes") {
                None => d.hidden_sizes.clone(),
                Some(Value::Array(items)) => items
                    .iter()
                    .enumerate()
                    .filter_map(|(i, v)| match v.as_u64() {
                        Some(n) if n >= 1 => Some(n as usize),
                        _ => {
                            c.err(format!("{P}.hidden_sizes[{i}]"), format!("expected a positive integer, got {}", short(v)));
                            None
                        }
                    })
                    .collect(),
                Some(v) => {
                    c.err(format!("{P}.hidden_sizes"), format!("expected an array of positive integers, got {}", short(v)));
                    d.hidden_sizes.clone()
                }
            };
            let output = match c.choice(map, P, "output", &["sigmoid", "softmax"]).as_deref() {
                Some("softmax") => crate::models::MlpOutput::Softmax,
                _ => d.output,
            };
            FamilyParams::Mlp(MlpParams {
                hidden_sizes,
                epochs: c.uint(map, P, "epochs", d.epochs as u64, 0) as usize,
                batch_size: c.uint(map, P, "batch_size", d.batch_size as u64, 1) as usize,
                learning_rate: c.real(map, P, "learning_rate", d.learning_rate, positive, "must be positive"),
                output,
            })
        }
    })
}

fn check_explainer(
    c: &mut Checker,
    value: Option<&Value>,
    family: Option<ModelFamily>,
    kind: Option<TaskKind>,
    n_features: Option<usize>,
) -> Option<Value> {
    const P: &str = "explainer";
    let map = c.object(value, P, EXPLAINER_KEYS)?;
    let method = match c.choice(map, P, "method", &["exact", "kernel", "tree"]).as_deref() {
        Some("exact") => Some(ExplainMethod::Exact),
        Some("kernel") => Some(ExplainMethod::Kernel),
        Some("tree") => Some(ExplainMethod::Tree),
        _ => family.map(default_method),
    };
    if method == Some(ExplainMethod::Tree) && family == Some(ModelFamily::Mlp) {
        c.err("explainer.method", "the tree explainer needs a tree family; use kernel or exact for mlp");
    }
    if let (Some(ExplainMethod::Exact), Some(d)) = (method, n_features) {
        if d > MAX_EXACT_FEATURES {
            c.err("explainer.method", format!("exact enumeration supports at most {MAX_EXACT_FEATURES} features"));
        }
    }
    let background_size = c.uint(map, P, "background_size", 100, 1);

    let kernel_budget = match map.get("kernel_budget") {
        None => json!("full"),
        Some(Value::String(s)) if s == "full" => json!("full"),
        Some(v) => match v.as_u64() {
            Some(m) => {
                if let Some(d) = n_features {
                    if (m as usize) < d + 2 {
                        c.err("explainer.kernel_budget", format!("must be \"full\" or at least d + 2 = {}, got {m}", d + 2));
                    }
                } else if m < 3 {
                    c.err("explainer.kernel_budget", format!("must be \"full\" or at least d + 2, got {m}"));
                }
                json!(m)
            }
            None => {
                c.err("explainer.kernel_budget", format!("expected \"full\" or a positive integer, got {}", short(v)));
                json!("full")
            }
        },
    };

    let target = match map.get("target") {
        None => serde_json::to_value(default_target(kind)).expect("target serializes"),
        Some(Value::String(s)) if s == "positive_class_prob" => {
            if kind == Some(TaskKind::Multiclass) {
                c.err("explainer.target", "positive_class_prob needs a binary task; use predicted_class_prob or class_index");
            }
            json!(s)
        }
        Some(Value::String(s)) if s == "predicted_class_prob" => json!(s),
        Some(Value::Object(m)) if m.len() == 1 && m.contains_key("class_index") => match m["class_index"].as_u64() {
            Some(k) => {
                if kind == Some(TaskKind::Binary) && k > 1 {
                    c.err("explainer.target.class_index", format!("binary task has classes 0 and 1, got {k}"));
                }
                json!({ "class_index": k })
            }
            None => {
                c.err("explainer.target.class_index", "expected a non-negative integer");
                Value::Null
            }
        },
        Some(v) => {
            c.err(
                "explainer.target",
                format!("expected \"positive_class_prob\", \"predicted_class_prob\" or {{\"class_index\": k}}, got {}", short(v)),
            );
            Value::Null
        }
    };
    let seed = c.uint(map, P, "seed", DEFAULT_SEED, 0);
    let eval = c.object(map.get("eval_sample"), "explainer.eval_sample", EVAL_KEYS).map(|m| {
        json!({
            "size": c.uint(m, "explainer.eval_sample", "size", DEFAULT_EVAL_SAMPLE as u64, 1),
            "seed": c.uint(m, "explainer.eval_sample", "seed", DEFAULT_SEED, 0),
        })
    });
    Some(json!({
        "method": method?,
        "background_size": background_size,
        "kernel_budget": kernel_budget,
        "target": target,
        "seed": seed,
        "eval_sample": eval?,
    }))
}

/// Parses the canonical text produced by [`PipelineSpec::canonical_json`].
pub fn serialize_spec(spec: &PipelineSpec) -> String {
    spec.canonical_json()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shap::{KernelBudget, Target};

    fn errors(text: &str) -> Vec<ValidationError> {
        parse_spec(text).expect_err("expected validation errors").0
    }

    fn has(errs: &[ValidationError], path: &str, needle: &str) -> bool {
        errs.iter().any(|e| e.path == path && e.message.contains(needle))
    }

    #[test]
    fn minimal_binary_spec_gets_defaults() {
        let s = parse_spec(r#"{"spec_version":1,"task":{"kind":"binary_alertness"},"model":{"family":"random_forest"}}"#).unwrap();
        assert_eq!(s, PipelineSpec::with_defaults(PipelineSpec::alertness_task(), ModelFamily::RandomForest));
        assert_eq!(s.explainer.method, ExplainMethod::Tree);
        assert_eq!(s.explainer.target, Target::PositiveClassProb);
        assert_eq!(s.metrics.averaging, Averaging::BinaryPositive);
        assert_eq!(s.explainer.eval_sample.size, 200);
        assert!(!s.model.ovr);
    }

    #[test]
    fn yeast_defaults_depend_on_family() {
        let s = parse_spec(r#"{"spec_version":1,"task":{"kind":"yeast_multiclass"},"model":{"family":"gbt"}}"#).unwrap();
        assert!(s.model.ovr);
        assert_eq!(s.metrics.averaging, Averaging::Weighted);
        assert_eq!(s.explainer.target, Target::PredictedClassProb);
        assert_eq!(s.task, TaskSpec::YeastMulticlass { path: "yeast.csv".into() });
        let s = parse_spec(r#"{"spec_version":1,"task":{"kind":"yeast_multiclass"},"model":{"family":"mlp"}}"#).unwrap();
        assert!(!s.model.ovr);
        assert_eq!((s.explainer.method, s.explainer.kernel_budget), (ExplainMethod::Kernel, KernelBudget::Full));
    }

    #[test]
    fn unsupported_family_lists_supported_ones() {
        let e = errors(r#"{"spec_version":1,"task":{"kind":"binary_alertness"},"model":{"family":"lstm"}}"#);
        assert!(has(&e, "model.family", "unsupported family \"lstm\""));
        assert!(has(&e, "model.family", "random_forest, gbt, mlp"));
    }

    #[test]
    fn fraction_out_of_range() {
        let e = errors(
            r#"{"spec_version":1,"task":{"kind":"binary_alertness"},"model":{"family":"gbt"},"split":{"test_fraction":1.5}}"#,
        );
        assert_eq!(e.len(), 1);
        assert!(has(&e, "split.test_fraction", "strictly between 0 and 1"));
    }

    #[test]
    fn all_errors_are_collected() {
        let e = errors(
            r#"{"spec_version":2,"colour":"red","task":{"kind":"yeast_multiclass","n":5},
                "model":{"family":"random_forest","ovr":false,"hyperparameters":{"n_trees":0,"depth":3}},
                "split":{"test_fraction":0},"explainer":{"method":"tree","kernel_budget":4,"eval_sample":{"size":0}},
                "metrics":{"averaging":"binary_positive","tau":-1}}"#,
        );
        for (path, needle) in [
            ("spec_version", "unsupported version"),
            ("colour", "unknown field"),
            ("task.n", "unknown field"),
            ("model.ovr", "requires ovr"),
            ("model.hyperparameters.n_trees", "at least 1"),
            ("model.hyperparameters.depth", "unknown field"),
            ("split.test_fraction", "strictly between"),
            ("explainer.kernel_budget", "d + 2 = 10"),
            ("explainer.eval_sample.size", "at least 1"),
            ("metrics.averaging", "needs a binary task"),
            ("metrics.tau", "non-negative"),
        ] {
            assert!(has(&e, path, needle), "missing {path}: {e:?}");
        }
        assert_eq!(e.len(), 11, "{e:?}");
    }

    #[test]
    fn missing_required_fields() {
        let e = errors("{}");
        assert!(has(&e, "spec_version", "missing"));
        assert!(has(&e, "task", "missing"));
        assert!(has(&e, "model", "missing"));
        let e = errors(r#"{"spec_version":1,"task":{"kind":"custom_csv"},"model":{}}"#);
        assert!(has(&e, "task.path", "missing"));
        assert!(has(&e, "model.family", "missing"));
    }

    #[test]
    fn type_mismatches() {
        let e = errors(
            r#"{"spec_version":1,"task":{"kind":"binary_alertness","n":"many"},"model":{"family":"mlp","seed":-3,
                "hyperparameters":{"hidden_sizes":[8,0],"output":"tanh"}},"explainer":{"method":"tree","target":"both"}}"#,
        );
        assert!(has(&e, "task.n", "non-negative integer"));
        assert!(has(&e, "model.seed", "non-negative integer"));
        assert!(has(&e, "model.hyperparameters.hidden_sizes[1]", "positive integer"));
        assert!(has(&e, "model.hyperparameters.output", "tanh"));
        assert!(has(&e, "explainer.method", "tree family"));
        assert!(has(&e, "explainer.target", "class_index"));
    }

    #[test]
    fn invalid_json_and_non_object() {
        assert!(errors("{").first().unwrap().message.starts_with("invalid JSON"));
        assert!(errors("[1]").first().unwrap().message.contains("an array"));
    }

    #[test]
    fn key_order_does_not_change_canonical_text() {
        let a = parse_spec(r#"{"spec_version":1,"task":{"kind":"binary_alertness","seed":3,"n":100},"model":{"seed":1,"family":"gbt"}}"#)
            .unwrap();
        let b = parse_spec(r#"{"model":{"family":"gbt","seed":1},"task":{"n":100,"kind":"binary_alertness","seed":3},"spec_version":1}"#)
            .unwrap();
        assert_eq!(serialize_spec(&a), serialize_spec(&b));
        assert_eq!(a.spec_hash(), b.spec_hash());
        assert_eq!(parse_spec(&serialize_spec(&a)).unwrap(), a);
    }

    #[test]
    fn canonical_text_is_sorted() {
        let s = PipelineSpec::with_defaults(PipelineSpec::yeast_task("y.csv"), ModelFamily::Mlp);
        let text = serialize_spec(&s);
        assert!(text.starts_with(r#"{"explainer":{"background_size":100,"eval_sample""#), "{text}");
        assert_eq!(s.spec_hash().len(), 64);
    }
}
