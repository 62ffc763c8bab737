//! Tabular classification with Shapley-value explanations.
//!
//! Datasets, from-scratch classifiers, exact/kernel/tree SHAP explainers,
//! performance and explainability metrics, a declarative pipeline, and an
//! LLM client that turns natural-language requests into pipeline specs.

pub mod datasets;
pub mod models;
pub mod shap;
pub mod metrics;
pub mod pipeline;
pub mod llm_client;
