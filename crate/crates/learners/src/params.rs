//! Hyperparameter tables with frozen defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Algorithm {
    Rf,
    Xgb,
    C45,
    Adaboost,
    Cart,
    Knn,
    Mlp,
    GaussianNb,
    Logistic,
    Linear,
}

impl Algorithm {
    pub const ALL: [Algorithm; 10] = [
        Algorithm::Rf,
        Algorithm::Knn,
        Algorithm::Cart,
        Algorithm::C45,
        Algorithm::Mlp,
        Algorithm::GaussianNb,
        Algorithm::Xgb,
        Algorithm::Adaboost,
        Algorithm::Linear,
        Algorithm::Logistic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Rf => "RF",
            Algorithm::Xgb => "XGB",
            Algorithm::C45 => "C45",
            Algorithm::Adaboost => "ADABOOST",
            Algorithm::Cart => "CART",
            Algorithm::Knn => "KNN",
            Algorithm::Mlp => "MLP",
            Algorithm::GaussianNb => "GAUSSIAN_NB",
            Algorithm::Logistic => "LOGISTIC",
            Algorithm::Linear => "LINEAR",
        }
    }

    /// Whether training needs both classes present.
    pub fn needs_both_classes(self) -> bool {
        self != Algorithm::Linear
    }

    pub(crate) fn table(self) -> &'static [ParamDef] {
        match self {
            Algorithm::Rf => RF,
            Algorithm::Xgb => XGB,
            Algorithm::C45 => C45,
            Algorithm::Adaboost => ADABOOST,
            Algorithm::Cart => CART,
            Algorithm::Knn => KNN,
            Algorithm::Mlp => MLP,
            Algorithm::GaussianNb => GAUSSIAN_NB,
            Algorithm::Logistic => LOGISTIC,
            Algorithm::Linear => LINEAR,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown algorithm {0:?}")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace(['-', '.'], "_");
        let norm = match norm.as_str() {
            "C4_5" => "C45",
            "NB" | "NAIVE_BAYES" => "GAUSSIAN_NB",
            "XGBOOST" => "XGB",
            other => other,
        };
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == norm)
            .ok_or_else(|| UnknownAlgorithm(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Kind {
    /// Integer ≥ 1.
    Count,
    /// Integer ≥ 1 or null (unlimited).
    OptCount,
    /// Finite number > 0.
    Positive,
    /// Finite number ≥ 0.
    NonNegative,
    Flag,
    Choice(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Default {
    Int(u64),
    Num(f64),
    Text(&'static str),
    Bool(bool),
    Null,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ParamDef {
    pub key: &'static str,
    pub kind: Kind,
    pub default: Default,
}

const fn def(key: &'static str, kind: Kind, default: Default) -> ParamDef {
    ParamDef { key, kind, default }
}

const TREE_CRITERIA: &[&str] = &["gini", "entropy"];
const MAX_FEATURES: &[&str] = &["sqrt", "log2", "all"];

const RF: &[ParamDef] = &[
    def("n_estimators", Kind::Count, Default::Int(200)),
    def("criterion", Kind::Choice(TREE_CRITERIA), Default::Text("gini")),
    def("max_depth", Kind::OptCount, Default::Null),
    def("min_samples_split", Kind::Count, Default::Int(2)),
    def("max_features", Kind::Choice(MAX_FEATURES), Default::Text("sqrt")),
    def("bootstrap", Kind::Flag, Default::Bool(true)),
];

const XGB: &[ParamDef] = &[
    def("n_estimators", Kind::Count, Default::Int(100)),
    def("max_depth", Kind::Count, Default::Int(6)),
    def("learning_rate", Kind::Positive, Default::Num(0.3)),
    def("reg_lambda", Kind::NonNegative, Default::Num(1.0)),
    def("min_child_weight", Kind::NonNegative, Default::Num(1.0)),
    def("gamma", Kind::NonNegative, Default::Num(0.0)),
];

const C45: &[ParamDef] = &[
    def(
        "criterion",
        Kind::Choice(&["gain_ratio", "entropy"]),
        Default::Text("gain_ratio"),
    ),
    def("max_depth", Kind::OptCount, Default::Null),
    def("min_samples_split", Kind::Count, Default::Int(2)),
];

const ADABOOST: &[ParamDef] = &[
    def("n_estimators", Kind::Count, Default::Int(50)),
    def("learning_rate", Kind::Positive, Default::Num(1.0)),
];

const CART: &[ParamDef] = &[
    def("criterion", Kind::Choice(TREE_CRITERIA), Default::Text("gini")),
    def("max_depth", Kind::OptCount, Default::Null),
    def("min_samples_split", Kind::Count, Default::Int(2)),
];

const KNN: &[ParamDef] = &[def("n_neighbors", Kind::Count, Default::Int(6))];

const MLP: &[ParamDef] = &[
    def("hidden_units", Kind::Count, Default::Int(100)),
    def("learning_rate", Kind::Positive, Default::Num(1e-3)),
    def("batch_size", Kind::Count, Default::Int(200)),
    def("max_epochs", Kind::Count, Default::Int(200)),
    def("alpha", Kind::NonNegative, Default::Num(1e-4)),
    def("tol", Kind::NonNegative, Default::Num(1e-4)),
    def("n_iter_no_change", Kind::Count, Default::Int(10)),
];

const GAUSSIAN_NB: &[ParamDef] = &[def("var_smoothing", Kind::NonNegative, Default::Num(1e-9))];

const LOGISTIC: &[ParamDef] = &[
    def("c", Kind::Positive, Default::Num(1.0)),
    def("tol", Kind::NonNegative, Default::Num(1e-6)),
    def("max_iter", Kind::Count, Default::Int(1000)),
];

const LINEAR: &[ParamDef] = &[def("ridge_jitter", Kind::NonNegative, Default::Num(1e-8))];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("{algorithm} has no hyperparameter {key:?}")]
    UnknownKey { algorithm: Algorithm, key: String },
    #[error("{algorithm} hyperparameter {key:?}: {value} is not {expected}")]
    BadValue {
        algorithm: Algorithm,
        key: String,
        value: Value,
        expected: String,
    },
}

fn default_value(d: Default) -> Value {
    match d {
        Default::Int(i) => Value::from(i),
        Default::Num(x) => Value::from(x),
        Default::Text(s) => Value::from(s),
        Default::Bool(b) => Value::from(b),
        Default::Null => Value::Null,
    }
}

fn check(kind: Kind, v: &Value) -> Result<(), String> {
    let ok = match kind {
        Kind::Count => v.as_u64().is_some_and(|n| n >= 1),
        Kind::OptCount => v.is_null() || v.as_u64().is_some_and(|n| n >= 1),
        Kind::Positive => v.as_f64().is_some_and(|x| x.is_finite() && x > 0.0),
        Kind::NonNegative => v.as_f64().is_some_and(|x| x.is_finite() && x >= 0.0),
        Kind::Flag => v.is_boolean(),
        Kind::Choice(opts) => v.as_str().is_some_and(|s| opts.contains(&s)),
    };
    if ok {
        return Ok(());
    }
    Err(match kind {
        Kind::Count => "an integer >= 1".into(),
        Kind::OptCount => "an integer >= 1 or null".into(),
        Kind::Positive => "a number > 0".into(),
        Kind::NonNegative => "a number >= 0".into(),
        Kind::Flag => "a boolean".into(),
        Kind::Choice(opts) => format!("one of {opts:?}"),
    })
}

/// Merges `overrides` into the algorithm's defaults, rejecting unknown keys
/// and ill-typed values.
pub(crate) fn resolve(
    algorithm: Algorithm,
    overrides: &BTreeMap<String, Value>,
) -> Result<BTreeMap<String, Value>, SpecError> {
    let table = algorithm.table();
    for key in overrides.keys() {
        if !table.iter().any(|d| d.key == key) {
            return Err(SpecError::UnknownKey {
                algorithm,
                key: key.clone(),
            });
        }
    }
    let mut out = BTreeMap::new();
    for d in table {
        let v = overrides
            .get(d.key)
            .cloned()
            .unwrap_or_else(|| default_value(d.default));
        check(d.kind, &v).map_err(|expected| SpecError::BadValue {
            algorithm,
            key: d.key.to_string(),
            value: v.clone(),
            expected,
        })?;
        out.insert(d.key.to_string(), v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_for_every_algorithm() {
        for a in Algorithm::ALL {
            let r = resolve(a, &BTreeMap::new()).unwrap();
            assert_eq!(r.len(), a.table().len());
        }
        let rf = resolve(Algorithm::Rf, &BTreeMap::new()).unwrap();
        assert_eq!(rf["n_estimators"], Value::from(200));
        let knn = resolve(Algorithm::Knn, &BTreeMap::new()).unwrap();
        assert_eq!(knn["n_neighbors"], Value::from(6));
    }

    #[test]
    fn unknown_and_bad_values_rejected() {
        let mut o = BTreeMap::new();
        o.insert("n_trees".to_string(), Value::from(3));
        assert!(matches!(resolve(Algorithm::Rf, &o), Err(SpecError::UnknownKey { .. })));
        let mut o = BTreeMap::new();
        o.insert("n_neighbors".to_string(), Value::from(0));
        assert!(matches!(resolve(Algorithm::Knn, &o), Err(SpecError::BadValue { .. })));
        let mut o = BTreeMap::new();
        o.insert("criterion".to_string(), Value::from("gini"));
        assert!(resolve(Algorithm::C45, &o).is_err());
    }

    #[test]
    fn names_parse() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
            assert_eq!(a.as_str().to_lowercase().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("c4.5".parse::<Algorithm>().unwrap(), Algorithm::C45);
        assert!("SVM".parse::<Algorithm>().is_err());
    }
}
