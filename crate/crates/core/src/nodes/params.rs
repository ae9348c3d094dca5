use serde_json::{Map, Value};
use thiserror::Error;

use crate::tensor::DType;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parameter `{name}`: {message}")]
pub struct ParamError {
    pub name: String,
    pub message: String,
}

impl ParamError {
    pub fn new(name: &str, message: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            message: message.into(),
        }
    }
}

/// Node parameters as given in the graph document.
///
/// Keys are kept sorted so the JSON form is canonical.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params(Map<String, Value>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_value(value: Value) -> Result<Self, ParamError> {
        match value {
            Value::Object(map) => Ok(Self(map)),
            Value::Null => Ok(Self::default()),
            _ => Err(ParamError::new("params", "expected an object")),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.0.insert(key.to_string(), value.into());
        self
    }

    pub fn as_map(&self) -> &Map<String, Value> {
        &self.0
    }

    pub fn to_value(&self) -> Value {
        Value::Object(self.0.clone())
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.0).expect("params serialize")
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key).filter(|v| !v.is_null())
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ParamError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| ParamError::new(key, "expected a number")),
        }
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, ParamError> {
        self.get(key)
            .map(|v| v.as_f64().ok_or_else(|| ParamError::new(key, "expected a number")))
            .transpose()
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, ParamError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|n| n as usize)
                .ok_or_else(|| ParamError::new(key, "expected a non-negative integer")),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> Result<&'a str, ParamError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_str()
                .ok_or_else(|| ParamError::new(key, "expected a string")),
        }
    }

    pub fn required_str(&self, key: &str) -> Result<&str, ParamError> {
        let s = self
            .get(key)
            .ok_or_else(|| ParamError::new(key, "missing"))?
            .as_str()
            .ok_or_else(|| ParamError::new(key, "expected a string"))?;
        if s.is_empty() {
            return Err(ParamError::new(key, "must not be empty"));
        }
        Ok(s)
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, ParamError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_bool()
                .ok_or_else(|| ParamError::new(key, "expected a boolean")),
        }
    }

    pub fn dtype_or(&self, key: &str, default: DType) -> Result<DType, ParamError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_str()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| ParamError::new(key, "expected \"i64\" or \"f64\"")),
        }
    }

    /// A list of strings; a single string is accepted as a one-element list.
    pub fn strings_or(&self, key: &str, default: &[&str]) -> Result<Vec<String>, ParamError> {
        match self.get(key) {
            None => Ok(default.iter().map(|s| s.to_string()).collect()),
            Some(Value::String(s)) => Ok(vec![s.clone()]),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| {
                    v.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| ParamError::new(key, "expected a list of strings"))
                })
                .collect(),
            Some(_) => Err(ParamError::new(key, "expected a list of strings")),
        }
    }

    pub fn opt_vec3(&self, key: &str) -> Result<Option<[f64; 3]>, ParamError> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        let err = || ParamError::new(key, "expected three numbers");
        let items = v.as_array().ok_or_else(err)?;
        if items.len() != 3 {
            return Err(err());
        }
        let mut out = [0.0; 3];
        for (o, item) in out.iter_mut().zip(items) {
            *o = item.as_f64().ok_or_else(err)?;
        }
        Ok(Some(out))
    }

    /// Rejects keys outside `allowed`, catching typos in graph files.
    pub fn only(&self, allowed: &[&str]) -> Result<(), ParamError> {
        match self.0.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(ParamError::new(k, "unknown parameter")),
            None => Ok(()),
        }
    }
}
