//! Script-backed graph node.

use std::path::Path;

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use super::serve::behavior;
use super::{parse_annotations, HostOptions, Language, Manifest, NodeHandle, PortDirection, ScriptError};
use crate::graph::{ScriptSpec, Signature};
use crate::nodes::{NodeContext, NodeError, Operation, Params};
use crate::tensor::{DType, Tensor};

/// Commands of this form run a reference behavior in-process.
pub const LOOPBACK_PREFIX: &str = "loopback:";

/// Host command used when the graph names none.
pub fn default_command(language: Language) -> Option<Vec<String>> {
    match language {
        Language::Python => Some(vec!["pynode".to_string()]),
        Language::Cpp | Language::Fortran => None,
    }
}

pub struct ScriptNode {
    manifest: Manifest,
    signature: Signature,
    argv: Vec<String>,
    params: Map<String, Value>,
    options: HostOptions,
    digest: String,
    handle: Option<NodeHandle>,
}

fn check_param(decl: &super::PortDecl, value: &Value) -> Result<(), ScriptError> {
    let bad = |m: &str| ScriptError::BadParam {
        name: decl.name.clone(),
        message: m.to_string(),
    };
    let scalar_ok = |v: &Value| match decl.dtype {
        DType::F64 => v.is_number(),
        DType::I64 => v.is_i64() || v.is_u64(),
    };
    match (decl.rank, value) {
        (0, v) if scalar_ok(v) => Ok(()),
        (0, _) => Err(bad(&format!("expected a {} scalar", decl.dtype))),
        (1, Value::Array(items)) if items.iter().all(scalar_ok) => Ok(()),
        (1, _) => Err(bad(&format!("expected an array of {}", decl.dtype))),
        _ => Err(bad("params of rank above 1 are not supported")),
    }
}

impl ScriptNode {
    pub fn open(spec: &ScriptSpec, params: &Params, options: &HostOptions) -> Result<Self, ScriptError> {
        let source = std::fs::read_to_string(&spec.path).map_err(|source| ScriptError::Io {
            path: spec.path.clone(),
            source,
        })?;
        let language = match &spec.language {
            Some(l) => l.parse()?,
            None => Language::from_path(&spec.path)
                .ok_or_else(|| ScriptError::UnknownLanguage(spec.path.display().to_string()))?,
        };
        let mut argv = match &spec.command {
            Some(c) => c.argv(),
            None => default_command(language).ok_or(ScriptError::NoCommand(language))?,
        };
        if argv.is_empty() {
            return Err(ScriptError::NoCommand(language));
        }
        if !argv[0].starts_with(LOOPBACK_PREFIX) {
            argv.push(spec.path.display().to_string());
        }
        let name = spec
            .path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("script")
            .to_string();
        Self::from_source(&source, language, &name, argv, params, options)
    }

    pub fn from_source(
        source: &str,
        language: Language,
        name: &str,
        argv: Vec<String>,
        params: &Params,
        options: &HostOptions,
    ) -> Result<Self, ScriptError> {
        let manifest = parse_annotations(source, language, name)?;
        let mut sent = Map::new();
        for decl in manifest.ports(PortDirection::Param) {
            let v = params.get(&decl.name).ok_or_else(|| ScriptError::BadParam {
                name: decl.name.clone(),
                message: "missing".into(),
            })?;
            check_param(decl, v)?;
            sent.insert(decl.name.clone(), v.clone());
        }
        if let Some(extra) = params.as_map().keys().find(|k| !sent.contains_key(*k)) {
            return Err(ScriptError::BadParam {
                name: extra.clone(),
                message: "not declared by the script".into(),
            });
        }
        let mut h = Sha256::new();
        h.update(language.to_string());
        h.update([0]);
        h.update(source.as_bytes());
        for a in &argv {
            h.update([0]);
            h.update(a.as_bytes());
        }
        let digest = format!("{:x}", h.finalize());
        Ok(Self {
            signature: manifest.signature(),
            manifest,
            argv,
            params: sent,
            options: *options,
            digest,
            handle: None,
        })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn argv(&self) -> &[String] {
        &self.argv
    }

    /// Starts the host if needed and completes the handshake.
    pub fn probe(&mut self) -> Result<&mut NodeHandle, ScriptError> {
        if self.handle.as_ref().is_some_and(|h| !h.is_usable()) {
            self.handle = None;
        }
        if self.handle.is_none() {
            let h = match self.argv[0].strip_prefix(LOOPBACK_PREFIX) {
                Some(name) => {
                    let b = behavior::by_name(name)
                        .ok_or_else(|| ScriptError::SpawnFailed(format!("no loopback behavior `{name}`")))?;
                    NodeHandle::loopback(&self.manifest, b, self.options)?
                }
                None => NodeHandle::spawn(&self.manifest, &self.argv, self.options)?,
            };
            self.handle = Some(h);
        }
        Ok(self.handle.as_mut().expect("just set"))
    }

    pub fn call(&mut self, frame: u64, inputs: &[Tensor]) -> Result<Vec<Tensor>, ScriptError> {
        let params = self.params.clone();
        self.probe()?.call(frame, &params, inputs)
    }

    pub fn shutdown(&mut self) {
        if let Some(mut h) = self.handle.take() {
            h.shutdown();
        }
    }
}

impl Operation for ScriptNode {
    fn signature(&self) -> &Signature {
        &self.signature
    }

    fn cacheable(&self) -> bool {
        !self.manifest.stateful
    }

    fn identity(&self) -> String {
        self.digest.clone()
    }

    fn execute(&mut self, ctx: &mut NodeContext<'_>, inputs: &[Tensor]) -> Result<Vec<Tensor>, NodeError> {
        self.call(ctx.frame_index as u64, inputs)
            .map_err(|e| NodeError::Script(e.to_string()))
    }
}

/// Reads and parses a script file without starting a host.
pub fn manifest_of(path: &Path, language: Option<&str>) -> Result<Manifest, ScriptError> {
    let source = std::fs::read_to_string(path).map_err(|source| ScriptError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let language = match language {
        Some(l) => l.parse()?,
        None => Language::from_path(path).ok_or_else(|| ScriptError::UnknownLanguage(path.display().to_string()))?,
    };
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("script");
    parse_annotations(&source, language, name)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DECAY: &str = "# @av in signal : f64 [1]\n# @av param decay : f64\n# @av out out : f64 [1]\n";

    fn node(params: Params) -> Result<ScriptNode, ScriptError> {
        ScriptNode::from_source(DECAY, Language::Python, "decay", vec!["loopback:decay".into()], &params, &HostOptions::default())
    }

    #[test]
    fn decay_through_loopback() {
        let mut n = node(Params::new().with("decay", 0.5)).unwrap();
        let out = n.call(0, &[Tensor::vector_f64(vec![1.0, 1.0, 1.0])]).unwrap();
        assert_eq!(out[0].as_f64().unwrap(), &[1.0, 0.5, 0.25]);
    }

    #[test]
    fn param_validation() {
        assert!(matches!(node(Params::new()), Err(ScriptError::BadParam { .. })));
        assert!(matches!(node(Params::new().with("decay", "x")), Err(ScriptError::BadParam { .. })));
        assert!(matches!(node(Params::new().with("decay", 0.5).with("other", 1)), Err(ScriptError::BadParam { .. })));
    }

    #[test]
    fn identity_tracks_source() {
        let a = node(Params::new().with("decay", 0.5)).unwrap();
        let src = format!("{DECAY}# changed\n");
        let b = ScriptNode::from_source(&src, Language::Python, "decay", vec!["loopback:decay".into()], &Params::new().with("decay", 0.5), &HostOptions::default()).unwrap();
        assert_ne!(a.identity(), b.identity());
        assert!(a.cacheable());
    }
}
