use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use mdflow_core::fixtures;
use mdflow_core::graph::{execute_trajectory, Graph, NoopObserver, RunOptions};
use mdflow_core::io::ImporterRegistry;
use mdflow_core::nodes::Catalog;
use mdflow_core::script::serve::behavior;
use mdflow_core::script::wire::{decode_tensor, encode_to_vec};
use mdflow_core::script::{
    parse_annotations, ExternalImporter, ExternalImporterConfig, HostOptions, Language, Manifest, NodeHandle,
    ScriptError, ServeQuirks, ShutdownOutcome,
};
use mdflow_core::{AttributeStore, DType, Tensor, TensorData};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Map, Value};

fn random_tensor(rng: &mut StdRng) -> Tensor {
    let rank = rng.gen_range(0..=4);
    let shape: Vec<usize> = (0..rank).map(|_| rng.gen_range(0..5)).collect();
    let n: usize = shape.iter().product();
    if rng.gen_bool(0.5) {
        // Raw bit patterns cover NaN payloads, infinities and signed zeros.
        Tensor::from_f64(shape, (0..n).map(|_| f64::from_bits(rng.gen())).collect()).unwrap()
    } else {
        Tensor::from_i64(shape, (0..n).map(|_| rng.gen()).collect()).unwrap()
    }
}

fn bits(t: &Tensor) -> Vec<u64> {
    match t.data() {
        TensorData::F64(v) => v.iter().map(|x| x.to_bits()).collect(),
        TensorData::I64(v) => v.iter().map(|&x| x as u64).collect(),
    }
}

pub fn wire_round_trip_is_bit_exact() {
    let mut rng = StdRng::seed_from_u64(13);
    let mut seen = std::collections::BTreeSet::new();
    for _ in 0..10_000 {
        let t = random_tensor(&mut rng);
        seen.insert((t.dtype() == DType::F64, t.rank()));
        let bytes = encode_to_vec(&t);
        let back = decode_tensor(&mut Cursor::new(&bytes)).unwrap();
        assert_eq!(back.dtype(), t.dtype());
        assert_eq!(back.shape(), t.shape());
        assert_eq!(bits(&back), bits(&t));
        assert_eq!(encode_to_vec(&back), bytes);
    }
    assert_eq!(seen.len(), 10);
}

fn manifest(src: &str) -> Manifest {
    parse_annotations(src, Language::Python, "t").unwrap()
}

const SINE: &str = "# @av in length : i64\n# @av out wave : f64 [1]\n";
const DIFF: &str = "# @av in signal : f64 [1]\n# @av out slope : f64 [1]\n";
const DECAY: &str = "# @av in signal : f64 [1]\n# @av param decay : f64\n# @av out damped : f64 [1]\n";
const ECHO: &str = "# @av in x : f64 [1]\n# @av out y : f64 [1]\n";
const BAD_RANK: &str = "# @av in x : f64 [1]\n# @av out y : f64 [2]\n";

/// Starts a host either in-process or as a reference-host subprocess.
trait Launcher {
    fn launch(&self, src: &str, name: &str, quirks: ServeQuirks, opts: HostOptions) -> Result<NodeHandle, ScriptError>;
}

struct Loopback;

impl Launcher for Loopback {
    fn launch(&self, src: &str, name: &str, quirks: ServeQuirks, opts: HostOptions) -> Result<NodeHandle, ScriptError> {
        NodeHandle::loopback_with(&manifest(src), behavior::by_name(name).unwrap(), quirks, opts)
    }
}

struct Subprocess<'a> {
    refhost: &'a str,
    dir: tempfile::TempDir,
}

impl Launcher for Subprocess<'_> {
    fn launch(&self, src: &str, name: &str, quirks: ServeQuirks, opts: HostOptions) -> Result<NodeHandle, ScriptError> {
        let script = self.dir.path().join(format!("{name}.py"));
        std::fs::write(&script, src).unwrap();
        let mut argv = vec![self.refhost.to_string()];
        for (on, flag) in [
            (quirks.extra_port, "--extra-port"),
            (quirks.hang_on_exec, "--hang-exec"),
            (quirks.ignore_bye, "--ignore-bye"),
        ] {
            if on {
                argv.push(flag.into());
            }
        }
        argv.push(name.into());
        argv.push(script.display().to_string());
        NodeHandle::spawn(&manifest(src), &argv, opts)
    }
}

fn plain(l: &dyn Launcher, src: &str, name: &str) -> NodeHandle {
    l.launch(src, name, ServeQuirks::default(), HostOptions::default()).unwrap()
}

/// Results of the deterministic calls, for cross-host comparison.
fn conformance(l: &dyn Launcher, subprocess: bool) -> Vec<Vec<Tensor>> {
    let mut results = Vec::new();
    let none = Map::new();

    let mut h = plain(l, SINE, "sine");
    assert_eq!(h.manifest(), &manifest(SINE));
    for (frame, n) in [(0, 0), (1, 1), (2, 8), (3, 1000)] {
        let out = h.call(frame, &none, &[Tensor::scalar_i64(n)]).unwrap();
        let w = out[0].as_f64().unwrap();
        assert_eq!(w.len(), n as usize);
        for (i, v) in w.iter().enumerate() {
            assert_eq!(*v, (2.0 * std::f64::consts::PI * i as f64 / n as f64).sin());
        }
        results.push(out);
    }
    let err = h.call(9, &none, &[Tensor::scalar_i64(-1)]).unwrap_err();
    assert!(matches!(err, ScriptError::Remote(_)), "{err:?}");
    assert!(h.is_usable());
    assert_eq!(h.shutdown(), ShutdownOutcome::Exited(Some(0)));
    assert_eq!(h.shutdown(), ShutdownOutcome::AlreadyClosed);

    let mut h = plain(l, DIFF, "differentiate");
    let out = h.call(0, &none, &[Tensor::vector_f64(vec![1.0, 4.0, 9.0, 16.0])]).unwrap();
    assert_eq!(out[0].as_f64().unwrap(), &[3.0, 5.0, 7.0]);
    results.push(out);

    let mut h = plain(l, DECAY, "decay");
    let params: Map<String, Value> = [("decay".to_string(), json!(0.5))].into_iter().collect();
    let out = h.call(0, &params, &[Tensor::vector_f64(vec![2.0, 2.0, 4.0])]).unwrap();
    assert_eq!(out[0].as_f64().unwrap(), &[2.0, 1.0, 1.0]);
    results.push(out);

    let mut h = plain(l, ECHO, "fail");
    let err = h.call(0, &none, &[Tensor::vector_f64(vec![1.0])]).unwrap_err();
    assert!(matches!(err, ScriptError::Remote(ref m) if m.contains("line 7")));
    assert!(h.is_usable());

    let mut h = plain(l, ECHO, "echo");
    let err = h.call(0, &none, &[Tensor::scalar_f64(1.0)]).unwrap_err();
    assert!(matches!(err, ScriptError::Protocol(_) | ScriptError::BadParam { .. }), "{err:?}");

    let mut h = plain(l, BAD_RANK, "echo");
    let err = h.call(0, &none, &[Tensor::vector_f64(vec![1.0])]).unwrap_err();
    assert!(matches!(err, ScriptError::Protocol(_)), "{err:?}");
    assert!(!h.is_usable());
    assert!(matches!(h.call(1, &none, &[Tensor::vector_f64(vec![1.0])]), Err(ScriptError::Closed)));

    let extra = ServeQuirks {
        extra_port: true,
        ..Default::default()
    };
    let err = l.launch(ECHO, "echo", extra, HostOptions::default()).err().unwrap();
    assert!(matches!(err, ScriptError::ManifestMismatch { .. }), "{err:?}");

    let hang = ServeQuirks {
        hang_on_exec: true,
        ..Default::default()
    };
    let quick = HostOptions {
        call_timeout: Duration::from_millis(300),
        kill_grace: Duration::from_millis(200),
        ..HostOptions::default()
    };
    let mut h = l.launch(ECHO, "echo", hang, quick).unwrap();
    let t = Instant::now();
    let err = h.call(0, &none, &[Tensor::vector_f64(vec![1.0])]).unwrap_err();
    assert!(matches!(err, ScriptError::CallTimeout(_)), "{err:?}");
    assert!(t.elapsed() < Duration::from_secs(5));
    assert!(!h.is_usable());

    if subprocess {
        let stubborn = ServeQuirks {
            ignore_bye: true,
            ..Default::default()
        };
        let mut h = l.launch(ECHO, "echo", stubborn, quick).unwrap();
        h.call(0, &none, &[Tensor::vector_f64(vec![1.0])]).unwrap();
        assert_eq!(h.shutdown(), ShutdownOutcome::Killed);
        assert_eq!(h.shutdown(), ShutdownOutcome::AlreadyClosed);
    }
    results
}

pub fn loopback_conformance() {
    conformance(&Loopback, false);
}

/// `refhost` is the path of the reference host binary.
pub fn loopback_and_reference_host_conform_identically(refhost: &str) {
    let a = conformance(&Loopback, false);
    let sub = Subprocess {
        refhost,
        dir: tempfile::tempdir().unwrap(),
    };
    let b = conformance(&sub, true);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        for (p, q) in x.iter().zip(y) {
            assert_eq!(bits(p), bits(q));
        }
    }
}

pub fn missing_binary_and_silent_host() {
    let m = manifest(ECHO);
    let err = NodeHandle::spawn(&m, &["/nonexistent/host".into()], HostOptions::default()).err().unwrap();
    assert!(matches!(err, ScriptError::SpawnFailed(_)));

    let opts = HostOptions {
        handshake_timeout: Duration::from_millis(300),
        kill_grace: Duration::from_millis(100),
        ..HostOptions::default()
    };
    let t = Instant::now();
    let err = NodeHandle::spawn(&m, &["sleep".into(), "30".into()], opts).err().unwrap();
    assert!(matches!(err, ScriptError::HandshakeTimeout(_)), "{err:?}");
    assert!(t.elapsed() < Duration::from_secs(5));
}

pub fn external_importer_reads_xyz(refhost: &str) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("water.xyz");
    std::fs::write(&path, "3\n12 12 12\nO 0 0 0\nH 0.96 0 0\nH 0 0.96 0\n3\n12 12 12\nO 0 0 1\nH 0.96 0 1\nH 0 0.96 1\n").unwrap();
    let mut registry = ImporterRegistry::empty();
    registry.register(Box::new(ExternalImporter::new(
        ExternalImporterConfig {
            name: "xyz".into(),
            extensions: vec!["xyz".into()],
            command: vec![refhost.into(), "xyz".into()],
        },
        HostOptions::default(),
    )));
    let traj = registry.open(&path).unwrap();
    assert_eq!(traj.frame_count(), 2);
    assert_eq!(traj.atom_count(), 3);
    let f = traj.load_frame(1).unwrap();
    assert_eq!(f.positions[1], [0.96, 0.0, 1.0]);
    assert_eq!(f.atom_types, vec!["O", "H", "H"]);
    assert_eq!(f.sim_box.lengths(), [12.0; 3]);
}

const ADD_SCRIPT: &str = "# @av in a : f64 [1]\n# @av in b : f64 [1]\n# @av out out : f64 [1]\n";

fn substitution_graph(add_kind: Value) -> String {
    json!({
        "nodes": [
            {"id": 1, "kind": "get_positions", "params": {}},
            {"id": 2, "kind": "list_neighbors", "params": {"cutoff": 1.5}},
            {"id": 3, "kind": "group_list", "params": {}},
            {"id": 4, "kind": "cast", "params": {"from": "i64", "to": "f64", "rank": 1}},
            {"id": 5, "kind": "get_attribute", "params": {"name": "acc", "mode": "carry"}},
            {"id": 6, "kind": add_kind, "params": {}},
            {"id": 7, "kind": "set_attribute", "params": {"name": "acc"}}
        ],
        "connections": [
            {"from": "1.positions", "to": "2.positions"},
            {"from": "2.offsets", "to": "3.offsets"},
            {"from": "2.neighbors", "to": "3.neighbors"},
            {"from": "3.ids", "to": "4.values"},
            {"from": "5.values", "to": "6.a"},
            {"from": "4.out", "to": "6.b"},
            {"from": "6.out", "to": "7.values"}
        ]
    })
    .to_string()
}

fn run_store(json: &str) -> AttributeStore {
    let traj = fixtures::cluster_trajectory();
    let mut g = Graph::from_json(json, &Catalog::builtin()).unwrap();
    let mut store = AttributeStore::new();
    let out = execute_trajectory(&mut g, &traj, &mut store, None, &RunOptions::default(), &mut NoopObserver).unwrap();
    assert!(out.report.errors.is_empty(), "{:?}", out.report.errors);
    store
}

fn script_kind(path: &Path, command: Value) -> Value {
    json!({"script": {"path": path, "language": "python", "command": command}})
}

/// Compares against the reference host too when its path is given.
pub fn script_add_matches_builtin_add(refhost: Option<&str>) {
    let dir = tempfile::tempdir().unwrap();
    let script: PathBuf = dir.path().join("add.py");
    std::fs::write(&script, ADD_SCRIPT).unwrap();

    let builtin = run_store(&substitution_graph(json!("add")));
    let loopback = run_store(&substitution_graph(script_kind(&script, json!("loopback:add"))));
    assert_eq!(builtin, loopback);
    if let Some(refhost) = refhost {
        let subprocess = run_store(&substitution_graph(script_kind(&script, json!([refhost, "add"]))));
        assert_eq!(builtin, subprocess);
    }
    assert!(builtin.get("acc", 49).unwrap().iter().any(|&v| v != 0.0));
}
