use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mdflow_core::fixtures;
use mdflow_core::io::open_trajectory;

const BIN: &str = env!("CARGO_BIN_EXE_mdflow");

fn mdflow(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn hydrate_run_writes_one_plot_row_per_frame() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "g.json", fixtures::HYDRATE_GRAPH);
    let traj = write(dir.path(), "h.ssv", &fixtures::hydrate_ssv());
    let out = dir.path().join("out");
    let o = mdflow(&["run", s(&graph), "--traj", s(&traj), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("plot_mcg.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), fixtures::HYDRATE_FRAMES);
    let values: Vec<f64> = rows.iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values, fixtures::hydrate_expected_mcg());
    assert!(out.join("scene_0000.json").exists());
    assert!(out.join("attr_mcg.ssv").exists());
    assert!(out.join("run_report.json").exists());
}

#[test]
fn backward_run_writes_last_scene_first() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "g.json", fixtures::HYDRATE_GRAPH);
    let traj = write(dir.path(), "h.ssv", &fixtures::hydrate_ssv());
    let out = dir.path().join("out");
    let o = mdflow(&["run", s(&graph), "--traj", s(&traj), "--frames", "0:10", "--direction", "backward", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = String::from_utf8(o.stdout).unwrap().lines().next().unwrap().to_string();
    assert!(first.ends_with("scene_0009.json"), "{first}");
}

#[test]
fn bad_graph_exits_1_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "g.json", r#"{"nodes":[{"id":1,"kind":"no_such_node","params":{}}],"connections":[]}"#);
    let traj = write(dir.path(), "h.ssv", &fixtures::hydrate_ssv());
    let o = mdflow(&["run", s(&graph), "--traj", s(&traj)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no_such_node"), "{}", stderr(&o));

    let o = mdflow(&["run", s(&write(dir.path(), "broken.json", "{")), "--traj", s(&traj)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn node_failure_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let script = write(dir.path(), "fail.py", "# @av in a : f64 [1]\n# @av out out : f64 [1]\n");
    let graph = serde_json::json!({
        "nodes": [
            {"id": 1, "kind": "const", "params": {"value": [1.0]}},
            {"id": 2, "kind": {"script": {"path": script, "language": "python", "command": "loopback:fail"}}, "params": {}},
            {"id": 3, "kind": "set_attribute", "params": {"name": "x"}}
        ],
        "connections": [{"from": "1.value", "to": "2.a"}, {"from": "2.out", "to": "3.values"}]
    });
    let graph = write(dir.path(), "g.json", &graph.to_string());
    let traj = write(dir.path(), "c.ssv", &fixtures::cluster_ssv());
    let o = mdflow(&["run", s(&graph), "--traj", s(&traj), "--frames", "3:6"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("node 2") && err.contains("frame 3"), "{err}");

    let o = mdflow(&["run", s(&graph), "--traj", s(&traj), "--frames", "3:6", "--continue-on-error"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stderr(&o).matches("failed at frame").count(), 3);
}

#[test]
fn out_of_range_frames_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "g.json", fixtures::HYDRATE_GRAPH);
    let traj = write(dir.path(), "h.ssv", &fixtures::hydrate_ssv());
    let o = mdflow(&["run", s(&graph), "--traj", s(&traj), "--frames", "0:99"]);
    assert_eq!(o.status.code(), Some(1));
}

fn gro(dir: &Path) -> PathBuf {
    let mut text = String::from("water\n    3\n");
    for (i, (name, p)) in [("OW", [0.126, 1.624, 1.679]), ("HW1", [0.190, 1.661, 1.747]), ("HW2", [0.177, 1.568, 1.613])]
        .iter()
        .enumerate()
    {
        text.push_str(&format!("{:>5}{:<5}{:>5}{:>5}{:8.3}{:8.3}{:8.3}\n", 1, "SOL", name, i + 1, p[0], p[1], p[2]));
    }
    text.push_str("   1.86206   1.86206   1.86206\n");
    write(dir, "w.gro", &text)
}

#[test]
fn convert_round_trips_gro() {
    let dir = tempfile::tempdir().unwrap();
    let input = gro(dir.path());
    let out = dir.path().join("w.ssv");
    let o = mdflow(&["convert", s(&input), s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let direct = open_trajectory(&input).unwrap();
    let via = open_trajectory(&out).unwrap();
    let (a, b) = (direct.load_frame(0).unwrap(), via.load_frame(0).unwrap());
    assert_eq!(a.positions, b.positions);
    assert_eq!(a.sim_box.lengths(), b.sim_box.lengths());
    // Coordinates only.
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("el x y z\n"));
}

#[test]
fn convert_rejects_unknown_attributes() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "a.ssv", "el x y z pot\nframe 1 0 0 0\nC 0 0 0 1.5\n");
    let out = dir.path().join("b.ssv");
    let o = mdflow(&["convert", s(&input), s(&out), "--attrs", "pot,charge"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("charge"));
    let o = mdflow(&["convert", s(&input), s(&out), "--attrs", "pot"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "el x y z pot\nframe 1 0 0 0\nC 0 0 0 1.5\n");
}

#[test]
fn check_accepts_valid_and_names_cycles() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.json", fixtures::HYDRATE_GRAPH);
    let o = mdflow(&["check", s(&ok)]);
    assert!(o.status.success(), "{}", stderr(&o));

    let cyclic = r#"{"nodes":[
        {"id":1,"kind":"add","params":{"dtype":"f64","rank":1}},
        {"id":2,"kind":"add","params":{"dtype":"f64","rank":1}}],
      "connections":[{"from":"1.out","to":"2.a"},{"from":"2.out","to":"1.a"}]}"#;
    let o = mdflow(&["check", s(&write(dir.path(), "cyc.json", cyclic))]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("cycle") && err.contains('1') && err.contains('2'), "{err}");
}

#[test]
fn check_script_prints_manifest_or_line() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "sine.py", "# @av in n : i64\n# @av param amp : f64\n# @av out wave : f64 [1]\nimport math\n");
    let o = mdflow(&["check-script", s(&good)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("wave") && table.contains("param") && table.contains("amp"), "{table}");

    let dup = write(dir.path(), "dup.py", "# @av in x : f64\n\n# @av out x : f64\n");
    let o = mdflow(&["check-script", s(&dup)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("DuplicatePort") && err.contains("line 3"), "{err}");
}

#[test]
fn serve_on_busy_port_exits_1() {
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let o = mdflow(&["serve", "--port", &port]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot listen"));
}

#[test]
fn help_documents_default_port() {
    let o = mdflow(&["serve", "--help"]);
    assert!(String::from_utf8(o.stdout).unwrap().contains(&mdflow_service::DEFAULT_PORT.to_string()));
}
