//! Engine side of the protocol: one host per script node instance.

use std::io::{BufReader, BufWriter, Read, Write};
use std::os::unix::net::UnixStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde_json::{Map, Value};

use super::serve::{serve, Behavior, ServeQuirks};
use super::wire::{decode_tensor, encode_tensor, read_control, write_control, Control, WireError, PROTOCOL_VERSION};
use super::{Manifest, PortDecl, ScriptError};
use crate::tensor::Tensor;

const STDERR_TAIL: usize = 8 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HostOptions {
    pub handshake_timeout: Duration,
    pub call_timeout: Duration,
    pub kill_grace: Duration,
}

impl Default for HostOptions {
    fn default() -> Self {
        Self {
            handshake_timeout: Duration::from_secs(10),
            call_timeout: Duration::from_secs(300),
            kill_grace: Duration::from_secs(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShutdownOutcome {
    /// The host exited by itself; the exit code when it had one.
    Exited(Option<i32>),
    Killed,
    AlreadyClosed,
}

enum Incoming {
    Control(Control),
    Out { call_id: u64, tensors: Vec<Tensor> },
    Failed(WireError),
}

enum Peer {
    Process(Child),
    Loopback { stream: UnixStream, thread: Option<JoinHandle<()>> },
}

/// A live host speaking the wire protocol.
pub struct NodeHandle {
    manifest: Manifest,
    writer: Option<Box<dyn Write + Send>>,
    rx: Receiver<Incoming>,
    peer: Peer,
    stderr: Arc<Mutex<String>>,
    next_call: u64,
    poisoned: bool,
    closed: bool,
    options: HostOptions,
}

fn spawn_reader(r: impl Read + Send + 'static, n_out: usize, tx: Sender<Incoming>) {
    std::thread::spawn(move || {
        let mut r = BufReader::new(r);
        loop {
            let msg = match read_control(&mut r) {
                Ok(Control::Out { call_id }) => {
                    let tensors: Result<Vec<Tensor>, WireError> = (0..n_out).map(|_| decode_tensor(&mut r)).collect();
                    match tensors {
                        Ok(tensors) => Incoming::Out { call_id, tensors },
                        Err(e) => Incoming::Failed(e),
                    }
                }
                Ok(c) => Incoming::Control(c),
                Err(e) => Incoming::Failed(e),
            };
            let stop = matches!(msg, Incoming::Failed(_));
            if tx.send(msg).is_err() || stop {
                return;
            }
        }
    });
}

fn describe_ports(ports: &[PortDecl]) -> String {
    let parts: Vec<String> = ports
        .iter()
        .map(|p| format!("{:?} {}:{}[{}]", p.direction, p.name, p.dtype, p.rank).to_lowercase())
        .collect();
    format!("({})", parts.join(", "))
}

impl NodeHandle {
    /// Starts `argv` as a subprocess and completes the handshake.
    pub fn spawn(expected: &Manifest, argv: &[String], options: HostOptions) -> Result<Self, ScriptError> {
        let (program, args) = argv.split_first().ok_or_else(|| ScriptError::SpawnFailed("empty command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| ScriptError::SpawnFailed(format!("{program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut stderr_pipe = child.stderr.take().expect("piped stderr");

        let stderr = Arc::new(Mutex::new(String::new()));
        let sink = Arc::clone(&stderr);
        std::thread::spawn(move || {
            let mut buf = [0u8; 4096];
            while let Ok(n) = stderr_pipe.read(&mut buf) {
                if n == 0 {
                    break;
                }
                let mut s = sink.lock().unwrap();
                s.push_str(&String::from_utf8_lossy(&buf[..n]));
                if s.len() > STDERR_TAIL {
                    let mut cut = s.len() - STDERR_TAIL;
                    while !s.is_char_boundary(cut) {
                        cut += 1;
                    }
                    s.drain(..cut);
                }
            }
        });

        let (tx, rx) = mpsc::channel();
        spawn_reader(stdout, expected.outputs().len(), tx);
        let mut handle = NodeHandle {
            manifest: expected.clone(),
            writer: Some(Box::new(BufWriter::new(stdin))),
            rx,
            peer: Peer::Process(child),
            stderr,
            next_call: 0,
            poisoned: false,
            closed: false,
            options,
        };
        handle.handshake(expected)?;
        Ok(handle)
    }

    /// Runs an in-process host on a socket pair.
    pub fn loopback(expected: &Manifest, behavior: Behavior, options: HostOptions) -> Result<Self, ScriptError> {
        Self::loopback_with(expected, behavior, ServeQuirks::default(), options)
    }

    pub fn loopback_with(
        expected: &Manifest,
        behavior: Behavior,
        quirks: ServeQuirks,
        options: HostOptions,
    ) -> Result<Self, ScriptError> {
        let io = |e: std::io::Error| ScriptError::SpawnFailed(format!("loopback: {e}"));
        let (ours, theirs) = UnixStream::pair().map_err(io)?;
        let manifest = expected.clone();
        let server_read = theirs.try_clone().map_err(io)?;
        let thread = std::thread::spawn(move || {
            let mut r = BufReader::new(server_read);
            let mut w = BufWriter::new(theirs);
            if let Err(e) = serve(&mut r, &mut w, &manifest, behavior, &quirks) {
                log::warn!("loopback host stopped: {e}");
            }
        });
        let (tx, rx) = mpsc::channel();
        spawn_reader(ours.try_clone().map_err(io)?, expected.outputs().len(), tx);
        let mut handle = NodeHandle {
            manifest: expected.clone(),
            writer: Some(Box::new(BufWriter::new(ours.try_clone().map_err(io)?))),
            rx,
            peer: Peer::Loopback { stream: ours, thread: Some(thread) },
            stderr: Arc::default(),
            next_call: 0,
            poisoned: false,
            closed: false,
            options,
        };
        handle.handshake(expected)?;
        Ok(handle)
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn is_usable(&self) -> bool {
        !self.poisoned && !self.closed
    }

    /// Tail of the host's stderr, for error messages.
    pub fn stderr_tail(&self) -> String {
        self.stderr.lock().unwrap().trim_end().to_string()
    }

    fn exited(&self, what: &str) -> ScriptError {
        let tail = self.stderr_tail();
        if tail.is_empty() {
            ScriptError::HostExited(what.to_string())
        } else {
            ScriptError::HostExited(format!("{what}; stderr: {tail}"))
        }
    }

    fn send(&mut self, msg: &Control, payload: &[Tensor]) -> Result<(), ScriptError> {
        let w = self.writer.as_mut().ok_or(ScriptError::Closed)?;
        let res = write_control(w, msg)
            .and_then(|_| payload.iter().try_for_each(|t| encode_tensor(w, t)))
            .and_then(|_| w.flush().map_err(WireError::from));
        res.map_err(|e| {
            self.poisoned = true;
            self.exited(&format!("write failed: {e}"))
        })
    }

    fn handshake(&mut self, expected: &Manifest) -> Result<(), ScriptError> {
        let deadline = Instant::now() + self.options.handshake_timeout;
        let result = (|| {
            self.send(&Control::Hello { protocol: PROTOCOL_VERSION }, &[])?;
            let mut hello = false;
            loop {
                let left = deadline.saturating_duration_since(Instant::now());
                let msg = match self.rx.recv_timeout(left) {
                    Ok(m) => m,
                    Err(RecvTimeoutError::Timeout) => return Err(ScriptError::HandshakeTimeout(self.options.handshake_timeout)),
                    Err(RecvTimeoutError::Disconnected) => return Err(self.exited("host exited during handshake")),
                };
                match msg {
                    Incoming::Control(Control::Hello { protocol }) if protocol == PROTOCOL_VERSION => hello = true,
                    Incoming::Control(Control::Hello { protocol }) => {
                        return Err(ScriptError::Protocol(format!("host speaks protocol {protocol}")));
                    }
                    Incoming::Control(Control::Describe { manifest }) if hello => {
                        if !expected.same_interface(&manifest) {
                            return Err(ScriptError::ManifestMismatch {
                                expected: describe_ports(&expected.ports),
                                actual: describe_ports(&manifest.ports),
                            });
                        }
                        return Ok(());
                    }
                    Incoming::Control(Control::Error { message, .. }) => return Err(ScriptError::Remote(message)),
                    Incoming::Failed(WireError::Closed) => return Err(self.exited("host exited during handshake")),
                    Incoming::Failed(e) => return Err(ScriptError::Protocol(e.to_string())),
                    _ => return Err(ScriptError::Protocol("unexpected message during handshake".into())),
                }
            }
        })();
        if result.is_err() {
            self.poisoned = true;
            self.shutdown();
        }
        result
    }

    /// One synchronous EXEC round trip.
    pub fn call(&mut self, frame: u64, params: &Map<String, Value>, inputs: &[Tensor]) -> Result<Vec<Tensor>, ScriptError> {
        if !self.is_usable() {
            return Err(ScriptError::Closed);
        }
        let ins = self.manifest.inputs();
        if ins.len() != inputs.len() {
            return Err(ScriptError::Protocol(format!("expected {} inputs, got {}", ins.len(), inputs.len())));
        }
        for (decl, t) in ins.iter().zip(inputs) {
            if !decl.port_type().accepts(t) {
                return Err(ScriptError::Protocol(format!(
                    "input `{}` expects {}, got {}{:?}",
                    decl.name,
                    decl.port_type(),
                    t.dtype(),
                    t.shape()
                )));
            }
        }
        let call_id = self.next_call;
        self.next_call += 1;
        let exec = Control::Exec {
            call_id,
            frame,
            params: params.clone(),
        };
        self.send(&exec, inputs)?;
        let msg = match self.rx.recv_timeout(self.options.call_timeout) {
            Ok(m) => m,
            Err(RecvTimeoutError::Timeout) => {
                self.poisoned = true;
                self.shutdown();
                return Err(ScriptError::CallTimeout(self.options.call_timeout));
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.poisoned = true;
                return Err(self.exited("host exited during a call"));
            }
        };
        let violation = |this: &mut Self, m: String| {
            this.poisoned = true;
            Err(ScriptError::Protocol(m))
        };
        match msg {
            Incoming::Out { call_id: id, tensors } if id == call_id => {
                for (decl, t) in self.manifest.outputs().iter().zip(&tensors) {
                    if !decl.port_type().accepts(t) {
                        let m = format!("output `{}` expects {}, got {}{:?}", decl.name, decl.port_type(), t.dtype(), t.shape());
                        return violation(self, m);
                    }
                }
                Ok(tensors)
            }
            Incoming::Out { call_id: id, .. } => violation(self, format!("reply to call {id}, expected {call_id}")),
            Incoming::Control(Control::Error { message, .. }) => Err(ScriptError::Remote(message)),
            Incoming::Control(other) => violation(self, format!("unexpected {other:?}")),
            Incoming::Failed(WireError::Closed) => {
                self.poisoned = true;
                Err(self.exited("host exited during a call"))
            }
            Incoming::Failed(e) => violation(self, e.to_string()),
        }
    }

    /// Sends BYE and reaps the host, killing it after the grace period.
    pub fn shutdown(&mut self) -> ShutdownOutcome {
        if self.closed {
            return ShutdownOutcome::AlreadyClosed;
        }
        self.closed = true;
        if let Some(mut w) = self.writer.take() {
            let _ = write_control(&mut w, &Control::Bye {});
            let _ = w.flush();
        }
        let deadline = Instant::now() + self.options.kill_grace;
        match &mut self.peer {
            Peer::Process(child) => loop {
                match child.try_wait() {
                    Ok(Some(status)) => return ShutdownOutcome::Exited(status.code()),
                    Ok(None) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(5)),
                    _ => {
                        let _ = child.kill();
                        let _ = child.wait();
                        return ShutdownOutcome::Killed;
                    }
                }
            },
            Peer::Loopback { stream, thread } => {
                let _ = stream.shutdown(std::net::Shutdown::Write);
                while thread.as_ref().is_some_and(|t| !t.is_finished()) && Instant::now() < deadline {
                    std::thread::sleep(Duration::from_millis(5));
                }
                let _ = stream.shutdown(std::net::Shutdown::Both);
                match thread.take() {
                    Some(t) if t.is_finished() => {
                        let _ = t.join();
                        ShutdownOutcome::Exited(Some(0))
                    }
                    _ => ShutdownOutcome::Killed,
                }
            }
        }
    }
}

impl Drop for NodeHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

#[cfg(test)]
mod tests {
    use super::super::serve::behavior;
    use super::super::{parse_annotations, Language};
    use super::*;

    fn manifest(src: &str) -> Manifest {
        parse_annotations(src, Language::Python, "t").unwrap()
    }

    #[test]
    fn loopback_sine() {
        let m = manifest("# @av in length : i64\n# @av out wave : f64 [1]\n");
        let mut h = NodeHandle::loopback(&m, behavior::sine, HostOptions::default()).unwrap();
        let out = h.call(0, &Map::new(), &[Tensor::scalar_i64(4)]).unwrap();
        let w = out[0].as_f64().unwrap();
        assert_eq!(w.len(), 4);
        assert_eq!(w[1], (std::f64::consts::PI / 2.0).sin());
        assert_eq!(h.shutdown(), ShutdownOutcome::Exited(Some(0)));
        assert_eq!(h.shutdown(), ShutdownOutcome::AlreadyClosed);
    }

    #[test]
    fn remote_errors_keep_the_handle() {
        let m = manifest("# @av in x : f64 [1]\n# @av out y : f64 [1]\n");
        let mut h = NodeHandle::loopback(&m, behavior::fail, HostOptions::default()).unwrap();
        let err = h.call(0, &Map::new(), &[Tensor::vector_f64(vec![1.0])]).unwrap_err();
        assert!(matches!(err, ScriptError::Remote(ref msg) if msg.contains("line 7")));
        assert!(h.is_usable());
    }

    #[test]
    fn extra_port_is_a_mismatch() {
        let m = manifest("# @av in x : f64 [1]\n# @av out y : f64 [1]\n");
        let quirks = ServeQuirks {
            extra_port: true,
            ..Default::default()
        };
        let err = NodeHandle::loopback_with(&m, behavior::echo, quirks, HostOptions::default()).err().unwrap();
        assert!(matches!(err, ScriptError::ManifestMismatch { .. }));
    }

    #[test]
    fn wrong_output_rank_is_a_violation() {
        let m = manifest("# @av in x : f64 [1]\n# @av out y : f64 [2]\n");
        let mut h = NodeHandle::loopback(&m, behavior::echo, HostOptions::default()).unwrap();
        let err = h.call(0, &Map::new(), &[Tensor::vector_f64(vec![1.0])]).unwrap_err();
        assert!(matches!(err, ScriptError::Protocol(_)));
        assert!(!h.is_usable());
    }

    #[test]
    fn missing_command() {
        let m = manifest("# @av out y : f64\n");
        let err = NodeHandle::spawn(&m, &["/nonexistent/host-binary".into()], HostOptions::default()).err().unwrap();
        assert!(matches!(err, ScriptError::SpawnFailed(_)));
    }
}
