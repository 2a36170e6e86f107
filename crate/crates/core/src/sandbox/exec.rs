use std::io::{self, Read};
use std::os::unix::process::CommandExt;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{Isolation, SandboxConfig, SandboxError};

const POLL_INTERVAL: Duration = Duration::from_millis(10);
/// Upper bound on waiting for the output reader after the process group is gone.
const READER_GRACE: Duration = Duration::from_millis(500);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecResult {
    /// Exit status; `128 + signal` when terminated by a signal.
    pub exit_code: i32,
    /// Interleaved stdout and stderr, capped at `output_cap` bytes.
    pub output: Vec<u8>,
    pub duration_secs: f64,
    pub truncated: bool,
}

impl ExecResult {
    pub fn output_text(&self) -> String {
        String::from_utf8_lossy(&self.output).into_owned()
    }

    /// Text returned to the model.
    pub fn render(&self) -> String {
        let mut out = self.output_text();
        if self.truncated {
            if !out.ends_with('\n') {
                out.push('\n');
            }
            out.push_str(&format!("[output truncated at {} bytes]\n", self.output.len()));
        }
        out.push_str(&format!("[exit code: {}]", self.exit_code));
        out
    }
}

fn kill_group(pgid: i32) {
    // SAFETY: kill(2) with a negative pid signals the process group; no memory is shared.
    unsafe {
        libc::kill(-pgid, libc::SIGKILL);
    }
}

fn reader_thread(mut pipe: io::PipeReader, cap: usize) -> thread::JoinHandle<(Vec<u8>, bool)> {
    thread::spawn(move || {
        let mut kept = Vec::new();
        let mut truncated = false;
        let mut buf = [0u8; 8192];
        loop {
            match pipe.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => {
                    let room = cap.saturating_sub(kept.len());
                    if n > room {
                        truncated = true;
                    }
                    kept.extend_from_slice(&buf[..n.min(room)]);
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(_) => break,
            }
        }
        (kept, truncated)
    })
}

/// Runs `cmd` through `/bin/sh -c` in the workspace root.
///
/// The child leads its own process group. On timeout, and after a normal
/// exit, the whole group is killed so no background process outlives the
/// call. Output beyond the cap is drained and discarded.
pub fn exec(cmd: &str, cfg: &SandboxConfig) -> Result<ExecResult, SandboxError> {
    cfg.validate()?;
    let (reader, writer) = io::pipe().map_err(|e| SandboxError::Spawn(e.to_string()))?;
    let writer_err = writer.try_clone().map_err(|e| SandboxError::Spawn(e.to_string()))?;

    let mut command = match &cfg.isolation {
        Isolation::SubprocessCwd => {
            let mut c = Command::new("/bin/sh");
            c.arg("-c").arg(cmd);
            c
        }
        Isolation::Container {
            runtime,
            container,
            workdir,
        } => {
            let mut c = Command::new(runtime);
            c.args(["exec", "-w", workdir, container, "/bin/sh", "-c", cmd]);
            c
        }
    };

    let started = Instant::now();
    let mut child = command
        .current_dir(&cfg.workspace_root)
        .stdin(Stdio::null())
        .stdout(writer)
        .stderr(writer_err)
        .process_group(0)
        .spawn()
        .map_err(|e| SandboxError::Spawn(e.to_string()))?;
    // Release the parent's copies of the pipe's write end.
    drop(command);
    let pgid = child.id() as i32;
    let reader = reader_thread(reader, cfg.output_cap);

    let deadline = started + cfg.timeout;
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break Some(status),
            Ok(None) if Instant::now() >= deadline => break None,
            Ok(None) => thread::sleep(POLL_INTERVAL),
            Err(e) => {
                kill_group(pgid);
                return Err(SandboxError::Spawn(e.to_string()));
            }
        }
    };
    kill_group(pgid);
    if status.is_none() {
        let _ = child.wait();
    }
    let duration = started.elapsed();

    // The pipe closes once every group member is dead; processes that left
    // the group may still hold it, so the wait is bounded.
    let wait_until = Instant::now() + READER_GRACE;
    while !reader.is_finished() && Instant::now() < wait_until {
        thread::sleep(POLL_INTERVAL);
    }
    let (output, truncated) = if reader.is_finished() {
        reader.join().unwrap_or_default()
    } else {
        (Vec::new(), false)
    };

    match status {
        None => Err(SandboxError::Timeout {
            timeout: cfg.timeout,
            partial_output: String::from_utf8_lossy(&output).into_owned(),
        }),
        Some(status) => {
            use std::os::unix::process::ExitStatusExt;
            let exit_code = status
                .code()
                .unwrap_or_else(|| 128 + status.signal().unwrap_or(0));
            Ok(ExecResult {
                exit_code,
                output,
                duration_secs: duration.as_secs_f64(),
                truncated,
            })
        }
    }
}
