//! Subprocess execution with a wall-clock cap and file-backed output capture.

use std::fs::{self, File};
use std::io;
use std::path::Path;
use std::process::{Command, ExitStatus, Stdio};
use std::time::{Duration, Instant};

use wait_timeout::ChildExt;

#[derive(Debug, Clone)]
pub struct ProcessOutput {
    /// `None` when the process was killed after exceeding its cap.
    pub status: Option<ExitStatus>,
    pub stdout: String,
    pub stderr: String,
    pub elapsed: Duration,
}

impl ProcessOutput {
    pub fn timed_out(&self) -> bool {
        self.status.is_none()
    }

    pub fn exit_code(&self) -> Option<i32> {
        self.status.and_then(|s| s.code())
    }

    pub fn success(&self) -> bool {
        self.status.map(|s| s.success()).unwrap_or(false)
    }

    /// Short human-readable description of how the process ended.
    pub fn describe_exit(&self) -> String {
        match self.status {
            None => "killed after timeout".to_string(),
            Some(status) => match status.code() {
                Some(code) => format!("exit code {code}"),
                None => signal_description(&status),
            },
        }
    }
}

#[cfg(unix)]
fn signal_description(status: &ExitStatus) -> String {
    use std::os::unix::process::ExitStatusExt;
    match status.signal() {
        Some(sig) => format!("terminated by signal {sig}"),
        None => "terminated abnormally".to_string(),
    }
}

#[cfg(not(unix))]
fn signal_description(_status: &ExitStatus) -> String {
    "terminated abnormally".to_string()
}

/// Runs `cmd` to completion or until `timeout` elapses.
///
/// Standard streams are redirected to `<capture_dir>/<tag>.stdout` and
/// `<tag>.stderr` so large outputs cannot dead-lock on pipe buffers; the files
/// double as the archived record of the invocation.
pub fn run_captured(
    cmd: &mut Command,
    timeout: Duration,
    capture_dir: &Path,
    tag: &str,
) -> io::Result<ProcessOutput> {
    fs::create_dir_all(capture_dir)?;
    let out_path = capture_dir.join(format!("{tag}.stdout"));
    let err_path = capture_dir.join(format!("{tag}.stderr"));
    let out = File::create(&out_path)?;
    let err = File::create(&err_path)?;

    let start = Instant::now();
    let mut child = cmd
        .stdin(Stdio::null())
        .stdout(Stdio::from(out))
        .stderr(Stdio::from(err))
        .spawn()?;

    let status = match child.wait_timeout(timeout)? {
        Some(status) => Some(status),
        None => {
            let _ = child.kill();
            let _ = child.wait();
            None
        }
    };
    let elapsed = start.elapsed();

    Ok(ProcessOutput {
        status,
        stdout: read_lossy(&out_path)?,
        stderr: read_lossy(&err_path)?,
        elapsed,
    })
}

fn read_lossy(path: &Path) -> io::Result<String> {
    let bytes = fs::read(path)?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}
