//! Running external commands with a deadline.

use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::process::{Command, ExitStatus, Stdio};
use std::thread;
use std::time::{Duration, Instant};

#[derive(Debug)]
pub(crate) enum ProcessFailure {
    Spawn(std::io::Error),
    Timeout { after: Duration },
    Exit { status: ExitStatus, stderr: String },
}

const STDERR_TAIL: usize = 2000;

/// Runs `argv` with stderr captured to a file inside `scratch`, killing the
/// child if it outlives `timeout`.
pub(crate) fn run(argv: &[String], timeout: Duration, scratch: &Path) -> Result<(), ProcessFailure> {
    let (program, args) = argv
        .split_first()
        .ok_or_else(|| ProcessFailure::Spawn(std::io::Error::other("empty command")))?;
    let stderr_path = scratch.join("stderr.log");
    let stderr_file = File::create(&stderr_path).map_err(ProcessFailure::Spawn)?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(stderr_file)
        .spawn()
        .map_err(ProcessFailure::Spawn)?;

    let started = Instant::now();
    let status = loop {
        match child.try_wait().map_err(ProcessFailure::Spawn)? {
            Some(status) => break status,
            None if started.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(ProcessFailure::Timeout { after: timeout });
            }
            None => thread::sleep(Duration::from_millis(5)),
        }
    };
    if status.success() {
        return Ok(());
    }
    let mut stderr = String::new();
    if let Ok(mut f) = File::open(&stderr_path) {
        let _ = f.read_to_string(&mut stderr);
    }
    if stderr.len() > STDERR_TAIL {
        let mut cut = stderr.len() - STDERR_TAIL;
        while !stderr.is_char_boundary(cut) {
            cut += 1;
        }
        stderr = stderr[cut..].to_string();
    }
    Err(ProcessFailure::Exit { status, stderr })
}

/// Substitutes `{name}` placeholders inside each argument.
pub(crate) fn fill_template(tokens: &[String], values: &[(&str, String)]) -> Vec<String> {
    tokens
        .iter()
        .map(|tok| {
            values.iter().fold(tok.clone(), |acc, (name, value)| {
                acc.replace(&format!("{{{name}}}"), value)
            })
        })
        .collect()
}
