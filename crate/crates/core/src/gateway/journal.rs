//! Operator log in the `HH:MM:SS,mmm - message` format.

use std::io::Write;

use crate::time::log_clock;

/// Collects log lines and optionally echoes them to a writer.
#[derive(Default)]
pub struct Journal {
    lines: Vec<String>,
    echo: Option<Box<dyn Write + Send>>,
}

impl std::fmt::Debug for Journal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Journal").field("lines", &self.lines.len()).finish()
    }
}

impl Journal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn to_stderr() -> Self {
        Self::with_writer(Box::new(std::io::stderr()))
    }

    pub fn with_writer(out: Box<dyn Write + Send>) -> Self {
        Journal {
            lines: Vec::new(),
            echo: Some(out),
        }
    }

    pub fn log(&mut self, at_ms: i64, message: impl AsRef<str>) {
        let line = format!("{} - {}", log_clock(at_ms), message.as_ref());
        if let Some(out) = self.echo.as_mut() {
            let _ = writeln!(out, "{line}");
            let _ = out.flush();
        }
        self.lines.push(line);
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_like_the_operator_log() {
        let mut j = Journal::new();
        j.log(1_540_043_566_845, "Hash rate (175.0 GH/s) violated");
        assert_eq!(j.lines(), ["13:52:46,845 - Hash rate (175.0 GH/s) violated"]);
    }
}
