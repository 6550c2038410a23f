use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Provenance written at the top of every output.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub command: String,
}

impl Meta {
    pub fn new(config_text: &str, args: &[String]) -> Self {
        Meta {
            tool: "foldspdc".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_sha256: hex::encode(Sha256::digest(config_text.as_bytes())),
            command: args.join(" "),
        }
    }
}

/// Where data and the human-readable summary go.
pub struct Sink {
    pub format: Format,
    pub out: Option<PathBuf>,
    pub meta: Meta,
}

impl Sink {
    /// `#`-prefixed header lines, then the CSV body produced by `body`.
    /// Extra `notes` become additional comment lines after the metadata.
    pub fn csv<F>(&self, notes: &[String], body: F) -> foldspdc::Result<Vec<u8>>
    where
        F: FnOnce(&mut Vec<u8>) -> foldspdc::Result<()>,
    {
        let mut buf = Vec::new();
        writeln!(buf, "# {} {}", self.meta.tool, self.meta.version)?;
        writeln!(buf, "# config_sha256 {}", self.meta.config_sha256)?;
        writeln!(buf, "# command {}", self.meta.command)?;
        for n in notes {
            writeln!(buf, "# {n}")?;
        }
        body(&mut buf)?;
        Ok(buf)
    }

    pub fn json<T: Serialize>(&self, data: &T) -> foldspdc::Result<Vec<u8>> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            meta: &'a Meta,
            data: &'a T,
        }
        let mut buf = serde_json::to_vec_pretty(&Doc { meta: &self.meta, data })?;
        buf.push(b'\n');
        Ok(buf)
    }

    /// Writes `data` to `--out` (summary to stdout) or to stdout (summary to stderr).
    pub fn finish(&self, data: &[u8], summary: &str) -> foldspdc::Result<()> {
        match &self.out {
            Some(path) => {
                fs::write(path, data)?;
                print!("{summary}");
                io::stdout().flush()?;
            }
            None => {
                let mut out = io::stdout().lock();
                out.write_all(data)?;
                out.flush()?;
                eprint!("{summary}");
            }
        }
        Ok(())
    }
}
