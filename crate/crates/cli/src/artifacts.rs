//! Output bookkeeping: provenance headers, input protection and the manifest.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Why a run failed. Usage problems exit 1, data and model problems exit 2.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
}

pub type Result<T, E = Failure> = std::result::Result<T, E>;

impl From<netsensor::Error> for Failure {
    fn from(e: netsensor::Error) -> Self {
        use netsensor::Error;
        let hint = match &e {
            Error::Capacity(_) => "; try a smaller --size/--sizes or a looser --combo",
            Error::Io { source, .. } if source.kind() == io::ErrorKind::NotFound => "; check the path and --data-dir",
            Error::SuspiciousInput { .. } => "; is this the right file and format?",
            Error::EmptyArea { .. } => "; try a lower --threshold",
            _ => "",
        };
        Failure::Data(format!("{e}{hint}"))
    }
}

/// Attach the offending file to a core error.
pub fn at(path: &Path, e: netsensor::Error) -> Failure {
    match Failure::from(e) {
        Failure::Data(m) => Failure::Data(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    at(path, netsensor::Error::io(path, e))
}

pub struct Artifacts {
    dir: PathBuf,
    command: &'static str,
    hash: String,
    seed: u64,
    inputs: Vec<PathBuf>,
    written: BTreeSet<String>,
}

impl Artifacts {
    pub fn new(dir: PathBuf, command: &'static str, hash: String, seed: u64) -> Result<Self> {
        fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
        Ok(Artifacts {
            dir,
            command,
            hash,
            seed,
            inputs: Vec::new(),
            written: BTreeSet::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn header(&self) -> String {
        format!("# netsensor {} config={} seed={}", self.command, self.hash, self.seed)
    }

    /// Open `base/rel` for reading and remember it so no output replaces it.
    pub fn open(&mut self, base: &Path, rel: &Path) -> Result<(PathBuf, BufReader<File>)> {
        let path = base.join(rel);
        let file = File::open(&path).map_err(|e| io_failure(&path, e))?;
        if let Ok(c) = path.canonicalize() {
            self.inputs.push(c);
        }
        Ok((path, BufReader::new(file)))
    }

    fn target(&self, name: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Ok(c) = path.canonicalize() {
            if self.inputs.contains(&c) {
                return Err(Failure::Usage(format!(
                    "refusing to overwrite input {}; pick another --out-dir",
                    path.display()
                )));
            }
        }
        Ok(path)
    }

    fn write_file(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<PathBuf> {
        let path = self.target(name)?;
        let file = File::create(&path).map_err(|e| io_failure(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w).and_then(|_| w.flush()).map_err(|e| io_failure(&path, e))?;
        self.written.insert(name.to_string());
        Ok(path)
    }

    /// Text table or stream, first line `# netsensor <command> config=<hash> seed=<seed>`.
    pub fn text(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<PathBuf> {
        let header = self.header();
        self.write_file(name, |w| {
            writeln!(w, "{header}")?;
            f(w)
        })
    }

    /// Pretty JSON; objects gain a `provenance` member.
    pub fn json(&mut self, name: &str, mut value: Value) -> Result<PathBuf> {
        if let Some(obj) = value.as_object_mut() {
            obj.insert(
                "provenance".into(),
                json!({ "tool": "netsensor", "command": self.command, "config": self.hash, "seed": self.seed }),
            );
        }
        self.raw(name, |w| {
            serde_json::to_writer_pretty(&mut *w, &value)?;
            writeln!(w)
        })
    }

    /// File written verbatim.
    pub fn raw(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<PathBuf> {
        self.write_file(name, f)
    }

    /// `manifest.json` listing every file written so far with its size and
    /// SHA-256.
    pub fn manifest(&mut self) -> Result<usize> {
        let mut entries = Vec::new();
        for name in &self.written {
            let path = self.dir.join(name);
            let bytes = fs::read(&path).map_err(|e| io_failure(&path, e))?;
            entries.push(json!({
                "path": name,
                "bytes": bytes.len(),
                "sha256": format!("{:x}", Sha256::digest(&bytes)),
            }));
        }
        let n = entries.len();
        self.json("manifest.json", json!({ "artifacts": entries }))?;
        Ok(n)
    }
}
