//! CSV and schema emission.
//!
//! Every artifact starts with a `#`-prefixed metadata block (tool version,
//! mode, the fully resolved configuration, column names) followed by plain
//! comma-separated data rows. Floats are written with 17 significant digits
//! so values survive a parse round trip exactly. The `# generated_unix`
//! line is the only part of an artifact that varies between identical runs;
//! the data section is byte-identical for a fixed configuration and seed.

use crate::config::Settings;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Formats a float with enough digits to round-trip exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// One column of a table: name plus a short description for the schema.
pub struct Column {
    /// Header name as it appears in the `# columns` line.
    pub name: &'static str,
    /// Human-readable meaning, recorded in SCHEMA.md.
    pub description: &'static str,
}

/// Description of one emitted file, accumulated for SCHEMA.md.
struct SchemaEntry {
    file: String,
    description: String,
    columns: Vec<(&'static str, &'static str)>,
}

/// Writes the artifacts of one run into a target directory.
pub struct OutputWriter {
    dir: PathBuf,
    mode: &'static str,
    echo: Vec<(String, String)>,
    schema: Vec<SchemaEntry>,
}

impl OutputWriter {
    /// Creates the output directory if needed and captures the resolved
    /// configuration for echoing.
    pub fn new(dir: &Path, settings: &Settings) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let echo = settings
            .echo_pairs()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Ok(OutputWriter {
            dir: dir.to_path_buf(),
            mode: settings.mode().as_str(),
            echo,
            schema: Vec::new(),
        })
    }

    /// Writes one CSV table and records it for the schema document.
    pub fn write_table(
        &mut self,
        file: &str,
        description: &str,
        extra_metadata: &[(String, String)],
        columns: &[Column],
        rows: &[Vec<String>],
    ) -> std::io::Result<PathBuf> {
        let path = self.dir.join(file);
        let mut out = String::new();
        out.push_str(&format!(
            "# magsim {} mode={}\n",
            env!("CARGO_PKG_VERSION"),
            self.mode
        ));
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        out.push_str(&format!("# generated_unix = {stamp}\n"));
        for (key, value) in &self.echo {
            out.push_str(&format!("# config: {key} = {value}\n"));
        }
        for (key, value) in extra_metadata {
            out.push_str(&format!("# {key} = {value}\n"));
        }
        let names: Vec<&str> = columns.iter().map(|c| c.name).collect();
        out.push_str(&format!("# columns = {}\n", names.join(",")));
        out.push_str(&names.join(","));
        out.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), columns.len());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        std::fs::write(&path, out)?;
        self.schema.push(SchemaEntry {
            file: file.to_string(),
            description: description.to_string(),
            columns: columns.iter().map(|c| (c.name, c.description)).collect(),
        });
        Ok(path)
    }

    /// Writes SCHEMA.md describing every table emitted by this run.
    pub fn write_schema(&self) -> std::io::Result<PathBuf> {
        let path = self.dir.join("SCHEMA.md");
        let mut out = String::new();
        out.push_str(&format!("# Output schema for `{}`\n\n", self.mode));
        out.push_str(
            "Each CSV starts with `#` metadata lines (tool version, run mode, \
             a `generated_unix` timestamp, the fully resolved configuration as \
             `# config: key = value` pairs, and the column list), then a \
             header row and the data rows. Floats carry 17 significant \
             digits. Only the timestamp line varies between identical runs.\n",
        );
        for entry in &self.schema {
            out.push_str(&format!("\n## {}\n\n{}\n\n", entry.file, entry.description));
            out.push_str("| column | meaning |\n|---|---|\n");
            for (name, desc) in &entry.columns {
                out.push_str(&format!("| `{name}` | {desc} |\n"));
            }
        }
        std::fs::write(&path, out)?;
        Ok(path)
    }

    /// Writes a gnuplot script next to the data files.
    pub fn write_gnuplot(&self, file: &str, script: &str) -> std::io::Result<PathBuf> {
        let path = self.dir.join(file);
        let mut out = std::fs::File::create(&path)?;
        out.write_all(script.as_bytes())?;
        Ok(path)
    }
}
