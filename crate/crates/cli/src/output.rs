use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::CliError;

/// CSV file with the `# floquet-sb <version> <command> <hash>` preamble.
pub struct CsvOut {
    inner: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub fn create(path: &Path, command: &str, hash: &str, header: &[String]) -> Result<Self, CliError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut file = BufWriter::new(File::create(path)?);
        writeln!(file, "# floquet-sb {} {command} {hash}", env!("CARGO_PKG_VERSION"))?;
        let mut inner = csv::Writer::from_writer(file);
        inner.write_record(header)?;
        Ok(Self { inner })
    }

    pub fn row(&mut self, cells: &[Option<f64>]) -> Result<(), CliError> {
        self.inner
            .write_record(cells.iter().map(|c| c.map(fmt).unwrap_or_default()))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Fifteen significant digits.
pub fn fmt(x: f64) -> String {
    format!("{x:.14e}")
}
