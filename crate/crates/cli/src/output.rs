use crate::{invalid, CliResult, Command, Format, Options, SCHEMA};
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::Path;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'static str,
    command: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// A CSV file written next to the report.
pub struct Table {
    pub name: String,
    pub contents: String,
}

pub fn report_json<T: Serialize>(cmd: Command, body: &T) -> CliResult<String> {
    let env = Envelope { schema: SCHEMA, command: cmd.name(), body };
    let mut s = serde_json::to_string_pretty(&env).map_err(|e| invalid(format!("cannot serialize report: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Writes `report.json` and the tables into `--out`, or prints the report
/// (or the first table with `--format csv`) on stdout.
pub fn emit<T: Serialize>(cmd: Command, body: &T, tables: Vec<Table>, opts: &Options) -> CliResult<()> {
    let report = report_json(cmd, body)?;
    match &opts.out {
        None => {
            let text = match opts.format {
                Format::Json => report,
                Format::Csv => tables.into_iter().next().map(|t| t.contents).unwrap_or_default(),
            };
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| invalid(format!("cannot write to stdout: {e}")))
        }
        Some(dir) => {
            let mut files = vec![("report.json".to_string(), report)];
            files.extend(tables.into_iter().map(|t| (t.name, t.contents)));
            write_files(dir, &files, opts.force)
        }
    }
}

fn write_files(dir: &Path, files: &[(String, String)], force: bool) -> CliResult<()> {
    if !force {
        if let Some((name, _)) = files.iter().find(|(n, _)| dir.join(n).exists()) {
            return Err(invalid(format!(
                "refusing to overwrite {} (pass --force)",
                dir.join(name).display()
            )));
        }
    }
    fs::create_dir_all(dir).map_err(|e| invalid(format!("cannot create {}: {e}", dir.display())))?;
    for (name, contents) in files {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

/// CSV from a header and rows of numbers (17 significant digits).
pub fn numeric_csv(header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
