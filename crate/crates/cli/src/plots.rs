//! Gnuplot script generation from the runner CSV tables. The scripts are
//! self-contained (data inlined as heredoc blocks), so regenerating from
//! the same CSV is byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

#[derive(Debug, Clone)]
struct Table {
    kind: String,
    axis: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn column(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .with_context(|| format!("CSV is missing the required column \"{name}\""))
    }
}

fn parse_csv(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("CSV is empty")?;
    if !header.starts_with("# cachejt-csv v1 ") {
        bail!("not a cachejt CSV: first line must be the \"# cachejt-csv v1\" header");
    }
    let mut kind = None;
    let mut axis = None;
    for token in header.trim_start_matches("# ").split_whitespace() {
        if let Some(v) = token.strip_prefix("kind=") {
            kind = Some(v.to_string());
        }
        if let Some(v) = token.strip_prefix("axis=") {
            axis = Some(v.to_string());
        }
    }
    let kind = kind.context("CSV header carries no kind= tag")?;
    let axis = axis.context("CSV header carries no axis= tag")?;
    let columns: Vec<String> = lines
        .next()
        .context("CSV has no column header")?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(str::to_string).collect();
        if fields.len() != columns.len() {
            bail!(
                "CSV row {} has {} fields, expected {}",
                i + 3,
                fields.len(),
                columns.len()
            );
        }
        rows.push(fields);
    }
    Ok(Table {
        kind,
        axis,
        columns,
        rows,
    })
}

fn axis_label(axis: &str) -> &str {
    match axis {
        "tau_db" => "SIR threshold (dB)",
        "coop_size" => "cooperating BSs M",
        "gamma" => "Zipf exponent",
        "cache_size" => "cache size K",
        "n_files" => "number of files N",
        other => other,
    }
}

/// Ordered unique values of a column, preserving first appearance.
fn series_keys(table: &Table, cols: &[usize]) -> Vec<Vec<String>> {
    let mut keys: Vec<Vec<String>> = Vec::new();
    for row in &table.rows {
        let key: Vec<String> = cols.iter().map(|&c| row[c].clone()).collect();
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys
}

/// Writes a gnuplot script rendering the figure for `csv_path`; returns
/// the script path (CSV stem with a `.gp` extension, in `out_dir`).
pub fn emit_plots(csv_path: &Path, out_dir: &Path) -> Result<PathBuf> {
    let table = parse_csv(csv_path)?;
    let stem = csv_path
        .file_stem()
        .context("CSV path has no file name")?
        .to_string_lossy()
        .to_string();
    let mut script = String::new();
    writeln!(
        script,
        "# generated by cachejt from {}",
        csv_path.file_name().unwrap().to_string_lossy()
    )?;
    writeln!(script, "set terminal pngcairo size 960,640 enhanced")?;
    writeln!(script, "set output '{stem}.png'")?;
    writeln!(script, "set grid")?;
    writeln!(script, "set yrange [0:1]")?;
    match table.kind.as_str() {
        "curve" => emit_curve(&table, &mut script)?,
        "optimize" => emit_optimize(&table, &mut script)?,
        "compare" => emit_compare(&table, &mut script)?,
        other => bail!("unknown CSV kind \"{other}\""),
    }
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("{stem}.gp"));
    fs::write(&path, script).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn emit_curve(table: &Table, script: &mut String) -> Result<()> {
    let x = table.column(&table.axis)?;
    let coop = table.column("coop_size")?;
    let scheme = table.column("scheme")?;
    let analytic = table.column("analytic_stp")?;
    let mean = table.column("mc_mean")?;
    let se = table.column("mc_std_error")?;
    writeln!(script, "set xlabel '{}'", axis_label(&table.axis))?;
    writeln!(script, "set ylabel 'STP'")?;
    writeln!(script, "set key bottom left")?;
    let keys = series_keys(table, &[coop, scheme]);
    for (i, key) in keys.iter().enumerate() {
        writeln!(script, "$s{i} << EOD")?;
        for row in table
            .rows
            .iter()
            .filter(|r| r[coop] == key[0] && r[scheme] == key[1])
        {
            writeln!(
                script,
                "{} {} {} {}",
                row[x], row[analytic], row[mean], row[se]
            )?;
        }
        writeln!(script, "EOD")?;
    }
    let mut parts = Vec::new();
    for (i, key) in keys.iter().enumerate() {
        let label = format!("{} M={}", key[1], key[0]);
        parts.push(format!(
            "$s{i} using 1:2 with lines lw 2 lc {c} title '{label} analytic'",
            c = i + 1
        ));
        parts.push(format!(
            "$s{i} using 1:3:4 with yerrorbars pt 7 ps 0.7 lc {c} title '{label} MC'",
            c = i + 1
        ));
    }
    writeln!(script, "plot \\\n  {}", parts.join(", \\\n  "))?;
    Ok(())
}

fn emit_optimize(table: &Table, script: &mut String) -> Result<()> {
    let sweep = table.column(&table.axis)?;
    let coop = table.column("coop_size")?;
    let scheme = table.column("scheme")?;
    let file_col = table.column("file")?;
    let t_star = table.column("t_star")?;
    writeln!(script, "set xlabel 'file index'")?;
    writeln!(script, "set ylabel 'placement probability'")?;
    writeln!(script, "set key top right")?;
    let keys = series_keys(table, &[sweep, coop, scheme]);
    for (i, key) in keys.iter().enumerate() {
        writeln!(script, "$s{i} << EOD")?;
        for row in table
            .rows
            .iter()
            .filter(|r| r[sweep] == key[0] && r[coop] == key[1] && r[scheme] == key[2])
        {
            writeln!(script, "{} {}", row[file_col], row[t_star])?;
        }
        writeln!(script, "EOD")?;
    }
    let mut parts = Vec::new();
    for (i, key) in keys.iter().enumerate() {
        let label = format!("{}={} {}", axis_short(&table.axis), key[0], key[2]);
        parts.push(format!(
            "$s{i} using 1:2 with linespoints lw 2 pt {p} title '{label}'",
            p = i + 1
        ));
    }
    writeln!(script, "plot \\\n  {}", parts.join(", \\\n  "))?;
    Ok(())
}

fn emit_compare(table: &Table, script: &mut String) -> Result<()> {
    let x = table.column(&table.axis)?;
    let strategy = table.column("strategy")?;
    let scheme = table.column("scheme")?;
    let mean = table.column("mc_mean")?;
    let se = table.column("mc_std_error")?;
    writeln!(script, "set xlabel '{}'", axis_label(&table.axis))?;
    writeln!(script, "set ylabel 'STP'")?;
    writeln!(script, "set key bottom right")?;
    let keys = series_keys(table, &[strategy, scheme]);
    for (i, key) in keys.iter().enumerate() {
        writeln!(script, "$s{i} << EOD")?;
        for row in table
            .rows
            .iter()
            .filter(|r| r[strategy] == key[0] && r[scheme] == key[1])
        {
            writeln!(script, "{} {} {}", row[x], row[mean], row[se])?;
        }
        writeln!(script, "EOD")?;
    }
    let mut parts = Vec::new();
    for (i, key) in keys.iter().enumerate() {
        let label = format!("{} {}", key[0], key[1]);
        parts.push(format!(
            "$s{i} using 1:2:3 with yerrorlines lw 2 pt {p} title '{label}'",
            p = i + 1
        ));
    }
    writeln!(script, "plot \\\n  {}", parts.join(", \\\n  "))?;
    Ok(())
}

fn axis_short(axis: &str) -> &str {
    match axis {
        "tau_db" => "tau(dB)",
        other => other,
    }
}
