use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use oscpop::{Error, Result};

/// Environment variable naming the directory relative `--output` paths are
/// resolved against.
pub const OUT_DIR_ENV: &str = "OSCPOP_OUT_DIR";

/// Twelve significant digits, fixed notation for ordinary magnitudes and
/// scientific otherwise. Trailing zeros are dropped; output depends only on
/// the value.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-5..=14).contains(&exponent) {
        let decimals = (11 - exponent).max(0) as usize;
        let s = format!("{x:.decimals$}");
        trim_zeros(s)
    } else {
        let s = format!("{x:.11e}");
        let (mantissa, exp) = s.split_once('e').expect("scientific format has an exponent");
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// CSV text with a header row and one formatted record per row.
pub fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    writer.write_record(header).map_err(io)?;
    for row in rows {
        writer.write_record(row.iter().map(|&v| fmt_num(v))).map_err(io)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Where a relative `--output` path lands: under `$OSCPOP_OUT_DIR` when set.
pub fn resolve_output(path: &Path) -> PathBuf {
    match env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() && !dir.is_empty() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::Io(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(0.75), "0.75");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(2.0 / 3.0 * 1000.0), "666.666666667");
        assert_eq!(fmt_num(0.1 * 0.7), "0.07");
        assert_eq!(fmt_num(1.5e-300), "1.5e-300");
        assert_eq!(fmt_num(-1e300), "-1e300");
        assert_eq!(fmt_num(123456789012345.0), "123456789012345");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_has_header_and_newlines() {
        let text = csv_text(&["t", "P"], vec![vec![0.0, 0.5], vec![0.1, 0.525]]).unwrap();
        assert_eq!(text, "t,P\n0,0.5\n0.1,0.525\n");
    }
}
