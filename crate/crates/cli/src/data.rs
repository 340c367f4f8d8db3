//! Cauchy data files. JSON goes through [`CauchyData::from_json_str`]; CSV
//! has a header row, an `x` column on a uniform grid and then either one real
//! column per `g_j` or a `re, im` pair per `g_j`.

use std::path::Path;

use hypan_core::CauchyData;
use num_complex::Complex64;

pub fn load(path: &Path, m: usize, t0: f64, period: f64) -> Result<CauchyData, Box<dyn std::error::Error>> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if !is_csv {
        return Ok(CauchyData::from_path(path)?);
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let cols = reader.headers()?.len();
    let complex = match cols.checked_sub(1) {
        Some(c) if c == m => false,
        Some(c) if c == 2 * m => true,
        _ => return Err(format!("data: {cols} columns; expected x plus {m} real or {} re/im columns", 2 * m).into()),
    };
    let mut x = Vec::new();
    let mut g = vec![Vec::new(); m];
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| format!("data row {}: {e}", line + 2)))
            .collect::<Result<_, _>>()?;
        x.push(vals[0]);
        for (j, gj) in g.iter_mut().enumerate() {
            gj.push(if complex {
                Complex64::new(vals[1 + 2 * j], vals[2 + 2 * j])
            } else {
                Complex64::new(vals[1 + j], 0.0)
            });
        }
    }
    let n = x.len();
    if n == 0 {
        return Err("data: no rows".into());
    }
    let dx = period / n as f64;
    for (k, &xk) in x.iter().enumerate() {
        if (xk - (x[0] + k as f64 * dx)).abs() > 1e-9 * period {
            return Err(format!("data: x = {xk} in row {} is off the uniform grid of period {period}", k + 2).into());
        }
    }
    Ok(CauchyData::new(x[0], period, g, t0)?)
}
