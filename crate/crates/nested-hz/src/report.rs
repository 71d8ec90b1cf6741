//! CSV emission, convergence tables, and run comparison.

use crate::adapt::LevelRecord;

/// Fixed CSV schema; golden-file tested.
pub const CSV_HEADER: &str =
    "level,n_triangles,stress_dofs,total_dofs,eta,osc_f,osc_g,error_a,error_hdiv,error_u,effectivity";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.10e}")).unwrap_or_default()
}

/// Serializes level records to the fixed schema; byte-stable for identical
/// inputs.
pub fn write_csv(rows: &[LevelRecord]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{:.10e},{:.10e},{:.10e},{},{},{},{}\n",
            r.level,
            r.n_triangles,
            r.stress_dofs,
            r.total_dofs,
            r.eta,
            r.osc_f,
            r.osc_g,
            fmt_opt(r.error_a),
            fmt_opt(r.error_hdiv),
            fmt_opt(r.error_u),
            fmt_opt(r.effectivity),
        ));
    }
    s
}

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("bad CSV header: expected {CSV_HEADER:?}")]
    BadHeader,
    #[error("line {0}: {1}")]
    BadLine(usize, String),
}

pub fn parse_csv(text: &str) -> Result<Vec<LevelRecord>, CsvError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(CsvError::BadHeader)?;
    if header.trim() != CSV_HEADER {
        return Err(CsvError::BadHeader);
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 11 {
            return Err(CsvError::BadLine(k + 2, format!("expected 11 columns, got {}", cols.len())));
        }
        let req = |i: usize| -> Result<f64, CsvError> {
            cols[i].parse().map_err(|e| CsvError::BadLine(k + 2, format!("column {i}: {e}")))
        };
        let opt = |i: usize| -> Result<Option<f64>, CsvError> {
            if cols[i].is_empty() {
                Ok(None)
            } else {
                req(i).map(Some)
            }
        };
        out.push(LevelRecord {
            level: cols[0].parse().map_err(|e| CsvError::BadLine(k + 2, format!("level: {e}")))?,
            n_triangles: cols[1].parse().map_err(|e| CsvError::BadLine(k + 2, format!("n: {e}")))?,
            stress_dofs: cols[2].parse().map_err(|e| CsvError::BadLine(k + 2, format!("dofs: {e}")))?,
            total_dofs: cols[3].parse().map_err(|e| CsvError::BadLine(k + 2, format!("dofs: {e}")))?,
            eta: req(4)?,
            osc_f: req(5)?,
            osc_g: req(6)?,
            error_a: opt(7)?,
            error_hdiv: opt(8)?,
            error_u: opt(9)?,
            effectivity: opt(10)?,
        });
    }
    Ok(out)
}

/// Observed order between two uniform levels (mesh size halves).
pub fn uniform_order(e_prev: f64, e_next: f64) -> f64 {
    (e_prev / e_next).ln() / 2.0f64.ln()
}

/// Observed rate against dof counts: `e ~ N^(-p)`.
pub fn dof_order(e_prev: f64, e_next: f64, n_prev: usize, n_next: usize) -> f64 {
    (e_prev / e_next).ln() / (n_next as f64 / n_prev as f64).ln()
}

/// Observed orders of a chosen column between consecutive levels.
/// `uniform = true` measures against mesh halving, otherwise against dofs.
pub fn observed_orders(rows: &[LevelRecord], value: impl Fn(&LevelRecord) -> Option<f64>, uniform: bool) -> Vec<Option<f64>> {
    let mut out = vec![None; rows.len()];
    for k in 1..rows.len() {
        if let (Some(a), Some(b)) = (value(&rows[k - 1]), value(&rows[k])) {
            if a > 0.0 && b > 0.0 {
                out[k] = Some(if uniform {
                    uniform_order(a, b)
                } else {
                    dof_order(a, b, rows[k - 1].stress_dofs, rows[k].stress_dofs)
                });
            }
        }
    }
    out
}

/// Least-squares slope of `log(y)` against `log(n)` over the tail of a run
/// (skipping `skip` initial levels).
pub fn loglog_slope(rows: &[LevelRecord], value: impl Fn(&LevelRecord) -> Option<f64>, skip: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .skip(skip)
        .filter_map(|r| value(r).filter(|v| *v > 0.0).map(|v| ((r.stress_dofs as f64).ln(), v.ln())))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Plain-text summary with per-level observed orders in the classic
/// "value | order" layout.
pub fn summary_table(rows: &[LevelRecord], uniform: bool) -> String {
    let mut s = String::new();
    let have_error = rows.iter().any(|r| r.error_a.is_some());
    let head = if have_error {
        "level  n_tri  stress_dofs  error_a        order   eta            order"
    } else {
        "level  n_tri  stress_dofs  eta            order"
    };
    s.push_str(head);
    s.push('\n');
    let err_orders = observed_orders(rows, |r| r.error_a, uniform);
    let eta_orders = observed_orders(rows, |r| Some(r.eta), uniform);
    for (k, r) in rows.iter().enumerate() {
        let ord = |o: Option<f64>| o.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
        if have_error {
            s.push_str(&format!(
                "{:<6} {:<6} {:<12} {:<14} {:<7} {:<14} {}\n",
                r.level,
                r.n_triangles,
                r.stress_dofs,
                fmt_opt(r.error_a),
                ord(err_orders[k]),
                format!("{:.6e}", r.eta),
                ord(eta_orders[k]),
            ));
        } else {
            s.push_str(&format!(
                "{:<6} {:<6} {:<12} {:<14} {}\n",
                r.level,
                r.n_triangles,
                r.stress_dofs,
                format!("{:.6e}", r.eta),
                ord(eta_orders[k]),
            ));
        }
    }
    s
}

/// Aligned comparison of two runs with ratios and log-log plot columns.
pub fn compare_table(a: &[LevelRecord], b: &[LevelRecord]) -> String {
    let mut s = String::new();
    s.push_str("level,dofs_a,eta_a,dofs_b,eta_b,eta_ratio,error_a_a,error_a_b,error_ratio,log10_dofs_a,log10_eta_a,log10_dofs_b,log10_eta_b\n");
    let n = a.len().min(b.len());
    for k in 0..n {
        let ra = &a[k];
        let rb = &b[k];
        let eta_ratio = ra.eta / rb.eta;
        let (ea, eb, er) = match (ra.error_a, rb.error_a) {
            (Some(x), Some(y)) => (format!("{x:.10e}"), format!("{y:.10e}"), format!("{:.6}", x / y)),
            _ => (String::new(), String::new(), String::new()),
        };
        s.push_str(&format!(
            "{},{},{:.10e},{},{:.10e},{:.6},{},{},{},{:.6},{:.6},{:.6},{:.6}\n",
            ra.level,
            ra.stress_dofs,
            ra.eta,
            rb.stress_dofs,
            rb.eta,
            eta_ratio,
            ea,
            eb,
            er,
            (ra.stress_dofs as f64).log10(),
            ra.eta.log10(),
            (rb.stress_dofs as f64).log10(),
            rb.eta.log10(),
        ));
    }
    s
}
