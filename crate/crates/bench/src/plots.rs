use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::BenchError;
use crate::report::{write_text, RunReport};

/// Writes plot data and a gnuplot script for `report` into `dir`:
///
/// - `errors.dat`: error against `ε` for the log-log convergence plot,
/// - `f_overlay.dat`: identified and true `f`, one block per noise level,
/// - `gamma1_traces.dat`: exact and reconstructed `u|Γ₁`,
/// - `plots.gp`: renders the three figures as PNG.
///
/// A report without points produces no files. The output depends only on
/// the report.
pub fn emit_plots(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    if report.points.is_empty() {
        return Ok(Vec::new());
    }
    let mut files = Vec::new();

    let mut errors = String::from("# eps trace_error_H1/2_00 flux_error_H1/2_00_dual f_sup_error_Linf\n");
    for p in report.points.iter().filter(|p| p.eps > 0.0) {
        let f = p.identification.as_ref().and_then(|i| i.sup_error);
        let _ = writeln!(
            errors,
            "{} {} {} {}",
            p.eps,
            p.trace_error,
            p.flux_error,
            f.map_or("?".to_string(), |v| v.to_string())
        );
    }
    files.push(write_text(dir, "errors.dat", &errors)?);

    let identified: Vec<_> =
        report.points.iter().filter_map(|p| p.identification.as_ref().map(|i| (p.eps, i))).collect();
    if !identified.is_empty() {
        let mut overlay = String::new();
        for (block, (eps, id)) in identified.iter().enumerate() {
            if block > 0 {
                overlay.push_str("\n\n");
            }
            let _ = writeln!(overlay, "# eps = {eps}\n# u f_identified f_true flagged");
            for r in &id.table {
                let _ = writeln!(overlay, "{} {} {} {}", r.center, r.value, r.truth, r.flagged as u8);
            }
        }
        files.push(write_text(dir, "f_overlay.dat", &overlay)?);
    }

    let mut traces = String::from("# x u_exact");
    for p in &report.points {
        let _ = write!(traces, " u_eps={}", p.eps);
    }
    traces.push('\n');
    for (i, x) in report.direct.grid.iter().enumerate() {
        let _ = write!(traces, "{x} {}", report.direct.u_gamma1[i]);
        for p in &report.points {
            let _ = write!(traces, " {}", p.u_gamma1[i]);
        }
        traces.push('\n');
    }
    files.push(write_text(dir, "gamma1_traces.dat", &traces)?);

    files.push(write_text(dir, "plots.gp", &script(report, !identified.is_empty()))?);
    Ok(files)
}

fn script(report: &RunReport, overlay: bool) -> String {
    let mut s = String::from("set terminal pngcairo size 900,600\nset datafile missing \"?\"\nset key outside\n\n");
    s.push_str(
        "set output \"errors.png\"\nset logscale xy\nset xlabel \"noise level\"\nset ylabel \"error\"\n\
         plot \"errors.dat\" using 1:2 with linespoints title \"u on top, H1/2_00\", \\\n     \
         \"errors.dat\" using 1:3 with linespoints title \"flux on top, dual norm\", \\\n     \
         \"errors.dat\" using 1:4 with linespoints title \"f, sup on flagged bins\"\nunset logscale\n\n",
    );
    if overlay {
        s.push_str("set output \"f_overlay.png\"\nset xlabel \"u\"\nset ylabel \"f(u)\"\nplot ");
        let blocks = report.points.iter().filter(|p| p.identification.is_some()).map(|p| p.eps);
        for (i, eps) in blocks.enumerate() {
            let _ = write!(
                s,
                "\"f_overlay.dat\" index {i} using 1:($4 > 0 ? $2 : 1/0) with points title \"identified, eps={eps}\", \\\n     "
            );
        }
        s.push_str("\"f_overlay.dat\" index 0 using 1:3 with lines title \"true\"\n\n");
    }
    s.push_str("set output \"gamma1_traces.png\"\nset xlabel \"x\"\nset ylabel \"u on top\"\nplot ");
    s.push_str("\"gamma1_traces.dat\" using 1:2 with lines lw 2 title \"exact\"");
    for (i, p) in report.points.iter().enumerate() {
        let _ = write!(s, ", \\\n     \"gamma1_traces.dat\" using 1:{} with lines title \"eps={}\"", i + 3, p.eps);
    }
    s.push('\n');
    s
}
