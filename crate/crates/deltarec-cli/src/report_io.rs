//! CSV projections of experiment reports.

use deltarec::montecarlo::ExperimentReport;

/// Per-n summary rows.
pub fn summary_csv(report: &ExperimentReport) -> String {
    let mut out = String::from(
        "n,center,scale,mean,variance,skewness,excess_kurtosis,ks,ks_p_value,compensator_mean\n",
    );
    for s in &report.per_n {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            s.n,
            s.center,
            s.scale,
            s.mean,
            s.variance,
            s.skewness.map_or(String::new(), |v| v.to_string()),
            s.excess_kurtosis.map_or(String::new(), |v| v.to_string()),
            s.ks,
            s.ks_p_value,
            s.compensator_mean,
        ));
    }
    out
}

/// Raw per-replication counts, one column per n; `None` when the report kept
/// no counts.
pub fn counts_csv(report: &ExperimentReport) -> Option<String> {
    let columns: Vec<(u64, &Vec<u64>)> = report
        .per_n
        .iter()
        .map(|s| s.counts.as_ref().map(|c| (s.n, c)))
        .collect::<Option<Vec<_>>>()?;
    let reps = columns.first()?.1.len();
    let mut out = columns
        .iter()
        .map(|(n, _)| format!("n_{n}"))
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    for row in 0..reps {
        let line = columns
            .iter()
            .map(|(_, c)| c[row].to_string())
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&line);
        out.push('\n');
    }
    Some(out)
}

/// Fraction of replications whose count did not change between the last two
/// grid lengths (the finite-record stabilization diagnostic). Needs kept
/// counts and at least two grid points.
pub fn stabilization_fraction(report: &ExperimentReport) -> Option<f64> {
    if report.per_n.len() < 2 {
        return None;
    }
    let last = report.per_n.last()?.counts.as_ref()?;
    let prev = report.per_n[report.per_n.len() - 2].counts.as_ref()?;
    let stable = last
        .iter()
        .zip(prev.iter())
        .filter(|(a, b)| a == b)
        .count();
    Some(stable as f64 / last.len() as f64)
}
