//! Human-readable tables, rendered to stderr so the JSON report on stdout
//! stays machine-clean.

use crate::report::{
    CheckResults, DiscoverResults, GeneratorReport, LumpingReport, OracleResults, ReduceResults,
    SimulateResults,
};

fn eigenvalue_label(re: f64, im: f64) -> String {
    if im.abs() < 1e-12 {
        format!("{re:.4}")
    } else {
        format!("{re:.4}{im:+.4}i")
    }
}

fn generator_summary(set: &[GeneratorReport]) -> String {
    set.iter()
        .map(|g| {
            format!(
                "λ={} ×{}",
                eigenvalue_label(g.eigenvalue.re, g.eigenvalue.im),
                g.dimension
            )
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn lumping_rows(lumpings: &[LumpingReport]) {
    eprintln!("{:>5}  {:>12}  partition", "lumps", "deviation");
    for l in lumpings {
        let generators = match &l.generating_set {
            Some(set) => format!("   [{}]", generator_summary(set)),
            None => String::new(),
        };
        eprintln!(
            "{:>5}  {:>12.3e}  {}{}",
            l.lumps, l.max_deviation, l.partition, generators
        );
    }
}

pub fn check(r: &CheckResults) {
    eprintln!("partition      {}", r.partition);
    eprintln!("lumpable       {}", if r.lumpable { "yes" } else { "no" });
    eprintln!("max deviation  {:.3e}", r.max_deviation);
}

pub fn reduce(r: &ReduceResults) {
    eprintln!("partition      {}", r.partition);
    eprintln!("max deviation  {:.3e}", r.max_deviation);
    eprintln!("reduced matrix ({0} x {0}):", r.lumps);
    for row in &r.matrix {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:>10.6}")).collect();
        eprintln!("  {}", cells.join(" "));
    }
}

pub fn discover(r: &DiscoverResults) {
    if let Some(values) = &r.eigenvalues {
        let labels: Vec<String> = values
            .iter()
            .map(|z| eigenvalue_label(z.re, z.im))
            .collect();
        eprintln!("eigenvalues    {}", labels.join(", "));
    }
    if let Some(zeta) = r.perturbation {
        eprintln!("perturbation   identity blend, zeta = {zeta}");
    }
    eprintln!(
        "candidates     {} examined{}",
        r.candidates_examined,
        if r.truncated { " (truncated)" } else { "" }
    );
    eprintln!("lumpings       {}", r.count);
    lumping_rows(&r.lumpings);
}

pub fn oracle(r: &OracleResults) {
    eprintln!("partitions     {} scanned", r.bell);
    eprintln!("lumpings       {}", r.count);
    lumping_rows(&r.lumpings);
}

pub fn simulate(r: &SimulateResults) {
    eprintln!(
        "trajectory     {} steps from state {} (seed {}, {})",
        r.steps, r.x0, r.seed, r.rng
    );
    eprintln!("visits         {:?}", r.visits);
    if let Some(t) = &r.quotient_test {
        eprintln!(
            "quotient test  {}: G2 = {:.3} (dof {}), p = {:.4} [diagnostic]",
            t.partition, t.statistic, t.dof, t.p_value
        );
    }
}
