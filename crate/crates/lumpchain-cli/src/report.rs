//! JSON report shapes. Field order is fixed by declaration order and
//! floats render in shortest round-trip form, so identical inputs and
//! flags produce byte-identical reports.

use lumpchain::discovery::{Discovery, LumpingCandidate};
use lumpchain::io::blocks_string;
use lumpchain::Partition;
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub input_digest: String,
    pub config: ReportConfig,
    pub results: serde_json::Value,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReportConfig {
    pub tol_validate: f64,
    pub tol_lump: f64,
    pub tol_eig: f64,
    pub tol_group: f64,
    pub tol_element: f64,
    pub zeta: f64,
    pub guard: u64,
    pub max_candidates: usize,
    pub max_rotation_patterns: usize,
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ComplexNumber {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CheckResults {
    pub partition: String,
    pub blocks: Vec<Vec<usize>>,
    pub lumps: usize,
    pub lumpable: bool,
    pub max_deviation: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReduceResults {
    pub partition: String,
    pub blocks: Vec<Vec<usize>>,
    pub lumps: usize,
    pub max_deviation: f64,
    pub commutation_residual: f64,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GeneratorReport {
    pub group: usize,
    pub eigenvalue: ComplexNumber,
    pub dimension: usize,
    pub coefficients: Vec<Vec<ComplexNumber>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LumpingReport {
    pub partition: String,
    /// 1-based states per lump.
    pub blocks: Vec<Vec<usize>>,
    pub lumps: usize,
    pub max_deviation: f64,
    /// Absent when the lumpings come from the exhaustive scan, which
    /// carries no spectral attribution.
    pub generating_set: Option<Vec<GeneratorReport>>,
    pub complement: Option<Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DiscoverResults {
    pub diagonalizable: bool,
    pub eigenvalues: Option<Vec<ComplexNumber>>,
    pub perturbation: Option<f64>,
    pub degenerate_spectrum: bool,
    pub truncated: bool,
    pub candidates_examined: usize,
    pub count: usize,
    pub lumpings: Vec<LumpingReport>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OracleResults {
    pub bell: u64,
    pub count: usize,
    pub lumpings: Vec<LumpingReport>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QuotientTestReport {
    pub partition: String,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Always true: the test supports but never overrides the
    /// membership-matrix check.
    pub diagnostic: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SimulateResults {
    /// 1-based starting state, echoing the input convention.
    pub x0: usize,
    pub steps: usize,
    pub seed: u64,
    pub rng: String,
    pub visits: Vec<u64>,
    pub trajectory_file: Option<String>,
    pub quotient_test: Option<QuotientTestReport>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorReport {
    pub kind: String,
    pub message: String,
}

fn blocks_one_based(q: &Partition) -> Vec<Vec<usize>> {
    q.lumps()
        .into_iter()
        .map(|lump| lump.into_iter().map(|i| i + 1).collect())
        .collect()
}

pub fn lumping_report(c: &LumpingCandidate<f64>, with_generators: bool) -> LumpingReport {
    let generating_set = with_generators.then(|| {
        c.generating_set
            .iter()
            .map(|g| GeneratorReport {
                group: g.group,
                eigenvalue: ComplexNumber {
                    re: g.eigenvalue.re,
                    im: g.eigenvalue.im,
                },
                dimension: g.dimension,
                coefficients: g
                    .coefficients
                    .iter()
                    .map(|w| w.iter().map(|z| ComplexNumber { re: z.re, im: z.im }).collect())
                    .collect(),
            })
            .collect()
    });
    LumpingReport {
        partition: blocks_string(&c.partition),
        blocks: blocks_one_based(&c.partition),
        lumps: c.partition.num_lumps(),
        max_deviation: c.max_deviation,
        generating_set,
        complement: with_generators.then(|| c.complement.clone()),
    }
}

pub fn plain_lumping_report(q: &Partition, max_deviation: f64) -> LumpingReport {
    LumpingReport {
        partition: blocks_string(q),
        blocks: blocks_one_based(q),
        lumps: q.num_lumps(),
        max_deviation,
        generating_set: None,
        complement: None,
    }
}

pub fn discover_results(d: &Discovery<f64>) -> DiscoverResults {
    DiscoverResults {
        diagonalizable: true,
        eigenvalues: Some(
            d.spectrum
                .iter()
                .map(|z| ComplexNumber { re: z.re, im: z.im })
                .collect(),
        ),
        perturbation: d.perturbation,
        degenerate_spectrum: d.degenerate_spectrum,
        truncated: d.truncated,
        candidates_examined: d.candidates_examined,
        count: d.lumpings.len(),
        lumpings: d.lumpings.iter().map(|c| lumping_report(c, true)).collect(),
    }
}
