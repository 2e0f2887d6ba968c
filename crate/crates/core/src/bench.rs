//! Scalable test families with known Hessian sparsity patterns, and a
//! timing harness around `edge_pushing`.

use std::fmt;
use std::io;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::builder::{TapeBuilder, Var};
use crate::edge_pushing::{edge_pushing_hessian, EdgePushingOptions};
use crate::error::{HessError, Result};
use crate::tape::Tape;

/// Multiplier and increment of the 64-bit LCG drawing the irregular pairs.
pub const LCG_MULTIPLIER: u64 = 6364136223846793005;
pub const LCG_INCREMENT: u64 = 1442695040888963407;
/// Published seed of the `irregular` family.
pub const IRREGULAR_SEED: u64 = 0x2545_f491_4f6c_dd1d;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `Σ cos(x_i x_{i+1})`: tridiagonal.
    Band1,
    /// `Σ (x_i x_{i+5})² + Σ sin(x_i + … + x_{i+4})`: bandwidth 5.
    Band5,
    /// `Σ_{i<n-1} (x_i² + x_{n-1} x_i) + exp(x_{n-1})`: diagonal plus last row.
    Arrow,
    /// `Σ sin(x_0 x_i) + Σ x_i² x_{n-1} + Σ x_i⁴`: diagonal plus first and
    /// last rows.
    FrameDiag,
    /// `Σ_blocks (Π_{j∈block} x_j)²` over consecutive blocks of 5.
    BlockDiag5,
    /// `Σ x_i x_j sin(x_i + x_j)` over `2n` LCG-drawn pairs.
    Irregular,
    /// `Σ 3 x_i`: zero Hessian.
    Linear,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Band1,
        Family::Band5,
        Family::Arrow,
        Family::FrameDiag,
        Family::BlockDiag5,
        Family::Irregular,
        Family::Linear,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Band1 => "band1",
            Family::Band5 => "band5",
            Family::Arrow => "arrow",
            Family::FrameDiag => "frame_diag",
            Family::BlockDiag5 => "block_diag5",
            Family::Irregular => "irregular",
            Family::Linear => "linear",
        }
    }

    /// Smallest dimension for which the family's pattern formula holds.
    pub fn min_n(&self) -> usize {
        match self {
            Family::Band5 => 6,
            Family::FrameDiag => 3,
            Family::BlockDiag5 | Family::Linear => 1,
            Family::Band1 | Family::Arrow | Family::Irregular => 2,
        }
    }

    /// Records the family's tape at dimension `n`.
    pub fn build(&self, n: usize) -> Result<Tape> {
        if n < self.min_n() {
            return Err(HessError::DimensionTooSmall {
                family: self.name().to_string(),
                min: self.min_n(),
                n,
            });
        }
        let b = TapeBuilder::new();
        let x = b.inputs(n);
        let terms: Vec<Var<'_>> = match self {
            Family::Band1 => (0..n - 1).map(|i| (x[i] * x[i + 1]).cos()).collect(),
            Family::Band5 => {
                let mut t: Vec<Var<'_>> = (0..n - 5).map(|i| (x[i] * x[i + 5]).square()).collect();
                t.extend((0..=n - 5).map(|i| b.sum(x[i..i + 5].iter().copied()).sin()));
                t
            }
            Family::Arrow => {
                let last = x[n - 1];
                let mut t: Vec<Var<'_>> = (0..n - 1).map(|i| x[i].square() + last * x[i]).collect();
                t.push(last.exp());
                t
            }
            Family::FrameDiag => {
                let (first, last) = (x[0], x[n - 1]);
                let mut t: Vec<Var<'_>> = (1..n).map(|i| (first * x[i]).sin()).collect();
                t.extend((0..n - 1).map(|i| x[i].square() * last));
                t.extend(x.iter().map(|&xi| xi.powf(4.0)));
                t
            }
            Family::BlockDiag5 => x
                .chunks(5)
                .map(|block| {
                    block
                        .iter()
                        .copied()
                        .reduce(|acc, v| acc * v)
                        .expect("chunks are non-empty")
                        .square()
                })
                .collect(),
            Family::Irregular => irregular_pairs(n, IRREGULAR_SEED)
                .into_iter()
                .map(|(i, j)| x[i] * x[j] * (x[i] + x[j]).sin())
                .collect(),
            Family::Linear => x.iter().map(|&xi| 3.0 * xi).collect(),
        };
        let f = b.sum(terms);
        b.finish(f)
    }

    /// Lower-triangle nonzero count of the structural Hessian pattern.
    pub fn expected_nnz(&self, n: usize) -> usize {
        match self {
            Family::Band1 => 2 * n - 1,
            Family::Band5 => 6 * n - 15,
            Family::Arrow => 2 * n - 1,
            Family::FrameDiag => 3 * n - 3,
            Family::BlockDiag5 => {
                let r = n % 5;
                15 * (n / 5) + r * (r + 1) / 2
            }
            Family::Irregular => {
                let pairs = irregular_pairs(n, IRREGULAR_SEED);
                let mut touched: Vec<usize> = pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
                touched.sort_unstable();
                touched.dedup();
                let mut distinct: Vec<(usize, usize)> =
                    pairs.iter().map(|&(i, j)| (i.max(j), i.min(j))).collect();
                distinct.sort_unstable();
                distinct.dedup();
                touched.len() + distinct.len()
            }
            Family::Linear => 0,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = HessError;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|fam| fam.name() == s)
            .ok_or_else(|| HessError::UnknownFamily(s.to_string()))
    }
}

/// Records the tape of the named family.
pub fn make_family(name: &str, n: usize) -> Result<Tape> {
    name.parse::<Family>()?.build(n)
}

/// `2n` index pairs `(i, j)`, `i != j`, drawn from the high bits of a 64-bit
/// LCG. A draw with `j == i` is redrawn.
pub fn irregular_pairs(n: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut state = seed;
    let mut draw = || {
        state = state
            .wrapping_mul(LCG_MULTIPLIER)
            .wrapping_add(LCG_INCREMENT);
        ((state >> 33) % n as u64) as usize
    };
    (0..2 * n)
        .map(|_| {
            let i = draw();
            let mut j = draw();
            while j == i {
                j = draw();
            }
            (i, j)
        })
        .collect()
}

/// Deterministic point with coordinates uniform in `[0.5, 1.5]`.
pub fn seeded_point(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0.5..=1.5)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Only the `edge_pushing` sweep over an already swept tape.
    HessianOnly,
    /// Recording, forward sweep and `edge_pushing`.
    Total,
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::HessianOnly => "hessian-only",
            Phase::Total => "total",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "hessian-only" => Ok(Phase::HessianOnly),
            "total" => Ok(Phase::Total),
            other => Err(format!(
                "unknown phase `{other}` (expected hessian-only or total)"
            )),
        }
    }
}

/// One CSV row of a benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub family: String,
    pub n: usize,
    pub ell: usize,
    pub phase: String,
    pub median_ns: u128,
    pub nnz: usize,
    pub peak_live_edges: usize,
}

pub const DEFAULT_REPEATS: usize = 5;

fn median(mut samples: Vec<u128>) -> u128 {
    samples.sort_unstable();
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        (samples[mid - 1] + samples[mid]) / 2
    }
}

/// Median wall time of `work` over `repeats` runs after one warm-up run.
pub fn median_time_ns<T>(repeats: usize, mut work: impl FnMut() -> T) -> u128 {
    std::hint::black_box(work());
    let samples = (0..repeats.max(1))
        .map(|_| {
            let start = Instant::now();
            std::hint::black_box(work());
            start.elapsed().as_nanos()
        })
        .collect();
    median(samples)
}

/// Times `edge_pushing` on `family` at dimension `n`, evaluated at
/// `seeded_point(n, 0)`.
pub fn run_bench(family: Family, n: usize, repeats: usize, phase: Phase) -> Result<BenchRecord> {
    let x = seeded_point(n, 0);
    let tape = family.build(n)?.swept_at(&x)?;
    let opts = EdgePushingOptions::default();
    let out = edge_pushing_hessian(&tape, &opts)?;
    let median_ns = match phase {
        Phase::HessianOnly => median_time_ns(repeats, || edge_pushing_hessian(&tape, &opts)),
        Phase::Total => median_time_ns(repeats, || -> Result<_> {
            let mut t = family.build(n)?;
            t.forward_sweep(&x)?;
            edge_pushing_hessian(&t, &opts)
        }),
    };
    Ok(BenchRecord {
        family: family.name().to_string(),
        n,
        ell: tape.ell(),
        phase: phase.name().to_string(),
        median_ns,
        nnz: out.hessian.nnz(),
        peak_live_edges: out.stats.peak_live_edges,
    })
}

/// Median wall time of the forward sweep alone.
pub fn forward_sweep_time_ns(family: Family, n: usize, repeats: usize) -> Result<u128> {
    let x = seeded_point(n, 0);
    let mut tape = family.build(n)?;
    tape.forward_sweep(&x)?;
    Ok(median_time_ns(repeats, || tape.forward_sweep(&x)))
}

/// Writes records as CSV with header
/// `family,n,ell,phase,median_ns,nnz,peak_live_edges`.
pub fn write_csv<W: io::Write>(out: W, records: &[BenchRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record([
            "family",
            "n",
            "ell",
            "phase",
            "median_ns",
            "nnz",
            "peak_live_edges",
        ])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
