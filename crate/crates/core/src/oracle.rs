//! First-principles validators for mining and reconstruction.
//!
//! Nothing here reuses the miner's candidate generation or the closed-form
//! fake expectation: itemsets are enumerated exhaustively, fake-containment
//! probabilities are counted subset by subset, and Monte-Carlo runs keep the
//! real/fake mask so counting identities can be checked exactly.

use std::fmt;

use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::catalog::{ItemId, TransactionDb};
use crate::error::{Error, Result};
use crate::miner::{self, itemset_order, FrequentItemset, Itemset};
use crate::randomizer::{self, RandomizationParams};
use crate::ratio::{self, Rational};
use crate::reconstructor::{self, ReconstructionParams};

pub const BRUTE_FORCE_MAX_ITEMS: usize = 20;
pub const ENUM_MAX_N: usize = 12;
pub const ENUM_MAX_L: usize = 4;
pub const MIN_RUNS: usize = 30;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleCheck {
    pub name: String,
    pub expected: Rational,
    pub observed: Rational,
    pub tolerance: Rational,
    pub passed: bool,
}

impl OracleCheck {
    pub fn new(
        name: impl Into<String>,
        expected: Rational,
        observed: Rational,
        tolerance: Rational,
    ) -> Self {
        let passed = (&expected - &observed).abs() <= tolerance;
        OracleCheck {
            name: name.into(),
            expected,
            observed,
            tolerance,
            passed,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OracleReport {
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn push(&mut self, check: OracleCheck) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: OracleReport) {
        self.checks.extend(other.checks);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &OracleCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<[String; 5]> = self
            .checks
            .iter()
            .map(|c| {
                [
                    c.name.clone(),
                    ratio::format_decimal(&c.expected, 10),
                    ratio::format_decimal(&c.observed, 10),
                    ratio::format_decimal(&c.tolerance, 10),
                    if c.passed { "PASS" } else { "FAIL" }.to_string(),
                ]
            })
            .collect();
        let header = ["check", "expected", "observed", "tolerance", "result"];
        let mut widths = header.map(str::len);
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |f: &mut fmt::Formatter<'_>, cells: [&str; 5]| {
            writeln!(
                f,
                "{:<w0$}  {:>w1$}  {:>w2$}  {:>w3$}  {}",
                cells[0],
                cells[1],
                cells[2],
                cells[3],
                cells[4],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2],
                w3 = widths[3],
            )
        };
        line(f, header)?;
        for row in &rows {
            line(f, [&row[0], &row[1], &row[2], &row[3], &row[4]])?;
        }
        let failed = self.failures().count();
        writeln!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// Every itemset over the items present in `db` whose support meets
/// `s_min`, found by exhaustive enumeration.
pub fn brute_force_frequent(db: &TransactionDb, s_min: &Rational) -> Result<Vec<FrequentItemset>> {
    let mut present: Vec<ItemId> = db
        .transactions()
        .iter()
        .flat_map(|t| t.items().iter().copied())
        .collect();
    present.sort_unstable();
    present.dedup();
    let m = present.len();
    if m > BRUTE_FORCE_MAX_ITEMS {
        return Err(Error::TooLarge(format!(
            "{m} distinct items, enumeration limited to {BRUTE_FORCE_MAX_ITEMS}"
        )));
    }
    if *s_min <= Rational::zero() || *s_min > ratio::integer(1) {
        return Err(Error::InvalidThreshold(
            "minimum support must lie in (0, 1]".into(),
        ));
    }
    let masks: Vec<u32> = db
        .transactions()
        .iter()
        .map(|t| {
            t.items()
                .iter()
                .map(|id| 1u32 << present.binary_search(id).expect("present"))
                .fold(0, |acc, bit| acc | bit)
        })
        .collect();
    let total = db.len() as u64;
    let num = s_min.numer().to_u128().expect("s_min <= 1");
    let den = s_min.denom().to_u128().expect("s_min <= 1");

    let mut out = Vec::new();
    for subset in 1u32..(1u32 << m) {
        let count = masks.iter().filter(|&&t| t & subset == subset).count() as u64;
        if count as u128 * den >= num * total as u128 {
            let items = (0..m)
                .filter(|b| subset & (1 << b) != 0)
                .map(|b| present[b])
                .collect();
            out.push(FrequentItemset {
                itemset: Itemset::new(items)?,
                count,
                total,
            });
        }
    }
    out.sort_by(|a, b| itemset_order(&a.itemset, &b.itemset));
    Ok(out)
}

/// Probability that a uniform-model fake row contains the itemset
/// `{1..k}`, computed by listing every subset of every admissible length.
pub fn exact_fake_expectation_enum(n: usize, k: usize, l: usize) -> Result<Rational> {
    if n > ENUM_MAX_N || l > ENUM_MAX_L {
        return Err(Error::TooLarge(format!(
            "enumeration limited to n <= {ENUM_MAX_N}, l <= {ENUM_MAX_L}"
        )));
    }
    if l == 0 || n == 0 || 2 * l - 1 > n {
        return Err(Error::InvalidParams(format!(
            "no uniform fake model for n = {n}, l = {l}"
        )));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParams(format!(
            "itemset size {k} outside 1..={n}"
        )));
    }
    let target: u32 = (1 << k) - 1;
    let lengths = 2 * l - 1;
    let mut acc = Rational::zero();
    for y in 1..=lengths as u32 {
        let (mut subsets, mut hits) = (0u64, 0u64);
        for s in 0u32..(1 << n) {
            if s.count_ones() == y {
                subsets += 1;
                if s & target == target {
                    hits += 1;
                }
            }
        }
        acc += ratio::ratio(hits, subsets);
    }
    Ok(acc / ratio::integer(lengths as u64))
}

/// How far a Monte-Carlo mean may sit from its target.
#[derive(Clone, Debug, PartialEq)]
pub enum McTolerance {
    /// Multiples of the estimated standard error of the mean.
    StandardErrors(f64),
    /// Fixed bound on the support scale; fake-count checks scale it by `N`.
    Absolute(Rational),
}

fn run_seed(base: u64, run: usize) -> u64 {
    base.wrapping_add((run as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

struct RunCounts {
    mixed: u64,
    fake: u64,
    raw: Rational,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Repeats the randomize pipeline `runs` times (seed derived per run) and
/// checks, for each itemset: the masked identity `mixed - fake = real`
/// in every run, that the mean raw reconstructed support matches the real
/// support, and that the mean fake count matches `round(wN) t(k)`.
pub fn mc_reconstruction_check(
    db: &TransactionDb,
    params: &RandomizationParams,
    itemsets: &[Itemset],
    runs: usize,
    tolerance: &McTolerance,
) -> Result<OracleReport> {
    if runs < MIN_RUNS {
        return Err(Error::InvalidParams(format!(
            "need at least {MIN_RUNS} runs, got {runs}"
        )));
    }
    let n = db.item_count();
    let recon = ReconstructionParams::new(params.w.clone(), params.l, n, params.key_i)?;
    if params.length_model != randomizer::LengthModel::Uniform {
        return Err(Error::UnsupportedModel);
    }
    let shifted: Vec<Itemset> = itemsets
        .iter()
        .map(|a| a.map_items(|id| randomizer::shift_item(id, params.key_i, n)))
        .collect::<Result<_>>()?;

    let per_run: Vec<Vec<RunCounts>> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let p = RandomizationParams {
                seed: run_seed(params.seed, run),
                ..params.clone()
            };
            let (mixed, mask) = randomizer::randomize_pipeline(db, &p)?;
            let total = mixed.len() as u64;
            shifted
                .iter()
                .map(|a| {
                    let (mut count, mut fake) = (0u64, 0u64);
                    for (row, t) in mixed.transactions().iter().enumerate() {
                        if a.is_contained_in(t) {
                            count += 1;
                            if !mask.is_real(row) {
                                fake += 1;
                            }
                        }
                    }
                    let s_star = ratio::ratio(count, total);
                    let raw = reconstructor::reconstruct_support(&s_star, a.len(), &recon)?.raw;
                    Ok(RunCounts {
                        mixed: count,
                        fake,
                        raw,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let real_n = db.len() as u64;
    let fakes = params.fake_count(db.len());
    let mut report = OracleReport::default();
    for (i, itemset) in itemsets.iter().enumerate() {
        let true_count = db
            .transactions()
            .iter()
            .filter(|t| itemset.is_contained_in(t))
            .count() as u64;
        let runs_data: Vec<&RunCounts> = per_run.iter().map(|r| &r[i]).collect();

        let broken = runs_data
            .iter()
            .filter(|c| c.mixed - c.fake != true_count)
            .count() as u64;
        report.push(OracleCheck::new(
            format!("masked identity {{{itemset}}}"),
            Rational::zero(),
            ratio::integer(broken),
            Rational::zero(),
        ));

        let raw_sum = runs_data
            .iter()
            .fold(Rational::zero(), |acc, c| acc + &c.raw);
        let raw_mean = raw_sum / ratio::integer(runs as u64);
        let raw_f: Vec<f64> = runs_data.iter().map(|c| ratio::to_f64(&c.raw)).collect();
        let fake_f: Vec<f64> = runs_data.iter().map(|c| c.fake as f64).collect();
        let (support_tol, fake_tol) = match tolerance {
            McTolerance::StandardErrors(z) => (
                ratio::from_f64(z * mean_and_se(&raw_f).1),
                ratio::from_f64(z * mean_and_se(&fake_f).1),
            ),
            McTolerance::Absolute(tol) => (tol.clone(), tol * ratio::integer(real_n)),
        };
        report.push(OracleCheck::new(
            format!("mean reconstructed support {{{itemset}}}"),
            ratio::ratio(true_count, real_n),
            raw_mean,
            support_tol,
        ));

        let t = reconstructor::fake_support_expectation(n, itemset.len(), params.l)?;
        let fake_mean = ratio::ratio(runs_data.iter().map(|c| c.fake).sum(), runs as u64);
        report.push(OracleCheck::new(
            format!("mean fake count {{{itemset}}}"),
            ratio::integer(fakes) * t,
            fake_mean,
            fake_tol,
        ));
    }
    Ok(report)
}

/// Brute force against Apriori on one database.
pub fn mining_check(db: &TransactionDb, s_min: &Rational) -> Result<OracleCheck> {
    let apriori = miner::frequent_itemsets(db, s_min)?;
    let brute = brute_force_frequent(db, s_min)?;
    let mismatches = brute.iter().filter(|b| !apriori.contains(b)).count()
        + apriori.iter().filter(|a| !brute.contains(a)).count();
    Ok(OracleCheck::new(
        format!(
            "apriori = brute force at s_min {}",
            ratio::format_exact(s_min)
        ),
        Rational::zero(),
        ratio::integer(mismatches as u64),
        Rational::zero(),
    ))
}

/// Closed-form fake expectation against enumeration for every `k`.
pub fn fake_expectation_checks(n: usize, l: usize) -> Result<OracleReport> {
    let mut report = OracleReport::default();
    for k in 1..=n {
        report.push(OracleCheck::new(
            format!("fake expectation n={n} k={k} l={l}"),
            exact_fake_expectation_enum(n, k, l)?,
            reconstructor::fake_support_expectation(n, k, l)?,
            Rational::zero(),
        ));
    }
    Ok(report)
}
