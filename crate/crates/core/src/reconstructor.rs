//! Recovery side: estimate real-database supports from mixed-database
//! supports, undo the item shift, and mine the mixed database for itemsets
//! whose estimated real support clears the user threshold.
//!
//! A fake row of length `Y` (uniform over `1..=2l-1`) holding `Y` distinct
//! items drawn uniformly from `n` contains a fixed `k`-itemset with
//! probability `C(Y,k)/C(n,k)`. Averaging over `Y` gives
//!
//! ```text
//! t(k) = (1 / (C(n,k) (2l-1))) * sum_{Y=k}^{2l-1} C(Y,k)
//! ```
//!
//! and the real support follows from the mixed support `S*` as
//! `S = S*(1+w) - w t(k)`.
//!
//! Mining the mixed database at the raw user threshold is only correct when
//! `t(k)` happens to make the two coincide (it does for `k = 1` in the small
//! grocery example). In general each level `k` is mined at the inverted
//! threshold `(s_min + w t(k)) / (1+w)`, which shrinks with `k`.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::catalog::{ItemCatalog, ItemId, TransactionDb};
use crate::error::{Error, Result};
use crate::keyfile::KeyFile;
use crate::miner::{self, itemset_order, Itemset, Thresholds};
use crate::randomizer::{self, LengthModel};
use crate::ratio::{self, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReconstructionParams {
    pub w: Rational,
    pub l: usize,
    pub n: usize,
    pub key_i: u64,
}

impl ReconstructionParams {
    pub fn new(w: Rational, l: usize, n: usize, key_i: u64) -> Result<Self> {
        if w <= Rational::zero() {
            return Err(Error::InvalidParams("w must be positive".into()));
        }
        check_fake_shape(n, l)?;
        Ok(ReconstructionParams { w, l, n, key_i })
    }

    /// Only the uniform length model has a closed-form fake expectation.
    pub fn from_key_file(key: &KeyFile) -> Result<Self> {
        if key.params.length_model != LengthModel::Uniform {
            return Err(Error::UnsupportedModel);
        }
        Self::new(key.params.w.clone(), key.params.l, key.n, key.params.key_i)
    }
}

fn check_fake_shape(n: usize, l: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyCatalog);
    }
    if l == 0 {
        return Err(Error::InvalidParams("l must be at least 1".into()));
    }
    if 2 * l - 1 > n {
        return Err(Error::InvalidParams(format!(
            "2l-1 = {} exceeds the {n} available items",
            2 * l - 1
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReconstructedSupport {
    /// Estimate before clamping; may leave [0, 1] under sampling noise.
    pub raw: Rational,
    pub clamped: Rational,
    pub was_clamped: bool,
}

impl ReconstructedSupport {
    fn from_raw(raw: Rational) -> Self {
        let (zero, one) = (Rational::zero(), Rational::one());
        let clamped = if raw < zero {
            zero
        } else if raw > one {
            one
        } else {
            raw.clone()
        };
        let was_clamped = clamped != raw;
        ReconstructedSupport {
            raw,
            clamped,
            was_clamped,
        }
    }
}

/// Exact `C(n, k)`; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for j in 0..k {
        acc *= n - j;
        acc /= j + 1;
    }
    acc
}

/// Probability that one uniform-model fake row contains a fixed `k`-itemset.
pub fn fake_support_expectation(n: usize, k: usize, l: usize) -> Result<Rational> {
    check_fake_shape(n, l)?;
    if k == 0 || k > n {
        return Err(Error::InvalidParams(format!(
            "itemset size {k} outside 1..={n}"
        )));
    }
    let top = (2 * l - 1) as u64;
    let k = k as u64;
    let mut sum = BigUint::zero();
    for y in k..=top {
        sum += binomial(y, k);
    }
    let den = binomial(n as u64, k) * BigUint::from(top);
    Ok(ratio::from_biguint(sum, den))
}

/// `S = S*(1+w) - w t(k)`, clamped into [0, 1] with a flag.
pub fn reconstruct_support(
    s_star: &Rational,
    k: usize,
    params: &ReconstructionParams,
) -> Result<ReconstructedSupport> {
    if *s_star < Rational::zero() || *s_star > Rational::one() {
        return Err(Error::InvalidParams(format!(
            "mixed support {} outside [0, 1]",
            ratio::format_exact(s_star)
        )));
    }
    let t = fake_support_expectation(params.n, k, params.l)?;
    let raw = s_star * (Rational::one() + &params.w) - &params.w * t;
    Ok(ReconstructedSupport::from_raw(raw))
}

/// Mixed-database threshold at level `k` whose reconstruction equals `s_min`.
pub fn invert_threshold(
    s_min: &Rational,
    k: usize,
    params: &ReconstructionParams,
) -> Result<Rational> {
    if *s_min <= Rational::zero() || *s_min > Rational::one() {
        return Err(Error::InvalidThreshold(format!(
            "minimum support must lie in (0, 1], got {}",
            ratio::format_exact(s_min)
        )));
    }
    let t = fake_support_expectation(params.n, k, params.l)?;
    Ok((s_min + &params.w * t) / (Rational::one() + &params.w))
}

/// Inverse of [`randomizer::shift_item`]: `((r - i - 1) mod n) + 1`.
pub fn deshift_item(r: ItemId, key_i: u64, n: usize) -> Result<ItemId> {
    if n == 0 || r.index() >= n {
        return Err(Error::ItemOutOfRange {
            id: r.get() as i64,
            n,
        });
    }
    let n = n as u64;
    let back = (r.index() as u64 + n - key_i % n) % n;
    ItemId::new(back as u32 + 1)
}

/// An itemset in original ids with its mixed-space evidence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveredItemset {
    pub itemset: Itemset,
    pub mixed_itemset: Itemset,
    pub mixed_count: u64,
    pub mixed_total: u64,
    pub support: ReconstructedSupport,
}

impl RecoveredItemset {
    pub fn mixed_support(&self) -> Rational {
        ratio::ratio(self.mixed_count, self.mixed_total)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Recovery {
    pub itemsets: Vec<RecoveredItemset>,
    pub warnings: Vec<String>,
}

/// `true` when some real count `N >= 1` gives `N + round(wN) = total`.
pub fn mixed_count_consistent(total: usize, w: &Rational) -> bool {
    let guess = ratio::to_f64(&(ratio::integer(total as u64) / (Rational::one() + w)));
    let centre = guess.round() as i64;
    (centre - 2..=centre + 2).filter(|&n| n >= 1).any(|n| {
        let fakes = ratio::round_half_up(&(w * ratio::integer(n as u64)));
        fakes.to_i64().map(|f| n + f) == Some(total as i64)
    })
}

/// Rebinds a mixed db to the `1..=n` catalog recorded at distortion time.
fn bind_to_catalog(mixed: &TransactionDb, n: usize) -> Result<TransactionDb> {
    if mixed.item_count() == n {
        return Ok(mixed.clone());
    }
    if mixed.item_count() > n {
        return Err(Error::CatalogMismatch(format!(
            "mixed database uses {} items but the key records n = {n}",
            mixed.item_count()
        )));
    }
    TransactionDb::new(ItemCatalog::numeric(n)?, mixed.transactions().to_vec())
}

/// Estimates the real support of `original` (in original ids) from `mixed`.
pub fn reconstruct_itemset(
    mixed: &TransactionDb,
    original: &Itemset,
    params: &ReconstructionParams,
) -> Result<RecoveredItemset> {
    let mixed_itemset =
        original.map_items(|a| randomizer::shift_item(a, params.key_i, params.n))?;
    let mixed_count = miner::support_count(mixed, &mixed_itemset);
    let mixed_total = mixed.len() as u64;
    let support = reconstruct_support(
        &ratio::ratio(mixed_count, mixed_total),
        original.len(),
        params,
    )?;
    Ok(RecoveredItemset {
        itemset: original.clone(),
        mixed_itemset,
        mixed_count,
        mixed_total,
        support,
    })
}

/// Mines `mixed` at per-level inverted thresholds, de-shifts the results and
/// keeps those whose clamped reconstructed support reaches `s_min`.
pub fn recover_frequent_itemsets(
    mixed: &TransactionDb,
    params: &ReconstructionParams,
    s_min: &Rational,
) -> Result<Recovery> {
    let mixed = bind_to_catalog(mixed, params.n)?;
    let mut warnings = Vec::new();
    if !mixed_count_consistent(mixed.len(), &params.w) {
        warnings.push(format!(
            "{} mixed transactions cannot arise from w = {}; key file may not match this database",
            mixed.len(),
            ratio::format_exact(&params.w)
        ));
    }

    let floor = s_min / (Rational::one() + &params.w);
    let mut per_level = BTreeMap::new();
    for k in 1..=mixed.max_transaction_len().min(params.n) {
        per_level.insert(k, invert_threshold(s_min, k, params)?);
    }
    let thresholds = Thresholds::per_level(floor, per_level)?;

    let total = mixed.len() as u64;
    let mut itemsets = Vec::new();
    for found in miner::frequent_itemsets_with(&mixed, &thresholds) {
        let support = reconstruct_support(&found.support(), found.itemset.len(), params)?;
        if support.clamped < *s_min {
            continue;
        }
        let itemset = found
            .itemset
            .map_items(|r| deshift_item(r, params.key_i, params.n))?;
        itemsets.push(RecoveredItemset {
            itemset,
            mixed_itemset: found.itemset,
            mixed_count: found.count,
            mixed_total: total,
            support,
        });
    }
    itemsets.sort_by(|a, b| itemset_order(&a.itemset, &b.itemset));
    Ok(Recovery { itemsets, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::load_basket_file;
    use crate::ratio::ratio;

    const GROCERY_MIXED: &str = "5 4\n2\n5 3\n1\n4 3\n2 4\n1 3\n5\n2 5\n4 1\n3\n5 1\n2\n3 1\n5 2\n2 5 4\n4 2\n2\n3 4\n5 3\n";

    fn grocery() -> ReconstructionParams {
        ReconstructionParams::new(ratio(3, 2), 2, 5, 4).unwrap()
    }

    fn id(v: u32) -> ItemId {
        ItemId::new(v).unwrap()
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigUint::from(10u32));
        assert_eq!(binomial(5, 0), BigUint::one());
        assert_eq!(binomial(3, 5), BigUint::zero());
        assert_eq!(binomial(52, 5), BigUint::from(2_598_960u32));
        // large arguments stay exact
        let big = binomial(10_000, 5_000);
        assert_eq!(big.clone() * 10_001u32, binomial(10_001, 5_000) * 5_001u32);
        assert!(big.bits() > 9_000);
    }

    #[test]
    fn fake_expectation_examples() {
        assert_eq!(fake_support_expectation(5, 1, 2).unwrap(), ratio(2, 5));
        assert_eq!(fake_support_expectation(5, 2, 2).unwrap(), ratio(2, 15));
        // k = 2l-1 collapses the sum to one term
        assert_eq!(fake_support_expectation(5, 3, 2).unwrap(), ratio(1, 30));
        assert_eq!(fake_support_expectation(5, 4, 2).unwrap(), Rational::zero());
        assert!(fake_support_expectation(5, 6, 2).is_err());
        assert!(fake_support_expectation(5, 0, 2).is_err());
        assert!(fake_support_expectation(4, 1, 3).is_err());
    }

    #[test]
    fn grocery_reconstruction() {
        let r = reconstruct_support(&ratio(2, 5), 1, &grocery()).unwrap();
        assert_eq!(r.raw, ratio(2, 5));
        assert!(!r.was_clamped);

        let r = reconstruct_support(&ratio(1, 5), 2, &grocery()).unwrap();
        assert_eq!(r.raw, ratio(3, 10));
    }

    #[test]
    fn zero_mixed_support_clamps() {
        let r = reconstruct_support(&Rational::zero(), 1, &grocery()).unwrap();
        assert_eq!(r.raw, -ratio(3, 5));
        assert_eq!(r.clamped, Rational::zero());
        assert!(r.was_clamped);

        let r = reconstruct_support(&Rational::one(), 4, &grocery()).unwrap();
        assert_eq!(r.raw, ratio(5, 2));
        assert_eq!(r.clamped, Rational::one());
        assert!(r.was_clamped);

        assert!(reconstruct_support(&ratio(3, 2), 1, &grocery()).is_err());
    }

    #[test]
    fn threshold_inversion() {
        let p = grocery();
        assert_eq!(invert_threshold(&ratio(2, 5), 1, &p).unwrap(), ratio(2, 5));
        // empty sum for k > 2l-1
        assert_eq!(invert_threshold(&ratio(2, 5), 4, &p).unwrap(), ratio(4, 25));
        let mut last = Rational::one();
        for k in 1..=5 {
            let t = invert_threshold(&ratio(2, 5), k, &p).unwrap();
            assert!(t <= last);
            last = t;
        }
        assert!(invert_threshold(&Rational::zero(), 1, &p).is_err());
    }

    #[test]
    fn deshift_examples() {
        assert_eq!(deshift_item(id(5), 4, 5).unwrap(), id(1));
        assert_eq!(deshift_item(id(2), 4, 5).unwrap(), id(3));
        assert_eq!(deshift_item(id(3), 0, 5).unwrap(), id(3));
        assert!(deshift_item(id(6), 4, 5).is_err());
    }

    #[test]
    fn recovers_grocery_items() {
        let mixed = load_basket_file(GROCERY_MIXED.as_bytes(), None).unwrap().db;
        let rec = recover_frequent_itemsets(&mixed, &grocery(), &ratio(2, 5)).unwrap();
        assert!(rec.warnings.is_empty());
        let got: Vec<_> = rec
            .itemsets
            .iter()
            .map(|r| (r.itemset.to_string(), r.support.clamped.clone()))
            .collect();
        assert_eq!(
            got,
            vec![
                ("1".to_string(), ratio(2, 5)),
                ("3".to_string(), ratio(2, 5))
            ]
        );
        assert_eq!(rec.itemsets[0].mixed_itemset.to_string(), "5");
        assert_eq!(rec.itemsets[1].mixed_itemset.to_string(), "2");
    }

    #[test]
    fn mixed_count_check() {
        assert!(mixed_count_consistent(20, &ratio(3, 2)));
        assert!(!mixed_count_consistent(21, &ratio(3, 2)));
        assert!(mixed_count_consistent(24372, &ratio(2, 1)));
        assert!(!mixed_count_consistent(24373, &ratio(2, 1)));
        let mixed = load_basket_file("1\n2\n3\n4\n5\n6\n7\n".as_bytes(), None)
            .unwrap()
            .db;
        let p = ReconstructionParams::new(ratio(2, 1), 2, 7, 0).unwrap();
        let rec = recover_frequent_itemsets(&mixed, &p, &ratio(1, 2)).unwrap();
        assert_eq!(rec.warnings.len(), 1);
    }

    #[test]
    fn key_mismatch_on_catalog_size() {
        let mixed = load_basket_file("1 7\n".as_bytes(), None).unwrap().db;
        assert!(matches!(
            recover_frequent_itemsets(&mixed, &grocery(), &ratio(1, 2)),
            Err(Error::CatalogMismatch(_))
        ));
    }
}
