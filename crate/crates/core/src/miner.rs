//! Support counting, levelwise Apriori mining and association-rule
//! generation. Counts are exact integers; supports and confidences are
//! exposed as exact rationals.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::bitset::TidSet;
use crate::catalog::{ItemId, Transaction, TransactionDb};
use crate::error::{Error, Result};
use crate::ratio::{self, Rational};

/// Non-empty, strictly ascending set of item ids.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Itemset(Vec<ItemId>);

impl Itemset {
    pub fn new(mut items: Vec<ItemId>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::EmptyTransaction);
        }
        items.sort_unstable();
        if let Some(w) = items.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateItem(w[0].get()));
        }
        Ok(Itemset(items))
    }

    pub(crate) fn from_sorted_unchecked(items: Vec<ItemId>) -> Self {
        debug_assert!(!items.is_empty() && items.windows(2).all(|w| w[0] < w[1]));
        Itemset(items)
    }

    /// Parses `"1,5"` or `"1 5"` against a catalog of `n` items.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let items = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                let v: i64 = t
                    .parse()
                    .map_err(|_| Error::InvalidParams(format!("bad item id {t:?}")))?;
                if v < 1 || v as u64 > n as u64 {
                    return Err(Error::ItemOutOfRange { id: v, n });
                }
                ItemId::new(v as u32)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(items)
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_contained_in(&self, t: &Transaction) -> bool {
        t.contains_all(&self.0)
    }

    /// Maps every item and re-sorts; `f` must be injective.
    pub fn map_items(&self, mut f: impl FnMut(ItemId) -> Result<ItemId>) -> Result<Itemset> {
        let mapped = self.0.iter().map(|&id| f(id)).collect::<Result<Vec<_>>>()?;
        Itemset::new(mapped)
    }
}

impl fmt::Display for Itemset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, id) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{id}")?;
        }
        Ok(())
    }
}

/// Orders by size first, then lexicographically by ids.
pub fn itemset_order(a: &Itemset, b: &Itemset) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.items().cmp(b.items()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequentItemset {
    pub itemset: Itemset,
    /// Transactions containing the itemset.
    pub count: u64,
    /// Transactions in the database.
    pub total: u64,
}

impl FrequentItemset {
    pub fn support(&self) -> Rational {
        ratio::ratio(self.count, self.total)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssociationRule {
    pub antecedent: Itemset,
    pub consequent: Itemset,
    /// Transactions containing antecedent and consequent together.
    pub count: u64,
    pub antecedent_count: u64,
    pub total: u64,
}

impl AssociationRule {
    pub fn support(&self) -> Rational {
        ratio::ratio(self.count, self.total)
    }

    pub fn confidence(&self) -> Rational {
        ratio::ratio(self.count, self.antecedent_count)
    }
}

pub fn support_count(db: &TransactionDb, itemset: &Itemset) -> u64 {
    db.transactions()
        .par_iter()
        .filter(|t| itemset.is_contained_in(t))
        .count() as u64
}

pub fn support(db: &TransactionDb, itemset: &Itemset) -> Rational {
    ratio::ratio(support_count(db, itemset), db.len() as u64)
}

fn check_unit_interval(what: &str, value: &Rational) -> Result<()> {
    if *value <= Rational::zero() || *value > Rational::one() {
        return Err(Error::InvalidThreshold(format!(
            "{what} must lie in (0, 1], got {}",
            ratio::format_exact(value)
        )));
    }
    Ok(())
}

/// Minimum-support thresholds, optionally varying with itemset size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Thresholds {
    base: Rational,
    per_level: BTreeMap<usize, Rational>,
}

impl Thresholds {
    pub fn uniform(s_min: Rational) -> Result<Self> {
        check_unit_interval("minimum support", &s_min)?;
        Ok(Thresholds {
            base: s_min,
            per_level: BTreeMap::new(),
        })
    }

    /// `base` applies to every size missing from `per_level`.
    pub fn per_level(base: Rational, per_level: BTreeMap<usize, Rational>) -> Result<Self> {
        check_unit_interval("minimum support", &base)?;
        for (k, t) in &per_level {
            if *k == 0 {
                return Err(Error::InvalidThreshold("level 0 has no itemsets".into()));
            }
            check_unit_interval(&format!("level-{k} threshold"), t)?;
        }
        Ok(Thresholds { base, per_level })
    }

    pub fn at(&self, k: usize) -> &Rational {
        self.per_level.get(&k).unwrap_or(&self.base)
    }
}

struct Level {
    items: Vec<ItemId>,
    tids: TidSet,
    count: u64,
}

fn min_count(threshold: &Rational, total: u64) -> u64 {
    ratio::ceil(&(threshold * ratio::integer(total)))
        .to_u64()
        .unwrap_or(u64::MAX)
}

/// Apriori with a single minimum support.
pub fn frequent_itemsets(db: &TransactionDb, s_min: &Rational) -> Result<Vec<FrequentItemset>> {
    Ok(frequent_itemsets_with(
        db,
        &Thresholds::uniform(s_min.clone())?,
    ))
}

/// Levelwise Apriori under per-size thresholds.
///
/// A `k`-set is reported when its support meets the level-`k` threshold.
/// Sets are kept for extension while they meet the smallest threshold of any
/// level `>= k`, which keeps pruning sound when thresholds shrink with size.
/// Output is sorted by size, then lexicographically.
pub fn frequent_itemsets_with(db: &TransactionDb, thresholds: &Thresholds) -> Vec<FrequentItemset> {
    let total = db.len() as u64;
    let max_k = db.max_transaction_len();
    if max_k == 0 {
        return Vec::new();
    }
    // index 0 unused
    let mut report_min = vec![0u64; max_k + 2];
    for (k, slot) in report_min.iter_mut().enumerate().skip(1) {
        *slot = min_count(thresholds.at(k), total);
    }
    let mut keep_min = report_min.clone();
    for k in (1..max_k).rev() {
        keep_min[k] = keep_min[k].min(keep_min[k + 1]);
    }

    let n = db.item_count();
    let mut item_tids: Vec<TidSet> = (0..n).map(|_| TidSet::empty(db.len())).collect();
    for (pos, t) in db.transactions().iter().enumerate() {
        for id in t.items() {
            item_tids[id.index()].insert(pos);
        }
    }

    let mut out = Vec::new();
    let mut level: Vec<Level> = item_tids
        .into_iter()
        .enumerate()
        .filter_map(|(i, tids)| {
            let count = tids.count();
            (count >= keep_min[1]).then(|| Level {
                items: vec![ItemId::from_index(i)],
                tids,
                count,
            })
        })
        .collect();

    let mut k = 1;
    loop {
        for set in &level {
            if set.count >= report_min[k] {
                out.push(FrequentItemset {
                    itemset: Itemset::from_sorted_unchecked(set.items.clone()),
                    count: set.count,
                    total,
                });
            }
        }
        if k == max_k || level.len() < 2 {
            break;
        }
        level = next_level(&level, keep_min[k + 1]);
        k += 1;
        if level.is_empty() {
            break;
        }
    }
    out.sort_by(|a, b| itemset_order(&a.itemset, &b.itemset));
    out
}

/// Prefix join of the sorted level `k` into level `k + 1` candidates, with
/// subset pruning and parallel counting.
fn next_level(level: &[Level], keep: u64) -> Vec<Level> {
    let k = level[0].items.len();
    let known: HashSet<&[ItemId]> = level.iter().map(|l| l.items.as_slice()).collect();

    let mut pairs = Vec::new();
    let mut start = 0;
    while start < level.len() {
        let prefix = &level[start].items[..k - 1];
        let mut end = start + 1;
        while end < level.len() && &level[end].items[..k - 1] == prefix {
            end += 1;
        }
        for a in start..end {
            for b in a + 1..end {
                let mut cand = level[a].items.clone();
                cand.push(level[b].items[k - 1]);
                let pruned = (0..k - 1).any(|skip| {
                    let subset: Vec<ItemId> = cand
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &id)| id)
                        .collect();
                    !known.contains(subset.as_slice())
                });
                if !pruned {
                    pairs.push((a, b, cand));
                }
            }
        }
        start = end;
    }

    pairs
        .into_par_iter()
        .filter_map(|(a, b, items)| {
            let count = level[a].tids.intersect_count(&level[b].tids);
            (count >= keep).then(|| Level {
                tids: level[a].tids.intersect(&level[b].tids),
                items,
                count,
            })
        })
        .collect()
}

/// Rules `X => Z \ X` for every frequent `Z` with `|Z| >= 2` and non-empty
/// proper subset `X`, kept when confidence meets `c_min`. Sorted by support
/// then confidence (both descending), then antecedent and consequent.
pub fn association_rules(
    frequent: &[FrequentItemset],
    db: &TransactionDb,
    s_min: &Rational,
    c_min: &Rational,
) -> Result<Vec<AssociationRule>> {
    check_unit_interval("minimum support", s_min)?;
    check_unit_interval("minimum confidence", c_min)?;
    let total = db.len() as u64;
    let min_z = min_count(s_min, total);
    let counts: HashMap<&[ItemId], u64> = frequent
        .iter()
        .map(|f| (f.itemset.items(), f.count))
        .collect();
    let c_num = c_min.numer().to_u128();
    let c_den = c_min.denom().to_u128();

    let mut rules = Vec::new();
    for z in frequent
        .iter()
        .filter(|f| f.itemset.len() >= 2 && f.count >= min_z)
    {
        let items = z.itemset.items();
        let size = items.len();
        for mask in 1..(1u64 << size) - 1 {
            let (mut ante, mut cons) = (Vec::new(), Vec::new());
            for (i, &id) in items.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    ante.push(id);
                } else {
                    cons.push(id);
                }
            }
            let antecedent = Itemset::from_sorted_unchecked(ante);
            let antecedent_count = match counts.get(antecedent.items()) {
                Some(&c) => c,
                None => support_count(db, &antecedent),
            };
            let passes = match (c_num, c_den) {
                (Some(num), Some(den)) => z.count as u128 * den >= num * antecedent_count as u128,
                _ => ratio::ratio(z.count, antecedent_count) >= *c_min,
            };
            if passes {
                rules.push(AssociationRule {
                    antecedent,
                    consequent: Itemset::from_sorted_unchecked(cons),
                    count: z.count,
                    antecedent_count,
                    total,
                });
            }
        }
    }
    rules.sort_by(rule_order);
    Ok(rules)
}

fn rule_order(a: &AssociationRule, b: &AssociationRule) -> Ordering {
    b.count
        .cmp(&a.count)
        .then_with(|| {
            let lhs = b.count as u128 * a.antecedent_count as u128;
            let rhs = a.count as u128 * b.antecedent_count as u128;
            lhs.cmp(&rhs)
        })
        .then_with(|| itemset_order(&a.antecedent, &b.antecedent))
        .then_with(|| itemset_order(&a.consequent, &b.consequent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::load_basket_file;
    use crate::ratio::ratio;

    const GROCERY: &str = "1 5\n3\n3 5\n2 4\n4\n1 2\n1 3\n3 1 5\n";
    const GROCERY_MIXED: &str = "5 4\n2\n5 3\n1\n4 3\n2 4\n1 3\n5\n2 5\n4 1\n3\n5 1\n2\n3 1\n5 2\n2 5 4\n4 2\n2\n3 4\n5 3\n";

    fn db(text: &str) -> TransactionDb {
        load_basket_file(text.as_bytes(), None).unwrap().db
    }

    fn set(ids: &[u32]) -> Itemset {
        Itemset::new(ids.iter().map(|&i| ItemId::new(i).unwrap()).collect()).unwrap()
    }

    #[test]
    fn grocery_single_item_supports() {
        let db = db(GROCERY);
        assert_eq!(support(&db, &set(&[1])), ratio(1, 2));
        assert_eq!(support(&db, &set(&[2])), ratio(1, 4));
        assert_eq!(support(&db, &set(&[3])), ratio(1, 2));
        assert_eq!(support(&db, &set(&[4])), ratio(1, 4));
        assert_eq!(support(&db, &set(&[5])), ratio(3, 8));
        assert_eq!(support(&db, &set(&[1, 5])), ratio(1, 4));
    }

    #[test]
    fn grocery_mixed_single_item_supports() {
        let db = db(GROCERY_MIXED);
        let expected = [
            (1, ratio(1, 4)),
            (2, ratio(2, 5)),
            (3, ratio(7, 20)),
            (4, ratio(7, 20)),
            (5, ratio(2, 5)),
        ];
        for (id, s) in expected {
            assert_eq!(support(&db, &set(&[id])), s, "item {id}");
        }
    }

    #[test]
    fn absent_item_has_zero_support() {
        let cat = crate::catalog::ItemCatalog::numeric(6).unwrap();
        let db = load_basket_file(GROCERY.as_bytes(), Some(cat)).unwrap().db;
        assert_eq!(support(&db, &set(&[6])), Rational::zero());
    }

    #[test]
    fn mines_grocery_at_forty_percent() {
        let found = frequent_itemsets(&db(GROCERY), &ratio(2, 5)).unwrap();
        let sets: Vec<_> = found
            .iter()
            .map(|f| (f.itemset.clone(), f.support()))
            .collect();
        assert_eq!(
            sets,
            vec![(set(&[1]), ratio(1, 2)), (set(&[3]), ratio(1, 2))]
        );
    }

    #[test]
    fn mines_grocery_mixed_at_forty_percent() {
        let found = frequent_itemsets(&db(GROCERY_MIXED), &ratio(2, 5)).unwrap();
        let sets: Vec<_> = found
            .iter()
            .map(|f| (f.itemset.clone(), f.support()))
            .collect();
        assert_eq!(
            sets,
            vec![(set(&[2]), ratio(2, 5)), (set(&[5]), ratio(2, 5))]
        );
    }

    #[test]
    fn threshold_above_max_support_is_empty() {
        // max single-item support in the grocery example is 1/2
        let found = frequent_itemsets(&db(GROCERY), &ratio(501, 1000)).unwrap();
        assert!(found.is_empty());
        assert!(frequent_itemsets(&db(GROCERY), &Rational::one())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn invalid_thresholds_rejected() {
        assert!(frequent_itemsets(&db(GROCERY), &Rational::zero()).is_err());
        assert!(frequent_itemsets(&db(GROCERY), &ratio(3, 2)).is_err());
        let mut per = BTreeMap::new();
        per.insert(0, ratio(1, 2));
        assert!(Thresholds::per_level(ratio(1, 2), per).is_err());
    }

    #[test]
    fn low_threshold_finds_pairs_and_triple() {
        let found = frequent_itemsets(&db(GROCERY), &ratio(1, 8)).unwrap();
        assert!(found
            .iter()
            .any(|f| f.itemset == set(&[1, 3, 5]) && f.count == 1));
        assert!(found
            .iter()
            .any(|f| f.itemset == set(&[1, 5]) && f.count == 2));
        // sorted by size then lexicographically
        assert!(found
            .windows(2)
            .all(|w| itemset_order(&w[0].itemset, &w[1].itemset) == Ordering::Less));
    }

    #[test]
    fn per_level_thresholds_do_not_lose_supersets() {
        // {1} alone sits below the level-1 threshold, but {1,2} meets the
        // lower level-2 threshold and must still be found.
        let text = "1 2\n1 2\n3\n3\n3\n";
        let mut per = BTreeMap::new();
        per.insert(1, ratio(3, 5));
        per.insert(2, ratio(2, 5));
        let th = Thresholds::per_level(ratio(2, 5), per).unwrap();
        let found = frequent_itemsets_with(&db(text), &th);
        let sets: Vec<_> = found.iter().map(|f| f.itemset.clone()).collect();
        assert_eq!(sets, vec![set(&[3]), set(&[1, 2])]);
    }

    #[test]
    fn rules_on_grocery() {
        let db = db(GROCERY);
        let s_min = ratio(1, 5);
        let freq = frequent_itemsets(&db, &s_min).unwrap();
        let rules = association_rules(&freq, &db, &s_min, &ratio(1, 2)).unwrap();
        let one_five = rules
            .iter()
            .find(|r| r.antecedent == set(&[1]) && r.consequent == set(&[5]))
            .unwrap();
        assert_eq!(one_five.support(), ratio(1, 4));
        assert_eq!(one_five.confidence(), ratio(1, 2));
        let five_one = rules
            .iter()
            .find(|r| r.antecedent == set(&[5]) && r.consequent == set(&[1]))
            .unwrap();
        assert_eq!(five_one.confidence(), ratio(2, 3));
        for w in rules.windows(2) {
            assert_ne!(rule_order(&w[0], &w[1]), Ordering::Greater);
        }
    }

    #[test]
    fn full_confidence_rules_only() {
        let db = db("1 2\n1 2 3\n3\n2\n");
        let s_min = ratio(1, 4);
        let freq = frequent_itemsets(&db, &s_min).unwrap();
        let rules = association_rules(&freq, &db, &s_min, &Rational::one()).unwrap();
        let found: Vec<_> = rules
            .iter()
            .map(|r| (r.antecedent.to_string(), r.consequent.to_string()))
            .collect();
        assert!(found.contains(&("1".into(), "2".into())));
        for r in &rules {
            assert_eq!(r.count, r.antecedent_count);
            for t in db.transactions() {
                if r.antecedent.is_contained_in(t) {
                    assert!(r.consequent.is_contained_in(t));
                }
            }
        }
    }

    #[test]
    fn no_rules_without_frequent_pairs() {
        let db = db(GROCERY);
        let s_min = ratio(2, 5);
        let freq = frequent_itemsets(&db, &s_min).unwrap();
        assert!(association_rules(&freq, &db, &s_min, &ratio(9, 10))
            .unwrap()
            .is_empty());
        assert!(association_rules(&freq, &db, &s_min, &ratio(11, 10)).is_err());
    }

    #[test]
    fn itemset_parse() {
        assert_eq!(Itemset::parse("3,1", 5).unwrap(), set(&[1, 3]));
        assert!(Itemset::parse("6", 5).is_err());
        assert!(Itemset::parse("", 5).is_err());
        assert!(Itemset::parse("1,1", 5).is_err());
        assert_eq!(set(&[1, 5]).to_string(), "1,5");
    }
}
