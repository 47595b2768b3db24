//! Distortion side of the pipeline: fake transactions are generated and
//! interleaved with the real ones, then every item of every row is passed
//! through a keyed cyclic shift. Fakes always go in before the shift, so
//! real and fake rows are distorted identically.

use std::io::BufRead;

use num_traits::{ToPrimitive, Zero};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::catalog::{self, ItemCatalog, ItemId, Transaction, TransactionDb};
use crate::error::{Error, Result};
use crate::ratio::{self, Rational};

/// Distribution of fake-transaction lengths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LengthModel {
    /// Uniform over `1..=2l-1`.
    Uniform,
    /// Normal with the given mean and variance, rounded and clamped to `1..=n`.
    Normal { mean: Rational, variance: Rational },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomizationParams {
    /// Fake-to-real ratio.
    pub w: Rational,
    /// Mean fake length.
    pub l: usize,
    /// Shift key, reduced mod `n` before use.
    pub key_i: u64,
    pub seed: u64,
    pub length_model: LengthModel,
}

impl RandomizationParams {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.w <= Rational::zero() {
            return Err(Error::InvalidParams(format!(
                "w must be positive, got {}",
                ratio::format_exact(&self.w)
            )));
        }
        if self.l == 0 {
            return Err(Error::InvalidParams("l must be at least 1".into()));
        }
        if n == 0 {
            return Err(Error::EmptyCatalog);
        }
        match &self.length_model {
            LengthModel::Uniform => {
                if 2 * self.l - 1 > n {
                    return Err(Error::InvalidParams(format!(
                        "fake lengths reach 2l-1 = {} but the catalog has only {n} items",
                        2 * self.l - 1
                    )));
                }
            }
            LengthModel::Normal { variance, .. } => {
                if *variance < Rational::zero() {
                    return Err(Error::InvalidParams("variance must be non-negative".into()));
                }
            }
        }
        Ok(())
    }

    /// Number of fakes injected for `real` transactions: `round(w * real)`.
    pub fn fake_count(&self, real: usize) -> u64 {
        ratio::round_half_up(&(&self.w * ratio::integer(real as u64)))
            .to_u64()
            .unwrap_or(0)
    }

    pub fn effective_key(&self, n: usize) -> u64 {
        self.key_i % n as u64
    }
}

/// One flag per mixed row; `true` marks a real transaction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixMask {
    flags: Vec<bool>,
}

impl MixMask {
    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn is_real(&self, row: usize) -> bool {
        self.flags[row]
    }

    pub fn real_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// Keeps the rows flagged real, in order.
    pub fn real_rows(&self, mixed: &TransactionDb) -> Result<TransactionDb> {
        let rows = mixed
            .transactions()
            .iter()
            .zip(&self.flags)
            .filter(|(_, &real)| real)
            .map(|(t, _)| t.clone())
            .collect();
        TransactionDb::new(mixed.catalog().clone(), rows)
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws a fake length, then that many distinct items uniformly from `1..=n`.
pub fn gen_fake_transaction<R: Rng + ?Sized>(
    params: &RandomizationParams,
    catalog: &ItemCatalog,
    rng: &mut R,
) -> Result<Transaction> {
    let n = catalog.len();
    params.validate(n)?;
    let len = match &params.length_model {
        LengthModel::Uniform => rng.random_range(1..=2 * params.l - 1),
        LengthModel::Normal { mean, variance } => {
            let sd = ratio::to_f64(variance).sqrt();
            let normal = Normal::new(ratio::to_f64(mean), sd)
                .map_err(|e| Error::InvalidParams(format!("normal length model: {e}")))?;
            let y = normal.sample(rng).round();
            y.clamp(1.0, n as f64) as usize
        }
    };
    let mut items: Vec<ItemId> = index::sample(rng, n, len)
        .into_iter()
        .map(ItemId::from_index)
        .collect();
    items.sort_unstable();
    Ok(Transaction::from_sorted_unchecked(items))
}

/// Inserts `round(w * N)` fakes among the real rows. Each fake lands in one
/// of the `N + 1` gaps (before the first row, between rows, after the last)
/// chosen uniformly; real rows keep their order.
pub fn mix_fake<R: Rng + ?Sized>(
    db: &TransactionDb,
    params: &RandomizationParams,
    rng: &mut R,
) -> Result<(TransactionDb, MixMask)> {
    params.validate(db.item_count())?;
    let real = db.len();
    let fakes = params.fake_count(real);
    if fakes == 0 {
        return Err(Error::NoFakes {
            w: ratio::format_exact(&params.w),
            real,
        });
    }
    let mut per_gap = vec![0u64; real + 1];
    for _ in 0..fakes {
        per_gap[rng.random_range(0..=real)] += 1;
    }

    let total = real + fakes as usize;
    let mut rows = Vec::with_capacity(total);
    let mut flags = Vec::with_capacity(total);
    for (gap, &count) in per_gap.iter().enumerate() {
        for _ in 0..count {
            rows.push(gen_fake_transaction(params, db.catalog(), rng)?);
            flags.push(false);
        }
        if let Some(t) = db.transactions().get(gap) {
            rows.push(t.clone());
            flags.push(true);
        }
    }
    Ok((
        TransactionDb::new_unchecked(db.catalog().clone(), rows),
        MixMask { flags },
    ))
}

/// A fixed interleaving of real and fake rows, used to replay a known mixed
/// database instead of sampling one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixTemplate {
    slots: Vec<Option<Transaction>>,
}

impl MixTemplate {
    /// `*` lines are real-row slots; other lines are fake rows in basket
    /// syntax.
    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let slots = catalog::parse_template_lines(reader)?
            .into_iter()
            .map(|slot| slot.map(Transaction::new).transpose())
            .collect::<Result<Vec<_>>>()?;
        Ok(MixTemplate { slots })
    }

    pub fn real_slots(&self) -> usize {
        self.slots.iter().filter(|s| s.is_none()).count()
    }

    pub fn fake_rows(&self) -> usize {
        self.slots.len() - self.real_slots()
    }
}

/// Interleaves `db` according to `template`.
pub fn mix_with_template(
    db: &TransactionDb,
    template: &MixTemplate,
) -> Result<(TransactionDb, MixMask)> {
    if template.real_slots() != db.len() {
        return Err(Error::InvalidParams(format!(
            "template has {} real slots for {} real transactions",
            template.real_slots(),
            db.len()
        )));
    }
    let mut reals = db.transactions().iter();
    let mut rows = Vec::with_capacity(template.slots.len());
    let mut flags = Vec::with_capacity(template.slots.len());
    for slot in &template.slots {
        match slot {
            Some(fake) => {
                rows.push(fake.clone());
                flags.push(false);
            }
            None => {
                rows.push(reals.next().expect("slot count checked").clone());
                flags.push(true);
            }
        }
    }
    let mixed = TransactionDb::new(db.catalog().clone(), rows)?;
    Ok((mixed, MixMask { flags }))
}

/// Cyclic shift of one item: `((a + i - 1) mod n) + 1`.
pub fn shift_item(a: ItemId, key_i: u64, n: usize) -> Result<ItemId> {
    if n == 0 || a.index() >= n {
        return Err(Error::ItemOutOfRange {
            id: a.get() as i64,
            n,
        });
    }
    let n = n as u64;
    let shifted = (a.index() as u64 + key_i % n) % n;
    Ok(ItemId::from_index(shifted as usize))
}

/// Shifts every item of every row. Row order and lengths are unchanged.
pub fn shift_db(db: &TransactionDb, key_i: u64) -> TransactionDb {
    let n = db.item_count();
    let rows = db
        .transactions()
        .iter()
        .map(|t| {
            let mut items: Vec<ItemId> = t
                .items()
                .iter()
                .map(|&a| shift_item(a, key_i, n).expect("db items are in range"))
                .collect();
            items.sort_unstable();
            Transaction::from_sorted_unchecked(items)
        })
        .collect();
    TransactionDb::new_unchecked(db.catalog().clone(), rows)
}

/// Fake injection followed by the keyed shift, driven by `params.seed`.
pub fn randomize_pipeline(
    db: &TransactionDb,
    params: &RandomizationParams,
) -> Result<(TransactionDb, MixMask)> {
    let mut rng = seeded_rng(params.seed);
    let (mixed, mask) = mix_fake(db, params, &mut rng)?;
    Ok((shift_db(&mixed, params.key_i), mask))
}

/// Same as [`randomize_pipeline`] with the fakes and their placement taken
/// from a template.
pub fn randomize_with_template(
    db: &TransactionDb,
    template: &MixTemplate,
    key_i: u64,
) -> Result<(TransactionDb, MixMask)> {
    let (mixed, mask) = mix_with_template(db, template)?;
    Ok((shift_db(&mixed, key_i), mask))
}

/// Normal length model matching the mean and variance of `db`'s lengths.
pub fn normal_model_for(db: &TransactionDb) -> LengthModel {
    let (mean, _) = catalog::average_real_length(db);
    LengthModel::Normal {
        mean,
        variance: catalog::length_variance(db),
    }
}
