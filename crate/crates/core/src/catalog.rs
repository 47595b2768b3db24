//! Item encoding, the transaction data model, and dataset ingestion.
//!
//! Items are named strings mapped onto contiguous 1-based ids. A transaction
//! is a non-empty ascending set of ids, and a [`TransactionDb`] is an ordered
//! sequence of transactions that all validate against one catalog.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::ratio::{self, Rational};

/// 1-based item identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(u32);

impl ItemId {
    pub fn new(value: u32) -> Result<Self> {
        if value == 0 {
            return Err(Error::ItemOutOfRange { id: 0, n: 0 });
        }
        Ok(ItemId(value))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Zero-based offset, for indexing dense per-item tables.
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }

    pub(crate) fn from_index(index: usize) -> Self {
        ItemId(index as u32 + 1)
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Bijection between item names and ids `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ItemCatalog {
    names: Vec<String>,
    index: HashMap<String, ItemId>,
}

impl ItemCatalog {
    /// Assigns ids in list order starting at 1. Names are trimmed first.
    pub fn build<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut catalog = ItemCatalog {
            names: Vec::new(),
            index: HashMap::new(),
        };
        for name in names {
            catalog.push(name.as_ref().trim())?;
        }
        if catalog.names.is_empty() {
            return Err(Error::EmptyCatalog);
        }
        Ok(catalog)
    }

    /// Catalog whose item names are the decimal ids themselves.
    pub fn numeric(n: usize) -> Result<Self> {
        Self::build((1..=n).map(|id| id.to_string()))
    }

    fn push(&mut self, name: &str) -> Result<ItemId> {
        if self.index.contains_key(name) {
            return Err(Error::DuplicateName(name.to_string()));
        }
        let id = ItemId::from_index(self.names.len());
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, id: ItemId) -> bool {
        id.index() < self.names.len()
    }

    pub fn name(&self, id: ItemId) -> Option<&str> {
        self.names.get(id.index()).map(String::as_str)
    }

    pub fn id(&self, name: &str) -> Option<ItemId> {
        self.index.get(name.trim()).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Checks `1 <= value <= n` and returns the id.
    pub fn item(&self, value: i64) -> Result<ItemId> {
        if value < 1 || value as u64 > self.names.len() as u64 {
            return Err(Error::ItemOutOfRange {
                id: value,
                n: self.names.len(),
            });
        }
        Ok(ItemId(value as u32))
    }

    pub fn encode<S: AsRef<str>>(&self, names: &[S]) -> Result<Transaction> {
        let ids = names
            .iter()
            .map(|name| {
                self.id(name.as_ref())
                    .ok_or_else(|| Error::UnknownAttribute(name.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Transaction::new(ids)
    }

    pub fn decode(&self, items: &[ItemId]) -> Vec<&str> {
        items.iter().filter_map(|&id| self.name(id)).collect()
    }

    /// Reads `id<TAB>name` lines; ids must run 1..n in order.
    pub fn read_from<R: BufRead>(reader: R) -> Result<Self> {
        let mut names = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, name) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(lineno + 1, "expected id<TAB>name"))?;
            let id: usize = id
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno + 1, format!("bad id {id:?}")))?;
            if id != names.len() + 1 {
                return Err(Error::parse(
                    lineno + 1,
                    format!("expected id {}, found {id}", names.len() + 1),
                ));
            }
            names.push(name.to_string());
        }
        Self::build(names)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, name) in self.names.iter().enumerate() {
            writeln!(out, "{}\t{}", i + 1, name)?;
        }
        Ok(())
    }
}

/// Non-empty set of item ids, stored ascending.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transaction {
    items: Vec<ItemId>,
}

impl Transaction {
    /// Sorts the ids; rejects empty input and duplicates.
    pub fn new(mut items: Vec<ItemId>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::EmptyTransaction);
        }
        items.sort_unstable();
        if let Some(w) = items.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateItem(w[0].get()));
        }
        Ok(Transaction { items })
    }

    /// Sorts and collapses duplicates, returning how many were dropped.
    pub fn collapsing(mut items: Vec<ItemId>) -> Result<(Self, usize)> {
        if items.is_empty() {
            return Err(Error::EmptyTransaction);
        }
        items.sort_unstable();
        let before = items.len();
        items.dedup();
        let dropped = before - items.len();
        Ok((Transaction { items }, dropped))
    }

    pub(crate) fn from_sorted_unchecked(items: Vec<ItemId>) -> Self {
        debug_assert!(!items.is_empty());
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        Transaction { items }
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, id: ItemId) -> bool {
        self.items.binary_search(&id).is_ok()
    }

    /// `true` when every id of the ascending slice `subset` is present.
    pub fn contains_all(&self, subset: &[ItemId]) -> bool {
        let mut it = self.items.iter();
        subset.iter().all(|needle| it.any(|x| x == needle))
    }
}

/// Ordered sequence of transactions over one catalog.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransactionDb {
    catalog: ItemCatalog,
    transactions: Vec<Transaction>,
}

impl TransactionDb {
    pub fn new(catalog: ItemCatalog, transactions: Vec<Transaction>) -> Result<Self> {
        if transactions.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = catalog.len();
        for t in &transactions {
            if let Some(bad) = t.items().iter().find(|&&id| !catalog.contains(id)) {
                return Err(Error::ItemOutOfRange {
                    id: bad.get() as i64,
                    n,
                });
            }
        }
        Ok(TransactionDb {
            catalog,
            transactions,
        })
    }

    pub(crate) fn new_unchecked(catalog: ItemCatalog, transactions: Vec<Transaction>) -> Self {
        TransactionDb {
            catalog,
            transactions,
        }
    }

    pub fn catalog(&self) -> &ItemCatalog {
        &self.catalog
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn item_count(&self) -> usize {
        self.catalog.len()
    }

    pub fn max_transaction_len(&self) -> usize {
        self.transactions
            .iter()
            .map(Transaction::len)
            .max()
            .unwrap_or(0)
    }

    /// Same transactions under a different catalog (e.g. one with names).
    pub fn with_catalog(self, catalog: ItemCatalog) -> Result<Self> {
        Self::new(catalog, self.transactions)
    }

    /// One line per transaction, ids ascending and space separated.
    pub fn write_basket<W: Write>(&self, mut out: W) -> Result<()> {
        for t in &self.transactions {
            let line: Vec<String> = t.items().iter().map(ItemId::to_string).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Result of parsing a basket file.
#[derive(Clone, Debug)]
pub struct BasketFile {
    pub db: TransactionDb,
    /// Repeated ids dropped while turning lines into sets.
    pub duplicates: usize,
}

/// Splits one basket line into tokens, or `None` for blank and comment lines.
fn basket_tokens(line: &str) -> Option<impl Iterator<Item = &str>> {
    if line.trim_start().starts_with('#') {
        return None;
    }
    let mut tokens = line
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .peekable();
    tokens.peek()?;
    Some(tokens)
}

fn parse_basket_line(lineno: usize, tokens: impl Iterator<Item = String>) -> Result<Vec<ItemId>> {
    tokens
        .map(|tok| {
            let value: i64 = tok
                .parse()
                .map_err(|_| Error::parse(lineno, format!("not an integer: {tok:?}")))?;
            if value <= 0 {
                return Err(Error::parse(
                    lineno,
                    format!("item id must be positive, got {value}"),
                ));
            }
            u32::try_from(value)
                .map(ItemId)
                .map_err(|_| Error::parse(lineno, format!("item id too large: {value}")))
        })
        .collect()
}

/// Parses a basket file: one transaction per line, ids split on runs of
/// spaces, tabs or commas, `#` comments and blank lines skipped. Without an
/// explicit catalog one is synthesized as `1..=max id`.
pub fn load_basket_file<R: BufRead>(reader: R, catalog: Option<ItemCatalog>) -> Result<BasketFile> {
    let mut transactions = Vec::new();
    let mut duplicates = 0;
    let mut max_id = 0u32;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let Some(tokens) = basket_tokens(&line) else {
            continue;
        };
        let ids = parse_basket_line(i + 1, tokens.map(str::to_string))?;
        if let Some(cat) = &catalog {
            if let Some(bad) = ids.iter().find(|id| !cat.contains(**id)) {
                return Err(Error::parse(
                    i + 1,
                    format!("item {bad} not in catalog of {} items", cat.len()),
                ));
            }
        }
        max_id = ids.iter().map(|id| id.get()).fold(max_id, u32::max);
        let (t, dropped) = Transaction::collapsing(ids)?;
        duplicates += dropped;
        transactions.push(t);
    }
    if transactions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let catalog = match catalog {
        Some(c) => c,
        None => ItemCatalog::numeric(max_id as usize)?,
    };
    Ok(BasketFile {
        db: TransactionDb::new_unchecked(catalog, transactions),
        duplicates,
    })
}

/// Binarizes a comma-separated attribute table into `attr=value` items.
///
/// The first line names the attributes. For each selected attribute (all of
/// them when `selected` is empty) every distinct value gets an item, in
/// first-encounter order scanning rows top to bottom and columns left to
/// right. Each row becomes one transaction with one item per selected
/// attribute.
pub fn load_attribute_table<R: Read>(reader: R, selected: &[&str]) -> Result<TransactionDb> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = csv
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_string)
        .collect();
    let columns: Vec<usize> = if selected.is_empty() {
        (0..header.len()).collect()
    } else {
        let mut cols = selected
            .iter()
            .map(|name| {
                header
                    .iter()
                    .position(|h| h == name.trim())
                    .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        cols.sort_unstable();
        cols.dedup();
        cols
    };

    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, ItemId> = HashMap::new();
    let mut transactions = Vec::new();
    for (row, record) in csv.records().enumerate() {
        let record = record.map_err(csv_error)?;
        if record.len() != header.len() {
            return Err(Error::ArityMismatch {
                row: row + 2,
                expected: header.len(),
                found: record.len(),
            });
        }
        let mut items = Vec::with_capacity(columns.len());
        for &col in &columns {
            let item = format!("{}={}", header[col], &record[col]);
            let id = match index.get(&item) {
                Some(&id) => id,
                None => {
                    let id = ItemId::from_index(names.len());
                    names.push(item.clone());
                    index.insert(item, id);
                    id
                }
            };
            items.push(id);
        }
        items.sort_unstable();
        transactions.push(Transaction::from_sorted_unchecked(items));
    }
    if transactions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let catalog = ItemCatalog { names, index };
    Ok(TransactionDb::new_unchecked(catalog, transactions))
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::parse(line, format!("{other:?}")),
    }
}

/// Mean transaction length as an exact rational, plus the integer fake
/// length `l` derived from it (rounded half up, at least 1).
pub fn average_real_length(db: &TransactionDb) -> (Rational, usize) {
    let total: u64 = db.transactions().iter().map(|t| t.len() as u64).sum();
    let mean = ratio::ratio(total, db.len() as u64);
    let rounded = ratio::round_half_up(&mean);
    let l = num_traits::ToPrimitive::to_usize(&rounded)
        .unwrap_or(1)
        .max(1);
    (mean, l)
}

/// Population variance of transaction lengths, exact.
pub fn length_variance(db: &TransactionDb) -> Rational {
    let (mean, _) = average_real_length(db);
    let n = db.len() as u64;
    let sum_sq: u64 = db
        .transactions()
        .iter()
        .map(|t| (t.len() as u64).pow(2))
        .sum();
    ratio::ratio(sum_sq, n) - &mean * &mean
}

/// Parses a template for pinned mixing: `*` lines stand for the next real
/// transaction, any other line is a fake transaction in basket syntax.
pub(crate) fn parse_template_lines<R: BufRead>(reader: R) -> Result<Vec<Option<Vec<ItemId>>>> {
    let mut slots = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim() == "*" {
            slots.push(None);
            continue;
        }
        let Some(tokens) = basket_tokens(&line) else {
            continue;
        };
        slots.push(Some(parse_basket_line(i + 1, tokens.map(str::to_string))?));
    }
    Ok(slots)
}
