#![allow(dead_code)]

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use ppmine::catalog::{load_attribute_table, load_basket_file};
use ppmine::randomizer::MixTemplate;
use ppmine::{ItemCatalog, ItemId, Itemset, Transaction, TransactionDb};
use rand::Rng;

pub const MUSHROOM_ATTRIBUTES: [&str; 5] = [
    "gill-attachment",
    "gill-spacing",
    "veil-type",
    "veil-color",
    "ring-number",
];

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("data")
        .join(name)
}

pub fn basket(name: &str) -> TransactionDb {
    let file = BufReader::new(File::open(data_path(name)).expect("fixture exists"));
    load_basket_file(file, None).expect("fixture parses").db
}

pub fn grocery() -> TransactionDb {
    basket("grocery.basket")
}

pub fn grocery_template() -> MixTemplate {
    let file = BufReader::new(File::open(data_path("grocery_mix.template")).unwrap());
    MixTemplate::read_from(file).unwrap()
}

pub fn mushroom() -> TransactionDb {
    let file = File::open(data_path("mushroom.csv")).expect("mushroom fixture exists");
    load_attribute_table(file, &MUSHROOM_ATTRIBUTES).expect("mushroom fixture parses")
}

pub fn itemset(ids: &[u32]) -> Itemset {
    Itemset::new(ids.iter().map(|&v| ItemId::new(v).unwrap()).collect()).unwrap()
}

pub fn named_itemset(db: &TransactionDb, names: &[&str]) -> Itemset {
    let ids = names
        .iter()
        .map(|n| {
            db.catalog()
                .id(n)
                .unwrap_or_else(|| panic!("unknown item {n}"))
        })
        .collect();
    Itemset::new(ids).unwrap()
}

/// Rows as sorted id vectors, for order-sensitive comparisons.
pub fn rows(db: &TransactionDb) -> Vec<Vec<u32>> {
    db.transactions()
        .iter()
        .map(|t| t.items().iter().map(|a| a.get()).collect())
        .collect()
}

/// Random database over `1..=n` with `rows` non-empty transactions.
pub fn random_db<R: Rng>(rng: &mut R, n: usize, rows: usize) -> TransactionDb {
    let density: f64 = rng.random_range(0.1..0.8);
    let transactions = (0..rows)
        .map(|_| {
            let mut items: Vec<ItemId> = (1..=n as u32)
                .filter(|_| rng.random_bool(density))
                .map(|v| ItemId::new(v).unwrap())
                .collect();
            if items.is_empty() {
                items.push(ItemId::new(rng.random_range(1..=n as u32)).unwrap());
            }
            Transaction::new(items).unwrap()
        })
        .collect();
    TransactionDb::new(ItemCatalog::numeric(n).unwrap(), transactions).unwrap()
}

/// Every non-empty subset of `1..=n`.
pub fn all_itemsets(n: usize) -> Vec<Itemset> {
    (1u32..(1u32 << n))
        .map(|mask| {
            let ids: Vec<u32> = (0..n as u32)
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| b + 1)
                .collect();
            itemset(&ids)
        })
        .collect()
}
