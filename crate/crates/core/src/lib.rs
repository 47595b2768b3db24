//! Privacy-preserving frequent-itemset mining.
//!
//! The owner of a transaction database hides it in two steps before handing
//! it to an untrusted miner: fake transactions are mixed in among the real
//! ones ([`randomizer::mix_fake`]), then every item id is replaced by a keyed
//! cyclic shift ([`randomizer::shift_db`]). The miner runs Apriori on the
//! mixed database as usual ([`miner`]). Whoever holds the key file recovers
//! the real-database supports and the original item ids
//! ([`reconstructor`]). The [`oracle`] module re-derives everything by brute
//! force for small instances.
//!
//! ```
//! use ppmine::catalog::load_basket_file;
//! use ppmine::randomizer::{randomize_pipeline, LengthModel, RandomizationParams};
//! use ppmine::reconstructor::{recover_frequent_itemsets, ReconstructionParams};
//! use ppmine::ratio::ratio;
//!
//! let db = load_basket_file("1 5\n3\n3 5\n2 4\n4\n1 2\n1 3\n3 1 5\n".as_bytes(), None)?.db;
//! let params = RandomizationParams {
//!     w: ratio(3, 2),
//!     l: 2,
//!     key_i: 4,
//!     seed: 7,
//!     length_model: LengthModel::Uniform,
//! };
//! let (mixed, _mask) = randomize_pipeline(&db, &params)?;
//! assert_eq!(mixed.len(), 20);
//!
//! let recon = ReconstructionParams::new(ratio(3, 2), 2, 5, 4)?;
//! let recovered = recover_frequent_itemsets(&mixed, &recon, &ratio(2, 5))?;
//! for r in &recovered.itemsets {
//!     println!("{} ~ {}", r.itemset, r.support.clamped);
//! }
//! # Ok::<(), ppmine::Error>(())
//! ```

pub mod bitset;
pub mod catalog;
pub mod cli;
pub mod error;
pub mod keyfile;
pub mod miner;
pub mod oracle;
pub mod randomizer;
pub mod ratio;
pub mod reconstructor;
pub mod report;

pub use catalog::{ItemCatalog, ItemId, Transaction, TransactionDb};
pub use error::{Error, Result};
pub use keyfile::KeyFile;
pub use miner::{AssociationRule, FrequentItemset, Itemset};
pub use randomizer::{LengthModel, MixMask, RandomizationParams};
pub use ratio::Rational;
pub use reconstructor::{ReconstructedSupport, ReconstructionParams};
