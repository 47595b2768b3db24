//! Command-line surface: `randomize`, `mine`, `reconstruct`, `rules`,
//! `compare` and `oracle`.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error, 3 oracle failure.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;

use crate::catalog::{self, ItemCatalog, TransactionDb};
use crate::error::{Error, Result};
use crate::keyfile::KeyFile;
use crate::miner::{self, itemset_order, Itemset};
use crate::oracle::{self, McTolerance, OracleReport};
use crate::randomizer::{self, LengthModel, MixTemplate, RandomizationParams};
use crate::ratio::{self, Rational};
use crate::reconstructor::{self, ReconstructionParams};
use crate::report::{self, ComparisonRow, ReportFormat};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_ORACLE: i32 = 3;

/// Transaction example used by `oracle` when no input is given.
pub const GROCERY_EXAMPLE: &str = "1 5\n3\n3 5\n2 4\n4\n1 2\n1 3\n3 1 5\n";

#[derive(Debug, Parser)]
#[command(name = "ppmine", version, about = "Privacy-preserving itemset mining")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inject fake transactions, shift items, write the mixed db and key file
    Randomize(RandomizeArgs),
    /// Frequent itemsets of a database, or the support of one itemset
    Mine(MineArgs),
    /// Recover original-space frequent itemsets from a mixed db
    Reconstruct(ReconstructArgs),
    /// Association rules of a database
    Rules(RulesArgs),
    /// Real supports next to reconstructed ones
    Compare(CompareArgs),
    /// Brute-force and Monte-Carlo self checks
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Basket file, or attribute table when --attributes is given
    #[arg(long)]
    pub input: PathBuf,
    /// Catalog file (id<TAB>name) naming the items of a basket file
    #[arg(long, conflicts_with = "attributes")]
    pub catalog: Option<PathBuf>,
    /// Read --input as a CSV attribute table and binarize these columns
    /// (comma separated; "all" for every column)
    #[arg(long)]
    pub attributes: Option<String>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Report destination; stdout when omitted
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Tsv)]
    pub format: ReportFormat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LengthModelArg {
    Uniform,
    Normal,
}

#[derive(Debug, Args)]
pub struct RandomizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Mixed basket file to write
    #[arg(long)]
    pub output: PathBuf,
    /// Secret key file to write
    #[arg(long)]
    pub key_file: PathBuf,
    /// Fake-to-real ratio (decimal or fraction)
    #[arg(long, value_parser = parse_rational_arg)]
    pub w: Rational,
    /// Mean fake length; defaults to the rounded mean real length
    #[arg(long)]
    pub l: Option<usize>,
    /// Shift key; drawn from the seed when omitted
    #[arg(long)]
    pub key: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = LengthModelArg::Uniform)]
    pub length_model: LengthModelArg,
    /// Write the item catalog here (useful with --attributes)
    #[arg(long)]
    pub catalog_out: Option<PathBuf>,
    /// Test hook: fixed interleaving of real ('*') and fake rows
    #[arg(long, hide = true)]
    pub fakes_from: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_parser = parse_rational_arg, required_unless_present = "itemset")]
    pub min_support: Option<Rational>,
    /// Print the support of this itemset (ids or names, comma separated)
    #[arg(long)]
    pub itemset: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Mixed basket file
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub key_file: PathBuf,
    #[arg(long, value_parser = parse_rational_arg)]
    pub min_support: Rational,
    /// Catalog naming the original items
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RulesArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_parser = parse_rational_arg)]
    pub min_support: Rational,
    #[arg(long, value_parser = parse_rational_arg)]
    pub min_confidence: Rational,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Real database
    #[command(flatten)]
    pub input: InputArgs,
    /// Mixed basket file produced by `randomize`
    #[arg(long)]
    pub mixed: PathBuf,
    #[arg(long)]
    pub key_file: PathBuf,
    #[arg(long, value_parser = parse_rational_arg)]
    pub min_support: Rational,
    /// Also write a real,reconstructed CSV for plotting
    #[arg(long)]
    pub closeness: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Basket file; the built-in grocery example when omitted
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_parser = parse_rational_arg, default_value = "3/2")]
    pub w: Rational,
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long, default_value_t = 4)]
    pub key: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_parser = parse_rational_arg, default_value = "0.4")]
    pub min_support: Rational,
    #[arg(long, default_value_t = 200)]
    pub runs: usize,
    /// Report destination; stdout when omitted
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_rational_arg(s: &str) -> std::result::Result<Rational, String> {
    ratio::parse_rational(s).map_err(|e| e.to_string())
}

fn with_path(path: &Path, e: io::Error) -> Error {
    Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| with_path(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| with_path(path, e))
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_file(p, bytes),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn load_input(args: &InputArgs) -> Result<TransactionDb> {
    if let Some(attrs) = &args.attributes {
        let selected: Vec<&str> = if attrs.trim() == "all" {
            Vec::new()
        } else {
            attrs
                .split(',')
                .map(str::trim)
                .filter(|a| !a.is_empty())
                .collect()
        };
        return catalog::load_attribute_table(open(&args.input)?, &selected);
    }
    let names = args
        .catalog
        .as_deref()
        .map(|p| ItemCatalog::read_from(open(p)?))
        .transpose()?;
    let basket = catalog::load_basket_file(open(&args.input)?, names)?;
    if basket.duplicates > 0 {
        eprintln!(
            "warning: {} duplicate item(s) collapsed in {}",
            basket.duplicates,
            args.input.display()
        );
    }
    Ok(basket.db)
}

fn check_distinct(paths: &[&Path]) -> Result<()> {
    for (i, a) in paths.iter().enumerate() {
        if paths[i + 1..].iter().any(|b| a == b) {
            return Err(Error::InvalidParams(format!(
                "path {} is used twice",
                a.display()
            )));
        }
    }
    Ok(())
}

fn read_key(path: &Path) -> Result<KeyFile> {
    KeyFile::read_from(open(path)?)
}

pub fn cmd_randomize(args: &RandomizeArgs) -> Result<String> {
    let mut paths = vec![
        args.input.input.as_path(),
        args.output.as_path(),
        args.key_file.as_path(),
    ];
    if let Some(c) = &args.catalog_out {
        paths.push(c);
    }
    check_distinct(&paths)?;

    let db = load_input(&args.input)?;
    let n = db.item_count();
    let (_, rounded) = catalog::average_real_length(&db);
    let l = args.l.unwrap_or(rounded);
    let length_model = match args.length_model {
        LengthModelArg::Uniform => LengthModel::Uniform,
        LengthModelArg::Normal => randomizer::normal_model_for(&db),
    };
    let key_i = match args.key {
        Some(k) => k,
        // separate stream from the fake generator
        None => randomizer::seeded_rng(args.seed ^ 0x6b65_795f_6b65_795f)
            .random_range(1..n.max(2) as u64),
    };
    let params = RandomizationParams {
        w: args.w.clone(),
        l,
        key_i,
        seed: args.seed,
        length_model,
    };
    params.validate(n)?;

    let (mixed, mask) = match &args.fakes_from {
        Some(path) => {
            let template = MixTemplate::read_from(open(path)?)?;
            let expected = params.fake_count(db.len());
            if template.fake_rows() as u64 != expected {
                return Err(Error::InvalidParams(format!(
                    "template holds {} fakes but round(w*N) = {expected}",
                    template.fake_rows()
                )));
            }
            randomizer::randomize_with_template(&db, &template, key_i)?
        }
        None => randomizer::randomize_pipeline(&db, &params)?,
    };

    let mut basket = Vec::new();
    mixed.write_basket(&mut basket)?;
    write_file(&args.output, &basket)?;
    let mut key = Vec::new();
    KeyFile { params, n }.write_to(&mut key)?;
    write_file(&args.key_file, &key)?;
    if let Some(path) = &args.catalog_out {
        let mut cat = Vec::new();
        db.catalog().write_to(&mut cat)?;
        write_file(path, &cat)?;
    }

    if key_i % n as u64 == 0 {
        eprintln!("warning: key is a multiple of n = {n}; the item shift is the identity");
    }
    eprintln!(
        "warning: {} is the secret key; never distribute it with {}",
        args.key_file.display(),
        args.output.display()
    );
    Ok(format!(
        "N = {}\nfakes = {}\nn = {n}\nl = {l}\nmixed = {}\n",
        db.len(),
        mask.len() - mask.real_count(),
        mixed.len()
    ))
}

fn parse_itemset(text: &str, catalog: &ItemCatalog) -> Result<Itemset> {
    match Itemset::parse(text, catalog.len()) {
        Ok(set) => Ok(set),
        Err(id_err) => {
            let by_name: Option<Vec<_>> = text.split(',').map(|name| catalog.id(name)).collect();
            match by_name {
                Some(ids) if !ids.is_empty() => Itemset::new(ids),
                _ => Err(id_err),
            }
        }
    }
}

pub fn cmd_mine(args: &MineArgs) -> Result<Vec<u8>> {
    let db = load_input(&args.input)?;
    let mut out = Vec::new();
    if let Some(text) = &args.itemset {
        let set = parse_itemset(text, db.catalog())?;
        let count = miner::support_count(&db, &set);
        let row = miner::FrequentItemset {
            itemset: set,
            count,
            total: db.len() as u64,
        };
        report::write_frequent(&mut out, args.output.format, Some(db.catalog()), &[row])?;
        return Ok(out);
    }
    let s_min = args.min_support.as_ref().expect("clap enforces");
    let found = miner::frequent_itemsets(&db, s_min)?;
    report::write_frequent(&mut out, args.output.format, Some(db.catalog()), &found)?;
    Ok(out)
}

pub fn cmd_reconstruct(args: &ReconstructArgs) -> Result<Vec<u8>> {
    let key = read_key(&args.key_file)?;
    let params = ReconstructionParams::from_key_file(&key)?;
    let mixed = catalog::load_basket_file(open(&args.input)?, None)?.db;
    let names = args
        .catalog
        .as_deref()
        .map(|p| ItemCatalog::read_from(open(p)?))
        .transpose()?;
    if let Some(c) = &names {
        if c.len() != key.n {
            return Err(Error::CatalogMismatch(format!(
                "catalog has {} items, key records n = {}",
                c.len(),
                key.n
            )));
        }
    }
    let recovery = reconstructor::recover_frequent_itemsets(&mixed, &params, &args.min_support)?;
    for w in &recovery.warnings {
        eprintln!("warning: {w}");
    }
    let mut out = Vec::new();
    report::write_reconstruction(
        &mut out,
        args.output.format,
        names.as_ref(),
        &recovery.itemsets,
    )?;
    Ok(out)
}

pub fn cmd_rules(args: &RulesArgs) -> Result<Vec<u8>> {
    let db = load_input(&args.input)?;
    let frequent = miner::frequent_itemsets(&db, &args.min_support)?;
    let rules = miner::association_rules(&frequent, &db, &args.min_support, &args.min_confidence)?;
    let mut out = Vec::new();
    report::write_rules(&mut out, args.output.format, &rules)?;
    Ok(out)
}

/// Rows for every itemset frequent in the real db or recovered from the
/// mixed db, sorted by size then ids.
pub fn comparison_rows(
    real: &TransactionDb,
    mixed: &TransactionDb,
    key: &KeyFile,
    s_min: &Rational,
) -> Result<Vec<ComparisonRow>> {
    let params = ReconstructionParams::from_key_file(key)?;
    if real.item_count() > key.n {
        return Err(Error::CatalogMismatch(format!(
            "real database has {} items, key records n = {}",
            real.item_count(),
            key.n
        )));
    }
    if mixed.item_count() > key.n {
        return Err(Error::CatalogMismatch(format!(
            "mixed database has {} items, key records n = {}",
            mixed.item_count(),
            key.n
        )));
    }
    let recovery = reconstructor::recover_frequent_itemsets(mixed, &params, s_min)?;
    for w in &recovery.warnings {
        eprintln!("warning: {w}");
    }
    let mut sets: BTreeSet<Itemset> = miner::frequent_itemsets(real, s_min)?
        .into_iter()
        .map(|f| f.itemset)
        .collect();
    sets.extend(recovery.itemsets.into_iter().map(|r| r.itemset));
    let mut sets: Vec<Itemset> = sets.into_iter().collect();
    sets.sort_by(itemset_order);

    let mixed_full = if mixed.item_count() == key.n {
        mixed.clone()
    } else {
        TransactionDb::new(ItemCatalog::numeric(key.n)?, mixed.transactions().to_vec())?
    };
    sets.iter()
        .map(|set| {
            Ok(ComparisonRow {
                real_count: miner::support_count(real, set),
                real_total: real.len() as u64,
                recovered: reconstructor::reconstruct_itemset(&mixed_full, set, &params)?,
            })
        })
        .collect()
}

pub fn cmd_compare(args: &CompareArgs) -> Result<(Vec<u8>, Option<Vec<u8>>)> {
    let key = read_key(&args.key_file)?;
    let real = load_input(&args.input)?;
    if (args.input.catalog.is_some() || args.input.attributes.is_some())
        && real.item_count() != key.n
    {
        return Err(Error::CatalogMismatch(format!(
            "real catalog has {} items, key records n = {}",
            real.item_count(),
            key.n
        )));
    }
    let mixed = catalog::load_basket_file(open(&args.mixed)?, None)?.db;
    let rows = comparison_rows(&real, &mixed, &key, &args.min_support)?;
    let mut out = Vec::new();
    report::write_comparison(&mut out, args.output.format, Some(real.catalog()), &rows)?;
    let closeness = match &args.closeness {
        Some(_) => {
            let mut buf = Vec::new();
            report::write_closeness(&mut buf, &rows)?;
            Some(buf)
        }
        None => None,
    };
    Ok((out, closeness))
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<OracleReport> {
    let db = match &args.input {
        Some(path) => catalog::load_basket_file(open(path)?, None)?.db,
        None => catalog::load_basket_file(GROCERY_EXAMPLE.as_bytes(), None)?.db,
    };
    let n = db.item_count();
    let l = args
        .l
        .unwrap_or_else(|| catalog::average_real_length(&db).1);
    let params = RandomizationParams {
        w: args.w.clone(),
        l,
        key_i: args.key,
        seed: args.seed,
        length_model: LengthModel::Uniform,
    };
    params.validate(n)?;

    let mut report = OracleReport::default();
    if n <= oracle::BRUTE_FORCE_MAX_ITEMS {
        report.push(oracle::mining_check(&db, &args.min_support)?);
    }
    if n <= oracle::ENUM_MAX_N && l <= oracle::ENUM_MAX_L {
        report.extend(oracle::fake_expectation_checks(n, l)?);
    }
    let mut itemsets: BTreeSet<Itemset> = (1..=n)
        .map(|i| Itemset::new(vec![db.catalog().item(i as i64)?]))
        .collect::<Result<_>>()?;
    itemsets.extend(
        miner::frequent_itemsets(&db, &args.min_support)?
            .into_iter()
            .map(|f| f.itemset),
    );
    let mut itemsets: Vec<Itemset> = itemsets.into_iter().collect();
    itemsets.sort_by(itemset_order);
    report.extend(oracle::mc_reconstruction_check(
        &db,
        &params,
        &itemsets,
        args.runs,
        &McTolerance::StandardErrors(3.0),
    )?);
    Ok(report)
}

/// Runs one parsed command and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Randomize(args) => cmd_randomize(args).map(|summary| {
            print!("{summary}");
            EXIT_OK
        }),
        Command::Mine(args) => cmd_mine(args)
            .and_then(|out| emit(args.output.output.as_deref(), &out))
            .map(|_| EXIT_OK),
        Command::Reconstruct(args) => cmd_reconstruct(args)
            .and_then(|out| emit(args.output.output.as_deref(), &out))
            .map(|_| EXIT_OK),
        Command::Rules(args) => cmd_rules(args)
            .and_then(|out| emit(args.output.output.as_deref(), &out))
            .map(|_| EXIT_OK),
        Command::Compare(args) => cmd_compare(args).and_then(|(out, closeness)| {
            emit(args.output.output.as_deref(), &out)?;
            if let (Some(path), Some(bytes)) = (&args.closeness, closeness) {
                write_file(path, &bytes)?;
            }
            Ok(EXIT_OK)
        }),
        Command::Oracle(args) => cmd_oracle(args).and_then(|report| {
            emit(args.output.as_deref(), report.to_string().as_bytes())?;
            Ok(if report.all_passed() {
                EXIT_OK
            } else {
                EXIT_ORACLE
            })
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                EXIT_IO
            } else {
                EXIT_VALIDATION
            }
        }
    }
}
