//! TSV/CSV report writers. Supports are printed as decimals rounded to
//! twelve places; counts are exact.

use std::io::Write;

use crate::catalog::ItemCatalog;
use crate::error::{Error, Result};
use crate::miner::{AssociationRule, FrequentItemset, Itemset};
use crate::ratio::{self, Rational};
use crate::reconstructor::RecoveredItemset;

pub const DECIMAL_PLACES: usize = 12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    #[default]
    Tsv,
    Csv,
}

fn writer<W: Write>(out: W, format: ReportFormat) -> csv::Writer<W> {
    let delimiter = match format {
        ReportFormat::Tsv => b'\t',
        ReportFormat::Csv => b',',
    };
    csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_writer(out)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn names(catalog: Option<&ItemCatalog>, itemset: &Itemset) -> String {
    match catalog {
        Some(c) => c.decode(itemset.items()).join(", "),
        None => String::new(),
    }
}

fn dec(r: &Rational) -> String {
    ratio::format_decimal(r, DECIMAL_PLACES)
}

/// Columns: k, items, item-names, count, support.
pub fn write_frequent<W: Write>(
    out: W,
    format: ReportFormat,
    catalog: Option<&ItemCatalog>,
    itemsets: &[FrequentItemset],
) -> Result<()> {
    let mut w = writer(out, format);
    w.write_record(["k", "items", "item-names", "count", "support"])
        .map_err(csv_err)?;
    for f in itemsets {
        w.write_record([
            f.itemset.len().to_string(),
            f.itemset.to_string(),
            names(catalog, &f.itemset),
            f.count.to_string(),
            dec(&f.support()),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: antecedent, consequent, support, confidence.
pub fn write_rules<W: Write>(
    out: W,
    format: ReportFormat,
    rules: &[AssociationRule],
) -> Result<()> {
    let mut w = writer(out, format);
    w.write_record(["antecedent", "consequent", "support", "confidence"])
        .map_err(csv_err)?;
    for r in rules {
        w.write_record([
            r.antecedent.to_string(),
            r.consequent.to_string(),
            dec(&r.support()),
            dec(&r.confidence()),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns: items, item-names, mixed_support, reconstructed_support, clamped_flag.
/// Items are in original ids.
pub fn write_reconstruction<W: Write>(
    out: W,
    format: ReportFormat,
    catalog: Option<&ItemCatalog>,
    recovered: &[RecoveredItemset],
) -> Result<()> {
    let mut w = writer(out, format);
    w.write_record([
        "items",
        "item-names",
        "mixed_support",
        "reconstructed_support",
        "clamped_flag",
    ])
    .map_err(csv_err)?;
    for r in recovered {
        w.write_record([
            r.itemset.to_string(),
            names(catalog, &r.itemset),
            dec(&r.mixed_support()),
            dec(&r.support.clamped),
            r.support.was_clamped.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Real-database support next to the reconstructed estimate for one itemset.
#[derive(Clone, Debug)]
pub struct ComparisonRow {
    pub real_count: u64,
    pub real_total: u64,
    pub recovered: RecoveredItemset,
}

impl ComparisonRow {
    pub fn real_support(&self) -> Rational {
        ratio::ratio(self.real_count, self.real_total)
    }

    pub fn difference(&self) -> Rational {
        num_traits::Signed::abs(&(self.real_support() - &self.recovered.support.clamped))
    }
}

/// Columns: items, item-names, real_support, mixed_support,
/// reconstructed_support, abs_difference.
pub fn write_comparison<W: Write>(
    out: W,
    format: ReportFormat,
    catalog: Option<&ItemCatalog>,
    rows: &[ComparisonRow],
) -> Result<()> {
    let mut w = writer(out, format);
    w.write_record([
        "items",
        "item-names",
        "real_support",
        "mixed_support",
        "reconstructed_support",
        "abs_difference",
    ])
    .map_err(csv_err)?;
    for row in rows {
        let r = &row.recovered;
        w.write_record([
            r.itemset.to_string(),
            names(catalog, &r.itemset),
            dec(&row.real_support()),
            dec(&r.mixed_support()),
            dec(&r.support.clamped),
            dec(&row.difference()),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Two-column CSV for plotting real against reconstructed supports.
pub fn write_closeness<W: Write>(out: W, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = writer(out, ReportFormat::Csv);
    w.write_record(["real_support", "reconstructed_support"])
        .map_err(csv_err)?;
    for row in rows {
        w.write_record([
            dec(&row.real_support()),
            dec(&row.recovered.support.clamped),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::ItemId;

    fn set(ids: &[u32]) -> Itemset {
        Itemset::new(ids.iter().map(|&i| ItemId::new(i).unwrap()).collect()).unwrap()
    }

    #[test]
    fn frequent_report_layout() {
        let cat = ItemCatalog::build(["green apples", "red apples", "oranges"]).unwrap();
        let rows = vec![
            FrequentItemset {
                itemset: set(&[1]),
                count: 4,
                total: 8,
            },
            FrequentItemset {
                itemset: set(&[1, 3]),
                count: 2,
                total: 8,
            },
        ];
        let mut tsv = Vec::new();
        write_frequent(&mut tsv, ReportFormat::Tsv, Some(&cat), &rows).unwrap();
        assert_eq!(
            String::from_utf8(tsv).unwrap(),
            "k\titems\titem-names\tcount\tsupport\n\
             1\t1\tgreen apples\t4\t0.5\n\
             2\t1,3\tgreen apples, oranges\t2\t0.25\n"
        );
        let mut csv = Vec::new();
        write_frequent(&mut csv, ReportFormat::Csv, Some(&cat), &rows).unwrap();
        assert!(String::from_utf8(csv)
            .unwrap()
            .contains("2,\"1,3\",\"green apples, oranges\",2,0.25\n"));
    }

    #[test]
    fn rule_report_layout() {
        let rules = vec![AssociationRule {
            antecedent: set(&[5]),
            consequent: set(&[1]),
            count: 2,
            antecedent_count: 3,
            total: 8,
        }];
        let mut out = Vec::new();
        write_rules(&mut out, ReportFormat::Tsv, &rules).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "antecedent\tconsequent\tsupport\tconfidence\n5\t1\t0.25\t0.666666666667\n"
        );
    }
}
