//! Seeded synthetic tables and columns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::column::{Column, PlainColumn, RleColumn};
use crate::error::Result;
use crate::ingest::{Dictionaries, Dictionary, Field, FieldType, Table};
use crate::runner::{AggSpec, Catalog, Expr, NamedExpr, Plan};
use crate::values::{ArithOp, CmpOp, Values};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Days since 1970-01-01 of 1992-01-01.
pub const DAY_1992: i64 = 8035;

/// Shape of the generated ship dates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShipDates {
    /// Any day from 1992 through 1998.
    Daily,
    /// The first day of a month from 1992 through 1998; 84 distinct values.
    Monthly,
}

/// A lineitem-like table named `lineitem`.
///
/// Columns: `l_orderkey` (one to seven lines per order), `l_quantity`
/// (1..=50), `l_discount` and `l_tax` in hundredths (0..=10, 0..=8),
/// `l_extendedprice` (float), `l_shipdate` (days), `l_returnflag` and
/// `l_linestatus` (dictionary-coded strings).
pub fn lineitem(n: usize, seed: u64, dates: ShipDates, dicts: &mut Dictionaries) -> Table {
    let mut r = rng(seed);
    let mut orderkey = Vec::with_capacity(n);
    let (mut key, mut left) = (1i64, 0u32);
    let mut quantity = Vec::with_capacity(n);
    let mut discount = Vec::with_capacity(n);
    let mut tax = Vec::with_capacity(n);
    let mut price = Vec::with_capacity(n);
    let mut shipdate = Vec::with_capacity(n);
    let mut flag = Vec::with_capacity(n);
    let mut status = Vec::with_capacity(n);
    let month_starts = month_starts();
    let mut fd = Dictionary::from_strings(["A", "N", "R"]).unwrap();
    let mut sd = Dictionary::from_strings(["F", "O"]).unwrap();
    let cutoff = DAY_1992 + 1270;
    for _ in 0..n {
        if left == 0 {
            key += r.gen_range(1..4);
            left = r.gen_range(1..=7);
        }
        left -= 1;
        orderkey.push(key);
        let q: i32 = r.gen_range(1..=50);
        quantity.push(q);
        discount.push(r.gen_range(0..=10i32));
        tax.push(r.gen_range(0..=8i32));
        let unit = r.gen_range(900.0..2100.0f64);
        price.push((unit * q as f64 * 100.0).round() / 100.0);
        let d = match dates {
            ShipDates::Daily => DAY_1992 + r.gen_range(0..2557),
            ShipDates::Monthly => month_starts[r.gen_range(0..month_starts.len())],
        };
        shipdate.push(d as i32);
        let shipped = d <= cutoff;
        flag.push(if shipped { fd.encode(if r.gen_bool(0.5) { "R" } else { "A" }) } else { fd.encode("N") });
        status.push(sd.encode(if shipped { "F" } else { "O" }));
    }
    dicts.insert("returnflag".into(), fd);
    dicts.insert("linestatus".into(), sd);
    let mut t = Table::new("lineitem");
    let mut push = |name: &str, kind, values: Values, dict: Option<&str>| {
        let field = Field { name: name.into(), kind, dictionary: dict.map(Into::into) };
        t.push(field, Column::plain(values), dict.map(Into::into)).expect("equal lengths");
    };
    push("l_orderkey", FieldType::Int, Values::I64(orderkey), None);
    push("l_quantity", FieldType::Int, Values::I32(quantity), None);
    push("l_discount", FieldType::Int, Values::I32(discount), None);
    push("l_tax", FieldType::Int, Values::I32(tax), None);
    push("l_extendedprice", FieldType::Float, Values::F64(price), None);
    push("l_shipdate", FieldType::Date, Values::I32(shipdate), None);
    push("l_returnflag", FieldType::String, Values::I32(flag), Some("returnflag"));
    push("l_linestatus", FieldType::String, Values::I32(status), Some("linestatus"));
    t
}

/// Days since epoch of the first of each month, 1992-01 through 1998-12.
pub fn month_starts() -> Vec<i64> {
    let epoch = chrono::NaiveDate::from_ymd_opt(1970, 1, 1).unwrap();
    (1992..=1998)
        .flat_map(|y| (1..=12).map(move |m| (y, m)))
        .map(|(y, m)| (chrono::NaiveDate::from_ymd_opt(y, m, 1).unwrap() - epoch).num_days())
        .collect()
}

/// Revenue from discounted lines shipped in 1994 with a quantity under 24.
///
/// Discounts are in hundredths, so revenue is in hundredths of the price.
pub fn q6_plan() -> Plan {
    let pred = Expr::And {
        args: vec![
            Expr::cmp(CmpOp::Ge, Expr::col("l_shipdate"), Expr::Literal { value: crate::runner::Literal::Str("1994-01-01".into()) }),
            Expr::cmp(CmpOp::Lt, Expr::col("l_shipdate"), Expr::Literal { value: crate::runner::Literal::Str("1995-01-01".into()) }),
            Expr::cmp(CmpOp::Ge, Expr::col("l_discount"), Expr::lit(5i64)),
            Expr::cmp(CmpOp::Le, Expr::col("l_discount"), Expr::lit(7i64)),
            Expr::cmp(CmpOp::Lt, Expr::col("l_quantity"), Expr::lit(24i64)),
        ],
    };
    Plan::GroupAgg {
        input: Box::new(Plan::Project {
            input: Box::new(Plan::Filter {
                input: Box::new(Plan::Scan {
                    table: "lineitem".into(),
                    columns: Some(vec![
                        "l_quantity".into(),
                        "l_discount".into(),
                        "l_shipdate".into(),
                        "l_extendedprice".into(),
                    ]),
                }),
                predicate: pred,
            }),
            columns: vec![NamedExpr {
                name: "rev".into(),
                expr: Expr::bin(ArithOp::Mul, Expr::col("l_extendedprice"), Expr::col("l_discount")),
            }],
        }),
        keys: vec![],
        aggs: vec![AggSpec { func: crate::groupby::AggFunc::Sum, column: Some("rev".into()), name: "revenue".into() }],
    }
}

/// A catalog holding [`lineitem`] sorted by quantity, discount and ship
/// date, every column encoded by the default cascade.
pub fn q6_catalog(n: usize, seed: u64) -> Result<Catalog> {
    let mut c = Catalog::new();
    let t = lineitem(n, seed, ShipDates::Monthly, &mut c.dictionaries);
    c.insert(t);
    let sort = [("lineitem".to_owned(), vec!["l_quantity".into(), "l_discount".into(), "l_shipdate".into()])]
        .into_iter()
        .collect();
    c.encode(&Default::default(), &sort)?;
    Ok(c)
}

/// A two-column table `sales(flag, amount)` over nine rows whose flag runs
/// are A, B, A covering rows 0-1, 2-4 and 5-8, with amount 3 throughout.
/// Grouping by flag sums to A = 18 and B = 9.
pub fn sales_fixture() -> Catalog {
    let mut c = Catalog::new();
    c.dictionaries.insert("flag".into(), Dictionary::from_strings(["A", "B"]).unwrap());
    let mut t = Table::new("sales");
    let runs = |v: Vec<i32>| Column::Rle(RleColumn::new(v, vec![0, 2, 5], vec![1, 4, 8], 9));
    t.push(
        Field { name: "flag".into(), kind: FieldType::String, dictionary: Some("flag".into()) },
        runs(vec![0, 1, 0]),
        Some("flag".into()),
    )
    .unwrap();
    t.push(Field::new("amount", FieldType::Int), runs(vec![3, 3, 3]), None).unwrap();
    c.insert(t);
    c
}

/// A named column with a short account of how it was made.
pub struct CorpusColumn {
    pub name: &'static str,
    pub description: &'static str,
    pub column: PlainColumn,
}

/// Twenty columns with distinct run, range and outlier profiles, for
/// checking encoding selection.
pub fn encoding_corpus() -> Vec<CorpusColumn> {
    const BIG: usize = 1_200_000;
    let mut r = rng(20);
    let mut out = Vec::new();
    let mut add = |name, description, values: Values| {
        out.push(CorpusColumn { name, description, column: PlainColumn::new(values) });
    };
    let small = 1_000;
    add("small_constant", "1,000 rows, one value", Values::I32(vec![7; small]));
    add("small_random", "1,000 rows, uniform over i32", Values::I32((0..small).map(|_| r.gen()).collect()));
    add("small_sorted_runs", "1,000 rows in four runs", Values::I32((0..small).map(|i| (i / 250) as i32).collect()));
    add("constant", "1.2M rows, one value", Values::I32(vec![42; BIG]));
    add("three_sorted", "1.2M rows, three values sorted", Values::I32((0..BIG).map(|i| (i * 3 / BIG) as i32).collect()));
    add("long_runs", "1.2M rows, runs of 1,200 of random values", Values::I32((0..BIG).map(|i| hash32(i / 1200)).collect()));
    add("runs_of_30", "1.2M rows, runs of 30 of random values", Values::I32((0..BIG).map(|i| hash32(i / 30)).collect()));
    add(
        "runs_with_noise",
        "1.2M rows, runs of 1,000 each followed by ten distinct single rows",
        Values::I32((0..BIG).map(|i| if i % 1010 < 1000 { hash32(i / 1010) } else { hash32(i + 7_777_777) }).collect()),
    );
    add(
        "mostly_unit_with_long",
        "1.2M rows, half covered by runs of 5,000, the rest single rows",
        Values::I32(
            (0..BIG)
                .map(|i| if (i / 5000) % 2 == 0 { (i / 10000) as i32 } else { hash32(i) })
                .collect(),
        ),
    );
    add("random_i32", "1.2M rows, uniform over i32", Values::I32((0..BIG).map(|_| r.gen()).collect()));
    add("small_range", "1.2M rows, uniform over 0..100 stored as i32", Values::I32((0..BIG).map(|_| r.gen_range(0..100)).collect()));
    add(
        "offset_range",
        "1.2M rows, uniform over 1,000,000..1,000,200",
        Values::I32((0..BIG).map(|_| r.gen_range(1_000_000..1_000_200)).collect()),
    );
    add(
        "i16_with_outliers",
        "1.2M rows, 99% within i16 and 1% spread over i32",
        Values::I32(
            (0..BIG)
                .map(|_| if r.gen_bool(0.01) { r.gen_range(100_000..i32::MAX) } else { r.gen_range(-30_000..30_000) })
                .collect(),
        ),
    );
    add(
        "i8_with_outliers",
        "1.2M rows, 98% within 0..100 and 2% near 10^9",
        Values::I32(
            (0..BIG)
                .map(|_| if r.gen_bool(0.02) { r.gen_range(1_000_000_000..1_000_001_000) } else { r.gen_range(0..100) })
                .collect(),
        ),
    );
    add(
        "heavy_tails",
        "1.2M rows, 20% spread over i32, the rest within 0..100",
        Values::I32((0..BIG).map(|_| if r.gen_bool(0.2) { r.gen() } else { r.gen_range(0..100) }).collect()),
    );
    add("random_f64", "1.2M rows, uniform floats", Values::F64((0..BIG).map(|_| r.gen::<f64>()).collect()));
    add("sorted_f64_runs", "1.2M rows, floats in runs of 10,000", Values::F64((0..BIG).map(|i| (i / 10_000) as f64 * 0.5).collect()));
    let months = month_starts();
    add(
        "monthly_dates_sorted",
        "1.2M rows, 84 month-start dates sorted",
        Values::I32((0..BIG).map(|i| months[i * months.len() / BIG] as i32).collect()),
    );
    add(
        "timestamps",
        "1.2M rows, i64 seconds within one day of 2020-01-01",
        Values::I64((0..BIG).map(|_| 1_577_836_800 + r.gen_range(0..86_400)).collect()),
    );
    add("alternating", "1.2M rows, 0 and 1 alternating", Values::I32((0..BIG).map(|i| (i % 2) as i32).collect()));
    out
}

fn hash32(i: usize) -> i32 {
    let mut x = (i as u64).wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    (x ^ (x >> 31)) as i32
}
