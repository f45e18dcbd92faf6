//! Random plans over randomly encoded tables must give the same rows in
//! compressed and plain execution.

mod common;

use common::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rlex::column::{Column, Encoding, PlainColumn};
use rlex::groupby::AggFunc;
use rlex::ingest::{encode, Dictionary, EncodingChoice, Field, FieldType, Table};
use rlex::runner::{run, AggSpec, Catalog, Expr, JoinKey, JoinKind, Literal, Mode, NamedExpr, Plan};
use rlex::values::{ArithOp, CmpOp, DType};

const TAGS: [&str; 5] = ["amber", "blue", "cyan", "dusk", "ember"];
const SEEDS: u64 = 100;

type Schema = Vec<(String, FieldType)>;

fn any_encoding(rng: &mut ChaCha8Rng) -> Encoding {
    ENCODINGS[rng.gen_range(0..ENCODINGS.len())]
}

fn coded(rng: &mut ChaCha8Rng, n: usize, distinct: i32, step: i32) -> Column {
    let mut v = Vec::with_capacity(n);
    while v.len() < n {
        let code = rng.gen_range(0..distinct) * step;
        let len = rng.gen_range(1..=20).min(n - v.len());
        v.extend(std::iter::repeat_n(code, len));
    }
    let choice = match rng.gen_range(0..4) {
        0 => EncodingChoice::Plain { center: None, width: DType::I32 },
        1 => EncodingChoice::Rle,
        2 => EncodingChoice::RleIndex { min_run: 2 },
        _ => EncodingChoice::PlainIndex { trim_fraction: 0.05 },
    };
    encode(&PlainColumn::new(v), &choice).unwrap()
}

fn numeric(rng: &mut ChaCha8Rng, n: usize, float: bool) -> (Column, FieldType) {
    let mut dom = Domain::pick(rng);
    if !float && dom.dtype.is_float() {
        dom.dtype = DType::I32;
    }
    let enc = any_encoding(rng);
    let col = random_column(rng, n, enc, dom, false);
    let kind = if col.dtype().is_float() { FieldType::Float } else { FieldType::Int };
    (col, kind)
}

fn tables(rng: &mut ChaCha8Rng) -> Catalog {
    let mut cat = Catalog::new();
    cat.dictionaries.insert("tag".into(), Dictionary::from_strings(TAGS).unwrap());
    let nl = rng.gen_range(0..=10_000);
    let nr = rng.gen_range(0..=300);

    let mut l = Table::new("l");
    let (k, kk) = numeric(rng, nl, false);
    l.push(Field::new("k", kk), k, None).unwrap();
    let (a, ak) = numeric(rng, nl, true);
    l.push(Field::new("a", ak), a, None).unwrap();
    l.push(Field::new("s", FieldType::String), coded(rng, nl, TAGS.len() as i32, 1), Some("tag".into())).unwrap();
    l.push(Field::new("d", FieldType::Date), coded(rng, nl, 6, 30), None).unwrap();

    let mut r = Table::new("r");
    let (k, kk) = numeric(rng, nr, false);
    r.push(Field::new("k", kk), k, None).unwrap();
    let (b, bk) = numeric(rng, nr, true);
    r.push(Field::new("b", bk), b, None).unwrap();
    r.push(Field::new("s", FieldType::String), coded(rng, nr, TAGS.len() as i32, 1), Some("tag".into())).unwrap();

    cat.insert(l);
    cat.insert(r);
    cat
}

fn schema_of(cat: &Catalog, table: &str) -> Schema {
    cat.table(table).unwrap().fields.iter().map(|f| (f.name.clone(), f.kind)).collect()
}

fn pick_op(rng: &mut ChaCha8Rng) -> CmpOp {
    *[CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne, CmpOp::Ge, CmpOp::Gt].choose(rng).unwrap()
}

fn literal_for(rng: &mut ChaCha8Rng, kind: FieldType) -> Expr {
    let value = match kind {
        FieldType::Int => Literal::Int(rng.gen_range(-5..8)),
        FieldType::Float => Literal::Float(rng.gen_range(-8..12) as f64 * 0.25),
        // Includes a string absent from the dictionary.
        FieldType::String => Literal::Str(["blue", "dusk", "ember", "violet"].choose(rng).unwrap().to_string()),
        FieldType::Date => Literal::Str(["1970-01-01", "1970-01-31", "1970-03-15", "1970-07-01"].choose(rng).unwrap().to_string()),
    };
    Expr::Literal { value }
}

fn atom(rng: &mut ChaCha8Rng, schema: &Schema) -> Expr {
    let (name, kind) = schema.choose(rng).unwrap().clone();
    let numeric: Vec<&(String, FieldType)> =
        schema.iter().filter(|c| matches!(c.1, FieldType::Int | FieldType::Float)).collect();
    let mut op = pick_op(rng);
    if kind == FieldType::String {
        op = if rng.gen_bool(0.5) { CmpOp::Eq } else { CmpOp::Ne };
    }
    if matches!(kind, FieldType::Int | FieldType::Float) && numeric.len() > 1 && rng.gen_bool(0.3) {
        let other = numeric.choose(rng).unwrap();
        return Expr::cmp(op, Expr::col(&name), Expr::col(&other.0));
    }
    let (l, r) = (Expr::col(&name), literal_for(rng, kind));
    if rng.gen_bool(0.2) {
        Expr::cmp(op, r, l)
    } else {
        Expr::cmp(op, l, r)
    }
}

fn predicate(rng: &mut ChaCha8Rng, schema: &Schema, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.4) {
        return atom(rng, schema);
    }
    match rng.gen_range(0..3) {
        0 => Expr::And { args: (0..rng.gen_range(2..=3)).map(|_| predicate(rng, schema, depth - 1)).collect() },
        1 => Expr::Or { args: (0..rng.gen_range(2..=3)).map(|_| predicate(rng, schema, depth - 1)).collect() },
        _ => Expr::Not { arg: Box::new(predicate(rng, schema, depth - 1)) },
    }
}

fn maybe_filter(rng: &mut ChaCha8Rng, plan: Plan, schema: &Schema, p: f64) -> Plan {
    if rng.gen_bool(p) {
        Plan::Filter { input: Box::new(plan), predicate: predicate(rng, schema, 2) }
    } else {
        plan
    }
}

fn numeric_cols(schema: &Schema) -> Vec<(String, FieldType)> {
    schema.iter().filter(|c| matches!(c.1, FieldType::Int | FieldType::Float)).cloned().collect()
}

fn random_plan(rng: &mut ChaCha8Rng, cat: &Catalog) -> Plan {
    let mut schema = schema_of(cat, "l");
    let mut plan = maybe_filter(rng, Plan::scan("l"), &schema, 0.6);

    if rng.gen_bool(0.5) {
        let rs = schema_of(cat, "r");
        let right = maybe_filter(rng, Plan::scan("r"), &rs, 0.4);
        let (on, kind) = if rng.gen_bool(0.75) {
            (JoinKey { left: "k".into(), right: "k".into() }, JoinKind::Inner)
        } else {
            (JoinKey { left: "s".into(), right: "s".into() }, JoinKind::Semi)
        };
        let kind = if rng.gen_bool(0.3) { JoinKind::Semi } else { kind };
        if kind == JoinKind::Inner {
            for (name, k) in rs {
                let name = if schema.iter().any(|c| c.0 == name) { format!("{name}_right") } else { name };
                schema.push((name, k));
            }
        }
        plan = Plan::Join { left: Box::new(plan), right: Box::new(right), on, kind };
        plan = maybe_filter(rng, plan, &schema, 0.3);
    }

    if rng.gen_bool(0.4) {
        let nums = numeric_cols(&schema);
        let mut cols: Vec<NamedExpr> = Vec::new();
        let mut next: Schema = Vec::new();
        for (name, kind) in schema.iter().filter(|_| rng.gen_bool(0.6)) {
            cols.push(NamedExpr { name: name.clone(), expr: Expr::col(name) });
            next.push((name.clone(), *kind));
        }
        for i in 0..rng.gen_range(1..=2) {
            let a = nums.choose(rng).unwrap();
            let op = *[ArithOp::Add, ArithOp::Sub, ArithOp::Mul].choose(rng).unwrap();
            let (rhs, rk) = if rng.gen_bool(0.5) {
                let b = nums.choose(rng).unwrap();
                (Expr::col(&b.0), b.1)
            } else if rng.gen_bool(0.5) {
                (Expr::Literal { value: Literal::Int(rng.gen_range(-3..=4)) }, FieldType::Int)
            } else {
                (Expr::Literal { value: Literal::Float(1.5) }, FieldType::Float)
            };
            let kind = if a.1 == FieldType::Float || rk == FieldType::Float { FieldType::Float } else { FieldType::Int };
            let name = format!("x{i}");
            cols.push(NamedExpr { name: name.clone(), expr: Expr::bin(op, Expr::col(&a.0), rhs) });
            next.push((name, kind));
        }
        plan = Plan::Project { input: Box::new(plan), columns: cols };
        schema = next;
        plan = maybe_filter(rng, plan, &schema, 0.3);
    }

    if rng.gen_bool(0.6) {
        let mut keys: Vec<String> = Vec::new();
        for _ in 0..rng.gen_range(0..=2) {
            let k = schema.choose(rng).unwrap().0.clone();
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        let nums = numeric_cols(&schema);
        let funcs = [AggFunc::Sum, AggFunc::Count, AggFunc::Min, AggFunc::Max, AggFunc::Avg, AggFunc::Std, AggFunc::Var];
        let mut aggs = Vec::new();
        for i in 0..rng.gen_range(1..=3) {
            let func = *funcs.choose(rng).unwrap();
            let column = if func == AggFunc::Count && rng.gen_bool(0.5) { None } else { Some(nums.choose(rng).unwrap().0.clone()) };
            aggs.push(AggSpec { func, column, name: format!("agg{i}") });
        }
        plan = Plan::GroupAgg { input: Box::new(plan), keys, aggs };
    }
    plan
}

#[test]
fn random_plans_agree_across_executors() {
    let mut failures = Vec::new();
    let mut nonempty = 0;
    for seed in 0..SEEDS {
        let mut r = rng(9_000 + seed);
        let cat = tables(&mut r);
        let plan = random_plan(&mut r, &cat);
        match run(&cat, &plan, Mode::Diff) {
            Ok(rep) if rep.matched() => nonempty += usize::from(rep.row_count > 0),
            Ok(rep) => failures.push(format!("seed {seed}: {:?}\n{}", rep.differential, plan.to_json())),
            Err(e) => failures.push(format!("seed {seed}: {e}\n{}", plan.to_json())),
        }
    }
    assert!(failures.is_empty(), "{} of {SEEDS} plans disagree:\n{}", failures.len(), failures.join("\n"));
    assert!(nonempty > SEEDS as usize / 4, "only {nonempty} plans produced rows");
}

#[test]
fn plans_serialise_losslessly() {
    for seed in 0..SEEDS {
        let mut r = rng(9_500 + seed);
        let cat = tables(&mut r);
        let plan = random_plan(&mut r, &cat);
        assert_eq!(Plan::from_json(&plan.to_json()).unwrap(), plan);
    }
}
