//! Schema-compatible synthetic datasets with planted label rules, so that
//! the best achievable accuracy is known in advance.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::BehaviorRecord;
use crate::seed::{self, Rng as SeedRng};

/// Crime codes of the ten most common incident types.
pub const CRIME_CODES: [&str; 10] = ["510", "330", "624", "740", "310", "440", "354", "745", "230", "420"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum PlantedRule {
    /// label = (occurrence month + area) mod `classes`.
    ModSum { classes: usize },
    /// label = ((occurrence month − 1) mod classes/2) · 2 + area mod 2:
    /// month and area each fix part of the label, so both are needed.
    MonthArea { classes: usize },
    /// Labels drawn uniformly, independent of every attribute.
    Random { classes: usize },
    /// Fraud rows empty the origin account through TRANSFER / CASH_OUT.
    Fraud { fraud_rate: f64 },
    /// Users whose clicks converge to a few favorite answers.
    Converging { answers: usize, favorites: usize },
}

impl PlantedRule {
    pub fn default_for(schema: &str) -> Self {
        match schema {
            "fraud" => PlantedRule::Fraud { fraud_rate: 0.1 },
            "zhihu" => PlantedRule::Converging {
                answers: 300,
                favorites: 3,
            },
            _ => PlantedRule::MonthArea { classes: 10 },
        }
    }
}

pub fn class_token(i: usize, classes: usize) -> String {
    if classes <= CRIME_CODES.len() {
        CRIME_CODES[i].to_string()
    } else {
        format!("c{i}")
    }
}

/// Generates `n` records for a built-in schema. Deterministic in `seed`.
pub fn synth_dataset(schema: &str, seed_value: u64, n: usize, rule: &PlantedRule) -> Result<Vec<BehaviorRecord>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let mut rng = seed::stage_rng(seed_value, "synth");
    match (schema, rule) {
        ("crime", PlantedRule::ModSum { .. } | PlantedRule::MonthArea { .. } | PlantedRule::Random { .. }) => Ok(crime(&mut rng, n, rule)),
        ("crime-vis", PlantedRule::ModSum { .. } | PlantedRule::MonthArea { .. } | PlantedRule::Random { .. }) => {
            let mut recs = crime(&mut rng, n, rule);
            for r in &mut recs {
                let code = r.label.take().unwrap_or_default();
                r.values.insert("Crm Cd".into(), code);
                for col in ["Part 1-2", "Vict Sex", "Status", "Cross Street"] {
                    r.values.remove(col);
                }
            }
            Ok(recs)
        }
        ("fraud", PlantedRule::Fraud { fraud_rate }) => Ok(fraud(&mut rng, n, *fraud_rate)),
        ("zhihu", PlantedRule::Converging { answers, favorites }) => {
            Ok(zhihu(&mut rng, n, (*answers).max(*favorites + 1), (*favorites).max(1)))
        }
        _ => Err(Error::InvalidArgument(format!(
            "no synthetic generator for schema {schema:?} with rule {rule:?}"
        ))),
    }
}

fn date_string(year: i32, month: u32, day: u32) -> String {
    format!("{month:02}/{day:02}/{year} 12:00:00 AM")
}

fn days_in_month(y: i32, m: u32) -> u32 {
    match m {
        2 if (y % 4 == 0 && y % 100 != 0) || y % 400 == 0 => 29,
        2 => 28,
        4 | 6 | 9 | 11 => 30,
        _ => 31,
    }
}

fn add_days(mut y: i32, mut m: u32, mut d: u32, mut days: u32) -> (i32, u32, u32) {
    while days > 0 {
        d += 1;
        if d > days_in_month(y, m) {
            d = 1;
            m += 1;
            if m > 12 {
                m = 1;
                y += 1;
            }
        }
        days -= 1;
    }
    (y, m, d)
}

fn crime(rng: &mut SeedRng, n: usize, rule: &PlantedRule) -> Vec<BehaviorRecord> {
    const PREMIS: [&str; 12] = ["101", "102", "108", "122", "203", "210", "402", "501", "502", "707", "710", "801"];
    const WEAPON: [&str; 8] = ["100", "102", "109", "200", "304", "400", "500", "511"];
    const DESCENT: [&str; 7] = ["W", "B", "H", "A", "O", "X", "K"];
    const SEX: [&str; 3] = ["F", "M", "X"];
    const STATUS: [&str; 4] = ["AA", "IC", "AO", "JA"];
    const STREETS: [&str; 8] = ["MAIN ST", "BROADWAY", "FIGUEROA ST", "SUNSET BL", "VERMONT AV", "WESTERN AV", "OLYMPIC BL", "ALAMEDA ST"];

    (0..n)
        .map(|i| {
            let year = rng.random_range(2020..=2023);
            let month = rng.random_range(1..=12u32);
            let day = rng.random_range(1..=days_in_month(year, month));
            let delay = match rng.random_range(0..10) {
                0..=3 => 0,
                4..=5 => 1,
                6..=7 => rng.random_range(2..=7),
                8 => rng.random_range(8..=30),
                _ => rng.random_range(31..=200),
            };
            let (ry, rm, rd) = add_days(year, month, day, delay);
            let area = rng.random_range(1..=21u32);
            let label = match rule {
                PlantedRule::ModSum { classes } => ((month + area) as usize) % classes.max(&1),
                PlantedRule::MonthArea { classes } => {
                    let half = (classes / 2).max(1);
                    ((month as usize - 1) % half * 2 + area as usize % 2) % classes.max(&1)
                }
                PlantedRule::Random { classes } => rng.random_range(0..*classes.max(&1)),
                _ => unreachable!(),
            };
            let classes = match rule {
                PlantedRule::ModSum { classes } | PlantedRule::MonthArea { classes } | PlantedRule::Random { classes } => {
                    *classes
                }
                _ => unreachable!(),
            };
            let time = rng.random_range(0..24u32) * 100 + rng.random_range(0..60u32);
            let mut r = BehaviorRecord::new(format!("{}", 200_000_000 + i))
                .with("Date Rptd", date_string(ry, rm, rd))
                .with("DATE OCC", date_string(year, month, day))
                .with("TIME OCC", time.to_string())
                .with("AREA", area.to_string())
                .with("Rpt Dist No", format!("{}", area * 100 + rng.random_range(0..12u32)))
                .with("Part 1-2", rng.random_range(1..=2u32).to_string())
                .with("Vict Age", rng.random_range(0..=90u32).to_string())
                .with("Vict Sex", *SEX.choose(rng).unwrap())
                .with("Vict Descent", *DESCENT.choose(rng).unwrap())
                .with("Premis Cd", *PREMIS.choose(rng).unwrap())
                .with("Status", *STATUS.choose(rng).unwrap())
                .with_label(class_token(label, classes));
            if rng.random_bool(0.6) {
                r = r.with("Weapon Used Cd", *WEAPON.choose(rng).unwrap());
            }
            if rng.random_bool(0.3) {
                r = r.with("Cross Street", *STREETS.choose(rng).unwrap());
            }
            r
        })
        .collect()
}

fn log_uniform(rng: &mut SeedRng, lo: f64, hi: f64) -> f64 {
    let x = rng.random_range(lo.ln()..hi.ln()).exp();
    (x * 100.0).round() / 100.0
}

fn fraud(rng: &mut SeedRng, n: usize, fraud_rate: f64) -> Vec<BehaviorRecord> {
    const TYPES: [&str; 5] = ["PAYMENT", "CASH_IN", "DEBIT", "TRANSFER", "CASH_OUT"];
    let customers: Vec<String> = (0..40).map(|i| format!("C{}", 1_000_000 + i * 7919)).collect();
    let merchants: Vec<String> = (0..20).map(|i| format!("M{}", 2_000_000 + i * 104_729)).collect();
    let fmt = |x: f64| format!("{x:.2}");
    (0..n)
        .map(|i| {
            let is_fraud = rng.random_bool(fraud_rate.clamp(0.0, 1.0));
            let step = rng.random_range(1..=48u32);
            let orig = customers.choose(rng).unwrap().clone();
            let mut r = BehaviorRecord::new(format!("row-{}", i + 1))
                .with("step", step.to_string())
                .with("nameOrig", orig);
            if is_fraud {
                let ty = if rng.random_bool(0.5) { "TRANSFER" } else { "CASH_OUT" };
                let amount = log_uniform(rng, 1e5, 1e7);
                r = r
                    .with("type", ty)
                    .with("amount", fmt(amount))
                    .with("oldbalanceOrg", fmt(amount))
                    .with("newbalanceOrig", fmt(0.0))
                    .with("nameDest", customers.choose(rng).unwrap().clone())
                    .with("oldbalanceDest", fmt(0.0))
                    .with("newbalanceDest", fmt(0.0))
                    .with_label("1");
            } else {
                let ty = *TYPES.choose(rng).unwrap();
                let amount = log_uniform(rng, 10.0, 2e5);
                let old = amount + log_uniform(rng, 10.0, 1e6);
                let new = if ty == "CASH_IN" { old + amount } else { old - amount };
                r = r
                    .with("type", ty)
                    .with("amount", fmt(amount))
                    .with("oldbalanceOrg", fmt(old))
                    .with("newbalanceOrig", fmt(new))
                    .with_label("0");
                if ty == "PAYMENT" {
                    // merchants carry no balance information
                    r = r.with("nameDest", merchants.choose(rng).unwrap().clone());
                } else {
                    let dold = log_uniform(rng, 10.0, 1e6);
                    r = r
                        .with("nameDest", customers.choose(rng).unwrap().clone())
                        .with("oldbalanceDest", fmt(dold))
                        .with("newbalanceDest", fmt(dold + amount));
                }
            }
            r
        })
        .collect()
}

pub const ZHIHU_BASE_TS: i64 = 1_546_300_800;

fn zhihu(rng: &mut SeedRng, n: usize, answers: usize, favorites: usize) -> Vec<BehaviorRecord> {
    let users = (n / 60).max(1);
    let topics = 20usize;
    let weights: Vec<f64> = (0..users).map(|_| rng.random_range(1.0..20.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut counts = vec![0usize; users];
    for _ in 0..n {
        let mut x = rng.random_range(0.0..total);
        let mut u = 0;
        while u + 1 < users && x >= weights[u] {
            x -= weights[u];
            u += 1;
        }
        counts[u] += 1;
    }
    let answer_topic: Vec<usize> = (0..answers).map(|_| rng.random_range(0..topics)).collect();
    let answer_likes: Vec<u64> = (0..answers).map(|_| log_uniform(rng, 1.0, 1e5) as u64).collect();

    let mut rows: Vec<(i64, BehaviorRecord)> = Vec::with_capacity(n);
    let mut row = 0usize;
    for (u, &cnt) in counts.iter().enumerate() {
        let favs: Vec<usize> = (0..favorites).map(|_| rng.random_range(0..answers)).collect();
        let gender = ["0", "1", "2"][rng.random_range(0..3)];
        let followers = log_uniform(rng, 1.0, 1e4) as u64;
        let register = ZHIHU_BASE_TS - rng.random_range(0..3 * 365) * 86_400;
        for t in 0..cnt {
            let p_fav = 0.9 * (1.0 - (-(t as f64) / 8.0).exp());
            let answer = if rng.random_bool(p_fav) {
                // skewed toward the first favorite
                let k = if rng.random_bool(0.6) { 0 } else { rng.random_range(0..favorites) };
                favs[k]
            } else {
                rng.random_range(0..answers)
            };
            let imp = ZHIHU_BASE_TS + (u as i64) * 97 + (t as i64) * 3 * 3600;
            let click = if rng.random_bool(0.85) { imp + rng.random_range(1..1800) } else { 0 };
            row += 1;
            let rec = BehaviorRecord::new(format!("imp-{row}"))
                .with("user_id", format!("u{u}"))
                .with("answer_id", format!("a{answer}"))
                .with("impression_ts", imp.to_string())
                .with("click_ts", click.to_string())
                .with("register_ts", register.to_string())
                .with("gender", gender)
                .with("followers", followers.to_string())
                .with("answer_likes", answer_likes[answer].to_string())
                .with("topic", format!("t{}", answer_topic[answer]));
            rows.push((imp, rec));
        }
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.record_id.cmp(&b.1.record_id)));
    rows.into_iter()
        .enumerate()
        .map(|(i, (_, mut r))| {
            r.record_id = format!("imp-{}", i + 1);
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::schema::DatasetSchema;

    #[test]
    fn deterministic() {
        let rule = PlantedRule::ModSum { classes: 10 };
        let a = synth_dataset("crime", 1, 50, &rule).unwrap();
        let b = synth_dataset("crime", 1, 50, &rule).unwrap();
        assert_eq!(a, b);
        let c = synth_dataset("crime", 2, 50, &rule).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn parity_rule_is_a_function_of_month_and_area() {
        let recs = synth_dataset("crime", 1, 300, &PlantedRule::ModSum { classes: 2 }).unwrap();
        let schema = DatasetSchema::builtin("crime").unwrap();
        let month = schema.field_id("Month_OCC").unwrap();
        let area = schema.field_id("AREA").unwrap();
        for r in &recs {
            let t = schema.tokenize(r).unwrap();
            let get = |f: usize| -> u32 { t.tokens.iter().find(|(i, _)| *i == f).unwrap().1.parse().unwrap() };
            let expected = class_token(((get(month) + get(area)) % 2) as usize, 2);
            // the "perfect classifier" reads the rule straight off the tokens
            assert_eq!(r.label.as_deref(), Some(expected.as_str()));
        }
    }

    #[test]
    fn month_area_rule_uses_both_fields() {
        let recs = synth_dataset("crime", 2, 400, &PlantedRule::MonthArea { classes: 10 }).unwrap();
        let schema = DatasetSchema::builtin("crime").unwrap();
        let month = schema.field_id("Month_OCC").unwrap();
        let area = schema.field_id("AREA").unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for r in &recs {
            let t = schema.tokenize(r).unwrap();
            let get = |f: usize| -> usize { t.tokens.iter().find(|(i, _)| *i == f).unwrap().1.parse().unwrap() };
            let expected = class_token((get(month) - 1) % 5 * 2 + get(area) % 2, 10);
            assert_eq!(r.label.as_deref(), Some(expected.as_str()));
            seen.insert(expected);
        }
        assert_eq!(seen.len(), 10);
    }

    #[test]
    fn every_schema_tokenizes() {
        for schema in ["crime", "crime-vis", "fraud", "zhihu"] {
            let recs = synth_dataset(schema, 5, 120, &PlantedRule::default_for(schema)).unwrap();
            assert_eq!(recs.len(), 120);
            let s = DatasetSchema::builtin(schema).unwrap();
            let cols = s.columns();
            for r in &recs {
                s.tokenize(r).unwrap();
                assert!(r.values.keys().all(|k| cols.contains(&k.as_str())), "{schema}: {r:?}");
            }
        }
    }

    #[test]
    fn fraud_rows_empty_the_origin() {
        let recs = synth_dataset("fraud", 3, 500, &PlantedRule::Fraud { fraud_rate: 0.2 }).unwrap();
        let frauds: Vec<_> = recs.iter().filter(|r| r.label.as_deref() == Some("1")).collect();
        assert!(!frauds.is_empty());
        for r in frauds {
            assert_eq!(r.get("newbalanceOrig"), Some("0.00"));
            assert!(matches!(r.get("type"), Some("TRANSFER") | Some("CASH_OUT")));
        }
    }

    #[test]
    fn crime_sample_is_fast() {
        let t = std::time::Instant::now();
        synth_dataset("crime", 1, 2000, &PlantedRule::ModSum { classes: 10 }).unwrap();
        assert!(t.elapsed().as_secs_f64() < 5.0);
    }

    #[test]
    fn wrong_rule_for_schema() {
        assert!(synth_dataset("fraud", 1, 10, &PlantedRule::ModSum { classes: 2 }).is_err());
        assert!(synth_dataset("crime", 1, 0, &PlantedRule::ModSum { classes: 2 }).is_err());
    }
}
