use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::BehaviorRecord;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub user: String,
    pub item: String,
    pub impression_ts: i64,
    /// `None` for an impression without click.
    pub click_ts: Option<i64>,
    /// Position in the source log; breaks timestamp ties.
    pub seq: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct InteractionLog {
    events: Vec<Interaction>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    user: String,
    item: String,
    impression_ts: i64,
    click_ts: i64,
}

impl InteractionLog {
    pub fn new(mut events: Vec<Interaction>) -> Result<Self> {
        for e in &events {
            if let Some(c) = e.click_ts {
                if c < e.impression_ts {
                    return Err(Error::InvalidArgument(format!(
                        "click at {c} precedes impression at {} ({} / {})",
                        e.impression_ts, e.user, e.item
                    )));
                }
            }
        }
        events.sort_by(|a, b| {
            (&a.user, a.click_ts.unwrap_or(a.impression_ts), a.seq).cmp(&(
                &b.user,
                b.click_ts.unwrap_or(b.impression_ts),
                b.seq,
            ))
        });
        Ok(Self { events })
    }

    /// Reads raw columns from records; a click timestamp of 0 or blank
    /// means no click.
    pub fn from_records(
        records: &[BehaviorRecord],
        user_col: &str,
        item_col: &str,
        impression_col: &str,
        click_col: &str,
    ) -> Result<Self> {
        let mut events = Vec::with_capacity(records.len());
        for (seq, r) in records.iter().enumerate() {
            let get = |c: &str| {
                r.get(c).ok_or_else(|| Error::MissingValue {
                    field: format!("{c} in {}", r.record_id),
                })
            };
            let ts = |c: &str| -> Result<i64> {
                get(c)?
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("{c} of {} is not a timestamp", r.record_id)))
            };
            let click = match r.get(click_col) {
                None => None,
                Some(_) => Some(ts(click_col)?).filter(|&c| c != 0),
            };
            events.push(Interaction {
                user: get(user_col)?.to_string(),
                item: get(item_col)?.to_string(),
                impression_ts: ts(impression_col)?,
                click_ts: click,
                seq,
            });
        }
        Self::new(events)
    }

    pub fn from_zhihu(records: &[BehaviorRecord]) -> Result<Self> {
        Self::from_records(records, "user_id", "answer_id", "impression_ts", "click_ts")
    }

    pub fn events(&self) -> &[Interaction] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Clicked items per user in click order.
    pub fn click_histories(&self) -> BTreeMap<String, Vec<String>> {
        let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for e in &self.events {
            if e.click_ts.is_some() {
                out.entry(e.user.clone()).or_default().push(e.item.clone());
            }
        }
        out
    }

    /// Clicked events per user in click order.
    pub fn clicks_by_user(&self) -> BTreeMap<&str, Vec<&Interaction>> {
        let mut out: BTreeMap<&str, Vec<&Interaction>> = BTreeMap::new();
        for e in &self.events {
            if e.click_ts.is_some() {
                out.entry(e.user.as_str()).or_default().push(e);
            }
        }
        out
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let mut events = Vec::new();
        for (seq, row) in rdr.deserialize::<CsvRow>().enumerate() {
            let row = row.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            events.push(Interaction {
                user: row.user,
                item: row.item,
                impression_ts: row.impression_ts,
                click_ts: (row.click_ts != 0).then_some(row.click_ts),
                seq,
            });
        }
        Self::new(events)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let mut events: Vec<&Interaction> = self.events.iter().collect();
        events.sort_by_key(|e| e.seq);
        for e in events {
            w.serialize(CsvRow {
                user: e.user.clone(),
                item: e.item.clone(),
                impression_ts: e.impression_ts,
                click_ts: e.click_ts.unwrap_or(0),
            })
            .map_err(|e| Error::Parse(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}
