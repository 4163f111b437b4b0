use super::database::{Database, RawRecords};
use super::schema::Schema;

pub(crate) fn recs(headers: &[&str], rows: &[&[&str]]) -> RawRecords {
    RawRecords {
        headers: headers.iter().map(|s| s.to_string()).collect(),
        rows: rows
            .iter()
            .map(|r| r.iter().map(|s| s.to_string()).collect())
            .collect(),
    }
}

/// drivers {d1,d2,d3}, races {c1,c2}, results r1(d1,c1) r2(d1,c2) r3(d2,c1) r4(d3,null).
pub(crate) fn f1_fixture() -> Database {
    let schema = Schema::from_json(
        r#"{"tables": [
        {"name": "drivers", "file": "drivers.csv", "primary_key": "id",
         "columns": [{"name": "id", "kind": "categorical"}, {"name": "age", "kind": "numeric"}]},
        {"name": "races", "file": "races.csv", "primary_key": "id", "time_column": "date",
         "columns": [{"name": "id", "kind": "categorical"}, {"name": "date", "kind": "numeric"}]},
        {"name": "results", "file": "results.csv", "primary_key": "id",
         "foreign_keys": [{"column": "driver", "references_table": "drivers"},
                          {"column": "race", "references_table": "races"}],
         "columns": [{"name": "id", "kind": "categorical"}, {"name": "driver", "kind": "categorical"},
                     {"name": "race", "kind": "categorical"}, {"name": "points", "kind": "numeric"}]}
    ]}"#,
    )
    .unwrap();
    Database::from_records(
        schema,
        vec![
            recs(&["id", "age"], &[&["d1", "30"], &["d2", "25"], &["d3", "40"]]),
            recs(&["id", "date"], &[&["c1", "100"], &["c2", "200"]]),
            recs(
                &["id", "driver", "race", "points"],
                &[
                    &["r1", "d1", "c1", "10"],
                    &["r2", "d1", "c2", "8"],
                    &["r3", "d2", "c1", "6"],
                    &["r4", "d3", "", "1"],
                ],
            ),
        ],
    )
    .unwrap()
}
