//! Every golden query runs through our evaluator and through SQLite over the
//! same rows; results must agree row for row.

mod support;

use support::sql::{reference, sqlite, world_rows, GOLDEN};
use vidmem::object::sql::execute;
use vidmem::object::Value;
use vidmem::replay::case4;

#[test]
fn golden_queries_match_sqlite() {
    let rows = world_rows();
    assert!(rows.len() > 30, "world too small to be interesting");
    let db = sqlite(&rows);
    for sql in GOLDEN {
        let ours = execute(sql, &rows).unwrap_or_else(|e| panic!("{sql}: {e}"));
        assert_eq!(ours.rows, reference(&db, sql), "{sql}");
    }
}

#[test]
fn case4_elephants_count_two() {
    let case = case4();
    let bundle = case.build_bundle(&case.suite()).unwrap();
    let sql = "SELECT COUNT(DISTINCT object_id) FROM objects WHERE category = 'elephant'";
    let ours = bundle.objects.execute_query(sql).unwrap();
    assert_eq!(ours.rows, vec![vec![Value::Int(2)]]);
    assert_eq!(ours.rows, reference(&sqlite(bundle.objects.rows()), sql));
}
