//! The SQL subset on its own, over hand-written occurrence rows.

use vidmem::object::sql::{execute, parse};
use vidmem::object::OccurrenceRow;

fn main() {
    let rows: Vec<OccurrenceRow> = [(0, "elephant", 0), (0, "elephant", 1), (1, "elephant", 1), (2, "dog", 3)]
        .into_iter()
        .map(|(id, c, s)| OccurrenceRow { object_id: id, category: c.into(), segment_index: s })
        .collect();

    for sql in [
        "SELECT COUNT(DISTINCT object_id) FROM objects WHERE category = 'elephant'",
        "SELECT segment_index, COUNT(*) FROM objects GROUP BY segment_index ORDER BY segment_index DESC",
        "SELECT * FROM objects WHERE category IN ('dog') OR segment_index >= 1 LIMIT 2",
        "SELECT object_id FROM objects WHERE colour = 'grey'",
        "SELECT object_id FROM objects WHERE category LIKE 'ele%'",
    ] {
        println!("> {sql}");
        match execute(sql, &rows) {
            Ok(r) => println!("{}\n", r.render()),
            Err(e) => println!("error: {e}\n"),
        }
    }
    println!("{:#?}", parse("SELECT MAX(segment_index) FROM objects WHERE NOT object_id = 1").unwrap());
}
