//! Golden SQL queries and an SQLite reference over the same rows.

use std::sync::Arc;

use rusqlite::types::ValueRef;
use rusqlite::Connection;
use vidmem::backends::{SyntheticBackend, SyntheticConfig};
use vidmem::eval::{gen_world, WorldParams};
use vidmem::object::{object_track_reid, FrameMapping, OccurrenceRow, ReidParams, Value};

pub const GOLDEN: [&str; 30] = [
    "SELECT COUNT(*) FROM objects",
    "SELECT COUNT(DISTINCT object_id) FROM objects",
    "SELECT COUNT(DISTINCT category) FROM objects",
    "SELECT COUNT(DISTINCT segment_index) FROM objects",
    "SELECT * FROM objects",
    "SELECT object_id, segment_index FROM objects WHERE category = 'bowl'",
    "SELECT COUNT(DISTINCT object_id) FROM objects WHERE category = 'phone'",
    "SELECT category, COUNT(DISTINCT object_id) FROM objects GROUP BY category",
    "SELECT category, COUNT(*) FROM objects GROUP BY category ORDER BY category DESC",
    "SELECT object_id, COUNT(*) FROM objects GROUP BY object_id ORDER BY object_id",
    "SELECT object_id, MIN(segment_index), MAX(segment_index) FROM objects GROUP BY object_id",
    "SELECT segment_index, COUNT(DISTINCT object_id) FROM objects GROUP BY segment_index ORDER BY segment_index DESC",
    "SELECT segment_index, COUNT(*) FROM objects GROUP BY segment_index LIMIT 5",
    "SELECT MIN(segment_index), MAX(segment_index) FROM objects WHERE object_id = 3",
    "SELECT MIN(category), MAX(category) FROM objects",
    "SELECT object_id FROM objects WHERE segment_index IN (5, 6, 7)",
    "SELECT * FROM objects WHERE category IN ('cup', 'dog', 'box')",
    "SELECT * FROM objects WHERE NOT category IN ('phone', 'bowl')",
    "SELECT * FROM objects WHERE object_id = 2 OR object_id = 5",
    "SELECT * FROM objects WHERE segment_index >= 10 AND segment_index < 14",
    "SELECT * FROM objects WHERE (category = 'bowl' OR category = 'cup') AND segment_index <= 9",
    "SELECT * FROM objects WHERE category = 'bowl' OR category = 'cup' AND segment_index <= 9",
    "SELECT * FROM objects WHERE object_id != 0 AND NOT segment_index > 8",
    "SELECT * FROM objects WHERE category <> 'phone' LIMIT 4",
    "SELECT * FROM objects ORDER BY object_id DESC LIMIT 7",
    "SELECT object_id, segment_index FROM objects WHERE object_id = 6 ORDER BY segment_index DESC",
    "SELECT category FROM objects WHERE segment_index = 12 ORDER BY category",
    "SELECT COUNT(*) FROM objects WHERE category = 'giraffe'",
    "SELECT MAX(segment_index) FROM objects WHERE category = 'giraffe'",
    "select count(distinct OBJECT_ID) from OBJECTS where Category = 'bowl' limit 0;",
];

pub fn world_rows() -> Vec<OccurrenceRow> {
    let world = gen_world(11, &WorldParams { n_objects: 8, ..WorldParams::default() }).unwrap();
    let backend = SyntheticBackend::new(Arc::new(world.clone()), SyntheticConfig::default());
    let video = backend.video_source();
    let suite = backend.into_suite();
    let mapping = FrameMapping {
        fps: world.fps,
        segment_duration_s: world.segment_duration_s,
        n_segments: world.n_segments,
    };
    let built = object_track_reid(&video, &suite, &mapping, &ReidParams::default()).unwrap();
    built.memory.rows().to_vec()
}

pub fn sqlite(rows: &[OccurrenceRow]) -> Connection {
    let db = Connection::open_in_memory().unwrap();
    db.execute_batch("CREATE TABLE objects (object_id INTEGER, category TEXT, segment_index INTEGER)")
        .unwrap();
    let mut insert = db
        .prepare("INSERT INTO objects VALUES (?1, ?2, ?3)")
        .unwrap();
    for r in rows {
        insert
            .execute(rusqlite::params![r.object_id, r.category, r.segment_index])
            .unwrap();
    }
    drop(insert);
    db
}

pub fn reference(db: &Connection, sql: &str) -> Vec<Vec<Value>> {
    let mut stmt = db.prepare(sql).unwrap();
    let n = stmt.column_count();
    stmt.query_map([], |row| {
        (0..n)
            .map(|i| {
                Ok(match row.get_ref(i)? {
                    ValueRef::Null => Value::Null,
                    ValueRef::Integer(v) => Value::Int(v),
                    ValueRef::Text(t) => Value::Text(String::from_utf8(t.to_vec()).unwrap()),
                    other => panic!("unexpected sqlite value {other:?}"),
                })
            })
            .collect()
    })
    .unwrap()
    .map(Result::unwrap)
    .collect()
}
