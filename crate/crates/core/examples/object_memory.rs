//! Object memory: track, re-identify, then query with SQL and free text.

use vidmem::backends::SyntheticBackend;
use vidmem::eval::{gen_world, WorldParams};
use vidmem::object::{object_track_reid, FrameMapping, ReidParams};
use vidmem::backends::SyntheticConfig;
use std::sync::Arc;

fn main() -> vidmem::Result<()> {
    let world = gen_world(11, &WorldParams { n_objects: 8, ..WorldParams::default() })?;
    let backend = SyntheticBackend::new(Arc::new(world.clone()), SyntheticConfig::default());
    let video = backend.video_source();
    let suite = backend.into_suite();
    let mapping = FrameMapping {
        fps: world.fps,
        segment_duration_s: world.segment_duration_s,
        n_segments: world.n_segments,
    };
    let built = object_track_reid(&video, &suite, &mapping, &ReidParams::default())?;
    println!("{} tracks -> {} objects", built.tracks.len(), built.memory.len());

    for sql in [
        "SELECT category, COUNT(DISTINCT object_id) FROM objects GROUP BY category",
        "SELECT object_id, MIN(segment_index), MAX(segment_index) FROM objects GROUP BY object_id",
        "SELECT DISTINCT category FROM objects",
    ] {
        println!("\n> {sql}");
        match built.memory.execute_query(sql) {
            Ok(r) => println!("{}", r.render()),
            Err(e) => println!("error: {e}"),
        }
    }

    let what = &world.objects[0].category;
    println!("\nlooks like {what:?}:");
    for (id, score) in built.memory.open_vocabulary_retrieval(what, &suite, 0.5, 5)? {
        println!("  object {id} ({:.3})", score);
    }
    Ok(())
}
