//! Pairwise re-ID similarity and greedy grouping of tracking IDs.

use vidmem::backends::synthetic::salted_text_embed;
use vidmem::object::reid::similarity_from_cosines;
use vidmem::object::{pair_similarity, reid_group, ReidParams, TrackingFeature};

fn track(id: u64, who: &str, frames: std::ops::Range<u64>) -> vidmem::Result<TrackingFeature> {
    let clip = salted_text_embed("clip", who, 64)?;
    let dino = salted_text_embed("dino", who, 64)?;
    TrackingFeature::new(id, clip, dino, frames.collect(), "dog")
}

fn main() -> vidmem::Result<()> {
    let p = ReidParams::default();
    for (c, d) in [(1.0, 1.0), (0.925, 0.5), (0.0, 0.0)] {
        let s = similarity_from_cosines(c, d, &p);
        println!("cos ({c}, {d}) -> clip {:.6} dino {:.6} sim {:.10}", s.clip, s.dino, s.sim);
    }

    // Dog 1 leaves and comes back; dog 2 is on screen at the same time as dog 1.
    let tracks = vec![
        track(1, "dog 1", 0..60)?,
        track(2, "dog 2", 30..90)?,
        track(3, "dog 1", 120..180)?,
    ];
    let s = pair_similarity(&tracks[0], &tracks[1], &p).unwrap();
    println!("dog 1 vs dog 2: sim {:.3}", s.sim);
    for g in reid_group(&tracks, &p)? {
        println!("object {} <- tracks {:?}", g.object_id, g.members);
    }
    Ok(())
}
