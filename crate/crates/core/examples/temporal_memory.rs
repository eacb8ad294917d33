//! Build the temporal memory of a synthetic video, then use the two caption tools.

use vidmem::eval::{gen_world, world_media, world_to_suite, WorldParams};
use vidmem::backends::SyntheticConfig;
use vidmem::temporal::{build_temporal_memory, EnsembleWeights};

fn main() -> vidmem::Result<()> {
    let world = gen_world(3, &WorldParams::default())?;
    let suite = world_to_suite(&world, SyntheticConfig::default());
    let mem = build_temporal_memory(&world_media(&world), &suite)?;
    println!("{} segments of {}s", mem.len(), mem.segment_duration_s());

    for (i, caption) in mem.caption_retrieval(10, 14)? {
        println!("  {i}: {caption}");
    }
    // More than 15 captions in one call is refused.
    println!("(0, 15) -> {}", mem.caption_retrieval(0, 15).unwrap_err());

    let query = &world.nlq_examples[0].query;
    for ratio in ["18:11", "7:8"] {
        let w = EnsembleWeights::parse(ratio)?;
        println!("{query:?} with video:text {ratio} (w_video {:.5}, w_text {:.5})", w.w_video, w.w_text);
        for hit in mem.segment_localization(query, &w, &suite, 5)? {
            println!(
                "  segment {:>2}  score {:.4} = {:.4}*{:.4} + {:.4}*{:.4}",
                hit.segment.index, hit.score, w.w_text, hit.text_score, w.w_video, hit.video_score
            );
        }
    }
    Ok(())
}
