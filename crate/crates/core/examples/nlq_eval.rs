//! Recall at IoU 0.3 / 0.5 for top-1 and top-5 localization over generated queries.

use vidmem::eval::{eval_nlq, gen_world, world_media, world_to_suite, WorldParams};
use vidmem::backends::SyntheticConfig;
use vidmem::object::ReidParams;
use vidmem::temporal::EnsembleWeights;
use vidmem::MemoryBundle;

fn main() -> vidmem::Result<()> {
    let world = gen_world(5, &WorldParams { n_segments: 120, n_nlq: 40, ..WorldParams::default() })?;
    let suite = world_to_suite(&world, SyntheticConfig::default());
    let video = vidmem::backends::SyntheticBackend::new(world.clone().into(), SyntheticConfig::default()).video_source();
    let (bundle, _) = MemoryBundle::build(&world_media(&world), &video, &suite, &ReidParams::default())?;

    for (name, w) in [
        ("18:11", EnsembleWeights::lavila_viclip()),
        ("text only", EnsembleWeights::text_only()),
        ("video only", EnsembleWeights::video_only()),
    ] {
        let r = eval_nlq(&bundle, &suite, &world.nlq_examples, &w, 5, 0.0)?.recall;
        println!(
            "{name:<10}  R1@0.3 {:.3}  R1@0.5 {:.3}  R5@0.3 {:.3}  R5@0.5 {:.3}  (n={})",
            r.r1_03, r.r1_05, r.r5_03, r.r5_05, r.n
        );
    }
    Ok(())
}
