//! Multiple-choice accuracy with scripted counting agents, clean and noisy crops.

use vidmem::agent::{AgentSettings, PromptTemplate, TaskKind};
use vidmem::backends::{SyntheticBackend, SyntheticConfig};
use vidmem::eval::{eval_mcq, gen_world, world_media, WorldParams};
use vidmem::object::ReidParams;
use vidmem::MemoryBundle;

fn main() -> vidmem::Result<()> {
    let world = gen_world(21, &WorldParams { n_objects: 10, n_mcq: 6, ..WorldParams::default() })?;
    for noise in [0.0, 0.6, 1.2] {
        let config = SyntheticConfig { clip_noise: noise, dino_noise: noise, ..SyntheticConfig::default() };
        let backend = SyntheticBackend::new(world.clone().into(), config);
        let video = backend.video_source();
        let suite = backend.into_suite();
        let (bundle, built) = MemoryBundle::build(&world_media(&world), &video, &suite, &ReidParams::default())?;
        let report = eval_mcq(
            &bundle,
            &suite,
            &world,
            &world.mcq_examples,
            None,
            &AgentSettings::default(),
            (&PromptTemplate::builtin(TaskKind::Mcq), &PromptTemplate::memory_agent()),
        )?;
        println!(
            "noise {noise:.1}: {} tracks -> {} objects (truth {}), accuracy {:.3}",
            built.tracks.len(),
            bundle.objects.len(),
            world.objects.len(),
            report.accuracy
        );
    }
    Ok(())
}
