//! Save a memory bundle, load it back, and see a damaged header get rejected.

use vidmem::eval::{gen_world, world_media, world_to_suite, WorldParams};
use vidmem::backends::{SyntheticBackend, SyntheticConfig};
use vidmem::object::ReidParams;
use vidmem::store::CAPTION_EMB;
use vidmem::MemoryBundle;

fn main() -> vidmem::Result<()> {
    let world = gen_world(9, &WorldParams::default())?;
    let suite = world_to_suite(&world, SyntheticConfig::default());
    let video = SyntheticBackend::new(world.clone().into(), SyntheticConfig::default()).video_source();
    let (bundle, _) = MemoryBundle::build(&world_media(&world), &video, &suite, &ReidParams::default())?;

    let dir = std::env::temp_dir().join(format!("vidmem-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    bundle.save(&dir)?;
    for entry in std::fs::read_dir(&dir).expect("listing") {
        let entry = entry.expect("entry");
        println!("{:<18} {:>7} bytes", entry.file_name().to_string_lossy(), entry.metadata().expect("meta").len());
    }

    let loaded = MemoryBundle::load(&dir)?;
    println!("round trip equal at f32 precision: {}", loaded == bundle.to_f32_precision()?);

    let path = dir.join(CAPTION_EMB);
    let mut bytes = std::fs::read(&path).expect("read");
    bytes[0] ^= 0xFF;
    std::fs::write(&path, bytes).expect("write");
    println!("after flipping a magic byte: {}", MemoryBundle::load(&dir).unwrap_err());
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}
