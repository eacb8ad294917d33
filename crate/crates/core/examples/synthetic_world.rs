//! Generate a seeded world and show what the synthetic backends will answer from.
//!
//!     cargo run --example synthetic_world -- 7

use vidmem::eval::{gen_world, WorldParams};

fn main() -> vidmem::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let world = gen_world(seed, &WorldParams::default())?;

    println!("seed {seed}: {} segments, {:.0}s", world.n_segments, world.duration_s());
    for (i, e) in world.events.iter().enumerate().take(8) {
        println!("  {i:>2} {}", e.caption());
    }
    println!("objects:");
    for o in &world.objects {
        println!("  {:<12} runs {:?}", o.identity, o.runs());
    }
    for q in &world.mcq_examples {
        println!("mcq: {}  -> {}", q.question, q.options[q.answer]);
    }
    if let Some(ex) = world.nlq_examples.first() {
        println!("nlq: {:?} in [{}, {}]", ex.query, ex.gt_window.start_s, ex.gt_window.end_s);
    }
    Ok(())
}
