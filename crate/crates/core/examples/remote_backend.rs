//! Embed a caption through an HTTP inference server.
//!
//!     VIDMEM_BACKEND_URL=http://localhost:8000 cargo run --example remote_backend -- "C opens the fridge"

use vidmem::backends::RemoteBackend;
use vidmem::backends::RemoteConfig;

fn main() {
    let Some(config) = RemoteConfig::from_env() else {
        eprintln!("set VIDMEM_BACKEND_URL (and VIDMEM_API_KEY if the server wants one)");
        std::process::exit(2);
    };
    let text = std::env::args().nth(1).unwrap_or_else(|| "C opens the fridge".into());
    let suite = RemoteBackend::new(config).into_suite();
    match suite.caption_text.embed_text(&text) {
        Ok(e) => println!("{} dims, first values {:?}", e.dim(), &e.values()[..e.dim().min(4)]),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    }
}
