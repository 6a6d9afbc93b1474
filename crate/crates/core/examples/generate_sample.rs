//! Writes the bundled place-name sample used by the examples and tests.
//!
//! ```text
//! cargo run --example generate_sample -- [records] [seed] [path]
//! ```

use std::env;
use std::path::PathBuf;

use gramlink::harness::synth::synthetic_places;
use gramlink::records::write_dataset;

fn main() -> gramlink::Result<()> {
    let mut args = env::args().skip(1);
    let n: usize = args.next().map_or(2000, |s| s.parse().expect("record count"));
    let seed: u64 = args.next().map_or(2024, |s| s.parse().expect("seed"));
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/places_2000.txt"));

    let ds = synthetic_places(n, seed);
    write_dataset(&path, &ds)?;
    println!(
        "{} records, average length {:.2} -> {}",
        ds.len(),
        ds.average_length(),
        path.display()
    );
    Ok(())
}
