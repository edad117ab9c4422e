//! Regenerates the bundled sample corpus under `crates/cli/tests/data/corpus`.

use std::fs;
use std::path::Path;

use retinex_cli::{save_image, DatasetManifest, ManifestEntry};
use retinex_core::synthetic::dark_pair;

fn main() -> anyhow::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/corpus");
    fs::create_dir_all(&dir)?;
    let mut entries = Vec::new();
    for seed in 0..10u64 {
        let scale = 0.12 + 0.02 * seed as f64;
        let (low, high) = dark_pair(64, 80, scale, 0.01, 100 + seed);
        let id = format!("scene{seed:02}");
        let low_name = format!("{id}_low.png");
        save_image(&low, &dir.join(&low_name))?;
        // even scenes keep their normal-light reference, odd ones are unpaired
        let high_path = if seed % 2 == 0 {
            let name = format!("{id}_high.png");
            save_image(&high, &dir.join(&name))?;
            Some(name.into())
        } else {
            None
        };
        entries.push(ManifestEntry {
            id,
            low_path: low_name.into(),
            high_path,
        });
    }
    let manifest = DatasetManifest { entries };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    println!("{}", dir.display());
    Ok(())
}
