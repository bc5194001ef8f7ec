//! Writes a pair in both encodings, reads it back and runs the CLI on it.

use cdft::density::Tolerances;
use cdft::fixtures::Sampler;
use cdft::io::{load_pair, save_pair, Encoding};

fn main() {
    let dir = std::env::temp_dir().join(format!("cdft-field-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let g = Sampler::default_grid(12);
    let p = Sampler::new(1).pair(&g, 1, 2);

    let mut manifests = Vec::new();
    for (name, enc) in [("csv", Encoding::Csv), ("bin", Encoding::Binary)] {
        let manifest = save_pair(&dir, name, &p, 1, &Tolerances::default(), enc).unwrap();
        let (q, m) = load_pair(&manifest).unwrap();
        let size: u64 = std::fs::read_dir(&dir)
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().starts_with(name))
            .map(|e| e.metadata().unwrap().len())
            .sum();
        println!(
            "{name}: {} bytes, format {}, bit-exact {}",
            size,
            m.format,
            q.rho.values().iter().zip(p.rho.values()).all(|(a, b)| a.to_bits() == b.to_bits())
        );
        manifests.push(manifest);
    }

    let report = dir.join("report.json");
    let code = cdft::cli::run([
        "validate".to_string(),
        "--input".into(),
        manifests[1].display().to_string(),
        "--output".into(),
        report.display().to_string(),
    ]);
    println!("cdft validate exited with {code}; report at {}", report.display());
}
