//! The command-line pipeline driven in-process: cross sections to CSV,
//! then a scan and an optimization that read the table back.
//!
//! ```sh
//! cargo run --release --example cli_pipeline
//! ```

use hestar::cli::run;

fn main() {
    let dir = std::env::temp_dir().join("hestar-cli-pipeline");
    std::fs::create_dir_all(&dir).expect("create output directory");
    let out = dir.to_str().unwrap();
    let table = dir.join("xs.csv");
    let table = table.to_str().unwrap();

    let steps: [&[&str]; 4] = [
        &["potential", "validate", "--system", "model-A", "--out", out],
        &["xs", "--temps-k", "1e-3:1e-2:3", "--out", out],
        &["scan", "--table", table, "--temps-k", "1e-3", "--points", "16", "--out", out],
        &["optimize", "--table", table, "--temps-k", "1e-2", "--objective", "ratio", "--sense", "max", "--seeds", "16", "--out", out],
    ];
    for args in steps {
        let code = run(std::iter::once("hestar").chain(args.iter().copied()));
        println!("hestar {} -> exit {code}", args.join(" "));
        if code != 0 {
            std::process::exit(code);
        }
    }
    for entry in std::fs::read_dir(&dir).unwrap().flatten() {
        println!("  {}", entry.path().display());
    }
}
