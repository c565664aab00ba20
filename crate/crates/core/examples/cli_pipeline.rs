//! The command-line workflow driven from Rust: generate, train, predict and evaluate
//! in a temporary directory. Equivalent shell:
//!
//! ```text
//! vfm generate --out well.csv --seed 1
//! vfm train --data well.csv --out model.json --hidden 50
//! vfm predict --data well.csv --checkpoint model.json --out pred.csv --test-only
//! vfm evaluate --data well.csv --checkpoint model.json --out report.json
//! ```

use bayes_vfm::cli::main_with_args;

fn main() {
    let dir = std::env::temp_dir().join("bayes_vfm_cli_example");
    let p = |f: &str| dir.join(f).to_string_lossy().into_owned();
    let steps: [Vec<String>; 4] = [
        vec!["generate".into(), "--out".into(), p("well.csv"), "--seed".into(), "1".into()],
        vec!["train".into(), "--data".into(), p("well.csv"), "--out".into(), p("model.json"), "--hidden".into(), "50".into()],
        vec!["predict".into(), "--data".into(), p("well.csv"), "--checkpoint".into(), p("model.json"), "--out".into(), p("pred.csv"), "--test-only".into()],
        vec!["evaluate".into(), "--data".into(), p("well.csv"), "--checkpoint".into(), p("model.json"), "--out".into(), p("report.json")],
    ];
    for args in steps {
        println!("vfm {}", args.join(" "));
        let code = main_with_args(std::iter::once("vfm".to_string()).chain(args));
        if code != 0 {
            std::process::exit(code);
        }
    }
    let mut files: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    println!("\noutputs in {}:", dir.display());
    for f in files {
        println!("  {}", f.to_string_lossy());
    }
}
