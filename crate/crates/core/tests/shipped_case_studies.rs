//! The directories under `case-studies/` are the builders' output at
//! default parameters. Run with `PRHL_BLESS=1` to regenerate them.

use std::fs;
use std::path::PathBuf;

use prhl_core::case_studies::{build, files, run_built, Params, NAMES};

fn dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("case-studies")
        .join(name)
}

#[test]
fn shipped_files_match_the_builders() {
    let bless = std::env::var_os("PRHL_BLESS").is_some();
    for name in NAMES {
        let b = build(name, &Params::new()).unwrap();
        let report = run_built(&b).unwrap();
        assert!(report.ok(), "{name}: {}", report.to_json());
        let mut expected = files(&b);
        expected.push((
            "expected.json".into(),
            serde_json::to_string_pretty(&report.summary()).unwrap() + "\n",
        ));
        expected.dedup_by(|a, b| a.0 == b.0);
        for (file, content) in expected {
            let path = dir(name).join(&file);
            if bless {
                fs::create_dir_all(dir(name)).unwrap();
                fs::write(&path, &content).unwrap();
            }
            let shipped =
                fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(
                shipped,
                content,
                "{} is stale; rerun with PRHL_BLESS=1",
                path.display()
            );
        }
    }
}
