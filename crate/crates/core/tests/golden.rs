//! Reports for the canonical specs compared byte for byte against checked-in
//! files. Set `RELFIX_BLESS=1` to rewrite them.

use std::path::PathBuf;

use relfix::workbench::{canonical_specs, cmd_relate, cmd_solve, Method, Overrides};

fn golden(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "tests", "golden", name].iter().collect()
}

fn compare(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("RELFIX_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(expected == actual, "{name} differs from its golden file");
}

#[test]
fn canonical_reports_match() {
    for (name, text) in canonical_specs() {
        let relate = cmd_relate(text, Method::All, &Overrides::default());
        assert_eq!(relate.exit_code(), 0);
        compare(&format!("{name}.relate.json"), &relate.to_json());
        let (solve, _) = cmd_solve(text, &Overrides::default());
        assert_eq!(solve.exit_code(), 0);
        compare(&format!("{name}.solve.json"), &solve.to_json());
    }
}

#[test]
fn reports_are_reproducible() {
    for (_, text) in canonical_specs() {
        let a = cmd_relate(text, Method::All, &Overrides::default()).to_json();
        let b = cmd_relate(text, Method::All, &Overrides::default()).to_json();
        assert_eq!(a, b);
    }
}
