//! Compiles and runs a small C program against the generated header and
//! the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "bdsched.h"

int main(void) {
    const char *json = "{\"packets\":[{\"id\":0,\"release\":0,\"deadline\":1,\"value\":5},"
                       "{\"id\":1,\"release\":0,\"deadline\":1,\"value\":3}]}";
    BdInstance *inst = NULL;
    if (bd_instance_from_json(json, &inst) != BD_STATUS_OK) return 10;
    BdEvaluation *ev = NULL;
    if (bd_evaluate(inst, &ev) != BD_STATUS_OK) return 11;
    char *cp = NULL, *opt = NULL;
    if (bd_evaluation_profits(ev, &cp, &opt, NULL) != BD_STATUS_OK) return 12;
    int32_t within = 0;
    bd_evaluation_within_r(ev, &within);
    printf("%s %s %d %zu\n", cp, opt, within, bd_evaluation_violations(ev));
    bd_string_free(cp);
    bd_string_free(opt);
    bd_evaluation_free(ev);
    bd_instance_free(inst);

    BdInstance *bad = NULL;
    if (bd_instance_from_json("{\"packets\":[{\"id\":0,\"release\":0,\"deadline\":3,\"value\":1}]}", &bad)
        != BD_STATUS_INVALID_INSTANCE) return 13;
    printf("%s\n", bd_last_error());
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<this test>
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/bdsched.h");
    assert!(header.exists(), "header not generated");
    // `cargo test` builds only the rlib; build the static archive too.
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let mut build = Command::new(cargo);
    build.args(["build", "--quiet", "-p", "bdsched-ffi", "--lib"]);
    if target_dir().ends_with("release") {
        build.arg("--release");
    }
    let built = build
        .current_dir(crate_dir)
        .status()
        .unwrap();
    assert!(built.success());
    let lib = target_dir().join("libbdsched_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .args(["-std=c11", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .expect("C compiler available");
    assert!(status.success(), "C compilation failed");

    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("8 8 1 0"));
    assert!(lines.next().unwrap().contains("not 2-bounded"));
}
