mod support;

use std::process::Command;

use support::fixtures;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cipherlang"))
}

#[test]
fn cipher_subcommand_round_trips() {
    let out = bin().args(["cipher", "--language", "spa", "--seed", "7", "La casa es grande."]).output().unwrap();
    assert!(out.status.success());
    let ciphered = String::from_utf8(out.stdout).unwrap();
    let back = bin().args(["cipher", "--language", "spa", "--seed", "7", "--decipher", ciphered.trim()]).output().unwrap();
    assert_eq!(String::from_utf8(back.stdout).unwrap().trim(), "La casa es grande.");
}

#[test]
fn dry_run_writes_prompts_without_a_model() {
    let cfg = fixtures().join("configs/spa_base.toml");
    let out = bin()
        .args(["--config", cfg.to_str().unwrap(), "--dry-run", "run-mt"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().lines().any(|l| l.ends_with("spa.LELemMS.to-english.jsonl")));
}

#[test]
fn config_errors_exit_with_code_two() {
    let out = bin().args(["run-mt"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["--config", "/nonexistent.toml", "run-mt"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
