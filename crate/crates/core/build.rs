use std::process::Command;

fn main() {
    println!("cargo:rerun-if-env-changed=MAGNON_GIT_REV");
    for f in ["../../.git/HEAD", "../../.git/index"] {
        if std::path::Path::new(f).exists() {
            println!("cargo:rerun-if-changed={f}");
        }
    }
    if std::env::var_os("MAGNON_GIT_REV").is_some() {
        return;
    }
    let rev = Command::new("git")
        .args(["describe", "--always", "--dirty", "--abbrev=12"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok());
    if let Some(rev) = rev.map(|r| r.trim().to_string()).filter(|r| !r.is_empty()) {
        println!("cargo:rustc-env=MAGNON_GIT_REV={rev}");
    }
}
