//! Drives the command-line entry point: simulate a dataset, then fit it.
//!
//!     cargo run --release --example cli_session -- [dir]

fn main() {
    let dir = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("sicop_session"));
    let out = dir.to_str().expect("utf-8 path");
    let data = format!("{out}/data");
    let fit = format!("{out}/fit");

    let code = sicopula::cli::run(["sicop", "simulate", "--n", "800", "--seed", "2", "--out", &data]);
    assert_eq!(code, 0, "simulate failed");
    let input = format!("{data}/dataset.csv");
    let code = sicopula::cli::run([
        "sicop", "fit", "--input", &input, "--x-cols", "x1,x2", "--z-cols", "z1,z2", "--out", &fit,
    ]);
    assert_eq!(code, 0, "fit failed");
    print!("{}", std::fs::read_to_string(format!("{fit}/fit_summary.txt")).expect("summary"));
}
