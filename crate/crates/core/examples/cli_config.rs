//! Drives the batch front end from a TOML file, as the binary would.

use isocurv::cli::run;

const CONFIG: &str = r#"
grid = "4"
t_range = "-0.5:0.5:11"
format = "structured"

[chart]
kind = "rotational_horosphere"
b = 2.0
n = 3

[tolerances]
transport = 1e-6
"#;

fn main() {
    let dir = std::env::temp_dir().join(format!("isocurv-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let config = dir.join("run.toml");
    let csv = dir.join("curves.csv");
    std::fs::write(&config, CONFIG).unwrap();

    let code = run([
        "isocurv".as_ref(),
        "parallel".as_ref(),
        "--config".as_ref(),
        config.as_os_str(),
        "--csv".as_ref(),
        csv.as_os_str(),
    ]);
    println!("exit code {code}");
    let rows = std::fs::read_to_string(&csv).unwrap_or_default();
    println!("{} csv rows, first: {:?}", rows.lines().count(), rows.lines().nth(1));
    std::fs::remove_dir_all(&dir).ok();
}
