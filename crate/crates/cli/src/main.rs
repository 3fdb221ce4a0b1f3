use std::process::ExitCode;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let plan = match perclab_cli::parse(&argv) {
        Ok(plan) => plan,
        Err(e) => e.exit(),
    };
    if perclab_cli::wants_plan_dump(&argv) {
        println!("{}", serde_json::to_string_pretty(&plan).expect("plans serialize"));
        return ExitCode::SUCCESS;
    }
    match perclab_cli::execute(&plan) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let diag = serde_json::json!({ "error": format!("{e:#}") });
            eprintln!("{diag}");
            ExitCode::from(2)
        }
    }
}
