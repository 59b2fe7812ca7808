fn main() {
    let code = friedrichs_cli::run_command(std::env::args(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
