use clap::Parser;

fn main() {
    let cli = aqm_sim::cli::Cli::parse();
    match aqm_sim::cli::run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
