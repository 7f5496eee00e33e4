fn main() {
    std::process::exit(woodbury_ls_cli::cli_main(std::env::args_os()));
}
