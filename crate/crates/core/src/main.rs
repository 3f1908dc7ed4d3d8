fn main() {
    std::process::exit(hawkes_mdl::cli::dispatch(std::env::args_os()));
}
