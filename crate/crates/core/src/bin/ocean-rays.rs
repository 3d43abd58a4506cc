fn main() {
    std::process::exit(ocean_rays::cli::main_with_args(std::env::args_os()));
}
