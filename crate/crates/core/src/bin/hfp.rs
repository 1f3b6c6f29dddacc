// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(hfp_core::cli::main_with_args(std::env::args_os()));
}
