// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(adderopt_cli::run(std::env::args().collect()));
}
