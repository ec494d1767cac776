// Copyright 2026 The relrot Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "cli_context.hpp"

int main(int argc, char** argv) {
  CLI::App app{"relrot: relative rotation estimation between perspective views"};
  app.require_subcommand(1);
  relrot::cli::register_dataset(app);
  relrot::cli::register_model_commands(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::RuntimeError& e) {
    return e.get_exit_code();
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const relrot::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
