#include <vector>

#include "lodom/cli_app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lodom::cli::run_main(args);
}
