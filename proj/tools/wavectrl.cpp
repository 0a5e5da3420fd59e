#include "wavectrl/cli.hpp"

int main(int argc, char** argv) {
  return wavectrl::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
