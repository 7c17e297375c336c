#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "stokesls/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return stokesls::cli::run(stokesls::cli::parse_args(args));
  } catch (const stokesls::cli::UsageError& e) {
    (e.code == 0 ? std::cout : std::cerr) << e.what() << "\n";
    return e.code;
  } catch (const stokesls::cli::IoError& e) {
    std::cerr << "stokesls: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "stokesls: " << e.what() << "\n";
    return 3;
  }
}
