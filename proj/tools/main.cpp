#include "cli.hpp"

#include <csignal>
#include <iostream>

namespace {
std::atomic<bool> interrupted{false};
extern "C" void on_signal(int) { interrupted = true; }
}  // namespace

int main(int argc, char** argv)
{
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::signal(SIGPIPE, SIG_IGN);
    return uatrust::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr, &interrupted);
}
